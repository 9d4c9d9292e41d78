//! On-disk band index: fixed-size little-endian records
//! `(band_id: u16, band_hash: u64, doc: u64)`, appended per shard and
//! merged with an external sort so that colliding documents end up
//! adjacent.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const BAND_RECORD_LEN: usize = 2 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BandRecord {
    pub band: u16,
    pub hash: u64,
    /// Global document ordinal.
    pub doc: u64,
}

impl BandRecord {
    pub fn to_bytes(self) -> [u8; BAND_RECORD_LEN] {
        let mut b = [0u8; BAND_RECORD_LEN];
        b[..2].copy_from_slice(&self.band.to_le_bytes());
        b[2..10].copy_from_slice(&self.hash.to_le_bytes());
        b[10..].copy_from_slice(&self.doc.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8; BAND_RECORD_LEN]) -> Self {
        BandRecord {
            band: u16::from_le_bytes(b[..2].try_into().unwrap()),
            hash: u64::from_le_bytes(b[2..10].try_into().unwrap()),
            doc: u64::from_le_bytes(b[10..].try_into().unwrap()),
        }
    }
}

pub struct BandIndexWriter {
    path: PathBuf,
    out: BufWriter<File>,
    written: u64,
}

impl BandIndexWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| Error::at_path(path, e))?;
        Ok(BandIndexWriter { path: path.to_path_buf(), out: BufWriter::new(f), written: 0 })
    }

    pub fn append(&mut self, rec: BandRecord) -> Result<()> {
        self.out.write_all(&rec.to_bytes()).map_err(|e| Error::at_path(&self.path, e))?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().map_err(|e| Error::at_path(&self.path, e))?;
        Ok(self.written)
    }
}

/// Streams records from one index file.
pub struct BandIndexReader {
    path: PathBuf,
    inp: BufReader<File>,
}

impl BandIndexReader {
    pub fn open(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::at_path(path, e))?;
        Ok(BandIndexReader { path: path.to_path_buf(), inp: BufReader::new(f) })
    }

    pub fn next_record(&mut self) -> Result<Option<BandRecord>> {
        let mut buf = [0u8; BAND_RECORD_LEN];
        let mut filled = 0;
        while filled < BAND_RECORD_LEN {
            let n = self.inp.read(&mut buf[filled..]).map_err(|e| Error::at_path(&self.path, e))?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        match filled {
            0 => Ok(None),
            BAND_RECORD_LEN => Ok(Some(BandRecord::from_bytes(&buf))),
            _ => Err(Error::data(format!("{}: truncated band record", self.path.display()))),
        }
    }
}

/// Sorts the records of `inputs` into runs of at most `run_len` records
/// under `tmp_dir`, then k-way merges them, calling `on_group` with every
/// maximal group of records sharing `(band, hash)` (docs ascending).
pub fn external_sort_groups(
    inputs: &[PathBuf],
    tmp_dir: &Path,
    run_len: usize,
    mut on_group: impl FnMut(u16, u64, &[u64]),
) -> Result<()> {
    std::fs::create_dir_all(tmp_dir).map_err(|e| Error::at_path(tmp_dir, e))?;
    let run_len = run_len.max(1);
    let mut runs = Vec::new();
    let mut buf: Vec<BandRecord> = Vec::with_capacity(run_len.min(1 << 20));
    let flush = |buf: &mut Vec<BandRecord>, runs: &mut Vec<PathBuf>| -> Result<()> {
        if buf.is_empty() {
            return Ok(());
        }
        buf.sort_unstable();
        let path = tmp_dir.join(format!("run-{:05}.bin", runs.len()));
        let mut w = BandIndexWriter::create(&path)?;
        for r in buf.drain(..) {
            w.append(r)?;
        }
        w.finish()?;
        runs.push(path);
        Ok(())
    };
    for input in inputs {
        let mut r = BandIndexReader::open(input)?;
        while let Some(rec) = r.next_record()? {
            buf.push(rec);
            if buf.len() >= run_len {
                flush(&mut buf, &mut runs)?;
            }
        }
    }
    flush(&mut buf, &mut runs)?;

    let mut readers: Vec<BandIndexReader> = runs.iter().map(|p| BandIndexReader::open(p)).collect::<Result<_>>()?;
    let mut heap = BinaryHeap::new();
    for (i, r) in readers.iter_mut().enumerate() {
        if let Some(rec) = r.next_record()? {
            heap.push(Reverse((rec, i)));
        }
    }
    let mut group: Vec<u64> = Vec::new();
    let mut key: Option<(u16, u64)> = None;
    while let Some(Reverse((rec, i))) = heap.pop() {
        if key != Some((rec.band, rec.hash)) {
            if let Some((b, h)) = key {
                on_group(b, h, &group);
            }
            group.clear();
            key = Some((rec.band, rec.hash));
        }
        if group.last() != Some(&rec.doc) {
            group.push(rec.doc);
        }
        if let Some(next) = readers[i].next_record()? {
            heap.push(Reverse((next, i)));
        }
    }
    if let Some((b, h)) = key {
        on_group(b, h, &group);
    }
    drop(readers);
    for p in runs {
        let _ = std::fs::remove_file(p);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_grouping() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        let mut w = BandIndexWriter::create(&a).unwrap();
        for (band, hash, doc) in [(1u16, 7u64, 3u64), (0, 5, 1), (1, 7, 0)] {
            w.append(BandRecord { band, hash, doc }).unwrap();
        }
        assert_eq!(w.finish().unwrap(), 3);
        let mut w = BandIndexWriter::create(&b).unwrap();
        w.append(BandRecord { band: 0, hash: 5, doc: 9 }).unwrap();
        w.append(BandRecord { band: 2, hash: 1, doc: 4 }).unwrap();
        w.finish().unwrap();
        assert_eq!(std::fs::metadata(&a).unwrap().len(), 3 * BAND_RECORD_LEN as u64);

        let mut groups = Vec::new();
        external_sort_groups(&[a, b], &dir.path().join("tmp"), 2, |band, hash, docs| {
            groups.push((band, hash, docs.to_vec()));
        })
        .unwrap();
        assert_eq!(groups, vec![(0, 5, vec![1, 9]), (1, 7, vec![0, 3]), (2, 1, vec![4])]);
    }

    #[test]
    fn truncated_file_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        std::fs::write(&p, [0u8; 5]).unwrap();
        let mut r = BandIndexReader::open(&p).unwrap();
        assert!(matches!(r.next_record(), Err(Error::Data(_))));
    }
}
