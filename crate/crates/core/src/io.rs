//! JSONL reading and writing, with transparent gzip by file extension.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Opens a file for buffered reading, gunzipping `*.gz`.
pub fn open_read(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::at_path(path, e))?;
    if is_gz(path) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Iterator over JSONL records. Blank lines are skipped; a line that fails to
/// parse is a data error naming the line number.
pub struct JsonlReader<T, R> {
    inner: R,
    line_no: usize,
    buf: String,
    origin: String,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned, R: BufRead> JsonlReader<T, R> {
    pub fn new(inner: R, origin: impl Into<String>) -> Self {
        JsonlReader {
            inner,
            line_no: 0,
            buf: String::new(),
            origin: origin.into(),
            _marker: PhantomData,
        }
    }
}

impl<T: DeserializeOwned> JsonlReader<T, Box<dyn BufRead + Send>> {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(JsonlReader::new(open_read(path)?, path.display().to_string()))
    }
}

impl<T: DeserializeOwned, R: BufRead> Iterator for JsonlReader<T, R> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Result<T>> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            return Some(serde_json::from_str(line).map_err(|e| {
                Error::data(format!("{}:{}: {e}", self.origin, self.line_no))
            }));
        }
    }
}

/// Reads a whole JSONL file into memory.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    JsonlReader::open(path)?.collect()
}

/// Parses JSONL from any reader.
pub fn parse_jsonl<T: DeserializeOwned, R: Read>(reader: R) -> Result<Vec<T>> {
    JsonlReader::new(BufReader::new(reader), "<stream>").collect()
}

/// Writes one JSON object per line. Files are created under a temporary
/// name and only renamed into place by [`JsonlWriter::finish`], so an
/// interrupted run never leaves a plausible-looking partial output.
pub struct JsonlWriter {
    out: Box<dyn Write + Send>,
    tmp: Option<(PathBuf, PathBuf)>,
    written: u64,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::at_path(parent, e))?;
        }
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".partial");
        let tmp = path.with_file_name(tmp_name);
        let file = File::create(&tmp).map_err(|e| Error::at_path(&tmp, e))?;
        let out: Box<dyn Write + Send> = if is_gz(path) {
            Box::new(GzEncoder::new(BufWriter::new(file), Compression::default()))
        } else {
            Box::new(BufWriter::new(file))
        };
        Ok(JsonlWriter {
            out,
            tmp: Some((tmp, path.to_path_buf())),
            written: 0,
        })
    }

    /// A writer over an arbitrary sink (stdout, a `Vec<u8>`); `finish` only
    /// flushes.
    pub fn from_writer(out: Box<dyn Write + Send>) -> Self {
        JsonlWriter {
            out,
            tmp: None,
            written: 0,
        }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush()?;
        // drop the encoder so gzip trailers hit the file before the rename
        let JsonlWriter { out, tmp, written } = self;
        drop(out);
        if let Some((tmp, dest)) = tmp {
            fs::rename(&tmp, &dest).map_err(|e| Error::at_path(&dest, e))?;
        }
        Ok(written)
    }
}

/// Writes a JSON value atomically (temp file + rename).
pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::at_path(parent, e))?;
    }
    let tmp = path.with_extension("json.partial");
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(&tmp, bytes).map_err(|e| Error::at_path(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::at_path(path, e))?;
    Ok(())
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::at_path(path, e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))
}
