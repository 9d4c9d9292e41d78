use std::io::{Cursor, Write};

use corpus_forge::ingest::{read_warc_stream, WarcError, WarcRecord};
use corpus_forge_fixtures::warc::{minimal_records, scan_boundaries, serialize, truncated_tail};
use flate2::write::GzEncoder;
use flate2::Compression;

fn parse(bytes: Vec<u8>) -> (Vec<WarcRecord>, Option<WarcError>) {
    let mut recs = Vec::new();
    for r in read_warc_stream(Cursor::new(bytes)).unwrap() {
        match r {
            Ok(rec) => recs.push(rec),
            Err(e) => return (recs, Some(e)),
        }
    }
    (recs, None)
}

#[test]
fn parse_then_write_is_byte_identical() {
    for seed in 0..5 {
        let specs = minimal_records(40, seed);
        let bytes = serialize(&specs);
        let (recs, err) = parse(bytes.clone());
        assert!(err.is_none());
        assert_eq!(recs.len(), specs.len());
        let scan = scan_boundaries(&bytes);
        for ((rec, spec), scanned) in recs.iter().zip(&specs).zip(&scan.records) {
            assert_eq!(rec.headers(), spec.headers().as_slice());
            assert_eq!(rec.payload(), &bytes[scanned.payload.clone()]);
        }
        let rewritten: Vec<u8> = recs.iter().flat_map(WarcRecord::to_bytes).collect();
        assert_eq!(rewritten, bytes, "seed {seed}");
    }
}

#[test]
fn gzip_member_per_record_reads_the_same() {
    let specs = minimal_records(12, 9);
    let mut gz = Vec::new();
    for s in &specs {
        let mut e = GzEncoder::new(Vec::new(), Compression::default());
        e.write_all(&s.to_bytes()).unwrap();
        gz.extend(e.finish().unwrap());
    }
    let (plain, _) = parse(serialize(&specs));
    let (zipped, err) = parse(gz);
    assert!(err.is_none());
    assert_eq!(plain, zipped);
}

#[test]
fn truncated_tail_yields_complete_records_then_signal() {
    let specs = minimal_records(21, 3);
    let (head, tail) = specs.split_at(20);
    let full = tail[0].to_bytes();
    // every cut before the last payload byte
    for keep in [1, 10, 60, full.len() / 2, full.len() - 5] {
        let bytes = truncated_tail(head, &tail[0], keep);
        let scan = scan_boundaries(&bytes);
        assert_eq!(scan.records.len(), 20);
        assert_eq!(scan.truncated_at, Some(serialize(head).len()));
        let (recs, err) = parse(bytes);
        assert_eq!(recs.len(), 20, "keep {keep}");
        match err {
            Some(WarcError::Truncated { records, .. }) => assert_eq!(records, 20),
            other => panic!("keep {keep}: expected truncation, got {other:?}"),
        }
    }
}

#[test]
fn lost_trailer_alone_keeps_the_record() {
    let specs = minimal_records(3, 5);
    let full = specs[2].to_bytes();
    let bytes = truncated_tail(&specs[..2], &specs[2], full.len() - 4);
    let (recs, err) = parse(bytes);
    assert!(err.is_none());
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[2].payload(), specs[2].payload.as_slice());
}
