//! CSV files exchanged between CLI steps.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pr::PrCurve;
use crate::simulator::{BandwidthLedger, LedgerEntry, Mode, SimilarityRecord, Traffic};
use crate::types::FrameId;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Value { row: usize, msg: String },
}

#[derive(Serialize, Deserialize)]
struct RecordRow {
    query_robot: u8,
    query_frame: u16,
    matched_robot: u8,
    matched_frame: u16,
    score: f64,
    mode: String,
}

pub fn write_records<W: Write>(w: W, records: &[SimilarityRecord]) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(RecordRow {
            query_robot: r.query.robot,
            query_frame: r.query.frame,
            matched_robot: r.matched.robot,
            matched_frame: r.matched.frame,
            score: r.score,
            mode: r.mode.to_string(),
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<SimilarityRecord>, CsvError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<RecordRow>().enumerate() {
        let row = row?;
        let mode = match row.mode.as_str() {
            "centralized" => Mode::Centralized,
            "decentralized" => Mode::Decentralized,
            other => return Err(CsvError::Value { row: i + 1, msg: format!("unknown mode `{other}`") }),
        };
        if !(0.0..=1.0).contains(&row.score) {
            return Err(CsvError::Value { row: i + 1, msg: format!("score {} outside [0, 1]", row.score) });
        }
        out.push(SimilarityRecord {
            query: FrameId::new(row.query_robot, row.query_frame),
            matched: FrameId::new(row.matched_robot, row.matched_frame),
            score: row.score,
            mode,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct LedgerRow {
    query: String,
    kind: String,
    from: u8,
    to: u8,
    bytes: usize,
}

fn parse_frame_id(s: &str) -> Option<FrameId> {
    let (r, f) = s.split_once(':')?;
    Some(FrameId::new(r.parse().ok()?, f.parse().ok()?))
}

/// One row per delivered message: `query,kind,from,to,bytes`, where `query`
/// is `robot:frame` of the querying frame.
pub fn write_ledger<W: Write>(w: W, ledger: &BandwidthLedger) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    for e in ledger.entries() {
        out.serialize(LedgerRow {
            query: e.query.to_string(),
            kind: e.kind.to_string(),
            from: e.from,
            to: e.to,
            bytes: e.bytes,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_ledger<R: Read>(r: R) -> Result<BandwidthLedger, CsvError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut ledger = BandwidthLedger::new();
    for (i, row) in rdr.deserialize::<LedgerRow>().enumerate() {
        let row = row?;
        let query = parse_frame_id(&row.query)
            .ok_or_else(|| CsvError::Value { row: i + 1, msg: format!("bad query id `{}`", row.query) })?;
        let kind: Traffic = row.kind.parse().map_err(|msg| CsvError::Value { row: i + 1, msg })?;
        ledger.record(LedgerEntry { query, kind, from: row.from, to: row.to, bytes: row.bytes });
    }
    Ok(ledger)
}

/// `threshold,precision,recall`, highest threshold first.
pub fn write_pr_curve<W: Write>(w: W, curve: &PrCurve) -> Result<(), CsvError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["threshold", "precision", "recall"])?;
    for p in &curve.points {
        out.write_record([p.threshold.to_string(), p.precision.to_string(), p.recall.to_string()])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
