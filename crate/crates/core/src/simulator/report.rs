use std::collections::BTreeMap;
use std::fmt;

use super::ledger::{BandwidthLedger, Traffic};

/// Size of an opaque 512-byte global image descriptor sent to one robot,
/// used as a per-hop reference line.
pub const OPAQUE_DESCRIPTOR_BYTES: usize = 512;

/// Mean query size measured on a full office-desk RGB-D sequence with ten
/// robots. Desk-scale synthetic runs are compared against it, not held to it.
pub const REFERENCE_MEAN_QUERY_BYTES: f64 = 490.0;

#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthReport {
    pub hop_count: usize,
    pub messages: usize,
    pub total_bytes: usize,
    pub by_kind: BTreeMap<Traffic, usize>,
    /// Queries that sent at least one message.
    pub queries: usize,
    pub mean_query_bytes: f64,
    pub max_query_bytes: usize,
    /// Cost of relaying one opaque descriptor over `hop_count` hops.
    pub opaque_descriptor_bytes: usize,
}

/// Aggregates a ledger, charging every message once per hop.
pub fn bandwidth_report(ledger: &BandwidthLedger, hop_count: usize) -> BandwidthReport {
    let hops = hop_count.max(1);
    let by_kind = ledger
        .by_kind()
        .into_iter()
        .map(|(k, b)| (k, b * hops))
        .collect();
    let per_query = ledger.per_query();
    let queries = per_query.len();
    let total_bytes = ledger.total_bytes() * hops;
    BandwidthReport {
        hop_count: hops,
        messages: ledger.entries().len(),
        total_bytes,
        by_kind,
        queries,
        mean_query_bytes: if queries == 0 { 0.0 } else { total_bytes as f64 / queries as f64 },
        max_query_bytes: per_query.values().max().copied().unwrap_or(0) * hops,
        opaque_descriptor_bytes: OPAQUE_DESCRIPTOR_BYTES * hops,
    }
}

impl fmt::Display for BandwidthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hops:                {}", self.hop_count)?;
        writeln!(f, "messages:            {}", self.messages)?;
        writeln!(f, "total bytes:         {}", self.total_bytes)?;
        for t in Traffic::ALL {
            if let Some(b) = self.by_kind.get(&t) {
                writeln!(f, "  {:<18} {}", t.as_str(), b)?;
            }
        }
        writeln!(f, "queries:             {}", self.queries)?;
        writeln!(f, "mean bytes/query:    {:.1}", self.mean_query_bytes)?;
        writeln!(f, "max bytes/query:     {}", self.max_query_bytes)?;
        writeln!(f, "opaque descriptor:   {} bytes/query", self.opaque_descriptor_bytes)?;
        write!(
            f,
            "reference mean:      {:.0} bytes/query (office sequence, 1 hop)",
            REFERENCE_MEAN_QUERY_BYTES
        )
    }
}
