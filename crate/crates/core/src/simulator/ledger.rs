use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::protocol::MessageKind;
use crate::types::FrameId;

/// What a ledger entry paid for: a protocol message, or a naive broadcast of
/// a full constellation (the centralized baseline).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Traffic {
    Message(MessageKind),
    Broadcast,
}

impl Traffic {
    pub const ALL: [Traffic; 5] = [
        Traffic::Message(MessageKind::PartialQuery),
        Traffic::Message(MessageKind::CandidateResponse),
        Traffic::Message(MessageKind::FullQuery),
        Traffic::Message(MessageKind::ScoreResponse),
        Traffic::Broadcast,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Traffic::Message(k) => k.as_str(),
            Traffic::Broadcast => "broadcast",
        }
    }
}

impl fmt::Display for Traffic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Traffic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Traffic::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown message kind `{s}`"))
    }
}

/// One delivered message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    /// Frame whose place-recognition query caused the message.
    pub query: FrameId,
    pub kind: Traffic,
    pub from: u8,
    pub to: u8,
    pub bytes: usize,
}

/// Every byte exchanged during a run, one entry per delivered message.
/// Local hand-offs inside a robot are never recorded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BandwidthLedger {
    entries: Vec<LedgerEntry>,
}

impl BandwidthLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, entry: LedgerEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.bytes).sum()
    }

    pub fn by_kind(&self) -> BTreeMap<Traffic, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.kind).or_insert(0) += e.bytes;
        }
        out
    }

    /// Total bytes per query, for queries that sent at least one message.
    pub fn per_query(&self) -> BTreeMap<FrameId, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.query).or_insert(0) += e.bytes;
        }
        out
    }

    pub fn query_bytes(&self, query: FrameId) -> usize {
        self.query_entries(query).map(|e| e.bytes).sum()
    }

    pub fn query_entries(&self, query: FrameId) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(move |e| e.query == query)
    }

    pub fn sent_by_robot(&self) -> BTreeMap<u8, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.from).or_insert(0) += e.bytes;
        }
        out
    }

    pub fn received_by_robot(&self) -> BTreeMap<u8, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.to).or_insert(0) += e.bytes;
        }
        out
    }
}
