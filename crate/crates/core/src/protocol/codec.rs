//! Byte-exact encodings of the four protocol messages.
//!
//! Messages carry no type tag and no length prefix: the transport delivers
//! one message per buffer and the receiver knows which kind it expects.
//! Multi-byte integers are little-endian.
//!
//! ```text
//! FrameId            robot:u8 | frame:u16
//! PartialQuery       FrameId | label:u8 * k | count nibbles, packed low-first, ceil(k/2) bytes
//! CandidateResponse  FrameId * n                      (n <= n_ret)
//! FullQuery          FrameId | (label:u8 | x:i16 | y:i16 | z:i16) * m
//! ScoreResponse      (FrameId | score:u8) * p
//! ```
//!
//! Sizes: partial query `3 + ceil(1.5 k)`, candidate response `3 n`,
//! full query `3 + 7 m`, score response `4 p`.

use std::fmt;

use nalgebra::Point3;
use thiserror::Error;

use crate::descriptor::SemanticDescriptor;
use crate::types::{Constellation, FrameId, Label, ObjectPoint};

pub const FRAME_ID_BYTES: usize = 3;
/// Bytes per object in a full query: label plus three fixed-point coordinates.
pub const OBJECT_BYTES: usize = 7;
pub const SCORE_ENTRY_BYTES: usize = FRAME_ID_BYTES + 1;

/// Largest count representable in a 4-bit bin.
pub const MAX_WIRE_COUNT: u8 = 15;

/// Fixed-point steps per meter (0.01 m resolution).
pub const POSITION_SCALE: f64 = 100.0;
/// Largest encodable magnitude in fixed-point steps.
pub const POSITION_LIMIT: i16 = i16::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    PartialQuery,
    CandidateResponse,
    FullQuery,
    ScoreResponse,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::PartialQuery => "partial_query",
            MessageKind::CandidateResponse => "candidate_response",
            MessageKind::FullQuery => "full_query",
            MessageKind::ScoreResponse => "score_response",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("{kind} message cannot be {len} bytes long")]
    Framing { kind: MessageKind, len: usize },
    #[error("partial query entry {index} has a zero count")]
    ZeroCount { index: usize },
    #[error("partial query labels are not strictly increasing at entry {index}")]
    UnsortedLabels { index: usize },
    #[error("partial query padding nibble is not zero")]
    Padding,
    #[error("coordinate {value} m is outside the fixed-point range")]
    PositionOutOfRange { value: f64 },
}

/// Encoded representation of one message kind.
pub trait Wire: Sized {
    const KIND: MessageKind;

    fn wire_size(&self) -> usize;

    fn encode_into(&self, out: &mut Vec<u8>);

    fn decode(bytes: &[u8]) -> Result<Self, CodecError>;

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_size());
        self.encode_into(&mut out);
        debug_assert_eq!(out.len(), self.wire_size());
        out
    }
}

fn put_frame_id(out: &mut Vec<u8>, id: FrameId) {
    out.push(id.robot);
    out.extend_from_slice(&id.frame.to_le_bytes());
}

fn get_frame_id(b: &[u8]) -> FrameId {
    FrameId::new(b[0], u16::from_le_bytes([b[1], b[2]]))
}

/// Quantizes a coordinate to 0.01 m steps.
pub fn quantize_coordinate(value: f64) -> Result<i16, CodecError> {
    let steps = (value * POSITION_SCALE).round();
    if !steps.is_finite() || steps.abs() > POSITION_LIMIT as f64 {
        return Err(CodecError::PositionOutOfRange { value });
    }
    Ok(steps as i16)
}

pub fn dequantize_coordinate(steps: i16) -> f64 {
    steps as f64 / POSITION_SCALE
}

/// Maps a score in [0, 1] to one byte in steps of 1/255.
pub fn quantize_score(score: f64) -> u8 {
    (score.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn dequantize_score(q: u8) -> f64 {
    q as f64 / 255.0
}

/// Partial semantic descriptor sent to the robot owning its labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialQueryMsg {
    pub origin: FrameId,
    /// Strictly increasing labels with counts in `1..=15`.
    pub entries: Vec<(Label, u8)>,
}

impl PartialQueryMsg {
    /// Non-zero bins of `desc`, saturated to the 4-bit range.
    pub fn new(origin: FrameId, desc: &SemanticDescriptor) -> Self {
        Self {
            origin,
            entries: desc
                .iter()
                .map(|(l, n)| (l, n.min(MAX_WIRE_COUNT as u32) as u8))
                .collect(),
        }
    }

    pub fn descriptor(&self) -> SemanticDescriptor {
        SemanticDescriptor::from_counts(self.entries.iter().map(|&(l, n)| (l, n as u32)))
    }

    /// Entry count that produces an encoded body of `body` bytes, if any.
    fn entries_for_body(body: usize) -> Option<usize> {
        let k = body * 2 / 3;
        (k + k.div_ceil(2) == body).then_some(k)
    }
}

impl Wire for PartialQueryMsg {
    const KIND: MessageKind = MessageKind::PartialQuery;

    fn wire_size(&self) -> usize {
        let k = self.entries.len();
        FRAME_ID_BYTES + k + k.div_ceil(2)
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        put_frame_id(out, self.origin);
        out.extend(self.entries.iter().map(|(l, _)| l.0));
        for pair in self.entries.chunks(2) {
            let lo = pair[0].1.min(MAX_WIRE_COUNT);
            let hi = pair.get(1).map_or(0, |e| e.1.min(MAX_WIRE_COUNT));
            out.push(lo | (hi << 4));
        }
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let framing = CodecError::Framing { kind: Self::KIND, len: bytes.len() };
        if bytes.len() < FRAME_ID_BYTES {
            return Err(framing);
        }
        let body = &bytes[FRAME_ID_BYTES..];
        let k = Self::entries_for_body(body.len()).ok_or(framing)?;
        let (labels, packed) = body.split_at(k);
        let mut entries = Vec::with_capacity(k);
        for (i, &l) in labels.iter().enumerate() {
            let byte = packed[i / 2];
            let count = if i % 2 == 0 { byte & 0x0f } else { byte >> 4 };
            if count == 0 {
                return Err(CodecError::ZeroCount { index: i });
            }
            if i > 0 && labels[i - 1] >= l {
                return Err(CodecError::UnsortedLabels { index: i });
            }
            entries.push((Label(l), count));
        }
        if k % 2 == 1 && packed[k / 2] >> 4 != 0 {
            return Err(CodecError::Padding);
        }
        Ok(Self { origin: get_frame_id(bytes), entries })
    }
}

/// Frames whose stored partial descriptors best match a query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateResponseMsg {
    pub candidates: Vec<FrameId>,
}

impl Wire for CandidateResponseMsg {
    const KIND: MessageKind = MessageKind::CandidateResponse;

    fn wire_size(&self) -> usize {
        FRAME_ID_BYTES * self.candidates.len()
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        for &id in &self.candidates {
            put_frame_id(out, id);
        }
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        if !bytes.len().is_multiple_of(FRAME_ID_BYTES) {
            return Err(CodecError::Framing { kind: Self::KIND, len: bytes.len() });
        }
        Ok(Self {
            candidates: bytes.chunks_exact(FRAME_ID_BYTES).map(get_frame_id).collect(),
        })
    }
}

/// One object of a full query, already in fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WireObject {
    pub label: Label,
    pub steps: [i16; 3],
}

/// A whole constellation, sent for the geometric check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullQueryMsg {
    pub origin: FrameId,
    pub objects: Vec<WireObject>,
}

impl FullQueryMsg {
    pub fn from_constellation(c: &Constellation) -> Result<Self, CodecError> {
        let objects = c
            .objects
            .iter()
            .map(|o| {
                Ok(WireObject {
                    label: o.label,
                    steps: [
                        quantize_coordinate(o.position.x)?,
                        quantize_coordinate(o.position.y)?,
                        quantize_coordinate(o.position.z)?,
                    ],
                })
            })
            .collect::<Result<_, CodecError>>()?;
        Ok(Self { origin: c.id, objects })
    }

    pub fn to_constellation(&self) -> Constellation {
        Constellation::new(
            self.origin,
            self.objects
                .iter()
                .map(|o| ObjectPoint {
                    label: o.label,
                    position: Point3::new(
                        dequantize_coordinate(o.steps[0]),
                        dequantize_coordinate(o.steps[1]),
                        dequantize_coordinate(o.steps[2]),
                    ),
                })
                .collect(),
        )
    }
}

/// Snaps every position of `c` to the wire grid.
pub fn quantize_constellation(c: &Constellation) -> Result<Constellation, CodecError> {
    Ok(FullQueryMsg::from_constellation(c)?.to_constellation())
}

impl Wire for FullQueryMsg {
    const KIND: MessageKind = MessageKind::FullQuery;

    fn wire_size(&self) -> usize {
        FRAME_ID_BYTES + OBJECT_BYTES * self.objects.len()
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        put_frame_id(out, self.origin);
        for o in &self.objects {
            out.push(o.label.0);
            for s in o.steps {
                out.extend_from_slice(&s.to_le_bytes());
            }
        }
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < FRAME_ID_BYTES || !(bytes.len() - FRAME_ID_BYTES).is_multiple_of(OBJECT_BYTES) {
            return Err(CodecError::Framing { kind: Self::KIND, len: bytes.len() });
        }
        let objects = bytes[FRAME_ID_BYTES..]
            .chunks_exact(OBJECT_BYTES)
            .map(|b| WireObject {
                label: Label(b[0]),
                steps: [
                    i16::from_le_bytes([b[1], b[2]]),
                    i16::from_le_bytes([b[3], b[4]]),
                    i16::from_le_bytes([b[5], b[6]]),
                ],
            })
            .collect();
        Ok(Self { origin: get_frame_id(bytes), objects })
    }
}

/// Loop-closure scores of stored frames against a full query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScoreResponseMsg {
    /// Stored frame and its score in 1/255 steps.
    pub scores: Vec<(FrameId, u8)>,
}

impl Wire for ScoreResponseMsg {
    const KIND: MessageKind = MessageKind::ScoreResponse;

    fn wire_size(&self) -> usize {
        SCORE_ENTRY_BYTES * self.scores.len()
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        for &(id, s) in &self.scores {
            put_frame_id(out, id);
            out.push(s);
        }
    }

    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        if !bytes.len().is_multiple_of(SCORE_ENTRY_BYTES) {
            return Err(CodecError::Framing { kind: Self::KIND, len: bytes.len() });
        }
        Ok(Self {
            scores: bytes
                .chunks_exact(SCORE_ENTRY_BYTES)
                .map(|b| (get_frame_id(b), b[3]))
                .collect(),
        })
    }
}

/// Any of the four protocol messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WireMessage {
    PartialQuery(PartialQueryMsg),
    CandidateResponse(CandidateResponseMsg),
    FullQuery(FullQueryMsg),
    ScoreResponse(ScoreResponseMsg),
}

impl WireMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            WireMessage::PartialQuery(_) => MessageKind::PartialQuery,
            WireMessage::CandidateResponse(_) => MessageKind::CandidateResponse,
            WireMessage::FullQuery(_) => MessageKind::FullQuery,
            WireMessage::ScoreResponse(_) => MessageKind::ScoreResponse,
        }
    }

    pub fn wire_size(&self) -> usize {
        match self {
            WireMessage::PartialQuery(m) => m.wire_size(),
            WireMessage::CandidateResponse(m) => m.wire_size(),
            WireMessage::FullQuery(m) => m.wire_size(),
            WireMessage::ScoreResponse(m) => m.wire_size(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            WireMessage::PartialQuery(m) => m.encode(),
            WireMessage::CandidateResponse(m) => m.encode(),
            WireMessage::FullQuery(m) => m.encode(),
            WireMessage::ScoreResponse(m) => m.encode(),
        }
    }

    pub fn decode(kind: MessageKind, bytes: &[u8]) -> Result<Self, CodecError> {
        Ok(match kind {
            MessageKind::PartialQuery => WireMessage::PartialQuery(PartialQueryMsg::decode(bytes)?),
            MessageKind::CandidateResponse => {
                WireMessage::CandidateResponse(CandidateResponseMsg::decode(bytes)?)
            }
            MessageKind::FullQuery => WireMessage::FullQuery(FullQueryMsg::decode(bytes)?),
            MessageKind::ScoreResponse => WireMessage::ScoreResponse(ScoreResponseMsg::decode(bytes)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn partial(entries: &[(u8, u8)]) -> PartialQueryMsg {
        PartialQueryMsg {
            origin: FrameId::new(3, 1728),
            entries: entries.iter().map(|&(l, n)| (Label(l), n)).collect(),
        }
    }

    #[test]
    fn partial_query_layout() {
        let m = partial(&[(39, 2), (56, 1), (60, 15), (73, 3)]);
        let bytes = m.encode();
        assert_eq!(bytes.len(), 9);
        assert_eq!(bytes, vec![3, 0xc0, 0x06, 39, 56, 60, 73, 0x12, 0x3f]);
        assert_eq!(PartialQueryMsg::decode(&bytes).unwrap(), m);

        let odd = partial(&[(1, 5), (2, 6), (3, 7)]);
        let bytes = odd.encode();
        assert_eq!(bytes.len(), 3 + 5);
        assert_eq!(&bytes[6..], &[0x65, 0x07]);
        assert_eq!(PartialQueryMsg::decode(&bytes).unwrap(), odd);
    }

    #[test]
    fn partial_query_saturates_counts() {
        let d = SemanticDescriptor::from_counts([(Label(4), 40), (Label(9), 1)]);
        let m = PartialQueryMsg::new(FrameId::new(0, 0), &d);
        assert_eq!(m.entries, vec![(Label(4), 15), (Label(9), 1)]);
    }

    #[test]
    fn partial_query_rejects_bad_buffers() {
        // body of 1 or 4 bytes matches no entry count
        assert!(matches!(PartialQueryMsg::decode(&[0, 0, 0, 1]), Err(CodecError::Framing { .. })));
        assert!(matches!(
            PartialQueryMsg::decode(&[0, 0, 0, 1, 2, 3, 4]),
            Err(CodecError::Framing { .. })
        ));
        assert!(matches!(PartialQueryMsg::decode(&[0, 0]), Err(CodecError::Framing { .. })));
        assert_eq!(PartialQueryMsg::decode(&[0, 0, 0, 7, 0x00]), Err(CodecError::ZeroCount { index: 0 }));
        assert_eq!(PartialQueryMsg::decode(&[0, 0, 0, 7, 0x11]), Err(CodecError::Padding));
        assert_eq!(
            PartialQueryMsg::decode(&[0, 0, 0, 7, 7, 0x11]),
            Err(CodecError::UnsortedLabels { index: 1 })
        );
        assert_eq!(PartialQueryMsg::decode(&[1, 2, 0]).unwrap().entries, vec![]);
    }

    #[test]
    fn full_query_size_and_quantization() {
        let objects: Vec<ObjectPoint> = (0..12)
            .map(|i| ObjectPoint::new(Label(i), 1.234, -0.5 * i as f64, 2.0))
            .collect();
        let c = Constellation::new(FrameId::new(1, 2), objects);
        let m = FullQueryMsg::from_constellation(&c).unwrap();
        let bytes = m.encode();
        assert_eq!(bytes.len(), 87);
        let back = FullQueryMsg::decode(&bytes).unwrap();
        assert_eq!(back, m);
        let q = back.to_constellation();
        assert!((q.objects[0].position.x - 1.234).abs() <= 0.01);
        assert_eq!(q.objects[0].position.x, 1.23);
        assert!(FullQueryMsg::decode(&bytes[..86]).is_err());
        assert!(FullQueryMsg::decode(&[0, 0]).is_err());
    }

    #[test]
    fn coordinate_range() {
        assert_eq!(quantize_coordinate(327.67).unwrap(), 32767);
        assert_eq!(quantize_coordinate(-327.67).unwrap(), -32767);
        assert!(quantize_coordinate(327.68).is_err());
        assert!(quantize_coordinate(f64::NAN).is_err());
    }

    #[test]
    fn score_quantization() {
        assert_eq!(quantize_score(1.0), 255);
        assert_eq!(quantize_score(0.0), 0);
        assert_eq!(quantize_score(0.5), 128);
        assert_eq!(dequantize_score(255), 1.0);
        let m = ScoreResponseMsg { scores: vec![(FrameId::new(2, 300), 200)] };
        assert_eq!(m.encode(), vec![2, 44, 1, 200]);
        assert_eq!(ScoreResponseMsg::decode(&m.encode()).unwrap(), m);
        assert!(ScoreResponseMsg::decode(&[0, 0, 0]).is_err());
    }

    #[test]
    fn candidate_response_layout() {
        let m = CandidateResponseMsg { candidates: vec![FrameId::new(3, 1728), FrameId::new(0, 1)] };
        assert_eq!(m.encode(), vec![3, 0xc0, 0x06, 0, 1, 0]);
        assert_eq!(CandidateResponseMsg::decode(&m.encode()).unwrap(), m);
        assert!(CandidateResponseMsg::decode(&[1]).is_err());
        assert!(CandidateResponseMsg::default().encode().is_empty());
    }

    fn frame_id() -> impl Strategy<Value = FrameId> {
        (any::<u8>(), any::<u16>()).prop_map(|(r, f)| FrameId::new(r, f))
    }

    fn arb_message() -> impl Strategy<Value = WireMessage> {
        prop_oneof![
            (frame_id(), prop::collection::btree_map(any::<u8>(), 1u8..=15, 0..40)).prop_map(|(o, m)| {
                WireMessage::PartialQuery(PartialQueryMsg {
                    origin: o,
                    entries: m.into_iter().map(|(l, n)| (Label(l), n)).collect(),
                })
            }),
            prop::collection::vec(frame_id(), 0..8)
                .prop_map(|c| WireMessage::CandidateResponse(CandidateResponseMsg { candidates: c })),
            (frame_id(), prop::collection::vec((any::<u8>(), any::<[i16; 3]>()), 0..30)).prop_map(|(o, v)| {
                WireMessage::FullQuery(FullQueryMsg {
                    origin: o,
                    objects: v.into_iter().map(|(l, s)| WireObject { label: Label(l), steps: s }).collect(),
                })
            }),
            prop::collection::vec((frame_id(), any::<u8>()), 0..10)
                .prop_map(|s| WireMessage::ScoreResponse(ScoreResponseMsg { scores: s })),
        ]
    }

    proptest! {
        #[test]
        fn round_trip_on_quantized_domain(m in arb_message()) {
            let bytes = m.encode();
            prop_assert_eq!(bytes.len(), m.wire_size());
            prop_assert_eq!(WireMessage::decode(m.kind(), &bytes).unwrap(), m);
        }

        #[test]
        fn quantization_is_idempotent(x in -327.0f64..327.0) {
            let q = quantize_coordinate(x).unwrap();
            prop_assert!((dequantize_coordinate(q) - x).abs() <= 0.005 + 1e-12);
            prop_assert_eq!(quantize_coordinate(dequantize_coordinate(q)).unwrap(), q);
        }
    }
}
