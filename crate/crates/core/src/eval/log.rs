//! Detection logs: pre-extracted object points per frame, one JSON object per
//! line after a one-line header. See `docs/detection-log.md`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Constellation, FrameId, Label, ObjectPoint, MAX_LABELS};

pub const LOG_FORMAT: &str = "constellation-detections";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("log is empty: missing header line")]
    MissingHeader,
    #[error("line 1: {0}")]
    Header(String),
    #[error("line 1: schema version {found} is not supported (expected {LOG_VERSION})")]
    Version { found: u32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: label {label} outside a universe of {num_labels} labels")]
    LabelOutOfRange { line: usize, label: u32, num_labels: usize },
    #[error("line {line}: robot {robot} outside a fleet of {num_robots}")]
    RobotOutOfRange { line: usize, robot: u32, num_robots: usize },
    #[error("line {line}: frame index {frame} exceeds 65535")]
    FrameOutOfRange { line: usize, frame: u32 },
    #[error("line {line}: frame {frame} of robot {robot} does not follow frame {previous}")]
    FrameOrder { line: usize, robot: u32, frame: u32, previous: u32 },
    #[error("line {line}: non-finite coordinate")]
    NonFinite { line: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub num_labels: usize,
    pub num_robots: usize,
}

impl LogHeader {
    pub fn new(num_labels: usize, num_robots: usize) -> Self {
        Self { format: LOG_FORMAT.to_string(), version: LOG_VERSION, num_labels, num_robots }
    }
}

/// Camera-to-world pose: translation and unit quaternion `[x, y, z, w]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub t: [f64; 3],
    pub q: [f64; 4],
}

impl Pose {
    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let t = iso.translation.vector;
        let q = iso.rotation.quaternion().coords;
        Self { t: [t.x, t.y, t.z], q: [q.x, q.y, q.z, q.w] }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        let [x, y, z, w] = self.q;
        Isometry3::from_parts(
            Translation3::new(self.t[0], self.t[1], self.t[2]),
            UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
        )
    }

    pub fn to_world(&self, p: &Point3<f64>) -> Point3<f64> {
        self.isometry() * p
    }
}

/// One frame's detections. Objects are `[label, x, y, z]` in the camera frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub robot: u32,
    pub frame: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose>,
    /// Place identifier, present in synthetic logs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<u32>,
    pub objects: Vec<(u32, f64, f64, f64)>,
}

impl DetectionRecord {
    pub fn id(&self) -> FrameId {
        FrameId::new(self.robot as u8, self.frame as u16)
    }

    pub fn constellation(&self) -> Constellation {
        Constellation::new(
            self.id(),
            self.objects
                .iter()
                .map(|&(l, x, y, z)| ObjectPoint::new(Label(l as u8), x, y, z))
                .collect(),
        )
    }
}

/// A validated detection log.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionLog {
    pub header: LogHeader,
    pub records: Vec<DetectionRecord>,
}

impl DetectionLog {
    pub fn new(num_labels: usize, num_robots: usize) -> Self {
        Self { header: LogHeader::new(num_labels, num_robots), records: Vec::new() }
    }

    /// Per-robot streams ordered by frame index, one entry per robot of the header.
    pub fn streams(&self) -> Vec<Vec<Constellation>> {
        let mut streams = vec![Vec::new(); self.header.num_robots];
        for r in &self.records {
            streams[r.robot as usize].push(r.constellation());
        }
        streams
    }

    /// Every frame in global arrival order (frame index, then robot).
    pub fn frames(&self) -> Vec<FrameId> {
        let mut ids: Vec<FrameId> = self.records.iter().map(DetectionRecord::id).collect();
        ids.sort_by_key(|id| id.arrival_key());
        ids
    }

    pub fn poses(&self) -> BTreeMap<FrameId, Pose> {
        self.records.iter().filter_map(|r| Some((r.id(), r.pose?))).collect()
    }

    pub fn scenes(&self) -> BTreeMap<FrameId, u32> {
        self.records.iter().filter_map(|r| Some((r.id(), r.scene?))).collect()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

pub fn parse_detection_log<R: BufRead>(reader: R) -> Result<DetectionLog, LogError> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(LogError::MissingHeader),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let header: LogHeader = serde_json::from_str(&header).map_err(|e| LogError::Header(e.to_string()))?;
    if header.format != LOG_FORMAT {
        return Err(LogError::Header(format!("unknown format `{}`", header.format)));
    }
    if header.version != LOG_VERSION {
        return Err(LogError::Version { found: header.version });
    }
    if header.num_labels == 0 || header.num_labels > MAX_LABELS {
        return Err(LogError::Header(format!("label universe {} not in 1..=256", header.num_labels)));
    }
    if header.num_robots == 0 || header.num_robots > 256 {
        return Err(LogError::Header(format!("fleet size {} not in 1..=256", header.num_robots)));
    }

    let mut last: Vec<Option<u32>> = vec![None; header.num_robots];
    let mut records = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DetectionRecord =
            serde_json::from_str(&line).map_err(|e| LogError::Parse { line: line_no, msg: e.to_string() })?;
        if rec.robot as usize >= header.num_robots {
            return Err(LogError::RobotOutOfRange { line: line_no, robot: rec.robot, num_robots: header.num_robots });
        }
        if rec.frame > u16::MAX as u32 {
            return Err(LogError::FrameOutOfRange { line: line_no, frame: rec.frame });
        }
        if let Some(prev) = last[rec.robot as usize] {
            if rec.frame <= prev {
                return Err(LogError::FrameOrder { line: line_no, robot: rec.robot, frame: rec.frame, previous: prev });
            }
        }
        last[rec.robot as usize] = Some(rec.frame);
        for &(label, x, y, z) in &rec.objects {
            if label as usize >= header.num_labels {
                return Err(LogError::LabelOutOfRange { line: line_no, label, num_labels: header.num_labels });
            }
            if !(x.is_finite() && y.is_finite() && z.is_finite()) {
                return Err(LogError::NonFinite { line: line_no });
            }
        }
        if let Some(p) = &rec.pose {
            if !p.t.iter().chain(&p.q).all(|v| v.is_finite()) || p.q.iter().all(|&v| v == 0.0) {
                return Err(LogError::Parse { line: line_no, msg: "invalid pose".into() });
            }
        }
        records.push(rec);
    }
    Ok(DetectionLog { header, records })
}

pub fn load_detection_log(path: impl AsRef<Path>) -> Result<DetectionLog, LogError> {
    parse_detection_log(BufReader::new(File::open(path)?))
}
