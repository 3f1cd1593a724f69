use std::collections::HashMap;
use std::io::{self, Write};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};

use crate::simulator::SimilarityRecord;
use crate::types::FrameId;

/// Dense symmetric score matrix over a fixed frame ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    frames: Vec<FrameId>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn size(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[FrameId] {
        &self.frames
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.frames.len() + j]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.size();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    }

    /// Binary graymap, white = score 1.
    pub fn write_pgm<W: Write>(&self, w: W) -> io::Result<()> {
        let n = self.size();
        let pixels: Vec<u8> = self.values.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
        PnmEncoder::new(w)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&pixels, n as u32, n as u32, ExtendedColorType::L8)
            .map_err(io::Error::other)
    }
}

/// Lays the records out on `frames` × `frames`, filling both triangles.
/// Scores below `threshold` and frames absent from `frames` are dropped;
/// when a pair appears twice the higher score wins.
pub fn export_similarity_matrix(records: &[SimilarityRecord], frames: &[FrameId], threshold: f64) -> SimilarityMatrix {
    let n = frames.len();
    let index: HashMap<FrameId, usize> = frames.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut values = vec![0.0f64; n * n];
    for r in records {
        if r.score < threshold {
            continue;
        }
        let (Some(&i), Some(&j)) = (index.get(&r.query), index.get(&r.matched)) else {
            continue;
        };
        for (a, b) in [(i, j), (j, i)] {
            let v = &mut values[a * n + b];
            *v = v.max(r.score);
        }
    }
    SimilarityMatrix { frames: frames.to_vec(), values }
}
