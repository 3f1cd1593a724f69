#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use constellation_core::eval::{evaluate, generate_synthetic_world, EvalParams, PrCurve, SynthParams};
use constellation_core::matching::surroundings_vector;
use constellation_core::simulator::SimilarityRecord;
use constellation_core::{common_labels, Constellation, FrameId, Label, ObjectPoint};
use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const NUM_LABELS: usize = 80;

/// Up to `max_objects` objects drawn from `label_pool` classes. With `grid`
/// set, coordinates sit on a 0.5 m lattice so distance ties are common.
pub fn random_constellation(rng: &mut ChaCha8Rng, id: FrameId, max_objects: usize, label_pool: u8, grid: bool) -> Constellation {
    let n = rng.random_range(0..=max_objects);
    let objects = (0..n)
        .map(|_| {
            let label = Label(rng.random_range(0..label_pool));
            let mut c = || {
                if grid {
                    rng.random_range(-4i32..=4) as f64 * 0.5
                } else {
                    rng.random_range(-2.0..2.0)
                }
            };
            ObjectPoint::new(label, c(), c(), c())
        })
        .collect();
    Constellation::new(id, objects)
}

/// A noisy partial copy of `a` plus some clutter, so pairs share structure.
pub fn revisit(rng: &mut ChaCha8Rng, a: &Constellation, id: FrameId, sigma: f64, label_pool: u8) -> Constellation {
    let mut objects = Vec::new();
    for o in &a.objects {
        if !rng.random_bool(0.8) {
            continue;
        }
        let mut j = || rng.random_range(-sigma..=sigma);
        objects.push(ObjectPoint::new(o.label, o.position.x + j(), o.position.y + j(), o.position.z + j()));
    }
    for _ in 0..rng.random_range(0..3) {
        let label = Label(rng.random_range(0..label_pool));
        objects.push(ObjectPoint::new(label, rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)));
    }
    Constellation::new(id, objects)
}

pub fn random_isometry(rng: &mut ChaCha8Rng) -> Isometry3<f64> {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let rot = UnitQuaternion::from_scaled_axis(axis * rng.random_range(0.0..3.0));
    let t = Translation3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-5.0..5.0));
    Isometry3::from_parts(t, rot)
}

pub fn transformed(c: &Constellation, iso: &Isometry3<f64>) -> Constellation {
    let objects = c.objects.iter().map(|o| ObjectPoint { label: o.label, position: iso * o.position }).collect();
    Constellation::new(c.id, objects)
}

/// Mutual nearest neighbours straight from the definitions: dense surroundings
/// vectors over the whole label universe, nearest same-label partner with the
/// lowest index on ties, strict distance threshold.
pub fn brute_force_associate(a: &Constellation, b: &Constellation, d: f64) -> Vec<(usize, usize)> {
    let common = common_labels(a, b);
    let va: Vec<_> = (0..a.len()).map(|k| surroundings_vector(a, k, &common, NUM_LABELS).unwrap()).collect();
    let vb: Vec<_> = (0..b.len()).map(|n| surroundings_vector(b, n, &common, NUM_LABELS).unwrap()).collect();
    let dist = |k: usize, n: usize| -> f64 {
        let mut sum = 0.0;
        for (x, y) in va[k].values().iter().zip(vb[n].values()) {
            sum += (x - y) * (x - y);
        }
        sum.sqrt()
    };
    let mut pairs = Vec::new();
    for k in 0..a.len() {
        for n in 0..b.len() {
            let label = a.objects[k].label;
            if b.objects[n].label != label || !common.contains(label) {
                continue;
            }
            let dkn = dist(k, n);
            let n_best = (0..b.len())
                .filter(|&m| b.objects[m].label == label)
                .all(|m| dist(k, m) > dkn || (dist(k, m) == dkn && m >= n));
            let k_best = (0..a.len())
                .filter(|&j| a.objects[j].label == label)
                .all(|j| dist(j, n) > dkn || (dist(j, n) == dkn && j >= k));
            if n_best && k_best && dkn < d {
                pairs.push((k, n));
            }
        }
    }
    pairs
}

/// Per-label min and max of the two histograms, summed.
pub fn brute_force_jaccard(a: &Constellation, b: &Constellation) -> f64 {
    let mut ca = [0u32; 256];
    let mut cb = [0u32; 256];
    for o in &a.objects {
        ca[o.label.index()] += 1;
    }
    for o in &b.objects {
        cb[o.label.index()] += 1;
    }
    let (mut num, mut den) = (0u32, 0u32);
    for l in 0..256 {
        num += ca[l].min(cb[l]);
        den += ca[l].max(cb[l]);
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn record_set(records: &[SimilarityRecord]) -> BTreeSet<(FrameId, FrameId, u64)> {
    records.iter().map(|r| (r.query, r.matched, r.score.to_bits())).collect()
}

pub fn record_map(records: &[SimilarityRecord]) -> BTreeMap<(FrameId, FrameId), f64> {
    records.iter().map(|r| ((r.query, r.matched), r.score)).collect()
}

pub fn synth_params(seed: u64, scenes: usize, visits: usize, sigma: f64, robots: usize) -> SynthParams {
    SynthParams { seed, num_scenes: scenes, revisit_factor: visits, noise_sigma: sigma, num_robots: robots, ..SynthParams::default() }
}

pub fn world_auc(p: &SynthParams, records: &[SimilarityRecord]) -> PrCurve {
    let world = generate_synthetic_world(p);
    evaluate(records, &world.ground_truth, &EvalParams::default())
}
