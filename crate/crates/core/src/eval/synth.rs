//! Desk-scale synthetic worlds: random object layouts revisited from random
//! viewpoints with fresh position noise.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::ground_truth::GroundTruth;
use super::log::{DetectionLog, DetectionRecord, Pose};
use crate::types::{FrameId, DEFAULT_NUM_LABELS};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub num_scenes: usize,
    /// Visits per scene, the first one included.
    pub revisit_factor: usize,
    /// Per-axis standard deviation of position noise, meters.
    pub noise_sigma: f64,
    pub objects_per_scene: RangeInclusive<usize>,
    pub num_robots: usize,
    pub num_labels: usize,
    /// Distance between neighbouring scene centres, meters.
    pub scene_spacing: f64,
    /// Half-extent of the box objects are scattered in, meters.
    pub scene_extent: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            num_scenes: 20,
            revisit_factor: 3,
            noise_sigma: 0.05,
            objects_per_scene: 4..=8,
            num_robots: 10,
            num_labels: DEFAULT_NUM_LABELS,
            scene_spacing: 10.0,
            scene_extent: 1.5,
        }
    }
}

pub struct SyntheticWorld {
    pub log: DetectionLog,
    pub ground_truth: GroundTruth,
}

struct Scene {
    centre: Point3<f64>,
    objects: Vec<(u32, Point3<f64>)>,
}

fn random_scene(rng: &mut ChaCha8Rng, p: &SynthParams, index: usize) -> Scene {
    let per_row = 10;
    let centre = Point3::new(
        p.scene_spacing * (index % per_row) as f64,
        p.scene_spacing * (index / per_row) as f64,
        0.0,
    );
    let lo = *p.objects_per_scene.start();
    let hi = (*p.objects_per_scene.end()).max(lo);
    let n = rng.random_range(lo..=hi);
    let labels: Vec<u32> = loop {
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..p.num_labels as u32)).collect();
        // a single repeated class gives indistinguishable objects; redraw
        if n < 2 || p.num_labels < 2 || labels.iter().any(|&l| l != labels[0]) {
            break labels;
        }
    };
    let e = p.scene_extent;
    let objects = labels
        .into_iter()
        .map(|l| {
            let offset = Vector3::new(
                rng.random_range(-e..=e),
                rng.random_range(-e..=e),
                rng.random_range(-e / 3.0..=e / 3.0),
            );
            (l, centre + offset)
        })
        .collect();
    Scene { centre, objects }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    let mut g = || -> f64 { StandardNormal.sample(rng) };
    UnitQuaternion::from_quaternion(Quaternion::new(g(), g(), g(), g()))
}

/// Camera placed a few meters from the scene centre, arbitrarily oriented.
fn random_viewpoint(rng: &mut ChaCha8Rng, centre: &Point3<f64>) -> Isometry3<f64> {
    let dir = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.3..0.3));
    let dist = rng.random_range(2.0..4.0);
    let origin = centre + dir.normalize() * dist;
    Isometry3::from_parts(Translation3::from(origin.coords), random_rotation(rng))
}

/// Generates a detection log and its exact ground truth.
///
/// Visit `v` of every scene happens in round `v`; the first round follows
/// scene order, later rounds are shuffled. Frame `g` of the global sequence
/// goes to robot `g % num_robots` and keeps `g` as its frame index. Objects
/// are reported in the camera frame, in a fresh random order per visit.
pub fn generate_synthetic_world(p: &SynthParams) -> SyntheticWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let num_robots = p.num_robots.max(1);
    let scenes: Vec<Scene> = (0..p.num_scenes).map(|i| random_scene(&mut rng, p, i)).collect();
    let noise = Normal::new(0.0, p.noise_sigma.max(0.0)).expect("finite non-negative sigma");

    let mut log = DetectionLog::new(p.num_labels, num_robots);
    let mut scene_ids = BTreeMap::new();
    let mut order: Vec<usize> = (0..p.num_scenes).collect();
    let mut g = 0usize;
    for visit in 0..p.revisit_factor {
        if visit > 0 {
            order.shuffle(&mut rng);
        }
        for &s in &order {
            let scene = &scenes[s];
            let camera = random_viewpoint(&mut rng, &scene.centre);
            let to_camera = camera.inverse();
            let mut objects: Vec<(u32, f64, f64, f64)> = scene
                .objects
                .iter()
                .map(|&(l, p)| {
                    let jitter = Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                    let c = to_camera * (p + jitter);
                    (l, c.x, c.y, c.z)
                })
                .collect();
            objects.shuffle(&mut rng);
            let robot = (g % num_robots) as u32;
            let rec = DetectionRecord {
                robot,
                frame: g as u32,
                pose: Some(Pose::from_isometry(&camera)),
                scene: Some(s as u32),
                objects,
            };
            scene_ids.insert(FrameId::new(robot as u8, g as u16), s as u32);
            log.records.push(rec);
            g += 1;
        }
    }
    SyntheticWorld { log, ground_truth: GroundTruth::SceneIds(scene_ids) }
}
