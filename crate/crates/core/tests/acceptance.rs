//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use constellation_core::descriptor::SemanticDescriptor;
use constellation_core::eval::generate_synthetic_world;
use constellation_core::matching::associate;
use constellation_core::protocol::{
    assign_labels, CandidateResponseMsg, FullQueryMsg, PartialQueryMsg, PartialStore, ScoreResponseMsg, Wire,
    WireMessage,
};
use constellation_core::simulator::{
    quantize_streams, run_centralized, run_decentralized, FleetConfig, SimilarityRecord, Traffic,
};
use constellation_core::{pair_score, Constellation, FrameId, Label, ObjectPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sorted_quantized(records: &[SimilarityRecord]) -> BTreeSet<(FrameId, FrameId, u64)> {
    let q: Vec<_> = records.iter().map(SimilarityRecord::quantized).collect();
    record_set(&q)
}

/// 1. Unlimited funnel reproduces the centralized pair set exactly.
fn oracle_equivalence() -> Outcome {
    let world = generate_synthetic_world(&synth_params(11, 50, 5, 0.05, 5));
    let streams = world.log.streams();
    let total: usize = streams.iter().map(Vec::len).sum();
    check(total == 250, || format!("expected 250 frames, got {total}"))?;
    let config = FleetConfig { n_ret: total, n_fq: 5, ..FleetConfig::with_robots(5) };
    let central = run_centralized(&config, &quantize_streams(&streams).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let decentral = run_decentralized(&config, &streams).map_err(|e| e.to_string())?;
    let c = sorted_quantized(&central.records);
    let d = record_set(&decentral.records);
    check(decentral.records.len() == d.len(), || "duplicate decentralized records".into())?;
    check(c == d, || {
        format!(
            "{} centralized vs {} decentralized; {} only centralized, {} only decentralized",
            c.len(),
            d.len(),
            c.difference(&d).count(),
            d.difference(&c).count()
        )
    })?;
    Ok(format!("{} identical (pair, score) records", c.len()))
}

/// 2. Default funnel never invents a pair or alters a score.
fn funnel_monotonicity() -> Outcome {
    let mut checked = 0;
    for (seed, robots) in [(11, 5), (3, 10)] {
        let world = generate_synthetic_world(&synth_params(seed, 20 * robots / 5, 3, 0.05, robots));
        let streams = world.log.streams();
        let config = FleetConfig::with_robots(robots);
        let central = run_centralized(&config, &quantize_streams(&streams).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let decentral = run_decentralized(&config, &streams).map_err(|e| e.to_string())?;
        let c = sorted_quantized(&central.records);
        for r in &decentral.records {
            check(c.contains(&(r.query, r.matched, r.score.to_bits())), || {
                format!("{} -> {} score {} absent from the centralized set", r.query, r.matched, r.score)
            })?;
        }
        checked += decentral.records.len();
        check(!decentral.records.is_empty(), || format!("seed {seed}: no decentralized records"))?;
    }
    Ok(format!("{checked} decentralized records found in the centralized set"))
}

/// 3. Encoded sizes follow the closed forms for every message kind.
fn byte_exactness() -> Outcome {
    const N: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let id = |rng: &mut ChaCha8Rng| FrameId::new(rng.random(), rng.random());

    for _ in 0..N {
        let k = rng.random_range(0..=80usize);
        let chosen: Vec<u8> = rand::seq::index::sample(&mut rng, 80, k).into_iter().map(|i| i as u8).collect();
        let desc = SemanticDescriptor::from_counts(chosen.iter().map(|&l| (Label(l), rng.random_range(1..40u32))));
        let msg = PartialQueryMsg::new(id(&mut rng), &desc);
        let bytes = msg.encode();
        check(bytes.len() == 3 + (3 * k).div_ceil(2), || format!("partial query k={k}: {} bytes", bytes.len()))?;
        check(PartialQueryMsg::decode(&bytes).as_ref() == Ok(&msg), || "partial query round trip".into())?;
    }

    let mut store = PartialStore::new();
    let mut produced = 0;
    for i in 0..N {
        if i % 100 == 0 {
            store = PartialStore::new();
        }
        let n_ret = rng.random_range(0..=8usize);
        let labels: Vec<(Label, u32)> = (0..rng.random_range(1..6)).map(|_| (Label(rng.random_range(0..10)), 1)).collect();
        let msg = PartialQueryMsg::new(FrameId::new(rng.random_range(0..4), i as u16), &SemanticDescriptor::from_counts(labels));
        let resp = store.handle_partial_query(&msg, n_ret, 0);
        let bytes = resp.encode();
        produced += resp.candidates.len();
        check(bytes.len() == 3 * resp.candidates.len() && bytes.len() <= 3 * n_ret, || {
            format!("candidate response n_ret={n_ret}: {} bytes", bytes.len())
        })?;
        check(CandidateResponseMsg::decode(&bytes).as_ref() == Ok(&resp), || "candidate round trip".into())?;
    }
    check(produced > N, || "candidate responses were mostly empty".into())?;

    for _ in 0..N {
        let m = rng.random_range(0..=30usize);
        let objects = (0..m)
            .map(|_| {
                let label = Label(rng.random());
                let mut c = || rng.random_range(-327.0..327.0);
                ObjectPoint::new(label, c(), c(), c())
            })
            .collect();
        let msg = FullQueryMsg::from_constellation(&Constellation::new(id(&mut rng), objects)).map_err(|e| e.to_string())?;
        let bytes = msg.encode();
        check(bytes.len() == 3 + 7 * m, || format!("full query m={m}: {} bytes", bytes.len()))?;
        check(FullQueryMsg::decode(&bytes).as_ref() == Ok(&msg), || "full query round trip".into())?;
    }

    for _ in 0..N {
        let n = rng.random_range(0..=20usize);
        let msg = ScoreResponseMsg { scores: (0..n).map(|_| (id(&mut rng), rng.random())).collect() };
        let bytes = WireMessage::ScoreResponse(msg.clone()).encode();
        check(bytes.len() == 4 * n, || format!("score response n={n}: {} bytes", bytes.len()))?;
        check(ScoreResponseMsg::decode(&bytes).as_ref() == Ok(&msg), || "score response round trip".into())?;
    }
    Ok(format!("4 x {N} messages at closed-form sizes"))
}

/// 4. Per-query traffic does not grow with the fleet; broadcasting does.
fn bandwidth_flatness() -> Outcome {
    let scene = |robot: u8, frame: u16| {
        Constellation::new(
            FrameId::new(robot, frame),
            vec![
                ObjectPoint::new(Label(0), 0.0, 0.0, 0.0),
                ObjectPoint::new(Label(25), 1.0, 0.2, 0.0),
                ObjectPoint::new(Label(45), 0.3, 1.5, 0.4),
            ],
        )
    };
    let full_size = 3 + 7 * 3;
    let mut fixed = None;
    let mut last_broadcast = 0;
    for robots in 4..=32usize {
        let asg = assign_labels(robots, 80).map_err(|e| e.to_string())?;
        let owners: BTreeSet<u8> = [0, 25, 45].iter().filter_map(|&l| asg.owner(Label(l))).collect();
        let querier = (robots - 1) as u8;
        check(owners.len() == 3 && !owners.contains(&querier), || format!("R={robots}: shard layout {owners:?}"))?;

        let mut streams = vec![Vec::new(); robots];
        streams[0].push(scene(0, 0));
        streams[1].push(scene(1, 1));
        streams[robots - 1].push(scene(querier, 2));
        let config = FleetConfig::with_robots(robots);
        let out = run_decentralized(&config, &streams).map_err(|e| e.to_string())?;
        let q = FrameId::new(querier, 2);
        let mut candidate_bytes = 0;
        let mut other_bytes = 0;
        let mut responders = BTreeSet::new();
        for e in out.ledger.query_entries(q) {
            if e.kind == Traffic::Message(constellation_core::protocol::MessageKind::CandidateResponse) {
                candidate_bytes += e.bytes;
                responders.insert(e.from);
            } else {
                other_bytes += e.bytes;
            }
        }
        check(candidate_bytes <= 3 * config.n_ret * responders.len(), || {
            format!("R={robots}: {candidate_bytes} candidate bytes from {} responders", responders.len())
        })?;
        match fixed {
            None => fixed = Some(other_bytes),
            Some(b) => check(b == other_bytes, || format!("R={robots}: {other_bytes} bytes, R=4 used {b}"))?,
        }
        let hits = out.records.iter().filter(|r| r.query == q).count();
        check(hits == 2, || format!("R={robots}: query found {hits} of 2 earlier visits"))?;

        let central = run_centralized(&config, &streams).map_err(|e| e.to_string())?;
        let broadcast = central.ledger.query_bytes(q);
        check(broadcast == (robots - 1) * full_size && broadcast > last_broadcast, || {
            format!("R={robots}: broadcast {broadcast} bytes")
        })?;
        last_broadcast = broadcast;
    }
    Ok(format!("{} bytes per query outside candidate lists for R = 4..32; broadcast (R-1) x 24", fixed.unwrap_or(0)))
}

/// 5. Symmetry, rigid invariance, threshold monotonicity, score = s * g.
fn scoring_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut nonzero = 0;
    for i in 0..1000 {
        let a = random_constellation(&mut rng, FrameId::new(0, 0), 20, 8, false);
        let b = if i % 4 == 0 {
            random_constellation(&mut rng, FrameId::new(1, 0), 20, 8, false)
        } else {
            revisit(&mut rng, &a, FrameId::new(1, 0), 0.05, 8)
        };
        let d = 0.25;
        let ab = pair_score(&a, &b, d);
        let ba = pair_score(&b, &a, d);
        check(ab == ba, || format!("pair {i}: asymmetric {ab:?} vs {ba:?}"))?;
        check(ab.g <= 1.0 && ab.score == ab.s * ab.g, || format!("pair {i}: {ab:?}"))?;
        let moved = transformed(&b, &random_isometry(&mut rng));
        let t = pair_score(&a, &moved, d);
        check((t.score - ab.score).abs() <= 1e-9, || format!("pair {i}: {} after transform, {} before", t.score, ab.score))?;
        let lo: BTreeSet<_> = associate(&a, &b, 0.1).pairs.into_iter().collect();
        let mid: BTreeSet<_> = associate(&a, &b, d).pairs.into_iter().collect();
        let hi: BTreeSet<_> = associate(&a, &b, 1.0).pairs.into_iter().collect();
        check(lo.is_subset(&mid) && mid.is_subset(&hi), || format!("pair {i}: match sets not nested"))?;
        if ab.score > 0.0 {
            nonzero += 1;
        }
    }
    check(nonzero >= 500, || format!("only {nonzero} pairs scored above zero"))?;
    Ok(format!("1000 pairs, {nonzero} with non-zero score"))
}

/// 6. associate() against the brute-force mutual nearest neighbour.
fn association_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut matched = 0;
    for i in 0..1000 {
        let grid = i % 2 == 0;
        let a = random_constellation(&mut rng, FrameId::new(0, 0), 20, 6, grid);
        let b = if i % 3 == 0 {
            random_constellation(&mut rng, FrameId::new(1, 0), 20, 6, grid)
        } else {
            revisit(&mut rng, &a, FrameId::new(1, 0), if grid { 0.0 } else { 0.1 }, 6)
        };
        let d = [0.25, 0.5, 2.0][i % 3];
        let got = associate(&a, &b, d).pairs;
        let want = brute_force_associate(&a, &b, d);
        check(got == want, || format!("instance {i}: {got:?} vs oracle {want:?}"))?;
        matched += got.len();
    }
    Ok(format!("1000 instances, {matched} matches agree"))
}

/// 7. Synthetic precision-recall with default parameters.
fn synthetic_pr() -> Outcome {
    let p = synth_params(0, 20, 3, 0.05, 10);
    let streams = generate_synthetic_world(&p).log.streams();
    let config = FleetConfig::default();
    let central = world_auc(&p, &run_centralized(&config, &streams).map_err(|e| e.to_string())?.records);
    let decentral = world_auc(&p, &run_decentralized(&config, &streams).map_err(|e| e.to_string())?.records);
    let summary = format!("centralized AUC {:.4}, decentralized AUC {:.4}", central.auc, decentral.auc);
    check(central.auc >= 0.95, || format!("{summary}; centralized below 0.95"))?;
    check((decentral.auc - central.auc).abs() <= 0.1 * central.auc, || format!("{summary}; gap above 10%"))?;
    Ok(summary)
}

/// 8. Noiseless revisits give a perfect curve.
fn noiseless_identity() -> Outcome {
    let mut aucs = Vec::new();
    for seed in 0..3 {
        let p = synth_params(seed, 20, 3, 0.0, 10);
        let streams = generate_synthetic_world(&p).log.streams();
        let curve = world_auc(&p, &run_centralized(&FleetConfig::default(), &streams).map_err(|e| e.to_string())?.records);
        check(curve.auc == 1.0, || format!("seed {seed}: AUC {}", curve.auc))?;
        aucs.push(curve.auc);
    }
    Ok(format!("AUC {aucs:?} over 3 seeds"))
}

fn main() -> ExitCode {
    type Criterion = (u32, &'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 8] = [
        (1, "oracle equivalence", oracle_equivalence, Duration::from_secs(10)),
        (2, "funnel monotonicity", funnel_monotonicity, Duration::from_secs(10)),
        (3, "byte exactness", byte_exactness, Duration::from_secs(5)),
        (4, "bandwidth flatness", bandwidth_flatness, Duration::from_secs(10)),
        (5, "scoring properties", scoring_properties, Duration::MAX),
        (6, "association oracle", association_oracle, Duration::MAX),
        (7, "synthetic precision-recall", synthetic_pr, Duration::from_secs(60)),
        (8, "noiseless identity", noiseless_identity, Duration::MAX),
    ];
    let mut failed = 0;
    for (n, name, f, limit) in criteria {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > limit => Err(format!("{msg}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("criterion {n} PASS  {name}: {msg} ({took:.2?})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} FAIL  {name}: {msg} ({took:.2?})");
            }
        }
    }
    println!(
        "criterion 9 NOTE  full-scale office-sequence results need precomputed detections; \
         load them with the detection-log format and run the CLI"
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
