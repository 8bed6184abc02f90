//! Acceptance criteria 1-12. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any FAIL.

use std::collections::{BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chewseg::boost::{train, BoostConfig, TrainedModel};
use chewseg::config::{Config, OverlapBase};
use chewseg::data::{derive_episode_labels, inter_sequence_gap_cdf, LabeledInterval};
use chewseg::episodes::{cluster, DbscanConfig, SecondScore};
use chewseg::eval::{ablate_sensors, losocv, per_episode_metrics, per_second_metrics, EvalReport};
use chewseg::features::{extract, ExtractConfig, FeatureLayout, FULL_FEATURE_COUNT};
use chewseg::periodic::{longest_abs_periodic, CandidateSubsequence};
use chewseg::pipeline::{prepare, PreparedSession};
use chewseg::signals::{lean_forward_angle, DerivedTrace, Quaternion, Signal};
use chewseg::synth::{bimodal_chew_labels, generate, NoiseSpec, ScenarioSpec};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg.into()) }
}

// 1 -------------------------------------------------------------------------

/// Longest chain (in gaps) over every index subset.
fn brute_longest(t: &[f64], lo: f64, hi: f64) -> usize {
    let n = t.len();
    let mut best = 0;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if idx.windows(2).all(|w| {
            let g = t[w[1]] - t[w[0]];
            g >= lo && g <= hi
        }) {
            best = best.max(idx.len() - 1);
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..2000 {
        let n = rng.random_range(1..=10);
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..8.0)).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        let lo = rng.random_range(0.2..1.5);
        let hi = lo * rng.random_range(1.0..1.6);
        let got = longest_abs_periodic(&t, lo, hi).map_err(|e| e.to_string())?;
        let len = got.first().map_or(0, |s| s.length);
        if len != brute_longest(&t, lo, hi) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(mismatches == 0, format!("{mismatches} mismatches"))?;
    ensure(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("2000 arrays, 0 mismatches, {secs:.3} s"))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let got = longest_abs_periodic(&[0.0, 0.8, 0.9, 1.9], 0.9, 1.1).map_err(|e| e.to_string())?;
    ensure(got.len() == 1, format!("{} optima", got.len()))?;
    ensure(got[0].timestamps == vec![0.0, 0.9, 1.9] && got[0].length == 2, format!("{:?}", got[0]))?;
    Ok("(0, 0.9, 1.9), length 2".into())
}

// 3 -------------------------------------------------------------------------

fn peak_train(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += rng.random_range(0.3..1.7);
            t
        })
        .collect()
}

/// Mean seconds per call, cycling through `inputs` so the branch predictor
/// cannot learn one array.
fn per_call_seconds(inputs: &[Vec<f64>], calls: usize) -> f64 {
    let start = Instant::now();
    for k in 0..calls {
        let t = &inputs[k % inputs.len()];
        std::hint::black_box(longest_abs_periodic(std::hint::black_box(t), 0.6, 0.72).unwrap());
    }
    start.elapsed().as_secs_f64() / calls as f64
}

fn criterion_3() -> Outcome {
    let small: Vec<Vec<f64>> = (0..10).map(|k| peak_train(10_000, 30 + k)).collect();
    let large = vec![peak_train(100_000, 3)];
    per_call_seconds(&small, 20);
    per_call_seconds(&large, 2);
    let mut ts = f64::INFINITY;
    let mut tl = f64::INFINITY;
    for _ in 0..5 {
        ts = ts.min(per_call_seconds(&small, 200));
        tl = tl.min(per_call_seconds(&large, 20));
    }
    let ratio = tl / ts;
    ensure((7.0..=13.0).contains(&ratio), format!("ratio {ratio:.2}"))?;
    Ok(format!("runtime ratio {ratio:.2} ({:.3} ms vs {:.3} ms, min of 5)", tl * 1e3, ts * 1e3))
}

// 4 -------------------------------------------------------------------------

/// Tilt from the third row of the rotation matrix.
fn tilt_reference(q: [f64; 4]) -> f64 {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (x, y) = (q[1] / n, q[2] / n);
    (1.0 - 2.0 * (x * x + y * y)).clamp(-1.0, 1.0).acos().to_degrees()
}

fn criterion_4() -> Outcome {
    let lfa = |q: Quaternion<f64>| lean_forward_angle(q).map_err(|e| e.to_string());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (q, want) in [
        (Quaternion::identity(), 0.0),
        (Quaternion::new(h, h, 0.0, 0.0), 90.0),
        (Quaternion::new(0.0, 1.0, 0.0, 0.0), 180.0),
    ] {
        let got = lfa(q)?;
        ensure((got - want).abs() <= 1e-9, format!("{q:?}: {got} vs {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let q = Quaternion::new(c[0], c[1], c[2], c[3]).normalized().map_err(|e| e.to_string())?;
        let base = lfa(q)?;
        let yaw = Quaternion::from_axis_angle([0.0, 0.0, 1.0], rng.random_range(-3.2..3.2));
        for other in [lfa(-q)?, lfa(yaw.mul(&q))?, tilt_reference(c)] {
            worst = worst.max((other - base).abs());
        }
    }
    ensure(worst <= 1e-9, format!("max deviation {worst:e} deg"))?;
    Ok(format!("reference angles exact to 1e-9 deg; 1000 random quaternions, max deviation {worst:.1e} deg"))
}

// 5 -------------------------------------------------------------------------

fn random_trace(rng: &mut ChaCha8Rng, t0: f64, n: usize) -> DerivedTrace {
    let mut tr = DerivedTrace::default();
    let phase: f64 = rng.random_range(0.0..6.0);
    for i in 0..n {
        let s = i as f64 / 20.0;
        tr.t.push(t0 + s);
        tr.prox.push(60.0 + 8.0 * (2.0 * std::f64::consts::PI * 1.4 * s + phase).sin().max(0.0).powi(6) + rng.random_range(-1.0..1.0));
        tr.ambient.push(200.0 + 30.0 * (0.3 * s).sin() + rng.random_range(-4.0..4.0));
        tr.lfa.push(80.0 + 5.0 * (0.7 * s).cos() + rng.random_range(-1.0..1.0));
        tr.energy.push(1.0 + 0.2 * (2.0 * std::f64::consts::PI * 2.5 * s).sin() + rng.random_range(-0.05..0.05));
    }
    tr
}

fn offset_invariant_names() -> Vec<String> {
    let mut out = Vec::new();
    for w in ["cw", "bw"] {
        for stat in ["variance", "iqr", "skewness", "kurtosis", "count_below_mean", "count_above_mean"] {
            out.push(format!("prox_{w}_{stat}"));
        }
        for f in [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5] {
            out.push(format!("prox_{w}_fft_{f:.2}hz"));
        }
    }
    out
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t0 = 1_700_000_000.0;
    let trace = random_trace(&mut rng, t0, 4000);
    let cfg = ExtractConfig::default();
    let layout = FeatureLayout::full();
    let hour = layout.index_of("hour_of_day").ok_or("no hour feature")?;
    let invariant: Vec<usize> = offset_invariant_names().iter().map(|n| layout.index_of(n).ok_or(n.clone())).collect::<Result<_, _>>()?;
    for k in 0..100 {
        // window edges kept off the 50 ms grid
        let c1 = t0 + rng.random_range(0..3000) as f64 * 0.05 + 0.013;
        let c2 = c1 + rng.random_range(1.0..40.0);
        let cand = CandidateSubsequence { c1, c2, p_min: 0.5, p_max: 0.6, epsilon: 0.2, length: 5, timestamps: vec![] };
        let fv = extract(&trace, &cand, &cfg).map_err(|e| e.to_string())?;
        ensure(fv.values.len() == FULL_FEATURE_COUNT, format!("window {k}: {} features", fv.values.len()))?;
        ensure(fv.values.iter().all(|v| v.is_finite()), format!("window {k}: non-finite feature"))?;

        let hours = rng.random_range(1..24);
        let shift = 3600.0 * hours as f64;
        let mut moved = trace.clone();
        moved.t.iter_mut().for_each(|t| *t += shift);
        let mc = CandidateSubsequence { c1: c1 + shift, c2: c2 + shift, ..cand.clone() };
        let mv = extract(&moved, &mc, &cfg).map_err(|e| e.to_string())?;
        for i in 0..fv.values.len() {
            if i == hour {
                ensure(mv.values[i] == ((fv.values[i] as i64 + hours) % 24) as f64, format!("window {k}: hour not shifted"))?;
            } else {
                ensure(mv.values[i] == fv.values[i], format!("window {k}: `{}` changed under translation", layout.names()[i]))?;
            }
        }

        let mut lifted = trace.clone();
        lifted.prox.iter_mut().for_each(|v| *v += 37.25);
        let lv = extract(&lifted, &cand, &cfg).map_err(|e| e.to_string())?;
        for &i in &invariant {
            let (a, b) = (fv.values[i], lv.values[i]);
            ensure((a - b).abs() <= 1e-7 * (1.0 + a.abs()), format!("window {k}: `{}` {a} vs {b} under offset", layout.names()[i]))?;
        }
    }
    Ok(format!("100 windows: {FULL_FEATURE_COUNT} finite features, translation and offset properties hold"))
}

// 6 -------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..200 {
        let row: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        if (row[0] - 0.2).abs() < 0.05 || (row[1] + 0.3).abs() < 0.05 {
            continue;
        }
        y.push(row[0] > 0.2 && row[1] < -0.3);
        x.push(row);
    }
    let accuracy = |m: &TrainedModel| {
        x.iter().zip(&y).filter(|(r, &l)| (m.predict_proba_values(r).unwrap() >= 0.5) == l).count() as f64 / y.len() as f64
    };
    let cfg = BoostConfig { n_rounds: 10, ..Default::default() };
    let m = train(&x, &y, &cfg, "toy").map_err(|e| e.to_string())?;
    let acc = accuracy(&m);
    ensure(acc == 1.0, format!("accuracy {acc} after 10 rounds"))?;

    let full = BoostConfig { n_rounds: 50, subsample: 1.0, ..Default::default() };
    let m = train(&x, &y, &full, "toy").map_err(|e| e.to_string())?;
    ensure(m.train_loss.windows(2).all(|w| w[1] <= w[0]), "training loss increased")?;

    let text = m.to_text();
    let back = TrainedModel::from_text(&text).map_err(|e| e.to_string())?;
    ensure(back.to_text() == text, "serialization changed bytes")?;
    ensure(x.iter().all(|r| back.predict_margin(r) == m.predict_margin(r)), "reloaded predictions differ")?;
    Ok(format!("accuracy 1.0 in 10 rounds, loss non-increasing over {} rounds, text round-trip identical", full.n_rounds))
}

// 7 -------------------------------------------------------------------------

/// Quadratic DBSCAN: cores chain through eps-neighbourhoods, each other
/// point joins its nearest core within eps (earlier on a tie).
fn naive_dbscan(scores: &[SecondScore], cfg: &DbscanConfig) -> BTreeSet<Vec<i64>> {
    let mut merged: std::collections::BTreeMap<i64, u64> = Default::default();
    for s in scores {
        *merged.entry(s.second).or_default() += s.score as u64;
    }
    let pts: Vec<(i64, u64)> = merged.into_iter().collect();
    let n = pts.len();
    let near = |i: usize, j: usize| ((pts[i].0 - pts[j].0).abs() as f64) <= cfg.eps;
    let core: Vec<bool> = (0..n)
        .map(|i| {
            let mass: u64 = (0..n).filter(|&j| near(i, j)).map(|j| if cfg.use_score_weight { pts[j].1 } else { 1 }).sum();
            mass >= cfg.min_pts as u64
        })
        .collect();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || label[s] != usize::MAX {
            continue;
        }
        let mut queue = VecDeque::from([s]);
        label[s] = next;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if core[j] && label[j] == usize::MAX && near(i, j) {
                    label[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let mut best: Option<(i64, usize)> = None;
        for j in (0..n).filter(|&j| core[j] && near(i, j)) {
            let d = (pts[i].0 - pts[j].0).abs();
            if best.is_none_or(|(bd, bj)| d < bd || (d == bd && j < bj)) {
                best = Some((d, j));
            }
        }
        if let Some((_, j)) = best {
            label[i] = label[j];
        }
    }
    (0..next).map(|c| (0..n).filter(|&i| label[i] == c).map(|i| pts[i].0).collect()).collect()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let n = rng.random_range(0..150);
        let span = rng.random_range(10..2000);
        let scores: Vec<SecondScore> =
            (0..n).map(|_| SecondScore { second: rng.random_range(0..span), score: rng.random_range(0..6) }).collect();
        let cfg = DbscanConfig {
            eps: rng.random_range(1..40) as f64 + if rng.random_bool(0.3) { 0.5 } else { 0.0 },
            min_pts: rng.random_range(1..25),
            use_score_weight: rng.random_bool(0.5),
        };
        let got: BTreeSet<Vec<i64>> = cluster(&scores, &cfg).map_err(|e| e.to_string())?.into_iter().map(|c| c.seconds()).collect();
        ensure(got == naive_dbscan(&scores, &cfg), format!("case {case}: cluster sets differ"))?;
    }
    Ok("500 random sets, identical clusters".into())
}

// 8 -------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let chew = |a: f64, b: f64| LabeledInterval::chew(a, b, "p").unwrap();
    let truth = [chew(0.0, 99.0)];
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let m = per_second_metrics(&(0..=99).collect(), &truth);
    ensure((m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0), "identity per-second")?;
    let m = per_second_metrics(&(0..=49).collect(), &truth);
    ensure(m.precision == 1.0 && m.recall == 0.5 && close(m.f1, 2.0 / 3.0), "half per-second")?;
    let m = per_second_metrics(&(0..=49).chain(200..=249).collect(), &truth);
    ensure((m.precision, m.recall, m.f1) == (0.5, 0.5, 0.5), "split per-second")?;

    let ep = |p: &[(f64, f64)], t: &[(f64, f64)], th: f64| per_episode_metrics(p, t, th, OverlapBase::Truth).unwrap();
    let m = ep(&[(0.0, 100.0)], &[(0.0, 100.0)], 0.5);
    ensure((m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0), "identity per-episode")?;
    let m = ep(&[(0.0, 50.0)], &[(0.0, 100.0)], 0.5);
    ensure(m.tp == 1 && m.precision == 1.0, "boundary overlap at threshold")?;
    let m = ep(&[(0.0, 100.0), (500.0, 600.0)], &[(0.0, 100.0)], 0.5);
    ensure(m.precision == 0.5 && m.recall == 1.0 && close(m.f1, 2.0 / 3.0), "extra prediction per-episode")?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let intervals = |rng: &mut ChaCha8Rng| {
        let mut t = 0.0;
        (0..rng.random_range(0..8))
            .map(|_| {
                t += rng.random_range(0.0..300.0);
                let a = t;
                t += rng.random_range(1.0..400.0);
                (a, t)
            })
            .collect::<Vec<_>>()
    };
    for case in 0..300 {
        let (p, t) = (intervals(&mut rng), intervals(&mut rng));
        for base in [OverlapBase::Truth, OverlapBase::Pred, OverlapBase::Min] {
            let ms: Vec<_> = (0..=10).map(|k| per_episode_metrics(&p, &t, k as f64 / 10.0, base).unwrap()).collect();
            ensure(
                ms.windows(2).all(|w| w[1].precision <= w[0].precision && w[1].recall <= w[0].recall),
                format!("case {case}: threshold monotonicity broken"),
            )?;
        }
    }
    Ok("hand examples exact; monotone over 11 thresholds on 300 random cases".into())
}

// 9, 10 --------------------------------------------------------------------

fn corpus(n: usize, noise: NoiseSpec, seed: u64, cfg: &Config) -> Vec<PreparedSession> {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let spec = ScenarioSpec::three_meals(format!("p{:02}", i + 1), seed + i as u64, noise);
            let (session, _) = generate(&spec).unwrap();
            prepare(&session, cfg).unwrap()
        })
        .collect()
}

struct Corpora {
    clean: Vec<PreparedSession>,
    medium: Vec<PreparedSession>,
    clean_report: EvalReport,
    medium_report: EvalReport,
    seconds: f64,
}

fn corpora() -> Corpora {
    let start = Instant::now();
    let cfg = Config::default();
    let clean = corpus(3, NoiseSpec::default(), 100, &cfg);
    let medium = corpus(5, NoiseSpec::medium(), 200, &cfg);
    let clean_report = losocv(&clean, &cfg).unwrap();
    let medium_report = losocv(&medium, &cfg).unwrap();
    Corpora { clean, medium, clean_report, medium_report, seconds: start.elapsed().as_secs_f64() }
}

fn criterion_9(c: &Corpora) -> Outcome {
    for p in &c.clean_report.participants {
        ensure(p.second.f1 >= 0.90, format!("clean {}: per-second F1 {:.4}", p.participant, p.second.f1))?;
        ensure(p.episode.f1 == 1.0, format!("clean {}: per-episode F1 {:.4}", p.participant, p.episode.f1))?;
    }
    let med = &c.medium_report;
    ensure(med.mean_episode.f1 >= 0.8, format!("medium per-episode F1 {:.4}", med.mean_episode.f1))?;
    ensure(c.seconds < 60.0, format!("took {:.1} s", c.seconds))?;
    Ok(format!(
        "clean per-second F1 {:.4}, per-episode F1 {:.4}; medium per-second F1 {:.4}, per-episode F1 {:.4}; {:.1} s",
        c.clean_report.mean_second.f1, c.clean_report.mean_episode.f1, med.mean_second.f1, med.mean_episode.f1, c.seconds
    ))
}

fn criterion_10(c: &Corpora) -> Outcome {
    let cfg = Config::default();
    let mut notes = Vec::new();
    for (name, sessions, full) in [("clean", &c.clean, &c.clean_report), ("medium", &c.medium, &c.medium_report)] {
        let prox = ablate_sensors(sessions, &[Signal::Prox], &cfg).map_err(|e| e.to_string())?;
        ensure(full.mean_second.f1 >= prox.mean_second.f1, format!("{name}: per-second {:.4} < {:.4}", full.mean_second.f1, prox.mean_second.f1))?;
        ensure(full.mean_episode.f1 >= prox.mean_episode.f1, format!("{name}: per-episode {:.4} < {:.4}", full.mean_episode.f1, prox.mean_episode.f1))?;
        notes.push(format!("{name} {:.4} >= {:.4}", full.mean_second.f1, prox.mean_second.f1));
    }
    Ok(format!("per-second F1 all sensors vs prox only: {}", notes.join(", ")))
}

// 11 ------------------------------------------------------------------------

fn criterion_11() -> Outcome {
    let (lo, hi) = (540.0, 1100.0);
    let chews = bimodal_chew_labels("p", 11, 6, 12, 500.0, hi).map_err(|e| e.to_string())?;
    let cdf = inter_sequence_gap_cdf(&chews).map_err(|e| e.to_string())?;
    let inside = cdf.gaps().iter().filter(|&&g| g >= lo && g < hi).count();
    ensure(inside == 0, format!("{inside} gaps inside the plateau"))?;
    let reference = derive_episode_labels(&chews, lo).map_err(|e| e.to_string())?;
    ensure(reference.len() == 6, format!("{} episodes", reference.len()))?;
    let mut delta = lo;
    let mut checked = 0;
    while delta < hi {
        ensure(derive_episode_labels(&chews, delta).map_err(|e| e.to_string())? == reference, format!("episodes change at delta {delta}"))?;
        delta += 3.5;
        checked += 1;
    }
    Ok(format!("no gap mass in [{lo}, {hi}); episodes identical for {checked} delta values"))
}

// 12 ------------------------------------------------------------------------

fn criterion_12() -> Outcome {
    use chewseg::data::{ingest_sensor_csv, read_label_csv, LABEL_HEADER, SENSOR_HEADER};
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sensors = dir.path().join("P07.day1.csv");
    let labels = dir.path().join("labels.csv");
    let rows = [
        "1600000000000,81,120,1,0,0,0,0.01,-0.02,0.99",
        "1600000000050,83,118,0.9999,0.01,0,0,0.02,-0.01,1.01",
        "1600000000100,80,121,0.9998,0.02,0,0,0.0,0.0,1.0",
    ];
    std::fs::write(&sensors, format!("{SENSOR_HEADER}\n{}\n", rows.join("\n"))).map_err(|e| e.to_string())?;
    std::fs::write(&labels, format!("{LABEL_HEADER}\nP07,chew,1600000000.0,1600000000.1\n")).map_err(|e| e.to_string())?;
    let s = ingest_sensor_csv(&sensors).map_err(|e| e.to_string())?;
    let l = read_label_csv(&labels).map_err(|e| e.to_string())?;
    let s = s.with_labels(l).map_err(|e| e.to_string())?;
    ensure(s.frames.len() == 3 && s.participant() == "P07", "schema ingest")?;
    Ok("study headline figures need the unreleased study dataset and are reference values only; study CSV schema ingests unchanged".into())
}

fn run(n: usize, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(msg) => {
            println!("criterion {n:>2}: PASS  {msg}  [{secs:.2} s]");
            true
        }
        Err(msg) => {
            println!("criterion {n:>2}: FAIL  {msg}  [{secs:.2} s]");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run(1, criterion_1);
    ok &= run(2, criterion_2);
    ok &= run(3, criterion_3);
    ok &= run(4, criterion_4);
    ok &= run(5, criterion_5);
    ok &= run(6, criterion_6);
    ok &= run(7, criterion_7);
    ok &= run(8, criterion_8);
    let c = corpora();
    ok &= run(9, || criterion_9(&c));
    ok &= run(10, || criterion_10(&c));
    ok &= run(11, criterion_11);
    ok &= run(12, criterion_12);
    if !ok {
        std::process::exit(1);
    }
}
