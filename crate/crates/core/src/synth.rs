//! Synthetic 20 Hz necklace traces with planted chewing sequences.
//!
//! Each meal is a run of chewing sequences started every `bite_period_s`
//! seconds. A sequence opens with a bite (a tall, wide proximity bump, an
//! ambient-light dip, a forward lean and an acceleration spike) followed
//! 1.75 s later by chews at a fixed period rounded to whole samples, so every
//! chew gap is identical. Chewing stops 5 s before the next bite, which keeps
//! the planted sequences apart under the 3 s annotation rule.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{LabeledInterval, SensorFrame, Session, SessionMeta, SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::signals::Quaternion;

pub const MIN_CHEW_RATE_HZ: f64 = 0.94;
pub const MAX_CHEW_RATE_HZ: f64 = 2.17;

const PROX_BASELINE: f64 = 60.0;
const AMBIENT_BASELINE: f64 = 200.0;
const UPRIGHT_LFA_DEG: f64 = 90.0;
const BITE_LEAD_S: f64 = 1.75;
const CHEW_PAUSE_S: f64 = 5.0;
const CHEW_WIDTH_SAMPLES: f64 = 1.2;
const BITE_WIDTH_SAMPLES: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MealSpec {
    /// Seconds from session start.
    pub start_s: f64,
    pub n_sequences: usize,
    pub chew_rate_hz: f64,
    pub bite_period_s: f64,
}

impl MealSpec {
    pub fn duration(&self) -> f64 {
        self.n_sequences as f64 * self.bite_period_s
    }

    /// Chew period rounded to whole samples.
    pub fn chew_period(&self) -> f64 {
        (SAMPLE_RATE_HZ / self.chew_rate_hz).round() / SAMPLE_RATE_HZ
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfounderKind {
    /// Sustained acceleration oscillation, quiet proximity.
    Walking,
    /// Nods followed by rhythmic jaw peaks, with steady posture and light.
    /// Proximity alone looks much like chewing.
    Talking,
    /// Slow breathing sway below the prominence threshold.
    Rest,
    /// Ambient light near zero; overlapping meals become dark-room eating.
    Dark,
}

impl ConfounderKind {
    pub fn name(self) -> &'static str {
        match self {
            ConfounderKind::Walking => "walking",
            ConfounderKind::Talking => "talking",
            ConfounderKind::Rest => "rest",
            ConfounderKind::Dark => "dark",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [ConfounderKind::Walking, ConfounderKind::Talking, ConfounderKind::Rest, ConfounderKind::Dark]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Confounder {
    pub kind: ConfounderKind,
    pub start_s: f64,
    pub duration_s: f64,
}

/// Per-signal Gaussian noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub prox: f64,
    pub ambient: f64,
    pub lfa_deg: f64,
    pub accel: f64,
}

impl NoiseSpec {
    pub fn medium() -> Self {
        Self { prox: 1.0, ambient: 4.0, lfa_deg: 1.0, accel: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub participant: String,
    pub duration_s: f64,
    pub start_epoch_s: i64,
    pub utc_offset_s: i64,
    pub meals: Vec<MealSpec>,
    pub confounders: Vec<Confounder>,
    pub noise: NoiseSpec,
    /// Chew amplitudes are drawn as U(2, 4) × max(noise.prox, this).
    pub amplitude_floor: f64,
    pub seed: u64,
}

/// 2023-11-14 11:00 UTC.
pub const DEFAULT_START_EPOCH_S: i64 = 1_699_959_600;

impl ScenarioSpec {
    pub fn empty(participant: impl Into<String>, duration_s: f64, seed: u64) -> Self {
        Self {
            participant: participant.into(),
            duration_s,
            start_epoch_s: DEFAULT_START_EPOCH_S,
            utc_offset_s: 0,
            meals: Vec::new(),
            confounders: Vec::new(),
            noise: NoiseSpec::default(),
            amplitude_floor: 3.0,
            seed,
        }
    }

    /// Two hours with three ten-minute meals and walking, talking and rest
    /// bouts in between. Chew rates and confounder placement vary with the
    /// seed.
    pub fn three_meals(participant: impl Into<String>, seed: u64, noise: NoiseSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_3ea1);
        let mut spec = Self::empty(participant, 7200.0, seed);
        spec.noise = noise;
        for (i, start) in [600.0, 3000.0, 5400.0].into_iter().enumerate() {
            spec.meals.push(MealSpec {
                start_s: start + rng.random_range(-120.0..120.0f64).round(),
                n_sequences: 15,
                chew_rate_hz: [1.2, 1.5, 1.8][i] + rng.random_range(-0.15..0.15),
                bite_period_s: 40.0,
            });
        }
        let jitter = |rng: &mut ChaCha8Rng| rng.random_range(-60.0..60.0f64).round();
        let bouts = [
            (ConfounderKind::Walking, 1500.0, 300.0),
            (ConfounderKind::Talking, 2100.0, 420.0),
            (ConfounderKind::Rest, 3900.0, 400.0),
            (ConfounderKind::Talking, 4500.0, 420.0),
            (ConfounderKind::Walking, 6400.0, 300.0),
        ];
        for (kind, start, dur) in bouts {
            spec.confounders.push(Confounder { kind, start_s: start + jitter(&mut rng), duration_s: dur });
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::Config("scenario duration must be positive".into()));
        }
        let mut meals: Vec<&MealSpec> = self.meals.iter().collect();
        meals.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        for m in &meals {
            if !(MIN_CHEW_RATE_HZ..=MAX_CHEW_RATE_HZ).contains(&m.chew_rate_hz) {
                return Err(Error::Config(format!("chew rate {} Hz outside [0.94, 2.17]", m.chew_rate_hz)));
            }
            if m.bite_period_s < BITE_LEAD_S + CHEW_PAUSE_S + 3.0 * m.chew_period() {
                return Err(Error::Config(format!("bite period {} s too short for chewing", m.bite_period_s)));
            }
            if m.start_s < BITE_LEAD_S || m.start_s + m.duration() > self.duration_s {
                return Err(Error::Config(format!("meal at {} s does not fit in the session", m.start_s)));
            }
        }
        for w in meals.windows(2) {
            if w[1].start_s < w[0].start_s + w[0].duration() {
                return Err(Error::Overlap {
                    a_start: w[0].start_s,
                    a_end: w[0].start_s + w[0].duration(),
                    b_start: w[1].start_s,
                    b_end: w[1].start_s + w[1].duration(),
                });
            }
        }
        for n in [self.noise.prox, self.noise.ambient, self.noise.lfa_deg, self.noise.accel] {
            if !(n >= 0.0) {
                return Err(Error::Config("noise levels must be non-negative".into()));
            }
        }
        Ok(())
    }

    /// Parses the flat `key = value` scenario format. `meal` and the
    /// confounder keys may repeat.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::empty("p01", 7200.0, 0);
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (k, v) = l.split_once('=').ok_or(Error::Parse { line, msg: "expected key = value".into() })?;
            let (k, v) = (k.trim(), v.trim());
            let bad = || Error::Parse { line, msg: format!("bad value for `{k}`: `{v}`") };
            let nums = || -> Result<Vec<f64>> { v.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect() };
            match k {
                "participant" => spec.participant = v.to_string(),
                "duration_s" => spec.duration_s = v.parse().map_err(|_| bad())?,
                "start_epoch_s" => spec.start_epoch_s = v.parse().map_err(|_| bad())?,
                "utc_offset_s" => spec.utc_offset_s = v.parse().map_err(|_| bad())?,
                "seed" => spec.seed = v.parse().map_err(|_| bad())?,
                "amplitude_floor" => spec.amplitude_floor = v.parse().map_err(|_| bad())?,
                "noise_prox" => spec.noise.prox = v.parse().map_err(|_| bad())?,
                "noise_ambient" => spec.noise.ambient = v.parse().map_err(|_| bad())?,
                "noise_lfa" => spec.noise.lfa_deg = v.parse().map_err(|_| bad())?,
                "noise_accel" => spec.noise.accel = v.parse().map_err(|_| bad())?,
                "meal" => {
                    let n = nums()?;
                    if n.len() != 4 {
                        return Err(bad());
                    }
                    spec.meals.push(MealSpec { start_s: n[0], n_sequences: n[1] as usize, chew_rate_hz: n[2], bite_period_s: n[3] });
                }
                other => match ConfounderKind::parse(other) {
                    Some(kind) => {
                        let n = nums()?;
                        if n.len() != 2 {
                            return Err(bad());
                        }
                        spec.confounders.push(Confounder { kind, start_s: n[0], duration_s: n[1] });
                    }
                    None => return Err(Error::Config(format!("line {line}: unknown scenario key `{other}`"))),
                },
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = &self.noise;
        out.push_str(&format!(
            "participant = {}\nduration_s = {}\nstart_epoch_s = {}\nutc_offset_s = {}\nseed = {}\namplitude_floor = {}\nnoise_prox = {}\nnoise_ambient = {}\nnoise_lfa = {}\nnoise_accel = {}\n",
            self.participant, self.duration_s, self.start_epoch_s, self.utc_offset_s, self.seed, self.amplitude_floor, n.prox, n.ambient, n.lfa_deg, n.accel
        ));
        for m in &self.meals {
            out.push_str(&format!("meal = {},{},{},{}\n", m.start_s, m.n_sequences, m.chew_rate_hz, m.bite_period_s));
        }
        for c in &self.confounders {
            out.push_str(&format!("{} = {},{}\n", c.kind.name(), c.start_s, c.duration_s));
        }
        out
    }
}

/// Planted events in session-relative seconds.
#[derive(Debug, Default)]
struct Plan {
    /// (time, amplitude, width in samples)
    prox_bumps: Vec<(f64, f64, f64)>,
    bites: Vec<f64>,
    meal_spans: Vec<(f64, f64)>,
    chew_sequences: Vec<(f64, f64)>,
}

fn plan_meals(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Plan {
    let unit = spec.noise.prox.max(spec.amplitude_floor);
    let mut plan = Plan::default();
    for m in &spec.meals {
        let period = m.chew_period();
        plan.meal_spans.push((m.start_s - BITE_LEAD_S, m.start_s + m.duration()));
        for k in 0..m.n_sequences {
            let bite = m.start_s - BITE_LEAD_S + k as f64 * m.bite_period_s;
            let first = bite + BITE_LEAD_S;
            let chew_span = m.bite_period_s - BITE_LEAD_S - CHEW_PAUSE_S;
            let n_chews = (chew_span / period).floor() as usize + 1;
            let bite_amp = 2.0 * unit * rng.random_range(2.0..4.0);
            plan.prox_bumps.push((bite, bite_amp, BITE_WIDTH_SAMPLES));
            plan.bites.push(bite);
            for j in 0..n_chews {
                let a = unit * rng.random_range(2.0..4.0);
                plan.prox_bumps.push((first + j as f64 * period, a, CHEW_WIDTH_SAMPLES));
            }
            plan.chew_sequences.push((first, first + (n_chews - 1) as f64 * period));
        }
    }
    plan
}

fn plan_talking(c: &Confounder, unit: f64, rng: &mut ChaCha8Rng, plan: &mut Plan) {
    let end = c.start_s + c.duration_s;
    let mut t = c.start_s;
    while t < end {
        // a head nod, then a phrase of evenly spaced syllables
        plan.prox_bumps.push((t, 2.0 * unit * rng.random_range(2.0..4.0), BITE_WIDTH_SAMPLES));
        t += BITE_LEAD_S;
        let base = rng.random_range(0.47..1.05);
        let n = rng.random_range(8..30);
        for _ in 0..n {
            if t >= end {
                break;
            }
            plan.prox_bumps.push((t, unit * rng.random_range(2.0..4.0), CHEW_WIDTH_SAMPLES));
            t += base * (1.0 + rng.random_range(-0.03..0.03));
        }
        t += rng.random_range(4.0..10.0);
    }
}

fn gauss(dt: f64, width: f64) -> f64 {
    (-(dt * dt) / (2.0 * width * width)).exp()
}

fn in_any(t: f64, spans: &[(f64, f64)]) -> bool {
    spans.iter().any(|&(a, b)| t >= a && t <= b)
}

/// Generates the trace and the exact chewing-sequence labels.
pub fn generate(spec: &ScenarioSpec) -> Result<(Session, Vec<LabeledInterval>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut plan = plan_meals(spec, &mut rng);
    let unit = spec.noise.prox.max(spec.amplitude_floor);
    for c in spec.confounders.iter().filter(|c| c.kind == ConfounderKind::Talking) {
        plan_talking(c, unit, &mut rng, &mut plan);
    }
    let span_of = |k: ConfounderKind| -> Vec<(f64, f64)> {
        spec.confounders.iter().filter(|c| c.kind == k).map(|c| (c.start_s, c.start_s + c.duration_s)).collect()
    };
    let (walking, rest, dark) = (span_of(ConfounderKind::Walking), span_of(ConfounderKind::Rest), span_of(ConfounderKind::Dark));

    let n = (spec.duration_s * SAMPLE_RATE_HZ).floor() as usize + 1;
    let dt = 1.0 / SAMPLE_RATE_HZ;
    let mut prox = vec![PROX_BASELINE; n];
    let mut ambient = vec![AMBIENT_BASELINE; n];
    let mut lean = vec![0.0f64; n];
    let mut accel = vec![[0.0, 0.0, 1.0]; n];

    for &(t0, amp, width) in &plan.prox_bumps {
        let c = (t0 * SAMPLE_RATE_HZ).round() as i64;
        let reach = (4.0 * width).ceil() as i64;
        for i in (c - reach).max(0)..=(c + reach).min(n as i64 - 1) {
            prox[i as usize] += amp * gauss((i - c) as f64, width);
        }
    }
    for &tb in &plan.bites {
        let c = (tb * SAMPLE_RATE_HZ).round() as i64;
        let reach = (3.0 * SAMPLE_RATE_HZ) as i64;
        for i in (c - reach).max(0)..=(c + reach).min(n as i64 - 1) {
            let d = (i - c) as f64 * dt;
            ambient[i as usize] -= 120.0 * gauss(d, 0.5);
            lean[i as usize] += 13.0 * gauss(d, 0.8);
            accel[i as usize][0] += 0.5 * gauss(d, 0.25);
        }
    }
    for i in 0..n {
        let t = i as f64 * dt;
        if in_any(t, &plan.meal_spans) {
            lean[i] += 5.0;
        }
        if in_any(t, &walking) {
            accel[i][2] += 0.35 * (2.0 * PI * 1.9 * t).sin();
            accel[i][0] += 0.2 * (2.0 * PI * 0.95 * t).sin();
            prox[i] += 0.8 * (2.0 * PI * 1.9 * t).sin();
        }
        if in_any(t, &rest) {
            prox[i] += 1.0 * (2.0 * PI * 0.25 * t).sin();
        }
    }

    let noise = |sd: f64| Normal::new(0.0, sd.max(f64::MIN_POSITIVE)).expect("finite sd");
    let (np, na, nl, nacc) = (noise(spec.noise.prox), noise(spec.noise.ambient), noise(spec.noise.lfa_deg), noise(spec.noise.accel));
    let mut frames = Vec::with_capacity(n);
    let t0_ms = spec.start_epoch_s * 1000;
    for i in 0..n {
        let t = i as f64 * dt;
        let mut p = prox[i];
        let mut a = ambient[i];
        let mut lfa = UPRIGHT_LFA_DEG - lean[i];
        let mut acc = accel[i];
        if spec.noise.prox > 0.0 {
            p += np.sample(&mut rng);
        }
        if spec.noise.ambient > 0.0 {
            a += na.sample(&mut rng);
        }
        if spec.noise.lfa_deg > 0.0 {
            lfa += nl.sample(&mut rng);
        }
        if spec.noise.accel > 0.0 {
            for v in &mut acc {
                *v += nacc.sample(&mut rng);
            }
        }
        if in_any(t, &dark) {
            a = 2.0 + 0.05 * a.abs().min(100.0);
        }
        let q = Quaternion::from_axis_angle([1.0, 0.0, 0.0], lfa.clamp(0.0, 180.0).to_radians());
        frames.push(SensorFrame {
            t: (t0_ms + i as i64 * 50) as f64 / 1000.0,
            prox: p,
            ambient: a.max(0.0),
            q,
            accel: acc,
        });
    }

    let start = spec.start_epoch_s as f64;
    let labels = plan
        .chew_sequences
        .iter()
        .map(|&(a, b)| LabeledInterval::chew(start + round_ms(a), start + round_ms(b), spec.participant.clone()))
        .collect::<Result<Vec<_>>>()?;
    let meta = SessionMeta { participant: spec.participant.clone(), study_arm: Some("synthetic".into()), day_index: 0, utc_offset_s: spec.utc_offset_s };
    let session = Session::new(meta, frames)?.with_labels(labels.clone())?;
    Ok((session, labels))
}

/// Snaps a planted event time onto the 50 ms sample grid.
fn round_ms(t: f64) -> f64 {
    (t * SAMPLE_RATE_HZ).round() / SAMPLE_RATE_HZ
}

/// Chewing-sequence labels with a bimodal gap distribution: gaps inside a
/// meal are drawn from `[5, within_max]`, gaps between meals from
/// `[between_min, 2 × between_min]`.
pub fn bimodal_chew_labels(
    participant: &str,
    seed: u64,
    n_meals: usize,
    sequences_per_meal: usize,
    within_max: f64,
    between_min: f64,
) -> Result<Vec<LabeledInterval>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut t = 0.0;
    for m in 0..n_meals {
        if m > 0 {
            t += rng.random_range(between_min..2.0 * between_min);
        }
        for k in 0..sequences_per_meal {
            if k > 0 {
                t += rng.random_range(5.0..within_max);
            }
            let len = rng.random_range(10.0..90.0);
            out.push(LabeledInterval::chew(t, t + len, participant)?);
            t += len;
        }
    }
    Ok(out)
}
