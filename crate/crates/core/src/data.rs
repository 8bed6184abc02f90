//! Core records, sensor/label CSV ingest and episode-label derivation.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signals::Quaternion;

/// Nominal sampling rate of the necklace sensors.
pub const SAMPLE_RATE_HZ: f64 = 20.0;

/// Default merge gap between chewing sequences of one eating episode.
pub const DEFAULT_DELTA_S: f64 = 900.0;

/// Sample intervals longer than this multiple of the nominal period are gaps.
const GAP_FACTOR: f64 = 1.5;

/// Quaternion norms further than this from 1 are rejected on ingest.
const QUAT_NORM_TOLERANCE: f64 = 0.1;

pub const SENSOR_HEADER: &str = "t_ms,prox,ambient,qw,qx,qy,qz,ax,ay,az";
pub const LABEL_HEADER: &str = "participant,kind,start_s,end_s";

/// One 20 Hz sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    /// Seconds since epoch, millisecond resolution.
    pub t: f64,
    pub prox: f64,
    pub ambient: f64,
    pub q: Quaternion<f64>,
    /// Acceleration in g.
    pub accel: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntervalKind {
    ChewingSequence,
    EatingEpisode,
}

impl IntervalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IntervalKind::ChewingSequence => "chew",
            IntervalKind::EatingEpisode => "episode",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "chew" => Some(IntervalKind::ChewingSequence),
            "episode" => Some(IntervalKind::EatingEpisode),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInterval {
    pub start: f64,
    pub end: f64,
    pub kind: IntervalKind,
    pub participant: String,
}

impl LabeledInterval {
    pub fn new(start: f64, end: f64, kind: IntervalKind, participant: impl Into<String>) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::invalid(format!("interval needs start < end, got ({start}, {end})")));
        }
        Ok(Self { start, end, kind, participant: participant.into() })
    }

    pub fn chew(start: f64, end: f64, participant: impl Into<String>) -> Result<Self> {
        Self::new(start, end, IntervalKind::ChewingSequence, participant)
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Sampling gaps found while ingesting a sensor log. Gaps are reported, never
/// filled in.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GapReport {
    pub count: usize,
    pub max_gap_s: f64,
    /// Rows dropped because their quaternion norm was too far from 1.
    pub rejected_rows: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionMeta {
    pub participant: String,
    pub study_arm: Option<String>,
    pub day_index: u32,
    /// Offset of the participant's local time from UTC, used for hour-of-day.
    pub utc_offset_s: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub meta: SessionMeta,
    pub frames: Vec<SensorFrame>,
    pub labels: Vec<LabeledInterval>,
    pub gaps: GapReport,
}

impl Session {
    /// Builds a session from already ordered frames.
    pub fn new(meta: SessionMeta, frames: Vec<SensorFrame>) -> Result<Self> {
        for (i, w) in frames.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(Error::NotIncreasing { index: i + 1 });
            }
        }
        let gaps = gap_report(&frames);
        Ok(Self { meta, frames, labels: Vec::new(), gaps })
    }

    /// Attaches ground truth. Chewing-sequence labels must not overlap and
    /// every label must lie inside the recorded span.
    pub fn with_labels(mut self, mut labels: Vec<LabeledInterval>) -> Result<Self> {
        labels.sort_by(|a, b| a.kind.cmp(&b.kind).then(a.start.total_cmp(&b.start)));
        if let Some((lo, hi)) = self.span() {
            for l in &labels {
                if l.start < lo || l.end > hi {
                    return Err(Error::invalid(format!(
                        "label ({}, {}) outside session span ({lo}, {hi})",
                        l.start, l.end
                    )));
                }
            }
        } else if !labels.is_empty() {
            return Err(Error::invalid("labels given for an empty session"));
        }
        check_non_overlapping(labels.iter().filter(|l| l.kind == IntervalKind::ChewingSequence))?;
        self.labels = labels;
        Ok(self)
    }

    pub fn participant(&self) -> &str {
        &self.meta.participant
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.frames.first()?.t, self.frames.last()?.t))
    }

    pub fn chew_labels(&self) -> Vec<LabeledInterval> {
        self.labels.iter().filter(|l| l.kind == IntervalKind::ChewingSequence).cloned().collect()
    }

    /// Ground-truth episodes derived from the chewing-sequence labels.
    pub fn episode_labels(&self, delta: f64) -> Result<Vec<LabeledInterval>> {
        derive_episode_labels(&self.chew_labels(), delta)
    }
}

fn gap_report(frames: &[SensorFrame]) -> GapReport {
    let limit = GAP_FACTOR / SAMPLE_RATE_HZ;
    let mut report = GapReport::default();
    for w in frames.windows(2) {
        let dt = w[1].t - w[0].t;
        if dt > limit {
            report.count += 1;
            report.max_gap_s = report.max_gap_s.max(dt);
        }
    }
    report
}

fn check_non_overlapping<'a>(it: impl Iterator<Item = &'a LabeledInterval>) -> Result<()> {
    let mut prev: Option<&LabeledInterval> = None;
    for l in it {
        if let Some(p) = prev {
            if l.start < p.end {
                return Err(Error::Overlap { a_start: p.start, a_end: p.end, b_start: l.start, b_end: l.end });
            }
        }
        prev = Some(l);
    }
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Participant id implied by a file name such as `p01.sensor.csv`.
pub fn participant_from_path(path: &Path) -> String {
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("unknown");
    name.split('.').next().unwrap_or(name).to_string()
}

/// Reads a sensor CSV, taking the participant id from the file name.
pub fn ingest_sensor_csv(path: impl AsRef<Path>) -> Result<Session> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let meta = SessionMeta { participant: participant_from_path(path), ..Default::default() };
    parse_sensor_csv(&text, meta)
}

pub fn parse_sensor_csv(text: &str, meta: SessionMeta) -> Result<Session> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SENSOR_HEADER => {}
        Some((_, h)) => {
            return Err(Error::Parse { line: 1, msg: format!("expected header `{SENSOR_HEADER}`, got `{}`", h.trim()) })
        }
        None => return Err(Error::Parse { line: 1, msg: "empty file".into() }),
    }

    let mut frames = Vec::new();
    let mut rejected = 0;
    let mut prev_ms: Option<i64> = None;
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').map(str::trim).collect();
        if cols.len() != 10 {
            return Err(Error::Parse { line, msg: format!("expected 10 columns, got {}", cols.len()) });
        }
        let t_ms: i64 = cols[0]
            .parse()
            .map_err(|_| Error::Parse { line, msg: format!("bad t_ms `{}`", cols[0]) })?;
        let mut v = [0.0f64; 9];
        for (k, c) in cols[1..].iter().enumerate() {
            let x: f64 = c.parse().map_err(|_| Error::Parse { line, msg: format!("bad number `{c}`") })?;
            if !x.is_finite() {
                return Err(Error::Parse { line, msg: format!("non-finite value `{c}`") });
            }
            v[k] = x;
        }
        if let Some(p) = prev_ms {
            if t_ms <= p {
                return Err(Error::NonMonotonic { line, prev_ms: p, next_ms: t_ms });
            }
        }
        let q = Quaternion::new(v[2], v[3], v[4], v[5]);
        if (q.norm() - 1.0).abs() > QUAT_NORM_TOLERANCE {
            rejected += 1;
            continue;
        }
        prev_ms = Some(t_ms);
        frames.push(SensorFrame {
            t: t_ms as f64 / 1000.0,
            prox: v[0],
            ambient: v[1],
            q: q.normalized()?,
            accel: [v[6], v[7], v[8]],
        });
    }
    let mut session = Session::new(meta, frames)?;
    session.gaps.rejected_rows = rejected;
    Ok(session)
}

pub fn write_sensor_csv(frames: &[SensorFrame]) -> String {
    let mut out = String::with_capacity(64 * (frames.len() + 1));
    out.push_str(SENSOR_HEADER);
    out.push('\n');
    for f in frames {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            (f.t * 1000.0).round() as i64,
            f.prox,
            f.ambient,
            f.q.w,
            f.q.x,
            f.q.y,
            f.q.z,
            f.accel[0],
            f.accel[1],
            f.accel[2]
        );
    }
    out
}

pub fn read_label_csv(path: impl AsRef<Path>) -> Result<Vec<LabeledInterval>> {
    parse_label_csv(&read_to_string(path.as_ref())?)
}

pub fn parse_label_csv(text: &str) -> Result<Vec<LabeledInterval>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == LABEL_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{LABEL_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::Parse { line, msg: format!("expected 4 columns, got {}", cols.len()) });
        }
        let kind = IntervalKind::parse(cols[1])
            .ok_or_else(|| Error::Parse { line, msg: format!("unknown kind `{}`", cols[1]) })?;
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse { line, msg: format!("bad number `{s}`") })
        };
        let (start, end) = (num(cols[2])?, num(cols[3])?);
        let l = LabeledInterval::new(start, end, kind, cols[0])
            .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        out.push(l);
    }
    Ok(out)
}

pub fn write_label_csv(labels: &[LabeledInterval]) -> String {
    let mut out = String::from(LABEL_HEADER);
    out.push('\n');
    for l in labels {
        let _ = writeln!(out, "{},{},{},{}", l.participant, l.kind.as_str(), l.start, l.end);
    }
    out
}

/// Merges chewing sequences whose gap is at most `delta` into eating episodes.
pub fn derive_episode_labels(chews: &[LabeledInterval], delta: f64) -> Result<Vec<LabeledInterval>> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("delta must be positive, got {delta}")));
    }
    check_non_overlapping(chews.iter())?;
    let mut out: Vec<LabeledInterval> = Vec::new();
    for c in chews {
        match out.last_mut() {
            Some(ep) if c.start - ep.end <= delta => ep.end = ep.end.max(c.end),
            _ => out.push(LabeledInterval {
                start: c.start,
                end: c.end,
                kind: IntervalKind::EatingEpisode,
                participant: c.participant.clone(),
            }),
        }
    }
    Ok(out)
}

/// Empirical CDF of the gaps between consecutive chewing sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCdf {
    /// `(gap seconds, cumulative fraction)`, ascending, one row per distinct gap.
    pub rows: Vec<(f64, f64)>,
    gaps: Vec<f64>,
}

impl GapCdf {
    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    /// Fraction of gaps strictly inside `(lo, hi)`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let n = self.gaps.iter().filter(|&&g| g > lo && g < hi).count();
        n as f64 / self.gaps.len() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("gap_s,cumulative_fraction\n");
        for (g, f) in &self.rows {
            let _ = writeln!(out, "{g},{f}");
        }
        out
    }
}

pub fn inter_sequence_gap_cdf(chews: &[LabeledInterval]) -> Result<GapCdf> {
    if chews.len() < 2 {
        return Err(Error::invalid("gap CDF needs at least two intervals"));
    }
    GapCdf::from_gaps(chews.windows(2).map(|w| w[1].start - w[0].end).collect())
}

impl GapCdf {
    /// Builds the CDF from raw gaps, for example pooled over participants.
    pub fn from_gaps(mut gaps: Vec<f64>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::invalid("gap CDF needs at least one gap"));
        }
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len() as f64;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (i, &g) in gaps.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match rows.last_mut() {
                Some(last) if last.0 == g => last.1 = frac,
                _ => rows.push((g, frac)),
            }
        }
        Ok(GapCdf { rows, gaps })
    }
}

/// Local hour of day (0..=23) of an epoch timestamp.
pub fn hour_of_day(t: f64, utc_offset_s: i64) -> u32 {
    let local = t.floor() as i64 + utc_offset_s;
    (local.rem_euclid(86_400) / 3600) as u32
}
