//! Fixed-layout feature vectors for candidate chewing subsequences.
//!
//! Each candidate `[c1, c2]` is described over two windows: the chewing
//! window `[c1 - 2, c2 + 2]` and the bite window `[c1 - 2, c1 + 2]`. For every
//! signal and window we compute 30 values (11 statistics, 10 spectral
//! amplitudes, 2 spectrum-shape statistics, 7 time-series counts), followed
//! by the pairwise signal correlations of each window, the four periodic
//! subsequence parameters and the local hour of day. With all four signals
//! that is 4 × 2 × 30 + 2 × 6 + 5 = 257 values.

use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::boost::TrainedModel;
use crate::data::{hour_of_day, SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::peaks::{find_prominent_peaks, DEFAULT_MIN_PROMINENCE};
use crate::periodic::CandidateSubsequence;
use crate::signals::{DerivedTrace, Signal};
use crate::stats;

/// Half-width of the margins around a candidate, seconds.
pub const WINDOW_MARGIN_S: f64 = 2.0;

pub const FREQUENCIES_HZ: [f64; 10] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5];

const STAT_NAMES: [&str; 11] = ["max", "min", "mean", "median", "variance", "rms", "skewness", "kurtosis", "q1", "q3", "iqr"];
const SPECTRUM_SHAPE_NAMES: [&str; 2] = ["spec_skewness", "spec_kurtosis"];
const SERIES_NAMES: [&str; 7] = [
    "count_below_mean",
    "count_above_mean",
    "first_loc_min",
    "first_loc_max",
    "longest_strike_below_mean",
    "longest_strike_above_mean",
    "n_peaks",
];
const TRAILING_NAMES: [&str; 5] = ["p_min", "p_max", "epsilon", "length", "hour_of_day"];

pub const PER_SIGNAL_WINDOW: usize = 30;
pub const FULL_FEATURE_COUNT: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Chewing,
    Bite,
}

impl Window {
    pub const BOTH: [Window; 2] = [Window::Chewing, Window::Bite];

    fn tag(self) -> &'static str {
        match self {
            Window::Chewing => "cw",
            Window::Bite => "bw",
        }
    }
}

/// The two feature windows of a candidate after clipping to the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPair {
    pub cw: (f64, f64),
    pub bw: (f64, f64),
    pub clipped: bool,
}

impl WindowPair {
    pub fn new(c1: f64, c2: f64, span: (f64, f64)) -> Self {
        let cw = (c1 - WINDOW_MARGIN_S, c2 + WINDOW_MARGIN_S);
        let bw = (c1 - WINDOW_MARGIN_S, c1 + WINDOW_MARGIN_S);
        let clip = |w: (f64, f64)| (w.0.max(span.0), w.1.min(span.1));
        let (cwc, bwc) = (clip(cw), clip(bw));
        Self { cw: cwc, bw: bwc, clipped: cwc != cw || bwc != bw }
    }

    pub fn get(&self, w: Window) -> (f64, f64) {
        match w {
            Window::Chewing => self.cw,
            Window::Bite => self.bw,
        }
    }
}

/// Ordered feature names for a chosen set of signals. Proximity is always
/// present since segmentation runs on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureLayout {
    signals: Vec<Signal>,
    names: Vec<String>,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self::full()
    }
}

impl FeatureLayout {
    pub fn full() -> Self {
        Self::with_signals(&Signal::ALL).expect("full layout")
    }

    pub fn with_signals(signals: &[Signal]) -> Result<Self> {
        if !signals.contains(&Signal::Prox) {
            return Err(Error::Config("sensor subset must include prox".into()));
        }
        let signals: Vec<Signal> = Signal::ALL.into_iter().filter(|s| signals.contains(s)).collect();
        let mut names = Vec::new();
        for &s in &signals {
            for w in Window::BOTH {
                let p = format!("{}_{}", s.name(), w.tag());
                names.extend(STAT_NAMES.iter().map(|n| format!("{p}_{n}")));
                names.extend(FREQUENCIES_HZ.iter().map(|f| format!("{p}_fft_{f:.2}hz")));
                names.extend(SPECTRUM_SHAPE_NAMES.iter().map(|n| format!("{p}_{n}")));
                names.extend(SERIES_NAMES.iter().map(|n| format!("{p}_{n}")));
            }
        }
        for w in Window::BOTH {
            for (a, b) in pairs(&signals) {
                names.push(format!("corr_{}_{}_{}", w.tag(), a.name(), b.name()));
            }
        }
        names.extend(TRAILING_NAMES.iter().map(|s| s.to_string()));
        Ok(Self { signals, names })
    }

    /// Recovers the layout whose names match `names` exactly.
    pub fn from_names(names: &[String]) -> Result<Self> {
        let others = [Signal::Ambient, Signal::Lfa, Signal::Energy];
        for mask in 0..8u8 {
            let mut sig = vec![Signal::Prox];
            sig.extend(others.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| *s));
            let layout = Self::with_signals(&sig)?;
            if layout.names == names {
                return Ok(layout);
            }
        }
        Err(Error::invalid("feature header does not match any known layout"))
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Short digest of the ordered names.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for n in &self.names {
            h.update(n.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn pairs(signals: &[Signal]) -> Vec<(Signal, Signal)> {
    let mut out = Vec::new();
    for i in 0..signals.len() {
        for j in i + 1..signals.len() {
            out.push((signals[i], signals[j]));
        }
    }
    out
}

/// Settings shared by every extraction in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub layout: FeatureLayout,
    pub utc_offset_s: i64,
    pub min_prominence: f64,
    pub sample_rate_hz: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            layout: FeatureLayout::full(),
            utc_offset_s: 0,
            min_prominence: DEFAULT_MIN_PROMINENCE,
            sample_rate_hz: SAMPLE_RATE_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub fingerprint: String,
    /// A window was cut short by the trace boundary. Diagnostic only.
    pub clipped: bool,
}

fn index_range(t: &[f64], (lo, hi): (f64, f64)) -> std::ops::Range<usize> {
    let a = t.partition_point(|&x| x < lo);
    let b = t.partition_point(|&x| x <= hi);
    a..b.max(a)
}

fn push_signal_window(out: &mut Vec<f64>, x: &[f64], t: &[f64], cfg: &ExtractConfig) {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = stats::quantile_sorted(&sorted, 0.25);
    let q3 = stats::quantile_sorted(&sorted, 0.75);
    let mean = stats::mean(x);
    out.extend([
        sorted[sorted.len() - 1],
        sorted[0],
        mean,
        stats::quantile_sorted(&sorted, 0.5),
        stats::variance(x),
        stats::rms(x),
        stats::skewness(x),
        stats::kurtosis(x),
        q1,
        q3,
        q3 - q1,
    ]);

    let spectrum: Vec<f64> = FREQUENCIES_HZ.iter().map(|&f| stats::spectral_amplitude(x, cfg.sample_rate_hz, f)).collect();
    out.extend(&spectrum);
    out.push(stats::skewness(&spectrum));
    out.push(stats::kurtosis(&spectrum));

    let n_peaks = if x.len() >= 3 { find_prominent_peaks(x, t, cfg.min_prominence).map(|p| p.len()).unwrap_or(0) } else { 0 };
    out.extend([
        x.iter().filter(|&&v| v < mean).count() as f64,
        x.iter().filter(|&&v| v > mean).count() as f64,
        stats::first_location(x, false),
        stats::first_location(x, true),
        stats::longest_run(x, |v| v < mean) as f64,
        stats::longest_run(x, |v| v > mean) as f64,
        n_peaks as f64,
    ]);
}

/// Feature vector of one candidate in `cfg.layout` order.
pub fn extract(trace: &DerivedTrace, cand: &CandidateSubsequence<f64>, cfg: &ExtractConfig) -> Result<FeatureVector> {
    let err = || Error::EmptyWindow { c1: cand.c1, c2: cand.c2 };
    let span = (*trace.t.first().ok_or_else(err)?, *trace.t.last().ok_or_else(err)?);
    let windows = WindowPair::new(cand.c1, cand.c2, span);
    let ranges = [index_range(&trace.t, windows.cw), index_range(&trace.t, windows.bw)];
    if ranges.iter().any(|r| r.is_empty()) {
        return Err(err());
    }

    let layout = &cfg.layout;
    let mut values = Vec::with_capacity(layout.len());
    for &s in layout.signals() {
        for r in &ranges {
            push_signal_window(&mut values, &trace.signal(s)[r.clone()], &trace.t[r.clone()], cfg);
        }
    }
    for r in &ranges {
        for (a, b) in pairs(layout.signals()) {
            values.push(stats::pearson(&trace.signal(a)[r.clone()], &trace.signal(b)[r.clone()]));
        }
    }
    values.extend([
        cand.p_min,
        cand.p_max,
        cand.epsilon,
        cand.length as f64,
        hour_of_day(cand.c1, cfg.utc_offset_s) as f64,
    ]);
    debug_assert_eq!(values.len(), layout.len());
    Ok(FeatureVector { values, fingerprint: layout.fingerprint(), clipped: windows.clipped })
}

/// Extracts every candidate in parallel, preserving input order.
pub fn extract_all(
    trace: &DerivedTrace,
    cands: &[CandidateSubsequence<f64>],
    cfg: &ExtractConfig,
) -> Result<Vec<FeatureVector>> {
    cands.par_iter().map(|c| extract(trace, c, cfg)).collect()
}

/// Features ordered by how many splits use them, most used first. Features
/// never split on are omitted.
pub fn rank_features(model: &TrainedModel, layout: &FeatureLayout) -> Result<Vec<(String, usize)>> {
    if model.fingerprint != layout.fingerprint() {
        return Err(Error::LayoutMismatch { expected: model.fingerprint.clone(), actual: layout.fingerprint() });
    }
    let counts = model.split_counts();
    let mut ranked: Vec<(usize, usize)> = counts.into_iter().enumerate().filter(|&(_, c)| c > 0).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked.into_iter().map(|(i, c)| (layout.names()[i].clone(), c)).collect())
}

/// One row of a feature matrix with its candidate bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub values: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub participant: String,
    pub label: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub layout: FeatureLayout,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn new(layout: FeatureLayout) -> Self {
        Self { layout, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.layout.names().join(",");
        out.push_str(",c1_s,c2_s,participant,label\n");
        for r in &self.rows {
            for v in &r.values {
                let _ = write!(out, "{v},");
            }
            let label = match r.label {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            let _ = writeln!(out, "{},{},{},{}", r.c1, r.c2, r.participant, label);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines.next().ok_or(Error::Parse { line: 1, msg: "empty feature file".into() })?.1;
        let cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let tail = ["c1_s", "c2_s", "participant", "label"];
        if cols.len() < tail.len() || cols[cols.len() - 4..] != tail {
            return Err(Error::Parse { line: 1, msg: "feature header must end with c1_s,c2_s,participant,label".into() });
        }
        let nf = cols.len() - 4;
        let layout = FeatureLayout::from_names(&cols[..nf]).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
        let mut m = FeatureMatrix::new(layout);
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = raw.split(',').map(str::trim).collect();
            if f.len() != cols.len() {
                return Err(Error::Parse { line, msg: format!("expected {} columns, got {}", cols.len(), f.len()) });
            }
            let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Parse { line, msg: format!("bad number `{s}`") }) };
            let values = f[..nf].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            let label = match f[nf + 3] {
                "1" => Some(true),
                "0" => Some(false),
                "" => None,
                other => return Err(Error::Parse { line, msg: format!("bad label `{other}`") }),
            };
            m.rows.push(FeatureRow { values, c1: num(f[nf])?, c2: num(f[nf + 1])?, participant: f[nf + 2].to_string(), label });
        }
        Ok(m)
    }

    /// Keeps only the columns of `layout`, which must be a sub-layout.
    pub fn project(&self, layout: &FeatureLayout) -> Result<Self> {
        let idx: Vec<usize> = layout
            .names()
            .iter()
            .map(|n| self.layout.index_of(n).ok_or_else(|| Error::invalid(format!("feature `{n}` missing"))))
            .collect::<Result<_>>()?;
        Ok(Self {
            layout: layout.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow { values: idx.iter().map(|&i| r.values[i]).collect(), ..r.clone() })
                .collect(),
        })
    }
}
