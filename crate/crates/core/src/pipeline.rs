//! Stage glue: session to candidates, features and labels; model output to
//! scored seconds and episodes.

use std::collections::BTreeSet;

use crate::boost::{train, TrainedModel};
use crate::config::Config;
use crate::data::{derive_episode_labels, LabeledInterval, Session};
use crate::episodes::{cluster, covered_seconds, episodes_from_clusters, score_seconds, DbscanConfig, PredictedEpisode, SecondScore};
use crate::error::{Error, Result};
use crate::features::{extract_all, ExtractConfig, FeatureLayout, FeatureMatrix, FeatureRow};
use crate::peaks::find_prominent_peaks;
use crate::periodic::{segment, CandidateSubsequence};
use crate::signals::{derive, DerivedTrace};

/// Everything later stages need from one session. Features use the full
/// layout so any sensor subset can be projected out without re-extraction.
#[derive(Debug, Clone)]
pub struct PreparedSession {
    pub participant: String,
    pub candidates: Vec<CandidateSubsequence<f64>>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub chews: Vec<LabeledInterval>,
}

/// Fraction of `[c1, c2]` covered by the chewing intervals.
pub fn chew_coverage(c1: f64, c2: f64, chews: &[LabeledInterval]) -> f64 {
    if c2 <= c1 {
        return 0.0;
    }
    let covered: f64 = chews.iter().map(|l| (l.end.min(c2) - l.start.max(c1)).max(0.0)).sum();
    (covered / (c2 - c1)).min(1.0)
}

pub fn candidates_for(trace: &DerivedTrace, cfg: &Config) -> Result<Vec<CandidateSubsequence<f64>>> {
    let peaks = find_prominent_peaks(&trace.prox, &trace.t, cfg.min_prominence)?;
    segment(&peaks, &cfg.sweep, cfg.min_len)
}

pub fn extract_config(cfg: &Config, layout: FeatureLayout, utc_offset_s: i64) -> ExtractConfig {
    ExtractConfig { layout, utc_offset_s, min_prominence: cfg.min_prominence, ..Default::default() }
}

pub fn prepare(session: &Session, cfg: &Config) -> Result<PreparedSession> {
    let trace = derive(session)?;
    let candidates = candidates_for(&trace, cfg)?;
    let ecfg = extract_config(cfg, FeatureLayout::full(), session.meta.utc_offset_s);
    let features = extract_all(&trace, &candidates, &ecfg)?.into_iter().map(|f| f.values).collect();
    let chews = session.chew_labels();
    let labels = candidates.iter().map(|c| chew_coverage(c.c1, c.c2, &chews) >= cfg.label_overlap).collect();
    Ok(PreparedSession { participant: session.participant().to_string(), candidates, features, labels, chews })
}

/// Column indices of `to` inside `from`.
pub fn projection(from: &FeatureLayout, to: &FeatureLayout) -> Result<Vec<usize>> {
    to.names()
        .iter()
        .map(|n| from.index_of(n).ok_or_else(|| Error::invalid(format!("feature `{n}` missing from source layout"))))
        .collect()
}

pub fn project_rows(rows: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
}

impl PreparedSession {
    pub fn to_matrix(&self, layout: &FeatureLayout) -> Result<FeatureMatrix> {
        let cols = projection(&FeatureLayout::full(), layout)?;
        let mut m = FeatureMatrix::new(layout.clone());
        for (i, c) in self.candidates.iter().enumerate() {
            m.rows.push(FeatureRow {
                values: cols.iter().map(|&k| self.features[i][k]).collect(),
                c1: c.c1,
                c2: c.c2,
                participant: self.participant.clone(),
                label: Some(self.labels[i]),
            });
        }
        Ok(m)
    }
}

/// Trains on the pooled rows of `sessions` projected onto `layout`.
pub fn train_on(sessions: &[&PreparedSession], layout: &FeatureLayout, boost: &crate::boost::BoostConfig) -> Result<TrainedModel> {
    let cols = projection(&FeatureLayout::full(), layout)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in sessions {
        x.extend(project_rows(&s.features, &cols));
        y.extend_from_slice(&s.labels);
    }
    train(&x, &y, boost, &layout.fingerprint())
}

/// Candidate-level output of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPrediction {
    pub probabilities: Vec<f64>,
    pub positive: Vec<bool>,
    /// Seconds covered by at least one positive candidate.
    pub seconds: BTreeSet<i64>,
    pub scores: Vec<SecondScore>,
}

impl SessionPrediction {
    pub fn episodes(&self, dbscan: &DbscanConfig, delta: f64) -> Result<Vec<PredictedEpisode>> {
        Ok(episodes_from_clusters(&cluster(&self.scores, dbscan)?, delta))
    }
}

pub fn predict_rows(
    model: &TrainedModel,
    candidates: &[CandidateSubsequence<f64>],
    rows: &[Vec<f64>],
    threshold: f64,
) -> Result<SessionPrediction> {
    let probabilities = rows.iter().map(|r| model.predict_proba_values(r)).collect::<Result<Vec<_>>>()?;
    let positive: Vec<bool> = probabilities.iter().map(|&p| p >= threshold).collect();
    Ok(from_decisions(candidates, probabilities, positive))
}

pub fn from_decisions(candidates: &[CandidateSubsequence<f64>], probabilities: Vec<f64>, positive: Vec<bool>) -> SessionPrediction {
    let hits = || candidates.iter().zip(&positive).filter(|(_, &p)| p).map(|(c, _)| (c.c1, c.c2));
    let seconds = hits().flat_map(|(a, b)| covered_seconds(a, b)).collect();
    let scores = score_seconds(hits());
    SessionPrediction { probabilities, positive, seconds, scores }
}

pub fn predict_session(model: &TrainedModel, session: &PreparedSession, layout: &FeatureLayout, threshold: f64) -> Result<SessionPrediction> {
    let cols = projection(&FeatureLayout::full(), layout)?;
    predict_rows(model, &session.candidates, &project_rows(&session.features, &cols), threshold)
}

/// Ground-truth episodes of a prepared session.
pub fn truth_episodes(session: &PreparedSession, delta: f64) -> Result<Vec<LabeledInterval>> {
    derive_episode_labels(&session.chews, delta)
}

impl PreparedSession {
    /// Rebuilds a prepared session from an exported full-layout feature matrix.
    pub fn from_matrix(participant: &str, m: &FeatureMatrix, chews: Vec<LabeledInterval>) -> Result<Self> {
        let full = FeatureLayout::full();
        if m.layout.fingerprint() != full.fingerprint() {
            return Err(Error::LayoutMismatch { expected: full.fingerprint(), actual: m.layout.fingerprint() });
        }
        let col = |n: &str| full.index_of(n).expect("full layout name");
        let (pmin, pmax, eps, len) = (col("p_min"), col("p_max"), col("epsilon"), col("length"));
        let mut out = PreparedSession { participant: participant.to_string(), candidates: vec![], features: vec![], labels: vec![], chews };
        for (i, r) in m.rows.iter().enumerate() {
            let label = r.label.ok_or_else(|| Error::invalid(format!("feature row {} of {participant} has no label", i + 1)))?;
            out.candidates.push(CandidateSubsequence {
                c1: r.c1,
                c2: r.c2,
                p_min: r.values[pmin],
                p_max: r.values[pmax],
                epsilon: r.values[eps],
                length: r.values[len] as usize,
                timestamps: vec![],
            });
            out.features.push(r.values.clone());
            out.labels.push(label);
        }
        Ok(out)
    }
}

pub const PREDICTION_HEADER: &str = "c1_s,c2_s,probability,positive";

pub fn predictions_to_csv(candidates: &[CandidateSubsequence<f64>], pred: &SessionPrediction) -> String {
    let mut out = format!("{PREDICTION_HEADER}\n");
    for ((c, p), pos) in candidates.iter().zip(&pred.probabilities).zip(&pred.positive) {
        out.push_str(&format!("{},{},{},{}\n", c.c1, c.c2, p, u8::from(*pos)));
    }
    out
}

/// `(c1, c2, probability, positive)` rows.
pub fn predictions_from_csv(text: &str) -> Result<Vec<(f64, f64, f64, bool)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PREDICTION_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{PREDICTION_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = raw.split(',').map(str::trim).collect();
        let bad = || Error::Parse { line, msg: format!("bad prediction row `{raw}`") };
        if c.len() != 4 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let pos = match c[3] {
            "1" => true,
            "0" => false,
            _ => return Err(bad()),
        };
        out.push((num(c[0])?, num(c[1])?, num(c[2])?, pos));
    }
    Ok(out)
}

pub const SCORE_HEADER: &str = "second,score";

pub fn scores_to_csv(scores: &[SecondScore]) -> String {
    let mut out = format!("{SCORE_HEADER}\n");
    for s in scores {
        out.push_str(&format!("{},{}\n", s.second, s.score));
    }
    out
}
