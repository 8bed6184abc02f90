//! Per-second and per-episode scoring, leave-one-subject-out
//! cross-validation and sensor ablation.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::boost::{BoostConfig, TrainedModel};
use crate::config::{Config, OverlapBase, RunManifest};
use crate::data::{derive_episode_labels, LabeledInterval};
use crate::episodes::{covered_seconds, DbscanConfig};
use crate::error::{Error, Result};
use crate::features::FeatureLayout;
use crate::pipeline::{predict_session, train_on, PreparedSession, SessionPrediction};
use crate::signals::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// `hits / total`, or the empty-denominator convention: 1 when the other side
/// is empty too, else 0.
fn ratio(hits: usize, total: usize, other_empty: bool) -> f64 {
    if total == 0 {
        if other_empty { 1.0 } else { 0.0 }
    } else {
        hits as f64 / total as f64
    }
}

impl Metrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp, tp + fn_ == 0);
        let recall = ratio(tp, tp + fn_, tp + fp == 0);
        Self { precision, recall, f1: f1_score(precision, recall), tp, fp, fn_ }
    }
}

pub fn truth_seconds(truth: &[LabeledInterval]) -> BTreeSet<i64> {
    truth.iter().flat_map(|l| covered_seconds(l.start, l.end)).collect()
}

pub fn per_second_metrics(pred: &BTreeSet<i64>, truth: &[LabeledInterval]) -> Metrics {
    let truth = truth_seconds(truth);
    let tp = pred.intersection(&truth).count();
    Metrics::from_counts(tp, pred.len() - tp, truth.len() - tp)
}

fn check_disjoint(list: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut v = list.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in v.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::Overlap { a_start: w[0].0, a_end: w[0].1, b_start: w[1].0, b_end: w[1].1 });
        }
    }
    Ok(v)
}

fn matches(p: (f64, f64), t: (f64, f64), threshold: f64, base: OverlapBase) -> bool {
    let overlap = p.1.min(t.1) - p.0.max(t.0);
    if overlap <= 0.0 {
        return false;
    }
    let denom = match base {
        OverlapBase::Truth => t.1 - t.0,
        OverlapBase::Pred => p.1 - p.0,
        OverlapBase::Min => (t.1 - t.0).min(p.1 - p.0),
    };
    overlap >= threshold * denom
}

/// Episode-level scoring. A prediction with no overlap is always a false
/// positive. In the returned counts `tp` is the number of detected truth
/// episodes, `fp` the unmatched predictions and `fn_` the missed truth
/// episodes; precision uses matched predictions over all predictions.
pub fn per_episode_metrics(pred: &[(f64, f64)], truth: &[(f64, f64)], threshold: f64, base: OverlapBase) -> Result<Metrics> {
    let pred = check_disjoint(pred)?;
    let truth = check_disjoint(truth)?;
    let matched_pred = pred.iter().filter(|&&p| truth.iter().any(|&t| matches(p, t, threshold, base))).count();
    let detected = truth.iter().filter(|&&t| pred.iter().any(|&p| matches(p, t, threshold, base))).count();
    let precision = ratio(matched_pred, pred.len(), truth.is_empty());
    let recall = ratio(detected, truth.len(), pred.is_empty());
    Ok(Metrics {
        precision,
        recall,
        f1: f1_score(precision, recall),
        tp: detected,
        fp: pred.len() - matched_pred,
        fn_: truth.len() - detected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantResult {
    pub participant: String,
    pub second: Metrics,
    pub episode: Metrics,
    pub n_candidates: usize,
    /// No candidates at all; metrics come from the empty-set convention.
    pub flagged: bool,
}

/// Scores one participant's pooled predictions against its chewing labels.
pub fn score_participant(
    participant: &str,
    pred_seconds: &BTreeSet<i64>,
    pred_episodes: &[(f64, f64)],
    chews: &[LabeledInterval],
    n_candidates: usize,
    cfg: &Config,
) -> Result<ParticipantResult> {
    let truth_ep: Vec<(f64, f64)> = derive_episode_labels(chews, cfg.delta)?.iter().map(|e| (e.start, e.end)).collect();
    Ok(ParticipantResult {
        participant: participant.to_string(),
        second: per_second_metrics(pred_seconds, chews),
        episode: per_episode_metrics(pred_episodes, &truth_ep, cfg.overlap_threshold, cfg.overlap_base)?,
        n_candidates,
        flagged: n_candidates == 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub participants: Vec<ParticipantResult>,
    /// Unweighted means of precision, recall and F1; counts are summed.
    pub mean_second: Metrics,
    pub mean_episode: Metrics,
    pub manifest: RunManifest,
    pub manifest_hash: String,
}

fn macro_mean(ms: &[Metrics]) -> Metrics {
    let n = ms.len().max(1) as f64;
    Metrics {
        precision: ms.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: ms.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: ms.iter().map(|m| m.f1).sum::<f64>() / n,
        tp: ms.iter().map(|m| m.tp).sum(),
        fp: ms.iter().map(|m| m.fp).sum(),
        fn_: ms.iter().map(|m| m.fn_).sum(),
    }
}

pub const REPORT_HEADER: &str = "participant,level,precision,recall,f1";

impl EvalReport {
    pub fn new(participants: Vec<ParticipantResult>, manifest: RunManifest) -> Self {
        let sec: Vec<Metrics> = participants.iter().map(|p| p.second).collect();
        let ep: Vec<Metrics> = participants.iter().map(|p| p.episode).collect();
        Self {
            mean_second: macro_mean(&sec),
            mean_episode: macro_mean(&ep),
            manifest_hash: manifest.hash(),
            manifest,
            participants,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{REPORT_HEADER}\n");
        let mut row = |who: &str, level: &str, m: &Metrics| {
            let _ = writeln!(s, "{who},{level},{},{},{}", m.precision, m.recall, m.f1);
        };
        for p in &self.participants {
            row(&p.participant, "second", &p.second);
            row(&p.participant, "episode", &p.episode);
        }
        row("mean", "second", &self.mean_second);
        row("mean", "episode", &self.mean_episode);
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "manifest {}", self.manifest_hash);
        let _ = writeln!(
            s,
            "{:<14} {:<8} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8}",
            "participant", "level", "precision", "recall", "f1", "tp", "fp", "fn"
        );
        let mut row = |who: &str, level: &str, m: &Metrics, note: &str| {
            let _ = writeln!(
                s,
                "{:<14} {:<8} {:>9.4} {:>9.4} {:>9.4} {:>8} {:>8} {:>8}{note}",
                who, level, m.precision, m.recall, m.f1, m.tp, m.fp, m.fn_
            );
        };
        for p in &self.participants {
            let note = if p.flagged { "  (no candidates)" } else { "" };
            row(&p.participant, "second", &p.second, note);
            row(&p.participant, "episode", &p.episode, note);
        }
        row("mean", "second", &self.mean_second, "");
        row("mean", "episode", &self.mean_episode, "");
        s
    }
}

/// Pools predictions across one participant's sessions and scores them.
pub fn score_sessions(
    sessions: &[&PreparedSession],
    preds: &[SessionPrediction],
    dbscan: &DbscanConfig,
    cfg: &Config,
) -> Result<ParticipantResult> {
    let mut seconds = BTreeSet::new();
    let mut episodes = Vec::new();
    let mut chews = Vec::new();
    for (s, p) in sessions.iter().zip(preds) {
        seconds.extend(p.seconds.iter().copied());
        episodes.extend(p.episodes(dbscan, cfg.delta)?.into_iter().map(|e| (e.start, e.end)));
        chews.extend(s.chews.iter().cloned());
    }
    let n_candidates = sessions.iter().map(|s| s.candidates.len()).sum();
    let who = sessions.first().map_or("", |s| s.participant.as_str());
    score_participant(who, &seconds, &episodes, &chews, n_candidates, cfg)
}

/// The selected settings and model of one outer fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub model: TrainedModel,
    pub boost: BoostConfig,
    pub dbscan: DbscanConfig,
}

fn participants_of(sessions: &[&PreparedSession]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    for s in sessions {
        if !ids.contains(&s.participant) {
            ids.push(s.participant.clone());
        }
    }
    ids
}

fn split<'a>(sessions: &[&'a PreparedSession], held_out: &str) -> (Vec<&'a PreparedSession>, Vec<&'a PreparedSession>) {
    sessions.iter().partition(|s| s.participant != held_out)
}

/// Chooses grid settings by an inner leave-one-participant-out loop over
/// `training` alone and fits the final model on all of it. The grid point
/// with the highest mean of per-second and per-episode F1 wins; ties go to
/// the earlier point.
pub fn fit_fold(training: &[&PreparedSession], layout: &FeatureLayout, cfg: &Config) -> Result<FoldModel> {
    let boosts = cfg.classifier_grid();
    let dbscans = cfg.dbscan_grid();
    let inner = participants_of(training);
    let mut best = (boosts[0].clone(), dbscans[0].clone());
    if boosts.len() * dbscans.len() > 1 && inner.len() >= 2 {
        let mut best_score = f64::NEG_INFINITY;
        for b in &boosts {
            let mut scores = vec![0.0; dbscans.len()];
            for who in &inner {
                let (tr, te) = split(training, who);
                let model = train_on(&tr, layout, b)?;
                let preds = te.iter().map(|s| predict_session(&model, s, layout, cfg.threshold)).collect::<Result<Vec<_>>>()?;
                for (k, d) in dbscans.iter().enumerate() {
                    let r = score_sessions(&te, &preds, d, cfg)?;
                    scores[k] += 0.5 * (r.second.f1 + r.episode.f1) / inner.len() as f64;
                }
            }
            for (k, &s) in scores.iter().enumerate() {
                if s > best_score {
                    best_score = s;
                    best = (b.clone(), dbscans[k].clone());
                }
            }
        }
    }
    let model = train_on(training, layout, &best.0)?;
    Ok(FoldModel { model, boost: best.0, dbscan: best.1 })
}

/// Leave-one-subject-out cross-validation over `cfg.sensors`.
pub fn losocv(sessions: &[PreparedSession], cfg: &Config) -> Result<EvalReport> {
    cfg.validate()?;
    let layout = cfg.layout()?;
    let all: Vec<&PreparedSession> = sessions.iter().collect();
    let ids = participants_of(&all);
    if ids.len() < 2 {
        return Err(Error::Config(format!("cross-validation needs at least 2 participants, got {}", ids.len())));
    }
    let results = ids
        .par_iter()
        .map(|who| {
            let (training, held) = split(&all, who);
            let fold = fit_fold(&training, &layout, cfg)?;
            let preds = held.iter().map(|s| predict_session(&fold.model, s, &layout, cfg.threshold)).collect::<Result<Vec<_>>>()?;
            score_sessions(&held, &preds, &fold.dbscan, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(results, RunManifest::new(cfg)))
}

/// Cross-validation with features restricted to `subset`.
pub fn ablate_sensors(sessions: &[PreparedSession], subset: &[Signal], cfg: &Config) -> Result<EvalReport> {
    if !subset.contains(&Signal::Prox) {
        return Err(Error::Config("sensor subset must include prox".into()));
    }
    let cfg = Config { sensors: subset.to_vec(), ..cfg.clone() };
    losocv(sessions, &cfg)
}
