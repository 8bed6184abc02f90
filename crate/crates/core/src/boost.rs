//! Second-order gradient boosting of regression trees on the logistic loss.
//!
//! Each round fits one depth-limited tree to the per-row gradient and hessian
//! of the weighted logistic loss. A split is taken when its structure gain
//!
//! ```text
//! ½ [ G_L² / (H_L + λ) + G_R² / (H_R + λ) − G² / (H + λ) ] − γ
//! ```
//!
//! is positive and both children keep at least `min_child_weight` hessian
//! mass. Leaves output `−η G / (H + λ)`. Splits are searched exactly over
//! the sorted unique values of every feature; ties go to the lower feature
//! index, then the lower threshold.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::periodic::CandidateSubsequence;

#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    pub eta: f64,
    pub max_depth: usize,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub n_rounds: usize,
    pub seed: u64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Weight of positive rows; `None` uses negative count / positive count.
    pub pos_weight: Option<f64>,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            eta: 0.3,
            max_depth: 4,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 0.8,
            n_rounds: 200,
            seed: 0,
            lambda: 1.0,
            pos_weight: None,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must be in (0, 1]");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if !(self.gamma >= 0.0) {
            return bad("gamma must be non-negative");
        }
        if !(self.min_child_weight >= 0.0) {
            return bad("min_child_weight must be non-negative");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if self.n_rounds < 1 {
            return bad("n_rounds must be at least 1");
        }
        if !(self.lambda >= 0.0) {
            return bad("lambda must be non-negative");
        }
        if let Some(w) = self.pos_weight {
            if !(w > 0.0 && w.is_finite()) {
                return bad("pos_weight must be positive");
            }
        }
        Ok(())
    }
}

/// Tree node. Leaves have `feature == None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub leaf_weight: f64,
}

impl Node {
    fn leaf(w: f64) -> Self {
        Self { feature: None, threshold: 0.0, left: 0, right: 0, leaf_weight: w }
    }
}

/// Regression tree stored breadth first; node 0 is the root. Rows with
/// `x[feature] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            match n.feature {
                None => return n.leaf_weight,
                Some(f) => i = if x[f] < n.threshold { n.left } else { n.right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i].feature {
                None => 0,
                Some(_) => 1 + go(t, t.nodes[i].left).max(go(t, t.nodes[i].right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(self, 0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub trees: Vec<Tree>,
    /// Initial margin (log-odds).
    pub base_score: f64,
    pub config: BoostConfig,
    /// Fingerprint of the feature layout the model was trained on.
    pub fingerprint: String,
    pub n_features: usize,
    /// Weighted mean training loss before the first round and after each one.
    pub train_loss: Vec<f64>,
}

pub fn sigmoid(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

fn logistic_loss(margin: f64, y: f64) -> f64 {
    // log(1 + e^m) - y m, stable for large |m|
    let softplus = if margin > 0.0 { margin + (-margin).exp().ln_1p() } else { margin.exp().ln_1p() };
    softplus - y * margin
}

fn mean_loss(margins: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let tw: f64 = w.iter().sum();
    margins.iter().zip(y).zip(w).map(|((&m, &y), &w)| w * logistic_loss(m, y)).sum::<f64>() / tw
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn leaf_score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Structure gain of splitting a node with totals `(g, h)` into a left part
/// `(gl, hl)` and the remainder.
pub fn split_gain(gl: f64, hl: f64, g: f64, h: f64, lambda: f64, gamma: f64) -> f64 {
    let (gr, hr) = (g - gl, h - hl);
    0.5 * (leaf_score(gl, hl, lambda) + leaf_score(gr, hr, lambda) - leaf_score(g, h, lambda)) - gamma
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m > a {
        m
    } else {
        b
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    sorted: &'a [Vec<u32>],
    cfg: &'a BoostConfig,
}

struct OpenNode {
    id: usize,
    g: f64,
    h: f64,
}

impl Builder<'_> {
    /// Grows one tree level by level. `node_of[r]` is the open node row `r`
    /// currently sits in, or `usize::MAX` when the row is out of the sample
    /// or already in a finished leaf.
    fn grow(&self, grad: &[f64], hess: &[f64], in_sample: &[bool]) -> Tree {
        let n = grad.len();
        let cfg = self.cfg;
        let mut tree = Tree::default();
        let mut node_of = vec![usize::MAX; n];
        let (mut g0, mut h0) = (0.0, 0.0);
        for r in 0..n {
            if in_sample[r] {
                node_of[r] = 0;
                g0 += grad[r];
                h0 += hess[r];
            }
        }
        tree.nodes.push(Node::leaf(0.0));
        let mut open = vec![OpenNode { id: 0, g: g0, h: h0 }];
        // slot of each open node id in `open`
        let mut slot_of: Vec<usize> = vec![0];

        for depth in 0..=cfg.max_depth {
            if open.is_empty() {
                break;
            }
            let best = if depth < cfg.max_depth { self.best_splits(grad, hess, &node_of, &open, &slot_of) } else { vec![None; open.len()] };

            let mut next_open = Vec::new();
            let mut new_slot: Vec<usize> = vec![usize::MAX; tree.nodes.len() + 2 * open.len()];
            for (k, node) in open.iter().enumerate() {
                match best[k] {
                    Some(s) => {
                        let (l, r) = (tree.nodes.len(), tree.nodes.len() + 1);
                        tree.nodes.push(Node::leaf(0.0));
                        tree.nodes.push(Node::leaf(0.0));
                        let n = &mut tree.nodes[node.id];
                        n.feature = Some(s.feature);
                        n.threshold = s.threshold;
                        n.left = l;
                        n.right = r;
                        new_slot[l] = next_open.len();
                        next_open.push(OpenNode { id: l, g: 0.0, h: 0.0 });
                        new_slot[r] = next_open.len();
                        next_open.push(OpenNode { id: r, g: 0.0, h: 0.0 });
                    }
                    None => {
                        tree.nodes[node.id].leaf_weight = -cfg.eta * node.g / (node.h + cfg.lambda);
                    }
                }
            }
            for r in 0..n {
                let id = node_of[r];
                if id == usize::MAX {
                    continue;
                }
                let nd = &tree.nodes[id];
                node_of[r] = match nd.feature {
                    None => usize::MAX,
                    Some(f) => {
                        let child = if self.x[r][f] < nd.threshold { nd.left } else { nd.right };
                        let o = &mut next_open[new_slot[child]];
                        o.g += grad[r];
                        o.h += hess[r];
                        child
                    }
                };
            }
            new_slot.truncate(tree.nodes.len());
            open = next_open;
            slot_of = new_slot;
        }
        tree
    }

    fn best_splits(
        &self,
        grad: &[f64],
        hess: &[f64],
        node_of: &[usize],
        open: &[OpenNode],
        slot_of: &[usize],
    ) -> Vec<Option<SplitCandidate>> {
        let cfg = self.cfg;
        let k = open.len();
        let mut best: Vec<Option<SplitCandidate>> = vec![None; k];
        let mut gl = vec![0.0; k];
        let mut hl = vec![0.0; k];
        let mut last: Vec<Option<f64>> = vec![None; k];
        for (f, order) in self.sorted.iter().enumerate() {
            gl.iter_mut().for_each(|v| *v = 0.0);
            hl.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = None);
            for &r in order {
                let r = r as usize;
                let id = node_of[r];
                if id == usize::MAX {
                    continue;
                }
                let s = slot_of[id];
                let v = self.x[r][f];
                if let Some(prev) = last[s] {
                    if v > prev {
                        let node = &open[s];
                        let (hl_s, hr_s) = (hl[s], node.h - hl[s]);
                        if hl_s >= cfg.min_child_weight && hr_s >= cfg.min_child_weight {
                            let gain = split_gain(gl[s], hl_s, node.g, node.h, cfg.lambda, cfg.gamma);
                            if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                                best[s] = Some(SplitCandidate { feature: f, threshold: midpoint(prev, v), gain });
                            }
                        }
                    }
                }
                gl[s] += grad[r];
                hl[s] += hess[r];
                last[s] = Some(v);
            }
        }
        best
    }
}

/// Fits a boosted ensemble. `fingerprint` identifies the feature layout of
/// the columns of `x`.
pub fn train(x: &[Vec<f64>], y: &[bool], cfg: &BoostConfig, fingerprint: &str) -> Result<TrainedModel> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { what: "feature rows and labels", left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::invalid("training needs at least two rows"));
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let nf = x[0].len();
    for (r, row) in x.iter().enumerate() {
        if row.len() != nf {
            return Err(Error::LengthMismatch { what: "feature row width", left: row.len(), right: nf });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: r, col: c });
        }
    }

    let pos_weight = cfg.pos_weight.unwrap_or(n_neg as f64 / n_pos as f64);
    let yf: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let w: Vec<f64> = y.iter().map(|&v| if v { pos_weight } else { 1.0 }).collect();
    let base_score = (pos_weight * n_pos as f64 / n_neg as f64).ln();

    let sorted: Vec<Vec<u32>> = (0..nf)
        .map(|f| {
            let mut idx: Vec<u32> = (0..x.len() as u32).collect();
            idx.sort_by(|&a, &b| x[a as usize][f].total_cmp(&x[b as usize][f]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let builder = Builder { x, sorted: &sorted, cfg };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut margins = vec![base_score; x.len()];
    let mut train_loss = vec![mean_loss(&margins, &yf, &w)];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut grad = vec![0.0; x.len()];
    let mut hess = vec![0.0; x.len()];
    let mut in_sample = vec![true; x.len()];
    for _ in 0..cfg.n_rounds {
        for r in 0..x.len() {
            let p = sigmoid(margins[r]);
            grad[r] = w[r] * (p - yf[r]);
            hess[r] = w[r] * p * (1.0 - p);
        }
        if cfg.subsample < 1.0 {
            in_sample.iter_mut().for_each(|s| *s = rng.random::<f64>() < cfg.subsample);
        }
        let tree = builder.grow(&grad, &hess, &in_sample);
        for (m, row) in margins.iter_mut().zip(x) {
            *m += tree.predict(row);
        }
        train_loss.push(mean_loss(&margins, &yf, &w));
        trees.push(tree);
    }
    let mut config = cfg.clone();
    config.pos_weight = Some(pos_weight);
    Ok(TrainedModel { trees, base_score, config, fingerprint: fingerprint.to_string(), n_features: nf, train_loss })
}

impl TrainedModel {
    pub fn predict_margin(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    /// Probability for raw values already in this model's layout.
    pub fn predict_proba_values(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::LengthMismatch { what: "feature vector width", left: x.len(), right: self.n_features });
        }
        Ok(sigmoid(self.predict_margin(x)))
    }

    /// Number of split nodes using each feature.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_features];
        for t in &self.trees {
            for n in &t.nodes {
                if let Some(f) = n.feature {
                    c[f] += 1;
                }
            }
        }
        c
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::from("# gbtree model\nversion = 1\n");
        let _ = writeln!(out, "fingerprint = {}", self.fingerprint);
        let _ = writeln!(out, "n_features = {}", self.n_features);
        let _ = writeln!(out, "base_score = {}", self.base_score);
        let _ = writeln!(out, "eta = {}", c.eta);
        let _ = writeln!(out, "max_depth = {}", c.max_depth);
        let _ = writeln!(out, "gamma = {}", c.gamma);
        let _ = writeln!(out, "min_child_weight = {}", c.min_child_weight);
        let _ = writeln!(out, "subsample = {}", c.subsample);
        let _ = writeln!(out, "n_rounds = {}", c.n_rounds);
        let _ = writeln!(out, "seed = {}", c.seed);
        let _ = writeln!(out, "lambda = {}", c.lambda);
        match c.pos_weight {
            Some(w) => writeln!(out, "pos_weight = {w}"),
            None => writeln!(out, "pos_weight = auto"),
        }
        .ok();
        let loss: Vec<String> = self.train_loss.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "train_loss = {}", loss.join(";"));
        let _ = writeln!(out, "trees = {}", self.trees.len());
        for (i, t) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "tree {i}");
            for (id, n) in t.nodes.iter().enumerate() {
                match n.feature {
                    Some(f) => writeln!(out, "{id},{f},{},{},{},0", n.threshold, n.left, n.right),
                    None => writeln!(out, "{id},-1,0,-1,-1,{}", n.leaf_weight),
                }
                .ok();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let mut header = std::collections::BTreeMap::new();
        let mut n_trees = None;
        for (idx, l) in lines.by_ref() {
            let (k, v) = l.split_once('=').ok_or(Error::Parse { line: idx + 1, msg: "expected key = value".into() })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k == "trees" {
                n_trees = Some(v.parse::<usize>().map_err(|_| Error::Parse { line: idx + 1, msg: "bad tree count".into() })?);
                break;
            }
            header.insert(k, (idx + 1, v));
        }
        let n_trees = n_trees.ok_or(Error::Parse { line: 0, msg: "missing `trees` line".into() })?;
        let get = |k: &str| -> Result<&(usize, String)> {
            header.get(k).ok_or_else(|| Error::Parse { line: 0, msg: format!("missing `{k}`") })
        };
        fn num<T: std::str::FromStr>(e: &(usize, String)) -> Result<T> {
            e.1.parse().map_err(|_| Error::Parse { line: e.0, msg: format!("bad value `{}`", e.1) })
        }
        if get("version")?.1 != "1" {
            return Err(Error::Parse { line: get("version")?.0, msg: "unsupported model version".into() });
        }
        let pw = get("pos_weight")?;
        let config = BoostConfig {
            eta: num(get("eta")?)?,
            max_depth: num(get("max_depth")?)?,
            gamma: num(get("gamma")?)?,
            min_child_weight: num(get("min_child_weight")?)?,
            subsample: num(get("subsample")?)?,
            n_rounds: num(get("n_rounds")?)?,
            seed: num(get("seed")?)?,
            lambda: num(get("lambda")?)?,
            pos_weight: if pw.1 == "auto" { None } else { Some(num(pw)?) },
        };
        let loss = get("train_loss")?;
        let train_loss = if loss.1.is_empty() {
            Vec::new()
        } else {
            loss.1
                .split(';')
                .map(|s| s.parse().map_err(|_| Error::Parse { line: loss.0, msg: format!("bad loss `{s}`") }))
                .collect::<Result<_>>()?
        };
        let n_features: usize = num(get("n_features")?)?;

        let mut trees: Vec<Tree> = Vec::with_capacity(n_trees);
        for (idx, l) in lines {
            let line = idx + 1;
            if let Some(rest) = l.strip_prefix("tree ") {
                if rest.trim().parse::<usize>().ok() != Some(trees.len()) {
                    return Err(Error::Parse { line, msg: "tree blocks out of order".into() });
                }
                trees.push(Tree::default());
                continue;
            }
            let tree = trees.last_mut().ok_or(Error::Parse { line, msg: "node row before first tree".into() })?;
            let c: Vec<&str> = l.split(',').map(str::trim).collect();
            if c.len() != 6 {
                return Err(Error::Parse { line, msg: "node rows have 6 columns".into() });
            }
            let p = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Parse { line, msg: format!("bad value `{s}`") }) };
            let id = p(c[0])? as usize;
            if id != tree.nodes.len() {
                return Err(Error::Parse { line, msg: "node ids must be consecutive".into() });
            }
            let feature = p(c[1])?;
            let node = if feature < 0.0 {
                Node::leaf(p(c[5])?)
            } else {
                let f = feature as usize;
                if f >= n_features {
                    return Err(Error::Parse { line, msg: format!("feature index {f} out of range") });
                }
                Node { feature: Some(f), threshold: p(c[2])?, left: p(c[3])? as usize, right: p(c[4])? as usize, leaf_weight: 0.0 }
            };
            tree.nodes.push(node);
        }
        if trees.len() != n_trees {
            return Err(Error::Parse { line: 0, msg: format!("expected {n_trees} trees, found {}", trees.len()) });
        }
        for t in &trees {
            for n in &t.nodes {
                if n.feature.is_some() && (n.left >= t.nodes.len() || n.right >= t.nodes.len()) {
                    return Err(Error::Parse { line: 0, msg: "child index out of range".into() });
                }
            }
        }
        Ok(Self {
            trees,
            base_score: num(get("base_score")?)?,
            config,
            fingerprint: get("fingerprint")?.1.clone(),
            n_features,
            train_loss,
        })
    }
}

/// Probability that `x` is a chewing sequence.
pub fn predict_proba(model: &TrainedModel, x: &FeatureVector) -> Result<f64> {
    if x.fingerprint != model.fingerprint {
        return Err(Error::LayoutMismatch { expected: model.fingerprint.clone(), actual: x.fingerprint.clone() });
    }
    model.predict_proba_values(&x.values)
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Classified {
    pub candidate: CandidateSubsequence<f64>,
    pub positive: bool,
    pub probability: f64,
}

/// Thresholds candidate probabilities; `probability >= threshold` is positive.
pub fn classify_candidates(
    model: &TrainedModel,
    items: &[(CandidateSubsequence<f64>, FeatureVector)],
    threshold: f64,
) -> Result<Vec<Classified>> {
    items
        .iter()
        .map(|(c, fv)| {
            let p = predict_proba(model, fv)?;
            Ok(Classified { candidate: c.clone(), positive: p >= threshold, probability: p })
        })
        .collect()
}
