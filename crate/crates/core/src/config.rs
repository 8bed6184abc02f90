//! Flat `key = value` run configuration and the run manifest.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::boost::{BoostConfig, DEFAULT_THRESHOLD};
use crate::data::DEFAULT_DELTA_S;
use crate::episodes::DbscanConfig;
use crate::error::{Error, Result};
use crate::features::FeatureLayout;
use crate::peaks::DEFAULT_MIN_PROMINENCE;
use crate::periodic::{BoundMode, SweepConfig, DEFAULT_MIN_LEN};
use crate::signals::Signal;

/// Which duration the episode overlap is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverlapBase {
    #[default]
    Truth,
    Pred,
    Min,
}

impl OverlapBase {
    pub fn name(self) -> &'static str {
        match self {
            OverlapBase::Truth => "truth",
            OverlapBase::Pred => "pred",
            OverlapBase::Min => "min",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [OverlapBase::Truth, OverlapBase::Pred, OverlapBase::Min].into_iter().find(|b| b.name() == s)
    }
}

/// Every tunable of a run. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub min_prominence: f64,
    pub sweep: SweepConfig<f64>,
    pub min_len: usize,
    /// Fraction of a candidate's span that must lie inside labeled chewing
    /// for it to count as a positive training example.
    pub label_overlap: f64,
    pub boost: BoostConfig,
    pub dbscan: DbscanConfig,
    pub delta: f64,
    pub threshold: f64,
    pub overlap_threshold: f64,
    pub overlap_base: OverlapBase,
    pub sensors: Vec<Signal>,
    pub utc_offset_s: i64,
    pub seed: u64,
    pub grid_eta: Vec<f64>,
    pub grid_max_depth: Vec<usize>,
    pub grid_n_rounds: Vec<usize>,
    pub grid_dbscan_eps: Vec<f64>,
    pub grid_dbscan_min_pts: Vec<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            min_prominence: DEFAULT_MIN_PROMINENCE,
            sweep: SweepConfig::default(),
            min_len: DEFAULT_MIN_LEN,
            label_overlap: 0.5,
            boost: BoostConfig::default(),
            dbscan: DbscanConfig::default(),
            delta: DEFAULT_DELTA_S,
            threshold: DEFAULT_THRESHOLD,
            overlap_threshold: 0.5,
            overlap_base: OverlapBase::Truth,
            sensors: Signal::ALL.to_vec(),
            utc_offset_s: 0,
            seed: 0,
            grid_eta: Vec::new(),
            grid_max_depth: Vec::new(),
            grid_n_rounds: Vec::new(),
            grid_dbscan_eps: Vec::new(),
            grid_dbscan_min_pts: Vec::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("bad value for `{key}`: `{v}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("bad value for `{key}`: `{v}`"))),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_sensors(v: &str) -> Result<Vec<Signal>> {
    let mut out = Vec::new();
    for s in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let sig = Signal::parse(s).ok_or_else(|| Error::Config(format!("unknown sensor `{s}`")))?;
        if !out.contains(&sig) {
            out.push(sig);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("sensor list is empty".into()));
    }
    Ok(out)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or(Error::Parse { line: idx + 1, msg: "expected key = value".into() })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "min_prominence" => self.min_prominence = parse_num(key, v)?,
            "sweep_min" => self.sweep.min = parse_num(key, v)?,
            "sweep_max" => self.sweep.max = parse_num(key, v)?,
            "epsilon" => self.sweep.epsilon = parse_num(key, v)?,
            "strict_bounds" => {
                self.sweep.bounds = if parse_bool(key, v)? { BoundMode::Strict } else { BoundMode::Inclusive }
            }
            "min_len" => self.min_len = parse_num(key, v)?,
            "label_overlap" => self.label_overlap = parse_num(key, v)?,
            "eta" => self.boost.eta = parse_num(key, v)?,
            "max_depth" => self.boost.max_depth = parse_num(key, v)?,
            "gamma" => self.boost.gamma = parse_num(key, v)?,
            "min_child_weight" => self.boost.min_child_weight = parse_num(key, v)?,
            "subsample" => self.boost.subsample = parse_num(key, v)?,
            "n_rounds" => self.boost.n_rounds = parse_num(key, v)?,
            "lambda" => self.boost.lambda = parse_num(key, v)?,
            "pos_weight" => self.boost.pos_weight = if v == "auto" { None } else { Some(parse_num(key, v)?) },
            "dbscan_eps" => self.dbscan.eps = parse_num(key, v)?,
            "dbscan_min_pts" => self.dbscan.min_pts = parse_num(key, v)?,
            "dbscan_weighted" => self.dbscan.use_score_weight = parse_bool(key, v)?,
            "delta" => self.delta = parse_num(key, v)?,
            "threshold" => self.threshold = parse_num(key, v)?,
            "overlap_threshold" => self.overlap_threshold = parse_num(key, v)?,
            "overlap_base" => {
                self.overlap_base =
                    OverlapBase::parse(v).ok_or_else(|| Error::Config(format!("bad value for `{key}`: `{v}`")))?
            }
            "sensors" => self.sensors = parse_sensors(v)?,
            "utc_offset_s" => self.utc_offset_s = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "grid_eta" => self.grid_eta = parse_list(key, v)?,
            "grid_max_depth" => self.grid_max_depth = parse_list(key, v)?,
            "grid_n_rounds" => self.grid_n_rounds = parse_list(key, v)?,
            "grid_dbscan_eps" => self.grid_dbscan_eps = parse_list(key, v)?,
            "grid_dbscan_min_pts" => self.grid_dbscan_min_pts = parse_list(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        self.boosting().validate()?;
        self.dbscan.validate()?;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(self.min_prominence >= 0.0) {
            return Err(Error::Config("min_prominence must be non-negative".into()));
        }
        if !unit(self.label_overlap) || !unit(self.threshold) || !unit(self.overlap_threshold) {
            return Err(Error::Config("fractions must lie in [0, 1]".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Config("delta must be non-negative".into()));
        }
        if self.min_len < 1 {
            return Err(Error::Config("min_len must be at least 1".into()));
        }
        self.layout()?;
        Ok(())
    }

    /// Classifier settings with the run seed applied.
    pub fn boosting(&self) -> BoostConfig {
        BoostConfig { seed: self.seed, ..self.boost.clone() }
    }

    pub fn layout(&self) -> Result<FeatureLayout> {
        FeatureLayout::with_signals(&self.sensors)
    }

    /// Cartesian product of the classifier grids; empty grids fall back to
    /// the single configured value.
    pub fn classifier_grid(&self) -> Vec<BoostConfig> {
        let base = self.boosting();
        let or = |g: &[f64], v: f64| if g.is_empty() { vec![v] } else { g.to_vec() };
        let or_u = |g: &[usize], v: usize| if g.is_empty() { vec![v] } else { g.to_vec() };
        let mut out = Vec::new();
        for eta in or(&self.grid_eta, base.eta) {
            for max_depth in or_u(&self.grid_max_depth, base.max_depth) {
                for n_rounds in or_u(&self.grid_n_rounds, base.n_rounds) {
                    out.push(BoostConfig { eta, max_depth, n_rounds, ..base.clone() });
                }
            }
        }
        out
    }

    pub fn dbscan_grid(&self) -> Vec<DbscanConfig> {
        let eps = if self.grid_dbscan_eps.is_empty() { vec![self.dbscan.eps] } else { self.grid_dbscan_eps.clone() };
        let pts =
            if self.grid_dbscan_min_pts.is_empty() { vec![self.dbscan.min_pts] } else { self.grid_dbscan_min_pts.clone() };
        let mut out = Vec::new();
        for &e in &eps {
            for &m in &pts {
                out.push(DbscanConfig { eps: e, min_pts: m, ..self.dbscan.clone() });
            }
        }
        out
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let b = &self.boost;
        vec![
            ("min_prominence", self.min_prominence.to_string()),
            ("sweep_min", self.sweep.min.to_string()),
            ("sweep_max", self.sweep.max.to_string()),
            ("epsilon", self.sweep.epsilon.to_string()),
            ("strict_bounds", (self.sweep.bounds == BoundMode::Strict).to_string()),
            ("min_len", self.min_len.to_string()),
            ("label_overlap", self.label_overlap.to_string()),
            ("eta", b.eta.to_string()),
            ("max_depth", b.max_depth.to_string()),
            ("gamma", b.gamma.to_string()),
            ("min_child_weight", b.min_child_weight.to_string()),
            ("subsample", b.subsample.to_string()),
            ("n_rounds", b.n_rounds.to_string()),
            ("lambda", b.lambda.to_string()),
            ("pos_weight", b.pos_weight.map_or("auto".to_string(), |w| w.to_string())),
            ("dbscan_eps", self.dbscan.eps.to_string()),
            ("dbscan_min_pts", self.dbscan.min_pts.to_string()),
            ("dbscan_weighted", self.dbscan.use_score_weight.to_string()),
            ("delta", self.delta.to_string()),
            ("threshold", self.threshold.to_string()),
            ("overlap_threshold", self.overlap_threshold.to_string()),
            ("overlap_base", self.overlap_base.name().to_string()),
            ("sensors", self.sensors.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")),
            ("utc_offset_s", self.utc_offset_s.to_string()),
            ("seed", self.seed.to_string()),
            ("grid_eta", join(&self.grid_eta)),
            ("grid_max_depth", join(&self.grid_max_depth)),
            ("grid_n_rounds", join(&self.grid_n_rounds)),
            ("grid_dbscan_eps", join(&self.grid_dbscan_eps)),
            ("grid_dbscan_min_pts", join(&self.grid_dbscan_min_pts)),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Configuration snapshot plus input digests for one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: Vec<(String, String)>,
    /// (input name, sha256 hex)
    pub inputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(cfg: &Config) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config: cfg.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            inputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.push((name.into(), sha256_hex(bytes)));
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("tool_version = {}\n", self.tool_version);
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "input.{k} = {v}");
        }
        s
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_text().as_bytes())[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let mut c = Config::default();
        c.set("grid_eta", "0.1,0.3").unwrap();
        c.set("sensors", "prox,energy").unwrap();
        c.set("pos_weight", "2.5").unwrap();
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = Config::parse("min_prominance = 3\n").unwrap_err();
        assert!(e.to_string().contains("min_prominance"));
    }

    #[test]
    fn prox_required() {
        assert!(Config::parse("sensors = ambient,lfa\n").is_err());
    }

    #[test]
    fn grids_expand() {
        let mut c = Config::default();
        c.grid_eta = vec![0.1, 0.2];
        c.grid_max_depth = vec![2, 3, 4];
        c.grid_dbscan_min_pts = vec![5, 10];
        assert_eq!(c.classifier_grid().len(), 6);
        assert_eq!(c.dbscan_grid().len(), 2);
        assert!(c.classifier_grid().iter().all(|b| b.seed == c.seed));
    }

    #[test]
    fn manifest_hash_tracks_inputs() {
        let c = Config::default();
        let mut a = RunManifest::new(&c);
        let b = a.clone();
        assert_eq!(a.hash(), b.hash());
        a.add_input("sensors", b"x");
        assert_ne!(a.hash(), b.hash());
    }
}
