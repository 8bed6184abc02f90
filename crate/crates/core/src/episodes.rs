//! Per-second scoring of positive candidates, 1-D DBSCAN and episode
//! assembly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SecondScore {
    /// Whole epoch second.
    pub second: i64,
    /// Number of positive candidates covering this second, at least 1.
    pub score: u32,
}

/// Whole seconds `s` whose span `[s, s + 1)` meets the closed interval
/// `[start, end]`.
pub fn covered_seconds(start: f64, end: f64) -> std::ops::RangeInclusive<i64> {
    (start.floor() as i64)..=(end.floor() as i64)
}

/// Counts, for every second, how many `[c1, c2]` intervals cover it.
pub fn score_seconds<I>(intervals: I) -> Vec<SecondScore>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut counts: BTreeMap<i64, u32> = BTreeMap::new();
    for (a, b) in intervals {
        for s in covered_seconds(a, b) {
            *counts.entry(s).or_default() += 1;
        }
    }
    counts.into_iter().map(|(second, score)| SecondScore { second, score }).collect()
}

pub const DEFAULT_DBSCAN_EPS_S: f64 = 30.0;
pub const DEFAULT_DBSCAN_MIN_PTS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanConfig {
    /// Neighbourhood radius in seconds (inclusive).
    pub eps: f64,
    /// Neighbourhood mass needed for a core point, the point itself included.
    pub min_pts: usize,
    /// Count each neighbour `score` times instead of once.
    pub use_score_weight: bool,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        Self { eps: DEFAULT_DBSCAN_EPS_S, min_pts: DEFAULT_DBSCAN_MIN_PTS, use_score_weight: true }
    }
}

impl DbscanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || self.min_pts < 1 {
            return Err(Error::Config(format!("dbscan needs eps > 0 and min_pts >= 1, got {} and {}", self.eps, self.min_pts)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Sorted by second.
    pub members: Vec<SecondScore>,
}

impl Cluster {
    pub fn first(&self) -> i64 {
        self.members[0].second
    }

    pub fn last(&self) -> i64 {
        self.members[self.members.len() - 1].second
    }

    pub fn seconds(&self) -> Vec<i64> {
        self.members.iter().map(|m| m.second).collect()
    }
}

fn normalize(scores: &[SecondScore]) -> Vec<SecondScore> {
    let mut v = scores.to_vec();
    v.sort();
    let mut out: Vec<SecondScore> = Vec::with_capacity(v.len());
    for s in v {
        match out.last_mut() {
            Some(l) if l.second == s.second => l.score += s.score,
            _ => out.push(s),
        }
    }
    out
}

/// DBSCAN over the seconds. Core points chain when within `eps` of each
/// other; a non-core point joins the cluster of its nearest core point within
/// `eps` (the earlier one on a tie) and is otherwise noise and dropped.
///
/// Points are sorted once and neighbourhood masses come from a two-pointer
/// sweep over prefix sums, so the cost is dominated by the sort.
pub fn cluster(scores: &[SecondScore], cfg: &DbscanConfig) -> Result<Vec<Cluster>> {
    cfg.validate()?;
    let pts = normalize(scores);
    let n = pts.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let pos: Vec<f64> = pts.iter().map(|p| p.second as f64).collect();
    let mut prefix = vec![0u64; n + 1];
    for i in 0..n {
        let w = if cfg.use_score_weight { pts[i].score as u64 } else { 1 };
        prefix[i + 1] = prefix[i] + w;
    }

    let mut core = vec![false; n];
    let (mut lo, mut hi) = (0, 0);
    for i in 0..n {
        while pos[i] - pos[lo] > cfg.eps {
            lo += 1;
        }
        while hi + 1 < n && pos[hi + 1] - pos[i] <= cfg.eps {
            hi += 1;
        }
        core[i] = prefix[hi + 1] - prefix[lo] >= cfg.min_pts as u64;
    }

    // cluster id per core point
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut n_clusters = 0;
    let mut prev_core: Option<usize> = None;
    for i in (0..n).filter(|&i| core[i]) {
        match prev_core {
            Some(p) if pos[i] - pos[p] <= cfg.eps => label[i] = label[p],
            _ => {
                label[i] = Some(n_clusters);
                n_clusters += 1;
            }
        }
        prev_core = Some(i);
    }

    let mut left_core = vec![None; n];
    let mut last = None;
    for i in 0..n {
        if core[i] {
            last = Some(i);
        }
        left_core[i] = last;
    }
    let mut right_core = vec![None; n];
    let mut next = None;
    for i in (0..n).rev() {
        if core[i] {
            next = Some(i);
        }
        right_core[i] = next;
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let dl = left_core[i].map(|c| (pos[i] - pos[c], c));
        let dr = right_core[i].map(|c| (pos[c] - pos[i], c));
        let pick = match (dl, dr) {
            (Some(l), Some(r)) => Some(if r.0 < l.0 { r } else { l }),
            (l, r) => l.or(r),
        };
        if let Some((d, c)) = pick {
            if d <= cfg.eps {
                label[i] = label[c];
            }
        }
    }

    let mut clusters: Vec<Cluster> = (0..n_clusters).map(|_| Cluster { members: Vec::new() }).collect();
    for i in 0..n {
        if let Some(c) = label[i] {
            clusters[c].members.push(pts[i]);
        }
    }
    Ok(clusters)
}

/// A predicted eating episode covering `[start, end)` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedEpisode {
    pub start: f64,
    pub end: f64,
    pub n_seconds: usize,
    pub peak_score: u32,
}

/// Each cluster spans `[first, last + 1]`; spans at most `delta` apart merge.
pub fn episodes_from_clusters(clusters: &[Cluster], delta: f64) -> Vec<PredictedEpisode> {
    let mut spans: Vec<PredictedEpisode> = clusters
        .iter()
        .filter(|c| !c.members.is_empty())
        .map(|c| PredictedEpisode {
            start: c.first() as f64,
            end: (c.last() + 1) as f64,
            n_seconds: c.members.len(),
            peak_score: c.members.iter().map(|m| m.score).max().unwrap_or(0),
        })
        .collect();
    spans.sort_by(|a, b| a.start.total_cmp(&b.start));
    let mut out: Vec<PredictedEpisode> = Vec::new();
    for s in spans {
        match out.last_mut() {
            Some(e) if s.start - e.end <= delta => {
                e.end = e.end.max(s.end);
                e.n_seconds += s.n_seconds;
                e.peak_score = e.peak_score.max(s.peak_score);
            }
            _ => out.push(s),
        }
    }
    out
}

pub const EPISODE_HEADER: &str = "participant,start_s,end_s,n_seconds,peak_score";

pub fn episodes_to_csv(rows: &[(String, PredictedEpisode)]) -> String {
    let mut out = String::from(EPISODE_HEADER);
    out.push('\n');
    for (p, e) in rows {
        let _ = writeln!(out, "{p},{},{},{},{}", e.start, e.end, e.n_seconds, e.peak_score);
    }
    out
}

pub fn episodes_from_csv(text: &str) -> Result<Vec<(String, PredictedEpisode)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == EPISODE_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{EPISODE_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = raw.split(',').map(str::trim).collect();
        if c.len() != 5 {
            return Err(Error::Parse { line, msg: format!("expected 5 columns, got {}", c.len()) });
        }
        let bad = |s: &str| Error::Parse { line, msg: format!("bad value `{s}`") };
        out.push((
            c[0].to_string(),
            PredictedEpisode {
                start: c[1].parse().map_err(|_| bad(c[1]))?,
                end: c[2].parse().map_err(|_| bad(c[2]))?,
                n_seconds: c[3].parse().map_err(|_| bad(c[3]))?,
                peak_score: c[4].parse().map_err(|_| bad(c[4]))?,
            },
        ));
    }
    Ok(out)
}
