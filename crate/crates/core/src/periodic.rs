//! Longest ε-periodic subsequences of peak timestamps.
//!
//! A timestamp sequence is ε-periodic when the ratio of its largest to its
//! smallest consecutive difference stays below `1 + ε`. The absolute-bound
//! variant (every difference inside `[p_min, p_max]`) is solved exactly by a
//! left-to-right dynamic program; the relative variant sweeps bands
//! `[b, b(1 + ε)]` across the chewing range and solves the absolute problem
//! in each.
//!
//! The DP keeps, for each index, the length of the longest valid subsequence
//! ending there. Valid predecessors of `i` form a contiguous index range whose
//! ends only move forward as `i` grows, so a monotone deque gives the range
//! maximum in amortized constant time and the whole pass is linear.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::peaks::Peak;
use crate::scalar::Scalar;

pub const DEFAULT_SWEEP_MIN_S: f64 = 0.4;
pub const DEFAULT_SWEEP_MAX_S: f64 = 1.5;
pub const DEFAULT_EPSILON: f64 = 0.2;
pub const DEFAULT_MIN_LEN: usize = 3;

/// Whether gap bounds admit equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundMode {
    /// `p_min <= gap <= p_max`.
    #[default]
    Inclusive,
    /// `p_min < gap < p_max`.
    Strict,
}

impl BoundMode {
    #[inline]
    fn above_min<T: Scalar>(self, gap: T, p_min: T) -> bool {
        match self {
            BoundMode::Inclusive => gap >= p_min,
            BoundMode::Strict => gap > p_min,
        }
    }

    #[inline]
    fn below_max<T: Scalar>(self, gap: T, p_max: T) -> bool {
        match self {
            BoundMode::Inclusive => gap <= p_max,
            BoundMode::Strict => gap < p_max,
        }
    }

    pub fn admits<T: Scalar>(self, gap: T, p_min: T, p_max: T) -> bool {
        self.above_min(gap, p_min) && self.below_max(gap, p_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSubsequence<T = f64> {
    pub timestamps: Vec<T>,
    pub p_min: T,
    pub p_max: T,
    pub epsilon: T,
    /// Number of gaps, one less than the number of timestamps.
    pub length: usize,
}

impl<T: Scalar> PeriodicSubsequence<T> {
    pub fn gaps(&self) -> impl Iterator<Item = T> + '_ {
        self.timestamps.windows(2).map(|w| w[1] - w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig<T = f64> {
    /// Smallest inter-chew distance, seconds.
    pub min: T,
    /// Largest inter-chew distance, seconds.
    pub max: T,
    pub epsilon: T,
    pub bounds: BoundMode,
}

impl<T: Scalar> Default for SweepConfig<T> {
    fn default() -> Self {
        Self {
            min: T::lit(DEFAULT_SWEEP_MIN_S),
            max: T::lit(DEFAULT_SWEEP_MAX_S),
            epsilon: T::lit(DEFAULT_EPSILON),
            bounds: BoundMode::Inclusive,
        }
    }
}

impl<T: Scalar> SweepConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > T::zero() && self.min < self.max && self.epsilon > T::zero()) {
            return Err(Error::Config(format!(
                "sweep needs 0 < min < max and epsilon > 0, got min={} max={} epsilon={}",
                self.min, self.max, self.epsilon
            )));
        }
        Ok(())
    }

    /// `[b, b(1 + ε)]` for `b = min, min(1 + ε), …` while `b <= max`; the last
    /// band is clipped to `max`.
    pub fn bands(&self) -> Vec<(T, T)> {
        let ratio = T::one() + self.epsilon;
        let mut out = Vec::new();
        let mut b = self.min;
        while b <= self.max {
            out.push((b, (b * ratio).min(self.max)));
            b = b * ratio;
        }
        out
    }
}

fn check_increasing<T: Scalar>(t: &[T]) -> Result<()> {
    match t.windows(2).position(|w| !(w[1] > w[0])) {
        Some(i) => Err(Error::NotIncreasing { index: i + 1 }),
        None => Ok(()),
    }
}

/// DP table: length of the longest subsequence ending at each index.
pub(crate) fn abs_periodic_table<T: Scalar>(t: &[T], p_min: T, p_max: T, bounds: BoundMode) -> Vec<u32> {
    let n = t.len();
    let mut opt = vec![0u32; n];
    // indices with admissible gaps to `i`, strictly decreasing in `opt`
    let mut window: VecDeque<u32> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        while next < i && bounds.above_min(t[i] - t[next], p_min) {
            while window.back().is_some_and(|&b| opt[b as usize] <= opt[next]) {
                window.pop_back();
            }
            window.push_back(next as u32);
            next += 1;
        }
        while window.front().is_some_and(|&f| !bounds.below_max(t[i] - t[f as usize], p_max)) {
            window.pop_front();
        }
        if let Some(&j) = window.front() {
            opt[i] = opt[j as usize] + 1;
        }
    }
    opt
}

/// Walks back from `end`, each step taking the latest admissible predecessor
/// one shorter. This is the deque front the table saw at that index.
fn backtrack<T: Scalar>(t: &[T], opt: &[u32], p_min: T, p_max: T, bounds: BoundMode, end: usize) -> Vec<T> {
    let mut idx = vec![end];
    let mut cur = end;
    while opt[cur] > 0 {
        let want = opt[cur] - 1;
        cur = (0..cur)
            .rev()
            .take_while(|&j| bounds.below_max(t[cur] - t[j], p_max))
            .find(|&j| opt[j] == want && bounds.admits(t[cur] - t[j], p_min, p_max))
            .expect("table entry has a predecessor");
        idx.push(cur);
    }
    idx.reverse();
    idx.into_iter().map(|i| t[i]).collect()
}

/// All longest subsequences whose consecutive differences lie inside
/// `[p_min, p_max]` (inclusive). One subsequence is reported per optimal end
/// point.
pub fn longest_abs_periodic<T: Scalar>(t: &[T], p_min: T, p_max: T) -> Result<Vec<PeriodicSubsequence<T>>> {
    longest_abs_periodic_with(t, p_min, p_max, BoundMode::Inclusive)
}

pub fn longest_abs_periodic_with<T: Scalar>(
    t: &[T],
    p_min: T,
    p_max: T,
    bounds: BoundMode,
) -> Result<Vec<PeriodicSubsequence<T>>> {
    check_increasing(t)?;
    if !(p_min > T::zero() && p_min <= p_max) {
        return Err(Error::Config(format!("need 0 < p_min <= p_max, got {p_min}, {p_max}")));
    }
    if t.len() > u32::MAX as usize {
        return Err(Error::invalid(format!("{} timestamps exceed the supported maximum", t.len())));
    }
    let opt = abs_periodic_table(t, p_min, p_max, bounds);
    let best = opt.iter().copied().max().unwrap_or(0) as usize;
    if best == 0 {
        return Ok(Vec::new());
    }
    let epsilon = p_max / p_min - T::one();
    Ok((0..t.len())
        .filter(|&i| opt[i] as usize == best)
        .map(|end| PeriodicSubsequence { timestamps: backtrack(t, &opt, p_min, p_max, bounds, end), p_min, p_max, epsilon, length: best })
        .collect())
}

/// Longest periodic subsequences of every band in the sweep, deduplicated and
/// tagged with the band bounds and the sweep ε.
pub fn longest_rel_periodic<T: Scalar>(t: &[T], cfg: &SweepConfig<T>) -> Result<Vec<PeriodicSubsequence<T>>> {
    cfg.validate()?;
    check_increasing(t)?;
    let mut out: Vec<PeriodicSubsequence<T>> = Vec::new();
    for (lo, hi) in cfg.bands() {
        for mut s in longest_abs_periodic_with(t, lo, hi, cfg.bounds)? {
            if out.iter().any(|o| o.timestamps == s.timestamps) {
                continue;
            }
            s.epsilon = cfg.epsilon;
            out.push(s);
        }
    }
    Ok(out)
}

/// A periodic subsequence proposed as a chewing sequence, spanning
/// `[c1, c2]` (its first and last timestamp).
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSubsequence<T = f64> {
    pub c1: T,
    pub c2: T,
    pub p_min: T,
    pub p_max: T,
    pub epsilon: T,
    pub length: usize,
    /// Peak times; empty when the candidate was read back from CSV.
    pub timestamps: Vec<T>,
}

impl<T: Scalar> From<PeriodicSubsequence<T>> for CandidateSubsequence<T> {
    fn from(s: PeriodicSubsequence<T>) -> Self {
        Self {
            c1: s.timestamps[0],
            c2: *s.timestamps.last().expect("non-empty subsequence"),
            p_min: s.p_min,
            p_max: s.p_max,
            epsilon: s.epsilon,
            length: s.length,
            timestamps: s.timestamps,
        }
    }
}

/// Splits the peak stream at gaps wider than `cfg.max`, sweeps each fragment
/// and keeps subsequences of at least `min_len` gaps. Output is ordered by
/// `c1`, then band lower bound.
pub fn segment<T: Scalar>(peaks: &[Peak<T>], cfg: &SweepConfig<T>, min_len: usize) -> Result<Vec<CandidateSubsequence<T>>> {
    cfg.validate()?;
    let t: Vec<T> = peaks.iter().map(|p| p.t).collect();
    check_increasing(&t)?;
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=t.len() {
        if i == t.len() || t[i] - t[i - 1] > cfg.max {
            let mut frag: Vec<CandidateSubsequence<T>> = longest_rel_periodic(&t[start..i], cfg)?
                .into_iter()
                .filter(|s| s.length >= min_len.max(1))
                .map(CandidateSubsequence::from)
                .collect();
            frag.sort_by(|a, b| a.c1.partial_cmp(&b.c1).unwrap().then(a.p_min.partial_cmp(&b.p_min).unwrap()));
            out.extend(frag);
            start = i;
        }
    }
    Ok(out)
}

pub const CANDIDATE_HEADER: &str = "c1_s,c2_s,p_min,p_max,epsilon,length";

pub fn candidates_to_csv(cands: &[CandidateSubsequence<f64>]) -> String {
    let mut out = String::from(CANDIDATE_HEADER);
    out.push('\n');
    for c in cands {
        let _ = writeln!(out, "{},{},{},{},{},{}", c.c1, c.c2, c.p_min, c.p_max, c.epsilon, c.length);
    }
    out
}

pub fn candidates_from_csv(text: &str) -> Result<Vec<CandidateSubsequence<f64>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CANDIDATE_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{CANDIDATE_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(Error::Parse { line, msg: format!("expected 6 columns, got {}", cols.len()) });
        }
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Parse { line, msg: format!("bad number `{s}`") }) };
        out.push(CandidateSubsequence {
            c1: num(cols[0])?,
            c2: num(cols[1])?,
            p_min: num(cols[2])?,
            p_max: num(cols[3])?,
            epsilon: num(cols[4])?,
            length: cols[5].parse().map_err(|_| Error::Parse { line, msg: format!("bad length `{}`", cols[5]) })?,
            timestamps: Vec::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive search over every subset: longest valid length and the set
    /// of end indices achieving it.
    fn brute_force(t: &[f64], p_min: f64, p_max: f64) -> (usize, Vec<usize>) {
        let n = t.len();
        let mut best = 0;
        let mut ends = Vec::new();
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if idx.len() < 2 {
                continue;
            }
            if !idx.windows(2).all(|w| {
                let g = t[w[1]] - t[w[0]];
                g >= p_min && g <= p_max
            }) {
                continue;
            }
            let len = idx.len() - 1;
            let end = *idx.last().unwrap();
            if len > best {
                best = len;
                ends = vec![end];
            } else if len == best && !ends.contains(&end) {
                ends.push(end);
            }
        }
        ends.sort();
        (best, ends)
    }

    #[test]
    fn worked_example() {
        let t = [0.0, 0.8, 0.9, 1.9];
        let r = longest_abs_periodic(&t, 0.9, 1.1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].timestamps, vec![0.0, 0.9, 1.9]);
        assert_eq!(r[0].length, 2);
    }

    #[test]
    fn strict_bounds_reject_worked_example_gap() {
        let t = [0.0, 0.8, 0.9, 1.9];
        let r = longest_abs_periodic_with(&t, 0.9, 1.1, BoundMode::Strict).unwrap();
        // 0 -> 0.9 sits on the lower bound, 0.8 -> 1.9 on the upper one
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].timestamps, vec![0.9, 1.9]);
    }

    #[test]
    fn too_short_inputs() {
        assert!(longest_abs_periodic::<f64>(&[], 0.5, 1.0).unwrap().is_empty());
        assert!(longest_abs_periodic(&[3.0], 0.5, 1.0).unwrap().is_empty());
    }

    #[test]
    fn arithmetic_sequence() {
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let r = longest_abs_periodic(&t, 1.0, 1.0).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].length, 9);
        assert_eq!(r[0].timestamps, t);
    }

    #[test]
    fn non_increasing_rejected() {
        assert!(matches!(longest_abs_periodic(&[0.0, 1.0, 1.0], 0.5, 1.0), Err(Error::NotIncreasing { index: 2 })));
    }

    #[test]
    fn rel_periodic_finds_half_second_train() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
        let r = longest_rel_periodic(&t, &SweepConfig::default()).unwrap();
        let full = r.iter().find(|s| s.length == 39).expect("full train");
        assert!(full.p_min <= 0.5 && 0.5 <= full.p_max);
        assert_eq!(full.epsilon, 0.2);
    }

    #[test]
    fn rel_periodic_two_interleaved_trains() {
        // 0.5 s train over [0, 20) and 1.2 s train offset by 0.25 s
        let mut t: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
        t.extend((0..16).map(|i| 0.25 + i as f64 * 1.2));
        t.sort_by(f64::total_cmp);
        t.dedup();
        let cfg = SweepConfig::default();
        let r = longest_rel_periodic(&t, &cfg).unwrap();
        for (lo, hi) in cfg.bands() {
            let (best, _) = brute_force_long(&t, lo, hi);
            let got = r.iter().filter(|s| s.p_min == lo).map(|s| s.length).max().unwrap_or(0);
            let dup = r.iter().any(|s| s.p_min != lo && best > 0 && s.length == best);
            assert!(got == best || dup, "band {lo}..{hi}: got {got}, want {best}");
        }
        // the slow band may splice in points of the fast train, never fewer
        let slow = r.iter().find(|s| s.p_min <= 1.2 && 1.2 <= s.p_max).unwrap();
        assert!(slow.length >= 15);
        let fast = r.iter().find(|s| s.p_min <= 0.5 && 0.5 <= s.p_max).unwrap();
        assert_eq!(fast.length, 39);
    }

    /// DP-free longest-path oracle for inputs too long for subset
    /// enumeration: O(n²) relaxation over the predecessor DAG.
    fn brute_force_long(t: &[f64], lo: f64, hi: f64) -> (usize, ()) {
        let mut best = vec![0usize; t.len()];
        for i in 0..t.len() {
            for j in 0..i {
                let g = t[i] - t[j];
                if g >= lo && g <= hi {
                    best[i] = best[i].max(best[j] + 1);
                }
            }
        }
        (best.into_iter().max().unwrap_or(0), ())
    }

    #[test]
    fn rel_periodic_out_of_range() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 2.0).collect();
        assert!(longest_rel_periodic(&t, &SweepConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn bands_cover_range() {
        let bands = SweepConfig::<f64>::default().bands();
        assert_eq!(bands[0].0, 0.4);
        assert!((bands[0].1 - 0.48).abs() < 1e-12);
        assert_eq!(bands.last().unwrap().1, 1.5);
        for w in bands.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-12);
        }
    }

    fn peaks_at(ts: &[f64]) -> Vec<Peak<f64>> {
        ts.iter().enumerate().map(|(i, &t)| Peak { t, height: 10.0, prominence: 10.0, index: i }).collect()
    }

    #[test]
    fn segment_one_burst() {
        let ts: Vec<f64> = (0..=30).map(|i| i as f64).collect();
        let c = segment(&peaks_at(&ts), &SweepConfig::default(), 3).unwrap();
        assert!(c.iter().any(|c| c.c1 == 0.0 && c.c2 == 30.0 && c.length == 30));
    }

    #[test]
    fn segment_two_bursts() {
        let mut ts: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        ts.extend((0..=10).map(|i| 70.0 + i as f64));
        let c = segment(&peaks_at(&ts), &SweepConfig::default(), 3).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].c1, c[0].c2), (0.0, 10.0));
        assert_eq!((c[1].c1, c[1].c2), (70.0, 80.0));
    }

    #[test]
    fn candidate_csv_roundtrip() {
        let ts: Vec<f64> = (0..=5).map(|i| i as f64 * 0.65).collect();
        let c = segment(&peaks_at(&ts), &SweepConfig::default(), 3).unwrap();
        let back = candidates_from_csv(&candidates_to_csv(&c)).unwrap();
        assert_eq!(back.len(), c.len());
        for (a, b) in c.iter().zip(&back) {
            assert_eq!((a.c1, a.c2, a.p_min, a.p_max, a.epsilon, a.length), (b.c1, b.c2, b.p_min, b.p_max, b.epsilon, b.length));
        }
    }

    fn sorted_times() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1u32..1536, 0..=10).prop_map(|steps| {
            let mut acc = 0u32;
            steps.into_iter().map(|s| {
                acc += s;
                acc as f64 / 1024.0
            }).collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn dp_matches_exhaustive_search(t in sorted_times(), lo in 0.1f64..1.0, w in 0.0f64..0.8) {
            let hi = lo + w;
            let (best, ends) = brute_force(&t, lo, hi);
            let r = longest_abs_periodic(&t, lo, hi).unwrap();
            let got = r.first().map(|s| s.length).unwrap_or(0);
            prop_assert_eq!(got, best);
            let mut got_ends: Vec<usize> = r.iter().map(|s| t.iter().position(|&x| x == *s.timestamps.last().unwrap()).unwrap()).collect();
            got_ends.sort();
            if best > 0 {
                prop_assert_eq!(got_ends, ends);
            }
            for s in &r {
                prop_assert_eq!(s.timestamps.len(), s.length + 1);
                for g in s.gaps() {
                    prop_assert!(g >= lo && g <= hi);
                }
            }
        }

        #[test]
        fn segment_invariants(t in prop::collection::vec(1u32..2000, 0..80), shift in -1000i32..1000) {
            // dyadic timestamps keep shifted gaps exact
            let mut acc = 0u32;
            let ts: Vec<f64> = t.into_iter().map(|s| { acc += s; acc as f64 / 1024.0 }).collect();
            let cfg = SweepConfig::default();
            let c = segment(&peaks_at(&ts), &cfg, 2).unwrap();
            for cand in &c {
                prop_assert!(cand.length >= 2);
                let gaps: Vec<f64> = cand.timestamps.windows(2).map(|w| w[1] - w[0]).collect();
                let (gmin, gmax) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
                prop_assert!(gmin >= cand.p_min && gmax <= cand.p_max);
                prop_assert!(gmax / gmin <= 1.0 + cand.epsilon + 1e-12);
            }
            for w in c.windows(2) {
                prop_assert!(w[0].c1 <= w[1].c1);
            }

            let shifted: Vec<f64> = ts.iter().map(|x| x + shift as f64).collect();
            if shifted.iter().all(|&x| x >= 0.0) {
                let cs = segment(&peaks_at(&shifted), &cfg, 2).unwrap();
                prop_assert_eq!(cs.len(), c.len());
                for (a, b) in c.iter().zip(&cs) {
                    prop_assert!((b.c1 - a.c1 - shift as f64).abs() < 1e-9);
                    prop_assert!((b.c2 - a.c2 - shift as f64).abs() < 1e-9);
                    prop_assert_eq!((a.length, a.p_min, a.p_max), (b.length, b.p_min, b.p_max));
                }
            }
        }
    }
}
