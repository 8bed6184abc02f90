//! Prominence-filtered peak detection on the proximity signal.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default minimum prominence, in proximity sensor units.
pub const DEFAULT_MIN_PROMINENCE: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T = f64> {
    pub t: T,
    pub height: T,
    pub prominence: T,
    /// Sample index of the peak in the source signal.
    pub index: usize,
}

/// Indices of local maxima. A plateau counts once, at its leftmost sample;
/// endpoints and plateaus touching an endpoint are never maxima.
pub fn local_maxima<T: Scalar>(signal: &[T]) -> Vec<usize> {
    let n = signal.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if signal[i] > signal[i - 1] {
            let mut j = i;
            while j + 1 < n && signal[j + 1] == signal[i] {
                j += 1;
            }
            if j + 1 < n && signal[j + 1] < signal[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Topographic prominence of the maximum at `idx`: the height above the
/// higher of the two lowest points reached before meeting strictly higher
/// terrain (or the signal end) on each side.
pub fn prominence<T: Scalar>(signal: &[T], idx: usize) -> T {
    let h = signal[idx];
    let mut left_min = h;
    for &v in signal[..idx].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &signal[idx + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Local maxima whose prominence is at least `min_prominence`, sorted by time.
pub fn find_prominent_peaks<T: Scalar>(signal: &[T], t: &[T], min_prominence: T) -> Result<Vec<Peak<T>>> {
    if signal.len() != t.len() {
        return Err(Error::LengthMismatch { what: "signal and time arrays", left: signal.len(), right: t.len() });
    }
    if !(min_prominence > T::zero()) {
        return Err(Error::Config(format!("min_prominence must be positive, got {min_prominence}")));
    }
    Ok(local_maxima(signal)
        .into_iter()
        .filter_map(|i| {
            let p = prominence(signal, i);
            (p >= min_prominence).then(|| Peak { t: t[i], height: signal[i], prominence: p, index: i })
        })
        .collect())
}

pub const PEAK_HEADER: &str = "t_ms,height,prominence";

pub fn peaks_to_csv(peaks: &[Peak<f64>]) -> String {
    let mut out = String::from(PEAK_HEADER);
    out.push('\n');
    for p in peaks {
        let _ = writeln!(out, "{},{},{}", (p.t * 1000.0).round() as i64, p.height, p.prominence);
    }
    out
}

pub fn peaks_from_csv(text: &str) -> Result<Vec<Peak<f64>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PEAK_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{PEAK_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(Error::Parse { line, msg: format!("expected 3 columns, got {}", cols.len()) });
        }
        let mut v = [0.0; 3];
        for (k, c) in cols.iter().enumerate() {
            v[k] = c.parse().map_err(|_| Error::Parse { line, msg: format!("bad number `{c}`") })?;
        }
        out.push(Peak { t: v[0] / 1000.0, height: v[1], prominence: v[2], index: out.len() });
    }
    Ok(out)
}
