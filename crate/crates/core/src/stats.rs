//! Window statistics used by the feature extractor. Generic over the scalar
//! type; degenerate inputs (empty, constant) return 0 rather than NaN.

use crate::scalar::Scalar;

pub fn mean<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    x.iter().fold(T::zero(), |a, &v| a + v) / T::from_usize_lossy(x.len())
}

/// Population variance.
pub fn variance<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let m = mean(x);
    x.iter().fold(T::zero(), |a, &v| a + (v - m) * (v - m)) / T::from_usize_lossy(x.len())
}

pub fn rms<T: Scalar>(x: &[T]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    (x.iter().fold(T::zero(), |a, &v| a + v * v) / T::from_usize_lossy(x.len())).sqrt()
}

fn central_moment<T: Scalar>(x: &[T], m: T, k: i32) -> T {
    x.iter().fold(T::zero(), |a, &v| a + (v - m).powi(k)) / T::from_usize_lossy(x.len())
}

/// Relative variance below which a window is treated as constant.
fn is_degenerate<T: Scalar>(x: &[T], var: T) -> bool {
    let scale = x.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    var <= T::epsilon() * T::lit(16.0) * scale * scale
}

/// Population skewness; 0 for constant data.
pub fn skewness<T: Scalar>(x: &[T]) -> T {
    let var = variance(x);
    if x.is_empty() || is_degenerate(x, var) {
        return T::zero();
    }
    central_moment(x, mean(x), 3) / var.powf(T::lit(1.5))
}

/// Excess kurtosis; 0 for constant data.
pub fn kurtosis<T: Scalar>(x: &[T]) -> T {
    let var = variance(x);
    if x.is_empty() || is_degenerate(x, var) {
        return T::zero();
    }
    central_moment(x, mean(x), 4) / (var * var) - T::lit(3.0)
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    match sorted.len() {
        0 => T::zero(),
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = T::lit(pos - lo as f64);
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    if n < 2 {
        return T::zero();
    }
    let (a, b) = (&a[..n], &b[..n]);
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab = sab + da * db;
        saa = saa + da * da;
        sbb = sbb + db * db;
    }
    let nn = T::from_usize_lossy(n);
    if is_degenerate(a, saa / nn) || is_degenerate(b, sbb / nn) {
        return T::zero();
    }
    num_traits::clamp(sab / (saa.sqrt() * sbb.sqrt()), -T::one(), T::one())
}

/// Single-sided amplitude of the mean-removed, unwindowed signal at the DFT
/// bin nearest `freq_hz`. Bins above Nyquist read as 0.
pub fn spectral_amplitude<T: Scalar>(x: &[T], sample_rate_hz: f64, freq_hz: f64) -> T {
    let n = x.len();
    if n < 2 {
        return T::zero();
    }
    let k = (freq_hz * n as f64 / sample_rate_hz).round() as usize;
    if 2 * k > n {
        return T::zero();
    }
    let m = mean(x);
    let w = T::lit(-2.0 * std::f64::consts::PI * k as f64 / n as f64);
    let (mut re, mut im) = (T::zero(), T::zero());
    for (i, &v) in x.iter().enumerate() {
        let (s, c) = (w * T::from_usize_lossy(i)).sin_cos();
        re = re + (v - m) * c;
        im = im + (v - m) * s;
    }
    let mag = (re * re + im * im).sqrt() / T::from_usize_lossy(n);
    if k == 0 || 2 * k == n {
        mag
    } else {
        mag * T::lit(2.0)
    }
}

/// Longest run of consecutive samples satisfying `pred`.
pub fn longest_run<T: Scalar>(x: &[T], pred: impl Fn(T) -> bool) -> usize {
    let (mut best, mut cur) = (0, 0);
    for &v in x {
        if pred(v) {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Index of the first occurrence of the minimum (`want_max = false`) or
/// maximum, as a fraction of the window length.
pub fn first_location<T: Scalar>(x: &[T], want_max: bool) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if (want_max && v > x[best]) || (!want_max && v < x[best]) {
            best = i;
        }
    }
    T::from_usize_lossy(best) / T::from_usize_lossy(x.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_known_sample() {
        let x = [2.0f64, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&x), 5.0);
        assert_eq!(variance(&x), 4.0);
        // third central moment = 5.25, (4^1.5) = 8
        assert!((skewness(&x) - 5.25 / 8.0).abs() < 1e-12);
        // fourth central moment = 44.5 → 44.5/16 - 3
        assert!((kurtosis(&x) - (44.5 / 16.0 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn constant_window_fallbacks() {
        let x = [3.5f64; 40];
        assert_eq!(variance(&x), 0.0);
        assert_eq!(skewness(&x), 0.0);
        assert_eq!(kurtosis(&x), 0.0);
        assert_eq!(pearson(&x, &x), 0.0);
        assert_eq!(spectral_amplitude(&x, 20.0, 1.0), 0.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&x, 0.25), 1.75);
        assert_eq!(quantile_sorted(&x, 0.5), 2.5);
        assert_eq!(quantile_sorted(&x, 0.75), 3.25);
    }

    #[test]
    fn sinusoid_amplitude() {
        // 20 s at 20 Hz: 1 Hz lands exactly on bin 20
        let x: Vec<f64> = (0..400).map(|i| 3.0 * (2.0 * std::f64::consts::PI * i as f64 / 20.0).sin()).collect();
        assert!((spectral_amplitude(&x, 20.0, 1.0) - 3.0).abs() < 1e-9);
        assert!(spectral_amplitude(&x, 20.0, 1.5).abs() < 1e-9);
    }

    #[test]
    fn runs_and_locations() {
        let x = [1.0, 0.0, 0.0, 0.0, 2.0, 2.0, 0.0];
        assert_eq!(longest_run(&x, |v| v < 0.5), 3);
        assert_eq!(first_location(&x, true), 4.0 / 7.0);
        assert_eq!(first_location(&x, false), 1.0 / 7.0);
    }

    #[test]
    fn pearson_perfect() {
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&a, &b) - 1.0).abs() < 1e-12);
        let c = [4.0, 3.0, 2.0, 1.0];
        assert!((pearson(&a, &c) + 1.0).abs() < 1e-12);
    }
}
