//! The four analysis signals: proximity, ambient light, lean-forward angle
//! and accelerometer energy.

use std::fmt::Write as _;

use crate::data::Session;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Quaternion `w + xi + yj + zk`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Quaternion<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    /// Rotation of `angle` radians about a unit `axis`.
    pub fn from_axis_angle(axis: [T; 3], angle: T) -> Self {
        let half = angle / T::lit(2.0);
        let (s, c) = half.sin_cos();
        Self::new(c, axis[0] * s, axis[1] * s, axis[2] * s)
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() || !n.is_finite() {
            return Err(Error::ZeroQuaternion);
        }
        Ok(Self::new(self.w / n, self.x / n, self.y / n, self.z / n))
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Hamilton product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = (self, rhs);
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    /// `q v q⁻¹` for a unit quaternion.
    pub fn rotate(&self, v: [T; 3]) -> [T; 3] {
        let p = Self::new(T::zero(), v[0], v[1], v[2]);
        let r = self.mul(&p).mul(&self.conjugate());
        [r.x, r.y, r.z]
    }
}

impl<T: Scalar> std::ops::Neg for Quaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Angle in degrees between the earth normal `[0, 0, 1]` and the same normal
/// carried through the device rotation `q`.
pub fn lean_forward_angle<T: Scalar>(q: Quaternion<T>) -> Result<T> {
    let q = if (q.norm() - T::one()).abs() > T::lit(1e-6) { q.normalized()? } else { q };
    if q.norm() == T::zero() {
        return Err(Error::ZeroQuaternion);
    }
    let n2 = q.rotate([T::zero(), T::zero(), T::one()]);
    // <n1, n2> with n1 = z-axis
    let dot = num_traits::clamp(n2[2], -T::one(), T::one());
    Ok(dot.acos().to_degrees())
}

/// Sum of squares of the tri-axial acceleration.
pub fn energy<T: Scalar>(a: [T; 3]) -> T {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signal {
    Prox,
    Ambient,
    Lfa,
    Energy,
}

impl Signal {
    pub const ALL: [Signal; 4] = [Signal::Prox, Signal::Ambient, Signal::Lfa, Signal::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Signal::Prox => "prox",
            Signal::Ambient => "ambient",
            Signal::Lfa => "lfa",
            Signal::Energy => "energy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sig| sig.name() == s)
    }
}

/// The four derived signals on the frame time base.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DerivedTrace {
    pub t: Vec<f64>,
    pub prox: Vec<f64>,
    pub ambient: Vec<f64>,
    /// Degrees in `[0, 180]`.
    pub lfa: Vec<f64>,
    /// g².
    pub energy: Vec<f64>,
}

pub const DERIVED_HEADER: &str = "t_ms,prox,ambient,lfa_deg,energy_g2";

impl DerivedTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn signal(&self, s: Signal) -> &[f64] {
        match s {
            Signal::Prox => &self.prox,
            Signal::Ambient => &self.ambient,
            Signal::Lfa => &self.lfa,
            Signal::Energy => &self.energy,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * (self.len() + 1));
        out.push_str(DERIVED_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                (self.t[i] * 1000.0).round() as i64,
                self.prox[i],
                self.ambient[i],
                self.lfa[i],
                self.energy[i]
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == DERIVED_HEADER => {}
            _ => return Err(Error::Parse { line: 1, msg: format!("expected header `{DERIVED_HEADER}`") }),
        }
        let mut tr = DerivedTrace::default();
        for (idx, raw) in lines {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = raw.split(',').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(Error::Parse { line, msg: format!("expected 5 columns, got {}", cols.len()) });
            }
            let mut v = [0.0; 5];
            for (k, c) in cols.iter().enumerate() {
                v[k] = c.parse().map_err(|_| Error::Parse { line, msg: format!("bad number `{c}`") })?;
            }
            tr.t.push(v[0] / 1000.0);
            tr.prox.push(v[1]);
            tr.ambient.push(v[2]);
            tr.lfa.push(v[3]);
            tr.energy.push(v[4]);
        }
        Ok(tr)
    }
}

/// Per-frame LFA and energy plus pass-through proximity and ambient light.
/// No smoothing is applied.
pub fn derive(session: &Session) -> Result<DerivedTrace> {
    if session.frames.is_empty() {
        return Err(Error::invalid("cannot derive signals from an empty session"));
    }
    let n = session.frames.len();
    let mut tr = DerivedTrace {
        t: Vec::with_capacity(n),
        prox: Vec::with_capacity(n),
        ambient: Vec::with_capacity(n),
        lfa: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
    };
    for f in &session.frames {
        tr.t.push(f.t);
        tr.prox.push(f.prox);
        tr.ambient.push(f.ambient);
        tr.lfa.push(lean_forward_angle(f.q)?);
        tr.energy.push(energy(f.accel));
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SensorFrame, SessionMeta};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn lfa_reference_rotations() {
        assert_eq!(lean_forward_angle(Quaternion::<f64>::identity()).unwrap(), 0.0);
        let q90 = Quaternion::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0);
        assert!((lean_forward_angle(q90).unwrap() - 90.0).abs() < 1e-9);
        let q180 = Quaternion::<f64>::new(0.0, 1.0, 0.0, 0.0);
        assert!((lean_forward_angle(q180).unwrap() - 180.0).abs() < 1e-9);
    }

    #[test]
    fn lfa_f32_path() {
        let q = Quaternion::<f32>::from_axis_angle([1.0, 0.0, 0.0], 30f32.to_radians());
        assert!((lean_forward_angle(q).unwrap() - 30.0).abs() < 1e-3);
    }

    #[test]
    fn lfa_zero_quaternion() {
        assert!(matches!(lean_forward_angle(Quaternion::<f64>::default()), Err(Error::ZeroQuaternion)));
    }

    #[test]
    fn lfa_normalizes_input() {
        let q = Quaternion::new(2.0, 0.0, 0.0, 0.0);
        assert_eq!(lean_forward_angle(q).unwrap(), 0.0);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy([0.0, 0.0, 0.0]), 0.0);
        assert_eq!(energy([1.0, 2.0, 2.0]), 9.0);
        assert_eq!(energy([-3.0, 4.0, 0.0]), 25.0);
    }

    fn frame(t: f64, q: Quaternion<f64>, a: [f64; 3]) -> SensorFrame {
        SensorFrame { t, prox: 10.0, ambient: 20.0, q, accel: a }
    }

    #[test]
    fn derive_single_frame() {
        let s = Session::new(SessionMeta::default(), vec![frame(0.0, Quaternion::identity(), [0.0, 0.0, 1.0])]).unwrap();
        let tr = derive(&s).unwrap();
        assert_eq!(tr.lfa, vec![0.0]);
        assert_eq!(tr.energy, vec![1.0]);
        assert_eq!(tr.prox, vec![10.0]);
    }

    #[test]
    fn derive_ramp_is_monotone() {
        let frames: Vec<_> = (0..=60)
            .map(|i| {
                let deg = i as f64 * 0.5;
                let q = Quaternion::from_axis_angle([1.0, 0.0, 0.0], deg.to_radians());
                frame(i as f64 * 0.05, q, [0.0, 0.0, 1.0])
            })
            .collect();
        let s = Session::new(SessionMeta::default(), frames).unwrap();
        let tr = derive(&s).unwrap();
        assert_eq!(tr.len(), 61);
        assert_eq!(tr.energy.len(), 61);
        for (i, w) in tr.lfa.windows(2).enumerate() {
            assert!(w[1] > w[0]);
            assert!((w[1] - (i + 1) as f64 * 0.5).abs() < 1e-9);
        }
        assert!((tr.lfa[60] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn derive_empty_session_errors() {
        let s = Session::new(SessionMeta::default(), vec![]).unwrap();
        assert!(derive(&s).is_err());
    }

    #[test]
    fn derived_csv_roundtrip() {
        let tr = DerivedTrace {
            t: vec![1.0, 1.05],
            prox: vec![3.5, 4.0],
            ambient: vec![0.0, 1.0],
            lfa: vec![90.0, 89.25],
            energy: vec![1.0, 1.125],
        };
        assert_eq!(DerivedTrace::from_csv(&tr.to_csv()).unwrap(), tr);
    }
}
