//! Limiting objects of the heat-evolved root distributions: the semicircle
//! potential `Psi`, the variational integrand `f_t`, the log potential `U_t`,
//! its maximizer `alpha_t`, the Stieltjes transform `m_t`, the density `p_t`,
//! the critical times, and the evenly spaced special case.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::ensembles::{Profile, ProfileKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("({0}, t) is not a regular point")]
    NonRegular(Complex64),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `sqrt(z^2 - 4 beta)` with the cut on `[-2 sqrt(beta), 2 sqrt(beta)]`,
/// behaving like `z` at infinity.
#[derive(Clone, Copy, Debug, Default)]
pub struct BranchSqrt;

impl BranchSqrt {
    pub fn eval(z: Complex64, beta: Complex64) -> Complex64 {
        let b = beta.sqrt() * 2.0;
        (z - b).sqrt() * (z + b).sqrt()
    }
}

/// Root `u` of `u + 1/u = z` with `|u| >= 1`.
pub fn joukowsky_inverse(z: Complex64) -> Complex64 {
    let u = (z + BranchSqrt::eval(z, c(1.0, 0.0))) * 0.5;
    if u.norm() < 1.0 {
        1.0 / u
    } else {
        u
    }
}

/// Log potential of the unit semicircle law.
pub fn psi(z: Complex64) -> f64 {
    let u = joukowsky_inverse(z);
    0.5 * (1.0 / (u * u)).re + u.norm().ln()
}

/// Larger-modulus root of `y^2 - z y + q = 0` for real `q >= 0`.
fn y_plus(z: Complex64, q: f64) -> Complex64 {
    if q == 0.0 {
        return z;
    }
    let s = q.sqrt();
    let w = (z * 0.5 - s).sqrt() * (z * 0.5 + s).sqrt();
    let y1 = z * 0.5 + w;
    let y2 = z * 0.5 - w;
    if y1.norm() >= y2.norm() {
        y1
    } else {
        y2
    }
}

fn dist_to_segment(w: Complex64) -> f64 {
    let x = w.re.abs();
    if x <= 2.0 {
        w.im.abs()
    } else {
        (x - 2.0).hypot(w.im)
    }
}

/// Result of maximizing `alpha -> f_t(alpha, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Maximizer {
    pub alpha: f64,
    /// `sup_alpha f_t(alpha, z)`
    pub value: f64,
    /// false when a second, distinct maximizer attains the same value
    pub unique: bool,
}

/// A profile at a fixed (possibly complex) time.
#[derive(Clone, Debug)]
pub struct LimitModel {
    profile: Profile,
    t: Complex64,
    tau: f64,
    rot: Complex64,
    closed_forms: bool,
}

const GRID: usize = 64;

impl LimitModel {
    /// Uses the Weyl closed forms where they exist.
    pub fn new(profile: Profile, t: Complex64) -> Self {
        let tau = t.norm();
        let rot = if tau == 0.0 { c(1.0, 0.0) } else { Complex64::from_polar(1.0, 0.5 * t.arg()) };
        LimitModel { profile, t, tau, rot, closed_forms: true }
    }

    pub fn real(profile: Profile, t: f64) -> Self {
        Self::new(profile, c(t, 0.0))
    }

    /// Always runs the variational optimizer, never a closed form.
    pub fn generic(profile: Profile, t: Complex64) -> Self {
        LimitModel { closed_forms: false, ..Self::new(profile, t) }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn t(&self) -> Complex64 {
        self.t
    }

    /// `e^{i phi/2}` for `t = |t| e^{i phi}`.
    pub fn rotation(&self) -> Complex64 {
        self.rot
    }

    fn unrotate(&self, z: Complex64) -> Complex64 {
        z * self.rot.conj()
    }

    fn weyl_fast(&self) -> bool {
        self.closed_forms && matches!(self.profile.kind(), ProfileKind::Weyl)
    }

    /// `f_t(alpha, z) = g(alpha) + alpha ln sqrt(|t| alpha) + alpha Psi(z / sqrt(t alpha))`.
    pub fn f(&self, alpha: f64, z: Complex64) -> f64 {
        self.f_real(alpha, self.unrotate(z))
    }

    fn f_real(&self, alpha: f64, z: Complex64) -> f64 {
        if alpha == 0.0 {
            return self.profile.g(0.0);
        }
        let q = self.tau * alpha;
        if q == 0.0 {
            // t = 0: f_0(alpha, z) = g(alpha) + alpha ln|z|
            return self.profile.g(alpha) + alpha * z.norm().ln();
        }
        let y = y_plus(z, q);
        self.profile.g(alpha) + alpha * y.norm().ln() + 0.5 * alpha * (q / (y * y)).re
    }

    /// `d f_t / d alpha = g'(alpha) + ln|y_+|`.
    fn df_real(&self, alpha: f64, z: Complex64) -> f64 {
        self.profile.g1(alpha) + y_plus(z, self.tau * alpha).norm().ln()
    }

    fn maximize_real(&self, z: Complex64) -> Maximizer {
        let g0 = self.profile.g(0.0);
        let mut cands: Vec<(f64, f64)> = vec![(0.0, g0), (1.0, self.f_real(1.0, z))];
        let node = |i: usize| {
            if i == 0 {
                1e-14
            } else {
                let s = i as f64 / GRID as f64;
                s * s
            }
        };
        let mut prev_a = node(0);
        let mut prev_d = self.df_real(prev_a, z);
        for i in 1..=GRID {
            let a = node(i);
            let d = self.df_real(a, z);
            if prev_d > 0.0 && d <= 0.0 {
                let (mut lo, mut hi) = (prev_a, a);
                for _ in 0..200 {
                    if hi - lo <= 1e-15 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if self.df_real(mid, z) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let am = 0.5 * (lo + hi);
                cands.push((am, self.f_real(am, z)));
            }
            prev_a = a;
            prev_d = d;
        }
        let mut best = cands[0];
        for &cd in &cands[1..] {
            if cd.1 > best.1 {
                best = cd;
            }
        }
        let unique = !cands
            .iter()
            .any(|&(a, v)| (a - best.0).abs() > 1e-3 && (best.1 - v).abs() <= 1e-13 * (1.0 + best.1.abs()));
        Maximizer { alpha: best.0, value: best.1, unique }
    }

    /// Maximizer of `f_t(., z)` by the generic optimizer.
    pub fn maximize(&self, z: Complex64) -> Maximizer {
        self.maximize_real(self.unrotate(z))
    }

    fn weyl_inside(&self, z: Complex64) -> Option<f64> {
        // z already unrotated
        if self.tau >= 1.0 {
            return None;
        }
        let a = (z.re / (1.0 + self.tau)).powi(2) + (z.im / (1.0 - self.tau)).powi(2);
        if a < 1.0 {
            Some(a)
        } else {
            None
        }
    }

    /// `alpha_t(z)`.
    pub fn alpha_t(&self, z: Complex64) -> f64 {
        if self.tau == 0.0 {
            return self.profile.alpha0(z.norm());
        }
        let zr = self.unrotate(z);
        if self.weyl_fast() {
            return self.weyl_inside(zr).unwrap_or(1.0);
        }
        self.maximize_real(zr).alpha
    }

    /// `U_t(z) = sup_alpha f_t(alpha, z) - g(1)`.
    pub fn u_t(&self, z: Complex64) -> f64 {
        if self.tau == 0.0 {
            return u_0(z, &self.profile);
        }
        let zr = self.unrotate(z);
        if self.weyl_fast() {
            return match self.weyl_inside(zr) {
                Some(_) => 0.5 * (zr.re * zr.re / (1.0 + self.tau) + zr.im * zr.im / (1.0 - self.tau)) - 0.5,
                None => 0.5 * self.tau.ln() + psi(zr / self.tau.sqrt()),
            };
        }
        self.maximize_real(zr).value - self.profile.g(1.0)
    }

    /// Stieltjes transform from a known `alpha_t` (unrotated coordinates).
    fn m_from_alpha(&self, zr: Complex64, alpha: f64) -> Complex64 {
        if alpha == 0.0 {
            return c(0.0, 0.0);
        }
        let q = self.tau * alpha;
        let y = y_plus(zr, q);
        (q / y) / self.tau
    }

    /// `m_t(z) = (z - sqrt(z^2 - 4 t alpha_t)) / 2t`; `alpha_0(z)/z` at `t = 0`.
    /// No regularity check; see [`LimitModel::m_t_checked`].
    pub fn m_t(&self, z: Complex64) -> Complex64 {
        if self.tau == 0.0 {
            if z == c(0.0, 0.0) {
                return c(0.0, 0.0);
            }
            return self.profile.alpha0(z.norm()) / z;
        }
        let zr = self.unrotate(z);
        if self.weyl_fast() {
            if self.weyl_inside(zr).is_some() {
                return self.rot.conj() * c(zr.re / (1.0 + self.tau), -zr.im / (1.0 - self.tau));
            }
            return self.rot.conj() * self.m_from_alpha(zr, 1.0);
        }
        let a = self.maximize_real(zr).alpha;
        self.rot.conj() * self.m_from_alpha(zr, a)
    }

    pub fn m_t_checked(&self, z: Complex64) -> Result<Complex64, LimitError> {
        if !self.is_regular(z) {
            return Err(LimitError::NonRegular(z));
        }
        Ok(self.m_t(z))
    }

    /// Stability test for regular points: unique maximizer, off the branch
    /// segment, and no jump of the maximizer under a 1e-5 perturbation.
    pub fn is_regular(&self, z: Complex64) -> bool {
        if self.tau == 0.0 {
            return true;
        }
        let zr = self.unrotate(z);
        let mx = self.maximize_real(zr);
        if !mx.unique {
            return false;
        }
        if mx.alpha > 0.0 && dist_to_segment(zr / (self.tau * mx.alpha).sqrt()) <= 1e-6 {
            return false;
        }
        let h = 1e-5;
        [c(h, 0.0), c(-h, 0.0), c(0.0, h), c(0.0, -h)]
            .iter()
            .all(|&d| (self.maximize_real(zr + d).alpha - mx.alpha).abs() <= 1e-3)
    }

    /// `d alpha_t / d zbar` in unrotated coordinates.
    fn dbar_alpha(&self, zr: Complex64, alpha: f64) -> Complex64 {
        if self.weyl_fast() {
            return c(zr.re / (1.0 + self.tau).powi(2), zr.im / (1.0 - self.tau).powi(2));
        }
        if !matches!(self.profile.kind(), ProfileKind::Custom(_)) {
            // implicit differentiation of g'(alpha) + ln|y_+(alpha, z)| = 0
            let q = self.tau * alpha;
            let y = y_plus(zr, q);
            let d = y - q / y;
            let num = (1.0 / d).conj() * 0.5;
            let den = self.profile.g2(alpha) - (self.tau / (y * d)).re;
            return -num / den;
        }
        let h = 1e-5;
        let a = |w: Complex64| self.maximize_real(w).alpha;
        let ax = (a(zr + c(h, 0.0)) - a(zr - c(h, 0.0))) / (2.0 * h);
        let ay = (a(zr + c(0.0, h)) - a(zr - c(0.0, h))) / (2.0 * h);
        c(0.5 * ax, 0.5 * ay)
    }

    /// Density of the absolutely continuous part at `z`; zero where
    /// `alpha_t` is 0 or 1.  No regularity check.
    pub fn density(&self, z: Complex64) -> f64 {
        if self.tau == 0.0 {
            let r = z.norm();
            if r == 0.0 {
                return self.profile.alpha0_prime(1e-300) / (2.0 * PI * 1e-300);
            }
            return self.profile.alpha0_prime(r) / (2.0 * PI * r);
        }
        let zr = self.unrotate(z);
        let alpha = if self.weyl_fast() {
            match self.weyl_inside(zr) {
                Some(a) => a,
                None => return 0.0,
            }
        } else {
            self.maximize_real(zr).alpha
        };
        if alpha <= 0.0 || alpha >= 1.0 {
            return 0.0;
        }
        let q = self.tau * alpha;
        let y = y_plus(zr, q);
        let d = y - q / y;
        (self.dbar_alpha(zr, alpha) / d).re / PI
    }

    pub fn density_checked(&self, z: Complex64) -> Result<f64, LimitError> {
        if !self.is_regular(z) {
            return Err(LimitError::NonRegular(z));
        }
        Ok(self.density(z))
    }

    /// `1/2 ln|t| + Psi(z / sqrt t)`, the log potential of the semicircle law
    /// of variance `t`.
    pub fn wigner_potential(&self, z: Complex64) -> f64 {
        0.5 * self.tau.ln() + psi(self.unrotate(z) / self.tau.sqrt())
    }
}

fn wirtinger(f: impl Fn(Complex64) -> Complex64, x: Complex64, h: f64) -> Complex64 {
    let dx = (f(x + h) - f(x - h)) / (2.0 * h);
    let dy = (f(x + Complex64::new(0.0, h)) - f(x - Complex64::new(0.0, h))) / (2.0 * h);
    (dx - Complex64::new(0.0, 1.0) * dy) * 0.5
}

fn model_at(profile: &Profile, t: Complex64, closed_forms: bool) -> LimitModel {
    if closed_forms {
        LimitModel::new(profile.clone(), t)
    } else {
        LimitModel::generic(profile.clone(), t)
    }
}

/// `|d_t U_t + (d_z U_t)^2|` with Wirtinger derivatives in `t` and `z` by
/// central differences of step `h`.
pub fn hj_residual(profile: &Profile, z: Complex64, t: Complex64, h: f64, closed_forms: bool) -> f64 {
    let u = |zz: Complex64, tt: Complex64| Complex64::new(model_at(profile, tt, closed_forms).u_t(zz), 0.0);
    let dt = wirtinger(|tt| u(z, tt), t, h);
    let m = model_at(profile, t, closed_forms);
    let dz = wirtinger(|zz| Complex64::new(m.u_t(zz), 0.0), z, h);
    (dt + dz * dz).norm()
}

/// `|d_t m_t + m_t d_z m_t|`, same scheme.
pub fn burgers_residual(profile: &Profile, z: Complex64, t: Complex64, h: f64, closed_forms: bool) -> f64 {
    let dt = wirtinger(|tt| model_at(profile, tt, closed_forms).m_t(z), t, h);
    let m = model_at(profile, t, closed_forms);
    let dz = wirtinger(|zz| m.m_t(zz), z, h);
    (dt + m.m_t(z) * dz).norm()
}

/// `U_0(z) = sup_alpha (g(alpha) + alpha ln|z|) - g(1)`; at `z = 0` the
/// supremum is attained at `alpha = 0`.
pub fn u_0(z: Complex64, profile: &Profile) -> f64 {
    let r = z.norm();
    if r == 0.0 {
        return profile.g(0.0) - profile.g(1.0);
    }
    let a = profile.alpha0(r);
    let lin = if a == 0.0 { 0.0 } else { a * r.ln() };
    profile.g(a) + lin - profile.g(1.0)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximum of `f` on `[0,1]` given its endpoint limits: 2000-point grid plus
/// golden-section refinement around the best node.
fn grid_golden_max<F: Fn(f64) -> f64>(f: F, at0: f64, at1: f64) -> f64 {
    const N: usize = 2000;
    let mut best = at0.max(at1);
    let mut best_i = None;
    for i in 1..N {
        let v = f(i as f64 / N as f64);
        if v > best {
            best = v;
            best_i = Some(i);
        }
    }
    if let Some(i) = best_i {
        let (_, v) = golden_max(&f, (i - 1) as f64 / N as f64, (i + 1) as f64 / N as f64, 1e-13);
        best = best.max(v);
    }
    best
}

/// Exponent of the collapse criterion, `ln` of the quantity maximized by `t_wig`.
fn wig_exponent(profile: &Profile, a: f64) -> f64 {
    2.0 * (profile.g(a) - profile.g(1.0)) / (1.0 - a) + a * a.ln() / (1.0 - a) + 1.0
}

/// Time after which the limit is the semicircle law of variance `t`.
pub fn t_wig(profile: &Profile) -> f64 {
    let at0 = 2.0 * (profile.g(0.0) - profile.g(1.0)) + 1.0;
    let at1 = -2.0 * profile.gprime1();
    grid_golden_max(|a| wig_exponent(profile, a), at0, at1).exp()
}

/// `|g'' e^{-2g'} / (1 + alpha g'')|`.
fn sing_ratio(profile: &Profile, a: f64) -> f64 {
    let g2 = profile.g2(a);
    (g2 * (-2.0 * profile.g1(a)).exp() / (1.0 + a * g2)).abs()
}

/// Singularity time by the generic grid search (no closed forms).
pub fn t_sing_numeric(profile: &Profile) -> f64 {
    let lo = if profile.gprime0().is_finite() { 0.0 } else { 1e-300 };
    let at0 = sing_ratio(profile, lo);
    let at1 = sing_ratio(profile, 1.0);
    -grid_golden_max(|a| -sing_ratio(profile, a), -at0, -at1)
}

/// First time singular (one-dimensional) components can form; `None` when
/// `g` is not strictly concave (Kac), where the time is undefined.
pub fn t_sing(profile: &Profile) -> Option<f64> {
    match profile.kind() {
        ProfileKind::Kac => None,
        ProfileKind::Weyl => Some(1.0),
        ProfileKind::LittlewoodOfford { beta } => Some(if *beta <= 0.5 { beta / (1.0 - beta) } else { 0.0 }),
        ProfileKind::GaussianAnnulus => Some(1.0),
        ProfileKind::Custom(_) => {
            if profile.strictly_concave() {
                Some(t_sing_numeric(profile))
            } else {
                None
            }
        }
    }
}

/// Regimes of the evenly spaced limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvenlyRegime {
    LevelSet,
    Mixed,
    Wigner,
}

pub fn evenly_spaced_regime(r: f64, t: Complex64) -> EvenlyRegime {
    let tau = t.norm();
    let e = std::f64::consts::E;
    if tau <= r * r / e {
        EvenlyRegime::LevelSet
    } else if tau < r * r * e {
        EvenlyRegime::Mixed
    } else {
        EvenlyRegime::Wigner
    }
}

/// Limit log potential of the heat-evolved `z^n - r^n`:
/// `max{1/2 ln|t| + Psi(z/sqrt t), ln r}`.
pub fn evenly_spaced_limit(r: f64, t: Complex64, z: Complex64) -> f64 {
    let tau = t.norm();
    let zr = z * Complex64::from_polar(1.0, -0.5 * t.arg());
    (0.5 * tau.ln() + psi(zr / tau.sqrt())).max(r.ln())
}

/// `|Psi(z/sqrt t) - ln(r/sqrt|t|)| <= delta`.
pub fn on_level_set(r: f64, t: Complex64, z: Complex64, delta: f64) -> bool {
    level_set_gap(r, t, z) <= delta
}

pub fn level_set_gap(r: f64, t: Complex64, z: Complex64) -> f64 {
    let tau = t.norm();
    let zr = z * Complex64::from_polar(1.0, -0.5 * t.arg());
    (psi(zr / tau.sqrt()) - (r / tau.sqrt()).ln()).abs()
}

/// Positive real interval carrying mass in the mixed regime (real `t`).
pub fn evenly_spaced_interval(r: f64, t: f64) -> Option<(f64, f64)> {
    let e = std::f64::consts::E;
    if t > r * r / e && t < r * r * e {
        Some(((2.0 * t * (r * r * e / t).ln()).sqrt(), 2.0 * t.sqrt()))
    } else {
        None
    }
}

/// Weyl closed forms on and off the ellipse `E_t`, real `0 < t < 1`.
pub mod weyl {
    use super::*;

    pub fn inside(z: Complex64, t: f64) -> bool {
        t < 1.0 && (z.re / (1.0 + t)).powi(2) + (z.im / (1.0 - t)).powi(2) < 1.0
    }

    pub fn u_t(z: Complex64, t: f64) -> f64 {
        if inside(z, t) {
            0.5 * (z.re * z.re / (1.0 + t) + z.im * z.im / (1.0 - t)) - 0.5
        } else {
            0.5 * t.ln() + psi(z / t.sqrt())
        }
    }

    pub fn m_t(z: Complex64, t: f64) -> Complex64 {
        if inside(z, t) {
            c(z.re / (1.0 + t), -z.im / (1.0 - t))
        } else {
            (z - BranchSqrt::eval(z, c(t, 0.0))) / (2.0 * t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn psi_examples() {
        assert!((psi(c(0.0, 0.0)) + 0.5).abs() < 1e-15);
        assert!((psi(c(1.0, 0.0)) + 0.25).abs() < 1e-15);
        assert!((psi(c(2.5, 0.0)) - (0.125 + 2f64.ln())).abs() < 1e-14);
        for x in [-1.9, -0.3, 0.7, 1.99] {
            assert!((psi(c(x, 0.0)) - (x * x / 4.0 - 0.5)).abs() < 1e-14);
        }
    }

    #[test]
    fn joukowsky_on_circles() {
        for r in [1.0001, 1.5, 3.0, 10.0] {
            for k in 0..24 {
                let u = Complex64::from_polar(r, k as f64 * PI / 12.0 + 0.01);
                let z = u + 1.0 / u;
                let back = joukowsky_inverse(z);
                assert!((back - u).norm() < 1e-12 * r, "r={} k={}", r, k);
                let w = BranchSqrt::eval(z, c(1.0, 0.0));
                assert!((w - (u - 1.0 / u)).norm() < 1e-12 * r);
                assert!((psi(z) - (0.5 * (1.0 / (u * u)).re + r.ln())).abs() < 1e-13);
            }
        }
        let z = c(1e6, -3e5);
        assert!((BranchSqrt::eval(z, c(2.0, 1.0)) / z - 1.0).norm() < 1e-10);
    }

    #[test]
    fn f_examples() {
        let m = LimitModel::real(Profile::weyl(), 0.7);
        assert_eq!(m.f(0.0, c(0.3, 0.2)), 0.0);
        let w = LimitModel::real(Profile::weyl(), 1.0);
        assert!(w.f(1.0, c(0.0, 0.0)).abs() < 1e-15);
        for z in [c(0.3, 0.2), c(-2.0, 1.0), c(4.0, 0.0)] {
            let want = 0.5 + 0.5 * 0.7f64.ln() + psi(z / 0.7f64.sqrt());
            assert!((m.f(1.0, z) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn u_t_examples() {
        let m = LimitModel::generic(Profile::weyl(), c(0.5, 0.0));
        assert!((m.u_t(c(0.0, 0.0)) + 0.5).abs() < 1e-12);
        let want = 0.5 * 0.5f64.ln() + psi(c(3.0 * 2f64.sqrt(), 0.0));
        assert!((m.u_t(c(3.0, 0.0)) - want).abs() < 1e-12);
        for p in [Profile::weyl(), Profile::littlewood_offord(0.25), Profile::gaussian_annulus(), Profile::kac()] {
            let m = LimitModel::generic(p.clone(), c(0.4, 0.0));
            let z = c(9.0, 7.0);
            assert!((m.u_t(z) - m.wigner_potential(z)).abs() < 1e-12, "{}", p);
        }
    }

    #[test]
    fn u_0_examples() {
        assert!((u_0(c(2.0, 0.0), &Profile::kac()) - 2f64.ln()).abs() < 1e-15);
        assert!(u_0(c(0.0, 1.0), &Profile::weyl()).abs() < 1e-15);
        assert!((u_0(c(0.5, 0.0), &Profile::weyl()) + 0.375).abs() < 1e-15);
        assert_eq!(u_0(c(0.0, 0.0), &Profile::kac()), 0.0);
    }

    #[test]
    fn alpha_and_m_examples() {
        let m = LimitModel::real(Profile::weyl(), 0.5);
        assert_eq!(m.alpha_t(c(0.0, 0.0)), 0.0);
        assert_eq!(m.alpha_t(c(2.0, 0.0)), 1.0);
        assert!((m.m_t(c(0.5, 0.0)) - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        let g = LimitModel::generic(Profile::weyl(), c(0.5, 0.0));
        assert!(g.alpha_t(c(0.0, 0.0)) < 1e-12);
        assert_eq!(g.alpha_t(c(2.0, 0.0)), 1.0);
        assert!((g.m_t(c(0.5, 0.0)) - c(1.0 / 3.0, 0.0)).norm() < 1e-12);
        // annulus: alpha_t = 0 near the origin
        let a = LimitModel::generic(Profile::gaussian_annulus(), c(0.5, 0.0));
        assert_eq!(a.m_t(c(0.2, 0.1)), c(0.0, 0.0));
        // past t_Wig the transform is that of the semicircle
        let k = LimitModel::generic(Profile::weyl(), c(1.5, 0.0));
        let z = c(0.4, 0.9);
        let sc = (z - BranchSqrt::eval(z, c(1.5, 0.0))) / 3.0;
        assert!((k.m_t(z) - sc).norm() < 1e-12);
    }

    #[test]
    fn density_examples() {
        let want = 4.0 / (3.0 * PI);
        let m = LimitModel::real(Profile::weyl(), 0.5);
        assert!((m.density(c(0.3, 0.2)) - want).abs() < 1e-14);
        let g = LimitModel::generic(Profile::weyl(), c(0.5, 0.0));
        for z in [c(0.3, 0.2), c(-1.0, 0.1), c(0.2, -0.4)] {
            assert!((g.density(z) - want).abs() < 1e-9, "{}", g.density(z));
        }
        assert_eq!(g.density(c(3.0, 0.0)), 0.0);
        let m0 = LimitModel::real(Profile::weyl(), 0.0);
        assert!((m0.density(c(0.3, 0.4)) - 1.0 / PI).abs() < 1e-15);
        let a = LimitModel::generic(Profile::gaussian_annulus(), c(0.5, 0.0));
        assert_eq!(a.density(c(0.1, 0.1)), 0.0);
    }

    #[test]
    fn density_implicit_matches_differences() {
        // LO: compare the implicit-function derivative with finite differences
        let p = Profile::littlewood_offord(0.25);
        let m = LimitModel::generic(p, c(0.2, 0.0));
        for z in [c(0.5, 0.3), c(-0.2, 0.7), c(0.9, -0.1)] {
            let zr = z;
            let a = m.maximize(zr).alpha;
            let h = 1e-5;
            let ax = (m.maximize(zr + c(h, 0.0)).alpha - m.maximize(zr - c(h, 0.0)).alpha) / (2.0 * h);
            let ay = (m.maximize(zr + c(0.0, h)).alpha - m.maximize(zr - c(0.0, h)).alpha) / (2.0 * h);
            let fd = c(0.5 * ax, 0.5 * ay);
            let an = m.dbar_alpha(zr, a);
            assert!((fd - an).norm() < 1e-6 * (1.0 + an.norm()), "{} {}", fd, an);
        }
    }

    #[test]
    fn critical_times() {
        let e = std::f64::consts::E;
        assert!((t_wig(&Profile::kac()) - e).abs() < 1e-9);
        assert!((t_wig(&Profile::weyl()) - 1.0).abs() < 1e-9);
        assert!((t_wig(&Profile::gaussian_annulus()) - e * e).abs() < 1e-9);
        assert!((t_wig(&Profile::littlewood_offord(0.25)) - e.sqrt()).abs() < 1e-9);
        assert!((t_wig(&Profile::littlewood_offord(0.75)) - 1.0).abs() < 1e-9);
        assert_eq!(t_sing(&Profile::littlewood_offord(0.25)), Some(1.0 / 3.0));
        assert_eq!(t_sing(&Profile::littlewood_offord(0.75)), Some(0.0));
        assert_eq!(t_sing(&Profile::gaussian_annulus()), Some(1.0));
        assert_eq!(t_sing(&Profile::kac()), None);
        for (p, v) in [
            (Profile::weyl(), 1.0),
            (Profile::littlewood_offord(0.25), 1.0 / 3.0),
            (Profile::littlewood_offord(0.75), 0.0),
            (Profile::gaussian_annulus(), 1.0),
        ] {
            assert!((t_sing_numeric(&p) - v).abs() < 1e-9, "{}: {}", p, t_sing_numeric(&p));
        }
    }

    #[test]
    fn t_sing_below_t_wig() {
        for p in [Profile::weyl(), Profile::littlewood_offord(0.25), Profile::littlewood_offord(0.75),
                  Profile::littlewood_offord(0.4), Profile::gaussian_annulus()] {
            let s = t_sing(&p).unwrap();
            let w = t_wig(&p);
            assert!(s <= w + 1e-12);
            if p != Profile::weyl() {
                assert!(s < w - 1e-6, "{}", p);
            }
        }
    }

    #[test]
    fn evenly_spaced_examples() {
        assert_eq!(evenly_spaced_interval(1.0, 1.0), Some((2f64.sqrt(), 2.0)));
        let t = 3.0;
        for x in [-3.0, -1.0, 0.0, 2.5] {
            let z = c(x, 0.0);
            let v = evenly_spaced_limit(1.0, c(t, 0.0), z);
            assert!((v - (0.5 * t.ln() + psi(z / t.sqrt()))).abs() < 1e-15);
        }
        assert_eq!(evenly_spaced_regime(1.0, c(0.2, 0.0)), EvenlyRegime::LevelSet);
        assert_eq!(evenly_spaced_regime(1.0, c(1.0, 0.0)), EvenlyRegime::Mixed);
        assert_eq!(evenly_spaced_regime(1.0, c(3.0, 0.0)), EvenlyRegime::Wigner);
        // regime (a): the level set is where the two branches meet
        let t = 0.2;
        let z = c(0.0, 1.0);
        let _ = on_level_set(1.0, c(t, 0.0), z, 0.05);
        assert!(evenly_spaced_limit(1.0, c(t, 0.0), c(0.0, 0.0)) == 0.0);
    }

    #[test]
    fn regular_points() {
        let m = LimitModel::generic(Profile::weyl(), c(0.5, 0.0));
        assert!(m.is_regular(c(0.3, 0.1)));
        assert!(m.is_regular(c(3.0, 1.0)));
        let w = LimitModel::generic(Profile::weyl(), c(1.5, 0.0));
        assert!(!w.is_regular(c(0.5, 0.0)));
        assert!(w.m_t_checked(c(0.5, 0.0)).is_err());
        assert!(w.is_regular(c(0.5, 0.5)));
        let lo = LimitModel::generic(Profile::littlewood_offord(0.75), c(0.25, 0.0));
        assert!(!lo.is_regular(c(0.1, 0.0)));
        assert!(lo.density_checked(c(0.1, 0.0)).is_err());
    }

    #[test]
    fn subharmonic_probe() {
        for p in [Profile::weyl(), Profile::littlewood_offord(0.25), Profile::gaussian_annulus(), Profile::littlewood_offord(0.75)] {
            let m = LimitModel::generic(p.clone(), c(0.3, 0.0));
            // small step so the O(h^4) stencil truncation stays far below the bound
            let h = 1e-3;
            for i in 0..50 {
                for j in 0..50 {
                    let z = c(-2.5 + 5.0 * i as f64 / 49.0, -2.5 + 5.0 * j as f64 / 49.0);
                    let lap = m.u_t(z + h) + m.u_t(z - h) + m.u_t(z + c(0.0, h)) + m.u_t(z - c(0.0, h)) - 4.0 * m.u_t(z);
                    assert!(lap >= -1e-8, "{} z={} lap={}", p, z, lap);
                }
            }
        }
    }

    #[test]
    fn pde_residuals_weyl() {
        let p = Profile::weyl();
        let t = c(0.5, 0.0);
        for i in 0..12 {
            for j in 0..12 {
                let z = c(-3.0 + 6.0 * (i as f64 + 0.5) / 12.0, -3.0 + 6.0 * (j as f64 + 0.5) / 12.0);
                let m = LimitModel::new(p.clone(), t);
                // stay off the ellipse boundary where U_t is only C^1
                let a = (z.re / 1.5).powi(2) + (z.im / 0.5).powi(2);
                if (a - 1.0).abs() < 0.05 || !m.is_regular(z) {
                    continue;
                }
                assert!(hj_residual(&p, z, t, 1e-4, true) <= 1e-5, "{}", z);
                assert!(burgers_residual(&p, z, t, 1e-4, true) <= 1e-5, "{}", z);
            }
        }
        // generic optimizer path, Littlewood-Offord
        let lo = Profile::littlewood_offord(0.25);
        for z in [c(0.4, 0.3), c(2.0, -1.0), c(-0.1, 0.6)] {
            assert!(hj_residual(&lo, z, c(0.2, 0.0), 1e-4, false) <= 1e-5);
            assert!(burgers_residual(&lo, z, c(0.2, 0.0), 1e-4, false) <= 1e-5);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn lower_bound_and_collapse(x in -4.0..4.0f64, y in -4.0..4.0f64, t in 0.05..3.0f64, which in 0usize..4) {
            let p = [Profile::weyl(), Profile::littlewood_offord(0.25), Profile::gaussian_annulus(), Profile::kac()][which].clone();
            let m = LimitModel::generic(p.clone(), c(t, 0.0));
            let z = c(x, y);
            prop_assert!(m.u_t(z) - m.wigner_potential(z) >= -1e-10);
            let tw = t_wig(&p);
            let late = LimitModel::generic(p, c(tw * (1.0 + t), 0.0));
            prop_assert!((late.u_t(z) - late.wigner_potential(z)).abs() <= 1e-9);
        }

        #[test]
        fn rotation_covariance(x in -3.0..3.0f64, y in -3.0..3.0f64, t in 0.05..2.0f64, phi in -3.1..3.1f64, which in 0usize..3) {
            let p = [Profile::weyl(), Profile::littlewood_offord(0.25), Profile::gaussian_annulus()][which].clone();
            let z = c(x, y);
            let a = LimitModel::generic(p.clone(), Complex64::from_polar(t, phi)).u_t(z * Complex64::from_polar(1.0, 0.5 * phi));
            let b = LimitModel::generic(p, c(t, 0.0)).u_t(z);
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn alpha_from_m_is_real(x in -3.0..3.0f64, y in -3.0..3.0f64, t in 0.05..0.3f64, which in 0usize..3) {
            let p = [Profile::weyl(), Profile::littlewood_offord(0.25), Profile::gaussian_annulus()][which].clone();
            let m = LimitModel::generic(p, c(t, 0.0));
            let z = c(x, y);
            if m.is_regular(z) {
                let s = m.m_t(z);
                let a = s * (z - s * t);
                prop_assert!(a.im.abs() <= 1e-8);
                prop_assert!((a.re - m.alpha_t(z)).abs() <= 1e-8);
            }
        }
    }
}
