//! Coefficient profiles `g` and the random polynomial ensembles built on them.
//!
//! A profile describes coefficients of size `|a_{k;n}| = exp(n g(k/n) + o(n))`;
//! `alpha0` is the radial distribution function of the limiting root law.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::numerics::ExtComplex;
use crate::poly::Polynomial;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("leading coefficient sampled as exactly zero twice")]
    ZeroLeading,
    #[error("degree must be at least 1")]
    BadDegree,
    #[error("bad profile spec '{0}': {1}")]
    BadSpec(String, String),
    #[error("bad custom profile table: {0}")]
    BadTable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// `(alpha, g(alpha))` table interpolated by a monotone (Fritsch-Carlson) cubic.
#[derive(Clone, Debug, PartialEq)]
pub struct CustomProfile {
    alpha: Vec<f64>,
    g: Vec<f64>,
    slope: Vec<f64>,
}

impl CustomProfile {
    pub fn new(alpha: Vec<f64>, g: Vec<f64>) -> Result<Self, EnsembleError> {
        if alpha.len() != g.len() || alpha.len() < 2 {
            return Err(EnsembleError::BadTable("need at least two (alpha, g) rows".into()));
        }
        if alpha.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EnsembleError::BadTable("alpha must be strictly increasing".into()));
        }
        if alpha[0] != 0.0 || *alpha.last().unwrap() != 1.0 {
            return Err(EnsembleError::BadTable("alpha must run from 0 to 1".into()));
        }
        let m = alpha.len();
        let d: Vec<f64> = (0..m - 1).map(|i| (g[i + 1] - g[i]) / (alpha[i + 1] - alpha[i])).collect();
        let mut slope = vec![0.0; m];
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if v * d0 <= 0.0 && d0 != 0.0 {
                0.0
            } else if d0 * d1 < 0.0 && v.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                v
            }
        };
        if m == 2 {
            slope[0] = d[0];
            slope[1] = d[0];
        } else {
            slope[0] = end(alpha[1] - alpha[0], alpha[2] - alpha[1], d[0], d[1]);
            slope[m - 1] = end(alpha[m - 1] - alpha[m - 2], alpha[m - 2] - alpha[m - 3], d[m - 2], d[m - 3]);
        }
        for i in 1..m - 1 {
            if d[i - 1] * d[i] <= 0.0 {
                slope[i] = 0.0;
            } else {
                let h0 = alpha[i] - alpha[i - 1];
                let h1 = alpha[i + 1] - alpha[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slope[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        Ok(CustomProfile { alpha, g, slope })
    }

    /// Reads `alpha,g` rows; a non-numeric first line is taken as a header.
    pub fn from_csv(path: &Path) -> Result<Self, EnsembleError> {
        let text = std::fs::read_to_string(path)?;
        let mut a = Vec::new();
        let mut g = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(EnsembleError::BadTable(format!("line {}: expected two columns", i + 1)));
            }
            match (parts[0].parse::<f64>(), parts[1].parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    a.push(x);
                    g.push(y);
                }
                _ if i == 0 => continue,
                _ => return Err(EnsembleError::BadTable(format!("line {}: not numeric", i + 1))),
            }
        }
        Self::new(a, g)
    }

    fn segment(&self, x: f64) -> usize {
        let m = self.alpha.len();
        match self.alpha.binary_search_by(|a| a.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(m - 2),
            Err(i) => i.saturating_sub(1).min(m - 2),
        }
    }

    /// Value and first two derivatives of the interpolant.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let i = self.segment(x);
        let h = self.alpha[i + 1] - self.alpha[i];
        let t = (x - self.alpha[i]) / h;
        let (y0, y1, m0, m1) = (self.g[i], self.g[i + 1], self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let d = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1) / h;
        let dd = ((12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1) / (h * h);
        (v, d, dd)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    Weyl,
    Kac,
    LittlewoodOfford { beta: f64 },
    GaussianAnnulus,
    Custom(CustomProfile),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    kind: ProfileKind,
}

fn xlogx(a: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * a.ln()
    }
}

impl Profile {
    pub fn weyl() -> Self {
        Profile { kind: ProfileKind::Weyl }
    }

    pub fn kac() -> Self {
        Profile { kind: ProfileKind::Kac }
    }

    pub fn littlewood_offord(beta: f64) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        Profile { kind: ProfileKind::LittlewoodOfford { beta } }
    }

    pub fn gaussian_annulus() -> Self {
        Profile { kind: ProfileKind::GaussianAnnulus }
    }

    pub fn custom(c: CustomProfile) -> Self {
        Profile { kind: ProfileKind::Custom(c) }
    }

    /// Parses `weyl`, `kac`, `lo:beta=0.75`, `annulus`, `custom:file.csv`.
    pub fn parse(spec: &str) -> Result<Self, EnsembleError> {
        let bad = |m: &str| EnsembleError::BadSpec(spec.to_string(), m.to_string());
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (spec, None),
        };
        match (head, rest) {
            ("weyl", None) => Ok(Self::weyl()),
            ("kac", None) => Ok(Self::kac()),
            ("annulus", None) => Ok(Self::gaussian_annulus()),
            ("lo", Some(r)) => {
                let v = r.strip_prefix("beta=").ok_or_else(|| bad("expected lo:beta=<value>"))?;
                let beta: f64 = v.parse().map_err(|_| bad("beta is not a number"))?;
                if !(beta > 0.0 && beta.is_finite()) {
                    return Err(bad("beta must be positive"));
                }
                Ok(Self::littlewood_offord(beta))
            }
            ("custom", Some(path)) => Ok(Self::custom(CustomProfile::from_csv(Path::new(path))?)),
            _ => Err(bad("unknown profile")),
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ProfileKind::Weyl => "weyl".into(),
            ProfileKind::Kac => "kac".into(),
            ProfileKind::LittlewoodOfford { beta } => format!("lo:beta={}", beta),
            ProfileKind::GaussianAnnulus => "annulus".into(),
            ProfileKind::Custom(_) => "custom".into(),
        }
    }

    pub fn g(&self, a: f64) -> f64 {
        match &self.kind {
            ProfileKind::Weyl => -0.5 * (xlogx(a) - a),
            ProfileKind::Kac => 0.0,
            ProfileKind::LittlewoodOfford { beta } => -beta * (xlogx(a) - a),
            ProfileKind::GaussianAnnulus => -0.5 * a * a,
            ProfileKind::Custom(c) => c.eval(a).0,
        }
    }

    /// `g'(a)`; `+inf` at `a = 0` where the one-sided derivative diverges.
    pub fn g1(&self, a: f64) -> f64 {
        match &self.kind {
            ProfileKind::Weyl => -0.5 * a.ln(),
            ProfileKind::Kac => 0.0,
            ProfileKind::LittlewoodOfford { beta } => -beta * a.ln(),
            ProfileKind::GaussianAnnulus => -a,
            ProfileKind::Custom(c) => c.eval(a).1,
        }
    }

    /// `g''(a)`.
    pub fn g2(&self, a: f64) -> f64 {
        match &self.kind {
            ProfileKind::Weyl => -0.5 / a,
            ProfileKind::Kac => 0.0,
            ProfileKind::LittlewoodOfford { beta } => -beta / a,
            ProfileKind::GaussianAnnulus => -1.0,
            ProfileKind::Custom(c) => c.eval(a).2,
        }
    }

    pub fn gprime0(&self) -> f64 {
        self.g1(0.0)
    }

    pub fn gprime1(&self) -> f64 {
        self.g1(1.0)
    }

    /// Whether `g'' < 0` on `(0,1)` (fails for Kac).
    pub fn strictly_concave(&self) -> bool {
        match &self.kind {
            ProfileKind::Kac => false,
            ProfileKind::Custom(_) => (1..200).all(|i| self.g2(i as f64 / 200.0) < 0.0),
            _ => true,
        }
    }

    /// Radial distribution function of the initial root law.
    pub fn alpha0(&self, r: f64) -> f64 {
        match &self.kind {
            ProfileKind::Weyl => (r * r).min(1.0),
            ProfileKind::Kac => {
                if r >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ProfileKind::LittlewoodOfford { beta } => r.powf(1.0 / beta).min(1.0),
            ProfileKind::GaussianAnnulus => r.ln().clamp(0.0, 1.0),
            ProfileKind::Custom(_) => {
                // maximizer of g(a) + a ln r: solve g'(a) = -ln r
                let target = -r.ln();
                if target >= self.gprime0() {
                    return 0.0;
                }
                if target <= self.gprime1() {
                    return 1.0;
                }
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.g1(mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-16 {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// `d alpha0 / dr`.
    pub fn alpha0_prime(&self, r: f64) -> f64 {
        match &self.kind {
            ProfileKind::Weyl => {
                if r < 1.0 {
                    2.0 * r
                } else {
                    0.0
                }
            }
            ProfileKind::Kac => 0.0,
            ProfileKind::LittlewoodOfford { beta } => {
                if r < 1.0 {
                    r.powf(1.0 / beta - 1.0) / beta
                } else {
                    0.0
                }
            }
            ProfileKind::GaussianAnnulus => {
                if r > 1.0 && r < std::f64::consts::E {
                    1.0 / r
                } else {
                    0.0
                }
            }
            ProfileKind::Custom(_) => {
                let a = self.alpha0(r);
                if a <= 0.0 || a >= 1.0 {
                    0.0
                } else {
                    -1.0 / (r * self.g2(a))
                }
            }
        }
    }

    /// Inner and outer radius of the support annulus of the initial law.
    pub fn support_radii(&self) -> (f64, f64) {
        ((-self.gprime0()).exp(), (-self.gprime1()).exp())
    }

    /// Smallest `r` with `alpha0(r) >= u` (inverse radial distribution function).
    pub fn radius_quantile(&self, u: f64) -> f64 {
        match &self.kind {
            ProfileKind::Weyl => u.sqrt(),
            ProfileKind::Kac => 1.0,
            ProfileKind::LittlewoodOfford { beta } => u.powf(*beta),
            ProfileKind::GaussianAnnulus => u.exp(),
            ProfileKind::Custom(_) => {
                let (mut lo, mut hi) = self.support_radii();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.alpha0(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// `ln a_{k;n}` for the deterministic coefficient scale.
    pub fn ln_coefficient(&self, k: usize, n: usize, ln_fact: &[f64]) -> f64 {
        let nf = n as f64;
        let kf = k as f64;
        match &self.kind {
            ProfileKind::Weyl => 0.5 * kf * nf.ln() - 0.5 * ln_fact[k],
            ProfileKind::Kac => 0.0,
            ProfileKind::LittlewoodOfford { beta } => beta * (kf * nf.ln() - ln_fact[k]),
            ProfileKind::GaussianAnnulus => -kf * kf / (2.0 * nf),
            ProfileKind::Custom(_) => nf * self.g(kf / nf),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    v.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        v.push(acc);
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    ComplexGaussian,
    Rademacher,
    UniformDisk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoefficientNoise {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl CoefficientNoise {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        CoefficientNoise { kind, seed }
    }

    pub fn gaussian(seed: u64) -> Self {
        Self::new(NoiseKind::ComplexGaussian, seed)
    }

    /// Generator for coefficient `k`: ChaCha8 keyed by the seed, stream `k`.
    fn stream(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        match self.kind {
            NoiseKind::ComplexGaussian => {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
            }
            NoiseKind::Rademacher => {
                if rng.random::<bool>() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(-1.0, 0.0)
                }
            }
            NoiseKind::UniformDisk => {
                let r = rng.random::<f64>().sqrt();
                let th = rng.random::<f64>() * std::f64::consts::TAU;
                Complex64::from_polar(r, th)
            }
        }
    }

    /// The noise values `xi_0..xi_n`.
    pub fn sample(&self, n: usize) -> Result<Vec<Complex64>, EnsembleError> {
        let mut xi: Vec<Complex64> = (0..=n).map(|k| self.draw(&mut self.stream(k as u64))).collect();
        if xi[n] == Complex64::new(0.0, 0.0) {
            let mut rng = self.stream(n as u64);
            let _ = self.draw(&mut rng);
            xi[n] = self.draw(&mut rng);
            if xi[n] == Complex64::new(0.0, 0.0) {
                return Err(EnsembleError::ZeroLeading);
            }
        }
        Ok(xi)
    }
}

/// Deterministic coefficient scales `a_{k;n}`.
pub fn coefficient_scales(profile: &Profile, n: usize) -> Vec<ExtComplex> {
    let lf = ln_factorials(n);
    (0..=n).map(|k| ExtComplex::from_polar_ln(profile.ln_coefficient(k, n, &lf), 0.0)).collect()
}

/// `sum_k xi_k a_{k;n} z^k`.
pub fn generate(profile: &Profile, n: usize, noise: &CoefficientNoise) -> Result<Polynomial, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::BadDegree);
    }
    let xi = noise.sample(n)?;
    let a = coefficient_scales(profile, n);
    let c = a.iter().zip(&xi).map(|(a, x)| a.mul_complex(*x)).collect();
    Polynomial::new(c).map_err(|_| EnsembleError::ZeroLeading)
}

/// Points drawn i.i.d. from the rotation-invariant law with radial
/// distribution function `alpha0`.
/// Polar samples `(radius, angle)` from the initial root law.
pub fn sample_radial(n: usize, profile: &Profile, seed: u64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let u: f64 = rng.random();
            let th: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            (profile.radius_quantile(u), th)
        })
        .collect()
}

pub fn sample_iid_roots(n: usize, profile: &Profile, seed: u64) -> Vec<Complex64> {
    sample_radial(n, profile, seed).into_iter().map(|(r, th)| Complex64::from_polar(r, th)).collect()
}

/// Monic `prod_k (z - X_k)` with i.i.d. `X_k`.
pub fn generate_iid_roots(n: usize, profile: &Profile, seed: u64) -> Result<Polynomial, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::BadDegree);
    }
    Ok(Polynomial::from_roots(&sample_iid_roots(n, profile, seed)))
}

/// `z^n - r^n`.
pub fn generate_evenly_spaced(n: usize, r: f64) -> Result<Polynomial, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::BadDegree);
    }
    let mut c = vec![ExtComplex::ZERO; n + 1];
    c[0] = -ExtComplex::from_polar_ln(n as f64 * r.ln(), 0.0);
    c[n] = ExtComplex::ONE;
    Ok(Polynomial::new(c).expect("nonzero leading coefficient"))
}
