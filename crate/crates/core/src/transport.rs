//! Transport maps `T_t(w) = w + t alpha_0(|w|)/w`, their inverses, the
//! modified maps used after singularities form, and the ellipse foliation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::{sample_radial, Profile, ProfileKind};
use crate::limits::LimitModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("T_t(0) is undefined: alpha_0(s)/s does not vanish as s -> 0")]
    Origin,
    #[error("({0}, t) is not a regular point")]
    NonRegular(Complex64),
    #[error("this transport variant has no inverse")]
    NotInvertible,
    #[error("bad parameters: {0}")]
    BadParameters(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    Standard,
    /// Littlewood-Offord with `beta > 1/2`, `0 < t < 1`: the inner disk
    /// collapses onto a real segment.
    ModifiedLo { beta: f64 },
    /// Weyl for `t >= 1`: `w -> 2 sqrt(t) Re w`.
    WeylPostCollapse,
}

#[derive(Clone, Debug)]
pub struct TransportMap {
    profile: Profile,
    t: Complex64,
    variant: Variant,
}

/// Image of the circle `|w| = s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub semi_major: f64,
    pub semi_minor: f64,
    pub s: f64,
    /// direction of the major axis, `e^{i phi/2}` for `t = |t| e^{i phi}`
    pub rotation: Complex64,
}

impl Ellipse {
    pub fn contains(&self, z: Complex64) -> bool {
        let w = z * self.rotation.conj();
        if self.semi_minor <= 0.0 {
            return false;
        }
        (w.re / self.semi_major).powi(2) + (w.im / self.semi_minor).powi(2) < 1.0
    }
}

pub fn ellipse_contains(e: &Ellipse, z: Complex64) -> bool {
    e.contains(z)
}

fn rotation_of(t: Complex64) -> Complex64 {
    if t.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, 0.5 * t.arg())
    }
}

impl TransportMap {
    pub fn new(profile: Profile, t: Complex64) -> Self {
        TransportMap { profile, t, variant: Variant::Standard }
    }

    pub fn real(profile: Profile, t: f64) -> Self {
        Self::new(profile, Complex64::new(t, 0.0))
    }

    pub fn modified_lo(beta: f64, t: f64) -> Result<Self, TransportError> {
        if !(beta > 0.5 && beta <= 1.0) || !(t > 0.0 && t < 1.0) {
            return Err(TransportError::BadParameters(format!("beta={} t={}", beta, t)));
        }
        Ok(TransportMap {
            profile: Profile::littlewood_offord(beta),
            t: Complex64::new(t, 0.0),
            variant: Variant::ModifiedLo { beta },
        })
    }

    pub fn weyl_post_collapse(t: f64) -> Result<Self, TransportError> {
        if !(t >= 1.0) {
            return Err(TransportError::BadParameters(format!("t={} < 1", t)));
        }
        Ok(TransportMap { profile: Profile::weyl(), t: Complex64::new(t, 0.0), variant: Variant::WeylPostCollapse })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn t(&self) -> Complex64 {
        self.t
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    fn origin_ok(&self) -> bool {
        !matches!(self.profile.kind(), ProfileKind::LittlewoodOfford { beta } if *beta >= 1.0)
    }

    /// Image of `w`.
    pub fn apply(&self, w: Complex64) -> Result<Complex64, TransportError> {
        match self.variant {
            Variant::Standard => {
                let s = w.norm();
                if s == 0.0 {
                    return if self.origin_ok() { Ok(w) } else { Err(TransportError::Origin) };
                }
                let a = self.profile.alpha0(s);
                if a == 0.0 {
                    return Ok(w);
                }
                Ok(w + self.t * a / w)
            }
            Variant::ModifiedLo { beta } => Ok(modified_t_t(w, beta, self.t.re)),
            Variant::WeylPostCollapse => Ok(Complex64::new(2.0 * self.t.re.sqrt() * w.re, 0.0)),
        }
    }

    /// Preimage of `z` under the standard map.
    pub fn inverse(&self, z: Complex64) -> Result<Complex64, TransportError> {
        if self.variant != Variant::Standard {
            return Err(TransportError::NotInvertible);
        }
        let tau = self.t.norm();
        if tau == 0.0 {
            return Ok(z);
        }
        let rot = rotation_of(self.t);
        let zr = z * rot.conj();
        if let ProfileKind::Weyl = self.profile.kind() {
            if tau < 1.0 {
                let a = (zr.re / (1.0 + tau)).powi(2) + (zr.im / (1.0 - tau)).powi(2);
                let w = if a < 1.0 {
                    Complex64::new(zr.re / (1.0 + tau), zr.im / (1.0 - tau))
                } else {
                    y_plus(zr, tau)
                };
                return Ok(w * rot);
            }
        }
        let model = LimitModel::real(self.profile.clone(), tau);
        if !model.is_regular(zr) {
            return Err(TransportError::NonRegular(z));
        }
        let a = model.alpha_t(zr);
        Ok(y_plus(zr, tau * a) * rot)
    }

    /// Ellipse `{T_t(w) : |w| = s}`.
    pub fn ellipse_for(&self, s: f64) -> Ellipse {
        let tau = self.t.norm();
        let d = tau * self.profile.alpha0(s) / s;
        Ellipse { semi_major: s + d, semi_minor: s - d, s, rotation: rotation_of(self.t) }
    }

    /// Real Jacobian of `w -> T_t(w)` as a map of the plane, row-major
    /// `[[dX/dx, dX/dy], [dY/dx, dY/dy]]`, for real `t`.
    pub fn jacobian(&self, w: Complex64) -> [[f64; 2]; 2] {
        let t = self.t.re;
        let (x, y) = (w.re, w.im);
        let rho = x * x + y * y;
        let s = rho.sqrt();
        let a = self.profile.alpha0(s);
        let b = t * a / rho;
        let bp = t * (self.profile.alpha0_prime(s) / (2.0 * s * rho) - a / (rho * rho));
        [
            [1.0 + b + 2.0 * x * x * bp, 2.0 * x * y * bp],
            [-2.0 * x * y * bp, 1.0 - b - 2.0 * y * y * bp],
        ]
    }

    /// Samples from the initial root law pushed through the map.
    pub fn sample_pushforward(&self, n_samples: usize, seed: u64) -> Vec<Complex64> {
        // alpha_0 is read at the sampled radius, so atoms on circles stay exact
        sample_radial(n_samples, &self.profile, seed)
            .into_iter()
            .map(|(r, th)| {
                let w = Complex64::from_polar(r, th);
                match self.variant {
                    Variant::Standard if r > 0.0 => w + self.t * self.profile.alpha0(r) / w,
                    _ => self.apply(w).unwrap_or(w),
                }
            })
            .collect()
    }
}

/// Larger-modulus root of `y^2 - z y + q = 0`.
fn y_plus(z: Complex64, q: f64) -> Complex64 {
    if q == 0.0 {
        return z;
    }
    let s = q.sqrt();
    let r = (z * 0.5 - s).sqrt() * (z * 0.5 + s).sqrt();
    let (y1, y2) = (z * 0.5 + r, z * 0.5 - r);
    if y1.norm() >= y2.norm() {
        y1
    } else {
        y2
    }
}

pub fn t_t(w: Complex64, map: &TransportMap) -> Result<Complex64, TransportError> {
    map.apply(w)
}

pub fn t_t_inverse(z: Complex64, map: &TransportMap) -> Result<Complex64, TransportError> {
    map.inverse(z)
}

pub fn ellipse_for(s: f64, map: &TransportMap) -> Ellipse {
    map.ellipse_for(s)
}

pub fn jacobian_t_t(w: Complex64, map: &TransportMap) -> [[f64; 2]; 2] {
    map.jacobian(w)
}

pub fn sample_pushforward(map: &TransportMap, n_samples: usize, seed: u64) -> Vec<Complex64> {
    map.sample_pushforward(n_samples, seed)
}

/// Littlewood-Offord map for `beta > 1/2` after the singular segment forms.
pub fn modified_t_t(w: Complex64, beta: f64, t: f64) -> Complex64 {
    let s = w.norm();
    let inner = t.powf(beta / (2.0 * beta - 1.0));
    if s < inner {
        Complex64::new(t.sqrt() * 2.0 * w.re * s.powf((1.0 - 2.0 * beta) / (2.0 * beta)), 0.0)
    } else if s <= 1.0 {
        w + t * s.powf(1.0 / beta) / w
    } else {
        w + t / w
    }
}
