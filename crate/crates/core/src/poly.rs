//! Dense polynomials with extended-range coefficients, the heat-flow
//! operator `exp{-(s/2) d^2/dz^2}`, Hermite values and stable evaluation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    pow2, DdAccumulator, DdComplex, ExtAccumulator, ExtComplex, RealAccumulator,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial has no nonzero coefficient")]
    Zero,
    #[error("point {0} is a root; the log potential is singular there")]
    AtRoot(Complex64),
    #[error("malformed polynomial json: {0}")]
    Json(String),
}

/// `sum_k c_k z^k` with `c_n != 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct Polynomial {
    coeffs: Vec<ExtComplex>,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    n: usize,
    coeffs: Vec<ExtComplex>,
}

impl TryFrom<PolyJson> for Polynomial {
    type Error = PolyError;
    fn try_from(j: PolyJson) -> Result<Self, PolyError> {
        if j.coeffs.len() != j.n + 1 {
            return Err(PolyError::Json(format!("n = {} but {} coefficients", j.n, j.coeffs.len())));
        }
        let p = Polynomial::new(j.coeffs)?;
        if p.degree() != j.n {
            return Err(PolyError::Json("leading coefficient is zero".into()));
        }
        Ok(p)
    }
}

impl From<Polynomial> for PolyJson {
    fn from(p: Polynomial) -> PolyJson {
        PolyJson { n: p.degree(), coeffs: p.coeffs }
    }
}

impl Polynomial {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<ExtComplex>) -> Result<Self, PolyError> {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(PolyError::Zero);
        }
        Ok(Polynomial { coeffs })
    }

    pub fn from_complex(coeffs: &[Complex64]) -> Result<Self, PolyError> {
        Self::new(coeffs.iter().map(|&c| ExtComplex::from_complex(c)).collect())
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self, PolyError> {
        Self::new(coeffs.iter().map(|&c| ExtComplex::from_real(c)).collect())
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![ExtComplex::ZERO; n + 1];
        coeffs[n] = ExtComplex::ONE;
        Polynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[ExtComplex] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> ExtComplex {
        self.coeffs.get(k).copied().unwrap_or(ExtComplex::ZERO)
    }

    pub fn leading(&self) -> ExtComplex {
        self.coeffs[self.degree()]
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![ExtComplex::ONE];
        for &r in roots {
            let mut next = vec![ExtComplex::ZERO; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] = next[k + 1] + ck;
                next[k] = next[k] - ck.mul_complex(r);
            }
            c = next;
        }
        Polynomial { coeffs: c }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polynomial serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PolyError> {
        serde_json::from_str(s).map_err(|e| PolyError::Json(e.to_string()))
    }
}

/// `exp{-(s/2) D^2} P`:
/// `c'_k = sum_j (-s/2)^j / j! * (k+2j)!/k! * c_{k+2j}`.
///
/// The weights are built by the running ratio
/// `w_{k,j+1} / w_{k,j} = (-s/2)(k+2j+1)(k+2j+2)/(j+1)`, so factorials never
/// appear explicitly.
pub fn heat_flow(p: &Polynomial, s: Complex64) -> Polynomial {
    if s == Complex64::new(0.0, 0.0) {
        return p.clone();
    }
    let n = p.degree();
    let half = -s * 0.5;
    let mut out = vec![ExtComplex::ZERO; n + 1];
    for k in (0..=n).rev() {
        let mut acc = ExtAccumulator::default();
        let mut w = ExtComplex::ONE;
        let mut j = 0usize;
        loop {
            let c = p.coeffs[k + 2 * j];
            if !c.is_zero() {
                let term = w * c;
                acc.add(term.mantissa(), term.exponent());
            }
            if k + 2 * j + 2 > n {
                break;
            }
            let r = ((k + 2 * j + 1) as f64) * ((k + 2 * j + 2) as f64) / ((j + 1) as f64);
            w = w.mul_complex(half * r);
            j += 1;
        }
        out[k] = acc.value();
    }
    Polynomial { coeffs: out }
}

/// Probabilists' Hermite polynomial `He_n(z)`.
pub fn hermite(n: usize, z: Complex64) -> Complex64 {
    let mut prev = Complex64::new(1.0, 0.0);
    if n == 0 {
        return prev;
    }
    let mut cur = z;
    for k in 1..n {
        let next = z * cur - prev * (k as f64);
        prev = cur;
        cur = next;
    }
    cur
}

/// Value, derivative and the log of an error scale at a point.
///
/// `ln_scale` is the log of the magnitude that bounds rounding errors of the
/// evaluation (for the monomial basis `sum_k |c_k| |z|^k`).
#[derive(Clone, Copy, Debug)]
pub struct Evaluation {
    pub value: ExtComplex,
    pub derivative: ExtComplex,
    pub ln_scale: f64,
}

/// Anything the root solver can evaluate.
pub trait PolyEval: Sync {
    fn degree(&self) -> usize;
    fn leading(&self) -> ExtComplex;
    fn eval(&self, z: Complex64) -> Evaluation;
    /// Same as `eval` with double-double internal arithmetic.
    fn eval_dd(&self, z: Complex64) -> Evaluation;
    /// `ln|c_k|` of the monomial coefficients (`-inf` for zeros).
    fn ln_coeff_moduli(&self) -> Vec<f64>;
    /// Starting points for simultaneous root iteration.
    fn initial_guesses(&self) -> Vec<Complex64> {
        newton_polygon_guesses(&self.ln_coeff_moduli())
    }
}

/// Starting points on circles read off the upper convex hull of
/// `(k, ln|c_k|)`; roots at the origin for vanishing low coefficients.
pub fn newton_polygon_guesses(ln_moduli: &[f64]) -> Vec<Complex64> {
    let n = ln_moduli.len() - 1;
    let low = ln_moduli.iter().take_while(|l| l.is_infinite()).count();
    let mut out = vec![Complex64::new(0.0, 0.0); low];
    let pts: Vec<(usize, f64)> = ln_moduli
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_finite())
        .map(|(k, &l)| (k, l))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b unless it lies strictly above the chord a -> p
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let sigma = 0.7;
    for (e, w) in hull.windows(2).enumerate() {
        let m = w[1].0 - w[0].0;
        let lr = ((w[0].1 - w[1].1) / m as f64).clamp(-700.0, 700.0);
        let r = lr.exp();
        for q in 0..m {
            let th = std::f64::consts::TAU * (q as f64 / m as f64 + e as f64 / n as f64) + sigma;
            out.push(Complex64::from_polar(r, th));
        }
    }
    out
}


fn ln_moduli(c: &[ExtComplex]) -> Vec<f64> {
    c.iter().map(|c| c.log_abs().unwrap_or(f64::NEG_INFINITY)).collect()
}

/// Horner running value `m * 2^e`.
#[derive(Clone, Copy)]
struct Run {
    m: Complex64,
    e: i64,
}

impl Run {
    #[inline]
    fn renorm(&mut self) {
        let a = self.m.re.abs().max(self.m.im.abs());
        if a != 0.0 && !(1e-150..=1e150).contains(&a) {
            let k = ((a.to_bits() >> 52) & 0x7ff) as i64 - 1023;
            self.m *= pow2(-k);
            self.e += k;
        }
    }

    /// `self*z + mant*2^exp`
    #[inline]
    fn fma(&mut self, z: Complex64, mant: Complex64, exp: i64) {
        self.m *= z;
        if self.m.re == 0.0 && self.m.im == 0.0 {
            self.m = mant;
            self.e = exp;
            return;
        }
        let d = exp - self.e;
        if d > 0 {
            self.m = if d > 1022 { mant } else { self.m * pow2(-d) + mant };
            self.e = exp;
        } else if d >= -1022 {
            self.m += mant * pow2(d);
        }
        self.renorm();
    }

    fn value(&self) -> ExtComplex {
        ExtComplex::from_parts(self.m, self.e)
    }
}

/// `P(z)` by Horner's rule in extended range.
pub fn evaluate(p: &Polynomial, z: Complex64) -> ExtComplex {
    evaluate_with_derivative(p, z).0
}

/// `(P(z), P'(z))`.
pub fn evaluate_with_derivative(p: &Polynomial, z: Complex64) -> (ExtComplex, ExtComplex) {
    let e = p.eval(z);
    (e.value, e.derivative)
}

impl PolyEval for Polynomial {
    fn degree(&self) -> usize {
        Polynomial::degree(self)
    }

    fn leading(&self) -> ExtComplex {
        Polynomial::leading(self)
    }

    fn eval(&self, z: Complex64) -> Evaluation {
        let n = self.degree();
        let lead = self.coeffs[n];
        let mut p = Run { m: lead.mantissa(), e: lead.exponent() };
        let mut dp = Run { m: Complex64::new(0.0, 0.0), e: 0 };
        let za = Complex64::new(z.norm(), 0.0);
        let mut b = Run { m: Complex64::new(lead.mantissa().norm(), 0.0), e: lead.exponent() };
        for k in (0..n).rev() {
            dp.fma(z, p.m, p.e);
            let c = self.coeffs[k];
            p.fma(z, c.mantissa(), c.exponent());
            b.fma(za, Complex64::new(c.mantissa().norm(), 0.0), c.exponent());
        }
        Evaluation {
            value: p.value(),
            derivative: dp.value(),
            ln_scale: b.value().log_abs().unwrap_or(f64::NEG_INFINITY),
        }
    }

    fn eval_dd(&self, z: Complex64) -> Evaluation {
        // Horner on the rescaled polynomial sum_k (c_k rho^k / M) y^k, y = z/rho,
        // where every scaled coefficient has modulus <= 1.
        let n = self.degree();
        let rho = z.norm();
        if rho == 0.0 {
            return self.eval(z);
        }
        let lr = rho.ln();
        let lm = ln_moduli(&self.coeffs);
        let lmax = lm
            .iter()
            .enumerate()
            .map(|(k, &l)| l + k as f64 * lr)
            .fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if c.is_zero() {
                    return Complex64::new(0.0, 0.0);
                }
                let l = lm[k] + k as f64 * lr - lmax;
                if l < -740.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(l.exp(), c.arg())
                }
            })
            .collect();
        let y = DdComplex::from_complex(z / rho);
        let mut p = DdComplex::from_complex(scaled[n]);
        let mut dp = DdComplex::default();
        let mut b = 0.0f64;
        for k in (0..n).rev() {
            dp = dp * y + p;
            p = p * y + DdComplex::from_complex(scaled[k]);
        }
        for s in &scaled {
            b += s.norm();
        }
        // P(z) = M p, P'(z) = M dp / rho
        let m = ExtComplex::from_polar_ln(lmax, 0.0);
        Evaluation {
            value: m.mul_complex(p.to_complex()),
            derivative: m.mul_complex(dp.to_complex() / rho),
            ln_scale: lmax + b.ln(),
        }
    }

    fn ln_coeff_moduli(&self) -> Vec<f64> {
        ln_moduli(&self.coeffs)
    }
}

/// `exp{-(s/2) D^2} P` kept in the form `sum_k c_k h_k(z)` where
/// `h_k(z) = s^{k/2} He_k(z / sqrt(s))` is the heat-evolved monomial,
/// `h_{k+1} = z h_k - k s h_{k-1}`.
///
/// The expanded monomial coefficients of an evolved random polynomial have
/// huge cancellations when summed at points of the root cloud, while the
/// terms `c_k h_k(z)` do not, so rooting and log potentials go through this
/// form.
#[derive(Clone, Debug)]
pub struct EvolvedPolynomial {
    base: Polynomial,
    s: Complex64,
    // |mantissa of c_k| and sqrt(k |s|), for the error envelope
    mods: Vec<f64>,
    sk: Vec<f64>,
}

#[inline]
fn mag(z: Complex64) -> f64 {
    (z.re * z.re + z.im * z.im).sqrt()
}

impl EvolvedPolynomial {
    pub fn new(base: Polynomial, s: Complex64) -> Self {
        let mods = base.coeffs.iter().map(|c| c.mantissa().norm()).collect();
        let sa = s.norm();
        let sk = (0..=base.degree()).map(|k| (k as f64 * sa).sqrt()).collect();
        EvolvedPolynomial { base, s, mods, sk }
    }

    pub fn base(&self) -> &Polynomial {
        &self.base
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    /// Expanded monomial coefficients.
    pub fn to_polynomial(&self) -> Polynomial {
        heat_flow(&self.base, self.s)
    }
}

impl PolyEval for EvolvedPolynomial {
    fn degree(&self) -> usize {
        self.base.degree()
    }

    fn leading(&self) -> ExtComplex {
        self.base.leading()
    }

    fn eval(&self, z: Complex64) -> Evaluation {
        let n = self.base.degree();
        let s = self.s;
        // shared exponent for (h_{k-1}, h_k)
        let mut e = 0i64;
        let mut hp = Complex64::new(0.0, 0.0);
        let mut h = Complex64::new(1.0, 0.0);
        let mut val = ExtAccumulator::default();
        let mut der = ExtAccumulator::default();
        let mut scale = RealAccumulator::default();
        for k in 0..=n {
            let c = self.base.coeffs[k];
            if !c.is_zero() {
                let cm = c.mantissa();
                let ce = c.exponent() + e;
                val.add(cm * h, ce);
                if k > 0 {
                    der.add(cm * hp * (k as f64), ce);
                }
                let env = mag(h) + self.sk[k] * mag(hp);
                scale.add(self.mods[k] * env, ce);
            }
            if k == n {
                break;
            }
            let next = z * h - s * hp * (k as f64);
            hp = h;
            h = next;
            let a = h.re.abs().max(h.im.abs()).max(hp.re.abs().max(hp.im.abs()));
            if a != 0.0 && !(1e-100..=1e100).contains(&a) {
                let sh = ((a.to_bits() >> 52) & 0x7ff) as i64 - 1023;
                let f = pow2(-sh);
                h *= f;
                hp *= f;
                e += sh;
            }
        }
        Evaluation { value: val.value(), derivative: der.value(), ln_scale: scale.ln() }
    }

    fn eval_dd(&self, z: Complex64) -> Evaluation {
        let n = self.base.degree();
        let s = DdComplex::from_complex(self.s);
        let sa = self.s.norm();
        let zd = DdComplex::from_complex(z);
        let mut e = 0i64;
        let mut hp = DdComplex::default();
        let mut h = DdComplex::from_complex(Complex64::new(1.0, 0.0));
        let mut val = DdAccumulator::default();
        let mut der = DdAccumulator::default();
        let mut scale = RealAccumulator::default();
        for k in 0..=n {
            let c = self.base.coeffs[k];
            if !c.is_zero() {
                let cm = DdComplex::from_complex(c.mantissa());
                let ce = c.exponent() + e;
                val.add(cm * h, ce);
                if k > 0 {
                    der.add((cm * hp).mul_f64(k as f64), ce);
                }
                let env = h.to_complex().norm() + (k as f64 * sa).sqrt() * hp.to_complex().norm();
                scale.add(c.mantissa().norm() * env, ce);
            }
            if k == n {
                break;
            }
            let next = zd * h - (s * hp).mul_f64(k as f64);
            hp = h;
            h = next;
            let a = h.l1().max(hp.l1());
            if a != 0.0 && !(1e-100..=1e100).contains(&a) {
                let sh = ((a.to_bits() >> 52) & 0x7ff) as i64 - 1023;
                let f = pow2(-sh);
                h = h.scale_pow2(f);
                hp = hp.scale_pow2(f);
                e += sh;
            }
        }
        Evaluation { value: val.value(), derivative: der.value(), ln_scale: scale.ln() }
    }

    fn ln_coeff_moduli(&self) -> Vec<f64> {
        ln_moduli(self.to_polynomial().coeffs())
    }

    /// Circles of the base polynomial moved by `w -> w + s N(w)/w`, where
    /// `N(w)` counts the starting points inside `|w|` (a discrete transport
    /// map).
    fn initial_guesses(&self) -> Vec<Complex64> {
        let g = newton_polygon_guesses(&ln_moduli(&self.base.coeffs));
        let mut r: Vec<(f64, usize)> = g.iter().enumerate().map(|(i, w)| (w.norm(), i)).collect();
        r.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = g.clone();
        let mut i = 0;
        while i < r.len() {
            let mut j = i;
            while j < r.len() && r[j].0 == r[i].0 {
                j += 1;
            }
            let inside = i as f64 + 0.5 * (j - i) as f64;
            for &(_, k) in &r[i..j] {
                let w = g[k];
                if w.norm() > 0.0 {
                    out[k] = w + self.s * inside / w;
                }
            }
            i = j;
        }
        out
    }
}

/// `(1/n)(ln|P(z)| - ln|c_n|) = (1/n) sum_j ln|z - z_j|`.
pub fn empirical_log_potential<P: PolyEval + ?Sized>(p: &P, z: Complex64) -> Result<f64, PolyError> {
    let v = p.eval(z).value;
    let lv = v.log_abs().map_err(|_| PolyError::AtRoot(z))?;
    let lc = p.leading().log_abs().map_err(|_| PolyError::Zero)?;
    Ok((lv - lc) / p.degree() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn coeffs_f64(p: &Polynomial) -> Vec<Complex64> {
        p.coeffs().iter().map(|c| c.to_complex()).collect()
    }

    #[test]
    fn heat_flow_examples() {
        let p = heat_flow(&Polynomial::monomial(2), c(1.0, 0.0));
        assert_eq!(coeffs_f64(&p), vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let p = heat_flow(&Polynomial::monomial(4), c(1.0, 0.0));
        let want = [3.0, 0.0, -6.0, 0.0, 1.0];
        for (a, b) in coeffs_f64(&p).iter().zip(want) {
            assert!((a - c(b, 0.0)).norm() < 1e-14);
        }
        let q = Polynomial::from_real(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert_eq!(heat_flow(&q, c(0.0, 0.0)), q);
    }

    #[test]
    fn hermite_examples() {
        let z = c(0.3, -1.2);
        assert_eq!(hermite(1, z), z);
        assert_eq!(hermite(2, c(3.0, 0.0)), c(8.0, 0.0));
        assert_eq!(hermite(10, c(0.0, 0.0)), c(-945.0, 0.0));
    }

    #[test]
    fn evaluate_examples() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(evaluate(&p, c(2.0, 0.0)).to_complex(), c(3.0, 0.0));
        assert!(evaluate(&p, c(1.0, 0.0)).is_zero());
        let (_, d) = evaluate_with_derivative(&p, c(2.0, 1.0));
        assert_eq!(d.to_complex(), c(4.0, 2.0));
    }

    #[test]
    fn evaluate_at_zero_is_constant_term() {
        let big = Polynomial::new(
            (0..=1000).map(|k| ExtComplex::from_polar_ln(0.5 * k as f64 * 7.0, k as f64)).collect(),
        )
        .unwrap();
        assert_eq!(evaluate(&big, c(0.0, 0.0)), big.coeff(0));
    }

    #[test]
    fn log_potential_examples() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        let v = empirical_log_potential(&p, c(3.0, 0.0)).unwrap();
        assert!((v - 0.5 * 8f64.ln()).abs() < 1e-15);
        assert!(matches!(empirical_log_potential(&p, c(1.0, 0.0)), Err(PolyError::AtRoot(_))));
        let mut cs = vec![ExtComplex::ZERO; 13];
        cs[0] = ExtComplex::from_real(-(2.5f64.powi(12)));
        cs[12] = ExtComplex::ONE;
        let q = Polynomial::new(cs).unwrap();
        let v = empirical_log_potential(&q, c(0.0, 0.0)).unwrap();
        assert!((v - 2.5f64.ln()).abs() < 1e-14);
        let v = empirical_log_potential(&p, c(1e8, 1e8)).unwrap();
        assert!((v - c(1e8, 1e8).norm().ln()).abs() < 1e-12);
    }

    #[test]
    fn trims_and_rejects() {
        let p = Polynomial::from_real(&[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(Polynomial::from_real(&[0.0, 0.0]), Err(PolyError::Zero));
    }

    #[test]
    fn json_round_trip() {
        let p = Polynomial::from_complex(&[c(1.0, -2.0), c(0.0, 0.0), c(1e300, 5.0)]).unwrap();
        let q = heat_flow(&p, c(3.0, 1.0));
        let s = q.to_json();
        assert!(s.starts_with("{\"n\":2,\"coeffs\":[["));
        assert_eq!(Polynomial::from_json(&s).unwrap(), q);
        assert!(Polynomial::from_json("{\"n\":3,\"coeffs\":[[1.0,0.0,0]]}").is_err());
    }

    #[test]
    fn from_roots_expands() {
        let p = Polynomial::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(coeffs_f64(&p), vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let p = Polynomial::from_roots(&[c(0.0, 0.0)]);
        assert_eq!(coeffs_f64(&p), vec![c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn evolved_matches_expanded() {
        let base = Polynomial::from_complex(
            &(0..12).map(|k| c((k as f64).sin() + 0.5, (k as f64 * 0.7).cos())).collect::<Vec<_>>(),
        )
        .unwrap();
        let s = c(0.3, -0.2);
        let ev = EvolvedPolynomial::new(base.clone(), s);
        let ex = heat_flow(&base, s);
        for z in [c(0.4, 0.1), c(-1.3, 2.0), c(3.0, -0.5)] {
            let a = ev.eval(z);
            let b = ex.eval(z);
            let ad = ev.eval_dd(z);
            let r = |x: ExtComplex, y: ExtComplex| (x - y).to_complex().norm() / y.to_complex().norm();
            assert!(r(a.value, b.value) < 1e-11, "{}", r(a.value, b.value));
            assert!(r(a.derivative, b.derivative) < 1e-11);
            assert!(r(ad.value, b.value) < 1e-11);
            assert!(r(ad.derivative, b.derivative) < 1e-11);
        }
    }

    #[test]
    fn dd_horner_matches() {
        let p = Polynomial::from_real(&[3.0, 0.0, -6.0, 0.0, 1.0]).unwrap();
        for z in [c(0.4, 0.1), c(-2.3, 1.0)] {
            let a = p.eval(z);
            let b = p.eval_dd(z);
            assert!((a.value - b.value).to_complex().norm() < 1e-13 * a.value.to_complex().norm());
            assert!((a.derivative - b.derivative).to_complex().norm() < 1e-13 * a.derivative.to_complex().norm());
        }
    }

    /// Bound used for the semigroup comparison: the same sums with all terms
    /// replaced by their moduli.
    fn abs_flow_bound(p: &Polynomial, s: f64) -> Vec<f64> {
        let n = p.degree();
        (0..=n)
            .map(|k| {
                let mut tot = 0.0;
                let mut w = 1.0;
                let mut j = 0;
                while k + 2 * j <= n {
                    tot += w * p.coeff(k + 2 * j).to_complex().norm();
                    w *= 0.5 * s * ((k + 2 * j + 1) * (k + 2 * j + 2)) as f64 / (j + 1) as f64;
                    j += 1;
                }
                tot
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn semigroup(n in 1usize..=64, seed in proptest::collection::vec(-1.0..1.0f64, 130),
                     s1r in -1.4..1.4f64, s1i in -1.4..1.4f64, s2r in -1.4..1.4f64, s2i in -1.4..1.4f64) {
            let p = Polynomial::from_complex(
                &(0..=n).map(|k| c(seed[2 * k], seed[2 * k + 1] + 0.1)).collect::<Vec<_>>()).unwrap();
            let s1 = c(s1r, s1i);
            let s2 = c(s2r, s2i);
            let a = heat_flow(&heat_flow(&p, s1), s2);
            let b = heat_flow(&p, s1 + s2);
            // coefficient-wise, relative to the cancellation-free magnitude
            let mid = abs_flow_bound(&p, s1.norm());
            let mid = Polynomial::from_real(&mid).unwrap();
            let bound = abs_flow_bound(&mid, s2.norm());
            for k in 0..=n {
                let d = (a.coeff(k) - b.coeff(k)).to_complex().norm();
                prop_assert!(d <= 1e-10 * bound[k], "k={} d={} bound={}", k, d, bound[k]);
            }
        }

        #[test]
        fn hermite_scaling(n in 1usize..=40, t in 0.1..3.0f64, zr in -3.0..3.0f64, zi in -3.0..3.0f64) {
            let z = c(zr, zi);
            let nf = n as f64;
            let lhs = evaluate(&heat_flow(&Polynomial::monomial(n), c(t / nf, 0.0)), z).to_complex();
            let rhs = hermite(n, z * (nf / t).sqrt()) * (t / nf).powf(nf / 2.0);
            let scale = lhs.norm().max(rhs.norm());
            // Horner on Hermite coefficients loses the cancellation factor |He_n(i x)| / |He_n(x)|
            let absval = evaluate(&heat_flow(&Polynomial::monomial(n), c(-t / nf, 0.0)), c(z.norm(), 0.0)).to_complex().norm();
            prop_assert!((lhs - rhs).norm() <= 1e-8 * scale + 1e-13 * absval,
                "n={} lhs={} rhs={}", n, lhs, rhs);
        }

        #[test]
        fn backward_heat_equation(n in 1usize..=12, seed in proptest::collection::vec(-1.0..1.0f64, 26),
                                  t in 0.2..2.0f64, zr in -2.0..2.0f64, zi in -2.0..2.0f64) {
            let p = Polynomial::from_complex(
                &(0..=n).map(|k| c(seed[2 * k], seed[2 * k + 1] + 0.1)).collect::<Vec<_>>()).unwrap();
            let nf = n as f64;
            let z = c(zr, zi);
            let h = 1e-5;
            let at = |tt: f64| evaluate(&heat_flow(&p, c(tt / nf, 0.0)), z).to_complex();
            let dt = (at(t + h) - at(t - h)) / (2.0 * h);
            let q = heat_flow(&p, c(t / nf, 0.0));
            // second derivative through the coefficients
            let d2: Vec<Complex64> = (2..=n).map(|k| q.coeff(k).to_complex() * (k * (k - 1)) as f64).collect();
            let rhs = if d2.is_empty() { c(0.0, 0.0) } else {
                evaluate(&Polynomial::from_complex(&d2).unwrap_or(Polynomial::monomial(0)), z).to_complex() * (-0.5 / nf)
            };
            let rhs = if d2.iter().all(|c| c.norm() == 0.0) { c(0.0, 0.0) } else { rhs };
            prop_assert!((dt - rhs).norm() <= 1e-6 * (1.0 + rhs.norm()), "dt={} rhs={}", dt, rhs);
        }
    }
}
