//! Statistics comparing empirical root clouds with limit predictions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::limits::{on_level_set, LimitModel};
use crate::poly::PolyEval;
use crate::transport::TransportMap;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub n: Option<usize>,
    pub t: Option<f64>,
    pub profile: Option<String>,
    pub seed: Option<u64>,
}

/// One empirical-vs-predicted comparison.  `pass` is
/// `|empirical - predicted| <= tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metric: String,
    pub empirical: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub meta: ReportMeta,
}

impl ComparisonReport {
    pub fn new(metric: impl Into<String>, empirical: f64, predicted: f64, tolerance: f64, meta: ReportMeta) -> Self {
        let pass = (empirical - predicted).abs() <= tolerance;
        ComparisonReport { metric: metric.into(), empirical, predicted, tolerance, pass, meta }
    }

    /// Recomputes the pass flag from the stored fields.
    pub fn consistent(&self) -> bool {
        self.pass == ((self.empirical - self.predicted).abs() <= self.tolerance)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Fixed-width table of reports.
pub fn format_table(reports: &[ComparisonReport]) -> String {
    let mut s = format!("{:<28} {:>14} {:>14} {:>10}  {}\n", "metric", "empirical", "predicted", "tol", "pass");
    for r in reports {
        s.push_str(&format!(
            "{:<28} {:>14.6e} {:>14.6e} {:>10.2e}  {}\n",
            r.metric,
            r.empirical,
            r.predicted,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub order: usize,
    pub empirical: Complex64,
    pub predicted: Complex64,
}

fn catalan(k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64;
    }
    c
}

/// `(1/n) sum_j z_j^m` for `m = 1..=k_max` with the semicircle moments
/// (`t^k Catalan_k` for `m = 2k`, zero for odd `m`).
pub fn analytic_moments(roots: &[Complex64], k_max: usize, t: Complex64) -> Vec<Moment> {
    let n = roots.len().max(1) as f64;
    let mut pw: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); roots.len()];
    (1..=k_max)
        .map(|m| {
            let mut s = Complex64::new(0.0, 0.0);
            for (p, z) in pw.iter_mut().zip(roots) {
                *p *= z;
                s += *p;
            }
            let predicted = if m % 2 == 1 { Complex64::new(0.0, 0.0) } else { t.powu((m / 2) as u32) * catalan(m / 2) };
            Moment { order: m, empirical: s / n, predicted }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub median: f64,
    pub p90: f64,
    pub max: f64,
    pub count: usize,
    pub excluded: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

/// Distribution of `|(1/n) ln|P(z)| - predicted(z)|` over grid points at
/// distance at least `exclusion_radius` from every root.
pub fn logpot_errors<P, F>(p: &P, grid: &[Complex64], roots: &[Complex64], exclusion_radius: f64, predicted: F) -> ErrorSummary
where
    P: PolyEval + ?Sized,
    F: Fn(Complex64) -> f64 + Sync,
{
    let n = p.degree() as f64;
    let errs: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&z| {
            if roots.iter().any(|w| (z - w).norm() < exclusion_radius) {
                return None;
            }
            let l = p.eval(z).value.log_abs().ok()?;
            Some((l / n - predicted(z)).abs())
        })
        .collect();
    let excluded = errs.iter().filter(|e| e.is_none()).count();
    let mut v: Vec<f64> = errs.into_iter().flatten().collect();
    v.sort_by(f64::total_cmp);
    ErrorSummary {
        median: quantile(&v, 0.5),
        p90: quantile(&v, 0.9),
        max: v.last().copied().unwrap_or(f64::NAN),
        count: v.len(),
        excluded,
    }
}

/// [`logpot_errors`] against `U_t(z) + g(1)`, the limit of `(1/n) ln|P(z)|`.
pub fn logpot_grid_error<P: PolyEval + ?Sized>(
    p: &P,
    model: &LimitModel,
    grid: &[Complex64],
    roots: &[Complex64],
    exclusion_radius: f64,
) -> ErrorSummary {
    let g1 = model.profile().g(1.0);
    logpot_errors(p, grid, roots, exclusion_radius, |z| model.u_t(z) + g1)
}

/// Default exclusion radius `2/sqrt(n)`, the nearest-neighbour scale.
pub fn default_exclusion_radius(n: usize) -> f64 {
    2.0 / (n as f64).sqrt()
}

/// `k x k` grid over the square `[-r, r]^2` (cell centres).
pub fn square_grid(r: f64, k: usize) -> Vec<Complex64> {
    let mut g = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let x = -r + 2.0 * r * (i as f64 + 0.5) / k as f64;
            let y = -r + 2.0 * r * (j as f64 + 0.5) / k as f64;
            g.push(Complex64::new(x, y));
        }
    }
    g
}

/// Fraction of roots inside the ellipse `E_{s,t}` against `alpha_0(s)`.
pub fn ellipse_mass(roots: &[Complex64], map: &TransportMap, s_values: &[f64], tol: f64) -> Vec<ComparisonReport> {
    let n = roots.len();
    s_values
        .iter()
        .map(|&s| {
            let e = map.ellipse_for(s);
            let inside = roots.iter().filter(|&&z| e.contains(z)).count();
            ComparisonReport::new(
                format!("ellipse_mass(s={})", s),
                inside as f64 / n.max(1) as f64,
                map.profile().alpha0(s),
                tol,
                ReportMeta { n: Some(n), t: Some(map.t().norm()), profile: Some(map.profile().name()), seed: None },
            )
        })
        .collect()
}

/// Fraction of roots within `delta` of the level set `L_{r,t}`.
pub fn level_set_adherence(roots: &[Complex64], r: f64, t: Complex64, delta: f64) -> f64 {
    let k = roots.iter().filter(|&&z| on_level_set(r, t, z, delta)).count();
    k as f64 / roots.len().max(1) as f64
}

/// CDF of the semicircle law of variance `t`.
pub fn semicircle_cdf(x: f64, t: f64) -> f64 {
    let u = (x / (2.0 * t.sqrt())).clamp(-1.0, 1.0);
    0.5 + (u * (1.0 - u * u).sqrt() + u.asin()) / PI
}

/// Kolmogorov distance between the empirical law of `xs` and `cdf`.
pub fn kolmogorov_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Kolmogorov distance of the real parts to the semicircle of variance `t`.
pub fn ks_semicircle(roots: &[Complex64], t: f64) -> f64 {
    let xs: Vec<f64> = roots.iter().map(|z| z.re).collect();
    kolmogorov_distance(&xs, |x| semicircle_cdf(x, t))
}

pub fn mean_sq_imag(roots: &[Complex64]) -> f64 {
    roots.iter().map(|z| z.im * z.im).sum::<f64>() / roots.len().max(1) as f64
}

/// Pair budget of [`energy_distance`] per term.
pub const ENERGY_PAIRS: usize = 1 << 20;

fn mean_dist(a: &[Complex64], b: &[Complex64], max_pairs: usize, seed: u64) -> f64 {
    if a.len() * b.len() <= max_pairs {
        let s: f64 = a.par_iter().map(|x| b.iter().map(|y| (x - y).norm()).sum::<f64>()).sum();
        return s / (a.len() * b.len()) as f64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = 0.0;
    for _ in 0..max_pairs {
        let i = rng.random_range(0..a.len());
        let j = rng.random_range(0..b.len());
        s += (a[i] - b[j]).norm();
    }
    s / max_pairs as f64
}

/// Energy distance `2E|A-B| - E|A-A'| - E|B-B'|`, exact (all pairs) when the
/// pair count fits `max_pairs`, otherwise from `max_pairs` random pairs per
/// term.  The three terms draw indices from the same seed.
pub fn energy_distance_with(a: &[Complex64], b: &[Complex64], max_pairs: usize, seed: u64) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "energy distance of an empty cloud");
    let ab = mean_dist(a, b, max_pairs, seed);
    let aa = mean_dist(a, a, max_pairs, seed);
    let bb = mean_dist(b, b, max_pairs, seed);
    2.0 * ab - aa - bb
}

pub fn energy_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    energy_distance_with(a, b, ENERGY_PAIRS, 0)
}
