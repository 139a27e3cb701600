//! Simultaneous root finding (Aberth-Ehrlich) and root trajectories under
//! the heat flow.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{EvolvedPolynomial, PolyError, PolyEval, Polynomial};

#[derive(Debug, Error)]
pub enum RootError {
    #[error("polynomial has degree 0")]
    Degree0,
    #[error("no convergence for {} roots", unconverged.len())]
    NonConvergence { unconverged: Vec<usize>, partial: RootSet },
    #[error("roots {0} and {1} collide")]
    Collision(usize, usize),
    #[error("{0} is within {1} of a root")]
    NearRoot(Complex64, f64),
    #[error("slice {0} has no neighbours on both sides")]
    BadSlice(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Roots with their relative backward errors `|P(z_j)| / envelope(z_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

/// Certificate constant: `|P(z_j)| <= KAPPA * n * eps * envelope`.
pub const KAPPA: f64 = 100.0;

pub const DEFAULT_MAX_ITERS: usize = 500;

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Whether every root satisfies the backward-error certificate.
    pub fn certified(&self) -> bool {
        let bound = KAPPA * self.roots.len() as f64 * f64::EPSILON;
        self.residuals.iter().all(|&r| r <= bound)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,re,im,residual\n");
        for (j, (z, r)) in self.roots.iter().zip(&self.residuals).enumerate() {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", j, z.re, z.im, r));
        }
        s
    }
}

pub use crate::poly::newton_polygon_guesses as initial_guesses;

fn sort_roots(rs: &mut RootSet) {
    let mut idx: Vec<usize> = (0..rs.roots.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (rs.roots[a], rs.roots[b]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    rs.roots = idx.iter().map(|&i| rs.roots[i]).collect();
    rs.residuals = idx.iter().map(|&i| rs.residuals[i]).collect();
}

/// All roots of `p`, sorted by real then imaginary part.
///
/// `tol` is the target relative backward error; it is raised to at least
/// `n eps`, the best a double evaluation can confirm.
pub fn find_roots<P: PolyEval + ?Sized>(p: &P, tol: f64, max_iters: usize) -> Result<RootSet, RootError> {
    if p.degree() == 0 {
        return Err(RootError::Degree0);
    }
    let init = p.initial_guesses();
    let mut rs = find_roots_from(p, &init, tol, max_iters).map_err(|e| match e {
        RootError::NonConvergence { unconverged, mut partial } => {
            sort_roots(&mut partial);
            RootError::NonConvergence { unconverged, partial }
        }
        e => e,
    })?;
    sort_roots(&mut rs);
    Ok(rs)
}

struct Step {
    delta: Complex64,
    done: bool,
}

fn aberth_step<P: PolyEval + ?Sized>(p: &P, z: &[Complex64], j: usize, ln_tol: f64, dd: bool) -> Step {
    let zj = z[j];
    let ev = if dd { p.eval_dd(zj) } else { p.eval(zj) };
    if ev.value.is_zero() {
        return Step { delta: Complex64::new(0.0, 0.0), done: true };
    }
    let done = match ev.value.log_abs() {
        Ok(l) => l <= ln_tol + ev.ln_scale,
        Err(_) => true,
    };
    if ev.derivative.is_zero() {
        // flat spot: nudge
        let d = Complex64::new(1e-8, 1e-8) * (1.0 + zj.norm());
        return Step { delta: d, done: false };
    }
    let nw = ev.value.ratio(&ev.derivative);
    let mut s = Complex64::new(0.0, 0.0);
    for (k, &zk) in z.iter().enumerate() {
        if k != j && zk != zj {
            s += 1.0 / (zj - zk);
        }
    }
    let mut delta = nw / (1.0 - nw * s);
    if !delta.re.is_finite() || !delta.im.is_finite() {
        delta = if nw.re.is_finite() && nw.im.is_finite() { nw } else { Complex64::new(0.0, 0.0) };
    }
    Step { delta, done }
}

/// Runs Jacobi-style Aberth sweeps on the active roots; returns the ones
/// still active after `max_iters` sweeps.
fn aberth<P: PolyEval + ?Sized>(
    p: &P,
    z: &mut [Complex64],
    mut active: Vec<usize>,
    ln_tol: f64,
    dd: bool,
    max_iters: usize,
) -> Vec<usize> {
    for _ in 0..max_iters {
        if active.is_empty() {
            break;
        }
        let zs: &[Complex64] = z;
        let steps: Vec<Step> = active.par_iter().map(|&j| aberth_step(p, zs, j, ln_tol, dd)).collect();
        let mut next = Vec::with_capacity(active.len());
        for (&j, st) in active.iter().zip(steps) {
            // the certified root still takes its final correction
            z[j] -= st.delta;
            if !st.done {
                next.push(j);
            }
        }
        active = next;
    }
    active
}

fn residuals<P: PolyEval + ?Sized>(p: &P, z: &[Complex64]) -> Vec<f64> {
    z.par_iter()
        .map(|&w| {
            let ev = p.eval(w);
            match ev.value.log_abs() {
                Ok(l) => (l - ev.ln_scale).exp(),
                Err(_) => 0.0,
            }
        })
        .collect()
}

/// Aberth iteration from the given starting points; the output keeps their
/// order.
pub fn find_roots_from<P: PolyEval + ?Sized>(
    p: &P,
    init: &[Complex64],
    tol: f64,
    max_iters: usize,
) -> Result<RootSet, RootError> {
    let n = p.degree();
    if n == 0 {
        return Err(RootError::Degree0);
    }
    assert_eq!(init.len(), n, "need one starting point per root");
    let mut z = init.to_vec();
    // coinciding starts never separate under Aberth; spread them
    for j in 1..n {
        if z[..j].contains(&z[j]) {
            let th = j as f64 * 2.399_963_229_728_653;
            let bump = Complex64::from_polar(1e-4 * (1.0 + z[j].norm()), th);
            z[j] += bump;
        }
    }
    let tol = tol.max(n as f64 * f64::EPSILON);
    let ln_tol = tol.ln();
    let active: Vec<usize> = (0..n).collect();
    let stalled = aberth(p, &mut z, active, ln_tol, false, max_iters);
    let bound = KAPPA * n as f64 * f64::EPSILON;
    let mut res = residuals(p, &z);
    // escalate stalled or uncertified roots to double-double
    let mut retry: Vec<usize> = (0..n).filter(|&j| res[j] > bound || stalled.contains(&j)).collect();
    if !retry.is_empty() {
        retry = aberth(p, &mut z, retry, ln_tol, true, max_iters);
        res = residuals(p, &z);
        let mut bad: Vec<usize> = retry;
        bad.extend((0..n).filter(|&j| res[j] > bound));
        bad.sort_unstable();
        bad.dedup();
        if !bad.is_empty() {
            return Err(RootError::NonConvergence { unconverged: bad, partial: RootSet { roots: z, residuals: res } });
        }
    }
    Ok(RootSet { roots: z, residuals: res })
}

/// Roots along a time grid, matched slice to slice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `paths[j][i]` is root `j` at `times[i]`.
    pub paths: Vec<Vec<Complex64>>,
    /// `pairing[i][j]`: index in the raw solver output of slice `i+1` that
    /// continues root `j`.
    pub pairing: Vec<Vec<usize>>,
    /// slices whose matching was ambiguous
    pub ambiguous: Vec<usize>,
    pub n_for_scaling: usize,
}

impl Trajectory {
    pub fn slice(&self, i: usize) -> Vec<Complex64> {
        self.paths.iter().map(|p| p[i]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,j,re,im\n");
        for (i, t) in self.times.iter().enumerate() {
            for (j, p) in self.paths.iter().enumerate() {
                s.push_str(&format!("{:e},{},{:e},{:e}\n", t, j, p[i].re, p[i].im));
            }
        }
        s
    }
}

/// Greedy nearest-neighbour assignment of `next` to `prev` followed by
/// 2-swap refinement.  Returns `perm` with `next[perm[j]]` continuing
/// `prev[j]`, and whether any match was ambiguous.
pub fn match_slices(prev: &[Complex64], next: &[Complex64]) -> (Vec<usize>, bool) {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, a) in prev.iter().enumerate() {
        for (j, b) in next.iter().enumerate() {
            pairs.push(((a - b).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for &(_, i, j) in &pairs {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    let cost = |i: usize, j: usize| (prev[i] - next[j]).norm();
    for _ in 0..10 {
        let mut improved = false;
        for a in 0..n {
            for b in a + 1..n {
                let now = cost(a, perm[a]) + cost(b, perm[b]);
                let swapped = cost(a, perm[b]) + cost(b, perm[a]);
                if swapped < now - 1e-15 * now {
                    perm.swap(a, b);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let mut ambiguous = false;
    if n > 1 {
        for a in prev {
            let mut d1 = f64::INFINITY;
            let mut d2 = f64::INFINITY;
            for b in next {
                let d = (a - b).norm();
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                } else if d < d2 {
                    d2 = d;
                }
            }
            if d2 <= 1.1 * d1 {
                ambiguous = true;
                break;
            }
        }
    }
    (perm, ambiguous)
}

/// Roots of `exp{-(t/2n) D^2} P0` on `t_grid`, each slice warm-started from
/// the previous one.
pub fn track(p0: &Polynomial, t_grid: &[f64], n_for_scaling: usize) -> Result<Trajectory, RootError> {
    assert!(!t_grid.is_empty() && t_grid[0] == 0.0, "time grid must start at 0");
    let n = p0.degree();
    let first = find_roots(p0, 0.0, DEFAULT_MAX_ITERS)?;
    let mut paths: Vec<Vec<Complex64>> = first.roots.iter().map(|&z| vec![z]).collect();
    let mut prev = first.roots;
    let mut pairing = Vec::new();
    let mut ambiguous = Vec::new();
    for (i, &t) in t_grid.iter().enumerate().skip(1) {
        let s = Complex64::new(t / n_for_scaling as f64, 0.0);
        let q = EvolvedPolynomial::new(p0.clone(), s);
        let raw = find_roots_from(&q, &prev, 0.0, DEFAULT_MAX_ITERS)?.roots;
        let (perm, amb) = match_slices(&prev, &raw);
        if amb {
            ambiguous.push(i);
        }
        let cur: Vec<Complex64> = perm.iter().map(|&k| raw[k]).collect();
        for (j, &z) in cur.iter().enumerate() {
            paths[j].push(z);
        }
        pairing.push(perm);
        prev = cur;
    }
    debug_assert_eq!(paths.len(), n);
    Ok(Trajectory { times: t_grid.to_vec(), paths, pairing, ambiguous, n_for_scaling })
}

/// `max_j |dz_j/dt - (1/n) sum_{k != j} 1/(z_j - z_k)|` with the velocity
/// from the second-order difference on the (possibly uneven) grid.
pub fn ode_residual(traj: &Trajectory, slice: usize) -> Result<f64, RootError> {
    if slice == 0 || slice + 1 >= traj.times.len() {
        return Err(RootError::BadSlice(slice));
    }
    let z = traj.slice(slice);
    let zm = traj.slice(slice - 1);
    let zp = traj.slice(slice + 1);
    let (t0, t1, t2) = (traj.times[slice - 1], traj.times[slice], traj.times[slice + 1]);
    let (h1, h2) = (t1 - t0, t2 - t1);
    let inv_n = 1.0 / traj.n_for_scaling as f64;
    let mut worst = 0.0f64;
    for j in 0..z.len() {
        let v = (zp[j] - z[j]) * (h1 / (h2 * (h1 + h2))) + (z[j] - zm[j]) * (h2 / (h1 * (h1 + h2)));
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..z.len() {
            if k == j {
                continue;
            }
            let d = z[j] - z[k];
            if d.norm() < 1e-10 {
                return Err(RootError::Collision(j.min(k), j.max(k)));
            }
            s += 1.0 / d;
        }
        worst = worst.max((v - s * inv_n).norm());
    }
    Ok(worst)
}

/// `(1/n) ln|P_t(z)/c_n|` for `P_t = exp{-(t/2n) D^2} P`.
fn u_n(p: &Polynomial, z: Complex64, t: Complex64, n: usize) -> Result<f64, RootError> {
    let q = EvolvedPolynomial::new(p.clone(), t / n as f64);
    let v = q.eval(z).value.log_abs().map_err(|_| RootError::NearRoot(z, 0.0))?;
    let c = p.leading().log_abs().map_err(|_| PolyError::Zero)?;
    Ok((v - c) / n as f64)
}

/// `|d_t U + (d_z U)^2 - (1/4n^2) sum_j (z - z_j)^{-2}|` for the finite-n
/// log potential, Wirtinger derivatives by central differences of step `h`.
pub fn pde_residual_finite_n(p: &Polynomial, z: Complex64, t: Complex64, n: usize, h: f64) -> Result<f64, RootError> {
    let q = EvolvedPolynomial::new(p.clone(), t / n as f64);
    let roots = find_roots(&q, 0.0, DEFAULT_MAX_ITERS)?.roots;
    let mut s = Complex64::new(0.0, 0.0);
    for &w in &roots {
        if (z - w).norm() < 0.1 {
            return Err(RootError::NearRoot(z, 0.1));
        }
        s += 1.0 / ((z - w) * (z - w));
    }
    let u = |zz: Complex64, tt: Complex64| u_n(p, zz, tt, n);
    let ih = Complex64::new(0.0, h);
    let dta = (u(z, t + h)? - u(z, t - h)?) / (2.0 * h);
    let dtb = (u(z, t + ih)? - u(z, t - ih)?) / (2.0 * h);
    let dx = (u(z + h, t)? - u(z - h, t)?) / (2.0 * h);
    let dy = (u(z + ih, t)? - u(z - ih, t)?) / (2.0 * h);
    let dt = Complex64::new(0.5 * dta, -0.5 * dtb);
    let dz = Complex64::new(0.5 * dx, -0.5 * dy);
    let nn = n as f64;
    Ok((dt + dz * dz - s / (4.0 * nn * nn)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{generate, CoefficientNoise, Profile};
    use crate::poly::heat_flow;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close_sets(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        let mut used = vec![false; b.len()];
        a.iter().all(|x| {
            let k = (0..b.len())
                .filter(|&k| !used[k])
                .min_by(|&i, &j| (b[i] - x).norm().total_cmp(&(b[j] - x).norm()))
                .unwrap();
            used[k] = true;
            (b[k] - x).norm() <= tol
        })
    }

    #[test]
    fn small_examples() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        let r = find_roots(&p, 0.0, 100).unwrap();
        assert!(close_sets(&r.roots, &[c(-1.0, 0.0), c(1.0, 0.0)], 1e-14));
        assert!(r.certified());
        let p = Polynomial::from_real(&[3.0, 0.0, -6.0, 0.0, 1.0]).unwrap();
        let a = (3.0 + 6f64.sqrt()).sqrt();
        let b = (3.0 - 6f64.sqrt()).sqrt();
        let r = find_roots(&p, 0.0, 100).unwrap();
        assert!(close_sets(&r.roots, &[c(-a, 0.0), c(a, 0.0), c(-b, 0.0), c(b, 0.0)], 1e-13));
        assert!(matches!(find_roots(&Polynomial::from_real(&[2.0]).unwrap(), 0.0, 10), Err(RootError::Degree0)));
        // zero roots
        let p = Polynomial::from_real(&[0.0, 0.0, -4.0, 0.0, 1.0]).unwrap();
        let r = find_roots(&p, 0.0, 100).unwrap();
        assert!(close_sets(&r.roots, &[c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0), c(2.0, 0.0)], 1e-13));
    }

    #[test]
    fn roots_of_unity() {
        for (n, r) in [(7, 1.0), (64, 2.0), (300, 0.5)] {
            let mut co = vec![0.0; n + 1];
            co[0] = -f64::powi(r, n as i32);
            co[n] = 1.0;
            let p = Polynomial::from_real(&co).unwrap();
            let got = find_roots(&p, 0.0, 500).unwrap();
            let want: Vec<Complex64> =
                (0..n).map(|k| Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64)).collect();
            assert!(close_sets(&got.roots, &want, 1e-12 * r), "n={}", n);
            assert!(got.certified());
        }
    }

    #[test]
    fn from_roots_round_trip() {
        let want: Vec<Complex64> = (0..40).map(|k| c((k as f64 * 0.37).sin() * 2.0, (k as f64 * 0.91).cos())).collect();
        let p = Polynomial::from_roots(&want);
        let got = find_roots(&p, 0.0, 500).unwrap();
        assert!(close_sets(&got.roots, &want, 1e-8));
    }

    #[test]
    fn random_weyl_certified_and_conjugate_closed() {
        let p = generate(&Profile::weyl(), 200, &CoefficientNoise::new(crate::ensembles::NoiseKind::Rademacher, 3)).unwrap();
        let r = find_roots(&p, 0.0, 500).unwrap();
        assert_eq!(r.len(), 200);
        assert!(r.certified());
        let conj: Vec<Complex64> = r.roots.iter().map(|z| z.conj()).collect();
        assert!(close_sets(&r.roots, &conj, 1e-9));
        let again = find_roots(&p, 0.0, 500).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn evolved_weyl_roots_match_expanded_when_well_conditioned() {
        let p = generate(&Profile::weyl(), 40, &CoefficientNoise::gaussian(1)).unwrap();
        let s = c(0.5 / 40.0, 0.0);
        let a = find_roots(&EvolvedPolynomial::new(p.clone(), s), 0.0, 500).unwrap();
        let b = find_roots(&heat_flow(&p, s), 0.0, 500).unwrap();
        assert!(close_sets(&a.roots, &b.roots, 1e-9));
    }

    #[test]
    fn initial_guess_radii() {
        // z^4 - 16: one hull edge of slope -ln 2
        let g = initial_guesses(&[16f64.ln(), f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0]);
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|z| (z.norm() - 2.0).abs() < 1e-14));
        let g = initial_guesses(&[f64::NEG_INFINITY, 0.0, 0.0]);
        assert_eq!(g[0], c(0.0, 0.0));
        assert!((g[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn track_examples() {
        let p = Polynomial::from_real(&[0.5, 2.0]).unwrap();
        let tr = track(&p, &[0.0, 0.5, 1.0], 1).unwrap();
        assert!(tr.paths[0].iter().all(|z| (z - c(-0.25, 0.0)).norm() < 1e-15));
        let p = Polynomial::monomial(2);
        let grid: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
        let tr = track(&p, &grid, 2).unwrap();
        for (i, &t) in grid.iter().enumerate().skip(1) {
            let sl = tr.slice(i);
            let r = (t / 2.0).sqrt();
            assert!(close_sets(&sl, &[c(r, 0.0), c(-r, 0.0)], 1e-12), "{:?}", sl);
        }
    }

    #[test]
    fn match_slices_recovers_permutation() {
        let prev: Vec<Complex64> = (0..30).map(|k| Complex64::from_polar(1.0 + 0.01 * k as f64, k as f64)).collect();
        let perm_true: Vec<usize> = (0..30).map(|k| (k * 7) % 30).collect();
        let mut next = vec![c(0.0, 0.0); 30];
        for (j, &k) in perm_true.iter().enumerate() {
            next[k] = prev[j] + c(1e-4, -1e-4);
        }
        let (perm, _) = match_slices(&prev, &next);
        assert_eq!(perm, perm_true);
    }

    #[test]
    fn ode_residual_examples() {
        let p = Polynomial::from_real(&[1.0, 3.0]).unwrap();
        let tr = track(&p, &[0.0, 0.1, 0.2], 1).unwrap();
        assert_eq!(ode_residual(&tr, 1).unwrap(), 0.0);
        // z^2 - c flows to z^2 - c - t/n; roots +-sqrt(c + t/n)
        let p = Polynomial::from_real(&[-1.0, 0.0, 1.0]).unwrap();
        let grid: Vec<f64> = (0..=20).map(|i| 0.01 * i as f64).collect();
        let tr = track(&p, &grid, 2).unwrap();
        for i in 1..20 {
            assert!(ode_residual(&tr, i).unwrap() < 1e-6);
        }
        assert!(matches!(ode_residual(&tr, 0), Err(RootError::BadSlice(0))));
    }

    #[test]
    fn pde_residual_examples() {
        let p = Polynomial::from_real(&[1.0, 2.0]).unwrap();
        assert!(pde_residual_finite_n(&p, c(1.0, 0.5), c(0.3, 0.0), 1, 1e-4).unwrap() < 1e-7);
        let w = generate(&Profile::weyl(), 50, &CoefficientNoise::gaussian(2)).unwrap();
        let a = pde_residual_finite_n(&w, c(3.0, 0.0), c(0.3, 0.0), 50, 1e-4).unwrap();
        assert!(a <= 1e-6, "{}", a);
        // rotate (z, t) -> (e^{i phi/2} z, e^{i phi} t) on the rotated polynomial
        let phi: f64 = 0.8;
        let rot = Complex64::from_polar(1.0, phi / 2.0);
        let co: Vec<Complex64> = w.coeffs().iter().enumerate().map(|(k, c)| c.to_complex() * rot.powi(-(k as i32))).collect();
        let wr = Polynomial::from_complex(&co).unwrap();
        let b = pde_residual_finite_n(&wr, c(3.0, 0.0) * rot, Complex64::from_polar(0.3, phi), 50, 1e-4).unwrap();
        assert!((a - b).abs() <= 1e-8);
        assert!(matches!(pde_residual_finite_n(&w, c(0.0, 0.0), c(0.3, 0.0), 50, 1e-4), Err(RootError::NearRoot(..))));
    }
}
