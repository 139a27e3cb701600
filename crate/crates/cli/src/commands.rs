//! The four subcommands.  Each returns its outputs in memory; `main` writes
//! them.

use heatflow::ensembles::{Profile, ProfileKind};
use heatflow::limits::{
    evenly_spaced_interval, evenly_spaced_limit, evenly_spaced_regime, level_set_gap, psi, t_sing, t_wig, EvenlyRegime,
    LimitModel,
};
use heatflow::poly::{EvolvedPolynomial, PolyEval};
use heatflow::roots::{find_roots, track, RootError, RootSet, DEFAULT_MAX_ITERS};
use heatflow::transport::TransportMap;
use num_complex::Complex64;
use serde_json::json;

use crate::config::{Format, RunConfig, Source};
use crate::{suite, svg, CliError};

/// A file produced by a command; the first one goes to `--out`, the rest
/// next to it with their own extension.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub ext: &'static str,
    pub content: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<OutputFile>,
    /// names of failed checks (`check` only)
    pub failed: Vec<String>,
}

fn solve<P: PolyEval + ?Sized>(p: &P) -> Result<RootSet, CliError> {
    find_roots(p, 0.0, DEFAULT_MAX_ITERS).map_err(|e| match e {
        RootError::NonConvergence { unconverged, .. } => CliError::NonConvergence(unconverged.len()),
        e => CliError::BadConfig(e.to_string()),
    })
}

/// Roots of the heat-evolved polynomial `exp{-(t/2n) D^2} P_n`, sorted by
/// `(re, im)`.
pub fn evolved_roots(cfg: &RunConfig) -> Result<RootSet, CliError> {
    cfg.validate()?;
    let p = cfg.polynomial()?;
    if cfg.t == Complex64::new(0.0, 0.0) {
        solve(&p)
    } else {
        solve(&EvolvedPolynomial::new(p, cfg.t / cfg.n as f64))
    }
}

fn roots_csv(roots: &[Complex64]) -> String {
    let mut s = String::from("j,re,im\n");
    for (j, z) in roots.iter().enumerate() {
        s.push_str(&format!("{},{},{}\n", j, z.re, z.im));
    }
    s
}

fn fmt_time(v: f64) -> String {
    if v.is_infinite() {
        return "inf".into();
    }
    format!("{}", (v * 1e9).round() / 1e9)
}

/// Level set `{Psi(z/sqrt t) = ln(r/sqrt|t|)}` as polyline pieces, from the
/// Joukowsky parametrization `z = sqrt(t)(u + 1/u)`, `|u| >= 1`.
pub fn level_set_paths(r: f64, t: Complex64) -> Vec<Vec<Complex64>> {
    let tau = t.norm();
    let rot = Complex64::from_polar(tau.sqrt(), 0.5 * t.arg());
    let c = (r / tau.sqrt()).ln();
    let mut paths = Vec::new();
    let mut cur: Vec<Complex64> = Vec::new();
    for k in 0..=1440 {
        let th = std::f64::consts::TAU * k as f64 / 1440.0;
        let c2 = (2.0 * th).cos();
        if 0.5 * c2 > c {
            if cur.len() > 1 {
                paths.push(std::mem::take(&mut cur));
            }
            cur.clear();
            continue;
        }
        // 0.5 rho^-2 cos(2 th) + ln rho is increasing on rho >= 1
        let (mut lo, mut hi) = (1.0f64, (c + 0.5).exp() + 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 0.5 * c2 / (mid * mid) + mid.ln() < c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = Complex64::from_polar(0.5 * (lo + hi), th);
        cur.push((u + 1.0 / u) * rot);
    }
    if cur.len() > 1 {
        paths.push(cur);
    }
    paths
}

fn segment(half: f64, rot: Complex64) -> Vec<Complex64> {
    vec![Complex64::new(-half, 0.0) * rot, Complex64::new(half, 0.0) * rot]
}

/// Predicted support boundary at time `t` for the scatter overlay.
pub fn support_overlay(source: &Source, t: Complex64) -> Vec<Vec<Complex64>> {
    let tau = t.norm();
    let rot = if tau == 0.0 { Complex64::new(1.0, 0.0) } else { Complex64::from_polar(1.0, 0.5 * t.arg()) };
    match source {
        Source::Evenly { r } => {
            let mut v = Vec::new();
            if tau == 0.0 {
                v.push(svg::ellipse_path(*r, *r, rot));
                return v;
            }
            match evenly_spaced_regime(*r, t) {
                EvenlyRegime::Wigner => v.push(segment(2.0 * tau.sqrt(), rot)),
                regime => {
                    v.extend(level_set_paths(*r, t));
                    if regime == EvenlyRegime::Mixed {
                        if let Some((a, b)) = evenly_spaced_interval(*r, tau) {
                            v.push(vec![Complex64::new(a, 0.0) * rot, Complex64::new(b, 0.0) * rot]);
                            v.push(vec![Complex64::new(-a, 0.0) * rot, Complex64::new(-b, 0.0) * rot]);
                        }
                    }
                }
            }
            v
        }
        Source::Coefficients(p) | Source::Iid(p) => {
            if tau >= t_wig(p) {
                return vec![segment(2.0 * tau.sqrt(), rot)];
            }
            let map = TransportMap::new(p.clone(), t);
            let (r0, r1) = p.support_radii();
            let mut v = Vec::new();
            let e = map.ellipse_for(r1);
            v.push(svg::ellipse_path(e.semi_major, e.semi_minor.abs(), rot));
            if r0 > 0.0 && r0 < r1 {
                let e = map.ellipse_for(r0);
                v.push(svg::ellipse_path(e.semi_major, e.semi_minor.abs(), rot));
            }
            v
        }
    }
}

fn extent_for(roots: &[Complex64]) -> f64 {
    let m = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (1.1 * m).max(1.0)
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let rs = evolved_roots(cfg)?;
    let csv = roots_csv(&rs.roots);
    let mut out = CommandOutput {
        stdout: format!("{} roots, max relative backward error {:e}\n", rs.len(), rs.residuals.iter().cloned().fold(0.0, f64::max)),
        ..Default::default()
    };
    match cfg.format {
        Format::Csv => out.files.push(OutputFile { ext: "csv", content: csv }),
        Format::Json => {
            let v = json!({
                "profile": cfg.profile,
                "n": cfg.n,
                "t": [cfg.t.re, cfg.t.im],
                "seed": cfg.seed,
                "roots": rs.roots.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "residuals": rs.residuals,
            });
            out.files.push(OutputFile { ext: "json", content: format!("{}\n", v) });
        }
        Format::Svg => {
            let overlay = support_overlay(&cfg.source()?, cfg.t);
            let title = format!("{} n={} t={}", cfg.profile, cfg.n, cfg.t);
            out.files.push(OutputFile { ext: "svg", content: svg::scatter(&rs.roots, &overlay, extent_for(&rs.roots), &title) });
            out.files.push(OutputFile { ext: "csv", content: csv });
        }
    }
    Ok(out)
}

fn grid_points(cfg: &RunConfig) -> Vec<Complex64> {
    let k = cfg.grid;
    let e = cfg.extent;
    let mut g = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let x = if k == 1 { 0.0 } else { -e + 2.0 * e * i as f64 / (k - 1) as f64 };
            let y = if k == 1 { 0.0 } else { -e + 2.0 * e * j as f64 / (k - 1) as f64 };
            g.push(Complex64::new(x, y));
        }
    }
    g
}

fn critical_times(p: &Profile) -> String {
    let ts = match t_sing(p) {
        Some(v) => fmt_time(v),
        None => "undefined".into(),
    };
    format!("t_sing={}\nt_Wig={}\n", ts, fmt_time(t_wig(p)))
}

pub fn cmd_limit(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    cfg.validate()?;
    if cfg.format == Format::Svg {
        return Err(CliError::BadConfig("limit writes csv or json".into()));
    }
    let grid = grid_points(cfg);
    let mut out = CommandOutput::default();
    match cfg.source()? {
        Source::Evenly { r } => {
            out.stdout = format!("regime={:?}\n", evenly_spaced_regime(r, cfg.t));
            let rows: Vec<(Complex64, f64, f64)> =
                grid.iter().map(|&z| (z, evenly_spaced_limit(r, cfg.t, z), level_set_gap(r, cfg.t, z))).collect();
            let content = match cfg.format {
                Format::Json => {
                    let v: Vec<_> = rows.iter().map(|(z, v, g)| json!({"re": z.re, "im": z.im, "V": v, "level_gap": g})).collect();
                    format!("{}\n", serde_json::Value::Array(v))
                }
                _ => {
                    let mut s = String::from("re,im,V,level_gap\n");
                    for (z, v, g) in rows {
                        s.push_str(&format!("{},{},{},{}\n", z.re, z.im, v, g));
                    }
                    s
                }
            };
            out.files.push(OutputFile { ext: if cfg.format == Format::Json { "json" } else { "csv" }, content });
        }
        Source::Coefficients(p) | Source::Iid(p) => {
            out.stdout = critical_times(&p);
            let model = LimitModel::new(p, cfg.t);
            let rows: Vec<_> = grid
                .iter()
                .map(|&z| (z, model.u_t(z), model.alpha_t(z), model.m_t(z), model.density(z), model.is_regular(z)))
                .collect();
            let content = match cfg.format {
                Format::Json => {
                    let v: Vec<_> = rows
                        .iter()
                        .map(|(z, u, a, m, d, reg)| {
                            json!({"re": z.re, "im": z.im, "U": u, "alpha": a, "m": [m.re, m.im], "p": d, "regular": reg})
                        })
                        .collect();
                    format!("{}\n", serde_json::Value::Array(v))
                }
                _ => {
                    let mut s = String::from("re,im,U,alpha,m_re,m_im,p,regular\n");
                    for (z, u, a, m, d, reg) in rows {
                        s.push_str(&format!("{},{},{},{},{},{},{},{}\n", z.re, z.im, u, a, m.re, m.im, d, reg as u8));
                    }
                    s
                }
            };
            out.files.push(OutputFile { ext: if cfg.format == Format::Json { "json" } else { "csv" }, content });
        }
    }
    Ok(out)
}

/// The map the roots are expected to follow, if any.
fn expected_map(source: &Source, t: f64) -> Option<TransportMap> {
    let p = source.profile()?;
    match p.kind() {
        ProfileKind::LittlewoodOfford { beta } if *beta > 0.5 && t > 0.0 && t < 1.0 => TransportMap::modified_lo(*beta, t).ok(),
        ProfileKind::Weyl if t >= 1.0 => TransportMap::weyl_post_collapse(t).ok(),
        _ if t >= t_wig(p) => None,
        _ => Some(TransportMap::real(p.clone(), t)),
    }
}

pub fn cmd_track(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    cfg.validate()?;
    let grid = cfg.t_grid.clone().ok_or_else(|| CliError::BadConfig("track needs --t-grid start:end:step".into()))?;
    if grid.first() != Some(&0.0) {
        return Err(CliError::BadConfig("the t grid must start at 0".into()));
    }
    let source = cfg.source()?;
    let p = cfg.polynomial()?;
    let traj = track(&p, &grid, cfg.n).map_err(|e| match e {
        RootError::NonConvergence { unconverged, .. } => CliError::NonConvergence(unconverged.len()),
        e => CliError::BadConfig(e.to_string()),
    })?;
    let mut summary = String::from("t,pairing_error\n");
    let start = traj.slice(0);
    for (i, &t) in grid.iter().enumerate() {
        let Some(map) = expected_map(&source, t) else { break };
        let cur = traj.slice(i);
        let err: f64 = start
            .iter()
            .zip(&cur)
            .map(|(&w, &z)| (map.apply(w).unwrap_or(w) - z).norm())
            .sum::<f64>()
            / cur.len() as f64;
        summary.push_str(&format!("{},{}\n", t, err));
    }
    if !traj.ambiguous.is_empty() {
        summary.push_str(&format!("# ambiguous matching at slices {:?}\n", traj.ambiguous));
    }
    let mut out = CommandOutput { stdout: summary, ..Default::default() };
    match cfg.format {
        Format::Csv => out.files.push(OutputFile { ext: "csv", content: traj.to_csv() }),
        Format::Json => out.files.push(OutputFile {
            ext: "json",
            content: format!("{}\n", serde_json::to_string(&traj).map_err(|e| CliError::Io(e.to_string()))?),
        }),
        Format::Svg => {
            let all: Vec<Complex64> = traj.paths.iter().flatten().copied().collect();
            let ends: Vec<Complex64> = traj.paths.iter().map(|p| *p.last().unwrap()).collect();
            out.files.push(OutputFile {
                ext: "svg",
                content: svg::scatter(&ends, &traj.paths, extent_for(&all), &format!("{} n={} trajectories", cfg.profile, cfg.n)),
            });
            out.files.push(OutputFile { ext: "csv", content: traj.to_csv() });
        }
    }
    Ok(out)
}

pub fn cmd_check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let results = suite::run_suite(&cfg.suite, cfg)?;
    let mut out = CommandOutput::default();
    for r in &results {
        out.stdout.push_str(&r.line());
        out.stdout.push('\n');
        if !r.pass {
            out.failed.push(format!("{} {}", r.id, r.name));
        }
    }
    let content = match cfg.format {
        Format::Json => results.iter().map(|r| format!("{}\n", r.to_json())).collect(),
        _ => {
            let mut s = String::from("id,name,pass,seconds,detail\n");
            for r in &results {
                s.push_str(&format!("{},{},{},{:.3},\"{}\"\n", r.id, r.name, r.pass, r.seconds, r.detail.replace('"', "'")));
            }
            s
        }
    };
    out.files.push(OutputFile { ext: if cfg.format == Format::Json { "json" } else { "csv" }, content });
    Ok(out)
}

/// Joukowsky parametrization check used by the overlay.
#[doc(hidden)]
pub fn level_set_residual(r: f64, t: Complex64) -> f64 {
    let c = (r / t.norm().sqrt()).ln();
    let s = t.sqrt();
    level_set_paths(r, t).iter().flatten().map(|&z| (psi(z / s) - c).abs()).fold(0.0, f64::max)
}
