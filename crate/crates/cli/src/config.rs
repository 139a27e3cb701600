//! Run configuration shared by all subcommands.

use std::path::PathBuf;

use heatflow::ensembles::{
    generate, generate_evenly_spaced, generate_iid_roots, CoefficientNoise, NoiseKind, Profile,
};
use heatflow::poly::Polynomial;
use num_complex::Complex64;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(CliError::BadConfig(format!("unknown format '{}'", s))),
        }
    }
}

/// Where the polynomial comes from.
#[derive(Clone, Debug)]
pub enum Source {
    /// independent coefficients with the profile's scale
    Coefficients(Profile),
    /// `z^n - r^n`
    Evenly { r: f64 },
    /// roots drawn independently from the profile's initial law
    Iid(Profile),
}

impl Source {
    pub fn profile(&self) -> Option<&Profile> {
        match self {
            Source::Coefficients(p) | Source::Iid(p) => Some(p),
            Source::Evenly { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub profile: String,
    pub n: usize,
    pub t: Complex64,
    pub t_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub beta: Option<f64>,
    pub r: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub suite: String,
    pub grid: usize,
    pub extent: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: "weyl".into(),
            n: 1000,
            t: Complex64::new(0.5, 0.0),
            t_grid: None,
            seed: 0,
            beta: None,
            r: None,
            format: Format::Csv,
            out: None,
            threads: None,
            suite: "all".into(),
            grid: 41,
            extent: 3.0,
        }
    }
}

fn bad(m: impl Into<String>) -> CliError {
    CliError::BadConfig(m.into())
}

/// `"0.5"`, `"0.5+0.2i"`, `"-1e-3-2i"`, `"0.3i"`.
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let s = s.trim();
    let err = || bad(format!("cannot parse '{}' as re[+imi]", s));
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| err());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re: f64 = body[..k].parse().map_err(|_| err())?;
            let im_s = &body[k..];
            let im: f64 = match im_s {
                "+" => 1.0,
                "-" => -1.0,
                _ => im_s.parse().map_err(|_| err())?,
            };
            Ok(Complex64::new(re, im))
        }
        None => {
            let im: f64 = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => body.parse().map_err(|_| err())?,
            };
            Ok(Complex64::new(0.0, im))
        }
    }
}

/// `"start:end:step"` to the grid `start, start+step, ..., end`.
pub fn parse_t_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let err = || bad(format!("t grid '{}' is not start:end:step", s));
    if parts.len() != 3 {
        return Err(err());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| err())?;
    let (a, b, h) = (v[0], v[1], v[2]);
    if !(h > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(err());
    }
    let k = ((b - a) / h + 1e-9).floor() as usize;
    if k > 1_000_000 {
        return Err(bad("t grid has too many points"));
    }
    // round away the accumulated representation error, e.g. 0.9400000000000001
    let snap = |x: f64| if h >= 1e-9 { (x * 1e12).round() / 1e12 } else { x };
    Ok((0..=k).map(|i| snap(a + i as f64 * h)).collect())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(bad("--n must be at least 1"));
        }
        if !(self.t.re.is_finite() && self.t.im.is_finite()) {
            return Err(bad("--t must be finite"));
        }
        if self.grid == 0 || !(self.extent > 0.0) {
            return Err(bad("grid size and extent must be positive"));
        }
        self.source().map(|_| ())
    }

    /// Parses the profile string, honouring `--beta` and `--r`.
    pub fn source(&self) -> Result<Source, CliError> {
        let spec = self.profile.trim();
        if let Some(rest) = spec.strip_prefix("evenly") {
            let r = match rest.strip_prefix(":r=") {
                Some(v) => v.parse::<f64>().map_err(|_| bad(format!("bad radius in '{}'", spec)))?,
                None if rest.is_empty() => self.r.unwrap_or(1.0),
                None => return Err(bad(format!("expected evenly:r=<value>, got '{}'", spec))),
            };
            if !(r > 0.0 && r.is_finite()) {
                return Err(bad("radius must be positive"));
            }
            return Ok(Source::Evenly { r });
        }
        if let Some(rest) = spec.strip_prefix("iid:") {
            return Ok(Source::Iid(self.parse_profile(rest)?));
        }
        Ok(Source::Coefficients(self.parse_profile(spec)?))
    }

    fn parse_profile(&self, spec: &str) -> Result<Profile, CliError> {
        let spec = match (spec, self.beta) {
            ("lo", Some(b)) => format!("lo:beta={}", b),
            (s, _) => s.to_string(),
        };
        Profile::parse(&spec).map_err(|e| bad(e.to_string()))
    }

    /// The degree-`n` polynomial at time 0.
    pub fn polynomial(&self) -> Result<Polynomial, CliError> {
        let p = match self.source()? {
            Source::Coefficients(p) => generate(&p, self.n, &CoefficientNoise::new(NoiseKind::ComplexGaussian, self.seed)),
            Source::Evenly { r } => generate_evenly_spaced(self.n, r),
            Source::Iid(p) => generate_iid_roots(self.n, &p, self.seed),
        };
        p.map_err(|e| bad(e.to_string()))
    }
}
