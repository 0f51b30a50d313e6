//! Experiment configuration (JSON).  Every field has a default, so a config
//! only needs what differs; unknown fields are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use charwave::bounds::{BoundConstants, LengthParams, LipschitzParams, StraddleFamily};
use charwave::chart::{ChartDomain, DatumSpec, InitialDatum, SolveOptions};
use charwave::metric::{AffineFamily, PathSpec};
use charwave::wavespeed::{SpeedSpec, WaveSpeed};
use serde::{Deserialize, Serialize};

/// A suite of random pairs of data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPairs {
    pub n: usize,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub speed: SpeedSpec,
    /// Admissible range of `u` on which `c` is validated.
    pub u_range: (f64, f64),
    /// Built-in datum (solve, slice, singularities).
    pub datum: Option<DatumSpec>,
    /// CSV file with columns `x,u0,u1` on a uniform lattice; replaces `datum`.
    pub datum_file: Option<PathBuf>,
    /// Path of data (metric).
    pub path: Option<PathSpec>,
    /// Energy cap of the path; defaults to the largest sampled energy.
    pub energy_cap: Option<f64>,
    pub h: f64,
    pub t_max: f64,
    pub margin: f64,
    /// Slice times; empty means ten equal steps on `[0, t_max]`.
    pub taus: Vec<f64>,
    /// Number of `theta` intervals on a path.
    pub thetas: usize,
    pub eps: f64,
    pub delta: f64,
    pub solve: SolveOptions,
    pub singular_threshold: Option<f64>,
    /// Relabelings tried by `metric` in addition to the canonical labeling.
    pub relabelings: Vec<AffineFamily>,
    /// Straddling family (lipschitz).
    pub straddle: Option<StraddleFamily>,
    pub c_fit: f64,
    pub fit_until: Option<f64>,
    pub slack: f64,
    /// Explicit pairs (bounds).
    pub pairs: Vec<(DatumSpec, DatumSpec)>,
    /// Random pairs (bounds), drawn with `seed`.
    pub random_pairs: Option<RandomPairs>,
    /// Frozen constants to check the bounds against.
    pub constants: Option<BoundConstants>,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            speed: SpeedSpec::two_plus_cos(),
            u_range: (-10.0, 10.0),
            datum: None,
            datum_file: None,
            path: None,
            energy_cap: None,
            h: 1.0 / 128.0,
            t_max: 1.0,
            margin: 1.2,
            taus: Vec::new(),
            thetas: 8,
            eps: 1e-4,
            delta: 0.1,
            solve: SolveOptions::default(),
            singular_threshold: None,
            relabelings: Vec::new(),
            straddle: None,
            c_fit: 0.0,
            fit_until: None,
            slack: 1e-2,
            pairs: Vec::new(),
            random_pairs: None,
            constants: None,
            seed: 0,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Config = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            bail!("h must be positive, got {}", self.h);
        }
        if !(self.t_max >= 0.0) {
            bail!("t_max must be nonnegative, got {}", self.t_max);
        }
        if !(self.margin >= 1.0) {
            bail!("margin must be at least 1, got {}", self.margin);
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            bail!("eps must lie in (0, 0.5), got {}", self.eps);
        }
        if !(self.delta > 0.0) {
            bail!("delta must be positive, got {}", self.delta);
        }
        if self.thetas == 0 {
            bail!("thetas must be at least 1");
        }
        if self.taus.iter().any(|t| !(*t >= 0.0)) {
            bail!("slice times must be nonnegative");
        }
        Ok(())
    }

    pub fn speed(&self) -> Result<WaveSpeed> {
        Ok(WaveSpeed::new(self.speed.clone(), self.u_range)?)
    }

    /// Slice times, sorted.
    pub fn taus(&self) -> Vec<f64> {
        let mut t = if self.taus.is_empty() {
            (0..=10).map(|k| self.t_max * k as f64 / 10.0).collect()
        } else {
            self.taus.clone()
        };
        t.sort_by(f64::total_cmp);
        t
    }

    /// The datum on its chart domain: a built-in datum gets a domain covering
    /// its support up to `t_max`; a sample file is used on its own lattice.
    pub fn datum(&self, ws: &WaveSpeed) -> Result<(InitialDatum, ChartDomain)> {
        match (&self.datum, &self.datum_file) {
            (_, Some(file)) => {
                let d = read_samples(file)?;
                let domain = ChartDomain { xa: d.x0, h: d.h, n: d.len() - 1 };
                Ok((d, domain))
            }
            (Some(spec), None) => {
                let support = spec.support().unwrap_or((-1.0, 1.0));
                let probe = ChartDomain::covering(support, 0.0, 0.0, ws, self.h, self.margin)?;
                let energy = probe.sample(spec, ws).energy(ws);
                let domain = ChartDomain::covering(support, self.t_max, energy, ws, self.h, self.margin)?;
                Ok((domain.sample(spec, ws), domain))
            }
            (None, None) => bail!("config needs `datum` or `datum_file`"),
        }
    }

    pub fn length_params(&self) -> LengthParams {
        LengthParams { h: self.h, m: self.thetas, eps: self.eps, delta: self.delta, margin: self.margin }
    }

    pub fn lipschitz_params(&self) -> LipschitzParams {
        LipschitzParams {
            taus: self.taus(),
            m: self.thetas,
            h: self.h,
            eps: self.eps,
            delta: self.delta,
            margin: self.margin,
            slack: self.slack,
            fit_until: self.fit_until,
        }
    }
}

#[derive(Deserialize)]
struct SampleRow {
    x: f64,
    u0: f64,
    u1: f64,
}

fn read_samples(path: &Path) -> Result<InitialDatum> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<SampleRow> =
        rd.deserialize().collect::<std::result::Result<_, _>>().with_context(|| format!("parsing {}", path.display()))?;
    if rows.len() < 5 {
        bail!("{}: need at least 5 samples", path.display());
    }
    let h = rows[1].x - rows[0].x;
    if !(h > 0.0) || rows.windows(2).any(|w| ((w[1].x - w[0].x) - h).abs() > 1e-9 * h.max(1.0)) {
        bail!("{}: samples must lie on a uniform increasing lattice", path.display());
    }
    let (u0, u1) = rows.iter().map(|r| (r.u0, r.u1)).unzip();
    Ok(InitialDatum::from_samples(rows[0].x, h, u0, u1)?)
}
