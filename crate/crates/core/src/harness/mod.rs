//! Parameter sweeps over random scenarios, with CSV output and trend checks.

pub mod config;
pub mod csv;
pub mod trend;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{rescore, Scheme};
use crate::error::{Error, Result};
use crate::model::InterferenceModel;
use crate::scenario::{generate, ScenarioConfig};
use crate::solver::SolverParams;

pub const DEFAULT_REALIZATIONS: usize = 20;
pub const FULL_REALIZATIONS: usize = 100;

/// Largest user count an `N` sweep accepts.
pub const MAX_USERS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Users,
    Alpha,
    Beta,
    LambdaT,
    PMax,
    F0,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::Users, Axis::Alpha, Axis::Beta, Axis::LambdaT, Axis::PMax, Axis::F0];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Users => "N",
            Axis::Alpha => "alpha",
            Axis::Beta => "beta",
            Axis::LambdaT => "lambda_t",
            Axis::PMax => "p_max",
            Axis::F0 => "f0",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match self {
            Axis::Users => {
                if !(value >= 1.0 && value <= MAX_USERS as f64 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("N must be a whole number in 1..={MAX_USERS}, got {value}")));
                }
                cfg.users = value as usize;
            }
            Axis::Alpha => cfg.alpha_bits = value,
            Axis::Beta => cfg.beta_cycles = value,
            Axis::LambdaT => cfg.lambda_t = value,
            Axis::PMax => cfg.p_max_w = value,
            Axis::F0 => cfg.f_server = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s || (*a == Axis::Users && s == "n"))
            .ok_or_else(|| Error::Config(format!("unknown axis `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub realizations: usize,
    pub base: ScenarioConfig,
    pub schemes: Vec<Scheme>,
    pub params: SolverParams,
    /// Report overheads as if cells did not interfere.
    pub interference_free_scoring: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no axis values".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }
}

/// Seed-averaged metrics of one scheme at one axis point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub axis: Axis,
    pub value: f64,
    pub realizations: usize,
    pub offload_frac_mean: f64,
    pub offload_frac_std: f64,
    pub overhead_mean: f64,
    pub overhead_std: f64,
    pub iterations_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<ResultRow>,
    /// Mean wall time per run in seconds, parallel to `rows`.
    pub wall_seconds: Vec<f64>,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct RunStats {
    frac: f64,
    overhead: f64,
    iterations: f64,
    seconds: f64,
}

/// Runs every scheme on every realization of every axis point.
///
/// Realization `r` uses seed `base.seed + r` at every axis point, so the
/// points share placements as far as the axis allows.
pub fn run_sweep(spec: &SweepSpec) -> Result<Sweep> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.realizations).map(move |r| (v, r)))
        .collect();
    let results: Vec<Result<Vec<RunStats>>> = jobs
        .par_iter()
        .map(|&(v, r)| {
            let mut cfg = spec.axis.apply(&spec.base, spec.values[v])?;
            cfg.seed = spec.base.seed.wrapping_add(r as u64);
            let scn = generate(&cfg)?;
            spec.schemes
                .iter()
                .map(|&scheme| {
                    let start = Instant::now();
                    let mut sol = scheme.run(&scn, &spec.params)?;
                    let seconds = start.elapsed().as_secs_f64();
                    if spec.interference_free_scoring {
                        sol = rescore(&scn, &sol, InterferenceModel::Free)?;
                    }
                    Ok(RunStats {
                        frac: sol.offloader_fraction(),
                        overhead: sol.total_overhead,
                        iterations: sol.iterations as f64,
                        seconds,
                    })
                })
                .collect()
        })
        .collect();
    let results: Vec<Vec<RunStats>> = results.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut wall_seconds = Vec::new();
    for (k, &scheme) in spec.schemes.iter().enumerate() {
        for (v, &value) in spec.values.iter().enumerate() {
            let runs: Vec<&RunStats> = (0..spec.realizations)
                .map(|r| &results[v * spec.realizations + r][k])
                .collect();
            let pick = |f: fn(&RunStats) -> f64| runs.iter().map(|s| f(s)).collect::<Vec<f64>>();
            let (fm, fs) = mean_std(&pick(|s| s.frac));
            let (zm, zs) = mean_std(&pick(|s| s.overhead));
            let (im, _) = mean_std(&pick(|s| s.iterations));
            let (wm, _) = mean_std(&pick(|s| s.seconds));
            rows.push(ResultRow {
                scheme,
                axis: spec.axis,
                value,
                realizations: spec.realizations,
                offload_frac_mean: fm,
                offload_frac_std: fs,
                overhead_mean: zm,
                overhead_std: zs,
                iterations_mean: im,
            });
            wall_seconds.push(wm);
        }
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        rows[a]
            .scheme
            .cmp(&rows[b].scheme)
            .then(rows[a].value.total_cmp(&rows[b].value))
    });
    Ok(Sweep {
        rows: order.iter().map(|&i| rows[i].clone()).collect(),
        wall_seconds: order.iter().map(|&i| wall_seconds[i]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            axis: Axis::Users,
            values: vec![6.0, 3.0],
            realizations: 3,
            base: ScenarioConfig { servers: 2, subchannels: 2, ..Default::default() },
            schemes: vec![Scheme::Jcorams, Scheme::Local],
            params: SolverParams::default(),
            interference_free_scoring: false,
        }
    }

    #[test]
    fn rows_are_sorted_and_complete() {
        let out = run_sweep(&small_spec()).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert_eq!(out.wall_seconds.len(), 4);
        let keys: Vec<(Scheme, f64)> = out.rows.iter().map(|r| (r.scheme, r.value)).collect();
        assert_eq!(
            keys,
            vec![(Scheme::Jcorams, 3.0), (Scheme::Jcorams, 6.0), (Scheme::Local, 3.0), (Scheme::Local, 6.0)]
        );
        for r in &out.rows {
            assert!((0.0..=1.0).contains(&r.offload_frac_mean));
        }
        assert_eq!(out.rows[2].offload_frac_mean, 0.0);
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = run_sweep(&small_spec()).unwrap().rows;
        let b = run_sweep(&small_spec()).unwrap().rows;
        assert_eq!(a, b);
    }

    #[test]
    fn lambda_axis_sets_energy_weight() {
        let cfg = Axis::LambdaT.apply(&ScenarioConfig::default(), 0.3).unwrap();
        let scn = generate(&cfg).unwrap();
        assert!(scn.users().iter().all(|u| u.lambda_t == 0.3 && (u.lambda_e - 0.7).abs() < 1e-15));
    }

    #[test]
    fn axis_names_round_trip() {
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        assert!(Axis::Users.apply(&ScenarioConfig::default(), 0.0).is_err());
        assert!(Axis::LambdaT.apply(&ScenarioConfig::default(), 1.1).is_err());
    }

    #[test]
    fn std_uses_sample_denominator() {
        assert_eq!(mean_std(&[1.0]), (1.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
