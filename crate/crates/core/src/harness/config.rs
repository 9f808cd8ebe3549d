//! Flat TOML configuration shared by `run`, `sweep` and `check`.

use serde::Deserialize;

use crate::association::UaWeights;
use crate::baselines::Scheme;
use crate::error::{Error, Result};
use crate::scenario::{dbm_to_watts, ScenarioConfig};
use crate::solver::SolverParams;
use crate::subchannel::{CaWeights, Delta};

use super::{Axis, SweepSpec};

/// Largest sweep a config may expand to.
pub const MAX_SWEEP_POINTS: usize = 10_000;

/// Every recognised key. Unset keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub servers: Option<usize>,
    pub users: Option<usize>,
    pub subchannels: Option<usize>,
    pub area_m: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub p_max_w: Option<f64>,
    pub p_max_dbm: Option<f64>,
    pub alpha_bits: Option<f64>,
    pub beta_cycles: Option<f64>,
    pub f_local_hz: Option<Vec<f64>>,
    pub f_server_hz: Option<f64>,
    pub kappa: Option<f64>,
    pub lambda_t: Option<f64>,
    pub zeta: Option<f64>,
    pub quota: Option<usize>,
    pub shadowing_db: Option<f64>,
    pub seed: Option<u64>,

    pub phi_ua: Option<f64>,
    pub eps_ua: Option<f64>,
    pub phi_ca: Option<f64>,
    pub delta: Option<f64>,
    pub power_eps: Option<f64>,
    pub power_refinements: Option<usize>,
    pub interference_free_scoring: Option<bool>,

    pub axis: Option<String>,
    pub values: Option<Vec<f64>>,
    /// `[start, stop, step]`, inclusive of `stop` up to rounding.
    pub range: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub schemes: Option<Vec<String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let d = ScenarioConfig::default();
        if self.p_max_w.is_some() && self.p_max_dbm.is_some() {
            return Err(Error::Config("set p_max_w or p_max_dbm, not both".into()));
        }
        let cfg = ScenarioConfig {
            servers: self.servers.unwrap_or(d.servers),
            users: self.users.unwrap_or(d.users),
            subchannels: self.subchannels.unwrap_or(d.subchannels),
            area_m: self.area_m.unwrap_or(d.area_m),
            bandwidth_hz: self.bandwidth_hz.unwrap_or(d.bandwidth_hz),
            noise_dbm: self.noise_dbm.unwrap_or(d.noise_dbm),
            p_max_w: self
                .p_max_w
                .or(self.p_max_dbm.map(dbm_to_watts))
                .unwrap_or(d.p_max_w),
            alpha_bits: self.alpha_bits.unwrap_or(d.alpha_bits),
            beta_cycles: self.beta_cycles.unwrap_or(d.beta_cycles),
            f_local_choices: self.f_local_hz.clone().unwrap_or(d.f_local_choices),
            f_server: self.f_server_hz.unwrap_or(d.f_server),
            kappa: self.kappa.unwrap_or(d.kappa),
            lambda_t: self.lambda_t.unwrap_or(d.lambda_t),
            zeta: self.zeta.unwrap_or(d.zeta),
            quota: self.quota.or(d.quota),
            shadowing_db: self.shadowing_db.unwrap_or(d.shadowing_db),
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn solver(&self) -> Result<SolverParams> {
        let mut p = SolverParams::default();
        let d_ua = UaWeights::default();
        p.ua = UaWeights {
            phi_ua: self.phi_ua.unwrap_or(d_ua.phi_ua),
            eps_ua: self.eps_ua.unwrap_or(d_ua.eps_ua),
        };
        let d_ca = CaWeights::default();
        p.ca = CaWeights {
            phi_ca: self.phi_ca.unwrap_or(d_ca.phi_ca),
            delta: self.delta.map(Delta::Uniform).unwrap_or(d_ca.delta),
        };
        if let Some(eps) = self.power_eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("power_eps must be positive, got {eps}")));
            }
            p.power.eps = eps;
        }
        if let Some(r) = self.power_refinements {
            if r > 100 {
                return Err(Error::Config(format!("power_refinements too large: {r}")));
            }
            p.power.refinements = r;
        }
        let finite = [
            ("phi_ua", p.ua.phi_ua),
            ("eps_ua", p.ua.eps_ua),
            ("phi_ca", p.ca.phi_ca),
            ("delta", p.ca.delta(0, 0, 1)),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(p)
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        match &self.schemes {
            None => Ok(vec![Scheme::Jcorams, Scheme::Local, Scheme::Offload, Scheme::Hoda]),
            Some(list) => parse_schemes(list.iter().map(String::as_str)),
        }
    }

    /// Axis values from `values` or `range`.
    pub fn axis_values(&self) -> Result<Vec<f64>> {
        match (&self.values, &self.range) {
            (Some(_), Some(_)) => Err(Error::Config("set values or range, not both".into())),
            (Some(v), None) => Ok(v.clone()),
            (None, Some(r)) => expand_range(r),
            (None, None) => Err(Error::Config("a sweep needs values or range".into())),
        }
    }

    pub fn sweep(&self) -> Result<SweepSpec> {
        let axis: Axis = self
            .axis
            .as_deref()
            .ok_or_else(|| Error::Config("a sweep needs an axis".into()))?
            .parse()?;
        let spec = SweepSpec {
            axis,
            values: self.axis_values()?,
            realizations: self.realizations.unwrap_or(super::DEFAULT_REALIZATIONS),
            base: self.scenario()?,
            schemes: self.schemes()?,
            params: self.solver()?,
            interference_free_scoring: self.interference_free_scoring.unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse_schemes<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Vec<Scheme>> {
    let mut out: Vec<Scheme> = Vec::new();
    for name in names {
        let s: Scheme = name.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("scheme list is empty".into()));
    }
    out.sort();
    Ok(out)
}

fn expand_range(r: &[f64]) -> Result<Vec<f64>> {
    let [start, stop, step] = r else {
        return Err(Error::Config("range must be [start, stop, step]".into()));
    };
    if !(start.is_finite() && stop.is_finite() && *step > 0.0 && step.is_finite()) || stop < start {
        return Err(Error::Config(format!("bad range {r:?}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() + 1.0;
    if !(count <= MAX_SWEEP_POINTS as f64) {
        return Err(Error::Config(format!("range expands to more than {MAX_SWEEP_POINTS} points")));
    }
    // Multiply instead of accumulating so 0.1-steps do not drift.
    Ok((0..count as usize).map(|k| start + step * k as f64).collect())
}

/// Parses and validates a sweep configuration.
pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    ConfigFile::parse(text)?.sweep()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = ConfigFile::parse("").unwrap();
        assert_eq!(c.scenario().unwrap(), ScenarioConfig::default());
        assert_eq!(c.solver().unwrap(), SolverParams::default());
    }

    #[test]
    fn keys_override_defaults() {
        let c = ConfigFile::parse(
            "users = 12\nservers = 3\np_max_dbm = 20.0\nf_local_hz = [1e9]\nseed = 7\ndelta = 0.0",
        )
        .unwrap();
        let s = c.scenario().unwrap();
        assert_eq!((s.users, s.servers, s.seed), (12, 3, 7));
        assert!((s.p_max_w - 0.1).abs() < 1e-15);
        assert_eq!(s.f_local_choices, vec![1e9]);
        assert_eq!(c.solver().unwrap().ca.delta, Delta::Uniform(0.0));
    }

    #[test]
    fn rejects_unknown_and_conflicting_keys() {
        assert!(ConfigFile::parse("userz = 3").is_err());
        let c = ConfigFile::parse("p_max_w = 0.1\np_max_dbm = 20.0").unwrap();
        assert!(c.scenario().is_err());
        assert!(ConfigFile::parse("users = -1").is_err());
        assert!(ConfigFile::parse("lambda_t = 1.5").unwrap().scenario().is_err());
    }

    #[test]
    fn user_sweep_has_eleven_points() {
        let spec = parse_sweep("axis = \"N\"\nrange = [10, 50, 4]").unwrap();
        assert_eq!(spec.values.len(), 11);
        assert_eq!(spec.values[10], 50.0);
    }

    #[test]
    fn lambda_range_is_exact() {
        let spec = parse_sweep("axis = \"lambda_t\"\nrange = [0.1, 0.9, 0.1]").unwrap();
        assert_eq!(spec.values.len(), 9);
        assert!((spec.values[8] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn sweep_errors() {
        assert!(parse_sweep("values = [1.0]").is_err());
        assert!(parse_sweep("axis = \"N\"").is_err());
        assert!(parse_sweep("axis = \"N\"\nvalues = [2.5]").is_err());
        assert!(parse_sweep("axis = \"bogus\"\nvalues = [1.0]").is_err());
        assert!(parse_sweep("axis = \"N\"\nvalues = []").is_err());
        assert!(parse_sweep("axis = \"alpha\"\nrange = [1, 2, 1e-9]").is_err());
        assert!(parse_sweep("axis = \"N\"\nvalues = [3]\nrealizations = 0").is_err());
        assert!(parse_sweep("axis = \"N\"\nvalues = [3]\nschemes = [\"nope\"]").is_err());
    }
}
