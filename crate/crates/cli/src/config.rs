//! Flat JSON run configuration. Rates are in units of κ.

use std::path::Path;

use crossqed::hierarchy::HierarchyOptions;
use crossqed::gates::BiphotonBackend;
use crossqed::{PulseShape, SystemParams, TimeGrid, C64};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Biphoton {
    Timebin,
    Hierarchy,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Omega,
    G,
    Cooperativity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Either `cooperativity` or `g` fixes the coupling; `g_b` defaults to
    /// `-g`.
    pub cooperativity: Option<f64>,
    pub g: Option<f64>,
    pub g_b: Option<f64>,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,

    /// Pulse: `tau_p` (amplitude FWHM) or `eta`, centred at `t0`.
    pub tau_p: Option<f64>,
    pub eta: Option<f64>,
    pub t0: Option<f64>,
    pub t_end: Option<f64>,
    pub n_steps: usize,

    pub biphoton: Biphoton,
    /// Coarsest time-bin width; the oracle also runs at half and a quarter.
    pub bin_width: f64,
    pub n_max: u8,
    pub rtol: f64,
    pub atol: f64,

    pub sweep_axis: Option<Axis>,
    pub sweep_min: Option<f64>,
    pub sweep_max: Option<f64>,
    pub sweep_points: Option<usize>,
    pub sweep_scale: Option<Scale>,

    /// Total decay rates of the two main curves of `fig3`.
    pub fig3_gammas: Vec<f64>,
    /// `g_a / |g_b|` range of the `fig3` inset.
    pub inset_min: f64,
    pub inset_max: f64,
    pub inset_points: usize,
    pub fredkin_cooperativities: Vec<f64>,

    #[serde(skip_serializing)]
    pub out: Option<String>,
    #[serde(skip_serializing)]
    pub json: bool,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = HierarchyOptions::default();
        Self {
            cooperativity: None,
            g: None,
            g_b: None,
            kappa_a: 1.0,
            kappa_b: 1.0,
            gamma_1: 0.1,
            gamma_2: 0.1,
            tau_p: None,
            eta: None,
            t0: None,
            t_end: None,
            n_steps: 4000,
            biphoton: Biphoton::Timebin,
            bin_width: 0.1,
            n_max: h.n_max,
            rtol: h.rtol,
            atol: h.atol,
            sweep_axis: None,
            sweep_min: None,
            sweep_max: None,
            sweep_points: None,
            sweep_scale: None,
            fig3_gammas: vec![0.02, 20.0],
            inset_min: 0.25,
            inset_max: 4.0,
            inset_points: 17,
            fredkin_cooperativities: vec![5.0, 20.0],
            out: None,
            json: false,
            workers: None,
        }
    }
}

const DEFAULT_COOPERATIVITY: f64 = 10.0;
const DEFAULT_DURATION: f64 = 40.0;

/// Parses a `--set` value as JSON, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Reads the config file (if any) and applies `key=value` overrides.
pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig> {
    let mut map = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::ReadConfig {
                path: p.to_path_buf(),
                source,
            })?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::config("the config file must hold a JSON object")),
                Err(e) => return Err(CliError::config(format!("{}: {e}", p.display()))),
            }
        }
        None => Map::new(),
    };
    for (k, v) in overrides {
        map.insert(k.clone(), v.clone());
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::config(e.to_string()))
}

pub fn parse_override(raw: &str) -> std::result::Result<(String, Value), String> {
    let (k, v) = raw.split_once('=').ok_or_else(|| format!("expected key=value, got `{raw}`"))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

/// A resolved sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sweep {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let f = k as f64 / n;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * f,
                    Scale::Log => 10f64.powf(self.min.log10() + (self.max.log10() - self.min.log10()) * f),
                }
            })
            .collect()
    }
}

impl RunConfig {
    pub fn gamma_total(&self) -> f64 {
        self.gamma_1 + self.gamma_2
    }

    fn check(&self) -> Result<()> {
        if self.cooperativity.is_some() && self.g.is_some() {
            return Err(CliError::config("set either `cooperativity` or `g`, not both"));
        }
        if self.tau_p.is_some() && self.eta.is_some() {
            return Err(CliError::config("set either `tau_p` or `eta`, not both"));
        }
        if self.n_steps < 2 {
            return Err(CliError::config("`n_steps` must be at least 2"));
        }
        if !(self.bin_width > 0.0) {
            return Err(CliError::config("`bin_width` must be positive"));
        }
        if self.workers == Some(0) {
            return Err(CliError::config("`workers` must be at least 1"));
        }
        Ok(())
    }

    /// Coupling `g` implied by the config at total decay rate `gamma`.
    pub fn coupling(&self, gamma: f64) -> f64 {
        match (self.g, self.cooperativity) {
            (Some(g), _) => g,
            (None, c) => (2.0 * self.kappa_a * gamma * c.unwrap_or(DEFAULT_COOPERATIVITY)).sqrt(),
        }
    }

    /// System parameters with coupling `g` and the configured decay rates.
    pub fn params_with(&self, g: f64) -> Result<SystemParams> {
        let g_b = self.g_b.map_or(-g, |gb| gb);
        Ok(SystemParams::new(
            C64::new(g, 0.0),
            C64::new(g_b, 0.0),
            self.kappa_a,
            self.kappa_b,
            self.gamma_1,
            self.gamma_2,
        )?)
    }

    pub fn params(&self) -> Result<SystemParams> {
        self.params_with(self.coupling(self.gamma_total()))
    }

    /// Symmetric parameters at cooperativity `c` and total decay `gamma`,
    /// keeping the configured `Γ_1 : Γ_2` split.
    pub fn params_at(&self, c: f64, gamma: f64) -> Result<SystemParams> {
        let total = self.gamma_total();
        let share = if total > 0.0 { self.gamma_1 / total } else { 0.5 };
        let g = (2.0 * self.kappa_a * gamma * c).sqrt();
        Ok(SystemParams::new(
            C64::new(g, 0.0),
            C64::new(-g, 0.0),
            self.kappa_a,
            self.kappa_b,
            share * gamma,
            (1.0 - share) * gamma,
        )?)
    }

    pub fn pulse(&self) -> Result<PulseShape> {
        let eta = match (self.eta, self.tau_p) {
            (Some(eta), _) => eta,
            (None, tau) => tau.unwrap_or(DEFAULT_DURATION) / crossqed::pulse::fwhm_factor(),
        };
        Ok(PulseShape::new(self.t0.unwrap_or(5.0 * eta), eta)?)
    }

    pub fn grid(&self, pulse: &PulseShape) -> Result<TimeGrid> {
        let default = TimeGrid::default_for(pulse);
        let grid = TimeGrid::new(default.t_start(), self.t_end.unwrap_or(default.t_end()), self.n_steps)?;
        grid.require_covers(pulse)?;
        Ok(grid)
    }

    pub fn hierarchy_options(&self) -> HierarchyOptions {
        HierarchyOptions {
            n_max: self.n_max,
            rtol: self.rtol,
            atol: self.atol,
            store_tensors: false,
        }
    }

    pub fn backend(&self) -> BiphotonBackend {
        match self.biphoton {
            Biphoton::Timebin => BiphotonBackend::TimeBin { dt: self.bin_width },
            Biphoton::Hierarchy => BiphotonBackend::Hierarchy(self.hierarchy_options()),
            Biphoton::None => BiphotonBackend::Disabled,
        }
    }

    /// Fills the sweep fields from `default`, rejecting axes the command
    /// cannot sweep.
    pub fn resolve_sweep(&mut self, default: Sweep, allowed: &[Axis]) -> Result<Sweep> {
        self.check()?;
        let axis = self.sweep_axis.unwrap_or(default.axis);
        if !allowed.contains(&axis) {
            return Err(CliError::config(format!("this command cannot sweep {axis:?}")));
        }
        let same_axis = axis == default.axis;
        let pick = |v: Option<f64>, d: f64| match v {
            Some(v) => Ok(v),
            None if same_axis => Ok(d),
            None => Err(CliError::config("give `sweep_min` and `sweep_max` for a non-default sweep axis")),
        };
        let sweep = Sweep {
            axis,
            min: pick(self.sweep_min, default.min)?,
            max: pick(self.sweep_max, default.max)?,
            points: self.sweep_points.unwrap_or(default.points),
            scale: self.sweep_scale.unwrap_or(default.scale),
        };
        if sweep.points == 0 || !(sweep.min <= sweep.max) {
            return Err(CliError::config("sweep needs at least one point and sweep_min <= sweep_max"));
        }
        if sweep.scale == Scale::Log && !(sweep.min > 0.0) {
            return Err(CliError::config("a log sweep needs sweep_min > 0"));
        }
        if sweep.axis != Axis::Omega && sweep.min < 0.0 {
            return Err(CliError::config("couplings and cooperativities must be non-negative"));
        }
        self.sweep_axis = Some(sweep.axis);
        self.sweep_min = Some(sweep.min);
        self.sweep_max = Some(sweep.max);
        self.sweep_points = Some(sweep.points);
        self.sweep_scale = Some(sweep.scale);
        Ok(sweep)
    }

    /// For commands without a sweep axis.
    pub fn forbid_sweep(&self) -> Result<()> {
        self.check()?;
        if self.sweep_axis.is_some() {
            return Err(CliError::config("this command does not take a sweep axis"));
        }
        Ok(())
    }

    /// Single-line JSON of the resolved config, for the CSV header.
    pub fn header(&self, command: &str) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Value::Object(m) = &mut v {
            m.insert("command".into(), Value::String(command.into()));
            if m.get("cooperativity") == Some(&Value::Null) && m.get("g") == Some(&Value::Null) {
                m.insert("cooperativity".into(), DEFAULT_COOPERATIVITY.into());
            }
            if m.get("tau_p") == Some(&Value::Null) && m.get("eta") == Some(&Value::Null) {
                m.insert("tau_p".into(), DEFAULT_DURATION.into());
            }
        }
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_are_typed() {
        let sets = ["cooperativity=20", "biphoton=hierarchy", "fig3_gammas=[0.2]"]
            .iter()
            .map(|s| parse_override(s).unwrap())
            .collect::<Vec<_>>();
        let cfg = load(None, &sets).unwrap();
        assert_eq!(cfg.cooperativity, Some(20.0));
        assert_eq!(cfg.biphoton, Biphoton::Hierarchy);
        assert_eq!(cfg.fig3_gammas, vec![0.2]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let sets = vec![parse_override("cooperatvity=2").unwrap()];
        let err = load(None, &sets).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn defaults_give_the_reference_setup() {
        let cfg = RunConfig::default();
        let p = cfg.params().unwrap();
        assert!((p.cooperativity().unwrap() - 10.0).abs() < 1e-12);
        assert!((cfg.pulse().unwrap().tau_p() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn log_sweep_hits_its_ends() {
        let s = Sweep {
            axis: Axis::Cooperativity,
            min: 0.1,
            max: 1000.0,
            points: 41,
            scale: Scale::Log,
        };
        let v = s.values();
        assert_eq!(v.len(), 41);
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[20] - 10.0).abs() < 1e-12 && (v[40] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn foreign_axis_needs_bounds() {
        let mut cfg = RunConfig {
            sweep_axis: Some(Axis::G),
            ..Default::default()
        };
        let d = Sweep {
            axis: Axis::Cooperativity,
            min: 0.1,
            max: 10.0,
            points: 3,
            scale: Scale::Log,
        };
        assert!(cfg.resolve_sweep(d, &[Axis::G, Axis::Cooperativity]).is_err());
        assert!(cfg.resolve_sweep(d, &[Axis::Cooperativity]).is_err());
    }
}
