//! TOML experiment description.
//!
//! ```toml
//! name = "capacity-vs-nx-1m"
//! sweep = "array_size"          # or "distance"
//! sweep_values = [16, 32, 48]   # n_x values, or distances in meters
//! distance_m = 1.0              # fixed distance for array_size sweeps
//! # n_x = 48                    # fixed n_x for distance sweeps
//! n_y = 3
//! schemes = ["SVD_BOUND", "SPATIAL_DIVISION", "WD_DC"]
//! seeds = [0, 1, 2]
//! beta = 1.0
//! output_path = "out/fig2a"
//!
//! [system]
//! carrier_frequency_hz = 30e9
//! total_tx_power_dbm = 23.0
//! noise_power_dbm = -89.0
//!
//! [channel]
//! num_scatterers = 2
//!
//! [solver]
//! point_timeout_s = 120.0
//! ```
//!
//! Every table except the top level is optional and falls back to the
//! defaults shown.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, SystemParams};
use crate::metrics::Scheme;
use crate::power::{DcOptions, IwfOptions, PsoOptions, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    ArraySize,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_fc")]
    pub carrier_frequency_hz: f64,
    /// Recorded for reference; capacities are reported in bits/s/Hz.
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_power")]
    pub total_tx_power_dbm: f64,
    #[serde(default = "default_noise")]
    pub noise_power_dbm: f64,
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
    #[serde(default)]
    pub num_rf_chains_tx: Option<usize>,
    #[serde(default)]
    pub num_rf_chains_rx: Option<usize>,
}

fn default_fc() -> f64 {
    30e9
}
fn default_bandwidth() -> f64 {
    300e6
}
fn default_power() -> f64 {
    23.0
}
fn default_noise() -> f64 {
    -89.0
}
fn default_spacing() -> f64 {
    0.5
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: default_fc(),
            bandwidth_hz: default_bandwidth(),
            total_tx_power_dbm: default_power(),
            noise_power_dbm: default_noise(),
            spacing_wavelengths: default_spacing(),
            num_rf_chains_tx: None,
            num_rf_chains_rx: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub max_streams: Option<usize>,
    #[serde(default = "default_timeout")]
    pub point_timeout_s: f64,
    /// Re-derive `C_A H F_A` for every wavenumber point and fail it on
    /// mismatch. Costs an extra pair of matrix products per point.
    #[serde(default)]
    pub keystone_check: bool,
    #[serde(default)]
    pub dc: DcOptions,
    #[serde(default)]
    pub iwf: IwfOptions,
    #[serde(default)]
    pub pso: PsoOptions,
}

fn default_timeout() -> f64 {
    120.0
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_streams: None,
            point_timeout_s: default_timeout(),
            keystone_check: false,
            dc: DcOptions::default(),
            iwf: IwfOptions::default(),
            pso: PsoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub sweep: SweepKind,
    pub sweep_values: Vec<f64>,
    #[serde(default)]
    pub distance_m: Option<f64>,
    #[serde(default)]
    pub n_x: Option<usize>,
    pub n_y: usize,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub output_path: PathBuf,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn default_beta() -> f64 {
    1.0
}

/// Array size and link distance of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    pub n_x: usize,
    pub n_y: usize,
    pub distance_m: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { "<document>".into() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.sweep_values.is_empty() {
            return Err(Error::config("sweep_values", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "must not be empty"));
        }
        for (i, &v) in self.sweep_values.iter().enumerate() {
            let ok = match self.sweep {
                SweepKind::ArraySize => v >= 1.0 && v.fract() == 0.0 && v <= 1e6,
                SweepKind::Distance => positive(v),
            };
            if !ok {
                let want = match self.sweep {
                    SweepKind::ArraySize => "a positive integer",
                    SweepKind::Distance => "a positive distance",
                };
                return Err(Error::config(
                    format!("sweep_values[{i}]"),
                    format!("expected {want}, got {v}"),
                ));
            }
        }
        match self.sweep {
            SweepKind::ArraySize => match self.distance_m {
                Some(d) if positive(d) => {}
                Some(d) => return Err(Error::config("distance_m", format!("must be positive, got {d}"))),
                None => return Err(Error::config("distance_m", "required for array_size sweeps")),
            },
            SweepKind::Distance => match self.n_x {
                Some(n) if n >= 1 => {}
                Some(_) => return Err(Error::config("n_x", "must be at least 1")),
                None => return Err(Error::config("n_x", "required for distance sweeps")),
            },
        }
        if self.n_y == 0 {
            return Err(Error::config("n_y", "must be at least 1"));
        }
        if !positive(self.beta) {
            return Err(Error::config("beta", format!("must be positive, got {}", self.beta)));
        }
        let s = &self.system;
        if !positive(s.carrier_frequency_hz) {
            return Err(Error::config("system.carrier_frequency_hz", "must be positive"));
        }
        if !positive(s.bandwidth_hz) {
            return Err(Error::config("system.bandwidth_hz", "must be positive"));
        }
        if !s.total_tx_power_dbm.is_finite() {
            return Err(Error::config("system.total_tx_power_dbm", "must be finite"));
        }
        if !s.noise_power_dbm.is_finite() {
            return Err(Error::config("system.noise_power_dbm", "must be finite"));
        }
        if !positive(s.spacing_wavelengths) {
            return Err(Error::config("system.spacing_wavelengths", "must be positive"));
        }
        if s.num_rf_chains_tx.is_some() != s.num_rf_chains_rx.is_some() {
            return Err(Error::config(
                "system.num_rf_chains_rx",
                "set both RF chain counts or neither",
            ));
        }
        if s.num_rf_chains_tx == Some(0) || s.num_rf_chains_rx == Some(0) {
            return Err(Error::config("system.num_rf_chains_tx", "must be at least 1"));
        }
        if let Err(e) = self.channel.validate() {
            let (name, reason) = match e {
                Error::InvalidParameter { name, reason } => (name.to_string(), reason),
                other => ("<channel>".to_string(), other.to_string()),
            };
            return Err(Error::config(format!("channel.{name}"), reason));
        }
        if !positive(self.solver.point_timeout_s) {
            return Err(Error::config("solver.point_timeout_s", "must be positive"));
        }
        if self.solver.max_streams == Some(0) {
            return Err(Error::config("solver.max_streams", "must be at least 1"));
        }
        if self.solver.dc.restarts == 0 {
            return Err(Error::config("solver.dc.restarts", "must be at least 1"));
        }
        if self.solver.pso.particles == 0 {
            return Err(Error::config("solver.pso.particles", "must be at least 1"));
        }
        Ok(())
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let s = &self.system;
        let p = SystemParams::from_dbm(s.carrier_frequency_hz, s.total_tx_power_dbm, s.noise_power_dbm)?;
        match (s.num_rf_chains_tx, s.num_rf_chains_rx) {
            (Some(t), Some(r)) => p.with_rf_chains(t, r),
            _ => Ok(p),
        }
    }

    pub fn point(&self, value: f64) -> PointGeometry {
        match self.sweep {
            SweepKind::ArraySize => PointGeometry {
                n_x: value as usize,
                n_y: self.n_y,
                distance_m: self.distance_m.unwrap_or(1.0),
            },
            SweepKind::Distance => PointGeometry {
                n_x: self.n_x.unwrap_or(1),
                n_y: self.n_y,
                distance_m: value,
            },
        }
    }

    /// Tx at the origin and the facing Rx for one sweep point.
    pub fn arrays(&self, point: PointGeometry, params: &SystemParams) -> Result<(ArrayGeometry, ArrayGeometry)> {
        let spacing = self.system.spacing_wavelengths * params.wavelength_m();
        let tx = ArrayGeometry::new(point.n_x, point.n_y, spacing)?;
        let rx = tx.facing(point.n_x, point.n_y, point.distance_m)?;
        Ok((tx, rx))
    }

    pub fn solver_options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            dc: self.solver.dc.clone(),
            iwf: self.solver.iwf.clone(),
            pso: self.solver.pso.clone(),
            seed,
            deadline: None,
        }
    }

    pub fn point_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.solver.point_timeout_s)
    }
}
