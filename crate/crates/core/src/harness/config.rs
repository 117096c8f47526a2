//! Experiment configuration, read from TOML.
//!
//! Every section and field is optional and falls back to the reference
//! setup (28 GHz, n_eff = 1.4, Δ = λ/2, d = 3 m, L = 1 m, 10 dBm per user,
//! −90 dBm noise, Q = 1000, 20 m × 20 m user region). Unknown keys are
//! rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{dbm_to_watts, SystemParams};
use crate::optimize::OptimizerSettings;

/// Evaluated scheme, named as in config files and CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "bound-exact")]
    BoundExact,
    #[serde(rename = "bound-integral")]
    BoundIntegral,
    #[serde(rename = "full-sa-1")]
    FullSa1,
    #[serde(rename = "full-sa-2")]
    FullSa2,
    #[serde(rename = "hssa-1")]
    Hssa1,
    #[serde(rename = "hssa-2")]
    Hssa2,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::BoundExact,
        Scheme::BoundIntegral,
        Scheme::FullSa1,
        Scheme::FullSa2,
        Scheme::Hssa1,
        Scheme::Hssa2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::BoundExact => "bound-exact",
            Scheme::BoundIntegral => "bound-integral",
            Scheme::FullSa1 => "full-sa-1",
            Scheme::FullSa2 => "full-sa-2",
            Scheme::Hssa1 => "hssa-1",
            Scheme::Hssa2 => "hssa-2",
        }
    }

    pub fn is_bound(self) -> bool {
        matches!(self, Scheme::BoundExact | Scheme::BoundIntegral)
    }

    pub fn is_greedy(self) -> bool {
        matches!(self, Scheme::Hssa1 | Scheme::Hssa2)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// Minimum antenna spacing rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MinSpacing {
    /// Multiple of the free-space wavelength.
    Wavelengths(f64),
    Meters(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub carrier_freq_hz: f64,
    pub n_eff: f64,
    pub kappa_db_per_m: f64,
    pub min_spacing: MinSpacing,
    pub noise_power_dbm: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 28e9,
            n_eff: 1.4,
            kappa_db_per_m: 0.0,
            min_spacing: MinSpacing::Wavelengths(0.5),
            noise_power_dbm: -90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub segment_length_m: f64,
    pub height_m: f64,
    /// Number of segments; several values form a sweep.
    pub segments: Vec<usize>,
    /// x-coordinate shared by the waveguide centre and the user region centre.
    pub center_x_m: f64,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self {
            segment_length_m: 1.0,
            height_m: 3.0,
            segments: vec![20],
            center_x_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsersSection {
    /// Number of users; several values form a sweep.
    pub count: Vec<usize>,
    pub region_x_m: f64,
    pub region_y_m: f64,
    pub power_dbm: f64,
}

impl Default for UsersSection {
    fn default() -> Self {
        Self {
            count: vec![4],
            region_x_m: 20.0,
            region_y_m: 20.0,
            power_dbm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub realizations: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub output: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            realizations: 50,
            seed: 0,
            schemes: Scheme::ALL.to_vec(),
            output: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub layout: LayoutSection,
    pub users: UsersSection,
    pub optimizer: OptimizerSettings,
    pub run: RunSection,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layout.segments.is_empty() {
            return Err(cfg_err("layout.segments must not be empty"));
        }
        if self.layout.segments.contains(&0) {
            return Err(cfg_err("layout.segments entries must be at least 1"));
        }
        if self.users.count.is_empty() {
            return Err(cfg_err("users.count must not be empty"));
        }
        if self.users.count.contains(&0) {
            return Err(cfg_err("users.count entries must be at least 1"));
        }
        if self.run.realizations == 0 {
            return Err(cfg_err("run.realizations must be at least 1"));
        }
        if self.run.schemes.is_empty() {
            return Err(cfg_err("run.schemes must not be empty"));
        }
        if self.optimizer.grid_points < 2 {
            return Err(cfg_err("optimizer.grid_points must be at least 2"));
        }
        if self.optimizer.tolerance.is_nan() || self.optimizer.tolerance < 0.0 {
            return Err(cfg_err("optimizer.tolerance must be nonnegative"));
        }
        for (name, v) in [
            ("layout.segment_length_m", self.layout.segment_length_m),
            ("layout.height_m", self.layout.height_m),
            ("users.region_x_m", self.users.region_x_m),
            ("users.region_y_m", self.users.region_y_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg_err(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.users.power_dbm.is_finite() || !self.system.noise_power_dbm.is_finite() {
            return Err(cfg_err("power levels must be finite"));
        }
        self.params()?;
        Ok(())
    }

    /// Physical parameters with dBm values converted to watts.
    pub fn params(&self) -> Result<SystemParams> {
        let s = &self.system;
        let wavelength = crate::geometry::SPEED_OF_LIGHT / s.carrier_freq_hz;
        let spacing = match s.min_spacing {
            MinSpacing::Wavelengths(w) => w * wavelength,
            MinSpacing::Meters(m) => m,
        };
        SystemParams::new(
            s.carrier_freq_hz,
            s.n_eff,
            s.kappa_db_per_m,
            dbm_to_watts(s.noise_power_dbm),
            spacing,
        )
    }

    pub fn power_w(&self) -> f64 {
        dbm_to_watts(self.users.power_dbm)
    }

    /// SHA-256 of the canonical JSON form of this configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
