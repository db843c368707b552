//! Material configuration files (TOML).
//!
//! ```toml
//! [mineral]
//! k_gpa = 36.6
//! mu_gpa = 45.0
//!
//! [pore]
//! k_gpa = 0.0
//! mu_gpa = 0.0
//!
//! [dem]
//! aspect_ratio = 0.25
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::effmed::{DemParams, ElasticModuli, DEFAULT_ASPECT_RATIO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuliEntry {
    pub k_gpa: f64,
    pub mu_gpa: f64,
}

impl ModuliEntry {
    pub fn moduli(&self) -> Result<ElasticModuli> {
        ElasticModuli::new(self.k_gpa, self.mu_gpa)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemSection {
    #[serde(default = "default_alpha")]
    pub aspect_ratio: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_ASPECT_RATIO
}

fn vacuum() -> ModuliEntry {
    ModuliEntry { k_gpa: 0.0, mu_gpa: 0.0 }
}

fn default_dem() -> DemSection {
    DemSection { aspect_ratio: DEFAULT_ASPECT_RATIO }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialConfig {
    pub mineral: ModuliEntry,
    #[serde(default = "vacuum")]
    pub pore: ModuliEntry,
    #[serde(default = "default_dem")]
    pub dem: DemSection,
}

impl MaterialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: MaterialConfig = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.dem_params()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn dem_params(&self) -> Result<DemParams> {
        let p = DemParams::new(self.mineral.moduli()?, self.dem.aspect_ratio)?
            .with_inclusion(self.pore.moduli()?);
        p.validate()?;
        Ok(p)
    }
}
