//! Plain-text (TOML) run configuration.
//!
//! Required keys: `rho`, `E`, `R`, `L`, `h`, `tau`, `T`, `bc`, `degrees`,
//! `const_constraint`, `output_dir`. `degrees` holds four integers
//! ⟨deg P, deg Q, deg R, deg S⟩ applied to both conditions, or eight
//! integers (k = 1 then k = 2). Optional keys: `u0_shift` (shifts the
//! initial profile), `fit_t_lo`/`fit_t_hi` (decay-fit window),
//! `reference_half_width` (reference segment half-width in units of L),
//! and a `[scan]` table with `h_min`, `h_max`, `tau_min`, `tau_max`,
//! `nh`, `ntau`, `nt`.

use crate::adtbc::DegreeSet;
use crate::params::{GridSpec, ModelParams, RodModel};
use crate::stability::ScanSettings;
use crate::stepper::BcKind;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Config {
    pub rho: f64,
    #[serde(rename = "E")]
    pub e_modulus: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub h: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub bc: BcKind,
    pub degrees: Vec<usize>,
    pub const_constraint: bool,
    pub output_dir: PathBuf,

    #[serde(default)]
    pub u0_shift: f64,
    #[serde(default = "default_fit_t_lo")]
    pub fit_t_lo: f64,
    #[serde(default = "default_fit_t_hi")]
    pub fit_t_hi: f64,
    #[serde(default = "default_reference_half_width")]
    pub reference_half_width: f64,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
}

fn default_fit_t_lo() -> f64 {
    0.1
}
fn default_fit_t_hi() -> f64 {
    0.25
}
fn default_reference_half_width() -> f64 {
    40.0
}

/// `[scan]` table. Ranges default to a window around the configured (h, τ)
/// cell; counts default to the desk-scale 20×20 lattice with N_t = 10⁴.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScanConfig {
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    #[serde(default = "default_scan_cells")]
    pub nh: usize,
    #[serde(default = "default_scan_cells")]
    pub ntau: usize,
    #[serde(default = "default_scan_nt")]
    pub nt: usize,
}

fn default_scan_cells() -> usize {
    20
}
pub fn default_scan_nt() -> usize {
    10_000
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            h_min: None,
            h_max: None,
            tau_min: None,
            tau_max: None,
            nh: default_scan_cells(),
            ntau: default_scan_cells(),
            nt: default_scan_nt(),
        }
    }
}

impl std::str::FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    /// Canonical serialized form (field order fixed by the struct).
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn rod(&self) -> Result<RodModel> {
        RodModel::new(self.rho, self.e_modulus, self.radius, self.length)
    }

    pub fn grid(&self, rod: &RodModel) -> Result<GridSpec> {
        GridSpec::new(rod, self.h, self.tau, self.t_end)
    }

    pub fn model(&self) -> Result<ModelParams> {
        let rod = self.rod()?;
        let grid = self.grid(&rod)?;
        Ok(ModelParams::new(rod, grid))
    }

    /// Degree sets for conditions k = 1, 2 from the 4- or 8-integer key.
    pub fn degree_sets(&self) -> Result<[DegreeSet; 2]> {
        match self.degrees.as_slice() {
            [p, q, r, s] => {
                let d = DegreeSet::new(*p, *q, *r, *s);
                Ok([d, d])
            }
            [p1, q1, r1, s1, p2, q2, r2, s2] => Ok([
                DegreeSet::new(*p1, *q1, *r1, *s1),
                DegreeSet::new(*p2, *q2, *r2, *s2),
            ]),
            other => Err(Error::InvalidParameter(format!(
                "degrees must hold 4 or 8 integers, got {}",
                other.len()
            ))),
        }
    }

    /// Validated degree sets: parity must match the constraint mode.
    pub fn checked_degree_sets(&self) -> Result<[DegreeSet; 2]> {
        let sets = self.degree_sets()?;
        for d in &sets {
            d.smallness_order(self.const_constraint)?;
        }
        Ok(sets)
    }

    /// Resolve the scan lattice. Missing ranges default to h ∈ [2/3·h, 4/3·h]
    /// and τ ∈ [A·h_min², A·4·h_max²]·… centred so the configured cell and
    /// both parabola branches have room, with A = τ/h² of the configured cell.
    pub fn scan_settings(&self) -> Result<ScanSettings> {
        let scan = self.scan.clone().unwrap_or_default();
        let a_cell = self.tau / (self.h * self.h);
        let h_min = scan.h_min.unwrap_or(self.h * 2.0 / 3.0);
        let h_max = scan.h_max.unwrap_or(self.h * 4.0 / 3.0);
        let tau_min = scan.tau_min.unwrap_or(a_cell * h_min * h_min * 0.25);
        let tau_max = scan.tau_max.unwrap_or(a_cell * h_max * h_max * 2.5);
        Ok(ScanSettings {
            h_range: (h_min, h_max),
            tau_range: (tau_min, tau_max),
            nh: scan.nh,
            ntau: scan.ntau,
            degrees: self.checked_degree_sets()?,
            const_constraint: self.const_constraint,
            n_t: scan.nt,
        })
    }
}

/// The steel-rod reference configuration with the ⟨4,4,8,8⟩ degree set.
pub fn steel_rod_example() -> Config {
    Config {
        rho: 7860.0,
        e_modulus: 210e9,
        radius: 1e-3,
        length: 1.0,
        h: 0.02,
        tau: 1.6e-4,
        t_end: 0.3,
        bc: BcKind::Adtbc,
        degrees: vec![4, 4, 8, 8],
        const_constraint: false,
        output_dir: PathBuf::from("out"),
        u0_shift: 0.0,
        fit_t_lo: default_fit_t_lo(),
        fit_t_hi: default_fit_t_hi(),
        reference_half_width: default_reference_half_width(),
        scan: None,
    }
}
