//! Run configurations. Every block rejects unknown keys.

use std::f64::consts::PI;
use std::path::Path;

use qnd_core::detection::{BeamSplitterModel, DEFAULT_CASCADE_THRESHOLD};
use qnd_core::dynamics::{Gammas, InteractionParams, StepControl};
use qnd_core::hilbert::{ModeSpace, DEFAULT_EPS_TRUNC};
use qnd_core::multimode::{CalibrationScan, Grid1D, MultimodeParams, Settings};
use qnd_core::tomography::PhaseSpaceGrid;
use qnd_core::C64;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn default_g() -> f64 {
    1.0
}

fn default_gamma() -> Gammas {
    Gammas::uniform(1e-3)
}

fn default_truncation() -> [usize; 3] {
    [16, 2, 2]
}

fn default_length() -> f64 {
    2.0 * PI
}

fn default_eps() -> f64 {
    DEFAULT_EPS_TRUNC
}

/// Single-mode medium shared by the single-mode scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_gamma")]
    pub gamma: Gammas,
    /// Fock dimensions of (probe, auxiliary, signal).
    #[serde(default = "default_truncation")]
    pub truncation: [usize; 3],
    /// Propagation length `z_end`.
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_eps")]
    pub eps_trunc: f64,
    #[serde(default)]
    pub step: StepControl,
}

impl Default for Medium {
    fn default() -> Self {
        Self {
            g: default_g(),
            gamma: default_gamma(),
            truncation: default_truncation(),
            length: default_length(),
            eps_trunc: default_eps(),
            step: StepControl::default(),
        }
    }
}

impl Medium {
    pub fn params(&self) -> Result<InteractionParams, CliError> {
        if !(self.length >= 0.0 && self.length.is_finite()) {
            return Err(CliError::Config(format!(
                "medium.length must be finite and nonnegative, got {}",
                self.length
            )));
        }
        if !(self.eps_trunc > 0.0 && self.eps_trunc < 1.0) {
            return Err(CliError::Config(format!(
                "medium.eps_trunc must lie in (0, 1), got {}",
                self.eps_trunc
            )));
        }
        let [p, a, s] = self.truncation;
        let space = ModeSpace::standard(p, a, s).map_err(CliError::config)?;
        InteractionParams::new(C64::new(self.g, 0.0), self.gamma, space).map_err(CliError::config)
    }
}

/// Detection stage settings.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detector {
    #[serde(default = "default_threshold")]
    pub cascade_threshold: f64,
    #[serde(default)]
    pub beam_splitter: BeamSplitterModel,
}

fn default_threshold() -> f64 {
    DEFAULT_CASCADE_THRESHOLD
}

impl Default for Detector {
    fn default() -> Self {
        Self {
            cascade_threshold: default_threshold(),
            beam_splitter: BeamSplitterModel::default(),
        }
    }
}

/// Rectangular phase-space window.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerWindow {
    pub x: [f64; 2],
    pub nx: usize,
    pub p: [f64; 2],
    pub np: usize,
}

impl Default for WignerWindow {
    fn default() -> Self {
        Self {
            x: [-4.0, 4.0],
            nx: 101,
            p: [-4.0, 4.0],
            np: 101,
        }
    }
}

impl WignerWindow {
    pub fn grid(&self) -> Result<PhaseSpaceGrid, CliError> {
        PhaseSpaceGrid::uniform(
            (self.x[0], self.x[1]),
            self.nx,
            (self.p[0], self.p[1]),
            self.np,
        )
        .map_err(CliError::config)
    }
}

fn default_samples() -> usize {
    64
}

fn default_signal() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleModeConfig {
    pub alpha_sq: f64,
    /// Photons in the signal input, 0 or 1.
    #[serde(default = "default_signal")]
    pub signal_photons: usize,
    #[serde(default)]
    pub medium: Medium,
    #[serde(default)]
    pub detector: Detector,
    /// Number of equal intervals of the observables table.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Also run a vacuum signal and report its click probability.
    #[serde(default = "default_true")]
    pub vacuum_branch: bool,
    #[serde(default)]
    pub wigner: WignerWindow,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha_sq: Vec<f64>,
    #[serde(default)]
    pub medium: Medium,
    #[serde(default)]
    pub detector: Detector,
}

fn default_units() -> u32 {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    pub alpha_sq: Vec<f64>,
    /// Cascade lengths tabulated, from 1 to this value.
    #[serde(default = "default_units")]
    pub max_units: u32,
    #[serde(default)]
    pub medium: Medium,
    #[serde(default)]
    pub detector: Detector,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    pub alpha_sq: f64,
    #[serde(default)]
    pub medium: Medium,
    #[serde(default)]
    pub detector: Detector,
    #[serde(default)]
    pub wigner: WignerWindow,
}

fn default_floor() -> f64 {
    0.01
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultimodeConfig {
    pub params: MultimodeParams,
    pub grid: Grid1D,
    pub t_end: f64,
    /// Intermediate snapshot times; `0` and `t_end` are always exported.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub settings: Settings,
    /// When present, `params.g0` is replaced by the fidelity-maximising
    /// coupling found by this scan.
    #[serde(default)]
    pub calibrate: Option<CalibrationScan>,
    /// Phase-map support, relative to the peak magnitude.
    #[serde(default = "default_floor")]
    pub phase_floor: f64,
}

pub fn check_alpha_sq(values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("alpha_sq list is empty".into()));
    }
    match values.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        Some(a) => Err(CliError::Config(format!(
            "alpha_sq must be finite and nonnegative, got {a}"
        ))),
        None => Ok(()),
    }
}
