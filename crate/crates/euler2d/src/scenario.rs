//! Closed-form initial-data families and the versioned run configuration.
//!
//! Scenarios cover the regimes the solver is instrumented for: constant
//! density (every direction-field diagnostic vanishes identically), layered
//! density with a shear (an exact steady state when unperturbed, so
//! conservation errors are pure discretization), a smooth density patch with
//! large gradients stirred by a vortex (stresses the continuation criteria),
//! and explicit mode lists with an optional seeded random component.
//!
//! Velocities are divergence-free by construction (cellular vortices and
//! perp-gradients of stream functions); ingest still runs the states through
//! the usual projection and positivity checks of [`FlowState::new`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{CriterionMode, DEFAULT_GROWTH_THRESHOLD};
use crate::ensemble;
use crate::error::{Error, Result};
use crate::field::{dealias_field, ScalarField, VectorField};
use crate::grid::TorusGrid;
use crate::ops;
use crate::solver::{FlowState, SolverConfig};

/// Schema version accepted by [`RunConfig::validate`].
pub const CONFIG_VERSION: u32 = 1;

/// One Fourier mode of a closed-form field:
/// `amp_cos·cos(k₁x₁ + k₂x₂) + amp_sin·sin(k₁x₁ + k₂x₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k1: i32,
    pub k2: i32,
    #[serde(default)]
    pub amp_cos: f64,
    #[serde(default)]
    pub amp_sin: f64,
}

impl Mode {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let phase = self.k1 as f64 * x + self.k2 as f64 * y;
        self.amp_cos * phase.cos() + self.amp_sin * phase.sin()
    }

    fn is_finite(&self) -> bool {
        self.amp_cos.is_finite() && self.amp_sin.is_finite()
    }
}

fn default_density() -> f64 {
    1.0
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_wavenumber() -> u32 {
    1
}
fn default_contrast() -> f64 {
    2.0
}
fn default_sharpness() -> f64 {
    4.0
}
fn default_random_amplitude() -> f64 {
    0.1
}

/// Initial-data family, selected by `name` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// Constant density `ρ ≡ density` with the cellular vortex
    /// `amplitude·(−sin kx₁ cos kx₂, cos kx₁ sin kx₂)`.
    HomogeneousVortex {
        #[serde(default = "default_density")]
        density: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        wavenumber: u32,
    },
    /// Layered density `ρ = 1 + a sin(k x₂)` with `a = (C−1)/(C+1)` chosen so
    /// the realized contrast `max ρ / min ρ` equals `contrast`, sheared by
    /// `u = (amplitude·sin(k x₂), 0)` plus `perturbation` times the unit
    /// cellular vortex.  Unperturbed, this is an exact steady state.
    StratifiedShear {
        #[serde(default = "default_contrast")]
        contrast: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_wavenumber")]
        wavenumber: u32,
        #[serde(default)]
        perturbation: f64,
    },
    /// Smooth periodic density bump centered at `(π, π)`,
    /// `ρ = 1 + a·(2b − 1)` with `b = exp(sharpness·(cos(x₁−π) + cos(x₂−π) − 2))`,
    /// stirred by the unit-wavenumber cellular vortex.  Larger `sharpness`
    /// sharpens the density gradients at fixed contrast.
    DensityPatchVortex {
        #[serde(default = "default_contrast")]
        contrast: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_sharpness")]
        sharpness: f64,
    },
    /// Explicit mode lists: density modes on top of the unit background and
    /// stream-function modes (the velocity is their perp-gradient, hence
    /// divergence-free).  With `random_band` set, a seeded band-limited
    /// divergence-free velocity of size `random_amplitude` is added.
    Custom {
        #[serde(default)]
        rho_modes: Vec<Mode>,
        #[serde(default)]
        psi_modes: Vec<Mode>,
        #[serde(default)]
        random_band: Option<f64>,
        #[serde(default = "default_random_amplitude")]
        random_amplitude: f64,
    },
}

/// The cellular vortex `amplitude·(−sin kx₁ cos kx₂, cos kx₁ sin kx₂)`;
/// divergence-free and, under constant density, an exact steady state.
pub fn cellular_vortex(grid: TorusGrid, amplitude: f64, wavenumber: u32) -> VectorField {
    let k = wavenumber as f64;
    VectorField::from_fns(
        grid,
        move |x, y| -amplitude * (k * x).sin() * (k * y).cos(),
        move |x, y| amplitude * (k * x).cos() * (k * y).sin(),
    )
}

fn amplitude_from_contrast(contrast: f64) -> f64 {
    (contrast - 1.0) / (contrast + 1.0)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{what} must be finite, got {v}")))
            }
        };
        match self {
            Scenario::HomogeneousVortex {
                density,
                amplitude,
                wavenumber,
            } => {
                finite(*density, "density")?;
                finite(*amplitude, "amplitude")?;
                if *density <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "density must be positive, got {density}"
                    )));
                }
                if *wavenumber == 0 {
                    return Err(Error::InvalidInput("wavenumber must be ≥ 1".into()));
                }
                Ok(())
            }
            Scenario::StratifiedShear {
                contrast,
                amplitude,
                wavenumber,
                perturbation,
            } => {
                finite(*contrast, "contrast")?;
                finite(*amplitude, "amplitude")?;
                finite(*perturbation, "perturbation")?;
                if *contrast < 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "density contrast must be ≥ 1, got {contrast}"
                    )));
                }
                if *wavenumber == 0 {
                    return Err(Error::InvalidInput("wavenumber must be ≥ 1".into()));
                }
                if *perturbation < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "perturbation must be ≥ 0, got {perturbation}"
                    )));
                }
                Ok(())
            }
            Scenario::DensityPatchVortex {
                contrast,
                amplitude,
                sharpness,
            } => {
                finite(*contrast, "contrast")?;
                finite(*amplitude, "amplitude")?;
                finite(*sharpness, "sharpness")?;
                if *contrast < 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "density contrast must be ≥ 1, got {contrast}"
                    )));
                }
                if !(*sharpness > 0.0 && *sharpness <= 8.0) {
                    return Err(Error::InvalidInput(format!(
                        "sharpness must lie in (0, 8], got {sharpness}"
                    )));
                }
                Ok(())
            }
            Scenario::Custom {
                rho_modes,
                psi_modes,
                random_band,
                random_amplitude,
            } => {
                for m in rho_modes.iter().chain(psi_modes) {
                    if !m.is_finite() {
                        return Err(Error::InvalidInput(
                            "mode amplitudes must be finite".into(),
                        ));
                    }
                }
                if let Some(band) = random_band {
                    if !(band.is_finite() && *band >= 1.0) {
                        return Err(Error::InvalidInput(format!(
                            "random_band must be ≥ 1, got {band}"
                        )));
                    }
                    finite(*random_amplitude, "random_amplitude")?;
                }
                Ok(())
            }
        }
    }

    /// Build the initial state on `grid`.  `seed` feeds the random component
    /// of [`Scenario::Custom`] and is ignored by the closed-form families.
    pub fn initial_state(&self, grid: TorusGrid, seed: u64) -> Result<FlowState> {
        self.validate()?;
        match self {
            Scenario::HomogeneousVortex {
                density,
                amplitude,
                wavenumber,
            } => {
                // Constant density must stay bitwise constant so that every
                // direction-field diagnostic vanishes exactly; build it
                // directly rather than through any transform.
                let rho = ScalarField::constant(grid, *density);
                let u = cellular_vortex(grid, *amplitude, *wavenumber);
                FlowState::new(rho, u)
            }
            Scenario::StratifiedShear {
                contrast,
                amplitude,
                wavenumber,
                perturbation,
            } => {
                let a = amplitude_from_contrast(*contrast);
                let k = *wavenumber as f64;
                let rho = ScalarField::from_fn(grid, move |_, y| 1.0 + a * (k * y).sin());
                let amp = *amplitude;
                let mut u =
                    VectorField::from_fns(grid, move |_, y| amp * (k * y).sin(), |_, _| 0.0);
                if *perturbation > 0.0 {
                    u.add_scaled(&cellular_vortex(grid, 1.0, 1), *perturbation);
                }
                FlowState::new(rho, u)
            }
            Scenario::DensityPatchVortex {
                contrast,
                amplitude,
                sharpness,
            } => {
                let a = amplitude_from_contrast(*contrast);
                let s = *sharpness;
                let raw = ScalarField::from_fn(grid, move |x, y| {
                    let b = (s * ((x - std::f64::consts::PI).cos()
                        + (y - std::f64::consts::PI).cos()
                        - 2.0))
                        .exp();
                    1.0 + a * (2.0 * b - 1.0)
                });
                // The bump is analytic but not band-limited; cut its far tail
                // so products in the first steps see clean spectra.
                let rho = dealias_field(&raw);
                let u = cellular_vortex(grid, *amplitude, 1);
                FlowState::new(rho, u)
            }
            Scenario::Custom {
                rho_modes,
                psi_modes,
                random_band,
                random_amplitude,
            } => {
                let cut = grid.dealias_cut() as i32;
                for m in rho_modes.iter().chain(psi_modes) {
                    if m.k1.abs() > cut || m.k2.abs() > cut {
                        return Err(Error::InvalidInput(format!(
                            "mode ({}, {}) exceeds the dealiased band |k| ≤ {cut} at n = {}",
                            m.k1,
                            m.k2,
                            grid.n()
                        )));
                    }
                }
                let rm = rho_modes.clone();
                let rho = ScalarField::from_fn(grid, move |x, y| {
                    1.0 + rm.iter().map(|m| m.eval(x, y)).sum::<f64>()
                });
                let pm = psi_modes.clone();
                let psi = ScalarField::from_fn(grid, move |x, y| {
                    pm.iter().map(|m| m.eval(x, y)).sum::<f64>()
                });
                let mut u = ops::perp_gradient(&psi);
                if let Some(band) = random_band {
                    u.add_scaled(
                        &ensemble::random_div_free(grid, seed, *band, 1.0),
                        *random_amplitude,
                    );
                }
                FlowState::new(rho, u)
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scenario::HomogeneousVortex { .. } => "homogeneous_vortex",
            Scenario::StratifiedShear { .. } => "stratified_shear",
            Scenario::DensityPatchVortex { .. } => "density_patch_vortex",
            Scenario::Custom { .. } => "custom",
        }
    }
}

fn default_criterion() -> CriterionMode {
    CriterionMode::Subcritical
}
fn default_growth_threshold() -> f64 {
    DEFAULT_GROWTH_THRESHOLD
}

/// Complete, versioned description of one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Schema version; must equal [`CONFIG_VERSION`].
    pub version: u32,
    pub scenario: Scenario,
    /// Grid points per side (power of two ≥ 16).
    pub grid: usize,
    /// Final time.
    pub horizon: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_criterion")]
    pub criterion: CriterionMode,
    /// Log-slope above which the criterion quantity is reported as growing.
    #[serde(default = "default_growth_threshold")]
    pub growth_threshold: f64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; overridable on the command line.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported config version {} (this build reads version {CONFIG_VERSION})",
                self.version
            )));
        }
        TorusGrid::new(self.grid)?;
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::InvalidInput(format!(
                "horizon must be finite and non-negative, got {}",
                self.horizon
            )));
        }
        if !self.growth_threshold.is_finite() {
            return Err(Error::InvalidInput(format!(
                "growth_threshold must be finite, got {}",
                self.growth_threshold
            )));
        }
        self.solver.validate()?;
        self.scenario.validate()
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        RunConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run configs serialize")
    }

    /// Grid object for this config.
    pub fn torus(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid)
    }

    /// Initial state described by the scenario block.
    pub fn initial_state(&self) -> Result<FlowState> {
        self.scenario.initial_state(self.torus()?, self.seed)
    }
}
