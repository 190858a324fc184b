//! JSON scenario configuration.
//!
//! Units: every rate (`omega_a`, `omega_b`, `detuning`) is expressed in units
//! of the coupling `lambda`, and the time axis of all outputs is the slow
//! time `tau = lambda t`. Every field has a default, so `{}` is a valid
//! configuration.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use modeswap::analytic::{BetaChoice, ModeCoupling, Scenario};
use modeswap::fock::CatSpec;
use modeswap::linspace;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Mode B's initial coherent label: explicit, or the balanced intensity that
/// keeps both mean energies constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    Balanced,
    Explicit { beta_mag: f64, beta_phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        // 512 points per half-period pi resolves the entropy plateaus
        Self {
            tau_min: 0.0,
            tau_max: 2.0 * PI,
            points: 1025,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub alpha_mag: f64,
    pub alpha_phase: f64,
    #[serde(rename = "Phi")]
    pub big_phi: f64,
    pub beta_mode: BetaMode,
    /// Coupling rate; sets the unit for every other rate in the file.
    pub lambda: f64,
    pub phi_pump: f64,
    /// Detuning in units of `lambda`; must be 0 for closed-form commands.
    pub detuning: f64,
    /// Fast mode frequencies in units of `lambda` (only the RWC validity
    /// check and the pump frequency depend on them).
    pub omega_a: f64,
    pub omega_b: f64,
    pub grid: GridConfig,
    pub epsilon_trunc: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            alpha_mag: 1.0,
            alpha_phase: 0.0,
            big_phi: 0.0,
            beta_mode: BetaMode::Balanced,
            lambda: 1.0,
            phi_pump: PI / 2.0,
            detuning: 0.0,
            omega_a: 100.0,
            omega_b: 60.0,
            grid: GridConfig::default(),
            epsilon_trunc: 1e-12,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|e| {
            ConfigError(format!(
                "{}: line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid.points < 2 {
            return Err(ConfigError(format!(
                "field grid.points: need at least 2, got {}",
                self.grid.points
            )));
        }
        let finite_grid = self.grid.tau_min.is_finite() && self.grid.tau_max.is_finite();
        if !finite_grid || self.grid.tau_max <= self.grid.tau_min {
            return Err(ConfigError(format!(
                "field grid: tau_max ({}) must exceed tau_min ({})",
                self.grid.tau_max, self.grid.tau_min
            )));
        }
        if !self.epsilon_trunc.is_finite() || self.epsilon_trunc <= 0.0 || self.epsilon_trunc > 1e-3
        {
            return Err(ConfigError(format!(
                "field epsilon_trunc: must lie in (0, 1e-3], got {}",
                self.epsilon_trunc
            )));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(ConfigError(format!(
                "field lambda: must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn require_resonant(&self) -> Result<(), ConfigError> {
        if self.detuning != 0.0 {
            return Err(ConfigError(format!(
                "field detuning: closed-form commands require 0, got {}",
                self.detuning
            )));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let alpha = Complex64::from_polar(self.alpha_mag, self.alpha_phase);
        let cat = CatSpec::new(alpha, self.big_phi)
            .map_err(|e| ConfigError(format!("fields alpha_mag/Phi: {e}")))?;
        let beta = match self.beta_mode {
            BetaMode::Balanced => BetaChoice::Balanced,
            BetaMode::Explicit {
                beta_mag,
                beta_phase,
            } => BetaChoice::Explicit(Complex64::from_polar(beta_mag, beta_phase)),
        };
        // rates in the file are in units of lambda
        let nu = (self.omega_a - self.omega_b - self.detuning) * self.lambda;
        let coupling = ModeCoupling::new(
            self.omega_a * self.lambda,
            self.omega_b * self.lambda,
            nu,
            self.lambda,
            self.phi_pump,
        )
        .map_err(|e| ConfigError(format!("field lambda: {e}")))?;
        Scenario::new(cat, beta, coupling).map_err(|e| ConfigError(format!("scenario: {e}")))
    }

    pub fn taus(&self) -> Vec<f64> {
        linspace(self.grid.tau_min, self.grid.tau_max, self.grid.points)
    }

    /// A copy with the cat phase replaced (used by the figure curves).
    pub fn with_big_phi(&self, big_phi: f64) -> Self {
        Self { big_phi, ..*self }
    }
}
