//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use heatmom::{Complex, HeatModel64, InitialData64, SolverSettings64, TruncationDegrees};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Linear,
    Distributed,
    Local,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub variant: Variant,
    pub epsilon: f64,
    pub m1: u32,
    pub m2: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Linear,
            epsilon: 0.0,
            m1: 1,
            m2: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub n: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegreeConfig {
    pub time: u32,
    pub algebraic: u32,
    pub harmonic: u32,
}

impl Default for DegreeConfig {
    fn default() -> Self {
        Self {
            time: 4,
            algebraic: 2,
            harmonic: 2,
        }
    }
}

/// Mirrors [`heatmom::SolverSettings`]; absent keys keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iters: Option<usize>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub penalty: Option<f64>,
    pub scaling: Option<bool>,
    pub adaptive_penalty: Option<bool>,
    pub acceleration_memory: Option<usize>,
    pub relaxation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GalerkinConfig {
    /// Defaults to `1e-3`.
    pub step: Option<f64>,
    /// Defaults to twice the harmonic degree.
    pub cutoff: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub initial: Vec<Mode>,
    pub degrees: DegreeConfig,
    pub solver: SolverConfig,
    pub galerkin: GalerkinConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            initial: [-1, 0, 1].map(|n| Mode { n, re: 1.0, im: 0.0 }).to_vec(),
            degrees: DegreeConfig::default(),
            solver: SolverConfig::default(),
            galerkin: GalerkinConfig::default(),
            output_dir: PathBuf::from("heatmom-out"),
        }
    }
}

/// Everything a subcommand needs, validated.
#[derive(Debug, Clone)]
pub struct Run {
    pub model: HeatModel64,
    pub degrees: TruncationDegrees,
    pub initial: InitialData64,
    pub settings: SolverSettings64,
    pub step: f64,
    pub cutoff: u32,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<Run, CliError> {
        let d = &self.degrees;
        let degrees = TruncationDegrees::new(d.time, d.algebraic, d.harmonic).map_err(CliError::config)?;
        let m = &self.model;
        if !m.epsilon.is_finite() {
            return Err(CliError::Config("model.epsilon must be finite".into()));
        }
        let model = match m.variant {
            Variant::Linear if m.epsilon != 0.0 => {
                return Err(CliError::Config("the linear model takes no epsilon".into()))
            }
            Variant::Linear => HeatModel64::Linear,
            Variant::Distributed => HeatModel64::DistributedQuadratic {
                epsilon: m.epsilon,
                m1: m.m1,
                m2: m.m2,
            },
            Variant::Local => HeatModel64::LocalQuadratic { epsilon: m.epsilon },
        };
        model.validate(&degrees).map_err(CliError::config)?;

        let mut coeffs = BTreeMap::new();
        for mode in &self.initial {
            if coeffs.insert(mode.n, Complex::new(mode.re, mode.im)).is_some() {
                return Err(CliError::Config(format!("initial mode {} given twice", mode.n)));
            }
        }
        let initial = InitialData64::new(coeffs).map_err(CliError::config)?;

        let s = &self.solver;
        let mut settings = SolverSettings64::default();
        settings.max_iters = s.max_iters.unwrap_or(settings.max_iters);
        settings.abs_tol = s.abs_tol.unwrap_or(settings.abs_tol);
        settings.rel_tol = s.rel_tol.unwrap_or(settings.rel_tol);
        settings.penalty = s.penalty.unwrap_or(settings.penalty);
        settings.scaling = s.scaling.unwrap_or(settings.scaling);
        settings.adaptive_penalty = s.adaptive_penalty.unwrap_or(settings.adaptive_penalty);
        settings.acceleration_memory = s.acceleration_memory.unwrap_or(settings.acceleration_memory);
        settings.relaxation = s.relaxation.unwrap_or(settings.relaxation);
        settings.validate().map_err(CliError::config)?;

        let step = self.galerkin.step.unwrap_or(1e-3);
        let cutoff = self.galerkin.cutoff.unwrap_or(2 * degrees.harmonic);
        if cutoff < degrees.harmonic {
            return Err(CliError::Config(format!(
                "galerkin.cutoff {cutoff} is below the harmonic degree {}",
                degrees.harmonic
            )));
        }
        Ok(Run {
            model,
            degrees,
            initial,
            settings,
            step,
            cutoff,
            output_dir: self.output_dir.clone(),
        })
    }
}
