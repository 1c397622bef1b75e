//! Run configuration: JSON, versioned by the `schema` key, unknown keys
//! rejected. Errors carry the dotted path of the offending field.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use qspec_core::model::ModelSystem;
use qspec_core::operator::{pauli, Operator, QuantumState};
use qspec_core::{CMatrix, C64};

pub const SCHEMA: &str = "qspec-config/1";

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentConfig>,
    pub spectroscopy: SpectroscopyConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    TwoLevel {
        omega0: f64,
        /// `alpha` in `m = alpha sigma_y`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        magnetic: Option<f64>,
        /// Coefficients of `(sigma_x, sigma_y, sigma_z)` for the perpendicular dipole.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_perp: Option<[f64; 3]>,
    },
    Ladder {
        energies: Vec<f64>,
        dipoles: Vec<f64>,
    },
    DisplacedOscillator {
        omega_e: f64,
        omega_v: f64,
        d: f64,
        n_fock: usize,
    },
    ZeemanTriplet {
        omega0: f64,
        alpha: f64,
    },
    Matrix {
        h0: MatrixConfig,
        mu: MatrixConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<MatrixConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_perp: Option<MatrixConfig>,
    },
}

/// Row-major real part and optional imaginary part.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixConfig {
    fn operator(&self, what: &str) -> anyhow::Result<Operator> {
        let n = self.re.len();
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !square(&self.re) || !self.im.as_ref().is_none_or(square) {
            bail!("model.{what}: matrix must be square and non-empty");
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        });
        Operator::new(m).with_context(|| format!("model.{what}"))
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// Pure dephasing rate of the excited manifold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<f64>,
    /// Thermal initial state; ground state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    /// Response grid only.
    Response,
    Absorption,
    Twod,
    CircularDichroism,
    MagneticCircularDichroism,
    LinearDichroism,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    /// Diagrams in the text format, summed with their signs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagrams: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<Measurement>,
    /// One entry per delay; defaults follow the catalog layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<Vec<DelayConfig>>,
    /// `beta` of the static Zeeman term for magnetic circular dichroism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeeman_field: Option<f64>,
    /// Pulses to convolve with a first-order response before transforming.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<PulseConfig>>,
}

/// A fixed delay, or a scanned one (step and count default to the spectrum
/// time axis).
#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub center: f64,
    /// Gaussian standard deviation; a delta pulse when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    #[default]
    Exact,
    Shots,
    Pauli,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StencilConfig {
    #[default]
    Second,
    Fourth,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub stencil: StencilConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduce: Option<bool>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum WindowConfig {
    #[default]
    Exponential,
    None,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub omega_max: f64,
    pub delta_omega: f64,
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> String {
    "qspec-out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// Parses and checks the schema tag. Field errors are reported as
/// `path: message`.
pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("config error at `{}`: {}", path, e.into_inner())
    })?;
    if cfg.schema != SCHEMA {
        bail!("config error at `schema`: expected \"{SCHEMA}\", got \"{}\"", cfg.schema);
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("in {}", path.display()))
}

impl ModelConfig {
    pub fn build(&self) -> anyhow::Result<ModelSystem> {
        let model = match self {
            ModelConfig::TwoLevel { omega0, magnetic, mu_perp } => {
                let mut m = ModelSystem::two_level(*omega0)?;
                if let Some(alpha) = magnetic {
                    m = m.with_magnetic(pauli::y().scale(*alpha))?;
                }
                if let Some([x, y, z]) = mu_perp {
                    let op = &(&pauli::x().scale(*x) + &pauli::y().scale(*y)) + &pauli::z().scale(*z);
                    m = m.with_perpendicular_dipole(op)?;
                }
                m
            }
            ModelConfig::Ladder { energies, dipoles } => ModelSystem::ladder(energies, dipoles)?,
            ModelConfig::DisplacedOscillator { omega_e, omega_v, d, n_fock } => {
                ModelSystem::displaced_oscillator(*omega_e, *omega_v, *d, *n_fock)?
            }
            ModelConfig::ZeemanTriplet { omega0, alpha } => ModelSystem::zeeman_triplet(*omega0, *alpha)?,
            ModelConfig::Matrix { h0, mu, m, mu_perp } => {
                let mut model = ModelSystem::new(h0.operator("h0")?, mu.operator("mu")?)?;
                if let Some(m) = m {
                    model = model.with_magnetic(m.operator("m")?)?;
                }
                if let Some(p) = mu_perp {
                    model = model.with_perpendicular_dipole(p.operator("mu_perp")?)?;
                }
                model
            }
        };
        Ok(model)
    }
}

impl RunConfig {
    /// Model with the environment applied, and the initial state.
    pub fn build_model(&self) -> anyhow::Result<(ModelSystem, QuantumState)> {
        let mut model = self.model.build().context("building model")?;
        let env = self.environment.clone().unwrap_or_default();
        if let Some(g) = env.dephasing {
            model = model.with_dephasing(g).context("environment.dephasing")?;
        }
        let rho0 = match env.temperature {
            Some(t) => model.thermal_state(t).context("environment.temperature")?,
            None => model.ground_state(),
        };
        Ok((model, rho0))
    }
}
