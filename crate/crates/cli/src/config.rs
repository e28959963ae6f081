//! Experiment configuration: JSON on disk, validated into an [`Experiment`] before any compute.

use fracsrc_core::fractional::{Atom, DeltaTrain};
use fracsrc_core::inverse::{Parameterization, RegularizationKind, RegularizationSpec, WeightSelection};
use fracsrc_core::spectral::{Coefficient, Expr, ObservationSpec, OperatorConfig, OperatorSpec};
use fracsrc_core::{FracError, FracParams, GridFunction, Result, TemporalGrid, TemporalSource};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operator: OperatorConfig,
    pub frac: FracParams,
    pub grid: GridConfig,
    /// Spatial factor of the source.
    pub f: Coefficient,
    pub source: SourceConfig,
    #[serde(default)]
    pub observation: Option<ObservationConfig>,
    #[serde(default)]
    pub regularization: Option<RegularizationSpec>,
    #[serde(default)]
    pub inverse: InverseConfig,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Number of time nodes, including `t = 0`.
    pub n_steps: usize,
}

/// Temporal factor: a regular part (expression in `t` or samples on the grid), atoms, or both.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default)]
    pub regular: Option<RegularPart>,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum RegularPart {
    Expr(String),
    Samples(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationConfig {
    /// Interior nodes with `lo <= x <= hi`.
    Interval { lo: f64, hi: f64 },
    /// The interior node nearest to `x`.
    Point { x: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseConfig {
    #[serde(default = "nodal")]
    pub parameterization: Parameterization,
    /// Noise standard deviation relative to the rms of the clean data.
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "four")]
    pub max_atoms: usize,
    /// Relative residual at which atom search stops.
    #[serde(default = "atom_tol")]
    pub atom_tol: f64,
    /// Leading time nodes left out of the reported mu error.
    #[serde(default = "two")]
    pub trim: usize,
}

fn nodal() -> Parameterization {
    Parameterization::Nodal
}
fn four() -> usize {
    4
}
fn two() -> usize {
    2
}
fn atom_tol() -> f64 {
    1e-3
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig {
            parameterization: nodal(),
            noise: 0.0,
            max_atoms: four(),
            atom_tol: atom_tol(),
            trim: two(),
        }
    }
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: OperatorSpec,
    pub grid: TemporalGrid,
    pub params: FracParams,
    pub f: Vec<f64>,
    pub source: TemporalSource,
    pub observation: Option<ObservationSpec>,
    pub regularization: RegularizationSpec,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks the parameter chain, then every other field.
    pub fn validate(self) -> Result<Experiment> {
        self.frac.validate_singular()?;
        let grid = TemporalGrid::new(self.grid.horizon, self.grid.n_steps)?;
        let spec = OperatorSpec::from_config(&self.operator)?;
        let f = sample_spatial(&self.f, &spec)?;
        let source = self.source.build(grid)?;
        let observation = match &self.observation {
            None => None,
            Some(ObservationConfig::Interval { lo, hi }) => Some(ObservationSpec::interval(&spec, *lo, *hi)?),
            Some(ObservationConfig::Point { x }) => Some(ObservationSpec::point_at(&spec, *x)?),
        };
        if let Some(o) = &observation {
            o.validate(spec.n_interior)?;
        }
        let regularization = self.regularization.unwrap_or(RegularizationSpec {
            kind: RegularizationKind::RidgeOnDerivative,
            weight: 1e-12,
            selection: WeightSelection::Fixed,
        });
        regularization.validate()?;
        if let Parameterization::Modal { n_modes } = self.inverse.parameterization {
            if n_modes == 0 || n_modes > spec.n_interior {
                return Err(FracError::Invalid(format!(
                    "modal parameterization needs 1..={} modes, got {n_modes}",
                    spec.n_interior
                )));
            }
        }
        if !(self.inverse.noise >= 0.0 && self.inverse.noise.is_finite()) {
            return Err(FracError::Invalid(format!("noise must be >= 0, got {}", self.inverse.noise)));
        }
        if !(self.inverse.atom_tol > 0.0) {
            return Err(FracError::Invalid(format!("atom_tol must be > 0, got {}", self.inverse.atom_tol)));
        }
        Ok(Experiment {
            params: self.frac,
            config: self,
            spec,
            grid,
            f,
            source,
            observation,
            regularization,
        })
    }
}

impl SourceConfig {
    /// The source sampled on `grid`. Sample arrays must match the configured grid;
    /// on a refinement of it they are interpolated linearly.
    pub fn build(&self, grid: TemporalGrid) -> Result<TemporalSource> {
        let regular = match &self.regular {
            None => None,
            Some(part) => Some(part.sample(grid)?),
        };
        let train = if self.atoms.is_empty() {
            None
        } else {
            Some(DeltaTrain::new(self.atoms.clone(), grid.horizon)?)
        };
        match (regular, train) {
            (Some(g), None) => Ok(TemporalSource::Regular(g)),
            (None, Some(d)) => Ok(TemporalSource::Atomic(d)),
            (Some(g), Some(d)) => Ok(TemporalSource::Mixed(g, d)),
            (None, None) => Err(FracError::Invalid("source has neither a regular part nor atoms".into())),
        }
    }
}

impl RegularPart {
    pub fn sample(&self, grid: TemporalGrid) -> Result<GridFunction> {
        match self {
            RegularPart::Expr(src) => {
                let e = Expr::parse(src, "t")?;
                Ok(GridFunction::from_fn(grid, |t| e.eval(t)))
            }
            RegularPart::Samples(v) => {
                if v.len() < 2 {
                    return Err(FracError::Invalid("a sampled source needs at least two values".into()));
                }
                if v.len() == grid.n_steps {
                    return GridFunction::new(grid, v.clone());
                }
                let coarse = (v.len() - 1) as f64;
                let ratio = (grid.n_steps - 1) as f64 / coarse;
                if ratio.fract() != 0.0 || ratio < 1.0 {
                    return Err(FracError::DimensionMismatch {
                        expected: grid.n_steps,
                        got: v.len(),
                    });
                }
                Ok(GridFunction::from_fn(grid, |t| {
                    let s = (t / grid.horizon * coarse).min(coarse);
                    let i = (s.floor() as usize).min(v.len() - 2);
                    let w = s - i as f64;
                    (1.0 - w) * v[i] + w * v[i + 1]
                }))
            }
        }
    }
}

/// Spatial factor at the interior nodes of `spec`. Samples of another length are taken
/// as interior values on their own uniform grid and interpolated, with zero boundary values.
pub fn sample_spatial(f: &Coefficient, spec: &OperatorSpec) -> Result<Vec<f64>> {
    let nodes = spec.nodes();
    match f {
        Coefficient::Constant(c) => Ok(vec![*c; nodes.len()]),
        Coefficient::Expr(src) => {
            let e = Expr::parse(src, "x")?;
            Ok(nodes.iter().map(|&x| e.eval(x)).collect())
        }
        Coefficient::Samples(v) if v.len() == nodes.len() => Ok(v.clone()),
        Coefficient::Samples(v) => {
            if v.is_empty() {
                return Err(FracError::Invalid("spatial factor has no samples".into()));
            }
            let mut padded = Vec::with_capacity(v.len() + 2);
            padded.push(0.0);
            padded.extend_from_slice(v);
            padded.push(0.0);
            let cells = (v.len() + 1) as f64;
            Ok(nodes
                .iter()
                .map(|&x| {
                    let s = x / spec.length * cells;
                    let i = (s.floor() as usize).min(padded.len() - 2);
                    let w = s - i as f64;
                    (1.0 - w) * padded[i] + w * padded[i + 1]
                })
                .collect())
        }
    }
}
