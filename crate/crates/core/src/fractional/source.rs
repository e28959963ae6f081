use super::grid::{GridFunction, TemporalGrid};
use crate::error::{FracError, Result};
use serde::{Deserialize, Serialize};

/// A point mass `r * delta(t - a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub a: f64,
    pub r: f64,
}

/// A finite sum of point masses with distinct, increasing locations in `(0, T)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaTrain {
    atoms: Vec<Atom>,
}

impl DeltaTrain {
    pub fn new(atoms: Vec<Atom>, horizon: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(FracError::Invalid("a delta train needs at least one atom".into()));
        }
        for (k, at) in atoms.iter().enumerate() {
            if !(at.a > 0.0 && at.a < horizon) {
                return Err(FracError::Invalid(format!(
                    "atom {k} location {} outside (0, {horizon})",
                    at.a
                )));
            }
            if at.r == 0.0 || !at.r.is_finite() {
                return Err(FracError::Invalid(format!("atom {k} has weight {}", at.r)));
            }
        }
        if atoms.windows(2).any(|w| w[1].a <= w[0].a) {
            return Err(FracError::Invalid("atom locations must be strictly increasing".into()));
        }
        Ok(DeltaTrain { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// The temporal factor `mu`: square-integrable samples, point masses, or both.
#[derive(Clone, Debug, PartialEq)]
pub enum TemporalSource {
    Regular(GridFunction),
    Atomic(DeltaTrain),
    Mixed(GridFunction, DeltaTrain),
}

#[derive(Serialize, Deserialize)]
struct SourceRepr {
    regular: Option<Vec<f64>>,
    #[serde(default)]
    atoms: Vec<Atom>,
}

impl TemporalSource {
    pub fn regular(&self) -> Option<&GridFunction> {
        match self {
            TemporalSource::Regular(g) | TemporalSource::Mixed(g, _) => Some(g),
            TemporalSource::Atomic(_) => None,
        }
    }

    pub fn train(&self) -> Option<&DeltaTrain> {
        match self {
            TemporalSource::Atomic(d) | TemporalSource::Mixed(_, d) => Some(d),
            TemporalSource::Regular(_) => None,
        }
    }

    /// `{"regular": [..] | null, "atoms": [{"a": .., "r": ..}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let repr = SourceRepr {
            regular: self.regular().map(|g| g.values.clone()),
            atoms: self.train().map(|d| d.atoms.clone()).unwrap_or_default(),
        };
        serde_json::to_value(repr).expect("plain data serializes")
    }

    pub fn from_json(value: &serde_json::Value, grid: TemporalGrid) -> Result<Self> {
        let repr: SourceRepr = serde_json::from_value(value.clone())?;
        let regular = repr.regular.map(|v| GridFunction::new(grid, v)).transpose()?;
        let train = if repr.atoms.is_empty() {
            None
        } else {
            Some(DeltaTrain::new(repr.atoms, grid.horizon)?)
        };
        match (regular, train) {
            (Some(g), None) => Ok(TemporalSource::Regular(g)),
            (None, Some(d)) => Ok(TemporalSource::Atomic(d)),
            (Some(g), Some(d)) => Ok(TemporalSource::Mixed(g, d)),
            (None, None) => Err(FracError::Invalid("source has neither regular part nor atoms".into())),
        }
    }
}

/// Orders of the equation (`alpha`), of the regularizing transform (`beta`)
/// and of an optional fractional power of the operator (`theta`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub theta: f64,
}

impl FracParams {
    /// Checks `alpha <= beta < 1` and `beta > 1/2`, as needed for singular sources.
    pub fn validate_singular(&self) -> Result<()> {
        self.validate_relaxed()?;
        if self.alpha > self.beta {
            return Err(FracError::ParamChain(format!(
                "alpha <= beta violated (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        if self.beta <= 0.5 {
            return Err(FracError::ParamChain(format!("beta > 1/2 violated (beta = {})", self.beta)));
        }
        Ok(())
    }

    /// Checks only `alpha, beta in (0, 1)` and `theta >= 0`.
    pub fn validate_relaxed(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FracError::ParamChain(format!("0 < alpha < 1 violated (alpha = {})", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(FracError::ParamChain(format!("0 < beta < 1 violated (beta = {})", self.beta)));
        }
        if !(self.theta >= 0.0) {
            return Err(FracError::ParamChain(format!("theta >= 0 violated (theta = {})", self.theta)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_invariants() {
        let ok = DeltaTrain::new(vec![Atom { a: 0.25, r: 2.0 }, Atom { a: 0.75, r: 3.0 }], 1.0);
        assert_eq!(ok.unwrap().len(), 2);
        assert!(DeltaTrain::new(vec![], 1.0).is_err());
        assert!(DeltaTrain::new(vec![Atom { a: 1.0, r: 1.0 }], 1.0).is_err());
        assert!(DeltaTrain::new(vec![Atom { a: 0.5, r: 0.0 }], 1.0).is_err());
        let unordered = vec![Atom { a: 0.5, r: 1.0 }, Atom { a: 0.5, r: 1.0 }];
        assert!(DeltaTrain::new(unordered, 1.0).is_err());
    }

    #[test]
    fn parameter_chain_names_the_inequality() {
        let p = FracParams { alpha: 0.8, beta: 0.6, theta: 0.0 };
        let msg = p.validate_singular().unwrap_err().to_string();
        assert!(msg.contains("alpha <= beta"), "{msg}");
        let p = FracParams { alpha: 0.3, beta: 0.4, theta: 0.0 };
        assert!(p.validate_singular().unwrap_err().to_string().contains("beta > 1/2"));
        assert!(p.validate_relaxed().is_ok());
        assert!(FracParams { alpha: 0.5, beta: 0.75, theta: 0.0 }.validate_singular().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let grid = TemporalGrid::new(1.0, 3).unwrap();
        let src = TemporalSource::Mixed(
            GridFunction::new(grid, vec![0.0, 1.0, 2.0]).unwrap(),
            DeltaTrain::new(vec![Atom { a: 0.5, r: -1.5 }], 1.0).unwrap(),
        );
        let back = TemporalSource::from_json(&src.to_json(), grid).unwrap();
        assert_eq!(back, src);
        let atoms_only = serde_json::json!({"regular": null, "atoms": [{"a": 0.5, "r": 1.0}]});
        assert!(matches!(TemporalSource::from_json(&atoms_only, grid).unwrap(), TemporalSource::Atomic(_)));
    }
}
