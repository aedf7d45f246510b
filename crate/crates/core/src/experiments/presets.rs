//! Field presets used by experiment configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryMode, Grid, ScalarField, VecField};

/// A scalar field given in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldPreset {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · Πᵢ sin(frequencies[i] · xᵢ)`.
    SinProduct {
        frequencies: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `offset + Σᵢ coeffs[i] · xᵢ`.
    Linear {
        coeffs: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude · sin(frequency · x_axis)`, with `axis` counted from 1.
    SinAxis {
        axis: usize,
        frequency: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl FieldPreset {
    pub fn check(&self, n: usize) -> Result<()> {
        let ok = match self {
            FieldPreset::Zero | FieldPreset::Constant { .. } => true,
            FieldPreset::SinProduct { frequencies, .. } => frequencies.len() == n,
            FieldPreset::Linear { coeffs, .. } => coeffs.len() == n,
            FieldPreset::SinAxis { axis, .. } => (1..=n).contains(axis),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("field preset {self:?} does not fit dimension {n}")))
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            FieldPreset::Zero => 0.0,
            FieldPreset::Constant { value } => *value,
            FieldPreset::SinProduct {
                frequencies,
                amplitude,
            } => amplitude * x.iter().zip(frequencies).map(|(xi, f)| (f * xi).sin()).product::<f64>(),
            FieldPreset::Linear { coeffs, offset } => {
                offset + x.iter().zip(coeffs).map(|(xi, c)| c * xi).sum::<f64>()
            }
            FieldPreset::SinAxis {
                axis,
                frequency,
                amplitude,
            } => amplitude * (frequency * x[axis - 1]).sin(),
        }
    }

    /// Samples the preset on `grid` in free mode.
    pub fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        self.check(grid.dim())?;
        Ok(ScalarField::from_fn(grid, BoundaryMode::Free, |x| self.value(x)))
    }
}

/// Samples one preset per component into an n-component vector field.
pub fn sample_vector(presets: &[FieldPreset], grid: &Grid) -> Result<VecField> {
    if presets.len() != grid.dim() {
        return Err(Error::config(format!(
            "vector field needs {} component presets, got {}",
            grid.dim(),
            presets.len()
        )));
    }
    let parts = presets.iter().map(|p| p.sample(grid)).collect::<Result<Vec<_>>>()?;
    VecField::from_components(&parts)
}

/// How the boundary datum moves with `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumSequence {
    /// `φ_h = φ · (1 + 1/h)`.
    #[default]
    Scaled,
    /// `φ_h = φ`.
    Fixed,
}

impl DatumSequence {
    pub fn factor(self, h: u32) -> f64 {
        match self {
            DatumSequence::Scaled => 1.0 + 1.0 / h as f64,
            DatumSequence::Fixed => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub phi: FieldPreset,
    #[serde(default)]
    pub sequence: DatumSequence,
}

impl BoundarySpec {
    pub fn datum(&self, grid: &Grid, h: Option<u32>) -> Result<ScalarField> {
        let phi = self.phi.sample(grid)?;
        Ok(match h {
            Some(h) => phi.scaled(self.sequence.factor(h)),
            None => phi,
        })
    }
}

/// `G(u) = (μ/p)∫|u|^p − ∫gu`; for Dirichlet solves `μ` and `g` are the
/// zeroth-order coefficient and the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub mu: f64,
    pub g: FieldPreset,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_evaluate() {
        let x = [0.5, 2.0];
        assert_eq!(FieldPreset::Zero.value(&x), 0.0);
        assert_eq!(FieldPreset::Constant { value: 3.0 }.value(&x), 3.0);
        let s = FieldPreset::SinProduct {
            frequencies: vec![1.0, 2.0],
            amplitude: 2.0,
        };
        assert!((s.value(&x) - 2.0 * 0.5f64.sin() * 4.0f64.sin()).abs() < 1e-15);
        let l = FieldPreset::Linear {
            coeffs: vec![1.0, -1.0],
            offset: 0.5,
        };
        assert_eq!(l.value(&x), -1.0);
        let a = FieldPreset::SinAxis {
            axis: 2,
            frequency: 3.0,
            amplitude: 1.0,
        };
        assert_eq!(a.value(&x), 6.0f64.sin());
        assert!(a.check(1).is_err());
        assert!(l.check(3).is_err());
    }

    #[test]
    fn presets_parse() {
        let p: FieldPreset = serde_json::from_str(r#"{"kind":"sin_axis","axis":2,"frequency":4}"#).unwrap();
        assert_eq!(
            p,
            FieldPreset::SinAxis {
                axis: 2,
                frequency: 4.0,
                amplitude: 1.0
            }
        );
        assert!(serde_json::from_str::<FieldPreset>(r#"{"kind":"constant","value":1,"x":1}"#).is_err());
        let b: BoundarySpec = serde_json::from_str(r#"{"phi":{"kind":"constant","value":1}}"#).unwrap();
        assert_eq!(b.sequence, DatumSequence::Scaled);
        assert_eq!(b.sequence.factor(4), 1.25);
    }
}
