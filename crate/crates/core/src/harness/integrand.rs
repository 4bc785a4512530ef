use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{LiborPricer, MbsModel};

/// A function on `[0, 1)^s` whose mean the harness estimates.
///
/// A NaN value marks an invalid path: it is left out of the estimate and
/// counted.
pub trait Integrand: Sync {
    fn dimension(&self) -> usize;

    fn evaluate(&self, point: &[f64]) -> f64;

    fn name(&self) -> &str;
}

impl Integrand for LiborPricer {
    fn dimension(&self) -> usize {
        LiborPricer::dimension(self)
    }

    fn evaluate(&self, point: &[f64]) -> f64 {
        self.payoff_from_uniforms(point)
    }

    fn name(&self) -> &str {
        "libor"
    }
}

impl Integrand for MbsModel {
    fn dimension(&self) -> usize {
        MbsModel::dimension(self)
    }

    fn evaluate(&self, point: &[f64]) -> f64 {
        self.present_value_from_uniforms(point)
    }

    fn name(&self) -> &str {
        "mbs"
    }
}

/// `f = 1`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantOne {
    pub dimension: usize,
}

impl Integrand for ConstantOne {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, _: &[f64]) -> f64 {
        1.0
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// `f(x) = x_1`, with mean 1/2.
#[derive(Debug, Clone, Copy)]
pub struct FirstCoordinate {
    pub dimension: usize,
}

impl Integrand for FirstCoordinate {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, point: &[f64]) -> f64 {
        point[0]
    }

    fn name(&self) -> &str {
        "first-coordinate"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Libor,
    Mbs,
    /// Built-in test model `f = 1`.
    Constant,
    /// Built-in test model `f(x) = x_1`.
    FirstCoordinate,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Libor => "libor",
            ModelKind::Mbs => "mbs",
            ModelKind::Constant => "constant",
            ModelKind::FirstCoordinate => "first-coordinate",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ModelKind::Libor, ModelKind::Mbs, ModelKind::Constant, ModelKind::FirstCoordinate]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::config(format!("unknown model `{s}`")))
    }
}
