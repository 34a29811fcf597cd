//! Point evaluation shared by all solvers.

use serde::Serialize;

use crate::error::Result;

/// Point values of a solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub c: f64,
    pub u: f64,
    /// `v = u / ub(t)`.
    pub v: f64,
}

/// Anything that can be evaluated at a point `(t, x)` of the domain.
pub trait Sampler {
    fn sample(&self, t: f64, x: f64) -> Result<Sample>;
}

impl<S: Sampler + ?Sized> Sampler for &S {
    fn sample(&self, t: f64, x: f64) -> Result<Sample> {
        (**self).sample(t, x)
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn sample(&self, t: f64, x: f64) -> Result<Sample> {
        (**self).sample(t, x)
    }
}
