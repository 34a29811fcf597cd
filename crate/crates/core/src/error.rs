use thiserror::Error;

use crate::thermo::ModelReport;

/// Errors raised by the solvers and the model layer.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The isotherm model failed validation and cannot be handed to a solver.
    #[error("isotherm model rejected: {}", .0.summary())]
    ModelRejected(Box<ModelReport>),

    /// Two quantities that must agree by construction do not.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A shock logarithm would be taken of a non-positive factor.
    #[error("shock factor alpha + h is not positive ({value:e}) for c- = {c_minus}, c+ = {c_plus}")]
    NonPositiveShockFactor { c_minus: f64, c_plus: f64, value: f64 },

    /// An explicit x-step violates the CFL restriction.
    #[error("CFL violation: dx = {dx:e} exceeds the admissible {suggested_dx:e}")]
    CflViolation { dx: f64, suggested_dx: f64 },

    /// The front tracker exceeded its event budget.
    #[error("event budget of {0} exhausted before reaching the end of the domain")]
    EventBudget(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_concentration(c: f64) -> Result<()> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(domain(format!("concentration {c} outside [0, 1]")))
    }
}
