//! Solvers for isothermal two-species pressure-swing adsorption.
//!
//! The model is the 2×2 system in which `x` (position along the column) is the
//! evolution variable and `t` plays the role of space:
//!
//! ```text
//! ∂t (c + q1(c)) + ∂x (u c) = 0
//! ∂t (q1(c) + q2(c)) + ∂x u   = 0
//! ```
//!
//! with concentration `c` of species 1, total gas velocity `u > 0`, initial data
//! `c0(x)` on `t = 0` and boundary data `(cb(t), ub(t))` on `x = 0`. One field is
//! linearly degenerate (contacts travel at slope `dt/dx = 0`); the other is
//! genuinely nonlinear with slope `λ = H(c)/u`.
//!
//! * [`thermo`] — isotherms and derived scalar functions.
//! * [`riemann`] — the exact Riemann solver.
//! * [`fronttrack`] — front tracking with an interaction ledger.
//! * [`smooth`] — characteristics for Lipschitz data.
//! * [`godunov`] — a finite-volume cross-check.
//! * [`diagnostics`] — variation estimates and the oscillation experiment.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod fronttrack;
pub mod godunov;
pub mod riemann;
pub mod smooth;
pub mod thermo;

pub use data::{FtaData, PiecewiseConstant, Profile, Signal};
pub use error::{Error, Result};
pub use field::{Sample, Sampler};
pub use fronttrack::{
    init_fronts, track, Fault, Front, FrontState, IncomingCase, InteractionRecord, OutgoingCase, TrackerConfig,
    Trajectory,
};
pub use godunov::{godunov_march, l1_slice_distance, Godunov, GridSolution, Slice};
pub use riemann::{
    discretize_rarefaction, shock_speed, solve_riemann, wave_curve, LambdaWave, RiemannFan, State, Wave,
    WaveKind,
};
pub use smooth::{
    entropy_equalities_check, reconstruct_velocity, solve_characteristics, Breakdown, CharacteristicField, Region,
    SmoothGrid, SmoothProblem, SmoothSolution, VelocityField,
};
pub use thermo::{
    eval_thermo, lambda_speed, validate_model, ConcaveIsotherm, EntropyPair, IsothermModel, Model,
    ModelReport, Thermo, ThermoPoint,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/isotherms.md")]
    mod isotherms {}
    #[doc = include_str!("../../../book/src/riemann.md")]
    mod riemann {}
    #[doc = include_str!("../../../book/src/front-tracking.md")]
    mod front_tracking {}
    #[doc = include_str!("../../../book/src/characteristics.md")]
    mod characteristics {}
    #[doc = include_str!("../../../book/src/godunov.md")]
    mod godunov {}
    #[doc = include_str!("../../../book/src/variation.md")]
    mod variation {}
    #[doc = include_str!("../../../book/src/oscillations.md")]
    mod oscillations {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
