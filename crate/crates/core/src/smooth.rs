//! Method of characteristics for Lipschitz concentration data.
//!
//! While `c` stays smooth the system reduces to a scalar law along `x`,
//!
//! ```text
//! ∂t c + a(t) ∂x F(c) = 0,    a(t) = ub(t) G(cb(t)),
//! ```
//!
//! whose characteristics are straight in the clock `B(t) = ∫_0^t a`. The
//! characteristic through `(0, 0)`, `Γ: x = B(t) F'(c0(0))`, splits the domain:
//! below it (larger `x`) feet lie on `t = 0`,
//!
//! ```text
//! x = ξ + B(t) F'(c0(ξ)),
//! ```
//!
//! above it (smaller `x`) they lie on `x = 0`,
//!
//! ```text
//! x = (B(t) - B(τ)) F'(cb(τ)).
//! ```
//!
//! The velocity follows from the Riemann invariant `u G(c)`, which does not
//! depend on `x`: `u = ub(t) G(cb(t)) / G(c)`.
//!
//! Because `F'' < 0`, increasing initial data and decreasing boundary data make
//! characteristics cross. The solver detects the first crossing inside the
//! domain and refuses to go past it.

use serde::Serialize;

use crate::data::Signal;
use crate::error::{domain, Result};
use crate::field::{Sample, Sampler};
use crate::thermo::{EntropyPair, Model};

/// Data of a smooth problem.
#[derive(Clone)]
pub struct SmoothProblem {
    pub c0: Signal,
    pub cb: Signal,
    pub ub: Signal,
    pub t_end: f64,
    pub x_end: f64,
}

/// Evaluation grid, plus the resolutions used internally.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothGrid {
    pub ts: Vec<f64>,
    pub xs: Vec<f64>,
    /// Trapezoid steps for the clock `B`.
    pub clock_steps: usize,
    /// Samples per family in the crossing test.
    pub crossing_samples: usize,
}

impl SmoothGrid {
    /// `nt × nx` nodes including the edges of `[0, T] × [0, X]`.
    pub fn uniform(t_end: f64, x_end: f64, nt: usize, nx: usize) -> SmoothGrid {
        let axis = |end: f64, n: usize| (0..n).map(|k| end * k as f64 / (n.max(2) - 1) as f64).collect();
        SmoothGrid::with_axes(axis(t_end, nt), axis(x_end, nx))
    }

    /// Cell centres of an `nt × nx` partition of `[0, T] × [0, X]`.
    pub fn midpoints(t_end: f64, x_end: f64, nt: usize, nx: usize) -> SmoothGrid {
        let axis = |end: f64, n: usize| (0..n).map(|k| end * (k as f64 + 0.5) / n as f64).collect();
        SmoothGrid::with_axes(axis(t_end, nt), axis(x_end, nx))
    }

    pub fn with_axes(ts: Vec<f64>, xs: Vec<f64>) -> SmoothGrid {
        SmoothGrid { ts, xs, clock_steps: 16_384, crossing_samples: 4_000 }
    }
}

/// Which datum a characteristic foot lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Foot on `t = 0` (at or below `Γ`).
    Initial,
    /// Foot on `x = 0`.
    Boundary,
}

/// First crossing of characteristics found inside the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Breakdown {
    pub t: f64,
    pub x: f64,
}

/// `B(t)` by the cumulative trapezoid rule on a uniform grid.
#[derive(Clone, Debug)]
struct Clock {
    step: f64,
    values: Vec<f64>,
}

impl Clock {
    fn new(model: &Model, p: &SmoothProblem, n: usize) -> Clock {
        let n = n.max(1);
        let step = p.t_end / n as f64;
        let a = |t: f64| (p.ub)(t) * model.weight((p.cb)(t));
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut prev = a(0.0);
        for k in 1..=n {
            let next = a(k as f64 * step);
            values.push(values[k - 1] + 0.5 * step * (prev + next));
            prev = next;
        }
        Clock { step, values }
    }

    fn at(&self, t: f64) -> f64 {
        let n = self.values.len() - 1;
        let s = (t / self.step).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let w = s - k as f64;
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }
}

/// Concentration field defined by the characteristics, valid up to any breakdown.
#[derive(Clone)]
pub struct CharacteristicField {
    model: Model,
    problem: SmoothProblem,
    clock: Clock,
    crossing_samples: usize,
    breakdown: Option<Breakdown>,
}

impl CharacteristicField {
    /// Builds the clock and locates the first crossing, if any.
    pub fn new(model: &Model, problem: SmoothProblem, clock_steps: usize, crossing_samples: usize) -> Result<Self> {
        let (c00, cb0) = ((problem.c0)(0.0), (problem.cb)(0.0));
        if (c00 - cb0).abs() > 1e-12 {
            return Err(domain(format!(
                "smooth data must be compatible at the corner: c0(0) = {c00}, cb(0) = {cb0}"
            )));
        }
        if !(problem.t_end > 0.0 && problem.x_end > 0.0) {
            return Err(domain("the domain must have positive extent"));
        }
        let clock = Clock::new(model, &problem, clock_steps);
        let mut field = CharacteristicField {
            model: model.clone(),
            problem,
            clock,
            crossing_samples: crossing_samples.max(16),
            breakdown: None,
        };
        field.breakdown = field.find_breakdown();
        Ok(field)
    }

    pub fn breakdown(&self) -> Option<Breakdown> {
        self.breakdown
    }

    fn slope(&self, c: f64) -> f64 {
        self.model.scalar_flux_slope(c)
    }

    /// Abscissa of `Γ` at time `t`.
    pub fn corner_line(&self, t: f64) -> f64 {
        self.clock.at(t) * self.slope((self.problem.c0)(0.0))
    }

    /// Position of a crossing of neighbouring characteristics at time `t`, if any.
    fn crossing_at(&self, t: f64) -> Option<f64> {
        let b = self.clock.at(t);
        let (x_end, n) = (self.problem.x_end, self.crossing_samples);
        // Initial family: ξ ↦ ξ + B F'(c0(ξ)) must increase.
        let foot = |xi: f64| xi + b * self.slope((self.problem.c0)(xi));
        let mut prev = foot(0.0);
        for m in 1..=n {
            let next = foot(x_end * m as f64 / n as f64);
            if prev > x_end {
                break;
            }
            if next <= prev {
                return Some(prev);
            }
            prev = next;
        }
        // Boundary family: τ ↦ (B(t) - B(τ)) F'(cb(τ)) must decrease.
        let foot = |tau: f64| (b - self.clock.at(tau)) * self.slope((self.problem.cb)(tau));
        let mut prev = foot(0.0);
        for k in 1..=n {
            let next = foot(t * k as f64 / n as f64);
            if next >= prev && next <= x_end {
                return Some(next);
            }
            prev = next;
        }
        None
    }

    fn find_breakdown(&self) -> Option<Breakdown> {
        let t_end = self.problem.t_end;
        let rows = 256;
        let mut lo = 0.0;
        let mut hi = None;
        for k in 1..=rows {
            let t = t_end * k as f64 / rows as f64;
            if self.crossing_at(t).is_some() {
                hi = Some(t);
                break;
            }
            lo = t;
        }
        let mut hi = hi?;
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            if self.crossing_at(mid).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(Breakdown { t: hi, x: self.crossing_at(hi).unwrap_or(f64::NAN) })
    }

    fn check(&self, t: f64, x: f64) -> Result<()> {
        if !((0.0..=self.problem.t_end).contains(&t) && (0.0..=self.problem.x_end).contains(&x)) {
            return Err(domain(format!("({t}, {x}) lies outside the domain")));
        }
        if let Some(b) = self.breakdown {
            if t >= b.t {
                return Err(domain(format!("t = {t} lies past the breakdown time {}", b.t)));
            }
        }
        Ok(())
    }

    /// Concentration at `(t, x)` and the region of its foot.
    pub fn concentration(&self, t: f64, x: f64) -> Result<(f64, Region)> {
        self.check(t, x)?;
        let b = self.clock.at(t);
        let x_gamma = self.corner_line(t);
        if x >= x_gamma {
            let f = |xi: f64| xi + b * self.slope((self.problem.c0)(xi)) - x;
            let xi = bisect(f, 0.0, x);
            Ok(((self.problem.c0)(xi), Region::Initial))
        } else {
            let f = |tau: f64| (b - self.clock.at(tau)) * self.slope((self.problem.cb)(tau)) - x;
            let tau = bisect(f, 0.0, t);
            Ok(((self.problem.cb)(tau), Region::Boundary))
        }
    }

    /// `v = G(cb(t)) / G(c)`.
    pub fn velocity_ratio(&self, t: f64, c: f64) -> f64 {
        self.model.weight((self.problem.cb)(t)) / self.model.weight(c)
    }

    pub fn boundary_velocity(&self, t: f64) -> f64 {
        (self.problem.ub)(t)
    }
}

impl Sampler for CharacteristicField {
    fn sample(&self, t: f64, x: f64) -> Result<Sample> {
        let (c, _) = self.concentration(t, x)?;
        let v = self.velocity_ratio(t, c);
        Ok(Sample { c, u: self.boundary_velocity(t) * v, v })
    }
}

/// Root of a function changing sign on `[a, b]`, by bisection to round-off.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    if fa == 0.0 {
        return a;
    }
    let neg_at_a = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Concentration on a grid, with the rows past a breakdown left empty.
#[derive(Clone)]
pub struct SmoothSolution {
    pub grid: SmoothGrid,
    /// `c[i][j]` at `(ts[i], xs[j])`; `NaN` past the breakdown.
    pub c: Vec<Vec<f64>>,
    pub region: Vec<Vec<Region>>,
    /// Rows `0..valid_rows` lie before the breakdown.
    pub valid_rows: usize,
    pub field: CharacteristicField,
}

impl SmoothSolution {
    pub fn breakdown(&self) -> Option<Breakdown> {
        self.field.breakdown
    }
}

/// Solves by characteristics on `grid`, stopping at the first breakdown.
pub fn solve_characteristics(model: &Model, problem: SmoothProblem, grid: SmoothGrid) -> Result<SmoothSolution> {
    let field = CharacteristicField::new(model, problem, grid.clock_steps, grid.crossing_samples)?;
    let limit = field.breakdown.map_or(f64::INFINITY, |b| b.t);
    let valid_rows = grid.ts.partition_point(|&t| t < limit);
    let mut c = Vec::with_capacity(grid.ts.len());
    let mut region = Vec::with_capacity(grid.ts.len());
    for (i, &t) in grid.ts.iter().enumerate() {
        if i < valid_rows {
            let row: Vec<(f64, Region)> =
                grid.xs.iter().map(|&x| field.concentration(t, x)).collect::<Result<_>>()?;
            c.push(row.iter().map(|r| r.0).collect());
            region.push(row.iter().map(|r| r.1).collect());
        } else {
            c.push(vec![f64::NAN; grid.xs.len()]);
            region.push(vec![Region::Initial; grid.xs.len()]);
        }
    }
    Ok(SmoothSolution { grid, c, region, valid_rows, field })
}

/// `u` and `v = u/ub` on the grid of a smooth solution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VelocityField {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// `u = ub(t) G(cb(t)) / G(c)` at every valid node.
pub fn reconstruct_velocity(sol: &SmoothSolution) -> VelocityField {
    let f = &sol.field;
    let mut u = Vec::with_capacity(sol.c.len());
    let mut v = Vec::with_capacity(sol.c.len());
    for (i, &t) in sol.grid.ts.iter().enumerate() {
        let vr: Vec<f64> = sol.c[i].iter().map(|&c| if c.is_nan() { f64::NAN } else { f.velocity_ratio(t, c) }).collect();
        let ub = f.boundary_velocity(t);
        u.push(vr.iter().map(|&x| ub * x).collect());
        v.push(vr);
    }
    VelocityField { u, v }
}

/// Largest centred-difference residual of `∂x(u ψ(c)) + ∂t Q(c) = 0` over `pairs`
/// and of `∂x(u G(c)) = 0`, on interior nodes whose stencil lies in one region.
///
/// Needs a uniform grid. Returns 0 when no stencil qualifies.
pub fn entropy_equalities_check(model: &Model, sol: &SmoothSolution, pairs: &[EntropyPair]) -> f64 {
    let vel = reconstruct_velocity(sol);
    let (ts, xs) = (&sol.grid.ts, &sol.grid.xs);
    if ts.len() < 3 || xs.len() < 3 {
        return 0.0;
    }
    let dt = ts[1] - ts[0];
    let dx = xs[1] - xs[0];
    let mut worst: f64 = 0.0;
    for i in 1..sol.valid_rows.min(ts.len() - 1) {
        for j in 1..xs.len() - 1 {
            let r = sol.region[i][j];
            let stencil = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)];
            if stencil.iter().any(|&(a, b)| sol.region[a][b] != r || sol.c[a][b].is_nan()) {
                continue;
            }
            let (cl, cr) = (sol.c[i][j - 1], sol.c[i][j + 1]);
            let (ul, ur) = (vel.u[i][j - 1], vel.u[i][j + 1]);
            let (cd, cu) = (sol.c[i - 1][j], sol.c[i + 1][j]);
            let w = (ur * model.weight(cr) - ul * model.weight(cl)) / (2.0 * dx);
            worst = worst.max(w.abs());
            for p in pairs {
                let res = (ur * p.psi(cr) - ul * p.psi(cl)) / (2.0 * dx)
                    + (p.flux(model, cu) - p.flux(model, cd)) / (2.0 * dt);
                worst = worst.max(res.abs());
            }
        }
    }
    worst
}
