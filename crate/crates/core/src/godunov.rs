//! First-order Godunov scheme marching in `x`.
//!
//! In conservation form the system reads `∂x U + ∂t Φ(U) = 0` with
//! `U = (u, m = u c)` and `Φ(U) = (h(c), I(c))`, `I = c + q1`. The flux is a
//! function of `c` alone, and every λ-wave has positive slope, so the state of
//! an interface fan at `z = 0+` is its middle state, whose concentration is the
//! lower one: the exact Riemann flux reduces to upwinding from below.
//!
//! The `t = 0` edge receives the flux of `c0`, averaged exactly over each
//! `x`-step; the `t = T` edge is outflow.

use serde::Serialize;

use crate::data::{FtaData, PiecewiseConstant};
use crate::error::{domain, Error, Result};
use crate::field::{Sample, Sampler};
use crate::riemann::{solve_riemann, State};
use crate::thermo::Model;

/// One stored `x`-slice: cell values on the uniform `t`-grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Slice {
    pub x: f64,
    pub u: Vec<f64>,
    pub c: Vec<f64>,
}

/// Slices of a Godunov run at the requested abscissae.
#[derive(Clone, Debug, Serialize)]
pub struct GridSolution {
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub slices: Vec<Slice>,
    /// Number of `x`-steps taken.
    pub steps: usize,
    /// Largest per-step conservation defect, relative to the slice mass.
    pub conservation_defect: f64,
    /// Largest excursion of `c` outside `[0, 1]` (0 when none).
    pub bound_violation: f64,
    #[serde(skip)]
    pub ub: PiecewiseConstant,
}

impl GridSolution {
    pub fn slice(&self, x: f64) -> Option<&Slice> {
        self.slices.iter().find(|s| (s.x - x).abs() <= 1e-12 * (1.0 + x.abs()))
    }

    pub fn t_cells(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.slices.first().map_or(0, |s| s.c.len());
        (0..n).map(move |j| (j as f64 + 0.5) * self.dt)
    }
}

impl Sampler for GridSolution {
    /// Cell value; defined only on stored slices.
    fn sample(&self, t: f64, x: f64) -> Result<Sample> {
        let s = self.slice(x).ok_or_else(|| domain(format!("no stored slice at x = {x}")))?;
        if !(0.0..=self.t_end).contains(&t) {
            return Err(domain(format!("t = {t} outside [0, {}]", self.t_end)));
        }
        let j = ((t / self.dt) as usize).min(s.c.len() - 1);
        Ok(Sample { c: s.c[j], u: s.u[j], v: s.u[j] / self.ub.value_at(t) })
    }
}

/// The marching state: one `x`-slice of cell averages.
pub struct Godunov<'m> {
    model: &'m Model,
    c0: PiecewiseConstant,
    dt: f64,
    x: f64,
    u: Vec<f64>,
    m: Vec<f64>,
}

impl<'m> Godunov<'m> {
    /// Cell averages of `(ub, ub cb)` on `n = round(T/Δt)` cells.
    pub fn new(model: &'m Model, data: &FtaData, dt: f64) -> Result<Self> {
        let t_end = data.t_end();
        if !(dt > 0.0 && dt <= t_end) {
            return Err(domain(format!("time step {dt} must lie in (0, T]")));
        }
        let n = (t_end / dt).round().max(1.0) as usize;
        let dt = t_end / n as f64;
        let ucb = product(&data.ub, &data.cb);
        let u: Vec<f64> = (0..n).map(|j| data.ub.integral(j as f64 * dt, (j + 1) as f64 * dt) / dt).collect();
        let m: Vec<f64> = (0..n).map(|j| ucb.integral(j as f64 * dt, (j + 1) as f64 * dt) / dt).collect();
        Ok(Godunov { model, c0: data.c0.clone(), dt, x: 0.0, u, m })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn concentration(&self) -> Vec<f64> {
        self.u.iter().zip(&self.m).map(|(u, m)| m / u).collect()
    }

    pub fn velocity(&self) -> &[f64] {
        &self.u
    }

    /// Largest `Δx` with `Δx max(H/u) <= cfl Δt` on the current slice.
    pub fn admissible_dx(&self, cfl: f64) -> f64 {
        let lam = self
            .u
            .iter()
            .zip(&self.m)
            .map(|(u, m)| self.model.speed_factor((m / u).clamp(0.0, 1.0)) / u)
            .fold(0.0, f64::max);
        cfl * self.dt / lam
    }

    /// Interface flux between two cells from the exact fan sampled at `z = 0+`.
    pub fn interface_flux(&self, below: State, above: State) -> Result<[f64; 2]> {
        let fan = solve_riemann(self.model, below, above)?;
        let z = 1e-300;
        Ok(self.flux(fan.sample(self.model, z)?.c))
    }

    fn flux(&self, c: f64) -> [f64; 2] {
        let c = c.clamp(0.0, 1.0);
        [self.model.adsorbed(c), c + self.model.isotherms(c).q1]
    }

    /// Mean of `Φ(c0)` over `[x, x + dx]`.
    fn bottom_flux(&self, dx: f64) -> [f64; 2] {
        let (a, b) = (self.x, (self.x + dx).min(self.c0.end()));
        let mut acc = [0.0; 2];
        for (lo, hi, c) in self.c0.pieces() {
            let w = hi.min(b) - lo.max(a);
            if w > 0.0 {
                let f = self.flux(c);
                acc[0] += w * f[0];
                acc[1] += w * f[1];
            }
        }
        [acc[0] / (b - a), acc[1] / (b - a)]
    }

    /// Advances by `dx`, returning the relative conservation defect of the step.
    pub fn step(&mut self, dx: f64, cfl: f64) -> Result<f64> {
        let limit = self.admissible_dx(cfl);
        if dx > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dx, suggested_dx: limit });
        }
        let n = self.u.len();
        // Upwind flux from the cell below each interface; `flux[j]` is the lower edge of cell j.
        let mut flux = Vec::with_capacity(n + 1);
        flux.push(self.bottom_flux(dx));
        for j in 0..n {
            flux.push(self.flux(self.m[j] / self.u[j]));
        }
        let r = dx / self.dt;
        let before = [self.u.iter().sum::<f64>(), self.m.iter().sum::<f64>()];
        for j in 0..n {
            self.u[j] -= r * (flux[j + 1][0] - flux[j][0]);
            self.m[j] -= r * (flux[j + 1][1] - flux[j][1]);
            if !(self.u[j] > 0.0) {
                return Err(Error::Consistency(format!(
                    "velocity lost positivity at x = {}, cell {j}",
                    self.x + dx
                )));
            }
        }
        let after = [self.u.iter().sum::<f64>(), self.m.iter().sum::<f64>()];
        let mut defect: f64 = 0.0;
        for k in 0..2 {
            let expected = before[k] - r * (flux[n][k] - flux[0][k]);
            defect = defect.max((after[k] - expected).abs() / before[k].abs().max(1.0));
        }
        self.x += dx;
        Ok(defect)
    }

    fn snapshot(&self) -> Slice {
        Slice { x: self.x, u: self.u.clone(), c: self.concentration() }
    }
}

/// `a(t) b(t)` for two piecewise-constant functions on the same interval.
fn product(a: &PiecewiseConstant, b: &PiecewiseConstant) -> PiecewiseConstant {
    let mut breaks: Vec<f64> = a.breaks().iter().chain(b.breaks()).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut edges = vec![0.0];
    edges.extend(&breaks);
    edges.push(a.end());
    let values = edges.windows(2).map(|w| {
        let t = 0.5 * (w[0] + w[1]);
        a.value_at(t) * b.value_at(t)
    });
    PiecewiseConstant::new(breaks, values.collect(), a.end()).expect("merged breaks are ordered")
}

/// Marches from `x = 0` to `x_end`, storing the slices at `record` (clamped to the domain).
pub fn godunov_march(
    model: &Model,
    data: &FtaData,
    dt: f64,
    x_end: f64,
    cfl: f64,
    record: &[f64],
) -> Result<GridSolution> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(domain(format!("CFL number must lie in (0, 1], got {cfl}")));
    }
    if !(x_end > 0.0 && x_end <= data.x_end() * (1.0 + 1e-12)) {
        return Err(domain(format!("x_end = {x_end} must lie in (0, {}]", data.x_end())));
    }
    let mut targets: Vec<f64> = record.iter().map(|&x| x.clamp(0.0, x_end)).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut g = Godunov::new(model, data, dt)?;
    let mut slices = Vec::with_capacity(targets.len());
    let mut pending = targets.iter().peekable();
    while pending.peek().is_some_and(|&&x| x <= 0.0) {
        slices.push(g.snapshot());
        pending.next();
    }
    let (mut steps, mut defect) = (0, 0.0f64);
    while g.x < x_end && pending.peek().is_some() {
        let stop = **pending.peek().unwrap();
        let mut dx = g.admissible_dx(cfl);
        let snap = stop - g.x <= dx * (1.0 + 1e-13);
        if snap {
            dx = stop - g.x;
        }
        defect = defect.max(g.step(dx, cfl)?);
        steps += 1;
        if snap {
            g.x = stop;
            slices.push(g.snapshot());
            pending.next();
        }
    }
    let bound_violation = slices
        .iter()
        .flat_map(|s| s.c.iter())
        .map(|&c| (-c).max(c - 1.0).max(0.0))
        .fold(0.0, f64::max);
    Ok(GridSolution {
        dt: g.dt,
        t_end: data.t_end(),
        cfl,
        slices,
        steps,
        conservation_defect: defect,
        bound_violation,
        ub: data.ub.clone(),
    })
}

/// Composite-midpoint `∫_0^T |c_a - c_b| dt` and `∫_0^T |u_a - u_b| dt` at abscissa `x`.
pub fn l1_slice_distance(a: &impl Sampler, b: &impl Sampler, x: f64, t_end: f64, n: usize) -> Result<[f64; 2]> {
    let h = t_end / n as f64;
    let mut acc = [0.0; 2];
    for k in 0..n {
        let t = (k as f64 + 0.5) * h;
        let (sa, sb) = (a.sample(t, x)?, b.sample(t, x)?);
        acc[0] += (sa.c - sb.c).abs() * h;
        acc[1] += (sa.u - sb.u).abs() * h;
    }
    Ok(acc)
}
