//! Isotherm models and the scalar functions of concentration derived from them.
//!
//! Everything in the system is driven by two equilibrium isotherms `q1(c)` and
//! `q2(c)`, where `c` is the gas-phase fraction of species 1 and `1 - c` that of
//! species 2. From them:
//!
//! | symbol | meaning | field of [`ThermoPoint`] |
//! |---|---|---|
//! | `h = q1 + q2` | total adsorbed amount | `adsorbed` |
//! | `f = q1 - c h` | exchange flux | `exchange` |
//! | `H = 1 + q1' - c h'` | speed factor, `λ = H/u` | `speed_factor` |
//! | `g' = -h'/H`, `g(0) = 0` | log of the Riemann-invariant weight | `log_weight` |
//! | `G = exp(g)` | weight, `u G(c)` is invariant across λ-waves | `weight` |
//! | `F' = 1/(H G)`, `F(0) = 0` | scalar flux along characteristics | `scalar_flux` |
//!
//! `g` and `F` have closed forms for linear isotherms. For the other models they
//! are integrated once, at construction, onto a dense grid and interpolated with
//! cubic Hermite polynomials that use the exact nodal derivatives.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{check_concentration, domain, Error, Result};

/// Absolute tolerance used when integrating `g` and `F`.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Number of sample points used by [`Model::new`] when validating.
pub const DEFAULT_VALIDATION_SAMPLES: usize = 257;

const TABLE_INTERVALS: usize = 2048;

/// Values of a concave isotherm and its first two derivatives at one point.
pub type IsothermValues = [f64; 3];

/// The concave isotherm `q2*(c2)` of the adsorbed species in an inert-carrier model.
#[derive(Clone)]
pub enum ConcaveIsotherm {
    /// `q = capacity * affinity * c2 / (1 + affinity * c2)`.
    Langmuir { capacity: f64, affinity: f64 },
    /// User-supplied isotherm returning `[q, q', q'']` at `c2`.
    Custom(Arc<dyn Fn(f64) -> IsothermValues + Send + Sync>),
}

impl ConcaveIsotherm {
    pub fn custom(f: impl Fn(f64) -> IsothermValues + Send + Sync + 'static) -> Self {
        ConcaveIsotherm::Custom(Arc::new(f))
    }

    fn eval(&self, c2: f64) -> IsothermValues {
        match *self {
            ConcaveIsotherm::Langmuir { capacity, affinity } => {
                let d = 1.0 + affinity * c2;
                let qk = capacity * affinity;
                [qk * c2 / d, qk / (d * d), -2.0 * qk * affinity / (d * d * d)]
            }
            ConcaveIsotherm::Custom(ref f) => f(c2),
        }
    }
}

impl fmt::Debug for ConcaveIsotherm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConcaveIsotherm::Langmuir { capacity, affinity } => f
                .debug_struct("Langmuir")
                .field("capacity", capacity)
                .field("affinity", affinity)
                .finish(),
            ConcaveIsotherm::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A pair of equilibrium isotherms.
#[derive(Clone, Debug)]
pub enum IsothermModel {
    /// `q1 = k1 c`, `q2 = k2 (1 - c)`.
    Linear { k1: f64, k2: f64 },
    /// Competitive Langmuir isotherms with capacities `q1, q2` and affinities `k1, k2`:
    /// `q_i = Q_i K_i c_i / (1 + K_1 c_1 + K_2 c_2)`.
    BinaryLangmuir { q1: f64, k1: f64, q2: f64, k2: f64 },
    /// Species 1 is inert (`q1 = 0`), species 2 follows a concave isotherm of `c2 = 1 - c`.
    InertPlusConcave(ConcaveIsotherm),
    /// The inner model with gas labels exchanged: `c -> 1 - c`, `q1 <-> q2`.
    Relabeled(Box<IsothermModel>),
}

/// Both isotherms and their first two derivatives in `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isotherms {
    pub q1: f64,
    pub dq1: f64,
    pub d2q1: f64,
    pub q2: f64,
    pub dq2: f64,
    pub d2q2: f64,
}

impl IsothermModel {
    /// Exchanges the gas labels, which flips the sign of `f''`.
    pub fn relabeled(self) -> IsothermModel {
        match self {
            IsothermModel::Relabeled(inner) => *inner,
            other => IsothermModel::Relabeled(Box::new(other)),
        }
    }

    pub fn is_relabeled(&self) -> bool {
        matches!(self, IsothermModel::Relabeled(inner) if !inner.is_relabeled())
    }

    /// Evaluates both isotherms at `c` without a range check.
    pub fn isotherms(&self, c: f64) -> Isotherms {
        match *self {
            IsothermModel::Linear { k1, k2 } => Isotherms {
                q1: k1 * c,
                dq1: k1,
                d2q1: 0.0,
                q2: k2 * (1.0 - c),
                dq2: -k2,
                d2q2: 0.0,
            },
            IsothermModel::BinaryLangmuir { q1, k1, q2, k2 } => {
                let d = 1.0 + k1 * c + k2 * (1.0 - c);
                let dd = k1 - k2;
                let a1 = q1 * k1;
                let a2 = q2 * k2;
                Isotherms {
                    q1: a1 * c / d,
                    dq1: a1 * (1.0 + k2) / (d * d),
                    d2q1: -2.0 * a1 * (1.0 + k2) * dd / (d * d * d),
                    q2: a2 * (1.0 - c) / d,
                    dq2: -a2 * (1.0 + k1) / (d * d),
                    d2q2: 2.0 * a2 * (1.0 + k1) * dd / (d * d * d),
                }
            }
            IsothermModel::InertPlusConcave(ref iso) => {
                let [q, dq, d2q] = iso.eval(1.0 - c);
                Isotherms { q1: 0.0, dq1: 0.0, d2q1: 0.0, q2: q, dq2: -dq, d2q2: d2q }
            }
            IsothermModel::Relabeled(ref inner) => {
                let p = inner.isotherms(1.0 - c);
                Isotherms {
                    q1: p.q2,
                    dq1: -p.dq2,
                    d2q1: p.d2q2,
                    q2: p.q1,
                    dq2: -p.dq1,
                    d2q2: p.d2q1,
                }
            }
        }
    }

    fn check_parameters(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            IsothermModel::Linear { k1, k2 } if ok(k1) && ok(k2) => Ok(()),
            IsothermModel::Linear { k1, k2 } => {
                Err(domain(format!("linear isotherm needs finite K1, K2 >= 0, got {k1}, {k2}")))
            }
            IsothermModel::BinaryLangmuir { q1, k1, q2, k2 }
                if [q1, k1, q2, k2].iter().all(|&v| v.is_finite() && v > 0.0) =>
            {
                Ok(())
            }
            IsothermModel::BinaryLangmuir { .. } => {
                Err(domain("binary Langmuir parameters must be finite and positive"))
            }
            IsothermModel::InertPlusConcave(ConcaveIsotherm::Langmuir { capacity, affinity })
                if ok(capacity) && ok(affinity) =>
            {
                Ok(())
            }
            IsothermModel::InertPlusConcave(ConcaveIsotherm::Langmuir { .. }) => {
                Err(domain("Langmuir capacity and affinity must be finite and non-negative"))
            }
            IsothermModel::InertPlusConcave(ConcaveIsotherm::Custom(_)) => Ok(()),
            IsothermModel::Relabeled(ref inner) => inner.check_parameters(),
        }
    }
}

/// All derived quantities at one concentration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermoPoint {
    pub c: f64,
    pub q1: f64,
    pub q2: f64,
    /// `I = c + q1`.
    pub holdup: f64,
    /// `h`.
    pub adsorbed: f64,
    /// `h'`.
    pub adsorbed_slope: f64,
    /// `f`.
    pub exchange: f64,
    /// `f'`.
    pub exchange_slope: f64,
    /// `f''`.
    pub exchange_curvature: f64,
    /// `H`.
    pub speed_factor: f64,
    /// `H'`.
    pub speed_factor_slope: f64,
    /// `g`.
    pub log_weight: f64,
    /// `G`.
    pub weight: f64,
    /// `F`.
    pub scalar_flux: f64,
    /// `F'`.
    pub scalar_flux_slope: f64,
    /// `F''`.
    pub scalar_flux_curvature: f64,
}

impl ThermoPoint {
    /// Characteristic slope `dt/dx = H/u` of the λ-field.
    pub fn lambda(&self, u: f64) -> Result<f64> {
        lambda_speed(self, u)
    }
}

/// Characteristic slope `dt/dx = H(c)/u` of the genuinely nonlinear field.
pub fn lambda_speed(tp: &ThermoPoint, u: f64) -> Result<f64> {
    if u > 0.0 && u.is_finite() {
        Ok(tp.speed_factor / u)
    } else {
        Err(domain(format!("velocity must be positive and finite, got {u}")))
    }
}

/// Cubic Hermite interpolant on the uniform grid `i / n`, `i = 0..=n`.
#[derive(Clone, Debug)]
struct HermiteTable {
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteTable {
    fn eval(&self, c: f64) -> f64 {
        let n = self.y.len() - 1;
        let s = (c * n as f64).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let t = s - i as f64;
        let h = 1.0 / n as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
            + (t3 - 2.0 * t2 + t) * h * self.dy[i]
            + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
            + (t3 - t2) * h * self.dy[i + 1]
    }
}

#[derive(Clone, Debug)]
enum Primitives {
    /// `H = H0 + a c`, so `g = ln(H/H0)` and `F = c/H`.
    Linear { h0: f64, a: f64 },
    Tabulated { g: HermiteTable, f: HermiteTable },
}

/// An isotherm model together with its cached primitives `g` and `F`.
///
/// Immutable after construction and cheap to share across threads.
#[derive(Clone, Debug)]
pub struct Thermo {
    model: IsothermModel,
    primitives: Primitives,
}

impl Thermo {
    /// Builds the primitive tables. The model is not validated; see [`Model`].
    pub fn new(model: IsothermModel) -> Result<Thermo> {
        model.check_parameters()?;
        let primitives = match model {
            IsothermModel::Linear { k1, k2 } => Primitives::Linear { h0: 1.0 + k1, a: k2 - k1 },
            _ => tabulate(&model)?,
        };
        Ok(Thermo { model, primitives })
    }

    pub fn model(&self) -> &IsothermModel {
        &self.model
    }

    pub fn isotherms(&self, c: f64) -> Isotherms {
        self.model.isotherms(c)
    }

    /// Evaluates every derived quantity at `c`.
    pub fn point(&self, c: f64) -> Result<ThermoPoint> {
        check_concentration(c)?;
        let q = self.isotherms(c);
        let h = q.q1 + q.q2;
        let dh = q.dq1 + q.dq2;
        let d2h = q.d2q1 + q.d2q2;
        let big_h = 1.0 + q.dq1 - c * dh;
        let g = self.log_weight(c);
        let weight = g.exp();
        let d2f = q.d2q1 - 2.0 * dh - c * d2h;
        Ok(ThermoPoint {
            c,
            q1: q.q1,
            q2: q.q2,
            holdup: c + q.q1,
            adsorbed: h,
            adsorbed_slope: dh,
            exchange: q.q1 - c * h,
            exchange_slope: q.dq1 - h - c * dh,
            exchange_curvature: d2f,
            speed_factor: big_h,
            speed_factor_slope: q.d2q1 - dh - c * d2h,
            log_weight: g,
            weight,
            scalar_flux: self.scalar_flux(c),
            scalar_flux_slope: 1.0 / (big_h * weight),
            scalar_flux_curvature: -d2f / (big_h * big_h * weight),
        })
    }

    // The scalar accessors below skip the range check; callers hold c in [0, 1].

    /// `h(c)`.
    pub fn adsorbed(&self, c: f64) -> f64 {
        let q = self.isotherms(c);
        q.q1 + q.q2
    }

    /// `f(c)`.
    pub fn exchange(&self, c: f64) -> f64 {
        let q = self.isotherms(c);
        q.q1 - c * (q.q1 + q.q2)
    }

    /// `f'(c)`.
    pub fn exchange_slope(&self, c: f64) -> f64 {
        let q = self.isotherms(c);
        q.dq1 - (q.q1 + q.q2) - c * (q.dq1 + q.dq2)
    }

    /// `f''(c)`.
    pub fn exchange_curvature(&self, c: f64) -> f64 {
        let q = self.isotherms(c);
        q.d2q1 - 2.0 * (q.dq1 + q.dq2) - c * (q.d2q1 + q.d2q2)
    }

    /// `H(c)`.
    pub fn speed_factor(&self, c: f64) -> f64 {
        let q = self.isotherms(c);
        1.0 + q.dq1 - c * (q.dq1 + q.dq2)
    }

    /// `g(c)`.
    pub fn log_weight(&self, c: f64) -> f64 {
        match self.primitives {
            Primitives::Linear { h0, a } => (a * c / h0).ln_1p(),
            Primitives::Tabulated { ref g, .. } => g.eval(c),
        }
    }

    /// `G(c)`.
    pub fn weight(&self, c: f64) -> f64 {
        self.log_weight(c).exp()
    }

    /// `F(c)`.
    pub fn scalar_flux(&self, c: f64) -> f64 {
        match self.primitives {
            Primitives::Linear { h0, a } => c / (h0 + a * c),
            Primitives::Tabulated { ref f, .. } => f.eval(c),
        }
    }

    /// `F'(c) = 1/(H G)`.
    pub fn scalar_flux_slope(&self, c: f64) -> f64 {
        1.0 / (self.speed_factor(c) * self.weight(c))
    }

    /// `∫ f''/H` from `from` to `to`, in closed form `ln(H(to)/H(from)) + g(to) - g(from)`.
    pub fn spread(&self, from: f64, to: f64) -> f64 {
        (self.speed_factor(to) / self.speed_factor(from)).ln() + self.log_weight(to)
            - self.log_weight(from)
    }

    /// `α = [f]/[c] + 1` between `c_minus` and `c_plus`, with `f'` at the midpoint for tiny jumps.
    pub fn shock_alpha(&self, c_minus: f64, c_plus: f64) -> f64 {
        shock_alpha(&self.model, c_minus, c_plus)
    }

    /// Shock curve `S(c_plus, c_minus) = ln((α + h+)/(α + h-))` with `α = [f]/[c] + 1`.
    pub fn shock_curve(&self, c_minus: f64, c_plus: f64) -> Result<f64> {
        shock_curve(&self.model, c_minus, c_plus)
    }
}

/// Chord slope `[f]/[c]`, replaced by `f'` at the midpoint for nearly equal states.
pub(crate) const DEGENERATE_JUMP: f64 = 1e-9;

fn shock_alpha(model: &IsothermModel, c_minus: f64, c_plus: f64) -> f64 {
    let f = |c: f64| {
        let q = model.isotherms(c);
        q.q1 - c * (q.q1 + q.q2)
    };
    let dc = c_plus - c_minus;
    if dc.abs() < DEGENERATE_JUMP {
        let m = 0.5 * (c_plus + c_minus);
        let q = model.isotherms(m);
        q.dq1 - (q.q1 + q.q2) - m * (q.dq1 + q.dq2) + 1.0
    } else {
        (f(c_plus) - f(c_minus)) / dc + 1.0
    }
}

fn shock_curve(model: &IsothermModel, c_minus: f64, c_plus: f64) -> Result<f64> {
    let alpha = shock_alpha(model, c_minus, c_plus);
    let h = |c: f64| {
        let q = model.isotherms(c);
        q.q1 + q.q2
    };
    let num = alpha + h(c_plus);
    let den = alpha + h(c_minus);
    for v in [num, den] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveShockFactor { c_minus, c_plus, value: v });
        }
    }
    Ok((num / den).ln())
}

fn tabulate(model: &IsothermModel) -> Result<Primitives> {
    let n = TABLE_INTERVALS;
    let step = 1.0 / n as f64;
    let node = |i: usize| i as f64 * step;
    let speed = |c: f64| {
        let q = model.isotherms(c);
        1.0 + q.dq1 - c * (q.dq1 + q.dq2)
    };
    let dg = |c: f64| {
        let q = model.isotherms(c);
        -(q.dq1 + q.dq2) / speed(c)
    };
    for i in 0..=n {
        if !(speed(node(i)) > 0.0) {
            return Err(domain(format!(
                "speed factor H is not positive at c = {}; isotherm slopes have the wrong sign",
                node(i)
            )));
        }
    }
    let tol = QUADRATURE_TOL / n as f64;
    let mut g_nodes = vec![0.0; n + 1];
    for i in 0..n {
        g_nodes[i + 1] = g_nodes[i] + quadrature::integrate(dg, node(i), node(i + 1), tol).integral;
    }
    let g = HermiteTable { y: g_nodes, dy: (0..=n).map(|i| dg(node(i))).collect() };
    let df = |c: f64| 1.0 / (speed(c) * g.eval(c).exp());
    let mut f_nodes = vec![0.0; n + 1];
    for i in 0..n {
        f_nodes[i + 1] = f_nodes[i] + quadrature::integrate(df, node(i), node(i + 1), tol).integral;
    }
    let f = HermiteTable { y: f_nodes, dy: (0..=n).map(|i| df(node(i))).collect() };
    if g.y.iter().chain(&f.y).any(|v| !v.is_finite()) {
        return Err(domain("isotherm primitives are not finite on [0, 1]"));
    }
    Ok(Primitives::Tabulated { g, f })
}

/// One named structural check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`validate_model`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelReport {
    pub n_samples: usize,
    /// Minimum of `f''` over the grid and where it occurs.
    pub exchange_curvature_min: f64,
    pub exchange_curvature_min_at: f64,
    /// Maximum of `h'` over the grid and where it occurs.
    pub adsorbed_slope_max: f64,
    pub adsorbed_slope_max_at: f64,
    /// `S` increases with the lower state `c-`.
    pub shock_monotone_minus: bool,
    /// `S` decreases with the upper state `c+`.
    pub shock_monotone_plus: bool,
    /// First offending pair `(c-, c+)` when a monotonicity flag is false.
    pub shock_violation: Option<(f64, f64)>,
    /// The model carries exchanged gas labels.
    pub relabeled: bool,
    /// `f'' < 0` on the whole grid: exchanging the gas labels would orient the model.
    pub swap_recommended: bool,
    pub criteria: Vec<Criterion>,
    pub passed: bool,
}

impl ModelReport {
    /// One-line description of the failed criteria.
    pub fn summary(&self) -> String {
        let failed: Vec<_> = self
            .criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        let mut s = if failed.is_empty() { "all criteria pass".to_string() } else { failed.join("; ") };
        if self.swap_recommended {
            s.push_str("; exchanging the gas labels would give f'' > 0");
        }
        s
    }
}

/// Samples the structural assumptions the solvers rely on.
///
/// `f'' > 0` and `h' <= 0` are checked on `n_samples` uniform points, and the
/// monotonicity of the shock curve in each argument by centred differences on
/// a coarser grid of ordered pairs. Model-specific criteria (parameter
/// inequalities for linear and Langmuir isotherms, concavity for the inert
/// carrier model) are listed alongside.
pub fn validate_model(model: &IsothermModel, n_samples: usize) -> ModelReport {
    let n = n_samples.max(2);
    let grid = |k: usize, n: usize| k as f64 / (n - 1) as f64;
    let (mut d2f_min, mut d2f_at) = (f64::INFINITY, 0.0);
    let (mut dh_max, mut dh_at) = (f64::NEG_INFINITY, 0.0);
    let (mut d2f_max, mut h_min, mut sign_ok, mut sign_at) = (f64::NEG_INFINITY, f64::INFINITY, true, 0.0);
    for k in 0..n {
        let c = grid(k, n);
        let q = model.isotherms(c);
        let dh = q.dq1 + q.dq2;
        let d2f = q.d2q1 - 2.0 * dh - c * (q.d2q1 + q.d2q2);
        let big_h = 1.0 + q.dq1 - c * dh;
        if d2f < d2f_min {
            (d2f_min, d2f_at) = (d2f, c);
        }
        if dh > dh_max {
            (dh_max, dh_at) = (dh, c);
        }
        d2f_max = d2f_max.max(d2f);
        h_min = h_min.min(big_h);
        if sign_ok && !(q.dq1 >= 0.0 && q.dq2 <= 0.0) {
            (sign_ok, sign_at) = (false, c);
        }
    }

    let mut criteria = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        criteria.push(Criterion { name: name.to_string(), passed, detail })
    };
    push(
        "isotherm slopes",
        sign_ok,
        if sign_ok { "q1' >= 0 >= q2'".into() } else { format!("q1' >= 0 >= q2' fails at c = {sign_at}") },
    );
    push("speed factor", h_min >= 1.0, format!("min H = {h_min}"));
    push(
        "convex exchange",
        d2f_min > 0.0,
        format!("min f'' = {d2f_min} at c = {d2f_at}"),
    );
    push(
        "decreasing adsorbed amount",
        dh_max <= 0.0,
        format!("max h' = {dh_max} at c = {dh_at}"),
    );
    match *model {
        IsothermModel::Linear { k1, k2 } => {
            push("K1 < K2", k1 < k2, format!("K1 = {k1}, K2 = {k2}"));
        }
        IsothermModel::BinaryLangmuir { q1, k1, q2, k2 } => {
            push("K1 >= K2", k1 >= k2, format!("K1 = {k1}, K2 = {k2}"));
            push("Q1 K1 < Q2 K2", q1 * k1 < q2 * k2, format!("Q1 K1 = {}, Q2 K2 = {}", q1 * k1, q2 * k2));
        }
        IsothermModel::InertPlusConcave(ref iso) => {
            let bad = (0..n).map(|k| grid(k, n)).find(|&c2| iso.eval(c2)[2] > 0.0);
            push(
                "concave isotherm",
                bad.is_none(),
                match bad {
                    None => "q'' <= 0".into(),
                    Some(c2) => format!("q'' > 0 at c2 = {c2}"),
                },
            );
        }
        IsothermModel::Relabeled(_) => {}
    }

    // Shock-curve monotonicity on ordered pairs c- > c+.
    let m = n.min(65);
    let eps = 1e-5;
    let tol = 1e-8;
    let (mut mono_minus, mut mono_plus, mut violation) = (true, true, None);
    let s = |cm: f64, cp: f64| shock_curve(model, cm, cp).unwrap_or(f64::NAN);
    'pairs: for i in 0..m {
        for j in 0..i {
            let (cm, cp) = (grid(i, m), grid(j, m));
            if cm - cp <= 2.0 * eps {
                continue;
            }
            let lo_m = (cm - eps).max(cp);
            let hi_m = (cm + eps).min(1.0);
            let ds_minus = (s(hi_m, cp) - s(lo_m, cp)) / (hi_m - lo_m);
            let lo_p = (cp - eps).max(0.0);
            let hi_p = (cp + eps).min(cm);
            let ds_plus = (s(cm, hi_p) - s(cm, lo_p)) / (hi_p - lo_p);
            let ok_minus = ds_minus >= -tol;
            let ok_plus = ds_plus <= tol;
            if !(ok_minus && ok_plus) {
                mono_minus &= ok_minus;
                mono_plus &= ok_plus;
                violation = Some((cm, cp));
                break 'pairs;
            }
        }
    }
    push(
        "monotone shock curve",
        mono_minus && mono_plus,
        match violation {
            None => "dS/dc- >= 0 >= dS/dc+".into(),
            Some((cm, cp)) => format!("violated at c- = {cm}, c+ = {cp}"),
        },
    );

    let passed = criteria.iter().all(|c| c.passed);
    ModelReport {
        n_samples: n,
        exchange_curvature_min: d2f_min,
        exchange_curvature_min_at: d2f_at,
        adsorbed_slope_max: dh_max,
        adsorbed_slope_max_at: dh_at,
        shock_monotone_minus: mono_minus,
        shock_monotone_plus: mono_plus,
        shock_violation: violation,
        relabeled: model.is_relabeled(),
        swap_recommended: d2f_max < 0.0,
        criteria,
        passed,
    }
}

/// Evaluates `model` at `c`, building the primitive cache on the fly.
///
/// Convenient for one-off queries; solvers hold a [`Model`] instead.
pub fn eval_thermo(model: &IsothermModel, c: f64) -> Result<ThermoPoint> {
    check_concentration(c)?;
    Thermo::new(model.clone())?.point(c)
}

/// A validated model: the only form the solvers accept.
#[derive(Clone, Debug)]
pub struct Model {
    thermo: Thermo,
    report: ModelReport,
}

impl Model {
    /// Validates on [`DEFAULT_VALIDATION_SAMPLES`] points and builds the cache.
    pub fn new(model: IsothermModel) -> Result<Model> {
        Model::with_samples(model, DEFAULT_VALIDATION_SAMPLES)
    }

    pub fn with_samples(model: IsothermModel, n_samples: usize) -> Result<Model> {
        model.check_parameters()?;
        let report = validate_model(&model, n_samples);
        if !report.passed {
            return Err(Error::ModelRejected(Box::new(report)));
        }
        Ok(Model { thermo: Thermo::new(model)?, report })
    }

    /// `Linear { k1: 0, k2: 1 }`: `h = 1 - c`, `H = 1 + c`, `g = ln(1 + c)`.
    pub fn reference_linear() -> Model {
        Model::new(IsothermModel::Linear { k1: 0.0, k2: 1.0 }).expect("reference model is valid")
    }

    pub fn report(&self) -> &ModelReport {
        &self.report
    }

    pub fn thermo(&self) -> &Thermo {
        &self.thermo
    }
}

impl std::ops::Deref for Model {
    type Target = Thermo;

    fn deref(&self) -> &Thermo {
        &self.thermo
    }
}

/// Convex test function `ψ` and its entropy flux `Q` with `Q' = h' ψ + H ψ'`, `Q(0) = 0`.
///
/// Integrating by parts, `Q(c) = H(c) ψ(c) - H(0) ψ(0) - ∫_0^c f'' ψ`; the
/// remaining integral is evaluated with composite Gauss–Legendre quadrature.
#[derive(Clone)]
pub struct EntropyPair {
    psi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    n_quad: usize,
}

impl fmt::Debug for EntropyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntropyPair").field("n_quad", &self.n_quad).finish_non_exhaustive()
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

impl EntropyPair {
    /// `n_quad` is the number of Gauss panels on `[0, 1]`; panel edges should
    /// include any kink of `ψ` for full accuracy.
    pub fn new(psi: impl Fn(f64) -> f64 + Send + Sync + 'static, n_quad: usize) -> Self {
        EntropyPair { psi: Arc::new(psi), n_quad: n_quad.max(1) }
    }

    pub fn psi(&self, c: f64) -> f64 {
        (self.psi)(c)
    }

    /// Entropy flux `Q(c)`.
    pub fn flux(&self, thermo: &Thermo, c: f64) -> f64 {
        let panel = 1.0 / self.n_quad as f64;
        let full = ((c / panel).floor() as usize).min(self.n_quad);
        let mut integral = 0.0;
        let gauss = |a: f64, b: f64| {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            GAUSS5.iter().fold(0.0, |acc, &(x, w)| {
                let s = mid + half * x;
                acc + w * half * thermo.exchange_curvature(s) * self.psi(s)
            })
        };
        for k in 0..full {
            integral += gauss(k as f64 * panel, (k + 1) as f64 * panel);
        }
        let start = full as f64 * panel;
        if c > start {
            integral += gauss(start, c);
        }
        thermo.speed_factor(c) * self.psi(c) - thermo.speed_factor(0.0) * self.psi(0.0) - integral
    }
}
