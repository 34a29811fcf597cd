//! Initial and boundary data: piecewise-constant tables and analytic profiles.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A right-continuous piecewise-constant function on `(0, end)`.
///
/// `values[k]` holds on `[breaks[k-1], breaks[k])`, with the first and last
/// pieces extended to `0` and `end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    values: Vec<f64>,
    end: f64,
}

impl PiecewiseConstant {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>, end: f64) -> Result<Self> {
        if !(end > 0.0 && end.is_finite()) {
            return Err(domain(format!("domain length must be positive, got {end}")));
        }
        if values.len() != breaks.len() + 1 {
            return Err(domain(format!(
                "{} breaks need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        let mut last = 0.0;
        for &b in &breaks {
            if !(b > last && b < end) {
                return Err(domain(format!("breaks must increase strictly inside (0, {end}), got {b}")));
            }
            last = b;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("piecewise values must be finite"));
        }
        Ok(PiecewiseConstant { breaks, values, end })
    }

    pub fn constant(value: f64, end: f64) -> Result<Self> {
        PiecewiseConstant::new(Vec::new(), vec![value], end)
    }

    /// Averages of `profile` over `n` equal cells of `(0, end)`.
    pub fn cell_averages(profile: &Profile, end: f64, n: usize) -> Result<Self> {
        let n = n.max(1);
        let h = end / n as f64;
        let breaks = (1..n).map(|k| k as f64 * h).collect();
        let values = (0..n)
            .map(|k| {
                let (a, b) = (k as f64 * h, if k + 1 == n { end } else { (k + 1) as f64 * h });
                profile.integral(a, b) / (b - a)
            })
            .collect();
        PiecewiseConstant::new(breaks, values, end)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    /// Value at `s`; at a break the value to its right.
    pub fn value_at(&self, s: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= s)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_variation(&self) -> f64 {
        total_variation(&self.values)
    }

    /// Exact integral over `[a, b] ⊂ [0, end]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut lo = 0.0f64;
        for (k, &v) in self.values.iter().enumerate() {
            let hi = self.breaks.get(k).copied().unwrap_or(self.end);
            let (l, r) = (lo.max(a), hi.min(b));
            if r > l {
                acc += v * (r - l);
            }
            lo = hi;
        }
        acc
    }

    /// Applies `f` to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PiecewiseConstant {
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            end: self.end,
        }
    }

    /// Pieces `(start, end, value)` in order.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| {
            let a = if k == 0 { 0.0 } else { self.breaks[k - 1] };
            let b = self.breaks.get(k).copied().unwrap_or(self.end);
            (a, b, v)
        })
    }
}

/// `Σ |v[k+1] - v[k]|`.
pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Variation of the concatenated datum: `cb` read backwards in time, then `c0`.
///
/// The junction jump `|cb(0+) - c0(0+)|` at the corner is included.
pub fn datum_variation(c0: &PiecewiseConstant, cb: &PiecewiseConstant) -> f64 {
    cb.total_variation() + (cb.first() - c0.first()).abs() + c0.total_variation()
}

/// A named analytic profile of one variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// Linear from `from` at 0 to `to` at `length`, constant afterwards.
    Ramp { from: f64, to: f64, length: f64 },
    /// `before` on `[0, at)`, `after` from `at` on.
    Step { at: f64, before: f64, after: f64 },
    /// Piecewise constant with interior `breaks`.
    Table { breaks: Vec<f64>, values: Vec<f64> },
    /// `mean + amplitude * sin(2π s / period)`.
    Sinusoid { mean: f64, amplitude: f64, period: f64 },
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Ramp { from, to, length } => {
                if s >= length {
                    to
                } else {
                    from + (to - from) * (s / length)
                }
            }
            Profile::Step { at, before, after } => {
                if s < at {
                    before
                } else {
                    after
                }
            }
            Profile::Table { ref breaks, ref values } => values[breaks.partition_point(|&b| b <= s)],
            Profile::Sinusoid { mean, amplitude, period } => mean + amplitude * (TAU * s / period).sin(),
        }
    }

    /// Exact integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match *self {
            Profile::Constant { value } => value * (b - a),
            Profile::Ramp { from, to, length } => {
                let prim = |s: f64| {
                    if s <= length {
                        from * s + 0.5 * (to - from) * s * s / length
                    } else {
                        0.5 * (from + to) * length + to * (s - length)
                    }
                };
                prim(b) - prim(a)
            }
            Profile::Step { at, before, after } => {
                before * (b.min(at) - a.min(at)) + after * (b.max(at) - a.max(at))
            }
            Profile::Table { ref breaks, ref values } => {
                let mut acc = 0.0;
                let mut lo = f64::NEG_INFINITY;
                for (k, &v) in values.iter().enumerate() {
                    let hi = breaks.get(k).copied().unwrap_or(f64::INFINITY);
                    let (l, r) = (lo.max(a), hi.min(b));
                    if r > l {
                        acc += v * (r - l);
                    }
                    lo = hi;
                }
                acc
            }
            Profile::Sinusoid { mean, amplitude, period } => {
                let w = TAU / period;
                mean * (b - a) - amplitude / w * ((w * b).cos() - (w * a).cos())
            }
        }
    }

    /// Bounds of the profile on `[0, end]` (conservative for sinusoids).
    pub fn range(&self, end: f64) -> (f64, f64) {
        match *self {
            Profile::Constant { value } => (value, value),
            Profile::Ramp { from, length, .. } => {
                let at_end = self.eval(end.min(length));
                (from.min(at_end), from.max(at_end))
            }
            Profile::Step { at, before, after } => {
                if at >= end {
                    (before, before)
                } else if at <= 0.0 {
                    (after, after)
                } else {
                    (before.min(after), before.max(after))
                }
            }
            Profile::Table { ref values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            Profile::Sinusoid { mean, amplitude, .. } => (mean - amplitude.abs(), mean + amplitude.abs()),
        }
    }

    /// Whether the profile is Lipschitz (no jumps).
    pub fn is_continuous(&self) -> bool {
        match self {
            Profile::Constant { .. } | Profile::Ramp { .. } | Profile::Sinusoid { .. } => true,
            Profile::Step { before, after, .. } => before == after,
            Profile::Table { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Profile::Ramp { length, .. } if !(*length > 0.0) => Err(domain("ramp length must be positive")),
            Profile::Sinusoid { period, .. } if !(*period > 0.0) => {
                Err(domain("sinusoid period must be positive"))
            }
            Profile::Table { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(domain("a table needs one more value than breaks"));
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(domain("table breaks must increase strictly"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Piecewise-constant version on `(0, end)`.
    ///
    /// Jump data keep their breakpoints exactly; continuous profiles are replaced
    /// by exact averages on `n_cells` equal cells.
    pub fn to_piecewise(&self, end: f64, n_cells: usize) -> Result<PiecewiseConstant> {
        self.check()?;
        match *self {
            Profile::Constant { value } => PiecewiseConstant::constant(value, end),
            Profile::Step { at, before, after } => {
                if at <= 0.0 {
                    PiecewiseConstant::constant(after, end)
                } else if at >= end {
                    PiecewiseConstant::constant(before, end)
                } else {
                    PiecewiseConstant::new(vec![at], vec![before, after], end)
                }
            }
            Profile::Table { ref breaks, ref values } => {
                let first = breaks.partition_point(|&b| b <= 0.0);
                let last = breaks.partition_point(|&b| b < end);
                PiecewiseConstant::new(
                    breaks[first..last].to_vec(),
                    values[first..=last].to_vec(),
                    end,
                )
            }
            Profile::Ramp { .. } | Profile::Sinusoid { .. } => {
                PiecewiseConstant::cell_averages(self, end, n_cells)
            }
        }
    }

    /// The profile as a shareable function.
    pub fn signal(&self) -> Signal {
        let p = self.clone();
        Arc::new(move |s| p.eval(s))
    }
}

/// A function of one variable shared between solver runs.
pub type Signal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Piecewise-constant data for the front tracker.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FtaData {
    /// Initial concentration on `(0, X)`.
    pub c0: PiecewiseConstant,
    /// Boundary concentration on `(0, T)`.
    pub cb: PiecewiseConstant,
    /// Boundary velocity on `(0, T)`.
    pub ub: PiecewiseConstant,
}

impl FtaData {
    pub fn new(c0: PiecewiseConstant, cb: PiecewiseConstant, ub: PiecewiseConstant) -> Result<Self> {
        if cb.end() != ub.end() {
            return Err(domain("cb and ub must share the time horizon"));
        }
        for (name, p) in [("c0", &c0), ("cb", &cb)] {
            if p.min() < 0.0 || p.max() > 1.0 {
                return Err(domain(format!("{name} must take values in [0, 1]")));
            }
        }
        if !(ub.min() > 0.0) {
            return Err(domain("boundary velocity must be positive: ub > 0"));
        }
        Ok(FtaData { c0, cb, ub })
    }

    /// Discretizes analytic profiles: jumps exactly, smooth parts by cell averages.
    pub fn from_profiles(
        c0: &Profile,
        cb: &Profile,
        ub: &Profile,
        t_end: f64,
        x_end: f64,
        n_cells: usize,
    ) -> Result<Self> {
        FtaData::new(
            c0.to_piecewise(x_end, n_cells)?,
            cb.to_piecewise(t_end, n_cells)?,
            ub.to_piecewise(t_end, n_cells)?,
        )
    }

    pub fn t_end(&self) -> f64 {
        self.cb.end()
    }

    pub fn x_end(&self) -> f64 {
        self.c0.end()
    }

    /// Variation of the concatenated concentration datum.
    pub fn datum_variation(&self) -> f64 {
        datum_variation(&self.c0, &self.cb)
    }

    /// `TV ln ub`.
    pub fn log_velocity_variation(&self) -> f64 {
        self.ub.map(f64::ln).total_variation()
    }

    /// Running integral `τ(t) = ∫_0^t ub`.
    pub fn clock(&self, t: f64) -> f64 {
        self.ub.integral(0.0, t)
    }

    /// The same problem in the clock `τ = ∫ ub`, with unit boundary velocity.
    ///
    /// Front slopes `dt/dx = H/u` become `dτ/dx = H/v` with `v = u/ub`, so this
    /// problem carries exactly the concentration and `v` fields of the original.
    pub fn rescaled_to_unit_velocity(&self) -> Result<FtaData> {
        let tau_end = self.clock(self.t_end());
        let breaks: Vec<f64> = self.cb.breaks().iter().map(|&t| self.clock(t)).collect();
        let cb = PiecewiseConstant::new(breaks, self.cb.values().to_vec(), tau_end)?;
        FtaData::new(self.c0.clone(), cb, PiecewiseConstant::constant(1.0, tau_end)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn variation_examples() {
        assert_eq!(total_variation(&[1.0, 1.0, 1.0]), 0.0);
        assert!((total_variation(&[0.2, 0.8, 0.2]) - 1.2).abs() < 1e-15);
        let c0 = PiecewiseConstant::constant(0.7, 1.0).unwrap();
        let cb = PiecewiseConstant::constant(0.3, 2.0).unwrap();
        assert!((datum_variation(&c0, &cb) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn right_continuous_lookup() {
        let p = PiecewiseConstant::new(vec![0.5], vec![1.0, 2.0], 1.0).unwrap();
        assert_eq!(p.value_at(0.25), 1.0);
        assert_eq!(p.value_at(0.5), 2.0);
        assert_eq!(p.integral(0.25, 0.75), 0.75);
        assert!(PiecewiseConstant::new(vec![1.5], vec![1.0, 2.0], 1.0).is_err());
        assert!(PiecewiseConstant::new(vec![0.5], vec![1.0], 1.0).is_err());
    }

    #[test]
    fn sinusoid_averages_are_exact() {
        let p = Profile::Sinusoid { mean: 1.0, amplitude: 0.5, period: 0.1 };
        let pc = p.to_piecewise(1.0, 10).unwrap();
        for &v in pc.values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn table_is_kept_exactly() {
        let p = Profile::Table { breaks: vec![0.3, 0.6], values: vec![0.8, 0.2, 0.5] };
        let pc = p.to_piecewise(1.0, 7).unwrap();
        assert_eq!(pc.breaks(), &[0.3, 0.6]);
        let clipped = p.to_piecewise(0.5, 7).unwrap();
        assert_eq!(clipped.breaks(), &[0.3]);
        assert_eq!(clipped.values(), &[0.8, 0.2]);
    }

    #[test]
    fn rejects_non_positive_velocity() {
        let c = PiecewiseConstant::constant(0.5, 1.0).unwrap();
        let ub = PiecewiseConstant::new(vec![0.5], vec![1.0, 0.0], 1.0).unwrap();
        assert!(FtaData::new(c.clone(), c.clone(), ub).is_err());
    }

    #[test]
    fn clock_rescaling() {
        let c0 = PiecewiseConstant::constant(0.5, 1.0).unwrap();
        let cb = PiecewiseConstant::new(vec![1.0], vec![0.5, 0.2], 2.0).unwrap();
        let ub = PiecewiseConstant::new(vec![0.5], vec![2.0, 1.0], 2.0).unwrap();
        let data = FtaData::new(c0, cb, ub).unwrap();
        let r = data.rescaled_to_unit_velocity().unwrap();
        assert_eq!(r.t_end(), 2.5);
        assert_eq!(r.cb.breaks(), &[1.5]);
    }

    fn profile() -> impl Strategy<Value = Profile> {
        prop_oneof![
            (-1.0f64..1.0).prop_map(|value| Profile::Constant { value }),
            (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..2.0).prop_map(|(from, to, length)| Profile::Ramp { from, to, length }),
            (0.0f64..2.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(at, before, after)| Profile::Step { at, before, after }),
            (-1.0f64..1.0, 0.0f64..1.0, 0.05f64..1.0)
                .prop_map(|(mean, amplitude, period)| Profile::Sinusoid { mean, amplitude, period }),
        ]
    }

    proptest! {
        #[test]
        fn integral_is_additive(p in profile(), a in 0.0f64..2.0, m in 0.0f64..1.0, b in 0.0f64..2.0) {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            let mid = a + m * (b - a);
            let whole = p.integral(a, b);
            prop_assert!((whole - p.integral(a, mid) - p.integral(mid, b)).abs() <= 1e-12);
        }

        #[test]
        fn integral_matches_midpoint_rule(p in profile(), a in 0.0f64..1.0, w in 0.01f64..1.0) {
            prop_assume!(p.is_continuous());
            let b = a + w;
            let n = 4000;
            let h = w / n as f64;
            let approx: f64 = (0..n).map(|k| p.eval(a + (k as f64 + 0.5) * h) * h).sum();
            prop_assert!((approx - p.integral(a, b)).abs() <= 1e-5);
        }
    }
}
