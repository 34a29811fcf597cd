//! Exact Riemann solver.
//!
//! A Riemann problem pairs a constant state *below* (smaller `t`, the initial
//! line side) with a constant state *above*. Its solution is self-similar in
//! `z = t/x` and always has the same shape: a contact at `z = 0` across which
//! only `u` jumps, then one λ-wave — a shock when `c` drops from below to
//! above, a rarefaction when it rises.
//!
//! States live in `(c, L = ln u)`. The λ-wave curve through a state is
//! `L+ - L- = T(c+, c-)`, given by `-[g]` on the rarefaction branch and by
//! the shock curve `ln((α + h+)/(α + h-))`, `α = [f]/[c] + 1`, otherwise.

use serde::Serialize;

use crate::error::{check_concentration, domain, Error, Result};
use crate::thermo::Model;

/// A constant state `(c, ln u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct State {
    pub c: f64,
    pub log_u: f64,
}

impl State {
    pub fn new(c: f64, log_u: f64) -> State {
        State { c, log_u }
    }

    pub fn from_velocity(c: f64, u: f64) -> Result<State> {
        check_concentration(c)?;
        if !(u > 0.0 && u.is_finite()) {
            return Err(domain(format!("velocity must be positive and finite, got {u}")));
        }
        Ok(State { c, log_u: u.ln() })
    }

    pub fn u(&self) -> f64 {
        self.log_u.exp()
    }

    pub(crate) fn check(&self) -> Result<()> {
        check_concentration(self.c)?;
        if self.log_u.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("log-velocity must be finite, got {}", self.log_u)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum WaveKind {
    Contact,
    Shock,
    /// One step of a discretized rarefaction.
    RareStep,
}

/// A jump between two states travelling along `dt/dx = speed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Wave {
    pub kind: WaveKind,
    pub below: State,
    pub above: State,
    pub speed: f64,
}

impl Wave {
    pub fn is_contact(&self) -> bool {
        self.kind == WaveKind::Contact
    }
}

/// The λ-wave of a Riemann fan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LambdaWave {
    /// Below and above concentrations coincide.
    None,
    Shock { speed: f64 },
    /// A centred rarefaction spanning `z_minus <= z <= z_plus`; `spread = Φ(c+)`.
    Rarefaction { z_minus: f64, z_plus: f64, spread: f64 },
}

/// Self-similar solution of one Riemann problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiemannFan {
    pub below: State,
    pub middle: State,
    pub above: State,
    pub lambda: LambdaWave,
}

impl RiemannFan {
    /// The contact at `z = 0`, possibly of zero strength.
    pub fn contact(&self) -> Wave {
        Wave { kind: WaveKind::Contact, below: self.below, above: self.middle, speed: 0.0 }
    }

    pub fn contact_strength(&self) -> f64 {
        self.middle.log_u - self.below.log_u
    }

    /// State at slope `z = t/x > 0`. On a shock line the upper state is returned.
    pub fn sample(&self, model: &Model, z: f64) -> Result<State> {
        if !(z > 0.0) {
            return Err(domain(format!(
                "fan sampling needs z > 0 (z = 0 is the contact line), got {z}"
            )));
        }
        Ok(match self.lambda {
            LambdaWave::None => self.middle,
            LambdaWave::Shock { speed } => {
                if z < speed {
                    self.middle
                } else {
                    self.above
                }
            }
            LambdaWave::Rarefaction { z_minus, z_plus, spread } => {
                if z <= z_minus {
                    self.middle
                } else if z >= z_plus {
                    self.above
                } else {
                    let target = (z / z_minus).ln().min(spread);
                    let c = invert_spread(model, self.middle.c, self.above.c, target);
                    State { c, log_u: (model.speed_factor(c) / z).ln() }
                }
            }
        })
    }

    /// Contact (unless negligible) followed by the λ-fronts, as the tracker inserts them.
    ///
    /// A contact weaker than [`NEGLIGIBLE_CONTACT`] is dropped and the middle
    /// state is identified with the lower one, so the returned waves chain
    /// exactly from `below` to `above`.
    pub fn fronts(&self, model: &Model, delta: f64) -> Result<Vec<Wave>> {
        let mut fan = *self;
        let mut out = Vec::new();
        let strength = self.contact_strength().abs();
        if strength <= NEGLIGIBLE_CONTACT * (1.0 + self.below.log_u.abs()) {
            fan.middle = fan.below;
        } else {
            out.push(self.contact());
        }
        out.extend(fan.lambda_fronts(model, delta)?);
        Ok(out)
    }

    /// λ-fronts for the tracker: the shock, or the rarefaction cut into steps of width `delta`.
    pub fn lambda_fronts(&self, model: &Model, delta: f64) -> Result<Vec<Wave>> {
        Ok(match self.lambda {
            LambdaWave::None => Vec::new(),
            LambdaWave::Shock { speed } => {
                vec![Wave { kind: WaveKind::Shock, below: self.middle, above: self.above, speed }]
            }
            LambdaWave::Rarefaction { .. } => {
                discretize_rarefaction(model, self.middle, self.above, delta)?
            }
        })
    }
}

/// Relative contact strength below which a contact is treated as absent.
pub const NEGLIGIBLE_CONTACT: f64 = 1e-13;

/// Solves `Φ(C) = target` on `[lo, hi]` with `Φ(C) = ∫_lo^C f''/H`, increasing in `C`.
fn invert_spread(model: &Model, lo: f64, hi: f64, target: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut c = 0.5 * (a + b);
    for _ in 0..200 {
        let r = model.spread(lo, c) - target;
        if r == 0.0 {
            return c;
        }
        if r > 0.0 {
            b = c;
        } else {
            a = c;
        }
        let slope = model.exchange_curvature(c) / model.speed_factor(c);
        let newton = c - r / slope;
        let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (next - c).abs() <= 4.0 * f64::EPSILON * c.abs().max(1e-300) || b - a <= f64::EPSILON {
            return next;
        }
        c = next;
    }
    c
}

/// `T(c_plus, c_minus) = L+ - L-` along the λ-wave curve.
pub fn wave_curve(model: &Model, c_minus: f64, c_plus: f64) -> Result<f64> {
    check_concentration(c_minus)?;
    check_concentration(c_plus)?;
    if c_minus < c_plus {
        Ok(model.log_weight(c_minus) - model.log_weight(c_plus))
    } else if c_minus > c_plus {
        model.shock_curve(c_minus, c_plus)
    } else {
        Ok(0.0)
    }
}

const SHOCK_SPEED_RTOL: f64 = 1e-9;

/// Rankine–Hugoniot slope of a shock from `below` to `above`.
///
/// The slope is computed from both sides; a disagreement beyond round-off
/// means the states are not on one shock curve.
pub fn shock_speed(model: &Model, below: State, above: State) -> Result<f64> {
    below.check()?;
    above.check()?;
    if below.c == above.c {
        return Err(domain("a shock needs distinct concentrations"));
    }
    let alpha = model.shock_alpha(below.c, above.c);
    let from_below = (alpha + model.adsorbed(below.c)) / below.u();
    let from_above = (alpha + model.adsorbed(above.c)) / above.u();
    if !(from_below > 0.0) {
        return Err(Error::NonPositiveShockFactor {
            c_minus: below.c,
            c_plus: above.c,
            value: alpha + model.adsorbed(below.c),
        });
    }
    if (from_below - from_above).abs() > SHOCK_SPEED_RTOL * from_below {
        return Err(Error::Consistency(format!(
            "states ({}, {}) and ({}, {}) are not on one shock curve: slopes {from_below} vs {from_above}",
            below.c, below.log_u, above.c, above.log_u
        )));
    }
    Ok(from_below)
}

/// Exact solution of the Riemann problem between `below` and `above`.
pub fn solve_riemann(model: &Model, below: State, above: State) -> Result<RiemannFan> {
    below.check()?;
    above.check()?;
    let middle = State {
        c: below.c,
        log_u: above.log_u - wave_curve(model, below.c, above.c)?,
    };
    let lambda = if below.c > above.c {
        LambdaWave::Shock { speed: shock_speed(model, middle, above)? }
    } else if below.c < above.c {
        let spread = model.spread(middle.c, above.c);
        let z_plus = model.speed_factor(above.c) / above.u();
        LambdaWave::Rarefaction { z_minus: z_plus * (-spread).exp(), z_plus, spread }
    } else {
        LambdaWave::None
    };
    Ok(RiemannFan { below, middle, above, lambda })
}

/// Cuts the rarefaction from `below` to `above` into `ceil([c]/delta)` steps of equal width.
///
/// Consecutive states follow `[L] = -[g]`; each step travels at λ of its lower
/// state, so speeds increase strictly upward. The end states are copied
/// exactly.
pub fn discretize_rarefaction(model: &Model, below: State, above: State, delta: f64) -> Result<Vec<Wave>> {
    below.check()?;
    above.check()?;
    if !(delta > 0.0) {
        return Err(domain(format!("rarefaction step must be positive, got {delta}")));
    }
    if !(below.c < above.c) {
        return Err(domain("a rarefaction needs c to increase from below to above"));
    }
    let width = above.c - below.c;
    // The small offset keeps exact multiples from rounding up to an extra step.
    let n = ((width / delta - 1e-9).ceil() as usize).max(1);
    let g0 = model.log_weight(below.c);
    let mut states = Vec::with_capacity(n + 1);
    states.push(below);
    for k in 1..n {
        let c = below.c + width * (k as f64 / n as f64);
        states.push(State { c, log_u: below.log_u - (model.log_weight(c) - g0) });
    }
    states.push(above);
    Ok(states
        .windows(2)
        .map(|w| Wave {
            kind: WaveKind::RareStep,
            below: w[0],
            above: w[1],
            speed: model.speed_factor(w[0].c) / w[0].u(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::IsothermModel;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wave_curve_examples() {
        let m = Model::reference_linear();
        let r = wave_curve(&m, 0.2, 0.8).unwrap();
        assert!(close(r, -(1.8f64 / 1.2).ln(), 1e-15));
        // α = c+ + c- = 1 for f = c^2 - c, so S = ln((1 + 0.2)/(1 + 0.8)) is negative of the above.
        let s = wave_curve(&m, 0.8, 0.2).unwrap();
        assert!(close(s, (1.8f64 / 1.2).ln(), 1e-15));
        assert_eq!(wave_curve(&m, 0.4, 0.4).unwrap(), 0.0);
        assert!(wave_curve(&m, 1.2, 0.4).is_err());
    }

    #[test]
    fn pure_contact() {
        let m = Model::reference_linear();
        let fan = solve_riemann(&m, State::new(0.5, 0.0), State::new(0.5, 2f64.ln())).unwrap();
        assert_eq!(fan.lambda, LambdaWave::None);
        assert_eq!(fan.contact_strength(), 2f64.ln());
        assert_eq!(fan.contact().speed, 0.0);
    }

    #[test]
    fn shock_fan_example() {
        let m = Model::reference_linear();
        let below = State::new(0.8, (2.0f64 / 3.0).ln());
        let above = State::new(0.2, 0.0);
        let fan = solve_riemann(&m, below, above).unwrap();
        assert!(close(fan.contact_strength(), 0.0, 1e-15));
        assert!(close(fan.middle.u(), 2.0 / 3.0, 1e-15));
        match fan.lambda {
            LambdaWave::Shock { speed } => assert!(close(speed, 1.8, 1e-14)),
            other => panic!("expected a shock, got {other:?}"),
        }
        assert_eq!(fan.sample(&m, 1.0).unwrap(), fan.middle);
        assert_eq!(fan.sample(&m, 2.0).unwrap(), above);
        assert!(fan.sample(&m, 0.0).is_err());
    }

    #[test]
    fn shock_speed_examples() {
        let m = Model::reference_linear();
        let s = shock_speed(&m, State::new(0.8, (2.0f64 / 3.0).ln()), State::new(0.2, 0.0)).unwrap();
        assert!(close(s, 1.8, 1e-14));
        // α = 1.4, so (α + h+)/u+ = 1.9/1 and the lower velocity is u- = (α + h-)/s = 1.5/1.9.
        let s = shock_speed(&m, State::new(0.9, (1.5f64 / 1.9).ln()), State::new(0.5, 0.0)).unwrap();
        assert!(close(s, 1.9, 1e-14));
        // A state pair off the shock curve is rejected.
        assert!(matches!(
            shock_speed(&m, State::new(0.9, 0.0), State::new(0.5, 0.0)),
            Err(Error::Consistency(_))
        ));
        // Characteristic limit.
        let c = 0.4;
        let mid = State::new(c + 1e-10, 0.0);
        let top = State::new(c, wave_curve(&m, c + 1e-10, c).unwrap());
        assert!(close(shock_speed(&m, mid, top).unwrap(), 1.0 + c, 1e-9));
    }

    #[test]
    fn rarefaction_fan_example() {
        let m = Model::reference_linear();
        let below = State::new(0.2, 1.5f64.ln());
        let above = State::new(0.8, 0.0);
        let fan = solve_riemann(&m, below, above).unwrap();
        assert!(close(fan.contact_strength(), 0.0, 1e-15));
        match fan.lambda {
            LambdaWave::Rarefaction { z_minus, z_plus, spread } => {
                assert!(close(z_minus, 0.8, 1e-14));
                assert!(close(z_plus, 1.8, 1e-14));
                assert!(close(spread, 2.0 * 1.5f64.ln(), 1e-14));
            }
            other => panic!("expected a rarefaction, got {other:?}"),
        }
        let foot = fan.sample(&m, 0.8).unwrap();
        assert!(close(foot.c, 0.2, 1e-14) && close(foot.log_u, 1.5f64.ln(), 1e-14));
        let head = fan.sample(&m, 1.8).unwrap();
        assert!(close(head.c, 0.8, 1e-14) && close(head.u(), 1.0, 1e-14));
        // Interior: C(z) from z = z- (1 + C)^2 / (1 + c-)^2 for this model.
        let z = 1.2;
        let inner = fan.sample(&m, z).unwrap();
        let exact = 1.2 * (z / 0.8f64).sqrt() - 1.0;
        assert!(close(inner.c, exact, 1e-13));
        assert!(close(inner.u(), (1.0 + exact) / z, 1e-13));
    }

    #[test]
    fn rarefaction_steps() {
        let m = Model::reference_linear();
        let below = State::new(0.2, 1.5f64.ln());
        let above = State::new(0.8, 0.0);
        let steps = discretize_rarefaction(&m, below, above, 0.3).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].below, below);
        assert_eq!(steps[1].above, above);
        assert!(close(steps[0].above.c, 0.5, 1e-15));
        assert!(close(steps[0].above.log_u, 1.2f64.ln(), 1e-15));
        assert!(close(steps[0].speed, 0.8, 1e-15));
        assert!(close(steps[1].speed, 1.25, 1e-14));
        assert!(discretize_rarefaction(&m, above, below, 0.3).is_err());
        assert!(discretize_rarefaction(&m, below, above, 0.0).is_err());
    }

    fn linear_model() -> impl Strategy<Value = Model> {
        (0.0f64..3.0, 0.05f64..3.0)
            .prop_map(|(k1, dk)| Model::new(IsothermModel::Linear { k1, k2: k1 + dk }).unwrap())
    }

    fn langmuir_model() -> impl Strategy<Value = Model> {
        (0.2f64..4.0, 0.2f64..4.0, 0.05f64..1.0, 1.1f64..4.0).prop_map(|(q1, k1, r, over)| {
            let k2 = k1 * r;
            Model::new(IsothermModel::BinaryLangmuir { q1, k1, q2: over * q1 * k1 / k2, k2 }).unwrap()
        })
    }

    fn state() -> impl Strategy<Value = State> {
        (0.0f64..=1.0, -1.5f64..1.5).prop_map(|(c, l)| State::new(c, l))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn linear_models_are_temple(m in linear_model(), b in state(), a in state()) {
            let fan = solve_riemann(&m, b, a).unwrap();
            let w = |s: State| s.u() * m.weight(s.c);
            prop_assert!((w(fan.middle) - w(fan.above)).abs() <= 1e-10 * w(fan.above));
        }

        #[test]
        fn shock_speed_agrees_from_both_sides(m in langmuir_model(), cm in 0.0f64..=1.0, cp in 0.0f64..=1.0, l in -1.0f64..1.0) {
            prop_assume!(cm > cp);
            let above = State::new(cp, l);
            let below = State::new(cm, l - wave_curve(&m, cm, cp).unwrap());
            let alpha = m.shock_alpha(cm, cp);
            let s1 = (alpha + m.adsorbed(cm)) / below.u();
            let s2 = (alpha + m.adsorbed(cp)) / above.u();
            prop_assert!((s1 - s2).abs() <= 1e-12 * s1);
            prop_assert!(s1 > 0.0);
        }

        #[test]
        fn liu_condition(m in langmuir_model(), cm in 0.0f64..=1.0, cp in 0.0f64..=1.0) {
            prop_assume!(cm - cp > 1e-6);
            let chord = (m.exchange(cp) - m.exchange(cm)) / (cp - cm);
            for k in 1..20 {
                let c = cp + (cm - cp) * k as f64 / 20.0;
                let partial = (m.exchange(c) - m.exchange(cm)) / (c - cm);
                prop_assert!(chord <= partial + 1e-12);
            }
            prop_assert!(m.shock_alpha(cm, cp) + m.adsorbed(cm) > 0.0);
        }

        #[test]
        fn wave_curve_is_lipschitz(m in langmuir_model(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assume!(a != b);
            let t = wave_curve(&m, a, b).unwrap();
            // max |g'| bounds the rarefaction branch; shocks stay within a small multiple.
            let bound = (0..=100).map(|k| {
                let c = k as f64 / 100.0;
                -(m.isotherms(c).dq1 + m.isotherms(c).dq2) / m.speed_factor(c)
            }).fold(0.0, f64::max);
            prop_assert!(t.abs() <= 2.0 * bound * (a - b).abs() + 1e-14);
        }

        #[test]
        fn fan_sampling_is_monotone_in_concentration(m in langmuir_model(), b in state(), a in state()) {
            let fan = solve_riemann(&m, b, a).unwrap();
            let mut last = fan.middle.c;
            for k in 1..60 {
                let z = 0.05 * k as f64;
                let s = fan.sample(&m, z).unwrap();
                if b.c <= a.c { prop_assert!(s.c >= last - 1e-13); } else { prop_assert!(s.c <= last + 1e-13); }
                last = s.c;
            }
        }

        #[test]
        fn rarefaction_steps_chain(m in langmuir_model(), lo in 0.0f64..0.9, w in 0.01f64..0.5, delta in 0.01f64..0.2) {
            let hi = (lo + w).min(1.0);
            let below = State::new(lo, 0.0);
            let above = State::new(hi, -(m.log_weight(hi) - m.log_weight(lo)));
            let steps = discretize_rarefaction(&m, below, above, delta).unwrap();
            prop_assert_eq!(steps.len(), ((hi - lo) / delta - 1e-9).ceil().max(1.0) as usize);
            for pair in steps.windows(2) {
                prop_assert_eq!(pair[0].above, pair[1].below);
                prop_assert!(pair[0].speed < pair[1].speed);
            }
        }
    }

    #[test]
    fn shock_and_rarefaction_branches_are_tangent() {
        // S(c+, c-) - (g(c-) - g(c+)) = O(|[c]|^3): halving the jump divides the gap by about 8.
        let m = Model::new(IsothermModel::BinaryLangmuir { q1: 1.0, k1: 2.0, q2: 3.0, k2: 1.0 }).unwrap();
        let c = 0.4;
        let gap = |d: f64| {
            let s = wave_curve(&m, c + d, c).unwrap();
            let r = m.log_weight(c + d) - m.log_weight(c);
            (s - r).abs()
        };
        let ratios: Vec<f64> = [0.08, 0.04, 0.02].iter().map(|&d| gap(d) / gap(d / 2.0)).collect();
        for r in ratios {
            assert!((r - 8.0).abs() < 1.0, "ratio {r}");
        }
    }
}
