//! Explicit contact force for a single contact interval `[x0, x1]`.
//!
//! The force `f` is a finite sum of Dirac masses at `X_i = x0 + i` and
//! `Y_i = x0 + p + i`, and the windowed force `g(x) = int_{x-1}^x f` that
//! enters the Euler-Lagrange equation is piecewise constant with two plateau
//! values `g1 < G < g2` (or `g1 = g2 = G` when the contact length is an
//! integer).
//!
//! Weights follow the recurrence
//!
//! ```text
//! f(X_i) + f(Y_i)     = g2
//! f(Y_i) + f(X_{i+1}) = g1,     f(X_0) = g1
//! ```
//!
//! which gives `f(X_i) = g1 (1 - i/P)` and `f(Y_i) = g1 (i + 1)/P`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::PiecewiseConstant;

/// Contact lengths within this distance of an integer take the integer branch.
pub const INTEGER_GUARD: f64 = 1e-9;

/// One Dirac mass of the contact force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub pos: f64,
    #[serde(rename = "w")]
    pub weight: f64,
}

/// How delta weights are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightRule {
    /// Solution of the two-term recurrence.
    #[default]
    Recurrence,
    /// `a_i = (G - i/P) g1`, `b_i = (G + i)/P g1`. Inconsistent with the
    /// recurrence; kept to exercise the verification suite.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactStructure {
    x0: f64,
    x1: f64,
    #[serde(rename = "G")]
    g_total: f64,
    p: f64,
    #[serde(rename = "P")]
    big_p: usize,
    g1: f64,
    g2: f64,
    deltas: Vec<Delta>,
    #[serde(rename = "T")]
    t_len: f64,
}

/// Splits a contact length into `(p, P, integer?)`.
pub fn classify_length(len: f64) -> (f64, usize, bool) {
    let r = len.round();
    if (len - r).abs() < INTEGER_GUARD {
        (0.0, r.max(0.0) as usize, true)
    } else {
        (len - len.floor(), len.ceil() as usize, false)
    }
}

/// Plateau values `(g1, g2)` for a fractional contact length.
pub fn plateau_values(g_total: f64, p: f64, big_p: usize) -> (f64, f64) {
    let pf = big_p as f64;
    let denom = pf + 1.0 - p;
    (g_total * pf / denom, g_total * (pf + 1.0) / denom)
}

impl ContactStructure {
    pub fn build(x0: f64, x1: f64, g_total: f64, t_len: f64) -> Result<Self> {
        Self::build_with(x0, x1, g_total, t_len, WeightRule::Recurrence)
    }

    pub fn build_with(
        x0: f64,
        x1: f64,
        g_total: f64,
        t_len: f64,
        rule: WeightRule,
    ) -> Result<Self> {
        let finite = x0.is_finite() && x1.is_finite() && t_len.is_finite();
        if !finite || x0 < 0.0 || x1 < x0 || x1 + 1.0 > t_len + INTEGER_GUARD {
            return Err(Error::InvalidInterval { x0, x1, t_len });
        }
        if !(g_total >= 0.0) {
            return Err(Error::NegativeForce(g_total));
        }
        let (p, big_p, integer) = classify_length(x1 - x0);
        let (g1, g2, deltas) = if integer {
            let deltas = (0..=big_p)
                .map(|i| Delta {
                    pos: x0 + i as f64,
                    weight: g_total,
                })
                .collect();
            (g_total, g_total, deltas)
        } else {
            let (g1, g2) = plateau_values(g_total, p, big_p);
            let pf = big_p as f64;
            let mut deltas = Vec::with_capacity(2 * big_p);
            for i in 0..big_p {
                let fi = i as f64;
                let (wx, wy) = match rule {
                    WeightRule::Recurrence => (g1 - fi * (g2 - g1), (fi + 1.0) * (g2 - g1)),
                    WeightRule::Printed => ((g_total - fi / pf) * g1, (g_total + fi) / pf * g1),
                };
                deltas.push(Delta {
                    pos: x0 + fi,
                    weight: wx,
                });
                deltas.push(Delta {
                    pos: x0 + p + fi,
                    weight: wy,
                });
            }
            (g1, g2, deltas)
        };
        Ok(ContactStructure {
            x0,
            x1,
            g_total,
            p,
            big_p,
            g1,
            g2,
            deltas,
            t_len,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn g_total(&self) -> f64 {
        self.g_total
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn big_p(&self) -> usize {
        self.big_p
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn g2(&self) -> f64 {
        self.g2
    }

    pub fn deltas(&self) -> &[Delta] {
        &self.deltas
    }

    pub fn t_len(&self) -> f64 {
        self.t_len
    }

    pub fn is_integer_case(&self) -> bool {
        self.p == 0.0
    }

    /// `g` as a piecewise-constant function, plateaus shifted by `beta`.
    pub fn profile_shifted(&self, beta: f64) -> PiecewiseConstant {
        let (x0, x1) = (self.x0, self.x1);
        if self.is_integer_case() {
            return PiecewiseConstant::new(vec![x0, x1 + 1.0], vec![0.0, self.g_total + beta, 0.0]);
        }
        let mut breaks = Vec::with_capacity(2 * self.big_p + 2);
        let mut values = vec![0.0];
        for i in 0..=self.big_p {
            breaks.push(x0 + i as f64);
            values.push(self.g1 + beta);
            breaks.push(x0 + self.p + i as f64);
            values.push(if i < self.big_p { self.g2 + beta } else { 0.0 });
        }
        PiecewiseConstant::new(breaks, values)
    }

    pub fn profile(&self) -> PiecewiseConstant {
        self.profile_shifted(0.0)
    }

    /// Jump points of `g`.
    pub fn jumps(&self) -> Vec<f64> {
        self.profile().breaks().to_vec()
    }

    /// Right-continuous evaluation of `g`.
    pub fn eval_g(&self, x: f64) -> f64 {
        self.profile().eval(x)
    }

    /// Sum of delta weights in the half-open window `(x - 1, x]`.
    pub fn eval_g_window(&self, x: f64) -> f64 {
        self.deltas
            .iter()
            .filter(|d| d.pos > x - 1.0 && d.pos <= x)
            .map(|d| d.weight)
            .sum()
    }

    /// `g` with every Heaviside step replaced by `1/2 + atan(A .)/pi`.
    pub fn smoothed_g(&self, x: f64, steepness: f64) -> f64 {
        self.profile().smoothed(x, steepness)
    }

    /// Structure of the mirrored configuration `x -> T - x`.
    pub fn mirrored(&self) -> Result<Self> {
        let x0 = self.t_len - self.x1 - 1.0;
        let x1 = self.t_len - self.x0 - 1.0;
        Self::build(x0.max(0.0), x1, self.g_total, self.t_len)
    }

    /// Total delta mass.
    pub fn total_mass(&self) -> f64 {
        self.deltas.iter().map(|d| d.weight).sum()
    }

    /// Delta weight at the right end `x1`.
    pub fn weight_at_x1(&self) -> Option<f64> {
        self.deltas
            .iter()
            .find(|d| (d.pos - self.x1).abs() < 1e-9)
            .map(|d| d.weight)
    }

    /// Contact-force arrows: `(x mod 1, turn index, weight)` per delta.
    pub fn force_ladder(&self) -> Vec<(f64, usize, f64)> {
        self.deltas
            .iter()
            .map(|d| {
                let turn = d.pos.floor();
                (d.pos - turn, turn as usize, d.weight)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn integer_case() {
        let s = ContactStructure::build(1.0, 3.0, 2.0, 6.0).unwrap();
        assert!(s.is_integer_case());
        assert_eq!(s.big_p(), 2);
        assert_eq!(
            s.deltas(),
            &[
                Delta {
                    pos: 1.0,
                    weight: 2.0
                },
                Delta {
                    pos: 2.0,
                    weight: 2.0
                },
                Delta {
                    pos: 3.0,
                    weight: 2.0
                }
            ]
        );
        assert_eq!(s.eval_g(2.5), 2.0);
        assert_eq!(s.eval_g(0.99), 0.0);
        assert_eq!(s.eval_g(4.0), 0.0);
        assert!((s.smoothed_g(2.5, 1000.0) - 2.0).abs() < 1e-2);
    }

    #[test]
    fn fractional_case_by_hand() {
        // p = 1/2, P = 2: g1 = 2/2.5, g2 = 3/2.5; recurrence X0 = g1, Y0 = g2 - g1, ...
        let s = ContactStructure::build(0.0, 1.5, 1.0, 4.0).unwrap();
        assert_abs_diff_eq!(s.p(), 0.5);
        assert_eq!(s.big_p(), 2);
        assert_abs_diff_eq!(s.g1(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(s.g2(), 1.2, epsilon = 1e-15);
        let expect = [(0.0, 0.8), (0.5, 0.4), (1.0, 0.4), (1.5, 0.8)];
        assert_eq!(s.deltas().len(), 4);
        for (d, (pos, w)) in s.deltas().iter().zip(expect) {
            assert_abs_diff_eq!(d.pos, pos, epsilon = 1e-15);
            assert_abs_diff_eq!(d.weight, w, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            s.p() * s.g1() + (1.0 - s.p()) * s.g2(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(s.eval_g(0.25), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(s.eval_g(0.75), 1.2, epsilon = 1e-15);
        assert_eq!(s.eval_g(-0.01), 0.0);
        assert_abs_diff_eq!(s.eval_g_window(1.75), 1.2, epsilon = 1e-15);
        assert_eq!(s.eval_g_window(-0.5), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            ContactStructure::build(2.0, 1.0, 1.0, 5.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            ContactStructure::build(0.0, 4.5, 1.0, 5.0),
            Err(Error::InvalidInterval { .. })
        ));
        assert_eq!(
            ContactStructure::build(0.0, 1.0, -1.0, 5.0).unwrap_err(),
            Error::NegativeForce(-1.0)
        );
    }

    #[test]
    fn jump_point_is_midpoint_when_smoothed() {
        let s = ContactStructure::build(0.0, 1.5, 1.0, 4.0).unwrap();
        // at Y_0 = 0.5 the neighbours are g1 and g2; far jumps contribute O(1/(A d))
        let v = s.smoothed_g(0.5, 1e7);
        assert_abs_diff_eq!(v, 0.5 * (s.g1() + s.g2()), epsilon = 1e-6);
    }

    #[test]
    fn single_contact_point() {
        let s = ContactStructure::build(1.2, 1.2, 0.7, 4.0).unwrap();
        assert_eq!(
            s.deltas(),
            &[Delta {
                pos: 1.2,
                weight: 0.7
            }]
        );
        assert_eq!(s.eval_g(1.7), 0.7);
        assert_eq!(s.eval_g(2.3), 0.0);
    }

    #[test]
    fn printed_weights_break_consistency() {
        // the printed weights agree with the recurrence only at G = 1
        let s = ContactStructure::build_with(0.0, 1.5, 2.0, 4.0, WeightRule::Printed).unwrap();
        let bad = (0..100)
            .map(|k| 1.0 + 0.005 + k as f64 * 0.01)
            .any(|x| (s.eval_g_window(x) - s.eval_g(x)).abs() > 1e-6);
        assert!(bad);
    }

    #[test]
    fn json_keys() {
        let s = ContactStructure::build(0.0, 1.5, 1.0, 4.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        for key in ["x0", "x1", "G", "p", "P", "g1", "g2", "deltas"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["deltas"][0].get("pos").is_some() && v["deltas"][0].get("w").is_some());
        let back: ContactStructure = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn force_ladder_layout() {
        let s = ContactStructure::build(0.25, 2.75, 1.0, 5.0).unwrap();
        let ladder = s.force_ladder();
        assert_eq!(ladder.len(), s.deltas().len());
        assert_eq!(ladder[0].1, 0);
        assert_abs_diff_eq!(ladder[0].0, 0.25);
        assert_eq!(ladder.last().unwrap().1, 2);
    }

    fn layout() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (0.0f64..3.0, 0.0f64..6.0, 0.01f64..5.0, 0.0f64..2.0)
            .prop_map(|(x0, len, g, slack)| (x0, x0 + len, g, x0 + len + 1.0 + slack))
    }

    proptest! {
        #[test]
        fn structure_identities((x0, x1, g, t) in layout()) {
            let s = ContactStructure::build(x0, x1, g, t).unwrap();
            prop_assert!((s.p() * s.g1() + (1.0 - s.p()) * s.g2() - g).abs() < 1e-12 * g.max(1.0));
            prop_assert!(s.deltas().iter().all(|d| d.weight > 0.0));
            if !s.is_integer_case() {
                let pf = s.big_p() as f64;
                prop_assert!((s.g2() - (pf + 1.0) / pf * s.g1()).abs() < 1e-12 * g.max(1.0));
                prop_assert!(s.g1() < g && g < s.g2());
                prop_assert!((s.weight_at_x1().unwrap() - s.g1()).abs() < 1e-12 * g.max(1.0));
            }
            // window sums reproduce the plateaus strictly inside each plateau
            let profile = s.profile();
            for (a, b, v) in profile.segments(x0, x1 + 1.0) {
                if b - a > 1e-6 {
                    let mid = 0.5 * (a + b);
                    prop_assert!((s.eval_g_window(mid) - v).abs() < 1e-12 * g.max(1.0));
                }
            }
        }

        #[test]
        fn mirror_swaps_ladders((x0, x1, g, t) in layout()) {
            let s = ContactStructure::build(x0, x1, g, t).unwrap();
            let m = s.mirrored().unwrap();
            prop_assert_eq!(m.deltas().len(), s.deltas().len());
            // mass at position y maps to T - y - 1
            for (d, e) in s.deltas().iter().zip(m.deltas().iter().rev()) {
                prop_assert!((e.pos - (t - d.pos - 1.0)).abs() < 1e-9);
                prop_assert!((e.weight - d.weight).abs() < 1e-9 * g.max(1.0));
            }
        }

        #[test]
        fn integral_of_g((x0, x1, g, t) in layout()) {
            let s = ContactStructure::build(x0, x1, g, t).unwrap();
            // midpoint rule on a fine grid against the plateau bookkeeping
            let n = 200_000;
            let dx = t / n as f64;
            let quad: f64 = (0..n).map(|i| s.eval_g((i as f64 + 0.5) * dx) * dx).sum();
            let (p, big_p) = (s.p(), s.big_p() as f64);
            let exact = if s.is_integer_case() {
                (x1 + 1.0 - x0) * g
            } else {
                (big_p + 1.0) * p * s.g1() + big_p * (1.0 - p) * s.g2()
            };
            prop_assert!((quad - exact).abs() < 4.0 * dx * s.g2() * (2.0 * big_p + 2.0));
        }
    }
}
