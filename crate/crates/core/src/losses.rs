//! Margin losses and the prior-corrected losses used by the pairwise risk estimators.

use std::fmt;
use std::str::FromStr;

use crate::data::Label;
use crate::error::Error;
use crate::priors::ClassPriors;

/// A margin loss `l(z, t) = psi(t z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MarginLoss {
    /// `(t z - 1)^2 / 4`
    Squared,
    /// `max(-t z, max(0, 1/2 - t z / 2))`
    DoubleHinge,
    /// `max(0, 1 - t z)`
    Hinge,
    /// `(1 - t sign(z)) / 2` with `sign(0) = +1`
    ZeroOne,
}

impl MarginLoss {
    pub const ALL: [MarginLoss; 4] = [
        MarginLoss::Squared,
        MarginLoss::DoubleHinge,
        MarginLoss::Hinge,
        MarginLoss::ZeroOne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MarginLoss::Squared => "squared",
            MarginLoss::DoubleHinge => "double_hinge",
            MarginLoss::Hinge => "hinge",
            MarginLoss::ZeroOne => "zero_one",
        }
    }

    /// `psi(m)` evaluated at the margin `m = t z`.
    pub fn psi(self, m: f64) -> f64 {
        match self {
            MarginLoss::Squared => 0.25 * (m - 1.0) * (m - 1.0),
            MarginLoss::DoubleHinge => (-m).max((0.5 - 0.5 * m).max(0.0)),
            MarginLoss::Hinge => (1.0 - m).max(0.0),
            MarginLoss::ZeroOne => {
                if m >= 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn eval(self, z: f64, t: Label) -> f64 {
        match self {
            // the sign is taken of the score, not the margin, so that z = 0 predicts +1
            MarginLoss::ZeroOne => {
                if Label::from_score(z) == t {
                    0.0
                } else {
                    1.0
                }
            }
            _ => self.psi(t.sign() * z),
        }
    }

    /// Derivative of `psi` at `m`, and the right-hand derivative at kinks.
    pub fn psi_derivative(self, m: f64) -> f64 {
        match self {
            MarginLoss::Squared => 0.5 * (m - 1.0),
            MarginLoss::DoubleHinge => {
                if m < -1.0 {
                    -1.0
                } else if m < 1.0 {
                    -0.5
                } else {
                    0.0
                }
            }
            MarginLoss::Hinge => {
                if m < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            MarginLoss::ZeroOne => 0.0,
        }
    }

    /// Margins at which `psi` is not differentiable, with the left and right derivatives there.
    pub fn kinks(self) -> &'static [(f64, f64, f64)] {
        match self {
            MarginLoss::Squared | MarginLoss::ZeroOne => &[],
            MarginLoss::DoubleHinge => &[(-1.0, -1.0, -0.5), (1.0, -0.5, 0.0)],
            MarginLoss::Hinge => &[(1.0, -1.0, 0.0)],
        }
    }

    /// Whether `psi` is convex, which the solvers and convexity checks rely on.
    pub fn is_convex(self) -> bool {
        !matches!(self, MarginLoss::ZeroOne)
    }

    /// Lipschitz constant of `l(., t)` on `|z| <= c_b`.
    pub fn lipschitz(self, c_b: f64) -> f64 {
        match self {
            MarginLoss::Squared => (c_b + 1.0) / 2.0,
            MarginLoss::DoubleHinge | MarginLoss::Hinge => 1.0,
            MarginLoss::ZeroOne => f64::INFINITY,
        }
    }

    /// `sup_t l(c_b, t)`.
    pub fn bound_at(self, c_b: f64) -> f64 {
        self.eval(c_b, Label::Positive)
            .max(self.eval(c_b, Label::Negative))
    }
}

impl fmt::Display for MarginLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarginLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "squared" | "sq" => Ok(MarginLoss::Squared),
            "double_hinge" | "dh" => Ok(MarginLoss::DoubleHinge),
            "hinge" => Ok(MarginLoss::Hinge),
            "zero_one" | "01" => Ok(MarginLoss::ZeroOne),
            other => Err(Error::OutOfRange(format!("unknown loss '{other}'"))),
        }
    }
}

/// Margin loss together with its Lipschitz constant on a bounded score domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginLossSpec {
    pub kind: MarginLoss,
    pub lipschitz_constant: f64,
}

impl MarginLossSpec {
    pub fn new(kind: MarginLoss, c_b: f64) -> Self {
        Self {
            kind,
            lipschitz_constant: kind.lipschitz(c_b),
        }
    }
}

pub fn eval_loss(loss: MarginLoss, z: f64, t: Label) -> f64 {
    loss.eval(z, t)
}

/// `L(z, t) = (pi_+ l(z, t) - pi_- l(z, -t)) / (pi_+ - pi_-)`. May be negative.
pub fn corrected_loss(loss: MarginLoss, priors: &ClassPriors, z: f64, t: Label) -> f64 {
    (priors.pi_plus() * loss.eval(z, t) - priors.pi_minus() * loss.eval(z, t.flip())) / priors.gap()
}

/// `L~(z) = (l(z, +1) - l(z, -1)) / (pi_+ - pi_-)`.
pub fn corrected_loss_tilde(loss: MarginLoss, priors: &ClassPriors, z: f64) -> f64 {
    (loss.eval(z, Label::Positive) - loss.eval(z, Label::Negative)) / priors.gap()
}

/// Checks `l(z, +1) - l(z, -1) = -z` on every grid point to within `1e-12`.
pub fn check_linear_odds_condition(loss: MarginLoss, grid: &[f64]) -> bool {
    !grid.is_empty()
        && grid.iter().all(|&z| {
            (loss.eval(z, Label::Positive) - loss.eval(z, Label::Negative) + z).abs() <= 1e-12
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::make_priors;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use Label::{Negative as N, Positive as P};

    #[test]
    fn squared_values() {
        assert_eq!(eval_loss(MarginLoss::Squared, 1.0, P), 0.0);
        assert_eq!(eval_loss(MarginLoss::Squared, 0.0, P), 0.25);
        assert_eq!(eval_loss(MarginLoss::Squared, 0.0, N), 0.25);
    }

    #[test]
    fn double_hinge_values() {
        assert_eq!(eval_loss(MarginLoss::DoubleHinge, 0.0, P), 0.5);
        assert_eq!(eval_loss(MarginLoss::DoubleHinge, -1.0, P), 1.0);
        assert_eq!(eval_loss(MarginLoss::DoubleHinge, 1.0, P), 0.0);
        assert_eq!(eval_loss(MarginLoss::DoubleHinge, -3.0, P), 3.0);
    }

    #[test]
    fn hinge_values() {
        assert_eq!(eval_loss(MarginLoss::Hinge, 1.0, P), 0.0);
        assert_eq!(eval_loss(MarginLoss::Hinge, 0.0, N), 1.0);
        assert_eq!(eval_loss(MarginLoss::Hinge, 0.5, N), 1.5);
        // max(0, 1 - z) - max(0, 1 + z) is -2z on [-1, 1]
        assert!(check_linear_odds_condition(MarginLoss::Hinge, &[0.0]));
        assert!(!check_linear_odds_condition(MarginLoss::Hinge, &[0.5]));
    }

    #[test]
    fn zero_one_tie() {
        assert_eq!(eval_loss(MarginLoss::ZeroOne, 0.0, P), 0.0);
        assert_eq!(eval_loss(MarginLoss::ZeroOne, 0.0, N), 1.0);
        assert_eq!(eval_loss(MarginLoss::ZeroOne, -0.1, N), 0.0);
    }

    #[test]
    fn corrected_loss_examples() {
        let pr = make_priors(0.7).unwrap();
        assert_abs_diff_eq!(corrected_loss(MarginLoss::Squared, &pr, 0.0, P), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(corrected_loss(MarginLoss::ZeroOne, &pr, 1.0, P), -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(corrected_loss(MarginLoss::ZeroOne, &pr, 1.0, N), 1.75, epsilon = 1e-15);
        for loss in MarginLoss::ALL {
            let z = 0.3;
            let lhs = pr.pi_plus() * corrected_loss(loss, &pr, z, P)
                + pr.pi_minus() * corrected_loss(loss, &pr, z, N);
            assert_abs_diff_eq!(lhs, loss.eval(z, P), epsilon = 1e-12);
        }
    }

    #[test]
    fn corrected_tilde_examples() {
        let pr = make_priors(0.7).unwrap();
        assert_eq!(corrected_loss_tilde(MarginLoss::Squared, &pr, 0.0), 0.0);
        assert_abs_diff_eq!(corrected_loss_tilde(MarginLoss::Squared, &pr, 1.0), -2.5, epsilon = 1e-12);
        for loss in [MarginLoss::Squared, MarginLoss::DoubleHinge] {
            assert_abs_diff_eq!(corrected_loss_tilde(loss, &pr, 0.4), -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_odds_condition() {
        let small = [-2.0, -1.0, 0.0, 1.0, 2.0];
        assert!(check_linear_odds_condition(MarginLoss::Squared, &small));
        assert!(check_linear_odds_condition(MarginLoss::DoubleHinge, &small));
        assert!(!check_linear_odds_condition(MarginLoss::Hinge, &small));
        assert!(!check_linear_odds_condition(MarginLoss::ZeroOne, &small));
        assert!(!check_linear_odds_condition(MarginLoss::Squared, &[]));

        let grid: Vec<f64> = (0..1000).map(|i| -10.0 + 20.0 * i as f64 / 999.0).collect();
        assert!(check_linear_odds_condition(MarginLoss::Squared, &grid));
        assert!(check_linear_odds_condition(MarginLoss::DoubleHinge, &grid));
        assert!(!check_linear_odds_condition(MarginLoss::Hinge, &grid));
    }

    #[test]
    fn lipschitz_and_bound() {
        assert_eq!(MarginLoss::Squared.lipschitz(3.0), 2.0);
        assert_eq!(MarginLoss::DoubleHinge.lipschitz(3.0), 1.0);
        assert_eq!(MarginLoss::Squared.bound_at(3.0), 4.0);
        assert_eq!(MarginLoss::DoubleHinge.bound_at(3.0), 3.0);
        assert_eq!(MarginLoss::DoubleHinge.bound_at(0.5), 0.75);
        assert_eq!(MarginLossSpec::new(MarginLoss::Hinge, 2.0).lipschitz_constant, 1.0);
    }

    #[test]
    fn parse_names() {
        for loss in MarginLoss::ALL {
            assert_eq!(loss.name().parse::<MarginLoss>().unwrap(), loss);
        }
        assert_eq!("double-hinge".parse::<MarginLoss>().unwrap(), MarginLoss::DoubleHinge);
        assert!("logistic".parse::<MarginLoss>().is_err());
    }

    fn priors_strategy() -> impl Strategy<Value = f64> {
        prop_oneof![0.05f64..0.45, 0.55f64..0.95]
    }

    proptest! {
        #[test]
        fn corrected_difference_is_tilde(z in -10.0f64..10.0, p in priors_strategy(), li in 0usize..4) {
            let loss = MarginLoss::ALL[li];
            let pr = make_priors(p).unwrap();
            let diff = corrected_loss(loss, &pr, z, P) - corrected_loss(loss, &pr, z, N);
            let tilde = corrected_loss_tilde(loss, &pr, z);
            prop_assert!((diff - tilde).abs() <= 1e-12 * (1.0 + tilde.abs()));
        }

        #[test]
        fn corrected_mixtures_recover_loss(z in -10.0f64..10.0, p in priors_strategy(), li in 0usize..4) {
            let loss = MarginLoss::ALL[li];
            let pr = make_priors(p).unwrap();
            let lp = corrected_loss(loss, &pr, z, P);
            let ln = corrected_loss(loss, &pr, z, N);
            let tol = 1e-12 * (1.0 + lp.abs() + ln.abs());
            prop_assert!((pr.pi_plus() * lp + pr.pi_minus() * ln - loss.eval(z, P)).abs() <= tol);
            prop_assert!((pr.pi_minus() * lp + pr.pi_plus() * ln - loss.eval(z, N)).abs() <= tol);
        }

        #[test]
        fn convex_losses_are_convex(a in -10.0f64..10.0, b in -10.0f64..10.0, th in 0.0f64..1.0, li in 0usize..3) {
            let loss = MarginLoss::ALL[li];
            let mid = loss.psi(th * a + (1.0 - th) * b);
            prop_assert!(mid <= th * loss.psi(a) + (1.0 - th) * loss.psi(b) + 1e-12);
        }
    }
}
