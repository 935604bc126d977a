use crate::error::{Error, Result};

/// Priors closer than this to a balanced split are rejected.
pub const PRIOR_EPS: f64 = 1e-6;

/// Class priors and the similar/dissimilar pair proportions they induce.
///
/// `pi_s = pi_plus^2 + pi_minus^2` is the probability that two independent draws share a label
/// and `pi_d = 2 pi_plus pi_minus` the probability that they differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPriors {
    pi_plus: f64,
    pi_minus: f64,
    pi_s: f64,
    pi_d: f64,
}

impl ClassPriors {
    pub fn new(pi_plus: f64) -> Result<Self> {
        if !(pi_plus > 0.0 && pi_plus < 1.0) {
            return Err(Error::OutOfRange(format!(
                "class prior must lie in (0, 1), got {pi_plus}"
            )));
        }
        if (2.0 * pi_plus - 1.0).abs() <= PRIOR_EPS {
            return Err(Error::DegeneratePrior(pi_plus));
        }
        let pi_minus = 1.0 - pi_plus;
        Ok(Self {
            pi_plus,
            pi_minus,
            pi_s: pi_plus * pi_plus + pi_minus * pi_minus,
            pi_d: 2.0 * pi_plus * pi_minus,
        })
    }

    pub fn pi_plus(&self) -> f64 {
        self.pi_plus
    }

    pub fn pi_minus(&self) -> f64 {
        self.pi_minus
    }

    pub fn pi_s(&self) -> f64 {
        self.pi_s
    }

    pub fn pi_d(&self) -> f64 {
        self.pi_d
    }

    /// `pi_plus - pi_minus`, never zero.
    pub fn gap(&self) -> f64 {
        self.pi_plus - self.pi_minus
    }
}

pub fn make_priors(pi_plus: f64) -> Result<ClassPriors> {
    ClassPriors::new(pi_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn seventy_thirty() {
        let p = make_priors(0.7).unwrap();
        assert_abs_diff_eq!(p.pi_minus(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(p.pi_s(), 0.58, epsilon = 1e-15);
        assert_abs_diff_eq!(p.pi_d(), 0.42, epsilon = 1e-15);
    }

    #[test]
    fn ninety_ten() {
        let p = make_priors(0.9).unwrap();
        assert_abs_diff_eq!(p.pi_s(), 0.82, epsilon = 1e-15);
        assert_abs_diff_eq!(p.pi_d(), 0.18, epsilon = 1e-15);
    }

    #[test]
    fn balanced_prior_is_degenerate() {
        assert_eq!(make_priors(0.5), Err(Error::DegeneratePrior(0.5)));
        assert!(matches!(make_priors(0.5 + 1e-7), Err(Error::DegeneratePrior(_))));
        assert!(make_priors(0.5 + 1e-5).is_ok());
    }

    #[test]
    fn out_of_range() {
        for p in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(make_priors(p), Err(Error::OutOfRange(_))));
        }
    }

    proptest! {
        #[test]
        fn pair_proportion_identities(p in 0.001f64..0.999) {
            prop_assume!((2.0 * p - 1.0).abs() > 1e-3);
            let pr = make_priors(p).unwrap();
            prop_assert!((pr.pi_plus() + pr.pi_minus() - 1.0).abs() <= 1e-12);
            prop_assert!((pr.pi_s() + pr.pi_d() - 1.0).abs() <= 1e-12);
            let sq = (2.0 * p - 1.0).powi(2);
            prop_assert!((pr.pi_s() - pr.pi_d() - sq).abs() <= 1e-12);
        }
    }
}
