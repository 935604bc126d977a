//! Class-prior estimation from pair counts and the estimation-error bound calculators.

use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::losses::MarginLoss;
use crate::priors::{ClassPriors, PRIOR_EPS};
use crate::risks::GammaWeights;
use crate::rng::rng_from_seed;

/// Recovers `pi_plus` from the similar-pair fraction by inverting `pi_s = pi_plus^2 + pi_minus^2`.
///
/// Pairs alone cannot tell the classes apart, so `majority_positive` picks the branch.
pub fn estimate_prior(n_s: usize, n_d: usize, majority_positive: bool) -> Result<f64> {
    let total = n_s + n_d;
    if total == 0 {
        return Err(Error::EmptyData("no pairs to estimate the class prior from".into()));
    }
    let pi_s = n_s as f64 / total as f64;
    let root = (2.0 * pi_s - 1.0).max(0.0).sqrt();
    let pi_plus = if majority_positive { 0.5 * (1.0 + root) } else { 0.5 * (1.0 - root) };
    if (2.0 * pi_plus - 1.0).abs() <= PRIOR_EPS {
        return Err(Error::DegeneratePrior(pi_plus));
    }
    Ok(pi_plus)
}

/// Constants entering the bounds: Rademacher constant, Lipschitz constant, loss bound,
/// confidence and model bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c_f: f64,
    pub rho: f64,
    pub c_ell: f64,
    pub delta: f64,
    pub c_b: f64,
}

impl BoundConstants {
    pub fn new(c_f: f64, rho: f64, c_ell: f64, delta: f64, c_b: f64) -> Result<Self> {
        // c_f = 0 and c_ell = 0 are allowed so single terms of the factor can be isolated
        let ok = c_f >= 0.0 && rho > 0.0 && c_ell >= 0.0 && delta > 0.0 && delta < 1.0 && c_b > 0.0;
        if !ok || ![c_f, rho, c_ell, c_b].iter().all(|v| v.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "invalid bound constants c_f={c_f} rho={rho} c_ell={c_ell} delta={delta} c_b={c_b}"
            )));
        }
        Ok(Self { c_f, rho, c_ell, delta, c_b })
    }

    /// Constants for `loss` on models bounded by `c_b`, with `rho` and `c_ell` from [`loss_constants`].
    pub fn for_loss(loss: MarginLoss, c_f: f64, delta: f64, c_b: f64) -> Result<Self> {
        let (rho, c_ell) = loss_constants(loss, c_b)?;
        Self::new(c_f, rho, c_ell, delta, c_b)
    }
}

/// `(rho, c_ell)` for a loss on scores bounded by `c_b`.
pub fn loss_constants(loss: MarginLoss, c_b: f64) -> Result<(f64, f64)> {
    if !(c_b > 0.0 && c_b.is_finite()) {
        return Err(Error::OutOfRange(format!("model bound must be positive, got {c_b}")));
    }
    match loss {
        MarginLoss::Squared => Ok(((c_b + 1.0) / 2.0, 0.25 * (c_b + 1.0) * (c_b + 1.0))),
        MarginLoss::DoubleHinge => Ok((1.0, c_b.max(0.5 + 0.5 * c_b))),
        MarginLoss::Hinge => Ok((1.0, 1.0 + c_b)),
        MarginLoss::ZeroOne => Err(Error::OutOfRange("the zero-one loss is not Lipschitz".into())),
    }
}

/// `(4 rho C_F + sqrt(2 C_ell^2 log(v / delta))) / |pi_plus - pi_minus|` with `v` 8 or 12.
pub fn bound_factor(consts: &BoundConstants, priors: &ClassPriors, variants: u32) -> Result<f64> {
    if variants != 8 && variants != 12 {
        return Err(Error::OutOfRange(format!("log argument must be 8 or 12, got {variants}")));
    }
    let tail = (2.0 * consts.c_ell * consts.c_ell * (variants as f64 / consts.delta).ln()).sqrt();
    Ok((4.0 * consts.rho * consts.c_f + tail) / priors.gap().abs())
}

/// The three single-risk bounds sharing one factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub v_su: f64,
    pub v_du: f64,
    pub v_sd: f64,
    pub c_factor: f64,
    pub sd_le_su: bool,
    pub du_le_su: bool,
}

fn require_counts(counts: &[(usize, &str)]) -> Result<()> {
    for &(n, what) in counts {
        if n == 0 {
            return Err(Error::EmptyData(format!("bound needs at least one {what}")));
        }
    }
    Ok(())
}

fn inv_sqrt(n: usize) -> f64 {
    1.0 / (n as f64).sqrt()
}

/// Bounds from the factor `c` directly, for callers that fix it instead of the constants.
pub fn bounds_with_factor(c: f64, priors: &ClassPriors, n_s: usize, n_d: usize, n_u: usize) -> Result<BoundReport> {
    require_counts(&[(n_s, "similar pair"), (n_d, "dissimilar pair"), (n_u, "unlabeled point")])?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::OutOfRange(format!("bound factor must be nonnegative, got {c}")));
    }
    let s = priors.pi_s() * inv_sqrt(2 * n_s);
    let d = priors.pi_d() * inv_sqrt(2 * n_d);
    let u = inv_sqrt(n_u);
    let v_su = c * (2.0 * s + u);
    let v_du = c * (2.0 * d + u);
    let v_sd = c * (s + d);
    Ok(BoundReport { v_su, v_du, v_sd, c_factor: c, sd_le_su: v_sd <= v_su, du_le_su: v_du <= v_su })
}

pub fn bounds_su_du_sd(
    consts: &BoundConstants,
    priors: &ClassPriors,
    n_s: usize,
    n_d: usize,
    n_u: usize,
) -> Result<BoundReport> {
    bounds_with_factor(bound_factor(consts, priors, 8)?, priors, n_s, n_d, n_u)
}

/// Bound for the weighted risk from its factor `c'`.
pub fn bound_sdu_with_factor(
    c: f64,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    n_s: usize,
    n_d: usize,
    n_u: usize,
) -> Result<f64> {
    let [g1, g2, g3] = gamma.as_array();
    let (pp, pm) = (priors.pi_plus(), priors.pi_minus());
    let cs = 2.0 * g1 + g3;
    let cd = 2.0 * g2 + g3;
    let cu = (g1 * pm - g2 * pp).abs() + (g1 * pp - g2 * pm).abs();
    let mut total = 0.0;
    for (coef, n, scale, what) in [
        (cs, n_s, priors.pi_s(), "similar pair"),
        (cd, n_d, priors.pi_d(), "dissimilar pair"),
    ] {
        if coef != 0.0 {
            require_counts(&[(n, what)])?;
            total += coef * scale * inv_sqrt(2 * n);
        }
    }
    if cu != 0.0 {
        require_counts(&[(n_u, "unlabeled point")])?;
        total += cu * inv_sqrt(n_u);
    }
    Ok(c * total)
}

pub fn bound_sdu(
    consts: &BoundConstants,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    n_s: usize,
    n_d: usize,
    n_u: usize,
) -> Result<f64> {
    bound_sdu_with_factor(bound_factor(consts, priors, 12)?, priors, gamma, n_s, n_d, n_u)
}

/// Chernoff bound on `P(n_d <= n_sd pi_d^2 / (pi_s^2 + pi_d^2))` for `n_d ~ Binomial(n_sd, pi_d)`,
/// the event under which the single-risk bound ordering can fail.
pub fn chernoff_violation_bound(n_sd: usize, priors: &ClassPriors) -> f64 {
    let (ps, pd) = (priors.pi_s(), priors.pi_d());
    let shortfall = 1.0 - pd / (ps * ps + pd * pd);
    (-(n_sd as f64) * pd / (2.0 * (1.0 - pd)) * shortfall * shortfall).exp()
}

/// Empirical frequency of the violation event over `trials` binomial draws, with the bound.
pub fn validate_corollary_monte_carlo(n_sd: usize, priors: &ClassPriors, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::OutOfRange("need at least one Monte Carlo trial".into()));
    }
    let (ps, pd) = (priors.pi_s(), priors.pi_d());
    let threshold = n_sd as f64 * pd * pd / (ps * ps + pd * pd);
    let binom = Binomial::new(n_sd as u64, pd).map_err(|e| Error::OutOfRange(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let hits = (0..trials).filter(|_| binom.sample(&mut rng) as f64 <= threshold).count();
    Ok((hits as f64 / trials as f64, chernoff_violation_bound(n_sd, priors)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::make_priors;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Constants with `C_F = 0` and a tail term of exactly 0.4.
    fn unit_consts() -> BoundConstants {
        let delta = 0.05;
        let c_ell = 0.4 / (2.0 * (8.0f64 / delta).ln()).sqrt();
        BoundConstants::new(0.0, 1.0, c_ell, delta, 1.0).unwrap()
    }

    #[test]
    fn prior_estimates() {
        assert_abs_diff_eq!(estimate_prior(58, 42, true).unwrap(), 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(estimate_prior(70, 30, true).unwrap(), 0.5 * (1.0 + 0.4f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(estimate_prior(70, 30, true).unwrap(), 0.81623, epsilon = 1e-5);
        assert_abs_diff_eq!(estimate_prior(58, 42, false).unwrap(), 0.3, epsilon = 1e-12);
        assert!(matches!(estimate_prior(50, 50, true), Err(Error::DegeneratePrior(_))));
        assert!(matches!(estimate_prior(40, 60, true), Err(Error::DegeneratePrior(_))));
        assert!(matches!(estimate_prior(0, 0, true), Err(Error::EmptyData(_))));
    }

    #[test]
    fn prior_round_trip_at_large_n() {
        let n = 1_000_000usize;
        for p in [0.6, 0.7, 0.8, 0.9] {
            let pr = make_priors(p).unwrap();
            let ns = (n as f64 * pr.pi_s()).round() as usize;
            assert_abs_diff_eq!(estimate_prior(ns, n - ns, true).unwrap(), p, epsilon = 0.01);
        }
    }

    #[test]
    fn unit_factor() {
        let pr = make_priors(0.7).unwrap();
        assert_abs_diff_eq!(bound_factor(&unit_consts(), &pr, 8).unwrap(), 1.0, epsilon = 1e-12);
        assert!(bound_factor(&unit_consts(), &pr, 10).is_err());
    }

    #[test]
    fn factor_monotone_in_delta_and_gap() {
        let pr = make_priors(0.7).unwrap();
        let c = BoundConstants::new(1.0, 1.0, 1.0, 0.1, 1.0).unwrap();
        let half = BoundConstants { delta: 0.05, ..c };
        assert!(bound_factor(&half, &pr, 8).unwrap() > bound_factor(&c, &pr, 8).unwrap());
        let near = make_priors(0.5 + 1e-5).unwrap();
        assert!(bound_factor(&c, &near, 8).unwrap() > 1e4 * bound_factor(&c, &pr, 8).unwrap());
    }

    #[test]
    fn su_bound_example() {
        let pr = make_priors(0.7).unwrap();
        let r = bounds_su_du_sd(&unit_consts(), &pr, 100, 100, 500).unwrap();
        assert_abs_diff_eq!(r.v_su, 1.16 / 200f64.sqrt() + 1.0 / 500f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.v_su, 0.12674, epsilon = 1e-5);
        assert!(r.sd_le_su && r.du_le_su);
        let far = bounds_su_du_sd(&unit_consts(), &pr, 100, 100, usize::MAX / 4).unwrap();
        assert_abs_diff_eq!(far.v_su, 1.16 / 200f64.sqrt(), epsilon = 1e-8);
        assert!(matches!(bounds_su_du_sd(&unit_consts(), &pr, 0, 1, 1), Err(Error::EmptyData(_))));
    }

    #[test]
    fn sdu_reduces_to_single_risks() {
        let pr = make_priors(0.7).unwrap();
        let c = 1.3;
        let single = bounds_with_factor(c, &pr, 40, 60, 300).unwrap();
        let su = bound_sdu_with_factor(c, &pr, &GammaWeights::SU, 40, 60, 300).unwrap();
        let du = bound_sdu_with_factor(c, &pr, &GammaWeights::DU, 40, 60, 300).unwrap();
        let sd = bound_sdu_with_factor(c, &pr, &GammaWeights::SD, 40, 60, 300).unwrap();
        assert_abs_diff_eq!(su, single.v_su, epsilon = 1e-12);
        assert_abs_diff_eq!(du, single.v_du, epsilon = 1e-12);
        assert_abs_diff_eq!(sd, single.v_sd, epsilon = 1e-12);
        // the unlabeled count is irrelevant when its coefficient vanishes
        assert!(bound_sdu_with_factor(c, &pr, &GammaWeights::SD, 40, 60, 0).is_ok());
    }

    #[test]
    fn sdu_uses_twelve() {
        let pr = make_priors(0.7).unwrap();
        let k = BoundConstants::new(0.5, 1.0, 1.0, 0.1, 1.0).unwrap();
        let g = GammaWeights::new(0.2, 0.5, 0.3).unwrap();
        let direct = bound_sdu(&k, &pr, &g, 10, 20, 30).unwrap();
        let via = bound_sdu_with_factor(bound_factor(&k, &pr, 12).unwrap(), &pr, &g, 10, 20, 30).unwrap();
        assert_eq!(direct, via);
    }

    #[test]
    fn chernoff_values() {
        let pr = make_priors(0.7).unwrap();
        let expect = (-200.0 * 0.42 / (2.0 * 0.58) * (1.0 - 0.42 / (0.58f64 * 0.58 + 0.42 * 0.42)).powi(2)).exp();
        assert_abs_diff_eq!(chernoff_violation_bound(200, &pr), expect, epsilon = 1e-12);
        assert_eq!(chernoff_violation_bound(0, &pr), 1.0);
        assert!(chernoff_violation_bound(1, &pr) < 1.0);
        assert!(chernoff_violation_bound(400, &pr) < chernoff_violation_bound(200, &pr));
    }

    #[test]
    fn monte_carlo_within_bound() {
        let pr = make_priors(0.7).unwrap();
        let trials = 100_000;
        let (rate, bound) = validate_corollary_monte_carlo(500, &pr, trials, 17).unwrap();
        assert!(rate <= bound + 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt());
        assert_eq!(validate_corollary_monte_carlo(500, &pr, 1000, 3).unwrap(), validate_corollary_monte_carlo(500, &pr, 1000, 3).unwrap());
        let rare = make_priors(0.999).unwrap();
        let (r, _) = validate_corollary_monte_carlo(100_000, &rare, 1000, 1).unwrap();
        assert!(r <= 0.01);
    }

    #[test]
    fn loss_constant_helpers() {
        assert_eq!(loss_constants(MarginLoss::Squared, 1.0).unwrap(), (1.0, 1.0));
        assert_eq!(loss_constants(MarginLoss::DoubleHinge, 3.0).unwrap(), (1.0, 3.0));
        assert_eq!(loss_constants(MarginLoss::DoubleHinge, 0.5).unwrap(), (1.0, 0.75));
        assert!(loss_constants(MarginLoss::ZeroOne, 1.0).is_err());
        let k = BoundConstants::for_loss(MarginLoss::Squared, 1.0, 0.1, 3.0).unwrap();
        assert_eq!((k.rho, k.c_ell), (2.0, 4.0));
    }

    #[test]
    fn ordering_over_grid() {
        for p in [0.6, 0.7, 0.8, 0.9] {
            let pr = make_priors(p).unwrap();
            for n in [10, 100, 1000] {
                for nu in [100, 1000] {
                    let r = bounds_with_factor(1.0, &pr, n, n, nu).unwrap();
                    let s = pr.pi_s() / (2.0 * n as f64).sqrt();
                    let d = pr.pi_d() / (2.0 * n as f64).sqrt();
                    assert!(s > d);
                    assert_abs_diff_eq!(r.v_su - r.v_sd, s - d + 1.0 / (nu as f64).sqrt(), epsilon = 1e-12);
                    assert!(r.sd_le_su && r.du_le_su);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn branches_reflect(ns in 0usize..1000, nd in 0usize..1000) {
            prop_assume!(ns + nd > 0);
            if let (Ok(a), Ok(b)) = (estimate_prior(ns, nd, true), estimate_prior(ns, nd, false)) {
                prop_assert!((a + b - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn bounds_affine_in_c_f(c_f in 0.0f64..5.0, p in 0.55f64..0.95) {
            // the factor is affine in C_F, linear once the tail term is switched off
            let pr = make_priors(p).unwrap();
            let k = |c: f64| BoundConstants::new(c, 1.0, 0.0, 0.1, 1.0).unwrap();
            let a = bounds_su_du_sd(&k(c_f), &pr, 30, 40, 50).unwrap();
            let b = bounds_su_du_sd(&k(2.0 * c_f), &pr, 30, 40, 50).unwrap();
            prop_assert!((b.v_su - 2.0 * a.v_su).abs() <= 1e-12 * (1.0 + b.v_su));
            prop_assert!((b.v_sd - 2.0 * a.v_sd).abs() <= 1e-12 * (1.0 + b.v_sd));
        }
    }
}
