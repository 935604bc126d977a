//! Independent checks on the solvers: plain subgradient descent and a chord-based convexity probe.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_design, objective_theta, Augmented};
use crate::error::Result;
use crate::losses::MarginLoss;
use crate::model::{DesignMatrices, LinearModel};
use crate::priors::ClassPriors;
use crate::risks::GammaWeights;

const CONVEXITY_SLACK: f64 = 1e-9;
const PROBE_RADIUS: f64 = 3.0;

/// `(d l(z, +1) / dz, d l(z, -1) / dz)`, with a random element of the subdifferential at kinks.
fn slopes(loss: MarginLoss, z: f64, rng: &mut Option<&mut ChaCha8Rng>) -> (f64, f64) {
    let mut psi_prime = |m: f64| {
        for &(at, left, right) in loss.kinks() {
            if m == at {
                if let Some(r) = rng.as_deref_mut() {
                    return left + (right - left) * r.random::<f64>();
                }
            }
        }
        loss.psi_derivative(m)
    };
    let pos = psi_prime(z);
    // linear-odds losses have l(z, -1) = l(z, +1) + z exactly; keep the slopes consistent
    let neg = match loss {
        MarginLoss::Squared | MarginLoss::DoubleHinge => pos + 1.0,
        _ => -psi_prime(-z),
    };
    (pos, neg)
}

fn gradient_theta(
    aug: &Augmented,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
    loss: MarginLoss,
    theta: &DVector<f64>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> DVector<f64> {
    let [g1, g2, g3] = gamma.as_array();
    let (pp, pm) = (priors.pi_plus(), priors.pi_minus());
    let (ps, pd, gap) = (priors.pi_s(), priors.pi_d(), priors.gap());
    let scores = aug.scores(theta);
    let mut grad = DVector::zeros(aug.dim());
    let mut accumulate = |x: &nalgebra::DMatrix<f64>, z: &[f64], f: &dyn Fn(f64, f64) -> f64, rng: &mut Option<&mut ChaCha8Rng>| {
        if z.is_empty() {
            return;
        }
        let per = 1.0 / (z.len() as f64 * gap);
        for (i, &zi) in z.iter().enumerate() {
            let (dp, dn) = slopes(loss, zi, rng);
            let coef = per * f(dp, dn);
            if coef != 0.0 {
                grad += x.row(i).transpose() * coef;
            }
        }
    };
    accumulate(&aug.s, &scores.similar, &|dp, dn| g1 * ps * (dp - dn) + g3 * ps * (pp * dp - pm * dn), &mut rng);
    accumulate(&aug.d, &scores.dissimilar, &|dp, dn| -g2 * pd * (dp - dn) + g3 * pd * (pp * dn - pm * dp), &mut rng);
    accumulate(&aug.u, &scores.unlabeled, &|dp, dn| g1 * (pp * dn - pm * dp) + g2 * (pp * dp - pm * dn), &mut rng);
    let k = aug.dim() - 1;
    for j in 0..k {
        grad[j] += lambda * theta[j];
    }
    grad
}

/// Gradient of the objective over `(w, b)`, bias last; right derivatives at kinks.
pub fn objective_gradient(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
    loss: MarginLoss,
    model: &LinearModel,
) -> Result<Vec<f64>> {
    check_design(design, gamma)?;
    let aug = Augmented::new(design);
    let theta = DVector::from_vec(model.to_augmented());
    Ok(gradient_theta(&aug, priors, gamma, lambda, loss, &theta, None).as_slice().to_vec())
}

/// Subgradient descent from zero with steps `c / sqrt(t)`, `c = 1 / (1 + |grad J(0)|)`.
///
/// Returns the iterate with the lowest objective seen. The seed only decides which
/// subgradient is used at kinks.
pub fn solve_subgradient_oracle(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
    loss: MarginLoss,
    steps: usize,
    seed: u64,
) -> Result<LinearModel> {
    check_design(design, gamma)?;
    let aug = Augmented::new(design);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = DVector::zeros(aug.dim());
    let mut best = theta.clone();
    let mut best_value = objective_theta(&aug, priors, gamma, lambda, loss, &theta)?;
    let g0 = gradient_theta(&aug, priors, gamma, lambda, loss, &theta, Some(&mut rng));
    let c = 1.0 / (1.0 + g0.norm());
    let mut grad = g0;
    for t in 1..=steps {
        theta -= &grad * (c / (t as f64).sqrt());
        let value = objective_theta(&aug, priors, gamma, lambda, loss, &theta)?;
        if value < best_value {
            best_value = value;
            best.copy_from(&theta);
        }
        grad = gradient_theta(&aug, priors, gamma, lambda, loss, &theta, Some(&mut rng));
    }
    Ok(LinearModel::from_augmented(best.as_slice()))
}

/// Chord test `f(s a + (1 - s) b) <= s f(a) + (1 - s) f(b) + 1e-9` at `probes` random triples.
pub fn check_convexity_fn(f: impl Fn(&[f64]) -> f64, dim: usize, probes: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.random_range(-PROBE_RADIUS..PROBE_RADIUS)).collect() };
    for _ in 0..probes {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let s: f64 = rng.random();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + (1.0 - s) * y).collect();
        if f(&mid) > s * f(&a) + (1.0 - s) * f(&b) + CONVEXITY_SLACK {
            return false;
        }
    }
    true
}

/// Chord test on the regularized objective over `(w, b)`.
pub fn check_convexity(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
    loss: MarginLoss,
    probes: usize,
    seed: u64,
) -> Result<bool> {
    check_design(design, gamma)?;
    let aug = Augmented::new(design);
    let f = |theta: &[f64]| {
        objective_theta(&aug, priors, gamma, lambda, loss, &DVector::from_row_slice(theta)).unwrap_or(f64::INFINITY)
    };
    Ok(check_convexity_fn(f, aug.dim(), probes, seed))
}
