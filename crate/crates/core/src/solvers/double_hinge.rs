//! Double-hinge objective as a quadratic program over `(w, b)` and per-point slack vectors.
//!
//! Every scored point contributes `a l(z, +1) + b l(z, -1) + e z` to the risk. The loss obeys
//! `l(z, -1) = l(z, +1) + z`, so a negative `a` or `b` is folded into the other coefficient and
//! the linear term. Afterwards every slack enters the objective with a nonnegative weight,
//! which keeps the program bounded below. `a + b >= 0` holds in every block.

use nalgebra::DVector;

use super::qp::{solve_qp_from, QpProblem};
use super::sparse::SparseMatrix;
use super::{check_design, Augmented, SolverConfig};
use crate::error::Result;
use crate::model::{DesignMatrices, LinearModel};
use crate::priors::ClassPriors;
use crate::risks::GammaWeights;

const START_SLACK: f64 = 0.6;
const ZERO_COEF: f64 = 1e-12;

/// A built double-hinge program and the bookkeeping needed to read a model back out.
#[derive(Debug, Clone)]
pub struct DoubleHingeQp {
    pub problem: QpProblem,
    /// The first `n_theta` variables are the weights followed by the bias.
    pub n_theta: usize,
    /// Number of slack vectors per block, in the order similar, dissimilar, unlabeled.
    pub slack_vectors: [usize; 3],
}

impl DoubleHingeQp {
    /// `theta = 0` with every slack at 0.6, strictly inside every constraint.
    pub fn feasible_start(&self) -> DVector<f64> {
        let n = self.problem.n_vars();
        DVector::from_fn(n, |i, _| if i < self.n_theta { 0.0 } else { START_SLACK })
    }

    pub fn extract_model(&self, x: &DVector<f64>) -> LinearModel {
        LinearModel::from_augmented(&x.as_slice()[..self.n_theta])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BlockCoefficients {
    /// weight on the slack bounding `l(z, +1)`
    pos: f64,
    /// weight on the slack bounding `l(z, -1)`
    neg: f64,
    /// weight on the score itself
    lin: f64,
}

fn fold(a: f64, b: f64, e: f64) -> BlockCoefficients {
    let scale = a.abs().max(b.abs());
    let snap = |v: f64| if v.abs() <= ZERO_COEF * scale { 0.0 } else { v };
    let c = if a < 0.0 {
        BlockCoefficients { pos: 0.0, neg: a + b, lin: e - a }
    } else if b < 0.0 {
        BlockCoefficients { pos: a + b, neg: 0.0, lin: e + b }
    } else {
        BlockCoefficients { pos: a, neg: b, lin: e }
    };
    BlockCoefficients { pos: snap(c.pos).max(0.0), neg: snap(c.neg).max(0.0), lin: c.lin }
}

/// Per-point coefficients for the similar, dissimilar and unlabeled blocks.
fn block_coefficients(aug: &Augmented, priors: &ClassPriors, gamma: &GammaWeights) -> [BlockCoefficients; 3] {
    let [g1, g2, g3] = gamma.as_array();
    let (pp, pm) = (priors.pi_plus(), priors.pi_minus());
    let (ps, pd) = (priors.pi_s(), priors.pi_d());
    let gap = priors.gap();
    let per = |rows: usize| if rows == 0 { 0.0 } else { 1.0 / (rows as f64 * gap) };
    let (ws, wd, wu) = (per(aug.s.nrows()), per(aug.d.nrows()), per(aug.u.nrows()));
    [
        fold(g3 * ps * pp * ws, -g3 * ps * pm * ws, -g1 * ps * ws),
        fold(-g3 * pd * pm * wd, g3 * pd * pp * wd, g2 * pd * wd),
        fold((g2 * pp - g1 * pm) * wu, (g1 * pp - g2 * pm) * wu, 0.0),
    ]
}

/// Builds the slack-variable program whose optimal value is the regularized double-hinge objective.
///
/// For a slack vector `xi` bounding `l(z, +1)` the rows are `xi >= 0`, `xi >= 1/2 - z/2` and
/// `xi >= -z`; a slack `eta` bounding `l(z, -1)` gets `eta >= 0`, `eta >= 1/2 + z/2`, `eta >= z`.
/// Slack vectors whose folded weight is zero are left out.
pub fn build_double_hinge_qp(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
) -> Result<DoubleHingeQp> {
    check_design(design, gamma)?;
    let aug = Augmented::new(design);
    let coefs = block_coefficients(&aug, priors, gamma);
    let k1 = aug.dim();
    let blocks = [&aug.s, &aug.d, &aug.u];

    let mut q_theta = DVector::zeros(k1);
    let mut slack_q: Vec<f64> = Vec::new();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut h: Vec<f64> = Vec::new();
    let mut slack_vectors = [0usize; 3];

    for (bi, (x, c)) in blocks.iter().zip(coefs.iter()).enumerate() {
        if c.lin != 0.0 {
            for row in x.row_iter() {
                q_theta += row.transpose() * c.lin;
            }
        }
        // sign = +1 for xi (bounds l(z, +1)), -1 for eta (bounds l(z, -1))
        for (sign, weight) in [(1.0, c.pos), (-1.0, c.neg)] {
            if weight == 0.0 {
                continue;
            }
            slack_vectors[bi] += 1;
            for row in x.row_iter() {
                let var = k1 + slack_q.len();
                slack_q.push(weight);
                let r = h.len();
                triplets.push((r, var, -1.0));
                h.push(0.0);
                for (j, &v) in row.iter().enumerate() {
                    triplets.push((r + 1, j, -0.5 * sign * v));
                    triplets.push((r + 2, j, -sign * v));
                }
                triplets.push((r + 1, var, -1.0));
                h.push(-0.5);
                triplets.push((r + 2, var, -1.0));
                h.push(0.0);
            }
        }
    }

    let n = k1 + slack_q.len();
    let mut q = DVector::zeros(n);
    q.rows_mut(0, k1).copy_from(&q_theta);
    for (i, v) in slack_q.iter().enumerate() {
        q[k1 + i] = *v;
    }
    let p_trip: Vec<(usize, usize, f64)> = (0..k1 - 1).map(|j| (j, j, lambda)).collect();
    let p = SparseMatrix::from_triplets(n, n, &p_trip);
    let g = SparseMatrix::from_triplets(h.len(), n, &triplets);
    let problem = QpProblem::new(p, q, g, DVector::from_vec(h))?;
    Ok(DoubleHingeQp { problem, n_theta: k1, slack_vectors })
}

/// Minimizes the double-hinge objective through its quadratic program.
pub fn solve_double_hinge(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
    config: &SolverConfig,
) -> Result<LinearModel> {
    let built = build_double_hinge_qp(design, priors, gamma, lambda)?;
    let sol = solve_qp_from(&built.problem, &built.feasible_start(), config.qp_tol, config.qp_max_iter)?;
    Ok(built.extract_model(&sol.x))
}
