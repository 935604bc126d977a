//! Minimizers of the regularized objective `J(w) = R_SDU(w) + lambda / 2 |w|^2`.
//!
//! The bias is carried as an extra feature column of ones appended to every design matrix. Its
//! coefficient is never penalized.

mod double_hinge;
mod oracle;
mod qp;
mod sparse;
mod squared;

pub use double_hinge::{build_double_hinge_qp, solve_double_hinge, DoubleHingeQp};
pub use oracle::{check_convexity, check_convexity_fn, objective_gradient, solve_subgradient_oracle};
pub use qp::{solve_qp, solve_qp_from, solve_qp_report, QpProblem, QpSolution};
pub use sparse::SparseMatrix;
pub use squared::{build_squared_system, solve_squared};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::losses::MarginLoss;
use crate::model::{DesignMatrices, LinearModel};
use crate::priors::ClassPriors;
use crate::risks::{sdu_from_scores, GammaWeights, Scores};

/// Knobs shared by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub gamma: GammaWeights,
    pub loss: MarginLoss,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
    pub oracle_steps: usize,
    pub oracle_seed: u64,
}

impl SolverConfig {
    pub fn new(lambda: f64, gamma: GammaWeights, loss: MarginLoss) -> Result<Self> {
        let cfg = Self {
            lambda,
            gamma,
            loss,
            qp_tol: 1e-7,
            qp_max_iter: 500,
            oracle_steps: 10_000,
            oracle_seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::OutOfRange(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.qp_tol > 0.0) {
            return Err(Error::OutOfRange("qp tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Fits a linear model with the exact solver for the configured loss.
pub fn fit(design: &DesignMatrices, priors: &ClassPriors, config: &SolverConfig) -> Result<LinearModel> {
    config.validate()?;
    match config.loss {
        MarginLoss::Squared => solve_squared(design, priors, &config.gamma, config.lambda),
        MarginLoss::DoubleHinge => solve_double_hinge(design, priors, &config.gamma, config.lambda, config),
        other => Err(Error::OutOfRange(format!(
            "no exact solver for the {other} loss; it does not give a convex objective"
        ))),
    }
}

/// Design matrices with the constant bias column appended.
#[derive(Debug, Clone)]
pub(crate) struct Augmented {
    pub s: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub u: DMatrix<f64>,
}

impl Augmented {
    pub fn new(design: &DesignMatrices) -> Self {
        let aug = |m: &DMatrix<f64>| {
            let mut out = m.clone().insert_column(m.ncols(), 1.0);
            if m.nrows() == 0 {
                out = DMatrix::zeros(0, m.ncols() + 1);
            }
            out
        };
        Self {
            s: aug(&design.x_s),
            d: aug(&design.x_d),
            u: aug(&design.x_u),
        }
    }

    /// Number of coefficients including the bias.
    pub fn dim(&self) -> usize {
        self.s.ncols()
    }

    pub fn scores(&self, theta: &DVector<f64>) -> Scores {
        Scores {
            similar: (&self.s * theta).iter().copied().collect(),
            dissimilar: (&self.d * theta).iter().copied().collect(),
            unlabeled: (&self.u * theta).iter().copied().collect(),
        }
    }
}

pub(crate) fn check_design(design: &DesignMatrices, gamma: &GammaWeights) -> Result<()> {
    let k = design.x_s.ncols();
    for m in [&design.x_d, &design.x_u] {
        if m.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k, found: m.ncols() });
        }
    }
    if gamma.needs_similar() && design.x_s.nrows() == 0 {
        return Err(Error::EmptyData("weighted risk needs similar pairs".into()));
    }
    if gamma.needs_dissimilar() && design.x_d.nrows() == 0 {
        return Err(Error::EmptyData("weighted risk needs dissimilar pairs".into()));
    }
    if gamma.needs_unlabeled() && design.x_u.nrows() == 0 {
        return Err(Error::EmptyData("weighted risk needs unlabeled points".into()));
    }
    Ok(())
}

/// Squared norm of the weights, bias excluded.
pub(crate) fn penalty(theta: &DVector<f64>) -> f64 {
    let k = theta.len() - 1;
    theta.rows(0, k).norm_squared()
}

pub(crate) fn objective_theta(
    aug: &Augmented,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
    loss: MarginLoss,
    theta: &DVector<f64>,
) -> Result<f64> {
    let risk = sdu_from_scores(&aug.scores(theta), priors, loss, gamma)?;
    Ok(risk + 0.5 * lambda * penalty(theta))
}

/// `R_SDU(w) + lambda / 2 |w|^2` with the bias left out of the penalty.
pub fn objective_value(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
    loss: MarginLoss,
    model: &LinearModel,
) -> Result<f64> {
    check_design(design, gamma)?;
    if model.weights.len() != design.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: design.feature_dim(),
            found: model.weights.len(),
        });
    }
    let aug = Augmented::new(design);
    let theta = DVector::from_vec(model.to_augmented());
    objective_theta(&aug, priors, gamma, lambda, loss, &theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::make_priors;
    use approx::assert_abs_diff_eq;

    fn design() -> DesignMatrices {
        DesignMatrices {
            x_s: DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0, 0.0, 0.0]),
            x_d: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 0.5]),
            x_u: DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, -1.0, 1.0, 1.0]),
        }
    }

    #[test]
    fn zero_model_objective() {
        let pr = make_priors(0.7).unwrap();
        let g = GammaWeights::new(0.2, 0.3, 0.5).unwrap();
        let v = objective_value(&design(), &pr, &g, 0.1, MarginLoss::Squared, &LinearModel::zeros(2)).unwrap();
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn objective_is_linear_in_lambda() {
        let pr = make_priors(0.7).unwrap();
        let g = GammaWeights::SD;
        let m = LinearModel::new(vec![0.4, -1.2], 3.0);
        let dm = design();
        let a = objective_value(&dm, &pr, &g, 0.1, MarginLoss::DoubleHinge, &m).unwrap();
        let b = objective_value(&dm, &pr, &g, 0.2, MarginLoss::DoubleHinge, &m).unwrap();
        // bias is not penalized
        assert_abs_diff_eq!(b - a, 0.05 * (0.16 + 1.44), epsilon = 1e-12);
    }

    #[test]
    fn missing_data_for_weighted_component() {
        let pr = make_priors(0.7).unwrap();
        let mut dm = design();
        dm.x_u = DMatrix::zeros(0, 2);
        let m = LinearModel::zeros(2);
        assert!(objective_value(&dm, &pr, &GammaWeights::SD, 0.1, MarginLoss::Squared, &m).is_ok());
        assert!(matches!(
            objective_value(&dm, &pr, &GammaWeights::SU, 0.1, MarginLoss::Squared, &m),
            Err(Error::EmptyData(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, GammaWeights::SD, MarginLoss::Squared).is_err());
        assert!(SolverConfig::new(-1.0, GammaWeights::SD, MarginLoss::Squared).is_err());
        let cfg = SolverConfig::new(0.1, GammaWeights::SD, MarginLoss::Hinge).unwrap();
        let pr = make_priors(0.7).unwrap();
        assert!(fit(&design(), &pr, &cfg).is_err());
    }
}
