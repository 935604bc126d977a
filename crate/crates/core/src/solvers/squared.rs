use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_design, Augmented};
use crate::error::{Error, Result};
use crate::model::{DesignMatrices, LinearModel};
use crate::priors::ClassPriors;
use crate::risks::GammaWeights;

const MAX_CONDITION: f64 = 1e12;
const BIAS_RIDGE: f64 = 1e-9;

/// Quadratic form of the squared-loss objective over `(w, b)`.
///
/// `J(theta) = theta^T A theta / 4 + c^T theta + 1/4`; the constant is the objective at zero.
pub fn build_squared_system(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_design(design, gamma)?;
    let aug = Augmented::new(design);
    Ok(squared_system(&aug, priors, gamma, lambda))
}

pub(crate) fn squared_system(
    aug: &Augmented,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let k1 = aug.dim();
    let [g1, g2, g3] = gamma.as_array();
    let (ps, pd) = (priors.pi_s(), priors.pi_d());
    // pair members are stacked, so the rows number 2 n_s and 2 n_d
    let rows_s = aug.s.nrows() as f64;
    let rows_d = aug.d.nrows() as f64;
    let nu = aug.u.nrows() as f64;

    let mut a = DMatrix::zeros(k1, k1);
    let mut c = DVector::zeros(k1);
    if g3 != 0.0 {
        a += aug.s.tr_mul(&aug.s) * (g3 * ps / rows_s);
        a += aug.d.tr_mul(&aug.d) * (g3 * pd / rows_d);
    }
    if g1 + g2 != 0.0 {
        a += aug.u.tr_mul(&aug.u) * ((g1 + g2) / nu);
    }
    for j in 0..k1 - 1 {
        a[(j, j)] += 2.0 * lambda;
    }

    let col_sums = |m: &DMatrix<f64>| DVector::from_iterator(m.ncols(), m.column_iter().map(|col| col.sum()));
    if g1 + 0.5 * g3 != 0.0 {
        c -= col_sums(&aug.s) * (ps / rows_s * (g1 + 0.5 * g3));
    }
    if g2 + 0.5 * g3 != 0.0 {
        c += col_sums(&aug.d) * (pd / rows_d * (g2 + 0.5 * g3));
    }
    if g1 - g2 != 0.0 {
        c += col_sums(&aug.u) * ((g1 - g2) / (2.0 * nu));
    }
    c /= priors.gap();
    // symmetrize away rounding from the Gram products
    let a = (&a + a.transpose()) * 0.5;
    (a, c)
}

fn condition(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub(crate) fn solve_system(mut a: DMatrix<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let k1 = a.nrows();
    if condition(&a) > MAX_CONDITION {
        a[(k1 - 1, k1 - 1)] += BIAS_RIDGE;
        if condition(&a) > MAX_CONDITION {
            return Err(Error::SingularSystem);
        }
    }
    let chol = a.cholesky().ok_or(Error::SingularSystem)?;
    Ok(chol.solve(c) * -2.0)
}

/// Closed-form minimizer `theta = -2 A^{-1} c` of the squared-loss objective.
pub fn solve_squared(
    design: &DesignMatrices,
    priors: &ClassPriors,
    gamma: &GammaWeights,
    lambda: f64,
) -> Result<LinearModel> {
    let (a, c) = build_squared_system(design, priors, gamma, lambda)?;
    let theta = solve_system(a, &c)?;
    Ok(LinearModel::from_augmented(theta.as_slice()))
}
