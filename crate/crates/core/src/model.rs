//! Feature maps, the linear model `f(x) = w'phi(x) + b` and stacked design matrices.

use nalgebra::DMatrix;

use crate::data::{Label, LabeledDataset, PairSet, UnlabeledSet};
use crate::error::{Error, Result};

/// The fixed feature map `phi`.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    Identity { dim: usize },
    /// Per-feature z-scoring with statistics frozen from training data.
    Standardize { mean: Vec<f64>, scale: Vec<f64> },
}

impl FeatureMap {
    pub fn identity(dim: usize) -> Self {
        FeatureMap::Identity { dim }
    }

    pub fn standardize(mean: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if mean.len() != scale.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: scale.len(),
            });
        }
        if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::OutOfRange("standardization scale must be positive".into()));
        }
        Ok(FeatureMap::Standardize { mean, scale })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Standardize { mean, .. } => mean.len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.input_dim()
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Writes `phi(x)` into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(x)?;
        match self {
            FeatureMap::Identity { .. } => out.copy_from_slice(x),
            FeatureMap::Standardize { mean, scale } => {
                for (o, ((v, m), s)) in out.iter_mut().zip(x.iter().zip(mean).zip(scale)) {
                    *o = (v - m) / s;
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }
}

/// Fits a standardizing map on the given points.
///
/// Uses the population (divisor `n`) standard deviation. Zero-variance features get scale 1, so
/// they are only centered.
pub fn fit_standardizer_points(points: &[Vec<f64>]) -> Result<FeatureMap> {
    if points.len() < 2 {
        return Err(Error::EmptyData(
            "standardization needs at least two points".into(),
        ));
    }
    let d = crate::data::common_dim(points.iter())?.unwrap_or(0);
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for p in points {
        for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            // relative cutoff so that round-off on constant columns does not count as variance
            if sd > 1e-12 * (1.0 + mean_abs_bound(&mean)) {
                sd
            } else {
                1.0
            }
        })
        .collect();
    FeatureMap::standardize(mean, scale)
}

fn mean_abs_bound(mean: &[f64]) -> f64 {
    mean.iter().fold(0.0f64, |a, m| a.max(m.abs()))
}

pub fn fit_standardizer(data: &LabeledDataset) -> Result<FeatureMap> {
    fit_standardizer_points(&data.points())
}

/// Linear scoring function over a feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim], 0.0)
    }

    /// Builds a model from a coefficient vector whose last entry is the bias.
    pub fn from_augmented(theta: &[f64]) -> Self {
        let (w, b) = theta.split_at(theta.len() - 1);
        Self::new(w.to_vec(), b[0])
    }

    pub fn to_augmented(&self) -> Vec<f64> {
        let mut theta = self.weights.clone();
        theta.push(self.bias);
        theta
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn score_features(&self, phi: &[f64]) -> f64 {
        self.weights.iter().zip(phi).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// `w'phi(x) + b`.
pub fn predict(model: &LinearModel, map: &FeatureMap, x: &[f64]) -> Result<f64> {
    if model.weights.len() != map.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.output_dim(),
            found: model.weights.len(),
        });
    }
    let phi = map.apply(x)?;
    Ok(model.score_features(&phi))
}

/// Sign of [`predict`], with a zero score mapped to the positive class.
pub fn classify(model: &LinearModel, map: &FeatureMap, x: &[f64]) -> Result<Label> {
    predict(model, map, x).map(Label::from_score)
}

/// Feature rows for the similar members, dissimilar members and unlabeled points.
///
/// Pair rows come in pair order, first member then second member.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub x_s: DMatrix<f64>,
    pub x_d: DMatrix<f64>,
    pub x_u: DMatrix<f64>,
}

impl DesignMatrices {
    pub fn n_similar(&self) -> usize {
        self.x_s.nrows() / 2
    }

    pub fn n_dissimilar(&self) -> usize {
        self.x_d.nrows() / 2
    }

    pub fn n_unlabeled(&self) -> usize {
        self.x_u.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.x_s.ncols()
    }
}

fn map_rows<'a>(
    rows: impl ExactSizeIterator<Item = &'a Vec<f64>>,
    map: &FeatureMap,
) -> Result<DMatrix<f64>> {
    let k = map.output_dim();
    let n = rows.len();
    let mut buf = vec![0.0; k];
    let mut m = DMatrix::zeros(n, k);
    for (i, x) in rows.enumerate() {
        map.apply_into(x, &mut buf)?;
        for (j, v) in buf.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

pub fn build_design_matrices(
    pairs: &PairSet,
    unlabeled: &UnlabeledSet,
    map: &FeatureMap,
) -> Result<DesignMatrices> {
    let stack = |ps: &[crate::data::PairExample]| {
        let rows: Vec<&Vec<f64>> = ps.iter().flat_map(|p| [&p.first, &p.second]).collect();
        map_rows(rows.into_iter(), map)
    };
    Ok(DesignMatrices {
        x_s: stack(&pairs.similar)?,
        x_d: stack(&pairs.dissimilar)?,
        x_u: map_rows(unlabeled.points.iter(), map)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PairExample;
    use approx::assert_abs_diff_eq;

    fn pair(a: &[f64], b: &[f64]) -> PairExample {
        PairExample::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn zero_model_scores_zero() {
        let m = LinearModel::zeros(3);
        let map = FeatureMap::identity(3);
        assert_eq!(predict(&m, &map, &[4.0, -1.0, 9.0]).unwrap(), 0.0);
    }

    #[test]
    fn identity_dot_product() {
        let m = LinearModel::new(vec![1.0, 0.0], 0.5);
        let map = FeatureMap::identity(2);
        assert_abs_diff_eq!(predict(&m, &map, &[2.0, 7.0]).unwrap(), 2.5);
    }

    #[test]
    fn standardized_prediction() {
        let m = LinearModel::new(vec![1.0, 1.0], 0.0);
        let map = FeatureMap::standardize(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
        // (3-1)/2 + (5-1)/2
        assert_abs_diff_eq!(predict(&m, &map, &[3.0, 5.0]).unwrap(), 3.0);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let m = LinearModel::zeros(2);
        let map = FeatureMap::identity(2);
        assert!(matches!(
            predict(&m, &map, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(classify(&m, &FeatureMap::identity(3), &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn classify_sign_and_tie() {
        let map = FeatureMap::identity(1);
        let at = |b: f64| classify(&LinearModel::new(vec![0.0], b), &map, &[1.0]).unwrap();
        assert_eq!(at(0.3), Label::Positive);
        assert_eq!(at(-0.3), Label::Negative);
        assert_eq!(at(0.0), Label::Positive);
    }

    #[test]
    fn standardize_rejects_bad_scale() {
        assert!(FeatureMap::standardize(vec![0.0], vec![0.0]).is_err());
        assert!(FeatureMap::standardize(vec![0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn design_shapes() {
        let map = FeatureMap::identity(2);
        let pairs = PairSet::new(vec![pair(&[1.0, 2.0], &[3.0, 4.0])], vec![]);
        let u = UnlabeledSet::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        let dm = build_design_matrices(&pairs, &u, &map).unwrap();
        assert_eq!(dm.x_s.shape(), (2, 2));
        assert_eq!(dm.x_d.shape(), (0, 2));
        assert_eq!(dm.x_u.shape(), (2, 2));
        assert_eq!(dm.x_s.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0]);
        assert_eq!(dm.x_s.row(1).iter().copied().collect::<Vec<_>>(), vec![3.0, 4.0]);

        let p = |i: f64| pair(&[i, i], &[-i, i]);
        let pairs = PairSet::new(vec![p(1.0), p(2.0), p(3.0)], vec![p(4.0), p(5.0)]);
        let u = UnlabeledSet::new((0..5).map(|i| vec![i as f64, 0.0]).collect());
        let dm = build_design_matrices(&pairs, &u, &map).unwrap();
        assert_eq!(dm.x_s.shape(), (6, 2));
        assert_eq!(dm.x_d.shape(), (4, 2));
        assert_eq!(dm.x_u.shape(), (5, 2));
        // second member of the second dissimilar pair
        assert_eq!(dm.x_d[(3, 0)], -5.0);
        assert_eq!(dm.x_u[(4, 0)], 4.0);
    }

    #[test]
    fn design_dimension_mismatch() {
        let map = FeatureMap::identity(2);
        let u = UnlabeledSet::new(vec![vec![0.0, 0.0, 1.0]]);
        assert!(build_design_matrices(&PairSet::default(), &u, &map).is_err());
    }

    #[test]
    fn standardizer_conventions() {
        let pts = vec![vec![0.0, 5.0], vec![2.0, 5.0]];
        let FeatureMap::Standardize { mean, scale } = fit_standardizer_points(&pts).unwrap() else {
            panic!("expected a standardizing map");
        };
        assert_eq!(mean, vec![1.0, 5.0]);
        // population std of {0, 2} is 1; constant column falls back to 1
        assert_eq!(scale, vec![1.0, 1.0]);
        assert!(fit_standardizer_points(&pts[..1]).is_err());
    }

    #[test]
    fn standardized_output_moments() {
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let t = i as f64;
                vec![t * 0.37 - 3.0, (t * 1.3).sin() * 10.0 + 4.0, 7.0]
            })
            .collect();
        let map = fit_standardizer_points(&pts).unwrap();
        let z: Vec<Vec<f64>> = pts.iter().map(|p| map.apply(p).unwrap()).collect();
        for j in 0..3 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / z.len() as f64;
            assert!(mean.abs() <= 1e-10, "feature {j} mean {mean}");
            if j < 2 {
                assert!((var.sqrt() - 1.0).abs() <= 1e-10, "feature {j} std {}", var.sqrt());
            } else {
                assert_eq!(var, 0.0);
            }
        }
    }

    #[test]
    fn augmented_round_trip() {
        let m = LinearModel::new(vec![1.0, -2.0], 0.25);
        assert_eq!(LinearModel::from_augmented(&m.to_augmented()), m);
    }
}
