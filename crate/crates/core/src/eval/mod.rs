//! Model selection by cross-validation, test accuracy and the clustering baselines.

mod clustering;
mod cv;

pub use clustering::{clustering_accuracy, cop_kmeans, kmeans, predict_from_clusters, KMeansResult, DEFAULT_RESTARTS};
pub use cv::{cross_validate, fold_plan, CvCell, CvResult, FoldSplit, HyperGrid, Mixing};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{classify, FeatureMap, LinearModel};

/// Fraction of test points whose predicted label matches.
pub fn accuracy(model: &LinearModel, map: &FeatureMap, test: &LabeledDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyData("accuracy needs a nonempty test set".into()));
    }
    let mut hits = 0usize;
    for s in &test.samples {
        if classify(model, map, &s.features)? == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, LabeledSample};
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use rand::Rng as _;

    fn line_data() -> LabeledDataset {
        let samples = (0..10)
            .map(|i| {
                let x = i as f64 - 4.5;
                LabeledSample::new(vec![x], Label::from_score(x)).unwrap()
            })
            .collect();
        LabeledDataset::new(samples).unwrap()
    }

    #[test]
    fn true_rule_is_perfect() {
        let m = LinearModel::new(vec![1.0], 0.0);
        assert_eq!(accuracy(&m, &FeatureMap::identity(1), &line_data()).unwrap(), 1.0);
    }

    #[test]
    fn constant_model_scores_positive_fraction() {
        let mut d = line_data();
        d.samples[0].label = Label::Positive;
        let m = LinearModel::new(vec![0.0], 1.0);
        assert_abs_diff_eq!(accuracy(&m, &FeatureMap::identity(1), &d).unwrap(), d.positive_fraction());
        assert_abs_diff_eq!(accuracy(&m, &FeatureMap::identity(1), &d).unwrap(), 0.6);
    }

    #[test]
    fn random_model_is_at_chance() {
        let mut rng = rng_from_seed(9);
        let samples = (0..100_000)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
                LabeledSample::new(vec![rng.random_range(-1.0..1.0)], label).unwrap()
            })
            .collect();
        let d = LabeledDataset::new(samples).unwrap();
        let m = LinearModel::new(vec![1.0], 0.0);
        assert_abs_diff_eq!(accuracy(&m, &FeatureMap::identity(1), &d).unwrap(), 0.5, epsilon = 0.01);
    }

    #[test]
    fn empty_test_set() {
        let d = LabeledDataset::new(vec![]).unwrap();
        assert!(matches!(accuracy(&LinearModel::zeros(0), &FeatureMap::identity(0), &d), Err(Error::EmptyData(_))));
    }
}
