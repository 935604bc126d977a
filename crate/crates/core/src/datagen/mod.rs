//! Drawing similar/dissimilar pairs, unlabeled points and labeled test data from a class source.

mod io;

pub use io::{parse_csv, parse_libsvm, parse_libsvm_with, serialize_libsvm, LabelMap};

use rand::distr::weighted::WeightedIndex;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Label, LabeledDataset, LabeledSample, PairExample, PairSet, UnlabeledSet};
use crate::error::{Error, Result};
use crate::priors::{make_priors, ClassPriors};
use crate::risks::DiscreteDistribution;
use crate::rng::{rng_from_seed, Rng};

/// Draws feature vectors of a requested class.
pub trait ClassSampler {
    fn dim(&self) -> usize;
    fn draw(&self, label: Label, rng: &mut Rng) -> Vec<f64>;
}

/// Anything that can hand out a class-conditional sampler.
pub trait ClassSource {
    /// Fails with `MissingClass` if either class cannot be drawn from.
    fn class_sampler(&self) -> Result<Box<dyn ClassSampler + '_>>;
}

struct PoolSampler<'a> {
    dim: usize,
    positive: Vec<&'a [f64]>,
    negative: Vec<&'a [f64]>,
}

impl ClassSampler for PoolSampler<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn draw(&self, label: Label, rng: &mut Rng) -> Vec<f64> {
        let pool = match label {
            Label::Positive => &self.positive,
            Label::Negative => &self.negative,
        };
        pool[rng.random_range(0..pool.len())].to_vec()
    }
}

/// Draws uniformly, with replacement, from the samples of the requested class.
impl ClassSource for LabeledDataset {
    fn class_sampler(&self) -> Result<Box<dyn ClassSampler + '_>> {
        let pool = |l: Label| -> Vec<&[f64]> {
            self.samples.iter().filter(|s| s.label == l).map(|s| s.features.as_slice()).collect()
        };
        let (positive, negative) = (pool(Label::Positive), pool(Label::Negative));
        for (p, l) in [(&positive, Label::Positive), (&negative, Label::Negative)] {
            if p.is_empty() {
                return Err(Error::MissingClass(l.as_i8()));
            }
        }
        Ok(Box::new(PoolSampler { dim: self.dim, positive, negative }))
    }
}

struct DiscreteSampler<'a> {
    dist: &'a DiscreteDistribution,
    positive: WeightedIndex<f64>,
    negative: WeightedIndex<f64>,
}

impl ClassSampler for DiscreteSampler<'_> {
    fn dim(&self) -> usize {
        self.dist.support[0].len()
    }

    fn draw(&self, label: Label, rng: &mut Rng) -> Vec<f64> {
        let idx = match label {
            Label::Positive => self.positive.sample(rng),
            Label::Negative => self.negative.sample(rng),
        };
        self.dist.support[idx].clone()
    }
}

impl ClassSource for DiscreteDistribution {
    fn class_sampler(&self) -> Result<Box<dyn ClassSampler + '_>> {
        let positive = WeightedIndex::new(&self.p_plus).map_err(|_| Error::MissingClass(1))?;
        let negative = WeightedIndex::new(&self.p_minus).map_err(|_| Error::MissingClass(-1))?;
        Ok(Box::new(DiscreteSampler { dist: self, positive, negative }))
    }
}

/// Two isotropic Gaussian classes sharing one variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub mean_plus: Vec<f64>,
    pub mean_minus: Vec<f64>,
    pub variance: f64,
    pub pi_plus: f64,
}

impl GaussianSpec {
    pub fn new(mean_plus: Vec<f64>, mean_minus: Vec<f64>, variance: f64, pi_plus: f64) -> Result<Self> {
        if mean_plus.len() != mean_minus.len() {
            return Err(Error::DimensionMismatch { expected: mean_plus.len(), found: mean_minus.len() });
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::OutOfRange(format!("variance must be positive, got {variance}")));
        }
        if !(pi_plus > 0.0 && pi_plus < 1.0) {
            return Err(Error::OutOfRange(format!("class prior must lie in (0, 1), got {pi_plus}")));
        }
        crate::data::check_finite(&mean_plus)?;
        crate::data::check_finite(&mean_minus)?;
        Ok(Self { mean_plus, mean_minus, variance, pi_plus })
    }

    /// Means at `+separation / 2` and `-separation / 2` standard deviations along the first axis.
    pub fn separated(dim: usize, separation_sigmas: f64, variance: f64, pi_plus: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRange("dimension must be at least 1".into()));
        }
        let half = 0.5 * separation_sigmas * variance.sqrt();
        let mut mp = vec![0.0; dim];
        let mut mm = vec![0.0; dim];
        mp[0] = half;
        mm[0] = -half;
        Self::new(mp, mm, variance, pi_plus)
    }

    pub fn dim(&self) -> usize {
        self.mean_plus.len()
    }
}

impl ClassSampler for GaussianSpec {
    fn dim(&self) -> usize {
        self.mean_plus.len()
    }

    fn draw(&self, label: Label, rng: &mut Rng) -> Vec<f64> {
        let mean = match label {
            Label::Positive => &self.mean_plus,
            Label::Negative => &self.mean_minus,
        };
        let sd = self.variance.sqrt();
        mean.iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + sd * z
            })
            .collect()
    }
}

impl ClassSource for GaussianSpec {
    fn class_sampler(&self) -> Result<Box<dyn ClassSampler + '_>> {
        Ok(Box::new(self.clone()))
    }
}

fn draw_label(priors: &ClassPriors, rng: &mut Rng) -> Label {
    if rng.random::<f64>() < priors.pi_plus() {
        Label::Positive
    } else {
        Label::Negative
    }
}

fn draw_similar(sampler: &dyn ClassSampler, priors: &ClassPriors, rng: &mut Rng) -> PairExample {
    let pp = priors.pi_plus();
    let label = if rng.random::<f64>() < pp * pp / priors.pi_s() { Label::Positive } else { Label::Negative };
    PairExample { first: sampler.draw(label, rng), second: sampler.draw(label, rng) }
}

fn draw_dissimilar(sampler: &dyn ClassSampler, rng: &mut Rng) -> PairExample {
    let pos = sampler.draw(Label::Positive, rng);
    let neg = sampler.draw(Label::Negative, rng);
    if rng.random::<bool>() {
        PairExample { first: pos, second: neg }
    } else {
        PairExample { first: neg, second: pos }
    }
}

/// `n_sd` pairs, each similar with probability `pi_s`; the split between kinds is random.
pub fn sample_pairs(source: &impl ClassSource, n_sd: usize, pi_plus: f64, seed: u64) -> Result<PairSet> {
    let priors = make_priors(pi_plus)?;
    let sampler = source.class_sampler()?;
    let mut rng = rng_from_seed(seed);
    let mut pairs = PairSet::default();
    for _ in 0..n_sd {
        if rng.random::<f64>() < priors.pi_s() {
            pairs.similar.push(draw_similar(sampler.as_ref(), &priors, &mut rng));
        } else {
            pairs.dissimilar.push(draw_dissimilar(sampler.as_ref(), &mut rng));
        }
    }
    Ok(pairs)
}

/// Exactly `n_s` similar and `n_d` dissimilar pairs.
pub fn sample_pairs_fixed(source: &impl ClassSource, n_s: usize, n_d: usize, priors: &ClassPriors, seed: u64) -> Result<PairSet> {
    let sampler = source.class_sampler()?;
    let mut rng = rng_from_seed(seed);
    let similar = (0..n_s).map(|_| draw_similar(sampler.as_ref(), priors, &mut rng)).collect();
    let dissimilar = (0..n_d).map(|_| draw_dissimilar(sampler.as_ref(), &mut rng)).collect();
    Ok(PairSet { similar, dissimilar })
}

/// `n` labeled points with labels drawn at `pi_plus`.
pub fn sample_labeled(source: &impl ClassSource, n: usize, pi_plus: f64, seed: u64) -> Result<LabeledDataset> {
    if !(pi_plus > 0.0 && pi_plus < 1.0) {
        return Err(Error::OutOfRange(format!("class prior must lie in (0, 1), got {pi_plus}")));
    }
    let sampler = source.class_sampler()?;
    let mut rng = rng_from_seed(seed);
    let samples = (0..n)
        .map(|_| {
            let label = if rng.random::<f64>() < pi_plus { Label::Positive } else { Label::Negative };
            LabeledSample { features: sampler.draw(label, &mut rng), label }
        })
        .collect();
    Ok(LabeledDataset { samples, dim: sampler.dim() })
}

/// The points of [`sample_labeled`] with the same seed, labels dropped.
pub fn sample_unlabeled(source: &impl ClassSource, n_u: usize, pi_plus: f64, seed: u64) -> Result<UnlabeledSet> {
    Ok(UnlabeledSet::new(sample_labeled(source, n_u, pi_plus, seed)?.points()))
}

pub fn sample_gaussian_labeled(spec: &GaussianSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    sample_labeled(spec, n, spec.pi_plus, seed)
}

/// Labels from a prior alone, without features; used by callers that only need class counts.
pub fn sample_labels(priors: &ClassPriors, n: usize, seed: u64) -> Vec<Label> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| draw_label(priors, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> LabeledDataset {
        LabeledDataset::new(vec![
            LabeledSample::new(vec![1.0], Label::Positive).unwrap(),
            LabeledSample::new(vec![-1.0], Label::Negative).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn pair_fraction_matches_pi_s() {
        let pairs = sample_pairs(&two_point(), 100_000, 0.7, 3).unwrap();
        let frac = pairs.n_similar() as f64 / 100_000.0;
        assert_abs_diff_eq!(frac, 0.58, epsilon = 0.01);
    }

    #[test]
    fn similar_members_follow_pointwise_density() {
        let pairs = sample_pairs(&two_point(), 100_000, 0.7, 5).unwrap();
        let members: Vec<f64> = pairs.similar.iter().flat_map(|p| [p.first[0], p.second[0]]).collect();
        let pos = members.iter().filter(|v| **v > 0.0).count() as f64 / members.len() as f64;
        assert_abs_diff_eq!(pos, 0.49 / 0.58, epsilon = 0.01);
        assert!(pairs.similar.iter().all(|p| p.first == p.second));
    }

    #[test]
    fn dissimilar_pairs_straddle_classes() {
        let pairs = sample_pairs(&two_point(), 1000, 0.8, 1).unwrap();
        assert!(pairs.dissimilar.iter().all(|p| p.first[0] * p.second[0] < 0.0));
        // both orders occur
        assert!(pairs.dissimilar.iter().any(|p| p.first[0] > 0.0));
        assert!(pairs.dissimilar.iter().any(|p| p.first[0] < 0.0));
    }

    #[test]
    fn missing_class_and_degenerate_prior() {
        let only_pos = LabeledDataset::new(vec![LabeledSample::new(vec![1.0], Label::Positive).unwrap()]).unwrap();
        assert_eq!(sample_pairs(&only_pos, 5, 0.7, 0).unwrap_err(), Error::MissingClass(-1));
        assert_eq!(sample_unlabeled(&only_pos, 5, 0.7, 0).unwrap_err(), Error::MissingClass(-1));
        assert!(matches!(sample_pairs(&two_point(), 5, 0.5, 0), Err(Error::DegeneratePrior(_))));
    }

    #[test]
    fn unlabeled_fraction_and_determinism() {
        let tagged = sample_labeled(&two_point(), 100_000, 0.7, 11).unwrap();
        assert_abs_diff_eq!(tagged.positive_fraction(), 0.7, epsilon = 0.01);
        let u = sample_unlabeled(&two_point(), 100_000, 0.7, 11).unwrap();
        assert_eq!(u.points, tagged.points());
        assert!(sample_unlabeled(&two_point(), 0, 0.7, 11).unwrap().is_empty());
        assert_eq!(sample_pairs(&two_point(), 50, 0.7, 2).unwrap(), sample_pairs(&two_point(), 50, 0.7, 2).unwrap());
    }

    #[test]
    fn fixed_counts() {
        let pr = make_priors(0.7).unwrap();
        let p = sample_pairs_fixed(&two_point(), 10, 7, &pr, 4).unwrap();
        assert_eq!((p.n_similar(), p.n_dissimilar()), (10, 7));
    }

    #[test]
    fn gaussian_labels_and_moments() {
        let spec = GaussianSpec::new(vec![2.0, 0.0], vec![-2.0, 0.0], 1.0, 0.7).unwrap();
        let data = sample_gaussian_labeled(&spec, 10_000, 8).unwrap();
        assert_eq!(data.dim, 2);
        assert_abs_diff_eq!(data.positive_fraction(), 0.7, epsilon = 0.02);
        let pos: Vec<&LabeledSample> = data.samples.iter().filter(|s| s.label == Label::Positive).collect();
        let mean = pos.iter().map(|s| s.features[0]).sum::<f64>() / pos.len() as f64;
        assert_abs_diff_eq!(mean, 2.0, epsilon = 0.05);
        assert!(GaussianSpec::new(vec![0.0], vec![0.0], 0.0, 0.7).is_err());
        assert!(GaussianSpec::new(vec![0.0], vec![0.0, 1.0], 1.0, 0.7).is_err());
    }

    #[test]
    fn discrete_source_draws_support_points() {
        let pr = make_priors(0.7).unwrap();
        let dist = DiscreteDistribution::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0], pr).unwrap();
        let d = sample_labeled(&dist, 200, 0.7, 1).unwrap();
        for s in &d.samples {
            match s.label {
                Label::Positive => assert!(s.features[0] >= 1.0),
                Label::Negative => assert_eq!(s.features[0], 0.0),
            }
        }
    }
}
