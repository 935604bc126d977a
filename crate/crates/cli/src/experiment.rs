//! The trial loop: sample, select hyperparameters, train, score.

use std::fs;
use std::time::Instant;

use rayon::prelude::*;

use pairwise_risk::datagen::{parse_csv, parse_libsvm, sample_labeled, sample_pairs, sample_unlabeled, GaussianSpec};
use pairwise_risk::eval::{
    accuracy, clustering_accuracy, cop_kmeans, cross_validate, kmeans, predict_from_clusters, HyperGrid, Mixing,
};
use pairwise_risk::model::fit_standardizer_points;
use pairwise_risk::{
    build_design_matrices, estimate_prior, fit, make_priors, mix_seed, Error, FeatureMap, LabeledDataset,
    MarginLoss, PairSet, SolverConfig, UnlabeledSet,
};
use rand::seq::SliceRandom;

use crate::config::{DatasetFormat, DatasetSource, ExperimentConfig, Method, PriorMode};
use crate::error::CliError;

/// Where trial data comes from, loaded once per experiment.
#[derive(Debug, Clone)]
pub enum Source {
    Gaussian(GaussianSpec),
    File(LabeledDataset),
}

pub fn load_source(cfg: &ExperimentConfig) -> Result<Source, CliError> {
    match &cfg.dataset {
        DatasetSource::Gaussian { dim, separation, variance } => {
            Ok(Source::Gaussian(GaussianSpec::separated(*dim, *separation, *variance, cfg.pi_plus)?))
        }
        DatasetSource::File { path, format } => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let data = match format {
                DatasetFormat::Libsvm => parse_libsvm(&text)?,
                DatasetFormat::Csv { label_column, has_header } => parse_csv(&text, *label_column, *has_header)?,
            };
            Ok(Source::File(data))
        }
    }
}

/// Training and test data of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    pub pairs: PairSet,
    pub unlabeled: UnlabeledSet,
    pub test: LabeledDataset,
}

impl TrialData {
    /// Pair members in pair order (similar, then dissimilar), followed by the unlabeled points.
    pub fn training_points(&self) -> Vec<Vec<f64>> {
        self.pairs.members().cloned().chain(self.unlabeled.points.iter().cloned()).collect()
    }
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    mix_seed(master, &[trial as u64])
}

/// Draws the trial's pairs, unlabeled points and test set.
///
/// A file dataset is first split into disjoint test and training pools, so test points never
/// appear among the training data.
pub fn sample_trial(cfg: &ExperimentConfig, source: &Source, trial: usize) -> Result<TrialData, CliError> {
    let ts = trial_seed(cfg.seed, trial);
    let (pairs_seed, u_seed, test_seed, split_seed) =
        (mix_seed(ts, &[0]), mix_seed(ts, &[1]), mix_seed(ts, &[2]), mix_seed(ts, &[3]));
    let data = match source {
        Source::Gaussian(spec) => TrialData {
            pairs: sample_pairs(spec, cfg.n_sd, cfg.pi_plus, pairs_seed)?,
            unlabeled: sample_unlabeled(spec, cfg.n_u, cfg.pi_plus, u_seed)?,
            test: sample_labeled(spec, cfg.n_test, cfg.pi_plus, test_seed)?,
        },
        Source::File(full) => {
            let mut samples = full.samples.clone();
            samples.shuffle(&mut pairwise_risk::rng_from_seed(split_seed));
            let n_test_pool = ((full.len() as f64 * cfg.test_fraction).ceil() as usize).clamp(1, full.len());
            let train_pool = LabeledDataset { samples: samples.split_off(n_test_pool), dim: full.dim };
            let test_pool = LabeledDataset { samples, dim: full.dim };
            TrialData {
                pairs: sample_pairs(&train_pool, cfg.n_sd, cfg.pi_plus, pairs_seed)?,
                unlabeled: sample_unlabeled(&train_pool, cfg.n_u, cfg.pi_plus, u_seed)?,
                test: sample_labeled(&test_pool, cfg.n_test, cfg.pi_plus, test_seed)?,
            }
        }
    };
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    /// `None` for the clustering baselines.
    pub loss: Option<MarginLoss>,
    pub n_s: usize,
    pub n_d: usize,
    pub n_u: usize,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub prior_mode: Option<PriorMode>,
    pub prior_value: Option<f64>,
    /// `None` exactly when the trial failed.
    pub accuracy: Option<f64>,
    pub status: Status,
    pub wall_ms: Option<u64>,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    fn sort_key(&self) -> (usize, Method, Option<MarginLoss>) {
        (self.trial, self.method, self.loss)
    }
}

/// Short machine-readable failure tag.
pub fn failure_tag(e: &Error) -> &'static str {
    match e {
        Error::DegeneratePrior(_) => "degenerate_prior",
        Error::OutOfRange(_) => "out_of_range",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::EmptyData(_) => "empty_data",
        Error::SingularSystem => "singular_system",
        Error::MaxIterations { .. } => "max_iterations",
        Error::InfeasibleProblem(_) => "infeasible_problem",
        Error::MissingClass(_) => "missing_class",
        Error::ParseError { .. } => "parse_error",
        Error::EmptyFile => "empty_file",
        Error::RaggedRows { .. } => "ragged_rows",
        Error::NonBinaryLabels(_) => "non_binary_labels",
        Error::InsufficientData(_) => "insufficient_data",
        Error::Infeasible => "infeasible",
        Error::NotBinary => "not_binary",
    }
}

/// Prior used for training: the configured value, or the estimate from the pair counts.
pub fn resolve_prior(cfg: &ExperimentConfig, mode: PriorMode, pairs: &PairSet) -> pairwise_risk::Result<f64> {
    match mode {
        PriorMode::Known => Ok(cfg.pi_plus),
        PriorMode::Estimated => estimate_prior(pairs.n_similar(), pairs.n_dissimilar(), cfg.majority_positive),
    }
}

/// Grid for a training method; single-risk methods pin the mixing value.
pub fn grid_for(cfg: &ExperimentConfig, method: Method) -> pairwise_risk::Result<HyperGrid> {
    let (variant, fixed) = method
        .mixing()
        .ok_or_else(|| Error::OutOfRange(format!("{method} is not a training method")))?;
    let gammas = fixed.map_or_else(|| cfg.gammas.clone(), |g| vec![g]);
    HyperGrid::new(cfg.lambdas.clone(), gammas, Mixing::Pair(variant))
}

pub fn feature_map(cfg: &ExperimentConfig, data: &TrialData) -> pairwise_risk::Result<FeatureMap> {
    let dim = data.test.dim;
    if cfg.standardize {
        fit_standardizer_points(&data.training_points())
    } else {
        Ok(FeatureMap::identity(dim))
    }
}

struct Outcome {
    lambda: Option<f64>,
    gamma: Option<f64>,
    prior: Option<f64>,
    accuracy: pairwise_risk::Result<f64>,
}

fn train_and_score(
    cfg: &ExperimentConfig,
    data: &TrialData,
    map: &FeatureMap,
    method: Method,
    loss: MarginLoss,
    seed: u64,
) -> Outcome {
    let mut out = Outcome { lambda: None, gamma: None, prior: None, accuracy: Ok(0.0) };
    let result = (|| {
        let prior = resolve_prior(cfg, cfg.prior_mode_for(method), &data.pairs)?;
        out.prior = Some(prior);
        let priors = make_priors(prior)?;
        let grid = grid_for(cfg, method)?;
        let cv = cross_validate(&data.pairs, &data.unlabeled, map, &priors, loss, &grid, cfg.folds, seed)?;
        out.lambda = Some(cv.best_lambda());
        out.gamma = Some(cv.best_gamma());
        let design = build_design_matrices(&data.pairs, &data.unlabeled, map)?;
        let model = fit(&design, &priors, &SolverConfig::new(cv.best_lambda(), cv.best.weights, loss)?)?;
        accuracy(&model, map, &data.test)
    })();
    out.accuracy = result;
    out
}

fn cluster_and_score(cfg: &ExperimentConfig, data: &TrialData, map: &FeatureMap, method: Method, seed: u64) -> pairwise_risk::Result<f64> {
    let mapped = |pts: &[Vec<f64>]| pts.iter().map(|p| map.apply(p)).collect::<pairwise_risk::Result<Vec<_>>>();
    let train = mapped(&data.training_points())?;
    let fitted = if method == Method::Ckm {
        let n_s = data.pairs.n_similar();
        let must: Vec<(usize, usize)> = (0..n_s).map(|i| (2 * i, 2 * i + 1)).collect();
        let cannot: Vec<(usize, usize)> =
            (0..data.pairs.n_dissimilar()).map(|i| (2 * (n_s + i), 2 * (n_s + i) + 1)).collect();
        cop_kmeans(&train, &must, &cannot, 2, seed, cfg.kmeans_max_iter, cfg.ckm_restarts)?
    } else {
        kmeans(&train, 2, seed, cfg.kmeans_max_iter)?
    };
    let assignment = predict_from_clusters(&fitted.centroids, &mapped(&data.test.points())?)?;
    clustering_accuracy(&assignment, &data.test.labels())
}

/// Every configured (method, loss) combination on one trial.
pub fn run_trial(cfg: &ExperimentConfig, source: &Source, trial: usize) -> Result<Vec<TrialRecord>, CliError> {
    let data = sample_trial(cfg, source, trial)?;
    let ts = trial_seed(cfg.seed, trial);
    let map = feature_map(cfg, &data)?;
    let (n_s, n_d, n_u) = (data.pairs.n_similar(), data.pairs.n_dissimilar(), data.unlabeled.len());
    let mut records = Vec::new();
    for &method in &cfg.methods {
        let seed = mix_seed(ts, &[100 + method.seed_index()]);
        let losses: Vec<Option<MarginLoss>> =
            if method.is_clustering() { vec![None] } else { cfg.losses.iter().copied().map(Some).collect() };
        for loss in losses {
            let start = Instant::now();
            let (outcome, prior_mode) = match loss {
                None => (
                    Outcome { lambda: None, gamma: None, prior: None, accuracy: cluster_and_score(cfg, &data, &map, method, seed) },
                    None,
                ),
                Some(l) => (train_and_score(cfg, &data, &map, method, l, seed), Some(cfg.prior_mode_for(method))),
            };
            let wall_ms = cfg.record_wall_time.then(|| start.elapsed().as_millis() as u64);
            let (accuracy, status) = match outcome.accuracy {
                Ok(a) => (Some(a), Status::Ok),
                Err(e) => (None, Status::Failed(failure_tag(&e).to_string())),
            };
            records.push(TrialRecord {
                trial,
                method,
                loss,
                n_s,
                n_d,
                n_u,
                lambda: outcome.lambda,
                gamma: outcome.gamma,
                prior_mode,
                prior_value: outcome.prior,
                accuracy,
                status,
                wall_ms,
            });
        }
    }
    Ok(records)
}

/// Worker count from `PAIRWISE_RISK_THREADS`; unset, unparsable or 0 means one per core.
pub fn configured_threads() -> usize {
    std::env::var("PAIRWISE_RISK_THREADS").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// Runs all trials on a worker pool and returns records sorted by (trial, method, loss).
///
/// Solver and clustering failures become failed records. Data errors abort the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, CliError> {
    cfg.validate()?;
    let source = load_source(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(configured_threads())
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &source, t)).collect::<Result<_, _>>())?;
    let mut records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    records.sort_by_key(TrialRecord::sort_key);
    Ok(records)
}
