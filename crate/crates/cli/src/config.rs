//! Experiment configuration: flat `key = value` text, `#` comments, comma-separated lists.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pairwise_risk::{make_priors, MarginLoss, Variant};

use crate::error::CliError;

/// Training methods and clustering baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Su,
    Du,
    Sd,
    Sdsu,
    Sddu,
    Sudu,
    Km,
    Ckm,
}

impl Method {
    pub const ALL: [Method; 8] =
        [Method::Su, Method::Du, Method::Sd, Method::Sdsu, Method::Sddu, Method::Sudu, Method::Km, Method::Ckm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Su => "SU",
            Method::Du => "DU",
            Method::Sd => "SD",
            Method::Sdsu => "SDSU",
            Method::Sddu => "SDDU",
            Method::Sudu => "SUDU",
            Method::Km => "KM",
            Method::Ckm => "CKM",
        }
    }

    /// Stable index used in seed derivation; independent of the configured method list.
    pub fn seed_index(self) -> u64 {
        self as u64
    }

    pub fn is_clustering(self) -> bool {
        matches!(self, Method::Km | Method::Ckm)
    }

    /// The two-risk combination and, for single risks, the one admissible mixing value.
    pub fn mixing(self) -> Option<(Variant, Option<f64>)> {
        match self {
            Method::Su => Some((Variant::Sdsu, Some(1.0))),
            Method::Du => Some((Variant::Sddu, Some(1.0))),
            Method::Sd => Some((Variant::Sdsu, Some(0.0))),
            Method::Sdsu => Some((Variant::Sdsu, None)),
            Method::Sddu => Some((Variant::Sddu, None)),
            Method::Sudu => Some((Variant::Sudu, None)),
            Method::Km | Method::Ckm => None,
        }
    }

    /// Prior mode used when the configuration leaves it on `auto`.
    pub fn default_prior_mode(self) -> PriorMode {
        match self {
            Method::Sdsu | Method::Sddu | Method::Sudu => PriorMode::Estimated,
            _ => PriorMode::Known,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let up = s.trim().to_ascii_uppercase();
        Method::ALL.into_iter().find(|m| m.name() == up).ok_or_else(|| format!("unknown method '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorMode {
    Known,
    Estimated,
}

impl PriorMode {
    pub fn name(self) -> &'static str {
        match self {
            PriorMode::Known => "known",
            PriorMode::Estimated => "estimated",
        }
    }
}

impl fmt::Display for PriorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetFormat {
    Libsvm,
    Csv { label_column: usize, has_header: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Two isotropic Gaussians separated along the first axis.
    Gaussian { dim: usize, separation: f64, variance: f64 },
    File { path: PathBuf, format: DatasetFormat },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub pi_plus: f64,
    pub n_sd: usize,
    pub n_u: usize,
    pub n_test: usize,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub losses: Vec<MarginLoss>,
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub folds: usize,
    /// `None` picks [`Method::default_prior_mode`] per method.
    pub prior_mode: Option<PriorMode>,
    pub majority_positive: bool,
    /// Fraction of a file dataset held out as the test pool.
    pub test_fraction: f64,
    pub standardize: bool,
    pub kmeans_max_iter: usize,
    pub ckm_restarts: usize,
    /// Wall-clock times make output differ between runs, so they are off unless asked for.
    pub record_wall_time: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSource::Gaussian { dim: 2, separation: 3.0, variance: 1.0 },
            pi_plus: 0.7,
            n_sd: 50,
            n_u: 500,
            n_test: 500,
            trials: 1,
            seed: 0,
            methods: vec![Method::Sd],
            losses: vec![MarginLoss::Squared],
            lambdas: vec![1e-1, 1e-4, 1e-7],
            gammas: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            folds: 5,
            prior_mode: None,
            majority_positive: true,
            test_fraction: 0.25,
            standardize: true,
            kmeans_max_iter: 300,
            ckm_restarts: pairwise_risk::eval::DEFAULT_RESTARTS,
            record_wall_time: false,
            output: None,
        }
    }
}

fn bad(key: &str, value: &str, reason: impl fmt::Display) -> CliError {
    CliError::Config(format!("{key} = '{value}': {reason}"))
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, value, e))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_one(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(key, value, "expected a boolean")),
    }
}

impl ExperimentConfig {
    /// Keys accepted by [`ExperimentConfig::set`].
    pub const KEYS: &'static [&'static str] = &[
        "dataset", "format", "label_column", "csv_header", "gauss_dim", "gauss_separation", "gauss_variance",
        "pi_plus", "n_sd", "n_u", "n_test", "trials", "seed", "methods", "losses", "lambdas", "gammas", "folds",
        "prior_mode", "majority_positive", "test_fraction", "standardize", "kmeans_max_iter", "ckm_restarts",
        "wall_time", "output",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim() {
            "dataset" => {
                self.dataset = if v.eq_ignore_ascii_case("gaussian") {
                    match &self.dataset {
                        g @ DatasetSource::Gaussian { .. } => g.clone(),
                        DatasetSource::File { .. } => ExperimentConfig::default().dataset,
                    }
                } else {
                    let format = match &self.dataset {
                        DatasetSource::File { format, .. } => format.clone(),
                        DatasetSource::Gaussian { .. } => DatasetFormat::Libsvm,
                    };
                    DatasetSource::File { path: PathBuf::from(v), format }
                }
            }
            "format" => {
                let DatasetSource::File { format, .. } = &mut self.dataset else {
                    return Err(bad(key, v, "set dataset to a file path first"));
                };
                *format = match v.to_ascii_lowercase().as_str() {
                    "libsvm" => DatasetFormat::Libsvm,
                    "csv" => DatasetFormat::Csv { label_column: 0, has_header: false },
                    _ => return Err(bad(key, v, "expected libsvm or csv")),
                };
            }
            "label_column" | "csv_header" => {
                let Some(DatasetFormat::Csv { label_column, has_header }) = self.file_format_mut() else {
                    return Err(bad(key, v, "only applies to csv datasets"));
                };
                if key.trim() == "label_column" {
                    *label_column = parse_one(key, v)?;
                } else {
                    *has_header = parse_bool(key, v)?;
                }
            }
            "gauss_dim" | "gauss_separation" | "gauss_variance" => {
                let DatasetSource::Gaussian { dim, separation, variance } = &mut self.dataset else {
                    return Err(bad(key, v, "only applies to the gaussian dataset"));
                };
                match key.trim() {
                    "gauss_dim" => *dim = parse_one(key, v)?,
                    "gauss_separation" => *separation = parse_one(key, v)?,
                    _ => *variance = parse_one(key, v)?,
                }
            }
            "pi_plus" => self.pi_plus = parse_one(key, v)?,
            "n_sd" => self.n_sd = parse_one(key, v)?,
            "n_u" => self.n_u = parse_one(key, v)?,
            "n_test" => self.n_test = parse_one(key, v)?,
            "trials" => self.trials = parse_one(key, v)?,
            "seed" => self.seed = parse_one(key, v)?,
            "methods" => self.methods = parse_list(key, v)?,
            "losses" => self.losses = parse_list(key, v)?,
            "lambdas" => self.lambdas = parse_list(key, v)?,
            "gammas" => self.gammas = parse_list(key, v)?,
            "folds" => self.folds = parse_one(key, v)?,
            "prior_mode" => {
                self.prior_mode = match v.to_ascii_lowercase().as_str() {
                    "auto" => None,
                    "known" => Some(PriorMode::Known),
                    "estimated" => Some(PriorMode::Estimated),
                    _ => return Err(bad(key, v, "expected auto, known or estimated")),
                }
            }
            "majority_positive" => self.majority_positive = parse_bool(key, v)?,
            "test_fraction" => self.test_fraction = parse_one(key, v)?,
            "standardize" => self.standardize = parse_bool(key, v)?,
            "kmeans_max_iter" => self.kmeans_max_iter = parse_one(key, v)?,
            "ckm_restarts" => self.ckm_restarts = parse_one(key, v)?,
            "wall_time" => self.record_wall_time = parse_bool(key, v)?,
            "output" => self.output = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    fn file_format_mut(&mut self) -> Option<&mut DatasetFormat> {
        match &mut self.dataset {
            DatasetSource::File { format, .. } => Some(format),
            DatasetSource::Gaussian { .. } => None,
        }
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v).map_err(|e| CliError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        make_priors(self.pi_plus).map_err(|e| CliError::Config(format!("pi_plus: {e}")))?;
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n_test == 0 {
            return fail("n_test must be at least 1".into());
        }
        if self.methods.is_empty() {
            return fail("methods must not be empty".into());
        }
        if self.losses.is_empty() && self.methods.iter().any(|m| !m.is_clustering()) {
            return fail("losses must not be empty".into());
        }
        if let Some(l) = self.losses.iter().find(|l| !matches!(l, MarginLoss::Squared | MarginLoss::DoubleHinge)) {
            return fail(format!("loss {l} has no exact solver; use squared or double_hinge"));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return fail("lambdas must be a nonempty list of positive numbers".into());
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return fail("gammas must be a nonempty list in [0, 1]".into());
        }
        if self.folds < 2 {
            return fail("folds must be at least 2".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail("test_fraction must lie in (0, 1)".into());
        }
        if let DatasetSource::Gaussian { dim, separation, variance } = self.dataset {
            if dim == 0 || !(variance > 0.0) || !separation.is_finite() {
                return fail("gaussian dataset needs dim >= 1, variance > 0 and a finite separation".into());
            }
        }
        Ok(())
    }

    pub fn prior_mode_for(&self, method: Method) -> PriorMode {
        self.prior_mode.unwrap_or_else(|| method.default_prior_mode())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let text = "\
# synthetic run
pi_plus = 0.8
n_sd = 100   # pairs
methods = SD, du, SDDU, CKM
losses = squared,double_hinge
lambdas = 0.1
gammas = 0,0.5
prior_mode = known
gauss_dim = 5
trials = 3
";
        let c = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(c.pi_plus, 0.8);
        assert_eq!(c.n_sd, 100);
        assert_eq!(c.methods, vec![Method::Sd, Method::Du, Method::Sddu, Method::Ckm]);
        assert_eq!(c.losses, vec![MarginLoss::Squared, MarginLoss::DoubleHinge]);
        assert_eq!(c.gammas, vec![0.0, 0.5]);
        assert_eq!(c.prior_mode, Some(PriorMode::Known));
        assert_eq!(c.dataset, DatasetSource::Gaussian { dim: 5, separation: 3.0, variance: 1.0 });
        assert_eq!(c.n_test, 500);
    }

    #[test]
    fn file_dataset_keys() {
        let c = ExperimentConfig::from_text("dataset = data.csv\nformat = csv\nlabel_column = 3\ncsv_header = yes").unwrap();
        assert_eq!(
            c.dataset,
            DatasetSource::File {
                path: PathBuf::from("data.csv"),
                format: DatasetFormat::Csv { label_column: 3, has_header: true }
            }
        );
        assert!(ExperimentConfig::from_text("label_column = 3").is_err());
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["pi_plus = 0.5", "trials = 0", "n_test = 0", "methods = XY", "nonsense = 1", "losses = hinge", "folds = 1", "lambdas = 0", "just words"] {
            assert!(ExperimentConfig::from_text(text).is_err(), "{text}");
        }
    }

    #[test]
    fn prior_mode_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.prior_mode_for(Method::Sddu), PriorMode::Estimated);
        assert_eq!(c.prior_mode_for(Method::Sd), PriorMode::Known);
        let mut k = c.clone();
        k.set("prior_mode", "known").unwrap();
        assert_eq!(k.prior_mode_for(Method::Sddu), PriorMode::Known);
    }
}
