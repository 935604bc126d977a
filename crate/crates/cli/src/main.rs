use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pairwise_risk::datagen::{parse_csv, parse_libsvm};
use pairwise_risk::eval::{accuracy, cross_validate};
use pairwise_risk::{
    build_design_matrices, fit, gamma_for_variant, make_priors, BoundConstants, MarginLoss, SolverConfig, Variant,
};
use pairwise_risk_cli::bounds::{bounds_report, bounds_to_csv, BoundsSpec, Factor};
use pairwise_risk_cli::experiment::{feature_map, grid_for, load_source, resolve_prior, sample_trial};
use pairwise_risk_cli::io::{model_from_text, model_to_text, read_trial, write_trial};
use pairwise_risk_cli::{format_summary, records_to_csv, run_experiment, summarize, ExperimentConfig, Method};

#[derive(Parser)]
#[command(name = "pairwise-risk", version, about = "Classification from similar, dissimilar and unlabeled data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one trial's pairs, unlabeled points and test set into a directory.
    Gen {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Fit one model on a directory written by `gen` and print it.
    Train {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "SD")]
        method: Method,
        #[arg(long, default_value = "squared")]
        loss: MarginLoss,
        /// Skip cross-validation and use this lambda (needs --gamma too).
        #[arg(long, requires = "gamma")]
        lambda: Option<f64>,
        #[arg(long, requires = "lambda")]
        gamma: Option<f64>,
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Accuracy of a saved model on a labeled file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "libsvm")]
        format: String,
        #[arg(long, default_value_t = 0)]
        label_column: usize,
        #[arg(long)]
        csv_header: bool,
    },
    /// Run every trial of the experiment, write the CSV and print the summary table.
    Bench {
        #[command(flatten)]
        exp: ExpArgs,
    },
    /// Tabulate the estimation-error bounds.
    Bounds(BoundsArgs),
}

/// Experiment settings: defaults, then `--config`, then `--set`, then the named flags.
#[derive(Args)]
struct ExpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    pi_plus: Option<String>,
    #[arg(long)]
    n_sd: Option<String>,
    #[arg(long)]
    n_u: Option<String>,
    #[arg(long)]
    n_test: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    losses: Option<String>,
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    gammas: Option<String>,
    #[arg(long)]
    prior_mode: Option<String>,
    #[arg(long)]
    majority_positive: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

impl ExpArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        for s in &self.sets {
            let Some((k, v)) = s.split_once('=') else { bail!("--set expects KEY=VALUE, got '{s}'") };
            cfg.set(k, v)?;
        }
        let named = [
            ("dataset", &self.dataset),
            ("format", &self.format),
            ("pi_plus", &self.pi_plus),
            ("n_sd", &self.n_sd),
            ("n_u", &self.n_u),
            ("n_test", &self.n_test),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("methods", &self.methods),
            ("losses", &self.losses),
            ("lambdas", &self.lambdas),
            ("gammas", &self.gammas),
            ("prior_mode", &self.prior_mode),
            ("majority_positive", &self.majority_positive),
            ("output", &self.output),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.7")]
    pi_plus: Vec<f64>,
    /// Leading factor C; ignored when --c-f is given.
    #[arg(long, default_value_t = 1.0)]
    factor: f64,
    /// Rademacher constant; switches to computing C from the loss constants.
    #[arg(long)]
    c_f: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    c_b: f64,
    #[arg(long, default_value = "double_hinge")]
    loss: MarginLoss,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    n_s: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    n_d: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "500")]
    n_u: Vec<usize>,
    #[arg(long, default_value = "SDDU")]
    variant: Variant,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen { exp, out_dir, trial } => {
            let cfg = exp.resolve()?;
            let data = sample_trial(&cfg, &load_source(&cfg)?, trial)?;
            write_trial(&out_dir, &data)?;
            println!(
                "wrote {} similar, {} dissimilar, {} unlabeled, {} test points to {}",
                data.pairs.n_similar(),
                data.pairs.n_dissimilar(),
                data.unlabeled.len(),
                data.test.len(),
                out_dir.display()
            );
        }
        Command::Train { exp, data_dir, method, loss, lambda, gamma, model_out } => {
            let cfg = exp.resolve()?;
            if method.is_clustering() {
                bail!("{method} is a clustering baseline; use bench to score it");
            }
            let data = read_trial(&data_dir)?;
            let map = feature_map(&cfg, &data)?;
            let prior = resolve_prior(&cfg, cfg.prior_mode_for(method), &data.pairs)?;
            let priors = make_priors(prior)?;
            let (lambda, weights) = match (lambda, gamma) {
                (Some(l), Some(g)) => {
                    let (variant, fixed) = method.mixing().expect("training method");
                    (l, gamma_for_variant(variant, fixed.unwrap_or(g))?)
                }
                _ => {
                    let grid = grid_for(&cfg, method)?;
                    let cv = cross_validate(&data.pairs, &data.unlabeled, &map, &priors, loss, &grid, cfg.folds, cfg.seed)?;
                    eprintln!("selected lambda={} gamma={} (mean validation risk {})", cv.best_lambda(), cv.best_gamma(), cv.best.mean_risk);
                    (cv.best_lambda(), cv.best.weights)
                }
            };
            let design = build_design_matrices(&data.pairs, &data.unlabeled, &map)?;
            let model = fit(&design, &priors, &SolverConfig::new(lambda, weights, loss)?)?;
            write_or_print(model_out.as_deref(), &model_to_text(&model, &map))?;
        }
        Command::Eval { model, data, format, label_column, csv_header } => {
            let (m, map) = model_from_text(&fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?)?;
            let text = fs::read_to_string(&data).with_context(|| format!("reading {}", data.display()))?;
            let test = match format.to_ascii_lowercase().as_str() {
                "libsvm" => parse_libsvm(&text)?,
                "csv" => parse_csv(&text, label_column, csv_header)?,
                other => bail!("unknown format '{other}'"),
            };
            println!("{}", accuracy(&m, &map, &test)?);
        }
        Command::Bench { exp } => {
            let cfg = exp.resolve()?;
            let records = run_experiment(&cfg)?;
            write_or_print(cfg.output.as_deref(), &records_to_csv(&records))?;
            print!("{}", format_summary(&summarize(&records)?));
        }
        Command::Bounds(a) => {
            let factor = match a.c_f {
                Some(c_f) => Factor::Constants(BoundConstants::for_loss(a.loss, c_f, a.delta, a.c_b)?),
                None => Factor::Direct(a.factor),
            };
            let spec = BoundsSpec {
                pi_plus: a.pi_plus,
                factor,
                n_s: a.n_s,
                n_d: a.n_d,
                n_u: a.n_u,
                gamma: gamma_for_variant(a.variant, a.gamma)?,
            };
            write_or_print(a.output.as_deref(), &bounds_to_csv(&bounds_report(&spec)?))?;
        }
    }
    Ok(())
}
