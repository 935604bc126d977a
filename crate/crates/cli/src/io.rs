//! On-disk formats for sampled data and fitted models.

use std::fs;
use std::path::Path;

use pairwise_risk::datagen::{parse_libsvm, serialize_libsvm};
use pairwise_risk::{Error, FeatureMap, LinearModel, PairExample, PairSet, UnlabeledSet};

use crate::error::CliError;
use crate::experiment::TrialData;

pub const SIMILAR_FILE: &str = "similar.csv";
pub const DISSIMILAR_FILE: &str = "dissimilar.csv";
pub const UNLABELED_FILE: &str = "unlabeled.csv";
pub const TEST_FILE: &str = "test.libsvm";

fn row(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// One pair per line: the first member's features followed by the second's.
pub fn pairs_to_csv(pairs: &[PairExample]) -> String {
    pairs.iter().map(|p| format!("{},{}\n", row(&p.first), row(&p.second))).collect()
}

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>, Error> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| Error::ParseError { line: i + 1, message: format!("bad number '{f}'") })
                })
                .collect()
        })
        .collect()
}

pub fn pairs_from_csv(text: &str) -> Result<Vec<PairExample>, Error> {
    parse_rows(text)?
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            if r.len() % 2 != 0 {
                return Err(Error::ParseError { line: i + 1, message: "pair row has an odd number of values".into() });
            }
            let second = r.split_off(r.len() / 2);
            PairExample::new(r, second)
        })
        .collect()
}

pub fn unlabeled_to_csv(u: &UnlabeledSet) -> String {
    u.points.iter().map(|p| format!("{}\n", row(p))).collect()
}

pub fn unlabeled_from_csv(text: &str) -> Result<UnlabeledSet, Error> {
    Ok(UnlabeledSet::new(parse_rows(text)?))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_trial(dir: &Path, data: &TrialData) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write(&dir.join(SIMILAR_FILE), &pairs_to_csv(&data.pairs.similar))?;
    write(&dir.join(DISSIMILAR_FILE), &pairs_to_csv(&data.pairs.dissimilar))?;
    write(&dir.join(UNLABELED_FILE), &unlabeled_to_csv(&data.unlabeled))?;
    write(&dir.join(TEST_FILE), &serialize_libsvm(&data.test))
}

pub fn read_trial(dir: &Path) -> Result<TrialData, CliError> {
    let pairs = PairSet::new(
        pairs_from_csv(&read(&dir.join(SIMILAR_FILE))?)?,
        pairs_from_csv(&read(&dir.join(DISSIMILAR_FILE))?)?,
    );
    let unlabeled = unlabeled_from_csv(&read(&dir.join(UNLABELED_FILE))?)?;
    let test = parse_libsvm(&read(&dir.join(TEST_FILE))?)?;
    Ok(TrialData { pairs, unlabeled, test })
}

/// `theta w_1 .. w_d b`, then `mean` and `scale` lines when the features are standardized.
pub fn model_to_text(model: &LinearModel, map: &FeatureMap) -> String {
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
    let mut out = format!("theta {}\n", join(&model.to_augmented()));
    if let FeatureMap::Standardize { mean, scale } = map {
        out.push_str(&format!("mean {}\nscale {}\n", join(mean), join(scale)));
    }
    out
}

pub fn model_from_text(text: &str) -> Result<(LinearModel, FeatureMap), Error> {
    let (mut theta, mut mean, mut scale) = (None, None, None);
    for (i, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        let Some(key) = tok.next() else { continue };
        let values: Vec<f64> = tok
            .map(|t| t.parse().map_err(|_| Error::ParseError { line: i + 1, message: format!("bad number '{t}'") }))
            .collect::<Result<_, _>>()?;
        let slot = match key {
            "theta" => &mut theta,
            "mean" => &mut mean,
            "scale" => &mut scale,
            other => return Err(Error::ParseError { line: i + 1, message: format!("unknown field '{other}'") }),
        };
        *slot = Some(values);
    }
    let theta: Vec<f64> = theta.filter(|t| !t.is_empty()).ok_or(Error::EmptyFile)?;
    let model = LinearModel::from_augmented(&theta);
    let map = match (mean, scale) {
        (Some(m), Some(s)) => FeatureMap::standardize(m, s)?,
        (None, None) => FeatureMap::identity(model.weights.len()),
        _ => return Err(Error::ParseError { line: 0, message: "mean and scale must appear together".into() }),
    };
    if map.output_dim() != model.weights.len() {
        return Err(Error::DimensionMismatch { expected: map.output_dim(), found: model.weights.len() });
    }
    Ok((model, map))
}
