//! Unbiased risk estimators from pairwise and unlabeled data.
//!
//! Every estimator works on the pointwise view of the pairs: each pair contributes both of its
//! members with weight `1 / (2 n)`. With `L` and `L~` the corrected losses of [`crate::losses`]:
//!
//! ```text
//! R_SU = pi_S / (2 n_S) sum_S L~(f(x)) + 1 / n_U sum_U L(f(x), -1)
//! R_DU = -pi_D / (2 n_D) sum_D L~(f(x)) + 1 / n_U sum_U L(f(x), +1)
//! R_SD = pi_S / (2 n_S) sum_S L(f(x), +1) + pi_D / (2 n_D) sum_D L(f(x), -1)
//! ```
//!
//! All three are unbiased for the ordinary classification risk `E[l(f(X), Y)]`. Values may be
//! negative on finite samples and are reported as they are.

use std::fmt;
use std::str::FromStr;

use crate::data::{Label, PairExample, PairSet, UnlabeledSet};
use crate::error::{Error, Result};
use crate::losses::{corrected_loss, corrected_loss_tilde, MarginLoss};
use crate::model::{predict, FeatureMap, LinearModel};
use crate::priors::ClassPriors;

const GAMMA_SUM_TOL: f64 = 1e-12;

/// Mixing weights `(g1, g2, g3)` of the SU, DU and SD risks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaWeights {
    g1: f64,
    g2: f64,
    g3: f64,
}

impl GammaWeights {
    pub fn new(g1: f64, g2: f64, g3: f64) -> Result<Self> {
        if [g1, g2, g3].iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::OutOfRange(format!(
                "gamma weights must be nonnegative, got ({g1}, {g2}, {g3})"
            )));
        }
        if (g1 + g2 + g3 - 1.0).abs() > GAMMA_SUM_TOL {
            return Err(Error::OutOfRange(format!(
                "gamma weights must sum to 1, got ({g1}, {g2}, {g3})"
            )));
        }
        Ok(Self { g1, g2, g3 })
    }

    pub const SU: GammaWeights = GammaWeights { g1: 1.0, g2: 0.0, g3: 0.0 };
    pub const DU: GammaWeights = GammaWeights { g1: 0.0, g2: 1.0, g3: 0.0 };
    pub const SD: GammaWeights = GammaWeights { g1: 0.0, g2: 0.0, g3: 1.0 };

    pub fn su(&self) -> f64 {
        self.g1
    }

    pub fn du(&self) -> f64 {
        self.g2
    }

    pub fn sd(&self) -> f64 {
        self.g3
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.g1, self.g2, self.g3]
    }

    pub(crate) fn needs_similar(&self) -> bool {
        self.g1 > 0.0 || self.g3 > 0.0
    }

    pub(crate) fn needs_dissimilar(&self) -> bool {
        self.g2 > 0.0 || self.g3 > 0.0
    }

    pub(crate) fn needs_unlabeled(&self) -> bool {
        self.g1 > 0.0 || self.g2 > 0.0
    }
}

/// Two-risk combinations, each mixing one parameter `g` with `1 - g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// `(1 - g) R_SD + g R_SU`
    Sdsu,
    /// `(1 - g) R_SD + g R_DU`
    Sddu,
    /// `(1 - g) R_SU + g R_DU`
    Sudu,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Sdsu => "SDSU",
            Variant::Sddu => "SDDU",
            Variant::Sudu => "SUDU",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SDSU" => Ok(Variant::Sdsu),
            "SDDU" => Ok(Variant::Sddu),
            "SUDU" => Ok(Variant::Sudu),
            other => Err(Error::OutOfRange(format!("unknown variant '{other}'"))),
        }
    }
}

pub fn gamma_for_variant(variant: Variant, g: f64) -> Result<GammaWeights> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::OutOfRange(format!("mixing parameter must lie in [0, 1], got {g}")));
    }
    let (g1, g2, g3) = match variant {
        Variant::Sdsu => (g, 0.0, 1.0 - g),
        Variant::Sddu => (0.0, g, 1.0 - g),
        Variant::Sudu => (1.0 - g, g, 0.0),
    };
    GammaWeights::new(g1, g2, g3)
}

/// Scores of the stacked pair members and unlabeled points.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scores {
    pub similar: Vec<f64>,
    pub dissimilar: Vec<f64>,
    pub unlabeled: Vec<f64>,
}

fn score_pairs(model: &LinearModel, map: &FeatureMap, pairs: &[PairExample]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * pairs.len());
    for p in pairs {
        out.push(predict(model, map, &p.first)?);
        out.push(predict(model, map, &p.second)?);
    }
    Ok(out)
}

fn score_points(model: &LinearModel, map: &FeatureMap, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.iter().map(|x| predict(model, map, x)).collect()
}

fn mean_of(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    values.iter().map(|&z| f(z)).sum::<f64>() / values.len() as f64
}

fn require(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        Err(Error::EmptyData(format!("no {what}")))
    } else {
        Ok(())
    }
}

pub(crate) fn su_from_scores(s: &[f64], u: &[f64], priors: &ClassPriors, loss: MarginLoss) -> Result<f64> {
    require(s.len(), "similar pairs")?;
    require(u.len(), "unlabeled points")?;
    Ok(priors.pi_s() * mean_of(s, |z| corrected_loss_tilde(loss, priors, z))
        + mean_of(u, |z| corrected_loss(loss, priors, z, Label::Negative)))
}

pub(crate) fn du_from_scores(d: &[f64], u: &[f64], priors: &ClassPriors, loss: MarginLoss) -> Result<f64> {
    require(d.len(), "dissimilar pairs")?;
    require(u.len(), "unlabeled points")?;
    Ok(-priors.pi_d() * mean_of(d, |z| corrected_loss_tilde(loss, priors, z))
        + mean_of(u, |z| corrected_loss(loss, priors, z, Label::Positive)))
}

pub(crate) fn sd_from_scores(s: &[f64], d: &[f64], priors: &ClassPriors, loss: MarginLoss) -> Result<f64> {
    require(s.len(), "similar pairs")?;
    require(d.len(), "dissimilar pairs")?;
    Ok(priors.pi_s() * mean_of(s, |z| corrected_loss(loss, priors, z, Label::Positive))
        + priors.pi_d() * mean_of(d, |z| corrected_loss(loss, priors, z, Label::Negative)))
}

pub(crate) fn sdu_from_scores(
    scores: &Scores,
    priors: &ClassPriors,
    loss: MarginLoss,
    gamma: &GammaWeights,
) -> Result<f64> {
    let mut total = 0.0;
    if gamma.su() != 0.0 {
        total += gamma.su() * su_from_scores(&scores.similar, &scores.unlabeled, priors, loss)?;
    }
    if gamma.du() != 0.0 {
        total += gamma.du() * du_from_scores(&scores.dissimilar, &scores.unlabeled, priors, loss)?;
    }
    if gamma.sd() != 0.0 {
        total += gamma.sd() * sd_from_scores(&scores.similar, &scores.dissimilar, priors, loss)?;
    }
    Ok(total)
}

/// Empirical SU risk; dissimilar pairs are ignored.
pub fn empirical_risk_su(
    model: &LinearModel,
    map: &FeatureMap,
    pairs: &PairSet,
    unlabeled: &UnlabeledSet,
    priors: &ClassPriors,
    loss: MarginLoss,
) -> Result<f64> {
    su_from_scores(
        &score_pairs(model, map, &pairs.similar)?,
        &score_points(model, map, &unlabeled.points)?,
        priors,
        loss,
    )
}

/// Empirical DU risk; similar pairs are ignored.
pub fn empirical_risk_du(
    model: &LinearModel,
    map: &FeatureMap,
    pairs: &PairSet,
    unlabeled: &UnlabeledSet,
    priors: &ClassPriors,
    loss: MarginLoss,
) -> Result<f64> {
    du_from_scores(
        &score_pairs(model, map, &pairs.dissimilar)?,
        &score_points(model, map, &unlabeled.points)?,
        priors,
        loss,
    )
}

/// Empirical SD risk; uses no unlabeled data.
pub fn empirical_risk_sd(
    model: &LinearModel,
    map: &FeatureMap,
    pairs: &PairSet,
    priors: &ClassPriors,
    loss: MarginLoss,
) -> Result<f64> {
    sd_from_scores(
        &score_pairs(model, map, &pairs.similar)?,
        &score_pairs(model, map, &pairs.dissimilar)?,
        priors,
        loss,
    )
}

/// `g1 R_SU + g2 R_DU + g3 R_SD`, skipping components with zero weight.
pub fn empirical_risk_sdu(
    model: &LinearModel,
    map: &FeatureMap,
    pairs: &PairSet,
    unlabeled: &UnlabeledSet,
    priors: &ClassPriors,
    loss: MarginLoss,
    gamma: &GammaWeights,
) -> Result<f64> {
    let scores = Scores {
        similar: score_pairs(model, map, &pairs.similar)?,
        dissimilar: score_pairs(model, map, &pairs.dissimilar)?,
        unlabeled: score_points(model, map, &unlabeled.points)?,
    };
    sdu_from_scores(&scores, priors, loss, gamma)
}

/// Zero-one SD risk, the model-selection criterion.
pub fn validation_risk_sd_zero_one(
    model: &LinearModel,
    map: &FeatureMap,
    pairs: &PairSet,
    priors: &ClassPriors,
) -> Result<f64> {
    empirical_risk_sd(model, map, pairs, priors, MarginLoss::ZeroOne)
}

/// Class-conditional distributions on a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub support: Vec<Vec<f64>>,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub priors: ClassPriors,
}

impl DiscreteDistribution {
    pub fn new(
        support: Vec<Vec<f64>>,
        p_plus: Vec<f64>,
        p_minus: Vec<f64>,
        priors: ClassPriors,
    ) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::EmptyData("empty support".into()));
        }
        crate::data::common_dim(support.iter())?;
        for p in [&p_plus, &p_minus] {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.len() });
            }
            if p.iter().any(|v| !(*v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::OutOfRange(
                    "probability vector must be nonnegative and sum to 1".into(),
                ));
            }
        }
        Ok(Self { support, p_plus, p_minus, priors })
    }

    /// Marginal density of either member of a similar pair.
    pub fn similar_pointwise(&self) -> Vec<f64> {
        let (pp, pm, ps) = (self.priors.pi_plus(), self.priors.pi_minus(), self.priors.pi_s());
        self.p_plus
            .iter()
            .zip(&self.p_minus)
            .map(|(a, b)| (pp * pp * a + pm * pm * b) / ps)
            .collect()
    }

    /// Marginal density of either member of a dissimilar pair.
    pub fn dissimilar_pointwise(&self) -> Vec<f64> {
        self.p_plus.iter().zip(&self.p_minus).map(|(a, b)| 0.5 * a + 0.5 * b).collect()
    }

    pub fn unlabeled_density(&self) -> Vec<f64> {
        let (pp, pm) = (self.priors.pi_plus(), self.priors.pi_minus());
        self.p_plus.iter().zip(&self.p_minus).map(|(a, b)| pp * a + pm * b).collect()
    }
}

/// Exact classification risk `E[l(f(X), Y)]` by enumeration.
pub fn population_risk(
    dist: &DiscreteDistribution,
    model: &LinearModel,
    map: &FeatureMap,
    loss: MarginLoss,
) -> Result<f64> {
    let (pp, pm) = (dist.priors.pi_plus(), dist.priors.pi_minus());
    let mut total = 0.0;
    for (i, x) in dist.support.iter().enumerate() {
        let z = predict(model, map, x)?;
        total += pp * dist.p_plus[i] * loss.eval(z, Label::Positive)
            + pm * dist.p_minus[i] * loss.eval(z, Label::Negative);
    }
    Ok(total)
}

/// Population-level SU, DU and SD risks, computed by enumeration over the pointwise densities.
pub fn population_pairwise_risks(
    dist: &DiscreteDistribution,
    model: &LinearModel,
    map: &FeatureMap,
    loss: MarginLoss,
) -> Result<(f64, f64, f64)> {
    let pr = &dist.priors;
    let ps = dist.similar_pointwise();
    let pd = dist.dissimilar_pointwise();
    let pu = dist.unlabeled_density();
    let (mut su, mut du, mut sd) = (0.0, 0.0, 0.0);
    for (i, x) in dist.support.iter().enumerate() {
        let z = predict(model, map, x)?;
        let tilde = corrected_loss_tilde(loss, pr, z);
        let lp = corrected_loss(loss, pr, z, Label::Positive);
        let ln = corrected_loss(loss, pr, z, Label::Negative);
        su += pr.pi_s() * ps[i] * tilde + pu[i] * ln;
        du += -pr.pi_d() * pd[i] * tilde + pu[i] * lp;
        sd += pr.pi_s() * ps[i] * lp + pr.pi_d() * pd[i] * ln;
    }
    Ok((su, du, sd))
}
