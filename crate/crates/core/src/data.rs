//! Sample containers: labeled examples, pairs and unlabeled points.

use crate::error::{Error, Result};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1.0` or `-1.0`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    /// Sign rule with the tie `0 -> +1`.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, label: Label) -> Result<Self> {
        check_finite(&features)?;
        Ok(Self { features, label })
    }
}

/// Two examples `(x, x')` whose labels are hidden.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExample {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl PairExample {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                found: second.len(),
            });
        }
        check_finite(&first)?;
        check_finite(&second)?;
        Ok(Self { first, second })
    }
}

/// Similar pairs (same hidden label) and dissimilar pairs (different hidden labels).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairSet {
    pub similar: Vec<PairExample>,
    pub dissimilar: Vec<PairExample>,
}

impl PairSet {
    pub fn new(similar: Vec<PairExample>, dissimilar: Vec<PairExample>) -> Self {
        Self { similar, dissimilar }
    }

    pub fn n_similar(&self) -> usize {
        self.similar.len()
    }

    pub fn n_dissimilar(&self) -> usize {
        self.dissimilar.len()
    }

    /// Shared dimension of all pair members, `None` when there are no pairs.
    pub fn dim(&self) -> Result<Option<usize>> {
        let mut dim = None;
        for pair in self.similar.iter().chain(&self.dissimilar) {
            for x in [&pair.first, &pair.second] {
                match dim {
                    None => dim = Some(x.len()),
                    Some(d) if d != x.len() => {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: x.len(),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(dim)
    }

    /// Both members of every pair, similar pairs first, in pair order.
    pub fn members(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.similar
            .iter()
            .chain(&self.dissimilar)
            .flat_map(|p| [&p.first, &p.second])
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnlabeledSet {
    pub points: Vec<Vec<f64>>,
}

impl UnlabeledSet {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Result<Option<usize>> {
        common_dim(self.points.iter())
    }
}

/// Fully labeled data, used as the pool that pairs and unlabeled points are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<LabeledSample>,
    pub dim: usize,
}

impl LabeledDataset {
    pub fn new(samples: Vec<LabeledSample>) -> Result<Self> {
        let dim = common_dim(samples.iter().map(|s| &s.features))?.unwrap_or(0);
        Ok(Self { samples, dim })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let pos = self
            .samples
            .iter()
            .filter(|s| s.label == Label::Positive)
            .count();
        pos as f64 / self.samples.len() as f64
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

pub(crate) fn common_dim<'a>(mut rows: impl Iterator<Item = &'a Vec<f64>>) -> Result<Option<usize>> {
    let Some(first) = rows.next() else {
        return Ok(None);
    };
    let d = first.len();
    for r in rows {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
    }
    Ok(Some(d))
}

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::OutOfRange("feature vector has a non-finite entry".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_rule_ties_to_positive() {
        assert_eq!(Label::from_score(0.0), Label::Positive);
        assert_eq!(Label::from_score(-0.0), Label::Positive);
        assert_eq!(Label::from_score(0.3), Label::Positive);
        assert_eq!(Label::from_score(-0.3), Label::Negative);
    }

    #[test]
    fn pair_rejects_mismatched_members() {
        assert!(matches!(
            PairExample::new(vec![1.0, 2.0], vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(PairExample::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn pair_set_dim_checks_all_members() {
        let mut set = PairSet::default();
        assert_eq!(set.dim().unwrap(), None);
        set.similar.push(PairExample::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap());
        assert_eq!(set.dim().unwrap(), Some(2));
        set.dissimilar.push(PairExample {
            first: vec![1.0],
            second: vec![1.0],
        });
        assert!(set.dim().is_err());
    }
}
