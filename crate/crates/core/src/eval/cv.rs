use std::cmp::Ordering;

use rand::seq::SliceRandom;

use crate::data::{PairExample, PairSet, UnlabeledSet};
use crate::error::{Error, Result};
use crate::losses::MarginLoss;
use crate::model::{build_design_matrices, FeatureMap};
use crate::priors::ClassPriors;
use crate::risks::{gamma_for_variant, validation_risk_sd_zero_one, GammaWeights, Variant};
use crate::rng::rng_from_seed;
use crate::solvers::{fit, SolverConfig};

/// How grid values of `gamma` turn into risk weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mixing {
    /// One parameter `g` for a two-risk combination.
    Pair(Variant),
    /// Two parameters `(g1, g2)` from the grid with `g1 + g2 <= 1` and `g3 = 1 - g1 - g2`.
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub mixing: Mixing,
}

impl HyperGrid {
    pub fn new(lambdas: Vec<f64>, gammas: Vec<f64>, mixing: Mixing) -> Result<Self> {
        if lambdas.is_empty() || gammas.is_empty() {
            return Err(Error::OutOfRange("hyperparameter grid lists must be nonempty".into()));
        }
        if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::OutOfRange(format!("lambda must be positive, got {l}")));
        }
        if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::OutOfRange(format!("gamma must lie in [0, 1], got {g}")));
        }
        Ok(Self { lambdas, gammas, mixing })
    }

    /// Cells in tie-break order: mixing parameters ascending, then lambda descending.
    pub fn cells(&self) -> Result<Vec<(f64, Vec<f64>, GammaWeights)>> {
        let mixes: Vec<(Vec<f64>, GammaWeights)> = match self.mixing {
            Mixing::Pair(v) => self
                .gammas
                .iter()
                .map(|&g| Ok((vec![g], gamma_for_variant(v, g)?)))
                .collect::<Result<_>>()?,
            Mixing::General => {
                let mut out = Vec::new();
                for &g1 in &self.gammas {
                    for &g2 in &self.gammas {
                        if g1 + g2 <= 1.0 + 1e-12 {
                            let g3 = (1.0 - g1 - g2).max(0.0);
                            out.push((vec![g1, g2], GammaWeights::new(g1, g2, g3)?));
                        }
                    }
                }
                out
            }
        };
        let mut cells: Vec<(f64, Vec<f64>, GammaWeights)> = mixes
            .into_iter()
            .flat_map(|(mix, w)| self.lambdas.iter().map(move |&l| (l, mix.clone(), w)))
            .collect();
        cells.sort_by(|a, b| tie_order(&a.1, a.0, &b.1, b.0));
        Ok(cells)
    }
}

fn tie_order(mix_a: &[f64], lambda_a: f64, mix_b: &[f64], lambda_b: f64) -> Ordering {
    for (x, y) in mix_a.iter().zip(mix_b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    lambda_b.total_cmp(&lambda_a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub lambda: f64,
    /// Grid values that produced `weights`; one entry for [`Mixing::Pair`], two for [`Mixing::General`].
    pub mix: Vec<f64>,
    pub weights: GammaWeights,
    /// Infinite when the solver failed on some fold.
    pub mean_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best: CvCell,
    pub cells: Vec<CvCell>,
    pub folds: usize,
}

impl CvResult {
    pub fn best_lambda(&self) -> f64 {
        self.best.lambda
    }

    /// The first mixing parameter of the selected cell.
    pub fn best_gamma(&self) -> f64 {
        self.best.mix[0]
    }
}

/// Held-out and training indices of the similar and dissimilar pairs for one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train_s: Vec<usize>,
    pub val_s: Vec<usize>,
    pub train_d: Vec<usize>,
    pub val_d: Vec<usize>,
}

fn split_kind(n: usize, folds: usize, order: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    // position i in the shuffled order goes to fold i mod folds
    (0..folds)
        .map(|f| {
            let mut val: Vec<usize> = order.iter().enumerate().filter(|(i, _)| i % folds == f).map(|(_, &j)| j).collect();
            val.sort_unstable();
            let mut held = vec![false; n];
            val.iter().for_each(|&j| held[j] = true);
            let train = (0..n).filter(|&j| !held[j]).collect();
            (train, val)
        })
        .collect()
}

/// Stratified assignment of whole pairs to folds, each kind shuffled separately.
pub fn fold_plan(n_s: usize, n_d: usize, folds: usize, seed: u64) -> Result<Vec<FoldSplit>> {
    if folds < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 folds, got {folds}")));
    }
    if n_s < folds || n_d < folds {
        return Err(Error::InsufficientData(format!(
            "{folds} folds need at least {folds} similar and dissimilar pairs, got {n_s} and {n_d}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut order_s: Vec<usize> = (0..n_s).collect();
    let mut order_d: Vec<usize> = (0..n_d).collect();
    order_s.shuffle(&mut rng);
    order_d.shuffle(&mut rng);
    Ok(split_kind(n_s, folds, &order_s)
        .into_iter()
        .zip(split_kind(n_d, folds, &order_d))
        .map(|((train_s, val_s), (train_d, val_d))| FoldSplit { train_s, val_s, train_d, val_d })
        .collect())
}

fn pick(pairs: &[PairExample], idx: &[usize]) -> Vec<PairExample> {
    idx.iter().map(|&i| pairs[i].clone()).collect()
}

fn disjoint(a: &[usize], b: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    a.iter().for_each(|&i| seen[i] = true);
    b.iter().all(|&i| !seen[i])
}

/// Selects `(lambda, gamma)` by the mean zero-one SD risk on held-out pairs.
///
/// The unlabeled set is used in full for every training fold. A cell whose fit fails on any
/// fold scores infinity; if every cell fails, the first failure is returned.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    pairs: &PairSet,
    unlabeled: &UnlabeledSet,
    map: &FeatureMap,
    priors: &ClassPriors,
    loss: MarginLoss,
    grid: &HyperGrid,
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    let plan = fold_plan(pairs.n_similar(), pairs.n_dissimilar(), folds, seed)?;
    let cells = grid.cells()?;
    let mut sums = vec![0.0f64; cells.len()];
    let mut first_err: Option<Error> = None;
    for split in &plan {
        // identity tracking: no held-out pair may appear in the training side of its fold
        assert!(disjoint(&split.train_s, &split.val_s, pairs.n_similar()));
        assert!(disjoint(&split.train_d, &split.val_d, pairs.n_dissimilar()));
        let train = PairSet::new(pick(&pairs.similar, &split.train_s), pick(&pairs.dissimilar, &split.train_d));
        let val = PairSet::new(pick(&pairs.similar, &split.val_s), pick(&pairs.dissimilar, &split.val_d));
        let design = build_design_matrices(&train, unlabeled, map)?;
        for (sum, (lambda, _, weights)) in sums.iter_mut().zip(&cells) {
            if sum.is_infinite() {
                continue;
            }
            let risk = SolverConfig::new(*lambda, *weights, loss)
                .and_then(|cfg| fit(&design, priors, &cfg))
                .and_then(|model| validation_risk_sd_zero_one(&model, map, &val, priors));
            match risk {
                Ok(r) => *sum += r,
                Err(e) => {
                    first_err.get_or_insert(e);
                    *sum = f64::INFINITY;
                }
            }
        }
    }
    let cells: Vec<CvCell> = cells
        .into_iter()
        .zip(sums)
        .map(|((lambda, mix, weights), s)| CvCell { lambda, mix, weights, mean_risk: s / folds as f64 })
        .collect();
    let mut best: Option<&CvCell> = None;
    for c in &cells {
        if c.mean_risk.is_finite() && best.is_none_or(|b| c.mean_risk < b.mean_risk) {
            best = Some(c);
        }
    }
    match best {
        Some(b) => Ok(CvResult { best: b.clone(), cells: cells.clone(), folds }),
        None => Err(first_err.unwrap_or_else(|| Error::InsufficientData("no grid cell could be fitted".into()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{sample_gaussian_labeled, sample_pairs, sample_unlabeled, GaussianSpec};
    use crate::eval::accuracy;
    use crate::priors::make_priors;

    fn problem(seed: u64) -> (PairSet, UnlabeledSet, GaussianSpec) {
        let spec = GaussianSpec::separated(2, 3.0, 1.0, 0.7).unwrap();
        let pairs = sample_pairs(&spec, 80, 0.7, seed).unwrap();
        let u = sample_unlabeled(&spec, 100, 0.7, seed + 1).unwrap();
        (pairs, u, spec)
    }

    #[test]
    fn folds_partition_each_kind() {
        let plan = fold_plan(13, 7, 5, 3).unwrap();
        assert_eq!(plan.len(), 5);
        let mut all_s: Vec<usize> = plan.iter().flat_map(|f| f.val_s.clone()).collect();
        all_s.sort_unstable();
        assert_eq!(all_s, (0..13).collect::<Vec<_>>());
        for f in &plan {
            assert!(disjoint(&f.train_s, &f.val_s, 13));
            assert!(disjoint(&f.train_d, &f.val_d, 7));
            assert_eq!(f.train_s.len() + f.val_s.len(), 13);
            assert_eq!(f.train_d.len() + f.val_d.len(), 7);
            // stratified: sizes differ by at most one across folds
            assert!((2..=3).contains(&f.val_s.len()));
            assert!((1..=2).contains(&f.val_d.len()));
        }
        assert_eq!(plan, fold_plan(13, 7, 5, 3).unwrap());
    }

    #[test]
    fn insufficient_data() {
        assert!(matches!(fold_plan(4, 10, 5, 0), Err(Error::InsufficientData(_))));
        assert!(matches!(fold_plan(10, 10, 1, 0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn tie_break_prefers_small_gamma_then_large_lambda() {
        let grid = HyperGrid::new(vec![1e-3, 1e-1], vec![0.5, 0.0], Mixing::Pair(Variant::Sddu)).unwrap();
        let order: Vec<(f64, f64)> = grid.cells().unwrap().iter().map(|c| (c.1[0], c.0)).collect();
        assert_eq!(order, vec![(0.0, 1e-1), (0.0, 1e-3), (0.5, 1e-1), (0.5, 1e-3)]);
    }

    #[test]
    fn general_mixing_stays_on_simplex() {
        let grid = HyperGrid::new(vec![0.1], vec![0.0, 0.5, 1.0], Mixing::General).unwrap();
        let cells = grid.cells().unwrap();
        assert_eq!(cells.len(), 6);
        for (_, _, w) in cells {
            assert!((w.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_and_duplicate_cells() {
        let (pairs, u, _) = problem(1);
        let pr = make_priors(0.7).unwrap();
        let map = FeatureMap::identity(2);
        let one = HyperGrid::new(vec![0.1], vec![0.3], Mixing::Pair(Variant::Sddu)).unwrap();
        let r = cross_validate(&pairs, &u, &map, &pr, MarginLoss::Squared, &one, 5, 0).unwrap();
        assert_eq!((r.best_lambda(), r.best_gamma(), r.folds), (0.1, 0.3, 5));
        let dup = HyperGrid::new(vec![0.1, 0.1], vec![0.3, 0.3], Mixing::Pair(Variant::Sddu)).unwrap();
        let r2 = cross_validate(&pairs, &u, &map, &pr, MarginLoss::Squared, &dup, 5, 0).unwrap();
        assert_eq!(r2.best, r.best);
        assert!(r2.cells.iter().all(|c| c.mean_risk == r.best.mean_risk));
    }

    #[test]
    fn selected_cell_beats_worst_cell_on_test() {
        let (pairs, u, spec) = problem(7);
        let pr = make_priors(0.7).unwrap();
        let map = FeatureMap::identity(2);
        let grid = HyperGrid::new(vec![1e-1, 1e-4, 1e-7], vec![0.0, 0.5, 1.0], Mixing::Pair(Variant::Sddu)).unwrap();
        let test = sample_gaussian_labeled(&spec, 500, 99).unwrap();
        let design = build_design_matrices(&pairs, &u, &map).unwrap();
        let score = |lambda: f64, w: GammaWeights| {
            let m = fit(&design, &pr, &SolverConfig::new(lambda, w, MarginLoss::Squared).unwrap()).unwrap();
            accuracy(&m, &map, &test).unwrap()
        };
        let worst = grid.cells().unwrap().iter().map(|c| score(c.0, c.2)).fold(1.0f64, f64::min);
        let r = cross_validate(&pairs, &u, &map, &pr, MarginLoss::Squared, &grid, 5, 2).unwrap();
        assert!(score(r.best_lambda(), r.best.weights) >= worst);
        let min = r.cells.iter().map(|c| c.mean_risk).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best.mean_risk, min);
    }
}
