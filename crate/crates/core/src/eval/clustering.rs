use rand::distr::weighted::WeightedIndex;
use rand::Rng as _;
use rand_distr::Distribution;

use crate::data::{common_dim, Label};
use crate::error::{Error, Result};
use crate::rng::{mix_seed, rng_from_seed, Rng};

/// Restarts granted to constrained k-means before it reports infeasibility.
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest allowed centroid; ties go to the lowest index.
fn nearest(x: &[f64], centroids: &[Vec<f64>], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (c, mu) in centroids.iter().enumerate() {
        if !allowed(c) {
            continue;
        }
        let d = sq_dist(x, mu);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((c, d));
        }
    }
    best.map(|(c, _)| c)
}

fn validate(points: &[Vec<f64>], k: usize) -> Result<usize> {
    if k == 0 || points.len() < k {
        return Err(Error::InsufficientData(format!("{k} clusters need at least {k} points, got {}", points.len())));
    }
    Ok(common_dim(points.iter())?.unwrap_or(0))
}

/// k-means++ seeding: uniform first centroid, then proportional to squared distance.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every point coincides with a centroid
            Err(_) => rng.random_range(0..points.len()),
        };
        let c = points[next].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Means of the assigned points; an empty cluster keeps its previous centroid.
fn update(points: &[Vec<f64>], assignment: &[usize], centroids: &mut [Vec<f64>], dim: usize) {
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        sums[c].iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    for ((mu, s), n) in centroids.iter_mut().zip(sums).zip(counts) {
        if n > 0 {
            *mu = s.into_iter().map(|v| v / n as f64).collect();
        }
    }
}

fn wcss(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(assignment).map(|(p, &c)| sq_dist(p, &centroids[c])).sum()
}

/// Lloyd iterations from k-means++ seeds until assignments stop changing or `max_iter` is hit.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let dim = validate(points, k)?;
    let mut rng = rng_from_seed(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids, |_| true).unwrap_or(0)).collect();
        let stable = next == assignment;
        assignment = next;
        history.push(wcss(points, &assignment, &centroids));
        if stable {
            break;
        }
        update(points, &assignment, &mut centroids, dim);
    }
    Ok(KMeansResult { assignment, centroids, wcss_history: history, iterations })
}

/// Union-find root with path halving.
fn root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Must-link components and the cannot-link pairs between them.
fn constraint_graph(n: usize, must: &[(usize, usize)], cannot: &[(usize, usize)]) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    if let Some(&(a, b)) = must.iter().chain(cannot).find(|(a, b)| *a >= n || *b >= n) {
        return Err(Error::OutOfRange(format!("constraint ({a}, {b}) refers to a point outside 0..{n}")));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in must {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        parent[ra] = rb;
    }
    let comp: Vec<usize> = (0..n).map(|i| root(&mut parent, i)).collect();
    let mut forbid = vec![Vec::new(); n];
    for &(a, b) in cannot {
        if comp[a] == comp[b] {
            return Err(Error::Infeasible);
        }
        forbid[comp[a]].push(comp[b]);
        forbid[comp[b]].push(comp[a]);
    }
    Ok((comp, forbid))
}

fn cop_attempt(
    points: &[Vec<f64>],
    comp: &[usize],
    forbid: &[Vec<usize>],
    k: usize,
    dim: usize,
    seed: u64,
    max_iter: usize,
) -> Option<KMeansResult> {
    let mut rng = rng_from_seed(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let n = points.len();
    let mut assignment: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        // cluster of each must-link component, fixed by its first assigned member
        let mut comp_cluster: Vec<Option<usize>> = vec![None; n];
        let mut next = Vec::with_capacity(n);
        for (i, p) in points.iter().enumerate() {
            let c = match comp_cluster[comp[i]] {
                Some(c) => c,
                None => {
                    let blocked = |c: usize| forbid[comp[i]].iter().any(|&o| comp_cluster[o] == Some(c));
                    let c = nearest(p, &centroids, |c| !blocked(c))?;
                    comp_cluster[comp[i]] = Some(c);
                    c
                }
            };
            next.push(c);
        }
        let stable = next == assignment;
        assignment = next;
        history.push(wcss(points, &assignment, &centroids));
        if stable {
            break;
        }
        update(points, &assignment, &mut centroids, dim);
    }
    Some(KMeansResult { assignment, centroids, wcss_history: history, iterations })
}

/// COP-k-means: Lloyd iterations whose assignment step respects must-link and cannot-link pairs.
///
/// Points are assigned in index order. Must-links are closed transitively, so a point follows the
/// first assigned member of its must-link component. When some point has no admissible cluster
/// the attempt is abandoned and rerun from new seeds, up to `restarts` extra attempts. The first
/// attempt uses `seed` itself, so without constraints the result equals [`kmeans`].
pub fn cop_kmeans(
    points: &[Vec<f64>],
    must: &[(usize, usize)],
    cannot: &[(usize, usize)],
    k: usize,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<KMeansResult> {
    let dim = validate(points, k)?;
    let (comp, forbid) = constraint_graph(points.len(), must, cannot)?;
    for attempt in 0..=restarts {
        let s = if attempt == 0 { seed } else { mix_seed(seed, &[attempt as u64]) };
        if let Some(r) = cop_attempt(points, &comp, &forbid, k, dim, s, max_iter) {
            return Ok(r);
        }
    }
    Err(Error::Infeasible)
}

/// `1 - min(r, 1 - r)` where `r` is the error rate with cluster 0 read as the positive class.
pub fn clustering_accuracy(assignment: &[usize], labels: &[Label]) -> Result<f64> {
    if assignment.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: assignment.len() });
    }
    if assignment.is_empty() {
        return Err(Error::EmptyData("clustering accuracy needs at least one point".into()));
    }
    if assignment.iter().any(|&c| c > 1) {
        return Err(Error::NotBinary);
    }
    let wrong = assignment
        .iter()
        .zip(labels)
        .filter(|(&c, &l)| (c == 0) != (l == Label::Positive))
        .count();
    let r = wrong as f64 / labels.len() as f64;
    Ok(1.0 - r.min(1.0 - r))
}

/// Nearest-centroid assignment of new points; the centroids are left untouched.
pub fn predict_from_clusters(centroids: &[Vec<f64>], points: &[Vec<f64>]) -> Result<Vec<usize>> {
    let dim = centroids.first().map_or(0, Vec::len);
    points
        .iter()
        .map(|p| {
            if let Some(bad) = centroids.iter().map(Vec::len).chain([p.len()]).find(|&l| l != dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: bad });
            }
            nearest(p, centroids, |_| true).ok_or_else(|| Error::EmptyData("no centroids".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand_distr::StandardNormal;

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = rng_from_seed(seed);
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let (c, l) = if i % 2 == 0 { (sep, Label::Positive) } else { (-sep, Label::Negative) };
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            pts.push(vec![c + a, b]);
            labels.push(l);
        }
        (pts, labels)
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let (pts, labels) = blobs(200, 20.0, 1);
        let r = kmeans(&pts, 2, 3, 100).unwrap();
        assert_eq!(clustering_accuracy(&r.assignment, &labels).unwrap(), 1.0);
        let (test, test_labels) = blobs(50, 20.0, 2);
        let pred = predict_from_clusters(&r.centroids, &test).unwrap();
        assert_eq!(clustering_accuracy(&pred, &test_labels).unwrap(), 1.0);
    }

    #[test]
    fn single_cluster_centroid_is_mean() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]];
        let r = kmeans(&pts, 1, 0, 10).unwrap();
        assert_eq!(r.assignment, vec![0, 0, 0]);
        assert_abs_diff_eq!(r.centroids[0][0], 2.0);
        assert_abs_diff_eq!(r.centroids[0][1], 1.0);
    }

    #[test]
    fn duplicate_rows_share_a_cluster() {
        let (mut pts, _) = blobs(40, 2.0, 5);
        pts.extend(pts.clone());
        let r = kmeans(&pts, 2, 1, 100).unwrap();
        assert_eq!(r.assignment[..40], r.assignment[40..]);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(kmeans(&[vec![1.0]], 2, 0, 10), Err(Error::InsufficientData(_))));
        assert!(matches!(cop_kmeans(&[vec![1.0]], &[], &[], 2, 0, 10, 1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn unconstrained_cop_equals_kmeans() {
        let (pts, _) = blobs(100, 1.0, 8);
        for seed in 0..5 {
            assert_eq!(cop_kmeans(&pts, &[], &[], 2, seed, 50, DEFAULT_RESTARTS).unwrap(), kmeans(&pts, 2, seed, 50).unwrap());
        }
    }

    #[test]
    fn cannot_link_splits_coincident_points() {
        let pts = vec![vec![0.0], vec![0.0], vec![5.0]];
        let r = cop_kmeans(&pts, &[], &[(0, 1)], 2, 0, 20, DEFAULT_RESTARTS).unwrap();
        assert_ne!(r.assignment[0], r.assignment[1]);
    }

    #[test]
    fn must_link_is_honored_and_contradictions_fail() {
        let (pts, _) = blobs(30, 10.0, 4);
        // points 0 and 1 sit in different blobs
        let r = cop_kmeans(&pts, &[(0, 1)], &[], 2, 0, 50, DEFAULT_RESTARTS).unwrap();
        assert_eq!(r.assignment[0], r.assignment[1]);
        assert_eq!(cop_kmeans(&pts, &[(0, 1)], &[(0, 1)], 2, 0, 50, 3), Err(Error::Infeasible));
        assert_eq!(cop_kmeans(&pts, &[(0, 1), (1, 2)], &[(2, 0)], 2, 0, 50, 3), Err(Error::Infeasible));
        // three mutually cannot-linked points cannot fit in two clusters
        assert_eq!(cop_kmeans(&pts, &[], &[(0, 1), (1, 2), (0, 2)], 2, 0, 50, 3), Err(Error::Infeasible));
    }

    #[test]
    fn clustering_accuracy_cases() {
        let labels = [Label::Positive, Label::Negative, Label::Positive];
        assert_eq!(clustering_accuracy(&[0, 1, 0], &labels).unwrap(), 1.0);
        assert_eq!(clustering_accuracy(&[1, 0, 1], &labels).unwrap(), 1.0);
        let seven: Vec<Label> = (0..10).map(|i| if i < 7 { Label::Positive } else { Label::Negative }).collect();
        assert_abs_diff_eq!(clustering_accuracy(&[1; 10], &seven).unwrap(), 0.7);
        assert!(matches!(clustering_accuracy(&[0, 1], &labels), Err(Error::DimensionMismatch { .. })));
        assert_eq!(clustering_accuracy(&[0, 2, 1], &labels), Err(Error::NotBinary));
    }

    #[test]
    fn random_assignment_is_at_chance() {
        let mut rng = rng_from_seed(3);
        let labels: Vec<Label> = (0..100_000).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        let assign: Vec<usize> = (0..100_000).map(|_| rng.random_range(0..2)).collect();
        assert_abs_diff_eq!(clustering_accuracy(&assign, &labels).unwrap(), 0.5, epsilon = 0.01);
    }

    #[test]
    fn prediction_ties_and_exact_hits() {
        let c = vec![vec![-1.0], vec![1.0]];
        assert_eq!(predict_from_clusters(&c, &[vec![1.0], vec![0.0], vec![-1.0]]).unwrap(), vec![1, 0, 0]);
        assert!(matches!(predict_from_clusters(&c, &[vec![1.0, 2.0]]), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn wcss_never_increases(seed in 0u64..1000, sep in 0.0f64..4.0) {
            let (pts, _) = blobs(60, sep, seed);
            let r = kmeans(&pts, 3, seed, 100).unwrap();
            for w in r.wcss_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn clustering_accuracy_at_least_half(assign in prop::collection::vec(0usize..2, 1..50), seed in 0u64..100) {
            let mut rng = rng_from_seed(seed);
            let labels: Vec<Label> = assign.iter().map(|_| if rng.random::<bool>() { Label::Positive } else { Label::Negative }).collect();
            let a = clustering_accuracy(&assign, &labels).unwrap();
            prop_assert!((0.5..=1.0).contains(&a));
        }
    }
}
