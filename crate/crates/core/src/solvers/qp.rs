//! Primal log-barrier interior-point method for `min x^T P x / 2 + q^T x  s.t.  G x <= h`.
//!
//! Variables whose `P` row is diagonal and which never share a constraint row with another such
//! variable (the slack variables of the double-hinge program) are eliminated from every Newton
//! system, leaving a dense system over the remaining variables only.

use nalgebra::{DMatrix, DVector};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const BARRIER_GROWTH: f64 = 10.0;
const ARMIJO: f64 = 0.01;
const BACKTRACK: f64 = 0.5;
const CENTERING_DECREMENT: f64 = 1e-6;
const FULL_STEP_DECREMENT: f64 = 0.25;

/// Convex quadratic program `min x^T P x / 2 + q^T x` subject to `G x <= h`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub p: SparseMatrix,
    pub q: DVector<f64>,
    pub g: SparseMatrix,
    pub h: DVector<f64>,
}

impl QpProblem {
    pub fn new(p: SparseMatrix, q: DVector<f64>, g: SparseMatrix, h: DVector<f64>) -> Result<Self> {
        let n = q.len();
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: p.nrows().max(p.ncols()) });
        }
        if g.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.ncols() });
        }
        if g.nrows() != h.len() {
            return Err(Error::DimensionMismatch { expected: g.nrows(), found: h.len() });
        }
        for r in 0..n {
            for (c, v) in p.row(r) {
                if (v - p.get(c, r)).abs() > SYMMETRY_TOL {
                    return Err(Error::OutOfRange(format!("P is not symmetric at ({r}, {c})")));
                }
            }
        }
        if q.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("QP data must be finite".into()));
        }
        Ok(Self { p, q, g, h })
    }

    pub fn from_dense(p: DMatrix<f64>, q: DVector<f64>, g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        Self::new(SparseMatrix::from_dense(&p), q, SparseMatrix::from_dense(&g), h)
    }

    pub fn n_vars(&self) -> usize {
        self.q.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.h.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&self.p.mul_vec(x)) + self.q.dot(x)
    }

    /// `h - G x`, positive at strictly feasible points.
    pub fn slack(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h - self.g.mul_vec(x)
    }

    pub fn is_strictly_feasible(&self, x: &DVector<f64>) -> bool {
        self.slack(x).iter().all(|&s| s > 0.0)
    }
}

/// Solver output with KKT residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// `max(0, max_i (G x - h)_i)`.
    pub primal_residual: f64,
    /// `|P x + q + G^T z|_inf` with barrier duals `z_i = 1 / (t s_i)`.
    pub stationarity_residual: f64,
    /// `m / t`, the gap between the primal objective and the barrier dual bound.
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves from `x = 0` when that point is strictly feasible, otherwise after a phase-one search.
pub fn solve_qp(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution> {
    let x0 = initial_point(problem, tol, max_iter)?;
    finish(solve_qp_report(problem, &x0, tol, max_iter)?)
}

/// Solves from a caller-supplied strictly feasible point.
pub fn solve_qp_from(problem: &QpProblem, x0: &DVector<f64>, tol: f64, max_iter: usize) -> Result<QpSolution> {
    finish(solve_qp_report(problem, x0, tol, max_iter)?)
}

fn finish(sol: QpSolution) -> Result<QpSolution> {
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::MaxIterations {
            iterations: sol.iterations,
            residual: sol.stationarity_residual.max(sol.duality_gap),
        })
    }
}

/// Runs the barrier method and returns the last iterate even when the iteration budget runs out.
pub fn solve_qp_report(problem: &QpProblem, x0: &DVector<f64>, tol: f64, max_iter: usize) -> Result<QpSolution> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange("tolerance must be positive".into()));
    }
    if x0.len() != problem.n_vars() {
        return Err(Error::DimensionMismatch { expected: problem.n_vars(), found: x0.len() });
    }
    if !problem.is_strictly_feasible(x0) {
        return Err(Error::InfeasibleProblem("starting point is not strictly feasible".into()));
    }
    let layout = Layout::new(problem);
    let m = problem.n_constraints() as f64;
    let mut x = x0.clone();
    let mut s = problem.slack(&x);
    let mut t = 1.0;
    let mut iterations = 0;
    loop {
        let last = m / t <= tol;
        let target = if last { 0.5 * tol } else { f64::INFINITY };
        let centered = center(problem, &layout, &mut x, &mut s, t, target, max_iter, &mut iterations)?;
        if last || iterations >= max_iter {
            return Ok(report(problem, &x, &s, t, iterations, last && centered));
        }
        t *= BARRIER_GROWTH;
        if m / t < tol {
            t = m / tol;
        }
    }
}

fn report(problem: &QpProblem, x: &DVector<f64>, s: &DVector<f64>, t: f64, iterations: usize, centered: bool) -> QpSolution {
    let z = s.map(|si| 1.0 / (t * si));
    let stationarity = stationarity(problem, x, &z);
    let primal = problem.slack(x).iter().fold(0.0f64, |acc, &si| acc.max(-si));
    let gap = problem.n_constraints() as f64 / t;
    QpSolution {
        x: x.clone(),
        objective: problem.objective(x),
        primal_residual: primal,
        stationarity_residual: stationarity,
        duality_gap: gap,
        iterations,
        converged: centered,
    }
}

fn stationarity(problem: &QpProblem, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
    let r = problem.p.mul_vec(x) + &problem.q + problem.g.tr_mul_vec(z);
    r.amax()
}

fn barrier_value(problem: &QpProblem, x: &DVector<f64>, s: &DVector<f64>, t: f64) -> f64 {
    if s.iter().any(|&si| !(si > 0.0)) {
        return f64::INFINITY;
    }
    t * problem.objective(x) - s.iter().map(|si| si.ln()).sum::<f64>()
}

/// Newton iterations on the barrier function at fixed `t`.
///
/// The slack `s = h - G x` is carried as its own iterate and updated by `-alpha G dx`, which
/// keeps small slacks accurate where recomputing `h - G x` would cancel. Stops once the Newton
/// decrement is small and, when `target` is finite, the stationarity residual is below
/// `target`. Returns whether the stopping rule was met.
#[allow(clippy::too_many_arguments)]
fn center(
    problem: &QpProblem,
    layout: &Layout,
    x: &mut DVector<f64>,
    s: &mut DVector<f64>,
    t: f64,
    target: f64,
    max_iter: usize,
    iterations: &mut usize,
) -> Result<bool> {
    loop {
        let inv_s = s.map(|si| 1.0 / si);
        let grad = (problem.p.mul_vec(x) + &problem.q) * t + problem.g.tr_mul_vec(&inv_s);
        let station = grad.amax() / t;
        if target.is_finite() && station <= target {
            return Ok(true);
        }
        if *iterations >= max_iter {
            return Ok(false);
        }
        let dx = layout.newton_direction(problem, s, t, &grad)?;
        let decrement = -grad.dot(&dx);
        if !target.is_finite() && decrement * 0.5 <= CENTERING_DECREMENT {
            return Ok(true);
        }
        *iterations += 1;
        if !(decrement > 0.0) || !decrement.is_finite() {
            // no descent available at working precision
            return Ok(!target.is_finite() || station <= target * 2.0);
        }
        let ds = -problem.g.mul_vec(&dx);
        let mut alpha_max = f64::INFINITY;
        for (si, di) in s.iter().zip(ds.iter()) {
            if *di < 0.0 {
                alpha_max = alpha_max.min(-si / di);
            }
        }
        // inside the quadratic convergence region a full step needs no line search
        if decrement.sqrt() < FULL_STEP_DECREMENT && alpha_max > 1.0 / 0.99 {
            *x += &dx;
            *s += &ds;
            continue;
        }
        let mut alpha = (0.99 * alpha_max).min(1.0);
        let phi0 = barrier_value(problem, x, s, t);
        let mut accepted = false;
        for _ in 0..60 {
            let cand_x = &*x + &dx * alpha;
            let cand_s = &*s + &ds * alpha;
            let phi = barrier_value(problem, &cand_x, &cand_s, t);
            if phi <= phi0 - ARMIJO * alpha * decrement {
                *x = cand_x;
                *s = cand_s;
                accepted = true;
                break;
            }
            alpha *= BACKTRACK;
        }
        if !accepted {
            return Ok(!target.is_finite() || station <= target * 2.0);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Dense(usize),
    Sep(usize),
}

/// Variable partition and per-row sparsity used to assemble the reduced Newton system.
#[derive(Debug)]
struct Layout {
    slots: Vec<Slot>,
    n_dense: usize,
    n_sep: usize,
    row_dense: Vec<Vec<(usize, f64)>>,
    row_sep: Vec<Option<(usize, f64)>>,
    sep_rows: Vec<Vec<usize>>,
    sep_p: Vec<f64>,
    p_dense: DMatrix<f64>,
}

impl Layout {
    fn new(problem: &QpProblem) -> Self {
        let n = problem.n_vars();
        let m = problem.n_constraints();
        let diagonal: Vec<bool> = (0..n).map(|j| problem.p.row(j).all(|(c, _)| c == j)).collect();
        let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n];
        for r in 0..m {
            for (c, _) in problem.g.row(r) {
                rows_of[c].push(r);
            }
        }
        // accept variables touching few rows first, so slack-like variables win over shared ones
        let mut order: Vec<usize> = (0..n).filter(|&j| diagonal[j]).collect();
        order.sort_by_key(|&j| (rows_of[j].len(), j));
        let mut candidate = vec![false; n];
        let mut row_taken = vec![false; m];
        for j in order {
            if rows_of[j].is_empty() && problem.p.get(j, j) <= 0.0 {
                continue;
            }
            if rows_of[j].iter().all(|&r| !row_taken[r]) {
                candidate[j] = true;
                for &r in &rows_of[j] {
                    row_taken[r] = true;
                }
            }
        }
        let mut slots = Vec::with_capacity(n);
        let (mut nd, mut ns) = (0, 0);
        let mut sep_p = Vec::new();
        for j in 0..n {
            if candidate[j] {
                slots.push(Slot::Sep(ns));
                sep_p.push(problem.p.get(j, j));
                ns += 1;
            } else {
                slots.push(Slot::Dense(nd));
                nd += 1;
            }
        }
        let mut row_dense = Vec::with_capacity(m);
        let mut row_sep = Vec::with_capacity(m);
        let mut sep_rows = vec![Vec::new(); ns];
        for r in 0..m {
            let mut dense = Vec::new();
            let mut sep = None;
            for (c, v) in problem.g.row(r) {
                match slots[c] {
                    Slot::Dense(i) => dense.push((i, v)),
                    Slot::Sep(i) => {
                        sep = Some((i, v));
                        sep_rows[i].push(r);
                    }
                }
            }
            row_dense.push(dense);
            row_sep.push(sep);
        }
        let mut p_dense = DMatrix::zeros(nd, nd);
        for j in 0..n {
            if let Slot::Dense(i) = slots[j] {
                for (c, v) in problem.p.row(j) {
                    if let Slot::Dense(k) = slots[c] {
                        p_dense[(i, k)] = v;
                    }
                }
            }
        }
        Self { slots, n_dense: nd, n_sep: ns, row_dense, row_sep, sep_rows, sep_p, p_dense }
    }

    /// Solves `H dx = -grad` for the barrier Hessian `H = t P + G^T diag(1/s^2) G`.
    fn newton_direction(
        &self,
        problem: &QpProblem,
        s: &DVector<f64>,
        t: f64,
        grad: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let nd = self.n_dense;
        let w = s.map(|si| 1.0 / (si * si));
        let mut schur = &self.p_dense * t;
        let mut rhs_dense = DVector::zeros(nd);
        let mut rhs_sep = DVector::zeros(self.n_sep);
        for (j, slot) in self.slots.iter().enumerate() {
            match *slot {
                Slot::Dense(i) => rhs_dense[i] = -grad[j],
                Slot::Sep(i) => rhs_sep[i] = -grad[j],
            }
        }
        for (r, sep) in self.row_sep.iter().enumerate() {
            if sep.is_none() {
                add_outer(&mut schur, &self.row_dense[r], &self.row_dense[r], w[r]);
            }
        }
        // Eliminating a separable variable leaves
        //   [t p sum_r w_r a_r a_r^T + sum_{r<r'} w_r w_r' u u^T] / h,  u = g_r' a_r - g_r a_r',
        // which avoids subtracting two nearly equal large matrices near the boundary.
        let mut h_sep = DVector::zeros(self.n_sep);
        let mut coupling = DMatrix::zeros(self.n_sep, nd);
        let mut u = DVector::zeros(nd);
        for i in 0..self.n_sep {
            let rows = &self.sep_rows[i];
            let tp = t * self.sep_p[i];
            let mut hi = tp;
            for &r in rows {
                let g = self.row_sep[r].unwrap().1;
                hi += w[r] * g * g;
                for &(k, v) in &self.row_dense[r] {
                    coupling[(i, k)] += w[r] * g * v;
                }
            }
            h_sep[i] = hi;
            if tp > 0.0 {
                for &r in rows {
                    add_outer(&mut schur, &self.row_dense[r], &self.row_dense[r], tp * w[r] / hi);
                }
            }
            for (a, &r1) in rows.iter().enumerate() {
                for &r2 in &rows[a + 1..] {
                    let g1 = self.row_sep[r1].unwrap().1;
                    let g2 = self.row_sep[r2].unwrap().1;
                    u.fill(0.0);
                    for &(k, v) in &self.row_dense[r1] {
                        u[k] += g2 * v;
                    }
                    for &(k, v) in &self.row_dense[r2] {
                        u[k] -= g1 * v;
                    }
                    let coef = w[r1] * w[r2] / hi;
                    schur.ger(coef, &u, &u, 1.0);
                }
            }
            let ri = rhs_sep[i] / hi;
            for k in 0..nd {
                rhs_dense[k] -= coupling[(i, k)] * ri;
            }
        }
        let dx_dense = solve_spd(schur, &rhs_dense)?;
        let mut dx = DVector::zeros(problem.n_vars());
        for (j, slot) in self.slots.iter().enumerate() {
            match *slot {
                Slot::Dense(i) => dx[j] = dx_dense[i],
                Slot::Sep(i) => {
                    let c = coupling.row(i).transpose().dot(&dx_dense);
                    dx[j] = (rhs_sep[i] - c) / h_sep[i];
                }
            }
        }
        Ok(dx)
    }
}

fn add_outer(m: &mut DMatrix<f64>, a: &[(usize, f64)], b: &[(usize, f64)], scale: f64) {
    for &(i, vi) in a {
        for &(k, vk) in b {
            m[(i, k)] += scale * vi * vk;
        }
    }
}

fn solve_spd(mut m: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if m.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    let scale = m.diagonal().amax().max(1.0);
    for k in 0..3 {
        let jitter = scale * 1e-12 * 100f64.powi(k);
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.clone().cholesky() {
            return Ok(ch.solve(rhs));
        }
    }
    m.lu().solve(rhs).ok_or(Error::SingularSystem)
}

/// Finds a strictly feasible point, trying the origin first.
///
/// The phase-one program is `min tau + delta |x|^2 / 2  s.t.  G x - tau <= h, tau >= -1`.
fn initial_point(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<DVector<f64>> {
    let n = problem.n_vars();
    let origin = DVector::zeros(n);
    if problem.is_strictly_feasible(&origin) {
        return Ok(origin);
    }
    let m = problem.n_constraints();
    let tau = n;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(problem.g.nnz() + m + 1);
    for r in 0..m {
        for (c, v) in problem.g.row(r) {
            triplets.push((r, c, v));
        }
        triplets.push((r, tau, -1.0));
    }
    triplets.push((m, tau, -1.0));
    let g = SparseMatrix::from_triplets(m + 1, n + 1, &triplets);
    let mut h = problem.h.clone().insert_row(m, 1.0);
    h[m] = 1.0;
    let delta = 1e-8;
    let p = SparseMatrix::from_triplets(n + 1, n + 1, &(0..n).map(|j| (j, j, delta)).collect::<Vec<_>>());
    let mut q = DVector::zeros(n + 1);
    q[tau] = 1.0;
    let phase_one = QpProblem { p, q, g, h };
    let worst = problem.h.iter().fold(0.0f64, |acc, &hi| acc.max(-hi));
    let mut start = DVector::zeros(n + 1);
    start[tau] = worst + 1.0;
    let sol = solve_qp_report(&phase_one, &start, tol.min(1e-8), max_iter)?;
    let x = sol.x.rows(0, n).into_owned();
    if problem.is_strictly_feasible(&x) {
        Ok(x)
    } else {
        Err(Error::InfeasibleProblem("no strictly feasible point found".into()))
    }
}
