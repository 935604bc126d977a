//! Tabulated estimation-error bounds over sample-size grids.

use std::fmt::Write as _;

use pairwise_risk::prior_bounds::{
    bound_factor, bound_sdu_with_factor, bounds_with_factor, chernoff_violation_bound, BoundConstants,
};
use pairwise_risk::{make_priors, GammaWeights};

use crate::error::CliError;

/// How the leading factor of the bounds is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    /// The same `C` for the single-risk and the weighted bounds.
    Direct(f64),
    Constants(BoundConstants),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSpec {
    pub pi_plus: Vec<f64>,
    pub factor: Factor,
    pub n_s: Vec<usize>,
    pub n_d: Vec<usize>,
    pub n_u: Vec<usize>,
    pub gamma: GammaWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub pi_plus: f64,
    pub n_s: usize,
    pub n_d: usize,
    pub n_u: usize,
    pub v_su: f64,
    pub v_du: f64,
    pub v_sd: f64,
    pub v_sdu: f64,
    /// Upper bound on the probability that the pair counts break the ordering.
    pub chernoff: f64,
    /// `pi_S / sqrt(2 n_S) > pi_D / sqrt(2 n_D)`, under which both orderings must hold.
    pub condition: bool,
    pub sd_le_su: bool,
    pub du_le_su: bool,
}

pub const BOUNDS_HEADER: &str = "pi_plus,n_s,n_d,n_u,v_su,v_du,v_sd,v_sdu,chernoff,condition,sd_le_su,du_le_su";

/// One row per point of the (pi_plus, n_s, n_d, n_u) grid, in that nesting order.
pub fn bounds_report(spec: &BoundsSpec) -> Result<Vec<BoundsRow>, CliError> {
    for (name, empty) in [
        ("pi_plus", spec.pi_plus.is_empty()),
        ("n_s", spec.n_s.is_empty()),
        ("n_d", spec.n_d.is_empty()),
        ("n_u", spec.n_u.is_empty()),
    ] {
        if empty {
            return Err(CliError::Config(format!("bounds grid {name} is empty")));
        }
    }
    let mut rows = Vec::new();
    for &pi_plus in &spec.pi_plus {
        let priors = make_priors(pi_plus).map_err(|e| CliError::Config(format!("pi_plus: {e}")))?;
        let (c, c_sdu) = match spec.factor {
            Factor::Direct(c) => (c, c),
            Factor::Constants(k) => (bound_factor(&k, &priors, 8)?, bound_factor(&k, &priors, 12)?),
        };
        for &n_s in &spec.n_s {
            for &n_d in &spec.n_d {
                for &n_u in &spec.n_u {
                    let r = bounds_with_factor(c, &priors, n_s, n_d, n_u).map_err(|e| CliError::Config(e.to_string()))?;
                    let v_sdu = bound_sdu_with_factor(c_sdu, &priors, &spec.gamma, n_s, n_d, n_u)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    let lhs = priors.pi_s() / ((2 * n_s) as f64).sqrt();
                    let rhs = priors.pi_d() / ((2 * n_d) as f64).sqrt();
                    rows.push(BoundsRow {
                        pi_plus,
                        n_s,
                        n_d,
                        n_u,
                        v_su: r.v_su,
                        v_du: r.v_du,
                        v_sd: r.v_sd,
                        v_sdu,
                        chernoff: chernoff_violation_bound(n_s + n_d, &priors),
                        condition: lhs > rhs,
                        sd_le_su: r.sd_le_su,
                        du_le_su: r.du_le_su,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn bounds_to_csv(rows: &[BoundsRow]) -> String {
    let mut out = format!("{BOUNDS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.pi_plus, r.n_s, r.n_d, r.n_u, r.v_su, r.v_du, r.v_sd, r.v_sdu, r.chernoff, r.condition, r.sd_le_su, r.du_le_su
        );
    }
    out
}
