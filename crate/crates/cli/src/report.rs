//! CSV records and the per-method summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use pairwise_risk::{Error, MarginLoss};

use crate::config::Method;
use crate::experiment::{Status, TrialRecord};

pub const CSV_HEADER: &str = "trial,method,loss,n_s,n_d,n_u,lambda,gamma,prior_mode,prior_value,accuracy,status,wall_ms";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn record_to_csv(r: &TrialRecord) -> String {
    let status = match &r.status {
        Status::Ok => "ok".to_string(),
        Status::Failed(tag) => format!("failed:{tag}"),
    };
    [
        r.trial.to_string(),
        r.method.to_string(),
        opt(r.loss),
        r.n_s.to_string(),
        r.n_d.to_string(),
        r.n_u.to_string(),
        opt(r.lambda),
        opt(r.gamma),
        opt(r.prior_mode),
        opt(r.prior_value),
        opt(r.accuracy),
        status,
        opt(r.wall_ms),
    ]
    .join(",")
}

/// Header plus one line per record, newline-terminated.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_to_csv(r));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub loss: Option<MarginLoss>,
    pub n_ok: usize,
    pub n_failed: usize,
    /// `None` when every trial of the group failed.
    pub mean: Option<f64>,
    /// Sample standard deviation over `sqrt(n)`; zero for a single trial.
    pub se: Option<f64>,
}

/// Mean accuracy and standard error per (method, loss), failed trials excluded.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>, Error> {
    if records.is_empty() {
        return Err(Error::EmptyData("no records to summarize".into()));
    }
    let mut groups: BTreeMap<(Method, Option<MarginLoss>), (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((r.method, r.loss)).or_default();
        match (r.is_ok(), r.accuracy) {
            (true, Some(a)) => g.0.push(a),
            _ => g.1 += 1,
        }
    }
    Ok(groups
        .into_iter()
        .map(|((method, loss), (acc, n_failed))| {
            let n = acc.len();
            let (mean, se) = if n == 0 {
                (None, None)
            } else {
                let mean = acc.iter().sum::<f64>() / n as f64;
                let se = if n == 1 {
                    0.0
                } else {
                    let var = acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
                    (var / n as f64).sqrt()
                };
                (Some(mean), Some(se))
            };
            SummaryRow { method, loss, n_ok: n, n_failed, mean, se }
        })
        .collect())
}

/// Aligned text table of [`summarize`] output.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = format!("{:<6} {:<13} {:>6} {:>6} {:>8} {:>8}\n", "method", "loss", "ok", "failed", "mean", "se");
    for r in rows {
        let num = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
        let _ = writeln!(
            out,
            "{:<6} {:<13} {:>6} {:>6} {:>8} {:>8}",
            r.method.name(),
            opt(r.loss),
            r.n_ok,
            r.n_failed,
            num(r.mean),
            num(r.se)
        );
    }
    out
}
