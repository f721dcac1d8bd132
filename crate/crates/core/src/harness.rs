//! Seeded trials, phase-diagram sweeps and threshold boundary curves.
//!
//! Trial `t` of a run with base seed `s` draws everything from
//! `mix(s, t)`; grid point `k` of a sweep uses base `mix(s, k)`. Results
//! are gathered by index, so they do not depend on scheduling.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ml::ml_bisection;
use crate::model::{agreement, generate_sbm, Graph, Labeling, SbmParams};
use crate::sdp::{build_b, certificate_check, sdp_solve, SdpConfig};
use crate::seed::mix;
use crate::tail::threshold_f;
use crate::two_phase::{
    two_phase_recover_with, ImproveOptions, PartialOracle, SplitConfig, DEFAULT_SPLIT_C,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ml,
    Sdp,
    Certificate,
    TwoPhase,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(Method::Ml),
            "sdp" => Ok(Method::Sdp),
            "certificate" => Ok(Method::Certificate),
            "two-phase" => Ok(Method::TwoPhase),
            other => Err(Error::InvalidParams(format!(
                "unknown method {other:?} (expected ml, sdp, certificate or two-phase)"
            ))),
        }
    }
}

/// Partial-recovery oracle without its seed, which is derived per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum OracleChoice {
    Spectral { trim: bool },
    Cheating { delta: f64 },
}

impl OracleChoice {
    fn with_seed(self, seed: u64) -> PartialOracle {
        match self {
            OracleChoice::Spectral { trim } => PartialOracle::Spectral { trim },
            OracleChoice::Cheating { delta } => PartialOracle::Cheating { delta, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    pub split_c: f64,
    pub oracle: OracleChoice,
    pub improve: ImproveOptions,
    /// The solver seed is overwritten per trial.
    pub sdp: SdpConfig,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            split_c: DEFAULT_SPLIT_C,
            oracle: OracleChoice::Spectral { trim: true },
            improve: ImproveOptions::default(),
            sdp: SdpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub method: Method,
    /// Absent when the graph was supplied rather than sampled.
    pub params: Option<SbmParams>,
    pub seed: u64,
    pub success: bool,
    /// Agreement with the truth up to flip; absent for the certificate
    /// method and when no truth is known.
    pub agreement: Option<f64>,
    pub diagnostics: Value,
}

const GRAPH_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;
const ALGORITHM_STREAM: u64 = 3;

/// Samples a graph from `mix(base_seed, trial_index)` and runs `method`.
pub fn run_trial(
    method: Method,
    params: &SbmParams,
    base_seed: u64,
    trial_index: u64,
    settings: &TrialSettings,
) -> Result<TrialRecord> {
    let seed = mix(base_seed, trial_index);
    let (g, truth) = generate_sbm(params, mix(seed, GRAPH_STREAM))?;
    let mut record = run_on_graph(method, &g, Some(&truth), seed, settings)?;
    record.params = Some(*params);
    Ok(record)
}

/// Runs `method` on a given graph. Without `truth` the record reports
/// `success = false` and no agreement, except that the recovered labeling
/// is always included in the diagnostics.
pub fn run_on_graph(
    method: Method,
    g: &Graph,
    truth: Option<&Labeling>,
    seed: u64,
    settings: &TrialSettings,
) -> Result<TrialRecord> {
    let (recovered, mut diagnostics) = match method {
        Method::Certificate => {
            let truth = truth.ok_or_else(|| {
                Error::InvalidParams("the certificate method needs the true labeling".into())
            })?;
            let report = certificate_check(g, truth)?;
            return Ok(TrialRecord {
                method,
                params: None,
                seed,
                success: report.certified,
                agreement: None,
                diagnostics: serde_json::to_value(report).expect("report serializes"),
            });
        }
        Method::Ml => {
            let r = ml_bisection(g)?;
            let d = json!({
                "min_cut": r.min_cut,
                "unique": r.unique,
                "optima_count": r.optima_count,
            });
            (r.best, d)
        }
        Method::Sdp => {
            let cfg = SdpConfig {
                seed: mix(seed, ALGORITHM_STREAM),
                ..settings.sdp.clone()
            };
            let sol = sdp_solve(&build_b(g), &cfg)?;
            let d = json!({
                "objective": sol.objective,
                "rounds_used": sol.rounds_used,
                "restart": sol.restart,
                "converged": sol.converged,
                "gradient_norm": sol.gradient_norm,
            });
            (sol.rounded, d)
        }
        Method::TwoPhase => {
            let split = SplitConfig {
                c: settings.split_c,
                seed: mix(seed, SPLIT_STREAM),
            };
            let oracle = settings.oracle.with_seed(mix(seed, ALGORITHM_STREAM));
            let out = two_phase_recover_with(g, &split, &oracle, truth, &settings.improve)?;
            let mut d = json!({
                "split_c": settings.split_c,
                "oracle": oracle,
                "g1_edges": out.g1_edges,
                "g2_edges": out.g2_edges,
                "marks": out.improvement.marks,
                "flips_applied": out.improvement.flips_applied,
            });
            if let Some(t) = truth {
                d["partial_agreement"] = json!(agreement(&out.partial, t)?);
            }
            (out.labels, d)
        }
    };
    diagnostics["labels"] = json!(recovered.to_compact());
    let agree = truth.map(|t| agreement(&recovered, t)).transpose()?;
    let mut success = agree == Some(1.0);
    if method == Method::Ml {
        success &= diagnostics["unique"] == json!(true);
    }
    Ok(TrialRecord {
        method,
        params: None,
        seed,
        success,
        agreement: agree,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub beta: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
}

/// Success counts over an `alpha x beta` grid, alpha-major. Points whose
/// parameters are infeasible at this `n` (p or q above 1) are an error.
pub fn phase_diagram(
    method: Method,
    n: usize,
    alphas: &[f64],
    betas: &[f64],
    trials: usize,
    base_seed: u64,
    settings: &TrialSettings,
) -> Result<Vec<PhasePoint>> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidParams("grids must be nonempty".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be positive".into()));
    }
    let grid: Vec<SbmParams> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .map(|(a, b)| SbmParams::new(n, a, b))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|k| (0..trials as u64).map(move |t| (k, t)))
        .collect();
    let outcomes: Vec<bool> = jobs
        .par_iter()
        .map(|&(k, t)| {
            run_trial(method, &grid[k], mix(base_seed, k as u64), t, settings).map(|r| r.success)
        })
        .collect::<Result<_>>()?;
    Ok(grid
        .iter()
        .zip(outcomes.chunks(trials))
        .map(|(p, chunk)| {
            let successes = chunk.iter().filter(|&&s| s).count();
            PhasePoint {
                alpha: p.alpha,
                beta: p.beta,
                trials,
                successes,
                rate: successes as f64 / trials as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub beta: f64,
    /// Larger root in alpha of `(a - b)^2 = 4(a + b) - 4`.
    pub alpha_red: Option<f64>,
    /// Larger root in alpha of `(a - b)^2 = 8(a + b) + (8/3)(a - b)`.
    pub alpha_green: Option<f64>,
}

/// Information-theoretic boundary: `alpha = beta + 2 + 2 sqrt(2 beta)`.
pub fn red_root(beta: f64) -> Option<f64> {
    (beta.is_finite() && beta >= 0.0)
        .then(|| beta + 2.0 + 2.0 * (2.0 * beta).sqrt())
        .filter(|&a| a > beta)
}

/// Relaxation guarantee: `alpha = beta + 16/3 + sqrt(256/9 + 16 beta)`.
pub fn green_root(beta: f64) -> Option<f64> {
    (beta.is_finite() && beta >= 0.0)
        .then(|| beta + 16.0 / 3.0 + (256.0 / 9.0 + 16.0 * beta).sqrt())
        .filter(|&a| a > beta)
}

pub fn boundary_curves(betas: &[f64]) -> Vec<CurvePoint> {
    betas
        .iter()
        .map(|&beta| CurvePoint {
            beta,
            alpha_red: red_root(beta),
            alpha_green: green_root(beta),
        })
        .collect()
}

/// Beyond the red curve on the side of the larger rate, i.e. `alpha`
/// beyond the root at `beta` or, symmetrically, `beta` beyond the root at
/// `alpha`.
pub fn beyond_red(alpha: f64, beta: f64) -> bool {
    let (hi, lo) = if alpha >= beta { (alpha, beta) } else { (beta, alpha) };
    red_root(lo).is_some_and(|r| hi > r)
}

/// Consistency of the curve with the threshold function at one point.
pub fn red_agrees_with_threshold(alpha: f64, beta: f64) -> Result<bool> {
    Ok(beyond_red(alpha, beta) == threshold_f(alpha, beta)?.recoverable)
}

/// Parses `"START:END:STEP"` (inclusive) or a single number.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::InvalidParams(format!("grid {text:?}: {msg}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad("not a number")))
        .collect::<Result<_>>()?;
    if parts.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    match parts[..] {
        [v] => Ok(vec![v]),
        [start, end, step] => {
            if !(step > 0.0) || end < start {
                return Err(bad("need STEP > 0 and END >= START"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad("expected START:END:STEP")),
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Columns `alpha,beta,trials,successes,rate`.
pub fn phase_csv(points: &[PhasePoint]) -> Result<String> {
    to_csv(points)
}

/// Columns `beta,alpha_red,alpha_green`; a missing root is an empty field.
pub fn curves_csv(points: &[CurvePoint]) -> Result<String> {
    to_csv(points)
}
