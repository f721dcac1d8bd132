//! Exhaustive minimum bisection and the per-trial failure events used to
//! study when maximum likelihood cannot succeed.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{agreement, count_edges_between, generate_sbm, Graph, Labeling, SbmParams};
use crate::seed::mix;
use crate::tail::LowerBoundSchedule;

/// Largest vertex count accepted by [`ml_bisection`].
pub const ML_MAX_N: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlResult {
    #[serde(serialize_with = "serialize_labeling")]
    pub best: Labeling,
    pub min_cut: usize,
    pub unique: bool,
    pub optima_count: u64,
}

fn serialize_labeling<S: serde::Serializer>(x: &Labeling, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_compact())
}

/// Minimum bisection by enumeration. Vertex 0 is pinned to the `+1` side so
/// each partition is visited once; among optimal partitions the one whose
/// `+1` set is lexicographically smallest is returned.
pub fn ml_bisection(g: &Graph) -> Result<MlResult> {
    let n = g.n();
    if n % 2 != 0 || n < 2 {
        return Err(Error::InvalidParams(format!("bisection needs even n >= 2, got {n}")));
    }
    if n > ML_MAX_N {
        return Err(Error::OverBudget(format!("n = {n} exceeds the enumeration limit {ML_MAX_N}")));
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | (1 << u)))
        .collect();
    let full: u32 = (1u32 << n) - 1;
    let cut_of = |set: u32| -> u32 {
        let outside = full & !set;
        let mut bits = set;
        let mut cut = 0;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            cut += (adj[v] & outside).count_ones();
            bits &= bits - 1;
        }
        cut
    };

    // subsets of {1, .., n-1} of size n/2 - 1, in Gosper order
    let k = n / 2 - 1;
    let limit = 1u32 << (n - 1);
    let mut sub: u32 = if k == 0 { 0 } else { (1u32 << k) - 1 };
    let mut best_set = u32::MAX;
    let mut best_cut = u32::MAX;
    let mut count = 0u64;
    loop {
        let set = (sub << 1) | 1;
        let cut = cut_of(set);
        if cut < best_cut {
            best_cut = cut;
            best_set = set;
            count = 1;
        } else if cut == best_cut {
            count += 1;
            if lex_smaller(set, best_set) {
                best_set = set;
            }
        }
        if sub == 0 {
            break;
        }
        let low = sub & sub.wrapping_neg();
        let ripple = sub + low;
        sub = (((ripple ^ sub) >> 2) / low) | ripple;
        if sub >= limit {
            break;
        }
    }

    let values = (0..n)
        .map(|v| if best_set >> v & 1 == 1 { 1 } else { -1 })
        .collect();
    Ok(MlResult {
        best: Labeling::from_raw(values),
        min_cut: best_cut as usize,
        unique: count == 1,
        optima_count: count,
    })
}

/// Lexicographic order on the sorted member lists of two equal-size sets:
/// the smaller set owns the lowest element of the symmetric difference.
fn lex_smaller(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    diff != 0 && a & diff & diff.wrapping_neg() != 0
}

fn own_and_cross(g: &Graph, truth: &Labeling, i: usize) -> (usize, usize) {
    let side = truth.get(i);
    g.neighbors(i)
        .iter()
        .fold((0, 0), |(own, cross), &u| {
            if truth.get(u) == side {
                (own + 1, cross)
            } else {
                (own, cross + 1)
            }
        })
}

fn check_pair(g: &Graph, truth: &Labeling) -> Result<()> {
    if truth.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: g.n(),
            right: truth.len(),
        });
    }
    truth.ensure_balanced()
}

/// Vertex `i` has strictly more neighbours across the planted cut than on
/// its own side.
pub fn node_majority_failure(g: &Graph, truth: &Labeling, i: usize) -> Result<bool> {
    check_pair(g, truth)?;
    g.check_vertex(i)?;
    let (own, cross) = own_and_cross(g, truth, i);
    Ok(cross > own)
}

/// Every vertex of `h` has fewer than `delta` neighbours inside `h`.
pub fn event_delta_holds(g: &Graph, h: &[usize], delta: usize) -> Result<bool> {
    let mut in_h = vec![false; g.n()];
    for &v in h {
        g.check_vertex(v)?;
        in_h[v] = true;
    }
    Ok(h.iter()
        .all(|&j| g.neighbors(j).iter().filter(|&&u| in_h[u]).count() < delta))
}

/// `E(j, A \ H) + delta <= E(j, B)` for `j` in `h`, where `A` is the `+1`
/// side of `truth` and `h` lies inside `A`.
pub fn event_fh_holds(g: &Graph, truth: &Labeling, h: &[usize], j: usize, delta: usize) -> Result<bool> {
    check_pair(g, truth)?;
    g.check_vertex(j)?;
    if !h.contains(&j) {
        return Err(Error::InvalidParams(format!("vertex {j} is not in H")));
    }
    let mut in_h = vec![false; g.n()];
    for &v in h {
        g.check_vertex(v)?;
        if truth.get(v) != 1 {
            return Err(Error::InvalidParams(format!("H member {v} is not in community A")));
        }
        in_h[v] = true;
    }
    let a_minus_h: Vec<usize> = truth.positive().into_iter().filter(|&v| !in_h[v]).collect();
    let to_rest = count_edges_between(g, &[j], &a_minus_h)?;
    let to_b = count_edges_between(g, &[j], &truth.negative())?;
    Ok(to_rest + delta <= to_b)
}

/// Change in cut size when `i` and `j`, on opposite sides of `x`, trade
/// sides. Negative means the swap lowers the cut.
pub fn swap_cut_delta(g: &Graph, x: &Labeling, i: usize, j: usize) -> Result<i64> {
    check_pair(g, x)?;
    g.check_vertex(i)?;
    g.check_vertex(j)?;
    if x.get(i) == x.get(j) {
        return Err(Error::InvalidParams(format!("vertices {i} and {j} are on the same side")));
    }
    let (own_i, cross_i) = own_and_cross(g, x, i);
    let (own_j, cross_j) = own_and_cross(g, x, j);
    let joined = i64::from(g.has_edge(i, j));
    Ok(own_i as i64 - cross_i as i64 + own_j as i64 - cross_j as i64 + 2 * joined)
}

/// How `H` and the margin were chosen for an event study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventSchedule {
    Asymptotic,
    /// The asymptotic `H` is empty at this `n`; `H` is the first quarter of
    /// community A and the margin is 2.
    DeskFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRates {
    pub trials: usize,
    pub schedule: EventSchedule,
    pub h_size: usize,
    pub delta: usize,
    /// `None` when `n` is beyond the enumeration budget.
    pub f_rate: Option<f64>,
    pub fa_rate: f64,
    pub delta_rate: f64,
    pub fh_rate: f64,
    /// Trials where `Delta` and `F_H` held but `F_A` did not.
    pub implication_violations: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialEvents {
    f: bool,
    fa: bool,
    delta: bool,
    fh: bool,
}

/// Monte Carlo frequencies of the failure events. Trial `t` uses the graph
/// drawn from `mix(seed, t)`.
pub fn estimate_event_probabilities(params: &SbmParams, trials: usize, seed: u64) -> Result<EventRates> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be positive".into()));
    }
    let n = params.n;
    let asymptotic = LowerBoundSchedule::new(n).ok().filter(|s| s.h_size > 0);
    let (schedule, h_size, delta) = match asymptotic {
        Some(s) => (EventSchedule::Asymptotic, s.h_size, s.delta_n as usize),
        None => (EventSchedule::DeskFallback, n.div_ceil(4), 2),
    };
    let with_ml = n <= ML_MAX_N;

    let outcomes: Vec<TrialEvents> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<TrialEvents> {
            let (g, truth) = generate_sbm(params, mix(seed, t))?;
            let a = truth.positive();
            let h = &a[..h_size.min(a.len())];
            let f = if with_ml {
                let ml = ml_bisection(&g)?;
                !(ml.unique && agreement(&ml.best, &truth)? == 1.0)
            } else {
                false
            };
            let mut fa = false;
            for &i in &a {
                if node_majority_failure(&g, &truth, i)? {
                    fa = true;
                    break;
                }
            }
            let mut fh = false;
            for &j in h {
                if event_fh_holds(&g, &truth, h, j, delta)? {
                    fh = true;
                    break;
                }
            }
            Ok(TrialEvents {
                f,
                fa,
                delta: event_delta_holds(&g, h, delta)?,
                fh,
            })
        })
        .collect::<Result<_>>()?;

    let rate = |pick: fn(&TrialEvents) -> bool| {
        outcomes.iter().filter(|e| pick(e)).count() as f64 / trials as f64
    };
    Ok(EventRates {
        trials,
        schedule,
        h_size,
        delta,
        f_rate: with_ml.then(|| rate(|e| e.f)),
        fa_rate: rate(|e| e.fa),
        delta_rate: rate(|e| e.delta),
        fh_rate: rate(|e| e.fh),
        implication_violations: outcomes.iter().filter(|e| e.delta && e.fh && !e.fa).count(),
    })
}
