//! Two-phase recovery: split the edges with a random pair set `H1`, get a
//! mostly-correct labeling from the first part, then fix individual
//! vertices by majority vote over the second part.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Graph, Labeling};
use crate::sdp::balanced_signs;

/// Splitting constant used when none is given; `3.2 / ln 300 ≈ 0.56`.
pub const DEFAULT_SPLIT_C: f64 = 3.2;

/// Degree above which the spectral oracle sets a vertex aside, as a multiple
/// of the average degree.
pub const TRIM_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitConfig {
    pub c: f64,
    pub seed: u64,
}

impl SplitConfig {
    /// Probability that a given pair belongs to `H1` on `n` vertices.
    pub fn pair_probability(&self, n: usize) -> Result<f64> {
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::InvalidParams(format!("C must be finite and nonnegative, got {}", self.c)));
        }
        if n < 2 {
            return Err(Error::InvalidParams(format!("need n >= 2 to split, got {n}")));
        }
        let prob = self.c / (n as f64).ln();
        if prob > 1.0 {
            return Err(Error::InvalidParams(format!(
                "C / ln n = {prob:.4} exceeds 1 (C = {}, n = {n})",
                self.c
            )));
        }
        Ok(prob)
    }
}

/// Calls `keep(i, j)` for every pair `i < j` in lexicographic order with
/// whether the pair lies in `H1`.
fn for_each_h1_pair<F: FnMut(usize, usize, bool)>(n: usize, cfg: &SplitConfig, mut keep: F) -> Result<()> {
    let prob = cfg.pair_probability(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in 0..n {
        for j in i + 1..n {
            let u: f64 = rng.gen();
            keep(i, j, u < prob);
        }
    }
    Ok(())
}

/// `(G1, G2)` with `G1 = G ∩ H1` and `G2 = G \ H1`. `H1` depends only on
/// `n` and the config, never on the edges of `g`.
pub fn split_graph(g: &Graph, cfg: &SplitConfig) -> Result<(Graph, Graph)> {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for_each_h1_pair(g.n(), cfg, |i, j, in_h1| {
        if g.has_edge(i, j) {
            if in_h1 {
                first.push((i, j));
            } else {
                second.push((i, j));
            }
        }
    })?;
    Ok((Graph::from_sorted(g.n(), first), Graph::from_sorted(g.n(), second)))
}

/// Degree of every vertex in the pair graph `H1` itself.
pub fn h1_degrees(n: usize, cfg: &SplitConfig) -> Result<Vec<usize>> {
    let mut deg = vec![0; n];
    for_each_h1_pair(n, cfg, |i, j, in_h1| {
        if in_h1 {
            deg[i] += 1;
            deg[j] += 1;
        }
    })?;
    Ok(deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PartialOracle {
    /// Top eigenvector of the centered adjacency `A - (2m/n^2) J`.
    Spectral { trim: bool },
    /// The true labeling with exactly `floor(delta n / 2)` vertices flipped
    /// on each side. Needs the truth; for testing the improvement step.
    Cheating { delta: f64, seed: u64 },
}

pub fn partial_recovery(g1: &Graph, oracle: &PartialOracle, truth: Option<&Labeling>) -> Result<Labeling> {
    match *oracle {
        PartialOracle::Cheating { delta, seed } => {
            let truth = truth.ok_or_else(|| {
                Error::InvalidParams("the cheating oracle needs the true labeling".into())
            })?;
            corrupt(truth, delta, seed)
        }
        PartialOracle::Spectral { trim } => spectral(g1, trim),
    }
}

/// Flips `floor(delta n / 2)` seed-chosen vertices on each side.
pub fn corrupt(truth: &Labeling, delta: f64, seed: u64) -> Result<Labeling> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InvalidParams(format!("delta must lie in [0, 1/2), got {delta}")));
    }
    truth.ensure_balanced()?;
    let n = truth.len();
    // the small offset keeps e.g. 0.1 * 20 / 2 from rounding down to 0
    let per_side = (delta * n as f64 / 2.0 + 1e-9).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = truth.values().to_vec();
    for mut side in [truth.positive(), truth.negative()] {
        side.shuffle(&mut rng);
        for &v in &side[..per_side] {
            values[v] = -values[v];
        }
    }
    Labeling::new(values)
}

fn spectral(g1: &Graph, trim: bool) -> Result<Labeling> {
    let n = g1.n();
    if g1.edge_count() == 0 {
        return Err(Error::Degenerate("spectral oracle needs a graph with edges".into()));
    }
    let average = 2.0 * g1.edge_count() as f64 / n as f64;
    let kept: Vec<usize> = (0..n)
        .filter(|&v| !trim || g1.degree(v) as f64 <= TRIM_FACTOR * average)
        .collect();
    let mut index = vec![usize::MAX; n];
    for (k, &v) in kept.iter().enumerate() {
        index[v] = k;
    }
    let size = kept.len();
    let kept_edges = g1
        .edges()
        .iter()
        .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
        .count();
    if kept_edges == 0 {
        return Err(Error::Degenerate("no edges left after trimming".into()));
    }
    let shift = 2.0 * kept_edges as f64 / (size * size) as f64;
    let mut centered = DMatrix::from_element(size, size, -shift);
    for &(u, v) in g1.edges() {
        let (a, b) = (index[u], index[v]);
        if a != usize::MAX && b != usize::MAX {
            centered[(a, b)] += 1.0;
            centered[(b, a)] += 1.0;
        }
    }
    let eig = SymmetricEigen::new(centered);
    let top = eig.eigenvalues.imax();
    let vector = eig.eigenvectors.column(top);

    let mut score = vec![0.0; n];
    for (k, &v) in kept.iter().enumerate() {
        score[v] = vector[k];
    }
    for v in (0..n).filter(|&v| index[v] == usize::MAX) {
        // majority of already-scored neighbours decides the sign
        let (mut votes, mut weight, mut count) = (0i64, 0.0, 0usize);
        for &u in g1.neighbors(v).iter().filter(|&&u| index[u] != usize::MAX) {
            votes += if score[u] >= 0.0 { 1 } else { -1 };
            weight += score[u].abs();
            count += 1;
        }
        let magnitude = if count > 0 { weight / count as f64 } else { 0.0 };
        score[v] = if votes >= 0 { magnitude } else { -magnitude };
    }
    balanced_signs(&score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ImproveOptions {
    /// When the two sides mark different numbers of vertices, flip the
    /// `min` most decisive marks on each side instead of nothing.
    pub balanced_subset: bool,
    /// Number of improvement rounds; one round matches the analysed
    /// procedure.
    pub rounds: usize,
}

impl Default for ImproveOptions {
    fn default() -> Self {
        Self {
            balanced_subset: false,
            rounds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Improvement {
    #[serde(skip)]
    pub labels: Labeling,
    /// Marked vertices per side in each round, as `(plus, minus)`.
    pub marks: Vec<(usize, usize)>,
    /// Vertices actually flipped over all rounds.
    pub flips_applied: usize,
}

/// One simultaneous round of majority flips with the default options.
pub fn local_improvement(g2: &Graph, labels: &Labeling) -> Result<Labeling> {
    Ok(local_improvement_with(g2, labels, &ImproveOptions::default())?.labels)
}

pub fn local_improvement_with(g2: &Graph, labels: &Labeling, opts: &ImproveOptions) -> Result<Improvement> {
    if labels.len() != g2.n() {
        return Err(Error::LengthMismatch {
            left: g2.n(),
            right: labels.len(),
        });
    }
    labels.ensure_balanced()?;
    let mut current = labels.clone();
    let mut marks = Vec::new();
    let mut flips_applied = 0;
    for _ in 0..opts.rounds {
        let margins: Vec<i64> = (0..g2.n())
            .map(|i| {
                g2.neighbors(i)
                    .iter()
                    .map(|&u| if current.get(u) == current.get(i) { -1 } else { 1 })
                    .sum()
            })
            .collect();
        let marked = |sign: i8| -> Vec<usize> {
            (0..g2.n())
                .filter(|&i| current.get(i) == sign && margins[i] > 0)
                .collect()
        };
        let (mut plus, mut minus) = (marked(1), marked(-1));
        marks.push((plus.len(), minus.len()));
        if plus.len() != minus.len() {
            if !opts.balanced_subset {
                break;
            }
            let keep = plus.len().min(minus.len());
            for side in [&mut plus, &mut minus] {
                side.sort_by(|&a, &b| margins[b].cmp(&margins[a]).then(a.cmp(&b)));
                side.truncate(keep);
            }
        }
        if plus.is_empty() {
            break;
        }
        let mut values = current.values().to_vec();
        for &v in plus.iter().chain(&minus) {
            values[v] = -values[v];
        }
        flips_applied += plus.len() + minus.len();
        current = Labeling::new(values)?;
    }
    Ok(Improvement {
        labels: current,
        marks,
        flips_applied,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPhaseOutcome {
    #[serde(skip)]
    pub labels: Labeling,
    #[serde(skip)]
    pub partial: Labeling,
    pub g1_edges: usize,
    pub g2_edges: usize,
    pub improvement: Improvement,
}

/// Split, partial recovery on `G1`, majority flips on `G2`.
pub fn two_phase_recover(
    g: &Graph,
    cfg: &SplitConfig,
    oracle: &PartialOracle,
    truth: Option<&Labeling>,
) -> Result<Labeling> {
    Ok(two_phase_recover_with(g, cfg, oracle, truth, &ImproveOptions::default())?.labels)
}

pub fn two_phase_recover_with(
    g: &Graph,
    cfg: &SplitConfig,
    oracle: &PartialOracle,
    truth: Option<&Labeling>,
    opts: &ImproveOptions,
) -> Result<TwoPhaseOutcome> {
    let (g1, g2) = split_graph(g, cfg)?;
    let partial = partial_recovery(&g1, oracle, truth)?;
    let improvement = local_improvement_with(&g2, &partial, opts)?;
    Ok(TwoPhaseOutcome {
        labels: improvement.labels.clone(),
        partial,
        g1_edges: g1.edge_count(),
        g2_edges: g2.edge_count(),
        improvement,
    })
}
