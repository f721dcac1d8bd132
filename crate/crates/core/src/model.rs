//! Graphs, labelings and the two-community stochastic block model sampler.
//!
//! A [`Graph`] is immutable once built and keeps its edges both as a sorted
//! edge list and as per-vertex sorted neighbor lists. A [`Labeling`] assigns
//! `+1` (community A) or `-1` (community B) to every vertex.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Pairs may be given in either
    /// orientation; self-loops, duplicates and out-of-range vertices are
    /// rejected.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::InvalidParams(format!("self-loop at vertex {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted(n, list))
    }

    /// `edges` must already be sorted, deduplicated and satisfy `u < v < n`.
    pub(crate) fn from_sorted(n: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            neighbors,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_sorted(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.neighbors[u].binary_search(&v).is_ok()
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        }
    }
}

/// A `±1` community assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    values: Vec<i8>,
}

impl Labeling {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&x| x != 1 && x != -1) {
            return Err(Error::InvalidParams(format!(
                "label at position {pos} is {}, expected +1 or -1",
                values[pos]
            )));
        }
        Ok(Self { values })
    }

    /// First half `+1`, second half `-1`.
    pub fn planted(n: usize) -> Self {
        let values = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
        Self { values }
    }

    pub(crate) fn from_raw(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&x| x == 1 || x == -1));
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, i: usize) -> i8 {
        self.values[i]
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().map(|&x| x as i64).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.sum() == 0
    }

    pub fn ensure_balanced(&self) -> Result<()> {
        match self.sum() {
            0 => Ok(()),
            sum => Err(Error::Unbalanced { sum }),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|&x| -x).collect(),
        }
    }

    /// Vertices labelled `+1`, ascending.
    pub fn positive(&self) -> Vec<usize> {
        self.members(1)
    }

    /// Vertices labelled `-1`, ascending.
    pub fn negative(&self) -> Vec<usize> {
        self.members(-1)
    }

    fn members(&self, sign: i8) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == sign)
            .map(|(i, _)| i)
            .collect()
    }

    /// Compact `+`/`-` string, one character per vertex.
    pub fn to_compact(&self) -> String {
        self.values
            .iter()
            .map(|&x| if x > 0 { '+' } else { '-' })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 3);
        for &x in &self.values {
            out.push_str(if x > 0 { "+1\n" } else { "-1\n" });
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let value = match line.trim() {
                "+1" | "1" => 1,
                "-1" => -1,
                "" => continue,
                other => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("expected +1 or -1, got {other:?}"),
                    })
                }
            };
            values.push(value);
        }
        Ok(Self { values })
    }
}

/// Model parameters: `p = alpha log(n) / n`, `q = beta log(n) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl SbmParams {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "n must be even and at least 4, got {n}"
            )));
        }
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        let params = Self { n, alpha, beta };
        for (name, prob) in [("p", params.p()), ("q", params.q())] {
            if prob > 1.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} = {prob} exceeds 1 (coefficient times log(n) > n)"
                )));
            }
        }
        Ok(params)
    }

    pub fn log_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// Within-community edge probability.
    pub fn p(&self) -> f64 {
        self.alpha * self.log_n() / self.n as f64
    }

    /// Cross-community edge probability.
    pub fn q(&self) -> f64 {
        self.beta * self.log_n() / self.n as f64
    }
}

/// Samples a planted bisection and a graph from the model.
///
/// The labeling is a seeded shuffle of `n/2` pluses and `n/2` minuses; edges
/// are then drawn with one uniform variate per pair `i < j` in lexicographic
/// order from the same stream.
pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<(Graph, Labeling)> {
    let params = SbmParams::new(params.n, params.alpha, params.beta)?;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut values: Vec<i8> = Labeling::planted(n).values;
    values.shuffle(&mut rng);

    let (p, q) = (params.p(), params.q());
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let prob = if values[i] == values[j] { p } else { q };
            let u: f64 = rng.gen();
            if u < prob {
                edges.push((i, j));
            }
        }
    }
    Ok((Graph::from_sorted(n, edges), Labeling::from_raw(values)))
}

/// Fraction of vertices on which `x` and `y` agree, maximised over the
/// global flip of `y`.
pub fn agreement(x: &Labeling, y: &Labeling) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Ok(1.0);
    }
    let matches = x
        .values
        .iter()
        .zip(&y.values)
        .filter(|(a, b)| a == b)
        .count();
    let n = x.len();
    Ok(matches.max(n - matches) as f64 / n as f64)
}

/// Number of edges with one end in `s` and the other in `t`. An edge lying
/// inside `s ∩ t` is counted once.
pub fn count_edges_between(g: &Graph, s: &[usize], t: &[usize]) -> Result<usize> {
    let mut in_s = vec![false; g.n()];
    let mut in_t = vec![false; g.n()];
    for &v in s {
        g.check_vertex(v)?;
        in_s[v] = true;
    }
    for &v in t {
        g.check_vertex(v)?;
        in_t[v] = true;
    }
    Ok(g.edges()
        .iter()
        .filter(|&&(u, v)| (in_s[u] && in_t[v]) || (in_t[u] && in_s[v]))
        .count())
}

/// Number of edges crossing a balanced labeling.
pub fn cut_size(g: &Graph, x: &Labeling) -> Result<usize> {
    if x.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: g.n(),
            right: x.len(),
        });
    }
    x.ensure_balanced()?;
    Ok(crossing_edges(g, x))
}

pub(crate) fn crossing_edges(g: &Graph, x: &Labeling) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| x.values[u] != x.values[v])
        .count()
}

/// Serializes as `"n m"` followed by one `"u v"` line per edge, sorted.
pub fn write_graph(g: &Graph) -> String {
    let mut out = String::with_capacity(12 * (g.edge_count() + 1));
    let _ = writeln!(out, "{} {}", g.n(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let (n, m) = parse_pair(header, 1, "header")?;

    let mut edges = Vec::with_capacity(m);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let (u, v) = parse_pair(line, lineno, "edge")?;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        if u == v {
            return Err(err(format!("self-loop at vertex {u}")));
        }
        if u >= n || v >= n {
            return Err(err(format!("vertex out of range in ({u}, {v}) for n = {n}")));
        }
        if u > v {
            return Err(err(format!("edge ({u}, {v}) must be written with u < v")));
        }
        match edges.last() {
            Some(&last) if last == (u, v) => {
                return Err(err(format!("duplicate edge ({u}, {v})")));
            }
            Some(&last) if last > (u, v) => {
                return Err(err(format!("edge ({u}, {v}) out of sorted order")));
            }
            _ => {}
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Ok(Graph::from_sorted(n, edges))
}

fn parse_pair(line: &str, lineno: usize, what: &str) -> Result<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let mut next = || -> Result<usize> {
        fields
            .next()
            .ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("malformed {what}: {line:?}"),
            })?
            .parse::<usize>()
            .map_err(|e| Error::Parse {
                line: lineno,
                msg: format!("malformed {what}: {e}"),
            })
    };
    let a = next()?;
    let b = next()?;
    if fields.next().is_some() {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("trailing fields in {what}: {line:?}"),
        });
    }
    Ok((a, b))
}
