//! The semidefinite relaxation of minimum bisection and its dual
//! certificate.
//!
//! For a graph with signed adjacency `B` (+1 edge, -1 non-edge, 0 diagonal)
//! and a balanced labeling `g`, the diagonal matrix `Y = 2(D+ - D-) + I`
//! satisfies `Tr(Y) = g' B g`. If `M = Y - B = 2 L + J` is positive
//! semidefinite with a one-dimensional kernel, `g g'` is the unique optimum
//! of the relaxation.

mod solver;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Graph, Labeling, SbmParams};

pub use solver::{balanced_signs, round_factor, round_matrix, sdp_solve, SdpConfig, SdpSolution};

/// Dense symmetric matrix. Writes go to both triangles, so symmetry is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self {
            inner: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        }
    }

    /// Builds from a function evaluated on the upper triangle `i <= j`.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a dense matrix only if it is exactly symmetric.
    pub fn from_dense(inner: DMatrix<f64>) -> Result<Self> {
        if !inner.is_square() {
            return Err(Error::InvalidParams(format!(
                "matrix is {}x{}, not square",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if inner != inner.transpose() {
            return Err(Error::InvalidParams("matrix is not symmetric".into()));
        }
        Ok(Self { inner })
    }

    pub fn n(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.inner[(i, j)] = v;
        self.inner[(j, i)] = v;
    }

    pub fn as_dense(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (&self.inner * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        v.dot(&(&self.inner * &v))
    }

    pub fn trace(&self) -> f64 {
        self.inner.trace()
    }
}

/// Signed adjacency: 1 on edges, -1 on non-edges, 0 on the diagonal.
pub fn build_b(g: &Graph) -> SymMatrix {
    SymMatrix::from_upper(g.n(), |i, j| {
        if i == j {
            0.0
        } else if g.has_edge(i, j) {
            1.0
        } else {
            -1.0
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

/// Within-community and cross-community degree of every vertex.
fn split_degrees(g: &Graph, truth: &Labeling) -> Vec<(i64, i64)> {
    (0..g.n())
        .map(|i| {
            let own = g
                .neighbors(i)
                .iter()
                .filter(|&&u| truth.get(u) == truth.get(i))
                .count() as i64;
            (own, g.degree(i) as i64 - own)
        })
        .collect()
}

/// `D+ - D- - A`, where `D+` and `D-` hold within- and cross-community
/// degrees. It annihilates `truth`.
pub fn sbm_laplacian(g: &Graph, truth: &Labeling) -> Result<SymMatrix> {
    check_pair(g, truth)?;
    let deg = split_degrees(g, truth);
    let mut m = SymMatrix::from_diagonal(
        &deg.iter().map(|&(own, cross)| (own - cross) as f64).collect::<Vec<_>>(),
    );
    for &(u, v) in g.edges() {
        m.set(u, v, -1.0);
    }
    Ok(m)
}

/// The certificate matrix `2 L + J` as exact integers, row-major.
fn certificate_entries(g: &Graph, truth: &Labeling) -> Vec<i64> {
    let n = g.n();
    let deg = split_degrees(g, truth);
    let mut m = vec![1i64; n * n];
    for (i, &(own, cross)) in deg.iter().enumerate() {
        m[i * n + i] = 2 * (own - cross) + 1;
    }
    for &(u, v) in g.edges() {
        m[u * n + v] = -1;
        m[v * n + u] = -1;
    }
    m
}

/// `max_i |(M g)_i|` for the certificate matrix, in integer arithmetic.
pub fn certificate_residual(g: &Graph, truth: &Labeling) -> Result<i64> {
    check_pair(g, truth)?;
    let n = g.n();
    let m = certificate_entries(g, truth);
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| m[i * n + j] * i64::from(truth.get(j)))
                .sum::<i64>()
                .abs()
        })
        .max()
        .unwrap_or(0))
}

/// The certificate matrix `Y - B = 2 L + J`.
pub fn certificate_matrix(g: &Graph, truth: &Labeling) -> Result<SymMatrix> {
    check_pair(g, truth)?;
    let n = g.n();
    let m = certificate_entries(g, truth);
    Ok(SymMatrix::from_upper(n, |i, j| m[i * n + j] as f64))
}

/// Relative tolerances applied to `||M||_F`.
pub const PSD_TOLERANCE: f64 = 1e-8;
pub const GAP_TOLERANCE: f64 = 1e-6;
pub const EIG_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateReport {
    pub lambda_min: f64,
    pub lambda_2: f64,
    pub g_residual: f64,
    pub certified: bool,
}

/// Checks whether `truth truth'` is certified as the unique optimum of the
/// relaxation for this graph.
pub fn certificate_check(g: &Graph, truth: &Labeling) -> Result<CertificateReport> {
    let residual = certificate_residual(g, truth)? as f64;
    let m = certificate_matrix(g, truth)?;
    let scale = m.frobenius_norm();
    let eig = eig_extremes(&m, 2.min(m.n()), EIG_RESIDUAL_TOLERANCE)?;
    let lambda_min = eig.values[0];
    let lambda_2 = eig.values.get(1).copied().unwrap_or(lambda_min);
    let tol_psd = PSD_TOLERANCE * scale;
    let certified =
        lambda_min >= -tol_psd && lambda_2 > GAP_TOLERANCE * scale && residual <= tol_psd;
    Ok(CertificateReport {
        lambda_min,
        lambda_2,
        g_residual: residual,
        certified,
    })
}

/// Entrywise expectation of the certificate matrix for the planted
/// labeling with the first `n/2` vertices in community A.
pub fn expected_certificate_matrix(params: &SbmParams) -> SymMatrix {
    let n = params.n;
    let half = n / 2;
    let ln_n = params.log_n();
    let (p, q) = (params.p(), params.q());
    let diag = (params.alpha - params.beta) * ln_n - 2.0 * params.alpha * ln_n / n as f64 + 1.0;
    let within = 1.0 - 2.0 * p;
    let cross = 1.0 - 2.0 * q;
    SymMatrix::from_upper(n, |i, j| {
        if i == j {
            diag
        } else if (i < half) == (j < half) {
            within
        } else {
            cross
        }
    })
}

/// The `k` smallest eigenvalues, ascending, with their residual norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenExtremes {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Smallest `k` eigenvalues of `m`. Every returned pair is checked to have
/// `||M v - lambda v|| <= tol ||M||_F`.
pub fn eig_extremes(m: &SymMatrix, k: usize, tol: f64) -> Result<EigenExtremes> {
    let n = m.n();
    if k > n {
        return Err(Error::InvalidParams(format!("k = {k} exceeds dimension {n}")));
    }
    if k == 0 {
        return Ok(EigenExtremes {
            values: Vec::new(),
            residuals: Vec::new(),
        });
    }
    if m.inner.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(m.inner.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let bound = tol * m.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let lambda = eig.eigenvalues[idx];
        let v = eig.eigenvectors.column(idx);
        let r = (&m.inner * v - v * lambda).norm();
        if r > bound && r > f64::EPSILON * 16.0 {
            return Err(Error::NonConvergence(format!(
                "eigenpair residual {r:e} exceeds {bound:e}"
            )));
        }
        values.push(lambda);
        residuals.push(r);
    }
    Ok(EigenExtremes { values, residuals })
}

/// All eigenvalues, ascending.
pub fn spectrum(m: &SymMatrix) -> Result<Vec<f64>> {
    Ok(eig_extremes(m, m.n(), EIG_RESIDUAL_TOLERANCE)?.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(s: &str) -> Labeling {
        Labeling::new(s.chars().map(|c| if c == '+' { 1 } else { -1 }).collect()).unwrap()
    }

    fn two_cliques(n: usize) -> Graph {
        let h = n / 2;
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::new(n, edges.filter(|&(u, v)| (u < h) == (v < h))).unwrap()
    }

    #[test]
    fn b_examples() {
        let b = build_b(&Graph::empty(2));
        assert_eq!(b.as_dense(), &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]));
        let b = build_b(&Graph::complete(2));
        assert_eq!(b.as_dense(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let b = build_b(&Graph::new(4, [(0, 1), (2, 3)]).unwrap());
        assert_eq!(b.quadratic_form(&[1.0, 1.0, -1.0, -1.0]), 12.0);
    }

    #[test]
    fn laplacian_examples() {
        let truth = labels("++--");
        let l = sbm_laplacian(&Graph::empty(4), &truth).unwrap();
        assert_eq!(l, SymMatrix::zeros(4));

        let g = two_cliques(6);
        let t = labels("+++---");
        let l = sbm_laplacian(&g, &t).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j {
                    2.0
                } else if (i < 3) == (j < 3) {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(l.get(i, j), want);
            }
        }
        let g = Graph::new(6, [(0, 3), (1, 2), (2, 5), (4, 5)]).unwrap();
        let l = sbm_laplacian(&g, &t).unwrap();
        assert!(l.mul_vec(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]).iter().all(|&v| v == 0.0));
        assert!(sbm_laplacian(&g, &labels("++++--")).is_err());
    }

    #[test]
    fn certificate_examples() {
        let r = certificate_check(&two_cliques(4), &labels("++--")).unwrap();
        assert!(r.certified);
        assert!(r.lambda_min.abs() < 1e-12);
        assert!((r.lambda_2 - 4.0).abs() < 1e-12);
        let eigs = spectrum(&certificate_matrix(&two_cliques(4), &labels("++--")).unwrap()).unwrap();
        for (got, want) in eigs.iter().zip([0.0, 4.0, 4.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }

        let m = certificate_matrix(&Graph::complete(4), &labels("+-+-")).unwrap();
        assert!(m.as_dense().iter().all(|&v| v == -1.0));
        let r = certificate_check(&Graph::complete(4), &labels("+-+-")).unwrap();
        assert!(!r.certified);
        assert!((r.lambda_min + 4.0).abs() < 1e-12);

        let r = certificate_check(&Graph::empty(4), &labels("++--")).unwrap();
        assert!(r.lambda_min.abs() < 1e-12 && r.lambda_2.abs() < 1e-12);
        assert!(!r.certified);
        assert_eq!(r.g_residual, 0.0);
    }

    #[test]
    fn certificate_is_y_minus_b() {
        let g = Graph::new(6, [(0, 1), (0, 4), (2, 3), (3, 5), (1, 2)]).unwrap();
        let t = labels("+-+-+-");
        let b = build_b(&g);
        let m = certificate_matrix(&g, &t).unwrap();
        let deg = split_degrees(&g, &t);
        for i in 0..6 {
            for j in 0..6 {
                let y = if i == j { (2 * (deg[i].0 - deg[i].1) + 1) as f64 } else { 0.0 };
                assert_eq!(m.get(i, j), y - b.get(i, j));
            }
        }
        let y_trace: f64 = deg.iter().map(|&(a, c)| (2 * (a - c) + 1) as f64).sum();
        let tv: Vec<f64> = t.values().iter().map(|&v| v as f64).collect();
        assert_eq!(b.quadratic_form(&tv), y_trace);
    }

    #[test]
    fn expected_spectrum_closed_form() {
        for &(n, alpha, beta) in &[(20usize, 5.0, 1.0), (100, 5.0, 1.0)] {
            let params = SbmParams::new(n, alpha, beta).unwrap();
            let ln_n = params.log_n();
            let eigs = spectrum(&expected_certificate_matrix(&params)).unwrap();
            let top = n as f64 - 2.0 * beta * ln_n;
            let bulk = (alpha - beta) * ln_n;
            let mut want = vec![bulk; n - 2];
            want.push(0.0);
            want.push(top);
            want.sort_by(f64::total_cmp);
            for (got, w) in eigs.iter().zip(&want) {
                assert!((got - w).abs() < 1e-8, "n = {n}: {got} vs {w}");
            }
        }
        let params = SbmParams::new(100, 5.0, 1.0).unwrap();
        let ln_n = params.log_n();
        assert!((100.0 - 2.0 * ln_n - 90.78966).abs() < 1e-5);
        assert!((4.0 * ln_n - 18.42068).abs() < 1e-5);
    }

    #[test]
    fn expected_matrix_eigenvectors() {
        let params = SbmParams::new(20, 5.0, 1.0).unwrap();
        let c = expected_certificate_matrix(&params);
        let ones = vec![1.0; 20];
        let top = 20.0 - 2.0 * params.log_n();
        for v in c.mul_vec(&ones) {
            assert!((v - top).abs() < 1e-10);
        }
        let g: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { -1.0 }).collect();
        assert!(c.mul_vec(&g).iter().all(|v| v.abs() < 1e-10));
        // equal rates close the gap
        let flat = spectrum(&expected_certificate_matrix(&SbmParams::new(20, 3.0, 3.0).unwrap())).unwrap();
        assert!(flat[..19].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn eig_examples() {
        let e = eig_extremes(&SymMatrix::identity(3), 2, 1e-12).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let e = eig_extremes(&SymMatrix::from_diagonal(&[-3.0, 0.0, 5.0]), 2, 1e-12).unwrap();
        assert_eq!(e.values, vec![-3.0, 0.0]);
        assert!(eig_extremes(&SymMatrix::identity(2), 3, 1e-12).is_err());
        let bad = SymMatrix::from_diagonal(&[f64::NAN, 1.0]);
        assert!(eig_extremes(&bad, 1, 1e-12).is_err());
    }

    #[test]
    fn dense_constructor_checks_symmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(SymMatrix::from_dense(m).is_err());
        assert!(SymMatrix::from_dense(DMatrix::zeros(2, 3)).is_err());
    }
}
