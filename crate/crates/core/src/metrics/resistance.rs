//! Effective resistance through the Laplacian pseudoinverse.
//!
//! `R_ab = L+_aa + L+_bb - 2 L+_ab`. Two routes to `L+` are provided: the
//! rank-one shift `(L + J/n)^-1 - J/n` solved by Cholesky (default, valid for
//! connected graphs), and cyclic Jacobi eigendecomposition with small
//! eigenvalues dropped.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Relative eigenvalue cutoff for the Jacobi route.
pub const EIGEN_CUTOFF: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PinvMethod {
    #[default]
    ShiftedCholesky,
    Jacobi,
}

/// Dense combinatorial Laplacian, row-major.
pub fn laplacian(g: &Graph) -> Vec<f64> {
    let n = g.num_nodes();
    let mut l = vec![0.0; n * n];
    for &(u, v) in g.edges() {
        l[u * n + v] -= 1.0;
        l[v * n + u] -= 1.0;
        l[u * n + u] += 1.0;
        l[v * n + v] += 1.0;
    }
    l
}

/// Eigenpairs of a symmetric matrix; `vectors` holds eigenvector `k` in column `k`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> SymmetricEigen {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    SymmetricEigen {
        values: (0..n).map(|i| a[i * n + i]).collect(),
        vectors: v,
        sweeps,
    }
}

fn pinv_jacobi(l: &[f64], n: usize) -> Vec<f64> {
    let eig = symmetric_eigen(l, n);
    let max = eig.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut pinv = vec![0.0; n * n];
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda.abs() <= EIGEN_CUTOFF * max {
            continue;
        }
        for i in 0..n {
            let vi = eig.vectors[i * n + k] / lambda;
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                pinv[i * n + j] += vi * eig.vectors[j * n + k];
            }
        }
    }
    pinv
}

fn pinv_shifted_cholesky(l: &[f64], n: usize) -> Result<Vec<f64>> {
    let shift = 1.0 / n as f64;
    let mut m: Vec<f64> = l.iter().map(|x| x + shift).collect();
    // In-place lower Cholesky factor.
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if d <= 0.0 {
            return Err(Error::domain("shifted Laplacian is not positive definite"));
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
    }
    let mut inv = vec![0.0; n * n];
    let mut y = vec![0.0; n];
    for col in 0..n {
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= m[i * n + k] * y[k];
            }
            y[i] = s / m[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= m[k * n + i] * inv[k * n + col];
            }
            inv[i * n + col] = s / m[i * n + i];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = avg;
            inv[j * n + i] = avg;
        }
    }
    inv.iter_mut().for_each(|x| *x -= shift);
    Ok(inv)
}

/// Pseudoinverse of the Laplacian of a connected graph, queried for
/// resistances and commute times.
#[derive(Clone, Debug)]
pub struct ResistanceSolver {
    pinv: Vec<f64>,
    n: usize,
}

impl ResistanceSolver {
    pub fn new(g: &Graph) -> Result<Self> {
        Self::with_method(g, PinvMethod::default())
    }

    pub fn with_method(g: &Graph, method: PinvMethod) -> Result<Self> {
        if !g.is_connected() {
            return Err(Error::domain("effective resistance needs a connected graph"));
        }
        let n = g.num_nodes();
        let l = laplacian(g);
        let pinv = match method {
            PinvMethod::ShiftedCholesky => pinv_shifted_cholesky(&l, n)?,
            PinvMethod::Jacobi => pinv_jacobi(&l, n),
        };
        Ok(ResistanceSolver { pinv, n })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Row-major `L+`.
    pub fn pinv(&self) -> &[f64] {
        &self.pinv
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.pinv[i * self.n + j]
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: v,
                num_nodes: self.n,
            })
        }
    }

    pub fn effective_resistance(&self, a: usize, b: usize) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Ok(0.0);
        }
        Ok((self.entry(a, a) + self.entry(b, b) - 2.0 * self.entry(a, b)).max(0.0))
    }

    /// `2 |E| R_ab`.
    pub fn expected_commute_time(&self, edge_count: usize, a: usize, b: usize) -> Result<f64> {
        Ok(2.0 * edge_count as f64 * self.effective_resistance(a, b)?)
    }

    /// Mean resistance over unordered pairs of `scope`.
    pub fn mean_resistance(&self, scope: &[usize]) -> Result<f64> {
        if scope.len() < 2 {
            return Err(Error::domain("mean resistance needs at least two nodes"));
        }
        let mut total = 0.0;
        for (i, &a) in scope.iter().enumerate() {
            for &b in &scope[i + 1..] {
                total += self.effective_resistance(a, b)?;
            }
        }
        Ok(total / (scope.len() * (scope.len() - 1) / 2) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = a[i * n + k];
                for j in 0..n {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
        c
    }

    fn check_invariants(g: &Graph, method: PinvMethod) {
        let n = g.num_nodes();
        let s = ResistanceSolver::with_method(g, method).unwrap();
        let l = laplacian(g);
        let lpl = matmul(&matmul(&l, s.pinv(), n), &l, n);
        let err: f64 = lpl.iter().zip(&l).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = l.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err <= 1e-8 * norm.max(1.0), "{method:?}: L L+ L deviates by {err}");
        for i in 0..n {
            let row: f64 = s.pinv()[i * n..(i + 1) * n].iter().sum();
            assert!(row.abs() < 1e-8, "{method:?}: row {i} sums to {row}");
        }
    }

    #[test]
    fn pseudoinverse_invariants_both_routes() {
        let mut rng = generators::seeded_rng(11);
        for g in [
            generators::path(7),
            generators::cycle(9),
            generators::grid(4, 5),
            generators::complete(6),
            generators::random_tree(25, &mut rng),
            Graph::empty(1),
        ] {
            check_invariants(&g, PinvMethod::Jacobi);
            check_invariants(&g, PinvMethod::ShiftedCholesky);
        }
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let n = 4;
        let a = vec![4.0, 1.0, -2.0, 2.0, 1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 3.0, -2.0, 2.0, 1.0, -2.0, -1.0];
        let eig = symmetric_eigen(&a, n);
        for i in 0..n {
            for j in 0..n {
                let x: f64 = (0..n).map(|k| eig.vectors[i * n + k] * eig.values[k] * eig.vectors[j * n + k]).sum();
                assert!((x - a[i * n + j]).abs() < 1e-12);
            }
        }
        let trace: f64 = eig.values.iter().sum();
        assert!((trace - 8.0).abs() < 1e-12);
    }

    #[test]
    fn resistance_examples() {
        let k2 = ResistanceSolver::new(&generators::path(2)).unwrap();
        assert!((k2.effective_resistance(0, 1).unwrap() - 1.0).abs() < 1e-12);
        let p3 = ResistanceSolver::new(&generators::path(3)).unwrap();
        assert!((p3.effective_resistance(0, 2).unwrap() - 2.0).abs() < 1e-12);
        let tri = ResistanceSolver::new(&generators::complete(3)).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            assert!((tri.effective_resistance(a, b).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(tri.effective_resistance(1, 1).unwrap(), 0.0);
        assert!(tri.effective_resistance(0, 3).is_err());
    }

    #[test]
    fn commute_examples() {
        let k2 = ResistanceSolver::new(&generators::path(2)).unwrap();
        assert!((k2.expected_commute_time(1, 0, 1).unwrap() - 2.0).abs() < 1e-12);
        let tri = ResistanceSolver::new(&generators::complete(3)).unwrap();
        assert!((tri.expected_commute_time(3, 0, 2).unwrap() - 4.0).abs() < 1e-12);
        let p3 = ResistanceSolver::new(&generators::path(3)).unwrap();
        assert!((p3.expected_commute_time(2, 0, 2).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_is_domain_error() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(ResistanceSolver::new(&g), Err(Error::Domain(_))));
        assert!(matches!(ResistanceSolver::with_method(&g, PinvMethod::Jacobi), Err(Error::Domain(_))));
    }
}
