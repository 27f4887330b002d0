// SPDX-License-Identifier: Apache-2.0

//! Small dense Hermitian helpers: Jacobi scaling, plain and pivoted Cholesky,
//! and eigen-based PSD projection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest `|A − A*|` entry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(a[(i, i)].re, 0.0)
        } else {
            (a[(i, j)] + a[(j, i)].conj()) * 0.5
        }
    })
}

/// `D^{-1/2} A D^{-1/2}` with `D = diag(A)`; returns the scaled matrix and
/// `D^{1/2}`. Non-positive diagonal entries are left unscaled.
pub fn jacobi_scale(a: &CMatrix) -> (CMatrix, DVector<f64>) {
    let n = a.nrows();
    let d = DVector::from_fn(n, |i, _| {
        let v = a[(i, i)].re;
        if v > 0.0 {
            v.sqrt()
        } else {
            1.0
        }
    });
    let s = CMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]));
    (s, d)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Unpivoted Cholesky `A = L L*`; `None` if a pivot is not positive.
pub fn cholesky(a: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Pivoted Cholesky `Pᵀ A P = L L*` stopping when the largest remaining pivot
/// falls below `tol · max diag`. Returns `(L (n × rank), perm)` where
/// `perm[k]` is the original index placed at position `k`.
pub fn pivoted_cholesky(a: &CMatrix, tol: f64) -> (CMatrix, Vec<usize>) {
    let n = a.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut work = a.clone();
    let mut l = CMatrix::zeros(n, n);
    let max_diag = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let mut rank = 0;
    for j in 0..n {
        // diag of the Schur complement
        let (p, best) = (j..n)
            .map(|i| {
                let mut d = work[(i, i)].re;
                for k in 0..j {
                    d -= l[(i, k)].norm_sqr();
                }
                (i, d)
            })
            .fold((j, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(best > tol * max_diag) {
            break;
        }
        if p != j {
            perm.swap(p, j);
            work.swap_rows(p, j);
            work.swap_columns(p, j);
            l.swap_rows(p, j);
        }
        let djj = best.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = work[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
        rank += 1;
    }
    (l.columns(0, rank).into_owned(), perm)
}

/// Inverse of a lower-triangular matrix with positive diagonal.
pub fn lower_triangular_inverse(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Projects a Hermitian matrix onto the PSD cone by clipping negative
/// eigenvalues; returns the projection and the Frobenius size of the change.
pub fn clip_to_psd(a: &CMatrix) -> (CMatrix, f64) {
    let eig = SymmetricEigen::new(hermitize(a));
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    let change: f64 = eig
        .eigenvalues
        .iter()
        .zip(&clipped)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let v = &eig.eigenvectors;
    let lam = CMatrix::from_diagonal(&DVector::from_iterator(
        clipped.len(),
        clipped.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    (hermitize(&(v * lam * v.adjoint())), change)
}
