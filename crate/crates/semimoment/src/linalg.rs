//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! nalgebra's `SymmetricEigen` returns accurate eigenvalues but its
//! eigenvectors can be off by ~1e-3 on well-conditioned small matrices
//! (reconstruction residual far above round-off), which silently breaks
//! every consumer that uses the vectors: PSD clipping, pencil range
//! compression, and quadrature weights. Jacobi is slower asymptotically
//! but fully accurate, and every matrix in this crate is small.

use nalgebra::DMatrix;

/// Eigenvalues (ascending) and the matching orthonormal eigenvector
/// columns of a symmetric matrix.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = m.norm().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-18 * norm {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, i)];
        }
    }
    (values, vectors)
}

/// Sorted eigenvalues only.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    sym_eigen(a).0
}

pub fn min_eig(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)[0]
}

/// `max(1, max |lambda|)`, the scale used by relative PSD tolerances.
pub fn eig_scale(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()))
        .max(1.0)
}
