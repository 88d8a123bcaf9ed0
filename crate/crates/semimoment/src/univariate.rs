//! One-dimensional moment machinery: Hankel positivity, localized Hankel
//! matrices, Gauss-quadrature reconstruction of atomic measures from
//! moments, and restriction of multivariate functionals to lines.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::MomentFunctional;
use crate::polyring::Polynomial;

/// Default relative rank cutoff for Hankel matrices.
pub const RANK_TOL: f64 = 1e-10;

/// Weighted point list representing a finitely atomic positive measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("measure has no atoms".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Argument(
                "points and weights differ in length".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Argument("weights must be positive".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Argument("atoms have mixed dimensions".into()));
        }
        Ok(AtomicMeasure { points, weights })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Raw power moments of a 1-D measure up to `max_degree` (inclusive).
    pub fn moments_1d(&self, max_degree: usize) -> Result<MomentVector1D> {
        if self.dim() != 1 {
            return Err(Error::Argument("moments_1d requires a 1-D measure".into()));
        }
        let m = (0..=max_degree)
            .map(|k| {
                self.points
                    .iter()
                    .zip(&self.weights)
                    .map(|(p, &w)| w * p[0].powi(k as i32))
                    .sum()
            })
            .collect();
        MomentVector1D::new(m)
    }
}

/// Moments `m_0, ..., m_{2n}` of a univariate functional. Length is odd.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentVector1D {
    #[serde(rename = "moments")]
    pub m: Vec<f64>,
}

impl MomentVector1D {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.is_empty() || m.len() % 2 == 0 {
            return Err(Error::Argument(format!(
                "moment vector must have odd length 2n+1, got {}",
                m.len()
            )));
        }
        Ok(MomentVector1D { m })
    }

    /// Highest moment degree 2n.
    pub fn max_degree(&self) -> usize {
        self.m.len() - 1
    }

    /// The Hankel matrix `H[i][j] = m_{i+j}` of size n+1.
    pub fn hankel(&self) -> DMatrix<f64> {
        let n1 = self.max_degree() / 2 + 1;
        DMatrix::from_fn(n1, n1, |i, j| self.m[i + j])
    }

    pub fn hankel_min_eig(&self) -> f64 {
        min_eig(&self.hankel())
    }

    /// The g-localized Hankel `H_g[i][j] = sum_c g_c m_{i+j+c}` at the
    /// maximal feasible size.
    pub fn localized_hankel(&self, g: &Polynomial) -> Result<DMatrix<f64>> {
        if g.dim() != 1 {
            return Err(Error::Argument(
                "localized Hankel takes a univariate shift polynomial".into(),
            ));
        }
        let deg = g.degree() as usize;
        if deg > self.max_degree() {
            return Err(Error::Degree(format!(
                "shift degree {deg} exceeds moment budget {}",
                self.max_degree()
            )));
        }
        let size = (self.max_degree() - deg) / 2 + 1;
        let mat = DMatrix::from_fn(size, size, |i, j| {
            g.terms()
                .map(|(m, c)| c * self.m[i + j + m.degree() as usize])
                .sum()
        });
        Ok(mat)
    }

    pub fn localized_hankel_min_eig(&self, g: &Polynomial) -> Result<f64> {
        Ok(min_eig(&self.localized_hankel(g)?))
    }

    /// Reconstruct an r-atom measure (r = numerical Hankel rank) whose
    /// moments reproduce the leading entries of this vector, via the
    /// three-term recurrence / Jacobi-matrix route: orthogonal-polynomial
    /// recurrence coefficients are computed from the moments, and the
    /// symmetric eigendecomposition of the Jacobi matrix yields atoms
    /// (eigenvalues) and weights (m_0 times squared first eigenvector
    /// components).
    ///
    /// A recurrence breakdown below the rank cutoff is treated as the true
    /// rank: the measure built from the valid recurrence prefix is returned.
    pub fn quadrature_atoms(&self, rank_tol: f64) -> Result<AtomicMeasure> {
        let h = self.hankel();
        let eigs = crate::linalg::sym_eigenvalues(&h);
        let lmax = eigs.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let scale = lmax.max(1e-300);
        let lmin = eigs.iter().fold(f64::INFINITY, |a, &l| a.min(l));
        if lmin < -rank_tol * scale {
            return Err(Error::Infeasible(format!(
                "indefinite Hankel: min eigenvalue {lmin:.3e} (scale {scale:.3e})"
            )));
        }
        let rank = eigs.iter().filter(|&&l| l > rank_tol * scale).count();
        // alpha_{r-1} with r = n+1 would need moment index 2n+1; that
        // coefficient does not affect moments up to 2n, so use 0 there.
        let r_target = rank.max(1);

        // Monic orthogonal polynomial recurrence driven by the raw moments.
        let s = |p: &[f64], q: &[f64]| -> f64 {
            // <p, q> = sum_{i,j} p_i q_j m_{i+j}
            let mut acc = 0.0;
            for (i, &a) in p.iter().enumerate() {
                for (j, &b) in q.iter().enumerate() {
                    acc += a * b * self.m[i + j];
                }
            }
            acc
        };
        let shift = |p: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; p.len() + 1];
            out[1..].copy_from_slice(p);
            out
        };

        let mut alphas = Vec::new();
        let mut betas = Vec::new(); // betas[k] pairs with step k >= 1
        let mut p_prev: Vec<f64> = vec![];
        let mut p_cur: Vec<f64> = vec![1.0];
        let mut norm_prev = 0.0;
        for k in 0..r_target {
            let norm = s(&p_cur, &p_cur);
            if norm <= rank_tol * scale {
                break; // rank exhausted earlier than the eigenvalue count
            }
            let alpha = if 2 * k + 1 <= self.max_degree() {
                let xp = shift(&p_cur);
                s(&xp, &p_cur) / norm
            } else {
                0.0
            };
            alphas.push(alpha);
            if k > 0 {
                betas.push(norm / norm_prev);
            }
            if k + 1 < r_target {
                // p_{k+1} = (x - alpha) p_k - beta p_{k-1}
                let mut next = shift(&p_cur);
                for (i, &c) in p_cur.iter().enumerate() {
                    next[i] -= alpha * c;
                }
                if k > 0 {
                    let beta = *betas.last().unwrap();
                    for (i, &c) in p_prev.iter().enumerate() {
                        next[i] -= beta * c;
                    }
                }
                norm_prev = norm;
                p_prev = std::mem::replace(&mut p_cur, next);
            }
        }
        let r = alphas.len();
        if r == 0 {
            return Err(Error::Infeasible("zero moment vector".into()));
        }

        let mut jacobi = DMatrix::zeros(r, r);
        for (k, &a) in alphas.iter().enumerate() {
            jacobi[(k, k)] = a;
        }
        for (k, &b) in betas.iter().enumerate() {
            let off = b.max(0.0).sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
        let (nodes, vectors) = crate::linalg::sym_eigen(&jacobi);
        let mut atoms: Vec<(f64, f64)> = (0..r)
            .map(|i| {
                let w = self.m[0] * vectors[(0, i)].powi(2);
                (nodes[i], w)
            })
            .collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let points = atoms.iter().map(|&(x, _)| vec![x]).collect();
        let weights = atoms.iter().map(|&(_, w)| w.max(f64::MIN_POSITIVE)).collect();
        AtomicMeasure::new(points, weights)
    }
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    crate::linalg::min_eig(m)
}

/// Restrict a multivariate functional to the line `t -> a + t v`: the k-th
/// output moment is `L(ell^k)` where `ell(x) = (x - a) . v / |v|^2` is the
/// affine coordinate along the line.
pub fn line_restriction(
    functional: &MomentFunctional,
    a: &[f64],
    v: &[f64],
) -> Result<MomentVector1D> {
    let d = functional.dim();
    if a.len() != d || v.len() != d {
        return Err(Error::Argument(
            "line_restriction: base point or direction has wrong dimension".into(),
        ));
    }
    let v2: f64 = v.iter().map(|&c| c * c).sum();
    if v2 == 0.0 {
        return Err(Error::Argument("line direction must be nonzero".into()));
    }
    let mut ell = Polynomial::zero(d);
    for i in 0..d {
        let xi = Polynomial::var(d, i).sub(&Polynomial::constant(d, a[i]))?;
        ell = ell.add(&xi.scale(v[i] / v2))?;
    }
    let mut m = Vec::with_capacity(functional.max_degree() as usize + 1);
    let mut pow = Polynomial::constant(d, 1.0);
    let mut max_degree = functional.max_degree() as usize;
    if max_degree % 2 == 1 {
        max_degree -= 1;
    }
    for _ in 0..=max_degree {
        m.push(functional.apply(&pow)?);
        pow = pow.mul(&ell)?;
    }
    MomentVector1D::new(m)
}
