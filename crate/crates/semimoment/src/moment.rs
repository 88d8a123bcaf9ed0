//! Moment functionals on a truncated graded monomial basis, moment and
//! localizing matrices, preorder-positivity reports, and the matrix-pencil
//! bound checks for operators of bounded polynomials.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::polyring::{mono_basis, Monomial, Polynomial};
use crate::semialg::SemiAlgebraicSet;
use crate::univariate::AtomicMeasure;

/// Relative rank cutoff used when compressing pencils onto the range of
/// the moment matrix.
pub const PENCIL_RANK_TOL: f64 = 1e-10;

/// Default PSD tolerance, applied relative to `max(1, lambda_max)`.
pub const PSD_TOL: f64 = 1e-8;

/// A linear functional on polynomials of degree <= `max_degree`, stored as
/// a complete moment table on the graded monomial basis. Application
/// beyond the degree budget is an error, never a truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentFunctional {
    dim: usize,
    max_degree: u32,
    moments: BTreeMap<Monomial, f64>,
}

impl MomentFunctional {
    /// Build from a complete moment table. Every monomial of degree
    /// <= `max_degree` must be present.
    pub fn new(dim: usize, max_degree: u32, moments: BTreeMap<Monomial, f64>) -> Result<Self> {
        if max_degree % 2 != 0 {
            return Err(Error::Argument("max_degree must be even".into()));
        }
        for m in mono_basis(dim, max_degree)? {
            if !moments.contains_key(&m) {
                return Err(Error::Argument(format!(
                    "missing moment for monomial {:?}",
                    m.exps()
                )));
            }
        }
        Ok(MomentFunctional {
            dim,
            max_degree,
            moments,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn moment(&self, m: &Monomial) -> Option<f64> {
        self.moments.get(m).copied()
    }

    /// Apply the functional: the coefficient-weighted sum of stored moments.
    pub fn apply(&self, p: &Polynomial) -> Result<f64> {
        if p.dim() != self.dim {
            return Err(Error::Argument(format!(
                "apply: polynomial dimension {} vs functional dimension {}",
                p.dim(),
                self.dim
            )));
        }
        if p.degree() > self.max_degree {
            return Err(Error::Degree(format!(
                "polynomial degree {} exceeds moment budget {}",
                p.degree(),
                self.max_degree
            )));
        }
        Ok(p.terms().map(|(m, c)| c * self.moments[m]).sum())
    }

    /// Moment matrix `M_n(L)` on the degree-<= n monomial basis.
    pub fn moment_matrix(&self, n: u32) -> Result<IndexedSymmetricMatrix> {
        self.localizing_matrix(&Polynomial::constant(self.dim, 1.0), n)
    }

    /// Localizing matrix with entries `L(g * m_a * m_b)`.
    pub fn localizing_matrix(&self, g: &Polynomial, n: u32) -> Result<IndexedSymmetricMatrix> {
        if g.dim() != self.dim {
            return Err(Error::Argument(
                "localizing polynomial dimension mismatch".into(),
            ));
        }
        if 2 * n + g.degree() > self.max_degree {
            return Err(Error::Degree(format!(
                "localizing matrix needs moments to degree {}, budget is {}",
                2 * n + g.degree(),
                self.max_degree
            )));
        }
        let basis = mono_basis(self.dim, n)?;
        let size = basis.len();
        let mut mat = DMatrix::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let prod = basis[i].mul(&basis[j]);
                let v: f64 = g
                    .terms()
                    .map(|(m, c)| c * self.moments[&prod.mul(m)])
                    .sum();
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        Ok(IndexedSymmetricMatrix { basis, mat })
    }
}

/// Integration functional of an atomic measure, truncated at `max_degree`.
pub fn functional_from_measure(mu: &AtomicMeasure, max_degree: u32) -> Result<MomentFunctional> {
    let d = mu.dim();
    let mut moments = BTreeMap::new();
    for m in mono_basis(d, max_degree)? {
        let v = mu
            .points
            .iter()
            .zip(&mu.weights)
            .map(|(p, &w)| w * m.eval(p))
            .sum();
        moments.insert(m, v);
    }
    MomentFunctional::new(d, max_degree, moments)
}

#[derive(Serialize, Deserialize)]
struct FunctionalRepr {
    dim: usize,
    max_degree: u32,
    moments: BTreeMap<String, f64>,
}

impl Serialize for MomentFunctional {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let moments = self
            .moments
            .iter()
            .map(|(m, &v)| {
                let key = m
                    .exps()
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                (key, v)
            })
            .collect();
        FunctionalRepr {
            dim: self.dim,
            max_degree: self.max_degree,
            moments,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MomentFunctional {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FunctionalRepr::deserialize(d)?;
        let mut moments = BTreeMap::new();
        for (key, v) in repr.moments {
            let exps: std::result::Result<Vec<u32>, _> =
                key.split(',').map(|t| t.trim().parse::<u32>()).collect();
            let exps = exps.map_err(|e| D::Error::custom(format!("bad moment key `{key}`: {e}")))?;
            if exps.len() != repr.dim {
                return Err(D::Error::custom(format!(
                    "moment key `{key}` has {} exponents, expected {}",
                    exps.len(),
                    repr.dim
                )));
            }
            moments.insert(Monomial::new(exps), v);
        }
        MomentFunctional::new(repr.dim, repr.max_degree, moments)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// A symmetric matrix indexed by an ordered monomial basis.
#[derive(Clone, Debug)]
pub struct IndexedSymmetricMatrix {
    pub basis: Vec<Monomial>,
    pub mat: DMatrix<f64>,
}

impl IndexedSymmetricMatrix {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::sym_eigenvalues(&self.mat)
    }

    pub fn min_eig(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eig(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }
}

/// Outcome of one localizing-matrix eigenvalue check.
#[derive(Clone, Debug, Serialize)]
pub struct GeneratorCheck {
    /// Index of the product generator in binary-counter order.
    pub index: usize,
    pub degree: u32,
    pub level: u32,
    pub size: usize,
    pub min_eig: f64,
    pub scale: f64,
    pub pass: bool,
}

/// Preorder-positivity report: one localizing matrix per product generator.
#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub tol: f64,
    pub checks: Vec<GeneratorCheck>,
    pub pass: bool,
}

/// Check `L >= 0` on the truncated preorder of `set`: for every product
/// generator `g` of the preorder, the localizing matrix at level
/// `min(n, floor((max_degree - deg g) / 2))` must be PSD up to
/// `tol * max(1, lambda_max)`.
pub fn check_preorder_positivity(
    functional: &MomentFunctional,
    set: &SemiAlgebraicSet,
    n: u32,
    tol: f64,
) -> Result<PositivityReport> {
    if set.dim != functional.dim() {
        return Err(Error::Argument(
            "set and functional dimensions differ".into(),
        ));
    }
    let products = set.preorder_generators()?;
    let mut checks = Vec::with_capacity(products.len());
    let mut pass = true;
    for (index, g) in products.iter().enumerate() {
        let deg = g.degree();
        if deg > functional.max_degree() {
            return Err(Error::Degree(format!(
                "product generator {index} has degree {deg}, moment budget is {}",
                functional.max_degree()
            )));
        }
        let level = n.min((functional.max_degree() - deg) / 2);
        let loc = functional.localizing_matrix(g, level)?;
        let eigs = loc.eigenvalues();
        let min_eig = eigs[0];
        let lmax = eigs.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let scale = lmax.max(1.0);
        let ok = min_eig >= -tol * scale;
        pass &= ok;
        checks.push(GeneratorCheck {
            index,
            degree: deg,
            level,
            size: loc.size(),
            min_eig,
            scale,
            pass: ok,
        });
    }
    Ok(PositivityReport { tol, checks, pass })
}

/// Eigenvalues of `A` compressed onto the numerically determined range of
/// the PSD matrix `B`: eigenvalues of `W^T A W` with `W = Q_r L_r^{-1/2}`.
fn pencil_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (evals, evecs) = crate::linalg::sym_eigen(b);
    let lmax = evals.iter().fold(0.0f64, |m, &l| m.max(l));
    let cutoff = PENCIL_RANK_TOL * lmax;
    let keep: Vec<usize> = (0..b.nrows())
        .filter(|&i| evals[i] > cutoff && evals[i] > 0.0)
        .collect();
    if keep.is_empty() {
        return Err(Error::Degenerate(
            "moment matrix is numerically zero".into(),
        ));
    }
    let mut w = DMatrix::zeros(b.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let scale = evals[i].sqrt().recip();
        for row in 0..b.nrows() {
            w[(row, col)] = evecs[(row, i)] * scale;
        }
    }
    let compressed = w.transpose() * a * &w;
    Ok(crate::linalg::sym_eigenvalues(&compressed))
}

/// Result of the truncated operator-norm bound check.
#[derive(Clone, Debug, Serialize)]
pub struct PencilCheck {
    pub max_eig: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Truncated form of the bound `|pi_L(p)| <= rho`: the largest generalized
/// eigenvalue of the pair `(M_n(p^2 L), M_n(L))`, computed on the range of
/// `M_n(L)`, must not exceed `rho^2 + tol`.
pub fn pencil_norm_check(
    functional: &MomentFunctional,
    p: &Polynomial,
    rho: f64,
    n: u32,
    tol: f64,
) -> Result<PencilCheck> {
    let p2 = p.mul(p)?;
    let a = functional.localizing_matrix(&p2, n)?;
    let b = functional.moment_matrix(n)?;
    let eigs = pencil_eigenvalues(&a.mat, &b.mat)?;
    let max_eig = *eigs.last().unwrap();
    Ok(PencilCheck {
        max_eig,
        bound: rho * rho,
        pass: max_eig <= rho * rho + tol,
    })
}

/// Result of the two-sided operator bound check `a I <= pi_L(p) <= b I`.
#[derive(Clone, Debug, Serialize)]
pub struct IntervalCheck {
    pub min_eig: f64,
    pub max_eig: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass_lower: bool,
    pub pass_upper: bool,
    pub pass: bool,
}

/// Truncated form of `a M_n(L) <= M_n(p L) <= b M_n(L)` on the range of
/// the moment matrix.
pub fn operator_interval_check(
    functional: &MomentFunctional,
    p: &Polynomial,
    lower: f64,
    upper: f64,
    n: u32,
    tol: f64,
) -> Result<IntervalCheck> {
    let a = functional.localizing_matrix(p, n)?;
    let b = functional.moment_matrix(n)?;
    let eigs = pencil_eigenvalues(&a.mat, &b.mat)?;
    let min_eig = eigs[0];
    let max_eig = *eigs.last().unwrap();
    let pass_lower = min_eig >= lower - tol;
    let pass_upper = max_eig <= upper + tol;
    Ok(IntervalCheck {
        min_eig,
        max_eig,
        lower,
        upper,
        pass_lower,
        pass_upper,
        pass: pass_lower && pass_upper,
    })
}

/// Result of the vanishing-ideal check: if `p = 0` on the support, both
/// `L(p)` and `L(p^2)` must vanish.
#[derive(Clone, Debug, Serialize)]
pub struct AnnihilationCheck {
    pub value: f64,
    pub square: f64,
    pub pass: bool,
}

pub fn ideal_annihilation_check(
    functional: &MomentFunctional,
    p: &Polynomial,
    tol: f64,
) -> Result<AnnihilationCheck> {
    let value = functional.apply(p)?.abs();
    let square = functional.apply(&p.mul(p)?)?.abs();
    Ok(AnnihilationCheck {
        value,
        square,
        pass: value <= tol && square <= tol,
    })
}
