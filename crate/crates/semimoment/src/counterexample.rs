//! Construction and certification of an explicit positive linear
//! functional on two variables that is not a moment functional.
//!
//! The pipeline: find a truncated univariate moment vector with PSD Hankel,
//! PSD x^3-localized Hankel, and first moment -delta < 0; spread it onto
//! even degrees; pull it back along the cusp curve t -> (t^2, t^3). The
//! result is nonnegative on squares but strictly negative on x1, which is
//! nonnegative on the curve, so no representing measure can exist.
//!
//! The feasibility search is an alternating-projection loop in a product
//! space with one factor per constraint (eigenvalue clipping for the two
//! structured PSD constraints, exact reset for the affine constraints,
//! weighted anti-diagonal averaging for the consistency subspace).
//! Convergence of the loop is never trusted: the output is certified a
//! posteriori by the eigenvalue oracles of the univariate module.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::MomentFunctional;
use crate::polyring::Polynomial;
use crate::univariate::MomentVector1D;

/// Parameters of the seed feasibility search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedSpec {
    /// Seed half-degree: the seed has moments m_0 ... m_{2n}.
    pub n: usize,
    /// Target value of -L(x); delta = 0 degenerates to the point mass at 0.
    pub delta: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Optional warm start (padded with zeros or truncated to length 2n+1).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warm_start: Option<Vec<f64>>,
}

impl SeedSpec {
    pub fn new(n: usize, delta: f64) -> Self {
        SeedSpec {
            n,
            delta,
            max_iter: 50_000,
            tol: 1e-7,
            warm_start: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Argument(
                "seed degree n must be at least 3 so the localized Hankel has size >= 2".into(),
            ));
        }
        if self.delta < 0.0 {
            return Err(Error::Argument("delta must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Eigen-clip a symmetric matrix to the PSD cone.
fn clip_psd(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, q) = crate::linalg::sym_eigen(mat);
    let mut scaled = q.clone();
    for (col, &l) in values.iter().enumerate() {
        let l = l.max(0.0);
        for row in 0..q.nrows() {
            scaled[(row, col)] *= l;
        }
    }
    scaled * q.transpose()
}

fn hankel(m: &[f64], size: usize, offset: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |i, j| m[offset + i + j])
}

fn min_eig_of(mat: &DMatrix<f64>) -> f64 {
    crate::linalg::min_eig(mat)
}

fn scale_of(mat: &DMatrix<f64>) -> f64 {
    crate::linalg::eig_scale(mat)
}

/// Search for a seed moment vector with m_0 = 1, m_1 = -delta, PSD Hankel,
/// and PSD x^3-localized Hankel. Feasibility of the output is certified by
/// the eigenvalue oracles, never inferred from convergence of the loop.
pub fn find_seed(spec: &SeedSpec) -> Result<MomentVector1D> {
    spec.validate()?;
    let n = spec.n;
    let len = 2 * n + 1;
    let loc_size = n - 1; // indices i + j + 3 stay within 2n - 1

    let mut m = vec![0.0; len];
    match &spec.warm_start {
        Some(w) => {
            for (i, &v) in w.iter().take(len).enumerate() {
                m[i] = v;
            }
        }
        None => m[0] = 1.0,
    }
    m[0] = 1.0;
    m[1] = -spec.delta;

    // Absolute eigenvalue residuals: the certificate quotes raw minimum
    // eigenvalues, so the search must meet the tolerance without a scale
    // factor softening it.
    let certified = |m: &[f64]| -> (bool, f64) {
        let r1 = (-min_eig_of(&hankel(m, n + 1, 0))).max(0.0);
        let r2 = (-min_eig_of(&hankel(m, loc_size, 3))).max(0.0);
        let residual = r1.max(r2);
        (residual <= spec.tol, residual)
    };

    // Alternating projections in the product space
    // Sym(n+1) x Sym(loc_size) x R^2: one factor per constraint, coupled
    // through the consistency subspace "all factors come from a single m".
    // Projection onto the product of the two PSD cones and the affine
    // point is eigen-clipping per block; projection onto the subspace is
    // anti-diagonal averaging weighted across blocks. Both projections are
    // exact, so the loop cannot stall on a cycle; plain cyclic sweeps over
    // the three constraints in m-space do.
    let mut counts = vec![0.0f64; len];
    for k in 0..len {
        let c1 = (k.min(n) - k.saturating_sub(n)) + 1;
        let c2 = if (3..=2 * n - 1).contains(&k) {
            ((k - 3).min(loc_size - 1) - (k - 3).saturating_sub(loc_size - 1)) + 1
        } else {
            0
        };
        let c3 = if k <= 1 { 1 } else { 0 };
        counts[k] = (c1 + c2 + c3) as f64;
    }

    // Dykstra increments for the cone factors; the consistency subspace is
    // affine and needs none.
    let mut inc_big = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut inc_loc = DMatrix::<f64>::zeros(loc_size, loc_size);

    // A warm start that already certifies needs no iterations.
    let (ok, residual) = certified(&m);
    if ok {
        return MomentVector1D::new(m);
    }
    let mut best = m.clone();
    let mut best_residual = residual;
    for _ in 0..spec.max_iter {
        // project the shifted structured point onto the product cone
        let shifted_big = hankel(&m, n + 1, 0) + &inc_big;
        let shifted_loc = hankel(&m, loc_size, 3) + &inc_loc;
        let big = clip_psd(&shifted_big);
        let loc = clip_psd(&shifted_loc);
        inc_big = shifted_big - &big;
        inc_loc = shifted_loc - &loc;
        // project back onto the consistency subspace: each moment is the
        // weighted mean of every product-space entry indexed by it
        let mut sums = vec![0.0f64; len];
        for i in 0..n + 1 {
            for j in 0..n + 1 {
                sums[i + j] += big[(i, j)];
            }
        }
        for i in 0..loc_size {
            for j in 0..loc_size {
                sums[i + j + 3] += loc[(i, j)];
            }
        }
        sums[0] += 1.0;
        sums[1] += -spec.delta;
        for k in 0..len {
            m[k] = sums[k] / counts[k];
        }
        m[0] = 1.0;
        m[1] = -spec.delta;

        let (ok, residual) = certified(&m);
        if residual < best_residual {
            best_residual = residual;
            best = m.clone();
        }
        if ok {
            return MomentVector1D::new(m);
        }
    }
    Err(Error::NonConvergence {
        iters: spec.max_iter,
        residual: best_residual,
        best,
    })
}

/// Spread a moment vector onto even degrees: out[2k] = m[k], odd entries
/// exactly zero. Input of length 2n+1 gives output of length 4n+1.
pub fn lift_even(m: &MomentVector1D) -> MomentVector1D {
    let n2 = m.m.len() - 1;
    let mut out = vec![0.0; 2 * n2 + 1];
    for (k, &v) in m.m.iter().enumerate() {
        out[2 * k] = v;
    }
    MomentVector1D::new(out).expect("odd length by construction")
}

/// Pull a univariate moment vector back along the cusp curve:
/// `L2(x1^a x2^b) = m1[2a + 3b]`. The degree budget is the largest even
/// total degree D with 3D within the input length.
pub fn lift_curve(m1: &MomentVector1D) -> Result<MomentFunctional> {
    let top = m1.m.len() - 1;
    let mut max_degree = (top / 3) as u32;
    if max_degree % 2 == 1 {
        max_degree -= 1;
    }
    if max_degree == 0 {
        return Err(Error::Degree(
            "input too short for any even curve-lift degree".into(),
        ));
    }
    let mut moments = std::collections::BTreeMap::new();
    for mono in crate::polyring::mono_basis(2, max_degree)? {
        let idx = 2 * mono.exps()[0] as usize + 3 * mono.exps()[1] as usize;
        moments.insert(mono, m1.m[idx]);
    }
    MomentFunctional::new(2, max_degree, moments)
}

/// Evidence collected about a curve-lifted functional, independent of how
/// it was produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L2Evidence {
    pub moment_matrix_min_eig: f64,
    pub moment_matrix_scale: f64,
    /// The witness value L2(x1).
    pub witness: f64,
    /// |L2((x1^3 - x2^2) r)| for r in {1, x1, x2}; exactly zero for lifts.
    pub annihilation: Vec<f64>,
    /// Smallest sampled value of x1 on the curve (always >= 0).
    pub min_x1_on_curve: f64,
    pub is_counterexample: bool,
}

/// Run the moment-matrix, witness, and curve-annihilation legs on a
/// 2-variable functional. PSD or annihilation failures are errors; a
/// nonnegative witness only clears the counterexample flag.
pub fn certify_l2(l2: &MomentFunctional, t: u32, tol: f64) -> Result<L2Evidence> {
    if 2 * t > l2.max_degree() {
        return Err(Error::Degree(format!(
            "moment matrix at level {t} needs degree {}, functional has {}",
            2 * t,
            l2.max_degree()
        )));
    }
    let mt = l2.moment_matrix(t)?;
    let eigs = mt.eigenvalues();
    let min_eig = eigs[0];
    let scale = eigs.iter().fold(0.0f64, |a, &l| a.max(l.abs())).max(1.0);
    if min_eig < -tol * scale {
        return Err(Error::Verification {
            leg: "moment-matrix".into(),
            detail: format!("min eigenvalue {min_eig:.3e} at scale {scale:.3e}"),
        });
    }

    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    let cusp = Polynomial::monomial(2, vec![3, 0], 1.0)
        .sub(&Polynomial::monomial(2, vec![0, 2], 1.0))?;
    let mut annihilation = Vec::new();
    for r in [Polynomial::constant(2, 1.0), x1.clone(), x2] {
        let value = l2.apply(&cusp.mul(&r)?)?.abs();
        if value != 0.0 {
            return Err(Error::Verification {
                leg: "annihilation".into(),
                detail: format!("L2((x1^3 - x2^2) r) = {value} != 0"),
            });
        }
        annihilation.push(value);
    }

    let witness = l2.apply(&x1)?;
    // x1 = t^2 on the curve; sampled confirmation that the witness sign
    // contradicts any representing measure.
    let min_x1_on_curve = (-20..=20)
        .map(|i| (i as f64 / 10.0).powi(2))
        .fold(f64::INFINITY, f64::min);

    Ok(L2Evidence {
        moment_matrix_min_eig: min_eig,
        moment_matrix_scale: scale,
        witness,
        annihilation,
        min_x1_on_curve,
        is_counterexample: witness < -tol,
    })
}

/// The full certificate: seed, lifts, and all eigenvalue evidence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleCertificate {
    pub seed: Vec<f64>,
    pub lifted_even: Vec<f64>,
    pub l2: MomentFunctional,
    pub hankel_min_eig: f64,
    pub localized_hankel_min_eig: f64,
    pub evidence: L2Evidence,
    pub delta: f64,
    pub level: u32,
    pub tol: f64,
    /// Set when delta = 0 produced a degenerate, non-negative witness.
    pub degenerate: bool,
}

/// Assemble and check the certificate from a seed vector.
pub fn verify(seed: &MomentVector1D, t: u32, tol: f64) -> Result<CounterexampleCertificate> {
    let x3 = Polynomial::var(1, 0).pow(3);
    let h_min = seed.hankel_min_eig();
    let h_scale = scale_of(&seed.hankel());
    if h_min < -tol * h_scale {
        return Err(Error::Verification {
            leg: "hankel".into(),
            detail: format!("min eigenvalue {h_min:.3e}"),
        });
    }
    let loc = seed.localized_hankel(&x3)?;
    let loc_min = min_eig_of(&loc);
    if loc_min < -tol * scale_of(&loc) {
        return Err(Error::Verification {
            leg: "localized-hankel".into(),
            detail: format!("min eigenvalue {loc_min:.3e}"),
        });
    }

    let m1 = lift_even(seed);
    let l2 = lift_curve(&m1)?;
    let evidence = certify_l2(&l2, t, tol)?;
    let delta = -seed.m[1];
    let degenerate = !evidence.is_counterexample;
    Ok(CounterexampleCertificate {
        seed: seed.m.clone(),
        lifted_even: m1.m,
        l2,
        hankel_min_eig: h_min,
        localized_hankel_min_eig: loc_min,
        evidence,
        delta,
        level: t,
        tol,
        degenerate,
    })
}

/// Find a seed and certify the full pipeline in one call.
pub fn build(spec: &SeedSpec, t: u32) -> Result<CounterexampleCertificate> {
    let seed = find_seed(spec)?;
    verify(&seed, t, spec.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::functional_from_measure;
    use crate::polyring::Monomial;
    use crate::univariate::AtomicMeasure;

    #[test]
    fn zero_delta_is_immediately_feasible() {
        let mut spec = SeedSpec::new(3, 0.0);
        spec.max_iter = 5;
        let seed = find_seed(&spec).unwrap();
        assert_eq!(seed.m[0], 1.0);
        assert_eq!(seed.m[1], 0.0);
        assert!(seed.hankel_min_eig() >= -1e-12);
    }

    #[test]
    fn default_seed_is_certified_by_the_oracles() {
        let spec = SeedSpec::new(3, 0.1);
        let seed = find_seed(&spec).unwrap();
        assert!((seed.m[0] - 1.0).abs() <= spec.tol);
        assert!((seed.m[1] + 0.1).abs() <= spec.tol);
        let x3 = Polynomial::var(1, 0).pow(3);
        assert!(seed.hankel_min_eig() >= -1e-7 * scale_of(&seed.hankel()));
        let loc = seed.localized_hankel(&x3).unwrap();
        assert!(min_eig_of(&loc) >= -1e-7 * scale_of(&loc));
        // g = x at size 1 sees L(x) = -delta < 0
        assert_eq!(seed.m[1], -0.1);
    }

    #[test]
    fn warm_start_resumes_where_a_cold_start_cannot() {
        let seed3 = find_seed(&SeedSpec::new(3, 0.1)).unwrap();

        let mut cold = SeedSpec::new(3, 0.1);
        cold.max_iter = 2;
        assert!(matches!(find_seed(&cold), Err(Error::NonConvergence { .. })));

        let mut warm = cold.clone();
        warm.warm_start = Some(seed3.m.clone());
        let again = find_seed(&warm).unwrap();
        assert_eq!(again.m.len(), 7);
        assert!(again.hankel_min_eig() >= -1e-7 * scale_of(&again.hankel()));
    }

    #[test]
    fn lift_even_examples() {
        let m = MomentVector1D::new(vec![1.0, -0.1, 0.3, 0.2, 0.5, 0.4, 0.9]).unwrap();
        let lifted = lift_even(&m);
        assert_eq!(lifted.m.len(), 13);
        assert_eq!(lifted.m[0], 1.0);
        assert_eq!(lifted.m[2], -0.1);
        assert_eq!(lifted.m[4], 0.3);
        assert!(lifted.m.iter().skip(1).step_by(2).all(|&v| v == 0.0));

        let delta0 = MomentVector1D::new(vec![1.0, 0.0, 0.0]).unwrap();
        let lifted = lift_even(&delta0);
        assert_eq!(lifted.m, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn lift_curve_indexing() {
        let m1 = lift_even(&MomentVector1D::new(vec![1.0, -0.1, 0.3, 0.2, 0.5, 0.4, 0.9]).unwrap());
        let l2 = lift_curve(&m1).unwrap();
        assert_eq!(l2.max_degree(), 4);
        let x1 = Polynomial::var(2, 0);
        assert_eq!(l2.apply(&x1).unwrap(), -0.1);
        assert_eq!(l2.apply(&Polynomial::constant(2, 1.0)).unwrap(), 1.0);
        // x1^3 and x2^2 share the curve index 6
        let diff = Polynomial::monomial(2, vec![3, 0], 1.0)
            .sub(&Polynomial::monomial(2, vec![0, 2], 1.0))
            .unwrap();
        assert_eq!(l2.apply(&diff).unwrap(), 0.0);
    }

    #[test]
    fn level_beyond_budget_is_a_degree_error() {
        let seed = find_seed(&SeedSpec::new(3, 0.0)).unwrap();
        assert!(matches!(verify(&seed, 3, 1e-7), Err(Error::Degree(_))));
    }

    #[test]
    fn full_pipeline_certificate() {
        let cert = build(&SeedSpec::new(3, 0.1), 2).unwrap();
        assert!(cert.hankel_min_eig >= -1e-7);
        assert!(cert.localized_hankel_min_eig >= -1e-7);
        assert!(cert.evidence.moment_matrix_min_eig >= -1e-7 * cert.evidence.moment_matrix_scale);
        assert!(cert.evidence.witness <= -0.1 + 1e-7);
        assert!(cert.evidence.annihilation.iter().all(|&v| v == 0.0));
        assert!(cert.evidence.is_counterexample);
        assert!(!cert.degenerate);
    }

    #[test]
    fn genuine_measure_on_the_curve_is_not_flagged() {
        // atoms (t^2, t^3) for t in {-1, 0.5, 1}: a real measure on the
        // cusp curve, so the lift machinery must NOT call it a
        // counterexample.
        let atoms: Vec<Vec<f64>> = [-1.0f64, 0.5, 1.0]
            .iter()
            .map(|&t| vec![t * t, t * t * t])
            .collect();
        let mu = AtomicMeasure::new(atoms, vec![0.4, 0.3, 0.3]).unwrap();
        let l2 = functional_from_measure(&mu, 4).unwrap();
        let evidence = certify_l2(&l2, 2, 1e-7).unwrap();
        assert!(evidence.moment_matrix_min_eig >= -1e-10);
        assert!(evidence.witness > 0.0);
        assert!(!evidence.is_counterexample);
    }

    #[test]
    fn even_lift_kills_odd_polynomials() {
        let seed = find_seed(&SeedSpec::new(3, 0.1)).unwrap();
        let m1 = lift_even(&seed);
        assert!(m1.m.iter().skip(1).step_by(2).all(|&v| v == 0.0));
    }

    #[test]
    fn positivity_transfer_split() {
        // L2(p^2) decomposes into the even and x^3-localized quadratic
        // forms of the seed; verify the split numerically on sample p.
        let seed = find_seed(&SeedSpec::new(3, 0.1)).unwrap();
        let m1 = lift_even(&seed);
        let l2 = lift_curve(&m1).unwrap();
        let x = Polynomial::var(1, 0);
        let subs = [x.pow(2), x.pow(3)];
        let probes = [
            Polynomial::from_terms(
                2,
                [
                    (Monomial::new(vec![0, 0]), 0.7),
                    (Monomial::new(vec![1, 0]), -1.3),
                    (Monomial::new(vec![0, 1]), 0.4),
                ],
            ),
            Polynomial::from_terms(
                2,
                [
                    (Monomial::new(vec![2, 0]), 0.5),
                    (Monomial::new(vec![0, 1]), 1.0),
                    (Monomial::new(vec![0, 0]), -0.2),
                ],
            ),
        ];
        for p in &probes {
            let lhs = l2.apply(&p.mul(p).unwrap()).unwrap();
            // pull back to one variable, split into even/odd parts
            let pulled = p.compose(&subs).unwrap();
            let mut even = vec![0.0; seed.m.len()];
            let mut odd_over_x3 = vec![0.0; seed.m.len()];
            for (mono, c) in pulled.terms() {
                let e = mono.exps()[0] as usize;
                if e % 2 == 0 {
                    even[e / 2] += c;
                } else {
                    odd_over_x3[(e - 3) / 2] += c;
                }
            }
            let quad = |v: &[f64], offset: usize| -> f64 {
                let mut acc = 0.0;
                for (i, &a) in v.iter().enumerate() {
                    for (j, &b) in v.iter().enumerate() {
                        if a != 0.0 && b != 0.0 {
                            acc += a * b * seed.m[i + j + offset];
                        }
                    }
                }
                acc
            };
            let rhs = quad(&even, 0) + quad(&odd_over_x3, 3);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "split mismatch: {lhs} vs {rhs}"
            );
        }
    }
}
