//! Atomic disintegration along bounded polynomials: pushforward measures,
//! normalized fiber functionals, the disintegration identity, and the full
//! base-plus-fibers positivity pipeline.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moment::{
    check_preorder_positivity, functional_from_measure, MomentFunctional, PositivityReport,
};
use crate::polyring::Polynomial;
use crate::semialg::{fiber_problem, FiberClass, Fixture};
use crate::univariate::{line_restriction, AtomicMeasure, RANK_TOL};

/// Componentwise tolerance when grouping atoms by their h-values. Atoms
/// placed exactly on a fiber group exactly.
pub const GROUPING_TOL: f64 = 1e-12;

/// One fiber of a decomposition: its lambda, pushforward mass, normalized
/// functional, and the atoms realizing it.
#[derive(Clone, Debug)]
pub struct Fiber {
    pub lambda: Vec<f64>,
    pub mass: f64,
    pub functional: MomentFunctional,
    pub atom_indices: Vec<usize>,
}

/// Disintegration of an atomic measure along `h = (h_1, ..., h_n)`:
/// pushforward support with masses and one normalized functional per
/// support point, ordered lexicographically by lambda.
#[derive(Clone, Debug)]
pub struct FiberDecomposition {
    pub h: Vec<Polynomial>,
    pub fibers: Vec<Fiber>,
}

fn group_atoms(mu: &AtomicMeasure, h: &[Polynomial]) -> Result<Vec<(Vec<f64>, Vec<usize>)>> {
    for hj in h {
        if hj.dim() != mu.dim() {
            return Err(Error::Argument(
                "bounded polynomial dimension does not match the measure".into(),
            ));
        }
    }
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (idx, point) in mu.points.iter().enumerate() {
        let lambda: Vec<f64> = h
            .iter()
            .map(|hj| hj.eval(point))
            .collect::<Result<_>>()?;
        match groups.iter_mut().find(|(l, _)| {
            l.iter()
                .zip(&lambda)
                .all(|(a, b)| (a - b).abs() <= GROUPING_TOL)
        }) {
            Some((_, members)) => members.push(idx),
            None => groups.push((lambda, Vec::from([idx]))),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(groups)
}

/// Distinct h-value tuples with their summed masses, lexicographically
/// ordered. This is the atomic analogue of the pushforward measure on the
/// joint spectrum.
pub fn pushforward(mu: &AtomicMeasure, h: &[Polynomial]) -> Result<Vec<(Vec<f64>, f64)>> {
    Ok(group_atoms(mu, h)?
        .into_iter()
        .map(|(lambda, members)| {
            let mass = members.iter().map(|&i| mu.weights[i]).sum();
            (lambda, mass)
        })
        .collect())
}

/// Full decomposition with per-fiber normalized functionals of degree
/// `max_degree`.
pub fn fiber_functionals(
    mu: &AtomicMeasure,
    h: &[Polynomial],
    max_degree: u32,
) -> Result<FiberDecomposition> {
    let fibers = group_atoms(mu, h)?
        .into_iter()
        .map(|(lambda, members)| {
            let mass: f64 = members.iter().map(|&i| mu.weights[i]).sum();
            let sub = AtomicMeasure::new(
                members.iter().map(|&i| mu.points[i].clone()).collect(),
                members.iter().map(|&i| mu.weights[i] / mass).collect(),
            )?;
            let functional = functional_from_measure(&sub, max_degree)?;
            Ok(Fiber {
                lambda,
                mass,
                functional,
                atom_indices: members,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiberDecomposition {
        h: h.to_vec(),
        fibers,
    })
}

/// `|L(q(h) p) - sum_lambda nu_lambda q(lambda) L_lambda(p)|` for the
/// functional of `mu` truncated at `max_degree`. Exactly placed atoms give
/// zero up to round-off.
pub fn disintegration_residual(
    mu: &AtomicMeasure,
    h: &[Polynomial],
    q: &Polynomial,
    p: &Polynomial,
    max_degree: u32,
) -> Result<f64> {
    if q.dim() != h.len() {
        return Err(Error::Argument(format!(
            "q has {} variables, expected one per bounded polynomial ({})",
            q.dim(),
            h.len()
        )));
    }
    let q_of_h = q.compose(h)?;
    let integrand = q_of_h.mul(p)?;
    let functional = functional_from_measure(mu, max_degree)?;
    let lhs = functional.apply(&integrand)?;

    let decomp = fiber_functionals(mu, h, max_degree)?;
    let mut rhs = 0.0;
    for fiber in &decomp.fibers {
        rhs += fiber.mass * q.eval(&fiber.lambda)? * fiber.functional.apply(p)?;
    }
    Ok((lhs - rhs).abs())
}

/// Outcome of the univariate solve on a line-classified fiber.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureSolve {
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
    /// Largest relative mismatch between input moments and the moments of
    /// the reconstructed measure.
    pub moment_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberReport {
    pub lambda: Vec<f64>,
    pub mass: f64,
    pub class: FiberClass,
    pub report: PositivityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSolve>,
    pub pass: bool,
}

/// Report of the full pipeline: base positivity plus one entry per fiber.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub base: PositivityReport,
    pub fibers: Vec<FiberReport>,
    pub pass: bool,
}

fn even_budget(n: u32, extra: u32) -> u32 {
    let d = 2 * n + extra;
    d + d % 2
}

fn max_product_degree(gens: &[Polynomial]) -> u32 {
    gens.iter().map(|g| g.degree()).sum()
}

/// Verify the computable content of the fiber-reduction theorem on an
/// atomic measure: every atom must lie in the fixture's set, the base
/// functional must be positive on the truncated preorder, and so must
/// every normalized fiber functional on its augmented fiber problem.
/// Line-classified fibers are additionally solved by restriction to the
/// fiber axis and Gauss quadrature.
pub fn theorem1_pipeline(
    fixture: &Fixture,
    mu: &AtomicMeasure,
    n: u32,
    tol: f64,
) -> Result<PipelineReport> {
    for (i, point) in mu.points.iter().enumerate() {
        if !fixture.set.membership(point)? {
            return Err(Error::Membership(format!(
                "atom {i} at {point:?} lies outside the set"
            )));
        }
    }

    let base_budget = even_budget(n, max_product_degree(&fixture.set.generators));
    let base_functional = functional_from_measure(mu, base_budget)?;
    let base = check_preorder_positivity(&base_functional, &fixture.set, n, tol)?;
    let mut pass = base.pass;

    let h = &fixture.bounded.polys;
    let fiber_extra = max_product_degree(&fixture.set.generators)
        + 2 * h.iter().map(|p| p.degree()).sum::<u32>();
    let fiber_budget = even_budget(n, fiber_extra);
    let decomp = fiber_functionals(mu, h, fiber_budget)?;

    let mut fibers = Vec::with_capacity(decomp.fibers.len());
    for fiber in &decomp.fibers {
        let problem = fiber_problem(&fixture.set, &fixture.bounded, &fiber.lambda)?;
        let report = check_preorder_positivity(&fiber.functional, &problem.set, n, tol)?;
        let mut fiber_pass = report.pass;

        let quadrature = match (fixture.fiber_class, fixture.line_axis) {
            (FiberClass::Line, Some(axis)) => {
                let base_point = &mu.points[fiber.atom_indices[0]];
                let mut direction = vec![0.0; fixture.set.dim];
                direction[axis] = 1.0;
                let moments = line_restriction(&fiber.functional, base_point, &direction)?;
                let solved = moments.quadrature_atoms(RANK_TOL)?;
                let back = solved.moments_1d(moments.max_degree())?;
                let moment_error = moments
                    .m
                    .iter()
                    .zip(&back.m)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
                    .fold(0.0f64, f64::max);
                let ok = moment_error <= 1e-8;
                fiber_pass &= ok;
                Some(QuadratureSolve {
                    atoms: solved.points.iter().map(|p| p[0]).collect(),
                    weights: solved.weights.clone(),
                    moment_error,
                    pass: ok,
                })
            }
            _ => None,
        };

        pass &= fiber_pass;
        fibers.push(FiberReport {
            lambda: fiber.lambda.clone(),
            mass: fiber.mass,
            class: fixture.fiber_class,
            report,
            quadrature,
            pass: fiber_pass,
        });
    }

    Ok(PipelineReport { base, fibers, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg;

    fn two_atom_example() -> (AtomicMeasure, Vec<Polynomial>) {
        let mu = AtomicMeasure::new(
            vec![vec![0.0, 0.0], vec![1.0, 2.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let h = vec![Polynomial::var(2, 0)];
        (mu, h)
    }

    #[test]
    fn pushforward_examples() {
        let (mu, h) = two_atom_example();
        let support = pushforward(&mu, &h).unwrap();
        assert_eq!(support.len(), 2);
        assert_eq!(support[0], (vec![0.0], 1.0));
        assert_eq!(support[1], (vec![1.0], 1.0));

        let c = vec![Polynomial::constant(2, 3.0)];
        let support = pushforward(&mu, &c).unwrap();
        assert_eq!(support.len(), 1);
        assert_eq!(support[0], (vec![3.0], 2.0));
    }

    #[test]
    fn mass_conservation() {
        let fx = semialg::example2();
        let pts = fx.sample(40, 8).unwrap();
        let weights: Vec<f64> = (0..pts.points.len())
            .map(|i| 0.1 + 0.05 * i as f64)
            .collect();
        let mu = AtomicMeasure::new(pts.points, weights).unwrap();
        let support = pushforward(&mu, &fx.bounded.polys).unwrap();
        let nu: f64 = support.iter().map(|(_, m)| m).sum();
        let total = mu.total_mass();
        assert!((nu - total).abs() <= 1e-12 * total);
    }

    #[test]
    fn fiber_functionals_are_normalized_evaluations() {
        let (mu, h) = two_atom_example();
        let decomp = fiber_functionals(&mu, &h, 4).unwrap();
        assert_eq!(decomp.fibers.len(), 2);
        let one = Polynomial::constant(2, 1.0);
        let x2 = Polynomial::var(2, 1);
        // fiber at lambda = 0: evaluation at (0,0)
        assert_eq!(decomp.fibers[0].functional.apply(&one).unwrap(), 1.0);
        assert_eq!(decomp.fibers[0].functional.apply(&x2).unwrap(), 0.0);
        // fiber at lambda = 1: evaluation at (1,2)
        assert_eq!(decomp.fibers[1].functional.apply(&x2).unwrap(), 2.0);
    }

    #[test]
    fn shared_fiber_averages() {
        let mu = AtomicMeasure::new(
            vec![vec![1.0, 2.0], vec![1.0, -2.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let h = vec![Polynomial::var(2, 0)];
        let decomp = fiber_functionals(&mu, &h, 4).unwrap();
        assert_eq!(decomp.fibers.len(), 1);
        let f = &decomp.fibers[0];
        assert_eq!(f.mass, 1.0);
        let x2 = Polynomial::var(2, 1);
        assert_eq!(f.functional.apply(&x2).unwrap(), 0.0);
        let x2sq = x2.mul(&x2).unwrap();
        assert_eq!(f.functional.apply(&x2sq).unwrap(), 4.0);
    }

    #[test]
    fn fiber_constancy_relation() {
        // L_lambda((h_j - lambda_j) p) = 0 on every fiber
        let fx = semialg::example3();
        let pts = fx.sample(25, 17).unwrap();
        let n = pts.points.len();
        let mu = AtomicMeasure::new(pts.points, vec![1.0 / n as f64; n]).unwrap();
        let decomp = fiber_functionals(&mu, &fx.bounded.polys, 8).unwrap();
        let probes = [
            Polynomial::constant(2, 1.0),
            Polynomial::var(2, 0),
            Polynomial::var(2, 1),
            Polynomial::monomial(2, vec![1, 1], 1.0),
        ];
        for fiber in &decomp.fibers {
            for (hj, &lj) in fx.bounded.polys.iter().zip(&fiber.lambda) {
                let shifted = hj.sub(&Polynomial::constant(2, lj)).unwrap();
                for p in &probes {
                    let v = fiber
                        .functional
                        .apply(&shifted.mul(p).unwrap())
                        .unwrap();
                    assert!(v.abs() <= 1e-12, "constancy violated: {v}");
                }
                // squared form is nonnegative and tiny
                let sq = shifted.mul(&shifted).unwrap();
                let v = fiber.functional.apply(&sq).unwrap();
                assert!(v.abs() <= 1e-12, "squared residual {v}");
            }
        }
    }

    #[test]
    fn disintegration_hand_oracle() {
        let (mu, h) = two_atom_example();
        // q = t, p = x2: L(x1 x2) = 0*0 + 1*2 = 2; both sides computed
        // independently here.
        let q = Polynomial::var(1, 0);
        let p = Polynomial::var(2, 1);
        let functional = functional_from_measure(&mu, 4).unwrap();
        let integrand = q.compose(&h).unwrap().mul(&p).unwrap();
        let lhs = functional.apply(&integrand).unwrap();
        assert_eq!(lhs, 2.0);
        let decomp = fiber_functionals(&mu, &h, 4).unwrap();
        let rhs: f64 = decomp
            .fibers
            .iter()
            .map(|f| {
                f.mass * q.eval(&f.lambda).unwrap() * f.functional.apply(&p).unwrap()
            })
            .sum();
        assert_eq!(rhs, 2.0);
        assert!(disintegration_residual(&mu, &h, &q, &p, 4).unwrap() <= 1e-15);
    }

    #[test]
    fn total_mass_reconstruction() {
        // q = 1 reduces the identity to sum nu_lambda L_lambda(p) = L(p)
        let fx = semialg::example1(1.0, 2.0, 0.0);
        let pts = fx.sample(30, 23).unwrap();
        let weights: Vec<f64> = (0..pts.points.len()).map(|i| 0.3 + 0.01 * i as f64).collect();
        let mu = AtomicMeasure::new(pts.points, weights).unwrap();
        let q = Polynomial::constant(1, 1.0);
        let p = Polynomial::monomial(2, vec![1, 1], 0.7);
        let functional = functional_from_measure(&mu, 6).unwrap();
        let scale = functional.apply(&p).unwrap().abs().max(1.0);
        let residual = disintegration_residual(&mu, &fx.bounded.polys, &q, &p, 6).unwrap();
        assert!(residual <= 1e-12 * scale, "residual {residual}");
    }

    #[test]
    fn pipeline_rejects_outside_atoms() {
        let fx = semialg::example3();
        let mu = AtomicMeasure::new(vec![vec![2.0, 1.0]], vec![1.0]).unwrap();
        assert!(matches!(
            theorem1_pipeline(&fx, &mu, 2, 1e-8),
            Err(Error::Membership(_))
        ));
    }

    #[test]
    fn pipeline_on_example3_point_fibers() {
        let fx = semialg::example3();
        let pts = fx.sample(12, 31).unwrap();
        let n = pts.points.len();
        let mu = AtomicMeasure::new(pts.points, vec![1.0 / n as f64; n]).unwrap();
        let report = theorem1_pipeline(&fx, &mu, 2, 1e-8).unwrap();
        assert!(report.pass);
        assert!(report.base.pass);
        assert!(report
            .fibers
            .iter()
            .all(|f| f.class == FiberClass::Point && f.pass));
    }

    #[test]
    fn pipeline_on_cylinder_line_fibers() {
        let fx = semialg::cylinder_disk();
        // a few distinct base points, two heights per base point
        let mut points = Vec::new();
        for i in 0..4 {
            let angle = 0.4 + i as f64;
            let (x, y) = (0.6 * angle.cos(), 0.6 * angle.sin());
            points.push(vec![x, y, -1.0 + 0.3 * i as f64]);
            points.push(vec![x, y, 0.8 + 0.2 * i as f64]);
        }
        let n = points.len();
        let mu = AtomicMeasure::new(points, vec![1.0 / n as f64; n]).unwrap();
        let report = theorem1_pipeline(&fx, &mu, 2, 1e-8).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.fibers.len(), 4);
        for f in &report.fibers {
            assert_eq!(f.class, FiberClass::Line);
            let q = f.quadrature.as_ref().expect("line fibers get a solve");
            assert!(q.pass);
            assert_eq!(q.atoms.len(), 2);
        }
    }
}
