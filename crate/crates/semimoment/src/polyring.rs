//! Sparse multivariate polynomials over `f64` with a fixed graded-lex
//! monomial order.
//!
//! The monomial order is total: degree first, then x1 before x2 before ...
//! within a degree block. Every matrix index in the crate is derived from
//! this order, so it must never change.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a single monomial. Length is the ambient dimension.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    /// The constant monomial 1 in dimension `dim`.
    pub fn one(dim: usize) -> Self {
        Monomial { exps: vec![0; dim] }
    }

    /// The monomial x_i (0-based index).
    pub fn var(dim: usize, i: usize) -> Self {
        let mut exps = vec![0; dim];
        exps[i] = 1;
        Monomial { exps }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    /// Product of two monomials (componentwise exponent sum).
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dim(), other.dim());
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        // Graded lexicographic: lower degree first; within a degree,
        // x1^a... precedes x2^b... (larger leading exponent sorts earlier).
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials of degree <= `n` in `d` variables, in graded-lex order.
/// The result has C(n+d, d) elements.
pub fn mono_basis(d: usize, n: u32) -> Result<Vec<Monomial>> {
    if d < 1 {
        return Err(Error::Argument("mono_basis: dimension must be >= 1".into()));
    }
    let mut out = Vec::new();
    let mut exps = vec![0u32; d];
    collect_monomials(d, n, 0, n, &mut exps, &mut out);
    out.sort();
    Ok(out)
}

fn collect_monomials(
    d: usize,
    n: u32,
    pos: usize,
    remaining: u32,
    exps: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if pos == d {
        out.push(Monomial::new(exps.clone()));
        return;
    }
    for e in 0..=remaining {
        exps[pos] = e;
        collect_monomials(d, n, pos + 1, remaining - e, exps, out);
    }
    exps[pos] = 0;
    let _ = n;
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exps: Vec<i64>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    dim: usize,
    terms: Vec<TermRepr>,
}

/// Sparse polynomial with real coefficients. Zero coefficients are never
/// stored; the zero polynomial has an empty term map.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl TryFrom<PolyRepr> for Polynomial {
    type Error = Error;

    fn try_from(repr: PolyRepr) -> Result<Polynomial> {
        let mut p = Polynomial::zero(repr.dim);
        for t in repr.terms {
            if t.exps.len() != repr.dim {
                return Err(Error::Format(format!(
                    "term has {} exponents, expected {}",
                    t.exps.len(),
                    repr.dim
                )));
            }
            let mut exps = Vec::with_capacity(t.exps.len());
            for e in t.exps {
                if e < 0 {
                    return Err(Error::Format(format!("negative exponent {e}")));
                }
                exps.push(e as u32);
            }
            p.add_term(Monomial::new(exps), t.coef);
        }
        Ok(p)
    }
}

impl From<Polynomial> for PolyRepr {
    fn from(p: Polynomial) -> PolyRepr {
        PolyRepr {
            dim: p.dim,
            terms: p
                .terms
                .iter()
                .map(|(m, &c)| TermRepr {
                    exps: m.exps.iter().map(|&e| e as i64).collect(),
                    coef: c,
                })
                .collect(),
        }
    }
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(Monomial::one(dim), c);
        p
    }

    /// The variable x_i (0-based).
    pub fn var(dim: usize, i: usize) -> Self {
        assert!(i < dim, "variable index out of range");
        let mut p = Self::zero(dim);
        p.add_term(Monomial::var(dim, i), 1.0);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        let mut p = Self::zero(dim);
        for (m, c) in terms {
            assert_eq!(m.dim(), dim, "monomial dimension mismatch");
            p.add_term(m, c);
        }
        p
    }

    /// Monomial `c * x^exps` as a polynomial.
    pub fn monomial(dim: usize, exps: Vec<u32>, c: f64) -> Self {
        assert_eq!(exps.len(), dim);
        let mut p = Self::zero(dim);
        p.add_term(Monomial::new(exps), c);
        p
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                let v = e.get_mut();
                *v += c;
                if *v == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn max_abs_coef(&self) -> f64 {
        self.terms.values().fold(0.0, |a, &c| a.max(c.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Argument(format!(
                "eval: point has dimension {}, polynomial has {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self.terms.iter().map(|(m, c)| c * m.eval(x)).sum())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.dim);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (m, c) in self.terms() {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.dim, 1.0);
        for _ in 0..e {
            out = out.mul(self).expect("pow: dimensions match");
        }
        out
    }

    /// Substitute `subs[i]` for variable i and expand fully.
    pub fn compose(&self, subs: &[Polynomial]) -> Result<Polynomial> {
        if subs.len() != self.dim {
            return Err(Error::Argument(format!(
                "compose: {} substitutions for {} variables",
                subs.len(),
                self.dim
            )));
        }
        let out_dim = match subs.first() {
            Some(s) => s.dim(),
            None => return Err(Error::Argument("compose: empty substitution".into())),
        };
        if subs.iter().any(|s| s.dim() != out_dim) {
            return Err(Error::Argument(
                "compose: substitutions have mixed dimensions".into(),
            ));
        }
        // Cache powers of each substituted polynomial.
        let mut pows: Vec<Vec<Polynomial>> = subs
            .iter()
            .map(|_| vec![Polynomial::constant(out_dim, 1.0)])
            .collect();
        let mut out = Polynomial::zero(out_dim);
        for (m, c) in self.terms() {
            let mut term = Polynomial::constant(out_dim, c);
            for (i, &e) in m.exps().iter().enumerate() {
                while pows[i].len() <= e as usize {
                    let next = pows[i].last().unwrap().mul(&subs[i])?;
                    pows[i].push(next);
                }
                term = term.mul(&pows[i][e as usize])?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Argument(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binom(n: u64, k: u64) -> u64 {
        let mut r = 1u64;
        for i in 0..k {
            r = r * (n - i) / (i + 1);
        }
        r
    }

    #[test]
    fn mono_basis_small_cases() {
        let b = mono_basis(1, 2).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b[0].exps(), &[0]);
        assert_eq!(b[1].exps(), &[1]);
        assert_eq!(b[2].exps(), &[2]);

        let b = mono_basis(2, 1).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b[0].exps(), &[0, 0]);
        assert_eq!(b[1].exps(), &[1, 0]);
        assert_eq!(b[2].exps(), &[0, 1]);

        assert_eq!(mono_basis(2, 2).unwrap().len(), 6);
    }

    #[test]
    fn mono_basis_sizes_match_binomial() {
        for d in 1..=4u64 {
            for n in 0..=8u64 {
                let b = mono_basis(d as usize, n as u32).unwrap();
                assert_eq!(b.len() as u64, binom(n + d, d), "d={d} n={n}");
            }
        }
    }

    #[test]
    fn mono_basis_prefix_property() {
        for d in 1..=3usize {
            for n in 0..=5u32 {
                let full = mono_basis(d, n).unwrap();
                for m in 0..=n {
                    let sub = mono_basis(d, m).unwrap();
                    assert_eq!(&full[..sub.len()], &sub[..]);
                }
            }
        }
    }

    #[test]
    fn eval_examples() {
        // x1^2 x2 at (2,3) = 12
        let p = Polynomial::monomial(2, vec![2, 1], 1.0);
        assert_eq!(p.eval(&[2.0, 3.0]).unwrap(), 12.0);

        let one = Polynomial::constant(2, 1.0);
        assert_eq!(one.eval(&[5.0, -7.0]).unwrap(), 1.0);

        // x1^3 - x2^2 vanishes at (t^2, t^3), t = 2
        let p = cusp_poly();
        assert_eq!(p.eval(&[4.0, 8.0]).unwrap(), 0.0);

        assert!(p.eval(&[1.0]).is_err());
    }

    fn cusp_poly() -> Polynomial {
        Polynomial::from_terms(
            2,
            [
                (Monomial::new(vec![3, 0]), 1.0),
                (Monomial::new(vec![0, 2]), -1.0),
            ],
        )
    }

    #[test]
    fn compose_collapses_on_the_cusp_curve() {
        let p = cusp_poly();
        let x = Polynomial::var(1, 0);
        let subs = [x.pow(2), x.pow(3)];
        let q = p.compose(&subs).unwrap();
        assert!(q.is_zero());

        // x1 composed with (x^2, x^3) is x^2
        let q = Polynomial::var(2, 0).compose(&subs).unwrap();
        assert_eq!(q, Polynomial::monomial(1, vec![2], 1.0));
    }

    #[test]
    fn compose_identity_is_exact() {
        let p = Polynomial::from_terms(
            2,
            [
                (Monomial::new(vec![2, 1]), 3.5),
                (Monomial::new(vec![0, 0]), -1.0),
                (Monomial::new(vec![1, 3]), 0.25),
            ],
        );
        let id = [Polynomial::var(2, 0), Polynomial::var(2, 1)];
        assert_eq!(p.compose(&id).unwrap(), p);
    }

    #[test]
    fn ring_operations() {
        let x = Polynomial::var(1, 0);
        let p = x.add(&Polynomial::constant(1, -1.0)).unwrap(); // x - 1
        let q = x.add(&Polynomial::constant(1, 1.0)).unwrap(); // x + 1
        let prod = p.mul(&q).unwrap();
        let expected = Polynomial::from_terms(
            1,
            [
                (Monomial::new(vec![2]), 1.0),
                (Monomial::new(vec![0]), -1.0),
            ],
        );
        assert_eq!(prod, expected);

        let r = Polynomial::from_terms(2, [(Monomial::new(vec![2, 1]), 2.0)]);
        assert!(r.add(&r.scale(-1.0)).unwrap().is_zero());

        let x1 = Polynomial::var(2, 0);
        let x2 = Polynomial::var(2, 1);
        assert_eq!(
            x1.mul(&x2).unwrap(),
            Polynomial::monomial(2, vec![1, 1], 1.0)
        );
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = Polynomial::from_terms(
            2,
            [
                (Monomial::new(vec![1, 2]), -0.5),
                (Monomial::new(vec![0, 0]), 2.0),
            ],
        );
        let s = serde_json::to_string(&p).unwrap();
        let q: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);

        let bad = r#"{"dim": 2, "terms": [{"exps": [-1, 0], "coef": 1.0}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
        let bad = r#"{"dim": 2, "terms": [{"exps": [1], "coef": 1.0}]}"#;
        assert!(serde_json::from_str::<Polynomial>(bad).is_err());
    }

    fn arb_poly(dim: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
        let term = (
            prop::collection::vec(0..=max_deg, dim),
            -3.0..3.0f64,
        )
            .prop_filter("degree cap", move |(e, _)| {
                e.iter().sum::<u32>() <= max_deg
            });
        prop::collection::vec(term, 0..6).prop_map(move |ts| {
            Polynomial::from_terms(
                dim,
                ts.into_iter().map(|(e, c)| (Monomial::new(e), c)),
            )
        })
    }

    proptest! {
        #[test]
        fn eval_is_a_ring_homomorphism(
            p in arb_poly(2, 4),
            q in arb_poly(2, 4),
            x in prop::collection::vec(-2.0..2.0f64, 2),
        ) {
            let lhs = p.mul(&q).unwrap().eval(&x).unwrap();
            let rhs = p.eval(&x).unwrap() * q.eval(&x).unwrap();
            let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn compose_with_identity_is_identity(p in arb_poly(2, 4)) {
            let id = [Polynomial::var(2, 0), Polynomial::var(2, 1)];
            prop_assert_eq!(p.compose(&id).unwrap(), p);
        }
    }
}
