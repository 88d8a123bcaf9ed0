//! Semi-algebraic set descriptions, preorder generator enumeration,
//! membership testing, seeded rejection sampling, and the fixture catalog.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyring::Polynomial;

/// Generator values down to this are still counted as inside the set;
/// strict inequality testing is meaningless in floating point.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Tolerance for `lambda` lying inside the range box of a bounded-poly spec.
pub const LAMBDA_TOL: f64 = 1e-9;

const PREORDER_CAP: usize = 16;
const MAX_REJECTION_DRAWS: usize = 1_000_000;

/// `K_f = { x : f_1(x) >= 0, ..., f_k(x) >= 0 }`. An empty generator
/// list describes all of `R^d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemiAlgebraicSet {
    pub dim: usize,
    pub generators: Vec<Polynomial>,
}

impl SemiAlgebraicSet {
    pub fn new(dim: usize, generators: Vec<Polynomial>) -> Result<Self> {
        if generators.iter().any(|g| g.dim() != dim) {
            return Err(Error::Argument(
                "generator dimension does not match the set dimension".into(),
            ));
        }
        Ok(SemiAlgebraicSet { dim, generators })
    }

    /// All `2^k` products `f_1^e1 ... f_k^ek`, `e in {0,1}^k`, ordered by
    /// `e` read as a binary counter (bit j of the index selects `f_{j+1}`).
    /// The first entry is the constant 1.
    pub fn preorder_generators(&self) -> Result<Vec<Polynomial>> {
        let k = self.generators.len();
        if k > PREORDER_CAP {
            return Err(Error::Capacity(format!(
                "{k} generators would produce 2^{k} preorder products (cap is 2^{PREORDER_CAP})"
            )));
        }
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0u32..(1u32 << k) {
            let mut prod = Polynomial::constant(self.dim, 1.0);
            for (j, g) in self.generators.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    prod = prod.mul(g)?;
                }
            }
            out.push(prod);
        }
        Ok(out)
    }

    /// True iff every generator evaluates to at least `-MEMBERSHIP_TOL` at `x`.
    pub fn membership(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(Error::Argument(format!(
                "membership: point dimension {} vs set dimension {}",
                x.len(),
                self.dim
            )));
        }
        for g in &self.generators {
            if g.eval(x)? < -MEMBERSHIP_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Points produced by rejection sampling. `exhausted` is set when the draw
/// budget ran out before `count` members were found.
#[derive(Clone, Debug)]
pub struct SampleResult {
    pub points: Vec<Vec<f64>>,
    pub exhausted: bool,
}

/// Up to `count` points of `K` found by seeded uniform rejection sampling
/// inside `box_`. Deterministic for a fixed seed.
pub fn sample(
    set: &SemiAlgebraicSet,
    box_: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<SampleResult> {
    if box_.len() != set.dim {
        return Err(Error::Argument(format!(
            "sample: box dimension {} vs set dimension {}",
            box_.len(),
            set.dim
        )));
    }
    if box_.iter().any(|&(lo, hi)| lo > hi) {
        return Err(Error::Argument("sample: empty box interval".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut draws = 0usize;
    while points.len() < count && draws < MAX_REJECTION_DRAWS {
        draws += 1;
        let x: Vec<f64> = box_
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..hi) })
            .collect();
        if set.membership(&x)? {
            points.push(x);
        }
    }
    let exhausted = points.len() < count;
    Ok(SampleResult { points, exhausted })
}

/// `[min, max]` of `h` over sampled points of `K` -- an inner estimate of
/// the true range of `h` on `K`.
pub fn range_estimate(
    set: &SemiAlgebraicSet,
    h: &Polynomial,
    box_: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let samples = sample(set, box_, count, seed)?;
    if samples.points.is_empty() {
        return Err(Error::Estimation(
            "no points of the set found in the sampling box".into(),
        ));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in &samples.points {
        let v = h.eval(x)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Polynomials `h_1, ..., h_n` bounded on a set, together with the range
/// box `Lambda = [m_1, M_1] x ... x [m_n, M_n]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundedPolySpec {
    pub polys: Vec<Polynomial>,
    pub ranges: Vec<(f64, f64)>,
}

impl BoundedPolySpec {
    pub fn new(polys: Vec<Polynomial>, ranges: Vec<(f64, f64)>) -> Result<Self> {
        if polys.len() != ranges.len() {
            return Err(Error::Argument(
                "bounded-poly spec: polys and ranges differ in length".into(),
            ));
        }
        if ranges.iter().any(|&(m, big_m)| m > big_m) {
            return Err(Error::Argument("bounded-poly spec: range with m > M".into()));
        }
        Ok(BoundedPolySpec { polys, ranges })
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        lambda.len() == self.ranges.len()
            && lambda
                .iter()
                .zip(&self.ranges)
                .all(|(&l, &(m, big_m))| l >= m - LAMBDA_TOL && l <= big_m + LAMBDA_TOL)
    }
}

/// A fiber problem: the base generators augmented with the pairs
/// `(h_j - lambda_j, -(h_j - lambda_j))`, in that exact order.
#[derive(Clone, Debug)]
pub struct FiberProblem {
    pub set: SemiAlgebraicSet,
    pub lambda: Vec<f64>,
}

/// Build the augmented generator list for the level set `h = lambda`.
pub fn fiber_problem(
    base: &SemiAlgebraicSet,
    spec: &BoundedPolySpec,
    lambda: &[f64],
) -> Result<FiberProblem> {
    if lambda.len() != spec.polys.len() {
        return Err(Error::Argument(format!(
            "fiber_problem: lambda has {} components, spec has {} polynomials",
            lambda.len(),
            spec.polys.len()
        )));
    }
    if !spec.contains(lambda) {
        return Err(Error::Domain(format!(
            "lambda {lambda:?} lies outside the range box"
        )));
    }
    let mut generators = base.generators.clone();
    for (h, &l) in spec.polys.iter().zip(lambda) {
        let shifted = h.sub(&Polynomial::constant(base.dim, l))?;
        generators.push(shifted.clone());
        generators.push(shifted.scale(-1.0));
    }
    Ok(FiberProblem {
        set: SemiAlgebraicSet::new(base.dim, generators)?,
        lambda: lambda.to_vec(),
    })
}

/// Expected geometry of the generic fiber of a catalog fixture. Hand-encoded
/// per fixture; there is no general classification algorithm here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberClass {
    Point,
    Line,
    Compact,
    SubsetOfLine,
    Other,
}

/// Parametric samplers for the curve fixtures; rejection sampling on a
/// thickened band would be hopeless at curve tolerances.
#[derive(Clone, Copy, Debug)]
pub enum CurveParam {
    /// x1^3 + x2^3 = 1, parameter t = x1.
    FermatCubic { t_lo: f64, t_hi: f64 },
    /// x2^2 (1 - x1) = x1^3, parameter s = x1 in [0, 1), sign random.
    Cissoid { s_lo: f64, s_hi: f64 },
}

impl CurveParam {
    fn point(&self, t: f64, sign: f64) -> Vec<f64> {
        match *self {
            CurveParam::FermatCubic { .. } => vec![t, (1.0 - t * t * t).cbrt()],
            CurveParam::Cissoid { .. } => vec![t, sign * t * (t / (1.0 - t)).sqrt()],
        }
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            CurveParam::FermatCubic { t_lo, t_hi } => (t_lo, t_hi),
            CurveParam::Cissoid { s_lo, s_hi } => (s_lo, s_hi),
        }
    }
}

/// A named example: set, bounded polynomials, sampling box, and fiber
/// classification metadata.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub set: SemiAlgebraicSet,
    pub bounded: BoundedPolySpec,
    pub sampling_box: Vec<(f64, f64)>,
    pub fiber_class: FiberClass,
    /// For line-classified fibers: the coordinate axis along which the
    /// fiber line runs.
    pub line_axis: Option<usize>,
    pub parametric: Option<CurveParam>,
}

impl Fixture {
    /// Sample atoms on the fixture: parametric for curve fixtures,
    /// rejection sampling otherwise.
    pub fn sample(&self, count: usize, seed: u64) -> Result<SampleResult> {
        match self.parametric {
            None => sample(&self.set, &self.sampling_box, count, seed),
            Some(param) => {
                let (lo, hi) = param.range();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let points = (0..count)
                    .map(|_| {
                        let t = rng.gen_range(lo..hi);
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        param.point(t, sign)
                    })
                    .collect();
                Ok(SampleResult {
                    points,
                    exhausted: false,
                })
            }
        }
    }
}

pub const CATALOG_NAMES: &[&str] = &[
    "example1", "example2", "example3", "example4a", "example4b", "halfline", "cylinder",
];

/// Look up a fixture by name. `example1` takes its default parameters
/// (m, M, c) = (1, 2, 0); use [`example1`] directly for other values.
pub fn catalog(name: &str) -> Result<Fixture> {
    match name {
        "example1" => Ok(example1(1.0, 2.0, 0.0)),
        "example2" => Ok(example2()),
        "example3" => Ok(example3()),
        "example4a" => Ok(example4a()),
        "example4b" => Ok(example4b()),
        "halfline" => Ok(halfline()),
        "cylinder" => Ok(cylinder_disk()),
        other => Err(Error::Lookup(format!(
            "unknown fixture `{other}`; known: {CATALOG_NAMES:?}"
        ))),
    }
}

/// The strip-like set `m <= (x1 - c) x2 <= M` with bounded `h = (x1 - c) x2`.
pub fn example1(m: f64, big_m: f64, c: f64) -> Fixture {
    let h = shifted_product(c);
    let f1 = h.sub(&Polynomial::constant(2, m)).unwrap();
    let f2 = Polynomial::constant(2, big_m).sub(&h).unwrap();
    Fixture {
        name: "example1".into(),
        set: SemiAlgebraicSet::new(2, vec![f1, f2]).unwrap(),
        bounded: BoundedPolySpec::new(vec![h], vec![(m, big_m)]).unwrap(),
        sampling_box: vec![(c + big_m / 3.0, c + 3.0), (m / 3.0, 3.0)],
        fiber_class: FiberClass::Other,
        line_axis: None,
        parametric: None,
    }
}

fn shifted_product(c: f64) -> Polynomial {
    // (x1 - c) * x2
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    x1.sub(&Polynomial::constant(2, c))
        .unwrap()
        .mul(&x2)
        .unwrap()
}

/// `f = (x1 x2, 1 - x1 x2, x1, 1 - x1)` with `h = (x1 x2, x1)`.
pub fn example2() -> Fixture {
    let x1 = Polynomial::var(2, 0);
    let h1 = shifted_product(0.0);
    let f = vec![
        h1.clone(),
        Polynomial::constant(2, 1.0).sub(&h1).unwrap(),
        x1.clone(),
        Polynomial::constant(2, 1.0).sub(&x1).unwrap(),
    ];
    Fixture {
        name: "example2".into(),
        set: SemiAlgebraicSet::new(2, f).unwrap(),
        bounded: BoundedPolySpec::new(vec![h1, x1], vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(),
        sampling_box: vec![(0.05, 1.0), (0.0, 5.0)],
        fiber_class: FiberClass::Point,
        line_axis: None,
        parametric: None,
    }
}

/// `f = (x1 x2 - 1, 2 - x1 x2, x1, 1 - x1)` with `h = (x1 x2, x1)`;
/// every fiber with both coordinates fixed is a single point.
pub fn example3() -> Fixture {
    let x1 = Polynomial::var(2, 0);
    let h1 = shifted_product(0.0);
    let f = vec![
        h1.sub(&Polynomial::constant(2, 1.0)).unwrap(),
        Polynomial::constant(2, 2.0).sub(&h1).unwrap(),
        x1.clone(),
        Polynomial::constant(2, 1.0).sub(&x1).unwrap(),
    ];
    Fixture {
        name: "example3".into(),
        set: SemiAlgebraicSet::new(2, f).unwrap(),
        bounded: BoundedPolySpec::new(vec![h1, x1], vec![(1.0, 2.0), (0.0, 1.0)]).unwrap(),
        sampling_box: vec![(0.1, 1.0), (1.0, 20.0)],
        fiber_class: FiberClass::Point,
        line_axis: None,
        parametric: None,
    }
}

/// The curve `x1^3 + x2^3 = 1` with bounded `h = x1 + x2`; every level set
/// of `h` on the curve is finite, hence compact.
pub fn example4a() -> Fixture {
    let eq = Polynomial::monomial(2, vec![3, 0], 1.0)
        .add(&Polynomial::monomial(2, vec![0, 3], 1.0))
        .unwrap()
        .sub(&Polynomial::constant(2, 1.0))
        .unwrap();
    let h = Polynomial::var(2, 0).add(&Polynomial::var(2, 1)).unwrap();
    Fixture {
        name: "example4a".into(),
        set: SemiAlgebraicSet::new(2, vec![eq.clone(), eq.scale(-1.0)]).unwrap(),
        // h = 1 / (x1^2 - x1 x2 + x2^2) on the curve, so 0 < h <= 2^(2/3).
        bounded: BoundedPolySpec::new(vec![h], vec![(0.0, 1.5875)]).unwrap(),
        sampling_box: vec![(-3.0, 3.0), (-3.0, 3.0)],
        fiber_class: FiberClass::Compact,
        line_axis: None,
        parametric: Some(CurveParam::FermatCubic {
            t_lo: -3.0,
            t_hi: 3.0,
        }),
    }
}

/// The curve `x2^2 (1 - x1) = x1^3` with bounded `h = x1`.
pub fn example4b() -> Fixture {
    let x1 = Polynomial::var(2, 0);
    let eq = Polynomial::monomial(2, vec![0, 2], 1.0)
        .mul(&Polynomial::constant(2, 1.0).sub(&x1).unwrap())
        .unwrap()
        .sub(&Polynomial::monomial(2, vec![3, 0], 1.0))
        .unwrap();
    Fixture {
        name: "example4b".into(),
        set: SemiAlgebraicSet::new(2, vec![eq.clone(), eq.scale(-1.0)]).unwrap(),
        bounded: BoundedPolySpec::new(vec![x1], vec![(0.0, 1.0)]).unwrap(),
        sampling_box: vec![(0.0, 1.0), (-5.0, 5.0)],
        fiber_class: FiberClass::Compact,
        line_axis: None,
        parametric: Some(CurveParam::Cissoid {
            s_lo: 0.0,
            s_hi: 0.9,
        }),
    }
}

/// `d = 1`, `f = (x^3)`, so the set is `[0, +inf)`. No bounded polynomials.
pub fn halfline() -> Fixture {
    let x = Polynomial::var(1, 0);
    Fixture {
        name: "halfline".into(),
        set: SemiAlgebraicSet::new(1, vec![x.pow(3)]).unwrap(),
        bounded: BoundedPolySpec::new(vec![], vec![]).unwrap(),
        sampling_box: vec![(0.0, 3.0)],
        fiber_class: FiberClass::Other,
        line_axis: None,
        parametric: None,
    }
}

/// Cylinder over the unit disk: `1 - x1^2 - x2^2 >= 0` in `R^3` with
/// `h = (x1, x2)`. Fibers are vertical lines.
pub fn cylinder_disk() -> Fixture {
    let g = Polynomial::constant(3, 1.0)
        .sub(&Polynomial::monomial(3, vec![2, 0, 0], 1.0))
        .unwrap()
        .sub(&Polynomial::monomial(3, vec![0, 2, 0], 1.0))
        .unwrap();
    Fixture {
        name: "cylinder".into(),
        set: SemiAlgebraicSet::new(3, vec![g]).unwrap(),
        bounded: BoundedPolySpec::new(
            vec![Polynomial::var(3, 0), Polynomial::var(3, 1)],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap(),
        sampling_box: vec![(-1.0, 1.0), (-1.0, 1.0), (-5.0, 5.0)],
        fiber_class: FiberClass::Line,
        line_axis: Some(2),
        parametric: None,
    }
}
