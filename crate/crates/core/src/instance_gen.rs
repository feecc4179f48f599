//! Seeded random problem instances: every operator is a convex combination of
//! projections onto random ellipsoids that all contain the origin, so the
//! origin is a certified common fixed point.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ellipsoid::{AdmmConfig, Ellipsoid};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::operators::{ConvexSet, EllipsoidSet, Operator, ProjectionMethod};

/// Number of times `eta` may be doubled while looking for an exterior start.
pub const MAX_ETA_DOUBLINGS: usize = 10;

/// Parameters of one random instance. `p` counts operators; `density` is the
/// fraction of nonzero entries of each sparse factor `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub gamma: f64,
    pub density: f64,
    pub r_range: Vec<usize>,
    pub eta: f64,
}

impl InstanceSpec {
    /// Defaults: `gamma = 1`, `density = min(1, 2/n)`, `r` in `{3, 4, 5}`, `eta = -5`.
    pub fn new(n: usize, p: usize, seed: u64) -> Self {
        Self {
            n,
            p,
            seed,
            gamma: 1.0,
            density: if n == 0 {
                1.0
            } else {
                (2.0 / n as f64).min(1.0)
            },
            r_range: vec![3, 4, 5],
            eta: -5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidConfig(what));
        if self.n == 0 || self.p == 0 {
            return bad(format!("n = {}, p = {} must be positive", self.n, self.p));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density {} outside (0, 1]", self.density));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma {} must be positive", self.gamma));
        }
        if !(self.eta < 0.0 && self.eta.is_finite()) {
            return bad(format!("eta {} must be negative", self.eta));
        }
        if self.r_range.is_empty() || self.r_range.contains(&0) {
            return bad(format!(
                "r range {:?} must be nonempty and positive",
                self.r_range
            ));
        }
        Ok(())
    }
}

/// Mixes `(master, n, p, replicate)` into an instance seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, n: usize, p: usize, replicate: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    [n as u64, p as u64, replicate as u64]
        .iter()
        .fold(mix(master), |acc, v| mix(acc ^ mix(*v)))
}

/// `A = gamma I + B^T B` with sparse standard-normal `B`, `b ~ U[0, 1]^n`,
/// `alpha = b^T A b + 1`.
pub fn gen_ellipsoid<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    gamma: f64,
    density: f64,
) -> Result<Ellipsoid> {
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < density {
                let v: f64 = rng.sample(StandardNormal);
                triplets.push((i, j, v));
            }
        }
    }
    let mut bmat = DMatrix::zeros(n, n);
    for (i, j, v) in triplets {
        bmat[(i, j)] = v;
    }
    let btb = bmat.tr_mul(&bmat);
    let a = DMatrix::from_fn(n, n, |i, j| {
        let sym = 0.5 * (btb[(i, j)] + btb[(j, i)]);
        if i == j {
            gamma + sym
        } else {
            sym
        }
    });
    let b = DVector::from_fn(n, |_, _| rng.random::<f64>());
    let alpha = (&a * &b).dot(&b) + 1.0;
    Ellipsoid::new(a, b, alpha)
}

/// Raw data of one operator `sum_i weights[i] P_{E_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    pub weights: Vec<f64>,
    pub ellipsoids: Vec<EllipsoidRecord>,
}

/// Ellipsoid as stored in instance files: `A` dense row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRecord {
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: f64,
}

impl From<&Ellipsoid> for EllipsoidRecord {
    fn from(e: &Ellipsoid) -> Self {
        let a = e.matrix();
        let n = e.dim();
        Self {
            a: (0..n)
                .flat_map(|i| (0..n).map(move |j| a[(i, j)]))
                .collect(),
            b: e.linear().iter().copied().collect(),
            alpha: e.alpha(),
        }
    }
}

impl EllipsoidRecord {
    pub fn to_ellipsoid(&self) -> Result<Ellipsoid> {
        let n = self.b.len();
        if self.a.len() != n * n {
            return Err(Error::Parse(format!(
                "matrix has {} entries for n = {n}",
                self.a.len()
            )));
        }
        Ellipsoid::new(
            DMatrix::from_row_slice(n, n, &self.a),
            DVector::from_column_slice(&self.b),
            self.alpha,
        )
    }
}

/// Draws `r`, the weights and `r` ellipsoids for one operator.
pub fn gen_operator_record<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    spec: &InstanceSpec,
) -> Result<OperatorRecord> {
    let r = spec.r_range[rng.random_range(0..spec.r_range.len())];
    let lambdas: Vec<f64> = (0..r)
        .map(|_| loop {
            let v: f64 = rng.random();
            if v > 0.0 {
                break v;
            }
        })
        .collect();
    let total: f64 = lambdas.iter().sum();
    let weights = lambdas.iter().map(|l| l / total).collect();
    let ellipsoids = (0..r)
        .map(|_| gen_ellipsoid(n, rng, spec.gamma, spec.density).map(|e| EllipsoidRecord::from(&e)))
        .collect::<Result<_>>()?;
    Ok(OperatorRecord {
        weights,
        ellipsoids,
    })
}

/// Builds the evaluable operator for a record.
pub fn build_operator(
    record: &OperatorRecord,
    admm: AdmmConfig,
    method: ProjectionMethod,
) -> Result<Operator> {
    let terms = record
        .ellipsoids
        .iter()
        .map(|e| {
            Ok(Operator::projection(ConvexSet::Ellipsoid(
                EllipsoidSet::new(e.to_ellipsoid()?, admm, method)?,
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    Operator::convex_combination(record.weights.clone(), terms)
}

/// One random operator, evaluated through ADMM projections.
pub fn gen_operator<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    spec: &InstanceSpec,
) -> Result<Operator> {
    build_operator(
        &gen_operator_record(n, rng, spec)?,
        AdmmConfig::default(),
        ProjectionMethod::Admm,
    )
}

/// Serialized form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub spec: InstanceSpec,
    pub operators: Vec<OperatorRecord>,
}

impl InstanceRecord {
    pub fn generate(spec: &InstanceSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let operators = (0..spec.p)
            .map(|_| gen_operator_record(spec.n, &mut rng, spec))
            .collect::<Result<_>>()?;
        Ok(Self {
            spec: spec.clone(),
            operators,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let record: Self = serde_json::from_str(s)?;
        record.spec.validate()?;
        if record.operators.len() != record.spec.p {
            return Err(Error::Parse(format!(
                "{} operators for p = {}",
                record.operators.len(),
                record.spec.p
            )));
        }
        Ok(record)
    }

    pub fn ellipsoids(&self) -> Result<Vec<Ellipsoid>> {
        self.operators
            .iter()
            .flat_map(|o| o.ellipsoids.iter().map(EllipsoidRecord::to_ellipsoid))
            .collect()
    }
}

/// A generated instance with its operators ready to evaluate.
#[derive(Debug, Clone)]
pub struct FppInstance {
    pub record: InstanceRecord,
    pub operators: Vec<Operator>,
}

impl FppInstance {
    pub fn from_record(
        record: InstanceRecord,
        admm: AdmmConfig,
        method: ProjectionMethod,
    ) -> Result<Self> {
        let operators = record
            .operators
            .iter()
            .map(|o| build_operator(o, admm, method))
            .collect::<Result<_>>()?;
        Ok(Self { record, operators })
    }

    pub fn spec(&self) -> &InstanceSpec {
        &self.record.spec
    }

    /// The origin, which lies strictly inside every generated ellipsoid.
    pub fn certified_fixed_point(&self) -> Point {
        Point::zeros(self.record.spec.n)
    }
}

/// Generates `spec.p` operators from one seeded stream, projecting with ADMM.
pub fn gen_instance(spec: &InstanceSpec) -> Result<FppInstance> {
    gen_instance_with(spec, AdmmConfig::default(), ProjectionMethod::Admm)
}

pub fn gen_instance_with(
    spec: &InstanceSpec,
    admm: AdmmConfig,
    method: ProjectionMethod,
) -> Result<FppInstance> {
    FppInstance::from_record(InstanceRecord::generate(spec)?, admm, method)
}

/// `(eta, ..., eta)` outside every ellipsoid of the instance, doubling `eta` as needed.
pub fn initial_point(record: &InstanceRecord) -> Result<Point> {
    let ellipsoids = record.ellipsoids()?;
    let n = record.spec.n;
    let mut eta = record.spec.eta;
    for _ in 0..=MAX_ETA_DOUBLINGS {
        let x = Point::from_element(n, eta);
        let mut exterior = true;
        for e in &ellipsoids {
            if e.evaluate_g(&x)? <= 0.0 {
                exterior = false;
                break;
            }
        }
        if exterior {
            return Ok(x);
        }
        eta *= 2.0;
    }
    Err(Error::CannotExitSets {
        doublings: MAX_ETA_DOUBLINGS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{fixed_point_residual, Evaluate};

    #[test]
    fn ellipsoid_contains_origin_and_is_well_conditioned() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 10, 30] {
            let e = gen_ellipsoid(n, &mut rng, 1.0, (2.0 / n as f64).min(1.0)).unwrap();
            let g0 = e.evaluate_g(&Point::zeros(n)).unwrap();
            assert_eq!(g0, -e.alpha());
            assert!(g0 < 0.0);
            assert!(e.min_eigenvalue() >= 1.0 - 1e-10);
            let a = e.matrix();
            assert_eq!(a, &a.transpose());
        }
    }

    #[test]
    fn ellipsoid_is_deterministic() {
        let e1 = gen_ellipsoid(8, &mut ChaCha8Rng::seed_from_u64(99), 1.0, 0.25).unwrap();
        let e2 = gen_ellipsoid(8, &mut ChaCha8Rng::seed_from_u64(99), 1.0, 0.25).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn operator_weights_and_fixed_origin() {
        let spec = InstanceSpec::new(6, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let rec = gen_operator_record(6, &mut rng, &spec).unwrap();
            assert!((3..=5).contains(&rec.weights.len()));
            assert_eq!(rec.weights.len(), rec.ellipsoids.len());
            assert!((rec.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(rec.weights.iter().all(|w| *w > 0.0));
        }
        let op = gen_operator(6, &mut rng, &spec).unwrap();
        assert_eq!(op.dim(), 6);
        assert_eq!(fixed_point_residual(&op, &Point::zeros(6)).unwrap(), 0.0);
    }

    #[test]
    fn instance_round_trip_and_determinism() {
        let spec = InstanceSpec::new(3, 2, 42);
        let a = InstanceRecord::generate(&spec).unwrap();
        let b = InstanceRecord::generate(&spec).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let back = InstanceRecord::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
        let other = InstanceRecord::generate(&InstanceSpec::new(3, 2, 43)).unwrap();
        assert_ne!(other, a);
    }

    #[test]
    fn single_operator_instance() {
        let inst = gen_instance(&InstanceSpec::new(4, 1, 1)).unwrap();
        assert_eq!(inst.operators.len(), 1);
        assert_eq!(
            inst.operators[0]
                .apply(&inst.certified_fixed_point())
                .unwrap(),
            Point::zeros(4)
        );
    }

    #[test]
    fn initial_point_is_exterior() {
        let rec = InstanceRecord::generate(&InstanceSpec::new(2, 3, 8)).unwrap();
        let x = initial_point(&rec).unwrap();
        assert!(x.iter().all(|v| *v == x[0] && *v <= -5.0));
        for e in rec.ellipsoids().unwrap() {
            assert!(e.evaluate_g(&x).unwrap() > 0.0);
        }
    }

    #[test]
    fn initial_point_doubles_eta() {
        // a ball of radius 8 holds (-5, -5) but not (-10, -10)
        let mut rec = InstanceRecord::generate(&InstanceSpec::new(2, 1, 8)).unwrap();
        let ball = Ellipsoid::new(DMatrix::identity(2, 2), DVector::zeros(2), 64.0).unwrap();
        rec.operators[0].ellipsoids[0] = EllipsoidRecord::from(&ball);
        let x = initial_point(&rec).unwrap();
        assert_eq!(x, Point::from_element(2, -10.0));

        let huge = Ellipsoid::new(DMatrix::identity(2, 2), DVector::zeros(2), 1e12).unwrap();
        rec.operators[0].ellipsoids[0] = EllipsoidRecord::from(&huge);
        assert!(matches!(
            initial_point(&rec),
            Err(Error::CannotExitSets { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        let mut s = InstanceSpec::new(5, 2, 0);
        assert!(s.validate().is_ok());
        s.density = 0.0;
        assert!(s.validate().is_err());
        let mut s = InstanceSpec::new(5, 2, 0);
        s.eta = 1.0;
        assert!(s.validate().is_err());
        assert!(InstanceSpec::new(0, 2, 0).validate().is_err());
        assert_eq!(InstanceSpec::new(1, 1, 0).density, 1.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 10, 10, 0);
        assert_eq!(a, derive_seed(1, 10, 10, 0));
        assert_ne!(a, derive_seed(1, 10, 10, 1));
        assert_ne!(a, derive_seed(1, 10, 25, 0));
        assert_ne!(a, derive_seed(2, 10, 10, 0));
    }
}
