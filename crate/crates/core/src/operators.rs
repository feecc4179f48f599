//! Firmly nonexpansive operators: projections onto simple convex sets, convex
//! combinations, compositions and blockwise (lifted) operators, plus numerical
//! checks of their algebraic properties.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::ellipsoid::{AdmmConfig, Ellipsoid, EllipsoidProjector};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Point;

/// Tolerance on `sum(weights) = 1` for convex combinations.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance on pairwise orthonormality of an affine subspace basis.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// Anything that maps `R^n` to `R^n`.
pub trait Evaluate {
    fn dim(&self) -> usize;
    fn apply(&self, x: &Point) -> Result<Point>;
}

/// Closed halfspace `{x : <normal, x> <= offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Point,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 || !normal.iter().all(|v| v.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidConfig(
                "halfspace normal must be finite and nonzero".into(),
            ));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn project(&self, x: &Point) -> Point {
        let excess = self.normal.dot(x) - self.offset;
        if excess <= 0.0 {
            x.clone()
        } else {
            x - &self.normal * (excess / self.normal.norm_squared())
        }
    }
}

/// Affine subspace `anchor + span(basis)` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    anchor: Point,
    basis: Vec<Point>,
}

impl AffineSubspace {
    pub fn new(anchor: Point, basis: Vec<Point>) -> Result<Self> {
        for (i, u) in basis.iter().enumerate() {
            check_dim(anchor.len(), u.len())?;
            for (j, v) in basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (u.dot(v) - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidConfig(format!(
                        "basis vectors {i} and {j} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Self { anchor, basis })
    }

    /// Orthonormalizes `directions` (Gram-Schmidt, dropping dependent vectors).
    pub fn from_spanning(anchor: Point, directions: &[Point]) -> Result<Self> {
        let mut basis: Vec<Point> = Vec::new();
        for d in directions {
            check_dim(anchor.len(), d.len())?;
            let mut v = d.clone();
            // two passes keep the basis orthonormal to working precision
            for _ in 0..2 {
                for b in &basis {
                    v -= b * b.dot(&v);
                }
            }
            let norm = v.norm();
            if norm > 1e-10 * (1.0 + d.norm()) {
                basis.push(v / norm);
            }
        }
        Self::new(anchor, basis)
    }

    /// The line `{t * direction}` through the origin.
    pub fn line_through_origin(direction: Point) -> Result<Self> {
        Self::from_spanning(Point::zeros(direction.len()), &[direction])
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }

    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn project(&self, x: &Point) -> Point {
        let rel = x - &self.anchor;
        let mut out = self.anchor.clone();
        for b in &self.basis {
            out += b * b.dot(&rel);
        }
        out
    }

    /// Component of `v` orthogonal to the direction space.
    pub fn normal_component(&self, v: &Point) -> Point {
        let mut out = v.clone();
        for b in &self.basis {
            out -= b * b.dot(v);
        }
        out
    }

    pub fn translate(&self, c: &Point) -> Result<Self> {
        check_dim(self.dim(), c.len())?;
        Ok(Self {
            anchor: &self.anchor + c,
            basis: self.basis.clone(),
        })
    }
}

impl Evaluate for AffineSubspace {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn apply(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        Ok(self.project(x))
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("ball radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn project(&self, x: &Point) -> Point {
        let rel = x - &self.center;
        let d = rel.norm();
        if d <= self.radius {
            x.clone()
        } else {
            &self.center + rel * (self.radius / d)
        }
    }
}

/// Which ellipsoid projector an operator evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionMethod {
    Admm,
    Kkt { tol: f64 },
}

#[derive(Debug, Clone)]
pub struct EllipsoidSet {
    projector: Arc<EllipsoidProjector>,
    method: ProjectionMethod,
}

impl EllipsoidSet {
    pub fn new(ellipsoid: Ellipsoid, admm: AdmmConfig, method: ProjectionMethod) -> Result<Self> {
        Ok(Self {
            projector: Arc::new(EllipsoidProjector::new(ellipsoid, admm)?),
            method,
        })
    }

    pub fn ellipsoid(&self) -> &Ellipsoid {
        self.projector.ellipsoid()
    }

    pub fn projector(&self) -> &EllipsoidProjector {
        &self.projector
    }

    pub fn method(&self) -> ProjectionMethod {
        self.method
    }

    pub fn project(&self, x: &Point) -> Result<Point> {
        match self.method {
            ProjectionMethod::Admm => Ok(self.projector.project_admm(x)?.point),
            ProjectionMethod::Kkt { tol } => self.projector.project_kkt(x, tol),
        }
    }
}

/// Closed convex sets with an implemented orthogonal projection.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    Halfspace(Halfspace),
    Affine(AffineSubspace),
    Ball(Ball),
    Ellipsoid(EllipsoidSet),
}

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Halfspace(h) => h.dim(),
            ConvexSet::Affine(a) => a.dim(),
            ConvexSet::Ball(b) => b.center.len(),
            ConvexSet::Ellipsoid(e) => e.ellipsoid().dim(),
        }
    }

    pub fn project(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        match self {
            ConvexSet::Halfspace(h) => Ok(h.project(x)),
            ConvexSet::Affine(a) => Ok(a.project(x)),
            ConvexSet::Ball(b) => Ok(b.project(x)),
            ConvexSet::Ellipsoid(e) => e.project(x),
        }
    }

    /// The translate `self + c`.
    pub fn translate(&self, c: &Point) -> Result<ConvexSet> {
        check_dim(self.dim(), c.len())?;
        Ok(match self {
            ConvexSet::Halfspace(h) => ConvexSet::Halfspace(Halfspace::new(
                h.normal.clone(),
                h.offset + h.normal.dot(c),
            )?),
            ConvexSet::Affine(a) => ConvexSet::Affine(a.translate(c)?),
            ConvexSet::Ball(b) => ConvexSet::Ball(Ball::new(&b.center + c, b.radius)?),
            ConvexSet::Ellipsoid(e) => {
                // g(x - c) = x^T A x + 2 (b - A c)^T x - (alpha - c^T A c + 2 b^T c)
                let el = e.ellipsoid();
                let ac = el.matrix() * c;
                let b = el.linear() - &ac;
                let alpha = el.alpha() - c.dot(&ac) + 2.0 * el.linear().dot(c);
                ConvexSet::Ellipsoid(EllipsoidSet::new(
                    Ellipsoid::new(el.matrix().clone(), b, alpha)?,
                    *e.projector.admm_config(),
                    e.method,
                )?)
            }
        })
    }
}

/// An evaluable operator on `R^n` from a fixed set of kinds.
#[derive(Debug, Clone)]
pub enum Operator {
    Identity {
        dim: usize,
    },
    Projection(ConvexSet),
    /// `sum_i weights[i] * terms[i]`.
    ConvexCombination {
        weights: Vec<f64>,
        terms: Vec<Operator>,
    },
    /// `terms[m-1] o ... o terms[0]`: `terms[0]` is applied first.
    ///
    /// Only nonexpansive plus in general; a composition of projections can
    /// violate firm nonexpansiveness.
    Composition(Vec<Operator>),
    /// Blockwise operator on `R^{n m}`: block `i` goes through `blocks[i]`.
    Lifted {
        blocks: Vec<Operator>,
        parallel: bool,
    },
}

impl Operator {
    pub fn identity(dim: usize) -> Self {
        Operator::Identity { dim }
    }

    pub fn halfspace(h: Halfspace) -> Self {
        Operator::Projection(ConvexSet::Halfspace(h))
    }

    pub fn affine(a: AffineSubspace) -> Self {
        Operator::Projection(ConvexSet::Affine(a))
    }

    pub fn ball(b: Ball) -> Self {
        Operator::Projection(ConvexSet::Ball(b))
    }

    pub fn ellipsoid(e: EllipsoidSet) -> Self {
        Operator::Projection(ConvexSet::Ellipsoid(e))
    }

    pub fn projection(set: ConvexSet) -> Self {
        Operator::Projection(set)
    }

    pub fn convex_combination(weights: Vec<f64>, terms: Vec<Operator>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyOperatorList);
        }
        if weights.len() != terms.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} operators",
                weights.len(),
                terms.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidWeights(format!(
                "negative or non-finite weight {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        let n = terms[0].dim();
        for t in &terms {
            check_dim(n, t.dim())?;
        }
        Ok(Operator::ConvexCombination { weights, terms })
    }

    pub fn composition(terms: Vec<Operator>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyOperatorList)?;
        let n = first.dim();
        for t in &terms {
            check_dim(n, t.dim())?;
        }
        Ok(Operator::Composition(terms))
    }

    pub fn lifted(blocks: Vec<Operator>) -> Result<Self> {
        let first = blocks.first().ok_or(Error::EmptyOperatorList)?;
        let n = first.dim();
        for b in &blocks {
            check_dim(n, b.dim())?;
        }
        Ok(Operator::Lifted {
            blocks,
            parallel: false,
        })
    }

    /// Evaluate lifted blocks on the rayon pool instead of sequentially.
    pub fn with_parallel_blocks(mut self, enable: bool) -> Self {
        if let Operator::Lifted { parallel, .. } = &mut self {
            *parallel = enable;
        }
        self
    }

    /// Whether the operator is known to be firmly nonexpansive by construction.
    pub fn is_firmly_nonexpansive(&self) -> bool {
        match self {
            Operator::Identity { .. } | Operator::Projection(_) => true,
            Operator::ConvexCombination { terms, .. } => {
                terms.iter().all(Self::is_firmly_nonexpansive)
            }
            Operator::Composition(terms) => terms.len() == 1 && terms[0].is_firmly_nonexpansive(),
            Operator::Lifted { blocks, .. } => blocks.iter().all(Self::is_firmly_nonexpansive),
        }
    }
}

impl Evaluate for Operator {
    fn dim(&self) -> usize {
        match self {
            Operator::Identity { dim } => *dim,
            Operator::Projection(s) => s.dim(),
            Operator::ConvexCombination { terms, .. } | Operator::Composition(terms) => {
                terms[0].dim()
            }
            Operator::Lifted { blocks, .. } => blocks[0].dim() * blocks.len(),
        }
    }

    fn apply(&self, x: &Point) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        match self {
            Operator::Identity { .. } => Ok(x.clone()),
            Operator::Projection(s) => s.project(x),
            Operator::ConvexCombination { weights, terms } => {
                let mut out = DVector::zeros(x.len());
                for (w, t) in weights.iter().zip(terms) {
                    out += t.apply(x)? * *w;
                }
                Ok(out)
            }
            Operator::Composition(terms) => {
                let mut y = x.clone();
                for t in terms {
                    y = t.apply(&y)?;
                }
                Ok(y)
            }
            Operator::Lifted { blocks, parallel } => {
                let n = blocks[0].dim();
                let eval = |(i, op): (usize, &Operator)| op.apply(&x.rows(i * n, n).into_owned());
                let images: Vec<Point> = if *parallel {
                    blocks
                        .par_iter()
                        .enumerate()
                        .map(eval)
                        .collect::<Result<_>>()?
                } else {
                    blocks.iter().enumerate().map(eval).collect::<Result<_>>()?
                };
                let mut out = DVector::zeros(x.len());
                for (i, img) in images.iter().enumerate() {
                    out.rows_mut(i * n, n).copy_from(img);
                }
                Ok(out)
            }
        }
    }
}

/// `<T(x) - T(y), x - y> - |T(x) - T(y)|^2`; nonnegative for every pair iff `T`
/// is firmly nonexpansive.
pub fn firm_nonexpansiveness_slack<T: Evaluate + ?Sized>(
    op: &T,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    let d = op.apply(x)? - op.apply(y)?;
    Ok(d.dot(&(x - y)) - d.norm_squared())
}

/// `|x - T(x)|`.
pub fn fixed_point_residual<T: Evaluate + ?Sized>(op: &T, x: &Point) -> Result<f64> {
    Ok((x - op.apply(x)?).norm())
}

fn check_open_weight(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight(alpha))
    }
}

/// Builds `B = A + c`, `P = (1 - alpha) P_A + alpha P_B` and `E = A + alpha c`, and
/// returns `max |P(x) - P_E(x)|` over the samples.
///
/// The deviation vanishes when `c` is orthogonal to the affine hull of `A`.
pub fn translated_projection_deviation(
    a: &ConvexSet,
    c: &Point,
    alpha: f64,
    samples: &[Point],
) -> Result<f64> {
    check_open_weight(alpha)?;
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no samples".into()));
    }
    let b = a.translate(c)?;
    let e = a.translate(&(c * alpha))?;
    let combo = Operator::convex_combination(
        vec![1.0 - alpha, alpha],
        vec![Operator::projection(a.clone()), Operator::projection(b)],
    )?;
    let mut worst = 0.0_f64;
    for x in samples {
        worst = worst.max((combo.apply(x)? - e.project(x)?).norm());
    }
    Ok(worst)
}

/// Points `u` in `A` and `v` in `B` realizing the distance between the sets.
#[derive(Debug, Clone, PartialEq)]
pub struct DistancePair {
    pub u: Point,
    pub v: Point,
    pub gap: f64,
}

impl DistancePair {
    pub fn new(u: Point, v: Point) -> Result<Self> {
        check_dim(u.len(), v.len())?;
        let gap = (&u - &v).norm();
        Ok(Self { u, v, gap })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessCheck {
    /// `|P(w) - w|` for `w = (1 - alpha) u + alpha v`.
    pub residual: f64,
    /// `max(|P_A(w) - u|, |P_B(w) - v|)`.
    pub pair_deviation: f64,
}

/// Checks that `w = (1 - alpha) u + alpha v` is a fixed point of
/// `(1 - alpha) P_A + alpha P_B` for a distance-realizing pair `(u, v)`.
pub fn fixed_set_witness_check(
    a: &ConvexSet,
    b: &ConvexSet,
    pair: &DistancePair,
    alpha: f64,
) -> Result<WitnessCheck> {
    check_open_weight(alpha)?;
    let w = &pair.u * (1.0 - alpha) + &pair.v * alpha;
    let pa = a.project(&w)?;
    let pb = b.project(&w)?;
    let pbar = &pa * (1.0 - alpha) + &pb * alpha;
    Ok(WitnessCheck {
        residual: (pbar - &w).norm(),
        pair_deviation: (pa - &pair.u).norm().max((pb - &pair.v).norm()),
    })
}

/// `max |T(T(x)) - T(x)|` over the samples; a positive value certifies `T` is not a projection.
pub fn idempotence_violation_search<T: Evaluate + ?Sized>(
    op: &T,
    samples: &[Point],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for x in samples {
        let tx = op.apply(x)?;
        let ttx = op.apply(&tx)?;
        worst = worst.max((ttx - tx).norm());
    }
    Ok(worst)
}

/// Relative deviation between the central finite-difference gradient of
/// `x -> |x - P_C(x)|^2` and the closed form `2 (x - P_C(x))`.
pub fn gradient_check(set: &ConvexSet, x: &Point, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference step {h}")));
    }
    let sq_dist = |p: &Point| -> Result<f64> { Ok((p - set.project(p)?).norm_squared()) };
    let analytic = (x - set.project(x)?) * 2.0;
    let mut numeric = DVector::zeros(x.len());
    for i in 0..x.len() {
        let mut fwd = x.clone();
        let mut bwd = x.clone();
        fwd[i] += h;
        bwd[i] -= h;
        numeric[i] = (sq_dist(&fwd)? - sq_dist(&bwd)?) / (2.0 * h);
    }
    Ok((numeric - &analytic).norm() / analytic.norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hs(normal: Point, offset: f64) -> ConvexSet {
        ConvexSet::Halfspace(Halfspace::new(normal, offset).unwrap())
    }

    fn line(direction: Point) -> ConvexSet {
        ConvexSet::Affine(AffineSubspace::line_through_origin(direction).unwrap())
    }

    fn random_point(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Point {
        Point::from_fn(n, |_, _| rng.random_range(-scale..scale))
    }

    #[test]
    fn apply_examples() {
        let p = Operator::projection(hs(dvector![0.0, 1.0], 0.0));
        assert_eq!(p.apply(&dvector![2.0, 2.0]).unwrap(), dvector![2.0, 0.0]);

        let diag = Operator::projection(line(dvector![1.0, 1.0]));
        let r = diag.apply(&dvector![2.0, -1.0]).unwrap();
        assert!((r - dvector![0.5, 0.5]).norm() < 1e-15);

        let combo = Operator::convex_combination(
            vec![0.5, 0.5],
            vec![
                Operator::projection(hs(dvector![1.0, 0.0], 0.0)),
                Operator::projection(hs(dvector![0.0, 1.0], 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(
            combo.apply(&dvector![2.0, 2.0]).unwrap(),
            dvector![1.0, 1.0]
        );
        assert!(matches!(
            combo.apply(&dvector![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn combination_weights_validated() {
        let id = || Operator::identity(2);
        assert!(Operator::convex_combination(vec![0.5, 0.6], vec![id(), id()]).is_err());
        assert!(Operator::convex_combination(vec![1.5, -0.5], vec![id(), id()]).is_err());
        assert!(Operator::convex_combination(vec![1.0], vec![id(), id()]).is_err());
        assert!(matches!(
            Operator::convex_combination(vec![], vec![]),
            Err(Error::EmptyOperatorList)
        ));
        assert!(
            Operator::convex_combination(vec![0.5, 0.5], vec![id(), Operator::identity(3)])
                .is_err()
        );
    }

    #[test]
    fn slack_of_identity_is_zero() {
        let id = Operator::identity(3);
        let s =
            firm_nonexpansiveness_slack(&id, &dvector![1.0, 2.0, 3.0], &dvector![-1.0, 0.5, 2.0])
                .unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn composition_counterexample_both_orders() {
        let pa = Operator::projection(line(dvector![1.0, 0.0]));
        let pb = Operator::projection(line(dvector![1.0, 1.0]));
        let x = dvector![0.0, 0.0];
        let y = dvector![2.0, -1.0];
        let a_then_b = Operator::composition(vec![pa.clone(), pb.clone()]).unwrap();
        let b_then_a = Operator::composition(vec![pb, pa]).unwrap();
        let s1 = firm_nonexpansiveness_slack(&a_then_b, &x, &y).unwrap();
        let s2 = firm_nonexpansiveness_slack(&b_then_a, &x, &y).unwrap();
        assert!((s1 + 1.0).abs() < 1e-12);
        assert!((s2 - 0.75).abs() < 1e-12);
        assert!(!a_then_b.is_firmly_nonexpansive());
    }

    #[test]
    fn projections_are_firmly_nonexpansive_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20;
        let sets = vec![
            hs(random_point(&mut rng, n, 1.0), 0.3),
            ConvexSet::Affine(
                AffineSubspace::from_spanning(
                    random_point(&mut rng, n, 1.0),
                    &[
                        random_point(&mut rng, n, 1.0),
                        random_point(&mut rng, n, 1.0),
                    ],
                )
                .unwrap(),
            ),
            ConvexSet::Ball(Ball::new(random_point(&mut rng, n, 1.0), 1.5).unwrap()),
        ];
        for set in sets {
            let op = Operator::projection(set);
            for _ in 0..1000 {
                let x = random_point(&mut rng, n, 4.0);
                let y = random_point(&mut rng, n, 4.0);
                assert!(firm_nonexpansiveness_slack(&op, &x, &y).unwrap() >= -1e-10);
            }
        }
    }

    #[test]
    fn projection_ray_invariance_and_acute_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 5;
        let sets = vec![
            hs(dvector![1.0, -1.0, 0.5, 0.0, 2.0], 1.0),
            ConvexSet::Ball(Ball::new(Point::zeros(n), 2.0).unwrap()),
            line(dvector![1.0, 2.0, 0.0, -1.0, 0.5]),
        ];
        for set in &sets {
            let op = Operator::projection(set.clone());
            for _ in 0..200 {
                let x = random_point(&mut rng, n, 5.0);
                let z = set.project(&x).unwrap();
                for a in [0.5, 1.0, 2.0, 10.0] {
                    let moved = &z + (&x - &z) * a;
                    assert!((set.project(&moved).unwrap() - &z).norm() <= 1e-10);
                }
                // any member is a fixed point; the acute-angle property against it
                let y = set.project(&random_point(&mut rng, n, 5.0)).unwrap();
                let tx = op.apply(&x).unwrap();
                assert!((&tx - &y).dot(&(&tx - &x)) <= 1e-10);
            }
        }
    }

    #[test]
    fn residual_examples() {
        let ball = Operator::ball(Ball::new(dvector![0.0, 0.0], 1.0).unwrap());
        assert_eq!(
            fixed_point_residual(&ball, &dvector![2.0, 0.0]).unwrap(),
            1.0
        );
        assert_eq!(
            fixed_point_residual(&ball, &dvector![0.5, 0.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn lifted_blockwise() {
        let lifted = Operator::lifted(vec![
            Operator::projection(hs(dvector![1.0, 0.0], 0.0)),
            Operator::projection(hs(dvector![0.0, 1.0], 0.0)),
        ])
        .unwrap();
        assert_eq!(lifted.dim(), 4);
        let out = lifted.apply(&dvector![2.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(out, dvector![0.0, 2.0, 2.0, 0.0]);
        let par = lifted.clone().with_parallel_blocks(true);
        assert_eq!(par.apply(&dvector![2.0, 2.0, 2.0, 2.0]).unwrap(), out);
    }

    #[test]
    fn translated_projection_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<Point> = (0..100).map(|_| random_point(&mut rng, 2, 5.0)).collect();
        let axis = line(dvector![1.0, 0.0]);

        let d = translated_projection_deviation(&axis, &dvector![0.0, 1.0], 0.5, &samples).unwrap();
        assert!(d <= 1e-10);
        let d = translated_projection_deviation(&axis, &dvector![0.0, 0.0], 0.5, &samples).unwrap();
        assert_eq!(d, 0.0);
        // the axis shifted by (1, 1) is the axis shifted by (0, 1): still an orthogonal translate
        let d = translated_projection_deviation(&axis, &dvector![1.0, 1.0], 0.5, &samples).unwrap();
        assert!(d <= 1e-10);
        // a halfspace has a full-dimensional hull, so no nonzero translate is orthogonal
        let half = hs(dvector![0.0, 1.0], 0.0);
        let d = translated_projection_deviation(&half, &dvector![1.0, 1.0], 0.5, &samples).unwrap();
        assert!(d > 1e-3);
        assert!(matches!(
            translated_projection_deviation(&axis, &dvector![0.0, 1.0], 1.0, &samples),
            Err(Error::InvalidWeight(_))
        ));
    }

    #[test]
    fn witness_examples() {
        let a = hs(dvector![0.0, 1.0], 0.0);
        let b = hs(dvector![0.0, -1.0], -1.0);
        let pair = DistancePair::new(dvector![0.0, 0.0], dvector![0.0, 1.0]).unwrap();
        assert_eq!(pair.gap, 1.0);
        let w = fixed_set_witness_check(&a, &b, &pair, 0.3).unwrap();
        assert!(w.residual <= 1e-12);
        assert!(w.pair_deviation <= 1e-12);

        let same = DistancePair::new(dvector![0.0, -1.0], dvector![0.0, -1.0]).unwrap();
        let w = fixed_set_witness_check(&a, &a, &same, 0.7).unwrap();
        assert_eq!(w.residual, 0.0);

        // parallel lines two apart
        let l1 = ConvexSet::Affine(
            AffineSubspace::new(dvector![0.0, -1.0], vec![dvector![1.0, 0.0]]).unwrap(),
        );
        let l2 = ConvexSet::Affine(
            AffineSubspace::new(dvector![0.0, 1.0], vec![dvector![1.0, 0.0]]).unwrap(),
        );
        let pair = DistancePair::new(dvector![3.0, -1.0], dvector![3.0, 1.0]).unwrap();
        let w = fixed_set_witness_check(&l1, &l2, &pair, 0.5).unwrap();
        assert!(w.residual <= 1e-12);
        assert!(fixed_set_witness_check(&l1, &l2, &pair, 0.0).is_err());
    }

    #[test]
    fn idempotence_examples() {
        let p = Operator::projection(hs(dvector![1.0, 0.0], 0.0));
        let samples = vec![dvector![2.0, 2.0], dvector![-1.0, 3.0]];
        assert_eq!(idempotence_violation_search(&p, &samples).unwrap(), 0.0);

        let combo = Operator::convex_combination(
            vec![0.5, 0.5],
            vec![p, Operator::projection(hs(dvector![0.0, 1.0], 0.0))],
        )
        .unwrap();
        let v = idempotence_violation_search(&combo, &[dvector![2.0, 2.0]]).unwrap();
        assert!(v >= 0.5_f64.sqrt() - 1e-15);

        // orthogonal translate: the combination is the projection onto A + alpha c
        let axis = line(dvector![1.0, 0.0]);
        let alpha = 0.25;
        let c = dvector![0.0, 2.0];
        let combo = Operator::convex_combination(
            vec![1.0 - alpha, alpha],
            vec![
                Operator::projection(axis.clone()),
                Operator::projection(axis.translate(&c).unwrap()),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<Point> = (0..50).map(|_| random_point(&mut rng, 2, 5.0)).collect();
        assert!(idempotence_violation_search(&combo, &samples).unwrap() <= 1e-10);
    }

    #[test]
    fn gradient_examples() {
        let ball = ConvexSet::Ball(Ball::new(dvector![0.0, 0.0], 1.0).unwrap());
        assert_eq!(
            gradient_check(&ball, &dvector![0.2, 0.1], 1e-5).unwrap(),
            0.0
        );
        assert!(gradient_check(&ball, &dvector![2.0, 0.0], 1e-5).unwrap() <= 1e-5);
        let half = hs(dvector![0.0, 1.0], 0.0);
        assert!(gradient_check(&half, &dvector![1.0, 3.0], 1e-5).unwrap() <= 1e-5);
        assert!(gradient_check(&half, &dvector![1.0, 3.0], 0.0).is_err());
    }

    #[test]
    fn basis_must_be_orthonormal() {
        assert!(AffineSubspace::new(dvector![0.0, 0.0], vec![dvector![1.0, 1.0]]).is_err());
        let s = AffineSubspace::from_spanning(
            dvector![0.0, 0.0, 0.0],
            &[
                dvector![1.0, 1.0, 0.0],
                dvector![2.0, 2.0, 0.0],
                dvector![0.0, 1.0, 1.0],
            ],
        )
        .unwrap();
        assert_eq!(s.basis().len(), 2);
    }

    #[test]
    fn translated_ellipsoid_membership() {
        let e = EllipsoidSet::new(
            Ellipsoid::unit_ball(2),
            AdmmConfig::default(),
            ProjectionMethod::Kkt { tol: 1e-12 },
        )
        .unwrap();
        let set = ConvexSet::Ellipsoid(e);
        let moved = set.translate(&dvector![0.5, 0.0]).unwrap();
        let p = moved.project(&dvector![3.0, 0.0]).unwrap();
        assert!((p - dvector![1.5, 0.0]).norm() < 1e-10);
    }
}
