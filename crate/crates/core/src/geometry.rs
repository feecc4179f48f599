//! Small-scale Euclidean primitives: the circumcenter of three points and
//! reflection through an operator.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::operators::Evaluate;

/// Dense point of `R^n`.
pub type Point = DVector<f64>;

/// Relative tolerance under which two input points are treated as the same point.
pub const COINCIDENCE_TOL: f64 = 1e-12;
/// Relative tolerance on the Gram determinant below which the triangle is flat.
pub const GRAM_RANK_TOL: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircumcenterKind {
    /// Three affinely independent points.
    Proper,
    /// All three points coincide.
    SinglePoint,
    /// Exactly two distinct points; the center is their midpoint.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircumcenterOutcome {
    pub kind: CircumcenterKind,
    pub center: Point,
}

/// Point in the affine hull of `{p0, p1, p2}` equidistant from the distinct points among them.
///
/// Solves the Gram system `G (a, b)^T = 1/2 (|v1|^2, |v2|^2)^T` with `v1 = p1 - p0`,
/// `v2 = p2 - p0` and returns `p0 + a v1 + b v2`.
pub fn circumcenter3(p0: &Point, p1: &Point, p2: &Point) -> Result<CircumcenterOutcome> {
    check_dim(p0.len(), p1.len())?;
    check_dim(p0.len(), p2.len())?;

    let scale = 1.0 + p0.norm().max(p1.norm()).max(p2.norm());
    let eps = COINCIDENCE_TOL * scale;
    let same01 = (p1 - p0).norm() <= eps;
    let same02 = (p2 - p0).norm() <= eps;
    let same12 = (p2 - p1).norm() <= eps;

    let midpoint = |a: &Point, b: &Point| CircumcenterOutcome {
        kind: CircumcenterKind::Midpoint,
        center: (a + b) * 0.5,
    };
    match (same01, same02, same12) {
        (true, true, _) | (true, _, true) | (_, true, true) => {
            return Ok(CircumcenterOutcome {
                kind: CircumcenterKind::SinglePoint,
                center: p0.clone(),
            })
        }
        (true, false, false) => return Ok(midpoint(p0, p2)),
        (false, true, false) => return Ok(midpoint(p0, p1)),
        (false, false, true) => return Ok(midpoint(p0, p1)),
        (false, false, false) => {}
    }

    let v1 = p1 - p0;
    let v2 = p2 - p0;
    let g11 = v1.dot(&v1);
    let g22 = v2.dot(&v2);
    let g12 = v1.dot(&v2);
    let det = g11 * g22 - g12 * g12;
    // Three pairwise-distinct points on a line: no point of the line is equidistant.
    if det <= GRAM_RANK_TOL * g11 * g22 {
        return Err(Error::CollinearNoCircumcenter);
    }
    let r1 = 0.5 * g11;
    let r2 = 0.5 * g22;
    let a = (r1 * g22 - r2 * g12) / det;
    let b = (r2 * g11 - r1 * g12) / det;
    Ok(CircumcenterOutcome {
        kind: CircumcenterKind::Proper,
        center: p0 + v1 * a + v2 * b,
    })
}

/// Reflection `2 T(x) - x` through an operator.
pub fn reflect<T: Evaluate + ?Sized>(op: &T, x: &Point) -> Result<Point> {
    check_dim(op.dim(), x.len())?;
    let tx = op.apply(x)?;
    Ok(tx * 2.0 - x)
}
