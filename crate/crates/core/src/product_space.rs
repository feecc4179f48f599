//! Product-space reformulation: `m` operators on `R^n` become one blockwise
//! operator on `R^{n m}` plus the diagonal subspace `{(x, ..., x)}`, so that
//! two-operator methods apply to the `m`-operator problem.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::geometry::Point;
use crate::operators::{Evaluate, Operator};

/// Element of `R^{n m}` stored as `m` contiguous blocks of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    data: DVector<f64>,
    n: usize,
    m: usize,
}

impl LiftedPoint {
    pub fn from_blocks(blocks: &[Point]) -> Result<Self> {
        let first = blocks.first().ok_or(Error::EmptyOperatorList)?;
        let n = first.len();
        let mut data = DVector::zeros(n * blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            check_dim(n, b.len())?;
            data.rows_mut(i * n, n).copy_from(b);
        }
        Ok(Self {
            data,
            n,
            m: blocks.len(),
        })
    }

    pub fn from_flat(data: DVector<f64>, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!("lifted shape {n}x{m}")));
        }
        check_dim(n * m, data.len())?;
        Ok(Self { data, n, m })
    }

    pub fn block_dim(&self) -> usize {
        self.n
    }

    pub fn block_count(&self) -> usize {
        self.m
    }

    pub fn block(&self, i: usize) -> Point {
        self.data.rows(i * self.n, self.n).into_owned()
    }

    pub fn blocks(&self) -> Vec<Point> {
        (0..self.m).map(|i| self.block(i)).collect()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    /// Arithmetic mean of the blocks.
    pub fn mean(&self) -> Point {
        let mut acc = Point::zeros(self.n);
        for i in 0..self.m {
            acc += self.data.rows(i * self.n, self.n);
        }
        acc / self.m as f64
    }

    /// Largest distance from a block to the block mean.
    pub fn diagonal_deviation(&self) -> f64 {
        let mean = self.mean();
        (0..self.m)
            .map(|i| (self.data.rows(i * self.n, self.n) - &mean).norm())
            .fold(0.0, f64::max)
    }
}

/// The diagonal subspace of `R^{n m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagonalSubspace {
    pub n: usize,
    pub m: usize,
}

impl DiagonalSubspace {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!(
                "diagonal subspace shape {n}x{m}"
            )));
        }
        Ok(Self { n, m })
    }

    /// Replaces every block with the block mean.
    pub fn project_flat(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.n * self.m, x.len())?;
        let mut mean = Point::zeros(self.n);
        for i in 0..self.m {
            mean += x.rows(i * self.n, self.n);
        }
        mean /= self.m as f64;
        let mut out = DVector::zeros(x.len());
        for i in 0..self.m {
            out.rows_mut(i * self.n, self.n).copy_from(&mean);
        }
        Ok(out)
    }
}

impl Evaluate for DiagonalSubspace {
    fn dim(&self) -> usize {
        self.n * self.m
    }

    fn apply(&self, x: &Point) -> Result<Point> {
        self.project_flat(x)
    }
}

/// Applies `ops[i]` to block `i`.
pub fn lift_apply(ops: &[Operator], x: &LiftedPoint) -> Result<LiftedPoint> {
    if ops.len() != x.m {
        return Err(Error::BlockCountMismatch {
            expected: x.m,
            found: ops.len(),
        });
    }
    let mut data = DVector::zeros(x.data.len());
    for (i, op) in ops.iter().enumerate() {
        check_dim(x.n, op.dim())?;
        let img = op.apply(&x.block(i))?;
        data.rows_mut(i * x.n, x.n).copy_from(&img);
    }
    Ok(LiftedPoint {
        data,
        n: x.n,
        m: x.m,
    })
}

/// Orthogonal projection onto the diagonal.
pub fn diag_project(x: &LiftedPoint) -> LiftedPoint {
    embed(&x.mean(), x.m).expect("block count is positive")
}

/// `(x, ..., x)` with `m` copies.
pub fn embed(x: &Point, m: usize) -> Result<LiftedPoint> {
    if m == 0 || x.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "cannot embed a {}-vector {m} times",
            x.len()
        )));
    }
    let n = x.len();
    let mut data = DVector::zeros(n * m);
    for i in 0..m {
        data.rows_mut(i * n, n).copy_from(x);
    }
    Ok(LiftedPoint { data, n, m })
}

/// The common block of a diagonal point (its block mean), provided every block is within `tol` of it.
pub fn extract(x: &LiftedPoint, tol: f64) -> Result<Point> {
    let deviation = x.diagonal_deviation();
    if deviation > tol {
        return Err(Error::NotDiagonal { deviation, tol });
    }
    Ok(x.mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{ConvexSet, Halfspace};
    use nalgebra::dvector;

    fn hs(normal: Point) -> Operator {
        Operator::projection(ConvexSet::Halfspace(Halfspace::new(normal, 0.0).unwrap()))
    }

    #[test]
    fn lift_apply_examples() {
        let x = LiftedPoint::from_blocks(&[dvector![2.0, 2.0], dvector![2.0, 2.0]]).unwrap();
        let ops = vec![hs(dvector![1.0, 0.0]), hs(dvector![0.0, 1.0])];
        let out = lift_apply(&ops, &x).unwrap();
        assert_eq!(out.blocks(), vec![dvector![0.0, 2.0], dvector![2.0, 0.0]]);

        let ids = vec![Operator::identity(2), Operator::identity(2)];
        assert_eq!(lift_apply(&ids, &x).unwrap(), x);

        let single = embed(&dvector![2.0, -1.0], 1).unwrap();
        let out = lift_apply(&ops[..1], &single).unwrap();
        assert_eq!(out.block(0), ops[0].apply(&dvector![2.0, -1.0]).unwrap());

        assert!(matches!(
            lift_apply(&ops[..1], &x),
            Err(Error::BlockCountMismatch {
                expected: 2,
                found: 1
            })
        ));
        let wrong = vec![Operator::identity(3), Operator::identity(3)];
        assert!(matches!(
            lift_apply(&wrong, &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn diag_project_examples() {
        let x = LiftedPoint::from_blocks(&[dvector![0.0, 2.0], dvector![2.0, 0.0]]).unwrap();
        let p = diag_project(&x);
        assert_eq!(p.blocks(), vec![dvector![1.0, 1.0], dvector![1.0, 1.0]]);
        assert_eq!(diag_project(&p), p);
        let single = embed(&dvector![3.0, 4.0], 1).unwrap();
        assert_eq!(diag_project(&single), single);

        let u = DiagonalSubspace::new(2, 2).unwrap();
        assert_eq!(u.apply(x.as_vector()).unwrap(), *p.as_vector());
    }

    #[test]
    fn embed_extract() {
        let x = dvector![1.5, -2.0, 0.25];
        for m in 1..5 {
            assert_eq!(extract(&embed(&x, m).unwrap(), 0.0).unwrap(), x);
        }
        let d = LiftedPoint::from_blocks(&[dvector![1.0, 1.0], dvector![1.0, 1.0]]).unwrap();
        assert_eq!(extract(&d, 1e-9).unwrap(), dvector![1.0, 1.0]);
        let off = LiftedPoint::from_blocks(&[dvector![0.0, 2.0], dvector![2.0, 0.0]]).unwrap();
        assert!(matches!(
            extract(&off, 1e-9),
            Err(Error::NotDiagonal { .. })
        ));
        assert!(embed(&x, 0).is_err());
    }
}
