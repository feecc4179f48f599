//! Ellipsoids `{x : x^T A x + 2 b^T x - alpha <= 0}` and two independent projectors:
//! a multiplier root-finder on the KKT conditions (the reference) and an ADMM
//! iteration (the one the benchmark runs).

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::Point;

/// Maximum tolerated `|A_ij - A_ji|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    a: DMatrix<f64>,
    b: DVector<f64>,
    alpha: f64,
}

impl Ellipsoid {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, alpha: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidConfig(format!(
                "ellipsoid matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        check_dim(a.nrows(), b.len())?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ellipsoid alpha {alpha} must be positive"
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite ellipsoid data".into()));
        }
        let asym = (&a - a.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidConfig(format!(
                "ellipsoid matrix asymmetric by {asym:e}"
            )));
        }
        Ok(Self { a, b, alpha })
    }

    /// Unit ball of `R^n` (A = I, b = 0, alpha = 1).
    pub fn unit_ball(n: usize) -> Self {
        Self {
            a: DMatrix::identity(n, n),
            b: DVector::zeros(n),
            alpha: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `g(x) = x^T A x + 2 b^T x - alpha`; `x` is a member iff `g(x) <= 0`.
    pub fn evaluate_g(&self, x: &Point) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.g_unchecked(x))
    }

    fn g_unchecked(&self, x: &Point) -> f64 {
        (&self.a * x).dot(x) + 2.0 * self.b.dot(x) - self.alpha
    }

    pub fn contains(&self, x: &Point) -> Result<bool> {
        Ok(self.evaluate_g(x)? <= 0.0)
    }

    /// Smallest eigenvalue of `A`.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.a.clone()).eigenvalues.min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub penalty: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
            penalty: 1.0,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 || !(self.penalty > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "invalid ADMM configuration {self:?}"
            )));
        }
        Ok(())
    }
}

/// Result of one ADMM projection.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmProjection {
    pub point: Point,
    pub iterations: usize,
    /// `false` when the iteration cap was hit; `point` is then the last iterate.
    pub converged: bool,
}

/// Eigen-decomposition of `A` used by the KKT projector.
#[derive(Debug, Clone)]
struct KktFactors {
    q: DMatrix<f64>,
    d: DVector<f64>,
}

impl KktFactors {
    fn new(e: &Ellipsoid) -> Self {
        let eig = SymmetricEigen::new(e.a.clone());
        Self {
            q: eig.eigenvectors,
            d: eig.eigenvalues,
        }
    }
}

/// `A = L L^T`, the shift `L^{-1} b`, the radius of the whitened ball and the
/// factorization of `I + beta A` for a fixed penalty `beta`.
#[derive(Debug, Clone)]
struct AdmmFactors {
    penalty: f64,
    l: DMatrix<f64>,
    shift: DVector<f64>,
    radius: f64,
    system: Cholesky<f64, Dyn>,
}

impl AdmmFactors {
    fn new(e: &Ellipsoid, penalty: f64) -> Result<Self> {
        let n = e.dim();
        let chol = Cholesky::new(e.a.clone()).ok_or_else(|| {
            Error::InvalidConfig("ellipsoid matrix is not positive definite".into())
        })?;
        let l = chol.l();
        let shift = l
            .solve_lower_triangular(&e.b)
            .ok_or_else(|| Error::InvalidConfig("singular Cholesky factor".into()))?;
        let radius = (e.alpha + shift.norm_squared()).sqrt();
        let system = Cholesky::new(DMatrix::identity(n, n) + &e.a * penalty)
            .ok_or_else(|| Error::InvalidConfig("I + beta A is not positive definite".into()))?;
        Ok(Self {
            penalty,
            l,
            shift,
            radius,
            system,
        })
    }
}

/// An ellipsoid with its factorizations precomputed, ready to project many points.
#[derive(Debug, Clone)]
pub struct EllipsoidProjector {
    ellipsoid: Ellipsoid,
    admm_cfg: AdmmConfig,
    // Eigendecomposition is only paid for when the KKT projector is used.
    kkt: OnceLock<KktFactors>,
    admm: AdmmFactors,
}

impl EllipsoidProjector {
    pub fn new(ellipsoid: Ellipsoid, admm_cfg: AdmmConfig) -> Result<Self> {
        admm_cfg.validate()?;
        let admm = AdmmFactors::new(&ellipsoid, admm_cfg.penalty)?;
        Ok(Self {
            ellipsoid,
            admm_cfg,
            kkt: OnceLock::new(),
            admm,
        })
    }

    pub fn ellipsoid(&self) -> &Ellipsoid {
        &self.ellipsoid
    }

    pub fn admm_config(&self) -> &AdmmConfig {
        &self.admm_cfg
    }

    pub fn dim(&self) -> usize {
        self.ellipsoid.dim()
    }

    /// Projection through the KKT multiplier: for exterior `x`, returns
    /// `p(l) = (I + l A)^{-1} (x - l b)` at the root `l > 0` of `g(p(l)) = 0`.
    pub fn project_kkt(&self, x: &Point, tol: f64) -> Result<Point> {
        check_dim(self.dim(), x.len())?;
        if !(tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "KKT tolerance {tol} must be positive"
            )));
        }
        if self.ellipsoid.g_unchecked(x) <= 0.0 {
            return Ok(x.clone());
        }
        let KktFactors { q, d } = self.kkt.get_or_init(|| KktFactors::new(&self.ellipsoid));
        let y = q.tr_mul(x);
        let c = q.tr_mul(&self.ellipsoid.b);
        let alpha = self.ellipsoid.alpha;

        // value and derivative of lambda -> g(p(lambda)) in the eigenbasis
        let phi = |lambda: f64| -> (f64, f64) {
            let mut value = -alpha;
            let mut slope = 0.0;
            for i in 0..d.len() {
                let denom = 1.0 + lambda * d[i];
                let p = (y[i] - lambda * c[i]) / denom;
                let grad = d[i] * p + c[i];
                value += d[i] * p * p + 2.0 * c[i] * p;
                slope -= 2.0 * grad * grad / denom;
            }
            (value, slope)
        };

        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut doublings = 0;
        while phi(hi).0 > 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(Error::RootNotBracketed);
            }
        }

        // safeguarded Newton on the bracket [lo, hi]
        let mut lambda = 0.5 * (lo + hi);
        let mut best = (f64::INFINITY, lambda);
        for _ in 0..500 {
            let (value, slope) = phi(lambda);
            if value.abs() < best.0 {
                best = (value.abs(), lambda);
            }
            if value.abs() <= tol {
                break;
            }
            if value > 0.0 {
                lo = lambda;
            } else {
                hi = lambda;
            }
            let newton = lambda - value / slope;
            let next = if slope < 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if next == lambda || hi - lo <= f64::EPSILON * hi {
                break;
            }
            lambda = next;
        }
        let lambda = best.1;
        let p = DVector::from_fn(d.len(), |i, _| {
            (y[i] - lambda * c[i]) / (1.0 + lambda * d[i])
        });
        Ok(q * p)
    }

    /// ADMM on `min 1/2 |p - x|^2` subject to `z = L^T p + L^{-1} b`, `|z| <= radius`.
    ///
    /// Stops once consecutive `p` iterates differ by less than the configured tolerance.
    pub fn project_admm(&self, x: &Point) -> Result<AdmmProjection> {
        self.project_admm_with(x, &self.admm_cfg)
    }

    pub fn project_admm_with(&self, x: &Point, cfg: &AdmmConfig) -> Result<AdmmProjection> {
        check_dim(self.dim(), x.len())?;
        cfg.validate()?;
        if self.ellipsoid.g_unchecked(x) <= 0.0 {
            return Ok(AdmmProjection {
                point: x.clone(),
                iterations: 1,
                converged: true,
            });
        }
        let refactored;
        let f = if cfg.penalty == self.admm.penalty {
            &self.admm
        } else {
            refactored = AdmmFactors::new(&self.ellipsoid, cfg.penalty)?;
            &refactored
        };
        let beta = f.penalty;
        let to_ball = |v: DVector<f64>| {
            let norm = v.norm();
            if norm > f.radius {
                v * (f.radius / norm)
            } else {
                v
            }
        };

        let mut p = x.clone();
        let mut z = to_ball(f.l.tr_mul(x) + &f.shift);
        let mut u = DVector::zeros(x.len());
        for k in 1..=cfg.max_iterations {
            let rhs = x - (&f.l * (&f.shift - &z + &u)) * beta;
            let p_next = f.system.solve(&rhs);
            let lifted = f.l.tr_mul(&p_next) + &f.shift;
            z = to_ball(&lifted + &u);
            u += lifted - &z;
            let step = (&p_next - &p).norm();
            p = p_next;
            if step < cfg.tolerance {
                return Ok(AdmmProjection {
                    point: p,
                    iterations: k,
                    converged: true,
                });
            }
        }
        Ok(AdmmProjection {
            point: p,
            iterations: cfg.max_iterations,
            converged: false,
        })
    }
}

/// KKT projection onto `e` (builds the factorization on the fly).
pub fn project_kkt(e: &Ellipsoid, x: &Point, tol: f64) -> Result<Point> {
    EllipsoidProjector::new(e.clone(), AdmmConfig::default())?.project_kkt(x, tol)
}

/// ADMM projection onto `e` (builds the factorization on the fly).
pub fn project_admm(e: &Ellipsoid, x: &Point, cfg: &AdmmConfig) -> Result<AdmmProjection> {
    EllipsoidProjector::new(e.clone(), *cfg)?.project_admm(x)
}
