//! Iteration engines: alternating projections (MAP), the circumcentered-reflection
//! method (CRM), parallel (PPM) and sequential (SPM) projections, with runtime
//! checks of the invariants the iterations are known to satisfy.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{circumcenter3, Point};
use crate::operators::{AffineSubspace, Evaluate, Operator};
use crate::product_space::DiagonalSubspace;

/// Relative threshold of the degenerate-case analysis in [`crm_step`].
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Relative tolerance for "the point lies in U".
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Distances at or below this fraction of the largest one (or of 1, if larger)
/// are rounding noise and are not used to form ratios.
pub const RATE_FLOOR: f64 = 100.0 * f64::EPSILON;

/// The affine subspace `U` of a two-operator problem.
#[derive(Debug, Clone)]
pub enum Subspace {
    Affine(AffineSubspace),
    Diagonal(DiagonalSubspace),
}

impl Evaluate for Subspace {
    fn dim(&self) -> usize {
        match self {
            Subspace::Affine(a) => a.dim(),
            Subspace::Diagonal(d) => d.n * d.m,
        }
    }

    fn apply(&self, x: &Point) -> Result<Point> {
        match self {
            Subspace::Affine(a) => a.apply(x),
            Subspace::Diagonal(d) => d.project_flat(x),
        }
    }
}

impl Subspace {
    /// `|P_U(x) - x|`.
    pub fn deviation(&self, x: &Point) -> Result<f64> {
        Ok((self.apply(x)? - x).norm())
    }

    /// Projection onto the direction space of `U`.
    pub fn project_direction(&self, v: &Point) -> Result<Point> {
        check_dim(self.dim(), v.len())?;
        match self {
            Subspace::Affine(a) => Ok(v - a.normal_component(v)),
            Subspace::Diagonal(d) => d.project_flat(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Crm,
    Ppm,
    Map,
    Spm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Crm => "crm",
            Method::Ppm => "ppm",
            Method::Map => "map",
            Method::Spm => "spm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crm" => Ok(Method::Crm),
            "ppm" => Ok(Method::Ppm),
            "map" => Ok(Method::Map),
            "spm" => Ok(Method::Spm),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

/// A problem the iteration engines understand.
#[derive(Clone, Copy)]
pub enum Problem<'a> {
    /// Common fixed point of `operator` and `P_U` (MAP and CRM).
    Pair {
        operator: &'a dyn Evaluate,
        subspace: &'a Subspace,
    },
    /// Common fixed point of a family of operators (PPM and SPM).
    Family(&'a [Operator]),
}

impl Problem<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Pair { subspace, .. } => subspace.dim(),
            Problem::Family(ops) => ops.first().map_or(0, |o| o.dim()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub fejer: bool,
    pub orthogonality: bool,
    pub membership: bool,
}

impl Diagnostics {
    pub const NONE: Diagnostics = Diagnostics {
        fejer: false,
        orthogonality: false,
        membership: false,
    };
    pub const ALL: Diagnostics = Diagnostics {
        fejer: true,
        orthogonality: true,
        membership: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub diagnostics: Diagnostics,
    /// Allowed violation of the diagnostic inequalities.
    pub diagnostic_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 50_000,
            diagnostics: Diagnostics::NONE,
            diagnostic_tolerance: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0)
            || self.max_iterations == 0
            || !(self.diagnostic_tolerance >= 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "invalid solver configuration {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
        }
    }
}

/// Extremes of the runtime diagnostics observed along a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    /// Smallest Fejer slack `|x_k - y|^2 - |x_{k+1} - y|^2 - decrease term`.
    pub min_fejer_slack: Option<f64>,
    /// Largest relative `|<x - T(x), C(x) - T(x)>|`.
    pub max_orthogonality: Option<f64>,
    /// Largest relative `|P_U(x_k) - x_k|`.
    pub max_membership: Option<f64>,
}

fn fold_min(acc: &mut Option<f64>, v: f64) {
    *acc = Some(acc.map_or(v, |a| a.min(v)));
}

fn fold_max(acc: &mut Option<f64>, v: f64) {
    *acc = Some(acc.map_or(v, |a| a.max(v)));
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub method: Method,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// `|x_{k+1} - x_k|` for every step taken.
    pub residuals: Vec<f64>,
    /// `|x_k - y|` for `k = 0..=iterations` when a solution `y` was supplied.
    pub distances: Option<Vec<f64>>,
    /// Fixed-point residual of the final iterate.
    pub final_fixed_point_residual: f64,
    pub final_point: Vec<f64>,
    pub elapsed_s: f64,
    pub diagnostics: DiagnosticSummary,
}

impl IterationTrace {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// `P_U(T(z))`.
pub fn map_step<T: Evaluate + ?Sized>(op: &T, subspace: &Subspace, z: &Point) -> Result<Point> {
    check_dim(subspace.dim(), z.len())?;
    subspace.apply(&op.apply(z)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrmCase {
    /// All three points coincide: `x` is a common fixed point.
    Fixed,
    /// The reflection already lies in `U`; the step returns `T(x)`.
    ReflectionInSubspace,
    /// `x = P_U(R(x))`; the step returns `x`.
    ProjectionOfReflection,
    Circumcenter,
}

#[derive(Debug, Clone)]
pub struct CrmStep {
    pub next: Point,
    /// `T(x)`.
    pub image: Point,
    pub case: CrmCase,
}

/// One circumcentered-reflection step `circ(x, R(x), R_U(R(x)))` with `R = 2T - I`.
pub fn crm_step<T: Evaluate + ?Sized>(op: &T, subspace: &Subspace, x: &Point) -> Result<Point> {
    Ok(crm_step_detailed(op, subspace, x)?.next)
}

pub fn crm_step_detailed<T: Evaluate + ?Sized>(
    op: &T,
    subspace: &Subspace,
    x: &Point,
) -> Result<CrmStep> {
    check_dim(subspace.dim(), x.len())?;
    check_dim(op.dim(), x.len())?;
    let deviation = subspace.deviation(x)?;
    if deviation > MEMBERSHIP_TOL * (1.0 + x.norm()) {
        return Err(Error::NotInSubspace { deviation });
    }

    let image = op.apply(x)?;
    let r = &image * 2.0 - x;
    let pr = subspace.apply(&r)?;
    let w = &pr * 2.0 - &r;
    let scale = 1.0 + x.norm().max(r.norm());

    if (&r - x).norm() <= DEGENERACY_TOL * scale {
        return Ok(CrmStep {
            next: x.clone(),
            image,
            case: CrmCase::Fixed,
        });
    }
    if (&r - &pr).norm() <= DEGENERACY_TOL * (1.0 + r.norm()) {
        return Ok(CrmStep {
            next: image.clone(),
            image,
            case: CrmCase::ReflectionInSubspace,
        });
    }
    if (x - &pr).norm() <= DEGENERACY_TOL * (1.0 + x.norm()) {
        return Ok(CrmStep {
            next: x.clone(),
            image,
            case: CrmCase::ProjectionOfReflection,
        });
    }
    // The circumcenter lies on the line through x and P_U(R(x)); solving for the
    // point of that line equidistant from x and R(x) keeps the iterate in U even
    // when the triangle is nearly flat. For x in U, P_U(R(x)) - x is the
    // direction-space projection of R(x) - x, which avoids the cancellation.
    let rx = &r - x;
    let d = subspace.project_direction(&rx)?;
    let denom = 2.0 * d.dot(&rx);
    let next = if denom > 0.0 {
        x + d * (rx.norm_squared() / denom)
    } else {
        circumcenter3(x, &r, &w)?.center
    };
    Ok(CrmStep {
        next,
        image,
        case: CrmCase::Circumcenter,
    })
}

/// `(1/m) sum_i T_i(x)`.
pub fn ppm_step(ops: &[Operator], x: &Point) -> Result<Point> {
    if ops.is_empty() {
        return Err(Error::EmptyOperatorList);
    }
    let mut acc = Point::zeros(x.len());
    for op in ops {
        acc += op.apply(x)?;
    }
    Ok(acc / ops.len() as f64)
}

/// `T_m(...T_1(x)...)`.
pub fn spm_step(ops: &[Operator], x: &Point) -> Result<Point> {
    if ops.is_empty() {
        return Err(Error::EmptyOperatorList);
    }
    let mut y = x.clone();
    for op in ops {
        y = op.apply(&y)?;
    }
    Ok(y)
}

/// Next iterate plus the decrease term of the Fejer inequality, when one is known.
struct Stepped {
    next: Point,
    fejer_decrease: f64,
    orthogonality: Option<f64>,
}

fn step(method: Method, problem: &Problem<'_>, x: &Point, want_fejer: bool) -> Result<Stepped> {
    match (method, problem) {
        (Method::Map, Problem::Pair { operator, subspace }) => {
            let tx = operator.apply(x)?;
            let next = subspace.apply(&tx)?;
            let fejer_decrease = if want_fejer {
                (&next - &tx).norm_squared() + (&tx - x).norm_squared()
            } else {
                0.0
            };
            Ok(Stepped {
                next,
                fejer_decrease,
                orthogonality: None,
            })
        }
        (Method::Crm, Problem::Pair { operator, subspace }) => {
            let s = crm_step_detailed(*operator, subspace, x)?;
            let fejer_decrease = if want_fejer {
                (subspace.apply(&s.image)? - x).norm_squared()
            } else {
                0.0
            };
            let a = x - &s.image;
            let b = &s.next - &s.image;
            let orthogonality = a.dot(&b).abs() / (1.0 + a.norm() * b.norm());
            Ok(Stepped {
                next: s.next,
                fejer_decrease,
                orthogonality: Some(orthogonality),
            })
        }
        (Method::Ppm, Problem::Family(ops)) => {
            let next = ppm_step(ops, x)?;
            // the average of firmly nonexpansive operators is firmly nonexpansive
            let fejer_decrease = (&next - x).norm_squared();
            Ok(Stepped {
                next,
                fejer_decrease,
                orthogonality: None,
            })
        }
        (Method::Spm, Problem::Family(ops)) => Ok(Stepped {
            next: spm_step(ops, x)?,
            fejer_decrease: 0.0,
            orthogonality: None,
        }),
        (Method::Map | Method::Crm, Problem::Family(_)) => Err(Error::UnsupportedProblem {
            method: method.name(),
            reason: "needs an operator/subspace pair; lift the family first",
        }),
        (Method::Ppm | Method::Spm, Problem::Pair { .. }) => Err(Error::UnsupportedProblem {
            method: method.name(),
            reason: "needs an operator family",
        }),
    }
}

fn fixed_point_residual_of(problem: &Problem<'_>, x: &Point) -> Result<f64> {
    match problem {
        Problem::Pair { operator, subspace } => {
            Ok((operator.apply(x)? - x).norm().max(subspace.deviation(x)?))
        }
        Problem::Family(ops) => {
            let mut worst = 0.0_f64;
            for op in *ops {
                worst = worst.max((op.apply(x)? - x).norm());
            }
            Ok(worst)
        }
    }
}

/// Iterates `method` from `x0` until consecutive iterates differ by less than
/// `cfg.tolerance` or the iteration cap is reached.
///
/// With diagnostics on, each step is checked and the first violation aborts the
/// run with [`Error::DiagnosticFailure`]. The Fejer check needs `solution`.
pub fn run(
    method: Method,
    problem: &Problem<'_>,
    x0: &Point,
    cfg: &SolverConfig,
    solution: Option<&Point>,
) -> Result<IterationTrace> {
    cfg.validate()?;
    check_dim(problem.dim(), x0.len())?;
    if let Some(y) = solution {
        check_dim(x0.len(), y.len())?;
    }
    let start = Instant::now();
    let diag = cfg.diagnostics;
    let pair_subspace = match problem {
        Problem::Pair { subspace, .. } => Some(*subspace),
        Problem::Family(_) => None,
    };
    let want_fejer = diag.fejer && solution.is_some();

    let mut summary = DiagnosticSummary::default();
    let mut x = x0.clone();
    let mut residuals = Vec::new();
    let mut distances = solution.map(|y| vec![(x0 - y).norm()]);
    let mut stop_reason = StopReason::MaxIterations;

    if diag.membership && method == Method::Crm {
        if let Some(u) = pair_subspace {
            let m = u.deviation(&x)? / (1.0 + x.norm());
            fold_max(&mut summary.max_membership, m);
        }
    }

    for k in 0..cfg.max_iterations {
        let stepped = step(method, problem, &x, want_fejer)?;
        let next = stepped.next;
        let residual = (&next - &x).norm();

        if let (true, Some(value)) = (diag.orthogonality, stepped.orthogonality) {
            fold_max(&mut summary.max_orthogonality, value);
            if value > cfg.diagnostic_tolerance {
                return Err(Error::DiagnosticFailure {
                    iteration: k,
                    diagnostic: "orthogonality",
                    value,
                });
            }
        }
        if diag.membership && matches!(method, Method::Crm | Method::Map) {
            if let Some(u) = pair_subspace {
                let value = u.deviation(&next)? / (1.0 + next.norm());
                fold_max(&mut summary.max_membership, value);
                if value > MEMBERSHIP_TOL {
                    return Err(Error::DiagnosticFailure {
                        iteration: k + 1,
                        diagnostic: "membership",
                        value,
                    });
                }
            }
        }
        if let (true, Some(y)) = (want_fejer, solution) {
            let slack =
                (&x - y).norm_squared() - (&next - y).norm_squared() - stepped.fejer_decrease;
            fold_min(&mut summary.min_fejer_slack, slack);
            if slack < -cfg.diagnostic_tolerance {
                return Err(Error::DiagnosticFailure {
                    iteration: k,
                    diagnostic: "fejer",
                    value: slack,
                });
            }
        }

        if let (Some(d), Some(y)) = (distances.as_mut(), solution) {
            d.push((&next - y).norm());
        }
        residuals.push(residual);
        x = next;
        if residual < cfg.tolerance {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok(IterationTrace {
        method,
        iterations: residuals.len(),
        stop_reason,
        final_fixed_point_residual: fixed_point_residual_of(problem, &x)?,
        final_point: x.iter().copied().collect(),
        residuals,
        distances,
        elapsed_s: start.elapsed().as_secs_f64(),
        diagnostics: summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    pub geometric_mean_ratio: f64,
}

/// Per-step ratios `d_{k+1} / d_k` of a distance-to-solution history.
///
/// The window stops at the first distance at or below [`RATE_FLOOR`] times the
/// largest distance (or 1, if larger).
pub fn estimate_rate(history: &[f64]) -> Result<RateEstimate> {
    let floor = RATE_FLOOR * history.iter().cloned().fold(1.0, f64::max);
    let ratios: Vec<f64> = history
        .windows(2)
        .take_while(|w| w[0] > floor)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return Err(Error::InsufficientHistory);
    }
    let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let geometric_mean_ratio = if ratios.iter().any(|r| *r == 0.0) {
        0.0
    } else {
        (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
    };
    Ok(RateEstimate {
        ratios,
        sup_ratio,
        geometric_mean_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{ConvexSet, Halfspace};
    use nalgebra::dvector;

    fn axis() -> Subspace {
        Subspace::Affine(AffineSubspace::line_through_origin(dvector![1.0, 0.0]).unwrap())
    }

    fn diagonal_line() -> Operator {
        Operator::affine(AffineSubspace::line_through_origin(dvector![1.0, 1.0]).unwrap())
    }

    fn hs(normal: Point, offset: f64) -> Operator {
        Operator::projection(ConvexSet::Halfspace(
            Halfspace::new(normal, offset).unwrap(),
        ))
    }

    #[test]
    fn map_step_examples() {
        let u = axis();
        let t = diagonal_line();
        let z = map_step(&t, &u, &dvector![1.0, 0.0]).unwrap();
        assert!((z - dvector![0.5, 0.0]).norm() < 1e-15);
        let id = Operator::identity(2);
        assert_eq!(
            map_step(&id, &u, &dvector![3.0, 4.0]).unwrap(),
            dvector![3.0, 0.0]
        );
        assert_eq!(
            map_step(&t, &u, &dvector![0.0, 0.0]).unwrap(),
            dvector![0.0, 0.0]
        );
    }

    #[test]
    fn crm_step_examples() {
        let u = axis();
        let t = diagonal_line();
        let s = crm_step_detailed(&t, &u, &dvector![1.0, 0.0]).unwrap();
        assert_eq!(s.case, CrmCase::Circumcenter);
        assert!(s.next.norm() < 1e-15);

        let s = crm_step_detailed(&t, &u, &dvector![0.0, 0.0]).unwrap();
        assert_eq!(s.case, CrmCase::Fixed);
        assert_eq!(s.next, dvector![0.0, 0.0]);

        // T maps the axis into itself: the step is T(x)
        let shrink = Operator::ball(crate::operators::Ball::new(dvector![0.0, 0.0], 1.0).unwrap());
        let s = crm_step_detailed(&shrink, &u, &dvector![3.0, 0.0]).unwrap();
        assert_eq!(s.case, CrmCase::ReflectionInSubspace);
        assert!((s.next - dvector![1.0, 0.0]).norm() < 1e-15);

        // T(x) - x orthogonal to U: x = P_U(R(x))
        let up = hs(dvector![0.0, -1.0], -1.0);
        let s = crm_step_detailed(&up, &u, &dvector![2.0, 0.0]).unwrap();
        assert_eq!(s.case, CrmCase::ProjectionOfReflection);
        assert_eq!(s.next, dvector![2.0, 0.0]);

        assert!(matches!(
            crm_step(&t, &u, &dvector![1.0, 1.0]),
            Err(Error::NotInSubspace { .. })
        ));
    }

    #[test]
    fn ppm_spm_examples() {
        let ops = vec![hs(dvector![1.0, 0.0], 0.0), hs(dvector![0.0, 1.0], 0.0)];
        assert_eq!(
            ppm_step(&ops, &dvector![2.0, 2.0]).unwrap(),
            dvector![1.0, 1.0]
        );
        assert_eq!(
            ppm_step(&ops[..1], &dvector![2.0, 2.0]).unwrap(),
            dvector![0.0, 2.0]
        );
        assert_eq!(
            ppm_step(&ops, &dvector![-1.0, -1.0]).unwrap(),
            dvector![-1.0, -1.0]
        );
        assert!(matches!(
            ppm_step(&[], &dvector![1.0]),
            Err(Error::EmptyOperatorList)
        ));

        let lines = vec![
            Operator::affine(AffineSubspace::line_through_origin(dvector![1.0, 0.0]).unwrap()),
            diagonal_line(),
        ];
        let y = spm_step(&lines, &dvector![2.0, -1.0]).unwrap();
        assert!((y - dvector![1.0, 1.0]).norm() < 1e-15);
        assert_eq!(
            spm_step(&lines[..1], &dvector![2.0, -1.0]).unwrap(),
            dvector![2.0, 0.0]
        );
        assert_eq!(
            spm_step(&lines, &dvector![0.0, 0.0]).unwrap(),
            dvector![0.0, 0.0]
        );
        assert!(matches!(
            spm_step(&[], &dvector![1.0]),
            Err(Error::EmptyOperatorList)
        ));
    }

    #[test]
    fn run_from_fixed_point() {
        let u = axis();
        let t = diagonal_line();
        let problem = Problem::Pair {
            operator: &t,
            subspace: &u,
        };
        for method in [Method::Map, Method::Crm] {
            let trace = run(
                method,
                &problem,
                &dvector![0.0, 0.0],
                &SolverConfig::default(),
                None,
            )
            .unwrap();
            assert_eq!(trace.iterations, 1);
            assert_eq!(trace.stop_reason, StopReason::Converged);
            assert_eq!(trace.final_residual(), 0.0);
        }
    }

    #[test]
    fn run_two_lines() {
        let u = axis();
        let t = diagonal_line();
        let problem = Problem::Pair {
            operator: &t,
            subspace: &u,
        };
        let cfg = SolverConfig {
            diagnostics: Diagnostics::ALL,
            ..SolverConfig::default()
        };
        let zero = dvector![0.0, 0.0];
        let crm = run(
            Method::Crm,
            &problem,
            &dvector![1.0, 0.0],
            &cfg,
            Some(&zero),
        )
        .unwrap();
        assert_eq!(crm.stop_reason, StopReason::Converged);
        assert!(crm.iterations <= 2);

        // residual after k steps is 0.5^(k+1); count the steps needed to drop below 1e-6
        let mut expected = 0;
        let mut x = 1.0_f64;
        loop {
            expected += 1;
            let next = 0.5 * x;
            if (x - next).abs() < 1e-6 {
                break;
            }
            x = next;
        }
        let map = run(
            Method::Map,
            &problem,
            &dvector![1.0, 0.0],
            &cfg,
            Some(&zero),
        )
        .unwrap();
        assert_eq!(map.iterations, expected);
        assert!((19..=23).contains(&map.iterations));
        for w in map.residuals.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn run_rejects_mismatched_problem() {
        let ops = vec![Operator::identity(2)];
        let family = Problem::Family(&ops);
        let r = run(
            Method::Crm,
            &family,
            &dvector![0.0, 0.0],
            &SolverConfig::default(),
            None,
        );
        assert!(matches!(r, Err(Error::UnsupportedProblem { .. })));
        let u = axis();
        let pair = Problem::Pair {
            operator: &ops[0],
            subspace: &u,
        };
        let r = run(
            Method::Ppm,
            &pair,
            &dvector![0.0, 0.0],
            &SolverConfig::default(),
            None,
        );
        assert!(matches!(r, Err(Error::UnsupportedProblem { .. })));
    }

    #[test]
    fn max_iterations_stop() {
        let u = axis();
        let t = diagonal_line();
        let problem = Problem::Pair {
            operator: &t,
            subspace: &u,
        };
        let cfg = SolverConfig {
            max_iterations: 5,
            ..SolverConfig::default()
        };
        let trace = run(Method::Map, &problem, &dvector![1.0, 0.0], &cfg, None).unwrap();
        assert_eq!(trace.iterations, 5);
        assert_eq!(trace.stop_reason, StopReason::MaxIterations);
        assert!(trace.final_residual() >= cfg.tolerance);
    }

    #[test]
    fn fejer_violation_is_reported() {
        // a non-solution reference point breaks the Fejer inequality
        let u = axis();
        let t = diagonal_line();
        let problem = Problem::Pair {
            operator: &t,
            subspace: &u,
        };
        let cfg = SolverConfig {
            diagnostics: Diagnostics::ALL,
            ..SolverConfig::default()
        };
        let r = run(
            Method::Map,
            &problem,
            &dvector![1.0, 0.0],
            &cfg,
            Some(&dvector![1.0, 0.0]),
        );
        assert!(matches!(
            r,
            Err(Error::DiagnosticFailure {
                diagnostic: "fejer",
                ..
            })
        ));
    }

    #[test]
    fn rate_examples() {
        let r = estimate_rate(&[1.0, 0.5, 0.25, 0.125]).unwrap();
        assert_eq!(r.ratios, vec![0.5, 0.5, 0.5]);
        assert_eq!(r.sup_ratio, 0.5);
        assert!((r.geometric_mean_ratio - 0.5).abs() < 1e-15);

        assert!(matches!(
            estimate_rate(&[0.0, 0.0, 0.0]),
            Err(Error::InsufficientHistory)
        ));
        assert!(matches!(
            estimate_rate(&[1.0]),
            Err(Error::InsufficientHistory)
        ));

        // rounding-level stagnation after an exact step is not a ratio
        let r = estimate_rate(&[8.0, 6.7e-14, 6.7e-14]).unwrap();
        assert_eq!(r.ratios.len(), 1);

        let r = estimate_rate(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.ratios, vec![0.0]);
        assert_eq!(r.sup_ratio, 0.0);
        assert_eq!(r.geometric_mean_ratio, 0.0);
    }

    #[test]
    fn method_parsing() {
        for m in [Method::Crm, Method::Ppm, Method::Map, Method::Spm] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("drm".parse::<Method>().is_err());
    }
}
