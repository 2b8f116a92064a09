use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus,
};

use crate::error::{Error, Result};
use crate::gaussian::Subspace;
use crate::regression::{BooleanHypothesis, FeatureMap, PolynomialHypothesis};

/// L1 solver selection. The exact linear program is the default; the
/// subgradient schedule exists for point counts where the LP becomes
/// unwieldy and is flagged non-default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum L1Method {
    ExactLp,
    Subgradient { iterations: usize },
}

impl Default for L1Method {
    fn default() -> Self {
        L1Method::ExactLp
    }
}

/// Minimize `sum_i |p(x_i) - y_i|` over degree-`m` Hermite polynomials in the
/// projected coordinates and return `sign(p)`.
pub fn l1_fit(points: &[(Vec<f64>, f64)], v: &Subspace, m: u32) -> Result<BooleanHypothesis> {
    Ok(l1_fit_report(points, v, m, L1Method::ExactLp)?.0)
}

/// As [`l1_fit`], also returning the attained objective `sum_i |p(x_i) - y_i|`
/// as reported by the solver.
pub fn l1_fit_report(
    points: &[(Vec<f64>, f64)],
    v: &Subspace,
    m: u32,
    method: L1Method,
) -> Result<(BooleanHypothesis, f64)> {
    if points.is_empty() {
        return Err(Error::invalid("points", "need at least one point"));
    }
    let fm = FeatureMap::new(v.dim(), m)?;
    let f = fm.count();
    if f > points.len() {
        log::warn!(
            "feature count {f} exceeds sample count {}: L1 fit may interpolate",
            points.len()
        );
    }
    let projected: Result<Vec<Vec<f64>>> = points.iter().map(|(x, _)| v.project(x)).collect();
    let design = fm.design_matrix(&projected?)?;
    let labels: Vec<f64> = points.iter().map(|(_, y)| *y).collect();

    let coef = match method {
        L1Method::ExactLp => solve_lp(&design, &labels)?,
        L1Method::Subgradient { iterations } => subgradient(&design, &labels, iterations),
    };
    let objective: f64 = (0..points.len())
        .map(|i| {
            let mut p = 0.0;
            for j in 0..f {
                p += design[(i, j)] * coef[j];
            }
            (p - labels[i]).abs()
        })
        .sum();

    let coefficients = fm.indices().iter().cloned().zip(coef).collect();
    let poly = PolynomialHypothesis {
        subspace: v.clone(),
        degree: m,
        coefficients,
    };
    Ok((BooleanHypothesis { poly }, objective))
}

/// Exact LP with one slack per point:
///
/// minimize `sum_i t_i` over `(c, t)` subject to
/// `(design c)_i - y_i <= t_i` and `y_i - (design c)_i <= t_i`.
///
/// Variables are ordered `[c_0..c_{F-1}, t_0..t_{n-1}]`; both constraint
/// blocks land in the nonnegative cone.
fn solve_lp(design: &nalgebra::DMatrix<f64>, labels: &[f64]) -> Result<Vec<f64>> {
    let n = design.nrows();
    let f = design.ncols();
    let nvars = f + n;

    // objective: zeros on c, ones on t
    let mut q = vec![0.0; nvars];
    for qi in q.iter_mut().skip(f) {
        *qi = 1.0;
    }
    let p = CscMatrix::<f64>::zeros((nvars, nvars));

    // rows 0..n:      design c - t <= y
    // rows n..2n:    -design c - t <= -y
    // CSC assembly column by column.
    let mut col_ptr = Vec::with_capacity(nvars + 1);
    let mut row_idx = Vec::new();
    let mut vals = Vec::new();
    col_ptr.push(0usize);
    for j in 0..f {
        for i in 0..n {
            let a = design[(i, j)];
            if a != 0.0 {
                row_idx.push(i);
                vals.push(a);
            }
        }
        for i in 0..n {
            let a = design[(i, j)];
            if a != 0.0 {
                row_idx.push(n + i);
                vals.push(-a);
            }
        }
        col_ptr.push(row_idx.len());
    }
    for i in 0..n {
        row_idx.push(i);
        vals.push(-1.0);
        row_idx.push(n + i);
        vals.push(-1.0);
        col_ptr.push(row_idx.len());
    }
    let a = CscMatrix::new(2 * n, nvars, col_ptr, row_idx, vals);

    let mut b = Vec::with_capacity(2 * n);
    b.extend_from_slice(labels);
    b.extend(labels.iter().map(|y| -y));

    let cones = [NonnegativeConeT(2 * n)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .max_iter(200)
        .build()
        .map_err(|e| Error::Numeric(format!("LP settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .map_err(|e| Error::Numeric(format!("LP setup: {e:?}")))?;
    solver.solve();

    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            Ok(solver.solution.x[..f].to_vec())
        }
        SolverStatus::PrimalInfeasible | SolverStatus::DualInfeasible => Err(Error::Numeric(
            "L1 program reported infeasible, which the slack construction rules out".into(),
        )),
        other => Err(Error::Numeric(format!(
            "L1 solver did not converge: {other:?} after {} iterations",
            solver.solution.iterations
        ))),
    }
}

/// Fixed-schedule projected subgradient descent on the L1 objective.
fn subgradient(design: &nalgebra::DMatrix<f64>, labels: &[f64], iterations: usize) -> Vec<f64> {
    let n = design.nrows();
    let f = design.ncols();
    let mut c = vec![0.0; f];
    let scale = 1.0 / n as f64;
    for it in 0..iterations.max(1) {
        let step = 1.0 / (1.0 + it as f64).sqrt();
        let mut grad = vec![0.0; f];
        for i in 0..n {
            let mut p = 0.0;
            for j in 0..f {
                p += design[(i, j)] * c[j];
            }
            let s = if p - labels[i] >= 0.0 { 1.0 } else { -1.0 };
            for j in 0..f {
                grad[j] += s * design[(i, j)];
            }
        }
        for j in 0..f {
            c[j] -= step * scale * grad[j];
        }
    }
    c
}
