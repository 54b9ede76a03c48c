//! Extremal eigenvalue search for the weighted quadratic form: assembly of
//! the admissible-restricted symmetrized form matrix, a deterministic Lanczos
//! iteration (full reorthogonalization) for its minimum eigenvalue, and the
//! bisection search for the Lame positivity window in alpha.

use super::PunctureSpec;
use crate::error::{Error, Result};
use crate::fundsol::WeightEvaluator;
use crate::grid::GridDomain;
use crate::operators::{assemble, CsrBuilder, CsrMatrix, OperatorSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Minimum eigenvalue classification threshold used by sign searches.
pub const DEFAULT_SIGN_TOLERANCE: f64 = 1e-8;

const LANCZOS_SEED: u64 = 0x45504c_4c;

/// Symmetrized quadratic-form matrix over admissible dofs.
///
/// Dof layout: `admissible_nodes[p]` is the grid node of dof block `p`; the
/// dof of component `c` there is `p * components + c`. The matrix already
/// carries the quadrature factor `h^n`, so `u^T M u` equals
/// `weighted_form(op, w, u, x0)` for admissible `u`.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    pub matrix: CsrMatrix,
    pub admissible_nodes: Vec<usize>,
    pub components: usize,
    pub x0: usize,
}

/// Build the admissible-restricted symmetrized form matrix
/// `M_s = (M + M^T) / 2` with `M = A^T W h^n`.
pub fn form_matrix(
    op: &OperatorSpec,
    w: &WeightEvaluator,
    dom: &Arc<GridDomain>,
    punct: &PunctureSpec,
) -> Result<FormMatrix> {
    punct.validate(dom)?;
    op.validate_for(dom, op.components())?;
    if w.components() != op.components() {
        return Err(Error::ShapeMismatch(format!(
            "weight has {} components, operator {} expects {}",
            w.components(),
            op.name(),
            op.components()
        )));
    }
    if let Some(g) = w.discrete_column() {
        if g.center != punct.center {
            return Err(Error::InvalidParameter(
                "discrete Green weight center differs from the puncture center".into(),
            ));
        }
    }

    let nc = op.components();
    let a = assemble(op, dom)?;

    // Admissible dofs: interior nodes strictly outside the closed puncture.
    let mut keep_dofs = Vec::new();
    let mut admissible_nodes = Vec::new();
    for (p, &node) in dom.interior_nodes().iter().enumerate() {
        if punct.admits(dom, node) {
            admissible_nodes.push(node);
            for c in 0..nc {
                keep_dofs.push(p * nc + c);
            }
        }
    }
    if admissible_nodes.is_empty() {
        return Err(Error::DegenerateDomain(
            "puncture removed every interior node".into(),
        ));
    }
    let a_r = a.restrict(&keep_dofs);

    // Node-block weights w(x0 - y) h^n.
    let hn = dom.cell_volume();
    let mut x0_point = vec![0.0; dom.dim()];
    dom.point(punct.center, &mut x0_point);
    let mut y_point = vec![0.0; dom.dim()];
    let mut offset = vec![0.0; dom.dim()];
    let blocks: Result<Vec<Vec<f64>>> = admissible_nodes
        .iter()
        .map(|&node| {
            dom.point(node, &mut y_point);
            for d in 0..dom.dim() {
                offset[d] = x0_point[d] - y_point[d];
            }
            match nc {
                1 => {
                    let v = if let Some(g) = w.discrete_column() {
                        g.columns[0].value(node, 0)
                    } else {
                        w.eval_scalar(&offset)?
                    };
                    Ok(vec![v * hn])
                }
                3 => {
                    let mut block = vec![0.0; 9];
                    if let Some(g) = w.discrete_column() {
                        for i in 0..3 {
                            for j in 0..3 {
                                block[i * 3 + j] = g.entry(node, i, j) * hn;
                            }
                        }
                    } else {
                        let phi = w.eval_matrix(&offset)?;
                        for i in 0..3 {
                            for j in 0..3 {
                                block[i * 3 + j] = phi[i][j] * hn;
                            }
                        }
                    }
                    Ok(block)
                }
                other => Err(Error::ShapeMismatch(format!(
                    "unsupported component count {}",
                    other
                ))),
            }
        })
        .collect();
    let blocks = blocks?;

    // B = W A_r (block-row combination), then M_s = (B + B^T) / 2, which
    // equals (A^T W + W A) / 2 restricted to the admissible dofs.
    let b = block_row_scale(&a_r, &blocks, nc)?;
    let ms = CsrMatrix::add(0.5, &b, 0.5, &b.transpose())?;
    Ok(FormMatrix {
        matrix: ms,
        admissible_nodes,
        components: nc,
        x0: punct.center,
    })
}

/// Rows of `W A` for a block-diagonal symmetric `W` (blocks of size `nc`).
fn block_row_scale(a: &CsrMatrix, blocks: &[Vec<f64>], nc: usize) -> Result<CsrMatrix> {
    let n = a.nrows();
    debug_assert_eq!(n, blocks.len() * nc);
    let mut builder = CsrBuilder::new(n, a.ncols());
    let mut accum: Vec<f64> = vec![0.0; a.ncols()];
    let mut touched: Vec<usize> = Vec::new();
    for block_idx in 0..blocks.len() {
        let w = &blocks[block_idx];
        for i in 0..nc {
            for j in 0..nc {
                let wij = w[i * nc + j];
                if wij == 0.0 {
                    continue;
                }
                let (cols, vals) = a.row(block_idx * nc + j);
                for (&c, &v) in cols.iter().zip(vals) {
                    if accum[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    accum[c] += wij * v;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                builder.push(c, accum[c]);
                accum[c] = 0.0;
            }
            touched.clear();
            builder.finish_row();
        }
    }
    Ok(builder.build())
}

/// Result of the extremal eigenvalue iteration.
#[derive(Debug, Clone)]
pub struct RayleighResult {
    pub min_eigenvalue: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Normalized argmin vector over admissible dofs.
    pub argmin: Vec<f64>,
}

/// Minimum eigenvalue of the symmetrized form matrix by Lanczos iteration
/// with full reorthogonalization, run to residual `1e-8` or `iters` steps.
///
/// The returned value is the Rayleigh quotient of the argmin vector in the
/// Euclidean inner product on admissible dof coordinates.
pub fn min_rayleigh(
    op: &OperatorSpec,
    w: &WeightEvaluator,
    dom: &Arc<GridDomain>,
    punct: &PunctureSpec,
    iters: usize,
) -> Result<RayleighResult> {
    let fm = form_matrix(op, w, dom, punct)?;
    lanczos_min(&fm.matrix, iters, 1e-8)
}

/// Lanczos minimum-eigenvalue driver, exposed for the dense-oracle tests.
pub fn lanczos_min(m: &CsrMatrix, iters: usize, tol: f64) -> Result<RayleighResult> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::DegenerateDomain("empty admissible space".into()));
    }
    let max_steps = iters.max(1).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut work = vec![0.0; n];
    let mut best_theta = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut best_s: Vec<f64> = Vec::new();
    let mut steps = 0usize;

    for k in 0..max_steps {
        steps = k + 1;
        m.matvec(&basis[k], &mut work);
        if k > 0 {
            let beta = betas[k - 1];
            for i in 0..n {
                work[i] -= beta * basis[k - 1][i];
            }
        }
        let alpha = dot(&work, &basis[k]);
        for i in 0..n {
            work[i] -= alpha * basis[k][i];
        }
        alphas.push(alpha);
        // Full reorthogonalization, twice for safety.
        for _ in 0..2 {
            for vb in &basis {
                let proj = dot(&work, vb);
                for i in 0..n {
                    work[i] -= proj * vb[i];
                }
            }
        }
        let beta = dot(&work, &work).sqrt();

        let theta = tridiag_min_eigenvalue(&alphas, &betas);
        let s = tridiag_eigenvector(&alphas, &betas, theta);
        let residual = beta * s[s.len() - 1].abs();
        if residual < best_residual || theta < best_theta {
            best_theta = theta;
            best_residual = residual;
            best_s = s;
        }
        let scale = alphas
            .iter()
            .map(|a| a.abs())
            .chain(betas.iter().map(|b| b.abs()))
            .fold(1.0f64, f64::max);
        if residual <= tol || beta <= 1e-15 * scale || k + 1 == n {
            let argmin = ritz_vector(&basis, &best_s, n);
            return Ok(RayleighResult {
                min_eigenvalue: best_theta,
                iterations: steps,
                residual: if k + 1 == n || beta <= 1e-15 * scale {
                    0.0
                } else {
                    residual
                },
                argmin,
            });
        }
        betas.push(beta);
        let next: Vec<f64> = work.iter().map(|x| x / beta).collect();
        basis.push(next);
    }

    Err(Error::EigenIterationStagnated {
        best_estimate: best_theta,
        residual: best_residual,
        iterations: steps,
    })
}

fn ritz_vector(basis: &[Vec<f64>], s: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for (coef, vb) in s.iter().zip(basis) {
        for i in 0..n {
            y[i] += coef * vb[i];
        }
    }
    normalize(&mut y);
    y
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = crate::grid::CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Number of eigenvalues of the symmetric tridiagonal below `x` (Sturm count).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut d = 1.0f64;
    for i in 0..diag.len() {
        let off2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - off2 / if d != 0.0 { d } else { f64::MIN_POSITIVE };
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric tridiagonal by Sturm bisection.
fn tridiag_min_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    if n == 1 {
        return diag[0];
    }
    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i < n - 1 {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let mut a = lo;
    let mut b = hi;
    for _ in 0..120 {
        let mid = 0.5 * (a + b);
        if sturm_count(diag, off, mid) >= 1 {
            b = mid;
        } else {
            a = mid;
        }
        if b - a <= 1e-15 * (1.0 + b.abs().max(a.abs())) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Eigenvector of the tridiagonal for an isolated eigenvalue, by inverse
/// iteration with a partially pivoted tridiagonal LU.
fn tridiag_eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag
        .iter()
        .map(|d| d.abs())
        .chain(off.iter().map(|o| o.abs()))
        .fold(1e-300f64, f64::max);
    let shift = lambda + 1e-12 * scale;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 / (i as f64 + 1.2)).collect();
    for _ in 0..3 {
        solve_shifted_tridiag(diag, off, shift, &mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            x = (0..n).map(|i| if i == n - 1 { 1.0 } else { 0.0 }).collect();
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

/// Solve (T - shift I) y = x in place, Gaussian elimination with partial
/// pivoting on the three bands.
fn solve_shifted_tridiag(diag: &[f64], off: &[f64], shift: f64, x: &mut [f64]) {
    let n = diag.len();
    let mut a: Vec<f64> = (0..n).map(|i| diag[i] - shift).collect(); // main
    let mut b: Vec<f64> = (0..n - 1).map(|i| off[i]).collect(); // super
    let mut c: Vec<f64> = (0..n - 1).map(|i| off[i]).collect(); // sub
    let mut d: Vec<f64> = vec![0.0; n]; // second super, fill-in from pivoting

    for i in 0..n - 1 {
        if c[i].abs() > a[i].abs() {
            x.swap(i, i + 1);
            std::mem::swap(&mut a[i], &mut c[i]);
            let tmp = b[i];
            b[i] = a[i + 1];
            a[i + 1] = tmp;
            if i + 2 < n {
                d[i] = b[i + 1];
                b[i + 1] = 0.0;
            }
        }
        let denom = if a[i] != 0.0 { a[i] } else { 1e-300 };
        let m = c[i] / denom;
        a[i + 1] -= m * b[i];
        if i + 2 < n {
            b[i + 1] -= m * d[i];
        }
        x[i + 1] -= m * x[i];
    }
    // back substitution
    for i in (0..n).rev() {
        let mut rhs = x[i];
        if i + 1 < n {
            rhs -= b[i] * x[i + 1];
        }
        if i + 2 < n {
            rhs -= d[i] * x[i + 2];
        }
        let denom = if a[i] != 0.0 { a[i] } else { 1e-300 };
        x[i] = rhs / denom;
    }
}

/// One evaluated point of the eigenvalue-versus-alpha table.
#[derive(Debug, Clone, Copy)]
pub struct AlphaSweepPoint {
    pub alpha: f64,
    pub min_eig: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Output of the window search: threshold estimates and every evaluation.
#[derive(Debug, Clone)]
pub struct AlphaThresholdSearch {
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub evaluations: Vec<AlphaSweepPoint>,
}

/// Sign of the minimum eigenvalue of the Lame form at one alpha.
pub fn lame_min_eig(
    dom: &Arc<GridDomain>,
    alpha: f64,
    punct: &PunctureSpec,
    iters: usize,
) -> Result<RayleighResult> {
    let op = OperatorSpec::lame(alpha)?;
    let w = WeightEvaluator::lame(alpha)?;
    min_rayleigh(&op, &w, dom, punct, iters)
}

/// Bisection for one sign change of the minimum eigenvalue in alpha. Both
/// the operator and its weight depend on alpha, so only the sign is bisected.
/// Returns the midpoint estimate plus every evaluated point.
pub fn bisect_sign_change(
    dom: &Arc<GridDomain>,
    bracket: (f64, f64),
    tol_alpha: f64,
    punct: &PunctureSpec,
    iters: usize,
) -> Result<(f64, Vec<AlphaSweepPoint>)> {
    if !(tol_alpha > 0.0) {
        return Err(Error::InvalidParameter("tol_alpha must be positive".into()));
    }
    let (mut a, mut b) = bracket;
    if !(b > a) {
        return Err(Error::InvalidParameter(format!("bad bracket [{}, {}]", a, b)));
    }
    let mut evaluations = Vec::new();
    let eval = |alpha: f64, evaluations: &mut Vec<AlphaSweepPoint>| -> Result<f64> {
        let r = lame_min_eig(dom, alpha, punct, iters)?;
        evaluations.push(AlphaSweepPoint {
            alpha,
            min_eig: r.min_eigenvalue,
            iterations: r.iterations,
            residual: r.residual,
        });
        Ok(r.min_eigenvalue)
    };
    let negative = |eig: f64| eig < -DEFAULT_SIGN_TOLERANCE;

    let sign_a = negative(eval(a, &mut evaluations)?);
    let sign_b = negative(eval(b, &mut evaluations)?);
    if sign_a == sign_b {
        return Err(Error::BracketDoesNotStraddle {
            lo: a,
            hi: b,
            sign_lo: if sign_a { -1 } else { 1 },
            sign_hi: if sign_b { -1 } else { 1 },
        });
    }
    while b - a > tol_alpha {
        let mid = 0.5 * (a + b);
        let sign_mid = negative(eval(mid, &mut evaluations)?);
        if sign_mid == sign_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((0.5 * (a + b), evaluations))
}

/// Window search: bisect both brackets to `tol_alpha` and pool the
/// eigenvalue-versus-alpha table.
pub fn alpha_threshold_search(
    dom: &Arc<GridDomain>,
    bracket_lo: (f64, f64),
    bracket_hi: (f64, f64),
    tol_alpha: f64,
    punct: &PunctureSpec,
    iters: usize,
) -> Result<AlphaThresholdSearch> {
    let (alpha_minus, mut evaluations) =
        bisect_sign_change(dom, bracket_lo, tol_alpha, punct, iters)?;
    let (alpha_plus, upper_evals) = bisect_sign_change(dom, bracket_hi, tol_alpha, punct, iters)?;
    evaluations.extend(upper_evals);
    Ok(AlphaThresholdSearch {
        alpha_minus,
        alpha_plus,
        evaluations,
    })
}
