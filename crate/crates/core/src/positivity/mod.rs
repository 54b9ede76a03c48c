//! Weighted quadratic forms, their strong-positivity decomposition, and the
//! extremal Rayleigh machinery for probing weighted positive definiteness.

mod rayleigh;

pub use rayleigh::{
    alpha_threshold_search, bisect_sign_change, form_matrix, lame_min_eig, lanczos_min,
    min_rayleigh, AlphaSweepPoint, AlphaThresholdSearch, FormMatrix, RayleighResult,
    DEFAULT_SIGN_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::fundsol::WeightEvaluator;
use crate::grid::{gradient, CompensatedSum, GridDomain, GridFunction};
use crate::operators::{apply, green_column, OperatorSpec, SolveConfig};
use std::sync::Arc;

/// Excluded ball around the weight singularity defining the admissible class.
#[derive(Debug, Clone, Copy)]
pub struct PunctureSpec {
    pub center: usize,
    pub radius_cells: usize,
}

impl PunctureSpec {
    pub fn new(center: usize, radius_cells: usize) -> PunctureSpec {
        PunctureSpec {
            center,
            radius_cells,
        }
    }

    pub fn validate(&self, dom: &GridDomain) -> Result<()> {
        if self.radius_cells < 1 {
            return Err(Error::InvalidParameter("puncture radius must be >= 1 cell".into()));
        }
        if self.center >= dom.n_nodes() || !dom.is_interior(self.center) {
            return Err(Error::InvalidParameter(format!(
                "puncture center {} is not an interior node",
                self.center
            )));
        }
        let mut idx = [0usize; crate::grid::MAX_DIM];
        dom.decode(self.center, &mut idx[..dom.dim()]);
        for d in 0..dom.dim() {
            if idx[d] < self.radius_cells || idx[d] + self.radius_cells >= dom.extents()[d] {
                return Err(Error::InvalidParameter(format!(
                    "puncture ball of {} cells around node {} leaves the grid",
                    self.radius_cells, self.center
                )));
            }
        }
        Ok(())
    }

    /// True when `node` lies strictly outside the closed puncture ball.
    pub fn admits(&self, dom: &GridDomain, node: usize) -> bool {
        let r = dom.node_distance(node, self.center);
        r > self.radius_cells as f64 * dom.spacing() * (1.0 + 1e-12)
    }
}

/// Decomposition of the weighted form at one evaluation point.
#[derive(Debug, Clone)]
pub struct FormReport {
    pub form_value: f64,
    pub pointwise_term: f64,
    pub strong_terms: Vec<f64>,
    pub defect: f64,
    pub admissible_dim: usize,
}

fn check_weight_pairing(op: &OperatorSpec, w: &WeightEvaluator) -> Result<()> {
    if w.components() != op.components() {
        return Err(Error::ShapeMismatch(format!(
            "weight with {} components paired with operator {} expecting {}",
            w.components(),
            op.name(),
            op.components()
        )));
    }
    Ok(())
}

/// Offset-based nodes to skip: everything closer to the pole than
/// `max(regularization radius, h/2)`. Discrete Green weights are finite and
/// skip nothing.
fn skip_radius(w: &WeightEvaluator, dom: &GridDomain) -> f64 {
    if w.is_discrete() {
        -1.0
    } else {
        w.regularization_radius().max(dom.spacing() / 2.0)
    }
}

/// The weighted quadratic form
/// `Q = sum_y apply(op, u)(y) . w(x0 - y) u(y) h^n`,
/// skipping nodes inside the singular core of closed-form weights.
pub fn weighted_form(
    op: &OperatorSpec,
    w: &WeightEvaluator,
    u: &GridFunction,
    x0: usize,
) -> Result<f64> {
    let dom = u.domain();
    op.validate_for(dom, u.components())?;
    check_weight_pairing(op, w)?;
    if x0 >= dom.n_nodes() {
        return Err(Error::InvalidParameter(format!("evaluation node {} out of range", x0)));
    }
    if let Some(g) = w.discrete_column() {
        if g.center != x0 {
            return Err(Error::InvalidParameter(format!(
                "discrete Green weight is centered at {} but the form is evaluated at {}",
                g.center, x0
            )));
        }
    }

    let lu = apply(op, u)?;
    let hn = dom.cell_volume();
    let rskip = skip_radius(w, dom);
    let mut x0_point = vec![0.0; dom.dim()];
    dom.point(x0, &mut x0_point);
    let mut y_point = vec![0.0; dom.dim()];
    let mut offset = vec![0.0; dom.dim()];

    let mut acc = CompensatedSum::new();
    for &node in dom.interior_nodes() {
        let dist = dom.node_distance(node, x0);
        if dist < rskip {
            continue;
        }
        dom.point(node, &mut y_point);
        for d in 0..dom.dim() {
            offset[d] = x0_point[d] - y_point[d];
        }
        let term = match w.components() {
            1 => {
                let wv = if let Some(g) = w.discrete_column() {
                    g.columns[0].value(node, 0)
                } else {
                    w.eval_scalar(&offset)?
                };
                lu.value(node, 0) * wv * u.value(node, 0)
            }
            3 => {
                let mut t = 0.0;
                if let Some(g) = w.discrete_column() {
                    for i in 0..3 {
                        for j in 0..3 {
                            t += lu.value(node, i) * g.entry(node, i, j) * u.value(node, j);
                        }
                    }
                } else {
                    let phi = w.eval_matrix(&offset)?;
                    for i in 0..3 {
                        for j in 0..3 {
                            t += lu.value(node, i) * phi[i][j] * u.value(node, j);
                        }
                    }
                }
                t
            }
            other => {
                return Err(Error::ShapeMismatch(format!(
                    "unsupported weight component count {}",
                    other
                )))
            }
        };
        acc.add(term * hn);
    }
    Ok(acc.value())
}

/// Defect of the Green-weighted identity behind the scalar pointwise bound:
/// `sum_y Lu . G(x0, y) u |u|^(n-3) h^n  -  |u(x0)|^(n-1) / (n-1)`.
///
/// The contract is `defect >= -tol` with an O(h) boundary-layer allowance;
/// callers normalize by `||u||_inf^(n-1)`.
pub fn scalar_weighted_identity_check(
    op: &OperatorSpec,
    u: &GridFunction,
    x0: usize,
    cfg: &SolveConfig,
) -> Result<f64> {
    let dom = u.domain();
    if op.components() != 1 || matches!(op, OperatorSpec::Polyharmonic { m } if *m > 1) {
        return Err(Error::InvalidParameter(
            "the Green-weighted identity check applies to scalar second-order operators".into(),
        ));
    }
    op.validate_for(dom, u.components())?;
    if !dom.is_interior(x0) {
        return Err(Error::InvalidParameter(format!("evaluation node {} is not interior", x0)));
    }
    let n = dom.dim() as f64;

    // One Dirichlet solve for the Green column at x0; the operator is
    // symmetric, so the column equals G(x0, .).
    let g = green_column(op, dom, x0, cfg)?;
    let gs = g.scalar();
    let lu = apply(op, u)?;
    let hn = dom.cell_volume();

    let mut acc = CompensatedSum::new();
    for &node in dom.interior_nodes() {
        let uv = u.value(node, 0);
        let weight_power = if dom.dim() == 3 {
            uv
        } else {
            uv * uv.abs().powi(dom.dim() as i32 - 3)
        };
        acc.add(lu.value(node, 0) * gs.value(node, 0) * weight_power * hn);
    }
    let pointwise = u.value(x0, 0).abs().powf(n - 1.0) / (n - 1.0);
    Ok(acc.value() - pointwise)
}

/// Full strong-positivity decomposition at `x0` with a trial constant `c`:
/// `defect = Q - |u(x0)|^2 / 2 - c * sum_k strong_k`.
///
/// For the Lame pairing the strong term uses the plain `|x|^{-1}` weighting;
/// every other pairing uses `|x|^{2k-2m} |Psi(x)|` with the Frobenius
/// magnitude of the weight.
pub fn strong_defect(
    op: &OperatorSpec,
    w: &WeightEvaluator,
    u: &GridFunction,
    x0: usize,
    c: f64,
) -> Result<FormReport> {
    let dom = u.domain();
    let q = weighted_form(op, w, u, x0)?;
    let u_at = u.magnitude(x0);
    let pointwise = 0.5 * u_at * u_at;
    let m = op.half_order();
    let hn = dom.cell_volume();
    let rskip = skip_radius(w, dom).max(dom.spacing() / 2.0);
    let lame_weighting = matches!(op, OperatorSpec::Lame3d { .. });

    let mut x0_point = vec![0.0; dom.dim()];
    dom.point(x0, &mut x0_point);
    let mut y_point = vec![0.0; dom.dim()];
    let mut offset = vec![0.0; dom.dim()];

    let mut strong_terms = Vec::with_capacity(m);
    let mut admissible_dim = 0usize;
    for k in 1..=m {
        let dk = gradient(u, k)?;
        let mut acc = CompensatedSum::new();
        let mut count = 0usize;
        for &node in dom.interior_nodes() {
            let dist = dom.node_distance(node, x0);
            if dist < rskip {
                continue;
            }
            count += 1;
            dom.point(node, &mut y_point);
            for d in 0..dom.dim() {
                offset[d] = x0_point[d] - y_point[d];
            }
            let mag = dk.magnitude(node);
            let weight = if lame_weighting {
                1.0 / dist
            } else {
                let radial = dist.powi(2 * k as i32 - 2 * m as i32);
                let frob = if let Some(g) = w.discrete_column() {
                    let mut s = 0.0;
                    for j in 0..g.columns.len() {
                        for i in 0..g.columns[j].components() {
                            let v = g.entry(node, i, j);
                            s += v * v;
                        }
                    }
                    s.sqrt()
                } else {
                    w.frobenius(&offset)?
                };
                radial * frob
            };
            acc.add(mag * mag * weight * hn);
        }
        strong_terms.push(acc.value());
        admissible_dim = count * u.components();
    }

    let strong_sum: f64 = strong_terms.iter().sum();
    Ok(FormReport {
        form_value: q,
        pointwise_term: pointwise,
        strong_terms,
        defect: q - pointwise - c * strong_sum,
        admissible_dim,
    })
}

/// Zero-trace test field supported outside the puncture, for harnesses that
/// need admissible random inputs.
pub fn mask_to_admissible(
    u: &GridFunction,
    punct: &PunctureSpec,
) -> Result<GridFunction> {
    let dom = u.domain();
    punct.validate(dom)?;
    let nc = u.components();
    let mut values = u.values().to_vec();
    for node in 0..dom.n_nodes() {
        if !punct.admits(dom, node) {
            for c in 0..nc {
                values[node * nc + c] = 0.0;
            }
        }
    }
    Ok(GridFunction::from_values_masked(
        Arc::clone(dom),
        nc,
        values,
    ))
}
