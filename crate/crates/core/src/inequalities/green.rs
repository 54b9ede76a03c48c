//! Empirical two-sided kernel bounds for discrete Green functions:
//! `c1 |x - y|^{2-n} <= G(x, y) <= c2 |x - y|^{2-n}` on a window away from
//! both the pole and the boundary.

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::operators::{green_column, OperatorSpec, SolveConfig};
use std::sync::Arc;

/// Empirical sandwich constants (min, max) of `G(x, y0) |x - y0|^{n-2}` over
/// the window `3h <= |x - y0| <= dist(y0, mask) / 2`.
pub fn green_sandwich_check(
    op: &OperatorSpec,
    dom: &Arc<GridDomain>,
    y0: usize,
    cfg: &SolveConfig,
) -> Result<(f64, f64)> {
    if op.components() != 1 || matches!(op, OperatorSpec::Polyharmonic { m } if *m > 1) {
        return Err(Error::InvalidParameter(
            "Green sandwich bounds apply to scalar second-order operators".into(),
        ));
    }
    if y0 >= dom.n_nodes() || !dom.is_interior(y0) {
        return Err(Error::InvalidParameter(format!("window center {} is not interior", y0)));
    }
    let boundary_dist = dom.distance_to_mask(y0);
    let diameter = interior_diameter(dom);
    if boundary_dist < 0.25 * diameter {
        return Err(Error::InvalidParameter(format!(
            "window center must be deep interior: boundary distance {} < quarter diameter {}",
            boundary_dist,
            0.25 * diameter
        )));
    }

    let h = dom.spacing();
    let lo = 3.0 * h * (1.0 - 1e-12);
    let hi = 0.5 * boundary_dist * (1.0 + 1e-12);
    if lo > hi {
        return Err(Error::DegenerateDomain(
            "empty Green window: domain too small for 3h <= r <= dist/2".into(),
        ));
    }

    let g = green_column(op, dom, y0, cfg)?;
    let gs = g.scalar();
    let n = dom.dim() as i32;
    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    let mut count = 0usize;
    for &node in dom.interior_nodes() {
        let r = dom.node_distance(node, y0);
        if r < lo || r > hi {
            continue;
        }
        let scaled = gs.value(node, 0) * r.powi(n - 2);
        g_min = g_min.min(scaled);
        g_max = g_max.max(scaled);
        count += 1;
    }
    if count == 0 {
        return Err(Error::DegenerateDomain(
            "empty Green window: no nodes between 3h and half the boundary distance".into(),
        ));
    }
    Ok((g_min, g_max))
}

/// Diagonal of the interior bounding box.
fn interior_diameter(dom: &GridDomain) -> f64 {
    let dim = dom.dim();
    let mut lo = vec![usize::MAX; dim];
    let mut hi = vec![0usize; dim];
    let mut idx = [0usize; crate::grid::MAX_DIM];
    for &node in dom.interior_nodes() {
        dom.decode(node, &mut idx[..dim]);
        for d in 0..dim {
            lo[d] = lo[d].min(idx[d]);
            hi[d] = hi[d].max(idx[d]);
        }
    }
    let mut s = 0.0;
    for d in 0..dim {
        let e = (hi[d] - lo[d]) as f64;
        s += e * e;
    }
    s.sqrt() * dom.spacing()
}
