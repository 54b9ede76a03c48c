//! Finite-difference derivatives of grid functions.
//!
//! First derivatives use centered second-order differences at interior nodes
//! whose axis neighbors are both interior, and one-sided first-order
//! differences at interior nodes adjacent to the mask edge. Higher orders are
//! built by composing first derivatives, so gradient linearity is exact.

use super::{GridDomain, GridFunction};
use crate::error::{Error, Result};

/// Largest supported derivative order.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// All multi-indices of total order `k` over `dim` axes, lexicographically
/// descending: for dim 3, order 2 this is (2,0,0), (1,1,0), (1,0,1), (0,2,0),
/// (0,1,1), (0,0,2).
pub fn multi_indices(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, rest: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=rest).rev() {
            prefix.push(first);
            rec(dim, rest - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, k, &mut Vec::new(), &mut out);
    out
}

/// One first derivative along `axis` of a single component field laid out one
/// value per node. Output is zero on non-interior nodes.
fn first_derivative(dom: &GridDomain, field: &[f64], axis: usize, out: &mut [f64]) {
    let h = dom.spacing();
    let stride = {
        // stride for the axis: product of extents of later axes
        let mut s = 1usize;
        for d in (axis + 1)..dom.dim() {
            s *= dom.extents()[d];
        }
        s
    };
    out.iter_mut().for_each(|v| *v = 0.0);
    let extent = dom.extents()[axis];
    let mut idx = [0usize; super::MAX_DIM];
    for &node in dom.interior_nodes() {
        dom.decode(node, &mut idx[..dom.dim()]);
        let i = idx[axis];
        // Interior nodes never sit on the outer layer, so both lattice
        // neighbors exist; what matters is whether they are interior.
        debug_assert!(i > 0 && i + 1 < extent);
        let plus = node + stride;
        let minus = node - stride;
        let plus_in = dom.is_interior(plus);
        let minus_in = dom.is_interior(minus);
        out[node] = if plus_in && minus_in {
            (field[plus] - field[minus]) / (2.0 * h)
        } else if plus_in {
            (field[plus] - field[node]) / h
        } else if minus_in {
            (field[node] - field[minus]) / h
        } else {
            0.0
        };
    }
}

/// All partial derivatives `D^beta u` with `|beta| = k`.
///
/// The output has `u.components() * multi_indices(dim, k).len()` components,
/// input-component major, multi-indices in the [`multi_indices`] order.
pub fn gradient(u: &GridFunction, k: usize) -> Result<GridFunction> {
    if k == 0 {
        return Err(Error::InvalidParameter("derivative order must be >= 1".into()));
    }
    if k > MAX_DERIVATIVE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "derivative order {} exceeds supported stencil depth {}",
            k, MAX_DERIVATIVE_ORDER
        )));
    }
    let dom = u.domain();
    let dim = dom.dim();
    let n = dom.n_nodes();
    let betas = multi_indices(dim, k);
    let out_comps = u.components() * betas.len();
    let mut values = vec![0.0; n * out_comps];

    let mut field = vec![0.0; n];
    let mut work = vec![0.0; n];
    for c in 0..u.components() {
        for (bi, beta) in betas.iter().enumerate() {
            for node in 0..n {
                field[node] = u.value(node, c);
            }
            for (axis, &times) in beta.iter().enumerate() {
                for _ in 0..times {
                    first_derivative(dom, &field, axis, &mut work);
                    std::mem::swap(&mut field, &mut work);
                }
            }
            let oc = c * betas.len() + bi;
            for node in 0..n {
                values[node * out_comps + oc] = field[node];
            }
        }
    }
    Ok(GridFunction::from_values_masked(
        std::sync::Arc::clone(dom),
        out_comps,
        values,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, DomainShape};

    fn deep_interior_nodes(dom: &GridDomain, margin: usize) -> Vec<usize> {
        let mut idx = [0usize; super::super::MAX_DIM];
        dom.interior_nodes()
            .iter()
            .copied()
            .filter(|&node| {
                dom.decode(node, &mut idx[..dom.dim()]);
                idx.iter()
                    .zip(dom.extents())
                    .all(|(&i, &e)| i >= margin && i + margin < e)
            })
            .collect()
    }

    /// Nodes inside a fixed physical box, so refinement levels compare errors
    /// over the same region.
    fn nodes_in_box(dom: &GridDomain, half_width: f64) -> Vec<usize> {
        let mut x = vec![0.0; dom.dim()];
        dom.interior_nodes()
            .iter()
            .copied()
            .filter(|&node| {
                dom.point(node, &mut x);
                x.iter().all(|v| v.abs() <= half_width)
            })
            .collect()
    }

    #[test]
    fn multi_index_enumeration_is_lexicographic() {
        let b = multi_indices(3, 2);
        assert_eq!(
            b,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
        assert_eq!(multi_indices(3, 1).len(), 3);
        assert_eq!(multi_indices(5, 2).len(), 15);
    }

    #[test]
    fn constant_field_has_zero_gradient_deep_inside() {
        let dom = build_domain(&DomainShape::Cube { side: 1.0 }, 9, 3).unwrap();
        let u = GridFunction::sample_scalar(&dom, |_| 3.5).unwrap();
        let g = gradient(&u, 1).unwrap();
        for node in deep_interior_nodes(&dom, 2) {
            for c in 0..3 {
                assert_eq!(g.value(node, c), 0.0);
            }
        }
    }

    #[test]
    fn linear_field_has_exact_gradient() {
        let dom = build_domain(&DomainShape::Cube { side: 1.0 }, 9, 3).unwrap();
        let u = GridFunction::sample_scalar(&dom, |x| x[0]).unwrap();
        let g = gradient(&u, 1).unwrap();
        for node in deep_interior_nodes(&dom, 2) {
            assert!((g.value(node, 0) - 1.0).abs() < 1e-13);
            assert!(g.value(node, 1).abs() < 1e-14);
            assert!(g.value(node, 2).abs() < 1e-14);
        }
    }

    #[test]
    fn second_derivatives_converge_at_second_order() {
        // u = sin(x1) cos(x2); deep-interior error ratio between h and h/2
        // must sit in [3.4, 4.6].
        let analytic = |x: &[f64], beta: &[usize]| -> f64 {
            match (beta[0], beta[1], beta[2]) {
                (2, 0, 0) => -x[0].sin() * x[1].cos(),
                (1, 1, 0) => -x[0].cos() * x[1].sin(),
                (1, 0, 1) => 0.0,
                (0, 2, 0) => -x[0].sin() * x[1].cos(),
                (0, 1, 1) => 0.0,
                (0, 0, 2) => 0.0,
                _ => unreachable!(),
            }
        };
        let mut errors = Vec::new();
        for n in [17, 33] {
            let dom = build_domain(&DomainShape::Cube { side: 2.0 }, n, 3).unwrap();
            let u = GridFunction::sample_scalar(&dom, |x| x[0].sin() * x[1].cos()).unwrap();
            let g = gradient(&u, 2).unwrap();
            let betas = multi_indices(3, 2);
            let mut x = vec![0.0; 3];
            let mut max_err = 0.0f64;
            for node in nodes_in_box(&dom, 0.4) {
                dom.point(node, &mut x);
                for (bi, beta) in betas.iter().enumerate() {
                    let err = (g.value(node, bi) - analytic(&x, beta)).abs();
                    max_err = max_err.max(err);
                }
            }
            errors.push(max_err);
        }
        let ratio = errors[0] / errors[1];
        assert!(
            (3.4..=4.6).contains(&ratio),
            "refinement ratio {} outside [3.4, 4.6] (errors {:?})",
            ratio,
            errors
        );
    }

    #[test]
    fn gradient_is_exactly_linear() {
        let dom = build_domain(&DomainShape::Ball { radius: 1.0 }, 9, 3).unwrap();
        let u = GridFunction::sample_scalar(&dom, |x| (x[0] * 2.1).sin() + x[1]).unwrap();
        let v = GridFunction::sample_scalar(&dom, |x| x[2] * x[2] - 0.3 * x[0]).unwrap();
        let (a, b) = (1.75, -0.5);
        let lhs = gradient(&GridFunction::combine(a, &u, b, &v).unwrap(), 2).unwrap();
        let gu = gradient(&u, 2).unwrap();
        let gv = gradient(&v, 2).unwrap();
        let rhs = GridFunction::combine(a, &gu, b, &gv).unwrap();
        // same stencils on both sides; differences are pure rounding
        for node in 0..dom.n_nodes() {
            for c in 0..lhs.components() {
                let d = (lhs.value(node, c) - rhs.value(node, c)).abs();
                let scale = lhs.value(node, c).abs().max(1.0);
                assert!(d <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn order_above_four_is_rejected() {
        let dom = build_domain(&DomainShape::Cube { side: 1.0 }, 9, 3).unwrap();
        let u = GridFunction::sample_scalar(&dom, |x| x[0]).unwrap();
        assert!(gradient(&u, 5).is_err());
        assert!(gradient(&u, 0).is_err());
    }
}
