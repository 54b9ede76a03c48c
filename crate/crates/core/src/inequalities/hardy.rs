//! Discrete Hardy-inequality ratios, single and chained.

use crate::error::{Error, Result};
use crate::grid::{gradient, lp_norm, CompensatedSum, GridFunction};

/// Ratio of the discrete Hardy inequality
/// `int |u|^q |x - c|^{-q} <= (q/(n-q))^q int |Du|^q`:
/// returns `numerator / ((q/(n-q))^q denominator)`, skipping the node at the
/// center. Contract: `<= 1 + tol(h)` for zero-trace u.
pub fn hardy_ratio(u: &GridFunction, center: usize, q: f64) -> Result<f64> {
    let dom = u.domain();
    let n = dom.dim() as f64;
    if !(q >= 1.0) || q >= n {
        return Err(Error::InvalidParameter(format!(
            "Hardy exponent needs 1 <= q < n = {}, got {}",
            n, q
        )));
    }
    if center >= dom.n_nodes() {
        return Err(Error::InvalidParameter(format!("center node {} out of range", center)));
    }
    let hn = dom.cell_volume();
    let mut num = CompensatedSum::new();
    for &node in dom.interior_nodes() {
        if node == center {
            continue;
        }
        let m = u.magnitude(node);
        if m == 0.0 {
            continue;
        }
        let d = dom.node_distance(node, center);
        num.add(m.powf(q) * d.powf(-q) * hn);
    }
    let grad = gradient(u, 1)?;
    let mut den = CompensatedSum::new();
    for &node in dom.interior_nodes() {
        let m = grad.magnitude(node);
        if m > 0.0 {
            den.add(m.powf(q) * hn);
        }
    }
    let constant = (q / (n - q)).powf(q);
    let denominator = constant * den.value();
    let numerator = num.value();
    if denominator == 0.0 {
        return if numerator == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InconsistentZero { lhs: numerator })
        };
    }
    Ok(numerator / denominator)
}

/// Chained Hardy ratio for the iterated inequality
/// `(int |u|^q |x-c|^{-kq})^{1/q} <= prod_{j=1..k} (r - j)^{-1} ||D^k u||_q`
/// with `r = n/q`. At k = 1 this is exactly `hardy_ratio^{1/q}`.
pub fn hardy_chain_ratio(u: &GridFunction, center: usize, q: f64, k: usize) -> Result<f64> {
    let dom = u.domain();
    let n = dom.dim() as f64;
    if k == 0 {
        return Err(Error::InvalidParameter("chain length k must be >= 1".into()));
    }
    if !(q >= 1.0) || k as f64 * q >= n {
        return Err(Error::InvalidParameter(format!(
            "chained Hardy needs k q < n: k = {}, q = {}, n = {}",
            k, q, n
        )));
    }
    if center >= dom.n_nodes() {
        return Err(Error::InvalidParameter(format!("center node {} out of range", center)));
    }
    let hn = dom.cell_volume();
    let mut num = CompensatedSum::new();
    for &node in dom.interior_nodes() {
        if node == center {
            continue;
        }
        let m = u.magnitude(node);
        if m == 0.0 {
            continue;
        }
        let d = dom.node_distance(node, center);
        num.add(m.powf(q) * d.powf(-(k as f64) * q) * hn);
    }
    let lhs = num.value().powf(1.0 / q);

    let r = n / q;
    let mut constant = 1.0;
    for j in 1..=k {
        constant /= r - j as f64;
    }
    let rhs = constant * lp_norm(&gradient(u, k)?, q)?;
    if rhs == 0.0 {
        return if lhs == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InconsistentZero { lhs })
        };
    }
    Ok(lhs / rhs)
}
