//! Discrete Lp norms and Sobolev seminorms with node-wise midpoint quadrature.
//!
//! All reductions run in flat node order with compensated (Neumaier)
//! accumulation, so results are deterministic across runs and platforms with
//! the same floating-point semantics.

use super::{gradient, GridFunction};
use crate::error::{Error, Result};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Discrete Lp norm: `(sum_nodes |u(node)|^p h^n)^(1/p)` with the Euclidean
/// norm over components; `p = infinity` returns the max node-wise magnitude.
pub fn lp_norm(u: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("Lp exponent must be >= 1, got {}", p)));
    }
    let dom = u.domain();
    if p.is_infinite() {
        let mut best = 0.0f64;
        for node in 0..dom.n_nodes() {
            let m = u.magnitude(node);
            if m > best {
                best = m;
            }
        }
        return Ok(best);
    }
    let hn = dom.cell_volume();
    let mut acc = CompensatedSum::new();
    if p == 2.0 {
        for node in 0..dom.n_nodes() {
            let m = u.magnitude(node);
            acc.add(m * m);
        }
    } else if p == 1.0 {
        for node in 0..dom.n_nodes() {
            acc.add(u.magnitude(node));
        }
    } else {
        for node in 0..dom.n_nodes() {
            let m = u.magnitude(node);
            if m > 0.0 {
                acc.add(m.powf(p));
            }
        }
    }
    let total = acc.value() * hn;
    Ok(if p == 2.0 { total.sqrt() } else { total.powf(1.0 / p) })
}

/// `||D^k u||_{L^q}`: Lq norm of the order-k gradient.
pub fn sobolev_seminorm(u: &GridFunction, k: usize, q: f64) -> Result<f64> {
    lp_norm(&gradient(u, k)?, q)
}
