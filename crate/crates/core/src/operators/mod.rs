//! Discrete realizations of the three operator families: scalar divergence
//! form with variable coefficients, the 3D Lame system, and the polyharmonic
//! operator, plus sparse assembly and Dirichlet solvers.
//!
//! `apply` and `assemble` share one stencil enumeration per operator, so the
//! assembled matrix reproduces `apply` bit-for-bit on masked data.

mod solve;
pub mod sparse;

pub use solve::{
    gather_interior, green_column, scatter_interior, solve_dirichlet, GreenColumn, SolveConfig,
    SolveMethod,
};
pub use sparse::{CsrBuilder, CsrMatrix};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridFunction, MAX_DIM};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Per-node coefficient data for the scalar divergence-form operator.
#[derive(Debug, Clone)]
pub enum CoefficientField {
    /// a = I everywhere (the negative Laplacian).
    Identity,
    /// a(x) = c(x) I, one scalar per node.
    Isotropic(Vec<f64>),
    /// Full symmetric tensor per node, packed row-major upper triangle
    /// (n (n+1) / 2 entries per node).
    Tensor { dim: usize, data: Vec<f64> },
}

impl CoefficientField {
    #[inline]
    fn isotropic_at(&self, node: usize) -> f64 {
        match self {
            CoefficientField::Identity => 1.0,
            CoefficientField::Isotropic(v) => v[node],
            CoefficientField::Tensor { .. } => unreachable!("tensor field in isotropic path"),
        }
    }

    /// Entry a_ij at a node, for the tensor variant.
    #[inline]
    fn tensor_at(&self, node: usize, i: usize, j: usize) -> f64 {
        match self {
            CoefficientField::Tensor { dim, data } => {
                let (r, c) = if i <= j { (i, j) } else { (j, i) };
                // offset of (r, c) in the packed upper triangle
                let per_node = dim * (dim + 1) / 2;
                let off = r * dim - r * (r + 1) / 2 + c;
                data[node * per_node + off]
            }
            _ => {
                if i == j {
                    self.isotropic_at(node)
                } else {
                    0.0
                }
            }
        }
    }

    fn is_diagonal(&self) -> bool {
        !matches!(self, CoefficientField::Tensor { .. })
    }
}

/// Scalar second-order operator `Lu = -D_i(a_ij(x) D_j u)` with the strong
/// ellipticity sandwich `lambda |xi|^2 <= a xi . xi <= lambda_upper |xi|^2`.
#[derive(Debug, Clone)]
pub struct ScalarDivForm {
    coeff: CoefficientField,
    lambda: f64,
    lambda_upper: f64,
    n_nodes: usize,
    dim: usize,
}

impl ScalarDivForm {
    /// The negative Laplacian (a = I, lambda = Lambda = 1) in any dimension.
    pub fn laplacian() -> ScalarDivForm {
        ScalarDivForm {
            coeff: CoefficientField::Identity,
            lambda: 1.0,
            lambda_upper: 1.0,
            n_nodes: 0,
            dim: 0,
        }
    }

    /// Sample an isotropic coefficient a(x) = c(x) I on the nodes of `dom`.
    pub fn isotropic(
        dom: &Arc<GridDomain>,
        c: impl Fn(&[f64]) -> f64,
        lambda: f64,
        lambda_upper: f64,
    ) -> Result<ScalarDivForm> {
        check_ellipticity_bounds(lambda, lambda_upper)?;
        let mut data = vec![0.0; dom.n_nodes()];
        let mut x = vec![0.0; dom.dim()];
        for node in 0..dom.n_nodes() {
            dom.point(node, &mut x);
            let v = c(&x);
            if !(v >= lambda && v <= lambda_upper) {
                return Err(Error::InvalidParameter(format!(
                    "coefficient {} at node {} violates [{}, {}]",
                    v, node, lambda, lambda_upper
                )));
            }
            data[node] = v;
        }
        Ok(ScalarDivForm {
            coeff: CoefficientField::Isotropic(data),
            lambda,
            lambda_upper,
            n_nodes: dom.n_nodes(),
            dim: dom.dim(),
        })
    }

    /// Sample a full symmetric tensor field; ellipticity is checked at every
    /// node against 100 fixed quasi-random unit directions.
    pub fn tensor(
        dom: &Arc<GridDomain>,
        a: impl Fn(&[f64], usize, usize) -> f64,
        lambda: f64,
        lambda_upper: f64,
    ) -> Result<ScalarDivForm> {
        check_ellipticity_bounds(lambda, lambda_upper)?;
        let dim = dom.dim();
        let per_node = dim * (dim + 1) / 2;
        let mut data = vec![0.0; dom.n_nodes() * per_node];
        let mut x = vec![0.0; dim];
        for node in 0..dom.n_nodes() {
            dom.point(node, &mut x);
            let mut k = 0;
            for i in 0..dim {
                for j in i..dim {
                    data[node * per_node + k] = a(&x, i, j);
                    k += 1;
                }
            }
        }
        let field = CoefficientField::Tensor { dim, data };

        let directions = unit_directions(dim, 100, ELLIPTICITY_SEED);
        for node in 0..dom.n_nodes() {
            for xi in &directions {
                let mut quad = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        quad += field.tensor_at(node, i, j) * xi[i] * xi[j];
                    }
                }
                if quad < lambda * (1.0 - 1e-12) || quad > lambda_upper * (1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "ellipticity violated at node {}: quadratic form {} outside [{}, {}]",
                        node, quad, lambda, lambda_upper
                    )));
                }
            }
        }
        Ok(ScalarDivForm {
            coeff: field,
            lambda,
            lambda_upper,
            n_nodes: dom.n_nodes(),
            dim,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_upper(&self) -> f64 {
        self.lambda_upper
    }

    /// True for the plain negative Laplacian (a = I).
    pub fn is_identity(&self) -> bool {
        matches!(self.coeff, CoefficientField::Identity)
    }

    fn check_domain(&self, dom: &GridDomain) -> Result<()> {
        if self.n_nodes != 0 && (self.n_nodes != dom.n_nodes() || self.dim != dom.dim()) {
            return Err(Error::ShapeMismatch(
                "coefficient field was sampled on a different grid".into(),
            ));
        }
        Ok(())
    }
}

const ELLIPTICITY_SEED: u64 = 0x45504c_01;

fn check_ellipticity_bounds(lambda: f64, lambda_upper: f64) -> Result<()> {
    if !(lambda > 0.0) || !(lambda_upper >= lambda) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < lambda <= Lambda, got lambda={}, Lambda={}",
            lambda, lambda_upper
        )));
    }
    Ok(())
}

fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        // Box-Muller pairs give an isotropic Gaussian to normalize.
        let mut v = vec![0.0; dim];
        for d in 0..dim {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            v[d] = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    out
}

/// One of the three operator families.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    ScalarDivForm(ScalarDivForm),
    /// `Lu = -Delta u - alpha grad div u` in dimension 3, alpha > -1.
    Lame3d { alpha: f64 },
    /// `(-Delta)^m` in dimension n > 2m.
    Polyharmonic { m: usize },
}

impl OperatorSpec {
    pub fn laplacian() -> OperatorSpec {
        OperatorSpec::ScalarDivForm(ScalarDivForm::laplacian())
    }

    pub fn lame(alpha: f64) -> Result<OperatorSpec> {
        if !(alpha > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "Lame parameter alpha must exceed -1, got {}",
                alpha
            )));
        }
        Ok(OperatorSpec::Lame3d { alpha })
    }

    pub fn polyharmonic(m: usize) -> Result<OperatorSpec> {
        if m < 1 {
            return Err(Error::InvalidParameter("polyharmonic order must be >= 1".into()));
        }
        Ok(OperatorSpec::Polyharmonic { m })
    }

    /// Poisson ratio nu with alpha = 1 / (1 - 2 nu); undefined at alpha = 0.
    pub fn poisson_ratio(&self) -> Option<f64> {
        match self {
            OperatorSpec::Lame3d { alpha } if *alpha != 0.0 => Some(0.5 * (1.0 - 1.0 / alpha)),
            _ => None,
        }
    }

    /// Component count of admissible arguments.
    pub fn components(&self) -> usize {
        match self {
            OperatorSpec::Lame3d { .. } => 3,
            _ => 1,
        }
    }

    /// Half the operator order (m): 1 for the second-order families.
    pub fn half_order(&self) -> usize {
        match self {
            OperatorSpec::Polyharmonic { m } => *m,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorSpec::ScalarDivForm(s) => match s.coeff {
                CoefficientField::Identity => "laplacian",
                CoefficientField::Isotropic(_) => "scalar-div-form-isotropic",
                CoefficientField::Tensor { .. } => "scalar-div-form-tensor",
            },
            OperatorSpec::Lame3d { .. } => "lame3d",
            OperatorSpec::Polyharmonic { .. } => "polyharmonic",
        }
    }

    pub fn validate_for(&self, dom: &GridDomain, components: usize) -> Result<()> {
        if components != self.components() {
            return Err(Error::ShapeMismatch(format!(
                "{} expects {} components, got {}",
                self.name(),
                self.components(),
                components
            )));
        }
        match self {
            OperatorSpec::ScalarDivForm(s) => s.check_domain(dom),
            OperatorSpec::Lame3d { .. } => {
                if dom.dim() != 3 {
                    return Err(Error::ShapeMismatch(format!(
                        "Lame system requires dimension 3, got {}",
                        dom.dim()
                    )));
                }
                Ok(())
            }
            OperatorSpec::Polyharmonic { m } => {
                if dom.dim() <= 2 * m {
                    return Err(Error::InvalidParameter(format!(
                        "polyharmonic order {} needs dimension > {}, got {}",
                        m,
                        2 * m,
                        dom.dim()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Stencil row of the scalar divergence-form operator at an interior node.
///
/// Emission order is fixed: per axis the minus/plus flux neighbors, then the
/// cross-term corners for tensor coefficients, then the diagonal.
fn scalar_row(
    sdf: &ScalarDivForm,
    dom: &GridDomain,
    node: usize,
    emit: &mut impl FnMut(usize, f64),
) {
    let dim = dom.dim();
    let h = dom.spacing();
    let inv_h2 = 1.0 / (h * h);
    let mut idx = [0usize; MAX_DIM];
    dom.decode(node, &mut idx[..dim]);
    let mut stride = [0usize; MAX_DIM];
    {
        let mut s = 1usize;
        for d in (0..dim).rev() {
            stride[d] = s;
            s *= dom.extents()[d];
        }
    }

    let mut diag = 0.0;
    for d in 0..dim {
        // Interior nodes are never on the outer layer, so both neighbors exist.
        let minus = node - stride[d];
        let plus = node + stride[d];
        let (a_minus, a_plus) = if sdf.coeff.is_diagonal() {
            (
                0.5 * (sdf.coeff.isotropic_at(node) + sdf.coeff.isotropic_at(minus)),
                0.5 * (sdf.coeff.isotropic_at(node) + sdf.coeff.isotropic_at(plus)),
            )
        } else {
            (
                0.5 * (sdf.coeff.tensor_at(node, d, d) + sdf.coeff.tensor_at(minus, d, d)),
                0.5 * (sdf.coeff.tensor_at(node, d, d) + sdf.coeff.tensor_at(plus, d, d)),
            )
        };
        emit(minus, -a_minus * inv_h2);
        emit(plus, -a_plus * inv_h2);
        diag += (a_minus + a_plus) * inv_h2;
    }

    if !sdf.coeff.is_diagonal() {
        // Cross terms in the symmetric centered-divergence form:
        // -(D_i^c a_ij D_j^c + D_j^c a_ij D_i^c) u, expanded to corner entries.
        let inv_4h2 = 0.25 * inv_h2;
        for i in 0..dim {
            for j in (i + 1)..dim {
                for (outer, inner) in [(i, j), (j, i)] {
                    let a_fwd = sdf.coeff.tensor_at(node + stride[outer], i, j);
                    let a_bwd = sdf.coeff.tensor_at(node - stride[outer], i, j);
                    let fwd = node + stride[outer];
                    let bwd = node - stride[outer];
                    emit(fwd + stride[inner], -a_fwd * inv_4h2);
                    emit(fwd - stride[inner], a_fwd * inv_4h2);
                    emit(bwd + stride[inner], a_bwd * inv_4h2);
                    emit(bwd - stride[inner], -a_bwd * inv_4h2);
                }
            }
        }
    }

    emit(node, diag);
}

/// Stencil row of the Lame operator for output component `comp` at `node`.
fn lame_row(
    alpha: f64,
    dom: &GridDomain,
    node: usize,
    comp: usize,
    emit: &mut impl FnMut(usize, usize, f64),
) {
    let h = dom.spacing();
    let inv_h2 = 1.0 / (h * h);
    let mut stride = [0usize; MAX_DIM];
    {
        let mut s = 1usize;
        for d in (0..3).rev() {
            stride[d] = s;
            s *= dom.extents()[d];
        }
    }

    // -Delta on the own component, with the k = comp part of
    // -alpha D_{k comp} u_k folded into the same axis stencil.
    let mut diag = 0.0;
    for d in 0..3 {
        let coef = if d == comp { 1.0 + alpha } else { 1.0 };
        emit(node - stride[d], comp, -coef * inv_h2);
        emit(node + stride[d], comp, -coef * inv_h2);
        diag += 2.0 * coef * inv_h2;
    }

    // Mixed terms -alpha D_{k comp} u_k for k != comp: centered 4-point cross.
    let inv_4h2 = 0.25 * inv_h2;
    for k in 0..3 {
        if k == comp {
            continue;
        }
        let pk = node + stride[k];
        let mk = node - stride[k];
        emit(pk + stride[comp], k, -alpha * inv_4h2);
        emit(pk - stride[comp], k, alpha * inv_4h2);
        emit(mk + stride[comp], k, alpha * inv_4h2);
        emit(mk - stride[comp], k, -alpha * inv_4h2);
    }

    emit(node, comp, diag);
}

fn apply_scalar_pass(sdf: &ScalarDivForm, dom: &GridDomain, input: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for &node in dom.interior_nodes() {
        let mut acc = 0.0;
        scalar_row(sdf, dom, node, &mut |nb, coeff| {
            acc += coeff * input[nb];
        });
        out[node] = acc;
    }
}

/// Apply the discrete operator; the result is zero on non-interior nodes.
pub fn apply(op: &OperatorSpec, u: &GridFunction) -> Result<GridFunction> {
    let dom = u.domain();
    op.validate_for(dom, u.components())?;
    match op {
        OperatorSpec::ScalarDivForm(sdf) => {
            let mut out = vec![0.0; dom.n_nodes()];
            apply_scalar_pass(sdf, dom, u.values(), &mut out);
            Ok(GridFunction::from_values_masked(Arc::clone(dom), 1, out))
        }
        OperatorSpec::Lame3d { alpha } => {
            let mut out = vec![0.0; dom.n_nodes() * 3];
            let values = u.values();
            for &node in dom.interior_nodes() {
                for comp in 0..3 {
                    let mut acc = 0.0;
                    lame_row(*alpha, dom, node, comp, &mut |nb, c, coeff| {
                        acc += coeff * values[nb * 3 + c];
                    });
                    out[node * 3 + comp] = acc;
                }
            }
            Ok(GridFunction::from_values_masked(Arc::clone(dom), 3, out))
        }
        OperatorSpec::Polyharmonic { m } => {
            // Iterated masked Laplacian: the discrete reading of the
            // intermediate zero-trace conditions.
            let lap = ScalarDivForm::laplacian();
            let mut field = u.values().to_vec();
            let mut work = vec![0.0; dom.n_nodes()];
            for _ in 0..*m {
                apply_scalar_pass(&lap, dom, &field, &mut work);
                std::mem::swap(&mut field, &mut work);
            }
            Ok(GridFunction::from_values_masked(Arc::clone(dom), 1, field))
        }
    }
}

/// Assemble the operator over interior unknowns.
///
/// Row and column indexing is node-major, component-minor: the dof of
/// interior node position `p` (in `dom.interior_nodes()` order) and component
/// `c` is `p * components + c`.
pub fn assemble(op: &OperatorSpec, dom: &Arc<GridDomain>) -> Result<CsrMatrix> {
    op.validate_for(dom, op.components())?;
    let mut interior_pos = vec![usize::MAX; dom.n_nodes()];
    for (p, &node) in dom.interior_nodes().iter().enumerate() {
        interior_pos[node] = p;
    }
    match op {
        OperatorSpec::ScalarDivForm(sdf) => {
            let n = dom.n_interior();
            let mut builder = CsrBuilder::new(n, n);
            for &node in dom.interior_nodes() {
                scalar_row(sdf, dom, node, &mut |nb, coeff| {
                    let p = interior_pos[nb];
                    if p != usize::MAX {
                        builder.push(p, coeff);
                    }
                });
                builder.finish_row();
            }
            Ok(builder.build())
        }
        OperatorSpec::Lame3d { alpha } => {
            let n = dom.n_interior() * 3;
            let mut builder = CsrBuilder::new(n, n);
            for &node in dom.interior_nodes() {
                for comp in 0..3 {
                    lame_row(*alpha, dom, node, comp, &mut |nb, c, coeff| {
                        let p = interior_pos[nb];
                        if p != usize::MAX {
                            builder.push(p * 3 + c, coeff);
                        }
                    });
                    builder.finish_row();
                }
            }
            Ok(builder.build())
        }
        OperatorSpec::Polyharmonic { m } => {
            let lap = assemble(&OperatorSpec::laplacian(), dom)?;
            let mut a = lap.clone();
            for _ in 1..*m {
                a = a.multiply(&lap)?;
            }
            Ok(a)
        }
    }
}

#[cfg(test)]
mod tests;
