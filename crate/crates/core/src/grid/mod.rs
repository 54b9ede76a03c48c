//! Masked uniform-grid domains in dimensions 3..=7, grid functions on them,
//! finite-difference derivatives, and discrete Lp / Sobolev norms.

mod derivative;
mod io;
mod norms;

pub use derivative::{gradient, multi_indices, MAX_DERIVATIVE_ORDER};
pub use io::{read_grid_function, write_grid_function};
pub use norms::{lp_norm, sobolev_seminorm, CompensatedSum};

use crate::error::{Error, Result};
use std::sync::Arc;

pub const MIN_DIM: usize = 3;
pub const MAX_DIM: usize = 7;
pub const MIN_NODES_PER_AXIS: usize = 5;

/// Bounded region used to mask the uniform grid.
///
/// All shapes are centered at the origin. `contains` tests the open region;
/// nodes on the topological boundary are masked, which is what imposes the
/// zero-trace condition.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainShape {
    Ball { radius: f64 },
    Cube { side: f64 },
    /// Cube with a corner column removed: the closed set
    /// `{ x1 >= a, x2 >= a }` with `a = side * (1/2 - notch)`.
    LShape { side: f64, notch: f64 },
    /// Cube with an internal crack: the closed slab
    /// `{ x1 >= 0, |x2| <= slit_width / 2 }`.
    SlitCube { side: f64, slit_width: f64 },
}

impl DomainShape {
    /// Half-width of the bounding box the grid spans.
    pub fn half_width(&self) -> f64 {
        match self {
            DomainShape::Ball { radius } => *radius,
            DomainShape::Cube { side }
            | DomainShape::LShape { side, .. }
            | DomainShape::SlitCube { side, .. } => side / 2.0,
        }
    }

    /// Open-region membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainShape::Ball { radius } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                r2 < radius * radius
            }
            DomainShape::Cube { side } => x.iter().all(|v| v.abs() < side / 2.0),
            DomainShape::LShape { side, notch } => {
                let inside_cube = x.iter().all(|v| v.abs() < side / 2.0);
                let a = side * (0.5 - notch);
                inside_cube && !(x[0] >= a && x[1] >= a)
            }
            DomainShape::SlitCube { side, slit_width } => {
                let inside_cube = x.iter().all(|v| v.abs() < side / 2.0);
                inside_cube && !(x[0] >= 0.0 && x[1].abs() <= slit_width / 2.0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DomainShape::Ball { radius } => *radius > 0.0,
            DomainShape::Cube { side } => *side > 0.0,
            DomainShape::LShape { side, notch } => *side > 0.0 && *notch > 0.0 && *notch < 1.0,
            DomainShape::SlitCube { side, slit_width } => {
                *side > 0.0 && *slit_width > 0.0 && *slit_width < *side
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "shape parameters must be strictly positive and feasible: {:?}",
                self
            )))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainShape::Ball { .. } => "ball",
            DomainShape::Cube { .. } => "cube",
            DomainShape::LShape { .. } => "lshape",
            DomainShape::SlitCube { .. } => "slitcube",
        }
    }
}

/// Masked uniform Cartesian grid over a bounded region of R^n.
///
/// Node flat indices are row-major with the last axis fastest; node `d`-th
/// coordinate is `origin[d] + index[d] * spacing`. Immutable after
/// construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct GridDomain {
    dim: usize,
    extents: Vec<usize>,
    spacing: f64,
    origin: Vec<f64>,
    interior_mask: Vec<bool>,
    strides: Vec<usize>,
    n_nodes: usize,
    interior_nodes: Vec<usize>,
}

impl GridDomain {
    /// Build a domain from an explicit mask, enforcing the zero-trace layer.
    ///
    /// The mask is forced to `false` on the first and last layer of every
    /// axis regardless of input.
    pub fn from_mask(
        extents: Vec<usize>,
        spacing: f64,
        origin: Vec<f64>,
        mut interior_mask: Vec<bool>,
    ) -> Result<Arc<GridDomain>> {
        let dim = extents.len();
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension {} outside supported range {}..={}",
                dim, MIN_DIM, MAX_DIM
            )));
        }
        if extents.iter().any(|&e| e < MIN_NODES_PER_AXIS) {
            return Err(Error::InvalidParameter(format!(
                "every axis needs at least {} nodes, got {:?}",
                MIN_NODES_PER_AXIS, extents
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("spacing must be positive, got {}", spacing)));
        }
        if origin.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "origin has {} entries for dimension {}",
                origin.len(),
                dim
            )));
        }
        let n_nodes: usize = extents.iter().product();
        if interior_mask.len() != n_nodes {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} entries for {} nodes",
                interior_mask.len(),
                n_nodes
            )));
        }

        let mut strides = vec![1usize; dim];
        for d in (0..dim.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * extents[d + 1];
        }

        // Zero-trace enforcement: outer layers are never interior.
        let mut idx = vec![0usize; dim];
        for node in 0..n_nodes {
            decode_index(node, &extents, &mut idx);
            if idx
                .iter()
                .zip(&extents)
                .any(|(&i, &e)| i == 0 || i + 1 == e)
            {
                interior_mask[node] = false;
            }
        }

        let interior_nodes: Vec<usize> = (0..n_nodes).filter(|&n| interior_mask[n]).collect();
        if interior_nodes.is_empty() {
            return Err(Error::DegenerateDomain("interior mask is empty".to_string()));
        }

        Ok(Arc::new(GridDomain {
            dim,
            extents,
            spacing,
            origin,
            interior_mask,
            strides,
            n_nodes,
            interior_nodes,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    #[inline]
    pub fn is_interior(&self, node: usize) -> bool {
        self.interior_mask[node]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }

    /// Quadrature weight of one node: `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    #[inline]
    pub fn decode(&self, node: usize, idx: &mut [usize]) {
        decode_index(node, &self.extents, idx);
    }

    #[inline]
    pub fn encode(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(&i, &s)| i * s).sum()
    }

    /// Neighbor of `node` one step along `axis`; `None` past the grid edge.
    #[inline]
    pub fn neighbor(&self, node: usize, axis: usize, step: isize) -> Option<usize> {
        let mut idx = [0usize; MAX_DIM];
        self.decode(node, &mut idx[..self.dim]);
        let i = idx[axis] as isize + step;
        if i < 0 || i as usize >= self.extents[axis] {
            None
        } else {
            Some((node as isize + step * self.strides[axis] as isize) as usize)
        }
    }

    /// Coordinate of `node` along `axis`.
    #[inline]
    pub fn coord(&self, node: usize, axis: usize) -> f64 {
        let mut idx = [0usize; MAX_DIM];
        self.decode(node, &mut idx[..self.dim]);
        self.origin[axis] + idx[axis] as f64 * self.spacing
    }

    /// All coordinates of `node`, written into `out`.
    #[inline]
    pub fn point(&self, node: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIM];
        self.decode(node, &mut idx[..self.dim]);
        for d in 0..self.dim {
            out[d] = self.origin[d] + idx[d] as f64 * self.spacing;
        }
    }

    pub fn point_vec(&self, node: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.point(node, &mut out);
        out
    }

    /// Node with all indices `(extent - 1) / 2` (box center for odd extents).
    pub fn center_node(&self) -> usize {
        let idx: Vec<usize> = self.extents.iter().map(|&e| (e - 1) / 2).collect();
        self.encode(&idx)
    }

    /// Euclidean distance between two nodes.
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        let mut ia = [0usize; MAX_DIM];
        let mut ib = [0usize; MAX_DIM];
        self.decode(a, &mut ia[..self.dim]);
        self.decode(b, &mut ib[..self.dim]);
        let mut s = 0.0;
        for d in 0..self.dim {
            let dd = ia[d] as f64 - ib[d] as f64;
            s += dd * dd;
        }
        s.sqrt() * self.spacing
    }

    /// Distance from `node` to the nearest non-interior node, by expanding
    /// window search (the outer layers are always masked, so it terminates).
    pub fn distance_to_mask(&self, node: usize) -> f64 {
        let mut ci = [0usize; MAX_DIM];
        self.decode(node, &mut ci[..self.dim]);
        let max_extent = *self.extents.iter().max().unwrap();
        let mut best = f64::INFINITY;
        let mut w = 1isize;
        loop {
            // any node outside the current window is at least w h away
            if best <= w as f64 * self.spacing {
                return best;
            }
            let mut offset = vec![-w; self.dim];
            loop {
                let on_shell = offset.iter().any(|&o| o.abs() == w);
                if on_shell {
                    let mut ok = true;
                    let mut nb = 0usize;
                    let mut dist2 = 0.0;
                    for d in 0..self.dim {
                        let i = ci[d] as isize + offset[d];
                        if i < 0 || i as usize >= self.extents[d] {
                            ok = false;
                            break;
                        }
                        nb += i as usize * self.strides[d];
                        dist2 += (offset[d] * offset[d]) as f64;
                    }
                    if ok && !self.interior_mask[nb] {
                        let dist = dist2.sqrt() * self.spacing;
                        if dist < best {
                            best = dist;
                        }
                    }
                }
                let mut d = self.dim;
                let mut done = false;
                loop {
                    if d == 0 {
                        done = true;
                        break;
                    }
                    d -= 1;
                    offset[d] += 1;
                    if offset[d] <= w {
                        break;
                    }
                    offset[d] = -w;
                }
                if done {
                    break;
                }
            }
            w += 1;
            if w as usize > max_extent {
                return best;
            }
        }
    }

    /// Exact Euclidean distance to the nearest non-interior node for every
    /// node, by the separable lower-envelope distance transform (one
    /// parabola pass per axis); 0 on non-interior nodes.
    pub fn euclidean_clearance_map(&self) -> Vec<f64> {
        const FAR: f64 = 1e30;
        let mut d2: Vec<f64> = self
            .interior_mask
            .iter()
            .map(|&interior| if interior { FAR } else { 0.0 })
            .collect();

        let mut f = Vec::new();
        let mut g = Vec::new();
        let mut hull = Vec::new();
        let mut breaks = Vec::new();
        for axis in 0..self.dim {
            let extent = self.extents[axis];
            let stride = self.strides[axis];
            let lines = self.n_nodes / extent;
            let mut idx = vec![0usize; self.dim];
            for line in 0..lines {
                // decode the line index over the axes other than `axis`
                let mut rem = line;
                for d in (0..self.dim).rev() {
                    if d == axis {
                        continue;
                    }
                    idx[d] = rem % self.extents[d];
                    rem /= self.extents[d];
                }
                idx[axis] = 0;
                let base = self.encode(&idx);

                f.clear();
                f.extend((0..extent).map(|i| d2[base + i * stride]));
                dt_one_dimensional(&f, &mut g, &mut hull, &mut breaks);
                for i in 0..extent {
                    d2[base + i * stride] = g[i];
                }
            }
        }
        d2.iter_mut().for_each(|v| *v = v.sqrt() * self.spacing);
        d2
    }

    /// Lattice L1 distance (in cells) to the nearest non-interior node,
    /// by multi-source BFS over axis neighbors; 0 on non-interior nodes.
    pub fn l1_depth_map(&self) -> Vec<u32> {
        let mut depth = vec![u32::MAX; self.n_nodes];
        let mut queue = std::collections::VecDeque::new();
        for node in 0..self.n_nodes {
            if !self.interior_mask[node] {
                depth[node] = 0;
                queue.push_back(node);
            }
        }
        let mut idx = [0usize; MAX_DIM];
        while let Some(node) = queue.pop_front() {
            self.decode(node, &mut idx[..self.dim]);
            let d = depth[node];
            for axis in 0..self.dim {
                for step in [-1isize, 1] {
                    let i = idx[axis] as isize + step;
                    if i < 0 || i as usize >= self.extents[axis] {
                        continue;
                    }
                    let nb = (node as isize + step * self.strides[axis] as isize) as usize;
                    if depth[nb] > d + 1 {
                        depth[nb] = d + 1;
                        queue.push_back(nb);
                    }
                }
            }
        }
        depth
    }

    /// Interior node with the largest L1 depth (first in node order on ties).
    pub fn deepest_interior_node(&self) -> usize {
        let depth = self.l1_depth_map();
        let mut best = (0u32, self.interior_nodes[0]);
        for &node in &self.interior_nodes {
            if depth[node] > best.0 {
                best = (depth[node], node);
            }
        }
        best.1
    }

    /// True when every node within Euclidean distance `radius` of `center`
    /// is interior. Used to place test-function supports with a margin.
    pub fn ball_is_interior(&self, center: usize, radius: f64) -> bool {
        let h = self.spacing;
        let reach = (radius / h).ceil() as isize;
        let mut ci = [0usize; MAX_DIM];
        self.decode(center, &mut ci[..self.dim]);
        let mut offset = vec![-reach; self.dim];
        loop {
            let mut ok_index = true;
            let mut dist2 = 0.0;
            let mut node = 0usize;
            for d in 0..self.dim {
                let i = ci[d] as isize + offset[d];
                if i < 0 || i as usize >= self.extents[d] {
                    ok_index = false;
                    break;
                }
                dist2 += (offset[d] * offset[d]) as f64;
                node += i as usize * self.strides[d];
            }
            if ok_index {
                if dist2.sqrt() * h <= radius && !self.interior_mask[node] {
                    return false;
                }
            } else {
                // Part of the ball reaches outside the grid entirely.
                let mut dist2 = 0.0;
                for d in 0..self.dim {
                    dist2 += (offset[d] * offset[d]) as f64;
                }
                if dist2.sqrt() * h <= radius {
                    return false;
                }
            }
            // Advance the odometer.
            let mut d = self.dim;
            loop {
                if d == 0 {
                    return true;
                }
                d -= 1;
                offset[d] += 1;
                if offset[d] <= reach {
                    break;
                }
                offset[d] = -reach;
            }
        }
    }
}

#[inline]
fn decode_index(node: usize, extents: &[usize], idx: &mut [usize]) {
    let mut rem = node;
    for d in (0..extents.len()).rev() {
        idx[d] = rem % extents[d];
        rem /= extents[d];
    }
}

/// One pass of the squared-distance transform along a line:
/// `g[i] = min_j (i - j)^2 + f[j]` via the lower envelope of parabolas.
fn dt_one_dimensional(f: &[f64], g: &mut Vec<f64>, hull: &mut Vec<usize>, breaks: &mut Vec<f64>) {
    let n = f.len();
    hull.clear();
    breaks.clear();
    hull.push(0);
    breaks.push(f64::NEG_INFINITY);
    breaks.push(f64::INFINITY);
    for q in 1..n {
        if f[q] >= 1e29 {
            continue;
        }
        loop {
            let p = *hull.last().unwrap();
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= breaks[hull.len() - 1] {
                hull.pop();
                breaks.pop();
                if hull.is_empty() {
                    hull.push(q);
                    breaks.push(f64::NEG_INFINITY);
                    breaks.push(f64::INFINITY);
                    break;
                }
            } else {
                hull.push(q);
                *breaks.last_mut().unwrap() = s;
                breaks.push(f64::INFINITY);
                break;
            }
        }
    }
    g.clear();
    let mut k = 0usize;
    for i in 0..n {
        while breaks[k + 1] < i as f64 {
            k += 1;
        }
        let p = hull[k];
        let di = i as f64 - p as f64;
        g.push(di * di + f[p]);
    }
}

/// Build a masked grid over `shape` with `nodes_per_axis` nodes on each axis.
///
/// The grid spans the shape's bounding box; a node is interior exactly when
/// it lies strictly inside the shape and off the outermost index layers.
pub fn build_domain(
    shape: &DomainShape,
    nodes_per_axis: usize,
    dim: usize,
) -> Result<Arc<GridDomain>> {
    shape.validate()?;
    if nodes_per_axis < MIN_NODES_PER_AXIS {
        return Err(Error::InvalidParameter(format!(
            "nodes_per_axis must be >= {}, got {}",
            MIN_NODES_PER_AXIS, nodes_per_axis
        )));
    }
    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(Error::InvalidParameter(format!(
            "dimension {} outside supported range {}..={}",
            dim, MIN_DIM, MAX_DIM
        )));
    }
    let w = shape.half_width();
    let spacing = 2.0 * w / (nodes_per_axis - 1) as f64;
    let origin = vec![-w; dim];
    let extents = vec![nodes_per_axis; dim];
    let n_nodes: usize = extents.iter().product();

    let mut mask = vec![false; n_nodes];
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    for node in 0..n_nodes {
        decode_index(node, &extents, &mut idx);
        for d in 0..dim {
            x[d] = -w + idx[d] as f64 * spacing;
        }
        mask[node] = shape.contains(&x);
    }

    GridDomain::from_mask(extents, spacing, origin, mask).map_err(|e| match e {
        Error::DegenerateDomain(_) => Error::DegenerateDomain(format!(
            "{} with {} nodes per axis in dimension {}",
            shape.name(),
            nodes_per_axis,
            dim
        )),
        other => other,
    })
}

/// Scalar- or vector-valued node data on a [`GridDomain`].
///
/// Values are stored node-major then component and are exactly zero on all
/// non-interior nodes. Immutable after construction.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    components: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(domain: Arc<GridDomain>, components: usize) -> Result<GridFunction> {
        if components == 0 {
            return Err(Error::InvalidParameter("components must be >= 1".into()));
        }
        let n = domain.n_nodes() * components;
        Ok(GridFunction {
            domain,
            components,
            values: vec![0.0; n],
        })
    }

    /// Take ownership of raw values, validating finiteness and zero trace.
    pub fn from_values(
        domain: Arc<GridDomain>,
        components: usize,
        values: Vec<f64>,
    ) -> Result<GridFunction> {
        if components == 0 {
            return Err(Error::InvalidParameter("components must be >= 1".into()));
        }
        if values.len() != domain.n_nodes() * components {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes x {} components",
                values.len(),
                domain.n_nodes(),
                components
            )));
        }
        for node in 0..domain.n_nodes() {
            for c in 0..components {
                let v = values[node * components + c];
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "non-finite value {} at node {} component {}",
                        v, node, c
                    )));
                }
                if !domain.is_interior(node) && v != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "nonzero value {} on non-interior node {}",
                        v, node
                    )));
                }
            }
        }
        Ok(GridFunction {
            domain,
            components,
            values,
        })
    }

    /// Internal constructor for results of operators: zeroes non-interior
    /// nodes instead of validating them.
    pub(crate) fn from_values_masked(
        domain: Arc<GridDomain>,
        components: usize,
        mut values: Vec<f64>,
    ) -> GridFunction {
        for node in 0..domain.n_nodes() {
            if !domain.is_interior(node) {
                for c in 0..components {
                    values[node * components + c] = 0.0;
                }
            }
        }
        GridFunction {
            domain,
            components,
            values,
        }
    }

    /// Sample a scalar field at interior nodes (zero elsewhere).
    pub fn sample_scalar(
        domain: &Arc<GridDomain>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<GridFunction> {
        Self::sample_vector(domain, 1, |x, _| f(x))
    }

    /// Sample a vector field component-wise at interior nodes.
    pub fn sample_vector(
        domain: &Arc<GridDomain>,
        components: usize,
        f: impl Fn(&[f64], usize) -> f64,
    ) -> Result<GridFunction> {
        if components == 0 {
            return Err(Error::InvalidParameter("components must be >= 1".into()));
        }
        let mut values = vec![0.0; domain.n_nodes() * components];
        let mut x = vec![0.0; domain.dim()];
        for &node in domain.interior_nodes() {
            domain.point(node, &mut x);
            for c in 0..components {
                let v = f(&x, c);
                if !v.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "sampled non-finite value at node {} component {}",
                        node, c
                    )));
                }
                values[node * components + c] = v;
            }
        }
        Ok(GridFunction {
            domain: Arc::clone(domain),
            components,
            values,
        })
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, node: usize, comp: usize) -> f64 {
        self.values[node * self.components + comp]
    }

    /// Euclidean norm over components at one node.
    #[inline]
    pub fn magnitude(&self, node: usize) -> f64 {
        let base = node * self.components;
        let mut s = 0.0;
        for c in 0..self.components {
            let v = self.values[base + c];
            s += v * v;
        }
        s.sqrt()
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            domain: Arc::clone(&self.domain),
            components: self.components,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `a * u + b * v` for functions on the same domain and component count.
    pub fn combine(a: f64, u: &GridFunction, b: f64, v: &GridFunction) -> Result<GridFunction> {
        if !Arc::ptr_eq(&u.domain, &v.domain) || u.components != v.components {
            return Err(Error::ShapeMismatch(
                "combine requires the same domain and component count".into(),
            ));
        }
        let values = u
            .values
            .iter()
            .zip(&v.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(GridFunction {
            domain: Arc::clone(&u.domain),
            components: u.components,
            values,
        })
    }

    /// Maximum node-wise Euclidean magnitude and its node.
    pub fn max_magnitude(&self) -> (f64, usize) {
        let mut best = (0.0, 0);
        for node in 0..self.domain.n_nodes() {
            let m = self.magnitude(node);
            if m > best.0 {
                best = (m, node);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_interior_is_full_inner_block() {
        let dom = build_domain(&DomainShape::Cube { side: 1.0 }, 9, 3).unwrap();
        assert_eq!(dom.n_interior(), 7 * 7 * 7);
        assert_eq!(dom.dim(), 3);
        assert!((dom.spacing() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn ball_interior_matches_brute_force_count() {
        let n = 9;
        let dom = build_domain(&DomainShape::Ball { radius: 1.0 }, n, 3).unwrap();
        // Brute-force point-in-ball test over all 729 nodes.
        let h = 2.0 / (n - 1) as f64;
        let mut count = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = -1.0 + i as f64 * h;
                    let y = -1.0 + j as f64 * h;
                    let z = -1.0 + k as f64 * h;
                    if x * x + y * y + z * z < 1.0 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(dom.n_interior(), count);
    }

    #[test]
    fn lshape_interior_is_cube_minus_notch() {
        let n = 9;
        let side = 1.0;
        let notch = 0.5;
        let dom = build_domain(&DomainShape::LShape { side, notch }, n, 3).unwrap();
        let cube = build_domain(&DomainShape::Cube { side }, n, 3).unwrap();
        // Brute-force point-in-set count of cube-interior nodes inside the notch.
        let h = side / (n - 1) as f64;
        let a = side * (0.5 - notch);
        let mut notch_count = 0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                for _k in 1..n - 1 {
                    let x = -side / 2.0 + i as f64 * h;
                    let y = -side / 2.0 + j as f64 * h;
                    if x >= a && y >= a {
                        notch_count += 1;
                    }
                }
            }
        }
        assert_eq!(dom.n_interior(), cube.n_interior() - notch_count);
    }

    #[test]
    fn degenerate_domain_is_rejected() {
        // A slit wide enough to swallow the whole cube interior.
        let err = build_domain(
            &DomainShape::SlitCube {
                side: 1.0,
                slit_width: 0.999,
            },
            5,
            3,
        );
        assert!(err.is_ok()); // x1 < 0 half still survives
        let err = build_domain(&DomainShape::Ball { radius: 1.0 }, 4, 3);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn outer_layers_are_masked() {
        let dom = build_domain(&DomainShape::Ball { radius: 1.0 }, 9, 3).unwrap();
        let mut idx = vec![0usize; 3];
        for node in 0..dom.n_nodes() {
            dom.decode(node, &mut idx);
            if idx.iter().zip(dom.extents()).any(|(&i, &e)| i == 0 || i + 1 == e) {
                assert!(!dom.is_interior(node));
            }
        }
    }

    #[test]
    fn zero_trace_is_enforced_on_construction() {
        let dom = build_domain(&DomainShape::Cube { side: 1.0 }, 5, 3).unwrap();
        let mut values = vec![1.0; dom.n_nodes()];
        // from_values must reject nonzero data on masked nodes.
        assert!(GridFunction::from_values(Arc::clone(&dom), 1, values.clone()).is_err());
        for node in 0..dom.n_nodes() {
            if !dom.is_interior(node) {
                values[node] = 0.0;
            }
        }
        let u = GridFunction::from_values(dom, 1, values).unwrap();
        assert_eq!(u.components(), 1);
    }

    #[test]
    fn five_to_seven_dimensions_build() {
        for dim in 5..=7 {
            let dom = build_domain(&DomainShape::Cube { side: 1.0 }, 5, dim).unwrap();
            assert_eq!(dom.n_interior(), 3usize.pow(dim as u32));
        }
    }

    #[test]
    fn clearance_map_matches_windowed_distance() {
        for shape in [
            DomainShape::LShape { side: 1.0, notch: 0.5 },
            DomainShape::Ball { radius: 1.0 },
            DomainShape::SlitCube { side: 1.0, slit_width: 0.1 },
        ] {
            let dom = build_domain(&shape, 13, 3).unwrap();
            let map = dom.euclidean_clearance_map();
            for &node in dom.interior_nodes().iter().step_by(7) {
                let direct = dom.distance_to_mask(node);
                assert!(
                    (map[node] - direct).abs() < 1e-12,
                    "{:?} node {}: EDT {} vs windowed {}",
                    shape,
                    node,
                    map[node],
                    direct
                );
            }
            for node in 0..dom.n_nodes() {
                if !dom.is_interior(node) {
                    assert_eq!(map[node], 0.0);
                }
            }
        }
    }

    #[test]
    fn ball_is_interior_detects_margin() {
        let dom = build_domain(&DomainShape::Ball { radius: 1.0 }, 17, 3).unwrap();
        let center = dom.center_node();
        assert!(dom.ball_is_interior(center, 0.5));
        assert!(!dom.ball_is_interior(center, 1.0 + dom.spacing()));
    }

    #[test]
    fn neighbor_walks_the_lattice() {
        let dom = build_domain(&DomainShape::Cube { side: 1.0 }, 5, 3).unwrap();
        let c = dom.center_node();
        let up = dom.neighbor(c, 2, 1).unwrap();
        assert_eq!(up, c + 1); // last axis fastest
        let down = dom.neighbor(c, 0, -1).unwrap();
        assert_eq!(down, c - 25);
        let mut idx = vec![0usize; 3];
        dom.decode(0, &mut idx);
        assert_eq!(dom.neighbor(0, 1, -1), None);
    }
}
