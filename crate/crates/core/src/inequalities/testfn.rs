//! Deterministic generators for smooth compactly supported test functions.

use crate::error::{Error, Result};
use crate::grid::{GridDomain, GridFunction};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunctionKind {
    /// One bump of amplitude 1 centered at the domain center, support filling
    /// the available clearance: `(1 - |x - c|^2 / R^2)_+^s`.
    RadialBump,
    /// `count` random bumps per component with random centers, radii, signs.
    SumOfBumps,
    /// A random quadratic polynomial times a centered cutoff bump.
    PolyTimesCutoff,
}

#[derive(Debug, Clone)]
pub struct TestFunctionSpec {
    pub kind: TestFunctionKind,
    pub seed: u64,
    pub count: usize,
    pub components: usize,
    /// Polynomial vanishing order at the support edge (>= 2).
    pub smoothness: usize,
}

/// One bump in physical coordinates, grid independent.
#[derive(Debug, Clone)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    pub component: usize,
}

/// A drawn test function in physical coordinates: the same set can be
/// resampled on refined grids of the same domain for refinement studies.
#[derive(Debug, Clone)]
pub struct BumpSet {
    pub smoothness: usize,
    pub components: usize,
    pub bumps: Vec<Bump>,
}

impl BumpSet {
    pub fn sample(&self, dom: &Arc<GridDomain>) -> Result<GridFunction> {
        let mut values = vec![0.0; dom.n_nodes() * self.components];
        for b in &self.bumps {
            add_bump(&mut values, dom, self.components, self.smoothness, b);
        }
        GridFunction::from_values(Arc::clone(dom), self.components, values)
    }
}

fn add_bump(values: &mut [f64], dom: &GridDomain, nc: usize, s: usize, b: &Bump) {
    let r2 = b.radius * b.radius;
    let mut x = vec![0.0; dom.dim()];
    for &node in dom.interior_nodes() {
        dom.point(node, &mut x);
        let d2: f64 = x
            .iter()
            .zip(&b.center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum();
        if d2 < r2 {
            values[node * nc + b.component] += b.amplitude * (1.0 - d2 / r2).powi(s as i32);
        }
    }
}

/// Draw the physical bump parameters of a SumOfBumps test function: centers
/// at interior nodes with room, radii inside the exact clearance minus a
/// two-cell margin.
pub fn draw_bump_set(dom: &Arc<GridDomain>, spec: &TestFunctionSpec) -> Result<BumpSet> {
    if spec.kind != TestFunctionKind::SumOfBumps {
        return Err(Error::InvalidParameter(
            "draw_bump_set applies to the SumOfBumps kind".into(),
        ));
    }
    if spec.components == 0 {
        return Err(Error::InvalidParameter("components must be >= 1".into()));
    }
    if spec.smoothness < 2 || spec.smoothness > 8 {
        return Err(Error::InvalidParameter(format!(
            "smoothness order must lie in 2..=8, got {}",
            spec.smoothness
        )));
    }
    if spec.count == 0 {
        return Err(Error::InvalidParameter("bump count must be >= 1".into()));
    }
    let h = dom.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let clearance_map = dom.euclidean_clearance_map();
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for &node in dom.interior_nodes() {
        let clearance = clearance_map[node];
        if clearance >= 4.0 * h * (1.0 - 1e-12) {
            candidates.push((node, clearance));
        }
    }
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "no bump support fits inside the interior with a 2-cell margin".into(),
        ));
    }
    let mut bumps = Vec::with_capacity(spec.components * spec.count);
    for component in 0..spec.components {
        for _ in 0..spec.count {
            let (node, clearance) = candidates[rng.gen_range(0..candidates.len())];
            let r_max = clearance - 2.0 * h;
            let r_min = (2.0 * h).min(r_max);
            let radius = (rng.gen_range(0.45..0.95) * r_max).clamp(r_min, r_max);
            let amplitude = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            bumps.push(Bump {
                center: dom.point_vec(node),
                radius,
                amplitude,
                component,
            });
        }
    }
    Ok(BumpSet {
        smoothness: spec.smoothness,
        components: spec.components,
        bumps,
    })
}

/// Sample a deterministic smooth test function on the interior of `dom`.
///
/// Supports are kept at least two cells away from the mask so that the
/// one-sided boundary stencils never touch nonzero data.
pub fn generate_test_function(
    dom: &Arc<GridDomain>,
    spec: &TestFunctionSpec,
) -> Result<GridFunction> {
    if spec.components == 0 {
        return Err(Error::InvalidParameter("components must be >= 1".into()));
    }
    if spec.smoothness < 2 || spec.smoothness > 8 {
        return Err(Error::InvalidParameter(format!(
            "smoothness order must lie in 2..=8, got {}",
            spec.smoothness
        )));
    }
    let h = dom.spacing();
    let nc = spec.components;
    let mut values = vec![0.0; dom.n_nodes() * nc];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    match spec.kind {
        TestFunctionKind::RadialBump => {
            let center_node = dom.center_node();
            if !dom.is_interior(center_node) {
                return Err(Error::InvalidParameter(
                    "domain center is masked; radial bump does not fit".into(),
                ));
            }
            let radius = dom.distance_to_mask(center_node);
            let center = dom.point_vec(center_node);
            for c in 0..nc {
                add_bump(
                    &mut values,
                    dom,
                    nc,
                    spec.smoothness,
                    &Bump {
                        center: center.clone(),
                        radius,
                        amplitude: 1.0,
                        component: c,
                    },
                );
            }
        }
        TestFunctionKind::SumOfBumps => {
            let set = draw_bump_set(dom, spec)?;
            return set.sample(dom);
        }
        TestFunctionKind::PolyTimesCutoff => {
            let center_node = dom.center_node();
            if !dom.is_interior(center_node) {
                return Err(Error::InvalidParameter(
                    "domain center is masked; cutoff bump does not fit".into(),
                ));
            }
            let radius = (dom.distance_to_mask(center_node) - 2.0 * h).max(3.0 * h);
            let center = dom.point_vec(center_node);
            let dim = dom.dim();
            for component in 0..nc {
                let a0: f64 = rng.gen_range(0.5..1.5);
                let lin: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let quad: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
                let r2 = radius * radius;
                let mut x = vec![0.0; dim];
                for &node in dom.interior_nodes() {
                    dom.point(node, &mut x);
                    let d2: f64 = x
                        .iter()
                        .zip(&center)
                        .map(|(xi, ci)| (xi - ci) * (xi - ci))
                        .sum();
                    if d2 < r2 {
                        let mut poly = a0;
                        for i in 0..dim {
                            let xi = (x[i] - center[i]) / radius;
                            poly += lin[i] * xi;
                            for j in 0..dim {
                                let xj = (x[j] - center[j]) / radius;
                                poly += quad[i * dim + j] * xi * xj;
                            }
                        }
                        values[node * nc + component] +=
                            poly * (1.0 - d2 / r2).powi(spec.smoothness as i32);
                    }
                }
            }
        }
    }

    GridFunction::from_values(Arc::clone(dom), nc, values)
}
