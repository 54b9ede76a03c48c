//! Closed-form fundamental solutions used as weights: the Laplace kernel in
//! dimension n >= 3, the 3D Lame fundamental matrix, the biharmonic kernel in
//! dimensions 5..=7, and discrete Green columns reused as weights.

use crate::error::{Error, Result};
use crate::operators::GreenColumn;

/// Measure of the unit (n-1)-sphere: `n pi^(n/2) / Gamma(n/2 + 1)`, with the
/// Gamma factor evaluated exactly at integer and half-integer arguments.
pub fn sphere_measure(n: usize) -> f64 {
    assert!(n >= 2, "sphere_measure needs n >= 2");
    let pi = std::f64::consts::PI;
    // Gamma(n/2 + 1) by the recurrence from Gamma(1) = 1, Gamma(1/2) = sqrt(pi).
    let mut gamma = if n % 2 == 0 { 1.0 } else { pi.sqrt() };
    let mut arg = if n % 2 == 0 { 1.0 } else { 0.5 };
    while arg < n as f64 / 2.0 + 1.0 - 0.25 {
        gamma *= arg;
        arg += 1.0;
    }
    n as f64 * pi.powf(n as f64 / 2.0) / gamma
}

/// Fundamental solution of the negative Laplacian:
/// `[(n-2) omega_n]^{-1} |x|^{2-n}`.
pub fn laplace_fs(n: usize, x: &[f64]) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("laplace_fs needs n >= 3, got {}", n)));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return Err(Error::SingularEvaluation("laplace_fs at x = 0".into()));
    }
    let amp = 1.0 / ((n as f64 - 2.0) * sphere_measure(n));
    Ok(amp * r2.sqrt().powi(2 - n as i32))
}

/// Amplitude `c_alpha = (alpha + 2) / (8 pi (alpha + 1))` of the Lame
/// fundamental matrix; positive for alpha > -1.
pub fn lame_amplitude(alpha: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Lame fundamental matrix needs alpha > -1, got {}",
            alpha
        )));
    }
    Ok((alpha + 2.0) / (8.0 * std::f64::consts::PI * (alpha + 1.0)))
}

/// Fundamental matrix of the 3D Lame operator:
/// `Phi_ij(x) = c_alpha r^{-1} (delta_ij + alpha/(alpha+2) w_i w_j)`.
pub fn lame_fs(alpha: f64, x: &[f64]) -> Result<[[f64; 3]; 3]> {
    if x.len() != 3 {
        return Err(Error::ShapeMismatch(format!("lame_fs needs a 3-vector, got {}", x.len())));
    }
    let c = lame_amplitude(alpha)?;
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        return Err(Error::SingularEvaluation("lame_fs at x = 0".into()));
    }
    let kappa = alpha / (alpha + 2.0);
    let w = [x[0] / r, x[1] / r, x[2] / r];
    let mut phi = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            // group w_i w_j first so the matrix is bit-exactly symmetric
            phi[i][j] = c / r * (delta + kappa * (w[i] * w[j]));
        }
    }
    Ok(phi)
}

/// Homogeneous fundamental solution of `(-Delta)^m`: the Laplace kernel for
/// m = 1, and `[2 (n-2)(n-4) omega_n]^{-1} |x|^{4-n}` for m = 2 with
/// n in 5..=7. Even-dimension logarithmic cases are unsupported.
pub fn polyharmonic_fs(m: usize, n: usize, x: &[f64]) -> Result<f64> {
    match (m, n) {
        (1, n) if n >= 3 => laplace_fs(n, x),
        (2, 5..=7) => {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 == 0.0 {
                return Err(Error::SingularEvaluation("polyharmonic_fs at x = 0".into()));
            }
            Ok(biharmonic_amplitude(n) * r2.sqrt().powi(4 - n as i32))
        }
        _ => Err(Error::UnsupportedFundamentalSolution(format!(
            "(m, n) = ({}, {}): only m = 1 (n >= 3) and m = 2 (n in 5..=7) are homogeneous here",
            m, n
        ))),
    }
}

/// Biharmonic kernel amplitude `[2 (n-2)(n-4) omega_n]^{-1}`.
pub fn biharmonic_amplitude(n: usize) -> f64 {
    1.0 / (2.0 * (n as f64 - 2.0) * (n as f64 - 4.0) * sphere_measure(n))
}

/// Weight used in the quadratic forms: a closed-form fundamental solution or
/// a discrete Green column, with an optional exclusion radius around the pole.
#[derive(Debug, Clone)]
pub struct WeightEvaluator {
    kind: WeightKind,
    regularization_radius: f64,
}

#[derive(Debug, Clone)]
pub enum WeightKind {
    Laplace { n: usize },
    Lame { alpha: f64 },
    Polyharmonic { m: usize, n: usize },
    DiscreteGreen(GreenColumn),
}

impl WeightEvaluator {
    pub fn laplace(n: usize) -> Result<WeightEvaluator> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("Laplace weight needs n >= 3, got {}", n)));
        }
        Ok(WeightEvaluator {
            kind: WeightKind::Laplace { n },
            regularization_radius: 0.0,
        })
    }

    pub fn lame(alpha: f64) -> Result<WeightEvaluator> {
        lame_amplitude(alpha)?;
        Ok(WeightEvaluator {
            kind: WeightKind::Lame { alpha },
            regularization_radius: 0.0,
        })
    }

    pub fn polyharmonic(m: usize, n: usize) -> Result<WeightEvaluator> {
        // validate the (m, n) pair on a probe point
        polyharmonic_fs(m, n, &vec![1.0; n])?;
        Ok(WeightEvaluator {
            kind: WeightKind::Polyharmonic { m, n },
            regularization_radius: 0.0,
        })
    }

    pub fn discrete_green(column: GreenColumn) -> WeightEvaluator {
        WeightEvaluator {
            kind: WeightKind::DiscreteGreen(column),
            regularization_radius: 0.0,
        }
    }

    pub fn with_regularization_radius(mut self, rho: f64) -> Result<WeightEvaluator> {
        if !(rho >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization radius must be >= 0, got {}",
                rho
            )));
        }
        self.regularization_radius = rho;
        Ok(self)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn regularization_radius(&self) -> f64 {
        self.regularization_radius
    }

    /// Component count of the fields this weight pairs with.
    pub fn components(&self) -> usize {
        match &self.kind {
            WeightKind::Lame { .. } => 3,
            WeightKind::DiscreteGreen(g) => g.columns.len(),
            _ => 1,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, WeightKind::DiscreteGreen(_))
    }

    pub fn discrete_column(&self) -> Option<&GreenColumn> {
        match &self.kind {
            WeightKind::DiscreteGreen(g) => Some(g),
            _ => None,
        }
    }

    /// Evaluate the closed-form weight at offset `x`, scalar kinds only.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        self.check_puncture(x)?;
        match &self.kind {
            WeightKind::Laplace { n } => laplace_fs(*n, x),
            WeightKind::Polyharmonic { m, n } => polyharmonic_fs(*m, *n, x),
            WeightKind::Lame { .. } => Err(Error::ShapeMismatch(
                "Lame weight is matrix-valued; use eval_matrix".into(),
            )),
            WeightKind::DiscreteGreen(_) => Err(Error::InvalidParameter(
                "discrete Green weights are evaluated per node, not per offset".into(),
            )),
        }
    }

    /// Evaluate the matrix weight at offset `x` (3x3 for Lame; scalar kinds
    /// return the value times the identity contraction implicitly).
    pub fn eval_matrix(&self, x: &[f64]) -> Result<[[f64; 3]; 3]> {
        self.check_puncture(x)?;
        match &self.kind {
            WeightKind::Lame { alpha } => lame_fs(*alpha, x),
            _ => Err(Error::ShapeMismatch("eval_matrix on a scalar weight".into())),
        }
    }

    /// Frobenius magnitude |Psi(x)| of the weight at offset `x`.
    pub fn frobenius(&self, x: &[f64]) -> Result<f64> {
        match &self.kind {
            WeightKind::Lame { alpha } => {
                let phi = self.eval_matrix(x)?;
                let mut s = 0.0;
                for row in &phi {
                    for v in row {
                        s += v * v;
                    }
                }
                let _ = alpha;
                Ok(s.sqrt())
            }
            _ => Ok(self.eval_scalar(x)?.abs()),
        }
    }

    fn check_puncture(&self, x: &[f64]) -> Result<()> {
        let rho = self.regularization_radius;
        if rho > 0.0 {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2.sqrt() <= rho {
                return Err(Error::SingularEvaluation(format!(
                    "evaluation inside the regularization radius {} (|x| = {})",
                    rho,
                    r2.sqrt()
                )));
            }
        }
        Ok(())
    }

    /// Homogeneity degree 2m - n of the closed-form kinds.
    pub fn homogeneity_degree(&self) -> Option<i32> {
        match &self.kind {
            WeightKind::Laplace { n } => Some(2 - *n as i32),
            WeightKind::Lame { .. } => Some(-1),
            WeightKind::Polyharmonic { m, n } => Some(2 * *m as i32 - *n as i32),
            WeightKind::DiscreteGreen(_) => None,
        }
    }
}

/// Deterministic quasi-uniform unit vectors: the Fibonacci spiral for n = 3,
/// a seeded isotropic Gaussian sample for other dimensions.
pub fn sphere_sample(n: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(n >= 2 && count >= 1);
    if n == 3 {
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        return (0..count)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
    }
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x45504c_5048);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = vec![0.0; n];
        for d in 0..n {
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

/// `max over the unit sphere of |F(w)|` (Frobenius), by a deterministic
/// sample of at least 10^4 directions. Homogeneous kinds only.
pub fn weight_sup_on_sphere(w: &WeightEvaluator) -> Result<f64> {
    let n = match w.kind() {
        WeightKind::Laplace { n } => *n,
        WeightKind::Lame { .. } => 3,
        WeightKind::Polyharmonic { n, .. } => *n,
        WeightKind::DiscreteGreen(_) => {
            return Err(Error::UnsupportedFundamentalSolution(
                "sphere supremum of a discrete Green weight".into(),
            ))
        }
    };
    let mut best = 0.0f64;
    for omega in sphere_sample(n, 10_000) {
        let v = w.frobenius(&omega)?;
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_measures_match_closed_forms() {
        assert!((sphere_measure(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_measure(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_measure(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
        assert!((sphere_measure(7) - 16.0 * PI * PI * PI / 15.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_kernel_values_and_scaling() {
        // c2 = (4 pi)^{-1} at |x| = 1 in dimension 3
        let v1 = laplace_fs(3, &[1.0, 0.0, 0.0]).unwrap();
        assert!((v1 - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let v2 = laplace_fs(3, &[0.0, 2.0, 0.0]).unwrap();
        assert!((v2 - 1.0 / (8.0 * PI)).abs() < 1e-15);
        // homogeneity of degree 2 - n
        for n in 3..=7 {
            let x: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
            let tx: Vec<f64> = x.iter().map(|v| 1.7 * v).collect();
            let lhs = laplace_fs(n, &tx).unwrap();
            let rhs = 1.7f64.powi(2 - n as i32) * laplace_fs(n, &x).unwrap();
            assert!((lhs - rhs).abs() / rhs.abs() < 1e-14);
        }
        assert!(laplace_fs(3, &[0.0; 3]).is_err());
    }

    #[test]
    fn lame_matrix_reduces_to_laplace_at_alpha_zero() {
        let phi = lame_fs(0.0, &[0.3, -0.4, 0.5]).unwrap();
        let r = (0.3f64 * 0.3 + 0.4 * 0.4 + 0.5 * 0.5).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 / (4.0 * PI * r) } else { 0.0 };
                assert!((phi[i][j] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn lame_matrix_matches_hand_evaluation_at_alpha_one() {
        // c_1 = 3/(16 pi); at x = e_1: Phi_11 = c_1 (1 + 1/3) = 1/(4 pi),
        // Phi_22 = Phi_33 = 3/(16 pi), off-diagonals zero.
        let phi = lame_fs(1.0, &[1.0, 0.0, 0.0]).unwrap();
        assert!((phi[0][0] - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((phi[1][1] - 3.0 / (16.0 * PI)).abs() < 1e-15);
        assert!((phi[2][2] - 3.0 / (16.0 * PI)).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(phi[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn lame_matrix_is_even_symmetric_positive() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let alpha = rng.gen_range(-0.99..50.0);
            let x: [f64; 3] = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.1..2.0),
            ];
            let phi = lame_fs(alpha, &x).unwrap();
            let neg = lame_fs(alpha, &[-x[0], -x[1], -x[2]]).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(phi[i][j], phi[j][i]);
                    assert_eq!(phi[i][j], neg[i][j]);
                }
            }
            // eigenvalues are c r^{-1} {1, 1, 1 + alpha/(alpha+2)}: all positive
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let c = lame_amplitude(alpha).unwrap();
            assert!(c > 0.0);
            let radial = c / r * (1.0 + alpha / (alpha + 2.0));
            assert!(radial > 0.0);
            // quadratic form along a random direction stays positive
            let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.7];
            let mut quad = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    quad += v[i] * phi[i][j] * v[j];
                }
            }
            assert!(quad > 0.0);
        }
        assert!(lame_fs(-1.0, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn biharmonic_kernel_in_five_dimensions() {
        // [2 * 3 * 1 * omega_5]^{-1} = 1/(16 pi^2) at |x| = 1
        let x = [1.0, 0.0, 0.0, 0.0, 0.0];
        let v = polyharmonic_fs(2, 5, &x).unwrap();
        assert!((v - 1.0 / (16.0 * PI * PI)).abs() < 1e-15);
        // homogeneity degree 4 - 6 = -2 in dimension 6
        let x6 = [0.5, 0.1, -0.2, 0.3, 0.0, 0.4];
        let tx6: Vec<f64> = x6.iter().map(|v| 2.0 * v).collect();
        let v1 = polyharmonic_fs(2, 6, &x6).unwrap();
        let v2 = polyharmonic_fs(2, 6, &tx6).unwrap();
        assert!((v2 - 0.25 * v1).abs() / v1 < 1e-14);
        // delegation at m = 1
        let y = [0.2, -0.7, 0.4];
        assert_eq!(
            polyharmonic_fs(1, 3, &y).unwrap(),
            laplace_fs(3, &y).unwrap()
        );
    }

    #[test]
    fn unsupported_kernels_are_rejected() {
        assert!(matches!(
            polyharmonic_fs(2, 4, &[1.0; 4]),
            Err(Error::UnsupportedFundamentalSolution(_))
        ));
        assert!(matches!(
            polyharmonic_fs(3, 7, &[1.0; 7]),
            Err(Error::UnsupportedFundamentalSolution(_))
        ));
        assert!(matches!(
            polyharmonic_fs(2, 8, &[1.0; 8]),
            Err(Error::UnsupportedFundamentalSolution(_))
        ));
    }

    #[test]
    fn sphere_supremum_of_isotropic_kinds_is_the_amplitude() {
        let w = WeightEvaluator::laplace(3).unwrap();
        let sup = weight_sup_on_sphere(&w).unwrap();
        assert!((sup - 1.0 / (4.0 * PI)).abs() < 1e-12);
        let w5 = WeightEvaluator::polyharmonic(2, 5).unwrap();
        let sup5 = weight_sup_on_sphere(&w5).unwrap();
        assert!((sup5 - 1.0 / (16.0 * PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn sphere_supremum_of_lame_weight() {
        // |Phi(w)| is direction independent:
        // c_a sqrt(3 + 2 kappa + kappa^2), kappa = alpha/(alpha+2).
        for alpha in [0.0, 1.0, 1.4] {
            let w = WeightEvaluator::lame(alpha).unwrap();
            let sup = weight_sup_on_sphere(&w).unwrap();
            let c = lame_amplitude(alpha).unwrap();
            let kappa: f64 = alpha / (alpha + 2.0);
            let expect = c * (3.0 + 2.0 * kappa + kappa * kappa).sqrt();
            assert!(
                (sup - expect).abs() / expect < 1e-10,
                "alpha {}: {} vs {}",
                alpha,
                sup,
                expect
            );
        }
        // alpha = 1 cross-check against the direct expression
        let w = WeightEvaluator::lame(1.0).unwrap();
        let sup = weight_sup_on_sphere(&w).unwrap();
        let expect = ((1.0 / (4.0 * PI)).powi(2) + 2.0 * (3.0 / (16.0 * PI)).powi(2)).sqrt();
        assert!((sup - expect).abs() / expect < 1e-10);
        // alpha = 0: sqrt(3)/(4 pi)
        let w0 = WeightEvaluator::lame(0.0).unwrap();
        let sup0 = weight_sup_on_sphere(&w0).unwrap();
        assert!((sup0 - 3.0f64.sqrt() / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn discrete_operators_annihilate_their_kernels() {
        // Sampling the kernel around the center node and applying the
        // matching discrete operator must leave residuals that shrink at
        // O(h^2) at fixed probe points away from the pole. Probe offsets are
        // lattice points of every grid in each refinement pair.
        use crate::grid::{build_domain, DomainShape, GridFunction};
        use crate::operators::{apply, OperatorSpec};

        fn probe_max(
            dom: &std::sync::Arc<crate::grid::GridDomain>,
            field: &GridFunction,
            y0: usize,
            probes: &[Vec<f64>],
        ) -> f64 {
            let h = dom.spacing();
            let mut idx = vec![0usize; dom.dim()];
            dom.decode(y0, &mut idx);
            let mut worst = 0.0f64;
            for offset in probes {
                let mut oidx = idx.clone();
                for d in 0..dom.dim() {
                    let steps = (offset[d] / h).round();
                    assert!(
                        (offset[d] / h - steps).abs() < 1e-9,
                        "probe {:?} off-lattice at h = {}",
                        offset,
                        h
                    );
                    oidx[d] = (oidx[d] as isize + steps as isize) as usize;
                }
                worst = worst.max(field.magnitude(dom.encode(&oidx)));
            }
            worst
        }

        // Laplace kernel in dimensions 3 and 4.
        for n in [3usize, 4] {
            let grids: [usize; 2] = if n == 3 { [33, 65] } else { [21, 41] };
            let mut probes = vec![vec![0.0; n], vec![0.0; n]];
            probes[0][0] = 0.5;
            probes[1][0] = 0.5;
            probes[1][1] = if n == 3 { 0.25 } else { 0.3 };
            let mut residuals = Vec::new();
            for nodes in grids {
                let dom = build_domain(&DomainShape::Cube { side: 2.0 }, nodes, n).unwrap();
                let y0 = dom.center_node();
                let c = dom.point_vec(y0);
                let u = GridFunction::sample_scalar(&dom, |x| {
                    let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
                    if d.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 {
                        0.0
                    } else {
                        laplace_fs(n, &d).unwrap()
                    }
                })
                .unwrap();
                let lu = apply(&OperatorSpec::laplacian(), &u).unwrap();
                residuals.push(probe_max(&dom, &lu, y0, &probes));
            }
            let ratio = residuals[0] / residuals[1];
            assert!(
                (3.4..=4.6).contains(&ratio),
                "Laplace n = {}: annihilation ratio {} ({:?})",
                n,
                ratio,
                residuals
            );
        }

        // Lame fundamental matrix: one column at a time.
        let alpha = 0.7;
        let probes = vec![vec![0.5, 0.0, 0.0], vec![0.5, 0.25, 0.25]];
        let mut residuals = Vec::new();
        for nodes in [33usize, 65] {
            let dom = build_domain(&DomainShape::Cube { side: 2.0 }, nodes, 3).unwrap();
            let y0 = dom.center_node();
            let c = dom.point_vec(y0);
            let u = GridFunction::sample_vector(&dom, 3, |x, comp| {
                let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
                if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() < 1e-12 {
                    0.0
                } else {
                    lame_fs(alpha, &d).unwrap()[comp][0]
                }
            })
            .unwrap();
            let lu = apply(&OperatorSpec::lame(alpha).unwrap(), &u).unwrap();
            residuals.push(probe_max(&dom, &lu, y0, &probes));
        }
        let ratio = residuals[0] / residuals[1];
        assert!(
            (3.4..=4.6).contains(&ratio),
            "Lame annihilation ratio {} ({:?})",
            ratio,
            residuals
        );

        // Biharmonic kernel in dimension 5; grids this coarse only support a
        // decay check.
        let probes = vec![vec![0.4, 0.2, 0.0, 0.0, 0.0], vec![0.4, 0.0, 0.2, 0.2, 0.0]];
        let mut residuals = Vec::new();
        for nodes in [11usize, 21] {
            let dom = build_domain(&DomainShape::Cube { side: 2.0 }, nodes, 5).unwrap();
            let y0 = dom.center_node();
            let c = dom.point_vec(y0);
            let u = GridFunction::sample_scalar(&dom, |x| {
                let d: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
                if d.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 {
                    0.0
                } else {
                    polyharmonic_fs(2, 5, &d).unwrap()
                }
            })
            .unwrap();
            let lu = apply(&OperatorSpec::polyharmonic(2).unwrap(), &u).unwrap();
            residuals.push(probe_max(&dom, &lu, y0, &probes));
        }
        assert!(
            residuals[0] / residuals[1] > 2.5,
            "biharmonic annihilation residuals {:?} do not decay",
            residuals
        );
    }

    #[test]
    fn regularization_radius_blocks_inner_evaluations() {
        let w = WeightEvaluator::laplace(3)
            .unwrap()
            .with_regularization_radius(0.5)
            .unwrap();
        assert!(w.eval_scalar(&[0.2, 0.0, 0.0]).is_err());
        assert!(w.eval_scalar(&[0.6, 0.0, 0.0]).is_ok());
    }
}
