//! End-to-end verification of the pointwise multiplicative inequalities:
//! normalized inequality ratios with the explicit constants, Hardy steps,
//! Green-kernel sandwich bounds, and the critical-exponent counterexample.

mod counterexample;
mod green;
mod hardy;
mod testfn;

pub use counterexample::{
    counterexample_profile, counterexample_suite, CounterexampleConfig, CounterexampleLevel,
    CounterexampleReport, CutoffSpec,
};
pub use green::green_sandwich_check;
pub use hardy::{hardy_chain_ratio, hardy_ratio};
pub use testfn::{
    draw_bump_set, generate_test_function, Bump, BumpSet, TestFunctionKind, TestFunctionSpec,
};

use crate::error::{Error, Result};
use crate::fundsol::{sphere_measure, lame_amplitude, weight_sup_on_sphere, WeightEvaluator};
use crate::grid::{build_domain, lp_norm, sobolev_seminorm, DomainShape, GridDomain, GridFunction};
use crate::operators::{apply, OperatorSpec, SolveConfig};
use crate::report::trial_seed;
use std::sync::Arc;

/// Positivity window of the Lame weight pairing (approximate endpoints).
pub const LAME_ALPHA_MINUS: f64 = -0.194;
pub const LAME_ALPHA_PLUS: f64 = 1.524;
/// Outside these the pairing is known indefinite (approximate endpoints).
pub const LAME_ALPHA_MINUS_CRITICAL: f64 = -0.902;
pub const LAME_ALPHA_PLUS_CRITICAL: f64 = 39.450;

/// One of the three inequality families with its exponent bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalityCase {
    /// Scalar second order: `||u||_inf^(n-1) <= C ||Lu||_p ||Du||_q^(n-2)`
    /// with `p = s/(s-1)`, `q = (n-2) s`, valid for `s < n/(n-2)`.
    Thm1 { n: usize, s: f64 },
    /// 3D Lame: `||u||_inf^2 <= C ||Lu||_p ||Du||_q`, `p = q/(q-1)`, `q < 3`.
    Lame { alpha: f64, q: f64 },
    /// Order 2m: `||u||_inf^2 <= C ||D^k u||_q ||Lu||_{q'}`, `k = n - 2m`,
    /// `q' = q/(q-1)`, valid for `q < n/(n-2m)`.
    Higher { m: usize, n: usize, q: f64 },
}

impl InequalityCase {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InequalityCase::Thm1 { n, s } => {
                if !(3..=7).contains(&n) {
                    return Err(Error::InvalidParameter(format!("Thm1 dimension {} outside 3..=7", n)));
                }
                let critical = n as f64 / (n as f64 - 2.0);
                if !(s > 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Thm1 needs s > 1 for p = s/(s-1), got s = {}",
                        s
                    )));
                }
                if s >= critical {
                    return Err(Error::InvalidParameter(format!(
                        "Thm1 needs s < n/(n-2) = {}, got s = {}",
                        critical, s
                    )));
                }
                Ok(())
            }
            InequalityCase::Lame { alpha, q } => {
                if !(alpha > LAME_ALPHA_MINUS && alpha < LAME_ALPHA_PLUS) {
                    return Err(Error::InvalidParameter(format!(
                        "Lame alpha {} outside the positivity window ({}, {})",
                        alpha, LAME_ALPHA_MINUS, LAME_ALPHA_PLUS
                    )));
                }
                if !(q > 1.0 && q < 3.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Lame exponent needs 1 < q < 3, got {}",
                        q
                    )));
                }
                Ok(())
            }
            InequalityCase::Higher { m, n, q } => {
                if n <= 2 * m {
                    return Err(Error::InvalidParameter(format!(
                        "higher-order case needs n > 2m, got n = {}, m = {}",
                        n, m
                    )));
                }
                let critical = n as f64 / (n as f64 - 2.0 * m as f64);
                if !(q > 1.0 && q < critical) {
                    return Err(Error::InvalidParameter(format!(
                        "higher-order exponent needs 1 < q < n/(n-2m) = {}, got {}",
                        critical, q
                    )));
                }
                // the weight must have a supported homogeneous kernel
                WeightEvaluator::polyharmonic(m, n)?;
                Ok(())
            }
        }
    }

    pub fn components(&self) -> usize {
        match self {
            InequalityCase::Lame { .. } => 3,
            _ => 1,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            InequalityCase::Thm1 { n, .. } => n,
            InequalityCase::Lame { .. } => 3,
            InequalityCase::Higher { n, .. } => n,
        }
    }

    /// The domain-independent constant of the inequality. Thm1 with variable
    /// coefficients needs the empirical upper sandwich constant; the closed
    /// form `[(n-2) omega_n]^{-1}` covers the negative Laplacian.
    pub fn constant(&self, c2_empirical: Option<f64>) -> Result<f64> {
        self.validate()?;
        match *self {
            InequalityCase::Thm1 { n, s } => {
                let nf = n as f64;
                let c2 = match c2_empirical {
                    Some(c) => {
                        if !(c > 0.0) {
                            return Err(Error::InvalidParameter(format!(
                                "empirical c2 must be positive, got {}",
                                c
                            )));
                        }
                        c
                    }
                    None => 1.0 / ((nf - 2.0) * sphere_measure(n)),
                };
                let q = (nf - 2.0) * s;
                Ok(c2 * (nf - 1.0) * (q / (nf - q)).powi(n as i32 - 2))
            }
            InequalityCase::Lame { alpha, q } => {
                let c3 = lame_amplitude(alpha)? * (1.0 + alpha.abs() / (alpha + 2.0));
                Ok(2.0 * c3 * (q / (3.0 - q)))
            }
            InequalityCase::Higher { m, n, q } => {
                let c4 = weight_sup_on_sphere(&WeightEvaluator::polyharmonic(m, n)?)?;
                let r = n as f64 / q;
                let k = n - 2 * m;
                let mut chain = 1.0;
                for j in 1..=k {
                    chain /= r - j as f64;
                }
                Ok(2.0 * c4 * chain)
            }
        }
    }
}

/// Norms, constant, and normalized ratio of one inequality trial.
#[derive(Debug, Clone)]
pub struct RatioReport {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub normalized_ratio: f64,
    pub sup_u: f64,
    pub lu_norm: f64,
    pub grad_norm: f64,
    /// Trial metadata, filled by harnesses.
    pub seed: u64,
    pub grid: usize,
    pub shape: String,
}

impl InequalityCase {
    pub fn label(&self) -> &'static str {
        match self {
            InequalityCase::Thm1 { .. } => "thm1",
            InequalityCase::Lame { .. } => "lame",
            InequalityCase::Higher { .. } => "higher",
        }
    }
}

impl RatioReport {
    pub const CSV_HEADER: [&'static str; 16] = [
        "case", "n", "m", "s", "alpha", "q", "shape", "grid", "seed", "constant", "lhs", "rhs",
        "sup_u", "lu_norm", "grad_norm", "normalized_ratio",
    ];

    pub fn csv_row(&self, case: &InequalityCase) -> Vec<String> {
        use crate::report::fmt_f64;
        let (n, m, s, alpha, q) = match *case {
            InequalityCase::Thm1 { n, s } => (n.to_string(), String::new(), fmt_f64(s), String::new(), String::new()),
            InequalityCase::Lame { alpha, q } => ("3".to_string(), String::new(), String::new(), fmt_f64(alpha), fmt_f64(q)),
            InequalityCase::Higher { m, n, q } => (n.to_string(), m.to_string(), String::new(), String::new(), fmt_f64(q)),
        };
        vec![
            case.label().to_string(),
            n,
            m,
            s,
            alpha,
            q,
            self.shape.clone(),
            self.grid.to_string(),
            self.seed.to_string(),
            fmt_f64(self.constant),
            fmt_f64(self.lhs),
            fmt_f64(self.rhs),
            fmt_f64(self.sup_u),
            fmt_f64(self.lu_norm),
            fmt_f64(self.grad_norm),
            fmt_f64(self.normalized_ratio),
        ]
    }

    pub fn to_json(&self, case: &InequalityCase) -> crate::report::JsonValue {
        use crate::report::JsonValue as J;
        let mut obj = J::obj();
        obj.push("case", J::Str(case.label().to_string()));
        match *case {
            InequalityCase::Thm1 { n, s } => {
                obj.push("n", J::Int(n as i64));
                obj.push("s", J::Num(s));
            }
            InequalityCase::Lame { alpha, q } => {
                obj.push("alpha", J::Num(alpha));
                obj.push("q", J::Num(q));
            }
            InequalityCase::Higher { m, n, q } => {
                obj.push("m", J::Int(m as i64));
                obj.push("n", J::Int(n as i64));
                obj.push("q", J::Num(q));
            }
        }
        obj.push("constant", J::Num(self.constant));
        obj.push("lhs", J::Num(self.lhs));
        obj.push("rhs", J::Num(self.rhs));
        obj.push("sup_u", J::Num(self.sup_u));
        obj.push("lu_norm", J::Num(self.lu_norm));
        obj.push("grad_norm", J::Num(self.grad_norm));
        obj.push("normalized_ratio", J::Num(self.normalized_ratio));
        obj.push("seed", J::Int(self.seed as i64));
        obj.push("grid", J::Int(self.grid as i64));
        obj.push("shape", J::Str(self.shape.clone()));
        obj
    }
}

/// Evaluate one inequality instance on a concrete test function.
///
/// `lhs` is `||u||_inf^(n-1)` for Thm1 and `||u||_inf^2` otherwise; `rhs` is
/// the product of norms with the case exponents; `normalized_ratio` is
/// `lhs / (C rhs)` and satisfies `<= 1 + tol(h)` for admissible inputs.
pub fn inequality_ratio(
    case: &InequalityCase,
    op: &OperatorSpec,
    u: &GridFunction,
    c2_empirical: Option<f64>,
) -> Result<RatioReport> {
    case.validate()?;
    let dom = u.domain();
    if dom.dim() != case.dim() {
        return Err(Error::ShapeMismatch(format!(
            "case dimension {} vs domain dimension {}",
            case.dim(),
            dom.dim()
        )));
    }
    match (case, op) {
        (InequalityCase::Thm1 { .. }, OperatorSpec::ScalarDivForm(sdf)) => {
            if !sdf.is_identity() && c2_empirical.is_none() {
                return Err(Error::InvalidParameter(
                    "variable coefficients need an empirical c2 from the Green sandwich".into(),
                ));
            }
        }
        (InequalityCase::Lame { alpha, .. }, OperatorSpec::Lame3d { alpha: op_alpha }) => {
            if (alpha - op_alpha).abs() > 1e-14 {
                return Err(Error::InvalidParameter(format!(
                    "case alpha {} does not match operator alpha {}",
                    alpha, op_alpha
                )));
            }
        }
        (InequalityCase::Higher { m, .. }, OperatorSpec::Polyharmonic { m: op_m }) => {
            if m != op_m {
                return Err(Error::InvalidParameter(format!(
                    "case order {} does not match operator order {}",
                    m, op_m
                )));
            }
        }
        _ => {
            return Err(Error::ShapeMismatch(format!(
                "case {:?} cannot pair with operator {}",
                case,
                op.name()
            )))
        }
    }

    let lu = apply(op, u)?;
    let sup_u = lp_norm(u, f64::INFINITY)?;
    let constant = case.constant(c2_empirical)?;

    let (lhs, lu_norm, grad_norm, rhs) = match *case {
        InequalityCase::Thm1 { n, s } => {
            let nf = n as f64;
            let p = s / (s - 1.0);
            let q = (nf - 2.0) * s;
            let lu_norm = lp_norm(&lu, p)?;
            let grad_norm = sobolev_seminorm(u, 1, q)?;
            (
                sup_u.powf(nf - 1.0),
                lu_norm,
                grad_norm,
                lu_norm * grad_norm.powf(nf - 2.0),
            )
        }
        InequalityCase::Lame { q, .. } => {
            let p = q / (q - 1.0);
            let lu_norm = lp_norm(&lu, p)?;
            let grad_norm = sobolev_seminorm(u, 1, q)?;
            (sup_u * sup_u, lu_norm, grad_norm, lu_norm * grad_norm)
        }
        InequalityCase::Higher { m, n, q } => {
            let qp = q / (q - 1.0);
            let k = n - 2 * m;
            let lu_norm = lp_norm(&lu, qp)?;
            let grad_norm = sobolev_seminorm(u, k, q)?;
            (sup_u * sup_u, lu_norm, grad_norm, grad_norm * lu_norm)
        }
    };

    let normalized_ratio = if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            return Err(Error::InconsistentZero { lhs });
        }
    } else {
        lhs / (constant * rhs)
    };

    Ok(RatioReport {
        lhs,
        rhs,
        constant,
        normalized_ratio,
        sup_u,
        lu_norm,
        grad_norm,
        seed: 0,
        grid: dom.extents()[0],
        shape: String::new(),
    })
}

/// Deterministic batch of seeded inequality trials over a list of shapes.
///
/// The operator is rebuilt per domain by `op_factory` (coefficient fields are
/// grid-bound); for Thm1 with variable coefficients the empirical c2 is
/// measured once per shape by the Green sandwich at the deepest node. Trials
/// fan out over `threads` workers and aggregate in seed order, so the result
/// is identical for any pool size.
pub fn run_inequality_trials(
    case: &InequalityCase,
    op_factory: &(dyn Fn(&Arc<GridDomain>) -> Result<OperatorSpec> + Sync),
    shapes: &[DomainShape],
    grid: usize,
    trials: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<RatioReport>> {
    case.validate()?;
    let mut reports = Vec::with_capacity(shapes.len() * trials);
    let smoothness = match case {
        InequalityCase::Higher { .. } => 5,
        _ => 3,
    };
    for shape in shapes {
        let dom = build_domain(shape, grid, case.dim())?;
        let op = op_factory(&dom)?;
        let c2 = match (case, &op) {
            (InequalityCase::Thm1 { .. }, OperatorSpec::ScalarDivForm(sdf))
                if !sdf.is_identity() =>
            {
                let y0 = dom.deepest_interior_node();
                let (_, c2_emp) = green_sandwich_check(&op, &dom, y0, &SolveConfig::default())?;
                Some(c2_emp)
            }
            _ => None,
        };
        let seeds: Vec<u64> = (0..trials).map(|t| trial_seed(seed, t as u64)).collect();
        let shape_reports = crate::parallel::parallel_map(seeds, threads, |trial| -> Result<RatioReport> {
            let u = generate_test_function(
                &dom,
                &TestFunctionSpec {
                    kind: TestFunctionKind::SumOfBumps,
                    seed: trial,
                    count: 3,
                    components: case.components(),
                    smoothness,
                },
            )?;
            let mut report = inequality_ratio(case, &op, &u, c2)?;
            report.seed = trial;
            report.grid = grid;
            report.shape = shape.name().to_string();
            Ok(report)
        });
        for r in shape_reports {
            reports.push(r?);
        }
    }
    Ok(reports)
}
