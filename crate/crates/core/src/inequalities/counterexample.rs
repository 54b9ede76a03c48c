//! Critical-exponent counterexample in dimension 3: the zero-trace function
//! `u(x) = zeta(|x|) log|log|x||` is unbounded near the origin while its
//! gradient stays in L^3 and its Laplacian in L^{3/2}, so the critical-case
//! ratio grows without bound under refinement.
//!
//! Derivatives are evaluated in closed form and streamed over dyadic grids;
//! per level, statistics run over nodes with `|x| >= 4h`, excluding the
//! unresolved singular core.

use crate::error::{Error, Result};
use crate::grid::CompensatedSum;
use crate::report::{fmt_f64, CsvTable};
use std::f64::consts::PI;

/// Smooth radial cutoff: 1 on `r <= plateau`, 0 on `r >= support`, quintic
/// smoothstep (C^2 at both ends) in between.
#[derive(Debug, Clone, Copy)]
pub struct CutoffSpec {
    pub plateau: f64,
    pub support: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec {
            plateau: 0.5,
            support: 1.0,
        }
    }
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.plateau > 0.0 && self.plateau < self.support && self.support <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff needs 0 < plateau < support <= 1, got plateau = {}, support = {}",
                self.plateau, self.support
            )));
        }
        Ok(())
    }

    /// (zeta, zeta', zeta'') at radius r.
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.plateau {
            return (1.0, 0.0, 0.0);
        }
        if r >= self.support {
            return (0.0, 0.0, 0.0);
        }
        let w = self.support - self.plateau;
        let t = (r - self.plateau) / w;
        let s = t * t * t * (6.0 * t * t - 15.0 * t + 10.0);
        let ds = 30.0 * t * t * (t - 1.0) * (t - 1.0);
        let dds = 60.0 * t * (t - 1.0) * (2.0 * t - 1.0);
        (1.0 - s, -ds / w, -dds / (w * w))
    }
}

/// (u, |Du|, Delta u) of the counterexample profile at radius `r` in 3D.
pub fn counterexample_profile(r: f64, cutoff: &CutoffSpec) -> (f64, f64, f64) {
    if r <= 0.0 || r >= cutoff.support {
        return (0.0, 0.0, 0.0);
    }
    let (zeta, dzeta, ddzeta) = cutoff.eval(r);
    if zeta == 0.0 && dzeta == 0.0 && ddzeta == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let ln_r = r.ln(); // negative on (0, 1)
    let g = (-ln_r).ln();
    let gp = 1.0 / (r * ln_r);
    let gpp = -(ln_r + 1.0) / (r * ln_r).powi(2);
    let u = zeta * g;
    let up = dzeta * g + zeta * gp;
    let upp = ddzeta * g + 2.0 * dzeta * gp + zeta * gpp;
    let lap = upp + 2.0 / r * up;
    (u, up.abs(), lap)
}

#[derive(Debug, Clone)]
pub struct CounterexampleConfig {
    /// Number of dyadic refinement levels (>= 3).
    pub levels: usize,
    pub cutoff: CutoffSpec,
    /// Nodes per axis at level 0; each level doubles the intervals.
    pub base_nodes: usize,
    /// Half-width of the sampling box around the singularity.
    pub box_half_width: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            levels: 4,
            cutoff: CutoffSpec::default(),
            base_nodes: 41,
            box_half_width: 1.125,
        }
    }
}

/// Per-level statistics of the counterexample suite.
#[derive(Debug, Clone)]
pub struct CounterexampleLevel {
    pub level: usize,
    pub h: f64,
    /// sup of |u| over nodes with |x| >= 4h.
    pub sup_u: f64,
    pub du_l3: f64,
    pub lap_l32: f64,
    /// Critical-case ratio sup^2 / (||Delta u||_{3/2} ||Du||_3); no finite
    /// constant exists at s = n/(n-2), so the ratio is reported raw (C = 1).
    pub critical_ratio: f64,
    /// Subcritical s = 2 ratio pi sup^2 / (||Delta u||_2 ||Du||_2).
    pub subcritical_ratio: f64,
    /// max over 4h <= |x| <= 1/4 of |Du| |x| |log|x||.
    pub du_pointwise_const: f64,
    /// max over 4h <= |x| <= 1/4 of |Delta u| |x|^2 |log|x||.
    pub lap_pointwise_const: f64,
}

#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub levels: Vec<CounterexampleLevel>,
    /// Critical ratio strictly increases across levels.
    pub critical_monotone: bool,
    /// Total growth factor of the critical ratio (last / first).
    pub critical_growth: f64,
    /// Successive relative differences of ||Du||_3 shrink by >= 25% per level.
    pub du_diffs_shrink: bool,
    /// Same for ||Delta u||_{3/2}.
    pub lap_diffs_shrink: bool,
    pub subcritical_max: f64,
    /// Pointwise envelope constants bounded by a level-independent constant.
    pub pointwise_bounded: bool,
    pub pass: bool,
}

impl CounterexampleReport {
    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::new(&["level", "h", "sup_u", "du_l3", "lap_l32", "critical_ratio"]);
        for l in &self.levels {
            table.push_row(vec![
                l.level.to_string(),
                fmt_f64(l.h),
                fmt_f64(l.sup_u),
                fmt_f64(l.du_l3),
                fmt_f64(l.lap_l32),
                fmt_f64(l.critical_ratio),
            ]);
        }
        table
    }
}

/// Run the refinement study over `cfg.levels` dyadic grids.
pub fn counterexample_suite(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    if cfg.levels < 3 {
        return Err(Error::InvalidParameter(format!(
            "at least 3 levels are needed to exhibit the trend, got {}",
            cfg.levels
        )));
    }
    cfg.cutoff.validate()?;
    if cfg.base_nodes < 5 || cfg.base_nodes % 2 == 0 {
        return Err(Error::InvalidParameter(
            "base_nodes must be odd and >= 5 so the singularity sits on a node".into(),
        ));
    }
    if !(cfg.box_half_width > cfg.cutoff.support) {
        return Err(Error::InvalidParameter(
            "sampling box must contain the support".into(),
        ));
    }

    let mut levels = Vec::with_capacity(cfg.levels);
    for level in 0..cfg.levels {
        let n = (cfg.base_nodes - 1) * (1usize << level) + 1;
        let h = 2.0 * cfg.box_half_width / (n - 1) as f64;
        levels.push(scan_level(level, n, h, &cfg.cutoff));
    }

    let ratios: Vec<f64> = levels.iter().map(|l| l.critical_ratio).collect();
    let critical_monotone = ratios.windows(2).all(|w| w[1] > w[0]);
    let critical_growth = ratios[ratios.len() - 1] / ratios[0];

    let shrink = |values: &[f64]| -> bool {
        let diffs: Vec<f64> = values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / w[0].abs().max(1e-300))
            .collect();
        diffs.windows(2).all(|d| d[1] <= 0.75 * d[0])
    };
    let du: Vec<f64> = levels.iter().map(|l| l.du_l3).collect();
    let lap: Vec<f64> = levels.iter().map(|l| l.lap_l32).collect();
    let du_diffs_shrink = shrink(&du);
    let lap_diffs_shrink = shrink(&lap);

    let subcritical_max = levels
        .iter()
        .map(|l| l.subcritical_ratio)
        .fold(0.0f64, f64::max);
    let pointwise_bounded = levels
        .iter()
        .all(|l| l.du_pointwise_const <= 2.0 && l.lap_pointwise_const <= 2.0);

    let pass = critical_monotone
        && critical_growth >= 1.5
        && du_diffs_shrink
        && lap_diffs_shrink
        && subcritical_max <= 1.05
        && pointwise_bounded;

    Ok(CounterexampleReport {
        levels,
        critical_monotone,
        critical_growth,
        du_diffs_shrink,
        lap_diffs_shrink,
        subcritical_max,
        pointwise_bounded,
        pass,
    })
}

fn scan_level(level: usize, n: usize, h: f64, cutoff: &CutoffSpec) -> CounterexampleLevel {
    let half = (n - 1) / 2;
    let r_min = 4.0 * h * (1.0 - 1e-12);
    let support = cutoff.support;
    let hn = h * h * h;

    let mut sup_u = 0.0f64;
    let mut du3 = CompensatedSum::new();
    let mut du2 = CompensatedSum::new();
    let mut lap32 = CompensatedSum::new();
    let mut lap2 = CompensatedSum::new();
    let mut du_env = 0.0f64;
    let mut lap_env = 0.0f64;

    // The profile is radial; the grid is a cube centered on the singular
    // node. Exploit the octant symmetry: a node with |i|,|j|,|k| nonzero
    // patterns appears with a known multiplicity.
    for i in 0..=half {
        let x = i as f64 * h;
        let mi = if i == 0 { 1.0 } else { 2.0 };
        for j in 0..=half {
            let y = j as f64 * h;
            let mj = if j == 0 { 1.0 } else { 2.0 };
            let r2_xy = x * x + y * y;
            if r2_xy > support * support {
                continue;
            }
            for k in 0..=half {
                let z = k as f64 * h;
                let r = (r2_xy + z * z).sqrt();
                if r >= support {
                    break;
                }
                if r < r_min {
                    continue;
                }
                let mult = mi * mj * if k == 0 { 1.0 } else { 2.0 };
                let (u, du, lap) = counterexample_profile(r, cutoff);
                let au = u.abs();
                if au > sup_u {
                    sup_u = au;
                }
                let alap = lap.abs();
                du3.add(mult * du * du * du * hn);
                du2.add(mult * du * du * hn);
                lap32.add(mult * alap.powf(1.5) * hn);
                lap2.add(mult * alap * alap * hn);
                if r <= 0.25 {
                    let lr = r.ln().abs();
                    du_env = du_env.max(du * r * lr);
                    lap_env = lap_env.max(alap * r * r * lr);
                }
            }
        }
    }

    let du_l3 = du3.value().powf(1.0 / 3.0);
    let du_l2 = du2.value().sqrt();
    let lap_l32 = lap32.value().powf(2.0 / 3.0);
    let lap_l2 = lap2.value().sqrt();
    CounterexampleLevel {
        level,
        h,
        sup_u,
        du_l3,
        lap_l32,
        critical_ratio: sup_u * sup_u / (lap_l32 * du_l3),
        subcritical_ratio: PI * sup_u * sup_u / (lap_l2 * du_l2),
        du_pointwise_const: du_env,
        lap_pointwise_const: lap_env,
    }
}
