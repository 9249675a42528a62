//! Stability classification over the fault reactance and critical-reactance bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::classify_stability;
use super::scenario::{simulate, PretrainedController, ScenarioConfig};
use crate::error::{Error, Result};

/// Default bisection tolerance on the fault reactance, p.u.
pub const DEFAULT_TOL: f64 = 5e-4;

/// One classified fault scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub xg: f64,
    pub vg: f64,
    pub stable: bool,
    pub diverged_at: Option<f64>,
}

/// Classifies the scenario with the fault reactance replaced by `xg`.
pub fn classify_at(cfg: &ScenarioConfig, xg: f64, pretrained: Option<&PretrainedController>) -> Result<SweepPoint> {
    let mut c = cfg.clone();
    c.fault.xg_fault = xg;
    let run = simulate(&c, pretrained)?;
    let refs = [c.references.vdc2_ref, c.references.vpcc_ref];
    Ok(SweepPoint {
        xg,
        vg: c.fault.vg_fault,
        stable: classify_stability(&run.trace, &c.fault, refs),
        diverged_at: run.trace.diverged,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// Classifies every reactance in `xgs` on `jobs` worker threads (0 = all cores).
pub fn sweep(
    cfg: &ScenarioConfig,
    xgs: &[f64],
    jobs: usize,
    pretrained: Option<&PretrainedController>,
) -> Result<Vec<SweepPoint>> {
    pool(jobs)?.install(|| xgs.par_iter().map(|&x| classify_at(cfg, x, pretrained)).collect())
}

/// Result of a critical-reactance search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    /// Largest reactance classified stable.
    pub critical: f64,
    /// Smallest reactance classified unstable.
    pub unstable_above: f64,
    pub tol: f64,
    pub vg: f64,
    /// Every classification performed, in evaluation order.
    pub evaluations: Vec<SweepPoint>,
}

/// Bisection on the fault reactance over `[lower, upper]`.
///
/// The endpoints must classify differently; the stable side is expected at
/// `lower`. Each round evaluates `jobs` interior points in parallel, so with
/// one job this is plain bisection.
pub fn critical_reactance(
    cfg: &ScenarioConfig,
    lower: f64,
    upper: f64,
    tol: f64,
    jobs: usize,
    pretrained: Option<&PretrainedController>,
) -> Result<CriticalSearch> {
    if !(tol > 0.0) {
        return Err(Error::config("tol", "must be positive"));
    }
    if !(lower.is_finite() && upper.is_finite() && lower > 0.0) {
        return Err(Error::config("search_range", "endpoints must be finite and positive"));
    }
    let ends = sweep(cfg, &[lower, upper], jobs.min(2), pretrained)?;
    let (lo, hi) = (ends[0], ends[1]);
    if !(upper > lower) || !lo.stable || hi.stable {
        return Err(Error::NotBracketed {
            lower,
            upper,
            lower_stable: lo.stable,
            upper_stable: hi.stable,
        });
    }
    let workers = if jobs == 0 { rayon::current_num_threads() } else { jobs }.max(1);
    let mut evaluations = ends;
    let (mut a, mut b) = (lower, upper);
    while b - a > tol {
        let pts: Vec<f64> = (1..=workers).map(|i| a + (b - a) * i as f64 / (workers + 1) as f64).collect();
        let res = sweep(cfg, &pts, workers, pretrained)?;
        for p in &res {
            if p.stable {
                a = a.max(p.xg);
            }
        }
        // the first unstable point above the new stable end closes the bracket
        b = res
            .iter()
            .filter(|p| !p.stable && p.xg > a)
            .map(|p| p.xg)
            .fold(b, f64::min);
        evaluations.extend(res);
    }
    Ok(CriticalSearch {
        critical: a,
        unstable_above: b,
        tol,
        vg: cfg.fault.vg_fault,
        evaluations,
    })
}
