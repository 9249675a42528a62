//! Load-flow initialization of the conventionally controlled converter.

use nalgebra::{DMatrix, DVector};

use crate::conventional::{ControlReferences, ConventionalGains};
use crate::error::{Error, Result};
use crate::plant::{closed_loop_derivative, rk4_step, ControllerOutputs, PlantParams, PlantState, STATE_DIM};

/// Simulated-time budget for the settle-by-simulation phase, s.
pub const SETTLE_LIMIT: f64 = 60.0;
/// Derivative max-norm accepted as settled by simulation.
pub const SETTLE_TOL: f64 = 1e-9;
/// Largest allowed distance between the simulated and root-found equilibria.
pub const CROSS_CHECK_TOL: f64 = 1e-6;

fn max_norm(d: &PlantState) -> f64 {
    d.max_abs()
}

/// Equilibrium of the CC closed loop exporting `p_export`.
///
/// The loop is simulated from a flat start until every derivative is below
/// [`SETTLE_TOL`], then polished by Newton iteration on the closed-loop vector
/// field. The two must agree to [`CROSS_CHECK_TOL`].
pub fn init_steady_state(
    plant: &PlantParams,
    refs: &ControlReferences,
    gains: &ConventionalGains,
    p_export: f64,
    dt: f64,
) -> Result<PlantState> {
    let params = PlantParams {
        pwind: p_export,
        ..*plant
    };
    let ctrl = ControllerOutputs::pi(*refs, *gains);
    let settled = settle_by_simulation(&params, &ctrl, dt)?;
    let root = newton_equilibrium(&params, &ctrl, &settled)?;
    let gap = settled
        .to_array()
        .iter()
        .zip(root.to_array())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if gap > CROSS_CHECK_TOL {
        return Err(Error::NoConvergence(format!(
            "simulated and root-found equilibria differ by {gap:.3e}"
        )));
    }
    Ok(root)
}

fn settle_by_simulation(params: &PlantParams, ctrl: &ControllerOutputs, dt: f64) -> Result<PlantState> {
    let mut state = PlantState::flat_start(params);
    let check_every = ((1e-3 / dt).round() as usize).max(1);
    let max_steps = (SETTLE_LIMIT / dt).ceil() as usize;
    for step in 1..=max_steps {
        state = rk4_step(&state, ctrl, params, dt);
        if state.is_diverged() {
            return Err(Error::NoConvergence(format!(
                "flat-start simulation diverged at t = {:.3} s",
                step as f64 * dt
            )));
        }
        if step % check_every == 0 && max_norm(&closed_loop_derivative(&state, ctrl, params)) <= SETTLE_TOL {
            return Ok(state);
        }
    }
    Err(Error::NoConvergence(format!(
        "no equilibrium reached within {SETTLE_LIMIT} s of simulated time"
    )))
}

/// Newton iteration on `f(x) = 0` for the closed-loop vector field, central-difference Jacobian.
pub fn newton_equilibrium(params: &PlantParams, ctrl: &ControllerOutputs, guess: &PlantState) -> Result<PlantState> {
    let f = |x: &[f64; STATE_DIM]| closed_loop_derivative(&PlantState::from_array(x), ctrl, params).to_array();
    let mut x = guess.to_array();
    for _ in 0..20 {
        let fx = f(&x);
        let res = fx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res <= 1e-12 {
            return Ok(PlantState::from_array(&x));
        }
        let mut jac = DMatrix::zeros(STATE_DIM, STATE_DIM);
        for j in 0..STATE_DIM {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (f(&xp), f(&xm));
            for i in 0..STATE_DIM {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&fx))
            .ok_or_else(|| Error::NoConvergence("singular Jacobian at equilibrium".into()))?;
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
    }
    let res = f(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res <= 1e-9 {
        Ok(PlantState::from_array(&x))
    } else {
        Err(Error::NoConvergence(format!("Newton residual {res:.3e}")))
    }
}
