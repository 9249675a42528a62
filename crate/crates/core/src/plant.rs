//! Averaged model of a grid-following converter on a Thévenin grid.
//!
//! The converter is an ideal voltage source behind an RL filter with a shunt
//! capacitor (the PCC node), followed by the cable and grid inductance lumped
//! into one RL branch ending at the grid source. All circuit states live in a
//! frame rotating at exactly `omega0` aligned with the grid source; the PLL angle
//! `delta_pll` is measured relative to that frame. Reactances follow the
//! `(X / omega0) dI/dt` per-unit convention.

use serde::{Deserialize, Serialize};

use crate::conventional::{
    inner_layer, outer_layer, ControlReferences, ConventionalGains, ConventionalState, OutputSample,
};
use crate::error::{Error, Result};
use crate::frames::{active_power, rotate, DqVector};

/// Any state entry above this magnitude (p.u.) counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e3;

pub const STATE_DIM: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Nominal angular frequency, rad/s.
    pub omega0: f64,
    pub xf: f64,
    pub rf: f64,
    pub bf: f64,
    pub xca: f64,
    pub rca: f64,
    pub xg: f64,
    pub vg: f64,
    /// DC-link capacitance, F.
    pub cdc: f64,
    /// Base of the squared DC voltage, V^2.
    pub vdc2_base: f64,
    /// Base power, W.
    pub pbase: f64,
    /// Generation-side power, p.u.
    pub pwind: f64,
    pub kpll_p: f64,
    pub kpll_i: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            omega0: 2.0 * std::f64::consts::PI * 60.0,
            xf: 0.15,
            rf: 0.003,
            bf: 0.178,
            xca: 0.45,
            rca: 0.045,
            xg: 0.01,
            vg: 1.0,
            cdc: 90e-3,
            vdc2_base: 1100.0 * 1100.0,
            pbase: 2e6,
            pwind: 0.9,
            kpll_p: 60.0,
            kpll_i: 1400.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("plant.omega0", self.omega0),
            ("plant.xf", self.xf),
            ("plant.rf", self.rf),
            ("plant.bf", self.bf),
            ("plant.xca", self.xca),
            ("plant.rca", self.rca),
            ("plant.xg", self.xg),
            ("plant.vg", self.vg),
            ("plant.cdc", self.cdc),
            ("plant.vdc2_base", self.vdc2_base),
            ("plant.pbase", self.pbase),
            ("plant.pwind", self.pwind),
            ("plant.kpll_p", self.kpll_p),
            ("plant.kpll_i", self.kpll_i),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("plant.rf", self.rf),
            ("plant.rca", self.rca),
            ("plant.xg", self.xg),
            ("plant.vg", self.vg),
            ("plant.kpll_p", self.kpll_p),
            ("plant.kpll_i", self.kpll_i),
        ] {
            if v < 0.0 {
                return Err(Error::config(name, "must be non-negative"));
            }
        }
        for (name, v) in [
            ("plant.omega0", self.omega0),
            ("plant.xf", self.xf),
            ("plant.bf", self.bf),
            ("plant.xca", self.xca),
            ("plant.cdc", self.cdc),
            ("plant.vdc2_base", self.vdc2_base),
            ("plant.pbase", self.pbase),
        ] {
            if v <= 0.0 {
                return Err(Error::config(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// `d(vdc2)/dt` per unit of power mismatch, 1/s.
    pub fn dc_link_rate(&self) -> f64 {
        2.0 * self.pbase / (self.cdc * self.vdc2_base)
    }
}

/// A grid fault: `(xg, vg)` are replaced by the faulted values on `[t_start, t_clear)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEvent {
    pub t_start: f64,
    pub t_clear: f64,
    pub xg_fault: f64,
    pub vg_fault: f64,
}

impl Default for FaultEvent {
    fn default() -> Self {
        Self {
            t_start: 1.0,
            t_clear: 5.0,
            xg_fault: 0.1819,
            vg_fault: 0.96,
        }
    }
}

impl FaultEvent {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_start >= 0.0) {
            return Err(Error::config("fault.t_start", "must be non-negative"));
        }
        if !(self.t_clear > self.t_start) {
            return Err(Error::config("fault.t_clear", "must be later than fault.t_start"));
        }
        if !(self.xg_fault >= 0.0 && self.xg_fault.is_finite()) {
            return Err(Error::config("fault.xg_fault", "must be finite and non-negative"));
        }
        if !(self.vg_fault >= 0.0 && self.vg_fault.is_finite()) {
            return Err(Error::config("fault.vg_fault", "must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.t_start <= t && t < self.t_clear
    }
}

/// Returns `params` with the grid reactance and voltage of `fault` when it is active at `t`.
pub fn apply_fault_schedule(params: &PlantParams, fault: &FaultEvent, t: f64) -> PlantParams {
    let mut p = *params;
    if fault.is_active(t) {
        p.xg = fault.xg_fault;
        p.vg = fault.vg_fault;
    }
    p
}

/// Continuous state of the closed-loop plant (circuit, DC link, PLL, PI integrators).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    /// Filter current, grid frame.
    pub i_f: DqVector,
    /// Filter-capacitor node voltage, grid frame.
    pub v_pcc: DqVector,
    /// Cable/grid current, grid frame.
    pub i_g: DqVector,
    pub vdc2: f64,
    /// PLL angle minus grid angle.
    pub delta_pll: f64,
    pub xi_pll: f64,
    pub cc: ConventionalState,
}

/// Time derivative of every [`PlantState`] field, stored in the same layout.
pub type PlantStateDerivative = PlantState;

impl PlantState {
    /// Flat start: no current, PCC at the grid voltage, nominal DC link.
    pub fn flat_start(params: &PlantParams) -> Self {
        Self {
            v_pcc: DqVector::new(params.vg, 0.0),
            vdc2: 1.0,
            ..Default::default()
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.i_f.d,
            self.i_f.q,
            self.v_pcc.d,
            self.v_pcc.q,
            self.i_g.d,
            self.i_g.q,
            self.vdc2,
            self.delta_pll,
            self.xi_pll,
            self.cc.z_dc,
            self.cc.z_v,
            self.cc.z_id,
            self.cc.z_iq,
        ]
    }

    pub fn from_array(a: &[f64; STATE_DIM]) -> Self {
        Self {
            i_f: DqVector::new(a[0], a[1]),
            v_pcc: DqVector::new(a[2], a[3]),
            i_g: DqVector::new(a[4], a[5]),
            vdc2: a[6],
            delta_pll: a[7],
            xi_pll: a[8],
            cc: ConventionalState {
                z_dc: a[9],
                z_v: a[10],
                z_id: a[11],
                z_iq: a[12],
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when any entry is non-finite, exceeds [`DIVERGENCE_LIMIT`], or the DC link collapsed.
    pub fn is_diverged(&self) -> bool {
        !self.is_finite() || self.max_abs() > DIVERGENCE_LIMIT || self.vdc2 <= 0.0
    }

    /// PCC voltage in the converter (PLL) frame.
    pub fn v_pcc_converter(&self) -> DqVector {
        rotate(self.v_pcc, self.delta_pll)
    }

    /// Filter current in the converter (PLL) frame.
    pub fn i_f_converter(&self) -> DqVector {
        rotate(self.i_f, self.delta_pll)
    }
}

/// `y = (vdc2, V_PLL)` with `V_PLL` the d-component of the PCC voltage in the PLL frame.
pub fn measure_outputs(state: &PlantState) -> OutputSample {
    OutputSample {
        vdc2: state.vdc2,
        vpll: state.v_pcc_converter().d,
    }
}

/// Physical-plant derivatives for a converter-frame terminal voltage `v_co_c`.
///
/// The `cc` entries of the result are zero; PI integrators are driven by
/// [`closed_loop_derivative`].
pub fn derivative(
    state: &PlantState,
    v_co_c: DqVector,
    params: &PlantParams,
) -> Result<PlantStateDerivative> {
    if !state.is_finite() || !v_co_c.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(physical_derivative(state, v_co_c, params))
}

fn physical_derivative(state: &PlantState, v_co_c: DqVector, p: &PlantParams) -> PlantStateDerivative {
    let w = p.omega0;
    let v_co = rotate(v_co_c, -state.delta_pll);
    let v_g = DqVector::new(p.vg, 0.0);

    let di_f = (w / p.xf) * (v_co - state.v_pcc - p.rf * state.i_f - p.xf * state.i_f.perp());
    let dv_pcc = (w / p.bf) * (state.i_f - state.i_g - p.bf * state.v_pcc.perp());
    let x_line = p.xca + p.xg;
    let di_g = (w / x_line) * (state.v_pcc - v_g - p.rca * state.i_g - x_line * state.i_g.perp());

    let power = active_power(v_co_c, state.i_f_converter());
    let dvdc2 = p.dc_link_rate() * (p.pwind - power);

    let vq = state.v_pcc_converter().q;
    PlantState {
        i_f: di_f,
        v_pcc: dv_pcc,
        i_g: di_g,
        vdc2: dvdc2,
        delta_pll: p.kpll_p * vq + state.xi_pll,
        xi_pll: p.kpll_i * vq,
        cc: ConventionalState::default(),
    }
}

/// Source of the current reference fed to the inner PI layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterCommand {
    /// Continuous outer PI layer.
    Pi,
    /// A reference held constant over the step (zero-order hold). When
    /// `integrate_outer` is set the outer PI integrators keep running in the
    /// background; otherwise they are frozen.
    Hold {
        i_ref: DqVector,
        integrate_outer: bool,
    },
}

/// Everything outside the plant state that the closed loop needs over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerOutputs {
    pub command: OuterCommand,
    pub refs: ControlReferences,
    pub gains: ConventionalGains,
}

impl ControllerOutputs {
    pub fn pi(refs: ControlReferences, gains: ConventionalGains) -> Self {
        Self {
            command: OuterCommand::Pi,
            refs,
            gains,
        }
    }
}

/// Current reference the inner layer would receive at `state`.
pub fn current_reference(state: &PlantState, ctrl: &ControllerOutputs) -> DqVector {
    match ctrl.command {
        OuterCommand::Pi => outer_layer(measure_outputs(state), &ctrl.refs, &state.cc, &ctrl.gains).0,
        OuterCommand::Hold { i_ref, .. } => i_ref,
    }
}

/// Full closed-loop derivative: outer command, inner PI, plant, DC link and PLL.
pub fn closed_loop_derivative(state: &PlantState, ctrl: &ControllerOutputs, params: &PlantParams) -> PlantStateDerivative {
    let y = measure_outputs(state);
    let (outer_pi_ref, (dz_dc, dz_v)) = outer_layer(y, &ctrl.refs, &state.cc, &ctrl.gains);
    let (i_ref, outer_dz) = match ctrl.command {
        OuterCommand::Pi => (outer_pi_ref, (dz_dc, dz_v)),
        OuterCommand::Hold { i_ref, integrate_outer } => {
            (i_ref, if integrate_outer { (dz_dc, dz_v) } else { (0.0, 0.0) })
        }
    };
    let (v_co_c, (dz_id, dz_iq)) = inner_layer(state.i_f_converter(), i_ref, y.vpll, &state.cc, &ctrl.gains);
    let mut d = physical_derivative(state, v_co_c, params);
    d.cc = ConventionalState {
        z_dc: outer_dz.0,
        z_v: outer_dz.1,
        z_id: dz_id,
        z_iq: dz_iq,
    };
    d
}

fn axpy(x: &[f64; STATE_DIM], h: f64, k: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
    std::array::from_fn(|i| x[i] + h * k[i])
}

/// Classical fixed-step RK4 over a generic autonomous vector field.
pub fn rk4<const N: usize>(x: &[f64; N], dt: f64, f: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let k1 = f(x);
    let k2 = f(&std::array::from_fn(|i| x[i] + 0.5 * dt * k1[i]));
    let k3 = f(&std::array::from_fn(|i| x[i] + 0.5 * dt * k2[i]));
    let k4 = f(&std::array::from_fn(|i| x[i] + dt * k3[i]));
    std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// One RK4 step of the closed loop with `ctrl` and `params` held over the step.
pub fn rk4_step(state: &PlantState, ctrl: &ControllerOutputs, params: &PlantParams, dt: f64) -> PlantState {
    let f = |x: &[f64; STATE_DIM]| closed_loop_derivative(&PlantState::from_array(x), ctrl, params).to_array();
    let x = state.to_array();
    let k1 = f(&x);
    let k2 = f(&axpy(&x, 0.5 * dt, &k1));
    let k3 = f(&axpy(&x, 0.5 * dt, &k2));
    let k4 = f(&axpy(&x, dt, &k3));
    let next: [f64; STATE_DIM] =
        std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    PlantState::from_array(&next)
}

/// [`rk4_step`] that reports divergence as an error.
pub fn try_rk4_step(
    state: &PlantState,
    ctrl: &ControllerOutputs,
    params: &PlantParams,
    dt: f64,
    t: f64,
) -> Result<PlantState> {
    let next = rk4_step(state, ctrl, params, dt);
    if next.is_diverged() {
        return Err(Error::Diverged { t: t + dt });
    }
    Ok(next)
}
