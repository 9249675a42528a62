//! Conventional dual-layer PI control.
//!
//! The outer layer turns DC-link and PCC-voltage errors into current references,
//! the inner layer tracks those references with decoupling and PCC-voltage
//! feedforward. Integrators are continuous-time states integrated together with
//! the plant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::DqVector;

/// Proportional gain and integral gain (1/s) of a PI block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

impl PiGains {
    pub const fn new(kp: f64, ki: f64) -> Self {
        Self { kp, ki }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.kp.is_finite() && self.ki.is_finite()) || self.kp < 0.0 || self.ki < 0.0 {
            return Err(Error::config(field, "PI gains must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConventionalGains {
    /// Inner current loop, shared by d and q axes.
    pub current: PiGains,
    /// Outer DC-link (squared voltage) loop producing the d-axis reference.
    pub dc_link: PiGains,
    /// Outer PCC voltage loop producing the q-axis reference.
    pub voltage: PiGains,
    /// Decoupling reactance estimate, p.u.
    pub l_tilde: f64,
}

impl Default for ConventionalGains {
    fn default() -> Self {
        Self {
            current: PiGains::new(0.48, 3.27),
            dc_link: PiGains::new(0.4, 40.0),
            voltage: PiGains::new(0.25, 25.0),
            l_tilde: 0.15,
        }
    }
}

impl ConventionalGains {
    pub fn validate(&self) -> Result<()> {
        self.current.validate("conventional.current")?;
        self.dc_link.validate("conventional.dc_link")?;
        self.voltage.validate("conventional.voltage")?;
        if !(self.l_tilde.is_finite() && self.l_tilde >= 0.0) {
            return Err(Error::config("conventional.l_tilde", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Integrator states of the four PI blocks.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConventionalState {
    pub z_dc: f64,
    pub z_v: f64,
    pub z_id: f64,
    pub z_iq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlReferences {
    pub vdc2_ref: f64,
    pub vpcc_ref: f64,
}

impl Default for ControlReferences {
    fn default() -> Self {
        Self {
            vdc2_ref: 1.0,
            vpcc_ref: 1.0,
        }
    }
}

impl ControlReferences {
    pub fn validate(&self) -> Result<()> {
        if !(self.vdc2_ref > 0.0 && self.vpcc_ref > 0.0) {
            return Err(Error::config("references", "references must be positive"));
        }
        Ok(())
    }

    pub fn as_output(&self) -> OutputSample {
        OutputSample {
            vdc2: self.vdc2_ref,
            vpll: self.vpcc_ref,
        }
    }
}

/// Sampled plant outputs `y = (V_DC^2, V_PLL)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSample {
    pub vdc2: f64,
    pub vpll: f64,
}

impl OutputSample {
    pub fn to_array(self) -> [f64; 2] {
        [self.vdc2, self.vpll]
    }
}

/// Outer layer: returns the converter-frame current reference and `(dz_dc, dz_v)`.
///
/// Errors are measurement minus reference.
pub fn outer_layer(
    y: OutputSample,
    refs: &ControlReferences,
    state: &ConventionalState,
    gains: &ConventionalGains,
) -> (DqVector, (f64, f64)) {
    let e_dc = y.vdc2 - refs.vdc2_ref;
    let e_v = y.vpll - refs.vpcc_ref;
    let i_ref = DqVector::new(
        gains.dc_link.kp * e_dc + state.z_dc,
        gains.voltage.kp * e_v + state.z_v,
    );
    (i_ref, (gains.dc_link.ki * e_dc, gains.voltage.ki * e_v))
}

/// Inner layer: returns the converter terminal voltage (converter frame) and `(dz_id, dz_iq)`.
///
/// Errors are reference minus measurement so that positive gains close a
/// negative-feedback loop around the filter inductance.
pub fn inner_layer(
    i_f_c: DqVector,
    i_ref_c: DqVector,
    vpll: f64,
    state: &ConventionalState,
    gains: &ConventionalGains,
) -> (DqVector, (f64, f64)) {
    let e = i_ref_c - i_f_c;
    let pi = gains.current;
    let v_co = DqVector::new(
        pi.kp * e.d + state.z_id - gains.l_tilde * i_f_c.q + vpll,
        pi.kp * e.q + state.z_iq + gains.l_tilde * i_f_c.d,
    );
    (v_co, (pi.ki * e.d, pi.ki * e.q))
}
