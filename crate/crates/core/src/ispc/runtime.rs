use std::collections::VecDeque;

use super::ControllerGains;
use crate::error::{Error, Result};

/// Past-window ring buffers of the online controller.
///
/// Call [`observe_output`](Self::observe_output) with `y(k)` at every sample,
/// then either [`control_step`](Self::control_step) or, while another
/// controller is in command, [`record_input`](Self::record_input) with the
/// applied `u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IspcRuntime {
    n_u: usize,
    n_y: usize,
    t_ini: usize,
    du_ini: VecDeque<f64>,
    y_ini: VecDeque<f64>,
    u_prev: Option<Vec<f64>>,
}

impl IspcRuntime {
    pub fn new(n_u: usize, n_y: usize, t_ini: usize) -> Self {
        Self {
            n_u,
            n_y,
            t_ini,
            du_ini: VecDeque::with_capacity(t_ini * n_u),
            y_ini: VecDeque::with_capacity(t_ini * n_y),
            u_prev: None,
        }
    }

    pub fn for_gains(gains: &ControllerGains) -> Self {
        Self::new(gains.n_u, gains.n_y, gains.t_ini)
    }

    /// Buffers as they would be after resting at a steady state `(u, y)` for `t_ini` samples.
    pub fn at_rest(n_u: usize, t_ini: usize, u: &[f64], y: &[f64]) -> Self {
        let mut rt = Self::new(n_u, y.len(), t_ini);
        rt.u_prev = Some(u.to_vec());
        for _ in 0..t_ini {
            rt.du_ini.extend(std::iter::repeat_n(0.0, n_u));
            rt.y_ini.extend(y.iter().copied());
        }
        rt
    }

    /// Both windows hold `t_ini` samples and a previous input is known.
    pub fn is_ready(&self) -> bool {
        self.u_prev.is_some()
            && self.du_ini.len() == self.t_ini * self.n_u
            && self.y_ini.len() == self.t_ini * self.n_y
    }

    pub fn u_prev(&self) -> Option<&[f64]> {
        self.u_prev.as_deref()
    }

    /// Past increments, oldest first.
    pub fn du_window(&self) -> Vec<f64> {
        self.du_ini.iter().copied().collect()
    }

    /// Past outputs, oldest first.
    pub fn y_window(&self) -> Vec<f64> {
        self.y_ini.iter().copied().collect()
    }

    pub fn observe_output(&mut self, y: &[f64]) {
        assert_eq!(y.len(), self.n_y, "output dimension");
        push_window(&mut self.y_ini, y, self.t_ini * self.n_y);
    }

    /// Records an input applied by some other controller.
    pub fn record_input(&mut self, u: &[f64]) {
        assert_eq!(u.len(), self.n_u, "input dimension");
        if let Some(prev) = &self.u_prev {
            let du: Vec<f64> = u.iter().zip(prev).map(|(a, b)| a - b).collect();
            push_window(&mut self.du_ini, &du, self.t_ini * self.n_u);
        }
        self.u_prev = Some(u.to_vec());
    }

    /// First optimal increment for the current windows, without updating state.
    pub fn first_increment(&self, gains: &ControllerGains, r_y: &[f64]) -> Result<Vec<f64>> {
        if !self.is_ready() {
            return Err(Error::InvalidInput("controller invoked before its past window is full".into()));
        }
        if gains.n_u != self.n_u || gains.n_y != self.n_y || gains.t_ini != self.t_ini || r_y.len() != self.n_y {
            return Err(Error::InvalidInput("gain dimensions do not match the runtime".into()));
        }
        let reference = gains.reference_term(r_y);
        let du0 = (0..self.n_u)
            .map(|i| {
                let a: f64 = self.du_ini.iter().enumerate().map(|(j, v)| gains.k1[(i, j)] * v).sum();
                let b: f64 = self.y_ini.iter().enumerate().map(|(j, v)| gains.k2[(i, j)] * v).sum();
                a + b - reference[i]
            })
            .collect();
        Ok(du0)
    }

    /// Computes `u(k) = u(k-1) + du0`, stores it and returns it.
    pub fn control_step(&mut self, gains: &ControllerGains, r_y: &[f64]) -> Result<Vec<f64>> {
        let du0 = self.first_increment(gains, r_y)?;
        let prev = self.u_prev.as_ref().expect("ready runtime has a previous input");
        let u: Vec<f64> = prev.iter().zip(&du0).map(|(p, d)| p + d).collect();
        push_window(&mut self.du_ini, &du0, self.t_ini * self.n_u);
        self.u_prev = Some(u.clone());
        Ok(u)
    }
}

fn push_window(buf: &mut VecDeque<f64>, sample: &[f64], cap: usize) {
    buf.extend(sample.iter().copied());
    while buf.len() > cap {
        buf.pop_front();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn gains(scale: f64) -> ControllerGains {
        let mut g = ControllerGains::zeros(2, 2, 3, 4);
        g.k1 = DMatrix::from_fn(2, 6, |i, j| scale * (0.1 * (i + 1) as f64 - 0.05 * j as f64));
        g.k2 = DMatrix::from_fn(2, 6, |i, j| scale * if j % 2 == i { -0.2 } else { 0.03 });
        g.kr = DMatrix::from_fn(2, 8, |i, j| scale * if j % 2 == i { -0.15 } else { 0.0 });
        g
    }

    fn warm(rt: &mut IspcRuntime) {
        for k in 0..4 {
            let y = [1.0 + 0.01 * k as f64, 0.99];
            rt.observe_output(&y);
            rt.record_input(&[0.5 + 0.02 * k as f64, -0.1 * k as f64]);
        }
    }

    #[test]
    fn warm_up_contract() {
        let mut rt = IspcRuntime::new(2, 2, 3);
        assert!(!rt.is_ready());
        assert!(rt.control_step(&gains(1.0), &[1.0, 1.0]).is_err());
        warm(&mut rt);
        assert!(rt.is_ready());
        assert_eq!(rt.du_window().len(), 6);
        assert_eq!(rt.y_window().len(), 6);
    }

    #[test]
    fn zero_gains_hold_input() {
        let mut rt = IspcRuntime::new(2, 2, 3);
        warm(&mut rt);
        let prev = rt.u_prev().unwrap().to_vec();
        let u = rt.control_step(&ControllerGains::zeros(2, 2, 3, 4), &[1.0, 1.0]).unwrap();
        assert_eq!(u, prev);
    }

    #[test]
    fn law_is_linear() {
        let g = gains(1.0);
        let mut rt = IspcRuntime::new(2, 2, 3);
        warm(&mut rt);
        let du = rt.first_increment(&g, &[1.0, 1.0]).unwrap();
        let mut doubled = IspcRuntime::new(2, 2, 3);
        for k in 0..4 {
            let y = [2.0 * (1.0 + 0.01 * k as f64), 2.0 * 0.99];
            doubled.observe_output(&y);
            doubled.record_input(&[2.0 * (0.5 + 0.02 * k as f64), 2.0 * (-0.1 * k as f64)]);
        }
        let du2 = doubled.first_increment(&g, &[2.0, 2.0]).unwrap();
        for (a, b) in du.iter().zip(&du2) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn step_updates_buffers() {
        let g = gains(1.0);
        let mut rt = IspcRuntime::new(2, 2, 3);
        warm(&mut rt);
        let prev = rt.u_prev().unwrap().to_vec();
        let du = rt.first_increment(&g, &[1.0, 1.0]).unwrap();
        let u = rt.control_step(&g, &[1.0, 1.0]).unwrap();
        assert_eq!(u, vec![prev[0] + du[0], prev[1] + du[1]]);
        let w = rt.du_window();
        assert_eq!(&w[4..], &du[..]);
    }

    #[test]
    fn at_rest_is_ready_with_zero_increments() {
        let rt = IspcRuntime::at_rest(2, 3, &[0.9, 0.1], &[1.0, 1.0]);
        assert!(rt.is_ready());
        assert!(rt.du_window().iter().all(|&v| v == 0.0));
        assert_eq!(rt.y_window(), vec![1.0; 6]);
    }
}
