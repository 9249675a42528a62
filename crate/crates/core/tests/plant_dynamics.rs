mod common;

use gcpc::conventional::{ControlReferences, ConventionalGains, PiGains};
use gcpc::harness::init_steady_state;
use gcpc::plant::{closed_loop_derivative, measure_outputs, rk4_step, ControllerOutputs, PlantParams, PlantState};

fn equilibrium() -> (PlantParams, PlantState) {
    let p = PlantParams::default();
    let s = init_steady_state(&p, &ControlReferences::default(), &ConventionalGains::default(), p.pwind, 1e-5).unwrap();
    (p, s)
}

fn simulate(start: PlantState, ctrl: &ControllerOutputs, p: &PlantParams, seconds: f64) -> PlantState {
    let dt = 1e-5;
    let mut s = start;
    for _ in 0..(seconds / dt).round() as usize {
        s = rk4_step(&s, ctrl, p, dt);
        if s.is_diverged() {
            break;
        }
    }
    s
}

#[test]
fn rk4_is_fourth_order_on_the_closed_loop() {
    let order = common::closed_loop_rk4_order();
    assert!((3.5..=4.5).contains(&order), "observed order {order}");
}

#[test]
fn equilibrium_is_a_fixed_point_of_the_integrator() {
    let (p, s) = equilibrium();
    let ctrl = ControllerOutputs::pi(ControlReferences::default(), ConventionalGains::default());
    assert!(closed_loop_derivative(&s, &ctrl, &p).max_abs() <= 1e-8);
    let later = simulate(s, &ctrl, &p, 0.5);
    let y = measure_outputs(&later);
    assert!((y.vdc2 - 1.0).abs() < 1e-6 && (y.vpll - 1.0).abs() < 1e-6, "{y:?}");
}

fn perturbed(s: PlantState) -> PlantState {
    PlantState {
        vdc2: s.vdc2 + 0.02,
        ..s
    }
}

#[test]
fn cc_recovers_from_a_dc_link_disturbance() {
    let (p, s) = equilibrium();
    let ctrl = ControllerOutputs::pi(ControlReferences::default(), ConventionalGains::default());
    let y = measure_outputs(&simulate(perturbed(s), &ctrl, &p, 2.0));
    assert!((y.vdc2 - 1.0).abs() < 1e-3, "{y:?}");
    assert!((y.vpll - 1.0).abs() < 1e-3, "{y:?}");
}

#[test]
fn flipped_outer_error_sign_does_not_recover() {
    let (p, s) = equilibrium();
    let g = ConventionalGains::default();
    let flip = |pi: PiGains| PiGains { kp: -pi.kp, ki: -pi.ki };
    let flipped = ConventionalGains {
        dc_link: flip(g.dc_link),
        voltage: flip(g.voltage),
        ..g
    };
    let ctrl = ControllerOutputs::pi(ControlReferences::default(), flipped);
    let end = simulate(perturbed(s), &ctrl, &p, 2.0);
    let y = measure_outputs(&end);
    assert!(end.is_diverged() || (y.vdc2 - 1.0).abs() > 1e-2, "{y:?}");
}

#[test]
fn dc_link_integrates_power_mismatch() {
    let (p, s) = equilibrium();
    let ctrl = ControllerOutputs::pi(ControlReferences::default(), ConventionalGains::default());
    let more = PlantParams { pwind: p.pwind + 0.1, ..p };
    let d = closed_loop_derivative(&s, &ctrl, &more);
    assert!((d.vdc2 - more.dc_link_rate() * 0.1).abs() < 1e-9, "{}", d.vdc2);
}
