//! Shared fixtures: random LTI systems and independent reference computations.
#![allow(dead_code)]

use gcpc::ispc::{
    block_weights, build_hankel, compute_gains, estimate_predictor, IoLog, IspcConfig, IspcRuntime, Predictor, RankReport,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Discrete-time `x+ = A x + B u`, `y = C x`.
#[derive(Debug, Clone)]
pub struct Lti {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

impl Lti {
    /// Random system with spectral norm of `A` at most `rho`.
    pub fn random(rng: &mut ChaCha8Rng, n_x: usize, n_u: usize, n_y: usize, rho: f64) -> Self {
        let mut a = uniform(rng, n_x, n_x);
        let norm = a.clone().svd(false, false).singular_values.max();
        if norm > 0.0 {
            a *= rho / norm;
        }
        Self {
            a,
            b: uniform(rng, n_x, n_u),
            c: uniform(rng, n_y, n_x),
        }
    }

    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_y(&self) -> usize {
        self.c.nrows()
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    /// Augmented matrices for the state `[x(k); u(k-1)]` driven by `du(k)`.
    pub fn integral_form(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let (n, m, p) = (self.n_x(), self.n_u(), self.n_y());
        let mut a = DMatrix::zeros(n + m, n + m);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a.view_mut((0, n), (n, m)).copy_from(&self.b);
        a.view_mut((n, n), (m, m)).fill_with_identity();
        let mut b = DMatrix::zeros(n + m, m);
        b.view_mut((0, 0), (n, m)).copy_from(&self.b);
        b.view_mut((n, 0), (m, m)).fill_with_identity();
        let mut c = DMatrix::zeros(p, n + m);
        c.view_mut((0, 0), (p, n)).copy_from(&self.c);
        (a, b, c)
    }

    /// Lifted integral predictor: `Y = Phi z + Gamma dU` over `horizon` steps,
    /// with `Y = y(k+1..k+N)` and `dU = du(k..k+N-1)`.
    pub fn lifted(&self, horizon: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let (a, b, c) = self.integral_form();
        let (n, m, p) = (a.nrows(), self.n_u(), self.n_y());
        let mut powers = vec![DMatrix::identity(n, n)];
        for i in 1..=horizon {
            powers.push(&a * &powers[i - 1]);
        }
        let mut phi = DMatrix::zeros(horizon * p, n);
        let mut gamma = DMatrix::zeros(horizon * p, horizon * m);
        for i in 1..=horizon {
            phi.view_mut(((i - 1) * p, 0), (p, n)).copy_from(&(&c * &powers[i]));
            for j in 0..i {
                let blk = &c * &powers[i - 1 - j] * &b;
                gamma.view_mut(((i - 1) * p, j * m), (p, m)).copy_from(&blk);
            }
        }
        (phi, gamma)
    }
}

/// Raw trajectory: `u[k]` applied over `[k, k+1)`, `y[k] = C x[k]`, `x[k]` the state at `k`.
pub struct Trajectory {
    pub u: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub x: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn to_log(&self) -> IoLog {
        let mut log = IoLog::new(self.u[0].len(), self.y[0].len());
        for (u, y) in self.u.iter().zip(&self.y) {
            log.push(u.as_slice(), y.as_slice());
        }
        log
    }

    /// Past increments `u(j) - u(j-1)` for `j = k-t_ini..k-1`, stacked oldest first.
    pub fn du_window(&self, k: usize, len: usize) -> Vec<f64> {
        (k - len..k).flat_map(|j| (&self.u[j] - &self.u[j - 1]).iter().copied().collect::<Vec<_>>()).collect()
    }

    /// Outputs `y(k-t_ini+1..k)`, stacked oldest first.
    pub fn y_window(&self, k: usize, len: usize) -> Vec<f64> {
        (k + 1 - len..=k).flat_map(|j| self.y[j].iter().copied().collect::<Vec<_>>()).collect()
    }
}

/// Simulates `samples` steps from `x0` under uniform white-noise inputs in `[-1, 1]`.
pub fn white_noise_run(sys: &Lti, x0: DVector<f64>, samples: usize, rng: &mut ChaCha8Rng) -> Trajectory {
    let mut x = x0;
    let mut t = Trajectory {
        u: Vec::with_capacity(samples),
        y: Vec::with_capacity(samples),
        x: Vec::with_capacity(samples),
    };
    for _ in 0..samples {
        let u = DVector::from_fn(sys.n_u(), |_, _| rng.random_range(-1.0..1.0));
        t.y.push(sys.output(&x));
        t.x.push(x.clone());
        let next = sys.step(&x, &u);
        t.u.push(u);
        x = next;
    }
    t
}

/// Small configuration for synthetic systems.
pub fn small_config(t_ini: usize, horizon: usize, t_cols: usize) -> IspcConfig {
    IspcConfig {
        t_cols,
        t_ini,
        horizon,
        q: DMatrix::identity(2, 2),
        p: DMatrix::identity(2, 2),
        r: DMatrix::identity(2, 2) * 0.1,
        ..IspcConfig::default()
    }
}

/// Hankel blocks by explicit index arithmetic on the raw log: column `j` is
/// anchored at raw time `m = t_ini + j + 1`.
pub fn hankel_by_index(log: &IoLog, t_ini: usize, horizon: usize, cols: usize) -> [DMatrix<f64>; 4] {
    let (n_u, n_y) = (log.n_u, log.n_y);
    let mut du_p = DMatrix::zeros(t_ini * n_u, cols);
    let mut y_p = DMatrix::zeros(t_ini * n_y, cols);
    let mut du_f = DMatrix::zeros(horizon * n_u, cols);
    let mut y_f = DMatrix::zeros(horizon * n_y, cols);
    for j in 0..cols {
        let m = t_ini + j + 1;
        for (blk, time) in (m - t_ini..m).enumerate() {
            for c in 0..n_u {
                du_p[(blk * n_u + c, j)] = log.u(time)[c] - log.u(time - 1)[c];
            }
        }
        for (blk, time) in (m + 1 - t_ini..=m).enumerate() {
            for c in 0..n_y {
                y_p[(blk * n_y + c, j)] = log.y(time)[c];
            }
        }
        for (blk, time) in (m..m + horizon).enumerate() {
            for c in 0..n_u {
                du_f[(blk * n_u + c, j)] = log.u(time)[c] - log.u(time - 1)[c];
            }
        }
        for (blk, time) in (m + 1..=m + horizon).enumerate() {
            for c in 0..n_y {
                y_f[(blk * n_y + c, j)] = log.y(time)[c];
            }
        }
    }
    [du_p, y_p, du_f, y_f]
}

/// Minimizer of `(G dU + f - r)' W (G dU + f - r) + dU' V dU` as a stacked
/// least-squares problem solved by Householder QR.
pub fn qp_by_least_squares(
    g: &DMatrix<f64>,
    free: &DVector<f64>,
    r: &DVector<f64>,
    w: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> DVector<f64> {
    let lw = w.clone().cholesky().expect("W positive definite").l();
    let lv = v.clone().cholesky().expect("V positive definite").l();
    let (ny, nu) = (g.nrows(), g.ncols());
    let mut a = DMatrix::zeros(ny + nu, nu);
    a.view_mut((0, 0), (ny, nu)).copy_from(&(lw.transpose() * g));
    a.view_mut((ny, 0), (nu, nu)).copy_from(&lv.transpose());
    let mut rhs = DVector::zeros(ny + nu);
    rhs.rows_mut(0, ny).copy_from(&(lw.transpose() * (r - free)));
    let qr = a.qr();
    let qtb = qr.q().transpose() * rhs;
    qr.r().solve_upper_triangular(&qtb).expect("full column rank")
}

/// Random symmetric positive definite matrix with eigenvalues in `[lo, lo + 1]`-ish.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64) -> DMatrix<f64> {
    let m = uniform(rng, n, n);
    (&m * m.transpose()) / n as f64 + DMatrix::identity(n, n) * lo
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Observed convergence order of the closed-loop RK4 integrator over 20 ms
/// of the faulted CC loop started from the nominal equilibrium.
pub fn closed_loop_rk4_order() -> f64 {
    use gcpc::conventional::{ControlReferences, ConventionalGains};
    use gcpc::harness::init_steady_state;
    use gcpc::plant::{rk4_step, ControllerOutputs, PlantParams};

    let plant = PlantParams::default();
    let refs = ControlReferences::default();
    let gains = ConventionalGains::default();
    let start = init_steady_state(&plant, &refs, &gains, plant.pwind, 1e-5).unwrap();
    let faulted = PlantParams {
        xg: 0.1819,
        vg: 0.96,
        ..plant
    };
    let ctrl = ControllerOutputs::pi(refs, gains);
    let horizon = 0.02;
    let run = |steps: usize| {
        let dt = horizon / steps as f64;
        let mut s = start;
        for _ in 0..steps {
            s = rk4_step(&s, &ctrl, &faulted, dt);
        }
        s.to_array()
    };
    let reference = run(1600);
    let coarse = max_abs_diff(&run(200), &reference);
    let fine = max_abs_diff(&run(400), &reference);
    (coarse / fine).log2()
}

/// Held-out prediction error against the lifted model, `Gamma` error and
/// training residual for a random system identified from white-noise data.
pub fn predictor_vs_lifted(seed: u64, n_x: usize) -> (f64, f64, f64) {
    let mut r = rng(seed);
    let sys = Lti::random(&mut r, n_x, 2, 2, 0.9);
    let cfg = small_config(6, 8, 300);
    let x0 = DVector::from_fn(n_x, |_, _| r.random_range(-1.0..1.0));
    let train = white_noise_run(&sys, x0, cfg.required_samples(), &mut r);
    let h = build_hankel(&train.to_log(), &cfg).unwrap();
    let pred = estimate_predictor(&h).unwrap();

    let (phi, gamma) = sys.lifted(8);
    let x0 = train.x.last().unwrap().clone();
    let test = white_noise_run(&sys, x0, 100 + 6 + 1, &mut r);
    let mut worst = 0.0f64;
    for m in 6 + 1..6 + 101 {
        let du_future: Vec<f64> = (0..8 * 2).map(|_| r.random_range(-1.0..1.0)).collect();
        let got = pred.predict(&test.du_window(m, 6), &test.y_window(m, 6), &du_future);
        let mut z = DVector::zeros(n_x + 2);
        z.rows_mut(0, n_x).copy_from(&test.x[m]);
        z.rows_mut(n_x, 2).copy_from(&test.u[m - 1]);
        let expect = &phi * z + &gamma * DVector::from_column_slice(&du_future);
        worst = worst.max(max_abs_diff(&got, expect.as_slice()));
    }
    let gamma_err = (&pred.gamma - &gamma).amax();
    (worst, gamma_err, pred.training_residual)
}

fn random_law_instance(r: &mut ChaCha8Rng) -> (IspcConfig, Predictor) {
    let t_ini = r.random_range(4..7);
    let horizon = t_ini + r.random_range(0..5);
    let cfg = IspcConfig {
        t_cols: 200,
        t_ini,
        horizon,
        q: random_spd(r, 2, 0.1),
        p: random_spd(r, 2, 0.1),
        r: random_spd(r, 2, 0.05),
        ..IspcConfig::default()
    };
    let pred = Predictor {
        p1: uniform(r, horizon * 2, t_ini * 2),
        p2: uniform(r, horizon * 2, t_ini * 2),
        gamma: uniform(r, horizon * 2, horizon * 2),
        training_residual: 0.0,
        rank: RankReport {
            rows: 0,
            cols: 0,
            rank: 0,
            full_row_rank: false,
            input_rows: 0,
            input_rank: 0,
            persistently_exciting: false,
            sigma_max: 0.0,
            sigma_min: 0.0,
            rtol: 0.0,
        },
    };
    (cfg, pred)
}

/// Largest difference between the precomputed first increment and the QP
/// minimizer's first increment over `instances` random problems.
pub fn analytic_law_vs_qp(seed: u64, instances: usize) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (cfg, pred) = random_law_instance(&mut r);
        let gains = compute_gains(&pred, &cfg).unwrap();
        let du_ini: Vec<f64> = (0..cfg.t_ini * 2).map(|_| r.random_range(-0.5..0.5)).collect();
        let y_ini: Vec<f64> = (0..cfg.t_ini * 2).map(|_| r.random_range(0.5..1.5)).collect();
        let r_y = [r.random_range(0.5..1.5), r.random_range(0.5..1.5)];

        let du0 = &gains.k1 * DVector::from_column_slice(&du_ini) + &gains.k2 * DVector::from_column_slice(&y_ini)
            - gains.reference_term(&r_y);

        let (omega, psi) = block_weights(&cfg);
        let free = &pred.p1 * DVector::from_column_slice(&du_ini) + &pred.p2 * DVector::from_column_slice(&y_ini);
        let r_stack = DVector::from_fn(cfg.horizon * 2, |i, _| r_y[i % 2]);
        let qp = qp_by_least_squares(&pred.gamma, &free, &r_stack, &omega, &psi);
        worst = worst.max(max_abs_diff(du0.as_slice(), &qp.as_slice()[..2]));
    }
    worst
}

/// Closed-loop tracking error of data-driven iSPC on an exact LTI plant, just
/// before and at the end of a run with a constant output disturbance added halfway.
pub fn offset_free_errors() -> (f64, f64) {
    let mut r = rng(7);
    let sys = Lti::random(&mut r, 3, 2, 2, 0.8);
    let cfg = small_config(6, 12, 300);
    let data = white_noise_run(&sys, DVector::zeros(3), cfg.required_samples(), &mut r);
    let pred = estimate_predictor(&build_hankel(&data.to_log(), &cfg).unwrap()).unwrap();
    let gains = compute_gains(&pred, &cfg).unwrap();

    let r_y = [0.7, -0.4];
    let d = DVector::from_vec(vec![0.3, 0.25]);
    let mut x = DVector::zeros(3);
    let mut rt = IspcRuntime::at_rest(2, cfg.t_ini, &[0.0, 0.0], &[0.0, 0.0]);
    let steps = 3000;
    let (mut before, mut after) = (f64::INFINITY, f64::INFINITY);
    for k in 0..steps {
        let mut y = sys.output(&x);
        if k >= steps / 2 {
            y += &d;
        }
        let e = (y[0] - r_y[0]).abs().max((y[1] - r_y[1]).abs());
        if k == steps / 2 - 1 {
            before = e;
        }
        if k == steps - 1 {
            after = e;
        }
        rt.observe_output(y.as_slice());
        let u = rt.control_step(&gains, &r_y).unwrap();
        x = sys.step(&x, &DVector::from_vec(u));
    }
    (before, after)
}
