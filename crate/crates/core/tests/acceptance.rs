//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured figure against its bound.

mod common;

use common::{plant_for, sample_environment, sample_system, Lcg};
use uio_drem::disturbance::{filter_sinusoid_coeffs, reconstruct_f, AmplitudeEstimator};
use uio_drem::drem::{drem_extract, KreisselmeierState};
use uio_drem::numerics::{adjugate, determinant, expm, integrate_rk4, LtiFilter, Matrix, Vector};
use uio_drem::observer::{gain_schedules, ObserverState, RiccatiState};
use uio_drem::pipeline::{compute_metrics, gains_from_config, run_scenario, run_scenario_full};
use uio_drem::plant::{ExoGenerator, HarmonicDisturbance, InputSignal, PlantStepper};
use uio_drem::scenario::{paper_sec5, ObserverMode};
use uio_drem::uio::AuxChain;

fn assert_le(label: &str, value: f64, bound: f64) {
    assert!(
        value <= bound,
        "{label}: {value:.6e} exceeds bound {bound:.6e}"
    );
}

/// Criterion 1: noise-free run of the benchmark scenario.
#[test]
fn criterion_1_benchmark_noise_free() {
    let mut cfg = paper_sec5();
    cfg.noise.enabled = false;
    let (report, _) = run_scenario_full(&cfg).unwrap();
    assert!(report.first_unclamped.is_some(), "determinant must unclamp");
    assert_le("omega error", report.metrics.omega_error, 0.02);
    assert_le("xi0 error", report.metrics.xi0_error, 0.02);
    assert_le(
        "sup f error (tail)",
        report.metrics.f_sup_error_last20,
        0.05,
    );
    assert_le("x error at 30 s", report.metrics.x_error_final, 1e-2);
    assert_le("wall clock [s]", report.wall_secs, 30.0);
    println!(
        "criterion 1 PASS: noise-free paper_sec5 run, |omega err| {:.2e} <= 0.02, |xi0 err| {:.2e} <= 0.02, sup|f err| {:.2e} <= 0.05, |x err(30)| {:.2e} <= 1e-2, wall {:.1}s <= 30s",
        report.metrics.omega_error,
        report.metrics.xi0_error,
        report.metrics.f_sup_error_last20,
        report.metrics.x_error_final,
        report.wall_secs
    );
}

/// Criterion 2: the same scenario under seeded measurement noise.
#[test]
fn criterion_2_benchmark_with_noise() {
    let cfg = paper_sec5();
    assert!(cfg.noise.enabled);
    let (report, _) = run_scenario_full(&cfg).unwrap();
    let omega_rel = report.metrics.omega_error / 2.0;
    let xi0_rel = report.metrics.xi0_error / (5.0_f64).sqrt();
    assert_le("relative omega error", omega_rel, 0.05);
    assert_le("relative xi0 error", xi0_rel, 0.10);
    assert_le("x error rms (tail)", report.metrics.x_rms_last20, 0.1);
    println!(
        "criterion 2 PASS: noisy paper_sec5 run (seed {}), |omega err|/2 {:.2e} <= 5e-2, rel xi0 err {:.2e} <= 1e-1, rms x err {:.2e} <= 1e-1",
        report.seed.unwrap(),
        omega_rel,
        xi0_rel,
        report.metrics.x_rms_last20
    );
}

/// Criterion 3: with measured derivatives the estimation error is exactly
/// e^{Ft} xtilde(0) — the unknown terms cancel through the gain conditions.
#[test]
fn criterion_3_uio_exactness_on_random_plants() {
    let mut rng = Lcg(0x5eed_0003);
    let mut tested = 0;
    let mut attempts = 0;
    let mut worst: f64 = 0.0;
    while tested < 20 && attempts < 200 {
        attempts += 1;
        let Some(sys) = sample_system(&mut rng) else {
            continue;
        };
        let plant = plant_for(&sys);
        let (gen, dist, x0) = sample_environment(&mut rng, sys.a.nrows());
        let dt = 1e-4;
        let mut stepper =
            PlantStepper::new(plant.clone(), gen, dist, InputSignal::Zero, x0, dt, 2).unwrap();
        let n = sys.a.nrows();
        let z0 = Vector::from_fn(n, |i, _| 0.3 - 0.1 * i as f64);
        let mut chain = AuxChain::new(sys.gains.clone(), z0).unwrap();

        // xtilde(0) from the assembled estimate at t = 0
        let derivs0: Vec<f64> = (1..sys.r)
            .map(|k| plant.output_derivative_oracle(&stepper.x, k).unwrap())
            .collect();
        let x_hat0 = chain.assemble_estimate(stepper.y(), &derivs0).unwrap();
        let mut xtilde_exact = &stepper.x - x_hat0;
        let x0_norm = xtilde_exact.norm();
        let propagator = expm(&(&sys.gains.f * dt)).unwrap();

        for _ in 0..20_000 {
            let y0 = stepper.y();
            let out = stepper.step().unwrap();
            chain.step3(y0, out.y_mid, out.y_next, dt);
            xtilde_exact = &propagator * xtilde_exact;

            let derivs: Vec<f64> = (1..sys.r)
                .map(|k| plant.output_derivative_oracle(&stepper.x, k).unwrap())
                .collect();
            let x_hat = chain.assemble_estimate(out.y_next, &derivs).unwrap();
            let xtilde = &stepper.x - x_hat;
            let err = (xtilde - &xtilde_exact).norm();
            worst = worst.max(err / (1.0 + x0_norm));
            assert!(
                err <= 1e-6 * (1.0 + x0_norm),
                "plant {tested}: deviation {err:.3e} from e^{{Ft}} xtilde(0)"
            );
        }
        tested += 1;
    }
    assert_eq!(tested, 20, "needed 20 admissible random plants");
    println!(
        "criterion 3 PASS: 20 random plants (n <= 4, r <= 3), sup |xtilde - e^(Ft) xtilde(0)| / (1 + |xtilde(0)|) = {worst:.2e} <= 1e-6"
    );
}

/// Criterion 4: the star condition holds for the benchmark gains and yields
/// immediate reconstruction up to e^{Ft} z(0).
#[test]
fn criterion_4_star_condition_immediate_reconstruction() {
    let cfg = paper_sec5();
    let gains = gains_from_config(&cfg).unwrap();
    let star_res = gains.star_residual();
    assert_le("|L + F^2 G|", star_res, 1e-10);

    let plant = plant_for(&common::RandomSystem {
        a: cfg.a_matrix().unwrap(),
        b: cfg.b_vector(),
        c: cfg.c_row(),
        r: 2,
        gains: gains.clone(),
    });
    let gen = ExoGenerator::new(
        uio_drem::scenario::ScenarioConfig::matrix(&cfg.generator.h).unwrap(),
        uio_drem::scenario::ScenarioConfig::matrix(&cfg.generator.gamma).unwrap(),
        Vector::from_vec(cfg.generator.xi0.clone()),
    )
    .unwrap();
    let dist = HarmonicDisturbance::single(5.0, 2.0, 0.0).unwrap();
    let dt = 1e-4;
    let mut stepper =
        PlantStepper::new(plant.clone(), gen, dist, InputSignal::Zero, cfg.x0(), dt, 2).unwrap();
    let z0 = Vector::from_vec(cfg.gains.z0.clone());
    let mut chain = AuxChain::new(gains.clone(), z0.clone()).unwrap();

    // Remark-2 identity at t = 0: xtilde(0) = -z(0)
    let ydot0 = plant.output_derivative_oracle(&stepper.x, 1).unwrap();
    let x_hat0 = chain.assemble_estimate(stepper.y(), &[ydot0]).unwrap();
    let xtilde0 = &stepper.x - x_hat0;
    assert_le("|xtilde(0) + z(0)|", (xtilde0 + &z0).norm(), 1e-12);

    // pointwise: xtilde(t) + e^{Ft} z(0) stays at integration accuracy
    let propagator = expm(&(&gains.f * dt)).unwrap();
    let mut z_free = z0.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..30_000 {
        let y0 = stepper.y();
        let out = stepper.step().unwrap();
        chain.step3(y0, out.y_mid, out.y_next, dt);
        z_free = &propagator * z_free;
        let ydot = plant.output_derivative_oracle(&stepper.x, 1).unwrap();
        let x_hat = chain.assemble_estimate(out.y_next, &[ydot]).unwrap();
        let xtilde = &stepper.x - x_hat;
        worst = worst.max((xtilde + &z_free).norm());
    }
    assert_le("sup |xtilde + e^(Ft) z(0)|", worst, 1e-6);
    println!(
        "criterion 4 PASS: |L + F^2 G| = {star_res:.2e} <= 1e-10, |xtilde(0) + z(0)| <= 1e-12, sup |xtilde + e^(Ft) z(0)| = {worst:.2e} <= 1e-6"
    );
}

/// Criterion 5: the gain equations hold to 1e-10 on 50 random systems.
#[test]
fn criterion_5_gain_residuals_on_random_systems() {
    let mut rng = Lcg(0x5eed_0005);
    let mut tested = 0;
    let mut attempts = 0;
    let mut worst: f64 = 0.0;
    while tested < 50 && attempts < 500 {
        attempts += 1;
        let Some(sys) = sample_system(&mut rng) else {
            continue;
        };
        let res = sys.gains.residuals(&sys.a, &sys.b, &sys.c);
        assert_le("input decoupling", res.input_decoupling, 1e-10);
        assert_le("M equation", res.m_equation, 1e-10);
        assert_le("F equation", res.f_equation, 1e-10);
        worst = worst
            .max(res.input_decoupling)
            .max(res.m_equation)
            .max(res.f_equation);
        tested += 1;
    }
    assert_eq!(tested, 50, "needed 50 admissible random systems");
    println!(
        "criterion 5 PASS: 50 random systems, max gain-equation residual {worst:.2e} <= 1e-10"
    );
}

/// Criterion 6: DREM equals the known parameters on synthetic persistently
/// exciting regressions of dimension 2..6.
#[test]
fn criterion_6_drem_oracle_equivalence() {
    let mut rng = Lcg(0x5eed_0006);
    let mut worst_k: f64 = 0.0;
    let mut worst_cramer: f64 = 0.0;
    for dim in 2..=6 {
        let k_true = Vector::from_fn(dim, |_, _| rng.uniform(-3.0, 3.0));
        // distinct-frequency sin/cos mix is persistently exciting
        let freqs: Vec<f64> = (0..dim).map(|i| 0.5 + 0.45 * i as f64).collect();
        let phases: Vec<f64> = (0..dim).map(|_| rng.uniform(0.0, 3.0)).collect();
        let m_at = |t: f64| Vector::from_fn(dim, |i, _| (freqs[i] * t + phases[i]).sin());
        let mut state = KreisselmeierState::new(dim, 0.5).unwrap();
        let dt = 2e-4;
        let eps = 1e-3;
        let steps = (30.0 / dt) as usize;
        let mut seen = false;
        for k in 0..steps {
            let t = k as f64 * dt;
            let (m0, mm, m1) = (m_at(t), m_at(t + dt / 2.0), m_at(t + dt));
            let q = |m: &Vector| m.dot(&k_true);
            state.step3([&m0, &mm, &m1], [q(&m0), q(&mm), q(&m1)], dt);
            let est = drem_extract(&state, eps).unwrap();
            if !est.clamped {
                seen = true;
                let err = (&est.k_hat - &k_true).norm();
                worst_k = worst_k.max(err);
                assert!(err <= 1e-8, "dim {dim}, t = {t}: |k_hat - k| = {err:.3e}");
                let cramer = est.cramer_residual(&state) / state.y.norm().max(1.0);
                worst_cramer = worst_cramer.max(cramer);
                assert!(cramer <= 1e-6, "dim {dim}: Cramer residual {cramer:.3e}");
            }
        }
        assert!(seen, "dim {dim}: determinant never exceeded the clamp");
    }
    println!(
        "criterion 6 PASS: dims 2..6, max |k_hat - k| once unclamped {worst_k:.2e} <= 1e-8, max Cramer residual {worst_cramer:.2e} <= 1e-6"
    );
}

/// Criterion 7: filter a sinusoid, estimate the amplitude pair, invert the
/// filter; amplitude and phase come back to 1e-6 over the whole grid.
#[test]
fn criterion_7_disturbance_round_trip() {
    let amplitude = 3.7;
    let mut worst_amp: f64 = 0.0;
    let mut worst_phase: f64 = 0.0;
    for &omega in &[0.5, 2.0, 10.0] {
        for &lambda in &[1.0, 5.0, 20.0] {
            for &r in &[1usize, 2, 3] {
                // steady-state filtered coefficients (exact phasor algebra)
                let (b1, b2) = filter_sinusoid_coeffs(amplitude, 0.0, omega, lambda, r);
                let mut est = AmplitudeEstimator::new(omega, 0.5, 1e-3, 0.7).unwrap();
                let dt = (1e-3f64).min(0.02 / omega);
                let t_end = 30.0_f64.max(40.0 / omega);
                let steps = (t_end / dt) as usize;
                let fbar = |t: f64| b1 * (omega * t).sin() + b2 * (omega * t).cos();
                let mut final_raw = None;
                for k in 0..steps {
                    let t = k as f64 * dt;
                    let s = est
                        .step3(t, [fbar(t), fbar(t + dt / 2.0), fbar(t + dt)], dt)
                        .unwrap();
                    if !s.clamped {
                        final_raw = Some(s.a_raw);
                    }
                }
                let a_raw = final_raw.expect("amplitude stage must unclamp");
                let rec = reconstruct_f(a_raw, omega, lambda, r);
                let amp_err = (rec.amplitude() - amplitude).abs();
                let mut phase_err = rec.phase().abs();
                phase_err = phase_err.min((2.0 * std::f64::consts::PI - phase_err).abs());
                worst_amp = worst_amp.max(amp_err);
                worst_phase = worst_phase.max(phase_err);
                assert!(
                    amp_err <= 1e-6 && phase_err <= 1e-6,
                    "omega {omega}, lambda {lambda}, r {r}: amp err {amp_err:.3e}, phase err {phase_err:.3e}"
                );
            }
        }
    }
    println!(
        "criterion 7 PASS: 27-point grid, max amplitude error {worst_amp:.2e} <= 1e-6, max phase error {worst_phase:.2e} <= 1e-6"
    );
}

/// Criterion 8: Riccati gain on the benchmark plant with exact feeds:
/// N stays symmetric and positive definite for 30 s and the Lyapunov
/// function decays at least as e^{-gamma_min t}.
#[test]
fn criterion_8_riccati_properties() {
    let cfg = paper_sec5();
    let a = cfg.a_matrix().unwrap();
    let b = cfg.b_vector();
    let c = cfg.c_row();
    let plant =
        uio_drem::plant::Plant::new(a.clone(), b.clone(), c.clone(), uio_drem::plant::Alpha::One)
            .unwrap();
    let gen = ExoGenerator::new(
        uio_drem::scenario::ScenarioConfig::matrix(&cfg.generator.h).unwrap(),
        uio_drem::scenario::ScenarioConfig::matrix(&cfg.generator.gamma).unwrap(),
        Vector::from_vec(cfg.generator.xi0.clone()),
    )
    .unwrap();
    let dist = HarmonicDisturbance::single(5.0, 2.0, 0.0).unwrap();
    let dt = 1e-4;
    let mut stepper = PlantStepper::new(
        plant.clone(),
        gen.clone(),
        dist.clone(),
        InputSignal::Zero,
        cfg.x0(),
        dt,
        2,
    )
    .unwrap();
    let mut ric = RiccatiState::new(a, b, c, None).unwrap();
    let mut obs = ObserverState::new(Vector::zeros(2));
    let e_half = expm(&(&gen.gamma * (dt / 2.0))).unwrap();
    let mut e_t = Matrix::identity(2, 2);
    let k_young = 1.0;

    let v_of = |ric: &RiccatiState, xt: &Vector| -> f64 {
        let p = ric
            .n_mat()
            .clone()
            .try_inverse()
            .expect("N positive definite");
        (xt.transpose() * p * xt)[0]
    };

    let mut max_sym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut samples: Vec<(f64, f64)> = Vec::new(); // (t, V)
    let v0 = v_of(&ric, &(&stepper.x - &obs.x_bar));
    let steps = (30.0 / dt) as usize;
    for k in 0..steps {
        let t = k as f64 * dt;
        let y0 = stepper.y();
        let th0 = stepper.theta();
        let f0 = stepper.disturbance();
        let out = stepper.step().unwrap();
        let e_mid = &e_t * &e_half;
        let e_next = &e_mid * &e_half;
        let thm = &gen.h * (&e_mid * &gen.xi0);
        let th1 = &gen.h * (&e_next * &gen.xi0);
        let fm = dist.eval(t + dt / 2.0);
        let f1 = dist.eval(t + dt);

        let k_before = ric.gain();
        let sched = |y: f64, tau: f64, th: &Vector| {
            gain_schedules(y, tau, th, ric.n_mat(), k_young, &plant.alpha)
        };
        let gm3 = [
            sched(y0, t, &th0),
            sched(out.y_mid, t + dt / 2.0, &thm),
            sched(out.y_next, t + dt, &th1),
        ];
        ric.step3(gm3, t, dt).unwrap();
        let k_after = ric.gain();
        let k_mid = (&k_before + &k_after) * 0.5;

        obs.step3(
            &plant,
            [y0, out.y_mid, out.y_next],
            [0.0; 3],
            [&th0, &thm, &th1],
            [f0, fm, f1],
            [&k_before, &k_mid, &k_after],
            t,
            dt,
        )
        .unwrap();

        max_sym = max_sym.max(ric.last_symmetry_defect());
        min_eig = min_eig.min(ric.min_eigenvalue());
        if k % 1000 == 999 {
            samples.push((t + dt, v_of(&ric, &(&stepper.x - &obs.x_bar))));
        }
        e_t = e_next;
    }
    assert_le("max symmetry defect", max_sym, 1e-9);
    assert!(
        min_eig > 0.0,
        "N must stay positive definite, min eig {min_eig:.3e}"
    );

    // pairwise decay check while V is above the numerical floor;
    // gamma = alpha^2 / k = 1 throughout
    let gamma_min = 1.0;
    let mut checked = 0;
    for w in samples.windows(6) {
        let (t1, v1) = w[0];
        let (t2, v2) = w[5];
        if v1 <= 1e-9 * v0 {
            break;
        }
        let bound = v1 * (-gamma_min * (t2 - t1)).exp() * 1.1;
        assert!(
            v2 <= bound,
            "Lyapunov decay violated: V({t2:.1}) = {v2:.3e} > {bound:.3e}"
        );
        checked += 1;
    }
    assert!(checked >= 5, "need several decay windows, got {checked}");
    println!(
        "criterion 8 PASS: N symmetric to {max_sym:.2e} <= 1e-9 and positive definite (min eig {min_eig:.2e}) over 30 s; V decay within 10% of e^(-gamma_min dt) on {checked} windows"
    );
}

/// Criterion 9: the numerics invariants at a glance (the module unit tests
/// cover them in depth).
#[test]
fn criterion_9_numerics_suite() {
    // adjugate identity on a well-conditioned 6x6
    let mut rng = Lcg(0x5eed_0009);
    let mut m = Matrix::from_fn(6, 6, |_, _| rng.uniform(-1.0, 1.0));
    for i in 0..6 {
        m[(i, i)] += 3.0;
    }
    let adj = adjugate(&m).unwrap();
    let det = determinant(&m).unwrap();
    let adj_res =
        (&m * adj - Matrix::identity(6, 6) * det).norm() / (m.norm() * det.abs()).max(1.0);
    assert_le("adjugate identity residual", adj_res, 1e-9);

    // matrix exponential against the closed-form rotation
    let gamma = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -36.0, 0.0]);
    let t = 0.37;
    let e = expm(&(&gamma * t)).unwrap();
    let (co, si) = ((6.0 * t).cos(), (6.0 * t).sin());
    let exact = Matrix::from_row_slice(2, 2, &[co, si / 6.0, -6.0 * si, co]);
    let expm_err = (e - exact).norm();
    assert_le("expm closed-form error", expm_err, 1e-10);

    // RK4 order: halving dt cuts the error by 12..20
    let x0 = Vector::from_element(1, 1.0);
    let err = |dt: f64| {
        let traj = integrate_rk4(|_, x: &Vector| -x.clone(), &x0, (0.0, 5.0), dt).unwrap();
        let last = traj.channel("x").unwrap().sample(traj.len() - 1)[0];
        (last - (-5.0_f64).exp()).abs()
    };
    let factor = err(2e-3) / err(1e-3);
    assert!(
        (12.0..=20.0).contains(&factor),
        "RK4 halving factor {factor}"
    );

    // filter DC gains: unity for k = 0, zero for k = r
    for r in 1..=3 {
        let mut lp = LtiFilter::new(4.0, r, 0).unwrap();
        let mut hp = LtiFilter::new(4.0, r, r).unwrap();
        let mut y_lp = 0.0;
        let mut y_hp = f64::INFINITY;
        for _ in 0..20_000 {
            y_lp = lp.step(2.0, 1e-3);
            y_hp = hp.step(2.0, 1e-3);
        }
        assert!((y_lp - 2.0).abs() < 0.01 * 2.0, "lowpass DC gain, r = {r}");
        assert!(y_hp.abs() < 1e-6, "differentiator DC gain, r = {r}");
    }
    println!(
        "criterion 9 PASS: adjugate residual {adj_res:.2e} <= 1e-9, expm error {expm_err:.2e}, RK4 halving factor {factor:.1} in [12, 20], filter DC gains correct"
    );
}

/// Criterion 10: identical seeded runs emit bit-identical CSV files.
#[test]
fn criterion_10_determinism() {
    let mut cfg = paper_sec5();
    cfg.sim.dt = 1e-3;
    cfg.sim.t_end = 2.0;
    cfg.drem.t_freeze = 1.0;
    cfg.observer.t_start = 1.5;
    cfg.observer.mode = ObserverMode::Fixed;
    assert!(cfg.noise.enabled);

    let base = std::env::temp_dir().join(format!("uio_drem_det_{}", std::process::id()));
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    run_scenario(&cfg, Some(&dir_a)).unwrap();
    run_scenario(&cfg, Some(&dir_b)).unwrap();
    let bytes_a = std::fs::read(dir_a.join("timeseries.csv")).unwrap();
    let bytes_b = std::fs::read(dir_b.join("timeseries.csv")).unwrap();
    assert_eq!(bytes_a.len(), bytes_b.len());
    assert!(bytes_a == bytes_b, "seeded runs must be bit-identical");

    // metrics recomputed from the emitted CSV match the report
    let parsed = uio_drem::csvio::parse_csv(&dir_a.join("timeseries.csv")).unwrap();
    let (report, _) = run_scenario_full(&cfg).unwrap();
    let recomputed = compute_metrics(&cfg, &parsed).unwrap();
    assert!((recomputed.xi0_error - report.metrics.xi0_error).abs() <= 1e-12);
    assert!((recomputed.x_error_final - report.metrics.x_error_final).abs() <= 1e-12);
    std::fs::remove_dir_all(&base).ok();
    println!(
        "criterion 10 PASS: two seeded runs produced bit-identical CSVs ({} bytes); CSV-recomputed metrics match the report to 1e-12",
        bytes_a.len()
    );
}
