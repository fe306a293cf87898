//! End-to-end scenario runner.
//!
//! Order per step: plant + measurement -> auxiliary chain -> regression ->
//! Kreisselmeier/DREM (gated by the warm-up window) -> freeze at t_freeze ->
//! filtered-disturbance amplitude stage -> closed-form reconstruction ->
//! adaptive observer. Everything advances on one fixed grid; the plant is
//! integrated at half steps so the estimator side sees exact midpoint
//! samples, and measurement noise is drawn once per grid sample.

use crate::csvio;
use crate::disturbance::{compute_fbar, reconstruct_f, AmplitudeEstimator, Sinusoid};
use crate::drem::{
    drem_extract, extract_parameters, EstimateFreezer, KreisselmeierState, Smoother,
};
use crate::error::{Error, Result};
use crate::numerics::{expm, spectral_abscissa, Matrix, Trajectory, Vector};
use crate::observer::{gain_schedules, ObserverState, RiccatiState};
use crate::plant::{
    check_assumptions, ExoGenerator, HarmonicDisturbance, NoiseModel, Plant, PlantStepper,
};
use crate::regression::{RegressionBuilder, RegressionConfig, RegressionSample};
use crate::scenario::{ObserverMode, ScenarioConfig, StartMode};
use crate::uio::{design_gains, solve_star_condition, AuxChain, UioGains};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Summary of one run; every numeric metric is recomputable from the
/// emitted time series.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub seed: Option<u64>,
    /// first time the stage-1 determinant exceeded the clamp
    pub first_unclamped: Option<f64>,
    pub freeze_time: Option<f64>,
    pub freeze_deferred: bool,
    pub stage2_first_unclamped: Option<f64>,
    pub stage2_skipped: bool,
    pub observer_started_at: Option<f64>,
    pub metrics: MetricSet,
    pub wall_secs: f64,
    pub timeseries_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

/// Terminal error metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    /// || xi0_hat - xi0 || at the end of the run
    pub xi0_error: f64,
    /// | omega_hat - omega |
    pub omega_error: f64,
    /// sup |f_hat - f| over the last 20 % of the horizon
    pub f_sup_error_last20: f64,
    /// || x - xbar || at the final sample
    pub x_error_final: f64,
    /// RMS of || x - xbar || over the last 20 %
    pub x_rms_last20: f64,
}

/// Design the observer gains a scenario asks for.
pub fn gains_from_config(cfg: &ScenarioConfig) -> Result<UioGains> {
    let a = cfg.a_matrix()?;
    let b = cfg.b_vector();
    let c = cfg.c_row();
    let r = crate::uio::relative_degree(&a, &b, &c)?;
    let poles: Vec<Complex64> = cfg
        .gains
        .poles
        .iter()
        .map(|&p| Complex64::new(p, 0.0))
        .collect();
    let mut gains = design_gains(&a, &b, &c, r, &poles)?;
    if cfg.gains.star && !gains.star {
        let (l, f) = solve_star_condition(&gains.m, &gains.g, &c, r, &gains.l)?;
        gains.l = l;
        gains.f = f;
        gains.star = gains.star_residual() <= 1e-8;
    }
    Ok(gains)
}

fn check_grid_aligned(name: &str, t: f64, dt: f64) -> Result<()> {
    let steps = t / dt;
    if (steps - steps.round()).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "{name} = {t} is not a multiple of dt = {dt}"
        )));
    }
    Ok(())
}

/// Run a scenario; when `out_dir` is given, emit timeseries.csv, report.csv
/// and config_echo there.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<RunReport> {
    let (mut report, traj) = run_scenario_full(cfg)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let ts_path = dir.join("timeseries.csv");
        csvio::emit_csv(&traj, &ts_path)?;
        let rep_path = dir.join("report.csv");
        std::fs::write(&rep_path, report_csv(std::slice::from_ref(&report)))
            .map_err(|e| Error::Io(format!("{}: {e}", rep_path.display())))?;
        let echo_path = dir.join("config_echo");
        std::fs::write(&echo_path, cfg.to_toml())
            .map_err(|e| Error::Io(format!("{}: {e}", echo_path.display())))?;
        report.timeseries_path = Some(ts_path);
        report.report_path = Some(rep_path);
    }
    Ok(report)
}

/// Run a scenario and keep the full trajectory in memory.
pub fn run_scenario_full(cfg: &ScenarioConfig) -> Result<(RunReport, Trajectory)> {
    let started = Instant::now();
    let dt = cfg.sim.dt;
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if cfg.sim.t_end <= 0.0 {
        return Err(Error::Config("t_end must be positive".into()));
    }
    check_grid_aligned("drem.t_freeze", cfg.drem.t_freeze, dt)?;
    check_grid_aligned("observer.t_start", cfg.observer.t_start, dt)?;
    check_grid_aligned("sim.t_end", cfg.sim.t_end, dt)?;

    // runtime objects
    let a = cfg.a_matrix()?;
    let b = cfg.b_vector();
    let c = cfg.c_row();
    let plant = Plant::new(a.clone(), b.clone(), c.clone(), cfg.plant.alpha.to_alpha())?;
    let gen = ExoGenerator::new(
        ScenarioConfig::matrix(&cfg.generator.h)?,
        ScenarioConfig::matrix(&cfg.generator.gamma)?,
        Vector::from_vec(cfg.generator.xi0.clone()),
    )?;
    let dist = HarmonicDisturbance::new(
        cfg.disturbance
            .iter()
            .map(|h| crate::plant::Harmonic {
                amplitude: h.amplitude,
                omega: h.omega,
                phase: h.phase,
            })
            .collect(),
    )?;
    check_assumptions(&a, &b, &c, &gen, &dist).into_result()?;
    // the identification stages fold a single unknown frequency into the
    // regression; multiharmonic identification needs a higher-order
    // annihilator and is not implemented (simulation-only disturbances with
    // several harmonics are fine through `simulate_plant`)
    if cfg.disturbance.len() > 1 {
        return Err(Error::Config(
            "the estimation pipeline identifies a single harmonic; \
             configure at most one [[disturbance]] block"
                .into(),
        ));
    }
    let input = cfg.input.to_input();
    let gains = gains_from_config(cfg)?;
    let r = gains.r;
    let n = plant.n();
    let m_dim = gen.state_dim();
    let d = 2 * m_dim + 1;

    let noise = if cfg.noise.enabled {
        Some(NoiseModel::new(
            cfg.noise.mean,
            cfg.noise.variance,
            cfg.noise.seed,
        )?)
    } else {
        None
    };
    let mut sampler = noise.as_ref().map(|nm| nm.sampler());

    let mut stepper = PlantStepper::new(
        plant.clone(),
        gen.clone(),
        dist.clone(),
        input.clone(),
        cfg.x0(),
        dt,
        2,
    )?
    .with_divergence_bound(cfg.observer.divergence_bound.max(1e6));

    let z0 = Vector::from_vec(cfg.gains.z0.clone());
    let mut chain = AuxChain::new(gains.clone(), z0)?;

    let mut regression = RegressionBuilder::new(RegressionConfig {
        a: a.clone(),
        b: b.clone(),
        f: gains.f.clone(),
        g: gains.g.clone(),
        h: gen.h.clone(),
        gamma: gen.gamma.clone(),
        b_bar: crate::numerics::RowVector::from_row_slice(&cfg.gains.b_bar),
        lambda: cfg.filters.lambda,
        lambda_r: cfg.filters.lambda_r,
        r,
        dt,
    })?;

    let warmup = if cfg.filters.warmup > 0.0 {
        cfg.filters.warmup
    } else {
        5.0 / spectral_abscissa(&gains.f)?.abs().max(1e-6)
    };

    let mut kreisselmeier = KreisselmeierState::new(d, cfg.drem.h_r)?;
    let mut smoother = Smoother::new(cfg.drem.sigma, d)?;
    let mut freezer = EstimateFreezer::new(cfg.drem.t_freeze)?;
    let mut amplitude: Option<AmplitudeEstimator> = None;
    let mut stage2_skipped = false;
    let mut f_hat_sin: Option<Sinusoid> = None;

    let mut riccati = match cfg.observer.mode {
        ObserverMode::Riccati => Some(RiccatiState::new(a.clone(), b.clone(), c.clone(), None)?),
        ObserverMode::Fixed => None,
    };
    let k_fixed = match cfg.observer.mode {
        ObserverMode::Fixed => {
            if cfg.observer.k_fixed.len() != n {
                return Err(Error::Config(format!("observer.k_fixed needs {n} entries")));
            }
            Some(Vector::from_vec(cfg.observer.k_fixed.clone()))
        }
        ObserverMode::Riccati => None,
    };
    let mut observer =
        ObserverState::new(Vector::zeros(n)).with_divergence_bound(cfg.observer.divergence_bound);

    // exosystem rotation for theta_hat
    let e_half = expm(&(&gen.gamma * (dt / 2.0)))?;
    let mut e_t = Matrix::identity(m_dim, m_dim);

    let steps = (cfg.sim.t_end / dt).round() as usize;
    let mut traj = Trajectory::new(&[
        ("x", n),
        ("y_clean", 1),
        ("y_meas", 1),
        ("theta", n),
        ("f", 1),
        ("z", n),
        ("q_star", 1),
        ("m", d),
        ("delta", 1),
        ("k_hat", d),
        ("k_hat_raw", d),
        ("xi0_hat", m_dim),
        ("omega_hat", 1),
        ("clamped", 1),
        ("f_bar", 1),
        ("delta_a", 1),
        ("a_hat", 2),
        ("f_hat", 1),
        ("x_bar", n),
    ]);

    let mut report = RunReport {
        scenario: cfg.name.clone(),
        seed: noise.as_ref().map(|nm| nm.seed),
        first_unclamped: None,
        freeze_time: None,
        freeze_deferred: false,
        stage2_first_unclamped: None,
        stage2_skipped: false,
        observer_started_at: None,
        metrics: MetricSet {
            xi0_error: f64::NAN,
            omega_error: f64::NAN,
            f_sup_error_last20: f64::NAN,
            x_error_final: f64::NAN,
            x_rms_last20: f64::NAN,
        },
        wall_secs: 0.0,
        timeseries_path: None,
        report_path: None,
    };

    let mut y_meas = stepper.y()
        + match sampler.as_mut() {
            Some(s) => s.draw(),
            None => 0.0,
        };
    let mut last_reg = RegressionSample {
        t: 0.0,
        q_star: 0.0,
        m: Vector::zeros(d),
        s_bar: crate::numerics::RowVector::zeros(m_dim),
        q_r: Vector::zeros(n),
        q_bar: 0.0,
    };
    let mut last_raw_khat = Vector::zeros(d);
    let mut last_fbar = 0.0;
    let mut last_delta_a = 0.0;
    let mut last_a_hat = (0.0, 0.0);

    // initial row
    {
        let theta = stepper.theta();
        let zeros_m = Vector::zeros(m_dim);
        traj.push_sample(
            0.0,
            &[
                stepper.x.as_slice(),
                &[stepper.y()],
                &[y_meas],
                theta.as_slice(),
                &[stepper.disturbance()],
                chain.z().as_slice(),
                &[0.0],
                Vector::zeros(d).as_slice(),
                &[0.0],
                Vector::zeros(d).as_slice(),
                Vector::zeros(d).as_slice(),
                zeros_m.as_slice(),
                &[0.0],
                &[1.0],
                &[0.0],
                &[0.0],
                &[0.0, 0.0],
                &[0.0],
                Vector::zeros(n).as_slice(),
            ],
        );
    }

    for k in 0..steps {
        let t = k as f64 * dt;
        let tm = t + dt / 2.0;
        let t1 = t + dt;

        // plant and measurement
        let out = stepper.step()?;
        let y_meas_next = out.y_next
            + match sampler.as_mut() {
                Some(s) => s.draw(),
                None => 0.0,
            };
        let y_meas_mid = if noise.is_some() {
            0.5 * (y_meas + y_meas_next)
        } else {
            out.y_mid
        };
        let y3 = [y_meas, y_meas_mid, y_meas_next];
        let u3 = [input.eval(t), input.eval(tm), input.eval(t1)];

        // exosystem rotation for theta_hat
        let e_mid = &e_t * &e_half;
        let e_next = &e_mid * &e_half;

        // auxiliary chain
        chain.step3(y3[0], y3[1], y3[2], dt);
        let z_prev = chain.z_prev().clone();
        let z_mid = chain.z_mid().clone();
        let z_next = chain.z().clone();

        // regression
        let (reg_mid, reg_next) = regression.step(t, y3, [&z_prev, &z_mid, &z_next], u3);

        // stage-1 extension, gated by the warm-up window
        if t >= warmup {
            kreisselmeier.step3(
                [&last_reg.m, &reg_mid.m, &reg_next.m],
                [last_reg.q_star, reg_mid.q_star, reg_next.q_star],
                dt,
            );
        }
        let est = drem_extract(&kreisselmeier, cfg.drem.eps_r)?;
        if !est.clamped && report.first_unclamped.is_none() {
            report.first_unclamped = Some(t1);
        }
        let smoothed = smoother.step(&last_raw_khat, &est.k_hat, dt).clone();
        last_raw_khat = est.k_hat.clone();

        let newly_frozen =
            freezer.frozen().is_none() && freezer.update(t1, &smoothed, est.clamped).is_some();
        if newly_frozen {
            let frozen = freezer.frozen().expect("just froze");
            report.freeze_time = Some(frozen.at);
            report.freeze_deferred = frozen.deferred;
            if frozen.params.omega > 1e-6 {
                amplitude = Some(AmplitudeEstimator::new(
                    frozen.params.omega,
                    cfg.drem.h_a,
                    cfg.drem.eps_a,
                    cfg.drem.sigma,
                )?);
            } else {
                stage2_skipped = true;
            }
        } else if let (Some(frozen), Some(amp)) = (freezer.frozen(), amplitude.as_mut()) {
            // stage 2: filtered disturbance and its amplitude pair
            let fb0 = compute_fbar(last_reg.q_bar, &last_reg.s_bar, &frozen.params.xi0);
            let fbm = compute_fbar(reg_mid.q_bar, &reg_mid.s_bar, &frozen.params.xi0);
            let fb1 = compute_fbar(reg_next.q_bar, &reg_next.s_bar, &frozen.params.xi0);
            let sample = amp.step3(t, [fb0, fbm, fb1], dt)?;
            if !sample.clamped && report.stage2_first_unclamped.is_none() {
                report.stage2_first_unclamped = Some(t1);
            }
            last_fbar = fb1;
            last_delta_a = sample.delta;
            last_a_hat = sample.a_hat;
            f_hat_sin = Some(reconstruct_f(
                sample.a_hat,
                frozen.params.omega,
                cfg.filters.lambda,
                r,
            ));
        }

        // estimates feeding the observer
        let zero_theta = Vector::zeros(n);
        let (th0, thm, th1) = match freezer.frozen() {
            Some(frozen) => (
                &gen.h * (&e_t * &frozen.params.xi0),
                &gen.h * (&e_mid * &frozen.params.xi0),
                &gen.h * (&e_next * &frozen.params.xi0),
            ),
            None => (zero_theta.clone(), zero_theta.clone(), zero_theta.clone()),
        };
        let f3 = match &f_hat_sin {
            Some(s) => [s.eval(t), s.eval(tm), s.eval(t1)],
            None => [0.0; 3],
        };

        // observer gain
        let observer_active = match cfg.observer.start {
            StartMode::Immediate => true,
            StartMode::Deferred => t >= cfg.observer.t_start - dt * 1e-6,
        };
        let (k_t, k_m, k_1) = if let Some(ric) = riccati.as_mut() {
            let k_before = ric.gain();
            let sched = |y: f64, tau: f64, th: &Vector| {
                gain_schedules(y, tau, th, ric.n_mat(), cfg.observer.k_young, &plant.alpha)
            };
            let gm3 = [
                sched(y3[0], t, &th0),
                sched(y3[1], tm, &thm),
                sched(y3[2], t1, &th1),
            ];
            ric.step3(gm3, t, dt)?;
            let k_after = ric.gain();
            let k_mid = (&k_before + &k_after) * 0.5;
            (k_before, k_mid, k_after)
        } else {
            let k = k_fixed.clone().expect("fixed gain configured");
            (k.clone(), k.clone(), k)
        };

        if observer_active {
            if report.observer_started_at.is_none() {
                report.observer_started_at = Some(t);
            }
            observer.step3(
                &plant,
                y3,
                u3,
                [&th0, &thm, &th1],
                f3,
                [&k_t, &k_m, &k_1],
                t,
                dt,
            )?;
        }

        // live or frozen parameter estimates for logging
        let (xi0_log, omega_log) = match freezer.frozen() {
            Some(frozen) => (frozen.params.xi0.clone(), frozen.params.omega),
            None => {
                let p = extract_parameters(&smoothed);
                (p.xi0, p.omega)
            }
        };

        let theta_truth = stepper.theta();
        traj.push_sample(
            t1,
            &[
                stepper.x.as_slice(),
                &[out.y_next],
                &[y_meas_next],
                theta_truth.as_slice(),
                &[stepper.disturbance()],
                chain.z().as_slice(),
                &[reg_next.q_star],
                reg_next.m.as_slice(),
                &[est.delta],
                smoothed.as_slice(),
                est.k_hat.as_slice(),
                xi0_log.as_slice(),
                &[omega_log],
                &[if est.clamped { 1.0 } else { 0.0 }],
                &[last_fbar],
                &[last_delta_a],
                &[last_a_hat.0, last_a_hat.1],
                &[f3[2]],
                observer.x_bar.as_slice(),
            ],
        );

        y_meas = y_meas_next;
        last_reg = reg_next;
        e_t = e_next;
    }

    report.stage2_skipped = stage2_skipped;
    report.metrics = compute_metrics(cfg, &traj)?;
    report.wall_secs = started.elapsed().as_secs_f64();
    Ok((report, traj))
}

/// Recompute the report metrics from a (possibly re-parsed) trajectory.
pub fn compute_metrics(cfg: &ScenarioConfig, traj: &Trajectory) -> Result<MetricSet> {
    let len = traj.len();
    if len == 0 {
        return Err(Error::Config("empty trajectory".into()));
    }
    let tail_start = len - (len as f64 * 0.2).ceil() as usize;
    let xi0_true = Vector::from_vec(cfg.generator.xi0.clone());
    let omega_true = cfg.disturbance.first().map(|h| h.omega).unwrap_or(0.0);

    let xi0_hat = traj
        .channel("xi0_hat")
        .ok_or_else(|| Error::Config("missing xi0_hat channel".into()))?;
    let xi0_final = Vector::from_column_slice(xi0_hat.sample(len - 1));
    let omega_hat = traj.scalar("omega_hat").unwrap_or(&[]);
    let f_true = traj
        .scalar("f")
        .ok_or_else(|| Error::Config("missing f channel".into()))?;
    let f_hat = traj
        .scalar("f_hat")
        .ok_or_else(|| Error::Config("missing f_hat channel".into()))?;
    let x = traj
        .channel("x")
        .ok_or_else(|| Error::Config("missing x channel".into()))?;
    let x_bar = traj
        .channel("x_bar")
        .ok_or_else(|| Error::Config("missing x_bar channel".into()))?;

    let mut f_sup = 0.0f64;
    let mut rms_acc = 0.0f64;
    for k in tail_start..len {
        f_sup = f_sup.max((f_hat[k] - f_true[k]).abs());
        let xt = x.sample(k);
        let xb = x_bar.sample(k);
        let err2: f64 = xt.iter().zip(xb).map(|(a, b)| (a - b) * (a - b)).sum();
        rms_acc += err2;
    }
    let x_last = Vector::from_column_slice(x.sample(len - 1));
    let xb_last = Vector::from_column_slice(x_bar.sample(len - 1));

    Ok(MetricSet {
        xi0_error: (xi0_final - xi0_true).norm(),
        omega_error: (omega_hat.last().copied().unwrap_or(0.0) - omega_true).abs(),
        f_sup_error_last20: f_sup,
        x_error_final: (x_last - xb_last).norm(),
        x_rms_last20: (rms_acc / (len - tail_start) as f64).sqrt(),
    })
}

/// Render reports as a CSV table.
pub fn report_csv(reports: &[RunReport]) -> String {
    let mut out = String::new();
    out.push_str(
        "scenario,seed,first_unclamped,freeze_time,freeze_deferred,stage2_first_unclamped,\
         observer_started_at,xi0_error,omega_error,f_sup_error_last20,x_error_final,\
         x_rms_last20,wall_secs\r\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for r in reports.iter() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6}\r\n",
            r.scenario,
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            opt(r.first_unclamped),
            opt(r.freeze_time),
            r.freeze_deferred,
            opt(r.stage2_first_unclamped),
            opt(r.observer_started_at),
            r.metrics.xi0_error,
            r.metrics.omega_error,
            r.metrics.f_sup_error_last20,
            r.metrics.x_error_final,
            r.metrics.x_rms_last20,
            r.wall_secs,
        ));
    }
    out
}

/// Exit code mapping: configuration and assumption failures are 2,
/// numerical failures 3.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NonFiniteState { .. }
        | Error::Divergence { .. }
        | Error::RiccatiNotPositive { .. } => 3,
        _ => 2,
    }
}
