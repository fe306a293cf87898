//! Parameter sweeps: one scenario per grid point, independent seeds, rows
//! evaluated in parallel when the `parallel` feature is enabled.

use crate::error::{Error, Result};
use crate::pipeline::{run_scenario_full, RunReport};
use crate::scenario::ScenarioConfig;

/// Grid over one scalar config field.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub field: String,
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl SweepSpec {
    /// Parse `FIELD=a:b:n`.
    pub fn parse(text: &str) -> Result<Self> {
        let (field, rest) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep spec '{text}' is not FIELD=a:b:n")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "sweep spec '{text}' needs three colon-separated values"
            )));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|e| Error::Config(format!("sweep start: {e}")))?;
        let end: f64 = parts[1]
            .parse()
            .map_err(|e| Error::Config(format!("sweep end: {e}")))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|e| Error::Config(format!("sweep count: {e}")))?;
        if count == 0 {
            return Err(Error::Config("sweep count must be >= 1".into()));
        }
        Ok(Self {
            field: field.to_string(),
            start,
            end,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.end - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Result of one grid point; failures are recorded, not fatal.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub outcome: std::result::Result<RunReport, String>,
}

fn run_row(base: &ScenarioConfig, spec: &SweepSpec, index: usize, value: f64) -> SweepRow {
    let seed = base.noise.seed.wrapping_add(index as u64);
    let outcome = base
        .with_scalar_field(&spec.field, value)
        .and_then(|mut cfg| {
            cfg.noise.seed = seed;
            cfg.name = format!("{}[{}={}]", cfg.name, spec.field, value);
            run_scenario_full(&cfg).map(|(report, _)| report)
        })
        .map_err(|e| e.to_string());
    SweepRow {
        value,
        seed,
        outcome,
    }
}

/// Run every grid point. Rows are fully isolated; with the `parallel`
/// feature they run on the rayon pool, otherwise sequentially.
pub fn sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Vec<SweepRow> {
    let values = spec.values();
    run_all(base, spec, &values)
}

#[cfg(feature = "parallel")]
fn run_all(base: &ScenarioConfig, spec: &SweepSpec, values: &[f64]) -> Vec<SweepRow> {
    use rayon::prelude::*;
    values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| run_row(base, spec, i, v))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(base: &ScenarioConfig, spec: &SweepSpec, values: &[f64]) -> Vec<SweepRow> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| run_row(base, spec, i, v))
        .collect()
}

/// Always-sequential variant, kept callable with the parallel feature on so
/// the two paths can be compared directly.
pub fn sweep_sequential(base: &ScenarioConfig, spec: &SweepSpec) -> Vec<SweepRow> {
    spec.values()
        .iter()
        .enumerate()
        .map(|(i, &v)| run_row(base, spec, i, v))
        .collect()
}

/// Sweep table as CSV: one row per grid point, failures flagged in `status`.
pub fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "sweep_field,sweep_value,seed,status,first_unclamped,freeze_time,xi0_error,\
         omega_error,f_sup_error_last20,x_error_final,x_rms_last20,wall_secs\r\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for row in rows {
        match &row.outcome {
            Ok(r) => out.push_str(&format!(
                "{},{:.16e},{},ok,{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6}\r\n",
                spec.field,
                row.value,
                row.seed,
                opt(r.first_unclamped),
                opt(r.freeze_time),
                r.metrics.xi0_error,
                r.metrics.omega_error,
                r.metrics.f_sup_error_last20,
                r.metrics.x_error_final,
                r.metrics.x_rms_last20,
                r.wall_secs,
            )),
            Err(msg) => out.push_str(&format!(
                "{},{:.16e},{},\"error: {}\",,,,,,,,\r\n",
                spec.field,
                row.value,
                row.seed,
                msg.replace('"', "'"),
            )),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        let s = SweepSpec::parse("drem.h_r=0.1:0.5:5").unwrap();
        assert_eq!(s.field, "drem.h_r");
        assert_eq!(s.values(), vec![0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
        assert!(SweepSpec::parse("nonsense").is_err());
        assert!(SweepSpec::parse("a=1:2").is_err());
        assert!(SweepSpec::parse("a=1:2:0").is_err());
    }

    #[test]
    fn single_point_sweep() {
        let s = SweepSpec::parse("sim.dt=0.001:0.001:1").unwrap();
        assert_eq!(s.values(), vec![0.001]);
    }

    #[test]
    fn failed_rows_are_recorded_and_sweep_continues() {
        let mut base = crate::scenario::paper_sec5();
        base.sim.dt = 1e-3;
        base.sim.t_end = 1.0;
        base.drem.t_freeze = 0.5;
        base.observer.t_start = 0.8;
        // eps_r = -1 is rejected, eps_r = 1e-3 runs
        let spec = SweepSpec::parse("drem.eps_r=-1.0:0.001:2").unwrap();
        let rows = sweep(&base, &spec);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].outcome.is_err());
        assert!(rows[1].outcome.is_ok());
        // independent seeds per row
        assert_ne!(rows[0].seed, rows[1].seed);
        let table = sweep_csv(&spec, &rows);
        assert!(table.contains("error:"));
        assert!(table.contains(",ok,"));
    }
}
