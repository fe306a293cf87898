//! Scenario configuration: the TOML schema, the builtin second-order
//! benchmark scenario, and scalar-field patching for parameter sweeps.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, RowVector, Vector};
use crate::plant::{Alpha, InputSignal};
use serde::{Deserialize, Serialize};

fn default_name() -> String {
    "custom".into()
}
fn default_true() -> bool {
    true
}
fn default_seed() -> u64 {
    42
}
fn default_lambda() -> f64 {
    5.0
}
fn default_h() -> f64 {
    0.5
}
fn default_eps() -> f64 {
    1e-3
}
fn default_sigma() -> f64 {
    0.7
}
fn default_t_freeze() -> f64 {
    15.0
}
fn default_t_start() -> f64 {
    18.0
}
fn default_k_young() -> f64 {
    1.0
}
fn default_div_bound() -> f64 {
    1e6
}
fn default_dt() -> f64 {
    1e-4
}
fn default_t_end() -> f64 {
    30.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum AlphaConfig {
    /// alpha == 1
    One,
    Constant(f64),
    Affine {
        beta: f64,
        alpha0: f64,
    },
}

impl AlphaConfig {
    pub fn to_alpha(&self) -> Alpha {
        match *self {
            AlphaConfig::One => Alpha::One,
            AlphaConfig::Constant(c) => Alpha::Affine {
                beta: 0.0,
                alpha0: c,
            },
            AlphaConfig::Affine { beta, alpha0 } => Alpha::Affine { beta, alpha0 },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InputConfig {
    Zero,
    Constant(f64),
    Sine {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
}

impl InputConfig {
    pub fn to_input(&self) -> InputSignal {
        match *self {
            InputConfig::Zero => InputSignal::Zero,
            InputConfig::Constant(c) => InputSignal::Constant(c),
            InputConfig::Sine {
                amplitude,
                omega,
                phase,
            } => InputSignal::Sine {
                amplitude,
                omega,
                phase,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlantConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub x0: Vec<f64>,
    #[serde(default = "alpha_one")]
    pub alpha: AlphaConfig,
}

fn alpha_one() -> AlphaConfig {
    AlphaConfig::One
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeneratorConfig {
    pub h: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub xi0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HarmonicConfig {
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NoiseConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub variance: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GainsConfig {
    /// desired observer poles (real parts; conjugate pairs via two entries)
    pub poles: Vec<f64>,
    /// refine the placed gain with the star-condition fixed point
    #[serde(default = "default_true")]
    pub star: bool,
    /// chain initial condition z_r(0)
    pub z0: Vec<f64>,
    /// left annihilator row with b_bar B = 1
    pub b_bar: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FilterConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_lambda")]
    pub lambda_r: f64,
    /// regression warm-up window; 0 selects 5 / |spectral abscissa of F|
    #[serde(default)]
    pub warmup: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DremConfig {
    #[serde(default = "default_h")]
    pub h_r: f64,
    #[serde(default = "default_h")]
    pub h_a: f64,
    #[serde(default = "default_eps")]
    pub eps_r: f64,
    #[serde(default = "default_eps")]
    pub eps_a: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_t_freeze")]
    pub t_freeze: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ObserverMode {
    Fixed,
    Riccati,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// run from t = 0 with zero estimates until the freeze
    Immediate,
    /// hold the observer until t_start
    Deferred,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ObserverConfig {
    pub mode: ObserverMode,
    #[serde(default)]
    pub k_fixed: Vec<f64>,
    pub start: StartMode,
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    #[serde(default = "default_k_young")]
    pub k_young: f64,
    #[serde(default = "default_div_bound")]
    pub divergence_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
}

/// Complete description of one run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub plant: PlantConfig,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub disturbance: Vec<HarmonicConfig>,
    pub noise: NoiseConfig,
    #[serde(default = "input_zero")]
    pub input: InputConfig,
    pub gains: GainsConfig,
    #[serde(default = "filters_default")]
    pub filters: FilterConfig,
    #[serde(default = "drem_default")]
    pub drem: DremConfig,
    pub observer: ObserverConfig,
    #[serde(default = "sim_default")]
    pub sim: SimConfig,
}

fn input_zero() -> InputConfig {
    InputConfig::Zero
}
fn filters_default() -> FilterConfig {
    FilterConfig {
        lambda: default_lambda(),
        lambda_r: default_lambda(),
        warmup: 0.0,
    }
}
fn drem_default() -> DremConfig {
    DremConfig {
        h_r: default_h(),
        h_a: default_h(),
        eps_r: default_eps(),
        eps_a: default_eps(),
        sigma: default_sigma(),
        t_freeze: default_t_freeze(),
    }
}
fn sim_default() -> SimConfig {
    SimConfig {
        dt: default_dt(),
        t_end: default_t_end(),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Look up a builtin scenario by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "paper_sec5" => Ok(paper_sec5()),
            other => Err(Error::Config(format!(
                "unknown builtin scenario '{other}' (available: paper_sec5)"
            ))),
        }
    }

    /// Replace one scalar field addressed by a dotted path, e.g.
    /// `drem.h_r` or `noise.variance`.
    pub fn with_scalar_field(&self, path: &str, value: f64) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let segments: Vec<&str> = path.split('.').collect();
        let (last, head) = segments
            .split_last()
            .ok_or_else(|| Error::Config("empty field path".into()))?;
        let mut cursor = &mut root;
        for seg in head {
            let table = match cursor {
                toml::Value::Table(t) => t,
                _ => return Err(Error::Config(format!("'{path}': '{seg}' is not a table"))),
            };
            cursor = table
                .get_mut(*seg)
                .ok_or_else(|| Error::Config(format!("'{path}': no field '{seg}'")))?;
        }
        let table = cursor
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{path}': parent is not a table")))?;
        match table.get_mut(*last) {
            Some(toml::Value::Float(f)) => *f = value,
            Some(toml::Value::Integer(n)) => *n = value.round() as i64,
            Some(_) => {
                return Err(Error::Config(format!(
                    "'{path}' is not a scalar numeric field"
                )))
            }
            None => return Err(Error::Config(format!("'{path}': no field '{last}'"))),
        }
        root.try_into().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn matrix(rows: &[Vec<f64>]) -> Result<Matrix> {
        let nr = rows.len();
        if nr == 0 {
            return Err(Error::Config("empty matrix literal".into()));
        }
        let nc = rows[0].len();
        if rows.iter().any(|r| r.len() != nc) {
            return Err(Error::Config("ragged matrix literal".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
        Ok(Matrix::from_row_slice(nr, nc, &flat))
    }

    pub fn a_matrix(&self) -> Result<Matrix> {
        Self::matrix(&self.plant.a)
    }
    pub fn b_vector(&self) -> Vector {
        Vector::from_vec(self.plant.b.clone())
    }
    pub fn c_row(&self) -> RowVector {
        RowVector::from_row_slice(&self.plant.c)
    }
    pub fn x0(&self) -> Vector {
        Vector::from_vec(self.plant.x0.clone())
    }
}

/// The builtin second-order benchmark: relative degree 2, a 6 rad/s
/// parameter generator, disturbance 5 sin 2t, measurement noise
/// N(0.01, 0.001), star-satisfying observer gains, all filters 5/(p+5).
pub fn paper_sec5() -> ScenarioConfig {
    let disc = (625.0_f64 - 500.0).sqrt();
    ScenarioConfig {
        name: "paper_sec5".into(),
        plant: PlantConfig {
            a: vec![vec![0.0, 1.0], vec![-1.0, -2.0]],
            b: vec![0.0, 1.0],
            c: vec![1.0, 0.0],
            x0: vec![-2.0, 2.0],
            alpha: AlphaConfig::One,
        },
        generator: GeneratorConfig {
            h: vec![vec![2.0, 0.0], vec![3.0, 0.0]],
            gamma: vec![vec![0.0, 1.0], vec![-36.0, 0.0]],
            xi0: vec![-1.0, -2.0],
        },
        disturbance: vec![HarmonicConfig {
            amplitude: 5.0,
            omega: 2.0,
            phase: 0.0,
        }],
        noise: NoiseConfig {
            enabled: true,
            mean: 0.01,
            variance: 0.001,
            seed: default_seed(),
        },
        input: InputConfig::Zero,
        gains: GainsConfig {
            // spectrum of the star-satisfying F: roots of p^2 + 25 p + 125
            poles: vec![(-25.0 + disc) / 2.0, (-25.0 - disc) / 2.0],
            star: true,
            z0: vec![-0.5, 0.5],
            b_bar: vec![1.0, 1.0],
        },
        filters: FilterConfig {
            lambda: default_lambda(),
            lambda_r: default_lambda(),
            // transients of the e^{Ft} substitution defect and the filter
            // initial conditions must die before samples are accumulated
            warmup: 4.5,
        },
        drem: drem_default(),
        observer: ObserverConfig {
            mode: ObserverMode::Fixed,
            k_fixed: vec![23.0, 103.0],
            start: StartMode::Deferred,
            t_start: default_t_start(),
            k_young: default_k_young(),
            divergence_bound: default_div_bound(),
        },
        sim: sim_default(),
    }
}
