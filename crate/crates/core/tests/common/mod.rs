#![allow(dead_code)] // each test binary uses a different subset

//! Shared helpers for the integration suites: deterministic random systems
//! with a prescribed relative degree, and small simulation drivers.

use num_complex::Complex64;
use uio_drem::numerics::{Matrix, RowVector, Vector};
use uio_drem::plant::{Alpha, ExoGenerator, HarmonicDisturbance, Plant};
use uio_drem::uio::{design_gains, relative_degree, UioGains};

/// Tiny deterministic generator so test inputs never depend on crate
/// versions of rand.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn pick(&mut self, n: usize) -> usize {
        (self.next_u64() >> 33) as usize % n
    }
}

/// A random admissible SISO system with exact relative degree `r`:
/// companion-form A with stable poles, B the last unit vector, and a C row
/// whose support makes C A^j B vanish for j <= r-2.
pub struct RandomSystem {
    pub a: Matrix,
    pub b: Vector,
    pub c: RowVector,
    pub r: usize,
    pub gains: UioGains,
}

pub fn sample_system(rng: &mut Lcg) -> Option<RandomSystem> {
    let n = 2 + rng.pick(3); // 2..=4
    let r = 1 + rng.pick(n.min(3)); // 1..=min(3, n)

    // companion A with random stable poles in [-3.5, -0.5]
    let poles: Vec<f64> = (0..n).map(|_| rng.uniform(-3.5, -0.5)).collect();
    let mut coeffs = vec![1.0];
    for p in &poles {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, &ci) in coeffs.iter().enumerate() {
            next[i] += ci * (-p);
            next[i + 1] += ci;
        }
        coeffs = next;
    }
    // coeffs[i] multiplies s^i, monic: char poly s^n + ... + coeffs[0]
    let mut a = Matrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -coeffs[j];
    }
    let mut b = Vector::zeros(n);
    b[n - 1] = 1.0;
    // support of C on 1..=n-r+1 forces C A^j B = 0 for j <= r-2
    let mut c = RowVector::zeros(n);
    for j in 0..=(n - r) {
        c[j] = rng.uniform(-1.5, 1.5);
    }
    if c[n - r].abs() < 0.3 {
        c[n - r] = 0.5 + c[n - r].abs();
    }

    if relative_degree(&a, &b, &c) != Ok(r) {
        return None;
    }
    let obs_poles: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.uniform(-6.0, -2.0), 0.0))
        .collect();
    let gains = design_gains(&a, &b, &c, r, &obs_poles).ok()?;
    Some(RandomSystem { a, b, c, r, gains })
}

/// Random bounded-parameter environment for an order-n plant: a rotating
/// two-state generator scaled small enough to keep trajectories tame, plus
/// a single random harmonic and an initial state.
pub fn sample_environment(rng: &mut Lcg, n: usize) -> (ExoGenerator, HarmonicDisturbance, Vector) {
    let omega0 = rng.uniform(1.0, 5.0);
    let gamma = Matrix::from_row_slice(2, 2, &[0.0, omega0, -omega0, 0.0]);
    let h = Matrix::from_fn(n, 2, |_, _| rng.uniform(-0.2, 0.2));
    let xi0 = Vector::from_vec(vec![rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)]);
    let gen = ExoGenerator::new(h, gamma, xi0).unwrap();
    let dist = HarmonicDisturbance::single(
        rng.uniform(0.5, 3.0),
        rng.uniform(0.5, 4.0),
        rng.uniform(0.0, 3.0),
    )
    .unwrap();
    let x0 = Vector::from_fn(n, |_, _| rng.uniform(-1.0, 1.0));
    (gen, dist, x0)
}

/// Build the plant wrapper for a sampled system.
pub fn plant_for(sys: &RandomSystem) -> Plant {
    Plant::new(sys.a.clone(), sys.b.clone(), sys.c.clone(), Alpha::One).unwrap()
}
