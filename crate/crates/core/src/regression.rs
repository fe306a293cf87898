//! Measurable linear regression built from the chain variable and the output.
//!
//! The uncertain-term equation is filtered by lambda^r / (p + lambda)^r and
//! every product with an output derivative is swapped onto proper filters,
//! leaving q_r(t) = B Sbar(t) xi(0) + B fbar(t) with all signals measurable.
//! A sinusoid annihilator and a second-order filter pair then produce the
//! scalar regression q*(t) = m'(t) k with k = [xi(0); w^2; w^2 xi(0)].
//! The annihilator handles one harmonic; a multiharmonic disturbance would
//! need a higher-order annihilator polynomial in place of p^2 + w^2, which
//! is the designated extension point of this builder.
//!
//! All e^{Gamma t} factors are propagated incrementally, one constant
//! half-step rotation per RK4 stage.

use crate::error::{Error, Result};
use crate::numerics::{expm, LtiFilter, Matrix, RowVector, Vector};

/// Plant, observer and filter data the builder needs.
#[derive(Debug, Clone)]
pub struct RegressionConfig {
    pub a: Matrix,
    pub b: Vector,
    pub f: Matrix,
    pub g: Vector,
    pub h: Matrix,
    pub gamma: Matrix,
    pub b_bar: RowVector,
    pub lambda: f64,
    pub lambda_r: f64,
    pub r: usize,
    pub dt: f64,
}

/// One regression sample.
#[derive(Debug, Clone)]
pub struct RegressionSample {
    pub t: f64,
    /// left side of the scalar regression
    pub q_star: f64,
    /// regressor, ordered [xi(0) block; w^2; w^2 xi(0) block]
    pub m: Vector,
    /// the matrix-valued swapping signal, 1 x dim xi
    pub s_bar: RowVector,
    /// the filtered n-vector equation residue q_r
    pub q_r: Vector,
    /// b_bar q_r, the scalar projection entering the annihilator
    pub q_bar: f64,
}

/// A parallel bank of identical-shape scalar filters acting on a row signal.
#[derive(Debug, Clone)]
struct FilterRow {
    filters: Vec<LtiFilter>,
}

impl FilterRow {
    fn new(lambda: f64, order: usize, num_order: usize, width: usize) -> Result<Self> {
        let filters = (0..width)
            .map(|_| LtiFilter::new(lambda, order, num_order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { filters })
    }

    /// Filter the triple (value at t, mid, next) in place.
    fn step3_row(&mut self, at_t: &mut [f64], mid: &mut [f64], next: &mut [f64], dt: f64) {
        for (i, f) in self.filters.iter_mut().enumerate() {
            let t_out = f.output(at_t[i]);
            let so = f.step3(at_t[i], mid[i], next[i], dt);
            at_t[i] = t_out;
            mid[i] = so.mid;
            next[i] = so.next;
        }
    }
}

/// One terminal product of the swapping expansion: a_base(t) * (c_row E(t)),
/// pushed through `chain` first-order lambda/(p+lambda) stages.
#[derive(Debug, Clone)]
struct SwapTerminal {
    c_row: RowVector,
    chain: Vec<FilterRow>,
}

/// The y^(j) swapping group: terminals summed into S_j, then wrapped by
/// lambda^{r-j} / (p + lambda)^{r-j}.
#[derive(Debug, Clone)]
struct SwapGroup {
    terminals: Vec<SwapTerminal>,
    wrap: FilterRow,
}

#[derive(Debug, Clone)]
pub struct RegressionBuilder {
    cfg: RegressionConfig,
    n: usize,
    m_dim: usize,
    /// F^{r-1-j} G for j = 0..r-1
    fg_powers: Vec<Vector>,
    /// e^{Gamma t} at the current step start
    e_t: Matrix,
    /// e^{Gamma dt/2}
    e_half: Matrix,
    /// dirty-derivative cascade a_k = (lambda p/(p+lambda))^k [y], k = 1..r-1
    a_cascade: Vec<LtiFilter>,
    /// S_0 = W^r [(z + F^{r-1} G y)' H e^{Gamma t}]
    s0_row: FilterRow,
    swap_groups: Vec<SwapGroup>,
    /// z component filters: lambda^r p / (p+lambda)^r and lambda^r / (p+lambda)^r
    z_deriv: FilterRow,
    z_plain: FilterRow,
    /// y filters lambda^r p^k / (p+lambda)^r for k = 0..r
    y_filters: Vec<LtiFilter>,
    u_filter: LtiFilter,
    /// second-order lambda_r output filters
    qbar_p2: LtiFilter,
    qbar_lp: LtiFilter,
    sbar_p2: FilterRow,
    sbar_lp: FilterRow,
    /// latest swap signals S_0..S_{r-1} (values at step end), for diagnostics
    last_swap: Vec<RowVector>,
}

impl RegressionBuilder {
    pub fn new(cfg: RegressionConfig) -> Result<Self> {
        let n = cfg.a.nrows();
        let m_dim = cfg.gamma.nrows();
        if cfg.a.ncols() != n {
            return Err(Error::NonSquare {
                rows: cfg.a.nrows(),
                cols: cfg.a.ncols(),
            });
        }
        if cfg.b.len() != n || cfg.g.len() != n || cfg.f.nrows() != n || cfg.f.ncols() != n {
            return Err(Error::DimensionMismatch(
                "plant and observer matrices disagree on the state dimension".into(),
            ));
        }
        if cfg.h.nrows() != n || cfg.h.ncols() != m_dim || cfg.gamma.ncols() != m_dim {
            return Err(Error::DimensionMismatch(
                "generator dimensions inconsistent with the state-weighted regressor".into(),
            ));
        }
        if cfg.b_bar.ncols() != n {
            return Err(Error::DimensionMismatch("b_bar width".into()));
        }
        let bb = (&cfg.b_bar * &cfg.b)[0];
        if (bb - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "b_bar B must equal 1, got {bb}"
            )));
        }
        if cfg.r == 0 {
            return Err(Error::InvalidParameter(
                "relative degree must be >= 1".into(),
            ));
        }
        if cfg.dt <= 0.0 {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        let r = cfg.r;
        let lambda = cfg.lambda;

        let mut fg_powers = vec![Vector::zeros(n); r];
        for j in 0..r {
            // F^{r-1-j} G
            let mut v = cfg.g.clone();
            for _ in 0..r - 1 - j {
                v = &cfg.f * v;
            }
            fg_powers[j] = v;
        }

        let a_cascade = (0..r.saturating_sub(1))
            .map(|_| LtiFilter::new(lambda, 1, 1))
            .collect::<Result<Vec<_>>>()?;

        let s0_row = FilterRow::new(lambda, r, 0, m_dim)?;

        // swapping expansion for each derivative order j >= 1
        let mut swap_groups = Vec::new();
        for j in 1..r {
            let c_j: RowVector = (fg_powers[j].transpose() * &cfg.h).row(0).into_owned();
            let mut terminals = Vec::new();
            expand_swaps(&cfg.gamma, lambda, c_j, 0, j, &mut terminals);
            let terminals = terminals
                .into_iter()
                .map(|(c_row, extra_w)| -> Result<SwapTerminal> {
                    let chain = (0..extra_w)
                        .map(|_| FilterRow::new(lambda, 1, 0, m_dim))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(SwapTerminal { c_row, chain })
                })
                .collect::<Result<Vec<_>>>()?;
            swap_groups.push(SwapGroup {
                terminals,
                wrap: FilterRow::new(lambda, r - j, 0, m_dim)?,
            });
        }

        let y_filters = (0..=r)
            .map(|k| LtiFilter::new(lambda, r, k))
            .collect::<Result<Vec<_>>>()?;

        let e_half = expm(&(&cfg.gamma * (cfg.dt / 2.0)))?;

        Ok(Self {
            n,
            m_dim,
            fg_powers,
            e_t: Matrix::identity(m_dim, m_dim),
            e_half,
            a_cascade,
            s0_row,
            swap_groups,
            z_deriv: FilterRow::new(lambda, r, 1, n)?,
            z_plain: FilterRow::new(lambda, r, 0, n)?,
            y_filters,
            u_filter: LtiFilter::new(lambda, r, 0)?,
            qbar_p2: LtiFilter::new(cfg.lambda_r, 2, 2)?,
            qbar_lp: LtiFilter::new(cfg.lambda_r, 2, 0)?,
            sbar_p2: FilterRow::new(cfg.lambda_r, 2, 2, m_dim)?,
            sbar_lp: FilterRow::new(cfg.lambda_r, 2, 0, m_dim)?,
            last_swap: vec![RowVector::zeros(m_dim); r],
            cfg,
        })
    }

    /// Regression dimension 2 m + 1.
    pub fn k_dim(&self) -> usize {
        2 * self.m_dim + 1
    }

    /// S_j row signal at the end of the last step (S_0 is fully filtered,
    /// S_j for j >= 1 are the pre-wrap swapped signals).
    pub fn swap_signal(&self, j: usize) -> &RowVector {
        &self.last_swap[j]
    }

    /// Advance one step from t to t + dt. Inputs are sampled at the step
    /// start, midpoint and end; returns the regression samples at the
    /// midpoint and the end.
    pub fn step(
        &mut self,
        t: f64,
        y3: [f64; 3],
        z3: [&Vector; 3],
        u3: [f64; 3],
    ) -> (RegressionSample, RegressionSample) {
        let dt = self.cfg.dt;
        let _ = self.n;
        let md = self.m_dim;
        let r = self.cfg.r;

        // exosystem rotation at stage times
        let e_mid = &self.e_t * &self.e_half;
        let e_next = &e_mid * &self.e_half;

        // dirty-derivative cascade values at (t, mid, next): a_0 = y
        let mut a_t = vec![0.0; r];
        let mut a_mid = vec![0.0; r];
        let mut a_next = vec![0.0; r];
        a_t[0] = y3[0];
        a_mid[0] = y3[1];
        a_next[0] = y3[2];
        for k in 1..r {
            let f = &mut self.a_cascade[k - 1];
            let t_out = f.output(a_t[k - 1]);
            let so = f.step3(a_t[k - 1], a_mid[k - 1], a_next[k - 1], dt);
            a_t[k] = t_out;
            a_mid[k] = so.mid;
            a_next[k] = so.next;
        }

        // S_0 input rho_0 = (z + F^{r-1} G y)' H E
        let hrow = |z: &Vector, y: f64, e: &Matrix| -> RowVector {
            let v = z + &self.fg_powers[0] * y;
            ((v.transpose() * &self.cfg.h) * e).row(0).into_owned()
        };
        let mut s_t = hrow(z3[0], y3[0], &self.e_t)
            .iter()
            .cloned()
            .collect::<Vec<f64>>();
        let mut s_mid = hrow(z3[1], y3[1], &e_mid)
            .iter()
            .cloned()
            .collect::<Vec<f64>>();
        let mut s_next = hrow(z3[2], y3[2], &e_next)
            .iter()
            .cloned()
            .collect::<Vec<f64>>();
        self.s0_row.step3_row(&mut s_t, &mut s_mid, &mut s_next, dt);
        let mut sbar_t = s_t.clone();
        let mut sbar_mid = s_mid.clone();
        let mut sbar_next = s_next.clone();
        self.last_swap[0] = RowVector::from_row_slice(&s_next);

        // swapped derivative groups
        for (jm1, group) in self.swap_groups.iter_mut().enumerate() {
            let j = jm1 + 1;
            let mut sj_t = vec![0.0; md];
            let mut sj_mid = vec![0.0; md];
            let mut sj_next = vec![0.0; md];
            for term in group.terminals.iter_mut() {
                let row_t = &term.c_row * &self.e_t;
                let row_mid = &term.c_row * &e_mid;
                let row_next = &term.c_row * &e_next;
                let mut p_t: Vec<f64> = (0..md).map(|i| a_t[j] * row_t[i]).collect();
                let mut p_mid: Vec<f64> = (0..md).map(|i| a_mid[j] * row_mid[i]).collect();
                let mut p_next: Vec<f64> = (0..md).map(|i| a_next[j] * row_next[i]).collect();
                for stage in term.chain.iter_mut() {
                    stage.step3_row(&mut p_t, &mut p_mid, &mut p_next, dt);
                }
                for i in 0..md {
                    sj_t[i] += p_t[i];
                    sj_mid[i] += p_mid[i];
                    sj_next[i] += p_next[i];
                }
            }
            self.last_swap[j] = RowVector::from_row_slice(&sj_next);
            group
                .wrap
                .step3_row(&mut sj_t, &mut sj_mid, &mut sj_next, dt);
            for i in 0..md {
                sbar_t[i] += sj_t[i];
                sbar_mid[i] += sj_mid[i];
                sbar_next[i] += sj_next[i];
            }
        }

        // q_r at the three stage times
        let mut z_d_t: Vec<f64> = z3[0].iter().cloned().collect();
        let mut z_d_mid: Vec<f64> = z3[1].iter().cloned().collect();
        let mut z_d_next: Vec<f64> = z3[2].iter().cloned().collect();
        self.z_deriv
            .step3_row(&mut z_d_t, &mut z_d_mid, &mut z_d_next, dt);
        let mut z_p_t: Vec<f64> = z3[0].iter().cloned().collect();
        let mut z_p_mid: Vec<f64> = z3[1].iter().cloned().collect();
        let mut z_p_next: Vec<f64> = z3[2].iter().cloned().collect();
        self.z_plain
            .step3_row(&mut z_p_t, &mut z_p_mid, &mut z_p_next, dt);

        let mut yf_t = vec![0.0; r + 1];
        let mut yf_mid = vec![0.0; r + 1];
        let mut yf_next = vec![0.0; r + 1];
        for k in 0..=r {
            let f = &mut self.y_filters[k];
            yf_t[k] = f.output(y3[0]);
            let so = f.step3(y3[0], y3[1], y3[2], dt);
            yf_mid[k] = so.mid;
            yf_next[k] = so.next;
        }
        let uf_t = self.u_filter.output(u3[0]);
        let uo = self.u_filter.step3(u3[0], u3[1], u3[2], dt);

        let assemble_q = |z_d: &[f64], z_p: &[f64], yf: &[f64], uf: f64| -> Vector {
            let mut high = Vector::from_column_slice(z_d);
            let mut low = Vector::from_column_slice(z_p);
            for j in 0..r {
                high += &self.fg_powers[j] * yf[j + 1];
                low += &self.fg_powers[j] * yf[j];
            }
            high - &self.cfg.a * low - &self.cfg.b * uf
        };
        let q_t = assemble_q(&z_d_t, &z_p_t, &yf_t, uf_t);
        let q_mid = assemble_q(&z_d_mid, &z_p_mid, &yf_mid, uo.mid);
        let q_next = assemble_q(&z_d_next, &z_p_next, &yf_next, uo.next);

        let qbar_t = (&self.cfg.b_bar * &q_t)[0];
        let qbar_mid = (&self.cfg.b_bar * &q_mid)[0];
        let qbar_next = (&self.cfg.b_bar * &q_next)[0];

        // scalar regression: q* and the regressor m
        let qs = self.qbar_p2.step3(qbar_t, qbar_mid, qbar_next, dt);
        let ql = self.qbar_lp.step3(qbar_t, qbar_mid, qbar_next, dt);
        let mut sp2_mid = sbar_mid.clone();
        let mut sp2_next = sbar_next.clone();
        let mut sp2_t = sbar_t.clone();
        self.sbar_p2
            .step3_row(&mut sp2_t, &mut sp2_mid, &mut sp2_next, dt);
        let mut slp_t = sbar_t;
        let mut slp_mid = sbar_mid.clone();
        let mut slp_next = sbar_next.clone();
        self.sbar_lp
            .step3_row(&mut slp_t, &mut slp_mid, &mut slp_next, dt);

        let build_m = |sp2: &[f64], ql: f64, slp: &[f64]| -> Vector {
            let mut m = Vector::zeros(2 * md + 1);
            for i in 0..md {
                m[i] = sp2[i];
            }
            m[md] = -ql;
            for i in 0..md {
                m[md + 1 + i] = slp[i];
            }
            m
        };

        let mid_sample = RegressionSample {
            t: t + dt / 2.0,
            q_star: qs.mid,
            m: build_m(&sp2_mid, ql.mid, &slp_mid),
            s_bar: RowVector::from_row_slice(&sbar_mid),
            q_r: q_mid,
            q_bar: qbar_mid,
        };
        let next_sample = RegressionSample {
            t: t + dt,
            q_star: qs.next,
            m: build_m(&sp2_next, ql.next, &slp_next),
            s_bar: RowVector::from_row_slice(&sbar_next),
            q_r: q_next,
            q_bar: qbar_next,
        };

        self.e_t = e_next;
        (mid_sample, next_sample)
    }
}

/// Expand the iterated swapping of W^j [y^(j) c e^{Gamma t}] into terminal
/// products on the dirty-derivative cascade. Each swap peels one derivative;
/// the correction branch differentiates the known factor and queues one more
/// 1/(p+lambda) stage, folded here as -1/lambda times a unit lowpass.
fn expand_swaps(
    gamma: &Matrix,
    lambda: f64,
    c: RowVector,
    extra_w: usize,
    remaining: usize,
    out: &mut Vec<(RowVector, usize)>,
) {
    if remaining == 0 {
        out.push((c, extra_w));
        return;
    }
    expand_swaps(gamma, lambda, c.clone(), extra_w, remaining - 1, out);
    let corrected = (&c * gamma) * (-1.0 / lambda);
    expand_swaps(gamma, lambda, corrected, extra_w + 1, remaining - 1, out);
}
