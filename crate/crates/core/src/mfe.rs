//! Coupled-harmonics integrator for the modulated Fourier expansion
//! u(x, t) = Re sum_k z_k(x, t) exp(i k t / epsilon).
//!
//! The coefficients z_k, for -J*K <= k <= J*K, solve
//!   (d/dt + i k/eps)^2 z_k + A_0 z_k + rho * sum_{j != 0} Ahat_j z_{k-j}
//!     = delta_{k0} f,
//! with z_{+-(J*K+1)} = 0 at the truncation and vanishing initial data. All
//! operators are constant in time, so the implicit system is factored once
//! per trajectory.
//!
//! Time discretization is the trapezoidal rule in the generating-function
//! sense: the scheme's symbol is (delta(zeta)/tau + i k/eps)^2 + spatial
//! part with delta(zeta) = 2(1-zeta)/(1+zeta). Spelled out as a two-step
//! recursion,
//!
//!   (z+ - 2 z0 + z-)/tau^2 + (i k/eps)(z+ - z-)/tau
//!     + (-(k/eps)^2 I + S) (z+ + 2 z0 + z-)/4 = delta_{k0} (f+ + 2 f0 + f-)/4,
//!
//! which is second order uniformly in eps, reduces exactly to the
//! first-order-form trapezoidal rule on the k = 0 block, and matches the
//! convolution-quadrature route sample for sample.

use num_complex::Complex64;

use crate::error::{MfeError, Result};
use crate::grid::{assemble_stiffness, BandedSym, Grid1D};
use crate::linalg::{BandedLu, ComplexBanded};
use crate::modulation::{ModulationSpec, SourceSpec};

/// Truncation parameters of the expansion.
#[derive(Debug, Clone, Copy)]
pub struct MfeConfig {
    /// Truncation index K; harmonics -J*K..=J*K are retained, where J is
    /// the number of harmonics carried by the modulation.
    pub truncation: usize,
}

impl MfeConfig {
    pub fn new(truncation: usize) -> Result<Self> {
        if truncation < 1 {
            return Err(MfeError::InvalidArgument(
                "truncation index must be at least 1".into(),
            ));
        }
        Ok(MfeConfig { truncation })
    }

    /// Largest harmonic index retained.
    pub fn span(&self, spec: &ModulationSpec) -> usize {
        self.truncation * spec.harmonics()
    }
}

/// Expansion coefficients and their time derivatives at one time.
///
/// `z[idx]` holds the harmonic k = idx - span; for real sources the
/// coefficients satisfy z_{-k} = conj(z_k).
#[derive(Debug, Clone)]
pub struct MfeState {
    pub z: Vec<Vec<Complex64>>,
    pub w: Vec<Vec<Complex64>>,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct MfeTrajectory {
    pub tau: f64,
    /// Largest harmonic index retained; z vectors have length 2*span+1.
    pub span: usize,
    pub states: Vec<MfeState>,
}

/// Borrowed view of the flat (node-major) coefficient vector during a march.
#[derive(Debug, Clone, Copy)]
pub struct MfeFields<'a> {
    pub span: usize,
    pub m: usize,
    flat: &'a [Complex64],
}

impl MfeFields<'_> {
    pub fn harmonic(&self, k: i64) -> Vec<Complex64> {
        let n_h = 2 * self.span + 1;
        let idx = (k + self.span as i64) as usize;
        (0..self.m).map(|i| self.flat[i * n_h + idx]).collect()
    }

    pub fn to_vecs(&self) -> Vec<Vec<Complex64>> {
        let n_h = 2 * self.span + 1;
        (0..n_h)
            .map(|idx| (0..self.m).map(|i| self.flat[i * n_h + idx]).collect())
            .collect()
    }

    pub fn flat(&self) -> &[Complex64] {
        self.flat
    }

    /// Re sum_k z_k exp(i k t / eps) at every node, plus the h-weighted norm
    /// of the imaginary part left over (a symmetry diagnostic).
    pub fn reconstruct_at(&self, t: f64, epsilon: f64, h: f64) -> (Vec<f64>, f64) {
        let n_h = 2 * self.span + 1;
        let phases: Vec<Complex64> = (0..n_h)
            .map(|idx| {
                let k = idx as i64 - self.span as i64;
                Complex64::new(0.0, k as f64 * t / epsilon).exp()
            })
            .collect();
        let mut field = vec![0.0; self.m];
        let mut imag2 = 0.0;
        for i in 0..self.m {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, phase) in phases.iter().enumerate() {
                acc += self.flat[i * n_h + idx] * phase;
            }
            field[i] = acc.re;
            imag2 += acc.im * acc.im;
        }
        (field, (h * imag2).sqrt())
    }
}

/// The (2*span+1)-block operator diag_k(s) + A_0 + rho * coupling with its
/// LU factorization. Unknowns are flattened node-major, which keeps the
/// scalar bandwidth at (2*span+1) + J instead of J*m.
pub struct BlockOperator {
    pub m: usize,
    pub span: usize,
    matrix: ComplexBanded,
    factor: BandedLu,
}

fn build_block_matrix(
    grid: &Grid1D,
    spec: &ModulationSpec,
    span: usize,
    diag: &[Complex64],
    spatial_scale: f64,
) -> ComplexBanded {
    let m = grid.m;
    let n_h = 2 * span + 1;
    let j_max = spec.harmonics();
    assert_eq!(diag.len(), n_h);

    let a0 = assemble_stiffness(grid, |x| spec.mu0.eval(x));
    let ahat: Vec<BandedSym> = spec
        .muhat
        .iter()
        .map(|p| assemble_stiffness(grid, |x| p.eval(x)))
        .collect();

    let bw = n_h + j_max;
    let mut mat = ComplexBanded::new(n_h * m, bw, bw);

    let mut add_spatial = |op: &BandedSym, weight: f64, row_idx: usize, col_idx: usize| {
        if weight == 0.0 {
            return;
        }
        for i in 0..m {
            let r = i * n_h + row_idx;
            mat.add(
                r,
                i * n_h + col_idx,
                Complex64::new(weight * op.diag[i], 0.0),
            );
            if i > 0 {
                mat.add(
                    r,
                    (i - 1) * n_h + col_idx,
                    Complex64::new(weight * op.off[i - 1], 0.0),
                );
            }
            if i + 1 < m {
                mat.add(
                    r,
                    (i + 1) * n_h + col_idx,
                    Complex64::new(weight * op.off[i], 0.0),
                );
            }
        }
    };

    for idx in 0..n_h {
        add_spatial(&a0, spatial_scale, idx, idx);
        for j in 1..=j_max {
            let w = spatial_scale * spec.rho;
            if idx >= j {
                add_spatial(&ahat[j - 1], w, idx, idx - j);
            }
            if idx + j < n_h {
                add_spatial(&ahat[j - 1], w, idx, idx + j);
            }
        }
    }
    for idx in 0..n_h {
        for i in 0..m {
            let r = i * n_h + idx;
            mat.add(r, r, diag[idx]);
        }
    }
    mat
}

impl BlockOperator {
    pub fn dim(&self) -> usize {
        (2 * self.span + 1) * self.m
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.matrix.apply(z)
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.factor.solve(rhs)
    }
}

/// Assembles and factors the operator block row
/// (s + i k/eps)^2 I + A_0 + rho * sum_j Ahat_j (shift by j).
pub fn assemble_block(
    grid: &Grid1D,
    spec: &ModulationSpec,
    cfg: &MfeConfig,
    s: Complex64,
) -> Result<BlockOperator> {
    let span = cfg.span(spec);
    let diag: Vec<Complex64> = (0..2 * span + 1)
        .map(|idx| {
            let k = idx as i64 - span as i64;
            let sk = s + Complex64::new(0.0, k as f64 / spec.epsilon);
            sk * sk
        })
        .collect();
    let matrix = build_block_matrix(grid, spec, span, &diag, 1.0);
    let factor = matrix
        .factor()
        .map_err(|e| MfeError::NumericalFailure(format!("at s = {s}: {e}")))?;
    Ok(BlockOperator {
        m: grid.m,
        span,
        matrix,
        factor,
    })
}

struct March {
    m: usize,
    span: usize,
    n_h: usize,
    /// Factorized left-hand operator diag(beta_k) + S/4.
    lhs: BandedLu,
    /// S/4 without the diagonal shift, for right-hand-side applications.
    quarter_s: ComplexBanded,
    /// Per-harmonic coefficients of z^n and z^{n-1} on the right-hand side.
    c_cur: Vec<Complex64>,
    c_prev: Vec<Complex64>,
}

impl March {
    fn new(grid: &Grid1D, spec: &ModulationSpec, cfg: &MfeConfig, tau: f64) -> Result<Self> {
        let span = cfg.span(spec);
        let n_h = 2 * span + 1;
        let freq = |idx: usize| (idx as i64 - span as i64) as f64 / spec.epsilon;
        let beta: Vec<Complex64> = (0..n_h)
            .map(|idx| {
                let om = freq(idx);
                Complex64::new(1.0 / (tau * tau) - om * om / 4.0, om / tau)
            })
            .collect();
        let zero = vec![Complex64::new(0.0, 0.0); n_h];
        let lhs = build_block_matrix(grid, spec, span, &beta, 0.25).factor()?;
        let quarter_s = build_block_matrix(grid, spec, span, &zero, 0.25);
        let c_cur: Vec<Complex64> = (0..n_h)
            .map(|idx| {
                let om = freq(idx);
                Complex64::new(2.0 / (tau * tau) + om * om / 2.0, 0.0)
            })
            .collect();
        let c_prev: Vec<Complex64> = (0..n_h)
            .map(|idx| {
                let om = freq(idx);
                Complex64::new(-1.0 / (tau * tau) + om * om / 4.0, om / tau)
            })
            .collect();
        Ok(March {
            m: grid.m,
            span,
            n_h,
            lhs,
            quarter_s,
            c_cur,
            c_prev,
        })
    }

    /// One step: given z^n, z^{n-1} and the averaged source
    /// (f^{n+1} + 2 f^n + f^{n-1})/4 on the k = 0 block, returns z^{n+1}.
    fn step(&self, cur: &[Complex64], prev: &[Complex64], source_avg: &[f64]) -> Vec<Complex64> {
        let n = cur.len();
        let mut combo = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            combo[i] = 2.0 * cur[i] + prev[i];
        }
        let s_combo = self.quarter_s.apply(&combo);
        let mut rhs = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..self.m {
            for idx in 0..self.n_h {
                let p = i * self.n_h + idx;
                rhs[p] = self.c_cur[idx] * cur[p] + self.c_prev[idx] * prev[p] - s_combo[p];
            }
            rhs[i * self.n_h + self.span] += Complex64::new(source_avg[i], 0.0);
        }
        self.lhs.solve(&rhs)
    }
}

/// Marches the coupled system from vanishing initial data, handing the flat
/// coefficient vector at every step (including step 0) to the observer.
/// Exactly one factorization of the constant system matrix is performed.
pub fn mfe_solve_observed<F>(
    grid: &Grid1D,
    spec: &ModulationSpec,
    src: &SourceSpec,
    cfg: &MfeConfig,
    tau: f64,
    n_steps: usize,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(usize, MfeFields<'_>),
{
    if !(tau > 0.0) {
        return Err(MfeError::InvalidArgument("tau must be positive".into()));
    }
    if n_steps < 1 {
        return Err(MfeError::InvalidArgument("need at least one step".into()));
    }
    spec.validate()?;
    let march = March::new(grid, spec, cfg, tau)?;
    let m = grid.m;
    let dim = march.n_h * m;

    let mut prev = vec![Complex64::new(0.0, 0.0); dim];
    let mut cur = vec![Complex64::new(0.0, 0.0); dim];
    observer(
        0,
        MfeFields {
            span: march.span,
            m,
            flat: &cur,
        },
    );

    // f is extended by zero for t < 0.
    let mut f_prev = vec![0.0; m];
    let mut f_cur = src.sample(grid, 0.0);
    for n in 0..n_steps {
        let f_next = src.sample(grid, (n + 1) as f64 * tau);
        let avg: Vec<f64> = (0..m)
            .map(|i| 0.25 * (f_next[i] + 2.0 * f_cur[i] + f_prev[i]))
            .collect();
        let next = march.step(&cur, &prev, &avg);
        prev = std::mem::replace(&mut cur, next);
        f_prev = std::mem::replace(&mut f_cur, f_next);
        observer(
            n + 1,
            MfeFields {
                span: march.span,
                m,
                flat: &cur,
            },
        );
    }
    Ok(())
}

fn per_harmonic(flat: &[Complex64], n_h: usize, m: usize) -> Vec<Vec<Complex64>> {
    (0..n_h)
        .map(|idx| (0..m).map(|i| flat[i * n_h + idx]).collect())
        .collect()
}

pub(crate) fn trajectory_from_flat(
    tau: f64,
    span: usize,
    m: usize,
    flats: Vec<Vec<Complex64>>,
    w0: Option<Vec<Vec<Complex64>>>,
) -> MfeTrajectory {
    let n_h = 2 * span + 1;
    let last = flats.len() - 1;
    let mut states = Vec::with_capacity(flats.len());
    for (step, flat) in flats.iter().enumerate() {
        let z = per_harmonic(flat, n_h, m);
        // Centered differences for the time derivative; step 0 takes the
        // supplied exact data, the last step a one-sided difference.
        let w: Vec<Vec<Complex64>> = if step == 0 {
            match &w0 {
                Some(w0) => w0.clone(),
                None => per_harmonic(&flats[1], n_h, m)
                    .into_iter()
                    .map(|row| row.into_iter().map(|v| v / tau).collect())
                    .collect(),
            }
        } else if step < last {
            let hi = &flats[step + 1];
            let lo = &flats[step - 1];
            (0..n_h)
                .map(|idx| {
                    (0..m)
                        .map(|i| (hi[i * n_h + idx] - lo[i * n_h + idx]) / (2.0 * tau))
                        .collect()
                })
                .collect()
        } else {
            let lo = &flats[step - 1];
            (0..n_h)
                .map(|idx| {
                    (0..m)
                        .map(|i| (flat[i * n_h + idx] - lo[i * n_h + idx]) / tau)
                        .collect()
                })
                .collect()
        };
        states.push(MfeState {
            z,
            w,
            t: step as f64 * tau,
        });
    }
    MfeTrajectory { tau, span, states }
}

/// Trapezoidal solve of the coupled system from vanishing initial data,
/// storing the full trajectory.
pub fn mfe_solve(
    grid: &Grid1D,
    spec: &ModulationSpec,
    src: &SourceSpec,
    cfg: &MfeConfig,
    tau: f64,
    n_steps: usize,
) -> Result<MfeTrajectory> {
    let mut flats = Vec::with_capacity(n_steps + 1);
    let mut span = 0;
    mfe_solve_observed(grid, spec, src, cfg, tau, n_steps, |_, fields| {
        span = fields.span;
        flats.push(fields.flat.to_vec());
    })?;
    let n_h = 2 * span + 1;
    let w0 = vec![vec![Complex64::new(0.0, 0.0); grid.m]; n_h];
    Ok(trajectory_from_flat(tau, span, grid.m, flats, Some(w0)))
}

/// Free evolution (f = 0) of the coupled system from the initial data
/// (z0, w0), with a Taylor expansion supplying the first step of the
/// two-step scheme. Used to observe the conserved quadratic quantity.
pub fn mfe_evolve(
    grid: &Grid1D,
    spec: &ModulationSpec,
    cfg: &MfeConfig,
    z0: &[Vec<Complex64>],
    w0: &[Vec<Complex64>],
    tau: f64,
    n_steps: usize,
) -> Result<MfeTrajectory> {
    if !(tau > 0.0) {
        return Err(MfeError::InvalidArgument("tau must be positive".into()));
    }
    if n_steps < 1 {
        return Err(MfeError::InvalidArgument("need at least one step".into()));
    }
    spec.validate()?;
    let span = cfg.span(spec);
    let n_h = 2 * span + 1;
    let m = grid.m;
    if z0.len() != n_h || w0.len() != n_h || z0.iter().chain(w0.iter()).any(|v| v.len() != m) {
        return Err(MfeError::InvalidArgument(format!(
            "initial data must provide {n_h} harmonics of length {m}"
        )));
    }
    let march = March::new(grid, spec, cfg, tau)?;
    let full_s = build_block_matrix(grid, spec, span, &vec![Complex64::new(0.0, 0.0); n_h], 1.0);

    let flatten = |per_k: &[Vec<Complex64>]| -> Vec<Complex64> {
        let mut flat = vec![Complex64::new(0.0, 0.0); n_h * m];
        for (idx, row) in per_k.iter().enumerate() {
            for i in 0..m {
                flat[i * n_h + idx] = row[i];
            }
        }
        flat
    };
    let z_flat = flatten(z0);
    let w_flat = flatten(w0);

    // z^1 = z^0 + tau w^0 + (tau^2/2) z''(0) with
    // z''_k = -2 i (k/eps) w_k + (k/eps)^2 z_k - (S z)_k.
    let s_z0 = full_s.apply(&z_flat);
    let mut cur = vec![Complex64::new(0.0, 0.0); n_h * m];
    for i in 0..m {
        for idx in 0..n_h {
            let om = (idx as i64 - span as i64) as f64 / spec.epsilon;
            let p = i * n_h + idx;
            let accel = Complex64::new(0.0, -2.0 * om) * w_flat[p] + om * om * z_flat[p] - s_z0[p];
            cur[p] = z_flat[p] + tau * w_flat[p] + 0.5 * tau * tau * accel;
        }
    }

    let zero_src = vec![0.0; m];
    let mut flats = Vec::with_capacity(n_steps + 1);
    flats.push(z_flat.clone());
    flats.push(cur.clone());
    let mut prev = z_flat;
    for _ in 1..n_steps {
        let next = march.step(&cur, &prev, &zero_src);
        prev = std::mem::replace(&mut cur, next);
        flats.push(cur.clone());
    }
    Ok(trajectory_from_flat(tau, span, m, flats, Some(w0.to_vec())))
}

/// Result of collapsing the expansion back to the physical field.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: Vec<f64>,
    /// Discrete L2 norm of the imaginary part discarded by the real-part
    /// projection; tiny for real sources.
    pub imag_norm: f64,
}

pub fn reconstruct(state: &MfeState, spec: &ModulationSpec, grid: &Grid1D) -> Reconstruction {
    let n_h = state.z.len();
    let mut flat = vec![Complex64::new(0.0, 0.0); n_h * grid.m];
    for (idx, row) in state.z.iter().enumerate() {
        for i in 0..grid.m {
            flat[i * n_h + idx] = row[i];
        }
    }
    let fields = MfeFields {
        span: (n_h - 1) / 2,
        m: grid.m,
        flat: &flat,
    };
    let (field, imag_norm) = fields.reconstruct_at(state.t, spec.epsilon, grid.h);
    Reconstruction { field, imag_norm }
}

pub(crate) fn l2_norm_sq(h: f64, v: &[Complex64]) -> f64 {
    h * v.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Gradient pairing h * sum over cells of (grad a) conj(grad b) with
/// forward differences and homogeneous Dirichlet padding.
pub(crate) fn h1_pairing(h: f64, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let m = a.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = zero;
    for i in 0..=m {
        let da = (if i == m { zero } else { a[i] }) - (if i == 0 { zero } else { a[i - 1] });
        let db = (if i == m { zero } else { b[i] }) - (if i == 0 { zero } else { b[i - 1] });
        acc += da * db.conj();
    }
    acc / h
}

pub(crate) fn h1_seminorm_sq(h: f64, v: &[Complex64]) -> f64 {
    h1_pairing(h, v, v).re
}

/// Quadratic quantity conserved along f = 0 solutions of the coupled system:
/// sum_k ( |w_k|^2 - (k/eps)^2 |z_k|^2 + |grad z_k|^2 )
///   + 2 rho sum_k Re <grad z_k, grad z_{k-1}>,
/// in h-weighted discrete norms with forward-difference gradients. The
/// coupling term carries the factor 2 that makes its time derivative cancel
/// the tested coupling sum exactly.
pub fn mfe_invariant(state: &MfeState, grid: &Grid1D, spec: &ModulationSpec) -> f64 {
    let span = (state.z.len() - 1) / 2;
    let h = grid.h;
    let mut total = 0.0;
    for idx in 0..state.z.len() {
        let k = idx as i64 - span as i64;
        let om = k as f64 / spec.epsilon;
        total += l2_norm_sq(h, &state.w[idx]);
        total -= om * om * l2_norm_sq(h, &state.z[idx]);
        total += h1_seminorm_sq(h, &state.z[idx]);
        if idx > 0 {
            total += 2.0 * spec.rho * h1_pairing(h, &state.z[idx], &state.z[idx - 1]).re;
        }
    }
    total
}

/// Space-time discrete L2 norm of each nonnegative harmonic over the stored
/// trajectory: (sum_n h sum_i |z_k(t_n, x_i)|^2)^(1/2), unweighted in n.
pub fn coefficient_norms(traj: &MfeTrajectory, grid: &Grid1D) -> Vec<f64> {
    (0..=traj.span)
        .map(|k| {
            let idx = traj.span + k;
            traj.states
                .iter()
                .map(|s| l2_norm_sq(grid.h, &s.z[idx]))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Streaming accumulator for [`coefficient_norms`] when the trajectory is
/// too large to store.
pub struct CoefficientNormAccumulator {
    h: f64,
    sums: Vec<f64>,
}

impl CoefficientNormAccumulator {
    pub fn new(span: usize, h: f64) -> Self {
        CoefficientNormAccumulator {
            h,
            sums: vec![0.0; span + 1],
        }
    }

    pub fn accumulate(&mut self, fields: &MfeFields<'_>) {
        for k in 0..self.sums.len() {
            let v = fields.harmonic(k as i64);
            self.sums[k] += l2_norm_sq(self.h, &v);
        }
    }

    pub fn finish(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s.sqrt()).collect()
    }
}

/// Largest relative conjugate-symmetry defect
/// max_k ||z_{-k} - conj(z_k)|| / max_k ||z_k|| at one state.
pub fn conjugate_symmetry_defect(state: &MfeState, grid: &Grid1D) -> f64 {
    let span = (state.z.len() - 1) / 2;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..=span {
        let plus = &state.z[span + k];
        let minus = &state.z[span - k];
        let defect: f64 = plus
            .iter()
            .zip(minus)
            .map(|(a, b)| (b - a.conj()).norm_sqr())
            .sum();
        worst = worst.max((grid.h * defect).sqrt());
        scale = scale.max(l2_norm_sq(grid.h, plus).sqrt());
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Sup over the shared time grid of || reconstruct(z(t_n)) - u_ref(t_n) ||
/// in the h-weighted discrete L2 norm. The reference trajectory must hold a
/// whole multiple of the expansion's steps.
pub fn remainder_norm(
    mfe_traj: &MfeTrajectory,
    ref_traj: &crate::direct::WaveTrajectory,
    spec: &ModulationSpec,
    grid: &Grid1D,
) -> Result<f64> {
    let n_mfe = mfe_traj.states.len() - 1;
    let n_ref = ref_traj.states.len() - 1;
    if n_mfe == 0 || n_ref == 0 || n_ref % n_mfe != 0 {
        return Err(MfeError::InvalidArgument(format!(
            "time grids do not nest: {n_ref} reference steps vs {n_mfe} expansion steps"
        )));
    }
    let stride = n_ref / n_mfe;
    if ((ref_traj.tau * stride as f64) - mfe_traj.tau).abs() > 1e-12 * mfe_traj.tau {
        return Err(MfeError::InvalidArgument(
            "time grids do not nest: step sizes mismatch".into(),
        ));
    }
    let mut sup = 0.0f64;
    for (n, state) in mfe_traj.states.iter().enumerate() {
        let rec = reconstruct(state, spec, grid);
        let u_ref = &ref_traj.states[n * stride].u;
        let diff2: f64 = rec
            .field
            .iter()
            .zip(u_ref)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sup = sup.max((grid.h * diff2).sqrt());
    }
    Ok(sup)
}
