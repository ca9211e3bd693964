//! Reference solver: the trapezoidal rule applied directly to the wave
//! equation with the oscillatory coefficient, written as a first-order
//! system in (u, v = du/dt).
//!
//! The time-dependent stiffness forces a refactorization at every step;
//! this cost is exactly what the coupled-harmonics integrator avoids.

use std::collections::HashMap;

use crate::error::{MfeError, Result};
use crate::grid::{assemble_stiffness, BandedSym, Grid1D};
use crate::linalg::SpdTridiagFactor;
use crate::modulation::{ModulationSpec, SourceSpec};

/// Displacement and velocity at the interior nodes at one time.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

/// States at t_n = n * tau for n = 0..=N.
#[derive(Debug, Clone)]
pub struct WaveTrajectory {
    pub tau: f64,
    pub states: Vec<WaveState>,
}

#[derive(Debug, Clone, Default)]
pub struct DirectOptions {
    /// Reuse factorizations of I + (tau^2/4) mu * A when the modulation is
    /// spatially constant and mu(t) repeats on the time grid. Off by
    /// default; the default path refactors every step.
    pub reuse_factorizations: bool,
}

fn positivity_error(err: MfeError, t: f64) -> MfeError {
    match err {
        MfeError::NumericalFailure(msg) => {
            MfeError::NumericalFailure(format!("modulation positivity violated at t={t}: {msg}"))
        }
        other => other,
    }
}

/// Marches the trapezoidal scheme, handing (n, u, v) at every accepted step
/// (including n = 0) to the observer.
pub fn direct_solve_observed<F>(
    grid: &Grid1D,
    spec: &ModulationSpec,
    src: &SourceSpec,
    tau: f64,
    n_steps: usize,
    opts: &DirectOptions,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(usize, &[f64], &[f64]),
{
    if !(tau > 0.0) {
        return Err(MfeError::InvalidArgument("tau must be positive".into()));
    }
    if n_steps < 1 {
        return Err(MfeError::InvalidArgument("need at least one step".into()));
    }
    spec.validate()?;
    let m = grid.m;
    let quarter = tau * tau / 4.0;

    let spatially_constant = spec.is_spatially_constant();
    let unit_stiffness = if spatially_constant {
        Some(assemble_stiffness(grid, |_| 1.0))
    } else {
        None
    };
    let mut factor_cache: HashMap<u64, SpdTridiagFactor> = HashMap::new();

    let stiffness_at = |t: f64| -> BandedSym {
        if let Some(unit) = &unit_stiffness {
            let mu = spec.eval(grid.half_node(0), t, 0);
            BandedSym {
                m,
                diag: unit.diag.iter().map(|d| mu * d).collect(),
                off: unit.off.iter().map(|o| mu * o).collect(),
            }
        } else {
            assemble_stiffness(grid, |x| spec.eval(x, t, 0))
        }
    };

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; m];
    let mut a_now = stiffness_at(0.0);
    let mut f_now = src.sample(grid, 0.0);
    observer(0, &u, &v);

    let mut au = vec![0.0; m];
    for n in 0..n_steps {
        let t_next = (n + 1) as f64 * tau;
        let a_next = stiffness_at(t_next);
        let f_next = src.sample(grid, t_next);

        let factor = {
            let build = || -> Result<SpdTridiagFactor> {
                let diag: Vec<f64> = a_next.diag.iter().map(|d| 1.0 + quarter * d).collect();
                let off: Vec<f64> = a_next.off.iter().map(|o| quarter * o).collect();
                SpdTridiagFactor::new(&diag, &off).map_err(|e| positivity_error(e, t_next))
            };
            if opts.reuse_factorizations && spatially_constant {
                let key = spec.eval(grid.half_node(0), t_next, 0).to_bits();
                if !factor_cache.contains_key(&key) {
                    factor_cache.insert(key, build()?);
                }
                factor_cache[&key].clone()
            } else {
                build()?
            }
        };

        a_now.apply(&u, &mut au);
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            rhs[i] = u[i] + tau * v[i] + quarter * (-au[i] + f_now[i] + f_next[i]);
        }
        factor.solve_in_place(&mut rhs);
        let u_next = rhs;

        let mut au_next = vec![0.0; m];
        a_next.apply(&u_next, &mut au_next);
        for i in 0..m {
            v[i] += 0.5 * tau * (-au_next[i] - au[i] + f_now[i] + f_next[i]);
        }
        u = u_next;
        a_now = a_next;
        f_now = f_next;
        observer(n + 1, &u, &v);
    }
    Ok(())
}

/// Trapezoidal solve storing the full trajectory.
pub fn direct_solve(
    grid: &Grid1D,
    spec: &ModulationSpec,
    src: &SourceSpec,
    tau: f64,
    n_steps: usize,
) -> Result<WaveTrajectory> {
    let mut states = Vec::with_capacity(n_steps + 1);
    direct_solve_observed(
        grid,
        spec,
        src,
        tau,
        n_steps,
        &DirectOptions::default(),
        |n, u, v| {
            states.push(WaveState {
                u: u.to_vec(),
                v: v.to_vec(),
                t: n as f64 * tau,
            });
        },
    )?;
    Ok(WaveTrajectory { tau, states })
}

/// Discrete energy 1/2 h sum v_i^2 + 1/2 h sum mu(x_{i+1/2}, t) ((u_{i+1}-u_i)/h)^2,
/// with the boundary values of u taken as zero.
pub fn energy_of(state: &WaveState, spec: &ModulationSpec, grid: &Grid1D) -> f64 {
    energy_of_fields(&state.u, &state.v, state.t, spec, grid)
}

pub(crate) fn energy_of_fields(
    u: &[f64],
    v: &[f64],
    t: f64,
    spec: &ModulationSpec,
    grid: &Grid1D,
) -> f64 {
    let m = grid.m;
    let h = grid.h;
    let kinetic: f64 = v.iter().map(|vi| vi * vi).sum::<f64>() * h * 0.5;
    let mut potential = 0.0;
    for i in 0..=m {
        let left = if i == 0 { 0.0 } else { u[i - 1] };
        let right = if i == m { 0.0 } else { u[i] };
        let d = (right - left) / h;
        potential += spec.eval(grid.half_node(i), t, 0) * d * d;
    }
    kinetic + 0.5 * h * potential
}

/// Maximum over n of |E(t_n) - E(0) - Q_n| where Q_n is the trapezoidal
/// quadrature of the energy-balance rate
/// integral of (v f + 1/2 (d mu/dt) |grad u|^2) along the trajectory;
/// the 1/2 is forced by dE/dt of the potential term 1/2 mu |grad u|^2.
pub fn energy_identity_residual(
    traj: &WaveTrajectory,
    spec: &ModulationSpec,
    src: &SourceSpec,
    grid: &Grid1D,
) -> f64 {
    let m = grid.m;
    let h = grid.h;
    let integrand = |state: &WaveState| -> f64 {
        let mut val = 0.0;
        for i in 0..m {
            val += state.v[i] * src.eval(grid.nodes[i], state.t);
        }
        let mut pump = 0.0;
        for i in 0..=m {
            let left = if i == 0 { 0.0 } else { state.u[i - 1] };
            let right = if i == m { 0.0 } else { state.u[i] };
            let d = (right - left) / h;
            pump += spec.eval(grid.half_node(i), state.t, 1) * d * d;
        }
        h * (val + 0.5 * pump)
    };

    let e0 = energy_of(&traj.states[0], spec, grid);
    let mut residual = 0.0f64;
    let mut quad = 0.0;
    let mut g_prev = integrand(&traj.states[0]);
    for n in 1..traj.states.len() {
        let g = integrand(&traj.states[n]);
        quad += 0.5 * traj.tau * (g_prev + g);
        g_prev = g;
        let e = energy_of(&traj.states[n], spec, grid);
        residual = residual.max((e - e0 - quad).abs());
    }
    residual
}
