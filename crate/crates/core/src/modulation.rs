//! Time-modulated material coefficient and excitation sources.
//!
//! The coefficient has the finite-harmonic form
//! mu(x, t) = mu0(x) + 2 rho * sum_{j=1..J} muhat_j(x) cos(j t / epsilon),
//! i.e. a static profile plus a small-amplitude modulation that is
//! 2*pi*epsilon periodic in time.

use crate::error::{MfeError, Result};
use crate::grid::Grid1D;

/// Spatial coefficient profile: a handful of named shapes or tabulated
/// samples on a uniform grid over [a, b] (linearly interpolated).
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffProfile {
    Constant(f64),
    /// offset + slope * x
    Affine {
        offset: f64,
        slope: f64,
    },
    /// baseline + amplitude * exp(-width * (x - center)^2)
    Bump {
        baseline: f64,
        amplitude: f64,
        width: f64,
        center: f64,
    },
    /// Equally spaced samples over [a, b] including both endpoints.
    Samples {
        a: f64,
        b: f64,
        values: Vec<f64>,
    },
}

impl CoeffProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CoeffProfile::Constant(v) => *v,
            CoeffProfile::Affine { offset, slope } => offset + slope * x,
            CoeffProfile::Bump {
                baseline,
                amplitude,
                width,
                center,
            } => baseline + amplitude * (-width * (x - center) * (x - center)).exp(),
            CoeffProfile::Samples { a, b, values } => {
                if values.len() == 1 {
                    return values[0];
                }
                let n = values.len() - 1;
                let s = ((x - a) / (b - a) * n as f64).clamp(0.0, n as f64);
                let i = (s.floor() as usize).min(n - 1);
                let w = s - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoeffProfile::Constant(_))
    }
}

/// The time-modulated coefficient mu(x, t).
#[derive(Debug, Clone)]
pub struct ModulationSpec {
    /// Fast time scale; the modulation period is 2*pi*epsilon.
    pub epsilon: f64,
    /// Modulation amplitude.
    pub rho: f64,
    /// Static component mu0(x).
    pub mu0: CoeffProfile,
    /// Harmonic profiles muhat_1 .. muhat_J (mirrored to negative indices).
    pub muhat: Vec<CoeffProfile>,
    /// Lower bound for mu0 (positivity floor).
    pub c_mu: f64,
    /// Upper bound for mu0.
    pub big_c_mu: f64,
}

impl ModulationSpec {
    /// Spatially constant modulation mu = 1 + 2 rho cos(t/epsilon).
    pub fn cosine(epsilon: f64, rho: f64) -> Self {
        ModulationSpec {
            epsilon,
            rho,
            mu0: CoeffProfile::Constant(1.0),
            muhat: vec![CoeffProfile::Constant(1.0)],
            c_mu: 1.0,
            big_c_mu: 1.0,
        }
    }

    pub fn harmonics(&self) -> usize {
        self.muhat.len()
    }

    /// True when every profile is spatially constant, in which case the
    /// stiffness operator separates as mu(t) * A.
    pub fn is_spatially_constant(&self) -> bool {
        self.mu0.is_constant() && self.muhat.iter().all(CoeffProfile::is_constant)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(MfeError::InvalidArgument("epsilon must be positive".into()));
        }
        if self.rho < 0.0 {
            return Err(MfeError::InvalidArgument("rho must be nonnegative".into()));
        }
        Ok(())
    }

    /// Evaluates mu (deriv = 0) or its time derivative d mu / dt (deriv = 1).
    pub fn eval(&self, x: f64, t: f64, deriv: u8) -> f64 {
        let theta = t / self.epsilon;
        match deriv {
            0 => {
                let mut v = self.mu0.eval(x);
                for (j, profile) in self.muhat.iter().enumerate() {
                    let jf = (j + 1) as f64;
                    v += 2.0 * self.rho * profile.eval(x) * (jf * theta).cos();
                }
                v
            }
            1 => {
                let mut v = 0.0;
                for (j, profile) in self.muhat.iter().enumerate() {
                    let jf = (j + 1) as f64;
                    v -= 2.0 * self.rho / self.epsilon * jf * profile.eval(x) * (jf * theta).sin();
                }
                v
            }
            _ => panic!("deriv must be 0 or 1"),
        }
    }

    /// Checks mu(x, t) > 0 on the grid nodes and half nodes over one period,
    /// sampling `nt` time points.
    pub fn positivity_on_grid(&self, grid: &Grid1D, nt: usize) -> bool {
        let period = 2.0 * std::f64::consts::PI * self.epsilon;
        for k in 0..nt {
            let t = period * k as f64 / nt as f64;
            for i in 0..=grid.m {
                if self.eval(grid.half_node(i), t, 0) <= 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Rate constant governing how fast the modulation can pump energy:
/// (1 / (pi * epsilon)) * integral over one period of
/// sup_x [ (d mu/dt)_+ / mu ],
/// computed with the composite midpoint rule on `subintervals` cells.
/// For the cosine modulation this approaches (rho/epsilon) * 4/pi as rho -> 0.
pub fn modulation_pump_constant(spec: &ModulationSpec, grid: &Grid1D, subintervals: usize) -> f64 {
    let period = 2.0 * std::f64::consts::PI * spec.epsilon;
    let dt = period / subintervals as f64;
    let mut integral = 0.0;
    for k in 0..subintervals {
        let t = (k as f64 + 0.5) * dt;
        let mut sup = 0.0f64;
        for i in 0..=grid.m {
            let x = grid.half_node(i);
            let rate = spec.eval(x, t, 1).max(0.0) / spec.eval(x, t, 0);
            sup = sup.max(rate);
        }
        integral += sup * dt;
    }
    integral / (std::f64::consts::PI * spec.epsilon)
}

/// Excitation kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    /// g(x, t - t0) - g(x, t - t0 - 0.1) with
    /// g(x, t) = exp(-100 (x - 1/2)^2 - 10 t^2): a balanced pulse that
    /// launches a small wave packet around t = t0.
    SmoothBalanced,
    /// exp(-10 (t - t0)^2) on 1/4 <= x <= 3/4, zero elsewhere: spatially a
    /// step, hence low spatial regularity.
    LowRegularityStep,
    Zero,
    /// Tabulated space-time samples: `values[n][i]` at interior node i of a
    /// uniform grid on (0, 1) and time n * dt, linearly interpolated in
    /// time and zero outside the sampled window.
    CustomSamples {
        dt: f64,
        values: Vec<Vec<f64>>,
    },
}

/// Space-time excitation f(x, t).
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Temporal onset shift.
    pub t0: f64,
    /// Whether the spatial support is strictly interior to the domain
    /// (used by the Laplace-domain decay diagnostics).
    pub interior_support: bool,
}

impl SourceSpec {
    pub fn smooth_balanced() -> Self {
        SourceSpec {
            kind: SourceKind::SmoothBalanced,
            t0: 1.0,
            interior_support: true,
        }
    }

    pub fn low_regularity_step() -> Self {
        SourceSpec {
            kind: SourceKind::LowRegularityStep,
            t0: 1.0,
            interior_support: true,
        }
    }

    pub fn zero() -> Self {
        SourceSpec {
            kind: SourceKind::Zero,
            t0: 0.0,
            interior_support: true,
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match &self.kind {
            SourceKind::SmoothBalanced => {
                let g = |s: f64| (-100.0 * (x - 0.5) * (x - 0.5) - 10.0 * s * s).exp();
                g(t - self.t0) - g(t - self.t0 - 0.1)
            }
            SourceKind::LowRegularityStep => {
                if (0.25..=0.75).contains(&x) {
                    let s = t - self.t0;
                    (-10.0 * s * s).exp()
                } else {
                    0.0
                }
            }
            SourceKind::Zero => 0.0,
            SourceKind::CustomSamples { dt, values } => {
                if values.is_empty() {
                    return 0.0;
                }
                let m = values[0].len();
                let i =
                    ((x * (m as f64 + 1.0)).round() as isize - 1).clamp(0, m as isize - 1) as usize;
                let s = t / dt;
                if s < 0.0 {
                    return 0.0;
                }
                let n = s.floor() as usize;
                let w = s - n as f64;
                let v0 = values.get(n).map_or(0.0, |row| row[i]);
                let v1 = values.get(n + 1).map_or(0.0, |row| row[i]);
                v0 * (1.0 - w) + v1 * w
            }
        }
    }

    /// Samples f(., t) at the interior grid nodes.
    pub fn sample(&self, grid: &Grid1D, t: f64) -> Vec<f64> {
        grid.nodes.iter().map(|&x| self.eval(x, t)).collect()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, SourceKind::Zero)
    }
}
