//! Solvers and diagnostics for the 1D acoustic wave equation with a fast,
//! small-amplitude, time-periodic coefficient.
//!
//! Two integration routes are provided and cross-checked:
//!
//! * [`direct`]: the trapezoidal rule applied to the modulated equation
//!   itself, which must resolve the fast coefficient (step size below the
//!   modulation scale) and refactors its system every step;
//! * [`mfe`]: a modulated Fourier expansion
//!   u = Re sum_k z_k(x,t) exp(i k t / epsilon), whose coefficients z_k solve
//!   a coupled system with constant-in-time operators, so the block system is
//!   factored once and large steps remain stable and second-order accurate.
//!
//! The [`laplace`] module analyses the coupled system in the Laplace domain
//! (resolvent bounds, coefficient decay) and implements the trapezoidal
//! convolution-quadrature route, which reproduces the time-marched
//! coefficients through independent frequency-domain solves.
//!
//! The [`harness`] module and the `mfewave` binary drive the numerical
//! experiments (convergence sweeps, coefficient-decay tables, energy
//! diagnostics, field visualization) and write deterministic CSV output.

pub mod config;
pub mod direct;
pub mod error;
pub mod grid;
pub mod harness;
pub mod laplace;
pub mod linalg;
pub mod mfe;
pub mod modulation;
pub mod report;

pub use error::{MfeError, Result};
