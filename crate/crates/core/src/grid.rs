//! Uniform 1D grid and assembly of the discrete operator -d/dx (c(x) d/dx)
//! with homogeneous Dirichlet boundary conditions.

use crate::error::{MfeError, Result};

/// Uniform grid on (a, b) with `m` interior unknowns.
///
/// The boundary nodes x=a and x=b carry homogeneous Dirichlet conditions and
/// are excluded from the unknown vector, so node i sits at a + (i+1)h with
/// h = (b-a)/(m+1).
#[derive(Debug, Clone)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
}

/// Symmetric real tridiagonal matrix stored as diagonal + one off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    pub m: usize,
    /// Main diagonal, length m.
    pub diag: Vec<f64>,
    /// First off-diagonal, length m-1 (stored once; the matrix is symmetric
    /// by construction).
    pub off: Vec<f64>,
}

/// Builds the uniform interior grid.
pub fn build_grid(m: usize, a: f64, b: f64) -> Result<Grid1D> {
    if m < 1 {
        return Err(MfeError::InvalidArgument(
            "grid needs at least one interior node".into(),
        ));
    }
    if !(a < b) {
        return Err(MfeError::InvalidArgument(format!(
            "grid endpoints must satisfy a < b, got a={a}, b={b}"
        )));
    }
    let h = (b - a) / (m as f64 + 1.0);
    let nodes = (0..m).map(|i| a + (i as f64 + 1.0) * h).collect();
    Ok(Grid1D { a, b, m, h, nodes })
}

impl Grid1D {
    /// Coordinate of the half node between interior node i-1 and node i,
    /// for i = 0..=m (i=0 and i=m touch the boundary intervals).
    pub fn half_node(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.h
    }
}

/// Assembles the second-order finite-difference discretization of
/// -d/dx (c(x) d/dx) with Dirichlet rows and columns eliminated.
///
/// Row i has diagonal (c_{i-1/2} + c_{i+1/2})/h^2 and off-diagonal entries
/// -c_{i+1/2}/h^2, with the coefficient sampled at half nodes. On a uniform
/// grid this coincides with mass-lumped piecewise-linear finite elements.
pub fn assemble_stiffness<F: Fn(f64) -> f64>(grid: &Grid1D, coeff: F) -> BandedSym {
    let m = grid.m;
    let h2 = grid.h * grid.h;
    // c[i] = coeff at half node i+1/2 relative to node indexing, i = 0..=m.
    let c: Vec<f64> = (0..=m).map(|i| coeff(grid.half_node(i))).collect();
    let diag = (0..m).map(|i| (c[i] + c[i + 1]) / h2).collect();
    let off = (0..m - 1).map(|i| -c[i + 1] / h2).collect();
    BandedSym { m, diag, off }
}

impl BandedSym {
    /// y = A x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m;
        assert_eq!(x.len(), m);
        assert_eq!(y.len(), m);
        for i in 0..m {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// Attempts the LDL^T factorization; succeeds iff the matrix is positive
    /// definite. Returns the pivots on success.
    pub fn ldlt_pivots(&self) -> Result<Vec<f64>> {
        let mut d = vec![0.0; self.m];
        let mut prev = 0.0f64;
        for i in 0..self.m {
            let sub = if i > 0 { self.off[i - 1] } else { 0.0 };
            let pivot = self.diag[i] - if i > 0 { sub * sub / prev } else { 0.0 };
            if !(pivot > 0.0) {
                return Err(MfeError::NumericalFailure(format!(
                    "matrix not positive definite (pivot {pivot:e} at row {i})"
                )));
            }
            d[i] = pivot;
            prev = pivot;
        }
        Ok(d)
    }

    /// Eigenvalues of the symmetric tridiagonal matrix by Sturm-sequence
    /// bisection. Intended for diagnostics and tests at moderate m.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.m;
        // Gershgorin bounds.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < m {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        let count_below = |x: f64| -> usize {
            // Number of eigenvalues < x via the Sturm sequence of A - xI.
            let mut count = 0usize;
            let mut q = self.diag[0] - x;
            if q < 0.0 {
                count += 1;
            }
            for i in 1..m {
                let e = self.off[i - 1];
                q = self.diag[i] - x - e * e / if q != 0.0 { q } else { f64::MIN_POSITIVE };
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let tol = 1e-13 * hi.abs().max(lo.abs()).max(1.0);
        (0..m)
            .map(|p| {
                // Bisect for the (p+1)-th smallest eigenvalue.
                let (mut a, mut b) = (lo - tol, hi + tol);
                while b - a > tol {
                    let mid = 0.5 * (a + b);
                    if count_below(mid) > p {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn grid_small() {
        let g = build_grid(3, 0.0, 1.0).unwrap();
        assert_eq!(g.h, 0.25);
        assert_eq!(g.nodes, vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn grid_thousand_unknowns() {
        let g = build_grid(999, 0.0, 1.0).unwrap();
        assert_relative_eq!(g.h, 0.001, max_relative = 1e-15);
    }

    #[test]
    fn grid_single_node() {
        let g = build_grid(1, 0.0, 2.0).unwrap();
        assert_eq!(g.h, 1.0);
        assert_eq!(g.nodes, vec![1.0]);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(build_grid(0, 0.0, 1.0).is_err());
        assert!(build_grid(4, 1.0, 1.0).is_err());
        assert!(build_grid(4, 2.0, 1.0).is_err());
    }

    #[test]
    fn constant_coefficient_laplacian_entries() {
        let g = build_grid(3, 0.0, 1.0).unwrap();
        let a = assemble_stiffness(&g, |_| 1.0);
        assert_eq!(a.diag, vec![32.0, 32.0, 32.0]);
        assert_eq!(a.off, vec![-16.0, -16.0]);
    }

    #[test]
    fn laplacian_spectrum_matches_closed_form() {
        let m = 50;
        let g = build_grid(m, 0.0, 1.0).unwrap();
        let a = assemble_stiffness(&g, |_| 1.0);
        let eigs = a.eigenvalues();
        for (p, lam) in eigs.iter().enumerate() {
            let exact = 4.0 / (g.h * g.h) * ((p as f64 + 1.0) * PI * g.h / 2.0).sin().powi(2);
            assert_relative_eq!(*lam, exact, max_relative = 1e-10);
        }
    }

    /// Independent oracle: element-by-element midpoint-quadrature assembly of
    /// the piecewise-linear stiffness matrix, scaled by the lumped mass 1/h.
    fn midpoint_quadrature_oracle(grid: &Grid1D, coeff: impl Fn(f64) -> f64) -> BandedSym {
        let m = grid.m;
        let h = grid.h;
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m - 1];
        // Elements run between consecutive nodes including the boundaries;
        // element e spans (a + e h, a + (e+1) h), e = 0..=m.
        for e in 0..=m {
            let c = coeff(grid.a + (e as f64 + 0.5) * h);
            let k = c / h; // integral of c * phi' * phi' over the element
                           // Local dofs: left node e-1, right node e (interior indices).
            if e > 0 {
                diag[e - 1] += k;
            }
            if e < m {
                diag[e] += k;
            }
            if e > 0 && e < m {
                off[e - 1] -= k;
            }
        }
        // Lumped mass matrix is h I.
        for v in diag.iter_mut() {
            *v /= h;
        }
        for v in off.iter_mut() {
            *v /= h;
        }
        BandedSym { m, diag, off }
    }

    #[test]
    fn variable_coefficient_matches_quadrature_oracle() {
        let g = build_grid(50, 0.0, 1.0).unwrap();
        let a = assemble_stiffness(&g, |x| 1.0 + x);
        assert!(a.ldlt_pivots().is_ok());
        let oracle = midpoint_quadrature_oracle(&g, |x| 1.0 + x);
        let scale = 1.0 / (g.h * g.h);
        for i in 0..g.m {
            assert!((a.diag[i] - oracle.diag[i]).abs() <= 1e-14 * scale);
        }
        for i in 0..g.m - 1 {
            assert!((a.off[i] - oracle.off[i]).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn apply_is_symmetric_bilinear_form() {
        let g = build_grid(17, 0.0, 1.0).unwrap();
        let a = assemble_stiffness(&g, |x| 1.0 + 0.3 * (5.0 * x).sin());
        let m = g.m;
        let x: Vec<f64> = (0..m).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..m).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut ax = vec![0.0; m];
        let mut ay = vec![0.0; m];
        a.apply(&x, &mut ax);
        a.apply(&y, &mut ay);
        let xay: f64 = x.iter().zip(&ay).map(|(u, v)| u * v).sum();
        let yax: f64 = y.iter().zip(&ax).map(|(u, v)| u * v).sum();
        assert_relative_eq!(xay, yax, max_relative = 1e-12);
    }

    #[test]
    fn smallest_eigenvalue_bounded_by_coefficient_floor() {
        let m = 30;
        let g = build_grid(m, 0.0, 1.0).unwrap();
        let c_floor = 0.7;
        let a = assemble_stiffness(&g, |x| c_floor + 0.5 * x * x);
        let lap = assemble_stiffness(&g, |_| 1.0);
        let lam_min = a.eigenvalues()[0];
        let lam1 = lap.eigenvalues()[0];
        assert!(lam_min >= c_floor * lam1 * (1.0 - 1e-12));
    }

    #[test]
    fn eigenvalue_error_decays_at_second_order() {
        let avg = 1.0;
        let err_for = |m: usize| {
            let g = build_grid(m, 0.0, 1.0).unwrap();
            let a = assemble_stiffness(&g, |_| avg);
            (a.eigenvalues()[0] - PI * PI * avg).abs()
        };
        let e1 = err_for(40);
        let e2 = err_for(81); // doubling m+1 halves h
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() <= 0.8, "expected ratio ~4, got {ratio}");
    }
}
