//! Banded complex linear algebra: LU with partial pivoting in LAPACK-style
//! band storage, plus a real symmetric-positive-definite tridiagonal solver.
//!
//! All block systems in this crate reduce to moderate-bandwidth banded
//! matrices, so a single band factorization covers every solver path.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::error::{MfeError, Result};

static FACTORIZATION_COUNT: AtomicU64 = AtomicU64::new(0);

/// Total number of banded LU factorizations performed by this process.
/// Diagnostic counter: the coupled-system integrators are expected to
/// factor exactly once per trajectory.
pub fn factorization_count() -> u64 {
    FACTORIZATION_COUNT.load(Ordering::Relaxed)
}

/// Complex banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Storage is column major with leading dimension 2*kl + ku + 1; the extra
/// kl rows hold fill-in produced by partial pivoting.
#[derive(Debug, Clone)]
pub struct ComplexBanded {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<Complex64>,
}

/// LU factorization of a [`ComplexBanded`] matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl ComplexBanded {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0);
        let ldab = 2 * kl + ku + 1;
        ComplexBanded {
            n,
            kl,
            ku,
            ldab,
            ab: vec![Complex64::new(0.0, 0.0); ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "outside band");
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i + self.ku < j || j + self.kl < i {
            return Complex64::new(0.0, 0.0);
        }
        self.ab[self.idx(i, j)]
    }

    /// y = A x.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            let xj = x[j];
            for i in lo..=hi {
                y[i] += self.ab[self.idx(i, j)] * xj;
            }
        }
        y
    }

    /// LU factorization with partial pivoting. Fails on an exactly singular
    /// pivot, reporting the offending column.
    pub fn factor(&self) -> Result<BandedLu> {
        FACTORIZATION_COUNT.fetch_add(1, Ordering::Relaxed);
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // effective upper bandwidth after pivoting
        let mut ab = self.ab.clone();
        let mut ipiv = vec![0usize; n];
        let at = |ab: &Vec<Complex64>, i: usize, j: usize| ab[j * ldab + (kl + ku + i - j)];

        for j in 0..n {
            let i_max = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = at(&ab, j, j).norm_sqr();
            for i in j + 1..=i_max {
                let v = at(&ab, i, j).norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(MfeError::NumericalFailure(format!(
                    "singular banded system (zero pivot in column {j})"
                )));
            }
            ipiv[j] = p;
            let c_max = (j + kv).min(n - 1);
            if p != j {
                for c in j..=c_max {
                    let ia = c * ldab + (kl + ku + j - c);
                    let ib = c * ldab + (kl + ku + p - c);
                    ab.swap(ia, ib);
                }
            }
            let piv = at(&ab, j, j);
            for i in j + 1..=i_max {
                let k = j * ldab + (kl + ku + i - j);
                ab[k] /= piv;
            }
            for c in j + 1..=c_max {
                let ujc = at(&ab, j, c);
                if ujc.norm_sqr() == 0.0 {
                    continue;
                }
                for i in j + 1..=i_max {
                    let mult = at(&ab, i, j);
                    let k = c * ldab + (kl + ku + i - c);
                    ab[k] -= mult * ujc;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab,
            ipiv,
        })
    }
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        let at = |i: usize, j: usize| self.ab[j * ldab + (kl + ku + i - j)];
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            let i_max = (j + kl).min(n - 1);
            for i in j + 1..=i_max {
                b[i] -= at(i, j) * bj;
            }
        }
        for j in (0..n).rev() {
            let xj = b[j] / at(j, j);
            b[j] = xj;
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= at(i, j) * xj;
            }
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// LDL^T factorization of a real symmetric positive definite tridiagonal
/// matrix; fails (with the offending pivot) when positivity is lost.
#[derive(Debug, Clone)]
pub struct SpdTridiagFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl SpdTridiagFactor {
    pub fn new(diag: &[f64], off: &[f64]) -> Result<Self> {
        let m = diag.len();
        assert_eq!(off.len(), m.saturating_sub(1));
        let mut d = vec![0.0; m];
        let mut l = vec![0.0; m.saturating_sub(1)];
        for i in 0..m {
            let mut pivot = diag[i];
            if i > 0 {
                pivot -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if !(pivot > 0.0) {
                return Err(MfeError::NumericalFailure(format!(
                    "tridiagonal system lost positive definiteness (pivot {pivot:e} at row {i})"
                )));
            }
            d[i] = pivot;
            if i + 1 < m {
                l[i] = off[i] / pivot;
            }
        }
        Ok(SpdTridiagFactor { d, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = self.d.len();
        assert_eq!(b.len(), m);
        for i in 1..m {
            b[i] -= self.l[i - 1] * b[i - 1];
        }
        for i in 0..m {
            b[i] /= self.d[i];
        }
        for i in (0..m - 1).rev() {
            b[i] -= self.l[i] * b[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Dense LU with partial pivoting, test oracle only.
    fn dense_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut m: Vec<Vec<Complex64>> = a.to_vec();
        let mut x = b.to_vec();
        for j in 0..n {
            let p = (j..n)
                .max_by(|&r, &s| m[r][j].norm().partial_cmp(&m[s][j].norm()).unwrap())
                .unwrap();
            m.swap(j, p);
            x.swap(j, p);
            for i in j + 1..n {
                let f = m[i][j] / m[j][j];
                for k in j..n {
                    let v = m[j][k];
                    m[i][k] -= f * v;
                }
                let xj = x[j];
                x[i] -= f * xj;
            }
        }
        for j in (0..n).rev() {
            for k in j + 1..n {
                let v = x[k];
                x[j] -= m[j][k] * v;
            }
            x[j] /= m[j][j];
        }
        x
    }

    fn pseudo_random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> ComplexBanded {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = ComplexBanded::new(n, kl, ku);
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                let bump = if i == j { 2.0 } else { 0.0 };
                a.add(i, j, c(next() + bump, next()));
            }
        }
        a
    }

    #[test]
    fn banded_lu_matches_dense_oracle() {
        let n = 24;
        let (kl, ku) = (3, 2);
        let a = pseudo_random_banded(n, kl, ku, 7);
        let dense: Vec<Vec<Complex64>> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j)).collect())
            .collect();
        let b: Vec<Complex64> = (0..n)
            .map(|i| c(i as f64 * 0.3 - 1.0, 0.5 - i as f64 * 0.1))
            .collect();
        let lu = a.factor().unwrap();
        let x = lu.solve(&b);
        let x_ref = dense_solve(&dense, &b);
        for i in 0..n {
            assert!((x[i] - x_ref[i]).norm() < 1e-10, "mismatch at {i}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = ComplexBanded::new(3, 1, 1);
        a.add(0, 0, c(1.0, 0.0));
        a.add(2, 2, c(1.0, 0.0));
        // middle row/column left zero
        assert!(matches!(a.factor(), Err(MfeError::NumericalFailure(_))));
    }

    #[test]
    fn factorization_counter_increments() {
        let before = factorization_count();
        let a = pseudo_random_banded(8, 1, 1, 3);
        let _ = a.factor().unwrap();
        assert_eq!(factorization_count(), before + 1);
    }

    #[test]
    fn spd_tridiag_solves_and_detects_indefiniteness() {
        let diag = vec![2.0, 2.0, 2.0, 2.0];
        let off = vec![-1.0, -1.0, -1.0];
        let f = SpdTridiagFactor::new(&diag, &off).unwrap();
        let mut b = vec![1.0, 0.0, 0.0, 1.0];
        f.solve_in_place(&mut b);
        // residual check
        let x = b;
        let r0 = 2.0 * x[0] - x[1] - 1.0;
        let r3 = 2.0 * x[3] - x[2] - 1.0;
        assert!(r0.abs() < 1e-12 && r3.abs() < 1e-12);

        assert!(SpdTridiagFactor::new(&[1.0, -5.0], &[0.3]).is_err());
    }

    proptest! {
        #[test]
        fn apply_then_solve_roundtrips(
            n in 2usize..40,
            kl in 0usize..4,
            ku in 0usize..4,
            seed in 0u64..1000,
        ) {
            let kl = kl.min(n - 1);
            let ku = ku.min(n - 1);
            let a = pseudo_random_banded(n, kl, ku, seed);
            let y: Vec<Complex64> = (0..n).map(|i| c((i as f64).sin(), (i as f64 * 0.5).cos())).collect();
            let lu = a.factor().unwrap();
            let x = lu.solve(&a.apply(&y));
            let scale: f64 = y.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
            for i in 0..n {
                prop_assert!((x[i] - y[i]).norm() <= 1e-10 * scale);
            }
        }
    }
}
