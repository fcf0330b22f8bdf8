//! Dense complex linear algebra: row-major matrices and partial-pivot LU.
//!
//! Nyström systems here are small (at most a few thousand nodes) and have to
//! be bit-reproducible across runs, so a plain scalar LU is used instead of a
//! BLAS backend. Matvecs parallelize over rows.

use num_complex::Complex64;

use crate::par;

/// Row-major dense complex matrix.
#[derive(Debug, Clone)]
pub struct CMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![Complex64::new(0.0, 0.0); n_rows * n_cols],
        }
    }

    pub fn from_rows(n_rows: usize, n_cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n_rows * n_cols);
        Self { n_rows, n_cols, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// y = A x.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_cols);
        par::map_range(self.n_rows, |i| {
            let row = self.row(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            acc
        })
    }

    /// y = Aᵀ x (no conjugation).
    pub fn matvec_t(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n_rows);
        par::map_range(self.n_cols, |j| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..self.n_rows {
                acc += self.data[i * self.n_cols + j] * x[i];
            }
            acc
        })
    }
}

/// LU factorization with partial pivoting: P A = L U.
pub struct LuFactors {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

/// Factor a square matrix. Returns `None` if a pivot is exactly zero.
pub fn lu_factor(a: &CMatrix) -> Option<LuFactors> {
    assert_eq!(a.n_rows(), a.n_cols());
    let n = a.n_rows();
    let mut lu = a.data().to_vec();
    let mut piv: Vec<usize> = (0..n).collect();

    for k in 0..n {
        // Pivot: largest modulus in column k at or below the diagonal.
        let mut p = k;
        let mut pmax = lu[k * n + k].norm_sqr();
        for i in (k + 1)..n {
            let m = lu[i * n + k].norm_sqr();
            if m > pmax {
                pmax = m;
                p = i;
            }
        }
        if pmax == 0.0 {
            return None;
        }
        if p != k {
            piv.swap(k, p);
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let m = lu[i * n + k] / pivot;
            lu[i * n + k] = m;
            for j in (k + 1)..n {
                let u = lu[k * n + j];
                lu[i * n + j] -= m * u;
            }
        }
    }
    Some(LuFactors { n, lu, piv })
}

impl LuFactors {
    /// Solve A x = b.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Apply permutation, then forward/backward substitution.
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    /// Solve Aᵀ x = b using the same factors (Aᵀ = Uᵀ Lᵀ P).
    pub fn solve_t(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        // Uᵀ z = b  (Uᵀ is lower triangular with diagonal of U).
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[j * n + i] * y[j];
            }
            y[i] = acc / self.lu[i * n + i];
        }
        // Lᵀ w = z  (Lᵀ is unit upper triangular).
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.lu[j * n + i] * y[j];
            }
            y[i] = acc;
        }
        // x = Pᵀ w, i.e. x[piv[i]] = w[i].
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.piv.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Relative residual ‖A x − b‖∞ / max(‖b‖∞, tiny).
pub fn residual_inf(a: &CMatrix, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = a.matvec(x);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..b.len() {
        num = num.max((ax[i] - b[i]).norm());
        den = den.max(b[i].norm());
    }
    num / den.max(1e-300)
}
