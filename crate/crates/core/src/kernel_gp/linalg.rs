//! Small dense linear-algebra kernels: Cholesky with jitter retry, triangular
//! solves, and a row-bordered incremental Cholesky factor.

use crate::error::{Error, Result};

/// Jitter added to the diagonal on the first pivot failure.
pub const INITIAL_JITTER: f64 = 1e-9;
/// Number of jittered retries; jitter grows 10× per retry.
pub const MAX_JITTER_RETRIES: usize = 3;

/// In-place dense Cholesky of a row-major `n × n` SPD matrix. On success the
/// lower triangle holds `L` and the strict upper triangle is zeroed.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let row_j = j * n;
        let mut d = a[row_j + j];
        for k in 0..j {
            d -= a[row_j + k] * a[row_j + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numerical(format!(
                "non-positive pivot {d:e} at row {j} of {n}"
            )));
        }
        let d = d.sqrt();
        a[row_j + j] = d;
        for i in (j + 1)..n {
            let row_i = i * n;
            let mut s = a[row_i + j];
            for k in 0..j {
                s -= a[row_i + k] * a[row_j + k];
            }
            a[row_i + j] = s / d;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Cholesky with the jitter policy: on failure retry with `1e-9`, `1e-8`,
/// `1e-7` added to the diagonal. Returns the factor and the jitter used.
pub fn cholesky_with_jitter(matrix: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let mut jitter = 0.0;
    let mut last_err = None;
    for attempt in 0..=MAX_JITTER_RETRIES {
        if attempt > 0 {
            jitter = INITIAL_JITTER * 10f64.powi(attempt as i32 - 1);
        }
        let mut a = matrix.to_vec();
        for i in 0..n {
            a[i * n + i] += jitter;
        }
        match cholesky_in_place(&mut a, n) {
            Ok(()) => return Ok((a, jitter)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::Numerical(format!(
        "factorization failed after {MAX_JITTER_RETRIES} jitter retries: {}",
        last_err.expect("at least one attempt")
    )))
}

/// Solves `L x = b` in place for a dense row-major lower-triangular `L`.
pub fn solve_lower_dense(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place for a dense row-major lower-triangular `L`.
pub fn solve_lower_transpose_dense(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Lower-triangular factor grown one row at a time, stored packed by rows.
///
/// Row `i` occupies `data[i(i+1)/2 .. i(i+1)/2 + i + 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IncrementalCholesky {
    data: Vec<f64>,
    n: usize,
}

#[inline]
fn row_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl IncrementalCholesky {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i && i < self.n);
        self.data[row_offset(i) + j]
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    /// Solves `L x = b` in place.
    ///
    /// Column-oriented, skipping exact zeros: when the matrix being factored is
    /// block-structured (e.g. a diagonal kernel factor over an index coordinate)
    /// the solution stays exactly sparse and the cost scales with its support.
    pub fn solve_lower(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for j in 0..self.n {
            if b[j] == 0.0 {
                continue;
            }
            let v = b[j] / self.get(j, j);
            b[j] = v;
            for (i, bi) in b.iter_mut().enumerate().skip(j + 1) {
                *bi -= self.data[row_offset(i) + j] * v;
            }
        }
    }

    /// Appends the border row for a new matrix column `cross` (entries against
    /// the existing rows) and diagonal entry `diag`.
    ///
    /// Returns the squared pivot `L_tt²` and the jitter that was needed.
    pub fn push(&mut self, cross: &[f64], diag: f64) -> Result<(f64, f64)> {
        if cross.len() != self.n {
            return Err(Error::input(format!(
                "border row has {} entries, factor has {}",
                cross.len(),
                self.n
            )));
        }
        let mut row = cross.to_vec();
        self.solve_lower(&mut row);
        let norm2: f64 = row.iter().map(|x| x * x).sum();
        let mut jitter = 0.0;
        let mut pivot2 = diag - norm2;
        let mut attempt = 0;
        while !(pivot2 > 0.0 && pivot2.is_finite()) {
            if attempt == MAX_JITTER_RETRIES {
                return Err(Error::Numerical(format!(
                    "non-positive pivot {:e} appending row {} after {attempt} jitter retries",
                    diag - norm2,
                    self.n
                )));
            }
            jitter = INITIAL_JITTER * 10f64.powi(attempt as i32);
            pivot2 = diag + jitter - norm2;
            attempt += 1;
        }
        row.push(pivot2.sqrt());
        self.data.extend_from_slice(&row);
        self.n += 1;
        Ok((pivot2, jitter))
    }

    /// Dense row-major `L Lᵀ`, for consistency checks.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        out
    }

    /// `Σ log L_ii`, i.e. half the log-determinant of the factored matrix.
    pub fn half_log_det(&self) -> f64 {
        (0..self.n).map(|i| self.diag(i).ln()).sum()
    }
}
