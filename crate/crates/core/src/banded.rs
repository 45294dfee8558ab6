//! Banded LU factorization with partial pivoting.
//!
//! Row `i` of the compact storage holds `A[i][i - lower + j]` for
//! `j in 0..lower + upper + 1`. Pivoting widens the upper band of `U` to
//! `lower + upper`, which the factorization accounts for internally.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.n || col >= self.n {
            return None;
        }
        let offset = col as isize - row as isize + self.lower as isize;
        if offset < 0 || offset >= self.width() as isize {
            None
        } else {
            Some(row * self.width() + offset as usize)
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |k| self.data[k])
    }

    /// Panics when `(row, col)` lies outside the band.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .slot(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside band"));
        self.data[k] = value;
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let w = self.width();
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for j in 0..w {
                let col = i as isize - self.lower as isize + j as isize;
                if col >= 0 && (col as usize) < self.n {
                    acc += self.data[i * w + j] * x[col as usize];
                }
            }
            *o = acc;
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    width: usize,
    upper_factor: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(matrix: &BandedMatrix) -> Result<Self> {
        let n = matrix.n;
        let m1 = matrix.lower;
        let mm = matrix.width();
        let mut a = matrix.data.clone();
        let mut al = vec![0.0; n * m1.max(1)];
        let mut pivots = vec![0; n];

        // shift the first rows left so column k sits at a[k][0]
        let mut l = m1;
        for i in 0..m1.min(n) {
            for j in (m1 - i)..mm {
                a[i * mm + j - l] = a[i * mm + j];
            }
            l -= 1;
            for j in (mm - l - 1)..mm {
                a[i * mm + j] = 0.0;
            }
        }

        let mut l = m1;
        for k in 0..n {
            let mut pivot = a[k * mm];
            let mut p = k;
            if l < n {
                l += 1;
            }
            for j in (k + 1)..l {
                if a[j * mm].abs() > pivot.abs() {
                    pivot = a[j * mm];
                    p = j;
                }
            }
            pivots[k] = p;
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular { row: k });
            }
            if p != k {
                for j in 0..mm {
                    a.swap(k * mm + j, p * mm + j);
                }
            }
            for i in (k + 1)..l {
                let factor = a[i * mm] / a[k * mm];
                al[k * m1 + i - k - 1] = factor;
                for j in 1..mm {
                    a[i * mm + j - 1] = a[i * mm + j] - factor * a[k * mm + j];
                }
                a[i * mm + mm - 1] = 0.0;
            }
        }
        Ok(Self {
            n,
            lower: m1,
            width: mm,
            upper_factor: a,
            multipliers: al,
            pivots,
        })
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, m1, mm) = (self.n, self.lower, self.width);
        let a = &self.upper_factor;
        let mut l = m1;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            if l < n {
                l += 1;
            }
            for i in (k + 1)..l {
                b[i] -= self.multipliers[k * m1 + i - k - 1] * b[k];
            }
        }
        let mut l = 1;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in 1..l {
                acc -= a[i * mm + k] * b[k + i];
            }
            b[i] = acc / a[i * mm];
            if l < mm {
                l += 1;
            }
        }
    }
}
