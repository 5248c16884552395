//! Small dense matrices and the power iteration used for stationary laws.

use crate::error::{CsdpError, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(CsdpError::DimensionMismatch {
                    what: "matrix row length".into(),
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(i)) {
                *s = *s + v;
            }
        }
        sums
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix-matrix dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    /// `self^power` by repeated squaring.
    pub fn pow(&self, mut power: usize) -> Self {
        assert_eq!(self.rows, self.cols, "power of a non-square matrix");
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while power > 0 {
            if power & 1 == 1 {
                result = result.matmul(&base);
            }
            power >>= 1;
            if power > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn l1_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum()
}

/// Half the l1 distance; equals the total variation distance of two
/// probability vectors on a finite space.
pub fn total_variation<T: Scalar>(a: &[T], b: &[T]) -> T {
    l1_distance(a, b) * lit(0.5)
}

/// Whether the directed graph `i -> j` for `adj(i, j)` is strongly connected.
pub(crate) fn strongly_connected(n: usize, adj: impl Fn(usize, usize) -> bool) -> bool {
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let edge = if forward { adj(u, v) } else { adj(v, u) };
                if edge && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n == 0 || (reach(true) && reach(false))
}

/// Outcome of [`power_iterate`].
#[derive(Debug, Clone)]
pub(crate) struct PowerIteration<T> {
    pub vector: Vec<T>,
}

/// Iterates `v <- step(v)` until `|step(v) - v|_1 <= tol`.
///
/// A residual that stops shrinking over a window is checked for a short
/// cycle `v_{n+d} = v_n`; a detected cycle is reported as [`CsdpError::Periodic`].
pub(crate) fn power_iterate<T: Scalar>(
    start: Vec<T>,
    step: impl Fn(&[T]) -> Vec<T>,
    tol: T,
    max_iter: usize,
) -> Result<PowerIteration<T>> {
    let n = start.len();
    let window = (4 * n).max(64);
    let max_period = n.max(2);
    let mut history: std::collections::VecDeque<Vec<T>> = std::collections::VecDeque::new();
    let mut v = start;
    let mut best = T::infinity();
    let mut since_best = 0usize;
    for _ in 0..max_iter {
        let next = step(&v);
        let residual = l1_distance(&next, &v);
        if residual <= tol {
            return Ok(PowerIteration { vector: next });
        }
        if residual < best * lit(0.999) {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
        }
        history.push_back(v);
        if history.len() > max_period + 1 {
            history.pop_front();
        }
        v = next;
        if since_best >= window {
            for d in 2..=max_period {
                if history.len() >= d {
                    let past = &history[history.len() - d];
                    if l1_distance(past, &v) <= tol {
                        return Err(CsdpError::Periodic { period: d });
                    }
                }
            }
            // stagnated without a short cycle: keep going until max_iter
            since_best = 0;
            best = residual;
        }
    }
    let residual = l1_distance(&step(&v), &v);
    Err(CsdpError::NotConverged {
        iterations: max_iter,
        residual: to_f64(residual),
    })
}
