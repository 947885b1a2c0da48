//! Dense (D+1)×K coefficient matrices. Row 0 holds the per-class bias.

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoefMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type IntCoefs = CoefMatrix<i64>;
pub type RealCoefs = CoefMatrix<f64>;

impl<T: Copy + Default> CoefMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::default())
    }
}

impl<T: Copy> CoefMatrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == k), "ragged coefficient rows");
        Self {
            rows: n,
            cols: k,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> CoefMatrix<U> {
        CoefMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let cols = self.cols;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / cols, i % cols, v))
    }
}

impl IntCoefs {
    pub fn to_real(&self) -> RealCoefs {
        self.map(|v| v as f64)
    }

    /// Number of feature rows (excluding the bias row) with any nonzero entry.
    pub fn active_rows(&self) -> usize {
        (1..self.rows)
            .filter(|&j| self.row(j).iter().any(|&v| v != 0))
            .count()
    }
}

impl RealCoefs {
    pub fn dot(&self, other: &RealCoefs) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<(usize, usize)> for CoefMatrix<T> {
    type Output = T;

    fn index(&self, (j, k): (usize, usize)) -> &T {
        debug_assert!(j < self.rows && k < self.cols);
        &self.data[j * self.cols + k]
    }
}

impl<T> IndexMut<(usize, usize)> for CoefMatrix<T> {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut T {
        debug_assert!(j < self.rows && k < self.cols);
        &mut self.data[j * self.cols + k]
    }
}
