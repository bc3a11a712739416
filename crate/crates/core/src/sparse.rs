//! Compressed sparse row storage assembled from triplet lists.

use std::io::Write;
use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;
use num_traits::Zero;

/// Scalar types a [`CsrMatrix`] can hold.
pub trait Scalar: Copy + Zero + Add<Output = Self> + AddAssign + Mul<Output = Self> + Send + Sync {
    fn magnitude(self) -> f64;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Unordered `(row, col, value)` contributions. Duplicates are summed on
/// [`TripletList::build`].
#[derive(Debug, Clone)]
pub struct TripletList<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletList<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn append(&mut self, other: &mut TripletList<T>) {
        self.entries.append(&mut other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts by `(row, col)` and sums duplicates. The sort is stable, so the
    /// summation order of duplicates follows insertion order and the result
    /// is bit-reproducible.
    pub fn build(mut self) -> CsrMatrix<T> {
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletList::new(nrows, ncols).build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// Stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.magnitude()))
    }

    pub fn transpose(&self) -> Self {
        let mut t = TripletList::with_capacity(self.ncols, self.nrows, self.nnz());
        for (i, j, v) in self.iter() {
            t.push(j, i, v);
        }
        t.build()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_complex(&self) -> CsrMatrix<Complex64> {
        self.map(Scalar::to_complex)
    }

    /// `Σ_k c_k A_k` over matrices of identical shape.
    pub fn linear_combination<'a>(terms: impl IntoIterator<Item = (T, &'a CsrMatrix<T>)>) -> Self
    where
        T: 'a,
    {
        let mut out: Option<TripletList<T>> = None;
        for (c, a) in terms {
            let list = out.get_or_insert_with(|| TripletList::new(a.nrows, a.ncols));
            assert_eq!((list.nrows, list.ncols), (a.nrows, a.ncols), "shape mismatch");
            for (i, j, v) in a.iter() {
                list.push(i, j, c * v);
            }
        }
        out.expect("empty linear combination").build()
    }

    pub fn mul_vec<V>(&self, x: &[V]) -> Vec<V>
    where
        V: Copy + Zero + AddAssign + Mul<Output = V> + From<T>,
    {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let mut acc = V::zero();
                for (j, a) in self.row(i) {
                    acc += V::from(a) * x[j];
                }
                acc
            })
            .collect()
    }
}

impl CsrMatrix<f64> {
    pub fn mul_complex_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).fold(Complex64::zero(), |acc, (j, a)| acc + x[j] * a))
            .collect()
    }

    /// `yᴴ A x` for real `A`.
    pub fn sesquilinear(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let ax = self.mul_complex_vec(x);
        ax.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
    }
}

impl CsrMatrix<Complex64> {
    /// Writes the coordinate dump: header `%%ComplexCOO rows cols nnz`, then
    /// one `row col re im` line per stored entry (0-based indices).
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%ComplexCOO {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(w, "{} {} {:e} {:e}", i, j, v.re, v.im)?;
        }
        Ok(())
    }

    /// `yᴴ A x`.
    pub fn sesquilinear(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let ax = self.mul_vec(x);
        ax.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = TripletList::new(2, 3);
        t.push(1, 2, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 2, 0.5);
        let a = t.build();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 2.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn transpose_and_combination() {
        let mut t = TripletList::new(2, 2);
        t.push(0, 1, 3.0);
        t.push(1, 1, 1.0);
        let a = t.build();
        let at = a.transpose();
        assert_eq!(at.get(1, 0), 3.0);
        let c = CsrMatrix::linear_combination([(1.0, &a), (-1.0, &at)]);
        assert_eq!(c.get(0, 1), 3.0);
        assert_eq!(c.get(1, 0), -3.0);
        assert_eq!(c.get(1, 1), 0.0);
    }

    #[test]
    fn coo_dump_header() {
        let mut t = TripletList::new(2, 2);
        t.push(0, 0, Complex64::new(1.0, -2.0));
        let mut buf = Vec::new();
        t.build().write_coo(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("%%ComplexCOO 2 2 1"));
        assert_eq!(lines.next(), Some("0 0 1e0 -2e0"));
    }
}
