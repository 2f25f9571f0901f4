//! Dense tensors in full format.
//!
//! Values are stored with the first index varying fastest, so the
//! matricization that groups a leading block of modes into rows and the
//! remaining modes into columns is a plain reshape of the value buffer.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalars a [`DenseTensor`] can hold.
pub trait Scalar: Copy + Default + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    fn abs2(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn abs2(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<T> {
    dims: Vec<usize>,
    values: Vec<T>,
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::dims("tensor needs at least one mode"));
    }
    if dims.contains(&0) {
        return Err(Error::dims(format!("zero-sized mode in {dims:?}")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::dims(format!("element count of {dims:?} overflows")))
}

impl<T: Scalar> DenseTensor<T> {
    pub fn new(dims: Vec<usize>, values: Vec<T>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if len != values.len() {
            return Err(Error::dims(format!(
                "dims {dims:?} need {len} values, got {}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = checked_len(&dims)?;
        Ok(Self { dims, values: vec![T::default(); len] })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, first index fastest.
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = checked_len(&dims)?;
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            values.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut stride = 1;
        let mut pos = 0;
        for (&i, &n) in idx.iter().zip(&self.dims) {
            debug_assert!(i < n);
            pos += i * stride;
            stride *= n;
        }
        pos
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.values[self.linear_index(idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs2()).sum::<f64>().sqrt()
    }

    /// Contiguous slab for index `k` of the last mode.
    pub fn last_mode_slice(&self, k: usize) -> &[T] {
        let n = self.values.len() / self.dims[self.dims.len() - 1];
        &self.values[k * n..(k + 1) * n]
    }

    /// Sub-tensor keeping indices `range` of the last mode.
    pub fn slice_last_mode(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let last = *self.dims.last().expect("non-empty dims");
        if range.start >= range.end || range.end > last {
            return Err(Error::arg(format!(
                "range {range:?} invalid for last mode of size {last}"
            )));
        }
        let n = self.values.len() / last;
        let mut dims = self.dims.clone();
        *dims.last_mut().expect("non-empty dims") = range.len();
        Ok(Self { dims, values: self.values[range.start * n..range.end * n].to_vec() })
    }

    /// Reinterprets the buffer under new dims with the same element count.
    pub fn reshape(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.values)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseTensor<U> {
        DenseTensor { dims: self.dims.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Unfolding with the modes of `split.row_modes()` as rows.
    pub fn matricize(&self, split: &ModeSplit) -> Result<Mat<T>> {
        split.check_order(self.order())?;
        let rows: usize = split.row_modes.iter().map(|&m| self.dims[m]).product();
        let cols: usize = split.col_modes.iter().map(|&m| self.dims[m]).product();
        if split.is_leading_block() {
            return Ok(Mat::from_fn(rows, cols, |i, j| self.values[i + rows * j]));
        }
        let mut out = Mat::from_fn(rows, cols, |_, _| T::default());
        let mut idx = vec![0usize; self.order()];
        for &v in &self.values {
            let (r, c) = split.row_col(&idx, &self.dims);
            out[(r, c)] = v;
            increment(&mut idx, &self.dims);
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn from_matricized(mat: &Mat<T>, dims: Vec<usize>, split: &ModeSplit) -> Result<Self> {
        split.check_order(dims.len())?;
        let rows: usize = split.row_modes.iter().map(|&m| dims[m]).product();
        let cols: usize = split.col_modes.iter().map(|&m| dims[m]).product();
        if mat.nrows() != rows || mat.ncols() != cols {
            return Err(Error::dims(format!(
                "{}x{} matrix cannot fold into {dims:?} with {split:?}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Self::from_fn(dims.clone(), |idx| {
            let (r, c) = split.row_col(idx, &dims);
            mat[(r, c)]
        })
    }

    pub fn vectorize(&self) -> Vec<T> {
        self.values.clone()
    }
}

pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &n) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

/// Partition of tensor modes into row and column groups, each in increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSplit {
    row_modes: Vec<usize>,
    col_modes: Vec<usize>,
}

impl ModeSplit {
    /// Modes are zero-based.
    pub fn new(row_modes: Vec<usize>, col_modes: Vec<usize>) -> Result<Self> {
        let sorted = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&row_modes) || !sorted(&col_modes) {
            return Err(Error::InvalidSplit("mode subsets must be strictly increasing".into()));
        }
        let order = row_modes.len() + col_modes.len();
        let mut seen = vec![false; order];
        for &m in row_modes.iter().chain(&col_modes) {
            if m >= order || seen[m] {
                return Err(Error::InvalidSplit(format!(
                    "{row_modes:?} / {col_modes:?} is not a partition of 0..{order}"
                )));
            }
            seen[m] = true;
        }
        Ok(Self { row_modes, col_modes })
    }

    /// Modes `0..l` as rows and `l..order` as columns.
    pub fn leading(l: usize, order: usize) -> Result<Self> {
        if l > order {
            return Err(Error::InvalidSplit(format!("{l} leading modes of {order}")));
        }
        Self::new((0..l).collect(), (l..order).collect())
    }

    /// All modes as rows; the special case that yields the vectorization.
    pub fn vectorization(order: usize) -> Self {
        Self { row_modes: (0..order).collect(), col_modes: Vec::new() }
    }

    pub fn row_modes(&self) -> &[usize] {
        &self.row_modes
    }

    pub fn col_modes(&self) -> &[usize] {
        &self.col_modes
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if self.row_modes.len() + self.col_modes.len() != order {
            return Err(Error::InvalidSplit(format!(
                "split covers {} modes, tensor has {order}",
                self.row_modes.len() + self.col_modes.len()
            )));
        }
        Ok(())
    }

    fn is_leading_block(&self) -> bool {
        self.row_modes.iter().enumerate().all(|(k, &m)| k == m)
    }

    fn row_col(&self, idx: &[usize], dims: &[usize]) -> (usize, usize) {
        let fold = |modes: &[usize]| {
            let mut stride = 1;
            let mut pos = 0;
            for &m in modes {
                pos += idx[m] * stride;
                stride *= dims[m];
            }
            pos
        };
        (fold(&self.row_modes), fold(&self.col_modes))
    }
}
