//! Hilbert curve codec between the cells of a 2^m x ... x 2^m grid on
//! [0,1)^d and positions along the order-m curve, plus the curve-order sort
//! used by multidimensional resampling.
//!
//! The orientation is the canonical reflected-Gray-code construction
//! (Skilling's transform). For d = 2, m = 1 the curve starts at cell (0,0)
//! with index 0 and visits (0,1), (1,1), (1,0) in order; tests pin this as
//! the reference orientation.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("dimension must be in 1..=10, got {0}")]
    BadDimension(usize),
    #[error("order must satisfy 1 <= m and m*d <= 62; got d={dim}, m={order}")]
    BadOrder { dim: usize, order: u32 },
    #[error("coordinate {value} lies outside [0,1)")]
    CoordinateOutOfRange { value: f64 },
    #[error("point has {got} coordinates, map dimension is {dim}")]
    DimensionMismatch { dim: usize, got: usize },
    #[error("curve index {index} out of range [0, {cells})")]
    IndexOutOfRange { index: u64, cells: u64 },
    #[error("cell coordinate {value} out of range [0, {max})")]
    CellOutOfRange { value: u64, max: u64 },
}

/// Immutable order-m, dimension-d Hilbert codec. All operations are
/// read-only and safe to share across threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertMap {
    dim: usize,
    order: u32,
}

/// A grid cell, one integer coordinate per dimension, each below 2^m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellCoord {
    pub coords: Vec<u64>,
}

impl HilbertMap {
    pub fn new(dim: usize, order: u32) -> Result<Self, HilbertError> {
        if dim == 0 || dim > 10 {
            return Err(HilbertError::BadDimension(dim));
        }
        if order == 0 || order as usize * dim > 62 {
            return Err(HilbertError::BadOrder { dim, order });
        }
        Ok(HilbertMap { dim, order })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Cells per axis, 2^m.
    pub fn cells_per_axis(&self) -> u64 {
        1 << self.order
    }

    /// Total cell count, 2^(m*d).
    pub fn total_cells(&self) -> u64 {
        1 << (self.order as usize * self.dim)
    }

    /// Quantizes a point of [0,1)^d to its grid cell: floor(x * 2^m),
    /// clamped at 2^m - 1 to keep values just below 1.0 in range.
    pub fn cell_of(&self, point: &[f64]) -> Result<CellCoord, HilbertError> {
        if point.len() != self.dim {
            return Err(HilbertError::DimensionMismatch {
                dim: self.dim,
                got: point.len(),
            });
        }
        let side = self.cells_per_axis();
        let mut coords = Vec::with_capacity(self.dim);
        for &x in point {
            if !(0.0..1.0).contains(&x) {
                return Err(HilbertError::CoordinateOutOfRange { value: x });
            }
            coords.push(((x * side as f64) as u64).min(side - 1));
        }
        Ok(CellCoord { coords })
    }

    /// Curve position of the cell containing `point`.
    pub fn index_of(&self, point: &[f64]) -> Result<u64, HilbertError> {
        let cell = self.cell_of(point)?;
        self.index_of_cell(&cell)
    }

    /// Curve position of a grid cell.
    pub fn index_of_cell(&self, cell: &CellCoord) -> Result<u64, HilbertError> {
        if cell.coords.len() != self.dim {
            return Err(HilbertError::DimensionMismatch {
                dim: self.dim,
                got: cell.coords.len(),
            });
        }
        let side = self.cells_per_axis();
        for &c in &cell.coords {
            if c >= side {
                return Err(HilbertError::CellOutOfRange { value: c, max: side });
            }
        }
        let mut axes = cell.coords.clone();
        axes_to_transpose(&mut axes, self.order);
        Ok(self.interleave(&axes))
    }

    /// The unique cell at a curve position.
    pub fn point_of(&self, index: u64) -> Result<CellCoord, HilbertError> {
        let cells = self.total_cells();
        if index >= cells {
            return Err(HilbertError::IndexOutOfRange { index, cells });
        }
        let mut axes = self.deinterleave(index);
        transpose_to_axes(&mut axes, self.order);
        Ok(CellCoord { coords: axes })
    }

    /// Stable permutation ordering `points` by ascending curve index; ties
    /// keep their input order.
    pub fn sort_by_curve<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<Vec<usize>, HilbertError> {
        let mut keyed = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            keyed.push((self.index_of(p.as_ref())?, i));
        }
        keyed.sort_by_key(|&(key, pos)| (key, pos));
        Ok(keyed.into_iter().map(|(_, pos)| pos).collect())
    }

    // Bit-interleave the transposed form into a single index, most
    // significant level first, axis 0 contributing the top bit of each
    // level.
    fn interleave(&self, axes: &[u64]) -> u64 {
        let mut index = 0u64;
        for level in (0..self.order).rev() {
            for &a in axes {
                index = (index << 1) | ((a >> level) & 1);
            }
        }
        index
    }

    fn deinterleave(&self, index: u64) -> Vec<u64> {
        let mut axes = vec![0u64; self.dim];
        let mut bit = self.order as usize * self.dim;
        for level in (0..self.order).rev() {
            for a in axes.iter_mut() {
                bit -= 1;
                *a |= ((index >> bit) & 1) << level;
            }
        }
        axes
    }
}

// Skilling's in-place transform between axis coordinates and the transposed
// Hilbert index ("Programming the Hilbert curve" construction).
fn axes_to_transpose(x: &mut [u64], order: u32) {
    let n = x.len();
    let m = 1u64 << (order - 1);
    // Inverse undo
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..n {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    // Gray encode
    for i in 1..n {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    let mut q = m;
    while q > 1 {
        if x[n - 1] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in x.iter_mut() {
        *v ^= t;
    }
}

fn transpose_to_axes(x: &mut [u64], order: u32) {
    let n = x.len();
    let top = 2u64 << (order - 1);
    // Gray decode by H ^ (H/2)
    let mut t = x[n - 1] >> 1;
    for i in (1..n).rev() {
        x[i] ^= x[i - 1];
    }
    x[0] ^= t;
    // Undo excess work
    let mut q = 2u64;
    while q != top {
        let p = q - 1;
        for i in (0..n).rev() {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q <<= 1;
    }
}
