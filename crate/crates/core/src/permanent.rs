//! Matrix permanent by Ryser's inclusion–exclusion formula, visiting column
//! subsets in Gray-code order so each step updates the row sums by a single
//! column.

use alloc::vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

pub const MAX_PERMANENT_SIZE: usize = 12;

pub fn permanent(m: &CMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 || n > MAX_PERMANENT_SIZE {
        return Err(Error::MatrixSize(n));
    }
    Ok(ryser(n, |i, j| m[(i, j)]))
}

/// Ryser evaluation for an `n x n` matrix given by `entry(row, col)`.
pub(crate) fn ryser(n: usize, entry: impl Fn(usize, usize) -> Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut row_sums = vec![zero; n];
    let mut total = zero;
    let mut in_subset = vec![false; n];
    let mut subset_size = 0usize;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        if in_subset[j] {
            in_subset[j] = false;
            subset_size -= 1;
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= entry(i, j);
            }
        } else {
            in_subset[j] = true;
            subset_size += 1;
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += entry(i, j);
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        if subset_size % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}
