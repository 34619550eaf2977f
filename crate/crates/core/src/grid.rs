//! Square transverse sampling grid and the complex field container.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Square `n_points x n_points` lattice with uniform `spacing` (meters).
///
/// Sample `(i, j)` sits at `x = (j - n/2) * spacing`, `y = (i - n/2) * spacing`,
/// so the origin is the sample at index `(n/2, n/2)`. Arrays are row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(n_points: usize, spacing: f64) -> Result<Self> {
        if !n_points.is_power_of_two() || n_points < 32 {
            return Err(Error::GridSize(n_points));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::GridSpacing(spacing));
        }
        Ok(Self { n_points, spacing })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.n_points * self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical side length `n_points * spacing`.
    pub fn extent(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    /// Area of one sample cell.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Frequency-axis spacing in cycles per meter.
    pub fn frequency_spacing(&self) -> f64 {
        1.0 / self.extent()
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.spacing
    }

    /// Centered coordinate of sample index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.n_points / 2) as f64) * self.spacing
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.coordinate(i)).collect()
    }

    /// Frequency (cycles/m) of FFT bin `i` in unshifted order.
    pub fn frequency(&self, i: usize) -> f64 {
        crate::fft::frequency_index(i, self.n_points) as f64 * self.frequency_spacing()
    }

    /// Frequencies of the FFT bins in unshifted (0, 1, .., -1) order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.frequency(i)).collect()
    }
}

/// Complex scalar field sampled on a [`Grid`].
///
/// Power is the discrete L2 norm `sum |u|^2 * spacing^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_samples(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Dimension("sample count does not match grid"));
        }
        Ok(Self { grid, samples })
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let n = grid.n_points();
        let mut samples = Vec::with_capacity(grid.len());
        for i in 0..n {
            let y = grid.coordinate(i);
            for j in 0..n {
                samples.push(f(grid.coordinate(j), y));
            }
        }
        Self { grid, samples }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn power(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Rescales to unit power. A zero field is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let p = self.power();
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            for v in &mut self.samples {
                *v *= s;
            }
        }
        self
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in &mut self.samples {
            *v *= factor;
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &ComplexField) -> Result<()> {
        ensure_same_grid(&self.grid, &other.grid)?;
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Discrete L2 inner product `<self, other> = sum conj(self) other dx^2`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let acc: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(acc * self.grid.cell_area())
    }
}

pub(crate) fn ensure_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_geometry() {
        let g = Grid::new(128, 2.5e-3).unwrap();
        assert!((g.extent() - 0.32).abs() < 1e-12);
        assert!((g.frequency_spacing() - 3.125).abs() < 1e-12);
        assert_eq!(g.coordinate(64), 0.0);
        assert!((g.nyquist() - 200.0).abs() < 1e-12);
    }

    #[test]
    fn small_grid_geometry() {
        let g = Grid::new(32, 1.0).unwrap();
        assert_eq!(g.extent(), 32.0);
        assert_eq!(g.nyquist(), 0.5);
        assert_eq!(g.frequency(16), -0.5);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(Grid::new(100, 1e-3), Err(Error::GridSize(100)));
        assert_eq!(Grid::new(16, 1e-3), Err(Error::GridSize(16)));
        assert!(matches!(Grid::new(64, 0.0), Err(Error::GridSpacing(_))));
        assert!(matches!(Grid::new(64, -1.0), Err(Error::GridSpacing(_))));
    }

    #[test]
    fn inner_product_is_hermitian() {
        let g = Grid::new(32, 0.1).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(x, y * y));
        let h = ComplexField::from_fn(g, |x, y| Complex64::new((x * y).cos(), x));
        let a = f.inner(&h).unwrap();
        let b = h.inner(&f).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
        let p = f.inner(&f).unwrap();
        assert!(p.im.abs() < 1e-12 && (p.re - f.power()).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = ComplexField::zeros(Grid::new(32, 0.1).unwrap());
        let b = ComplexField::zeros(Grid::new(32, 0.2).unwrap());
        assert_eq!(a.inner(&b), Err(Error::GridMismatch));
    }
}
