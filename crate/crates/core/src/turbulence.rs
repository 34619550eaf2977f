//! Von Kármán turbulence statistics and synthesis of longitudinally
//! correlated thin phase screens.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal, StandardUniform};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::grid::Grid;
use crate::rng::keyed_stream;

/// Path and medium parameters for one turbulent link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    /// Refractive-index structure constant, m^(-2/3).
    pub cn2: f64,
    pub outer_scale: f64,
    pub inner_scale: f64,
    pub wavelength: f64,
    pub path_length: f64,
    pub n_slabs: usize,
    /// Lag-one correlation between successive screens.
    pub rho_z: f64,
}

impl TurbulenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cn2 >= 0.0 && self.cn2.is_finite()) {
            return Err(Error::Turbulence("cn2 must be non-negative"));
        }
        if !(self.inner_scale > 0.0 && self.outer_scale > self.inner_scale) {
            return Err(Error::Turbulence("scales must satisfy outer > inner > 0"));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Turbulence("wavelength must be positive"));
        }
        if !(self.path_length > 0.0 && self.path_length.is_finite()) {
            return Err(Error::Turbulence("path length must be positive"));
        }
        if self.n_slabs == 0 {
            return Err(Error::Turbulence("at least one slab is required"));
        }
        if !(0.0..1.0).contains(&self.rho_z) {
            return Err(Error::Turbulence("rho_z must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn kappa_outer(&self) -> f64 {
        2.0 * PI / self.outer_scale
    }

    pub fn kappa_inner(&self) -> f64 {
        5.92 / self.inner_scale
    }

    pub fn slab_thickness(&self) -> f64 {
        self.path_length / self.n_slabs as f64
    }

    /// Same parameters with a different structure constant.
    pub fn with_cn2(mut self, cn2: f64) -> Self {
        self.cn2 = cn2;
        self
    }
}

/// Modified von Kármán refractive-index spectrum `Phi_n(kappa)` (m^3).
pub fn vonkarman_psd(kappa: f64, params: &TurbulenceParams) -> f64 {
    let k0 = params.kappa_outer();
    let km = params.kappa_inner();
    let k2 = kappa * kappa;
    0.033 * params.cn2 * (k2 + k0 * k0).powf(-11.0 / 6.0) * (-k2 / (km * km)).exp()
}

/// Thin-screen phase spectrum of one slab, `2 pi k0^2 dz Phi_n(kappa)`.
pub fn screen_psd(kappa: f64, params: &TurbulenceParams) -> f64 {
    let k = params.wavenumber();
    2.0 * PI * k * k * params.slab_thickness() * vonkarman_psd(kappa, params)
}

/// Plane-wave Fried parameter over the full path, `(0.423 k^2 Cn2 L)^(-3/5)`.
pub fn fried_parameter(params: &TurbulenceParams) -> f64 {
    let k = params.wavenumber();
    (0.423 * k * k * params.cn2 * params.path_length).powf(-3.0 / 5.0)
}

/// Rytov variance `1.23 Cn2 k^(7/6) L^(11/6)`.
pub fn rytov_variance(params: &TurbulenceParams) -> f64 {
    1.23 * params.cn2 * params.wavenumber().powf(7.0 / 6.0) * params.path_length.powf(11.0 / 6.0)
}

/// Phase (radians) accumulated across one slab.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    grid: Grid,
    phase: Vec<f64>,
    slab_index: usize,
}

impl PhaseScreen {
    pub fn new(grid: Grid, phase: Vec<f64>, slab_index: usize) -> Result<Self> {
        if phase.len() != grid.len() {
            return Err(Error::Dimension("phase array does not match grid"));
        }
        Ok(Self {
            grid,
            phase,
            slab_index,
        })
    }

    pub fn zeros(grid: Grid, slab_index: usize) -> Self {
        Self {
            grid,
            phase: vec![0.0; grid.len()],
            slab_index,
        }
    }

    pub fn constant(grid: Grid, slab_index: usize, value: f64) -> Self {
        Self {
            grid,
            phase: vec![value; grid.len()],
            slab_index,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn slab_index(&self) -> usize {
        self.slab_index
    }

    pub fn into_phase(self) -> Vec<f64> {
        self.phase
    }
}

/// Optional knobs for [`synthesize_screen_sequence_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SynthesisOptions {
    /// Represents the spectrum below `1.5` grid frequency spacings by
    /// directly summed components: the eight lattice cells around DC plus
    /// three levels of 3x3 subharmonics, each at a frequency drawn uniformly
    /// within its cell.
    pub subharmonics: bool,
}

const SUBHARMONIC_LEVELS: i32 = 3;
/// Stream reserved for the per-sequence subharmonic frequency draws.
const SUBHARMONIC_STREAM: u64 = u64::MAX;

/// Spectral synthesis of `n_slabs` screens with AR(1) coupling between
/// successive slabs.
pub fn synthesize_screen_sequence(
    grid: &Grid,
    params: &TurbulenceParams,
    seed: u64,
) -> Result<Vec<PhaseScreen>> {
    synthesize_screen_sequence_with(grid, params, seed, SynthesisOptions::default())
}

pub fn synthesize_screen_sequence_with(
    grid: &Grid,
    params: &TurbulenceParams,
    seed: u64,
    options: SynthesisOptions,
) -> Result<Vec<PhaseScreen>> {
    params.validate()?;
    let k_slabs = params.n_slabs;
    if params.cn2 == 0.0 {
        return Ok((0..k_slabs).map(|k| PhaseScreen::zeros(*grid, k)).collect());
    }

    let plan = Fft2d::new(grid.n_points());
    let mut amplitudes = spectral_amplitudes(grid, params, &plan);
    let sub = options.subharmonics.then(|| {
        let n = grid.n_points();
        for i in [0, 1, n - 1] {
            for j in [0, 1, n - 1] {
                amplitudes[plan.bitrev(i) * n + plan.bitrev(j)] = 0.0;
            }
        }
        SubharmonicBasis::new(grid, params, seed)
    });
    let n_sub = sub.as_ref().map_or(0, |s| s.len());

    let rho = params.rho_z;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut state = vec![Complex64::new(0.0, 0.0); grid.len() + n_sub];
    let mut screens = Vec::with_capacity(k_slabs);

    for k in 0..k_slabs {
        let mut rng = keyed_stream(seed, k as u64);
        for g in state.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let xi = Complex64::new(re, im);
            *g = if k == 0 { xi } else { *g * rho + xi * innovation };
        }
        let (mut phase, mut imag): (Vec<f64>, Vec<f64>) =
            state.iter().zip(&amplitudes).map(|(g, a)| (g.re * a, g.im * a)).unzip();
        plan.inverse_from_bitrev(&mut phase, &mut imag);
        if let Some(sub) = &sub {
            sub.accumulate(&state[grid.len()..], &mut phase);
        }
        screens.push(PhaseScreen::new(*grid, phase, k)?);
    }
    Ok(screens)
}

/// `sqrt(Phi_phi(kappa) dkappa^2)` on the FFT frequency lattice, DC zeroed.
/// Amplitudes `sqrt(PSD) dkappa` in the bit-reversed spectral layout of
/// [`Fft2d::inverse_from_bitrev`]; the spectrum is isotropic, so the layout's
/// transposition is immaterial.
fn spectral_amplitudes(grid: &Grid, params: &TurbulenceParams, plan: &Fft2d) -> Vec<f64> {
    let n = grid.n_points();
    let freqs = grid.frequencies();
    let dkappa = 2.0 * PI * grid.frequency_spacing();
    let mut amps = Vec::with_capacity(grid.len());
    for i in 0..n {
        let fy = freqs[plan.bitrev(i)];
        for j in 0..n {
            let fx = freqs[plan.bitrev(j)];
            let kappa = 2.0 * PI * (fx * fx + fy * fy).sqrt();
            amps.push((screen_psd(kappa, params) * dkappa * dkappa).sqrt());
        }
    }
    amps[0] = 0.0;
    amps
}

struct SubharmonicBasis {
    // (fx, fy, amplitude) per subharmonic component
    components: Vec<(f64, f64, f64)>,
    coords: Vec<f64>,
}

impl SubharmonicBasis {
    fn new(grid: &Grid, params: &TurbulenceParams, seed: u64) -> Self {
        let mut rng = keyed_stream(seed, SUBHARMONIC_STREAM);
        let mut jitter = || -> f64 {
            let u: f64 = StandardUniform.sample(&mut rng);
            u - 0.5
        };
        let mut components = Vec::new();
        for level in 0..=SUBHARMONIC_LEVELS {
            let df = grid.frequency_spacing() / 3f64.powi(level);
            let dkappa = 2.0 * PI * df;
            for a in -1i32..=1 {
                for b in -1i32..=1 {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let fx = (a as f64 + jitter()) * df;
                    let fy = (b as f64 + jitter()) * df;
                    let kappa = 2.0 * PI * (fx * fx + fy * fy).sqrt();
                    let amp = (screen_psd(kappa, params) * dkappa * dkappa).sqrt();
                    components.push((fx, fy, amp));
                }
            }
        }
        Self {
            components,
            coords: grid.coordinates(),
        }
    }

    fn len(&self) -> usize {
        self.components.len()
    }

    fn accumulate(&self, noise: &[Complex64], phase: &mut [f64]) {
        let n = self.coords.len();
        let mut low = vec![0.0; phase.len()];
        for (&(fx, fy, amp), xi) in self.components.iter().zip(noise) {
            let c = xi * amp;
            let ex: Vec<Complex64> = self
                .coords
                .iter()
                .map(|x| Complex64::from_polar(1.0, 2.0 * PI * fx * x))
                .collect();
            for (i, y) in self.coords.iter().enumerate() {
                let ey = c * Complex64::from_polar(1.0, 2.0 * PI * fy * y);
                for (j, e) in ex.iter().enumerate() {
                    low[i * n + j] += (ey * e).re;
                }
            }
        }
        let mean = low.iter().sum::<f64>() / low.len() as f64;
        for (p, l) in phase.iter_mut().zip(&low) {
            *p += l - mean;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(cn2: f64) -> TurbulenceParams {
        TurbulenceParams {
            cn2,
            outer_scale: 30.0,
            inner_scale: 5e-3,
            wavelength: 1550e-9,
            path_length: 10e3,
            n_slabs: 40,
            rho_z: 0.9,
        }
    }

    #[test]
    fn psd_at_zero_matches_closed_form() {
        // 0.033e-15 * (2 pi / 30)^(-11/3)
        let v = vonkarman_psd(0.0, &params(1e-15));
        let expected = 0.033e-15 * (2.0 * PI / 30.0).powf(-11.0 / 3.0);
        assert!((v - expected).abs() / expected < 1e-14);
        assert!((v - 1.02e-14).abs() < 0.01e-14, "{v}");
    }

    #[test]
    fn psd_cutoff_and_linearity() {
        let p = params(1e-15);
        let km = p.kappa_inner();
        assert!(vonkarman_psd(10.0 * km, &p) <= 1e-20 * vonkarman_psd(0.0, &p));
        for kappa in [0.0, 1.0, 50.0, 900.0] {
            let a = vonkarman_psd(kappa, &p);
            let b = vonkarman_psd(kappa, &p.with_cn2(2e-15));
            assert!((b - 2.0 * a).abs() <= 1e-15 * b);
        }
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let v = vonkarman_psd(i as f64 * 10.0, &p);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn fried_and_rytov_defaults() {
        let p = params(1e-14);
        let r0 = fried_parameter(&p);
        assert!((r0 - 0.0197).abs() < 0.0001, "{r0}");
        let s = rytov_variance(&p);
        assert!((s - 13.6).abs() < 0.1, "{s}");
        let r0_doubled = fried_parameter(&p.with_cn2(2e-14));
        assert!((r0_doubled / r0 - 2f64.powf(-0.6)).abs() < 1e-12);
        assert_eq!(rytov_variance(&p.with_cn2(0.0)), 0.0);
        let mut short = p;
        short.path_length = 1e-9;
        assert!(fried_parameter(&short) > 1e4);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = params(1e-14);
        p.rho_z = 1.0;
        assert!(p.validate().is_err());
        let mut p = params(1e-14);
        p.inner_scale = 40.0;
        assert!(p.validate().is_err());
        let mut p = params(1e-14);
        p.n_slabs = 0;
        assert!(p.validate().is_err());
        assert!(params(-1.0).validate().is_err());
    }

    #[test]
    fn vacuum_screens_are_zero() {
        let g = Grid::new(32, 2.5e-3).unwrap();
        let s = synthesize_screen_sequence(&g, &params(0.0), 1).unwrap();
        assert_eq!(s.len(), 40);
        assert!(s.iter().all(|p| p.phase().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let g = Grid::new(32, 2.5e-3).unwrap();
        let mut p = params(1e-14);
        p.n_slabs = 3;
        let a = synthesize_screen_sequence(&g, &p, 11).unwrap();
        let b = synthesize_screen_sequence(&g, &p, 11).unwrap();
        let c = synthesize_screen_sequence(&g, &p, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|s| s.phase().iter().all(|v| v.is_finite())));
        // piston removed
        for s in &a {
            let mean = s.phase().iter().sum::<f64>() / s.phase().len() as f64;
            assert!(mean.abs() < 1e-9);
        }
    }
}
