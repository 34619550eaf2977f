//! Reference computations that share no code with the simulation kernels.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use turbmimo_core::{CMatrix, ComplexField, TurbulenceParams};

/// Permanent as the sum over all `n!` permutations.
pub fn brute_force_permanent(m: &CMatrix) -> Complex64 {
    fn recurse(m: &CMatrix, row: usize, used: &mut [bool]) -> Complex64 {
        if row == m.nrows() {
            return Complex64::new(1.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..m.ncols() {
            if !used[col] {
                used[col] = true;
                acc += m[(row, col)] * recurse(m, row + 1, used);
                used[col] = false;
            }
        }
        acc
    }
    recurse(m, 0, &mut vec![false; m.ncols()])
}

/// Output distribution of one photon in each of the first `n` inputs of the
/// unitary `u`, by symmetrized Fock evolution: amplitudes `prod_j u[o_j, j]`
/// summed over ordered output sequences with the same occupation.
pub fn fock_distribution(u: &CMatrix, n: usize) -> BTreeMap<Vec<usize>, f64> {
    let ports = u.nrows();
    let mut amps: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    let mut seq = vec![0usize; n];
    loop {
        let amp: Complex64 = seq.iter().enumerate().map(|(j, &o)| u[(o, j)]).product();
        let mut occ = vec![0usize; ports];
        for &o in &seq {
            occ[o] += 1;
        }
        *amps.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        let mut k = 0;
        loop {
            if k == n {
                return amps
                    .into_iter()
                    .map(|(occ, c)| {
                        let w: f64 = occ.iter().map(|&m| (1..=m).product::<usize>() as f64).product();
                        (occ, c.norm_sqr() * w)
                    })
                    .collect();
            }
            seq[k] += 1;
            if seq[k] < ports {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
    }
}

/// Von Kármán refractive-index spectrum.
pub fn index_spectrum(kappa: f64, p: &TurbulenceParams) -> f64 {
    let k0 = 2.0 * PI / p.outer_scale;
    let km = 5.92 / p.inner_scale;
    0.033 * p.cn2 * (kappa * kappa + k0 * k0).powf(-11.0 / 6.0) * (-(kappa * kappa) / (km * km)).exp()
}

/// Phase structure function of one slab,
/// `8 pi^2 k^2 dz int (1 - J0(kappa r)) Phi_n(kappa) kappa dkappa`,
/// by composite Simpson in `ln kappa`.
pub fn structure_function(r: f64, p: &TurbulenceParams) -> f64 {
    let k = 2.0 * PI / p.wavelength;
    let dz = p.path_length / p.n_slabs as f64;
    let (lo, hi) = ((1e-5f64).ln(), (30.0 * 5.92 / p.inner_scale).ln());
    let steps = 40_000;
    let h = (hi - lo) / steps as f64;
    let f = |u: f64| {
        let kappa = u.exp();
        (1.0 - libm::j0(kappa * r)) * index_spectrum(kappa, p) * kappa * kappa
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    8.0 * PI * PI * k * k * dz * acc * h / 3.0
}

/// `2 sqrt(<x^2>)` of the intensity, the `1/e^2` radius of a Gaussian.
pub fn second_moment_waist(field: &ComplexField) -> f64 {
    let g = field.grid();
    let n = g.n_points();
    let (mut num, mut den) = (0.0, 0.0);
    for (idx, v) in field.samples().iter().enumerate() {
        let x = g.coordinate(idx % n);
        num += x * x * v.norm_sqr();
        den += v.norm_sqr();
    }
    2.0 * (num / den).sqrt()
}

/// Unitary 2-D DFT by direct summation, row-major `n x n`.
pub fn naive_dft(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for (u, row) in out.chunks_mut(n).enumerate() {
        for (v, slot) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..n {
                for x in 0..n {
                    let phase = -2.0 * PI * ((u * y + v * x) % n) as f64 / n as f64;
                    acc += data[y * n + x] * Complex64::from_polar(1.0, phase);
                }
            }
            *slot = acc / n as f64;
        }
    }
    out
}
