//! Unitary two-dimensional discrete Fourier transforms on square power-of-two
//! arrays.
//!
//! Rows are transformed with an iterative radix-2 Cooley-Tukey kernel. The
//! column pass runs the same butterflies with whole rows as operands, which
//! keeps memory access contiguous and avoids transposes. Both directions are
//! scaled by `1/n` so that `sum |x|^2` is preserved.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[allow(unused_imports)]
use num_traits::Float;

/// Precomputed twiddles and bit-reversal table for one transform size.
#[derive(Debug, Clone)]
pub struct Fft2d {
    n: usize,
    // stage with half-span h uses entries [h - 1, 2h - 1): exp(-+ i pi k / h)
    forward_twiddles: Vec<Complex64>,
    inverse_twiddles: Vec<Complex64>,
    // split copies for the bit-reversed transforms; the inverse real parts
    // equal the forward ones
    forward_re: Vec<f64>,
    forward_im: Vec<f64>,
    inverse_im: Vec<f64>,
    bitrev: Vec<usize>,
    scale: f64,
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    avx2: bool,
}

impl Fft2d {
    /// Plans a transform for `n x n` arrays. `n` must be a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "transform size must be a power of two");
        let log2n = n.trailing_zeros();
        let mut forward_twiddles = Vec::with_capacity(n - 1);
        let mut half = 1;
        while half < n {
            for k in 0..half {
                let theta = -PI * k as f64 / half as f64;
                forward_twiddles.push(Complex64::new(theta.cos(), theta.sin()));
            }
            half <<= 1;
        }
        let inverse_twiddles: Vec<Complex64> = forward_twiddles.iter().map(|w| w.conj()).collect();
        let bitrev = (0..n)
            .map(|i| i.reverse_bits() >> (usize::BITS - log2n))
            .collect();
        Self {
            n,
            forward_re: forward_twiddles.iter().map(|w| w.re).collect(),
            forward_im: forward_twiddles.iter().map(|w| w.im).collect(),
            inverse_im: inverse_twiddles.iter().map(|w| w.im).collect(),
            forward_twiddles,
            inverse_twiddles,
            bitrev,
            scale: 1.0 / n as f64,
            #[cfg(all(feature = "std", target_arch = "x86_64"))]
            avx2: std::is_x86_feature_detected!("avx2"),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Forward transform, `X(f) = (1/n) sum_x x(r) exp(-2 pi i f.r / n)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward_unscaled(data);
        self.rescale(data);
    }

    /// Inverse of [`Fft2d::forward`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse_unscaled(data);
        self.rescale(data);
    }

    /// Forward transform without the `1/n` factor.
    pub fn forward_unscaled(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward_twiddles);
    }

    /// Inverse transform without the `1/n` factor.
    pub fn inverse_unscaled(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse_twiddles);
    }

    /// The per-direction normalization `1/n`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn rescale(&self, data: &mut [Complex64]) {
        let s = self.scale;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Unscaled forward transform of split real and imaginary parts. The
    /// output is the transposed spectrum in bit-reversed order along both
    /// axes: entry `(i, j)` holds frequency `(bitrev(j), bitrev(i))` in
    /// (row, column) order (see [`Fft2d::bitrev`]).
    pub fn forward_to_bitrev(&self, re: &mut [f64], im: &mut [f64]) {
        self.check_split(re, im);
        let (wr, wi) = (&self.forward_re[..], &self.forward_im[..]);
        #[cfg(all(feature = "std", target_arch = "x86_64"))]
        if self.avx2 {
            // SAFETY: the plan only sets `avx2` after runtime detection.
            unsafe { split::dif_avx2(self.n, re, im, wr, wi) };
            return;
        }
        split::dif(self.n, re, im, wr, wi);
    }

    /// Unscaled inverse of [`Fft2d::forward_to_bitrev`], returning natural
    /// order.
    pub fn inverse_from_bitrev(&self, re: &mut [f64], im: &mut [f64]) {
        self.check_split(re, im);
        let (wr, wi) = (&self.forward_re[..], &self.inverse_im[..]);
        #[cfg(all(feature = "std", target_arch = "x86_64"))]
        if self.avx2 {
            // SAFETY: as above.
            unsafe { split::dit_avx2(self.n, re, im, wr, wi) };
            return;
        }
        split::dit(self.n, re, im, wr, wi);
    }

    fn check_split(&self, re: &[f64], im: &[f64]) {
        let len = self.n * self.n;
        assert!(re.len() == len && im.len() == len, "arrays do not match the planned size");
    }

    /// Bit-reversal permutation of one axis index.
    pub fn bitrev(&self, i: usize) -> usize {
        self.bitrev[i]
    }

    fn check(&self, data: &[Complex64]) {
        assert_eq!(data.len(), self.n * self.n, "array does not match the planned size");
    }

    fn transform(&self, data: &mut [Complex64], twiddles: &[Complex64]) {
        self.check(data);
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            for i in 0..n {
                let j = self.bitrev[i];
                if j > i {
                    row.swap(i, j);
                }
            }
            self.row_dit(row, twiddles);
        }
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                let (head, tail) = data.split_at_mut(j * n);
                head[i * n..(i + 1) * n].swap_with_slice(&mut tail[..n]);
            }
        }
        self.column_dit(data, twiddles);
    }

    /// Decimation in time: bit-reversed order in, natural out.
    fn row_dit(&self, row: &mut [Complex64], twiddles: &[Complex64]) {
        let n = self.n;
        // first stage has unit twiddles only
        for pair in row.chunks_exact_mut(2) {
            let a = pair[0];
            let b = pair[1];
            pair[0] = a + b;
            pair[1] = a - b;
        }
        let mut half = 2;
        while half < n {
            let w = &twiddles[half - 1..2 * half - 1];
            for block in row.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(w) {
                    let t = *w * *b;
                    *b = *a - t;
                    *a += t;
                }
            }
            half <<= 1;
        }
    }

    fn column_dit(&self, data: &mut [Complex64], twiddles: &[Complex64]) {
        let n = self.n;
        let mut half = 1;
        while half < n {
            for block in data.chunks_exact_mut(2 * half * n) {
                let (lo, hi) = block.split_at_mut(half * n);
                for k in 0..half {
                    let w = twiddles[half - 1 + k];
                    let a = &mut lo[k * n..(k + 1) * n];
                    let b = &mut hi[k * n..(k + 1) * n];
                    if k == 0 {
                        for (a, b) in a.iter_mut().zip(b.iter_mut()) {
                            let t = *b;
                            *b = *a - t;
                            *a += t;
                        }
                    } else {
                        for (a, b) in a.iter_mut().zip(b.iter_mut()) {
                            let t = w * *b;
                            *b = *a - t;
                            *a += t;
                        }
                    }
                }
            }
            half <<= 1;
        }
    }
}

/// Kernels on split real and imaginary arrays. Both axes are handled by
/// butterflies between whole rows (the second axis after a transpose), two
/// radix-2 stages fused per sweep over memory. Every inner loop runs over
/// contiguous rows and vectorizes; results do not depend on the vector width
/// since each lane performs the same IEEE operations.
mod split {
    const TILE: usize = 16;

    /// In-place transpose of an `n x n` array.
    #[inline(always)]
    fn transpose(n: usize, a: &mut [f64]) {
        for bi in (0..n).step_by(TILE) {
            for bj in (bi..n).step_by(TILE) {
                for i in bi..(bi + TILE).min(n) {
                    let start = if bi == bj { i + 1 } else { bj };
                    for j in start..(bj + TILE).min(n) {
                        a.swap(i * n + j, j * n + i);
                    }
                }
            }
        }
    }

    struct Quad<'a> {
        r: [&'a mut [f64]; 4],
        i: [&'a mut [f64]; 4],
    }

    /// Splits a block of `4q` rows into its four quarter rows at offset `k`.
    #[inline(always)]
    fn quad<'a>(re: &'a mut [f64], im: &'a mut [f64], n: usize, q: usize, k: usize) -> Quad<'a> {
        let (r01, r23) = re.split_at_mut(2 * q * n);
        let (r0, r1) = r01.split_at_mut(q * n);
        let (r2, r3) = r23.split_at_mut(q * n);
        let (i01, i23) = im.split_at_mut(2 * q * n);
        let (i0, i1) = i01.split_at_mut(q * n);
        let (i2, i3) = i23.split_at_mut(q * n);
        let row = k * n..(k + 1) * n;
        Quad {
            r: [
                &mut r0[row.clone()],
                &mut r1[row.clone()],
                &mut r2[row.clone()],
                &mut r3[row.clone()],
            ],
            i: [
                &mut i0[row.clone()],
                &mut i1[row.clone()],
                &mut i2[row.clone()],
                &mut i3[row],
            ],
        }
    }

    /// Single radix-2 stage with half-span one (unit twiddle).
    #[inline(always)]
    fn unit_stage(n: usize, re: &mut [f64], im: &mut [f64]) {
        for (br, bi) in re.chunks_exact_mut(2 * n).zip(im.chunks_exact_mut(2 * n)) {
            let (ar, cr) = br.split_at_mut(n);
            let (ai, ci) = bi.split_at_mut(n);
            for j in 0..n {
                let (xr, xi, yr, yi) = (ar[j], ai[j], cr[j], ci[j]);
                ar[j] = xr + yr;
                ai[j] = xi + yi;
                cr[j] = xr - yr;
                ci[j] = xi - yi;
            }
        }
    }

    /// Decimation in frequency along the row index.
    #[inline(always)]
    fn axis_dif(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        let mut h = n / 2;
        while h >= 2 {
            // stages with half-spans h = 2q and q
            let q = h / 2;
            for (br, bi) in re.chunks_exact_mut(4 * q * n).zip(im.chunks_exact_mut(4 * q * n)) {
                for k in 0..q {
                    let (a0r, a0i) = (wr[2 * q - 1 + k], wi[2 * q - 1 + k]);
                    let (a1r, a1i) = (wr[3 * q - 1 + k], wi[3 * q - 1 + k]);
                    let (bwr, bwi) = (wr[q - 1 + k], wi[q - 1 + k]);
                    let Quad { r: [r0, r1, r2, r3], i: [i0, i1, i2, i3] } = quad(br, bi, n, q, k);
                    let (r1, r2, r3) = (&mut r1[..n], &mut r2[..n], &mut r3[..n]);
                    let (i0, i1, i2, i3) = (&mut i0[..n], &mut i1[..n], &mut i2[..n], &mut i3[..n]);
                    for j in 0..r0.len() {
                        let (x0r, x0i, x1r, x1i) = (r0[j], i0[j], r1[j], i1[j]);
                        let (x2r, x2i, x3r, x3i) = (r2[j], i2[j], r3[j], i3[j]);
                        let (y0r, y0i) = (x0r + x2r, x0i + x2i);
                        let (dr, di) = (x0r - x2r, x0i - x2i);
                        let (y2r, y2i) = (dr * a0r - di * a0i, dr * a0i + di * a0r);
                        let (y1r, y1i) = (x1r + x3r, x1i + x3i);
                        let (dr, di) = (x1r - x3r, x1i - x3i);
                        let (y3r, y3i) = (dr * a1r - di * a1i, dr * a1i + di * a1r);
                        r0[j] = y0r + y1r;
                        i0[j] = y0i + y1i;
                        let (dr, di) = (y0r - y1r, y0i - y1i);
                        r1[j] = dr * bwr - di * bwi;
                        i1[j] = dr * bwi + di * bwr;
                        r2[j] = y2r + y3r;
                        i2[j] = y2i + y3i;
                        let (dr, di) = (y2r - y3r, y2i - y3i);
                        r3[j] = dr * bwr - di * bwi;
                        i3[j] = dr * bwi + di * bwr;
                    }
                }
            }
            h /= 4;
        }
        if h == 1 {
            unit_stage(n, re, im);
        }
    }

    /// Decimation in time along the row index.
    #[inline(always)]
    fn axis_dit(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        let mut q = 1;
        if n.trailing_zeros() % 2 == 1 {
            unit_stage(n, re, im);
            q = 2;
        }
        // stages with half-spans q and 2q
        while q < n {
            for (br, bi) in re.chunks_exact_mut(4 * q * n).zip(im.chunks_exact_mut(4 * q * n)) {
                for k in 0..q {
                    let (w1r, w1i) = (wr[q - 1 + k], wi[q - 1 + k]);
                    let (w2r, w2i) = (wr[2 * q - 1 + k], wi[2 * q - 1 + k]);
                    let (w3r, w3i) = (wr[3 * q - 1 + k], wi[3 * q - 1 + k]);
                    let Quad { r: [r0, r1, r2, r3], i: [i0, i1, i2, i3] } = quad(br, bi, n, q, k);
                    let (r1, r2, r3) = (&mut r1[..n], &mut r2[..n], &mut r3[..n]);
                    let (i0, i1, i2, i3) = (&mut i0[..n], &mut i1[..n], &mut i2[..n], &mut i3[..n]);
                    for j in 0..r0.len() {
                        let (x0r, x0i, x1r, x1i) = (r0[j], i0[j], r1[j], i1[j]);
                        let (x2r, x2i, x3r, x3i) = (r2[j], i2[j], r3[j], i3[j]);
                        let (tr, ti) = (w1r * x1r - w1i * x1i, w1r * x1i + w1i * x1r);
                        let (y0r, y0i, y1r, y1i) = (x0r + tr, x0i + ti, x0r - tr, x0i - ti);
                        let (tr, ti) = (w1r * x3r - w1i * x3i, w1r * x3i + w1i * x3r);
                        let (y2r, y2i, y3r, y3i) = (x2r + tr, x2i + ti, x2r - tr, x2i - ti);
                        let (tr, ti) = (w2r * y2r - w2i * y2i, w2r * y2i + w2i * y2r);
                        r0[j] = y0r + tr;
                        i0[j] = y0i + ti;
                        r2[j] = y0r - tr;
                        i2[j] = y0i - ti;
                        let (tr, ti) = (w3r * y3r - w3i * y3i, w3r * y3i + w3i * y3r);
                        r1[j] = y1r + tr;
                        i1[j] = y1i + ti;
                        r3[j] = y1r - tr;
                        i3[j] = y1i - ti;
                    }
                }
            }
            q *= 4;
        }
    }

    #[inline(always)]
    fn dif_body(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        axis_dif(n, re, im, wr, wi);
        transpose(n, re);
        transpose(n, im);
        axis_dif(n, re, im, wr, wi);
    }

    #[inline(always)]
    fn dit_body(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        axis_dit(n, re, im, wr, wi);
        transpose(n, re);
        transpose(n, im);
        axis_dit(n, re, im, wr, wi);
    }

    pub(super) fn dif(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        dif_body(n, re, im, wr, wi);
    }

    pub(super) fn dit(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        dit_body(n, re, im, wr, wi);
    }

    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn dif_avx2(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        dif_body(n, re, im, wr, wi);
    }

    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn dit_avx2(n: usize, re: &mut [f64], im: &mut [f64], wr: &[f64], wi: &[f64]) {
        dit_body(n, re, im, wr, wi);
    }
}

/// Signed FFT frequency index for position `i` of an `n`-point transform.
pub fn frequency_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
