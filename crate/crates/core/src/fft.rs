//! Small unnormalised complex FFTs: iterative radix-2 for powers of two, a
//! tabulated DFT otherwise, and a row–column wrapper for square 2D grids.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    // e^{-2πij/n}, j < n
    roots: Vec<Complex64>,
    bitrev: Vec<usize>,
    pow2: bool,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let roots = (0..n)
            .map(|j| {
                let t = -2.0 * PI * j as f64 / n as f64;
                Complex64::new(libm::cos(t), libm::sin(t))
            })
            .collect();
        let pow2 = n.is_power_of_two();
        let bitrev = if pow2 {
            let bits = n.trailing_zeros();
            (0..n)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect()
        } else {
            Vec::new()
        };
        Fft { n, roots, bitrev, pow2 }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X_k = Σ_j x_j e^{-2πijk/n}`
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(data, scratch, false);
    }

    /// `x_j = Σ_k X_k e^{+2πijk/n}` (no 1/n).
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(data, scratch, true);
    }

    fn root(&self, idx: usize, inverse: bool) -> Complex64 {
        let r = self.roots[idx % self.n];
        if inverse {
            r.conj()
        } else {
            r
        }
    }

    fn run(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>, inverse: bool) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        if n == 1 {
            return;
        }
        if self.pow2 {
            for i in 0..n {
                let j = self.bitrev[i];
                if i < j {
                    data.swap(i, j);
                }
            }
            let mut len = 2;
            while len <= n {
                let half = len / 2;
                let stride = n / len;
                for start in (0..n).step_by(len) {
                    for k in 0..half {
                        let w = self.root(k * stride, inverse);
                        let a = data[start + k];
                        let b = data[start + k + half] * w;
                        data[start + k] = a + b;
                        data[start + k + half] = a - b;
                    }
                }
                len <<= 1;
            }
        } else {
            scratch.clear();
            scratch.extend_from_slice(data);
            for (k, out) in data.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &x) in scratch.iter().enumerate() {
                    acc += x * self.root((j * k) % n, inverse);
                }
                *out = acc;
            }
        }
    }
}

/// Transforms over a `dim`-dimensional `m^dim` grid stored row-major.
#[derive(Debug, Clone)]
pub struct GridFft {
    dim: usize,
    m: usize,
    fft: Fft,
}

impl GridFft {
    pub fn new(dim: usize, m: usize) -> Self {
        GridFft { dim, m, fft: Fft::new(m) }
    }

    pub fn forward(&self, data: &mut [Complex64], work: &mut FftWork) {
        self.run(data, work, false)
    }

    pub fn inverse(&self, data: &mut [Complex64], work: &mut FftWork) {
        self.run(data, work, true)
    }

    fn run(&self, data: &mut [Complex64], work: &mut FftWork, inverse: bool) {
        let m = self.m;
        let go = |fft: &Fft, d: &mut [Complex64], s: &mut Vec<Complex64>| {
            if inverse {
                fft.inverse(d, s)
            } else {
                fft.forward(d, s)
            }
        };
        if self.dim == 1 {
            go(&self.fft, data, &mut work.scratch);
            return;
        }
        for row in data.chunks_mut(m) {
            go(&self.fft, row, &mut work.scratch);
        }
        work.column.resize(m, Complex64::new(0.0, 0.0));
        for c in 0..m {
            for r in 0..m {
                work.column[r] = data[r * m + c];
            }
            go(&self.fft, &mut work.column, &mut work.scratch);
            for r in 0..m {
                data[r * m + c] = work.column[r];
            }
        }
    }
}

/// Reusable buffers for [`GridFft`].
#[derive(Debug, Default, Clone)]
pub struct FftWork {
    scratch: Vec<Complex64>,
    column: Vec<Complex64>,
}
