//! Periodic samples on uniform tensor grids of `T^n` and their Fourier
//! coefficients, `û(k) = (2π)^{-n} ∫ u e^{-ik·x} dx`.
//!
//! Spectral arrays use FFT ordering per axis: index `i` is wavenumber `i` for
//! `i <= m/2` and `i - m` otherwise, so the band is `{-m/2+1, …, m/2}^n`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{FftWork, GridFft};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    m: usize,
}

impl GridSpec {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid("dimension must be 1 or 2"));
        }
        if m < 8 || !m.is_multiple_of(2) {
            return Err(Error::InvalidGrid("points per axis must be even and at least 8"));
        }
        Ok(GridSpec { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of a flat (row-major) index; axis 0 varies slowest.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.m, flat % self.m]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.m + idx[1]
        }
    }

    /// Coordinates of a node (unused axis is 0).
    pub fn node(&self, flat: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(flat);
        let h = self.spacing();
        [i as f64 * h, j as f64 * h]
    }

    /// Grid node at point `x`, if `x` is a node up to `1e-9·h` modulo 2π.
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::InvalidParameter("point dimension does not match grid"));
        }
        let h = self.spacing();
        let mut idx = [0usize; 2];
        for (a, &xa) in x.iter().enumerate() {
            if !xa.is_finite() {
                return Err(Error::OffGrid);
            }
            let s = xa / h;
            let r = libm::round(s);
            if (s - r).abs() > 1e-9 {
                return Err(Error::OffGrid);
            }
            idx[a] = (r as i64).rem_euclid(self.m as i64) as usize;
        }
        Ok(self.flat_index(idx))
    }

    /// Signed wavenumber for FFT-ordered index `i`.
    pub fn wave(&self, i: usize) -> i64 {
        if i <= self.m / 2 {
            i as i64
        } else {
            i as i64 - self.m as i64
        }
    }

    /// FFT-ordered index of wavenumber `k` (taken modulo `m`).
    pub fn wave_index(&self, k: i64) -> usize {
        k.rem_euclid(self.m as i64) as usize
    }

    /// Wave vector of a flat spectral index.
    pub fn wavevector(&self, flat: usize) -> [i64; 2] {
        let [i, j] = self.multi_index(flat);
        if self.dim == 1 {
            [self.wave(i), 0]
        } else {
            [self.wave(i), self.wave(j)]
        }
    }

    pub fn spectral_index(&self, k: [i64; 2]) -> usize {
        if self.dim == 1 {
            self.wave_index(k[0])
        } else {
            self.flat_index([self.wave_index(k[0]), self.wave_index(k[1])])
        }
    }

    /// True when some component sits on the Nyquist wavenumber `m/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let k = self.wavevector(flat);
        let h = (self.m / 2) as i64;
        k[0] == h || (self.dim == 2 && k[1] == h)
    }

    pub fn plan(&self) -> GridFft {
        GridFft::new(self.dim, self.m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl PeriodicField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter("sample count does not match grid"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field samples must be finite"));
        }
        Ok(PeriodicField { grid, values })
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        PeriodicField { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn<F: FnMut([f64; 2]) -> f64>(grid: GridSpec, mut f: F) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        PeriodicField { grid, values }
    }

    /// `Σ amp·cos(k·x + phase)` over the listed modes.
    pub fn from_modes(grid: GridSpec, modes: &[([i64; 2], f64, f64)]) -> Self {
        Self::from_fn(grid, |x| {
            modes
                .iter()
                .map(|&(k, amp, ph)| amp * libm::cos(k[0] as f64 * x[0] + k[1] as f64 * x[1] + ph))
                .sum()
        })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        PeriodicField { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map<F: FnMut(f64) -> f64>(&self, f: F) -> Self {
        PeriodicField { grid: self.grid, values: self.values.iter().copied().map(f).collect() }
    }

    pub fn zip_with<F: FnMut(f64, f64) -> f64>(&self, other: &Self, mut f: F) -> Result<Self> {
        self.same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(PeriodicField { grid: self.grid, values })
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `f(x - s·h)` for a whole-cell shift `s` per axis.
    pub fn translate(&self, shift: [i64; 2]) -> Self {
        let g = self.grid;
        let m = g.points_per_axis() as i64;
        let values = (0..g.len())
            .map(|i| {
                let [a, b] = g.multi_index(i);
                let src = [
                    (a as i64 - shift[0]).rem_euclid(m) as usize,
                    if g.dim() == 2 { (b as i64 - shift[1]).rem_euclid(m) as usize } else { 0 },
                ];
                self.values[g.flat_index(src)]
            })
            .collect();
        PeriodicField { grid: g, values }
    }

    /// `f(σx)` for the coordinate reflection flipping the flagged axes.
    pub fn reflect(&self, axes: [bool; 2]) -> Self {
        let g = self.grid;
        let m = g.points_per_axis();
        let values = (0..g.len())
            .map(|i| {
                let [a, b] = g.multi_index(i);
                let src = [if axes[0] { (m - a) % m } else { a }, if axes[1] { (m - b) % m } else { b }];
                self.values[g.flat_index(src)]
            })
            .collect();
        PeriodicField { grid: g, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidParameter("coefficient count does not match grid"));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, k: [i64; 2]) -> Complex64 {
        self.coeffs[self.grid.spectral_index(k)]
    }

    pub fn set(&mut self, k: [i64; 2], c: Complex64) {
        let i = self.grid.spectral_index(k);
        self.coeffs[i] = c;
    }

    /// Multiply every coefficient by `f(k)`.
    pub fn multiply<F: FnMut([i64; 2]) -> Complex64>(&self, mut f: F) -> Self {
        let g = self.grid;
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| c * f(g.wavevector(i))).collect();
        SpectralField { grid: g, coeffs }
    }

    /// Largest `|k|_∞` carrying a coefficient above `tol·max|c|`.
    pub fn bandwidth(&self, tol: f64) -> i64 {
        let top = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if top == 0.0 {
            return 0;
        }
        (0..self.coeffs.len())
            .filter(|&i| self.coeffs[i].norm() > tol * top)
            .map(|i| {
                let k = self.grid.wavevector(i);
                k[0].abs().max(k[1].abs())
            })
            .max()
            .unwrap_or(0)
    }
}

pub fn to_spectral(f: &PeriodicField) -> SpectralField {
    let g = f.grid;
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    g.plan().forward(&mut data, &mut FftWork::default());
    let scale = 1.0 / g.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    SpectralField { grid: g, coeffs: data }
}

/// Inverse of [`to_spectral`]. Fails when the reconstruction has a
/// non-negligible imaginary part, i.e. the coefficients are not Hermitian.
pub fn to_physical(s: &SpectralField) -> Result<PeriodicField> {
    let g = s.grid;
    let mut data = s.coeffs.clone();
    g.plan().inverse(&mut data, &mut FftWork::default());
    let max_re = data.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let max_im = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let scale = s.coeffs.iter().map(|c| c.norm()).sum::<f64>().max(max_re).max(1e-300);
    if max_im > 1e-11 * scale {
        return Err(Error::ComplexReconstruction { max_imag: max_im });
    }
    Ok(PeriodicField { grid: g, values: data.iter().map(|c| c.re).collect() })
}

/// Real field with coefficients `coeffs` known to be Hermitian; the imaginary
/// round-off is dropped without checking.
pub(crate) fn physical_unchecked(s: &SpectralField) -> PeriodicField {
    let g = s.grid;
    let mut data = s.coeffs.clone();
    g.plan().inverse(&mut data, &mut FftWork::default());
    PeriodicField { grid: g, values: data.iter().map(|c| c.re).collect() }
}

pub fn sup_norm(f: &PeriodicField) -> f64 {
    f.values.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Spectral partial derivative along `axis` (Nyquist coefficients dropped).
pub fn derivative(f: &PeriodicField, axis: usize) -> PeriodicField {
    let g = f.grid;
    let s = to_spectral(f);
    let d = s.multiply(|k| {
        let ka = k[axis];
        if ka.unsigned_abs() as usize * 2 == g.points_per_axis() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, ka as f64)
        }
    });
    physical_unchecked(&d)
}

pub fn gradient(f: &PeriodicField) -> Vec<PeriodicField> {
    (0..f.grid.dim).map(|a| derivative(f, a)).collect()
}

pub fn grad_sup_norm(f: &PeriodicField, axis: usize) -> f64 {
    if axis >= f.grid.dim {
        return 0.0;
    }
    sup_norm(&derivative(f, axis))
}

pub fn integral_mean(f: &PeriodicField) -> f64 {
    f.values.iter().sum::<f64>() / f.values.len() as f64
}

/// Largest value minus smallest value.
pub fn oscillation(f: &PeriodicField) -> f64 {
    let (lo, hi) = f.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    hi - lo
}

/// Sup norm of the trigonometric interpolant (not just the samples): the
/// interpolant is oversampled, then the best few candidates are polished by
/// Newton's method on the gradient.
pub fn interpolant_sup_norm(f: &PeriodicField) -> f64 {
    let s = to_spectral(f);
    spectral_sup_norm(&s)
}

pub(crate) fn spectral_sup_norm(s: &SpectralField) -> f64 {
    let g = s.grid;
    let m = g.points_per_axis();
    let modes: Vec<([f64; 2], Complex64)> = (0..g.len())
        .filter(|&i| !g.is_nyquist(i) && s.coeffs[i].norm() > 0.0)
        .map(|i| {
            let k = g.wavevector(i);
            ([k[0] as f64, k[1] as f64], s.coeffs[i])
        })
        .collect();
    if modes.is_empty() {
        return s.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    }
    let factor = if g.dim() == 1 { 8 } else { 4 };
    let fine = GridSpec { dim: g.dim(), m: m * factor };
    let mut up = SpectralField::zeros(fine);
    for (k, c) in &modes {
        up.set([k[0] as i64, k[1] as i64], *c);
    }
    let samples = physical_unchecked(&up);
    let vals = samples.values();
    // Candidates: the largest |value| sample points.
    let mut order: Vec<usize> = (0..vals.len()).collect();
    let count = 6.min(order.len());
    order.select_nth_unstable_by(count - 1, |&a, &b| {
        vals[b].abs().partial_cmp(&vals[a].abs()).unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut best = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for &c in &order[..count] {
        let x0 = fine.node(c);
        best = best.max(polish(&modes, g.dim(), x0).abs());
    }
    best
}

/// Value of the interpolant after Newton iterations towards a critical point.
fn polish(modes: &[([f64; 2], Complex64)], dim: usize, mut x: [f64; 2]) -> f64 {
    let eval = |x: [f64; 2]| {
        let mut v = 0.0;
        let mut gr = [0.0; 2];
        let mut hs = [0.0; 3];
        for (k, c) in modes {
            let ph = k[0] * x[0] + k[1] * x[1];
            let (sn, cs) = (libm::sin(ph), libm::cos(ph));
            let re = c.re * cs - c.im * sn;
            let im = c.re * sn + c.im * cs;
            v += re;
            gr[0] -= k[0] * im;
            gr[1] -= k[1] * im;
            hs[0] -= k[0] * k[0] * re;
            hs[1] -= k[0] * k[1] * re;
            hs[2] -= k[1] * k[1] * re;
        }
        (v, gr, hs)
    };
    let (v0, _, _) = eval(x);
    let mut best = v0;
    for _ in 0..8 {
        let (v, gr, hs) = eval(x);
        if v.abs() > best.abs() {
            best = v;
        }
        let step = if dim == 1 {
            if hs[0] == 0.0 {
                break;
            }
            [gr[0] / hs[0], 0.0]
        } else {
            let det = hs[0] * hs[2] - hs[1] * hs[1];
            if det == 0.0 {
                break;
            }
            [(hs[2] * gr[0] - hs[1] * gr[1]) / det, (hs[0] * gr[1] - hs[1] * gr[0]) / det]
        };
        // Newton may wander off towards another critical point; only accept
        // short steps.
        if step[0].abs() + step[1].abs() > 0.5 {
            break;
        }
        x = [x[0] - step[0], x[1] - step[1]];
        if step[0].abs() + step[1].abs() < 1e-15 {
            break;
        }
    }
    let (v, _, _) = eval(x);
    if v.abs() > best.abs() {
        v
    } else {
        best
    }
}
