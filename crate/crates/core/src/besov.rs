//! Dyadic Littlewood–Paley blocks with raised-cosine windows and the
//! `p = q = ∞` Besov norm built on them.
//!
//! With `t = log2|k|`, block `j ≥ 1` is `cos²(π(t − j)/2)` on `|t − j| ≤ 1`;
//! block 0 is 1 on `|k| ≤ 1` and `cos²(πt/2)` on `1 < |k| ≤ 2`. Neighbouring
//! windows are `cos²` and `sin²` of the same angle, so they sum to one.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{physical_unchecked, sup_norm, to_spectral, GridSpec, PeriodicField};

#[derive(Debug, Clone)]
pub struct LittlewoodPaleyFamily {
    grid: GridSpec,
    /// `blocks[j][i]` is `φ_j` at spectral index `i`.
    blocks: Vec<Vec<f64>>,
}

pub fn window(j: usize, r: f64) -> f64 {
    if j == 0 {
        if r <= 1.0 {
            return 1.0;
        }
        if r >= 2.0 {
            return 0.0;
        }
        let c = libm::cos(0.5 * PI * libm::log2(r));
        return c * c;
    }
    if r <= 0.0 {
        return 0.0;
    }
    let t = libm::log2(r) - j as f64;
    if t.abs() >= 1.0 {
        0.0
    } else {
        let c = libm::cos(0.5 * PI * t);
        c * c
    }
}

impl LittlewoodPaleyFamily {
    /// Enough blocks to cover every wave vector of the grid's band.
    pub fn for_grid(grid: GridSpec) -> Self {
        let m = grid.points_per_axis() as f64;
        let rmax = 0.5 * m * libm::sqrt(grid.dim() as f64);
        let jmax = libm::ceil(libm::log2(rmax)) as usize + 1;
        let radii: Vec<f64> = (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                libm::hypot(k[0] as f64, k[1] as f64)
            })
            .collect();
        let blocks = (0..=jmax).map(|j| radii.iter().map(|&r| window(j, r)).collect()).collect();
        LittlewoodPaleyFamily { grid, blocks }
    }

    /// Build from externally supplied block samples (for testing defects).
    pub fn from_blocks(grid: GridSpec, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.iter().any(|b| b.len() != grid.len()) {
            return Err(Error::InvalidParameter("block length does not match grid"));
        }
        Ok(LittlewoodPaleyFamily { grid, blocks })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.blocks[j]
    }

    /// `max_k |Σ_j φ_j(k) − 1|` over the band.
    pub fn partition_defect(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| (self.blocks.iter().map(|b| b[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-block values `2^{sj} ‖Δ_j f‖_∞`.
pub fn besov_blocks(f: &PeriodicField, s: f64, family: &LittlewoodPaleyFamily) -> Result<Vec<f64>> {
    if !(s > 0.0 && s <= 4.0) || s == libm::round(s) {
        return Err(Error::InvalidParameter("Besov order must lie in (0, 4] and not be an integer"));
    }
    if family.grid != f.grid() {
        return Err(Error::GridMismatch);
    }
    let defect = family.partition_defect();
    if defect > 1e-12 {
        return Err(Error::InvalidPartition { defect });
    }
    let spec = to_spectral(f);
    Ok(family
        .blocks
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let mut idx = 0;
            let piece = spec.multiply(|_| {
                let w = b[idx];
                idx += 1;
                num_complex::Complex64::new(w, 0.0)
            });
            libm::pow(2.0, s * j as f64) * sup_norm(&physical_unchecked(&piece))
        })
        .collect())
}

/// `sup_j 2^{sj} ‖Δ_j f‖_∞` over all blocks, block 0 included.
pub fn besov_seminorm(f: &PeriodicField, s: f64, family: &LittlewoodPaleyFamily) -> Result<f64> {
    Ok(besov_blocks(f, s, family)?.into_iter().fold(0.0, f64::max))
}

/// Same supremum restricted to `j ≥ 1`; blind to additive constants.
pub fn besov_high(f: &PeriodicField, s: f64, family: &LittlewoodPaleyFamily) -> Result<f64> {
    Ok(besov_blocks(f, s, family)?.into_iter().skip(1).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        for (d, m) in [(1, 64), (2, 32)] {
            let g = GridSpec::new(d, m).unwrap();
            let fam = LittlewoodPaleyFamily::for_grid(g);
            assert!(fam.partition_defect() < 1e-14);
        }
        // continuous check between lattice points
        for i in 0..5000 {
            let r = 0.01 + i as f64 * 0.013;
            let total: f64 = (0..12).map(|j| window(j, r)).sum();
            assert!((total - 1.0).abs() < 1e-14, "r={r}");
        }
    }

    #[test]
    fn supports() {
        for i in 1..4000 {
            let r = i as f64 * 0.01;
            assert!(window(0, r) == 0.0 || r <= 2.0);
            for j in 1..6 {
                let lo = libm::pow(2.0, j as f64 - 1.0);
                let hi = libm::pow(2.0, j as f64 + 1.0);
                assert!(window(j, r) == 0.0 || (r >= lo && r <= hi));
            }
        }
    }

    #[test]
    fn defect_detected() {
        let g = GridSpec::new(1, 16).unwrap();
        let fam = LittlewoodPaleyFamily::for_grid(g);
        let mut blocks: Vec<Vec<f64>> = (0..fam.len()).map(|j| fam.block(j).to_vec()).collect();
        blocks[1][2] += 1e-6;
        let bad = LittlewoodPaleyFamily::from_blocks(g, blocks).unwrap();
        let f = PeriodicField::constant(g, 1.0);
        assert!(matches!(besov_seminorm(&f, 1.5, &bad), Err(Error::InvalidPartition { .. })));
    }

    #[test]
    fn constant_and_single_mode() {
        let g = GridSpec::new(1, 64).unwrap();
        let fam = LittlewoodPaleyFamily::for_grid(g);
        let c = PeriodicField::constant(g, -3.0);
        assert!((besov_seminorm(&c, 1.5, &fam).unwrap() - 3.0).abs() < 1e-14);
        for jj in 2..5 {
            let f = PeriodicField::from_modes(g, &[([1 << jj, 0], 1.0, 0.0)]);
            let v = besov_seminorm(&f, 1.5, &fam).unwrap();
            let want = libm::pow(2.0, 1.5 * jj as f64);
            assert!(v >= 0.5 * want && v <= 2.0 * want);
            let shifted = f.map(|x| x + 4.0);
            let a = besov_high(&f, 1.5, &fam).unwrap();
            let b = besov_high(&shifted, 1.5, &fam).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }
}
