//! Lattice sums for the far field of the periodised kernels.
//!
//! For `F(z) = Q(z)^{-s/2}` with `Q(z) = zᵀBz`, evaluated at base points `y₀`
//! of the reference cell `[-π, π]^n`, this computes
//!
//! ```text
//! L_s(y₀) = Σ_{|m|∞ > M} F(y₀ + 2πm)
//! W_s(y₀) = Σ_{|m|∞ > M} (y₀ + 2πm) F(y₀ + 2πm)
//! ```
//!
//! The shells `M < |m|∞ ≤ M_d` are summed directly. Beyond that, a Taylor
//! expansion in `y₀` (through order four for `L`, three for `W`; the other
//! orders vanish by symmetry) whose coefficients are lattice sums over the far
//! shells, summed directly out to `M_e`. The low-order coefficients also get
//! a continuum remainder for the shells beyond `M_e`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::quadrature::GaussLegendre;

type Mat = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy)]
struct Tail {
    t0: f64,
    t2: Mat,
    d: Mat,
    // Σ ∂⁴F and Σ ∂³G_i over the expansion shells, flattened binary indices.
    t4: [f64; 16],
    d3: [[f64; 8]; 2],
}

#[derive(Debug, Clone)]
pub struct LatticeSums {
    dim: usize,
    b: Mat,
    s0: f64,
    terms: usize,
    near: i64,
    direct: i64,
    tails: Vec<Tail>,
}

/// Shell extents used by [`LatticeSums::new`].
#[derive(Debug, Clone, Copy)]
pub struct LatticeDepth {
    pub direct: usize,
    pub expansion: usize,
}

impl LatticeDepth {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            LatticeDepth { direct: 48, expansion: 200_000 }
        } else {
            LatticeDepth { direct: 10, expansion: 160 }
        }
    }
}

fn quad_form(b: &Mat, z: [f64; 2]) -> f64 {
    z[0] * (b[0][0] * z[0] + b[0][1] * z[1]) + z[1] * (b[1][0] * z[0] + b[1][1] * z[1])
}

fn mat_vec(b: &Mat, z: [f64; 2]) -> [f64; 2] {
    [b[0][0] * z[0] + b[0][1] * z[1], b[1][0] * z[0] + b[1][1] * z[1]]
}

/// Visits every lattice vector `m` with `lo < |m|∞ ≤ hi` (second entry 0 in 1D).
fn for_shells<F: FnMut([i64; 2])>(dim: usize, lo: i64, hi: i64, mut f: F) {
    if dim == 1 {
        for k in lo + 1..=hi {
            f([k, 0]);
            f([-k, 0]);
        }
        return;
    }
    for r in lo + 1..=hi {
        for t in -r..=r {
            f([r, t]);
            f([-r, t]);
        }
        for t in -(r - 1)..=(r - 1) {
            f([t, r]);
            f([t, -r]);
        }
    }
}

impl LatticeSums {
    /// Exponents are `s_j = s0 + 2j`, `j < terms`. `b` must be symmetric
    /// positive definite (only the leading block is used in 1D).
    pub fn new(dim: usize, b: Mat, s0: f64, terms: usize, near: usize, depth: LatticeDepth) -> Self {
        assert!(s0 > dim as f64 + 1.0 - 1e-12, "lattice sums need s > n + 1");
        let near = near as i64;
        let direct = (depth.direct as i64).max(near);
        let ext = (depth.expansion as i64).max(direct);
        let two_pi = 2.0 * PI;
        let mut tails = alloc::vec![
            Tail { t0: 0.0, t2: [[0.0; 2]; 2], d: [[0.0; 2]; 2], t4: [0.0; 16], d3: [[0.0; 8]; 2] };
            terms
        ];
        let nidx = if dim == 1 { 1 } else { 2 };
        for_shells(dim, direct, ext, |m| {
            let c = [two_pi * m[0] as f64, two_pi * m[1] as f64];
            let q = quad_form(&b, c);
            let bc = mat_vec(&b, c);
            let mut f = libm::pow(q, -0.5 * s0);
            for (j, t) in tails.iter_mut().enumerate() {
                let s = s0 + 2.0 * j as f64;
                t.t0 += f;
                for r in 0..2 {
                    for col in 0..2 {
                        t.t2[r][col] += -s * f / q * b[r][col] + s * (s + 2.0) * f / (q * q) * bc[r] * bc[col];
                        let id = if r == col { f } else { 0.0 };
                        t.d[r][col] += id - s * f / q * c[r] * bc[col];
                    }
                }
                higher_orders(t, &b, c, bc, q, f, s, nidx);
                f /= q;
            }
        });
        let r_e = (2 * ext + 1) as f64 * PI;
        for (j, t) in tails.iter_mut().enumerate() {
            let s = s0 + 2.0 * j as f64;
            let (c0, c2, cd) = continuum(dim, &b, s, r_e);
            t.t0 += c0;
            for r in 0..2 {
                for col in 0..2 {
                    t.t2[r][col] += c2[r][col];
                    t.d[r][col] += cd[r][col];
                }
            }
        }
        LatticeSums { dim, b, s0, terms, near, direct, tails }
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// Fills `l[j] = L_{s_j}(y₀)` and `w[j] = W_{s_j}(y₀)`.
    pub fn eval(&self, y0: [f64; 2], l: &mut [f64], w: &mut [[f64; 2]]) {
        let two_pi = 2.0 * PI;
        for j in 0..self.terms {
            let t = &self.tails[j];
            let y = if self.dim == 1 { [y0[0], 0.0] } else { y0 };
            l[j] = t.t0 + 0.5 * (y[0] * (t.t2[0][0] * y[0] + t.t2[0][1] * y[1]) + y[1] * (t.t2[1][0] * y[0] + t.t2[1][1] * y[1]));
            w[j] = [t.d[0][0] * y[0] + t.d[0][1] * y[1], t.d[1][0] * y[0] + t.d[1][1] * y[1]];
            let mut quart = 0.0;
            for (code, v) in t.t4.iter().enumerate() {
                quart += v * y[code & 1] * y[(code >> 1) & 1] * y[(code >> 2) & 1] * y[(code >> 3) & 1];
            }
            l[j] += quart / 24.0;
            for i in 0..2 {
                let mut cub = 0.0;
                for (code, v) in t.d3[i].iter().enumerate() {
                    cub += v * y[code & 1] * y[(code >> 1) & 1] * y[(code >> 2) & 1];
                }
                w[j][i] += cub / 6.0;
            }
        }
        let b = self.b;
        let s0 = self.s0;
        let terms = self.terms;
        let dim = self.dim;
        for_shells(dim, self.near, self.direct, |m| {
            let z = [y0[0] + two_pi * m[0] as f64, if dim == 1 { 0.0 } else { y0[1] + two_pi * m[1] as f64 }];
            let q = quad_form(&b, z);
            let mut f = libm::pow(q, -0.5 * s0);
            for j in 0..terms {
                l[j] += f;
                w[j][0] += z[0] * f;
                w[j][1] += z[1] * f;
                f /= q;
            }
        });
    }
}

/// Accumulates `∂⁴F(c)` and `∂³(c_i F)(c)` for `F = Q^{-s/2}` (`f = F(c)`,
/// `bc = Bc`, `q = Q(c)`).
#[allow(clippy::too_many_arguments)]
fn higher_orders(t: &mut Tail, b: &Mat, c: [f64; 2], bc: [f64; 2], q: f64, f: f64, s: f64, nidx: usize) {
    let k1 = s * (s + 2.0) * f / (q * q);
    let k2 = s * (s + 2.0) * (s + 4.0) * f / (q * q * q);
    let k3 = s * (s + 2.0) * (s + 4.0) * (s + 6.0) * f / (q * q * q * q);
    let h1 = s * f / q;
    let f2 = |a: usize, bb: usize| -h1 * b[a][bb] + k1 * bc[a] * bc[bb];
    let f3 = |a: usize, bb: usize, cc: usize| {
        k1 * (b[a][bb] * bc[cc] + b[a][cc] * bc[bb] + b[bb][cc] * bc[a]) - k2 * bc[a] * bc[bb] * bc[cc]
    };
    for code in 0..16usize {
        let (a, bb, cc, d) = (code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1);
        if a >= nidx || bb >= nidx || cc >= nidx || d >= nidx {
            continue;
        }
        t.t4[code] += k1 * (b[a][bb] * b[cc][d] + b[a][cc] * b[bb][d] + b[a][d] * b[bb][cc])
            - k2 * (b[a][bb] * bc[cc] * bc[d]
                + b[a][cc] * bc[bb] * bc[d]
                + b[a][d] * bc[bb] * bc[cc]
                + b[bb][cc] * bc[a] * bc[d]
                + b[bb][d] * bc[a] * bc[cc]
                + b[cc][d] * bc[a] * bc[bb])
            + k3 * bc[a] * bc[bb] * bc[cc] * bc[d];
        if d == 0 {
            for i in 0..nidx {
                let dl = |x: usize| if x == i { 1.0 } else { 0.0 };
                t.d3[i][code & 7] += dl(a) * f2(bb, cc) + dl(bb) * f2(a, cc) + dl(cc) * f2(a, bb) + c[i] * f3(a, bb, cc);
            }
        }
    }
}

/// Continuum approximations of the tail sums beyond the square of half-width
/// `r`: `(T0, T2, D)`, already divided by the cell volume `(2π)^n`.
fn continuum(dim: usize, b: &Mat, s: f64, r: f64) -> (f64, Mat, Mat) {
    let vol = libm::pow(2.0 * PI, dim as f64);
    if dim == 1 {
        let bs = libm::pow(b[0][0], -0.5 * s);
        let t0 = 2.0 * bs * libm::pow(r, 1.0 - s) / (s - 1.0);
        let t2 = 2.0 * bs * s * libm::pow(r, -s - 1.0);
        let d = -2.0 * bs * libm::pow(r, 1.0 - s);
        return (t0 / vol, [[t2 / vol, 0.0], [0.0, 0.0]], [[d / vol, 0.0], [0.0, 0.0]]);
    }
    let gl = GaussLegendre::new(32);
    let mut t0 = 0.0;
    let mut t2 = [[0.0; 2]; 2];
    for oct in 0..8 {
        let a = oct as f64 * PI / 4.0;
        for (th, wt) in gl.mapped(a, a + PI / 4.0) {
            let e = [libm::cos(th), libm::sin(th)];
            let rho = r / e[0].abs().max(e[1].abs());
            let q = quad_form(b, e);
            let be = mat_vec(b, e);
            t0 += wt * libm::pow(q, -0.5 * s) * libm::pow(rho, 2.0 - s) / (s - 2.0);
            let rad = libm::pow(rho, -s) / s;
            for i in 0..2 {
                for j in 0..2 {
                    let h = -s * libm::pow(q, -0.5 * s - 1.0) * b[i][j]
                        + s * (s + 2.0) * libm::pow(q, -0.5 * s - 2.0) * be[i] * be[j];
                    t2[i][j] += wt * h * rad;
                }
            }
        }
    }
    // Flux of G(z) = z F(z) through the square boundary, outward normal.
    let side = GaussLegendre::new(64);
    let mut d = [[0.0; 2]; 2];
    for (t, wt) in side.mapped(-r, r) {
        for (z, nu) in [
            ([r, t], [1.0, 0.0]),
            ([-r, t], [-1.0, 0.0]),
            ([t, r], [0.0, 1.0]),
            ([t, -r], [0.0, -1.0]),
        ] {
            let f = libm::pow(quad_form(b, z), -0.5 * s);
            for i in 0..2 {
                for j in 0..2 {
                    d[i][j] -= wt * z[i] * f * nu[j];
                }
            }
        }
    }
    let scale = |m: Mat| [[m[0][0] / vol, m[0][1] / vol], [m[1][0] / vol, m[1][1] / vol]];
    (t0 / vol, scale(t2), scale(d))
}

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const B2: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let n = 12;
    let mut sum = 0.0;
    for k in 0..n {
        sum += libm::pow(a + k as f64, -s);
    }
    let x = a + n as f64;
    sum += libm::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * libm::pow(x, -s);
    // term_j = B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut xp = libm::pow(x, -s - 1.0);
    for (j, &b) in B2.iter().enumerate() {
        sum += b / fact * rising * xp;
        let jj = 2.0 * (j as f64 + 1.0);
        rising *= (s + jj - 1.0) * (s + jj);
        fact *= (jj + 1.0) * (jj + 2.0);
        xp /= x * x;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    const ID: Mat = [[1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn zeta_values() {
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0) - libm::pow(PI, 4.0) / 90.0).abs() < 1e-14);
        // ζ(s, 1/2) = (2^s − 1) ζ(s)
        let z3 = hurwitz_zeta(3.0, 1.0);
        assert!((hurwitz_zeta(3.0, 0.5) - 7.0 * z3).abs() < 1e-13);
    }

    #[test]
    fn one_dimensional_sums_match_zeta() {
        let near = 2usize;
        let s0 = 2.5;
        let ls = LatticeSums::new(1, ID, s0, 4, near, LatticeDepth::for_dim(1));
        let mut l = [0.0; 4];
        let mut w = [[0.0; 2]; 4];
        for y in [-3.0, -1.1, 0.0, 0.4, 2.9] {
            ls.eval([y, 0.0], &mut l, &mut w);
            let t = y / (2.0 * PI);
            let a = near as f64 + 1.0;
            for j in 0..4 {
                let s = s0 + 2.0 * j as f64;
                let want_l = libm::pow(2.0 * PI, -s) * (hurwitz_zeta(s, a + t) + hurwitz_zeta(s, a - t));
                let want_w =
                    libm::pow(2.0 * PI, 1.0 - s) * (hurwitz_zeta(s - 1.0, a + t) - hurwitz_zeta(s - 1.0, a - t));
                assert!((l[j] - want_l).abs() < 1e-13 * want_l.abs().max(1e-3), "L j={j} y={y}: {} vs {}", l[j], want_l);
                assert!((w[j][0] - want_w).abs() < 1e-10 * want_w.abs().max(1e-3), "W j={j} y={y}: {} vs {}", w[j][0], want_w);
            }
        }
    }

    #[test]
    fn two_dimensional_sums_match_brute_force() {
        let b = [[1.5, 0.5], [0.5, 1.5]];
        let s0 = 3.5;
        let ls = LatticeSums::new(2, b, s0, 2, 1, LatticeDepth::for_dim(2));
        let mut l = [0.0; 2];
        let mut w = [[0.0; 2]; 2];
        let y0 = [1.3, -2.2];
        ls.eval(y0, &mut l, &mut w);
        // Brute force to a large radius plus the continuum remainder.
        let big = 600;
        let mut bl = [0.0; 2];
        let mut bw = [[0.0; 2]; 2];
        for_shells(2, 1, big, |m| {
            let z = [y0[0] + 2.0 * PI * m[0] as f64, y0[1] + 2.0 * PI * m[1] as f64];
            let q = quad_form(&b, z);
            for j in 0..2 {
                let f = libm::pow(q, -0.5 * (s0 + 2.0 * j as f64));
                bl[j] += f;
                bw[j][0] += z[0] * f;
                bw[j][1] += z[1] * f;
            }
        });
        for j in 0..2 {
            let s = s0 + 2.0 * j as f64;
            let (c0, c2, cd) = continuum(2, &b, s, (2 * big + 1) as f64 * PI);
            bl[j] += c0 + 0.5 * (y0[0] * (c2[0][0] * y0[0] + c2[0][1] * y0[1]) + y0[1] * (c2[1][0] * y0[0] + c2[1][1] * y0[1]));
            bw[j][0] += cd[0][0] * y0[0] + cd[0][1] * y0[1];
            bw[j][1] += cd[1][0] * y0[0] + cd[1][1] * y0[1];
            assert!((l[j] - bl[j]).abs() < 2e-8 * bl[j], "{} vs {}", l[j], bl[j]);
            assert!((w[j][0] - bw[j][0]).abs() < 1e-9 && (w[j][1] - bw[j][1]).abs() < 1e-9, "{:?} vs {:?}", w[j], bw[j]);
        }
    }
}
