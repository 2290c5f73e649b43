//! Singular-integral evaluation of the nonlocal mean curvature
//!
//! ```text
//! H_α(u)(x) = −(2/α) ∫ (δu − y·∇u(x−y)) / (|y|² + δu²)^p dy,   δu = u(x) − u(x−y)
//!           = −PV∫ |y|^{−n−α} Ψ(δu/|y|) dy,                      Ψ(ξ) = F(ξ) − F(−ξ)
//! ```
//!
//! with `p = (n+1+α)/2`, of the quasilinear operator `Φ(u)[v]`, and of the
//! frozen-slope operator `A^a`.
//!
//! Quadrature layout, shared by every operator here:
//! * the reference cell `[-π, π]^n` in polar coordinates around the
//!   singularity: a graded radial rule `r = r₀ s^{2/(1−α)}` on `[0, r₀]`, then
//!   geometric Gauss panels out to the cell boundary. Nodes come in antipodal
//!   pairs `(y, −y)`.
//! * the lattice translates `0 < |m|∞ ≤ M` of a tensor Gauss rule on the cell;
//! * everything beyond, folded back onto the same tensor nodes with the
//!   lattice sums of [`crate::lattice`], after expanding the kernel in
//!   powers of `δu²/|y|²`.
//!
//! For each node, differences such as `u(x) − u(x−y)` are produced for all
//! grid points `x` at once, by one inverse FFT of `û(k)` times a multiplier in
//! `z = k·y`. The multipliers use series for small `z`, so the `O(|y|²)`
//! numerators never suffer cancellation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{FftWork, GridFft};
use crate::field::{gradient, oscillation, to_spectral, GridSpec, PeriodicField, SpectralField};
use crate::lattice::{LatticeDepth, LatticeSums};
use crate::par;
use crate::quadrature::{Adaptive, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    alpha: f64,
    dim: usize,
}

impl FlowParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter("order out of range: α must lie in (0, 1)"));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter("dimension must be 1 or 2"));
        }
        Ok(FlowParams { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(n + 1 + α) / 2`
    pub fn p(&self) -> f64 {
        0.5 * (self.dim as f64 + 1.0 + self.alpha)
    }

    /// Grading exponent `2/(1−α)` for the inner radial rule.
    pub fn grading(&self) -> f64 {
        2.0 / (1.0 - self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureScheme {
    /// Radius `r₀` of the graded disc around the singularity.
    pub inner_radius: f64,
    /// Gauss nodes of the graded radial rule on `[0, r₀]`.
    pub inner_radial_nodes: usize,
    /// Gauss nodes per geometric radial panel on `[r₀, boundary]`.
    pub outer_radial_nodes: usize,
    /// Gauss nodes per octant of the angle (2D only).
    pub inner_angular_nodes: usize,
    /// `M`: lattice translates with `|m|∞ ≤ M` are integrated directly.
    pub lattice_cells: usize,
    /// Tensor Gauss order per axis on each lattice cell.
    pub cell_nodes_per_axis: usize,
    /// Terms of the far-field expansion in `δu²/|y|²`.
    pub far_terms: usize,
}

impl QuadratureScheme {
    /// Node counts sized for fields whose spectrum lives in `|k|∞ ≤ kmax`.
    pub fn resolving(dim: usize, kmax: usize) -> Self {
        let k = kmax.max(1) as f64;
        if dim == 1 {
            QuadratureScheme {
                inner_radius: (3.0 / k).min(PI / 4.0),
                inner_radial_nodes: 40,
                outer_radial_nodes: 16 + libm::ceil(0.6 * k) as usize,
                inner_angular_nodes: 1,
                lattice_cells: 4,
                cell_nodes_per_axis: 24 + libm::ceil(3.0 * k) as usize,
                far_terms: 12,
            }
        } else {
            QuadratureScheme {
                inner_radius: (3.0 / k).min(PI / 4.0),
                inner_radial_nodes: 16,
                outer_radial_nodes: 6 + libm::ceil(0.5 * k) as usize,
                inner_angular_nodes: 4 + kmax.max(1),
                lattice_cells: 1,
                cell_nodes_per_axis: 8 + 2 * kmax.max(1),
                far_terms: 10,
            }
        }
    }

    /// Default for a grid: resolves random probe fields with `|k| ≤ m/4`.
    pub fn for_grid(grid: GridSpec) -> Self {
        let mut s = Self::resolving(grid.dim(), grid.points_per_axis() / 4);
        if grid.dim() == 2 {
            s.lattice_cells = 2;
        }
        s
    }

    pub fn with_cells(mut self, m: usize) -> Self {
        self.lattice_cells = m;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.inner_radius > 0.0 && self.inner_radius <= PI) {
            return Err(Error::InvalidParameter("inner radius must lie in (0, π]"));
        }
        if self.inner_radial_nodes < 2 || self.outer_radial_nodes < 2 || self.cell_nodes_per_axis < 2 {
            return Err(Error::InvalidParameter("node counts must be at least 2"));
        }
        if dim == 2 && self.inner_angular_nodes < 2 {
            return Err(Error::InvalidParameter("angular node count must be at least 2"));
        }
        if self.lattice_cells < 1 {
            return Err(Error::InvalidParameter("at least one lattice shell is required"));
        }
        if self.far_terms < 1 || self.far_terms > 40 {
            return Err(Error::InvalidParameter("far-field terms must lie in 1..=40"));
        }
        Ok(())
    }

    /// `R = (2M+1)π`, the half-width of the directly integrated square.
    pub fn tail_radius(&self) -> f64 {
        (2 * self.lattice_cells + 1) as f64 * PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureForm {
    GradientCorrected,
    PrincipalValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureResult {
    pub value: f64,
    pub tail_bound: f64,
    pub form: CurvatureForm,
}

/// `binom(−p, j)` for `j < n`.
pub(crate) fn neg_binomials(p: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 1.0;
    for j in 0..n {
        out.push(c);
        c *= (-p - j as f64) / (j as f64 + 1.0);
    }
    out
}

/// `F(ξ) = ∫_ξ^∞ (1+τ²)^{−p} dτ` by adaptive quadrature after `τ = tan θ`.
pub fn f_eval(xi: f64, params: &FlowParams) -> f64 {
    let q = 2.0 * params.p() - 2.0;
    let lo = libm::atan(xi);
    Adaptive::with_tol(1e-13).integrate(lo, 0.5 * PI, |t| libm::pow(libm::cos(t), q)).value
}

/// `F'(ξ) = −(1+ξ²)^{−p}`
pub fn f_prime(xi: f64, params: &FlowParams) -> f64 {
    -libm::pow(1.0 + xi * xi, -params.p())
}

/// `(2/α)(1+s²)^{−p}`
pub fn f_small(s: f64, params: &FlowParams) -> f64 {
    2.0 / params.alpha * libm::pow(1.0 + s * s, -params.p())
}

/// Fast evaluation of `(1+t)^{−p}`, `Ψ` and its divided differences for one
/// parameter set.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    p: f64,
    binom: Vec<f64>,
    psi_small: Vec<f64>,
    psi_large: Vec<f64>,
    f0: f64,
    q: f64,
    gl: GaussLegendre,
    gl_dd: GaussLegendre,
}

const SMALL_T: f64 = 0.05;

impl Profile {
    pub(crate) fn new(params: &FlowParams) -> Self {
        let p = params.p();
        let binom = neg_binomials(p, 32);
        let psi_small = binom.iter().take(16).enumerate().map(|(j, b)| -2.0 * b / (2.0 * j as f64 + 1.0)).collect();
        let psi_large = binom.iter().enumerate().map(|(j, b)| b / (2.0 * p + 2.0 * j as f64 - 1.0)).collect();
        let f0 = 0.5 * libm::tgamma(0.5) * libm::tgamma(p - 0.5) / libm::tgamma(p);
        Profile { p, binom, psi_small, psi_large, f0, q: 2.0 * p - 2.0, gl: GaussLegendre::new(24), gl_dd: GaussLegendre::new(6) }
    }

    #[inline]
    pub(crate) fn pow_m_p(&self, t: f64) -> f64 {
        if t <= SMALL_T {
            let mut acc = 0.0;
            for c in self.binom[..14].iter().rev() {
                acc = acc * t + c;
            }
            acc
        } else {
            libm::pow(1.0 + t, -self.p)
        }
    }

    /// `Ψ(ξ) = −2∫_0^ξ (1+τ²)^{−p} dτ`
    pub(crate) fn psi(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let v = if a <= 0.25 {
            let t = a * a;
            let mut acc = 0.0;
            for c in self.psi_small.iter().rev() {
                acc = acc * t + c;
            }
            acc * a
        } else if a <= 2.0 {
            let top = libm::atan(a);
            -2.0 * self.gl.integrate(0.0, top, |th| libm::pow(libm::cos(th), self.q))
        } else {
            // F(a) = Σ_j binom(−p,j) a^{1−2p−2j}/(2p+2j−1)
            let inv = 1.0 / (a * a);
            let mut acc = 0.0;
            for c in self.psi_large.iter().rev() {
                acc = acc * inv + c;
            }
            let fa = acc * libm::pow(a, 1.0 - 2.0 * self.p);
            -2.0 * (self.f0 - fa)
        };
        if xi < 0.0 {
            -v
        } else {
            v
        }
    }

    #[inline]
    fn psi_prime(&self, xi: f64) -> f64 {
        -2.0 * self.pow_m_p(xi * xi)
    }

    /// `(Ψ(a) − Ψ(b)) / (a − b)`, stable as `a → b`.
    pub(crate) fn psi_divided(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        if d.abs() <= 0.05 {
            let c = 0.5 * (a + b);
            let h = 0.5 * d;
            let mut acc = 0.0;
            for (x, w) in self.gl_dd.nodes.iter().zip(&self.gl_dd.weights) {
                acc += w * self.psi_prime(c + h * x);
            }
            0.5 * acc
        } else {
            (self.psi(a) - self.psi(b)) / d
        }
    }
}

/// Pair of the graded polar region: `y` and `−y` share the weight.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CenterNode {
    pub y: [f64; 2],
    pub r: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BaseNode {
    pub y: [f64; 2],
    pub w: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct NodeSet {
    pub center: Vec<CenterNode>,
    pub base: Vec<BaseNode>,
    /// Offsets `2πm`, `0 < |m|∞ ≤ M`.
    pub cells: Vec<[f64; 2]>,
}

/// Radial Gauss nodes (r, weight incl. dr) on `[0, rho]`.
fn radial_rule(params: &FlowParams, scheme: &QuadratureScheme, rho: f64) -> Vec<(f64, f64)> {
    let r0 = scheme.inner_radius.min(rho);
    let q = params.grading();
    let mut out = Vec::new();
    for (s, w) in GaussLegendre::new(scheme.inner_radial_nodes).mapped(0.0, 1.0) {
        let r = r0 * libm::pow(s, q);
        out.push((r, w * r0 * q * libm::pow(s, q - 1.0)));
    }
    // Geometric panels, none longer than one radian.
    let gl = GaussLegendre::new(scheme.outer_radial_nodes);
    let mut a = r0;
    while a < rho * (1.0 - 1e-14) {
        let b = (2.0 * a).min(a + 1.0).min(rho);
        let b = if rho - b < 0.25 * (b - a) { rho } else { b };
        out.extend(gl.mapped(a, b));
        a = b;
    }
    out
}

impl NodeSet {
    pub(crate) fn new(params: &FlowParams, scheme: &QuadratureScheme) -> Self {
        let dim = params.dim;
        let mut center = Vec::new();
        if dim == 1 {
            for (r, w) in radial_rule(params, scheme, PI) {
                center.push(CenterNode { y: [r, 0.0], r, w });
            }
        } else {
            // Octants 0..4 cover the half-plane; octant j+4 is the antipode.
            let ang = GaussLegendre::new(scheme.inner_angular_nodes);
            for oct in 0..4 {
                let a = oct as f64 * PI / 4.0;
                for (th, wt) in ang.mapped(a, a + PI / 4.0) {
                    let e = [libm::cos(th), libm::sin(th)];
                    let rho = PI / e[0].abs().max(e[1].abs());
                    for (r, w) in radial_rule(params, scheme, rho) {
                        center.push(CenterNode { y: [r * e[0], r * e[1]], r, w: wt * w * r });
                    }
                }
            }
        }
        let gl = GaussLegendre::new(scheme.cell_nodes_per_axis);
        let pts: Vec<(f64, f64)> = gl.mapped(-PI, PI).collect();
        let mut base = Vec::new();
        if dim == 1 {
            for &(y, w) in &pts {
                base.push(BaseNode { y: [y, 0.0], w });
            }
        } else {
            for &(y0, w0) in &pts {
                for &(y1, w1) in &pts {
                    base.push(BaseNode { y: [y0, y1], w: w0 * w1 });
                }
            }
        }
        let big = scheme.lattice_cells as i64;
        let mut cells = Vec::new();
        let range = if dim == 1 { 0..=0 } else { -big..=big };
        for a in -big..=big {
            for b in range.clone() {
                if a == 0 && b == 0 {
                    continue;
                }
                cells.push([2.0 * PI * a as f64, 2.0 * PI * b as f64]);
            }
        }
        NodeSet { center, base, cells }
    }
}

/// Wave numbers per axis in FFT order, with Nyquist entries flagged.
#[derive(Debug, Clone)]
pub(crate) struct Modes {
    pub grid: GridSpec,
    k: Vec<f64>,
    nyq: Vec<bool>,
}

impl Modes {
    pub(crate) fn new(grid: GridSpec) -> Self {
        let m = grid.points_per_axis();
        let k = (0..m).map(|i| grid.wave(i) as f64).collect();
        let nyq = (0..m).map(|i| 2 * i == m).collect();
        Modes { grid, k, nyq }
    }

    /// Fills `buf[idx] = fa(z, e)·a[idx] + i·fb(z, e)·b[idx]`, where
    /// `z = k·y`, `e = e^{−iz}`; Nyquist modes are dropped.
    pub(crate) fn pack<FA, FB>(
        &self,
        y: [f64; 2],
        a: &[Complex64],
        fa: FA,
        b: Option<(&[Complex64], FB)>,
        phase: &mut [Vec<Complex64>; 2],
        buf: &mut Vec<Complex64>,
    ) where
        FA: Fn(f64, Complex64) -> Complex64,
        FB: Fn(f64, Complex64) -> Complex64,
    {
        let g = self.grid;
        let m = g.points_per_axis();
        for ax in 0..g.dim() {
            phase[ax].clear();
            for &k in &self.k {
                let t = k * y[ax];
                phase[ax].push(Complex64::new(libm::cos(t), -libm::sin(t)));
            }
        }
        buf.clear();
        buf.resize(g.len(), Complex64::new(0.0, 0.0));
        let i_unit = Complex64::new(0.0, 1.0);
        let mut put = |idx: usize, z: f64, e: Complex64| {
            let mut v = fa(z, e) * a[idx];
            if let Some((bb, ref fb)) = b {
                v += i_unit * fb(z, e) * bb[idx];
            }
            buf[idx] = v;
        };
        if g.dim() == 1 {
            for i in 0..m {
                if self.nyq[i] {
                    continue;
                }
                put(i, self.k[i] * y[0], phase[0][i]);
            }
        } else {
            for i in 0..m {
                if self.nyq[i] {
                    continue;
                }
                for j in 0..m {
                    if self.nyq[j] {
                        continue;
                    }
                    let z = self.k[i] * y[0] + self.k[j] * y[1];
                    put(i * m + j, z, phase[0][i] * phase[1][j]);
                }
            }
        }
    }

    /// `∇v(x−y)`: axis 0 in the real slot, axis 1 in the imaginary slot.
    pub(crate) fn pack_grad(&self, y: [f64; 2], v: &[Complex64], phase: &mut [Vec<Complex64>; 2], buf: &mut Vec<Complex64>) {
        let g = self.grid;
        let m = g.points_per_axis();
        let i_unit = Complex64::new(0.0, 1.0);
        if g.dim() == 1 {
            self.pack(y, v, |_, e| i_unit * e, None::<(&[Complex64], fn(f64, Complex64) -> Complex64)>, phase, buf);
            for i in 0..m {
                buf[i] *= self.k[i];
            }
        } else {
            self.pack(y, v, |_, e| i_unit * e, None::<(&[Complex64], fn(f64, Complex64) -> Complex64)>, phase, buf);
            for i in 0..m {
                for j in 0..m {
                    let idx = i * m + j;
                    let a = buf[idx];
                    buf[idx] = a * self.k[i] + i_unit * a * self.k[j];
                }
            }
        }
    }
}

/// `1 − e^{−iz}`
#[inline]
pub(crate) fn mult_delta(z: f64, e: Complex64) -> Complex64 {
    if z.abs() < 0.5 {
        let w = Complex64::new(0.0, -z);
        let mut term = w;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..20 {
            acc -= term;
            term = term * w / (j as f64 + 1.0);
        }
        acc
    } else {
        Complex64::new(1.0, 0.0) - e
    }
}

/// `1 − e^{−iz} − iz e^{−iz}`
#[inline]
pub(crate) fn mult_phi(z: f64, e: Complex64) -> Complex64 {
    if z.abs() < 0.5 {
        let w = Complex64::new(0.0, -z);
        let mut term = w * w * 0.5;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 2..22 {
            acc += term * (j as f64 - 1.0);
            term = term * w / (j as f64 + 1.0);
        }
        acc
    } else {
        Complex64::new(1.0, 0.0) - e - Complex64::new(0.0, z) * e
    }
}

/// `2u(x) − u(x−y) − u(x+y)` multiplier, `4 sin²(z/2)`.
#[inline]
pub(crate) fn mult_second(z: f64, _e: Complex64) -> Complex64 {
    let s = libm::sin(0.5 * z);
    Complex64::new(4.0 * s * s, 0.0)
}

#[inline]
fn conj_of<F: Fn(f64, Complex64) -> Complex64>(f: F) -> impl Fn(f64, Complex64) -> Complex64 {
    move |z, e| f(-z, e.conj())
}

/// Reusable per-chunk buffers.
struct Work {
    phase: [Vec<Complex64>; 2],
    buf: Vec<Complex64>,
    buf2: Vec<Complex64>,
    fft: FftWork,
    acc: Vec<f64>,
}

impl Work {
    fn new(len: usize) -> Self {
        Work {
            phase: [Vec::new(), Vec::new()],
            buf: Vec::new(),
            buf2: Vec::new(),
            fft: FftWork::default(),
            acc: vec![0.0; len],
        }
    }
}

const CHUNK: usize = 16;

/// Field-wide evaluator for one grid, parameter set and scheme. Node sets,
/// kernel powers and lattice sums are computed once here.
#[derive(Debug, Clone)]
pub struct Curvature {
    params: FlowParams,
    scheme: QuadratureScheme,
    grid: GridSpec,
    modes: Modes,
    fft: GridFft,
    nodes: NodeSet,
    profile: Profile,
    /// Per base node × far term: `L_j`, `W_j`.
    far_l: Vec<f64>,
    far_w: Vec<[f64; 2]>,
    /// Per base node × near cell: `|y|`.
    cell_r: Vec<f64>,
    far_radius: f64,
}

impl Curvature {
    pub fn new(grid: GridSpec, params: FlowParams, scheme: QuadratureScheme) -> Result<Self> {
        if grid.dim() != params.dim {
            return Err(Error::InvalidParameter("grid and parameter dimensions differ"));
        }
        scheme.validate(params.dim)?;
        let nodes = NodeSet::new(&params, &scheme);
        let terms = scheme.far_terms;
        let ident = [[1.0, 0.0], [0.0, 1.0]];
        let lat = LatticeSums::new(params.dim, ident, 2.0 * params.p(), terms, scheme.lattice_cells, LatticeDepth::for_dim(params.dim));
        let per_base: Vec<(Vec<f64>, Vec<[f64; 2]>)> = par::map_indexed(nodes.base.len(), |b| {
            let mut l = vec![0.0; terms];
            let mut w = vec![[0.0; 2]; terms];
            lat.eval(nodes.base[b].y, &mut l, &mut w);
            (l, w)
        });
        let mut far_l = Vec::with_capacity(nodes.base.len() * terms);
        let mut far_w = Vec::with_capacity(nodes.base.len() * terms);
        for (l, w) in per_base {
            far_l.extend(l);
            far_w.extend(w);
        }
        let mut cell_r = Vec::with_capacity(nodes.base.len() * nodes.cells.len());
        for b in &nodes.base {
            for c in &nodes.cells {
                cell_r.push(libm::hypot(b.y[0] + c[0], b.y[1] + c[1]));
            }
        }
        Ok(Curvature {
            params,
            scheme,
            grid,
            modes: Modes::new(grid),
            fft: grid.plan(),
            profile: Profile::new(&params),
            far_radius: scheme.tail_radius(),
            nodes,
            far_l,
            far_w,
            cell_r,
        })
    }

    pub fn params(&self) -> FlowParams {
        self.params
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn node_counts(&self) -> (usize, usize, usize) {
        (2 * self.nodes.center.len(), self.nodes.base.len(), self.nodes.cells.len())
    }

    fn check(&self, f: &PeriodicField) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `H_α(u)` at every node.
    pub fn curvature(&self, u: &PeriodicField, form: CurvatureForm) -> Result<Vec<f64>> {
        self.check(u)?;
        let uh = to_spectral(u);
        Ok(match form {
            CurvatureForm::GradientCorrected => {
                let s = self.nmc_integral(&uh, None);
                let c = -2.0 / self.params.alpha;
                s.into_iter().map(|v| c * v).collect()
            }
            CurvatureForm::PrincipalValue => self.pv_integral(&uh),
        })
    }

    /// `Φ(u)[v]` at every node.
    pub fn phi(&self, u: &PeriodicField, v: &PeriodicField) -> Result<PeriodicField> {
        self.check(u)?;
        self.check(v)?;
        let uh = to_spectral(u);
        let s = if u == v {
            self.nmc_integral(&uh, None)
        } else {
            // δu and δv share FFTs; bring v to u's scale first.
            let mut vh = to_spectral(v);
            let nu = coeff_scale(&uh);
            let nv = coeff_scale(&vh);
            if nv == 0.0 {
                return Ok(PeriodicField::constant(self.grid, 0.0));
            }
            let f = if nu > 0.0 { nu / nv } else { 1.0 / nv };
            vh.coeffs_mut().iter_mut().for_each(|c| *c *= f);
            let s = self.nmc_integral(&uh, Some(&vh));
            s.into_iter().map(|x| x / f).collect()
        };
        let grads = gradient(u);
        let c = 2.0 / self.params.alpha;
        let vals = (0..self.grid.len())
            .map(|i| {
                let g2: f64 = grads.iter().map(|g| g.values()[i] * g.values()[i]).sum();
                c * libm::sqrt(1.0 + g2) * s[i]
            })
            .collect();
        Ok(PeriodicField::from_raw(self.grid, vals))
    }

    /// Bound on the `|y|∞ > R` part of the integral, for either form.
    pub fn tail_bound(&self, u: &PeriodicField) -> f64 {
        tail_bound_value(oscillation(u), &self.params, &self.scheme)
    }

    /// `∫ N_v(y) / (|y|² + δu²)^p dy` at every node, `N_v = δv − y·∇v(x−y)`.
    fn nmc_integral(&self, uh: &SpectralField, vh: Option<&SpectralField>) -> Vec<f64> {
        let len = self.grid.len();
        let p = self.params.p();
        let ua = uh.coeffs();
        let va = vh.map(|v| v.coeffs()).unwrap_or(ua);
        let prof = &self.profile;
        let center = par::map_chunks(&self.nodes.center, CHUNK, |nodes| {
            let mut wk = Work::new(len);
            for nd in nodes {
                self.modes.pack(nd.y, va, mult_phi, Some((va, conj_of(mult_phi))), &mut wk.phase, &mut wk.buf);
                self.fft.inverse(&mut wk.buf, &mut wk.fft);
                self.modes.pack(nd.y, ua, mult_delta, Some((ua, conj_of(mult_delta))), &mut wk.phase, &mut wk.buf2);
                self.fft.inverse(&mut wk.buf2, &mut wk.fft);
                let inv_r = 1.0 / nd.r;
                let scale = nd.w * libm::pow(nd.r, -2.0 * p);
                for x in 0..len {
                    let n = wk.buf[x];
                    let d = wk.buf2[x];
                    let kp = prof.pow_m_p(d.re * d.re * inv_r * inv_r);
                    let km = prof.pow_m_p(d.im * d.im * inv_r * inv_r);
                    wk.acc[x] += scale * (n.re * kp + n.im * km);
                }
            }
            wk.acc
        });
        let cells = par::map_chunks(&self.index_base(), CHUNK, |idx| {
            let mut wk = Work::new(len);
            let dim = self.grid.dim();
            let mut dv = vec![0.0; len];
            let mut du = vec![0.0; len];
            let mut gv = [vec![0.0; len], vec![0.0; len]];
            for &b in idx {
                let nd = self.nodes.base[b];
                // δu and δv, then the gradient components of v at x − y₀.
                self.modes.pack(nd.y, ua, mult_delta, Some((va, mult_delta)), &mut wk.phase, &mut wk.buf);
                self.fft.inverse(&mut wk.buf, &mut wk.fft);
                for x in 0..len {
                    du[x] = wk.buf[x].re;
                    dv[x] = wk.buf[x].im;
                }
                self.modes.pack_grad(nd.y, va, &mut wk.phase, &mut wk.buf);
                self.fft.inverse(&mut wk.buf, &mut wk.fft);
                for x in 0..len {
                    gv[0][x] = wk.buf[x].re;
                    gv[1][x] = if dim == 2 { wk.buf[x].im } else { 0.0 };
                }
                self.nmc_cells_accumulate(b, nd, &du, &dv, &gv, &mut wk.acc);
            }
            wk.acc
        });
        sum_ordered(len, center.into_iter().chain(cells))
    }

    fn index_base(&self) -> Vec<usize> {
        (0..self.nodes.base.len()).collect()
    }

    fn nmc_cells_accumulate(&self, b: usize, nd: BaseNode, du: &[f64], dv: &[f64], gv: &[Vec<f64>; 2], acc: &mut [f64]) {
        let p = self.params.p();
        let prof = &self.profile;
        let nc = self.nodes.cells.len();
        let terms = self.scheme.far_terms;
        let rads = &self.cell_r[b * nc..(b + 1) * nc];
        let pows: Vec<f64> = rads.iter().map(|&r| libm::pow(r, -2.0 * p)).collect();
        let inv2: Vec<f64> = rads.iter().map(|&r| 1.0 / (r * r)).collect();
        let fl = &self.far_l[b * terms..(b + 1) * terms];
        let fw = &self.far_w[b * terms..(b + 1) * terms];
        let rf2 = self.far_radius * self.far_radius;
        for x in 0..acc.len() {
            let (d_u, d_v, g0, g1) = (du[x], dv[x], gv[0][x], gv[1][x]);
            let d2 = d_u * d_u;
            let mut s = 0.0;
            for (ci, c) in self.nodes.cells.iter().enumerate() {
                let y0 = nd.y[0] + c[0];
                let y1 = nd.y[1] + c[1];
                let num = d_v - y0 * g0 - y1 * g1;
                s += num * pows[ci] * prof.pow_m_p(d2 * inv2[ci]);
            }
            if d2 < 0.1 * rf2 {
                let mut dp = 1.0;
                for j in 0..terms {
                    s += prof.binom[j] * dp * (d_v * fl[j] - g0 * fw[j][0] - g1 * fw[j][1]);
                    dp *= d2;
                }
            } else {
                s += self.far_direct(nd.y, |y, r| {
                    let num = d_v - y[0] * g0 - y[1] * g1;
                    num * libm::pow(r * r + d2, -p)
                });
            }
            acc[x] += nd.w * s;
        }
    }

    /// Plain truncated far sum over a few extra shells; only used when the
    /// far expansion does not converge (huge amplitudes).
    fn far_direct<F: Fn([f64; 2], f64) -> f64>(&self, y0: [f64; 2], f: F) -> f64 {
        let m = self.scheme.lattice_cells as i64;
        let extra = m + 8;
        let mut s = 0.0;
        let dim = self.grid.dim();
        let range2 = if dim == 1 { 0..=0 } else { -extra..=extra };
        for a in -extra..=extra {
            for b in range2.clone() {
                if a.abs().max(b.abs()) <= m {
                    continue;
                }
                let y = [y0[0] + 2.0 * PI * a as f64, y0[1] + 2.0 * PI * b as f64];
                s += f(y, libm::hypot(y[0], y[1]));
            }
        }
        s
    }

    /// `H_α(u)` in the principal-value form.
    fn pv_integral(&self, uh: &SpectralField) -> Vec<f64> {
        let len = self.grid.len();
        let na = self.grid.dim() as f64 + self.params.alpha;
        let ua = uh.coeffs();
        let prof = &self.profile;
        let center = par::map_chunks(&self.nodes.center, CHUNK, |nodes| {
            let mut wk = Work::new(len);
            for nd in nodes {
                // Both slots are O(r), so neither drowns the other in roundoff.
                let inv_r = 1.0 / nd.r;
                let sec = |z: f64, e: Complex64| mult_second(z, e) * inv_r;
                self.modes.pack(nd.y, ua, mult_delta, Some((ua, sec)), &mut wk.phase, &mut wk.buf);
                self.fft.inverse(&mut wk.buf, &mut wk.fft);
                let scale = -nd.w * libm::pow(nd.r, -na);
                for x in 0..len {
                    let xi = wk.buf[x].re * inv_r;
                    let sigma = wk.buf[x].im;
                    if sigma == 0.0 {
                        continue;
                    }
                    wk.acc[x] += scale * sigma * prof.psi_divided(xi, xi - sigma);
                }
            }
            wk.acc
        });
        let cells = par::map_chunks(&self.index_base(), CHUNK, |idx| {
            let mut wk = Work::new(len);
            let nc = self.nodes.cells.len();
            let terms = self.scheme.far_terms;
            let rf2 = self.far_radius * self.far_radius;
            for &b in idx {
                let nd = self.nodes.base[b];
                self.modes.pack(nd.y, ua, mult_delta, None::<(&[Complex64], fn(f64, Complex64) -> Complex64)>, &mut wk.phase, &mut wk.buf);
                self.fft.inverse(&mut wk.buf, &mut wk.fft);
                let rads = &self.cell_r[b * nc..(b + 1) * nc];
                let pows: Vec<f64> = rads.iter().map(|&r| libm::pow(r, -na)).collect();
                let fl = &self.far_l[b * terms..(b + 1) * terms];
                for x in 0..len {
                    let d = wk.buf[x].re;
                    let mut h = 0.0;
                    for ci in 0..nc {
                        h -= pows[ci] * prof.psi(d / rads[ci]);
                    }
                    let d2 = d * d;
                    if d2 < 0.1 * rf2 {
                        let mut dp = d;
                        for j in 0..terms {
                            h += 2.0 * prof.binom[j] / (2.0 * j as f64 + 1.0) * dp * fl[j];
                            dp *= d2;
                        }
                    } else {
                        h -= self.far_direct(nd.y, |_, r| libm::pow(r, -na) * prof.psi(d / r));
                    }
                    wk.acc[x] += nd.w * h;
                }
            }
            wk.acc
        });
        sum_ordered(len, center.into_iter().chain(cells))
    }
}

fn coeff_scale(s: &SpectralField) -> f64 {
    s.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn sum_ordered<I: Iterator<Item = Vec<f64>>>(len: usize, parts: I) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for part in parts {
        for (o, v) in out.iter_mut().zip(&part) {
            *o += v;
        }
    }
    out
}

impl Curvature {
    /// `A^a[v] = (2/α) ∫ N_v(y) |y|^{−n−1−α} (1 + (y·a/|y|)²)^{−p} dy`, the
    /// curvature operator with the difference quotient of `u` frozen at `a`.
    pub fn frozen(&self, a: [f64; 2], v: &PeriodicField) -> Result<PeriodicField> {
        self.check(v)?;
        let dim = self.grid.dim();
        let a = if dim == 1 { [a[0], 0.0] } else { a };
        let p = self.params.p();
        let len = self.grid.len();
        let vh = to_spectral(v);
        let va = vh.coeffs();
        let b = [[1.0 + a[0] * a[0], a[0] * a[1]], [a[0] * a[1], 1.0 + a[1] * a[1]]];
        let lat = LatticeSums::new(dim, b, 2.0 * p, 1, self.scheme.lattice_cells, LatticeDepth::for_dim(dim));
        let quad = |y: [f64; 2]| {
            let ya = y[0] * a[0] + y[1] * a[1];
            libm::pow(y[0] * y[0] + y[1] * y[1] + ya * ya, -p)
        };
        let none = None::<(&[Complex64], fn(f64, Complex64) -> Complex64)>;
        let center = par::map_chunks(&self.nodes.center, CHUNK, |nodes| {
            let mut wk = Work::new(len);
            for nd in nodes {
                // N_v(y) + N_v(−y); both see the same kernel value.
                let pair = |z: f64, e: Complex64| mult_phi(z, e) + mult_phi(-z, e.conj());
                self.modes.pack(nd.y, va, pair, none, &mut wk.phase, &mut wk.buf);
                self.fft.inverse(&mut wk.buf, &mut wk.fft);
                let kq = nd.w * quad(nd.y);
                for x in 0..len {
                    wk.acc[x] += kq * wk.buf[x].re;
                }
            }
            wk.acc
        });
        let cells = par::map_chunks(&self.index_base(), CHUNK, |idx| {
            let mut wk = Work::new(len);
            let mut l = [0.0];
            let mut w = [[0.0; 2]];
            let mut kc = vec![0.0; self.nodes.cells.len()];
            for &bi in idx {
                let nd = self.nodes.base[bi];
                lat.eval(nd.y, &mut l, &mut w);
                for (ci, c) in self.nodes.cells.iter().enumerate() {
                    kc[ci] = quad([nd.y[0] + c[0], nd.y[1] + c[1]]);
                }
                let lsum: f64 = l[0] + kc.iter().sum::<f64>();
                let mut wsum = w[0];
                for (ci, c) in self.nodes.cells.iter().enumerate() {
                    wsum[0] += (nd.y[0] + c[0]) * kc[ci];
                    wsum[1] += (nd.y[1] + c[1]) * kc[ci];
                }
                self.modes.pack(nd.y, va, mult_delta, none, &mut wk.phase, &mut wk.buf);
                self.fft.inverse(&mut wk.buf, &mut wk.fft);
                self.modes.pack_grad(nd.y, va, &mut wk.phase, &mut wk.buf2);
                self.fft.inverse(&mut wk.buf2, &mut wk.fft);
                for x in 0..len {
                    let g = wk.buf2[x];
                    let g1 = if dim == 2 { g.im } else { 0.0 };
                    wk.acc[x] += nd.w * (wk.buf[x].re * lsum - g.re * wsum[0] - g1 * wsum[1]);
                }
            }
            wk.acc
        });
        let c = 2.0 / self.params.alpha;
        let vals = sum_ordered(len, center.into_iter().chain(cells)).into_iter().map(|s| c * s).collect();
        Ok(PeriodicField::from_raw(self.grid, vals))
    }
}

/// Weighted nodes for the frozen symbol: because `k` is an integer vector,
/// every lattice translate of a cell node shares `cos(y₀·k)`, so the whole
/// lattice folds into one weight per cell node.
#[derive(Debug, Clone)]
pub(crate) struct FrozenSymbolNodes {
    pub pts: Vec<([f64; 2], f64)>,
}

impl FrozenSymbolNodes {
    pub(crate) fn new(nodes: &NodeSet, params: &FlowParams, scheme: &QuadratureScheme, a: [f64; 2]) -> Self {
        let dim = params.dim;
        let a = if dim == 1 { [a[0], 0.0] } else { a };
        let p = params.p();
        let quad = |y: [f64; 2]| {
            let ya = y[0] * a[0] + y[1] * a[1];
            libm::pow(y[0] * y[0] + y[1] * y[1] + ya * ya, -p)
        };
        let b = [[1.0 + a[0] * a[0], a[0] * a[1]], [a[0] * a[1], 1.0 + a[1] * a[1]]];
        let lat = LatticeSums::new(dim, b, 2.0 * p, 1, scheme.lattice_cells, LatticeDepth::for_dim(dim));
        let mut pts: Vec<([f64; 2], f64)> = nodes.center.iter().map(|nd| (nd.y, 2.0 * nd.w * quad(nd.y))).collect();
        let base: Vec<([f64; 2], f64)> = par::map_indexed(nodes.base.len(), |bi| {
            let nd = nodes.base[bi];
            let mut l = [0.0];
            let mut w = [[0.0; 2]];
            lat.eval(nd.y, &mut l, &mut w);
            let near: f64 = nodes.cells.iter().map(|c| quad([nd.y[0] + c[0], nd.y[1] + c[1]])).sum();
            (nd.y, nd.w * (l[0] + near))
        });
        pts.extend(base);
        FrozenSymbolNodes { pts }
    }

    pub(crate) fn eval(&self, k: [i64; 2]) -> f64 {
        let mut acc = 0.0;
        for &(y, w) in &self.pts {
            let z = y[0] * k[0] as f64 + y[1] * k[1] as f64;
            let s = libm::sin(0.5 * z);
            acc += w * 2.0 * s * s;
        }
        -2.0 * acc
    }
}

/// `2·osc(u)·|S^{n−1}|·R^{−1−α}/(1+α)`, with `R = (2M+1)π`. Uses
/// `|Ψ(ξ)| ≤ 2|ξ|` and `|δu| ≤ osc(u)` on `|y| > R`.
pub(crate) fn tail_bound_value(osc: f64, params: &FlowParams, scheme: &QuadratureScheme) -> f64 {
    let sphere = if params.dim == 1 { 2.0 } else { 2.0 * PI };
    let a = params.alpha;
    2.0 * osc * sphere * libm::pow(scheme.tail_radius(), -1.0 - a) / (1.0 + a)
}

pub fn tail_bound(u: &PeriodicField, params: &FlowParams, scheme: &QuadratureScheme) -> f64 {
    tail_bound_value(oscillation(u), params, scheme)
}

/// `H_α(u)(x)` in the gradient-corrected form at grid node `x`.
pub fn h_alpha_point(u: &PeriodicField, x: &[f64], params: &FlowParams, scheme: &QuadratureScheme) -> Result<CurvatureResult> {
    point(u, x, params, scheme, CurvatureForm::GradientCorrected)
}

/// `H_α(u)(x)` in the principal-value form at grid node `x`.
pub fn h_alpha_point_pv(u: &PeriodicField, x: &[f64], params: &FlowParams, scheme: &QuadratureScheme) -> Result<CurvatureResult> {
    point(u, x, params, scheme, CurvatureForm::PrincipalValue)
}

fn point(u: &PeriodicField, x: &[f64], params: &FlowParams, scheme: &QuadratureScheme, form: CurvatureForm) -> Result<CurvatureResult> {
    let idx = u.grid().locate(x)?;
    let eng = Curvature::new(u.grid(), *params, *scheme)?;
    let vals = eng.curvature(u, form)?;
    Ok(CurvatureResult { value: vals[idx], tail_bound: eng.tail_bound(u), form })
}

/// `Φ(u)[v]` at every node.
pub fn phi_apply(u: &PeriodicField, v: &PeriodicField, params: &FlowParams, scheme: &QuadratureScheme) -> Result<PeriodicField> {
    u.same_grid(v)?;
    Curvature::new(u.grid(), *params, *scheme)?.phi(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega0_1d(a: f64) -> f64 {
        4.0 * libm::tgamma(1.0 - a) * libm::sin(0.5 * PI * a) / (a * (1.0 + a))
    }

    #[test]
    fn psi_matches_adaptive() {
        for (a, n) in [(0.3, 1), (0.5, 2), (0.9, 1)] {
            let params = FlowParams::new(a, n).unwrap();
            let prof = Profile::new(&params);
            for &xi in &[-7.0, -2.5, -1.0, -0.3, -0.1, 0.0, 0.02, 0.2, 0.26, 0.9, 1.99, 2.01, 5.0, 40.0] {
                let want = -(f_eval(-xi, &params) - f_eval(xi, &params));
                assert!((prof.psi(xi) - want).abs() < 1e-13, "ξ={xi} {} {}", prof.psi(xi), want);
            }
            for &(x, y) in &[(0.3, 0.29), (1.0, 0.5), (-2.0, -2.0 + 1e-9), (0.0, 0.04), (3.0, 2.97)] {
                let integral = Adaptive::with_tol(1e-15)
                    .integrate(y, x, |t| -2.0 * libm::pow(1.0 + t * t, -params.p()))
                    .value;
                let want = integral / (x - y);
                assert!((prof.psi_divided(x, y) - want).abs() < 1e-12, "({x},{y})");
            }
        }
    }

    #[test]
    fn constants_have_zero_curvature() {
        let g = GridSpec::new(1, 32).unwrap();
        let params = FlowParams::new(0.5, 1).unwrap();
        let eng = Curvature::new(g, params, QuadratureScheme::for_grid(g)).unwrap();
        let u = PeriodicField::constant(g, 2.5);
        for form in [CurvatureForm::GradientCorrected, CurvatureForm::PrincipalValue] {
            assert!(eng.curvature(&u, form).unwrap().iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn linearisation_1d() {
        let g = GridSpec::new(1, 64).unwrap();
        for a in [0.2, 0.5, 0.8] {
            let params = FlowParams::new(a, 1).unwrap();
            let eng = Curvature::new(g, params, QuadratureScheme::for_grid(g)).unwrap();
            for k in [1i64, 3, 8] {
                let eps = 1e-7;
                let u = PeriodicField::from_modes(g, &[([k, 0], eps, 0.0)]);
                let want = omega0_1d(a) * libm::pow(k as f64, 1.0 + a);
                for form in [CurvatureForm::GradientCorrected, CurvatureForm::PrincipalValue] {
                    let h = eng.curvature(&u, form).unwrap();
                    let r = h[0] / eps;
                    assert!((r - want).abs() < 1e-7 * want, "α={a} k={k} {form:?} {r} {want}");
                }
            }
        }
    }

    #[test]
    fn forms_agree_1d() {
        let g = GridSpec::new(1, 64).unwrap();
        let params = FlowParams::new(0.5, 1).unwrap();
        let eng = Curvature::new(g, params, QuadratureScheme::for_grid(g)).unwrap();
        let u = PeriodicField::from_fn(g, |x| 0.3 * libm::cos(x[0]) + 0.1 * libm::sin(2.0 * x[0]));
        let a = eng.curvature(&u, CurvatureForm::GradientCorrected).unwrap();
        let b = eng.curvature(&u, CurvatureForm::PrincipalValue).unwrap();
        let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-9, "{d}");
    }

    /// j-th derivative of `0.3 cos x + 0.1 sin 2x`.
    fn trig_derivative(j: usize, x: f64) -> f64 {
        let shift = 0.5 * PI * j as f64;
        0.3 * libm::cos(x + shift) + 0.1 * libm::pow(2.0, j as f64) * libm::sin(2.0 * x + shift)
    }

    fn brute_force_1d(x0: f64, a: f64) -> f64 {
        // ∫ over [−L, L]; beyond that only O(L^{−1−α}) boundary terms survive.
        let p = 1.0 + 0.5 * a;
        let u = |x: f64| trig_derivative(0, x);
        let periods = 400;
        let breaks: Vec<f64> = (-2 * periods..=2 * periods).map(|j| j as f64 * PI).collect();
        let quad = Adaptive { abs_tol: 1e-13, rel_tol: 1e-15, max_intervals: 400 };
        let f = |y: f64| {
            let (d, n) = if y.abs() < 0.5 {
                // δu = −Σ_{j≥1} u^{(j)}(x₀)(−y)^j/j!,
                // δu − y u'(x₀−y) = Σ_{j≥2} u^{(j)}(x₀)(−y)^j (j−1)/j!
                let mut term = -y;
                let (mut d, mut n) = (0.0, 0.0);
                for j in 1..40 {
                    let dj = trig_derivative(j, x0) * term;
                    d -= dj;
                    n += dj * (j as f64 - 1.0);
                    term *= -y / (j as f64 + 1.0);
                }
                (d, n)
            } else {
                let d = u(x0) - u(x0 - y);
                (d, d - y * trig_derivative(1, x0 - y))
            };
            n / libm::pow(y * y + d * d, p)
        };
        // y = ±t^k removes the |y|^{−α} endpoint singularity for k(1−α) ∈ ℕ.
        let k = libm::round(1.0 / (1.0 - a)) as i32;
        let near = |t: f64| k as f64 * libm::pow(t, (k - 1) as f64) * (f(libm::pow(t, k as f64)) + f(-libm::pow(t, k as f64)));
        let mut inner = quad.integrate(0.0, libm::pow(PI, 1.0 / k as f64), near).value;
        inner += quad.integrate_pieces(&breaks[..2 * periods as usize], f).value;
        inner += quad.integrate_pieces(&breaks[2 * periods as usize + 1..], f).value;
        // L is a multiple of the period: the mean-zero part leaves
        // 2u(x₀)L^{−1−α}/(1+α), the gradient part −2u(x₀)L^{−1−α}.
        let l = 2.0 * periods as f64 * PI;
        let tail = (2.0 / (1.0 + a) - 2.0) * u(x0) * libm::pow(l, -1.0 - a);
        -2.0 / a * (inner + tail)
    }

    #[test]
    fn nonlinear_matches_direct_integration() {
        let g = GridSpec::new(1, 32).unwrap();
        let field = PeriodicField::from_fn(g, |x| trig_derivative(0, x[0]));
        for a in [0.5, 0.8] {
            let params = FlowParams::new(a, 1).unwrap();
            let eng = Curvature::new(g, params, QuadratureScheme::for_grid(g)).unwrap();
            let h = eng.curvature(&field, CurvatureForm::GradientCorrected).unwrap();
            for i in [0, 5, 13] {
                let x0 = g.node(i)[0];
                let want = brute_force_1d(x0, a);
                assert!((h[i] - want).abs() < 1e-8, "α={a} x={x0}: {} vs {want}", h[i]);
            }
        }
    }

    #[test]
    fn linearisation_2d() {
        let g = GridSpec::new(2, 16).unwrap();
        let a = 0.5;
        let params = FlowParams::new(a, 2).unwrap();
        let i1 = libm::tgamma(1.0 - a) * libm::sin(0.5 * PI * a) / (a * (1.0 + a));
        let ang = Adaptive::with_tol(1e-14)
            .integrate_pieces(&[0.0, 0.5 * PI, 1.5 * PI, 2.0 * PI], |t| libm::pow(libm::cos(t).abs(), 1.0 + a))
            .value;
        let omega = 2.0 * i1 * ang;
        let eng = Curvature::new(g, params, QuadratureScheme::for_grid(g)).unwrap();
        for k in [[1i64, 0], [2, 1], [3, 3]] {
            let eps = 1e-7;
            let u = PeriodicField::from_modes(g, &[(k, eps, 0.3)]);
            let kn = libm::hypot(k[0] as f64, k[1] as f64);
            for form in [CurvatureForm::GradientCorrected, CurvatureForm::PrincipalValue] {
                let h = eng.curvature(&u, form).unwrap();
                let want = omega * libm::pow(kn, 1.0 + a) * u.values()[7];
                assert!((h[7] - want).abs() < 1e-6 * omega * libm::pow(kn, 1.0 + a) * eps, "{k:?} {form:?} {} {want}", h[7]);
            }
        }
    }

    fn sample(g: GridSpec, amp: f64) -> PeriodicField {
        let modes: Vec<([i64; 2], f64, f64)> = if g.dim() == 1 {
            vec![([1, 0], amp, 0.2), ([3, 0], 0.5 * amp, 1.1), ([5, 0], 0.2 * amp, -0.7)]
        } else {
            vec![([1, 0], amp, 0.2), ([1, 2], 0.5 * amp, 1.1), ([-3, 1], 0.2 * amp, -0.7)]
        };
        PeriodicField::from_modes(g, &modes)
    }

    #[test]
    fn frozen_operator_is_the_symbol() {
        use crate::symbol::{symbol_polar, FrozenSlope};
        use crate::field::to_spectral;
        let cases: [(usize, usize, &[[f64; 2]]); 2] =
            [(1, 64, &[[0.0, 0.0], [1.0, 0.0]]), (2, 32, &[[0.0, 0.0], [1.0, 0.0], [core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::FRAC_1_SQRT_2]])];
        for (dim, m, slopes) in cases {
            let g = GridSpec::new(dim, m).unwrap();
            let p = FlowParams::new(0.5, dim).unwrap();
            let eng = Curvature::new(g, p, QuadratureScheme::for_grid(g)).unwrap();
            let modes: Vec<([i64; 2], f64, f64)> =
                (1..=8i64).map(|i| ([i, if dim == 2 { (i * 3) % 7 - 3 } else { 0 }], 0.1 / i as f64, 0.3 * i as f64)).collect();
            let v = PeriodicField::from_modes(g, &modes);
            let vh = to_spectral(&v);
            for a in slopes {
                let slope = FrozenSlope::new(&a[..dim]).unwrap();
                let ah = to_spectral(&eng.frozen(*a, &v).unwrap());
                for i in 0..g.len() {
                    if vh.coeffs()[i].norm() > 1e-8 {
                        let k = g.wavevector(i);
                        let x = [k[0] as f64, k[1] as f64];
                        let q = symbol_polar(&x[..dim], &p, &slope).unwrap();
                        let r = ah.coeffs()[i] / vh.coeffs()[i];
                        assert!(((r - q) / q).norm() < 1e-5, "{dim} {a:?} {k:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn phi_reproduces_curvature() {
        for (dim, m) in [(1, 32), (2, 16)] {
            let g = GridSpec::new(dim, m).unwrap();
            let eng = Curvature::new(g, FlowParams::new(0.6, dim).unwrap(), QuadratureScheme::for_grid(g)).unwrap();
            let u = sample(g, 0.3);
            let phi = eng.phi(&u, &u).unwrap();
            let h = eng.curvature(&u, CurvatureForm::GradientCorrected).unwrap();
            let grads = crate::field::gradient(&u);
            for i in 0..g.len() {
                let s: f64 = grads.iter().map(|d| d.values()[i] * d.values()[i]).sum();
                let want = -libm::sqrt(1.0 + s) * h[i];
                assert!((phi.values()[i] - want).abs() < 1e-10 * (1.0 + want.abs()), "{dim} {i}");
            }
        }
    }

    #[test]
    fn phi_at_zero_is_the_flat_multiplier() {
        let g = GridSpec::new(1, 32).unwrap();
        let a = 0.5;
        let eng = Curvature::new(g, FlowParams::new(a, 1).unwrap(), QuadratureScheme::for_grid(g)).unwrap();
        let v = sample(g, 1.0);
        let out = crate::field::to_spectral(&eng.phi(&PeriodicField::constant(g, 0.0), &v).unwrap());
        let vh = crate::field::to_spectral(&v);
        for k in [1i64, 3, 5] {
            let r = out.get([k, 0]) / vh.get([k, 0]);
            let want = -omega0_1d(a) * libm::pow(k as f64, 1.0 + a);
            assert!(((r.re - want) / want).abs() < 1e-7 && r.im.abs() < 1e-7 * want.abs(), "{k}");
        }
    }

    #[test]
    fn equivariance() {
        for (dim, m) in [(1, 32), (2, 16)] {
            let g = GridSpec::new(dim, m).unwrap();
            let eng = Curvature::new(g, FlowParams::new(0.5, dim).unwrap(), QuadratureScheme::for_grid(g)).unwrap();
            let u = sample(g, 0.4);
            let base = eng.phi(&u, &u).unwrap();
            let shift = [3i64, if dim == 2 { -2 } else { 0 }];
            let tu = u.translate(shift);
            let moved = eng.phi(&tu, &tu).unwrap();
            let want = base.translate(shift);
            let lifted = u.map(|x| x + 5.0);
            let vert = eng.phi(&lifted, &lifted).unwrap();
            let ru = u.reflect([true, dim == 2]);
            let refl = eng.phi(&ru, &ru).unwrap();
            let rwant = base.reflect([true, dim == 2]);
            for i in 0..g.len() {
                assert!((moved.values()[i] - want.values()[i]).abs() < 1e-12);
                assert!((vert.values()[i] - base.values()[i]).abs() < 1e-12);
                assert!((refl.values()[i] - rwant.values()[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tail_bound_shrinks_with_cells() {
        let g = GridSpec::new(1, 32).unwrap();
        let p = FlowParams::new(0.5, 1).unwrap();
        let u = sample(g, 0.5);
        let mut last = f64::INFINITY;
        let mut prev: Option<Vec<f64>> = None;
        for cells in [1, 2, 4, 8] {
            let sc = QuadratureScheme::for_grid(g).with_cells(cells);
            let b = tail_bound(&u, &p, &sc);
            assert!(b < last && b > 0.0);
            last = b;
            let h = Curvature::new(g, p, sc).unwrap().curvature(&u, CurvatureForm::GradientCorrected).unwrap();
            if let Some(q) = prev {
                // The far field is summed, not dropped, so the split point barely matters.
                assert!(h.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-9));
            }
            prev = Some(h);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn forms_agree_on_random_fields(
            amps in proptest::collection::vec(-0.3f64..0.3, 4),
            phases in proptest::collection::vec(0.0f64..6.3, 4),
            shift in 0i64..32,
            c in -10.0f64..10.0,
        ) {
            let g = GridSpec::new(1, 32).unwrap();
            let modes: Vec<([i64; 2], f64, f64)> = (0..4).map(|j| ([j as i64 + 1, 0], amps[j] / (j + 1) as f64, phases[j])).collect();
            let u = PeriodicField::from_modes(g, &modes).map(|x| x + c);
            let eng = Curvature::new(g, FlowParams::new(0.5, 1).unwrap(), QuadratureScheme::for_grid(g)).unwrap();
            let a = eng.curvature(&u, CurvatureForm::GradientCorrected).unwrap();
            let b = eng.curvature(&u, CurvatureForm::PrincipalValue).unwrap();
            let t = eng.curvature(&u.translate([shift, 0]), CurvatureForm::GradientCorrected).unwrap();
            for i in 0..32 {
                proptest::prop_assert!((a[i] - b[i]).abs() < 1e-7);
                let j = (i + shift as usize) % 32;
                proptest::prop_assert!((t[j] - a[i]).abs() < 1e-11, "{} {}", t[j], a[i]);
            }
        }
    }
}
