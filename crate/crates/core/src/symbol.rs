//! Symbols of the frozen-slope operators
//!
//! ```text
//! m_a(k) = −2 ∫ (1 − cos(y·k)) |y|^{−n−1−α} (1 + (y·a/|y|)²)^{−p} dy
//! ```
//!
//! by two independent routes: the lattice/polar node machinery of the kernel
//! (`direct`), and the reduction to one angular integral (`polar`),
//!
//! ```text
//! m_a(x) = |x|^{1+α} p_n(x),   p_2(x) = −2 I₁ ∫_0^{2π} |sin φ|^{1+α} (1 + (b·e_φ)²)^{−p} dφ
//! ```
//!
//! where `I₁ = ∫_0^∞ (1 − cos t) t^{−2−α} dt` and `b = H a` for a Householder
//! reflection `H` taking `x/|x|` to `e₂`. Near `+e₂` that reflection
//! degenerates and the chart taking `x/|x|` to `e₁` is used instead.
//!
//! Also here: Mikhlin-type probes of `P_a = m_a/|x|^{1+α}`, the diagonal
//! resolvent, and the lifting multipliers `|k|^t`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{GridSpec, SpectralField};
use crate::kernel::{FlowParams, FrozenSymbolNodes, NodeSet, QuadratureScheme};
use crate::par;
use crate::quadrature::{Adaptive, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenSlope {
    a: [f64; 2],
    tau: f64,
    delta: f64,
    eta: Option<f64>,
}

impl FrozenSlope {
    /// `a` has one entry per dimension.
    pub fn new(a: &[f64]) -> Result<Self> {
        let a = match a {
            [x] => [*x, 0.0],
            [x, y] => [*x, *y],
            _ => return Err(Error::InvalidParameter("slope must have 1 or 2 components")),
        };
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("slope must be finite"));
        }
        Ok(FrozenSlope { a, tau: 1.0, delta: 1.0, eta: None })
    }

    pub fn zero() -> Self {
        FrozenSlope { a: [0.0; 2], tau: 1.0, delta: 1.0, eta: None }
    }

    /// Slope budget `η ≥ 1`; requires `|a| ≤ η`.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta >= 1.0) {
            return Err(Error::InvalidParameter("η must be at least 1"));
        }
        if self.norm() > eta * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter("slope exceeds the budget η"));
        }
        if self.delta > eta {
            return Err(Error::InvalidParameter("δ must lie in [1, η]"));
        }
        self.eta = Some(eta);
        Ok(self)
    }

    /// The scaled operator `δ A^{τa}`.
    pub fn with_scaling(mut self, tau: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter("τ must lie in [0, 1]"));
        }
        if !(delta >= 1.0) || self.eta.is_some_and(|e| delta > e) {
            return Err(Error::InvalidParameter("δ must lie in [1, η]"));
        }
        self.tau = tau;
        self.delta = delta;
        Ok(self)
    }

    pub fn a(&self) -> [f64; 2] {
        self.a
    }

    pub fn norm(&self) -> f64 {
        libm::hypot(self.a[0], self.a[1])
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    /// `τa`, the slope the symbol is evaluated at.
    pub fn effective(&self) -> [f64; 2] {
        [self.tau * self.a[0], self.tau * self.a[1]]
    }
}

/// `I₁ = ∫_0^∞ (1 − cos t) t^{−2−α} dt` by quadrature: a power series on
/// `[0, 1]`, adaptive Gauss–Kronrod up to `T = 16π`, and an asymptotic series
/// for the oscillatory tail.
pub fn cosine_integral(alpha: f64) -> f64 {
    // ∫_0^1 = Σ_{j≥1} (−1)^{j+1} / ((2j)! (2j − 1 − α))
    let mut head = 0.0;
    let mut fact = 1.0;
    for j in 1..20 {
        fact *= (2 * j - 1) as f64 * (2 * j) as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        head += sign / (fact * (2.0 * j as f64 - 1.0 - alpha));
    }
    let s = 2.0 + alpha;
    let t_end = 16.0 * PI;
    let mut breaks = vec![1.0];
    breaks.extend((1..16).map(|j| j as f64 * PI));
    breaks.push(t_end);
    let body = Adaptive::with_tol(1e-15)
        .integrate_pieces(&breaks, |t| (1.0 - libm::cos(t)) * libm::pow(t, -s))
        .value;
    // ∫_T^∞ cos t · t^{−s} dt at T = 2πN: s T^{−s−1} − s(s+1)(s+2) T^{−s−3} + …
    let mut osc = 0.0;
    let mut coef = s;
    let mut pw = libm::pow(t_end, -s - 1.0);
    let mut sign = 1.0;
    for j in 0..12 {
        osc += sign * coef * pw;
        let e = s + 2.0 * j as f64;
        coef *= (e + 1.0) * (e + 2.0);
        pw /= t_end * t_end;
        sign = -sign;
    }
    let tail = libm::pow(t_end, 1.0 - s) / (s - 1.0) - osc;
    head + body + tail
}

/// `∫_0^{2π} |cos φ|^{1+α} dφ`
fn cos_power_integral(alpha: f64) -> f64 {
    4.0 * Adaptive::with_tol(1e-15).integrate(0.0, 0.5 * PI, |t| libm::pow(libm::cos(t), 1.0 + alpha)).value
}

#[cfg(feature = "std")]
fn cached(alpha: f64, dim: usize, f: impl FnOnce() -> f64) -> f64 {
    use std::sync::Mutex;
    static CACHE: Mutex<Vec<(u64, usize, f64)>> = Mutex::new(Vec::new());
    let key = alpha.to_bits();
    if let Some(v) = CACHE.lock().unwrap().iter().find(|e| e.0 == key && e.1 == dim) {
        return v.2;
    }
    let v = f();
    CACHE.lock().unwrap().push((key, dim, v));
    v
}

#[cfg(not(feature = "std"))]
fn cached(_alpha: f64, _dim: usize, f: impl FnOnce() -> f64) -> f64 {
    f()
}

/// `ω₀ = 2 ∫ (1 − cos(y·e)) |y|^{−n−1−α} dy`, so that `m₀(k) = −ω₀|k|^{1+α}`.
pub fn omega0(alpha: f64, dim: usize) -> f64 {
    cached(alpha, dim, || {
        let i1 = cosine_integral(alpha);
        if dim == 1 {
            4.0 * i1
        } else {
            2.0 * i1 * cos_power_integral(alpha)
        }
    })
}

/// Householder reflection taking the unit vector `u` to `e`.
fn householder(u: [f64; 2], e: [f64; 2]) -> [[f64; 2]; 2] {
    let v = [u[0] - e[0], u[1] - e[1]];
    let vv = v[0] * v[0] + v[1] * v[1];
    let mut h = [[1.0, 0.0], [0.0, 1.0]];
    for (i, row) in h.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x -= 2.0 * v[i] * v[j] / vv;
        }
    }
    h
}

/// Angle below which the `e₂` chart is abandoned.
const CHART_SWITCH: f64 = 10.0 * PI / 180.0;

/// `P_a(x) = m_a(x)/|x|^{1+α}`, which depends only on the direction of `x`.
pub fn normalized_polar(x: &[f64], params: &FlowParams, slope: &FrozenSlope) -> Result<f64> {
    let a = slope.effective();
    let p = params.p();
    let alpha = params.alpha();
    match (params.dim(), x) {
        (1, [x0]) => {
            if *x0 == 0.0 {
                return Err(Error::SymbolAtOrigin);
            }
            Ok(-4.0 * cosine_integral_cached(alpha) * libm::pow(1.0 + a[0] * a[0], -p))
        }
        (2, [x0, x1]) => {
            let r = libm::hypot(*x0, *x1);
            if r == 0.0 {
                return Err(Error::SymbolAtOrigin);
            }
            let u = [x0 / r, x1 / r];
            let near_e2 = libm::acos(u[1].clamp(-1.0, 1.0)) < CHART_SWITCH;
            let (h, use_cos) = if near_e2 { (householder(u, [1.0, 0.0]), true) } else { (householder(u, [0.0, 1.0]), false) };
            let b = [h[0][0] * a[0] + h[0][1] * a[1], h[1][0] * a[0] + h[1][1] * a[1]];
            let f = |phi: f64| {
                let (s, c) = (libm::sin(phi), libm::cos(phi));
                let w = if use_cos { c.abs() } else { s.abs() };
                let be = b[0] * c + b[1] * s;
                libm::pow(w, 1.0 + alpha) * libm::pow(1.0 + be * be, -p)
            };
            // π-periodic integrand; the weight vanishes at a piece end in
            // either chart.
            let ang = 2.0 * (smoothed_gauss(0.0, 0.5 * PI, &f) + smoothed_gauss(0.5 * PI, PI, &f));
            Ok(-2.0 * cosine_integral_cached(alpha) * ang)
        }
        _ => Err(Error::InvalidParameter("direction length must match the dimension")),
    }
}

/// Gauss–Legendre after `φ = a + (b − a)g(t)` with the quintic smoothstep
/// `g`, whose flat ends turn `|φ − a|^{1+α}` into `t^{3(1+α)}·t²`.
fn smoothed_gauss<F: Fn(f64) -> f64>(a: f64, b: f64, f: &F) -> f64 {
    let rule = angular_rule();
    let mut acc = 0.0;
    for (t, w) in rule.mapped(0.0, 1.0) {
        let g = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let dg = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        acc += w * dg * f(a + (b - a) * g);
    }
    (b - a) * acc
}

const ANGULAR_NODES: usize = 48;

#[cfg(feature = "std")]
fn angular_rule() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(ANGULAR_NODES))
}

#[cfg(not(feature = "std"))]
fn angular_rule() -> GaussLegendre {
    GaussLegendre::new(ANGULAR_NODES)
}

fn cosine_integral_cached(alpha: f64) -> f64 {
    cached(alpha, 0, || cosine_integral(alpha))
}

/// `m_a(x) = |x|^{1+α} P_a(x)` through the angular reduction.
pub fn symbol_polar(x: &[f64], params: &FlowParams, slope: &FrozenSlope) -> Result<f64> {
    let p = normalized_polar(x, params, slope)?;
    let r = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    Ok(libm::pow(r, 1.0 + params.alpha()) * p)
}

/// Direct quadrature of the defining integral, reusing the kernel's nodes.
#[derive(Debug, Clone)]
pub struct DirectSymbol {
    nodes: FrozenSymbolNodes,
}

impl DirectSymbol {
    pub fn new(params: &FlowParams, slope: &FrozenSlope, scheme: &QuadratureScheme) -> Result<Self> {
        scheme.validate(params.dim())?;
        let ns = NodeSet::new(params, scheme);
        Ok(DirectSymbol { nodes: FrozenSymbolNodes::new(&ns, params, scheme, slope.effective()) })
    }

    /// `m_a(k)`; zero at `k = 0`.
    pub fn eval(&self, k: [i64; 2]) -> f64 {
        if k == [0, 0] {
            return 0.0;
        }
        self.nodes.eval(k)
    }
}

pub fn symbol_direct(k: [i64; 2], params: &FlowParams, slope: &FrozenSlope, scheme: &QuadratureScheme) -> Result<f64> {
    Ok(DirectSymbol::new(params, slope, scheme)?.eval(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolMethod {
    Direct,
    Polar,
}

#[derive(Debug, Clone)]
pub struct SymbolTable {
    grid: GridSpec,
    alpha: f64,
    slope: FrozenSlope,
    values: Vec<f64>,
    normalized: Vec<f64>,
}

impl SymbolTable {
    /// `m_a(k)` over the grid's band, in spectral index order. `P_a(0)` is
    /// stored as 0.
    pub fn build(grid: GridSpec, params: &FlowParams, slope: &FrozenSlope, method: SymbolMethod, scheme: &QuadratureScheme) -> Result<Self> {
        if grid.dim() != params.dim() {
            return Err(Error::InvalidParameter("grid and parameter dimensions differ"));
        }
        let alpha = params.alpha();
        let dim = grid.dim();
        let direct = match method {
            SymbolMethod::Direct => Some(DirectSymbol::new(params, slope, scheme)?),
            SymbolMethod::Polar => None,
        };
        let vals: Vec<(f64, f64)> = par::map_indexed(grid.len(), |i| {
            let k = grid.wavevector(i);
            if k == [0, 0] {
                return (0.0, 0.0);
            }
            let kn = libm::hypot(k[0] as f64, k[1] as f64);
            let x = [k[0] as f64, k[1] as f64];
            let m = match &direct {
                Some(d) => d.eval(k),
                None => symbol_polar(&x[..dim], params, slope).unwrap_or(0.0),
            };
            (m, m / libm::pow(kn, 1.0 + alpha))
        });
        let (values, normalized) = vals.into_iter().unzip();
        Ok(SymbolTable { grid, alpha, slope: *slope, values, normalized })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn slope(&self) -> FrozenSlope {
        self.slope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn value(&self, k: [i64; 2]) -> f64 {
        self.values[self.grid.spectral_index(k)]
    }

    /// Diagonal action `m_a(k) v̂(k)`.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        if v.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut i = 0;
        Ok(v.multiply(|_| {
            let m = self.values[i];
            i += 1;
            Complex64::new(m, 0.0)
        }))
    }
}

/// Probe points for the Mikhlin quantities: `radial` log-spaced radii in
/// `[1e-2, 1e2]` times `angular` directions on the upper half circle (the
/// symbol is even). Slopes are sampled on a square grid of step
/// `slope_step` intersected with `|a| ≤ η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeGrid {
    pub radial: usize,
    pub angular: usize,
    pub slope_step: f64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid { radial: 3, angular: 12, slope_step: 0.5 }
    }
}

impl ProbeGrid {
    pub fn refined(&self) -> Self {
        ProbeGrid { radial: 2 * self.radial, angular: 2 * self.angular, slope_step: 0.5 * self.slope_step }
    }

    fn points(&self, dim: usize) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for i in 0..self.radial {
            let t = if self.radial == 1 { 0.5 } else { i as f64 / (self.radial - 1) as f64 };
            let r = libm::pow(10.0, -2.0 + 4.0 * t);
            if dim == 1 {
                out.push([r, 0.0]);
                out.push([-r, 0.0]);
                continue;
            }
            for j in 0..self.angular {
                // Offset by half a step so the grid never sits on an axis.
                let th = PI * (j as f64 + 0.5) / self.angular as f64;
                out.push([r * libm::cos(th), r * libm::sin(th)]);
            }
        }
        out
    }

    fn slopes(&self, dim: usize, eta: f64) -> Vec<[f64; 2]> {
        let n = libm::floor(eta / self.slope_step + 1e-9) as i64;
        let mut out = Vec::new();
        for i in -n..=n {
            let jr = if dim == 1 { 0..=0 } else { -n..=n };
            for j in jr {
                let a = [i as f64 * self.slope_step, j as f64 * self.slope_step];
                if libm::hypot(a[0], a[1]) <= eta + 1e-12 {
                    out.push(a);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MikhlinReport {
    pub inf_abs: f64,
    pub sup_abs: f64,
    /// `sup |x|^{|μ|} |∂^μ P_a(x)|` over `|μ| = 1..=N`, `N = ⌊n/2⌋ + 1`.
    pub derivative_sups: Vec<f64>,
    /// `max(1/inf|P|, sup|P|, derivative sups)`
    pub m_emp: f64,
}

impl MikhlinReport {
    fn merge(&mut self, other: &MikhlinReport) {
        self.inf_abs = self.inf_abs.min(other.inf_abs);
        self.sup_abs = self.sup_abs.max(other.sup_abs);
        for (a, b) in self.derivative_sups.iter_mut().zip(&other.derivative_sups) {
            *a = a.max(*b);
        }
        self.m_emp = self.m_emp.max(other.m_emp);
    }
}

/// Finite-difference Mikhlin quantities of `P_a` for one slope.
pub fn mikhlin_sup(slope: &FrozenSlope, params: &FlowParams, probe: &ProbeGrid) -> MikhlinReport {
    let dim = params.dim();
    let order = dim / 2 + 1;
    let pts = probe.points(dim);
    let p = |x: [f64; 2]| normalized_polar(&x[..dim], params, slope).unwrap_or(f64::NAN);
    let per_point: Vec<(f64, Vec<f64>)> = par::map_indexed(pts.len(), |i| {
        let x = pts[i];
        let r = libm::hypot(x[0], x[1]);
        let h = 2e-3 * r;
        let p0 = p(x);
        let mut derivs = vec![0.0; order];
        let shift = |d: [f64; 2]| [x[0] + d[0], x[1] + d[1]];
        let mut first: f64 = 0.0;
        for ax in 0..dim {
            let mut e = [0.0; 2];
            e[ax] = h;
            let d = (p(shift(e)) - p(shift([-e[0], -e[1]]))) / (2.0 * h);
            first = first.max(r * d.abs());
        }
        derivs[0] = first;
        if order >= 2 {
            let mut second: f64 = 0.0;
            for ax in 0..dim {
                let mut e = [0.0; 2];
                e[ax] = h;
                let d = (p(shift(e)) - 2.0 * p0 + p(shift([-e[0], -e[1]]))) / (h * h);
                second = second.max(r * r * d.abs());
            }
            let pp = p(shift([h, h]));
            let pm = p(shift([h, -h]));
            let mp = p(shift([-h, h]));
            let mm = p(shift([-h, -h]));
            let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
            derivs[1] = second.max(r * r * mixed.abs());
        }
        (p0, derivs)
    });
    let mut inf_abs = f64::INFINITY;
    let mut sup_abs: f64 = 0.0;
    let mut derivative_sups = vec![0.0f64; order];
    for (p0, d) in &per_point {
        inf_abs = inf_abs.min(p0.abs());
        sup_abs = sup_abs.max(p0.abs());
        for (a, b) in derivative_sups.iter_mut().zip(d) {
            *a = a.max(*b);
        }
    }
    let m_emp = derivative_sups.iter().fold((1.0 / inf_abs).max(sup_abs), |m, &d| m.max(d));
    MikhlinReport { inf_abs, sup_abs, derivative_sups, m_emp }
}

/// Worst Mikhlin quantities over the slopes `|a| ≤ η` of the probe's slope grid.
pub fn mikhlin_over_ball(eta: f64, params: &FlowParams, probe: &ProbeGrid) -> Result<MikhlinReport> {
    let mut out: Option<MikhlinReport> = None;
    for a in probe.slopes(params.dim(), eta) {
        let slope = FrozenSlope::new(&a[..params.dim()])?;
        let rep = mikhlin_sup(&slope, params, probe);
        match &mut out {
            Some(o) => o.merge(&rep),
            None => out = Some(rep),
        }
    }
    out.ok_or(Error::InvalidParameter("empty slope set"))
}

/// `𝔪_t(k)`: 1 for `|k| ≤ 1/2`, `|k|^t` for `|k| ≥ 1`, joined by a quintic
/// ramp in `log|k|`.
pub fn cutoff_symbol(t: f64, r: f64) -> f64 {
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return libm::pow(r, t);
    }
    let s = (libm::log2(r) + 1.0).clamp(0.0, 1.0);
    let ramp = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    libm::exp(ramp * t * libm::log(r))
}

/// `I_t`: multiplies by `|k|^t`, with 1 at `k = 0`.
pub fn lifting_apply(t: f64, v: &SpectralField) -> SpectralField {
    v.multiply(|k| {
        if k == [0, 0] {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(libm::pow(libm::hypot(k[0] as f64, k[1] as f64), t), 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSpec {
    pub lambda: Complex64,
    pub delta: f64,
    pub slope: FrozenSlope,
}

impl ResolventSpec {
    pub fn new(lambda: Complex64, delta: f64, slope: FrozenSlope) -> Result<Self> {
        if !(lambda.re >= 1.0) {
            return Err(Error::OutsideResolventSet);
        }
        if !(delta >= 1.0) || slope.eta().is_some_and(|e| delta > e) {
            return Err(Error::InvalidParameter("δ must lie in [1, η]"));
        }
        Ok(ResolventSpec { lambda, delta, slope })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventReport {
    /// `min_k |λ − δm_a(k)| / max(|λ|, |m_a(k)|)`
    pub min_ratio: f64,
    /// `sup_k 1/|λ − δm_a(k)|`
    pub diag_sup: f64,
}

/// Resolvent data for one `(λ, δ, a)` on one grid.
#[derive(Debug, Clone)]
pub struct Resolvent {
    spec: ResolventSpec,
    table: SymbolTable,
    cutoff: Vec<f64>,
}

impl Resolvent {
    pub fn new(spec: ResolventSpec, grid: GridSpec, params: &FlowParams) -> Result<Self> {
        let table = SymbolTable::build(grid, params, &spec.slope, SymbolMethod::Polar, &QuadratureScheme::for_grid(grid))?;
        Self::with_table(spec, table)
    }

    pub fn with_table(spec: ResolventSpec, table: SymbolTable) -> Result<Self> {
        let grid = table.grid();
        let t = 1.0 + table.alpha();
        let cutoff = (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                cutoff_symbol(t, libm::hypot(k[0] as f64, k[1] as f64))
            })
            .collect();
        Ok(Resolvent { spec, table, cutoff })
    }

    pub fn spec(&self) -> ResolventSpec {
        self.spec
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    fn shifted(&self, i: usize) -> Complex64 {
        self.spec.lambda - self.spec.delta * self.table.values()[i]
    }

    /// `R(λ)`: multiplies by `𝔪_{1+α}(k) / (λ − δ m_a(k))`.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        self.diag(v, |i| Complex64::new(self.cutoff[i], 0.0) / self.shifted(i))
    }

    /// `λ − δA^a`: multiplies by `λ − δ m_a(k)`.
    pub fn apply_operator(&self, v: &SpectralField) -> Result<SpectralField> {
        self.diag(v, |i| self.shifted(i))
    }

    fn diag<F: Fn(usize) -> Complex64>(&self, v: &SpectralField, f: F) -> Result<SpectralField> {
        if v.grid() != self.table.grid() {
            return Err(Error::GridMismatch);
        }
        let mut out = v.clone();
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            *c *= f(i);
        }
        Ok(out)
    }

    pub fn check(&self) -> ResolventReport {
        let lam = self.spec.lambda.norm();
        let mut min_ratio = f64::INFINITY;
        let mut diag_sup: f64 = 0.0;
        for (i, &m) in self.table.values().iter().enumerate() {
            let d = self.shifted(i).norm();
            min_ratio = min_ratio.min(d / lam.max(m.abs()));
            diag_sup = diag_sup.max(1.0 / d);
        }
        ResolventReport { min_ratio, diag_sup }
    }
}

pub fn resolvent_apply(r: &Resolvent, v: &SpectralField) -> Result<SpectralField> {
    r.apply(v)
}

pub fn resolvent_check(r: &Resolvent) -> ResolventReport {
    r.check()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_i1(a: f64) -> f64 {
        libm::tgamma(1.0 - a) * libm::sin(0.5 * PI * a) / (a * (1.0 + a))
    }

    #[test]
    fn cosine_integral_matches_gamma_form() {
        for a in [0.05, 0.25, 0.5, 0.75, 0.95] {
            let got = cosine_integral(a);
            assert!((got - closed_i1(a)).abs() < 1e-12 * closed_i1(a), "α={a}: {got} vs {}", closed_i1(a));
        }
        assert!((omega0(0.5, 1) - 6.684342065682667).abs() < 1e-12);
    }

    #[test]
    fn polar_charts_agree() {
        let params = FlowParams::new(0.5, 2).unwrap();
        let slope = FrozenSlope::new(&[0.7, -1.1]).unwrap();
        // Straddle the switch angle from both sides.
        for deg in [9.0f64, 9.99, 10.01, 11.0] {
            let th = PI / 2.0 - deg.to_radians();
            let x = [libm::cos(th), libm::sin(th)];
            let v = normalized_polar(&x, &params, &slope).unwrap();
            let h = householder(x, [0.0, 1.0]);
            let b = [h[0][0] * 0.7 + h[0][1] * -1.1, h[1][0] * 0.7 + h[1][1] * -1.1];
            let p = params.p();
            let ang = Adaptive::with_tol(1e-15)
                .integrate_pieces(&[0.0, PI, 2.0 * PI], |phi| {
                    let be = b[0] * libm::cos(phi) + b[1] * libm::sin(phi);
                    libm::pow(libm::sin(phi).abs(), 1.5) * libm::pow(1.0 + be * be, -p)
                })
                .value;
            let want = -2.0 * closed_i1(0.5) * ang;
            assert!((v - want).abs() < 1e-11 * want.abs(), "{deg}: {v} {want}");
        }
    }

    #[test]
    fn lifting_roundtrip_and_cutoff() {
        let g = GridSpec::new(2, 16).unwrap();
        let mut v = SpectralField::zeros(g);
        v.set([3, -2], Complex64::new(0.3, 0.1));
        v.set([-3, 2], Complex64::new(0.3, -0.1));
        v.set([0, 0], Complex64::new(2.0, 0.0));
        let w = lifting_apply(-1.5, &lifting_apply(1.5, &v));
        for (a, b) in v.coeffs().iter().zip(w.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(cutoff_symbol(1.5, 0.3), 1.0);
        assert!((cutoff_symbol(1.5, 2.0) - libm::pow(2.0, 1.5)).abs() < 1e-15);
        for i in 0..=100 {
            let r = 0.5 + 0.005 * i as f64;
            let c = cutoff_symbol(1.5, r);
            assert!(c <= 1.0 + 1e-15 && c >= libm::pow(r, 1.5) - 1e-15);
        }
        assert!((cutoff_symbol(1.5, 1.0 - 1e-9) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn resolvent_rejects_left_half_plane() {
        let s = FrozenSlope::zero();
        assert!(matches!(ResolventSpec::new(Complex64::new(0.5, 3.0), 1.0, s), Err(Error::OutsideResolventSet)));
    }

    fn band(dim: usize, kmax: i64) -> Vec<[i64; 2]> {
        let mut v = Vec::new();
        for i in -kmax..=kmax {
            for j in 0..=if dim == 2 { kmax } else { 0 } {
                if (j > 0 || i > 0) && i * i + j * j <= kmax * kmax {
                    v.push([i, j]);
                }
            }
        }
        v
    }

    #[test]
    fn direct_matches_polar() {
        for (dim, slopes) in [(1, vec![[0.0, 0.0], [1.0, 0.0], [-2.0, 0.0]]), (2, vec![[0.0, 0.0], [1.0, 0.0], [2.0, -1.0]])] {
            let p = FlowParams::new(0.5, dim).unwrap();
            let sc = QuadratureScheme::resolving(dim, 16);
            for a in slopes {
                let slope = FrozenSlope::new(&a[..dim]).unwrap();
                let d = DirectSymbol::new(&p, &slope, &sc).unwrap();
                for k in band(dim, 16) {
                    let x = [k[0] as f64, k[1] as f64];
                    let q = symbol_polar(&x[..dim], &p, &slope).unwrap();
                    assert!(((d.eval(k) - q) / q).abs() < 1e-8, "{a:?} {k:?}");
                }
            }
        }
    }

    #[test]
    fn one_dimensional_slope_factor() {
        for alpha in [0.25, 0.5, 0.75] {
            let p = FlowParams::new(alpha, 1).unwrap();
            for a in [0.5, 1.0, -2.0] {
                let slope = FrozenSlope::new(&[a]).unwrap();
                for k in [1.0, 3.0, 16.0] {
                    let m0 = -omega0(alpha, 1) * libm::pow(k, 1.0 + alpha);
                    let want = m0 * libm::pow(1.0 + a * a, -(2.0 + alpha) / 2.0);
                    let got = symbol_polar(&[k], &p, &slope).unwrap();
                    assert!(((got - want) / want).abs() < 1e-10, "α={alpha} a={a} k={k}");
                }
            }
        }
    }

    #[test]
    fn symbol_is_even_homogeneous_and_negative() {
        let p = FlowParams::new(0.5, 2).unwrap();
        let sc = QuadratureScheme::resolving(2, 16);
        let slope = FrozenSlope::new(&[0.7, -0.4]).unwrap();
        let d = DirectSymbol::new(&p, &slope, &sc).unwrap();
        let dirs = [[1, 0], [0, 1], [1, 1], [1, -1], [2, 1], [-1, 2], [3, 1], [1, -3]];
        for k in dirs {
            let m1 = d.eval(k);
            let m2 = d.eval([2 * k[0], 2 * k[1]]);
            assert!(m1 < 0.0);
            assert!((m2 / m1 / libm::pow(2.0, 1.5) - 1.0).abs() < 1e-8, "{k:?}");
            assert!((d.eval([-k[0], -k[1]]) - m1).abs() < 1e-12 * m1.abs());
        }
        // a ↦ −a leaves the symbol unchanged.
        let neg = FrozenSlope::new(&[-0.7, 0.4]).unwrap();
        let x = [2.0, 5.0];
        let a = symbol_polar(&x, &p, &slope).unwrap();
        assert!((symbol_polar(&x, &p, &neg).unwrap() - a).abs() < 1e-13 * a.abs());
    }

    #[test]
    fn mikhlin_reports() {
        for dim in [1, 2] {
            let p = FlowParams::new(0.5, dim).unwrap();
            let probe = ProbeGrid::default();
            let zero = mikhlin_sup(&FrozenSlope::zero(), &p, &probe);
            let w = omega0(0.5, dim);
            assert!((zero.inf_abs - w).abs() < 1e-6 * w && (zero.sup_abs - w).abs() < 1e-6 * w);
            let coarse = mikhlin_over_ball(2.0, &p, &probe).unwrap();
            let fine = mikhlin_over_ball(2.0, &p, &probe.refined()).unwrap();
            assert!(coarse.m_emp.is_finite());
            assert!((fine.m_emp / coarse.m_emp - 1.0).abs() <= 0.05, "{dim}: {} {}", coarse.m_emp, fine.m_emp);
            let small = mikhlin_over_ball(1.0, &p, &probe).unwrap();
            assert!(small.m_emp <= coarse.m_emp);
        }
    }

    #[test]
    fn resolvent_inequality_and_decay() {
        for dim in [1, 2] {
            let g = GridSpec::new(dim, 32).unwrap();
            let p = FlowParams::new(0.5, dim).unwrap();
            let a = [0.8, -0.5];
            let slope = FrozenSlope::new(&a[..dim]).unwrap().with_eta(2.0).unwrap();
            for lam in [Complex64::new(1.0, 0.0), Complex64::new(1.0, 100.0), Complex64::new(7.0, -3.0)] {
                for delta in [1.0, 2.0] {
                    let r = Resolvent::new(ResolventSpec::new(lam, delta, slope).unwrap(), g, &p).unwrap();
                    assert!(r.check().min_ratio >= 1.0);
                }
            }
            let sup = |l: f64| Resolvent::new(ResolventSpec::new(Complex64::new(l, 0.0), 1.0, slope).unwrap(), g, &p).unwrap().check().diag_sup;
            let ratio = sup(10.0) / sup(100.0);
            assert!((9.0..=11.0).contains(&ratio), "{ratio}");
        }
    }
}
