//! Time integration of `du/dt = Φ(u)[u]`.
//!
//! The default scheme splits off `L = −σω₀|k|^{1+α}`, the linearisation at
//! constants, and integrates it with the trapezoidal rule; the remainder
//! `N(u) = Φ(u)[u] − Lu` goes explicitly with second-order Adams–Bashforth.
//! The first step has no history and uses a predictor–corrector (trapezoidal
//! in `N` as well). `ExplicitRk2` is Heun's method on the full right-hand side.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::besov::{besov_high, LittlewoodPaleyFamily};
use crate::error::{Error, Result};
use crate::field::{
    derivative, integral_mean, physical_unchecked, spectral_sup_norm, sup_norm, to_spectral, GridSpec, PeriodicField,
    SpectralField,
};
use crate::kernel::{Curvature, FlowParams, QuadratureScheme};
use crate::symbol::omega0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexCn,
    ExplicitRk2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// `σ` in `L = −σω₀|k|^{1+α}`.
    pub implicit_symbol_scale: f64,
    pub snapshot_every: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64, scheme: Scheme) -> Result<Self> {
        let cfg = StepperConfig { dt, t_end, scheme, implicit_symbol_scale: 1.0, snapshot_every: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.implicit_symbol_scale = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("time step must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter("end time must be non-negative"));
        }
        if !(self.implicit_symbol_scale >= 0.0) {
            return Err(Error::InvalidParameter("implicit symbol scale must be non-negative"));
        }
        Ok(())
    }

    /// Number of steps: `t_end/dt` rounded to the nearest integer.
    pub fn steps(&self) -> usize {
        libm::round(self.t_end / self.dt) as usize
    }

    /// Heun's stability limit for the stiffest mode, `2(h/π)^{1+α}/ω₀`
    /// (`|k|∞ = m/2 = π/h`, scaled by √n for the diagonal in 2D).
    pub fn stability_budget(grid: GridSpec, params: &FlowParams) -> f64 {
        let kmax = core::f64::consts::PI / grid.spacing() * libm::sqrt(grid.dim() as f64);
        2.0 * libm::pow(kmax, -1.0 - params.alpha()) / omega0(params.alpha(), params.dim())
    }
}

/// Multi-step integrator state.
#[derive(Debug, Clone)]
pub struct Stepper {
    engine: Curvature,
    cfg: StepperConfig,
    lin: Vec<f64>,
    prev_n: Option<SpectralField>,
    threshold: f64,
    budget: f64,
}

impl Stepper {
    pub fn new(grid: GridSpec, params: FlowParams, scheme: QuadratureScheme, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        let engine = Curvature::new(grid, params, scheme)?;
        let w = cfg.implicit_symbol_scale * omega0(params.alpha(), params.dim());
        let lin = (0..grid.len())
            .map(|i| {
                let k = grid.wavevector(i);
                -w * libm::pow(libm::hypot(k[0] as f64, k[1] as f64), 1.0 + params.alpha())
            })
            .collect();
        Ok(Stepper { engine, cfg, lin, prev_n: None, threshold: f64::INFINITY, budget: StepperConfig::stability_budget(grid, &params) })
    }

    /// Blow-up threshold from the initial state: `1e6 ‖u₀‖₀`.
    pub fn arm(&mut self, u0: &PeriodicField) {
        self.threshold = 1e6 * sup_norm(u0).max(f64::MIN_POSITIVE);
        self.prev_n = None;
    }

    pub fn config(&self) -> StepperConfig {
        self.cfg
    }

    pub fn engine(&self) -> &Curvature {
        &self.engine
    }

    /// Explicit stability limit computed at construction; recorded only.
    pub fn stability_budget(&self) -> f64 {
        self.budget
    }

    pub fn within_budget(&self) -> bool {
        self.cfg.scheme == Scheme::ImexCn || self.cfg.dt <= self.budget
    }

    /// `Φ(u)[u]`
    pub fn rhs(&self, u: &PeriodicField) -> Result<PeriodicField> {
        self.engine.phi(u, u)
    }

    fn guard(&self, f: &PeriodicField, t: f64, last: &PeriodicField) -> Result<()> {
        let s = sup_norm(f);
        if !s.is_finite() || s > self.threshold {
            return Err(Error::BlowUp { time: t, last: alloc::boxed::Box::new(last.clone()) });
        }
        Ok(())
    }

    /// One step from time `t`. Returns the new state and `Φ(u)[u]` at the old one.
    pub fn advance(&mut self, u: &PeriodicField, t: f64) -> Result<(PeriodicField, PeriodicField)> {
        if self.threshold.is_infinite() {
            self.arm(u);
        }
        let dt = self.cfg.dt;
        let phi = self.rhs(u)?;
        self.guard(&phi, t, u)?;
        match self.cfg.scheme {
            Scheme::ExplicitRk2 => {
                let stage = u.zip_with(&phi, |a, b| a + dt * b)?;
                self.guard(&stage, t, u)?;
                let phi2 = self.rhs(&stage)?;
                let next = PeriodicField::from_raw(
                    u.grid(),
                    (0..u.values().len()).map(|i| u.values()[i] + 0.5 * dt * (phi.values()[i] + phi2.values()[i])).collect(),
                );
                self.guard(&next, t + dt, u)?;
                Ok((next, phi))
            }
            Scheme::ImexCn => {
                let uh = to_spectral(u);
                let n_now = self.remainder(&uh, &phi);
                let n_eff = match self.prev_n.take() {
                    Some(prev) => combine(&n_now, 1.5, &prev, -0.5),
                    None => {
                        // Predictor with N frozen, then trapezoidal corrector.
                        let pred = self.cn_solve(&uh, &n_now);
                        let pf = physical_unchecked(&pred);
                        self.guard(&pf, t + dt, u)?;
                        let phi_p = self.rhs(&pf)?;
                        self.guard(&phi_p, t + dt, u)?;
                        let n_pred = self.remainder(&pred, &phi_p);
                        combine(&n_now, 0.5, &n_pred, 0.5)
                    }
                };
                let next = physical_unchecked(&self.cn_solve(&uh, &n_eff));
                self.guard(&next, t + dt, u)?;
                self.prev_n = Some(n_now);
                Ok((next, phi))
            }
        }
    }

    /// `N̂ = Φ̂ − L û`
    fn remainder(&self, uh: &SpectralField, phi: &PeriodicField) -> SpectralField {
        let mut n = to_spectral(phi);
        for (i, c) in n.coeffs_mut().iter_mut().enumerate() {
            *c -= uh.coeffs()[i] * self.lin[i];
        }
        n
    }

    /// `((1 + dt L/2) û + dt N̂) / (1 − dt L/2)`
    fn cn_solve(&self, uh: &SpectralField, n: &SpectralField) -> SpectralField {
        let dt = self.cfg.dt;
        let mut out = uh.clone();
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            let l = self.lin[i];
            *c = (*c * (1.0 + 0.5 * dt * l) + n.coeffs()[i] * dt) / (1.0 - 0.5 * dt * l);
        }
        out
    }
}

fn combine(a: &SpectralField, ca: f64, b: &SpectralField, cb: f64) -> SpectralField {
    let mut out = a.clone();
    for (o, y) in out.coeffs_mut().iter_mut().zip(b.coeffs()) {
        *o = *o * ca + *y * cb;
    }
    out
}

/// A single step with no history (the first-step scheme).
pub fn step(u: &PeriodicField, cfg: &StepperConfig, params: &FlowParams, scheme: &QuadratureScheme) -> Result<PeriodicField> {
    let mut s = Stepper::new(u.grid(), *params, *scheme, *cfg)?;
    s.arm(u);
    Ok(s.advance(u, 0.0)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    BlowUp,
}

/// Least-squares fit `log y ≈ intercept − rate·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_exponential(times: &[f64], values: &[f64]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = times.iter().zip(values).filter(|(_, &v)| v > 0.0).map(|(&t, &v)| (t, libm::log(v))).collect();
    if pts.len() < 3 || pts.len() < values.len() {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let r2 = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Some(DecayFit { rate: -slope, intercept: my - slope * mt, r2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    /// Sup norms of the trigonometric interpolant (refined, not just nodes).
    pub sup_norms: Vec<f64>,
    /// One array per axis.
    pub grad_sup_norms: Vec<Vec<f64>>,
    /// Forward differences `‖u_{i+1} − u_i‖₀/dt`; the last entry is `‖Φ(u)[u]‖₀`.
    pub dt_sup_norms: Vec<f64>,
    pub means: Vec<f64>,
    /// `⟨Φ(u_i)[u_i]⟩`, the instantaneous drift of the mean.
    pub mean_rates: Vec<f64>,
    /// `‖u − q‖₀`
    pub deviation_norms: Vec<f64>,
    /// Besov seminorm at `s = 1.5` over the blocks `j ≥ 1` (absent after rescaling).
    pub besov: Option<Vec<f64>>,
    pub snapshots: Vec<(f64, PeriodicField)>,
    pub c_limit: Option<f64>,
    pub fit: Option<DecayFit>,
    pub termination: Termination,
    pub dt: f64,
    pub alpha: f64,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_field(&self) -> Option<&PeriodicField> {
        self.snapshots.last().map(|s| &s.1)
    }
}

/// Minimal R² accepted by the limit fit.
pub const LIMIT_FIT_R2: f64 = 0.999;

/// Deviations below this (relative to `1 + |q|`) count as already converged.
const FLAT: f64 = 1e-13;

fn record(trace: &mut FlowTrace, t: f64, u: &PeriodicField, family: &LittlewoodPaleyFamily) -> Result<()> {
    let uh = to_spectral(u);
    trace.times.push(t);
    trace.sup_norms.push(spectral_sup_norm(&uh));
    for (ax, g) in trace.grad_sup_norms.iter_mut().enumerate() {
        g.push(spectral_sup_norm(&to_spectral(&derivative(u, ax))));
    }
    let q = integral_mean(u);
    trace.means.push(q);
    let mut vh = uh;
    vh.set([0, 0], Complex64::new(0.0, 0.0));
    trace.deviation_norms.push(spectral_sup_norm(&vh));
    if let Some(b) = trace.besov.as_mut() {
        b.push(besov_high(u, 1.5, family)?);
    }
    Ok(())
}

/// Runs to `t_end` or blow-up. Snapshots are taken at step 0, every
/// `snapshot_every` steps, and at the end.
pub fn simulate(u0: &PeriodicField, cfg: &StepperConfig, params: &FlowParams, scheme: &QuadratureScheme) -> Result<FlowTrace> {
    let grid = u0.grid();
    let mut stepper = Stepper::new(grid, *params, *scheme, *cfg)?;
    stepper.arm(u0);
    let family = LittlewoodPaleyFamily::for_grid(grid);
    let mut trace = FlowTrace {
        times: Vec::new(),
        sup_norms: Vec::new(),
        grad_sup_norms: (0..grid.dim()).map(|_| Vec::new()).collect(),
        dt_sup_norms: Vec::new(),
        means: Vec::new(),
        mean_rates: Vec::new(),
        deviation_norms: Vec::new(),
        besov: Some(Vec::new()),
        snapshots: Vec::new(),
        c_limit: None,
        fit: None,
        termination: Termination::Completed,
        dt: cfg.dt,
        alpha: params.alpha(),
    };
    let steps = cfg.steps();
    let mut u = u0.clone();
    let mut t = 0.0;
    record(&mut trace, t, &u, &family)?;
    trace.snapshots.push((t, u.clone()));
    for i in 0..steps {
        match stepper.advance(&u, t) {
            Ok((next, phi)) => {
                trace.mean_rates.push(integral_mean(&phi));
                let diff = next.zip_with(&u, |a, b| a - b)?;
                trace.dt_sup_norms.push(spectral_sup_norm(&to_spectral(&diff)) / cfg.dt);
                u = next;
                t = (i + 1) as f64 * cfg.dt;
                record(&mut trace, t, &u, &family)?;
                let snap = cfg.snapshot_every > 0 && (i + 1) % cfg.snapshot_every == 0;
                if snap || i + 1 == steps {
                    trace.snapshots.push((t, u.clone()));
                }
            }
            Err(Error::BlowUp { .. }) => {
                trace.termination = Termination::BlowUp;
                trace.dt_sup_norms.push(f64::NAN);
                trace.mean_rates.push(f64::NAN);
                if trace.snapshots.last().map(|s| s.0) != Some(t) {
                    trace.snapshots.push((t, u.clone()));
                }
                return Ok(trace);
            }
            Err(e) => return Err(e),
        }
    }
    let phi = stepper.rhs(&u)?;
    trace.mean_rates.push(integral_mean(&phi));
    trace.dt_sup_norms.push(spectral_sup_norm(&to_spectral(&phi)));
    estimate_limit(&mut trace);
    Ok(trace)
}

/// `C(u₀) = q(t_end) + ∫_{t_end}^∞ ⟨Φ⟩`, with the integral closed by the
/// fitted decay. `⟨Φ(u)[u]⟩` has no linear term in the deviation (and, as
/// `Φ(u)[u]` is odd, no quadratic one either), so it decays at least at
/// `2ω`; the tail is taken as `⟨Φ(u_end)⟩/(2ω)`, an overestimate.
pub fn estimate_limit(trace: &mut FlowTrace) {
    let n = trace.len();
    if n < 5 || trace.termination != Termination::Completed {
        return;
    }
    let q_end = trace.means[n - 1];
    if trace.deviation_norms.iter().all(|&d| d <= FLAT * (1.0 + q_end.abs())) {
        trace.c_limit = Some(q_end);
        return;
    }
    let start = n - (n / 5).max(3);
    let fit = fit_exponential(&trace.times[start..], &trace.deviation_norms[start..]);
    trace.fit = fit;
    if let Some(f) = fit {
        if f.r2 >= LIMIT_FIT_R2 && f.rate > 0.0 {
            trace.c_limit = Some(q_end + trace.mean_rates[n - 1] / (2.0 * f.rate));
        }
    }
}

/// `(⟨u⟩, u − ⟨u⟩)`
pub fn decompose_mean(u: &PeriodicField) -> (f64, PeriodicField) {
    let q = integral_mean(u);
    (q, u.map(|x| x - q))
}

fn integer_factor(lambda: f64) -> Result<usize> {
    if !(lambda >= 1.0) || lambda != libm::round(lambda) {
        return Err(Error::BreaksPeriodicity);
    }
    Ok(lambda as usize)
}

/// Coefficients below this fraction of the sup norm do not count toward the
/// band; time stepping leaves roundoff of order `1e-15` in every mode.
const BAND_FLOOR: f64 = 1e-11;

/// `u_λ(x) = u(λx)/λ`, resampled exactly on the same grid.
pub fn rescale_field(u: &PeriodicField, lambda: f64) -> Result<PeriodicField> {
    let l = integer_factor(lambda)?;
    let g = u.grid();
    let m = g.points_per_axis();
    let bw = to_spectral(u).bandwidth(BAND_FLOOR * sup_norm(u).max(f64::MIN_POSITIVE));
    if (l as i64) * bw >= (m / 2) as i64 {
        return Err(Error::BandOverflow);
    }
    let vals = (0..g.len())
        .map(|i| {
            let mi = g.multi_index(i);
            let src = [(mi[0] * l) % m, if g.dim() == 2 { (mi[1] * l) % m } else { 0 }];
            u.values()[g.flat_index(src)] / lambda
        })
        .collect();
    Ok(PeriodicField::from_raw(g, vals))
}

/// Applies `u_λ(t, x) = λ^{−1} u(λ^{1+α} t, λx)` to a trace.
pub fn rescale_solution(trace: &FlowTrace, lambda: f64) -> Result<FlowTrace> {
    integer_factor(lambda)?;
    let tf = libm::pow(lambda, 1.0 + trace.alpha);
    let mut snapshots = Vec::with_capacity(trace.snapshots.len());
    for (t, f) in &trace.snapshots {
        snapshots.push((t / tf, rescale_field(f, lambda)?));
    }
    let scale = |v: &Vec<f64>, c: f64| v.iter().map(|x| x * c).collect::<Vec<f64>>();
    Ok(FlowTrace {
        times: scale(&trace.times, 1.0 / tf),
        sup_norms: scale(&trace.sup_norms, 1.0 / lambda),
        grad_sup_norms: trace.grad_sup_norms.clone(),
        dt_sup_norms: scale(&trace.dt_sup_norms, tf / lambda),
        means: scale(&trace.means, 1.0 / lambda),
        mean_rates: scale(&trace.mean_rates, tf / lambda),
        deviation_norms: scale(&trace.deviation_norms, 1.0 / lambda),
        besov: None,
        snapshots,
        c_limit: trace.c_limit.map(|c| c / lambda),
        fit: trace.fit.map(|f| DecayFit { rate: f.rate * tf, intercept: f.intercept - libm::log(lambda), r2: f.r2 }),
        termination: trace.termination,
        dt: trace.dt / tf,
        alpha: trace.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(m: usize) -> (GridSpec, FlowParams, QuadratureScheme) {
        let g = GridSpec::new(1, m).unwrap();
        (g, FlowParams::new(0.5, 1).unwrap(), QuadratureScheme::for_grid(g))
    }

    #[test]
    fn constants_are_fixed_points() {
        let (g, p, s) = setup(16);
        let u = PeriodicField::constant(g, 0.7);
        let cfg = StepperConfig::new(1e-2, 0.05, Scheme::ImexCn).unwrap();
        let next = step(&u, &cfg, &p, &s).unwrap();
        assert!(next.values().iter().all(|v| (v - 0.7).abs() < 1e-15));
        let tr = simulate(&u, &cfg, &p, &s).unwrap();
        assert!((tr.c_limit.unwrap() - 0.7).abs() < 1e-15);
        assert!(tr.means.iter().all(|&q| (q - 0.7).abs() < 1e-15));
    }

    #[test]
    fn single_mode_decays_at_symbol_rate() {
        let (g, p, s) = setup(16);
        let eps = 1e-5;
        let k = 2.0;
        let u = PeriodicField::from_modes(g, &[([2, 0], eps, 0.0)]);
        let dt = 1e-3;
        let cfg = StepperConfig::new(dt, dt, Scheme::ImexCn).unwrap();
        let next = step(&u, &cfg, &p, &s).unwrap();
        let amp = to_spectral(&next).get([2, 0]).re * 2.0;
        // Linear regime: the explicit remainder vanishes and the step is the
        // trapezoidal amplification factor.
        let z = omega0(0.5, 1) * libm::pow(k, 1.5) * dt;
        let want = eps * (1.0 - 0.5 * z) / (1.0 + 0.5 * z);
        assert!((amp - want).abs() < 1e-9 * eps, "{amp} {want}");
    }

    #[test]
    fn fitter_is_exact_on_exponentials() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * libm::exp(-2.5 * t)).collect();
        let f = fit_exponential(&t, &y).unwrap();
        assert!((f.rate - 2.5).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - libm::log(3.0)).abs() < 1e-12);
    }

    #[test]
    fn rescaling_basics() {
        let (g, _, _) = setup(32);
        let u = PeriodicField::from_modes(g, &[([1, 0], 0.4, 0.0)]);
        let r = rescale_field(&u, 2.0).unwrap();
        let want = PeriodicField::from_modes(g, &[([2, 0], 0.2, 0.0)]);
        for (a, b) in r.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(rescale_field(&u, 1.5), Err(Error::BreaksPeriodicity)));
        let wide = PeriodicField::from_modes(g, &[([9, 0], 0.4, 0.0)]);
        assert!(matches!(rescale_field(&wide, 2.0), Err(Error::BandOverflow)));
        assert_eq!(rescale_field(&u, 1.0).unwrap(), u);
    }

    #[test]
    fn decompose_mean_splits() {
        let (g, _, _) = setup(16);
        let u = PeriodicField::from_fn(g, |x| libm::cos(3.0 * x[0]) + 5.0);
        let (q, v) = decompose_mean(&u);
        assert!((q - 5.0).abs() < 1e-14);
        assert!(integral_mean(&v).abs() < 1e-15);
    }

    #[test]
    fn mean_drift_follows_rhs() {
        let (g, p, s) = setup(32);
        let u = PeriodicField::from_modes(g, &[([1, 0], 0.3, 0.0), ([2, 0], 0.1, 1.0)]).map(|x| x + 0.2);
        let mut st = Stepper::new(g, p, s, StepperConfig::new(1e-3, 1.0, Scheme::ImexCn).unwrap()).unwrap();
        let phi0 = integral_mean(&st.rhs(&u).unwrap());
        let mut prev = None;
        for dt in [2e-3, 1e-3] {
            let cfg = StepperConfig::new(dt, dt, Scheme::ImexCn).unwrap();
            let next = step(&u, &cfg, &p, &s).unwrap();
            let err = (integral_mean(&next) - integral_mean(&u) - dt * phi0).abs();
            assert!(err < 10.0 * dt * dt, "{err}");
            if let Some(e) = prev {
                // Second order in dt.
                assert!(e / err > 3.5, "{e} {err}");
            }
            prev = Some(err);
        }
        // Discrete bookkeeping over a run: the drift sums exactly into the mean.
        let cfg = StepperConfig::new(1e-3, 0.05, Scheme::ImexCn).unwrap();
        let tr = simulate(&u, &cfg, &p, &s).unwrap();
        let sum: f64 = tr.mean_rates[..tr.len() - 1].iter().map(|r| r * 1e-3).sum();
        let n = tr.len() - 1;
        assert!((tr.means[n] - tr.means[0] - sum).abs() < 1e-3 * 0.05);
        st.arm(&u);
        assert!(st.within_budget());
    }

    #[test]
    fn explicit_scheme_tracks_imex() {
        let (g, p, s) = setup(16);
        let u = PeriodicField::from_modes(g, &[([1, 0], 0.05, 0.0)]);
        let a = simulate(&u, &StepperConfig::new(1e-3, 0.02, Scheme::ImexCn).unwrap(), &p, &s).unwrap();
        let b = simulate(&u, &StepperConfig::new(1e-3, 0.02, Scheme::ExplicitRk2).unwrap(), &p, &s).unwrap();
        let (fa, fb) = (a.last_field().unwrap(), b.last_field().unwrap());
        for (x, y) in fa.values().iter().zip(fb.values()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn blow_up_is_flagged() {
        let (g, p, s) = setup(16);
        let u = PeriodicField::from_modes(g, &[([7, 0], 50.0, 0.0)]);
        let cfg = StepperConfig::new(0.5, 50.0, Scheme::ExplicitRk2).unwrap();
        let tr = simulate(&u, &cfg, &p, &s).unwrap();
        assert_eq!(tr.termination, Termination::BlowUp);
        assert!(tr.c_limit.is_none());
        assert!(tr.snapshots.last().unwrap().1.is_finite());
    }
}
