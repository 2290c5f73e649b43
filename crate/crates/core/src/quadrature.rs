//! Gauss–Legendre rules and a globally adaptive Gauss–Kronrod integrator.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// 15-point Kronrod extension of the 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive { abs_tol: 1e-12, rel_tol: 1e-13, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Adaptive {
    pub fn with_tol(abs_tol: f64) -> Self {
        Adaptive { abs_tol, ..Default::default() }
    }

    /// Globally adaptive bisection: always split the interval with the largest
    /// error estimate.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> Estimate {
        if a == b {
            return Estimate { value: 0.0, error: 0.0, converged: true };
        }
        let (v, e) = gk15(&mut f, a, b);
        let mut pieces: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
        let mut value = v;
        let mut error = e;
        while error > self.abs_tol.max(self.rel_tol * value.abs()) {
            if pieces.len() >= self.max_intervals {
                return Estimate { value, error, converged: false };
            }
            let (worst, _) = pieces
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
            let (lo, hi, _, _) = pieces.swap_remove(worst);
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Estimate { value, error, converged: false };
            }
            let (v1, e1) = gk15(&mut f, lo, mid);
            let (v2, e2) = gk15(&mut f, mid, hi);
            pieces.push((lo, mid, v1, e1));
            pieces.push((mid, hi, v2, e2));
            // Re-summing avoids drift from incremental updates.
            value = pieces.iter().map(|p| p.2).sum();
            error = pieces.iter().map(|p| p.3).sum();
        }
        Estimate { value, error, converged: true }
    }

    /// Integrates over consecutive breakpoints, e.g. kinks of the integrand.
    pub fn integrate_pieces<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> Estimate {
        let parts = breaks.len().saturating_sub(1).max(1) as f64;
        let sub = Adaptive { abs_tol: self.abs_tol / parts, ..*self };
        let mut out = Estimate { value: 0.0, error: 0.0, converged: true };
        for w in breaks.windows(2) {
            let e = sub.integrate(w[0], w[1], &mut f);
            out.value += e.value;
            out.error += e.error;
            out.converged &= e.converged;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16, 33, 200] {
            let gl = GaussLegendre::new(n);
            for deg in 0..(2 * n).min(40) {
                let got = gl.integrate(-1.0, 1.0, |x| libm::pow(x, deg as f64));
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}: {got} vs {want}");
            }
            let total: f64 = gl.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn large_rule_integrates_oscillation() {
        let gl = GaussLegendre::new(400);
        let got = gl.integrate(0.0, 100.0, libm::cos);
        assert!((got - libm::sin(100.0)).abs() < 1e-12);
    }

    #[test]
    fn kronrod_pair_is_consistent() {
        let wsum: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let gsum: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((wsum - 2.0).abs() < 1e-15 && (gsum - 2.0).abs() < 1e-15);
        let mut f = |x: f64| libm::pow(x, 22.0);
        let (v, _) = gk15(&mut f, -1.0, 1.0);
        assert!((v - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = Adaptive::with_tol(1e-12).integrate(0.0, 1.0, |x| 1.0 / libm::sqrt(x).max(1e-300));
        assert!(est.converged);
        assert!((est.value - 2.0).abs() < 1e-9, "{}", est.value);
        let est = Adaptive::with_tol(1e-13).integrate(0.0, PI, |x| libm::pow(libm::sin(x), 1.5));
        // 2 sqrt(pi) Gamma(5/4) / Gamma(7/4) / 2
        let want = libm::sqrt(PI) * libm::tgamma(1.25) / libm::tgamma(1.75);
        assert!((est.value - want).abs() < 1e-12);
    }
}
