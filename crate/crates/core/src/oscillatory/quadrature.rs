//! Gauss-Legendre rules and adaptive Gauss-Kronrod integration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::{ComplexSum, KahanSum};

/// A complex integral together with an a-posteriori bound on its error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryValue {
    pub value: Complex64,
    pub abs_error_estimate: f64,
}

impl OscillatoryValue {
    pub fn new(value: Complex64, abs_error_estimate: f64) -> Self {
        OscillatoryValue {
            value,
            abs_error_estimate: abs_error_estimate.abs(),
        }
    }

    pub fn zero() -> Self {
        Self::new(Complex64::new(0.0, 0.0), 0.0)
    }

    pub fn abs(&self) -> f64 {
        self.value.norm()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.value.conj(), self.abs_error_estimate)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.value * c, self.abs_error_estimate * c.norm())
    }

    /// Product with first-order error propagation.
    pub fn mul(&self, other: &OscillatoryValue) -> Self {
        Self::new(
            self.value * other.value,
            self.abs() * other.abs_error_estimate
                + other.abs() * self.abs_error_estimate
                + self.abs_error_estimate * other.abs_error_estimate,
        )
    }

    pub fn add(&self, other: &OscillatoryValue) -> Self {
        Self::new(
            self.value + other.value,
            self.abs_error_estimate + other.abs_error_estimate,
        )
    }

    /// Whether `target` lies within the error disc, inflated by `slack`.
    pub fn contains(&self, target: Complex64, slack: f64) -> bool {
        (self.value - target).norm() <= self.abs_error_estimate + slack
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// A reusable composite Gauss-Legendre grid: equal panels, fixed order.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            for (xi, wi) in gx.iter().zip(&gw) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        CompositeRule { nodes, weights }
    }

    /// Panels of width at most `max_width` between the given breakpoints.
    pub fn with_breaks(breaks: &[f64], max_width: f64, order: usize) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
            let r = CompositeRule::new(a, b, panels, order);
            nodes.extend(r.nodes);
            weights.extend(r.weights);
        }
        CompositeRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate_real(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut s = KahanSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.add(w * f(*x));
        }
        s.value()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let mut s = ComplexSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.add(f(*x) * *w);
        }
        s.value()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (Kronrod estimate, |Kronrod - Gauss|, int |f|).
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut l1 = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        let s = f1 + f2;
        k += s * WGK[j];
        l1 += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm(), l1 * h.abs())
}

/// Error level below which cancellation makes refinement pointless.
const ROUNDOFF: f64 = 100.0 * f64::EPSILON;

/// Settings for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial panels are no wider than this.
    pub max_width: f64,
    /// Budget on the total number of panels.
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_width: f64::INFINITY,
            max_panels: 200_000,
        }
    }
}

/// Globally adaptive G7K15 quadrature of a complex integrand on `[a, b]`.
///
/// The returned error is the sum of the per-panel Kronrod-Gauss differences,
/// which is conservative for smooth integrands.
pub fn adaptive<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
) -> Result<OscillatoryValue> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature("non-finite interval".into()));
    }
    if a == b {
        return Ok(OscillatoryValue::zero());
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let n0 = ((hi - lo) / opts.max_width).ceil().clamp(1.0, opts.max_panels as f64) as usize;
    let h = (hi - lo) / n0 as f64;
    // (a, b, value, err, l1) per panel.
    let mut panels: Vec<(f64, f64, Complex64, f64, f64)> = (0..n0)
        .map(|i| {
            let pa = lo + i as f64 * h;
            let pb = if i + 1 == n0 { hi } else { pa + h };
            let (v, e, l) = gk15(&f, pa, pb);
            (pa, pb, v, e, l)
        })
        .collect();
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Quadrature("integrand is not finite".into()));
        }
        let l1: f64 = panels.iter().map(|p| p.4).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.norm()).max(ROUNDOFF * l1);
        if err <= target {
            let value = panels.iter().map(|p| p.2).collect::<ComplexSum>().value();
            return Ok(OscillatoryValue::new(value * sign, err));
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature(format!(
                "panel budget {} exhausted with error {err:.3e} above {target:.3e}",
                opts.max_panels
            )));
        }
        // Split every panel whose error is above the average share.
        let share = target / panels.len() as f64;
        let mut next = Vec::with_capacity(panels.len() * 2);
        let mut split_any = false;
        for p in panels {
            let at_roundoff = p.3 <= ROUNDOFF * p.4 || p.1 - p.0 <= ROUNDOFF * (hi - lo);
            if p.3 > share && !at_roundoff && next.len() < opts.max_panels {
                let m = 0.5 * (p.0 + p.1);
                let (v1, e1, l1) = gk15(&f, p.0, m);
                let (v2, e2, l2) = gk15(&f, m, p.1);
                next.push((p.0, m, v1, e1, l1));
                next.push((m, p.1, v2, e2, l2));
                split_any = true;
            } else {
                next.push(p);
            }
        }
        if !split_any {
            // Every offending panel is at roundoff: report the honest estimate.
            let value = next.iter().map(|p| p.2).collect::<ComplexSum>().value();
            return Ok(OscillatoryValue::new(value * sign, err));
        }
        panels = next;
    }
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
) -> Result<(f64, f64)> {
    let v = adaptive(|x| Complex64::new(f(x), 0.0), a, b, opts)?;
    Ok((v.value.re, v.abs_error_estimate))
}
