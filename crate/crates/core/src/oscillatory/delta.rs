//! The smoothed delta-symbol expansion
//!
//! `delta(n) = (1/Q) sum_{q <= Q} (1/q) sum*_{a mod q} e(an/q) int g(q,x) e(nx/(qQ)) dx`.
//!
//! Construction: `omega` is a unit-mass bump on `[1/2, 1]`,
//! `h(x,y) = sum_j (xj)^-1 (omega(xj) - omega(|y|/(xj)))`, `psi` is a smooth
//! cutoff equal to 1 on `[-1/2, 1/2]` and 0 outside `(-1, 1)`,
//! `G_q(y) = h(q/Q, y) psi(y)` and `g(q,x) = int G_q(y) e(xyQ/q) dy`.
//! Then `int g(q,x) e(nx/(qQ)) dx = (q/Q) G_q(n/Q^2)`, which turns the
//! expansion into the exact divisor-switching identity for `|n| <= Q^2/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modarith::gcd;
use crate::oscillatory::quadrature::{adaptive_real, AdaptiveOptions, CompositeRule};
use crate::oscillatory::OscillatoryValue;
use crate::sum::KahanSum;

/// Default exponent of the logarithmic cutoffs.
pub const DEFAULT_C_EPS: f64 = 3.0;
const ORDER: usize = 12;

fn omega_raw(t: f64) -> f64 {
    if t <= 0.5 || t >= 1.0 {
        return 0.0;
    }
    // the standard bump exp(-1/(s(1-s))) moved to s = 2t - 1
    let u = (2.0 * t - 1.0) * (2.0 - 2.0 * t);
    let e = -1.0 / u;
    if e < -745.0 {
        0.0
    } else {
        e.exp()
    }
}

fn smooth_step_f(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth transition from 0 at `t <= 0` to 1 at `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = smooth_step_f(t);
    let b = smooth_step_f(1.0 - t);
    if a + b == 0.0 {
        return if t > 0.5 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

/// `psi(y)`: 1 for `|y| <= 1/2`, 0 for `|y| >= 1`.
pub fn psi(y: f64) -> f64 {
    smooth_step(2.0 * (1.0 - y.abs()))
}

/// Ramanujan sum `c_q(n)` evaluated as the complete sum over reduced residues.
pub fn ramanujan_sum(q: u64, n: i64) -> f64 {
    let nm = n.rem_euclid(q as i64) as u64;
    let mut s = KahanSum::new();
    for a in 1..=q {
        if gcd(a, q) == 1 {
            s.add(crate::characters::cis_fraction((a as u128 * nm as u128 % q as u128) as u64, q).re);
        }
    }
    s.value()
}

#[derive(Debug, Clone)]
pub struct DeltaKernel {
    pub q_big: f64,
    /// Truncation of the x-integral to `|x| <= x_cut`.
    pub x_cut: f64,
    omega_norm: f64,
}

impl DeltaKernel {
    pub fn new(q_big: f64, x_cut: f64) -> Result<Self> {
        if !(q_big >= 1.0) || !(x_cut > 0.0) {
            return Err(Error::Domain(format!(
                "need Q >= 1 and a positive x cutoff, got Q={q_big}, X={x_cut}"
            )));
        }
        let (mass, _) = adaptive_real(omega_raw, 0.5, 1.0, AdaptiveOptions::default())?;
        Ok(DeltaKernel {
            q_big,
            x_cut,
            omega_norm: 1.0 / mass,
        })
    }

    /// `Q = 2 sqrt(L)` with the x cutoff `(log Q)^c_eps`.
    pub fn for_length(l: f64, c_eps: f64) -> Result<Self> {
        let q = 2.0 * l.sqrt();
        Self::new(q, q.ln().max(1.0).powf(c_eps))
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.omega_norm * omega_raw(t)
    }

    pub fn h(&self, x: f64, y: f64) -> f64 {
        let mut s = KahanSum::new();
        let lo = (0.5 / x).floor().max(1.0) as u64;
        let hi = (1.0 / x).ceil() as u64;
        for j in lo..=hi {
            let t = x * j as f64;
            s.add(self.omega(t) / t);
        }
        let ay = y.abs();
        if ay > 0.0 {
            let lo = (ay / x).floor().max(1.0) as u64;
            let hi = (2.0 * ay / x).ceil() as u64;
            for j in lo..=hi {
                let t = x * j as f64;
                s.add(-self.omega(ay / t) / t);
            }
        }
        s.value()
    }

    /// `G_q(y) = h(q/Q, y) psi(y)`.
    pub fn big_g(&self, q: u64, y: f64) -> f64 {
        let p = psi(y);
        if p == 0.0 {
            return 0.0;
        }
        self.h(q as f64 / self.q_big, y) * p
    }

    /// Tabulates `G_q` on a y-grid fine enough for frequencies up to `x_max`.
    pub fn table(&self, q: u64, x_max: f64) -> GTable {
        let scale = self.q_big / q as f64;
        let width = (0.5 / (scale * x_max.max(1.0)))
            .min(0.125 / scale)
            .min(1.0 / 16.0);
        let rule = CompositeRule::with_breaks(&[0.0, 0.5, 1.0], width, ORDER);
        let values = rule.nodes.iter().map(|&y| self.big_g(q, y)).collect();
        GTable {
            q,
            scale,
            q_big: self.q_big,
            rule,
            values,
        }
    }

    /// `g(q, x)` by direct quadrature of the cosine transform.
    pub fn g(&self, q: u64, x: f64) -> f64 {
        self.table(q, x.abs()).g(x)
    }

    /// Largest admissible modulus `q <= Q`.
    pub fn q_max(&self) -> u64 {
        self.q_big.floor() as u64
    }

    /// The right side of the expansion for every `n` in `lo..=hi`, with the
    /// x-integral truncated at `x_cut`. The error estimate is the change
    /// when the cutoff is doubled.
    pub fn reconstruct_range(&self, lo: i64, hi: i64) -> Result<Vec<OscillatoryValue>> {
        if hi < lo {
            return Ok(Vec::new());
        }
        let bound = self.q_big * self.q_big / 2.0;
        if (lo.abs().max(hi.abs()) as f64) > bound {
            return Err(Error::Domain(format!("|n| must be at most Q^2/2 = {bound}")));
        }
        let count = (hi - lo + 1) as usize;
        let per_q: Vec<(Vec<f64>, Vec<f64>)> = (1..=self.q_max())
            .into_par_iter()
            .map(|q| {
                let t = self.table(q, 2.0 * self.x_cut);
                let (a, b) = t.truncated_integrals(lo, count, self.x_cut);
                let scale = 1.0 / (self.q_big * q as f64);
                let w: Vec<f64> = (0..count)
                    .map(|i| ramanujan_sum(q, lo + i as i64) * scale)
                    .collect();
                (
                    a.iter().zip(&w).map(|(v, c)| v * c).collect(),
                    b.iter().zip(&w).map(|(v, c)| v * c).collect(),
                )
            })
            .collect();
        Ok((0..count)
            .map(|i| {
                let mut s1 = KahanSum::new();
                let mut s2 = KahanSum::new();
                for (a, b) in &per_q {
                    s1.add(a[i]);
                    s2.add(b[i]);
                }
                OscillatoryValue::new(
                    Complex64::new(s1.value(), 0.0),
                    (s1.value() - s2.value()).abs(),
                )
            })
            .collect())
    }

    /// `(1/Q) sum_{d >= 1} omega(d/Q)`, the exact value of the expansion at `n = 0`.
    pub fn normalization(&self) -> f64 {
        let mut s = KahanSum::new();
        for d in 1..=self.q_max() + 1 {
            s.add(self.omega(d as f64 / self.q_big));
        }
        s.value() / self.q_big
    }

    /// `Q^-2 sum_q c_q(n) h(q/Q, n/Q^2)`, the value of the expansion with the
    /// x-integral done exactly.
    pub fn exact_expansion(&self, n: i64) -> f64 {
        let y = n as f64 / (self.q_big * self.q_big);
        let mut s = KahanSum::new();
        for q in 1..=self.q_max() {
            s.add(ramanujan_sum(q, n) * self.big_g(q, y));
        }
        s.value() / (self.q_big * self.q_big)
    }
}

/// `G_q` sampled on a composite Gauss-Legendre grid over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GTable {
    pub q: u64,
    /// `Q / q`.
    pub scale: f64,
    pub q_big: f64,
    pub rule: CompositeRule,
    pub values: Vec<f64>,
}

impl GTable {
    /// `g(q,x) = 2 int_0^1 G_q(y) cos(2 pi x y Q/q) dy`.
    pub fn g(&self, x: f64) -> f64 {
        self.g_deriv(x, 0)
    }

    /// `d^j/dx^j g(q, x)`.
    pub fn g_deriv(&self, x: f64, j: u32) -> f64 {
        let mut s = KahanSum::new();
        for ((y, w), gv) in self.rule.nodes.iter().zip(&self.rule.weights).zip(&self.values) {
            let k = 2.0 * PI * y * self.scale;
            let phase = k * x + j as f64 * std::f64::consts::FRAC_PI_2;
            s.add(w * gv * k.powi(j as i32) * phase.cos());
        }
        2.0 * s.value()
    }

    /// `g(q, i dx)` for `i < count`.
    pub fn g_uniform(&self, dx: f64, count: usize) -> Vec<f64> {
        let mut acc = vec![KahanSum::new(); count];
        for ((y, w), gv) in self.rule.nodes.iter().zip(&self.rule.weights).zip(&self.values) {
            if *gv == 0.0 {
                continue;
            }
            let step = Complex64::from_polar(1.0, 2.0 * PI * y * self.scale * dx);
            let mut rot = Complex64::new(1.0, 0.0);
            for (i, a) in acc.iter_mut().enumerate() {
                a.add(w * gv * rot.re);
                rot *= step;
                if i % 32 == 31 {
                    rot /= rot.norm();
                }
            }
        }
        acc.iter().map(|a| 2.0 * a.value()).collect()
    }

    /// `int |G_q|^2 dy` over the full line, which equals `(Q/q) int g^2 dx`.
    pub fn l2_mass(&self) -> f64 {
        2.0 * self.rule.integrate_real_values(&self.values, |v| v * v)
    }

    /// `int_{-X}^{X} g(q,x) e(nx/(qQ)) dx` for `n = lo, lo+1, ...` and both
    /// `X = x_cut` and `X = 2 x_cut`.
    ///
    /// The x-integral is done in closed form under the y-integral:
    /// `int_{-X}^{X} e(x theta) dx = sin(2 pi X theta) / (pi theta)` with
    /// `theta = yQ/q + n/(qQ)`.
    pub fn truncated_integrals(&self, lo: i64, count: usize, x_cut: f64) -> (Vec<f64>, Vec<f64>) {
        let mut acc1 = vec![KahanSum::new(); count];
        let mut acc2 = vec![KahanSum::new(); count];
        let dn = 1.0 / (self.q as f64 * self.q_big);
        let step = Complex64::from_polar(1.0, 2.0 * PI * x_cut * dn);
        for ((y, w), gv) in self.rule.nodes.iter().zip(&self.rule.weights).zip(&self.values) {
            if *gv == 0.0 {
                continue;
            }
            for sign in [1.0, -1.0] {
                let theta0 = sign * y * self.scale + lo as f64 * dn;
                let mut rot = Complex64::from_polar(1.0, 2.0 * PI * x_cut * theta0);
                for i in 0..count {
                    let theta = theta0 + i as f64 * dn;
                    let (d1, d2) = if theta.abs() < 1e-300 {
                        (2.0 * x_cut, 4.0 * x_cut)
                    } else {
                        let s1 = rot.im;
                        let s2 = 2.0 * rot.re * rot.im;
                        (s1 / (PI * theta), s2 / (PI * theta))
                    };
                    acc1[i].add(w * gv * d1);
                    acc2[i].add(w * gv * d2);
                    rot *= step;
                    if i % 32 == 31 {
                        rot /= rot.norm();
                    }
                }
            }
        }
        (
            acc1.iter().map(|s| s.value()).collect(),
            acc2.iter().map(|s| s.value()).collect(),
        )
    }
}

impl CompositeRule {
    fn integrate_real_values(&self, values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        let mut s = KahanSum::new();
        for (w, v) in self.weights.iter().zip(values) {
            s.add(w * f(*v));
        }
        s.value()
    }
}

/// Evaluates the expansion at `n` with `Q = 2 sqrt(L)` and the default cutoff.
pub fn delta_reconstruct(n: i64, l: f64) -> Result<f64> {
    delta_reconstruct_with(n, l, DEFAULT_C_EPS, 1e-2)
}

pub fn delta_reconstruct_with(n: i64, l: f64, c_eps: f64, tol: f64) -> Result<f64> {
    if n.unsigned_abs() as f64 > 2.0 * l {
        return Err(Error::Domain(format!("|n| = {} exceeds 2L = {}", n.abs(), 2.0 * l)));
    }
    let k = DeltaKernel::for_length(l, c_eps)?;
    let v = k.reconstruct_range(n, n)?[0];
    if v.abs_error_estimate > tol {
        return Err(Error::Quadrature(format!(
            "truncation estimate {:.3e} exceeds {tol:.1e}",
            v.abs_error_estimate
        )));
    }
    Ok(v.value.re)
}

/// Measured implied constants of the kernel properties on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelAudit {
    /// `sup |g - 1| / ((Q/q)(q/Q + |x|)^A)`.
    pub near_one: f64,
    /// `sup |g| |x|^A`.
    pub decay: f64,
    /// `sup_j |x^j g^(j)| / (log Q min(Q/q, 1/|x|))` over `j = 1, 2`.
    pub derivative: f64,
    /// `sup_q int (|g| + g^2) dx / log Q`.
    pub mass: f64,
}

impl DeltaKernel {
    /// Audits the kernel on `qs x xs` with exponent `a` in the first two bounds.
    pub fn audit(&self, qs: &[u64], xs: &[f64], a: i32) -> KernelAudit {
        let xmax = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let log_q = self.q_big.ln().max(1.0);
        let rows: Vec<(f64, f64, f64, f64)> = qs
            .par_iter()
            .map(|&q| {
                let t = self.table(q, xmax);
                let s = self.q_big / q as f64;
                let (mut c1, mut c2, mut c3) = (0.0f64, 0.0f64, 0.0f64);
                for &x in xs {
                    let ax = x.abs();
                    let g = t.g(x);
                    c1 = c1.max((g - 1.0).abs() / (s * (1.0 / s + ax).powi(a)));
                    if ax >= 1.0 {
                        c2 = c2.max(g.abs() * ax.powi(a));
                    }
                    if ax > 0.0 {
                        let cap = log_q * s.min(1.0 / ax);
                        for j in 1..=2 {
                            c3 = c3.max((ax.powi(j as i32) * t.g_deriv(x, j)).abs() / cap);
                        }
                    }
                }
                // int |g| dx over |x| <= 4 on a uniform grid resolving the
                // x-frequency Q/q; g is even.
                let xm = 4.0;
                let dx = 1.0 / (16.0 * s.max(1.0));
                let count = (xm / dx).ceil() as usize + 1;
                let tl = self.table(q, xm);
                let gs = tl.g_uniform(dx, count);
                let mut acc = KahanSum::new();
                for (i, g) in gs.iter().enumerate() {
                    let w = if i == 0 || i + 1 == count { 0.5 } else { 1.0 };
                    acc.add(w * g.abs());
                }
                let l1 = 2.0 * dx * acc.value();
                let l2 = t.l2_mass() / s;
                (c1, c2, c3, (l1 + l2) / log_q)
            })
            .collect();
        rows.iter().fold(
            KernelAudit {
                near_one: 0.0,
                decay: 0.0,
                derivative: 0.0,
                mass: 0.0,
            },
            |acc, r| KernelAudit {
                near_one: acc.near_one.max(r.0),
                decay: acc.decay.max(r.1),
                derivative: acc.derivative.max(r.2),
                mass: acc.mass.max(r.3),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_and_psi() {
        let k = DeltaKernel::new(20.0, 10.0).unwrap();
        let (m, _) = adaptive_real(|t| k.omega(t), 0.4, 1.1, AdaptiveOptions::default()).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert_eq!(psi(0.3), 1.0);
        assert_eq!(psi(-0.5), 1.0);
        assert_eq!(psi(1.0), 0.0);
        assert!(psi(0.75) > 0.0 && psi(0.75) < 1.0);
        assert!((psi(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ramanujan_sums() {
        assert!((ramanujan_sum(1, 5) - 1.0).abs() < 1e-14);
        assert!((ramanujan_sum(6, 0) - 2.0).abs() < 1e-14);
        assert!((ramanujan_sum(7, 3) + 1.0).abs() < 1e-13);
        assert!((ramanujan_sum(12, 6) + 4.0).abs() < 1e-13);
        assert!((ramanujan_sum(12, -6) + 4.0).abs() < 1e-13);
    }

    #[test]
    fn exact_expansion_is_the_delta_symbol() {
        let k = DeltaKernel::new(20.0, 10.0).unwrap();
        // At n = 0 the identity gives the Riemann sum of omega.
        assert!((k.exact_expansion(0) - k.normalization()).abs() < 1e-12);
        assert!((k.normalization() - 1.0).abs() < 1e-2);
        let big = DeltaKernel::new(200.0, 10.0).unwrap();
        assert!((big.normalization() - 1.0).abs() < 1e-9);
        for n in [1, -1, 2, 7, 30, -199, 200] {
            assert!(k.exact_expansion(n).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn closed_x_integral_matches_direct_x_quadrature() {
        // Independent route: tabulate g on an x-grid and integrate against e(nx/(qQ)).
        let k = DeltaKernel::new(20.0, 6.0).unwrap();
        for q in [3u64, 10, 20] {
            let t = k.table(q, 6.0);
            let (closed, _) = t.truncated_integrals(-2, 5, 6.0);
            let xr = CompositeRule::new(-6.0, 6.0, (12.0 * t.scale * 4.0) as usize + 8, 10);
            for (i, c) in closed.iter().enumerate() {
                let n = (i as i64 - 2) as f64;
                let direct = xr.integrate(|x| {
                    crate::characters::e(n * x / (q as f64 * k.q_big)) * t.g(x)
                });
                assert!((direct.re - c).abs() < 1e-8 && direct.im.abs() < 1e-8, "q={q} n={n}");
            }
        }
    }

    #[test]
    fn untruncated_limit_recovers_g_transform() {
        // As X grows the truncated integral tends to (q/Q) G_q(n/Q^2).
        let k = DeltaKernel::new(20.0, 40.0).unwrap();
        let q = 4;
        let t = k.table(q, 80.0);
        let (a, _) = t.truncated_integrals(0, 3, 40.0);
        for (i, v) in a.iter().enumerate() {
            let want = q as f64 / k.q_big * k.big_g(q, i as f64 / 400.0);
            assert!((v - want).abs() < 1e-6 * want.abs().max(1.0), "n={i}");
        }
    }

    #[test]
    fn small_reconstruction_is_even() {
        let k = DeltaKernel::new(20.0, 30.0).unwrap();
        let v = k.reconstruct_range(-5, 5).unwrap();
        assert!((v[5].value.re - 1.0).abs() < 1e-2);
        for i in 0..5 {
            assert!((v[i].value.re - v[10 - i].value.re).abs() < 1e-10);
            assert!(v[i].value.re.abs() < 1e-2);
        }
        assert!(k.reconstruct_range(0, 201).is_err());
    }

    #[test]
    fn g_is_near_one_for_small_q() {
        let k = DeltaKernel::new(200.0, 10.0).unwrap();
        let t = k.table(1, 1.0);
        assert!((t.g(0.0) - 1.0).abs() < 1e-2);
        assert!((t.g(1e-3) - 1.0).abs() < 1e-2);
    }
}
