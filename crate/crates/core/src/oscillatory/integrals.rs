//! The weight integrals of the Poisson and Voronoi steps and their combinations.
//!
//! With `c = p^(l-l1) q`, `f = Q/q` (so that `N/(p^l q Q) = f`):
//!
//! * `I(x,q,m) = int V(z) e(-f x z) e(-N m z/(p^r q)) dz`
//! * `J(eps,q,x,n) = int W1(y) e(f x y) e(eps 2 sqrt(nNy)/c) dy`, where
//!   `W1(y) = W(y) y^(-1/4) (4 pi)^(-1/2) W_eps(4 pi sqrt(nNy)/c)`
//! * `frak(eps,q,n,m) = int g(q,x) J I dx` over `|x| <= x_cut`
//!
//! In `frak` the x-integral is taken in closed form: with
//! `K(u) = int_{|x| <= X} g(q,x) e(f x u) dx` it equals
//! `int int W1(y) e(..) V(z) e(..) K(y - z) dy dz`, and `K` is itself a
//! Dirichlet-kernel average of `G_q`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::characters::e;
use crate::error::{Error, Result};
use crate::oscillatory::bessel::envelope_signed;
use crate::oscillatory::bump::bump;
use crate::oscillatory::delta::{DeltaKernel, GTable};
use crate::oscillatory::quadrature::{adaptive, AdaptiveOptions, CompositeRule};
use crate::oscillatory::OscillatoryValue;
use crate::pipeline::PipelineParams;
use crate::sum::ComplexSum;

/// Bessel order `k - 1` for the weight 12 form.
pub const BESSEL_ORDER: u32 = 11;

/// Phase rounding grows with the frequency, so the absolute floor does too.
fn opts_for(freq: f64) -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: 1e-15 * (1.0 + freq.abs()),
        rel_tol: 1e-12,
        max_width: (1.0 / freq.abs().max(1e-9)).min(0.25),
        max_panels: 400_000,
    }
}

/// z-frequency of `I`.
fn i_freq(params: &PipelineParams, q: u64, x: f64, m: i64) -> f64 {
    let f = params.q_big() / q as f64;
    f * x + params.n_scale * m as f64 / (params.p_pow(params.r) * q as f64)
}

/// `I(x, q, m)`.
pub fn integral_i(x: f64, q: u64, m: i64, params: &PipelineParams) -> Result<OscillatoryValue> {
    let phi = i_freq(params, q, x, m);
    adaptive(|z| e(-phi * z) * bump(z), 1.0, 2.0, opts_for(phi))
}

/// `W_{1,eps}(y)` at a real frequency `n`.
pub fn weight_w1(eps: i8, q: u64, n: f64, ell1: u32, y: f64, params: &PipelineParams) -> Complex64 {
    let w = bump(y);
    if w == 0.0 || n <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let c = params.p_pow(params.ell - ell1) * q as f64;
    let arg = 4.0 * PI * (n * params.n_scale * y).sqrt() / c;
    envelope_signed(BESSEL_ORDER, eps, arg) * (w * y.powf(-0.25) / (4.0 * PI).sqrt())
}

fn j_phase(eps: i8, q: u64, n: f64, ell1: u32, params: &PipelineParams) -> (f64, f64) {
    let c = params.p_pow(params.ell - ell1) * q as f64;
    let amp = eps as f64 * 2.0 * (n * params.n_scale).sqrt() / c;
    (params.q_big() / q as f64, amp)
}

/// `J(eps, q, x, n)`.
pub fn integral_j(
    eps: i8,
    q: u64,
    x: f64,
    n: f64,
    ell1: u32,
    params: &PipelineParams,
) -> Result<OscillatoryValue> {
    let (f, amp) = j_phase(eps, q, n, ell1, params);
    let freq = (f * x).abs() + amp.abs();
    adaptive(
        |y| weight_w1(eps, q, n, ell1, y, params) * e(f * x * y + amp * y.sqrt()),
        1.0,
        2.0,
        opts_for(freq),
    )
}

/// `int |W_{1,eps}|`, the trivial bound for `J`.
pub fn j_trivial_bound(eps: i8, q: u64, n: f64, ell1: u32, params: &PipelineParams) -> f64 {
    CompositeRule::new(1.0, 2.0, 64, 8)
        .integrate_real(|y| weight_w1(eps, q, n, ell1, y, params).norm())
}

/// Leading-order stationary-phase value of `J` after `y -> y^2`.
///
/// The phase is `F(t) = f x t^2 + amp t` on `t in [1, sqrt 2]` with
/// amplitude `a(t) = 2 t W1(t^2)`. The stationary point is
/// `t0 = -amp/(2 f x)` and `F'' = 2 f x`. The error estimate is the size of
/// the next term of the expansion, `|a''(t0)| / (4 pi |F''|)` times the
/// leading factor. When `t0` is outside the support the value is 0 and the
/// error is the first-derivative (non-stationary) bound.
pub fn stationary_phase_j(
    eps: i8,
    q: u64,
    x: f64,
    n: f64,
    ell1: u32,
    params: &PipelineParams,
    x_min: f64,
) -> Result<OscillatoryValue> {
    if x.abs() < x_min {
        return Err(Error::Domain(format!("|x| = {} is below the threshold {x_min}", x.abs())));
    }
    let (f, amp) = j_phase(eps, q, n, ell1, params);
    let fxx = 2.0 * f * x;
    let t0 = -amp / fxx;
    let amp_fn = |t: f64| weight_w1(eps, q, n, ell1, t * t, params) * (2.0 * t);
    let (lo, hi) = (1.0, 2f64.sqrt());
    if t0 <= lo || t0 >= hi {
        // int a e(F) = -int a' e(F) / (2 pi i F'), so |J| <= int |a'| / (2 pi min |F'|).
        let dmin = [lo, hi]
            .iter()
            .map(|t| (fxx * t + amp).abs())
            .fold(f64::INFINITY, f64::min);
        let h = 1e-5;
        let var = CompositeRule::new(lo, hi, 64, 8)
            .integrate_real(|t| ((amp_fn(t + h) - amp_fn(t - h)) / (2.0 * h)).norm());
        return Ok(OscillatoryValue::new(Complex64::new(0.0, 0.0), var / (2.0 * PI * dmin)));
    }
    let a0 = amp_fn(t0);
    let h = 1e-4 * (hi - lo);
    let a2 = (amp_fn(t0 + h) - a0 * 2.0 + amp_fn(t0 - h)) / (h * h);
    let phase = f * x * t0 * t0 + amp * t0 + fxx.signum() / 8.0;
    let lead = 1.0 / fxx.abs().sqrt();
    let value = a0 * e(phase) * lead;
    let err = a2.norm() * lead / (4.0 * PI * fxx.abs());
    Ok(OscillatoryValue::new(value, err))
}

/// Precomputed data for `frak(eps, q, n, m)` at a fixed `q`.
///
/// The y- and z-grids are shared by all `(n, m)`, so each value is a
/// bilinear form `a_n^T K b_m`.
#[derive(Debug, Clone)]
pub struct FrakGrid {
    pub q: u64,
    pub eps: i8,
    pub ell1: u32,
    params: PipelineParams,
    y: CompositeRule,
    z: CompositeRule,
    /// `K(y_j - z_k)` in row-major order.
    kernel: Vec<Complex64>,
    /// The same with a lower-order rule, for the error estimate.
    coarse: Option<Box<FrakGrid>>,
}

const FRAK_ORDER: usize = 16;

impl FrakGrid {
    /// Grids resolving `n <= n_max` and `|m| <= m_max`.
    pub fn new(
        kernel: &DeltaKernel,
        params: &PipelineParams,
        eps: i8,
        q: u64,
        ell1: u32,
        n_max: f64,
        m_max: f64,
    ) -> Self {
        let table = kernel.table(q, kernel.x_cut);
        let mut g = Self::with_order(&table, kernel.x_cut, params, eps, q, ell1, n_max, m_max, FRAK_ORDER);
        let coarse = Self::with_order(&table, kernel.x_cut, params, eps, q, ell1, n_max, m_max, 10);
        g.coarse = Some(Box::new(coarse));
        g
    }

    #[allow(clippy::too_many_arguments)]
    fn with_order(
        table: &GTable,
        x_cut: f64,
        params: &PipelineParams,
        eps: i8,
        q: u64,
        ell1: u32,
        n_max: f64,
        m_max: f64,
        order: usize,
    ) -> Self {
        let (f, amp) = j_phase(eps, q, n_max.max(1.0), ell1, params);
        let zf = params.n_scale * m_max.abs() / (params.p_pow(params.r) * q as f64);
        // K varies on the scale q/Q; the grids also carry the J and I phases.
        let panels_y = (amp.abs() + 2.0 * f + 6.0).ceil() as usize;
        let panels_z = (zf + 2.0 * f + 6.0).ceil() as usize;
        let y = CompositeRule::new(1.0, 2.0, panels_y, order);
        let z = CompositeRule::new(1.0, 2.0, panels_z, order);
        let mut kernel = Vec::with_capacity(y.len() * z.len());
        for &yj in &y.nodes {
            for &zk in &z.nodes {
                kernel.push(Complex64::new(dirichlet_average(table, x_cut, yj - zk), 0.0));
            }
        }
        FrakGrid {
            q,
            eps,
            ell1,
            params: params.clone(),
            y,
            z,
            kernel,
            coarse: None,
        }
    }

    /// Weighted samples of `W1(y) e(eps 2 sqrt(nNy)/c)` on the y-grid.
    pub fn a_vector(&self, n: f64) -> Vec<Complex64> {
        let (_, amp) = j_phase(self.eps, self.q, n, self.ell1, &self.params);
        self.y
            .nodes
            .iter()
            .zip(&self.y.weights)
            .map(|(&y, &w)| {
                weight_w1(self.eps, self.q, n, self.ell1, y, &self.params) * e(amp * y.sqrt()) * w
            })
            .collect()
    }

    /// `K b_m`, with `b_m` the weighted samples of `V(z) e(-N m z/(p^r q))`.
    pub fn kb_vector(&self, m: i64) -> Vec<Complex64> {
        let zf = self.params.n_scale * m as f64 / (self.params.p_pow(self.params.r) * self.q as f64);
        let b: Vec<Complex64> = self
            .z
            .nodes
            .iter()
            .zip(&self.z.weights)
            .map(|(&z, &w)| e(-zf * z) * (bump(z) * w))
            .collect();
        let nz = self.z.len();
        (0..self.y.len())
            .map(|j| {
                let row = &self.kernel[j * nz..(j + 1) * nz];
                row.iter().zip(&b).map(|(k, b)| k * b).sum()
            })
            .collect()
    }

    pub fn pair(a: &[Complex64], kb: &[Complex64]) -> Complex64 {
        a.iter().zip(kb).map(|(x, y)| x * y).collect::<ComplexSum>().value()
    }

    /// `frak(eps, q, n, m)` with the fine-minus-coarse error estimate.
    pub fn frak(&self, n: f64, m: i64) -> OscillatoryValue {
        let v = Self::pair(&self.a_vector(n), &self.kb_vector(m));
        let err = match &self.coarse {
            Some(c) => (Self::pair(&c.a_vector(n), &c.kb_vector(m)) - v).norm(),
            None => 0.0,
        };
        OscillatoryValue::new(v, err + 1e-15)
    }
}

/// A [`FrakGrid`] with the `K b_m` vectors of a fixed list of `m` cached,
/// for evaluating `frak` at many `n`.
#[derive(Debug, Clone)]
pub struct FrakBatch {
    grid: FrakGrid,
    fine: Vec<Vec<Complex64>>,
    coarse: Vec<Vec<Complex64>>,
}

impl FrakBatch {
    pub fn new(grid: FrakGrid, ms: &[i64]) -> Self {
        let fine = ms.iter().map(|&m| grid.kb_vector(m)).collect();
        let coarse = match &grid.coarse {
            Some(c) => ms.iter().map(|&m| c.kb_vector(m)).collect(),
            None => Vec::new(),
        };
        FrakBatch { grid, fine, coarse }
    }

    /// `frak(eps, q, n, m)` for every cached `m`, in order.
    pub fn values(&self, n: f64) -> Vec<OscillatoryValue> {
        let a = self.grid.a_vector(n);
        let ac = self.grid.coarse.as_ref().map(|c| c.a_vector(n));
        self.fine
            .iter()
            .enumerate()
            .map(|(i, kb)| {
                let v = FrakGrid::pair(&a, kb);
                let err = match &ac {
                    Some(ac) => (FrakGrid::pair(ac, &self.coarse[i]) - v).norm(),
                    None => 0.0,
                };
                OscillatoryValue::new(v, err + 1e-15)
            })
            .collect()
    }
}

/// `K(u) = int_{|x| <= X} g(q,x) e(f x u) dx
///       = int G_q(v) sin(2 pi X f (v+u)) / (pi f (v+u)) dv`.
pub fn dirichlet_average(table: &GTable, x_cut: f64, u: f64) -> f64 {
    let f = table.scale;
    let mut s = crate::sum::KahanSum::new();
    for ((v, w), gv) in table.rule.nodes.iter().zip(&table.rule.weights).zip(&table.values) {
        if *gv == 0.0 {
            continue;
        }
        for th in [f * (v + u), f * (u - v)] {
            let d = if th.abs() < 1e-300 {
                2.0 * x_cut
            } else {
                (2.0 * PI * x_cut * th).sin() / (PI * th)
            };
            s.add(w * gv * d);
        }
    }
    s.value()
}

/// The delta-method kernel used by `frak` for these parameters.
pub fn frak_kernel(params: &PipelineParams) -> Result<DeltaKernel> {
    DeltaKernel::new(params.q_big().max(1.0), params.x_cut)
}

/// `frak(eps, q, n, m)` for a single argument set.
pub fn integral_frak(
    eps: i8,
    q: u64,
    n: f64,
    m: i64,
    params: &PipelineParams,
) -> Result<OscillatoryValue> {
    let k = frak_kernel(params)?;
    let grid = FrakGrid::new(&k, params, eps, q, params.ell1, n, m as f64);
    Ok(grid.frak(n, m))
}

/// Literal x-quadrature of `g J I` over `|x| <= x_cut`, with `J` and `I`
/// evaluated on the same y- and z-grids. Slow; used to validate the
/// closed-form route.
pub fn integral_frak_xquad(
    eps: i8,
    q: u64,
    n: f64,
    m: i64,
    params: &PipelineParams,
) -> Result<Complex64> {
    let k = frak_kernel(params)?;
    let table = k.table(q, k.x_cut);
    let grid = FrakGrid::with_order(&table, k.x_cut, params, eps, q, params.ell1, n, m as f64, FRAK_ORDER);
    let a = grid.a_vector(n);
    let zf = params.n_scale * m as f64 / (params.p_pow(params.r) * q as f64);
    let b: Vec<Complex64> = grid
        .z
        .nodes
        .iter()
        .zip(&grid.z.weights)
        .map(|(&z, &w)| e(-zf * z) * (bump(z) * w))
        .collect();
    let f = table.scale;
    let panels = (2.0 * k.x_cut * 5.0 * f).ceil() as usize + 4;
    let xr = CompositeRule::new(-k.x_cut, k.x_cut, panels, 16);
    Ok(xr.integrate(|x| {
        let j: Complex64 = grid.y.nodes.iter().zip(&a).map(|(y, a)| a * e(f * x * y)).sum();
        let i: Complex64 = grid.z.nodes.iter().zip(&b).map(|(z, b)| b * e(-f * x * z)).sum();
        j * i * table.g(x)
    }))
}

/// `frak_1(n, q1, q2, m1, m2, eps) = int W2(y) frak(eps,q1,N0 y,m1)
/// conj(frak(eps,q2,N0 y,m2)) e(-n N0 y/(p^(l-l1) q1 q2)) dy`.
pub fn integral_frak1(
    n: i64,
    q1: u64,
    q2: u64,
    m1: i64,
    m2: i64,
    eps: i8,
    params: &PipelineParams,
) -> Result<OscillatoryValue> {
    let k = frak_kernel(params)?;
    let n0 = params.n0();
    let g1 = FrakGrid::new(&k, params, eps, q1, params.ell1, 2.0 * n0, m1 as f64);
    let g2 = FrakGrid::new(&k, params, eps, q2, params.ell1, 2.0 * n0, m2 as f64);
    let d = params.dual_modulus(q1 * q2) as f64;
    let freq = n as f64 * n0 / d;
    let (_, amp1) = j_phase(eps, q1, 2.0 * n0, params.ell1, params);
    let (_, amp2) = j_phase(eps, q2, 2.0 * n0, params.ell1, params);
    let panels = (freq.abs() + amp1.abs() + amp2.abs() + 4.0).ceil() as usize;
    let run = |order: usize| -> OscillatoryValue {
        let rule = CompositeRule::new(1.0, 2.0, panels, order);
        let kb1 = g1.kb_vector(m1);
        let kb2 = g2.kb_vector(m2);
        let mut s = ComplexSum::new();
        let mut err = 0.0;
        for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
            let w2 = bump(y);
            if w2 == 0.0 {
                continue;
            }
            let ny = n0 * y;
            let f1 = FrakGrid::pair(&g1.a_vector(ny), &kb1);
            let f2 = FrakGrid::pair(&g2.a_vector(ny), &kb2);
            let e1 = g1.frak(ny, m1).abs_error_estimate;
            let e2 = g2.frak(ny, m2).abs_error_estimate;
            s.add(f1 * f2.conj() * e(-freq * y) * (w * w2));
            err += w * w2 * (e1 * f2.norm() + e2 * f1.norm());
        }
        OscillatoryValue::new(s.value(), err)
    };
    let fine = run(16);
    let coarse = run(10);
    Ok(OscillatoryValue::new(
        fine.value,
        fine.abs_error_estimate + (fine.value - coarse.value).norm(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_params() -> PipelineParams {
        PipelineParams::new(250.0, 5, 3, 1, 0, 1.0).unwrap()
    }

    #[test]
    fn i_basic_cases() {
        let p = poisson_params();
        let mass = crate::oscillatory::BumpFunction::new(0).mass();
        let v = integral_i(0.0, 1, 0, &p).unwrap();
        assert!((v.value.re - mass).abs() < 1e-12 && v.value.im.abs() < 1e-14);
        // far beyond the M0 scale
        let m = (50.0 * p.m0()).ceil() as i64;
        let v = integral_i(0.0, 1, m, &p).unwrap();
        assert!(v.abs() < 1e-8 * mass);
    }

    #[test]
    fn i_integration_by_parts_bound() {
        let p = poisson_params();
        let pr = p.p_pow(p.r);
        let mut worst = 0.0f64;
        for q in [1u64, 2, 3] {
            for x in [0.0, 0.3, -0.7, 2.0] {
                for m in [1i64, 2, 5, 10, -7] {
                    let v = integral_i(x, q, m, &p).unwrap().abs();
                    let qq = q as f64;
                    let bound = (1.0 + p.n_scale * f64::abs(x) / (p.p_pow(p.ell) * qq * p.q_big())).powi(2)
                        * (pr * qq / (p.n_scale * m.abs() as f64)).powi(2);
                    worst = worst.max(v / bound);
                }
            }
        }
        assert!(worst < 100.0, "measured constant {worst}");
    }

    #[test]
    fn j_limits() {
        let p = PipelineParams::new(500.0, 5, 4, 2, 0, 1.0).unwrap();
        let v = integral_j(1, 3, 0.0, 2.0, 0, &p).unwrap();
        assert!(v.abs() <= j_trivial_bound(1, 3, 2.0, 0, &p) + 1e-12);
        let big = integral_j(1, 1, 0.0, 50.0 * p.n0(), 0, &p).unwrap();
        assert!(big.abs() < 1e-8, "{}", big.abs());
    }

    #[test]
    fn stationary_phase_agrees_in_its_regime() {
        // f'' = 2 f x large, stationary point inside [1, sqrt 2].
        let p = PipelineParams::new(2.0e4, 5, 6, 2, 0, 1.0).unwrap();
        let q = 1;
        let f = p.q_big();
        let (_, amp) = j_phase(-1, q, 400.0, 0, &p);
        let t0 = 1.2;
        let x = -amp / (2.0 * f * t0);
        assert!(2.0 * f * x * (2f64.sqrt() - 1.0).powi(2) >= 30.0);
        let exact = integral_j(-1, q, x, 400.0, 0, &p).unwrap();
        let sp = stationary_phase_j(-1, q, x, 400.0, 0, &p, 1e-3).unwrap();
        assert!((exact.value - sp.value).norm() <= 0.1 * exact.abs(), "{} vs {}", exact.value, sp.value);
        assert!(1.0 / (2.0 * f * x).sqrt() <= (p.p_pow(p.ell) * q as f64 * f / p.n_scale).sqrt());
        // outside the support
        let far = stationary_phase_j(-1, q, 4.0 * x, 400.0, 0, &p, 1e-3).unwrap();
        let ex = integral_j(-1, q, 4.0 * x, 400.0, 0, &p).unwrap();
        assert_eq!(far.value, Complex64::new(0.0, 0.0));
        assert!(ex.abs() <= far.abs_error_estimate);
        assert!(stationary_phase_j(-1, q, 1e-5, 400.0, 0, &p, 1e-3).is_err());
    }

    #[test]
    fn frak_grid_matches_direct_quadratures() {
        let p = PipelineParams::new(343.0, 7, 4, 2, 0, 0.0).unwrap().with_x_cut(3.0);
        let k = frak_kernel(&p).unwrap();
        let q = 2;
        let grid = FrakGrid::new(&k, &p, 1, q, 0, 98.0, 18.0);
        for (n, m) in [(60.0, 3i64), (90.0, -11)] {
            let closed = grid.frak(n, m);
            let lit = integral_frak_xquad(1, q, n, m, &p).unwrap();
            assert!((closed.value - lit).norm() < 1e-8 * closed.abs().max(1e-3), "{} {}", closed.value, lit);
            assert!(closed.abs_error_estimate < 1e-6 * closed.abs().max(1e-3));
        }
        // J and I on the grids against the adaptive routines
        let a = grid.a_vector(60.0);
        let x = 0.7;
        let f = p.q_big() / q as f64;
        let j: Complex64 = grid.y.nodes.iter().zip(&a).map(|(y, a)| a * e(f * x * y)).sum();
        let jj = integral_j(1, q, x, 60.0, 0, &p).unwrap();
        assert!(jj.contains(j, 1e-10));
        let batch = FrakBatch::new(grid.clone(), &[3, -11]);
        let vals = batch.values(60.0);
        assert_eq!(vals[0], grid.frak(60.0, 3));
        assert_eq!(vals[1], grid.frak(60.0, -11));
    }

    #[test]
    fn frak_x_support() {
        let p = PipelineParams::new(343.0, 7, 4, 2, 0, 0.0).unwrap().with_x_cut(8.0);
        let v = integral_frak(1, 1, 60.0, 5, &p).unwrap();
        let w = integral_frak(1, 1, 60.0, 5, &p.clone().with_x_cut(16.0)).unwrap();
        assert!((v.value - w.value).norm() < 1e-8 * v.abs());
    }
}
