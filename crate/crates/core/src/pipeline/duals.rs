//! Numerical checks of the Poisson and Voronoi dualities for a single
//! `(a, b, q, x)`: both sides are computed independently and compared.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::characters::{cis_fraction, e, DirichletCharacter};
use crate::charsums::{charsum_c_closed, CongruenceContext};
use crate::error::{Error, Result};
use crate::forms::FormTable;
use crate::modarith::{gcd, inv_mod_i};
use crate::oscillatory::bump::bump;
use crate::oscillatory::integrals::{integral_i, integral_j};
use crate::oscillatory::OscillatoryValue;
use crate::pipeline::PipelineParams;
use crate::sum::ComplexSum;

/// Outcome of a duality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualComparison {
    pub lhs: Complex64,
    /// Dual side at the default truncation, with its quadrature error.
    pub rhs: OscillatoryValue,
    /// Dual side with the truncation doubled.
    pub rhs_doubled: Complex64,
    pub difference: f64,
    /// `|rhs_doubled - rhs| / |rhs|`, net of the quadrature error estimate
    /// of the added shell.
    pub tail_change: f64,
    /// Quadrature budget plus `rel_slack * |lhs|`.
    pub budget: f64,
}

impl DualComparison {
    fn new(lhs: Complex64, rhs: OscillatoryValue, rhs_doubled: Complex64, shell_err: f64, rel_slack: f64) -> Self {
        let scale = rhs.abs().max(f64::MIN_POSITIVE);
        let change = ((rhs_doubled - rhs.value).norm() - shell_err).max(0.0);
        DualComparison {
            lhs,
            rhs,
            rhs_doubled,
            difference: (lhs - rhs.value).norm(),
            tail_change: change / scale,
            budget: rhs.abs_error_estimate + rel_slack * lhs.norm(),
        }
    }

    pub fn within_budget(&self) -> bool {
        self.difference <= self.budget
    }

    pub fn relative_difference(&self) -> f64 {
        self.difference / self.lhs.norm().max(f64::MIN_POSITIVE)
    }
}

/// Integer points `n` with `W(n / N) != 0`.
fn bump_range(n_scale: f64) -> std::ops::RangeInclusive<u64> {
    (n_scale.floor() as u64 + 1)..=((2.0 * n_scale).ceil() as u64 - 1)
}

/// `(a + b q) mod p^l q` as a nonnegative residue.
fn shift_residue(a: i64, b: i64, q: u64, modulus: u64) -> u64 {
    (a as i128 + b as i128 * q as i128).rem_euclid(modulus as i128) as u64
}

/// The m-sum of the Poisson step and its dual.
///
/// The dual side keeps `|m| <= ceil(M0)` and is recomputed with twice that
/// range to expose the truncation tail.
pub fn poisson_verify(
    params: &PipelineParams,
    chi: &DirichletCharacter,
    tau: Complex64,
    a: i64,
    b: i64,
    q: u64,
    x: f64,
) -> Result<DualComparison> {
    let p = params.p;
    if q == 0 || q % p == 0 {
        return Err(Error::NotCoprime(format!("q={q} must be prime to p={p}")));
    }
    if gcd(a.rem_euclid(q as i64) as u64, q) != 1 {
        return Err(Error::NotCoprime(format!("a={a} must be a unit mod q={q}")));
    }
    let pl = params.p_pow_u64(params.ell);
    let small = pl * q;
    let u = shift_residue(a, b, q, small);
    let f = params.q_big() / q as f64;
    let nf = params.n_scale;
    let mut lhs = ComplexSum::new();
    for m in bump_range(nf) {
        let v = bump(m as f64 / nf);
        if v == 0.0 {
            continue;
        }
        let add = (small - (u as u128 * m as u128 % small as u128) as u64) % small;
        let osc = e(-(m as f64) * x * f / nf);
        lhs.add(chi.eval_complex_u64(m) * cis_fraction(add, small) * osc * v);
    }

    let scale = nf / (params.p_pow(params.r) * q as f64);
    let m_cut = params.m0().ceil() as i64;
    let partial = |lo: i64, hi: i64| -> Result<(Complex64, f64)> {
        let mut s = ComplexSum::new();
        let mut err = 0.0;
        for m in lo..=hi {
            for m in if m == 0 { vec![0] } else { vec![m, -m] } {
                let ctx = CongruenceContext { ell: params.ell, q, a, b, m };
                let c = charsum_c_closed(&ctx, chi, tau);
                if c.norm() == 0.0 {
                    continue;
                }
                let i = integral_i(x, q, m, params)?;
                s.add(c * i.value);
                err += c.norm() * i.abs_error_estimate;
            }
        }
        Ok((s.value() * scale, err * scale))
    };
    let (inner, inner_err) = partial(0, m_cut)?;
    let (outer, outer_err) = partial(m_cut + 1, 2 * m_cut)?;
    let rhs = OscillatoryValue::new(inner, inner_err + 1e-14 * inner.norm());
    Ok(DualComparison::new(lhs.value(), rhs, inner + outer, outer_err, 1e-6))
}

/// The n-sum of the Voronoi step, with `gcd(a + b q, p^l) = p^l1`, and its dual.
///
/// The dual side keeps `n <= ceil(N0)` and is recomputed with twice that range.
#[allow(clippy::too_many_arguments)]
pub fn voronoi_verify(
    params: &PipelineParams,
    form: &FormTable,
    a: i64,
    b: i64,
    q: u64,
    x: f64,
    ell1: u32,
) -> Result<DualComparison> {
    let params = params.with_ell1(ell1)?;
    let p = params.p;
    if q == 0 || q % p == 0 || gcd(a.rem_euclid(q as i64) as u64, q) != 1 {
        return Err(Error::NotCoprime(format!("need (q, p) = 1 and (a, q) = 1, got a={a}, q={q}")));
    }
    let pl = params.p_pow_u64(params.ell);
    let small = pl * q;
    let u = shift_residue(a, b, q, small);
    let pl1 = params.p_pow_u64(ell1);
    let exact = u % pl1 == 0 && (ell1 == params.ell || (u / pl1) % p != 0);
    if !exact {
        return Err(Error::Domain(format!("gcd(a + b q, p^l) is not p^{ell1}")));
    }
    let c = params.dual_modulus(q);
    let ubar = inv_mod_i((u / pl1) as i128, c)?;

    let nf = params.n_scale;
    let f = params.q_big() / q as f64;
    let n_cut = params.n0().ceil().max(1.0) as u64;
    form.require((*bump_range(nf).end()).max(2 * n_cut))?;

    let mut lhs = ComplexSum::new();
    for n in bump_range(nf) {
        let w = bump(n as f64 / nf);
        if w == 0.0 {
            continue;
        }
        let add = (u as u128 * n as u128 % small as u128) as u64;
        let osc = e(n as f64 * x * f / nf);
        lhs.add(cis_fraction(add, small) * osc * (form.lambda(n)? * w));
    }

    // 2 pi i^k N^(3/4) / c^(1/2), with i^12 = 1.
    let pref = 2.0 * PI * nf.powf(0.75) / (c as f64).sqrt();
    let partial = |lo: u64, hi: u64| -> Result<(Complex64, f64)> {
        let mut s = ComplexSum::new();
        let mut err = 0.0;
        for n in lo..=hi {
            let coeff = form.lambda(n)? * (n as f64).powf(-0.25);
            let add = (c - (ubar as u128 * n as u128 % c as u128) as u64) % c;
            let tw = cis_fraction(add, c) * coeff;
            for eps in [1i8, -1] {
                let j = integral_j(eps, q, x, n as f64, ell1, &params)?;
                s.add(tw * j.value);
                err += coeff.abs() * j.abs_error_estimate;
            }
        }
        Ok((s.value() * pref, err * pref))
    };
    let (inner, inner_err) = partial(1, n_cut)?;
    let (outer, outer_err) = partial(n_cut + 1, 2 * n_cut)?;
    let rhs = OscillatoryValue::new(inner, inner_err + 1e-12 * inner.norm());
    Ok(DualComparison::new(lhs.value(), rhs, inner + outer, outer_err, 1e-3))
}
