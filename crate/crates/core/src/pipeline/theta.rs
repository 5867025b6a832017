//! The quantity Theta obtained from Cauchy-Schwarz on the n-sum, evaluated
//! twice: literally as a sum over `n`, and after Poisson summation in `n`
//! with the dual frequencies restricted by the two congruences.
//!
//! Notation: `s' = l - l1`, `t = p^(r - s')`, `k = p^r conj(p^(2 s')) mod q`.
//! The inner sum of Theta at frequency `n` is
//!
//! `sum_q chi(q) q^(-3/2) sum_m sum*_alpha conj(chi)(m - alpha t)
//!  e(-conj(alpha) conj(q) n / p^s' - conj(m) k n / q) frak(eps, q, n, m)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::characters::{cis_fraction, e, DirichletCharacter};
use crate::error::{Error, Result};
use crate::modarith::{gcd, inv_mod_i, mul_mod, pow_mod_u64};
use crate::oscillatory::bump::bump;
use crate::oscillatory::integrals::{frak_kernel, FrakBatch, FrakGrid};
use crate::oscillatory::quadrature::CompositeRule;
use crate::oscillatory::OscillatoryValue;
use crate::pipeline::PipelineParams;
use crate::sum::ComplexSum;

/// Default ceiling on the number of summands either side may visit.
pub const DEFAULT_MAX_TERMS: u64 = 10_000_000;

/// The summation ranges of Theta at fixed `eps` and `l1`.
#[derive(Debug, Clone)]
pub struct ThetaInstance {
    pub params: PipelineParams,
    pub eps: i8,
    pub moduli: Vec<u64>,
    /// `ms[i]` lists the `m` paired with `moduli[i]`.
    pub ms: Vec<Vec<i64>>,
    /// Units `alpha mod p^s'`.
    pub alphas: Vec<u64>,
    /// Dual frequencies `|n'| <= window p^s' q1 q2 / N0` are kept; the
    /// shell up to twice that is evaluated separately as the tail.
    pub window: f64,
    pub max_terms: u64,
}

/// A value of Theta with its error estimate, truncation tail and work count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: OscillatoryValue,
    /// Contribution of the dual frequencies between one and two windows.
    pub tail: Complex64,
    pub terms: u64,
}

impl ThetaValue {
    /// Combined budget: both error estimates plus the measured tails.
    pub fn budget_with(&self, other: &ThetaValue) -> f64 {
        self.value.abs_error_estimate + other.value.abs_error_estimate + self.tail.norm() + other.tail.norm()
    }

    pub fn agrees_with(&self, other: &ThetaValue) -> bool {
        (self.value.value - other.value.value).norm() <= self.budget_with(other)
    }
}

impl ThetaInstance {
    /// All `q <= Q` prime to `p`, all `1 <= |m| <= M0` prime to `pq`, all units `alpha`.
    pub fn new(params: &PipelineParams, eps: i8) -> Result<Self> {
        if eps != 1 && eps != -1 {
            return Err(Error::Domain(format!("eps must be +1 or -1, got {eps}")));
        }
        let p = params.p;
        let ps = params.p_pow_u64(params.ell - params.ell1);
        let m_max = (params.m0() + 1e-9).floor() as i64;
        let moduli = params.moduli();
        let ms = moduli
            .iter()
            .map(|&q| {
                (1..=m_max)
                    .flat_map(|m| [m, -m])
                    .filter(|m| m.unsigned_abs() % p != 0 && gcd(m.unsigned_abs(), q) == 1)
                    .collect()
            })
            .collect();
        Ok(ThetaInstance {
            params: params.clone(),
            eps,
            moduli,
            ms,
            alphas: (1..ps).filter(|a| a % p != 0).collect(),
            window: 40.0,
            max_terms: DEFAULT_MAX_TERMS,
        })
    }

    fn ps(&self) -> u64 {
        self.params.p_pow_u64(self.params.ell - self.params.ell1)
    }

    fn t(&self) -> i128 {
        self.params.p_pow_u64(self.params.r - (self.params.ell - self.params.ell1)) as i128
    }

    /// `k mod q`.
    fn k_mod(&self, q: u64) -> Result<u64> {
        if q == 1 {
            return Ok(0);
        }
        let p = self.params.p;
        let s2 = 2 * (self.params.ell - self.params.ell1) as u64;
        let inv = inv_mod_i(pow_mod_u64(p, s2, q) as i128, q)?;
        Ok(mul_mod(pow_mod_u64(p, self.params.r as u64, q), inv, q))
    }

    /// `conj(m) k mod q`.
    fn m_phase(&self, m: i64, q: u64) -> Result<u64> {
        if q == 1 {
            return Ok(0);
        }
        Ok(mul_mod(inv_mod_i(m as i128, q)?, self.k_mod(q)?, q))
    }

    fn n_range(&self) -> std::ops::RangeInclusive<u64> {
        let n0 = self.params.n0();
        (n0.floor() as u64 + 1)..=((2.0 * n0).ceil() as u64 - 1)
    }

    fn batches(&self) -> Result<Vec<FrakBatch>> {
        let kernel = frak_kernel(&self.params)?;
        let n_max = 2.0 * self.params.n0();
        let m_max = self.params.m0();
        Ok(self
            .moduli
            .iter()
            .zip(&self.ms)
            .map(|(&q, ms)| {
                let grid = FrakGrid::new(&kernel, &self.params, self.eps, q, self.params.ell1, n_max, m_max);
                FrakBatch::new(grid, ms)
            })
            .collect())
    }

    fn direct_terms(&self) -> u64 {
        let per_n: u64 = self.ms.iter().map(|m| m.len() as u64).sum::<u64>() * self.alphas.len() as u64;
        per_n * self.n_range().count() as u64
    }

    fn dual_terms(&self) -> u64 {
        let a2 = (self.alphas.len() * self.alphas.len()) as u64;
        let per_pair = a2 + (4.0 * self.window + 1.0) as u64;
        let mut t = 0u64;
        for m1 in &self.ms {
            for m2 in &self.ms {
                t += (m1.len() * m2.len()) as u64 * per_pair;
            }
        }
        t
    }

    fn check_budget(&self, terms: u64) -> Result<()> {
        if terms > self.max_terms {
            return Err(Error::Budget(format!("{terms} summands exceed the budget {}", self.max_terms)));
        }
        Ok(())
    }

    /// `conj(chi)(m - alpha t)` for every alpha.
    fn alpha_weights(&self, chi: &DirichletCharacter, m: i64) -> Vec<Complex64> {
        let t = self.t();
        self.alphas
            .iter()
            .map(|&a| chi.eval_complex(m as i128 - a as i128 * t).conj())
            .collect()
    }
}

/// Theta summed literally over `n`.
pub fn theta_direct(inst: &ThetaInstance, chi: &DirichletCharacter) -> Result<ThetaValue> {
    let terms = inst.direct_terms();
    inst.check_budget(terms)?;
    let ps = inst.ps();
    let batches = inst.batches()?;
    let n0 = inst.params.n0();

    // Per (q, m): alpha weights, conj(alpha) conj(q) mod p^s', and conj(m) k mod q.
    struct Row {
        weights: Vec<Complex64>,
        m_phase: u64,
    }
    let mut rows: Vec<Vec<Row>> = Vec::new();
    let mut a_phase: Vec<Vec<u64>> = Vec::new();
    for (&q, ms) in inst.moduli.iter().zip(&inst.ms) {
        let qbar = inv_mod_i(q as i128, ps)?;
        a_phase.push(
            inst.alphas
                .iter()
                .map(|&a| Ok(mul_mod(inv_mod_i(a as i128, ps)?, qbar, ps)))
                .collect::<Result<_>>()?,
        );
        rows.push(
            ms.iter()
                .map(|&m| {
                    Ok(Row {
                        weights: inst.alpha_weights(chi, m),
                        m_phase: inst.m_phase(m, q)?,
                    })
                })
                .collect::<Result<_>>()?,
        );
    }

    let per_n: Vec<(f64, Complex64, f64)> = inst
        .n_range()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&n| {
            let w2 = bump(n as f64 / n0);
            let mut s = ComplexSum::new();
            let mut err = 0.0;
            for (iq, &q) in inst.moduli.iter().enumerate() {
                let cq = chi.eval_complex(q as i128) * (q as f64).powf(-1.5);
                let frak = batches[iq].values(n as f64);
                for (row, fr) in rows[iq].iter().zip(&frak) {
                    let mut a_sum = ComplexSum::new();
                    for (w, &ph) in row.weights.iter().zip(&a_phase[iq]) {
                        let num = (ps - mul_mod(ph, n % ps, ps)) % ps;
                        a_sum.add(w * cis_fraction(num, ps));
                    }
                    let mnum = (q - mul_mod(row.m_phase, n % q, q)) % q;
                    let coef = cq * a_sum.value() * cis_fraction(mnum, q);
                    s.add(coef * fr.value);
                    err += coef.norm() * fr.abs_error_estimate;
                }
            }
            (w2, s.value(), err)
        })
        .collect();

    let mut total = 0.0;
    let mut err = 0.0;
    for (w2, s, e) in per_n {
        total += w2 * s.norm_sqr();
        err += w2 * (2.0 * s.norm() * e + e * e);
    }
    Ok(ThetaValue {
        value: OscillatoryValue::new(Complex64::new(total, 0.0), err + 1e-13 * total),
        tail: Complex64::new(0.0, 0.0),
        terms,
    })
}

/// Per-modulus samples of `frak(eps, q, N0 y, m)` on a y-rule.
struct YSamples {
    values: Vec<Vec<Complex64>>,
    errors: Vec<Vec<f64>>,
}

fn sample(batch: &FrakBatch, n_ms: usize, rule: &CompositeRule, n0: f64) -> YSamples {
    let mut values = vec![Vec::with_capacity(rule.len()); n_ms];
    let mut errors = vec![Vec::with_capacity(rule.len()); n_ms];
    for &y in &rule.nodes {
        for (i, v) in batch.values(n0 * y).into_iter().enumerate() {
            values[i].push(v.value);
            errors[i].push(v.abs_error_estimate);
        }
    }
    YSamples { values, errors }
}

/// The congruence data of one `(q1, q2, m1, m2)`.
struct PairClass {
    /// `h mod q1 q2`.
    h_q: u64,
    /// `sum conj(chi)(m1 - a1 t) chi(m2 - a2 t)` over pairs with
    /// `conj(a1) q2 - conj(a2) q1 = rho mod p^s'`, indexed by `rho`.
    by_residue: Vec<Complex64>,
}

fn pair_class(
    inst: &ThetaInstance,
    q: (u64, u64),
    m: (i64, i64),
    w: (&[Complex64], &[Complex64]),
    alpha_inv: &[u64],
) -> Result<PairClass> {
    let ps = inst.ps();
    let (q1, q2) = q;
    let qq = q1 * q2;
    let h1 = inst.m_phase(m.0, q1)?;
    let h2 = inst.m_phase(m.1, q2)?;
    let raw = (ps as i128 % qq as i128) * (h1 as i128 * q2 as i128 - h2 as i128 * q1 as i128);
    let h_q = raw.rem_euclid(qq as i128) as u64;
    let mut by_residue = vec![Complex64::new(0.0, 0.0); ps as usize];
    let (q1p, q2p) = (q1 % ps, q2 % ps);
    for (i1, w1) in w.0.iter().enumerate() {
        let a = mul_mod(alpha_inv[i1], q2p, ps);
        for (i2, w2) in w.1.iter().enumerate() {
            let b = mul_mod(alpha_inv[i2], q1p, ps);
            let rho = (a + ps - b) % ps;
            by_residue[rho as usize] += w1 * w2.conj();
        }
    }
    Ok(PairClass { h_q, by_residue })
}

/// Theta after Poisson summation in `n`:
/// `N0 sum chi(q1) conj(chi)(q2) (q1 q2)^(-3/2) sum_{m1, m2} sum_{alpha1, alpha2}
///  conj(chi)(m1 - alpha1 t) chi(m2 - alpha2 t) sum_{n' = h mod D} frak1(n')`
/// with `D = p^s' q1 q2` and `h/D = theta(q1, m1, alpha1) - theta(q2, m2, alpha2)`.
pub fn theta_dual(inst: &ThetaInstance, chi: &DirichletCharacter) -> Result<ThetaValue> {
    dual_impl(inst, chi, false).map(|(v, _)| v)
}

/// Shared body of [`theta_dual`] and [`theta_zero_bound_check`]; with
/// `zero_only` only `n' = 0` is kept and diagnostics are gathered.
fn dual_impl(
    inst: &ThetaInstance,
    chi: &DirichletCharacter,
    zero_only: bool,
) -> Result<(ThetaValue, ZeroDiagnostics)> {
    let terms = inst.dual_terms();
    inst.check_budget(terms)?;
    let params = &inst.params;
    let ps = inst.ps();
    let n0 = params.n0();
    let batches = inst.batches()?;
    let alpha_inv: Vec<u64> = inst
        .alphas
        .iter()
        .map(|&a| inv_mod_i(a as i128, ps))
        .collect::<Result<_>>()?;

    // Frequencies up to 2 window in y, plus the J phases of both factors.
    let amp = 2.0 * (2.0 * n0 * params.n_scale).sqrt() / params.dual_modulus(1) as f64;
    let panels = (4.0 * inst.window + 2.0 * amp + 8.0).ceil() as usize;
    let fine_rule = CompositeRule::new(1.0, 2.0, panels, 16);
    let coarse_rule = CompositeRule::new(1.0, 2.0, panels, 10);
    let fine: Vec<YSamples> = batches
        .iter()
        .zip(&inst.ms)
        .map(|(b, ms)| sample(b, ms.len(), &fine_rule, n0))
        .collect();
    let coarse: Vec<YSamples> = batches
        .iter()
        .zip(&inst.ms)
        .map(|(b, ms)| sample(b, ms.len(), &coarse_rule, n0))
        .collect();
    let weights: Vec<Vec<Vec<Complex64>>> = inst
        .ms
        .iter()
        .map(|ms| ms.iter().map(|&m| inst.alpha_weights(chi, m)).collect())
        .collect();

    let mut jobs = Vec::new();
    for i1 in 0..inst.moduli.len() {
        for i2 in 0..inst.moduli.len() {
            for j1 in 0..inst.ms[i1].len() {
                jobs.push((i1, i2, j1));
            }
        }
    }
    let parts: Vec<Result<Partial>> = jobs
        .par_iter()
        .map(|&(i1, i2, j1)| {
            let q1 = inst.moduli[i1];
            let q2 = inst.moduli[i2];
            let qq = q1 * q2;
            let d = ps * qq;
            let nu = n0 / d as f64;
            let r_keep = inst.window * d as f64 / n0;
            let cq = chi.eval_complex(q1 as i128) * chi.eval_complex(q2 as i128).conj() * (qq as f64).powf(-1.5);
            let mut part = Partial::default();
            for j2 in 0..inst.ms[i2].len() {
                let m1 = inst.ms[i1][j1];
                let m2 = inst.ms[i2][j2];
                let class = pair_class(
                    inst,
                    (q1, q2),
                    (m1, m2),
                    (&weights[i1][j1], &weights[i2][j2]),
                    &alpha_inv,
                )?;
                if zero_only {
                    part.count_zero(&class, q1, q2, m1, m2);
                }
                let freqs: Vec<i64> = if zero_only {
                    if class.h_q == 0 { vec![0] } else { vec![] }
                } else {
                    class_range(class.h_q, qq, 2.0 * r_keep)
                };
                if freqs.is_empty() {
                    continue;
                }
                for (rule, samples, is_fine) in [(&fine_rule, &fine, true), (&coarse_rule, &coarse, false)] {
                    let f1 = &samples[i1].values[j1];
                    let f2 = &samples[i2].values[j2];
                    let g: Vec<Complex64> = rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .enumerate()
                        .map(|(j, (&y, &w))| f1[j] * f2[j].conj() * (w * bump(y)))
                        .collect();
                    let mut ph: Vec<Complex64> = rule.nodes.iter().map(|&y| e(-(freqs[0] as f64) * nu * y)).collect();
                    let step: Vec<Complex64> = rule.nodes.iter().map(|&y| e(-(qq as f64) * nu * y)).collect();
                    let mut abs_coef = 0.0;
                    for (idx, &np) in freqs.iter().enumerate() {
                        if idx > 0 {
                            for (p, s) in ph.iter_mut().zip(&step) {
                                *p *= s;
                            }
                        }
                        let b = class.by_residue[np.rem_euclid(ps as i64) as usize];
                        if b.norm() == 0.0 {
                            continue;
                        }
                        let frak1: Complex64 = g.iter().zip(&ph).map(|(a, b)| a * b).sum();
                        let c = cq * b * n0;
                        let v = c * frak1;
                        if is_fine {
                            abs_coef += c.norm();
                            if (np as f64).abs() <= r_keep {
                                part.inner.add(v);
                            } else {
                                part.tail.add(v);
                            }
                        } else if (np as f64).abs() <= r_keep {
                            part.inner_coarse.add(v);
                        }
                    }
                    if is_fine {
                        let e1 = &samples[i1].errors[j1];
                        let e2 = &samples[i2].errors[j2];
                        let prop: f64 = rule
                            .nodes
                            .iter()
                            .zip(&rule.weights)
                            .enumerate()
                            .map(|(j, (&y, &w))| w * bump(y) * (f1[j].norm() * e2[j] + e1[j] * f2[j].norm()))
                            .sum();
                        part.err += abs_coef * prop;
                    }
                }
            }
            Ok(part)
        })
        .collect();

    let mut inner = ComplexSum::new();
    let mut coarse_sum = ComplexSum::new();
    let mut tail = ComplexSum::new();
    let mut err = 0.0;
    let mut diag = ZeroDiagnostics::default();
    for p in parts {
        let p = p?;
        inner.merge(&p.inner);
        coarse_sum.merge(&p.inner_coarse);
        tail.merge(&p.tail);
        err += p.err;
        diag.merge(&p.zero);
    }
    let value = inner.value();
    let quad = (value - coarse_sum.value()).norm();
    Ok((
        ThetaValue {
            value: OscillatoryValue::new(value, err + quad + 1e-13 * value.norm()),
            tail: tail.value(),
            terms,
        },
        diag,
    ))
}

/// `n' = h mod q1 q2` with `|n'| <= limit`, increasing.
fn class_range(h: u64, modulus: u64, limit: f64) -> Vec<i64> {
    let lim = limit.floor() as i64;
    let md = modulus as i64;
    let start = -lim + (h as i64 + lim).rem_euclid(md);
    (0..).map(|i| start + i * md).take_while(|&n| n <= lim).collect()
}

#[derive(Debug, Default)]
struct Partial {
    inner: ComplexSum,
    inner_coarse: ComplexSum,
    tail: ComplexSum,
    err: f64,
    zero: ZeroDiagnostics,
}

impl Partial {
    fn count_zero(&mut self, class: &PairClass, q1: u64, q2: u64, m1: i64, m2: i64) {
        if class.h_q != 0 || class.by_residue[0].norm() == 0.0 {
            return;
        }
        if q1 != q2 {
            self.zero.offdiagonal_q += 1;
        }
        if q1 == q2 && m1 == m2 {
            self.zero.diagonal_classes += 1;
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct ZeroDiagnostics {
    offdiagonal_q: u64,
    diagonal_classes: u64,
}

impl ZeroDiagnostics {
    fn merge(&mut self, o: &ZeroDiagnostics) {
        self.offdiagonal_q += o.offdiagonal_q;
        self.diagonal_classes += o.diagonal_classes;
    }
}

/// The zero-frequency part of Theta against the size predicted for it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ThetaZeroReport {
    pub theta_zero_re: f64,
    pub theta_zero_im: f64,
    /// `p^(r + 5l/2 - 3 l1) / N^(3/2) (log N)^c_eps`.
    pub bound: f64,
    pub ratio: f64,
    pub ceiling: f64,
    pub ratio_ok: bool,
    /// `N >= p^(r - (l - l1))`; reported, not enforced.
    pub precondition_ok: bool,
    /// Zero-frequency classes with `q1 != q2` (none are possible).
    pub offdiagonal_q: u64,
    /// `(q, m, m)` classes with zero frequency, enumerated.
    pub diagonal_classes: u64,
    /// The same count predicted combinatorially.
    pub diagonal_expected: u64,
    /// Diagonal `(q, m, alpha, alpha)` tuples solving the congruence mod `p^s'`.
    pub diagonal_alpha_pairs: u64,
    pub diagonal_alpha_expected: u64,
    /// `max |sum*_alpha conj(chi)(m1 - alpha t) chi(m2 - alpha t)|` over
    /// `m1 != m2 mod p^s'`, relative to `p^s'`.
    pub offclass_alpha_max: f64,
}

/// Zero-frequency diagnostics and the ratio to the predicted bound.
pub fn theta_zero_bound_check(
    inst: &ThetaInstance,
    chi: &DirichletCharacter,
    ceiling: f64,
) -> Result<ThetaZeroReport> {
    let (v, diag) = dual_impl(inst, chi, true)?;
    let params = &inst.params;
    let (p, r, l, l1) = (params.p as f64, params.r as f64, params.ell as f64, params.ell1 as f64);
    let bound = p.powf(r + 2.5 * l - 3.0 * l1) / params.n_scale.powf(1.5) * params.log_factor();
    let ratio = v.value.abs() / bound;
    let s = params.ell - params.ell1;
    let precondition_ok = params.n_scale >= p.powi((params.r - s) as i32);

    let ps = inst.ps();
    let mut diag_pairs = 0u64;
    for (&q, ms) in inst.moduli.iter().zip(&inst.ms) {
        let qp = q % ps;
        let mut per_q = 0u64;
        for &a1 in &inst.alphas {
            for &a2 in &inst.alphas {
                let x = mul_mod(inv_mod_i(a1 as i128, ps)?, qp, ps);
                let y = mul_mod(inv_mod_i(a2 as i128, ps)?, qp, ps);
                if x == y {
                    per_q += 1;
                }
            }
        }
        diag_pairs += per_q * ms.len() as u64;
    }
    let diagonal_expected: u64 = inst.ms.iter().map(|m| m.len() as u64).sum();

    let mut offclass = 0.0f64;
    let ms_all: Vec<i64> = {
        let mut v: Vec<i64> = inst.ms.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let weights: Vec<Vec<Complex64>> = ms_all.iter().map(|&m| inst.alpha_weights(chi, m)).collect();
    for (i, &m1) in ms_all.iter().enumerate() {
        for (j, &m2) in ms_all.iter().enumerate() {
            if (m1 - m2).rem_euclid(ps as i64) == 0 {
                continue;
            }
            let s: Complex64 = weights[i].iter().zip(&weights[j]).map(|(a, b)| a * b.conj()).sum();
            offclass = offclass.max(s.norm());
        }
    }

    Ok(ThetaZeroReport {
        theta_zero_re: v.value.value.re,
        theta_zero_im: v.value.value.im,
        bound,
        ratio,
        ceiling,
        ratio_ok: ratio <= ceiling,
        precondition_ok,
        offdiagonal_q: diag.offdiagonal_q,
        diagonal_classes: diag.diagonal_classes,
        diagonal_expected,
        diagonal_alpha_pairs: diag_pairs,
        diagonal_alpha_expected: diagonal_expected * inst.alphas.len() as u64,
        offclass_alpha_max: offclass / ps as f64,
    })
}
