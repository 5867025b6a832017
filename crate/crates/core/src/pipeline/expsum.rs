//! The exponential sums `T(R)` over `r2 in [R, 2R]` with `r2 / r1` a square
//! mod `p`, their re-summation over square classes, and log-log fits.

use num_complex::Complex64;

use crate::characters::{postnikov_coeffs, DirichletCharacter, UnityRoot};
use crate::error::{Error, Result};
use crate::modarith::{gcd, hensel_sqrt, inv_mod, is_square_mod_p, padic_log, Residue};
use crate::sum::ComplexSum;

/// Data fixing the phase `g(r2)` modulo `p^s`, where `s = l - l1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ExponentSumSpec {
    pub p: u64,
    pub r: u32,
    pub s: u32,
    pub r1: i64,
    pub q1: u64,
    pub q2: u64,
    pub n: i64,
    /// Modulus exponent of the square classes `r2 = r1 m^2 mod p^kappa`.
    pub kappa: u32,
}

impl ExponentSumSpec {
    pub fn new(p: u64, r: u32, s: u32, r1: i64, q1: u64, q2: u64, n: i64, kappa: u32) -> Result<Self> {
        if s == 0 || s > r || kappa == 0 || kappa > r {
            return Err(Error::Domain(format!("need 1 <= s, kappa <= r, got s={s}, kappa={kappa}, r={r}")));
        }
        for (name, v) in [("r1", r1.unsigned_abs()), ("q1", q1), ("q2", q2), ("n", n.unsigned_abs())] {
            if gcd(v, p) != 1 {
                return Err(Error::NotCoprime(format!("{name}={v} must be prime to p={p}")));
            }
        }
        Ok(ExponentSumSpec { p, r, s, r1, q1, q2, n, kappa })
    }

    fn ps(&self) -> u64 {
        self.p.pow(self.s)
    }

    fn in_class(&self, r2: u64) -> bool {
        if r2 % self.p == 0 {
            return false;
        }
        let p = self.p as i128;
        let x = (r2 as i128 * self.r1.rem_euclid(self.p as i64) as i128).rem_euclid(p) as u64;
        is_square_mod_p(x, self.p)
    }
}

/// The coefficients entering `g`: `A1` (linear) and `B = A2 p^(r - s)`
/// (quadratic) from the expansion of `chi` on `1 + p^(r-s) Z`, and the
/// logarithmic coefficient `a0`.
#[derive(Debug, Clone, Copy)]
struct Phase {
    lin: Residue,
    quad: Residue,
    a0: Residue,
}

fn phase_data(spec: &ExponentSumSpec, chi: &DirichletCharacter) -> Result<Phase> {
    if chi.prime_power().p() != spec.p || chi.prime_power().e() != spec.r {
        return Err(Error::Domain("character modulus does not match p^r".into()));
    }
    let exp = postnikov_coeffs(chi, spec.s)?;
    Ok(Phase {
        lin: exp.a2,
        quad: exp.b1,
        a0: exp.a0,
    })
}

/// `g(r2) mod p^s` with the square root `sigma` of `r2 / r1` supplied.
fn g_value(spec: &ExponentSumSpec, ph: &Phase, r2: u64, sigma: Residue) -> Result<Residue> {
    let ps = spec.ps();
    let res = |x: i128| Residue::new(x, ps);
    let inv = |x: Residue| inv_mod(x);
    let (l, b) = (ph.lin.reduce(ps), ph.quad.reduce(ps));
    let nb = inv(res(spec.n as i128))?;
    let nb2 = nb.mul(nb);
    let q1 = res(spec.q1 as i128);
    let q2 = res(spec.q2 as i128);
    let r1 = res(spec.r1 as i128);
    let r2 = res(r2 as i128);
    let (q1b, q2b, r1b, r2b) = (inv(q1)?, inv(q2)?, inv(r1)?, inv(r2)?);
    let sigb = inv(sigma)?;
    let two = res(2);
    let one = res(1);

    let t1 = l.mul(nb).mul(q2b).mul(q1).mul(r2b);
    let t2 = b.mul(nb2).mul(q2b).mul(q2b).mul(q1).mul(q1).mul(r2b).mul(r2b);
    let c3 = l
        .mul(nb)
        .mul(r1b)
        .mul(q1b)
        .sub(two.mul(b).mul(nb2).mul(r1b).mul(r1b).mul(q1b).mul(q1b).mul(q2));
    let t3 = c3.mul(sigma);
    let c4 = l
        .mul(nb)
        .mul(r2b)
        .mul(q2b)
        .mul(q1)
        .add(two.mul(b).mul(nb2).mul(r2b).mul(r2b).mul(q2b).mul(q2b).mul(q1).mul(q1));
    let t4 = c4.mul(one.sub(sigb));
    let c5 = b.mul(r1b).mul(r1b).mul(q1b).mul(q1b);
    let t5 = c5.mul(r2.mul(r1b).sub(two.mul(sigma)));
    let t6 = c5.mul(r1.mul(r2b).sub(two.mul(sigma)));
    Ok(t1.add(t2).add(t3).sub(t4).sub(t5).sub(t6))
}

/// The canonical square root of `r2 / r1 mod p^s`.
fn canonical_root(spec: &ExponentSumSpec, r2: u64) -> Result<Residue> {
    let ps = spec.ps();
    let x = Residue::new(r2 as i128, ps).mul(inv_mod(Residue::new(spec.r1 as i128, ps))?);
    hensel_sqrt(x, spec.p)
}

/// A value of `T(R)` with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrValue {
    pub big_r: u64,
    pub value: Complex64,
    /// The same sum with every square root replaced by its negative.
    pub conjugate_root: Complex64,
    /// Number of summed `r2`.
    pub terms: u64,
    /// `r2` in range but divisible by `p`, hence excluded.
    pub skipped: u64,
}

impl TrValue {
    /// Whether the root choice moves `|T(R)|` by more than 10%.
    pub fn root_sensitive(&self) -> bool {
        let a = self.value.norm();
        let b = self.conjugate_root.norm();
        (a - b).abs() > 0.1 * a.max(b).max(1.0)
    }
}

/// `T(R) = sum_{R <= r2 <= 2R, r2/r1 square mod p} chi(r2) e(g(r2) / p^s)`.
pub fn tr_sum(spec: &ExponentSumSpec, chi: &DirichletCharacter, big_r: u64) -> Result<TrValue> {
    let ph = phase_data(spec, chi)?;
    let ps = spec.ps();
    let mut s = ComplexSum::new();
    let mut sc = ComplexSum::new();
    let mut terms = 0;
    let mut skipped = 0;
    for r2 in big_r..=2 * big_r {
        if r2 % spec.p == 0 {
            skipped += 1;
            continue;
        }
        if !spec.in_class(r2) {
            continue;
        }
        let sigma = canonical_root(spec, r2)?;
        let c = chi.eval_complex(r2 as i128);
        let g = g_value(spec, &ph, r2, sigma)?;
        let gc = g_value(spec, &ph, r2, sigma.neg())?;
        s.add(c * UnityRoot::new(g.value() as i128, ps).to_complex());
        sc.add(c * UnityRoot::new(gc.value() as i128, ps).to_complex());
        terms += 1;
    }
    Ok(TrValue {
        big_r,
        value: s.value(),
        conjugate_root: sc.value(),
        terms,
        skipped,
    })
}

/// `T(R)` re-summed over square classes:
/// `1/2 sum_{m unit mod p^kappa} chi(r1 m^2) sum_t e(f(t) / p^r)` with
/// `r2 = r1 m^2 + t p^kappa` and
/// `f(t) = a0 log_p(1 + conj(r1 m^2) p^kappa t) + p^(r-s) g(r2)`.
///
/// The character on `1 + p^kappa Z` enters only through `a0` and the p-adic
/// logarithm.
pub fn tr_sum_by_classes(spec: &ExponentSumSpec, chi: &DirichletCharacter, big_r: u64) -> Result<Complex64> {
    let ph = phase_data(spec, chi)?;
    let pp = *chi.prime_power();
    let pr = pp.value();
    let pk = spec.p.pow(spec.kappa) as i128;
    let lift = spec.p.pow(spec.r - spec.s);
    let (lo, hi) = (big_r as i128, 2 * big_r as i128);
    let mut total = ComplexSum::new();
    for m in 1..=pk {
        if m % spec.p as i128 == 0 {
            continue;
        }
        let base = spec.r1 as i128 * m * m;
        let base_inv = inv_mod(Residue::new(base, pr))?;
        let head = chi.eval_complex(base);
        let t_lo = (lo - base).div_euclid(pk) + i128::from((lo - base).rem_euclid(pk) != 0);
        let t_hi = (hi - base).div_euclid(pk);
        let mut inner = ComplexSum::new();
        for t in t_lo..=t_hi {
            let r2 = base + t * pk;
            let u = Residue::new(1, pr).add(base_inv.mul(Residue::new(t * pk, pr)));
            let log = padic_log(u, &pp)?;
            let sigma = canonical_root(spec, r2 as u64)?;
            let g = g_value(spec, &ph, r2 as u64, sigma)?;
            let f = ph.a0.mul(log).add(Residue::new(g.value() as i128 * lift as i128, pr));
            inner.add(UnityRoot::new(f.value() as i128, pr).to_complex());
        }
        total.add(head * inner.value());
    }
    Ok(total.value() * 0.5)
}

/// One row of a dyadic scan.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrRow {
    pub big_r: u64,
    pub abs_t: f64,
    pub abs_t_conjugate: f64,
    pub terms: u64,
    pub skipped: u64,
    pub root_sensitive: bool,
    /// `p^(r/30) R^(1/5)`.
    pub predicted: f64,
}

/// `|T(R)|` for `R = 2^j`, `j` in `js`.
pub fn tr_scan(spec: &ExponentSumSpec, chi: &DirichletCharacter, js: std::ops::RangeInclusive<u32>) -> Result<Vec<TrRow>> {
    js.map(|j| {
        let v = tr_sum(spec, chi, 1u64 << j)?;
        Ok(TrRow {
            big_r: v.big_r,
            abs_t: v.value.norm(),
            abs_t_conjugate: v.conjugate_root.norm(),
            terms: v.terms,
            skipped: v.skipped,
            root_sensitive: v.root_sensitive(),
            predicted: (spec.p as f64).powf(spec.r as f64 / 30.0) * (v.big_r as f64).powf(0.2),
        })
    })
    .collect()
}

/// Least-squares line through `(log R, log |T|)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// `slope - 1/5`, the exponent displayed with the pair `(1/30, 13/15)`.
    pub gap_fifth: f64,
    /// `slope - 5/6`, the exponent `13/15 - 1/30` the same pair yields.
    pub gap_pair_1_30: f64,
    /// `slope - 4/5`, from the pair `(1/15, 13/15)`.
    pub gap_pair_1_15: f64,
    /// `slope - 1`.
    pub gap_trivial: f64,
}

pub fn exponent_fit(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 4 {
        return Err(Error::DegenerateFit(format!("{} samples, need at least 4", samples.len())));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 4.0 {
        return Err(Error::DegenerateFit("samples span fewer than two dyads".into()));
    }
    if samples.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::DegenerateFit("a sample has zero magnitude".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.0.ln(), s.1.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(ExponentFit {
        slope,
        intercept: my - slope * mx,
        gap_fifth: slope - 0.2,
        gap_pair_1_30: slope - 5.0 / 6.0,
        gap_pair_1_15: slope - 0.8,
        gap_trivial: slope - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::make_character;

    fn spec() -> ExponentSumSpec {
        ExponentSumSpec::new(7, 6, 4, 3, 2, 5, 1, 2).unwrap()
    }

    #[test]
    fn triangle_inequality_and_counts() {
        let chi = make_character(7, 6, 1).unwrap();
        let v = tr_sum(&spec(), &chi, 200).unwrap();
        assert!(v.value.norm() <= v.terms as f64 + 1e-9);
        assert_eq!(v.skipped, (200..=400).filter(|r| r % 7 == 0).count() as u64);
        // roughly half of the units are in the class
        let units = 201 - v.skipped as i64;
        assert!((2 * v.terms as i64 - units).abs() <= 20);
    }

    #[test]
    fn class_decomposition_reproduces_the_sum() {
        let chi = make_character(7, 6, 3).unwrap();
        for big_r in [64u64, 300, 1024] {
            let direct = tr_sum(&spec(), &chi, big_r).unwrap().value;
            let classes = tr_sum_by_classes(&spec(), &chi, big_r).unwrap();
            assert!((direct - classes).norm() < 1e-10 * direct.norm().max(1.0), "R={big_r}");
        }
    }

    #[test]
    fn fit_on_exact_power_laws() {
        let flat: Vec<(f64, f64)> = (6..=12).map(|j| (2f64.powi(j), 3.0)).collect();
        assert!(exponent_fit(&flat).unwrap().slope.abs() < 1e-12);
        let lin: Vec<(f64, f64)> = (6..=12).map(|j| (2f64.powi(j), 2f64.powi(j))).collect();
        let f = exponent_fit(&lin).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && f.gap_trivial.abs() < 1e-12);
        assert!(exponent_fit(&lin[..3]).is_err());
        let narrow = [(8.0, 1.0), (9.0, 2.0), (10.0, 3.0), (11.0, 4.0)];
        assert!(exponent_fit(&narrow).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ExponentSumSpec::new(7, 6, 4, 7, 2, 5, 1, 2).is_err());
        assert!(ExponentSumSpec::new(7, 6, 7, 3, 2, 5, 1, 2).is_err());
    }
}
