//! Primitive Dirichlet characters of prime-power conductor.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::modarith::{
    add_mod, discrete_log, gcd, inv_mod, mul_mod, padic_log, pow_mod_u64, primitive_root,
    sub_mod, PrimePower, Residue,
};
use crate::sum::csum;

/// Default ceiling on the number of entries in a memoized discrete-log table.
pub const DEFAULT_TABLE_LIMIT: u64 = 10_000_000;

/// Moduli up to this size also memoize complex character values.
const VALUE_CACHE_LIMIT: u64 = 1 << 21;

/// The root of unity `e(num/den)`, kept as a reduced fraction with `0 <= num < den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnityRoot {
    num: u64,
    den: u64,
}

impl UnityRoot {
    pub fn new(num: i128, den: u64) -> Self {
        assert!(den >= 1, "denominator must be positive");
        let n = num.rem_euclid(den as i128) as u64;
        let g = gcd(n, den);
        if n == 0 {
            return UnityRoot { num: 0, den: 1 };
        }
        UnityRoot {
            num: n / g,
            den: den / g,
        }
    }

    pub fn one() -> Self {
        UnityRoot { num: 0, den: 1 }
    }

    #[inline]
    pub fn num(&self) -> u64 {
        self.num
    }

    #[inline]
    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn mul(&self, other: UnityRoot) -> UnityRoot {
        let l = self.den / gcd(self.den, other.den) * other.den;
        let a = mul_mod(self.num, l / self.den, l);
        let b = mul_mod(other.num, l / other.den, l);
        UnityRoot::new(add_mod(a, b, l) as i128, l)
    }

    pub fn conj(&self) -> UnityRoot {
        UnityRoot::new(-(self.num as i128), self.den)
    }

    pub fn pow(&self, k: u64) -> UnityRoot {
        UnityRoot::new(mul_mod(self.num, k % self.den, self.den) as i128, self.den)
    }

    /// Numerator over an explicit denominator that is a multiple of `den`.
    pub fn numerator_over(&self, den: u64) -> Option<u64> {
        (den % self.den == 0).then(|| self.num * (den / self.den))
    }

    pub fn to_complex(&self) -> Complex64 {
        cis_fraction(self.num, self.den)
    }
}

/// `e(num/den)` evaluated with the argument reduced to `[-1/2, 1/2]` first.
#[inline]
pub fn cis_fraction(num: u64, den: u64) -> Complex64 {
    let num = num % den;
    let centered = if 2 * num as u128 > den as u128 {
        num as f64 - den as f64
    } else {
        num as f64
    };
    let (s, c) = (2.0 * PI * centered / den as f64).sin_cos();
    Complex64::new(c, s)
}

/// `e(x)` for a real phase `x`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * (x - x.round())).sin_cos();
    Complex64::new(c, s)
}

/// `e(num/den)` as a reduced root of unity.
pub fn additive_char(num: i128, den: u64) -> UnityRoot {
    UnityRoot::new(num, den)
}

/// A character mod `p^r` given by `chi(g^t) = e(index * t / phi(p^r))`.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    pp: PrimePower,
    g: u64,
    index: u64,
    phi: u64,
    log_table: Option<Arc<Vec<u32>>>,
    values: Option<Arc<Vec<Complex64>>>,
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.pp == other.pp && self.g == other.g && self.index == other.index
    }
}

/// Builds the character of the given index with the default table ceiling.
pub fn make_character(p: u64, r: u32, index: i64) -> Result<DirichletCharacter> {
    DirichletCharacter::with_table_limit(p, r, index, DEFAULT_TABLE_LIMIT)
}

impl DirichletCharacter {
    pub fn with_table_limit(p: u64, r: u32, index: i64, table_limit: u64) -> Result<Self> {
        let pp = PrimePower::new(p, r)?;
        let phi = pp.phi();
        let g = primitive_root(&pp);
        let index = (index as i128).rem_euclid(phi as i128) as u64;
        let m = pp.value();
        let log_table = (m <= table_limit && m <= u32::MAX as u64).then(|| {
            let mut table = vec![u32::MAX; m as usize];
            let mut x = 1u64;
            for t in 0..phi {
                table[x as usize] = t as u32;
                x = mul_mod(x, g, m);
            }
            Arc::new(table)
        });
        let mut chi = DirichletCharacter {
            pp,
            g,
            index,
            phi,
            log_table,
            values: None,
        };
        if !chi.is_primitive() {
            return Err(Error::NotPrimitive { index, modulus: m });
        }
        if m <= VALUE_CACHE_LIMIT {
            let values = (0..m).map(|n| chi.eval_complex_uncached(n)).collect();
            chi.values = Some(Arc::new(values));
        }
        Ok(chi)
    }

    fn is_primitive(&self) -> bool {
        let m = self.pp.value();
        if self.pp.e() == 1 {
            return self.index != 0;
        }
        // nontrivial on the kernel 1 + p^(r-1) Z of reduction to p^(r-1)
        let u = 1 + m / self.pp.p();
        !self.eval_unit_exponent(u).is_one()
    }

    #[inline]
    pub fn prime_power(&self) -> &PrimePower {
        &self.pp
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.pp.value()
    }

    #[inline]
    pub fn generator(&self) -> u64 {
        self.g
    }

    #[inline]
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn conj(&self) -> DirichletCharacter {
        let mut c = self.clone();
        c.index = (self.phi - self.index) % self.phi;
        c.values = self
            .values
            .as_ref()
            .map(|v| Arc::new(v.iter().map(|z| z.conj()).collect()));
        c
    }

    /// Discrete log of a unit `x` (reduced mod `p^r`).
    pub fn dlog(&self, x: u64) -> u64 {
        let m = self.pp.value();
        let x = x % m;
        match &self.log_table {
            Some(t) => t[x as usize] as u64,
            None => discrete_log(Residue::from_u64(x, m), self.g, &self.pp)
                .expect("argument must be a unit"),
        }
    }

    fn eval_unit_exponent(&self, x: u64) -> UnityRoot {
        let t = self.dlog(x);
        UnityRoot::new(mul_mod(self.index, t, self.phi) as i128, self.phi)
    }

    /// `chi(n)` as an exact root of unity, or `None` when `p | n`.
    pub fn eval(&self, n: i128) -> Option<UnityRoot> {
        let m = self.pp.value();
        let x = n.rem_euclid(m as i128) as u64;
        if x % self.pp.p() == 0 {
            return None;
        }
        Some(self.eval_unit_exponent(x))
    }

    fn eval_complex_uncached(&self, x: u64) -> Complex64 {
        if x % self.pp.p() == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let t = self.dlog(x);
        cis_fraction(mul_mod(self.index, t, self.phi), self.phi)
    }

    /// `chi(n)` as a complex number (zero off the units).
    #[inline]
    pub fn eval_complex(&self, n: i128) -> Complex64 {
        let m = self.pp.value();
        let x = n.rem_euclid(m as i128) as u64;
        match &self.values {
            Some(v) => v[x as usize],
            None => self.eval_complex_uncached(x),
        }
    }

    #[inline]
    pub fn eval_complex_u64(&self, n: u64) -> Complex64 {
        let x = n % self.pp.value();
        match &self.values {
            Some(v) => v[x as usize],
            None => self.eval_complex_uncached(x),
        }
    }
}

/// `tau_chi = sum_{beta mod p^r} chi(beta) e(beta / p^r)` by direct summation.
pub fn gauss_sum(chi: &DirichletCharacter) -> Complex64 {
    let m = chi.modulus();
    csum((1..m).map(|b| chi.eval_complex_u64(b) * cis_fraction(b, m)))
}

/// Quadratic phase data describing `chi` on `1 + p^(r-s) Z`.
///
/// `chi(1 + z p^(r-s)) = e((-b1 z^2 - a2 z) / p^s)` for every `z mod p^s`, and
/// `chi(u) = e(a0 log_p(u) / p^r)` for every `u = 1 mod p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharacterExpansion {
    pub s: u32,
    pub a2: Residue,
    pub b1: Residue,
    pub a0: Residue,
}

impl CharacterExpansion {
    /// Exponent of `chi(1 + z p^(r-s))` over `p^s`, from the quadratic data.
    pub fn phase(&self, z: i128) -> UnityRoot {
        let ps = self.a2.modulus();
        let z = Residue::new(z, ps);
        let quad = self.b1.mul(z).mul(z);
        let lin = self.a2.mul(z);
        UnityRoot::new(-(quad.value() as i128) - lin.value() as i128, ps)
    }

    /// Whether `b1` vanishes, which happens whenever `2s <= r`.
    pub fn quadratic_vanishes(&self) -> bool {
        self.b1.value() == 0
    }
}

/// Solves for the quadratic expansion of `chi` at depth `s` and verifies it on
/// every `z mod p^s`.
pub fn postnikov_coeffs(chi: &DirichletCharacter, s: u32) -> Result<CharacterExpansion> {
    let pp = *chi.prime_power();
    let (p, r) = (pp.p(), pp.e());
    if s == 0 || s > r {
        return Err(Error::Domain(format!("depth {s} outside 1..={r}")));
    }
    let ps = pp.pow(s);
    let step = pp.pow(r - s);
    let m = pp.value();
    let theta = |z: u64| -> Result<u64> {
        let u = add_mod(1, mul_mod(z, step, m), m);
        let v = chi.eval(u as i128).expect("1 + p z is a unit");
        v.numerator_over(ps).ok_or_else(|| Error::ExpansionInvalid {
            depth: s,
            reason: format!("chi({u}) has order {} not dividing {ps}", v.den()),
        })
    };
    let t1 = theta(1)?;
    let t2 = theta(2)?;
    let inv2 = inv_mod(Residue::from_u64(2, ps))?;
    // t2 - 2 t1 = -2 b1, t1 = -b1 - a2
    let b1 = Residue::from_u64(sub_mod(mul_mod(2, t1, ps), t2, ps), ps).mul(inv2);
    let a2 = Residue::from_u64(t1, ps).add(b1).neg();

    let a0 = principal_unit_coefficient(chi)?;
    let exp = CharacterExpansion { s, a2, b1, a0 };
    for z in 0..ps {
        let lhs = chi.eval((1 + z as u128 * step as u128) as i128).expect("unit");
        if lhs != exp.phase(z as i128) {
            return Err(Error::ExpansionInvalid {
                depth: s,
                reason: format!("identity fails at z = {z}"),
            });
        }
    }
    if a2.value() % p == 0 {
        return Err(Error::ExpansionInvalid {
            depth: s,
            reason: "linear coefficient is not a unit".into(),
        });
    }
    Ok(exp)
}

/// The unit `a0` with `chi(u) = e(a0 log_p(u) / p^r)` on `u = 1 mod p`,
/// checked on ten pseudo-random principal units.
pub fn principal_unit_coefficient(chi: &DirichletCharacter) -> Result<Residue> {
    let pp = *chi.prime_power();
    let (p, r, m) = (pp.p(), pp.e(), pp.value());
    if r == 1 {
        return Ok(Residue::from_u64(0, m));
    }
    // gamma = g^(p-1) generates 1 + pZ; log(gamma) = p w with w a unit
    let gamma = pow_mod_u64(chi.generator(), p - 1, m);
    let log_gamma = padic_log(Residue::from_u64(gamma, m), &pp)?;
    let pr1 = m / p;
    let w = Residue::from_u64(log_gamma.value() / p, pr1);
    let w_inv = inv_mod(w)?;
    // chi(gamma^k) = e(index (p-1) k / phi) = e(index k / p^(r-1))
    let a0 = Residue::from_u64(chi.index() % pr1, pr1).mul(w_inv);
    let a0 = Residue::from_u64(a0.value(), m);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a0);
    for _ in 0..10 {
        let u = 1 + p * rng.gen_range(0..pr1);
        let lam = padic_log(Residue::from_u64(u, m), &pp)?;
        let expected = UnityRoot::new(mul_mod(a0.value(), lam.value(), m) as i128, m);
        if chi.eval(u as i128) != Some(expected) {
            return Err(Error::ExpansionInvalid {
                depth: r,
                reason: format!("logarithmic parametrization fails at u = {u}"),
            });
        }
    }
    Ok(a0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unity_root_basics() {
        assert!(additive_char(0, 9).is_one());
        let half = additive_char(1, 2);
        assert!((half.to_complex() - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        for a in -20..20 {
            assert!(additive_char(a, 12).pow(12).is_one());
        }
        assert_eq!(additive_char(3, 12), additive_char(1, 4));
        assert_eq!(additive_char(1, 4).mul(additive_char(1, 6)), additive_char(5, 12));
    }

    #[test]
    fn principal_and_imprimitive_rejected() {
        assert!(matches!(make_character(7, 1, 0), Err(Error::NotPrimitive { .. })));
        assert!(matches!(make_character(7, 2, 7), Err(Error::NotPrimitive { .. })));
        let chi = make_character(7, 2, 1).unwrap();
        assert!((0..7).any(|t| !chi.eval(1 + 7 * t).unwrap().is_one()));
        // index 7: trivial on 1 + 7Z by evaluation
        let pp = PrimePower::new(7, 2).unwrap();
        let g = primitive_root(&pp);
        for t in 0..7u64 {
            let x = 1 + 7 * t;
            let d = discrete_log(Residue::from_u64(x, 49), g, &pp).unwrap();
            assert_eq!(7 * d % 42, 0);
        }
    }

    #[test]
    fn eval_zero_off_units() {
        let chi = make_character(7, 2, 5).unwrap();
        assert!(chi.eval(1).unwrap().is_one());
        assert_eq!(chi.eval(14), None);
        assert_eq!(chi.eval_complex(-21), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn multiplicative_exhaustive() {
        for r in 1..=3 {
            let chi = make_character(7, r, 1).unwrap();
            let m = chi.modulus() as i128;
            for a in 1..m {
                for b in 1..m {
                    match (chi.eval(a), chi.eval(b)) {
                        (Some(x), Some(y)) => assert_eq!(chi.eval(a * b), Some(x.mul(y))),
                        _ => assert_eq!(chi.eval(a * b), None),
                    }
                }
            }
        }
    }

    #[test]
    fn gauss_sum_modulus() {
        for p in [5u64, 7] {
            for r in 1..=4 {
                let phi = (p - 1) * p.pow(r - 1);
                for index in [1i64, 2, (phi - 1) as i64] {
                    let Ok(chi) = make_character(p, r, index) else { continue };
                    let pr = chi.modulus() as f64;
                    let tau = gauss_sum(&chi);
                    assert!((tau.norm_sqr() - pr).abs() < 1e-9 * pr, "p={p} r={r}");
                }
            }
        }
    }

    #[test]
    fn gauss_sum_of_conjugate() {
        let chi = make_character(7, 3, 4).unwrap();
        let tau = gauss_sum(&chi);
        let tau_bar = gauss_sum(&chi.conj());
        let sign = chi.eval_complex(-1);
        assert!((tau_bar - sign * tau.conj()).norm() < 1e-9);
    }

    #[test]
    fn uncached_evaluation_agrees() {
        let chi = make_character(7, 3, 10).unwrap();
        let slow = DirichletCharacter::with_table_limit(7, 3, 10, 0).unwrap();
        for n in 0..343 {
            assert_eq!(chi.eval(n), slow.eval(n));
        }
    }

    /// Independent oracle: log_p(1 + x) = x - x^2/2 for `3 v(x) >= r`.
    fn expansion_from_a0(a0: u64, p: u64, r: u32, s: u32, z: u64) -> UnityRoot {
        let m = p.pow(r);
        let x = z * p.pow(r - s) % m;
        let inv2 = (m + 1) / 2;
        let log = (x + m - x * x % m * inv2 % m) % m;
        UnityRoot::new((a0 as u128 * log as u128 % m as u128) as i128, m)
    }

    #[test]
    fn postnikov_exhaustive_valid_depths() {
        for index in [1i64, 5, 100] {
            let chi = make_character(7, 6, index).unwrap();
            for s in 1..=4 {
                let exp = postnikov_coeffs(&chi, s).unwrap();
                assert!(exp.phase(0).is_one());
                let ps = 7u64.pow(s);
                for z in 0..ps {
                    let direct = chi.eval(1 + (z * 7u64.pow(6 - s)) as i128).unwrap();
                    assert_eq!(exp.phase(z as i128), direct);
                    assert_eq!(expansion_from_a0(exp.a0.value(), 7, 6, s, z), direct);
                }
                assert_eq!(exp.quadratic_vanishes(), 2 * s <= 6);
            }
        }
    }

    #[test]
    fn postnikov_fails_beyond_range() {
        let chi = make_character(7, 6, 1).unwrap();
        assert!(matches!(
            postnikov_coeffs(&chi, 5),
            Err(Error::ExpansionInvalid { depth: 5, .. })
        ));
    }

    proptest! {
        #[test]
        fn a0_parametrizes_principal_units(k in 0u64..16807, index in 1i64..1000) {
            prop_assume!(index % 7 != 0);
            let chi = make_character(7, 5, index).unwrap();
            let pp = *chi.prime_power();
            let a0 = principal_unit_coefficient(&chi).unwrap();
            let u = 1 + 7 * (k % 2401);
            let lam = padic_log(Residue::from_u64(u, 16807), &pp).unwrap();
            let expected = UnityRoot::new((a0.value() * lam.value() % 16807) as i128, 16807);
            prop_assert_eq!(chi.eval(u as i128), Some(expected));
        }
    }
}
