//! Modular and p-adic arithmetic on machine words.
//!
//! Residues live in `u64` with `u128` intermediate products, which covers every
//! modulus below 2^63. Moduli that would not fit are rejected with
//! [`Error::Overflow`] at construction time rather than silently wrapping.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Largest modulus accepted by [`Residue`] and [`PrimePower`].
pub const MAX_MODULUS: u64 = 1 << 63;

/// A residue class `value mod modulus` with `0 <= value < modulus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Residue {
    value: u64,
    modulus: u64,
}

impl Residue {
    /// Reduces an arbitrary signed integer into `[0, modulus)`.
    pub fn new(value: i128, modulus: u64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        let m = modulus as i128;
        Residue {
            value: value.rem_euclid(m) as u64,
            modulus,
        }
    }

    pub fn from_u64(value: u64, modulus: u64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        Residue {
            value: value % modulus,
            modulus,
        }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn add(&self, other: Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue::from_u64(add_mod(self.value, other.value, self.modulus), self.modulus)
    }

    pub fn sub(&self, other: Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue::from_u64(sub_mod(self.value, other.value, self.modulus), self.modulus)
    }

    pub fn mul(&self, other: Residue) -> Residue {
        debug_assert_eq!(self.modulus, other.modulus);
        Residue {
            value: mul_mod(self.value, other.value, self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn neg(&self) -> Residue {
        Residue::from_u64(sub_mod(0, self.value, self.modulus), self.modulus)
    }

    /// Reduces to a divisor of the current modulus.
    pub fn reduce(&self, modulus: u64) -> Residue {
        debug_assert_eq!(self.modulus % modulus, 0);
        Residue::from_u64(self.value, modulus)
    }
}

impl std::fmt::Display for Residue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

/// An odd prime power `p^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimePower {
    p: u64,
    e: u32,
    value: u64,
}

impl PrimePower {
    pub fn new(p: u64, e: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not an odd prime")));
        }
        if e == 0 {
            return Err(Error::Domain("prime power exponent must be positive".into()));
        }
        let value = checked_pow(p, e)
            .filter(|&v| v < MAX_MODULUS)
            .ok_or_else(|| Error::Overflow(format!("{p}^{e} exceeds 2^63")))?;
        Ok(PrimePower { p, e, value })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn e(&self) -> u32 {
        self.e
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Order of the unit group, `(p - 1) p^(e-1)`.
    pub fn phi(&self) -> u64 {
        (self.p - 1) * (self.value / self.p)
    }

    /// `p^k` for `k <= e`.
    pub fn pow(&self, k: u32) -> u64 {
        assert!(k <= self.e);
        self.p.pow(k)
    }
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    let (a, b) = (a % m, b % m);
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Square-and-multiply exponentiation on raw words.
pub fn pow_mod_u64(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

pub fn pow_mod(base: Residue, exp: u64) -> Residue {
    Residue::from_u64(pow_mod_u64(base.value, exp, base.modulus), base.modulus)
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `x` modulo `m` on raw signed input.
pub fn inv_mod_i(x: i128, m: u64) -> Result<u64> {
    inv_mod(Residue::new(x, m)).map(|r| r.value)
}

pub fn inv_mod(x: Residue) -> Result<Residue> {
    let m = x.modulus as i128;
    if m == 1 {
        return Ok(Residue::from_u64(0, 1));
    }
    let (mut old_r, mut r) = (x.value as i128, m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible {
            value: x.value,
            modulus: x.modulus,
        });
    }
    Ok(Residue::new(old_s, x.modulus))
}

pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorisation by trial division, as `(prime, exponent)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            let mut k = 0;
            while n % d == 0 {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Multiplicative order of a unit `x` modulo `m`, given `group_order` divisible by it.
pub fn multiplicative_order(x: u64, m: u64, group_order: u64) -> u64 {
    let mut order = group_order;
    for (q, _) in factorize(group_order) {
        while order % q == 0 && pow_mod_u64(x, order / q, m) == 1 {
            order /= q;
        }
    }
    order
}

/// Least generator of the unit group modulo `p^e`.
pub fn primitive_root(pp: &PrimePower) -> u64 {
    let p = pp.p;
    let factors = factorize(p - 1);
    let p2 = p * p;
    (2..p)
        .find(|&g| {
            let root_mod_p = factors
                .iter()
                .all(|&(q, _)| pow_mod_u64(g, (p - 1) / q, p) != 1);
            // a root mod p lifts to all p^e unless g^(p-1) == 1 mod p^2
            root_mod_p && (pp.e == 1 || pow_mod_u64(g, p - 1, p2) != 1)
        })
        .expect("odd primes have primitive roots")
}

/// Discrete logarithm base `g` in `(Z/p^e)^*`, by Pohlig-Hellman over the
/// prime-power factors of `(p-1) p^(e-1)` with baby-step giant-step digits.
pub fn discrete_log(x: Residue, g: u64, pp: &PrimePower) -> Result<u64> {
    let m = pp.value;
    if x.modulus != m {
        return Err(Error::Domain(format!(
            "residue modulus {} does not match {}",
            x.modulus, m
        )));
    }
    if x.value % pp.p == 0 {
        return Err(Error::NotInvertible {
            value: x.value,
            modulus: m,
        });
    }
    let n = pp.phi();
    let mut factors = factorize(pp.p - 1);
    if pp.e > 1 {
        factors.push((pp.p, pp.e - 1));
    }
    let mut residues = Vec::with_capacity(factors.len());
    for &(q, k) in &factors {
        let qk = q.pow(k);
        let cofactor = n / qk;
        let h = pow_mod_u64(g, cofactor, m);
        let y = pow_mod_u64(x.value, cofactor, m);
        let gamma = pow_mod_u64(h, qk / q, m);
        let h_inv = inv_mod(Residue::from_u64(h, m))?.value;
        let mut acc = 0u64;
        let mut q_pow = 1u64;
        for i in 0..k {
            let shifted = mul_mod(y, pow_mod_u64(h_inv, acc, m), m);
            let d = pow_mod_u64(shifted, qk / (q_pow * q), m);
            let digit = bsgs(gamma, d, q, m).ok_or_else(|| {
                Error::Domain(format!("{} is not a power of {g} mod {m}", x.value))
            })?;
            acc += digit * q_pow;
            if i + 1 < k {
                q_pow *= q;
            }
        }
        residues.push((acc, qk));
    }
    Ok(crt_combine(&residues))
}

fn bsgs(base: u64, target: u64, order: u64, m: u64) -> Option<u64> {
    if order <= 64 {
        let mut cur = 1u64;
        for t in 0..order {
            if cur == target {
                return Some(t);
            }
            cur = mul_mod(cur, base, m);
        }
        return None;
    }
    let step = (order as f64).sqrt().ceil() as u64;
    let mut table = HashMap::with_capacity(step as usize);
    let mut cur = 1u64;
    for j in 0..step {
        table.entry(cur).or_insert(j);
        cur = mul_mod(cur, base, m);
    }
    let giant = inv_mod(Residue::from_u64(pow_mod_u64(base, step, m), m)).ok()?.value;
    let mut gamma = target;
    for i in 0..step {
        if let Some(&j) = table.get(&gamma) {
            return Some((i * step + j) % order);
        }
        gamma = mul_mod(gamma, giant, m);
    }
    None
}

/// Chinese remaindering of `(residue, modulus)` pairs with pairwise coprime moduli.
pub fn crt_combine(parts: &[(u64, u64)]) -> u64 {
    let mut value = 0u64;
    let mut modulus = 1u64;
    for &(r, m) in parts {
        let inv = inv_mod(Residue::from_u64(modulus % m, m))
            .expect("moduli must be coprime")
            .value;
        let delta = sub_mod(r, value % m, m);
        let t = mul_mod(delta, inv, m);
        value += modulus * t;
        modulus *= m;
        value %= modulus;
    }
    value
}

/// p-adic valuation of a nonzero integer.
pub fn v_p(n: i128, p: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::Domain("valuation of zero".into()));
    }
    let p = p as i128;
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    Ok(v)
}

/// The p-adic logarithm `sum_{m>=1} (-1)^(m+1) (u-1)^m / m` reduced mod `p^r`.
///
/// Terms with `p | m` are handled by cancelling powers of `p` out of the
/// numerator before inverting the unit part of `m`. The sum stops at the first
/// `m` with `a m - log_p(m) >= r` (`a = v_p(u - 1)`): that quantity is
/// increasing in `m` for odd `p`, so every later term vanishes mod `p^r` too.
pub fn padic_log(u: Residue, pp: &PrimePower) -> Result<Residue> {
    let modulus = pp.value;
    if u.modulus != modulus {
        return Err(Error::Domain("padic_log: modulus mismatch".into()));
    }
    let p = pp.p;
    let x = sub_mod(u.value, 1, modulus);
    if x % p != 0 {
        return Err(Error::Domain(format!(
            "padic_log needs u = 1 mod {p}, got {}",
            u.value
        )));
    }
    if x == 0 {
        return Ok(Residue::from_u64(0, modulus));
    }
    let r = pp.e as i64;
    let a = v_p(x as i128, p)? as i64;
    let unit = x / p.pow(a as u32);
    let ln_p = (p as f64).ln();
    let mut acc = 0u64;
    let mut m: u64 = 1;
    loop {
        if (a * m as i64) as f64 - (m as f64).ln() / ln_p >= r as f64 + 1e-9 {
            break;
        }
        let vm = v_p(m as i128, p)? as i64;
        let shift = a * m as i64 - vm;
        if shift < r {
            let m_unit = m / p.pow(vm as u32);
            let mut term = mul_mod(
                pow_mod_u64(unit, m, modulus),
                p.pow(shift as u32) % modulus,
                modulus,
            );
            term = mul_mod(term, inv_mod(Residue::from_u64(m_unit, modulus))?.value, modulus);
            acc = if m % 2 == 1 {
                add_mod(acc, term, modulus)
            } else {
                sub_mod(acc, term, modulus)
            };
        }
        m += 1;
    }
    Ok(Residue::from_u64(acc, modulus))
}

/// Legendre symbol test: is the unit `a` a square modulo the odd prime `p`?
pub fn is_square_mod_p(a: u64, p: u64) -> bool {
    let a = a % p;
    a != 0 && pow_mod_u64(a, (p - 1) / 2, p) == 1
}

fn sqrt_mod_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if !is_square_mod_p(a, p) {
        return None;
    }
    // Tonelli-Shanks
    let (mut q, mut s) = (p - 1, 0u32);
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| !is_square_mod_p(z, p))?;
    let mut m = s;
    let mut c = pow_mod_u64(z, q, p);
    let mut t = pow_mod_u64(a, q, p);
    let mut r = pow_mod_u64(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod_u64(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// Square root of a unit modulo `p^s` by Hensel lifting.
///
/// Of the two roots, returns the one whose reduction mod `p` lies in
/// `[1, (p-1)/2]`.
pub fn hensel_sqrt(a: Residue, p: u64) -> Result<Residue> {
    let modulus = a.modulus;
    if a.value % p == 0 {
        return Err(Error::NotInvertible {
            value: a.value,
            modulus,
        });
    }
    let root = sqrt_mod_p(a.value, p).ok_or(Error::NotASquare {
        value: a.value,
        p,
    })?;
    let mut x = root.min(p - root);
    // Newton steps double the p-adic precision each time.
    let mut precision = p;
    while precision < modulus {
        precision = precision.saturating_mul(precision).min(modulus);
        let fx = sub_mod(mul_mod(x, x, modulus), a.value, modulus);
        let inv = inv_mod(Residue::from_u64(mul_mod(2, x, modulus), modulus))?.value;
        x = sub_mod(x, mul_mod(fx, inv, modulus), modulus);
    }
    Ok(Residue::from_u64(x, modulus))
}
