//! Complete character sums: brute-force oracles and closed forms.
//!
//! Every closed form here is paired with a direct summation that shares
//! nothing with it beyond [`crate::modarith`] and character evaluation.

use num_complex::Complex64;

use crate::characters::{cis_fraction, gauss_sum, CharacterExpansion, DirichletCharacter, UnityRoot};
use crate::error::{Error, Result};
use crate::modarith::{gcd, hensel_sqrt, inv_mod, inv_mod_i, is_square_mod_p, Residue};
use crate::sum::csum;

/// The data `(a, b, q, m)` of the sum over `beta mod p^r q`, at depth `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongruenceContext {
    pub ell: u32,
    pub q: u64,
    pub a: i64,
    pub b: i64,
    pub m: i64,
}

impl CongruenceContext {
    /// `k = m - (a + b q) p^(r - ell)`, the only combination the sum depends on.
    pub fn shift(&self, p: u64, r: u32) -> i128 {
        let pr_l = (p as i128).pow(r - self.ell);
        self.m as i128 - (self.a as i128 + self.b as i128 * self.q as i128) * pr_l
    }
}

/// `sum_{beta mod p^r q} chi(beta) e(-(a + b q) beta / (p^ell q) + m beta / (p^r q))`.
pub fn charsum_c_bruteforce(ctx: &CongruenceContext, chi: &DirichletCharacter) -> Complex64 {
    let pr = chi.modulus();
    let pl = chi.prime_power().pow(ctx.ell);
    let q = ctx.q;
    let big = pr * q;
    let small = pl * q;
    let ab = ctx.a as i128 + ctx.b as i128 * q as i128;
    let ab = ab.rem_euclid(small as i128) as u64;
    let m = (ctx.m as i128).rem_euclid(big as i128) as u64;
    csum((0..big).filter(|b| b % chi.prime_power().p() != 0).map(|beta| {
        let first = (small - (ab as u128 * beta as u128 % small as u128) as u64) % small;
        let second = (m as u128 * beta as u128 % big as u128) as u64;
        chi.eval_complex_u64(beta) * cis_fraction(first, small) * cis_fraction(second, big)
    }))
}

/// Closed form of [`charsum_c_bruteforce`] for `(q, p) = 1`.
///
/// With `k = m - (a + b q) p^(r - ell)` the sum is `q chi(q) conj(chi)(k) tau_chi`
/// when `q | k` and `p` does not divide `k`, and zero otherwise.
pub fn charsum_c_closed(
    ctx: &CongruenceContext,
    chi: &DirichletCharacter,
    tau: Complex64,
) -> Complex64 {
    let p = chi.prime_power().p();
    let r = chi.prime_power().e();
    let k = ctx.shift(p, r);
    if k.rem_euclid(ctx.q as i128) != 0 || k.rem_euclid(p as i128) == 0 {
        return Complex64::new(0.0, 0.0);
    }
    ctx.q as f64 * chi.eval_complex(ctx.q as i128) * chi.eval_complex(k).conj() * tau
}

/// Convenience wrapper computing the Gauss sum on the fly.
pub fn charsum_c_closed_standalone(ctx: &CongruenceContext, chi: &DirichletCharacter) -> Complex64 {
    charsum_c_closed(ctx, chi, gauss_sum(chi))
}

fn inv_ps(x: i128, ps: u64) -> u64 {
    inv_mod_i(x, ps).expect("unit required")
}

/// The unit-restricted sum `sum*_{alpha mod p^s} e((Y1 alpha^2 + Y2 alpha) / p^r)`
/// with `Y1 = b1 p^(r-s) (m2^-2 - m1^-2)` and `Y2 = a2 p^(r-s) (m1^-1 - m2^-1)`.
pub fn alpha_quadratic_gauss_bruteforce(
    m1: i64,
    m2: i64,
    exp: &CharacterExpansion,
    p: u64,
    r: u32,
) -> Complex64 {
    alpha_sum(m1, m2, exp, p, r, true)
}

/// The same phase summed over every `alpha mod p^s`.
pub fn alpha_quadratic_gauss_complete(
    m1: i64,
    m2: i64,
    exp: &CharacterExpansion,
    p: u64,
    r: u32,
) -> Complex64 {
    alpha_sum(m1, m2, exp, p, r, false)
}

fn alpha_sum(m1: i64, m2: i64, exp: &CharacterExpansion, p: u64, r: u32, units: bool) -> Complex64 {
    let s = exp.s;
    let ps = p.pow(s);
    let pr = p.pow(r);
    let lift = (pr / ps) as i128;
    let i1 = inv_ps(m1 as i128, ps) as i128;
    let i2 = inv_ps(m2 as i128, ps) as i128;
    let y1 = (exp.b1.value() as i128 * lift * (i2 * i2 - i1 * i1)).rem_euclid(pr as i128);
    let y2 = (exp.a2.value() as i128 * lift * (i1 - i2)).rem_euclid(pr as i128);
    csum((0..ps)
        .filter(|a| !units || a % p != 0)
        .map(|alpha| {
            let a = alpha as i128;
            let num = (y1 * (a * a % pr as i128) + y2 * a).rem_euclid(pr as i128);
            cis_fraction(num as u64, pr)
        }))
}

/// `p^s` when `m1 = m2 mod p^s`, else zero.
pub fn alpha_quadratic_gauss_closed(m1: i64, m2: i64, s: u32, p: u64) -> f64 {
    let ps = p.pow(s) as i64;
    if (m1 - m2).rem_euclid(ps) == 0 {
        ps as f64
    } else {
        0.0
    }
}

/// Residues solving the non-zero frequency congruences for a given `alpha1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonzeroSolution {
    pub alpha2: Residue,
    pub m1_class: Residue,
    pub m2_class: Residue,
}

/// Solves `alpha1^-1 q2 - alpha2^-1 q1 + n = 0 mod p^s` for `alpha2`, and
/// `p^(r-s)(m1^-1 q2 - m2^-1 q1) + n = 0` for the classes of `m1 mod q1`
/// and `m2 mod q2`.
pub fn solve_nonzero_congruences(
    q1: u64,
    q2: u64,
    n: i64,
    alpha1: i64,
    p: u64,
    r: u32,
    s: u32,
) -> Result<NonzeroSolution> {
    if n == 0 {
        return Err(Error::NotCoprime("zero frequency".into()));
    }
    if gcd(n.unsigned_abs(), q1 * q2) != 1 {
        return Err(Error::NotCoprime(format!("n = {n} shares a factor with q1 q2")));
    }
    if q1 % p == 0 || q2 % p == 0 {
        return Err(Error::NotCoprime(format!("q1 q2 = {} is divisible by {p}", q1 * q2)));
    }
    if gcd(q1, q2) != 1 {
        // p^(r-s) m1^-1 q2 = -n mod q1 has no unit solution
        return Err(Error::NotCoprime(format!("q1 = {q1} and q2 = {q2} share a factor")));
    }
    let ps = p.pow(s);
    let a1_inv = inv_mod_i(alpha1 as i128, ps)
        .map_err(|_| Error::NotCoprime(format!("alpha1 = {alpha1} is not a unit")))?;
    let denom = (a1_inv as i128 * q2 as i128 + n as i128).rem_euclid(ps as i128);
    let denom_inv = inv_mod_i(denom, ps)
        .map_err(|_| Error::NotCoprime("alpha1^-1 q2 + n is not a unit".into()))?;
    let alpha2 = Residue::new(q1 as i128 * denom_inv as i128, ps);
    if alpha2.value() % p == 0 {
        return Err(Error::NotCoprime("alpha2 is not a unit".into()));
    }
    let pt = (p as i128).pow(r - s);
    let class = |num: i128, q: u64| -> Result<Residue> {
        if q == 1 {
            return Ok(Residue::from_u64(0, 1));
        }
        let n_inv = inv_mod_i(n as i128, q)? as i128;
        Ok(Residue::new(n_inv * num, q))
    };
    let sol = NonzeroSolution {
        alpha2,
        m1_class: class(-pt * q2 as i128, q1)?,
        m2_class: class(pt * q1 as i128, q2)?,
    };
    debug_assert!(check_nonzero_solution(q1, q2, n, alpha1, p, r, s, &sol));
    Ok(sol)
}

/// Substitutes a solution back into both congruences.
#[allow(clippy::too_many_arguments)]
pub fn check_nonzero_solution(
    q1: u64,
    q2: u64,
    n: i64,
    alpha1: i64,
    p: u64,
    r: u32,
    s: u32,
    sol: &NonzeroSolution,
) -> bool {
    let ps = p.pow(s);
    let (Ok(a1i), Ok(a2i)) = (
        inv_mod_i(alpha1 as i128, ps),
        inv_mod_i(sol.alpha2.value() as i128, ps),
    ) else {
        return false;
    };
    let first = (a1i as i128 * q2 as i128 - a2i as i128 * q1 as i128 + n as i128)
        .rem_euclid(ps as i128)
        == 0;
    let pt = (p as i128).pow(r - s);
    // the q1 q2 congruence read modulo q1 and modulo q2
    let mod_q = |m: &Residue, q: u64, other: u64, sign: i128| -> bool {
        if q == 1 {
            return true;
        }
        match inv_mod(*m) {
            Ok(mi) => (sign * pt * mi.value() as i128 * other as i128 + n as i128)
                .rem_euclid(q as i128)
                == 0,
            Err(_) => false,
        }
    };
    first && mod_q(&sol.m1_class, q1, q2, 1) && mod_q(&sol.m2_class, q2, q1, -1)
}

/// Parameters of the non-zero frequency sum over `alpha mod p^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonzeroFreqParams {
    pub q1: u64,
    pub q2: u64,
    pub r1: i64,
    pub r2: i64,
    pub n: i64,
    pub s: u32,
    pub expansion: CharacterExpansion,
}

impl NonzeroFreqParams {
    fn validate(&self, p: u64) -> Result<()> {
        if self.s < 2 || self.s % 2 != 0 {
            return Err(Error::Domain(format!("depth {} must be even and >= 2", self.s)));
        }
        for (name, v) in [
            ("q1", self.q1 as i64),
            ("q2", self.q2 as i64),
            ("r1", self.r1),
            ("r2", self.r2),
            ("n", self.n),
        ] {
            if v.rem_euclid(p as i64) == 0 {
                return Err(Error::NotCoprime(format!("{name} = {v} is divisible by {p}")));
            }
        }
        Ok(())
    }
}

/// Direct summation over units `alpha mod p^s` with `alpha^-1 q2 + n` a unit of
/// `conj(chi)(-n^-1 p^(r-s) q2 + r1 q1 - alpha p^(r-s)) chi(n^-1 p^(r-s) q1 + r2 q2 - q1 (alpha^-1 q2 + n)^-1 p^(r-s))`.
pub fn nonzero_charsum_bruteforce(np: &NonzeroFreqParams, chi: &DirichletCharacter) -> Result<Complex64> {
    let pp = chi.prime_power();
    let (p, r) = (pp.p(), pp.e());
    np.validate(p)?;
    let (pr, ps) = (pp.value() as i128, pp.pow(np.s));
    let pt = (p as i128).pow(r - np.s);
    let n_inv = inv_mod_i(np.n as i128, pr as u64)? as i128;
    let (q1, q2) = (np.q1 as i128, np.q2 as i128);
    let first_base = -n_inv * pt % pr * q2 + np.r1 as i128 * q1;
    let second_base = n_inv * pt % pr * q1 + np.r2 as i128 * q2;
    let mut terms = Vec::with_capacity(ps as usize);
    for alpha in 1..ps {
        if alpha % p == 0 {
            continue;
        }
        let a_inv = inv_ps(alpha as i128, ps) as i128;
        let d = (a_inv * q2 + np.n as i128).rem_euclid(ps as i128);
        if d % p as i128 == 0 {
            continue;
        }
        let d_inv = inv_ps(d, ps) as i128;
        let x = (first_base - alpha as i128 * pt).rem_euclid(pr);
        let y = (second_base - q1 * d_inv % pr * pt).rem_euclid(pr);
        terms.push(chi.eval_complex(x).conj() * chi.eval_complex(y));
    }
    Ok(csum(terms))
}

/// Phase data after the shift `beta = alpha + n^-1 q2`: with `u_i = r_i q_i` and
/// `c = r2^-1 q1 n^-2`, the sum equals
/// `conj(chi)(u1) chi(u2) sum_{beta} e(F(beta) / p^s)` where
/// `F(beta) = -a2 u1^-1 beta - a2 c beta^-1 + b1 (u1^-2 beta^2 - c^2 beta^-2)`,
/// over units `beta` with `beta != n^-1 q2 mod p`.
struct ShiftedPhase {
    ps: u64,
    a2: i128,
    b1: i128,
    u1_inv: i128,
    c: i128,
    excluded: u64,
    prefactor: Complex64,
}

impl ShiftedPhase {
    fn new(np: &NonzeroFreqParams, chi: &DirichletCharacter) -> Result<Self> {
        let pp = chi.prime_power();
        let p = pp.p();
        np.validate(p)?;
        let ps = pp.pow(np.s);
        let psi = ps as i128;
        let u1 = np.r1 as i128 * np.q1 as i128;
        let u2 = np.r2 as i128 * np.q2 as i128;
        let n_inv = inv_ps(np.n as i128, ps) as i128;
        let r2_inv = inv_ps(np.r2 as i128, ps) as i128;
        let c = (r2_inv * np.q1 as i128 % psi * n_inv % psi * n_inv).rem_euclid(psi);
        Ok(ShiftedPhase {
            ps,
            a2: np.expansion.a2.value() as i128,
            b1: np.expansion.b1.value() as i128,
            u1_inv: inv_ps(u1, ps) as i128,
            c,
            excluded: ((n_inv * np.q2 as i128).rem_euclid(p as i128)) as u64,
            prefactor: chi.eval_complex(u1).conj() * chi.eval_complex(u2),
        })
    }

    fn phase(&self, beta: i128) -> u64 {
        let m = self.ps as i128;
        let b = beta.rem_euclid(m);
        let bi = inv_ps(b, self.ps) as i128;
        let lin = -self.a2 * self.u1_inv % m * b - self.a2 * self.c % m * bi;
        let quad = self.b1
            * ((self.u1_inv * self.u1_inv % m * (b * b % m)) % m
                - (self.c * self.c % m * (bi * bi % m)) % m)
            % m;
        (lin + quad).rem_euclid(m) as u64
    }
}

/// The non-zero frequency sum rewritten over the shifted variable; equal to
/// [`nonzero_charsum_bruteforce`] term by term after reindexing.
pub fn nonzero_charsum_shifted(np: &NonzeroFreqParams, chi: &DirichletCharacter) -> Result<Complex64> {
    let sp = ShiftedPhase::new(np, chi)?;
    let p = chi.prime_power().p();
    let sum = csum((1..sp.ps)
        .filter(|b| b % p != 0 && b % p != sp.excluded)
        .map(|b| cis_fraction(sp.phase(b as i128), sp.ps)));
    Ok(sp.prefactor * sum)
}

/// Stationary-phase evaluation of the non-zero frequency sum.
///
/// Splitting `beta = beta1 + beta2 p^(s/2)` leaves only the `beta1` with
/// `beta1^2 = (n^-1 q1)^2 r1 r2^-1 mod p^(s/2)`, each weighted by `p^(s/2)`.
/// Both square roots contribute, so the sum vanishes exactly when `r1 r2^-1`
/// is a non-residue mod `p` and otherwise has modulus at most `2 p^(s/2)`.
pub fn nonzero_charsum_closed(np: &NonzeroFreqParams, chi: &DirichletCharacter) -> Result<Complex64> {
    let p = chi.prime_power().p();
    np.validate(p)?;
    let sp = ShiftedPhase::new(np, chi)?;
    let target = Residue::new(sp.c * np.r1 as i128 * np.q1 as i128, sp.ps);
    let root = match hensel_sqrt(target, p) {
        Ok(x) => x.value() as i128,
        Err(Error::NotASquare { .. }) => return Ok(Complex64::new(0.0, 0.0)),
        Err(e) => return Err(e),
    };
    let half = (p as f64).powi(np.s as i32 / 2);
    let sum = csum([root, -root]
        .into_iter()
        .filter(|b| b.rem_euclid(p as i128) as u64 != sp.excluded)
        .map(|b| cis_fraction(sp.phase(b), sp.ps)));
    Ok(sp.prefactor * half * sum)
}

/// Which square root of `r2 r1^-1` the single-root closed form is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootChoice {
    Canonical,
    Conjugate,
}

/// The single-root closed form written with the `X`-coefficients of the
/// two-step split, using `A1 = -a2` for the linear and `A2 p^(r-s) = -b1` for
/// the quadratic coefficient. Zero off the square class.
pub fn nonzero_charsum_single_root(
    np: &NonzeroFreqParams,
    chi: &DirichletCharacter,
    choice: RootChoice,
) -> Result<Complex64> {
    let p = chi.prime_power().p();
    np.validate(p)?;
    let ps = chi.prime_power().pow(np.s);
    let m = ps as i128;
    let ratio = Residue::new(np.r2 as i128 * inv_ps(np.r1 as i128, ps) as i128, ps);
    if !is_square_mod_p(ratio.value(), p) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let root = hensel_sqrt(ratio, p)?;
    let root = match choice {
        RootChoice::Canonical => root,
        RootChoice::Conjugate => root.neg(),
    };
    let sq = root.value() as i128;
    let sq_inv = inv_ps(sq, ps) as i128;
    let a1 = -(np.expansion.a2.value() as i128);
    let a2pt = -(np.expansion.b1.value() as i128);
    let inv = |x: i128| inv_ps(x, ps) as i128;
    let n_i = inv(np.n as i128);
    let (q1, q2) = (np.q1 as i128, np.q2 as i128);
    let (r1i, r2i, q1i, q2i) = (inv(np.r1 as i128), inv(np.r2 as i128), inv(q1), inv(q2));
    let u1i = r1i * q1i % m;
    let u2i = r2i * q2i % m;
    let red = |x: i128| x.rem_euclid(m);
    let n2 = red(n_i * n_i);
    let x1 = red(a1 * n_i % m * u1i - 2 * a2pt % m * n2 % m * red(r1i * r1i) % m * red(q1i * q1i) % m * q2);
    let x2n = red(a1 * n_i % m * u2i % m * q1 + 2 * a2pt % m * n2 % m * red(r2i * r2i) % m * red(q2i * q2i) % m * red(q1 * q1));
    let x3 = red(-a2pt * red(r1i * r1i) % m * red(q1i * q1i));
    let base = red(a1 * n_i % m * red(u1i * q2 + u2i * q1))
        + red(-a2pt * n2 % m * red(q1i * q1i) % m * red(r1i * r1i) % m * red(q2 * q2)
            + a2pt * n2 % m * red(r2i * r2i) % m * red(q2i * q2i) % m * red(q1 * q1));
    let sm1 = red(sq - 1);
    let om = red(1 - sq_inv);
    let phase = red(base + x1 * sm1 - x2n * om + x3 * red(sm1 * sm1 + om * om));
    let half = (p as f64).powi(np.s as i32 / 2);
    let u1 = np.r1 as i128 * q1;
    let u2 = np.r2 as i128 * q2;
    Ok(chi.eval_complex(u1).conj() * chi.eval_complex(u2) * half * cis_fraction(phase as u64, ps))
}

/// Which single-root evaluation reproduces the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMatch {
    Vanishing,
    Canonical,
    Conjugate,
    Both,
    Neither,
}

/// Oracle, two-root closed form and both single-root evaluations side by side.
#[derive(Debug, Clone, Copy)]
pub struct NonzeroComparison {
    pub brute: Complex64,
    pub closed: Complex64,
    pub canonical: Complex64,
    pub conjugate: Complex64,
    pub root_match: RootMatch,
}

pub fn compare_nonzero(
    np: &NonzeroFreqParams,
    chi: &DirichletCharacter,
    rel_tol: f64,
) -> Result<NonzeroComparison> {
    let brute = nonzero_charsum_bruteforce(np, chi)?;
    let closed = nonzero_charsum_closed(np, chi)?;
    let canonical = nonzero_charsum_single_root(np, chi, RootChoice::Canonical)?;
    let conjugate = nonzero_charsum_single_root(np, chi, RootChoice::Conjugate)?;
    let scale = (chi.prime_power().p() as f64).powi(np.s as i32 / 2);
    let close = |z: Complex64| (z - brute).norm() <= rel_tol * scale;
    let root_match = if canonical.norm() == 0.0 && conjugate.norm() == 0.0 {
        RootMatch::Vanishing
    } else {
        match (close(canonical), close(conjugate)) {
            (true, true) => RootMatch::Both,
            (true, false) => RootMatch::Canonical,
            (false, true) => RootMatch::Conjugate,
            (false, false) => RootMatch::Neither,
        }
    };
    Ok(NonzeroComparison {
        brute,
        closed,
        canonical,
        conjugate,
        root_match,
    })
}

/// Checks `e(-A' n / (p^s q)) = e(-A' q^-1 n / p^s) e(-m^-1 p^r p^(-2s) n / q)`
/// exactly, where `A' = (a + b q) / p^ell1`, `s = ell - ell1` and `m = a p^(r - ell) mod q`.
#[allow(clippy::too_many_arguments)]
pub fn split_identity_check(
    a: i64,
    b: i64,
    q: u64,
    ell: u32,
    ell1: u32,
    n: i64,
    p: u64,
    r: u32,
) -> Result<bool> {
    if gcd(q, p) != 1 {
        return Err(Error::NotCoprime(format!("q = {q} is divisible by {p}")));
    }
    let s = ell - ell1;
    let pl = (p as i128).pow(ell);
    let ab = a as i128 + b as i128 * q as i128;
    let pl1 = (p as i128).pow(ell1);
    let exact = ab.rem_euclid(pl1) == 0
        && (ell1 == ell || (ab / pl1).rem_euclid(p as i128) != 0);
    if !exact || ab.rem_euclid(pl) == 0 && ell1 < ell {
        return Err(Error::Domain(format!("(a + b q, p^{ell}) != p^{ell1}")));
    }
    let alpha = ab / pl1;
    let ps = p.pow(s);
    let big = ps * q;
    let n = n as i128;
    let lhs = UnityRoot::new(-(inv_mod_i(alpha, big)? as i128) * n, big);
    let q_inv = inv_mod_i(q as i128, ps)? as i128;
    let left = UnityRoot::new(-(inv_mod_i(alpha, ps)? as i128) * q_inv % ps as i128 * n, ps);
    let m = a as i128 * (p as i128).pow(r - ell);
    let m_inv = inv_mod_i(m, q)? as i128;
    let p2s_inv = inv_mod_i((p as i128).pow(2 * s), q)? as i128;
    let pr = (p as i128).pow(r).rem_euclid(q as i128);
    let right = UnityRoot::new(-(m_inv * pr % q as i128 * p2s_inv % q as i128) * n, q);
    Ok(lhs == left.mul(right))
}
