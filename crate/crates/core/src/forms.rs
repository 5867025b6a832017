//! Fourier coefficients of the discriminant form `Delta = q prod (1 - q^n)^24`.

use crate::error::{Error, Result};

/// Largest table the builders will allocate.
pub const MAX_TABLE: usize = 20_000_000;

/// Ramanujan tau values and their normalizations `lambda(n) = tau(n) / n^(11/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormTable {
    pub weight: u32,
    pub nmax: usize,
    tau: Vec<i128>,
    lambda: Vec<f64>,
}

impl FormTable {
    /// Wraps exact coefficients `tau(1..=nmax)`.
    pub fn from_tau(weight: u32, tau: Vec<i128>) -> Self {
        let half = (weight as f64 - 1.0) / 2.0;
        let lambda = tau
            .iter()
            .enumerate()
            .map(|(i, &t)| t as f64 / ((i + 1) as f64).powf(half))
            .collect();
        FormTable {
            weight,
            nmax: tau.len(),
            tau,
            lambda,
        }
    }

    /// Rebuilds from cached normalized values, with exact values for a prefix.
    pub fn from_parts(weight: u32, lambda: Vec<f64>, tau: Vec<i128>) -> Self {
        FormTable {
            weight,
            nmax: lambda.len(),
            tau,
            lambda,
        }
    }

    pub fn tau(&self, n: u64) -> Result<i128> {
        if n == 0 || n as usize > self.tau.len() {
            return Err(Error::OutOfRange {
                index: n,
                nmax: self.tau.len() as u64,
            });
        }
        Ok(self.tau[n as usize - 1])
    }

    pub fn lambda(&self, n: u64) -> Result<f64> {
        if n == 0 || n as usize > self.nmax {
            return Err(Error::OutOfRange {
                index: n,
                nmax: self.nmax as u64,
            });
        }
        Ok(self.lambda[n as usize - 1])
    }

    /// Number of exactly known coefficients.
    pub fn exact_cutoff(&self) -> usize {
        self.tau.len()
    }

    pub fn taus(&self) -> &[i128] {
        &self.tau
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn require(&self, n: u64) -> Result<()> {
        if n as usize > self.nmax {
            return Err(Error::TableTooSmall {
                needed: n,
                have: self.nmax as u64,
            });
        }
        Ok(())
    }
}

fn overflow() -> Error {
    Error::Overflow("tau coefficient exceeds 128 bits".into())
}

/// `prod (1 - q^n)^3 = sum_k (-1)^k (2k+1) q^(k(k+1)/2)` truncated below `len`,
/// as sparse `(exponent, coefficient)` pairs.
fn jacobi_cube(len: usize) -> Vec<(usize, i128)> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let e = k * (k + 1) / 2;
        if e >= len {
            break;
        }
        let c = (2 * k + 1) as i128;
        out.push((e, if k % 2 == 0 { c } else { -c }));
        k += 1;
    }
    out
}

/// Euler's pentagonal series `prod (1 - q^n)` truncated below `len`.
fn pentagonal(len: usize) -> Vec<i128> {
    let mut out = vec![0i128; len];
    out[0] = 1;
    for k in 1.. {
        let k = k as i64;
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let e1 = (k * (3 * k - 1) / 2) as usize;
        let e2 = (k * (3 * k + 1) / 2) as usize;
        if e1 >= len {
            break;
        }
        out[e1] += sign;
        if e2 < len {
            out[e2] += sign;
        }
    }
    out
}

fn mul_sparse(dense: &[i128], sparse: &[(usize, i128)]) -> Result<Vec<i128>> {
    let len = dense.len();
    let mut out = vec![0i128; len];
    for &(e, c) in sparse {
        for (i, &d) in dense[..len - e].iter().enumerate() {
            if d != 0 {
                let t = d.checked_mul(c).ok_or_else(overflow)?;
                out[i + e] = out[i + e].checked_add(t).ok_or_else(overflow)?;
            }
        }
    }
    Ok(out)
}

/// Exact `tau(1..=nmax)` for the weight 12 level 1 cusp form.
///
/// The cube of the Euler product is a sparse theta series; the 24th power is
/// its 8th power, accumulated with exact checked arithmetic.
pub fn build_delta_table(nmax: usize) -> Result<FormTable> {
    if nmax == 0 {
        return Err(Error::Domain("nmax must be positive".into()));
    }
    if nmax > MAX_TABLE {
        return Err(Error::Budget(format!("nmax {nmax} exceeds {MAX_TABLE}")));
    }
    let cube = jacobi_cube(nmax);
    let mut acc = vec![0i128; nmax];
    for &(e, c) in &cube {
        acc[e] = c;
    }
    for _ in 1..8 {
        acc = mul_sparse(&acc, &cube)?;
    }
    Ok(FormTable::from_tau(12, acc))
}

/// Truncated product of dense series, accumulated in blocks of `block` rows.
fn mul_dense_blocked(a: &[i128], b: &[i128], block: usize) -> Result<Vec<i128>> {
    let len = a.len();
    let mut out = vec![0i128; len];
    let block = block.max(1);
    for start in (0..len).step_by(block) {
        let end = (start + block).min(len);
        for i in start..end {
            if a[i] == 0 {
                continue;
            }
            for j in 0..len - i {
                if b[j] != 0 {
                    let t = a[i].checked_mul(b[j]).ok_or_else(overflow)?;
                    out[i + j] = out[i + j].checked_add(t).ok_or_else(overflow)?;
                }
            }
        }
    }
    Ok(out)
}

/// Independent route: pentagonal series, then `x^24 = (((x^2 x)^2)^2)^2`
/// by dense truncated squaring in blocks of the given size.
pub fn build_delta_table_dense(nmax: usize, block: usize) -> Result<FormTable> {
    if nmax == 0 {
        return Err(Error::Domain("nmax must be positive".into()));
    }
    let e = pentagonal(nmax);
    let e2 = mul_dense_blocked(&e, &e, block)?;
    let e3 = mul_dense_blocked(&e2, &e, block)?;
    let e6 = mul_dense_blocked(&e3, &e3, block)?;
    let e12 = mul_dense_blocked(&e6, &e6, block)?;
    let e24 = mul_dense_blocked(&e12, &e12, block)?;
    Ok(FormTable::from_tau(12, e24))
}

/// `tau(p0) tau(n) = tau(p0 n) + p0^11 tau(n / p0)`, the last term only when `p0 | n`.
pub fn hecke_relation_check(table: &FormTable, p0: u64, n: u64) -> Result<bool> {
    let lhs = table
        .tau(p0)?
        .checked_mul(table.tau(n)?)
        .ok_or_else(overflow)?;
    let mut rhs = table.tau(p0 * n)?;
    if n % p0 == 0 {
        let w = (p0 as i128).checked_pow(table.weight - 1).ok_or_else(overflow)?;
        rhs = rhs
            .checked_add(w.checked_mul(table.tau(n / p0)?).ok_or_else(overflow)?)
            .ok_or_else(overflow)?;
    }
    Ok(lhs == rhs)
}

/// Divisor counts `d(1..=n)`.
pub fn divisor_counts(n: usize) -> Vec<u32> {
    let mut d = vec![0u32; n + 1];
    for i in 1..=n {
        for j in (i..=n).step_by(i) {
            d[j] += 1;
        }
    }
    d
}

/// First `n` with `|lambda(n)| > d(n)`, if any.
pub fn deligne_violation(table: &FormTable) -> Option<u64> {
    let d = divisor_counts(table.nmax);
    (1..=table.nmax).find_map(|n| {
        (table.lambdas()[n - 1].abs() > d[n] as f64).then_some(n as u64)
    })
}

/// `sum_{n <= x} lambda(n)^2 / x`.
pub fn rankin_selberg_average(table: &FormTable, x: usize) -> f64 {
    let x = x.min(table.nmax);
    crate::sum::rsum(table.lambdas()[..x].iter().map(|l| l * l)) / x as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::is_prime;

    #[test]
    fn small_values() {
        let t = build_delta_table(30).unwrap();
        let known = [
            1i128, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920, 534612,
            -370944, -577738, 401856, 1217160, 987136,
        ];
        for (i, &k) in known.iter().enumerate() {
            assert_eq!(t.tau(i as u64 + 1).unwrap(), k);
        }
        assert_eq!(t.tau(6).unwrap(), t.tau(2).unwrap() * t.tau(3).unwrap());
        assert_eq!(t.lambda(1).unwrap(), 1.0);
        assert!((t.lambda(2).unwrap() + 24.0 / 2f64.powf(5.5)).abs() < 1e-15);
        assert!((t.lambda(2).unwrap() + 0.5303).abs() < 1e-4);
        assert!(t.tau(0).is_err() && t.tau(31).is_err());
    }

    #[test]
    fn product_to_order_two_by_hand() {
        // (1 - q)^24 (1 - q^2)^24 = 1 - 24 q + (276 - 24) q^2 + ...
        let t = build_delta_table(3).unwrap();
        assert_eq!(t.tau(2).unwrap(), -24);
        assert_eq!(t.tau(3).unwrap(), 276 - 24);
    }

    #[test]
    fn routes_agree_and_block_size_is_irrelevant() {
        let sparse = build_delta_table(400).unwrap();
        let d1 = build_delta_table_dense(400, 1).unwrap();
        let d2 = build_delta_table_dense(400, 37).unwrap();
        let d3 = build_delta_table_dense(400, 400).unwrap();
        assert_eq!(sparse.taus(), d1.taus());
        assert_eq!(d1, d2);
        assert_eq!(d2, d3);
    }

    #[test]
    fn hecke_examples() {
        let t = build_delta_table(20).unwrap();
        assert!(hecke_relation_check(&t, 2, 2).unwrap());
        assert_eq!(t.tau(2).unwrap().pow(2), t.tau(4).unwrap() + 2048);
        assert!(hecke_relation_check(&t, 2, 3).unwrap());
        assert!(hecke_relation_check(&t, 3, 5).unwrap());
    }

    #[test]
    fn hecke_exhaustive_small() {
        let t = build_delta_table(2000).unwrap();
        for p0 in (2..2000u64).filter(|&x| is_prime(x)) {
            for n in 1..=2000 / p0 {
                assert!(hecke_relation_check(&t, p0, n).unwrap(), "p0={p0} n={n}");
            }
        }
    }

    #[test]
    fn deligne_small() {
        let t = build_delta_table(5000).unwrap();
        assert_eq!(deligne_violation(&t), None);
        let avg = rankin_selberg_average(&t, 5000);
        assert!(avg > 0.1 && avg < 10.0);
    }
}
