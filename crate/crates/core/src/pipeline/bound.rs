//! Exponent bookkeeping for the final bound: the balancing depth `l*`, the
//! admissible window for `N`, and the predicted sizes of each contribution.
//!
//! Exponents are linear forms `a r + b log_p N` with rational `a`, `b`, so
//! the identities between them are checked exactly.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modarith::is_prime;

/// `a r + b L` with `L = log_p N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearExponent {
    pub r: Rational64,
    pub log_n: Rational64,
}

impl LinearExponent {
    pub fn new(r: (i64, i64), log_n: (i64, i64)) -> Self {
        LinearExponent {
            r: Rational64::new(r.0, r.1),
            log_n: Rational64::new(log_n.0, log_n.1),
        }
    }

    pub fn add(self, o: LinearExponent) -> Self {
        LinearExponent {
            r: self.r + o.r,
            log_n: self.log_n + o.log_n,
        }
    }

    pub fn scale(self, c: Rational64) -> Self {
        LinearExponent {
            r: self.r * c,
            log_n: self.log_n * c,
        }
    }

    pub fn eval(&self, r: f64, log_n: f64) -> f64 {
        to_f64(self.r) * r + to_f64(self.log_n) * log_n
    }
}

fn to_f64(x: Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// `l* = 26 r / 45 + L / 9`.
pub fn ell_star_form() -> LinearExponent {
    LinearExponent::new((26, 45), (1, 9))
}

/// Exponent of the zero-frequency term `sqrt(N) p^(l/2)` at depth `l`
/// given as a linear form.
pub fn zero_term(ell: LinearExponent) -> LinearExponent {
    LinearExponent::new((0, 1), (1, 2)).add(ell.scale(q(1, 2)))
}

/// Exponent of the non-zero-frequency term `p^(13r/30) N^(7/12) p^(-l/4)`.
pub fn nonzero_term(ell: LinearExponent) -> LinearExponent {
    LinearExponent::new((13, 30), (7, 12)).add(ell.scale(q(-1, 4)))
}

/// Exponent of the final bound `N^(5/9) p^(13r/45)`.
pub fn final_term() -> LinearExponent {
    LinearExponent::new((13, 45), (5, 9))
}

/// The exact identities behind `l*`: both terms balance there and equal
/// the final bound.
pub fn exponent_identities_hold() -> bool {
    let l = ell_star_form();
    zero_term(l) == nonzero_term(l) && zero_term(l) == final_term()
}

/// Predicted magnitudes at one integer depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthPrediction {
    pub ell: u32,
    pub admissible: bool,
    /// `sqrt(N) p^(l/2) (log N)^c_eps`.
    pub zero_frequency: f64,
    /// `p^(13r/30) N^(7/12) p^(-l/4) (log N)^c_eps`.
    pub non_zero_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n_scale: f64,
    pub p: u64,
    pub r: u32,
    pub c_eps: f64,
    pub log_p_n: f64,
    pub ell_star: f64,
    /// The chosen integer depth, if any integer satisfies the side conditions.
    pub ell_rounded: Option<u32>,
    /// The integers on either side of `l*`.
    pub neighbors: Vec<DepthPrediction>,
    pub window_lo: f64,
    pub window_hi: f64,
    pub window_ok: bool,
    /// Both terms at `l*` and their difference, in `log_p` units.
    pub balance_residual: f64,
    pub zero_frequency: f64,
    pub non_zero_frequency: f64,
    /// `N^(5/9) p^(13r/45) (log N)^c_eps`.
    pub final_bound: f64,
    pub trivial_bound: f64,
    pub measured_abs_s: Option<f64>,
}

/// Integer depths allowed by `max(p^l, p^(r-l)) <= N` and `3 l <= 2 r`.
fn admissible(ell: u32, r: u32, log_n: f64) -> bool {
    let tol = 1e-12;
    ell as f64 <= log_n + tol && (r as f64 - ell as f64) <= log_n + tol && 3 * ell <= 2 * r
}

pub fn bound_report(n_scale: f64, p: u64, r: u32, c_eps: f64) -> Result<BoundReport> {
    if !is_prime(p) || r == 0 || !(n_scale > 1.0) || !(c_eps >= 0.0) {
        return Err(Error::Domain(format!("invalid inputs N={n_scale}, p={p}, r={r}, c_eps={c_eps}")));
    }
    let pf = p as f64;
    let rf = r as f64;
    let log_n = n_scale.ln() / pf.ln();
    let lf = n_scale.ln().powf(c_eps);
    let ell_star = ell_star_form().eval(rf, log_n);
    let at = |ell: f64| -> (f64, f64) {
        (
            n_scale.sqrt() * pf.powf(ell / 2.0) * lf,
            pf.powf(13.0 * rf / 30.0) * n_scale.powf(7.0 / 12.0) * pf.powf(-ell / 4.0) * lf,
        )
    };
    let (z, nz) = at(ell_star);
    let balance_residual = (z.ln() - nz.ln()).abs() / pf.ln();

    let lo = ell_star.floor().max(0.0) as u32;
    let neighbors: Vec<DepthPrediction> = [lo, lo + 1]
        .iter()
        .map(|&ell| {
            let (zero_frequency, non_zero_frequency) = at(ell as f64);
            DepthPrediction {
                ell,
                admissible: admissible(ell, r, log_n),
                zero_frequency,
                non_zero_frequency,
            }
        })
        .collect();
    // nearest admissible integer; ties go to the smaller larger-term
    let ell_rounded = neighbors
        .iter()
        .filter(|d| d.admissible)
        .min_by(|a, b| {
            let da = (a.ell as f64 - ell_star).abs();
            let db = (b.ell as f64 - ell_star).abs();
            da.partial_cmp(&db).unwrap().then_with(|| {
                let ma = a.zero_frequency.max(a.non_zero_frequency);
                let mb = b.zero_frequency.max(b.non_zero_frequency);
                ma.partial_cmp(&mb).unwrap()
            })
        })
        .map(|d| d.ell);

    let tol = 1e-12;
    let window_lo = 13.0 * rf / 20.0;
    let window_hi = 4.0 * rf / 5.0;
    Ok(BoundReport {
        n_scale,
        p,
        r,
        c_eps,
        log_p_n: log_n,
        ell_star,
        ell_rounded,
        neighbors,
        window_lo,
        window_hi,
        window_ok: window_lo - tol <= log_n && log_n <= window_hi + tol,
        balance_residual,
        zero_frequency: z,
        non_zero_frequency: nz,
        final_bound: n_scale.powf(5.0 / 9.0) * pf.powf(13.0 * rf / 45.0) * lf,
        trivial_bound: n_scale,
        measured_abs_s: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_are_exact() {
        assert!(exponent_identities_hold());
        let l = ell_star_form();
        assert_eq!(zero_term(l), LinearExponent::new((13, 45), (5, 9)));
    }

    #[test]
    fn window_for_r20() {
        let rep = bound_report(7f64.powi(13), 7, 20, 0.0).unwrap();
        assert!(rep.window_ok);
        assert_eq!((rep.window_lo, rep.window_hi), (13.0, 16.0));
        assert!(bound_report(7f64.powf(16.0), 7, 20, 0.0).unwrap().window_ok);
        assert!(!bound_report(7f64.powf(16.5), 7, 20, 0.0).unwrap().window_ok);
        assert!(!bound_report(7f64.powf(12.9), 7, 20, 0.0).unwrap().window_ok);
    }

    #[test]
    fn ell_star_at_r45() {
        let rep = bound_report(7f64.powi(30), 7, 45, 0.0).unwrap();
        assert!((rep.ell_star - (26.0 + 30.0 / 9.0)).abs() < 1e-12);
        assert!(rep.balance_residual < 1e-12);
        assert_eq!(rep.ell_rounded, Some(29));
        assert_eq!(rep.neighbors.len(), 2);
    }

    #[test]
    fn upper_endpoint_beats_the_trivial_bound() {
        // at L = 4r/5 the final exponent is 33r/45 < 36r/45
        let at_end = final_term().r + final_term().log_n * q(4, 5);
        assert_eq!(at_end, q(33, 45));
        assert!(at_end < q(36, 45));
        let rep = bound_report(7f64.powi(16), 7, 20, 0.0).unwrap();
        assert!(rep.final_bound < rep.trivial_bound);
        assert!((rep.final_bound.ln() / 7f64.ln() - 33.0 * 20.0 / 45.0).abs() < 1e-9);
    }
}
