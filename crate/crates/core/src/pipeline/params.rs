//! Scale parameters shared by the dual-side computations.

use crate::error::{Error, Result};
use crate::modarith::is_prime;

/// `N`, the conductor `p^r`, the depth `l` and sub-depth `l1`, and the cutoff
/// power `c_eps` that turns every `N^eps` into `(log N)^c_eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub n_scale: f64,
    pub p: u64,
    pub r: u32,
    pub ell: u32,
    pub ell1: u32,
    pub c_eps: f64,
    /// Truncation `|x| <= x_cut` of the delta-method x-integral.
    pub x_cut: f64,
}

impl PipelineParams {
    pub fn new(n_scale: f64, p: u64, r: u32, ell: u32, ell1: u32, c_eps: f64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if r == 0 || ell > r {
            return Err(Error::Domain(format!("need 1 <= r and l <= r, got r={r}, l={ell}")));
        }
        if ell1 > ell {
            return Err(Error::Domain(format!("need l1 <= l, got l1={ell1}, l={ell}")));
        }
        if !(n_scale > 1.0) || (p as f64).powi(ell as i32) > n_scale {
            return Err(Error::Domain(format!("need p^l <= N, got N={n_scale}")));
        }
        if !(c_eps >= 0.0) {
            return Err(Error::Domain("c_eps must be nonnegative".into()));
        }
        let x_cut = n_scale.ln().powf(c_eps).max(1.0);
        Ok(PipelineParams {
            n_scale,
            p,
            r,
            ell,
            ell1,
            c_eps,
            x_cut,
        })
    }

    pub fn with_x_cut(mut self, x_cut: f64) -> Self {
        self.x_cut = x_cut;
        self
    }

    pub fn with_ell1(&self, ell1: u32) -> Result<Self> {
        let mut p = self.clone();
        if ell1 > self.ell {
            return Err(Error::Domain(format!("need l1 <= l, got l1={ell1}")));
        }
        p.ell1 = ell1;
        Ok(p)
    }

    pub fn p_pow(&self, e: u32) -> f64 {
        (self.p as f64).powi(e as i32)
    }

    pub fn p_pow_u64(&self, e: u32) -> u64 {
        self.p.pow(e)
    }

    /// `Q = sqrt(N / p^l)`.
    pub fn q_big(&self) -> f64 {
        (self.n_scale / self.p_pow(self.ell)).sqrt()
    }

    /// `(log N)^c_eps`.
    pub fn log_factor(&self) -> f64 {
        self.n_scale.ln().powf(self.c_eps)
    }

    /// `M0 = p^r Q / N (log N)^c_eps`.
    pub fn m0(&self) -> f64 {
        self.p_pow(self.r) * self.q_big() / self.n_scale * self.log_factor()
    }

    /// `N0 = p^(l - 2 l1) (log N)^c_eps`.
    pub fn n0(&self) -> f64 {
        (self.p as f64).powi(self.ell as i32 - 2 * self.ell1 as i32) * self.log_factor()
    }

    /// Moduli `1 <= q <= Q` prime to `p`.
    pub fn moduli(&self) -> Vec<u64> {
        let qmax = (self.q_big() + 1e-9).floor() as u64;
        (1..=qmax).filter(|q| q % self.p != 0).collect()
    }

    /// Dual modulus `p^(l - l1) q` of the Voronoi step.
    pub fn dual_modulus(&self, q: u64) -> u64 {
        self.p_pow_u64(self.ell - self.ell1) * q
    }

    /// Whether the Postnikov-type expansion is usable at this depth.
    pub fn postnikov_ok(&self) -> bool {
        3 * self.ell <= 2 * self.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_scales() {
        let p = PipelineParams::new(250.0, 5, 3, 1, 0, 0.0).unwrap();
        assert!((p.q_big() - 50f64.sqrt()).abs() < 1e-12);
        assert!((p.m0() - 125.0 * 50f64.sqrt() / 250.0).abs() < 1e-12);
        assert_eq!(p.n0(), 5.0);
        assert_eq!(p.moduli(), vec![1, 2, 3, 4, 6, 7]);
        assert_eq!(p.dual_modulus(3), 15);
        let p = PipelineParams::new(343.0, 7, 4, 2, 0, 1.0).unwrap();
        assert!((p.n0() - 49.0 * 343f64.ln()).abs() < 1e-9);
        assert!(p.postnikov_ok());
    }

    #[test]
    fn validation() {
        assert!(PipelineParams::new(250.0, 6, 3, 1, 0, 1.0).is_err());
        assert!(PipelineParams::new(250.0, 5, 3, 4, 0, 1.0).is_err());
        assert!(PipelineParams::new(250.0, 5, 3, 1, 2, 1.0).is_err());
        assert!(PipelineParams::new(20.0, 5, 3, 2, 0, 1.0).is_err());
        assert!(PipelineParams::new(250.0, 5, 3, 1, 0, -1.0).is_err());
    }
}
