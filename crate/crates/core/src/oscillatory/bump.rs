//! The smooth weight `W(x) = exp(4 - 1/((x-1)(2-x)))` on `(1, 2)`.
//!
//! Derivatives come from truncated Taylor jets, so any order is available
//! without symbolic differentiation.

use crate::oscillatory::quadrature::{adaptive_real, AdaptiveOptions};

/// Truncated Taylor series `sum c_k h^k`.
type Jet = Vec<f64>;

fn jet_recip(a: &Jet) -> Jet {
    let n = a.len();
    let mut out = vec![0.0; n];
    out[0] = 1.0 / a[0];
    for k in 1..n {
        let s: f64 = (1..=k).map(|j| a[j] * out[k - j]).sum();
        out[k] = -s / a[0];
    }
    out
}

fn jet_exp(a: &Jet) -> Jet {
    // y' = a' y, solved coefficientwise.
    let n = a.len();
    let mut out = vec![0.0; n];
    out[0] = a[0].exp();
    for k in 1..n {
        let s: f64 = (1..=k).map(|j| j as f64 * a[j] * out[k - j]).sum();
        out[k] = s / k as f64;
    }
    out
}

/// Unit-peak bump on `[1, 2]` with recorded derivative bounds.
#[derive(Debug, Clone)]
pub struct BumpFunction {
    pub support: (f64, f64),
    /// `bounds[j]` bounds `sup |W^(j)|`, measured on a fine grid.
    pub bounds: Vec<f64>,
    mass: f64,
}

impl BumpFunction {
    /// Builds the bump and certifies derivative bounds up to `j_max`.
    pub fn new(j_max: usize) -> Self {
        let mut b = BumpFunction {
            support: (1.0, 2.0),
            bounds: Vec::new(),
            mass: 0.0,
        };
        let grid = 4000;
        let mut bounds = vec![0.0f64; j_max + 1];
        for i in 1..grid {
            let x = 1.0 + i as f64 / grid as f64;
            let jet = b.jet(x, j_max);
            let mut fact = 1.0;
            for (j, c) in jet.iter().enumerate() {
                if j > 0 {
                    fact *= j as f64;
                }
                bounds[j] = bounds[j].max((c * fact).abs());
            }
        }
        b.bounds = bounds;
        b.mass = adaptive_real(|x| b.eval(x, 0), 1.0, 2.0, AdaptiveOptions::default())
            .expect("bump integrates")
            .0;
        b
    }

    /// Taylor coefficients of W at `x` up to `order`; zero outside `(1, 2)`.
    pub fn jet(&self, x: f64, order: usize) -> Jet {
        let n = order + 1;
        if x <= 1.0 || x >= 2.0 {
            return vec![0.0; n];
        }
        let mut u = vec![0.0; n];
        u[0] = (x - 1.0) * (2.0 - x);
        if n > 1 {
            u[1] = 3.0 - 2.0 * x;
        }
        if n > 2 {
            u[2] = -1.0;
        }
        if u[0] < 1e-300 {
            return vec![0.0; n];
        }
        let mut phase: Jet = jet_recip(&u).iter().map(|c| -c).collect();
        phase[0] += 4.0;
        if phase[0] < -745.0 {
            return vec![0.0; n];
        }
        jet_exp(&phase)
    }

    /// `W^(deriv)(x)`.
    pub fn eval(&self, x: f64, deriv: usize) -> f64 {
        let jet = self.jet(x, deriv);
        let fact: f64 = (1..=deriv).map(|k| k as f64).product();
        jet[deriv] * fact
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn bound(&self, j: usize) -> Option<f64> {
        self.bounds.get(j).copied()
    }
}

impl Default for BumpFunction {
    fn default() -> Self {
        BumpFunction::new(4)
    }
}

/// `W(x)` without constructing a [`BumpFunction`].
#[inline]
pub fn bump(x: f64) -> f64 {
    if x <= 1.0 || x >= 2.0 {
        return 0.0;
    }
    let u = (x - 1.0) * (2.0 - x);
    let t = 4.0 - 1.0 / u;
    if t < -745.0 {
        0.0
    } else {
        t.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn support_and_peak() {
        let w = BumpFunction::default();
        assert_eq!(w.eval(0.5, 0), 0.0);
        assert_eq!(w.eval(3.0, 0), 0.0);
        assert_eq!(w.eval(1.0, 2), 0.0);
        assert!((w.eval(1.5, 0) - 1.0).abs() < 1e-15);
        assert!(w.eval(1.5, 1).abs() < 1e-14);
        assert!(w.mass() > 0.0 && w.mass() < 1.0);
        assert_eq!(w.bounds[0], 1.0);
    }

    #[test]
    fn jets_match_finite_differences() {
        let w = BumpFunction::default();
        let h = 1e-5;
        for &x in &[1.2, 1.37, 1.5, 1.81] {
            for j in 0..3 {
                let fd = (w.eval(x + h, j) - w.eval(x - h, j)) / (2.0 * h);
                let exact = w.eval(x, j + 1);
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "x={x} j={j}");
            }
        }
    }

    #[test]
    fn fast_path_agrees() {
        let w = BumpFunction::new(0);
        for i in 0..=40 {
            let x = 0.9 + i as f64 * 0.03;
            assert!((w.eval(x, 0) - bump(x)).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn derivatives_respect_certificate(x in 1.0f64..2.0) {
            let w = BumpFunction::new(3);
            for j in 0..=3 {
                prop_assert!(w.eval(x, j).abs() <= w.bound(j).unwrap() * 1.01 + 1e-12);
            }
        }
    }
}
