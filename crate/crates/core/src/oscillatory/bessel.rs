//! Bessel functions `J_nu` of integer order and their Hankel envelopes.
//!
//! `J_nu(x) = x^(-1/2) (W_+(x) e^(ix) + W_-(x) e^(-ix))` with `W_- = conj(W_+)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::oscillatory::quadrature::{adaptive, AdaptiveOptions};
use crate::sum::KahanSum;

/// Below this argument `J` is summed from its power series.
pub const SERIES_LIMIT: f64 = 12.0;
/// From this argument on the envelope uses the Hankel expansion.
pub const ASYMPTOTIC_LIMIT: f64 = 20.0;

fn series(nu: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(nu as i32) / (1..=nu).map(|k| k as f64).product::<f64>();
    let mut s = KahanSum::new();
    let q = -half * half;
    for k in 0..200u32 {
        s.add(term);
        let next = term * q / ((k + 1) as f64 * (k + 1 + nu) as f64);
        if next.abs() < 1e-18 * s.value().abs().max(1e-300) && k > 2 {
            break;
        }
        term = next;
    }
    s.value()
}

fn gamma_half_integer(nu: u32) -> f64 {
    // Gamma(nu + 1/2) = sqrt(pi) prod_{j=1}^{nu} (j - 1/2)
    PI.sqrt() * (1..=nu).map(|j| j as f64 - 0.5).product::<f64>()
}

fn prefactor(nu: u32) -> Complex64 {
    let theta = -(nu as f64 * FRAC_PI_2 + FRAC_PI_4);
    Complex64::from_polar(0.5 * (2.0 / PI).sqrt(), theta)
}

fn envelope_integral(nu: u32, x: f64) -> Complex64 {
    let a = nu as f64 - 0.5;
    let f = |u: f64| {
        if u <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let base = Complex64::new(1.0, u / (2.0 * x));
        base.powf(a) * ((-u).exp() * u.powf(a))
    };
    let upper = 150.0 + 4.0 * nu as f64;
    let v = adaptive(
        f,
        0.0,
        upper,
        AdaptiveOptions {
            abs_tol: 0.0,
            rel_tol: 1e-14,
            max_width: 4.0,
            max_panels: 100_000,
        },
    )
    .expect("envelope integrand is smooth");
    prefactor(nu) * v.value / gamma_half_integer(nu)
}

fn envelope_asymptotic(nu: u32, x: f64) -> Complex64 {
    let mu = 4.0 * (nu as f64).powi(2);
    let mut s = Complex64::new(1.0, 0.0);
    let mut a = 1.0;
    let mut ik = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..400usize {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        ik *= Complex64::i();
        // Terms may grow at first; once past the order they shrink until the
        // series starts to diverge, which is where it is cut.
        if k > nu as usize + 1 && a.abs() >= last {
            break;
        }
        s += ik * a;
        if a.abs() < 1e-18 {
            break;
        }
        last = a.abs();
    }
    prefactor(nu) * s
}

/// The envelope `W_+(x)` (`W_-` is its conjugate), for `x > 0`.
pub fn envelope(nu: u32, x: f64) -> Complex64 {
    assert!(x > 0.0, "envelope needs a positive argument");
    if x >= ASYMPTOTIC_LIMIT {
        envelope_asymptotic(nu, x)
    } else {
        envelope_integral(nu, x)
    }
}

/// `W_{k, eps}(x)` for `eps = +1` or `-1`.
pub fn envelope_signed(nu: u32, eps: i8, x: f64) -> Complex64 {
    let w = envelope(nu, x);
    if eps >= 0 {
        w
    } else {
        w.conj()
    }
}

/// `J_nu(x)` for `x >= 0`.
pub fn bessel_j(nu: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_j needs x >= 0");
    if x == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        return series(nu, x);
    }
    2.0 * (envelope(nu, x) * Complex64::from_polar(1.0, x)).re / x.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with an independent library.
    const J: [(f64, f64, f64, f64); 15] = [
        (0.5, 5.941853962232466e-15, 2.613177360822802e-13, 1.2383825594799363e-16),
        (1.0, 1.1980067463031371e-11, 2.630615123687454e-10, 4.999718179448425e-13),
        (3.0, 1.7939896623474445e-06, 1.2928351645715883e-05, 2.275725448320573e-07),
        (5.0, 0.0003509274497662085, 0.0014678026473104737, 7.627813166084565e-05),
        (8.0, 0.025596672213248288, 0.060767026774251165, 0.009623821812181629),
        (11.0, 0.20101400990926943, 0.2804282305253759, 0.12159978929316298),
        (12.0, 0.27041248255096434, 0.3004760352712692, 0.19528018273883216),
        (15.0, 0.09995047705030162, -0.09007181104765903, 0.2366658440547681),
        (20.0, 0.06135630337595081, 0.1864825580239451, -0.1189906243103992),
        (22.0, 0.1641254230013448, 0.007546670638032041, 0.1565787523633128),
        (25.0, -0.16823599003225692, -0.07517984394852324, -0.0728678272798629),
        (30.0, 0.02505880513782451, -0.1298768939985887, 0.14825335109966004),
        (50.0, -0.018346678615815244, -0.11384784914946938, 0.10577531055851067),
        (100.0, 0.05229032601893648, -0.05473217693547202, 0.06623604865963803),
        (1000.0, -0.006206171618102461, -0.024520622306036556, 0.024384086530438304),
    ];

    #[test]
    fn frozen_values() {
        for &(x, j11, j10, j12) in &J {
            assert!((bessel_j(11, x) - j11).abs() < 1e-10, "J11({x})");
            assert!((bessel_j(10, x) - j10).abs() < 1e-10, "J10({x})");
            assert!((bessel_j(12, x) - j12).abs() < 1e-10, "J12({x})");
        }
        assert_eq!(bessel_j(11, 0.0), 0.0);
    }

    #[test]
    fn recurrence() {
        for x in [5.0, 12.5, 17.0, 21.0, 40.0] {
            let lhs = bessel_j(10, x) + bessel_j(12, x);
            let rhs = 22.0 / x * bessel_j(11, x);
            assert!((lhs - rhs).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn frozen_envelope() {
        let w = [
            (4.0, 642.8844999728094, 555.2537043224913),
            (10.0, 0.2842356483203343, 0.7962160924132565),
            (25.0, -0.41884851022321223, -0.040997976970907735),
            (100.0, 0.07206054393979883, 0.39361371887567587),
        ];
        for (x, re, im) in w {
            let got = envelope(11, x);
            let want = Complex64::new(re, im);
            assert!((got - want).norm() < 1e-9 * want.norm().max(1.0), "x={x}");
        }
    }

    #[test]
    fn envelope_branches_meet_and_reproduce_series() {
        let x = ASYMPTOTIC_LIMIT;
        let a = envelope_asymptotic(11, x);
        let b = envelope_integral(11, x);
        assert!((a - b).norm() < 1e-12);
        for x in [6.0, 9.0, 11.5] {
            let w = envelope(11, x);
            let j = 2.0 * (w * Complex64::from_polar(1.0, x)).re / x.sqrt();
            assert!((j - series(11, x)).abs() < 1e-10, "x={x}");
        }
        for x in [1.0, 5.0, 30.0, 500.0] {
            let w = envelope_signed(11, -1, x);
            assert_eq!(w, envelope(11, x).conj());
            if x > 20.0 {
                assert!((w.norm() - 0.5 * (2.0 / PI).sqrt()).abs() < 0.1);
            }
        }
    }
}
