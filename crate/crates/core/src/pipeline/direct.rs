//! The smoothed twisted sum `S(N) = sum lambda(n) chi(n) W(n/N)` and scans of it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::characters::DirichletCharacter;
use crate::error::Result;
use crate::forms::FormTable;
use crate::oscillatory::bump::bump;
use crate::sum::{ComplexSum, KahanSum};

/// `S(N)` together with the triangle-inequality bound `sum |lambda(n)| W(n/N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectSum {
    pub n_scale: f64,
    pub value: Complex64,
    pub trivial: f64,
}

/// Integers `n` with `W(n/N) != 0`.
fn support(n_scale: f64) -> (u64, u64) {
    let lo = n_scale.floor() as u64 + 1;
    let hi = (2.0 * n_scale).ceil() as u64 - 1;
    (lo, hi.max(lo.saturating_sub(1)))
}

pub fn direct_s(n_scale: f64, chi: &DirichletCharacter, form: &FormTable) -> Result<DirectSum> {
    let (lo, hi) = support(n_scale);
    form.require(hi)?;
    let mut s = ComplexSum::new();
    let mut t = KahanSum::new();
    for n in lo..=hi {
        let w = bump(n as f64 / n_scale);
        if w == 0.0 {
            continue;
        }
        let l = form.lambda(n)?;
        s.add(chi.eval_complex_u64(n) * (l * w));
        t.add(l.abs() * w);
    }
    Ok(DirectSum {
        n_scale,
        value: s.value(),
        trivial: t.value(),
    })
}

/// One row of [`cancellation_scan`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanRow {
    pub n_scale: f64,
    pub abs_s: f64,
    pub trivial: f64,
    pub ratio: f64,
    /// `N^(5/9) p^(13 r / 45)`.
    pub predicted: f64,
    /// `|S| / sqrt(N)`, the square-root cancellation heuristic.
    pub sqrt_ratio: f64,
    pub in_window: bool,
}

/// `|S(N)|` against the trivial bound and the predicted size on a grid of `N`.
///
/// Rows come back in grid order whatever the thread count.
pub fn cancellation_scan(
    p: u64,
    r: u32,
    grid: &[f64],
    chi: &DirichletCharacter,
    form: &FormTable,
) -> Result<Vec<ScanRow>> {
    let pf = p as f64;
    let rf = r as f64;
    let lo = pf.powf(13.0 * rf / 20.0);
    let hi = pf.powf(4.0 * rf / 5.0);
    grid.par_iter()
        .map(|&n| {
            let d = direct_s(n, chi, form)?;
            let abs_s = d.value.norm();
            Ok(ScanRow {
                n_scale: n,
                abs_s,
                trivial: d.trivial,
                ratio: abs_s / d.trivial,
                predicted: n.powf(5.0 / 9.0) * pf.powf(13.0 * rf / 45.0),
                sqrt_ratio: abs_s / n.sqrt(),
                in_window: lo <= n && n <= hi,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::make_character;
    use crate::forms::build_delta_table;

    #[test]
    fn support_and_triangle_inequality() {
        let chi = make_character(7, 5, 1).unwrap();
        let form = build_delta_table(1400).unwrap();
        let n = 686.0;
        let d = direct_s(n, &chi, &form).unwrap();
        assert!(d.value.norm() <= d.trivial);
        // W vanishes at the endpoints, so the literal sum over all n agrees.
        let all: Complex64 = (1..=1400u64)
            .map(|m| chi.eval_complex_u64(m) * form.lambda(m).unwrap() * bump(m as f64 / n))
            .sum();
        assert!((all - d.value).norm() < 1e-10);
        assert!(direct_s(800.0, &chi, &form).is_err());
    }

    #[test]
    fn scan_is_ordered_and_flags_the_window() {
        let chi = make_character(5, 3, 1).unwrap();
        let form = build_delta_table(400).unwrap();
        let rows = cancellation_scan(5, 3, &[50.0, 120.0, 180.0], &chi, &form).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].n_scale, 120.0);
        for row in &rows {
            assert!(row.ratio < 1.0);
        }
        // window [5^1.95, 5^2.4] = [23.0, 47.6]
        assert!(rows.iter().all(|r| !r.in_window));
    }
}
