//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used as the independent oracle for the special-function routes: every
//! exact evaluator in [`crate::geometry`] has a counterpart here that
//! integrates the density directly.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 0.0,
            rel: 1e-12,
            max_depth: 60,
        }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrates `f` over the finite interval `[a, b]`.
///
/// Global adaptive bisection: the interval with the largest error estimate is
/// split until the summed estimate meets `max(abs, rel * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("interval", format!("[{a}, {b}] must be finite")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = kronrod(&f, a, b);
    // (error, value, lo, hi, depth)
    let mut pieces: Vec<(f64, f64, f64, f64, u32)> = vec![(e, v, a, b, 0)];
    let max_pieces = 1 << 16;
    loop {
        let total: f64 = pieces.iter().map(|p| p.1).sum();
        let err: f64 = pieces.iter().map(|p| p.0).sum();
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        let (idx, worst) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, p)| (i, *p))
            .expect("nonempty");
        if worst.4 >= tol.max_depth || pieces.len() >= max_pieces {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: format!("estimate {total:e} with error {err:e} on [{a}, {b}]"),
            });
        }
        let mid = 0.5 * (worst.2 + worst.3);
        let (lv, le) = kronrod(&f, worst.2, mid);
        let (rv, re) = kronrod(&f, mid, worst.3);
        pieces[idx] = (le, lv, worst.2, mid, worst.4 + 1);
        pieces.push((re, rv, mid, worst.3, worst.4 + 1));
    }
}
