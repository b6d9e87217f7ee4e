//! Exact numerics for the standard d-dimensional Gaussian: radial law and
//! the Gaussian mass of an arbitrary ball.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};
use crate::special::{inc_gamma_ln, ln_add_exp, ln_factorial, ln_gamma};

/// Ambient dimension, always at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        Ok(Dimension(d))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<u32> for Dimension {
    type Error = Error;
    fn try_from(d: u32) -> Result<Self> {
        Dimension::new(d)
    }
}

impl From<Dimension> for u32 {
    fn from(d: Dimension) -> u32 {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which multiplicative constant accompanies `e^{-r²/2} r^{d-1}` in the
/// radial density.
///
/// `Paper` is `(2π)^{-d/2} / d`, which does not normalize the density (for
/// d = 2 it is 1/(4π) where 1 is needed). `Normalized` is
/// `[2^{d/2-1} Γ(d/2)]^{-1}`. Exact computations use `Normalized`; the
/// other is kept so the printed formulas can be evaluated verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialConstant {
    Paper,
    #[default]
    Normalized,
}

impl RadialConstant {
    pub fn ln_value(self, d: Dimension) -> f64 {
        let df = d.as_f64();
        match self {
            RadialConstant::Paper => -0.5 * df * (2.0 * PI).ln() - df.ln(),
            RadialConstant::Normalized => -((0.5 * df - 1.0) * 2f64.ln() + ln_gamma(0.5 * df)),
        }
    }

    pub fn value(self, d: Dimension) -> f64 {
        self.ln_value(d).exp()
    }

    pub fn name(self) -> &'static str {
        match self {
            RadialConstant::Paper => "paper",
            RadialConstant::Normalized => "normalized",
        }
    }
}

impl std::str::FromStr for RadialConstant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(RadialConstant::Paper),
            "normalized" => Ok(RadialConstant::Normalized),
            other => Err(Error::domain(
                "variant",
                format!("expected `paper` or `normalized`, got `{other}`"),
            )),
        }
    }
}

/// Radial density `A e^{-r²/2} r^{d-1}` with `A` chosen by `variant`.
pub fn radial_pdf(r: f64, d: Dimension, variant: RadialConstant) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain("r", format!("radius must be nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let ln = variant.ln_value(d) - 0.5 * r * r + (d.as_f64() - 1.0) * r.ln();
    Ok(ln.exp())
}

/// ln P[‖X‖ > R].
pub fn ln_radial_tail(radius: f64, d: Dimension) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::domain("R", format!("radius must be nonnegative, got {radius}")));
    }
    Ok(inc_gamma_ln(0.5 * d.as_f64(), 0.5 * radius * radius)?.upper)
}

/// P[‖X‖ > R] = Q(d/2, R²/2).
pub fn radial_tail(radius: f64, d: Dimension) -> Result<f64> {
    Ok(ln_radial_tail(radius, d)?.exp())
}

/// ln P[‖X‖ ≤ R] = ln P(d/2, R²/2).
pub fn ln_radial_cdf(radius: f64, d: Dimension) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::domain("R", format!("radius must be nonnegative, got {radius}")));
    }
    Ok(inc_gamma_ln(0.5 * d.as_f64(), 0.5 * radius * radius)?.lower)
}

/// Terms below `max * e^-TERM_CUTOFF` are dropped once the remaining tail
/// bound falls below it too.
const TERM_CUTOFF: f64 = 40.0;
const MAX_TERMS: u64 = 10_000_000;

/// ln I(ρ, r): the log of the standard-Gaussian mass of a ball of radius `r`
/// whose center lies at distance `rho` from the origin.
///
/// Evaluated as the noncentral chi-square distribution function of `r²`
/// with `d` degrees of freedom and noncentrality `ρ²`:
/// `Σ_j Pois(j; ρ²/2) · P(d/2 + j, r²/2)`, summed entirely in the log domain
/// outward from the largest term. The summand is log-concave in `j`, so the
/// remainder after a decreasing term with ratio `q` is at most `t q/(1-q)`.
pub fn ln_ball_mass(rho: f64, r: f64, d: Dimension) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::domain("rho", format!("center distance must be finite and nonnegative, got {rho}")));
    }
    if !(r > 0.0) {
        return Err(Error::domain("r", format!("ball radius must be positive, got {r}")));
    }
    if r == f64::INFINITY {
        return Ok(0.0);
    }
    let shape = 0.5 * d.as_f64();
    let x = 0.5 * r * r;
    let mu = 0.5 * rho * rho;
    if mu == 0.0 {
        return Ok(inc_gamma_ln(shape, x)?.lower);
    }
    let ln_mu = mu.ln();
    let term = |j: u64| -> Result<f64> {
        let jf = j as f64;
        Ok(-mu + jf * ln_mu - ln_factorial(j) + inc_gamma_ln(shape + jf, x)?.lower)
    };

    // integer ternary search for the mode
    let mut lo = 0u64;
    let mut hi = (mu + 40.0 * mu.sqrt() + 40.0).ceil() as u64;
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if term(m1)? < term(m2)? {
            lo = m1 + 1;
        } else {
            hi = m2;
        }
    }
    let mut mode = lo;
    let mut best = term(lo)?;
    for j in lo + 1..=hi {
        let t = term(j)?;
        if t > best {
            best = t;
            mode = j;
        }
    }
    if best == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }

    let mut sum = best;
    // upward
    let mut prev = best;
    let mut j = mode;
    loop {
        j += 1;
        if j - mode > MAX_TERMS {
            return Err(Error::NonConvergence {
                what: "ball mass series",
                detail: format!("rho={rho}, r={r}, d={d}"),
            });
        }
        let t = term(j)?;
        sum = ln_add_exp(sum, t);
        if t < prev && tail_negligible(t, prev, sum) {
            break;
        }
        prev = t;
    }
    // downward
    let mut prev = best;
    let mut j = mode;
    while j > 0 {
        j -= 1;
        let t = term(j)?;
        sum = ln_add_exp(sum, t);
        if t < prev && tail_negligible(t, prev, sum) {
            break;
        }
        prev = t;
    }
    if !sum.is_finite() && sum != f64::NEG_INFINITY {
        return Err(Error::NonConvergence {
            what: "ball mass series",
            detail: format!("non-finite sum for rho={rho}, r={r}, d={d}"),
        });
    }
    Ok(sum.min(0.0))
}

fn tail_negligible(t: f64, prev: f64, ln_sum: f64) -> bool {
    let ln_q = t - prev;
    // ln(q / (1 - q))
    let ln_geom = ln_q - crate::special::ln_one_minus_exp(ln_q);
    t + ln_geom < ln_sum - TERM_CUTOFF
}

/// I(ρ, r) as a probability. Values below `f64::MIN_POSITIVE` flush to 0;
/// use [`ln_ball_mass`] in that regime.
pub fn ball_mass(rho: f64, r: f64, d: Dimension) -> Result<f64> {
    Ok(ln_ball_mass(rho, r, d)?.exp())
}

/// I(ρ, r) by one-dimensional quadrature along the axis through the center:
/// `∫ φ₁(s) P[χ²_{d-1} ≤ r² − (s−ρ)²] ds` over `s ∈ [ρ−r, ρ+r]`.
///
/// An independent route to [`ball_mass`]; accurate while the mass is well
/// above the underflow threshold.
pub fn ball_mass_by_quadrature(rho: f64, r: f64, d: Dimension) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::domain("rho", format!("center distance must be nonnegative, got {rho}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("r", format!("ball radius must be positive and finite, got {r}")));
    }
    let transverse = 0.5 * (d.as_f64() - 1.0);
    let norm = (2.0 * PI).sqrt().recip();
    let f = |s: f64| {
        let w = r * r - (s - rho) * (s - rho);
        if w <= 0.0 {
            return 0.0;
        }
        let p = inc_gamma_ln(transverse, 0.5 * w).map(|g| g.lower.exp()).unwrap_or(f64::NAN);
        norm * (-0.5 * s * s).exp() * p
    };
    // the integrand has a kink at s = ρ (peak of the chord) and is
    // negligible beyond |s| ≈ 40
    let lo = (rho - r).max(-40.0);
    let hi = (rho + r).min(40.0);
    if lo >= hi {
        return Ok(0.0);
    }
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-13,
        max_depth: 60,
    };
    let mid = rho.clamp(lo, hi);
    Ok(quadrature::integrate(f, lo, mid, tol)? + quadrature::integrate(f, mid, hi, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: u32) -> Dimension {
        Dimension::new(d).unwrap()
    }

    #[test]
    fn dimension_rejects_small() {
        assert_eq!(Dimension::new(1), Err(Error::Dimension(1)));
        assert!(Dimension::new(0).is_err());
        assert_eq!(Dimension::new(2).unwrap().get(), 2);
    }

    #[test]
    fn radial_pdf_examples() {
        assert_eq!(radial_pdf(0.0, dim(2), RadialConstant::Normalized).unwrap(), 0.0);
        let v = radial_pdf(1.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        let v = radial_pdf(1.0, dim(2), RadialConstant::Paper).unwrap();
        assert!((v - (-0.5f64).exp() / (4.0 * PI)).abs() < 1e-16);
        assert!((v - 0.048_266).abs() < 5e-7);
        assert!(radial_pdf(-1.0, dim(2), RadialConstant::Paper).is_err());
    }

    #[test]
    fn constants() {
        assert!((RadialConstant::Normalized.value(dim(2)) - 1.0).abs() < 1e-15);
        // d = 3: sqrt(2/π)
        assert!((RadialConstant::Normalized.value(dim(3)) - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!((RadialConstant::Paper.value(dim(3)) - (2.0 * PI).powf(-1.5) / 3.0).abs() < 1e-16);
    }

    #[test]
    fn radial_tail_examples() {
        assert_eq!(radial_tail(0.0, dim(5)).unwrap(), 1.0);
        let v = radial_tail(2.0, dim(2)).unwrap();
        assert!(((v - (-2f64).exp()) / v).abs() < 1e-14);
        assert!((v - 0.135_335_3).abs() < 1e-7);
    }

    #[test]
    fn ball_mass_centered() {
        let v = ball_mass(0.0, 1.0, dim(2)).unwrap();
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((v - 0.393_469).abs() < 1e-6);
        assert_eq!(ball_mass(0.0, f64::INFINITY, dim(3)).unwrap(), 1.0);
        assert_eq!(ball_mass(7.0, f64::INFINITY, dim(3)).unwrap(), 1.0);
    }

    #[test]
    fn ball_mass_domain() {
        assert!(ball_mass(1.0, 0.0, dim(2)).is_err());
        assert!(ball_mass(-1.0, 1.0, dim(2)).is_err());
        assert!(ball_mass(f64::NAN, 1.0, dim(2)).is_err());
    }

    #[test]
    fn ball_mass_matches_quadrature() {
        for d in [2, 3, 5, 10] {
            for &rho in &[0.0, 0.3, 1.0, 2.5, 5.0, 8.0] {
                for &r in &[0.05, 0.5, 1.0, 3.0, 9.0] {
                    let a = ball_mass(rho, r, dim(d)).unwrap();
                    let b = ball_mass_by_quadrature(rho, r, dim(d)).unwrap();
                    if b < 1e-280 {
                        continue;
                    }
                    assert!(((a - b) / b).abs() < 1e-9, "d={d} rho={rho} r={r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn consistency_with_tail() {
        for d in [2, 3, 7] {
            for &big_r in &[0.1, 1.0, 2.0, 4.0, 6.0] {
                let t = radial_tail(big_r, dim(d)).unwrap();
                let m = ball_mass(0.0, big_r, dim(d)).unwrap();
                assert!((t - (1.0 - m)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deep_tail_mass_is_log_finite() {
        let ln = ln_ball_mass(40.0, 0.25, dim(2)).unwrap();
        assert!(ln.is_finite());
        assert!(ln < -700.0 && ln > -800.0, "{ln}");
    }
}
