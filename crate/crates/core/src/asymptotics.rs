//! Closed-form evaluators for the growth radii, ball-mass asymptotics and
//! Borel–Cantelli series terms, each paired with the exact value from
//! [`crate::geometry`] where one exists.
//!
//! Sample sizes are taken as `f64` so that non-integer arguments such as
//! `n = e^e` and huge subsequence points `a^m` can be evaluated; the `*_ln`
//! variants take `ln n` directly.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::geometry::{ln_ball_mass, Dimension, RadialConstant};
use crate::special::ln_sub_exp;

/// Exponent used in the large-ρ ball-mass asymptotic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentVariant {
    /// `exp(ρr − ρ²)`, as printed.
    AsPrinted,
    /// `exp(ρr − ρ²/2)`, the correct Laplace asymptotic.
    HalfRhoSq,
}

impl std::str::FromStr for ExponentVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_printed" => Ok(ExponentVariant::AsPrinted),
            "half_rho_sq" => Ok(ExponentVariant::HalfRhoSq),
            other => Err(Error::domain(
                "exponent_variant",
                format!("expected `as_printed` or `half_rho_sq`, got `{other}`"),
            )),
        }
    }
}

/// Scalar knobs shared by the formulas.
///
/// `c` is the containment exponent, `t` the threshold scale, `u` the outer
/// and `eps` the inner ball scale, `a > 1` the subsequence base. `fm_const`
/// and `final_const` stand for the unspecified constants C and C₂ of the
/// vacancy and final series bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulaParams {
    pub d: Dimension,
    pub c: f64,
    pub t: f64,
    pub u: f64,
    pub eps: f64,
    pub a: f64,
    pub constant: RadialConstant,
    pub fm_const: f64,
    pub final_const: f64,
}

impl FormulaParams {
    pub fn new(d: Dimension) -> Self {
        FormulaParams {
            d,
            c: 2.5,
            t: 1.0,
            u: 1.0,
            eps: 0.1,
            a: 2.0,
            constant: RadialConstant::Normalized,
            fm_const: 1.0,
            final_const: 1.0,
        }
    }

    /// `(2d + c − 2) / (2√2)`, the critical outer scale.
    pub fn u_threshold(&self) -> f64 {
        (2.0 * self.d.as_f64() + self.c - 2.0) / (2.0 * SQRT_2)
    }

    /// Upper-envelope regime: threshold < u < t and eps + u < t.
    pub fn check_upper_regime(&self) -> Result<()> {
        let th = self.u_threshold();
        if !(th < self.u && self.u < self.t) {
            return Err(Error::domain(
                "u",
                format!("upper regime needs {th} < u < t, got u={}, t={}", self.u, self.t),
            ));
        }
        if !(self.eps > 0.0 && self.eps + self.u < self.t) {
            return Err(Error::domain(
                "eps",
                format!("upper regime needs eps > 0 and eps + u < t, got eps={}", self.eps),
            ));
        }
        Ok(())
    }

    /// Lower-envelope regime: threshold > u > t and eps + t < u.
    pub fn check_lower_regime(&self) -> Result<()> {
        let th = self.u_threshold();
        if !(th > self.u && self.u > self.t) {
            return Err(Error::domain(
                "u",
                format!("lower regime needs {th} > u > t, got u={}, t={}", self.u, self.t),
            ));
        }
        if !(self.eps > 0.0 && self.eps + self.t < self.u) {
            return Err(Error::domain(
                "eps",
                format!("lower regime needs eps > 0 and eps + t < u, got eps={}", self.eps),
            ));
        }
        Ok(())
    }

    fn check_subsequence_base(&self) -> Result<()> {
        if !(self.a > 1.0) || !self.a.is_finite() {
            return Err(Error::domain("a", format!("subsequence base must exceed 1, got {}", self.a)));
        }
        Ok(())
    }
}

/// The three radii at a given n: R_n(c), R'_n = R_n(−2) and r_n(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthScales {
    pub n: f64,
    pub big: f64,
    pub big_prime: f64,
    pub small: f64,
}

impl GrowthScales {
    pub fn new(n: f64, params: &FormulaParams) -> Result<Self> {
        Ok(GrowthScales {
            n,
            big: big_radius(n, params.c, params.d, params.constant)?,
            big_prime: big_radius(n, -2.0, params.d, params.constant)?,
            small: small_radius(n, params.t)?,
        })
    }
}

fn ln_of_n(n: f64, min: f64, name: &'static str) -> Result<f64> {
    if !(n >= min) || !n.is_finite() {
        return Err(Error::domain(name, format!("need n >= {min}, got {n}")));
    }
    Ok(n.ln())
}

/// R_n(c) = √(2 ln n + (c + d − 2) ln ln n + 2 ln A).
pub fn big_radius(n: f64, c: f64, d: Dimension, variant: RadialConstant) -> Result<f64> {
    let ln_n = ln_of_n(n, 3.0, "n")?;
    big_radius_ln(ln_n, c, d, variant).map_err(|e| match e {
        Error::Domain { name, detail } => Error::Domain {
            name,
            detail: format!("{detail} (n = {n})"),
        },
        other => other,
    })
}

/// [`big_radius`] with `ln n` supplied directly.
pub fn big_radius_ln(ln_n: f64, c: f64, d: Dimension, variant: RadialConstant) -> Result<f64> {
    if !(ln_n > 0.0) {
        return Err(Error::domain("n", format!("need ln n > 0, got {ln_n}")));
    }
    let radicand = 2.0 * ln_n + (c + d.as_f64() - 2.0) * ln_n.ln() + 2.0 * variant.ln_value(d);
    if !(radicand > 0.0) {
        return Err(Error::domain(
            "n",
            format!("radicand {radicand} of R_n(c) is not positive at ln n = {ln_n}, c = {c}"),
        ));
    }
    Ok(radicand.sqrt())
}

/// r_n(t) = t ln ln n / √(ln n).
pub fn small_radius(n: f64, t: f64) -> Result<f64> {
    if !(n > std::f64::consts::E) || !n.is_finite() {
        return Err(Error::domain("n", format!("r_n(t) needs ln ln n > 0, got n = {n}")));
    }
    small_radius_ln(n.ln(), t)
}

/// [`small_radius`] with `ln n` supplied directly.
pub fn small_radius_ln(ln_n: f64, t: f64) -> Result<f64> {
    if !(ln_n > 1.0) {
        return Err(Error::domain("n", format!("r_n(t) needs ln n > 1, got {ln_n}")));
    }
    if !(t >= 0.0) {
        return Err(Error::domain("t", format!("scale must be nonnegative, got {t}")));
    }
    Ok(t * ln_n.ln() / ln_n.sqrt())
}

fn ln_ball_mass_asym_raw(rho: f64, r: f64, d: f64, variant: ExponentVariant) -> f64 {
    let e = match variant {
        ExponentVariant::AsPrinted => rho * rho,
        ExponentVariant::HalfRhoSq => 0.5 * rho * rho,
    };
    -0.5 * (2.0 * PI).ln() + d * r.ln() + rho * r - e - 0.5 * (d + 1.0) * (rho * r).ln()
}

/// ln of `(2π)^{-1/2} r^d exp(ρr − E) (ρr)^{-(d+1)/2}`.
pub fn ln_ball_mass_asym(rho: f64, r: f64, d: Dimension, variant: ExponentVariant) -> Result<f64> {
    if !(rho > 0.0) || !(r > 0.0) {
        return Err(Error::domain("rho, r", format!("both must be positive, got rho={rho}, r={r}")));
    }
    Ok(ln_ball_mass_asym_raw(rho, r, d.as_f64(), variant))
}

/// Large-ρ, small-r asymptotic for the ball mass I(ρ, r).
pub fn ball_mass_asym(rho: f64, r: f64, d: Dimension, variant: ExponentVariant) -> Result<f64> {
    Ok(ln_ball_mass_asym(rho, r, d, variant)?.exp())
}

/// ln(asymptotic / exact) for the ball mass, computed in the log domain.
pub fn ball_mass_log_ratio(rho: f64, r: f64, d: Dimension, variant: ExponentVariant) -> Result<f64> {
    Ok(ln_ball_mass_asym(rho, r, d, variant)? - ln_ball_mass(rho, r, d)?)
}

/// ln of `A R^{d−2} e^{−R²/2}`.
pub fn ln_tail_asym(radius: f64, d: Dimension, variant: RadialConstant) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain("R", format!("radius must be positive, got {radius}")));
    }
    Ok(variant.ln_value(d) + (d.as_f64() - 2.0) * radius.ln() - 0.5 * radius * radius)
}

/// Radial tail asymptotic `A R^{d−2} e^{−R²/2}`.
pub fn tail_asym(radius: f64, d: Dimension, variant: RadialConstant) -> Result<f64> {
    Ok(ln_tail_asym(radius, d, variant)?.exp())
}

/// Asymptotic probability that some point of `X_n` escapes `B(0, R_n(c))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectAsym {
    /// `n A R^{d−2} e^{−R²/2}` at `R = R_n(c)`.
    pub full: f64,
    /// `2^{(d−2)/2} (ln n)^{−c/2}`.
    pub leading: f64,
    /// `n A e^{−R²/2} (ln n)^{(c+d−2)/2}`; identically 1 because A cancels.
    pub cancelled_prefactor: f64,
}

pub fn containment_defect_asym(
    n: f64,
    c: f64,
    d: Dimension,
    variant: RadialConstant,
) -> Result<DefectAsym> {
    let radius = big_radius(n, c, d, variant)?;
    let ln_n = n.ln();
    let df = d.as_f64();
    let full = (ln_n + ln_tail_asym(radius, d, variant)?).exp();
    let leading = (0.5 * (df - 2.0) * LN_2 - 0.5 * c * ln_n.ln()).exp();
    let cancelled_prefactor = (ln_n + variant.ln_value(d) - 0.5 * radius * radius
        + 0.5 * (c + df - 2.0) * ln_n.ln())
    .exp();
    Ok(DefectAsym {
        full,
        leading,
        cancelled_prefactor,
    })
}

/// Block probability bound along `n_k = a^k` and its model `k^{−c/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceRate {
    pub k: u32,
    /// `A n_{k+1} R_{n_k}(c)^{d−2} e^{−R_{n_k}(c)²/2}`.
    pub full: f64,
    pub model: f64,
}

impl SubsequenceRate {
    pub fn ratio(&self) -> f64 {
        self.full / self.model
    }
}

pub fn subsequence_rate(
    k: u32,
    a: f64,
    c: f64,
    d: Dimension,
    variant: RadialConstant,
) -> Result<SubsequenceRate> {
    if !(a > 1.0) {
        return Err(Error::domain("a", format!("subsequence base must exceed 1, got {a}")));
    }
    let ln_nk = k as f64 * a.ln();
    if ln_nk < 3f64.ln() {
        return Err(Error::domain("k", format!("a^k must be at least 3, got a={a}, k={k}")));
    }
    let radius = big_radius_ln(ln_nk, c, d, variant)?;
    let ln_full = ln_nk + a.ln() + ln_tail_asym(radius, d, variant)?;
    let model = (-0.5 * c * (k as f64).ln()).exp();
    Ok(SubsequenceRate {
        k,
        full: ln_full.exp(),
        model,
    })
}

/// Covering-number bound `(m / ln m)^d`.
pub fn covering_count_bound(m: f64, d: Dimension) -> Result<f64> {
    if !(m >= 2.0) {
        return Err(Error::domain("m", format!("need m >= 2, got {m}")));
    }
    Ok((m / m.ln()).powf(d.as_f64()))
}

/// The two forms of the packing-number lower bound on the annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingBound {
    /// `(R_n(c)^d − R'_n^d) / r_n(u)^d`.
    pub ratio_form: f64,
    /// `(ln n / ln ln n)^{d−1}`.
    pub simplified: f64,
}

impl PackingBound {
    pub fn quotient(&self) -> f64 {
        self.ratio_form / self.simplified
    }
}

pub fn packing_count_bound(
    n: f64,
    c: f64,
    u: f64,
    d: Dimension,
    variant: RadialConstant,
) -> Result<PackingBound> {
    let df = d.as_f64();
    let outer = big_radius(n, c, d, variant)?;
    let inner = big_radius(n, -2.0, d, variant)?;
    let r = small_radius(n, u)?;
    let ln_n = n.ln();
    Ok(PackingBound {
        ratio_form: (outer.powf(df) - inner.powf(df)) / r.powf(df),
        simplified: (ln_n / ln_n.ln()).powf(df - 1.0),
    })
}

/// Annulus hitting probability q_m, as logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusProb {
    pub m: u32,
    /// ln[I(R_{ν(m+1)}(c), r_{ν(m)}(u)) − I(R_{ν(m+1)}(c), r_{ν(m)}(ε))]; −∞ when u = ε.
    pub ln_exact: f64,
    /// ln[(ln m)^{(d−1)/2} / (a^{m+1} m^{d + c/2 − 1 − u√2})].
    pub ln_model: f64,
}

impl AnnulusProb {
    /// The exact difference as a probability; signals when it is not
    /// representable as a normal or subnormal `f64`.
    pub fn exact(&self) -> Result<f64> {
        if self.ln_exact == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let v = self.ln_exact.exp();
        if v == 0.0 {
            return Err(Error::Underflow {
                what: "annulus probability q_m",
                ln_value: self.ln_exact,
            });
        }
        Ok(v)
    }

    pub fn model(&self) -> f64 {
        self.ln_model.exp()
    }

    pub fn ln_ratio(&self) -> f64 {
        self.ln_exact - self.ln_model
    }
}

/// Exponent of m in the q_m model: `d + c/2 − 1 − u√2`.
pub fn qm_exponent(params: &FormulaParams) -> f64 {
    params.d.as_f64() + 0.5 * params.c - 1.0 - params.u * SQRT_2
}

pub fn annulus_prob_qm(m: u32, params: &FormulaParams) -> Result<AnnulusProb> {
    params.check_subsequence_base()?;
    if m < 2 {
        return Err(Error::domain("m", format!("need m >= 2, got {m}")));
    }
    if params.u < params.eps || params.eps <= 0.0 {
        return Err(Error::domain(
            "u, eps",
            format!("need u >= eps > 0, got u={}, eps={}", params.u, params.eps),
        ));
    }
    let d = params.d;
    let ln_a = params.a.ln();
    let ln_nu = m as f64 * ln_a;
    let rho = big_radius_ln(ln_nu + ln_a, params.c, d, params.constant)?;
    let ln_exact = if params.u == params.eps {
        f64::NEG_INFINITY
    } else {
        let outer = ln_ball_mass(rho, small_radius_ln(ln_nu, params.u)?, d)?;
        let inner = ln_ball_mass(rho, small_radius_ln(ln_nu, params.eps)?, d)?;
        let diff = ln_sub_exp(outer, inner);
        if !diff.is_finite() {
            return Err(Error::Underflow {
                what: "annulus probability q_m (cancellation)",
                ln_value: diff,
            });
        }
        diff
    };
    let mf = m as f64;
    let ln_model =
        0.5 * (d.as_f64() - 1.0) * mf.ln().ln() - (mf + 1.0) * ln_a - qm_exponent(params) * mf.ln();
    Ok(AnnulusProb {
        m,
        ln_exact,
        ln_model,
    })
}

/// Vacancy bound `exp(−ν(m) q_m)` in exact and simplified form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmBound {
    pub m: u32,
    /// `exp(−a^m q_m)` with the exact q_m.
    pub exact: f64,
    /// `exp(−C (ln m)^{(d−1)/2} / m^{d + c/2 − 1 − u√2})`.
    pub model: f64,
}

pub fn fm_bound(m: u32, params: &FormulaParams) -> Result<FmBound> {
    let q = annulus_prob_qm(m, params)?;
    Ok(fm_bound_from_q(m, q.ln_exact, params))
}

/// [`fm_bound`] from a precomputed `ln q_m`.
pub fn fm_bound_from_q(m: u32, ln_q: f64, params: &FormulaParams) -> FmBound {
    let mf = m as f64;
    let nu_q = (mf * params.a.ln() + ln_q).exp();
    let model_arg = params.fm_const
        * (0.5 * (params.d.as_f64() - 1.0) * mf.ln().ln() - qm_exponent(params) * mf.ln()).exp();
    FmBound {
        m,
        exact: (-nu_q).exp(),
        model: (-model_arg).exp(),
    }
}

/// Probability of the isolation event E_n at the worst-case probe pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnProb {
    /// `(ln ln n)^{(d−1)/2} / (ln n)^{d−2−ε√2}`.
    pub model: f64,
    /// ln of `(n − n^{3/4}) I(R'_n, r_n(ε)) exp(−(n + n^{3/4}) I(R_n(c), r_n(u)))`.
    pub ln_exact_form: f64,
    /// `exp(−(n + n^{3/4}) I(R_n(c), r_n(u)))` alone.
    pub exponential_factor: f64,
}

pub fn en_prob_model(n: f64, params: &FormulaParams) -> Result<EnProb> {
    let d = params.d;
    let df = d.as_f64();
    let scales = GrowthScales::new(n, params)?;
    let ln_n = n.ln();
    let r_eps = small_radius(n, params.eps)?;
    let r_u = small_radius(n, params.u)?;
    let n34 = n.powf(0.75);
    let ln_inner = ln_ball_mass(scales.big_prime, r_eps, d)?;
    let outer_mass = ln_ball_mass(scales.big, r_u, d)?.exp();
    let exponent = -(n + n34) * outer_mass;
    let model = (0.5 * (df - 1.0) * ln_n.ln().ln() - (df - 2.0 - params.eps * SQRT_2) * ln_n.ln()).exp();
    Ok(EnProb {
        model,
        ln_exact_form: (n - n34).ln() + ln_inner + exponent,
        exponential_factor: exponent.exp(),
    })
}

/// `exp(−C₂ (ln n)^{ε√2+1} / (ln ln n)^{(d−1)/2})`.
pub fn final_series_term(n: f64, params: &FormulaParams) -> Result<f64> {
    if !(n > std::f64::consts::E) {
        return Err(Error::domain("n", format!("need ln ln n >= 0, got n = {n}")));
    }
    let ln_n = n.ln();
    let arg = params.final_const * ln_n.powf(params.eps * SQRT_2 + 1.0)
        / ln_n.ln().powf(0.5 * (params.d.as_f64() - 1.0));
    Ok((-arg).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ball_mass_by_quadrature, radial_tail};

    fn dim(d: u32) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn big_radius_values() {
        let p = big_radius(1e6, 2.0, dim(2), RadialConstant::Paper).unwrap();
        assert!((p - 5.2745).abs() < 5e-5, "{p}");
        // 2 ln 1e6 + 2 ln ln 1e6 = 32.8826..., sqrt = 5.73434
        let v = big_radius(1e6, 2.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!((v - 5.734_336).abs() < 1e-6, "{v}");
        let v = big_radius(1e4, 2.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!((v - 4.781_353).abs() < 1e-6, "{v}");
        let e_e = std::f64::consts::E.exp();
        let v = big_radius(e_e, 0.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!((v - (2.0 * std::f64::consts::E).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn big_radius_negative_radicand_names_n() {
        let err = big_radius(3.0, -200.0, dim(2), RadialConstant::Normalized).unwrap_err();
        assert!(err.to_string().contains("n = 3"), "{err}");
        assert!(big_radius(2.0, 0.0, dim(2), RadialConstant::Normalized).is_err());
    }

    #[test]
    fn small_radius_values() {
        assert!((small_radius(1e6, 1.0).unwrap() - 0.70644).abs() < 1e-5);
        assert!((small_radius(1e6, SQRT_2).unwrap() - 0.99906).abs() < 1e-5);
        assert_eq!(small_radius(1e6, 0.0).unwrap(), 0.0);
        assert!(small_radius(2.0, 1.0).is_err());
    }

    #[test]
    fn lemma_regime_half_rho_sq_close() {
        for d in [2, 3] {
            for &(rho, r) in &[(20.0, 0.4), (30.0, 0.3), (40.0, 0.25)] {
                let lr = ball_mass_log_ratio(rho, r, dim(d), ExponentVariant::HalfRhoSq).unwrap();
                assert!(lr.exp() > 0.75 && lr.exp() < 1.25, "d={d} rho={rho}: {}", lr.exp());
                let lp = ball_mass_log_ratio(rho, r, dim(d), ExponentVariant::AsPrinted).unwrap();
                // off by exactly the e^{-ρ²/2} factor
                assert!((lp - (lr - 0.5 * rho * rho)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lemma_regime_drifts_toward_one() {
        let seq = [(20.0, 0.4), (30.0, 0.3), (40.0, 0.25), (80.0, 0.15)];
        let ratios: Vec<f64> = seq
            .iter()
            .map(|&(rho, r)| {
                ball_mass_log_ratio(rho, r, dim(2), ExponentVariant::HalfRhoSq).unwrap().abs()
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    }

    #[test]
    fn one_dimensional_reduction() {
        // d = 1: (2π)^{-1/2} e^{ρr − ρ²/2} / ρ, the interval-mass asymptotic
        let (rho, r) = (12.0, 0.7);
        let ln = ln_ball_mass_asym_raw(rho, r, 1.0, ExponentVariant::HalfRhoSq);
        let closed = -0.5 * (2.0 * PI).ln() + rho * r - 0.5 * rho * rho - rho.ln();
        assert!((ln - closed).abs() < 1e-12);
        let interval = crate::quadrature::integrate(
            |s| (-0.5 * s * s).exp() / (2.0 * PI).sqrt(),
            rho - r,
            rho + r,
            Default::default(),
        )
        .unwrap();
        // the relative gap is O(1/(ρr)) plus e^{−r²/2}
        assert!((interval.ln() - ln).abs() < 0.35);
    }

    #[test]
    fn tail_asym_values() {
        let v = tail_asym(4.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!(rel(v, (-8f64).exp()) < 1e-14);
        assert!(rel(v, radial_tail(4.0, dim(2)).unwrap()) < 1e-12);
        let v = tail_asym(6.0, dim(3), RadialConstant::Normalized).unwrap();
        let ex = radial_tail(6.0, dim(3)).unwrap();
        assert!((v / ex - 1.0).abs() <= 2.0 / 36.0);
        let p = tail_asym(6.0, dim(2), RadialConstant::Paper).unwrap();
        let q = tail_asym(6.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!(rel(p, q / (4.0 * PI)) < 1e-14);
    }

    #[test]
    fn containment_defect_values() {
        for variant in [RadialConstant::Paper, RadialConstant::Normalized] {
            let v = containment_defect_asym(1e4, 2.0, dim(2), variant).unwrap();
            assert!((v.full - 0.10857).abs() < 1e-5);
            assert!(rel(v.full, v.leading) < 1e-12);
            assert!((v.cancelled_prefactor - 1.0).abs() < 1e-12);
        }
        let v = containment_defect_asym(1e5, 0.0, dim(4), RadialConstant::Normalized).unwrap();
        assert!((v.leading - 2.0).abs() < 1e-12);
        let v = containment_defect_asym(1e6, 4.0, dim(3), RadialConstant::Normalized).unwrap();
        assert!((v.leading - 0.007_409_4).abs() < 1e-7);
        // first-order agreement only: the R^{d-2} factor carries a ln ln n / ln n correction
        assert!(v.full / v.leading > 1.0 && v.full / v.leading < 1.3);
        for d in [3, 5] {
            let p = containment_defect_asym(1e6, 3.0, dim(d), RadialConstant::Paper).unwrap();
            let q = containment_defect_asym(1e6, 3.0, dim(d), RadialConstant::Normalized).unwrap();
            assert_eq!(p.leading, q.leading);
            assert!((p.cancelled_prefactor - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subsequence_rate_stabilizes() {
        let ratios: Vec<f64> = (10..=60)
            .map(|k| subsequence_rate(k, 2.0, 3.0, dim(2), RadialConstant::Normalized).unwrap().ratio())
            .collect();
        let last = &ratios[40..];
        let (lo, hi) = last.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        assert!((hi - lo) / lo < 0.10, "{lo} {hi}");
        let s = subsequence_rate(20, 2.0, 0.0, dim(3), RadialConstant::Paper).unwrap();
        assert_eq!(s.model, 1.0);
        let s = subsequence_rate(20, std::f64::consts::E, 2.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!((s.model - 0.05).abs() < 1e-15);
    }

    #[test]
    fn covering_and_packing_bounds() {
        let e2 = std::f64::consts::E.powi(2);
        assert!(rel(covering_count_bound(e2, dim(3)).unwrap(), (e2 / 2.0).powi(3)) < 1e-14);
        assert!((covering_count_bound(100.0, dim(2)).unwrap() - 471.53).abs() < 0.01);
        assert!(covering_count_bound(1.5, dim(2)).is_err());

        let p = packing_count_bound(1e6, 2.0, 1.0, dim(2), RadialConstant::Normalized).unwrap();
        assert!((p.simplified - 5.2615).abs() < 1e-4);
        let qs: Vec<f64> = [1e4, 1e6, 1e8]
            .iter()
            .map(|&n| packing_count_bound(n, 2.0, 1.0, dim(2), RadialConstant::Normalized).unwrap().quotient())
            .collect();
        let (lo, hi) = qs.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        assert!((hi - lo) / lo < 0.25, "{qs:?}");
    }

    fn qm_params() -> FormulaParams {
        FormulaParams {
            c: 2.5,
            u: 1.4,
            eps: 0.1,
            a: 2.0,
            ..FormulaParams::new(dim(2))
        }
    }

    #[test]
    fn qm_exponent_value() {
        assert!((qm_exponent(&qm_params()) - 0.270_101).abs() < 1e-6);
    }

    #[test]
    fn qm_exact_over_model_is_stable() {
        let p = qm_params();
        let ratios: Vec<f64> = (20..=40)
            .map(|m| annulus_prob_qm(m, &p).unwrap().ln_ratio().exp())
            .collect();
        assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
        let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
        assert!((hi - lo) / lo < 0.05, "{ratios:?}");
        // value at m = 25 from an independent quadrature of both ball masses
        let q = annulus_prob_qm(25, &p).unwrap().exact().unwrap();
        let rho = big_radius_ln(26.0 * LN_2, 2.5, dim(2), RadialConstant::Normalized).unwrap();
        let ln_nu = 25.0 * LN_2;
        let oracle = ball_mass_by_quadrature(rho, small_radius_ln(ln_nu, 1.4).unwrap(), dim(2)).unwrap()
            - ball_mass_by_quadrature(rho, small_radius_ln(ln_nu, 0.1).unwrap(), dim(2)).unwrap();
        assert!(rel(q, oracle) < 1e-8, "{q} {oracle}");
    }

    #[test]
    fn qm_degenerate_annulus() {
        let p = FormulaParams { u: 0.3, eps: 0.3, ..qm_params() };
        let q = annulus_prob_qm(10, &p).unwrap();
        assert_eq!(q.exact().unwrap(), 0.0);
        assert_eq!(fm_bound(10, &p).unwrap().exact, 1.0);
        let bad = FormulaParams { u: 0.1, eps: 0.3, ..qm_params() };
        assert!(annulus_prob_qm(10, &bad).is_err());
    }

    #[test]
    fn qm_deep_subsequence_reports_underflow() {
        // at m = 1000 the masses sit near e^-700: log value fine, f64 value not
        let p = qm_params();
        let q = annulus_prob_qm(1100, &p).unwrap();
        assert!(q.ln_exact.is_finite());
        assert!(matches!(q.exact(), Err(Error::Underflow { .. })));
    }

    #[test]
    fn en_prob_examples() {
        let p = FormulaParams {
            c: 2.5,
            u: 1.1,
            eps: 0.05,
            ..FormulaParams::new(dim(2))
        };
        let e = en_prob_model(1e5, &p).unwrap();
        // bounded factor on the log scale
        assert!((e.ln_exact_form - e.model.ln()).abs() < 10.0, "{e:?}");
        assert!(u_below_threshold(&p));
        assert!(e.exponential_factor > 0.5, "{e:?}");

        // eps -> 0 with d = 2: model -> sqrt(ln ln n)
        let p0 = FormulaParams { eps: 1e-12, ..p };
        let e0 = en_prob_model(1e6, &p0).unwrap();
        assert!(rel(e0.model, 1e6f64.ln().ln().sqrt()) < 1e-9);
    }

    fn u_below_threshold(p: &FormulaParams) -> bool {
        p.u * SQRT_2 < p.d.as_f64() + 0.5 * p.c - 1.0
    }

    #[test]
    fn final_series_term_examples() {
        let e_e = std::f64::consts::E.exp();
        let p = FormulaParams {
            eps: 0.0,
            final_const: 1.0,
            ..FormulaParams::new(dim(2))
        };
        let v = final_series_term(e_e, &p).unwrap();
        assert!((v - (-std::f64::consts::E).exp()).abs() < 1e-12);
        assert!((v - 0.0659).abs() < 1e-4);
        let zero = FormulaParams { final_const: 0.0, ..p };
        assert_eq!(final_series_term(1e3, &zero).unwrap(), 1.0);
    }

    #[test]
    fn regimes() {
        let mut p = FormulaParams::new(dim(2));
        p.c = 2.5;
        p.u = 1.7;
        p.t = 2.0;
        p.eps = 0.2;
        assert!(p.check_upper_regime().is_ok());
        assert!(p.check_lower_regime().is_err());
        p.u = 1.3;
        p.t = 1.0;
        p.eps = 0.1;
        assert!(p.check_lower_regime().is_ok());
    }

    #[test]
    fn deterministic() {
        let a = ball_mass_log_ratio(33.3, 0.31, dim(3), ExponentVariant::HalfRhoSq).unwrap();
        let b = ball_mass_log_ratio(33.3, 0.31, dim(3), ExponentVariant::HalfRhoSq).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
