use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    annulus_prob_qm, big_radius_ln, covering_count_bound, final_series_term, fm_bound_from_q, ln_tail_asym,
    subsequence_rate, FormulaParams,
};
use crate::error::{Error, Result};

/// Which Borel–Cantelli series to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// Block escape bound `1 − I(0, R_{n_k}(c))^{n_{k+1}}` along `n_k = a^k`,
    /// by its tail asymptotic.
    Lemma2Upper,
    /// Block containment bound `exp(−n_k A R^{d−2} e^{−R²/2})` at
    /// `R = R_{n_{k+1}}(c)`.
    Lemma2Lower,
    /// `(m / ln m)^d exp(−a^m q_m)` with the exact `q_m`.
    Prop1,
    /// `exp(−C₂ (ln n)^{ε√2+1} / (ln ln n)^{(d−1)/2})` over integers n.
    Prop2,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Lemma2Upper => "lemma2_upper",
            SeriesKind::Lemma2Lower => "lemma2_lower",
            SeriesKind::Prop1 => "prop1",
            SeriesKind::Prop2 => "prop2",
        }
    }

    fn first_index(self, params: &FormulaParams) -> u64 {
        match self {
            // a^k >= 3
            SeriesKind::Lemma2Upper | SeriesKind::Lemma2Lower => (3f64.ln() / params.a.ln()).ceil().max(1.0) as u64,
            SeriesKind::Prop1 => 2,
            SeriesKind::Prop2 => 3,
        }
    }
}

impl std::str::FromStr for SeriesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma2_upper" => Ok(SeriesKind::Lemma2Upper),
            "lemma2_lower" => Ok(SeriesKind::Lemma2Lower),
            "prop1" => Ok(SeriesKind::Prop1),
            "prop2" => Ok(SeriesKind::Prop2),
            _ => Err(Error::domain(
                "kind",
                format!("expected lemma2_upper, lemma2_lower, prop1 or prop2, got `{s}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Summable,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityTable {
    pub kind: SeriesKind,
    pub params: FormulaParams,
    pub horizon: u64,
    /// `(index, term, partial sum)`; every index up to 1000, then about
    /// twenty per decade, and always the last.
    pub rows: Vec<(u64, f64, f64)>,
    pub total: f64,
    /// Sum over `(h/10, h]` divided by the sum over `(h/100, h/10]`.
    pub tail_decade_ratio: f64,
    pub verdict: Verdict,
    /// The parameter sits exactly on the critical value.
    pub at_threshold: bool,
}

const SUMMABLE_BELOW: f64 = 0.9;
const DIVERGENT_FROM: f64 = 1.0;

fn term(kind: SeriesKind, i: u64, p: &FormulaParams) -> Result<f64> {
    let d = p.d;
    match kind {
        SeriesKind::Lemma2Upper => Ok(subsequence_rate(i as u32, p.a, p.c, d, p.constant)?.full),
        SeriesKind::Lemma2Lower => {
            let ln_a = p.a.ln();
            let ln_nk = i as f64 * ln_a;
            let radius = big_radius_ln(ln_nk + ln_a, p.c, d, p.constant)?;
            Ok((-(ln_nk + ln_tail_asym(radius, d, p.constant)?).exp()).exp())
        }
        SeriesKind::Prop1 => {
            let q = annulus_prob_qm(i as u32, p)?;
            let f = fm_bound_from_q(i as u32, q.ln_exact, p);
            Ok(covering_count_bound(i as f64, d)? * f.exact)
        }
        SeriesKind::Prop2 => final_series_term(i as f64, p),
    }
}

fn keep_row(i: u64, last: u64) -> bool {
    if i <= 1000 || i == last {
        return true;
    }
    let step = 10f64.powf((i as f64).log10().floor()) / 20.0;
    i.is_multiple_of((step as u64).max(1))
}

/// Partial sums of a series up to `horizon` with a decade-ratio verdict:
/// summable below 0.9, divergent from 1.0, inconclusive in between or when
/// the parameter sits on its critical value (`c = 2` for the upper and
/// `c = 0` for the lower containment series, `u = (2d + c − 2)/(2√2)` for
/// the vacancy series).
pub fn summability_diagnostics(kind: SeriesKind, params: &FormulaParams, horizon: u64) -> Result<SummabilityTable> {
    if horizon < 100 {
        return Err(Error::domain("horizon", format!("need at least 100 for two decades, got {horizon}")));
    }
    if matches!(kind, SeriesKind::Lemma2Upper | SeriesKind::Lemma2Lower | SeriesKind::Prop1) && horizon > u32::MAX as u64 {
        return Err(Error::domain("horizon", "subsequence index too large"));
    }
    let first = kind.first_index(params);
    let (lo, mid) = (horizon / 100, horizon / 10);
    let mut rows = Vec::new();
    let (mut total, mut prev_decade, mut last_decade) = (0.0, 0.0, 0.0);
    for i in first..=horizon {
        let t = term(kind, i, params)?;
        total += t;
        if i > mid {
            last_decade += t;
        } else if i > lo {
            prev_decade += t;
        }
        if keep_row(i, horizon) {
            rows.push((i, t, total));
        }
    }
    let tail_decade_ratio = if last_decade == 0.0 { 0.0 } else { last_decade / prev_decade };
    let at_threshold = match kind {
        SeriesKind::Lemma2Upper => params.c == 2.0,
        SeriesKind::Lemma2Lower => params.c == 0.0,
        SeriesKind::Prop1 => params.u == params.u_threshold(),
        SeriesKind::Prop2 => false,
    };
    let verdict = if at_threshold {
        Verdict::Inconclusive
    } else if tail_decade_ratio < SUMMABLE_BELOW {
        Verdict::Summable
    } else if tail_decade_ratio >= DIVERGENT_FROM {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };
    Ok(SummabilityTable {
        kind,
        params: *params,
        horizon,
        rows,
        total,
        tail_decade_ratio,
        verdict,
        at_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dimension;

    fn params(c: f64) -> FormulaParams {
        let mut p = FormulaParams::new(Dimension::new(2).unwrap());
        p.c = c;
        p
    }

    #[test]
    fn lemma2_upper_sides() {
        let t = summability_diagnostics(SeriesKind::Lemma2Upper, &params(3.0), 1000).unwrap();
        assert!(t.tail_decade_ratio < 0.7, "{}", t.tail_decade_ratio);
        assert_eq!(t.verdict, Verdict::Summable);
        let t = summability_diagnostics(SeriesKind::Lemma2Upper, &params(1.0), 1000).unwrap();
        assert!(t.tail_decade_ratio >= 1.0);
        assert_eq!(t.verdict, Verdict::Divergent);
        let t = summability_diagnostics(SeriesKind::Lemma2Upper, &params(2.0), 1000).unwrap();
        assert_eq!(t.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn lemma2_lower_sides() {
        let t = summability_diagnostics(SeriesKind::Lemma2Lower, &params(-1.0), 1000).unwrap();
        assert_eq!(t.verdict, Verdict::Summable);
        let t = summability_diagnostics(SeriesKind::Lemma2Lower, &params(1.0), 1000).unwrap();
        assert_eq!(t.verdict, Verdict::Divergent);
    }

    #[test]
    fn prop1_flips_at_threshold() {
        let mut p = params(2.5);
        let th = p.u_threshold();
        for (du, want) in [(-0.5, Verdict::Divergent), (-0.25, Verdict::Divergent), (0.5, Verdict::Summable), (1.0, Verdict::Summable)] {
            p.u = th + du;
            let t = summability_diagnostics(SeriesKind::Prop1, &p, 1000).unwrap();
            assert_eq!(t.verdict, want, "u = {} ratio {}", p.u, t.tail_decade_ratio);
        }
        p.u = th;
        let t = summability_diagnostics(SeriesKind::Prop1, &p, 1000).unwrap();
        assert!(t.at_threshold);
        assert_eq!(t.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn rows_and_sums() {
        let t = summability_diagnostics(SeriesKind::Prop2, &params(2.5), 100_000).unwrap();
        assert_eq!(t.rows.last().unwrap().0, 100_000);
        assert_eq!(t.rows.last().unwrap().2, t.total);
        assert!(t.rows.windows(2).filter(|w| w[0].0 >= 100).all(|w| w[1].1 <= w[0].1));
        assert!(summability_diagnostics(SeriesKind::Prop2, &params(2.5), 50).is_err());
    }
}
