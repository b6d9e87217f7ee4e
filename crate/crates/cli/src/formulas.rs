//! Tabulation of the closed-form evaluators over parameter grids.
//!
//! A grid is a `;`-separated list of axes. Each axis is `name=v1,v2,...` or
//! `name=lo..hi:count[:log|:lin]` (log spacing by default). Axes vary in the
//! order given, the first slowest. Parameters without an axis take their
//! default.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use lnnd_core::asymptotics::{
    annulus_prob_qm, ball_mass_asym, ball_mass_log_ratio, big_radius, big_radius_ln, containment_defect_asym,
    covering_count_bound, en_prob_model, final_series_term, fm_bound, packing_count_bound, small_radius,
    subsequence_rate, tail_asym, ExponentVariant, FormulaParams,
};
use lnnd_core::geometry::{ball_mass, ln_radial_cdf, radial_tail};
use lnnd_core::process::format_real;
use lnnd_core::{Dimension, RadialConstant};

use crate::error::{usage, CliResult};

/// Evaluator names with their parameters and defaults.
pub const EVALUATORS: &[(&str, &[(&str, &str)])] = &[
    ("big_radius", &[("n", "1e6"), ("c", "2"), ("d", "2"), ("constant", "normalized")]),
    ("small_radius", &[("n", "1e6"), ("t", "1")]),
    ("ball_mass_asym", &[("rho", "20"), ("r", "0.4"), ("d", "2"), ("variant", "half_rho_sq")]),
    ("tail_asym", &[("radius", "5"), ("d", "2"), ("constant", "normalized")]),
    ("containment_defect", &[("n", "1e4"), ("c", "2"), ("d", "2"), ("constant", "normalized")]),
    ("subsequence_rate", &[("k", "10"), ("a", "2"), ("c", "3"), ("d", "2"), ("constant", "normalized")]),
    ("covering_bound", &[("m", "20"), ("d", "2")]),
    ("packing_bound", &[("n", "1e6"), ("c", "2"), ("u", "1.1"), ("d", "2"), ("constant", "normalized")]),
    (
        "annulus_qm",
        &[("m", "20"), ("d", "2"), ("c", "2.5"), ("u", "1.4"), ("eps", "0.1"), ("a", "2"), ("constant", "normalized")],
    ),
    (
        "fm_bound",
        &[("m", "20"), ("d", "2"), ("c", "2.5"), ("u", "1.4"), ("eps", "0.1"), ("a", "2"), ("fm_const", "1"), ("constant", "normalized")],
    ),
    (
        "en_prob",
        &[("n", "1e4"), ("d", "2"), ("c", "2.5"), ("u", "1.1"), ("eps", "0.05"), ("constant", "normalized")],
    ),
    ("final_series_term", &[("n", "1e6"), ("d", "2"), ("eps", "0.1"), ("final_const", "1")]),
];

/// One axis of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<String>,
}

pub fn parse_grid(spec: &str) -> CliResult<Vec<Axis>> {
    let mut axes: Vec<Axis> = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, body) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("grid axis `{part}` needs name=values")))?;
        let name = name.trim().to_string();
        if axes.iter().any(|a| a.name == name) {
            return Err(usage(format!("grid axis `{name}` given twice")));
        }
        let body = body.trim();
        let values = if let Some((lo, rest)) = body.split_once("..") {
            let mut it = rest.split(':');
            let hi = it.next().unwrap_or("");
            let count = it.next().ok_or_else(|| usage(format!("range `{body}` needs a count")))?;
            let scale = it.next().unwrap_or("log");
            let bad = || usage(format!("bad range `{body}`"));
            let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            range(lo, hi, count, scale).ok_or_else(bad)?
        } else if body.is_empty() {
            Vec::new()
        } else {
            body.split(',').map(|s| s.trim().to_string()).collect()
        };
        axes.push(Axis { name, values });
    }
    Ok(axes)
}

fn range(lo: f64, hi: f64, count: usize, scale: &str) -> Option<Vec<String>> {
    if count == 0 {
        return Some(Vec::new());
    }
    if count == 1 {
        return Some(vec![format!("{lo}")]);
    }
    let steps = (count - 1) as f64;
    let vals: Vec<f64> = match scale {
        "log" if lo > 0.0 && hi > 0.0 => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / steps)).collect()
        }
        "lin" => (0..count).map(|i| lo + (hi - lo) * i as f64 / steps).collect(),
        _ => return None,
    };
    // Snap to the shortest representation that parses back identically.
    Some(vals.iter().map(|v| format!("{}", (v * 1e12).round() / 1e12)).collect())
}

struct Row<'a> {
    values: &'a BTreeMap<&'a str, String>,
}

impl Row<'_> {
    fn s(&self, k: &str) -> &str {
        &self.values[k]
    }

    fn f(&self, k: &str) -> CliResult<f64> {
        self.s(k).parse().map_err(|_| usage(format!("`{k}` = `{}` is not a number", self.s(k))))
    }

    fn u(&self, k: &str) -> CliResult<u32> {
        let v = crate::config::parse_int(self.s(k)).map_err(|e| usage(format!("`{k}`: {e}")))?;
        u32::try_from(v).map_err(|_| usage(format!("`{k}` too large")))
    }

    fn d(&self) -> CliResult<Dimension> {
        Ok(Dimension::new(self.u("d")?)?)
    }

    fn constant(&self) -> CliResult<RadialConstant> {
        Ok(self.s("constant").parse()?)
    }

    fn params(&self) -> CliResult<FormulaParams> {
        let mut p = FormulaParams::new(self.d()?);
        for (k, slot) in [("c", &mut p.c), ("u", &mut p.u), ("eps", &mut p.eps), ("a", &mut p.a)] {
            if self.values.contains_key(k) {
                *slot = self.f(k)?;
            }
        }
        if self.values.contains_key("fm_const") {
            p.fm_const = self.f("fm_const")?;
        }
        if self.values.contains_key("final_const") {
            p.final_const = self.f("final_const")?;
        }
        if self.values.contains_key("constant") {
            p.constant = self.constant()?;
        }
        Ok(p)
    }
}

/// `(value, exact, ln(value/exact))`; the last two are absent when no
/// exact oracle exists.
type Cell = (f64, Option<f64>, Option<f64>);

fn with_exact(value: f64, exact: f64) -> Cell {
    (value, Some(exact), Some(value.ln() - exact.ln()))
}

fn evaluate(name: &str, row: &Row) -> CliResult<Cell> {
    Ok(match name {
        "big_radius" => (big_radius(row.f("n")?, row.f("c")?, row.d()?, row.constant()?)?, None, None),
        "small_radius" => (small_radius(row.f("n")?, row.f("t")?)?, None, None),
        "ball_mass_asym" => {
            let (rho, r, d) = (row.f("rho")?, row.f("r")?, row.d()?);
            let variant: ExponentVariant = row.s("variant").parse()?;
            (
                ball_mass_asym(rho, r, d, variant)?,
                Some(ball_mass(rho, r, d)?),
                Some(ball_mass_log_ratio(rho, r, d, variant)?),
            )
        }
        "tail_asym" => {
            let (radius, d) = (row.f("radius")?, row.d()?);
            with_exact(tail_asym(radius, d, row.constant()?)?, radial_tail(radius, d)?)
        }
        "containment_defect" => {
            let (n, c, d, k) = (row.f("n")?, row.f("c")?, row.d()?, row.constant()?);
            let radius = big_radius(n, c, d, k)?;
            let exact = -(n * ln_radial_cdf(radius, d)?).exp_m1();
            with_exact(containment_defect_asym(n, c, d, k)?.full, exact)
        }
        "subsequence_rate" => {
            let (k, a, c, d, var) = (row.u("k")?, row.f("a")?, row.f("c")?, row.d()?, row.constant()?);
            let rate = subsequence_rate(k, a, c, d, var)?;
            let radius = big_radius_ln(k as f64 * a.ln(), c, d, var)?;
            let exact = -((k as f64 + 1.0) * a.ln()).exp() * ln_radial_cdf(radius, d)?;
            with_exact(rate.full, -(-exact).exp_m1())
        }
        "covering_bound" => (covering_count_bound(row.f("m")?, row.d()?)?, None, None),
        "packing_bound" => {
            let b = packing_count_bound(row.f("n")?, row.f("c")?, row.f("u")?, row.d()?, row.constant()?)?;
            (b.ratio_form, None, None)
        }
        "annulus_qm" => {
            let q = annulus_prob_qm(row.u("m")?, &row.params()?)?;
            (q.model(), Some(q.exact()?), Some(-q.ln_ratio()))
        }
        "fm_bound" => {
            let f = fm_bound(row.u("m")?, &row.params()?)?;
            with_exact(f.model, f.exact)
        }
        "en_prob" => {
            let e = en_prob_model(row.f("n")?, &row.params()?)?;
            (e.model, Some(e.ln_exact_form.exp()), Some(e.model.ln() - e.ln_exact_form))
        }
        "final_series_term" => (final_series_term(row.f("n")?, &row.params()?)?, None, None),
        other => return Err(usage(format!("unknown evaluator `{other}`"))),
    })
}

/// CSV of `evaluator` over `grid`: one column per axis, then `value`,
/// `exact` and `log_ratio`. An empty axis gives a header-only table.
pub fn formulas_table(evaluator: &str, grid: &[Axis]) -> CliResult<String> {
    let (_, params) = EVALUATORS
        .iter()
        .find(|(n, _)| *n == evaluator)
        .ok_or_else(|| usage(format!("unknown evaluator `{evaluator}`")))?;
    for axis in grid {
        if !params.iter().any(|(k, _)| *k == axis.name) {
            return Err(usage(format!("`{evaluator}` has no parameter `{}`", axis.name)));
        }
    }
    let mut out = String::new();
    for axis in grid {
        out.push_str(&axis.name);
        out.push(',');
    }
    out.push_str("value,exact,log_ratio\n");

    let mut values: BTreeMap<&str, String> = params.iter().map(|&(k, v)| (k, v.to_string())).collect();
    let total: usize = grid.iter().map(|a| a.values.len()).product();
    let mut idx = vec![0usize; grid.len()];
    for _ in 0..total {
        for (axis, &i) in grid.iter().zip(&idx) {
            let key = params.iter().find(|(k, _)| *k == axis.name).expect("checked").0;
            values.insert(key, axis.values[i].clone());
        }
        let (value, exact, ratio) = evaluate(evaluator, &Row { values: &values })?;
        for (axis, &i) in grid.iter().zip(&idx) {
            out.push_str(&axis.values[i]);
            out.push(',');
        }
        let opt = |v: Option<f64>| v.map(format_real).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", format_real(value), opt(exact), opt(ratio));
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < grid[j].values.len() {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_radius_log_grid() {
        let grid = parse_grid("n=1e3..1e8:6:log").unwrap();
        assert_eq!(grid[0].values, ["1000", "10000", "100000", "1000000", "10000000", "100000000"]);
        let csv = formulas_table("big_radius", &grid).unwrap();
        assert_eq!(csv.lines().count(), 7);
        assert_eq!(csv.lines().next().unwrap(), "n,value,exact,log_ratio");
    }

    #[test]
    fn empty_grid_gives_header() {
        let csv = formulas_table("big_radius", &parse_grid("n=").unwrap()).unwrap();
        assert_eq!(csv, "n,value,exact,log_ratio\n");
    }

    #[test]
    fn both_variants_side_by_side() {
        let grid = parse_grid("variant=half_rho_sq,as_printed; rho=20,30,40").unwrap();
        let csv = formulas_table("ball_mass_asym", &grid).unwrap();
        let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            let lr: f64 = r[4].parse().unwrap();
            if r[0] == "half_rho_sq" {
                assert!(lr.abs() < 0.25);
            } else {
                assert!(lr < -100.0);
            }
        }
    }

    #[test]
    fn rejects_unknown() {
        assert!(formulas_table("nope", &[]).is_err());
        assert!(formulas_table("big_radius", &parse_grid("rho=1").unwrap()).is_err());
        assert!(parse_grid("n=1..2").is_err());
    }

    #[test]
    fn every_evaluator_runs_on_defaults() {
        for (name, _) in EVALUATORS {
            let csv = formulas_table(name, &[]).unwrap();
            assert_eq!(csv.lines().count(), 2, "{name}");
        }
    }
}
