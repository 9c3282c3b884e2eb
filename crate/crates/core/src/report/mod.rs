//! Table and plot emission: CSV, aligned text and SVG.

pub mod svg;

use std::fs;
use std::path::Path;

use crate::diagnostics::{qq_points, DiagnosticsBundle, RefitReport};
use crate::dist_check::{GofResult, TeamCheck};
use crate::error::{Error, Result};
use crate::glm::{CoefRow, FittedModel};
use crate::ingest::{HistogramBin, MissingEntry, SummaryStats};
use crate::model_search::SelectionTable;

pub use svg::{Chart, Mark, Series};

/// Formats like R's default print: seven significant digits, trailing zeros
/// removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if mag < -4 || mag >= 15 {
        let s = format!("{:.*e}", digits.saturating_sub(1), v);
        let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = trim_zeros(mant);
        let exp: i32 = exp.parse().unwrap_or(0);
        return format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Scientific notation with a signed two-digit exponent, e.g. `4.71e+03`.
pub fn format_sci(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$e}");
    let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Align {
    Left,
    Right,
}

/// A table that renders both as CSV and as space-aligned text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub align: Vec<Align>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// First column left-aligned, the rest right-aligned.
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        let headers: Vec<String> = headers.into_iter().map(Into::into).collect();
        let align = (0..headers.len())
            .map(|i| if i == 0 { Align::Left } else { Align::Right })
            .collect();
        Table {
            headers,
            align,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |source| Error::Csv {
            path: "<memory>".into(),
            source,
        };
        w.write_record(&self.headers).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row).map_err(wrap)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|j| {
                self.rows
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain([self.headers[j].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .zip(&self.align)
                .map(|((c, &w), a)| match a {
                    Align::Left => format!("{c:<w$}"),
                    Align::Right => format!("{c:>w$}"),
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `<stem>.csv` and `<stem>.txt` into `dir`.
pub fn write_table(dir: &Path, stem: &str, table: &Table) -> Result<()> {
    write_file(&dir.join(format!("{stem}.csv")), &table.to_csv()?)?;
    write_file(&dir.join(format!("{stem}.txt")), &table.to_text())
}

pub fn missingness_table(entries: &[MissingEntry], total: usize) -> Table {
    let mut t = Table::new(["column", "missing", "present", "fraction"]);
    for e in entries {
        t.push(vec![
            e.column.name().to_string(),
            e.missing.to_string(),
            (total - e.missing).to_string(),
            format!("{:.6}", e.fraction),
        ]);
    }
    t
}

pub fn summary_table(rows: &[(String, SummaryStats)]) -> Table {
    let mut t = Table::new([
        "variable", "min", "Q1", "median", "Q3", "max", "mean", "sd", "n", "missing",
    ]);
    for (name, s) in rows {
        t.push(vec![
            name.clone(),
            format_sig(s.min, 7),
            format_sig(s.q1, 7),
            format_sig(s.median, 7),
            format_sig(s.q3, 7),
            format_sig(s.max, 7),
            format_sig(s.mean, 7),
            format_sig(s.sd, 7),
            s.n.to_string(),
            s.missing.to_string(),
        ]);
    }
    t
}

/// The two-line R-style summary: a header and one row of values.
pub fn summary_line(s: &SummaryStats) -> String {
    format!(
        "min Q1 median Q3 max mean sd n missing\n{} {} {} {} {} {} {} {} {}\n",
        format_sig(s.min, 7),
        format_sig(s.q1, 7),
        format_sig(s.median, 7),
        format_sig(s.q3, 7),
        format_sig(s.max, 7),
        format_sig(s.mean, 7),
        format_sig(s.sd, 7),
        s.n,
        s.missing
    )
}

pub fn histogram_table(bins: &[HistogramBin], response: &str) -> Table {
    let mut t = Table::new([response, "ActualMatches"]);
    for b in bins {
        t.push(vec![b.label.clone(), b.count.to_string()]);
    }
    t
}

pub fn counts_table(counts: &[(String, usize)]) -> Table {
    let mut t = Table::new(["HomeTeam", "matches"]);
    for (team, n) in counts {
        t.push(vec![team.clone(), n.to_string()]);
    }
    t
}

pub fn gof_table(result: &GofResult, response: &str) -> Table {
    let mut t = Table::new([response, "ActualMatches", "PoisProb", "ExpectedMatches"]);
    for r in &result.table.rows {
        t.push(vec![
            r.label.clone(),
            r.observed.to_string(),
            format_sig(r.prob, 7),
            format!("{:.0}", r.expected),
        ]);
    }
    t
}

/// Chi-square verdict in the layout of R's `chisq.test` print.
pub fn gof_verdict(result: &GofResult, alpha: f64) -> String {
    let p = result.p_value.get();
    let decision = if p < alpha {
        format!("p-value < {alpha}: reject H0 (goal counts are not Poisson)")
    } else {
        format!("p-value >= {alpha}: fail to reject H0 (goal counts are consistent with Poisson)")
    };
    format!(
        "Chi-squared test for given probabilities\n\nX-squared = {}, df = {}, p-value = {}\n{decision}\n",
        format_sig(result.statistic, 5),
        result.df,
        format_sig(p, 4)
    )
}

pub fn team_pvalue_table(checks: &[TeamCheck]) -> Table {
    let mut t = Table::new(["team", "matches", "statistic", "df", "p_value"]);
    for c in checks {
        let (stat, df) = match &c.result {
            Some(r) => (format_sig(r.statistic, 7), r.df.to_string()),
            None => (String::new(), String::new()),
        };
        t.push(vec![
            c.team.clone(),
            c.matches.to_string(),
            stat,
            df,
            format_sig(c.p_value().get(), 7),
        ]);
    }
    t
}

pub fn team_pvalue_lines(checks: &[TeamCheck]) -> String {
    checks
        .iter()
        .map(|c| {
            format!(
                "{} has p-value from chisq test: {}\n",
                c.team,
                format_sig(c.p_value().get(), 7)
            )
        })
        .collect()
}

/// Selection rows with the columns `model, deviance, pearson_chi2, llf,
/// df_resid, AIC`, plus `p_chisq` (six decimals) when the filter has run.
pub fn selection_table(table: &SelectionTable) -> Table {
    let with_p = table.entries.iter().any(|e| e.p_chisq.is_some());
    let mut headers = vec![
        "",
        "model",
        "deviance",
        "pearson_chi2",
        "llf",
        "df_resid",
        "AIC",
    ];
    if with_p {
        headers.push("p_chisq");
    }
    let mut t = Table::new(headers);
    t.align[1] = Align::Left;
    for (i, e) in table.entries.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            e.model.clone(),
            format!("{:.6}", e.deviance),
            format!("{:.6}", e.pearson_chi2),
            format!("{:.5}", e.llf),
            e.df_resid.to_string(),
            format!("{:.4}", e.aic),
        ];
        if with_p {
            row.push(e.p_chisq.map(|p| format!("{p:.6}")).unwrap_or_default());
        }
        t.push(row);
    }
    t
}

pub fn failures_table(table: &SelectionTable) -> Table {
    let mut t = Table::new(["model", "reason"]);
    for f in &table.failures {
        t.push(vec![f.model.clone(), f.reason.clone()]);
    }
    t
}

const RULE_WIDTH: usize = 78;

/// Header block of a fit summary: two label/value columns.
pub fn fit_header(model: &FittedModel) -> String {
    let f = &model.fit;
    let pairs = [
        (
            "Dep. Variable:",
            model.formula.response.clone(),
            "No. Observations:",
            f.n_obs.to_string(),
        ),
        (
            "Model:",
            "GLM".into(),
            "Df Residuals:",
            f.df_resid.to_string(),
        ),
        (
            "Model Family:",
            "Poisson".into(),
            "Df Model:",
            f.df_model.to_string(),
        ),
        ("Link Function:", "log".into(), "Scale:", "1.0000".into()),
        (
            "Method:",
            "IRLS".into(),
            "Log-Likelihood:",
            format!("{:.1}", f.llf),
        ),
        (
            "No. Iterations:",
            f.iterations.to_string(),
            "Deviance:",
            format!("{:.1}", f.deviance),
        ),
        (
            "Covariance Type:",
            "nonrobust".into(),
            "Pearson chi2:",
            format_sci(f.pearson_chi2, 2),
        ),
    ];
    let half = RULE_WIDTH / 2;
    let mut out = format!(
        "{:^RULE_WIDTH$}\n",
        "Generalized Linear Model Regression Results"
    );
    out.push_str(&"=".repeat(RULE_WIDTH));
    out.push('\n');
    for (l1, v1, l2, v2) in pairs {
        let w1 = half - l1.len();
        let w2 = half - l2.len() - 1;
        out.push_str(&format!("{l1}{v1:>w1$} {l2}{v2:>w2$}\n"));
    }
    out.push_str(&"=".repeat(RULE_WIDTH));
    out.push('\n');
    out
}

fn fmt_fixed(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}"))
        .unwrap_or_else(|| "nan".into())
}

fn ci_headers(level: f64) -> (String, String) {
    let a = (1.0 - level) / 2.0;
    (
        format!("[{}", format_sig(a, 4)),
        format!("{}]", format_sig(1.0 - a, 4)),
    )
}

/// Coefficient block of a fit summary.
pub fn coef_block(rows: &[CoefRow], level: f64) -> String {
    let name_w = rows
        .iter()
        .map(|r| r.name.chars().count())
        .max()
        .unwrap_or(0)
        .max(10);
    let (lo, hi) = ci_headers(level);
    let mut out = format!(
        "{:name_w$} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
        "", "coef", "std err", "z", "P>|z|", lo, hi
    );
    let width = name_w + 6 * 11;
    out.push_str(&"-".repeat(width));
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:name_w$} {:>10.4} {:>10.3} {:>10} {:>10} {:>10.3} {:>10.3}\n",
            r.name,
            r.coef,
            r.std_err,
            fmt_fixed(r.z, 3),
            fmt_fixed(r.p_value, 3),
            r.ci_low,
            r.ci_high
        ));
    }
    out.push_str(&"=".repeat(width));
    out.push('\n');
    out
}

pub fn coef_table(rows: &[CoefRow], level: f64) -> Table {
    let (lo, hi) = ci_headers(level);
    let mut t = Table::new([
        "term".to_string(),
        "coef".into(),
        "std_err".into(),
        "z".into(),
        "p_value".into(),
        lo,
        hi,
    ]);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        t.push(vec![
            r.name.clone(),
            r.coef.to_string(),
            r.std_err.to_string(),
            opt(r.z),
            opt(r.p_value),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
        ]);
    }
    t
}

pub fn fit_summary_text(model: &FittedModel, rows: &[CoefRow], level: f64) -> String {
    let mut out = format!("Model: {}\n\n", model.formula);
    out.push_str(&fit_header(model));
    out.push_str(&coef_block(rows, level));
    out
}

/// Headline statistics of a fit as a single-row table.
pub fn fit_stats_table(model: &FittedModel) -> Table {
    let f = &model.fit;
    let mut t = Table::new([
        "model",
        "n_obs",
        "df_resid",
        "df_model",
        "deviance",
        "pearson_chi2",
        "llf",
        "AIC",
        "iterations",
        "converged",
    ]);
    t.push(vec![
        model.formula.label(),
        f.n_obs.to_string(),
        f.df_resid.to_string(),
        f.df_model.to_string(),
        f.deviance.to_string(),
        f.pearson_chi2.to_string(),
        f.llf.to_string(),
        f.aic.to_string(),
        f.iterations.to_string(),
        f.converged.to_string(),
    ]);
    t
}

pub fn diagnostics_table(bundle: &DiagnosticsBundle) -> Table {
    let mut t = Table::new([
        "id",
        "response",
        "fitted",
        "pearson_resid",
        "leverage",
        "std_resid",
    ]);
    for i in 0..bundle.observation_ids.len() {
        t.push(vec![
            bundle.observation_ids[i].to_string(),
            bundle.response[i].to_string(),
            bundle.fitted_means[i].to_string(),
            bundle.pearson_residuals[i].to_string(),
            bundle.leverage[i].to_string(),
            bundle.standardized_residuals[i].to_string(),
        ]);
    }
    t
}

pub fn delta_table(report: &RefitReport) -> Table {
    let mut t = Table::new(["term", "before", "after", "delta"]);
    for d in &report.deltas {
        t.push(vec![
            d.name.clone(),
            d.before.to_string(),
            d.after.to_string(),
            d.delta.to_string(),
        ]);
    }
    t
}

pub fn histogram_chart(bins: &[HistogramBin], response: &str) -> Chart {
    Chart {
        title: format!("Distribution of {response}"),
        x_label: response.into(),
        y_label: "matches".into(),
        series: vec![Series {
            name: "matches".into(),
            mark: Mark::Bars,
            color: "steelblue",
            points: bins
                .iter()
                .enumerate()
                .map(|(i, b)| (i as f64, b.count as f64))
                .collect(),
        }],
        x_categories: bins.iter().map(|b| b.label.clone()).collect(),
        ..Chart::default()
    }
}

pub fn observed_expected_chart(result: &GofResult, response: &str) -> Chart {
    let rows = &result.table.rows;
    Chart {
        title: "Observed vs Poisson-expected matches".into(),
        x_label: response.into(),
        y_label: "matches".into(),
        series: vec![
            Series {
                name: "ActualMatches".into(),
                mark: Mark::Bars,
                color: "steelblue",
                points: rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i as f64, r.observed as f64))
                    .collect(),
            },
            Series {
                name: "ExpectedMatches".into(),
                mark: Mark::Bars,
                color: "darkorange",
                points: rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i as f64, r.expected))
                    .collect(),
            },
        ],
        x_categories: rows.iter().map(|r| r.label.clone()).collect(),
        ..Chart::default()
    }
}

pub fn residuals_chart(bundle: &DiagnosticsBundle) -> Chart {
    Chart {
        title: "Pearson residuals vs fitted values".into(),
        x_label: "fitted value".into(),
        y_label: "Pearson residual".into(),
        series: vec![Series {
            name: "observations".into(),
            mark: Mark::Points,
            color: "steelblue",
            points: bundle
                .fitted_means
                .iter()
                .copied()
                .zip(bundle.pearson_residuals.iter().copied())
                .collect(),
        }],
        hlines: vec![0.0],
        ..Chart::default()
    }
}

pub fn qq_chart(bundle: &DiagnosticsBundle) -> Result<Chart> {
    let pts = qq_points(&bundle.standardized_residuals)?;
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| {
            (lo.min(x), hi.max(x))
        });
    let mut series = vec![Series {
        name: "standardized residuals".into(),
        mark: Mark::Points,
        color: "steelblue",
        points: pts,
    }];
    if lo.is_finite() {
        series.push(Series {
            name: "y = x".into(),
            mark: Mark::Line,
            color: "firebrick",
            points: vec![(lo, lo), (hi, hi)],
        });
    }
    Ok(Chart {
        title: "Normal Q-Q".into(),
        x_label: "theoretical quantile".into(),
        y_label: "sample quantile".into(),
        series,
        ..Chart::default()
    })
}

pub fn leverage_chart(bundle: &DiagnosticsBundle) -> Chart {
    Chart {
        title: "Standardized residuals vs leverage".into(),
        x_label: "leverage".into(),
        y_label: "standardized residual".into(),
        series: vec![Series {
            name: "observations".into(),
            mark: Mark::Points,
            color: "steelblue",
            points: bundle
                .leverage
                .iter()
                .copied()
                .zip(bundle.standardized_residuals.iter().copied())
                .collect(),
        }],
        hlines: vec![0.0],
        ..Chart::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_style_numbers() {
        assert_eq!(format_sig(0.16223341, 7), "0.1622334");
        assert_eq!(format_sig(0.666615, 7), "0.666615");
        assert_eq!(format_sig(0.0, 7), "0");
        assert_eq!(format_sig(1.5224377, 7), "1.522438");
        assert_eq!(format_sig(7220.0, 7), "7220");
        assert_eq!(format_sig(9.7524e-7, 4), "9.752e-07");
        assert_eq!(format_sig(38.3141, 5), "38.314");
    }

    #[test]
    fn scientific() {
        assert_eq!(format_sci(4710.4, 2), "4.71e+03");
        assert_eq!(format_sci(0.00123, 1), "1.2e-03");
    }

    #[test]
    fn text_and_csv() {
        let mut t = Table::new(["name", "value"]);
        t.push(vec!["a, b".into(), "1".into()]);
        t.push(vec!["long name".into(), "22".into()]);
        assert_eq!(
            t.to_csv().unwrap(),
            "name,value\n\"a, b\",1\nlong name,22\n"
        );
        assert_eq!(
            t.to_text(),
            "name       value\na, b           1\nlong name     22\n"
        );
    }

    #[test]
    fn ci_header_labels() {
        assert_eq!(
            ci_headers(0.95),
            ("[0.025".to_string(), "0.975]".to_string())
        );
        assert_eq!(ci_headers(0.9), ("[0.05".to_string(), "0.95]".to_string()));
    }
}
