//! Pipeline configuration and the command drivers behind the CLI.
//!
//! Each `cmd_*` function loads the configured inputs, runs one stage of the
//! analysis, writes its tables and plots into the output directory and
//! returns a short console summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::diagnostics::{diagnose, flag_outliers, refit_without, OutlierRule};
use crate::dist_check::{check_all_teams, global_gof, select_from_checks, ProbMode, TeamCheck};
use crate::error::{Error, Result};
use crate::frame::ModelFrame;
use crate::glm::{fit_formula, summarize, FittedModel, Formula, IrlsOptions};
use crate::ingest::{
    build_model_frame, describe, goal_histogram, load_matches, missingness_report, prune_columns,
    Column, LogMode, MatchTable, SummaryStats, RESPONSE,
};
use crate::model_search::{
    enumerate_formulas, fit_all, gof_filter, rank_by_aic, DEFAULT_VARIABLES,
};
use crate::report::{self, write_file, write_table};

/// Every key accepted by [`PipelineConfig::set`], in echo order.
pub const CONFIG_KEYS: [&str; 15] = [
    "inputs",
    "missing_threshold",
    "max_category_levels",
    "tail_threshold",
    "alpha_team",
    "alpha_gof",
    "log_mode",
    "prob_mode",
    "ci_level",
    "variables",
    "outlier_rule",
    "out_dir",
    "workers",
    "model",
    "teams",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// CSV files, or directories whose `*.csv` files are read in name order.
    pub inputs: Vec<PathBuf>,
    pub missing_threshold: f64,
    pub max_category_levels: usize,
    pub tail_threshold: u32,
    pub alpha_team: f64,
    pub alpha_gof: f64,
    pub log_mode: LogMode,
    pub prob_mode: ProbMode,
    pub ci_level: f64,
    pub variables: Vec<String>,
    pub outlier_rule: OutlierRule,
    pub out_dir: PathBuf,
    /// Fit threads; 0 lets the pool decide.
    pub workers: usize,
    /// Formula for `fit` and `diagnose`; all of `variables` when unset.
    pub model: Option<String>,
    /// Explicit team list, bypassing the per-team Poisson check.
    pub teams: Option<Vec<String>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: Vec::new(),
            missing_threshold: 0.05,
            max_category_levels: 50,
            tail_threshold: 5,
            alpha_team: 0.05,
            alpha_gof: 0.05,
            log_mode: LogMode::default(),
            prob_mode: ProbMode::default(),
            ci_level: 0.95,
            variables: DEFAULT_VARIABLES.iter().map(|s| s.to_string()).collect(),
            outlier_rule: OutlierRule::default(),
            out_dir: PathBuf::from("goalreg-out"),
            workers: 0,
            model: None,
            teams: None,
        }
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for {key}")))
}

/// `none`, `ids:1,2,3`, `std-resid:C` or `leverage:M`.
pub fn parse_outlier_rule(s: &str) -> Result<OutlierRule> {
    let s = s.trim();
    if s.is_empty() || s == "none" {
        return Ok(OutlierRule::Explicit(Vec::new()));
    }
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("invalid outlier rule `{s}`")))?;
    match kind {
        "ids" => list(arg)
            .iter()
            .map(|v| parse_num("outlier_rule", v))
            .collect::<Result<Vec<usize>>>()
            .map(OutlierRule::Explicit),
        "std-resid" => parse_num("outlier_rule", arg).map(OutlierRule::StdResidAbove),
        "leverage" => parse_num("outlier_rule", arg).map(OutlierRule::LeverageAbove),
        _ => Err(Error::Config(format!("unknown outlier rule kind `{kind}`"))),
    }
}

pub fn outlier_rule_string(rule: &OutlierRule) -> String {
    match rule {
        OutlierRule::Explicit(ids) if ids.is_empty() => "none".into(),
        OutlierRule::Explicit(ids) => {
            format!(
                "ids:{}",
                ids.iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        }
        OutlierRule::StdResidAbove(c) => format!("std-resid:{c}"),
        OutlierRule::LeverageAbove(m) => format!("leverage:{m}"),
    }
}

impl PipelineConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "inputs" => self.inputs = list(value).into_iter().map(PathBuf::from).collect(),
            "missing_threshold" => self.missing_threshold = parse_num(key, value)?,
            "max_category_levels" => self.max_category_levels = parse_num(key, value)?,
            "tail_threshold" => self.tail_threshold = parse_num(key, value)?,
            "alpha_team" => self.alpha_team = parse_num(key, value)?,
            "alpha_gof" => self.alpha_gof = parse_num(key, value)?,
            "log_mode" => self.log_mode = value.trim().parse()?,
            "prob_mode" => self.prob_mode = value.trim().parse()?,
            "ci_level" => self.ci_level = parse_num(key, value)?,
            "variables" => self.variables = list(value),
            "outlier_rule" => self.outlier_rule = parse_outlier_rule(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "workers" => self.workers = parse_num(key, value)?,
            "model" => self.model = Some(value.trim().to_string()).filter(|m| !m.is_empty()),
            "teams" => self.teams = Some(list(value)).filter(|t| !t.is_empty()),
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_kv(&text)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let join = |v: &[String]| v.join(",");
        Some(match key {
            "inputs" => self
                .inputs
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(","),
            "missing_threshold" => self.missing_threshold.to_string(),
            "max_category_levels" => self.max_category_levels.to_string(),
            "tail_threshold" => self.tail_threshold.to_string(),
            "alpha_team" => self.alpha_team.to_string(),
            "alpha_gof" => self.alpha_gof.to_string(),
            "log_mode" => self.log_mode.as_str().to_string(),
            "prob_mode" => self.prob_mode.as_str().to_string(),
            "ci_level" => self.ci_level.to_string(),
            "variables" => join(&self.variables),
            "outlier_rule" => outlier_rule_string(&self.outlier_rule),
            "out_dir" => self.out_dir.display().to_string(),
            "workers" => self.workers.to_string(),
            "model" => self.model.clone().unwrap_or_default(),
            "teams" => self.teams.as_deref().map(join).unwrap_or_default(),
            _ => return None,
        })
    }

    /// The configuration as `key = value` lines, readable by [`apply_kv`](Self::apply_kv).
    pub fn to_kv(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64, closed: bool| {
            let ok = if closed {
                (0.0..=1.0).contains(&v)
            } else {
                (0.0..1.0).contains(&v)
            };
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} out of range")))
            }
        };
        unit("missing_threshold", self.missing_threshold, true)?;
        unit("alpha_team", self.alpha_team, false)?;
        unit("alpha_gof", self.alpha_gof, false)?;
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!(
                "ci_level = {} out of range",
                self.ci_level
            )));
        }
        if self.max_category_levels < 2 {
            return Err(Error::Config(
                "max_category_levels must be at least 2".into(),
            ));
        }
        if self.tail_threshold == 0 {
            return Err(Error::Config("tail_threshold must be at least 1".into()));
        }
        if self.variables.is_empty() {
            return Err(Error::Config("variable universe is empty".into()));
        }
        Ok(())
    }

    /// Input files after directory expansion.
    pub fn input_files(&self) -> Result<Vec<PathBuf>> {
        if self.inputs.is_empty() {
            return Err(Error::Config("no input files given".into()));
        }
        let mut files = Vec::new();
        for p in &self.inputs {
            if p.is_dir() {
                let entries = fs::read_dir(p).map_err(|source| Error::Io {
                    path: p.clone(),
                    source,
                })?;
                let mut found: Vec<PathBuf> = entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                    .collect();
                found.sort();
                if found.is_empty() {
                    return Err(Error::Config(format!("no .csv files in {}", p.display())));
                }
                files.extend(found);
            } else {
                files.push(p.clone());
            }
        }
        Ok(files)
    }

    /// Creates the output directory and echoes the configuration into it.
    fn prepare_output(&self) -> Result<&Path> {
        self.validate()?;
        let dir = self.out_dir.as_path();
        fs::create_dir_all(dir).map_err(|source| Error::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        write_file(&dir.join("config.txt"), &self.to_kv())?;
        Ok(dir)
    }

    fn formula(&self) -> Result<Formula> {
        match &self.model {
            Some(m) => Formula::parse(m, RESPONSE),
            None => Formula::new(RESPONSE, self.variables.iter().cloned()),
        }
    }
}

fn load_pruned(cfg: &PipelineConfig) -> Result<MatchTable> {
    let raw = load_matches(&cfg.input_files()?)?;
    prune_columns(&raw, cfg.missing_threshold, cfg.max_category_levels)
}

fn team_checks(cfg: &PipelineConfig, table: &MatchTable) -> Vec<TeamCheck> {
    check_all_teams(table, cfg.tail_threshold, cfg.prob_mode)
}

fn resolve_teams(cfg: &PipelineConfig, table: &MatchTable, dir: &Path) -> Result<Vec<String>> {
    let teams = match &cfg.teams {
        Some(t) => t.clone(),
        None => select_from_checks(&team_checks(cfg, table), cfg.alpha_team)?,
    };
    write_file(
        &dir.join("selected_teams.txt"),
        &teams.iter().map(|t| format!("{t}\n")).collect::<String>(),
    )?;
    if teams.is_empty() {
        return Err(Error::EmptyFrame("no teams selected".into()));
    }
    Ok(teams)
}

fn model_frame(cfg: &PipelineConfig, dir: &Path) -> Result<ModelFrame> {
    let table = load_pruned(cfg)?;
    let teams = resolve_teams(cfg, &table, dir)?;
    build_model_frame(&table, &teams, cfg.log_mode)
}

fn write_fit(dir: &Path, stem: &str, model: &FittedModel, level: f64) -> Result<()> {
    let rows = summarize(&model.fit, level)?;
    write_file(
        &dir.join(format!("{stem}_summary.txt")),
        &report::fit_summary_text(model, &rows, level),
    )?;
    write_table(
        dir,
        &format!("{stem}_coefs"),
        &report::coef_table(&rows, level),
    )?;
    write_table(
        dir,
        &format!("{stem}_stats"),
        &report::fit_stats_table(model),
    )
}

fn headline(model: &FittedModel) -> String {
    let f = &model.fit;
    format!(
        "n = {}, deviance = {:.1}, llf = {:.1}, AIC = {:.4}",
        f.n_obs, f.deviance, f.llf, f.aic
    )
}

/// Missingness, FTHG summary, covariate summaries, goal histogram and
/// per-team match counts.
pub fn cmd_describe(cfg: &PipelineConfig) -> Result<String> {
    let dir = cfg.prepare_output()?;
    let raw = load_matches(&cfg.input_files()?)?;
    let mut out = String::new();
    if raw.is_empty() {
        log::warn!("dataset is empty");
        write_file(
            &dir.join("describe_warning.txt"),
            "empty dataset: no match rows were read\n",
        )?;
        out.push_str("warning: empty dataset, nothing to describe\n");
        return Ok(out);
    }
    write_table(
        dir,
        "missingness",
        &report::missingness_table(&missingness_report(&raw), raw.len()),
    )?;
    let table = prune_columns(&raw, cfg.missing_threshold, cfg.max_category_levels)?;
    let pruned: String = table
        .pruned
        .iter()
        .map(|(c, why)| format!("{c}: {why:?}\n"))
        .collect();
    write_file(&dir.join("pruned_columns.txt"), &pruned)?;

    let fthg = describe(&table, RESPONSE)?;
    let line = report::summary_line(&fthg);
    write_file(&dir.join("fthg_summary.txt"), &line)?;

    let mut summaries: Vec<(String, SummaryStats)> = vec![(RESPONSE.to_string(), fthg)];
    for col in [
        Column::Htag,
        Column::Hst,
        Column::Hc,
        Column::Hr,
        Column::Ar,
    ] {
        if let Ok(s) = describe(&table, col.name()) {
            summaries.push((col.name().to_string(), s));
        }
        if matches!(col, Column::Hst | Column::Hc) && table.has_column(col) {
            let (vals, missing) =
                table
                    .records
                    .iter()
                    .fold((Vec::new(), 0usize), |(mut v, m), r| {
                        match r.count(col).and_then(|x| cfg.log_mode.transform(x)) {
                            Some(x) => {
                                v.push(x);
                                (v, m)
                            }
                            None => (v, m + 1),
                        }
                    });
            summaries.push((
                format!("log{}", col.name()),
                SummaryStats::from_values(&vals, missing),
            ));
        }
    }
    write_table(dir, "covariate_summary", &report::summary_table(&summaries))?;

    let bins = goal_histogram(&table, cfg.tail_threshold);
    write_table(
        dir,
        "goal_histogram",
        &report::histogram_table(&bins, RESPONSE),
    )?;
    write_file(
        &dir.join("goal_histogram.svg"),
        &report::histogram_chart(&bins, RESPONSE).render(),
    )?;

    let counts = table.home_match_counts();
    write_table(dir, "team_counts", &report::counts_table(&counts))?;

    let _ = writeln!(
        out,
        "{} matches from {} files, {} home teams",
        table.len(),
        table.source_files.len(),
        counts.len()
    );
    let _ = writeln!(out, "{RESPONSE} summary:\n{line}");
    Ok(out)
}

/// Global Poisson goodness-of-fit test (both probability modes) and the
/// per-team p-values.
pub fn cmd_gof(cfg: &PipelineConfig) -> Result<String> {
    let dir = cfg.prepare_output()?;
    let table = load_pruned(cfg)?;
    let mut out = String::new();
    let mut verdicts = String::new();
    let modes = [
        cfg.prob_mode,
        if cfg.prob_mode == ProbMode::Exact {
            ProbMode::Rounded3
        } else {
            ProbMode::Exact
        },
    ];
    for mode in modes {
        let result = global_gof(&table, cfg.tail_threshold, mode)?;
        write_table(
            dir,
            &format!("gof_{}", mode.as_str()),
            &report::gof_table(&result, RESPONSE),
        )?;
        let verdict = report::gof_verdict(&result, cfg.alpha_gof);
        let _ = writeln!(verdicts, "[{}]\n{verdict}", mode.as_str());
        if mode == cfg.prob_mode {
            write_file(
                &dir.join("observed_vs_expected.svg"),
                &report::observed_expected_chart(&result, RESPONSE).render(),
            )?;
            out.push_str(&verdict);
        }
    }
    write_file(&dir.join("gof_verdict.txt"), &verdicts)?;

    let checks = team_checks(cfg, &table);
    write_table(dir, "team_pvalues", &report::team_pvalue_table(&checks))?;
    let lines = report::team_pvalue_lines(&checks);
    write_file(&dir.join("team_pvalues_lines.txt"), &lines)?;
    out.push('\n');
    out.push_str(&lines);
    Ok(out)
}

/// Per-team Poisson check and the resulting team list.
pub fn cmd_select_teams(cfg: &PipelineConfig) -> Result<String> {
    let dir = cfg.prepare_output()?;
    let table = load_pruned(cfg)?;
    let checks = team_checks(cfg, &table);
    write_table(dir, "team_pvalues", &report::team_pvalue_table(&checks))?;
    let teams = select_from_checks(&checks, cfg.alpha_team)?;
    let listing: String = teams.iter().map(|t| format!("{t}\n")).collect();
    write_file(&dir.join("selected_teams.txt"), &listing)?;
    Ok(format!(
        "{} of {} teams selected at alpha = {}\n{listing}",
        teams.len(),
        checks.len(),
        cfg.alpha_team
    ))
}

/// Team selection, the exhaustive model search, filtering, ranking and the
/// best model's summary.
pub fn cmd_search(cfg: &PipelineConfig) -> Result<String> {
    let dir = cfg.prepare_output()?;
    let frame = model_frame(cfg, dir)?;
    let formulas = enumerate_formulas(RESPONSE, &cfg.variables)?;
    let all = fit_all(&frame, &formulas, IrlsOptions::default(), cfg.workers)?;
    write_table(dir, "selection_all", &report::selection_table(&all))?;
    if !all.failures.is_empty() {
        write_table(dir, "selection_failures", &report::failures_table(&all))?;
    }
    let ranked = rank_by_aic(&gof_filter(&all, cfg.alpha_gof)?);
    write_table(dir, "selection_ranked", &report::selection_table(&ranked))?;

    let mut out = format!(
        "{} observations ({} excluded by the log rule), {} models fitted, {} failed, {} pass the deviance test\n",
        frame.n_obs(),
        frame.excluded_log_zero,
        all.len(),
        all.failures.len(),
        ranked.len()
    );
    match ranked.best() {
        Some(best) => {
            let formula = Formula::parse(&best.model, RESPONSE)?;
            let model = fit_formula(&frame, &formula, IrlsOptions::default())?;
            write_fit(dir, "best_model", &model, cfg.ci_level)?;
            let _ = writeln!(out, "best model: {formula}\n{}", headline(&model));
        }
        None => out.push_str("no model passed the deviance goodness-of-fit test\n"),
    }
    Ok(out)
}

/// Fits the configured model on the selected teams.
pub fn cmd_fit(cfg: &PipelineConfig) -> Result<String> {
    let dir = cfg.prepare_output()?;
    let frame = model_frame(cfg, dir)?;
    let formula = cfg.formula()?;
    let model = fit_formula(&frame, &formula, IrlsOptions::default())?;
    write_fit(dir, "fit", &model, cfg.ci_level)?;
    let rows = summarize(&model.fit, cfg.ci_level)?;
    Ok(report::fit_summary_text(&model, &rows, cfg.ci_level))
}

/// Residual and leverage diagnostics, outlier flagging by the configured
/// rule and a before/after refit.
pub fn cmd_diagnose(cfg: &PipelineConfig) -> Result<String> {
    let dir = cfg.prepare_output()?;
    let frame = model_frame(cfg, dir)?;
    let formula = cfg.formula()?;
    let model = fit_formula(&frame, &formula, IrlsOptions::default())?;
    let bundle = diagnose(&model)?;
    write_file(
        &dir.join("diagnostics.csv"),
        &report::diagnostics_table(&bundle).to_csv()?,
    )?;
    write_file(
        &dir.join("diagnostics_meta.txt"),
        "standardized residual = Pearson residual / sqrt(1 - leverage)\nleverage = diagonal of W^1/2 X (X'WX)^-1 X' W^1/2\nid = row index in the merged input files\n",
    )?;
    write_file(
        &dir.join("residuals_vs_fitted.svg"),
        &report::residuals_chart(&bundle).render(),
    )?;
    write_file(&dir.join("qq.svg"), &report::qq_chart(&bundle)?.render())?;
    write_file(
        &dir.join("std_resid_vs_leverage.svg"),
        &report::leverage_chart(&bundle).render(),
    )?;

    let flagged = flag_outliers(&bundle, &cfg.outlier_rule)?;
    write_file(
        &dir.join("flagged_ids.txt"),
        &flagged.iter().map(|i| format!("{i}\n")).collect::<String>(),
    )?;
    let refit = refit_without(&frame, &formula, &flagged, IrlsOptions::default())?;
    let level = cfg.ci_level;
    let mut text = String::from("Before removing observations\n\n");
    text.push_str(&report::fit_summary_text(
        &refit.before,
        &summarize(&refit.before.fit, level)?,
        level,
    ));
    let _ = write!(
        text,
        "\nAfter removing {} observations\n\n",
        refit.dropped.len()
    );
    text.push_str(&report::fit_summary_text(
        &refit.after,
        &summarize(&refit.after.fit, level)?,
        level,
    ));
    write_file(&dir.join("refit_summary.txt"), &text)?;
    write_table(dir, "refit_deltas", &report::delta_table(&refit))?;

    let max_abs = bundle
        .standardized_residuals
        .iter()
        .fold(0f64, |m, r| m.max(r.abs()));
    let max_lev = bundle.leverage.iter().fold(0f64, |m, h| m.max(*h));
    Ok(format!(
        "{}\nmax |standardized residual| = {max_abs:.4}, max leverage = {max_lev:.4}\n{} observations dropped; after refit: {}\n",
        headline(&model),
        refit.dropped.len(),
        headline(&refit.after)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_kv("# run\ninputs = a.csv, b.csv\nalpha_gof=0.1\noutlier_rule = ids:3,1\nmodel = FTHG ~ HTAG\n")
            .unwrap();
        assert_eq!(
            cfg.inputs,
            vec![PathBuf::from("a.csv"), PathBuf::from("b.csv")]
        );
        assert_eq!(cfg.alpha_gof, 0.1);
        assert_eq!(cfg.outlier_rule, OutlierRule::Explicit(vec![3, 1]));
        let mut back = PipelineConfig::default();
        back.apply_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn defaults_survive_echo() {
        let cfg = PipelineConfig::default();
        let mut back = PipelineConfig::default();
        back.apply_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.set("alpha_team", "x").is_err());
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.apply_kv("alpha_team 0.1").is_err());
        cfg.set("alpha_team", "1.5").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn outlier_rules() {
        assert_eq!(
            parse_outlier_rule("none").unwrap(),
            OutlierRule::Explicit(vec![])
        );
        assert_eq!(
            parse_outlier_rule("std-resid:3").unwrap(),
            OutlierRule::StdResidAbove(3.0)
        );
        assert_eq!(
            parse_outlier_rule("leverage:2.5").unwrap(),
            OutlierRule::LeverageAbove(2.5)
        );
        assert!(parse_outlier_rule("ids:1,x").is_err());
        assert!(parse_outlier_rule("cook:1").is_err());
    }
}
