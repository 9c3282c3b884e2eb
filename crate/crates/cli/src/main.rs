use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use goalreg::pipeline::{self, PipelineConfig};

/// Poisson regression of home-team goals from season CSV files.
#[derive(Debug, Parser)]
#[command(name = "goalreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Missingness, summary statistics, goal histogram and team counts.
    Describe(Opts),
    /// Poisson goodness-of-fit test, globally and per team.
    Gof(Opts),
    /// Teams whose home goals pass the Poisson check.
    SelectTeams(Opts),
    /// Fit every variable subset, filter by deviance and rank by AIC.
    Search(Opts),
    /// Fit one model.
    Fit(Opts),
    /// Residual and leverage diagnostics with an outlier refit.
    Diagnose(Opts),
}

#[derive(Debug, Args)]
struct Opts {
    /// Season CSV files or directories of them.
    inputs: Vec<PathBuf>,
    /// key = value file applied before the flags below.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short, env = "GOALREG_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    missing_threshold: Option<f64>,
    #[arg(long)]
    max_category_levels: Option<usize>,
    /// Goal counts above this share one tail bin.
    #[arg(long)]
    tail_threshold: Option<u32>,
    #[arg(long)]
    alpha_team: Option<f64>,
    #[arg(long)]
    alpha_gof: Option<f64>,
    /// plain-log-drop-zeros or log1p.
    #[arg(long)]
    log_mode: Option<String>,
    /// rounded3 or exact.
    #[arg(long)]
    prob_mode: Option<String>,
    #[arg(long)]
    ci_level: Option<f64>,
    /// Comma-separated candidate terms.
    #[arg(long)]
    variables: Option<String>,
    /// none, ids:1,2,3, std-resid:C or leverage:M.
    #[arg(long)]
    outlier_rule: Option<String>,
    /// Comma-separated observation ids to drop (same as --outlier-rule ids:...).
    #[arg(long)]
    drop_ids: Option<String>,
    #[arg(long, short)]
    workers: Option<usize>,
    /// Formula such as "FTHG ~ HTAG + logHST".
    #[arg(long, short)]
    model: Option<String>,
    /// Comma-separated team list, skipping the Poisson selection.
    #[arg(long)]
    teams: Option<String>,
}

impl Opts {
    fn config(&self) -> goalreg::Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if !self.inputs.is_empty() {
            cfg.inputs = self.inputs.clone();
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        let flags: [(&str, Option<String>); 13] = [
            (
                "missing_threshold",
                self.missing_threshold.map(|v| v.to_string()),
            ),
            (
                "max_category_levels",
                self.max_category_levels.map(|v| v.to_string()),
            ),
            ("tail_threshold", self.tail_threshold.map(|v| v.to_string())),
            ("alpha_team", self.alpha_team.map(|v| v.to_string())),
            ("alpha_gof", self.alpha_gof.map(|v| v.to_string())),
            ("log_mode", self.log_mode.clone()),
            ("prob_mode", self.prob_mode.clone()),
            ("ci_level", self.ci_level.map(|v| v.to_string())),
            ("variables", self.variables.clone()),
            ("outlier_rule", self.outlier_rule.clone()),
            (
                "outlier_rule",
                self.drop_ids.as_ref().map(|ids| format!("ids:{ids}")),
            ),
            ("workers", self.workers.map(|v| v.to_string())),
            ("model", self.model.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if let Some(t) = &self.teams {
            cfg.set("teams", t)?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> goalreg::Result<String> {
    let (opts, cmd): (&Opts, fn(&PipelineConfig) -> goalreg::Result<String>) = match &cli.command {
        Command::Describe(o) => (o, pipeline::cmd_describe),
        Command::Gof(o) => (o, pipeline::cmd_gof),
        Command::SelectTeams(o) => (o, pipeline::cmd_select_teams),
        Command::Search(o) => (o, pipeline::cmd_search),
        Command::Fit(o) => (o, pipeline::cmd_fit),
        Command::Diagnose(o) => (o, pipeline::cmd_diagnose),
    };
    cmd(&opts.config()?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.class());
            ExitCode::FAILURE
        }
    }
}
