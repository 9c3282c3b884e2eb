use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const HEADER: &str = "Div,Date,HomeTeam,AwayTeam,FTHG,FTAG,HTAG,HST,HC,HR,AR,Referee";
const TEAMS: [&str; 4] = ["Arsenal", "Chelsea", "Everton", "Fulham"];

/// Deterministic pseudo-random seasons: a small LCG keeps the data fixed
/// without a generator dependency.
fn write_seasons(dir: &Path, seasons: usize, rows: usize) {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move |m: u64| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 33) % m
    };
    for s in 0..seasons {
        let mut text = format!("{HEADER}\n");
        for i in 0..rows {
            let hst = 1 + next(8);
            let goals = [0, 1, 1, 2, 1, 0, 3, 2, 1, 4][next(10) as usize].min(hst);
            text.push_str(&format!(
                "E0,{:02}/09/{:02},{},{},{goals},{},{},{hst},{},{},{},Ref\n",
                1 + i % 28,
                10 + s,
                TEAMS[i % 4],
                TEAMS[(i + 1) % 4],
                next(3),
                next(2),
                1 + next(9),
                u64::from(next(20) == 0),
                u64::from(next(15) == 0),
            ));
        }
        fs::write(dir.join(format!("season{s}.csv")), text).unwrap();
    }
}

fn goalreg(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_goalreg"));
    cmd.args(args).env_remove("GOALREG_OUT_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_svg(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    assert!(
        text.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""),
        "{}",
        path.display()
    );
    assert!(text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("<svg").count(), 1);
    assert_eq!(text.matches("<g ").count(), text.matches("</g>").count());
    assert!(!text.contains("NaN") && !text.contains("inf"));
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    fs::create_dir(&data).unwrap();
    write_seasons(&data, 3, 120);
    (tmp, data)
}

#[test]
fn describe_writes_summaries() {
    let (tmp, data) = setup();
    let out = tmp.path().join("out");
    let stdout = ok(&goalreg(&["describe", s(&data), "-o", s(&out)], &[]));
    assert!(stdout.contains("360 matches from 3 files"));
    let summary = fs::read_to_string(out.join("fthg_summary.txt")).unwrap();
    assert!(summary.starts_with("min Q1 median Q3 max mean sd n missing\n"));
    let hist = fs::read_to_string(out.join("goal_histogram.csv")).unwrap();
    let total: u64 = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 360);
    assert!(hist.contains("more than 5"));
    assert_svg(&out.join("goal_histogram.svg"));
    let counts = fs::read_to_string(out.join("team_counts.csv")).unwrap();
    assert!(counts.contains("Arsenal,90"));
    assert!(out.join("missingness.csv").exists() && out.join("covariate_summary.txt").exists());
}

#[test]
fn histogram_of_three_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("tiny.csv");
    fs::write(
        &file,
        format!("{HEADER}\nE0,01/01/20,A,B,0,1,0,3,2,0,0,R\nE0,02/01/20,B,A,2,1,1,4,5,0,0,R\nE0,03/01/20,A,B,7,0,0,9,2,0,1,R\n"),
    )
    .unwrap();
    let out = tmp.path().join("out");
    ok(&goalreg(&["describe", s(&file), "-o", s(&out)], &[]));
    let hist = fs::read_to_string(out.join("goal_histogram.csv")).unwrap();
    assert_eq!(
        hist,
        "FTHG,ActualMatches\n0,1\n1,0\n2,1\n3,0\n4,0\n5,0\nmore than 5,1\n"
    );
}

#[test]
fn empty_dataset_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("empty.csv");
    fs::write(&file, format!("{HEADER}\n")).unwrap();
    let out = tmp.path().join("out");
    let stdout = ok(&goalreg(&["describe", s(&file), "-o", s(&out)], &[]));
    assert!(stdout.contains("empty dataset"));
    assert!(out.join("describe_warning.txt").exists());
}

#[test]
fn gof_and_team_selection() {
    let (tmp, data) = setup();
    let out = tmp.path().join("gof");
    let stdout = ok(&goalreg(&["gof", s(&data), "-o", s(&out)], &[]));
    assert!(stdout.contains("X-squared = "));
    assert!(stdout.contains("Arsenal has p-value from chisq test: "));
    for f in [
        "gof_rounded3.csv",
        "gof_exact.csv",
        "gof_verdict.txt",
        "team_pvalues.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_svg(&out.join("observed_vs_expected.svg"));

    let sel = tmp.path().join("sel");
    let stdout = ok(&goalreg(
        &["select-teams", s(&data), "-o", s(&sel), "--alpha-team", "0"],
        &[],
    ));
    assert!(stdout.starts_with("4 of 4 teams selected"));
    assert_eq!(
        fs::read_to_string(sel.join("selected_teams.txt")).unwrap(),
        "Arsenal\nChelsea\nEverton\nFulham\n"
    );
}

#[test]
fn search_is_identical_across_worker_counts() {
    let (tmp, data) = setup();
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = tmp.path().join(format!("w{workers}"));
        let stdout = ok(&goalreg(
            &[
                "search",
                s(&data),
                "-o",
                s(&out),
                "-w",
                workers,
                "--teams",
                "Arsenal,Chelsea,Everton,Fulham",
            ],
            &[],
        ));
        assert!(stdout.contains("63 models fitted"));
        outputs.push(out);
    }
    for f in [
        "selection_all.csv",
        "selection_ranked.csv",
        "best_model_coefs.csv",
        "best_model_summary.txt",
    ] {
        let a = fs::read(outputs[0].join(f)).unwrap();
        let b = fs::read(outputs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let all = fs::read_to_string(outputs[0].join("selection_all.csv")).unwrap();
    assert_eq!(
        all.lines().next().unwrap(),
        ",model,deviance,pearson_chi2,llf,df_resid,AIC"
    );
    assert_eq!(all.lines().count(), 64);
    let ranked = fs::read_to_string(outputs[0].join("selection_ranked.csv")).unwrap();
    assert!(ranked.lines().next().unwrap().ends_with(",AIC,p_chisq"));
}

#[test]
fn single_variable_universe() {
    let (tmp, data) = setup();
    let out = tmp.path().join("one");
    ok(&goalreg(
        &[
            "search",
            s(&data),
            "-o",
            s(&out),
            "--variables",
            "logHST",
            "--alpha-team",
            "0",
        ],
        &[],
    ));
    assert_eq!(
        fs::read_to_string(out.join("selection_all.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn fit_and_diagnose() {
    let (tmp, data) = setup();
    let out = tmp.path().join("fit");
    let stdout = ok(&goalreg(
        &[
            "fit",
            s(&data),
            "-o",
            s(&out),
            "-m",
            "FTHG ~ logHST + HomeTeam",
            "--alpha-team",
            "0",
        ],
        &[],
    ));
    assert!(stdout.contains("Generalized Linear Model Regression Results"));
    assert!(stdout.contains("HomeTeam[T.Chelsea]"));
    assert!(stdout.contains("[0.025"));

    let diag = tmp.path().join("diag");
    let stdout = ok(&goalreg(
        &[
            "diagnose",
            s(&data),
            "-o",
            s(&diag),
            "-m",
            "FTHG ~ logHST + HomeTeam",
            "--alpha-team",
            "0",
            "--drop-ids",
            "3,10",
        ],
        &[],
    ));
    assert!(stdout.contains("2 observations dropped"));
    for f in [
        "residuals_vs_fitted.svg",
        "qq.svg",
        "std_resid_vs_leverage.svg",
    ] {
        assert_svg(&diag.join(f));
    }
    let rows = fs::read_to_string(diag.join("diagnostics.csv")).unwrap();
    assert_eq!(
        rows.lines().next().unwrap(),
        "id,response,fitted,pearson_resid,leverage,std_resid"
    );
    let summary = fs::read_to_string(diag.join("refit_summary.txt")).unwrap();
    assert_eq!(
        summary
            .matches("Generalized Linear Model Regression Results")
            .count(),
        2
    );

    let none = tmp.path().join("none");
    ok(&goalreg(
        &[
            "diagnose",
            s(&data),
            "-o",
            s(&none),
            "-m",
            "FTHG ~ logHST",
            "--alpha-team",
            "0",
        ],
        &[],
    ));
    let deltas = fs::read_to_string(none.join("refit_deltas.csv")).unwrap();
    assert!(deltas.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn config_file_env_and_flags() {
    let (tmp, data) = setup();
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "inputs = {}\nalpha_team = 0.5\ntail_threshold = 4\n",
            s(&data)
        ),
    )
    .unwrap();
    let env_out = tmp.path().join("from-env");
    ok(&goalreg(
        &["select-teams", "-c", s(&cfg), "--alpha-team", "0"],
        &[("GOALREG_OUT_DIR", &env_out)],
    ));
    let echoed = fs::read_to_string(env_out.join("config.txt")).unwrap();
    assert!(echoed.contains("alpha_team = 0\n"));
    assert!(echoed.contains("tail_threshold = 4\n"));
    assert!(echoed.contains(&format!("out_dir = {}\n", s(&env_out))));
}

#[test]
fn errors_are_one_line_with_a_class() {
    let tmp = tempfile::tempdir().unwrap();
    let out = goalreg(
        &[
            "describe",
            s(&tmp.path().join("missing.csv")),
            "-o",
            s(&tmp.path().join("o")),
        ],
        &[],
    );
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let last = err.lines().last().unwrap();
    assert!(last.starts_with("error[io]: "), "{err}");

    let (tmp, data) = setup();
    let out = goalreg(
        &[
            "gof",
            s(&data),
            "-o",
            s(&tmp.path().join("o")),
            "--alpha-gof",
            "2",
        ],
        &[],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("error[config]: "));
}
