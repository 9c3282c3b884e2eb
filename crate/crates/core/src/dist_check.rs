//! Chi-square test of goal counts against a Poisson law with given
//! probabilities, globally and per team, and team selection.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{histogram_of, tail_label, HistogramBin, MatchTable};
use crate::specfun::{chi2_sf, poisson_pmf, poisson_sf, Probability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbMode {
    /// Full-precision Poisson probabilities.
    Exact,
    /// Head probabilities rounded to three decimals; the tail bin takes the
    /// (rounded) remainder so the column sums to one.
    #[default]
    Rounded3,
}

impl ProbMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbMode::Exact => "exact",
            ProbMode::Rounded3 => "rounded3",
        }
    }
}

impl std::str::FromStr for ProbMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ProbMode::Exact),
            "rounded3" => Ok(ProbMode::Rounded3),
            other => Err(Error::Config(format!("unknown probability mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofRow {
    pub label: String,
    pub observed: u64,
    pub prob: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofTable {
    pub rows: Vec<GofRow>,
}

impl GofTable {
    /// Builds a table from observed counts and bin probabilities;
    /// `expected_i = N · prob_i`.
    pub fn from_probs(labels: Vec<String>, observed: Vec<u64>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != observed.len() || observed.len() != probs.len() {
            return Err(Error::DegenerateBins(
                "label/count/probability lengths differ".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::ProbabilitySum(sum));
        }
        let total: u64 = observed.iter().sum();
        let rows = labels
            .into_iter()
            .zip(observed)
            .zip(probs)
            .map(|((label, observed), prob)| GofRow {
                label,
                observed,
                prob,
                expected: total as f64 * prob,
            })
            .collect();
        Ok(GofTable { rows })
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.observed).sum()
    }

    /// Merges the last bin into the one before it.
    fn collapse_tail(&mut self) {
        if self.rows.len() < 2 {
            return;
        }
        let tail = self.rows.pop().expect("at least two rows");
        let last = self.rows.last_mut().expect("at least one row");
        last.label = format!("{} or more", last.label);
        last.observed += tail.observed;
        last.prob += tail.prob;
        last.expected += tail.expected;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: Probability,
    pub table: GofTable,
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Poisson probabilities for bins `0..=tail_threshold` plus the upper tail.
pub fn poisson_probability_table(
    observed: &[HistogramBin],
    lambda: f64,
    tail_threshold: u32,
    prob_mode: ProbMode,
) -> Result<GofTable> {
    let t = tail_threshold as usize;
    if observed.len() != t + 2 {
        return Err(Error::DegenerateBins(format!(
            "expected {} bins for tail threshold {tail_threshold}, got {}",
            t + 2,
            observed.len()
        )));
    }
    let mut probs = (0..=tail_threshold as u64)
        .map(|k| poisson_pmf(k, lambda).map(Probability::get))
        .collect::<Result<Vec<f64>>>()?;
    match prob_mode {
        ProbMode::Exact => probs.push(poisson_sf(tail_threshold as u64, lambda)?.get()),
        ProbMode::Rounded3 => {
            for p in &mut probs {
                *p = round3(*p);
            }
            let head: f64 = probs.iter().sum();
            let tail = round3(1.0 - head);
            if tail < 0.0 {
                return Err(Error::ProbabilitySum(head));
            }
            probs.push(tail);
        }
    }
    let labels = observed.iter().map(|b| b.label.clone()).collect();
    let counts = observed.iter().map(|b| b.count).collect();
    GofTable::from_probs(labels, counts, probs)
}

/// Pearson chi-square statistic with `bins − 1` degrees of freedom.
pub fn chisq_gof(table: &GofTable) -> Result<GofResult> {
    if table.rows.len() < 2 {
        return Err(Error::DegenerateBins("need at least two bins".into()));
    }
    if let Some(row) = table.rows.iter().find(|r| !(r.expected > 0.0)) {
        return Err(Error::DegenerateBins(format!(
            "bin `{}` has expected count {}",
            row.label, row.expected
        )));
    }
    let statistic: f64 = table
        .rows
        .iter()
        .map(|r| (r.observed as f64 - r.expected).powi(2) / r.expected)
        .sum();
    let df = (table.rows.len() - 1) as u32;
    Ok(GofResult {
        statistic,
        df,
        p_value: chi2_sf(statistic, df as f64)?,
        table: table.clone(),
    })
}

/// Sample mean of goal counts, `None` when empty.
pub fn mean_goals(goals: &[u32]) -> Option<f64> {
    (!goals.is_empty())
        .then(|| goals.iter().map(|&g| f64::from(g)).sum::<f64>() / goals.len() as f64)
}

/// Global Poisson test over every non-missing FTHG value.
pub fn global_gof(
    table: &MatchTable,
    tail_threshold: u32,
    prob_mode: ProbMode,
) -> Result<GofResult> {
    let goals = table.goals();
    let lambda = mean_goals(&goals)
        .filter(|l| *l > 0.0)
        .ok_or_else(|| Error::DegenerateBins("no goals observed".into()))?;
    let bins = histogram_of(&goals, tail_threshold);
    let mut gof = poisson_probability_table(&bins, lambda, tail_threshold, prob_mode)?;
    if gof.rows.last().is_some_and(|r| !(r.expected > 0.0)) {
        log::warn!("tail bin has zero expected count, merged into the previous bin");
        gof.collapse_tail();
    }
    chisq_gof(&gof)
}

/// Runs one team's test, `None` when it is degenerate.
pub fn team_gof(goals: &[u32], tail_threshold: u32, prob_mode: ProbMode) -> Option<GofResult> {
    let bins = histogram_of(goals, tail_threshold);
    if bins.iter().filter(|b| b.count > 0).count() < 2 {
        return None;
    }
    let lambda = mean_goals(goals)?;
    let mut table = poisson_probability_table(&bins, lambda, tail_threshold, prob_mode).ok()?;
    if table.rows.last().is_some_and(|r| !(r.expected > 0.0)) {
        table.collapse_tail();
    }
    chisq_gof(&table).ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamCheck {
    pub team: String,
    pub matches: usize,
    /// `None` when the test was degenerate.
    pub result: Option<GofResult>,
}

impl TeamCheck {
    /// p-value with degenerate tests mapped to zero.
    pub fn p_value(&self) -> Probability {
        self.result
            .as_ref()
            .map_or(Probability::ZERO, |r| r.p_value)
    }
}

fn check_team_goals(
    team: &str,
    goals: &[u32],
    tail_threshold: u32,
    prob_mode: ProbMode,
) -> TeamCheck {
    TeamCheck {
        team: team.to_string(),
        matches: goals.len(),
        result: team_gof(goals, tail_threshold, prob_mode),
    }
}

/// p-value of the Poisson test on one team's home goals; degenerate tests
/// give 0.
pub fn check_team(
    table: &MatchTable,
    team: &str,
    tail_threshold: u32,
    prob_mode: ProbMode,
) -> Result<Probability> {
    if !table
        .records
        .iter()
        .any(|r| r.home_team.as_deref() == Some(team))
    {
        return Err(Error::UnknownTeam(team.to_string()));
    }
    let goals = table.team_goals(team);
    Ok(check_team_goals(team, &goals, tail_threshold, prob_mode).p_value())
}

/// Checks every home team, in first-appearance order.
pub fn check_all_teams(
    table: &MatchTable,
    tail_threshold: u32,
    prob_mode: ProbMode,
) -> Vec<TeamCheck> {
    table
        .home_teams()
        .par_iter()
        .map(|team| check_team_goals(team, &table.team_goals(team), tail_threshold, prob_mode))
        .collect()
}

/// Teams whose test is non-degenerate with p-value ≥ `alpha`, in
/// first-appearance order.
pub fn select_from_checks(checks: &[TeamCheck], alpha: f64) -> Result<Vec<String>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1)")));
    }
    let teams: Vec<String> = checks
        .iter()
        .filter(|c| c.result.as_ref().is_some_and(|r| r.p_value.get() >= alpha))
        .map(|c| c.team.clone())
        .collect();
    if teams.is_empty() {
        log::warn!("no team passed the Poisson check at alpha = {alpha}");
    }
    Ok(teams)
}

pub fn select_teams(
    table: &MatchTable,
    alpha: f64,
    tail_threshold: u32,
    prob_mode: ProbMode,
) -> Result<Vec<String>> {
    select_from_checks(&check_all_teams(table, tail_threshold, prob_mode), alpha)
}

/// Bins for a bare observed vector, labelled `0..` with a tail label.
pub fn bins_from_counts(counts: &[u64]) -> Vec<HistogramBin> {
    let t = counts.len().saturating_sub(2) as u32;
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistogramBin {
            label: if i + 1 < counts.len() {
                i.to_string()
            } else {
                tail_label(t)
            },
            count,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::MatchRecord;
    use approx::assert_relative_eq;

    /// Closed-form chi-square survival for even df.
    fn chi2_sf_even(x: f64, df: u32) -> f64 {
        let half = x / 2.0;
        let (mut term, mut sum) = (1.0, 1.0);
        for i in 1..df / 2 {
            term *= half / i as f64;
            sum += term;
        }
        (-half).exp() * sum
    }

    /// Chi-square survival for df = 1 via erfc of sqrt(x/2), using a
    /// continued fraction independent of the incomplete gamma code.
    fn chi2_sf_df1(x: f64) -> f64 {
        // P(|Z| > sqrt(x)) = 2 * (1 - Phi(sqrt(x))); Phi by Simpson quadrature.
        let z = x.sqrt();
        let n = 20_000;
        let h = z / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp();
        let mut s = f(0.0) + f(z);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let integral = s * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt();
        1.0 - 2.0 * integral
    }

    const LEAGUE_COUNTS: [u64; 7] = [1695, 2310, 1787, 885, 357, 122, 64];
    const LAMBDA: f64 = 1.522_438;

    #[test]
    fn rounded_table_reproduces_published_probs() {
        let table = poisson_probability_table(
            &bins_from_counts(&LEAGUE_COUNTS),
            LAMBDA,
            5,
            ProbMode::Rounded3,
        )
        .unwrap();
        let probs: Vec<f64> = table.rows.iter().map(|r| r.prob).collect();
        assert_eq!(probs, vec![0.218, 0.332, 0.253, 0.128, 0.049, 0.015, 0.005]);
        let expected: Vec<f64> = table.rows.iter().map(|r| r.expected.round()).collect();
        assert_eq!(
            expected,
            vec![1574.0, 2397.0, 1827.0, 924.0, 354.0, 108.0, 36.0]
        );
        assert_eq!(table.rows[6].label, "more than 5");
    }

    #[test]
    fn global_statistic_matches_published_test() {
        let table = poisson_probability_table(
            &bins_from_counts(&LEAGUE_COUNTS),
            LAMBDA,
            5,
            ProbMode::Rounded3,
        )
        .unwrap();
        let res = chisq_gof(&table).unwrap();
        assert!((res.statistic - 38.314).abs() < 0.01, "{}", res.statistic);
        assert_eq!(res.df, 6);
        assert!((res.p_value.get() - 9.752e-7).abs() < 1e-9);
        assert_relative_eq!(
            res.p_value.get(),
            chi2_sf_even(res.statistic, 6),
            max_relative = 1e-9
        );
    }

    #[test]
    fn exact_mode_sums_to_one_and_differs() {
        let table =
            poisson_probability_table(&bins_from_counts(&LEAGUE_COUNTS), LAMBDA, 5, ProbMode::Exact)
                .unwrap();
        let sum: f64 = table.rows.iter().map(|r| r.prob).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let res = chisq_gof(&table).unwrap();
        assert!(
            res.statistic > 40.0 && res.statistic < 45.0,
            "{}",
            res.statistic
        );
    }

    #[test]
    fn analytic_exact_probs_threshold_one() {
        let e = (-1.0f64).exp();
        let table =
            poisson_probability_table(&bins_from_counts(&[1, 1, 1]), 1.0, 1, ProbMode::Exact)
                .unwrap();
        let probs: Vec<f64> = table.rows.iter().map(|r| r.prob).collect();
        assert_relative_eq!(probs[0], e, max_relative = 1e-14);
        assert_relative_eq!(probs[1], e, max_relative = 1e-14);
        assert_relative_eq!(probs[2], 1.0 - 2.0 * e, max_relative = 1e-12);
    }

    #[test]
    fn zero_observed_gives_zero_expected() {
        let table =
            poisson_probability_table(&bins_from_counts(&[0; 7]), 2.0, 5, ProbMode::Exact).unwrap();
        assert!(table.rows.iter().all(|r| r.expected == 0.0));
        assert!(matches!(chisq_gof(&table), Err(Error::DegenerateBins(_))));
    }

    #[test]
    fn wrong_bin_count_rejected() {
        assert!(
            poisson_probability_table(&bins_from_counts(&[1, 2, 3]), 1.0, 5, ProbMode::Exact)
                .is_err()
        );
    }

    #[test]
    fn two_bin_hand_computation() {
        let table =
            GofTable::from_probs(vec!["a".into(), "b".into()], vec![3, 7], vec![0.5, 0.5]).unwrap();
        let res = chisq_gof(&table).unwrap();
        assert_relative_eq!(res.statistic, 1.6, max_relative = 1e-12);
        assert_eq!(res.df, 1);
        assert!((res.p_value.get() - 0.2059).abs() < 1e-3);
        assert!((res.p_value.get() - chi2_sf_df1(1.6)).abs() < 1e-6);
    }

    #[test]
    fn exact_fit_has_zero_statistic() {
        let table = GofTable::from_probs(
            vec!["a".into(), "b".into(), "c".into()],
            vec![25, 50, 25],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap();
        let res = chisq_gof(&table).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert_eq!(res.p_value.get(), 1.0);
    }

    #[test]
    fn probability_sum_checked() {
        assert!(matches!(
            GofTable::from_probs(vec!["a".into(), "b".into()], vec![1, 1], vec![0.5, 0.6]),
            Err(Error::ProbabilitySum(_))
        ));
    }

    #[test]
    fn statistic_permutation_invariant_and_scales() {
        let probs = vec![0.1, 0.2, 0.3, 0.4];
        let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let base =
            GofTable::from_probs(labels.clone(), vec![12, 18, 33, 37], probs.clone()).unwrap();
        let s = chisq_gof(&base).unwrap().statistic;

        let perm = GofTable::from_probs(
            vec!["2".into(), "0".into(), "3".into(), "1".into()],
            vec![33, 12, 37, 18],
            vec![0.3, 0.1, 0.4, 0.2],
        )
        .unwrap();
        assert_relative_eq!(chisq_gof(&perm).unwrap().statistic, s, max_relative = 1e-12);

        for m in [2u64, 3, 7] {
            let scaled = GofTable::from_probs(
                labels.clone(),
                vec![12 * m, 18 * m, 33 * m, 37 * m],
                probs.clone(),
            )
            .unwrap();
            assert_relative_eq!(
                chisq_gof(&scaled).unwrap().statistic,
                m as f64 * s,
                max_relative = 1e-12
            );
        }
    }

    fn team_records(team: &str, goals: &[u32]) -> Vec<MatchRecord> {
        goals
            .iter()
            .map(|&g| MatchRecord {
                home_team: Some(team.into()),
                fthg: Some(g),
                ..MatchRecord::default()
            })
            .collect()
    }

    /// Expands bin counts into a goal vector; the tail bin becomes `tail_goal`.
    fn goals_from_bins(counts: &[u32; 7], tail_goal: u32) -> Vec<u32> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| {
                std::iter::repeat_n(if k == 6 { tail_goal } else { k as u32 }, c as usize)
            })
            .collect()
    }

    /// Independent evaluation of the per-team test with rounded probs.
    fn oracle_team_p(goals: &[u32]) -> f64 {
        let n = goals.len() as f64;
        let lambda = goals.iter().map(|&g| g as f64).sum::<f64>() / n;
        let mut pmf = vec![(-lambda).exp()];
        for k in 1..=5 {
            let prev = pmf[k - 1];
            pmf.push(prev * lambda / k as f64);
        }
        let mut probs: Vec<f64> = pmf.iter().map(|p| (p * 1000.0).round() / 1000.0).collect();
        let tail = ((1.0 - probs.iter().sum::<f64>()) * 1000.0).round() / 1000.0;
        let mut obs = [0f64; 7];
        for &g in goals {
            obs[(g as usize).min(6)] += 1.0;
        }
        let mut o: Vec<f64> = obs.to_vec();
        if tail > 0.0 {
            probs.push(tail);
        } else {
            let t = o.pop().unwrap();
            o[5] += t;
        }
        let stat: f64 = o
            .iter()
            .zip(&probs)
            .map(|(o, p)| (o - n * p).powi(2) / (n * p))
            .sum();
        if probs.len() == 7 {
            chi2_sf_even(stat, 6)
        } else {
            // df 5: Q(5/2, x/2) = erfc(sqrt(x/2)) + exp(-x/2) * sqrt(2x/pi) * (1 + x/3)
            let h = stat / 2.0;
            let erfc_part = chi2_sf_df1(stat);
            erfc_part + (-h).exp() * (2.0 * stat / std::f64::consts::PI).sqrt() * (1.0 + stat / 3.0)
        }
    }

    #[test]
    fn team_selection_three_team_fixture() {
        let good = goals_from_bins(&[22, 33, 25, 12, 5, 2, 1], 6);
        let bad = goals_from_bins(&[40, 5, 5, 5, 10, 10, 10], 8);
        let ok = goals_from_bins(&[21, 34, 26, 13, 4, 2, 0], 6);
        let mut recs = team_records("Alpha", &good);
        recs.extend(team_records("Beta", &bad));
        recs.extend(team_records("Gamma", &ok));
        let table = MatchTable::from_records(recs);

        let p: Vec<f64> = ["Alpha", "Beta", "Gamma"]
            .iter()
            .map(|t| check_team(&table, t, 5, ProbMode::Rounded3).unwrap().get())
            .collect();
        let want = [
            oracle_team_p(&good),
            oracle_team_p(&bad),
            oracle_team_p(&ok),
        ];
        for (got, want) in p.iter().zip(want) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        assert!(p[0] > 0.05 && p[1] < 0.05 && p[2] > 0.05);

        let selected = select_teams(&table, 0.05, 5, ProbMode::Rounded3).unwrap();
        assert_eq!(selected, vec!["Alpha", "Gamma"]);

        // threshold just above Alpha's p-value excludes it
        let above = select_teams(&table, p[0] + 1e-9, 5, ProbMode::Rounded3).unwrap();
        assert!(!above.contains(&"Alpha".to_string()));
    }

    #[test]
    fn degenerate_teams_get_zero_and_alpha_zero_keeps_the_rest() {
        let mut recs = team_records("Solo", &[2]);
        recs.extend(team_records("Flat", &[1, 1, 1, 1]));
        recs.extend(team_records(
            "Real",
            &goals_from_bins(&[22, 33, 25, 12, 5, 2, 1], 6),
        ));
        let table = MatchTable::from_records(recs);
        assert_eq!(
            check_team(&table, "Solo", 5, ProbMode::Rounded3)
                .unwrap()
                .get(),
            0.0
        );
        assert_eq!(
            check_team(&table, "Flat", 5, ProbMode::Rounded3)
                .unwrap()
                .get(),
            0.0
        );
        assert!(matches!(
            check_team(&table, "Nobody", 5, ProbMode::Rounded3),
            Err(Error::UnknownTeam(_))
        ));
        assert_eq!(
            select_teams(&table, 0.0, 5, ProbMode::Rounded3).unwrap(),
            vec!["Real"]
        );
    }

    #[test]
    fn zero_tail_probability_collapses_into_last_head_bin() {
        // λ small enough that the rounded tail is 0.000
        let goals = goals_from_bins(&[60, 30, 8, 2, 0, 0, 0], 6);
        let res = team_gof(&goals, 5, ProbMode::Rounded3);
        // bins 4 and 5 still have rounded prob 0 -> degenerate
        assert!(res.is_none());

        let goals = goals_from_bins(&[20, 30, 25, 14, 7, 4, 0], 6);
        let res = team_gof(&goals, 5, ProbMode::Rounded3).unwrap();
        assert!(res.table.rows.len() == 6 || res.table.rows.len() == 7);
        let total: u64 = res.table.rows.iter().map(|r| r.observed).sum();
        assert_eq!(total, goals.len() as u64);
    }
}
