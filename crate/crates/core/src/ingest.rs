//! Season CSV ingestion in the football-data.co.uk layout, missingness
//! pruning, descriptive statistics and model-frame construction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{CategoricalColumn, ModelFrame, NumericColumn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Column {
    Date,
    HomeTeam,
    AwayTeam,
    Fthg,
    Htag,
    Hst,
    Hc,
    Hr,
    Ar,
    Attendance,
    Hhw,
    Ho,
    Referee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Date,
    Categorical,
    Count,
}

impl Column {
    pub const ALL: [Column; 13] = [
        Column::Date,
        Column::HomeTeam,
        Column::AwayTeam,
        Column::Fthg,
        Column::Htag,
        Column::Hst,
        Column::Hc,
        Column::Hr,
        Column::Ar,
        Column::Attendance,
        Column::Hhw,
        Column::Ho,
        Column::Referee,
    ];

    /// Columns the home-goals model needs.
    pub const MODELING: [Column; 7] = [
        Column::HomeTeam,
        Column::Fthg,
        Column::Htag,
        Column::Hst,
        Column::Hc,
        Column::Hr,
        Column::Ar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Date => "Date",
            Column::HomeTeam => "HomeTeam",
            Column::AwayTeam => "AwayTeam",
            Column::Fthg => "FTHG",
            Column::Htag => "HTAG",
            Column::Hst => "HST",
            Column::Hc => "HC",
            Column::Hr => "HR",
            Column::Ar => "AR",
            Column::Attendance => "Attendance",
            Column::Hhw => "HHW",
            Column::Ho => "HO",
            Column::Referee => "Referee",
        }
    }

    /// Case-sensitive lookup by header name.
    pub fn from_name(name: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn kind(self) -> ColumnKind {
        match self {
            Column::Date => ColumnKind::Date,
            Column::HomeTeam | Column::AwayTeam | Column::Referee => ColumnKind::Categorical,
            _ => ColumnKind::Count,
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One match row. Every field is optional at the cell level; a cell is
/// `None` when the season file lacks the column or the value is malformed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchRecord {
    pub date: Option<NaiveDate>,
    pub home_team: Option<String>,
    pub away_team: Option<String>,
    pub fthg: Option<u32>,
    pub htag: Option<u32>,
    pub hst: Option<u32>,
    pub hc: Option<u32>,
    pub hr: Option<u32>,
    pub ar: Option<u32>,
    pub attendance: Option<u32>,
    pub hhw: Option<u32>,
    pub ho: Option<u32>,
    pub referee: Option<String>,
    /// Unrecognized columns, kept verbatim.
    pub extra: BTreeMap<String, String>,
    /// Index into [`MatchTable::source_files`].
    pub source: usize,
}

impl MatchRecord {
    pub fn count(&self, col: Column) -> Option<u32> {
        match col {
            Column::Fthg => self.fthg,
            Column::Htag => self.htag,
            Column::Hst => self.hst,
            Column::Hc => self.hc,
            Column::Hr => self.hr,
            Column::Ar => self.ar,
            Column::Attendance => self.attendance,
            Column::Hhw => self.hhw,
            Column::Ho => self.ho,
            _ => None,
        }
    }

    pub fn text(&self, col: Column) -> Option<&str> {
        match col {
            Column::HomeTeam => self.home_team.as_deref(),
            Column::AwayTeam => self.away_team.as_deref(),
            Column::Referee => self.referee.as_deref(),
            _ => None,
        }
    }

    pub fn is_present(&self, col: Column) -> bool {
        match col.kind() {
            ColumnKind::Date => self.date.is_some(),
            ColumnKind::Categorical => self.text(col).is_some(),
            ColumnKind::Count => self.count(col).is_some(),
        }
    }

    fn clear(&mut self, col: Column) {
        match col {
            Column::Date => self.date = None,
            Column::HomeTeam => self.home_team = None,
            Column::AwayTeam => self.away_team = None,
            Column::Fthg => self.fthg = None,
            Column::Htag => self.htag = None,
            Column::Hst => self.hst = None,
            Column::Hc => self.hc = None,
            Column::Hr => self.hr = None,
            Column::Ar => self.ar = None,
            Column::Attendance => self.attendance = None,
            Column::Hhw => self.hhw = None,
            Column::Ho => self.ho = None,
            Column::Referee => self.referee = None,
        }
    }

    fn set(&mut self, col: Column, raw: &str) {
        let raw = raw.trim();
        match col.kind() {
            ColumnKind::Date => self.date = parse_date(raw),
            ColumnKind::Categorical => {
                let v = (!is_missing_token(raw)).then(|| raw.to_string());
                match col {
                    Column::HomeTeam => self.home_team = v,
                    Column::AwayTeam => self.away_team = v,
                    _ => self.referee = v,
                }
            }
            ColumnKind::Count => {
                let v = parse_count(raw);
                match col {
                    Column::Fthg => self.fthg = v,
                    Column::Htag => self.htag = v,
                    Column::Hst => self.hst = v,
                    Column::Hc => self.hc = v,
                    Column::Hr => self.hr = v,
                    Column::Ar => self.ar = v,
                    Column::Attendance => self.attendance = v,
                    Column::Hhw => self.hhw = v,
                    _ => self.ho = v,
                }
            }
        }
    }
}

fn is_missing_token(raw: &str) -> bool {
    raw.is_empty() || raw.eq_ignore_ascii_case("na")
}

fn parse_count(raw: &str) -> Option<u32> {
    if is_missing_token(raw) {
        return None;
    }
    if let Ok(v) = raw.parse::<u32>() {
        return Some(v);
    }
    // Some seasons write counts as "3.0".
    match raw.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Some(v as u32),
        _ => None,
    }
}

/// Accepts `dd/mm/yy` and `dd/mm/yyyy`.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let year = raw.rsplit('/').next()?;
    let fmt = match year.len() {
        2 => "%d/%m/%y",
        4 => "%d/%m/%Y",
        _ => return None,
    };
    NaiveDate::parse_from_str(raw, fmt).ok()
}

/// Why a column was removed by [`prune_columns`].
#[derive(Debug, Clone, PartialEq)]
pub enum PruneReason {
    Missing { fraction: f64 },
    TooManyLevels { levels: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchTable {
    pub records: Vec<MatchRecord>,
    /// Known columns still carried by the table, in canonical order.
    pub columns: Vec<Column>,
    pub source_files: Vec<PathBuf>,
    pub pruned: Vec<(Column, PruneReason)>,
}

impl MatchTable {
    pub fn from_records(records: Vec<MatchRecord>) -> Self {
        MatchTable {
            records,
            columns: Column::ALL.to_vec(),
            source_files: Vec::new(),
            pruned: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_column(&self, col: Column) -> bool {
        self.columns.contains(&col)
    }

    pub fn column_missing_counts(&self) -> Vec<(Column, usize)> {
        self.columns
            .iter()
            .map(|&c| (c, self.records.iter().filter(|r| !r.is_present(c)).count()))
            .collect()
    }

    /// Home teams in order of first appearance.
    pub fn home_teams(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.records
            .iter()
            .filter_map(|r| r.home_team.as_deref())
            .filter(|t| seen.insert(*t))
            .map(str::to_string)
            .collect()
    }

    /// Home-match counts per team, in first-appearance order.
    pub fn home_match_counts(&self) -> Vec<(String, usize)> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in self.records.iter().filter_map(|r| r.home_team.as_deref()) {
            *counts.entry(t).or_default() += 1;
        }
        self.home_teams()
            .into_iter()
            .map(|t| {
                let c = counts[t.as_str()];
                (t, c)
            })
            .collect()
    }

    /// Non-missing home goals of one team.
    pub fn team_goals(&self, team: &str) -> Vec<u32> {
        self.records
            .iter()
            .filter(|r| r.home_team.as_deref() == Some(team))
            .filter_map(|r| r.fthg)
            .collect()
    }

    pub fn goals(&self) -> Vec<u32> {
        self.records.iter().filter_map(|r| r.fthg).collect()
    }
}

fn decode(bytes: Vec<u8>) -> String {
    match String::from_utf8(bytes) {
        Ok(s) => s,
        // Latin-1 maps each byte to the code point of the same value.
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    }
}

/// Parses one season file's text. `source` is the file's index in the
/// merged table and `path` is only used for error messages.
pub fn parse_season(text: &str, source: usize, path: &Path) -> Result<Vec<MatchRecord>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let mapping: Vec<(usize, Option<Column>, String)> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (i, Column::from_name(h.trim()), h.trim().to_string()))
        .collect();
    for required in [Column::Date, Column::HomeTeam, Column::Fthg] {
        if !mapping.iter().any(|(_, c, _)| *c == Some(required)) {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("header lacks required column {required}"),
            });
        }
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if row.iter().all(|cell| cell.trim().is_empty()) {
            continue;
        }
        let mut rec = MatchRecord {
            source,
            ..MatchRecord::default()
        };
        for (i, col, name) in &mapping {
            let cell = row.get(*i).unwrap_or("");
            match col {
                Some(c) => rec.set(*c, cell),
                None if !name.is_empty() && !cell.is_empty() => {
                    rec.extra.insert(name.clone(), cell.to_string());
                }
                None => {}
            }
        }
        records.push(rec);
    }
    Ok(records)
}

/// Reads and merges season files in the given order.
pub fn load_matches<P: AsRef<Path> + Sync>(paths: &[P]) -> Result<MatchTable> {
    let parsed: Vec<Vec<MatchRecord>> = paths
        .par_iter()
        .enumerate()
        .map(|(idx, p)| {
            let path = p.as_ref();
            let bytes = std::fs::read(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            parse_season(&decode(bytes), idx, path)
        })
        .collect::<Result<_>>()?;
    let records = parsed.into_iter().flatten().collect();
    Ok(MatchTable {
        records,
        columns: Column::ALL.to_vec(),
        source_files: paths.iter().map(|p| p.as_ref().to_path_buf()).collect(),
        pruned: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingEntry {
    pub column: Column,
    pub missing: usize,
    pub fraction: f64,
}

pub fn missingness_report(table: &MatchTable) -> Vec<MissingEntry> {
    let n = table.len();
    table
        .column_missing_counts()
        .into_iter()
        .map(|(column, missing)| MissingEntry {
            column,
            missing,
            fraction: if n == 0 {
                0.0
            } else {
                missing as f64 / n as f64
            },
        })
        .collect()
}

/// Drops columns whose missing fraction exceeds `missing_threshold` and
/// categorical columns with more than `max_category_levels` distinct values.
/// HomeTeam and FTHG may not be dropped.
pub fn prune_columns(
    table: &MatchTable,
    missing_threshold: f64,
    max_category_levels: usize,
) -> Result<MatchTable> {
    if !(0.0..=1.0).contains(&missing_threshold) {
        return Err(Error::Config(format!(
            "missing threshold {missing_threshold} outside [0, 1]"
        )));
    }
    let mut dropped = Vec::new();
    for entry in missingness_report(table) {
        if entry.fraction > missing_threshold {
            dropped.push((
                entry.column,
                PruneReason::Missing {
                    fraction: entry.fraction,
                },
            ));
            continue;
        }
        if entry.column.kind() == ColumnKind::Categorical {
            let levels = table
                .records
                .iter()
                .filter_map(|r| r.text(entry.column))
                .collect::<BTreeSet<_>>()
                .len();
            if levels > max_category_levels {
                dropped.push((entry.column, PruneReason::TooManyLevels { levels }));
            }
        }
    }
    if let Some((col, why)) = dropped
        .iter()
        .find(|(c, _)| matches!(c, Column::Fthg | Column::HomeTeam))
    {
        return Err(Error::Config(format!(
            "pruning would drop required column {col} ({why:?})"
        )));
    }
    let mut out = table.clone();
    for (col, why) in &dropped {
        log::info!("dropping column {col}: {why:?}");
        for r in &mut out.records {
            r.clear(*col);
        }
    }
    out.columns.retain(|c| !dropped.iter().any(|(d, _)| d == c));
    out.pruned.extend(dropped);
    Ok(out)
}

/// Five-number summary plus mean, sd, n and missing count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    pub missing: usize,
}

/// Type-7 quantile (linear interpolation, `h = (n − 1)p`) of sorted data.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl SummaryStats {
    /// Statistics of `values`; an empty slice yields NaN location fields.
    pub fn from_values(values: &[f64], missing: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            sorted.iter().sum::<f64>() / n as f64
        };
        let sd = if n < 2 {
            if n == 1 {
                0.0
            } else {
                f64::NAN
            }
        } else {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        SummaryStats {
            min: sorted.first().copied().unwrap_or(f64::NAN),
            q1: quantile_type7(&sorted, 0.25),
            median: quantile_type7(&sorted, 0.5),
            q3: quantile_type7(&sorted, 0.75),
            max: sorted.last().copied().unwrap_or(f64::NAN),
            mean,
            sd,
            n,
            missing,
        }
    }
}

pub fn describe(table: &MatchTable, column: &str) -> Result<SummaryStats> {
    let col = Column::from_name(column)
        .filter(|c| table.has_column(*c))
        .ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
    if col.kind() != ColumnKind::Count {
        return Err(Error::NonNumericColumn(column.to_string()));
    }
    let values: Vec<f64> = table
        .records
        .iter()
        .filter_map(|r| r.count(col))
        .map(f64::from)
        .collect();
    let missing = table.len() - values.len();
    Ok(SummaryStats::from_values(&values, missing))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogMode {
    /// `ln(x)`, rows with a zero count are excluded.
    #[default]
    PlainLogDropZeros,
    /// `ln(1 + x)`, every row kept.
    Log1p,
}

impl LogMode {
    pub fn transform(self, x: u32) -> Option<f64> {
        match self {
            LogMode::PlainLogDropZeros => (x > 0).then(|| f64::from(x).ln()),
            LogMode::Log1p => Some(f64::from(x).ln_1p()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogMode::PlainLogDropZeros => "plain-log-drop-zeros",
            LogMode::Log1p => "log1p",
        }
    }
}

impl std::str::FromStr for LogMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain-log-drop-zeros" | "plain" => Ok(LogMode::PlainLogDropZeros),
            "log1p" => Ok(LogMode::Log1p),
            other => Err(Error::Config(format!("unknown log mode `{other}`"))),
        }
    }
}

/// Names of the model-frame columns produced by [`build_model_frame`].
pub const RESPONSE: &str = "FTHG";
pub const TEAM: &str = "HomeTeam";
pub const NUMERIC_COVARIATES: [&str; 5] = ["HTAG", "logHST", "logHC", "HR", "AR"];

/// Restricts to `teams`, drops rows with missing modeling cells and applies
/// the log transform to HST and HC.
pub fn build_model_frame<S: AsRef<str>>(
    table: &MatchTable,
    teams: &[S],
    log_mode: LogMode,
) -> Result<ModelFrame> {
    if teams.is_empty() {
        return Err(Error::Config("team list is empty".into()));
    }
    if let Some(missing) = Column::MODELING.iter().find(|c| !table.has_column(**c)) {
        return Err(Error::UnknownColumn(missing.name().to_string()));
    }
    let wanted: BTreeSet<&str> = teams.iter().map(|t| t.as_ref()).collect();

    let mut response = Vec::new();
    let mut numeric: [Vec<f64>; 5] = Default::default();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    let mut excluded = 0usize;
    for (id, r) in table.records.iter().enumerate() {
        let Some(team) = r.home_team.as_deref().filter(|t| wanted.contains(t)) else {
            continue;
        };
        let (Some(y), Some(htag), Some(hst), Some(hc), Some(hr), Some(ar)) =
            (r.fthg, r.htag, r.hst, r.hc, r.hr, r.ar)
        else {
            continue;
        };
        let (Some(log_hst), Some(log_hc)) = (log_mode.transform(hst), log_mode.transform(hc))
        else {
            excluded += 1;
            continue;
        };
        response.push(y);
        for (col, v) in numeric.iter_mut().zip([
            f64::from(htag),
            log_hst,
            log_hc,
            f64::from(hr),
            f64::from(ar),
        ]) {
            col.push(v);
        }
        labels.push(team);
        ids.push(id);
    }
    if response.is_empty() {
        return Err(Error::EmptyFrame(format!(
            "no complete rows for the {} selected teams",
            wanted.len()
        )));
    }
    if excluded > 0 {
        log::info!("{excluded} rows excluded by the zero-count log rule");
    }
    let numeric = NUMERIC_COVARIATES
        .iter()
        .zip(numeric)
        .map(|(name, values)| NumericColumn {
            name: name.to_string(),
            values,
        })
        .collect();
    let team = CategoricalColumn::from_labels(TEAM, &labels);
    let mut frame = ModelFrame::new(RESPONSE, response, numeric, vec![team], ids)?;
    frame.excluded_log_zero = excluded;
    Ok(frame)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramBin {
    pub label: String,
    pub count: u64,
}

pub fn tail_label(threshold: u32) -> String {
    format!("more than {threshold}")
}

/// Bins goal counts into `0..=threshold` plus one tail bin.
pub fn histogram_of(goals: &[u32], tail_threshold: u32) -> Vec<HistogramBin> {
    let t = tail_threshold as usize;
    let mut counts = vec![0u64; t + 2];
    for &g in goals {
        counts[(g as usize).min(t + 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            label: if i <= t {
                i.to_string()
            } else {
                tail_label(tail_threshold)
            },
            count,
        })
        .collect()
}

pub fn goal_histogram(table: &MatchTable, tail_threshold: u32) -> Vec<HistogramBin> {
    histogram_of(&table.goals(), tail_threshold)
}
