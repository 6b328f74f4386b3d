use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bracket::{CombinationCounts, TournamentResult};
use crate::data_io::TournamentConfig;
use crate::error::{Error, Result};

/// Marker for probabilities too small to show at four decimals of a percent.
pub const TINY_MARK: &str = "\u{2217}";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Table,
    JsonLines,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "json-lines" => Ok(OutputFormat::JsonLines),
            other => Err(Error::InvalidParameter(format!(
                "unknown format `{other}` (table, json-lines)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRow {
    pub index: usize,
    pub name: String,
    pub group: String,
    /// Probability of reaching each labelled stage.
    pub reach: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub schedule: String,
    pub sigma: f64,
    pub labels: Vec<String>,
    pub teams: Vec<TeamRow>,
    pub combos: Option<CombinationCounts>,
}

impl Report {
    pub fn new(config: &TournamentConfig, sigma: f64, result: &TournamentResult) -> Self {
        let teams = result
            .reach
            .probs
            .iter()
            .enumerate()
            .map(|(i, row)| TeamRow {
                index: i,
                name: config.teams.name(i).to_string(),
                group: config.teams.group_label(i).to_string(),
                reach: row.clone(),
            })
            .collect();
        Self {
            name: config.name.clone(),
            schedule: config.schedule.name.clone(),
            sigma,
            labels: result.reach.labels.clone(),
            teams,
            combos: Some(result.combos.clone()),
        }
    }

    pub fn champion(&self) -> Vec<f64> {
        self.teams
            .iter()
            .map(|t| *t.reach.last().expect("at least one stage"))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Meta {
        name: String,
        schedule: String,
        sigma: f64,
        labels: Vec<String>,
    },
    Team(TeamRow),
    Combos(CombinationCounts),
}

/// A probability as a percentage with up to four decimals.
pub fn format_percent(p: f64) -> String {
    let v = p * 100.0;
    if v <= 0.0 {
        return "0".into();
    }
    if v < 0.00005 {
        return TINY_MARK.into();
    }
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn emit_report(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => table(report),
        OutputFormat::JsonLines => json_lines(report),
    }
}

fn table(r: &Report) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{} ({} schedule, sigma = {})",
        r.name, r.schedule, r.sigma
    )
    .unwrap();
    let name_w = r
        .teams
        .iter()
        .map(|t| t.name.chars().count())
        .max()
        .unwrap_or(4)
        .max(4);
    let col_w = r.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
    write!(out, "{:<name_w$}  {:<5}", "Team", "Group").unwrap();
    for l in &r.labels {
        write!(out, "  {l:>col_w$}").unwrap();
    }
    out.push('\n');
    for t in &r.teams {
        write!(out, "{:<name_w$}  {:<5}", t.name, t.group).unwrap();
        for &p in &t.reach {
            write!(out, "  {:>col_w$}", format_percent(p)).unwrap();
        }
        out.push('\n');
    }
    if let Some(c) = &r.combos {
        out.push_str("\nCombinations per round (full range / support):\n");
        for round in &c.rounds {
            writeln!(
                out,
                "  {:<12} {:>10} {:>10}",
                round.label, round.full_range, round.support
            )
            .unwrap();
        }
        writeln!(
            out,
            "  {:<12} {:>10} {:>10}",
            "total",
            c.total_full_range(),
            c.total_support()
        )
        .unwrap();
    }
    out
}

fn json_lines(r: &Report) -> String {
    let mut lines = vec![Line::Meta {
        name: r.name.clone(),
        schedule: r.schedule.clone(),
        sigma: r.sigma,
        labels: r.labels.clone(),
    }];
    lines.extend(r.teams.iter().cloned().map(Line::Team));
    if let Some(c) = &r.combos {
        lines.push(Line::Combos(c.clone()));
    }
    let mut out = String::new();
    for l in &lines {
        out.push_str(&serde_json::to_string(l).expect("report serializes"));
        out.push('\n');
    }
    out
}

/// Inverse of the `json-lines` output.
pub fn parse_json_lines(text: &str) -> Result<Report> {
    let mut meta = None;
    let mut teams = Vec::new();
    let mut combos = None;
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: "<json-lines>".into(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        match parsed {
            Line::Meta {
                name,
                schedule,
                sigma,
                labels,
            } => meta = Some((name, schedule, sigma, labels)),
            Line::Team(t) => teams.push(t),
            Line::Combos(c) => combos = Some(c),
        }
    }
    let (name, schedule, sigma, labels) =
        meta.ok_or_else(|| Error::Data("json-lines report has no meta line".into()))?;
    Ok(Report {
        name,
        schedule,
        sigma,
        labels,
        teams,
        combos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_rendering() {
        assert_eq!(format_percent(1.0 / 32.0), "3.125");
        assert_eq!(format_percent(1.0), "100");
        assert_eq!(format_percent(0.0), "0");
        assert_eq!(format_percent(1e-7), TINY_MARK);
        assert_eq!(format_percent(4.9e-7), TINY_MARK);
        assert_eq!(format_percent(6e-7), "0.0001");
        assert_eq!(format_percent(0.123456), "12.3456");
    }

    #[test]
    fn json_lines_round_trip() {
        let r = Report {
            name: "t".into(),
            schedule: "mini2".into(),
            sigma: 360.0,
            labels: vec!["Final".into(), "Champion".into()],
            teams: vec![TeamRow {
                index: 0,
                name: "x".into(),
                group: "A".into(),
                reach: vec![0.1 + 0.2, 1.0 / 3.0],
            }],
            combos: None,
        };
        let text = emit_report(&r, OutputFormat::JsonLines);
        assert_eq!(parse_json_lines(&text).unwrap(), r);
        assert!(text
            .lines()
            .next()
            .unwrap()
            .starts_with("{\"type\":\"meta\""));
    }
}
