use serde::Deserialize;

use crate::data_io::config::csv_error;
use crate::data_io::TeamIndex;
use crate::error::{Error, Result};

/// Accepted range for the summed inverse odds (bookmaker overround).
pub const OVERROUND_RANGE: (f64, f64) = (0.9, 1.3);

/// Championship odds per team, aligned to team indices.
#[derive(Debug, Clone, PartialEq)]
pub struct OddsTable {
    pub decimal_odds: Vec<f64>,
}

impl OddsTable {
    /// Build from implied probabilities (e.g. a model's own output).
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Data("implied probabilities must be positive".into()));
        }
        Ok(Self {
            decimal_odds: probs.iter().map(|p| 1.0 / p).collect(),
        })
    }

    pub fn overround(&self) -> f64 {
        self.decimal_odds.iter().map(|o| 1.0 / o).sum()
    }

    /// Inverse odds normalized to sum to one.
    pub fn implied_probabilities(&self) -> Result<Vec<f64>> {
        let total = self.overround();
        if !(OVERROUND_RANGE.0..=OVERROUND_RANGE.1).contains(&total) {
            return Err(Error::Data(format!(
                "inverse odds sum to {total:.4}, outside [{}, {}]",
                OVERROUND_RANGE.0, OVERROUND_RANGE.1
            )));
        }
        Ok(self.decimal_odds.iter().map(|o| 1.0 / o / total).collect())
    }
}

#[derive(Debug, Deserialize)]
struct OddsRow {
    team: String,
    decimal_odds: f64,
}

/// `team,decimal_odds` with a header row; every team needs a row.
pub fn parse_odds_csv(text: &str, origin: &str, teams: &TeamIndex) -> Result<OddsTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut odds = vec![None; teams.len()];
    for row in rdr.deserialize::<OddsRow>() {
        let row = row.map_err(|e| csv_error(origin, e))?;
        let i = teams
            .require(&row.team)
            .map_err(|e| Error::Data(format!("{origin}: {e}")))?;
        if !(row.decimal_odds > 0.0 && row.decimal_odds.is_finite()) {
            return Err(Error::Data(format!(
                "{origin}: odds for `{}` must be positive",
                row.team
            )));
        }
        if odds[i].replace(row.decimal_odds).is_some() {
            return Err(Error::Data(format!(
                "{origin}: `{}` listed twice",
                row.team
            )));
        }
    }
    let missing: Vec<_> = (0..teams.len())
        .filter(|&i| odds[i].is_none())
        .map(|i| teams.name(i).to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "{origin}: no odds for {}",
            missing.join(", ")
        )));
    }
    Ok(OddsTable {
        decimal_odds: odds.into_iter().map(|o| o.expect("checked")).collect(),
    })
}
