//! Configuration, ratings, overrides and odds input; report output.

mod config;
mod odds;
mod overrides;
mod report;

pub use config::{
    bundled_config_names, load_config, load_config_str, parse_ratings_csv, GroupEntry, TeamIndex,
    TournamentConfig, BUNDLED_CONFIGS,
};
pub use odds::{parse_odds_csv, OddsTable};
pub use overrides::{format_overrides_csv, parse_overrides_csv};
pub use report::{emit_report, format_percent, parse_json_lines, OutputFormat, Report, TeamRow};

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

/// Deserialize TOML, reporting failures with 1-based line and column.
pub fn parse_toml<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::Parse {
            path: origin.to_string(),
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
