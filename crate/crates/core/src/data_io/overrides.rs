use crate::data_io::config::csv_error;
use crate::data_io::TeamIndex;
use crate::error::{Error, Result};
use crate::match_model::{MatchResult, OutcomeOverride, Stage};

/// One override per line: `stage,team_a,team_b,result`, teams by name.
/// A header line and `#` comments are allowed.
pub fn parse_overrides_csv(
    text: &str,
    origin: &str,
    teams: &TeamIndex,
) -> Result<Vec<OutcomeOverride>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(origin, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fail = |message: String| Error::Parse {
            path: origin.to_string(),
            line,
            column: 0,
            message,
        };
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 4 {
            return Err(fail(format!(
                "expected 4 fields (stage,team_a,team_b,result), got {}",
                rec.len()
            )));
        }
        if out.is_empty() && &rec[0] == "stage" {
            continue;
        }
        let stage: Stage = rec[0].parse().map_err(|e: Error| fail(e.to_string()))?;
        let team_a = teams.require(&rec[1]).map_err(|e| fail(e.to_string()))?;
        let team_b = teams.require(&rec[2]).map_err(|e| fail(e.to_string()))?;
        let result: MatchResult = rec[3].parse().map_err(|e: Error| fail(e.to_string()))?;
        let o = OutcomeOverride {
            stage,
            team_a,
            team_b,
            result,
        };
        o.validate(teams.len()).map_err(|e| fail(e.to_string()))?;
        out.push(o);
    }
    Ok(out)
}

pub fn format_overrides_csv(overrides: &[OutcomeOverride], teams: &TeamIndex) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stage", "team_a", "team_b", "result"])
        .expect("in-memory write");
    for o in overrides {
        w.write_record([
            o.stage.to_string().as_str(),
            teams.name(o.team_a),
            teams.name(o.team_b),
            o.result.to_string().as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
