use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bracket::ScheduleDescriptor;
use crate::data_io::{line_col, parse_overrides_csv, parse_toml};
use crate::error::{Error, Result};
use crate::match_model::{
    build_matrices, KnockoutRule, MatchMatrices, ModelParams, OutcomeOverride, SigmaPreset,
    TeamRating,
};

pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("men-2022", include_str!("../../data/configs/men-2022.toml")),
    (
        "women-2023",
        include_str!("../../data/configs/women-2023.toml"),
    ),
];

const BUNDLED_FILES: &[(&str, &str)] = &[
    (
        "men-2022-ratings.csv",
        include_str!("../../data/configs/men-2022-ratings.csv"),
    ),
    (
        "women-2023-ratings.csv",
        include_str!("../../data/configs/women-2023-ratings.csv"),
    ),
];

pub fn bundled_config_names() -> Vec<&'static str> {
    BUNDLED_CONFIGS.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    ratings: String,
    schedule: String,
    sigma: Option<f64>,
    sigma_preset: Option<String>,
    knockout_rule: Option<String>,
    overrides: Option<String>,
    groups: Vec<GroupEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub label: String,
    /// Team names in pot order.
    pub teams: Vec<String>,
}

/// Team name and group for every global index.
///
/// Index `i` is team `i % k` of the group at bracket position `i / k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamIndex {
    names: Vec<String>,
    groups: Vec<String>,
    #[serde(skip)]
    by_name: HashMap<String, usize>,
}

impl TeamIndex {
    pub fn new(names: Vec<String>, groups: Vec<String>) -> Result<Self> {
        let mut by_name = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if by_name.insert(n.clone(), i).is_some() {
                return Err(Error::Data(format!("team `{n}` listed twice")));
            }
        }
        Ok(Self {
            names,
            groups,
            by_name,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index(name)
            .ok_or_else(|| Error::Data(format!("unknown team `{name}`")))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn group_label(&self, i: usize) -> &str {
        &self.groups[i]
    }
}

/// A validated tournament: teams indexed in bracket order with ratings,
/// model parameters and any fixed results.
#[derive(Debug, Clone)]
pub struct TournamentConfig {
    pub name: String,
    pub schedule: ScheduleDescriptor,
    pub sigma: f64,
    pub sigma_preset: Option<SigmaPreset>,
    pub knockout_rule: KnockoutRule,
    /// Groups in bracket order.
    pub groups: Vec<GroupEntry>,
    /// `ratings[i].team_id == i`.
    pub ratings: Vec<TeamRating>,
    pub overrides: Vec<OutcomeOverride>,
    pub teams: TeamIndex,
}

impl TournamentConfig {
    /// One of the configs shipped with the library.
    pub fn bundled(name: &str) -> Result<Self> {
        let (_, text) = BUNDLED_CONFIGS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                Error::Data(format!(
                    "unknown bundled config `{name}` (available: {})",
                    bundled_config_names().join(", ")
                ))
            })?;
        load_config_str(text, &format!("<bundled {name}>"), &|file| {
            BUNDLED_FILES
                .iter()
                .find(|(n, _)| *n == file)
                .map(|(_, t)| t.to_string())
                .ok_or_else(|| {
                    Error::Data(format!("bundled config refers to missing file `{file}`"))
                })
        })
    }

    /// The same teams under another schedule. Groups are re-placed by label,
    /// so team indices may change; overrides follow their teams.
    pub fn with_schedule(&self, schedule: ScheduleDescriptor) -> Result<Self> {
        schedule.validate()?;
        let k = schedule.group_size;
        let mut groups = Vec::with_capacity(schedule.num_groups);
        for label in &schedule.bracket_group_order {
            let g = self
                .groups
                .iter()
                .find(|g| &g.label == label)
                .ok_or_else(|| {
                    Error::Validation(vec![format!(
                        "schedule `{}` needs group `{label}`, config has none",
                        schedule.name
                    )])
                })?;
            if g.teams.len() != k {
                return Err(Error::Validation(vec![format!(
                    "group `{label}` has {} teams, schedule `{}` needs {k}",
                    g.teams.len(),
                    schedule.name
                )]));
            }
            groups.push(g.clone());
        }
        if groups.len() != self.groups.len() {
            return Err(Error::Validation(vec![format!(
                "schedule `{}` has {} groups, config has {}",
                schedule.name,
                groups.len(),
                self.groups.len()
            )]));
        }
        let names: Vec<String> = groups
            .iter()
            .flat_map(|g| g.teams.iter().cloned())
            .collect();
        let labels = groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.label.clone(), g.teams.len()))
            .collect();
        let teams = TeamIndex::new(names, labels)?;
        let remap = |old: usize| teams.require(self.teams.name(old));
        let ratings = (0..teams.len())
            .map(|i| {
                let old = self.teams.require(teams.name(i))?;
                Ok(TeamRating {
                    team_id: i,
                    ..self.ratings[old].clone()
                })
            })
            .collect::<Result<_>>()?;
        let overrides = self
            .overrides
            .iter()
            .map(|o| {
                Ok(OutcomeOverride {
                    team_a: remap(o.team_a)?,
                    team_b: remap(o.team_b)?,
                    ..*o
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            schedule,
            groups,
            ratings,
            overrides,
            teams,
            ..self.clone()
        })
    }

    pub fn team_index_mapping(&self) -> &TeamIndex {
        &self.teams
    }

    pub fn num_teams(&self) -> usize {
        self.ratings.len()
    }

    pub fn params(&self) -> ModelParams {
        ModelParams { sigma: self.sigma }
    }

    /// Matrices for the configured σ with the configured overrides applied.
    pub fn matrices(&self) -> Result<MatchMatrices> {
        self.matrices_with(self.sigma, &[])
    }

    /// Matrices at `sigma`, applying configured overrides followed by `extra`.
    pub fn matrices_with(&self, sigma: f64, extra: &[OutcomeOverride]) -> Result<MatchMatrices> {
        let m = build_matrices(&self.ratings, ModelParams::new(sigma)?, self.knockout_rule)?;
        if self.overrides.is_empty() && extra.is_empty() {
            return Ok(m);
        }
        let all: Vec<_> = self.overrides.iter().chain(extra).copied().collect();
        crate::match_model::apply_overrides(&m, &all)
    }
}

/// Read a config file; relative paths inside it resolve against its directory.
pub fn load_config(path: &Path) -> Result<TournamentConfig> {
    let text = read(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_config_str(&text, &path.display().to_string(), &|file| {
        read(&resolve(&base, file))
    })
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse and validate config text; `fetch` supplies referenced files.
pub fn load_config_str(
    text: &str,
    origin: &str,
    fetch: &dyn Fn(&str) -> Result<String>,
) -> Result<TournamentConfig> {
    let raw: RawConfig = parse_toml(text, origin)?;
    let mut problems = Vec::new();
    let at = |needle: &str| -> String {
        match text.find(&format!("\"{needle}\"")) {
            Some(off) => {
                let (line, col) = line_col(text, off);
                format!("{origin}:{line}:{col}: ")
            }
            None => String::new(),
        }
    };

    let schedule = if crate::bracket::BUILTIN_SCHEDULES.contains(&raw.schedule.as_str()) {
        ScheduleDescriptor::builtin(&raw.schedule)?
    } else {
        ScheduleDescriptor::from_toml_str(&fetch(&raw.schedule)?, &raw.schedule)?
    };
    schedule.validate()?;

    let (sigma, sigma_preset) = match (raw.sigma, raw.sigma_preset.as_deref()) {
        (Some(_), Some(_)) => {
            return Err(Error::Validation(vec![
                "set either `sigma` or `sigma_preset`, not both".into(),
            ]))
        }
        (None, None) => {
            return Err(Error::Validation(vec![
                "one of `sigma` or `sigma_preset` is required".into(),
            ]))
        }
        (Some(s), None) => (ModelParams::new(s)?.sigma, None),
        (None, Some(p)) => {
            let preset: SigmaPreset = p.parse()?;
            (preset.sigma(), Some(preset))
        }
    };
    let knockout_rule = match raw.knockout_rule.as_deref() {
        Some(r) => r.parse()?,
        None => KnockoutRule::default(),
    };

    let points = parse_ratings_csv(&fetch(&raw.ratings)?, &raw.ratings)?;

    let k = schedule.group_size;
    let mut by_label: HashMap<&str, &GroupEntry> = HashMap::new();
    for g in &raw.groups {
        if by_label.insert(g.label.as_str(), g).is_some() {
            problems.push(format!("{}group `{}` listed twice", at(&g.label), g.label));
        }
        if g.teams.len() != k {
            problems.push(format!(
                "{}group `{}` has {} teams, schedule needs {k}",
                at(&g.label),
                g.label,
                g.teams.len()
            ));
        }
    }
    for g in &raw.groups {
        if !schedule.bracket_group_order.contains(&g.label) {
            problems.push(format!(
                "{}group `{}` is not in the schedule",
                at(&g.label),
                g.label
            ));
        }
    }
    let mut groups = Vec::with_capacity(schedule.num_groups);
    for label in &schedule.bracket_group_order {
        match by_label.get(label.as_str()) {
            Some(g) => groups.push((*g).clone()),
            None => problems.push(format!("schedule needs group `{label}`, config has none")),
        }
    }

    let mut seen = HashSet::new();
    let mut ratings = Vec::new();
    let mut names = Vec::new();
    let mut labels = Vec::new();
    for g in &groups {
        for team in &g.teams {
            if !seen.insert(team.as_str()) {
                problems.push(format!(
                    "{}team `{team}` appears in more than one slot",
                    at(team)
                ));
            }
            match points.get(team) {
                Some(&p) => ratings.push(TeamRating {
                    team_id: names.len(),
                    name: team.clone(),
                    points: p,
                }),
                None => problems.push(format!(
                    "{}team `{team}` has no rating in {}",
                    at(team),
                    raw.ratings
                )),
            }
            names.push(team.clone());
            labels.push(g.label.clone());
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    let teams = TeamIndex::new(names, labels)?;
    let overrides = match &raw.overrides {
        Some(file) => parse_overrides_csv(&fetch(file)?, file, &teams)?,
        None => Vec::new(),
    };
    let cfg = TournamentConfig {
        name: raw.name.unwrap_or_else(|| origin.to_string()),
        schedule,
        sigma,
        sigma_preset,
        knockout_rule,
        groups,
        ratings,
        overrides,
        teams,
    };
    cfg.matrices()?;
    Ok(cfg)
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    team: String,
    points: f64,
}

/// `team,points` with a header row. Names must be unique.
pub fn parse_ratings_csv(text: &str, origin: &str) -> Result<HashMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = HashMap::new();
    for row in rdr.deserialize::<RatingRow>() {
        let row = row.map_err(|e| csv_error(origin, e))?;
        if !row.points.is_finite() {
            return Err(Error::Data(format!(
                "{origin}: rating for `{}` is not finite",
                row.team
            )));
        }
        if out.insert(row.team.clone(), row.points).is_some() {
            return Err(Error::Data(format!(
                "{origin}: team `{}` rated twice",
                row.team
            )));
        }
    }
    Ok(out)
}

pub(crate) fn csv_error(origin: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        path: origin.to_string(),
        line,
        column: 0,
        message: e.to_string(),
    }
}
