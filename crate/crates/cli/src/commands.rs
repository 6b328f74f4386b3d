use std::fmt::Write as _;
use std::path::Path;

use bracket_exact::bracket::{
    compute_tournament, most_likely_bracket, recompute_probability, BracketAssignment,
    ComputeOptions, PlayedMatch, ScheduleDescriptor, TournamentResult, BUILTIN_SCHEDULES,
};
use bracket_exact::calibrate::{calibrate_sigma, parse_sigma_grid};
use bracket_exact::data_io::{
    bundled_config_names, emit_report, load_config, parse_odds_csv, parse_overrides_csv,
    OutputFormat, Report, TournamentConfig,
};
use bracket_exact::group_stage::{GroupStageOptions, RankingTable};
use bracket_exact::match_model::{MatchMatrices, OutcomeOverride};
use bracket_exact::simulator::{benchmark, convergence_experiment, default_grid, Simulator};
use bracket_exact::Error;
use serde_json::json;

use crate::args::{Cli, Command};
use crate::CliError;

/// Everything a command needs: the config after flag overrides.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: TournamentConfig,
    pub sigma: f64,
    /// Results fixed on the command line, on top of the config's own.
    pub extra: Vec<OutcomeOverride>,
    pub format: OutputFormat,
}

impl Context {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let spec = cli.config.as_deref().ok_or_else(|| {
            CliError::Usage(format!(
                "--config is required (file or one of: {})",
                bundled_config_names().join(", ")
            ))
        })?;
        let mut config = if !Path::new(spec).exists() && bundled_config_names().contains(&spec) {
            TournamentConfig::bundled(spec)?
        } else {
            load_config(Path::new(spec))?
        };
        if let Some(s) = &cli.schedule {
            let desc = if BUILTIN_SCHEDULES.contains(&s.as_str()) {
                ScheduleDescriptor::builtin(s)?
            } else {
                let text = std::fs::read_to_string(s).map_err(|source| Error::Io {
                    path: s.clone(),
                    source,
                })?;
                ScheduleDescriptor::from_toml_str(&text, s)?
            };
            config = config.with_schedule(desc)?;
        }
        let extra = match &cli.overrides {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                parse_overrides_csv(&text, &p.display().to_string(), &config.teams)?
            }
            None => Vec::new(),
        };
        let sigma = cli.sigma.unwrap_or(config.sigma);
        let ctx = Self {
            config,
            sigma,
            extra,
            format: cli.format,
        };
        ctx.matrices()?;
        Ok(ctx)
    }

    pub fn matrices(&self) -> Result<MatchMatrices, Error> {
        self.config.matrices_with(self.sigma, &self.extra)
    }

    pub fn matrices_with(&self, more: &[OutcomeOverride]) -> Result<MatchMatrices, Error> {
        let all: Vec<_> = self.extra.iter().chain(more).copied().collect();
        self.config.matrices_with(self.sigma, &all)
    }

    pub fn compute(&self, m: &MatchMatrices) -> Result<TournamentResult, Error> {
        compute_tournament(m, &self.config.schedule, ComputeOptions::default())
    }
}

/// Run a non-serving command and return its standard output.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    if let Command::RankingTable {
        group_size,
        allow_large_groups,
    } = cli.command
    {
        let table = RankingTable::build(group_size, GroupStageOptions { allow_large_groups })?;
        return Ok(table.to_csv());
    }
    let ctx = Context::from_cli(cli)?;
    match &cli.command {
        Command::Compute => compute(&ctx),
        Command::Simulate { runs, seed } => simulate(&ctx, *runs, *seed),
        Command::Compare {
            grid,
            trials,
            seed,
            skip_timing,
        } => compare(&ctx, grid.as_deref(), *trials, *seed, *skip_timing),
        Command::Bench { reps, runs, seed } => bench(&ctx, *reps, *runs, *seed),
        Command::Calibrate { odds, sigma_grid } => calibrate(&ctx, odds, sigma_grid),
        Command::Bracket => bracket(&ctx),
        Command::Serve { .. } | Command::RankingTable { .. } => {
            unreachable!("handled by the caller")
        }
    }
}

pub fn compute(ctx: &Context) -> Result<String, CliError> {
    let result = ctx.compute(&ctx.matrices()?)?;
    Ok(emit_report(
        &Report::new(&ctx.config, ctx.sigma, &result),
        ctx.format,
    ))
}

pub fn simulate(ctx: &Context, runs: usize, seed: u64) -> Result<String, CliError> {
    let m = ctx.matrices()?;
    let sim = Simulator::new(&m, &ctx.config.schedule)?.estimate(runs, seed, 0)?;
    let teams = (0..ctx.config.num_teams())
        .map(|i| bracket_exact::data_io::TeamRow {
            index: i,
            name: ctx.config.teams.name(i).to_string(),
            group: ctx.config.teams.group_label(i).to_string(),
            reach: sim.reach_freq.probs[i].clone(),
        })
        .collect();
    let report = Report {
        name: format!("{} (simulated, {runs} runs, seed {seed})", ctx.config.name),
        schedule: ctx.config.schedule.name.clone(),
        sigma: ctx.sigma,
        labels: sim.reach_freq.labels.clone(),
        teams,
        combos: None,
    };
    Ok(emit_report(&report, ctx.format))
}

fn parse_grid(spec: &str) -> Result<Vec<usize>, CliError> {
    let grid: Vec<usize> = spec
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad run grid `{spec}`")))
        })
        .collect::<Result<_, _>>()?;
    if grid.contains(&0) {
        return Err(CliError::Usage("run counts must be positive".into()));
    }
    Ok(grid)
}

pub fn compare(
    ctx: &Context,
    grid: Option<&str>,
    trials: usize,
    seed: u64,
    skip_timing: bool,
) -> Result<String, CliError> {
    let m = ctx.matrices()?;
    let desc = &ctx.config.schedule;
    let exact = ctx.compute(&m)?.win;
    let mut grid = match grid {
        Some(g) => parse_grid(g)?,
        None => default_grid(),
    };
    let equivalent = if skip_timing {
        None
    } else {
        Some(benchmark(&m, desc, 5, 1_000, seed)?.equivalent_runs)
    };
    if let Some(e) = equivalent {
        grid.push(e.round().max(1.0) as usize);
    }
    grid.sort_unstable();
    grid.dedup();
    let mut report = convergence_experiment(&m, desc, &exact, &grid, trials, seed)?;
    report.equivalent_runs = equivalent;
    Ok(match ctx.format {
        OutputFormat::Table => report.to_csv(),
        OutputFormat::JsonLines => {
            let mut out = String::new();
            for p in &report.points {
                let line = json!({
                    "type": "grid_point",
                    "runs": p.runs,
                    "max_abs": p.max_abs,
                    "mean_abs": p.mean_abs,
                    "rmse": p.rmse,
                });
                writeln!(out, "{line}").unwrap();
            }
            if let Some(e) = equivalent {
                writeln!(out, "{}", json!({ "type": "exact_equivalent", "runs": e })).unwrap();
            }
            out
        }
    })
}

pub fn bench(ctx: &Context, reps: usize, runs: usize, seed: u64) -> Result<String, CliError> {
    let m = ctx.matrices()?;
    let b = benchmark(&m, &ctx.config.schedule, reps, runs, seed)?;
    Ok(match ctx.format {
        OutputFormat::JsonLines => format!("{}\n", serde_json::to_string(&b).expect("report serializes")),
        OutputFormat::Table => format!(
            "schedule            {}\nrepetitions         {}\nexact (median)      {:.3} ms\nper simulation run  {:.3} us\nequivalent runs     {:.1}\ndeterministic       {}\n",
            b.schedule,
            b.repetitions,
            b.exact_seconds * 1e3,
            b.per_run_seconds * 1e6,
            b.equivalent_runs,
            b.exact_deterministic
        ),
    })
}

pub fn calibrate(ctx: &Context, odds: &Path, grid: &str) -> Result<String, CliError> {
    let text = std::fs::read_to_string(odds).map_err(|source| Error::Io {
        path: odds.display().to_string(),
        source,
    })?;
    let table = parse_odds_csv(&text, &odds.display().to_string(), &ctx.config.teams)?;
    let target = table.implied_probabilities()?;
    let grid = parse_sigma_grid(grid)?;
    let c = calibrate_sigma(
        &ctx.config.ratings,
        &ctx.config.schedule,
        ctx.config.knockout_rule,
        &target,
        &grid,
    )?;
    Ok(match ctx.format {
        OutputFormat::JsonLines => format!(
            "{}\n",
            serde_json::to_string(&c).expect("calibration serializes")
        ),
        OutputFormat::Table => {
            let mut out = format!(
                "sigma* = {} (objective {:.6e})\n\nsigma,objective\n",
                c.sigma, c.objective
            );
            for p in &c.curve {
                writeln!(out, "{},{}", p.sigma, p.objective).unwrap();
            }
            out
        }
    })
}

pub fn bracket(ctx: &Context) -> Result<String, CliError> {
    let m = ctx.matrices()?;
    let desc = &ctx.config.schedule;
    let b = most_likely_bracket(&m, desc, GroupStageOptions::default())?;
    let recomputed = recompute_probability(&b, &m, desc, GroupStageOptions::default())?;
    Ok(match ctx.format {
        OutputFormat::JsonLines => format!("{}\n", bracket_json(ctx, &b, recomputed)),
        OutputFormat::Table => render_bracket(ctx, &b, &m, recomputed),
    })
}

fn bracket_json(ctx: &Context, b: &BracketAssignment, recomputed: f64) -> serde_json::Value {
    let name = |i: usize| ctx.config.teams.name(i).to_string();
    let labels = ctx.config.schedule.round_labels();
    json!({
        "type": "bracket",
        "probability": b.probability,
        "recomputed": recomputed,
        "champion": name(b.champion),
        "groups": b.group_pairs.iter().enumerate().map(|(g, &(a, s))| json!({
            "label": ctx.config.groups[g].label,
            "first": name(a),
            "second": name(s),
        })).collect::<Vec<_>>(),
        "rounds": b.rounds.iter().zip(&labels).map(|(r, label)| json!({
            "label": label,
            "matches": r.iter().map(|pm| json!({
                "home": name(pm.home),
                "away": name(pm.away),
                "winner": name(pm.winner),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

struct Tree<'a> {
    rounds: &'a [Vec<PlayedMatch>],
    labels: &'a [String],
    m: &'a MatchMatrices,
    seed_of: &'a dyn Fn(usize) -> String,
    name: &'a dyn Fn(usize) -> String,
}

impl Tree<'_> {
    fn walk(&self, out: &mut String, r: usize, pm: PlayedMatch, prefix: &str, last: bool) {
        let name = self.name;
        let branch = if last { "`-- " } else { "|-- " };
        writeln!(
            out,
            "{prefix}{branch}{}: {} vs {} -> {} ({:.1}%)",
            self.labels[r],
            name(pm.home),
            name(pm.away),
            name(pm.winner),
            100.0 * self.m.knockout(pm.winner, pm.loser())
        )
        .unwrap();
        let child_prefix = format!("{prefix}{}", if last { "    " } else { "|   " });
        for (i, t) in [pm.home, pm.away].into_iter().enumerate() {
            let is_last = i == 1;
            match r.checked_sub(1).and_then(|p| {
                self.rounds[p]
                    .iter()
                    .find(|x| x.winner == t)
                    .map(|x| (p, *x))
            }) {
                Some((p, prev)) => self.walk(out, p, prev, &child_prefix, is_last),
                None => {
                    let branch = if is_last { "`-- " } else { "|-- " };
                    writeln!(out, "{child_prefix}{branch}{}", (self.seed_of)(t)).unwrap();
                }
            }
        }
    }
}

/// Sideways tree rooted at the final.
fn render_bracket(
    ctx: &Context,
    b: &BracketAssignment,
    m: &MatchMatrices,
    recomputed: f64,
) -> String {
    let teams = &ctx.config.teams;
    let labels = ctx.config.schedule.round_labels();
    let mut out = String::new();
    writeln!(
        out,
        "Most likely bracket, {} ({})",
        ctx.config.name, ctx.config.schedule.name
    )
    .unwrap();
    writeln!(
        out,
        "probability {:.6e} (product of parts {:.6e})",
        b.probability, recomputed
    )
    .unwrap();
    out.push_str("\nGroups\n");
    for (g, &(first, second)) in b.group_pairs.iter().enumerate() {
        writeln!(
            out,
            "  {}: 1. {}  2. {}",
            ctx.config.groups[g].label,
            teams.name(first),
            teams.name(second)
        )
        .unwrap();
    }
    writeln!(out, "\nChampion: {}", teams.name(b.champion)).unwrap();

    let seed_of = |t: usize| -> String {
        let g = b
            .group_pairs
            .iter()
            .position(|&(a, s)| a == t || s == t)
            .expect("every finalist advanced");
        let rank = if b.group_pairs[g].0 == t { 1 } else { 2 };
        format!("{} ({}{rank})", teams.name(t), ctx.config.groups[g].label)
    };
    let name = |t: usize| teams.name(t).to_string();
    let tree = Tree {
        rounds: &b.rounds,
        labels: &labels,
        m,
        seed_of: &seed_of,
        name: &name,
    };
    let last_round = b.rounds.len() - 1;
    tree.walk(&mut out, last_round, b.rounds[last_round][0], "", true);
    out
}
