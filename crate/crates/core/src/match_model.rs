//! Single-match outcome model.
//!
//! Ratings are mapped to strengths through the logistic expectation used by
//! the FIFA/Coca-Cola rankings. Group matches get a three-outcome Davidson
//! distribution, knockout matches a two-outcome one. Everything downstream
//! only sees the pre-computed [`MatchMatrices`], so any other model can be
//! plugged in by building the matrices directly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Team identity plus ranking points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRating {
    pub team_id: usize,
    pub name: String,
    pub points: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }
}

/// Named sensitivity scales.
///
/// The FIFA women's scale is not published; 400 is an estimate from the
/// size of recent ranking updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaPreset {
    /// 0.6 x FIFA men's scale.
    Men,
    /// Calibrated against pre-tournament betting odds.
    Women,
    FifaMen,
    FifaWomenEstimate,
}

impl SigmaPreset {
    pub fn sigma(self) -> f64 {
        match self {
            SigmaPreset::Men => 360.0,
            SigmaPreset::Women => 240.0,
            SigmaPreset::FifaMen => 600.0,
            SigmaPreset::FifaWomenEstimate => 400.0,
        }
    }

    pub fn is_estimate(self) -> bool {
        matches!(self, SigmaPreset::FifaWomenEstimate)
    }
}

impl FromStr for SigmaPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "men" => Ok(SigmaPreset::Men),
            "women" => Ok(SigmaPreset::Women),
            "fifa-men" => Ok(SigmaPreset::FifaMen),
            "fifa-women" | "fifa-women-estimate" => Ok(SigmaPreset::FifaWomenEstimate),
            other => Err(Error::InvalidParameter(format!(
                "unknown sigma preset `{other}`"
            ))),
        }
    }
}

/// Loss/draw/win probabilities from one team's perspective
/// (ternary outcome values 0, 1, 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p_loss: f64,
    pub p_draw: f64,
    pub p_win: f64,
}

impl OutcomeDistribution {
    pub const WIN: Self = Self {
        p_loss: 0.0,
        p_draw: 0.0,
        p_win: 1.0,
    };
    pub const DRAW: Self = Self {
        p_loss: 0.0,
        p_draw: 1.0,
        p_win: 0.0,
    };
    pub const LOSS: Self = Self {
        p_loss: 1.0,
        p_draw: 0.0,
        p_win: 0.0,
    };

    /// The same match seen from the opponent's side.
    pub fn transposed(self) -> Self {
        Self {
            p_loss: self.p_win,
            p_draw: self.p_draw,
            p_win: self.p_loss,
        }
    }

    /// Probability of ternary outcome `value` (0 loss, 1 draw, 2 win).
    #[inline]
    pub fn prob(&self, value: u8) -> f64 {
        match value {
            0 => self.p_loss,
            1 => self.p_draw,
            _ => self.p_win,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_loss, self.p_draw, self.p_win]
    }
}

/// How knockout (two-outcome) probabilities are derived.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnockoutRule {
    /// theta_i / (theta_i + theta_j).
    #[default]
    BradleyTerry,
    /// Halve the draw mass of the group-stage distribution.
    DrawSplit,
}

impl FromStr for KnockoutRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bradley_terry" | "bradley-terry" => Ok(KnockoutRule::BradleyTerry),
            "draw_split" | "draw-split" => Ok(KnockoutRule::DrawSplit),
            other => Err(Error::InvalidParameter(format!(
                "unknown knockout rule `{other}`"
            ))),
        }
    }
}

/// Expected outcome of `i` against `j`: `1 / (1 + 10^((rho_j - rho_i) / sigma))`.
pub fn team_strength(rho_i: f64, rho_j: f64, sigma: f64) -> Result<f64> {
    if !(rho_i.is_finite() && rho_j.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ratings must be finite, got {rho_i} and {rho_j}"
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and positive, got {sigma}"
        )));
    }
    let theta = 1.0 / (1.0 + 10f64.powf((rho_j - rho_i) / sigma));
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rating gap {} too large for sigma {sigma}",
            rho_i - rho_j
        )));
    }
    Ok(theta)
}

fn check_strengths(theta_i: f64, theta_j: f64) -> Result<()> {
    if theta_i > 0.0 && theta_j > 0.0 && theta_i.is_finite() && theta_j.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "strengths must be positive, got {theta_i} and {theta_j}"
        )))
    }
}

/// Davidson's draw extension of Bradley-Terry.
pub fn group_distribution(theta_i: f64, theta_j: f64) -> Result<OutcomeDistribution> {
    check_strengths(theta_i, theta_j)?;
    let draw = (theta_i * theta_j).sqrt();
    let denom = theta_i + draw + theta_j;
    Ok(OutcomeDistribution {
        p_loss: theta_j / denom,
        p_draw: draw / denom,
        p_win: theta_i / denom,
    })
}

/// Probability that `i` eliminates `j` under Bradley-Terry.
pub fn knockout_distribution(theta_i: f64, theta_j: f64) -> Result<f64> {
    check_strengths(theta_i, theta_j)?;
    Ok(theta_i / (theta_i + theta_j))
}

/// Turn a three-outcome distribution into an advance probability by
/// splitting the draw mass evenly.
pub fn split_draw(dist: &OutcomeDistribution) -> f64 {
    dist.p_win + 0.5 * dist.p_draw
}

/// Pre-computed outcome distributions for every ordered pair of teams.
///
/// Entry `(i, j)` is always from `i`'s perspective. The diagonal holds
/// placeholders and is never read.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchMatrices {
    n: usize,
    group: Vec<OutcomeDistribution>,
    knockout: Vec<f64>,
}

impl MatchMatrices {
    /// Build from explicit group distributions for `i < j`, keyed by
    /// `(i, j)`, and a knockout rule applied to them. Useful for plugging
    /// in an external three-outcome model.
    pub fn from_group_distributions(
        n: usize,
        upper: impl Fn(usize, usize) -> OutcomeDistribution,
    ) -> Result<Self> {
        let mut m = Self::placeholder(n);
        for i in 0..n {
            for j in i + 1..n {
                let d = upper(i, j);
                let sum = d.p_loss + d.p_draw + d.p_win;
                if d.p_loss < 0.0 || d.p_draw < 0.0 || d.p_win < 0.0 || (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "outcome distribution for ({i}, {j}) is not a probability vector"
                    )));
                }
                m.set_group(i, j, d);
                m.set_knockout(i, j, split_draw(&d), split_draw(&d.transposed()));
            }
        }
        Ok(m)
    }

    fn placeholder(n: usize) -> Self {
        let mut group = vec![OutcomeDistribution::LOSS; n * n];
        let mut knockout = vec![0.0; n * n];
        for i in 0..n {
            group[i * n + i] = OutcomeDistribution::DRAW;
            knockout[i * n + i] = 0.5;
        }
        Self { n, group, knockout }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn group(&self, i: usize, j: usize) -> &OutcomeDistribution {
        &self.group[i * self.n + j]
    }

    /// P(i eliminates j).
    #[inline]
    pub fn knockout(&self, i: usize, j: usize) -> f64 {
        self.knockout[i * self.n + j]
    }

    fn set_group(&mut self, i: usize, j: usize, d: OutcomeDistribution) {
        self.group[i * self.n + j] = d;
        self.group[j * self.n + i] = d.transposed();
    }

    fn set_knockout(&mut self, i: usize, j: usize, p_ij: f64, p_ji: f64) {
        self.knockout[i * self.n + j] = p_ij;
        self.knockout[j * self.n + i] = p_ji;
    }
}

/// Fill both matrices from ratings.
pub fn build_matrices(
    ratings: &[TeamRating],
    params: ModelParams,
    rule: KnockoutRule,
) -> Result<MatchMatrices> {
    let n = ratings.len();
    if n < 2 {
        return Err(Error::Data(format!("need at least two teams, got {n}")));
    }
    let mut points = vec![None; n];
    for r in ratings {
        if r.team_id >= n {
            return Err(Error::Data(format!(
                "team id {} ({}) outside 0..{n}",
                r.team_id, r.name
            )));
        }
        if points[r.team_id].replace(r.points).is_some() {
            return Err(Error::Data(format!(
                "duplicate team id {} ({})",
                r.team_id, r.name
            )));
        }
    }
    let points: Vec<f64> = points.into_iter().map(|p| p.expect("dense ids")).collect();

    let mut m = MatchMatrices::placeholder(n);
    for i in 0..n {
        for j in i + 1..n {
            let theta_i = team_strength(points[i], points[j], params.sigma)?;
            let theta_j = team_strength(points[j], points[i], params.sigma)?;
            let d = group_distribution(theta_i, theta_j)?;
            m.set_group(i, j, d);
            match rule {
                KnockoutRule::BradleyTerry => m.set_knockout(
                    i,
                    j,
                    knockout_distribution(theta_i, theta_j)?,
                    knockout_distribution(theta_j, theta_i)?,
                ),
                KnockoutRule::DrawSplit => {
                    m.set_knockout(i, j, split_draw(&d), split_draw(&d.transposed()))
                }
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Group,
    Knockout,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Group => "group",
            Stage::Knockout => "knockout",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "group" => Ok(Stage::Group),
            "knockout" => Ok(Stage::Knockout),
            other => Err(Error::InvalidParameter(format!("unknown stage `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchResult {
    AWins,
    Draw,
    BWins,
}

impl MatchResult {
    fn flipped(self) -> Self {
        match self {
            MatchResult::AWins => MatchResult::BWins,
            MatchResult::Draw => MatchResult::Draw,
            MatchResult::BWins => MatchResult::AWins,
        }
    }
}

impl fmt::Display for MatchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchResult::AWins => "a_wins",
            MatchResult::Draw => "draw",
            MatchResult::BWins => "b_wins",
        })
    }
}

impl FromStr for MatchResult {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a_wins" => Ok(MatchResult::AWins),
            "draw" => Ok(MatchResult::Draw),
            "b_wins" => Ok(MatchResult::BWins),
            other => Err(Error::InvalidParameter(format!("unknown result `{other}`"))),
        }
    }
}

/// A known (or hypothetical) match result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeOverride {
    pub stage: Stage,
    pub team_a: usize,
    pub team_b: usize,
    pub result: MatchResult,
}

impl OutcomeOverride {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.team_a >= n || self.team_b >= n {
            return Err(Error::InvalidParameter(format!(
                "override references team outside 0..{n}: ({}, {})",
                self.team_a, self.team_b
            )));
        }
        if self.team_a == self.team_b {
            return Err(Error::InvalidParameter(format!(
                "override pairs team {} with itself",
                self.team_a
            )));
        }
        if self.stage == Stage::Knockout && self.result == MatchResult::Draw {
            return Err(Error::InvalidParameter(format!(
                "knockout match {} vs {} cannot end in a draw",
                self.team_a, self.team_b
            )));
        }
        Ok(())
    }

    /// Orientation-free key: smaller team first, result seen from it.
    fn canonical(&self) -> (Stage, usize, usize, MatchResult) {
        if self.team_a < self.team_b {
            (self.stage, self.team_a, self.team_b, self.result)
        } else {
            (self.stage, self.team_b, self.team_a, self.result.flipped())
        }
    }
}

/// Replace overridden entries by point masses. Repeating the same override
/// is accepted; two different results for one pair and stage are not.
pub fn apply_overrides(
    matrices: &MatchMatrices,
    overrides: &[OutcomeOverride],
) -> Result<MatchMatrices> {
    let mut seen: HashMap<(Stage, usize, usize), MatchResult> = HashMap::new();
    for o in overrides {
        o.validate(matrices.n)?;
        let (stage, a, b, result) = o.canonical();
        if let Some(prev) = seen.insert((stage, a, b), result) {
            if prev != result {
                return Err(Error::Conflict {
                    stage: stage.to_string(),
                    team_a: a,
                    team_b: b,
                });
            }
        }
    }

    let mut out = matrices.clone();
    for (&(stage, a, b), &result) in &seen {
        match stage {
            Stage::Group => {
                let d = match result {
                    MatchResult::AWins => OutcomeDistribution::WIN,
                    MatchResult::Draw => OutcomeDistribution::DRAW,
                    MatchResult::BWins => OutcomeDistribution::LOSS,
                };
                out.set_group(a, b, d);
            }
            Stage::Knockout => match result {
                MatchResult::AWins => out.set_knockout(a, b, 1.0, 0.0),
                MatchResult::BWins => out.set_knockout(a, b, 0.0, 1.0),
                MatchResult::Draw => unreachable!("rejected by validate"),
            },
        }
    }
    Ok(out)
}
