use serde::{Deserialize, Serialize};

use crate::bracket::dist::{collapse, merge, merge_singles, BlockDistribution, PairDistribution};
use crate::bracket::schedule::{OpKind, ScheduleDescriptor};
use crate::error::{Error, Result};
use crate::group_stage::{group_probabilities, AdvancePairMatrix, GroupStageOptions, RankingTable};
use crate::match_model::MatchMatrices;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComputeOptions {
    pub group_stage: GroupStageOptions,
}

/// Per-team probability of reaching each stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReachTable {
    /// Stage names, e.g. `L16, QF, SF, Final, Champion`.
    pub labels: Vec<String>,
    /// `probs[team][column]`.
    pub probs: Vec<Vec<f64>>,
}

impl RoundReachTable {
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.probs.iter().map(|row| row[c]).collect()
    }

    pub fn column_sum(&self, c: usize) -> f64 {
        self.probs.iter().map(|row| row[c]).sum()
    }

    pub fn num_teams(&self) -> usize {
        self.probs.len()
    }
}

/// Inner-loop combinations visited by one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCount {
    pub label: String,
    /// Iterations of the pseudo-code loops over full index ranges.
    pub full_range: u64,
    /// Iterations actually performed over nonzero support.
    pub support: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinationCounts {
    pub rounds: Vec<RoundCount>,
}

impl CombinationCounts {
    pub fn total_full_range(&self) -> u64 {
        self.rounds.iter().map(|r| r.full_range).sum()
    }

    pub fn total_support(&self) -> u64 {
        self.rounds.iter().map(|r| r.support).sum()
    }

    pub fn full_range(&self) -> Vec<u64> {
        self.rounds.iter().map(|r| r.full_range).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TournamentResult {
    /// Championship probability per team.
    pub win: Vec<f64>,
    pub reach: RoundReachTable,
    pub combos: CombinationCounts,
    pub advance: AdvancePairMatrix,
    /// Block distributions after the group stage (index 0) and after every
    /// knockout round.
    pub stages: Vec<Vec<BlockDistribution>>,
}

fn check_dimensions(matrices: &MatchMatrices, desc: &ScheduleDescriptor) -> Result<()> {
    if matrices.n() != desc.num_teams() {
        return Err(Error::Data(format!(
            "schedule `{}` needs {} teams, matrices hold {}",
            desc.name,
            desc.num_teams(),
            matrices.n()
        )));
    }
    Ok(())
}

/// Exact championship and round-reach probabilities.
///
/// Teams are indexed group by group in bracket order: team `i` belongs to
/// the group at bracket position `i / group_size`.
pub fn compute_tournament(
    matrices: &MatchMatrices,
    desc: &ScheduleDescriptor,
    opts: ComputeOptions,
) -> Result<TournamentResult> {
    desc.validate()?;
    check_dimensions(matrices, desc)?;
    let k = desc.group_size;
    let n = desc.num_teams();

    let table = RankingTable::cached(k, opts.group_stage)?;
    let advance = group_probabilities(matrices, &desc.groups(), opts.group_stage)?;

    let labels = desc.reach_labels();
    let round_labels = desc.round_labels();
    let mut probs = vec![vec![0.0; labels.len()]; n];
    let mut combos = CombinationCounts {
        rounds: vec![RoundCount {
            label: "group stage".into(),
            full_range: desc.num_groups as u64 * table.steps_per_group(),
            support: desc.num_groups as u64 * table.steps_per_group(),
        }],
    };

    let mut blocks: Vec<BlockDistribution> = (0..desc.num_groups)
        .map(|g| BlockDistribution::Pair(PairDistribution::from_group(g, k, &advance)))
        .collect();
    record_reach(&blocks, &mut probs, 0);
    let mut stages = vec![blocks.clone()];

    for (r, round) in desc.rounds.iter().enumerate() {
        let mut count = RoundCount {
            label: round_labels[r].clone(),
            full_range: 0,
            support: 0,
        };
        let mut next = Vec::with_capacity(round.ops.len());
        for op in &round.ops {
            let out = match op.kind {
                OpKind::Merge => {
                    let a = expect_pair(&blocks[op.blocks[0]]);
                    let b = expect_pair(&blocks[op.blocks[1]]);
                    count.full_range += a.full_range() * b.full_range();
                    count.support += (a.support_len() * b.support_len()) as u64;
                    let pairing = op.pairing.expect("validated merge has a pairing");
                    BlockDistribution::Pair(merge(a, b, pairing, matrices)?)
                }
                OpKind::Collapse => {
                    let a = expect_pair(&blocks[op.blocks[0]]);
                    count.full_range += a.full_range();
                    count.support += a.support_len() as u64;
                    BlockDistribution::Single(collapse(a, matrices))
                }
                OpKind::FinalMergeSingles => {
                    let a = blocks[op.blocks[0]].as_single().expect("validated single");
                    let b = blocks[op.blocks[1]].as_single().expect("validated single");
                    count.full_range += (a.width() * b.width()) as u64;
                    count.support += (a.support_len() * b.support_len()) as u64;
                    BlockDistribution::Single(merge_singles(a, b, matrices)?)
                }
            };
            next.push(out);
        }
        combos.rounds.push(count);
        blocks = next;
        record_reach(&blocks, &mut probs, r + 1);
        stages.push(blocks.clone());
    }

    let champion = labels.len() - 1;
    let win = probs.iter().map(|row| row[champion]).collect();
    Ok(TournamentResult {
        win,
        reach: RoundReachTable { labels, probs },
        combos,
        advance,
        stages,
    })
}

fn expect_pair(b: &BlockDistribution) -> &PairDistribution {
    b.as_pair().expect("validated schedule feeds pairs here")
}

fn record_reach(blocks: &[BlockDistribution], probs: &mut [Vec<f64>], column: usize) {
    for b in blocks {
        for (t, p) in b.marginals() {
            probs[t][column] = p;
        }
    }
}
