//! Joint distributions over the teams surviving a bracket block.
//!
//! A block covers a contiguous run of groups in bracket order, so its teams
//! form a contiguous id range and distributions are stored densely over that
//! range. Loops only visit the nonzero support.

use std::ops::Range;

use crate::bracket::schedule::Pairing;
use crate::error::{Error, Result, Violation, ViolationReport};
use crate::group_stage::AdvancePairMatrix;
use crate::match_model::MatchMatrices;

/// Contiguous run of groups `first_group .. first_group + num_groups`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Block {
    pub first_group: usize,
    pub num_groups: usize,
}

impl Block {
    pub fn group(g: usize) -> Self {
        Self {
            first_group: g,
            num_groups: 1,
        }
    }

    pub fn groups(&self) -> Range<usize> {
        self.first_group..self.first_group + self.num_groups
    }

    pub fn teams(&self, group_size: usize) -> Range<usize> {
        self.first_group * group_size..(self.first_group + self.num_groups) * group_size
    }

    pub fn overlaps(&self, other: &Block) -> bool {
        self.first_group < other.first_group + other.num_groups
            && other.first_group < self.first_group + self.num_groups
    }

    /// Union of two blocks that touch end to end.
    pub fn join(&self, other: &Block) -> Result<Block> {
        if self.overlaps(other) {
            return Err(schedule_error(format!(
                "blocks {:?} and {:?} overlap",
                self.groups(),
                other.groups()
            )));
        }
        let (left, right) = if self.first_group < other.first_group {
            (self, other)
        } else {
            (other, self)
        };
        if left.first_group + left.num_groups != right.first_group {
            return Err(schedule_error(format!(
                "blocks {:?} and {:?} are not adjacent",
                left.groups(),
                right.groups()
            )));
        }
        Ok(Block {
            first_group: left.first_group,
            num_groups: left.num_groups + right.num_groups,
        })
    }
}

/// What the two slots of a pair mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOrder {
    /// (group winner, runner-up).
    GroupRank,
    /// (left trajectory, right trajectory).
    Trajectory,
}

/// Joint probability of the ordered pair of teams holding a block's two slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    block: Block,
    group_size: usize,
    slots: SlotOrder,
    probs: Vec<f64>,
}

impl PairDistribution {
    pub(crate) fn zeros(block: Block, group_size: usize, slots: SlotOrder) -> Self {
        let w = block.num_groups * group_size;
        Self {
            block,
            group_size,
            slots,
            probs: vec![0.0; w * w],
        }
    }

    /// The (first, second) distribution of group `g` (teams `g*k .. (g+1)*k`).
    pub fn from_group(g: usize, group_size: usize, advance: &AdvancePairMatrix) -> Self {
        let mut d = Self::zeros(Block::group(g), group_size, SlotOrder::GroupRank);
        let teams = d.teams();
        for a in teams.clone() {
            for b in teams.clone() {
                if a != b {
                    d.add(a, b, advance.get(a, b));
                }
            }
        }
        d
    }

    /// Build from explicit `(slot_a, slot_b, probability)` entries.
    pub fn from_entries(
        block: Block,
        group_size: usize,
        slots: SlotOrder,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut d = Self::zeros(block, group_size, slots);
        let teams = d.teams();
        for (a, b, p) in entries {
            if !teams.contains(&a) || !teams.contains(&b) || a == b {
                return Err(Error::InvalidParameter(format!(
                    "pair ({a}, {b}) invalid for block covering teams {teams:?}"
                )));
            }
            d.add(a, b, p);
        }
        Ok(d)
    }

    pub fn block(&self) -> Block {
        self.block
    }

    pub fn slots(&self) -> SlotOrder {
        self.slots
    }

    pub fn teams(&self) -> Range<usize> {
        self.block.teams(self.group_size)
    }

    fn width(&self) -> usize {
        self.block.num_groups * self.group_size
    }

    #[inline]
    fn index(&self, a: usize, b: usize) -> usize {
        let lo = self.block.first_group * self.group_size;
        (a - lo) * self.width() + (b - lo)
    }

    #[inline]
    fn add(&mut self, a: usize, b: usize, p: f64) {
        let i = self.index(a, b);
        self.probs[i] += p;
    }

    /// Probability of `(a, b)`; zero for teams outside the block.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let teams = self.teams();
        if teams.contains(&a) && teams.contains(&b) {
            self.probs[self.index(a, b)]
        } else {
            0.0
        }
    }

    /// Nonzero entries in ascending `(a, b)` order.
    pub fn support(&self) -> Vec<(usize, usize, f64)> {
        let lo = self.block.first_group * self.group_size;
        let w = self.width();
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| (lo + i / w, lo + i % w, p))
            .collect()
    }

    pub fn support_len(&self) -> usize {
        self.probs.iter().filter(|&&p| p != 0.0).count()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability that each team of the block occupies either slot.
    pub fn marginals(&self) -> Vec<(usize, f64)> {
        let lo = self.block.first_group * self.group_size;
        let w = self.width();
        let mut m = vec![0.0; w];
        for (i, &p) in self.probs.iter().enumerate() {
            m[i / w] += p;
            m[i % w] += p;
        }
        m.into_iter()
            .enumerate()
            .map(|(i, p)| (lo + i, p))
            .collect()
    }

    /// Index-range loop count of a pseudo-code pass over all ordered pairs.
    pub fn full_range(&self) -> u64 {
        let w = self.width() as u64;
        w * (w - 1)
    }
}

/// Probability of each team of a block holding its single slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleDistribution {
    block: Block,
    group_size: usize,
    probs: Vec<f64>,
}

impl SingleDistribution {
    pub(crate) fn zeros(block: Block, group_size: usize) -> Self {
        Self {
            block,
            group_size,
            probs: vec![0.0; block.num_groups * group_size],
        }
    }

    pub fn from_entries(
        block: Block,
        group_size: usize,
        entries: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let mut d = Self::zeros(block, group_size);
        let teams = d.teams();
        for (t, p) in entries {
            if !teams.contains(&t) {
                return Err(Error::InvalidParameter(format!(
                    "team {t} outside block covering {teams:?}"
                )));
            }
            d.probs[t - teams.start] += p;
        }
        Ok(d)
    }

    pub fn block(&self) -> Block {
        self.block
    }

    pub fn teams(&self) -> Range<usize> {
        self.block.teams(self.group_size)
    }

    pub fn get(&self, t: usize) -> f64 {
        let teams = self.teams();
        if teams.contains(&t) {
            self.probs[t - teams.start]
        } else {
            0.0
        }
    }

    pub fn support(&self) -> Vec<(usize, f64)> {
        let lo = self.teams().start;
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| (lo + i, p))
            .collect()
    }

    pub fn support_len(&self) -> usize {
        self.probs.iter().filter(|&&p| p != 0.0).count()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn width(&self) -> usize {
        self.probs.len()
    }
}

/// Distribution held by a block between rounds.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockDistribution {
    Pair(PairDistribution),
    Single(SingleDistribution),
}

impl BlockDistribution {
    pub fn block(&self) -> Block {
        match self {
            BlockDistribution::Pair(p) => p.block(),
            BlockDistribution::Single(s) => s.block(),
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            BlockDistribution::Pair(p) => p.total(),
            BlockDistribution::Single(s) => s.total(),
        }
    }

    /// Per-team probability of holding some slot of this block.
    pub fn marginals(&self) -> Vec<(usize, f64)> {
        match self {
            BlockDistribution::Pair(p) => p.marginals(),
            BlockDistribution::Single(s) => s.teams().map(|t| (t, s.get(t))).collect(),
        }
    }

    pub fn as_pair(&self) -> Option<&PairDistribution> {
        match self {
            BlockDistribution::Pair(p) => Some(p),
            BlockDistribution::Single(_) => None,
        }
    }

    pub fn as_single(&self) -> Option<&SingleDistribution> {
        match self {
            BlockDistribution::Single(s) => Some(s),
            BlockDistribution::Pair(_) => None,
        }
    }
}

fn schedule_error(message: String) -> Error {
    Error::Schedule(ViolationReport(vec![Violation {
        round: None,
        blocks: vec![],
        message,
    }]))
}

/// The two matches played when pair blocks `a` and `b` merge, as
/// `((a-side, b-side), (a-side, b-side))` slot indices.
#[inline]
pub(crate) fn merge_matches(
    pairing: Pairing,
    (a1, a2): (usize, usize),
    (b1, b2): (usize, usize),
) -> ((usize, usize), (usize, usize)) {
    match pairing {
        Pairing::Cross => ((a1, b2), (a2, b1)),
        Pairing::Straight => ((a1, b1), (a2, b2)),
    }
}

/// Play two matches for every combination of the two blocks' pairs; the
/// output pair is (winner of match 1, winner of match 2).
pub fn merge(
    pair_a: &PairDistribution,
    pair_b: &PairDistribution,
    pairing: Pairing,
    knockout: &MatchMatrices,
) -> Result<PairDistribution> {
    if pair_a.group_size != pair_b.group_size {
        return Err(schedule_error(
            "merged blocks use different group sizes".into(),
        ));
    }
    if pairing == Pairing::Cross
        && (pair_a.slots != SlotOrder::GroupRank || pair_b.slots != SlotOrder::GroupRank)
    {
        return Err(schedule_error(
            "cross pairing needs (first, second)-ordered group pairs".into(),
        ));
    }
    let block = pair_a.block.join(&pair_b.block)?;
    let mut out = PairDistribution::zeros(block, pair_a.group_size, SlotOrder::Trajectory);
    let sb = pair_b.support();
    for (a1, a2, pa) in pair_a.support() {
        for &(b1, b2, pb) in &sb {
            let ((x1, y1), (x2, y2)) = merge_matches(pairing, (a1, a2), (b1, b2));
            let p = pa * pb;
            let (q1, r1) = (knockout.knockout(x1, y1), knockout.knockout(y1, x1));
            let (q2, r2) = (knockout.knockout(x2, y2), knockout.knockout(y2, x2));
            out.add(x1, x2, p * q1 * q2);
            out.add(x1, y2, p * q1 * r2);
            out.add(y1, x2, p * r1 * q2);
            out.add(y1, y2, p * r1 * r2);
        }
    }
    Ok(out)
}

/// The two teams of a pair play each other; the winner keeps the slot.
pub fn collapse(pair: &PairDistribution, knockout: &MatchMatrices) -> SingleDistribution {
    let mut out = SingleDistribution::zeros(pair.block, pair.group_size);
    let lo = out.teams().start;
    for (i, j, p) in pair.support() {
        out.probs[i - lo] += p * knockout.knockout(i, j);
        out.probs[j - lo] += p * knockout.knockout(j, i);
    }
    out
}

/// Winners of two independent blocks meet.
pub fn merge_singles(
    single_a: &SingleDistribution,
    single_b: &SingleDistribution,
    knockout: &MatchMatrices,
) -> Result<SingleDistribution> {
    if single_a.group_size != single_b.group_size {
        return Err(schedule_error(
            "merged blocks use different group sizes".into(),
        ));
    }
    let block = single_a.block.join(&single_b.block)?;
    let mut out = SingleDistribution::zeros(block, single_a.group_size);
    let lo = out.teams().start;
    let sb = single_b.support();
    for (i, pi) in single_a.support() {
        for &(j, pj) in &sb {
            let p = pi * pj;
            out.probs[i - lo] += p * knockout.knockout(i, j);
            out.probs[j - lo] += p * knockout.knockout(j, i);
        }
    }
    Ok(out)
}
