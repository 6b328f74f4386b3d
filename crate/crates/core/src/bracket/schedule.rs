//! Declarative knockout schedules.
//!
//! A schedule starts from one pair block per group (first and second place)
//! laid out in bracket order, then applies rounds of block operations. Each
//! op names blocks by their index in the list entering the round; the
//! outputs, in op order, form the list for the next round.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, ViolationReport};

const WC2022: &str = include_str!("../../data/schedules/wc2022.toml");
const WC2023: &str = include_str!("../../data/schedules/wc2023.toml");

pub const BUILTIN_SCHEDULES: &[&str] = &["wc2022", "wc2023", "mini2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Merge,
    Collapse,
    FinalMergeSingles,
}

/// Which slots meet when two pair blocks merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// First of one group against second of the other, both ways.
    Cross,
    /// Left slot against left slot, right against right.
    Straight,
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::Cross => "cross",
            Pairing::Straight => "straight",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOp {
    pub kind: OpKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Pairing>,
    pub blocks: Vec<usize>,
}

impl RoundOp {
    pub fn merge(left: usize, right: usize, pairing: Pairing) -> Self {
        Self {
            kind: OpKind::Merge,
            pairing: Some(pairing),
            blocks: vec![left, right],
        }
    }

    pub fn collapse(block: usize) -> Self {
        Self {
            kind: OpKind::Collapse,
            pairing: None,
            blocks: vec![block],
        }
    }

    pub fn merge_singles(left: usize, right: usize) -> Self {
        Self {
            kind: OpKind::FinalMergeSingles,
            pairing: None,
            blocks: vec![left, right],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub ops: Vec<RoundOp>,
}

fn default_advance() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleDescriptor {
    pub name: String,
    pub num_groups: usize,
    pub group_size: usize,
    #[serde(default = "default_advance")]
    pub advance_per_group: usize,
    /// Group label at each bracket position `N_0 .. N_{m-1}`.
    pub bracket_group_order: Vec<String>,
    /// Number of knockout rounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
    /// log2 of teams advancing per group; only 1 is supported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<u32>,
    /// log2 of teams eliminated per group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<u32>,
    pub rounds: Vec<Round>,
}

/// Shape of a block while walking a schedule symbolically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BlockShape {
    pub first_group: usize,
    pub num_groups: usize,
    pub kind: ShapeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ShapeKind {
    /// Pair still ordered (first, second) within a single group.
    GroupPair,
    TrajectoryPair,
    Single,
}

impl BlockShape {
    fn slots(&self) -> usize {
        match self.kind {
            ShapeKind::Single => 1,
            _ => 2,
        }
    }

    fn is_pair(&self) -> bool {
        self.kind != ShapeKind::Single
    }
}

/// Name used for the stage a team reaches when `slots` teams remain.
pub fn round_label(slots: usize) -> String {
    match slots {
        1 => "Champion".into(),
        2 => "Final".into(),
        4 => "SF".into(),
        8 => "QF".into(),
        n => format!("L{n}"),
    }
}

impl ScheduleDescriptor {
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "wc2022" => Self::from_toml_str(WC2022, "<builtin wc2022>"),
            "wc2023" => Self::from_toml_str(WC2023, "<builtin wc2023>"),
            "mini2" => Ok(Self::mini2()),
            other => Err(Error::Data(format!(
                "unknown built-in schedule `{other}` (available: {})",
                BUILTIN_SCHEDULES.join(", ")
            ))),
        }
    }

    pub fn wc2022() -> Self {
        Self::builtin("wc2022").expect("embedded schedule parses")
    }

    pub fn wc2023() -> Self {
        Self::builtin("wc2023").expect("embedded schedule parses")
    }

    /// Two groups of four: first of each plays second of the other, winners
    /// meet in the final.
    pub fn mini2() -> Self {
        Self {
            name: "mini2".into(),
            num_groups: 2,
            group_size: 4,
            advance_per_group: 2,
            bracket_group_order: vec!["A".into(), "B".into()],
            t: Some(2),
            t1: Some(1),
            t2: Some(1),
            rounds: vec![
                Round {
                    ops: vec![RoundOp::merge(0, 1, Pairing::Cross)],
                },
                Round {
                    ops: vec![RoundOp::collapse(0)],
                },
            ],
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        crate::data_io::parse_toml(text, origin)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn num_teams(&self) -> usize {
        self.num_groups * self.group_size
    }

    /// Team ids of the group at each bracket position.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let k = self.group_size;
        (0..self.num_groups)
            .map(|g| (g * k..(g + 1) * k).collect())
            .collect()
    }

    /// Column labels for the reach table: the group stage outcome followed by
    /// the outcome of every round.
    pub fn reach_labels(&self) -> Vec<String> {
        let mut slots = self.num_groups * self.advance_per_group;
        let mut labels = vec![round_label(slots)];
        for _ in &self.rounds {
            slots /= 2;
            labels.push(round_label(slots));
        }
        labels
    }

    /// Labels for the matches played in each round.
    pub fn round_labels(&self) -> Vec<String> {
        let labels = self.reach_labels();
        labels[..labels.len() - 1].to_vec()
    }

    pub fn validate(&self) -> Result<()> {
        let report = self.check();
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::Schedule(report))
        }
    }

    /// All rule violations, empty if the descriptor is usable.
    pub fn check(&self) -> ViolationReport {
        let mut v = Vec::new();
        let top = |message: String| Violation {
            round: None,
            blocks: vec![],
            message,
        };
        let m = self.num_groups;

        if m == 0 || !m.is_power_of_two() {
            v.push(top(format!("num_groups must be a power of 2, got {m}")));
        }
        if self.group_size < 3 {
            v.push(top(format!(
                "group_size must be at least 3, got {}",
                self.group_size
            )));
        }
        if self.advance_per_group != 2 {
            v.push(top(format!(
                "advance_per_group must be 2, got {}",
                self.advance_per_group
            )));
        }
        if self.bracket_group_order.len() != m {
            v.push(top(format!(
                "bracket_group_order lists {} groups, expected {m}",
                self.bracket_group_order.len()
            )));
        }
        let mut labels = HashSet::new();
        for l in &self.bracket_group_order {
            if !labels.insert(l) {
                v.push(top(format!(
                    "group label `{l}` appears twice in bracket_group_order"
                )));
            }
        }
        let t1 = self.t1.unwrap_or(1);
        if t1 != 1 {
            v.push(top(format!(
                "t1 = {t1} unsupported: exactly two teams advance per group"
            )));
        }
        if let Some(t) = self.t {
            if self.rounds.len() != t as usize {
                v.push(top(format!(
                    "t = {t} but {} rounds are listed",
                    self.rounds.len()
                )));
            }
            if t >= t1 && m.is_power_of_two() && m != 1 << (t - t1) {
                v.push(top(format!(
                    "t = {t}, t1 = {t1} imply 2^(t-t1) = {} groups, got {m}",
                    1u64 << (t - t1)
                )));
            }
        }
        if let Some(t2) = self.t2 {
            let expected = (1usize << t1) + (1usize << t2);
            if self.group_size != expected {
                v.push(top(format!(
                    "t1 = {t1}, t2 = {t2} imply groups of {expected}, got {}",
                    self.group_size
                )));
            }
        }
        if !v.is_empty() {
            return ViolationReport(v);
        }

        let mut blocks: Vec<BlockShape> = (0..m)
            .map(|g| BlockShape {
                first_group: g,
                num_groups: 1,
                kind: ShapeKind::GroupPair,
            })
            .collect();
        for (r, round) in self.rounds.iter().enumerate() {
            let round_no = r + 1;
            match step_round(&blocks, round, round_no, t1) {
                Ok(next) => blocks = next,
                Err(mut errs) => {
                    v.append(&mut errs);
                    return ViolationReport(v);
                }
            }
        }
        let done = blocks.len() == 1 && blocks[0].kind == ShapeKind::Single;
        if !done {
            v.push(top(format!(
                "schedule ends with {} block(s) and {} slot(s); a single champion is required",
                blocks.len(),
                blocks.iter().map(BlockShape::slots).sum::<usize>()
            )));
        }
        ViolationReport(v)
    }

    /// Block shapes entering each round plus the final one.
    #[cfg(test)]
    pub(crate) fn shapes(&self) -> Vec<Vec<BlockShape>> {
        let t1 = self.t1.unwrap_or(1);
        let mut blocks: Vec<BlockShape> = (0..self.num_groups)
            .map(|g| BlockShape {
                first_group: g,
                num_groups: 1,
                kind: ShapeKind::GroupPair,
            })
            .collect();
        let mut out = vec![blocks.clone()];
        for (r, round) in self.rounds.iter().enumerate() {
            blocks = step_round(&blocks, round, r + 1, t1).expect("validated schedule");
            out.push(blocks.clone());
        }
        out
    }
}

fn step_round(
    blocks: &[BlockShape],
    round: &Round,
    round_no: usize,
    t1: u32,
) -> std::result::Result<Vec<BlockShape>, Vec<Violation>> {
    let mut errs = Vec::new();
    let err = |errs: &mut Vec<Violation>, ids: &[usize], message: String| {
        errs.push(Violation {
            round: Some(round_no),
            blocks: ids.to_vec(),
            message,
        })
    };
    let mixing = 1usize << (t1 as usize + round_no - 1);
    let mut used = vec![false; blocks.len()];
    let mut next = Vec::new();
    let mut last_first: Option<usize> = None;

    for op in &round.ops {
        let ids = &op.blocks;
        let arity = match op.kind {
            OpKind::Collapse => 1,
            _ => 2,
        };
        if ids.len() != arity {
            err(
                &mut errs,
                ids,
                format!("{:?} takes {arity} block(s), got {}", op.kind, ids.len()),
            );
            continue;
        }
        if let Some(&bad) = ids.iter().find(|&&b| b >= blocks.len()) {
            err(
                &mut errs,
                ids,
                format!(
                    "block {bad} does not exist ({} blocks enter this round)",
                    blocks.len()
                ),
            );
            continue;
        }
        for &b in ids {
            if std::mem::replace(&mut used[b], true) {
                err(&mut errs, &[b], format!("block {b} is consumed twice"));
            }
        }
        if let Some(prev) = last_first {
            if ids[0] <= prev {
                err(&mut errs, ids, "ops must be listed left to right".into());
            }
        }
        last_first = Some(*ids.iter().max().unwrap());

        let shapes: Vec<BlockShape> = ids.iter().map(|&b| blocks[b]).collect();
        if arity == 2 {
            let (a, b) = (shapes[0], shapes[1]);
            if ids[1] != ids[0] + 1 || a.first_group + a.num_groups != b.first_group {
                err(
                    &mut errs,
                    ids,
                    "merged blocks must be adjacent, left then right".into(),
                );
            }
            if a.num_groups != b.num_groups {
                err(
                    &mut errs,
                    ids,
                    format!(
                        "merged blocks must span equally many groups ({} vs {})",
                        a.num_groups, b.num_groups
                    ),
                );
            }
        }
        let first_group = shapes.iter().map(|s| s.first_group).min().unwrap();
        let last_group = shapes
            .iter()
            .map(|s| s.first_group + s.num_groups - 1)
            .max()
            .unwrap();
        if first_group / mixing != last_group / mixing {
            err(
                &mut errs,
                ids,
                format!(
                    "groups {first_group}..={last_group} may not meet in round {round_no}: \
                 g div {mixing} must agree"
                ),
            );
        }
        let num_groups = last_group + 1 - first_group;

        let kind = match op.kind {
            OpKind::Merge => {
                if !shapes.iter().all(BlockShape::is_pair) {
                    err(&mut errs, ids, "merge needs two pair blocks".into());
                }
                match op.pairing {
                    None => {
                        err(
                            &mut errs,
                            ids,
                            "merge needs a pairing (cross or straight)".into(),
                        );
                    }
                    Some(Pairing::Cross) => {
                        if !shapes.iter().all(|s| s.kind == ShapeKind::GroupPair) {
                            err(
                                &mut errs,
                                ids,
                                "cross pairing needs (first, second)-ordered group pairs".into(),
                            );
                        }
                    }
                    Some(Pairing::Straight) => {}
                }
                ShapeKind::TrajectoryPair
            }
            OpKind::Collapse => {
                if !shapes[0].is_pair() {
                    err(&mut errs, ids, "collapse needs a pair block".into());
                }
                if op.pairing.is_some() {
                    err(&mut errs, ids, "collapse takes no pairing".into());
                }
                ShapeKind::Single
            }
            OpKind::FinalMergeSingles => {
                if shapes.iter().any(BlockShape::is_pair) {
                    err(
                        &mut errs,
                        ids,
                        "final_merge_singles needs two single blocks".into(),
                    );
                }
                if op.pairing.is_some() {
                    err(
                        &mut errs,
                        ids,
                        "final_merge_singles takes no pairing".into(),
                    );
                }
                ShapeKind::Single
            }
        };
        next.push(BlockShape {
            first_group,
            num_groups,
            kind,
        });
    }

    let unused: Vec<usize> = (0..blocks.len()).filter(|&b| !used[b]).collect();
    if !unused.is_empty() {
        err(
            &mut errs,
            &unused,
            "blocks left unplayed; every round must halve the remaining slots".into(),
        );
    }
    let before: usize = blocks.iter().map(BlockShape::slots).sum();
    let after: usize = next.iter().map(BlockShape::slots).sum();
    if errs.is_empty() && after * 2 != before {
        err(
            &mut errs,
            &[],
            format!("round goes from {before} to {after} slots instead of halving"),
        );
    }
    if errs.is_empty() {
        Ok(next)
    } else {
        Err(errs)
    }
}
