use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bracket::dist::merge_matches;
use crate::bracket::schedule::{OpKind, ScheduleDescriptor};
use crate::error::{Error, Result};
use crate::group_stage::{group_probabilities, AdvancePairMatrix, GroupStageOptions};
use crate::match_model::MatchMatrices;

const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayedMatch {
    pub home: usize,
    pub away: usize,
    pub winner: usize,
}

impl PlayedMatch {
    pub fn loser(&self) -> usize {
        if self.winner == self.home {
            self.away
        } else {
            self.home
        }
    }
}

/// One complete bracket: who finishes top two in each group, who wins every
/// knockout match, and the joint probability of all of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketAssignment {
    /// `(first, second)` per group in bracket order.
    pub group_pairs: Vec<(usize, usize)>,
    /// Knockout matches per round, ops left to right.
    pub rounds: Vec<Vec<PlayedMatch>>,
    pub champion: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy)]
enum Back {
    Leaf,
    Merge((usize, usize), (usize, usize)),
    Collapse(usize, usize),
    Singles(usize, usize),
}

#[derive(Debug, Clone)]
enum MaxNode {
    Pair(BTreeMap<(usize, usize), (f64, Back)>),
    Single(BTreeMap<usize, (f64, Back)>),
}

impl MaxNode {
    fn pair(&self) -> &BTreeMap<(usize, usize), (f64, Back)> {
        match self {
            MaxNode::Pair(m) => m,
            MaxNode::Single(_) => unreachable!("validated schedule feeds pairs here"),
        }
    }

    fn single(&self) -> &BTreeMap<usize, (f64, Back)> {
        match self {
            MaxNode::Single(m) => m,
            MaxNode::Pair(_) => unreachable!("validated schedule feeds singles here"),
        }
    }
}

/// Keeps the first maximiser seen; callers visit candidates in ascending
/// tuple order so ties resolve to the smallest tuple.
fn offer<K: Ord>(map: &mut BTreeMap<K, (f64, Back)>, key: K, value: f64, back: Back) {
    if value <= 0.0 {
        return;
    }
    match map.get_mut(&key) {
        Some(slot) if value > slot.0 * (1.0 + TIE_TOLERANCE) => *slot = (value, back),
        Some(_) => {}
        None => {
            map.insert(key, (value, back));
        }
    }
}

fn leaf(g: &[usize], advance: &AdvancePairMatrix) -> MaxNode {
    let mut m = BTreeMap::new();
    for &a in g {
        for &b in g {
            let p = advance.get(a, b);
            if a != b && p > 0.0 {
                m.insert((a, b), (p, Back::Leaf));
            }
        }
    }
    MaxNode::Pair(m)
}

/// The single most probable complete bracket.
pub fn most_likely_bracket(
    matrices: &MatchMatrices,
    desc: &ScheduleDescriptor,
    opts: GroupStageOptions,
) -> Result<BracketAssignment> {
    desc.validate()?;
    if matrices.n() != desc.num_teams() {
        return Err(Error::Data(format!(
            "schedule `{}` needs {} teams, matrices hold {}",
            desc.name,
            desc.num_teams(),
            matrices.n()
        )));
    }
    let groups = desc.groups();
    let advance = group_probabilities(matrices, &groups, opts)?;
    let ko = |i: usize, j: usize| matrices.knockout(i, j);

    let mut stages: Vec<Vec<MaxNode>> = vec![groups.iter().map(|g| leaf(g, &advance)).collect()];
    for round in &desc.rounds {
        let prev = stages.last().expect("at least the group stage");
        let mut next = Vec::with_capacity(round.ops.len());
        for op in &round.ops {
            let node = match op.kind {
                OpKind::Merge => {
                    let pairing = op.pairing.expect("validated merge has a pairing");
                    let (a, b) = (prev[op.blocks[0]].pair(), prev[op.blocks[1]].pair());
                    let mut out = BTreeMap::new();
                    for (&ka, &(pa, _)) in a {
                        for (&kb, &(pb, _)) in b {
                            let ((x1, y1), (x2, y2)) = merge_matches(pairing, ka, kb);
                            let p = pa * pb;
                            let back = Back::Merge(ka, kb);
                            offer(&mut out, (x1, x2), p * ko(x1, y1) * ko(x2, y2), back);
                            offer(&mut out, (x1, y2), p * ko(x1, y1) * ko(y2, x2), back);
                            offer(&mut out, (y1, x2), p * ko(y1, x1) * ko(x2, y2), back);
                            offer(&mut out, (y1, y2), p * ko(y1, x1) * ko(y2, x2), back);
                        }
                    }
                    MaxNode::Pair(out)
                }
                OpKind::Collapse => {
                    let mut out = BTreeMap::new();
                    for (&(i, j), &(p, _)) in prev[op.blocks[0]].pair() {
                        offer(&mut out, i, p * ko(i, j), Back::Collapse(i, j));
                        offer(&mut out, j, p * ko(j, i), Back::Collapse(i, j));
                    }
                    MaxNode::Single(out)
                }
                OpKind::FinalMergeSingles => {
                    let (a, b) = (prev[op.blocks[0]].single(), prev[op.blocks[1]].single());
                    let mut out = BTreeMap::new();
                    for (&i, &(pi, _)) in a {
                        for (&j, &(pj, _)) in b {
                            offer(&mut out, i, pi * pj * ko(i, j), Back::Singles(i, j));
                            offer(&mut out, j, pi * pj * ko(j, i), Back::Singles(i, j));
                        }
                    }
                    MaxNode::Single(out)
                }
            };
            next.push(node);
        }
        stages.push(next);
    }

    let last = stages.last().expect("rounds present");
    let mut best: Option<(usize, f64)> = None;
    for (&t, &(p, _)) in last[0].single() {
        if best.is_none_or(|(_, bp)| p > bp * (1.0 + TIE_TOLERANCE)) {
            best = Some((t, p));
        }
    }
    let (champion, probability) =
        best.ok_or_else(|| Error::Data("no bracket has positive probability".into()))?;

    let mut trace = Trace {
        desc,
        stages: &stages,
        group_pairs: vec![(0, 0); desc.num_groups],
        rounds: desc
            .rounds
            .iter()
            .map(|r| vec![None; 2 * r.ops.len()])
            .collect(),
    };
    trace.single(desc.rounds.len(), 0, champion);
    let rounds = trace
        .rounds
        .into_iter()
        .map(|r| r.into_iter().flatten().collect())
        .collect();
    Ok(BracketAssignment {
        group_pairs: trace.group_pairs,
        rounds,
        champion,
        probability,
    })
}

struct Trace<'a> {
    desc: &'a ScheduleDescriptor,
    stages: &'a [Vec<MaxNode>],
    group_pairs: Vec<(usize, usize)>,
    /// Two match slots per op; collapse and singles use only the first.
    rounds: Vec<Vec<Option<PlayedMatch>>>,
}

impl Trace<'_> {
    fn record(
        &mut self,
        stage: usize,
        op: usize,
        slot: usize,
        home: usize,
        away: usize,
        winner: usize,
    ) {
        self.rounds[stage - 1][2 * op + slot] = Some(PlayedMatch { home, away, winner });
    }

    fn pair(&mut self, stage: usize, block: usize, key: (usize, usize)) {
        if stage == 0 {
            self.group_pairs[block] = key;
            return;
        }
        let (_, back) = self.stages[stage][block].pair()[&key];
        let op = &self.desc.rounds[stage - 1].ops[block];
        let Back::Merge(ka, kb) = back else {
            unreachable!("pair nodes come from merges")
        };
        let pairing = op.pairing.expect("validated merge has a pairing");
        let ((x1, y1), (x2, y2)) = merge_matches(pairing, ka, kb);
        self.record(stage, block, 0, x1, y1, key.0);
        self.record(stage, block, 1, x2, y2, key.1);
        self.pair(stage - 1, op.blocks[0], ka);
        self.pair(stage - 1, op.blocks[1], kb);
    }

    fn single(&mut self, stage: usize, block: usize, key: usize) {
        let (_, back) = self.stages[stage][block].single()[&key];
        let op = &self.desc.rounds[stage - 1].ops[block];
        match back {
            Back::Collapse(i, j) => {
                self.record(stage, block, 0, i, j, key);
                self.pair(stage - 1, op.blocks[0], (i, j));
            }
            Back::Singles(i, j) => {
                self.record(stage, block, 0, i, j, key);
                self.single(stage - 1, op.blocks[0], i);
                self.single(stage - 1, op.blocks[1], j);
            }
            _ => unreachable!("single nodes come from collapse or singles"),
        }
    }
}

/// Recompute an assignment's probability from scratch, checking that every
/// recorded match is the one the schedule would stage.
pub fn recompute_probability(
    assignment: &BracketAssignment,
    matrices: &MatchMatrices,
    desc: &ScheduleDescriptor,
    opts: GroupStageOptions,
) -> Result<f64> {
    let groups = desc.groups();
    let advance = group_probabilities(matrices, &groups, opts)?;
    if assignment.group_pairs.len() != desc.num_groups
        || assignment.rounds.len() != desc.rounds.len()
    {
        return Err(Error::Validation(vec![
            "assignment shape does not match schedule".into(),
        ]));
    }

    #[derive(Clone, Copy)]
    enum Slot {
        Pair(usize, usize),
        Single(usize),
    }
    let mut p = 1.0;
    let mut slots = Vec::new();
    for (g, &(a, b)) in assignment.group_pairs.iter().enumerate() {
        if !groups[g].contains(&a) || !groups[g].contains(&b) || a == b {
            return Err(Error::Validation(vec![format!(
                "group {g} pair ({a}, {b}) invalid"
            )]));
        }
        p *= advance.get(a, b);
        slots.push(Slot::Pair(a, b));
    }

    let mismatch = |r: usize| {
        Error::Validation(vec![format!(
            "round {} matches do not follow the schedule",
            r + 1
        )])
    };
    for (r, round) in desc.rounds.iter().enumerate() {
        let mut played = assignment.rounds[r].iter();
        let mut next = Vec::with_capacity(round.ops.len());
        let mut play = |home: usize, away: usize| -> Result<usize> {
            let m = played.next().ok_or_else(|| mismatch(r))?;
            if (m.home, m.away) != (home, away) || (m.winner != home && m.winner != away) {
                return Err(mismatch(r));
            }
            p *= matrices.knockout(m.winner, m.loser());
            Ok(m.winner)
        };
        for op in &round.ops {
            let out = match (
                op.kind,
                slots[op.blocks[0]],
                op.blocks.get(1).map(|&b| slots[b]),
            ) {
                (OpKind::Merge, Slot::Pair(a1, a2), Some(Slot::Pair(b1, b2))) => {
                    let pairing = op.pairing.ok_or_else(|| mismatch(r))?;
                    let ((x1, y1), (x2, y2)) = merge_matches(pairing, (a1, a2), (b1, b2));
                    let w1 = play(x1, y1)?;
                    let w2 = play(x2, y2)?;
                    Slot::Pair(w1, w2)
                }
                (OpKind::Collapse, Slot::Pair(i, j), None) => Slot::Single(play(i, j)?),
                (OpKind::FinalMergeSingles, Slot::Single(i), Some(Slot::Single(j))) => {
                    Slot::Single(play(i, j)?)
                }
                _ => return Err(mismatch(r)),
            };
            next.push(out);
        }
        if played.next().is_some() {
            return Err(mismatch(r));
        }
        slots = next;
    }
    match slots.as_slice() {
        [Slot::Single(c)] if *c == assignment.champion => Ok(p),
        _ => Err(Error::Validation(vec![
            "champion does not match the final".into()
        ])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::match_model::{build_matrices, KnockoutRule, ModelParams, TeamRating};

    fn matrices(points: &[f64]) -> MatchMatrices {
        let rs: Vec<_> = points
            .iter()
            .enumerate()
            .map(|(i, &p)| TeamRating {
                team_id: i,
                name: format!("t{i}"),
                points: p,
            })
            .collect();
        build_matrices(
            &rs,
            ModelParams::new(360.0).unwrap(),
            KnockoutRule::BradleyTerry,
        )
        .unwrap()
    }

    #[test]
    fn equal_ratings_closed_form() {
        let m = matrices(&[1500.0; 32]);
        let expected = (1.0f64 / 12.0).powi(8) * 0.5f64.powi(15);
        for desc in [ScheduleDescriptor::wc2022(), ScheduleDescriptor::wc2023()] {
            let b = most_likely_bracket(&m, &desc, GroupStageOptions::default()).unwrap();
            assert!(
                (b.probability / expected - 1.0).abs() < 1e-9,
                "{}",
                desc.name
            );
            let again = recompute_probability(&b, &m, &desc, GroupStageOptions::default()).unwrap();
            assert!((again / b.probability - 1.0).abs() < 1e-12);
            assert_eq!(b.rounds.iter().map(Vec::len).sum::<usize>(), 15);
        }
    }

    #[test]
    fn ties_resolve_to_smallest_ids() {
        let m = matrices(&[1500.0; 32]);
        let b = most_likely_bracket(
            &m,
            &ScheduleDescriptor::wc2022(),
            GroupStageOptions::default(),
        )
        .unwrap();
        assert_eq!(b.group_pairs[0], (0, 1));
        assert_eq!(b.champion, 0);
    }

    #[test]
    fn strongest_team_wins_lopsided_field() {
        let mut pts = vec![1500.0; 32];
        pts[13] = 2600.0;
        let m = matrices(&pts);
        let b = most_likely_bracket(
            &m,
            &ScheduleDescriptor::wc2023(),
            GroupStageOptions::default(),
        )
        .unwrap();
        assert_eq!(b.champion, 13);
        assert_eq!(b.group_pairs[3].0, 13);
    }

    #[test]
    fn tampered_assignment_rejected() {
        let m = matrices(&[1500.0; 32]);
        let desc = ScheduleDescriptor::wc2022();
        let mut b = most_likely_bracket(&m, &desc, GroupStageOptions::default()).unwrap();
        b.rounds[1][0].home = 31;
        assert!(recompute_probability(&b, &m, &desc, GroupStageOptions::default()).is_err());
    }
}
