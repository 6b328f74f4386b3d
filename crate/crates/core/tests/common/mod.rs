//! Brute-force oracles that share no code with the propagation pipeline
//! beyond the single-match probabilities.
#![allow(dead_code)]

use std::collections::HashMap;

use bracket_exact::match_model::{
    build_matrices, KnockoutRule, MatchMatrices, ModelParams, TeamRating,
};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Pair = (usize, usize);

/// One group result assignment: probability and tie-broken top-two weights.
pub type GroupOutcome = (f64, Vec<(Pair, Ratio<i64>)>);

pub fn random_ratings(n: usize, seed: u64) -> Vec<TeamRating> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| TeamRating {
            team_id: i,
            name: format!("t{i}"),
            points: rng.random_range(1200.0..2000.0),
        })
        .collect()
}

pub fn matrices(ratings: &[TeamRating], sigma: f64, rule: KnockoutRule) -> MatchMatrices {
    build_matrices(ratings, ModelParams::new(sigma).unwrap(), rule).unwrap()
}

/// Every result assignment of one group with its probability and the exact
/// (first, second) distribution obtained by ordering tied teams uniformly at
/// random.
pub fn enumerate_group(m: &MatchMatrices, teams: &[usize]) -> Vec<GroupOutcome> {
    let k = teams.len();
    let fixtures: Vec<Pair> = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .collect();
    let perms = permutations(k);
    let mut out = Vec::new();
    let total = 3usize.pow(fixtures.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut prob = 1.0;
        let mut pts = vec![0u32; k];
        for &(a, b) in &fixtures {
            let result = (c % 3) as u8;
            c /= 3;
            prob *= m.group(teams[a], teams[b]).prob(result);
            match result {
                2 => pts[a] += 3,
                1 => {
                    pts[a] += 1;
                    pts[b] += 1;
                }
                _ => pts[b] += 3,
            }
        }
        let consistent: Vec<&Vec<usize>> = perms
            .iter()
            .filter(|p| p.windows(2).all(|w| pts[w[0]] >= pts[w[1]]))
            .collect();
        let mut counts: HashMap<Pair, i64> = HashMap::new();
        for p in &consistent {
            *counts.entry((teams[p[0]], teams[p[1]])).or_default() += 1;
        }
        let n = consistent.len() as i64;
        let mut pairs: Vec<_> = counts
            .into_iter()
            .map(|(pair, c)| (pair, Ratio::new(c, n)))
            .collect();
        pairs.sort();
        out.push((prob, pairs));
    }
    out
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

pub fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn oracle_g(m: &MatchMatrices, teams: &[usize]) -> HashMap<Pair, f64> {
    let mut g = HashMap::new();
    for (p, pairs) in enumerate_group(m, teams) {
        for (pair, w) in pairs {
            *g.entry(pair).or_default() += p * to_f64(w);
        }
    }
    g
}

/// Exact mini2 (two groups of four, cross semifinals, final) by joint
/// enumeration of both groups and all three knockout matches.
pub struct MiniOracle {
    pub reach: Vec<[f64; 3]>,
    pub finalists: HashMap<Pair, f64>,
}

pub fn mini_oracle(m: &MatchMatrices) -> MiniOracle {
    let ga = enumerate_group(m, &[0, 1, 2, 3]);
    let gb = enumerate_group(m, &[4, 5, 6, 7]);
    let mut reach = vec![[0.0; 3]; 8];
    let mut finalists = HashMap::new();
    for (pa, pairs_a) in &ga {
        for (pb, pairs_b) in &gb {
            let p_seq = pa * pb;
            if p_seq == 0.0 {
                continue;
            }
            for &((a1, a2), wa) in pairs_a {
                for &((b1, b2), wb) in pairs_b {
                    let p = p_seq * to_f64(wa * wb);
                    for t in [a1, a2, b1, b2] {
                        reach[t][0] += p;
                    }
                    for outcome in 0..8u8 {
                        let (w1, l1) = if outcome & 1 == 0 { (a1, b2) } else { (b2, a1) };
                        let (w2, l2) = if outcome & 2 == 0 { (b1, a2) } else { (a2, b1) };
                        let (champ, runner) = if outcome & 4 == 0 { (w1, w2) } else { (w2, w1) };
                        let q =
                            p * m.knockout(w1, l1) * m.knockout(w2, l2) * m.knockout(champ, runner);
                        reach[champ][2] += q;
                        if outcome & 4 == 0 {
                            reach[w1][1] += p * m.knockout(w1, l1) * m.knockout(w2, l2);
                            reach[w2][1] += p * m.knockout(w1, l1) * m.knockout(w2, l2);
                            *finalists.entry((w1, w2)).or_default() +=
                                p * m.knockout(w1, l1) * m.knockout(w2, l2);
                        }
                    }
                }
            }
        }
    }
    MiniOracle { reach, finalists }
}
