//! Monte Carlo baseline sampling whole tournaments from the same matrices.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::bracket::dist::merge_matches;
use crate::bracket::{
    compute_tournament, ComputeOptions, OpKind, RoundReachTable, ScheduleDescriptor,
};
use crate::error::{Error, Result};
use crate::match_model::MatchMatrices;

/// Generator for run `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One sampled tournament.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutcome {
    pub champion: usize,
    /// Teams still alive at each reach column (group stage first).
    pub survivors: Vec<Vec<usize>>,
    /// Number of match outcomes drawn.
    pub match_samples: usize,
}

#[derive(Clone, Copy)]
enum Slot {
    Pair(usize, usize),
    Single(usize),
}

/// Tournament sampler for a fixed schedule and set of matrices.
pub struct Simulator<'a> {
    matrices: &'a MatchMatrices,
    desc: &'a ScheduleDescriptor,
    /// Per group: `(i, j, P(i loses), P(i loses or draws))`.
    fixtures: Vec<Vec<(usize, usize, f64, f64)>>,
}

impl<'a> Simulator<'a> {
    pub fn new(matrices: &'a MatchMatrices, desc: &'a ScheduleDescriptor) -> Result<Self> {
        desc.validate()?;
        if matrices.n() != desc.num_teams() {
            return Err(Error::Data(format!(
                "schedule `{}` needs {} teams, matrices hold {}",
                desc.name,
                desc.num_teams(),
                matrices.n()
            )));
        }
        let fixtures = desc
            .groups()
            .iter()
            .map(|g| {
                let mut f = Vec::new();
                for (b, &j) in g.iter().enumerate() {
                    for &i in &g[..b] {
                        let d = matrices.group(i, j);
                        f.push((i, j, d.p_loss, d.p_loss + d.p_draw));
                    }
                }
                f
            })
            .collect();
        Ok(Self {
            matrices,
            desc,
            fixtures,
        })
    }

    /// Sample one tournament, reporting every survivor by reach column.
    fn play<R: Rng>(&self, rng: &mut R, on_reach: &mut impl FnMut(usize, usize)) -> (usize, usize) {
        let k = self.desc.group_size;
        let mut samples = 0;
        let mut slots = Vec::with_capacity(self.desc.num_groups);
        for (g, fixtures) in self.fixtures.iter().enumerate() {
            let lo = g * k;
            let mut points = [0u32; 8];
            for &(i, j, lose, lose_or_draw) in fixtures {
                let u: f64 = rng.random();
                samples += 1;
                if u < lose {
                    points[j - lo] += 3;
                } else if u < lose_or_draw {
                    points[i - lo] += 1;
                    points[j - lo] += 1;
                } else {
                    points[i - lo] += 3;
                }
            }
            let mut order = [0usize, 1, 2, 3, 4, 5, 6, 7];
            let order = &mut order[..k];
            order.sort_by(|&a, &b| points[b].cmp(&points[a]));
            // Uniform order among tied teams.
            let mut start = 0;
            while start < k {
                let mut end = start + 1;
                while end < k && points[order[end]] == points[order[start]] {
                    end += 1;
                }
                for i in (start + 1..end).rev() {
                    let j = rng.random_range(start..=i);
                    order.swap(i, j);
                }
                start = end;
            }
            let (a, b) = (lo + order[0], lo + order[1]);
            on_reach(0, a);
            on_reach(0, b);
            slots.push(Slot::Pair(a, b));
        }

        let mut play = |x: usize, y: usize| -> usize {
            samples += 1;
            if rng.random::<f64>() < self.matrices.knockout(x, y) {
                x
            } else {
                y
            }
        };
        for (r, round) in self.desc.rounds.iter().enumerate() {
            let mut next = Vec::with_capacity(round.ops.len());
            for op in &round.ops {
                let out = match (
                    op.kind,
                    slots[op.blocks[0]],
                    op.blocks.get(1).map(|&b| slots[b]),
                ) {
                    (OpKind::Merge, Slot::Pair(a1, a2), Some(Slot::Pair(b1, b2))) => {
                        let pairing = op.pairing.expect("validated merge has a pairing");
                        let ((x1, y1), (x2, y2)) = merge_matches(pairing, (a1, a2), (b1, b2));
                        Slot::Pair(play(x1, y1), play(x2, y2))
                    }
                    (OpKind::Collapse, Slot::Pair(i, j), None) => Slot::Single(play(i, j)),
                    (OpKind::FinalMergeSingles, Slot::Single(i), Some(Slot::Single(j))) => {
                        Slot::Single(play(i, j))
                    }
                    _ => unreachable!("validated schedule"),
                };
                match out {
                    Slot::Pair(a, b) => {
                        on_reach(r + 1, a);
                        on_reach(r + 1, b);
                    }
                    Slot::Single(a) => on_reach(r + 1, a),
                }
                next.push(out);
            }
            slots = next;
        }
        match slots[0] {
            Slot::Single(c) => (c, samples),
            Slot::Pair(..) => unreachable!("validated schedule ends in a single"),
        }
    }

    pub fn simulate_once<R: Rng>(&self, rng: &mut R) -> SimOutcome {
        let mut survivors = vec![Vec::new(); self.desc.rounds.len() + 1];
        let (champion, match_samples) = self.play(rng, &mut |c, t| survivors[c].push(t));
        SimOutcome {
            champion,
            survivors,
            match_samples,
        }
    }

    /// Frequencies over `runs` tournaments drawn from stream `stream` of `seed`.
    pub fn estimate(&self, runs: usize, seed: u64, stream: u64) -> Result<SimulationResult> {
        if runs == 0 {
            return Err(Error::InvalidParameter("runs must be at least 1".into()));
        }
        let n = self.desc.num_teams();
        let cols = self.desc.rounds.len() + 1;
        let mut counts = vec![0u64; n * cols];
        let mut rng = stream_rng(seed, stream);
        for _ in 0..runs {
            self.play(&mut rng, &mut |c, t| counts[t * cols + c] += 1);
        }
        let scale = 1.0 / runs as f64;
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|t| {
                (0..cols)
                    .map(|c| counts[t * cols + c] as f64 * scale)
                    .collect()
            })
            .collect();
        let champion_freq = probs.iter().map(|row| row[cols - 1]).collect();
        Ok(SimulationResult {
            runs,
            seed,
            stream,
            champion_freq,
            reach_freq: RoundReachTable {
                labels: self.desc.reach_labels(),
                probs,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub runs: usize,
    pub seed: u64,
    pub stream: u64,
    pub champion_freq: Vec<f64>,
    pub reach_freq: RoundReachTable,
}

/// Sample once with a caller-supplied generator.
pub fn simulate_once<R: Rng>(
    matrices: &MatchMatrices,
    desc: &ScheduleDescriptor,
    rng: &mut R,
) -> Result<SimOutcome> {
    Ok(Simulator::new(matrices, desc)?.simulate_once(rng))
}

pub fn estimate(
    matrices: &MatchMatrices,
    desc: &ScheduleDescriptor,
    runs: usize,
    seed: u64,
) -> Result<SimulationResult> {
    Simulator::new(matrices, desc)?.estimate(runs, seed, 0)
}

/// Error measures over championship probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub rmse: f64,
}

impl ErrorReport {
    pub fn between(estimate: &[f64], exact: &[f64]) -> Self {
        assert_eq!(estimate.len(), exact.len(), "vectors must align");
        let n = exact.len() as f64;
        let (mut max_abs, mut sum_abs, mut sum_sq) = (0.0f64, 0.0, 0.0);
        for (e, x) in estimate.iter().zip(exact) {
            let d = (e - x).abs();
            max_abs = max_abs.max(d);
            sum_abs += d;
            sum_sq += d * d;
        }
        Self {
            max_abs,
            mean_abs: sum_abs / n,
            rmse: (sum_sq / n).sqrt(),
        }
    }

    pub fn get(&self, m: Measure) -> f64 {
        match m {
            Measure::MaxAbs => self.max_abs,
            Measure::MeanAbs => self.mean_abs,
            Measure::Rmse => self.rmse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    MaxAbs,
    MeanAbs,
    Rmse,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::MaxAbs, Measure::MeanAbs, Measure::Rmse];

    pub fn name(self) -> &'static str {
        match self {
            Measure::MaxAbs => "max_abs",
            Measure::MeanAbs => "mean_abs",
            Measure::Rmse => "rmse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut d = Data::new(values.to_vec());
        Self {
            q1: d.lower_quartile(),
            median: d.median(),
            q3: d.upper_quartile(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub runs: usize,
    pub max_abs: Quartiles,
    pub mean_abs: Quartiles,
    pub rmse: Quartiles,
    /// Per-trial reports, trial order.
    pub trials: Vec<ErrorReport>,
}

impl GridPoint {
    pub fn quartiles(&self, m: Measure) -> Quartiles {
        match m {
            Measure::MaxAbs => self.max_abs,
            Measure::MeanAbs => self.mean_abs,
            Measure::Rmse => self.rmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<GridPoint>,
    /// Simulation runs that fit in one exact computation, when measured.
    pub equivalent_runs: Option<f64>,
}

impl ConvergenceReport {
    /// `runs,trial_stat,measure,value` rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["runs", "trial_stat", "measure", "value"])
            .expect("in-memory write");
        for p in &self.points {
            for m in Measure::ALL {
                let q = p.quartiles(m);
                for (stat, v) in [("q1", q.q1), ("median", q.median), ("q3", q.q3)] {
                    w.write_record([
                        p.runs.to_string(),
                        stat.into(),
                        m.name().into(),
                        v.to_string(),
                    ])
                    .expect("in-memory write");
                }
            }
        }
        if let Some(e) = self.equivalent_runs {
            w.write_record([
                format!("{e:.0}"),
                "exact_equivalent".into(),
                "runs".into(),
                e.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }

    pub fn point(&self, runs: usize) -> Option<&GridPoint> {
        self.points.iter().find(|p| p.runs == runs)
    }
}

/// Log-spaced run counts from 10^2 to 10^5, two per decade.
pub fn default_grid() -> Vec<usize> {
    vec![100, 316, 1_000, 3_162, 10_000, 31_623, 100_000]
}

/// For each grid size, `trials` independent estimates compared with `exact`.
///
/// Trial `t` at grid index `g` uses stream `g * trials + t` of `seed`, so
/// results do not depend on thread scheduling.
pub fn convergence_experiment(
    matrices: &MatchMatrices,
    desc: &ScheduleDescriptor,
    exact: &[f64],
    grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let sim = Simulator::new(matrices, desc)?;
    let mut points = Vec::with_capacity(grid.len());
    for (g, &runs) in grid.iter().enumerate() {
        let reports = (0..trials)
            .into_par_iter()
            .map(|t| {
                let r = sim.estimate(runs, seed, (g * trials + t) as u64)?;
                Ok(ErrorReport::between(&r.champion_freq, exact))
            })
            .collect::<Result<Vec<_>>>()?;
        let col = |m: Measure| Quartiles::of(&reports.iter().map(|r| r.get(m)).collect::<Vec<_>>());
        points.push(GridPoint {
            runs,
            max_abs: col(Measure::MaxAbs),
            mean_abs: col(Measure::MeanAbs),
            rmse: col(Measure::Rmse),
            trials: reports,
        });
    }
    Ok(ConvergenceReport {
        points,
        equivalent_runs: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schedule: String,
    pub repetitions: usize,
    /// Median wall time of one exact computation, seconds.
    pub exact_seconds: f64,
    /// Median wall time per simulated tournament, seconds.
    pub per_run_seconds: f64,
    /// Simulation runs that take as long as one exact computation.
    pub equivalent_runs: f64,
    /// Whether every exact repetition returned bit-identical probabilities.
    pub exact_deterministic: bool,
}

fn median_secs(mut v: Vec<Duration>) -> f64 {
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2].as_secs_f64()
    } else {
        (v[n / 2 - 1].as_secs_f64() + v[n / 2].as_secs_f64()) / 2.0
    }
}

/// Time exact computation against single-threaded simulation.
pub fn benchmark(
    matrices: &MatchMatrices,
    desc: &ScheduleDescriptor,
    repetitions: usize,
    sim_runs: usize,
    seed: u64,
) -> Result<BenchmarkReport> {
    if repetitions < 5 {
        return Err(Error::InvalidParameter(format!(
            "need at least 5 repetitions, got {repetitions}"
        )));
    }
    if sim_runs == 0 {
        return Err(Error::InvalidParameter(
            "sim_runs must be at least 1".into(),
        ));
    }
    let opts = ComputeOptions::default();
    let reference = compute_tournament(matrices, desc, opts)?.win;
    let sim = Simulator::new(matrices, desc)?;
    sim.estimate(sim_runs.min(100), seed, u64::MAX)?;

    let mut exact_times = Vec::with_capacity(repetitions);
    let mut sim_times = Vec::with_capacity(repetitions);
    let mut deterministic = true;
    for rep in 0..repetitions {
        let start = Instant::now();
        let r = compute_tournament(matrices, desc, opts)?;
        exact_times.push(start.elapsed());
        deterministic &= r
            .win
            .iter()
            .zip(&reference)
            .all(|(a, b)| a.to_bits() == b.to_bits());

        let start = Instant::now();
        std::hint::black_box(sim.estimate(sim_runs, seed, rep as u64)?);
        sim_times.push(start.elapsed() / sim_runs as u32);
    }
    let exact_seconds = median_secs(exact_times);
    let per_run_seconds = median_secs(sim_times);
    Ok(BenchmarkReport {
        schedule: desc.name.clone(),
        repetitions,
        exact_seconds,
        per_run_seconds,
        equivalent_runs: exact_seconds / per_run_seconds,
        exact_deterministic: deterministic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::match_model::{
        apply_overrides, build_matrices, KnockoutRule, MatchResult, ModelParams, OutcomeOverride,
        Stage, TeamRating,
    };

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
    fn sixty_three_samples() {
        let m = matrices(&[1500.0; 32]);
        for desc in [ScheduleDescriptor::wc2022(), ScheduleDescriptor::wc2023()] {
            let mut rng = stream_rng(7, 0);
            let o = simulate_once(&m, &desc, &mut rng).unwrap();
            assert_eq!(o.match_samples, 63);
            let sizes: Vec<_> = o.survivors.iter().map(Vec::len).collect();
            assert_eq!(sizes, [16, 8, 4, 2, 1]);
            assert_eq!(o.survivors[4], [o.champion]);
        }
    }

    #[test]
    fn forced_champion() {
        let desc = ScheduleDescriptor::mini2();
        let m = matrices(&[1500.0; 8]);
        let mut fixed = Vec::new();
        for i in 0..8 {
            for j in i + 1..8 {
                let stage = if i / 4 == j / 4 {
                    Stage::Group
                } else {
                    Stage::Knockout
                };
                fixed.push(OutcomeOverride {
                    stage,
                    team_a: i,
                    team_b: j,
                    result: MatchResult::AWins,
                });
                if stage == Stage::Group {
                    fixed.push(OutcomeOverride {
                        stage: Stage::Knockout,
                        team_a: i,
                        team_b: j,
                        result: MatchResult::AWins,
                    });
                }
            }
        }
        let m = apply_overrides(&m, &fixed).unwrap();
        let r = estimate(&m, &desc, 500, 3).unwrap();
        assert_eq!(r.champion_freq[0], 1.0);
    }

    #[test]
    fn seeded_runs_repeat() {
        let m = matrices(
            &(0..32)
                .map(|i| 1400.0 + 10.0 * i as f64)
                .collect::<Vec<_>>(),
        );
        let desc = ScheduleDescriptor::wc2022();
        let a = estimate(&m, &desc, 2_000, 42).unwrap();
        let b = estimate(&m, &desc, 2_000, 42).unwrap();
        let c = estimate(&m, &desc, 2_000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.champion_freq, c.champion_freq);
        assert!((a.champion_freq.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for col in 0..5 {
            assert!((a.reach_freq.column_sum(col) - [16.0, 8.0, 4.0, 2.0, 1.0][col]).abs() < 1e-9);
        }
    }

    #[test]
    fn error_measures() {
        let e = ErrorReport::between(&[0.5, 0.5, 0.0], &[0.2, 0.5, 0.3]);
        assert!((e.max_abs - 0.3).abs() < 1e-15);
        assert!((e.mean_abs - 0.2).abs() < 1e-15);
        assert!((e.rmse - (0.06f64).sqrt()).abs() < 1e-15);
        assert!(e.max_abs >= e.rmse && e.rmse >= e.mean_abs);
    }

    #[test]
    fn quartiles_of_known_data() {
        let q = Quartiles::of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(q.median, 3.0);
        assert!(q.q1 <= 2.0 + 1e-12 && q.q1 >= 1.0 && q.q3 >= 4.0 - 1e-12 && q.q3 <= 5.0);
    }

    #[test]
    fn experiment_csv_shape() {
        let m = matrices(&[1500.0; 32]);
        let desc = ScheduleDescriptor::wc2023();
        let exact = vec![1.0 / 32.0; 32];
        let r = convergence_experiment(&m, &desc, &exact, &[50, 200], 4, 1).unwrap();
        let again = convergence_experiment(&m, &desc, &exact, &[50, 200], 4, 1).unwrap();
        assert_eq!(r, again);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 3 * 3);
        assert!(csv.starts_with("runs,trial_stat,measure,value\n50,q1,max_abs,"));
    }
}
