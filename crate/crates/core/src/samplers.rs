//! Random walks over a fiber: an exact conditional single-move sampler,
//! an accept-all walk with integer step multipliers, the level-scheduled
//! driver feeding the multilevel estimator, and a real-valued Brownian
//! walker over the fiber polytope for Voronoi center generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::factorial::ln_factorial;

use crate::error::{FiberError, Result};
use crate::fiber::{DesignMatrix, FiberPoint, SufficientStatistic};
use crate::moves::{BasisKind, Move, MoveBasis};
use crate::multilevel::{LevelSampleSet, LevelSamples};
use crate::seeding::{derive_seed, tag};

/// Law of the signed step count chosen along a move's feasible line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSizeDistribution {
    /// Weight of offset j proportional to the product of 1/(x_i + j f_i)!
    /// over the move support; stationary law has mass proportional to the
    /// product of 1/x_i! over cells.
    Hypergeometric,
    /// Weight proportional to the product of (x_i + j f_i)! instead.
    Inverted,
    /// Every feasible offset equally likely.
    UniformOnRange,
}

/// Transition rule used by [`run_chain`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// One exact conditional draw along a uniformly chosen move.
    DirectStep(StepSizeDistribution),
    /// Propose the current point plus (sign * multiplier * move) and hold
    /// whenever the proposal has a negative cell.
    UniformWalk { multiplier: i64 },
}

fn step_range_on_cells(cells: &[i64], mv: &Move) -> Result<(i64, i64)> {
    let mut lo: Option<i64> = None;
    let mut hi: Option<i64> = None;
    let delta = mv.delta();
    for &i in mv.support() {
        let d = delta[i];
        let x = cells[i];
        debug_assert!(x >= 0);
        if d > 0 {
            // x + j d >= 0  <=>  j >= -x/d
            let bound = -x.div_euclid(d);
            lo = Some(lo.map_or(bound, |v| v.max(bound)));
        } else {
            let bound = x.div_euclid(-d);
            hi = Some(hi.map_or(bound, |v| v.min(bound)));
        }
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) => {
            debug_assert!(lo <= 0 && hi >= 0);
            Ok((lo, hi))
        }
        _ => Err(FiberError::UnboundedRange),
    }
}

/// The maximal interval of integers j with `g + j*f` nonnegative in every
/// cell.  Always contains j = 0; a move whose entries are all of one sign
/// leaves the interval unbounded on a side, which is an error.
pub fn feasible_step_range(g: &FiberPoint, f: &Move) -> Result<(i64, i64)> {
    if f.len() != g.len() {
        return Err(FiberError::DimensionMismatch {
            context: "move against point",
            expected: g.len(),
            got: f.len(),
        });
    }
    step_range_on_cells(g.cells(), f)
}

fn fill_step_weights(
    cells: &[i64],
    mv: &Move,
    lo: i64,
    hi: i64,
    mode: StepSizeDistribution,
    weights: &mut Vec<f64>,
) {
    weights.clear();
    let len = (hi - lo + 1) as usize;
    if mode == StepSizeDistribution::UniformOnRange {
        weights.resize(len, 1.0 / len as f64);
        return;
    }
    let sign = match mode {
        StepSizeDistribution::Hypergeometric => -1.0,
        StepSizeDistribution::Inverted => 1.0,
        StepSizeDistribution::UniformOnRange => unreachable!(),
    };
    let delta = mv.delta();
    let mut peak = f64::NEG_INFINITY;
    for j in lo..=hi {
        let mut acc = 0.0;
        for &i in mv.support() {
            let v = cells[i] + j * delta[i];
            debug_assert!(v >= 0);
            acc += ln_factorial(v as u64);
        }
        let logw = sign * acc;
        if logw > peak {
            peak = logw;
        }
        weights.push(logw);
    }
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - peak).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
}

/// Normalized law of the feasible offsets `lo..=hi` for one move from one
/// point; entry t is the probability of offset `lo + t`.
pub fn step_weights(
    g: &FiberPoint,
    f: &Move,
    mode: StepSizeDistribution,
) -> Result<(i64, Vec<f64>)> {
    let (lo, hi) = feasible_step_range(g, f)?;
    let mut weights = Vec::new();
    fill_step_weights(g.cells(), f, lo, hi, mode, &mut weights);
    Ok((lo, weights))
}

fn draw_categorical(weights: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (idx, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return idx;
        }
    }
    weights.len() - 1
}

fn ds_transition(
    cells: &mut [i64],
    basis: &MoveBasis,
    mode: StepSizeDistribution,
    rng: &mut impl Rng,
    weights: &mut Vec<f64>,
) -> Result<bool> {
    let mv = &basis.moves()[rng.gen_range(0..basis.len())];
    let (lo, hi) = step_range_on_cells(cells, mv)?;
    fill_step_weights(cells, mv, lo, hi, mode, weights);
    let j = lo + draw_categorical(weights, rng) as i64;
    if j == 0 {
        return Ok(false);
    }
    let delta = mv.delta();
    for &i in mv.support() {
        cells[i] += j * delta[i];
    }
    Ok(true)
}

fn walk_transition(
    cells: &mut [i64],
    basis: &MoveBasis,
    multiplier: i64,
    rng: &mut impl Rng,
    scratch: &mut Vec<i64>,
) -> Result<bool> {
    let mv = &basis.moves()[rng.gen_range(0..basis.len())];
    let sign: i64 = if rng.gen::<bool>() { 1 } else { -1 };
    let delta = mv.delta();
    scratch.clear();
    for &i in mv.support() {
        let value = delta[i]
            .checked_mul(multiplier)
            .and_then(|v| v.checked_mul(sign))
            .and_then(|v| cells[i].checked_add(v))
            .ok_or(FiberError::Overflow("walk proposal"))?;
        if value < 0 {
            return Ok(false);
        }
        scratch.push(value);
    }
    for (&value, &i) in scratch.iter().zip(mv.support()) {
        cells[i] = value;
    }
    Ok(true)
}

fn check_chain_inputs(basis: &MoveBasis, start: &FiberPoint) -> Result<()> {
    if basis.is_empty() {
        return Err(FiberError::Empty("move basis"));
    }
    let width = basis.moves()[0].len();
    if width != start.len() {
        return Err(FiberError::DimensionMismatch {
            context: "chain start",
            expected: width,
            got: start.len(),
        });
    }
    Ok(())
}

/// One exact conditional update: pick a move uniformly, then draw a
/// feasible offset along it from the requested law.
pub fn ds_step(
    g: &FiberPoint,
    basis: &MoveBasis,
    mode: StepSizeDistribution,
    rng: &mut impl Rng,
) -> Result<FiberPoint> {
    check_chain_inputs(basis, g)?;
    let mut cells = g.cells().to_vec();
    let mut weights = Vec::new();
    ds_transition(&mut cells, basis, mode, rng, &mut weights)?;
    Ok(FiberPoint::from_feasible(cells))
}

/// One accept-all update: pick a move and a sign uniformly, apply the move
/// scaled by `multiplier` when the result stays nonnegative, hold
/// otherwise.
pub fn uniform_walk_step(
    g: &FiberPoint,
    basis: &MoveBasis,
    multiplier: i64,
    rng: &mut impl Rng,
) -> Result<FiberPoint> {
    check_chain_inputs(basis, g)?;
    if multiplier < 1 {
        return Err(FiberError::InvalidArgument(
            "step multiplier must be at least 1".into(),
        ));
    }
    let mut cells = g.cells().to_vec();
    let mut scratch = Vec::new();
    walk_transition(&mut cells, basis, multiplier, rng, &mut scratch)?;
    Ok(FiberPoint::from_feasible(cells))
}

/// Settings shared by every chain run.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub basis: MoveBasis,
    pub start: FiberPoint,
    pub steps: u64,
    pub seed: u64,
    pub record_every: u64,
    pub burn_in: u64,
    /// When set, the run verifies the start against these margins and, in
    /// debug builds, re-checks them after every transition.
    pub margin_check: Option<(DesignMatrix, SufficientStatistic)>,
}

impl ChainConfig {
    pub fn new(basis: MoveBasis, start: FiberPoint, steps: u64, seed: u64) -> Self {
        Self {
            basis,
            start,
            steps,
            seed,
            record_every: 1,
            burn_in: 0,
            margin_check: None,
        }
    }

    pub fn with_record_every(mut self, record_every: u64) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_margin_check(mut self, a: DesignMatrix, b: SufficientStatistic) -> Self {
        self.margin_check = Some((a, b));
        self
    }
}

/// Recorded output of a chain run.
#[derive(Debug, Clone)]
pub struct ChainRun {
    /// Recorded states with their statistic values, oldest first.
    pub samples: Vec<(FiberPoint, f64)>,
    /// Transitions that changed the state (offset 0 draws and held
    /// proposals do not count).
    pub moved: u64,
    /// Total transitions attempted, burn-in included.
    pub steps: u64,
}

/// Runs a chain for `burn_in + steps` transitions, recording every
/// `record_every`-th post-burn-in state together with its statistic value.
/// Deterministic given the seed.
pub fn run_chain<F>(config: &ChainConfig, stepper: Stepper, mut statistic: F) -> Result<ChainRun>
where
    F: FnMut(&FiberPoint) -> Result<f64>,
{
    check_chain_inputs(&config.basis, &config.start)?;
    if config.steps < 1 {
        return Err(FiberError::InvalidArgument(
            "chain needs at least one step".into(),
        ));
    }
    if config.record_every < 1 {
        return Err(FiberError::InvalidArgument(
            "record_every must be at least 1".into(),
        ));
    }
    if let Stepper::UniformWalk { multiplier } = stepper {
        if multiplier < 1 {
            return Err(FiberError::InvalidArgument(
                "step multiplier must be at least 1".into(),
            ));
        }
    }
    if let Some((a, b)) = &config.margin_check {
        let margins = a.multiply(config.start.cells())?;
        if margins != b.values() {
            return Err(FiberError::InvalidArgument(
                "chain start does not satisfy the margin constraints".into(),
            ));
        }
    }
    let total = config
        .burn_in
        .checked_add(config.steps)
        .ok_or(FiberError::Overflow("chain length"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cells = config.start.cells().to_vec();
    let mut weights = Vec::new();
    let mut scratch = Vec::new();
    let mut samples = Vec::with_capacity((config.steps / config.record_every) as usize);
    let mut moved = 0u64;
    for step in 1..=total {
        let changed = match stepper {
            Stepper::DirectStep(mode) => {
                ds_transition(&mut cells, &config.basis, mode, &mut rng, &mut weights)?
            }
            Stepper::UniformWalk { multiplier } => {
                walk_transition(&mut cells, &config.basis, multiplier, &mut rng, &mut scratch)?
            }
        };
        if changed {
            moved += 1;
        }
        #[cfg(debug_assertions)]
        if let Some((a, b)) = &config.margin_check {
            let margins = a.multiply(&cells)?;
            debug_assert_eq!(margins, b.values(), "chain left the fiber at step {step}");
        }
        if step > config.burn_in && (step - config.burn_in).is_multiple_of(config.record_every) {
            let point = FiberPoint::from_feasible(cells.clone());
            let value = statistic(&point)?;
            samples.push((point, value));
        }
    }
    Ok(ChainRun {
        samples,
        moved,
        steps: total,
    })
}

/// Multiplier ladder and per-level sample counts for the multilevel
/// estimator.  Multipliers decrease strictly and end at 1; level 1 is the
/// coarsest chain and carries the base density term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSchedule {
    multipliers: Vec<i64>,
    samples_per_level: Vec<u64>,
}

impl LevelSchedule {
    pub fn new(multipliers: Vec<i64>, samples_per_level: Vec<u64>) -> Result<Self> {
        if multipliers.is_empty() {
            return Err(FiberError::Empty("level schedule"));
        }
        if multipliers.len() != samples_per_level.len() {
            return Err(FiberError::DimensionMismatch {
                context: "level schedule",
                expected: multipliers.len(),
                got: samples_per_level.len(),
            });
        }
        if *multipliers.last().unwrap() != 1 {
            return Err(FiberError::InvalidArgument(
                "the last level multiplier must be 1".into(),
            ));
        }
        if multipliers.windows(2).any(|w| w[0] <= w[1]) {
            return Err(FiberError::InvalidArgument(
                "level multipliers must be strictly decreasing".into(),
            ));
        }
        if samples_per_level.contains(&0) {
            return Err(FiberError::InvalidArgument(
                "every level needs at least one sample".into(),
            ));
        }
        Ok(Self {
            multipliers,
            samples_per_level,
        })
    }

    /// Multipliers `levels, levels-1, .., 1` with sample counts halved per
    /// level starting from `base`.
    pub fn halving(levels: usize, base: u64) -> Result<Self> {
        if levels == 0 {
            return Err(FiberError::Empty("level schedule"));
        }
        if levels > 63 {
            return Err(FiberError::InvalidArgument(
                "halving schedule supports at most 63 levels".into(),
            ));
        }
        let multipliers = (1..=levels as i64).rev().collect();
        let samples = (0..levels).map(|l| base >> l).collect();
        Self::new(multipliers, samples)
    }

    /// Splits a total sample budget across `levels` levels with weights
    /// halving per level, flooring each share and assigning the remainder
    /// to level 1.
    pub fn proportional(levels: usize, total: u64) -> Result<Self> {
        if levels == 0 {
            return Err(FiberError::Empty("level schedule"));
        }
        if levels > 63 {
            return Err(FiberError::InvalidArgument(
                "proportional schedule supports at most 63 levels".into(),
            ));
        }
        let weights: Vec<f64> = (0..levels).map(|l| 0.5f64.powi(l as i32)).collect();
        let weight_sum: f64 = weights.iter().sum();
        let mut samples: Vec<u64> = weights
            .iter()
            .map(|w| ((total as f64) * w / weight_sum).floor() as u64)
            .collect();
        let used: u64 = samples.iter().sum();
        samples[0] += total - used;
        let multipliers = (1..=levels as i64).rev().collect();
        Self::new(multipliers, samples)
    }

    pub fn levels(&self) -> usize {
        self.multipliers.len()
    }

    pub fn multipliers(&self) -> &[i64] {
        &self.multipliers
    }

    pub fn samples(&self) -> &[u64] {
        &self.samples_per_level
    }

    pub fn total_samples(&self) -> u64 {
        self.samples_per_level.iter().sum()
    }
}

fn level_chain_config(config: &ChainConfig, level: usize, samples: u64) -> Result<ChainConfig> {
    let mut level_cfg = config.clone();
    level_cfg.steps = samples
        .checked_mul(config.record_every)
        .ok_or(FiberError::Overflow("level step budget"))?;
    level_cfg.seed = derive_seed(config.seed, tag::LEVEL, level as u64);
    Ok(level_cfg)
}

/// Runs one accept-all chain per schedule level (multiplier m_l, fresh
/// seed stream), recording each level's statistic values, then couples
/// every level l >= 2 to its predecessor by drawing that many values
/// uniformly with replacement from level l-1's record.  Levels whose chain
/// never moved are reported as starved.  `config.steps` is ignored; each
/// level runs long enough to record its scheduled sample count.
pub fn run_level_samples<F>(
    schedule: &LevelSchedule,
    config: &ChainConfig,
    mut statistic: F,
) -> Result<LevelSampleSet>
where
    F: FnMut(&FiberPoint) -> Result<f64>,
{
    let mut levels: Vec<LevelSamples> = Vec::with_capacity(schedule.levels());
    let mut starved = Vec::new();
    for (idx, (&multiplier, &samples)) in schedule
        .multipliers()
        .iter()
        .zip(schedule.samples())
        .enumerate()
    {
        let level = idx + 1;
        let level_cfg = level_chain_config(config, level, samples)?;
        let run = run_chain(&level_cfg, Stepper::UniformWalk { multiplier }, &mut statistic)?;
        if run.moved == 0 {
            starved.push(level);
        }
        let y: Vec<f64> = run.samples.iter().map(|(_, v)| *v).collect();
        debug_assert_eq!(y.len() as u64, samples);
        let z = if idx == 0 {
            None
        } else {
            let prev = &levels[idx - 1].y;
            let mut coupling_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seed,
                tag::COUPLING,
                level as u64,
            ));
            Some(
                (0..y.len())
                    .map(|_| prev[coupling_rng.gen_range(0..prev.len())])
                    .collect(),
            )
        };
        levels.push(LevelSamples {
            multiplier,
            y,
            z,
        });
    }
    Ok(LevelSampleSet::new(levels, starved))
}

/// Union of the per-level chain states, in level order.
#[derive(Debug, Clone)]
pub struct MultilevelPoints {
    pub points: Vec<FiberPoint>,
    /// 1-based schedule levels whose chain never moved.
    pub starved: Vec<usize>,
}

/// Pools the recorded states of the per-level chains into one point
/// sample.  Chains and seeds match [`run_level_samples`] exactly, so the
/// pooled points are the ones behind that function's statistic values.
pub fn multilevel_point_sample(
    schedule: &LevelSchedule,
    config: &ChainConfig,
) -> Result<MultilevelPoints> {
    let mut points = Vec::with_capacity(schedule.total_samples() as usize);
    let mut starved = Vec::new();
    for (idx, (&multiplier, &samples)) in schedule
        .multipliers()
        .iter()
        .zip(schedule.samples())
        .enumerate()
    {
        let level = idx + 1;
        let level_cfg = level_chain_config(config, level, samples)?;
        let run = run_chain(&level_cfg, Stepper::UniformWalk { multiplier }, |_| Ok(0.0))?;
        if run.moved == 0 {
            starved.push(level);
        }
        points.extend(run.samples.into_iter().map(|(p, _)| p));
    }
    Ok(MultilevelPoints { points, starved })
}

/// Euler discretization of a driftless diffusion in move coordinates.
#[derive(Debug, Clone)]
pub struct BrownianConfig {
    pub sigma: f64,
    pub step_dt: f64,
    pub n_points: usize,
    pub seed: u64,
    /// Consecutive rejected proposals tolerated before giving up.
    pub stall_cap: usize,
}

impl BrownianConfig {
    pub fn new(n_points: usize, seed: u64) -> Self {
        Self {
            sigma: 1.0,
            step_dt: 0.1,
            n_points,
            seed,
            stall_cap: 100_000,
        }
    }
}

/// Simulates `Z(t + dt) = Z(t) + sigma * sqrt(dt) * B xi` with `xi`
/// standard normal per basis move and `B` the matrix of basis moves,
/// starting from the given fiber point.  Proposals with a negative
/// component are rejected and redrawn, so every emitted point stays inside
/// the polytope slice that the start's margins define.
pub fn brownian_points(
    basis: &MoveBasis,
    start: &FiberPoint,
    config: &BrownianConfig,
) -> Result<Vec<Vec<f64>>> {
    check_chain_inputs(basis, start)?;
    if basis.kind() != BasisKind::Lattice {
        return Err(FiberError::InvalidArgument(
            "the Brownian walker needs a lattice basis".into(),
        ));
    }
    if !config.sigma.is_finite() || config.sigma < 0.0 {
        return Err(FiberError::InvalidArgument(
            "sigma must be finite and nonnegative".into(),
        ));
    }
    if !config.step_dt.is_finite() || config.step_dt <= 0.0 {
        return Err(FiberError::InvalidArgument(
            "step_dt must be finite and positive".into(),
        ));
    }
    let scale = config.sigma * config.step_dt.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut z = start.to_f64();
    let mut candidate = vec![0.0f64; z.len()];
    let mut out = Vec::with_capacity(config.n_points);
    while out.len() < config.n_points {
        let mut attempts = 0usize;
        loop {
            candidate.copy_from_slice(&z);
            for mv in basis.moves() {
                let xi: f64 = rng.sample(StandardNormal);
                let w = scale * xi;
                for &i in mv.support() {
                    candidate[i] += w * mv.delta()[i] as f64;
                }
            }
            if candidate.iter().all(|&v| v >= 0.0) {
                break;
            }
            attempts += 1;
            if attempts >= config.stall_cap {
                return Err(FiberError::RejectionStall { attempts });
            }
        }
        z.copy_from_slice(&candidate);
        out.push(z.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{hemmecke, jobsat_4x4};
    use crate::fiber::sufficient_statistic;
    use crate::moves::{basic_moves_independence, lattice_basis};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn swap_move() -> Move {
        Move::new(vec![1, -1, -1, 1]).unwrap()
    }

    fn point(cells: &[i64]) -> FiberPoint {
        FiberPoint::new(cells.to_vec()).unwrap()
    }

    #[test]
    fn step_range_matches_hand_examples() {
        let (lo, hi) = feasible_step_range(&point(&[1, 0, 0, 1]), &swap_move()).unwrap();
        assert_eq!((lo, hi), (-1, 0));

        let job = jobsat_4x4().unwrap();
        let mut delta = vec![0i64; 16];
        delta[0] = 1;
        delta[1] = -1;
        delta[4] = -1;
        delta[5] = 1;
        let mv = Move::new(delta).unwrap();
        let (lo, hi) = feasible_step_range(&job.start, &mv).unwrap();
        assert_eq!((lo, hi), (-3, 0));

        let (lo, hi) = feasible_step_range(&point(&[5, 5, 5, 5]), &swap_move()).unwrap();
        assert!(lo < 0 && hi > 0);
    }

    #[test]
    fn step_range_rejects_one_sided_moves() {
        let up = Move::new(vec![1, 1]).unwrap();
        assert!(matches!(
            feasible_step_range(&point(&[1, 1]), &up),
            Err(FiberError::UnboundedRange)
        ));
        let down = Move::new(vec![-1, -1]).unwrap();
        assert!(matches!(
            feasible_step_range(&point(&[1, 1]), &down),
            Err(FiberError::UnboundedRange)
        ));
    }

    #[test]
    fn step_weights_match_small_factorial_products() {
        let g = point(&[1, 0, 0, 1]);
        let (lo, w) = step_weights(&g, &swap_move(), StepSizeDistribution::Hypergeometric).unwrap();
        assert_eq!(lo, -1);
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-12);
        let (_, w) = step_weights(&g, &swap_move(), StepSizeDistribution::Inverted).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-12);

        // Margins (2,2)/(2,2) from the diagonal table: offsets -2..0 give
        // the antidiagonal, all-ones, and diagonal tables.
        let g = point(&[2, 0, 0, 2]);
        let (lo, w) = step_weights(&g, &swap_move(), StepSizeDistribution::Hypergeometric).unwrap();
        assert_eq!(lo, -2);
        assert_abs_diff_eq!(w[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 1.0 / 6.0, epsilon = 1e-12);

        let (_, w) = step_weights(&g, &swap_move(), StepSizeDistribution::Inverted).unwrap();
        assert_abs_diff_eq!(w[0], 4.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 1.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[2], 4.0 / 9.0, epsilon = 1e-12);

        let (_, w) = step_weights(&g, &swap_move(), StepSizeDistribution::UniformOnRange).unwrap();
        assert_eq!(w, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn ds_step_holds_on_a_singleton_range() {
        let basis = MoveBasis::new(vec![swap_move()], BasisKind::Custom).unwrap();
        let g = point(&[0, 0, 0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let next = ds_step(&g, &basis, StepSizeDistribution::Hypergeometric, &mut rng).unwrap();
            assert_eq!(next.cells(), g.cells());
        }
    }

    fn visit_frequencies(run: &ChainRun) -> HashMap<Vec<i64>, f64> {
        let mut counts: HashMap<Vec<i64>, usize> = HashMap::new();
        for (p, _) in &run.samples {
            *counts.entry(p.cells().to_vec()).or_default() += 1;
        }
        let total = run.samples.len() as f64;
        counts
            .into_iter()
            .map(|(k, v)| (k, v as f64 / total))
            .collect()
    }

    #[test]
    fn ds_chain_splits_evenly_over_the_two_point_fiber() {
        let basis = MoveBasis::new(vec![swap_move()], BasisKind::Custom).unwrap();
        let config = ChainConfig::new(basis, point(&[1, 0, 0, 1]), 100_000, 11);
        let run = run_chain(
            &config,
            Stepper::DirectStep(StepSizeDistribution::Hypergeometric),
            |_| Ok(0.0),
        )
        .unwrap();
        let freq = visit_frequencies(&run);
        assert!((freq[&vec![1, 0, 0, 1]] - 0.5).abs() < 0.01);
        assert!((freq[&vec![0, 1, 1, 0]] - 0.5).abs() < 0.01);
    }

    #[test]
    fn uniform_chain_splits_evenly_over_the_two_point_fiber() {
        let basis = MoveBasis::new(vec![swap_move()], BasisKind::Custom).unwrap();
        let config = ChainConfig::new(basis, point(&[1, 0, 0, 1]), 100_000, 12);
        let run = run_chain(&config, Stepper::UniformWalk { multiplier: 1 }, |_| Ok(0.0)).unwrap();
        let freq = visit_frequencies(&run);
        assert!((freq[&vec![1, 0, 0, 1]] - 0.5).abs() < 0.01);
        assert!((freq[&vec![0, 1, 1, 0]] - 0.5).abs() < 0.01);
    }

    #[test]
    fn interior_proposals_always_move_and_keep_margins() {
        let a = crate::bench::independence_design(3, 3);
        let basis = basic_moves_independence(3, 3).unwrap();
        let g = point(&[2; 9]);
        let b = sufficient_statistic(&a, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let next = uniform_walk_step(&g, &basis, 1, &mut rng).unwrap();
        assert_ne!(next.cells(), g.cells());
        assert_eq!(sufficient_statistic(&a, &next).unwrap().values(), b.values());
    }

    #[test]
    fn scaled_walk_from_a_unit_table_never_moves() {
        let inst = hemmecke(1).unwrap();
        let config = ChainConfig::new(inst.lattice_basis.clone(), inst.start.clone(), 500, 21)
            .with_margin_check(inst.matrix.clone(), inst.target.clone());
        let run = run_chain(&config, Stepper::UniformWalk { multiplier: 2 }, |_| Ok(0.0)).unwrap();
        assert_eq!(run.moved, 0);
        assert!(run
            .samples
            .iter()
            .all(|(p, _)| p.cells() == inst.start.cells()));
    }

    #[test]
    fn chains_are_reproducible_by_seed() {
        let basis = basic_moves_independence(3, 3).unwrap();
        let start = point(&[3; 9]);
        let config = ChainConfig::new(basis.clone(), start.clone(), 200, 77);
        let a = run_chain(&config, Stepper::DirectStep(StepSizeDistribution::Hypergeometric), |p| {
            Ok(p.cells()[0] as f64)
        })
        .unwrap();
        let b = run_chain(&config, Stepper::DirectStep(StepSizeDistribution::Hypergeometric), |p| {
            Ok(p.cells()[0] as f64)
        })
        .unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.moved, b.moved);

        let other = ChainConfig::new(basis, start, 200, 78);
        let c = run_chain(&other, Stepper::DirectStep(StepSizeDistribution::Hypergeometric), |p| {
            Ok(p.cells()[0] as f64)
        })
        .unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn recording_respects_thinning_and_burn_in() {
        let basis = basic_moves_independence(3, 3).unwrap();
        let start = point(&[3; 9]);
        let config = ChainConfig::new(basis.clone(), start.clone(), 10, 1).with_record_every(3);
        let run = run_chain(&config, Stepper::UniformWalk { multiplier: 1 }, |p| {
            Ok(p.cells().iter().sum::<i64>() as f64)
        })
        .unwrap();
        assert_eq!(run.samples.len(), 3);
        assert!(run.samples.iter().all(|(_, v)| *v == 27.0));

        let config = ChainConfig::new(basis, start, 9, 1)
            .with_record_every(3)
            .with_burn_in(7);
        let run = run_chain(&config, Stepper::UniformWalk { multiplier: 1 }, |_| Ok(0.0)).unwrap();
        assert_eq!(run.samples.len(), 3);
        assert_eq!(run.steps, 16);
    }

    #[test]
    fn margin_check_rejects_a_mismatched_start() {
        let job = jobsat_4x4().unwrap();
        let mut wrong = job.target.values().to_vec();
        wrong[0] += 1;
        let config = ChainConfig::new(job.walk_basis().clone(), job.start.clone(), 10, 1)
            .with_margin_check(job.matrix.clone(), SufficientStatistic::new(wrong));
        assert!(matches!(
            run_chain(&config, Stepper::UniformWalk { multiplier: 1 }, |_| Ok(0.0)),
            Err(FiberError::InvalidArgument(_))
        ));
    }

    #[test]
    fn schedules_validate_their_shape() {
        let s = LevelSchedule::halving(4, 100_000).unwrap();
        assert_eq!(s.multipliers(), &[4, 3, 2, 1]);
        assert_eq!(s.samples(), &[100_000, 50_000, 25_000, 12_500]);
        assert_eq!(s.total_samples(), 187_500);

        assert!(LevelSchedule::new(vec![2, 2, 1], vec![1, 1, 1]).is_err());
        assert!(LevelSchedule::new(vec![3, 2], vec![1, 1]).is_err());
        assert!(LevelSchedule::new(vec![2, 1], vec![5, 0]).is_err());
        assert!(LevelSchedule::new(vec![], vec![]).is_err());
        assert!(LevelSchedule::halving(4, 4).is_err());
    }

    #[test]
    fn proportional_split_preserves_the_total() {
        let s = LevelSchedule::proportional(4, 1000).unwrap();
        assert_eq!(s.samples(), &[535, 266, 133, 66]);
        assert_eq!(s.total_samples(), 1000);
        let s = LevelSchedule::proportional(2, 3).unwrap();
        assert_eq!(s.samples(), &[2, 1]);
        assert!(LevelSchedule::proportional(4, 5).is_err());
    }

    #[test]
    fn level_samples_follow_the_schedule_and_couple_downward() {
        let job = jobsat_4x4().unwrap();
        let schedule = LevelSchedule::halving(3, 60).unwrap();
        let config = ChainConfig::new(job.walk_basis().clone(), job.start.clone(), 0, 404);
        let set = run_level_samples(&schedule, &config, |p| Ok(p.cells()[0] as f64)).unwrap();
        assert_eq!(set.levels.len(), 3);
        assert_eq!(set.levels[0].y.len(), 60);
        assert_eq!(set.levels[1].y.len(), 30);
        assert_eq!(set.levels[2].y.len(), 15);
        assert!(set.levels[0].z.is_none());
        for l in 1..3 {
            let z = set.levels[l].z.as_ref().unwrap();
            assert_eq!(z.len(), set.levels[l].y.len());
            for v in z {
                assert!(set.levels[l - 1].y.contains(v));
            }
        }
        assert!(set.starved.is_empty());

        let repeat = run_level_samples(&schedule, &config, |p| Ok(p.cells()[0] as f64)).unwrap();
        assert_eq!(set.levels, repeat.levels);
    }

    #[test]
    fn starved_levels_are_reported_one_based() {
        let inst = hemmecke(1).unwrap();
        let config = ChainConfig::new(inst.lattice_basis.clone(), inst.start.clone(), 0, 9);
        let schedule = LevelSchedule::new(vec![2, 1], vec![30, 30]).unwrap();
        let set = run_level_samples(&schedule, &config, |_| Ok(0.0)).unwrap();
        assert_eq!(set.starved, vec![1]);

        let schedule = LevelSchedule::new(vec![3, 2, 1], vec![20, 20, 20]).unwrap();
        let set = run_level_samples(&schedule, &config, |_| Ok(0.0)).unwrap();
        assert_eq!(set.starved, vec![1, 2]);
        assert!(set.levels[0].y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pooled_point_sample_has_the_scheduled_size() {
        let job = jobsat_4x4().unwrap();
        let schedule = LevelSchedule::proportional(4, 100).unwrap();
        let config = ChainConfig::new(job.walk_basis().clone(), job.start.clone(), 0, 31);
        let pooled = multilevel_point_sample(&schedule, &config).unwrap();
        assert_eq!(pooled.points.len(), 100);
        assert!(pooled.starved.is_empty());
        for p in pooled.points.iter().step_by(17) {
            let margins = sufficient_statistic(&job.matrix, p).unwrap();
            assert_eq!(margins.values(), job.target.values());
        }
    }

    #[test]
    fn frozen_walker_emits_copies_of_the_start() {
        let a = crate::bench::independence_design(2, 2);
        let basis = lattice_basis(&a).unwrap();
        let start = point(&[1, 0, 0, 1]);
        let mut config = BrownianConfig::new(5, 8);
        config.sigma = 0.0;
        let pts = brownian_points(&basis, &start, &config).unwrap();
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().all(|p| p == &[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn walker_stays_on_the_margin_slice() {
        let job = jobsat_4x4().unwrap();
        let config = BrownianConfig::new(40, 15);
        let pts = brownian_points(&job.lattice_basis, &job.start, &config).unwrap();
        assert_eq!(pts.len(), 40);
        for p in &pts {
            assert!(p.iter().all(|&v| v >= 0.0));
            for r in 0..job.matrix.rows() {
                let dot: f64 = job
                    .matrix
                    .row(r)
                    .iter()
                    .zip(p)
                    .map(|(&a, &x)| a as f64 * x)
                    .sum();
                assert_abs_diff_eq!(dot, job.target.values()[r] as f64, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn one_dimensional_walker_tracks_the_segment() {
        let a = crate::bench::independence_design(2, 2);
        let basis = lattice_basis(&a).unwrap();
        let start = point(&[1, 0, 0, 1]);
        let config = BrownianConfig::new(60, 2);
        let pts = brownian_points(&basis, &start, &config).unwrap();
        for p in &pts {
            assert!(p[0] >= 0.0 && p[0] <= 1.0 + 1e-12);
            assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(p[1], p[2], epsilon = 1e-9);
            assert_abs_diff_eq!(p[0], p[3], epsilon = 1e-9);
        }
    }

    #[test]
    fn walker_requires_a_lattice_basis_and_reports_stalls() {
        let job = jobsat_4x4().unwrap();
        let config = BrownianConfig::new(3, 1);
        assert!(matches!(
            brownian_points(job.markov_basis.as_ref().unwrap(), &job.start, &config),
            Err(FiberError::InvalidArgument(_))
        ));

        // Margins (1,0)/(1,0) pin the polytope to a single point, so every
        // nonzero diffusion proposal leaves it.
        let a = crate::bench::independence_design(2, 2);
        let basis = lattice_basis(&a).unwrap();
        let start = point(&[1, 0, 0, 0]);
        let mut stuck = BrownianConfig::new(1, 4);
        stuck.stall_cap = 50;
        assert!(matches!(
            brownian_points(&basis, &start, &stuck),
            Err(FiberError::RejectionStall { attempts: 50 })
        ));
    }

    proptest! {
        #[test]
        fn every_offset_in_range_is_feasible_and_the_ends_are_sharp(
            entries in proptest::collection::vec((0i64..5, -2i64..=2), 4..9)
        ) {
            let (cells, deltas): (Vec<i64>, Vec<i64>) = entries.into_iter().unzip();
            prop_assume!(deltas.iter().any(|&d| d > 0));
            prop_assume!(deltas.iter().any(|&d| d < 0));
            let mv = Move::new(deltas.clone()).unwrap();
            let g = FiberPoint::new(cells.clone()).unwrap();
            let (lo, hi) = feasible_step_range(&g, &mv).unwrap();
            prop_assert!(lo <= 0 && hi >= 0);
            for j in lo..=hi {
                prop_assert!(cells.iter().zip(&deltas).all(|(&x, &d)| x + j * d >= 0));
            }
            prop_assert!(cells.iter().zip(&deltas).any(|(&x, &d)| x + (lo - 1) * d < 0));
            prop_assert!(cells.iter().zip(&deltas).any(|(&x, &d)| x + (hi + 1) * d < 0));
        }
    }
}
