//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use fibersample::bench::{self, count_fiber, enumerate_fiber};
use fibersample::fiber::{chi_square, fit_expected_table, FiberPoint};
use fibersample::metrics::{fcs, thin_centers, MmdReference, PointSample, VoronoiCenterSet};
use fibersample::multilevel::{
    estimate_pipeline, multilevel_density, DensityEstimate, Grid, LevelSampleSet, LevelSamples,
    SmoothingKernel,
};
use fibersample::samplers::{
    brownian_points, multilevel_point_sample, run_chain, BrownianConfig, ChainConfig,
    LevelSchedule, StepSizeDistribution, Stepper,
};
use fibersample::seeding::{derive_seed, tag};
use fibersample::{FiberError, Result};
use rayon::prelude::*;

use crate::config::Resolver;
use crate::instances::{self, InstanceArgs};
use crate::manifest::ManifestBuilder;
use crate::outfmt::{create, float_field};

pub struct Ctx {
    pub seed: u64,
    pub out: PathBuf,
    pub resolver: Resolver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerKind {
    /// Weighted-step-size fiber walk
    Ds,
    /// The same walk with inverted step weights
    DsInverted,
    /// Accept-all walk with unit multiplier
    Uniform,
}

impl SamplerKind {
    fn stepper(self) -> Stepper {
        match self {
            SamplerKind::Ds => Stepper::DirectStep(StepSizeDistribution::Hypergeometric),
            SamplerKind::DsInverted => Stepper::DirectStep(StepSizeDistribution::Inverted),
            SamplerKind::Uniform => Stepper::UniformWalk { multiplier: 1 },
        }
    }

    fn name(self) -> &'static str {
        match self {
            SamplerKind::Ds => "ds",
            SamplerKind::DsInverted => "ds-inverted",
            SamplerKind::Uniform => "uniform",
        }
    }
}

impl FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FcsMethod {
    Ds,
    DsInverted,
    Multilevel,
}

impl FcsMethod {
    fn name(self) -> &'static str {
        match self {
            FcsMethod::Ds => "ds",
            FcsMethod::DsInverted => "ds-inverted",
            FcsMethod::Multilevel => "multilevel",
        }
    }
}

impl FromStr for FcsMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        out.push(
            item.parse::<T>()
                .map_err(|_| FiberError::InvalidArgument(format!("bad {what} entry {item:?}")))?,
        );
    }
    if out.is_empty() {
        return Err(FiberError::InvalidArgument(format!("{what} list is empty")));
    }
    Ok(out)
}

fn join_list<T: Display>(items: &[T]) -> String {
    items
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, clap::Args)]
pub struct GridArgs {
    /// Density grid lower end
    #[arg(long)]
    pub grid_lo: Option<f64>,

    /// Density grid upper end
    #[arg(long)]
    pub grid_hi: Option<f64>,

    /// Number of grid points
    #[arg(long)]
    pub grid_points: Option<usize>,

    /// Epanechnikov kernel bandwidth
    #[arg(long)]
    pub delta: Option<f64>,

    /// Gaussian post-filter width in grid spacings
    #[arg(long)]
    pub sigma: Option<f64>,
}

struct GridSettings {
    lo: f64,
    hi: f64,
    points: usize,
    delta: f64,
    sigma: f64,
}

fn resolve_grid(resolver: &Resolver, args: &GridArgs) -> Result<GridSettings> {
    Ok(GridSettings {
        lo: resolver.get("grid-lo", args.grid_lo, 100.0)?,
        hi: resolver.get("grid-hi", args.grid_hi, 500.0)?,
        points: resolver.get("grid-points", args.grid_points, 400)?,
        delta: resolver.get("delta", args.delta, 1.0)?,
        sigma: resolver.get("sigma", args.sigma, 2.0)?,
    })
}

fn record_grid(man: &mut ManifestBuilder, g: &GridSettings) {
    man.param("grid-lo", g.lo);
    man.param("grid-hi", g.hi);
    man.param("grid-points", g.points);
    man.param("delta", g.delta);
    man.param("sigma", g.sigma);
}

fn write_density_csv(dir: &Path, name: &str, est: &DensityEstimate, plot: bool) -> Result<()> {
    let mut w = create(dir, name)?;
    write!(w, "s,raw,smoothed")?;
    if plot {
        write!(w, ",plot")?;
    }
    writeln!(w)?;
    for (i, &s) in est.grid.points().iter().enumerate() {
        write!(
            w,
            "{},{},{}",
            float_field(s),
            float_field(est.raw[i]),
            float_field(est.smoothed[i])
        )?;
        if plot {
            write!(w, ",{}", float_field(est.smoothed[i].max(0.0)))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn chain_points(run: fibersample::samplers::ChainRun) -> Vec<FiberPoint> {
    run.samples.into_iter().map(|(p, _)| p).collect()
}

#[derive(Debug, clap::Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub fiber: InstanceArgs,

    /// Chain transition rule
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerKind>,

    /// Recorded chain states
    #[arg(long)]
    pub steps: Option<u64>,

    /// Add the table cells to each CSV row
    #[arg(long)]
    pub cells: bool,

    /// Also write a kernel density of the recorded statistic
    #[arg(long)]
    pub density: bool,

    #[command(flatten)]
    pub grid: GridArgs,
}

pub fn sample(ctx: &Ctx, args: &SampleArgs) -> Result<()> {
    let loaded = instances::load_walkable(&args.fiber, &ctx.resolver)?;
    let sampler = ctx.resolver.get("sampler", args.sampler, SamplerKind::Ds)?;
    let steps = ctx.resolver.get("steps", args.steps, 100_000u64)?;
    let cells = ctx.resolver.switch("cells", args.cells)?;
    let density = ctx.resolver.switch("density", args.density)?;
    let grid_cfg = resolve_grid(&ctx.resolver, &args.grid)?;

    let inst = &loaded.inst;
    let expected = fit_expected_table(&inst.matrix, &inst.target, 1e-8, 1000)?;
    let config = ChainConfig::new(inst.walk_basis().clone(), inst.start.clone(), steps, ctx.seed)
        .with_margin_check(inst.matrix.clone(), inst.target.clone());
    let run = run_chain(&config, sampler.stepper(), |p| chi_square(p, &expected))?;

    let mut man = ManifestBuilder::new("sample", ctx.seed);
    man.fiber(&loaded.label, &loaded.tokens);
    man.param("sampler", sampler.name());
    man.param("steps", steps);
    man.flag("cells", cells);
    man.flag("density", density);
    if density {
        record_grid(&mut man, &grid_cfg);
    }
    man.warn_all(loaded.warnings.iter().cloned());
    if run.moved == 0 {
        man.warn("the chain never left its start state".to_string());
    }

    let mut w = create(&ctx.out, "chain.csv")?;
    write!(w, "step,statistic")?;
    if cells {
        for i in 1..=inst.matrix.cols() {
            write!(w, ",c{i}")?;
        }
    }
    writeln!(w)?;
    for (i, (point, value)) in run.samples.iter().enumerate() {
        write!(w, "{},{}", i + 1, float_field(*value))?;
        if cells {
            for c in point.cells() {
                write!(w, ",{c}")?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    man.output("chain.csv");

    if density {
        let grid = Grid::new(grid_cfg.lo, grid_cfg.hi, grid_cfg.points)?;
        let kern = SmoothingKernel::epanechnikov(grid_cfg.delta)?;
        let values: Vec<f64> = run.samples.iter().map(|&(_, v)| v).collect();
        let set = LevelSampleSet::new(
            vec![LevelSamples {
                multiplier: 1,
                y: values,
                z: None,
            }],
            vec![],
        );
        let mut est = multilevel_density(&set, &grid, &kern)?;
        est.apply_gaussian(grid_cfg.sigma)?;
        write_density_csv(&ctx.out, "density.csv", &est, false)?;
        man.output("density.csv");
        man.warn_all(est.warnings.iter().cloned());
    }

    man.write(&ctx.out)?;
    println!(
        "{}: {} states, moved fraction {:.3}, seed {}",
        ctx.out.join("chain.csv").display(),
        run.samples.len(),
        run.moved as f64 / run.steps as f64,
        ctx.seed
    );
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub fiber: InstanceArgs,

    /// Number of levels in the multiplier ladder
    #[arg(long)]
    pub levels: Option<usize>,

    /// Coarsest-level sample count; each finer level halves it
    #[arg(long)]
    pub base: Option<u64>,

    /// Per-level step multipliers, comma separated, coarsest first
    #[arg(long)]
    pub multipliers: Option<String>,

    /// Per-level sample counts, comma separated, coarsest first
    #[arg(long)]
    pub samples: Option<String>,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Independent repetitions with derived seeds
    #[arg(long)]
    pub repeat: Option<u64>,

    /// Add a plot column that clamps the smoothed estimate at zero
    #[arg(long)]
    pub plot: bool,
}

fn resolve_schedule(resolver: &Resolver, args: &DensityArgs) -> Result<LevelSchedule> {
    let levels_flag = resolver.opt("levels", args.levels)?;
    let base = resolver.get("base", args.base, 100_000u64)?;
    let multipliers = match resolver.opt("multipliers", args.multipliers.clone())? {
        Some(text) => Some(parse_list::<i64>(&text, "multiplier")?),
        None => None,
    };
    let samples = match resolver.opt("samples", args.samples.clone())? {
        Some(text) => Some(parse_list::<u64>(&text, "sample count")?),
        None => None,
    };
    match (multipliers, samples) {
        (None, None) => LevelSchedule::halving(levels_flag.unwrap_or(4), base),
        (mult, samp) => {
            let count = mult
                .as_ref()
                .map(Vec::len)
                .or(samp.as_ref().map(Vec::len))
                .unwrap();
            if let Some(levels) = levels_flag {
                if levels != count {
                    return Err(FiberError::InvalidArgument(format!(
                        "--levels {levels} disagrees with a schedule list of length {count}"
                    )));
                }
            }
            let mult = mult.unwrap_or_else(|| (1..=count as i64).rev().collect());
            let samp = samp.unwrap_or_else(|| (0..count).map(|l| base >> l).collect());
            LevelSchedule::new(mult, samp)
        }
    }
}

pub fn density(ctx: &Ctx, args: &DensityArgs) -> Result<()> {
    let loaded = instances::load_walkable(&args.fiber, &ctx.resolver)?;
    let schedule = resolve_schedule(&ctx.resolver, args)?;
    let grid_cfg = resolve_grid(&ctx.resolver, &args.grid)?;
    let repeat = ctx.resolver.get("repeat", args.repeat, 1u64)?;
    if repeat < 1 {
        return Err(FiberError::InvalidArgument(
            "repeat must be at least 1".into(),
        ));
    }
    let plot = ctx.resolver.switch("plot", args.plot)?;

    let inst = &loaded.inst;
    let expected = fit_expected_table(&inst.matrix, &inst.target, 1e-8, 1000)?;
    let grid = Grid::new(grid_cfg.lo, grid_cfg.hi, grid_cfg.points)?;
    let kern = SmoothingKernel::epanechnikov(grid_cfg.delta)?;

    let mut man = ManifestBuilder::new("density", ctx.seed);
    man.fiber(&loaded.label, &loaded.tokens);
    man.param("multipliers", join_list(schedule.multipliers()));
    man.param("samples", join_list(schedule.samples()));
    record_grid(&mut man, &grid_cfg);
    man.param("repeat", repeat);
    man.flag("plot", plot);
    man.warn_all(loaded.warnings.iter().cloned());

    for r in 1..=repeat {
        let run_seed = if repeat == 1 {
            ctx.seed
        } else {
            derive_seed(ctx.seed, tag::REPEAT, r)
        };
        let est = estimate_pipeline(
            &inst.matrix,
            &inst.target,
            inst.walk_basis(),
            &inst.start,
            &schedule,
            |p| chi_square(p, &expected),
            &grid,
            &kern,
            grid_cfg.sigma,
            run_seed,
        )?;
        let name = if repeat == 1 {
            "density.csv".to_string()
        } else {
            format!("density_{r}.csv")
        };
        write_density_csv(&ctx.out, &name, &est, plot)?;
        man.output(&name);
        for msg in &est.warnings {
            man.warn(if repeat == 1 {
                msg.clone()
            } else {
                format!("{name}: {msg}")
            });
        }
        println!(
            "{}: raw mass {:.4}, seed {run_seed}",
            ctx.out.join(&name).display(),
            est.raw_mass()
        );
    }
    man.write(&ctx.out)?;
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct MmdArgs {
    #[command(flatten)]
    pub fiber: InstanceArgs,

    /// Reference chain length
    #[arg(long)]
    pub reference_size: Option<u64>,

    /// Fresh-sample sizes, comma separated
    #[arg(long)]
    pub n: Option<String>,

    /// Trials per sample size and method
    #[arg(long)]
    pub trials: Option<u64>,
}

pub fn mmd(ctx: &Ctx, args: &MmdArgs) -> Result<()> {
    let loaded = instances::load_walkable(&args.fiber, &ctx.resolver)?;
    let reference_size = ctx
        .resolver
        .get("reference-size", args.reference_size, 100_000u64)?;
    let trials = ctx.resolver.get("trials", args.trials, 30u64)?;
    if trials < 1 {
        return Err(FiberError::InvalidArgument(
            "trials must be at least 1".into(),
        ));
    }
    let ns: Vec<u64> = match ctx.resolver.opt("n", args.n.clone())? {
        Some(text) => parse_list(&text, "sample size")?,
        None => (1..=20).map(|i| 500 * i).collect(),
    };

    let inst = &loaded.inst;
    let walk = inst.walk_basis();
    let ref_config = ChainConfig::new(
        walk.clone(),
        inst.start.clone(),
        reference_size,
        derive_seed(ctx.seed, tag::REFERENCE, 0),
    )
    .with_margin_check(inst.matrix.clone(), inst.target.clone());
    let ref_points = chain_points(run_chain(
        &ref_config,
        Stepper::UniformWalk { multiplier: 1 },
        |_| Ok(0.0),
    )?);
    let reference = MmdReference::new(PointSample::from_points(&ref_points)?)?;

    struct MmdRow {
        n: u64,
        trial: u64,
        method: usize,
        value: f64,
        starved: Vec<usize>,
    }

    let mut tasks = Vec::new();
    for (n_idx, &n) in ns.iter().enumerate() {
        for trial in 0..trials {
            for method in 0..2u64 {
                tasks.push((n_idx as u64, n, trial, method));
            }
        }
    }
    let rows: Vec<MmdRow> = tasks
        .par_iter()
        .map(|&(n_idx, n, trial, method)| -> Result<MmdRow> {
            let cell_seed = derive_seed(ctx.seed, tag::TRIAL, (n_idx * 2 + method) * trials + trial);
            let config = ChainConfig::new(walk.clone(), inst.start.clone(), n, cell_seed)
                .with_margin_check(inst.matrix.clone(), inst.target.clone());
            let (points, starved) = if method == 0 {
                let run = run_chain(&config, Stepper::UniformWalk { multiplier: 1 }, |_| Ok(0.0))?;
                (chain_points(run), Vec::new())
            } else {
                let schedule = LevelSchedule::proportional(4, n)?;
                let pooled = multilevel_point_sample(&schedule, &config)?;
                (pooled.points, pooled.starved)
            };
            let value = reference.mmd2_against(&PointSample::from_points(&points)?)?;
            Ok(MmdRow {
                n,
                trial,
                method: method as usize,
                value,
                starved,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut man = ManifestBuilder::new("mmd", ctx.seed);
    man.fiber(&loaded.label, &loaded.tokens);
    man.param("reference-size", reference_size);
    man.param("n", join_list(&ns));
    man.param("trials", trials);
    man.warn_all(loaded.warnings.iter().cloned());

    let mut w = create(&ctx.out, "mmd.csv")?;
    writeln!(w, "n,trial,mmd2,method")?;
    let mut starved_counts: BTreeMap<usize, u64> = BTreeMap::new();
    for row in &rows {
        let method = if row.method == 0 { "mcmc" } else { "multilevel" };
        writeln!(
            w,
            "{},{},{},{}",
            row.n,
            row.trial,
            float_field(row.value),
            method
        )?;
        for &lvl in &row.starved {
            *starved_counts.entry(lvl).or_default() += 1;
        }
    }
    w.flush()?;
    man.output("mmd.csv");
    for (lvl, count) in starved_counts {
        man.warn(format!(
            "multilevel level {lvl} recorded no state changes in {count} draws"
        ));
    }
    man.write(&ctx.out)?;
    println!(
        "{}: {} rows, seed {}",
        ctx.out.join("mmd.csv").display(),
        rows.len(),
        ctx.seed
    );
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct FcsArgs {
    #[command(flatten)]
    pub fiber: InstanceArgs,

    /// Brownian candidate center count
    #[arg(long)]
    pub centers: Option<usize>,

    /// Thinning radii, comma separated, strictly decreasing
    #[arg(long)]
    pub radii: Option<String>,

    /// Samplers to score: ds, ds-inverted, multilevel
    #[arg(long)]
    pub samplers: Option<String>,

    /// Points per sampler run
    #[arg(long)]
    pub sample_size: Option<u64>,

    /// Runs averaged per sampler
    #[arg(long)]
    pub runs: Option<u64>,

    /// Brownian step scale
    #[arg(long)]
    pub walk_sigma: Option<f64>,

    /// Brownian time step
    #[arg(long)]
    pub walk_dt: Option<f64>,
}

pub fn fcs_cmd(ctx: &Ctx, args: &FcsArgs) -> Result<()> {
    let loaded = instances::load_walkable(&args.fiber, &ctx.resolver)?;
    let centers_n = ctx.resolver.get("centers", args.centers, 1000usize)?;
    let radii: Vec<f64> = match ctx.resolver.opt("radii", args.radii.clone())? {
        Some(text) => parse_list(&text, "radius")?,
        None => vec![16.0, 8.0, 4.0, 2.0, 1.0],
    };
    if radii.iter().any(|r| !r.is_finite() || *r <= 0.0) || radii.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(FiberError::InvalidArgument(
            "radii must be positive, finite, and strictly decreasing".into(),
        ));
    }
    let methods: Vec<FcsMethod> = match ctx.resolver.opt("samplers", args.samplers.clone())? {
        Some(text) => parse_list(&text, "sampler")?,
        None => vec![FcsMethod::Ds, FcsMethod::DsInverted, FcsMethod::Multilevel],
    };
    let sample_size = ctx.resolver.get("sample-size", args.sample_size, 1000u64)?;
    let runs = ctx.resolver.get("runs", args.runs, 1u64)?;
    if runs < 1 {
        return Err(FiberError::InvalidArgument("runs must be at least 1".into()));
    }
    let walk_sigma = ctx.resolver.get("walk-sigma", args.walk_sigma, 1.0f64)?;
    let walk_dt = ctx.resolver.get("walk-dt", args.walk_dt, 0.1f64)?;

    let inst = &loaded.inst;
    let mut brownian = BrownianConfig::new(centers_n, derive_seed(ctx.seed, tag::CENTERS, 0));
    brownian.sigma = walk_sigma;
    brownian.step_dt = walk_dt;
    let candidates = brownian_points(&inst.lattice_basis, &inst.start, &brownian)?;
    let center_sets: Vec<VoronoiCenterSet> = radii
        .iter()
        .map(|&r| thin_centers(&candidates, r))
        .collect::<Result<Vec<_>>>()?;

    let n_methods = methods.len() as u64;
    let mut jobs = Vec::new();
    for run in 0..runs {
        for (m_idx, &method) in methods.iter().enumerate() {
            jobs.push((run, m_idx as u64, method));
        }
    }
    let samples: Vec<(PointSample, Vec<usize>)> = jobs
        .par_iter()
        .map(|&(run, m_idx, method)| -> Result<(PointSample, Vec<usize>)> {
            let seed = derive_seed(ctx.seed, tag::RUN, run * n_methods + m_idx);
            let config =
                ChainConfig::new(inst.walk_basis().clone(), inst.start.clone(), sample_size, seed)
                    .with_margin_check(inst.matrix.clone(), inst.target.clone());
            match method {
                FcsMethod::Ds => {
                    let chain = run_chain(
                        &config,
                        Stepper::DirectStep(StepSizeDistribution::Hypergeometric),
                        |_| Ok(0.0),
                    )?;
                    Ok((PointSample::from_points(&chain_points(chain))?, Vec::new()))
                }
                FcsMethod::DsInverted => {
                    let chain = run_chain(
                        &config,
                        Stepper::DirectStep(StepSizeDistribution::Inverted),
                        |_| Ok(0.0),
                    )?;
                    Ok((PointSample::from_points(&chain_points(chain))?, Vec::new()))
                }
                FcsMethod::Multilevel => {
                    let schedule = LevelSchedule::proportional(4, sample_size)?;
                    let pooled = multilevel_point_sample(&schedule, &config)?;
                    Ok((PointSample::from_points(&pooled.points)?, pooled.starved))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut man = ManifestBuilder::new("fcs", ctx.seed);
    man.fiber(&loaded.label, &loaded.tokens);
    man.param("centers", centers_n);
    man.param("radii", join_list(&radii));
    man.param(
        "samplers",
        methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
    );
    man.param("sample-size", sample_size);
    man.param("runs", runs);
    man.param("walk-sigma", walk_sigma);
    man.param("walk-dt", walk_dt);
    man.warn_all(loaded.warnings.iter().cloned());
    let mut starved_counts: BTreeMap<usize, u64> = BTreeMap::new();
    for (_, starved) in &samples {
        for &lvl in starved {
            *starved_counts.entry(lvl).or_default() += 1;
        }
    }
    for (lvl, count) in starved_counts {
        man.warn(format!(
            "multilevel level {lvl} recorded no state changes in {count} runs"
        ));
    }

    let mut w = create(&ctx.out, "fcs.csv")?;
    writeln!(w, "r,K,H_K,method")?;
    for (r_idx, centers) in center_sets.iter().enumerate() {
        for (m_idx, &method) in methods.iter().enumerate() {
            let mut total = 0.0;
            for run in 0..runs {
                let idx = (run * n_methods + m_idx as u64) as usize;
                total += fcs(&samples[idx].0, centers)?;
            }
            writeln!(
                w,
                "{},{},{},{}",
                float_field(radii[r_idx]),
                centers.k(),
                float_field(total / runs as f64),
                method.name()
            )?;
        }
    }
    w.flush()?;
    man.output("fcs.csv");
    man.write(&ctx.out)?;
    println!(
        "{}: {} rows, seed {}",
        ctx.out.join("fcs.csv").display(),
        center_sets.len() * methods.len(),
        ctx.seed
    );
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub fiber: InstanceArgs,

    /// Abort after this many points
    #[arg(long)]
    pub cap: Option<usize>,
}

pub fn enumerate(ctx: &Ctx, args: &EnumerateArgs) -> Result<()> {
    let (matrix, target, _) = instances::load_margins(&args.fiber, &ctx.resolver)?;
    let cap = ctx.resolver.get("cap", args.cap, 100_000usize)?;
    let points = enumerate_fiber(&matrix, &target, cap)?;
    let stdout = io::stdout();
    let mut w = io::BufWriter::new(stdout.lock());
    for p in &points {
        let mut first = true;
        for &c in p.cells() {
            if first {
                write!(w, "{c}")?;
                first = false;
            } else {
                write!(w, " {c}")?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub fiber: InstanceArgs,
}

pub fn count(ctx: &Ctx, args: &CountArgs) -> Result<()> {
    let (matrix, target, _) = instances::load_margins(&args.fiber, &ctx.resolver)?;
    println!("{}", count_fiber(&matrix, &target)?);
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[command(subcommand)]
    pub action: BenchAction,
}

#[derive(Debug, clap::Subcommand)]
pub enum BenchAction {
    /// Print the bundled fiber catalog
    List,
}

pub fn bench_cmd(args: &BenchArgs) -> Result<()> {
    match args.action {
        BenchAction::List => bench_list(),
    }
}

fn bench_list() -> Result<()> {
    let entries = [
        bench::jobsat_4x4()?,
        bench::no3factor_2x2x5()?,
        bench::hemmecke(1)?,
    ];
    println!(
        "{:<14} {:>8} {:>7} {:>8} {:>9} {:>12}",
        "name", "matrix", "total", "markov", "lattice", "count"
    );
    for inst in &entries {
        let total: i64 = inst.start.cells().iter().sum();
        let markov = inst
            .markov_basis
            .as_ref()
            .map_or("-".to_string(), |b| b.len().to_string());
        let count = inst
            .known_count
            .map_or("-".to_string(), |c| c.to_string());
        println!(
            "{:<14} {:>8} {:>7} {:>8} {:>9} {:>12}",
            inst.name,
            format!("{}x{}", inst.matrix.rows(), inst.matrix.cols()),
            total,
            markov,
            inst.lattice_basis.len(),
            count,
        );
    }
    println!();
    println!("hemmecke scales with --k (listed for k = 1); its walk needs scaled moves to leave the start");
    Ok(())
}
