//! Fiber selection: bundled benchmark instances or custom problem files.

use std::path::{Path, PathBuf};

use fibersample::bench::{self, FiberInstance};
use fibersample::fiber::{sufficient_statistic, DesignMatrix, FiberPoint, SufficientStatistic};
use fibersample::moves::{lattice_basis, load_basis};
use fibersample::textio::read_matrix;
use fibersample::{FiberError, Result};

use crate::config::Resolver;

#[derive(Debug, Clone, clap::Args)]
pub struct InstanceArgs {
    /// Bundled fiber name: jobsat4x4, no3factor225, or hemmecke
    pub instance: Option<String>,

    /// Block count for the hemmecke fiber
    #[arg(long)]
    pub k: Option<usize>,

    /// Design matrix file (`R C` header, then R rows) for a custom fiber
    #[arg(long, value_name = "FILE")]
    pub matrix_file: Option<PathBuf>,

    /// Margin vector file (1 x R); defaults to the start table's margins
    #[arg(long, value_name = "FILE")]
    pub target_file: Option<PathBuf>,

    /// Start table file (1 x C)
    #[arg(long, value_name = "FILE")]
    pub start_file: Option<PathBuf>,

    /// Move basis file (M x C); the walk falls back to a lattice kernel
    /// basis without one
    #[arg(long, value_name = "FILE")]
    pub basis_file: Option<PathBuf>,
}

/// A resolved fiber plus the command tokens that reproduce the selection.
pub struct LoadedFiber {
    pub inst: FiberInstance,
    pub label: String,
    pub tokens: Vec<String>,
    pub warnings: Vec<String>,
}

fn token(path: &Path) -> String {
    path.display().to_string()
}

fn read_row_vector(path: &Path, what: &str) -> Result<Vec<i64>> {
    let m = read_matrix(path)?;
    if m.rows != 1 {
        return Err(FiberError::InvalidArgument(format!(
            "{what} file {} must be a single row, got {} rows",
            path.display(),
            m.rows
        )));
    }
    Ok(m.entries)
}

fn bundled(name: &str, k: usize) -> Result<Option<(FiberInstance, Vec<String>)>> {
    let out = match name {
        "jobsat4x4" => Some((bench::jobsat_4x4()?, vec!["jobsat4x4".to_string()])),
        "no3factor225" => Some((bench::no3factor_2x2x5()?, vec!["no3factor225".to_string()])),
        "hemmecke" => Some((
            bench::hemmecke(k)?,
            vec!["hemmecke".to_string(), "--k".to_string(), k.to_string()],
        )),
        _ => None,
    };
    Ok(out)
}

fn custom_matrix(args: &InstanceArgs) -> Result<(DesignMatrix, Vec<String>)> {
    let Some(path) = &args.matrix_file else {
        return Err(FiberError::InvalidArgument(
            "give a bundled instance name (jobsat4x4, no3factor225, hemmecke) or --matrix-file"
                .to_string(),
        ));
    };
    let m = read_matrix(path)?;
    let matrix = DesignMatrix::new(m.rows, m.cols, m.entries)?;
    Ok((matrix, vec!["--matrix-file".to_string(), token(path)]))
}

/// Loads a fiber for commands that run chains: a start table is required.
pub fn load_walkable(args: &InstanceArgs, resolver: &Resolver) -> Result<LoadedFiber> {
    let k = resolver.get("k", args.k, 1)?;
    if let Some(name) = &args.instance {
        let Some((inst, tokens)) = bundled(name, k)? else {
            return Err(FiberError::InvalidArgument(format!(
                "unknown instance {name:?}; bundled names are jobsat4x4, no3factor225, hemmecke"
            )));
        };
        let mut warnings = Vec::new();
        if inst.markov_basis.is_none() {
            warnings.push(format!(
                "no connecting move basis is known for {name}; the walk uses a lattice kernel \
                 basis and may not reach the whole fiber"
            ));
        }
        return Ok(LoadedFiber {
            label: name.clone(),
            inst,
            tokens,
            warnings,
        });
    }

    let (matrix, mut tokens) = custom_matrix(args)?;
    let Some(start_path) = &args.start_file else {
        return Err(FiberError::InvalidArgument(
            "custom fibers need --start-file for chain commands".to_string(),
        ));
    };
    let start = FiberPoint::new(read_row_vector(start_path, "start")?)?;
    tokens.push("--start-file".to_string());
    tokens.push(token(start_path));

    let computed = sufficient_statistic(&matrix, &start)?;
    let target = match &args.target_file {
        None => computed,
        Some(path) => {
            let target = SufficientStatistic::new(read_row_vector(path, "target")?);
            if target != computed {
                return Err(FiberError::InvalidArgument(format!(
                    "start table margins do not match the target in {}",
                    path.display()
                )));
            }
            tokens.push("--target-file".to_string());
            tokens.push(token(path));
            target
        }
    };

    let mut warnings = Vec::new();
    let markov_basis = match &args.basis_file {
        Some(path) => {
            let basis = load_basis(path, &matrix)?;
            tokens.push("--basis-file".to_string());
            tokens.push(token(path));
            Some(basis)
        }
        None => {
            warnings.push(
                "no --basis-file given; the walk uses a lattice kernel basis and may not \
                 reach the whole fiber"
                    .to_string(),
            );
            None
        }
    };
    let lattice_basis = lattice_basis(&matrix)?;

    Ok(LoadedFiber {
        inst: FiberInstance {
            name: "custom".to_string(),
            matrix,
            target,
            start,
            markov_basis,
            lattice_basis,
            known_count: None,
        },
        label: "custom".to_string(),
        tokens,
        warnings,
    })
}

/// Loads just the margin problem for enumeration and counting; the start
/// table is optional when an explicit target is given.
pub fn load_margins(
    args: &InstanceArgs,
    resolver: &Resolver,
) -> Result<(DesignMatrix, SufficientStatistic, String)> {
    let k = resolver.get("k", args.k, 1)?;
    if let Some(name) = &args.instance {
        let Some((inst, _)) = bundled(name, k)? else {
            return Err(FiberError::InvalidArgument(format!(
                "unknown instance {name:?}; bundled names are jobsat4x4, no3factor225, hemmecke"
            )));
        };
        return Ok((inst.matrix, inst.target, name.clone()));
    }

    let (matrix, _) = custom_matrix(args)?;
    let target = match (&args.target_file, &args.start_file) {
        (Some(path), _) => SufficientStatistic::new(read_row_vector(path, "target")?),
        (None, Some(path)) => {
            let start = FiberPoint::new(read_row_vector(path, "start")?)?;
            sufficient_statistic(&matrix, &start)?
        }
        (None, None) => {
            return Err(FiberError::InvalidArgument(
                "custom fibers need --target-file or --start-file".to_string(),
            ));
        }
    };
    Ok((matrix, target, "custom".to_string()))
}
