//! Command-line surface: load games, run the reduction pipeline, inspect
//! pencil spectra, solve small games exactly, generate planted instances
//! and run the generic-game experiments.
//!
//! Exit codes are a stable contract: 0 success, 1 usage/IO/validation,
//! 2 capability (oracle size cap), 3 no reduction available.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gamerank::oracle::{enumerate_equilibria, equivalent, ORACLE_SIZE_CAP};
use gamerank::reduction::ReductionPath;
use gamerank::{
    positive_real_spectrum, rank_at, reduce, run_experiment, sample_planted_pat,
    sample_square_game, sample_structured_rect_game, twcf_spectrum, BimatrixGame, Error,
    ExperimentKind, Matrix, Tolerance,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_CAPABILITY: u8 = 2;
const EXIT_NO_REDUCTION: u8 = 3;

#[derive(Parser)]
#[command(name = "gamerank", about = "Rank reduction of bimatrix games", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Relative numerical-rank tolerance (default 1e-9).
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Eigenvalue clustering/matching tolerance (default 1e-8).
    #[arg(long, global = true)]
    tol_eig: Option<f64>,
    /// Linear-system residual tolerance (default 1e-8).
    #[arg(long, global = true)]
    tol_residual: Option<f64>,
    /// RNG seed for generators and experiments.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Force oracle verification on (default: on when within the size cap).
    #[arg(long, global = true)]
    verify: bool,
    /// Force oracle verification off.
    #[arg(long, global = true, conflicts_with = "verify")]
    no_verify: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the reduction pipeline on a game file and emit a certificate.
    Reduce {
        /// Game file: {"m":int,"n":int,"A":[[f64]],"B":[[f64]]}.
        game: PathBuf,
    },
    /// Print the rank-reducing spectrum of the pencil A + lambda B.
    Pencil { game: PathBuf },
    /// Enumerate all Nash equilibria (small games only).
    Solve { game: PathBuf },
    /// Generate a game file deterministically from the seed.
    Generate {
        #[arg(value_enum)]
        kind: GenerateKind,
        #[arg(short, long, default_value_t = 4)]
        m: usize,
        #[arg(short, long, default_value_t = 6)]
        n: usize,
        /// Planted rank for structured-rect games.
        #[arg(short, long, default_value_t = 3)]
        k: usize,
        /// Base-game rank (0 or 1) for planted-pat games.
        #[arg(long, default_value_t = 0)]
        base_rank: usize,
        /// Planted gamma for planted-pat games.
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
    },
    /// Run a generic-game experiment batch.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentCliKind,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Sizes: "2,3,4" for square-limit, "4x6x3,5x8x5" for rect-two-step.
        #[arg(long)]
        sizes: Option<String>,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum GenerateKind {
    ZeroSum,
    ConstantSum,
    PlantedPat,
    StructuredRect,
    GenericSquare,
}

#[derive(Copy, Clone, ValueEnum)]
enum ExperimentCliKind {
    SquareLimit,
    RectTwoStep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match build_tolerance(&cli.common) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let code = match &cli.command {
        Command::Reduce { game } => cmd_reduce(game, &cli.common, &tol),
        Command::Pencil { game } => cmd_pencil(game, &cli.common, &tol),
        Command::Solve { game } => cmd_solve(game, &cli.common, &tol),
        Command::Generate { kind, m, n, k, base_rank, gamma } => {
            cmd_generate(*kind, *m, *n, *k, *base_rank, *gamma, &cli.common)
        }
        Command::Experiment { kind, trials, sizes } => {
            cmd_experiment(*kind, *trials, sizes.as_deref(), &cli.common, &tol)
        }
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::SizeCap { .. } => EXIT_CAPABILITY,
                _ => EXIT_USAGE,
            })
        }
    }
}

fn build_tolerance(common: &Common) -> Result<Tolerance, String> {
    let check = |name: &str, v: f64| -> Result<f64, String> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} must be positive and finite, got {v}"))
        }
    };
    let mut tol = Tolerance::relaxed();
    if let Some(v) = common.tol_rank {
        tol.rank_tol = check("--tol-rank", v)?;
    }
    if let Some(v) = common.tol_eig {
        tol.eig_tol = check("--tol-eig", v)?;
    }
    if let Some(v) = common.tol_residual {
        tol.residual_tol = check("--tol-residual", v)?;
    }
    Ok(tol)
}

fn load_game(path: &PathBuf) -> Result<BimatrixGame, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidParam(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParam(format!("malformed game file {}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, common: &Common) -> Result<(), Error> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    match &common.out {
        Some(path) => fs::write(path, json.as_bytes())
            .map_err(|e| Error::InvalidParam(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn verification_enabled(common: &Common, g: &BimatrixGame) -> bool {
    if common.no_verify {
        return false;
    }
    if common.verify {
        return true;
    }
    g.m() <= ORACLE_SIZE_CAP && g.n() <= ORACLE_SIZE_CAP
}

fn cmd_reduce(path: &PathBuf, common: &Common, tol: &Tolerance) -> Result<u8, Error> {
    let g = load_game(path)?;
    if g.game_rank(tol) == 0 {
        eprintln!("already zero-sum: the game rank is 0, nothing to reduce");
        return Ok(EXIT_NO_REDUCTION);
    }
    let cert = reduce(&g, tol)?;
    let no_reduction = cert.path == ReductionPath::None;
    if verification_enabled(common, &g) {
        if !cert.replay(&g, tol) {
            return Err(Error::Numerical("certificate failed independent replay".into()));
        }
        if g.m() <= ORACLE_SIZE_CAP && g.n() <= ORACLE_SIZE_CAP && !no_reduction {
            let reduced = cert.reduced_in_input_orientation();
            match equivalent(&g, &reduced, tol) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(Error::Numerical(
                        "reduced game has a different equilibrium set".into(),
                    ))
                }
                // A degenerate game is outside the oracle's contract; the
                // replay check above still holds.
                Err(Error::Degenerate) => eprintln!("note: oracle skipped (degenerate game)"),
                Err(e) => return Err(e),
            }
        }
    }
    emit(&cert, common)?;
    Ok(if no_reduction { EXIT_NO_REDUCTION } else { EXIT_OK })
}

fn cmd_pencil(path: &PathBuf, common: &Common, tol: &Tolerance) -> Result<u8, Error> {
    let g = load_game(path)?;
    let spectrum = twcf_spectrum(&g.a, &g.b, tol)?;
    #[derive(Serialize)]
    struct PositiveEntry {
        value: f64,
        mult: usize,
    }
    #[derive(Serialize)]
    struct RankRow {
        lambda: f64,
        rank: usize,
    }
    #[derive(Serialize)]
    struct Output<'a> {
        spectrum: &'a gamerank::PencilSpectrum,
        positive_real: Vec<PositiveEntry>,
        generic_rank: usize,
        rank_table: Vec<RankRow>,
    }
    let positive_real = positive_real_spectrum(&spectrum, tol)
        .into_iter()
        .map(|(value, mult)| PositiveEntry { value, mult })
        .collect();
    let rank_table = spectrum
        .eigenvalues
        .iter()
        .filter(|e| e.value.im == 0.0)
        .map(|e| RankRow { lambda: e.value.re, rank: rank_at(e.value.re, &spectrum) })
        .collect();
    let out = Output {
        spectrum: &spectrum,
        positive_real,
        generic_rank: spectrum.r + spectrum.q,
        rank_table,
    };
    emit(&out, common)?;
    Ok(EXIT_OK)
}

fn cmd_solve(path: &PathBuf, common: &Common, tol: &Tolerance) -> Result<u8, Error> {
    let g = load_game(path)?;
    let set = enumerate_equilibria(&g, tol)?;
    emit(&set, common)?;
    Ok(EXIT_OK)
}

fn cmd_generate(
    kind: GenerateKind,
    m: usize,
    n: usize,
    k: usize,
    base_rank: usize,
    gamma: f64,
    common: &Common,
) -> Result<u8, Error> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParam("dimensions must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut uniform =
        |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    match kind {
        GenerateKind::ZeroSum => {
            let a = uniform(m, n);
            let b = -&a;
            let g = BimatrixGame::new(Matrix::new(a)?, Matrix::new(b)?)?;
            emit(&g, common)?;
        }
        GenerateKind::ConstantSum => {
            let a = uniform(m, n);
            let c = rng.random_range(0.5..2.0);
            let b = DMatrix::from_element(m, n, c) - &a;
            let g = BimatrixGame::new(Matrix::new(a)?, Matrix::new(b)?)?;
            emit(&g, common)?;
        }
        GenerateKind::PlantedPat => {
            let planted = sample_planted_pat(m, n, base_rank, gamma, common.seed)?;
            emit(&planted, common)?;
        }
        GenerateKind::StructuredRect => {
            let g = sample_structured_rect_game(m, n, k, common.seed, false)?;
            emit(&g, common)?;
        }
        GenerateKind::GenericSquare => {
            let g = sample_square_game(m, common.seed)?;
            emit(&g, common)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_experiment(
    kind: ExperimentCliKind,
    trials: usize,
    sizes: Option<&str>,
    common: &Common,
    tol: &Tolerance,
) -> Result<u8, Error> {
    let kind = match kind {
        ExperimentCliKind::SquareLimit => {
            let sizes = match sizes {
                Some(text) => parse_square_sizes(text)?,
                None => vec![2, 3, 4, 5, 6],
            };
            ExperimentKind::SquareLimit { sizes }
        }
        ExperimentCliKind::RectTwoStep => {
            let sizes = match sizes {
                Some(text) => parse_rect_sizes(text)?,
                None => vec![(4, 6, 3), (4, 6, 4), (5, 8, 5)],
            };
            ExperimentKind::RectTwoStep { sizes }
        }
    };
    let report = run_experiment(&kind, trials, common.seed, tol)?;
    let clean = report.failures.is_empty();
    emit(&report, common)?;
    Ok(if clean { EXIT_OK } else { EXIT_USAGE })
}

fn parse_square_sizes(text: &str) -> Result<Vec<usize>, Error> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParam(format!("bad size entry: {part:?}")))
        })
        .collect()
}

fn parse_rect_sizes(text: &str) -> Result<Vec<(usize, usize, usize)>, Error> {
    text.split(',')
        .map(|part| {
            let dims: Vec<usize> = part
                .trim()
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|_| Error::InvalidParam(format!("bad size entry: {part:?}")))?;
            if dims.len() != 3 {
                return Err(Error::InvalidParam(format!(
                    "rect sizes need the form MxNxK, got {part:?}"
                )));
            }
            Ok((dims[0], dims[1], dims[2]))
        })
        .collect()
}
