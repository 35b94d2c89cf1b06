//! `tvci`: command-line front end for the compressive imaging toolkit.
//!
//! Exit codes: 0 success, 1 usage or argument error, 2 verification
//! failure, 3 I/O error.

mod config;
mod verify;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use tvci_core::densities::{build_density, gamma_constant, DensityKind, NormKind};
use tvci_core::experiment::{
    load_image, rescale_to_100, rows_to_csv, run_experiment, ExperimentSpec, Scheme,
};
use tvci_core::gradient::TvMode;
use tvci_core::io::{
    read_pattern, write_density_csv, write_density_pgm, write_pattern, write_pgm, write_raw,
};
use tvci_core::solver::{solve_tv, SolverConfig};
use tvci_core::{Convention, Grid, MeasurementOp, Result, TvciError};

#[derive(Parser)]
#[command(name = "tvci", version, about = "Variable-density compressive imaging toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or inspect sampling patterns
    Pattern {
        #[command(subcommand)]
        action: PatternCmd,
    },
    /// Export densities or compute their Gamma constant
    Density {
        #[command(subcommand)]
        action: DensityCmd,
    },
    /// Measure an image through a sampling pattern
    Measure(MeasureArgs),
    /// Reconstruct an image from measurements
    Reconstruct(ReconstructArgs),
    /// Batch reconstruction experiments
    Experiment {
        #[command(subcommand)]
        action: ExperimentCmd,
    },
    /// Run the built-in property suite
    Verify,
}

#[derive(Subcommand)]
enum PatternCmd {
    /// Sample a pattern and write it to a CSV file
    Gen(PatternGenArgs),
    /// Print a summary of a pattern file
    Show {
        file: PathBuf,
    },
}

#[derive(Args)]
struct PatternGenArgs {
    /// Grid side length (power of two)
    #[arg(long)]
    n: usize,
    /// Dimension
    #[arg(long)]
    d: usize,
    /// fourier or walsh
    #[arg(long, default_value = "fourier")]
    convention: String,
    /// Number of distinct frequencies to cover (i.i.d. schemes keep
    /// drawing until this many rows are hit)
    #[arg(long)]
    m: usize,
    /// uniform | optimal | inverse-square | hyperbolic-cross | half-half |
    /// multilevel[:r=..,r0=..,a=..]
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum DensityCmd {
    /// Write the density as CSV (and optionally a PGM heatmap)
    Gen(DensityGenArgs),
    /// Print Gamma(p) and Gamma(p)/ln N
    Gamma(DensityGammaArgs),
}

#[derive(Args)]
struct DensityGenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// uniform | optimal-fourier | inverse-square | hyperbolic-cross |
    /// optimal-walsh | radial:<norm>,<alpha>
    #[arg(long)]
    kind: String,
    #[arg(long, default_value = "fourier")]
    convention: String,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct DensityGammaArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    kind: String,
    #[arg(long, default_value = "fourier")]
    convention: String,
}

#[derive(Args)]
struct MeasureArgs {
    /// Image source: shepp-logan-<N>[-3d], blocks-<N>-<d>d-s<s>, or a raw
    /// image file path
    #[arg(long)]
    image: String,
    #[arg(long)]
    pattern: PathBuf,
    /// Output CSV of measurements (index, re, im)
    #[arg(long)]
    out: PathBuf,
    /// Rescale the image so its peak is 100 before measuring
    #[arg(long, default_value_t = true)]
    rescale: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    pattern: PathBuf,
    /// Measurement CSV produced by `measure`
    #[arg(long)]
    measurements: PathBuf,
    /// Output raw image file
    #[arg(long)]
    out: PathBuf,
    /// Optional PGM rendering of the reconstruction
    #[arg(long)]
    pgm: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    mu: f64,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value_t = 5)]
    outer_iters: usize,
    #[arg(long, default_value_t = 5000)]
    inner_iters: usize,
    /// isotropic or anisotropic
    #[arg(long, default_value = "isotropic")]
    tv_mode: String,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    Run(ExperimentRunArgs),
}

#[derive(Args, Default)]
struct ExperimentRunArgs {
    /// Optional key = value config file; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    image: Option<String>,
    #[arg(long)]
    convention: Option<String>,
    /// Comma-separated scheme list
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated sampling percentages in (0, 100]
    #[arg(long)]
    pct: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Measurement noise SNR in dB (omit for noiseless)
    #[arg(long)]
    noise_snr: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    inner_iters: Option<usize>,
    #[arg(long)]
    outer_iters: Option<usize>,
    #[arg(long)]
    tv_mode: Option<String>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for reconstructed frames
    #[arg(long)]
    frames: Option<PathBuf>,
}

fn parse_density_kind(s: &str) -> Result<DensityKind> {
    match s.trim() {
        "uniform" => Ok(DensityKind::Uniform),
        "optimal-fourier" => Ok(DensityKind::OptimalFourier),
        "inverse-square" => Ok(DensityKind::InverseSquare),
        "hyperbolic-cross" => Ok(DensityKind::HyperbolicCross),
        "optimal-walsh" => Ok(DensityKind::OptimalWalsh {
            norm: NormKind::LInf,
        }),
        other => {
            if let Some(rest) = other.strip_prefix("radial:") {
                let (norm, alpha) = rest.split_once(',').ok_or_else(|| {
                    TvciError::Parse(format!("radial needs '<norm>,<alpha>', got '{rest}'"))
                })?;
                return Ok(DensityKind::Radial {
                    norm: NormKind::parse(norm)?,
                    alpha: alpha.trim().parse().map_err(|_| {
                        TvciError::Parse(format!("bad radial exponent '{alpha}'"))
                    })?,
                });
            }
            if let Some(rest) = other.strip_prefix("optimal-walsh:") {
                return Ok(DensityKind::OptimalWalsh {
                    norm: NormKind::parse(rest)?,
                });
            }
            Err(TvciError::Parse(format!("unknown density kind '{other}'")))
        }
    }
}

fn write_measurements(path: &Path, y: &[Complex64]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "index, re, im")?;
    for (i, v) in y.iter().enumerate() {
        writeln!(out, "{}, {:.17e}, {:.17e}", i + 1, v.re, v.im)?;
    }
    out.flush()?;
    Ok(())
}

fn read_measurements(path: &Path) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(TvciError::Parse(format!(
                "{}:{}: expected 'index, re, im'",
                path.display(),
                lineno + 1
            )));
        }
        let re: f64 = parts[1]
            .parse()
            .map_err(|_| TvciError::Parse(format!("bad value '{}'", parts[1])))?;
        let im: f64 = parts[2]
            .parse()
            .map_err(|_| TvciError::Parse(format!("bad value '{}'", parts[2])))?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

fn cmd_pattern_gen(a: &PatternGenArgs) -> Result<()> {
    let grid = Grid::new(a.n, a.d)?;
    let convention = Convention::parse(&a.convention)?;
    let scheme = Scheme::parse(&a.scheme)?;
    let pattern = scheme.sample(&grid, convention, a.m, a.seed)?;
    write_pattern(&a.out, &pattern)?;
    println!(
        "wrote {} ({} draws, {} distinct rows)",
        a.out.display(),
        pattern.m,
        pattern.distinct()
    );
    Ok(())
}

fn cmd_pattern_show(file: &Path) -> Result<()> {
    let p = read_pattern(file)?;
    println!("convention: {}", p.convention.as_str());
    println!("grid: N = {}, d = {}", p.grid.n(), p.grid.d());
    println!("scheme: {}", p.scheme);
    println!("seed: {}", p.seed);
    println!("draws: {} ({} distinct rows)", p.m, p.distinct());
    let repeats: usize = p
        .draws
        .iter()
        .filter(|&&(_, c)| c > 1)
        .map(|&(_, c)| c as usize - 1)
        .sum();
    println!("repeated draws: {repeats}");
    Ok(())
}

fn cmd_density_gen(a: &DensityGenArgs) -> Result<()> {
    let grid = Grid::new(a.n, a.d)?;
    let convention = Convention::parse(&a.convention)?;
    let kind = parse_density_kind(&a.kind)?;
    let p = build_density(kind, &grid, convention)?;
    write_density_csv(&a.csv, &p)?;
    println!("wrote {}", a.csv.display());
    if let Some(pgm) = &a.pgm {
        write_density_pgm(pgm, &p)?;
        println!("wrote {}", pgm.display());
    }
    Ok(())
}

fn cmd_density_gamma(a: &DensityGammaArgs) -> Result<()> {
    let grid = Grid::new(a.n, a.d)?;
    let convention = Convention::parse(&a.convention)?;
    let kind = parse_density_kind(&a.kind)?;
    let p = build_density(kind, &grid, convention)?;
    let gamma = gamma_constant(&p)?;
    println!("Gamma(p) = {gamma:.6}");
    println!("Gamma(p)/ln N = {:.6}", gamma / (a.n as f64).ln());
    Ok(())
}

fn cmd_measure(a: &MeasureArgs) -> Result<()> {
    let phantom = load_image(&a.image, a.seed)?;
    let x = if a.rescale {
        rescale_to_100(&phantom.image)
    } else {
        phantom.image.clone()
    };
    let pattern = read_pattern(&a.pattern)?;
    if pattern.grid != x.grid {
        return Err(TvciError::Mismatch(format!(
            "pattern grid {}^{} != image grid {}^{}",
            pattern.grid.n(),
            pattern.grid.d(),
            x.grid.n(),
            x.grid.d()
        )));
    }
    let op = MeasurementOp::new(&pattern)?;
    let y = op.apply(&x)?;
    write_measurements(&a.out, &y)?;
    println!("wrote {} ({} measurements)", a.out.display(), y.len());
    Ok(())
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    let pattern = read_pattern(&a.pattern)?;
    let op = MeasurementOp::new(&pattern)?;
    let y = read_measurements(&a.measurements)?;
    let cfg = SolverConfig {
        mu: a.mu,
        eta: a.eta,
        outer_iters: a.outer_iters,
        inner_iters: a.inner_iters,
        tv_mode: TvMode::parse(&a.tv_mode)?,
        ..Default::default()
    };
    let res = solve_tv(&op, &y, &cfg)?;
    write_raw(&a.out, &res.x_hat)?;
    if let Some(pgm) = &a.pgm {
        write_pgm(pgm, &res.x_hat, 16)?;
    }
    println!(
        "wrote {} (residual {:.3e}, {} iterations, converged: {})",
        a.out.display(),
        res.residual,
        res.iterations,
        res.converged
    );
    Ok(())
}

fn cmd_experiment_run(a: &ExperimentRunArgs) -> Result<()> {
    let file = match &a.config {
        Some(path) => config::read_config(path)?,
        None => Default::default(),
    };
    let get = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone().or_else(|| file.get(key).cloned())
    };
    let image = get(&a.image, "image")
        .ok_or_else(|| TvciError::Invalid("missing --image (or config 'image')".into()))?;
    let convention =
        Convention::parse(&get(&a.convention, "convention").unwrap_or_else(|| "fourier".into()))?;
    let schemes = get(&a.scheme, "scheme")
        .ok_or_else(|| TvciError::Invalid("missing --scheme (or config 'scheme')".into()))?
        .split(',')
        .map(Scheme::parse)
        .collect::<Result<Vec<_>>>()?;
    let percentages = get(&a.pct, "pct")
        .ok_or_else(|| TvciError::Invalid("missing --pct (or config 'pct')".into()))?
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| TvciError::Parse(format!("bad percentage '{s}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let parse_opt = |v: Option<String>, name: &str| -> Result<Option<f64>> {
        v.map(|s| {
            s.parse::<f64>()
                .map_err(|_| TvciError::Parse(format!("bad {name} '{s}'")))
        })
        .transpose()
    };
    let trials = a
        .trials
        .or(parse_opt(file.get("trials").cloned(), "trials")?.map(|v| v as usize))
        .unwrap_or(20);
    let base_seed = a
        .seed
        .or(parse_opt(file.get("seed").cloned(), "seed")?.map(|v| v as u64))
        .unwrap_or(0);
    let noise_snr_db = match a.noise_snr {
        Some(v) => Some(v),
        None => parse_opt(file.get("noise-snr").cloned(), "noise-snr")?,
    };
    let mut solver = SolverConfig::default();
    if let Some(mu) = a.mu.or(parse_opt(file.get("mu").cloned(), "mu")?) {
        solver.mu = mu;
    }
    if let Some(v) = a
        .inner_iters
        .or(parse_opt(file.get("inner-iters").cloned(), "inner-iters")?.map(|v| v as usize))
    {
        solver.inner_iters = v;
    }
    if let Some(v) = a
        .outer_iters
        .or(parse_opt(file.get("outer-iters").cloned(), "outer-iters")?.map(|v| v as usize))
    {
        solver.outer_iters = v;
    }
    if let Some(mode) = get(&a.tv_mode, "tv-mode") {
        solver.tv_mode = TvMode::parse(&mode)?;
    }
    let frames_dir = a
        .frames
        .clone()
        .or_else(|| file.get("frames").map(PathBuf::from));
    if let Some(dir) = &frames_dir {
        std::fs::create_dir_all(dir)?;
    }

    let spec = ExperimentSpec {
        image,
        convention,
        schemes,
        percentages,
        trials,
        base_seed,
        solver,
        noise_snr_db,
        frames_dir,
    };
    let rows = run_experiment(&spec)?;
    let csv = rows_to_csv(&rows);
    match a.out.clone().or_else(|| file.get("out").map(PathBuf::from)) {
        Some(path) => {
            std::fs::write(&path, csv)?;
            println!("wrote {} ({} rows)", path.display(), rows.len());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("TVCI_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Pattern { action } => match action {
            PatternCmd::Gen(a) => cmd_pattern_gen(a),
            PatternCmd::Show { file } => cmd_pattern_show(file),
        },
        Command::Density { action } => match action {
            DensityCmd::Gen(a) => cmd_density_gen(a),
            DensityCmd::Gamma(a) => cmd_density_gamma(a),
        },
        Command::Measure(a) => cmd_measure(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Experiment { action } => match action {
            ExperimentCmd::Run(a) => cmd_experiment_run(a),
        },
        Command::Verify => unreachable!("handled in main"),
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if matches!(cli.command, Command::Verify) {
        let failures = verify::run_verification();
        return if failures == 0 {
            println!("all checks passed");
            ExitCode::SUCCESS
        } else {
            eprintln!("{failures} check(s) failed");
            ExitCode::from(2)
        };
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                TvciError::Io(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
