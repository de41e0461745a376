//! Subcommands. Every command prints human-readable lines followed by one
//! machine-readable line of the form `<command> key=value ...`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use myriad::cauchy::seeded_rng;
use myriad::denoise::{self, Algorithm, Estimator, Mode};
use myriad::estimators::{estimate_joint_fast, estimate_joint_gmf, estimate_location_mf, estimate_scale};
use myriad::metrics;
use myriad::montecarlo::{run_study, StudyConfig};
use myriad::noise_level::{estimate_global_gamma, RegionTestConfig};
use myriad::{CauchyParams, DenoiseConfig, ImageGrid, SolverConfig};

use crate::error::{CliError, CliResult};
use crate::io;

#[derive(Debug, Parser)]
#[command(
    name = "myriad",
    version,
    about = "Cauchy parameter estimation and myriad-filter denoising"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate Cauchy location and/or scale from a CSV sample.
    Estimate(EstimateArgs),
    /// Add Cauchy noise to an image.
    AddNoise(AddNoiseArgs),
    /// Estimate the global noise level of an image from constant regions.
    NoiseLevel(NoiseLevelArgs),
    /// Denoise an image with a local or nonlocal myriad filter.
    Denoise(DenoiseArgs),
    /// Run a Monte Carlo study of the joint estimators.
    Simulate(SimulateArgs),
    /// Compare two images by PSNR and SSIM.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateAlgo {
    /// Joint location and scale.
    Gmf,
    /// Joint location and scale, accelerated update.
    Fast,
    /// Location only, with the scale fixed by `--fix-gamma`.
    Mf,
    /// Scale only, with the location fixed by `--fix-a`.
    Scale,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Relative stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> CliResult<SolverConfig> {
        let cfg = SolverConfig {
            rel_tolerance: self.tol,
            max_iterations: self.max_iter,
            record_trace: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV file with header `value` or `value,weight`.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = EstimateAlgo::Gmf)]
    pub algo: EstimateAlgo,
    #[arg(long, allow_negative_numbers = true)]
    pub fix_a: Option<f64>,
    #[arg(long)]
    pub fix_gamma: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct AddNoiseArgs {
    /// Clean input, `.png` or `.pfm`.
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Unclamped noisy raster (PFM).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional 8-bit PNG preview, rounded and clamped.
    #[arg(long)]
    pub preview: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Level of each neighbour test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Stop shrinking blocks once this many are accepted.
    #[arg(long, default_value_t = 5)]
    pub min_regions: usize,
}

impl RegionArgs {
    fn config(&self) -> RegionTestConfig {
        RegionTestConfig {
            alpha: self.alpha,
            min_regions: self.min_regions,
            ..RegionTestConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct NoiseLevelArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[command(flatten)]
    pub region: RegionArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Generalized,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DenoiseAlgo {
    Gmf,
    Fast,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Noisy input, `.pfm` or `.png`.
    #[arg(long)]
    pub image: PathBuf,
    /// Denoised raster (PFM), not clamped.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub preview: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Nonlocal)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Generalized)]
    pub estimator: EstimatorArg,
    #[arg(long, value_enum, default_value_t = DenoiseAlgo::Gmf)]
    pub algo: DenoiseAlgo,
    /// Known noise level.
    #[arg(long, conflicts_with = "auto_gamma")]
    pub gamma: Option<f64>,
    /// Estimate the noise level from constant regions.
    #[arg(long)]
    pub auto_gamma: bool,
    /// Patch side; 3 for noise levels up to 7.5, 5 above.
    #[arg(long)]
    pub patch: Option<usize>,
    #[arg(long, default_value_t = 31)]
    pub window: usize,
    #[arg(long, default_value_t = 40)]
    pub samples: usize,
    /// Neighbourhood radius in local mode.
    #[arg(long, default_value_t = 1)]
    pub radius: usize,
    /// Weight samples by exp(log-similarity / h).
    #[arg(long, requires = "h")]
    pub weighted: bool,
    #[arg(long, requires = "weighted")]
    pub h: Option<f64>,
    /// Per-pixel scale estimates (PFM, NaN where unavailable).
    #[arg(long)]
    pub gamma_map: Option<PathBuf>,
    #[command(flatten)]
    pub region: RegionArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Worker threads; all counts give identical output.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Sample size per trial.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-trial results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// One-row summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference image, `.png` or `.pfm`.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Image under test, `.png` or `.pfm`.
    #[arg(long)]
    pub test: PathBuf,
    /// Clamp the test image into [0, 255] first.
    #[arg(long)]
    pub clamp: bool,
}

/// Runs a command and returns the process exit code on success.
pub fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Estimate(a) => estimate(&a),
        Command::AddNoise(a) => add_noise(&a),
        Command::NoiseLevel(a) => noise_level(&a),
        Command::Denoise(a) => with_threads(a.threads, || denoise(&a)),
        Command::Simulate(a) => with_threads(a.threads, || simulate(&a)),
        Command::Metrics(a) => compare(&a),
    }
}

fn with_threads(threads: Option<usize>, f: impl FnOnce() -> CliResult<i32> + Send) -> CliResult<i32> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Precondition(format!("cannot start thread pool: {e}")))?
            .install(f),
    }
}

fn estimate(args: &EstimateArgs) -> CliResult<i32> {
    let solver = args.solver.config()?;
    let usage = |m: &str| Err(CliError::Usage(m.into()));
    match (args.algo, args.fix_a, args.fix_gamma) {
        (EstimateAlgo::Mf, _, None) => return usage("--algo mf requires --fix-gamma"),
        (EstimateAlgo::Mf, Some(_), _) => return usage("--algo mf does not take --fix-a"),
        (EstimateAlgo::Scale, None, _) => return usage("--algo scale requires --fix-a"),
        (EstimateAlgo::Scale, _, Some(_)) => return usage("--algo scale does not take --fix-gamma"),
        (EstimateAlgo::Gmf | EstimateAlgo::Fast, Some(_), _) | (EstimateAlgo::Gmf | EstimateAlgo::Fast, _, Some(_)) => {
            return usage("joint estimation takes neither --fix-a nor --fix-gamma")
        }
        _ => {}
    }
    let sample = io::read_samples(&args.input)?;
    let fit = match args.algo {
        EstimateAlgo::Gmf => estimate_joint_gmf(&sample, &solver, None)?,
        EstimateAlgo::Fast => estimate_joint_fast(&sample, &solver, None)?,
        EstimateAlgo::Mf => estimate_location_mf(&sample, args.fix_gamma.unwrap(), &solver, None)?,
        EstimateAlgo::Scale => estimate_scale(&sample, args.fix_a.unwrap(), &solver, None)?,
    };
    let p = fit.params;
    io::emit(&format!(
        "location  a_hat     = {}\nscale     gamma_hat = {}\niterations           = {}\nconverged            = {}\n",
        p.a, p.gamma, fit.iterations, fit.converged
    ));
    io::emit(&format!(
        "estimate a_hat={} gamma_hat={} iterations={} converged={}\n",
        p.a, p.gamma, fit.iterations, fit.converged
    ));
    if fit.converged {
        Ok(0)
    } else {
        Err(CliError::Precondition(format!(
            "no convergence within {} iterations",
            solver.max_iterations
        )))
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

fn add_noise(args: &AddNoiseArgs) -> CliResult<i32> {
    positive("--gamma", args.gamma)?;
    let clean = io::read_image(&args.image)?;
    let noisy = denoise::add_noise(&clean, args.gamma, &mut seeded_rng(args.seed, 0));
    io::write_pfm(&args.out, &noisy)?;
    if let Some(preview) = &args.preview {
        io::write_preview(preview, &noisy)?;
    }
    io::emit(&format!(
        "added C(0, {}) noise to {}x{} image, seed {}\n",
        args.gamma,
        noisy.width(),
        noisy.height(),
        args.seed
    ));
    io::emit(&format!(
        "add-noise width={} height={} gamma={} seed={}\n",
        noisy.width(),
        noisy.height(),
        args.gamma,
        args.seed
    ));
    Ok(0)
}

fn noise_level(args: &NoiseLevelArgs) -> CliResult<i32> {
    let img = io::read_image(&args.image)?;
    let report = estimate_global_gamma(&img, &args.region.config(), &SolverConfig::default())?;
    io::emit(&format!(
        "estimated noise level {} from {} constant blocks of side {}\n",
        report.global_gamma,
        report.num_regions(),
        report.block_size
    ));
    io::emit(&format!(
        "noise-level gamma={} regions={} block={}\n",
        report.global_gamma,
        report.num_regions(),
        report.block_size
    ));
    Ok(0)
}

fn denoise_config(args: &DenoiseArgs) -> CliResult<DenoiseConfig> {
    let mode = match args.mode {
        ModeArg::Local => Mode::Local,
        ModeArg::Nonlocal => Mode::Nonlocal,
    };
    let estimator = match args.estimator {
        EstimatorArg::Generalized => Estimator::Generalized,
        EstimatorArg::Classical => Estimator::Classical,
    };
    let cfg = DenoiseConfig {
        mode,
        estimator,
        algorithm: match args.algo {
            DenoiseAlgo::Gmf => Algorithm::Gmf,
            DenoiseAlgo::Fast => Algorithm::Fast,
        },
        local_radius: args.radius,
        patch_side: args.patch,
        window: args.window,
        samples: args.samples,
        weighted: args.weighted,
        kernel_h: args.h,
        gamma: args.gamma,
        region_test: args.region.config(),
    };
    if cfg.needs_gamma() && args.gamma.is_none() && !args.auto_gamma {
        return Err(CliError::Usage(
            "nonlocal mode and the classical estimator need --gamma or --auto-gamma".into(),
        ));
    }
    if args.gamma_map.is_some() && estimator == Estimator::Classical {
        return Err(CliError::Usage("--gamma-map needs the generalized estimator".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn denoise(args: &DenoiseArgs) -> CliResult<i32> {
    let cfg = denoise_config(args)?;
    let solver = args.solver.config()?;
    let noisy = io::read_image(&args.image)?;
    let out = denoise::denoise(&noisy, &cfg, &solver)?;
    io::write_pfm(&args.out, &out.image)?;
    if let Some(preview) = &args.preview {
        io::write_preview(preview, &out.image)?;
    }
    if let (Some(path), Some(map)) = (&args.gamma_map, &out.gamma_map) {
        std::fs::write(path, io::encode_pfm(map.width, map.height, &map.values))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let gamma = out.gamma_used.map_or_else(|| "none".to_string(), |g| g.to_string());
    io::emit(&format!(
        "denoised {}x{} image, noise level {gamma}, {} pixels hit the iteration cap\n",
        out.image.width(),
        out.image.height(),
        out.nonconverged
    ));
    io::emit(&format!(
        "denoise width={} height={} gamma_used={gamma} nonconverged={}\n",
        out.image.width(),
        out.image.height(),
        out.nonconverged
    ));
    Ok(0)
}

fn simulate(args: &SimulateArgs) -> CliResult<i32> {
    let truth = CauchyParams::new(args.a, args.gamma).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = StudyConfig {
        truth,
        n: args.n,
        trials: args.trials,
        seed: args.seed,
    };
    let solver = args.solver.config()?;
    let (records, s) = run_study(&cfg, &solver)?;
    io::write_trials(&args.out, &records)?;
    if let Some(path) = &args.summary {
        io::write_summary(path, &s)?;
    }
    io::emit(&format!(
        "{} trials of n={} from C({}, {})\n\
         iterations GMF  {:.4} ± {:.4}\n\
         iterations fast {:.4} ± {:.4}\n\
         MSE(a) {:.6}  MSE(gamma) {:.6}\n",
        s.trials,
        s.n,
        args.a,
        args.gamma,
        s.iter_gmf.mean,
        s.iter_gmf.sd,
        s.iter_fast.mean,
        s.iter_fast.sd,
        s.mse_a,
        s.mse_gamma
    ));
    io::emit(&format!(
        "simulate trials={} n={} iter_gmf={} iter_fast={} mse_a={} mse_gamma={} nonconverged={}\n",
        s.trials, s.n, s.iter_gmf.mean, s.iter_fast.mean, s.mse_a, s.mse_gamma, s.nonconverged
    ));
    Ok(0)
}

fn compare(args: &MetricsArgs) -> CliResult<i32> {
    let reference = io::read_image(&args.reference)?;
    let mut test: ImageGrid = io::read_image(&args.test)?;
    if args.clamp {
        test = test.map(|v| v.clamp(0.0, 255.0));
    }
    let q = metrics::quality(&test, &reference)?;
    io::emit(&format!("PSNR {} dB\nSSIM {}\n", q.psnr_db, q.ssim));
    io::emit(&format!("metrics psnr_db={} ssim={}\n", q.psnr_db, q.ssim));
    Ok(0)
}
