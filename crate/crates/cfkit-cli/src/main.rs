//! `cfkit` — synthetic-font content-fusion pipeline.
//!
//! One binary, one `key=value` config format (`CFK_*` env vars override).
//! Exit codes: 0 success, 1 validation error, 2 runtime/numeric error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfkit::gradcheck::check_gradient;
use cfkit::pcl::{pcl, reconstruction_loss, PclConfig, PclVariant};
use cfkit::pgm::read_pgm;
use cfkit::projection::{project, ProjectionPlan};

use cfkit_cli::config::RunConfig;
use cfkit_cli::experiments::{
    rank_candidates, retrieval_benchmark, run_ablation, RetrievalMetric,
};
use cfkit_cli::pipeline::{self, Artifacts, StageStatus};
use cfkit_cli::CliError;

#[derive(Parser)]
#[command(
    name = "cfkit",
    about = "Few-shot font generation mechanics on synthetic glyphs: projected losses, basis clustering, content fusion, style refinement",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the key=value run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Re-run the stage even if its artifacts exist.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Render the synthetic font dataset and write its manifest.
    GenDataset(ConfigArg),
    /// Dump per-direction projection histograms of one image as TSV.
    Project {
        /// Input PGM image.
        #[arg(long)]
        image: PathBuf,
        /// Number of projection directions.
        #[arg(long, default_value_t = 12)]
        directions: usize,
    },
    /// Evaluate the projected character loss between two images.
    Pcl {
        /// Generated image (gradient side).
        #[arg(long)]
        generated: PathBuf,
        /// Ground-truth image.
        #[arg(long)]
        truth: PathBuf,
        /// Loss variant: wdl or kl.
        #[arg(long, default_value = "wdl")]
        variant: String,
        /// Number of projection directions.
        #[arg(long, default_value_t = 12)]
        directions: usize,
        /// Also report the combined reconstruction loss with this weight.
        #[arg(long)]
        lambda: Option<f64>,
        /// Run the finite-difference gradient suite instead of scoring files.
        #[arg(long)]
        grad_check: bool,
    },
    /// Train the model: --stage 1 (source-font content) or 2 (fused content).
    Train {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        stage: u8,
    },
    /// Build content profiles and select the basis fonts.
    Basis(ConfigArg),
    /// Compute fusion weights for every font against the basis.
    FuseWeights(ConfigArg),
    /// Refine the style vector of each held-out font.
    Isr(ConfigArg),
    /// Generate held-out glyphs and evaluate L1/RMSE/SSIM.
    Eval(ConfigArg),
    /// Rank candidate glyphs by distance to a query glyph.
    Retrieve {
        /// Query PGM (required unless --benchmark).
        #[arg(long)]
        query: Option<PathBuf>,
        /// Directory of candidate PGM files.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Distance: l1, pc-wdl, or pc-kl.
        #[arg(long, default_value = "pc-wdl")]
        metric: String,
        /// Number of results.
        #[arg(short, default_value_t = 10)]
        k: usize,
        /// Number of projection directions for the projected losses.
        #[arg(long, default_value_t = 12)]
        directions: usize,
        /// Run the seeded same-skeleton benchmark instead of a single query.
        #[arg(long)]
        benchmark: bool,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Compare source-font, nearest-basis, and fused content on held-out fonts.
    Ablation {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run all eight stages: dataset, training, clustering, fusion, ISR, eval.
    Pipeline(ConfigArg),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version output is a success, not a usage error.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    Ok(RunConfig::load(path)?)
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

fn print_stage(name: &str, status: StageStatus) {
    let tag = match status {
        StageStatus::Ran => "ran",
        StageStatus::Skipped => "skipped (artifact exists)",
    };
    println!("stage {name}: {tag}");
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenDataset(args) => {
            let cfg = load_config(&args.config)?;
            let status = pipeline::stage_dataset(&cfg, args.force)?;
            print_stage("dataset", status);
            Ok(())
        }
        Command::Project { image, directions } => {
            require_file(&image, "image")?;
            if directions == 0 {
                return Err(CliError::Validation("--directions must be >= 1".into()));
            }
            let img = read_pgm(&image)?;
            let plan = ProjectionPlan::new(img.height(), img.width(), directions)?;
            let proj = project(&img, &plan)?;
            println!("direction\tbin\tmass\tnormalized");
            for p in 0..directions {
                for k in 0..plan.n_bins() {
                    println!("{p}\t{k}\t{}\t{}", proj.hist[p][k], proj.norm[p][k]);
                }
            }
            Ok(())
        }
        Command::Pcl {
            generated,
            truth,
            variant,
            directions,
            lambda,
            grad_check,
        } => {
            let variant = PclVariant::parse(&variant).map_err(|e| CliError::Validation(e.to_string()))?;
            if grad_check {
                return run_grad_check_suite(variant);
            }
            require_file(&generated, "generated image")?;
            require_file(&truth, "truth image")?;
            if directions == 0 {
                return Err(CliError::Validation("--directions must be >= 1".into()));
            }
            let gen = read_pgm(&generated)?;
            let gt = read_pgm(&truth)?;
            let plan = ProjectionPlan::new(gen.height(), gen.width(), directions)?;
            let cfg = PclConfig::new(variant, &plan);
            let loss = pcl(&gen, &gt, &cfg, false)?;
            println!("pc-{variant}\t{}", loss.value);
            if let Some(lambda) = lambda {
                if lambda < 0.0 {
                    return Err(CliError::Validation("--lambda must be >= 0".into()));
                }
                let total = reconstruction_loss(&gen, &gt, lambda, &cfg, false)?;
                println!("reconstruction\t{}", total.value);
            }
            Ok(())
        }
        Command::Train { cfg, stage } => {
            let config = load_config(&cfg.config)?;
            let status = match stage {
                1 => pipeline::stage_train1(&config, cfg.force)?,
                _ => pipeline::stage_train2(&config, cfg.force)?,
            };
            print_stage(&format!("train-stage{stage}"), status);
            Ok(())
        }
        Command::Basis(args) => {
            let cfg = load_config(&args.config)?;
            let p = pipeline::stage_profiles(&cfg, args.force)?;
            print_stage("profiles", p);
            let b = pipeline::stage_basis(&cfg, args.force)?;
            print_stage("basis", b);
            Ok(())
        }
        Command::FuseWeights(args) => {
            let cfg = load_config(&args.config)?;
            let status = pipeline::stage_weights(&cfg, args.force)?;
            print_stage("weights", status);
            if let Ok(text) = fs::read_to_string(Artifacts::new(&cfg).weights) {
                print!("{text}");
            }
            Ok(())
        }
        Command::Isr(args) => {
            let cfg = load_config(&args.config)?;
            let status = pipeline::stage_isr(&cfg, args.force)?;
            print_stage("isr", status);
            if status == StageStatus::Ran {
                let trace = fs::read_to_string(Artifacts::new(&cfg).isr_trace)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                print!("{trace}");
            }
            Ok(())
        }
        Command::Eval(args) => {
            let cfg = load_config(&args.config)?;
            let status = pipeline::stage_eval(&cfg, args.force)?;
            print_stage("eval", status);
            if let Ok(text) = fs::read_to_string(Artifacts::new(&cfg).eval) {
                print!("{text}");
            }
            Ok(())
        }
        Command::Retrieve {
            query,
            candidates,
            metric,
            k,
            directions,
            benchmark,
            trials,
            seed,
        } => {
            if benchmark {
                if trials == 0 {
                    return Err(CliError::Validation("--trials must be >= 1".into()));
                }
                let result = retrieval_benchmark(trials, seed, 80, directions)?;
                println!("metric\thits\ttrials\thit_rate");
                for m in [RetrievalMetric::L1, RetrievalMetric::PcWdl, RetrievalMetric::PcKl] {
                    println!(
                        "{}\t{}\t{}\t{}",
                        m.name(),
                        result.hits[m.name()],
                        result.trials,
                        result.hit_rate(m)
                    );
                }
                return Ok(());
            }
            let metric = RetrievalMetric::parse(&metric).map_err(|e| CliError::Validation(e.to_string()))?;
            let query = query.ok_or_else(|| CliError::Validation("--query is required".into()))?;
            let cand_dir = candidates
                .ok_or_else(|| CliError::Validation("--candidates is required".into()))?;
            require_file(&query, "query image")?;
            if !cand_dir.is_dir() {
                return Err(CliError::Validation(format!(
                    "candidate directory {} does not exist",
                    cand_dir.display()
                )));
            }
            let query_img = read_pgm(&query)?;
            let mut names: Vec<PathBuf> = fs::read_dir(&cand_dir)
                .map_err(|e| CliError::Validation(e.to_string()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
                .collect();
            names.sort();
            if names.is_empty() {
                return Err(CliError::Validation(format!(
                    "no .pgm candidates in {}",
                    cand_dir.display()
                )));
            }
            let candidates: Vec<(String, cfkit::GlyphImage)> = names
                .iter()
                .map(|p| {
                    let id = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    Ok((id, read_pgm(p)?))
                })
                .collect::<Result<_, cfkit::Error>>()?;
            let plan = ProjectionPlan::new(query_img.height(), query_img.width(), directions)?;
            let ranked = rank_candidates(&query_img, &candidates, metric, k, &plan)?;
            println!("rank\tcandidate\tdistance");
            for (rank, (id, d)) in ranked.iter().enumerate() {
                println!("{}\t{id}\t{d}", rank + 1);
            }
            Ok(())
        }
        Command::Ablation { config } => {
            let cfg = load_config(&config)?;
            let report = run_ablation(&cfg)?;
            println!("font_id\tcondition\tl1\trmse\tssim");
            for row in &report.per_font {
                println!(
                    "{}\t{}\t{}\t{}\t{}",
                    row.font_id, row.condition, row.metrics.l1, row.metrics.rmse, row.metrics.ssim
                );
            }
            for (name, agg) in &report.aggregates {
                println!("ALL\t{name}\t{}\t{}\t{}", agg.l1, agg.rmse, agg.ssim);
            }
            Ok(())
        }
        Command::Pipeline(args) => {
            let cfg = load_config(&args.config)?;
            let outcome = pipeline::run_pipeline(&cfg, args.force)?;
            for (name, status) in outcome.stages {
                print_stage(name, status);
            }
            Ok(())
        }
    }
}

/// Seeded finite-difference suite for the projected-loss gradients; prints
/// one line per case plus a summary, failing if any case drops under 99%.
fn run_grad_check_suite(variant: PclVariant) -> Result<(), CliError> {
    use rand::Rng;
    use rand::SeedableRng;
    let plan = ProjectionPlan::new(16, 16, 12).map_err(CliError::from)?;
    let cfg = PclConfig::new(variant, &plan);
    println!("case\tchecked\twithin_tol\tmax_rel_err");
    let mut all_ok = true;
    for case in 0..20u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0FFEE ^ case);
        let mut mk = || {
            cfkit::GlyphImage::from_fn(16, 16, |_, _| rng.gen_range(0.1..0.9)).expect("in range")
        };
        let gen = mk();
        let gt = mk();
        let analytic = pcl(&gen, &gt, &cfg, true)?
            .gradient
            .expect("gradient requested");
        let f = |pixels: &[f64]| -> f64 {
            let img = cfkit::GlyphImage::new(16, 16, pixels.to_vec()).expect("in range");
            pcl(&img, &gt, &cfg, false).expect("valid inputs").value
        };
        let report = check_gradient(f, gen.pixels(), &analytic, 1e-4, 1e-4, None);
        println!(
            "{case}\t{}\t{}\t{}",
            report.checked, report.within_tol, report.max_rel_err
        );
        if report.fraction_ok() < 0.99 {
            all_ok = false;
        }
    }
    if all_ok {
        println!("grad-check pc-{variant}: PASS");
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "grad-check pc-{variant}: a case fell below 99% agreement"
        )))
    }
}

