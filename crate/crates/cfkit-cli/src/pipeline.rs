//! Eight-stage pipeline with stable artifact names and per-stage
//! idempotence: a stage whose primary artifact already exists is skipped
//! unless forced, and every stage reads its inputs back from the artifacts
//! of earlier stages, so any stage can be re-run in isolation.
//!
//! Stages: dataset -> stage-1 training -> content profiles -> basis
//! selection -> fusion weights -> stage-2 training -> style refinement ->
//! evaluation. The last `holdout_fonts` fonts never enter training; they are
//! the unseen-font analog used by refinement and evaluation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cfkit::cluster::{build_profiles, select_basis, FontContentProfile};
use cfkit::dataset::{build_dataset, DatasetManifest, DatasetOptions, MANIFEST_FILE};
use cfkit::error::{Error, Result};
use cfkit::fusion::{fuse_content, fusion_weights, weight_report, FusionWeights};
use cfkit::glyph::GlyphImage;
use cfkit::isr::{init_style, refine, save_style, IsrConfig};
use cfkit::metrics::{compare, MetricReport, PairMetrics};
use cfkit::model::{ContentFeature, ModelDims, StyleVector, ToyModelParams};
use cfkit::pgm::write_pgm;
use cfkit::projection::ProjectionPlan;
use cfkit::raster::builtin_skeletons;
use cfkit::train::{
    train_stage1, train_stage2, write_loss_log, FusedContentTable, TrainSchedule, TrainingSet,
};

use crate::config::RunConfig;

pub const STAGE_NAMES: [&str; 8] = [
    "dataset",
    "train-stage1",
    "profiles",
    "basis",
    "weights",
    "train-stage2",
    "isr",
    "eval",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub stages: Vec<(&'static str, StageStatus)>,
}

/// Artifact locations for one run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub manifest: PathBuf,
    pub model_stage1: PathBuf,
    pub loss_stage1: PathBuf,
    pub profiles: PathBuf,
    pub basis: PathBuf,
    pub weights: PathBuf,
    pub model_stage2: PathBuf,
    pub loss_stage2: PathBuf,
    pub styles_dir: PathBuf,
    pub isr_trace: PathBuf,
    pub eval: PathBuf,
    pub generated_dir: PathBuf,
}

impl Artifacts {
    pub fn new(cfg: &RunConfig) -> Self {
        let out = &cfg.out_dir;
        Artifacts {
            manifest: cfg.data_dir.join(MANIFEST_FILE),
            model_stage1: out.join("model_stage1.cfkt"),
            loss_stage1: out.join("loss_stage1.tsv"),
            profiles: out.join("profiles.tsv"),
            basis: out.join("basis.tsv"),
            weights: out.join("weights.tsv"),
            model_stage2: out.join("model_stage2.cfkt"),
            loss_stage2: out.join("loss_stage2.tsv"),
            styles_dir: out.join("styles"),
            isr_trace: out.join("isr_trace.tsv"),
            eval: out.join("eval.tsv"),
            generated_dir: out.join("generated"),
        }
    }
}

pub fn dims_of(cfg: &RunConfig) -> Result<ModelDims> {
    ModelDims::new(cfg.height, cfg.width, cfg.content_dim, cfg.style_dim)
}

pub fn schedule_of(cfg: &RunConfig) -> TrainSchedule {
    TrainSchedule {
        stage1_iters: cfg.stage1_iters,
        stage2_iters: cfg.stage2_iters,
        batch_size: cfg.batch_size,
        lambda_pcl: cfg.lambda_pcl,
        variant: cfg.variant,
        epsilon: cfg.kl_epsilon,
        n_directions: cfg.projections,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        ..TrainSchedule::new(cfg.variant)
    }
}

/// The last `holdout_fonts` manifest fonts are held out of training.
pub fn font_split(manifest: &DatasetManifest, cfg: &RunConfig) -> (Vec<String>, Vec<String>) {
    let fonts: Vec<String> = manifest.font_ids().iter().map(|s| s.to_string()).collect();
    let cut = fonts.len().saturating_sub(cfg.holdout_fonts);
    (fonts[..cut].to_vec(), fonts[cut..].to_vec())
}

pub fn load_manifest(cfg: &RunConfig) -> Result<DatasetManifest> {
    DatasetManifest::read(&Artifacts::new(cfg).manifest)
}

fn require(path: &Path, produced_by: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::InvalidInput {
            name: "pipeline",
            detail: format!(
                "missing artifact {} (run the {produced_by} stage first)",
                path.display()
            ),
        })
    }
}

pub fn stage_dataset(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.manifest.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    fs::create_dir_all(&cfg.data_dir).map_err(|e| Error::Io {
        path: cfg.data_dir.clone(),
        source: e,
    })?;
    let skeletons: Vec<_> = builtin_skeletons().into_iter().take(cfg.n_chars).collect();
    let opts = DatasetOptions {
        height: cfg.height,
        width: cfg.width,
        seed: cfg.seed,
        overwrite: force,
    };
    build_dataset(cfg.n_fonts, &skeletons, &cfg.data_dir, &opts)?;
    Ok(StageStatus::Ran)
}

fn load_train_set(cfg: &RunConfig, manifest: &DatasetManifest) -> Result<TrainingSet> {
    let (train, _) = font_split(manifest, cfg);
    TrainingSet::load(manifest, &cfg.data_dir, cfg.height, cfg.width, Some(&train))
}

pub fn stage_train1(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.model_stage1.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    require(&art.manifest, "dataset")?;
    let manifest = load_manifest(cfg)?;
    let data = load_train_set(cfg, &manifest)?;
    let outcome = train_stage1(dims_of(cfg)?, &data, &schedule_of(cfg))?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::Io {
        path: cfg.out_dir.clone(),
        source: e,
    })?;
    outcome.params.save(&art.model_stage1)?;
    write_loss_log(&outcome.log, &art.loss_stage1)?;
    Ok(StageStatus::Ran)
}

pub fn stage_profiles(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.profiles.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    require(&art.model_stage1, "train-stage1")?;
    let manifest = load_manifest(cfg)?;
    let params = ToyModelParams::load(&art.model_stage1)?;
    let profiles = build_profiles(&params, &manifest, &cfg.data_dir)?;
    write_profiles(&profiles, &art.profiles)?;
    Ok(StageStatus::Ran)
}

pub fn stage_basis(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.basis.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    require(&art.profiles, "profiles")?;
    let manifest = load_manifest(cfg)?;
    let (train, _) = font_split(&manifest, cfg);
    let profiles = read_profiles(&art.profiles)?;
    let train_profiles: Vec<FontContentProfile> = profiles
        .into_iter()
        .filter(|p| train.contains(&p.font_id))
        .collect();
    let embeddings = cfkit::cluster::embed(&train_profiles)?;
    let basis = select_basis(&embeddings, cfg.basis_count)?;

    let mut out = String::from("rank\tfont_id\tcluster_size\n");
    for (rank, &medoid) in basis.medoids.iter().enumerate() {
        writeln!(
            out,
            "{rank}\t{}\t{}",
            train_profiles[medoid].font_id,
            basis.cluster_size(rank)
        )
        .expect("in-memory write");
    }
    fs::write(&art.basis, out).map_err(|e| Error::Io {
        path: art.basis.clone(),
        source: e,
    })?;
    Ok(StageStatus::Ran)
}

pub fn stage_weights(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.weights.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    require(&art.basis, "basis")?;
    let profiles = read_profiles(&art.profiles)?;
    let basis_ids = read_basis_ids(&art.basis)?;
    let basis_profiles = select_profiles(&profiles, &basis_ids)?;
    let rows = weight_report(&profiles, &basis_profiles, cfg.tau)?;

    let mut out = String::from("font_id");
    for id in &basis_ids {
        out.push('\t');
        out.push_str(id);
    }
    out.push_str("\tentropy\targmax\n");
    for row in &rows {
        out.push_str(&row.font_id);
        for w in &row.weights {
            write!(out, "\t{w}").expect("in-memory write");
        }
        writeln!(out, "\t{}\t{}", row.entropy, row.argmax).expect("in-memory write");
    }
    fs::write(&art.weights, out).map_err(|e| Error::Io {
        path: art.weights.clone(),
        source: e,
    })?;
    Ok(StageStatus::Ran)
}

pub fn stage_train2(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.model_stage2.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    require(&art.weights, "weights")?;
    let manifest = load_manifest(cfg)?;
    let params = ToyModelParams::load(&art.model_stage1)?;
    let data = load_train_set(cfg, &manifest)?;
    let table = build_fused_table(cfg, &params, &data)?;
    let outcome = train_stage2(params, &data, &table, &schedule_of(cfg))?;
    outcome.params.save(&art.model_stage2)?;
    write_loss_log(&outcome.log, &art.loss_stage2)?;
    Ok(StageStatus::Ran)
}

pub fn stage_isr(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.isr_trace.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    require(&art.model_stage2, "train-stage2")?;
    let manifest = load_manifest(cfg)?;
    let (_, holdout) = font_split(&manifest, cfg);
    let params = ToyModelParams::load(&art.model_stage2)?;
    let plan = ProjectionPlan::new(cfg.height, cfg.width, cfg.projections)?;
    let isr_cfg = IsrConfig {
        epochs: cfg.isr_epochs,
        step: cfg.isr_step,
        lambda_pcl: cfg.lambda_pcl,
        variant: cfg.variant,
        epsilon: cfg.kl_epsilon,
    };
    fs::create_dir_all(&art.styles_dir).map_err(|e| Error::Io {
        path: art.styles_dir.clone(),
        source: e,
    })?;

    let ctx = InferenceContext::load(cfg, &manifest, &params)?;
    let mut trace_out = String::from("font_id\tepoch\tloss\n");
    for font_id in &holdout {
        let target = TargetFontContext::load(cfg, &manifest, &ctx, font_id)?;
        let s0 = init_style(&params, &target.reference_glyphs)?;
        let run = refine(
            &params,
            &s0,
            &target.reference_glyphs,
            &target.reference_contents,
            &plan,
            &isr_cfg,
        )?;
        for (epoch, loss) in run.trace.iter().enumerate() {
            writeln!(trace_out, "{font_id}\t{epoch}\t{loss}").expect("in-memory write");
        }
        save_style(&run.refined, &art.styles_dir.join(format!("{font_id}.cfsv")))?;
    }
    fs::write(&art.isr_trace, trace_out).map_err(|e| Error::Io {
        path: art.isr_trace.clone(),
        source: e,
    })?;
    Ok(StageStatus::Ran)
}

pub fn stage_eval(cfg: &RunConfig, force: bool) -> Result<StageStatus> {
    let art = Artifacts::new(cfg);
    if art.eval.exists() && !force {
        return Ok(StageStatus::Skipped);
    }
    require(&art.isr_trace, "isr")?;
    let manifest = load_manifest(cfg)?;
    let (_, holdout) = font_split(&manifest, cfg);
    let params = ToyModelParams::load(&art.model_stage2)?;

    let ctx = InferenceContext::load(cfg, &manifest, &params)?;
    let mut out = String::from("font_id\tchar_id\tl1\trmse\tssim\n");
    let mut report = MetricReport::default();
    for font_id in &holdout {
        let target = TargetFontContext::load(cfg, &manifest, &ctx, font_id)?;
        let style = cfkit::isr::load_style_for(
            &art.styles_dir.join(format!("{font_id}.cfsv")),
            cfg.style_dim,
        )?;
        for (char_id, content, truth) in &target.eval_set {
            let generated = params.decode(content, &style)?;
            let dir = art.generated_dir.join(font_id);
            write_pgm(&generated, &dir.join(format!("{char_id}.pgm")))?;
            let metrics = compare(&generated, truth)?;
            writeln!(
                out,
                "{font_id}\t{char_id}\t{}\t{}\t{}",
                metrics.l1, metrics.rmse, metrics.ssim
            )
            .expect("in-memory write");
            report.push(metrics);
        }
    }
    let agg = report.aggregate();
    writeln!(out, "ALL\t-\t{}\t{}\t{}", agg.l1, agg.rmse, agg.ssim).expect("in-memory write");
    fs::write(&art.eval, out).map_err(|e| Error::Io {
        path: art.eval.clone(),
        source: e,
    })?;
    Ok(StageStatus::Ran)
}

pub fn run_pipeline(cfg: &RunConfig, force: bool) -> Result<PipelineOutcome> {
    let stages: [(&'static str, fn(&RunConfig, bool) -> Result<StageStatus>); 8] = [
        ("dataset", stage_dataset),
        ("train-stage1", stage_train1),
        ("profiles", stage_profiles),
        ("basis", stage_basis),
        ("weights", stage_weights),
        ("train-stage2", stage_train2),
        ("isr", stage_isr),
        ("eval", stage_eval),
    ];
    let mut outcome = PipelineOutcome { stages: Vec::new() };
    for (name, f) in stages {
        let status = f(cfg, force).map_err(|e| Error::InvalidInput {
            name: "pipeline stage",
            detail: format!("{name}: {e}"),
        })?;
        outcome.stages.push((name, status));
    }
    Ok(outcome)
}

/// Artifacts loaded once per inference stage: the weights table and the
/// content features of every basis font for every character.
pub struct InferenceContext {
    pub basis_ids: Vec<String>,
    pub weight_rows: Vec<(String, Vec<f64>)>,
    pub basis_features: Vec<std::collections::BTreeMap<String, ContentFeature>>,
}

impl InferenceContext {
    pub fn load(
        cfg: &RunConfig,
        manifest: &DatasetManifest,
        params: &ToyModelParams,
    ) -> Result<Self> {
        let art = Artifacts::new(cfg);
        let (basis_ids, weight_rows) = read_weights(&art.weights)?;
        let basis_features = basis_char_features(cfg, manifest, params, &basis_ids)?;
        Ok(InferenceContext {
            basis_ids,
            weight_rows,
            basis_features,
        })
    }

    pub fn weights_of(&self, font_id: &str, tau: f64) -> Result<FusionWeights> {
        let weights = self
            .weight_rows
            .iter()
            .find(|(id, _)| id == font_id)
            .map(|(_, w)| w.clone())
            .ok_or_else(|| Error::InvalidInput {
                name: "weights",
                detail: format!("font {font_id} missing from weights table"),
            })?;
        Ok(FusionWeights {
            target_font: font_id.to_string(),
            weights,
            tau,
        })
    }

    /// Fused content feature of one character under a weight vector.
    pub fn fused_feature(&self, fw: &FusionWeights, char_id: &str) -> Result<ContentFeature> {
        let per_char: Vec<ContentFeature> = self
            .basis_features
            .iter()
            .map(|per_font| per_font[char_id].clone())
            .collect();
        fuse_content(fw, &per_char)
    }
}

/// Reference and evaluation material for one target (held-out) font, with
/// fused content features from the persisted weights.
pub struct TargetFontContext {
    pub font_id: String,
    pub reference_glyphs: Vec<GlyphImage>,
    pub reference_contents: Vec<ContentFeature>,
    /// (char_id, fused content, ground truth) for non-reference characters.
    pub eval_set: Vec<(String, ContentFeature, GlyphImage)>,
}

impl TargetFontContext {
    pub fn load(
        cfg: &RunConfig,
        manifest: &DatasetManifest,
        ctx: &InferenceContext,
        font_id: &str,
    ) -> Result<Self> {
        let fw = ctx.weights_of(font_id, cfg.tau)?;
        let mut reference_glyphs = Vec::new();
        let mut reference_contents = Vec::new();
        let mut eval_set = Vec::new();
        for row in manifest.rows_for_font(font_id) {
            let truth = cfkit::pgm::read_pgm_expecting(
                &cfg.data_dir.join(&row.path),
                cfg.height,
                cfg.width,
            )?;
            let fused = ctx.fused_feature(&fw, &row.char_id)?;
            if row.is_reference {
                reference_glyphs.push(truth);
                reference_contents.push(fused);
            } else {
                eval_set.push((row.char_id.clone(), fused, truth));
            }
        }
        Ok(TargetFontContext {
            font_id: font_id.to_string(),
            reference_glyphs,
            reference_contents,
            eval_set,
        })
    }
}

/// Per-basis-font map from char_id to its content feature.
pub fn basis_char_features(
    cfg: &RunConfig,
    manifest: &DatasetManifest,
    params: &ToyModelParams,
    basis_ids: &[String],
) -> Result<Vec<std::collections::BTreeMap<String, ContentFeature>>> {
    basis_ids
        .iter()
        .map(|basis_id| {
            let mut map = std::collections::BTreeMap::new();
            for row in manifest.rows_for_font(basis_id) {
                let img = cfkit::pgm::read_pgm_expecting(
                    &cfg.data_dir.join(&row.path),
                    cfg.height,
                    cfg.width,
                )?;
                let feat = params
                    .encode_content(&img)?
                    .tagged(basis_id.clone(), row.char_id.clone());
                map.insert(row.char_id.clone(), feat);
            }
            if map.is_empty() {
                return Err(Error::InvalidInput {
                    name: "basis",
                    detail: format!("basis font {basis_id} not present in manifest"),
                });
            }
            Ok(map)
        })
        .collect()
}

/// Fused content features for every (train font, character) pair.
pub fn build_fused_table(
    cfg: &RunConfig,
    params: &ToyModelParams,
    data: &TrainingSet,
) -> Result<FusedContentTable> {
    let art = Artifacts::new(cfg);
    let (basis_ids, weight_rows) = read_weights(&art.weights)?;
    let basis_indices: Vec<usize> = basis_ids
        .iter()
        .map(|id| {
            data.fonts
                .iter()
                .position(|f| &f.font_id == id)
                .ok_or_else(|| Error::InvalidInput {
                    name: "basis",
                    detail: format!("basis font {id} is not a training font"),
                })
        })
        .collect::<Result<_>>()?;

    // Encode each basis font's glyph per character once.
    let basis_feats: Vec<Vec<Vec<f64>>> = basis_indices
        .iter()
        .map(|&fi| {
            (0..data.n_chars())
                .map(|ci| Ok(params.encode_content(&data.fonts[fi].glyphs[ci])?.values))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let features = data
        .fonts
        .iter()
        .map(|font| {
            let weights = weight_rows
                .iter()
                .find(|(id, _)| id == &font.font_id)
                .map(|(_, w)| w.clone())
                .ok_or_else(|| Error::InvalidInput {
                    name: "weights",
                    detail: format!("font {} missing from weights table", font.font_id),
                })?;
            let per_char: Vec<Vec<f64>> = (0..data.n_chars())
                .map(|ci| {
                    let mut acc = vec![0.0; cfg.content_dim];
                    for (w, feats) in weights.iter().zip(&basis_feats) {
                        for (a, v) in acc.iter_mut().zip(&feats[ci]) {
                            *a += w * v;
                        }
                    }
                    acc
                })
                .collect();
            Ok(per_char)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FusedContentTable { features })
}

pub fn write_profiles(profiles: &[FontContentProfile], path: &Path) -> Result<()> {
    let mut out = String::from("font_id\tvalues\n");
    for p in profiles {
        out.push_str(&p.font_id);
        for v in &p.values {
            write!(out, "\t{v}").expect("in-memory write");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_profiles(path: &Path) -> Result<Vec<FontContentProfile>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut profiles = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let font_id = cols
            .next()
            .ok_or_else(|| Error::Manifest {
                line: i + 1,
                detail: "empty line".into(),
            })?
            .to_string();
        let values: std::result::Result<Vec<f64>, _> = cols.map(str::parse).collect();
        let values = values.map_err(|e| Error::Manifest {
            line: i + 1,
            detail: format!("bad float: {e}"),
        })?;
        profiles.push(FontContentProfile { font_id, values });
    }
    Ok(profiles)
}

pub fn read_basis_ids(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').nth(1).unwrap_or_default().to_string())
        .collect())
}

/// Returns (basis font ids, per-font weight vectors) from weights.tsv.
pub fn read_weights(path: &Path) -> Result<(Vec<String>, Vec<(String, Vec<f64>)>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Manifest {
        line: 1,
        detail: "empty weights file".into(),
    })?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < 4 || cols[0] != "font_id" {
        return Err(Error::Manifest {
            line: 1,
            detail: "unexpected weights header".into(),
        });
    }
    let basis_ids: Vec<String> = cols[1..cols.len() - 2]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != cols.len() {
            return Err(Error::Manifest {
                line: i + 2,
                detail: "column count mismatch".into(),
            });
        }
        let weights: std::result::Result<Vec<f64>, _> = parts[1..1 + basis_ids.len()]
            .iter()
            .map(|s| s.parse())
            .collect();
        let weights = weights.map_err(|e| Error::Manifest {
            line: i + 2,
            detail: format!("bad float: {e}"),
        })?;
        rows.push((parts[0].to_string(), weights));
    }
    Ok((basis_ids, rows))
}

fn select_profiles(
    profiles: &[FontContentProfile],
    ids: &[String],
) -> Result<Vec<FontContentProfile>> {
    ids.iter()
        .map(|id| {
            profiles
                .iter()
                .find(|p| &p.font_id == id)
                .cloned()
                .ok_or_else(|| Error::InvalidInput {
                    name: "profiles",
                    detail: format!("font {id} missing from profiles table"),
                })
        })
        .collect()
}

/// Computes fusion weights for a font profile against stored basis profiles
/// (used by the `fuse-weights` CLI path for ad-hoc targets).
pub fn weights_for_profile(
    cfg: &RunConfig,
    target: &FontContentProfile,
) -> Result<FusionWeights> {
    let art = Artifacts::new(cfg);
    let profiles = read_profiles(&art.profiles)?;
    let basis_ids = read_basis_ids(&art.basis)?;
    let basis_profiles = select_profiles(&profiles, &basis_ids)?;
    fusion_weights(target, &basis_profiles, cfg.tau)
}

/// Decodes one glyph for an arbitrary content source; shared by the
/// ablation harness.
pub fn decode_glyph(
    params: &ToyModelParams,
    content: &ContentFeature,
    style: &StyleVector,
) -> Result<GlyphImage> {
    params.decode(content, style)
}

/// Aggregate metrics over an evaluation set.
pub fn metric_means(pairs: &[PairMetrics]) -> PairMetrics {
    let mut report = MetricReport::default();
    for p in pairs {
        report.push(*p);
    }
    report.aggregate()
}
