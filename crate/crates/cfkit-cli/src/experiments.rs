//! Analysis experiments: nearest-glyph retrieval (single queries and the
//! seeded same-skeleton benchmark) and the three-way content-source
//! ablation.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfkit::error::{Error, Result};
use cfkit::fusion::FusionWeights;
use cfkit::glyph::GlyphImage;
use cfkit::isr::load_style_for;
use cfkit::metrics::{compare, MetricReport, PairMetrics};
use cfkit::model::ToyModelParams;
use cfkit::pcl::{pcl_kl, pcl_wdl, PclConfig, PclVariant};
use cfkit::projection::ProjectionPlan;
use cfkit::raster::{builtin_skeletons, render_glyph, SyntheticFontSpec};
use cfkit::train::TrainingSet;

use crate::config::RunConfig;
use crate::pipeline::{font_split, load_manifest, Artifacts, InferenceContext};

/// Glyph distance used for retrieval ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalMetric {
    L1,
    PcWdl,
    PcKl,
}

impl RetrievalMetric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(RetrievalMetric::L1),
            "pc-wdl" | "wdl" => Ok(RetrievalMetric::PcWdl),
            "pc-kl" | "kl" => Ok(RetrievalMetric::PcKl),
            other => Err(Error::InvalidInput {
                name: "metric",
                detail: format!("expected l1, pc-wdl, or pc-kl, found {other:?}"),
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RetrievalMetric::L1 => "l1",
            RetrievalMetric::PcWdl => "pc-wdl",
            RetrievalMetric::PcKl => "pc-kl",
        }
    }

    pub fn distance(
        self,
        query: &GlyphImage,
        candidate: &GlyphImage,
        plan: &ProjectionPlan,
    ) -> Result<f64> {
        match self {
            RetrievalMetric::L1 => cfkit::metrics::l1(query, candidate),
            RetrievalMetric::PcWdl => {
                let cfg = PclConfig::new(PclVariant::Wdl, plan);
                Ok(pcl_wdl(candidate, query, &cfg, false)?.value)
            }
            RetrievalMetric::PcKl => {
                let cfg = PclConfig::new(PclVariant::Kl, plan);
                Ok(pcl_kl(candidate, query, &cfg, false)?.value)
            }
        }
    }
}

/// Ranks candidates by ascending distance to the query; stable on ties.
/// `k` beyond the candidate count returns the full ranking.
pub fn rank_candidates(
    query: &GlyphImage,
    candidates: &[(String, GlyphImage)],
    metric: RetrievalMetric,
    k: usize,
    plan: &ProjectionPlan,
) -> Result<Vec<(String, f64)>> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput {
            name: "candidates",
            detail: "empty candidate set".into(),
        });
    }
    let mut scored: Vec<(String, f64)> = candidates
        .iter()
        .map(|(id, img)| Ok((id.clone(), metric.distance(query, img, plan)?)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"));
    scored.truncate(k.min(candidates.len()));
    Ok(scored)
}

/// Outcome of the seeded same-skeleton retrieval benchmark.
#[derive(Debug, Clone)]
pub struct RetrievalBenchmark {
    pub trials: usize,
    /// Trials where the top-1 candidate shares the query's skeleton.
    pub hits: BTreeMap<&'static str, usize>,
}

impl RetrievalBenchmark {
    pub fn hit_rate(&self, metric: RetrievalMetric) -> f64 {
        self.hits[metric.name()] as f64 / self.trials as f64
    }
}

/// Each trial renders a query glyph, three same-skeleton variants under
/// different geometry (slant/scale), and six different-skeleton distractors
/// under the query's own geometry. Thin strokes keep the variants nearly
/// disjoint from the query, which starves per-pixel L1 of signal while the
/// projection losses track the shared skeleton.
pub fn retrieval_benchmark(
    trials: usize,
    seed: u64,
    size: usize,
    projections: usize,
) -> Result<RetrievalBenchmark> {
    let skeletons = builtin_skeletons();
    let plan = ProjectionPlan::new(size, size, projections)?;
    let metrics = [
        RetrievalMetric::L1,
        RetrievalMetric::PcWdl,
        RetrievalMetric::PcKl,
    ];
    let mut hits: BTreeMap<&'static str, usize> = metrics.iter().map(|m| (m.name(), 0)).collect();

    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let query_skel = rng.gen_range(0..skeletons.len());
        let thickness = rng.gen_range(1.0..1.6);
        let query_spec = SyntheticFontSpec::new(
            "query",
            thickness,
            rng.gen_range(-0.05..0.05),
            0.82,
            rng.gen::<u64>(),
        )?;
        let query = render_glyph(&query_spec, &skeletons[query_skel], size, size);

        let mut candidates: Vec<(String, GlyphImage)> = Vec::new();
        // Same-skeleton variants, geometrically displaced.
        for v in 0..3 {
            let slant: f64 = rng.gen_range(0.22..0.38) * if v % 2 == 0 { 1.0 } else { -1.0 };
            let scale = [0.66, 0.95, 0.74][v];
            let spec = SyntheticFontSpec::new(
                format!("same{v}"),
                thickness,
                slant,
                scale,
                rng.gen::<u64>(),
            )?;
            candidates.push((
                format!("same{v}"),
                render_glyph(&spec, &skeletons[query_skel], size, size),
            ));
        }
        // Distractors: other skeletons under the query's geometry.
        let mut picked = Vec::new();
        while picked.len() < 6 {
            let s = rng.gen_range(0..skeletons.len());
            if s != query_skel && !picked.contains(&s) {
                picked.push(s);
            }
        }
        for (d, &s) in picked.iter().enumerate() {
            let spec = SyntheticFontSpec::new(
                format!("diff{d}"),
                thickness,
                query_spec.slant,
                query_spec.scale,
                rng.gen::<u64>(),
            )?;
            candidates.push((format!("diff{d}"), render_glyph(&spec, &skeletons[s], size, size)));
        }

        for metric in metrics {
            let ranked = rank_candidates(&query, &candidates, metric, 1, &plan)?;
            if ranked[0].0.starts_with("same") {
                *hits.get_mut(metric.name()).expect("seeded") += 1;
            }
        }
    }
    Ok(RetrievalBenchmark { trials, hits })
}

/// Content sources compared by the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentSource {
    /// The fixed source font used in stage-1 training.
    SourceFont,
    /// One-hot retrieval of the nearest basis font.
    NearestBasis,
    /// Full convex fusion over the basis fonts.
    Fusion,
}

impl ContentSource {
    pub fn name(self) -> &'static str {
        match self {
            ContentSource::SourceFont => "source",
            ContentSource::NearestBasis => "retrieval",
            ContentSource::Fusion => "fusion",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub font_id: String,
    pub condition: &'static str,
    pub metrics: PairMetrics,
}

#[derive(Debug, Clone)]
pub struct AblationReport {
    pub per_font: Vec<AblationRow>,
    pub aggregates: Vec<(&'static str, PairMetrics)>,
}

impl AblationReport {
    pub fn aggregate(&self, condition: ContentSource) -> PairMetrics {
        self.aggregates
            .iter()
            .find(|(name, _)| *name == condition.name())
            .map(|(_, m)| *m)
            .expect("all three conditions present")
    }
}

/// Evaluates the held-out fonts under the three content sources, sharing the
/// stage-2 model and each font's refined style vector, so only the content
/// path differs between conditions.
pub fn run_ablation(cfg: &RunConfig) -> Result<AblationReport> {
    let art = Artifacts::new(cfg);
    for (path, stage) in [
        (&art.model_stage2, "train-stage2"),
        (&art.weights, "weights"),
        (&art.isr_trace, "isr"),
    ] {
        if !path.exists() {
            return Err(Error::InvalidInput {
                name: "ablation",
                detail: format!(
                    "missing artifact {} (run the {stage} pipeline stage first)",
                    path.display()
                ),
            });
        }
    }
    let manifest = load_manifest(cfg)?;
    let (train, holdout) = font_split(&manifest, cfg);
    let params = ToyModelParams::load(&art.model_stage2)?;
    let ctx = InferenceContext::load(cfg, &manifest, &params)?;

    // The stage-1 source font is the raw-pixel medoid of the training fonts.
    let train_set = TrainingSet::load(&manifest, &cfg.data_dir, cfg.height, cfg.width, Some(&train))?;
    let source_font = train_set.fonts[train_set.source_font].font_id.clone();
    let source_features: BTreeMap<String, cfkit::model::ContentFeature> = manifest
        .rows_for_font(&source_font)
        .map(|row| {
            let img = cfkit::pgm::read_pgm_expecting(
                &cfg.data_dir.join(&row.path),
                cfg.height,
                cfg.width,
            )?;
            Ok((row.char_id.clone(), params.encode_content(&img)?))
        })
        .collect::<Result<_>>()?;

    let conditions = [
        ContentSource::SourceFont,
        ContentSource::NearestBasis,
        ContentSource::Fusion,
    ];
    let mut per_font = Vec::new();
    let mut totals: BTreeMap<&'static str, MetricReport> = conditions
        .iter()
        .map(|c| (c.name(), MetricReport::default()))
        .collect();

    for font_id in &holdout {
        let style = load_style_for(&art.styles_dir.join(format!("{font_id}.cfsv")), cfg.style_dim)?;
        let fw = ctx.weights_of(font_id, cfg.tau)?;
        let one_hot = FusionWeights::one_hot(font_id.clone(), fw.weights.len(), fw.argmax());

        for condition in conditions {
            let mut report = MetricReport::default();
            for row in manifest.rows_for_font(font_id) {
                if row.is_reference {
                    continue;
                }
                let truth = cfkit::pgm::read_pgm_expecting(
                    &cfg.data_dir.join(&row.path),
                    cfg.height,
                    cfg.width,
                )?;
                let content = match condition {
                    ContentSource::SourceFont => source_features
                        .get(&row.char_id)
                        .cloned()
                        .ok_or_else(|| Error::InvalidInput {
                            name: "source font",
                            detail: format!("missing character {}", row.char_id),
                        })?,
                    ContentSource::NearestBasis => ctx.fused_feature(&one_hot, &row.char_id)?,
                    ContentSource::Fusion => ctx.fused_feature(&fw, &row.char_id)?,
                };
                let generated = params.decode(&content, &style)?;
                report.push(compare(&generated, &truth)?);
            }
            let agg = report.aggregate();
            per_font.push(AblationRow {
                font_id: font_id.clone(),
                condition: condition.name(),
                metrics: agg,
            });
            for m in report.pairs {
                totals.get_mut(condition.name()).expect("present").push(m);
            }
        }
    }

    let aggregates = conditions
        .iter()
        .map(|c| (c.name(), totals[c.name()].aggregate()))
        .collect();
    Ok(AblationReport {
        per_font,
        aggregates,
    })
}
