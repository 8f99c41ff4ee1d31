//! Two-stage training of the toy model.
//!
//! Stage 1 trains every parameter group: content images come from one fixed
//! source font, the style image is a reference glyph of the sampled target
//! font, and the target is that font's rendering of the sampled character.
//! Stage 2 freezes the content encoder and replaces content features with
//! precomputed fused features so the decoder adapts to them.
//!
//! The optimizer is momentum SGD with weight decay applied to every array.
//! Batches accumulate in sample order and all sampling flows from the
//! schedule seed, so a run is bit-reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::glyph::GlyphImage;
use crate::model::{ModelDims, ToyModelGrads, ToyModelParams};
use crate::pcl::{PclConfig, PclVariant};
use crate::pgm::read_pgm_expecting;
use crate::projection::ProjectionPlan;

pub const DEFAULT_LEARNING_RATE: f64 = 0.3;
pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct TrainSchedule {
    pub stage1_iters: usize,
    pub stage2_iters: usize,
    pub batch_size: usize,
    pub lambda_pcl: f64,
    pub variant: PclVariant,
    pub epsilon: f64,
    pub n_directions: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl TrainSchedule {
    pub fn new(variant: PclVariant) -> Self {
        TrainSchedule {
            stage1_iters: 3000,
            stage2_iters: 1000,
            batch_size: 8,
            lambda_pcl: variant.default_lambda(),
            variant,
            epsilon: crate::pcl::DEFAULT_KL_EPSILON,
            n_directions: 12,
            learning_rate: DEFAULT_LEARNING_RATE,
            momentum: DEFAULT_MOMENTUM,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            seed: 0,
        }
    }
}

/// One row of the training loss log.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub stage: u8,
    pub l1: f64,
    pub pcl: f64,
    pub total: f64,
}

pub fn write_loss_log(records: &[LossRecord], path: &Path) -> Result<()> {
    let mut out = String::from("iteration\tstage\tl1\tpcl\ttotal\n");
    for r in records {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", r.iteration, r.stage, r.l1, r.pcl, r.total)
            .expect("in-memory write cannot fail");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ToyModelParams,
    pub log: Vec<LossRecord>,
}

/// All glyphs of one font, indexed by character position.
#[derive(Debug, Clone)]
pub struct FontGlyphs {
    pub font_id: String,
    pub glyphs: Vec<GlyphImage>,
}

/// In-memory dataset used by the trainer and downstream stages.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub chars: Vec<String>,
    pub fonts: Vec<FontGlyphs>,
    /// Indices into `chars` of the shared 16-character reference subset.
    pub reference_chars: Vec<usize>,
    /// Index of the fixed source font (raw-pixel medoid of all fonts).
    pub source_font: usize,
}

impl TrainingSet {
    /// Loads fonts from a dataset directory; `font_filter` (when given)
    /// restricts and orders the fonts to load.
    pub fn load(
        manifest: &DatasetManifest,
        root: &Path,
        height: usize,
        width: usize,
        font_filter: Option<&[String]>,
    ) -> Result<Self> {
        let chars: Vec<String> = manifest.char_ids().iter().map(|s| s.to_string()).collect();
        let all_fonts = manifest.font_ids();
        let selected: Vec<String> = match font_filter {
            Some(list) => list.to_vec(),
            None => all_fonts.iter().map(|s| s.to_string()).collect(),
        };

        let mut reference_chars = Vec::new();
        let mut fonts = Vec::with_capacity(selected.len());
        for font_id in &selected {
            let rows: Vec<_> = manifest.rows_for_font(font_id).collect();
            if rows.is_empty() {
                return Err(Error::invalid(
                    "font_filter",
                    format!("font {font_id} not present in manifest"),
                ));
            }
            let mut glyphs = Vec::with_capacity(chars.len());
            for ch in &chars {
                let row = rows
                    .iter()
                    .find(|r| &r.char_id == ch)
                    .ok_or_else(|| Error::invalid(
                        "manifest",
                        format!("font {font_id} is missing character {ch}"),
                    ))?;
                glyphs.push(read_pgm_expecting(&root.join(&row.path), height, width)?);
            }
            if reference_chars.is_empty() {
                reference_chars = rows
                    .iter()
                    .filter(|r| r.is_reference)
                    .map(|r| chars.iter().position(|c| c == &r.char_id).unwrap())
                    .collect();
            }
            fonts.push(FontGlyphs {
                font_id: font_id.clone(),
                glyphs,
            });
        }
        if fonts.len() < 2 {
            return Err(Error::invalid("dataset", "need at least 2 fonts"));
        }
        let mut set = TrainingSet {
            chars,
            fonts,
            reference_chars,
            source_font: 0,
        };
        set.source_font = set.pixel_medoid_font();
        Ok(set)
    }

    /// Builds a set directly from rendered glyphs (used by tests and
    /// benchmarks); reference characters default to the first 16.
    pub fn from_fonts(chars: Vec<String>, fonts: Vec<FontGlyphs>) -> Result<Self> {
        if fonts.len() < 2 {
            return Err(Error::invalid("dataset", "need at least 2 fonts"));
        }
        let n_ref = chars.len().min(crate::dataset::REFERENCE_CHARS_PER_FONT);
        let mut set = TrainingSet {
            reference_chars: (0..n_ref).collect(),
            chars,
            fonts,
            source_font: 0,
        };
        set.source_font = set.pixel_medoid_font();
        Ok(set)
    }

    /// Index of the font minimizing total raw-pixel L1 distance (over the
    /// concatenated reference glyphs) to all other fonts; ties go to the
    /// lowest index. This is the stand-in for picking a standard source font.
    pub fn pixel_medoid_font(&self) -> usize {
        let profiles: Vec<Vec<f64>> = self
            .fonts
            .iter()
            .map(|f| {
                self.reference_chars
                    .iter()
                    .flat_map(|&ci| f.glyphs[ci].pixels().iter().copied())
                    .collect()
            })
            .collect();
        let mut best = (0usize, f64::INFINITY);
        for (i, pi) in profiles.iter().enumerate() {
            let total: f64 = profiles
                .iter()
                .map(|pj| pi.iter().zip(pj).map(|(a, b)| (a - b).abs()).sum::<f64>())
                .sum();
            if total < best.1 {
                best = (i, total);
            }
        }
        best.0
    }

    pub fn n_chars(&self) -> usize {
        self.chars.len()
    }
}

/// Fused content features for every (font, character) pair, aligned with a
/// `TrainingSet`'s indices.
#[derive(Debug, Clone)]
pub struct FusedContentTable {
    pub features: Vec<Vec<Vec<f64>>>,
}

impl FusedContentTable {
    pub fn feature(&self, font: usize, ch: usize) -> &[f64] {
        &self.features[font][ch]
    }
}

struct MomentumSgd {
    velocity: ToyModelGrads,
    learning_rate: f64,
    momentum: f64,
    weight_decay: f64,
}

impl MomentumSgd {
    fn new(dims: &ModelDims, sched: &TrainSchedule) -> Self {
        MomentumSgd {
            velocity: ToyModelGrads::zeros(dims),
            learning_rate: sched.learning_rate,
            momentum: sched.momentum,
            weight_decay: sched.weight_decay,
        }
    }

    /// v = momentum v - lr (g + wd p); p += v. `frozen` masks arrays by
    /// serialization index.
    fn step(&mut self, params: &mut ToyModelParams, grads: &ToyModelGrads, frozen: &[usize]) {
        let g_arrays = grads.arrays();
        let v_arrays = self.velocity.arrays_mut();
        for (idx, (p_arr, (g_arr, v_arr))) in params
            .arrays_mut()
            .into_iter()
            .zip(g_arrays.into_iter().zip(v_arrays))
            .enumerate()
        {
            if frozen.contains(&idx) {
                continue;
            }
            for ((p, &g), v) in p_arr.iter_mut().zip(g_arr).zip(v_arr.iter_mut()) {
                *v = self.momentum * *v - self.learning_rate * (g + self.weight_decay * *p);
                *p += *v;
            }
        }
    }
}

/// Serialization indices of the content encoder arrays (frozen in stage 2).
const CONTENT_ENCODER_ARRAYS: [usize; 2] = [0, 1];

pub fn train_stage1(
    dims: ModelDims,
    data: &TrainingSet,
    sched: &TrainSchedule,
) -> Result<TrainOutcome> {
    let params = ToyModelParams::init(dims, sched.seed);
    run_stage(params, data, None, sched, 1)
}

pub fn train_stage2(
    params: ToyModelParams,
    data: &TrainingSet,
    fused: &FusedContentTable,
    sched: &TrainSchedule,
) -> Result<TrainOutcome> {
    run_stage(params, data, Some(fused), sched, 2)
}

fn run_stage(
    mut params: ToyModelParams,
    data: &TrainingSet,
    fused: Option<&FusedContentTable>,
    sched: &TrainSchedule,
    stage: u8,
) -> Result<TrainOutcome> {
    if sched.batch_size == 0 {
        return Err(Error::invalid("batch_size", "must be >= 1"));
    }
    if data.reference_chars.is_empty() {
        return Err(Error::invalid("dataset", "no reference characters"));
    }
    let iters = if stage == 1 {
        sched.stage1_iters
    } else {
        sched.stage2_iters
    };
    let dims = params.dims;
    let plan = ProjectionPlan::new(dims.height, dims.width, sched.n_directions)?;
    let cfg = PclConfig::new(sched.variant, &plan).with_epsilon(sched.epsilon)?;

    let mut rng = ChaCha8Rng::seed_from_u64(sched.seed.wrapping_add(u64::from(stage)));
    let mut optimizer = MomentumSgd::new(&dims, sched);
    let frozen: &[usize] = if stage == 2 { &CONTENT_ENCODER_ARRAYS } else { &[] };
    let mut log = Vec::with_capacity(iters);

    for iteration in 0..iters {
        let mut grads = ToyModelGrads::zeros(&dims);
        let (mut sum_l1, mut sum_pcl, mut sum_total) = (0.0, 0.0, 0.0);

        for _ in 0..sched.batch_size {
            let font = rng.gen_range(0..data.fonts.len());
            let ch = rng.gen_range(0..data.n_chars());
            let style_ch = data.reference_chars[rng.gen_range(0..data.reference_chars.len())];

            let style_img = &data.fonts[font].glyphs[style_ch];
            let target = &data.fonts[font].glyphs[ch];

            // Math errors mid-training (saturated or non-finite activations)
            // mean the optimizer blew up; surface them as divergence with the
            // iteration index. Inputs were validated before the loop.
            let sample = (|| -> Result<_> {
                let content_values = match fused {
                    None => {
                        params.encode_content_values(&data.fonts[data.source_font].glyphs[ch])?
                    }
                    Some(table) => table.feature(font, ch).to_vec(),
                };
                let s = params.encode_style(style_img)?;
                let trace = params.decode_with_trace(
                    &crate::model::ContentFeature::new(content_values.clone()),
                    &s,
                )?;
                let loss = crate::pcl::reconstruction_loss_parts(
                    &trace.output,
                    target,
                    sched.lambda_pcl,
                    &cfg,
                    true,
                )?;
                Ok((content_values, s, trace, loss))
            })();
            let (content_values, s, trace, loss) = match sample {
                Ok(v) => v,
                Err(Error::ZeroMass) | Err(Error::InvalidInput { .. }) => {
                    return Err(Error::TrainingDiverged { iteration });
                }
                Err(e) => return Err(e),
            };
            if !loss.total.is_finite() {
                return Err(Error::TrainingDiverged { iteration });
            }
            sum_l1 += loss.l1;
            sum_pcl += loss.pcl;
            sum_total += loss.total;

            let d_out = loss.gradient.expect("gradient requested");
            let (dc, ds) =
                params.decode_backward(&content_values, &s.values, &trace, &d_out, Some(&mut grads));
            params.style_encoder_backward(style_img, &s.values, &ds, &mut grads);
            if fused.is_none() {
                params.content_encoder_backward(
                    &data.fonts[data.source_font].glyphs[ch],
                    &content_values,
                    &dc,
                    &mut grads,
                );
            }
        }

        let inv = 1.0 / sched.batch_size as f64;
        grads.scale(inv);
        optimizer.step(&mut params, &grads, frozen);

        log.push(LossRecord {
            iteration,
            stage,
            l1: sum_l1 * inv,
            pcl: sum_pcl * inv,
            total: sum_total * inv,
        });
    }

    Ok(TrainOutcome { params, log })
}
