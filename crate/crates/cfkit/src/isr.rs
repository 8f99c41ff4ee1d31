//! Inference-time style-vector refinement.
//!
//! With all model weights frozen, the font-level style vector is initialized
//! as the mean style encoding of the reference glyphs and then improved by
//! plain gradient descent on the reconstruction loss over those glyphs.
//! A step that increases the loss is retried once at half the step size, and
//! the best vector seen (including the initial one) is returned, so the
//! final loss can never exceed the initial loss.
//!
//! Style signature file format (little-endian): magic `CFSV`, the style
//! dimension as u32, then the values as f64.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::glyph::GlyphImage;
use crate::model::{ByteReader, ContentFeature, StyleVector, ToyModelParams};
use crate::pcl::{reconstruction_loss, PclConfig, PclVariant};
use crate::projection::ProjectionPlan;

pub const STYLE_MAGIC: [u8; 4] = *b"CFSV";
pub const DEFAULT_EPOCHS: usize = 10;
pub const DEFAULT_STEP: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct IsrConfig {
    pub epochs: usize,
    pub step: f64,
    pub lambda_pcl: f64,
    pub variant: PclVariant,
    pub epsilon: f64,
}

impl IsrConfig {
    pub fn new(variant: PclVariant) -> Self {
        IsrConfig {
            epochs: DEFAULT_EPOCHS,
            step: DEFAULT_STEP,
            lambda_pcl: variant.default_lambda(),
            variant,
            epsilon: crate::pcl::DEFAULT_KL_EPSILON,
        }
    }
}

/// Outcome of one refinement: the initial and refined vectors plus the
/// per-epoch loss trace (entry 0 is the initial loss).
#[derive(Debug, Clone)]
pub struct RefinementRun {
    pub initial: StyleVector,
    pub refined: StyleVector,
    pub trace: Vec<f64>,
    pub config: IsrConfig,
}

impl RefinementRun {
    pub fn initial_loss(&self) -> f64 {
        self.trace[0]
    }

    pub fn final_loss(&self) -> f64 {
        self.trace
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Mean style encoding of the reference glyphs.
pub fn init_style(params: &ToyModelParams, reference: &[GlyphImage]) -> Result<StyleVector> {
    if reference.is_empty() {
        return Err(Error::invalid("reference glyphs", "empty set"));
    }
    let mut acc = vec![0.0; params.dims.style_dim];
    for img in reference {
        let s = params.encode_style(img)?;
        for (a, v) in acc.iter_mut().zip(&s.values) {
            *a += v;
        }
    }
    let q = reference.len() as f64;
    for a in acc.iter_mut() {
        *a /= q;
    }
    Ok(StyleVector::new(acc))
}

/// Refines the style vector against the reference glyphs; `contents[q]` is
/// the content feature used to reconstruct `reference[q]`.
pub fn refine(
    params: &ToyModelParams,
    initial: &StyleVector,
    reference: &[GlyphImage],
    contents: &[ContentFeature],
    plan: &ProjectionPlan,
    cfg: &IsrConfig,
) -> Result<RefinementRun> {
    if reference.is_empty() {
        return Err(Error::invalid("reference glyphs", "empty set"));
    }
    if reference.len() != contents.len() {
        return Err(Error::DimMismatch {
            what: "content features",
            expected: reference.len(),
            found: contents.len(),
        });
    }
    if initial.dim() != params.dims.style_dim {
        return Err(Error::DimMismatch {
            what: "style vector",
            expected: params.dims.style_dim,
            found: initial.dim(),
        });
    }
    if cfg.step < 0.0 {
        return Err(Error::invalid("step", "must be >= 0"));
    }
    let pcl_cfg = PclConfig::new(cfg.variant, plan).with_epsilon(cfg.epsilon)?;

    // Full-batch loss and gradient over the reference characters.
    let eval = |s: &StyleVector, want_grad: bool| -> Result<(f64, Vec<f64>)> {
        let q = reference.len() as f64;
        let mut total = 0.0;
        let mut grad = vec![0.0; s.dim()];
        for (img, content) in reference.iter().zip(contents) {
            let trace = params.decode_with_trace(content, s)?;
            let loss =
                reconstruction_loss(&trace.output, img, cfg.lambda_pcl, &pcl_cfg, want_grad)?;
            if !loss.value.is_finite() {
                return Err(Error::TrainingDiverged { iteration: 0 });
            }
            total += loss.value / q;
            if want_grad {
                let d_out = loss.gradient.expect("gradient requested");
                let (_, ds) =
                    params.decode_backward(&content.values, &s.values, &trace, &d_out, None);
                for (g, d) in grad.iter_mut().zip(ds) {
                    *g += d / q;
                }
            }
        }
        Ok((total, grad))
    };

    let mut current = initial.clone();
    let (mut current_loss, _) = eval(&current, false)?;
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    trace.push(current_loss);

    let mut best = current.clone();
    let mut best_loss = current_loss;
    let mut step = cfg.step;

    for _ in 0..cfg.epochs {
        let (_, grad) = eval(&current, true)?;
        let take = |step: f64, from: &StyleVector| -> StyleVector {
            StyleVector::new(
                from.values
                    .iter()
                    .zip(&grad)
                    .map(|(v, g)| v - step * g)
                    .collect(),
            )
        };
        let mut candidate = take(step, &current);
        let (mut cand_loss, _) = eval(&candidate, false)?;
        if cand_loss > current_loss {
            step /= 2.0;
            candidate = take(step, &current);
            cand_loss = eval(&candidate, false)?.0;
        }
        current = candidate;
        current_loss = cand_loss;
        trace.push(current_loss);
        if current_loss < best_loss {
            best_loss = current_loss;
            best = current.clone();
        }
    }

    Ok(RefinementRun {
        initial: initial.clone(),
        refined: best,
        trace,
        config: cfg.clone(),
    })
}

pub fn save_style(style: &StyleVector, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 8 * style.dim());
    buf.extend_from_slice(&STYLE_MAGIC);
    buf.extend_from_slice(&(style.dim() as u32).to_le_bytes());
    for v in &style.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_style(path: &Path) -> Result<StyleVector> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(&bytes, path);
    let magic = r.take4()?;
    if magic != STYLE_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: STYLE_MAGIC,
            found: magic,
        });
    }
    let dim = r.u32()? as usize;
    let mut values = Vec::with_capacity(dim);
    for _ in 0..dim {
        values.push(r.f64()?);
    }
    r.expect_end()?;
    Ok(StyleVector::new(values))
}

/// Loads a style signature and checks it against a model's style dimension.
pub fn load_style_for(path: &Path, style_dim: usize) -> Result<StyleVector> {
    let s = load_style(path)?;
    if s.dim() != style_dim {
        return Err(Error::DimMismatch {
            what: "style vector",
            expected: style_dim,
            found: s.dim(),
        });
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;

    fn small_params(seed: u64) -> ToyModelParams {
        ToyModelParams::init(ModelDims::new(10, 10, 6, 4).unwrap(), seed)
    }

    fn ramp(h: usize, w: usize, k: usize) -> GlyphImage {
        GlyphImage::from_fn(h, w, |r, c| ((r + k * c) % 9) as f64 / 10.0 + 0.05).unwrap()
    }

    #[test]
    fn init_style_with_one_glyph_is_its_encoding() {
        let params = small_params(1);
        let img = ramp(10, 10, 2);
        let s = init_style(&params, std::slice::from_ref(&img)).unwrap();
        assert_eq!(s, params.encode_style(&img).unwrap());
    }

    #[test]
    fn identical_glyphs_average_to_the_single_encoding() {
        let params = small_params(2);
        let img = ramp(10, 10, 3);
        let many = vec![img.clone(); 5];
        let s = init_style(&params, &many).unwrap();
        let single = params.encode_style(&img).unwrap();
        for (a, b) in s.values.iter().zip(&single.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_distinct_glyphs_average_elementwise() {
        let params = small_params(3);
        let a = ramp(10, 10, 1);
        let b = ramp(10, 10, 4);
        let s = init_style(&params, &[a.clone(), b.clone()]).unwrap();
        let sa = params.encode_style(&a).unwrap();
        let sb = params.encode_style(&b).unwrap();
        for i in 0..4 {
            assert!((s.values[i] - 0.5 * (sa.values[i] + sb.values[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_step_returns_the_initial_vector_exactly() {
        let params = small_params(4);
        let refs = vec![ramp(10, 10, 1), ramp(10, 10, 2)];
        let contents: Vec<ContentFeature> = refs
            .iter()
            .map(|img| params.encode_content(img).unwrap())
            .collect();
        let s0 = init_style(&params, &refs).unwrap();
        let plan = ProjectionPlan::new(10, 10, 4).unwrap();
        let cfg = IsrConfig {
            step: 0.0,
            ..IsrConfig::new(PclVariant::Wdl)
        };
        let run = refine(&params, &s0, &refs, &contents, &plan, &cfg).unwrap();
        assert_eq!(run.refined, s0);
        assert_eq!(run.trace.len(), cfg.epochs + 1);
    }

    #[test]
    fn refinement_never_ends_above_the_initial_loss() {
        let params = small_params(5);
        let refs = vec![ramp(10, 10, 2), ramp(10, 10, 5), ramp(10, 10, 7)];
        let contents: Vec<ContentFeature> = refs
            .iter()
            .map(|img| params.encode_content(img).unwrap())
            .collect();
        let s0 = init_style(&params, &refs).unwrap();
        let plan = ProjectionPlan::new(10, 10, 4).unwrap();
        let cfg = IsrConfig::new(PclVariant::Wdl);
        let run = refine(&params, &s0, &refs, &contents, &plan, &cfg).unwrap();
        assert!(run.final_loss() <= run.initial_loss());
        // Best-so-far is the trace minimum.
        let min = run.trace.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(run.final_loss(), min);
    }

    #[test]
    fn style_file_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cfsv");
        let s = StyleVector::new(vec![0.25, -1.5, 3.125, f64::MIN_POSITIVE]);
        save_style(&s, &path).unwrap();
        assert_eq!(load_style(&path).unwrap(), s);
    }

    #[test]
    fn style_dimension_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s8.cfsv");
        save_style(&StyleVector::new(vec![0.0; 8]), &path).unwrap();
        assert!(matches!(
            load_style_for(&path, 16).unwrap_err(),
            Error::DimMismatch { .. }
        ));
        assert!(load_style_for(&path, 8).is_ok());
    }

    #[test]
    fn corrupt_magic_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cfsv");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"XXSV");
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 32]);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_style(&path).unwrap_err(),
            Error::BadMagic { .. }
        ));
    }
}
