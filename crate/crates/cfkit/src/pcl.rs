//! Projected character losses.
//!
//! Both variants compare per-direction projection histograms of a generated
//! image against a ground-truth image and average over directions:
//!
//! * `pcl_wdl` — L1 distance between the cumulative distributions of the
//!   normalized histograms. With unit-width bins this is the exact 1D
//!   Wasserstein-1 distance, reported in pixel units.
//! * `pcl_kl` — KL divergence of the epsilon-smoothed normalized histograms,
//!   generated distribution first.
//!
//! Because bin assignment is fixed by the projection plan, both losses are
//! piecewise-smooth in pixel intensities and the gradients below are exact:
//! per-bin gradient -> normalization Jacobian -> scatter through the index
//! map. Gradients flow only into the generated image.

use crate::error::{Error, Result};
use crate::glyph::GlyphImage;
use crate::projection::{project, ProjectionPlan};

pub const DEFAULT_KL_EPSILON: f64 = 1e-8;
pub const DEFAULT_LAMBDA_WDL: f64 = 0.01;
pub const DEFAULT_LAMBDA_KL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PclVariant {
    Wdl,
    Kl,
}

impl PclVariant {
    /// Reconstruction-loss weight for this variant.
    pub fn default_lambda(self) -> f64 {
        match self {
            PclVariant::Wdl => DEFAULT_LAMBDA_WDL,
            PclVariant::Kl => DEFAULT_LAMBDA_KL,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wdl" | "pc-wdl" => Ok(PclVariant::Wdl),
            "kl" | "pc-kl" => Ok(PclVariant::Kl),
            other => Err(Error::invalid(
                "variant",
                format!("expected wdl or kl, found {other:?}"),
            )),
        }
    }
}

impl std::fmt::Display for PclVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PclVariant::Wdl => write!(f, "wdl"),
            PclVariant::Kl => write!(f, "kl"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PclConfig<'a> {
    pub variant: PclVariant,
    pub epsilon: f64,
    pub plan: &'a ProjectionPlan,
}

impl<'a> PclConfig<'a> {
    pub fn new(variant: PclVariant, plan: &'a ProjectionPlan) -> Self {
        PclConfig {
            variant,
            epsilon: DEFAULT_KL_EPSILON,
            plan,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::invalid("epsilon", "must be > 0"));
        }
        self.epsilon = epsilon;
        Ok(self)
    }
}

/// A scalar loss with an optional gradient w.r.t. the generated image.
#[derive(Debug, Clone)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
}

impl LossValue {
    fn plain(value: f64) -> Self {
        LossValue {
            value,
            gradient: None,
        }
    }
}

/// Dispatches on the configured variant.
pub fn pcl(
    gen: &GlyphImage,
    gt: &GlyphImage,
    cfg: &PclConfig<'_>,
    want_gradient: bool,
) -> Result<LossValue> {
    match cfg.variant {
        PclVariant::Wdl => pcl_wdl(gen, gt, cfg, want_gradient),
        PclVariant::Kl => pcl_kl(gen, gt, cfg, want_gradient),
    }
}

pub fn pcl_wdl(
    gen: &GlyphImage,
    gt: &GlyphImage,
    cfg: &PclConfig<'_>,
    want_gradient: bool,
) -> Result<LossValue> {
    gen.ensure_same_shape(gt)?;
    let plan = cfg.plan;
    let proj_gen = project(gen, plan)?;
    let proj_gt = project(gt, plan)?;
    let n_dir = plan.n_directions() as f64;
    let n_bins = plan.n_bins();

    let mut value = 0.0;
    let mut grad = want_gradient.then(|| vec![0.0; gen.pixels().len()]);

    for p in 0..plan.n_directions() {
        let q_gen = &proj_gen.norm[p];
        let q_gt = &proj_gt.norm[p];

        // Signed CDF difference per bin.
        let mut cdf_diff = Vec::with_capacity(n_bins);
        let (mut acc_gen, mut acc_gt) = (0.0, 0.0);
        for k in 0..n_bins {
            acc_gen += q_gen[k];
            acc_gt += q_gt[k];
            cdf_diff.push(acc_gen - acc_gt);
        }
        value += cdf_diff.iter().map(|d| d.abs()).sum::<f64>() / n_dir;

        if let Some(grad) = grad.as_mut() {
            // d|CDF|/d q_gen[j] = sum over k >= j of sign(cdf_diff[k]);
            // the subgradient of |.| at 0 is taken as 0.
            let mut dq = vec![0.0; n_bins];
            let mut suffix = 0.0;
            for k in (0..n_bins).rev() {
                suffix += sign(cdf_diff[k]);
                dq[k] = suffix / n_dir;
            }
            scatter_normalization_gradient(&proj_gen.hist[p], &dq, plan, p, grad);
        }
    }
    Ok(LossValue {
        value,
        gradient: grad,
    })
}

pub fn pcl_kl(
    gen: &GlyphImage,
    gt: &GlyphImage,
    cfg: &PclConfig<'_>,
    want_gradient: bool,
) -> Result<LossValue> {
    gen.ensure_same_shape(gt)?;
    if cfg.epsilon <= 0.0 {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    let plan = cfg.plan;
    let proj_gen = project(gen, plan)?;
    let proj_gt = project(gt, plan)?;
    let n_dir = plan.n_directions() as f64;
    let n_bins = plan.n_bins();
    let eps = cfg.epsilon;

    let mut value = 0.0;
    let mut grad = want_gradient.then(|| vec![0.0; gen.pixels().len()]);

    for p in 0..plan.n_directions() {
        let h_gen = &proj_gen.hist[p];
        let h_gt = &proj_gt.hist[p];
        let total_gen: f64 = h_gen.iter().sum::<f64>() + n_bins as f64 * eps;
        let total_gt: f64 = h_gt.iter().sum::<f64>() + n_bins as f64 * eps;

        let q_gen: Vec<f64> = h_gen.iter().map(|&h| (h + eps) / total_gen).collect();
        let q_gt: Vec<f64> = h_gt.iter().map(|&h| (h + eps) / total_gt).collect();

        let mut kl = 0.0;
        for k in 0..n_bins {
            kl += q_gen[k] * (q_gen[k] / q_gt[k]).ln();
        }
        value += kl / n_dir;

        if let Some(grad) = grad.as_mut() {
            // d KL / d q_gen[k] = ln(q_gen/q_gt) + 1, then the smoothed
            // normalization Jacobian dq_j/dh_m = (delta_jm - q_j) / total.
            let g: Vec<f64> = (0..n_bins)
                .map(|k| ((q_gen[k] / q_gt[k]).ln() + 1.0) / n_dir)
                .collect();
            let dot: f64 = g.iter().zip(&q_gen).map(|(a, b)| a * b).sum();
            let map = plan.direction_map(p);
            for (i, &bin) in map.iter().enumerate() {
                grad[i] += (g[bin as usize] - dot) / total_gen;
            }
        }
    }
    Ok(LossValue {
        value,
        gradient: grad,
    })
}

/// Reconstruction loss split into its components.
#[derive(Debug, Clone)]
pub struct ReconstructionLoss {
    pub l1: f64,
    pub pcl: f64,
    pub total: f64,
    pub gradient: Option<Vec<f64>>,
}

/// Mean absolute pixel difference plus `lambda` times the configured PCL.
pub fn reconstruction_loss(
    gen: &GlyphImage,
    gt: &GlyphImage,
    lambda_pcl: f64,
    cfg: &PclConfig<'_>,
    want_gradient: bool,
) -> Result<LossValue> {
    let parts = reconstruction_loss_parts(gen, gt, lambda_pcl, cfg, want_gradient)?;
    Ok(LossValue {
        value: parts.total,
        gradient: parts.gradient,
    })
}

pub fn reconstruction_loss_parts(
    gen: &GlyphImage,
    gt: &GlyphImage,
    lambda_pcl: f64,
    cfg: &PclConfig<'_>,
    want_gradient: bool,
) -> Result<ReconstructionLoss> {
    gen.ensure_same_shape(gt)?;
    let n = gen.pixels().len() as f64;
    let l1: f64 = gen
        .pixels()
        .iter()
        .zip(gt.pixels())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n;

    let pcl_part = pcl(gen, gt, cfg, want_gradient)?;
    let total = l1 + lambda_pcl * pcl_part.value;
    let gradient = pcl_part.gradient.map(|pg| {
        gen.pixels()
            .iter()
            .zip(gt.pixels())
            .zip(pg)
            .map(|((a, b), g)| sign(a - b) / n + lambda_pcl * g)
            .collect()
    });
    Ok(ReconstructionLoss {
        l1,
        pcl: pcl_part.value,
        total,
        gradient,
    })
}

/// Mean absolute pixel difference alone (the `l1` component).
pub fn image_l1(gen: &GlyphImage, gt: &GlyphImage) -> Result<LossValue> {
    gen.ensure_same_shape(gt)?;
    let n = gen.pixels().len() as f64;
    let value = gen
        .pixels()
        .iter()
        .zip(gt.pixels())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n;
    Ok(LossValue::plain(value))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Chains a per-bin gradient `dq` through q = h / sum(h) and scatters it
/// into pixel space through direction `p`'s index map.
fn scatter_normalization_gradient(
    hist: &[f64],
    dq: &[f64],
    plan: &ProjectionPlan,
    p: usize,
    grad: &mut [f64],
) {
    let total: f64 = hist.iter().sum();
    let dot: f64 = dq
        .iter()
        .zip(hist)
        .map(|(g, &h)| g * h / total)
        .sum::<f64>();
    let map = plan.direction_map(p);
    for (i, &bin) in map.iter().enumerate() {
        grad[i] += (dq[bin as usize] - dot) / total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::ProjectionPlan;

    fn point_image(h: usize, w: usize, row: usize, col: usize) -> GlyphImage {
        let mut img = GlyphImage::zeros(h, w);
        img.set(row, col, 1.0).unwrap();
        img
    }

    #[test]
    fn identical_images_have_zero_wdl() {
        let img = point_image(16, 16, 7, 9);
        let plan = ProjectionPlan::new(16, 16, 4).unwrap();
        let cfg = PclConfig::new(PclVariant::Wdl, &plan);
        let loss = pcl_wdl(&img, &img, &cfg, true).unwrap();
        assert_eq!(loss.value, 0.0);
        assert!(loss.gradient.is_some());
    }

    #[test]
    fn three_column_shift_costs_three() {
        let gen = point_image(80, 80, 40, 40);
        let gt = point_image(80, 80, 40, 43);
        let plan = ProjectionPlan::new(80, 80, 1).unwrap();
        let cfg = PclConfig::new(PclVariant::Wdl, &plan);
        let loss = pcl_wdl(&gen, &gt, &cfg, false).unwrap();
        assert!((loss.value - 3.0).abs() < 1e-9, "got {}", loss.value);
    }

    #[test]
    fn kl_of_identical_images_is_zero() {
        let img = point_image(16, 16, 3, 4);
        let plan = ProjectionPlan::new(16, 16, 6).unwrap();
        let cfg = PclConfig::new(PclVariant::Kl, &plan);
        let loss = pcl_kl(&img, &img, &cfg, false).unwrap();
        assert!(loss.value.abs() < 1e-10);
    }

    #[test]
    fn reconstruction_loss_pure_l1_case() {
        // gt has one ink pixel; gen has the same pixel at half intensity.
        let gt = point_image(80, 80, 10, 10);
        let mut gen = GlyphImage::zeros(80, 80);
        gen.set(10, 10, 0.5).unwrap();
        let plan = ProjectionPlan::new(80, 80, 1).unwrap();
        let cfg = PclConfig::new(PclVariant::Wdl, &plan);
        let loss = reconstruction_loss(&gen, &gt, 0.0, &cfg, false).unwrap();
        assert!((loss.value - 0.5 / 6400.0).abs() < 1e-15);
    }

    #[test]
    fn zero_mass_and_shape_errors() {
        let plan = ProjectionPlan::new(8, 8, 2).unwrap();
        let cfg = PclConfig::new(PclVariant::Wdl, &plan);
        let zero = GlyphImage::zeros(8, 8);
        let ok = point_image(8, 8, 1, 1);
        assert!(matches!(
            pcl_wdl(&zero, &ok, &cfg, false).unwrap_err(),
            Error::ZeroMass
        ));
        let other = point_image(8, 9, 1, 1);
        assert!(matches!(
            pcl_wdl(&ok, &other, &cfg, false).unwrap_err(),
            Error::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn epsilon_must_be_positive() {
        let plan = ProjectionPlan::new(8, 8, 2).unwrap();
        assert!(PclConfig::new(PclVariant::Kl, &plan)
            .with_epsilon(0.0)
            .is_err());
    }
}
