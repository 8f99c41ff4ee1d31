//! Content-fusion font generation toolkit.
//!
//! A desk-scale laboratory for few-shot font generation mechanics built on
//! synthetic procedural fonts:
//!
//! * [`raster`] / [`dataset`] — deterministic glyph rendering and dataset
//!   generation, with PGM I/O in [`pgm`].
//! * [`projection`] / [`pcl`] — multi-direction 1D projections of glyphs and
//!   the projected character losses (Wasserstein and KL variants) with exact
//!   analytic gradients.
//! * [`model`] / [`train`] — a minimal content/style encoder-decoder with
//!   hand-written backprop and a deterministic two-stage trainer.
//! * [`cluster`] / [`fusion`] — basis-font selection by K-Medoids over a
//!   font-distance embedding, and convex content-feature fusion.
//! * [`isr`] — inference-time refinement of the font-level style vector.
//! * [`metrics`] — L1 / RMSE / SSIM evaluation.
//! * [`gradcheck`] — central-difference gradient verification.

pub mod cluster;
pub mod dataset;
pub mod error;
pub mod fusion;
pub mod glyph;
pub mod gradcheck;
pub mod isr;
pub mod metrics;
pub mod model;
pub mod pcl;
pub mod pgm;
pub mod projection;
pub mod raster;
pub mod train;

pub use error::{Error, Result};
pub use glyph::GlyphImage;
