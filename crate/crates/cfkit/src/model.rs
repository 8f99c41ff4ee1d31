//! Minimal differentiable content/style encoder-decoder.
//!
//! Single linear layers with tanh encoders and a logistic decoder keep the
//! whole forward and reverse pass hand-derivable while still exposing the
//! operations the rest of the pipeline needs: content features, a style
//! vector bottleneck, and a modulated decoder
//! `img = logistic(W_d (c * gamma(s) + beta(s)) + b_d)`.
//!
//! Checkpoint format (little-endian): magic `CFKT`, version u32, then
//! (H, W, D_c, D_s) as u32, then the parameter arrays in declaration order,
//! each prefixed by its element count as u64, elements as f64.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::glyph::GlyphImage;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"CFKT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub const DEFAULT_CONTENT_DIM: usize = 64;
pub const DEFAULT_STYLE_DIM: usize = 16;

/// Shape of the model: raster size plus latent dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub height: usize,
    pub width: usize,
    pub content_dim: usize,
    pub style_dim: usize,
}

impl ModelDims {
    pub fn new(height: usize, width: usize, content_dim: usize, style_dim: usize) -> Result<Self> {
        if height == 0 || width == 0 || content_dim == 0 || style_dim == 0 {
            return Err(Error::invalid("model dims", "all dimensions must be >= 1"));
        }
        Ok(ModelDims {
            height,
            width,
            content_dim,
            style_dim,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.height * self.width
    }
}

/// Content feature of one glyph, with provenance tags.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentFeature {
    pub values: Vec<f64>,
    pub font_id: String,
    pub char_id: String,
}

impl ContentFeature {
    pub fn new(values: Vec<f64>) -> Self {
        ContentFeature {
            values,
            font_id: String::new(),
            char_id: String::new(),
        }
    }

    pub fn tagged(mut self, font_id: impl Into<String>, char_id: impl Into<String>) -> Self {
        self.font_id = font_id.into();
        self.char_id = char_id.into();
        self
    }
}

/// Font-level style vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleVector {
    pub values: Vec<f64>,
}

impl StyleVector {
    pub fn new(values: Vec<f64>) -> Self {
        StyleVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn init(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        Mat {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.gen_range(-bound..bound))
                .collect(),
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[r] = acc;
        }
        y
    }

    /// y = A^T x
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let xr = x[r];
            for (yc, a) in y.iter_mut().zip(row) {
                *yc += a * xr;
            }
        }
        y
    }

    /// A += a (x yT)
    pub fn add_outer(&mut self, scale: f64, x: &[f64], y: &[f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            let sx = scale * x[r];
            for (a, b) in row.iter_mut().zip(y) {
                *a += sx * b;
            }
        }
    }
}

/// All trainable arrays.
///
/// Serialization order: content encoder (weights, bias), style encoder
/// (weights, bias), gamma map (weights, bias), beta map (weights, bias),
/// decoder (weights, bias).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModelParams {
    pub dims: ModelDims,
    pub content_w: Mat,
    pub content_b: Vec<f64>,
    pub style_w: Mat,
    pub style_b: Vec<f64>,
    pub gamma_w: Mat,
    pub gamma_b: Vec<f64>,
    pub beta_w: Mat,
    pub beta_b: Vec<f64>,
    pub decoder_w: Mat,
    pub decoder_b: Vec<f64>,
}

/// Gradients (or optimizer state) shaped like the parameters.
#[derive(Debug, Clone)]
pub struct ToyModelGrads {
    pub content_w: Mat,
    pub content_b: Vec<f64>,
    pub style_w: Mat,
    pub style_b: Vec<f64>,
    pub gamma_w: Mat,
    pub gamma_b: Vec<f64>,
    pub beta_w: Mat,
    pub beta_b: Vec<f64>,
    pub decoder_w: Mat,
    pub decoder_b: Vec<f64>,
}

impl ToyModelGrads {
    pub fn zeros(dims: &ModelDims) -> Self {
        let (px, dc, ds) = (dims.n_pixels(), dims.content_dim, dims.style_dim);
        ToyModelGrads {
            content_w: Mat::zeros(dc, px),
            content_b: vec![0.0; dc],
            style_w: Mat::zeros(ds, px),
            style_b: vec![0.0; ds],
            gamma_w: Mat::zeros(dc, ds),
            gamma_b: vec![0.0; dc],
            beta_w: Mat::zeros(dc, ds),
            beta_b: vec![0.0; dc],
            decoder_w: Mat::zeros(px, dc),
            decoder_b: vec![0.0; px],
        }
    }

    pub fn arrays(&self) -> [&[f64]; 10] {
        [
            &self.content_w.data,
            &self.content_b,
            &self.style_w.data,
            &self.style_b,
            &self.gamma_w.data,
            &self.gamma_b,
            &self.beta_w.data,
            &self.beta_b,
            &self.decoder_w.data,
            &self.decoder_b,
        ]
    }

    pub fn arrays_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.content_w.data,
            &mut self.content_b,
            &mut self.style_w.data,
            &mut self.style_b,
            &mut self.gamma_w.data,
            &mut self.gamma_b,
            &mut self.beta_w.data,
            &mut self.beta_b,
            &mut self.decoder_w.data,
            &mut self.decoder_b,
        ]
    }

    pub fn scale(&mut self, f: f64) {
        for arr in self.arrays_mut() {
            for v in arr.iter_mut() {
                *v *= f;
            }
        }
    }
}

/// Intermediates kept from a decode for the backward pass.
#[derive(Debug, Clone)]
pub struct DecodeTrace {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub modulated: Vec<f64>,
    pub output: GlyphImage,
}

impl ToyModelParams {
    /// Seeded uniform init; gamma bias starts at 1 so the modulation is
    /// near-identity before training.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (px, dc, ds) = (dims.n_pixels(), dims.content_dim, dims.style_dim);
        let content_w = Mat::init(dc, px, &mut rng);
        let style_w = Mat::init(ds, px, &mut rng);
        let gamma_w = Mat::init(dc, ds, &mut rng);
        let beta_w = Mat::init(dc, ds, &mut rng);
        let decoder_w = Mat::init(px, dc, &mut rng);
        ToyModelParams {
            dims,
            content_w,
            content_b: vec![0.0; dc],
            style_w,
            style_b: vec![0.0; ds],
            gamma_w,
            gamma_b: vec![1.0; dc],
            beta_w,
            beta_b: vec![0.0; dc],
            decoder_w,
            decoder_b: vec![0.0; px],
        }
    }

    pub fn zeros(dims: ModelDims) -> Self {
        let (px, dc, ds) = (dims.n_pixels(), dims.content_dim, dims.style_dim);
        ToyModelParams {
            dims,
            content_w: Mat::zeros(dc, px),
            content_b: vec![0.0; dc],
            style_w: Mat::zeros(ds, px),
            style_b: vec![0.0; ds],
            gamma_w: Mat::zeros(dc, ds),
            gamma_b: vec![0.0; dc],
            beta_w: Mat::zeros(dc, ds),
            beta_b: vec![0.0; dc],
            decoder_w: Mat::zeros(px, dc),
            decoder_b: vec![0.0; px],
        }
    }

    fn ensure_image(&self, img: &GlyphImage) -> Result<()> {
        if img.height() != self.dims.height || img.width() != self.dims.width {
            return Err(Error::ShapeMismatch {
                expected_h: self.dims.height,
                expected_w: self.dims.width,
                found_h: img.height(),
                found_w: img.width(),
            });
        }
        Ok(())
    }

    /// c = tanh(W_c x + b_c)
    pub fn encode_content(&self, img: &GlyphImage) -> Result<ContentFeature> {
        Ok(ContentFeature::new(self.encode_content_values(img)?))
    }

    pub(crate) fn encode_content_values(&self, img: &GlyphImage) -> Result<Vec<f64>> {
        self.ensure_image(img)?;
        let mut v = self.content_w.matvec(img.pixels());
        for (x, b) in v.iter_mut().zip(&self.content_b) {
            *x = (*x + b).tanh();
        }
        Ok(v)
    }

    /// s = tanh(W_s x + b_s)
    pub fn encode_style(&self, img: &GlyphImage) -> Result<StyleVector> {
        self.ensure_image(img)?;
        let mut v = self.style_w.matvec(img.pixels());
        for (x, b) in v.iter_mut().zip(&self.style_b) {
            *x = (*x + b).tanh();
        }
        Ok(StyleVector::new(v))
    }

    pub fn decode(&self, c: &ContentFeature, s: &StyleVector) -> Result<GlyphImage> {
        Ok(self.decode_with_trace(c, s)?.output)
    }

    /// img = logistic(W_d (c * (G_w s + g_b) + (B_w s + b_b)) + b_d)
    pub fn decode_with_trace(&self, c: &ContentFeature, s: &StyleVector) -> Result<DecodeTrace> {
        if c.values.len() != self.dims.content_dim {
            return Err(Error::DimMismatch {
                what: "content feature",
                expected: self.dims.content_dim,
                found: c.values.len(),
            });
        }
        if s.values.len() != self.dims.style_dim {
            return Err(Error::DimMismatch {
                what: "style vector",
                expected: self.dims.style_dim,
                found: s.values.len(),
            });
        }
        let mut gamma = self.gamma_w.matvec(&s.values);
        for (g, b) in gamma.iter_mut().zip(&self.gamma_b) {
            *g += b;
        }
        let mut beta = self.beta_w.matvec(&s.values);
        for (g, b) in beta.iter_mut().zip(&self.beta_b) {
            *g += b;
        }
        let modulated: Vec<f64> = c
            .values
            .iter()
            .zip(&gamma)
            .zip(&beta)
            .map(|((c, g), b)| c * g + b)
            .collect();
        let mut z = self.decoder_w.matvec(&modulated);
        for (v, b) in z.iter_mut().zip(&self.decoder_b) {
            if !(*v + b).is_finite() {
                return Err(Error::invalid("decode", "non-finite activation"));
            }
            *v = logistic(*v + b);
        }
        let output = GlyphImage::new(self.dims.height, self.dims.width, z)
            .expect("logistic of a finite value is in (0, 1)");
        Ok(DecodeTrace {
            gamma,
            beta,
            modulated,
            output,
        })
    }

    /// Reverse pass through the decoder and modulation given d loss / d output
    /// pixels. Accumulates parameter gradients into `grads` when provided and
    /// returns (d loss / d c, d loss / d s).
    pub fn decode_backward(
        &self,
        c: &[f64],
        s: &[f64],
        trace: &DecodeTrace,
        d_output: &[f64],
        mut grads: Option<&mut ToyModelGrads>,
    ) -> (Vec<f64>, Vec<f64>) {
        let out = trace.output.pixels();
        // logistic'(z) = out (1 - out)
        let dz: Vec<f64> = d_output
            .iter()
            .zip(out)
            .map(|(d, &o)| d * o * (1.0 - o))
            .collect();
        if let Some(g) = grads.as_deref_mut() {
            g.decoder_w.add_outer(1.0, &dz, &trace.modulated);
            for (a, b) in g.decoder_b.iter_mut().zip(&dz) {
                *a += b;
            }
        }
        let dm = self.decoder_w.matvec_t(&dz);
        let d_gamma: Vec<f64> = dm.iter().zip(c).map(|(d, c)| d * c).collect();
        let d_beta = dm.clone();
        let dc: Vec<f64> = dm.iter().zip(&trace.gamma).map(|(d, g)| d * g).collect();
        if let Some(g) = grads.as_deref_mut() {
            g.gamma_w.add_outer(1.0, &d_gamma, s);
            for (a, b) in g.gamma_b.iter_mut().zip(&d_gamma) {
                *a += b;
            }
            g.beta_w.add_outer(1.0, &d_beta, s);
            for (a, b) in g.beta_b.iter_mut().zip(&d_beta) {
                *a += b;
            }
        }
        let mut ds = self.gamma_w.matvec_t(&d_gamma);
        for (a, b) in ds.iter_mut().zip(self.beta_w.matvec_t(&d_beta)) {
            *a += b;
        }
        (dc, ds)
    }

    /// Backprop through the content encoder: dc is d loss / d c where
    /// c = tanh(W_c x + b_c).
    pub fn content_encoder_backward(
        &self,
        img: &GlyphImage,
        c: &[f64],
        dc: &[f64],
        grads: &mut ToyModelGrads,
    ) {
        let d_pre: Vec<f64> = dc.iter().zip(c).map(|(d, c)| d * (1.0 - c * c)).collect();
        grads.content_w.add_outer(1.0, &d_pre, img.pixels());
        for (a, b) in grads.content_b.iter_mut().zip(&d_pre) {
            *a += b;
        }
    }

    pub fn style_encoder_backward(
        &self,
        img: &GlyphImage,
        s: &[f64],
        ds: &[f64],
        grads: &mut ToyModelGrads,
    ) {
        let d_pre: Vec<f64> = ds.iter().zip(s).map(|(d, s)| d * (1.0 - s * s)).collect();
        grads.style_w.add_outer(1.0, &d_pre, img.pixels());
        for (a, b) in grads.style_b.iter_mut().zip(&d_pre) {
            *a += b;
        }
    }

    /// All parameters concatenated in serialization order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for arr in self.arrays() {
            out.extend_from_slice(arr);
        }
        out
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) {
        let mut pos = 0;
        for arr in self.arrays_mut() {
            let len = arr.len();
            arr.copy_from_slice(&flat[pos..pos + len]);
            pos += len;
        }
        assert_eq!(pos, flat.len(), "flat parameter length mismatch");
    }

    pub fn arrays(&self) -> [&[f64]; 10] {
        [
            &self.content_w.data,
            &self.content_b,
            &self.style_w.data,
            &self.style_b,
            &self.gamma_w.data,
            &self.gamma_b,
            &self.beta_w.data,
            &self.beta_b,
            &self.decoder_w.data,
            &self.decoder_b,
        ]
    }

    pub fn arrays_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.content_w.data,
            &mut self.content_b,
            &mut self.style_w.data,
            &mut self.style_b,
            &mut self.gamma_w.data,
            &mut self.gamma_b,
            &mut self.beta_w.data,
            &mut self.beta_b,
            &mut self.decoder_w.data,
            &mut self.decoder_b,
        ]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        for dim in [
            self.dims.height,
            self.dims.width,
            self.dims.content_dim,
            self.dims.style_dim,
        ] {
            buf.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for arr in self.arrays() {
            buf.extend_from_slice(&(arr.len() as u64).to_le_bytes());
            for v in arr {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut r = ByteReader::new(&bytes, path);
        let magic = r.take4()?;
        if magic != CHECKPOINT_MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                expected: CHECKPOINT_MAGIC,
                found: magic,
            });
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(r.format_err(format!("unsupported version {version}")));
        }
        let height = r.u32()? as usize;
        let width = r.u32()? as usize;
        let content_dim = r.u32()? as usize;
        let style_dim = r.u32()? as usize;
        let dims = ModelDims::new(height, width, content_dim, style_dim)?;
        let mut params = ToyModelParams::zeros(dims);
        for arr in params.arrays_mut() {
            let count = r.u64()? as usize;
            if count != arr.len() {
                return Err(Error::DimMismatch {
                    what: "checkpoint array",
                    expected: arr.len(),
                    found: count,
                });
            }
            for v in arr.iter_mut() {
                *v = r.f64()?;
            }
        }
        r.expect_end()?;
        Ok(params)
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Little-endian cursor with path-tagged errors.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        ByteReader {
            bytes,
            pos: 0,
            path,
        }
    }

    pub(crate) fn format_err(&self, detail: String) -> Error {
        Error::FileFormat {
            path: self.path.to_path_buf(),
            detail,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(self.format_err(format!(
                "unexpected end of file at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn take4(&mut self) -> Result<[u8; 4]> {
        Ok(self.take(4)?.try_into().expect("length checked"))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn expect_end(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.format_err(format!(
                "{} trailing bytes after payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
