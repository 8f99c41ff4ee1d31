//! Synthetic dataset generation and the TSV manifest.
//!
//! Layout: `<out_dir>/data/<font_id>/<char_id>.pgm` plus
//! `<out_dir>/manifest.tsv` with header `font_id\tchar_id\tpath\tis_reference`.
//! Exactly 16 characters per font are flagged as the few-shot reference set;
//! the same characters for every font, picked by one seeded shuffle.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::{
    render_glyph, CharSkeleton, SyntheticFontSpec, SCALE_RANGE, SLANT_RANGE, THICKNESS_RANGE,
};

pub const REFERENCE_CHARS_PER_FONT: usize = 16;
pub const MIN_SKELETONS: usize = 20;
pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub font_id: String,
    pub char_id: String,
    /// Path relative to the dataset root (the directory holding the manifest).
    pub path: String,
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    /// Font ids in order of first appearance.
    pub fn font_ids(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.font_id.as_str()) {
                seen.push(row.font_id.as_str());
            }
        }
        seen
    }

    /// Character ids in order of first appearance.
    pub fn char_ids(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for row in &self.rows {
            if !seen.contains(&row.char_id.as_str()) {
                seen.push(row.char_id.as_str());
            }
        }
        seen
    }

    pub fn rows_for_font<'a>(&'a self, font_id: &'a str) -> impl Iterator<Item = &'a ManifestRow> {
        self.rows.iter().filter(move |r| r.font_id == font_id)
    }

    /// Reference rows of a font, in manifest order.
    pub fn reference_rows<'a>(&'a self, font_id: &'a str) -> Vec<&'a ManifestRow> {
        self.rows_for_font(font_id)
            .filter(|r| r.is_reference)
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::from("font_id\tchar_id\tpath\tis_reference\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                row.font_id,
                row.char_id,
                row.path,
                u8::from(row.is_reference)
            ));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line != "font_id\tchar_id\tpath\tis_reference" {
                    return Err(Error::Manifest {
                        line: 1,
                        detail: "unexpected header".to_string(),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::Manifest {
                    line: i + 1,
                    detail: format!("expected 4 columns, found {}", cols.len()),
                });
            }
            let is_reference = match cols[3] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Manifest {
                        line: i + 1,
                        detail: format!("is_reference must be 0 or 1, found {other:?}"),
                    })
                }
            };
            rows.push(ManifestRow {
                font_id: cols[0].to_string(),
                char_id: cols[1].to_string(),
                path: cols[2].to_string(),
                is_reference,
            });
        }
        Ok(DatasetManifest { rows })
    }
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    pub overwrite: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            height: crate::glyph::GlyphImage::DEFAULT_SIZE,
            width: crate::glyph::GlyphImage::DEFAULT_SIZE,
            seed: 0,
            overwrite: false,
        }
    }
}

/// Draws `n_fonts` font specs with seeded parameters spanning the full
/// thickness/slant/scale ranges.
pub fn synthesize_font_specs(n_fonts: usize, seed: u64) -> Vec<SyntheticFontSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5f0e_11d3));
    (0..n_fonts)
        .map(|i| {
            let thickness = rng.gen_range(THICKNESS_RANGE.0..=THICKNESS_RANGE.1);
            let slant = rng.gen_range(SLANT_RANGE.0..=SLANT_RANGE.1);
            let scale = rng.gen_range(SCALE_RANGE.0..=SCALE_RANGE.1);
            let jitter_seed = rng.gen::<u64>();
            SyntheticFontSpec::new(format!("f{i:03}"), thickness, slant, scale, jitter_seed)
                .expect("sampled parameters are in range")
        })
        .collect()
}

pub fn build_dataset(
    n_fonts: usize,
    skeletons: &[CharSkeleton],
    out_dir: &Path,
    opts: &DatasetOptions,
) -> Result<DatasetManifest> {
    let specs = synthesize_font_specs(n_fonts, opts.seed);
    build_dataset_from_specs(&specs, skeletons, out_dir, opts)
}

pub fn build_dataset_from_specs(
    specs: &[SyntheticFontSpec],
    skeletons: &[CharSkeleton],
    out_dir: &Path,
    opts: &DatasetOptions,
) -> Result<DatasetManifest> {
    if specs.len() < 2 {
        return Err(Error::invalid("n_fonts", "need at least 2 fonts"));
    }
    if skeletons.len() < MIN_SKELETONS {
        return Err(Error::invalid(
            "skeletons",
            format!("need at least {MIN_SKELETONS}, got {}", skeletons.len()),
        ));
    }

    let data_dir = out_dir.join("data");
    if data_dir.exists() {
        let non_empty = fs::read_dir(&data_dir)
            .map_err(|e| Error::io(&data_dir, e))?
            .next()
            .is_some();
        if non_empty && !opts.overwrite {
            return Err(Error::OutputDirNotEmpty(out_dir.to_path_buf()));
        }
        if non_empty {
            fs::remove_dir_all(&data_dir).map_err(|e| Error::io(&data_dir, e))?;
        }
    }
    fs::create_dir_all(&data_dir).map_err(|e| Error::io(&data_dir, e))?;

    // One shuffle of character indices, shared by every font, picks the
    // 16-character reference subset.
    let mut order: Vec<usize> = (0..skeletons.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(0x9e37_79b9));
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let reference: Vec<bool> = {
        let mut flags = vec![false; skeletons.len()];
        for &idx in order.iter().take(REFERENCE_CHARS_PER_FONT) {
            flags[idx] = true;
        }
        flags
    };

    let mut rows = Vec::with_capacity(specs.len() * skeletons.len());
    for spec in specs {
        let font_dir = data_dir.join(&spec.font_id);
        fs::create_dir_all(&font_dir).map_err(|e| Error::io(&font_dir, e))?;
        for (k, skel) in skeletons.iter().enumerate() {
            let img = render_glyph(spec, skel, opts.height, opts.width);
            let rel: PathBuf = ["data", spec.font_id.as_str(), &format!("{}.pgm", skel.char_id)]
                .iter()
                .collect();
            crate::pgm::write_pgm(&img, &out_dir.join(&rel))?;
            rows.push(ManifestRow {
                font_id: spec.font_id.clone(),
                char_id: skel.char_id.clone(),
                path: rel.to_string_lossy().replace('\\', "/"),
                is_reference: reference[k],
            });
        }
    }

    let manifest = DatasetManifest { rows };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::builtin_skeletons;

    #[test]
    fn counts_match_and_references_are_16_per_font() {
        let dir = tempfile::tempdir().unwrap();
        let skels: Vec<_> = builtin_skeletons().into_iter().take(20).collect();
        let opts = DatasetOptions {
            height: 16,
            width: 16,
            seed: 5,
            overwrite: false,
        };
        let manifest = build_dataset(2, &skels, dir.path(), &opts).unwrap();
        assert_eq!(manifest.rows.len(), 40);
        for font in manifest.font_ids() {
            assert_eq!(manifest.reference_rows(font).len(), 16);
        }
        let files: usize = walk_pgm_count(&dir.path().join("data"));
        assert_eq!(files, 40);
    }

    fn walk_pgm_count(dir: &Path) -> usize {
        let mut n = 0;
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                n += walk_pgm_count(&p);
            } else if p.extension().is_some_and(|e| e == "pgm") {
                n += 1;
            }
        }
        n
    }

    #[test]
    fn same_seed_gives_identical_manifests() {
        let skels: Vec<_> = builtin_skeletons().into_iter().take(21).collect();
        let mk = |seed| {
            let dir = tempfile::tempdir().unwrap();
            let opts = DatasetOptions {
                height: 12,
                width: 12,
                seed,
                overwrite: false,
            };
            build_dataset(3, &skels, dir.path(), &opts).unwrap()
        };
        assert_eq!(mk(9), mk(9));
        assert_ne!(mk(9), mk(10));
    }

    #[test]
    fn reference_set_is_subset_of_char_set() {
        let dir = tempfile::tempdir().unwrap();
        let skels = builtin_skeletons();
        let opts = DatasetOptions {
            height: 12,
            width: 12,
            seed: 1,
            overwrite: false,
        };
        let manifest = build_dataset(2, &skels, dir.path(), &opts).unwrap();
        let chars = manifest.char_ids();
        for font in manifest.font_ids() {
            for row in manifest.reference_rows(font) {
                assert!(chars.contains(&row.char_id.as_str()));
            }
        }
        // Shared across fonts: both fonts flag the same characters.
        let fonts = manifest.font_ids();
        let refs_a: Vec<_> = manifest
            .reference_rows(fonts[0])
            .iter()
            .map(|r| r.char_id.clone())
            .collect();
        let refs_b: Vec<_> = manifest
            .reference_rows(fonts[1])
            .iter()
            .map(|r| r.char_id.clone())
            .collect();
        assert_eq!(refs_a, refs_b);
    }

    #[test]
    fn refuses_nonempty_output_without_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let skels: Vec<_> = builtin_skeletons().into_iter().take(20).collect();
        let opts = DatasetOptions {
            height: 12,
            width: 12,
            seed: 2,
            overwrite: false,
        };
        build_dataset(2, &skels, dir.path(), &opts).unwrap();
        let err = build_dataset(2, &skels, dir.path(), &opts).unwrap_err();
        assert!(matches!(err, Error::OutputDirNotEmpty(_)));
        let opts_force = DatasetOptions {
            overwrite: true,
            ..opts
        };
        build_dataset(2, &skels, dir.path(), &opts_force).unwrap();
    }

    #[test]
    fn manifest_roundtrip_and_image_invariants() {
        let dir = tempfile::tempdir().unwrap();
        let skels: Vec<_> = builtin_skeletons().into_iter().take(20).collect();
        let opts = DatasetOptions {
            height: 16,
            width: 16,
            seed: 3,
            overwrite: false,
        };
        let manifest = build_dataset(2, &skels, dir.path(), &opts).unwrap();
        let back = DatasetManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(manifest, back);
        for row in &back.rows {
            let img = crate::pgm::read_pgm_expecting(&dir.path().join(&row.path), 16, 16).unwrap();
            assert!(img.pixels().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
