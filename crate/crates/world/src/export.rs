//! Dataset export: lossless PNGs plus a JSON manifest per split.

use std::fs;
use std::path::Path;

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::factors::{Style, Viewpoint};
use crate::scene::{LabeledImage, IMG};
use crate::WorldError;

/// One dataset record. `style`/`viewpoint`/`seed` come from the rendering
/// spec and are absent for generated images, which instead carry
/// provenance fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: String,
    pub mask: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub style: Option<Style>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub viewpoint: Option<Viewpoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn image_to_png(image: &[f64]) -> RgbImage {
    RgbImage::from_fn(IMG as u32, IMG as u32, |x, y| {
        let p = (y as usize * IMG + x as usize) * 3;
        image::Rgb([
            (image[p] * 255.0).round().clamp(0.0, 255.0) as u8,
            (image[p + 1] * 255.0).round().clamp(0.0, 255.0) as u8,
            (image[p + 2] * 255.0).round().clamp(0.0, 255.0) as u8,
        ])
    })
}

pub fn mask_to_png(mask: &[u8]) -> GrayImage {
    GrayImage::from_fn(IMG as u32, IMG as u32, |x, y| {
        image::Luma([mask[y as usize * IMG + x as usize]])
    })
}

pub fn png_to_image(png: &RgbImage) -> Vec<f64> {
    let mut out = vec![0.0; IMG * IMG * 3];
    for (x, y, px) in png.enumerate_pixels() {
        let p = (y as usize * IMG + x as usize) * 3;
        out[p] = px.0[0] as f64 / 255.0;
        out[p + 1] = px.0[1] as f64 / 255.0;
        out[p + 2] = px.0[2] as f64 / 255.0;
    }
    out
}

/// Writes one split directory: `img_*.png`, `msk_*.png`, `manifest.json`.
pub fn export_split(dir: &Path, images: &[LabeledImage]) -> Result<Manifest, WorldError> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(images.len());
    for (i, li) in images.iter().enumerate() {
        let img_name = format!("img_{i:05}.png");
        let msk_name = format!("msk_{i:05}.png");
        image_to_png(&li.image)
            .save(dir.join(&img_name))
            .map_err(|e| WorldError::Export {
                detail: e.to_string(),
            })?;
        mask_to_png(&li.mask)
            .save(dir.join(&msk_name))
            .map_err(|e| WorldError::Export {
                detail: e.to_string(),
            })?;
        entries.push(ManifestEntry {
            image: img_name,
            mask: msk_name,
            style: li.spec.as_ref().map(|s| s.style),
            viewpoint: li.spec.as_ref().map(|s| s.viewpoint),
            seed: li.spec.as_ref().map(|s| s.seed),
            prompt: None,
            sample_seed: None,
            noise_seed: None,
            checkpoint: None,
        });
    }
    let manifest = Manifest { entries };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Reads a split back from disk. Specs are not reconstructed; images and
/// masks round-trip through the 8-bit PNG encoding.
pub fn load_split(dir: &Path) -> Result<Vec<LabeledImage>, WorldError> {
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut out = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let img = image::open(dir.join(&entry.image))
            .map_err(|e| WorldError::Export {
                detail: e.to_string(),
            })?
            .to_rgb8();
        let msk = image::open(dir.join(&entry.mask))
            .map_err(|e| WorldError::Export {
                detail: e.to_string(),
            })?
            .to_luma8();
        let mask: Vec<u8> = msk.pixels().map(|p| p.0[0]).collect();
        out.push(LabeledImage {
            image: png_to_image(&img),
            mask,
            spec: None,
        });
    }
    Ok(out)
}
