//! Procedural image world with explicit style, viewpoint, and content
//! factors.
//!
//! Every scene renders to a 32×32 RGB image plus an exact 5-class
//! segmentation mask. Style is a pixel-only post-transform, so for fixed
//! geometry all five styles share the same mask — the factor structure the
//! rest of the pipeline measures against.

mod export;
mod factors;
mod prompt;
mod scene;

use thiserror::Error;

pub use export::{
    export_split, image_to_png, load_split, mask_to_png, png_to_image, Manifest, ManifestEntry,
};
pub use factors::{ObjectClass, SegClass, Style, Viewpoint};
pub use prompt::{
    prompt_for_image, prompt_of, prompt_of_names, PromptTokens, NULL_TOKEN, PROMPT_LEN, VOCAB_SIZE,
};
pub use scene::{
    full_corpus, render_scene, sample_dataset, LabeledImage, SceneObject, SceneSpec, IMG, PIXELS,
};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("unknown {kind} name: {name:?}")]
    UnknownFactor { kind: &'static str, name: String },

    #[error("invalid scene spec: {detail}")]
    InvalidSpec { detail: String },

    #[error("invalid prompt: {detail}")]
    InvalidPrompt { detail: String },

    #[error("class_histogram requires at least one mask")]
    EmptyHistogram,

    #[error("dataset io: {detail}")]
    Export { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Splits one u64 seed into independent per-index streams.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair.
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-class pixel proportions over a set of masks. Proportions sum to 1.
pub fn class_histogram(masks: &[&[u8]]) -> Result<[f64; SegClass::COUNT], WorldError> {
    if masks.is_empty() {
        return Err(WorldError::EmptyHistogram);
    }
    let mut counts = [0usize; SegClass::COUNT];
    let mut total = 0usize;
    for mask in masks {
        for &m in mask.iter() {
            counts[m as usize] += 1;
            total += 1;
        }
    }
    let mut out = [0.0; SegClass::COUNT];
    for (o, &c) in out.iter_mut().zip(counts.iter()) {
        *o = c as f64 / total as f64;
    }
    Ok(out)
}
