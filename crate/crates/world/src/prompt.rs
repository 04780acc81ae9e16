//! Prompt tokens over the fixed 12-token vocabulary.
//!
//! A prompt is at most one style token, at most one viewpoint token, and
//! any class tokens, padded with NULL to a fixed length of 8. NULL is
//! reserved for classifier-free guidance.

use serde::{Deserialize, Serialize};

use crate::factors::{ObjectClass, Style, Viewpoint};
use crate::scene::LabeledImage;
use crate::WorldError;

/// Fixed prompt length (shorter prompts are NULL-padded).
pub const PROMPT_LEN: usize = 8;
/// Vocabulary size: NULL + 5 styles + 3 viewpoints + 3 classes.
pub const VOCAB_SIZE: usize = 12;
/// The reserved NULL token id.
pub const NULL_TOKEN: usize = 0;

fn style_token(style: Style) -> usize {
    1 + Style::ALL.iter().position(|s| *s == style).unwrap()
}

fn viewpoint_token(viewpoint: Viewpoint) -> usize {
    6 + Viewpoint::ALL.iter().position(|v| *v == viewpoint).unwrap()
}

fn class_token(class: ObjectClass) -> usize {
    9 + ObjectClass::ALL.iter().position(|c| *c == class).unwrap()
}

fn is_style(id: usize) -> bool {
    (1..6).contains(&id)
}

fn is_viewpoint(id: usize) -> bool {
    (6..9).contains(&id)
}

fn is_class(id: usize) -> bool {
    (9..12).contains(&id)
}

/// A fixed-length token sequence conditioning the denoiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptTokens {
    ids: [usize; PROMPT_LEN],
}

impl PromptTokens {
    /// The all-NULL prompt used for classifier-free guidance.
    pub fn null() -> Self {
        PromptTokens {
            ids: [NULL_TOKEN; PROMPT_LEN],
        }
    }

    /// Builds a prompt from explicit token ids, checking the vocabulary
    /// range and the one-style/one-viewpoint invariant.
    pub fn from_ids(ids: &[usize]) -> Result<Self, WorldError> {
        if ids.len() > PROMPT_LEN {
            return Err(WorldError::InvalidPrompt {
                detail: format!("{} tokens exceed the maximum of {PROMPT_LEN}", ids.len()),
            });
        }
        let mut padded = [NULL_TOKEN; PROMPT_LEN];
        padded[..ids.len()].copy_from_slice(ids);
        if let Some(&bad) = padded.iter().find(|&&t| t >= VOCAB_SIZE) {
            return Err(WorldError::InvalidPrompt {
                detail: format!("token id {bad} out of vocabulary ({VOCAB_SIZE})"),
            });
        }
        let styles = padded.iter().filter(|&&t| is_style(t)).count();
        let viewpoints = padded.iter().filter(|&&t| is_viewpoint(t)).count();
        if styles > 1 || viewpoints > 1 {
            return Err(WorldError::InvalidPrompt {
                detail: format!("{styles} style and {viewpoints} viewpoint tokens"),
            });
        }
        Ok(PromptTokens { ids: padded })
    }

    pub fn ids(&self) -> &[usize; PROMPT_LEN] {
        &self.ids
    }

    pub fn is_null(&self) -> bool {
        self.ids.iter().all(|&t| t == NULL_TOKEN)
    }

    pub fn style(&self) -> Option<Style> {
        self.ids
            .iter()
            .find(|&&t| is_style(t))
            .map(|&t| Style::ALL[t - 1])
    }

    pub fn viewpoint(&self) -> Option<Viewpoint> {
        self.ids
            .iter()
            .find(|&&t| is_viewpoint(t))
            .map(|&t| Viewpoint::ALL[t - 6])
    }

    /// Class tokens in prompt order.
    pub fn classes(&self) -> Vec<ObjectClass> {
        self.ids
            .iter()
            .filter(|&&t| is_class(t))
            .map(|&t| ObjectClass::ALL[t - 9])
            .collect()
    }

    /// Prompt positions (slots) holding a class token.
    pub fn class_slots(&self) -> Vec<(usize, ObjectClass)> {
        self.ids
            .iter()
            .enumerate()
            .filter(|(_, &t)| is_class(t))
            .map(|(i, &t)| (i, ObjectClass::ALL[t - 9]))
            .collect()
    }

    /// Copy with the style token replaced (or inserted in canonical slot 0
    /// when absent).
    pub fn with_style(&self, style: Style) -> Self {
        let mut ids = self.ids;
        match ids.iter().position(|&t| is_style(t)) {
            Some(i) => ids[i] = style_token(style),
            None => ids[0] = style_token(style),
        }
        PromptTokens { ids }
    }

    pub fn with_viewpoint(&self, viewpoint: Viewpoint) -> Self {
        let mut ids = self.ids;
        match ids.iter().position(|&t| is_viewpoint(t)) {
            Some(i) => ids[i] = viewpoint_token(viewpoint),
            None => ids[1] = viewpoint_token(viewpoint),
        }
        PromptTokens { ids }
    }

    /// Copy with the class tokens kept in place but in reversed order.
    pub fn with_classes_reversed(&self) -> Self {
        let mut ids = self.ids;
        let slots: Vec<usize> = ids
            .iter()
            .enumerate()
            .filter(|(_, &t)| is_class(t))
            .map(|(i, _)| i)
            .collect();
        let values: Vec<usize> = slots.iter().rev().map(|&i| ids[i]).collect();
        for (&slot, &v) in slots.iter().zip(values.iter()) {
            ids[slot] = v;
        }
        PromptTokens { ids }
    }

    /// Human-readable form for manifests and logs.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(s) = self.style() {
            parts.push(s.name().to_string());
        }
        if let Some(v) = self.viewpoint() {
            parts.push(v.name().to_string());
        }
        for c in self.classes() {
            parts.push(c.name().to_string());
        }
        if parts.is_empty() {
            "null".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Canonical prompt encoding: style token, viewpoint token, sorted class
/// tokens, NULL padding.
pub fn prompt_of(
    style: Style,
    viewpoint: Viewpoint,
    classes: &[ObjectClass],
) -> PromptTokens {
    let mut ids = vec![style_token(style), viewpoint_token(viewpoint)];
    let mut class_ids: Vec<usize> = classes.iter().map(|&c| class_token(c)).collect();
    class_ids.sort_unstable();
    class_ids.dedup();
    ids.extend(class_ids);
    PromptTokens::from_ids(&ids).expect("canonical prompt is always valid")
}

/// `prompt_of` with class names, for config and CLI input.
pub fn prompt_of_names(
    style: Style,
    viewpoint: Viewpoint,
    class_names: &[String],
) -> Result<PromptTokens, WorldError> {
    let classes: Vec<ObjectClass> = class_names
        .iter()
        .map(|n| ObjectClass::from_name(n))
        .collect::<Result<_, _>>()?;
    Ok(prompt_of(style, viewpoint, &classes))
}

/// Prompt describing a rendered pair: its style and viewpoint plus exactly
/// the object classes present in the mask.
pub fn prompt_for_image(image: &LabeledImage) -> Result<PromptTokens, WorldError> {
    let spec = image.spec.as_ref().ok_or_else(|| WorldError::InvalidPrompt {
        detail: "image has no originating spec".to_string(),
    })?;
    Ok(prompt_of(
        spec.style,
        spec.viewpoint,
        &image.classes_present(),
    ))
}
