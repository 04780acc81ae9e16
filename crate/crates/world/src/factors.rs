//! The explicit generative factors: style, viewpoint, and object content.

use serde::{Deserialize, Serialize};

use crate::WorldError;

/// Global appearance factor. Applied strictly as a pixel post-transform,
/// so masks are identical across styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Clearday,
    Foggy,
    Night,
    Snowy,
    Sketch,
}

impl Style {
    pub const ALL: [Style; 5] = [
        Style::Clearday,
        Style::Foggy,
        Style::Night,
        Style::Snowy,
        Style::Sketch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Style::Clearday => "clearday",
            Style::Foggy => "foggy",
            Style::Night => "night",
            Style::Snowy => "snowy",
            Style::Sketch => "sketch",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, WorldError> {
        Style::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| WorldError::UnknownFactor {
                kind: "style",
                name: name.to_string(),
            })
    }
}

/// Camera factor: controls scene geometry, and with it the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Viewpoint {
    Driving,
    Topdown,
    Closeup,
}

impl Viewpoint {
    pub const ALL: [Viewpoint; 3] = [Viewpoint::Driving, Viewpoint::Topdown, Viewpoint::Closeup];

    pub fn name(self) -> &'static str {
        match self {
            Viewpoint::Driving => "driving",
            Viewpoint::Topdown => "topdown",
            Viewpoint::Closeup => "closeup",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, WorldError> {
        Viewpoint::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| WorldError::UnknownFactor {
                kind: "viewpoint",
                name: name.to_string(),
            })
    }
}

/// Placeable object classes (the non-background segmentation classes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Building,
    Vehicle,
    Pedestrian,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [
        ObjectClass::Building,
        ObjectClass::Vehicle,
        ObjectClass::Pedestrian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Building => "building",
            ObjectClass::Vehicle => "vehicle",
            ObjectClass::Pedestrian => "pedestrian",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, WorldError> {
        ObjectClass::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| WorldError::UnknownFactor {
                kind: "class",
                name: name.to_string(),
            })
    }

    pub fn seg_class(self) -> SegClass {
        match self {
            ObjectClass::Building => SegClass::Building,
            ObjectClass::Vehicle => SegClass::Vehicle,
            ObjectClass::Pedestrian => SegClass::Pedestrian,
        }
    }
}

/// Segmentation classes stored in masks (K = 5).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegClass {
    Sky = 0,
    Road = 1,
    Building = 2,
    Vehicle = 3,
    Pedestrian = 4,
}

impl SegClass {
    pub const COUNT: usize = 5;
    pub const ALL: [SegClass; 5] = [
        SegClass::Sky,
        SegClass::Road,
        SegClass::Building,
        SegClass::Vehicle,
        SegClass::Pedestrian,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        SegClass::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SegClass::Sky => "sky",
            SegClass::Road => "road",
            SegClass::Building => "building",
            SegClass::Vehicle => "vehicle",
            SegClass::Pedestrian => "pedestrian",
        }
    }
}
