//! Scene descriptions and the deterministic renderer.
//!
//! Geometry (and therefore the mask) depends only on viewpoint and
//! content; style is applied afterwards as a pixel-only transform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::factors::{ObjectClass, SegClass, Style, Viewpoint};
use crate::WorldError;

/// Image side length in pixels.
pub const IMG: usize = 32;
/// Pixels per image (one mask cell each).
pub const PIXELS: usize = IMG * IMG;

/// One placed object: position and size are fractions of the image side,
/// depth runs from 0 (near) to 1 (far).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub class: ObjectClass,
    pub x: f64,
    pub y: f64,
    pub size: f64,
    pub depth: f64,
}

/// Full procedural description of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub style: Style,
    pub viewpoint: Viewpoint,
    pub objects: Vec<SceneObject>,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(
        style: Style,
        viewpoint: Viewpoint,
        objects: Vec<SceneObject>,
        seed: u64,
    ) -> Result<Self, WorldError> {
        for (i, o) in objects.iter().enumerate() {
            let inside = (0.0..=1.0).contains(&o.x)
                && (0.0..=1.0).contains(&o.y)
                && (0.0..=1.0).contains(&o.depth)
                && o.size > 0.0
                && o.size <= 1.0;
            if !inside {
                return Err(WorldError::InvalidSpec {
                    detail: format!("object {i} out of range: {o:?}"),
                });
            }
        }
        Ok(SceneSpec {
            style,
            viewpoint,
            objects,
            seed,
        })
    }

    /// Fresh content factors drawn from `rng`, with fixed style/viewpoint.
    pub fn sample_content(
        style: Style,
        viewpoint: Viewpoint,
        seed: u64,
    ) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(1..=4);
        let mut objects = Vec::with_capacity(count);
        for _ in 0..count {
            let class = ObjectClass::ALL[rng.random_range(0..ObjectClass::ALL.len())];
            objects.push(SceneObject {
                class,
                x: rng.random_range(0.05..0.95),
                y: rng.random_range(0.05..0.95),
                size: rng.random_range(0.12..0.4),
                depth: rng.random_range(0.0..1.0),
            });
        }
        SceneSpec {
            style,
            viewpoint,
            objects,
            seed,
        }
    }
}

/// A rendered image with its exact per-pixel class mask.
///
/// Pixels are `[0,1]` RGB in row-major HWC order; the mask holds one
/// [`SegClass`] id per pixel. `spec` is absent for generated images.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: Vec<f64>,
    pub mask: Vec<u8>,
    pub spec: Option<SceneSpec>,
}

impl LabeledImage {
    pub fn classes_present(&self) -> Vec<ObjectClass> {
        let mut present = Vec::new();
        for class in ObjectClass::ALL {
            if self.mask.iter().any(|&m| m == class.seg_class().id()) {
                present.push(class);
            }
        }
        present
    }
}

struct Canvas {
    rgb: Vec<f64>,
    mask: Vec<u8>,
    depth: Vec<f64>,
}

impl Canvas {
    fn new() -> Self {
        Canvas {
            rgb: vec![0.0; PIXELS * 3],
            mask: vec![SegClass::Sky.id(); PIXELS],
            depth: vec![1.0; PIXELS],
        }
    }

    fn put(&mut self, x: usize, y: usize, color: [f64; 3], class: SegClass, depth: f64) {
        if x >= IMG || y >= IMG {
            return;
        }
        let p = y * IMG + x;
        self.rgb[p * 3] = color[0];
        self.rgb[p * 3 + 1] = color[1];
        self.rgb[p * 3 + 2] = color[2];
        self.mask[p] = class.id();
        self.depth[p] = depth;
    }

    fn fill_rect(
        &mut self,
        x0: i64,
        y0: i64,
        w: i64,
        h: i64,
        color: [f64; 3],
        class: SegClass,
        depth: f64,
    ) {
        for y in y0.max(0)..(y0 + h).min(IMG as i64) {
            for x in x0.max(0)..(x0 + w).min(IMG as i64) {
                self.put(x as usize, y as usize, color, class, depth);
            }
        }
    }
}

/// Renders a spec into an image/mask pair.
///
/// Deterministic in the spec: geometry first (fixing the mask), then the
/// style pixel transform. The mask never depends on style.
pub fn render_scene(spec: &SceneSpec) -> LabeledImage {
    let mut canvas = Canvas::new();
    let mut content_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);

    draw_background(&mut canvas, spec.viewpoint);

    // Far objects first so near ones paint over them.
    let mut order: Vec<usize> = (0..spec.objects.len()).collect();
    order.sort_by(|&a, &b| {
        spec.objects[b]
            .depth
            .partial_cmp(&spec.objects[a].depth)
            .unwrap()
            .then(a.cmp(&b))
    });
    for idx in order {
        let obj = &spec.objects[idx];
        // Per-object palette jitter is content, not style: identical
        // across styles because it derives from the spec seed.
        let tint = content_rng.random_range(-0.08..0.08);
        draw_object(&mut canvas, spec.viewpoint, obj, tint);
    }

    apply_style(&mut canvas, spec);

    LabeledImage {
        image: canvas.rgb,
        mask: canvas.mask,
        spec: Some(spec.clone()),
    }
}

/// Horizon row per viewpoint; rows below it are road.
fn horizon(viewpoint: Viewpoint) -> usize {
    match viewpoint {
        Viewpoint::Driving => IMG / 2, // road strictly in the lower half
        Viewpoint::Topdown => 0,       // no sky at all
        Viewpoint::Closeup => IMG / 4,
    }
}

fn draw_background(canvas: &mut Canvas, viewpoint: Viewpoint) {
    let hor = horizon(viewpoint);
    for y in 0..IMG {
        for x in 0..IMG {
            if y < hor {
                // Sky with a mild vertical gradient.
                let t = y as f64 / IMG as f64;
                canvas.put(
                    x,
                    y,
                    [0.52 + 0.10 * t, 0.70 + 0.08 * t, 0.92],
                    SegClass::Sky,
                    1.0,
                );
            } else {
                // Road darkens toward the viewer.
                let t = if IMG - hor > 1 {
                    (y - hor) as f64 / (IMG - hor - 1).max(1) as f64
                } else {
                    1.0
                };
                let depth = match viewpoint {
                    Viewpoint::Topdown => 0.5,
                    _ => 1.0 - 0.92 * t,
                };
                let shade = 0.36 - 0.06 * t;
                canvas.put(x, y, [shade, shade, shade + 0.02], SegClass::Road, depth);
            }
        }
    }
    // Lane markings: pixels only, the mask stays Road.
    match viewpoint {
        Viewpoint::Driving => {
            for y in (hor + 2..IMG).step_by(3) {
                let x = IMG / 2;
                let p = y * IMG + x;
                canvas.rgb[p * 3] = 0.85;
                canvas.rgb[p * 3 + 1] = 0.85;
                canvas.rgb[p * 3 + 2] = 0.60;
            }
        }
        Viewpoint::Topdown => {
            for x in (1..IMG).step_by(4) {
                let y = IMG / 2;
                let p = y * IMG + x;
                canvas.rgb[p * 3] = 0.80;
                canvas.rgb[p * 3 + 1] = 0.80;
                canvas.rgb[p * 3 + 2] = 0.58;
            }
        }
        Viewpoint::Closeup => {}
    }
}

fn draw_object(canvas: &mut Canvas, viewpoint: Viewpoint, obj: &SceneObject, tint: f64) {
    let hor = horizon(viewpoint) as f64;
    let img = IMG as f64;
    // Far objects shrink; close-up views magnify.
    let view_scale = match viewpoint {
        Viewpoint::Closeup => 1.8,
        _ => 1.0,
    };
    let scale = view_scale * (1.1 - 0.7 * obj.depth);
    let base = obj.size * img * scale;

    match obj.class {
        ObjectClass::Building => {
            let w = (base * 0.9).round().max(2.0) as i64;
            let h = (base * 1.4).round().max(3.0) as i64;
            let x0 = (obj.x * img - w as f64 / 2.0).round() as i64;
            // Buildings stand on the horizon in perspective views and sit
            // anywhere in top-down view.
            let y0 = match viewpoint {
                Viewpoint::Topdown => (obj.y * img - h as f64 / 2.0).round() as i64,
                _ => hor as i64 - h + (2.0 * obj.depth) as i64,
            };
            let wall = [0.56 + tint, 0.46 + tint, 0.38];
            canvas.fill_rect(x0, y0, w, h, wall, SegClass::Building, obj.depth);
            // Window grid.
            for wy in (y0 + 1..y0 + h).step_by(2) {
                for wx in (x0 + 1..x0 + w).step_by(2) {
                    if wx >= 0 && wy >= 0 && (wx as usize) < IMG && (wy as usize) < IMG {
                        let p = wy as usize * IMG + wx as usize;
                        if canvas.mask[p] == SegClass::Building.id() {
                            canvas.rgb[p * 3] = 0.22;
                            canvas.rgb[p * 3 + 1] = 0.24;
                            canvas.rgb[p * 3 + 2] = 0.30;
                        }
                    }
                }
            }
        }
        ObjectClass::Vehicle => {
            let w = (base * 1.0).round().max(3.0) as i64;
            let h = (base * 0.5).round().max(2.0) as i64;
            let (x0, y0) = object_anchor(viewpoint, obj, w, h);
            let body = [0.75 + tint, 0.18, 0.16 - tint * 0.5];
            canvas.fill_rect(x0, y0, w, h, body, SegClass::Vehicle, obj.depth);
            // Cabin band.
            let cabin = [0.30, 0.38, 0.48];
            canvas.fill_rect(
                x0 + w / 4,
                y0,
                (w / 2).max(1),
                (h / 2).max(1),
                cabin,
                SegClass::Vehicle,
                obj.depth,
            );
        }
        ObjectClass::Pedestrian => {
            let w = (base * 0.25).round().max(1.0) as i64;
            let h = (base * 0.9).round().max(2.0) as i64;
            let (x0, y0) = object_anchor(viewpoint, obj, w, h);
            let coat = [0.16, 0.12 + tint.abs(), 0.34];
            canvas.fill_rect(x0, y0, w, h, coat, SegClass::Pedestrian, obj.depth);
            // Head pixel(s).
            canvas.fill_rect(
                x0,
                y0 - (h / 3).min(2),
                w,
                (h / 3).min(2).max(1),
                [0.82, 0.66, 0.52],
                SegClass::Pedestrian,
                obj.depth,
            );
        }
    }
}

/// Where an object's bounding box sits for a given viewpoint.
fn object_anchor(viewpoint: Viewpoint, obj: &SceneObject, w: i64, h: i64) -> (i64, i64) {
    let img = IMG as f64;
    let x0 = (obj.x * img - w as f64 / 2.0).round() as i64;
    let y0 = match viewpoint {
        Viewpoint::Topdown => (obj.y * img - h as f64 / 2.0).round() as i64,
        _ => {
            // Ground contact: nearer objects sit lower in the frame.
            let hor = horizon(viewpoint) as f64;
            let ground = hor + (1.0 - obj.depth) * (img - 1.0 - hor);
            (ground - h as f64).round() as i64
        }
    };
    (x0, y0)
}

fn apply_style(canvas: &mut Canvas, spec: &SceneSpec) {
    match spec.style {
        Style::Clearday => {}
        Style::Foggy => {
            let fog = [0.80, 0.81, 0.83];
            for p in 0..PIXELS {
                let k = 0.85 * canvas.depth[p];
                for c in 0..3 {
                    let v = canvas.rgb[p * 3 + c];
                    canvas.rgb[p * 3 + c] = v * (1.0 - k) + fog[c] * k;
                }
            }
        }
        Style::Night => {
            for p in 0..PIXELS {
                canvas.rgb[p * 3] = canvas.rgb[p * 3] * 0.18 + 0.01;
                canvas.rgb[p * 3 + 1] = canvas.rgb[p * 3 + 1] * 0.18 + 0.015;
                canvas.rgb[p * 3 + 2] = canvas.rgb[p * 3 + 2] * 0.26 + 0.06;
            }
        }
        Style::Snowy => {
            for p in 0..PIXELS {
                let ground = canvas.mask[p] == SegClass::Road.id();
                let blend = if ground { 0.62 } else { 0.25 };
                for c in 0..3 {
                    let v = canvas.rgb[p * 3 + c];
                    canvas.rgb[p * 3 + c] = v * (1.0 - blend) + 0.88 * blend;
                }
            }
            // Falling-snow speckle: positions derive from the spec seed,
            // so re-renders are bitwise identical.
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5ee5_5ee5_5ee5_5ee5);
            for _ in 0..70 {
                let x = rng.random_range(0..IMG);
                let y = rng.random_range(0..IMG);
                let p = y * IMG + x;
                canvas.rgb[p * 3] = 0.97;
                canvas.rgb[p * 3 + 1] = 0.97;
                canvas.rgb[p * 3 + 2] = 0.99;
            }
        }
        Style::Sketch => {
            // Grayscale paper with dark edges of the underlying geometry.
            let luma: Vec<f64> = (0..PIXELS)
                .map(|p| {
                    0.299 * canvas.rgb[p * 3]
                        + 0.587 * canvas.rgb[p * 3 + 1]
                        + 0.114 * canvas.rgb[p * 3 + 2]
                })
                .collect();
            for y in 0..IMG {
                for x in 0..IMG {
                    let p = y * IMG + x;
                    let gx = if x + 1 < IMG { luma[p + 1] - luma[p] } else { 0.0 };
                    let gy = if y + 1 < IMG {
                        luma[p + IMG] - luma[p]
                    } else {
                        0.0
                    };
                    let edge = (gx * gx + gy * gy).sqrt().min(1.0);
                    let ink = (0.93 - 2.2 * edge).clamp(0.05, 0.93);
                    canvas.rgb[p * 3] = ink;
                    canvas.rgb[p * 3 + 1] = ink;
                    canvas.rgb[p * 3 + 2] = ink * 0.96;
                }
            }
        }
    }
    for v in canvas.rgb.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Renders `n` scenes with fresh content factors and fixed style/viewpoint.
/// Scene seeds derive from `seed` and the index, so reruns reproduce the
/// dataset exactly.
pub fn sample_dataset(
    style: Style,
    viewpoint: Viewpoint,
    n: usize,
    seed: u64,
) -> Vec<LabeledImage> {
    assert!(n >= 1, "sample_dataset requires n >= 1");
    (0..n)
        .map(|i| {
            let spec_seed = crate::mix_seed(seed, i as u64);
            render_scene(&SceneSpec::sample_content(style, viewpoint, spec_seed))
        })
        .collect()
}

/// The pretraining corpus: every style × viewpoint combination with `per_combo`
/// fresh scenes each.
pub fn full_corpus(per_combo: usize, seed: u64) -> Vec<LabeledImage> {
    let mut out = Vec::with_capacity(per_combo * 15);
    for (si, style) in Style::ALL.into_iter().enumerate() {
        for (vi, viewpoint) in Viewpoint::ALL.into_iter().enumerate() {
            let combo_seed = crate::mix_seed(seed, (si * Viewpoint::ALL.len() + vi) as u64);
            out.extend(sample_dataset(style, viewpoint, per_combo, combo_seed));
        }
    }
    out
}
