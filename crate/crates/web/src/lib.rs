//! Browser bindings for the static demo in `www/`.
//!
//! Everything runs on the page's thread, so previews use small textures and
//! reduced sample counts unless the overrides say otherwise. Time is not
//! measured here: `std::time::Instant` is unavailable on this target.

use nimbus::field::{extinction_at, point_at_altitude};
use nimbus::march::{render, tone_map};
use nimbus::optics::PhaseModel;
use nimbus::scene::{apply_overrides, bounds, presets, ConfigError};
use nimbus::textures::resolve_pair;
use nimbus::SceneConfig;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Applied under the caller's overrides.
fn preview_defaults() -> Value {
    json!({
        "textures": {"base": "procedural:perlin_worley:32", "erosion": "procedural:curly_alligator:16"},
        "march_params": {"view_scale": 0.5, "shadow_scale": 0.5},
    })
}

fn merge(dst: &mut Value, src: Value) {
    match (dst, src) {
        (Value::Object(d), Value::Object(s)) => {
            for (k, v) in s {
                merge(d.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses overrides on top of the preview defaults. Errors come back as the
/// same JSON bodies the HTTP service sends.
pub fn scene_from_json(overrides: &str) -> Result<SceneConfig, String> {
    let err = |e: ConfigError| e.to_json().to_string();
    let user = nimbus::scene::parse_json(overrides.as_bytes()).map_err(err)?;
    let mut v = preview_defaults();
    // the phase model is replaced wholesale, not merged, when switching variants
    let phase = user.get("phase_model").cloned();
    merge(&mut v, user);
    if let Some(p) = phase {
        v["phase_model"] = p;
    }
    apply_overrides(&SceneConfig::default(), v).map_err(err)
}

/// Tone-mapped RGBA8 pixels, row-major, ready for `ImageData`.
pub fn preview_rgba(overrides: &str, width: u32, height: u32) -> Result<Vec<u8>, String> {
    let scene = scene_from_json(overrides)?.with_resolution(width.max(1), height.max(1));
    let prepared = scene.prepare(None).map_err(|e| e.to_string())?;
    let (hdr, _) = render(&prepared.field, &prepared.setup);
    let ldr = tone_map(&hdr, scene.exposure).map_err(|e| e.to_string())?;
    Ok(ldr.data.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect())
}

/// Phase function of `model` (`{"tthg": ..}` or `{"hgd": ..}`) at `n`
/// angles evenly spaced over [0, pi].
pub fn phase_samples(model: &str, n: usize) -> Result<Vec<f64>, String> {
    let model: PhaseModel = serde_json::from_str(model).map_err(|e| e.to_string())?;
    let eval = model.evaluator().map_err(|e| e.to_string())?;
    let n = n.max(2);
    Ok((0..n)
        .map(|i| {
            let theta = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            eval.eval(theta.cos())
        })
        .collect())
}

/// Extinction over one horizontal period of the base noise at a relative
/// height `h` in [0, 1] of the layer, as grayscale RGBA scaled by `sigma_max`.
pub fn slice_rgba(overrides: &str, h: f64, size: u32) -> Result<Vec<u8>, String> {
    let scene = scene_from_json(overrides)?;
    let textures = resolve_pair(&scene.textures, scene.seed, None).map_err(|e| e.to_string())?;
    let p = &scene.cloud_params;
    let layer = &scene.layer;
    let period = p.b_tiling_km / p.base_frequency;
    let altitude = layer.bottom_altitude_km + h.clamp(0.0, 1.0) * layer.thickness_km;
    let size = size.max(1);
    let mut out = Vec::with_capacity((size * size * 4) as usize);
    for j in 0..size {
        for i in 0..size {
            let x = (i as f64 + 0.5) / size as f64 * period;
            let y = (j as f64 + 0.5) / size as f64 * period;
            let pos = point_at_altitude(layer, x, y, altitude);
            let s = extinction_at(pos, scene.time_s, p, layer, &textures).extinction;
            let v = if p.sigma_max > 0.0 { (s / p.sigma_max * 255.0).round() as u8 } else { 0 };
            out.extend([v, v, v, 255]);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn render_preview(overrides: &str, width: u32, height: u32) -> Result<Vec<u8>, JsValue> {
    preview_rgba(overrides, width, height).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn phase_curve(model: &str, n: usize) -> Result<Vec<f64>, JsValue> {
    phase_samples(model, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn density_slice(overrides: &str, height_fraction: f64, size: u32) -> Result<Vec<u8>, JsValue> {
    slice_rgba(overrides, height_fraction, size).map_err(|e| JsValue::from_str(&e))
}

/// Slider limits, same table the loader enforces.
#[wasm_bindgen]
pub fn bounds_json() -> String {
    serde_json::to_string(bounds()).expect("bounds serialize")
}

#[wasm_bindgen]
pub fn presets_json() -> String {
    serde_json::to_string(&presets()).expect("presets serialize")
}
