//! Scene files: loading, validation, presets, and the one-call render path.
//!
//! A scene file is a JSON object whose keys override the default preset.
//! Nested objects merge key by key, so `{"cloud_params": {"P4": 0.4}}` changes
//! only coverage. Unknown keys are rejected.

use std::path::Path;
use std::time::{Duration, Instant};

use glam::DVec3;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::field::{CloudField, CloudLayer, CloudParams, CoverageMethod};
use crate::march::{render, Camera, FrameSetup, HdrImage, Lighting, MarchParams, MarchStats, Rgb8Image, Sky, Sun};
use crate::optics::PhaseModel;
use crate::textures::{check_channels, resolve_pair, TextureRefs};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
    #[error("unknown preset {name:?}; available: {}", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },
}

impl ConfigError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Body used by the HTTP service for 400 responses.
    pub fn to_json(&self) -> Value {
        match self {
            ConfigError::Parse { line, column, message } => serde_json::json!({
                "error": "parse", "line": line, "column": column, "message": message,
            }),
            ConfigError::Validation { path, message } => serde_json::json!({
                "error": "validation", "path": path, "message": message,
            }),
            ConfigError::UnknownPreset { name, available } => serde_json::json!({
                "error": "unknown_preset", "name": name, "available": available,
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// config types

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub position_km: [f64; 3],
    pub forward: [f64; 3],
    /// Re-orthogonalized against `forward` at load.
    pub up: [f64; 3],
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SunConfig {
    pub elevation_deg: f64,
    /// From +x toward +y.
    pub azimuth_deg: f64,
    pub irradiance: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub camera: CameraConfig,
    pub sun: SunConfig,
    pub layer: CloudLayer,
    pub cloud_params: CloudParams,
    pub phase_model: PhaseModel,
    /// Droplet diameter in micrometres used whenever an HG+D model is
    /// selected without its own `d`, e.g. by the corpus generator.
    pub particle_size_d: f64,
    pub march_params: MarchParams,
    pub albedo: f64,
    /// Multiplier on the sky's zenith radiance used as in-cloud ambient light.
    pub ambient: f64,
    pub exposure: f64,
    pub time_s: f64,
    pub seed: u64,
    pub textures: TextureRefs,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            camera: CameraConfig {
                position_km: [0.0, 0.0, 0.2],
                forward: [0.0, 1.0, 0.36],
                up: [0.0, 0.0, 1.0],
                fov_deg: 60.0,
                width: 320,
                height: 180,
            },
            sun: SunConfig {
                elevation_deg: 45.0,
                azimuth_deg: 60.0,
                irradiance: [10.0, 9.6, 9.0],
            },
            layer: CloudLayer::spherical(1.5, 2.5, 6360.0),
            cloud_params: CloudParams::default(),
            phase_model: PhaseModel::Tthg { g1: 0.85, g2: -0.3, w: 0.7 },
            particle_size_d: 4.5,
            march_params: MarchParams::default(),
            albedo: 0.95,
            ambient: 0.6,
            exposure: 1.0,
            time_s: 0.0,
            seed: 7,
            textures: TextureRefs::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// bounds

/// Closed numeric range for one config field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldBound {
    pub path: &'static str,
    pub min: f64,
    pub max: f64,
    #[serde(skip)]
    get: fn(&SceneConfig) -> Option<f64>,
}

macro_rules! bound {
    ($path:literal, $min:expr, $max:expr, |$c:ident| $get:expr) => {
        FieldBound {
            path: $path,
            min: $min as f64,
            max: $max as f64,
            get: |$c: &SceneConfig| $get,
        }
    };
}

fn tthg(c: &SceneConfig) -> Option<(f64, f64, f64)> {
    match c.phase_model {
        PhaseModel::Tthg { g1, g2, w } => Some((g1, g2, w)),
        PhaseModel::Hgd { .. } => None,
    }
}

/// Every numeric bound enforced at load. The service publishes this table so
/// clients can mirror it.
pub fn bounds() -> &'static [FieldBound] {
    static BOUNDS: &[FieldBound] = &[
        bound!("camera.fov_deg", 1, 179, |c| Some(c.camera.fov_deg)),
        bound!("camera.width", 1, 4096, |c| Some(c.camera.width as f64)),
        bound!("camera.height", 1, 4096, |c| Some(c.camera.height as f64)),
        bound!("sun.elevation_deg", -10, 90, |c| Some(c.sun.elevation_deg)),
        bound!("sun.azimuth_deg", -360, 360, |c| Some(c.sun.azimuth_deg)),
        bound!("sun.irradiance[0]", 0, 1000, |c| Some(c.sun.irradiance[0])),
        bound!("sun.irradiance[1]", 0, 1000, |c| Some(c.sun.irradiance[1])),
        bound!("sun.irradiance[2]", 0, 1000, |c| Some(c.sun.irradiance[2])),
        bound!("layer.bottom_altitude_km", 0, 20, |c| Some(c.layer.bottom_altitude_km)),
        bound!("layer.thickness_km", 0.1, 20, |c| Some(c.layer.thickness_km)),
        bound!("layer.planet_radius_km", 100, 100000, |c| Some(c.layer.planet_radius_km)),
        bound!("cloud_params.P3", 0, 2, |c| Some(c.cloud_params.p3)),
        bound!("cloud_params.P4", 0, 1.5, |c| Some(c.cloud_params.p4)),
        bound!("cloud_params.C_type", 0, 1, |c| Some(c.cloud_params.c_type)),
        bound!("cloud_params.C_wispy", 0, 1, |c| Some(c.cloud_params.c_wispy)),
        bound!("cloud_params.C_billowy", 0, 1, |c| Some(c.cloud_params.c_billowy)),
        bound!("cloud_params.b_tiling_km", 0.1, 1000, |c| Some(c.cloud_params.b_tiling_km)),
        bound!("cloud_params.e_tiling_km", 0.01, 100, |c| Some(c.cloud_params.e_tiling_km)),
        bound!("cloud_params.base_frequency", 0.01, 100, |c| Some(c.cloud_params.base_frequency)),
        bound!("cloud_params.erosion_frequency", 0.01, 100, |c| Some(c.cloud_params.erosion_frequency)),
        bound!("cloud_params.erosion_strength", 0, 1, |c| Some(c.cloud_params.erosion_strength)),
        bound!("cloud_params.wind_kmps[0]", -1, 1, |c| Some(c.cloud_params.wind_kmps[0])),
        bound!("cloud_params.wind_kmps[1]", -1, 1, |c| Some(c.cloud_params.wind_kmps[1])),
        bound!("cloud_params.wind_kmps[2]", -1, 1, |c| Some(c.cloud_params.wind_kmps[2])),
        bound!("cloud_params.erosion_motion_scale", 0, 16, |c| Some(c.cloud_params.erosion_motion_scale)),
        bound!("cloud_params.sigma_max", 0, 1000, |c| Some(c.cloud_params.sigma_max)),
        bound!("phase_model.tthg.g1", -0.99, 0.99, |c| tthg(c).map(|t| t.0)),
        bound!("phase_model.tthg.g2", -0.99, 0.99, |c| tthg(c).map(|t| t.1)),
        bound!("phase_model.tthg.w", 0, 1, |c| tthg(c).map(|t| t.2)),
        bound!("phase_model.hgd.d", 0.01, 50, |c| match c.phase_model {
            PhaseModel::Hgd { d } => Some(d),
            PhaseModel::Tthg { .. } => None,
        }),
        bound!("particle_size_d", 0.01, 50, |c| Some(c.particle_size_d)),
        bound!("march_params.view_samples_base", 1, 4096, |c| Some(c.march_params.view_samples_base as f64)),
        bound!("march_params.view_scale", 0.05, 16, |c| Some(c.march_params.view_scale)),
        bound!("march_params.shadow_samples_base", 1, 1024, |c| Some(c.march_params.shadow_samples_base as f64)),
        bound!("march_params.shadow_scale", 0.05, 16, |c| Some(c.march_params.shadow_scale)),
        bound!("march_params.transmittance_threshold", 0, 0.49, |c| Some(c.march_params.transmittance_threshold)),
        bound!("march_params.shadow_max_distance_km", 0.1, 1000, |c| Some(c.march_params.shadow_max_distance_km)),
        bound!("albedo", 0, 1, |c| Some(c.albedo)),
        bound!("ambient", 0, 10, |c| Some(c.ambient)),
        bound!("exposure", 0.001, 1000, |c| Some(c.exposure)),
        bound!("time_s", -1e6, 1e6, |c| Some(c.time_s)),
    ];
    BOUNDS
}

fn orthonormal_basis(forward: [f64; 3], up: [f64; 3]) -> std::result::Result<([f64; 3], [f64; 3]), ConfigError> {
    let f = DVec3::from_array(forward);
    let u = DVec3::from_array(up);
    if !f.is_finite() || f.length() < 1e-9 {
        return Err(ConfigError::invalid("camera.forward", "must be a finite nonzero vector"));
    }
    let f = if (f.length() - 1.0).abs() < 1e-12 { f } else { f.normalize() };
    let along = u.dot(f);
    let ortho = u - f * along;
    if !ortho.is_finite() || ortho.length() < 1e-9 {
        return Err(ConfigError::invalid("camera.up", "must not be parallel to camera.forward"));
    }
    // leave an already orthonormal pair untouched so load/save is a fixed point
    let u = if along.abs() < 1e-12 && (u.length() - 1.0).abs() < 1e-12 {
        u
    } else {
        ortho.normalize()
    };
    Ok((f.to_array(), u.to_array()))
}

impl SceneConfig {
    /// Checks every bound and normalizes the camera basis.
    pub fn validate(&mut self) -> std::result::Result<(), ConfigError> {
        for b in bounds() {
            if let Some(v) = (b.get)(self) {
                if !(v >= b.min && v <= b.max) {
                    return Err(ConfigError::invalid(
                        b.path,
                        format!("must be within [{}, {}], got {v}", b.min, b.max),
                    ));
                }
            }
        }
        if self.camera.position_km.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::invalid("camera.position_km", "must be finite"));
        }
        let (f, u) = orthonormal_basis(self.camera.forward, self.camera.up)?;
        self.camera.forward = f;
        self.camera.up = u;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Same scene at another resolution.
    pub fn with_resolution(mut self, width: u32, height: u32) -> Self {
        self.camera.width = width;
        self.camera.height = height;
        self
    }

    /// Resolution divided by `scale`, at least one pixel per axis.
    pub fn preview(self, scale: u32) -> Self {
        let scale = scale.max(1);
        let (w, h) = ((self.camera.width / scale).max(1), (self.camera.height / scale).max(1));
        self.with_resolution(w, h)
    }

    pub fn sun(&self) -> Sun {
        Sun::from_angles(
            self.sun.elevation_deg,
            self.sun.azimuth_deg,
            DVec3::from_array(self.sun.irradiance),
        )
    }

    pub fn camera(&self) -> Result<Camera> {
        let c = &self.camera;
        Camera::new(
            DVec3::from_array(c.position_km),
            DVec3::from_array(c.forward),
            DVec3::from_array(c.up),
            c.fov_deg,
            c.width,
            c.height,
        )
    }

    /// Resolves textures and builds everything `render` needs. Relative
    /// texture paths resolve against `base_dir`.
    pub fn prepare(&self, base_dir: Option<&Path>) -> Result<PreparedScene> {
        let mut checked = self.clone();
        checked.validate()?;
        self.layer.validate()?;
        self.march_params.validate()?;
        let textures = resolve_pair(&self.textures, self.seed, base_dir)?;
        check_channels(&textures.base, "textures.base")?;
        check_channels(&textures.erosion, "textures.erosion")?;
        let sun = self.sun();
        let sky = Sky::for_sun(sun);
        let setup = FrameSetup {
            camera: checked.camera()?,
            lighting: Lighting {
                sun,
                phase: self.phase_model.evaluator()?,
                albedo: self.albedo,
                ambient: sky.ambient(self.ambient),
            },
            sky,
            params: self.march_params.clone(),
        };
        Ok(PreparedScene {
            field: CloudField {
                params: self.cloud_params.clone(),
                layer: self.layer,
                textures,
                time_s: self.time_s,
            },
            setup,
            exposure: self.exposure,
        })
    }
}

// ---------------------------------------------------------------------------
// loading

fn merge(base: &mut Value, over: Value, path: &str) {
    match (base, over) {
        // switching the phase model variant replaces it instead of merging
        (Value::Object(b), Value::Object(o)) if path == "phase_model" && o.keys().any(|k| !b.contains_key(k)) => {
            *b = o;
        }
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let child = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &child),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies JSON overrides to `base` and validates the result.
pub fn apply_overrides(base: &SceneConfig, overrides: Value) -> std::result::Result<SceneConfig, ConfigError> {
    if !overrides.is_object() {
        return Err(ConfigError::invalid("", "scene must be a JSON object"));
    }
    let mut merged = serde_json::to_value(base).expect("scene serializes");
    merge(&mut merged, overrides, "");
    let mut scene: SceneConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ConfigError::invalid(path, e.into_inner().to_string())
    })?;
    scene.validate()?;
    Ok(scene)
}

pub fn parse_json(bytes: &[u8]) -> std::result::Result<Value, ConfigError> {
    serde_json::from_slice(bytes).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses a scene file. Absent keys take their values from the default preset.
pub fn load_config_bytes(bytes: &[u8]) -> std::result::Result<SceneConfig, ConfigError> {
    apply_overrides(&SceneConfig::default(), parse_json(bytes)?)
}

pub fn load_config(path: &Path) -> Result<SceneConfig> {
    let bytes = std::fs::read(path)?;
    Ok(load_config_bytes(&bytes)?)
}

// ---------------------------------------------------------------------------
// presets

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub scenes: Vec<SceneConfig>,
}

pub const PRESET_NAMES: [&str; 6] = ["default", "tthg_bench", "hgd_bench", "fig1_ab", "fig3_sweep", "fig5_sweep"];

fn sweep(base: &SceneConfig, p4s: &[f64]) -> Vec<SceneConfig> {
    p4s.iter()
        .map(|&p4| {
            let mut s = base.clone();
            s.cloud_params.p4 = p4;
            s
        })
        .collect()
}

pub fn preset(name: &str) -> std::result::Result<Preset, ConfigError> {
    let base = SceneConfig::default();
    let (description, scenes) = match name {
        "default" => ("Final hyperparameter values", vec![base]),
        "tthg_bench" => {
            let mut s = base;
            s.phase_model = PhaseModel::Tthg { g1: 0.75, g2: -0.3, w: 0.65 };
            ("Benchmark scene with the two-lobe phase function", vec![s])
        }
        "hgd_bench" => {
            let mut s = base;
            s.phase_model = PhaseModel::Hgd { d: 4.7 };
            s.particle_size_d = 4.7;
            ("Benchmark scene with the droplet phase function, d = 4.7", vec![s])
        }
        "fig1_ab" => {
            let mut right = base.clone();
            right.phase_model = PhaseModel::Hgd { d: 0.8 };
            right.particle_size_d = 0.8;
            ("Two-lobe vs droplet (d = 0.8) phase function, otherwise identical", vec![base, right])
        }
        "fig3_sweep" => {
            let mut s = base;
            s.cloud_params.method = CoverageMethod::CoverageCarve;
            s.cloud_params.p3 = 1.0;
            ("Coverage carve at P4 = 0, 0.4, 1.2", sweep(&s, &[0.0, 0.4, 1.2]))
        }
        "fig5_sweep" => {
            let mut s = base;
            let p = &mut s.cloud_params;
            p.method = CoverageMethod::ChannelLerp;
            p.p3 = 1.0;
            p.c_type = 0.024;
            p.c_wispy = 0.248;
            p.c_billowy = 0.016;
            ("Channel lerp at P4 = 0.4, 0.85, 1.2", sweep(&s, &[0.4, 0.85, 1.2]))
        }
        other => {
            return Err(ConfigError::UnknownPreset {
                name: other.to_string(),
                available: PRESET_NAMES.iter().map(|s| s.to_string()).collect(),
            })
        }
    };
    Ok(Preset { name: PRESET_NAMES.iter().find(|n| **n == name).copied().unwrap_or("default"), description, scenes })
}

pub fn presets() -> Vec<Preset> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("built-in preset")).collect()
}

// ---------------------------------------------------------------------------
// rendering

/// A validated scene with textures resolved.
#[derive(Debug, Clone)]
pub struct PreparedScene {
    pub field: CloudField,
    pub setup: FrameSetup,
    pub exposure: f64,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub hdr: HdrImage,
    pub stats: MarchStats,
    pub elapsed: Duration,
}

impl PreparedScene {
    pub fn render(&self) -> RenderOutput {
        let start = Instant::now();
        let (hdr, stats) = render(&self.field, &self.setup);
        RenderOutput {
            hdr,
            stats,
            elapsed: start.elapsed(),
        }
    }
}

impl RenderOutput {
    pub fn tone_mapped(&self, exposure: f64) -> Result<Rgb8Image> {
        crate::march::tone_map(&self.hdr, exposure)
    }
}

pub fn render_scene(scene: &SceneConfig, base_dir: Option<&Path>) -> Result<RenderOutput> {
    Ok(scene.prepare(base_dir)?.render())
}

/// Renders two scenes and returns both plus their absolute difference.
pub fn render_diff(
    a: &SceneConfig,
    b: &SceneConfig,
    base_dir: Option<&Path>,
) -> Result<(RenderOutput, RenderOutput, HdrImage)> {
    let ra = render_scene(a, base_dir)?;
    let rb = render_scene(b, base_dir)?;
    let diff = crate::march::image_diff(&ra.hdr, &rb.hdr)?;
    Ok((ra, rb, diff))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let s = load_config_bytes(b"{}").unwrap();
        let mut d = SceneConfig::default();
        d.validate().unwrap();
        assert_eq!(s, d);
        assert_eq!(s.phase_model, PhaseModel::Tthg { g1: 0.85, g2: -0.3, w: 0.7 });
        assert_eq!(s.particle_size_d, 4.5);
        assert_eq!(s.cloud_params.base_frequency, 1.2);
        assert_eq!(s.cloud_params.erosion_frequency, 1.5);
    }

    #[test]
    fn nested_override_keeps_siblings() {
        let s = load_config_bytes(br#"{"cloud_params": {"P4": 0.4}}"#).unwrap();
        assert_eq!(s.cloud_params.p4, 0.4);
        assert_eq!(s.cloud_params.c_type, CloudParams::default().c_type);
    }

    #[test]
    fn switching_phase_variant() {
        let s = load_config_bytes(br#"{"phase_model": {"hgd": {"d": 0.8}}}"#).unwrap();
        assert_eq!(s.phase_model, PhaseModel::Hgd { d: 0.8 });
        let s = load_config_bytes(br#"{"phase_model": {"tthg": {"w": 0.5}}}"#).unwrap();
        assert_eq!(s.phase_model, PhaseModel::Tthg { g1: 0.85, g2: -0.3, w: 0.5 });
    }

    #[test]
    fn errors_name_the_field() {
        let e = load_config_bytes(br#"{"cloud_params": {"P4": -1}}"#).unwrap_err();
        assert!(matches!(&e, ConfigError::Validation { path, .. } if path == "cloud_params.P4"), "{e}");
        assert!(e.to_string().contains("[0, 1.5]"));

        let e = load_config_bytes(br#"{"cloud_params": {"P5": 1}}"#).unwrap_err();
        assert!(e.to_string().contains("P5"), "{e}");

        let e = load_config_bytes(br#"{"camera": {"width": "wide"}}"#).unwrap_err();
        assert!(matches!(&e, ConfigError::Validation { path, .. } if path == "camera.width"), "{e}");

        let e = load_config_bytes(b"{\n  \"albedo\": ,\n}").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 2, .. }), "{e}");

        let e = load_config_bytes(br#"{"camera": {"up": [0, 1, 0], "forward": [0, 2, 0]}}"#).unwrap_err();
        assert!(e.to_string().starts_with("camera.up"), "{e}");
    }

    #[test]
    fn camera_is_normalized_at_load() {
        let s = load_config_bytes(br#"{"camera": {"forward": [0, 3, 0], "up": [0, 1, 1]}}"#).unwrap();
        assert_eq!(s.camera.forward, [0.0, 1.0, 0.0]);
        assert_eq!(s.camera.up, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn presets_match_tables() {
        let d = &preset("default").unwrap().scenes[0];
        assert!(matches!(d.phase_model, PhaseModel::Tthg { w, .. } if w == 0.7));
        let h = &preset("hgd_bench").unwrap().scenes[0];
        assert_eq!(h.phase_model, PhaseModel::Hgd { d: 4.7 });
        let f3 = preset("fig3_sweep").unwrap().scenes;
        let p4: Vec<f64> = f3.iter().map(|s| s.cloud_params.p4).collect();
        assert_eq!(p4, vec![0.0, 0.4, 1.2]);
        for s in &f3[1..] {
            let mut t = s.clone();
            t.cloud_params.p4 = 0.0;
            assert_eq!(t, f3[0]);
        }
        let e = preset("nope").unwrap_err();
        assert!(e.to_string().contains("fig5_sweep"));
        for p in presets() {
            for mut s in p.scenes {
                s.validate().unwrap();
            }
        }
    }

    #[test]
    fn preview_divides_resolution() {
        let s = SceneConfig::default().with_resolution(320, 180).preview(8);
        assert_eq!((s.camera.width, s.camera.height), (40, 22));
        let s = SceneConfig::default().with_resolution(5, 5).preview(8);
        assert_eq!((s.camera.width, s.camera.height), (1, 1));
    }
}
