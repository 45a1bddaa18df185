//! Seeded generator for a regression corpus of scene files.
//!
//! Scenes cover three cloud types, both phase models and a spread of sun
//! angles. The manifest assigns each scene to a train or test group so a
//! fixed subset can be re-rendered and compared against stored images.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CloudLayer, CoverageMethod};
use crate::optics::PhaseModel;
use crate::scene::SceneConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub count: usize,
    pub width: u32,
    pub height: u32,
    /// Fraction of scenes assigned to `train`.
    pub split: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            count: 500,
            width: 512,
            height: 512,
            split: 0.7,
            seed: 2024,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::param("count", "must be >= 1"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::param("split", format!("must lie in (0, 1), got {}", self.split)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("resolution", "width and height must be >= 1"));
        }
        Ok(())
    }

    pub fn train_count(&self) -> usize {
        (self.count as f64 * self.split).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudType {
    Cirrus,
    Cumulus,
    Stratocumulus,
}

pub const CLOUD_TYPES: [CloudType; 3] = [CloudType::Cirrus, CloudType::Cumulus, CloudType::Stratocumulus];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightAngle {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Altitude {
    pub bottom_km: f64,
    pub top_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    /// Scene file, relative to the corpus directory.
    pub file: String,
    pub cloud_type: CloudType,
    pub phase: String,
    pub split: Split,
    pub light_angle: LightAngle,
    /// Peak extinction in km^-1 and coverage amount.
    pub density_sigma_max: f64,
    pub coverage_p4: f64,
    pub altitude: Altitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub version: u32,
    pub seed: u64,
    pub count: usize,
    pub split: f64,
    pub train_count: usize,
    pub test_count: usize,
    pub resolution: [u32; 2],
    pub entries: Vec<CorpusEntry>,
}

fn sample_scene(rng: &mut ChaCha8Rng, kind: CloudType, spec: &CorpusSpec) -> SceneConfig {
    let mut s = SceneConfig::default().with_resolution(spec.width, spec.height);
    let p = &mut s.cloud_params;
    p.method = CoverageMethod::ChannelLerp;
    match kind {
        CloudType::Cirrus => {
            s.layer = CloudLayer::spherical(rng.random_range(7.0..9.0), rng.random_range(0.8..1.6), 6360.0);
            p.c_type = rng.random_range(0.0..0.15);
            p.c_wispy = rng.random_range(0.6..0.9);
            p.c_billowy = rng.random_range(0.0..0.1);
            p.p4 = rng.random_range(0.3..0.55);
            p.erosion_strength = rng.random_range(0.8..1.0);
            p.sigma_max = rng.random_range(3.0..8.0);
        }
        CloudType::Cumulus => {
            s.layer = CloudLayer::spherical(rng.random_range(1.0..2.0), rng.random_range(2.0..3.5), 6360.0);
            p.c_type = rng.random_range(0.75..1.0);
            p.c_wispy = rng.random_range(0.1..0.3);
            p.c_billowy = rng.random_range(0.2..0.5);
            p.p4 = rng.random_range(0.3..0.5);
            p.erosion_strength = rng.random_range(0.4..0.7);
            p.sigma_max = rng.random_range(20.0..40.0);
        }
        CloudType::Stratocumulus => {
            s.layer = CloudLayer::spherical(rng.random_range(0.6..1.5), rng.random_range(0.6..1.2), 6360.0);
            p.c_type = rng.random_range(0.2..0.4);
            p.c_wispy = rng.random_range(0.1..0.3);
            p.c_billowy = rng.random_range(0.3..0.6);
            p.p4 = rng.random_range(0.6..0.9);
            p.erosion_strength = rng.random_range(0.4..0.6);
            p.sigma_max = rng.random_range(15.0..30.0);
        }
    }
    s.sun.elevation_deg = rng.random_range(5.0..75.0);
    s.sun.azimuth_deg = rng.random_range(0.0..360.0);
    // different views of the same tiled field
    s.camera.position_km = [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0), 0.2];
    s.phase_model = if rng.random_bool(0.5) {
        PhaseModel::Tthg {
            g1: rng.random_range(0.5..0.9),
            g2: -0.3,
            w: rng.random_range(0.6..0.8),
        }
    } else {
        let d = rng.random_range(3.0..5.0);
        s.particle_size_d = d;
        PhaseModel::Hgd { d }
    };
    s
}

/// Deterministic for a fixed spec.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<(CorpusManifest, Vec<SceneConfig>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut order: Vec<usize> = (0..spec.count).collect();
    order.shuffle(&mut rng);
    let train = spec.train_count();
    let mut split = vec![Split::Test; spec.count];
    for &i in &order[..train] {
        split[i] = Split::Train;
    }

    let mut entries = Vec::with_capacity(spec.count);
    let mut scenes = Vec::with_capacity(spec.count);
    for (i, &assigned) in split.iter().enumerate() {
        let kind = CLOUD_TYPES[i % CLOUD_TYPES.len()];
        let scene = sample_scene(&mut rng, kind, spec);
        let id = format!("scene_{i:04}");
        entries.push(CorpusEntry {
            file: format!("scenes/{id}.json"),
            id,
            cloud_type: kind,
            phase: match scene.phase_model {
                PhaseModel::Tthg { .. } => "tthg".into(),
                PhaseModel::Hgd { .. } => "hgd".into(),
            },
            split: assigned,
            light_angle: LightAngle {
                elevation_deg: scene.sun.elevation_deg,
                azimuth_deg: scene.sun.azimuth_deg,
            },
            density_sigma_max: scene.cloud_params.sigma_max,
            coverage_p4: scene.cloud_params.p4,
            altitude: Altitude {
                bottom_km: scene.layer.bottom_altitude_km,
                top_km: scene.layer.top_altitude_km(),
            },
        });
        scenes.push(scene);
    }
    let manifest = CorpusManifest {
        version: 1,
        seed: spec.seed,
        count: spec.count,
        split: spec.split,
        train_count: train,
        test_count: spec.count - train,
        resolution: [spec.width, spec.height],
        entries,
    };
    Ok((manifest, scenes))
}

/// Writes `manifest.json` and one scene file per entry under `dir`.
pub fn write_corpus(dir: &Path, manifest: &CorpusManifest, scenes: &[SceneConfig]) -> Result<()> {
    std::fs::create_dir_all(dir.join("scenes"))?;
    for (entry, scene) in manifest.entries.iter().zip(scenes) {
        scene.save(&dir.join(&entry.file))?;
    }
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_counts() {
        let spec = CorpusSpec { count: 10, split: 0.7, ..Default::default() };
        let (m, scenes) = generate_corpus(&spec).unwrap();
        assert_eq!((m.train_count, m.test_count), (7, 3));
        assert_eq!(m.entries.iter().filter(|e| e.split == Split::Train).count(), 7);
        assert_eq!(scenes.len(), 10);
    }

    #[test]
    fn generated_scenes_validate() {
        let spec = CorpusSpec { count: 60, ..Default::default() };
        let (m, scenes) = generate_corpus(&spec).unwrap();
        for mut s in scenes {
            s.validate().unwrap();
            assert_eq!((s.camera.width, s.camera.height), (512, 512));
        }
        for t in CLOUD_TYPES {
            assert!(m.entries.iter().any(|e| e.cloud_type == t));
        }
        for p in ["tthg", "hgd"] {
            assert!(m.entries.iter().any(|e| e.phase == p));
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_corpus(&CorpusSpec { count: 0, ..Default::default() }).is_err());
        assert!(generate_corpus(&CorpusSpec { split: 1.0, ..Default::default() }).is_err());
    }
}
