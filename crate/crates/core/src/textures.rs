//! Texture references used by scene files and a process-wide cache of baked
//! volumes.
//!
//! A reference is either `procedural:<generator>:<size>` (`perlin_worley`,
//! `curly_alligator`, `perlin`, `worley`) or a path to a `.vtex.json` header.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CloudTextures;
use crate::noise::{bake_volume, NoiseKind, NoiseSpec, VolumeGenerator};
use crate::volume::{read_vtex, VolumeTexture};

pub const MAX_PROCEDURAL_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TextureRef {
    Procedural { kind: NoiseKind, size: usize },
    File(PathBuf),
}

impl TextureRef {
    pub fn procedural(kind: NoiseKind, size: usize) -> Self {
        TextureRef::Procedural { kind, size }
    }
}

fn kind_name(kind: NoiseKind) -> &'static str {
    match kind {
        NoiseKind::Perlin => "perlin",
        NoiseKind::Worley => "worley",
        NoiseKind::PerlinWorley => "perlin_worley",
        NoiseKind::CurlyAlligator => "curly_alligator",
    }
}

impl fmt::Display for TextureRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextureRef::Procedural { kind, size } => write!(f, "procedural:{}:{size}", kind_name(*kind)),
            TextureRef::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for TextureRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let Some(rest) = s.strip_prefix("procedural:") else {
            if s.is_empty() {
                return Err("empty texture reference".into());
            }
            return Ok(TextureRef::File(PathBuf::from(s)));
        };
        let (name, size) = rest
            .split_once(':')
            .ok_or_else(|| format!("expected procedural:<generator>:<size>, got {s:?}"))?;
        let kind = match name {
            "perlin" => NoiseKind::Perlin,
            "worley" => NoiseKind::Worley,
            "perlin_worley" => NoiseKind::PerlinWorley,
            "curly_alligator" => NoiseKind::CurlyAlligator,
            other => {
                return Err(format!(
                    "unknown generator {other:?} (expected perlin, worley, perlin_worley or curly_alligator)"
                ))
            }
        };
        let size: usize = size.parse().map_err(|_| format!("bad texture size in {s:?}"))?;
        if !(2..=MAX_PROCEDURAL_SIZE).contains(&size) {
            return Err(format!("texture size must be within [2, {MAX_PROCEDURAL_SIZE}], got {size}"));
        }
        Ok(TextureRef::Procedural { kind, size })
    }
}

impl Serialize for TextureRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TextureRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextureRefs {
    pub base: TextureRef,
    pub erosion: TextureRef,
}

impl Default for TextureRefs {
    fn default() -> Self {
        Self {
            base: TextureRef::procedural(NoiseKind::PerlinWorley, 64),
            erosion: TextureRef::procedural(NoiseKind::CurlyAlligator, 32),
        }
    }
}

/// Bakes a procedural volume without touching the cache.
pub fn bake_procedural(kind: NoiseKind, size: usize, seed: u64) -> Result<VolumeTexture> {
    let dims = [size; 3];
    let color_id = kind_name(kind);
    match kind {
        NoiseKind::Perlin | NoiseKind::Worley => {
            let spec = NoiseSpec::new(kind, 4, 0).with_octaves(4);
            bake_volume(&spec, dims, seed, color_id)
        }
        NoiseKind::PerlinWorley | NoiseKind::CurlyAlligator => {
            let spec = NoiseSpec::new(kind, 4, 0);
            let generator: &dyn VolumeGenerator = &spec;
            bake_volume(generator, dims, seed, color_id)
        }
    }
}

type CacheKey = (TextureRef, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<VolumeTexture>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<VolumeTexture>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Loads or bakes a texture, reusing earlier results within the process.
/// Relative file paths resolve against `base_dir` when given.
pub fn resolve(reference: &TextureRef, seed: u64, base_dir: Option<&Path>) -> Result<Arc<VolumeTexture>> {
    let reference = match (reference, base_dir) {
        (TextureRef::File(p), Some(dir)) if p.is_relative() => TextureRef::File(dir.join(p)),
        _ => reference.clone(),
    };
    // file textures carry their own seed
    let seed = match reference {
        TextureRef::Procedural { .. } => seed,
        TextureRef::File(_) => 0,
    };
    let key = (reference, seed);
    if let Some(tex) = cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(tex.clone());
    }
    // Baking happens outside the lock; a concurrent miss bakes twice, which is
    // harmless because the result is deterministic.
    let tex = Arc::new(match &key.0 {
        TextureRef::Procedural { kind, size } => bake_procedural(*kind, *size, seed)?,
        TextureRef::File(path) => read_vtex(path)?.1,
    });
    cache()
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .entry(key)
        .or_insert(tex.clone());
    Ok(tex)
}

pub fn resolve_pair(refs: &TextureRefs, seed: u64, base_dir: Option<&Path>) -> Result<CloudTextures> {
    Ok(CloudTextures {
        base: resolve(&refs.base, seed, base_dir)?,
        erosion: resolve(&refs.erosion, seed.wrapping_add(1), base_dir)?,
    })
}

/// Checks that a texture can act as base or erosion input.
pub(crate) fn check_channels(tex: &VolumeTexture, role: &'static str) -> Result<()> {
    if tex.channels() != 4 && tex.channels() != 1 {
        return Err(Error::param(role, format!("expected 1 or 4 channels, got {}", tex.channels())));
    }
    Ok(())
}
