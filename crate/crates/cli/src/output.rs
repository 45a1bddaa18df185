//! Render-to-bytes path shared by the command line and the HTTP service, so
//! both produce identical PNGs for identical scenes.

use std::path::Path;
use std::time::Duration;

use nimbus::march::{image_diff, tone_map, HdrImage};
use nimbus::scene::render_scene;
use nimbus::{Result, SceneConfig};

pub struct Rendered {
    pub png: Vec<u8>,
    pub hdr: HdrImage,
    pub elapsed: Duration,
    pub extinction_samples: u64,
}

pub fn render_png(scene: &SceneConfig, base_dir: Option<&Path>) -> Result<Rendered> {
    let out = render_scene(scene, base_dir)?;
    let png = tone_map(&out.hdr, scene.exposure)?.to_png()?;
    Ok(Rendered {
        png,
        elapsed: out.elapsed,
        extinction_samples: out.stats.extinction_samples(),
        hdr: out.hdr,
    })
}

/// Absolute difference of two renders, tone mapped with the left scene's
/// exposure. Identical scenes give an all-black image.
pub fn diff_png(left: &SceneConfig, right: &SceneConfig, base_dir: Option<&Path>) -> Result<Rendered> {
    let a = render_scene(left, base_dir)?;
    let b = render_scene(right, base_dir)?;
    let diff = image_diff(&a.hdr, &b.hdr)?;
    let png = tone_map(&diff, left.exposure)?.to_png()?;
    Ok(Rendered {
        png,
        hdr: diff,
        elapsed: a.elapsed + b.elapsed,
        extinction_samples: a.stats.extinction_samples() + b.stats.extinction_samples(),
    })
}
