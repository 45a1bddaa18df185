//! Frame-timing harness.
//!
//! Each (scene, scale pair, sun elevation) combination renders `frames`
//! times; the first frame is a warm-up and is left out of the timing
//! statistics. Sample counters come from the renderer's instrumentation and
//! are identical for every frame of a deterministic scene.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::march::MarchStats;
use crate::optics::PhaseModel;
use crate::scene::SceneConfig;

pub const MIN_FRAMES: u32 = 4;
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub frames: u32,
    /// (view scale, shadow scale) pairs.
    pub scales: Vec<(f64, f64)>,
    /// Overrides the scene's sun elevation when non-empty.
    pub sun_elevations: Vec<f64>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            frames: MIN_FRAMES,
            scales: vec![(4.0, 4.0), (2.0, 2.0)],
            sun_elevations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub scene: String,
    pub phase_model: String,
    pub width: u32,
    pub height: u32,
    pub view_scale: f64,
    pub shadow_scale: f64,
    pub sun_elevation_deg: f64,
    /// Timed frames, warm-up excluded.
    pub frames: u32,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    /// Per frame.
    pub extinction_samples: u64,
    pub view_samples: u64,
    pub shadow_samples: u64,
    pub shadow_rays: u64,
    pub marches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: u32,
    pub threads: usize,
    pub entries: Vec<BenchEntry>,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn phase_label(m: &PhaseModel) -> String {
    match m {
        PhaseModel::Tthg { g1, g2, w } => format!("tthg(g1={g1}, g2={g2}, w={w})"),
        PhaseModel::Hgd { d } => format!("hgd(d={d})"),
    }
}

fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Benchmarks one named scene under every option combination.
pub fn bench_scene(name: &str, scene: &SceneConfig, opts: &BenchOptions, base_dir: Option<&Path>) -> Result<Vec<BenchEntry>> {
    if opts.frames < MIN_FRAMES {
        return Err(Error::param("frames", format!("need at least {MIN_FRAMES}, got {}", opts.frames)));
    }
    if opts.scales.is_empty() {
        return Err(Error::param("scales", "need at least one scale pair"));
    }
    let elevations = if opts.sun_elevations.is_empty() {
        vec![scene.sun.elevation_deg]
    } else {
        opts.sun_elevations.clone()
    };

    let mut entries = Vec::new();
    for &elevation in &elevations {
        for &(view_scale, shadow_scale) in &opts.scales {
            let mut s = scene.clone();
            s.sun.elevation_deg = elevation;
            s.march_params.view_scale = view_scale;
            s.march_params.shadow_scale = shadow_scale;
            let prepared = s.prepare(base_dir)?;

            let mut times = Vec::new();
            let mut stats: Option<MarchStats> = None;
            for frame in 0..opts.frames {
                let out = prepared.render();
                if let Some(prev) = stats {
                    if prev != out.stats {
                        return Err(Error::Format(format!(
                            "sample counters changed between frames of {name}: {prev:?} vs {:?}",
                            out.stats
                        )));
                    }
                }
                stats = Some(out.stats);
                if frame > 0 {
                    times.push(out.elapsed.as_secs_f64() * 1e3);
                }
            }
            let stats = stats.unwrap_or_default();
            let mut sorted = times.clone();
            sorted.sort_by(f64::total_cmp);
            entries.push(BenchEntry {
                scene: name.to_string(),
                phase_model: phase_label(&s.phase_model),
                width: s.camera.width,
                height: s.camera.height,
                view_scale,
                shadow_scale,
                sun_elevation_deg: elevation,
                frames: times.len() as u32,
                mean_ms: times.iter().sum::<f64>() / times.len() as f64,
                p50_ms: percentile(&sorted, 50.0),
                p95_ms: percentile(&sorted, 95.0),
                min_ms: sorted[0],
                max_ms: sorted[sorted.len() - 1],
                extinction_samples: stats.extinction_samples(),
                view_samples: stats.view_samples,
                shadow_samples: stats.shadow_samples,
                shadow_rays: stats.shadow_rays,
                marches: stats.marches,
            });
        }
    }
    Ok(entries)
}

pub fn run_bench(scenes: &[(String, SceneConfig)], opts: &BenchOptions, base_dir: Option<&Path>) -> Result<BenchReport> {
    let mut entries = Vec::new();
    for (name, scene) in scenes {
        entries.extend(bench_scene(name, scene, opts, base_dir)?);
    }
    Ok(BenchReport {
        version: REPORT_VERSION,
        threads: threads(),
        entries,
    })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text table, one row per entry.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:<28} {:>9} {:>5} {:>6} {:>6} {:>9} {:>9} {:>9} {:>14} {:>14}",
            "scene", "phase", "res", "scale", "sun", "frames", "mean ms", "p50 ms", "p95 ms", "ext samples", "shadow samples"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<14} {:<28} {:>9} {:>5} {:>6} {:>6} {:>9.1} {:>9.1} {:>9.1} {:>14} {:>14}",
                e.scene,
                e.phase_model,
                format!("{}x{}", e.width, e.height),
                format!("{}/{}", e.view_scale, e.shadow_scale),
                e.sun_elevation_deg,
                e.frames,
                e.mean_ms,
                e.p50_ms,
                e.p95_ms,
                e.extinction_samples,
                e.shadow_samples
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(percentile(&v, 50.0), 5.0);
        assert_eq!(percentile(&v, 95.0), 10.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&[3.0], 95.0), 3.0);
    }

    #[test]
    fn rejects_too_few_frames() {
        let opts = BenchOptions { frames: 3, ..Default::default() };
        assert!(bench_scene("x", &SceneConfig::default(), &opts, None).is_err());
    }
}
