//! Single-scattering ray marcher.
//!
//! Primary rays take `view_samples_base * view_scale` equidistant samples over
//! the part of the ray inside the cloud layer and stop once transmittance drops
//! below the threshold. Every sample with nonzero extinction fires a shadow ray
//! toward the sun that runs to the layer exit.

use std::io::{self, Read, Write};

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CloudField, CloudLayer, LayerGeometry};
use crate::optics::{powder, PhaseEvaluator};

/// Rays are clipped to this length; horizontal rays in a planar slab would
/// otherwise never leave it.
pub const MAX_TRACE_DISTANCE_KM: f64 = 150.0;

const SUN_ANGULAR_RADIUS_RAD: f64 = 0.004_65;
const SUN_DISK_SCALE: f64 = 40.0;

// ---------------------------------------------------------------------------
// parameters and scene pieces

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarchParams {
    pub view_samples_base: u32,
    pub view_scale: f64,
    pub shadow_samples_base: u32,
    pub shadow_scale: f64,
    /// Primary rays stop once transmittance falls below this.
    pub transmittance_threshold: f64,
    /// Shadow rays this long or longer use the full shadow sample budget;
    /// shorter ones use proportionally fewer samples.
    pub shadow_max_distance_km: f64,
}

impl Default for MarchParams {
    fn default() -> Self {
        Self {
            view_samples_base: 768,
            view_scale: 4.0,
            shadow_samples_base: 80,
            shadow_scale: 4.0,
            transmittance_threshold: 0.005,
            shadow_max_distance_km: 80.0,
        }
    }
}

impl MarchParams {
    pub fn view_samples(&self) -> u32 {
        ((self.view_samples_base as f64 * self.view_scale).round() as u32).max(1)
    }

    pub fn shadow_samples(&self) -> u32 {
        ((self.shadow_samples_base as f64 * self.shadow_scale).round() as u32).max(1)
    }

    /// Samples used by a shadow ray of `length_km`.
    pub fn shadow_samples_for(&self, length_km: f64) -> u32 {
        let max = self.shadow_samples();
        let n = (max as f64 * length_km / self.shadow_max_distance_km).ceil();
        (n as u32).clamp(1, max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.view_samples_base == 0 || !(self.view_scale > 0.0) {
            return Err(Error::param("view_samples", "count and scale must be positive"));
        }
        if self.shadow_samples_base == 0 || !(self.shadow_scale > 0.0) {
            return Err(Error::param("shadow_samples", "count and scale must be positive"));
        }
        if !(0.0..0.5).contains(&self.transmittance_threshold) {
            return Err(Error::param("transmittance_threshold", "must lie in [0, 0.5)"));
        }
        if !(self.shadow_max_distance_km > 0.0) {
            return Err(Error::param("shadow_max_distance_km", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sun {
    /// Unit vector pointing toward the sun.
    pub direction: DVec3,
    pub irradiance: DVec3,
}

impl Sun {
    /// Azimuth is measured from +x toward +y; elevation above the xy plane.
    pub fn from_angles(elevation_deg: f64, azimuth_deg: f64, irradiance: DVec3) -> Self {
        let (el, az) = (elevation_deg.to_radians(), azimuth_deg.to_radians());
        let direction = DVec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
        Self {
            direction: direction.normalize(),
            irradiance,
        }
    }

    pub fn elevation_deg(&self) -> f64 {
        self.direction.z.clamp(-1.0, 1.0).asin().to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: DVec3,
    forward: DVec3,
    up: DVec3,
    right: DVec3,
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    /// `up` only needs to be roughly perpendicular to `forward`; the basis is
    /// re-orthonormalized.
    pub fn new(position: DVec3, forward: DVec3, up: DVec3, fov_deg: f64, width: u32, height: u32) -> Result<Self> {
        let forward = forward.try_normalize().ok_or_else(|| Error::param("forward", "zero vector"))?;
        let right = forward
            .cross(up)
            .try_normalize()
            .ok_or_else(|| Error::param("up", "parallel to forward"))?;
        let up = right.cross(forward);
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::param("fov_deg", format!("must lie in (0, 180), got {fov_deg}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::param("resolution", "width and height must be >= 1"));
        }
        Ok(Self {
            position,
            forward,
            up,
            right,
            fov_deg,
            width,
            height,
        })
    }

    pub fn forward(&self) -> DVec3 {
        self.forward
    }

    pub fn up(&self) -> DVec3 {
        self.up
    }

    pub fn with_resolution(mut self, width: u32, height: u32) -> Self {
        self.width = width.max(1);
        self.height = height.max(1);
        self
    }

    pub fn ray(&self, px: u32, py: u32) -> Ray {
        let tan = (self.fov_deg.to_radians() * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * (px as f64 + 0.5) / self.width as f64 - 1.0) * aspect * tan;
        let sy = (1.0 - 2.0 * (py as f64 + 0.5) / self.height as f64) * tan;
        Ray::new(self.position, self.forward + self.right * sx + self.up * sy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    pub dir: DVec3,
}

impl Ray {
    pub fn new(origin: DVec3, dir: DVec3) -> Self {
        Self {
            origin,
            dir: dir.normalize(),
        }
    }

    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + self.dir * t
    }
}

// ---------------------------------------------------------------------------
// layer intersection

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// At most two disjoint spans, in ray order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Spans {
    items: [Option<Interval>; 2],
}

impl Spans {
    fn push(&mut self, iv: Interval) {
        if iv.is_empty() {
            return;
        }
        if self.items[0].is_none() {
            self.items[0] = Some(iv);
        } else {
            self.items[1] = Some(iv);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Interval> + '_ {
        self.items.iter().flatten().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.items[0].is_none()
    }

    pub fn total_len(&self) -> f64 {
        self.iter().map(|iv| iv.len()).sum()
    }

    fn clipped(&self, max: f64) -> Spans {
        let mut out = Spans::default();
        for iv in self.iter() {
            out.push(Interval {
                start: iv.start.min(max),
                end: iv.end.min(max),
            });
        }
        out
    }
}

fn sphere_hits(origin: DVec3, dir: DVec3, center: DVec3, radius: f64) -> Option<(f64, f64)> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.length_squared() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // numerically stable pair
    let q = if b > 0.0 { -b - s } else { -b + s };
    let (t0, t1) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
    Some((t0.min(t1), t0.max(t1)))
}

/// Parts of `ray` (for `t >= 0`) inside the layer. Ends may be infinite for
/// planar slabs.
pub fn layer_intersect(ray: &Ray, layer: &CloudLayer) -> Spans {
    let mut spans = Spans::default();
    match layer.geometry {
        LayerGeometry::PlanarSlab => {
            let (lo, hi) = (layer.bottom_altitude_km, layer.top_altitude_km());
            let (oz, dz) = (ray.origin.z, ray.dir.z);
            if dz.abs() < 1e-12 {
                if oz >= lo && oz <= hi {
                    spans.push(Interval { start: 0.0, end: f64::INFINITY });
                }
            } else {
                let (a, b) = ((lo - oz) / dz, (hi - oz) / dz);
                let (t0, t1) = (a.min(b), a.max(b));
                spans.push(Interval { start: t0.max(0.0), end: t1 });
            }
        }
        LayerGeometry::SphericalShell => {
            let center = layer.planet_center();
            let inner = layer.planet_radius_km + layer.bottom_altitude_km;
            let outer = layer.planet_radius_km + layer.top_altitude_km();
            let Some((t0, t1)) = sphere_hits(ray.origin, ray.dir, center, outer) else {
                return spans;
            };
            let (t0, t1) = (t0.max(0.0), t1);
            if t1 <= t0 {
                return spans;
            }
            match sphere_hits(ray.origin, ray.dir, center, inner) {
                Some((s0, s1)) if s1 > t0 && s0 < t1 => {
                    spans.push(Interval { start: t0, end: s0.min(t1) });
                    spans.push(Interval { start: s1.max(t0), end: t1 });
                }
                _ => spans.push(Interval { start: t0, end: t1 }),
            }
        }
    }
    spans
}

// ---------------------------------------------------------------------------
// media

/// Anything with an extinction field confined to a cloud layer.
pub trait Medium: Sync {
    fn layer(&self) -> &CloudLayer;
    /// km^-1
    fn extinction(&self, pos: DVec3) -> f64;
}

impl Medium for CloudField {
    fn layer(&self) -> &CloudLayer {
        &self.layer
    }

    #[inline]
    fn extinction(&self, pos: DVec3) -> f64 {
        self.sample(pos).extinction
    }
}

/// Work counters. Deterministic for a given scene, unlike wall time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarchStats {
    pub marches: u64,
    pub view_samples: u64,
    pub shadow_rays: u64,
    pub shadow_samples: u64,
}

impl MarchStats {
    pub fn extinction_samples(&self) -> u64 {
        self.view_samples + self.shadow_samples
    }

    pub fn merge(mut self, other: MarchStats) -> MarchStats {
        self.marches += other.marches;
        self.view_samples += other.view_samples;
        self.shadow_rays += other.shadow_rays;
        self.shadow_samples += other.shadow_samples;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowResult {
    pub transmittance: f64,
    pub optical_depth: f64,
}

/// Transmittance from `pos` to the layer exit along `sun_dir`, midpoint rule.
pub fn shadow_march<M: Medium + ?Sized>(
    pos: DVec3,
    sun_dir: DVec3,
    medium: &M,
    params: &MarchParams,
    stats: &mut MarchStats,
) -> ShadowResult {
    let ray = Ray { origin: pos, dir: sun_dir };
    let exit = layer_intersect(&ray, medium.layer())
        .iter()
        .find(|iv| iv.start <= 1e-9)
        .map(|iv| iv.end.min(MAX_TRACE_DISTANCE_KM))
        .unwrap_or(0.0);
    stats.shadow_rays += 1;
    if exit <= 0.0 {
        return ShadowResult { transmittance: 1.0, optical_depth: 0.0 };
    }
    let n = params.shadow_samples_for(exit);
    let ds = exit / n as f64;
    let mut depth = 0.0;
    for i in 0..n {
        depth += medium.extinction(ray.at((i as f64 + 0.5) * ds)) * ds;
    }
    stats.shadow_samples += n as u64;
    ShadowResult {
        transmittance: (-depth).exp(),
        optical_depth: depth,
    }
}

/// Light reaching the cloud.
#[derive(Debug, Clone, Copy)]
pub struct Lighting {
    pub sun: Sun,
    pub phase: PhaseEvaluator,
    /// Single-scattering albedo.
    pub albedo: f64,
    /// Ambient radiance at the top of the layer; halves toward the bottom.
    pub ambient: DVec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchResult {
    pub radiance: DVec3,
    pub transmittance: f64,
}

/// Marches one primary ray. `jitter` in `[0, 1)` offsets every sample by the
/// same fraction of a step; 0.5 gives the midpoint rule.
pub fn march<M: Medium + ?Sized>(
    ray: &Ray,
    medium: &M,
    lighting: &Lighting,
    params: &MarchParams,
    jitter: f64,
    stats: &mut MarchStats,
) -> MarchResult {
    stats.marches += 1;
    let spans = layer_intersect(ray, medium.layer()).clipped(MAX_TRACE_DISTANCE_KM);
    let total = spans.total_len();
    let mut transmittance = 1.0;
    let mut radiance = DVec3::ZERO;
    if spans.is_empty() || total <= 0.0 {
        return MarchResult { radiance, transmittance };
    }

    let n = params.view_samples();
    let ds = total / n as f64;
    let cos_theta = ray.dir.dot(lighting.sun.direction);
    let phase = lighting.phase.eval(cos_theta);
    let layer = medium.layer();

    let mut spans_iter = spans.iter();
    let mut current = spans_iter.next();
    let mut offset = 0.0; // arc length before `current`
    for k in 0..n {
        let s = (k as f64 + jitter) * ds;
        while let Some(iv) = current {
            if s < offset + iv.len() {
                break;
            }
            offset += iv.len();
            current = spans_iter.next();
        }
        let Some(iv) = current else { break };
        let pos = ray.at(iv.start + (s - offset));

        stats.view_samples += 1;
        let sigma = medium.extinction(pos);
        if sigma <= 0.0 {
            continue;
        }
        transmittance *= (-sigma * ds).exp();

        let shadow = shadow_march(pos, lighting.sun.direction, medium, params, stats);
        let z = layer.normalized_height(pos).clamp(0.0, 1.0);
        let sun_term = lighting.sun.irradiance * (shadow.transmittance * phase * powder(shadow.optical_depth));
        let ambient_term = lighting.ambient * (0.5 + 0.5 * z);
        radiance += (sun_term + ambient_term) * (transmittance * sigma * ds * lighting.albedo);

        if transmittance < params.transmittance_threshold {
            break;
        }
    }
    MarchResult { radiance, transmittance }
}

// ---------------------------------------------------------------------------
// sky

/// Analytic sky gradient and sun disk used as the background.
#[derive(Debug, Clone, Copy)]
pub struct Sky {
    pub zenith: DVec3,
    pub horizon: DVec3,
    pub ground: DVec3,
    pub sun: Sun,
}

impl Sky {
    pub fn for_sun(sun: Sun) -> Self {
        let day = 0.25 + 0.75 * sun.direction.z.max(0.0).sqrt();
        let scale = sun.irradiance * (0.1 * day);
        Self {
            zenith: scale * DVec3::new(0.25, 0.45, 0.9),
            horizon: scale * DVec3::new(0.75, 0.82, 0.95),
            ground: scale * DVec3::new(0.18, 0.17, 0.16),
            sun,
        }
    }

    pub fn gradient(&self, dir: DVec3) -> DVec3 {
        if dir.z < 0.0 {
            return self.ground;
        }
        self.horizon.lerp(self.zenith, dir.z.sqrt())
    }

    pub fn background(&self, dir: DVec3) -> DVec3 {
        let mut c = self.gradient(dir);
        if dir.dot(self.sun.direction) > SUN_ANGULAR_RADIUS_RAD.cos() && dir.z >= 0.0 {
            c += self.sun.irradiance * SUN_DISK_SCALE;
        }
        c
    }

    /// Luminance-weighted ambient radiance for in-cloud samples.
    pub fn ambient(&self, strength: f64) -> DVec3 {
        self.zenith * strength
    }
}

// ---------------------------------------------------------------------------
// images

#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    pub width: u32,
    pub height: u32,
    /// Interleaved RGB.
    pub rgb: Vec<f32>,
    pub transmittance: Option<Vec<f32>>,
}

#[inline]
pub fn luminance(rgb: [f32; 3]) -> f64 {
    0.2126 * rgb[0] as f64 + 0.7152 * rgb[1] as f64 + 0.0722 * rgb[2] as f64
}

impl HdrImage {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            rgb: vec![0.0; width as usize * height as usize * 3],
            transmittance: None,
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.rgb.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    pub fn luminances(&self) -> Vec<f64> {
        self.pixels().map(luminance).collect()
    }

    /// Dump format: `u32` width, `u32` height, then `f32` RGB triples, all
    /// little-endian.
    pub fn write_raw<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&self.height.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.rgb.len() * 4);
        for v in &self.rgb {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let width = u32::from_le_bytes([head[0], head[1], head[2], head[3]]);
        let height = u32::from_le_bytes([head[4], head[5], head[6], head[7]]);
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let expected = width as usize * height as usize * 12;
        if body.len() != expected {
            return Err(Error::Format(format!(
                "hdr dump of {width}x{height} needs {expected} bytes of pixels, found {}",
                body.len()
            )));
        }
        let rgb = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Self { width, height, rgb, transmittance: None })
    }
}

/// 8-bit interleaved RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl Rgb8Image {
    pub fn to_png(&self) -> Result<Vec<u8>> {
        crate::png_io::encode_rgb8(self.width, self.height, &self.data)
    }
}

/// Exposure, Reinhard `x / (1 + x)`, then gamma 2.2.
pub fn tone_map(hdr: &HdrImage, exposure: f64) -> Result<Rgb8Image> {
    if !(exposure > 0.0) {
        return Err(Error::param("exposure", format!("must be > 0, got {exposure}")));
    }
    let data = hdr
        .rgb
        .iter()
        .map(|&v| {
            let x = (v as f64 * exposure).max(0.0);
            let mapped = (x / (1.0 + x)).powf(1.0 / 2.2);
            (mapped * 255.0).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    Ok(Rgb8Image {
        width: hdr.width,
        height: hdr.height,
        data,
    })
}

/// Per-pixel, per-channel absolute difference.
pub fn image_diff(a: &HdrImage, b: &HdrImage) -> Result<HdrImage> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::param(
            "image",
            format!("dimension mismatch: {}x{} vs {}x{}", a.width, a.height, b.width, b.height),
        ));
    }
    Ok(HdrImage {
        width: a.width,
        height: a.height,
        rgb: a.rgb.iter().zip(&b.rgb).map(|(x, y)| (x - y).abs()).collect(),
        transmittance: None,
    })
}

// ---------------------------------------------------------------------------
// rendering

/// Fixed per-pixel sample offset in `[0, 1)`.
#[inline]
pub fn pixel_jitter(x: u32, y: u32) -> f64 {
    let mut h = (x as u64) << 32 | y as u64;
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Everything a frame needs besides the medium.
#[derive(Debug, Clone, Copy)]
pub struct FrameSetup {
    pub camera: Camera,
    pub lighting: Lighting,
    pub sky: Sky,
    pub params: MarchParams,
}

fn render_row<M: Medium + ?Sized>(medium: &M, setup: &FrameSetup, y: u32, rgb: &mut [f32], trans: &mut [f32]) -> MarchStats {
    let mut stats = MarchStats::default();
    for x in 0..setup.camera.width {
        let ray = setup.camera.ray(x, y);
        let r = march(&ray, medium, &setup.lighting, &setup.params, pixel_jitter(x, y), &mut stats);
        let c = r.radiance + setup.sky.background(ray.dir) * r.transmittance;
        let i = x as usize * 3;
        rgb[i] = c.x as f32;
        rgb[i + 1] = c.y as f32;
        rgb[i + 2] = c.z as f32;
        trans[x as usize] = r.transmittance as f32;
    }
    stats
}

/// One march per pixel through a pinhole camera, with the background
/// composited under the cloud transmittance. Rows render in parallel; the
/// result does not depend on scheduling.
pub fn render<M: Medium + ?Sized>(medium: &M, setup: &FrameSetup) -> (HdrImage, MarchStats) {
    let (w, h) = (setup.camera.width as usize, setup.camera.height as usize);
    let mut rgb = vec![0f32; w * h * 3];
    let mut trans = vec![0f32; w * h];

    #[cfg(feature = "parallel")]
    let stats = {
        use rayon::prelude::*;
        rgb.par_chunks_mut(w * 3)
            .zip(trans.par_chunks_mut(w))
            .enumerate()
            .map(|(y, (row, t))| render_row(medium, setup, y as u32, row, t))
            .reduce(MarchStats::default, MarchStats::merge)
    };
    #[cfg(not(feature = "parallel"))]
    let stats = rgb
        .chunks_mut(w * 3)
        .zip(trans.chunks_mut(w))
        .enumerate()
        .map(|(y, (row, t))| render_row(medium, setup, y as u32, row, t))
        .fold(MarchStats::default(), MarchStats::merge);

    let image = HdrImage {
        width: setup.camera.width,
        height: setup.camera.height,
        rgb,
        transmittance: Some(trans),
    };
    (image, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CloudLayer;

    /// Constant extinction between two altitudes of a planar layer.
    struct Slab {
        layer: CloudLayer,
        lo: f64,
        hi: f64,
        sigma: f64,
    }

    impl Medium for Slab {
        fn layer(&self) -> &CloudLayer {
            &self.layer
        }
        fn extinction(&self, pos: DVec3) -> f64 {
            if pos.z > self.lo && pos.z < self.hi {
                self.sigma
            } else {
                0.0
            }
        }
    }

    fn lighting() -> Lighting {
        Lighting {
            sun: Sun::from_angles(45.0, 0.0, DVec3::ONE),
            phase: PhaseEvaluator::Isotropic,
            albedo: 1.0,
            ambient: DVec3::ZERO,
        }
    }

    #[test]
    fn planar_intersections() {
        let layer = CloudLayer::planar(1.0, 4.0);
        let up = Ray::new(DVec3::ZERO, DVec3::Z);
        let spans: Vec<_> = layer_intersect(&up, &layer).iter().collect();
        assert_eq!(spans, vec![Interval { start: 1.0, end: 5.0 }]);
        let flat = Ray::new(DVec3::ZERO, DVec3::X);
        assert!(layer_intersect(&flat, &layer).is_empty());
        let down = Ray::new(DVec3::ZERO, -DVec3::Z);
        assert!(layer_intersect(&down, &layer).is_empty());
    }

    #[test]
    fn spherical_intersections() {
        let layer = CloudLayer::spherical(2.0, 3.0, 100.0);
        let out = Ray::new(layer.planet_center(), DVec3::new(1.0, 2.0, 0.5));
        let spans: Vec<_> = layer_intersect(&out, &layer).iter().collect();
        assert_eq!(spans.len(), 1);
        assert!((spans[0].start - 102.0).abs() < 1e-9);
        assert!((spans[0].len() - 3.0).abs() < 1e-9);

        // grazing chord from outside through the shell and the planet
        let origin = layer.planet_center() + DVec3::new(-200.0, 0.0, 0.0);
        let through = Ray::new(origin, DVec3::X);
        let spans: Vec<_> = layer_intersect(&through, &layer).iter().collect();
        assert_eq!(spans.len(), 2);
        assert!((spans[0].len() - 3.0).abs() < 1e-9);
        assert!((spans[1].len() - 3.0).abs() < 1e-9);

        // dips through the shell without touching the inner sphere
        let origin = layer.planet_center() + DVec3::new(-200.0, 0.0, 103.5);
        let chord = Ray::new(origin, DVec3::X);
        let spans: Vec<_> = layer_intersect(&chord, &layer).iter().collect();
        assert_eq!(spans.len(), 1);
        let half = (105.0f64 * 105.0 - 103.5 * 103.5).sqrt();
        assert!((spans[0].len() - 2.0 * half).abs() < 1e-9);
    }

    #[test]
    fn empty_medium_passes_everything() {
        let slab = Slab { layer: CloudLayer::planar(1.0, 4.0), lo: 0.0, hi: 0.0, sigma: 0.0 };
        let mut stats = MarchStats::default();
        let s = shadow_march(DVec3::new(0.0, 0.0, 2.0), DVec3::Z, &slab, &MarchParams::default(), &mut stats);
        assert_eq!(s.transmittance, 1.0);
        let r = march(&Ray::new(DVec3::ZERO, DVec3::Z), &slab, &lighting(), &MarchParams::default(), 0.5, &mut stats);
        assert_eq!(r.transmittance, 1.0);
        assert_eq!(r.radiance, DVec3::ZERO);
    }

    #[test]
    fn ray_missing_layer() {
        let slab = Slab { layer: CloudLayer::planar(1.0, 4.0), lo: 1.0, hi: 5.0, sigma: 3.0 };
        let mut stats = MarchStats::default();
        let r = march(&Ray::new(DVec3::ZERO, -DVec3::Z), &slab, &lighting(), &MarchParams::default(), 0.5, &mut stats);
        assert_eq!(r.transmittance, 1.0);
        assert_eq!(stats.view_samples, 0);
    }

    #[test]
    fn homogeneous_shadow_matches_analytic() {
        let sigma = 0.04;
        let slab = Slab { layer: CloudLayer::planar(0.0, 90.0), lo: 0.0, hi: 90.0, sigma };
        let params = MarchParams::default();
        let mut stats = MarchStats::default();
        let s = shadow_march(DVec3::new(0.0, 0.0, 5.0), DVec3::Z, &slab, &params, &mut stats);
        assert_eq!(stats.shadow_samples, 320);
        let exact = (-sigma * 85.0f64).exp();
        assert!((s.transmittance - exact).abs() / exact < 0.01);
    }

    #[test]
    fn shadow_monotone_in_density() {
        let params = MarchParams::default();
        let layer = CloudLayer::planar(0.0, 4.0);
        let mut prev = 1.0;
        for sigma in [0.0, 0.1, 0.5, 2.0] {
            let slab = Slab { layer, lo: 1.0, hi: 3.0, sigma };
            let mut stats = MarchStats::default();
            let t = shadow_march(DVec3::new(0.0, 0.0, 0.5), DVec3::new(0.3, 0.0, 1.0).normalize(), &slab, &params, &mut stats);
            assert!(t.transmittance <= prev);
            prev = t.transmittance;
        }
    }

    #[test]
    fn shadow_sample_budget_scales_with_length() {
        let p = MarchParams::default();
        assert_eq!(p.shadow_samples_for(100.0), 320);
        assert_eq!(p.shadow_samples_for(80.0), 320);
        assert_eq!(p.shadow_samples_for(40.0), 160);
        assert_eq!(p.shadow_samples_for(10.0), 40);
        assert_eq!(p.shadow_samples_for(1e-6), 1);
        assert_eq!(p.view_samples(), 3072);
    }

    #[test]
    fn slab_radiance_respects_energy_bound() {
        let slab = Slab { layer: CloudLayer::planar(1.0, 4.0), lo: 1.0, hi: 5.0, sigma: 2.0 };
        let light = lighting();
        let mut stats = MarchStats::default();
        let r = march(&Ray::new(DVec3::ZERO, DVec3::new(0.2, 0.1, 1.0)), &slab, &light, &MarchParams::default(), 0.5, &mut stats);
        let bound = light.phase.max_value();
        assert!(r.radiance.max_element() <= bound + 1e-12);
        assert!(r.radiance.min_element() > 0.0);
    }

    #[test]
    fn tone_map_properties() {
        let mut hdr = HdrImage::new(4, 1);
        let zero = tone_map(&hdr, 1.0).unwrap();
        assert!(zero.data.iter().all(|&v| v == 0));
        hdr.rgb = vec![0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e6, 3.0, 3.0, 3.0];
        let out = tone_map(&hdr, 1.0).unwrap();
        let brighter = HdrImage { rgb: hdr.rgb.iter().map(|v| v * 1.5).collect(), ..hdr.clone() };
        let out2 = tone_map(&brighter, 1.0).unwrap();
        assert!(out.data.iter().zip(&out2.data).all(|(a, b)| b >= a));
        assert_eq!(out.data[8], 255);
        assert!(tone_map(&hdr, 0.0).is_err());
    }

    #[test]
    fn diff_properties() {
        let a = HdrImage { width: 2, height: 1, rgb: vec![1.0, 2.0, 3.0, 0.5, 0.5, 0.5], transmittance: None };
        let b = HdrImage { width: 2, height: 1, rgb: vec![0.0, 2.5, 3.0, 0.5, 1.5, 0.0], transmittance: None };
        assert!(image_diff(&a, &a).unwrap().rgb.iter().all(|&v| v == 0.0));
        assert_eq!(image_diff(&a, &b).unwrap(), image_diff(&b, &a).unwrap());
        let c = HdrImage::new(1, 2);
        assert!(image_diff(&a, &c).is_err());
    }

    #[test]
    fn hdr_dump_round_trip() {
        let img = HdrImage { width: 2, height: 1, rgb: vec![1.0, 2.0, 3.0, 0.25, 0.5, 1e9], transmittance: None };
        let mut buf = Vec::new();
        img.write_raw(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 24);
        assert_eq!(&buf[..4], &2u32.to_le_bytes());
        assert_eq!(HdrImage::read_raw(&buf[..]).unwrap(), img);
        assert!(HdrImage::read_raw(&buf[..20]).is_err());
    }

    #[test]
    fn camera_basis_is_orthonormal() {
        let cam = Camera::new(DVec3::ZERO, DVec3::new(0.0, 1.0, 0.3), DVec3::Z, 60.0, 16, 9).unwrap();
        assert!((cam.forward().length() - 1.0).abs() < 1e-12);
        assert!((cam.up().length() - 1.0).abs() < 1e-12);
        assert!(cam.forward().dot(cam.up()).abs() < 1e-12);
        assert!(Camera::new(DVec3::ZERO, DVec3::Z, DVec3::Z, 60.0, 16, 9).is_err());
    }

    #[test]
    fn sun_from_angles() {
        let sun = Sun::from_angles(30.0, 90.0, DVec3::ONE);
        assert!((sun.direction.length() - 1.0).abs() < 1e-12);
        assert!((sun.elevation_deg() - 30.0).abs() < 1e-9);
        assert!(sun.direction.x.abs() < 1e-12);
    }
}
