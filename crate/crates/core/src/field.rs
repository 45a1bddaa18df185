//! Cloud density field.
//!
//! A world position and time map to an extinction coefficient in four steps:
//! a base shape carved out of the Perlin-Worley texture by one of three
//! coverage methods, a vertical density profile, erosion by the curly-alligator
//! texture, and scaling by `sigma_max`. Both noise layers drift with the wind;
//! the erosion layer moves `erosion_motion_scale` times as fast.
//!
//! `P3` scales the noise before carving (clamped to 1 for the carve methods),
//! `P4` is the coverage amount in `[0, 1.5]`: 0 is an empty sky and values
//! above 1 over-saturate the layer.

use std::sync::Arc;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{world_to_texture_unchecked, VolumeTexture};

const REMAP_EPS: f64 = 1e-6;

/// Linear map of `v` from `[l0, h0]` onto `[l1, h1]`, unclamped. A degenerate
/// source interval returns `l1`.
#[inline]
pub fn remap(v: f64, l0: f64, h0: f64, l1: f64, h1: f64) -> f64 {
    let span = h0 - l0;
    if span.abs() <= REMAP_EPS {
        return l1;
    }
    l1 + (v - l0) * (h1 - l1) / span
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

#[inline]
fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

// ---------------------------------------------------------------------------
// layer geometry

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerGeometry {
    /// Horizontal slab; altitude is the z coordinate.
    PlanarSlab,
    /// Shell around a planet centered at `(0, 0, -planet_radius_km)`.
    SphericalShell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudLayer {
    pub geometry: LayerGeometry,
    pub bottom_altitude_km: f64,
    pub thickness_km: f64,
    #[serde(default = "default_planet_radius")]
    pub planet_radius_km: f64,
}

fn default_planet_radius() -> f64 {
    6360.0
}

impl CloudLayer {
    pub fn planar(bottom_altitude_km: f64, thickness_km: f64) -> Self {
        Self {
            geometry: LayerGeometry::PlanarSlab,
            bottom_altitude_km,
            thickness_km,
            planet_radius_km: default_planet_radius(),
        }
    }

    pub fn spherical(bottom_altitude_km: f64, thickness_km: f64, planet_radius_km: f64) -> Self {
        Self {
            geometry: LayerGeometry::SphericalShell,
            bottom_altitude_km,
            thickness_km,
            planet_radius_km,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness_km > 0.0) {
            return Err(Error::param("thickness_km", "must be > 0"));
        }
        if self.geometry == LayerGeometry::SphericalShell && !(self.planet_radius_km > 0.0) {
            return Err(Error::param("planet_radius_km", "must be > 0 for a spherical shell"));
        }
        Ok(())
    }

    pub fn top_altitude_km(&self) -> f64 {
        self.bottom_altitude_km + self.thickness_km
    }

    pub fn planet_center(&self) -> DVec3 {
        DVec3::new(0.0, 0.0, -self.planet_radius_km)
    }

    /// Height above ground (planar) or above the planet surface (spherical).
    #[inline]
    pub fn altitude(&self, pos: DVec3) -> f64 {
        match self.geometry {
            LayerGeometry::PlanarSlab => pos.z,
            LayerGeometry::SphericalShell => (pos - self.planet_center()).length() - self.planet_radius_km,
        }
    }

    /// Local "up" at `pos`.
    pub fn up(&self, pos: DVec3) -> DVec3 {
        match self.geometry {
            LayerGeometry::PlanarSlab => DVec3::Z,
            LayerGeometry::SphericalShell => (pos - self.planet_center()).normalize_or(DVec3::Z),
        }
    }

    /// Layer-relative height: 0 at the bottom boundary, 1 at the top. Not
    /// clamped; values outside `[0, 1]` are outside the layer.
    #[inline]
    pub fn normalized_height(&self, pos: DVec3) -> f64 {
        (self.altitude(pos) - self.bottom_altitude_km) / self.thickness_km
    }
}

pub fn normalized_height(pos: DVec3, layer: &CloudLayer) -> f64 {
    layer.normalized_height(pos)
}

// ---------------------------------------------------------------------------
// parameters

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMethod {
    /// (i) detail remap of the composite, followed by the coverage carve.
    CompositeRemap,
    /// (ii) coverage carve of the Perlin-Worley composite.
    CoverageCarve,
    /// (iii) chained lerp R -> G -> B -> A, then the carve.
    ChannelLerp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudParams {
    pub method: CoverageMethod,
    #[serde(rename = "P3")]
    pub p3: f64,
    #[serde(rename = "P4")]
    pub p4: f64,
    #[serde(rename = "C_type")]
    pub c_type: f64,
    #[serde(rename = "C_wispy")]
    pub c_wispy: f64,
    #[serde(rename = "C_billowy")]
    pub c_billowy: f64,
    /// Period of the base noise in km.
    pub b_tiling_km: f64,
    /// Period of the erosion noise in km.
    pub e_tiling_km: f64,
    /// World-space frequency multiplier of the base noise.
    pub base_frequency: f64,
    /// World-space frequency multiplier of the erosion noise.
    pub erosion_frequency: f64,
    pub erosion_strength: f64,
    pub wind_kmps: [f64; 3],
    pub erosion_motion_scale: f64,
    /// Peak extinction, km^-1.
    pub sigma_max: f64,
}

impl Default for CloudParams {
    fn default() -> Self {
        Self {
            method: CoverageMethod::ChannelLerp,
            p3: 1.0,
            p4: 0.4,
            c_type: 0.5,
            c_wispy: 0.25,
            c_billowy: 0.1,
            b_tiling_km: 30.0,
            e_tiling_km: 3.8,
            base_frequency: 1.2,
            erosion_frequency: 1.5,
            erosion_strength: 0.6,
            wind_kmps: [0.01, 0.004, 0.0],
            erosion_motion_scale: 2.0,
            sigma_max: 20.0,
        }
    }
}

impl CloudParams {
    pub fn wind(&self) -> DVec3 {
        DVec3::from_array(self.wind_kmps)
    }

    #[inline]
    fn base_coord(&self, pos: DVec3, t: f64) -> DVec3 {
        world_to_texture_unchecked(pos, self.b_tiling_km / self.base_frequency, self.wind() * t)
    }

    #[inline]
    fn erosion_coord(&self, pos: DVec3, t: f64) -> DVec3 {
        world_to_texture_unchecked(
            pos,
            self.e_tiling_km / self.erosion_frequency,
            self.wind() * (t * self.erosion_motion_scale),
        )
    }
}

// ---------------------------------------------------------------------------
// shape

/// Coverage carve: 0 for an empty sky, otherwise the noise remapped so that
/// only values above `1 - P4` survive.
#[inline]
pub fn carve(b: f64, p3: f64, p4: f64) -> f64 {
    if p4 <= REMAP_EPS {
        return 0.0;
    }
    remap(b * p3.min(1.0), 1.0 - p4, 1.0, 0.0, 1.0).clamp(0.0, 1.0)
}

/// Base shape from an already-sampled Perlin-Worley texel.
pub fn base_shape_from_texel(texel: [f64; 4], params: &CloudParams) -> f64 {
    let [r, g, b, a] = texel;
    match params.method {
        CoverageMethod::CompositeRemap => {
            let detail = 0.625 * g + 0.25 * b + 0.125 * a;
            let s = remap(r, detail - 1.0, 1.0, 0.0, 1.0).clamp(0.0, 1.0);
            carve(s, params.p3, params.p4)
        }
        CoverageMethod::CoverageCarve => carve(r, params.p3, params.p4),
        CoverageMethod::ChannelLerp => {
            let m1 = lerp(r, g, params.c_type);
            let m2 = lerp(m1, b, params.c_wispy);
            let m3 = lerp(m2, a, params.c_billowy);
            remap(m3 * params.p3, 1.0 - params.p4, 1.0, 0.0, 1.0).clamp(0.0, 1.0)
        }
    }
}

pub fn base_shape(pos: DVec3, t: f64, params: &CloudParams, base_tex: &VolumeTexture) -> f64 {
    let texel = base_tex.sample_trilinear(params.base_coord(pos, t));
    base_shape_from_texel(texel, params)
}

// Eight-entry piecewise-linear height gradients, (height, density).
const STRATUS_GRADIENT: [(f64, f64); 8] = [
    (0.0, 0.0),
    (0.05, 0.6),
    (0.1, 1.0),
    (0.2, 1.0),
    (0.3, 0.8),
    (0.35, 0.5),
    (0.45, 0.0),
    (1.0, 0.0),
];

const CUMULUS_GRADIENT: [(f64, f64); 8] = [
    (0.0, 0.0),
    (0.05, 0.5),
    (0.15, 1.0),
    (0.4, 1.0),
    (0.6, 0.9),
    (0.7, 0.7),
    (0.8, 0.3),
    (1.0, 0.0),
];

fn piecewise(table: &[(f64, f64); 8], z: f64) -> f64 {
    if z <= table[0].0 {
        return table[0].1;
    }
    for w in table.windows(2) {
        let ((z0, v0), (z1, v1)) = (w[0], w[1]);
        if z <= z1 {
            return lerp(v0, v1, (z - z0) / (z1 - z0));
        }
    }
    table[7].1
}

pub fn vertical_profile(z: f64, c_type: f64) -> f64 {
    let gradient = lerp(
        piecewise(&STRATUS_GRADIENT, z),
        piecewise(&CUMULUS_GRADIENT, z),
        c_type,
    );
    let fade = smoothstep(0.0, 0.07, z) * (1.0 - smoothstep(0.85, 1.0, z));
    (gradient * fade).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// erosion

/// Erosion amount from a curly-alligator texel; B and A weigh 0.3.
#[inline]
pub fn erosion_amount(texel: [f64; 4]) -> f64 {
    let [r, g, b, a] = texel;
    0.25 * r + 0.25 * g + 0.25 * (0.3 * b) + 0.25 * (0.3 * a)
}

#[inline]
pub fn erode_with(base: f64, erosion: f64, strength: f64) -> f64 {
    remap(base, erosion * strength, 1.0, 0.0, 1.0).clamp(0.0, 1.0)
}

pub fn erode(
    base: f64,
    pos: DVec3,
    t: f64,
    params: &CloudParams,
    erosion_tex: &VolumeTexture,
) -> f64 {
    if base <= 0.0 {
        return 0.0;
    }
    let texel = erosion_tex.sample_trilinear(params.erosion_coord(pos, t));
    erode_with(base, erosion_amount(texel), params.erosion_strength)
}

// ---------------------------------------------------------------------------
// extinction

#[derive(Debug, Clone)]
pub struct CloudTextures {
    pub base: Arc<VolumeTexture>,
    pub erosion: Arc<VolumeTexture>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DensitySample {
    /// km^-1
    pub extinction: f64,
    /// Shape after the vertical profile, before erosion.
    pub base_shape: f64,
}

pub fn extinction_at(
    pos: DVec3,
    t: f64,
    params: &CloudParams,
    layer: &CloudLayer,
    textures: &CloudTextures,
) -> DensitySample {
    let z = layer.normalized_height(pos);
    if !(z > 0.0 && z < 1.0) {
        return DensitySample::default();
    }
    let profile = vertical_profile(z, params.c_type);
    if profile <= 0.0 {
        return DensitySample::default();
    }
    let shape = base_shape(pos, t, params, &textures.base) * profile;
    let eroded = erode(shape, pos, t, params, &textures.erosion);
    DensitySample {
        extinction: params.sigma_max * eroded,
        base_shape: shape,
    }
}

/// Fraction of a `resolution^3` grid spanning one base-noise period
/// horizontally and the layer vertically whose extinction exceeds
/// `1e-6 * sigma_max`.
pub fn coverage_fraction(
    params: &CloudParams,
    layer: &CloudLayer,
    textures: &CloudTextures,
    resolution: usize,
) -> Result<f64> {
    if resolution < 16 {
        return Err(Error::param("resolution", format!("must be >= 16, got {resolution}")));
    }
    let period = params.b_tiling_km / params.base_frequency;
    let threshold = 1e-6 * params.sigma_max;
    let n = resolution as f64;
    let mut hits = 0usize;
    for k in 0..resolution {
        let altitude = layer.bottom_altitude_km + (k as f64 + 0.5) / n * layer.thickness_km;
        for j in 0..resolution {
            let y = (j as f64 + 0.5) / n * period;
            for i in 0..resolution {
                let x = (i as f64 + 0.5) / n * period;
                let pos = point_at_altitude(layer, x, y, altitude);
                if extinction_at(pos, 0.0, params, layer, textures).extinction > threshold {
                    hits += 1;
                }
            }
        }
    }
    Ok(hits as f64 / (n * n * n))
}

/// Point with horizontal coordinates `(x, y)` at the given altitude.
pub fn point_at_altitude(layer: &CloudLayer, x: f64, y: f64, altitude: f64) -> DVec3 {
    match layer.geometry {
        LayerGeometry::PlanarSlab => DVec3::new(x, y, altitude),
        LayerGeometry::SphericalShell => {
            let r = layer.planet_radius_km + altitude;
            let z = (r * r - x * x - y * y).max(0.0).sqrt() - layer.planet_radius_km;
            DVec3::new(x, y, z)
        }
    }
}

/// A cloud layer with everything needed to evaluate extinction at a fixed time.
#[derive(Debug, Clone)]
pub struct CloudField {
    pub params: CloudParams,
    pub layer: CloudLayer,
    pub textures: CloudTextures,
    pub time_s: f64,
}

impl CloudField {
    pub fn sample(&self, pos: DVec3) -> DensitySample {
        extinction_at(pos, self.time_s, &self.params, &self.layer, &self.textures)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remap_examples() {
        assert_eq!(remap(0.5, 0.0, 1.0, 0.0, 2.0), 1.0);
        for x in [-3.0, 0.1, 0.77, 12.5] {
            assert!((remap(x, 0.3, 0.9, 0.3, 0.9) - x).abs() < 1e-12);
        }
        // (0.7 - 0.2) / 0.8
        assert!((remap(0.7, 0.2, 1.0, 0.0, 1.0) - 0.625).abs() < 1e-15);
        assert_eq!(remap(0.4, 0.5, 0.5, 0.25, 1.0), 0.25);
    }

    #[test]
    fn normalized_height_planar() {
        let layer = CloudLayer::planar(1.0, 4.0);
        assert_eq!(layer.normalized_height(DVec3::new(7.0, 3.0, 1.0)), 0.0);
        assert_eq!(layer.normalized_height(DVec3::new(0.0, 0.0, 5.0)), 1.0);
        assert_eq!(layer.normalized_height(DVec3::new(0.0, 0.0, 3.0)), 0.5);
    }

    #[test]
    fn normalized_height_spherical() {
        let layer = CloudLayer::spherical(2.0, 3.0, 100.0);
        let bottom = layer.planet_center() + DVec3::X * 102.0;
        let top = layer.planet_center() + DVec3::new(0.0, -1.0, 1.0).normalize() * 105.0;
        assert!(layer.normalized_height(bottom).abs() < 1e-12);
        assert!((layer.normalized_height(top) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn carve_examples() {
        for b in [0.0, 0.3, 0.9, 1.0] {
            assert_eq!(carve(b, 1.0, 0.0), 0.0);
            assert!((carve(b, 1.0, 1.0) - b).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_zero_at_boundaries_and_bounded() {
        for c in [0.0, 0.3, 1.0] {
            assert_eq!(vertical_profile(0.0, c), 0.0);
            assert_eq!(vertical_profile(1.0, c), 0.0);
        }
        for i in 0..=40 {
            for j in 0..=24 {
                let v = vertical_profile(i as f64 / 40.0, j as f64 / 24.0);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn erosion_identities() {
        for b in [0.0, 0.2, 0.8, 1.0] {
            assert_eq!(erode_with(b, 0.6, 0.0), b);
        }
        assert_eq!(erode_with(0.0, 0.65, 1.0), 0.0);
    }

    #[test]
    fn erosion_never_adds() {
        for i in 0..=50 {
            let b = i as f64 / 50.0;
            for j in 0..=13 {
                let e = j as f64 * 0.05;
                for s in [0.0, 0.5, 1.0] {
                    assert!(erode_with(b, e, s) <= b + 1e-15);
                }
            }
        }
    }

    #[test]
    fn channel_lerp_chain() {
        let params = CloudParams {
            method: CoverageMethod::ChannelLerp,
            p3: 1.0,
            p4: 1.0,
            c_type: 1.0,
            c_wispy: 0.0,
            c_billowy: 0.0,
            ..CloudParams::default()
        };
        // full weight on G, remap identity
        assert!((base_shape_from_texel([0.1, 0.7, 0.3, 0.2], &params) - 0.7).abs() < 1e-15);
        let params = CloudParams { c_billowy: 1.0, ..params };
        assert!((base_shape_from_texel([0.1, 0.7, 0.3, 0.2], &params) - 0.2).abs() < 1e-15);
    }
}
