//! Tileable procedural noise.
//!
//! Every generator here is a pure function of `(spec, seed, p)` and is exactly
//! periodic with period 1 on each axis of the unit cube, so baked volumes wrap
//! without seams.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::remap;
use crate::volume::{fast_floor, VolumeTexture};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Perlin,
    Worley,
    PerlinWorley,
    CurlyAlligator,
}

/// Frequency / octave settings for one noise field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Lattice cells per unit period, per axis.
    pub base_frequency: [u32; 3],
    pub octaves: u32,
    pub lacunarity: f64,
    pub gain: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, frequency: u32, seed: u64) -> Self {
        Self {
            kind,
            base_frequency: [frequency; 3],
            octaves: 1,
            lacunarity: 2.0,
            gain: 0.5,
            seed,
        }
    }

    pub fn with_octaves(mut self, octaves: u32) -> Self {
        self.octaves = octaves;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_frequency.contains(&0) {
            return Err(Error::param("base_frequency", "must be >= 1 on every axis"));
        }
        if self.octaves == 0 {
            return Err(Error::param("octaves", "must be >= 1"));
        }
        if !(self.lacunarity > 1.0) {
            return Err(Error::param("lacunarity", "must be > 1"));
        }
        if !(self.gain > 0.0 && self.gain < 1.0) {
            return Err(Error::param("gain", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Lattice frequency of octave `i`. Rounded to whole cells so that every
    /// octave keeps the unit period.
    pub fn octave_frequency(&self, octave: u32) -> [u32; 3] {
        let scale = self.lacunarity.powi(octave as i32);
        self.base_frequency
            .map(|f| ((f as f64 * scale).round() as u32).max(1))
    }
}

// ---------------------------------------------------------------------------
// hashing

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn hash_cell(seed: u64, x: u32, y: u32, z: u32) -> u64 {
    let packed = x as u64 | (y as u64) << 21 | (z as u64) << 42;
    mix64(mix64(seed ^ 0x9e37_79b9_7f4a_7c15) ^ packed)
}

/// Uniform value in `[0, 1)` from 21 bits of `h` starting at `shift`.
#[inline]
fn unit_from_bits(h: u64, shift: u32) -> f64 {
    ((h >> shift) & 0x1f_ffff) as f64 / (1u64 << 21) as f64
}

#[inline]
fn wrap_index(i: f64, period: u32) -> u32 {
    (i as i64).rem_euclid(period as i64) as u32
}

// ---------------------------------------------------------------------------
// Perlin

const GRADIENTS: [[f64; 3]; 12] = [
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
    [1.0, -1.0, 0.0],
    [-1.0, -1.0, 0.0],
    [1.0, 0.0, 1.0],
    [-1.0, 0.0, 1.0],
    [1.0, 0.0, -1.0],
    [-1.0, 0.0, -1.0],
    [0.0, 1.0, 1.0],
    [0.0, -1.0, 1.0],
    [0.0, 1.0, -1.0],
    [0.0, -1.0, -1.0],
];

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

#[inline]
fn grad_dot(seed: u64, cell: [u32; 3], d: [f64; 3]) -> f64 {
    let g = GRADIENTS[(hash_cell(seed, cell[0], cell[1], cell[2]) % 12) as usize];
    g[0] * d[0] + g[1] * d[1] + g[2] * d[2]
}

/// Single-octave gradient noise with `freq` cells per unit period.
pub fn perlin_at(p: DVec3, freq: [u32; 3], seed: u64) -> f64 {
    let x = p.x * freq[0] as f64;
    let y = p.y * freq[1] as f64;
    let z = p.z * freq[2] as f64;
    let (xf, yf, zf) = (fast_floor(x), fast_floor(y), fast_floor(z));
    let (tx, ty, tz) = (x - xf, y - yf, z - zf);

    let x0 = wrap_index(xf, freq[0]);
    let y0 = wrap_index(yf, freq[1]);
    let z0 = wrap_index(zf, freq[2]);
    let x1 = (x0 + 1) % freq[0];
    let y1 = (y0 + 1) % freq[1];
    let z1 = (z0 + 1) % freq[2];

    let n000 = grad_dot(seed, [x0, y0, z0], [tx, ty, tz]);
    let n100 = grad_dot(seed, [x1, y0, z0], [tx - 1.0, ty, tz]);
    let n010 = grad_dot(seed, [x0, y1, z0], [tx, ty - 1.0, tz]);
    let n110 = grad_dot(seed, [x1, y1, z0], [tx - 1.0, ty - 1.0, tz]);
    let n001 = grad_dot(seed, [x0, y0, z1], [tx, ty, tz - 1.0]);
    let n101 = grad_dot(seed, [x1, y0, z1], [tx - 1.0, ty, tz - 1.0]);
    let n011 = grad_dot(seed, [x0, y1, z1], [tx, ty - 1.0, tz - 1.0]);
    let n111 = grad_dot(seed, [x1, y1, z1], [tx - 1.0, ty - 1.0, tz - 1.0]);

    let (u, v, w) = (fade(tx), fade(ty), fade(tz));
    let nx00 = lerp(n000, n100, u);
    let nx10 = lerp(n010, n110, u);
    let nx01 = lerp(n001, n101, u);
    let nx11 = lerp(n011, n111, u);
    let value = lerp(lerp(nx00, nx10, v), lerp(nx01, nx11, v), w);
    value.clamp(-1.0, 1.0)
}

/// Perlin noise at the spec's base frequency, in `[-1, 1]`.
pub fn perlin3(p: DVec3, spec: &NoiseSpec) -> f64 {
    perlin_at(p, spec.base_frequency, spec.seed)
}

// ---------------------------------------------------------------------------
// Worley

#[inline]
fn feature_point(seed: u64, cell: [i64; 3], freq: [u32; 3]) -> DVec3 {
    let wrapped = [
        cell[0].rem_euclid(freq[0] as i64) as u32,
        cell[1].rem_euclid(freq[1] as i64) as u32,
        cell[2].rem_euclid(freq[2] as i64) as u32,
    ];
    let h = hash_cell(seed, wrapped[0], wrapped[1], wrapped[2]);
    DVec3::new(
        cell[0] as f64 + unit_from_bits(h, 0),
        cell[1] as f64 + unit_from_bits(h, 21),
        cell[2] as f64 + unit_from_bits(h, 42),
    )
}

fn nearest_sq(q: DVec3, base: [i64; 3], reach: i64, seed: u64, freq: [u32; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for dz in -reach..=reach {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let cell = [base[0] + dx, base[1] + dy, base[2] + dz];
                let d = feature_point(seed, cell, freq) - q;
                best = best.min(d.length_squared());
            }
        }
    }
    best
}

/// Distance, in cell units, from `p` to the nearest jittered feature point
/// under toroidal wrap.
pub fn worley_f1(p: DVec3, freq: [u32; 3], seed: u64) -> f64 {
    let q = DVec3::new(
        p.x * freq[0] as f64,
        p.y * freq[1] as f64,
        p.z * freq[2] as f64,
    );
    let fl = DVec3::new(fast_floor(q.x), fast_floor(q.y), fast_floor(q.z));
    let base = [fl.x as i64, fl.y as i64, fl.z as i64];
    let frac = q - fl;
    let best = nearest_sq(q, base, 1, seed, freq).sqrt();
    // Anything outside the 3x3x3 block is at least this far away.
    let guard = (frac + DVec3::ONE).min(DVec3::splat(2.0) - frac).min_element();
    if best <= guard {
        best
    } else {
        nearest_sq(q, base, 2, seed, freq).sqrt()
    }
}

/// Inverted cellular noise: `1 - clamp(F1 / sqrt(3), 0, 1)`, in `[0, 1]`.
pub fn worley_at(p: DVec3, freq: [u32; 3], seed: u64) -> f64 {
    1.0 - (worley_f1(p, freq, seed) / 3f64.sqrt()).clamp(0.0, 1.0)
}

pub fn worley3(p: DVec3, spec: &NoiseSpec) -> f64 {
    worley_at(p, spec.base_frequency, spec.seed)
}

// ---------------------------------------------------------------------------
// fractal sums

/// Scalar primitive summed by [`fbm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseOp {
    Perlin,
    Worley,
}

impl BaseOp {
    #[inline]
    pub fn eval(self, p: DVec3, freq: [u32; 3], seed: u64) -> f64 {
        match self {
            BaseOp::Perlin => perlin_at(p, freq, seed),
            BaseOp::Worley => worley_at(p, freq, seed),
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            BaseOp::Perlin => (-1.0, 1.0),
            BaseOp::Worley => (0.0, 1.0),
        }
    }
}

/// Octave sum normalized by the total amplitude, so the result stays in the
/// base op's range. Octave `i` uses seed `spec.seed + i`.
pub fn fbm(op: BaseOp, p: DVec3, spec: &NoiseSpec) -> f64 {
    let mut sum = 0.0;
    let mut norm = 0.0;
    let mut amplitude = 1.0;
    for octave in 0..spec.octaves {
        let freq = spec.octave_frequency(octave);
        sum += amplitude * op.eval(p, freq, spec.seed.wrapping_add(octave as u64));
        norm += amplitude;
        amplitude *= spec.gain;
    }
    sum / norm
}

// ---------------------------------------------------------------------------
// composite textures

const PW_PERLIN_FREQ: u32 = 4;
const PW_PERLIN_OCTAVES: u32 = 5;
const PW_WORLEY_FREQ: u32 = 4;
const PW_WORLEY_OCTAVES: u32 = 3;
// Octave sums cluster near zero; stretch before mapping to [0, 1].
const PW_PERLIN_CONTRAST: f64 = 2.0;

/// Base-shape texture: R is Perlin dilated by Worley, G/B/A are Worley FBM at
/// successively doubled frequencies. All channels in `[0, 1]`.
pub fn perlin_worley_base(p: DVec3, seed: u64) -> [f64; 4] {
    let perlin_spec = NoiseSpec::new(NoiseKind::Perlin, PW_PERLIN_FREQ, seed)
        .with_octaves(PW_PERLIN_OCTAVES);
    let perlin = (fbm(BaseOp::Perlin, p, &perlin_spec) * 0.5 * PW_PERLIN_CONTRAST + 0.5).clamp(0.0, 1.0);

    let worley = |freq: u32, salt: u64| {
        let spec = NoiseSpec::new(NoiseKind::Worley, freq, seed.wrapping_add(salt))
            .with_octaves(PW_WORLEY_OCTAVES);
        fbm(BaseOp::Worley, p, &spec)
    };
    let worley_fbm = worley(PW_WORLEY_FREQ, 101);
    let r = remap(perlin, worley_fbm - 1.0, 1.0, 0.0, 1.0).clamp(0.0, 1.0);
    [
        r,
        worley(PW_WORLEY_FREQ * 2, 211),
        worley(PW_WORLEY_FREQ * 4, 307),
        worley(PW_WORLEY_FREQ * 8, 401),
    ]
}

const CURL_FREQ: u32 = 4;
const CURL_STEP: f64 = 1e-4;
const CURL_ADVECTION: f64 = 0.01;
const CA_BASE_FREQ: u32 = 4;
const CA_RIDGE_EXPONENT: i32 = 2;

/// Curl of a periodic Perlin vector potential. Divergence-free up to the
/// central-difference error.
pub fn curl_noise(p: DVec3, seed: u64) -> DVec3 {
    let freq = [CURL_FREQ; 3];
    let potential = |i: u64, q: DVec3| perlin_at(q, freq, seed.wrapping_add(0x51ed + i));
    let d = |i: u64, axis: DVec3| {
        (potential(i, p + axis * CURL_STEP) - potential(i, p - axis * CURL_STEP))
            / (2.0 * CURL_STEP)
    };
    let (ex, ey, ez) = (DVec3::X, DVec3::Y, DVec3::Z);
    DVec3::new(
        d(2, ey) - d(1, ez),
        d(0, ez) - d(2, ex),
        d(1, ex) - d(0, ey),
    )
}

/// Erosion texture: ridged inverted Worley sampled at curl-advected positions,
/// four channels at frequency ratios 1:2:4:8. The 0.3 weighting of B and A is
/// left to the consumer.
pub fn curly_alligator(p: DVec3, seed: u64) -> [f64; 4] {
    let advected = p + curl_noise(p, seed) * CURL_ADVECTION;
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let freq = CA_BASE_FREQ << k;
        let v = worley_at(advected, [freq; 3], seed.wrapping_add(0xca11 + k as u64));
        *slot = v.powi(CA_RIDGE_EXPONENT);
    }
    out
}

// ---------------------------------------------------------------------------
// baking

/// Anything that can fill a volume texture.
pub trait VolumeGenerator: Sync {
    fn channels(&self) -> usize;
    fn eval(&self, p: DVec3, seed: u64) -> [f64; 4];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PerlinWorleyGenerator;

impl VolumeGenerator for PerlinWorleyGenerator {
    fn channels(&self) -> usize {
        4
    }
    fn eval(&self, p: DVec3, seed: u64) -> [f64; 4] {
        perlin_worley_base(p, seed)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CurlyAlligatorGenerator;

impl VolumeGenerator for CurlyAlligatorGenerator {
    fn channels(&self) -> usize {
        4
    }
    fn eval(&self, p: DVec3, seed: u64) -> [f64; 4] {
        curly_alligator(p, seed)
    }
}

/// Single-channel FBM of a scalar spec. The bake seed is added to `spec.seed`.
impl VolumeGenerator for NoiseSpec {
    fn channels(&self) -> usize {
        match self.kind {
            NoiseKind::Perlin | NoiseKind::Worley => 1,
            NoiseKind::PerlinWorley | NoiseKind::CurlyAlligator => 4,
        }
    }

    fn eval(&self, p: DVec3, seed: u64) -> [f64; 4] {
        let seed = self.seed.wrapping_add(seed);
        match self.kind {
            NoiseKind::Perlin => {
                let spec = NoiseSpec { seed, ..self.clone() };
                [fbm(BaseOp::Perlin, p, &spec), 0.0, 0.0, 0.0]
            }
            NoiseKind::Worley => {
                let spec = NoiseSpec { seed, ..self.clone() };
                [fbm(BaseOp::Worley, p, &spec), 0.0, 0.0, 0.0]
            }
            NoiseKind::PerlinWorley => perlin_worley_base(p, seed),
            NoiseKind::CurlyAlligator => curly_alligator(p, seed),
        }
    }
}

/// Adapts a closure into a generator.
pub struct FnGenerator<F> {
    pub channels: usize,
    pub f: F,
}

impl<F> VolumeGenerator for FnGenerator<F>
where
    F: Fn(DVec3, u64) -> [f64; 4] + Sync,
{
    fn channels(&self) -> usize {
        self.channels
    }
    fn eval(&self, p: DVec3, seed: u64) -> [f64; 4] {
        (self.f)(p, seed)
    }
}

/// Evaluates `generator` at every voxel center `((i + 0.5) / N, ...)`.
pub fn bake_volume<G: VolumeGenerator + ?Sized>(
    generator: &G,
    dims: [usize; 3],
    seed: u64,
    color_id: &str,
) -> Result<VolumeTexture> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::param("dims", format!("need >= 2 voxels per axis, got {dims:?}")));
    }
    let channels = generator.channels();
    if !(1..=4).contains(&channels) {
        return Err(Error::param("channels", format!("must be 1..=4, got {channels}")));
    }
    let len = dims
        .iter()
        .try_fold(channels, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Resource(format!("volume {dims:?} overflows usize")))?;
    let mut voxels: Vec<f32> = Vec::new();
    voxels
        .try_reserve_exact(len)
        .map_err(|e| Error::Resource(format!("cannot allocate {len} voxels: {e}")))?;
    voxels.resize(len, 0.0);

    let [nx, ny, nz] = dims;
    let slab = nx * ny * channels;
    let fill = |k: usize, chunk: &mut [f32]| {
        let z = (k as f64 + 0.5) / nz as f64;
        for j in 0..ny {
            let y = (j as f64 + 0.5) / ny as f64;
            for i in 0..nx {
                let x = (i as f64 + 0.5) / nx as f64;
                let v = generator.eval(DVec3::new(x, y, z), seed);
                let base = (j * nx + i) * channels;
                for c in 0..channels {
                    chunk[base + c] = v[c] as f32;
                }
            }
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        voxels
            .par_chunks_mut(slab)
            .enumerate()
            .for_each(|(k, chunk)| fill(k, chunk));
    }
    #[cfg(not(feature = "parallel"))]
    voxels
        .chunks_mut(slab)
        .enumerate()
        .for_each(|(k, chunk)| fill(k, chunk));

    VolumeTexture::new(dims, channels, voxels, color_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<DVec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| DVec3::new(rng.random(), rng.random(), rng.random()))
            .collect()
    }

    #[test]
    fn perlin_vanishes_on_lattice() {
        let spec = NoiseSpec::new(NoiseKind::Perlin, 4, 9);
        for i in 0..4 {
            for j in 0..4 {
                let p = DVec3::new(i as f64 * 0.25, j as f64 * 0.25, 0.75);
                assert_eq!(perlin3(p, &spec), 0.0);
            }
        }
    }

    #[test]
    fn perlin_is_deterministic() {
        let spec = NoiseSpec::new(NoiseKind::Perlin, 4, 42);
        let p = DVec3::new(0.3, 0.7, 0.1);
        let v = perlin3(p, &spec);
        assert_eq!(v.to_bits(), perlin3(p, &spec).to_bits());
        assert_ne!(v, 0.0);
    }

    #[test]
    fn perlin_and_worley_are_periodic() {
        let spec = NoiseSpec::new(NoiseKind::Perlin, 5, 3);
        for p in random_points(100, 1) {
            for axis in [DVec3::X, DVec3::Y, DVec3::Z] {
                assert!((perlin3(p, &spec) - perlin3(p + axis, &spec)).abs() < 1e-9);
                assert!((worley3(p, &spec) - worley3(p + axis, &spec)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn worley_is_one_at_feature_point() {
        let freq = [3, 3, 3];
        let fp = feature_point(11, [1, 2, 0], freq);
        let p = DVec3::new(fp.x / 3.0, fp.y / 3.0, fp.z / 3.0);
        assert!((worley_at(p, freq, 11) - 1.0).abs() < 1e-12);
    }

    /// Brute-force nearest feature over every cell of the torus.
    fn brute_force_f1(p: DVec3, freq: u32, seed: u64) -> (f64, DVec3) {
        let f = freq as i64;
        let q = p * freq as f64;
        let mut best = (f64::INFINITY, DVec3::ZERO);
        for cz in -f..2 * f {
            for cy in -f..2 * f {
                for cx in -f..2 * f {
                    let fp = feature_point(seed, [cx, cy, cz], [freq; 3]);
                    let d = (fp - q).length();
                    if d < best.0 {
                        best = (d, fp);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn worley_matches_brute_force_and_is_radially_monotone() {
        let freq = 3;
        for p in random_points(60, 5) {
            let (f1, fp) = brute_force_f1(p, freq, 7);
            assert!((worley_f1(p, [freq; 3], 7) - f1).abs() < 1e-12);
            // walk away from the nearest feature while it stays nearest
            let dir = (p * freq as f64 - fp).normalize_or_zero();
            let mut prev = worley_at(p, [freq; 3], 7);
            for step in 1..8 {
                let q = (p * freq as f64 + dir * 0.02 * step as f64) / freq as f64;
                let (_, nearest) = brute_force_f1(q, freq, 7);
                if (nearest - fp).length() > 1e-12 {
                    break;
                }
                let v = worley_at(q, [freq; 3], 7);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn single_octave_fbm_is_base_op() {
        let spec = NoiseSpec::new(NoiseKind::Perlin, 6, 77);
        for p in random_points(50, 2) {
            assert_eq!(fbm(BaseOp::Perlin, p, &spec), perlin3(p, &spec));
            assert_eq!(fbm(BaseOp::Worley, p, &spec), worley3(p, &spec));
        }
    }

    #[test]
    fn ranges_hold_over_many_samples() {
        let spec = NoiseSpec::new(NoiseKind::Perlin, 4, 1).with_octaves(4);
        for p in random_points(100_000, 3) {
            let a = fbm(BaseOp::Perlin, p, &spec);
            let b = fbm(BaseOp::Worley, p, &spec);
            assert!((-1.0..=1.0).contains(&a));
            assert!((0.0..=1.0).contains(&b));
        }
    }

    #[test]
    fn composite_channels_in_unit_range() {
        for p in random_points(2_000, 4) {
            for v in perlin_worley_base(p, 5).into_iter().chain(curly_alligator(p, 5)) {
                assert!((0.0..=1.0).contains(&v), "{v}");
            }
        }
    }

    #[test]
    fn r_channel_reduces_to_perlin_where_worley_is_one() {
        let perlin = 0.37;
        assert!((remap(perlin, 1.0 - 1.0, 1.0, 0.0, 1.0) - perlin).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        let mut spec = NoiseSpec::new(NoiseKind::Worley, 4, 0);
        assert!(spec.validate().is_ok());
        spec.base_frequency[1] = 0;
        assert!(spec.validate().is_err());
        let spec = NoiseSpec::new(NoiseKind::Worley, 4, 0).with_octaves(0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn octave_frequencies_are_whole_cells() {
        let spec = NoiseSpec {
            lacunarity: 2.5,
            ..NoiseSpec::new(NoiseKind::Perlin, 2, 0)
        };
        assert_eq!(spec.octave_frequency(0), [2; 3]);
        assert_eq!(spec.octave_frequency(1), [5; 3]);
        assert_eq!(spec.octave_frequency(2), [13; 3]);
    }

    #[test]
    fn bake_rejects_tiny_dims() {
        let err = bake_volume(&PerlinWorleyGenerator, [1, 4, 4], 0, "base").unwrap_err();
        assert!(matches!(err, Error::Parameter { .. }));
    }

    #[test]
    fn constant_generator_bakes_uniform_volume() {
        let gen = FnGenerator {
            channels: 2,
            f: |_p: DVec3, _s: u64| [0.25, 0.5, 0.0, 0.0],
        };
        let tex = bake_volume(&gen, [2, 2, 2], 0, "const").unwrap();
        assert_eq!(tex.voxels().len(), 16);
        assert!(tex.voxels().chunks(2).all(|v| v == [0.25, 0.5]));
    }
}
