//! Volume textures, wrap sampling and the sliced 2D atlas codec.
//!
//! An atlas stores slice `k` of a volume at grid column `k % columns`, row
//! `k / columns`, each slice being `slice_size x slice_size` pixels. 128^3
//! volumes map onto a 2048x1024 atlas (16 x 8 slices).
//!
//! On disk a volume is a pair of files: a `.vtex.json` header and either an
//! 8-bit RGBA PNG atlas (`.vtex.png`) or a little-endian `f32` RGBA atlas blob
//! (`.vtex.raw`).

use std::fs;
use std::path::{Path, PathBuf};

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::png_io;

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTexture {
    dims: [usize; 3],
    channels: usize,
    voxels: Vec<f32>,
    color_id: String,
}

impl VolumeTexture {
    /// Voxels are interleaved per voxel, x fastest, then y, then z.
    pub fn new(
        dims: [usize; 3],
        channels: usize,
        voxels: Vec<f32>,
        color_id: impl Into<String>,
    ) -> Result<Self> {
        if !(1..=4).contains(&channels) {
            return Err(Error::param("channels", format!("must be 1..=4, got {channels}")));
        }
        if dims.contains(&0) {
            return Err(Error::param("dims", format!("empty axis in {dims:?}")));
        }
        let expected = dims[0] * dims[1] * dims[2] * channels;
        if voxels.len() != expected {
            return Err(Error::Format(format!(
                "voxel buffer holds {} values, dims {dims:?} x {channels} channels need {expected}",
                voxels.len()
            )));
        }
        if let Some(i) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite voxel value at index {i}")));
        }
        Ok(Self {
            dims,
            channels,
            voxels,
            color_id: color_id.into(),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn color_id(&self) -> &str {
        &self.color_id
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        ((k * self.dims[1] + j) * self.dims[0] + i) * self.channels
    }

    pub fn voxel(&self, i: usize, j: usize, k: usize) -> &[f32] {
        let o = self.offset(i, j, k);
        &self.voxels[o..o + self.channels]
    }

    /// Trilinear interpolation of the 8 surrounding voxel centers with
    /// toroidal addressing. `p` is in texture space, one period per unit.
    /// Channels beyond `channels()` read as zero.
    pub fn sample_trilinear(&self, p: DVec3) -> [f64; 4] {
        #[inline(always)]
        fn axis(u: f64, n: usize) -> (usize, usize, f64) {
            let x = u * n as f64 - 0.5;
            let xf = fast_floor(x);
            let i0 = if xf >= 0.0 && xf < n as f64 {
                xf as usize
            } else {
                (xf as i64).rem_euclid(n as i64) as usize
            };
            let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
            (i0, i1, x - xf)
        }
        let (x0, x1, tx) = axis(p.x, self.dims[0]);
        let (y0, y1, ty) = axis(p.y, self.dims[1]);
        let (z0, z1, tz) = axis(p.z, self.dims[2]);

        let c = self.channels;
        let fetch = |i: usize, j: usize, k: usize| -> [f64; 4] {
            let o = self.offset(i, j, k);
            let mut out = [0.0; 4];
            for (dst, src) in out.iter_mut().zip(&self.voxels[o..o + c]) {
                *dst = *src as f64;
            }
            out
        };
        let lerp4 = |a: [f64; 4], b: [f64; 4], t: f64| -> [f64; 4] {
            [
                a[0] + (b[0] - a[0]) * t,
                a[1] + (b[1] - a[1]) * t,
                a[2] + (b[2] - a[2]) * t,
                a[3] + (b[3] - a[3]) * t,
            ]
        };
        let y0z0 = lerp4(fetch(x0, y0, z0), fetch(x1, y0, z0), tx);
        let y1z0 = lerp4(fetch(x0, y1, z0), fetch(x1, y1, z0), tx);
        let y0z1 = lerp4(fetch(x0, y0, z1), fetch(x1, y0, z1), tx);
        let y1z1 = lerp4(fetch(x0, y1, z1), fetch(x1, y1, z1), tx);
        lerp4(lerp4(y0z0, y1z0, ty), lerp4(y0z1, y1z1, ty), tz)
    }
}

/// Maps a world position (km) into texture space for a noise layer repeating
/// every `tiling_km`, shifted by `motion_offset` (km).
pub fn world_to_texture(world_pos: DVec3, tiling_km: f64, motion_offset: DVec3) -> Result<DVec3> {
    if !(tiling_km > 0.0) {
        return Err(Error::param("tiling_km", format!("must be > 0, got {tiling_km}")));
    }
    Ok(world_to_texture_unchecked(world_pos, tiling_km, motion_offset))
}

#[inline]
pub(crate) fn world_to_texture_unchecked(world_pos: DVec3, tiling_km: f64, motion_offset: DVec3) -> DVec3 {
    let q = (world_pos + motion_offset) / tiling_km;
    q - DVec3::new(fast_floor(q.x), fast_floor(q.y), fast_floor(q.z))
}

/// `floor` without the libm call baseline x86-64 needs. Exact for
/// `|x| < 2^63`.
#[inline(always)]
pub(crate) fn fast_floor(x: f64) -> f64 {
    let t = x as i64 as f64;
    if t > x {
        t - 1.0
    } else {
        t
    }
}

// ---------------------------------------------------------------------------
// atlas

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasLayout {
    pub atlas_width: usize,
    pub atlas_height: usize,
    pub slice_size: usize,
    pub columns: usize,
    pub rows: usize,
}

impl AtlasLayout {
    pub fn new(atlas_width: usize, atlas_height: usize, slice_size: usize) -> Result<Self> {
        if slice_size == 0 || atlas_width % slice_size != 0 || atlas_height % slice_size != 0 {
            return Err(Error::Format(format!(
                "atlas {atlas_width}x{atlas_height} is not divisible into {slice_size}x{slice_size} slices"
            )));
        }
        Ok(Self {
            atlas_width,
            atlas_height,
            slice_size,
            columns: atlas_width / slice_size,
            rows: atlas_height / slice_size,
        })
    }

    /// Picks a roughly 2:1 grid of square slices for `dims`; 128^3 gives
    /// the 2048x1024 layout.
    pub fn for_volume(dims: [usize; 3]) -> Result<Self> {
        let [nx, ny, nz] = dims;
        if nx != ny {
            return Err(Error::Format(format!(
                "atlas slices must be square, volume is {nx}x{ny}"
            )));
        }
        let target = ((2 * nz) as f64).sqrt().ceil() as usize;
        let columns = (1..=target.min(nz)).rev().find(|c| nz % c == 0).unwrap_or(1);
        let rows = nz / columns;
        Self::new(columns * nx, rows * nx, nx)
    }

    pub fn slices(&self) -> usize {
        self.columns * self.rows
    }

    fn check(&self, dims: [usize; 3]) -> Result<()> {
        let again = Self::new(self.atlas_width, self.atlas_height, self.slice_size)?;
        if again != *self {
            return Err(Error::Format(format!(
                "layout columns/rows {}x{} disagree with {}x{} atlas of {} px slices",
                self.columns, self.rows, self.atlas_width, self.atlas_height, self.slice_size
            )));
        }
        if dims[0] != self.slice_size || dims[1] != self.slice_size || dims[2] != self.slices() {
            return Err(Error::Format(format!(
                "volume {}x{}x{} does not fit layout of {}x{} slices of {} px ({} slices)",
                dims[0],
                dims[1],
                dims[2],
                self.columns,
                self.rows,
                self.slice_size,
                self.slices()
            )));
        }
        Ok(())
    }

    /// Atlas pixel index holding voxel `(i, j, k)`.
    #[inline]
    pub fn pixel_of(&self, i: usize, j: usize, k: usize) -> usize {
        let col = k % self.columns;
        let row = k / self.columns;
        (row * self.slice_size + j) * self.atlas_width + col * self.slice_size + i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum BitDepth {
    Eight,
    ThirtyTwo,
}

impl TryFrom<u8> for BitDepth {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            8 => Ok(BitDepth::Eight),
            32 => Ok(BitDepth::ThirtyTwo),
            other => Err(format!("bit depth must be 8 or 32, got {other}")),
        }
    }
}

impl From<BitDepth> for u8 {
    fn from(b: BitDepth) -> u8 {
        match b {
            BitDepth::Eight => 8,
            BitDepth::ThirtyTwo => 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtlasPixels {
    Rgba8(Vec<u8>),
    RgbaF32(Vec<f32>),
}

/// A 2D RGBA image holding every slice of a volume.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlasImage {
    pub width: usize,
    pub height: usize,
    pub pixels: AtlasPixels,
}

impl AtlasImage {
    pub fn bit_depth(&self) -> BitDepth {
        match self.pixels {
            AtlasPixels::Rgba8(_) => BitDepth::Eight,
            AtlasPixels::RgbaF32(_) => BitDepth::ThirtyTwo,
        }
    }
}

#[inline]
fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Lays the volume's z slices out on a 2D grid. Unused RGB channels are 0 and
/// an unused alpha is 1.
pub fn atlas_encode(tex: &VolumeTexture, layout: &AtlasLayout, depth: BitDepth) -> Result<AtlasImage> {
    layout.check(tex.dims())?;
    let [nx, ny, nz] = tex.dims();
    let channels = tex.channels();
    let mut rgba = vec![0f32; layout.atlas_width * layout.atlas_height * 4];
    for px in rgba.chunks_exact_mut(4) {
        px[3] = 1.0;
    }
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let dst = layout.pixel_of(i, j, k) * 4;
                rgba[dst..dst + channels].copy_from_slice(tex.voxel(i, j, k));
            }
        }
    }
    let pixels = match depth {
        BitDepth::ThirtyTwo => AtlasPixels::RgbaF32(rgba),
        BitDepth::Eight => AtlasPixels::Rgba8(rgba.into_iter().map(quantize).collect()),
    };
    Ok(AtlasImage {
        width: layout.atlas_width,
        height: layout.atlas_height,
        pixels,
    })
}

pub fn atlas_decode(
    image: &AtlasImage,
    layout: &AtlasLayout,
    channels: usize,
    color_id: &str,
) -> Result<VolumeTexture> {
    if image.width != layout.atlas_width || image.height != layout.atlas_height {
        return Err(Error::Format(format!(
            "image is {}x{}, layout expects {}x{}",
            image.width, image.height, layout.atlas_width, layout.atlas_height
        )));
    }
    let dims = [layout.slice_size, layout.slice_size, layout.slices()];
    layout.check(dims)?;
    let expected = image.width * image.height * 4;
    let fetch: Box<dyn Fn(usize) -> f32> = match &image.pixels {
        AtlasPixels::RgbaF32(v) if v.len() == expected => Box::new(move |i| v[i]),
        AtlasPixels::Rgba8(v) if v.len() == expected => Box::new(move |i| v[i] as f32 / 255.0),
        _ => {
            return Err(Error::Format(format!(
                "pixel buffer length does not match {}x{} RGBA",
                image.width, image.height
            )))
        }
    };
    let [nx, ny, nz] = dims;
    let mut voxels = Vec::with_capacity(nx * ny * nz * channels);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let src = layout.pixel_of(i, j, k) * 4;
                voxels.extend((0..channels).map(|c| fetch(src + c)));
            }
        }
    }
    VolumeTexture::new(dims, channels, voxels, color_id)
}

// ---------------------------------------------------------------------------
// files

/// Contents of a `.vtex.json` header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VtexHeader {
    pub format: String,
    pub version: u32,
    pub dims: [usize; 3],
    pub channels: usize,
    pub color_id: String,
    pub bit_depth: BitDepth,
    pub byte_order: String,
    pub layout: AtlasLayout,
    pub seed: u64,
    /// Free-form description of how the volume was produced.
    #[serde(default)]
    pub generator: Option<serde_json::Value>,
    /// Atlas file name, relative to the header.
    pub data_file: String,
}

fn data_path_for(header_path: &Path, depth: BitDepth) -> PathBuf {
    let name = header_path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("volume.vtex.json");
    let stem = name.strip_suffix(".json").unwrap_or(name);
    let stem = stem.strip_suffix(".vtex").unwrap_or(stem);
    let ext = match depth {
        BitDepth::Eight => "vtex.png",
        BitDepth::ThirtyTwo => "vtex.raw",
    };
    header_path.with_file_name(format!("{stem}.{ext}"))
}

/// Writes `<stem>.vtex.json` plus its atlas file next to it. Returns the
/// path of the data file.
pub fn write_vtex(
    tex: &VolumeTexture,
    header_path: &Path,
    depth: BitDepth,
    seed: u64,
    generator: Option<serde_json::Value>,
) -> Result<PathBuf> {
    let layout = AtlasLayout::for_volume(tex.dims())?;
    let image = atlas_encode(tex, &layout, depth)?;
    let data_path = data_path_for(header_path, depth);
    let bytes = match &image.pixels {
        AtlasPixels::RgbaF32(v) => v.iter().flat_map(|f| f.to_le_bytes()).collect(),
        AtlasPixels::Rgba8(v) => png_io::encode_rgba8(image.width as u32, image.height as u32, v)?,
    };
    fs::write(&data_path, bytes)?;
    let header = VtexHeader {
        format: "vtex".into(),
        version: 1,
        dims: tex.dims(),
        channels: tex.channels(),
        color_id: tex.color_id().to_string(),
        bit_depth: depth,
        byte_order: "little".into(),
        layout,
        seed,
        generator,
        data_file: data_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let json = serde_json::to_string_pretty(&header)
        .map_err(|e| Error::Format(e.to_string()))?;
    fs::write(header_path, json)?;
    Ok(data_path)
}

pub fn read_vtex(header_path: &Path) -> Result<(VtexHeader, VolumeTexture)> {
    let text = fs::read_to_string(header_path)?;
    let header: VtexHeader = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", header_path.display())))?;
    if header.format != "vtex" || header.byte_order != "little" {
        return Err(Error::Format(format!(
            "unsupported header format `{}` / byte order `{}`",
            header.format, header.byte_order
        )));
    }
    let data_path = header_path.with_file_name(&header.data_file);
    let bytes = fs::read(&data_path)?;
    let layout = header.layout;
    let pixels = match header.bit_depth {
        BitDepth::ThirtyTwo => {
            let expected = layout.atlas_width * layout.atlas_height * 4 * 4;
            if bytes.len() != expected {
                return Err(Error::Format(format!(
                    "{}: {} bytes, expected {expected}",
                    data_path.display(),
                    bytes.len()
                )));
            }
            AtlasPixels::RgbaF32(
                bytes
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
            )
        }
        BitDepth::Eight => {
            let png = png_io::decode_rgba8(&bytes)?;
            if png.width as usize != layout.atlas_width || png.height as usize != layout.atlas_height {
                return Err(Error::Format(format!(
                    "{}: image is {}x{}, header says {}x{}",
                    data_path.display(),
                    png.width,
                    png.height,
                    layout.atlas_width,
                    layout.atlas_height
                )));
            }
            AtlasPixels::Rgba8(png.rgba)
        }
    };
    let image = AtlasImage {
        width: layout.atlas_width,
        height: layout.atlas_height,
        pixels,
    };
    let tex = atlas_decode(&image, &layout, header.channels, &header.color_id)?;
    if tex.dims() != header.dims {
        return Err(Error::Format(format!(
            "header dims {:?} disagree with layout-derived dims {:?}",
            header.dims,
            tex.dims()
        )));
    }
    Ok((header, tex))
}
