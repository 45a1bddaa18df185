//! Thin wrappers over the `png` crate with fixed encoder settings, so identical
//! pixels always produce identical bytes.

use std::io::Cursor;

use crate::error::{Error, Result};

fn encode(width: u32, height: u32, color: png::ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width, height);
        encoder.set_color(color);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Fast);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(data)?;
        writer.finish()?;
    }
    Ok(out)
}

pub fn encode_rgb8(width: u32, height: u32, data: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Rgb, data)
}

pub fn encode_rgba8(width: u32, height: u32, data: &[u8]) -> Result<Vec<u8>> {
    encode(width, height, png::ColorType::Rgba, data)
}

/// Decoded 8-bit image, always expanded to RGBA.
pub struct DecodedPng {
    pub width: u32,
    pub height: u32,
    pub rgba: Vec<u8>,
}

pub fn decode_rgba8(bytes: &[u8]) -> Result<DecodedPng> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("png too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Format(format!("expected 8-bit png, got {:?}", info.bit_depth)));
    }
    buf.truncate(info.buffer_size());
    let rgba = match info.color_type {
        png::ColorType::Rgba => buf,
        png::ColorType::Rgb => buf
            .chunks_exact(3)
            .flat_map(|p| [p[0], p[1], p[2], 255])
            .collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g, g, g, 255]).collect(),
        png::ColorType::GrayscaleAlpha => buf
            .chunks_exact(2)
            .flat_map(|p| [p[0], p[0], p[0], p[1]])
            .collect(),
        other => return Err(Error::Format(format!("unsupported png color type {other:?}"))),
    };
    Ok(DecodedPng {
        width: info.width,
        height: info.height,
        rgba,
    })
}
