use super::{ImageIoError, StudySlice};
use crate::image::GrayImage;

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, ImageIoError> {
    if !bytes.starts_with(b"P5") {
        return Err(ImageIoError::BadMagic);
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // whitespace and comments between tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
        if i == 0 && pos == 2 {
            return Err(ImageIoError::BadMagic);
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(ImageIoError::BadHeader(format!(
                "expected a number at byte {start}"
            )));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = text
            .parse()
            .map_err(|_| ImageIoError::BadHeader(format!("number {text:?} out of range")))?;
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(ImageIoError::BadHeader("missing raster separator".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(ImageIoError::BadHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(ImageIoError::BadHeader(format!("maxval {maxval}")));
    }
    Ok(Header {
        width: usize::try_from(width).map_err(|_| ImageIoError::BadHeader("width".into()))?,
        height: usize::try_from(height).map_err(|_| ImageIoError::BadHeader("height".into()))?,
        maxval: maxval as u32,
        data_offset: pos,
    })
}

/// Parses a binary PGM (`P5`) with 8- or 16-bit big-endian samples.
pub fn load_pgm(bytes: &[u8]) -> Result<StudySlice, ImageIoError> {
    let header = parse_header(bytes)?;
    let count = header
        .width
        .checked_mul(header.height)
        .ok_or_else(|| ImageIoError::BadHeader("dimensions overflow".into()))?;
    let wide = header.maxval > 255;
    let expected = count * if wide { 2 } else { 1 };
    let raster = &bytes[header.data_offset..];
    if raster.len() < expected {
        return Err(ImageIoError::TruncatedPixelData {
            expected,
            actual: raster.len(),
        });
    }
    let stored: Vec<i32> = if wide {
        raster[..expected]
            .chunks_exact(2)
            .map(|c| i32::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    } else {
        raster[..expected].iter().map(|&b| i32::from(b)).collect()
    };
    let depth = if wide { 16 } else { 8 };
    StudySlice::from_stored(header.width, header.height, &stored, depth, "pgm")
}

/// Writes raw 16-bit samples as a `P5` file with maxval 65535.
pub fn write_pgm16(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    assert_eq!(samples.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(samples.len() * 2);
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

/// Writes an image as an 8-bit `P5` file, `round(v * 255)`.
pub fn write_pgm8(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.to_u8());
    out
}
