//! Minimal DICOM Part-10 reader and writer.
//!
//! Only the subset the pipeline needs: a single uncompressed monochrome frame
//! stored with the explicit VR little endian transfer syntax. Sequences are
//! skipped, including undefined-length ones.

use super::{ImageIoError, StudySlice};

pub const EXPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2.1";

const SECONDARY_CAPTURE: &str = "1.2.840.10008.5.1.4.1.1.7";
const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;
const PREAMBLE_LEN: usize = 128;

type Tag = (u16, u16);

const TRANSFER_SYNTAX: Tag = (0x0002, 0x0010);
const SAMPLES_PER_PIXEL: Tag = (0x0028, 0x0002);
const PHOTOMETRIC: Tag = (0x0028, 0x0004);
const NUMBER_OF_FRAMES: Tag = (0x0028, 0x0008);
const ROWS: Tag = (0x0028, 0x0010);
const COLUMNS: Tag = (0x0028, 0x0011);
const BITS_ALLOCATED: Tag = (0x0028, 0x0100);
const BITS_STORED: Tag = (0x0028, 0x0101);
const PIXEL_REPRESENTATION: Tag = (0x0028, 0x0103);
const PIXEL_DATA: Tag = (0x7FE0, 0x0010);

const ITEM: Tag = (0xFFFE, 0xE000);
const ITEM_DELIMITATION: Tag = (0xFFFE, 0xE00D);
const SEQUENCE_DELIMITATION: Tag = (0xFFFE, 0xE0DD);

fn has_long_length(vr: [u8; 2]) -> bool {
    matches!(
        &vr,
        b"OB"
            | b"OD"
            | b"OF"
            | b"OL"
            | b"OV"
            | b"OW"
            | b"SQ"
            | b"SV"
            | b"UC"
            | b"UN"
            | b"UR"
            | b"UT"
            | b"UV"
    )
}

struct ElementHeader {
    tag: Tag,
    vr: Option<[u8; 2]>,
    length: u32,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn truncated(what: &str) -> ImageIoError {
    ImageIoError::Malformed(format!("truncated {what}"))
}

impl<'a> Reader<'a> {
    fn u16(&mut self) -> Result<u16, ImageIoError> {
        let b = self
            .buf
            .get(self.pos..self.pos + 2)
            .ok_or_else(|| truncated("element header"))?;
        self.pos += 2;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, ImageIoError> {
        let b = self
            .buf
            .get(self.pos..self.pos + 4)
            .ok_or_else(|| truncated("element header"))?;
        self.pos += 4;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn at_end(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn peek_tag(&self) -> Option<Tag> {
        let b = self.buf.get(self.pos..self.pos + 4)?;
        Some((
            u16::from_le_bytes([b[0], b[1]]),
            u16::from_le_bytes([b[2], b[3]]),
        ))
    }

    fn header(&mut self) -> Result<ElementHeader, ImageIoError> {
        let tag = (self.u16()?, self.u16()?);
        if tag.0 == 0xFFFE {
            let length = self.u32()?;
            return Ok(ElementHeader {
                tag,
                vr: None,
                length,
            });
        }
        let b = self
            .buf
            .get(self.pos..self.pos + 2)
            .ok_or_else(|| truncated("value representation"))?;
        let vr = [b[0], b[1]];
        if !vr.iter().all(u8::is_ascii_uppercase) {
            return Err(ImageIoError::Malformed(format!(
                "invalid VR bytes {vr:02x?} for tag ({:04X},{:04X})",
                tag.0, tag.1
            )));
        }
        self.pos += 2;
        let length = if has_long_length(vr) {
            self.u16()?; // reserved
            self.u32()?
        } else {
            u32::from(self.u16()?)
        };
        Ok(ElementHeader {
            tag,
            vr: Some(vr),
            length,
        })
    }

    fn value(&mut self, length: u32) -> Result<&'a [u8], ImageIoError> {
        let end = self
            .pos
            .checked_add(length as usize)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| truncated("element value"))?;
        let v = &self.buf[self.pos..end];
        self.pos = end;
        Ok(v)
    }

    fn skip_value(&mut self, h: &ElementHeader) -> Result<(), ImageIoError> {
        if h.length != UNDEFINED_LENGTH {
            self.value(h.length)?;
            return Ok(());
        }
        match h.vr {
            Some(vr) if &vr == b"SQ" => self.skip_sequence_items(),
            _ => Err(ImageIoError::Malformed(format!(
                "undefined length on non-sequence element ({:04X},{:04X})",
                h.tag.0, h.tag.1
            ))),
        }
    }

    fn skip_sequence_items(&mut self) -> Result<(), ImageIoError> {
        loop {
            let h = self.header()?;
            match h.tag {
                SEQUENCE_DELIMITATION => return Ok(()),
                ITEM if h.length == UNDEFINED_LENGTH => self.skip_item_dataset()?,
                ITEM => {
                    self.value(h.length)?;
                }
                other => {
                    return Err(ImageIoError::Malformed(format!(
                        "unexpected tag ({:04X},{:04X}) inside sequence",
                        other.0, other.1
                    )))
                }
            }
        }
    }

    fn skip_item_dataset(&mut self) -> Result<(), ImageIoError> {
        loop {
            if self.peek_tag() == Some(ITEM_DELIMITATION) {
                self.header()?;
                return Ok(());
            }
            let h = self.header()?;
            self.skip_value(&h)?;
        }
    }
}

fn trim_text(value: &[u8]) -> String {
    String::from_utf8_lossy(value)
        .trim_end_matches(['\0', ' '])
        .trim_start()
        .to_string()
}

fn read_us(tag: Tag, value: &[u8]) -> Result<u16, ImageIoError> {
    if value.len() < 2 {
        return Err(ImageIoError::Malformed(format!(
            "({:04X},{:04X}) shorter than 2 bytes",
            tag.0, tag.1
        )));
    }
    Ok(u16::from_le_bytes([value[0], value[1]]))
}

#[derive(Default)]
struct PixelModule<'a> {
    samples_per_pixel: Option<u16>,
    photometric: Option<String>,
    frames: Option<String>,
    rows: Option<u16>,
    columns: Option<u16>,
    bits_allocated: Option<u16>,
    bits_stored: Option<u16>,
    pixel_representation: Option<u16>,
    pixel_data: Option<&'a [u8]>,
}

/// Parses a DICOM Part-10 byte stream into a normalized slice.
pub fn load_dicom(bytes: &[u8]) -> Result<StudySlice, ImageIoError> {
    if bytes.len() < PREAMBLE_LEN + 4 || &bytes[PREAMBLE_LEN..PREAMBLE_LEN + 4] != b"DICM" {
        return Err(ImageIoError::MissingPreamble);
    }
    let mut r = Reader {
        buf: bytes,
        pos: PREAMBLE_LEN + 4,
    };

    // File meta group, always explicit VR little endian.
    let mut transfer_syntax = None;
    while r.peek_tag().is_some_and(|t| t.0 == 0x0002) {
        let h = r.header()?;
        if h.length == UNDEFINED_LENGTH {
            return Err(ImageIoError::Malformed(
                "undefined length in meta group".into(),
            ));
        }
        let v = r.value(h.length)?;
        if h.tag == TRANSFER_SYNTAX {
            transfer_syntax = Some(trim_text(v));
        }
    }
    let ts = transfer_syntax
        .ok_or_else(|| ImageIoError::Malformed("no transfer syntax in file meta".into()))?;
    if ts != EXPLICIT_VR_LITTLE_ENDIAN {
        return Err(ImageIoError::UnsupportedTransferSyntax(ts));
    }

    let mut pm = PixelModule::default();
    while !r.at_end() {
        let h = r.header()?;
        if h.tag == PIXEL_DATA {
            if h.length == UNDEFINED_LENGTH {
                return Err(ImageIoError::UnsupportedTransferSyntax(
                    "encapsulated pixel data".into(),
                ));
            }
            pm.pixel_data = Some(r.value(h.length)?);
            break;
        }
        if h.length == UNDEFINED_LENGTH {
            r.skip_value(&h)?;
            continue;
        }
        let v = r.value(h.length)?;
        match h.tag {
            SAMPLES_PER_PIXEL => pm.samples_per_pixel = Some(read_us(h.tag, v)?),
            PHOTOMETRIC => pm.photometric = Some(trim_text(v)),
            NUMBER_OF_FRAMES => pm.frames = Some(trim_text(v)),
            ROWS => pm.rows = Some(read_us(h.tag, v)?),
            COLUMNS => pm.columns = Some(read_us(h.tag, v)?),
            BITS_ALLOCATED => pm.bits_allocated = Some(read_us(h.tag, v)?),
            BITS_STORED => pm.bits_stored = Some(read_us(h.tag, v)?),
            PIXEL_REPRESENTATION => pm.pixel_representation = Some(read_us(h.tag, v)?),
            _ => {}
        }
    }
    decode_pixels(pm)
}

fn decode_pixels(pm: PixelModule<'_>) -> Result<StudySlice, ImageIoError> {
    let data = pm.pixel_data.ok_or(ImageIoError::MissingPixelData)?;
    let rows = pm
        .rows
        .ok_or_else(|| ImageIoError::Malformed("missing Rows".into()))? as usize;
    let columns =
        pm.columns
            .ok_or_else(|| ImageIoError::Malformed("missing Columns".into()))? as usize;
    if rows == 0 || columns == 0 {
        return Err(ImageIoError::Malformed(format!(
            "zero dimension {columns}x{rows}"
        )));
    }
    let samples = pm.samples_per_pixel.unwrap_or(1);
    if samples != 1 {
        return Err(ImageIoError::UnsupportedPixelFormat(format!(
            "{samples} samples per pixel"
        )));
    }
    let photometric = pm.photometric.unwrap_or_else(|| "MONOCHROME2".to_string());
    let inverted = match photometric.as_str() {
        "MONOCHROME2" => false,
        "MONOCHROME1" => true,
        other => {
            return Err(ImageIoError::UnsupportedPixelFormat(format!(
                "photometric interpretation {other}"
            )))
        }
    };
    if let Some(frames) = pm.frames.as_deref() {
        if frames.parse::<u32>().map_or(true, |n| n > 1) {
            return Err(ImageIoError::UnsupportedPixelFormat(format!(
                "number of frames {frames:?}"
            )));
        }
    }
    let allocated = pm
        .bits_allocated
        .ok_or_else(|| ImageIoError::Malformed("missing BitsAllocated".into()))?;
    if allocated != 8 && allocated != 16 {
        return Err(ImageIoError::UnsupportedPixelFormat(format!(
            "{allocated} bits allocated"
        )));
    }
    let stored_bits = pm.bits_stored.unwrap_or(allocated);
    if stored_bits == 0 || stored_bits > allocated {
        return Err(ImageIoError::UnsupportedPixelFormat(format!(
            "{stored_bits} bits stored in {allocated}"
        )));
    }
    let signed = pm.pixel_representation.unwrap_or(0) == 1;

    let count = rows * columns;
    let bytes_per_sample = usize::from(allocated / 8);
    let expected = count * bytes_per_sample;
    // odd-length values carry one byte of padding
    let padded_ok = expected % 2 == 1 && data.len() == expected + 1;
    if data.len() != expected && !padded_ok {
        return Err(ImageIoError::DimensionMismatch {
            expected,
            actual: data.len(),
        });
    }

    let shift = 32 - u32::from(stored_bits);
    let decode = |raw: u32| -> i32 {
        let masked = (raw << shift) as i32;
        if signed {
            masked >> shift
        } else {
            ((masked as u32) >> shift) as i32
        }
    };
    let stored: Vec<i32> = if bytes_per_sample == 1 {
        data[..count]
            .iter()
            .map(|&b| decode(u32::from(b)))
            .collect()
    } else {
        data[..expected]
            .chunks_exact(2)
            .map(|c| decode(u32::from(u16::from_le_bytes([c[0], c[1]]))))
            .collect()
    };

    let depth = if allocated == 8 { 8 } else { 16 };
    let mut slice = StudySlice::from_stored(columns, rows, &stored, depth, "dicom")?;
    if inverted && slice.raw_min != slice.raw_max {
        let (w, h) = slice.image.dimensions();
        let flipped = slice.image.pixels().iter().map(|&p| 1.0 - p).collect();
        slice.image = crate::image::GrayImage::new(w, h, flipped).expect("inverted range");
    }
    Ok(slice)
}

fn push_element(out: &mut Vec<u8>, tag: Tag, vr: &[u8; 2], value: &[u8]) {
    debug_assert!(
        value.len().is_multiple_of(2),
        "DICOM values have even length"
    );
    out.extend_from_slice(&tag.0.to_le_bytes());
    out.extend_from_slice(&tag.1.to_le_bytes());
    out.extend_from_slice(vr);
    if has_long_length(*vr) {
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    } else {
        out.extend_from_slice(&(value.len() as u16).to_le_bytes());
    }
    out.extend_from_slice(value);
}

fn padded(text: &str, pad: u8) -> Vec<u8> {
    let mut v = text.as_bytes().to_vec();
    if v.len() % 2 == 1 {
        v.push(pad);
    }
    v
}

/// Serializes unsigned monochrome samples as a DICOM Part-10 secondary capture.
///
/// `bits` must be 8 or 16; with 8 bits every sample must fit in a byte.
pub fn write_dicom(width: usize, height: usize, samples: &[u16], bits: u16) -> Vec<u8> {
    assert!(bits == 8 || bits == 16, "bits must be 8 or 16");
    assert_eq!(samples.len(), width * height);
    assert!(width <= usize::from(u16::MAX) && height <= usize::from(u16::MAX));

    let instance_uid = format!("2.25.{}", fnv1a(samples) % 10_000_000_000);
    let mut meta = Vec::new();
    push_element(&mut meta, (0x0002, 0x0001), b"OB", &[0, 1]);
    push_element(
        &mut meta,
        (0x0002, 0x0002),
        b"UI",
        &padded(SECONDARY_CAPTURE, 0),
    );
    push_element(
        &mut meta,
        (0x0002, 0x0003),
        b"UI",
        &padded(&instance_uid, 0),
    );
    push_element(
        &mut meta,
        TRANSFER_SYNTAX,
        b"UI",
        &padded(EXPLICIT_VR_LITTLE_ENDIAN, 0),
    );

    let mut out = vec![0u8; PREAMBLE_LEN];
    out.extend_from_slice(b"DICM");
    push_element(
        &mut out,
        (0x0002, 0x0000),
        b"UL",
        &(meta.len() as u32).to_le_bytes(),
    );
    out.extend_from_slice(&meta);

    push_element(
        &mut out,
        (0x0008, 0x0016),
        b"UI",
        &padded(SECONDARY_CAPTURE, 0),
    );
    push_element(&mut out, (0x0008, 0x0018), b"UI", &padded(&instance_uid, 0));
    push_element(&mut out, (0x0008, 0x0060), b"CS", b"MR");
    push_element(&mut out, SAMPLES_PER_PIXEL, b"US", &1u16.to_le_bytes());
    push_element(&mut out, PHOTOMETRIC, b"CS", b"MONOCHROME2 ");
    push_element(&mut out, ROWS, b"US", &(height as u16).to_le_bytes());
    push_element(&mut out, COLUMNS, b"US", &(width as u16).to_le_bytes());
    push_element(&mut out, BITS_ALLOCATED, b"US", &bits.to_le_bytes());
    push_element(&mut out, BITS_STORED, b"US", &bits.to_le_bytes());
    push_element(&mut out, (0x0028, 0x0102), b"US", &(bits - 1).to_le_bytes());
    push_element(&mut out, PIXEL_REPRESENTATION, b"US", &0u16.to_le_bytes());

    let mut data: Vec<u8> = if bits == 8 {
        samples
            .iter()
            .map(|&s| u8::try_from(s).expect("8-bit sample"))
            .collect()
    } else {
        samples.iter().flat_map(|s| s.to_le_bytes()).collect()
    };
    if data.len() % 2 == 1 {
        data.push(0);
    }
    let vr = if bits == 8 { b"OB" } else { b"OW" };
    push_element(&mut out, PIXEL_DATA, vr, &data);
    out
}

fn fnv1a(samples: &[u16]) -> u64 {
    samples.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, s| {
        let h = (h ^ u64::from(s & 0xff)).wrapping_mul(0x100_0000_01b3);
        (h ^ u64::from(s >> 8)).wrapping_mul(0x100_0000_01b3)
    })
}
