use clotseg::image_io::{write_dicom, ImageIoError};
use clotseg::load_dicom;

/// Explicit VR little-endian element with a 2-byte length field.
fn short_element(group: u16, element: u16, vr: &[u8; 2], value: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&group.to_le_bytes());
    out.extend_from_slice(&element.to_le_bytes());
    out.extend_from_slice(vr);
    out.extend_from_slice(&(value.len() as u16).to_le_bytes());
    out.extend_from_slice(value);
    out
}

/// Explicit VR little-endian element with 2 reserved bytes and a 4-byte length.
fn long_element(group: u16, element: u16, vr: &[u8; 2], value: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&group.to_le_bytes());
    out.extend_from_slice(&element.to_le_bytes());
    out.extend_from_slice(vr);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    out.extend_from_slice(value);
    out
}

fn us(v: u16) -> Vec<u8> {
    v.to_le_bytes().to_vec()
}

/// A 2×2, 16-bit MONOCHROME2 file assembled element by element.
fn handcrafted(transfer_syntax: &str, stored: [u16; 4]) -> Vec<u8> {
    let mut ts = transfer_syntax.as_bytes().to_vec();
    if ts.len() % 2 == 1 {
        ts.push(0);
    }
    let mut f = vec![0u8; 128];
    f.extend_from_slice(b"DICM");
    f.extend(short_element(0x0002, 0x0010, b"UI", &ts));
    f.extend(short_element(0x0028, 0x0002, b"US", &us(1)));
    f.extend(short_element(0x0028, 0x0004, b"CS", b"MONOCHROME2 "));
    f.extend(short_element(0x0028, 0x0010, b"US", &us(2)));
    f.extend(short_element(0x0028, 0x0011, b"US", &us(2)));
    f.extend(short_element(0x0028, 0x0100, b"US", &us(16)));
    f.extend(short_element(0x0028, 0x0101, b"US", &us(16)));
    f.extend(short_element(0x0028, 0x0103, b"US", &us(0)));
    let pixels: Vec<u8> = stored.iter().flat_map(|v| v.to_le_bytes()).collect();
    f.extend(long_element(0x7FE0, 0x0010, b"OW", &pixels));
    f
}

#[test]
fn handcrafted_layout_offsets() {
    let f = handcrafted("1.2.840.10008.1.2.1", [0, 100, 200, 300]);
    assert_eq!(&f[128..132], b"DICM");
    // transfer syntax element: tag, VR, 2-byte length 20, then the padded UID
    assert_eq!(&f[132..140], &[0x02, 0x00, 0x10, 0x00, b'U', b'I', 20, 0]);
    assert_eq!(&f[140..159], b"1.2.840.10008.1.2.1");
    assert_eq!(f[159], 0);
    // 7 pixel-module elements of 10 bytes each, the photometric one carries 12
    let pixel_tag = 160 + 6 * 10 + 20;
    assert_eq!(
        &f[pixel_tag..pixel_tag + 12],
        &[0xE0, 0x7F, 0x10, 0x00, b'O', b'W', 0, 0, 8, 0, 0, 0]
    );
    assert_eq!(&f[pixel_tag + 12..], &[0, 0, 100, 0, 200, 0, 0x2C, 0x01]);
}

#[test]
fn handcrafted_normalizes_to_thirds() {
    let slice = load_dicom(&handcrafted("1.2.840.10008.1.2.1", [0, 100, 200, 300])).unwrap();
    assert_eq!(slice.image.dimensions(), (2, 2));
    assert_eq!(slice.original_bit_depth, 16);
    assert_eq!((slice.raw_min, slice.raw_max), (0, 300));
    let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
    for (got, want) in slice.image.pixels().iter().zip(expect) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn handcrafted_constant_is_all_zero() {
    let slice = load_dicom(&handcrafted("1.2.840.10008.1.2.1", [77; 4])).unwrap();
    assert!(slice.image.pixels().iter().all(|&p| p == 0.0));
    assert_eq!((slice.raw_min, slice.raw_max), (77, 77));
}

#[test]
fn handcrafted_big_endian_rejected() {
    let err = load_dicom(&handcrafted("1.2.840.10008.1.2.2", [0, 1, 2, 3])).unwrap_err();
    assert!(matches!(err, ImageIoError::UnsupportedTransferSyntax(_)));
    let err = load_dicom(&handcrafted("1.2.840.10008.1.2.4.50", [0, 1, 2, 3])).unwrap_err();
    assert!(matches!(err, ImageIoError::UnsupportedTransferSyntax(_)));
}

#[test]
fn writer_matches_reader_at_full_size() {
    let samples: Vec<u16> = (0..256 * 256).map(|i| (i * 7 % 4096) as u16).collect();
    let slice = load_dicom(&write_dicom(256, 256, &samples, 16)).unwrap();
    assert_eq!(slice.image.dimensions(), (256, 256));
    assert_eq!((slice.raw_min, slice.raw_max), (0, 4095));
    assert_eq!(slice.image.get(1, 0), 7.0 / 4095.0);
}

#[test]
fn truncated_pixel_data_rejected() {
    let mut f = handcrafted("1.2.840.10008.1.2.1", [0, 100, 200, 300]);
    f.truncate(f.len() - 2);
    let n = f.len();
    // rewrite the 4-byte length to match the shortened value
    f[n - 10..n - 6].copy_from_slice(&6u32.to_le_bytes());
    assert!(matches!(
        load_dicom(&f),
        Err(ImageIoError::DimensionMismatch {
            expected: 8,
            actual: 6
        })
    ));
}
