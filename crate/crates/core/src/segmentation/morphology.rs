use crate::roi::BinaryMask;

/// Offsets of the discrete Euclidean disk `dx² + dy² <= r²`.
pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let r2 = r * r;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Morphological closing (dilation then erosion) with a disk of `radius`.
///
/// Pixels outside the frame are background in the input. Both passes run on a
/// canvas padded by `radius`, so a structure touching the border is closed as
/// if the plane continued; the result is cropped back to the frame. This keeps
/// the closing extensive and idempotent.
pub fn morphological_close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (w, h) = mask.dimensions();
    if radius == 0 || mask.is_empty() {
        return mask.clone();
    }
    let r = radius as isize;
    let pw = w + 2 * radius;
    let ph = h + 2 * radius;
    let disk = disk_offsets(radius);

    let mut dilated = vec![false; pw * ph];
    for (x, y) in mask.iter_set() {
        let cx = x as isize + r;
        let cy = y as isize + r;
        for &(dx, dy) in &disk {
            dilated[((cy + dy) as usize) * pw + (cx + dx) as usize] = true;
        }
    }

    BinaryMask::from_fn(w, h, |x, y| {
        let cx = x as isize + r;
        let cy = y as isize + r;
        if !dilated[cy as usize * pw + cx as usize] {
            return false;
        }
        disk.iter()
            .all(|&(dx, dy)| dilated[((cy + dy) as usize) * pw + (cx + dx) as usize])
    })
}
