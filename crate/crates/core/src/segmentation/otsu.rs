use super::SegmentationError;

pub const OTSU_BINS: usize = 256;

/// Histogram bin of a value in `[0, 1]`.
///
/// Bins are right-closed, `(k/256, (k+1)/256]`, with 0 folded into bin 0, so
/// that `v <= (k + 1) / 256` holds exactly when `otsu_bin_of(v) <= k`.
#[inline]
pub fn otsu_bin_of(v: f64) -> usize {
    let scaled = (v * OTSU_BINS as f64).ceil();
    (scaled.max(1.0) as usize - 1).min(OTSU_BINS - 1)
}

/// Threshold value for a split after bin `k`.
#[inline]
pub fn threshold_for_bin(k: usize) -> f64 {
    (k + 1) as f64 / OTSU_BINS as f64
}

pub fn histogram(values: &[f64]) -> [u64; OTSU_BINS] {
    let mut hist = [0u64; OTSU_BINS];
    for &v in values {
        hist[otsu_bin_of(v)] += 1;
    }
    hist
}

/// Index `k` maximizing the between-class variance of the split
/// `bins[..=k] | bins[k+1..]`; the lowest such `k` wins ties.
///
/// The objective `(n1·S0 − n0·S1)² / (n0·n1)` is compared exactly in integer
/// arithmetic (bin index as the intensity level) whenever it fits in `u128`.
pub fn otsu_bin(hist: &[u64]) -> Result<usize, SegmentationError> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(SegmentationError::EmptyInput);
    }
    if hist.iter().filter(|&&h| h > 0).count() < 2 {
        return Err(SegmentationError::DegenerateHistogram);
    }
    let total_sum: u128 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as u128 * u128::from(h))
        .sum();

    let mut n0: u128 = 0;
    let mut s0: u128 = 0;
    // best objective as numerator / denominator
    let mut best: Option<(usize, u128, u128)> = None;
    for (k, &h) in hist.iter().enumerate().take(hist.len() - 1) {
        n0 += u128::from(h);
        s0 += k as u128 * u128::from(h);
        let n1 = u128::from(total) - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        let diff = (n1 * s0).abs_diff(n0 * s1);
        let num = diff * diff;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bnum, bden)) => match (num.checked_mul(bden), bnum.checked_mul(den)) {
                (Some(lhs), Some(rhs)) => lhs > rhs,
                _ => (num as f64 / den as f64) > (bnum as f64 / bden as f64),
            },
        };
        if better {
            best = Some((k, num, den));
        }
    }
    Ok(best.expect("two occupied bins give a valid split").0)
}

/// Otsu threshold of a set of intensities in `[0, 1]` over a 256-bin histogram.
pub fn otsu_threshold(values: &[f64]) -> Result<f64, SegmentationError> {
    if values.is_empty() {
        return Err(SegmentationError::EmptyInput);
    }
    otsu_bin(&histogram(values)).map(threshold_for_bin)
}
