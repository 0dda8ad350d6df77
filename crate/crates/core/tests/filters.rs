use clotseg::filters::{self, clahe, unsharp};
use clotseg::{build_filtered_set, FilterError, FilterParams, GrayImage};
use proptest::prelude::*;

fn params() -> FilterParams {
    FilterParams::default()
}

/// Single-tile equalizer written from the definition: histogram, clip,
/// spread the excess evenly, normalized inclusive cumulative sum.
fn brute_tile_lut(values: &[f64], bins: usize, clip_fraction: f64) -> Option<Vec<f64>> {
    let mut hist = vec![0.0f64; bins];
    for &v in values {
        let mut b = (v * bins as f64).floor() as usize;
        if b >= bins {
            b = bins - 1;
        }
        hist[b] += 1.0;
    }
    if hist.iter().filter(|&&h| h > 0.0).count() < 2 {
        return None;
    }
    let limit = clip_fraction * values.len() as f64;
    let mut excess = 0.0;
    for h in hist.iter_mut() {
        if *h > limit {
            excess += *h - limit;
            *h = limit;
        }
    }
    let mut lut = Vec::with_capacity(bins);
    let mut running = 0.0;
    for h in &hist {
        running += h + excess / bins as f64;
        lut.push((running / values.len() as f64).min(1.0));
    }
    Some(lut)
}

/// Full CLAHE oracle: per-pixel lookup in every tile, blended between tile
/// centers with clamping at the outer half-tiles.
fn brute_clahe(img: &GrayImage, tx: usize, ty: usize, bins: usize, clip: f64) -> Vec<f64> {
    let (w, h) = img.dimensions();
    let tile_w = w / tx;
    let tile_h = h / ty;
    let mut luts = Vec::new();
    for j in 0..ty {
        for i in 0..tx {
            let mut vals = Vec::new();
            for y in j * tile_h..(j + 1) * tile_h {
                for x in i * tile_w..(i + 1) * tile_w {
                    vals.push(img.get(x, y));
                }
            }
            luts.push(brute_tile_lut(&vals, bins, clip));
        }
    }
    let map = |i: usize, j: usize, v: f64| match &luts[j * tx + i] {
        None => v,
        Some(lut) => lut[((v * bins as f64).floor() as usize).min(bins - 1)],
    };
    // position in tile-center units, clamped to the first/last center
    let axis = |p: usize, size: usize, n: usize| {
        let u = ((p as f64 + 0.5) / size as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = (u.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, u - i0 as f64)
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (j0, j1, fy) = axis(y, tile_h, ty);
        for x in 0..w {
            let (i0, i1, fx) = axis(x, tile_w, tx);
            let v = img.get(x, y);
            let top = (1.0 - fx) * map(i0, j0, v) + fx * map(i1, j0, v);
            let bot = (1.0 - fx) * map(i0, j1, v) + fx * map(i1, j1, v);
            out.push((1.0 - fy) * top + fy * bot);
        }
    }
    out
}

fn lcg_image(w: usize, h: usize, mut state: u64) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    })
}

#[test]
fn clahe_matches_brute_force_on_16x16() {
    for seed in 0..20u64 {
        let img = lcg_image(16, 16, seed);
        for (bins, clip) in [(16, 0.05), (16, 1.0), (256, 0.01), (64, 0.2)] {
            let got = clahe::clahe(&img, 2, 2, bins, clip);
            let want = brute_clahe(&img, 2, 2, bins, clip);
            for (g, w) in got.pixels().iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "seed {seed} bins {bins}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn clahe_matches_brute_force_at_default_grid() {
    let img = lcg_image(64, 64, 99);
    let got = filters::clahe(&img, &params()).unwrap();
    let want = brute_clahe(&img, 8, 8, 256, 0.01);
    for (g, w) in got.pixels().iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn clipped_bins_respect_limit() {
    for seed in 0..20u64 {
        let img = lcg_image(16, 16, seed);
        let hist: Vec<f64> = {
            let mut h = vec![0.0; 16];
            for &v in img.pixels() {
                h[clahe::bin_index(v, 16)] += 1.0;
            }
            h
        };
        let limit = 0.05 * 256.0;
        let clipped = clahe::clip_histogram(&hist, limit);
        let excess: f64 = hist.iter().map(|h| (h - limit).max(0.0)).sum();
        for c in &clipped {
            assert!(*c <= limit + excess / 16.0 + 1e-12);
        }
        assert!((clipped.iter().sum::<f64>() - 256.0).abs() < 1e-9);
    }
}

#[test]
fn two_tile_ramp_stays_monotone() {
    // left half ramps 0..1 across 16 columns, right half is flat 0.5
    let img = GrayImage::from_fn(32, 8, |x, _| if x < 16 { x as f64 / 15.0 } else { 0.5 });
    let p = FilterParams {
        clahe_tiles_x: 2,
        clahe_tiles_y: 2,
        clahe_bins: 16,
        clahe_clip: 1.0,
        ..params()
    };
    let out = filters::clahe(&img, &p).unwrap();
    for y in 0..8 {
        // by hand: each of the 16 bins holds 4 of the tile's 64 pixels, so the
        // left tile maps bin b to (b + 1) / 16 left of its centre
        for x in 0..8 {
            assert!((out.get(x, y) - (x as f64 + 1.0) / 16.0).abs() < 1e-12);
        }
        for x in 1..16 {
            assert!(out.get(x, y) >= out.get(x - 1, y), "row {y} col {x}");
        }
    }
    let p = FilterParams {
        clahe_tiles_x: 2,
        clahe_tiles_y: 2,
        ..params()
    };
    let out = filters::clahe(&img, &p).unwrap();
    for x in 1..16 {
        assert!(out.get(x, 3) >= out.get(x - 1, 3));
    }
}

#[test]
fn clahe_uniform_fixed_point() {
    for v in [0.0, 0.3, 0.5, 1.0] {
        let img = GrayImage::constant(64, 48, v);
        assert_eq!(filters::clahe(&img, &params()).unwrap(), img);
    }
}

#[test]
fn clahe_rejects_fine_grid() {
    let img = GrayImage::constant(16, 40, 0.5);
    assert!(matches!(
        filters::clahe(&img, &params()),
        Err(FilterError::TileGridTooFine { .. })
    ));
}

#[test]
fn unsharp_step_edge_by_hand() {
    // 1-D step 0.2 -> 0.8 between columns 7 and 8, replicated down 12 rows
    let img = GrayImage::from_fn(16, 12, |x, _| if x < 8 { 0.2 } else { 0.8 });
    let out = filters::unsharp(&img, &params()).unwrap();
    let sigma: f64 = 1.5;
    let taps: Vec<f64> = (-5i32..=5)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = taps.iter().sum();
    let blur_at = |x: i32| -> f64 {
        (-5i32..=5)
            .map(|k| {
                let xi = (x + k).clamp(0, 15);
                taps[(k + 5) as usize] / norm * if xi < 8 { 0.2 } else { 0.8 }
            })
            .sum()
    };
    for x in 0..16 {
        let f = if x < 8 { 0.2 } else { 0.8 };
        let want = (f + 0.21 * (f - blur_at(x))).clamp(0.0, 1.0);
        for y in 0..12 {
            assert!((out.get(x as usize, y) - want).abs() < 1e-12, "x={x}");
        }
    }
    assert!(out.get(7, 5) < 0.2, "undershoot on the dark side");
    assert!(out.get(8, 5) > 0.8, "overshoot on the bright side");
    assert!((out.get(0, 0) - 0.2).abs() < 1e-12);
}

#[test]
fn kernel_is_normalized_and_truncated() {
    let k = unsharp::gaussian_kernel(1.5);
    assert_eq!(k.len(), 11);
    assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(k[0], k[10]);
}

#[test]
fn superposition_arithmetic() {
    let zero = GrayImage::constant(8, 8, 0.0);
    let one = GrayImage::constant(8, 8, 1.0);
    let nine = GrayImage::constant(8, 8, 0.9);
    assert_eq!(
        filters::superpose_linear(&zero, &one).unwrap(),
        GrayImage::constant(8, 8, 0.5)
    );
    let w = filters::superpose_weighted(&zero, &nine).unwrap();
    assert!(w.pixels().iter().all(|&p| (p - 0.6).abs() < 1e-12));
    let a = GrayImage::constant(8, 8, 0.2);
    let b = GrayImage::constant(8, 8, 0.6);
    assert!(filters::superpose_linear(&a, &b)
        .unwrap()
        .pixels()
        .iter()
        .all(|&p| (p - 0.4).abs() < 1e-12));
    let o = GrayImage::constant(8, 8, 0.3);
    assert!(filters::superpose_weighted(&o, &b)
        .unwrap()
        .pixels()
        .iter()
        .all(|&p| (p - 0.5).abs() < 1e-12));
    assert!(filters::superpose_linear(&a, &GrayImage::constant(4, 8, 0.1)).is_err());
}

#[test]
fn constant_image_is_fixed_through_the_whole_set() {
    for v in [0.0, 0.25, 0.7, 1.0] {
        let img = GrayImage::constant(64, 64, v);
        let set = build_filtered_set(&img, &params()).unwrap();
        for (name, member) in set.members() {
            assert_eq!(member, &img, "{name} at {v}");
        }
    }
}

fn image_strategy() -> impl Strategy<Value = GrayImage> {
    (32usize..48, 32usize..48, any::<u64>()).prop_map(|(w, h, s)| lcg_image(w, h, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_gain_is_identity(img in image_strategy(), sigma in 0.3f64..4.0) {
        let p = FilterParams { lambda: 0.0, unsharp_sigma: sigma, ..params() };
        prop_assert_eq!(filters::unsharp(&img, &p).unwrap(), img);
    }

    #[test]
    fn unsharp_change_bounded_by_gain(img in image_strategy(), lambda in 0.0f64..=1.0) {
        let p = FilterParams { lambda, ..params() };
        let out = filters::unsharp(&img, &p).unwrap();
        let blur = unsharp::gaussian_blur(&img, p.unsharp_sigma);
        let gmax = img.pixels().iter().zip(&blur).map(|(f, b)| (f - b).abs()).fold(0.0, f64::max);
        for (o, f) in out.pixels().iter().zip(img.pixels()) {
            prop_assert!((o - f).abs() <= lambda * gmax + 1e-12);
        }
    }

    #[test]
    fn filtered_set_stays_in_unit_range(img in image_strategy()) {
        let set = build_filtered_set(&img, &params()).unwrap();
        for (_, m) in set.members() {
            prop_assert_eq!(m.dimensions(), img.dimensions());
            prop_assert!(m.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        }
        prop_assert_eq!(build_filtered_set(&img, &params()).unwrap(), set);
    }

    #[test]
    fn tile_mappings_are_monotone(img in image_strategy(), clip in 0.001f64..=1.0) {
        for m in clahe::tile_mappings(&img, 4, 4, 256, clip) {
            if let clahe::TileMapping::Lut(lut) = m {
                prop_assert!(lut.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
