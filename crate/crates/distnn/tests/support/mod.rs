//! Shared helpers for the integration suites: fixture loading, brute-force
//! counting oracles, and an independent SSIM implementation to check the
//! library's against.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use distnn::infer::Tensor;
use distnn::netmodel::{parse_inferred, NetworkSpec};

pub const AE1: FixtureRun = FixtureRun {
    arch: "ae1.arch",
    weights_seed: 2785,
    input_seed: 1001,
    split: "b5",
};

pub const AE2: FixtureRun = FixtureRun {
    arch: "ae2.arch",
    weights_seed: 2786,
    input_seed: 1002,
    split: "b3",
};

#[derive(Clone, Copy)]
pub struct FixtureRun {
    pub arch: &'static str,
    pub weights_seed: u64,
    pub input_seed: u64,
    /// The layer the figure of merit is expected to pick.
    pub split: &'static str,
}

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn load_fixture(name: &str) -> NetworkSpec {
    let path = fixture_path(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    parse_inferred(&text).unwrap_or_else(|e| panic!("parse {name}: {e}"))
}

/// Multiply-accumulate count of a convolution by literally walking every
/// (tap, output) pair, one increment at a time.
pub fn conv_macs_by_counting(
    kh: u32,
    kw: u32,
    cin: u32,
    out_h: u32,
    out_w: u32,
    out_c: u32,
) -> u64 {
    let mut count = 0u64;
    for _ky in 0..kh {
        for _kx in 0..kw {
            for _ic in 0..cin {
                for _oy in 0..out_h {
                    for _ox in 0..out_w {
                        for _oc in 0..out_c {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    count
}

/// Dense-layer MAC count by walking every (input, unit) pair.
pub fn dense_macs_by_counting(in_elems: u32, units: u32) -> u64 {
    let mut count = 0u64;
    for _i in 0..in_elems {
        for _u in 0..units {
            count += 1;
        }
    }
    count
}

/// Parallel-schedule block count: one block per output element.
pub fn parallel_blocks_by_counting(out_h: u32, out_w: u32, out_c: u32) -> u64 {
    let mut count = 0u64;
    for _oy in 0..out_h {
        for _ox in 0..out_w {
            for _oc in 0..out_c {
                count += 1;
            }
        }
    }
    count
}

/// Serial-schedule block count: one block per kernel row per output element.
pub fn serial_blocks_by_counting(kh: u32, out_h: u32, out_w: u32, out_c: u32) -> u64 {
    let mut count = 0u64;
    for _ky in 0..kh {
        for _oy in 0..out_h {
            for _ox in 0..out_w {
                for _oc in 0..out_c {
                    count += 1;
                }
            }
        }
    }
    count
}

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const RANGE: f64 = 255.0;

fn window_weights() -> Vec<f64> {
    let mut g = vec![0.0; WINDOW * WINDOW];
    let mid = (WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, slot) in g.iter_mut().enumerate() {
        let dy = (i / WINDOW) as f64 - mid;
        let dx = (i % WINDOW) as f64 - mid;
        *slot = (-(dy * dy + dx * dx) / (2.0 * SIGMA * SIGMA)).exp();
        sum += *slot;
    }
    for slot in &mut g {
        *slot /= sum;
    }
    g
}

/// Independent SSIM implementation: two passes per window (means first,
/// then centered moments) instead of the library's single-pass sums.
pub fn ssim_two_pass(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape, b.shape, "ssim_two_pass needs matching shapes");
    let h = a.shape.height as usize;
    let w = a.shape.width as usize;
    let channels = a.shape.channels as usize;
    assert!(h >= WINDOW && w >= WINDOW, "image too small for the window");

    let av = a.to_real_values();
    let bv = b.to_real_values();
    let g = window_weights();
    let c1 = (K1 * RANGE) * (K1 * RANGE);
    let c2 = (K2 * RANGE) * (K2 * RANGE);

    let at = |y: usize, x: usize, c: usize, v: &[f32]| v[(y * w + x) * channels + c] as f64;

    let mut total = 0.0;
    let mut windows = 0u64;
    for c in 0..channels {
        for wy in 0..=h - WINDOW {
            for wx in 0..=w - WINDOW {
                let mut mean_a = 0.0;
                let mut mean_b = 0.0;
                for ky in 0..WINDOW {
                    for kx in 0..WINDOW {
                        let weight = g[ky * WINDOW + kx];
                        mean_a += weight * at(wy + ky, wx + kx, c, &av);
                        mean_b += weight * at(wy + ky, wx + kx, c, &bv);
                    }
                }
                let mut var_a = 0.0;
                let mut var_b = 0.0;
                let mut cov = 0.0;
                for ky in 0..WINDOW {
                    for kx in 0..WINDOW {
                        let weight = g[ky * WINDOW + kx];
                        let da = at(wy + ky, wx + kx, c, &av) - mean_a;
                        let db = at(wy + ky, wx + kx, c, &bv) - mean_b;
                        var_a += weight * (da * da);
                        var_b += weight * (db * db);
                        cov += weight * (da * db);
                    }
                }
                let score = ((2.0 * mean_a * mean_b + c1) * (2.0 * cov + c2))
                    / ((mean_a * mean_a + mean_b * mean_b + c1) * (var_a + var_b + c2));
                total += score;
                windows += 1;
            }
        }
    }
    total / windows as f64
}

/// Exact bit equality of two real-valued tensors.
pub fn bits_equal(a: &Tensor, b: &Tensor) -> bool {
    a.shape == b.shape
        && a.real()
            .unwrap()
            .iter()
            .zip(b.real().unwrap())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}
