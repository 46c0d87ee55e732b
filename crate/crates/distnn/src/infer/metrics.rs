//! Reconstruction quality metrics.
//!
//! SSIM follows the standard single-scale recipe: an 11x11 Gaussian window
//! (sigma 1.5), stability constants K1 = 0.01 and K2 = 0.03 against a
//! dynamic range of 255, windows evaluated only where they fit entirely
//! inside the image, channels scored independently and averaged. Window
//! statistics come from one pass (covariance as `E[xy] - E[x]E[y]`),
//! accumulated in f64.

use serde_json::json;

use crate::error::{Error, Result};

use super::tensor::Tensor;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const DYNAMIC_RANGE: f64 = 255.0;

fn gaussian_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    let center = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for y in 0..SSIM_WINDOW {
        for x in 0..SSIM_WINDOW {
            let dy = y as f64 - center;
            let dx = x as f64 - center;
            let v = (-(dy * dy + dx * dx) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[y * SSIM_WINDOW + x] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

fn check_same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::InvalidArgument(format!(
            "cannot compare tensors of shape {} and {}",
            a.shape, b.shape
        )));
    }
    Ok(())
}

/// Mean SSIM over all valid window positions and channels. Needs at least
/// an 11x11 spatial extent.
pub fn ssim(a: &Tensor, b: &Tensor) -> Result<f64> {
    check_same_shape(a, b)?;
    let h = a.shape.height as usize;
    let w = a.shape.width as usize;
    let channels = a.shape.channels as usize;
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} spatial extent, got {}x{}",
            h, w
        )));
    }
    let av = a.to_real_values();
    let bv = b.to_real_values();
    let window = gaussian_window();
    let c1 = (SSIM_K1 * DYNAMIC_RANGE) * (SSIM_K1 * DYNAMIC_RANGE);
    let c2 = (SSIM_K2 * DYNAMIC_RANGE) * (SSIM_K2 * DYNAMIC_RANGE);

    let mut total = 0.0;
    let mut windows = 0u64;
    for ch in 0..channels {
        for wy in 0..=h - SSIM_WINDOW {
            for wx in 0..=w - SSIM_WINDOW {
                let mut mx = 0.0;
                let mut my = 0.0;
                let mut mxx = 0.0;
                let mut myy = 0.0;
                let mut mxy = 0.0;
                for ky in 0..SSIM_WINDOW {
                    let row = ((wy + ky) * w + wx) * channels + ch;
                    for kx in 0..SSIM_WINDOW {
                        let g = window[ky * SSIM_WINDOW + kx];
                        let x = av[row + kx * channels] as f64;
                        let y = bv[row + kx * channels] as f64;
                        mx += g * x;
                        my += g * y;
                        // Grouping the pixel products first keeps the three
                        // second moments rounding identically, which makes
                        // the score exactly 1 on identical images and
                        // exactly symmetric in its arguments.
                        mxx += g * (x * x);
                        myy += g * (y * y);
                        mxy += g * (x * y);
                    }
                }
                let vx = mxx - mx * mx;
                let vy = myy - my * my;
                let cov = mxy - mx * my;
                let score = ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                total += score;
                windows += 1;
            }
        }
    }
    Ok(total / windows as f64)
}

/// Peak signal-to-noise ratio in dB against the 255 dynamic range;
/// infinite when `mse` is zero.
pub fn psnr_db(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10()
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Quality {
    pub mse: f64,
    pub max_abs_err: f64,
    /// Infinite for identical tensors; serialized as null.
    pub psnr_db: f64,
    /// Absent when the tensors are too small for the SSIM window.
    pub ssim: Option<f64>,
}

/// Error metrics of `candidate` against `reference`.
pub fn quality(reference: &Tensor, candidate: &Tensor) -> Result<Quality> {
    check_same_shape(reference, candidate)?;
    let rv = reference.to_real_values();
    let cv = candidate.to_real_values();
    let mut sq = 0.0f64;
    let mut max_abs = 0.0f64;
    for (r, c) in rv.iter().zip(&cv) {
        let d = (*r as f64) - (*c as f64);
        sq += d * d;
        max_abs = max_abs.max(d.abs());
    }
    let mse = sq / rv.len() as f64;
    let fits = reference.shape.height as usize >= SSIM_WINDOW
        && reference.shape.width as usize >= SSIM_WINDOW;
    Ok(Quality {
        mse,
        max_abs_err: max_abs,
        psnr_db: psnr_db(mse),
        ssim: if fits {
            Some(ssim(reference, candidate)?)
        } else {
            None
        },
    })
}

/// JSON document for a metrics report; non-finite PSNR becomes null.
pub fn quality_json(q: &Quality) -> serde_json::Value {
    json!({
        "mse": q.mse,
        "max_abs_err": q.max_abs_err,
        "psnr_db": if q.psnr_db.is_finite() { json!(q.psnr_db) } else { json!(null) },
        "ssim": q.ssim,
    })
}
