//! Dominant orientation assignment and the 64-dimensional M-SURF descriptor.
//!
//! Both operations read the per-level first-order derivative maps the
//! detector already computed at the keypoint's scale, sampling them at
//! nearest pixels with clamp-to-edge reads.

use rayon::prelude::*;

use crate::detector::KeyPoint;
use crate::scale_space::EvolutionLevel;

pub const DESCRIPTOR_LEN: usize = 64;

/// Unit-norm M-SURF feature vector. Degenerate (zero-energy) neighborhoods
/// yield the all-zero vector so keypoint/descriptor indices stay aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: [f32; DESCRIPTOR_LEN],
    pub keypoint_ref: usize,
}

impl Descriptor {
    pub fn is_degenerate(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn distance(&self, other: &Descriptor) -> f32 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f32>()
            .sqrt()
    }
}

/// Number of candidate centers for the sliding pi/3 orientation segment.
const ORIENTATION_SEGMENTS: usize = 42;

#[inline]
fn sample_derivs(level: &EvolutionLevel, x: f32, y: f32) -> (f32, f32) {
    let xi = x.round() as isize;
    let yi = y.round() as isize;
    (level.Lx.get_clamped(xi, yi), level.Ly.get_clamped(xi, yi))
}

#[inline]
fn wrap_angle(a: f32) -> f32 {
    let two_pi = 2.0 * std::f32::consts::PI;
    let mut a = a % two_pi;
    if a < 0.0 {
        a += two_pi;
    }
    a
}

/// Dominant orientation in [0, 2*pi).
///
/// Derivatives are sampled with step sigma_i inside a circle of radius
/// 6*sigma_i, Gaussian weighted (sigma = 2.5*sigma_i), and summed over a
/// sliding circle segment of pi/3; the angle of the longest summed vector
/// wins. A zero-gradient neighborhood returns 0.
pub fn dominant_orientation(level: &EvolutionLevel, kp: &KeyPoint) -> f32 {
    let sigma = kp.sigma;
    let mut resp: Vec<(f32, f32, f32)> = Vec::with_capacity(113);
    for v in -6i32..=6 {
        for u in -6i32..=6 {
            let r2 = (u * u + v * v) as f32;
            if r2 > 36.0 {
                continue;
            }
            let (lx, ly) = sample_derivs(level, kp.x + u as f32 * sigma, kp.y + v as f32 * sigma);
            if lx == 0.0 && ly == 0.0 {
                continue;
            }
            // Gaussian with sigma 2.5*sigma_i at distance sqrt(r2)*sigma_i.
            let w = (-r2 / (2.0 * 2.5 * 2.5)).exp();
            resp.push((w * lx, w * ly, wrap_angle(ly.atan2(lx))));
        }
    }
    if resp.is_empty() {
        return 0.0;
    }
    let two_pi = 2.0 * std::f32::consts::PI;
    let seg_half = std::f32::consts::PI / 6.0;
    let mut best_norm2 = -1.0f32;
    let mut best_angle = 0.0f32;
    for seg in 0..ORIENTATION_SEGMENTS {
        let center = seg as f32 * two_pi / ORIENTATION_SEGMENTS as f32;
        let (mut sx, mut sy) = (0.0f32, 0.0f32);
        for &(wx, wy, ang) in &resp {
            let mut d = (ang - center).abs();
            if d > std::f32::consts::PI {
                d = two_pi - d;
            }
            if d <= seg_half {
                sx += wx;
                sy += wy;
            }
        }
        let n2 = sx * sx + sy * sy;
        if n2 > best_norm2 {
            best_norm2 = n2;
            best_angle = wrap_angle(sy.atan2(sx));
        }
    }
    if best_norm2 <= 0.0 {
        0.0
    } else {
        best_angle
    }
}

const GRID: usize = 24;
const SUBREGION: usize = 9;
const SUBREGION_STRIDE: usize = 5;

/// M-SURF descriptor over a 24*sigma x 24*sigma window rotated to the
/// keypoint's dominant orientation.
///
/// Samples fall on a 24x24 grid of step sigma; sampled derivative vectors
/// are rotated into the keypoint frame. 4x4 subregions of 9x9 samples
/// (2-sample overlap) accumulate (sum Lx, sum Ly, sum |Lx|, sum |Ly|) with
/// an inner Gaussian (sigma1 = 2.5 per sample unit about the subregion
/// center) and an outer 4x4 Gaussian mask (sigma2 = 1.5 in subregion units
/// about the keypoint). The 64-vector is L2-normalized.
pub fn msurf_descriptor(level: &EvolutionLevel, kp: &KeyPoint) -> Descriptor {
    let sigma = kp.sigma;
    let (cos_a, sin_a) = (kp.angle.cos(), kp.angle.sin());

    // Rotated, keypoint-frame derivative samples on the 24x24 grid.
    let mut dx = [[0.0f32; GRID]; GRID];
    let mut dy = [[0.0f32; GRID]; GRID];
    for j in 0..GRID {
        let ov = j as f32 - 11.5;
        for i in 0..GRID {
            let ou = i as f32 - 11.5;
            let sx = kp.x + sigma * (cos_a * ou - sin_a * ov);
            let sy = kp.y + sigma * (sin_a * ou + cos_a * ov);
            let (lx, ly) = sample_derivs(level, sx, sy);
            dx[j][i] = cos_a * lx + sin_a * ly;
            dy[j][i] = -sin_a * lx + cos_a * ly;
        }
    }

    let mut values = [0.0f32; DESCRIPTOR_LEN];
    for b in 0..4 {
        let v0 = b * SUBREGION_STRIDE;
        let cv = v0 as f32 + 4.0 - 11.5;
        for a in 0..4 {
            let u0 = a * SUBREGION_STRIDE;
            let cu = u0 as f32 + 4.0 - 11.5;
            let (mut sx, mut sy, mut sax, mut say) = (0.0f32, 0.0, 0.0, 0.0);
            for j in 0..SUBREGION {
                let ov = (v0 + j) as f32 - 11.5;
                for i in 0..SUBREGION {
                    let ou = (u0 + i) as f32 - 11.5;
                    let (du, dv) = (ou - cu, ov - cv);
                    let w1 = (-(du * du + dv * dv) / (2.0 * 2.5 * 2.5)).exp();
                    let x = w1 * dx[v0 + j][u0 + i];
                    let y = w1 * dy[v0 + j][u0 + i];
                    sx += x;
                    sy += y;
                    sax += x.abs();
                    say += y.abs();
                }
            }
            let (ga, gb) = (a as f32 - 1.5, b as f32 - 1.5);
            let w2 = (-(ga * ga + gb * gb) / (2.0 * 1.5 * 1.5)).exp();
            let base = (b * 4 + a) * 4;
            values[base] = w2 * sx;
            values[base + 1] = w2 * sy;
            values[base + 2] = w2 * sax;
            values[base + 3] = w2 * say;
        }
    }

    let norm = values
        .iter()
        .map(|&v| (v as f64) * (v as f64))
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        let inv = (1.0 / norm) as f32;
        for v in &mut values {
            *v *= inv;
        }
    } else {
        values = [0.0; DESCRIPTOR_LEN];
    }
    Descriptor {
        values,
        keypoint_ref: kp.level_index,
    }
}

/// Assign orientations and compute descriptors for all keypoints. Output is
/// index-aligned with the keypoint list and independent of the parallel
/// schedule.
pub fn describe(levels: &[EvolutionLevel], kps: &mut [KeyPoint]) -> Vec<Descriptor> {
    kps.par_iter_mut()
        .enumerate()
        .map(|(idx, kp)| {
            let level = &levels[kp.level_index];
            kp.angle = dominant_orientation(level, kp);
            let mut d = msurf_descriptor(level, kp);
            d.keypoint_ref = idx;
            d
        })
        .collect()
}
