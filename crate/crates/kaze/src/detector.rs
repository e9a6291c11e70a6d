//! Hessian-determinant keypoint detection with edge rejection and sub-pixel
//! refinement.

use rayon::prelude::*;

use crate::image::{scharr_derivative, GrayImage};
use crate::scale_space::{EvolutionLevel, ExtremaWindow, ScaleSpaceOptions};
use crate::{Error, Result};

/// A detected feature at full input resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyPoint {
    pub x: f32,
    pub y: f32,
    /// Detection scale sigma_i.
    pub sigma: f32,
    /// Normalized Hessian-determinant response.
    pub response: f32,
    pub level_index: usize,
    pub octave: usize,
    pub sublevel: usize,
    /// Dominant orientation in [0, 2*pi), filled by the descriptor stage.
    pub angle: f32,
}

/// Integer derivative step for a level: round(sigma) clamped to
/// [1, min(W,H)/4]. The Hessian response is normalized by step^4.
pub fn derivative_step(sigma: f64, width: usize, height: usize) -> usize {
    let cap = (width.min(height) / 4).max(1);
    (sigma.round() as usize).clamp(1, cap)
}

/// Fill a level's derivative maps at the given step and compute the
/// normalized Hessian-determinant response
/// `Ldet = step^4 * (Lxx * Lyy - Lxy^2)`.
pub fn hessian_response(level: &mut EvolutionLevel, step: usize) -> Result<()> {
    level.Lx = scharr_derivative(&level.Lt, 1, 0, step)?;
    level.Ly = scharr_derivative(&level.Lt, 0, 1, step)?;
    level.Lxx = scharr_derivative(&level.Lx, 1, 0, step)?;
    level.Lyy = scharr_derivative(&level.Ly, 0, 1, step)?;
    level.Lxy = scharr_derivative(&level.Lx, 0, 1, step)?;
    let norm = (step as f32).powi(4);
    let (w, h) = (level.Lt.width(), level.Lt.height());
    let mut det = GrayImage::zeros(w, h);
    det.as_mut_slice()
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, d)| {
            let xx = level.Lxx.as_slice()[i];
            let yy = level.Lyy.as_slice()[i];
            let xy = level.Lxy.as_slice()[i];
            *d = norm * (xx * yy - xy * xy);
        });
    level.Ldet = det;
    Ok(())
}

/// Comparison window side at adjacent levels for a given scale.
fn window_side(sigma: f64, mode: ExtremaWindow) -> usize {
    match mode {
        ExtremaWindow::Approx3x3 => 3,
        ExtremaWindow::ExactSigma => {
            let s = sigma.round() as usize;
            let s = if s % 2 == 0 { s + 1 } else { s };
            s.max(3)
        }
    }
}

/// True when `v` strictly dominates every response of `level` inside the
/// window of the given side centered at (x, y), clamped to the image.
fn dominates_window(v: f32, level: &EvolutionLevel, x: usize, y: usize, side: usize) -> bool {
    let half = (side / 2) as isize;
    let (w, h) = (level.Ldet.width() as isize, level.Ldet.height() as isize);
    let (x, y) = (x as isize, y as isize);
    for qy in (y - half).max(0)..=(y + half).min(h - 1) {
        for qx in (x - half).max(0)..=(x + half).min(w - 1) {
            if level.Ldet.get(qx as usize, qy as usize) >= v {
                return false;
            }
        }
    }
    true
}

/// Scale-space extrema at integer positions.
///
/// A candidate must exceed the detector threshold, strictly dominate its
/// 8 spatial neighbors at its own level, and strictly dominate every pixel
/// of the two adjacent levels inside the comparison window. The first and
/// last levels never produce candidates.
pub fn find_extrema(levels: &[EvolutionLevel], opts: &ScaleSpaceOptions) -> Result<Vec<KeyPoint>> {
    if levels.len() < 3 {
        return Err(Error::InvalidArgument(
            "need at least 3 levels for extrema search".into(),
        ));
    }
    if levels.iter().any(|l| l.Ldet.is_empty()) {
        return Err(Error::InvalidArgument(
            "responses not computed for all levels".into(),
        ));
    }
    let threshold = opts.detector_threshold;
    let mut found: Vec<Vec<KeyPoint>> = Vec::new();
    (1..levels.len() - 1)
        .into_par_iter()
        .map(|i| {
            let level = &levels[i];
            let side = window_side(level.sigma, opts.extrema_window);
            let (w, h) = (level.Ldet.width(), level.Ldet.height());
            let mut kps = Vec::new();
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    let v = level.Ldet.get(x, y);
                    if !(v > threshold) {
                        continue;
                    }
                    let mut is_max = true;
                    'spatial: for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            let q = level
                                .Ldet
                                .get((x as isize + dx) as usize, (y as isize + dy) as usize);
                            if q >= v {
                                is_max = false;
                                break 'spatial;
                            }
                        }
                    }
                    if !is_max {
                        continue;
                    }
                    if !dominates_window(v, &levels[i - 1], x, y, side)
                        || !dominates_window(v, &levels[i + 1], x, y, side)
                    {
                        continue;
                    }
                    kps.push(KeyPoint {
                        x: x as f32,
                        y: y as f32,
                        sigma: level.sigma as f32,
                        response: v,
                        level_index: i,
                        octave: level.octave,
                        sublevel: level.sublevel,
                        angle: 0.0,
                    });
                }
            }
            kps
        })
        .collect_into_vec(&mut found);
    Ok(found.into_iter().flatten().collect())
}

/// SIFT-style edge test on the response surface: keep iff `Det(H) > 0` and
/// `Tr(H)^2 / Det(H) < (r+1)^2 / r`, with H taken from the 3x3 neighborhood
/// of Ldet.
pub fn reject_edges(level: &EvolutionLevel, x: usize, y: usize, r: f64) -> bool {
    let d = &level.Ldet;
    let c = d.get(x, y) as f64;
    let dxx = d.get(x + 1, y) as f64 - 2.0 * c + d.get(x - 1, y) as f64;
    let dyy = d.get(x, y + 1) as f64 - 2.0 * c + d.get(x, y - 1) as f64;
    let dxy =
        (d.get(x + 1, y + 1) as f64 - d.get(x + 1, y - 1) as f64 - d.get(x - 1, y + 1) as f64
            + d.get(x - 1, y - 1) as f64)
            / 4.0;
    let det = dxx * dyy - dxy * dxy;
    if det <= 0.0 {
        return false;
    }
    let tr = dxx + dyy;
    tr * tr / det < (r + 1.0) * (r + 1.0) / r
}

/// Quadratic fit on the 3x3 neighborhood of the response map. Returns the
/// sub-pixel position, or `None` when the fit is singular or the offset
/// leaves the unit cell.
pub fn refine_subpixel(level: &EvolutionLevel, x: usize, y: usize) -> Option<(f32, f32)> {
    let d = &level.Ldet;
    let c = d.get(x, y) as f64;
    let gx = (d.get(x + 1, y) as f64 - d.get(x - 1, y) as f64) / 2.0;
    let gy = (d.get(x, y + 1) as f64 - d.get(x, y - 1) as f64) / 2.0;
    let hxx = d.get(x + 1, y) as f64 - 2.0 * c + d.get(x - 1, y) as f64;
    let hyy = d.get(x, y + 1) as f64 - 2.0 * c + d.get(x, y - 1) as f64;
    let hxy =
        (d.get(x + 1, y + 1) as f64 - d.get(x + 1, y - 1) as f64 - d.get(x - 1, y + 1) as f64
            + d.get(x - 1, y - 1) as f64)
            / 4.0;
    let det = hxx * hyy - hxy * hxy;
    if det.abs() < 1e-12 {
        return None;
    }
    // delta = -H^-1 * g
    let dx = (-hyy * gx + hxy * gy) / det;
    let dy = (hxy * gx - hxx * gy) / det;
    if dx.abs() > 1.0 || dy.abs() > 1.0 {
        return None;
    }
    Some((x as f32 + dx as f32, y as f32 + dy as f32))
}

/// Full detection pipeline: responses, extrema, edge rejection, sub-pixel
/// refinement. Output is sorted by descending response and deterministic for
/// fixed input and options.
pub fn detect(levels: &mut [EvolutionLevel], opts: &ScaleSpaceOptions) -> Result<Vec<KeyPoint>> {
    opts.validate()?;
    levels.par_iter_mut().try_for_each(|level| {
        let step = derivative_step(level.sigma, level.Lt.width(), level.Lt.height());
        hessian_response(level, step)
    })?;
    let candidates = find_extrema(levels, opts)?;
    let (w, h) = (levels[0].Lt.width() as f32, levels[0].Lt.height() as f32);
    let mut kps: Vec<KeyPoint> = candidates
        .into_iter()
        .filter_map(|kp| {
            let level = &levels[kp.level_index];
            let (x, y) = (kp.x as usize, kp.y as usize);
            if !reject_edges(level, x, y, opts.edge_ratio) {
                return None;
            }
            let (rx, ry) = refine_subpixel(level, x, y)?;
            if rx < 0.0 || rx >= w || ry < 0.0 || ry >= h {
                return None;
            }
            Some(KeyPoint { x: rx, y: ry, ..kp })
        })
        .collect();
    kps.sort_by(|a, b| {
        b.response
            .partial_cmp(&a.response)
            .unwrap()
            .then(a.level_index.cmp(&b.level_index))
            .then(a.y.partial_cmp(&b.y).unwrap())
            .then(a.x.partial_cmp(&b.x).unwrap())
    });
    Ok(kps)
}
