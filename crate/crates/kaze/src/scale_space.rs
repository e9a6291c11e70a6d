//! Nonlinear scale space built with Fast Explicit Diffusion.
//!
//! The evolution schedule maps octave/sublevel indices to scales
//! `sigma_i = sigma0 * 2^(o + s/S)` and diffusion times `t_i = sigma_i^2 / 2`.
//! Each level transition diffuses the previous level by one FED cycle against
//! a Perona-Malik conductivity image computed once per transition.

use rayon::prelude::*;

use crate::image::{gaussian_blur, scharr_derivative, GrayImage};
use crate::{Error, Result};

/// Perona-Malik conductivity variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diffusivity {
    /// g1 = exp(-|grad|^2 / k^2): favors high-contrast edges.
    G1,
    /// g2 = 1 / (1 + |grad|^2 / k^2): favors wide regions.
    #[default]
    G2,
}

/// Scale-space extrema comparison window at adjacent levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtremaWindow {
    /// Window side = round(sigma_i), forced odd and >= 3.
    #[default]
    ExactSigma,
    /// Fixed 3x3 window, the cheaper approximation.
    Approx3x3,
}

#[derive(Debug, Clone)]
pub struct ScaleSpaceOptions {
    pub num_octaves: usize,
    pub num_sublevels: usize,
    pub base_sigma: f64,
    pub tau_max: f64,
    pub diffusivity: Diffusivity,
    pub k_percentile: f64,
    pub k_histogram_bins: usize,
    pub detector_threshold: f32,
    pub edge_ratio: f64,
    pub extrema_window: ExtremaWindow,
}

impl Default for ScaleSpaceOptions {
    fn default() -> Self {
        Self {
            num_octaves: 4,
            num_sublevels: 4,
            base_sigma: 1.6,
            tau_max: 0.25,
            diffusivity: Diffusivity::G2,
            k_percentile: 0.7,
            k_histogram_bins: 300,
            detector_threshold: 1e-3,
            edge_ratio: 10.0,
            extrema_window: ExtremaWindow::ExactSigma,
        }
    }
}

impl ScaleSpaceOptions {
    pub fn validate(&self) -> Result<()> {
        if self.num_octaves < 1 || self.num_sublevels < 1 {
            return Err(Error::InvalidArgument(
                "octaves and sublevels must be >= 1".into(),
            ));
        }
        if !(self.base_sigma > 0.0) {
            return Err(Error::InvalidArgument("base_sigma must be > 0".into()));
        }
        if !(self.tau_max > 0.0 && self.tau_max <= 0.25) {
            return Err(Error::InvalidArgument(
                "tau_max must be in (0, 0.25]".into(),
            ));
        }
        if !(self.k_percentile > 0.0 && self.k_percentile < 1.0) {
            return Err(Error::InvalidArgument(
                "k_percentile must be in (0, 1)".into(),
            ));
        }
        if self.k_histogram_bins < 1 {
            return Err(Error::InvalidArgument(
                "k_histogram_bins must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One entry of the evolution schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub octave: usize,
    pub sublevel: usize,
    pub sigma: f64,
    pub time: f64,
}

/// One level of the nonlinear scale-space pyramid. All images keep the full
/// input resolution. The derivative and response maps are empty until the
/// detector fills them at the level's own scale.
#[derive(Debug, Clone)]
#[allow(non_snake_case)]
pub struct EvolutionLevel {
    pub index: usize,
    pub octave: usize,
    pub sublevel: usize,
    pub sigma: f64,
    pub time: f64,
    /// Diffused image at time t_i.
    pub Lt: GrayImage,
    /// Gaussian pre-smoothing of the previous Lt used for the conductivity.
    pub Lsmooth: GrayImage,
    pub Lx: GrayImage,
    pub Ly: GrayImage,
    pub Lxx: GrayImage,
    pub Lyy: GrayImage,
    pub Lxy: GrayImage,
    /// Normalized Hessian-determinant response, filled by the detector.
    pub Ldet: GrayImage,
}

/// One FED cycle: `n` explicit steps whose sizes sum exactly to the cycle's
/// total diffusion time after rescaling.
#[derive(Debug, Clone)]
pub struct FedCycle {
    pub n: usize,
    pub taus: Vec<f64>,
    pub total_time: f64,
}

/// Scale/time schedule: sigma_i = sigma0 * 2^(o + s/S), t_i = sigma_i^2 / 2.
pub fn evolution_schedule(opts: &ScaleSpaceOptions) -> Result<Vec<ScheduleEntry>> {
    opts.validate()?;
    let s_per_octave = opts.num_sublevels as f64;
    let mut entries = Vec::with_capacity(opts.num_octaves * opts.num_sublevels);
    for o in 0..opts.num_octaves {
        for s in 0..opts.num_sublevels {
            let sigma = opts.base_sigma * 2f64.powf(o as f64 + s as f64 / s_per_octave);
            entries.push(ScheduleEntry {
                octave: o,
                sublevel: s,
                sigma,
                time: 0.5 * sigma * sigma,
            });
        }
    }
    Ok(entries)
}

/// Result of the automatic contrast-factor estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastEstimate {
    pub k: f32,
    /// True when the image had no gradient anywhere and the fallback was used.
    pub degenerate: bool,
}

const CONTRAST_FALLBACK: f32 = 0.03;

/// Percentile of the gradient-magnitude histogram of a smoothed image.
///
/// The histogram has `k_histogram_bins` bins over (0, max|grad|]; zero
/// magnitudes are ignored. A zero-gradient image falls back to k = 0.03 with
/// the degenerate flag set.
pub fn estimate_contrast_k(img: &GrayImage, opts: &ScaleSpaceOptions) -> Result<ContrastEstimate> {
    opts.validate()?;
    if img.is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    let lx = scharr_derivative(img, 1, 0, 1)?;
    let ly = scharr_derivative(img, 0, 1, 1)?;
    let mags: Vec<f32> = lx
        .as_slice()
        .iter()
        .zip(ly.as_slice())
        .map(|(&x, &y)| (x * x + y * y).sqrt())
        .filter(|&m| m > 0.0)
        .collect();
    let max = mags.iter().cloned().fold(0.0f32, f32::max);
    if mags.is_empty() || max <= 0.0 {
        return Ok(ContrastEstimate {
            k: CONTRAST_FALLBACK,
            degenerate: true,
        });
    }
    let bins = opts.k_histogram_bins;
    let mut hist = vec![0usize; bins];
    for &m in &mags {
        let b = ((m / max) * bins as f32).ceil() as usize;
        hist[b.clamp(1, bins) - 1] += 1;
    }
    let target = (opts.k_percentile * mags.len() as f64).ceil() as usize;
    let mut cum = 0usize;
    let mut bin = bins - 1;
    for (i, &c) in hist.iter().enumerate() {
        cum += c;
        if cum >= target {
            bin = i;
            break;
        }
    }
    // Upper edge of the selected bin.
    let k = max * (bin as f32 + 1.0) / bins as f32;
    Ok(ContrastEstimate {
        k,
        degenerate: false,
    })
}

/// Per-pixel Perona-Malik conductivity g(|grad|^2 / k^2), in (0, 1].
#[allow(non_snake_case)]
pub fn conductivity(
    Lx: &GrayImage,
    Ly: &GrayImage,
    k: f32,
    which: Diffusivity,
) -> Result<GrayImage> {
    if Lx.width() != Ly.width() || Lx.height() != Ly.height() {
        return Err(Error::InvalidArgument(
            "gradient image dimensions differ".into(),
        ));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "contrast factor must be > 0, got {k}"
        )));
    }
    let inv_k2 = 1.0f32 / (k * k);
    let mut out = GrayImage::zeros(Lx.width(), Lx.height());
    out.as_mut_slice()
        .par_iter_mut()
        .zip(Lx.as_slice().par_iter().zip(Ly.as_slice()))
        .for_each(|(c, (&x, &y))| {
            let g2 = (x * x + y * y) * inv_k2;
            *c = match which {
                Diffusivity::G1 => (-g2).exp(),
                Diffusivity::G2 => 1.0 / (1.0 + g2),
            };
        });
    Ok(out)
}

/// Step sizes of one FED cycle: tau_j = tau_max / (2 cos^2(pi (2j+1)/(4n+2))).
pub fn fed_tau_steps(n: usize, tau_max: f64) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if !(tau_max > 0.0) {
        return Err(Error::InvalidArgument("tau_max must be > 0".into()));
    }
    Ok((0..n)
        .map(|j| {
            let c = (std::f64::consts::PI * (2 * j + 1) as f64 / (4 * n + 2) as f64).cos();
            tau_max / (2.0 * c * c)
        })
        .collect())
}

/// Choose the smallest cycle length reaching `total_time` and rescale the
/// step sizes so they sum to it exactly. The unscaled steps sum to
/// tau_max * n(n+1)/3.
pub fn fed_cycle(total_time: f64, tau_max: f64) -> Result<FedCycle> {
    if !(total_time > 0.0) {
        return Err(Error::InvalidArgument("total_time must be > 0".into()));
    }
    let n = (-0.5 + 0.5 * (1.0 + 12.0 * total_time / tau_max).sqrt())
        .ceil()
        .max(1.0) as usize;
    let unscaled = fed_tau_steps(n, tau_max)?;
    let unscaled_sum = tau_max * (n * (n + 1)) as f64 / 3.0;
    let q = total_time / unscaled_sum;
    let taus: Vec<f64> = unscaled.iter().map(|t| t * q).collect();
    Ok(FedCycle {
        n,
        taus,
        total_time,
    })
}

/// One explicit diffusion step L + tau * div(c grad L) on the 4-neighbor
/// stencil with zero flux across the image border.
pub fn fed_step(l: &GrayImage, c: &GrayImage, tau: f64) -> Result<GrayImage> {
    if l.width() != c.width() || l.height() != c.height() {
        return Err(Error::InvalidArgument(
            "image and conductivity dimensions differ".into(),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("tau must be > 0".into()));
    }
    let (w, h) = (l.width(), l.height());
    let tau = tau as f32;
    let mut out = GrayImage::zeros(w, h);
    out.as_mut_slice()
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, o) in row.iter_mut().enumerate() {
                let lp = l.get(x, y);
                let cp = c.get(x, y);
                let mut flux = 0.0f32;
                if x > 0 {
                    flux += 0.5 * (cp + c.get(x - 1, y)) * (l.get(x - 1, y) - lp);
                }
                if x + 1 < w {
                    flux += 0.5 * (cp + c.get(x + 1, y)) * (l.get(x + 1, y) - lp);
                }
                if y > 0 {
                    flux += 0.5 * (cp + c.get(x, y - 1)) * (l.get(x, y - 1) - lp);
                }
                if y + 1 < h {
                    flux += 0.5 * (cp + c.get(x, y + 1)) * (l.get(x, y + 1) - lp);
                }
                *o = lp + tau * flux;
            }
        });
    Ok(out)
}

/// Minimum image side accepted by the pipeline.
pub const MIN_IMAGE_SIDE: usize = 32;

/// Build the nonlinear scale space. The contrast factor is estimated once
/// from the sigma0-smoothed base image; levels whose sigma exceeds half the
/// smaller image side are dropped.
pub fn build_scale_space(img: &GrayImage, opts: &ScaleSpaceOptions) -> Result<Vec<EvolutionLevel>> {
    opts.validate()?;
    if img.is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    let (w, h) = (img.width(), img.height());
    if w.min(h) < MIN_IMAGE_SIDE {
        return Err(Error::InvalidArgument(format!(
            "image {w}x{h} is smaller than the minimum side {MIN_IMAGE_SIDE}"
        )));
    }
    let sigma_cap = w.min(h) as f64 / 2.0;
    let schedule: Vec<ScheduleEntry> = evolution_schedule(opts)?
        .into_iter()
        .take_while(|e| e.sigma <= sigma_cap)
        .collect();
    let base = gaussian_blur(img, opts.base_sigma as f32)?;
    let contrast = estimate_contrast_k(&base, opts)?;

    let empty = GrayImage::zeros(0, 0);
    let mut levels: Vec<EvolutionLevel> = Vec::with_capacity(schedule.len());
    for (i, entry) in schedule.iter().enumerate() {
        let (lt, lsmooth) = if i == 0 {
            (base.clone(), base.clone())
        } else {
            let prev = &levels[i - 1];
            let lsmooth = gaussian_blur(&prev.Lt, 1.0)?;
            let lx = scharr_derivative(&lsmooth, 1, 0, 1)?;
            let ly = scharr_derivative(&lsmooth, 0, 1, 1)?;
            let flow = conductivity(&lx, &ly, contrast.k, opts.diffusivity)?;
            let cycle = fed_cycle(entry.time - prev.time, opts.tau_max)?;
            let mut lt = prev.Lt.clone();
            for &tau in &cycle.taus {
                lt = fed_step(&lt, &flow, tau)?;
            }
            (lt, lsmooth)
        };
        levels.push(EvolutionLevel {
            index: i,
            octave: entry.octave,
            sublevel: entry.sublevel,
            sigma: entry.sigma,
            time: entry.time,
            Lt: lt,
            Lsmooth: lsmooth,
            Lx: empty.clone(),
            Ly: empty.clone(),
            Lxx: empty.clone(),
            Lyy: empty.clone(),
            Lxy: empty.clone(),
            Ldet: empty.clone(),
        });
    }
    Ok(levels)
}
