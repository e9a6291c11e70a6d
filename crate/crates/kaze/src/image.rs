//! Single-channel float raster and separable filtering primitives.

use rayon::prelude::*;

use crate::{Error, Result};

/// Row-major single-channel floating point image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "image dimensions must be positive".into(),
            ));
        }
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    /// Read with replicate (clamp-to-edge) border semantics.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|&v| v as f64).sum();
        sum / self.data.len() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Border handling for convolutions. Replicate realizes homogeneous Neumann
/// conditions, which the diffusion steps rely on for mass conservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderPolicy {
    #[default]
    Replicate,
}

/// A separable 2D kernel. `row_taps` convolve along x, `col_taps` along y,
/// with taps placed at integer multiples of `tap_spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKernel {
    pub row_taps: Vec<f32>,
    pub col_taps: Vec<f32>,
    pub tap_spacing: usize,
}

impl SeparableKernel {
    pub fn new(row_taps: Vec<f32>, col_taps: Vec<f32>, tap_spacing: usize) -> Result<Self> {
        let k = Self {
            row_taps,
            col_taps,
            tap_spacing,
        };
        k.validate()?;
        Ok(k)
    }

    /// Each tap array must have odd length >= 3 and sum to either 1
    /// (smoothing) or 0 (derivative) within 1e-6.
    pub fn validate(&self) -> Result<()> {
        if self.tap_spacing == 0 {
            return Err(Error::InvalidArgument("tap_spacing must be >= 1".into()));
        }
        for taps in [&self.row_taps, &self.col_taps] {
            if taps.len() < 3 || taps.len() % 2 == 0 {
                return Err(Error::InvalidArgument(format!(
                    "tap count {} must be odd and >= 3",
                    taps.len()
                )));
            }
            let sum: f64 = taps.iter().map(|&t| t as f64).sum();
            if (sum - 1.0).abs() > 1e-6 && sum.abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "tap sum {sum} is neither 1 (smoothing) nor 0 (derivative)"
                )));
            }
        }
        Ok(())
    }
}

/// Sampled Gaussian smoothing kernel, normalized to unit sum.
///
/// With `radius = None` the radius defaults to `ceil(3 * sigma)`, minimum 1.
pub fn gaussian_kernel(sigma: f32, radius: Option<usize>) -> Result<SeparableKernel> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be > 0, got {sigma}"
        )));
    }
    let radius = radius.unwrap_or_else(|| ((3.0 * sigma).ceil() as usize).max(1));
    let radius = radius.max(1);
    let inv_two_sigma2 = 1.0 / (2.0 * sigma as f64 * sigma as f64);
    let mut taps = Vec::with_capacity(2 * radius + 1);
    let mut sum = 0.0f64;
    for i in 0..=2 * radius {
        let x = i as f64 - radius as f64;
        let v = (-x * x * inv_two_sigma2).exp();
        sum += v;
        taps.push(v);
    }
    let taps: Vec<f32> = taps.into_iter().map(|v| (v / sum) as f32).collect();
    SeparableKernel::new(taps.clone(), taps, 1)
}

fn convolve_axis(img: &GrayImage, taps: &[f32], spacing: usize, horizontal: bool) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let radius = (taps.len() / 2) as isize;
    let spacing = spacing as isize;
    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for (k, &t) in taps.iter().enumerate() {
                let off = (k as isize - radius) * spacing;
                let v = if horizontal {
                    img.get_clamped(x as isize + off, y as isize)
                } else {
                    img.get_clamped(x as isize, y as isize + off)
                };
                acc += t as f64 * v as f64;
            }
            *o = acc as f32;
        }
    });
    GrayImage {
        width: w,
        height: h,
        data: out,
    }
}

/// Row-then-column correlation with the separable kernel under the given
/// border policy. Accumulation is in f64; output values are f32.
pub fn convolve_separable(
    img: &GrayImage,
    kernel: &SeparableKernel,
    _border: BorderPolicy,
) -> Result<GrayImage> {
    if img.is_empty() {
        return Err(Error::InvalidArgument("empty image".into()));
    }
    kernel.validate()?;
    let rows = convolve_axis(img, &kernel.row_taps, kernel.tap_spacing, true);
    Ok(convolve_axis(
        &rows,
        &kernel.col_taps,
        kernel.tap_spacing,
        false,
    ))
}

/// Gaussian smoothing with automatic kernel radius.
pub fn gaussian_blur(img: &GrayImage, sigma: f32) -> Result<GrayImage> {
    let kernel = gaussian_kernel(sigma, None)?;
    convolve_separable(img, &kernel, BorderPolicy::Replicate)
}

/// First-order Scharr derivative with tap dilation for larger scales.
///
/// The derivative axis uses taps (-1, 0, 1)/(2 * step) at offsets
/// {-step, 0, +step}; the cross axis smooths with (3, 10, 3)/16 at the same
/// offsets. A unit ramp therefore yields a derivative of exactly 1 at any
/// step. Second-order derivatives are obtained by composing two calls.
pub fn scharr_derivative(img: &GrayImage, dx: u8, dy: u8, step: usize) -> Result<GrayImage> {
    if dx + dy != 1 || dx > 1 || dy > 1 {
        return Err(Error::InvalidArgument(
            "exactly one of dx, dy must be 1 (first-order only)".into(),
        ));
    }
    if step < 1 {
        return Err(Error::InvalidArgument("step must be >= 1".into()));
    }
    let half = 0.5f32 / step as f32;
    let deriv = vec![-half, 0.0, half];
    let smooth = vec![3.0f32 / 16.0, 10.0 / 16.0, 3.0 / 16.0];
    let kernel = if dx == 1 {
        SeparableKernel::new(deriv, smooth, step)?
    } else {
        SeparableKernel::new(smooth, deriv, step)?
    };
    convolve_separable(img, &kernel, BorderPolicy::Replicate)
}
