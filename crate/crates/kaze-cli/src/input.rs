//! Image decoding: PGM (P5) and PNG, 8-bit grayscale or RGB, converted to a
//! luminance image with values in [0, 1].

use kaze::GrayImage;

#[derive(Debug)]
pub enum LoadError {
    /// The file could not be read or decoded.
    Decode(String),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Decode(m) => write!(f, "cannot decode image: {m}"),
        }
    }
}

impl std::error::Error for LoadError {}

/// Decodes `path` and converts to luminance (ITU-R 601: 0.299R + 0.587G +
/// 0.114B) scaled to [0, 1]. Grayscale inputs pass through unweighted.
pub fn load_image(path: &std::path::Path) -> Result<GrayImage, LoadError> {
    let dynamic = image::open(path).map_err(|e| LoadError::Decode(e.to_string()))?;
    let rgb = dynamic.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut out = GrayImage::zeros(w, h);
    let dst = out.as_mut_slice();
    for (i, px) in rgb.pixels().enumerate() {
        let [r, g, b] = px.0;
        dst[i] = (0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32) / 255.0;
    }
    Ok(out)
}
