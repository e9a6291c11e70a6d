//! Keypoint overlay rendering: one circle of radius σ plus an orientation
//! tick per keypoint, drawn over the grayscale input.

use kaze::{GrayImage, KeyPoint};

const OVERLAY_COLOR: [u8; 3] = [0, 220, 60];

fn put(img: &mut image::RgbImage, x: i64, y: i64) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, image::Rgb(OVERLAY_COLOR));
    }
}

fn draw_circle(img: &mut image::RgbImage, cx: f32, cy: f32, radius: f32) {
    let r = radius.max(1.0);
    // Enough samples that adjacent points land on neighboring pixels.
    let steps = ((2.0 * std::f32::consts::PI * r).ceil() as usize * 2).max(16);
    for i in 0..steps {
        let t = i as f32 / steps as f32 * 2.0 * std::f32::consts::PI;
        put(
            img,
            (cx + r * t.cos()).round() as i64,
            (cy + r * t.sin()).round() as i64,
        );
    }
}

fn draw_tick(img: &mut image::RgbImage, cx: f32, cy: f32, radius: f32, angle: f32) {
    let r = radius.max(1.0);
    let steps = (r.ceil() as usize * 2).max(2);
    for i in 0..=steps {
        let d = r * i as f32 / steps as f32;
        put(
            img,
            (cx + d * angle.cos()).round() as i64,
            (cy + d * angle.sin()).round() as i64,
        );
    }
}

/// Converts the [0, 1] luminance image to RGB and overlays every keypoint.
/// Drawing is clipped at the image border.
pub fn render_overlay(img: &GrayImage, keypoints: &[KeyPoint]) -> image::RgbImage {
    let mut out = image::RgbImage::new(img.width() as u32, img.height() as u32);
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = (img.get(x, y).clamp(0.0, 1.0) * 255.0).round() as u8;
            out.put_pixel(x as u32, y as u32, image::Rgb([v, v, v]));
        }
    }
    for kp in keypoints {
        draw_circle(&mut out, kp.x, kp.y, kp.sigma);
        draw_tick(&mut out, kp.x, kp.y, kp.sigma, kp.angle);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keypoint(x: f32, y: f32, sigma: f32) -> KeyPoint {
        KeyPoint {
            x,
            y,
            sigma,
            response: 1.0,
            level_index: 0,
            octave: 0,
            sublevel: 0,
            angle: 0.0,
        }
    }

    #[test]
    fn no_keypoints_reproduces_input_pixels() {
        let img = GrayImage::from_fn(8, 6, |x, y| (x + y) as f32 / 13.0);
        let out = render_overlay(&img, &[]);
        for y in 0..6 {
            for x in 0..8 {
                let v = (img.get(x, y) * 255.0).round() as u8;
                assert_eq!(out.get_pixel(x as u32, y as u32).0, [v, v, v]);
            }
        }
    }

    #[test]
    fn circle_pixels_lie_at_radius_sigma() {
        let img = GrayImage::zeros(64, 64);
        let out = render_overlay(&img, &[keypoint(32.0, 32.0, 5.0)]);
        let mut on_circle = 0;
        for y in 0..64u32 {
            for x in 0..64u32 {
                if out.get_pixel(x, y).0 == OVERLAY_COLOR {
                    let d = ((x as f32 - 32.0).powi(2) + (y as f32 - 32.0).powi(2)).sqrt();
                    // Tick pixels run from the center outward along angle 0.
                    let on_tick = y == 32 && (32..=37).contains(&x);
                    assert!(
                        on_tick || (d - 5.0).abs() <= 0.8,
                        "stray pixel at ({x},{y}), d={d}"
                    );
                    if !on_tick {
                        on_circle += 1;
                    }
                }
            }
        }
        assert!(on_circle >= 16, "circle too sparse: {on_circle} pixels");
    }

    #[test]
    fn border_keypoint_is_clipped_without_panic() {
        let img = GrayImage::zeros(32, 32);
        let out = render_overlay(
            &img,
            &[keypoint(0.0, 0.0, 10.0), keypoint(31.0, 31.0, 10.0)],
        );
        assert_eq!(out.width(), 32);
    }
}
