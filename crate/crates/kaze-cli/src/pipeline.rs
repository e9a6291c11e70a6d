//! Timed end-to-end pipeline: scale space, detection, description.

use std::time::Instant;

use kaze::{
    build_scale_space, describe, detect, Descriptor, GrayImage, KeyPoint, ScaleSpaceOptions,
};

/// Wall-clock cost of each pipeline stage, in milliseconds. Timings exclude
/// image decode/encode.
#[derive(Debug, Clone, Copy)]
pub struct StageTimings {
    pub scale_space_ms: f64,
    pub detection_ms: f64,
    pub description_ms: f64,
    pub total_ms: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub keypoint_count: usize,
    pub thread_count: usize,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub keypoints: Vec<KeyPoint>,
    pub descriptors: Vec<Descriptor>,
    pub timings: StageTimings,
}

/// Builds a dedicated thread pool with `threads` workers (0 = runtime default)
/// and runs the full pipeline inside it.
pub fn run_pipeline(
    img: &GrayImage,
    opts: &ScaleSpaceOptions,
    threads: usize,
) -> kaze::Result<PipelineOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| kaze::Error::InvalidArgument(format!("thread pool: {e}")))?;
    let thread_count = pool.current_num_threads();
    pool.install(|| {
        let start = Instant::now();

        let t0 = Instant::now();
        let mut levels = build_scale_space(img, opts)?;
        let scale_space_ms = t0.elapsed().as_secs_f64() * 1e3;

        let t1 = Instant::now();
        let mut keypoints = detect(&mut levels, opts)?;
        let detection_ms = t1.elapsed().as_secs_f64() * 1e3;

        let t2 = Instant::now();
        let descriptors = describe(&levels, &mut keypoints);
        let description_ms = t2.elapsed().as_secs_f64() * 1e3;

        let timings = StageTimings {
            scale_space_ms,
            detection_ms,
            description_ms,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            image_width: img.width(),
            image_height: img.height(),
            keypoint_count: keypoints.len(),
            thread_count,
        };
        Ok(PipelineOutput {
            keypoints,
            descriptors,
            timings,
        })
    })
}
