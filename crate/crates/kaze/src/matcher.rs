//! Brute-force nearest-neighbor descriptor matching with Lowe-style ratio
//! test and symmetric cross-check.

use rayon::prelude::*;

use crate::descriptor::Descriptor;
use crate::{Error, Result};

/// One accepted correspondence between two descriptor lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub index_a: usize,
    pub index_b: usize,
    /// L2 distance, in [0, 2] for unit vectors.
    pub distance: f32,
}

/// Nearest and second-nearest candidate over `descs` for a query, skipping
/// degenerate descriptors. Ties break toward the lower index.
fn nearest_two(query: &Descriptor, descs: &[Descriptor]) -> Option<(usize, f32, f32)> {
    let mut best_idx = usize::MAX;
    let mut best = f32::INFINITY;
    let mut second = f32::INFINITY;
    for (j, d) in descs.iter().enumerate() {
        if d.is_degenerate() {
            continue;
        }
        let dist = query.distance(d);
        if dist < best {
            second = best;
            best = dist;
            best_idx = j;
        } else if dist < second {
            second = dist;
        }
    }
    (best_idx != usize::MAX).then_some((best_idx, best, second))
}

/// Match descriptors a -> b. A pair is kept when the nearest distance beats
/// `ratio` times the second-nearest and b's own nearest neighbor is a
/// (symmetric cross-check). Output is sorted by `index_a`.
pub fn match_descriptors(
    desc_a: &[Descriptor],
    desc_b: &[Descriptor],
    ratio: f32,
) -> Result<Vec<Match>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ratio must be in (0, 1], got {ratio}"
        )));
    }
    if desc_a.is_empty() || desc_b.is_empty() {
        return Ok(Vec::new());
    }
    let reverse_best: Vec<Option<usize>> = desc_b
        .par_iter()
        .map(|db| {
            if db.is_degenerate() {
                return None;
            }
            nearest_two(db, desc_a).map(|(i, _, _)| i)
        })
        .collect();
    let mut matches: Vec<Match> = desc_a
        .par_iter()
        .enumerate()
        .filter_map(|(i, da)| {
            if da.is_degenerate() {
                return None;
            }
            let (j, d1, d2) = nearest_two(da, desc_b)?;
            if d1 >= ratio * d2 {
                return None;
            }
            if reverse_best[j] != Some(i) {
                return None;
            }
            Some(Match {
                index_a: i,
                index_b: j,
                distance: d1,
            })
        })
        .collect();
    matches.sort_by_key(|m| m.index_a);
    Ok(matches)
}
