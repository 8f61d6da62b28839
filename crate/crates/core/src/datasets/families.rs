//! The two canonical image classes and their single-pixel perturbations.

use std::collections::BTreeSet;

use rand::Rng;

use super::BinaryImage;
use crate::error::{Error, Result};

/// Count of diagonal images reported alongside the published benchmark.
/// The membership predicate below yields a different census; see
/// [`generate_diagonals`].
pub const REFERENCE_DIAGONAL_COUNT: usize = 253;

fn is_trivial(img: &BinaryImage) -> bool {
    *img == BinaryImage::zeros() || *img == BinaryImage::ones()
}

/// Every row is constant (horizontal stripes) or every column is constant (bars),
/// excluding the blank and full images.
pub fn is_bas(img: &BinaryImage) -> bool {
    let rows = (0..4).all(|r| (0..4).all(|c| img.get(r, c) == img.get(r, 0)));
    let cols = (0..4).all(|c| (0..4).all(|r| img.get(r, c) == img.get(0, c)));
    (rows || cols) && !is_trivial(img)
}

/// Constant along every ↘ diagonal (a function of `r - c`) or along every ↗
/// diagonal (a function of `r + c`), excluding the blank and full images.
pub fn is_diagonal(img: &BinaryImage) -> bool {
    let down = (0..16).all(|i| {
        let (r, c) = (i / 4, i % 4);
        r == 0 || c == 0 || img.get(r, c) == img.get(r - 1, c - 1)
    });
    let up = (0..16).all(|i| {
        let (r, c) = (i / 4, i % 4);
        r == 0 || c == 3 || img.get(r, c) == img.get(r - 1, c + 1)
    });
    (down || up) && !is_trivial(img)
}

/// All 28 bars-and-stripes images: horizontal stripes first, then vertical
/// bars, each ordered by the 4-bit line pattern.
pub fn generate_bas() -> Vec<BinaryImage> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let stripes = (0u8..16).map(|p| BinaryImage::from_fn(|r, _| p >> r & 1 == 1));
    let bars = (0u8..16).map(|p| BinaryImage::from_fn(|_, c| p >> c & 1 == 1));
    for img in stripes.chain(bars) {
        if !is_trivial(&img) && seen.insert(img) {
            out.push(img);
        }
    }
    out
}

/// All diagonal-stripe images: the ↘ family (7 free diagonal values) then the
/// ↗ family, deduplicated. The two families share only the two checkerboards,
/// giving 128 + 128 - 2 - 2 (blank and full) = 250 images.
pub fn generate_diagonals() -> Vec<BinaryImage> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let down = (0u8..128).map(|p| BinaryImage::from_fn(|r, c| p >> (r + 3 - c) & 1 == 1));
    let up = (0u8..128).map(|p| BinaryImage::from_fn(|r, c| p >> (r + c) & 1 == 1));
    for img in down.chain(up) {
        if !is_trivial(&img) && seen.insert(img) {
            out.push(img);
        }
    }
    out
}

/// Union of both classification classes.
pub fn canonical_images() -> Vec<BinaryImage> {
    let mut all = generate_bas();
    all.extend(generate_diagonals());
    all
}

/// Samples `count` distinct single-pixel perturbations of canonical images.
///
/// A canonical image is drawn uniformly from the union of both classes and one
/// uniformly chosen pixel is flipped. Draws that land back inside either class
/// (possible when the flipped pixel is a length-one corner diagonal) or repeat
/// an earlier draw are rejected.
pub fn generate_perturbed<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Result<Vec<BinaryImage>> {
    generate_perturbed_excluding(rng, count, &BTreeSet::new())
}

/// Like [`generate_perturbed`] but also rejects anything in `exclude`.
pub fn generate_perturbed_excluding<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    exclude: &BTreeSet<BinaryImage>,
) -> Result<Vec<BinaryImage>> {
    if count == 0 {
        return Err(Error::Argument("perturbed sample count must be at least 1".into()));
    }
    let canon = canonical_images();
    let canon_set: BTreeSet<_> = canon.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let max_attempts = 1000 * count + 10_000;
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let base = canon[rng.random_range(0..canon.len())];
        let img = base.flipped(rng.random_range(0..16));
        if canon_set.contains(&img) || exclude.contains(&img) || !seen.insert(img) {
            continue;
        }
        out.push(img);
    }
    if out.len() < count {
        return Err(Error::Data(format!(
            "could only draw {} distinct perturbed images of {count} requested",
            out.len()
        )));
    }
    Ok(out)
}
