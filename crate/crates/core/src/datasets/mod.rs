//! Image families, contrastive pairing, labeled partitions and manifests.

mod families;
mod image;

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use families::{
    canonical_images, generate_bas, generate_diagonals, generate_perturbed,
    generate_perturbed_excluding, is_bas, is_diagonal, REFERENCE_DIAGONAL_COUNT,
};
pub use image::BinaryImage;

use crate::error::{Error, Result};

/// Class label: bars-and-stripes is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Diagonal = 0,
    Bas = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_positive(self) -> bool {
        self == Label::Bas
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::Diagonal),
            1 => Ok(Label::Bas),
            _ => Err(format!("label {v} is not 0 or 1")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledImage {
    pub image: BinaryImage,
    pub label: Label,
}

/// `N_U` base images with their 90°-rotated partners. In the flat view
/// image `i` and image `N_U + i` form the positive pair; every other pair
/// is a negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveSet {
    base: Vec<BinaryImage>,
    augmented: Vec<BinaryImage>,
}

impl ContrastiveSet {
    pub fn new(images: &[BinaryImage]) -> Result<Self> {
        let distinct: BTreeSet<_> = images.iter().collect();
        if distinct.len() != images.len() {
            return Err(Error::Data("duplicate base images in contrastive set".into()));
        }
        Ok(Self {
            base: images.to_vec(),
            augmented: images.iter().map(BinaryImage::rotate90).collect(),
        })
    }

    pub fn base(&self) -> &[BinaryImage] {
        &self.base
    }

    pub fn augmented(&self) -> &[BinaryImage] {
        &self.augmented
    }

    /// `N_U`.
    pub fn n_base(&self) -> usize {
        self.base.len()
    }

    /// All `2 N_U` images, base first.
    pub fn images(&self) -> Vec<BinaryImage> {
        self.base.iter().chain(&self.augmented).copied().collect()
    }

    pub fn is_positive_pair(&self, i: usize, j: usize) -> bool {
        let n = self.base.len();
        i.abs_diff(j) == n
    }

    /// Upper-triangle index pairs `(i, j)` with `i < j` over the flat view.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = 2 * self.base.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }
}

pub fn make_contrastive_set(images: &[BinaryImage]) -> Result<ContrastiveSet> {
    ContrastiveSet::new(images)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub train: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
}

fn has_rotation_pair(images: &[LabeledImage]) -> bool {
    images.iter().enumerate().any(|(i, a)| {
        images[i + 1..]
            .iter()
            .any(|b| a.image.rotations()[1..].contains(&b.image))
    })
}

/// Draws a balanced train/test split from both classes.
///
/// With `avoid_rotation_pairs`, draws whose training set holds an image
/// together with one of its rotations are rejected and redrawn.
pub fn draw_partition<R: Rng + ?Sized>(
    rng: &mut R,
    n_train: usize,
    n_test: usize,
    avoid_rotation_pairs: bool,
) -> Result<Partition> {
    if !n_train.is_multiple_of(2) || !n_test.is_multiple_of(2) {
        return Err(Error::Data(format!(
            "train ({n_train}) and test ({n_test}) sizes must be even"
        )));
    }
    let bas = generate_bas();
    let diag = generate_diagonals();
    for (name, class) in [("BAS", &bas), ("diagonal", &diag)] {
        if class.len() < (n_train + n_test) / 2 {
            return Err(Error::Data(format!(
                "{name} class has {} images, need {}",
                class.len(),
                (n_train + n_test) / 2
            )));
        }
    }
    const MAX_REDRAWS: usize = 10_000;
    for _ in 0..MAX_REDRAWS {
        let mut take = |class: &[BinaryImage], label: Label| {
            let mut pool = class.to_vec();
            pool.shuffle(rng);
            let tag = |img: &BinaryImage| LabeledImage { image: *img, label };
            let test: Vec<_> = pool[..n_test / 2].iter().map(tag).collect();
            let train: Vec<_> = pool[n_test / 2..(n_test + n_train) / 2].iter().map(tag).collect();
            (train, test)
        };
        let (mut train, mut test) = take(&bas, Label::Bas);
        let (d_train, d_test) = take(&diag, Label::Diagonal);
        train.extend(d_train);
        test.extend(d_test);
        if avoid_rotation_pairs && has_rotation_pair(&train) {
            continue;
        }
        return Ok(Partition { train, test });
    }
    Err(Error::Data(format!(
        "no rotation-free training draw of size {n_train} found in {MAX_REDRAWS} attempts"
    )))
}

/// One entry of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub pixels: BinaryImage,
    pub label: Option<Label>,
    pub generator: String,
    pub seed: Option<u64>,
}

impl ManifestEntry {
    pub fn labeled(&self) -> Option<LabeledImage> {
        self.label.map(|label| LabeledImage {
            image: self.pixels,
            label,
        })
    }
}

pub fn manifest_entries(
    images: &[BinaryImage],
    label: Option<Label>,
    generator: &str,
    seed: Option<u64>,
) -> Vec<ManifestEntry> {
    images
        .iter()
        .map(|&pixels| ManifestEntry {
            pixels,
            label,
            generator: generator.to_string(),
            seed,
        })
        .collect()
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let json = serde_json::to_string_pretty(entries).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
