//! Datasets and task sequences.
//!
//! MNIST and FashionMNIST are read from IDX files (optionally gzipped). The
//! dense network learns a sequence of pixel-permuted MNIST tasks; the conv
//! network learns MNIST, FashionMNIST and their quarter-turn rotations.

mod batches;
mod idx;
pub mod synthetic;
mod tasks;

pub use batches::{BatchIter, TaskView};
pub use idx::{
    read_idx_images, read_idx_labels, write_idx_images, write_idx_labels, IdxImages, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use tasks::{
    make_permuted_tasks, make_rotation_tasks, permutation, rotation_map, Corpus, NetworkKind, TaskSequence, TaskSpec,
    Transform,
};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn file_prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

/// Images with labels. Pixels are kept as the raw bytes of the IDX file and
/// scaled to `[0, 1]` (division by 255) whenever they are materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pixels: Vec<u8>,
    labels: Vec<u8>,
    rows: usize,
    cols: usize,
    split: Split,
}

impl Dataset {
    pub fn from_raw(pixels: Vec<u8>, labels: Vec<u8>, rows: usize, cols: usize, split: Split) -> Result<Self> {
        let per = rows * cols;
        if per == 0 || !pixels.len().is_multiple_of(per) {
            return Err(Error::Config(format!(
                "{} pixel bytes do not form whole {rows}x{cols} images",
                pixels.len()
            )));
        }
        if pixels.len() / per != labels.len() {
            return Err(Error::CountMismatch {
                images: pixels.len() / per,
                labels: labels.len(),
            });
        }
        if let Some(index) = labels.iter().position(|&l| l >= 10) {
            return Err(Error::BadLabel {
                index,
                label: labels[index],
            });
        }
        Ok(Self {
            pixels,
            labels,
            rows,
            cols,
            split,
        })
    }

    /// Reads an image file and its label file, cross-checking the counts.
    pub fn load(images: &Path, labels: &Path, split: Split) -> Result<Self> {
        let img = read_idx_images(images)?;
        let lab = read_idx_labels(labels)?;
        if img.count != lab.len() {
            return Err(Error::CountMismatch {
                images: img.count,
                labels: lab.len(),
            });
        }
        Dataset::from_raw(img.pixels, lab, img.rows, img.cols, split)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn image_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn image_bytes(&self, i: usize) -> &[u8] {
        let n = self.image_len();
        &self.pixels[i * n..(i + 1) * n]
    }

    /// All images as an `(n, rows, cols)` tensor in `[0, 1]`.
    pub fn images(&self) -> Tensor {
        Tensor::new(
            vec![self.len(), self.rows, self.cols],
            self.pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
        )
        .expect("dimensions checked at construction")
    }

    /// First `n` samples (all of them if `n` exceeds the length).
    pub fn truncated(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            pixels: self.pixels[..n * self.image_len()].to_vec(),
            labels: self.labels[..n].to_vec(),
            rows: self.rows,
            cols: self.cols,
            split: self.split,
        }
    }

    /// Same images with labels replaced; used to check label-blind estimators.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Dataset> {
        Dataset::from_raw(self.pixels.clone(), labels, self.rows, self.cols, self.split)
    }
}

/// Both splits of one corpus.
#[derive(Debug, Clone)]
pub struct CorpusData {
    pub train: Dataset,
    pub test: Dataset,
}

/// Expected IDX paths of a corpus under a data root: `<root>/<corpus dir>/<prefix>-images-idx3-ubyte`.
/// A `.gz` variant is accepted when the plain file is absent.
pub fn corpus_paths(root: &Path, corpus: Corpus, split: Split) -> (PathBuf, PathBuf) {
    let dir = root.join(corpus.dir_name());
    let prefix = split.file_prefix();
    (
        dir.join(format!("{prefix}-images-idx3-ubyte")),
        dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

fn existing(path: &Path) -> Option<PathBuf> {
    if path.is_file() {
        return Some(path.to_path_buf());
    }
    let gz = PathBuf::from(format!("{}.gz", path.display()));
    gz.is_file().then_some(gz)
}

pub fn load_corpus(root: &Path, corpus: Corpus) -> Result<CorpusData> {
    let mut missing = Vec::new();
    let mut found = Vec::new();
    for split in [Split::Train, Split::Test] {
        let (img, lab) = corpus_paths(root, corpus, split);
        for p in [img, lab] {
            match existing(&p) {
                Some(f) => found.push(f),
                None => missing.push(p),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingData { expected: missing });
    }
    Ok(CorpusData {
        train: Dataset::load(&found[0], &found[1], Split::Train)?,
        test: Dataset::load(&found[2], &found[3], Split::Test)?,
    })
}
