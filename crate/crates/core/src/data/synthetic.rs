//! Small generated stand-in for MNIST-format corpora.
//!
//! Each class is a fixed blob pattern; samples are jittered, rescaled and
//! noisy copies. The files use the same IDX layout and names as the real
//! corpora, so everything downstream of [`load_corpus`](super::load_corpus)
//! runs unchanged. Used by tests and smoke runs.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::idx::{write_idx_images, write_idx_labels};
use super::{corpus_paths, Corpus, Split};
use crate::error::{Error, Result};

const SIDE: usize = 28;

struct Prototype {
    bumps: Vec<(f64, f64, f64)>,
}

fn prototypes(rng: &mut ChaCha8Rng) -> Vec<Prototype> {
    (0..10)
        .map(|_| Prototype {
            bumps: (0..3)
                .map(|_| {
                    (
                        rng.random_range(6.0..22.0),
                        rng.random_range(6.0..22.0),
                        rng.random_range(1.5..3.5),
                    )
                })
                .collect(),
        })
        .collect()
}

fn render(p: &Prototype, rng: &mut ChaCha8Rng, out: &mut [u8]) {
    let dr = rng.random_range(-2.0..2.0);
    let dc = rng.random_range(-2.0..2.0);
    let gain = rng.random_range(0.7..1.0);
    for r in 0..SIDE {
        for c in 0..SIDE {
            let mut v: f64 = p
                .bumps
                .iter()
                .map(|&(br, bc, s)| {
                    let d2 = (r as f64 - br - dr).powi(2) + (c as f64 - bc - dc).powi(2);
                    (-d2 / (2.0 * s * s)).exp()
                })
                .sum();
            v = (v * gain + rng.random_range(-0.1..0.1)).clamp(0.0, 1.0);
            out[r * SIDE + c] = (v * 255.0).round() as u8;
        }
    }
}

/// Writes train and test IDX files for `corpus` under `root`.
pub fn write_corpus(root: &Path, corpus: Corpus, n_train: usize, n_test: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protos = prototypes(&mut rng);
    let dir = root.join(corpus.dir_name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (split, n) in [(Split::Train, n_train), (Split::Test, n_test)] {
        let mut pixels = vec![0u8; n * SIDE * SIDE];
        let mut labels = Vec::with_capacity(n);
        for (i, image) in pixels.chunks_mut(SIDE * SIDE).enumerate() {
            let label = ((i + rng.random_range(0..10)) % 10) as u8;
            render(&protos[label as usize], &mut rng, image);
            labels.push(label);
        }
        let (img_path, lab_path) = corpus_paths(root, corpus, split);
        write_idx_images(&img_path, SIDE, SIDE, &pixels)?;
        write_idx_labels(&lab_path, &labels)?;
    }
    Ok(())
}
