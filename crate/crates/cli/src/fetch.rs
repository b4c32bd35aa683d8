//! Downloading and validating the IDX corpora.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use consolidate_core::data::{corpus_paths, load_corpus, Corpus, Split};
use flate2::read::GzDecoder;

use crate::{CliError, Result};

const MAX_DOWNLOAD: u64 = 128 << 20;
pub const TRAIN_COUNT: usize = 60_000;
pub const TEST_COUNT: usize = 10_000;

/// Target paths of a corpus in download order.
pub fn target_files(root: &Path, corpus: Corpus) -> Vec<PathBuf> {
    [Split::Train, Split::Test]
        .into_iter()
        .flat_map(|s| {
            let (img, lab) = corpus_paths(root, corpus, s);
            [img, lab]
        })
        .collect()
}

fn download(url: &str) -> Result<Vec<u8>> {
    let err = |detail: String| CliError::Download {
        url: url.to_string(),
        detail,
    };
    let mut response = ureq::get(url).call().map_err(|e| err(e.to_string()))?;
    response
        .body_mut()
        .with_config()
        .limit(MAX_DOWNLOAD)
        .read_to_vec()
        .map_err(|e| err(e.to_string()))
}

fn gunzip_if_needed(bytes: Vec<u8>, url: &str) -> Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&bytes[..])
            .read_to_end(&mut out)
            .map_err(|e| CliError::Download {
                url: url.to_string(),
                detail: format!("bad gzip stream: {e}"),
            })?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Fetches `<mirror>/<name>.gz` for the four files of `corpus` and stores
/// them decompressed under the data root.
pub fn fetch_corpus(mirror: &str, root: &Path, corpus: Corpus) -> Result<()> {
    let base = mirror.trim_end_matches('/');
    for path in target_files(root, corpus) {
        let name = path.file_name().and_then(|n| n.to_str()).expect("static file names");
        let url = format!("{base}/{name}.gz");
        eprintln!("fetching {url}");
        let bytes = gunzip_if_needed(download(&url)?, &url)?;
        let dir = path.parent().expect("corpus files live in a directory");
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let tmp = path.with_extension("part");
        fs::write(&tmp, &bytes).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// Loads a corpus and checks image size and, unless `any_count`, the
/// standard sample counts. Returns `(n_train, n_test)`.
pub fn validate_corpus(root: &Path, corpus: Corpus, any_count: bool) -> Result<(usize, usize)> {
    let data = load_corpus(root, corpus)?;
    for d in [&data.train, &data.test] {
        if (d.rows(), d.cols()) != (28, 28) {
            return Err(CliError::Data(format!(
                "{}: images are {}x{}, expected 28x28",
                corpus.dir_name(),
                d.rows(),
                d.cols()
            )));
        }
    }
    let counts = (data.train.len(), data.test.len());
    if !any_count && counts != (TRAIN_COUNT, TEST_COUNT) {
        return Err(CliError::Data(format!(
            "{}: found {} train / {} test samples, expected {TRAIN_COUNT} / {TEST_COUNT} (pass --any-count to accept)",
            corpus.dir_name(),
            counts.0,
            counts.1
        )));
    }
    Ok(counts)
}
