#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use consolidate_core::data::synthetic::write_corpus;
use consolidate_core::data::Corpus;

pub const BIN: &str = env!("CARGO_BIN_EXE_consolidate");

/// Small settings so a sequence trains in well under a second.
pub const QUICK: [&str; 10] = [
    "--set",
    "sequence=permuted-mnist-2",
    "--set",
    "hidden=[8]",
    "--set",
    "epochs=1",
    "--set",
    "batch_size=20",
    "--set",
    "importance_samples=100",
];

pub fn synthetic_root() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), Corpus::Mnist, 400, 200, 11).unwrap();
    write_corpus(dir.path(), Corpus::FashionMnist, 400, 200, 12).unwrap();
    dir
}

pub fn run(args: &[&str], data: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--data-dir")
        .arg(data)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg("1")
        .env_remove("CONSOLIDATE_DATA_DIR")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn read(path: PathBuf) -> Vec<u8> {
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
