#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gustl::bytecode::Image;
use gustl::fabric::{FabricConfig, ProgramStore};

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn compile_file(path: &Path) -> Image {
    let source = std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    gustl::compile_source(&source).unwrap_or_else(|d| panic!("{}: {d:?}", path.display()))
}

/// Every program under `tests/programs`, compiled and named by file stem.
pub fn program_store() -> ProgramStore {
    let mut store = ProgramStore::new();
    for path in sources(&tests_dir().join("programs")) {
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        store.insert(stem, compile_file(&path));
    }
    store
}

/// `.gs` files of a directory in name order.
pub fn sources(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "gs"))
        .collect();
    files.sort();
    files
}

pub fn config(seed: u64, trace: bool) -> FabricConfig {
    FabricConfig { seed, trace, ..FabricConfig::default() }
}

/// The diagnostic code a negative corpus file expects, from its first
/// comment.
pub fn expected_code(path: &Path) -> String {
    let text = std::fs::read(path).unwrap();
    let text = String::from_utf8_lossy(&text);
    let first = text.lines().next().unwrap_or("");
    first.trim().trim_start_matches('{').trim_end_matches('}').trim().to_string()
}

/// Codes reported by `check` for a source file.
pub fn reported_codes(path: &Path) -> Vec<String> {
    let source = std::fs::read(path).unwrap();
    match gustl::check_source(&source) {
        Ok(_) => Vec::new(),
        Err(diags) => diags.iter().map(|d| d.code.as_str().to_string()).collect(),
    }
}
