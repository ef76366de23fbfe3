mod common;

use std::path::Path;

use common::{expected_code, reported_codes, sources, tests_dir};
use gustl::bytecode::Image;
use gustl::{lexer, syntax};

fn parse(text: &str) -> syntax::Program {
    let tokens = lexer::tokenize(text).unwrap_or_else(|d| panic!("{d}\n{text}"));
    syntax::parse(&tokens).unwrap_or_else(|d| panic!("{d}\n{text}"))
}

/// The tree dump without source positions.
fn shape(p: &syntax::Program) -> String {
    syntax::dump(p)
        .lines()
        .map(|l| match l.find(" @") {
            Some(i) => &l[..i],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn positive() -> Vec<std::path::PathBuf> {
    sources(&tests_dir().join("corpus/positive"))
}

#[test]
fn positive_corpus_compiles() {
    let files = positive();
    assert!(files.len() >= 15);
    for path in files {
        let img = common::compile_file(&path);
        assert_eq!(Image::decode(&img.encode()).as_ref(), Ok(&img), "{}", path.display());
    }
}

#[test]
fn unparse_reparse() {
    for path in positive() {
        let text = std::fs::read_to_string(&path).unwrap();
        let tree = parse(&text);
        let printed = syntax::unparse(&tree);
        let again = parse(&printed);
        assert_eq!(shape(&tree), shape(&again), "{}", path.display());
        assert_eq!(syntax::unparse(&again), printed, "{}", path.display());
        let a = gustl::compile_source(text.as_bytes()).unwrap();
        let b = gustl::compile_source(printed.as_bytes()).unwrap();
        assert_eq!(a, b, "{}", path.display());
    }
}

#[test]
fn negative_corpus_reports_expected_code_only() {
    let files = sources(&tests_dir().join("corpus/negative"));
    assert!(files.len() >= 20);
    for path in files {
        let expected = expected_code(&path);
        let got = reported_codes(&path);
        assert!(!got.is_empty(), "{} was accepted", path.display());
        assert!(got.iter().all(|c| *c == expected), "{}: expected {expected}, got {got:?}", path.display());
    }
}

#[test]
fn every_code_has_a_negative_case() {
    let listed = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/diagnostics.md")).unwrap();
    let covered: Vec<String> =
        sources(&tests_dir().join("corpus/negative")).iter().map(|p| expected_code(p)).collect();
    for line in listed.lines().filter(|l| l.starts_with("| `E-")) {
        let code = line.split('`').nth(1).unwrap();
        assert!(covered.iter().any(|c| c == code), "no negative case for {code}");
    }
}

#[test]
fn concatenation_equals_single_file() {
    let prelude = "const greeting[] = \"hi\"\nfunction twice(x) do return x * 2\n";
    let main = "process p(c) word i start repeat #greeting times c ! twice(greeting[i]) i := i + 1 done stop\n";
    let joined = format!("{prelude}{main}");
    let a = gustl::compile_source(joined.as_bytes()).unwrap();
    let tree = parse(&joined);
    assert_eq!(tree.prelude.len(), 2);
    assert_eq!(a, gustl::compile_source(syntax::unparse(&tree).as_bytes()).unwrap());
}
