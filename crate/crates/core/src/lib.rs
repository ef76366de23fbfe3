//! Toolchain for the Guarded States Language (GuStL): lexer, parser,
//! static analysis, code generation, the bytecode image format, a virtual
//! machine, and a simulator for a fabric of message-passing processing units.

pub mod bytecode;
pub mod cli;
pub mod codegen;
pub mod diag;
pub mod fabric;
pub mod lexer;
pub mod runtime;
pub mod sema;
pub mod syntax;
pub mod word;

use bytecode::Image;
use diag::Diagnostic;

/// Lexes, parses and analyzes a source text.
pub fn check_source(source: &[u8]) -> Result<sema::CheckedProgram, Vec<Diagnostic>> {
    let tokens = lexer::tokenize_bytes(source).map_err(|d| vec![d])?;
    let tree = syntax::parse(&tokens).map_err(|d| vec![d])?;
    sema::analyze(&tree)
}

/// Compiles a source text to an image.
///
/// # Panics
/// If the program is too large for constant references to address.
pub fn compile_source(source: &[u8]) -> Result<Image, Vec<Diagnostic>> {
    let checked = check_source(source)?;
    Ok(codegen::compile_program(&checked).expect("program size within image limits"))
}
