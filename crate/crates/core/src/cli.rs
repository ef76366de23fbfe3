//! Command-line front end.
//!
//! Exit codes: `compile`/`check`/`disasm` return 0 on success, 1 on
//! rejected input and 2 on I/O failure. `run` returns 0 when every process
//! halted, 2 when the root program or the store cannot be loaded, 3 on
//! deadlock, 4 when any process trapped and 5 at the step limit.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bytecode::{self, Image};
use crate::diag::{self, Diagnostic};
use crate::fabric::{self, FabricConfig, ProgramStore};
use crate::word::Word;
use crate::{codegen, lexer, sema, syntax};

#[derive(Parser, Debug)]
#[command(name = "gustl", version, about = "Guarded States Language toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DiagFormat {
    Text,
    JsonLines,
}

#[derive(clap::Args, Debug)]
struct SourceArgs {
    /// Source files, concatenated in order; standard input when none given.
    files: Vec<PathBuf>,
    /// Print the syntax tree.
    #[arg(long)]
    dump_ast: bool,
    /// Diagnostic format on standard error.
    #[arg(long, value_enum, default_value = "text")]
    diag: DiagFormat,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile source to a binary image.
    Compile {
        #[command(flatten)]
        source: SourceArgs,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Lex, parse and analyze without generating code.
    Check {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Run a program on a simulated fabric and print the words its root
    /// process sends to its control port.
    Run {
        /// Program name in the store, or a path to a `.gsx` image.
        root: String,
        /// Directory of `.gsx` images available to `new`.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Dimension of the root process.
        #[arg(long, default_value_t = 0)]
        dimension: Word,
        /// `key = value` configuration file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of processing units.
        #[arg(long)]
        units: Option<usize>,
        /// Channel capacity in tokens.
        #[arg(long)]
        capacity: Option<usize>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        call_depth: Option<usize>,
        /// Print the scheduler trace on standard error.
        #[arg(long)]
        trace: bool,
        /// Print the full run report as JSON instead of the output words.
        #[arg(long)]
        json: bool,
    },
    /// Disassemble a binary image.
    Disasm { image: PathBuf },
    /// Print the opcode table.
    Opcodes {
        #[arg(long)]
        json: bool,
    },
    /// Print the table of diagnostic codes.
    Codes,
}

/// Runs the tool; returns the process exit code.
pub fn run_cli<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match cli.command {
        Command::Compile { source, output } => compile(&source, output.as_deref(), stdin, stdout, stderr),
        Command::Check { source } => check(&source, stdin, stdout, stderr),
        Command::Run { root, store, dimension, config, seed, units, capacity, max_steps, call_depth, trace, json } => {
            let mut cfg = match config {
                Some(path) => match std::fs::read_to_string(&path) {
                    Ok(text) => match FabricConfig::parse(&text) {
                        Ok(c) => c,
                        Err(e) => {
                            let _ = writeln!(stderr, "{}: {e}", path.display());
                            return 2;
                        }
                    },
                    Err(e) => {
                        let _ = writeln!(stderr, "{}: {e}", path.display());
                        return 2;
                    }
                },
                None => FabricConfig::default(),
            };
            let overrides = [
                ("seed", seed.map(|v| v.to_string())),
                ("units", units.map(|v| v.to_string())),
                ("capacity", capacity.map(|v| v.to_string())),
                ("max_steps", max_steps.map(|v| v.to_string())),
                ("call_depth", call_depth.map(|v| v.to_string())),
            ];
            for (key, value) in overrides {
                if let Some(value) = value {
                    if cfg.set(key, &value).is_err() {
                        let _ = writeln!(stderr, "invalid value `{value}` for --{}", key.replace('_', "-"));
                        return 2;
                    }
                }
            }
            cfg.trace |= trace;
            run(&root, store.as_deref(), dimension, cfg, json, stdout, stderr)
        }
        Command::Disasm { image } => match std::fs::read(&image) {
            Ok(bytes) => match Image::decode(&bytes) {
                Ok(img) => {
                    let _ = stdout.write_all(bytecode::disassemble(&img).as_bytes());
                    0
                }
                Err(e) => {
                    let _ = writeln!(stderr, "{}: {e}", image.display());
                    1
                }
            },
            Err(e) => {
                let _ = writeln!(stderr, "{}: {e}", image.display());
                2
            }
        },
        Command::Opcodes { json } => {
            let text = if json {
                serde_json::to_string_pretty(&bytecode::opcode_table()).expect("table serializes") + "\n"
            } else {
                bytecode::opcode_table_markdown()
            };
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Command::Codes => {
            let _ = stdout.write_all(diag::codes_markdown().as_bytes());
            0
        }
    }
}

/// Concatenated sources, remembering where each file starts so positions
/// can be reported per file.
struct Sources {
    text: Vec<u8>,
    starts: Vec<(String, u32, u32)>,
}

impl Sources {
    fn read(files: &[PathBuf], stdin: &mut dyn Read) -> Result<Sources, String> {
        let mut s = Sources { text: Vec::new(), starts: Vec::new() };
        if files.is_empty() {
            s.starts.push(("<stdin>".into(), 1, 1));
            stdin.read_to_end(&mut s.text).map_err(|e| format!("<stdin>: {e}"))?;
            return Ok(s);
        }
        let (mut line, mut column) = (1u32, 1u32);
        for f in files {
            let bytes = std::fs::read(f).map_err(|e| format!("{}: {e}", f.display()))?;
            s.starts.push((f.display().to_string(), line, column));
            for &b in &bytes {
                if b == b'\n' {
                    line += 1;
                    column = 1;
                } else if b & 0xc0 != 0x80 {
                    column += 1;
                }
            }
            s.text.extend_from_slice(&bytes);
        }
        Ok(s)
    }

    /// File name and file-relative position of a diagnostic.
    fn locate(&self, d: &Diagnostic) -> (String, Diagnostic) {
        let at = (d.line, d.column);
        let (name, line, column) =
            self.starts.iter().rev().find(|(_, l, c)| (*l, *c) <= at).unwrap_or(&self.starts[0]);
        let mut local = d.clone();
        local.line = d.line - line + 1;
        if d.line == *line {
            local.column = d.column - column + 1;
        }
        (name.clone(), local)
    }
}

fn report(sources: &Sources, diags: &[Diagnostic], format: DiagFormat, stderr: &mut dyn Write) {
    for d in diags {
        let (file, local) = sources.locate(d);
        let _ = match format {
            DiagFormat::Text => writeln!(stderr, "{file}:{local}"),
            DiagFormat::JsonLines => writeln!(stderr, "{}", local.to_json_line()),
        };
    }
}

/// Front end shared by `compile` and `check`.
fn analyze(
    args: &SourceArgs,
    stdin: &mut dyn Read,
    dump: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<sema::CheckedProgram, i32> {
    let sources = Sources::read(&args.files, stdin).map_err(|e| {
        let _ = writeln!(stderr, "{e}");
        2
    })?;
    let fail = |diags: Vec<Diagnostic>, stderr: &mut dyn Write| {
        report(&sources, &diags, args.diag, stderr);
        1
    };
    let tokens = lexer::tokenize_bytes(&sources.text).map_err(|d| fail(vec![d], stderr))?;
    let tree = syntax::parse(&tokens).map_err(|d| fail(vec![d], stderr))?;
    if args.dump_ast {
        let _ = dump.write_all(syntax::dump(&tree).as_bytes());
    }
    sema::analyze(&tree).map_err(|ds| fail(ds, stderr))
}

fn compile(
    args: &SourceArgs,
    output: Option<&Path>,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let checked = {
        // with the image on standard output, the tree goes to standard error
        let mut sink = Vec::new();
        let result = analyze(args, stdin, &mut sink, stderr);
        let _ = if output.is_some() { stdout.write_all(&sink) } else { stderr.write_all(&sink) };
        match result {
            Ok(c) => c,
            Err(code) => return code,
        }
    };
    let image = match codegen::compile_program(&checked) {
        Ok(img) => img,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return 1;
        }
    };
    let bytes = image.encode();
    let written = match output {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(&bytes).map_err(|e| format!("<stdout>: {e}")),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            2
        }
    }
}

fn check(args: &SourceArgs, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match analyze(args, stdin, stdout, stderr) {
        Ok(_) => 0,
        Err(code) => code,
    }
}

fn run(
    root: &str,
    store_dir: Option<&Path>,
    dimension: Word,
    config: FabricConfig,
    json: bool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let root_path = Path::new(root);
    let (name, dir) = if root.ends_with(".gsx") {
        let stem = root_path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let parent = root_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        (stem, store_dir.unwrap_or(parent).to_path_buf())
    } else {
        (root.to_string(), store_dir.unwrap_or(Path::new(".")).to_path_buf())
    };
    let mut store = match ProgramStore::load_dir(&dir) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return 2;
        }
    };
    if store.get(&name).is_none() && root.ends_with(".gsx") {
        match std::fs::read(root_path).map_err(|e| e.to_string()).and_then(|b| Image::decode(&b).map_err(|e| e.to_string())) {
            Ok(img) => store.insert(name.clone(), img),
            Err(e) => {
                let _ = writeln!(stderr, "{root}: {e}");
                return 2;
            }
        }
    }
    if store.get(&name).is_none() {
        let _ = writeln!(stderr, "no program `{name}` in {}", dir.display());
        return 2;
    }
    let report = fabric::run(store, config, &name, dimension);
    for line in &report.trace {
        let _ = writeln!(stderr, "{line}");
    }
    if json {
        let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        for w in &report.output {
            let _ = writeln!(stdout, "{w}");
        }
    }
    let _ = writeln!(stderr, "{}", report.summary());
    report.exit_code()
}
