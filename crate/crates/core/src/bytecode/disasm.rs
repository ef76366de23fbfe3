use std::fmt::Write;

use super::{Image, Opcode, MAGIC};

/// Renders a human-readable listing: the header, then one line per
/// instruction. Words that do not decode (constant data, unknown opcodes,
/// instructions cut off by the end of the body or by the entry point)
/// are shown as `.word`.
pub fn disassemble(img: &Image) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "header:");
    let _ = writeln!(out, "  magic 0x{MAGIC:08x}");
    let _ = writeln!(out, "  flags 0");
    let _ = writeln!(out, "  d1 {}", img.d1);
    let _ = writeln!(out, "  d0 {}", img.d0);
    let _ = writeln!(out, "  code {}", img.code_size());
    let _ = writeln!(out, "  entry {}", img.entry);

    let body = &img.body;
    let entry = img.entry as usize;
    let mut i = 0;
    while i < body.len() {
        if i == entry {
            let _ = writeln!(out, "entry:");
        }
        let decoded = Opcode::from_word(body[i]).filter(|op| {
            let n = op.immediates();
            i + n < body.len() && !(i + 1..=i + n).contains(&entry)
        });
        match decoded {
            Some(op) => {
                let n = op.immediates();
                let operands: Vec<String> = body[i + 1..=i + n].iter().map(|w| w.to_string()).collect();
                if operands.is_empty() {
                    let _ = writeln!(out, "{i:04}: {}", op.mnemonic());
                } else {
                    let _ = writeln!(out, "{i:04}: {} {}", op.mnemonic(), operands.join(", "));
                }
                i += 1 + n;
            }
            None => {
                let _ = writeln!(out, "{i:04}: .word 0x{:08x}", body[i]);
                i += 1;
            }
        }
    }
    out
}
