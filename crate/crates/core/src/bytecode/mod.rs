//! Instruction set and binary image format.
//!
//! Every instruction is one word holding the opcode, followed by as many
//! immediate words as the opcode declares. Opcode numbers are stable: they
//! are what `asm` constants in user programs refer to.

mod disasm;
mod image;

pub use disasm::disassemble;
pub use image::{FormatError, Image, FLAGS, HEADER_WORDS, MAGIC};

use serde::Serialize;

use crate::word::{BinaryOp, UnaryOp, Word};

macro_rules! opcodes {
    ($($num:literal $variant:ident $mnem:literal $imm:literal $effect:literal $doc:literal;)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        #[repr(u32)]
        pub enum Opcode {
            $($variant = $num,)*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$variant,)*];

            pub fn from_word(w: Word) -> Option<Opcode> {
                match w {
                    $($num => Some(Opcode::$variant),)*
                    _ => None,
                }
            }

            pub fn mnemonic(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $mnem,)*
                }
            }

            /// Number of immediate words following the opcode word.
            pub fn immediates(self) -> usize {
                match self {
                    $(Opcode::$variant => $imm,)*
                }
            }

            pub fn stack_effect(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $effect,)*
                }
            }

            pub fn description(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $doc,)*
                }
            }
        }
    };
}

opcodes! {
    1  Halt       "halt"       0 "--"                    "stop the process";
    2  Trap       "trap"       0 "--"                    "stop the process with an explicit trap";
    3  Push       "push"       1 "-- v"                  "push the immediate word";
    4  Drop       "drop"       0 "v --"                  "discard the top word";
    5  Dup        "dup"        0 "v -- v v"              "duplicate the top word";
    6  Swap       "swap"       0 "a b -- b a"            "exchange the two top words";
    7  PushDim    "pushdim"    2 "-- a*dim+b"            "push immediate a times the dimension plus immediate b";
    8  LoadG      "loadg"      1 "-- v"                  "load data memory word at the immediate address";
    9  StoreG     "storeg"     1 "v --"                  "store to data memory at the immediate address";
    10 LoadL      "loadl"      1 "-- v"                  "load frame slot";
    11 StoreL     "storel"     1 "v --"                  "store frame slot";
    12 LocalRef   "localref"   1 "-- ref"                "push a reference to a frame slot";
    13 LoadX      "loadx"      0 "ref len i -- v"        "load element i of an array reference (traps unless i < len)";
    14 StoreX     "storex"     0 "v ref len i --"        "store element i of an array reference (traps unless i < len)";
    15 LoadC      "loadc"      1 "-- v"                  "load the code/constant word at the immediate address";
    16 Slice      "slice"      0 "ref len off -- ref' len'" "advance an array reference by off (traps if off > len)";
    17 Narrow     "narrow"     1 "ref len -- ref n"      "restrict an array reference to n words (traps if len < n)";
    18 Add        "add"        0 "a b -- a+b"            "addition modulo 2^32";
    19 Sub        "sub"        0 "a b -- a-b"            "subtraction modulo 2^32";
    20 Mul        "mul"        0 "a b -- a*b"            "multiplication modulo 2^32";
    21 DivU       "divu"       0 "a b -- a/b"            "unsigned division (traps on zero)";
    22 DivE       "dive"       0 "a b -- a/$b"           "signed Euclidean division (traps on zero)";
    23 ModU       "modu"       0 "a b -- a%b"            "unsigned remainder (traps on zero)";
    24 ModE       "mode"       0 "a b -- a%$b"           "signed Euclidean remainder, 0 <= r < |b| (traps on zero)";
    25 And        "and"        0 "a b -- a&b"            "bitwise and";
    26 Or         "or"         0 "a b -- a|b"            "bitwise or";
    27 Xor        "xor"        0 "a b -- a^b"            "bitwise exclusive or";
    28 Shl        "shl"        0 "a n -- a<<n"           "shift left, 0 when n >= 32";
    29 ShrU       "shru"       0 "a n -- a>>n"           "logical shift right, 0 when n >= 32";
    30 ShrA       "shra"       0 "a n -- a>>$n"          "arithmetic shift right, sign fill when n >= 32";
    31 Eq         "eq"         0 "a b -- f"              "1 if a = b else 0";
    32 Ne         "ne"         0 "a b -- f"              "1 if a <> b else 0";
    33 LtU        "ltu"        0 "a b -- f"              "unsigned a < b";
    34 LtS        "lts"        0 "a b -- f"              "signed a < b";
    35 LeU        "leu"        0 "a b -- f"              "unsigned a <= b";
    36 LeS        "les"        0 "a b -- f"              "signed a <= b";
    37 GtU        "gtu"        0 "a b -- f"              "unsigned a > b";
    38 GtS        "gts"        0 "a b -- f"              "signed a > b";
    39 GeU        "geu"        0 "a b -- f"              "unsigned a >= b";
    40 GeS        "ges"        0 "a b -- f"              "signed a >= b";
    41 Not        "not"        0 "a -- ~a"               "bitwise complement";
    42 Neg        "neg"        0 "a -- -a"               "two's complement negation";
    43 Jmp        "jmp"        1 "--"                    "jump to the immediate address";
    44 Jz         "jz"         1 "f --"                  "jump if the popped word is zero";
    45 Jnz        "jnz"        1 "f --"                  "jump if the popped word is non-zero";
    46 Call       "call"       1 "args --"               "call the subroutine at the immediate address";
    47 Enter      "enter"      2 "args --"               "open a frame: pop the given number of argument words, zero the given number of further slots";
    48 Ret        "ret"        0 "--"                    "close the frame and return to the caller";
    49 PortSet    "portset"    0 "v port --"             "set the destination of a local port";
    50 PortRead   "portread"   0 "port -- dest"          "read the destination of a local port (0 if unset)";
    51 Send       "send"       0 "v port --"             "transmit a data token; waits while the channel is full";
    52 SendEnd    "sendend"    0 "port --"               "transmit an end token; waits while the channel is full";
    53 SendPause  "sendpause"  0 "port --"               "transmit a pause token (message boundary, dropped at delivery)";
    54 Recv       "recv"       0 "port -- v f"           "non-blocking receive: consumes data (f=1) or a pending end token (f=0)";
    55 RecvEnd    "recvend"    0 "port -- f"             "non-blocking end check: consumes an end token (f=1), leaves data alone";
    56 Now        "now"        0 "-- t"                  "current simulated time";
    57 NewProc    "newproc"    0 "ref len dim extra -- id" "start a process by name; id of its control port or 0";
    58 SetState   "setstate"   1 "--"                    "make the immediate the current state and clear its deadline";
    59 SetDeadline "setdeadline" 0 "t --"                "arm the expiration guard of the current state t ticks from now";
    60 GuardWait  "guardwait"  1 "--"                    "select a ready guarded statement of the current state (state table at the immediate)";
    61 PortId     "portid"     0 "port -- id"            "global identification of a local port";
    62 Ports      "ports"      1 "--"                    "declare the given number of local ports, each receiving a fresh global identification";
}

/// Published form of one opcode table row.
#[derive(Clone, Debug, Serialize)]
pub struct OpcodeInfo {
    pub name: &'static str,
    pub number: u32,
    pub immediates: usize,
    pub stack: &'static str,
    pub description: &'static str,
}

pub fn opcode_table() -> Vec<OpcodeInfo> {
    Opcode::ALL
        .iter()
        .map(|&op| OpcodeInfo {
            name: op.mnemonic(),
            number: op as u32,
            immediates: op.immediates(),
            stack: op.stack_effect(),
            description: op.description(),
        })
        .collect()
}

pub fn opcode_table_markdown() -> String {
    let mut s = String::from(
        "# Opcode table\n\n\
         Generated by `gustl opcodes`. Numbers are stable and may be used as `asm` constants.\n\n\
         | number | mnemonic | immediates | stack | description |\n\
         |-------:|----------|-----------:|-------|-------------|\n",
    );
    for row in opcode_table() {
        s.push_str(&format!(
            "| {} | `{}` | {} | `{}` | {} |\n",
            row.number, row.name, row.immediates, row.stack, row.description
        ));
    }
    s
}

impl Opcode {
    pub fn binary(op: BinaryOp) -> Opcode {
        match op {
            BinaryOp::Add => Opcode::Add,
            BinaryOp::Sub => Opcode::Sub,
            BinaryOp::Mul => Opcode::Mul,
            BinaryOp::DivU => Opcode::DivU,
            BinaryOp::DivE => Opcode::DivE,
            BinaryOp::ModU => Opcode::ModU,
            BinaryOp::ModE => Opcode::ModE,
            BinaryOp::And => Opcode::And,
            BinaryOp::Or => Opcode::Or,
            BinaryOp::Xor => Opcode::Xor,
            BinaryOp::Shl => Opcode::Shl,
            BinaryOp::ShrU => Opcode::ShrU,
            BinaryOp::ShrA => Opcode::ShrA,
            BinaryOp::Eq => Opcode::Eq,
            BinaryOp::Ne => Opcode::Ne,
            BinaryOp::LtU => Opcode::LtU,
            BinaryOp::LtS => Opcode::LtS,
            BinaryOp::LeU => Opcode::LeU,
            BinaryOp::LeS => Opcode::LeS,
            BinaryOp::GtU => Opcode::GtU,
            BinaryOp::GtS => Opcode::GtS,
            BinaryOp::GeU => Opcode::GeU,
            BinaryOp::GeS => Opcode::GeS,
        }
    }

    pub fn as_binary(self) -> Option<BinaryOp> {
        Some(match self {
            Opcode::Add => BinaryOp::Add,
            Opcode::Sub => BinaryOp::Sub,
            Opcode::Mul => BinaryOp::Mul,
            Opcode::DivU => BinaryOp::DivU,
            Opcode::DivE => BinaryOp::DivE,
            Opcode::ModU => BinaryOp::ModU,
            Opcode::ModE => BinaryOp::ModE,
            Opcode::And => BinaryOp::And,
            Opcode::Or => BinaryOp::Or,
            Opcode::Xor => BinaryOp::Xor,
            Opcode::Shl => BinaryOp::Shl,
            Opcode::ShrU => BinaryOp::ShrU,
            Opcode::ShrA => BinaryOp::ShrA,
            Opcode::Eq => BinaryOp::Eq,
            Opcode::Ne => BinaryOp::Ne,
            Opcode::LtU => BinaryOp::LtU,
            Opcode::LtS => BinaryOp::LtS,
            Opcode::LeU => BinaryOp::LeU,
            Opcode::LeS => BinaryOp::LeS,
            Opcode::GtU => BinaryOp::GtU,
            Opcode::GtS => BinaryOp::GtS,
            Opcode::GeU => BinaryOp::GeU,
            Opcode::GeS => BinaryOp::GeS,
            _ => return None,
        })
    }

    pub fn unary(op: UnaryOp) -> Opcode {
        match op {
            UnaryOp::Neg => Opcode::Neg,
            UnaryOp::Not => Opcode::Not,
        }
    }
}

/// Guard kinds as stored in compiled guard tables.
pub mod guard_kind {
    pub const ALWAYS: u32 = 0;
    pub const TRANSMIT_READY: u32 = 1;
    pub const RECEIVE: u32 = 2;
    pub const RECEIVE_END: u32 = 3;
    pub const AFTER: u32 = 4;
}

/// Array references carry their address space in the top two bits.
pub mod reference {
    pub const SPACE_SHIFT: u32 = 30;
    pub const OFFSET_MASK: u32 = (1 << SPACE_SHIFT) - 1;
    pub const DATA: u32 = 0;
    pub const CODE: u32 = 1 << SPACE_SHIFT;
    pub const FRAME: u32 = 2 << SPACE_SHIFT;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbering_is_sequential_from_one() {
        for (i, op) in Opcode::ALL.iter().enumerate() {
            assert_eq!(*op as u32, i as u32 + 1);
            assert_eq!(Opcode::from_word(*op as u32), Some(*op));
        }
        assert_eq!(Opcode::from_word(0), None);
        assert_eq!(Opcode::from_word(Opcode::ALL.len() as u32 + 1), None);
    }

    #[test]
    fn binary_mapping_round_trips() {
        for op in Opcode::ALL {
            if let Some(b) = op.as_binary() {
                assert_eq!(Opcode::binary(b), *op);
            }
        }
    }

    #[test]
    fn published_table_is_current() {
        let on_disk = include_str!("../../../../docs/opcodes.md");
        assert_eq!(on_disk, opcode_table_markdown(), "regenerate docs/opcodes.md with `gustl opcodes`");
    }
}
