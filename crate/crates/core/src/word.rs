//! Word arithmetic shared by the compile-time evaluator and the VM.
//!
//! A word is an unsigned 32-bit quantity. Signedness belongs to the
//! operation: signed variants view their operands as two's complement.
//! Everything wraps modulo 2^32.

pub type Word = u32;

/// Binary operations on words, one per arithmetic/compare opcode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    DivU,
    DivE,
    ModU,
    ModE,
    And,
    Or,
    Xor,
    Shl,
    ShrU,
    ShrA,
    Eq,
    Ne,
    LtU,
    LtS,
    LeU,
    LeS,
    GtU,
    GtS,
    GeU,
    GeS,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("division by zero")]
pub struct DivideByZero;

/// Euclidean quotient: the remainder `n - d*q` lies in `0..|d|`.
pub fn div_euclid(n: Word, d: Word) -> Result<Word, DivideByZero> {
    if d == 0 {
        return Err(DivideByZero);
    }
    Ok((n as i32).wrapping_div_euclid(d as i32) as Word)
}

/// Euclidean remainder, always in `0..|d|`.
pub fn mod_euclid(n: Word, d: Word) -> Result<Word, DivideByZero> {
    if d == 0 {
        return Err(DivideByZero);
    }
    Ok((n as i32).wrapping_rem_euclid(d as i32) as Word)
}

fn shift_left(v: Word, n: Word) -> Word {
    if n >= 32 {
        0
    } else {
        v << n
    }
}

fn shift_right(v: Word, n: Word) -> Word {
    if n >= 32 {
        0
    } else {
        v >> n
    }
}

fn shift_right_arith(v: Word, n: Word) -> Word {
    ((v as i32) >> n.min(31)) as Word
}

fn flag(b: bool) -> Word {
    b as Word
}

pub fn binary(op: BinaryOp, a: Word, b: Word) -> Result<Word, DivideByZero> {
    use BinaryOp::*;
    let (sa, sb) = (a as i32, b as i32);
    Ok(match op {
        Add => a.wrapping_add(b),
        Sub => a.wrapping_sub(b),
        Mul => a.wrapping_mul(b),
        DivU => a.checked_div(b).ok_or(DivideByZero)?,
        ModU => a.checked_rem(b).ok_or(DivideByZero)?,
        DivE => div_euclid(a, b)?,
        ModE => mod_euclid(a, b)?,
        And => a & b,
        Or => a | b,
        Xor => a ^ b,
        Shl => shift_left(a, b),
        ShrU => shift_right(a, b),
        ShrA => shift_right_arith(a, b),
        Eq => flag(a == b),
        Ne => flag(a != b),
        LtU => flag(a < b),
        LtS => flag(sa < sb),
        LeU => flag(a <= b),
        LeS => flag(sa <= sb),
        GtU => flag(a > b),
        GtS => flag(sa > sb),
        GeU => flag(a >= b),
        GeS => flag(sa >= sb),
    })
}

pub fn unary(op: UnaryOp, a: Word) -> Word {
    match op {
        UnaryOp::Neg => a.wrapping_neg(),
        UnaryOp::Not => !a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: i32) -> Word {
        v as Word
    }

    #[test]
    fn euclid_examples() {
        assert_eq!(div_euclid(s(-7), 2).unwrap(), s(-4));
        assert_eq!(mod_euclid(s(-7), 2).unwrap(), 1);
        assert_eq!(div_euclid(7, 2).unwrap(), 3);
        assert_eq!(mod_euclid(7, 2).unwrap(), 1);
        assert_eq!(div_euclid(s(-7), s(-2)).unwrap(), 4);
        assert_eq!(mod_euclid(s(-7), s(-2)).unwrap(), 1);
        assert_eq!(div_euclid(1, 0), Err(DivideByZero));
        assert_eq!(binary(BinaryOp::ModU, 1, 0), Err(DivideByZero));
    }

    #[test]
    fn euclid_extreme() {
        // i32::MIN / -1 wraps back to i32::MIN with remainder 0
        assert_eq!(div_euclid(s(i32::MIN), s(-1)).unwrap(), s(i32::MIN));
        assert_eq!(mod_euclid(s(i32::MIN), s(-1)).unwrap(), 0);
    }

    #[test]
    fn shifts_saturate() {
        assert_eq!(binary(BinaryOp::Shl, 1, 32).unwrap(), 0);
        assert_eq!(binary(BinaryOp::ShrU, u32::MAX, 40).unwrap(), 0);
        assert_eq!(binary(BinaryOp::ShrA, s(-8), 100).unwrap(), u32::MAX);
        assert_eq!(binary(BinaryOp::ShrA, 8, 100).unwrap(), 0);
        assert_eq!(binary(BinaryOp::ShrA, s(-8), 1).unwrap(), s(-4));
    }

    #[test]
    fn wraparound() {
        assert_eq!(binary(BinaryOp::Sub, 0, 1).unwrap(), 0xffff_ffff);
        assert_eq!(unary(UnaryOp::Neg, 1), 0xffff_ffff);
        assert_eq!(unary(UnaryOp::Not, 0), 0xffff_ffff);
    }

    // Brute-force oracle: search the remainder directly in 0..|d| and
    // recover the quotient from it.
    fn euclid_oracle(n: i64, d: i64) -> (i64, i64) {
        let r = (0..d.abs()).find(|r| (n - r) % d == 0).unwrap();
        ((n - r) / d, r)
    }

    #[test]
    fn euclid_matches_brute_force_grid() {
        for n in -100i64..=100 {
            for d in -10i64..=10 {
                if d == 0 {
                    continue;
                }
                let (q, r) = euclid_oracle(n, d);
                assert_eq!(div_euclid(n as i32 as Word, d as i32 as Word).unwrap(), q as i32 as Word);
                assert_eq!(mod_euclid(n as i32 as Word, d as i32 as Word).unwrap(), r as Word);
            }
        }
    }

    proptest! {
        #[test]
        fn euclid_identity(n in any::<i32>(), d in any::<i32>().prop_filter("nonzero", |d| *d != 0)) {
            let q = div_euclid(n as Word, d as Word).unwrap() as i32 as i64;
            let r = mod_euclid(n as Word, d as Word).unwrap() as i64;
            prop_assert!(r >= 0 && r < (d as i64).abs());
            let lhs = (d as i64) * q + r;
            prop_assert_eq!(lhs as i32, n);
        }

        #[test]
        fn signed_unsigned_compare_agree_below_sign_bit(a in 0u32..0x8000_0000, b in 0u32..0x8000_0000) {
            prop_assert_eq!(binary(BinaryOp::LtU, a, b).unwrap(), binary(BinaryOp::LtS, a, b).unwrap());
            prop_assert_eq!(binary(BinaryOp::GeU, a, b).unwrap(), binary(BinaryOp::GeS, a, b).unwrap());
        }

        #[test]
        fn signed_unsigned_differ_iff_one_sign_bit(a in any::<u32>(), b in any::<u32>()) {
            prop_assume!(a != b);
            let differ = binary(BinaryOp::LtU, a, b).unwrap() != binary(BinaryOp::LtS, a, b).unwrap();
            prop_assert_eq!(differ, (a >> 31) != (b >> 31));
        }
    }
}
