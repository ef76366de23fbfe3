use crate::word::Word;

pub const MAGIC: Word = 0x85cf_80cf;
pub const FLAGS: Word = 0;
pub const HEADER_WORDS: usize = 6;

/// A compiled program: the six-word header followed by code and constants.
///
/// Serialized as 32-bit little-endian words:
///
/// | word | field |
/// |------|-------|
/// | 0 | magic `0x85cf80cf` |
/// | 1 | flags, always 0 |
/// | 2 | d1: data words per unit of dimension |
/// | 3 | d0: constant data words |
/// | 4 | number of code and constant words |
/// | 5 | entry offset, relative to the first code word |
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Image {
    pub d1: Word,
    pub d0: Word,
    pub entry: Word,
    pub body: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("image shorter than its header ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("bad magic 0x{0:08x}")]
    BadMagic(Word),
    #[error("unsupported flags 0x{0:08x}")]
    NonzeroFlags(Word),
    #[error("body truncated: header announces {expected} words, file holds {found} bytes")]
    TruncatedBody { expected: Word, found: usize },
    #[error("{0} trailing bytes after the body")]
    TrailingBytes(usize),
    #[error("entry {entry} outside of {code_size} code words")]
    EntryOutOfRange { entry: Word, code_size: Word },
}

impl Image {
    pub fn code_size(&self) -> Word {
        self.body.len() as Word
    }

    pub fn data_size(&self, dimension: Word) -> u64 {
        self.d1 as u64 * dimension as u64 + self.d0 as u64
    }

    pub fn header(&self) -> [Word; HEADER_WORDS] {
        [MAGIC, FLAGS, self.d1, self.d0, self.code_size(), self.entry]
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * (HEADER_WORDS + self.body.len()));
        for w in self.header().iter().chain(&self.body) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    /// Decodes and validates the header. Does not require `entry` to lie
    /// inside the body, so header-only images can still be inspected; see
    /// [`Image::check_entry`].
    pub fn decode(bytes: &[u8]) -> Result<Image, FormatError> {
        if bytes.len() < 4 * HEADER_WORDS {
            return Err(FormatError::TruncatedHeader(bytes.len()));
        }
        let word = |i: usize| Word::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
        if word(0) != MAGIC {
            return Err(FormatError::BadMagic(word(0)));
        }
        if word(1) != FLAGS {
            return Err(FormatError::NonzeroFlags(word(1)));
        }
        let code_size = word(4);
        let body_bytes = &bytes[4 * HEADER_WORDS..];
        let expected = 4 * code_size as u64;
        if (body_bytes.len() as u64) < expected {
            return Err(FormatError::TruncatedBody { expected: code_size, found: body_bytes.len() });
        }
        if body_bytes.len() as u64 > expected {
            return Err(FormatError::TrailingBytes(body_bytes.len() - expected as usize));
        }
        let body = body_bytes
            .chunks_exact(4)
            .map(|c| Word::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Image { d1: word(2), d0: word(3), entry: word(5), body })
    }

    /// Executable images must start inside their code.
    pub fn check_entry(&self) -> Result<(), FormatError> {
        if self.entry < self.code_size() {
            Ok(())
        } else {
            Err(FormatError::EntryOutOfRange { entry: self.entry, code_size: self.code_size() })
        }
    }
}
