//! Compact binary form of an entry.
//!
//! POS parts become single bytes, frames and features become LEB128
//! registry codes, and the index key is stored as a position in the
//! entry-token list when (as for every valid entry) it is one of them.
//!
//! ```text
//! PAYLOAD := INDEX_SLOT TOKENS [KEY] POS FRAMES FS EX
//! INDEX_SLOT := u8          position of the key in TOKENS, or 0xFF
//! TOKENS  := n:varint (len:varint bytes){n}
//! KEY     := len:varint bytes          only when INDEX_SLOT = 0xFF
//! POS     := n:varint u8{n}
//! FRAMES  := n:varint varint{n}
//! FS      := n:varint varint{n}
//! EX      := n:varint (len:varint bytes){n}
//! ```

use thiserror::Error;

use crate::lexmodel::{LexEntry, PosLabel, PosPart, Registry};

const EXPLICIT_KEY: u8 = 0xFF;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("cannot encode unregistered frame '{0}'")]
    UnknownFrame(String),
    #[error("cannot encode unregistered feature '{0}'")]
    UnknownFeature(String),
    #[error("frame code {0} is not in the registry")]
    UnknownFrameCode(u16),
    #[error("feature code {0} is not in the registry")]
    UnknownFeatureCode(u16),
    #[error("bad POS code {0}")]
    UnknownPosCode(u8),
    #[error("malformed record: {0}")]
    Malformed(&'static str),
}

/// An entry with its POS/FRAME/FS symbols replaced by registry codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRecord {
    pub index: Vec<u8>,
    pub tokens: Vec<String>,
    pub pos: Vec<u8>,
    pub frames: Vec<u16>,
    pub fs: Vec<u16>,
    pub ex: Vec<String>,
}

pub fn encode_record(e: &LexEntry, reg: &Registry) -> Result<EncodedRecord, CodecError> {
    let frames = e
        .frames
        .iter()
        .map(|f| {
            reg.frame(f)
                .map(|f| f.code)
                .ok_or_else(|| CodecError::UnknownFrame(f.clone()))
        })
        .collect::<Result<_, _>>()?;
    let fs = e
        .fs
        .iter()
        .map(|f| {
            reg.feature(f)
                .map(|f| f.code)
                .ok_or_else(|| CodecError::UnknownFeature(f.clone()))
        })
        .collect::<Result<_, _>>()?;
    Ok(EncodedRecord {
        index: e.index.as_bytes().to_vec(),
        tokens: e.entry.clone(),
        pos: e.pos.parts().map(PosPart::code).collect(),
        frames,
        fs,
        ex: e.ex.clone(),
    })
}

pub fn decode_record(r: &EncodedRecord, reg: &Registry) -> Result<LexEntry, CodecError> {
    let parts = r
        .pos
        .iter()
        .map(|c| PosPart::from_code(*c).ok_or(CodecError::UnknownPosCode(*c)))
        .collect::<Result<Vec<_>, _>>()?;
    let pos = PosLabel::from_parts(&parts).map_err(|_| CodecError::Malformed("POS label"))?;
    let frames = r
        .frames
        .iter()
        .map(|c| {
            reg.frame_by_code(*c)
                .map(|f| f.verbose_name.clone())
                .ok_or(CodecError::UnknownFrameCode(*c))
        })
        .collect::<Result<_, _>>()?;
    let fs = r
        .fs
        .iter()
        .map(|c| {
            reg.feature_by_code(*c)
                .map(|f| f.name.clone())
                .ok_or(CodecError::UnknownFeatureCode(*c))
        })
        .collect::<Result<_, _>>()?;
    Ok(LexEntry {
        index: String::from_utf8(r.index.clone()).map_err(|_| CodecError::Malformed("index is not UTF-8"))?,
        entry: r.tokens.clone(),
        pos,
        frames,
        fs,
        ex: r.ex.clone(),
    })
}

impl EncodedRecord {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.index.len() * 2);
        let slot = self
            .tokens
            .iter()
            .position(|t| t.as_bytes() == self.index.as_slice())
            .filter(|i| *i < EXPLICIT_KEY as usize);
        out.push(slot.map_or(EXPLICIT_KEY, |i| i as u8));
        put_varint(&mut out, self.tokens.len() as u64);
        for t in &self.tokens {
            put_bytes(&mut out, t.as_bytes());
        }
        if slot.is_none() {
            put_bytes(&mut out, &self.index);
        }
        put_varint(&mut out, self.pos.len() as u64);
        out.extend_from_slice(&self.pos);
        put_varint(&mut out, self.frames.len() as u64);
        for c in &self.frames {
            put_varint(&mut out, u64::from(*c));
        }
        put_varint(&mut out, self.fs.len() as u64);
        for c in &self.fs {
            put_varint(&mut out, u64::from(*c));
        }
        put_varint(&mut out, self.ex.len() as u64);
        for s in &self.ex {
            put_bytes(&mut out, s.as_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<EncodedRecord, CodecError> {
        let raw = RawRecord::parse(buf)?;
        let tokens = raw
            .tokens()
            .map(|t| String::from_utf8(t.to_vec()).map_err(|_| CodecError::Malformed("token is not UTF-8")))
            .collect::<Result<_, _>>()?;
        let ex = raw
            .examples()
            .map(|t| String::from_utf8(t.to_vec()).map_err(|_| CodecError::Malformed("example is not UTF-8")))
            .collect::<Result<_, _>>()?;
        Ok(EncodedRecord {
            index: raw.index.to_vec(),
            tokens,
            pos: raw.pos.to_vec(),
            frames: raw.frame_codes().collect(),
            fs: raw.fs_codes().collect(),
            ex,
        })
    }
}

/// Zero-copy view over an encoded payload, used by scans so that
/// non-index predicates can be checked on codes without decoding.
#[derive(Debug, Clone, Copy)]
pub struct RawRecord<'a> {
    pub index: &'a [u8],
    tokens: &'a [u8],
    n_tokens: usize,
    pub pos: &'a [u8],
    frames: &'a [u8],
    n_frames: usize,
    fs: &'a [u8],
    n_fs: usize,
    ex: &'a [u8],
    n_ex: usize,
}

impl<'a> RawRecord<'a> {
    pub fn parse(buf: &'a [u8]) -> Result<RawRecord<'a>, CodecError> {
        let mut cur = Cursor { buf, pos: 0 };
        let slot = cur.byte()?;
        let n_tokens = cur.count()?;
        let tok_start = cur.pos;
        let mut index = None;
        for i in 0..n_tokens {
            let t = cur.bytes()?;
            if i == slot as usize {
                index = Some(t);
            }
        }
        let tokens = &buf[tok_start..cur.pos];
        let index = if slot == EXPLICIT_KEY {
            cur.bytes()?
        } else {
            index.ok_or(CodecError::Malformed("index slot out of range"))?
        };
        let n_pos = cur.count()?;
        let pos = cur.take(n_pos)?;
        let (frames, n_frames) = cur.varint_section()?;
        let (fs, n_fs) = cur.varint_section()?;
        let n_ex = cur.count()?;
        let ex_start = cur.pos;
        for _ in 0..n_ex {
            cur.bytes()?;
        }
        let ex = &buf[ex_start..cur.pos];
        if cur.pos != buf.len() {
            return Err(CodecError::Malformed("trailing bytes"));
        }
        Ok(RawRecord {
            index,
            tokens,
            n_tokens,
            pos,
            frames,
            n_frames,
            fs,
            n_fs,
            ex,
            n_ex,
        })
    }

    pub fn tokens(&self) -> impl Iterator<Item = &'a [u8]> + 'a {
        length_prefixed(self.tokens, self.n_tokens)
    }

    pub fn examples(&self) -> impl Iterator<Item = &'a [u8]> + 'a {
        length_prefixed(self.ex, self.n_ex)
    }

    pub fn frame_codes(&self) -> impl Iterator<Item = u16> + 'a {
        varints(self.frames, self.n_frames)
    }

    pub fn fs_codes(&self) -> impl Iterator<Item = u16> + 'a {
        varints(self.fs, self.n_fs)
    }
}

fn length_prefixed(buf: &[u8], n: usize) -> impl Iterator<Item = &[u8]> {
    let mut cur = Cursor { buf, pos: 0 };
    (0..n).map_while(move |_| cur.bytes().ok())
}

fn varints(buf: &[u8], n: usize) -> impl Iterator<Item = u16> + '_ {
    let mut cur = Cursor { buf, pos: 0 };
    (0..n).map_while(move |_| cur.varint().ok().map(|v| v as u16))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn byte(&mut self) -> Result<u8, CodecError> {
        let b = *self
            .buf
            .get(self.pos)
            .ok_or(CodecError::Malformed("unexpected end of record"))?;
        self.pos += 1;
        Ok(b)
    }

    fn varint(&mut self) -> Result<u64, CodecError> {
        let (v, n) = get_varint(&self.buf[self.pos..])?;
        self.pos += n;
        Ok(v)
    }

    fn count(&mut self) -> Result<usize, CodecError> {
        let n = self.varint()?;
        if n > self.buf.len() as u64 {
            return Err(CodecError::Malformed("count exceeds record size"));
        }
        Ok(n as usize)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.buf.len())
            .ok_or(CodecError::Malformed("field overruns record"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let n = self.count()?;
        self.take(n)
    }

    fn varint_section(&mut self) -> Result<(&'a [u8], usize), CodecError> {
        let n = self.count()?;
        let start = self.pos;
        for _ in 0..n {
            if self.varint()? > u64::from(u16::MAX) {
                return Err(CodecError::Malformed("symbol code out of range"));
            }
        }
        Ok((&self.buf[start..self.pos], n))
    }
}

pub(crate) fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub(crate) fn get_varint(buf: &[u8]) -> Result<(u64, usize), CodecError> {
    let mut v = 0u64;
    for (i, b) in buf.iter().enumerate().take(10) {
        v |= u64::from(b & 0x7f) << (7 * i);
        if b & 0x80 == 0 {
            return Ok((v, i + 1));
        }
    }
    Err(CodecError::Malformed("bad varint"))
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_varint(out, b.len() as u64);
    out.extend_from_slice(b);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexmodel::PosTag;
    use proptest::prelude::*;

    fn reg() -> std::sync::Arc<Registry> {
        Registry::builtin()
    }

    #[test]
    fn empty_fs_and_ex_sections() {
        let e = LexEntry::new("very", PosTag::Adverb).with_frames(["Base_Adverb"]);
        let r = encode_record(&e, &reg()).unwrap();
        assert!(r.fs.is_empty() && r.ex.is_empty());
        let bytes = r.to_bytes();
        // slot, n_tokens, "very", n_pos, pos, n_frames, frame, n_fs, n_ex
        assert_eq!(bytes.len(), 1 + 1 + 5 + 1 + 1 + 1 + 1 + 1 + 1);
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 0]);
        assert_eq!(decode_record(&EncodedRecord::from_bytes(&bytes).unwrap(), &reg()).unwrap(), e);
    }

    #[test]
    fn unknown_symbols_rejected() {
        let e = LexEntry::new("x", PosTag::Noun).with_frames(["No_Such_Frame"]);
        assert_eq!(
            encode_record(&e, &reg()),
            Err(CodecError::UnknownFrame("No_Such_Frame".into()))
        );
        let e = LexEntry::new("x", PosTag::Noun)
            .with_frames(["Base_Noun"])
            .with_fs(["sparkly"]);
        assert!(matches!(encode_record(&e, &reg()), Err(CodecError::UnknownFeature(_))));
    }

    #[test]
    fn codes_are_smaller_than_names() {
        let reg = reg();
        for f in reg.frames() {
            let mut b = Vec::new();
            put_varint(&mut b, u64::from(f.code));
            if f.verbose_name.len() > 2 {
                assert!(b.len() < f.verbose_name.len(), "{}", f.verbose_name);
            }
        }
        for f in reg.features() {
            let mut b = Vec::new();
            put_varint(&mut b, u64::from(f.code));
            if f.name.len() > 2 {
                assert!(b.len() < f.name.len(), "{}", f.name);
            }
        }
    }

    #[test]
    fn index_outside_tokens_uses_explicit_key() {
        let r = EncodedRecord {
            index: b"key".to_vec(),
            tokens: vec!["a".into()],
            pos: vec![5],
            frames: vec![5],
            fs: vec![],
            ex: vec![],
        };
        let bytes = r.to_bytes();
        assert_eq!(bytes[0], EXPLICIT_KEY);
        assert_eq!(EncodedRecord::from_bytes(&bytes).unwrap(), r);
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let e = LexEntry::new("map", PosTag::Noun).with_frames(["Base_Noun"]);
        let bytes = encode_record(&e, &reg()).unwrap().to_bytes();
        for cut in 0..bytes.len() {
            assert!(EncodedRecord::from_bytes(&bytes[..cut]).is_err(), "cut {cut}");
        }
    }

    proptest! {
        #[test]
        fn varint_round_trip(v in any::<u64>()) {
            let mut b = Vec::new();
            put_varint(&mut b, v);
            prop_assert_eq!(get_varint(&b).unwrap(), (v, b.len()));
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = EncodedRecord::from_bytes(&bytes);
        }
    }
}
