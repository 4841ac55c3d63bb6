use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::codec::{get_varint, put_varint, RawRecord};
use super::{encode_record, Census, OpenMode, RecordId, StoreError};
use crate::lexmodel::{check_entry, LexEntry, PosLabel, PosPart, Registry};

pub const FORMAT_VERSION: u32 = 1;

const MAGIC: &[u8; 8] = b"SYNLEXDB";
const HEADER_LEN: u64 = 64;
const FRAME_HEAD: usize = 9;
const MAX_PAYLOAD: u32 = 1 << 24;

const KIND_PUT: u8 = 1;
const KIND_DELETE: u8 = 2;
const KIND_CHECKPOINT: u8 = 3;

const INITIAL_BUCKET_BITS: u32 = 8;
const MAX_BUCKET_BITS: u32 = 24;
const MAX_LOAD: usize = 4;

// Most records fit in one read of this size.
const PROBE_READ: usize = 256;

#[derive(Debug, Clone, Copy)]
struct Header {
    version: u32,
    bucket_bits: u32,
    registry_hash: u64,
    entry_count: u64,
    mutations: u64,
    log_end: u64,
    checkpoint: u64,
    symtab_len: u32,
}

impl Header {
    fn to_bytes(self) -> [u8; HEADER_LEN as usize] {
        let mut b = [0u8; HEADER_LEN as usize];
        b[0..8].copy_from_slice(MAGIC);
        b[8..12].copy_from_slice(&self.version.to_le_bytes());
        b[12..16].copy_from_slice(&self.bucket_bits.to_le_bytes());
        b[16..24].copy_from_slice(&self.registry_hash.to_le_bytes());
        b[24..32].copy_from_slice(&self.entry_count.to_le_bytes());
        b[32..40].copy_from_slice(&self.mutations.to_le_bytes());
        b[40..48].copy_from_slice(&self.log_end.to_le_bytes());
        b[48..56].copy_from_slice(&self.checkpoint.to_le_bytes());
        b[56..60].copy_from_slice(&self.symtab_len.to_le_bytes());
        let crc = crc32fast::hash(&b[0..60]);
        b[60..64].copy_from_slice(&crc.to_le_bytes());
        b
    }

    fn from_bytes(b: &[u8]) -> Result<Header, String> {
        if b.len() < HEADER_LEN as usize {
            return Err(format!("file is {} bytes, shorter than the {HEADER_LEN}-byte header", b.len()));
        }
        if &b[0..8] != MAGIC {
            return Err("bad magic; not a synlex store".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(b[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(b[o..o + 8].try_into().unwrap());
        if crc32fast::hash(&b[0..60]) != u32_at(60) {
            return Err("header checksum mismatch".into());
        }
        Ok(Header {
            version: u32_at(8),
            bucket_bits: u32_at(12),
            registry_hash: u64_at(16),
            entry_count: u64_at(24),
            mutations: u64_at(32),
            log_end: u64_at(40),
            checkpoint: u64_at(48),
            symtab_len: u32_at(56),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    offset: u64,
    tag: u32,
}

/// Bucket directory. Each bucket lists its live records in log order.
#[derive(Debug, Clone)]
struct Directory {
    bits: u32,
    buckets: Vec<Vec<Slot>>,
}

impl Directory {
    fn new(bits: u32) -> Directory {
        Directory {
            bits,
            buckets: vec![Vec::new(); 1 << bits],
        }
    }

    fn bucket_of(&self, tag: u32) -> usize {
        (tag as usize) & ((1usize << self.bits) - 1)
    }

    fn insert(&mut self, slot: Slot) {
        let b = self.bucket_of(slot.tag);
        let bucket = &mut self.buckets[b];
        // Appends arrive in offset order; recovery may not.
        match bucket.last() {
            Some(last) if last.offset > slot.offset => {
                let at = bucket.partition_point(|s| s.offset < slot.offset);
                bucket.insert(at, slot);
            }
            _ => bucket.push(slot),
        }
    }

    fn remove(&mut self, offset: u64, tag: u32) -> bool {
        let b = self.bucket_of(tag);
        let bucket = &mut self.buckets[b];
        match bucket.iter().position(|s| s.offset == offset) {
            Some(i) => {
                bucket.remove(i);
                true
            }
            None => false,
        }
    }

    fn grow_if_needed(&mut self, live: usize) {
        while live > MAX_LOAD << self.bits && self.bits < MAX_BUCKET_BITS {
            let mut next = Directory::new(self.bits + 1);
            for bucket in &self.buckets {
                for slot in bucket {
                    let b = next.bucket_of(slot.tag);
                    next.buckets[b].push(*slot);
                }
            }
            *self = next;
        }
    }

    fn encode(&self, live: u64, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.bits.to_le_bytes());
        out.extend_from_slice(&live.to_le_bytes());
        for bucket in &self.buckets {
            put_varint(out, bucket.len() as u64);
            let mut prev = 0u64;
            for slot in bucket {
                put_varint(out, slot.offset - prev);
                prev = slot.offset;
                out.extend_from_slice(&slot.tag.to_le_bytes());
            }
        }
    }

    fn decode(buf: &[u8]) -> Result<(Directory, u64), String> {
        let malformed = || "malformed checkpoint".to_string();
        if buf.len() < 12 {
            return Err(malformed());
        }
        let bits = u32::from_le_bytes(buf[0..4].try_into().unwrap());
        if bits > MAX_BUCKET_BITS {
            return Err(format!("checkpoint has {bits} bucket bits"));
        }
        let live = u64::from_le_bytes(buf[4..12].try_into().unwrap());
        let mut dir = Directory::new(bits);
        let mut pos = 12;
        for b in 0..dir.buckets.len() {
            let (n, k) = get_varint(&buf[pos..]).map_err(|_| malformed())?;
            pos += k;
            let mut prev = 0u64;
            for _ in 0..n {
                let (delta, k) = get_varint(&buf[pos..]).map_err(|_| malformed())?;
                pos += k;
                let tag_bytes = buf.get(pos..pos + 4).ok_or_else(malformed)?;
                pos += 4;
                prev += delta;
                let tag = u32::from_le_bytes(tag_bytes.try_into().unwrap());
                if dir.bucket_of(tag) != b {
                    return Err("checkpoint slot filed under the wrong bucket".into());
                }
                dir.buckets[b].push(Slot { offset: prev, tag });
            }
        }
        if pos != buf.len() {
            return Err(malformed());
        }
        Ok((dir, live))
    }
}

fn key_tag(index: &[u8]) -> u32 {
    crate::fnv1a64(index) as u32
}

#[cfg(unix)]
fn read_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<usize> {
    std::os::unix::fs::FileExt::read_at(file, buf, offset)
}

#[cfg(windows)]
fn read_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<usize> {
    std::os::windows::fs::FileExt::seek_read(file, buf, offset)
}

fn read_exact_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> io::Result<()> {
    while !buf.is_empty() {
        match read_at(file, buf, offset) {
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

#[cfg(unix)]
fn write_all_at(file: &File, buf: &[u8], offset: u64) -> io::Result<()> {
    std::os::unix::fs::FileExt::write_all_at(file, buf, offset)
}

#[cfg(windows)]
fn write_all_at(file: &File, mut buf: &[u8], mut offset: u64) -> io::Result<()> {
    while !buf.is_empty() {
        let n = std::os::windows::fs::FileExt::seek_write(file, buf, offset)?;
        buf = &buf[n..];
        offset += n as u64;
    }
    Ok(())
}

/// Positional reader, so concurrent scans never share a file cursor.
struct AtReader<'a> {
    file: &'a File,
    pos: u64,
    end: u64,
}

impl Read for AtReader<'_> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let remaining = self.end.saturating_sub(self.pos);
        let want = buf.len().min(remaining as usize);
        if want == 0 {
            return Ok(0);
        }
        let n = read_at(self.file, &mut buf[..want], self.pos)?;
        self.pos += n as u64;
        Ok(n)
    }
}

fn frame_bytes(kind: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(FRAME_HEAD + payload.len());
    out.push(kind);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    let mut h = crc32fast::Hasher::new();
    h.update(&[kind]);
    h.update(payload);
    out.extend_from_slice(&h.finalize().to_le_bytes());
    out.extend_from_slice(payload);
    out
}

#[derive(Debug)]
enum FrameFault {
    Eof,
    Bad(String),
    Io(io::Error),
}

/// Sequential frame reader over `[start, end)`.
struct Frames<'a> {
    reader: BufReader<AtReader<'a>>,
    offset: u64,
    end: u64,
}

impl<'a> Frames<'a> {
    fn new(file: &'a File, start: u64, end: u64) -> Frames<'a> {
        Frames {
            reader: BufReader::with_capacity(
                1 << 20,
                AtReader {
                    file,
                    pos: start,
                    end,
                },
            ),
            offset: start,
            end,
        }
    }

    /// Reads the next frame into `payload`; returns its offset and kind.
    fn next_into(&mut self, payload: &mut Vec<u8>) -> Result<(u64, u8), FrameFault> {
        if self.offset >= self.end {
            return Err(FrameFault::Eof);
        }
        let at = self.offset;
        let mut head = [0u8; FRAME_HEAD];
        self.reader.read_exact(&mut head).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => FrameFault::Bad(format!("partial frame header at offset {at}")),
            _ => FrameFault::Io(e),
        })?;
        let kind = head[0];
        let len = u32::from_le_bytes(head[1..5].try_into().unwrap());
        let crc = u32::from_le_bytes(head[5..9].try_into().unwrap());
        if !matches!(kind, KIND_PUT | KIND_DELETE | KIND_CHECKPOINT) {
            return Err(FrameFault::Bad(format!("unknown record kind {kind} at offset {at}")));
        }
        if len > MAX_PAYLOAD || at + (FRAME_HEAD as u64) + u64::from(len) > self.end {
            return Err(FrameFault::Bad(format!("record at offset {at} overruns the log")));
        }
        payload.resize(len as usize, 0);
        self.reader.read_exact(payload).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => FrameFault::Bad(format!("partial record at offset {at}")),
            _ => FrameFault::Io(e),
        })?;
        let mut h = crc32fast::Hasher::new();
        h.update(&[kind]);
        h.update(payload);
        if h.finalize() != crc {
            return Err(FrameFault::Bad(format!("checksum mismatch in record at offset {at}")));
        }
        self.offset = at + FRAME_HEAD as u64 + u64::from(len);
        Ok((at, kind))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub records: u64,
    pub puts: u64,
    pub deletes: u64,
    pub checkpoints: u64,
    pub live: u64,
    pub log_bytes: u64,
    pub file_bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompactStats {
    pub bytes_before: u64,
    pub bytes_after: u64,
    pub live: u64,
}

/// An open store.
///
/// Reads take `&self` and may run from several threads at once; writes
/// take `&mut self`. Dropping a writable store flushes it; call
/// [`Store::close`] to see flush errors.
#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    mode: OpenMode,
    file: File,
    registry: Arc<Registry>,
    data_start: u64,
    end: u64,
    committed_end: u64,
    checkpoint: u64,
    checkpoint_end: u64,
    dir: Directory,
    live: HashMap<u64, u32>,
    mutations: u64,
    probes: AtomicU64,
    closed: bool,
}

impl Store {
    /// Open an existing store, or create an empty one in read-write mode
    /// when `path` does not exist. With `registry = None` the store's own
    /// embedded registry is used (the built-in one for new files).
    pub fn open(
        path: impl AsRef<Path>,
        mode: OpenMode,
        registry: Option<Arc<Registry>>,
    ) -> Result<Store, StoreError> {
        let path = path.as_ref();
        if mode == OpenMode::ReadWrite && !path.exists() {
            return Store::create(path, registry.unwrap_or_else(Registry::builtin));
        }
        let file = OpenOptions::new()
            .read(true)
            .write(mode == OpenMode::ReadWrite)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        Store::load(path.to_path_buf(), file, mode, registry)
    }

    /// Create a fresh, empty store, replacing any file at `path`.
    pub fn create(path: impl AsRef<Path>, registry: Arc<Registry>) -> Result<Store, StoreError> {
        let path = path.as_ref();
        let file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        let symtab = registry.canonical_text().as_bytes();
        let data_start = HEADER_LEN + symtab.len() as u64 + 4;
        let header = Header {
            version: FORMAT_VERSION,
            bucket_bits: INITIAL_BUCKET_BITS,
            registry_hash: registry.hash(),
            entry_count: 0,
            mutations: 0,
            log_end: data_start,
            checkpoint: 0,
            symtab_len: symtab.len() as u32,
        };
        let mut prefix = header.to_bytes().to_vec();
        prefix.extend_from_slice(symtab);
        prefix.extend_from_slice(&crc32fast::hash(symtab).to_le_bytes());
        write_all_at(&file, &prefix, 0).map_err(|e| io_err(path, e))?;
        file.sync_all().map_err(|e| io_err(path, e))?;
        Ok(Store {
            path: path.to_path_buf(),
            mode: OpenMode::ReadWrite,
            file,
            registry,
            data_start,
            end: data_start,
            committed_end: data_start,
            checkpoint: 0,
            checkpoint_end: data_start,
            dir: Directory::new(INITIAL_BUCKET_BITS),
            live: HashMap::new(),
            mutations: 0,
            probes: AtomicU64::new(0),
            closed: false,
        })
    }

    fn load(
        path: PathBuf,
        file: File,
        mode: OpenMode,
        registry: Option<Arc<Registry>>,
    ) -> Result<Store, StoreError> {
        let err_path = path.clone();
        let integrity = |detail: String| StoreError::Integrity {
            path: err_path.clone(),
            detail,
        };
        let file_len = file.metadata().map_err(|e| io_err(&path, e))?.len();
        let mut hbuf = vec![0u8; HEADER_LEN.min(file_len) as usize];
        read_exact_at(&file, &mut hbuf, 0).map_err(|e| io_err(&path, e))?;
        let header = Header::from_bytes(&hbuf).map_err(integrity)?;
        if header.version != FORMAT_VERSION {
            return Err(StoreError::VersionMismatch {
                path,
                found: header.version,
                expected: FORMAT_VERSION,
            });
        }
        let data_start = HEADER_LEN + u64::from(header.symtab_len) + 4;
        if file_len < data_start {
            return Err(integrity(format!(
                "file truncated inside the registry section ({file_len} of {data_start} bytes)"
            )));
        }
        if file_len < header.log_end {
            return Err(integrity(format!(
                "file truncated: header records a {}-byte log, file has {file_len} bytes",
                header.log_end
            )));
        }
        if header.log_end < data_start {
            return Err(integrity("log end precedes the data section".into()));
        }
        let mut symtab = vec![0u8; header.symtab_len as usize + 4];
        read_exact_at(&file, &mut symtab, HEADER_LEN).map_err(|e| io_err(&path, e))?;
        let (text, crc) = symtab.split_at(header.symtab_len as usize);
        if crc32fast::hash(text) != u32::from_le_bytes(crc.try_into().unwrap()) {
            return Err(integrity("registry section checksum mismatch".into()));
        }
        let registry = match registry {
            Some(reg) => {
                if reg.hash() != header.registry_hash {
                    return Err(StoreError::RegistryMismatch {
                        path,
                        found: header.registry_hash,
                        expected: reg.hash(),
                    });
                }
                reg
            }
            None => {
                let text = std::str::from_utf8(text)
                    .map_err(|_| integrity("registry section is not UTF-8".into()))?;
                let reg = Registry::parse(text)
                    .map_err(|e| integrity(format!("embedded registry: {e}")))?;
                if reg.hash() != header.registry_hash {
                    return Err(integrity("embedded registry does not match header hash".into()));
                }
                Arc::new(reg)
            }
        };

        let mut store = Store {
            path,
            mode,
            file,
            registry,
            data_start,
            end: data_start,
            committed_end: header.log_end,
            checkpoint: 0,
            checkpoint_end: data_start,
            dir: Directory::new(header.bucket_bits.clamp(1, MAX_BUCKET_BITS)),
            live: HashMap::new(),
            mutations: header.mutations,
            probes: AtomicU64::new(0),
            closed: false,
        };

        let mut replay_from = data_start;
        if header.checkpoint != 0 {
            let (dir, live, next) = store.read_checkpoint(header.checkpoint, header.log_end)?;
            store.live = dir
                .buckets
                .iter()
                .flatten()
                .map(|s| (s.offset, s.tag))
                .collect();
            if store.live.len() as u64 != live {
                return Err(integrity("checkpoint live count disagrees with its directory".into()));
            }
            store.dir = dir;
            store.checkpoint = header.checkpoint;
            store.checkpoint_end = next;
            replay_from = next;
        }

        let mut payload = Vec::new();
        let mut frames = Frames::new(&store.file, replay_from, header.log_end);
        let mut replayed = Vec::new();
        loop {
            match frames.next_into(&mut payload) {
                Ok((at, kind)) => replayed.push((at, kind, payload.clone())),
                Err(FrameFault::Eof) => break,
                Err(FrameFault::Bad(m)) => return Err(integrity(m)),
                Err(FrameFault::Io(e)) => return Err(io_err(&store.path, e)),
            }
        }
        drop(frames);
        for (at, kind, payload) in replayed {
            store.apply(at, kind, &payload).map_err(integrity)?;
        }
        store.end = header.log_end;

        if store.live.len() as u64 != header.entry_count {
            return Err(integrity(format!(
                "header records {} entries but the log holds {}",
                header.entry_count,
                store.live.len()
            )));
        }

        // Records appended after the last header write survive if intact.
        if file_len > header.log_end {
            let mut frames = Frames::new(&store.file, header.log_end, file_len);
            let mut tail = Vec::new();
            while let Ok((at, kind)) = frames.next_into(&mut payload) {
                tail.push((at, kind, payload.clone(), frames.offset));
            }
            drop(frames);
            for (at, kind, payload, next) in tail {
                if store.apply(at, kind, &payload).is_err() {
                    break;
                }
                if kind != KIND_CHECKPOINT {
                    store.mutations += 1;
                }
                store.end = next;
            }
            if mode == OpenMode::ReadWrite && store.end < file_len {
                store.file.set_len(store.end).map_err(|e| io_err(&store.path, e))?;
            }
        }
        Ok(store)
    }

    fn read_checkpoint(&self, offset: u64, log_end: u64) -> Result<(Directory, u64, u64), StoreError> {
        let integrity = |detail: String| StoreError::Integrity {
            path: self.path.clone(),
            detail,
        };
        if offset < self.data_start || offset >= log_end {
            return Err(integrity(format!("checkpoint offset {offset} outside the log")));
        }
        let mut frames = Frames::new(&self.file, offset, log_end);
        let mut payload = Vec::new();
        let (_, kind) = frames.next_into(&mut payload).map_err(|f| match f {
            FrameFault::Io(e) => io_err(&self.path, e),
            FrameFault::Eof => integrity("checkpoint missing".into()),
            FrameFault::Bad(m) => integrity(m),
        })?;
        if kind != KIND_CHECKPOINT {
            return Err(integrity(format!("record at {offset} is not a checkpoint")));
        }
        let (dir, live) = Directory::decode(&payload).map_err(integrity)?;
        Ok((dir, live, frames.offset))
    }

    /// Replay one record into the in-memory index.
    fn apply(&mut self, at: u64, kind: u8, payload: &[u8]) -> Result<(), String> {
        match kind {
            KIND_PUT => {
                let raw = RawRecord::parse(payload).map_err(|e| format!("record at {at}: {e}"))?;
                let slot = Slot {
                    offset: at,
                    tag: key_tag(raw.index),
                };
                self.live.insert(at, slot.tag);
                self.dir.insert(slot);
                self.dir.grow_if_needed(self.live.len());
            }
            KIND_DELETE => {
                let target = payload
                    .try_into()
                    .map(u64::from_le_bytes)
                    .map_err(|_| format!("delete record at {at} is malformed"))?;
                let tag = self
                    .live
                    .remove(&target)
                    .ok_or_else(|| format!("delete record at {at} targets dead record {target}"))?;
                self.dir.remove(target, tag);
            }
            KIND_CHECKPOINT => {}
            other => return Err(format!("unknown record kind {other} at {at}")),
        }
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn mode(&self) -> OpenMode {
        self.mode
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn len(&self) -> u64 {
        self.live.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    /// Strictly increases with every successful put or delete.
    pub fn mutation_counter(&self) -> u64 {
        self.mutations
    }

    /// Number of hash buckets examined so far by reads and writes.
    pub fn probe_count(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    pub fn bucket_count(&self) -> usize {
        self.dir.buckets.len()
    }

    pub fn file_size(&self) -> u64 {
        self.end
    }

    fn require_writable(&self) -> Result<(), StoreError> {
        match self.mode {
            OpenMode::ReadWrite => Ok(()),
            OpenMode::ReadOnly => Err(StoreError::ReadOnly),
        }
    }

    fn read_frame(&self, offset: u64) -> Result<(u8, Vec<u8>), StoreError> {
        let integrity = |detail: String| StoreError::Integrity {
            path: self.path.clone(),
            detail,
        };
        let avail = self.end.saturating_sub(offset) as usize;
        let mut buf = vec![0u8; PROBE_READ.min(avail)];
        if buf.len() < FRAME_HEAD {
            return Err(integrity(format!("record offset {offset} past end of log")));
        }
        read_exact_at(&self.file, &mut buf, offset).map_err(|e| io_err(&self.path, e))?;
        let kind = buf[0];
        let len = u32::from_le_bytes(buf[1..5].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(buf[5..9].try_into().unwrap());
        let total = FRAME_HEAD + len;
        if total > avail {
            return Err(integrity(format!("record at {offset} overruns the log")));
        }
        if total > buf.len() {
            let have = buf.len();
            buf.resize(total, 0);
            read_exact_at(&self.file, &mut buf[have..], offset + have as u64)
                .map_err(|e| io_err(&self.path, e))?;
        }
        buf.truncate(total);
        let mut h = crc32fast::Hasher::new();
        h.update(&buf[0..1]);
        h.update(&buf[FRAME_HEAD..]);
        if h.finalize() != crc {
            return Err(integrity(format!("checksum mismatch in record at {offset}")));
        }
        buf.drain(..FRAME_HEAD);
        Ok((kind, buf))
    }

    fn bucket_slots(&self, tag: u32) -> &[Slot] {
        self.probes.fetch_add(1, Ordering::Relaxed);
        &self.dir.buckets[self.dir.bucket_of(tag)]
    }

    fn find_payload(&self, tag: u32, payload: &[u8]) -> Result<Option<u64>, StoreError> {
        for slot in self.bucket_slots(tag) {
            if slot.tag != tag {
                continue;
            }
            let (_, stored) = self.read_frame(slot.offset)?;
            if stored == payload {
                return Ok(Some(slot.offset));
            }
        }
        Ok(None)
    }

    fn decode_payload(&self, payload: &[u8]) -> Result<LexEntry, StoreError> {
        let raw = RawRecord::parse(payload)?;
        self.decode_raw(&raw)
    }

    pub(crate) fn decode_raw(&self, raw: &RawRecord<'_>) -> Result<LexEntry, StoreError> {
        let utf8 = |b: &[u8]| {
            String::from_utf8(b.to_vec()).map_err(|_| StoreError::Codec(super::CodecError::Malformed("text is not UTF-8")))
        };
        let parts = raw
            .pos
            .iter()
            .map(|c| PosPart::from_code(*c).ok_or(super::CodecError::UnknownPosCode(*c)))
            .collect::<Result<Vec<_>, _>>()?;
        let frames = raw
            .frame_codes()
            .map(|c| {
                self.registry
                    .frame_by_code(c)
                    .map(|f| f.verbose_name.clone())
                    .ok_or(super::CodecError::UnknownFrameCode(c))
            })
            .collect::<Result<_, _>>()?;
        let fs = raw
            .fs_codes()
            .map(|c| {
                self.registry
                    .feature_by_code(c)
                    .map(|f| f.name.clone())
                    .ok_or(super::CodecError::UnknownFeatureCode(c))
            })
            .collect::<Result<_, _>>()?;
        Ok(LexEntry {
            index: utf8(raw.index)?,
            entry: raw.tokens().map(utf8).collect::<Result<_, _>>()?,
            pos: PosLabel::from_parts(&parts)
                .map_err(|_| super::CodecError::Malformed("POS label"))?,
            frames,
            fs,
            ex: raw.examples().map(utf8).collect::<Result<_, _>>()?,
        })
    }

    /// All entries filed under `index`, in insertion order. Examines one
    /// bucket.
    pub fn lookup(&self, index: &str) -> Result<Vec<LexEntry>, StoreError> {
        Ok(self
            .lookup_with_ids(index)?
            .into_iter()
            .map(|(_, e)| e)
            .collect())
    }

    pub fn lookup_with_ids(&self, index: &str) -> Result<Vec<(RecordId, LexEntry)>, StoreError> {
        let key = index.as_bytes();
        let tag = key_tag(key);
        let mut out = Vec::new();
        for slot in self.bucket_slots(tag) {
            if slot.tag != tag {
                continue;
            }
            let (_, payload) = self.read_frame(slot.offset)?;
            let raw = RawRecord::parse(&payload)?;
            if raw.index == key {
                out.push((RecordId(slot.offset), self.decode_raw(&raw)?));
            }
        }
        Ok(out)
    }

    pub fn get(&self, id: RecordId) -> Result<LexEntry, StoreError> {
        if !self.live.contains_key(&id.0) {
            return Err(StoreError::UnknownRecord(id));
        }
        let (_, payload) = self.read_frame(id.0)?;
        self.decode_payload(&payload)
    }

    pub fn contains(&self, e: &LexEntry) -> Result<bool, StoreError> {
        let Ok(rec) = encode_record(e, &self.registry) else {
            return Ok(false);
        };
        self.find_payload(key_tag(e.index.as_bytes()), &rec.to_bytes())
            .map(|o| o.is_some())
    }

    fn append(&mut self, kind: u8, payload: &[u8]) -> Result<u64, StoreError> {
        let bytes = frame_bytes(kind, payload);
        let at = self.end;
        write_all_at(&self.file, &bytes, at).map_err(|e| io_err(&self.path, e))?;
        self.end += bytes.len() as u64;
        Ok(at)
    }

    /// Add an entry. Exact duplicates of a stored entry are rejected.
    pub fn put(&mut self, e: &LexEntry) -> Result<RecordId, StoreError> {
        self.require_writable()?;
        check_entry(e, &self.registry)?;
        let payload = encode_record(e, &self.registry)?.to_bytes();
        let tag = key_tag(e.index.as_bytes());
        if self.find_payload(tag, &payload)?.is_some() {
            return Err(StoreError::Duplicate(e.index.clone()));
        }
        let at = self.append(KIND_PUT, &payload)?;
        self.live.insert(at, tag);
        self.dir.insert(Slot { offset: at, tag });
        self.dir.grow_if_needed(self.live.len());
        self.mutations += 1;
        Ok(RecordId(at))
    }

    /// Remove one entry; siblings under the same index are untouched.
    pub fn delete(&mut self, e: &LexEntry) -> Result<(), StoreError> {
        self.require_writable()?;
        let not_found = || StoreError::NotFound(e.index.clone());
        let payload = encode_record(e, &self.registry)
            .map_err(|_| not_found())?
            .to_bytes();
        let tag = key_tag(e.index.as_bytes());
        let at = self.find_payload(tag, &payload)?.ok_or_else(not_found)?;
        self.delete_id(RecordId(at))
    }

    pub fn delete_id(&mut self, id: RecordId) -> Result<(), StoreError> {
        self.require_writable()?;
        let tag = *self.live.get(&id.0).ok_or(StoreError::UnknownRecord(id))?;
        self.append(KIND_DELETE, &id.0.to_le_bytes())?;
        self.live.remove(&id.0);
        self.dir.remove(id.0, tag);
        self.mutations += 1;
        Ok(())
    }

    /// Replace `old` with `new` as one step: either both happen or neither.
    pub fn update(&mut self, old: &LexEntry, new: &LexEntry) -> Result<RecordId, StoreError> {
        self.require_writable()?;
        check_entry(new, &self.registry)?;
        let new_payload = encode_record(new, &self.registry)?.to_bytes();
        let old_payload = encode_record(old, &self.registry)
            .map_err(|_| StoreError::NotFound(old.index.clone()))?
            .to_bytes();
        let old_at = self
            .find_payload(key_tag(old.index.as_bytes()), &old_payload)?
            .ok_or_else(|| StoreError::NotFound(old.index.clone()))?;
        if old_payload != new_payload
            && self
                .find_payload(key_tag(new.index.as_bytes()), &new_payload)?
                .is_some()
        {
            return Err(StoreError::Duplicate(new.index.clone()));
        }
        self.delete_id(RecordId(old_at))?;
        self.put(new)
    }

    /// Visit every live record in log order without decoding it.
    pub fn scan_raw<F>(&self, mut visit: F) -> Result<(), StoreError>
    where
        F: FnMut(RecordId, &RawRecord<'_>) -> Result<(), StoreError>,
    {
        let mut frames = Frames::new(&self.file, self.data_start, self.end);
        let mut payload = Vec::new();
        loop {
            match frames.next_into(&mut payload) {
                Ok((at, KIND_PUT)) if self.live.contains_key(&at) => {
                    let raw = RawRecord::parse(&payload)?;
                    visit(RecordId(at), &raw)?;
                }
                Ok(_) => {}
                Err(FrameFault::Eof) => return Ok(()),
                Err(FrameFault::Bad(detail)) => {
                    return Err(StoreError::Integrity {
                        path: self.path.clone(),
                        detail,
                    })
                }
                Err(FrameFault::Io(e)) => return Err(io_err(&self.path, e)),
            }
        }
    }

    /// Every entry exactly once, in insertion order.
    pub fn scan(&self) -> Result<Vec<LexEntry>, StoreError> {
        Ok(self.scan_with_ids()?.into_iter().map(|(_, e)| e).collect())
    }

    pub fn scan_with_ids(&self) -> Result<Vec<(RecordId, LexEntry)>, StoreError> {
        let mut out = Vec::with_capacity(self.live.len());
        self.scan_raw(|id, raw| {
            out.push((id, self.decode_raw(raw)?));
            Ok(())
        })?;
        Ok(out)
    }

    pub fn census(&self) -> Result<Census, StoreError> {
        let mut pairs: Vec<(PosLabel, String)> = Vec::with_capacity(self.live.len());
        self.scan_raw(|_, raw| {
            let parts = raw
                .pos
                .iter()
                .map(|c| PosPart::from_code(*c).ok_or(super::CodecError::UnknownPosCode(*c)))
                .collect::<Result<Vec<_>, _>>()?;
            let label = PosLabel::from_parts(&parts)
                .map_err(|_| super::CodecError::Malformed("POS label"))?;
            pairs.push((label, String::from_utf8_lossy(raw.index).into_owned()));
            Ok(())
        })?;
        Ok(Census::from_pairs(
            pairs.iter().map(|(p, i)| (p.clone(), i.as_str())),
        ))
    }

    fn write_header(&mut self) -> Result<(), StoreError> {
        let header = Header {
            version: FORMAT_VERSION,
            bucket_bits: self.dir.bits,
            registry_hash: self.registry.hash(),
            entry_count: self.live.len() as u64,
            mutations: self.mutations,
            log_end: self.end,
            checkpoint: self.checkpoint,
            symtab_len: (self.data_start - HEADER_LEN - 4) as u32,
        };
        write_all_at(&self.file, &header.to_bytes(), 0).map_err(|e| io_err(&self.path, e))?;
        self.committed_end = self.end;
        Ok(())
    }

    /// Checkpoint the directory if it changed and commit the header.
    pub fn flush(&mut self) -> Result<(), StoreError> {
        if self.mode == OpenMode::ReadOnly {
            return Ok(());
        }
        if self.end == self.committed_end && self.end == self.checkpoint_end {
            return Ok(());
        }
        if self.end != self.checkpoint_end {
            let mut payload = Vec::new();
            self.dir.encode(self.live.len() as u64, &mut payload);
            let at = self.append(KIND_CHECKPOINT, &payload)?;
            self.checkpoint = at;
            self.checkpoint_end = self.end;
        }
        self.file.sync_data().map_err(|e| io_err(&self.path, e))?;
        self.write_header()?;
        self.file.sync_data().map_err(|e| io_err(&self.path, e))?;
        Ok(())
    }

    pub fn close(mut self) -> Result<(), StoreError> {
        self.closed = true;
        self.flush()
    }

    /// Rewrite the file with only live records and a fresh checkpoint.
    /// Record ids change, so this counts as a mutation.
    pub fn compact(&mut self) -> Result<CompactStats, StoreError> {
        self.require_writable()?;
        let bytes_before = self.end;
        let tmp = self.path.with_extension("compact-tmp");
        let mut fresh = Store::create(&tmp, self.registry.clone())?;
        let mut pending: Vec<u8> = Vec::new();
        let mut slots = Vec::with_capacity(self.live.len());
        let mut at = fresh.end;
        let mut frames = Frames::new(&self.file, self.data_start, self.end);
        let mut payload = Vec::new();
        loop {
            match frames.next_into(&mut payload) {
                Ok((off, KIND_PUT)) if self.live.contains_key(&off) => {
                    let raw = RawRecord::parse(&payload)?;
                    slots.push((at, key_tag(raw.index)));
                    let bytes = frame_bytes(KIND_PUT, &payload);
                    at += bytes.len() as u64;
                    pending.extend_from_slice(&bytes);
                    if pending.len() >= 1 << 20 {
                        fresh.write_raw(&pending)?;
                        pending.clear();
                    }
                }
                Ok(_) => {}
                Err(FrameFault::Eof) => break,
                Err(FrameFault::Bad(detail)) => {
                    return Err(StoreError::Integrity {
                        path: self.path.clone(),
                        detail,
                    })
                }
                Err(FrameFault::Io(e)) => return Err(io_err(&self.path, e)),
            }
        }
        fresh.write_raw(&pending)?;
        for (offset, tag) in slots {
            fresh.live.insert(offset, tag);
            fresh.dir.insert(Slot { offset, tag });
        }
        fresh.dir.grow_if_needed(fresh.live.len());
        fresh.mutations = self.mutations + 1;
        fresh.flush()?;
        let live = fresh.len();
        let bytes_after = fresh.end;
        fresh.closed = true;
        drop(fresh);

        std::fs::rename(&tmp, &self.path).map_err(|e| io_err(&self.path, e))?;
        self.closed = true;
        let reopened = Store::open(&self.path, OpenMode::ReadWrite, Some(self.registry.clone()))?;
        *self = reopened;
        Ok(CompactStats {
            bytes_before,
            bytes_after,
            live,
        })
    }

    fn write_raw(&mut self, bytes: &[u8]) -> Result<(), StoreError> {
        write_all_at(&self.file, bytes, self.end).map_err(|e| io_err(&self.path, e))?;
        self.end += bytes.len() as u64;
        Ok(())
    }

    /// Re-read the whole log: every frame checksum, every checkpoint, and
    /// a from-scratch rebuild of the live set compared to the open index.
    pub fn verify(&self) -> Result<VerifyReport, StoreError> {
        let integrity = |detail: String| StoreError::Integrity {
            path: self.path.clone(),
            detail,
        };
        let mut report = VerifyReport {
            log_bytes: self.end - self.data_start,
            file_bytes: self.file.metadata().map_err(|e| io_err(&self.path, e))?.len(),
            ..Default::default()
        };
        let mut rebuilt: HashMap<u64, u32> = HashMap::new();
        let mut frames = Frames::new(&self.file, self.data_start, self.end);
        let mut payload = Vec::new();
        loop {
            let (at, kind) = match frames.next_into(&mut payload) {
                Ok(v) => v,
                Err(FrameFault::Eof) => break,
                Err(FrameFault::Bad(m)) => return Err(integrity(m)),
                Err(FrameFault::Io(e)) => return Err(io_err(&self.path, e)),
            };
            report.records += 1;
            match kind {
                KIND_PUT => {
                    report.puts += 1;
                    let raw = RawRecord::parse(&payload).map_err(|e| integrity(format!("record at {at}: {e}")))?;
                    let entry = self
                        .decode_raw(&raw)
                        .map_err(|e| integrity(format!("record at {at}: {e}")))?;
                    let round = encode_record(&entry, &self.registry)
                        .map_err(|e| integrity(format!("record at {at}: {e}")))?;
                    if round.to_bytes() != payload {
                        return Err(integrity(format!("record at {at} does not re-encode identically")));
                    }
                    rebuilt.insert(at, key_tag(raw.index));
                }
                KIND_DELETE => {
                    report.deletes += 1;
                    let target = u64::from_le_bytes(
                        payload
                            .as_slice()
                            .try_into()
                            .map_err(|_| integrity(format!("malformed delete at {at}")))?,
                    );
                    if rebuilt.remove(&target).is_none() {
                        return Err(integrity(format!("delete at {at} targets dead record {target}")));
                    }
                }
                _ => {
                    report.checkpoints += 1;
                    Directory::decode(&payload).map_err(|m| integrity(format!("checkpoint at {at}: {m}")))?;
                }
            }
        }
        if rebuilt != self.live {
            return Err(integrity("rebuilt index differs from the loaded index".into()));
        }
        let mut dir_slots = 0usize;
        for (b, bucket) in self.dir.buckets.iter().enumerate() {
            for slot in bucket {
                dir_slots += 1;
                if self.dir.bucket_of(slot.tag) != b || self.live.get(&slot.offset) != Some(&slot.tag) {
                    return Err(integrity(format!("directory slot {} misfiled", slot.offset)));
                }
            }
            if bucket.windows(2).any(|w| w[0].offset >= w[1].offset) {
                return Err(integrity(format!("bucket {b} is out of log order")));
            }
        }
        if dir_slots != self.live.len() {
            return Err(integrity("directory and live set sizes differ".into()));
        }
        report.live = rebuilt.len() as u64;
        Ok(report)
    }
}

impl Drop for Store {
    fn drop(&mut self) {
        if !self.closed {
            let _ = self.flush();
        }
    }
}

fn io_err(path: &Path, source: io::Error) -> StoreError {
    StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}
