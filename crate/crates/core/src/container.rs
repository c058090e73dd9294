//! The "AIOU v1" map archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 0..4    magic "AIOU"
//! 4       version (0x01)
//! 5..13   record count, u64
//! then per record:
//!         u16 name length, name bytes (UTF-8, "<image_id>/<feature>")
//!         u8  kind (0 attention, 1 mask)
//!         u32 height, u32 width
//!         height*width f32 values, row-major
//! ```
//!
//! Payloads are single precision on disk and widened to `f64` on read.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::Map;

pub const MAGIC: &[u8; 4] = b"AIOU";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 13;

/// Image id -> map, iterated in image id order.
pub type MapSet = BTreeMap<String, Map>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum RecordKind {
    Attention = 0,
    Mask = 1,
}

impl RecordKind {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Self::Attention),
            1 => Ok(Self::Mask),
            other => Err(Error::BadRecordKind(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapRecord {
    pub name: String,
    pub kind: RecordKind,
    pub map: Map,
}

impl MapRecord {
    pub fn new(image_id: &str, feature: &str, kind: RecordKind, map: Map) -> Result<Self> {
        let name = format!("{image_id}/{feature}");
        validate_name(&name)?;
        Ok(Self { name, kind, map })
    }

    pub fn image_id(&self) -> &str {
        self.name.split_once('/').map_or(&self.name, |(id, _)| id)
    }

    pub fn feature(&self) -> &str {
        self.name.split_once('/').map_or("", |(_, f)| f)
    }
}

pub fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::InvalidName(name.into(), "empty"));
    }
    if name.len() > u16::MAX as usize {
        return Err(Error::InvalidName(name.into(), "longer than 65535 bytes"));
    }
    if name.bytes().filter(|&b| b == b'/').count() != 1 {
        return Err(Error::InvalidName(name.into(), "must contain exactly one '/'"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapContainer {
    pub version: u8,
    pub records: Vec<MapRecord>,
}

impl MapContainer {
    pub fn new(records: Vec<MapRecord>) -> Self {
        Self {
            version: VERSION,
            records,
        }
    }

    /// All maps whose feature part equals `feature`, keyed by image id.
    pub fn select(&self, feature: &str) -> MapSet {
        self.records
            .iter()
            .filter(|r| r.feature() == feature)
            .map(|r| (r.image_id().to_owned(), r.map.clone()))
            .collect()
    }

    /// Distinct feature names in first-appearance order.
    pub fn features(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.feature()))
            .map(|r| r.feature().to_owned())
            .collect()
    }

    pub fn image_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.image_id()))
            .map(|r| r.image_id().to_owned())
            .collect()
    }
}

/// Serializes `records` and returns the number of bytes written.
pub fn write_container<W: Write>(records: &[MapRecord], mut dest: W) -> Result<u64> {
    let mut names = HashSet::with_capacity(records.len());
    for r in records {
        validate_name(&r.name)?;
        if !names.insert(r.name.as_str()) {
            return Err(Error::DuplicateName(r.name.clone()));
        }
    }

    let mut written = 0u64;
    let mut put = |bytes: &[u8]| -> io::Result<()> {
        written += bytes.len() as u64;
        dest.write_all(bytes)
    };
    put(MAGIC)?;
    put(&[VERSION])?;
    put(&(records.len() as u64).to_le_bytes())?;
    let mut payload = Vec::new();
    for r in records {
        put(&(r.name.len() as u16).to_le_bytes())?;
        put(r.name.as_bytes())?;
        put(&[r.kind as u8])?;
        put(&(r.map.height() as u32).to_le_bytes())?;
        put(&(r.map.width() as u32).to_le_bytes())?;
        payload.clear();
        payload.reserve(r.map.data().len() * 4);
        for &v in r.map.data() {
            payload.extend_from_slice(&(v as f32).to_le_bytes());
        }
        put(&payload)?;
    }
    dest.flush()?;
    Ok(written)
}

pub fn read_container<R: Read>(source: R) -> Result<MapContainer> {
    let reader = ContainerReader::new(source)?;
    let version = reader.version();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok(MapContainer { version, records })
}

/// Header of a single record, payload not yet read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordHeader {
    pub name: String,
    pub kind: RecordKind,
    pub height: u32,
    pub width: u32,
}

impl RecordHeader {
    pub fn payload_len(&self) -> u64 {
        self.height as u64 * self.width as u64 * 4
    }
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], err: impl FnOnce() -> Error) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            err()
        } else {
            Error::Io(e)
        }
    })
}

fn read_file_header<R: Read>(r: &mut R) -> Result<(u8, u64)> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match r.read(&mut header[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let magic_len = filled.min(4);
    if header[..magic_len] != MAGIC[..magic_len] || filled == 0 {
        return Err(Error::BadMagic(header[..magic_len].to_vec()));
    }
    if filled < HEADER_LEN {
        return Err(Error::TruncatedHeader);
    }
    if header[4] != VERSION {
        return Err(Error::UnsupportedVersion(header[4]));
    }
    let count = u64::from_le_bytes(header[5..13].try_into().unwrap());
    Ok((header[4], count))
}

fn read_record_header<R: Read>(r: &mut R, index: u64) -> Result<RecordHeader> {
    let truncated = |context| move || Error::TruncatedRecord { index, context };
    let mut len = [0u8; 2];
    read_exact_or(r, &mut len, truncated("name length"))?;
    let mut name = vec![0u8; u16::from_le_bytes(len) as usize];
    read_exact_or(r, &mut name, truncated("name"))?;
    let name = String::from_utf8(name)
        .map_err(|e| Error::InvalidName(String::from_utf8_lossy(e.as_bytes()).into(), "not UTF-8"))?;
    validate_name(&name)?;
    let mut fixed = [0u8; 9];
    read_exact_or(r, &mut fixed, truncated("kind/shape"))?;
    let kind = RecordKind::from_byte(fixed[0])?;
    let height = u32::from_le_bytes(fixed[1..5].try_into().unwrap());
    let width = u32::from_le_bytes(fixed[5..9].try_into().unwrap());
    Ok(RecordHeader {
        name,
        kind,
        height,
        width,
    })
}

fn decode_payload(header: RecordHeader, bytes: &[u8]) -> Result<MapRecord> {
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let map = Map::new(header.height as usize, header.width as usize, data)
        .map_err(|e| match e {
            Error::InvalidMap(msg) => Error::InvalidMap(format!("{}: {msg}", header.name)),
            other => other,
        })?;
    Ok(MapRecord {
        name: header.name,
        kind: header.kind,
        map,
    })
}

/// Streaming reader: holds at most one record payload in memory at a time.
pub struct ContainerReader<R> {
    source: R,
    version: u8,
    count: u64,
    next: u64,
    seen: HashSet<String>,
    failed: bool,
}

impl<R: Read> ContainerReader<R> {
    pub fn new(mut source: R) -> Result<Self> {
        let (version, count) = read_file_header(&mut source)?;
        Ok(Self {
            source,
            version,
            count,
            next: 0,
            seen: HashSet::new(),
            failed: false,
        })
    }

    pub fn version(&self) -> u8 {
        self.version
    }

    pub fn record_count(&self) -> u64 {
        self.count
    }

    fn read_next(&mut self) -> Result<MapRecord> {
        let index = self.next;
        let header = read_record_header(&mut self.source, index)?;
        if !self.seen.insert(header.name.clone()) {
            return Err(Error::DuplicateName(header.name));
        }
        let mut payload = vec![0u8; header.payload_len() as usize];
        read_exact_or(&mut self.source, &mut payload, || Error::TruncatedRecord {
            index,
            context: "payload",
        })?;
        decode_payload(header, &payload)
    }

    fn check_trailing(&mut self) -> Result<()> {
        let extra = io::copy(&mut (&mut self.source).take(u64::MAX), &mut io::sink())?;
        if extra > 0 {
            return Err(Error::TrailingData(extra));
        }
        Ok(())
    }
}

impl<R: Read> Iterator for ContainerReader<R> {
    type Item = Result<MapRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if self.next == self.count {
            self.next += 1;
            return match self.check_trailing() {
                Ok(()) => None,
                Err(e) => {
                    self.failed = true;
                    Some(Err(e))
                }
            };
        }
        if self.next > self.count {
            return None;
        }
        let item = self.read_next();
        self.next += 1;
        if item.is_err() {
            self.failed = true;
        }
        Some(item)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub header: RecordHeader,
    /// Byte offset of the first payload value.
    pub payload_offset: u64,
}

/// Name -> offset index built by a single pass that skips over payloads.
#[derive(Debug, Clone, Default)]
pub struct ContainerIndex {
    pub version: u8,
    pub entries: Vec<IndexEntry>,
    by_name: HashMap<String, usize>,
}

impl ContainerIndex {
    pub fn scan<R: Read>(mut source: R) -> Result<Self> {
        let (version, count) = read_file_header(&mut source)?;
        let mut offset = HEADER_LEN as u64;
        let mut entries = Vec::new();
        let mut by_name = HashMap::new();
        for index in 0..count {
            let header = read_record_header(&mut source, index)?;
            offset += 2 + header.name.len() as u64 + 9;
            let len = header.payload_len();
            let skipped = io::copy(&mut (&mut source).take(len), &mut io::sink())?;
            if skipped < len {
                return Err(Error::TruncatedRecord {
                    index,
                    context: "payload",
                });
            }
            if by_name.insert(header.name.clone(), entries.len()).is_some() {
                return Err(Error::DuplicateName(header.name));
            }
            entries.push(IndexEntry {
                header,
                payload_offset: offset,
            });
            offset += len;
        }
        let extra = io::copy(&mut source, &mut io::sink())?;
        if extra > 0 {
            return Err(Error::TrailingData(extra));
        }
        Ok(Self {
            version,
            entries,
            by_name,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&IndexEntry> {
        self.by_name.get(name).map(|&i| &self.entries[i])
    }

    /// Decodes one record out of the full archive bytes.
    pub fn decode(&self, bytes: &[u8], name: &str) -> Result<MapRecord> {
        let entry = self
            .get(name)
            .ok_or_else(|| Error::UnknownRecord(name.to_owned()))?;
        decode_entry(bytes, entry)
    }

    /// Decodes every record in parallel; output order matches the archive.
    pub fn decode_all(&self, bytes: &[u8]) -> Result<Vec<MapRecord>> {
        self.entries
            .par_iter()
            .map(|e| decode_entry(bytes, e))
            .collect()
    }
}

fn decode_entry(bytes: &[u8], entry: &IndexEntry) -> Result<MapRecord> {
    let start = entry.payload_offset as usize;
    let end = start + entry.header.payload_len() as usize;
    let payload = bytes.get(start..end).ok_or(Error::TruncatedRecord {
        index: 0,
        context: "payload",
    })?;
    decode_payload(entry.header.clone(), payload)
}
