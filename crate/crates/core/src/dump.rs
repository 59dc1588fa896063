//! Binary logit dumps.
//!
//! Layout, all little-endian:
//!
//! | bytes | field                        |
//! |-------|------------------------------|
//! | 8     | magic `LOGDUMP1`             |
//! | 2     | version, u16 (= 1)           |
//! | 4     | vocab size, u32              |
//! | 8     | step count, u64              |
//! | 1     | dtype, u8 (0 = f32)          |
//!
//! followed by `steps * vocab` f32 values, row-major, no padding.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::logits::LogitVector;

pub const MAGIC: &[u8; 8] = b"LOGDUMP1";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: usize = 23;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a logit dump (bad magic)")]
    BadMagic,
    #[error("unsupported dump version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported dtype {0}")]
    UnsupportedDtype(u8),
    #[error("payload ends inside step {step}")]
    TruncatedPayload { step: u64 },
    #[error("non-finite value at step {step}, index {index}")]
    NonFiniteValue { step: u64, index: usize },
    #[error("row {row} has {found} values, expected {expected}")]
    LengthMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("vocabulary size {0} is too small for a non-empty dump")]
    InvalidVocab(u64),
    #[error("unexpected bytes after the last step")]
    TrailingData,
    #[error("value {value} at row {row}, index {index} does not fit in f32")]
    ValueOutOfRange {
        row: usize,
        index: usize,
        value: f64,
    },
    #[error("line {line}: {reason}")]
    Fixture { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpHeader {
    pub version: u16,
    pub vocab_size: u32,
    pub steps: u64,
    pub dtype: u8,
}

impl DumpHeader {
    pub fn new(vocab_size: u32, steps: u64) -> Self {
        Self {
            version: VERSION,
            vocab_size,
            steps,
            dtype: DTYPE_F32,
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..8].copy_from_slice(MAGIC);
        out[8..10].copy_from_slice(&self.version.to_le_bytes());
        out[10..14].copy_from_slice(&self.vocab_size.to_le_bytes());
        out[14..22].copy_from_slice(&self.steps.to_le_bytes());
        out[22] = self.dtype;
        out
    }

    pub fn parse(bytes: &[u8; HEADER_LEN]) -> Result<Self, DumpError> {
        if &bytes[..8] != MAGIC {
            return Err(DumpError::BadMagic);
        }
        let header = Self {
            version: u16::from_le_bytes([bytes[8], bytes[9]]),
            vocab_size: u32::from_le_bytes(bytes[10..14].try_into().unwrap()),
            steps: u64::from_le_bytes(bytes[14..22].try_into().unwrap()),
            dtype: bytes[22],
        };
        if header.version != VERSION {
            return Err(DumpError::UnsupportedVersion(header.version));
        }
        if header.dtype != DTYPE_F32 {
            return Err(DumpError::UnsupportedDtype(header.dtype));
        }
        if header.steps > 0 && header.vocab_size < 2 {
            return Err(DumpError::InvalidVocab(header.vocab_size.into()));
        }
        Ok(header)
    }
}

/// Streams rows from a dump, one step at a time.
#[derive(Debug)]
pub struct DumpReader<R> {
    inner: R,
    header: DumpHeader,
    step: u64,
    buf: Vec<u8>,
    done: bool,
}

impl DumpReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DumpError> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> DumpReader<R> {
    pub fn new(mut inner: R) -> Result<Self, DumpError> {
        let mut head = [0u8; HEADER_LEN];
        read_full(&mut inner, &mut head).and_then(|n| {
            if n < 8 || &head[..8] != MAGIC {
                Err(DumpError::BadMagic)
            } else if n < HEADER_LEN {
                Err(DumpError::TruncatedPayload { step: 0 })
            } else {
                Ok(())
            }
        })?;
        let header = DumpHeader::parse(&head)?;
        Ok(Self {
            inner,
            header,
            step: 0,
            buf: vec![0; header.vocab_size as usize * 4],
            done: false,
        })
    }

    pub fn header(&self) -> DumpHeader {
        self.header
    }

    /// The next row as raw f32 values, or `None` after the last step.
    pub fn next_row(&mut self) -> Option<Result<Vec<f32>, DumpError>> {
        if self.done {
            return None;
        }
        if self.step == self.header.steps {
            self.done = true;
            let mut probe = [0u8; 1];
            return match read_full(&mut self.inner, &mut probe) {
                Ok(0) => None,
                Ok(_) => Some(Err(DumpError::TrailingData)),
                Err(e) => Some(Err(e)),
            };
        }
        let step = self.step;
        self.step += 1;
        let row = read_full(&mut self.inner, &mut self.buf).and_then(|n| {
            if n < self.buf.len() {
                return Err(DumpError::TruncatedPayload { step });
            }
            let row: Vec<f32> = self
                .buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            match row.iter().position(|v| !v.is_finite()) {
                Some(index) => Err(DumpError::NonFiniteValue { step, index }),
                None => Ok(row),
            }
        });
        if row.is_err() {
            self.done = true;
        }
        Some(row)
    }
}

impl<R: Read> Iterator for DumpReader<R> {
    type Item = Result<LogitVector, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_row().map(|row| {
            row.map(|r| {
                LogitVector::from_f32(&r).expect("rows are finite and the header guarantees V >= 2")
            })
        })
    }
}

/// Fill `buf` as far as the reader allows; returns the bytes read.
fn read_full(reader: &mut impl Read, buf: &mut [u8]) -> Result<usize, DumpError> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

/// Read a whole dump into memory.
pub fn read_dump(path: impl AsRef<Path>) -> Result<Vec<LogitVector>, DumpError> {
    DumpReader::open(path)?.collect()
}

/// Read a whole dump as raw f32 rows.
pub fn read_dump_f32(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>, DumpError> {
    let mut reader = DumpReader::open(path)?;
    std::iter::from_fn(|| reader.next_row()).collect()
}

fn check_rows<T>(rows: &[impl AsRef<[T]>]) -> Result<u32, DumpError> {
    let vocab = rows.first().map_or(0, |r| r.as_ref().len());
    if let Some((row, r)) = rows
        .iter()
        .enumerate()
        .find(|(_, r)| r.as_ref().len() != vocab)
    {
        return Err(DumpError::LengthMismatch {
            row,
            expected: vocab,
            found: r.as_ref().len(),
        });
    }
    if !rows.is_empty() && vocab < 2 {
        return Err(DumpError::InvalidVocab(vocab as u64));
    }
    u32::try_from(vocab).map_err(|_| DumpError::InvalidVocab(vocab as u64))
}

/// Serialize rows into dump bytes.
pub fn encode_dump(rows: &[impl AsRef<[f32]>], out: &mut impl Write) -> Result<(), DumpError> {
    let vocab = check_rows(rows)?;
    for (step, r) in rows.iter().enumerate() {
        if let Some(index) = r.as_ref().iter().position(|v| !v.is_finite()) {
            return Err(DumpError::NonFiniteValue {
                step: step as u64,
                index,
            });
        }
    }
    out.write_all(&DumpHeader::new(vocab, rows.len() as u64).to_bytes())?;
    for r in rows {
        for v in r.as_ref() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Write rows to `path` atomically: a temporary file in the same directory
/// is renamed over the target once complete.
pub fn write_dump(path: impl AsRef<Path>, rows: &[impl AsRef<[f32]>]) -> Result<(), DumpError> {
    let path = path.as_ref();
    write_atomic(path, |w| encode_dump(rows, w))
}

/// Narrow f64 logits to f32 rows, rejecting values outside the f32 range.
pub fn logits_to_f32(vectors: &[LogitVector]) -> Result<Vec<Vec<f32>>, DumpError> {
    vectors
        .iter()
        .enumerate()
        .map(|(row, v)| {
            v.values()
                .iter()
                .enumerate()
                .map(|(index, &x)| {
                    let y = x as f32;
                    if y.is_finite() {
                        Ok(y)
                    } else {
                        Err(DumpError::ValueOutOfRange {
                            row,
                            index,
                            value: x,
                        })
                    }
                })
                .collect()
        })
        .collect()
}

/// Run `body` against a buffered temporary file next to `path`, then move
/// it into place.
pub fn write_atomic<E>(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut File>) -> Result<(), E>,
) -> Result<(), E>
where
    E: From<io::Error>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Load a text fixture: one JSON array of numbers per non-blank line.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<LogitVector>, DumpError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |reason: String| DumpError::Fixture {
            line: i + 1,
            reason,
        };
        let values: Vec<f64> = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        out.push(LogitVector::new(values).map_err(|e| fail(e.to_string()))?);
    }
    if let Some(first) = out.first() {
        let expected = first.len();
        if let Some((row, v)) = out.iter().enumerate().find(|(_, v)| v.len() != expected) {
            return Err(DumpError::LengthMismatch {
                row,
                expected,
                found: v.len(),
            });
        }
    }
    Ok(out)
}

/// Lower-case hex sha256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Lower-case hex sha256 of a file's contents.
pub fn file_digest(path: impl AsRef<Path>) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}
