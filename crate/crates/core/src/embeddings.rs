//! The `VYKE1` layer-wise embedding file.
//!
//! All integers are unsigned 32-bit little-endian, all floats IEEE-754
//! binary32 little-endian.
//!
//! ```text
//! header   "VYKE1"
//!          u32 name_len, name (UTF-8)
//!          u32 num_layers L, u32 hidden_dim d, u32 sentence_count
//! body     sentence_count records, each:
//!            u32 payload_len, then payload:
//!              u32 key_len, key (UTF-8; `sent_id` or `sent_id#prefix_len`)
//!              u32 n_tokens
//!              u32 align_len, align_len x u32 first-subword positions
//!              for each layer 0..L: sentence vector [d], then n_tokens x [d]
//! trailer  u32 CRC-32 (IEEE) over every body byte
//! ```
//!
//! Layer 0 is the embedding output; layer l > 0 is the output of block l.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::{Path, PathBuf};

use crc32fast::Hasher;
use serde::Serialize;

use crate::conllu::Treebank;
use crate::probe::Dataset;
use crate::tasks::{TaskExample, TaskKind};
use crate::{Error, Result};

pub const MAGIC: &[u8; 5] = b"VYKE1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingHeader {
    pub model_name: String,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub sentence_count: usize,
}

impl EmbeddingHeader {
    fn check(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden_dim == 0 {
            return Err(Error::format(0, "num_layers and hidden_dim must be at least 1"));
        }
        Ok(())
    }

    fn encoded_len(&self) -> u64 {
        (MAGIC.len() + 4 + self.model_name.len() + 12) as u64
    }
}

/// Embeddings of one sentence (or SVA prefix) at every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRecord {
    pub key: String,
    pub n_tokens: usize,
    /// First-subword position of each token, as computed by the extractor.
    pub alignment: Vec<u32>,
    num_layers: usize,
    hidden_dim: usize,
    /// Layer-major: per layer the sentence vector, then the token vectors.
    data: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn new(
        key: impl Into<String>,
        n_tokens: usize,
        alignment: Vec<u32>,
        num_layers: usize,
        hidden_dim: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let key = key.into();
        let expected = num_layers * (1 + n_tokens) * hidden_dim;
        if data.len() != expected {
            return Err(Error::Data(format!(
                "record `{key}`: {} floats, expected {expected} for L={num_layers}, d={hidden_dim}, n={n_tokens}",
                data.len()
            )));
        }
        Ok(EmbeddingRecord {
            key,
            n_tokens,
            alignment,
            num_layers,
            hidden_dim,
            data,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn layer_offset(&self, layer: usize) -> usize {
        layer * (1 + self.n_tokens) * self.hidden_dim
    }

    pub fn sentence_vector(&self, layer: usize) -> &[f32] {
        let start = self.layer_offset(layer);
        &self.data[start..start + self.hidden_dim]
    }

    /// Vector of the token at 0-based position `index`.
    pub fn token_vector(&self, layer: usize, index: usize) -> &[f32] {
        let start = self.layer_offset(layer) + (1 + index) * self.hidden_dim;
        &self.data[start..start + self.hidden_dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn payload_len(&self) -> usize {
        4 + self.key.len() + 4 + 4 + 4 * self.alignment.len() + 4 * self.data.len()
    }
}

fn put_u32(buf: &mut Vec<u8>, value: usize) -> Result<()> {
    let value = u32::try_from(value).map_err(|_| Error::Data(format!("{value} does not fit in u32")))?;
    buf.extend_from_slice(&value.to_le_bytes());
    Ok(())
}

pub struct EmbeddingWriter<W: Write> {
    inner: W,
    header: EmbeddingHeader,
    written: usize,
    crc: Hasher,
}

impl<W: Write> EmbeddingWriter<W> {
    pub fn new(mut inner: W, header: EmbeddingHeader) -> Result<Self> {
        header.check()?;
        let mut buf = Vec::with_capacity(header.encoded_len() as usize);
        buf.extend_from_slice(MAGIC);
        put_u32(&mut buf, header.model_name.len())?;
        buf.extend_from_slice(header.model_name.as_bytes());
        put_u32(&mut buf, header.num_layers)?;
        put_u32(&mut buf, header.hidden_dim)?;
        put_u32(&mut buf, header.sentence_count)?;
        inner.write_all(&buf)?;
        Ok(EmbeddingWriter {
            inner,
            header,
            written: 0,
            crc: Hasher::new(),
        })
    }

    pub fn write_record(&mut self, record: &EmbeddingRecord) -> Result<()> {
        if record.num_layers != self.header.num_layers || record.hidden_dim != self.header.hidden_dim {
            return Err(Error::Data(format!(
                "record `{}` has L={}, d={} but the header says L={}, d={}",
                record.key, record.num_layers, record.hidden_dim, self.header.num_layers, self.header.hidden_dim
            )));
        }
        if self.written == self.header.sentence_count {
            return Err(Error::Data(format!(
                "more records than the {} announced in the header",
                self.header.sentence_count
            )));
        }
        let payload_len = record.payload_len();
        let mut buf = Vec::with_capacity(4 + payload_len);
        put_u32(&mut buf, payload_len)?;
        put_u32(&mut buf, record.key.len())?;
        buf.extend_from_slice(record.key.as_bytes());
        put_u32(&mut buf, record.n_tokens)?;
        put_u32(&mut buf, record.alignment.len())?;
        for pos in &record.alignment {
            buf.extend_from_slice(&pos.to_le_bytes());
        }
        for v in &record.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.crc.update(&buf);
        self.inner.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    /// Write the CRC trailer and return the sink.
    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.sentence_count {
            return Err(Error::Data(format!(
                "wrote {} records but the header announced {}",
                self.written, self.header.sentence_count
            )));
        }
        self.inner.write_all(&self.crc.finalize().to_le_bytes())?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_embeddings<'a>(
    path: &Path,
    header: &EmbeddingHeader,
    records: impl IntoIterator<Item = &'a EmbeddingRecord>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = EmbeddingWriter::new(BufWriter::new(file), header.clone())?;
    for record in records {
        writer.write_record(record)?;
    }
    writer.finish()?;
    Ok(())
}

/// Sequential reader. The CRC is checked once the last record is consumed.
pub struct EmbeddingReader<R: Read> {
    inner: R,
    header: EmbeddingHeader,
    offset: u64,
    remaining: usize,
    crc: Hasher,
    finished: bool,
}

fn read_exact_at<R: Read>(r: &mut R, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::format(offset, format!("truncated {what}")),
        _ => Error::Stream(e),
    })
}

fn read_u32<R: Read>(r: &mut R, offset: u64, what: &str) -> Result<usize> {
    let mut b = [0u8; 4];
    read_exact_at(r, &mut b, offset, what)?;
    Ok(u32::from_le_bytes(b) as usize)
}

impl<R: Read> EmbeddingReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        read_exact_at(&mut inner, &mut magic, 0, "magic")?;
        if &magic != MAGIC {
            return Err(Error::format(0, "bad magic, not a VYKE1 file"));
        }
        let name_len = read_u32(&mut inner, 5, "model name length")?;
        let mut name = vec![0u8; name_len];
        read_exact_at(&mut inner, &mut name, 9, "model name")?;
        let model_name = String::from_utf8(name).map_err(|_| Error::format(9, "model name is not UTF-8"))?;
        let at = 9 + name_len as u64;
        let header = EmbeddingHeader {
            model_name,
            num_layers: read_u32(&mut inner, at, "num_layers")?,
            hidden_dim: read_u32(&mut inner, at + 4, "hidden_dim")?,
            sentence_count: read_u32(&mut inner, at + 8, "sentence_count")?,
        };
        header.check()?;
        Ok(EmbeddingReader {
            inner,
            offset: header.encoded_len(),
            remaining: header.sentence_count,
            header,
            crc: Hasher::new(),
            finished: false,
        })
    }

    pub fn header(&self) -> &EmbeddingHeader {
        &self.header
    }

    /// Byte offset of the next frame.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Next record with its frame offset, or `None` after a verified trailer.
    pub fn next_record(&mut self) -> Result<Option<(u64, EmbeddingRecord)>> {
        if self.remaining == 0 {
            self.finish()?;
            return Ok(None);
        }
        let start = self.offset;
        let mut len_bytes = [0u8; 4];
        read_exact_at(&mut self.inner, &mut len_bytes, start, "record length")?;
        let payload_len = u32::from_le_bytes(len_bytes) as usize;
        let mut payload = vec![0u8; payload_len];
        read_exact_at(&mut self.inner, &mut payload, start, "record payload")?;
        self.crc.update(&len_bytes);
        self.crc.update(&payload);
        self.offset += 4 + payload_len as u64;
        self.remaining -= 1;
        let record = self.decode(&payload, start)?;
        Ok(Some((start, record)))
    }

    fn decode(&self, payload: &[u8], start: u64) -> Result<EmbeddingRecord> {
        let bad = |msg: &str| Error::format(start, msg.to_owned());
        let mut cur = payload;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(bad("record payload shorter than its fields"));
            }
            let (head, rest) = cur.split_at(n);
            cur = rest;
            Ok(head)
        };
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;

        let key_len = u32_at(take(4)?);
        let key = std::str::from_utf8(take(key_len)?)
            .map_err(|_| bad("record key is not UTF-8"))?
            .to_owned();
        let n_tokens = u32_at(take(4)?);
        let align_len = u32_at(take(4)?);
        let alignment = take(4 * align_len)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let floats = self.header.num_layers * (1 + n_tokens) * self.header.hidden_dim;
        let data = take(4 * floats)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if !cur.is_empty() {
            return Err(bad("record payload longer than its fields"));
        }
        Ok(EmbeddingRecord {
            key,
            n_tokens,
            alignment,
            num_layers: self.header.num_layers,
            hidden_dim: self.header.hidden_dim,
            data,
        })
    }

    fn finish(&mut self) -> Result<()> {
        if self.finished {
            return Ok(());
        }
        let mut trailer = [0u8; 4];
        read_exact_at(&mut self.inner, &mut trailer, self.offset, "CRC trailer")?;
        let stored = u32::from_le_bytes(trailer);
        let computed = self.crc.clone().finalize();
        if stored != computed {
            return Err(Error::format(
                self.offset,
                format!("CRC mismatch: stored {stored:08x}, computed {computed:08x}"),
            ));
        }
        let mut extra = [0u8; 1];
        if self.inner.read(&mut extra)? != 0 {
            return Err(Error::format(self.offset + 4, "trailing bytes after CRC"));
        }
        self.finished = true;
        Ok(())
    }
}

pub fn open_embeddings(path: &Path) -> Result<EmbeddingReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingReader::new(BufReader::new(file))
}

/// Read a whole file into memory, verifying the CRC.
pub fn read_embeddings(path: &Path) -> Result<(EmbeddingHeader, Vec<EmbeddingRecord>)> {
    let mut reader = open_embeddings(path)?;
    let mut records = Vec::with_capacity(reader.header().sentence_count);
    while let Some((_, record)) = reader.next_record()? {
        records.push(record);
    }
    Ok((reader.header().clone(), records))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationFailure {
    pub offset: u64,
    pub key: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub records: usize,
    pub failure: Option<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Check framing, CRC, finiteness and token counts against the treebanks
/// the file was extracted from. Stops at the first problem.
pub fn validate(path: &Path, treebanks: &[&Treebank]) -> Result<ValidationReport> {
    let lengths: HashMap<&str, usize> = treebanks
        .iter()
        .flat_map(|tb| &tb.sentences)
        .map(|s| (s.sent_id.as_str(), s.len()))
        .collect();

    let mut reader = match open_embeddings(path) {
        Ok(r) => r,
        Err(Error::Format { offset, message }) => {
            return Ok(ValidationReport {
                records: 0,
                failure: Some(ValidationFailure { offset, key: None, reason: message }),
            })
        }
        Err(e) => return Err(e),
    };

    let mut records = 0;
    loop {
        let (offset, record) = match reader.next_record() {
            Ok(Some(r)) => r,
            Ok(None) => break,
            Err(Error::Format { offset, message }) => {
                return Ok(ValidationReport {
                    records,
                    failure: Some(ValidationFailure { offset, key: None, reason: message }),
                })
            }
            Err(e) => return Err(e),
        };
        if let Some(reason) = check_record(&record, &lengths) {
            return Ok(ValidationReport {
                records,
                failure: Some(ValidationFailure {
                    offset,
                    key: Some(record.key),
                    reason,
                }),
            });
        }
        records += 1;
    }
    Ok(ValidationReport { records, failure: None })
}

fn check_record(record: &EmbeddingRecord, lengths: &HashMap<&str, usize>) -> Option<String> {
    let (base, prefix) = match record.key.rsplit_once('#') {
        Some((base, len)) if lengths.contains_key(base) => (base, len.parse::<usize>().ok()),
        _ => (record.key.as_str(), None),
    };
    let Some(&sentence_len) = lengths.get(base) else {
        return Some(format!("sentence `{base}` is not in the treebank"));
    };
    let expected = match (record.key.contains('#') && base != record.key, prefix) {
        (true, Some(len)) if len >= 1 && len < sentence_len => len,
        (true, _) => return Some(format!("bad prefix key `{}`", record.key)),
        (false, _) => sentence_len,
    };
    if record.n_tokens != expected {
        return Some(format!(
            "`{}` has {} tokens, the treebank has {expected}",
            record.key, record.n_tokens
        ));
    }
    if !record.alignment.is_empty() {
        if record.alignment.len() != record.n_tokens {
            return Some(format!("`{}` aligns {} of {} tokens", record.key, record.alignment.len(), record.n_tokens));
        }
        if record.alignment.windows(2).any(|w| w[0] >= w[1]) {
            return Some(format!("`{}` alignment is not strictly increasing", record.key));
        }
    }
    if !record.is_finite() {
        return Some(format!("`{}` contains NaN or Inf", record.key));
    }
    None
}

/// Pull the layer-`layer` feature of every example from the embedding files.
/// Token tasks read the token vector, sentence tasks the sentence vector;
/// SVA reads the record of its prefix (`sent_id#prefix_len`).
pub fn slice(files: &[PathBuf], examples: &[TaskExample], layer: usize) -> Result<Dataset> {
    slice_many(files, &[examples], layer).map(|mut v| v.remove(0))
}

/// [`slice`] for several example lists in one pass over the files.
pub fn slice_many(files: &[PathBuf], example_sets: &[&[TaskExample]], layer: usize) -> Result<Vec<Dataset>> {
    let mut wanted: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
    for (set, examples) in example_sets.iter().enumerate() {
        for (idx, example) in examples.iter().enumerate() {
            wanted.entry(example.record_key()).or_default().push((set, idx));
        }
    }

    let mut dim = None;
    let mut features: Vec<Vec<Option<Vec<f32>>>> =
        example_sets.iter().map(|ex| vec![None; ex.len()]).collect();

    for path in files {
        let mut reader = open_embeddings(path)?;
        let header = reader.header().clone();
        if layer >= header.num_layers {
            return Err(Error::Data(format!(
                "{}: layer {layer} requested but the file has {} layers",
                path.display(),
                header.num_layers
            )));
        }
        match dim {
            None => dim = Some(header.hidden_dim),
            Some(d) if d != header.hidden_dim => {
                return Err(Error::Data(format!(
                    "{}: hidden_dim {} differs from {d}",
                    path.display(),
                    header.hidden_dim
                )))
            }
            _ => {}
        }
        while let Some((offset, record)) = reader.next_record()? {
            let Some(targets) = wanted.get(&record.key) else {
                continue;
            };
            for &(set, idx) in targets {
                let example = &example_sets[set][idx];
                let vector = if example.task.is_token_level() {
                    let token = example
                        .token_index
                        .filter(|&t| t >= 1 && t <= record.n_tokens)
                        .ok_or_else(|| {
                            Error::format(
                                offset,
                                format!("token {:?} outside record `{}`", example.token_index, record.key),
                            )
                        })?;
                    record.token_vector(layer, token - 1)
                } else {
                    record.sentence_vector(layer)
                };
                features[set][idx] = Some(vector.to_vec());
            }
        }
    }

    let dim = dim.unwrap_or(0);
    example_sets
        .iter()
        .zip(features)
        .map(|(examples, vectors)| {
            let mut data = Vec::with_capacity(examples.len() * dim);
            for (example, vector) in examples.iter().zip(vectors) {
                let vector = vector.ok_or_else(|| Error::MissingRecord(example.record_key()))?;
                data.extend_from_slice(&vector);
            }
            Ok(Dataset::new(
                dim,
                data,
                examples.iter().map(|e| e.label.clone()).collect(),
            ))
        })
        .collect()
}

/// Keys the extractor must produce for `examples` (SVA prefixes included).
pub fn required_keys(examples: &[TaskExample]) -> Vec<String> {
    let mut keys: Vec<String> = examples
        .iter()
        .filter(|e| e.task == TaskKind::Sva)
        .map(TaskExample::record_key)
        .collect();
    keys.sort();
    keys.dedup();
    keys
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;
    use crate::conllu::{parse_conllu, Split};

    fn header(count: usize) -> EmbeddingHeader {
        EmbeddingHeader {
            model_name: "toy".into(),
            num_layers: 2,
            hidden_dim: 3,
            sentence_count: count,
        }
    }

    fn record(key: &str, n: usize) -> EmbeddingRecord {
        let data = (0..2 * (1 + n) * 3).map(|i| i as f32 * 0.5).collect();
        EmbeddingRecord::new(key, n, (0..n as u32).map(|i| i + 1).collect(), 2, 3, data).unwrap()
    }

    fn encode(header: &EmbeddingHeader, records: &[EmbeddingRecord]) -> Vec<u8> {
        let mut w = EmbeddingWriter::new(Vec::new(), header.clone()).unwrap();
        for r in records {
            w.write_record(r).unwrap();
        }
        w.finish().unwrap()
    }

    #[test]
    fn size_arithmetic() {
        let rec = record("s", 2);
        assert_eq!(rec.data().len(), 18);
        let bytes = encode(&header(1), &[rec]);
        let header_len = 5 + 4 + 3 + 12;
        let payload = 4 + 1 + 4 + 4 + 2 * 4 + 18 * 4;
        assert_eq!(bytes.len(), header_len + 4 + payload + 4);
    }

    #[test]
    fn zero_records() {
        let bytes = encode(&header(0), &[]);
        assert_eq!(bytes.len(), 5 + 4 + 3 + 12 + 4);
        let mut reader = EmbeddingReader::new(Cursor::new(bytes)).unwrap();
        assert!(reader.next_record().unwrap().is_none());
    }

    #[test]
    fn round_trip() {
        let records = vec![record("a", 2), record("b", 1)];
        let bytes = encode(&header(2), &records);
        let mut reader = EmbeddingReader::new(Cursor::new(bytes)).unwrap();
        assert_eq!(reader.header(), &header(2));
        let mut back = Vec::new();
        while let Some((_, r)) = reader.next_record().unwrap() {
            back.push(r);
        }
        assert_eq!(back, records);
        assert_eq!(back[0].sentence_vector(1), &[4.5, 5.0, 5.5]);
        assert_eq!(back[0].token_vector(1, 1), &[7.5, 8.0, 8.5]);
    }

    #[test]
    fn writer_rejects_dimension_mismatch() {
        let mut w = EmbeddingWriter::new(Vec::new(), EmbeddingHeader { hidden_dim: 4, ..header(1) }).unwrap();
        assert!(w.write_record(&record("a", 1)).is_err());
        let w = EmbeddingWriter::new(Vec::new(), header(2)).unwrap();
        assert!(w.finish().is_err());
        assert!(EmbeddingWriter::new(Vec::new(), EmbeddingHeader { num_layers: 0, ..header(0) }).is_err());
    }

    #[test]
    fn bit_flip_is_detected() {
        let bytes = encode(&header(1), &[record("a", 2)]);
        let body_start = 5 + 4 + 3 + 12;
        // flip a bit inside a float
        let mut corrupt = bytes.clone();
        corrupt[body_start + 40] ^= 0x10;
        let mut reader = EmbeddingReader::new(Cursor::new(corrupt)).unwrap();
        let first = reader.next_record();
        let err = match first {
            Ok(_) => reader.next_record().unwrap_err(),
            Err(e) => e,
        };
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode(&header(1), &[record("a", 2)]);
        let mut reader = EmbeddingReader::new(Cursor::new(&bytes[..bytes.len() - 10])).unwrap();
        let err = reader.next_record().unwrap_err();
        assert!(matches!(err, Error::Format { offset: 24, .. }), "{err}");
    }

    fn treebank() -> Treebank {
        parse_conllu(
            "# sent_id = X\n1\ta\ta\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tb\tb\tVERB\t_\tGender=Masc|Number=Sing\t0\troot\t_\t_\n\n",
            Split::Dev,
        )
        .unwrap()
    }

    #[test]
    fn validate_token_count_mismatch_names_sentence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.vyke");
        write_embeddings(&path, &header(1), &[record("X", 3)]).unwrap();
        let report = validate(&path, &[&treebank()]).unwrap();
        let failure = report.failure.unwrap();
        assert_eq!(failure.key.as_deref(), Some("X"));

        write_embeddings(&path, &header(2), &[record("X", 2), record("X#1", 1)]).unwrap();
        let report = validate(&path, &[&treebank()]).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.records, 2);
    }

    #[test]
    fn validate_rejects_nan_and_crc() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.vyke");
        let mut data = vec![0.0f32; 2 * 3 * 3];
        data[5] = f32::NAN;
        let bad = EmbeddingRecord::new("X", 2, vec![], 2, 3, data).unwrap();
        write_embeddings(&path, &header(1), &[bad]).unwrap();
        assert!(!validate(&path, &[&treebank()]).unwrap().passed());

        write_embeddings(&path, &header(1), &[record("X", 2)]).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let n = bytes.len();
        bytes[n - 6] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        let report = validate(&path, &[&treebank()]).unwrap();
        assert!(report.failure.unwrap().reason.contains("CRC"));
    }

    #[test]
    fn slicing_by_task() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.vyke");
        write_embeddings(&path, &header(2), &[record("X", 2), record("X#1", 1)]).unwrap();
        let tb = treebank();
        let pos = crate::tasks::build_pos(&tb).examples;
        let stdp = crate::tasks::build_stdp(&tb, &Default::default()).unwrap().examples;
        let sva = crate::tasks::build_sva(&tb, &Default::default()).examples;
        let files = vec![path];

        let ds = slice(&files, &pos, 1).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.row(1), record("X", 2).token_vector(1, 1));
        let ds = slice(&files, &stdp, 0).unwrap();
        assert_eq!(ds.row(0), record("X", 2).sentence_vector(0));
        let ds = slice(&files, &sva, 1).unwrap();
        assert_eq!(ds.row(0), record("X#1", 1).sentence_vector(1));
        assert_eq!(required_keys(&sva), ["X#1"]);

        assert!(slice(&files, &pos, 2).is_err());
        let mut missing = pos.clone();
        missing[0].sent_id = "Y".into();
        assert!(matches!(slice(&files, &missing, 0), Err(Error::MissingRecord(k)) if k == "Y"));
    }
}
