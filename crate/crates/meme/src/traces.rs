//! Trace files.
//!
//! `trace-jsonl`: a header line `{"format_version", "schema", "split"}`
//! followed by one JSON object per sequence with keys `inputs`, `hidden`,
//! `pred_labels`, `scores` and `true_labels` (the last two may be null).
//!
//! `trace-binary`, all integers little-endian:
//!
//! ```text
//! "MEMETRC1"
//! u32 header length, header JSON (same object as the jsonl header)
//! u32 sequence count
//! per sequence:
//!   u32 T, u32 n, u32 m
//!   f64[T*n] inputs, f64[(T+1)*m] hidden   (row-major)
//!   u8[T] pred_labels
//!   u8 flag, f64[T] scores        (present when flag = 1)
//!   u8 flag, u8[T] true_labels    (present when flag = 1)
//! ```

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use meme_core::{FeatureSchema, Label, Matrix, SplitTag, TraceDataset, TracedSequence, FORMAT_VERSION};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 8] = b"MEMETRC1";

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Binary,
    Jsonl,
}

impl TraceFormat {
    /// `.jsonl` and `.json` files are JSON lines; everything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json") => Self::Jsonl,
            _ => Self::Binary,
        }
    }
}

impl FromStr for TraceFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "trace-binary" | "bin" => Ok(Self::Binary),
            "jsonl" | "trace-jsonl" => Ok(Self::Jsonl),
            other => Err(CliError::Usage(format!("unknown trace format `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    schema: FeatureSchema,
    #[serde(default)]
    split: SplitTag,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    inputs: Matrix,
    hidden: Matrix,
    pred_labels: Vec<Label>,
    scores: Option<Vec<f64>>,
    true_labels: Option<Vec<Label>>,
}

fn header_of(ds: &TraceDataset) -> Header {
    Header {
        format_version: FORMAT_VERSION,
        schema: ds.schema.clone(),
        split: ds.split,
    }
}

fn check_version(path: &Path, v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(CliError::parse(path, format!("unsupported format_version {v}")));
    }
    Ok(())
}

pub fn encode_jsonl(ds: &TraceDataset) -> Vec<u8> {
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, &header_of(ds)).expect("header serializes");
    out.push(b'\n');
    for s in &ds.sequences {
        let rec = Record {
            inputs: s.inputs.clone(),
            hidden: s.hidden.clone(),
            pred_labels: s.pred_labels.clone(),
            scores: s.scores.clone(),
            true_labels: s.true_labels.clone(),
        };
        serde_json::to_writer(&mut out, &rec).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn decode_jsonl(path: &Path, reader: impl BufRead) -> Result<TraceDataset> {
    let mut lines = reader.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| CliError::parse(path, "missing header line"))?;
    let first = first.map_err(|e| CliError::io(path, e))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| CliError::parse(path, format!("header: {e}")))?;
    check_version(path, header.format_version)?;
    let mut sequences = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let rec: Record =
            serde_json::from_str(&line).map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?;
        let seq = TracedSequence::new(rec.inputs, rec.hidden, rec.pred_labels, rec.scores, rec.true_labels)
            .map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?;
        sequences.push(seq);
    }
    Ok(TraceDataset::new(header.schema, sequences, header.split)?)
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("trace dimension fits in u32");
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_labels(out: &mut Vec<u8>, ls: &[Label]) {
    out.extend(ls.iter().map(|l| l.value()));
}

pub fn encode_binary(ds: &TraceDataset) -> Vec<u8> {
    let mut out = Vec::from(&MAGIC[..]);
    let header = serde_json::to_vec(&header_of(ds)).expect("header serializes");
    put_u32(&mut out, header.len());
    out.extend_from_slice(&header);
    put_u32(&mut out, ds.sequences.len());
    for s in &ds.sequences {
        put_u32(&mut out, s.len());
        put_u32(&mut out, s.inputs.cols());
        put_u32(&mut out, s.hidden.cols());
        put_f64s(&mut out, s.inputs.as_slice());
        put_f64s(&mut out, s.hidden.as_slice());
        put_labels(&mut out, &s.pred_labels);
        match &s.scores {
            Some(v) => {
                out.push(1);
                put_f64s(&mut out, v);
            }
            None => out.push(0),
        }
        match &s.true_labels {
            Some(v) => {
                out.push(1);
                put_labels(&mut out, v);
            }
            None => out.push(0),
        }
    }
    out
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| CliError::parse(self.path, format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(8).ok_or_else(|| CliError::parse(self.path, "array too large"))?;
        Ok(self
            .take(len)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn labels(&mut self, n: usize) -> Result<Vec<Label>> {
        let path = self.path;
        self.take(n)?
            .iter()
            .map(|&b| Label::new(b).map_err(|e| CliError::parse(path, e)))
            .collect()
    }

    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(CliError::parse(self.path, format!("bad presence flag {other}"))),
        }
    }
}

pub fn decode_binary(path: &Path, bytes: &[u8]) -> Result<TraceDataset> {
    let mut c = Cursor { path, bytes, pos: 0 };
    if c.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
        return Err(CliError::parse(path, "not a trace-binary file (bad magic)"));
    }
    let header_len = c.u32()?;
    let header: Header =
        serde_json::from_slice(c.take(header_len)?).map_err(|e| CliError::parse(path, format!("header: {e}")))?;
    check_version(path, header.format_version)?;
    let count = c.u32()?;
    let mut sequences = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        let (t, n, m) = (c.u32()?, c.u32()?, c.u32()?);
        let inputs = Matrix::new(t, n, c.f64s(t * n)?)?;
        let hidden = Matrix::new(t + 1, m, c.f64s((t + 1) * m)?)?;
        let pred = c.labels(t)?;
        let scores = if c.flag()? { Some(c.f64s(t)?) } else { None };
        let truth = if c.flag()? { Some(c.labels(t)?) } else { None };
        let seq = TracedSequence::new(inputs, hidden, pred, scores, truth)
            .map_err(|e| CliError::parse(path, format!("sequence {i}: {e}")))?;
        sequences.push(seq);
    }
    if c.pos != bytes.len() {
        return Err(CliError::parse(path, format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(TraceDataset::new(header.schema, sequences, header.split)?)
}

pub fn load_traces(path: &Path, format: Option<TraceFormat>) -> Result<TraceDataset> {
    match format.unwrap_or_else(|| TraceFormat::from_path(path)) {
        TraceFormat::Binary => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            decode_binary(path, &bytes)
        }
        TraceFormat::Jsonl => {
            let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            decode_jsonl(path, BufReader::new(f))
        }
    }
}

pub fn save_traces(path: &Path, ds: &TraceDataset, format: Option<TraceFormat>) -> Result<()> {
    let bytes = match format.unwrap_or_else(|| TraceFormat::from_path(path)) {
        TraceFormat::Binary => encode_binary(ds),
        TraceFormat::Jsonl => encode_jsonl(ds),
    };
    write_atomic(path, |w| w.write_all(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TraceDataset {
        let schema = FeatureSchema::continuous(&["a", "b", "c", "d"], "no", "yes").unwrap();
        let inputs = Matrix::from_rows(&[[0.1, 0.2, 0.3, 0.4], [1.0, -2.0, 3.5, 1e-300]]).unwrap();
        let hidden = Matrix::from_rows(&[[0.0; 3], [0.5, -0.25, 0.125], [0.1, 0.2, 0.3]]).unwrap();
        let seq = TracedSequence::new(
            inputs,
            hidden,
            vec![Label::POSITIVE, Label::NEGATIVE],
            Some(vec![0.9, 0.1]),
            None,
        )
        .unwrap();
        TraceDataset::new(schema, vec![seq], SplitTag::Test).unwrap()
    }

    #[test]
    fn both_formats_round_trip() {
        let ds = tiny();
        let p = Path::new("mem");
        let bin = encode_binary(&ds);
        assert_eq!(&bin[..8], MAGIC);
        let back = decode_binary(p, &bin).unwrap();
        assert_eq!(back, ds);
        assert_eq!(encode_binary(&back), bin);
        let jsonl = encode_jsonl(&ds);
        let back = decode_jsonl(p, &jsonl[..]).unwrap();
        assert_eq!(back, ds);
        assert_eq!((back.sequences[0].len(), back.input_width(), back.hidden_width()), (2, 4, 3));
    }

    #[test]
    fn missing_initial_hidden_row_is_rejected() {
        let header = r#"{"format_version":1,"schema":{"names":["a"],"kinds":["continuous"],"class_names":{"0":"n","1":"p"}}}"#;
        let rec = r#"{"inputs":[[1.0],[2.0]],"hidden":[[0.1],[0.2]],"pred_labels":[0,1],"scores":null,"true_labels":null}"#;
        let text = format!("{header}\n{rec}\n");
        let err = decode_jsonl(Path::new("x.jsonl"), text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn corrupt_binary_is_rejected() {
        let bin = encode_binary(&tiny());
        let p = Path::new("x.bin");
        assert!(decode_binary(p, &bin[..bin.len() - 1]).is_err());
        let mut extra = bin.clone();
        extra.push(0);
        assert!(decode_binary(p, &extra).is_err());
        let mut bad = bin.clone();
        bad[0] = b'X';
        assert!(decode_binary(p, &bad).is_err());
        let mut bad_label = bin;
        let label_at = bad_label.len() - 2 - 2 * 8 - 2;
        bad_label[label_at] = 7;
        assert!(decode_binary(p, &bad_label).is_err());
    }

    #[test]
    fn header_without_sequences_is_empty_dataset() {
        let ds = tiny();
        let jsonl = encode_jsonl(&ds);
        let header_only = jsonl.split(|b| *b == b'\n').next().unwrap();
        assert!(decode_jsonl(Path::new("x"), header_only).is_err());
    }
}
