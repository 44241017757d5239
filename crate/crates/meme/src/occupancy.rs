//! UCI Occupancy CSV ingestion and weights-JSON loading.

use std::path::Path;

use meme_core::rnn::LstmStackWeights;
use meme_core::{FeatureSchema, Label, Matrix};

use crate::error::{CliError, Result};
use crate::fsutil::read_json;

pub const LABEL_COLUMN: &str = "Occupancy";

/// One continuous recording: rows in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub schema: FeatureSchema,
    pub inputs: Matrix,
    pub labels: Vec<Label>,
}

/// Reads the Occupancy layout. The date column and a leading unnamed row
/// index (present in the UCI files, where data rows have one more field
/// than the header) are ignored.
pub fn read_occupancy(path: &Path, reader: impl std::io::Read) -> Result<Recording> {
    let schema = FeatureSchema::occupancy();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::parse(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::parse(path, format!("missing column `{name}`")))
    };
    let columns = schema.names.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;
    let label_col = find(LABEL_COLUMN)?;
    let mut inputs = Matrix::with_cols(columns.len());
    let mut labels = Vec::new();
    let mut row = vec![0.0; columns.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::parse(path, e))?;
        let line = i + 2;
        let shift = match rec.len().checked_sub(headers.len()) {
            Some(s @ (0 | 1)) => s,
            _ => return Err(CliError::parse(path, format!("line {line}: expected {} fields", headers.len()))),
        };
        let field = |c: usize| rec.get(c + shift).unwrap_or("");
        for (slot, &c) in row.iter_mut().zip(&columns) {
            *slot = field(c)
                .parse()
                .map_err(|_| CliError::parse(path, format!("line {line}: bad number `{}`", field(c))))?;
        }
        inputs.push_row(&row)?;
        let label = match field(label_col) {
            "0" | "0.0" => Label::NEGATIVE,
            "1" | "1.0" => Label::POSITIVE,
            other => return Err(CliError::parse(path, format!("line {line}: bad label `{other}`"))),
        };
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(CliError::parse(path, "no data rows"));
    }
    Ok(Recording { schema, inputs, labels })
}

pub fn load_occupancy(path: &Path) -> Result<Recording> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_occupancy(path, f)
}

impl Recording {
    pub fn drop_feature(&self, name: &str) -> Result<Recording> {
        let j = self
            .schema
            .index_of(name)
            .ok_or_else(|| meme_core::Error::UnknownFeature(name.to_string()))?;
        let mut schema = self.schema.clone();
        schema.names.remove(j);
        schema.kinds.remove(j);
        schema.validate()?;
        Ok(Recording {
            schema,
            inputs: self.inputs.remove_column(j),
            labels: self.labels.clone(),
        })
    }

    /// Consecutive non-overlapping chunks of `length` rows; the remainder is dropped.
    pub fn chunks(&self, length: usize) -> Vec<(Matrix, Vec<Label>)> {
        let n = self.labels.len() / length.max(1);
        (0..n)
            .map(|i| {
                let lo = i * length;
                (self.inputs.slice_rows(lo, lo + length), self.labels[lo..lo + length].to_vec())
            })
            .collect()
    }
}

pub fn load_weights(path: &Path) -> Result<LstmStackWeights> {
    let w: LstmStackWeights = read_json(path)?;
    w.validate().map_err(|e| CliError::parse(path, e))?;
    Ok(w)
}
