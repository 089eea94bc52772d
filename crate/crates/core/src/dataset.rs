//! Labeled point sets and their CSV form (`x_0,…,x_{d-1},label`).

use std::collections::BTreeSet;
use std::io::{Read, Write};

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset is empty")]
    Empty,
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("row {row} has dimension {got}, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("row {row}: non-finite coordinate")]
    NonFinite { row: usize },
    #[error("csv header must be x_0,…,x_{{d-1}},label; got {0:?}")]
    BadHeader(Vec<String>),
    #[error("row {row}: {detail}")]
    BadValue { row: usize, detail: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Input vectors with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<S> {
    inputs: Vec<Vec<S>>,
    labels: Vec<u32>,
    classes: Vec<u32>,
}

impl<S: Scalar> LabeledDataset<S> {
    pub fn new(inputs: Vec<Vec<S>>, labels: Vec<u32>) -> Result<Self, DatasetError> {
        if inputs.len() != labels.len() {
            return Err(DatasetError::LengthMismatch {
                inputs: inputs.len(),
                labels: labels.len(),
            });
        }
        let Some(first) = inputs.first() else {
            return Err(DatasetError::Empty);
        };
        let dim = first.len();
        for (row, x) in inputs.iter().enumerate() {
            if x.len() != dim {
                return Err(DatasetError::RaggedRow {
                    row,
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { row });
            }
        }
        let classes = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        Ok(Self {
            inputs,
            labels,
            classes,
        })
    }

    pub fn inputs(&self) -> &[Vec<S>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Samples carrying `class`, in dataset order.
    pub fn samples_of(&self, class: u32) -> Vec<&[S]> {
        self.inputs
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(x, _)| x.as_slice())
            .collect()
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let dim = header.len().saturating_sub(1);
        let expected = (0..dim).map(|i| format!("x_{i}")).chain(["label".to_string()]);
        if dim == 0 || !header.iter().cloned().eq(expected) {
            return Err(DatasetError::BadHeader(header));
        }
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let mut x = Vec::with_capacity(dim);
            for field in record.iter().take(dim) {
                let v: f64 = field.parse().map_err(|e| DatasetError::BadValue {
                    row,
                    detail: format!("'{field}': {e}"),
                })?;
                x.push(S::lit(v));
            }
            let label = record[dim].parse().map_err(|e| DatasetError::BadValue {
                row,
                detail: format!("label '{}': {e}", &record[dim]),
            })?;
            inputs.push(x);
            labels.push(label);
        }
        Self::new(inputs, labels)
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), DatasetError> {
        let mut writer = csv::Writer::from_writer(sink);
        let mut header: Vec<String> = (0..self.dim()).map(|i| format!("x_{i}")).collect();
        header.push("label".into());
        writer.write_record(&header)?;
        for (x, label) in self.inputs.iter().zip(&self.labels) {
            let mut row: Vec<String> = x.iter().map(|v| v.to_f64_lossy().to_string()).collect();
            row.push(label.to_string());
            writer.write_record(&row)?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
