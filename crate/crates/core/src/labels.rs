//! The six emotion labels and binary label matrices.

use serde::{Deserialize, Serialize};

/// Number of emotion slots.
pub const NUM_EMOTIONS: usize = 6;

/// Emotion names in their fixed slot order.
pub const EMOTIONS: [&str; NUM_EMOTIONS] = ["anger", "disgust", "fear", "joy", "sadness", "surprise"];

/// A 6-slot binary emotion vector in the order of [`EMOTIONS`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmotionLabels(pub [u8; NUM_EMOTIONS]);

impl EmotionLabels {
    /// Builds labels from raw slots, rejecting anything outside {0,1}.
    pub fn from_slots(slots: [u8; NUM_EMOTIONS]) -> Option<Self> {
        slots.iter().all(|&v| v <= 1).then_some(Self(slots))
    }

    pub fn get(&self, slot: usize) -> u8 {
        self.0[slot]
    }

    pub fn is_set(&self, slot: usize) -> bool {
        self.0[slot] == 1
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LabelMatrixError {
    #[error("label matrix data length {len} does not match {rows} x {cols}")]
    Shape { len: usize, rows: usize, cols: usize },
    #[error("non-binary label value {value} at row {row}, column {col}")]
    NonBinary { row: usize, col: usize, value: u8 },
}

/// Row-major binary matrix, one row per sample and one column per label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    n_rows: usize,
    n_labels: usize,
    data: Vec<u8>,
}

impl LabelMatrix {
    pub fn new(n_rows: usize, n_labels: usize, data: Vec<u8>) -> Result<Self, LabelMatrixError> {
        if data.len() != n_rows * n_labels {
            return Err(LabelMatrixError::Shape { len: data.len(), rows: n_rows, cols: n_labels });
        }
        if let Some(pos) = data.iter().position(|&v| v > 1) {
            return Err(LabelMatrixError::NonBinary {
                row: pos / n_labels.max(1),
                col: pos % n_labels.max(1),
                value: data[pos],
            });
        }
        Ok(Self { n_rows, n_labels, data })
    }

    pub fn zeros(n_rows: usize, n_labels: usize) -> Self {
        Self { n_rows, n_labels, data: vec![0; n_rows * n_labels] }
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, LabelMatrixError> {
        let n_labels = rows.first().map_or(NUM_EMOTIONS, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * n_labels);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_labels {
                return Err(LabelMatrixError::Shape { len: r.len(), rows: rows.len(), cols: n_labels });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), n_labels, data)
    }

    pub fn from_emotions(labels: &[EmotionLabels]) -> Self {
        let data = labels.iter().flat_map(|l| l.0).collect();
        Self { n_rows: labels.len(), n_labels: NUM_EMOTIONS, data }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn get(&self, row: usize, label: usize) -> u8 {
        self.data[row * self.n_labels + label]
    }

    pub fn set(&mut self, row: usize, label: usize, value: bool) {
        self.data[row * self.n_labels + label] = value as u8;
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.data[row * self.n_labels..(row + 1) * self.n_labels]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks(self.n_labels.max(1)).take(self.n_rows)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    /// Keeps the given rows, in the given order (duplicates allowed).
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.n_labels);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { n_rows: idx.len(), n_labels: self.n_labels, data }
    }

    pub fn to_emotions(&self) -> Option<Vec<EmotionLabels>> {
        if self.n_labels != NUM_EMOTIONS {
            return None;
        }
        Some(
            self.rows()
                .map(|r| {
                    let mut a = [0u8; NUM_EMOTIONS];
                    a.copy_from_slice(r);
                    EmotionLabels(a)
                })
                .collect(),
        )
    }
}
