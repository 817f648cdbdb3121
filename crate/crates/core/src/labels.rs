//! Multi-hot label vectors and matrices over a topic vocabulary.

use serde::{Deserialize, Serialize};

/// 0/1 membership of each vocabulary topic, indexed like the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector {
    pub bits: Vec<u8>,
}

impl LabelVector {
    pub fn zeros(len: usize) -> Self {
        LabelVector { bits: vec![0; len] }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.bits[i] = 1;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] != 0
    }

    pub fn set(&mut self, i: usize) {
        self.bits[i] = 1;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i)
    }

    /// True when every bit set here is also set in `other`.
    pub fn is_subset_of(&self, other: &LabelVector) -> bool {
        self.len() == other.len() && self.indices().all(|i| other.get(i))
    }
}

/// Rows are repositories, columns are topics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    n_topics: usize,
    rows: Vec<LabelVector>,
}

impl LabelMatrix {
    pub fn new(n_topics: usize, rows: Vec<LabelVector>) -> Result<Self, String> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_topics) {
            return Err(format!("row {i} has {} columns, expected {n_topics}", r.len()));
        }
        Ok(LabelMatrix { n_topics, rows })
    }

    pub fn from_bool_rows(rows: &[Vec<bool>]) -> Result<Self, String> {
        let n_topics = rows.first().map_or(0, Vec::len);
        let rows = rows
            .iter()
            .map(|r| LabelVector {
                bits: r.iter().map(|&b| b as u8).collect(),
            })
            .collect();
        Self::new(n_topics, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn rows(&self) -> &[LabelVector] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &LabelVector {
        &self.rows[i]
    }

    pub fn get(&self, row: usize, topic: usize) -> bool {
        self.rows[row].get(topic)
    }

    /// Number of positive rows per topic column.
    pub fn column_frequencies(&self) -> Vec<u64> {
        let mut freq = vec![0u64; self.n_topics];
        for r in &self.rows {
            for i in r.indices() {
                freq[i] += 1;
            }
        }
        freq
    }

    pub fn column(&self, topic: usize) -> Vec<bool> {
        self.rows.iter().map(|r| r.get(topic)).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> LabelMatrix {
        LabelMatrix {
            n_topics: self.n_topics,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}
