//! Application-sequence vectorization: vocabulary fitting and CV/TF/TF-IDF.
//!
//! Sequences are treated like short documents whose tokens are app
//! identifiers. The vocabulary is always fitted on training sequences only;
//! out-of-vocabulary apps are ignored at transform time.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::sparse::SparseMatrix;
use super::FeatureError;

/// Fitted app-to-column mapping with document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: HashMap<String, u32>,
    apps: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: u32,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.apps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apps.is_empty()
    }

    pub fn n_docs(&self) -> u32 {
        self.n_docs
    }

    pub fn column_of(&self, app: &str) -> Option<u32> {
        self.index.get(app).copied()
    }

    pub fn app(&self, col: u32) -> &str {
        &self.apps[col as usize]
    }

    pub fn apps(&self) -> &[String] {
        &self.apps
    }

    pub fn doc_freq(&self, col: u32) -> u32 {
        self.doc_freq[col as usize]
    }

    /// Smoothed inverse document frequency: `ln((1 + n) / (1 + df)) + 1`.
    pub fn idf(&self, col: u32) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[col as usize] as f64)).ln() + 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorizeMode {
    Cv,
    Tf,
    Tfidf,
}

impl VectorizeMode {
    pub fn label(self) -> &'static str {
        match self {
            VectorizeMode::Cv => "cv",
            VectorizeMode::Tf => "tf",
            VectorizeMode::Tfidf => "tfidf",
        }
    }
}

/// Builds a vocabulary from training sequences: one column per distinct app
/// in first-occurrence order; document frequency counts presence per
/// sequence, not multiplicity.
pub fn fit_vocabulary<S: AsRef<str>>(sequences: &[Vec<S>]) -> Result<Vocabulary, FeatureError> {
    if sequences.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut apps: Vec<String> = Vec::new();
    let mut doc_freq: Vec<u32> = Vec::new();
    let mut seen_in_doc: Vec<bool> = Vec::new();

    for sequence in sequences {
        seen_in_doc.clear();
        seen_in_doc.resize(apps.len(), false);
        for app in sequence {
            let app = app.as_ref();
            let col = *index.entry(app.to_string()).or_insert_with(|| {
                apps.push(app.to_string());
                doc_freq.push(0);
                seen_in_doc.push(false);
                (apps.len() - 1) as u32
            });
            if !seen_in_doc[col as usize] {
                seen_in_doc[col as usize] = true;
                doc_freq[col as usize] += 1;
            }
        }
    }

    Ok(Vocabulary {
        index,
        apps,
        doc_freq,
        n_docs: sequences.len() as u32,
    })
}

/// Transforms sequences into a sparse matrix under the fitted vocabulary.
///
/// CV cells are occurrence counts; TF divides by the sequence length
/// (including out-of-vocabulary tokens); TF-IDF multiplies TF by the
/// smoothed idf. Empty sequences produce all-zero rows.
pub fn vectorize<S: AsRef<str>>(
    sequences: &[Vec<S>],
    vocab: &Vocabulary,
    mode: VectorizeMode,
) -> SparseMatrix {
    let mut matrix = SparseMatrix::new(vocab.len());
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for sequence in sequences {
        counts.clear();
        for app in sequence {
            if let Some(col) = vocab.column_of(app.as_ref()) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let len = sequence.len() as f64;
        let entries: Vec<(u32, f64)> = counts
            .iter()
            .map(|(&col, &count)| {
                let value = match mode {
                    VectorizeMode::Cv => count as f64,
                    VectorizeMode::Tf => count as f64 / len,
                    VectorizeMode::Tfidf => count as f64 / len * vocab.idf(col),
                };
                (col, value)
            })
            .collect();
        matrix.push_row(entries);
    }
    matrix
}

/// Column names for the sequence block of a combined matrix.
pub fn sequence_column_names(vocab: &Vocabulary, mode: VectorizeMode) -> Vec<String> {
    vocab
        .apps()
        .iter()
        .map(|app| format!("app_{}:{app}", mode.label()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(input: &[&[&str]]) -> Vec<Vec<String>> {
        input
            .iter()
            .map(|s| s.iter().map(|a| a.to_string()).collect())
            .collect()
    }

    #[test]
    fn fit_counts_presence_not_multiplicity() {
        let vocab = fit_vocabulary(&seqs(&[&["A"], &["A", "B"]])).unwrap();
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.n_docs(), 2);
        assert_eq!(vocab.doc_freq(vocab.column_of("A").unwrap()), 2);
        assert_eq!(vocab.doc_freq(vocab.column_of("B").unwrap()), 1);
    }

    #[test]
    fn fit_ignores_repeats_within_sequence() {
        let vocab = fit_vocabulary(&seqs(&[&["A", "A", "A"]])).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.doc_freq(0), 1);
    }

    #[test]
    fn fit_allows_empty_sequences() {
        let vocab = fit_vocabulary(&seqs(&[&[], &[]])).unwrap();
        assert_eq!(vocab.len(), 0);
        assert_eq!(vocab.n_docs(), 2);
    }

    #[test]
    fn fit_rejects_empty_corpus() {
        let empty: Vec<Vec<String>> = vec![];
        assert!(matches!(
            fit_vocabulary(&empty),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn columns_follow_first_occurrence_order() {
        let vocab = fit_vocabulary(&seqs(&[&["B", "A"], &["C"]])).unwrap();
        assert_eq!(vocab.apps(), &["B".to_string(), "A".into(), "C".into()]);
    }

    #[test]
    fn tf_row_is_count_over_length() {
        let train = seqs(&[&["A", "A", "B"]]);
        let vocab = fit_vocabulary(&train).unwrap();
        let m = vectorize(&train, &vocab, VectorizeMode::Tf);
        let a = vocab.column_of("A").unwrap();
        let b = vocab.column_of("B").unwrap();
        assert!((m.get(0, a) - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.get(0, b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ubiquitous_app_has_unit_idf() {
        // App in every fitted sequence: idf = ln(1) + 1 = 1, so TFIDF == TF.
        let train = seqs(&[&["A"], &["A"]]);
        let vocab = fit_vocabulary(&train).unwrap();
        let m = vectorize(&seqs(&[&["A"]]), &vocab, VectorizeMode::Tfidf);
        assert!((m.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_vocabulary_gives_zero_row() {
        let vocab = fit_vocabulary(&seqs(&[&["A"]])).unwrap();
        let m = vectorize(&seqs(&[&["C"]]), &vocab, VectorizeMode::Cv);
        assert_eq!(m.row(0), &[]);
    }

    #[test]
    fn cv_row_sum_equals_in_vocab_length() {
        let train = seqs(&[&["A", "B", "A"], &["B"]]);
        let vocab = fit_vocabulary(&train).unwrap();
        let m = vectorize(&train, &vocab, VectorizeMode::Cv);
        let sum: f64 = m.row(0).iter().map(|&(_, v)| v).sum();
        assert_eq!(sum, 3.0);
    }
}
