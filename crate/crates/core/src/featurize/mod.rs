//! Text features: tokens, n-grams, count vectors, per-category TF-IDF and
//! dense embedding ingestion.

mod embed;

pub use embed::{hash_encode, load_embeddings, EmbeddingMatrix};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Label, Quote};

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("vocabulary is empty: every token was a stop word")]
    EmptyVocabulary,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: vector has dimension {found}, expected {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: vector for `{id}` contains a non-finite value")]
    NonFiniteValue { line: usize, id: String },
    #[error("duplicate embedding id `{0}`")]
    DuplicateId(String),
    #[error("no embedding for quote `{0}`")]
    MissingEmbedding(String),
    #[error("n-gram order must be 1 or 2, got {0}")]
    InvalidOrder(usize),
}

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// Built-in English list.
    pub fn english() -> Self {
        Self::from_lines(include_str!("../../data/stopwords_en.txt"))
    }

    pub fn none() -> Self {
        StopWords(HashSet::new())
    }

    /// One token per line; blank lines ignored.
    pub fn from_lines(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, FeaturizeError> {
        std::fs::read_to_string(path)
            .map(|t| Self::from_lines(&t))
            .map_err(|source| FeaturizeError::Io {
                path: path.display().to_string(),
                source,
            })
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopWords(iter.into_iter().map(Into::into).collect())
    }
}

/// A unigram or bigram.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NGram(pub Vec<String>);

impl NGram {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        NGram(tokens.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for NGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Drops stop words, then forms contiguous n-grams over what remains.
pub fn extract_ngrams(tokens: &[String], n: usize, stopwords: &StopWords) -> Vec<NGram> {
    assert!(n == 1 || n == 2, "n-gram order must be 1 or 2");
    let kept: Vec<&String> = tokens.iter().filter(|t| !stopwords.contains(t)).collect();
    kept.windows(n)
        .map(|w| NGram(w.iter().map(|s| (*s).clone()).collect()))
        .collect()
}

fn quote_ngrams(text: &str, n: usize, stopwords: &StopWords) -> Vec<NGram> {
    extract_ngrams(&tokenize(text), n, stopwords)
}

/// N-gram to column map, indices assigned in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    n: usize,
    terms: Vec<NGram>,
    index: HashMap<NGram, usize>,
}

impl Vocabulary {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, gram: &NGram) -> Option<usize> {
        self.index.get(gram).copied()
    }

    pub fn terms(&self) -> &[NGram] {
        &self.terms
    }
}

pub fn build_vocabulary(corpus: &Corpus, n: usize, stopwords: &StopWords) -> Result<Vocabulary, FeaturizeError> {
    if n != 1 && n != 2 {
        return Err(FeaturizeError::InvalidOrder(n));
    }
    let mut terms = Vec::new();
    let mut index = HashMap::new();
    for q in corpus.quotes() {
        for g in quote_ngrams(&q.text, n, stopwords) {
            if !index.contains_key(&g) {
                index.insert(g.clone(), terms.len());
                terms.push(g);
            }
        }
    }
    if terms.is_empty() {
        return Err(FeaturizeError::EmptyVocabulary);
    }
    Ok(Vocabulary { n, terms, index })
}

/// Sparse count vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, u32)>,
}

impl SparseVector {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, c) in &self.entries {
            v[i] = f64::from(c);
        }
        v
    }
}

/// Counts in-vocabulary n-grams of one quote; unknown n-grams are dropped.
pub fn count_vector(quote: &Quote, vocab: &Vocabulary, stopwords: &StopWords) -> SparseVector {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for g in quote_ngrams(&quote.text, vocab.n, stopwords) {
        if let Some(i) = vocab.get(&g) {
            *counts.entry(i).or_default() += 1;
        }
    }
    SparseVector {
        dim: vocab.len(),
        entries: counts.into_iter().collect(),
    }
}

/// TF-IDF scores with each label's concatenated quotes as one document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CategoryTermScores {
    scores: [BTreeMap<NGram, f64>; 3],
}

impl CategoryTermScores {
    /// Score of `term` in `label`; zero when absent.
    pub fn score(&self, label: Label, term: &NGram) -> f64 {
        self.scores[label.index()].get(term).copied().unwrap_or(0.0)
    }

    pub fn terms(&self, label: Label) -> &BTreeMap<NGram, f64> {
        &self.scores[label.index()]
    }

    /// Highest-scoring terms with positive score, ties broken alphabetically.
    pub fn top_terms(&self, label: Label, n: usize) -> Vec<(NGram, f64)> {
        let mut all: Vec<(NGram, f64)> = self.scores[label.index()]
            .iter()
            .filter(|(_, &s)| s > 0.0)
            .map(|(g, &s)| (g.clone(), s))
            .collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(n);
        all
    }
}

/// `tf(term, cat) * ln(3 / df(term))` over the three category documents.
/// Unlabelled quotes are ignored.
pub fn tfidf_by_category(corpus: &Corpus, n: usize, stopwords: &StopWords) -> CategoryTermScores {
    let mut tf: [BTreeMap<NGram, u64>; 3] = Default::default();
    for q in corpus.quotes() {
        let Some(label) = q.label else { continue };
        for g in quote_ngrams(&q.text, n, stopwords) {
            *tf[label.index()].entry(g).or_default() += 1;
        }
    }
    let mut df: HashMap<&NGram, usize> = HashMap::new();
    for doc in &tf {
        for g in doc.keys() {
            *df.entry(g).or_default() += 1;
        }
    }
    let mut scores: [BTreeMap<NGram, f64>; 3] = Default::default();
    for (doc, out) in tf.iter().zip(scores.iter_mut()) {
        for (g, &count) in doc {
            let idf = (3.0 / df[g] as f64).ln();
            out.insert(g.clone(), count as f64 * idf);
        }
    }
    CategoryTermScores { scores }
}
