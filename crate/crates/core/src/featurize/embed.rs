use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::Value;

use super::{tokenize, FeaturizeError};

/// Dense vectors keyed by quote id, all of one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingMatrix {
    dim: Option<usize>,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self, FeaturizeError> {
        let mut m = Self::new();
        for (i, (id, v)) in pairs.into_iter().enumerate() {
            m.insert(id, v, i + 1)?;
        }
        Ok(m)
    }

    fn insert(&mut self, id: String, vector: Vec<f64>, line: usize) -> Result<(), FeaturizeError> {
        match self.dim {
            Some(d) if d != vector.len() => {
                return Err(FeaturizeError::DimensionMismatch {
                    line,
                    expected: d,
                    found: vector.len(),
                })
            }
            None => self.dim = Some(vector.len()),
            _ => {}
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(FeaturizeError::NonFiniteValue { line, id });
        }
        if self.index.contains_key(&id) {
            return Err(FeaturizeError::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.rows.len());
        self.ids.push(id);
        self.rows.push(vector);
        Ok(())
    }

    /// Vector dimension; `None` until the first vector is added.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.rows[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.rows.iter().map(Vec::as_slice))
    }

    /// Rows for the given ids, in order.
    pub fn rows_for<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<Vec<f64>>, FeaturizeError> {
        ids.into_iter()
            .map(|id| {
                self.get(id)
                    .map(<[f64]>::to_vec)
                    .ok_or_else(|| FeaturizeError::MissingEmbedding(id.to_string()))
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), FeaturizeError> {
        let io = |source| FeaturizeError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        for (id, v) in self.iter() {
            let line = serde_json::json!({ "id": id, "vector": v });
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Reads an embeddings JSONL file (`id`, `vector` per line).
///
/// Bare `NaN`/`Infinity` tokens as written by common JSON encoders are
/// reported as [`FeaturizeError::NonFiniteValue`] rather than syntax errors.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix, FeaturizeError> {
    let io = |source| FeaturizeError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut m = EmbeddingMatrix::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |field: &str, message: String| FeaturizeError::Schema {
            line: lineno,
            field: field.into(),
            message,
        };
        let (clean, had_non_finite) = replace_non_finite_tokens(&line);
        let value: Value = serde_json::from_str(&clean).map_err(|e| schema("<record>", e.to_string()))?;
        let id = match value.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(schema("id", "expected a string".into())),
            None => return Err(schema("id", "missing required field".into())),
        };
        let items = match value.get("vector") {
            Some(Value::Array(items)) => items,
            Some(_) => return Err(schema("vector", "expected an array".into())),
            None => return Err(schema("vector", "missing required field".into())),
        };
        let mut vector = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Value::Number(n) => vector.push(n.as_f64().unwrap_or(f64::NAN)),
                Value::Null if had_non_finite => vector.push(f64::NAN),
                _ => return Err(schema("vector", "expected an array of numbers".into())),
            }
        }
        m.insert(id, vector, lineno)?;
    }
    Ok(m)
}

fn replace_non_finite_tokens(line: &str) -> (String, bool) {
    let mut out = String::with_capacity(line.len());
    let mut replaced = false;
    let mut in_string = false;
    let mut escaped = false;
    let mut rest = line;
    while let Some(c) = rest.chars().next() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
        } else if c == '"' {
            in_string = true;
        } else if let Some(tok) = ["-Infinity", "Infinity", "NaN"].into_iter().find(|t| rest.starts_with(t)) {
            out.push_str("null");
            rest = &rest[tok.len()..];
            replaced = true;
            continue;
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    (out, replaced)
}

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    // final avalanche so the sign bit depends on every input byte
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^ (h >> 33)
}

/// Signed feature hashing of unigrams and bigrams into `d` dimensions,
/// L2-normalised. Empty text maps to the zero vector.
pub fn hash_encode(text: &str, d: usize, seed: u64) -> Vec<f64> {
    assert!(d >= 2, "hash dimension must be at least 2");
    let tokens = tokenize(text);
    let mut v = vec![0.0; d];
    let mut add = |feature: &str| {
        let h = fnv1a(seed, feature.as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[((h & (u64::MAX >> 1)) % d as u64) as usize] += sign;
    };
    for t in &tokens {
        add(t);
    }
    for w in tokens.windows(2) {
        add(&format!("{} {}", w[0], w[1]));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}
