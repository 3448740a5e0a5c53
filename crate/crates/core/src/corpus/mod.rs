//! Quote data model, corpus files, rater label merging and synthetic corpora.

mod date;
mod synth;

pub use date::{parse_date, parse_date_with, render_date, DateFormat, DateOptions};
pub use synth::{generate_synthetic, Gaussian, SyntheticConfig, DEFAULT_PERSON_PRIOR, DEFAULT_STATEMENT_GIVEN_PERSON};

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("duplicate quote id `{0}`")]
    DuplicateId(String),
    #[error("unparsable date `{0}`")]
    UnparsableDate(String),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("rating refers to unknown quote id `{0}`")]
    UnknownQuote(String),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn schema(line: usize, field: &str, message: impl Into<String>) -> Self {
        CorpusError::Schema {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Ideology category of a statement or of a person. Ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "c")]
    Centrist,
    #[serde(rename = "e")]
    Extremist,
    #[serde(rename = "t")]
    Terrorist,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Centrist, Label::Extremist, Label::Terrorist];

    pub fn index(self) -> usize {
        match self {
            Label::Centrist => 0,
            Label::Extremist => 1,
            Label::Terrorist => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            Label::Centrist => "c",
            Label::Extremist => "e",
            Label::Terrorist => "t",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Centrist => "centrist",
            Label::Extremist => "extremist",
            Label::Terrorist => "terrorist",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c" => Ok(Label::Centrist),
            "e" => Ok(Label::Extremist),
            "t" => Ok(Label::Terrorist),
            other => Err(format!("expected one of \"c\", \"e\", \"t\", got {other:?}")),
        }
    }
}

/// A single time-stamped, attributed statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub id: String,
    pub author: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_type: Option<Label>,
    pub text: String,
    pub date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// An ordered quote collection with a per-author chronological index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    quotes: Vec<Quote>,
    by_author: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and empty texts.
    pub fn new(quotes: Vec<Quote>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(quotes.len());
        for q in &quotes {
            if !seen.insert(q.id.as_str()) {
                return Err(CorpusError::DuplicateId(q.id.clone()));
            }
        }
        let mut by_author: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, q) in quotes.iter().enumerate() {
            by_author.entry(q.author.clone()).or_default().push(i);
        }
        for idx in by_author.values_mut() {
            // same-day ties fall back to id order
            idx.sort_by(|&a, &b| {
                quotes[a]
                    .date
                    .cmp(&quotes[b].date)
                    .then_with(|| quotes[a].id.cmp(&quotes[b].id))
            });
        }
        Ok(Corpus { quotes, by_author })
    }

    pub fn quotes(&self) -> &[Quote] {
        &self.quotes
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Quote> {
        self.quotes.iter().find(|q| q.id == id)
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.by_author.keys().map(String::as_str)
    }

    /// Indices into `quotes()` for one author, ascending by (date, id).
    pub fn author_indices(&self, author: &str) -> Option<&[usize]> {
        self.by_author.get(author).map(Vec::as_slice)
    }

    pub fn author_quotes(&self, author: &str) -> Vec<&Quote> {
        self.author_indices(author)
            .map(|idx| idx.iter().map(|&i| &self.quotes[i]).collect())
            .unwrap_or_default()
    }

    /// Statement label histogram in (c, e, t) order; unlabelled quotes are skipped.
    pub fn label_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for l in self.quotes.iter().filter_map(|q| q.label) {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Returns a new corpus keeping only quotes that satisfy `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Quote) -> bool) -> Corpus {
        let quotes = self.quotes.iter().filter(|q| keep(q)).cloned().collect();
        Corpus::new(quotes).expect("subset of a valid corpus is valid")
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
        let mut w = BufWriter::new(file);
        for q in &self.quotes {
            let line = serde_json::to_string(q).expect("quote serializes");
            writeln!(w, "{line}").map_err(|e| CorpusError::io(path, e))?;
        }
        w.flush().map_err(|e| CorpusError::io(path, e))
    }
}

/// Loads a corpus JSONL file with the default date options.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    load_corpus_with(path, &DateOptions::default())
}

pub fn load_corpus_with(path: &Path, opts: &DateOptions) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut quotes = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let quote = parse_quote_line(&line, lineno, opts)?;
        if !seen.insert(quote.id.clone()) {
            return Err(CorpusError::DuplicateId(quote.id));
        }
        quotes.push(quote);
    }
    Corpus::new(quotes)
}

fn parse_quote_line(line: &str, lineno: usize, opts: &DateOptions) -> Result<Quote, CorpusError> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| CorpusError::schema(lineno, "<record>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CorpusError::schema(lineno, "<record>", "expected a JSON object"))?;

    let id = required_str(obj, "id", lineno)?;
    let author = required_str(obj, "author", lineno)?;
    let text = required_str(obj, "text", lineno)?;
    if text.trim().is_empty() {
        return Err(CorpusError::schema(lineno, "text", "empty after trimming"));
    }
    let raw_date = required_str(obj, "date", lineno)?;
    let date = parse_date_with(&raw_date, opts)
        .map_err(|_| CorpusError::schema(lineno, "date", format!("unparsable date {raw_date:?}")))?;

    Ok(Quote {
        id,
        author,
        author_type: optional_label(obj, "author_type", lineno)?,
        text,
        date,
        label: optional_label(obj, "label", lineno)?,
        source: optional_str(obj, "source", lineno)?,
    })
}

fn required_str(obj: &Map<String, Value>, field: &str, line: usize) -> Result<String, CorpusError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(CorpusError::schema(line, field, "expected a string")),
        None => Err(CorpusError::schema(line, field, "missing required field")),
    }
}

fn optional_str(obj: &Map<String, Value>, field: &str, line: usize) -> Result<Option<String>, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(CorpusError::schema(line, field, "expected a string")),
    }
}

fn optional_label(obj: &Map<String, Value>, field: &str, line: usize) -> Result<Option<Label>, CorpusError> {
    optional_str(obj, field, line)?
        .map(|s| s.parse::<Label>().map_err(|m| CorpusError::schema(line, field, m)))
        .transpose()
}

/// Combines three rater labels: strict majority, otherwise the median severity.
pub fn merge_ratings(r1: Label, r2: Label, r3: Label) -> Label {
    if r1 == r2 || r1 == r3 {
        r1
    } else if r2 == r3 {
        r2
    } else {
        let mut all = [r1, r2, r3];
        all.sort();
        all[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub id: String,
    pub r1: Label,
    pub r2: Label,
    pub r3: Label,
}

impl Rating {
    pub fn merged(&self) -> Label {
        merge_ratings(self.r1, self.r2, self.r3)
    }
}

pub fn load_ratings(path: &Path) -> Result<Vec<Rating>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| CorpusError::schema(i + 1, "<record>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CorpusError::schema(i + 1, "<record>", "expected a JSON object"))?;
        let id = required_str(obj, "id", i + 1)?;
        let mut rs = [Label::Centrist; 3];
        for (slot, field) in rs.iter_mut().zip(["r1", "r2", "r3"]) {
            *slot = optional_label(obj, field, i + 1)?
                .ok_or_else(|| CorpusError::schema(i + 1, field, "missing required field"))?;
        }
        out.push(Rating {
            id,
            r1: rs[0],
            r2: rs[1],
            r3: rs[2],
        });
    }
    Ok(out)
}

/// Overwrites statement labels with merged rater labels.
pub fn apply_ratings(corpus: &Corpus, ratings: &[Rating]) -> Result<Corpus, CorpusError> {
    let mut quotes = corpus.quotes().to_vec();
    let pos: BTreeMap<&str, usize> = corpus
        .quotes()
        .iter()
        .enumerate()
        .map(|(i, q)| (q.id.as_str(), i))
        .collect();
    for r in ratings {
        let &i = pos
            .get(r.id.as_str())
            .ok_or_else(|| CorpusError::UnknownQuote(r.id.clone()))?;
        quotes[i].label = Some(r.merged());
    }
    Corpus::new(quotes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quote(id: &str, author: &str, date: &str) -> Quote {
        Quote {
            id: id.into(),
            author: author.into(),
            author_type: None,
            text: "some words".into(),
            date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            label: None,
            source: None,
        }
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn merge_majority() {
        use Label::*;
        assert_eq!(merge_ratings(Centrist, Centrist, Terrorist), Centrist);
        assert_eq!(merge_ratings(Terrorist, Terrorist, Extremist), Terrorist);
        assert_eq!(merge_ratings(Centrist, Extremist, Terrorist), Extremist);
    }

    #[test]
    fn merge_matches_rule_over_all_triples() {
        for a in Label::ALL {
            for b in Label::ALL {
                for c in Label::ALL {
                    let votes = |l: Label| [a, b, c].iter().filter(|&&x| x == l).count();
                    let expected = Label::ALL
                        .into_iter()
                        .find(|&l| votes(l) >= 2)
                        .unwrap_or(Label::Extremist);
                    let got = merge_ratings(a, b, c);
                    assert_eq!(got, expected, "({a},{b},{c})");
                    for perm in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        assert_eq!(merge_ratings(perm.0, perm.1, perm.2), got);
                    }
                }
            }
        }
    }

    #[test]
    fn author_index_orders_by_date_then_id() {
        let c = Corpus::new(vec![
            quote("b", "x", "2001-01-01"),
            quote("a", "x", "2001-01-01"),
            quote("c", "x", "2000-06-01"),
            quote("d", "y", "1999-01-01"),
        ])
        .unwrap();
        let ids: Vec<_> = c.author_quotes("x").iter().map(|q| q.id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(c.authors().collect::<Vec<_>>(), ["x", "y"]);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_lines(&[]);
        assert!(load_corpus(f.path()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = write_lines(&[
            r#"{"id":"1","author":"a","text":"x","date":"2018-01-01"}"#,
            r#"{"id":"1","author":"b","text":"y","date":"2018-01-02"}"#,
        ]);
        assert!(matches!(load_corpus(f.path()), Err(CorpusError::DuplicateId(id)) if id == "1"));
    }

    #[test]
    fn schema_errors_name_line_and_field() {
        let f = write_lines(&[
            r#"{"id":"1","author":"a","text":"x","date":"2018-01-01"}"#,
            r#"{"id":"2","author":"a","text":"x","date":"2018-01-01","label":"z"}"#,
        ]);
        match load_corpus(f.path()) {
            Err(CorpusError::Schema { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "label");
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write_lines(&[r#"{"id":"1","author":"a","date":"2018-01-01"}"#]);
        assert!(matches!(load_corpus(f.path()), Err(CorpusError::Schema { field, .. }) if field == "text"));
        let f = write_lines(&[r#"{"id":"1","author":"a","text":"   ","date":"2018"}"#]);
        assert!(matches!(load_corpus(f.path()), Err(CorpusError::Schema { field, .. }) if field == "text"));
        let f = write_lines(&[r#"{"id":"1","author":"a","text":"x","date":"someday"}"#]);
        assert!(matches!(load_corpus(f.path()), Err(CorpusError::Schema { field, .. }) if field == "date"));
    }

    #[test]
    fn raw_dates_normalized_on_load() {
        let f = write_lines(&[
            r#"{"id":"1","author":"a","text":"x","date":"27 Sep 2018","label":"e","author_type":"t","source":"s"}"#,
        ]);
        let c = load_corpus(f.path()).unwrap();
        let q = &c.quotes()[0];
        assert_eq!(q.date, NaiveDate::from_ymd_opt(2018, 9, 27).unwrap());
        assert_eq!(q.label, Some(Label::Extremist));
        assert_eq!(q.author_type, Some(Label::Terrorist));
        assert_eq!(q.source.as_deref(), Some("s"));
    }

    #[test]
    fn default_sized_histogram() {
        let mut lines = Vec::new();
        for i in 0..839 {
            let label = if i < 681 { "c" } else if i < 811 { "e" } else { "t" };
            lines.push(format!(
                r#"{{"id":"q{i}","author":"p{}","text":"quote {i}","date":"2010-01-01","label":"{label}"}}"#,
                i % 48
            ));
        }
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let f = write_lines(&refs);
        let c = load_corpus(f.path()).unwrap();
        assert_eq!(c.label_counts(), [681, 130, 28]);
        assert_eq!(c.authors().count(), 48);
    }

    #[test]
    fn save_then_load_is_identity() {
        let mut q = quote("z", "a", "2012-03-04");
        q.label = Some(Label::Terrorist);
        q.source = Some("interview".into());
        let c = Corpus::new(vec![q, quote("y", "b", "1999-12-31")]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        c.save(f.path()).unwrap();
        let back = load_corpus(f.path()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ratings_applied() {
        let c = Corpus::new(vec![quote("1", "a", "2000-01-01"), quote("2", "a", "2000-01-02")]).unwrap();
        let f = write_lines(&[
            r#"{"id":"1","r1":"c","r2":"e","r3":"t"}"#,
            r#"{"id":"2","r1":"t","r2":"t","r3":"c"}"#,
        ]);
        let ratings = load_ratings(f.path()).unwrap();
        let rated = apply_ratings(&c, &ratings).unwrap();
        assert_eq!(rated.get("1").unwrap().label, Some(Label::Extremist));
        assert_eq!(rated.get("2").unwrap().label, Some(Label::Terrorist));
        let bad = [Rating {
            id: "nope".into(),
            r1: Label::Centrist,
            r2: Label::Centrist,
            r3: Label::Centrist,
        }];
        assert!(matches!(apply_ratings(&c, &bad), Err(CorpusError::UnknownQuote(_))));
    }
}
