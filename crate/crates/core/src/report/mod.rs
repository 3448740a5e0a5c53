//! Command implementations behind the `mindtrack` binary: configuration,
//! feature construction, and CSV/SVG/JSON report writing.

pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{generate_synthetic, load_corpus_with, Corpus, CorpusError, DateOptions, Label, SyntheticConfig};
use crate::eval::{run_experiment, EvalError, ExperimentReport, Task};
use crate::featurize::{
    build_vocabulary, count_vector, hash_encode, load_embeddings, tfidf_by_category, FeaturizeError, StopWords,
};
use crate::reduce::{fit_lda, fit_pca, Projection, ReduceError};
use crate::svm::{GridSpec, SvmError};
use crate::tracker::{
    alert, fit_class_stats, fit_region_classifier, track_author, RegionClassifier, TrackPoint, TrackerConfig,
    TrackerError,
};
use svg::{Plot, CLASS_COLOURS, REGION_COLOURS};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown author `{0}`")]
    UnknownAuthor(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
}

impl ReportError {
    /// 2 for configuration problems, 3 for bad input data, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        fn svm(e: &SvmError) -> i32 {
            match e {
                SvmError::InvalidParameter(_) => 2,
                SvmError::SingleClass
                | SvmError::MissingClass(_)
                | SvmError::NonFiniteFeature
                | SvmError::DimensionMismatch { .. } => 3,
                _ => 4,
            }
        }
        match self {
            ReportError::Config(_) => 2,
            ReportError::Corpus(CorpusError::InvalidConfig(_)) => 2,
            ReportError::Svm(e) | ReportError::Eval(EvalError::Svm(e)) => svm(e),
            ReportError::Tracker(TrackerError::Svm(e)) => svm(e),
            ReportError::Tracker(TrackerError::InvalidConfig(_)) => 2,
            ReportError::Tracker(
                TrackerError::SingularInnovation | TrackerError::NegativeTimeStep(_) | TrackerError::Reduce(_),
            ) => 4,
            ReportError::Reduce(ReduceError::Singular | ReduceError::NonFinite) => 4,
            ReportError::Eval(_) | ReportError::Reduce(_) | ReportError::Tracker(_) => 3,
            ReportError::UnknownAuthor(_)
            | ReportError::Io { .. }
            | ReportError::Csv(_)
            | ReportError::Corpus(_)
            | ReportError::Featurize(_) => 3,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Unigram,
    Bigram,
    #[default]
    Embedding,
    Hash,
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unigram" => Ok(FeatureKind::Unigram),
            "bigram" => Ok(FeatureKind::Bigram),
            "embedding" => Ok(FeatureKind::Embedding),
            "hash" => Ok(FeatureKind::Hash),
            _ => Err(format!("unknown feature kind `{s}`")),
        }
    }
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Unigram => "unigram",
            FeatureKind::Bigram => "bigram",
            FeatureKind::Embedding => "embedding",
            FeatureKind::Hash => "hash",
        }
    }
}

/// Everything a command needs. Loaded from one JSON document; command-line
/// flags are applied on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub feature: FeatureKind,
    pub hash_dim: usize,
    pub task: Task,
    pub grid: GridSpec,
    pub tracker: TrackerConfig,
    pub synth: SyntheticConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub author: Option<String>,
    /// Terms per category for `tfidf`.
    pub top_n: usize,
    /// n-gram order for `tfidf`.
    pub ngram: usize,
    pub month_first: bool,
    pub context_year: Option<i32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            embeddings: None,
            feature: FeatureKind::default(),
            hash_dim: 512,
            task: Task::default(),
            grid: GridSpec::default(),
            tracker: TrackerConfig::default(),
            synth: SyntheticConfig::default(),
            out: PathBuf::from("out"),
            seed: None,
            author: None,
            top_n: 20,
            ngram: 1,
            month_first: false,
            context_year: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ReportError::Config(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self) -> Result<u64, ReportError> {
        self.seed
            .ok_or_else(|| ReportError::Config("a seed is required (--seed or \"seed\" in the config)".into()))
    }

    fn corpus_path(&self) -> Result<&Path, ReportError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| ReportError::Config("no corpus path given".into()))
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate_for_data(&self) -> Result<(), ReportError> {
        self.seed()?;
        self.corpus_path()?;
        if self.feature == FeatureKind::Embedding && self.embeddings.is_none() {
            return Err(ReportError::Config("feature `embedding` needs an embeddings path".into()));
        }
        if self.feature == FeatureKind::Hash && self.hash_dim < 2 {
            return Err(ReportError::Config("hash_dim must be at least 2".into()));
        }
        if !(self.ngram == 1 || self.ngram == 2) {
            return Err(ReportError::Config("ngram must be 1 or 2".into()));
        }
        self.grid.validate()?;
        self.tracker.validate()?;
        Ok(())
    }

    fn date_options(&self) -> DateOptions {
        DateOptions {
            month_first: self.month_first,
            context_year: self.context_year,
        }
    }

    fn load_corpus(&self) -> Result<Corpus, ReportError> {
        Ok(load_corpus_with(self.corpus_path()?, &self.date_options())?)
    }
}

/// Dense feature rows aligned with `corpus.quotes()`.
pub fn build_features(corpus: &Corpus, cfg: &RunConfig) -> Result<Vec<Vec<f64>>, ReportError> {
    let stop = StopWords::english();
    match cfg.feature {
        FeatureKind::Unigram | FeatureKind::Bigram => {
            let n = if cfg.feature == FeatureKind::Unigram { 1 } else { 2 };
            let vocab = build_vocabulary(corpus, n, &stop)?;
            Ok(corpus
                .quotes()
                .iter()
                .map(|q| count_vector(q, &vocab, &stop).to_dense())
                .collect())
        }
        FeatureKind::Hash => Ok(corpus
            .quotes()
            .iter()
            .map(|q| hash_encode(&q.text, cfg.hash_dim, cfg.seed().unwrap_or(0)))
            .collect()),
        FeatureKind::Embedding => {
            let path = cfg
                .embeddings
                .as_deref()
                .ok_or_else(|| ReportError::Config("feature `embedding` needs an embeddings path".into()))?;
            let emb = load_embeddings(path)?;
            Ok(emb.rows_for(corpus.quotes().iter().map(|q| q.id.as_str()))?)
        }
    }
}

/// Above this many input dimensions, PCA runs before LDA to keep the
/// scatter matrices small.
const LDA_MAX_DIM: usize = 256;

/// Two-dimensional LDA of the statement labels, with a PCA stage first for
/// wide inputs. The result is one composed linear map.
pub fn fit_plane(x: &[Vec<f64>], labels: &[usize]) -> Result<Projection, ReduceError> {
    let d = x.first().map_or(0, Vec::len);
    if d <= LDA_MAX_DIM {
        return fit_lda(x, labels, 2);
    }
    let k = LDA_MAX_DIM.min(x.len().saturating_sub(1)).max(1);
    let pca = fit_pca(x, k)?;
    let reduced = pca.project_all(x)?;
    let lda = fit_lda(&reduced, labels, 2)?;
    let b1 = pca.basis();
    let b2 = lda.basis();
    let m2 = DMatrix::from_column_slice(lda.mean.len(), 1, &lda.mean);
    let shift = &b1 * m2;
    let basis = &b1 * &b2;
    Ok(Projection {
        kind: lda.kind,
        mean: pca.mean.iter().zip(shift.iter()).map(|(a, b)| a + b).collect(),
        components: (0..basis.ncols()).map(|j| basis.column(j).iter().copied().collect()).collect(),
        eigenvalues: lda.eigenvalues,
        rank_deficient: lda.rank_deficient || pca.rank_deficient,
    })
}

fn create_dir(dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|e| ReportError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|e| ReportError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, ReportError> {
    Ok(csv::Writer::from_path(path)?)
}

/// Writes a synthetic corpus and its embeddings; returns the two paths.
pub fn cmd_synth(cfg: &RunConfig) -> Result<(PathBuf, PathBuf), ReportError> {
    let synth = SyntheticConfig {
        seed: cfg.seed()?,
        ..cfg.synth.clone()
    };
    synth.validate()?;
    let (corpus, emb) = generate_synthetic(&synth)?;
    create_dir(&cfg.out)?;
    let cp = cfg.out.join("corpus.jsonl");
    let ep = cfg.out.join("embeddings.jsonl");
    corpus.save(&cp)?;
    emb.save(&ep)?;
    Ok((cp, ep))
}

/// Cross-validated experiment plus its CSV, JSON and SVG artefacts.
pub fn cmd_eval(cfg: &RunConfig) -> Result<ExperimentReport, ReportError> {
    cfg.validate_for_data()?;
    let seed = cfg.seed()?;
    let corpus = cfg.load_corpus()?;
    let features = build_features(&corpus, cfg)?;
    let report = run_experiment(&corpus, &features, cfg.task, &cfg.grid, seed)?;
    create_dir(&cfg.out)?;
    let out = &cfg.out;

    for (name, proportions) in [("confusion_counts.csv", false), ("confusion_proportions.csv", true)] {
        let mut w = csv_writer(&out.join(name))?;
        let mut header = vec!["actual".to_string()];
        header.extend(report.classes.iter().cloned());
        w.write_record(&header)?;
        let props = report.confusion.proportions();
        for (i, class) in report.classes.iter().enumerate() {
            let mut row = vec![class.clone()];
            if proportions {
                row.extend(props[i].iter().map(f64::to_string));
            } else {
                row.extend(report.confusion.counts[i].iter().map(usize::to_string));
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| ReportError::io(&out.join(name), e))?;
    }

    let mut w = csv_writer(&out.join("grid.csv"))?;
    w.write_record(["kernel", "c", "gamma", "pca", "metric", "error"])?;
    for cell in &report.grid.cells {
        let c = &cell.config;
        w.write_record([
            format!("{:?}", c.kernel).to_lowercase(),
            c.c.to_string(),
            c.gamma.map(|g| g.to_string()).unwrap_or_default(),
            c.pca.map_or("none".to_string(), |k| k.to_string()),
            cell.metric.map(|m| m.to_string()).unwrap_or_default(),
            cell.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| ReportError::io(&out.join("grid.csv"), e))?;

    let mut w = csv_writer(&out.join("roc.csv"))?;
    w.write_record(["class", "threshold", "fpr", "tpr"])?;
    for r in &report.rocs {
        for p in &r.curve.points {
            w.write_record([r.class.clone(), p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])?;
        }
    }
    w.flush().map_err(|e| ReportError::io(&out.join("roc.csv"), e))?;

    let mut w = csv_writer(&out.join("auc.csv"))?;
    w.write_record(["class", "auc"])?;
    for r in &report.rocs {
        w.write_record([r.class.clone(), r.auc.to_string()])?;
    }
    w.flush().map_err(|e| ReportError::io(&out.join("auc.csv"), e))?;

    let mut w = csv_writer(&out.join("predictions.csv"))?;
    let mut header = vec!["id".to_string(), "actual".into(), "predicted".into()];
    header.extend(report.classes.iter().map(|c| format!("p_{c}")));
    w.write_record(&header)?;
    for i in 0..report.ids.len() {
        let mut row = vec![
            report.ids[i].clone(),
            report.classes[report.actual[i]].clone(),
            report.classes[report.predicted[i]].clone(),
        ];
        row.extend(report.probabilities[i].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| ReportError::io(&out.join("predictions.csv"), e))?;

    write_text(&out.join("summary.txt"), &summary_text(&report, cfg))?;
    let summary = serde_json::json!({
        "task": report.task,
        "feature": cfg.feature,
        "seed": seed,
        "n_evaluated": report.ids.len(),
        "excluded": report.excluded.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
        "best": report.best,
        "balanced_accuracy": report.balanced_accuracy,
        "auc": report.rocs.iter().map(|r| (r.class.clone(), r.auc)).collect::<std::collections::BTreeMap<_, _>>(),
    });
    write_text(
        &out.join("summary.json"),
        &(serde_json::to_string_pretty(&summary).expect("json value serialises") + "\n"),
    )?;

    write_text(&out.join("lda_scatter.svg"), &scatter_svg(&corpus, &features)?)?;
    Ok(report)
}

fn summary_text(report: &ExperimentReport, cfg: &RunConfig) -> String {
    let mut s = format!(
        "task: {}\nfeature: {}\nevaluated quotes: {}\n",
        report.task.name(),
        cfg.feature.name(),
        report.ids.len()
    );
    for (label, n) in &report.excluded {
        s += &format!("excluded {n} quotes labelled {label}\n");
    }
    let b = &report.best;
    s += &format!(
        "best: kernel={} C={} gamma={} pca={}\n",
        format!("{:?}", b.kernel).to_lowercase(),
        b.c,
        b.gamma.map_or("-".into(), |g| g.to_string()),
        b.pca.map_or("none".into(), |k| k.to_string())
    );
    s += &format!("balanced accuracy: {}\n", report.balanced_accuracy);
    for r in &report.rocs {
        s += &format!("auc[{}]: {}\n", r.class, r.auc);
    }
    s
}

/// Labelled quotes in the statement-label LDA plane, one marker each.
fn scatter_svg(corpus: &Corpus, features: &[Vec<f64>]) -> Result<String, ReportError> {
    let (rows, labels): (Vec<Vec<f64>>, Vec<usize>) = corpus
        .quotes()
        .iter()
        .zip(features)
        .filter_map(|(q, f)| q.label.map(|l| (f.clone(), l.index())))
        .unzip();
    let plane = fit_plane(&rows, &labels)?;
    let pts = plane.project_all(&rows)?;
    let ids: Vec<&str> = corpus.quotes().iter().filter(|q| q.label.is_some()).map(|q| q.id.as_str()).collect();
    let mut plot = Plot::new(
        640.0,
        520.0,
        svg::range(pts.iter().map(|p| p[0])),
        svg::range(pts.iter().map(|p| p[1])),
    );
    for ((p, &l), id) in pts.iter().zip(&labels).zip(&ids) {
        plot.marker(p[0], p[1], CLASS_COLOURS[l], &format!("quote {}", Label::ALL[l].code()), id);
    }
    plot.legend(&Label::ALL.map(|l| (l.name(), CLASS_COLOURS[l.index()])));
    Ok(plot.finish("Quotes in the LDA plane", "LDA dimension 1", "LDA dimension 2"))
}

/// Everything `cmd_track` produces, for callers that want the numbers.
#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub trajectory: Vec<TrackPoint>,
    pub p_terrorist: Vec<f64>,
    pub fired: Vec<bool>,
    pub regions: RegionClassifier,
}

/// Tracks one author in the LDA plane fitted on the whole corpus.
pub fn cmd_track(cfg: &RunConfig, author: &str) -> Result<TrackOutput, ReportError> {
    cfg.validate_for_data()?;
    let seed = cfg.seed()?;
    let corpus = cfg.load_corpus()?;
    let idx = corpus
        .author_indices(author)
        .ok_or_else(|| ReportError::UnknownAuthor(author.to_string()))?
        .to_vec();
    let features = build_features(&corpus, cfg)?;
    let labels: Vec<usize> = corpus
        .quotes()
        .iter()
        .map(|q| q.label.map(Label::index).ok_or_else(|| TrackerError::MissingLabel(q.id.clone())))
        .collect::<Result<_, _>>()?;
    let plane = fit_plane(&features, &labels)?;
    let pts: Vec<Vector2<f64>> = plane
        .project_all(&features)?
        .iter()
        .map(|p| Vector2::new(p[0], p[1]))
        .collect();
    let stats = fit_class_stats(&corpus, &pts)?;
    let label_codes: Vec<Label> = labels.iter().map(|&k| Label::ALL[k]).collect();
    let regions = fit_region_classifier(&pts, &label_codes, seed)?;

    let quotes: Vec<_> = idx.iter().map(|&i| &corpus.quotes()[i]).collect();
    let vectors: Vec<Vec<f64>> = idx.iter().map(|&i| features[i].clone()).collect();
    let trajectory = track_author(&quotes, &vectors, &plane, &stats, &cfg.tracker)?;
    let alerts = alert(&trajectory, &regions, cfg.tracker.threshold)?;

    create_dir(&cfg.out)?;
    let out = &cfg.out;
    let path = out.join("trajectory.csv");
    let mut w = csv_writer(&path)?;
    let mut header: Vec<String> = ["date", "x1", "v1", "x2", "v2"].map(String::from).to_vec();
    for i in 1..=4 {
        for j in 1..=4 {
            header.push(format!("p{i}{j}"));
        }
    }
    header.extend(["z1", "z2", "r11", "r12", "r22", "p_terrorist", "alert"].map(String::from));
    w.write_record(&header)?;
    for (t, a) in trajectory.iter().zip(&alerts) {
        let s = &t.state;
        let mut row = vec![s.date.to_string()];
        row.extend(s.x.iter().map(f64::to_string));
        for i in 0..4 {
            for j in 0..4 {
                row.push(s.p[(i, j)].to_string());
            }
        }
        row.extend([t.z[0], t.z[1], t.r[(0, 0)], t.r[(0, 1)], t.r[(1, 1)], a.p_terrorist].map(|v| v.to_string()));
        row.push(a.fired.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| ReportError::io(&path, e))?;

    write_text(
        &out.join("class_stats.json"),
        &(serde_json::to_string_pretty(&stats).expect("stats serialise") + "\n"),
    )?;
    write_text(&out.join("track_regions.svg"), &track_svg(author, &trajectory, &pts, &regions)?)?;
    write_text(&out.join("track_dim2.svg"), &dim2_svg(author, &trajectory))?;

    Ok(TrackOutput {
        p_terrorist: alerts.iter().map(|a| a.p_terrorist).collect(),
        fired: alerts.iter().map(|a| a.fired).collect(),
        trajectory,
        regions,
    })
}

const REGION_CELLS: usize = 60;

/// Posterior path and measurements over the shaded classifier regions.
fn track_svg(
    author: &str,
    trajectory: &[TrackPoint],
    corpus_pts: &[Vector2<f64>],
    regions: &RegionClassifier,
) -> Result<String, ReportError> {
    let xs = corpus_pts
        .iter()
        .map(|p| p[0])
        .chain(trajectory.iter().flat_map(|t| [t.z[0], t.state.x[0]]));
    let ys = corpus_pts
        .iter()
        .map(|p| p[1])
        .chain(trajectory.iter().flat_map(|t| [t.z[1], t.state.x[2]]));
    let mut plot = Plot::new(640.0, 520.0, svg::range(xs), svg::range(ys));
    let (x0, x1, y0, y1) = (plot.x.lo(), plot.x.hi(), plot.y.lo(), plot.y.hi());
    let (dx, dy) = ((x1 - x0) / REGION_CELLS as f64, (y1 - y0) / REGION_CELLS as f64);
    for i in 0..REGION_CELLS {
        for j in 0..REGION_CELLS {
            let (cx, cy) = (x0 + (i as f64 + 0.5) * dx, y0 + (j as f64 + 0.5) * dy);
            let k = regions.region(&Vector2::new(cx, cy))?.index();
            let (ax, ay) = (x0 + i as f64 * dx, y0 + j as f64 * dy);
            plot.rect(ax, ay, ax + dx, ay + dy, REGION_COLOURS[k], "region");
        }
    }
    let path: Vec<(f64, f64)> = trajectory.iter().map(|t| (t.state.x[0], t.state.x[2])).collect();
    plot.polyline(&path, "black", "track");
    for t in trajectory {
        plot.marker(t.z[0], t.z[1], "#444444", "quote", &format!("{} {}", t.id, t.state.date));
    }
    plot.legend(&Label::ALL.map(|l| (l.name(), REGION_COLOURS[l.index()])));
    Ok(plot.finish(&format!("Tracked state of mind: {author}"), "LDA dimension 1", "LDA dimension 2"))
}

/// Dimension 2 against time: posterior mean, a two-sigma band, and measurements.
fn dim2_svg(author: &str, trajectory: &[TrackPoint]) -> String {
    let start = trajectory[0].state.date;
    let t = |p: &TrackPoint| (p.state.date - start).num_days() as f64 / 365.25;
    let sd = |p: &TrackPoint| p.state.p[(2, 2)].max(0.0).sqrt();
    let ys = trajectory
        .iter()
        .flat_map(|p| [p.z[1], p.state.x[2] - 2.0 * sd(p), p.state.x[2] + 2.0 * sd(p)]);
    let mut plot = Plot::new(640.0, 400.0, svg::range(trajectory.iter().map(t)), svg::range(ys));
    let mut band: Vec<(f64, f64)> = trajectory.iter().map(|p| (t(p), p.state.x[2] + 2.0 * sd(p))).collect();
    band.extend(trajectory.iter().rev().map(|p| (t(p), p.state.x[2] - 2.0 * sd(p))));
    plot.polygon(&band, "#888888", "band");
    let mean: Vec<(f64, f64)> = trajectory.iter().map(|p| (t(p), p.state.x[2])).collect();
    plot.polyline(&mean, "black", "track");
    for p in trajectory {
        plot.marker(t(p), p.z[1], CLASS_COLOURS[2], "quote", &format!("{} {}", p.id, p.state.date));
    }
    plot.finish(
        &format!("LDA dimension 2 over time: {author}"),
        &format!("years since {start}"),
        "LDA dimension 2",
    )
}

/// Top-N TF-IDF terms per category.
pub fn cmd_tfidf(cfg: &RunConfig) -> Result<PathBuf, ReportError> {
    cfg.corpus_path()?;
    if !(cfg.ngram == 1 || cfg.ngram == 2) {
        return Err(ReportError::Config("ngram must be 1 or 2".into()));
    }
    let corpus = cfg.load_corpus()?;
    let scores = tfidf_by_category(&corpus, cfg.ngram, &StopWords::english());
    create_dir(&cfg.out)?;
    let path = cfg.out.join("tfidf_top_terms.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["category", "rank", "term", "score"])?;
    for l in Label::ALL {
        for (rank, (term, score)) in scores.top_terms(l, cfg.top_n).into_iter().enumerate() {
            w.write_record([l.code().to_string(), (rank + 1).to_string(), term.to_string(), score.to_string()])?;
        }
    }
    w.flush().map_err(|e| ReportError::io(&path, e))?;
    Ok(path)
}
