use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mindtrack::eval::Task;
use mindtrack::report::{cmd_eval, cmd_synth, cmd_tfidf, cmd_track, FeatureKind, ReportError, RunConfig};

#[derive(Parser)]
#[command(name = "mindtrack", version, about = "Statement classification and state-of-mind tracking")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Data {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// unigram | bigram | embedding | hash
    #[arg(long)]
    feature: Option<FeatureKind>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus and embeddings.
    Synth,
    /// Cross-validated classification experiment.
    Eval {
        #[command(flatten)]
        data: Data,
        /// threeway | detect_terrorist | detect_extremist
        #[arg(long)]
        task: Option<Task>,
    },
    /// Track one author's state of mind.
    Track {
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        author: Option<String>,
    },
    /// Top TF-IDF terms per category.
    Tfidf {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        ngram: Option<usize>,
    },
}

fn apply_data(cfg: &mut RunConfig, data: Data) {
    if data.corpus.is_some() {
        cfg.corpus = data.corpus;
    }
    if data.embeddings.is_some() {
        cfg.embeddings = data.embeddings;
    }
    if let Some(f) = data.feature {
        cfg.feature = f;
    }
}

fn run(cli: Cli) -> Result<(), ReportError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    match cli.command {
        Command::Synth => {
            let (c, e) = cmd_synth(&cfg)?;
            println!("wrote {} and {}", c.display(), e.display());
        }
        Command::Eval { data, task } => {
            apply_data(&mut cfg, data);
            if let Some(t) = task {
                cfg.task = t;
            }
            let r = cmd_eval(&cfg)?;
            println!(
                "{}: balanced accuracy {:.4}; report in {}",
                r.task.name(),
                r.balanced_accuracy,
                cfg.out.display()
            );
        }
        Command::Track { data, author } => {
            apply_data(&mut cfg, data);
            if author.is_some() {
                cfg.author = author;
            }
            let author = cfg
                .author
                .clone()
                .ok_or_else(|| ReportError::Config("track needs --author".into()))?;
            let t = cmd_track(&cfg, &author)?;
            let fired = t.fired.iter().filter(|&&f| f).count();
            println!(
                "{author}: {} quotes tracked, {fired} alerts; output in {}",
                t.trajectory.len(),
                cfg.out.display()
            );
        }
        Command::Tfidf { corpus, top, ngram } => {
            if corpus.is_some() {
                cfg.corpus = corpus;
            }
            if let Some(n) = top {
                cfg.top_n = n;
            }
            if let Some(n) = ngram {
                cfg.ngram = n;
            }
            let p = cmd_tfidf(&cfg)?;
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
