use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lyricist::api::{router, AppState};
use lyricist::config::Config;
use lyricist::load_engine;
use lyricist_core::bundle::{ingest, train_bundle};
use lyricist_core::corpus::{build_examples, load_corpus, load_emotion_seed, AnnotatedSong, Emotion, KeywordCounts};
use lyricist_core::lm::{example_sequence, LmBackend};
use lyricist_core::oracle::{brute_force_pmi, BruteForceNgram};
use lyricist_core::pipeline::{GenerationOutcome, RevisionRequest, Span};
use lyricist_core::store::Store;
use lyricist_core::tokens::graphemes;
use lyricist_core::{ControlSpec, GenerationOptions, LyricsText, TrainedBundle, WordsPerLine};
use rand::{Rng, SeedableRng};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "lyricist", version, about = "Controllable lyrics generation")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true, env = "LYRICIST_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the corpus, label missing emotions and extract keywords.
    Ingest,
    /// Fit the language model, classifiers and PMI table into a bundle.
    Train,
    /// Generate complete lyrics.
    Generate {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Generate the next lines after some existing ones.
    Continue {
        #[command(flatten)]
        spec: SpecArgs,
        /// File with the preceding lines, one per line.
        #[arg(long, conflicts_with = "line")]
        preceding: Option<PathBuf>,
        /// A preceding line (repeatable).
        #[arg(long)]
        line: Vec<String>,
        #[arg(long, default_value_t = 1)]
        k_lines: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Suggest replacements for a line or a character range.
    Revise {
        /// File with the lyrics, one line per line.
        #[arg(long)]
        lyrics: PathBuf,
        #[arg(long)]
        style: String,
        /// Zero-based line to revise.
        #[arg(long)]
        span_line: usize,
        /// Character range start within the line (word-level revision).
        #[arg(long, requires = "end")]
        start: Option<usize>,
        #[arg(long, requires = "start")]
        end: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the HTTP API.
    Serve {
        /// Address to bind; overrides the config file.
        #[arg(long)]
        listen: Option<String>,
        /// Draft store directory; overrides the config file.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Cross-check the trained bundle against brute-force reference
    /// computations.
    Oracle {
        /// Random contexts for the language-model check.
        #[arg(long, default_value_t = 200)]
        contexts: usize,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    style: String,
    #[arg(long, default_value = "neutral")]
    emotion: Emotion,
    #[arg(long)]
    theme: Option<String>,
    /// Keyword (repeatable or comma-separated).
    #[arg(long = "keyword", value_delimiter = ',')]
    keywords: Vec<String>,
    /// One character per line.
    #[arg(long)]
    acrostic: Option<String>,
    #[arg(long)]
    rhyme: Option<String>,
    #[arg(long, default_value_t = 4)]
    lines: usize,
    /// Characters per line: one number, or one per line separated by commas.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    words: Vec<usize>,
}

impl SpecArgs {
    fn spec(&self) -> ControlSpec {
        let words_per_line = match self.words.as_slice() {
            [n] => WordsPerLine::Uniform(*n),
            v => WordsPerLine::PerLine(v.to_vec()),
        };
        ControlSpec {
            style: self.style.clone(),
            emotion: self.emotion,
            theme: self.theme.clone(),
            keywords: self.keywords.clone(),
            acrostic: self.acrostic.as_deref().map(graphemes),
            rhyme_group: self.rhyme.clone(),
            num_lines: self.lines,
            words_per_line,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

impl OutputArgs {
    fn options(&self, cfg: &Config) -> GenerationOptions {
        let mut opts = cfg.generation.clone();
        if let Some(n) = self.candidates {
            opts.n_candidates = n;
        }
        if let Some(k) = self.top_k {
            opts.sampling.top_k = k;
        }
        if let Some(t) = self.temperature {
            opts.sampling.temperature = t;
        }
        opts
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn read_annotated(path: &Path) -> Result<Vec<AnnotatedSong>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {} (run `lyricist ingest` first)", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn cmd_ingest(cfg: &Config) -> Result<()> {
    let res = cfg.train_resources()?;
    let corpus = load_corpus(&cfg.resolve(&cfg.corpus.path), &res.styles)?;
    let seed = match &cfg.corpus.emotion_seed {
        Some(p) => load_emotion_seed(&cfg.resolve(p), &res.styles)?.songs,
        None => Vec::new(),
    };
    let annotated = ingest(&corpus.songs, &seed, &res)?;
    let out = cfg.resolve(&cfg.artifacts.annotated);
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut body = String::new();
    for a in &annotated {
        body.push_str(&serde_json::to_string(a)?);
        body.push('\n');
    }
    fs::write(&out, body).with_context(|| format!("writing {}", out.display()))?;
    let inferred = annotated.iter().filter(|a| a.song.emotion.is_none()).count();
    println!(
        "ingested {} songs ({} rejected, {} emotion labels inferred) -> {}",
        annotated.len(),
        corpus.rejected.len(),
        inferred,
        out.display()
    );
    for d in &corpus.rejected {
        println!("  rejected line {}: {}", d.line_no, d.reason);
    }
    Ok(())
}

fn cmd_train(cfg: &Config) -> Result<()> {
    let annotated = read_annotated(&cfg.resolve(&cfg.artifacts.annotated))?;
    let res = cfg.train_resources()?;
    let bundle = train_bundle(&annotated, &res, &cfg.train)?;
    let out = cfg.resolve(&cfg.artifacts.bundle);
    bundle.save(&out)?;
    println!(
        "trained on {} songs: vocabulary {}, {} contexts, {} PMI pairs, {} themes -> {}",
        annotated.len(),
        bundle.vocab().len(),
        bundle.ngram.context_count(),
        bundle.pmi.len(),
        bundle.themes.names().count(),
        out.display()
    );
    Ok(())
}

fn print_outcome(outcome: &GenerationOutcome, seed: u64, preceding: &[String]) {
    println!("seed: {seed}");
    println!("source: {}", outcome.source);
    println!("keywords: {}", outcome.keywords.join(", "));
    for (i, c) in outcome.candidates.iter().enumerate() {
        let s = c.scores.expect("ranked candidates carry scores");
        println!();
        println!(
            "#{}  rank {:.4}  (keyword hit {:.4}, style {:.4}, diversity {:.4})",
            i + 1,
            s.s_rank,
            s.s_kh,
            s.s_sr,
            s.s_div
        );
        for l in preceding {
            println!("    {l}");
        }
        for l in &c.lyrics.lines {
            println!("  > {l}");
        }
        for v in &c.violations {
            println!("  ! line {} {}: {}", v.line, v.constraint, v.detail);
        }
    }
    if !outcome.rejected.is_empty() {
        println!();
        println!("{} candidates rejected as corpus duplicates", outcome.rejected.len());
    }
}

fn cmd_oracle(cfg: &Config, contexts: usize) -> Result<()> {
    let bundle: TrainedBundle = TrainedBundle::load(&cfg.resolve(&cfg.artifacts.bundle))?;
    let annotated = read_annotated(&cfg.resolve(&cfg.artifacts.annotated))?;
    let tc = &bundle.train_config;
    let examples = build_examples(
        &annotated,
        tc.samples_per_song,
        &KeywordCounts { min: tc.keyword_min, max: tc.keyword_max },
        tc.seed,
    )?;
    let vocab = bundle.vocab();
    let seqs: Vec<Vec<u32>> = examples.iter().map(|e| vocab.encode(&example_sequence(e))).collect();
    let oracle = BruteForceNgram { sequences: &seqs, order: bundle.ngram.order(), vocab_size: vocab.len() };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let mut worst = 0f64;
    let mut worst_sum = 0f64;
    for _ in 0..contexts {
        let ctx: Vec<u32> = if rng.gen_bool(0.5) {
            let s = &seqs[rng.gen_range(0..seqs.len())];
            let end = rng.gen_range(0..=s.len());
            s[end.saturating_sub(rng.gen_range(0..6))..end].to_vec()
        } else {
            (0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..vocab.len() as u32)).collect()
        };
        let fast = bundle.ngram.next_distribution(&ctx)?;
        let slow = oracle.distribution(&ctx);
        worst_sum = worst_sum.max((fast.iter().sum::<f64>() - 1.0).abs());
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    let ngram_ok = worst <= 1e-9 && worst_sum <= 1e-9;
    println!(
        "{} ngram: {contexts} contexts, max |diff| {worst:.3e}, max |sum-1| {worst_sum:.3e}",
        if ngram_ok { "PASS" } else { "FAIL" }
    );

    let slow = brute_force_pmi(&annotated, bundle.pmi.min_count(), bundle.pmi.tau());
    let mut pmi_worst = 0f64;
    let mut pmi_ok = slow.len() == bundle.pmi.len();
    for ((a, b), v) in &slow {
        match bundle.pmi.get(a, b) {
            Some(x) => pmi_worst = pmi_worst.max((x - v).abs()),
            None => pmi_ok = false,
        }
    }
    pmi_ok &= pmi_worst <= 1e-12;
    println!(
        "{} pmi: {} pairs (oracle {}), max |diff| {pmi_worst:.3e}",
        if pmi_ok { "PASS" } else { "FAIL" },
        bundle.pmi.len(),
        slow.len()
    );
    if !(ngram_ok && pmi_ok) {
        bail!("oracle mismatch");
    }
    Ok(())
}

fn serve(cfg: Config, listen: Option<String>, data_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg = cfg;
    if let Some(l) = listen {
        cfg.server.listen = l;
    }
    if let Some(d) = data_dir {
        cfg.server.data_dir = d;
    }
    let engine = Arc::new(load_engine(&cfg)?);
    let store = Arc::new(Store::open(cfg.resolve(&cfg.server.data_dir))?);
    let addr = cfg.listen_addr()?;
    let state = AppState {
        engine,
        store,
        defaults: cfg.generation.clone(),
        timeout: Duration::from_millis(cfg.server.timeout_ms),
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        let local = listener.local_addr()?;
        tracing::info!(%local, "serving");
        println!("listening on {local}");
        std::io::stdout().flush()?;
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let cfg = Config::load(cli.config.as_deref())?.with_seed(cli.seed);
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Generate { spec, out } => {
            let engine = load_engine(&cfg)?;
            let opts = out.options(&cfg);
            let outcome = engine.generate_full(&spec.spec(), &opts)?;
            if out.json {
                println!("{}", serde_json::to_string_pretty(&outcome)?);
            } else {
                print_outcome(&outcome, opts.seed, &[]);
            }
            Ok(())
        }
        Command::Continue { spec, preceding, line, k_lines, out } => {
            let engine = load_engine(&cfg)?;
            let lines = match preceding {
                Some(p) => read_lines(&p)?,
                None => line,
            };
            let opts = out.options(&cfg);
            let outcome =
                engine.generate_continuation(&spec.spec(), &LyricsText::new(lines.clone()), k_lines, &opts)?;
            if out.json {
                println!("{}", serde_json::to_string_pretty(&outcome)?);
            } else {
                print_outcome(&outcome, opts.seed, &lines);
            }
            Ok(())
        }
        Command::Revise { lyrics, style, span_line, start, end, out } => {
            let engine = load_engine(&cfg)?;
            let span = match (start, end) {
                (Some(s), Some(e)) => Span::word(span_line, s, e),
                _ => Span::sentence(span_line),
            };
            let req = RevisionRequest { lyrics: LyricsText::new(read_lines(&lyrics)?), span, style };
            let opts = out.options(&cfg);
            let outcome = engine.revise(&req, &opts)?;
            if out.json {
                println!("{}", serde_json::to_string_pretty(&outcome)?);
            } else {
                println!("masked: {}", outcome.masked_source);
                println!("original: {}", outcome.original);
                if outcome.suggestions.is_empty() {
                    println!("no suggestions");
                }
                for (i, s) in outcome.suggestions.iter().enumerate() {
                    println!("#{}  {:.4}  {}", i + 1, s.score, s.text);
                }
            }
            Ok(())
        }
        Command::Serve { listen, data_dir } => serve(cfg, listen, data_dir),
        Command::Oracle { contexts } => cmd_oracle(&cfg, contexts),
    }
}
