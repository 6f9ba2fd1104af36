//! The `spellcap` command line.
//!
//! Settings resolve as built-in defaults, then a `key = value` config file,
//! then flags. `SPELLCAP_SEED` replaces the built-in default seed. Errors
//! map to exit codes through [`Error::exit_code`].

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baseline::{baseline_predict, baseline_predict_editdist};
use crate::config::apply_file;
use crate::datagen::{generate_tagged, load_lexicon, pattern_mix, split_train_dev, Lexicon, NoiseConfig, Pattern};
use crate::error::{Error, Result};
use crate::evalharness::{
    emit_csv, emit_plot, er_curve, error_at_rejection, exact_match_error, format_result_line, read_results,
    DEFAULT_ER_POINTS,
};
use crate::hypothesis::{
    parse_dataset, read_dataset, write_dataset, AsrHypothesis, LabeledSample, Prediction, Source,
};
use crate::seq2seq::{
    beam_decode, init_model, load_checkpoint, predict_name_with, prepare_pairs, save_checkpoint, ConfidenceMode,
    EpochStats, ModelConfig, TrainConfig, Trainer,
};
use crate::tokenizer::{learn_bpe, BpeModel, DEFAULT_MERGES};

pub const SEED_ENV: &str = "SPELLCAP_SEED";
const BUILTIN_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "spellcap", version, about = "Capture spelled names from ASR n-best hypotheses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled dataset.
    Generate(GenerateArgs),
    /// Learn BPE merges from the 1-best text of a dataset.
    LearnBpe(LearnBpeArgs),
    /// Train the sequence-to-sequence model.
    Train(TrainArgs),
    /// Predict names with a trained checkpoint.
    Predict(PredictArgs),
    /// Run the rule-based baseline.
    Baseline(BaselineArgs),
    /// Score results files and emit error/rejection curves.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Name list, one per line with optional `<TAB>weight`; defaults to the bundled lexicon.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Noise config (key = value).
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also split off a dev set and write it here.
    #[arg(long)]
    pub dev_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub dev_fraction: f64,
}

#[derive(Debug, Args)]
pub struct LearnBpeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MERGES)]
    pub merges: usize,
    #[arg(long)]
    pub vocab_out: PathBuf,
    #[arg(long)]
    pub merges_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Best-dev checkpoint; the full training state goes to `<out>.state`.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss CSV; defaults to `<out>.history.csv`.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Continue from a `.state` file.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Total epochs (including those already done when resuming).
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Merges to learn from the training set when no merges file is given.
    #[arg(long, default_value_t = DEFAULT_MERGES)]
    pub merges: usize,
    /// Existing merges file (with `--vocab`) instead of learning one.
    #[arg(long, requires = "vocab")]
    pub bpe_merges: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScoreMode {
    /// Total log-probability.
    Total,
    /// Log-probability per emitted symbol.
    PerChar,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset file or plain text lines; `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// Results file; `-` writes standard output.
    #[arg(long, default_value = "-")]
    pub out: String,
    #[arg(long, value_enum, default_value_t = ScoreMode::Total)]
    pub score: ScoreMode,
    #[arg(long, default_value_t = 1)]
    pub beam_width: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineConfidence {
    Avg,
    Editdist,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub input: String,
    #[arg(long, default_value = "-")]
    pub out: String,
    #[arg(long, value_enum, default_value_t = BaselineConfidence::Avg)]
    pub confidence: BaselineConfidence,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    /// ER curve CSV; with several inputs one file per label is written
    /// next to it as `<stem>.<label>.csv`.
    #[arg(long)]
    pub er_curve: Option<PathBuf>,
    /// Overlaid ER curves as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Comma-separated curve labels; defaults to the file stems.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_ER_POINTS)]
    pub n_points: usize,
}

pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(BUILTIN_SEED),
    }
}

fn read_input(spec: &str) -> Result<String> {
    if spec == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::io("<stdin>", e))?;
        Ok(s)
    } else {
        std::fs::read_to_string(spec).map_err(|e| Error::io(spec, e))
    }
}

fn write_output(spec: &str, text: &str) -> Result<()> {
    if spec == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::io("<stdout>", e))
    } else {
        write_file(Path::new(spec), text.as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::LearnBpe(a) => cmd_learn_bpe(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Baseline(a) => cmd_baseline(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let lex = match &a.lexicon {
        Some(p) => load_lexicon(p)?,
        None => Lexicon::seed(),
    };
    let mut noise = NoiseConfig::default();
    if let Some(p) = &a.noise {
        apply_file(&mut noise, p)?;
    }
    noise.validate()?;
    let seed = match a.seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let tagged = generate_tagged(&lex, a.n, &noise, seed)?;
    let samples: Vec<LabeledSample> = tagged.iter().map(|t| t.sample.clone()).collect();
    match &a.dev_out {
        Some(dev_path) => {
            let (train, dev) = split_train_dev(&samples, a.dev_fraction, seed);
            write_dataset(&a.out, &train)?;
            write_dataset(dev_path, &dev)?;
            println!("samples {} train {} dev {}", samples.len(), train.len(), dev.len());
        }
        None => {
            write_dataset(&a.out, &samples)?;
            println!("samples {}", samples.len());
        }
    }
    for (p, c) in Pattern::ALL.iter().zip(pattern_mix(&tagged)) {
        println!("pattern {p} {c} ({:.1}%)", 100.0 * c as f64 / samples.len() as f64);
    }
    Ok(())
}

fn corpus(samples: &[LabeledSample]) -> Vec<String> {
    samples.iter().map(|s| s.best().text()).collect()
}

pub fn cmd_learn_bpe(a: &LearnBpeArgs) -> Result<()> {
    let samples = read_dataset(&a.input)?;
    let bpe = learn_bpe(&corpus(&samples), a.merges)?;
    bpe.save(&a.vocab_out, &a.merges_out)?;
    println!("merges {} vocab {}", bpe.merges().len(), bpe.vocab_size());
    Ok(())
}

fn history_csv(h: &[EpochStats]) -> String {
    let mut s = String::from("epoch,train_loss,dev_loss\n");
    for e in h {
        let dev = e.dev_loss.map(|d| format!("{d:.12}")).unwrap_or_default();
        writeln!(s, "{},{:.12},{dev}", e.epoch, e.train_loss).unwrap();
    }
    s
}

fn state_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".state");
    PathBuf::from(s)
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let train_set = read_dataset(&a.train)?;
    let dev_set = match &a.dev {
        Some(p) => read_dataset(p)?,
        None => Vec::new(),
    };

    let (mut trainer, bpe) = match &a.resume {
        Some(state) => {
            let (mut t, bpe) = Trainer::load_state(state)?;
            if let Some(e) = a.epochs {
                t.cfg.epochs = e;
            }
            (t, bpe)
        }
        None => {
            let bpe = match (&a.bpe_merges, &a.vocab) {
                (Some(m), Some(v)) => BpeModel::load(v, m)?,
                _ => learn_bpe(&corpus(&train_set), a.merges)?,
            };
            let mut mc = ModelConfig::with_vocab(bpe.vocab_size());
            if let Some(p) = &a.model_config {
                apply_file(&mut mc, p)?;
            }
            if mc.vocab_size < bpe.vocab_size() {
                return Err(Error::Config(format!(
                    "vocab_size {} is smaller than the tokenizer's {} tokens",
                    mc.vocab_size,
                    bpe.vocab_size()
                )));
            }
            let mut tc = TrainConfig {
                seed: default_seed()?,
                ..TrainConfig::default()
            };
            if let Some(p) = &a.train_config {
                apply_file(&mut tc, p)?;
            }
            if let Some(e) = a.epochs {
                tc.epochs = e;
            }
            if let Some(s) = a.seed {
                tc.seed = s;
            }
            if let Some(lr) = a.lr {
                tc.learning_rate = lr;
            }
            let params = init_model(&mc, tc.seed)?;
            (Trainer::new(params, tc)?, bpe)
        }
    };
    if a.resume.is_some() {
        if let Some(lr) = a.lr {
            trainer.cfg.learning_rate = lr;
        }
        trainer.cfg.validate()?;
    }

    let mc = trainer.params.config().clone();
    let train_pairs = prepare_pairs(&bpe, &train_set, mc.max_src_len, mc.max_tgt_len);
    let dev_pairs = prepare_pairs(&bpe, &dev_set, mc.max_src_len, mc.max_tgt_len);
    println!(
        "train {} dev {} vocab {} params {}",
        train_pairs.len(),
        dev_pairs.len(),
        bpe.vocab_size(),
        trainer.params.len()
    );
    let history_path = a.history.clone().unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".history.csv");
        PathBuf::from(s)
    });
    let state = state_path(&a.out);
    while !trainer.is_finished() {
        let e = trainer.run_epoch(&train_pairs, &dev_pairs)?.clone();
        match e.dev_loss {
            Some(d) => println!("epoch {} train_loss {:.6} dev_loss {d:.6}", e.epoch, e.train_loss),
            None => println!("epoch {} train_loss {:.6}", e.epoch, e.train_loss),
        }
        trainer.save_state(&state, &bpe)?;
        save_checkpoint(&a.out, trainer.best_params(), &bpe)?;
        write_file(&history_path, history_csv(&trainer.history).as_bytes())?;
    }
    // nothing ran (already finished on resume): still leave the artifacts
    save_checkpoint(&a.out, trainer.best_params(), &bpe)?;
    write_file(&history_path, history_csv(&trainer.history).as_bytes())?;
    if trainer.stopped {
        println!("early stop after {} epochs", trainer.history.len());
    }
    Ok(())
}

/// Text to decode and gold label per input line. Dataset lines (with `|`)
/// use the rank-1 hypothesis; other lines are taken as plain text, with
/// `word/conf` confidences stripped if present, and an empty gold.
fn predict_inputs(text: &str) -> Result<Vec<(String, String)>> {
    let dataset = text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.contains('|'));
    if dataset {
        return Ok(parse_dataset(text.as_bytes())?
            .into_iter()
            .map(|s| (s.best().text(), s.gold))
            .collect());
    }
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let h = AsrHypothesis::parse_tokens(1, l.trim()).unwrap_or_else(|_| AsrHypothesis::from_words(1, l, 1.0));
            (h.text(), String::new())
        })
        .collect())
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let inputs = predict_inputs(&read_input(&a.input)?)?;
    let mode = match a.score {
        ScoreMode::Total => ConfidenceMode::Total,
        ScoreMode::PerChar => ConfidenceMode::PerChar,
    };
    let mut out = String::new();
    for (text, gold) in &inputs {
        let p = if a.beam_width > 1 {
            let mut src = ckpt.bpe.encode(text);
            src.ids.truncate(ckpt.params.config().max_src_len);
            let best = beam_decode(&ckpt.params, &src, a.beam_width, ckpt.params.config().max_tgt_len)?
                .into_iter()
                .next()
                .ok_or_else(|| Error::Numeric("beam search produced no hypothesis".into()))?;
            let conf = match mode {
                ConfidenceMode::Total => best.logprob,
                ConfidenceMode::PerChar => {
                    best.logprob / (best.name.chars().count() + usize::from(!best.truncated)).max(1) as f64
                }
            };
            Prediction::new(best.name, conf, Source::Seq2Seq)
        } else {
            predict_name_with(&ckpt.params, &ckpt.bpe, text, mode)?
        };
        out.push_str(&format_result_line(gold, &p));
        out.push('\n');
    }
    write_output(&a.out, &out)
}

pub fn cmd_baseline(a: &BaselineArgs) -> Result<()> {
    let text = read_input(&a.input)?;
    let samples = parse_dataset(text.as_bytes())?;
    let mut out = String::new();
    for s in &samples {
        let p = match a.confidence {
            BaselineConfidence::Avg => baseline_predict(&s.nbest),
            BaselineConfidence::Editdist => baseline_predict_editdist(&s.nbest),
        };
        out.push_str(&format_result_line(&s.gold, &p));
        out.push('\n');
    }
    write_output(&a.out, &out)
}

fn label_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn per_label_path(base: &Path, label: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = base.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    base.with_file_name(format!("{stem}.{label}.{ext}"))
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    if !a.labels.is_empty() && a.labels.len() != a.results.len() {
        return Err(Error::Config(format!(
            "{} labels for {} results files",
            a.labels.len(),
            a.results.len()
        )));
    }
    let want_curves = a.er_curve.is_some() || a.plot.is_some();
    let mut sets = Vec::new();
    for (i, path) in a.results.iter().enumerate() {
        let results = read_results(path)?;
        let err = exact_match_error(&results).map_err(|_| Error::Contract(format!("{}: no results", path.display())))?;
        println!("{}\terror_rate {err:.4}\tn {}", path.display(), results.len());
        if want_curves {
            let label = a.labels.get(i).cloned().unwrap_or_else(|| label_for(path));
            let pts = er_curve(&results, a.n_points)?;
            if let Some(at20) = error_at_rejection(&pts, 0.2) {
                println!("{}\terror_at_20pct_rejection {at20:.4}", path.display());
            }
            sets.push((label, pts));
        }
    }
    if let Some(csv) = &a.er_curve {
        if sets.len() == 1 {
            emit_csv(&sets[0].1, csv)?;
        } else {
            for (label, pts) in &sets {
                emit_csv(pts, &per_label_path(csv, label))?;
            }
        }
    }
    if let Some(svg) = &a.plot {
        emit_plot(&sets, svg)?;
    }
    Ok(())
}
