//! `dyadflow` command-line front end.
//!
//! Every subcommand reads the optional TOML configuration given by
//! `--config`; the global flags override the matching keys. Exit codes:
//! 0 success, 1 runtime failure, 2 usage error.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dyadflow::config::AppConfig;
use dyadflow::eval::{mismatch_table, EvalCondition};
use dyadflow::features::io::{load_corpus, read_track, write_corpus, write_track};
use dyadflow::features::{
    acoustic_features, generate_synthetic_corpus, savgol_smooth, sources_from_sessions, split_dataset, vad_mask,
    window_role, AudioSignal, DatasetSplit, Role, SessionData, VadConfig,
};
use dyadflow::gradcheck::{run_gradcheck, GradCheckOptions};
use dyadflow::model::DyadSequence;
use dyadflow::trainer::{Checkpoint, Trainer};
use dyadflow::{DyadFlowModel, GenerationConfig, Track};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest relative error `gradcheck` accepts.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "dyadflow", version, about = "Interlocutor-aware facial gesture generation with conditional flows")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for the subcommand's randomness.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Sampling temperature (latent standard deviation).
    #[arg(long, global = true, value_name = "SIGMA")]
    temperature: Option<f64>,
    /// Modality ablation applied to a freshly built model.
    #[arg(long, global = true, value_enum)]
    ablation: Option<AblationArg>,
    /// Train without mismatched (negative) batches.
    #[arg(long, global = true)]
    no_neg_train: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AblationArg {
    None,
    NoFace,
    NoSpeech,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Val,
    Test,
    Holdout,
    /// Test segments plus the held-out session.
    Heldout,
    /// Every session, unsplit.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoleArg {
    A,
    B,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dyadic corpus (tracks plus manifest).
    SynthData {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Extract 30D acoustic features from audio; optionally smooth a facial
    /// track and compute a two-channel voice activity mask.
    Featurize {
        /// 16-bit PCM mono WAV.
        #[arg(long, value_name = "WAV")]
        audio: PathBuf,
        #[arg(long, value_name = "CSV")]
        acoustic_out: PathBuf,
        /// Raw 56D facial track to smooth.
        #[arg(long, value_name = "CSV", requires = "face_out")]
        face: Option<PathBuf>,
        #[arg(long, value_name = "CSV", requires = "face")]
        face_out: Option<PathBuf>,
        /// The other speaker's channel, for the crosstalk-aware VAD.
        #[arg(long, value_name = "WAV", requires = "vad_out")]
        partner_audio: Option<PathBuf>,
        #[arg(long, value_name = "CSV", requires = "partner_audio")]
        vad_out: Option<PathBuf>,
    },
    /// Train a model on a corpus and write a checkpoint and a metrics log.
    Train {
        #[arg(long, value_name = "MANIFEST")]
        data: PathBuf,
        #[arg(long, value_name = "CKPT")]
        out: PathBuf,
        /// Metrics log; defaults to the checkpoint path with `.log` appended.
        #[arg(long, value_name = "PATH")]
        log: Option<PathBuf>,
        /// Continue from a checkpoint instead of starting fresh.
        #[arg(long, value_name = "CKPT")]
        resume: Option<PathBuf>,
        /// Stop after this many batches in this invocation.
        #[arg(long, value_name = "N")]
        max_batches: Option<usize>,
    },
    /// Sample a facial track for given speech and interlocutor tracks.
    Generate {
        #[arg(long, value_name = "CKPT")]
        checkpoint: PathBuf,
        #[arg(long, value_name = "CSV")]
        avatar_speech: PathBuf,
        #[arg(long, value_name = "CSV")]
        interlocutor_speech: PathBuf,
        #[arg(long, value_name = "CSV")]
        interlocutor_face: PathBuf,
        /// Ground-truth facial frames copied before sampling starts.
        #[arg(long, value_name = "CSV")]
        init_face: Option<PathBuf>,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        /// Savitzky-Golay smoothing of the sampled track.
        #[arg(long)]
        smooth: bool,
    },
    /// Mismatched-conditioning log-likelihood table for one or more models.
    Evaluate {
        /// `[NAME=]PATH`; repeat for several models. Unnamed models are
        /// named after their ablation flags.
        #[arg(long = "checkpoint", value_name = "[NAME=]CKPT", required = true)]
        checkpoints: Vec<String>,
        #[arg(long, value_name = "MANIFEST")]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "heldout")]
        split: SplitArg,
        #[arg(long, value_enum, default_value = "a")]
        role: RoleArg,
        /// Writes `PREFIX.txt` (table) and `PREFIX.tsv` (one record per cell).
        #[arg(long, value_name = "PREFIX")]
        out_prefix: Option<PathBuf>,
    },
    /// Finite-difference check of every analytic parameter gradient.
    Gradcheck,
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main(argv: Vec<String>) -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let g = &cli.global;
    match cli.command {
        Command::SynthData { out } => synth_data(&cfg, g, &out),
        Command::Featurize { audio, acoustic_out, face, face_out, partner_audio, vad_out } => featurize(
            &audio,
            &acoustic_out,
            face.as_deref().zip(face_out.as_deref()),
            partner_audio.as_deref().zip(vad_out.as_deref()),
        ),
        Command::Train { data, out, log, resume, max_batches } => {
            let log = log.unwrap_or_else(|| with_suffix(&out, ".log"));
            train(&cfg, g, &data, &out, &log, resume.as_deref(), max_batches)
        }
        Command::Generate { checkpoint, avatar_speech, interlocutor_speech, interlocutor_face, init_face, out, smooth } => {
            generate(
                &cfg,
                g,
                &checkpoint,
                [&avatar_speech, &interlocutor_speech, &interlocutor_face],
                init_face.as_deref(),
                &out,
                smooth,
            )
        }
        Command::Evaluate { checkpoints, data, split, role, out_prefix } => {
            evaluate(&cfg, g, &checkpoints, &data, split, role, out_prefix.as_deref())
        }
        Command::Gradcheck => gradcheck(g),
    }
}

/// Configuration file (or defaults) with the global flags applied.
fn load_config(g: &GlobalArgs) -> Result<AppConfig> {
    let mut cfg = match &g.config {
        Some(p) => AppConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => AppConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.train.seed = seed;
    }
    if let Some(t) = g.temperature {
        cfg.generate.temperature = t;
    }
    match g.ablation {
        Some(AblationArg::None) => (cfg.model.no_face, cfg.model.no_speech) = (false, false),
        Some(AblationArg::NoFace) => (cfg.model.no_face, cfg.model.no_speech) = (true, false),
        Some(AblationArg::NoSpeech) => (cfg.model.no_face, cfg.model.no_speech) = (false, true),
        None => {}
    }
    if g.no_neg_train {
        cfg.train.negative_training = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn synth_data(cfg: &AppConfig, g: &GlobalArgs, out: &Path) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed.unwrap_or(0));
    let sessions = generate_synthetic_corpus(&cfg.synth, &mut rng)?;
    let manifest = write_corpus(out, &sessions, Some(&cfg.synth))?;
    println!("wrote {} sessions to {}", sessions.len(), manifest.display());
    Ok(())
}

fn featurize(
    audio: &Path,
    acoustic_out: &Path,
    face: Option<(&Path, &Path)>,
    vad: Option<(&Path, &Path)>,
) -> Result<()> {
    let signal = AudioSignal::read_wav(audio).with_context(|| format!("reading {}", audio.display()))?;
    let acoustic = acoustic_features(&signal)?;
    write_track(acoustic_out, &acoustic)?;
    println!("acoustic: {} frames -> {}", acoustic.len(), acoustic_out.display());
    if let Some((src, dst)) = face {
        let raw = read_track(src, dyadflow::FACE_DIM)?;
        write_track(dst, &savgol_smooth(&raw))?;
        println!("face: {} frames smoothed -> {}", raw.len(), dst.display());
    }
    if let Some((partner, dst)) = vad {
        let other = AudioSignal::read_wav(partner).with_context(|| format!("reading {}", partner.display()))?;
        let (a, b) = vad_mask(&signal, &other, &VadConfig::default())?;
        let mut w = BufWriter::new(File::create(dst)?);
        writeln!(w, "speaker,partner")?;
        for (x, y) in a.iter().zip(&b) {
            writeln!(w, "{},{}", *x as u8, *y as u8)?;
        }
        w.flush()?;
        println!("vad: {} frames -> {}", a.len(), dst.display());
    }
    Ok(())
}

fn split_corpus(cfg: &AppConfig, sessions: &[SessionData]) -> Result<DatasetSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data.split_seed);
    Ok(split_dataset(sessions, cfg.data.segment_frames, cfg.data.proportions(), &mut rng)?)
}

fn train(
    cfg: &AppConfig,
    g: &GlobalArgs,
    data: &Path,
    out: &Path,
    log_path: &Path,
    resume: Option<&Path>,
    max_batches: Option<usize>,
) -> Result<()> {
    let (_, sessions) = load_corpus(data).with_context(|| format!("loading corpus {}", data.display()))?;
    let split = split_corpus(cfg, &sessions)?;
    let sources = sources_from_sessions(&split.train);
    let val = window_role(&split.val, Role::AAvatar, cfg.data.windowing());

    let (mut trainer, log_file) = match resume {
        Some(p) => {
            if g.ablation.is_some() || g.no_neg_train {
                bail!("--ablation and --no-neg-train apply to new models; a resumed run keeps its checkpoint's settings");
            }
            let ckpt = Checkpoint::load(p).with_context(|| format!("loading checkpoint {}", p.display()))?;
            let file = OpenOptions::new().create(true).append(true).open(log_path)?;
            (Trainer::from_checkpoint(ckpt)?, file)
        }
        None => {
            let mut model = DyadFlowModel::new(cfg.model.clone(), cfg.train.seed)?;
            model.initialize_actnorm(&sources, cfg.train.actnorm_init_frames)?;
            (Trainer::new(model, cfg.train.clone())?, File::create(log_path)?)
        }
    };
    let mut log = BufWriter::new(log_file);
    let mut budget = max_batches;
    while trainer.counters.epoch < trainer.cfg.epochs && budget != Some(0) {
        let epoch = trainer.counters.epoch;
        let m = trainer.train_batches(&sources, budget, &mut log)?;
        log.flush()?;
        if let Some(b) = budget.as_mut() {
            *b -= m.batches.min(*b);
        }
        let finished = trainer.counters.epoch > epoch;
        let val_note = if finished && !val.is_empty() {
            format!(", val NLL/frame {:.4}", mean_nll_per_frame(&trainer.model, &val)?)
        } else {
            String::new()
        };
        eprintln!(
            "epoch {epoch}{}: {} batches ({} negative, {} skipped), train NLL/frame {:.4}{val_note}",
            if finished { "" } else { " (partial)" },
            m.batches,
            m.negative_batches,
            m.skipped,
            m.mean_positive_nll
        );
        if m.batches == 0 {
            break;
        }
    }
    trainer.checkpoint().save(out)?;
    println!(
        "checkpoint {} after {} batches (epoch {}, batch {}); log {}",
        out.display(),
        trainer.counters.batches_seen,
        trainer.counters.epoch,
        trainer.counters.batch_in_epoch,
        log_path.display()
    );
    Ok(())
}

fn mean_nll_per_frame(model: &DyadFlowModel, seqs: &[DyadSequence]) -> Result<f64> {
    let mut sum = 0.0;
    for s in seqs {
        sum += model.sequence_nll(s)?;
    }
    Ok(sum / seqs.len() as f64)
}

fn generate(
    cfg: &AppConfig,
    g: &GlobalArgs,
    checkpoint: &Path,
    inputs: [&Path; 3],
    init_face: Option<&Path>,
    out: &Path,
    smooth: bool,
) -> Result<()> {
    let model = Checkpoint::load(checkpoint).with_context(|| format!("loading checkpoint {}", checkpoint.display()))?.model;
    let c = &model.config;
    let avatar_speech = read_track(inputs[0], c.acoustic_dim)?;
    let interlocutor_speech = read_track(inputs[1], c.acoustic_dim)?;
    let interlocutor_face = read_track(inputs[2], c.face_dim)?;
    let init_frames = match init_face {
        Some(p) => {
            let t = read_track(p, c.face_dim)?;
            let k = if cfg.generate.init_frames == 0 { t.len() } else { cfg.generate.init_frames.min(t.len()) };
            Some(t.slice(0, k))
        }
        None => None,
    };
    let gcfg = GenerationConfig {
        temperature: cfg.generate.temperature,
        seed: g.seed.unwrap_or(0),
        init_frames,
    };
    let mut track: Track = model.generate(&avatar_speech, &interlocutor_speech, &interlocutor_face, &gcfg)?;
    if smooth {
        track = savgol_smooth(&track);
    }
    write_track(out, &track)?;
    println!("generated {} frames at temperature {} -> {}", track.len(), gcfg.temperature, out.display());
    Ok(())
}

fn model_name(model: &DyadFlowModel, train: &dyadflow::trainer::TrainConfig) -> &'static str {
    match (model.config.no_face, model.config.no_speech, train.negative_training) {
        (true, true, _) => "no_face_speech",
        (true, false, _) => "no_face",
        (false, true, _) => "no_speech",
        (false, false, false) => "no_neg_train",
        (false, false, true) => "proposed",
    }
}

fn evaluate(
    cfg: &AppConfig,
    g: &GlobalArgs,
    checkpoints: &[String],
    data: &Path,
    split: SplitArg,
    role: RoleArg,
    out_prefix: Option<&Path>,
) -> Result<()> {
    let mut models: Vec<(String, DyadFlowModel)> = Vec::new();
    for spec in checkpoints {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) if !n.is_empty() => (Some(n.to_string()), PathBuf::from(p)),
            _ => (None, PathBuf::from(spec)),
        };
        let ckpt = Checkpoint::load(&path).with_context(|| format!("loading checkpoint {}", path.display()))?;
        let name = name.unwrap_or_else(|| model_name(&ckpt.model, &ckpt.train).to_string());
        if models.iter().any(|(n, _)| *n == name) {
            bail!("model name {name:?} is used twice; name checkpoints with NAME=PATH");
        }
        models.push((name, ckpt.model));
    }

    let (_, sessions) = load_corpus(data).with_context(|| format!("loading corpus {}", data.display()))?;
    let segments = match split {
        SplitArg::All => sessions,
        s => {
            let sp = split_corpus(cfg, &sessions)?;
            match s {
                SplitArg::Train => sp.train,
                SplitArg::Val => sp.val,
                SplitArg::Test => sp.test,
                SplitArg::Holdout => vec![sp.holdout],
                _ => {
                    let mut v = sp.test;
                    v.push(sp.holdout);
                    v
                }
            }
        }
    };
    let roles: &[Role] = match role {
        RoleArg::A => &[Role::AAvatar],
        RoleArg::B => &[Role::BAvatar],
        RoleArg::Both => &Role::BOTH,
    };
    let w = cfg.data.windowing();
    let seqs: Vec<DyadSequence> = roles.iter().flat_map(|&r| window_role(&segments, r, w)).collect();

    let refs: Vec<(&str, &DyadFlowModel)> = models.iter().map(|(n, m)| (n.as_str(), m)).collect();
    let table = mismatch_table(&refs, &seqs, g.seed.unwrap_or(0))?;
    let mut text = format!("{} sequences of {} frames\n\n{}", seqs.len(), w.length, table.render());
    text.push_str("paired per-frame gaps, all_correct minus mismatched\n");
    for (name, _) in &models {
        for c in &EvalCondition::ALL[1..] {
            if let Some(t) = table.paired_gap(name, EvalCondition::AllCorrect, *c) {
                let t = t?;
                text.push_str(&format!(
                    "{name:<14} {:<16} gap {:>9.4}  t {:>8.3}  p(>0) {:.3e}  p(two-sided) {:.3e}\n",
                    c.tag(),
                    t.mean_diff,
                    t.t,
                    t.p_greater,
                    t.p_two_sided
                ));
            }
        }
    }
    print!("{text}");
    if let Some(prefix) = out_prefix {
        fs::write(with_suffix(prefix, ".txt"), &text)?;
        fs::write(with_suffix(prefix, ".tsv"), table.records())?;
    }
    Ok(())
}

fn gradcheck(g: &GlobalArgs) -> Result<()> {
    let opts = GradCheckOptions { seed: g.seed.unwrap_or(0), ..GradCheckOptions::default() };
    let report = run_gradcheck(&opts)?;
    print!("{}", report.render());
    if !report.passed(GRADCHECK_TOLERANCE) {
        bail!(
            "max relative gradient error {:.3e} exceeds {GRADCHECK_TOLERANCE:e}",
            report.max_rel_err()
        );
    }
    println!("gradcheck passed (tolerance {GRADCHECK_TOLERANCE:e})");
    Ok(())
}
