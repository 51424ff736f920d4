//! Command implementations and the argument parser.
//!
//! Every command writes under a single `--out` directory and prints a short
//! human-readable summary on stdout. Warnings go to stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gesture_core::matcher::{
    build_database, fit_models, initial_state, prepare_motion, query_steps, replace_code, search,
    wrist_above, DbParams, FitSummary, GestureDatabase, Init, MatchQuery, MatchResult, Models,
};
use gesture_core::metrics::{
    average_acceleration, average_jerk, beat_align, cca_first, cca_per_sequence, diversity, fgd_raw,
    gesture_beats, hellinger_average, mean_pose_vectors, mean_spread, uniform_edges, MeanSpread,
    CCA_RIDGE,
};
use gesture_core::motion::{emit_bvh, forward_kinematics, parse_bvh_file, PositionSequence};
use gesture_core::store::{load_database, load_models, save_database, save_models};
use gesture_core::Error;
use serde::Serialize;

use crate::config::EngineConfig;
use crate::corpus::{read_beats, write_synth_corpus, Corpus};
use crate::synth::{generate, SynthSpec};
use crate::{CliError, VERSION};

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Parser)]
#[command(name = "gesture", version, about = "Speech-driven gesture motion matching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// Plain-text `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Seed for every randomized step.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<EngineConfig> {
        let mut o = self.overrides.clone();
        if let Some(s) = self.seed {
            o.push(format!("seed={s}"));
        }
        EngineConfig::load(self.config.as_deref(), &o)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the codebook and phase projection on a directory of BVH files.
    Fit {
        /// Directory with `.bvh` files.
        motion_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Build a searchable database from a corpus and fitted models.
    BuildDb {
        corpus: PathBuf,
        #[arg(long)]
        models: PathBuf,
        /// Session ids to leave out; repeatable.
        #[arg(long)]
        exclude: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Generate gestures for one corpus session's speech.
    Match(MatchArgs),
    /// Compare generated motion with reference motion.
    Metrics(MetricsArgs),
    /// Synthetic corpus, fit, build, match and metrics in one go.
    Demo {
        #[arg(long, default_value = "demo-out")]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Debug, Args, Clone)]
pub struct MatchArgs {
    /// Database directory written by `build-db`.
    pub db: PathBuf,
    /// Corpus holding the query speech.
    #[arg(long)]
    pub query: PathBuf,
    /// Query session id; defaults to the first session.
    #[arg(long)]
    pub session: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// File with one 0/1 per query step; 1 applies the constraint there.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub freq_weight: Option<f64>,
    /// `random` or `frequent`.
    #[arg(long)]
    pub init: Option<String>,
    /// Replace code FROM with TO after search, `FROM:TO`; repeatable.
    #[arg(long, value_name = "FROM:TO")]
    pub replace: Vec<String>,
    /// `wrist-above:R` or `wrist-above:R:JOINT` (default LeftHand).
    #[arg(long)]
    pub constraint: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Debug, Args, Clone)]
pub struct MetricsArgs {
    /// Directory of reference `.bvh` files.
    pub reference: PathBuf,
    /// Directory of generated `.bvh` files.
    pub generated: PathBuf,
    /// Directory with `<stem>.beats.txt` audio beats per generated file.
    #[arg(long)]
    pub beats: Option<PathBuf>,
    /// Compute the beat alignment score; needs `--beats`.
    #[arg(long)]
    pub beat_align: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    run(cli)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { motion_dir, out, cfg } => {
            let s = cmd_fit(&motion_dir, &cfg.load()?, &out)?;
            println!("{}", fit_report(&s));
        }
        Command::BuildDb {
            corpus,
            models,
            exclude,
            out,
            cfg,
        } => {
            let db = cmd_build_db(&corpus, &models, &exclude, &cfg.load()?, &out)?;
            print!("{}", db_report(&db));
        }
        Command::Match(a) => {
            let r = cmd_match(&a)?;
            for w in &r.warnings {
                eprintln!("warning\t{w}");
            }
            println!(
                "{} steps, {} from audio, {} from text -> {}",
                r.codes.len(),
                r.audio_steps,
                r.codes.len() - r.audio_steps,
                a.out.display()
            );
        }
        Command::Metrics(a) => {
            let r = cmd_metrics(&a)?;
            print!("{}", metrics_csv(&r));
        }
        Command::Demo { out, cfg } => cmd_demo(&out, &cfg)?,
    }
    Ok(())
}

fn bvh_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| {
        CliError::Data(Error::Format {
            path: dir.display().to_string(),
            msg: e.to_string(),
        })
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bvh"))
        .collect();
    files.sort();
    Ok(files)
}

fn read_motion(path: &Path) -> Result<gesture_core::motion::MotionSequence> {
    parse_bvh_file(path).map_err(|e| match e {
        Error::Format { .. } => CliError::Data(e),
        other => CliError::Data(Error::Format {
            path: path.display().to_string(),
            msg: other.to_string(),
        }),
    })
}

fn check_fps(path: &Path, fps: f64, expected: f64) -> Result<()> {
    if (fps - expected).abs() > 1e-6 * expected {
        return Err(CliError::Data(Error::Format {
            path: path.display().to_string(),
            msg: format!("fps {fps} differs from the configured {expected}"),
        }));
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn cmd_fit(motion_dir: &Path, cfg: &EngineConfig, out: &Path) -> Result<FitSummary> {
    let files = bvh_files(motion_dir)?;
    if files.is_empty() {
        return Err(CliError::Data(Error::InsufficientData(format!(
            "no .bvh files in {}",
            motion_dir.display()
        ))));
    }
    let mut motions = Vec::with_capacity(files.len());
    for f in &files {
        let m = read_motion(f)?;
        check_fps(f, m.fps, cfg.fps)?;
        motions.push(prepare_motion(&m, &cfg.joints)?);
    }
    let (models, summary) = fit_models(
        &motions,
        &cfg.joints,
        cfg.d,
        cfg.codebook_size,
        cfg.phase_channels,
        cfg.seed,
    )?;
    fs::create_dir_all(out)?;
    save_models(&models, out)?;
    write_json(&out.join("fit.json"), &summary)?;
    Ok(summary)
}

pub fn fit_report(s: &FitSummary) -> String {
    format!(
        "fitted on {} sequences, {} windows: {} Lloyd rounds{}, {} reseeded\nquantization error {:.6} total, {:.6} per window; {} constant features",
        s.sequences,
        s.windows,
        s.iterations,
        if s.converged { "" } else { " (not converged)" },
        s.reseeded,
        s.quantization_error,
        s.mean_error,
        s.clamped_features
    )
}

pub fn db_params(cfg: &EngineConfig, models: &Models, corpus: &Corpus) -> DbParams {
    DbParams {
        fps: cfg.fps,
        d: models.codebook.d,
        window_seconds: cfg.window_seconds,
        n_phase: cfg.n_phase,
        n_stride: cfg.n_stride,
        phase_window: cfg.phase_window,
        channels: models.pca.channels,
        text_dim: corpus.manifest.text_dim,
        token_rate: corpus.manifest.token_rate,
        vocab: corpus.manifest.vocab,
        joints: models.joints.clone(),
    }
}

pub fn cmd_build_db(
    corpus_dir: &Path,
    models_dir: &Path,
    exclude: &[String],
    cfg: &EngineConfig,
    out: &Path,
) -> Result<GestureDatabase> {
    let corpus = Corpus::open(corpus_dir)?;
    let models = load_models(models_dir)?;
    let mut sessions = Vec::new();
    for f in corpus.manifest.sessions.iter().filter(|s| !exclude.contains(&s.id)) {
        let s = corpus.session(f)?;
        check_fps(&corpus.dir.join(&f.motion), s.motion.fps, cfg.fps)?;
        sessions.push(s);
    }
    if sessions.is_empty() {
        return Err(CliError::Data(Error::EmptyDatabase));
    }
    let db = build_database(&sessions, &models, db_params(cfg, &models, &corpus))?;
    if out.exists() {
        fs::remove_dir_all(out.join("clips")).ok();
    }
    save_database(&db, out)?;
    Ok(db)
}

/// Clip and code statistics with the fifteen most frequent codes.
pub fn db_report(db: &GestureDatabase) -> String {
    let mut s = String::new();
    let used = db.code_frequency.iter().filter(|&&c| c > 0).count();
    let _ = writeln!(
        s,
        "{} clips, {} steps, {} of {} codes used",
        db.clips.len(),
        db.steps(),
        used,
        db.code_count()
    );
    let mut order: Vec<usize> = (0..db.code_count()).collect();
    order.sort_by(|&a, &b| db.code_frequency[b].cmp(&db.code_frequency[a]).then(a.cmp(&b)));
    let _ = writeln!(s, "top codes (code: count):");
    for &c in order.iter().take(15).filter(|&&c| db.code_frequency[c] > 0) {
        let _ = writeln!(s, "  {c}: {}", db.code_frequency[c]);
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub session: String,
    pub init: Init,
    pub g_init: usize,
    pub k: usize,
    pub freq_weight: f64,
    pub codes: Vec<usize>,
    pub sources: Vec<String>,
    pub replacements: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub audio_steps: usize,
}

fn parse_replace(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Usage(format!("--replace expects FROM:TO, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn parse_constraint(s: &str) -> Result<(f64, String)> {
    let bad = || CliError::Usage(format!("--constraint expects wrist-above:R[:JOINT], got {s:?}"));
    let mut parts = s.split(':');
    if parts.next() != Some("wrist-above") {
        return Err(bad());
    }
    let r: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if !r.is_finite() {
        return Err(bad());
    }
    let joint = parts.next().unwrap_or("LeftHand").to_string();
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((r, joint))
}

fn read_mask(path: &Path) -> Result<Vec<bool>> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Data(Error::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    })?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| match l {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(CliError::Data(Error::Format {
                path: path.display().to_string(),
                msg: format!("entry {}: expected 0 or 1, got {l:?}", i + 1),
            })),
        })
        .collect()
}

/// Runs the search and writes `codes.txt`, `trace.csv`, `motion.bvh` and
/// `result.json` under `args.out`.
pub fn cmd_match(args: &MatchArgs) -> Result<MatchReport> {
    let mut cfg = args.cfg.load()?;
    if let Some(k) = args.k {
        cfg.set("k", &k.to_string())?;
    }
    if let Some(w) = args.freq_weight {
        cfg.set("freq_weight", &w.to_string())?;
    }
    if let Some(i) = &args.init {
        cfg.set("init", i)?;
    }
    cfg.validate()?;
    let replacements = args
        .replace
        .iter()
        .map(|s| parse_replace(s))
        .collect::<Result<Vec<_>>>()?;
    let constraint = args.constraint.as_deref().map(parse_constraint).transpose()?;

    let db = load_database(&args.db)?;
    let corpus = Corpus::open(&args.query)?;
    let files = match &args.session {
        Some(id) => corpus.find(id)?,
        None => &corpus.manifest.sessions[0],
    };
    let audio = corpus.tokens(files)?;
    let text = corpus.text(files)?;
    if (audio.rate - db.params.token_rate).abs() > 1e-9 * db.params.token_rate {
        return Err(CliError::Data(Error::Format {
            path: corpus.dir.join(&files.tokens).display().to_string(),
            msg: format!(
                "token rate {} differs from the database's {}",
                audio.rate, db.params.token_rate
            ),
        }));
    }
    let steps = query_steps(&audio, db.params.fps, db.params.d);
    let (g_init, phase_init) = initial_state(&db, cfg.init, cfg.seed)?;

    let mut q = MatchQuery::new(audio, text, steps, g_init, phase_init);
    q.k = cfg.k;
    q.freq_weight = cfg.freq_weight;
    if let Some((r, joint)) = &constraint {
        q.code_mask = Some(wrist_above(&db.codebook, joint, *r)?);
    }
    if let Some(p) = &args.mask {
        let m = read_mask(p)?;
        if m.len() != steps {
            return Err(CliError::Data(Error::Format {
                path: p.display().to_string(),
                msg: format!("mask has {} entries, query has {steps} steps", m.len()),
            }));
        }
        if q.code_mask.is_none() {
            return Err(CliError::Usage("--mask needs --constraint".into()));
        }
        q.masks = Some(m);
    }

    let mut result = search(&db, &q)?;
    let mut warnings = Vec::new();
    for (from, to) in replacements {
        let absent = !result.codes.contains(&from);
        result = replace_code(&result, from, to, &db.codebook)?;
        if absent {
            warnings.push(format!("code {from} does not occur in the result; nothing replaced"));
        }
    }

    fs::create_dir_all(&args.out)?;
    let codes: String = result.codes.iter().map(|c| format!("{c}\n")).collect();
    fs::write(args.out.join("codes.txt"), codes)?;
    fs::write(args.out.join("trace.csv"), trace_csv(&db, &result))?;
    fs::write(args.out.join("motion.bvh"), emit_bvh(&result.decoded))?;
    let report = MatchReport {
        version: VERSION.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        session: files.id.clone(),
        init: cfg.init,
        g_init,
        k: cfg.k,
        freq_weight: cfg.freq_weight,
        codes: result.codes.clone(),
        sources: result.sources.iter().map(|s| s.as_str().to_string()).collect(),
        replacements: result.replacements.clone(),
        warnings,
        audio_steps: result
            .sources
            .iter()
            .filter(|s| s.as_str() == "audio")
            .count(),
    };
    write_json(&args.out.join("result.json"), &report)?;
    Ok(report)
}

/// One row per step: the chosen source and code, both candidates, and the
/// pose/audio/text ranks of the chosen code.
pub fn trace_csv(db: &GestureDatabase, r: &MatchResult) -> String {
    let mut s = String::from(
        "step,prev_code,source,code,clip,clip_step,audio_code,audio_fused,audio_continuity,\
         text_code,text_fused,text_continuity,r_pose,r_audio,r_text\n",
    );
    for (t, code) in r.traces.iter().zip(&r.codes) {
        let c = t.chosen();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.step,
            t.prev_code,
            t.source.as_str(),
            code,
            db.clips[c.occurrence.clip].clip_id,
            c.occurrence.step,
            t.audio.code,
            t.audio.fused,
            t.audio.continuity,
            t.text.code,
            t.text.fused,
            t.text.continuity,
            t.r_c[c.code],
            t.r_a[c.code],
            t.r_t[c.code],
        );
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub reference_files: usize,
    pub generated_files: usize,
    pub paired_files: usize,
    pub hellinger_average: f64,
    pub fgd_raw: f64,
    /// Feature-space FGD needs a trained feature extractor.
    pub fgd_feature: &'static str,
    pub cca_global: Option<f64>,
    pub cca_per_sequence: Option<f64>,
    pub jerk_generated: MeanSpread,
    pub acceleration_generated: MeanSpread,
    pub jerk_reference: MeanSpread,
    pub acceleration_reference: MeanSpread,
    pub diversity: Option<f64>,
    pub beat_align: Option<f64>,
    pub beat_align_no_gesture_beats: Option<usize>,
}

fn load_positions(dir: &Path, cfg: &EngineConfig) -> Result<BTreeMap<String, PositionSequence>> {
    let mut out = BTreeMap::new();
    for f in bvh_files(dir)? {
        let m = prepare_motion(&read_motion(&f)?, &cfg.joints)?;
        let p = forward_kinematics(&m.skeleton, &m)?;
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.insert(stem, p);
    }
    if out.is_empty() {
        return Err(CliError::Data(Error::InsufficientData(format!(
            "no .bvh files in {}",
            dir.display()
        ))));
    }
    Ok(out)
}

fn pooled(seqs: &[&PositionSequence]) -> Vec<f64> {
    seqs.iter().flat_map(|p| p.positions.iter().copied()).collect()
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<MetricsReport> {
    let cfg = args.cfg.load()?;
    if args.beat_align && args.beats.is_none() {
        return Err(CliError::Usage("--beat-align needs --beats DIR".into()));
    }
    let reference = load_positions(&args.reference, &cfg)?;
    let generated = load_positions(&args.generated, &cfg)?;
    let refs: Vec<&PositionSequence> = reference.values().collect();
    let gens: Vec<&PositionSequence> = generated.values().collect();
    let dim = refs[0].joints * 3;

    let edges = uniform_edges(cfg.hist_bin_width, cfg.hist_max)?;
    let ref_owned: Vec<PositionSequence> = refs.iter().map(|&p| p.clone()).collect();
    let gen_owned: Vec<PositionSequence> = gens.iter().map(|&p| p.clone()).collect();
    let hellinger = hellinger_average(&ref_owned, &gen_owned, &edges)?;
    let fgd = fgd_raw(&pooled(&refs), &pooled(&gens), dim)?;

    // Frame-aligned pairs by file stem, truncated to the shorter sequence.
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for (stem, g) in &generated {
        if let Some(r) = reference.get(stem) {
            let n = r.frames().min(g.frames()) * dim;
            pairs.push((r.positions[..n].to_vec(), g.positions[..n].to_vec()));
        }
    }
    let (cca_global, cca_seq) = if pairs.is_empty() {
        (None, None)
    } else {
        let x: Vec<f64> = pairs.iter().flat_map(|p| p.0.iter().copied()).collect();
        let y: Vec<f64> = pairs.iter().flat_map(|p| p.1.iter().copied()).collect();
        let views: Vec<(&[f64], &[f64])> = pairs.iter().map(|p| (&p.0[..], &p.1[..])).collect();
        (
            Some(cca_first(&x, dim, &y, dim, CCA_RIDGE)?),
            Some(cca_per_sequence(&views, dim, dim, CCA_RIDGE)?),
        )
    };

    let spread = |seqs: &[&PositionSequence], f: fn(&PositionSequence) -> gesture_core::Result<f64>| {
        let v = seqs.iter().map(|p| f(p)).collect::<gesture_core::Result<Vec<f64>>>()?;
        mean_spread(&v)
    };
    let div = if gens.len() >= 2 {
        Some(diversity(
            &mean_pose_vectors(&gen_owned),
            dim,
            cfg.diversity_pairs,
            cfg.seed,
        )?)
    } else {
        None
    };

    let (ba, flagged) = if args.beat_align {
        let dir = args.beats.as_deref().unwrap_or(Path::new("."));
        let mut total = 0.0;
        let mut flagged = 0;
        for (stem, g) in &generated {
            let path = dir.join(format!("{stem}.beats.txt"));
            if !path.is_file() {
                return Err(CliError::Data(Error::Format {
                    path: path.display().to_string(),
                    msg: "beats file not found".into(),
                }));
            }
            let b = beat_align(&read_beats(&path)?, &gesture_beats(g)?, cfg.beat_sigma)?;
            total += b.score;
            flagged += b.no_gesture_beats as usize;
        }
        (Some(total / generated.len() as f64), Some(flagged))
    } else {
        (None, None)
    };

    let report = MetricsReport {
        version: VERSION.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        reference_files: refs.len(),
        generated_files: gens.len(),
        paired_files: pairs.len(),
        hellinger_average: hellinger,
        fgd_raw: fgd,
        fgd_feature: "unavailable",
        cca_global,
        cca_per_sequence: cca_seq,
        jerk_generated: spread(&gens, average_jerk)?,
        acceleration_generated: spread(&gens, average_acceleration)?,
        jerk_reference: spread(&refs, average_jerk)?,
        acceleration_reference: spread(&refs, average_acceleration)?,
        diversity: div,
        beat_align: ba,
        beat_align_no_gesture_beats: flagged,
    };
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("metrics.json"), &report)?;
    fs::write(args.out.join("metrics.csv"), metrics_csv(&report))?;
    Ok(report)
}

/// `metric,value` table; unavailable values are written as `NA`.
pub fn metrics_csv(r: &MetricsReport) -> String {
    let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
    let rows: Vec<(&str, String)> = vec![
        ("version", r.version.clone()),
        ("config_hash", r.config_hash.clone()),
        ("seed", r.seed.to_string()),
        ("hellinger_average", r.hellinger_average.to_string()),
        ("fgd_raw", r.fgd_raw.to_string()),
        ("fgd_feature", r.fgd_feature.to_string()),
        ("cca_global", opt(r.cca_global)),
        ("cca_per_sequence", opt(r.cca_per_sequence)),
        ("jerk_mean", r.jerk_generated.mean.to_string()),
        ("jerk_std", r.jerk_generated.std.to_string()),
        ("acceleration_mean", r.acceleration_generated.mean.to_string()),
        ("acceleration_std", r.acceleration_generated.std.to_string()),
        ("reference_jerk_mean", r.jerk_reference.mean.to_string()),
        ("reference_acceleration_mean", r.acceleration_reference.mean.to_string()),
        ("diversity", opt(r.diversity)),
        ("beat_align", opt(r.beat_align)),
    ];
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

/// Synthetic corpus under `out/corpus`, models, a database without the last
/// session, a match on that session's speech and metrics against it.
pub fn cmd_demo(out: &Path, cargs: &ConfigArgs) -> Result<()> {
    let cfg = cargs.load()?;
    let spec = SynthSpec {
        fps: cfg.fps,
        d: cfg.d,
        seed: cfg.seed,
        ..SynthSpec::default()
    };
    let corpus_dir = out.join("corpus");
    let sessions = generate(&spec);
    write_synth_corpus(
        &corpus_dir,
        &sessions,
        spec.token_rate,
        spec.text_dim,
        spec.fps / spec.d as f64,
    )?;
    println!("wrote {} synthetic sessions to {}", sessions.len(), corpus_dir.display());

    let summary = cmd_fit(&corpus_dir, &cfg, &out.join("models"))?;
    println!("{}", fit_report(&summary));

    let held_out = sessions.last().map(|s| s.id.clone()).unwrap_or_default();
    let db = cmd_build_db(
        &corpus_dir,
        &out.join("models"),
        std::slice::from_ref(&held_out),
        &cfg,
        &out.join("db"),
    )?;
    print!("{}", db_report(&db));

    let m = MatchArgs {
        db: out.join("db"),
        query: corpus_dir.clone(),
        session: Some(held_out.clone()),
        k: None,
        mask: None,
        freq_weight: None,
        init: None,
        replace: Vec::new(),
        constraint: None,
        out: out.join("match"),
        cfg: cargs.clone(),
    };
    let r = cmd_match(&m)?;
    println!("matched {} steps for session {held_out}", r.codes.len());

    let gen_dir = out.join("generated");
    let ref_dir = out.join("reference");
    fs::create_dir_all(&gen_dir)?;
    fs::create_dir_all(&ref_dir)?;
    fs::copy(out.join("match/motion.bvh"), gen_dir.join(format!("{held_out}.bvh")))?;
    fs::copy(
        corpus_dir.join(format!("{held_out}.bvh")),
        ref_dir.join(format!("{held_out}.bvh")),
    )?;
    let metrics = cmd_metrics(&MetricsArgs {
        reference: ref_dir,
        generated: gen_dir,
        beats: Some(corpus_dir),
        beat_align: true,
        out: out.join("metrics"),
        cfg: cargs.clone(),
    })?;
    print!("{}", metrics_csv(&metrics));
    Ok(())
}
