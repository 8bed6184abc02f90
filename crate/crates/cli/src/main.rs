mod workspace;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use chewseg::boost::{train, TrainedModel};
use chewseg::config::{parse_sensors, Config};
use chewseg::data::{
    derive_episode_labels, parse_label_csv, parse_sensor_csv, participant_from_path, write_label_csv, write_sensor_csv,
    GapCdf, LabeledInterval, SessionMeta,
};
use chewseg::episodes::{cluster, covered_seconds, episodes_from_clusters, episodes_from_csv, episodes_to_csv, score_seconds};
use chewseg::eval::{ablate_sensors, losocv, score_participant, EvalReport, REPORT_HEADER};
use chewseg::features::{extract_all, rank_features, FeatureLayout, FeatureMatrix, FeatureRow};
use chewseg::peaks::{find_prominent_peaks, peaks_from_csv, peaks_to_csv};
use chewseg::periodic::{candidates_from_csv, candidates_to_csv, segment};
use chewseg::pipeline::{
    chew_coverage, extract_config, from_decisions, predictions_from_csv, predictions_to_csv, scores_to_csv, PreparedSession,
};
use chewseg::signals::{derive, DerivedTrace, Signal};
use chewseg::synth::{generate, NoiseSpec, ScenarioSpec};

use workspace::{SessionFile, Workspace};

#[derive(Parser)]
#[command(name = "chewseg", version, about = "Chewing-sequence and eating-episode detection pipeline")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory shared by all stages.
    #[arg(long, global = true, default_value = "chewseg-out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated participant ids to process.
    #[arg(long, global = true, value_delimiter = ',')]
    participants: Vec<String>,
    /// Comma-separated sensors: prox, ambient, lfa, energy.
    #[arg(long, global = true)]
    sensors: Option<String>,
    /// Classification probability threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Episode merge gap in seconds.
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Clean,
    Medium,
}

#[derive(Subcommand)]
enum Command {
    /// Validate sensor CSVs (and optionally a label CSV) into the workspace.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Compute proximity, ambient, lean-forward angle and energy traces.
    Derive,
    /// Detect prominent proximity peaks.
    Peaks,
    /// Find periodic candidate subsequences among the peaks.
    Segment,
    /// Extract the feature matrix for every candidate.
    Featurize,
    /// Train the chewing classifier on the labeled feature matrices.
    Train,
    /// Classify candidates with the trained model.
    Predict,
    /// Score seconds and cluster them into eating episodes.
    Episodes,
    /// Score predictions against the labels.
    Evaluate,
    /// Leave-one-subject-out cross-validation.
    Losocv,
    /// Compare all sensors against the `--sensors` subset (default prox).
    Ablate,
    /// Cumulative distribution of gaps between labeled chewing sequences.
    GapCdf {
        /// Report the gap mass and episode stability inside `LO,HI`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        plateau: Vec<f64>,
    },
    /// Generate synthetic sensor and label files.
    Synth {
        /// Scenario files; when absent, `--count` preset scenarios are used.
        #[arg(long)]
        scenario: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Noise::Clean)]
        noise: Noise,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Derive => "derive",
            Command::Peaks => "peaks",
            Command::Segment => "segment",
            Command::Featurize => "featurize",
            Command::Train => "train",
            Command::Predict => "predict",
            Command::Episodes => "episodes",
            Command::Evaluate => "evaluate",
            Command::Losocv => "losocv",
            Command::Ablate => "ablate",
            Command::GapCdf { .. } => "gap-cdf",
            Command::Synth { .. } => "synth",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            Config::parse(&text).with_context(|| format!("in config {}", p.display()))?
        }
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = &cli.sensors {
        cfg.sensors = parse_sensors(s)?;
    }
    if let Some(t) = cli.threshold {
        cfg.threshold = t;
    }
    if let Some(d) = cli.delta {
        cfg.delta = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let mut ws = Workspace::open(&cli.out, cli.command.name(), &cfg, &cli.participants)?;
    if let Some(p) = &cli.config {
        ws.note_input("config", &fs::read(p)?);
    }
    match &cli.command {
        Command::Ingest { inputs, labels } => ingest(&mut ws, &cfg, inputs, labels.as_deref())?,
        Command::Derive => derive_cmd(&mut ws, &cfg)?,
        Command::Peaks => peaks_cmd(&mut ws, &cfg)?,
        Command::Segment => segment_cmd(&mut ws, &cfg)?,
        Command::Featurize => featurize(&mut ws, &cfg)?,
        Command::Train => train_cmd(&mut ws, &cfg)?,
        Command::Predict => predict(&mut ws, &cfg)?,
        Command::Episodes => episodes_cmd(&mut ws, &cfg)?,
        Command::Evaluate => evaluate(&mut ws, &cfg)?,
        Command::Losocv => losocv_cmd(&mut ws, &cfg)?,
        Command::Ablate => ablate(&mut ws, &cfg, cli.sensors.as_deref())?,
        Command::GapCdf { plateau } => gap_cdf(&mut ws, &cfg, plateau)?,
        Command::Synth { scenario, count, noise } => synth(&mut ws, &cfg, scenario, *count, *noise)?,
    }
    ws.finish()
}

fn session_meta(participant: &str, cfg: &Config) -> SessionMeta {
    SessionMeta { participant: participant.to_string(), utc_offset_s: cfg.utc_offset_s, ..Default::default() }
}

fn session_id(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("session");
    name.strip_suffix(".csv").unwrap_or(name).to_string()
}

fn ingest(ws: &mut Workspace, cfg: &Config, inputs: &[PathBuf], labels: Option<&Path>) -> Result<()> {
    let mut spans: Vec<(String, f64, f64)> = Vec::new();
    let mut report = String::from("session,frames,gaps,max_gap_s,rejected_rows\n");
    for path in inputs {
        let participant = participant_from_path(path);
        if !ws.keeps(&participant) {
            continue;
        }
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        ws.note_input(&format!("sensors/{}", file_label(path)), &bytes);
        let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
        let session = parse_sensor_csv(&text, session_meta(&participant, cfg)).with_context(|| format!("in {}", path.display()))?;
        let id = session_id(path);
        let g = session.gaps;
        report.push_str(&format!("{id},{},{},{},{}\n", session.frames.len(), g.count, g.max_gap_s, g.rejected_rows));
        if let Some((a, b)) = session.span() {
            spans.push((participant.clone(), a, b));
        }
        ws.write_session("ingest", &id, &write_sensor_csv(&session.frames))?;
        println!("{id}: {} frames, {} gaps (max {:.3} s), {} rows rejected", session.frames.len(), g.count, g.max_gap_s, g.rejected_rows);
    }
    if spans.is_empty() {
        bail!("no sensor files left to ingest");
    }
    ws.write("ingest_report.csv", &report)?;
    if let Some(path) = labels {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        ws.note_input(&format!("labels/{}", file_label(path)), &bytes);
        let all = parse_label_csv(&String::from_utf8(bytes)?).with_context(|| format!("in {}", path.display()))?;
        let kept: Vec<LabeledInterval> = all.into_iter().filter(|l| ws.keeps(&l.participant)).collect();
        for l in &kept {
            if !spans.iter().any(|(p, a, b)| *p == l.participant && l.start >= *a && l.end <= *b) {
                bail!("label {}..{} of {} lies outside every ingested session", l.start, l.end, l.participant);
            }
        }
        ws.write("labels.csv", &write_label_csv(&kept))?;
        println!("{} labels", kept.len());
    }
    Ok(())
}

fn derive_cmd(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    for f in ws.sessions("ingest", "ingest")? {
        let text = ws.read_session("ingest", &f)?;
        let session = parse_sensor_csv(&text, session_meta(&f.participant, cfg))?;
        ws.write_session("derived", &f.session, &derive(&session)?.to_csv())?;
    }
    Ok(())
}

fn read_trace(ws: &mut Workspace, f: &SessionFile) -> Result<DerivedTrace> {
    let text = ws.read_companion("derived", &f.session, "derive")?;
    Ok(DerivedTrace::from_csv(&text)?)
}

fn peaks_cmd(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    for f in ws.sessions("derived", "derive")? {
        let trace = DerivedTrace::from_csv(&ws.read_session("derived", &f)?)?;
        let peaks = find_prominent_peaks(&trace.prox, &trace.t, cfg.min_prominence)?;
        println!("{}: {} peaks", f.session, peaks.len());
        ws.write_session("peaks", &f.session, &peaks_to_csv(&peaks))?;
    }
    Ok(())
}

fn segment_cmd(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    for f in ws.sessions("peaks", "peaks")? {
        let peaks = peaks_from_csv(&ws.read_session("peaks", &f)?)?;
        let cands = segment(&peaks, &cfg.sweep, cfg.min_len)?;
        println!("{}: {} candidates", f.session, cands.len());
        ws.write_session("candidates", &f.session, &candidates_to_csv(&cands))?;
    }
    Ok(())
}

fn read_labels(ws: &mut Workspace) -> Result<Vec<LabeledInterval>> {
    Ok(parse_label_csv(&ws.read("labels.csv", "ingest --labels")?)?)
}

/// Chewing labels of `participant` inside `[a, b]`.
fn chews_within(labels: &[LabeledInterval], participant: &str, span: Option<(f64, f64)>) -> Vec<LabeledInterval> {
    labels
        .iter()
        .filter(|l| l.participant == participant && l.kind == chewseg::data::IntervalKind::ChewingSequence)
        .filter(|l| span.is_none_or(|(a, b)| l.start >= a && l.end <= b))
        .cloned()
        .collect()
}

fn featurize(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    let labels = if ws.exists("labels.csv") { Some(read_labels(ws)?) } else { None };
    let layout = FeatureLayout::full();
    for f in ws.sessions("candidates", "segment")? {
        let cands = candidates_from_csv(&ws.read_session("candidates", &f)?)?;
        let trace = read_trace(ws, &f)?;
        let span = trace.t.first().zip(trace.t.last()).map(|(a, b)| (*a, *b));
        let chews = labels.as_ref().map(|l| chews_within(l, &f.participant, span));
        let fvs = extract_all(&trace, &cands, &extract_config(cfg, layout.clone(), cfg.utc_offset_s))?;
        let mut m = FeatureMatrix::new(layout.clone());
        for (c, fv) in cands.iter().zip(fvs) {
            let label = chews.as_ref().map(|ch| chew_coverage(c.c1, c.c2, ch) >= cfg.label_overlap);
            m.rows.push(FeatureRow { values: fv.values, c1: c.c1, c2: c.c2, participant: f.participant.clone(), label });
        }
        ws.write_session("features", &f.session, &m.to_csv())?;
    }
    Ok(())
}

fn read_features(ws: &mut Workspace, f: &SessionFile) -> Result<FeatureMatrix> {
    Ok(FeatureMatrix::from_csv(&ws.read_session("features", f)?).with_context(|| format!("in {}", f.path.display()))?)
}

fn train_cmd(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    let layout = cfg.layout()?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for f in ws.sessions("features", "featurize")? {
        let m = read_features(ws, &f)?.project(&layout)?;
        for (i, r) in m.rows.into_iter().enumerate() {
            let Some(label) = r.label else {
                bail!("{} row {} has no label: run `chewseg ingest --labels` then `chewseg featurize`", f.session, i + 1)
            };
            x.push(r.values);
            y.push(label);
        }
    }
    let model = train(&x, &y, &cfg.boosting(), &layout.fingerprint())?;
    ws.write("model.txt", &model.to_text())?;
    let mut ranking = String::from("feature,splits\n");
    for (name, n) in rank_features(&model, &layout)? {
        ranking.push_str(&format!("{name},{n}\n"));
    }
    ws.write("ranking.csv", &ranking)?;
    println!("trained {} trees on {} rows ({} positive)", model.trees.len(), y.len(), y.iter().filter(|&&l| l).count());
    Ok(())
}

fn predict(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    let model = TrainedModel::from_text(&ws.read("model.txt", "train")?)?;
    let layout = cfg.layout()?;
    if model.fingerprint != layout.fingerprint() {
        bail!("model was trained on a different sensor set: retrain with the same --sensors");
    }
    for f in ws.sessions("features", "featurize")? {
        let m = read_features(ws, &f)?.project(&layout)?;
        let probs = m.rows.iter().map(|r| model.predict_proba_values(&r.values)).collect::<chewseg::Result<Vec<_>>>()?;
        let positive = probs.iter().map(|&p| p >= cfg.threshold).collect();
        let cands: Vec<_> = m
            .rows
            .iter()
            .map(|r| chewseg::Candidate { c1: r.c1, c2: r.c2, p_min: 0.0, p_max: 0.0, epsilon: 0.0, length: 0, timestamps: vec![] })
            .collect();
        let pred = from_decisions(&cands, probs, positive);
        println!("{}: {} of {} candidates positive", f.session, pred.positive.iter().filter(|&&p| p).count(), cands.len());
        ws.write_session("predictions", &f.session, &predictions_to_csv(&cands, &pred))?;
    }
    Ok(())
}

fn episodes_cmd(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    let mut rows = Vec::new();
    for f in ws.sessions("predictions", "predict")? {
        let preds = predictions_from_csv(&ws.read_session("predictions", &f)?)?;
        let scores = score_seconds(preds.iter().filter(|p| p.3).map(|p| (p.0, p.1)));
        ws.write_session("scores", &f.session, &scores_to_csv(&scores))?;
        for e in episodes_from_clusters(&cluster(&scores, &cfg.dbscan)?, cfg.delta) {
            rows.push((f.participant.clone(), e));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.start.total_cmp(&b.1.start)));
    println!("{} episodes", rows.len());
    ws.write("episodes.csv", &episodes_to_csv(&rows))
}

fn evaluate(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    let mut seconds: BTreeMap<String, (BTreeSet<i64>, usize)> = BTreeMap::new();
    for f in ws.sessions("predictions", "predict")? {
        let preds = predictions_from_csv(&ws.read_session("predictions", &f)?)?;
        let entry = seconds.entry(f.participant.clone()).or_default();
        entry.0.extend(preds.iter().filter(|p| p.3).flat_map(|p| covered_seconds(p.0, p.1)));
        entry.1 += preds.len();
    }
    let episodes = episodes_from_csv(&ws.read("episodes.csv", "episodes")?)?;
    let labels = read_labels(ws)?;
    let mut results = Vec::new();
    for (who, (secs, n)) in &seconds {
        let eps: Vec<(f64, f64)> = episodes.iter().filter(|e| &e.0 == who).map(|e| (e.1.start, e.1.end)).collect();
        results.push(score_participant(who, secs, &eps, &chews_within(&labels, who, None), *n, cfg)?);
    }
    write_report(ws, "report", &EvalReport::new(results, ws.manifest().clone()))
}

fn write_report(ws: &Workspace, stem: &str, report: &EvalReport) -> Result<()> {
    ws.write(&format!("{stem}.csv"), &report.to_csv())?;
    ws.write(&format!("{stem}.txt"), &report.to_table())?;
    print!("{}", report.to_table());
    Ok(())
}

fn prepared_sessions(ws: &mut Workspace) -> Result<Vec<PreparedSession>> {
    let labels = read_labels(ws)?;
    let mut out = Vec::new();
    for f in ws.sessions("features", "featurize")? {
        let m = read_features(ws, &f)?;
        let span = m.rows.iter().fold(None, |acc: Option<(f64, f64)>, r| {
            Some(acc.map_or((r.c1, r.c2), |(a, b)| (a.min(r.c1), b.max(r.c2))))
        });
        let trace = read_trace(ws, &f).ok();
        let span = trace.and_then(|t| t.t.first().zip(t.t.last()).map(|(a, b)| (*a, *b))).or(span);
        let chews = chews_within(&labels, &f.participant, span);
        out.push(PreparedSession::from_matrix(&f.participant, &m, chews).with_context(|| format!("in {}", f.path.display()))?);
    }
    Ok(out)
}

fn losocv_cmd(ws: &mut Workspace, cfg: &Config) -> Result<()> {
    let sessions = prepared_sessions(ws)?;
    let report = losocv(&sessions, cfg)?;
    write_report(ws, "losocv", &EvalReport::new(report.participants, ws.manifest().clone()))
}

fn ablate(ws: &mut Workspace, cfg: &Config, sensors: Option<&str>) -> Result<()> {
    let subset = parse_sensors(sensors.unwrap_or("prox"))?;
    let sessions = prepared_sessions(ws)?;
    let all = Config { sensors: Signal::ALL.to_vec(), ..cfg.clone() };
    let full = losocv(&sessions, &all)?;
    let part = ablate_sensors(&sessions, &subset, cfg)?;
    let name = |s: &[Signal]| s.iter().map(|x| x.name()).collect::<Vec<_>>().join("+");
    let mut csv = format!("sensors,{REPORT_HEADER}\n");
    let mut txt = String::new();
    for (set, r) in [(Signal::ALL.to_vec(), &full), (subset, &part)] {
        for line in r.to_csv().lines().skip(1) {
            csv.push_str(&format!("{},{line}\n", name(&set)));
        }
        let fingerprint = FeatureLayout::with_signals(&set)?.fingerprint();
        txt.push_str(&format!("sensors {} (layout {fingerprint})\n{}\n", name(&set), r.to_table()));
    }
    ws.write("ablation.csv", &csv)?;
    ws.write("ablation.txt", &txt)?;
    print!("{txt}");
    Ok(())
}

fn gap_cdf(ws: &mut Workspace, cfg: &Config, plateau: &[f64]) -> Result<()> {
    let labels = read_labels(ws)?;
    let mut by_participant: BTreeMap<&str, Vec<LabeledInterval>> = BTreeMap::new();
    for l in labels.iter().filter(|l| l.kind == chewseg::data::IntervalKind::ChewingSequence) {
        by_participant.entry(&l.participant).or_default().push(l.clone());
    }
    let mut gaps = Vec::new();
    for chews in by_participant.values_mut() {
        chews.sort_by(|a, b| a.start.total_cmp(&b.start));
        gaps.extend(chews.windows(2).map(|w| w[1].start - w[0].end));
    }
    let cdf = GapCdf::from_gaps(gaps).context("need at least two chewing sequences for one participant")?;
    ws.write("gap_cdf.csv", &cdf.to_csv())?;
    println!("{} gaps", cdf.gaps().len());
    if let [lo, hi] = *plateau {
        let inside = cdf.gaps().iter().filter(|&&g| g >= lo && g < hi).count();
        let episodes = |d: f64| -> Result<usize> {
            by_participant.values().map(|c| Ok(derive_episode_labels(c, d)?.len())).sum()
        };
        println!("gaps in [{lo}, {hi}): {inside}; episodes at delta {lo}: {}, at delta {}: {}", episodes(lo)?, cfg.delta, episodes(cfg.delta)?);
    }
    Ok(())
}

/// Inputs are recorded by file name so manifests do not depend on location.
fn file_label(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn synth(ws: &mut Workspace, cfg: &Config, scenarios: &[PathBuf], count: usize, noise: Noise) -> Result<()> {
    let mut specs = Vec::new();
    for p in scenarios {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        ws.note_input(&format!("scenario/{}", file_label(p)), text.as_bytes());
        specs.push(ScenarioSpec::parse(&text).with_context(|| format!("in {}", p.display()))?);
    }
    if scenarios.is_empty() {
        let n = match noise {
            Noise::Clean => NoiseSpec::default(),
            Noise::Medium => NoiseSpec::medium(),
        };
        specs.extend((0..count).map(|i| ScenarioSpec::three_meals(format!("p{:02}", i + 1), cfg.seed + i as u64, n)));
    }
    specs.retain(|s| ws.keeps(&s.participant));
    let mut labels = Vec::new();
    for spec in &specs {
        let (session, truth) = generate(spec)?;
        ws.write(&format!("synth/sensors/{}.csv", spec.participant), &write_sensor_csv(&session.frames))?;
        ws.write(&format!("synth/scenarios/{}.txt", spec.participant), &spec.to_text())?;
        println!("{}: {} frames, {} chewing sequences", spec.participant, session.frames.len(), truth.len());
        labels.extend(truth);
    }
    ws.write("synth/labels.csv", &write_label_csv(&labels))
}
