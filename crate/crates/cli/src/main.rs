//! `flowguard` — command-line front end wiring trace ingestion, the
//! synthetic generator, feature extraction, the KNN classifier, the
//! evaluation harness, and the quarantine simulator into reproducible
//! experiments.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use flowguard_core::eval::{
    benchmark_latency, evaluate_interval, report_table, report_to_csv, sweep_intervals,
    sweep_to_csv,
};
use flowguard_core::features::{
    extract, read_dataset, write_dataset, LabeledSample, TrafficClass,
};
use flowguard_core::flow::{bucket_direct, stats_to_csv, PollingConfig};
use flowguard_core::importance::{importance_to_csv, permutation_importance};
use flowguard_core::knn::KnnModel;
use flowguard_core::minimize::{minimize, size_curve_to_csv};
use flowguard_core::seeds;
use flowguard_core::sim::{events_to_jsonl, run_simulation, summarize, ControllerConfig};
use flowguard_core::synth::{
    default_profiles, generate_attack, generate_benign, AttackSpec, DeviceProfile, FloodKind,
};
use flowguard_core::trace::{read_csv, read_pcap, write_csv, AttributionRule, Trace};

use manifest::{write_atomic, RunManifest};

#[derive(Parser)]
#[command(
    name = "flowguard",
    version,
    about = "Flow-feature extraction, KNN traffic classification, and SDN quarantine simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic benign or flood traces
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Convert a classic pcap capture to the canonical trace CSV
    Ingest(IngestArgs),
    /// Bucket traces into polling windows and emit the feature dataset
    Features(FeaturesArgs),
    /// Fit a KNN model from a feature dataset
    Train(TrainArgs),
    /// Classify feature vectors with a trained model
    Classify(ClassifyArgs),
    /// Balance, split, train, and score at one polling interval
    Eval(EvalArgs),
    /// Run the evaluation across several polling intervals
    Sweep(SweepArgs),
    /// Shrink a training set while holding test accuracy
    Minimize(MinimizeArgs),
    /// Permutation feature importance for a trained pipeline
    Importance(ImportanceArgs),
    /// Simulate the two-phase VLAN quarantine controller
    Simulate(SimulateArgs),
    /// Measure single-prediction latency of a model
    Bench(BenchArgs),
}

fn parse_category(s: &str) -> std::result::Result<TrafficClass, String> {
    match TrafficClass::from_str(s) {
        Ok(c) if c.is_benign() => Ok(c),
        _ => Err(format!(
            "`{s}` is not a benign category (expected switch_trigger, camera, or hub)"
        )),
    }
}

fn parse_kind(s: &str) -> std::result::Result<FloodKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "icmp" => Ok(FloodKind::Icmp),
        "syn" | "tcp_syn" | "tcp-syn" => Ok(FloodKind::TcpSyn),
        "udp" => Ok(FloodKind::Udp),
        _ => Err(format!("`{s}` is not a flood kind (expected icmp, syn, or udp)")),
    }
}

#[derive(Subcommand)]
enum SynthCommand {
    /// One benign device trace
    Benign(SynthBenignArgs),
    /// One flood trace
    Attack(SynthAttackArgs),
    /// A full labeled corpus: benign devices plus floods
    Corpus(SynthCorpusArgs),
}

#[derive(Args)]
struct ProfileOverrides {
    /// Override mean packets per 24 s window
    #[arg(long)]
    packets_per_window: Option<f64>,
    /// Override mean packets per arrival clump
    #[arg(long)]
    clump: Option<f64>,
    /// Override mean packet size in bytes
    #[arg(long)]
    mean_size: Option<f64>,
    /// Override packet size standard deviation
    #[arg(long)]
    size_std: Option<f64>,
    /// Override minimum packet size
    #[arg(long)]
    min_size: Option<u32>,
    /// Override destination peer pool size
    #[arg(long)]
    peers: Option<usize>,
    /// Override peer concentration in (0, 1]
    #[arg(long)]
    peer_concentration: Option<f64>,
    /// Override mean burst on-time in seconds
    #[arg(long)]
    burst_on: Option<f64>,
    /// Override mean burst off-time in seconds (0 = continuous)
    #[arg(long)]
    burst_off: Option<f64>,
    /// Override protocol mix as icmp,tcp,udp,other fractions
    #[arg(long, value_delimiter = ',', num_args = 4)]
    mix: Option<Vec<f64>>,
}

impl ProfileOverrides {
    fn apply(&self, mut profile: DeviceProfile) -> DeviceProfile {
        if let Some(v) = self.packets_per_window {
            profile.packets_per_window_mean = v;
        }
        if let Some(v) = self.clump {
            profile.packet_clump_mean = v;
        }
        if let Some(v) = self.mean_size {
            profile.mean_packet_size = v;
        }
        if let Some(v) = self.size_std {
            profile.packet_size_std = v;
        }
        if let Some(v) = self.min_size {
            profile.min_packet_size = v;
        }
        if let Some(v) = self.peers {
            profile.peer_pool_size = v;
        }
        if let Some(v) = self.peer_concentration {
            profile.peer_concentration = v;
        }
        if let Some(v) = self.burst_on {
            profile.burst_on_secs = v;
        }
        if let Some(v) = self.burst_off {
            profile.burst_off_secs = v;
        }
        if let Some(mix) = &self.mix {
            profile.protocol_mix.icmp = mix[0];
            profile.protocol_mix.tcp = mix[1];
            profile.protocol_mix.udp = mix[2];
            profile.protocol_mix.other = mix[3];
        }
        profile
    }
}

#[derive(Args)]
struct SynthBenignArgs {
    /// Device category: switch_trigger, camera, or hub
    #[arg(long, value_parser = parse_category)]
    category: TrafficClass,
    /// Device identifier in the emitted trace
    #[arg(long)]
    device: Option<String>,
    /// Trace duration in seconds
    #[arg(long, default_value_t = 3600)]
    duration: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output trace CSV
    #[arg(long)]
    out: PathBuf,
    /// Also append a device,label row to this labels CSV
    #[arg(long)]
    labels_out: Option<PathBuf>,
    #[command(flatten)]
    overrides: ProfileOverrides,
}

#[derive(Args)]
struct SynthAttackArgs {
    /// Flood kind: icmp, syn, or udp
    #[arg(long, value_parser = parse_kind)]
    kind: FloodKind,
    /// Victim IPv4 address
    #[arg(long)]
    victim: Ipv4Addr,
    #[arg(long)]
    device: Option<String>,
    /// Flood rate in packets per second
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    /// Attack duration in seconds
    #[arg(long, default_value_t = 600)]
    duration: u32,
    /// Attack packet size in bytes
    #[arg(long, default_value_t = 64)]
    size: u32,
    /// Use a single fixed source address instead of spoofing
    #[arg(long)]
    no_spoof: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCorpusArgs {
    /// Directory for benign.csv, attack.csv, labels.csv, manifest.json
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    devices_per_category: usize,
    /// Benign capture duration per device, seconds
    #[arg(long, default_value_t = 3000)]
    benign_duration: u32,
    #[arg(long, default_value_t = 3)]
    victims_per_kind: usize,
    /// Flood duration per victim, seconds
    #[arg(long, default_value_t = 600)]
    attack_duration: u32,
    /// Flood rate, packets per second
    #[arg(long, default_value_t = 30.0)]
    attack_rate: f64,
}

#[derive(Args)]
struct IngestArgs {
    /// Input classic pcap file
    #[arg(long)]
    pcap: PathBuf,
    /// Device attribution: mac or ip
    #[arg(long, default_value = "mac")]
    attribution: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Input trace CSV (repeatable; traces are merged)
    #[arg(long, required = true)]
    trace: Vec<PathBuf>,
    /// Labels CSV mapping device to class
    #[arg(long)]
    labels: PathBuf,
    /// Polling interval in seconds
    #[arg(long, default_value_t = 24)]
    interval: u32,
    /// Window origin in microseconds (default: earliest packet)
    #[arg(long)]
    origin_us: Option<i64>,
    #[arg(long)]
    out: PathBuf,
    /// Also export raw per-window counter stats
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input feature dataset CSV
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip min-max feature normalization
    #[arg(long)]
    no_normalize: bool,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature dataset CSV to classify (labels in the file are ignored)
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Benign trace CSV (repeatable)
    #[arg(long, required = true)]
    benign: Vec<PathBuf>,
    /// Attack trace CSV (repeatable; all devices labeled ddos)
    #[arg(long, required = true)]
    attack: Vec<PathBuf>,
    /// Labels CSV for benign devices
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 24)]
    interval: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Output report CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, required = true)]
    benign: Vec<PathBuf>,
    #[arg(long, required = true)]
    attack: Vec<PathBuf>,
    #[arg(long)]
    labels: PathBuf,
    /// Comma-separated polling intervals in seconds
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,4,8,16,24,32,48,60,90,120"
    )]
    intervals: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
    /// Fraction of each class dropped per step
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Output size-curve CSV
    #[arg(long)]
    out: PathBuf,
    /// Also write the reduced model here
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Trace CSV (repeatable; devices are taken from the device column)
    #[arg(long, required = true)]
    trace: Vec<PathBuf>,
    #[arg(long, default_value_t = 24)]
    interval: u32,
    /// Detection deadline in seconds (reporting only)
    #[arg(long, default_value_t = 120)]
    deadline: u32,
    #[arg(long, default_value_t = 3)]
    promote_after: u32,
    #[arg(long, default_value_t = 1)]
    confirm_after: u32,
    /// Simulated duration in seconds (default: covers the last packet)
    #[arg(long)]
    duration: Option<u64>,
    /// Output JSON-lines event log
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    /// Feature dataset CSV providing query vectors
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(synth) => match synth {
            SynthCommand::Benign(args) => synth_benign(args),
            SynthCommand::Attack(args) => synth_attack(args),
            SynthCommand::Corpus(args) => synth_corpus(args),
        },
        Command::Ingest(args) => ingest(args),
        Command::Features(args) => features(args),
        Command::Train(args) => train(args),
        Command::Classify(args) => classify(args),
        Command::Eval(args) => eval(args),
        Command::Sweep(args) => sweep(args),
        Command::Minimize(args) => minimize_cmd(args),
        Command::Importance(args) => importance(args),
        Command::Simulate(args) => simulate(args),
        Command::Bench(args) => bench(args),
    }
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

fn read_trace_file(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading trace {}", path.display()))?;
    let trace =
        read_csv(&text).with_context(|| format!("parsing trace {}", path.display()))?;
    Ok(trace)
}

fn read_merged_traces(paths: &[PathBuf]) -> Result<Trace> {
    let mut traces = Vec::new();
    for p in paths {
        traces.push(read_trace_file(p)?);
    }
    Ok(Trace::merged(traces))
}

const LABELS_CSV_HEADER: &str = "device,label";

fn read_labels_file(path: &Path) -> Result<BTreeMap<String, TrafficClass>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading labels {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == LABELS_CSV_HEADER => {}
        _ => bail!(
            "{}: expected header `{LABELS_CSV_HEADER}`",
            path.display()
        ),
    }
    let mut labels = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (device, label) = line
            .split_once(',')
            .with_context(|| format!("{}: bad row at line {}", path.display(), idx + 2))?;
        let label = TrafficClass::from_str(label.trim()).map_err(|()| {
            anyhow::anyhow!(
                "{}: unknown label `{label}` at line {}",
                path.display(),
                idx + 2
            )
        })?;
        labels.insert(device.to_string(), label);
    }
    Ok(labels)
}

fn labels_to_csv(labels: &BTreeMap<String, TrafficClass>) -> String {
    let mut out = String::from(LABELS_CSV_HEADER);
    out.push('\n');
    for (device, label) in labels {
        out.push_str(&format!("{device},{label}\n"));
    }
    out
}

fn read_dataset_file(path: &Path) -> Result<Vec<LabeledSample>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading features {}", path.display()))?;
    let samples =
        read_dataset(&text).with_context(|| format!("parsing features {}", path.display()))?;
    Ok(samples)
}

fn load_model(path: &Path) -> Result<KnnModel> {
    let bytes =
        fs::read(path).with_context(|| format!("reading model {}", path.display()))?;
    let model = KnnModel::deserialize(&bytes)
        .with_context(|| format!("decoding model {}", path.display()))?;
    Ok(model)
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents.as_bytes())
        .with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn synth_benign(args: SynthBenignArgs) -> Result<()> {
    let profile = args
        .overrides
        .apply(default_profiles()[&args.category].clone());
    profile.validate()?;
    let device = args
        .device
        .clone()
        .unwrap_or_else(|| format!("{}-0", args.category));
    let trace = generate_benign(&profile, &device, args.duration, args.seed);
    println!(
        "synth benign: {} packets for {device} ({}) over {} s",
        trace.len(),
        args.category,
        args.duration
    );
    write_out(&args.out, &write_csv(&trace))?;
    let mut m = RunManifest::new("synth-benign", Some(args.seed)).output(&args.out);
    if let Some(labels_out) = &args.labels_out {
        let labels = BTreeMap::from([(device, args.category)]);
        write_out(labels_out, &labels_to_csv(&labels))?;
        m = m.output(labels_out);
    }
    m.write(&args.out)?;
    Ok(())
}

fn synth_attack(args: SynthAttackArgs) -> Result<()> {
    let mut spec = AttackSpec::new(args.kind, args.victim);
    spec.rate_pps = args.rate;
    spec.duration_secs = args.duration;
    spec.packet_size = args.size;
    spec.spoof_sources = !args.no_spoof;
    spec.validate()?;
    let device = args.device.clone().unwrap_or_else(|| "attacker-0".to_string());
    let trace = generate_attack(&spec, &device, args.seed);
    println!(
        "synth attack: {} {:?} packets toward {} over {} s",
        trace.len(),
        args.kind,
        args.victim,
        args.duration
    );
    write_out(&args.out, &write_csv(&trace))?;
    let mut m = RunManifest::new("synth-attack", Some(args.seed)).output(&args.out);
    if let Some(labels_out) = &args.labels_out {
        let labels = BTreeMap::from([(device, TrafficClass::Ddos)]);
        write_out(labels_out, &labels_to_csv(&labels))?;
        m = m.output(labels_out);
    }
    m.write(&args.out)?;
    Ok(())
}

fn synth_corpus(args: SynthCorpusArgs) -> Result<()> {
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let profiles = default_profiles();

    let mut benign = Vec::new();
    let mut labels = BTreeMap::new();
    for (category, profile) in &profiles {
        for d in 0..args.devices_per_category {
            let id = format!("{category}-{d}");
            benign.push(generate_benign(
                profile,
                &id,
                args.benign_duration,
                seeds::derive(args.seed, &id),
            ));
            labels.insert(id, *category);
        }
    }
    let mut attack = Vec::new();
    for kind in FloodKind::ALL {
        for v in 0..args.victims_per_kind {
            let id = format!("attacker-{kind:?}-{v}").to_lowercase();
            let mut spec = AttackSpec::new(kind, Ipv4Addr::new(10, 0, v as u8 + 1, 9));
            spec.rate_pps = args.attack_rate;
            spec.duration_secs = args.attack_duration;
            spec.validate()?;
            attack.push(generate_attack(&spec, &id, seeds::derive(args.seed, &id)));
            labels.insert(id, TrafficClass::Ddos);
        }
    }

    let benign = Trace::merged(benign);
    let attack = Trace::merged(attack);
    let benign_path = args.out_dir.join("benign.csv");
    let attack_path = args.out_dir.join("attack.csv");
    let labels_path = args.out_dir.join("labels.csv");
    write_out(&benign_path, &write_csv(&benign))?;
    write_out(&attack_path, &write_csv(&attack))?;
    write_out(&labels_path, &labels_to_csv(&labels))?;
    println!(
        "synth corpus: {} benign packets across {} devices, {} attack packets across {} floods",
        benign.len(),
        labels.len(),
        attack.len(),
        FloodKind::ALL.len() * args.victims_per_kind
    );
    RunManifest::new("synth-corpus", Some(args.seed))
        .output(&benign_path)
        .output(&attack_path)
        .output(&labels_path)
        .write(&args.out_dir)?;
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let attribution = match args.attribution.as_str() {
        "mac" => AttributionRule::SourceMac,
        "ip" => AttributionRule::SourceIp,
        other => bail!("unknown attribution `{other}` (expected mac or ip)"),
    };
    let bytes = fs::read(&args.pcap)
        .with_context(|| format!("reading pcap {}", args.pcap.display()))?;
    let trace = read_pcap(&bytes, attribution)
        .with_context(|| format!("parsing pcap {}", args.pcap.display()))?;
    println!("ingest: {} packets from {}", trace.len(), args.pcap.display());
    write_out(&args.out, &write_csv(&trace))?;
    RunManifest::new("ingest", None)
        .input(&args.pcap)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn features(args: FeaturesArgs) -> Result<()> {
    let trace = read_merged_traces(&args.trace)?;
    let labels = read_labels_file(&args.labels)?;
    let origin = args.origin_us.unwrap_or_else(|| {
        trace
            .records
            .iter()
            .map(|r| r.timestamp_us)
            .min()
            .unwrap_or(0)
    });
    let cfg = PollingConfig::new(args.interval, origin)?;
    let stats = bucket_direct(&trace, cfg);

    let mut samples = Vec::with_capacity(stats.len());
    for stat in &stats {
        let label = labels
            .get(&stat.device)
            .copied()
            .ok_or_else(|| anyhow::anyhow!("device `{}` has no label", stat.device))?;
        samples.push(LabeledSample {
            features: extract(stat)?,
            label,
            device: stat.device.clone(),
            window_index: stat.window_index,
        });
    }
    println!(
        "features: {} windows from {} packets at {} s interval",
        samples.len(),
        trace.len(),
        args.interval
    );
    write_out(&args.out, &write_dataset(&samples))?;
    let mut m = RunManifest::new("features", None)
        .inputs(&args.trace)
        .input(&args.labels)
        .output(&args.out);
    if let Some(stats_out) = &args.stats_out {
        write_out(stats_out, &stats_to_csv(&stats))?;
        m = m.output(stats_out);
    }
    m.write(&args.out)?;
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let samples = read_dataset_file(&args.features)?;
    let model = KnnModel::fit_with(&samples, args.k, !args.no_normalize)?;
    let bytes = model.serialize();
    println!(
        "train: {} rows, k={}, normalize={}, {} bytes",
        model.len(),
        model.k(),
        model.is_normalizing(),
        bytes.len()
    );
    write_atomic(&args.out, &bytes).with_context(|| format!("writing {}", args.out.display()))?;
    RunManifest::new("train", Some(args.seed))
        .input(&args.features)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

const PREDICTIONS_CSV_HEADER: &str = "device,window_index,label,mean_neighbor_distance";

fn classify(args: ClassifyArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let samples = read_dataset_file(&args.features)?;
    let mut out = String::from(PREDICTIONS_CSV_HEADER);
    out.push('\n');
    for s in &samples {
        let p = model.predict(&s.features);
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.device, s.window_index, p.label, p.mean_neighbor_distance
        ));
    }
    println!("classify: {} predictions", samples.len());
    write_out(&args.out, &out)?;
    RunManifest::new("classify", None)
        .input(&args.model)
        .input(&args.features)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let benign = read_merged_traces(&args.benign)?;
    let attack = read_merged_traces(&args.attack)?;
    let labels = read_labels_file(&args.labels)?;
    let entry = evaluate_interval(&benign, &attack, &labels, args.interval, args.seed, args.k)?;
    print!("{}", report_table(&entry.report));
    write_out(&args.out, &report_to_csv(&entry.report))?;
    RunManifest::new("eval", Some(args.seed))
        .inputs(&args.benign)
        .inputs(&args.attack)
        .input(&args.labels)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let benign = read_merged_traces(&args.benign)?;
    let attack = read_merged_traces(&args.attack)?;
    let labels = read_labels_file(&args.labels)?;
    let result = sweep_intervals(&benign, &attack, &labels, &args.intervals, args.seed, args.k)?;
    for (interval, entry) in &result.entries {
        println!(
            "sweep: interval {:>3} s -> overall accuracy {:.4}",
            interval, entry.report.overall_accuracy
        );
    }
    write_out(&args.out, &sweep_to_csv(&result))?;
    RunManifest::new("sweep", Some(args.seed))
        .inputs(&args.benign)
        .inputs(&args.attack)
        .input(&args.labels)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn minimize_cmd(args: MinimizeArgs) -> Result<()> {
    let samples = read_dataset_file(&args.features)?;
    let (train, test) =
        flowguard_core::eval::split_balance(&samples, flowguard_core::eval::DEFAULT_TRAIN_FRACTION, args.seed)?;
    let result = minimize(&train, &test, args.threshold, args.step, args.seed, args.k, None)?;
    println!(
        "minimize: {} -> {} training points, final accuracy {:.4}, threshold {} {}",
        train.len(),
        result.reduced_train.len(),
        result.final_accuracy,
        args.threshold,
        if result.met_threshold { "met" } else { "NOT met" }
    );
    write_out(&args.out, &size_curve_to_csv(&result))?;
    let mut m = RunManifest::new("minimize", Some(args.seed))
        .input(&args.features)
        .output(&args.out);
    if let Some(model_out) = &args.model_out {
        let model = KnnModel::fit(&result.reduced_train, args.k)?;
        write_atomic(model_out, &model.serialize())
            .with_context(|| format!("writing {}", model_out.display()))?;
        m = m.output(model_out);
    }
    m.write(&args.out)?;
    Ok(())
}

fn importance(args: ImportanceArgs) -> Result<()> {
    let samples = read_dataset_file(&args.features)?;
    let (train, test) =
        flowguard_core::eval::split_balance(&samples, flowguard_core::eval::DEFAULT_TRAIN_FRACTION, args.seed)?;
    let model = KnnModel::fit(&train, args.k)?;
    let report = permutation_importance(&model, &test, args.repeats, args.seed)?;
    for (i, name) in flowguard_core::features::FEATURE_NAMES.iter().enumerate() {
        println!(
            "importance: {name:<17} raw drop {:.4}  relative {:.4}",
            report.raw_drops[i], report.relative_importance[i]
        );
    }
    write_out(&args.out, &importance_to_csv(&report))?;
    RunManifest::new("importance", Some(args.seed))
        .input(&args.features)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let merged = read_merged_traces(&args.trace)?;
    let mut per_device: BTreeMap<String, Vec<flowguard_core::trace::PacketRecord>> =
        BTreeMap::new();
    for r in merged.records {
        per_device.entry(r.device.clone()).or_default().push(r);
    }
    let first_packet: BTreeMap<String, i64> = per_device
        .iter()
        .map(|(d, rs)| (d.clone(), rs.iter().map(|r| r.timestamp_us).min().unwrap()))
        .collect();
    let traces: BTreeMap<String, Trace> = per_device
        .into_iter()
        .map(|(d, rs)| (d.clone(), Trace::new(rs, "cli")))
        .collect();

    let cfg = ControllerConfig {
        polling_interval_secs: args.interval,
        promote_after: args.promote_after,
        confirm_attack_after: args.confirm_after,
        detection_deadline_secs: args.deadline,
    };
    let duration = args.duration.unwrap_or_else(|| {
        let last_us = traces
            .values()
            .flat_map(|t| t.records.last())
            .map(|r| r.timestamp_us)
            .max()
            .unwrap_or(0);
        let interval = u64::from(args.interval);
        (last_us.max(0) as u64 / 1_000_000).div_ceil(interval) * interval + interval
    });
    let events = run_simulation(&traces, &model, &cfg, duration)?;

    println!(
        "{:<24} {:>8} {:>10} {:>10} {:>10} {:>9}",
        "device", "windows", "promoted", "flagged", "removed", "deadline"
    );
    for o in summarize(&events) {
        let fmt = |v: Option<u64>| v.map_or("-".to_string(), |t| format!("{t} s"));
        let deadline = match o.removed_at {
            Some(t) => {
                let first_secs = first_packet[&o.device] as f64 / 1e6;
                if t as f64 - first_secs <= f64::from(args.deadline) {
                    "met"
                } else {
                    "MISSED"
                }
            }
            None => "-",
        };
        println!(
            "{:<24} {:>8} {:>10} {:>10} {:>10} {:>9}",
            o.device,
            o.classifications,
            fmt(o.promoted_at),
            fmt(o.first_flagged_at),
            fmt(o.removed_at),
            deadline
        );
    }
    write_out(&args.out, &events_to_jsonl(&events))?;
    RunManifest::new("simulate", None)
        .input(&args.model)
        .inputs(&args.trace)
        .output(&args.out)
        .write(&args.out)?;
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let samples = read_dataset_file(&args.features)?;
    if samples.is_empty() {
        bail!("feature file {} has no rows", args.features.display());
    }
    let queries: Vec<_> = samples.iter().map(|s| s.features).collect();
    let (mean_ms, p95_ms) = benchmark_latency(&model, &queries, args.trials);
    println!(
        "bench: model rows {} | trials {} | mean {:.4} ms | p95 {:.4} ms",
        model.len(),
        args.trials,
        mean_ms,
        p95_ms
    );
    Ok(())
}
