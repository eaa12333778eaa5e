//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 runtime or numeric error,
//! 3 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use corrsounder::correlator::{calibrate_b2b, compute_cir, CalibrationOptions, WindowSpec};
use corrsounder::frontend::QuantizerKind;
use corrsounder::fzc::{crest_factor_db, generate_fzc, FzcSpec, DEFAULT_CREST_OVERSAMPLING};
use corrsounder::harness::{
    load_iq, load_iq_samples, preset, run_scenario, simulate_capture, store_iq, HarnessError, IqMetadata,
    ResultFormat, ScenarioFile, SweepResultTable, OUTPUT_DIR_ENV, PRESETS,
};
use corrsounder::metrics::{advise, link_budget, psr_of_magnitudes, AdvisorScenario};
use corrsounder::{amplitude_db, ComplexSequence};

#[derive(Parser)]
#[command(name = "corrsounder", version, about = "Correlative channel sounder simulation and analysis")]
struct Cli {
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an FZC waveform to an IQ recording.
    Generate(GenerateArgs),
    /// Simulate one receiver capture of a scenario.
    Simulate(SimulateArgs),
    /// Compute the channel impulse response of a capture.
    Cir(CirArgs),
    /// Peak-to-sidelobe ratio of a CIR.
    Psr(PsrArgs),
    /// Run a scenario sweep and write its result table.
    Sweep(SweepArgs),
    /// Parametrization advice and link budget.
    Plan(PlanArgs),
    /// Built-in figure scenarios.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 1)]
    root: usize,
    #[arg(long, default_value_t = 1.0)]
    sample_rate: f64,
    /// Number of repeated periods to write.
    #[arg(long, default_value_t = 1)]
    periods: usize,
    #[arg(long, allow_negative_numbers = true)]
    center_frequency_hz: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

/// Flags that override scenario keys.
#[derive(Args, Default)]
struct Overrides {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Use a built-in preset as the scenario.
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    root: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    snr_a_db: Option<f64>,
    /// Quantizer resolution; 0 selects continuous amplitude.
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long, value_enum)]
    quantizer: Option<QuantizerArg>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    quantile: Option<f64>,
    #[arg(long, value_enum)]
    window: Option<WindowArg>,
    #[arg(long, allow_negative_numbers = true)]
    sidelobe_db: Option<f64>,
    #[arg(long)]
    excluded_halfwidth: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Point on the swept axis; defaults to its first value.
    #[arg(long, allow_negative_numbers = true)]
    value: Option<f64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CirArgs {
    /// Capture recording (with sidecar).
    #[arg(short, long)]
    input: PathBuf,
    /// Back-to-back reference capture.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Attenuation present during the back-to-back capture, dB.
    #[arg(long, requires = "calibration", default_value_t = 0.0, allow_negative_numbers = true)]
    known_loss_db: f64,
    #[arg(long, default_value_t = corrsounder::correlator::DEFAULT_CALIBRATION_FLOOR_DB)]
    calibration_floor_db: f64,
    #[arg(long, value_enum, default_value_t = WindowArg::Chebyshev)]
    window: WindowArg,
    #[arg(long, default_value_t = 100.0)]
    sidelobe_db: f64,
    /// Output: `.csv` for a table, anything else for an IQ recording.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct PsrArgs {
    /// CIR as written by `cir` (CSV or IQ recording).
    #[arg(short, long)]
    input: PathBuf,
    /// Guard half-width around the peak; defaults to the window mainlobe.
    #[arg(long)]
    excluded_halfwidth: Option<usize>,
    /// Window used for the default guard width of CSV input.
    #[arg(long, value_enum, default_value_t = WindowArg::Chebyshev)]
    window: WindowArg,
    #[arg(long, default_value_t = 100.0)]
    sidelobe_db: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TableOutput {
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Defaults to the output extension, else CSV.
    #[arg(long)]
    format: Option<ResultFormat>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Record the wall-clock time in the metadata (JSON only).
    #[arg(long)]
    timestamp: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    out: TableOutput,
}

#[derive(Args)]
struct PlanArgs {
    /// Advisor scenario (TOML); flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    min_path_loss_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    ptx_dbm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    ptx_max_dbm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    s_max_dbm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    snr_a_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    snr_a_gain_block_db: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gain_block_gain_db: Option<f64>,
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    target_dr_db: Option<f64>,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    max_periods: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum PresetAction {
    /// List the presets.
    List,
    /// Print a preset's scenario file.
    Show { name: String },
    /// Run a preset sweep.
    Run {
        name: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: TableOutput,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Rectangular,
    Chebyshev,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantizerArg {
    MidRise,
    MidTread,
}

fn window_spec(arg: WindowArg, sidelobe_db: f64) -> WindowSpec {
    match arg {
        WindowArg::Rectangular => WindowSpec::Rectangular,
        WindowArg::Chebyshev => WindowSpec::Chebyshev { sidelobe_db },
    }
}

fn resolve(dir: &Option<PathBuf>, path: &Path) -> PathBuf {
    match dir {
        Some(d) if path.is_relative() => d.join(path),
        _ => path.to_path_buf(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
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

fn run(cli: Cli) -> Result<(), HarnessError> {
    let dir = cli.output_dir;
    match cli.command {
        Command::Generate(a) => generate(a, &dir),
        Command::Simulate(a) => {
            let scenario = load_scenario(&a.overrides)?;
            let capture = simulate_capture(&scenario, a.value)?;
            let path = resolve(&dir, &a.output);
            store_iq(capture.samples(), &path, &IqMetadata::for_capture(&capture))?;
            eprintln!("wrote {} samples to {}", capture.samples().len(), path.display());
            Ok(())
        }
        Command::Cir(a) => cir(a, &dir),
        Command::Psr(a) => psr(a),
        Command::Sweep(a) => {
            let scenario = load_scenario(&a.overrides)?;
            let table = run_with_threads(&scenario, a.out.threads)?;
            let default_name = scenario.name.clone().unwrap_or_else(|| "sweep".into());
            write_table(table, &a.out, &dir, &default_name)
        }
        Command::Plan(a) => plan(a),
        Command::Preset { action } => match action {
            PresetAction::List => {
                for p in PRESETS {
                    println!("{:<6} {}", p.name, p.description());
                }
                Ok(())
            }
            PresetAction::Show { name } => {
                print!("{}", find_preset(&name)?.source);
                Ok(())
            }
            PresetAction::Run { name, trials, seed, out } => {
                let mut scenario = find_preset(&name)?.scenario()?;
                if let Some(t) = trials {
                    scenario.acquisition.trials = t;
                }
                if let Some(s) = seed {
                    scenario.acquisition.seed = s;
                }
                let table = run_with_threads(&scenario, out.threads)?;
                write_table(table, &out, &dir, &name)
            }
        },
    }
}

fn find_preset(name: &str) -> Result<&'static corrsounder::harness::Preset, HarnessError> {
    preset(name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        HarnessError::validation(format!("unknown preset '{name}' (available: {})", names.join(", ")))
    })
}

fn generate(a: GenerateArgs, dir: &Option<PathBuf>) -> Result<(), HarnessError> {
    if a.periods == 0 {
        return Err(HarnessError::validation("--periods must be at least 1"));
    }
    let spec = FzcSpec::new(a.length, a.root)?;
    let seq = generate_fzc(&spec, a.sample_rate)?;
    let crest = crest_factor_db(&seq, DEFAULT_CREST_OVERSAMPLING)?;
    let seq = seq.repeat(a.periods);
    let mut meta = IqMetadata::for_sequence(&seq);
    meta.fzc = Some(spec);
    meta.periods = Some(a.periods);
    meta.center_frequency_hz = a.center_frequency_hz;
    meta.notes.insert("crest_factor_db".into(), crest.to_string());
    let path = resolve(dir, &a.output);
    store_iq(&seq, &path, &meta)?;
    eprintln!("wrote {} samples to {} (crest factor {crest:.3} dB)", seq.len(), path.display());
    Ok(())
}

fn load_scenario(o: &Overrides) -> Result<ScenarioFile, HarnessError> {
    let mut s = match (&o.scenario, &o.preset) {
        (Some(path), _) => ScenarioFile::load(path)?,
        (None, Some(name)) => find_preset(name)?.scenario()?,
        (None, None) => return Err(HarnessError::validation("give --scenario FILE or --preset NAME")),
    };
    if let Some(v) = o.length {
        s.waveform.length = v;
        if let Some(sweep) = s.sweep.as_mut() {
            sweep.lengths = None;
        }
    }
    if let Some(v) = o.root {
        s.waveform.root = v;
    }
    if let Some(v) = o.snr_a_db {
        s.receiver.snr_a_db = Some(v);
        if let Some(sweep) = s.sweep.as_mut() {
            sweep.snr_a_db = None;
        }
    }
    if let Some(v) = o.bits {
        s.receiver.bits = (v > 0).then_some(v);
        if let Some(sweep) = s.sweep.as_mut() {
            sweep.bits = None;
            sweep.include_unquantized = false;
        }
    }
    if let Some(q) = o.quantizer {
        s.receiver.quantizer = match q {
            QuantizerArg::MidRise => QuantizerKind::MidRise,
            QuantizerArg::MidTread => QuantizerKind::MidTread,
        };
    }
    if let Some(v) = o.periods {
        s.acquisition.periods = v;
        if let Some(sweep) = s.sweep.as_mut() {
            sweep.periods = None;
        }
    }
    if let Some(v) = o.trials {
        s.acquisition.trials = v;
    }
    if let Some(v) = o.seed {
        s.acquisition.seed = v;
    }
    if let Some(v) = o.quantile {
        s.processing.quantile = v;
    }
    if o.window.is_some() || o.sidelobe_db.is_some() {
        let current = match s.processing.window {
            WindowSpec::Chebyshev { sidelobe_db } => (WindowArg::Chebyshev, sidelobe_db),
            WindowSpec::Rectangular => (WindowArg::Rectangular, 100.0),
        };
        s.processing.window = window_spec(o.window.unwrap_or(current.0), o.sidelobe_db.unwrap_or(current.1));
    }
    if let Some(v) = o.excluded_halfwidth {
        s.processing.excluded_halfwidth = Some(v);
    }
    s.validate()?;
    Ok(s)
}

fn run_with_threads(scenario: &ScenarioFile, threads: Option<usize>) -> Result<SweepResultTable, HarnessError> {
    match threads {
        Some(0) => Err(HarnessError::validation("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::validation(format!("thread pool: {e}")))?;
            pool.install(|| run_scenario(scenario))
        }
        None => run_scenario(scenario),
    }
}

fn write_table(
    mut table: SweepResultTable,
    out: &TableOutput,
    dir: &Option<PathBuf>,
    default_name: &str,
) -> Result<(), HarnessError> {
    if out.timestamp {
        table.metadata.stamp_now();
    }
    let path = match (&out.output, dir) {
        (Some(p), _) => Some(resolve(dir, p)),
        (None, Some(d)) => {
            let ext = out.format.unwrap_or(ResultFormat::Csv).extension();
            Some(d.join(format!("{default_name}.{ext}")))
        }
        (None, None) => None,
    };
    let format = out
        .format
        .or_else(|| path.as_deref().and_then(ResultFormat::from_path))
        .unwrap_or(ResultFormat::Csv);
    match path {
        Some(p) => {
            corrsounder::harness::emit_results(&table, format, &p)?;
            eprintln!("wrote {} rows to {}", table.len(), p.display());
        }
        None => {
            let bytes = table.render(format)?;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| HarnessError::Io {
                    path: "<stdout>".into(),
                    source: e,
                })?;
        }
    }
    Ok(())
}

fn cir(a: CirArgs, dir: &Option<PathBuf>) -> Result<(), HarnessError> {
    let capture = load_iq(&a.input)?;
    let reference = generate_fzc(capture.spec(), capture.samples().sample_rate())?;
    let calibration = match &a.calibration {
        Some(path) => {
            let b2b = load_iq(path)?;
            if b2b.spec() != capture.spec() {
                return Err(HarnessError::validation("calibration capture uses a different waveform"));
            }
            let options = CalibrationOptions {
                floor_db: a.calibration_floor_db,
                ..Default::default()
            };
            Some(calibrate_b2b(&b2b, &reference, a.known_loss_db, options)?)
        }
        None => None,
    };
    let window = window_spec(a.window, a.sidelobe_db);
    let cir = compute_cir(&capture, &reference, calibration.as_ref(), window)?;
    let path = resolve(dir, &a.output);
    if ResultFormat::from_path(&path) == Some(ResultFormat::Csv) {
        let file = std::fs::File::create(&path).map_err(|e| HarnessError::Io {
            path: path.clone(),
            source: e,
        })?;
        cir.write_csv(std::io::BufWriter::new(file)).map_err(|e| HarnessError::Io {
            path: path.clone(),
            source: e,
        })?;
    } else {
        let seq = ComplexSequence::new(cir.taps().to_vec(), 1.0 / cir.bin_spacing_s())?;
        let mut meta = IqMetadata::for_sequence(&seq);
        meta.notes = cir.metadata.clone();
        meta.notes.insert("content".into(), "cir".into());
        meta.notes.insert("window".into(), serde_json::to_string(&window).expect("window serializes"));
        store_iq(&seq, &path, &meta)?;
    }
    let (peak_bin, peak) = cir.peak();
    eprintln!(
        "peak {:.3} dB at {:.4e} s; wrote {}",
        amplitude_db(peak),
        cir.delay_of(peak_bin),
        path.display()
    );
    Ok(())
}

fn read_cir_magnitudes(path: &Path) -> Result<(Vec<f64>, Option<WindowSpec>), HarnessError> {
    if ResultFormat::from_path(path) == Some(ResultFormat::Csv) {
        let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::Format(e.to_string()))?;
        let col = reader
            .headers()
            .map_err(|e| HarnessError::Format(e.to_string()))?
            .iter()
            .position(|h| h == "magnitude_db")
            .ok_or_else(|| HarnessError::Format(format!("{}: no magnitude_db column", path.display())))?;
        let mut mags = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| HarnessError::Format(e.to_string()))?;
            let db: f64 = rec
                .get(col)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| HarnessError::Format(format!("{}: bad value on row {}", path.display(), line + 2)))?;
            mags.push(corrsounder::db_to_amplitude(db));
        }
        Ok((mags, None))
    } else {
        let (seq, meta) = load_iq_samples(path)?;
        let window = meta.notes.get("window").and_then(|w| serde_json::from_str(w).ok());
        Ok((seq.samples().iter().map(|s| s.norm()).collect(), window))
    }
}

fn psr(a: PsrArgs) -> Result<(), HarnessError> {
    let (mags, stored_window) = read_cir_magnitudes(&a.input)?;
    let window = stored_window.unwrap_or(window_spec(a.window, a.sidelobe_db));
    let exclusion = a
        .excluded_halfwidth
        .unwrap_or_else(|| window.mainlobe_halfwidth(mags.len()));
    let report = psr_of_magnitudes(&mags, exclusion)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("psr_db            {}", report.psr_db);
        println!("peak_index        {}", report.peak_index);
        println!("peak_db           {}", report.peak_magnitude_db);
        println!("floor_q99_db      {}", report.floor_q99_db);
        println!("excluded_halfwidth {}", report.excluded_halfwidth);
    }
    Ok(())
}

fn plan(a: PlanArgs) -> Result<(), HarnessError> {
    let mut table = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.clone(),
                source: e,
            })?;
            text.parse::<toml::Table>()
                .map_err(|e| HarnessError::validation(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    let floats = [
        ("min_path_loss_db", a.min_path_loss_db),
        ("ptx_dbm", a.ptx_dbm),
        ("ptx_max_dbm", a.ptx_max_dbm),
        ("s_max_dbm", a.s_max_dbm),
        ("snr_a_db", a.snr_a_db),
        ("snr_a_gain_block_db", a.snr_a_gain_block_db),
        ("gain_block_gain_db", a.gain_block_gain_db),
        ("target_dr_db", a.target_dr_db),
    ];
    for (key, value) in floats {
        if let Some(v) = value {
            table.insert(key.into(), toml::Value::Float(v));
        }
    }
    let ints = [
        ("length", a.length),
        ("periods", a.periods),
        ("max_length", a.max_length),
        ("max_periods", a.max_periods),
    ];
    for (key, value) in ints {
        if let Some(v) = value {
            table.insert(key.into(), toml::Value::Integer(v as i64));
        }
    }
    let scenario: AdvisorScenario = table
        .try_into()
        .map_err(|e: toml::de::Error| HarnessError::validation(e.message().to_owned()))?;
    let advice = advise(&scenario)?;
    let budget = link_budget(
        scenario.ptx_max_dbm,
        scenario.s_max_dbm,
        scenario.snr_a_db,
        scenario.length,
        scenario.periods,
    );
    if a.json {
        let value = serde_json::json!({ "advice": advice, "link_budget": budget });
        println!("{}", serde_json::to_string_pretty(&value).expect("plan serializes"));
        return Ok(());
    }
    println!("received SNR at shortest distance  {:.2} dB", advice.snr_r_db);
    println!("dynamic range bound (current)      {:.2} dB", advice.current_dr_db);
    println!("dynamic range bound (advised)      {:.2} dB", advice.advised_dr_db);
    println!(
        "G_proc {:.2} dB   DR_A {:.2} dB   PL_min,0 {:.2} dB   PL_max {:.2} dB",
        budget.g_proc_db, budget.dr_a_db, budget.pl_min_db, budget.pl_max_db
    );
    if advice.recommendations.is_empty() {
        println!("no changes recommended");
    }
    for (i, r) in advice.recommendations.iter().enumerate() {
        println!("{}. {r}", i + 1);
    }
    Ok(())
}
