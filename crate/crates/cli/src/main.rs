//! `drillguide`: preoperative fields and plans, batch simulation, reports and
//! the session server.
//!
//! Exit codes: 0 on success, 2 for bad flags or inputs that fail validation,
//! 1 for any other failure.

mod config;
mod table;

use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use drillguide::engine::{read_trajectory, replay_trajectory, write_trajectory};
use drillguide::events::RemovalLog;
use drillguide::field::{exact_edt, signed_edt};
use drillguide::formats::{load_field, load_plan, load_volume, save_field, save_plan, save_volume};
use drillguide::plan::{build_plan, Protect};
use drillguide::report::{session_report, SessionLabel};
use drillguide::synthetic::{raster_sweep, slab_case, SlabLayout};
use drillguide::volume::{GridSpec, LabelVolume};
use drillguide::Error;
use drillguide_service::{Catalog, SessionManager, DEFAULT_MAX_SESSIONS};

use config::Config;

#[derive(Parser)]
#[command(name = "drillguide", version, about = "Voxel drilling guidance pipeline")]
struct Cli {
    /// JSON file with `drill` and `shells` sections overriding defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance field of a structure (CAPV1 in, CAPF1 out).
    Edt {
        #[arg(long)]
        volume: PathBuf,
        /// Comma-separated label codes or palette names.
        #[arg(long)]
        codes: String,
        /// Signed distance to the structure surface instead of unsigned distance to the structure.
        #[arg(long)]
        signed: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zone plan from a volume and protected-structure fields (CAPP1 out).
    Plan {
        #[arg(long)]
        volume: PathBuf,
        #[arg(long)]
        target_codes: String,
        /// `FIELD.capf` or `FIELD.capf=MM`; without MM the red thickness comes
        /// from the config, keyed by the field's structure name.
        #[arg(long)]
        protect: Vec<String>,
        #[arg(long)]
        yellow_mm: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replays a trajectory and writes the removal log.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        bone_field: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        out_log: PathBuf,
    },
    /// Per-session metrics and paired t-tests.
    Report {
        #[arg(long, num_args = 1..)]
        logs: Vec<PathBuf>,
        /// One plan per log, or a single plan shared by all logs.
        #[arg(long, num_args = 1..)]
        plans: Vec<PathBuf>,
        /// `subject:condition` per log, condition `guided` or `unguided`.
        #[arg(long, num_args = 1..)]
        labels: Vec<String>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Runs the HTTP and websocket session server.
    Serve {
        #[arg(long)]
        cases_dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Where finished session logs go; defaults to `<cases-dir>/../sessions`.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_SESSIONS)]
        max_sessions: usize,
    },
    /// Converts a raw label export plus JSON header into CAPV1.
    ImportRaw {
        #[arg(long)]
        raw: PathBuf,
        /// `{"dims", "spacing_mm", "origin_mm"?, "palette": {"1": "name"}}`
        #[arg(long)]
        header: PathBuf,
        #[arg(long, value_enum, default_value_t = RawType::U8)]
        dtype: RawType,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the synthetic slab case directory with fields and a sweep trajectory.
    Fixture {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "slab")]
        id: String,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RawType {
    U8,
    U16le,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Error::EmptyStructure
                | Error::EmptyTarget
                | Error::EmptyList
                | Error::MisalignedInputs(_)
                | Error::NonMonotoneTimestamps { .. }
                | Error::NonFinitePose
                | Error::InvalidParams(_)
                | Error::SpecMismatch
                | Error::LengthMismatch(..)
                | Error::TooFewPairs(_) => 2,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Edt { volume, codes, signed, out } => cmd_edt(&volume, &codes, signed, &out),
        Command::Plan { volume, target_codes, protect, yellow_mm, out } => {
            cmd_plan(&cfg, &volume, &target_codes, &protect, yellow_mm, &out)
        }
        Command::Simulate { plan, bone_field, traj, out_log } => {
            cmd_simulate(&cfg, &plan, &bone_field, &traj, &out_log)
        }
        Command::Report { logs, plans, labels, out, json } => {
            cmd_report(&logs, &plans, &labels, out.as_deref(), json)
        }
        Command::Serve { cases_dir, port, host, log_dir, max_sessions } => {
            cmd_serve(&cases_dir, &host, port, log_dir, max_sessions)
        }
        Command::ImportRaw { raw, header, dtype, out } => cmd_import_raw(&raw, &header, dtype, &out),
        Command::Fixture { out_dir, id } => cmd_fixture(&cfg, &out_dir, &id),
    }
}

/// Codes from a comma list of numbers or palette names.
fn parse_codes(volume: &LabelVolume, list: &str) -> CliResult<BTreeSet<u8>> {
    let mut codes = BTreeSet::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.parse::<u8>() {
            Ok(c) => {
                codes.insert(c);
            }
            Err(_) => {
                let named = volume.codes_named([tok]);
                if named.is_empty() {
                    return Err(CliError::Usage(format!("no palette entry named {tok:?}")));
                }
                codes.extend(named);
            }
        }
    }
    Ok(codes)
}

fn cmd_edt(volume: &Path, codes: &str, signed: bool, out: &Path) -> CliResult<()> {
    let volume = load_volume(volume)?;
    let codes = parse_codes(&volume, codes)?;
    let field = if signed {
        signed_edt(&volume, &codes)?
    } else {
        let mut f = exact_edt(&volume.mask_of(&codes))?;
        // same naming as the signed field
        f.structure_name = signed_edt_name(&volume, &codes);
        f
    };
    save_field(out, &field)?;
    Ok(())
}

fn signed_edt_name(volume: &LabelVolume, codes: &BTreeSet<u8>) -> String {
    codes
        .iter()
        .map(|c| volume.palette().get(c).cloned().unwrap_or_else(|| c.to_string()))
        .collect::<Vec<_>>()
        .join("+")
}

fn cmd_plan(
    cfg: &Config,
    volume: &Path,
    target_codes: &str,
    protect: &[String],
    yellow_mm: Option<f64>,
    out: &Path,
) -> CliResult<()> {
    let volume = load_volume(volume)?;
    let targets = parse_codes(&volume, target_codes)?;
    let mut fields = Vec::new();
    for p in protect {
        let (path, mm) = match p.rsplit_once('=') {
            Some((path, mm)) => match mm.parse::<f64>() {
                Ok(mm) => (path, Some(mm)),
                Err(_) => (p.as_str(), None),
            },
            None => (p.as_str(), None),
        };
        let field = load_field(path)?;
        let red = mm.unwrap_or_else(|| cfg.shells.red_for(&field.structure_name));
        fields.push((field, red));
    }
    let yellow = yellow_mm.unwrap_or(cfg.shells.yellow_thickness);
    let refs: Vec<Protect<'_>> = fields
        .iter()
        .map(|(field, red_mm)| Protect { field, red_mm: *red_mm })
        .collect();
    let mut plan = build_plan(&volume, &targets, &refs, yellow)?;
    plan.params.cortical_shell = cfg.shells.cortical_shell;
    save_plan(out, &plan)?;
    let c = &plan.counts;
    println!(
        "GREEN {} YELLOW {} RED {} ANATOMY {} EMPTY {}",
        c.green, c.yellow, c.red, c.anatomy, c.empty
    );
    Ok(())
}

fn cmd_simulate(cfg: &Config, plan: &Path, bone: &Path, traj: &Path, out_log: &Path) -> CliResult<()> {
    let plan = load_plan(plan)?;
    let bone = load_field(bone)?;
    let traj = read_trajectory(BufReader::new(fs::File::open(traj)?))?;
    let replay = replay_trajectory(&plan, &bone, &cfg.drill, &traj)?;
    fs::write(out_log, replay.log.to_jsonl_bytes())?;
    println!("{} ticks, {} voxels removed", replay.ticks.len(), replay.log.len());
    Ok(())
}

fn cmd_report(
    logs: &[PathBuf],
    plans: &[PathBuf],
    labels: &[String],
    out: Option<&Path>,
    json: bool,
) -> CliResult<()> {
    if labels.len() != logs.len() {
        return Err(Error::MisalignedInputs(format!("{} logs but {} labels", logs.len(), labels.len())).into());
    }
    if !logs.is_empty() && plans.len() != logs.len() && plans.len() != 1 {
        return Err(Error::MisalignedInputs(format!("{} logs but {} plans", logs.len(), plans.len())).into());
    }
    let labels = labels
        .iter()
        .zip(logs)
        .map(|(l, path)| {
            let id = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            SessionLabel::parse(id, l)
        })
        .collect::<drillguide::Result<Vec<_>>>()?;
    let logs = logs
        .iter()
        .map(|p| Ok(RemovalLog::read_jsonl(BufReader::new(fs::File::open(p)?))?))
        .collect::<CliResult<Vec<_>>>()?;
    let plans = plans.iter().map(load_plan).collect::<drillguide::Result<Vec<_>>>()?;
    let log_refs: Vec<&[_]> = logs.iter().map(|l| l.as_slice()).collect();
    let plan_refs: Vec<_> = plans.iter().collect();
    let report = session_report(&log_refs, &plan_refs, &labels)?;
    if let Some(out) = out {
        fs::write(out, report.to_json() + "\n")?;
    }
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", table::render(&report));
    }
    Ok(())
}

fn cmd_serve(
    cases_dir: &Path,
    host: &str,
    port: u16,
    log_dir: Option<PathBuf>,
    max_sessions: usize,
) -> CliResult<()> {
    if !cases_dir.is_dir() {
        return Err(CliError::Usage(format!("cases directory {} not found", cases_dir.display())));
    }
    let catalog = Catalog::load(cases_dir)?;
    let log_dir = log_dir.unwrap_or_else(|| {
        cases_dir
            .canonicalize()
            .ok()
            .and_then(|d| d.parent().map(|p| p.join("sessions")))
            .unwrap_or_else(|| PathBuf::from("sessions"))
    });
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address {host}:{port}: {e}")))?;
    let listener = std::net::TcpListener::bind(addr)
        .map_err(|e| CliError::Usage(format!("cannot listen on {addr}: {e}")))?;
    listener.set_nonblocking(true)?;
    let manager = Arc::new(SessionManager::new(catalog, log_dir, max_sessions));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        eprintln!(
            "serving {} case(s) on http://{}",
            manager.catalog().ids().len(),
            listener.local_addr()?
        );
        drillguide_service::serve(listener, manager).await
    })?;
    Ok(())
}

#[derive(serde::Deserialize)]
struct RawHeader {
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    #[serde(default)]
    origin_mm: [f64; 3],
    #[serde(default)]
    palette: std::collections::BTreeMap<u8, String>,
}

fn cmd_import_raw(raw: &Path, header: &Path, dtype: RawType, out: &Path) -> CliResult<()> {
    let h: RawHeader = serde_json::from_slice(&fs::read(header)?)
        .map_err(|e| Error::MalformedHeader(format!("{}: {e}", header.display())))?;
    let spec = GridSpec::new(h.dims, h.spacing_mm, h.origin_mm)?;
    let bytes = fs::read(raw)?;
    let width = match dtype {
        RawType::U8 => 1,
        RawType::U16le => 2,
    };
    if bytes.len() != spec.len() * width {
        return Err(Error::DimensionMismatch {
            expected: spec.len() * width,
            found: bytes.len(),
        }
        .into());
    }
    let labels = match dtype {
        RawType::U8 => bytes,
        RawType::U16le => bytes
            .chunks_exact(2)
            .map(|c| {
                let v = u16::from_le_bytes([c[0], c[1]]);
                u8::try_from(v).map_err(|_| CliError::Usage(format!("label {v} does not fit in a byte")))
            })
            .collect::<CliResult<Vec<u8>>>()?,
    };
    let volume = LabelVolume::new(spec, labels, h.palette)?;
    save_volume(out, &volume)?;
    Ok(())
}

fn cmd_fixture(cfg: &Config, out_dir: &Path, id: &str) -> CliResult<()> {
    let synthetic = slab_case(&SlabLayout::default(), &cfg.shells)?;
    let fields = synthetic.protect.clone();
    let spec = synthetic.plan.spec;
    let mut case = synthetic.into_case(id);
    if cfg.drill != Default::default() {
        case.meta.drill = Some(cfg.drill.clone());
    }
    let dir = case.save(out_dir)?;
    fs::create_dir_all(dir.join("fields"))?;
    for (field, _) in &fields {
        save_field(dir.join("fields").join(format!("{}.capf", field.structure_name)), field)?;
    }
    let (_, hi) = spec.bounds();
    let levels: Vec<f64> = (0..10).map(|n| hi[2] - 3.0 - 0.5 * n as f64).collect();
    let traj = raster_sweep(&spec, &levels, 1.0, cfg.drill.tick, 2);
    write_trajectory(fs::File::create(dir.join("traj.jsonl"))?, &traj)?;
    println!("{}", dir.display());
    Ok(())
}
