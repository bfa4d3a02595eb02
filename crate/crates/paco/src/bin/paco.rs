//! `paco` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 profile rejection, 4 data error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use paco::bench::{self, BenchRow, Dataset};
use paco::heatmap::heatmap;
use paco::ingest::{self, TraceFormat};
use paco::{persist, profile_file};
use paco_core::geo::GeoCoord;
use paco_core::profiles::{self, AccessProfile, ProfileError};
use paco_core::trace::{synthetic_fleet, synthetic_walk, to_points, FleetSpec};
use paco_core::{
    ContextPoint, FlatTable, GeoBox, Paco, PacoConfig, QueryOverrides, QueryWindow, RTree, StPoint, StoreBackend,
};

enum CliError {
    Usage(String),
    Profile(ProfileError),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Profile(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "paco", version, about = "Spatiotemporal context store with probability-of-knowledge queries")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Cab,
    Csv,
}

impl From<Format> for TraceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Cab => TraceFormat::Cab,
            Format::Csv => TraceFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Rtree,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Cabs,
    Peds,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    InsthreshSweep,
    BackendCompare,
    GridfactorSweep,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Walk,
    Fleet,
}

#[derive(Args, Clone)]
struct CfgArgs {
    /// Parameter preset.
    #[arg(long, value_enum, default_value = "cabs")]
    dataset: Preset,
    /// Spatial influence range in meters.
    #[arg(long)]
    space_range: Option<f64>,
    /// Temporal influence range in seconds.
    #[arg(long)]
    time_range: Option<f64>,
    #[arg(long)]
    grid_factor: Option<f64>,
    #[arg(long)]
    trim: Option<usize>,
    #[arg(long)]
    ins_thresh: Option<f64>,
    #[arg(long)]
    space_weight: Option<f64>,
    #[arg(long)]
    time_weight: Option<f64>,
}

impl CfgArgs {
    fn dataset(&self) -> Result<Dataset> {
        let mut ds = match self.dataset {
            Preset::Cabs => Dataset::cabs(),
            Preset::Peds => Dataset::peds(),
        };
        let c = &mut ds.cfg;
        c.space_range = self.space_range.unwrap_or(c.space_range);
        c.time_range = self.time_range.unwrap_or(c.time_range);
        c.grid_factor = self.grid_factor.unwrap_or(c.grid_factor);
        c.trim_thresh = self.trim.unwrap_or(c.trim_thresh);
        c.ins_thresh = self.ins_thresh.unwrap_or(c.ins_thresh);
        c.space_weight = self.space_weight.unwrap_or(c.space_weight);
        c.time_weight = self.time_weight.unwrap_or(c.time_weight);
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(ds)
    }

    fn cfg(&self) -> Result<PacoConfig> {
        Ok(self.dataset()?.cfg)
    }
}

#[derive(Args, Clone)]
struct ProfileArgs {
    /// Access profile name.
    #[arg(long, default_value = "open")]
    profile: String,
    /// TOML file with [[profile]] stanzas; defaults to the built-ins.
    #[arg(long)]
    profiles_file: Option<PathBuf>,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<AccessProfile> {
        let found = match &self.profiles_file {
            Some(path) => profile_file::load_profiles(path)
                .map_err(data)?
                .into_iter()
                .find(|p| p.name == self.profile),
            None => profiles::builtin(&self.profile),
        };
        found.ok_or_else(|| CliError::Usage(format!("unknown profile {:?}", self.profile)))
    }
}

#[derive(Args, Clone)]
struct WindowArgs {
    /// Spatial bounds `lon_min,lat_min,lon_max,lat_max`; unbounded if omitted.
    #[arg(long, value_parser = parse_bbox, allow_hyphen_values = true)]
    bbox: Option<GeoBox>,
    /// Window start in seconds; give with --t-max.
    #[arg(long, allow_hyphen_values = true)]
    t_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
}

impl WindowArgs {
    fn window(&self) -> Result<QueryWindow> {
        let time = match (self.t_min, self.t_max) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(CliError::Usage("--t-min and --t-max go together".into())),
        };
        QueryWindow::new(self.bbox, time).map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn parse_bbox(s: &str) -> std::result::Result<GeoBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 4 {
        return Err("expected lon_min,lat_min,lon_max,lat_max".into());
    }
    GeoBox::from_bounds(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

fn parse_stpoint(s: &str) -> std::result::Result<StPoint, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 3 {
        return Err("expected lon,lat,t".into());
    }
    GeoCoord::new(v[0], v[1]).map_err(|e| e.to_string())?;
    Ok(StPoint::new(v[0], v[1], v[2]))
}

fn parse_coord(s: &str) -> std::result::Result<GeoCoord, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 2 {
        return Err("expected lon,lat".into());
    }
    GeoCoord::new(v[0], v[1]).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a trace and store every point.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        store: PathBuf,
    },
    /// Smart-insert replay of a trace; prints one report row.
    Replay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Where to persist the replayed store.
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(flatten)]
        cfg: CfgArgs,
    },
    /// Window PoK under an access profile.
    QueryWindow {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum, default_value = "rtree")]
        backend: Backend,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        cfg: CfgArgs,
    },
    /// Time-ordered points between the stored points nearest to two queries.
    FindPath {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum, default_value = "rtree")]
        backend: Backend,
        /// Start `lon,lat,t`.
        #[arg(long, value_parser = parse_stpoint, allow_hyphen_values = true)]
        from: StPoint,
        /// End `lon,lat,t`.
        #[arg(long, value_parser = parse_stpoint, allow_hyphen_values = true)]
        to: StPoint,
        /// Current time in seconds for age checks; defaults to the clock.
        #[arg(long)]
        now: Option<f64>,
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        cfg: CfgArgs,
    },
    /// Benchmark suites; writes a CSV report.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Directory of cab (`new_*.txt`) or CSV traces.
        #[arg(long, conflicts_with = "seed")]
        data_dir: Option<PathBuf>,
        /// Use a seeded synthetic taxi fleet instead of trace files.
        #[arg(long, required_unless_present = "data_dir")]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        vehicles: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Keep only the first N records: in file order for trace
        /// directories, in time order for synthetic data.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: CfgArgs,
    },
    /// Per-cell PoK grid as CSV and PGM.
    Heatmap {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_enum, default_value = "rtree")]
        backend: Backend,
        #[command(flatten)]
        window: WindowArgs,
        /// Output prefix; writes `<out>.csv` and `<out>.pgm`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: CfgArgs,
    },
    /// Deterministic synthetic trace as CSV.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Walk length.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 25.0)]
        step_m: f64,
        #[arg(long, default_value_t = 10)]
        step_t: i64,
        #[arg(long, default_value_t = 50)]
        vehicles: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// `lon,lat` of the walk origin or fleet center.
        #[arg(long, value_parser = parse_coord, allow_hyphen_values = true)]
        origin: Option<GeoCoord>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_store<S: StoreBackend + Default>(path: &Path) -> Result<S> {
    persist::load(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_points(input: &Path, format: Format) -> Result<Vec<ContextPoint>> {
    let records = ingest::load_trace_file(input, format.into()).map_err(data)?;
    to_points(&records, 0).map_err(data)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_rows(rows: &[BenchRow], path: Option<&Path>) -> Result<()> {
    bench::write_report(rows, output(path)?).map_err(data)
}

fn cmd_ingest(input: &Path, format: Format, store: &Path) -> Result<()> {
    let points = read_points(input, format)?;
    let mut s = RTree::new();
    for p in &points {
        s.insert(*p).map_err(data)?;
    }
    persist::save(&s, store).map_err(data)?;
    println!("{} points", s.len());
    Ok(())
}

fn cmd_replay(input: &Path, format: Format, store: Option<&Path>, cfg: &CfgArgs) -> Result<()> {
    let cfg = cfg.cfg()?;
    let points = read_points(input, format)?;
    let none = QueryOverrides::default();
    let full = bench::replay::<RTree>(&points, &cfg, None).map_err(data)?;
    let windows = bench::evaluation_windows(full.store(), &cfg);
    let full_pok = bench::mean_window_pok(&full, &windows, &none).map_err(data)?;
    let start = Instant::now();
    let kept = bench::replay::<RTree>(&points, &cfg, Some(cfg.ins_thresh)).map_err(data)?;
    let replay_ms = start.elapsed().as_secs_f64() * 1e3;
    let mean = bench::mean_window_pok(&kept, &windows, &none).map_err(data)?;
    if let Some(path) = store {
        persist::save(kept.store(), path).map_err(data)?;
    }
    let row = BenchRow {
        suite: "replay".into(),
        config: format!("ins={}", cfg.ins_thresh),
        kept: kept.store().len(),
        total: points.len(),
        bytes: persist::encode(kept.store()).len(),
        mean_pok: mean,
        pok_retention: bench::pok_retention(mean, full_pok),
        median_ms: replay_ms,
    };
    write_rows(&[row], None)
}

fn query_window<S: StoreBackend + Default>(
    store: &Path,
    window: &WindowArgs,
    profile: &ProfileArgs,
    cfg: &CfgArgs,
) -> Result<()> {
    let profile = profile.resolve()?;
    let cfg = cfg.cfg()?;
    let win = window.window()?;
    let (win, overrides) = profile
        .sanitize_window_query(&win, &QueryOverrides::default(), &cfg)
        .map_err(CliError::Profile)?;
    let paco = Paco::new(load_store::<S>(store)?, cfg).map_err(data)?;
    let start = Instant::now();
    let r = paco.window_pok(&win, &overrides).map_err(data)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    println!("pok {}", r.pok);
    println!("t_o {}", r.t_o);
    println!("t_p {}", r.t_p);
    println!("candidates {}", r.n_candidates);
    println!("wall_ms {ms:.3}");
    Ok(())
}

fn find_path<S: StoreBackend + Default>(
    store: &Path,
    a: &StPoint,
    b: &StPoint,
    now: Option<f64>,
    profile: &ProfileArgs,
    cfg: &CfgArgs,
) -> Result<()> {
    let profile = profile.resolve()?;
    let now = now.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0)
    });
    profile.sanitize_find_path(a, b, now).map_err(CliError::Profile)?;
    let paco = Paco::new(load_store::<S>(store)?, cfg.cfg()?).map_err(data)?;
    let path = paco.find_path(a, b).map_err(data)?;
    let mut out = io::stdout().lock();
    let mut write = || -> io::Result<()> {
        writeln!(out, "id,lon,lat,t")?;
        for p in &path {
            writeln!(out, "{},{},{},{}", p.id, persist::format_degrees(p.x), persist::format_degrees(p.y), p.t)?;
        }
        out.flush()
    };
    write().map_err(data)
}

fn cmd_heatmap<S: StoreBackend + Default>(store: &Path, window: &WindowArgs, out: &Path, cfg: &CfgArgs) -> Result<()> {
    let win = window.window()?;
    if win.space.is_none() {
        return Err(CliError::Usage("heatmap needs --bbox".into()));
    }
    let paco = Paco::new(load_store::<S>(store)?, cfg.cfg()?).map_err(data)?;
    let h = heatmap(&paco, &win, &QueryOverrides::default()).map_err(data)?;
    let csv_path = out.with_extension("csv");
    let pgm_path = out.with_extension("pgm");
    let write = |p: &Path, f: &dyn Fn(fs::File) -> io::Result<()>| {
        fs::File::create(p)
            .and_then(f)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
    };
    write(&csv_path, &|f| h.write_csv(f))?;
    write(&pgm_path, &|f| h.write_pgm(f))?;
    println!("{}x{} mean {:.6}", h.rows, h.cols, h.mean());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    suite: Suite,
    data_dir: Option<&Path>,
    seed: Option<u64>,
    vehicles: usize,
    samples: usize,
    limit: Option<usize>,
    out: Option<&Path>,
    cfg: &CfgArgs,
) -> Result<()> {
    let ds = cfg.dataset()?;
    let limit = limit.unwrap_or(usize::MAX);
    let mut records = match (data_dir, seed) {
        (Some(dir), _) => ingest::load_trace_dir_prefix(dir, limit).map_err(data)?,
        (None, Some(seed)) => synthetic_fleet(seed, &FleetSpec::taxi(bench::synthetic_center(), vehicles, samples)),
        (None, None) => return Err(CliError::Usage("give --data-dir or --seed".into())),
    };
    records.truncate(limit);
    let points = to_points(&records, 0).map_err(data)?;
    let mut rows = Vec::new();
    let run_all = matches!(suite, Suite::All);
    if run_all || matches!(suite, Suite::InsthreshSweep) {
        rows.extend(bench::insthresh_sweep(&points, &ds.cfg, &bench::SWEEP_THRESHOLDS).map_err(data)?);
    }
    if run_all || matches!(suite, Suite::BackendCompare) {
        rows.extend(bench::backend_compare(&points, &ds).map_err(data)?);
    }
    if run_all || matches!(suite, Suite::GridfactorSweep) {
        rows.extend(bench::gridfactor_sweep(&points, &ds).map_err(data)?);
    }
    write_rows(&rows, out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    kind: SynthKind,
    seed: u64,
    n: usize,
    step_m: f64,
    step_t: i64,
    vehicles: usize,
    samples: usize,
    origin: Option<GeoCoord>,
    out: Option<&Path>,
) -> Result<()> {
    let origin = origin.unwrap_or_else(bench::synthetic_center);
    let records = match kind {
        SynthKind::Walk => synthetic_walk(seed, n, step_m, step_t, origin),
        SynthKind::Fleet => synthetic_fleet(seed, &FleetSpec::taxi(origin, vehicles, samples)),
    };
    ingest::export_csv(&records, output(out)?).map_err(data)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Ingest { input, format, store } => cmd_ingest(&input, format, &store),
        Cmd::Replay {
            input,
            format,
            store,
            cfg,
        } => cmd_replay(&input, format, store.as_deref(), &cfg),
        Cmd::QueryWindow {
            store,
            backend,
            window,
            profile,
            cfg,
        } => match backend {
            Backend::Rtree => query_window::<RTree>(&store, &window, &profile, &cfg),
            Backend::Table => query_window::<FlatTable>(&store, &window, &profile, &cfg),
        },
        Cmd::FindPath {
            store,
            backend,
            from,
            to,
            now,
            profile,
            cfg,
        } => match backend {
            Backend::Rtree => find_path::<RTree>(&store, &from, &to, now, &profile, &cfg),
            Backend::Table => find_path::<FlatTable>(&store, &from, &to, now, &profile, &cfg),
        },
        Cmd::Bench {
            suite,
            data_dir,
            seed,
            vehicles,
            samples,
            limit,
            out,
            cfg,
        } => cmd_bench(suite, data_dir.as_deref(), seed, vehicles, samples, limit, out.as_deref(), &cfg),
        Cmd::Heatmap {
            store,
            backend,
            window,
            out,
            cfg,
        } => match backend {
            Backend::Rtree => cmd_heatmap::<RTree>(&store, &window, &out, &cfg),
            Backend::Table => cmd_heatmap::<FlatTable>(&store, &window, &out, &cfg),
        },
        Cmd::Synth {
            kind,
            seed,
            n,
            step_m,
            step_t,
            vehicles,
            samples,
            origin,
            out,
        } => cmd_synth(kind, seed, n, step_m, step_t, vehicles, samples, origin, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, msg) = match &e {
                CliError::Usage(m) => ("usage", m.clone()),
                CliError::Profile(p) => ("rejected", p.to_string()),
                CliError::Data(m) => ("error", m.clone()),
            };
            eprintln!("paco: {kind}: {msg}");
            ExitCode::from(e.code())
        }
    }
}
