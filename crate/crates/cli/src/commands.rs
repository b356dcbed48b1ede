//! Subcommand bodies. Each returns an [`Outcome`] that maps to an exit code.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mtdpsf::experiments::{
    frequency_sweep, long_range_errors, long_range_oracle, spread_sweep, FreeSettings, LongRangeSettings,
};
use mtdpsf::reference::{DenseSolver, DenseState};
use mtdpsf::snapshot::{read_snapshot, write_ledger_header, write_ledger_rows, write_snapshot};
use mtdpsf::{build_filter_bank, GridSpec, LedgerRow, MultiscaleState, Potential, Propagator, RunPlan, Sink};
use num_complex::Complex64;

use crate::config::{parse_config, ConfigError, InitialConfig, PotentialConfig, SimulationConfig};

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Runtime(mtdpsf::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Runtime(e) => write!(f, "runtime error: {e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<mtdpsf::Error> for Failure {
    fn from(e: mtdpsf::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

pub type Outcome = Result<(), Failure>;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub out_dir: Option<PathBuf>,
    pub strict_assumptions: bool,
    pub scales: Option<usize>,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn load_config(path: &Path) -> Result<SimulationConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

/// Resolves a path from a config file relative to the file's directory.
fn relative_to(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Reads an `x,V` table and returns its linear interpolant.
fn potential_table(path: &Path, span: f64) -> Result<Potential, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Validation(format!("cannot read potential table {}: {e}", path.display())))?;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.chars().any(char::is_alphabetic)) {
            continue;
        }
        let parse = || -> Option<(f64, f64)> {
            let (a, b) = line.split_once(',')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        };
        let p = parse().ok_or_else(|| ConfigError::Parse {
            line: i + 1,
            message: format!("potential table {}: expected `x,V`", path.display()),
        })?;
        pts.push(p);
    }
    if pts.len() < 2 || pts.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(ConfigError::Validation(format!(
            "potential table {} needs at least two rows with increasing x",
            path.display()
        ))
        .into());
    }
    if pts[0].0 > -span || pts[pts.len() - 1].0 < span {
        return Err(ConfigError::Validation(format!(
            "potential table {} covers [{}, {}] but the grid spans [-{span}, {span}]",
            path.display(),
            pts[0].0,
            pts[pts.len() - 1].0
        ))
        .into());
    }
    Ok(Potential::from_fn(move |x| {
        let j = pts.partition_point(|p| p.0 <= x).clamp(1, pts.len() - 1);
        let (a, b) = (pts[j - 1], pts[j]);
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    }))
}

fn build_potential(cfg: &SimulationConfig, config_path: &Path, grid: &GridSpec) -> Result<Potential, Failure> {
    Ok(match &cfg.potential {
        PotentialConfig::Zero => Potential::Zero,
        PotentialConfig::Constant(v) => Potential::Constant(*v),
        PotentialConfig::LongRange {
            depth,
            width,
            bump,
            bump_width,
        } => Potential::LongRange {
            depth: *depth,
            width: *width,
            bump: *bump,
            bump_width: *bump_width,
        },
        PotentialConfig::Table(p) => potential_table(&relative_to(config_path, p), grid.half_width(grid.scales()))?,
    })
}

fn initial_state(cfg: &SimulationConfig, config_path: &Path, grid: &GridSpec) -> Result<MultiscaleState, Failure> {
    Ok(match &cfg.initial {
        InitialConfig::Gaussian { k0, sigma, x0 } => {
            let (k0, sigma, x0) = (*k0, *sigma, *x0);
            let c = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
            MultiscaleState::from_fn(grid, |x| {
                Complex64::from_polar(c * (-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp(), k0 * x)
            })
        }
        InitialConfig::Snapshot(p) => {
            let path = relative_to(config_path, p);
            let file = File::open(&path)
                .map_err(|e| ConfigError::Validation(format!("cannot read initial table {}: {e}", path.display())))?;
            read_snapshot(BufReader::new(file), grid)?
        }
    })
}

struct FileSink {
    dir: PathBuf,
    count: usize,
    ledger: BufWriter<File>,
}

impl Sink for FileSink {
    fn snapshot(&mut self, state: &MultiscaleState) -> mtdpsf::Result<()> {
        let name = format!("snapshot_{:05}.csv", self.count);
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        write_snapshot(&mut w, state)?;
        w.flush()?;
        self.count += 1;
        Ok(())
    }

    fn ledger(&mut self, rows: &[LedgerRow]) -> mtdpsf::Result<()> {
        write_ledger_rows(&mut self.ledger, rows)
    }

    fn finish(&mut self) -> mtdpsf::Result<()> {
        self.ledger.flush()?;
        Ok(())
    }
}

fn out_dir(common: &Common, cfg: Option<&SimulationConfig>) -> PathBuf {
    common
        .out_dir
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// `run`: propagate a configured state, writing snapshots, the filter
/// ledger and the final state.
pub fn run(config_path: &Path, common: &Common) -> Outcome {
    let cfg = load_config(config_path)?;
    let grid = cfg.grid_spec(common.scales)?;
    let potential = build_potential(&cfg, config_path, &grid)?;
    let psi0 = initial_state(&cfg, config_path, &grid)?;
    let bank = cfg
        .epsilon
        .map(|eps| build_filter_bank(&grid, eps))
        .transpose()
        .map_err(|e| ConfigError::Validation(format!("filter.epsilon: {e}")))?;
    let plan = RunPlan::new(&grid, cfg.delta_t, cfg.tmax, cfg.tstep)
        .map_err(|e| ConfigError::Validation(format!("time: {e}")))?
        .with_snapshot_stride(cfg.snapshot_stride);
    if let Some(note) = plan.advisory(&grid) {
        eprintln!("note: {note}");
    }
    let prop = Propagator::new(&grid, &potential, cfg.delta_t)?.strict(common.strict_assumptions);

    let dir = out_dir(common, Some(&cfg));
    let mut ledger = create(&dir, "ledger.csv")?;
    write_ledger_header(&mut ledger)?;
    let mut sink = FileSink {
        dir: dir.clone(),
        count: 0,
        ledger,
    };
    let outcome = prop.run(&psi0, &plan, bank.as_ref(), &mut sink)?;
    let mut w = create(&dir, "final.csv")?;
    write_snapshot(&mut w, &outcome.state)?;
    w.flush()?;

    let removed: f64 = outcome.ledger.iter().map(|r| r.removed_mass).sum();
    println!(
        "steps {}  t = {}  norm {:.12e} -> {:.12e}  filtered mass {:.6e}  initial defect {:.3e}",
        outcome.steps,
        outcome.state.time,
        psi0.norm(),
        outcome.state.norm(),
        removed,
        outcome.initial_defect
    );
    println!("wrote {}", dir.display());
    Ok(())
}

fn free_settings(common: &Common) -> FreeSettings {
    let mut s = FreeSettings::default();
    if let Some(m) = common.scales {
        s.scales = m;
    }
    s
}

/// `sweep-frequency`: `E(k)` for `k = 1..=21`.
pub fn sweep_frequency(common: &Common) -> Outcome {
    let ks: Vec<f64> = (1..=21).map(f64::from).collect();
    let points = frequency_sweep(&free_settings(common), &ks)?;
    let dir = out_dir(common, None);
    let mut w = create(&dir, "E_vs_k.csv")?;
    writeln!(w, "k,E")?;
    for p in &points {
        writeln!(w, "{},{:.16e}", p.param, p.error)?;
    }
    w.flush()?;
    let worst = points.iter().skip(1).map(|p| p.error).fold(0.0, f64::max);
    println!("max E over k in [2, 21]: {worst:.3e}");
    Ok(())
}

/// `sweep-spread`: `E(σ)` for `σ = 1, 2, 4, ..., 128`.
pub fn sweep_spread(common: &Common) -> Outcome {
    let sigmas: Vec<f64> = (0..8).map(|i| f64::from(1 << i)).collect();
    let points = spread_sweep(&free_settings(common), &sigmas)?;
    let dir = out_dir(common, None);
    let mut w = create(&dir, "E_vs_sigma.csv")?;
    writeln!(w, "sigma,E")?;
    for p in &points {
        writeln!(w, "{},{:.16e}", p.param, p.error)?;
    }
    w.flush()?;
    let worst = points.iter().filter(|p| p.param >= 8.0).map(|p| p.error).fold(0.0, f64::max);
    println!("max E over sigma >= 8: {worst:.3e}");
    Ok(())
}

/// `long-range`: relative error against the dense oracle for 2, 3 and 4
/// scales. The `M` column counts scales, finest included.
pub fn long_range(common: &Common, tmax: Option<f64>) -> Outcome {
    let mut s = LongRangeSettings::default();
    if let Some(t) = tmax {
        s.tmax = t;
    }
    let oracle = long_range_oracle(&s)?;
    let dir = out_dir(common, None);
    let mut w = create(&dir, "longrange_err_vs_t.csv")?;
    writeln!(w, "t,M,rel_err")?;
    for total in [2usize, 3, 4] {
        let series = long_range_errors(&s, total - 1, &oracle)?;
        let fail = series.iter().find(|e| e.rel_err > 1e-2).map(|e| e.t);
        for e in &series {
            writeln!(w, "{},{total},{:.16e}", e.t, e.rel_err)?;
        }
        match fail {
            Some(t) => println!("{total} scales: error exceeds 1e-2 at t = {t}"),
            None => println!("{total} scales: error stays below 1e-2 up to t = {}", s.tmax),
        }
    }
    w.flush()?;
    Ok(())
}

/// `oracle`: the dense split-step reference for a configuration, on
/// `[-radius, radius]` with spacing `h`. Writes `x,re,im` tables restricted
/// to the configured coarsest box.
pub fn oracle(config_path: &Path, common: &Common, radius: f64, h: f64) -> Outcome {
    let cfg = load_config(config_path)?;
    let grid = cfg.grid_spec(common.scales)?;
    let potential = build_potential(&cfg, config_path, &grid)?;
    let InitialConfig::Gaussian { k0, sigma, x0 } = cfg.initial else {
        return Err(ConfigError::Validation("the oracle needs a Gaussian initial state".into()).into());
    };
    let c = (std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let psi = move |x: f64| Complex64::from_polar(c * (-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp(), k0 * x);
    let solver = DenseSolver::new(radius, h, &potential, cfg.delta_t)?;
    let mut state = DenseState::from_fn(radius, h, psi)?;
    let total = (cfg.tmax / cfg.delta_t - 1e-9).ceil() as usize;
    let stride = if cfg.snapshot_stride == 0 { total.max(1) } else { cfg.snapshot_stride };
    let span = grid.half_width(grid.scales());
    let dir = out_dir(common, Some(&cfg));
    fs::create_dir_all(&dir)?;
    let mut done = 0;
    let mut index = 0;
    loop {
        let mut w = create(&dir, &format!("oracle_{index:05}.csv"))?;
        writeln!(w, "# t={:.16e}", state.t)?;
        writeln!(w, "x,re,im")?;
        for j in 0..state.len() {
            let x = state.abscissa(j);
            if x.abs() <= span {
                let z = state.values[j];
                writeln!(w, "{:.16e},{:.16e},{:.16e}", x, z.re, z.im)?;
            }
        }
        w.flush()?;
        index += 1;
        if done >= total {
            break;
        }
        let chunk = stride.min(total - done);
        solver.advance(&mut state, chunk)?;
        done += chunk;
    }
    println!("wrote {index} oracle tables to {}", dir.display());
    Ok(())
}
