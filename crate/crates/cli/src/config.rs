//! Run configuration files.
//!
//! The format is flat `section.key = value` lines. `#` starts a comment,
//! blank lines are ignored and every key must be known.
//!
//! ```text
//! grid.L = 51.2
//! grid.kmax = 20.94
//! grid.M = 3
//! time.delta_t = 0.03125
//! time.Tmax = 10
//! initial.k0 = 4
//! initial.sigma = 2
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use mtdpsf::{FilterParams, GridSpec, Potential, RunPlan};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Validation(String),
}

/// How the grid is given: by box size and band, or by lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSize {
    Band { l: f64, kmax: f64 },
    Lattice { n: usize, delta_x: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub size: GridSize,
    pub scales: usize,
    pub delta1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialConfig {
    Zero,
    Constant(f64),
    LongRange {
        depth: f64,
        width: f64,
        bump: f64,
        bump_width: f64,
    },
    /// Two-column `x,V` CSV, linearly interpolated.
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConfig {
    Gaussian { k0: f64, sigma: f64, x0: f64 },
    /// A snapshot file in the format the `run` command writes.
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub grid: GridConfig,
    /// `None` runs without phase-space filters.
    pub epsilon: Option<f64>,
    pub delta_t: f64,
    pub tstep: Option<f64>,
    pub tmax: f64,
    pub potential: PotentialConfig,
    pub initial: InitialConfig,
    pub snapshot_stride: usize,
    pub out_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "grid.L",
    "grid.kmax",
    "grid.N",
    "grid.delta_x",
    "grid.M",
    "grid.delta1",
    "filter.epsilon",
    "filter.enabled",
    "time.delta_t",
    "time.Tstep",
    "time.Tmax",
    "potential.preset",
    "potential.value",
    "potential.depth",
    "potential.width",
    "potential.bump",
    "potential.bump_width",
    "potential.table",
    "initial.k0",
    "initial.sigma",
    "initial.x0",
    "initial.table",
    "output.snapshot_stride",
    "output.out_dir",
];

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.values.get(key)
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| ConfigError::Parse {
                line: *line,
                message: format!("cannot parse {key} = {v:?}"),
            }),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.parse(key)?
            .ok_or_else(|| ConfigError::Parse {
                line: 0,
                message: format!("missing required key {key}"),
            })
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `section.key = value`, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key {key:?}"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: format!("empty value for {key}"),
            });
        }
        if values.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key {key}"),
            });
        }
    }
    Ok(Entries { values })
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<SimulationConfig, ConfigError> {
    let e = tokenize(text)?;

    let size = match (e.has("grid.L") || e.has("grid.kmax"), e.has("grid.N") || e.has("grid.delta_x")) {
        (true, true) => {
            return Err(ConfigError::Validation(
                "give the grid either as grid.L and grid.kmax or as grid.N and grid.delta_x, not both".into(),
            ))
        }
        (false, true) => GridSize::Lattice {
            n: e.required("grid.N")?,
            delta_x: e.required("grid.delta_x")?,
        },
        _ => GridSize::Band {
            l: e.required("grid.L")?,
            kmax: e.required("grid.kmax")?,
        },
    };
    let grid = GridConfig {
        size,
        scales: e.parse("grid.M")?.unwrap_or(0),
        delta1: e.parse("grid.delta1")?.unwrap_or(1e-8),
    };

    let enabled: bool = e.parse("filter.enabled")?.unwrap_or(true);
    let epsilon = if enabled {
        Some(e.parse("filter.epsilon")?.unwrap_or(1e-8))
    } else {
        None
    };

    let potential = match e.raw("potential.preset").map(|(l, v)| (*l, v.as_str())) {
        _ if e.has("potential.table") => {
            if e.has("potential.preset") {
                return Err(ConfigError::Validation(
                    "potential.table and potential.preset are mutually exclusive".into(),
                ));
            }
            PotentialConfig::Table(e.required::<String>("potential.table")?.into())
        }
        None | Some((_, "zero")) => PotentialConfig::Zero,
        Some((_, "constant")) => PotentialConfig::Constant(e.required("potential.value")?),
        Some((_, "long_range")) => {
            let Potential::LongRange {
                depth,
                width,
                bump,
                bump_width,
            } = Potential::long_range()
            else {
                unreachable!("long_range preset is a LongRange potential")
            };
            PotentialConfig::LongRange {
                depth: e.parse("potential.depth")?.unwrap_or(depth),
                width: e.parse("potential.width")?.unwrap_or(width),
                bump: e.parse("potential.bump")?.unwrap_or(bump),
                bump_width: e.parse("potential.bump_width")?.unwrap_or(bump_width),
            }
        }
        Some((line, other)) => {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown potential preset {other:?} (expected zero, constant or long_range)"),
            })
        }
    };

    let initial = if e.has("initial.table") {
        InitialConfig::Snapshot(e.required::<String>("initial.table")?.into())
    } else {
        InitialConfig::Gaussian {
            k0: e.parse("initial.k0")?.unwrap_or(0.0),
            sigma: e.required("initial.sigma")?,
            x0: e.parse("initial.x0")?.unwrap_or(0.0),
        }
    };

    let cfg = SimulationConfig {
        grid,
        epsilon,
        delta_t: e.required("time.delta_t")?,
        tstep: e.parse("time.Tstep")?,
        tmax: e.required("time.Tmax")?,
        potential,
        initial,
        snapshot_stride: e.parse("output.snapshot_stride")?.unwrap_or(0),
        out_dir: e.parse::<String>("output.out_dir")?.map(PathBuf::from),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl SimulationConfig {
    /// The grid this configuration describes, with an optional override of
    /// the number of coarse scales.
    pub fn grid_spec(&self, scales: Option<usize>) -> Result<GridSpec, ConfigError> {
        let m = scales.unwrap_or(self.grid.scales);
        let built = match self.grid.size {
            GridSize::Band { l, kmax } => mtdpsf::build_grid(l, kmax, m, self.grid.delta1),
            GridSize::Lattice { n, delta_x } => GridSpec::from_samples(n, delta_x, m, self.grid.delta1),
        };
        built.map_err(|e| ConfigError::Validation(format!("grid: {e}")))
    }

    fn box_and_band(&self) -> (f64, f64) {
        match self.grid.size {
            GridSize::Band { l, kmax } => (l, kmax),
            // Same conventions as GridSpec::from_samples.
            GridSize::Lattice { n, delta_x } => (0.5 * n as f64 * delta_x, 2.0 * std::f64::consts::PI / (3.0 * delta_x)),
        }
    }

    /// Checks every constraint that can be checked without running.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Validation(msg));
        if !(self.delta_t > 0.0) {
            return bad(format!("time.delta_t must be positive, got {}", self.delta_t));
        }
        if !(self.tmax >= 0.0) {
            return bad(format!("time.Tmax must be non-negative, got {}", self.tmax));
        }
        if let InitialConfig::Gaussian { sigma, .. } = self.initial {
            if !(sigma > 0.0) {
                return bad(format!("initial.sigma must be positive, got {sigma}"));
            }
        }
        // Filter margins first: they depend only on L and kmax and give the
        // more specific message for small boxes.
        if let Some(eps) = self.epsilon {
            let (l, kmax) = self.box_and_band();
            FilterParams::for_box(l, kmax, eps).map_err(|e| ConfigError::Validation(format!("filter.epsilon: {e}")))?;
        }
        let grid = self.grid_spec(None)?;
        RunPlan::new(&grid, self.delta_t, self.tmax, self.tstep)
            .map_err(|e| ConfigError::Validation(format!("time: {e}")))?;
        Ok(())
    }
}
