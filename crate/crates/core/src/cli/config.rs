//! Run configuration: built-in defaults, a flat `key = value` file, then flags.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Grid, InitKind, ModelParams, Perturbation};
use crate::solver::{Method, SolveOptions};

pub const KEYS: [&str; 11] = [
    "nu",
    "h",
    "n",
    "half_width",
    "grad_tol",
    "max_iter",
    "method",
    "init",
    "seed",
    "out_dir",
    "kink_width",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    Template,
    Kink,
    Perturbed,
}

impl std::str::FromStr for InitChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "template" => Ok(Self::Template),
            "kink" => Ok(Self::Kink),
            "perturbed" => Ok(Self::Perturbed),
            other => Err(Error::InvalidArgument(format!("unknown init {other:?}"))),
        }
    }
}

/// Values that may come from the file or the command line; unset fields
/// fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub nu: Option<f64>,
    pub h: Option<f64>,
    pub n: Option<usize>,
    pub half_width: Option<f64>,
    pub grad_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub method: Option<Method>,
    pub init: Option<InitChoice>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub kink_width: Option<f64>,
}

impl Overrides {
    /// `self` wins where set.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            nu: self.nu.or(base.nu),
            h: self.h.or(base.h),
            n: self.n.or(base.n),
            half_width: self.half_width.or(base.half_width),
            grad_tol: self.grad_tol.or(base.grad_tol),
            max_iter: self.max_iter.or(base.max_iter),
            method: self.method.or(base.method),
            init: self.init.or(base.init),
            seed: self.seed.or(base.seed),
            out_dir: self.out_dir.or(base.out_dir),
            kink_width: self.kink_width.or(base.kink_width),
        }
    }
}

fn parse_value<T: std::str::FromStr>(path: &Path, line: usize, key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("{key}: {e}"),
    })
}

/// Parses the flat config format. Blank lines and `#` comments are skipped;
/// unknown or repeated keys are errors.
pub fn parse_config(text: &str, path: &Path) -> Result<Overrides> {
    let mut o = Overrides::default();
    let mut seen = Vec::new();
    for (k, raw_line) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw_line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected `key = value`, got {body:?}"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("unknown key {key:?}"),
            });
        }
        if seen.contains(&key.to_string()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("key {key:?} given twice"),
            });
        }
        seen.push(key.to_string());
        match key {
            "nu" => o.nu = Some(parse_value(path, line, key, value)?),
            "h" => o.h = Some(parse_value(path, line, key, value)?),
            "n" => o.n = Some(parse_value(path, line, key, value)?),
            "half_width" => o.half_width = Some(parse_value(path, line, key, value)?),
            "grad_tol" => o.grad_tol = Some(parse_value(path, line, key, value)?),
            "max_iter" => o.max_iter = Some(parse_value(path, line, key, value)?),
            "method" => o.method = Some(parse_value(path, line, key, value)?),
            "init" => o.init = Some(parse_value(path, line, key, value)?),
            "seed" => o.seed = Some(parse_value(path, line, key, value)?),
            "out_dir" => o.out_dir = Some(PathBuf::from(value)),
            "kink_width" => o.kink_width = Some(parse_value(path, line, key, value)?),
            _ => unreachable!("key list checked above"),
        }
    }
    Ok(o)
}

pub fn read_config(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Fully resolved and validated settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: Grid,
    pub solve: SolveOptions,
    pub init: InitChoice,
    pub kink_width: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub dump_multipliers: bool,
    pub dump_green: bool,
}

impl RunConfig {
    pub const DEFAULT_NU: f64 = 1.0;
    pub const DEFAULT_H: f64 = 0.0;
    pub const DEFAULT_N: usize = 4097;
    pub const DEFAULT_HALF_WIDTH: f64 = 40.0;
    pub const DEFAULT_KINK_WIDTH: f64 = 2.0;

    pub fn resolve(o: Overrides) -> Result<Self> {
        let params = ModelParams::new(o.nu.unwrap_or(Self::DEFAULT_NU), o.h.unwrap_or(Self::DEFAULT_H))?;
        let grid = Grid::new(
            o.n.unwrap_or(Self::DEFAULT_N),
            o.half_width.unwrap_or(Self::DEFAULT_HALF_WIDTH),
        )?;
        let defaults = SolveOptions::default();
        let solve = SolveOptions {
            grad_tol: o.grad_tol.unwrap_or(defaults.grad_tol),
            max_iter: o.max_iter.unwrap_or(defaults.max_iter),
            method: o.method.unwrap_or(defaults.method),
            ..defaults
        };
        solve.validate()?;
        let kink_width = o.kink_width.unwrap_or(Self::DEFAULT_KINK_WIDTH);
        if !(kink_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kink_width must be positive, got {kink_width}"
            )));
        }
        Ok(Self {
            params,
            grid,
            solve,
            init: o.init.unwrap_or(InitChoice::Template),
            kink_width,
            seed: o.seed.unwrap_or(0),
            out_dir: o.out_dir.unwrap_or_else(|| PathBuf::from(".")),
            dump_multipliers: false,
            dump_green: false,
        })
    }

    pub fn init_kind(&self) -> InitKind {
        match self.init {
            InitChoice::Template => InitKind::Template,
            InitChoice::Kink => InitKind::Kink {
                width: self.kink_width,
            },
            InitChoice::Perturbed => InitKind::Perturbed {
                width: self.kink_width,
                bump: Perturbation::from_seed(self.seed, self.kink_width, &self.params),
            },
        }
    }
}
