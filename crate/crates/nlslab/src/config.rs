//! Run configuration: plain `key = value` files with CLI flag overrides,
//! validated against the module preconditions before any compute starts.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{NlsError, Result};
use crate::observables::check_intercritical;

#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub dim: u32,
    pub p: f64,
    /// Domain half-width (dim = 1) or ball radius (dim = 3).
    pub l: f64,
    pub n: usize,
    pub dt: f64,
    /// Ground-state iteration tolerance.
    pub tol: f64,
    pub eta: f64,
    pub ladder: Vec<f64>,
    pub seed: u64,
    pub t_max: f64,
    /// Sampling stride (steps) for emitted series.
    pub stride: usize,
    /// Worker threads for the sweep; 0 means all available cores.
    pub threads: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dim: 1,
            p: 7.0,
            l: 20.0,
            n: 2048,
            dt: 5e-4,
            tol: 1e-13,
            eta: 0.05,
            ladder: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5],
            seed: 42,
            t_max: 30.0,
            stride: 10,
            threads: 0,
        }
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "dim", "p", "L", "N", "dt", "tol", "eta", "ladder", "seed", "t_max", "stride", "threads",
];

impl Config {
    /// Apply one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| {
            NlsError::Validation(format!("config key {key}: {what} (got \"{value}\")"))
        };
        match key {
            "dim" => self.dim = value.parse().map_err(|_| bad("expected 1 or 3"))?,
            "p" => self.p = value.parse().map_err(|_| bad("expected a number"))?,
            "L" => self.l = value.parse().map_err(|_| bad("expected a number"))?,
            "N" => self.n = value.parse().map_err(|_| bad("expected an integer"))?,
            "dt" => self.dt = value.parse().map_err(|_| bad("expected a number"))?,
            "tol" => self.tol = value.parse().map_err(|_| bad("expected a number"))?,
            "eta" => self.eta = value.parse().map_err(|_| bad("expected a number"))?,
            "ladder" => {
                self.ladder = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("expected comma-separated numbers"))?;
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
            "t_max" => self.t_max = value.parse().map_err(|_| bad("expected a number"))?,
            "stride" => self.stride = value.parse().map_err(|_| bad("expected an integer"))?,
            "threads" => self.threads = value.parse().map_err(|_| bad("expected an integer"))?,
            _ => {
                return Err(NlsError::Validation(format!(
                    "unknown config key \"{key}\"; known keys: {}",
                    KNOWN_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parse a `key = value` file ('#' starts a comment) into `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                NlsError::Validation(format!(
                    "{}:{}: expected \"key = value\", got \"{raw}\"",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Validate every parameter against the module preconditions.
    pub fn validate(&self) -> Result<()> {
        check_intercritical(self.dim, self.p)?;
        if !(self.l > 0.0) {
            return Err(NlsError::Validation(format!("L = {} must be positive", self.l)));
        }
        if self.n < 256 {
            return Err(NlsError::Validation(format!("N = {} under-resolved (need >= 256)", self.n)));
        }
        if self.dim == 1 && !self.n.is_power_of_two() {
            return Err(NlsError::Validation(format!(
                "N = {} must be a power of two for dim = 1",
                self.n
            )));
        }
        if !(self.dt != 0.0 && self.dt.is_finite() && self.dt.abs() <= 0.1) {
            return Err(NlsError::Validation(format!(
                "dt = {} out of range (need 0 < |dt| <= 0.1)",
                self.dt
            )));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(NlsError::Validation(format!(
                "tol = {} out of range (need 0 < tol <= 1e-6)",
                self.tol
            )));
        }
        if !(self.eta > 0.0 && self.eta <= 0.1) {
            return Err(NlsError::Validation(format!(
                "eta = {} outside (0, 0.1]",
                self.eta
            )));
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|a| !(*a > 0.0)) {
            return Err(NlsError::Validation("ladder entries must be positive".into()));
        }
        if !self.ladder.windows(2).all(|w| w[0] > w[1]) {
            return Err(NlsError::Validation("ladder must be strictly decreasing".into()));
        }
        if !(self.t_max > 0.0) {
            return Err(NlsError::Validation(format!("t_max = {} must be positive", self.t_max)));
        }
        Ok(())
    }

    /// One-line-per-key rendering for --help and summaries.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "L = {}", self.l);
        let _ = writeln!(s, "N = {}", self.n);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "tol = {}", self.tol);
        let _ = writeln!(s, "eta = {}", self.eta);
        let ladder: Vec<String> = self.ladder.iter().map(|a| format!("{a}")).collect();
        let _ = writeln!(s, "ladder = {}", ladder.join(","));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "stride = {}", self.stride);
        let _ = writeln!(s, "threads = {}", self.threads);
        s
    }
}
