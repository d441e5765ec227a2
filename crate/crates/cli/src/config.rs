//! Flat `key = value` run configuration.
//!
//! Unknown keys are rejected so a typo cannot silently fall back to a
//! default, and `dump` writes every effective value back out; the run
//! directory stores that dump next to the results.

use slabflow_core::{CoreError, GridSpec64, Result};
use std::path::Path;

/// Thresholds enforced at startup and on every step of the marching loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest allowed |det grad eta - 1| anywhere in the fluid layers.
    pub det: f64,
    /// Relative drift of any layer volume from its reference value.
    pub volume: f64,
    /// L2 residual of the Lagrangian divergence constraint.
    pub divergence: f64,
    /// Contact-face L2 mismatch between fluid velocity and slab velocity.
    pub interface: f64,
    /// Startup gate on the trace groups of the compatibility report
    /// (interface velocity, wall no-slip). Derivative-order groups are
    /// logged but not gated; presets null them only to leading order.
    pub compatibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            det: 1e-3,
            volume: 1e-2,
            divergence: 1e-8,
            interface: 1e-6,
            compatibility: 1e-9,
        }
    }
}

/// Everything a run needs, with defaults suitable for the standard
/// decay experiment on a 16^3 stack.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_horizontal: usize,
    pub n_vertical: usize,
    /// Top layer width; the bottom layer and the slab are fixed at width 1.
    pub d: f64,
    pub alpha: f64,
    /// Time step; 0 means half the finest vertical spacing.
    pub dt: f64,
    pub t_end: f64,
    /// Target for the combined initial-data norm; 0 skips normalization.
    pub epsilon_scale: f64,
    /// Preset name: `zero`, `interface-shear` or `random-smooth`.
    pub initial_data: String,
    /// Horizontal wavenumber of the shear preset.
    pub shear_mode: usize,
    /// Weight of the horizontal-mean component; this is what pushes the
    /// final state to a nonzero horizontal translation.
    pub shear_mean: f64,
    pub lambda: f64,
    pub c_dissipation: f64,
    /// Write a diagnostics row every this many steps.
    pub output_every: usize,
    /// Write a checkpoint every this many steps.
    pub checkpoint_every: usize,
    pub seed: u64,
    /// Continue past a failed compatibility gate.
    pub allow_incompatible: bool,
    /// Quadratic slack passed to the decay-hypothesis check in the summary.
    pub lemma_slack: f64,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_horizontal: 16,
            n_vertical: 16,
            d: 1.0,
            alpha: 1.0,
            dt: 0.0,
            t_end: 20.0,
            epsilon_scale: 1e-2,
            initial_data: "interface-shear".into(),
            shear_mode: 1,
            shear_mean: 0.3,
            lambda: 1e-2,
            c_dissipation: 10.0,
            output_every: 1,
            checkpoint_every: 100,
            seed: 7,
            allow_incompatible: false,
            lemma_slack: 0.0,
            tolerances: Tolerances::default(),
        }
    }
}

pub const PRESET_NAMES: [&str; 3] = ["zero", "interface-shear", "random-smooth"];

fn bad(key: &str, value: &str) -> CoreError {
    CoreError::Config(format!("bad value `{value}` for key `{key}`"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

impl RunConfig {
    /// Parse `key = value` lines; `#` starts a comment, blank lines are
    /// skipped, every key is optional and no key may repeat.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CoreError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key.to_string()) {
                return Err(CoreError::Config(format!("key `{key}` appears twice")));
            }
            seen.push(key.to_string());
            match key {
                "n_horizontal" => cfg.n_horizontal = parse_num(key, value)?,
                "n_vertical" => cfg.n_vertical = parse_num(key, value)?,
                "d" => cfg.d = parse_num(key, value)?,
                "alpha" => cfg.alpha = parse_num(key, value)?,
                "dt" => cfg.dt = parse_num(key, value)?,
                "t_end" => cfg.t_end = parse_num(key, value)?,
                "epsilon_scale" => cfg.epsilon_scale = parse_num(key, value)?,
                "initial_data" => cfg.initial_data = value.to_string(),
                "shear_mode" => cfg.shear_mode = parse_num(key, value)?,
                "shear_mean" => cfg.shear_mean = parse_num(key, value)?,
                "lambda" => cfg.lambda = parse_num(key, value)?,
                "c_dissipation" => cfg.c_dissipation = parse_num(key, value)?,
                "output_every" => cfg.output_every = parse_num(key, value)?,
                "checkpoint_every" => cfg.checkpoint_every = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "allow_incompatible" => cfg.allow_incompatible = parse_bool(key, value)?,
                "lemma_slack" => cfg.lemma_slack = parse_num(key, value)?,
                "tolerance.det" => cfg.tolerances.det = parse_num(key, value)?,
                "tolerance.volume" => cfg.tolerances.volume = parse_num(key, value)?,
                "tolerance.divergence" => cfg.tolerances.divergence = parse_num(key, value)?,
                "tolerance.interface" => cfg.tolerances.interface = parse_num(key, value)?,
                "tolerance.compatibility" => {
                    cfg.tolerances.compatibility = parse_num(key, value)?
                }
                _ => return Err(CoreError::Config(format!("unknown key `{key}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(CoreError::Config(m));
        if !(self.d > 0.0 && self.d <= 1.0) {
            return err(format!("top layer width must lie in (0, 1], got {}", self.d));
        }
        if !(self.alpha > 0.0) {
            return err(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.dt >= 0.0) {
            return err(format!("dt must be nonnegative, got {}", self.dt));
        }
        if !(self.t_end > 0.0) {
            return err(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.epsilon_scale >= 0.0) {
            return err(format!(
                "epsilon_scale must be nonnegative, got {}",
                self.epsilon_scale
            ));
        }
        if !PRESET_NAMES.contains(&self.initial_data.as_str()) {
            return err(format!(
                "unknown initial_data `{}`; presets are {}",
                self.initial_data,
                PRESET_NAMES.join(", ")
            ));
        }
        if self.shear_mode == 0 {
            return err("shear_mode must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.c_dissipation > 0.0) {
            return err("lambda and c_dissipation must be positive".into());
        }
        if self.output_every == 0 || self.checkpoint_every == 0 {
            return err("output_every and checkpoint_every must be at least 1".into());
        }
        if !(self.lemma_slack >= 0.0) {
            return err(format!(
                "lemma_slack must be nonnegative, got {}",
                self.lemma_slack
            ));
        }
        let t = &self.tolerances;
        for (label, v) in [
            ("tolerance.det", t.det),
            ("tolerance.volume", t.volume),
            ("tolerance.divergence", t.divergence),
            ("tolerance.interface", t.interface),
            ("tolerance.compatibility", t.compatibility),
        ] {
            if !(v > 0.0) {
                return err(format!("{label} must be positive, got {v}"));
            }
        }
        // Surfaces grid-size errors at parse time rather than mid-setup.
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec64> {
        GridSpec64::new(self.n_horizontal, self.n_vertical, self.d)
    }

    /// The effective time step: explicit `dt`, or half the finest vertical
    /// spacing when dt = 0.
    pub fn step_size(&self) -> f64 {
        if self.dt > 0.0 {
            self.dt
        } else {
            0.5 * self.d.min(1.0) / self.n_vertical as f64
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.step_size()).round().max(1.0) as usize
    }

    /// Every effective value, in a form `parse` accepts back.
    pub fn dump(&self) -> String {
        let t = &self.tolerances;
        format!(
            "n_horizontal = {}\nn_vertical = {}\nd = {:e}\nalpha = {:e}\n\
             dt = {:e}\nt_end = {:e}\nepsilon_scale = {:e}\n\
             initial_data = {}\nshear_mode = {}\nshear_mean = {:e}\n\
             lambda = {:e}\nc_dissipation = {:e}\n\
             output_every = {}\ncheckpoint_every = {}\nseed = {}\n\
             allow_incompatible = {}\nlemma_slack = {:e}\n\
             tolerance.det = {:e}\ntolerance.volume = {:e}\n\
             tolerance.divergence = {:e}\ntolerance.interface = {:e}\n\
             tolerance.compatibility = {:e}\n",
            self.n_horizontal,
            self.n_vertical,
            self.d,
            self.alpha,
            self.dt,
            self.t_end,
            self.epsilon_scale,
            self.initial_data,
            self.shear_mode,
            self.shear_mean,
            self.lambda,
            self.c_dissipation,
            self.output_every,
            self.checkpoint_every,
            self.seed,
            self.allow_incompatible,
            self.lemma_slack,
            t.det,
            t.volume,
            t.divergence,
            t.interface,
            t.compatibility,
        )
    }
}
