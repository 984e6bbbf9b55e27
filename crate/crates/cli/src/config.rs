//! Flat `key = value` run configuration.

use std::fmt;
use std::path::PathBuf;

use isolab_core::{Grid, Potential};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_n: usize,
    pub window: (f64, f64),
    pub dt: f64,
    pub t_final: f64,
    pub potential: Potential,
    pub truncation_m: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid_n: 128,
            window: (-10.0, 10.0),
            dt: 1e-3,
            t_final: 1.0,
            potential: Potential::Wave,
            truncation_m: 8,
            seed: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Where a setting came from: a config line or a `--set` override.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.origin {
            Origin::Line(n) => write!(f, "line {n}: {}", self.message),
            Origin::Override => write!(f, "--set: {}", self.message),
            Origin::Validation => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const KEYS: [&str; 8] = [
    "grid_n",
    "window",
    "dt",
    "t_final",
    "potential",
    "truncation_m",
    "seed",
    "output_dir",
];

fn number(value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("'{value}' is not a finite number"))
}

fn window(value: &str) -> Result<(f64, f64), String> {
    let inner = value.trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((number(a)?, number(b)?)),
        _ => Err(format!("window needs two numbers, got '{value}'")),
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        match key {
            "grid_n" => self.grid_n = value.parse().map_err(|_| format!("'{value}' is not a grid size"))?,
            "window" => self.window = window(value)?,
            "dt" => self.dt = number(value)?,
            "t_final" => self.t_final = number(value)?,
            "potential" => self.potential = value.parse().map_err(|e| format!("{e}"))?,
            "truncation_m" => {
                self.truncation_m = value.parse().map_err(|_| format!("'{value}' is not a truncation"))?
            }
            "seed" => self.seed = value.parse().map_err(|_| format!("'{value}' is not a seed"))?,
            "output_dir" => {
                if value.is_empty() {
                    return Err("empty output_dir".into());
                }
                self.output_dir = PathBuf::from(value)
            }
            _ => return Err(format!("unknown key '{key}' (expected one of {})", KEYS.join(", "))),
        }
        Ok(())
    }

    /// Checks every field; errors name the offending key.
    pub fn validate(&self) -> Result<(), String> {
        Grid::new(self.grid_n).map_err(|e| format!("grid_n: {e}"))?;
        let (a, b) = self.window;
        if a >= b {
            return Err(format!("window: lower end {a} is not below upper end {b}"));
        }
        if !(self.dt > 0.0) {
            return Err(format!("dt: {} is not positive", self.dt));
        }
        if self.t_final < 0.0 {
            return Err(format!("t_final: {} is negative", self.t_final));
        }
        if self.t_final / self.dt > 1e9 {
            return Err(format!("t_final / dt = {:e} exceeds 1e9 steps", self.t_final / self.dt));
        }
        if self.truncation_m < 2 {
            return Err(format!("truncation_m: {} is below 2", self.truncation_m));
        }
        let nyquist = (self.grid_n / 2) as i64;
        if self.potential.max_wavenumber() >= nyquist {
            return Err(format!(
                "potential: mode {} does not fit a grid of {} points",
                self.potential.max_wavenumber(),
                self.grid_n
            ));
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(head, _)| head).trim()
}

fn assignment(line: &str) -> Result<(&str, &str), String> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| format!("expected 'key = value', got '{line}'"))?;
    Ok((k.trim(), v.trim()))
}

/// Parses a config file and validates the result. Keys may appear once.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

/// As [`parse_config`], then applies `key=value` overrides in order.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let origin = Origin::Line(i + 1);
        let err = |message: String| ConfigError { origin, message };
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) = assignment(line).map_err(err)?;
        if seen.contains(&key) {
            return Err(err(format!("duplicate key '{key}'")));
        }
        cfg.set(key, value).map_err(err)?;
        seen.push(key);
    }
    for o in overrides {
        let err = |message: String| ConfigError {
            origin: Origin::Override,
            message,
        };
        let (key, value) = assignment(o.trim()).map_err(err)?;
        cfg.set(key, value).map_err(err)?;
    }
    cfg.validate().map_err(|message| ConfigError {
        origin: Origin::Validation,
        message,
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_single_key() {
        let c = parse_config("grid_n = 64").unwrap();
        assert_eq!(c.grid_n, 64);
        assert_eq!(c.window, (-10.0, 10.0));
        assert_eq!(c.dt, 1e-3);
        assert_eq!(c.truncation_m, 8);
    }

    #[test]
    fn odd_grid_is_rejected() {
        let e = parse_config("grid_n = 63").unwrap_err();
        assert_eq!(e.origin, Origin::Validation);
        assert!(e.message.contains("grid_n"));
    }

    #[test]
    fn constant_preset() {
        let c = parse_config("potential = const:1.0").unwrap();
        assert_eq!(c.potential, Potential::Constant(1.0));
    }

    #[test]
    fn comments_windows_and_line_numbers() {
        let text = "# run\n\nwindow = [-6, 6]  # narrow\nseed = 4\n";
        let c = parse_config(text).unwrap();
        assert_eq!((c.window, c.seed), ((-6.0, 6.0), 4));
        let e = parse_config("dt = 1e-3\ngrid = 64\n").unwrap_err();
        assert_eq!(e.origin, Origin::Line(2));
        assert!(e.to_string().starts_with("line 2: unknown key 'grid'"));
        assert_eq!(parse_config("dt = fast").unwrap_err().origin, Origin::Line(1));
        assert_eq!(parse_config("dt = 1\ndt = 2").unwrap_err().origin, Origin::Line(2));
        assert_eq!(parse_config("window = 1").unwrap_err().origin, Origin::Line(1));
        assert_eq!(parse_config("just words").unwrap_err().origin, Origin::Line(1));
    }

    #[test]
    fn overrides_apply_last() {
        let c = parse_with_overrides("grid_n = 64", &["grid_n=32".into(), "t_final = 0.5".into()]).unwrap();
        assert_eq!((c.grid_n, c.t_final), (32, 0.5));
        let e = parse_with_overrides("", &["nope=1".into()]).unwrap_err();
        assert_eq!(e.origin, Origin::Override);
    }

    #[test]
    fn constraint_violations() {
        for text in [
            "window = 3, -3",
            "dt = 0",
            "t_final = -1",
            "dt = 1e-12\nt_final = 10",
            "truncation_m = 1",
            "grid_n = 16\npotential = rough",
        ] {
            assert_eq!(parse_config(text).unwrap_err().origin, Origin::Validation, "{text}");
        }
    }
}
