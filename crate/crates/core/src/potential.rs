//! Named test potentials and inline Fourier-mode lists.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Grid, PeriodicField, C64};

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `u = c` (real constant).
    Constant(f64),
    /// `u = 1 + 0.5 exp(2 pi i x)`.
    Wave,
    /// Thirteen modes of equal magnitude with scrambled phases; every gap in `|lambda| < 6 pi` is open.
    Rich,
    /// Coefficients of magnitude `(1 + |k|)^-2` on `|k| <= 24`, scrambled phases:
    /// gaps shrink algebraically rather than exponentially.
    Rough,
    /// `u = a exp(2 pi i k x)`.
    Plane { amplitude: C64, k: i64 },
    Modes(Vec<(i64, C64)>),
}

const RICH_HALF_WIDTH: i64 = 6;
const RICH_MAGNITUDE: f64 = 0.2;
const ROUGH_HALF_WIDTH: i64 = 24;

fn golden_phase(k: i64) -> f64 {
    2.0 * PI * ((k + 7) as f64 * 0.618_033_988_749_894_9).fract()
}

impl Potential {
    pub fn modes(&self) -> Vec<(i64, C64)> {
        match self {
            Potential::Zero => vec![],
            Potential::Constant(c) => vec![(0, C64::new(*c, 0.0))],
            Potential::Wave => vec![(0, C64::new(1.0, 0.0)), (1, C64::new(0.5, 0.0))],
            Potential::Rich => (-RICH_HALF_WIDTH..=RICH_HALF_WIDTH)
                .map(|k| (k, C64::from_polar(RICH_MAGNITUDE, golden_phase(k))))
                .collect(),
            Potential::Rough => (-ROUGH_HALF_WIDTH..=ROUGH_HALF_WIDTH)
                .map(|k| (k, C64::from_polar((1.0 + k.abs() as f64).powi(-2), golden_phase(k))))
                .collect(),
            Potential::Plane { amplitude, k } => vec![(*k, *amplitude)],
            Potential::Modes(m) => m.clone(),
        }
    }

    pub fn field(&self, grid: Grid) -> Result<PeriodicField> {
        PeriodicField::from_modes(grid, &self.modes())
    }

    pub fn max_wavenumber(&self) -> i64 {
        self.modes().iter().map(|(k, _)| k.abs()).max().unwrap_or(0)
    }
}

/// Unit-L2 field with independent uniform coefficients on `|k| <= bandwidth`,
/// reproducible from `seed`.
pub fn random_band_limited(grid: Grid, bandwidth: i64, seed: u64) -> Result<PeriodicField> {
    random_decaying(grid, bandwidth, 0.0, seed)
}

/// As [`random_band_limited`], with mode `k` scaled by `(1 + |k|)^-decay`.
pub fn random_decaying(grid: Grid, bandwidth: i64, decay: f64, seed: u64) -> Result<PeriodicField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(i64, C64)> = (-bandwidth..=bandwidth)
        .map(|k| {
            let s = (1.0 + k.abs() as f64).powf(-decay);
            (k, C64::new(rng.gen_range(-1.0..1.0) * s, rng.gen_range(-1.0..1.0) * s))
        })
        .collect();
    let v = PeriodicField::from_modes(grid, &modes)?;
    let norm = v.l2();
    Ok(v.scale(C64::new(1.0 / norm, 0.0)))
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "zero"),
            Potential::Constant(c) => write!(f, "const:{c}"),
            Potential::Wave => write!(f, "wave"),
            Potential::Rich => write!(f, "rich"),
            Potential::Rough => write!(f, "rough"),
            Potential::Plane { amplitude, k } => {
                write!(f, "plane:{}:{}:{}", amplitude.re, amplitude.im, k)
            }
            Potential::Modes(m) => {
                write!(f, "modes:")?;
                for (i, (k, c)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}:{}:{}", c.re, c.im)?;
                }
                Ok(())
            }
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("bad number '{s}'")))
}

fn parse_i64(s: &str) -> Result<i64> {
    s.trim()
        .parse::<i64>()
        .map_err(|_| Error::InvalidArgument(format!("bad integer '{s}'")))
}

impl FromStr for Potential {
    type Err = Error;

    /// Accepts `zero`, `wave`, `rich`, `rough`, `const:<c>`, `plane:<re>:<im>:<k>` and
    /// `modes:<k>:<re>:<im>,<k>:<re>:<im>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("zero", None) => Ok(Potential::Zero),
            ("wave", None) => Ok(Potential::Wave),
            ("rich", None) => Ok(Potential::Rich),
            ("rough", None) => Ok(Potential::Rough),
            ("const", Some(r)) => Ok(Potential::Constant(parse_f64(r)?)),
            ("plane", Some(r)) => {
                let parts: Vec<&str> = r.split(':').collect();
                if parts.len() != 3 {
                    return Err(Error::InvalidArgument(format!("plane needs re:im:k, got '{r}'")));
                }
                Ok(Potential::Plane {
                    amplitude: C64::new(parse_f64(parts[0])?, parse_f64(parts[1])?),
                    k: parse_i64(parts[2])?,
                })
            }
            ("modes", Some(r)) => {
                let mut modes = Vec::new();
                for item in r.split(',').filter(|t| !t.trim().is_empty()) {
                    let parts: Vec<&str> = item.split(':').collect();
                    if parts.len() != 3 {
                        return Err(Error::InvalidArgument(format!("mode needs k:re:im, got '{item}'")));
                    }
                    modes.push((
                        parse_i64(parts[0])?,
                        C64::new(parse_f64(parts[1])?, parse_f64(parts[2])?),
                    ));
                }
                if modes.is_empty() {
                    return Err(Error::InvalidArgument("empty mode list".into()));
                }
                Ok(Potential::Modes(modes))
            }
            _ => Err(Error::InvalidArgument(format!("unknown potential '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_presets() {
        assert_eq!("const:1.0".parse::<Potential>().unwrap(), Potential::Constant(1.0));
        assert_eq!("wave".parse::<Potential>().unwrap(), Potential::Wave);
        let m: Potential = "modes:0:1:0, 1:0.5:0".parse().unwrap();
        assert_eq!(m.modes(), Potential::Wave.modes());
        assert!("const:x".parse::<Potential>().is_err());
        assert!("sine".parse::<Potential>().is_err());
        assert!("modes:".parse::<Potential>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for p in [
            Potential::Zero,
            Potential::Constant(1.5),
            Potential::Wave,
            Potential::Rich,
            Potential::Rough,
            Potential::Plane { amplitude: C64::new(0.5, -0.25), k: 2 },
            Potential::Modes(vec![(0, C64::new(1.0, 0.0)), (-3, C64::new(0.0, 0.1))]),
        ] {
            assert_eq!(p.to_string().parse::<Potential>().unwrap(), p);
        }
    }

    #[test]
    fn random_fields_are_seeded() {
        let g = Grid::new(64).unwrap();
        let a = random_band_limited(g, 4, 7).unwrap();
        assert_eq!(a, random_band_limited(g, 4, 7).unwrap());
        assert_ne!(a, random_band_limited(g, 4, 8).unwrap());
        assert!((a.l2() - 1.0).abs() < 1e-14);
        assert!(a.spectral_tail(0.25) < 1e-14);
        let d = random_decaying(g, 20, 4.0, 7).unwrap();
        let c = d.coefficients();
        assert!((d.l2() - 1.0).abs() < 1e-14);
        assert!(c[g.bin(20).unwrap()].norm() < 1e-4 * c.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }

    #[test]
    fn wave_samples() {
        let u = Potential::Wave.field(Grid::new(64).unwrap()).unwrap();
        let z = u.samples()[16];
        assert!((z - C64::new(1.0, 0.5)).norm() < 1e-14);
    }
}
