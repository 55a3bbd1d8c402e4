//! Run configuration shared by the command-line front end and the examples.
//!
//! A config file holds `key=value` lines with `#` comments; keys are the long
//! flag names without dashes. Flags given on the command line override the
//! file.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{eigenframe, IntMatrix2};
use crate::leaf::LeafKind;
use crate::surgery::{SurgeryProfile, MAX_RADIUS};

/// Which suspension the `suspension` command examines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuspensionExample {
    /// Full shift on two symbols.
    Shift,
    /// The order-preserving Cantor homeomorphism with no dense orbit.
    H,
}

impl fmt::Display for SuspensionExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuspensionExample::Shift => "shift",
            SuspensionExample::H => "h",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub matrix: IntMatrix2,
    pub r: f64,
    pub mu: f64,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub eps_attract: f64,
    /// Invariance tolerance; defaults to two pixel widths.
    pub eps: Option<f64>,
    pub eps_density: f64,
    pub length: f64,
    pub leaf: LeafKind,
    pub samples: usize,
    pub seed: u64,
    pub n_max: u32,
    pub example: SuspensionExample,
    pub depth: usize,
    pub horizon: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            matrix: IntMatrix2::lattes_example(),
            r: SurgeryProfile::DEFAULT_R,
            mu: SurgeryProfile::DEFAULT_MU,
            width: 512,
            height: 512,
            max_iter: 5000,
            eps_attract: 1e-3,
            eps: None,
            eps_density: 0.05,
            length: 200.0,
            leaf: LeafKind::Unstable,
            samples: 1000,
            seed: 42,
            n_max: 6,
            example: SuspensionExample::Shift,
            depth: 6,
            horizon: 10_000,
            out: PathBuf::from("out"),
        }
    }
}

/// Every recognised key, in echo order.
pub const KEYS: [&str; 18] = [
    "matrix",
    "r",
    "mu",
    "size",
    "max-iter",
    "eps-attract",
    "eps",
    "eps-density",
    "length",
    "leaf",
    "samples",
    "seed",
    "n-max",
    "example",
    "depth",
    "horizon",
    "out",
    "config",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Input(format!("{key}={value}: {e}")))
}

/// Parses `WxH`.
pub fn parse_size(value: &str) -> Result<(usize, usize)> {
    let (w, h) = value.trim().split_once(['x', 'X']).ok_or_else(|| {
        Error::Input(format!("size={value}: expected WIDTHxHEIGHT, e.g. 512x512"))
    })?;
    Ok((parse("size", w)?, parse("size", h)?))
}

/// Reads `key=value` lines, skipping blanks and `#` comments.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Input(format!(
                "config line {}: expected key=value, got {raw:?}",
                lineno + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(Error::Input(format!(
                "config line {}: unknown key {key:?}",
                lineno + 1
            )));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text)
}

impl RunConfig {
    /// Builds a config from `key → value` entries over the defaults and
    /// validates it.
    pub fn from_entries(entries: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = RunConfig::default();
        for (key, value) in entries {
            let v = value.as_str();
            match key.as_str() {
                "matrix" => c.matrix = v.parse()?,
                "r" => c.r = parse(key, v)?,
                "mu" => c.mu = parse(key, v)?,
                "size" => (c.width, c.height) = parse_size(v)?,
                "max-iter" => c.max_iter = parse(key, v)?,
                "eps-attract" => c.eps_attract = parse(key, v)?,
                "eps" => c.eps = Some(parse(key, v)?),
                "eps-density" => c.eps_density = parse(key, v)?,
                "length" => c.length = parse(key, v)?,
                "leaf" => {
                    c.leaf = match v {
                        "unstable" => LeafKind::Unstable,
                        "stable" => LeafKind::Stable,
                        _ => {
                            return Err(Error::Input(format!(
                                "leaf={v}: expected unstable or stable"
                            )))
                        }
                    }
                }
                "samples" => c.samples = parse(key, v)?,
                "seed" => c.seed = parse(key, v)?,
                "n-max" => c.n_max = parse(key, v)?,
                "example" => {
                    c.example = match v {
                        "shift" => SuspensionExample::Shift,
                        "h" => SuspensionExample::H,
                        _ => return Err(Error::Input(format!("example={v}: expected shift or h"))),
                    }
                }
                "depth" => c.depth = parse(key, v)?,
                "horizon" => c.horizon = parse(key, v)?,
                "out" => c.out = PathBuf::from(v),
                "config" => {}
                _ => return Err(Error::Input(format!("unknown key {key:?}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Module preconditions that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Input(msg));
        eigenframe(&self.matrix)?;
        if !(0.0..=MAX_RADIUS).contains(&self.r) {
            return Err(Error::InvalidProfile(format!(
                "r={} must lie in [0, {MAX_RADIUS}]",
                self.r
            )));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::InvalidProfile(format!(
                "mu={} must lie strictly between 0 and 1",
                self.mu
            )));
        }
        if self.width < 16 || self.height < 16 || self.width > 16384 || self.height > 16384 {
            return bad(format!(
                "size={}x{}: each side must be between 16 and 16384",
                self.width, self.height
            ));
        }
        if self.max_iter == 0 {
            return bad("max-iter must be at least 1".into());
        }
        for (key, v) in [
            ("eps-attract", Some(self.eps_attract)),
            ("eps", self.eps),
            ("eps-density", Some(self.eps_density)),
            ("length", Some(self.length)),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{key}={v} must be positive"));
                }
            }
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if !(1..=8).contains(&self.n_max) {
            return bad(format!("n-max={} must lie in 1..=8", self.n_max));
        }
        if !(1..=16).contains(&self.depth) {
            return bad(format!("depth={} must lie in 1..=16", self.depth));
        }
        if self.horizon < 1 << self.depth {
            return bad(format!(
                "horizon={} must be at least 2^depth = {}",
                self.horizon,
                1usize << self.depth
            ));
        }
        Ok(())
    }

    /// Invariance tolerance: the configured value or two pixel widths.
    pub fn invariance_eps(&self) -> f64 {
        self.eps.unwrap_or(2.0 / self.width as f64)
    }

    pub fn profile(&self) -> Result<SurgeryProfile> {
        SurgeryProfile::new(self.r, self.mu)
    }

    /// `# key=value` lines describing the effective configuration.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for (key, value) in self.entries() {
            s.push_str(&format!("# {key}={value}\n"));
        }
        s
    }

    /// The effective configuration as `key → value`, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            (
                "matrix",
                format!(
                    "{},{},{},{}",
                    self.matrix.a, self.matrix.b, self.matrix.c, self.matrix.d
                ),
            ),
            ("r", self.r.to_string()),
            ("mu", self.mu.to_string()),
            ("size", format!("{}x{}", self.width, self.height)),
            ("max-iter", self.max_iter.to_string()),
            ("eps-attract", self.eps_attract.to_string()),
            ("eps", self.invariance_eps().to_string()),
            ("eps-density", self.eps_density.to_string()),
            ("length", self.length.to_string()),
            ("leaf", self.leaf.as_str().to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
            ("n-max", self.n_max.to_string()),
            ("example", self.example.to_string()),
            ("depth", self.depth.to_string()),
            ("horizon", self.horizon.to_string()),
            ("out", self.out.display().to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn file_syntax() {
        let m = parse_config_text("# comment\nr = 0.1  # trailing\n\nsize=64x32\nmax_iter=10\n")
            .unwrap();
        let c = RunConfig::from_entries(&m).unwrap();
        assert_eq!((c.r, c.width, c.height, c.max_iter), (0.1, 64, 32, 10));
        assert!(parse_config_text("nonsense").is_err());
        assert!(parse_config_text("colour=red").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::default();
        let m = parse_config_text(&c.echo().replace("# ", "")).unwrap();
        let back = RunConfig::from_entries(&m).unwrap();
        assert_eq!(back.echo(), c.echo());
    }

    #[test]
    fn rejects_bad_values() {
        for (k, v) in [
            ("mu", "1.5"),
            ("size", "8x8"),
            ("matrix", "2,0,0,1"),
            ("n-max", "9"),
            ("leaf", "sideways"),
        ] {
            let m = BTreeMap::from([(k.to_string(), v.to_string())]);
            assert!(RunConfig::from_entries(&m).is_err(), "{k}={v}");
        }
    }
}
