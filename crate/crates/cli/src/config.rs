//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cascade_epr::optimize::{Constraint, Mode};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing key `{key}` required by `{command}`")]
    Missing { key: &'static str, command: Command },
    #[error("no command given (set `command` or pass --command)")]
    NoCommand,
}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Line {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Steady,
    Sweep,
    Heatmap,
    Optimize,
    Spectrum,
    Sense,
    Physmap,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Steady,
        Command::Sweep,
        Command::Heatmap,
        Command::Optimize,
        Command::Spectrum,
        Command::Sense,
        Command::Physmap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Sweep => "sweep",
            Command::Heatmap => "heatmap",
            Command::Optimize => "optimize",
            Command::Spectrum => "spectrum",
            Command::Sense => "sense",
            Command::Physmap => "physmap",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                format!("unknown command `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Command,
    Path,
    /// Frequency in Hz, strictly positive, stored in rad/s.
    Rate,
    /// Frequency in Hz, any sign, stored in rad/s.
    SignedRate,
    /// Frequency in Hz, non-negative, stored in rad/s.
    NonNegRate,
    NonNeg,
    Epsilon,
    Angle,
    Grid,
    GridHz,
    Constraints,
    Mode,
}

const KEYS: &[(&str, Kind)] = &[
    ("command", Kind::Command),
    ("output", Kind::Path),
    ("gamma_s0_hz", Kind::Rate),
    ("n_bar_s", Kind::NonNeg),
    ("gamma_m0_hz", Kind::Rate),
    ("n_bar_m", Kind::NonNeg),
    ("epsilon", Kind::Epsilon),
    ("c_s", Kind::NonNeg),
    ("c_m", Kind::NonNeg),
    ("theta_s_rad", Kind::Angle),
    ("theta_m_rad", Kind::Angle),
    ("cs_grid", Kind::Grid),
    ("cm_grid", Kind::Grid),
    ("omega_grid_hz", Kind::GridHz),
    ("constraints", Kind::Constraints),
    ("mode", Kind::Mode),
    ("omega_m_hz", Kind::Rate),
    ("gamma_sig_hz", Kind::Rate),
    ("kappa_hz", Kind::Rate),
    ("delta_hz", Kind::SignedRate),
    ("g_om_hz", Kind::NonNegRate),
    ("omega_m_bare_hz", Kind::Rate),
];

pub fn valid_keys() -> Vec<&'static str> {
    KEYS.iter().map(|(k, _)| *k).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Command(Command),
    Path(PathBuf),
    Number(f64),
    Grid(Vec<f64>),
    Constraints(Vec<Constraint>),
    Mode(Mode),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    /// Text as written, echoed into output metadata.
    pub raw: String,
    pub value: Value,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub output: Option<PathBuf>,
    pub params: BTreeMap<String, Entry>,
}

fn number(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| at(line, format!("`{key}`: `{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(at(line, format!("`{key}`: value must be finite")));
    }
    Ok(v)
}

fn range_error(line: usize, key: &str, v: f64, range: &str) -> ConfigError {
    at(line, format!("`{key}` = {v} is outside {range}"))
}

/// `start:stop:count:lin|log`.
fn grid(line: usize, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = raw.split(':').map(str::trim).collect();
    let [start, stop, count, scale] = parts[..] else {
        return Err(at(line, format!("`{key}`: expected start:stop:count:lin|log, got `{raw}`")));
    };
    let start = number(line, key, start)?;
    let stop = number(line, key, stop)?;
    let count: usize = count
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| at(line, format!("`{key}`: count `{count}` must be a positive integer")))?;
    let at_frac = |i: usize| {
        if count == 1 {
            0.0
        } else {
            i as f64 / (count - 1) as f64
        }
    };
    match scale {
        "lin" => Ok((0..count).map(|i| start + (stop - start) * at_frac(i)).collect()),
        "log" => {
            if !(start > 0.0 && stop > 0.0) {
                return Err(at(line, format!("`{key}`: log grid needs positive bounds")));
            }
            let (a, b) = (start.log10(), stop.log10());
            Ok((0..count)
                .map(|i| {
                    if i == 0 {
                        start
                    } else if i == count - 1 {
                        stop
                    } else {
                        10f64.powf(a + (b - a) * at_frac(i))
                    }
                })
                .collect())
        }
        other => Err(at(line, format!("`{key}`: scale `{other}` must be lin or log"))),
    }
}

fn parse_value(line: usize, key: &str, kind: Kind, raw: &str) -> Result<Value, ConfigError> {
    let v = match kind {
        Kind::Command => Value::Command(raw.parse().map_err(|e: String| at(line, e))?),
        Kind::Path => Value::Path(PathBuf::from(raw)),
        Kind::Rate => {
            let v = number(line, key, raw)?;
            if v <= 0.0 {
                return Err(range_error(line, key, v, "(0, inf)"));
            }
            Value::Number(TAU * v)
        }
        Kind::SignedRate => Value::Number(TAU * number(line, key, raw)?),
        Kind::NonNegRate => {
            let v = number(line, key, raw)?;
            if v < 0.0 {
                return Err(range_error(line, key, v, "[0, inf)"));
            }
            Value::Number(TAU * v)
        }
        Kind::NonNeg => {
            let v = number(line, key, raw)?;
            if v < 0.0 {
                return Err(range_error(line, key, v, "[0, inf)"));
            }
            Value::Number(v)
        }
        Kind::Epsilon => {
            let v = number(line, key, raw)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(range_error(line, key, v, "[0, 1]"));
            }
            Value::Number(v)
        }
        Kind::Angle => {
            let v = number(line, key, raw)?;
            if !(0.0..=FRAC_PI_2).contains(&v) {
                return Err(range_error(line, key, v, "[0, pi/2]"));
            }
            Value::Number(v)
        }
        Kind::Grid => Value::Grid(grid(line, key, raw)?),
        Kind::GridHz => Value::Grid(grid(line, key, raw)?.into_iter().map(|x| TAU * x).collect()),
        Kind::Constraints => {
            let mut out = Vec::new();
            for item in raw.split(',').map(str::trim) {
                let c = match item {
                    "free" => Constraint::Free,
                    "symmetric" => Constraint::Symmetric,
                    "qnd" => Constraint::Qnd,
                    other => {
                        return Err(at(
                            line,
                            format!("`{key}`: `{other}` must be free, symmetric or qnd"),
                        ))
                    }
                };
                if out.contains(&c) {
                    return Err(at(line, format!("`{key}`: `{item}` listed twice")));
                }
                out.push(c);
            }
            Value::Constraints(out)
        }
        Kind::Mode => Value::Mode(match raw {
            "unconditional" => Mode::Unconditional,
            "conditional" => Mode::Conditional,
            other => {
                return Err(at(
                    line,
                    format!("`{key}`: `{other}` must be unconditional or conditional"),
                ))
            }
        }),
    };
    Ok(v)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, raw)) = content.split_once('=') else {
            return Err(at(line, format!("expected `key = value`, got `{content}`")));
        };
        let (key, raw) = (key.trim(), raw.trim());
        if raw.is_empty() {
            return Err(at(line, format!("`{key}` has no value")));
        }
        let Some((_, kind)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(at(
                line,
                format!("unknown key `{key}`; valid keys: {}", valid_keys().join(", ")),
            ));
        };
        if let Some(prev) = cfg.params.get(key) {
            return Err(at(line, format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
        let value = parse_value(line, key, *kind, raw)?;
        match &value {
            Value::Command(c) => cfg.command = Some(*c),
            Value::Path(p) => cfg.output = Some(p.clone()),
            _ => {}
        }
        cfg.params.insert(
            key.to_string(),
            Entry {
                line,
                raw: raw.to_string(),
                value,
            },
        );
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn command(&self) -> Result<Command, ConfigError> {
        self.command.ok_or(ConfigError::NoCommand)
    }

    fn get(&self, key: &'static str) -> Result<&Value, ConfigError> {
        let command = self.command()?;
        self.params
            .get(key)
            .map(|e| &e.value)
            .ok_or(ConfigError::Missing { key, command })
    }

    pub fn number(&self, key: &'static str) -> Result<f64, ConfigError> {
        match self.get(key)? {
            Value::Number(v) => Ok(*v),
            _ => unreachable!("key kinds are fixed"),
        }
    }

    pub fn number_or(&self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        if self.params.contains_key(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    pub fn grid(&self, key: &'static str) -> Result<&[f64], ConfigError> {
        match self.get(key)? {
            Value::Grid(v) => Ok(v),
            _ => unreachable!("key kinds are fixed"),
        }
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        match self.params.get("constraints").map(|e| &e.value) {
            Some(Value::Constraints(c)) => c.clone(),
            _ => vec![Constraint::Free, Constraint::Symmetric],
        }
    }

    pub fn mode(&self) -> Mode {
        match self.params.get("mode").map(|e| &e.value) {
            Some(Value::Mode(m)) => *m,
            _ => Mode::Unconditional,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_comments() {
        let c = parse_config("# header\ngamma_s0_hz = 5000  # spin\nn_bar_s = 1\n\n").unwrap();
        assert_eq!(c.params["gamma_s0_hz"].value, Value::Number(TAU * 5000.0));
        assert_eq!(c.params["n_bar_s"].value, Value::Number(1.0));
    }

    #[test]
    fn duplicate_named_with_line() {
        let e = parse_config("gamma_s0_hz = 5000\ngamma_s0_hz = 6000").unwrap_err();
        assert!(e.to_string().starts_with("line 2:"), "{e}");
        assert!(e.to_string().contains("duplicate"));
    }

    #[test]
    fn epsilon_range() {
        let e = parse_config("epsilon = 1.5").unwrap_err();
        assert!(e.to_string().contains("[0, 1]"), "{e}");
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let e = parse_config("n_bar_s = 1\nfoo = 2").unwrap_err().to_string();
        assert!(e.starts_with("line 2:"));
        for k in valid_keys() {
            assert!(e.contains(k));
        }
    }

    #[test]
    fn malformed_and_bad_number() {
        assert!(parse_config("just text").unwrap_err().to_string().starts_with("line 1:"));
        assert!(parse_config("\nc_s = abc").unwrap_err().to_string().starts_with("line 2:"));
    }

    #[test]
    fn grids() {
        let c = parse_config("cs_grid = 1:1e4:5:log\ncm_grid = 0:1:3:lin").unwrap();
        assert_eq!(c.params["cs_grid"].value, Value::Grid(vec![1.0, 10.0, 100.0, 1000.0, 1e4]));
        assert_eq!(c.params["cm_grid"].value, Value::Grid(vec![0.0, 0.5, 1.0]));
        assert!(parse_config("cs_grid = 0:1:3:log").is_err());
        assert!(parse_config("cs_grid = 1:2:0:lin").is_err());
        assert!(parse_config("cs_grid = 1:2:3").is_err());
    }

    #[test]
    fn command_and_lists() {
        let c = parse_config("command = sweep\nconstraints = symmetric, free\nmode = conditional").unwrap();
        assert_eq!(c.command, Some(Command::Sweep));
        assert_eq!(c.constraints(), vec![Constraint::Symmetric, Constraint::Free]);
        assert_eq!(c.mode(), Mode::Conditional);
        assert!(parse_config("command = plot").is_err());
    }
}
