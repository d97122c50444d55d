//! Scalar forcing inputs u(t).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("t = {t} outside sampled range [{first}, {last}]")]
    OutOfRange { t: f64, first: f64, last: f64 },
    #[error("invalid signal: {0}")]
    Invalid(String),
    #[error("cannot parse input spec '{spec}': {reason}")]
    Parse { spec: String, reason: String },
}

/// Piecewise-linear signal through `(times[i], values[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Sampled {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, SignalError> {
        if times.len() != values.len() {
            return Err(SignalError::Invalid(format!(
                "{} sample times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(SignalError::Invalid("need at least two samples".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(SignalError::Invalid("non-finite sample".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SignalError::Invalid(
                "sample times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn eval(&self, t: f64) -> Result<f64, SignalError> {
        let first = self.times[0];
        let last = *self.times.last().unwrap();
        // Stage times of the final step can overshoot the end by an ulp or two.
        let slack = 1e-12 * (1.0 + first.abs().max(last.abs()));
        if !(t >= first - slack && t <= last + slack) {
            return Err(SignalError::OutOfRange { t, first, last });
        }
        let t = t.clamp(first, last);
        let i = match self.times.partition_point(|&ti| ti <= t) {
            0 => 0,
            n if n >= self.times.len() => self.times.len() - 2,
            n => n - 1,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Constant(f64),
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    Sampled(Sampled),
}

impl InputSignal {
    pub fn constant(c: f64) -> Result<Self, SignalError> {
        if !c.is_finite() {
            return Err(SignalError::Invalid("constant must be finite".into()));
        }
        Ok(Self::Constant(c))
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Result<Self, SignalError> {
        if !(amplitude.is_finite() && phase.is_finite() && omega.is_finite()) {
            return Err(SignalError::Invalid(
                "sinusoid parameters must be finite".into(),
            ));
        }
        if omega <= 0.0 {
            return Err(SignalError::Invalid(format!(
                "omega must be > 0, got {omega}"
            )));
        }
        Ok(Self::Sinusoid {
            amplitude,
            omega,
            phase,
        })
    }

    /// `sin t`, the periodic input used throughout.
    pub fn unit_sine() -> Self {
        Self::Sinusoid {
            amplitude: 1.0,
            omega: 1.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, SignalError> {
        match self {
            Self::Constant(c) => Ok(*c),
            Self::Sinusoid {
                amplitude,
                omega,
                phase,
            } => Ok(amplitude * (omega * t + phase).sin()),
            Self::Sampled(s) => s.eval(t),
        }
    }

    /// Parses `const:<c>`, `sin:<amplitude>:<omega>[:<phase>]` or `file:<path>`.
    ///
    /// The file form reads a two-column `t,u` CSV; a non-numeric first row is
    /// treated as a header.
    pub fn parse_spec(spec: &str) -> Result<Self, SignalError> {
        let parse_err = |reason: String| SignalError::Parse {
            spec: spec.to_string(),
            reason,
        };
        let num = |s: &str| -> Result<f64, SignalError> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| parse_err(format!("'{s}': {e}")))
        };
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| parse_err("expected <kind>:<args>".into()))?;
        match kind {
            "const" => Self::constant(num(rest)?),
            "sin" => {
                let parts: Vec<&str> = rest.split(':').collect();
                match parts.as_slice() {
                    [a, w] => Self::sinusoid(num(a)?, num(w)?, 0.0),
                    [a, w, ph] => Self::sinusoid(num(a)?, num(w)?, num(ph)?),
                    _ => Err(parse_err(
                        "expected sin:<amplitude>:<omega>[:<phase>]".into(),
                    )),
                }
            }
            "file" => Self::from_csv_file(Path::new(rest)).map_err(|e| match e {
                SignalError::Parse { reason, .. } => parse_err(reason),
                other => other,
            }),
            other => Err(parse_err(format!("unknown input kind '{other}'"))),
        }
    }

    pub fn from_csv_file(path: &Path) -> Result<Self, SignalError> {
        let err = |reason: String| SignalError::Parse {
            spec: format!("file:{}", path.display()),
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| err(e.to_string()))?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| err(e.to_string()))?;
            if record.len() != 2 {
                return Err(err(format!(
                    "row {}: expected 2 columns, got {}",
                    row + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(t), Ok(u)) => {
                    times.push(t);
                    values.push(u);
                }
                _ if row == 0 => continue,
                _ => return Err(err(format!("row {}: non-numeric value", row + 1))),
            }
        }
        Ok(Self::Sampled(Sampled::new(times, values)?))
    }
}

impl FromStr for InputSignal {
    type Err = SignalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_spec(s)
    }
}

impl fmt::Display for InputSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "const:{c}"),
            Self::Sinusoid {
                amplitude,
                omega,
                phase,
            } if *phase == 0.0 => {
                write!(f, "sin:{amplitude}:{omega}")
            }
            Self::Sinusoid {
                amplitude,
                omega,
                phase,
            } => write!(f, "sin:{amplitude}:{omega}:{phase}"),
            Self::Sampled(s) => write!(f, "sampled[{} points]", s.times.len()),
        }
    }
}
