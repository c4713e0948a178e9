//! Run specification: a TOML document with `seed`, `[solver]`, `[initial]`,
//! `[forcing]` and `[output]`. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//!
//! [solver]
//! mu = 1.0
//! T = 0.5
//! dt = 1e-3
//! K = 6
//! M = 100
//!
//! [initial]
//! kind = "random-smooth"
//! decay = 4.0
//! amplitude = 0.05
//!
//! [forcing]
//! kind = "zero"
//!
//! [output]
//! dir = "out"
//! stride = 50
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{Parity, SolverConfig};

use super::manufactured::CASES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub seed: u64,
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant {
        #[serde(default)]
        value: [f64; 3],
    },
    /// `amplitude · ∇ψ` with `ψ = cos(k·x)` or `sin(k·x)`, plus a constant drift.
    GradientMode {
        k: [i32; 3],
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "cos")]
        parity: Parity,
        #[serde(default)]
        drift: [f64; 3],
    },
    /// Gaussian coefficients with standard deviation `amplitude · |k|^{-decay}`,
    /// projected onto rot-free fields.
    RandomSmooth {
        #[serde(default = "four")]
        decay: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        mean: [f64; 3],
    },
    /// As `random-smooth` with standard deviation `amplitude · e^{-rate |k|}`.
    RandomAnalytic {
        #[serde(default = "one")]
        rate: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        mean: [f64; 3],
    },
    Manufactured {
        name: String,
    },
    /// A 2-form stored as JSON (the snapshot / decompose format).
    File {
        path: PathBuf,
    },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Constant { value: [0.0; 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    Constant {
        value: [f64; 3],
    },
    Manufactured {
        name: String,
    },
    /// Steady 2-form stored as JSON.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Snapshot every `stride` steps; `0` disables snapshots.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            stride: default_stride(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

fn cos() -> Parity {
    Parity::Cos
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_stride() -> usize {
    10
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        self.solver
            .validate()
            .map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("solver.{m}")),
                other => other,
            })?;
        let known = |name: &str, field: &str| {
            if CASES.contains(&name) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{field}: unknown manufactured case `{name}` (known: {})",
                    CASES.join(", ")
                )))
            }
        };
        match &self.initial {
            InitialSpec::Manufactured { name } => known(name, "initial.name")?,
            InitialSpec::GradientMode { k, .. } if k == &[0, 0, 0] => {
                return Err(Error::InvalidConfig("initial.k must be nonzero".into()))
            }
            InitialSpec::RandomSmooth { decay, .. } if !(decay.is_finite() && *decay >= 0.0) => {
                return Err(Error::InvalidConfig("initial.decay must be non-negative".into()))
            }
            InitialSpec::RandomAnalytic { rate, .. } if !(rate.is_finite() && *rate >= 0.0) => {
                return Err(Error::InvalidConfig("initial.rate must be non-negative".into()))
            }
            _ => {}
        }
        if let ForcingSpec::Manufactured { name } = &self.forcing {
            known(name, "forcing.name")?;
        }
        Ok(())
    }

    /// Name of the manufactured case when both data and forcing come from it.
    pub fn manufactured_name(&self) -> Option<&str> {
        match (&self.initial, &self.forcing) {
            (InitialSpec::Manufactured { name: a }, ForcingSpec::Manufactured { name: b }) if a == b => Some(a),
            _ => None,
        }
    }

    /// Canonical TOML form; parsing it yields an equal spec.
    pub fn to_canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Parses and validates a run specification.
pub fn parse_config(text: &str) -> Result<RunSpec> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let spec: RunSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::InvalidConfig(format!("{path}: {}", inner.message()))
    })?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[solver]\nmu = 1.0\nK = 4\ndt = 0.01\nT = 0.1\nM = 20\n";

    #[test]
    fn minimal_gets_defaults() {
        let spec = parse_config(MINIMAL).unwrap();
        assert_eq!(spec.seed, 0);
        assert!(spec.solver.dealias);
        assert_eq!(spec.initial, InitialSpec::default());
        assert_eq!(spec.forcing, ForcingSpec::Zero);
        assert_eq!(spec.output.stride, 10);
        assert_eq!(spec.solver.blowup_factor, 1e6);
    }

    #[test]
    fn negative_mu_names_field() {
        let err = parse_config(&MINIMAL.replace("mu = 1.0", "mu = -1.0")).unwrap_err();
        assert!(err.to_string().contains("solver.mu"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let err = parse_config(&format!("{MINIMAL}nu = 3\n")).unwrap_err();
        assert!(err.to_string().contains("solver"), "{err}");
        let err = parse_config(&format!("{MINIMAL}[initial]\nkind = \"random-smooth\"\ndecya = 2\n")).unwrap_err();
        assert!(err.to_string().contains("initial"), "{err}");
    }

    #[test]
    fn canonical_round_trip() {
        let text = format!(
            "seed = 3\n{MINIMAL}[initial]\nkind = \"gradient-mode\"\nk = [1, -1, 0]\nparity = \"sin\"\n[forcing]\nkind = \"manufactured\"\nname = \"nonlinear\"\n"
        );
        let spec = parse_config(&text).unwrap();
        let canon = spec.to_canonical().unwrap();
        let again = parse_config(&canon).unwrap();
        assert_eq!(spec, again);
        assert_eq!(canon, again.to_canonical().unwrap());
    }

    #[test]
    fn unknown_case_rejected() {
        let text = format!("{MINIMAL}[forcing]\nkind = \"manufactured\"\nname = \"nope\"\n");
        assert!(parse_config(&text).unwrap_err().to_string().contains("forcing.name"));
    }
}
