//! Scheme variants and their configuration.

use std::fmt;
use std::str::FromStr;

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::limiter::LimiterMode;
use crate::stabilization::{GradientRecovery, LinearStabilization};

/// A space discretization: Galerkin core, linear stabilization, entropy
/// viscosity and flux limiting.
///
/// Textual form: `CG`, `HO-SUPG`, `HO-VMS`, each optionally followed by `-EV`
/// and then by `-BP` or `-FL`; `LO` is the low-order LLF scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeVariant {
    pub linear: LinearStabilization,
    pub entropy_viscosity: bool,
    pub limiter: LimiterMode,
}

impl SchemeVariant {
    pub const CG: SchemeVariant = SchemeVariant {
        linear: LinearStabilization::None,
        entropy_viscosity: false,
        limiter: LimiterMode::None,
    };

    pub fn is_limited(&self) -> bool {
        self.limiter != LimiterMode::None
    }

    pub fn with_limiter(mut self, limiter: LimiterMode) -> Self {
        self.limiter = limiter;
        self
    }
}

impl fmt::Display for SchemeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.limiter == LimiterMode::LowOrder {
            return f.write_str("LO");
        }
        f.write_str(match self.linear {
            LinearStabilization::None => "CG",
            LinearStabilization::Supg => "HO-SUPG",
            LinearStabilization::Vms => "HO-VMS",
        })?;
        if self.entropy_viscosity {
            f.write_str("-EV")?;
        }
        f.write_str(match self.limiter {
            LimiterMode::None | LimiterMode::LowOrder => "",
            LimiterMode::Raw => "-RAW",
            LimiterMode::Bp => "-BP",
            LimiterMode::Fl => "-FL",
        })
    }
}

impl FromStr for SchemeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        if up == "LO" {
            return Ok(SchemeVariant::CG.with_limiter(LimiterMode::LowOrder));
        }
        let bad = || Error::InvalidConfig(format!("unknown scheme '{s}'"));
        let mut parts = up.split('-').peekable();
        let linear = match parts.next() {
            Some("CG") => LinearStabilization::None,
            Some("HO") => match parts.next() {
                Some("SUPG") => LinearStabilization::Supg,
                Some("VMS") => LinearStabilization::Vms,
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        };
        let mut v = SchemeVariant {
            linear,
            entropy_viscosity: false,
            limiter: LimiterMode::None,
        };
        if parts.peek() == Some(&"EV") {
            parts.next();
            v.entropy_viscosity = true;
        }
        match parts.next() {
            None => {}
            Some("BP") => v.limiter = LimiterMode::Bp,
            Some("FL") => v.limiter = LimiterMode::Fl,
            Some("RAW") => v.limiter = LimiterMode::Raw,
            Some(_) => return Err(bad()),
        }
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(v)
    }
}

/// Scheme variant together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub variant: SchemeVariant,
    pub basis: BasisKind,
    /// Scaling `omega` of the SUPG and VMS parameters.
    pub omega: f64,
    pub recovery: GradientRecovery,
    /// Optional upper bound on the entropy-viscosity coefficient.
    pub ev_cap: Option<f64>,
}

impl SchemeConfig {
    pub fn new(variant: SchemeVariant) -> Self {
        Self {
            variant,
            basis: BasisKind::Bernstein,
            omega: 1.0,
            recovery: GradientRecovery::LumpedAverage,
            ev_cap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant.is_limited() && self.basis != BasisKind::Bernstein {
            return Err(Error::InvalidScheme(format!(
                "{} requires the Bernstein basis",
                self.variant
            )));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "omega must be non-negative, got {}",
                self.omega
            )));
        }
        if let Some(c) = self.ev_cap {
            if !(c >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "ev_cap must be non-negative, got {c}"
                )));
            }
        }
        Ok(())
    }
}
