//! Flat `key=value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use entropy_cg::physics::benchmark;
use entropy_cg::solver::{cells_for_dofs, SchemeConfig, SchemeVariant, DEFAULT_CFL};
use entropy_cg::stabilization::GradientRecovery;
use entropy_cg::time_integration::Integrator;
use entropy_cg::{BasisKind, BenchmarkProblem};

use crate::error::CliError;

/// Every recognised key; each one mirrors a command-line flag.
pub const KEYS: [&str; 16] = [
    "preset",
    "scheme",
    "degree",
    "cells",
    "dofs",
    "dofs_list",
    "omega",
    "cfl",
    "integrator",
    "final_time",
    "output",
    "every",
    "seed",
    "basis",
    "recovery",
    "ev_cap",
];

/// Short preset names accepted next to the benchmark names.
pub fn preset_name(s: &str) -> &str {
    match s {
        "sbr" => "solid_body_rotation",
        "bl" => "buckley_leverett",
        "burgers" => "burgers1d",
        "threebody" => "adv1d_threebody",
        other => other,
    }
}

/// Ordered key/value pairs; later insertions override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut m = ConfigMap::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key=value, got '{line}'", no + 1))
            })?;
            m.set(k.trim(), v.trim())?;
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `key`; `cells` and `dofs` replace each other.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        match key {
            "cells" => {
                self.values.remove("dofs");
            }
            "dofs" => {
                self.values.remove("cells");
            }
            _ => {}
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("invalid {key} '{v}': {e}")))
            })
            .transpose()
    }
}

/// Nodes per direction for `dofs` total nodes in `dimension` directions.
pub fn per_direction(dofs: usize, dimension: usize) -> Result<usize, CliError> {
    if dimension == 1 {
        return Ok(dofs);
    }
    let n = (dofs as f64).sqrt().round() as usize;
    if n * n != dofs {
        return Err(CliError::Config(format!(
            "dofs {dofs} is not a square number"
        )));
    }
    Ok(n)
}

/// Fully resolved configuration of a run or convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub preset: String,
    pub scheme: SchemeVariant,
    pub degree: usize,
    /// Elements per direction.
    pub cells: usize,
    /// Total node counts of a convergence study.
    pub dofs_list: Vec<usize>,
    pub omega: f64,
    pub cfl: f64,
    pub integrator: Integrator,
    pub final_time: f64,
    pub output: PathBuf,
    /// Snapshot cadence in steps; 0 writes the initial and final states only.
    pub every: usize,
    pub seed: u64,
    pub basis: BasisKind,
    pub recovery: GradientRecovery,
    pub ev_cap: Option<f64>,
}

impl RunConfig {
    pub fn from_map(m: &ConfigMap) -> Result<Self, CliError> {
        let preset = preset_name(
            m.get("preset")
                .ok_or_else(|| CliError::Config("missing preset".into()))?,
        )
        .to_string();
        let problem = benchmark(&preset).map_err(|e| CliError::Config(e.to_string()))?;
        let scheme: SchemeVariant = m
            .parsed("scheme")?
            .unwrap_or_else(|| "HO-VMS-EV".parse().expect("valid scheme"));
        let degree: usize = m.parsed("degree")?.unwrap_or(1);
        if degree == 0 {
            return Err(CliError::Config("degree must be at least 1".into()));
        }
        let cells = match (m.parsed::<usize>("cells")?, m.parsed::<usize>("dofs")?) {
            (Some(c), _) => c,
            (None, Some(d)) => {
                let n = per_direction(d, problem.dimension)?;
                cells_for_dofs(n, degree).map_err(|e| CliError::Config(e.to_string()))?
            }
            (None, None) => 16,
        };
        if cells == 0 {
            return Err(CliError::Config("cells must be positive".into()));
        }
        let dofs_list = match m.get("dofs_list") {
            None | Some("") => Vec::new(),
            Some(s) => s
                .split(',')
                .map(|t| {
                    t.trim().parse::<usize>().map_err(|e| {
                        CliError::Config(format!("invalid dofs_list entry '{t}': {e}"))
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        let integrator = match m.parsed::<Integrator>("integrator")? {
            Some(i) => i,
            None => Integrator::SspRk3,
        };
        let cfg = RunConfig {
            preset,
            scheme,
            degree,
            cells,
            dofs_list,
            omega: m.parsed("omega")?.unwrap_or(1.0),
            cfl: m.parsed("cfl")?.unwrap_or(DEFAULT_CFL),
            integrator,
            final_time: m.parsed("final_time")?.unwrap_or(problem.final_time),
            output: m
                .get("output")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
            every: m.parsed("every")?.unwrap_or(0),
            seed: m.parsed("seed")?.unwrap_or(7),
            basis: m.parsed("basis")?.unwrap_or(BasisKind::Bernstein),
            recovery: m
                .parsed("recovery")?
                .unwrap_or(GradientRecovery::LumpedAverage),
            ev_cap: m.parsed("ev_cap")?,
        };
        cfg.scheme_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(cfg.cfl > 0.0 && cfg.cfl.is_finite()) {
            return Err(CliError::Config(format!(
                "cfl must be positive, got {}",
                cfg.cfl
            )));
        }
        if !(cfg.final_time >= 0.0 && cfg.final_time.is_finite()) {
            return Err(CliError::Config(format!(
                "final_time must be non-negative, got {}",
                cfg.final_time
            )));
        }
        Ok(cfg)
    }

    pub fn problem(&self) -> BenchmarkProblem {
        benchmark(&self.preset).expect("preset validated on construction")
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        let mut c = SchemeConfig::new(self.scheme);
        c.basis = self.basis;
        c.omega = self.omega;
        c.recovery = self.recovery;
        c.ev_cap = self.ev_cap;
        c
    }

    /// Text that [`ConfigMap::parse`] turns back into this configuration.
    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# entropy-cg {}", env!("CARGO_PKG_VERSION"));
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("preset", self.preset.clone());
        kv("scheme", self.scheme.to_string());
        kv("degree", self.degree.to_string());
        kv("cells", self.cells.to_string());
        kv(
            "dofs_list",
            self.dofs_list
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("omega", format!("{:?}", self.omega));
        kv("cfl", format!("{:?}", self.cfl));
        kv("integrator", self.integrator.to_string());
        kv("final_time", format!("{:?}", self.final_time));
        kv("output", self.output.display().to_string());
        kv("every", self.every.to_string());
        kv("seed", self.seed.to_string());
        kv("basis", self.basis.to_string());
        kv("recovery", self.recovery.to_string());
        if let Some(c) = self.ev_cap {
            kv("ev_cap", format!("{c:?}"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::from_map(&ConfigMap::parse(text)?)
    }

    #[test]
    fn defaults_and_presets() {
        let c = cfg("preset=sbr\nscheme=HO-VMS-EV-BP\ndegree=1\ndofs=16384").unwrap();
        assert_eq!(c.preset, "solid_body_rotation");
        assert_eq!(c.cells, 128);
        assert_eq!(c.integrator, Integrator::SspRk3);
        assert_eq!(c.final_time, 1.0);
        let c = cfg("preset=adv1d_cos").unwrap();
        assert_eq!(c.scheme.to_string(), "HO-VMS-EV");
        assert_eq!(c.integrator, Integrator::SspRk3);
    }

    #[test]
    fn manifest_roundtrip() {
        let c = cfg("# comment\npreset=kpp\nscheme=HO-VMS-EV-FL\ndegree=2\ncells=5\nomega=0.1\ncfl=0.3\nev_cap=2.5\ndofs_list=8,16")
            .unwrap();
        let back = cfg(&c.to_manifest()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn later_values_override() {
        let mut m = ConfigMap::parse("preset=kpp\ncells=4\ndegree=2").unwrap();
        m.set("dofs", "144").unwrap();
        assert_eq!(m.get("cells"), None);
        assert_eq!(RunConfig::from_map(&m).unwrap().cells, 6);
    }

    #[test]
    fn invalid_configs() {
        for text in [
            "scheme=CG",
            "preset=nope",
            "preset=kpp\nscheme=HO-XYZ",
            "preset=kpp\ndofs=150",
            "preset=kpp\ndegree=2\ndofs=121",
            "preset=kpp\nscheme=HO-VMS-FL\nbasis=lagrange",
            "preset=kpp\ncfl=-1",
            "preset=kpp\ncolour=red",
            "preset kpp",
        ] {
            assert!(matches!(cfg(text), Err(CliError::Config(_))), "{text}");
        }
    }
}
