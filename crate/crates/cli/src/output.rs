//! Output directory handling and plain-text artifacts.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use entropy_cg::solver::{DiagnosticRecord, Discretization, EocRow, SimulationResult};

use crate::error::CliError;

pub const LOCK_FILE: &str = ".lock";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    /// Creates `path` and takes its lock. A directory that holds a lock or
    /// the manifest of an earlier run is refused.
    pub fn claim(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path)
            .map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))?;
        let lock = path.join(LOCK_FILE);
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    CliError::Config(format!(
                        "output directory {} is locked by another run",
                        path.display()
                    ))
                } else {
                    CliError::io(&format!("cannot create {}", lock.display()), e)
                }
            })?;
        let _ = writeln!(f, "{}", std::process::id());
        let dir = OutputDir {
            path: path.to_path_buf(),
            lock,
        };
        if path.join(MANIFEST_FILE).exists() {
            return Err(CliError::Config(format!(
                "output directory {} already holds a run",
                path.display()
            )));
        }
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = self.file(name);
        fs::write(&p, contents)
            .map_err(|e| CliError::io(&format!("cannot write {}", p.display()), e))
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

pub fn diagnostics_csv(records: &[DiagnosticRecord]) -> String {
    let mut s = String::from("step,time,dt,mass,entropy,min,max,min_production,max_production,idp_fraction,entropy_fix_fraction\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.step,
            r.time,
            r.dt,
            r.mass,
            r.entropy,
            r.min,
            r.max,
            r.min_production,
            r.max_production,
            r.idp_fraction,
            r.entropy_fix_fraction
        );
    }
    s
}

/// Final ranges of the coefficients and nodal values, errors and worst-case
/// diagnostics as `key=value` lines.
pub fn summary_text(
    res: &SimulationResult,
    coefficients: (f64, f64),
    values: (f64, f64),
) -> String {
    let s = &res.summary;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("time", format!("{:e}", res.time));
    kv("steps", s.steps.to_string());
    kv("rhs_evaluations", s.rhs_evaluations.to_string());
    kv("final_min", format!("{:e}", coefficients.0));
    kv("final_max", format!("{:e}", coefficients.1));
    kv("final_value_min", format!("{:e}", values.0));
    kv("final_value_max", format!("{:e}", values.1));
    kv("run_min", format!("{:e}", s.min));
    kv("run_max", format!("{:e}", s.max));
    kv(
        "l1_error",
        res.l1_error.map_or("none".into(), |e| format!("{e:e}")),
    );
    kv("initial_mass", format!("{:e}", s.initial_mass));
    kv("initial_entropy", format!("{:e}", s.initial_entropy));
    kv(
        "max_relative_mass_drift",
        format!("{:e}", s.max_relative_mass_drift),
    );
    kv(
        "max_relative_entropy_increase",
        format!("{:e}", s.max_relative_entropy_increase),
    );
    kv(
        "ev_max_relative_defect",
        s.ev_max_relative_defect
            .map_or("none".into(), |e| format!("{e:e}")),
    );
    kv("limited_pairs", s.limiter.pairs.to_string());
    kv("idp_active", s.limiter.idp_active.to_string());
    kv("entropy_active", s.limiter.entropy_active.to_string());
    kv(
        "additional_diffusion_pairs",
        s.limiter.additional_diffusion_pairs.to_string(),
    );
    kv("min_dt", format!("{:e}", s.min_dt));
    out
}

/// Structured grid: a header `nx ny p xmin ymin xmax ymax`, then one row per
/// node with its coordinates, basis coefficient and the value of `u_h` there.
pub fn grid_snapshot(disc: &Discretization, u: &[f64]) -> String {
    let mesh = &disc.mesh;
    let [nx, ny] = mesh.nodes_per_direction();
    let (lo, hi) = (mesh.lower(), mesh.upper());
    let values = disc.node_values(u);
    let mut s = String::new();
    let _ = writeln!(s, "# nx ny p xmin ymin xmax ymax");
    let _ = writeln!(
        s,
        "{nx} {ny} {} {:e} {:e} {:e} {:e}",
        mesh.degree(),
        lo[0],
        lo[1],
        hi[0],
        hi[1]
    );
    let _ = writeln!(s, "# x y coefficient value");
    for (i, x) in mesh.coords().iter().enumerate() {
        let _ = writeln!(s, "{:e} {:e} {:e} {:e}", x[0], x[1], u[i], values[i]);
    }
    s
}

pub fn eoc_csv(rows: &[EocRow]) -> String {
    let mut s = String::from("dofs,l1_error,eoc\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:e},{}",
            r.dofs,
            r.l1_error,
            r.eoc.map_or(String::new(), |e| format!("{e:.4}"))
        );
    }
    s
}

pub fn eoc_table_text(rows: &[EocRow]) -> String {
    let mut s = format!("{:>8}  {:>12}  {:>6}\n", "N_h", "L1 error", "EOC");
    for r in rows {
        let _ = writeln!(
            s,
            "{:>8}  {:>12.3e}  {:>6}",
            r.dofs,
            r.l1_error,
            r.eoc.map_or(String::new(), |e| format!("{e:.2}"))
        );
    }
    s
}
