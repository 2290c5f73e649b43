//! Flat `key = value` run configuration with flag overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fracflow_core::flow::{Scheme, StepperConfig};
use fracflow_core::{FlowParams, GridSpec, QuadratureScheme};

pub const KEYS: [&str; 15] = [
    "dim",
    "grid",
    "alpha",
    "beta",
    "gamma",
    "cells",
    "seed",
    "dt",
    "t_end",
    "scheme",
    "sigma",
    "snapshot_every",
    "u0",
    "out_dir",
    "threads",
];

/// Raw settings before defaults are applied; later sources override earlier.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            s.set(k.trim(), v.trim()).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            bail!("unknown configuration key `{key}`");
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| anyhow!("`{key}`: cannot parse `{v}`")),
        }
    }
}

/// Whether the exponent triple satisfies `max{α, β} < γ < min{1, α+β}`.
pub fn holder_conforming(alpha: f64, beta: f64, gamma: f64) -> bool {
    alpha.max(beta) < gamma && gamma < (1.0f64).min(alpha + beta)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: FlowParams,
    pub grid: GridSpec,
    pub scheme: QuadratureScheme,
    pub stepper: StepperConfig,
    pub holder: (f64, f64, f64),
    pub seed: u64,
    pub u0: String,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

pub fn parse_scheme(s: &str) -> Result<Scheme> {
    match s {
        "imex_cn" | "imex-cn" => Ok(Scheme::ImexCn),
        "explicit_rk2" | "explicit-rk2" => Ok(Scheme::ExplicitRk2),
        _ => bail!("unknown scheme `{s}` (expected imex_cn or explicit_rk2)"),
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::ImexCn => "imex_cn",
        Scheme::ExplicitRk2 => "explicit_rk2",
    }
}

impl RunConfig {
    /// Applies the documented defaults: `n = 1`, `m = 256` (32 in 2D),
    /// `α = 0.5`, `β = 0.6`, `γ = 0.9`, `M = 4` (2 in 2D).
    pub fn resolve(s: &Settings) -> Result<Self> {
        let dim: usize = s.get("dim")?.unwrap_or(1);
        let alpha: f64 = s.get("alpha")?.unwrap_or(0.5);
        let params = FlowParams::new(alpha, dim).map_err(|e| anyhow!("{e}"))?;
        let m: usize = s.get("grid")?.unwrap_or(if dim == 1 { 256 } else { 32 });
        let grid = GridSpec::new(dim, m).map_err(|e| anyhow!("{e}"))?;
        let cells: usize = s.get("cells")?.unwrap_or(if dim == 1 { 4 } else { 2 });
        let scheme = QuadratureScheme::for_grid(grid).with_cells(cells);
        scheme.validate(dim).map_err(|e| anyhow!("{e}"))?;
        let dt: f64 = s.get("dt")?.unwrap_or(1e-3);
        let t_end: f64 = s.get("t_end")?.unwrap_or(0.1);
        let sch = parse_scheme(&s.get::<String>("scheme")?.unwrap_or_else(|| "imex_cn".into()))?;
        let sigma: f64 = s.get("sigma")?.unwrap_or(1.0);
        let every: usize = s.get("snapshot_every")?.unwrap_or(10);
        let stepper = StepperConfig::new(dt, t_end, sch)
            .and_then(|c| c.with_sigma(sigma))
            .map_err(|e| anyhow!("{e}"))?
            .with_snapshots(every);
        Ok(RunConfig {
            params,
            grid,
            scheme,
            stepper,
            holder: (alpha, s.get("beta")?.unwrap_or(0.6), s.get("gamma")?.unwrap_or(0.9)),
            seed: s.get("seed")?.unwrap_or(20240601),
            u0: s.get("u0")?.unwrap_or_else(|| "c@0.5;1@0.01".into()),
            out_dir: s.get::<String>("out_dir")?.unwrap_or_else(|| "fracflow-out".into()).into(),
            threads: s.get("threads")?,
        })
    }

    pub fn conforming(&self) -> bool {
        holder_conforming(self.holder.0, self.holder.1, self.holder.2)
    }

    /// Every resolved setting plus the quadrature node counts, in the same
    /// `key = value` format the loader reads (derived lines are comments).
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        let q = &self.scheme;
        let st = &self.stepper;
        let _ = writeln!(out, "dim = {}", self.params.dim());
        let _ = writeln!(out, "grid = {}", self.grid.points_per_axis());
        let _ = writeln!(out, "alpha = {}", self.holder.0);
        let _ = writeln!(out, "beta = {}", self.holder.1);
        let _ = writeln!(out, "gamma = {}", self.holder.2);
        let _ = writeln!(out, "cells = {}", q.lattice_cells);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "dt = {}", st.dt);
        let _ = writeln!(out, "t_end = {}", st.t_end);
        let _ = writeln!(out, "scheme = {}", scheme_name(st.scheme));
        let _ = writeln!(out, "sigma = {}", st.implicit_symbol_scale);
        let _ = writeln!(out, "snapshot_every = {}", st.snapshot_every);
        let _ = writeln!(out, "u0 = {}", self.u0);
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        if let Some(t) = self.threads {
            let _ = writeln!(out, "threads = {t}");
        }
        let _ = writeln!(out, "# holder_exponents = {}", if self.conforming() { "conforming" } else { "nonconforming" });
        let _ = writeln!(
            out,
            "# quadrature: inner_radius = {:e}, inner_radial_nodes = {}, outer_radial_nodes = {}, inner_angular_nodes = {}, cell_nodes_per_axis = {}, far_terms = {}",
            q.inner_radius, q.inner_radial_nodes, q.outer_radial_nodes, q.inner_angular_nodes, q.cell_nodes_per_axis, q.far_terms
        );
        out
    }

    pub fn write_resolved(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        let p = self.out_dir.join("config.resolved");
        std::fs::write(&p, self.resolved_text()).with_context(|| format!("writing {}", p.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&Settings::default()).unwrap();
        assert_eq!(c.params.dim(), 1);
        assert_eq!(c.grid.points_per_axis(), 256);
        assert_eq!(c.params.alpha(), 0.5);
        assert_eq!(c.holder, (0.5, 0.6, 0.9));
        assert_eq!(c.scheme.lattice_cells, 4);
        assert!(c.conforming());
    }

    #[test]
    fn rejects_bad_values() {
        let s = Settings::parse("alpha = 1.2").unwrap();
        assert!(RunConfig::resolve(&s).unwrap_err().to_string().contains("order out of range"));
        let s = Settings::parse("grid = 33").unwrap();
        assert!(RunConfig::resolve(&s).is_err());
        assert!(Settings::parse("colour = red").is_err());
        assert!(Settings::parse("just words").is_err());
    }

    #[test]
    fn nonconforming_is_flagged_not_rejected() {
        let s = Settings::parse("beta = 0.3\nalpha = 0.5 # comment\ngamma = 0.9").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        assert!(!c.conforming());
        assert!(c.resolved_text().contains("nonconforming"));
    }

    #[test]
    fn resolved_text_round_trips() {
        let s = Settings::parse("dim = 2\nalpha = 0.3\nseed = 9\nu0 = c@1;1,1@0.1").unwrap();
        let c = RunConfig::resolve(&s).unwrap();
        let again = RunConfig::resolve(&Settings::parse(&c.resolved_text()).unwrap()).unwrap();
        assert_eq!(c.resolved_text(), again.resolved_text());
    }
}
