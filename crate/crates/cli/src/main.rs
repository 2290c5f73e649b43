//! `fracflow`: curvature evaluation, symbol tables, flow runs and the
//! property-check suite.
//!
//! Exit status: 0 success, 1 usage or input error, 2 blow-up, 3 a
//! verification check failed.

mod config;
mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fracflow_core::flow::{simulate, Stepper, Termination};
use fracflow_core::kernel::Curvature;
use fracflow_core::symbol::{mikhlin_sup, normalized_polar, DirectSymbol, FrozenSlope, ProbeGrid};
use fracflow_core::verify::{all_passed, run_suite, CheckReport, VerifyConfig, SUITE};
use fracflow_core::{CurvatureForm, QuadratureScheme};
use serde::Serialize;

use config::{RunConfig, Settings};
use io::{csv_row, initial_field, snapshot_text};

#[derive(Parser, Debug)]
#[command(name = "fracflow", version, about = "Nonlocal mean curvature flow of periodic graphs")]
struct Cli {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (falls back to FRACFLOW_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Points per axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Lattice cells M resolved by direct quadrature.
    #[arg(long, global = true)]
    cells: Option<usize>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate H_α at every grid node.
    Curvature {
        /// Snapshot file or term list such as `c@0.5;1@0.01;3@0.002@1.2`.
        #[arg(long)]
        u0: Option<String>,
        #[arg(long, value_enum, default_value_t = FormArg::Both)]
        form: FormArg,
    },
    /// Tabulate the frozen-slope symbol.
    Symbol {
        /// Slope a₁[,a₂].
        #[arg(long, default_value = "0")]
        slope: String,
        #[arg(long, default_value_t = 16)]
        kmax: i64,
        #[arg(long, value_enum, default_value_t = MethodArg::Polar)]
        method: MethodArg,
        /// Also write a Mikhlin report.
        #[arg(long)]
        mikhlin: bool,
    },
    /// Run the flow.
    Simulate {
        #[arg(long)]
        u0: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Run property checks.
    Verify {
        /// `all` or one check name.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Where to write the JSON summary.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormArg {
    Nmc,
    Pv,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Direct,
    Polar,
    Both,
}

const EXIT_BLOWUP: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    let c = &cli.common;
    s.set_opt("alpha", c.alpha);
    s.set_opt("dim", c.dim);
    s.set_opt("grid", c.grid);
    s.set_opt("cells", c.cells);
    s.set_opt("beta", c.beta);
    s.set_opt("gamma", c.gamma);
    s.set_opt("seed", c.seed);
    s.set_opt("out_dir", c.out_dir.as_ref().map(|p| p.display().to_string()));
    let env_threads = std::env::var("FRACFLOW_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    s.set_opt("threads", cli.threads.or(env_threads));
    match &cli.cmd {
        Cmd::Curvature { u0, .. } => s.set_opt("u0", u0.clone()),
        Cmd::Simulate { u0, dt, t_end, scheme, sigma, snapshot_every } => {
            s.set_opt("u0", u0.clone());
            s.set_opt("dt", *dt);
            s.set_opt("t_end", *t_end);
            s.set_opt("scheme", scheme.clone());
            s.set_opt("sigma", *sigma);
            s.set_opt("snapshot_every", *snapshot_every);
        }
        _ => {}
    }
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn coord_header(dim: usize) -> &'static str {
    if dim == 1 {
        "x"
    } else {
        "x1,x2"
    }
}

fn curvature(cfg: &RunConfig, form: FormArg) -> Result<u8> {
    let u = initial_field(&cfg.u0, cfg.grid, cfg.seed)?;
    let eng = Curvature::new(cfg.grid, cfg.params, cfg.scheme).map_err(|e| anyhow!("{e}"))?;
    let nmc = (form != FormArg::Pv).then(|| eng.curvature(&u, CurvatureForm::GradientCorrected)).transpose().map_err(|e| anyhow!("{e}"))?;
    let pv = (form != FormArg::Nmc).then(|| eng.curvature(&u, CurvatureForm::PrincipalValue)).transpose().map_err(|e| anyhow!("{e}"))?;
    let dim = cfg.grid.dim();
    let mut text = format!("{},u{}{}\n", coord_header(dim), if nmc.is_some() { ",h_nmc" } else { "" }, if pv.is_some() { ",h_pv" } else { "" });
    for i in 0..cfg.grid.len() {
        let x = cfg.grid.node(i);
        let mut row: Vec<f64> = x[..dim].to_vec();
        row.push(u.values()[i]);
        if let Some(h) = &nmc {
            row.push(h[i]);
        }
        if let Some(h) = &pv {
            row.push(h[i]);
        }
        text.push_str(&csv_row(&row));
    }
    write(&cfg.out_dir.join("curvature.csv"), &text)?;
    let tail = eng.tail_bound(&u);
    println!("curvature: {} nodes, tail bound {tail:.3e}", cfg.grid.len());
    if let (Some(a), Some(b)) = (&nmc, &pv) {
        let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("max |h_nmc - h_pv| = {d:.3e}");
    }
    Ok(0)
}

#[derive(Serialize)]
struct MikhlinJson {
    slope: Vec<f64>,
    inf_abs: f64,
    sup_abs: f64,
    derivative_sups: Vec<f64>,
    m_emp: f64,
    m_emp_refined: f64,
    drift: f64,
}

fn symbol(cfg: &RunConfig, slope: &str, kmax: i64, method: MethodArg, mikhlin: bool) -> Result<u8> {
    let dim = cfg.grid.dim();
    let a: Vec<f64> = slope.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| anyhow!("bad slope `{slope}`"))?;
    let a = match (dim, a.len()) {
        (1, 1) | (2, 2) => a,
        (2, 1) if a[0] == 0.0 => vec![0.0, 0.0],
        _ => bail!("slope must have {dim} component(s)"),
    };
    if kmax < 1 {
        bail!("kmax must be positive");
    }
    let fs = FrozenSlope::new(&a).map_err(|e| anyhow!("{e}"))?;
    let p = &cfg.params;
    let direct = (method != MethodArg::Polar)
        .then(|| DirectSymbol::new(p, &fs, &QuadratureScheme::resolving(dim, kmax as usize).with_cells(cfg.scheme.lattice_cells)))
        .transpose()
        .map_err(|e| anyhow!("{e}"))?;
    let mut header = String::from(if dim == 1 { "k" } else { "k1,k2" });
    match method {
        MethodArg::Direct => header.push_str(",m_a,P_a\n"),
        MethodArg::Polar => header.push_str(",m_a,P_a\n"),
        MethodArg::Both => header.push_str(",m_direct,m_polar,P_a\n"),
    }
    let mut text = header;
    let jr = if dim == 2 { -kmax..=kmax } else { 0..=0 };
    for j in jr {
        for i in -kmax..=kmax {
            if (i == 0 && j == 0) || i * i + j * j > kmax * kmax {
                continue;
            }
            let x = [i as f64, j as f64];
            let r = x[0].hypot(x[1]).powf(1.0 + p.alpha());
            let pn = normalized_polar(&x[..dim], p, &fs).map_err(|e| anyhow!("{e}"))?;
            let mut row: Vec<f64> = x[..dim].to_vec();
            match (method, &direct) {
                (MethodArg::Direct, Some(d)) => {
                    let m = d.eval([i, j]);
                    row.extend([m, m / r]);
                }
                (MethodArg::Both, Some(d)) => row.extend([d.eval([i, j]), r * pn, pn]),
                _ => row.extend([r * pn, pn]),
            }
            text.push_str(&csv_row(&row));
        }
    }
    write(&cfg.out_dir.join("symbol.csv"), &text)?;
    if mikhlin {
        let probe = ProbeGrid::default();
        let rep = mikhlin_sup(&fs, p, &probe);
        let fine = mikhlin_sup(&fs, p, &probe.refined());
        let j = MikhlinJson {
            slope: a.clone(),
            inf_abs: rep.inf_abs,
            sup_abs: rep.sup_abs,
            derivative_sups: rep.derivative_sups.clone(),
            m_emp: rep.m_emp,
            m_emp_refined: fine.m_emp,
            drift: (fine.m_emp / rep.m_emp - 1.0).abs(),
        };
        write(&cfg.out_dir.join("mikhlin.json"), &serde_json::to_string_pretty(&j)?)?;
        println!("mikhlin: m_emp = {:.6}, refined drift {:.2e}", j.m_emp, j.drift);
    }
    println!("symbol: wrote {}", cfg.out_dir.join("symbol.csv").display());
    Ok(0)
}

#[derive(Serialize)]
struct SimulateSummary {
    termination: &'static str,
    steps: usize,
    t_final: f64,
    c_limit: Option<f64>,
    converged: bool,
    fit_rate: Option<f64>,
    fit_r2: Option<f64>,
    stability_budget: f64,
    within_budget: bool,
}

fn simulate_cmd(cfg: &RunConfig) -> Result<u8> {
    let u0 = initial_field(&cfg.u0, cfg.grid, cfg.seed)?;
    let stepper = Stepper::new(cfg.grid, cfg.params, cfg.scheme, cfg.stepper).map_err(|e| anyhow!("{e}"))?;
    if !stepper.within_budget() {
        eprintln!("warning: dt = {} exceeds the explicit stability budget {:.3e}", cfg.stepper.dt, stepper.stability_budget());
    }
    let tr = simulate(&u0, &cfg.stepper, &cfg.params, &cfg.scheme).map_err(|e| anyhow!("{e}"))?;
    let dim = cfg.grid.dim();
    let mut text = String::from("t,sup_u");
    for ax in 0..dim {
        text.push_str(&format!(",sup_dx{}", ax + 1));
    }
    text.push_str(",sup_dt,mean,besov_1.5\n");
    for i in 0..tr.len() {
        let mut row = vec![tr.times[i], tr.sup_norms[i]];
        row.extend(tr.grad_sup_norms.iter().map(|g| g[i]));
        row.push(tr.dt_sup_norms[i]);
        row.push(tr.means[i]);
        row.push(tr.besov.as_ref().map_or(f64::NAN, |b| b[i]));
        text.push_str(&csv_row(&row));
    }
    write(&cfg.out_dir.join("trace.csv"), &text)?;
    for (n, (t, f)) in tr.snapshots.iter().enumerate() {
        write(&cfg.out_dir.join(format!("snapshot_{n:05}.txt")), &snapshot_text(f, cfg.params.alpha(), *t))?;
    }
    let blew_up = tr.termination == Termination::BlowUp;
    let summary = SimulateSummary {
        termination: if blew_up { "blow-up" } else { "completed" },
        steps: tr.len() - 1,
        t_final: *tr.times.last().unwrap_or(&0.0),
        c_limit: tr.c_limit,
        converged: tr.c_limit.is_some(),
        fit_rate: tr.fit.map(|f| f.rate),
        fit_r2: tr.fit.map(|f| f.r2),
        stability_budget: stepper.stability_budget(),
        within_budget: stepper.within_budget(),
    };
    write(&cfg.out_dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    if blew_up {
        eprintln!("blow-up detected at t = {}", summary.t_final);
        return Ok(EXIT_BLOWUP);
    }
    match tr.c_limit {
        Some(c) => println!("completed {} steps; C(u0) = {c:.12}", summary.steps),
        None => println!("completed {} steps; C(u0) not converged", summary.steps),
    }
    Ok(0)
}

#[derive(Serialize)]
struct ReportJson<'a> {
    name: &'a str,
    paper_anchor: &'a str,
    status: &'a str,
    measured: f64,
    tolerance: f64,
    details: Vec<(&'a str, f64)>,
    note: Option<&'a str>,
}

fn report_json(r: &CheckReport) -> ReportJson<'_> {
    ReportJson {
        name: &r.name,
        paper_anchor: &r.paper_anchor,
        status: r.status.as_str(),
        measured: r.measured,
        tolerance: r.tolerance,
        details: r.details.iter().map(|(k, v)| (k.as_str(), *v)).collect(),
        note: r.note.as_deref(),
    }
}

fn verify(cfg: &RunConfig, suite: &str, json: Option<&Path>) -> Result<u8> {
    let names: Vec<&str> = if suite == "all" {
        SUITE.to_vec()
    } else if SUITE.contains(&suite) {
        vec![suite]
    } else {
        bail!("unknown suite `{suite}`; expected all or one of {}", SUITE.join(", "));
    };
    let mut vc = VerifyConfig::new(cfg.params.alpha(), cfg.params.dim()).map_err(|e| anyhow!("{e}"))?;
    vc.grid = cfg.grid;
    vc.cells = cfg.scheme.lattice_cells;
    vc.beta = cfg.holder.1;
    vc.seed = cfg.seed;
    let mut reports = Vec::new();
    for n in names {
        let r = run_suite(n, &vc).map_err(|e| anyhow!("{n}: {e}"))?;
        println!("{:20} {:7} measured {:.3e} tolerance {:.1e}{}", r.name, r.status.as_str(), r.measured, r.tolerance, r.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default());
        reports.push(r);
    }
    let body = serde_json::to_string_pretty(&reports.iter().map(report_json).collect::<Vec<_>>())?;
    write(&cfg.out_dir.join("verify.json"), &body)?;
    if let Some(p) = json {
        write(p, &body)?;
    }
    Ok(if all_passed(&reports) { 0 } else { EXIT_VERIFY })
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = RunConfig::resolve(&settings(&cli)?)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    if !cfg.conforming() {
        eprintln!("note: Hölder exponents (α, β, γ) = {:?} are nonconforming", cfg.holder);
    }
    cfg.write_resolved()?;
    match &cli.cmd {
        Cmd::Curvature { form, .. } => curvature(&cfg, *form),
        Cmd::Symbol { slope, kmax, method, mikhlin } => symbol(&cfg, slope, *kmax, *method, *mikhlin),
        Cmd::Simulate { .. } => simulate_cmd(&cfg),
        Cmd::Verify { suite, json } => verify(&cfg, suite, json.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
