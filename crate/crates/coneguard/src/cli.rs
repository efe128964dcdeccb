//! Command-line front end. [`run`] returns the process exit code so the
//! commands can be driven in-process.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use coneguard_core::akkt::{self, AkktConfig, Certification, RecoveryVerdict, Rejection};
use coneguard_core::alm::{self, AlmConfig, AlmStatus};
use coneguard_core::classify::{classify, BlockStatus, ClassifyError, IndexClassification, DEFAULT_TOL_GAP};
use coneguard_core::cone::DEFAULT_TOL_ACT;
use coneguard_core::cq::{self, CqConfig, CqKind, CqReport, CqVerdict, CqWitness, SubsetOutcome};
use coneguard_core::problem::{embed_block_diagonal, evaluate, ConeValue, ConicProgram, EvaluatedPoint};

use crate::problem_file::{load_problem, write_problem};
use crate::report::Report;
use crate::trace_file::{fmt_real, load_trace, write_trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

pub const SEED_ENV: &str = "CONEGUARD_SEED";

#[derive(Debug, Parser)]
#[command(name = "coneguard", version, about = "Constraint-qualification diagnostics for multifold SOC/SDP programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the index sets at a point.
    Classify {
        #[command(flatten)]
        at: PointArgs,
    },
    /// Check constraint qualifications at a point.
    Check {
        #[command(flatten)]
        at: PointArgs,
        /// nondegeneracy, robinson, rcpld, crsc or all
        #[arg(long, default_value = "all")]
        cq: String,
        #[arg(long, default_value_t = coneguard_core::sampling::DEFAULT_RADIUS)]
        radius: f64,
        #[arg(long, default_value_t = coneguard_core::sampling::DEFAULT_SAMPLES)]
        samples: usize,
        /// Overridden by CONEGUARD_SEED.
        #[arg(long, default_value_t = coneguard_core::sampling::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = coneguard_core::certificates::DEFAULT_TOL_RANK)]
        tol_rank: f64,
        #[arg(long, default_value_t = coneguard_core::certificates::DEFAULT_TOL_CERT)]
        tol_cert: f64,
        #[arg(long, default_value_t = coneguard_core::certificates::DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Run the augmented Lagrangian method and write its trace.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Starting point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        alm: AlmArgs,
    },
    /// Decide whether a trace is an AKKT sequence for a point.
    Certify {
        #[command(flatten)]
        at: PointArgs,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = akkt::DEFAULT_AKKT_TOL)]
        tol: f64,
    },
    /// Recover KKT multipliers, or an unbounded witness, from a trace.
    Recover {
        #[command(flatten)]
        at: PointArgs,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = akkt::DEFAULT_AKKT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = akkt::DEFAULT_M_CAP)]
        m_cap: f64,
    },
    /// Rewrite all PSD blocks as one block-diagonal PSD block.
    EmbedDiag {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = DEFAULT_TOL_ACT)]
    pub tol_act: f64,
    #[arg(long, default_value_t = DEFAULT_TOL_GAP)]
    pub tol_gap: f64,
}

#[derive(Debug, Args)]
pub struct AlmArgs {
    #[arg(long, default_value_t = AlmConfig::default().rho0)]
    pub rho0: f64,
    #[arg(long, default_value_t = AlmConfig::default().gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = AlmConfig::default().max_outer)]
    pub max_outer: usize,
    #[arg(long, default_value_t = AlmConfig::default().max_inner)]
    pub max_inner: usize,
    #[arg(long, default_value_t = AlmConfig::default().stop_tol)]
    pub stop_tol: f64,
    #[arg(long, default_value_t = AlmConfig::default().lambda_cap)]
    pub lambda_cap: f64,
    #[arg(long, default_value_t = AlmConfig::default().mu_cap)]
    pub mu_cap: f64,
}

impl AlmArgs {
    fn config(&self) -> AlmConfig {
        AlmConfig {
            rho0: self.rho0,
            gamma: self.gamma,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            stop_tol: self.stop_tol,
            lambda_cap: self.lambda_cap,
            mu_cap: self.mu_cap,
            ..AlmConfig::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_USAGE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

pub fn parse_point(csv: &str) -> Result<Vec<f64>, CliError> {
    csv.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| CliError::Input(format!("bad coordinate `{s}` in point `{csv}`")))
        })
        .collect()
}

/// `CONEGUARD_SEED` if set, otherwise the flag value.
pub fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn reals(v: &[f64]) -> String {
    v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(" ")
}

fn short(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(", ")
}

fn names(prog: &ConicProgram, idx: &[usize]) -> String {
    idx.iter().map(|&j| prog.blocks()[j].name.as_str()).collect::<Vec<_>>().join(",")
}

fn eq_names(prog: &ConicProgram, idx: &[usize]) -> String {
    idx.iter().map(|&i| prog.equalities()[i].name.as_str()).collect::<Vec<_>>().join(",")
}

struct Loaded {
    prog: ConicProgram,
    x: Vec<f64>,
    pt: EvaluatedPoint,
}

fn load_at(at: &PointArgs) -> Result<Loaded, CliError> {
    let prog = load_problem(&at.problem).map_err(input)?;
    let x = parse_point(&at.point)?;
    let pt = evaluate(&prog, &x).map_err(input)?;
    Ok(Loaded { prog, x, pt })
}

fn echo_inputs(r: &mut Report, problem: &Path, point: &[f64]) {
    r.push("input.problem", problem.display());
    r.push("input.point", reals(point));
}

/// Named index sets, in display order.
fn index_sets(cls: &IndexClassification) -> [(&'static str, Vec<usize>); 7] {
    [
        ("I_int", cls.soc_interior()),
        ("I_B", cls.soc_boundary()),
        ("A", cls.soc_scalar_active()),
        ("I_0", cls.soc_vertex()),
        ("inactive", cls.psd_inactive()),
        ("I_R", cls.psd_reducible()),
        ("I_N", cls.psd_irreducible()),
    ]
}

fn write_classification(out: &mut dyn Write, r: &mut Report, prog: &ConicProgram, pt: &EvaluatedPoint, cls: &IndexClassification) -> std::io::Result<()> {
    writeln!(out, "{:<12} {:<10} {:<18} detail", "block", "cone", "status")?;
    for (j, (b, s)) in prog.blocks().iter().zip(&cls.status).enumerate() {
        let detail = match s {
            BlockStatus::PsdReducible { gap } => format!("gap {gap:.3e}"),
            BlockStatus::PsdIrreducible { gap, kernel_dim } => format!("gap {gap:.3e}, kernel {kernel_dim}"),
            _ => format!("dist {:.3e}", pt.block_distances[j]),
        };
        writeln!(out, "{:<12} {:<10} {:<18} {}", b.name, b.kind.to_string(), s.label(), detail)?;
        r.push(format!("block.{}.status", b.name), s.label());
        match s {
            BlockStatus::PsdReducible { gap } => r.push(format!("block.{}.gap", b.name), fmt_real(*gap)),
            BlockStatus::PsdIrreducible { gap, kernel_dim } => {
                r.push(format!("block.{}.gap", b.name), fmt_real(*gap));
                r.push(format!("block.{}.kernel_dim", b.name), kernel_dim);
            }
            _ => {}
        }
    }
    for (label, set) in index_sets(cls) {
        if !set.is_empty() {
            writeln!(out, "{label} = {{{}}}", names(prog, &set))?;
        }
        r.push(format!("set.{label}"), names(prog, &set));
    }
    Ok(())
}

fn infeasible(out: &mut dyn Write, r: &mut Report, e: &ClassifyError) -> std::io::Result<()> {
    let ClassifyError::InfeasiblePoint { residual, tol_act, .. } = e;
    writeln!(out, "infeasible point: residual {residual:.6e} > {tol_act:.1e}")?;
    r.push("feasible", false);
    r.push("residual", fmt_real(*residual));
    Ok(())
}

fn cmd_classify(at: &PointArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let l = load_at(at)?;
    let mut r = Report::new("classify");
    echo_inputs(&mut r, &at.problem, &l.x);
    let code = match classify(&l.pt, at.tol_act, at.tol_gap) {
        Ok(cls) => {
            r.push("feasible", true);
            r.push("residual", fmt_real(l.pt.residual));
            write_classification(out, &mut r, &l.prog, &l.pt, &cls).map_err(internal)?;
            EXIT_OK
        }
        Err(e) => {
            infeasible(out, &mut r, &e).map_err(internal)?;
            EXIT_INFEASIBLE
        }
    };
    write!(out, "{r}").map_err(internal)?;
    Ok(code)
}

fn witness_lines(prog: &ConicProgram, key: &str, w: &CqWitness, r: &mut Report, human: &mut Vec<String>) {
    match w {
        CqWitness::RankDeficit { rank, count } => {
            r.push(format!("{key}.witness"), format!("rank-deficit {rank} {count}"));
            human.push(format!("gradient family has rank {rank} < {count}"));
        }
        CqWitness::EqualityDependence { lambda } => {
            r.push(format!("{key}.witness"), "equality-dependence");
            r.push(format!("{key}.witness.lambda"), reals(lambda));
            human.push(format!("equality gradients dependent: lambda = [{}]", short(lambda)));
        }
        CqWitness::ConicDependence(m) => {
            r.push(format!("{key}.witness"), "conic-dependence");
            r.push(format!("{key}.witness.lambda"), reals(&m.lambda));
            for (j, v) in m.mu.iter().enumerate() {
                if v.norm() > 0.0 {
                    r.push(format!("{key}.witness.mu.{}", prog.blocks()[j].name), reals(&v.to_flat()));
                }
            }
            for &(j, a) in &m.alpha {
                r.push(format!("{key}.witness.alpha.{}", prog.blocks()[j].name), fmt_real(a));
            }
            r.push(format!("{key}.witness.residual"), fmt_real(m.residual));
            r.push(format!("{key}.witness.cone_distance"), fmt_real(m.cone_distance));
            r.push(format!("{key}.witness.normalization"), fmt_real(m.normalization));
            let alphas: Vec<String> = m.alpha.iter().map(|&(j, a)| format!("{}={a:.6e}", prog.blocks()[j].name)).collect();
            human.push(format!(
                "nonzero multipliers combine to zero: alpha [{}], lambda [{}], residual {:.3e}, cone distance {:.3e}",
                alphas.join(", "),
                short(&m.lambda),
                m.residual,
                m.cone_distance
            ));
        }
        CqWitness::RankChange { sample, rank_at_point, rank_at_sample } => {
            r.push(format!("{key}.witness"), format!("rank-change {rank_at_point} {rank_at_sample}"));
            r.push(format!("{key}.witness.sample"), reals(sample));
            human.push(format!("rank {rank_at_point} at the point but {rank_at_sample} at [{}]", short(sample)));
        }
        CqWitness::PersistenceBroken { subset, sample } => {
            r.push(format!("{key}.witness"), "persistence-broken");
            r.push(format!("{key}.witness.subset"), names(prog, subset));
            r.push(format!("{key}.witness.sample"), reals(sample));
            human.push(format!("subset {{{}}} dependent at the point, independent at [{}]", names(prog, subset), short(sample)));
        }
    }
}

fn write_cq(out: &mut dyn Write, r: &mut Report, prog: &ConicProgram, rep: &CqReport) -> std::io::Result<()> {
    let key = format!("cq.{}", rep.kind.name());
    writeln!(out, "{}: {}", rep.kind.name(), rep.verdict.name())?;
    r.push(format!("{key}.verdict"), rep.verdict.name());
    let mut human = Vec::new();
    if let Some(w) = &rep.witness {
        witness_lines(prog, &key, w, r, &mut human);
    }
    if let Some(c) = &rep.certificate {
        r.push(format!("{key}.certificate.residual"), fmt_real(c.residual));
        r.push(format!("{key}.certificate.margin"), fmt_real(c.margin));
        r.push(format!("{key}.certificate.iterations"), c.iterations);
    }
    if let Some(s) = &rep.sampling {
        r.push(format!("{key}.sampling"), format!("{} {} {}", fmt_real(s.radius), s.samples, s.seed));
    }
    if matches!(rep.kind, CqKind::Rcpld | CqKind::Crsc) {
        r.push(format!("{key}.basis_eq"), eq_names(prog, &rep.basis_eq));
    }
    if rep.kind == CqKind::Crsc {
        r.push(format!("{key}.basis_reduced"), names(prog, &rep.basis_reduced));
        r.push(format!("{key}.j_minus"), names(prog, &rep.j_minus));
        r.push(format!("{key}.j_plus"), names(prog, &rep.j_plus));
        human.push(format!("J- = {{{}}}, J+ = {{{}}}, J = {{{}}}", names(prog, &rep.j_minus), names(prog, &rep.j_plus), names(prog, &rep.basis_reduced)));
    }
    for s in &rep.subsets {
        let o = match s.outcome {
            SubsetOutcome::Independent { margin } => format!("independent {}", fmt_real(margin)),
            SubsetOutcome::DependentPersistent => "dependent-persistent".to_owned(),
            SubsetOutcome::DependentBroken { sample } => format!("dependent-broken {sample}"),
            SubsetOutcome::Undecided => "undecided".to_owned(),
        };
        r.push(format!("{key}.subset.{{{}}}", names(prog, &s.subset)), &o);
        human.push(format!("J = {{{}}}: {o}", names(prog, &s.subset)));
    }
    for (i, n) in rep.notes.iter().enumerate() {
        r.push(format!("{key}.note.{i}"), n);
        human.push(n.clone());
    }
    for h in human {
        writeln!(out, "  {h}")?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(at: &PointArgs, which: &str, cfg: CqConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let kinds: Vec<CqKind> = if which == "all" {
        CqKind::ALL.to_vec()
    } else {
        vec![CqKind::from_name(which).ok_or_else(|| CliError::Input(format!("unknown constraint qualification `{which}`")))?]
    };
    let l = load_at(at)?;
    let mut r = Report::new("check");
    echo_inputs(&mut r, &at.problem, &l.x);
    let cls = match classify(&l.pt, at.tol_act, at.tol_gap) {
        Ok(c) => c,
        Err(e) => {
            infeasible(out, &mut r, &e).map_err(internal)?;
            write!(out, "{r}").map_err(internal)?;
            return Ok(EXIT_INFEASIBLE);
        }
    };
    r.push("feasible", true);
    write_classification(out, &mut r, &l.prog, &l.pt, &cls).map_err(internal)?;
    let mut verdicts = Vec::new();
    for k in kinds {
        let rep = cq::check(k, &l.prog, &l.pt, &cls, &cfg).map_err(internal)?;
        write_cq(out, &mut r, &l.prog, &rep).map_err(internal)?;
        verdicts.push(rep.verdict);
    }
    write!(out, "{r}").map_err(internal)?;
    Ok(if verdicts.contains(&CqVerdict::Undecided) {
        EXIT_UNDECIDED
    } else if verdicts.contains(&CqVerdict::Fails) {
        EXIT_FAILS
    } else {
        EXIT_OK
    })
}

fn cmd_solve(problem: &Path, x0: &str, trace: &Path, cfg: AlmConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let prog = load_problem(problem).map_err(input)?;
    let x0 = parse_point(x0)?;
    let res = alm::solve(&prog, &x0, &cfg, &mut |o| {
        let _ = writeln!(
            err,
            "outer {:>3}  rho {:.1e}  f {:+.6e}  residual {:.3e}  infeasibility {:.3e}  inner {}",
            o.k, o.rho, o.f, o.residual, o.infeasibility, o.inner_iterations
        );
    })
    .map_err(|e| match e {
        alm::AlmError::Config(_) | alm::AlmError::NonFinite | alm::AlmError::Problem(_) => input(e),
        other => internal(other),
    })?;
    std::fs::write(trace, write_trace(&res.trace, &prog)).map_err(|e| input(format!("{}: {e}", trace.display())))?;
    let mut r = Report::new("solve");
    r.push("input.problem", problem.display());
    r.push("input.x0", reals(&x0));
    r.push("status", res.status.name());
    r.push("x", reals(&res.x));
    r.push("lambda", reals(&res.lambda));
    for (b, m) in prog.blocks().iter().zip(&res.mu) {
        r.push(format!("mu.{}", b.name), reals(&m.to_flat()));
    }
    r.push("outer_iterations", res.log.len());
    if let Some(last) = res.log.last() {
        r.push("residual", fmt_real(last.residual));
        r.push("infeasibility", fmt_real(last.infeasibility));
    }
    r.push("trace", trace.display());
    writeln!(out, "status {}  x = [{}]  ({} outer iterations)", res.status.name(), short(&res.x), res.log.len()).map_err(internal)?;
    write!(out, "{r}").map_err(internal)?;
    Ok(if res.status == AlmStatus::Converged { EXIT_OK } else { EXIT_FAILS })
}

fn akkt_config(at: &PointArgs, tol: f64, m_cap: f64) -> AkktConfig {
    AkktConfig { tol, tol_act: at.tol_act, tol_gap: at.tol_gap, m_cap, ..AkktConfig::default() }
}

fn cmd_certify(at: &PointArgs, trace: &Path, tol: f64, out: &mut dyn Write) -> Result<i32, CliError> {
    let l = load_at(at)?;
    let tr = load_trace(trace, &l.prog).map_err(input)?;
    let mut r = Report::new("certify");
    echo_inputs(&mut r, &at.problem, &l.x);
    r.push("input.trace", trace.display());
    r.push("records", tr.records.len());
    let cfg = akkt_config(at, tol, akkt::DEFAULT_M_CAP);
    let c = akkt::certify_akkt(&l.prog, &l.x, &tr, &cfg).map_err(|e| match e {
        akkt::AkktError::Classify(_) => input(e),
        other => internal(other),
    })?;
    let code = match c {
        Certification::Certified { window, max_distance, max_residual } => {
            writeln!(out, "certified: last {window} records within {max_distance:.3e} of the point, residual <= {max_residual:.3e}").map_err(internal)?;
            r.push("verdict", "certified");
            r.push("window", window);
            r.push("max_distance", fmt_real(max_distance));
            r.push("max_residual", fmt_real(max_residual));
            EXIT_OK
        }
        Certification::Rejected(why) => {
            let (reason, detail) = match why {
                Rejection::InsufficientTail { records } => ("insufficient-tail", format!("{records} record(s)")),
                Rejection::Distance { k, distance } => ("distance", format!("k {k} {}", fmt_real(distance))),
                Rejection::NotApproaching { first, last } => ("not-approaching", format!("{} {}", fmt_real(first), fmt_real(last))),
                Rejection::Residual { k, residual } => ("residual", format!("k {k} {}", fmt_real(residual))),
                Rejection::Alignment { block, k, value } => {
                    ("alignment", format!("{} k {k} {}", l.prog.blocks()[block].name, fmt_real(value)))
                }
            };
            writeln!(out, "rejected ({reason}): {detail}").map_err(internal)?;
            r.push("verdict", "rejected");
            r.push("reason", reason);
            r.push("detail", detail);
            EXIT_FAILS
        }
    };
    write!(out, "{r}").map_err(internal)?;
    Ok(code)
}

fn cone_line(v: &ConeValue) -> String {
    reals(&v.to_flat())
}

fn cmd_recover(at: &PointArgs, trace: &Path, tol: f64, m_cap: f64, out: &mut dyn Write) -> Result<i32, CliError> {
    let l = load_at(at)?;
    let tr = load_trace(trace, &l.prog).map_err(input)?;
    let mut r = Report::new("recover");
    echo_inputs(&mut r, &at.problem, &l.x);
    r.push("input.trace", trace.display());
    let cfg = akkt_config(at, tol, m_cap);
    let o = akkt::recover_kkt(&l.prog, &l.x, &tr, &cfg).map_err(|e| match e {
        akkt::AkktError::Classify(_) => input(e),
        other => internal(other),
    })?;
    r.push("basis_eq", eq_names(&l.prog, &o.basis));
    r.push("dominant", names(&l.prog, &o.dominant));
    r.push("frequency", format!("{} {}", o.frequency, o.window));
    r.push("m_first", fmt_real(o.m_first));
    r.push("m_last", fmt_real(o.m_last));
    r.push("m_max", fmt_real(o.m_max));
    let code = match &o.verdict {
        RecoveryVerdict::Kkt { multipliers, check, polished } => {
            writeln!(out, "KKT multipliers at the point (worst residual {:.3e})", check.worst()).map_err(internal)?;
            r.push("verdict", "kkt");
            r.push("lambda", reals(&multipliers.lambda));
            for (b, m) in l.prog.blocks().iter().zip(&multipliers.mu) {
                writeln!(out, "  mu {} = [{}]", b.name, short(&m.to_flat())).map_err(internal)?;
                r.push(format!("mu.{}", b.name), cone_line(m));
            }
            if !multipliers.lambda.is_empty() {
                writeln!(out, "  lambda = [{}]", short(&multipliers.lambda)).map_err(internal)?;
            }
            r.push("stationarity", fmt_real(check.stationarity));
            r.push("complementarity", fmt_real(check.complementarity));
            r.push("cone_distance", fmt_real(check.cone_distance));
            r.push("polished", polished);
            EXIT_OK
        }
        RecoveryVerdict::Unbounded(w) => {
            writeln!(out, "multipliers diverge; normalized limit is a nonzero dependence (residual {:.3e})", w.check.residual).map_err(internal)?;
            r.push("verdict", "unbounded");
            r.push("witness.lambda", reals(&w.lambda));
            for (j, m) in &w.mu {
                r.push(format!("witness.mu.{}", l.prog.blocks()[*j].name), cone_line(m));
            }
            for (j, a) in &w.alpha {
                writeln!(out, "  alpha {} = {a:.6e}", l.prog.blocks()[*j].name).map_err(internal)?;
                r.push(format!("witness.alpha.{}", l.prog.blocks()[*j].name), fmt_real(*a));
            }
            r.push("witness.residual", fmt_real(w.check.residual));
            r.push("witness.cone_distance", fmt_real(w.check.cone_distance));
            EXIT_FAILS
        }
        RecoveryVerdict::Inconclusive { reason } => {
            writeln!(out, "inconclusive: {reason}").map_err(internal)?;
            r.push("verdict", "inconclusive");
            r.push("reason", reason);
            EXIT_UNDECIDED
        }
    };
    write!(out, "{r}").map_err(internal)?;
    Ok(code)
}

fn cmd_embed(problem: &Path, dest: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let prog = load_problem(problem).map_err(input)?;
    let embedded = embed_block_diagonal(&prog).map_err(input)?;
    std::fs::write(dest, write_problem(&embedded)).map_err(|e| input(format!("{}: {e}", dest.display())))?;
    let mut r = Report::new("embed-diag");
    r.push("input.problem", problem.display());
    r.push("output", dest.display());
    r.push("block", format!("{} {}", embedded.blocks()[0].name, embedded.blocks()[0].kind.size()));
    writeln!(out, "wrote {} with one {} block", dest.display(), embedded.blocks()[0].kind).map_err(internal)?;
    write!(out, "{r}").map_err(internal)?;
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let start = Instant::now();
    let code = match &cli.command {
        Command::Classify { at } => cmd_classify(at, out),
        Command::Check { at, cq, radius, samples, seed, tol_rank, tol_cert, budget } => {
            let cfg = CqConfig {
                tol_rank: *tol_rank,
                tol_cert: *tol_cert,
                budget: *budget,
                radius: *radius,
                samples: *samples,
                seed: effective_seed(*seed)?,
                ..CqConfig::default()
            };
            if !(cfg.radius > 0.0) || cfg.samples == 0 {
                return Err(CliError::Input("need --radius > 0 and --samples >= 1".to_owned()));
            }
            cmd_check(at, cq, cfg, out)
        }
        Command::Solve { problem, x0, trace, alm } => cmd_solve(problem, x0, trace, alm.config(), out, err),
        Command::Certify { at, trace, tol } => cmd_certify(at, trace, *tol, out),
        Command::Recover { at, trace, tol, m_cap } => cmd_recover(at, trace, *tol, *m_cap, out),
        Command::EmbedDiag { problem, out: dest } => cmd_embed(problem, dest, out),
    }?;
    let _ = writeln!(err, "elapsed {:.3} s", start.elapsed().as_secs_f64());
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
