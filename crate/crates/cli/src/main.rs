//! Command-line front end: classification, sweeps, certificates, fiber
//! tables, time evolution, and discrete identity checks.
//!
//! Exit codes: 0 = essentially self-adjoint / certified / pass,
//! 1 = not essentially self-adjoint / falsified / fail, 2 = inconclusive,
//! anything above 2 is an error.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use confine::certifier::{
    lemma_s_identity_residual, perturbation_certificate, t_d1s_verdict, ts_certificate,
    tsh_certificate, BoundaryLayerGrid, CertificateOutcome, CertificateReport, HardyFunction,
};
use confine::classifier::{
    chernoff_example_verdict, em_threshold_verdict, esa_verdict_1d, ClassifierOptions, EsaVerdict,
    Verdict,
};
use confine::dirac::{
    DiracCoefficients, DistancePower, Electric, LorentzScalar, MatrixPotential, ScalarField,
};
use confine::domain::{Domain, Interval1D, Point};
use confine::evolution::{
    crank_nicolson_evolve, extension_dependence_probe, gaussian_packet, BoundaryRows,
    DiscretizedFiber, FiberGridOptions,
};
use confine::magnetic::{
    partial_wave_verdict, susy_factorization_residual, t_m2_certificate, transversal_gauge,
    MagneticField2D,
};
use confine::potential::PotentialSpec1D;
use confine::radial::{RadialDiracProblem, SolverOptions};

use config::RunConfig;

const EXIT_ERROR: u8 = 64;

#[derive(Parser)]
#[command(name = "confine", version, about = "Confinement analysis for Dirac operators")]
struct Cli {
    /// Declarative TOML configuration; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker pool size (0 = logical CPU count).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Write the primary artifact (CSV/JSON) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit the JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Final boundary distance of the radial integrations (relative).
    #[arg(long, global = true)]
    delta_min: Option<f64>,

    /// Boundary-layer width used by integral tests and certificates.
    #[arg(long, global = true)]
    delta0: Option<f64>,

    /// Local tolerance of the adaptive integrator.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a 1D Dirac problem (or the elliptic line family).
    Classify(ClassifyArgs),
    /// Sweep one or two parameter axes and emit a verdict CSV.
    Sweep(SweepArgs),
    /// Run a scalar-potential confinement certificate.
    Certify(CertifyArgs),
    /// Classify the partial-wave fibers of a magnetic field on the disk.
    Fibers(FibersArgs),
    /// Crank-Nicolson evolution of a radial fiber with diagnostics CSV.
    Evolve(EvolveArgs),
    /// Convergence check of the discrete operator identities.
    IdentityCheck(IdentityArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    /// Classify the elliptic family `a_alpha D + D a_alpha` instead.
    #[arg(long)]
    chernoff: bool,
    #[arg(long)]
    alpha: Option<f64>,
    /// Skip the closed-form rules and classify numerically.
    #[arg(long)]
    numeric: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Axis spec "param:from:to:step"; repeat for a second axis.
    #[arg(long, value_name = "SPEC")]
    axis: Vec<String>,
    /// "closed" (default) or "numeric".
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct CertifyArgs {
    /// ts | tsh | perturbation | td1s
    #[arg(long)]
    theorem: Option<String>,
    /// interval | disk | ball
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Use the convex-domain Hardy function 1/(4 delta^2).
    #[arg(long)]
    hardy: bool,
    #[arg(long)]
    lambda_e: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    convex: bool,
}

#[derive(Args)]
struct FibersArgs {
    /// pcm | constant
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    b0: Option<f64>,
    #[arg(long)]
    jrange: Option<i64>,
    /// Constant cylinder mass term.
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(long)]
    lambda_e: Option<f64>,
    /// Also run the boundary-growth certificate.
    #[arg(long)]
    tm2: bool,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta_cut: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    /// truncated | mass-wall
    #[arg(long)]
    boundary: Option<String>,
    /// Also run the two-boundary extension probe.
    #[arg(long)]
    probe: bool,
}

#[derive(Args)]
struct IdentityArgs {
    /// Base grid step; the check runs at h, h/2, h/4.
    #[arg(long, default_value_t = 0.04)]
    h: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR + 1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global().ok();
    }
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.delta_min {
        cfg.numerics.delta_min = v;
    }
    if let Some(v) = cli.delta0 {
        cfg.numerics.delta0 = v;
    }
    if let Some(v) = cli.tol {
        cfg.numerics.tol = v;
    }

    match &cli.command {
        Command::Classify(a) => cmd_classify(&cli, &cfg, a),
        Command::Sweep(a) => cmd_sweep(&cli, &cfg, a),
        Command::Certify(a) => cmd_certify(&cli, &cfg, a),
        Command::Fibers(a) => cmd_fibers(&cli, &cfg, a),
        Command::Evolve(a) => cmd_evolve(&cli, &cfg, a),
        Command::IdentityCheck(a) => cmd_identity_check(&cli, &cfg, a),
    }
}

fn classifier_options(cfg: &RunConfig, force_numeric: bool) -> ClassifierOptions {
    ClassifierOptions {
        solver: SolverOptions {
            rtol: cfg.numerics.tol,
            delta_min_rel: cfg.numerics.delta_min,
            ..SolverOptions::default()
        },
        force_numeric,
        delta0: cfg.numerics.delta0,
        closed_form_margin: cfg.numerics.margin,
    }
}

fn emit_artifact(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn verdict_exit(v: Verdict) -> u8 {
    match v {
        Verdict::EssentiallySelfAdjoint => 0,
        Verdict::NotEssentiallySelfAdjoint => 1,
        Verdict::Inconclusive => 2,
    }
}

#[derive(Serialize)]
struct ClassifyReport {
    verdict: Verdict,
    tag: String,
    margin_flag: bool,
    detail: EsaVerdict,
}

fn cmd_classify(cli: &Cli, cfg: &RunConfig, a: &ClassifyArgs) -> Result<u8> {
    let opts = classifier_options(cfg, a.numeric || cfg.numerics.force_numeric);
    let verdict = if a.chernoff {
        let alpha = a.alpha.unwrap_or(cfg.problem.alpha);
        if alpha < 0.0 {
            bail!("chernoff family needs alpha >= 0");
        }
        chernoff_example_verdict(alpha)?
    } else {
        let l0 = a.lambda0.unwrap_or(cfg.problem.lambda0);
        let l1 = a.lambda1.unwrap_or(cfg.problem.lambda1);
        let l3 = a.lambda3.unwrap_or(cfg.problem.lambda3);
        let [ia, ib] = cfg.problem.interval;
        let iv = Interval1D::Finite { a: ia, b: ib };
        let p = RadialDiracProblem::new(iv, PotentialSpec1D::smf_family(l0, l1, l3));
        esa_verdict_1d(&p, &opts)?
    };

    let report = ClassifyReport {
        verdict: verdict.verdict,
        tag: verdict.tag.to_string(),
        margin_flag: verdict.margin_flag,
        detail: verdict.clone(),
    };
    println!(
        "verdict: {:?}  [{}]{}",
        verdict.verdict,
        verdict.tag,
        if verdict.margin_flag { "  (borderline)" } else { "" }
    );
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(verdict_exit(verdict.verdict))
}

struct Axis {
    param: String,
    values: Vec<f64>,
}

fn parse_axis_spec(spec: &str) -> Result<Axis> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        bail!("axis spec must be param:from:to:step, got {spec}");
    }
    let from: f64 = parts[1].parse()?;
    let to: f64 = parts[2].parse()?;
    let step: f64 = parts[3].parse()?;
    Ok(Axis { param: parts[0].to_string(), values: grid_values(from, to, step)? })
}

fn grid_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 || to < from {
        bail!("invalid axis range [{from}, {to}] step {step}");
    }
    let n = ((to - from) / step).round() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

const SWEEP_PARAMS: [&str; 7] =
    ["lambda_e", "lambda_m", "lambda_s", "lambda1", "lambda3", "lambda0", "alpha"];

fn cmd_sweep(cli: &Cli, cfg: &RunConfig, a: &SweepArgs) -> Result<u8> {
    let mut axes: Vec<Axis> = Vec::new();
    for spec in &a.axis {
        axes.push(parse_axis_spec(spec)?);
    }
    for ax in &cfg.sweep.axes {
        if axes.iter().all(|x| x.param != ax.param) {
            axes.push(Axis {
                param: ax.param.clone(),
                values: grid_values(ax.from, ax.to, ax.step)?,
            });
        }
    }
    if axes.is_empty() || axes.len() > 2 {
        bail!("sweep needs 1 or 2 axes, got {}", axes.len());
    }
    for ax in &axes {
        if !SWEEP_PARAMS.contains(&ax.param.as_str()) {
            bail!("unknown sweep parameter {} (supported: {:?})", ax.param, SWEEP_PARAMS);
        }
    }
    let mode = a.mode.clone().or(cfg.sweep.mode.clone()).unwrap_or_else(|| "closed".into());
    let numeric = match mode.as_str() {
        "closed" => false,
        "numeric" => true,
        other => bail!("unknown sweep mode {other}"),
    };

    // deterministic cell order: axis 1 outer, axis 2 inner
    let second = axes.get(1).map(|ax| ax.values.clone()).unwrap_or_else(|| vec![f64::NAN]);
    let mut cells = Vec::new();
    for &v1 in &axes[0].values {
        for &v2 in &second {
            cells.push((v1, v2));
        }
    }

    use rayon::prelude::*;
    let started = std::time::Instant::now();
    let opts = classifier_options(cfg, numeric);
    let rows: Result<Vec<String>> = cells
        .par_iter()
        .map(|&(v1, v2)| {
            let (verdict, tag, margin) = sweep_cell(cfg, &axes, v1, v2, &opts)?;
            let p2 = if v2.is_nan() { String::new() } else { format!("{v2:.6}") };
            Ok(format!("{v1:.6},{p2},{verdict},{tag},{margin:.6}"))
        })
        .collect();
    let mut csv = String::from("param1,param2,verdict,tag,margin\n");
    for row in rows? {
        csv.push_str(&row);
        csv.push('\n');
    }
    emit_artifact(cli, &csv)?;
    if cli.json {
        let report = SweepReport {
            axes: axes
                .iter()
                .map(|ax| SweepAxisReport { param: ax.param.clone(), values: ax.values.clone() })
                .collect(),
            mode,
            cells: cells.len(),
            elapsed_seconds: started.elapsed().as_secs_f64(),
        };
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(0)
}

#[derive(Serialize)]
struct SweepAxisReport {
    param: String,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct SweepReport {
    axes: Vec<SweepAxisReport>,
    mode: String,
    cells: usize,
    elapsed_seconds: f64,
}

/// Evaluates one sweep cell. Axis parameters override the config baseline;
/// the cell family is picked from the parameter names.
fn sweep_cell(
    cfg: &RunConfig,
    axes: &[Axis],
    v1: f64,
    v2: f64,
    opts: &ClassifierOptions,
) -> Result<(String, String, f64)> {
    let mut lambda0 = cfg.problem.lambda0;
    let mut lambda1 = cfg.problem.lambda1;
    let mut lambda3 = cfg.problem.lambda3;
    let mut lambda_m = f64::NAN;
    let mut lambda_s = cfg.field.lambda_s;
    let mut lambda_e = cfg.field.lambda_e;
    let mut alpha = f64::NAN;
    let mut em_family = false;
    let mut pcm_family = false;

    for (ax, v) in axes.iter().zip([v1, v2]) {
        match ax.param.as_str() {
            "lambda0" => lambda0 = v,
            "lambda1" => lambda1 = v,
            "lambda3" => lambda3 = v,
            "lambda_m" => {
                lambda_m = v;
                em_family = true;
            }
            "lambda_s" => {
                lambda_s = v;
                em_family = true;
            }
            "lambda_e" => {
                lambda_e = v;
                em_family = true;
            }
            "alpha" => {
                alpha = v;
                pcm_family = true;
            }
            other => bail!("unknown parameter {other}"),
        }
    }

    let margin_tol = cfg.numerics.margin;
    if pcm_family {
        let field = MagneticField2D::pcm(alpha)?;
        let table = partial_wave_verdict(&field, cfg.field.jrange, None, None, opts)?;
        let tag = match table.aggregate {
            Verdict::EssentiallySelfAdjoint => "T:M2",
            Verdict::NotEssentiallySelfAdjoint => "P:CM",
            Verdict::Inconclusive => "Numeric",
        };
        let margin = (alpha - 0.5).abs();
        let cell = cell_name(table.aggregate, margin <= margin_tol);
        return Ok((cell, tag.into(), margin));
    }
    if em_family {
        let lm = if lambda_m.is_nan() { 0.0 } else { lambda_m };
        let esa = em_threshold_verdict(lm, lambda_s, lambda_e);
        let margin = (lambda_e * lambda_e - (lm * lm + lambda_s * lambda_s - 0.25)).abs();
        let v =
            if esa { Verdict::EssentiallySelfAdjoint } else { Verdict::NotEssentiallySelfAdjoint };
        return Ok((cell_name(v, margin <= margin_tol), "CO.5".into(), margin));
    }

    let [ia, ib] = cfg.problem.interval;
    let p = RadialDiracProblem::new(
        Interval1D::Finite { a: ia, b: ib },
        PotentialSpec1D::smf_family(lambda0, lambda1, lambda3),
    );
    let verdict = esa_verdict_1d(&p, opts)?;
    let margin = (lambda1 * lambda1 + lambda3 * lambda3 - lambda0 * lambda0 - 0.25).abs();
    let boundary = verdict.margin_flag || margin <= margin_tol;
    Ok((cell_name(verdict.verdict, boundary), verdict.tag.to_string(), margin))
}

fn cell_name(v: Verdict, boundary: bool) -> String {
    match v {
        Verdict::Inconclusive => "Inconclusive".into(),
        _ if boundary => "Boundary".into(),
        Verdict::EssentiallySelfAdjoint => "ESA".into(),
        Verdict::NotEssentiallySelfAdjoint => "NotESA".into(),
    }
}

#[derive(Serialize)]
struct CertifyReport {
    theorem: String,
    certified: bool,
    outcome: String,
    tag: String,
    report: Option<CertificateReport>,
}

fn cmd_certify(cli: &Cli, cfg: &RunConfig, a: &CertifyArgs) -> Result<u8> {
    let theorem = a
        .theorem
        .clone()
        .or(cfg.certify.theorem.clone())
        .ok_or_else(|| anyhow!("certify needs --theorem (ts | tsh | perturbation | td1s)"))?;
    let lambda = a.lambda.unwrap_or(cfg.certify.lambda);
    let alpha = a.alpha.unwrap_or(cfg.certify.alpha);
    let hardy_on = a.hardy || cfg.certify.hardy;

    if theorem == "td1s" {
        let mu = a.mu.unwrap_or(cfg.certify.mu);
        let convex = a.convex || cfg.certify.convex;
        let ok = t_d1s_verdict(mu, lambda, convex);
        let report = CertifyReport {
            theorem,
            certified: ok,
            outcome: if ok { "Certified".into() } else { "Falsified".into() },
            tag: if convex { "T:D1S(ii)".into() } else { "T:D1S(i)".into() },
            report: None,
        };
        println!("{}", if ok { "certified" } else { "not certified" });
        if cli.json {
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        return Ok(if ok { 0 } else { 1 });
    }

    let domain = match a.domain.clone().or(cfg.certify.domain.clone()).as_deref() {
        Some("interval") | None => Domain::Interval { a: 0.0, b: 1.0 },
        Some("disk") => Domain::UnitDisk,
        Some("ball") => Domain::UnitBall,
        Some(other) => bail!("unknown domain {other}"),
    };
    let dim = domain.dim();
    let grid = BoundaryLayerGrid::new(
        domain,
        (cfg.numerics.delta_min * 1e3).min(1e-4),
        cfg.numerics.delta0,
    )?;
    let field = Arc::new(DistancePower { domain, lambda, alpha });
    let coeffs = DiracCoefficients::standard(dim, Arc::new(LorentzScalar { dim, field }))?;
    let hardy = if hardy_on {
        HardyFunction::InverseSquareQuarter { h0: 0.0 }
    } else {
        HardyFunction::Zero
    };

    let (rep, tag) = match theorem.as_str() {
        "ts" => (ts_certificate(&coeffs, &grid)?, "T:S".to_string()),
        "tsh" => (tsh_certificate(&coeffs, &hardy, &grid)?, "T:SH".to_string()),
        "perturbation" => {
            let le = a.lambda_e.unwrap_or(cfg.certify.lambda_e);
            let c = a.c.unwrap_or(cfg.certify.c);
            let w: Arc<dyn MatrixPotential> = Arc::new(Electric {
                dim,
                field: Arc::new(DistancePower { domain, lambda: le, alpha: 1.0 }),
            });
            let rep = perturbation_certificate(&coeffs, &w, &hardy, c, &grid)?;
            let tag = if c == 1.0 { "T:P(i)".to_string() } else { "T:P(ii)".to_string() };
            (rep, tag)
        }
        other => bail!("unknown theorem {other}"),
    };

    let outcome = match &rep.outcome {
        CertificateOutcome::Certified { .. } => "Certified",
        CertificateOutcome::Falsified { .. } => "Falsified",
        CertificateOutcome::Inconclusive => "Inconclusive",
    };
    println!("{outcome} [{tag}] (min eigenvalue {:.3e})", rep.min_eigenvalue);
    let code = match outcome {
        "Certified" => 0,
        "Falsified" => 1,
        _ => 2,
    };
    let report = CertifyReport {
        theorem,
        certified: code == 0,
        outcome: outcome.into(),
        tag,
        report: Some(rep),
    };
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(code)
}

fn cmd_fibers(cli: &Cli, cfg: &RunConfig, a: &FibersArgs) -> Result<u8> {
    let kind = a.field.clone().or(cfg.field.kind.clone()).unwrap_or_else(|| "pcm".into());
    let field = match kind.as_str() {
        "pcm" => MagneticField2D::pcm(a.alpha.unwrap_or(cfg.field.alpha))?,
        "constant" => MagneticField2D::Constant(a.b0.unwrap_or(cfg.field.b0)),
        other => bail!("unknown field kind {other}"),
    };
    let jrange = a.jrange.unwrap_or(cfg.field.jrange);
    let xi = a.xi.unwrap_or(cfg.field.xi);
    let ls = a.lambda_s.unwrap_or(cfg.field.lambda_s);
    let le = a.lambda_e.unwrap_or(cfg.field.lambda_e);
    if xi != 0.0 && ls != 0.0 {
        bail!("xi and lambda_s both set; pick one mass-term source");
    }
    let v_s = if xi != 0.0 {
        Some(confine::potential::Coefficient::Constant(xi))
    } else if ls != 0.0 {
        Some(confine::potential::Coefficient::power_both(ls))
    } else {
        None
    };
    let v_e = if le != 0.0 { Some(confine::potential::Coefficient::power_both(le)) } else { None };

    let opts = classifier_options(cfg, cfg.numerics.force_numeric);
    let table = partial_wave_verdict(&field, jrange, v_s, v_e, &opts)?;

    println!("aggregate: {:?} over j in [-{jrange}, {jrange})", table.aggregate);
    if let Some(j) = table.failing_fiber {
        println!("failing fiber: j = {j}");
    }
    if a.tm2 {
        let rep = t_m2_certificate(&field, cfg.numerics.delta0)?;
        println!("growth certificate: {}", if rep.holds { "holds" } else { "fails" });
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&table)?);
    }
    Ok(verdict_exit(table.aggregate))
}

#[derive(Serialize)]
struct EvolveReport {
    n: usize,
    dt: f64,
    t_final: f64,
    max_norm_drift_per_step: f64,
    max_band_probability: f64,
    max_cut_amplitude: f64,
    probe_divergence: Option<f64>,
    pass: bool,
}

fn cmd_evolve(cli: &Cli, cfg: &RunConfig, a: &EvolveArgs) -> Result<u8> {
    let lambda1 = a.lambda1.unwrap_or(cfg.problem.lambda1);
    let [ia, ib] = cfg.problem.interval;
    let p = RadialDiracProblem::new(
        Interval1D::Finite { a: ia, b: ib },
        PotentialSpec1D::smf_family(cfg.problem.lambda0, lambda1, cfg.problem.lambda3),
    );
    let boundary = match a.boundary.clone().or(cfg.evolve.boundary.clone()).as_deref() {
        Some("mass-wall") => BoundaryRows::MassWall { scale: 1.0 },
        Some("truncated") | None => BoundaryRows::Truncated,
        Some(other) => bail!("unknown boundary rows {other}"),
    };
    let opts = FiberGridOptions {
        n: a.n.unwrap_or(cfg.evolve.n),
        delta_cut: a.delta_cut.unwrap_or(cfg.evolve.delta_cut),
        boundary,
    };
    let dt = a.dt.unwrap_or(cfg.evolve.dt);
    let t_final = a.t_final.unwrap_or(cfg.evolve.t_final);

    let fiber = DiscretizedFiber::new(&p, &opts)?;
    let psi0 = gaussian_packet(&fiber);
    let diag = crank_nicolson_evolve(&fiber, &psi0, t_final, dt, false)?;

    let mut csv = Vec::new();
    diag.write_csv(&mut csv)?;
    emit_artifact(cli, std::str::from_utf8(&csv).unwrap())?;

    let probe = if a.probe || cfg.evolve.probe {
        Some(extension_dependence_probe(&p, &opts, t_final.min(3.0), dt, None)?)
    } else {
        None
    };
    let report = EvolveReport {
        n: opts.n,
        dt,
        t_final,
        max_norm_drift_per_step: diag.max_norm_drift_per_step,
        max_band_probability: diag.band_probs.iter().copied().fold(0.0f64, f64::max),
        max_cut_amplitude: diag.cut_amps.iter().copied().fold(0.0f64, f64::max),
        probe_divergence: probe,
        pass: diag.max_norm_drift_per_step <= 1e-8,
    };
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(if report.pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct IdentityReport {
    grid_steps: [f64; 3],
    norm_identity_residuals: [f64; 3],
    norm_identity_orders: [f64; 2],
    susy_residuals: [f64; 3],
    susy_orders: [f64; 2],
    diamagnetic_holds: bool,
    pass: bool,
}

fn cmd_identity_check(cli: &Cli, _cfg: &RunConfig, a: &IdentityArgs) -> Result<u8> {
    struct X1;
    impl ScalarField for X1 {
        fn eval(&self, p: &Point) -> f64 {
            p.coord(0)
        }
        fn grad(&self, _p: &Point) -> [f64; 3] {
            [1.0, 0.0, 0.0]
        }
    }
    let coeffs =
        DiracCoefficients::standard(2, Arc::new(LorentzScalar { dim: 2, field: Arc::new(X1) }))?;
    let hs = [a.h, a.h / 2.0, a.h / 4.0];
    let mut lem = [0.0; 3];
    for (k, &h) in hs.iter().enumerate() {
        lem[k] = lemma_s_identity_residual(&coeffs, None, 0.7, h)?;
    }
    let lem_orders = [(lem[0] / lem[1]).log2(), (lem[1] / lem[2]).log2()];

    let field = MagneticField2D::Constant(1.0);
    let gauge = transversal_gauge(&field)?;
    let mut susy = [0.0; 3];
    let mut dia = true;
    for (k, &h) in [a.h / 2.0, a.h / 4.0, a.h / 8.0].iter().enumerate() {
        let r = susy_factorization_residual(&field, &gauge, h)?;
        susy[k] = r.minus.max(r.plus);
        dia &= r.diamagnetic_holds;
    }
    let susy_orders = [(susy[0] / susy[1]).log2(), (susy[1] / susy[2]).log2()];

    let min_order =
        lem_orders.iter().chain(susy_orders.iter()).copied().fold(f64::INFINITY, f64::min);
    let pass = min_order >= 1.7 && dia;

    println!("grid step | norm-identity residual | factorization residual");
    for k in 0..3 {
        println!("{:9.5} | {:.6e} | {:.6e}", hs[k], lem[k], susy[k]);
    }
    println!(
        "orders: norm identity {:.2}/{:.2}, factorization {:.2}/{:.2}; diamagnetic {}",
        lem_orders[0],
        lem_orders[1],
        susy_orders[0],
        susy_orders[1],
        if dia { "holds" } else { "fails" }
    );
    let report = IdentityReport {
        grid_steps: hs,
        norm_identity_residuals: lem,
        norm_identity_orders: lem_orders,
        susy_residuals: susy,
        susy_orders,
        diamagnetic_holds: dia,
        pass,
    };
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(if pass { 0 } else { 1 })
}
