//! Command-line front end: method verification, stability-region
//! computation, stepsize studies and single runs, emitting deterministic
//! CSV/JSON artifacts plus a replayable manifest per invocation.

mod manifest;
mod output;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use dimsim_core::integrator::{
    convergence_study, integrate, IntegrateOptions, StartMode,
};
use dimsim_core::problems::{by_name, ProblemParams, PROBLEM_NAMES};
use dimsim_core::region::{region_explicit, region_fixed_implicit, region_wedge, GridSpec, Region};
use dimsim_core::ssp::{ssp_coefficient, SspCertificate};
use dimsim_core::stability::{
    a_stability_check, l_stability_check, AStabilityReport, LStabilityReport,
    A_STABILITY_SAMPLES, A_STABILITY_Y_MAX,
};
use dimsim_core::tableau::{catalog, verify_order, CATALOG_NAMES};
use manifest::RunManifest;
use num_complex::Complex64;
use output::{fmt, write_text, Csv};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "dimsim", version, about = "IMEX DIMSIM integrators and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify catalog methods: order residuals, SSP certificate, stability
    /// verdicts and regions; mirrors the published summary table.
    Verify {
        /// Method names; use --all for the whole catalog.
        methods: Vec<String>,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// JSON file of expected values; mismatches exit with code 2.
        #[arg(long)]
        expect: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Trace a stability region boundary and report area and interval.
    Region {
        #[arg(long)]
        method: String,
        /// SE, Salpha or SalphaY.
        #[arg(long, default_value = "SE")]
        kind: String,
        /// Wedge half-angle in degrees, in (0, 90].
        #[arg(long, default_value_t = 90.0)]
        alpha: f64,
        /// Fixed y for kind SalphaY.
        #[arg(long, allow_negative_numbers = true)]
        y: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Stepsize study against a self-convergence (or exact) reference.
    Converge {
        #[arg(long)]
        method: String,
        #[arg(long)]
        problem: String,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Comma-separated stepsizes.
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Single fixed-step run with trajectory output.
    Solve {
        #[arg(long)]
        method: String,
        #[arg(long)]
        problem: String,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Non-stiff parameter of the linear test problem, "re" or "re,im".
        #[arg(long, allow_hyphen_values = true)]
        lambda0: Option<String>,
        /// Stiff parameter of the linear test problem.
        #[arg(long, allow_hyphen_values = true)]
        lambda1: Option<String>,
        #[arg(long, required = true)]
        h: f64,
        /// Comma-separated component indices for the trajectory output.
        #[arg(long, value_delimiter = ',')]
        components: Vec<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-execute a recorded manifest; outputs are byte-identical.
    Replay { manifest: PathBuf },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    dispatch(cli.command)
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Verify {
            methods,
            all,
            out,
            expect,
            seed,
        } => cmd_verify(methods, all, out, expect, seed),
        Command::Region {
            method,
            kind,
            alpha,
            y,
            out,
            seed,
        } => cmd_region(method, kind, alpha, y, out, seed),
        Command::Converge {
            method,
            problem,
            n,
            epsilon,
            h,
            out,
            seed,
        } => cmd_converge(method, problem, n, epsilon, h, out, seed),
        Command::Solve {
            method,
            problem,
            n,
            epsilon,
            lambda0,
            lambda1,
            h,
            components,
            out,
            seed,
        } => cmd_solve(method, problem, n, epsilon, lambda0, lambda1, h, components, out, seed),
        Command::Replay { manifest } => cmd_replay(manifest),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegionSummary {
    area: f64,
    interval: (f64, f64),
    center: f64,
    star_violations: usize,
    center_unstable: bool,
    interval_gaps: usize,
}

impl From<&Region> for RegionSummary {
    fn from(r: &Region) -> Self {
        RegionSummary {
            area: r.area,
            interval: r.interval,
            center: r.center,
            star_violations: r.star_violations,
            center_unstable: r.center_unstable,
            interval_gaps: r.interval_gaps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MethodReport {
    method: String,
    stages: usize,
    order: usize,
    order_residual: f64,
    order_residual_explicit: f64,
    order_residual_implicit: f64,
    ssp: SspCertificate,
    a_stability: AStabilityReport,
    l_stability: LStabilityReport,
    region_explicit: RegionSummary,
    region_wedge: RegionSummary,
    /// Stability-region area of the classical explicit one-step method of
    /// the same order, reported only where that method is embedded (the
    /// order-1 explicit part is exactly forward Euler).
    area_s_rk: Option<f64>,
}

fn verify_one(name: &str) -> Result<MethodReport> {
    let t = catalog(name)?;
    let order_report = verify_order(&t);
    let ssp = ssp_coefficient(&t, 1e-8);
    let a_stability = a_stability_check(&t, A_STABILITY_Y_MAX, A_STABILITY_SAMPLES);
    let l_stability = l_stability_check(&t);
    let grid = GridSpec::default();
    let se = region_explicit(&t, &grid);
    let wedge = region_wedge(&t, std::f64::consts::FRAC_PI_2, &grid);
    let area_s_rk = (t.p == 1).then_some(se.area);
    Ok(MethodReport {
        method: t.name.clone(),
        stages: t.s,
        order: t.p,
        order_residual: order_report.max_residual(),
        order_residual_explicit: order_report
            .stage_explicit
            .max(order_report.output_explicit),
        order_residual_implicit: order_report
            .stage_implicit
            .max(order_report.output_implicit),
        ssp,
        a_stability,
        l_stability,
        region_explicit: RegionSummary::from(&se),
        region_wedge: RegionSummary::from(&wedge),
        area_s_rk,
    })
}

/// Expected values: per method, `[target, tolerance]` pairs for numeric
/// fields plus optional boolean verdicts.
#[derive(Debug, Clone, Deserialize)]
struct Expectation {
    #[serde(default)]
    c: Option<(f64, f64)>,
    #[serde(default)]
    area_se: Option<(f64, f64)>,
    #[serde(default)]
    area_spi2: Option<(f64, f64)>,
    #[serde(default)]
    int_se: Option<(f64, f64)>,
    #[serde(default)]
    int_spi2: Option<(f64, f64)>,
    #[serde(default)]
    a_stable: Option<bool>,
    #[serde(default)]
    l_stable: Option<bool>,
}

fn check_expectations(
    reports: &[MethodReport],
    table: &BTreeMap<String, Expectation>,
) -> Vec<String> {
    let mut mismatches = Vec::new();
    for report in reports {
        let Some(exp) = table.get(&report.method) else {
            continue;
        };
        let mut check = |label: &str, got: f64, spec: Option<(f64, f64)>| {
            if let Some((want, tol)) = spec {
                if (got - want).abs() > tol {
                    mismatches.push(format!(
                        "{}: {label} = {got:.4} but expected {want} +/- {tol}",
                        report.method
                    ));
                }
            }
        };
        check("C", report.ssp.coefficient, exp.c);
        check("area(SE)", report.region_explicit.area, exp.area_se);
        check("area(Spi2)", report.region_wedge.area, exp.area_spi2);
        check("int(SE)", report.region_explicit.interval.0, exp.int_se);
        check("int(Spi2)", report.region_wedge.interval.0, exp.int_spi2);
        if let Some(want) = exp.a_stable {
            if report.a_stability.a_stable != want {
                mismatches.push(format!("{}: A-stable = {}", report.method, !want));
            }
        }
        if let Some(want) = exp.l_stable {
            if report.l_stability.l_stable != want {
                mismatches.push(format!("{}: L-stable = {}", report.method, !want));
            }
        }
    }
    mismatches
}

fn cmd_verify(
    methods: Vec<String>,
    all: bool,
    out: PathBuf,
    expect: Option<PathBuf>,
    seed: u64,
) -> Result<ExitCode> {
    let started = Instant::now();
    let names: Vec<String> = if all || methods.is_empty() {
        CATALOG_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        methods
    };
    let mut man = RunManifest::new("verify", out.clone());
    man.methods = names.clone();
    man.expect = expect.clone();
    man.seed = seed;

    let mut reports = Vec::new();
    for name in &names {
        let report = verify_one(name)?;
        let path = out.join(format!("verify_{}.json", report.method));
        write_text(&path, &serde_json::to_string_pretty(&report)?)?;
        man.outputs.push(path);
        eprintln!(
            "verified {} in {:.1} s",
            report.method,
            started.elapsed().as_secs_f64()
        );
        reports.push(report);
    }

    // combined summary table
    let table_path = out.join("verify_table.json");
    write_text(&table_path, &serde_json::to_string_pretty(&reports)?)?;
    man.outputs.push(table_path);
    println!(
        "{:<10} {:>7} {:>7} {:>9} {:>11} {:>10} {:>11} {:>10}",
        "Method", "C", "C_eff", "area(SE)", "area(Spi2)", "int(SE)", "int(Spi2)", "area(SRK)"
    );
    for r in &reports {
        println!(
            "{:<10} {:>7.4} {:>7.4} {:>9.4} {:>11.4} {:>10.4} {:>11.4} {:>10}",
            r.method,
            r.ssp.coefficient,
            r.ssp.effective,
            r.region_explicit.area,
            r.region_wedge.area,
            r.region_explicit.interval.0,
            r.region_wedge.interval.0,
            r.area_s_rk.map_or("-".to_string(), |a| format!("{a:.4}")),
        );
    }

    let mut code = ExitCode::SUCCESS;
    if let Some(expect_path) = &expect {
        let text = std::fs::read_to_string(expect_path)
            .with_context(|| format!("reading {}", expect_path.display()))?;
        let table: BTreeMap<String, Expectation> = serde_json::from_str(&text)?;
        let mismatches = check_expectations(&reports, &table);
        if !mismatches.is_empty() {
            for m in &mismatches {
                eprintln!("expectation mismatch: {m}");
            }
            code = ExitCode::from(2);
        }
    }
    man.wall_time_ms = Some(started.elapsed().as_millis());
    write_text(&out.join("manifest.json"), &serde_json::to_string_pretty(&man)?)?;
    Ok(code)
}

fn cmd_region(
    method: String,
    kind: String,
    alpha_deg: f64,
    y: Option<f64>,
    out: PathBuf,
    seed: u64,
) -> Result<ExitCode> {
    let started = Instant::now();
    if !(alpha_deg > 0.0 && alpha_deg <= 90.0) {
        bail!("alpha must lie in (0, 90] degrees, got {alpha_deg}");
    }
    let t = catalog(&method)?;
    let alpha = alpha_deg.to_radians();
    let grid = GridSpec::default();
    let region = match kind.to_ascii_uppercase().as_str() {
        "SE" => region_explicit(&t, &grid),
        "SALPHA" => region_wedge(&t, alpha, &grid),
        "SALPHAY" => region_fixed_implicit(&t, alpha, y.unwrap_or(0.0), &grid),
        other => bail!("unknown region kind `{other}` (expected SE, Salpha or SalphaY)"),
    };

    let mut csv = Csv::new(&["theta", "boundary_re", "boundary_im"]);
    for bp in &region.boundary {
        csv.number_row(&[bp.theta, bp.re, bp.im]);
    }
    let stem = format!("region_{}_{}", t.name, kind.to_ascii_uppercase());
    let csv_path = out.join(format!("{stem}.csv"));
    write_text(&csv_path, &csv.finish())?;
    let sidecar_path = out.join(format!("{stem}.json"));
    write_text(
        &sidecar_path,
        &serde_json::to_string_pretty(&RegionSummary::from(&region))?,
    )?;
    println!(
        "{} {}: area = {}, interval = ({}, 0)",
        t.name,
        kind,
        fmt(region.area),
        fmt(region.interval.0)
    );

    let mut man = RunManifest::new("region", out.clone());
    man.methods = vec![t.name.clone()];
    man.kind = Some(kind);
    man.alpha_deg = Some(alpha_deg);
    man.y = y;
    man.seed = seed;
    man.outputs = vec![csv_path, sidecar_path];
    man.wall_time_ms = Some(started.elapsed().as_millis());
    write_text(&out.join("manifest.json"), &serde_json::to_string_pretty(&man)?)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_complex(text: &Option<String>, default: Complex64) -> Result<Complex64> {
    match text {
        None => Ok(default),
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            match parts.as_slice() {
                [re] => Ok(Complex64::new(re.trim().parse()?, 0.0)),
                [re, im] => Ok(Complex64::new(re.trim().parse()?, im.trim().parse()?)),
                _ => Err(anyhow!("expected `re` or `re,im`, got `{s}`")),
            }
        }
    }
}

fn build_problem(
    problem: &str,
    n: Option<usize>,
    epsilon: Option<f64>,
    lambda0: &Option<String>,
    lambda1: &Option<String>,
) -> Result<dimsim_core::integrator::SplitProblem> {
    let params = ProblemParams {
        n,
        epsilon,
        lambda0: parse_complex(lambda0, Complex64::new(0.0, 0.0))?,
        lambda1: parse_complex(lambda1, Complex64::new(-1.0, 0.0))?,
    };
    by_name(problem, &params)
        .map_err(|e| anyhow!("{e}; known problems: {}", PROBLEM_NAMES.join(", ")))
}

fn cmd_converge(
    method: String,
    problem: String,
    n: Option<usize>,
    epsilon: Option<f64>,
    h: Vec<f64>,
    out: PathBuf,
    seed: u64,
) -> Result<ExitCode> {
    let started = Instant::now();
    let t = catalog(&method)?;
    let prob = build_problem(&problem, n, epsilon, &None, &None)?;
    let study = convergence_study(&t, &prob, &h, &IntegrateOptions::default())?;

    let mut csv = Csv::new(&["h", "error", "pairwise_order", "failure"]);
    for row in &study.rows {
        csv.row(&[
            fmt(row.h),
            fmt(row.error),
            row.pairwise_order.map_or(String::new(), fmt),
            row.failure.clone().unwrap_or_default(),
        ]);
    }
    let stem = format!("converge_{}_{}", t.name, problem);
    let csv_path = out.join(format!("{stem}.csv"));
    write_text(&csv_path, &csv.finish())?;
    let json_path = out.join(format!("{stem}.json"));
    write_text(&json_path, &serde_json::to_string_pretty(&study)?)?;
    println!(
        "{} on {}: observed order {}{}",
        t.name,
        prob.name,
        fmt(study.observed_order),
        if study.start_sensitivity_flag {
            " (start-sensitivity flag raised)"
        } else {
            ""
        }
    );

    let mut man = RunManifest::new("converge", out.clone());
    man.methods = vec![t.name.clone()];
    man.problem = Some(problem);
    man.n = n;
    man.epsilon = epsilon;
    man.h_list = h;
    man.seed = seed;
    man.outputs = vec![csv_path, json_path];
    man.wall_time_ms = Some(started.elapsed().as_millis());
    write_text(&out.join("manifest.json"), &serde_json::to_string_pretty(&man)?)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct SolveMetadata {
    method: String,
    problem: String,
    h: f64,
    steps: usize,
    dim: usize,
    counters: dimsim_core::integrator::Counters,
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    method: String,
    problem: String,
    n: Option<usize>,
    epsilon: Option<f64>,
    lambda0: Option<String>,
    lambda1: Option<String>,
    h: f64,
    components: Vec<usize>,
    out: PathBuf,
    seed: u64,
) -> Result<ExitCode> {
    let started = Instant::now();
    let t = catalog(&method)?;
    let prob = build_problem(&problem, n, epsilon, &lambda0, &lambda1)?;
    let options = IntegrateOptions {
        store_trajectory: true,
        start_mode: StartMode::Auto,
        ..IntegrateOptions::default()
    };
    let run = integrate(&t, &prob, h, &options)?;

    let selected: Vec<usize> = if components.is_empty() {
        let cap = prob.physical_dim.min(8);
        (0..cap).collect()
    } else {
        for &c in &components {
            if c >= prob.dim {
                bail!("component {c} out of range for dimension {}", prob.dim);
            }
        }
        components
    };
    let mut header = vec!["t".to_string()];
    header.extend(selected.iter().map(|c| format!("y{c}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for (time, snapshot) in run.times.iter().zip(&run.trajectory) {
        let mut row = vec![*time];
        row.extend(selected.iter().map(|&c| snapshot[c]));
        csv.number_row(&row);
    }
    let stem = format!("solve_{}_{}", t.name, problem);
    let csv_path = out.join(format!("{stem}.csv"));
    write_text(&csv_path, &csv.finish())?;
    let meta = SolveMetadata {
        method: t.name.clone(),
        problem: prob.name.clone(),
        h,
        steps: run.times.len().saturating_sub(1),
        dim: prob.dim,
        counters: run.counters,
    };
    let meta_path = out.join(format!("{stem}_meta.json"));
    write_text(&meta_path, &serde_json::to_string_pretty(&meta)?)?;
    println!(
        "{} on {}: {} steps, terminal |y0| = {}",
        t.name,
        prob.name,
        meta.steps,
        fmt(run.final_solution[0].abs())
    );

    let mut man = RunManifest::new("solve", out.clone());
    man.methods = vec![t.name.clone()];
    man.problem = Some(problem);
    man.n = n;
    man.epsilon = epsilon;
    man.lambda0 = lambda0
        .as_ref()
        .map(|s| parse_complex(&Some(s.clone()), Complex64::ZERO))
        .transpose()?
        .map(|z| (z.re, z.im));
    man.lambda1 = lambda1
        .as_ref()
        .map(|s| parse_complex(&Some(s.clone()), Complex64::ZERO))
        .transpose()?
        .map(|z| (z.re, z.im));
    man.h_list = vec![h];
    man.components = selected;
    man.seed = seed;
    man.outputs = vec![csv_path, meta_path];
    man.wall_time_ms = Some(started.elapsed().as_millis());
    write_text(&out.join("manifest.json"), &serde_json::to_string_pretty(&man)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(path: PathBuf) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    let man: RunManifest = serde_json::from_str(&text)?;
    let fmt_pair = |p: (f64, f64)| format!("{},{}", p.0, p.1);
    match man.command.as_str() {
        "verify" => cmd_verify(man.methods, false, man.out, man.expect, man.seed),
        "region" => cmd_region(
            man.methods
                .first()
                .cloned()
                .ok_or_else(|| anyhow!("manifest lacks a method"))?,
            man.kind.unwrap_or_else(|| "SE".into()),
            man.alpha_deg.unwrap_or(90.0),
            man.y,
            man.out,
            man.seed,
        ),
        "converge" => cmd_converge(
            man.methods
                .first()
                .cloned()
                .ok_or_else(|| anyhow!("manifest lacks a method"))?,
            man.problem.ok_or_else(|| anyhow!("manifest lacks a problem"))?,
            man.n,
            man.epsilon,
            man.h_list,
            man.out,
            man.seed,
        ),
        "solve" => cmd_solve(
            man.methods
                .first()
                .cloned()
                .ok_or_else(|| anyhow!("manifest lacks a method"))?,
            man.problem.ok_or_else(|| anyhow!("manifest lacks a problem"))?,
            man.n,
            man.epsilon,
            man.lambda0.map(fmt_pair),
            man.lambda1.map(fmt_pair),
            *man
                .h_list
                .first()
                .ok_or_else(|| anyhow!("manifest lacks a stepsize"))?,
            man.components,
            man.out,
            man.seed,
        ),
        other => bail!("manifest command `{other}` is not replayable"),
    }
}
