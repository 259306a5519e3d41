//! Config-driven CLI: solve Root barriers, embed by simulation, and run
//! verification suites. Exit status: 0 pass, 1 check failure,
//! 2 configuration error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use root_barrier::config::CheckDef;
use root_barrier::verify::{self, Check, CheckStatus};
use root_barrier::{
    config_hash, ks_distance, simulate_stopped, Barrier, EmbeddingProblem, ScenarioConfig,
    SimParams, SolveGrid, VerificationReport, VerifyError, VERSION,
};

#[derive(Parser)]
#[command(
    name = "rootbarrier",
    version,
    about = "Root barriers for the Skorokhod embedding problem: obstacle-problem solver, stopped-path simulation, and verification suites",
    after_help = "Parallelism: simulation uses all cores; set RAYON_NUM_THREADS to override.\nResults are identical for any thread count."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the obstacle problem and write the extracted barrier CSV
    Solve { config: PathBuf },
    /// Simulate the stopped diffusion for a barrier and report the KS distance
    Embed { config: PathBuf, barrier: PathBuf },
    /// Run a verification suite and write its report
    Verify {
        config: PathBuf,
        #[arg(long, value_parser = ["lemmas", "theorem", "counterexample"])]
        suite: String,
    },
    /// Write a documented sample configuration to the given path
    Example { config: PathBuf },
}

const EXIT_CHECK_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Solve { config } => cmd_solve(&config),
        Cmd::Embed { config, barrier } => cmd_embed(&config, &barrier),
        Cmd::Verify { config, suite } => cmd_verify(&config, &suite),
        Cmd::Example { config } => cmd_example(&config),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(msg) => {
            eprintln!("rootbarrier: {}", msg.text);
            ExitCode::from(msg.code)
        }
    }
}

struct Failure {
    code: u8,
    text: String,
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        text: e.to_string(),
    }
}

fn numerical_err(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_NUMERICAL,
        text: e.to_string(),
    }
}

struct Loaded {
    cfg: ScenarioConfig,
    hash: String,
    problem: EmbeddingProblem,
    grid: SolveGrid,
}

fn load(config_path: &Path) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| config_err(format!("{}: {e}", config_path.display())))?;
    let hash = config_hash(&text);
    let cfg = ScenarioConfig::parse(&text).map_err(config_err)?;
    let problem = EmbeddingProblem {
        initial: cfg.measure(&cfg.problem.initial).map_err(config_err)?,
        target: cfg.measure(&cfg.problem.target).map_err(config_err)?,
        diffusion: cfg.diffusion.build().map_err(config_err)?,
    };
    let grid = cfg.grid.build().map_err(config_err)?;
    fs::create_dir_all(&cfg.output_dir).map_err(config_err)?;
    Ok(Loaded {
        cfg,
        hash,
        problem,
        grid,
    })
}

fn provenance(hash: &str, seed: Option<u64>) -> Vec<String> {
    let mut out = vec![
        format!("tool = rootbarrier {VERSION}"),
        format!("config = {hash}"),
    ];
    if let Some(s) = seed {
        out.push(format!("seed = {s}"));
    }
    out
}

fn solve_current(l: &Loaded) -> Result<(Barrier, root_barrier::ValueSurface), Failure> {
    root_barrier::solve(&l.problem, &l.grid).map_err(|e| match e {
        root_barrier::SolverError::PsorDiverged { .. } => numerical_err(e),
        other => config_err(other),
    })
}

fn cmd_solve(config_path: &Path) -> Result<u8, Failure> {
    let l = load(config_path)?;
    let (barrier, surface) = solve_current(&l)?;
    let comments = provenance(&l.hash, None);
    let barrier_path = l.cfg.output_dir.join(format!("barrier_{}.csv", l.hash));
    barrier
        .write_csv_file(&barrier_path, &comments)
        .map_err(numerical_err)?;
    println!("barrier written to {}", barrier_path.display());
    if l.cfg.grid.write_surface {
        let surf_path = l.cfg.output_dir.join(format!("surface_{}.csv", l.hash));
        let f = fs::File::create(&surf_path).map_err(numerical_err)?;
        surface
            .write_csv(std::io::BufWriter::new(f), &comments)
            .map_err(numerical_err)?;
        println!("surface written to {}", surf_path.display());
    }
    let res = root_barrier::residual_report(&surface, &l.problem, l.grid.theta);
    let res_path = l.cfg.output_dir.join(format!("residual_{}.toml", l.hash));
    let mut body = String::new();
    for c in &comments {
        body.push_str(&format!("# {c}\n"));
    }
    body.push_str(&format!(
        "max_residual = {}\nat_t = {}\nat_x = {}\nkink_max_residual = {}\nkink_nodes = {:?}\n",
        res.max_residual, res.at_t, res.at_x, res.kink_max_residual, res.kink_nodes
    ));
    fs::write(&res_path, body).map_err(numerical_err)?;
    let (modulus, at) = barrier.continuity_modulus();
    println!("continuity modulus = {modulus} at x = {at}");
    Ok(0)
}

fn cmd_embed(config_path: &Path, barrier_path: &Path) -> Result<u8, Failure> {
    let l = load(config_path)?;
    let sim = l
        .cfg
        .sim
        .as_ref()
        .ok_or_else(|| config_err("embed requires a [sim] block"))?;
    let barrier = Barrier::read_csv_file(barrier_path)
        .map_err(|e| config_err(format!("{}: {e}", barrier_path.display())))?;
    let law = simulate_stopped(
        &l.problem.diffusion,
        &l.problem.initial,
        &barrier,
        sim.t_eval,
        sim.dt,
        sim.n_paths,
        sim.seed,
        sim.t_cap,
    )
    .map_err(numerical_err)?;
    let comments = provenance(&l.hash, Some(sim.seed));
    let law_path = l.cfg.output_dir.join(format!("law_{}.csv", l.hash));
    let f = fs::File::create(&law_path).map_err(numerical_err)?;
    law.write_csv(std::io::BufWriter::new(f), &comments)
        .map_err(numerical_err)?;
    println!("empirical law written to {}", law_path.display());
    let rate = law.unstopped_rate();
    println!("unstopped rate = {rate}");
    if !barrier.has_inf() && sim.t_eval.is_none() && rate > 1e-3 {
        return Err(numerical_err(format!(
            "unstopped-path rate {rate} exceeds 0.1% for a finite barrier"
        )));
    }
    let ks = ks_distance(&law, &l.problem.target);
    println!("KS distance to target = {ks}");
    if let Some(thr) = sim.ks_threshold {
        if ks > thr {
            println!("FAIL: KS {ks} > threshold {thr}");
            return Ok(EXIT_CHECK_FAIL);
        }
    }
    Ok(0)
}

fn cmd_verify(config_path: &Path, suite: &str) -> Result<u8, Failure> {
    let l = load(config_path)?;
    let report = match suite {
        "lemmas" => run_lemmas(&l)?,
        "theorem" => {
            let sizes = l
                .cfg
                .theorem
                .as_ref()
                .map(|t| t.grid_sizes.clone())
                .ok_or_else(|| config_err("theorem suite requires a [theorem] block"))?;
            let grids: Vec<SolveGrid> = sizes
                .iter()
                .map(|&n| SolveGrid {
                    n_x: n,
                    n_t: n,
                    ..l.grid.clone()
                })
                .collect();
            verify::theorem_suite(&l.problem, &grids).map_err(verify_failure)?
        }
        "counterexample" => {
            let ce = l
                .cfg
                .counterexample
                .as_ref()
                .ok_or_else(|| config_err("counterexample suite requires a [counterexample] block"))?;
            let out = verify::build_counterexample(ce.x, ce.n_intervals, &l.grid)
                .map_err(verify_failure)?;
            let path = l
                .cfg
                .output_dir
                .join(format!("counterexample_barrier_{}.csv", l.hash));
            out.barrier
                .write_csv_file(&path, &provenance(&l.hash, None))
                .map_err(numerical_err)?;
            println!("pasted barrier written to {}", path.display());
            out.report
        }
        other => return Err(config_err(format!("unknown suite `{other}`"))),
    };
    let seed = l.cfg.sim.as_ref().map(|s| s.seed);
    let report_path = l
        .cfg
        .output_dir
        .join(format!("report_{suite}_{}.toml", l.hash));
    let mut body = String::new();
    for c in provenance(&l.hash, seed) {
        body.push_str(&format!("# {c}\n"));
    }
    body.push_str(&report.to_toml_string());
    fs::write(&report_path, body).map_err(numerical_err)?;
    for c in &report.checks {
        let tag = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
        };
        println!("[{tag}] {} (stat {}, thr {})", c.name, c.statistic, c.threshold);
    }
    println!("report written to {}", report_path.display());
    Ok(if report.all_pass() { 0 } else { EXIT_CHECK_FAIL })
}

fn verify_failure(e: VerifyError) -> Failure {
    match e {
        VerifyError::HypothesisViolated(_) | VerifyError::Refused(_) => config_err(e),
        VerifyError::Solver(root_barrier::SolverError::PsorDiverged { .. }) => numerical_err(e),
        other => config_err(other),
    }
}

fn run_lemmas(l: &Loaded) -> Result<VerificationReport, Failure> {
    let mut report = VerificationReport::new("lemmas");
    let (barrier, _) = solve_current(l)?;
    let two_steps = 2.0 * l.grid.dt();
    let embed_probe: Vec<f64> = (0..1024)
        .map(|j| l.grid.x_min + (l.grid.x_max - l.grid.x_min) * j as f64 / 1023.0)
        .collect();
    for check in &l.cfg.checks {
        match check {
            CheckDef::CorridorMonotonicity { x, y, t, seeds } => {
                let sim = l.cfg.sim.as_ref().expect("validated");
                let spec = verify::CorridorSpec {
                    x: *x,
                    y: *y,
                    a_set: vec![],
                    s: *t,
                    t: *t,
                };
                for seed in effective_seeds(seeds, sim.seed) {
                    let c = verify::check_corridor_monotonicity(
                        &l.problem,
                        &barrier,
                        &spec,
                        SimParams {
                            dt: sim.dt,
                            n_paths: sim.n_paths,
                            seed,
                            t_cap: sim.t_cap,
                        },
                    )
                    .map_err(verify_failure)?;
                    report.push(c);
                }
            }
            CheckDef::CorridorBound { x, y, s, t, a, seeds } => {
                let sim = l.cfg.sim.as_ref().expect("validated");
                let spec = verify::CorridorSpec {
                    x: *x,
                    y: *y,
                    a_set: a.iter().map(|w| (w[0], w[1])).collect(),
                    s: *s,
                    t: *t,
                };
                for seed in effective_seeds(seeds, sim.seed) {
                    let c = verify::check_corridor_bound(
                        &l.problem,
                        &barrier,
                        &spec,
                        SimParams {
                            dt: sim.dt,
                            n_paths: sim.n_paths,
                            seed,
                            t_cap: sim.t_cap,
                        },
                    )
                    .map_err(verify_failure)?;
                    report.push(c);
                }
            }
            CheckDef::ScanRight {
                measure,
                y,
                eps,
                use_embedding,
                min_ratio,
            }
            | CheckDef::ScanSym {
                measure,
                y,
                eps,
                use_embedding,
                min_ratio,
            } => {
                let m = l.cfg.measure(measure).map_err(config_err)?;
                let embed;
                let windows = if *use_embedding {
                    embed = root_barrier::embedding_interval(
                        &l.problem.initial,
                        &l.problem.target,
                        &embed_probe,
                        1e-8,
                    )
                    .map_err(config_err)?;
                    Some(embed.as_slice())
                } else {
                    None
                };
                let sym = matches!(check, CheckDef::ScanSym { .. });
                let ratios = if sym {
                    verify::density_ratio_scan_sym(&m, eps, y, windows)
                } else {
                    verify::density_ratio_scan_right(&m, eps, y, windows)
                };
                let worst = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                let thr = min_ratio.unwrap_or(0.0);
                report.push(Check {
                    name: format!(
                        "{} measure={measure}",
                        if sym { "scan_sym" } else { "scan_right" }
                    ),
                    status: if worst >= thr {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    },
                    statistic: worst,
                    threshold: thr,
                    n_samples: ratios.len(),
                    seed: 0,
                    note: format!("ratios = {ratios:?}"),
                });
            }
            CheckDef::AtomConsistency {} => {
                report.push(verify::atom_consistency(&l.problem.target, &barrier, two_steps));
            }
            CheckDef::TailZero { x } => {
                report.push(verify::tail_zero_check(&l.problem.target, &barrier, *x, two_steps));
            }
            CheckDef::TailZeroBelow { x } => {
                report.push(verify::tail_zero_check_below(
                    &l.problem.target,
                    &barrier,
                    *x,
                    two_steps,
                ));
            }
        }
    }
    Ok(report)
}

fn effective_seeds(declared: &[u64], default: u64) -> Vec<u64> {
    if declared.is_empty() {
        vec![default]
    } else {
        declared.to_vec()
    }
}

fn cmd_example(path: &Path) -> Result<u8, Failure> {
    fs::write(path, SAMPLE_CONFIG).map_err(config_err)?;
    println!("sample config written to {}", path.display());
    Ok(0)
}

const SAMPLE_CONFIG: &str = r#"# rootbarrier scenario: embed N(0,1) into Brownian motion started at 0.
# The regular Root barrier is r = 1 (stop at time 1).
output_dir = "out"

[measures.mu0]
kind = "dirac"
loc = 0.0

[measures.target]
kind = "gaussian"
mean = 0.0
var = 1.0

[problem]
initial = "mu0"
target = "target"

[diffusion]
kind = "brownian"        # brownian | geometric | affine (alpha, beta)

[grid]
x_min = -8.5
x_max = 8.5
n_x = 600
t_cap = 2.0
n_t = 600
# theta = 1.0            # time scheme: 1 implicit (default), 0.5 Crank-Nicolson
# write_surface = true   # also dump the full value surface

[sim]
dt = 2.5e-4
n_paths = 100000
seed = 42
t_cap = 8.0
ks_threshold = 0.015

# Verification checks for `verify --suite lemmas`:
[[checks]]
kind = "corridor_monotonicity"
x = -9.0                 # outside the barrier span, so r(x) = 0 <= s
y = 9.0
t = 1.0

[[checks]]
kind = "scan_sym"
measure = "target"
y = [0.0, 0.0, 0.0]
eps = [1e-2, 1e-3, 1e-4]
min_ratio = 0.5

[theorem]
grid_sizes = [300, 600]
"#;
