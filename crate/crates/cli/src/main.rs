//! `traverse-lab`: scenario-driven experiments with traversing flows,
//! boundary causality tables, and flat billiards.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration error,
//! 3 numeric degeneracy or failed checks (a report is still written).

mod scenario;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use scenario::Scenario;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use traverse_core::omega;
use traverse_core::selftest::{self, SuiteOptions};

#[derive(Parser)]
#[command(
    name = "traverse-lab",
    about = "Traversing flows on planar domains: causality tables, trajectory graphs, billiards",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files and write their artifacts.
    Run {
        /// Scenario TOML files (or builtin: disk, annulus, blob, shell).
        scenarios: Vec<String>,
        /// Output directory (TRAVERSE_LAB_OUT overrides).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seed override for scenario randomness.
        #[arg(long)]
        seed: Option<u64>,
        /// Parallel scenario jobs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Print the report as JSON to stdout.
        #[arg(long)]
        json: bool,
    },
    /// Run the acceptance suite on the built-in scenarios.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Machine-readable summary.
        #[arg(long)]
        json: bool,
    },
    /// Enumerate admissible multiplicity words.
    Poset {
        #[arg(long)]
        max_reduced_norm: u32,
        #[arg(long)]
        max_support: usize,
        #[arg(long)]
        json: bool,
    },
    /// Inspect a polynomial local model fiber.
    LocalModel {
        /// Multiplicity word, e.g. 121.
        #[arg(long)]
        omega: String,
        /// Root centers (comma separated), e.g. -1,0,1.
        #[arg(long)]
        roots: Option<String>,
        /// Coefficient vector (comma separated).
        #[arg(long)]
        x: Option<String>,
        /// Coefficient box radius (default: auto-fitted).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Quick billiard computations without a scenario file.
    Billiard {
        #[command(subcommand)]
        op: BilliardOp,
    },
}

#[derive(Subcommand)]
enum BilliardOp {
    /// Poncelet closure residuals for concentric circles.
    Poncelet {
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 0.5)]
        r2: f64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

const BUILTIN_SCENARIOS: [(&str, &str); 5] = [
    ("disk", include_str!("../scenarios/disk.toml")),
    ("annulus", include_str!("../scenarios/annulus.toml")),
    ("blob", include_str!("../scenarios/blob.toml")),
    ("shell", include_str!("../scenarios/shell.toml")),
    ("poncelet", include_str!("../scenarios/poncelet.toml")),
];

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenarios,
            out,
            seed,
            jobs,
            json,
        } => run_command(scenarios, out, seed, jobs, json),
        Command::Selftest { seed, json } => selftest_command(seed, json),
        Command::Poset {
            max_reduced_norm,
            max_support,
            json,
        } => {
            let words = omega::enumerate_admissible(max_reduced_norm, max_support);
            if json {
                let listing: Vec<String> = words.iter().map(|w| w.to_string()).collect();
                println!("{}", serde_json::to_string_pretty(&listing)?);
            } else {
                for w in words {
                    println!("{w}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::LocalModel {
            omega: word,
            roots,
            x,
            epsilon,
            json,
        } => local_model_command(&word, roots.as_deref(), x.as_deref(), epsilon, json),
        Command::Billiard { op } => billiard_command(op),
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid number {part:?}"))
        })
        .collect()
}

fn load_scenario(spec: &str) -> Result<(Scenario, String), (u8, String)> {
    let text = if let Some((_, builtin)) = BUILTIN_SCENARIOS.iter().find(|(n, _)| *n == spec) {
        builtin.to_string()
    } else {
        match std::fs::read_to_string(Path::new(spec)) {
            Ok(t) => t,
            Err(e) => return Err((2, format!("cannot read {spec}: {e}"))),
        }
    };
    let parsed: Scenario = match toml::from_str(&text) {
        Ok(s) => s,
        Err(e) => return Err((2, format!("{spec}: {e}"))),
    };
    if let Err(e) = parsed.validate() {
        return Err((2, format!("{spec}: {e}")));
    }
    Ok((parsed, text))
}

fn run_command(
    specs: Vec<String>,
    out: PathBuf,
    seed: Option<u64>,
    jobs: usize,
    json: bool,
) -> Result<ExitCode> {
    if specs.is_empty() {
        eprintln!("no scenarios given; try a builtin: disk, annulus, blob, shell, poncelet");
        return Ok(ExitCode::from(2));
    }
    let out_dir = std::env::var_os("TRAVERSE_LAB_OUT")
        .map(PathBuf::from)
        .unwrap_or(out);

    // load and validate everything first: config errors exit 2
    let mut loaded = Vec::new();
    for spec in &specs {
        match load_scenario(spec) {
            Ok(pair) => loaded.push(pair),
            Err((code, msg)) => {
                eprintln!("config error: {msg}");
                return Ok(ExitCode::from(code));
            }
        }
    }

    let jobs = jobs.max(1).min(loaded.len());
    let results: Vec<Result<scenario::RunOutput>> = if jobs <= 1 {
        loaded
            .iter()
            .map(|(sc, text)| scenario::run_scenario(sc, text, seed))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (sc, text) in &loaded {
                handles.push(scope.spawn(move || scenario::run_scenario(sc, text, seed)));
            }
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    };

    let mut worst = ExitCode::SUCCESS;
    for ((sc, _), result) in loaded.iter().zip(results) {
        match result {
            Ok(output) => {
                let dir = out_dir.join(&sc.name);
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                for (name, bytes) in &output.files {
                    std::fs::write(dir.join(name), bytes)?;
                }
                let report_json = serde_json::to_string_pretty(&output.report)?;
                std::fs::write(dir.join("report.json"), &report_json)?;
                if json {
                    println!("{report_json}");
                } else {
                    println!(
                        "{}: {} claims, {}",
                        sc.name,
                        output.report.claims.len(),
                        if output.report.all_passed() {
                            "all passed"
                        } else {
                            "FAILURES"
                        }
                    );
                    for claim in &output.report.claims {
                        println!(
                            "  [{}] {:<28} {}  {}",
                            claim.module,
                            claim.name,
                            if claim.passed { "ok" } else { "FAIL" },
                            claim.details
                        );
                    }
                }
                if !output.report.all_passed() {
                    worst = ExitCode::from(3);
                }
            }
            Err(e) => {
                eprintln!("{}: numeric failure: {e:#}", sc.name);
                worst = ExitCode::from(3);
            }
        }
    }
    Ok(worst)
}

fn selftest_command(seed: u64, json: bool) -> Result<ExitCode> {
    let reports = selftest::run_all(&SuiteOptions {
        seed,
        ..SuiteOptions::default()
    });
    let all_passed = reports.iter().all(|r| r.passed);
    if json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        print!("{}", selftest::format_reports(&reports));
        println!("selftest: {}", if all_passed { "PASS" } else { "FAIL" });
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn local_model_command(
    word: &str,
    roots: Option<&str>,
    x: Option<&str>,
    epsilon: Option<f64>,
    json: bool,
) -> Result<ExitCode> {
    use traverse_core::local_model::{components_of, LocalModel};
    use traverse_core::omega::OmegaWord;

    let omega: OmegaWord = match word.parse() {
        Ok(w) => w,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let roots = match roots {
        Some(r) => parse_floats(r)?,
        None => (0..omega.len()).map(|i| i as f64 * 2.0).collect(),
    };
    let model = match match epsilon {
        Some(eps) => LocalModel::new(omega, roots, eps, 1.0),
        None => LocalModel::with_auto_box(omega, roots),
    } {
        Ok(m) => m,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let x = match x {
        Some(s) => parse_floats(s)?,
        None => vec![0.0; model.coeff_dim()],
    };
    match model.fiber_divisor(&x) {
        Ok(divisor) => {
            let comps = components_of(&divisor);
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "omega": model.omega().to_string(),
                        "epsilon": model.epsilon(),
                        "divisor": divisor,
                        "components": comps,
                    })
                );
            } else {
                println!("model {} (epsilon {})", model.omega(), model.epsilon());
                println!("fiber word: {}", divisor.word());
                for p in &divisor.points {
                    println!(
                        "  root u={:+.6} multiplicity {} polarity {}",
                        p.position,
                        p.multiplicity,
                        match p.polarity {
                            traverse_core::local_model::Polarity::Plus => "+",
                            traverse_core::local_model::Polarity::Minus => "-",
                        }
                    );
                }
                for c in &comps {
                    println!(
                        "  component [{}, {:.6}]{}",
                        c.lo.map_or("-inf".into(), |v| format!("{v:.6}")),
                        c.hi,
                        if c.is_singleton() { " (singleton)" } else { "" }
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("numeric failure: {e}");
            Ok(ExitCode::from(3))
        }
    }
}

fn billiard_command(op: BilliardOp) -> Result<ExitCode> {
    match op {
        BilliardOp::Poncelet {
            r1,
            r2,
            k,
            starts,
            seed,
            json,
        } => {
            use rand::Rng as _;
            use traverse_core::billiards::{poncelet_check, Curve};
            use traverse_core::geom::Vec2;
            let q1 = Curve::circle(Vec2::default(), r1);
            let q2 = Curve::circle(Vec2::default(), r2);
            let mut rng = selftest::seeded_rng(seed);
            let start_points: Vec<Vec2> = (0..starts)
                .map(|_| q1.point_at_param(rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            match poncelet_check(&q1, &q2, k, &start_points) {
                Ok(residuals) => {
                    if json {
                        println!("{}", serde_json::to_string_pretty(&residuals)?);
                    } else {
                        for (i, r) in residuals.iter().enumerate() {
                            println!("start {i}: residual {r:.3e}");
                        }
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("numeric failure: {e}");
                    Ok(ExitCode::from(3))
                }
            }
        }
    }
}
