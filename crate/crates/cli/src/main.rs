use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finsler_harness::catalog::render;
use finsler_harness::{
    check_distinct_outputs, list_catalog, run_scenario, validate_config, write_output, HarnessError, Overrides,
    ScenarioConfig, EXIT_FAIL, EXIT_PASS,
};

#[derive(Parser)]
#[command(name = "finsler", version, about = "Run numerical Finsler geometry scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output directory (only with a single scenario).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every upper-bound threshold.
        #[arg(long = "tol-scale")]
        tol_scale: Option<f64>,
        /// Print the report JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// List metric families, operations, experiments and suites.
    Catalog {
        filter: Option<String>,
        #[arg(long)]
        json: bool,
    },
}

fn load_all(configs: &[PathBuf], overrides: &Overrides) -> Result<Vec<ScenarioConfig>, HarnessError> {
    if overrides.out.is_some() && configs.len() > 1 {
        return Err(HarnessError::Config("--out cannot be shared by several scenarios".into()));
    }
    let cfgs = configs
        .iter()
        .map(|p| ScenarioConfig::load(p).map(|c| c.apply(overrides)))
        .collect::<Result<Vec<_>, _>>()?;
    for c in &cfgs {
        validate_config(c)?;
    }
    check_distinct_outputs(&cfgs)?;
    for c in &cfgs {
        finsler_harness::prepare_output(c)?;
    }
    Ok(cfgs)
}

fn run(configs: Vec<PathBuf>, overrides: Overrides, json: bool) -> i32 {
    let cfgs = match load_all(&configs, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = cfgs
            .iter()
            .map(|c| s.spawn(move || run_scenario(c).and_then(|out| write_output(c, &out).map(|p| (out, p)))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    let mut code = EXIT_PASS;
    for (path, res) in configs.iter().zip(results) {
        match res {
            Ok((out, report_path)) => {
                let r = &out.report;
                if json {
                    print!("{}", r.to_json());
                } else {
                    println!(
                        "{} [{} on {}]: {} ({:.2}s) -> {}",
                        path.display(),
                        r.scenario.operation,
                        r.scenario.metric.name(),
                        if r.passed { "PASS" } else { "FAIL" },
                        r.wall_time_s,
                        report_path.display()
                    );
                    for c in &r.checks {
                        let bound = match c.threshold {
                            Some(t) => format!(" (threshold {t:e})"),
                            None => String::new(),
                        };
                        let mark = if c.pass { "ok  " } else { "FAIL" };
                        println!("  {mark} {:<48} {:e}{bound}", c.name, c.value);
                    }
                    if let Some(e) = &r.error {
                        println!("  error: {e}");
                    }
                }
                if !r.passed {
                    code = code.max(EXIT_FAIL);
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                code = code.max(e.exit_code());
            }
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            configs,
            out,
            seed,
            tol_scale,
            json,
        } => run(configs, Overrides { out, seed, tol_scale }, json),
        Command::Catalog { filter, json } => {
            let entries = list_catalog(filter.as_deref());
            if json {
                println!("{}", serde_json::to_string_pretty(&entries).expect("catalog serializes"));
            } else {
                print!("{}", render(&entries));
            }
            EXIT_PASS
        }
    };
    ExitCode::from(code as u8)
}
