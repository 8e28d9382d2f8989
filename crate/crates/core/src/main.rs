use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use chlab::harness::{audit_trajectory, run_scenario, selftest, ScenarioConfig, ScenarioReport};
use chlab::modulation::{default_n0, slope_floor, track, verify_n0};
use chlab::trajectory::Trajectory;

#[derive(Parser)]
#[command(name = "chlab", version, about = "Camassa-Holm peakon laboratory")]
struct Cli {
    /// Base directory for outputs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Scenarios run concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Print only failures and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario config files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Monotonicity audit of a trajectory directory written by `run`.
    Audit {
        dir: PathBuf,
        /// Localization radii.
        #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
        r: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        z_fraction: f64,
    },
    /// Check the pairing monotonicity for the orthogonality mollifier.
    VerifyN0 {
        #[arg(long)]
        n0: Option<u32>,
    },
    /// Built-in consistency checks.
    Selftest,
}

fn print_report(report: &ScenarioReport, name: &str, dir: &Path, quiet: bool) {
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    if !quiet || !report.passed() {
        println!("{name}: {verdict} ({})", dir.display());
    }
    if let Some(msg) = &report.aborted {
        println!("  aborted: {msg}");
    }
    for c in &report.checks {
        if !quiet || !c.passed() {
            println!("  {}", c.line());
        }
    }
}

fn scenario_dir(out: &Path, path: &Path, cfg: &ScenarioConfig) -> PathBuf {
    match &cfg.output {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => out.join(p),
        None => out.join(path.file_stem().unwrap_or(path.as_os_str())),
    }
}

type Outcome = Result<(ScenarioReport, PathBuf), String>;

fn run(configs: &[PathBuf], out: &Path, jobs: usize, quiet: bool) -> ExitCode {
    let results: Vec<Mutex<Option<Outcome>>> =
        configs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= configs.len() {
            break;
        }
        let path = &configs[i];
        let outcome = ScenarioConfig::read(path)
            .and_then(|cfg| {
                let dir = scenario_dir(out, path, &cfg);
                run_scenario(&cfg, &dir).map(|r| (r, dir))
            })
            .map_err(|e| e.to_string());
        *results[i].lock().expect("result slot") = Some(outcome);
    };
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, configs.len().max(1)) {
            s.spawn(worker);
        }
    });
    let mut code = ExitCode::SUCCESS;
    for (path, slot) in configs.iter().zip(results) {
        match slot.into_inner().expect("result slot") {
            Some(Ok((report, dir))) => {
                print_report(&report, &path.display().to_string(), &dir, quiet);
                if !report.passed() {
                    code = ExitCode::from(1);
                }
            }
            Some(Err(msg)) => {
                eprintln!("{}: error: {msg}", path.display());
                code = ExitCode::from(2);
            }
            None => unreachable!("every config is claimed by a worker"),
        }
    }
    code
}

fn audit(dir: &Path, out: &Path, rs: &[f64], z_fraction: f64, quiet: bool) -> chlab::Result<bool> {
    let traj = Trajectory::read_dir(dir)?;
    let n0 = default_n0();
    let tr = track(&traj, n0)?;
    if tr.len() != traj.len() {
        return Err(chlab::Error::Domain(format!(
            "modulation lost: {}",
            tr.lost.clone().unwrap_or_default()
        )));
    }
    let header = vec![
        format!("audit of {}", dir.display()),
        format!("n0 = {n0}"),
        format!("z_fraction = {z_fraction}"),
    ];
    let gammas = [0.0, 0.5 * tr.lambda[0]];
    std::fs::create_dir_all(out)?;
    let mut report = ScenarioReport::new("audit");
    audit_trajectory(&traj, &tr.x, rs, &gammas, z_fraction, out, &header, &mut report)?;
    let summary = report.summary(&header);
    std::fs::write(out.join("summary.txt"), summary)?;
    print_report(&report, "audit", out, quiet);
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { configs } => run(configs, &cli.out, cli.jobs, cli.quiet),
        Command::Audit { dir, r, z_fraction } => {
            match audit(dir, &cli.out.join("audit"), r, *z_fraction, cli.quiet) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("audit: error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::VerifyN0 { n0 } => {
            let n0 = n0.unwrap_or_else(default_n0);
            match verify_n0(n0) {
                Ok(r) => {
                    println!(
                        "n0 = {} monotone = {} min_slope = {:.6e} floor = {:.6e} {}",
                        r.n0,
                        r.monotone,
                        r.min_slope,
                        slope_floor(),
                        if r.admissible() { "PASS" } else { "FAIL" }
                    );
                    if r.admissible() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("verify-n0: error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Selftest => match selftest() {
            Ok(checks) => {
                for c in &checks {
                    if !cli.quiet || !c.passed() {
                        println!("{}", c.line());
                    }
                }
                if checks.iter().all(|c| c.passed()) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("selftest: error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
