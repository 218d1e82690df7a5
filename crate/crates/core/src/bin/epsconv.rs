use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use epsconv::report::{write_csv, write_svgs};
use epsconv::scenario::{bundled_scenarios, run_all, RunReport, Scenario, SuiteSummary};
use epsconv::Tolerances;

#[derive(Parser)]
#[command(name = "epsconv", version, about = "Run epsilon-subdifferential scenarios and write reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run every bundled fixture.
    Suite,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Args)]
struct Options {
    /// Half-width R of the comparison window [-R, R]^n.
    #[arg(long, global = true, env = "EPSCONV_WINDOW")]
    window: Option<f64>,
    /// Hausdorff tolerance for set comparisons.
    #[arg(long, global = true, env = "EPSCONV_SET_TOL")]
    set_tol: Option<f64>,
    /// Comma-separated, strictly decreasing eta values.
    #[arg(long, global = true, env = "EPSCONV_ETA_LADDER", value_delimiter = ',')]
    eta_ladder: Option<Vec<f64>>,
    /// Number of samples of each gamma split.
    #[arg(long, global = true, env = "EPSCONV_GAMMA_SPLITS")]
    gamma_splits: Option<usize>,
    /// Number of support directions in two or more dimensions.
    #[arg(long, global = true, env = "EPSCONV_DIRS")]
    dirs: Option<usize>,
    #[arg(long, global = true, env = "EPSCONV_OUT_DIR", default_value = "epsconv-report")]
    out_dir: PathBuf,
    #[arg(long, global = true, env = "EPSCONV_FORMAT", value_enum, default_value = "csv")]
    format: Format,
    /// Leave the millis column empty (byte-identical reruns).
    #[arg(long, global = true, env = "EPSCONV_NO_TIMING")]
    no_timing: bool,
}

impl Options {
    fn tolerances(&self) -> Result<Tolerances, String> {
        let mut t = Tolerances::default();
        if let Some(v) = self.window {
            t.window_radius = v;
        }
        if let Some(v) = self.set_tol {
            t.set_tol = v;
        }
        if let Some(v) = &self.eta_ladder {
            t.eta_ladder = v.clone();
        }
        if let Some(v) = self.gamma_splits {
            t.gamma_splits = v;
        }
        if let Some(v) = self.dirs {
            t.support_dirs = v;
        }
        t.validate().map_err(|e| e.to_string())?;
        Ok(t)
    }
}

fn load(files: &[PathBuf]) -> (Vec<Scenario>, Vec<RunReport>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for f in files {
        match Scenario::load(f) {
            Ok(s) => ok.push(s),
            Err(e) => {
                let stem = f.file_stem().map_or_else(|| f.display().to_string(), |s| s.to_string_lossy().into_owned());
                failed.push(RunReport::failed(&stem, "unknown", &e));
            }
        }
    }
    (ok, failed)
}

fn write_outputs(dir: &Path, format: Format, reports: &[RunReport], timing: bool) -> epsconv::Result<()> {
    std::fs::create_dir_all(dir)?;
    if format != Format::Svg {
        write_csv(BufWriter::new(File::create(dir.join("report.csv"))?), reports, timing)?;
    }
    if format != Format::Csv {
        for r in reports {
            write_svgs(dir, r)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match cli.opts.tolerances() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("epsconv: {e}");
            return ExitCode::from(2);
        }
    };
    let (scenarios, mut reports) = match &cli.command {
        Command::Run { files } => load(files),
        Command::Suite => match bundled_scenarios() {
            Ok(s) => (s, Vec::new()),
            Err(e) => {
                eprintln!("epsconv: {e}");
                return ExitCode::from(2);
            }
        },
    };
    reports.extend(run_all(&scenarios, &tol));
    reports.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    let all_pass = reports.iter().all(|r| r.pass);
    let summary = SuiteSummary { reports, all_pass };
    print!("{}", summary.table());
    for r in summary.reports.iter().filter(|r| !r.pass) {
        for f in &r.flags {
            eprintln!("{}: {f}", r.scenario);
        }
        for c in r.checks.iter().filter(|c| !c.pass) {
            eprintln!("{}: {} computed {} expected {}", r.scenario, c.what, c.computed, c.expected);
        }
    }
    if let Err(e) = write_outputs(&cli.opts.out_dir, cli.opts.format, &summary.reports, !cli.opts.no_timing) {
        eprintln!("epsconv: cannot write reports: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(summary.exit_code() as u8)
}
