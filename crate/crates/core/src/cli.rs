//! Command-line front end.
//!
//! Exit codes: 0 success or pass, 1 usage or input error, 2 a fail verdict,
//! 3 an inconclusive verdict.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::distributions::load_csv;
use crate::erm::solve;
use crate::error::{Error, Result};
use crate::kernels::{growth_profile, GrowthKind, KernelFamily, KernelSpec};
use crate::losses::GaugeSpec;
use crate::metrics::{d_phi, prokhorov, wasserstein1, zeta_p, PROKHOROV_TOL};
use crate::robustness::{
    format_float, run_experiment, ExperimentConfig, ExperimentKind, Verdict, CURVES_HEADER,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ROBUST_ERM_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "robust-erm",
    version,
    about = "Kernel ERM, probability metrics and robustness experiments"
)]
pub struct Cli {
    /// Output directory for written files.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Overrides the master seed of the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a kernel and print its calmness growth profile.
    Kernel(KernelArgs),
    /// Distances between two distribution CSVs.
    Metric(MetricArgs),
    /// Solve the regularized ERM on a distribution CSV.
    Solve(SolveArgs),
    /// Run the experiments listed in a config.
    Experiment(ExperimentArgs),
    /// Render a curves CSV as a table and a gnuplot data file.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub family: KernelFamily,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1)]
    pub degree: u32,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// First input, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Second input, comma separated; defaults to `x`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xp: Option<Vec<f64>>,
    /// Input radius for kernels that are calm only on bounded sets.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Distances at which the growth function is evaluated.
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    pub p_csv: PathBuf,
    pub q_csv: PathBuf,
    /// Fortet-Mourier order.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Config supplying the gauge for `d_phi`.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Distribution CSV; defaults to the config's ground truth.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Run only these experiments.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<ExperimentKind>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub curves: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("no such file: {}", path.display())))
    }
}

fn load_config(cli: &Cli, path: &Path) -> Result<ExperimentConfig> {
    require_file(path)?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs a parsed command, writing human-facing output to `stdout`.
pub fn execute<W: Write>(cli: &Cli, stdout: &mut W) -> Result<i32> {
    match &cli.command {
        Command::Kernel(a) => kernel_cmd(a, stdout),
        Command::Metric(a) => metric_cmd(cli, a, stdout),
        Command::Solve(a) => solve_cmd(cli, a, stdout),
        Command::Experiment(a) => experiment_cmd(cli, a, stdout),
        Command::Report(a) => report_cmd(cli, a, stdout),
    }
}

fn kernel_cmd<W: Write>(a: &KernelArgs, out: &mut W) -> Result<i32> {
    if a.x.is_empty() {
        return Err(Error::InvalidInput("--x is required".into()));
    }
    let spec = KernelSpec {
        family: a.family,
        gamma: a.gamma,
        degree: a.degree,
        a: a.a,
        b: a.b,
        input_dim: a.x.len(),
    };
    let xp = a.xp.clone().unwrap_or_else(|| a.x.clone());
    writeln!(out, "quantity,value")?;
    writeln!(out, "k,{}", format_float(spec.eval(&a.x, &xp)?))?;
    if !spec.is_pds() {
        writeln!(out, "growth,none")?;
        return Ok(EXIT_OK);
    }
    let profile = growth_profile(&spec, a.radius);
    let kind = match profile.kind {
        GrowthKind::LinearRate { slope } => format!("linear slope={}", format_float(slope)),
        GrowthKind::Piecewise { knee } => format!("piecewise knee={}", format_float(knee)),
        GrowthKind::Uncalm => "uncalm".into(),
    };
    writeln!(out, "growth,{kind}")?;
    let dist = spec.input_distance(&a.x, &xp);
    let mut ts = a.t.clone();
    ts.insert(0, dist);
    for t in ts {
        let g = profile
            .eval(t)
            .map(format_float)
            .unwrap_or_else(|| "none".into());
        writeln!(out, "g({}),{g}", format_float(t))?;
    }
    Ok(EXIT_OK)
}

fn metric_cmd<W: Write>(cli: &Cli, a: &MetricArgs, out: &mut W) -> Result<i32> {
    require_file(&a.p_csv)?;
    require_file(&a.q_csv)?;
    let p = load_csv(&a.p_csv)?;
    let q = load_csv(&a.q_csv)?;
    let p_str = format_float(a.p);
    writeln!(out, "metric,p,value,lower,upper_ot,upper_product")?;
    let w = format_float(wasserstein1(&p, &q)?);
    writeln!(out, "wasserstein1,,{w},{w},{w},")?;
    let pr = format_float(prokhorov(&p, &q, PROKHOROV_TOL)?);
    writeln!(out, "prokhorov,,{pr},,,")?;
    let z = zeta_p(&p, &q, a.p)?;
    writeln!(
        out,
        "zeta,{p_str},{},{},{},{}",
        z.exact.map(format_float).unwrap_or_default(),
        format_float(z.lower_testfn),
        format_float(z.upper_ot),
        format_float(z.upper_product)
    )?;
    if let Some(path) = &a.config {
        let cfg = load_config(cli, path)?;
        let gauge = GaugeSpec::new(cfg.erm.loss, cfg.erm.kernel.clone(), cfg.erm.beta)?;
        let v = d_phi(&p, &q, &gauge, cfg.gauge_power, PROKHOROV_TOL)?;
        writeln!(
            out,
            "d_phi,{},{},,,",
            format_float(cfg.gauge_power),
            format_float(v)
        )?;
    }
    Ok(EXIT_OK)
}

fn solve_cmd<W: Write>(cli: &Cli, a: &SolveArgs, out: &mut W) -> Result<i32> {
    let cfg = load_config(cli, &a.config)?;
    let dist = match &a.data {
        Some(path) => {
            require_file(path)?;
            load_csv(path)?
        }
        None => cfg.ground_truth()?,
    };
    let mut erm = cfg.erm.clone();
    if let Some(l) = a.lambda {
        erm.lambda = l;
    }
    let sol = solve(&dist, &erm)?;
    if !sol.converged {
        log::warn!(
            "solver stopped after {} iterations without meeting the tolerance",
            sol.iterations
        );
    }
    let dir = out_dir(cli)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("solution.csv"))?));
    w.write_record(["anchor_index", "alpha"])?;
    for (i, c) in sol.coefficients.iter().enumerate() {
        w.write_record([i.to_string(), format_float(*c)])?;
    }
    w.flush()?;
    let header = "objective,risk,reg,norm,iters";
    let line = format!(
        "{},{},{},{},{}",
        format_float(sol.objective),
        format_float(sol.risk_term),
        format_float(sol.reg_term),
        format_float(sol.rkhs_norm),
        sol.iterations
    );
    std::fs::write(dir.join("summary.csv"), format!("{header}\n{line}\n"))?;
    writeln!(out, "{header}\n{line}")?;
    Ok(EXIT_OK)
}

fn experiment_cmd<W: Write>(cli: &Cli, a: &ExperimentArgs, out: &mut W) -> Result<i32> {
    let cfg = load_config(cli, &a.config)?;
    let kinds = if a.only.is_empty() {
        cfg.experiments.clone()
    } else {
        a.only.clone()
    };
    let dir = out_dir(cli)?;
    let mut overall = Verdict::Pass;
    for kind in kinds {
        log::info!("running {}", kind.name());
        let res = run_experiment(&cfg, kind)?;
        res.write_report(BufWriter::new(File::create(
            dir.join(format!("{}_report.csv", kind.name())),
        )?))?;
        res.write_curves(BufWriter::new(File::create(
            dir.join(format!("{}_curves.csv", kind.name())),
        )?))?;
        writeln!(out, "{},{}", kind.name(), res.verdict)?;
        overall = overall.combine(res.verdict);
    }
    Ok(match overall {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn report_cmd<W: Write>(cli: &Cli, a: &ReportArgs, out: &mut W) -> Result<i32> {
    require_file(&a.curves)?;
    let mut rdr = csv::Reader::from_path(&a.curves)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CURVES_HEADER) {
        return Err(Error::Config(format!(
            "{}: expected header `{}`",
            a.curves.display(),
            CURVES_HEADER.join(",")
        )));
    }
    let rows: Vec<Vec<String>> = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;

    let widths: Vec<usize> = (0..CURVES_HEADER.len())
        .map(|j| {
            rows.iter()
                .map(|r| r[j].len())
                .chain([CURVES_HEADER[j].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[&str]| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(&CURVES_HEADER))?;
    for r in &rows {
        writeln!(
            out,
            "{}",
            line(&r.iter().map(String::as_str).collect::<Vec<_>>())
        )?;
    }

    let dir = out_dir(cli)?;
    let stem = a
        .curves
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("curves");
    let mut dat = BufWriter::new(File::create(dir.join(format!("{stem}.dat")))?);
    writeln!(dat, "# {}", CURVES_HEADER.join(" "))?;
    for r in &rows {
        let cells: Vec<&str> = r
            .iter()
            .map(|c| if c.is_empty() { "NaN" } else { c.as_str() })
            .collect();
        writeln!(dat, "{}", cells.join(" "))?;
    }
    dat.flush()?;
    Ok(EXIT_OK)
}
