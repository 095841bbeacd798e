//! Command-line front end: argument grammar, run manifests and CSV/JSON output.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ckernel::KernelGrid;
use crate::densities::{fc_density, fc_moment, fc_support, jfc_density, jfc_moment, theta0_density, theta0_moment};
use crate::error::{domain, MbError, Result};
use crate::hardedge::{borodin_kernel, hard_edge_convergence};
use crate::harness::{run_verify, sample_replicas, worker_pool, Suite, SuiteSizes, VerifyReport, THRESHOLDS};
use crate::params::{EnsembleParams, Family};
use crate::sampler::SampleMethod;

/// Exit code for a parse or validation error.
pub const EXIT_INVALID: i32 = 1;
/// Exit code when any verification report failed.
pub const EXIT_FAILED_CHECK: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mb", version, about = "Muttalib-Borodin ensembles: sampling, densities, kernels, verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample spectra; one spectrum (descending) per CSV row.
    Sample(SampleArgs),
    /// Global density of the scaled spectrum on a grid: CSV x,density.
    Density(DensityArgs),
    /// Moments of the global density: CSV p,moment.
    Moments(MomentsArgs),
    /// Finite-N correlation kernel on a square grid: CSV x,y,K.
    Kernel(KernelArgs),
    /// Hard-edge limiting kernel on a grid, with an optional convergence report.
    Hardedge(HardedgeArgs),
    /// Run verification suites; writes a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    /// Laguerre weight exponent (alias of --c1)
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub n: usize,
}

impl EnsembleArgs {
    pub fn params(&self) -> Result<EnsembleParams> {
        let family: Family = self.family.parse()?;
        if self.c.is_some() && self.c1.is_some() {
            return domain("give only one of --c and --c1");
        }
        let c = self.c.or(self.c1).unwrap_or(0.0);
        match family {
            Family::Laguerre => {
                if self.c2.is_some() {
                    return domain("--c2 applies to the jacobi family only");
                }
                EnsembleParams::laguerre(self.theta, c, self.n)
            }
            Family::Jacobi => EnsembleParams::jacobi(self.theta, c, self.c2.unwrap_or(0.0), self.n),
            Family::LaguerreThetaZero => {
                if self.theta != 0.0 {
                    return domain("the theta-zero family needs --theta 0");
                }
                EnsembleParams::theta_zero(c, self.n)
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// matrix | corner
    #[arg(long, default_value = "matrix")]
    pub method: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    /// Number of grid points; the grid is `hi * i / grid`, i = 1..=grid.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Right end of the grid (default: right end of the support)
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 6)]
    pub max_p: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Points per axis; the grid is `hi * i / grid`, i = 1..=grid (Jacobi: points below 1).
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    /// Right end of the grid (default: the edge of the unscaled spectrum)
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HardedgeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    #[arg(long, default_value_t = 4.0)]
    pub hi: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also compare finite-N kernels (N = 25, 50, 100) with the limit and
    /// write the JSON report here.
    #[arg(long)]
    pub convergence: Option<PathBuf>,
    /// Finite-N family of the convergence ladder: laguerre | jacobi
    #[arg(long, default_value = "laguerre")]
    pub family: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite name, or `all`
    #[arg(long)]
    pub suite: String,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub seeds: Vec<u64>,
    /// Override every replica count (KS sides, density replicas, char-poly draws)
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Provenance record written as the first line of every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub params: Option<serde_json::Value>,
    pub git_describe: String,
    pub seed: Option<u64>,
    pub command_line: Vec<String>,
    pub timestamp: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(argv: &[String], params: Option<serde_json::Value>, seed: Option<u64>) -> Self {
        Self {
            params,
            git_describe: option_env!("MB_GIT_DESCRIBE").unwrap_or("unknown").to_string(),
            seed,
            command_line: argv.to_vec(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn comment_line(&self) -> String {
        format!("# manifest: {}", serde_json::to_string(self).expect("manifest serializes"))
    }

    /// Reads the manifest back from the first line of a CSV artifact.
    pub fn parse_line(line: &str) -> Result<Self> {
        let json = line.strip_prefix("# manifest: ").ok_or_else(|| MbError::Domain("not a manifest line".into()))?;
        serde_json::from_str(json).map_err(|e| MbError::Domain(format!("bad manifest: {e}")))
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_line(text.lines().next().unwrap_or(""))
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, manifest: &RunManifest, header: Option<&[&str]>, rows: &[Vec<f64>]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", manifest.comment_line())?;
    {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(&mut buf);
        let io = |e: csv::Error| MbError::Io(e.to_string());
        if let Some(h) = header {
            w.write_record(h).map_err(io)?;
        }
        for r in rows {
            w.write_record(r.iter().map(|&v| fmt_f64(v))).map_err(io)?;
        }
        w.flush()?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Reads the numeric rows of an artifact written by this tool.
pub fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).flexible(true).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| MbError::Io(e.to_string()))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        if let Ok(v) = parsed {
            rows.push(v);
        }
    }
    Ok(rows)
}

fn grid(hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(hi > 0.0) {
        return domain("grid needs at least one point and a positive right end");
    }
    Ok((1..=n).map(|i| hi * i as f64 / n as f64).collect())
}

fn law_family(family: &str, theta: f64) -> Result<Family> {
    let f: Family = family.parse()?;
    if f == Family::LaguerreThetaZero && theta != 0.0 {
        return domain("the theta-zero family needs --theta 0");
    }
    if f != Family::LaguerreThetaZero && !(theta > 0.0) {
        return domain("theta must be positive");
    }
    Ok(f)
}

fn run_sample(a: &SampleArgs, argv: &[String]) -> Result<i32> {
    let p = a.ensemble.params()?;
    let method: SampleMethod = a.method.parse()?;
    let spectra = sample_replicas(&p, method, a.seed, 0, a.replicas)?;
    let rows: Vec<Vec<f64>> = spectra.into_iter().map(|s| s.values).collect();
    let m = RunManifest::new(argv, Some(serde_json::to_value(p).expect("params serialize")), Some(a.seed));
    write_csv(&a.out, &m, None, &rows)?;
    println!("wrote {} spectra of size {} to {}", rows.len(), p.n, a.out.display());
    Ok(0)
}

fn run_density(a: &DensityArgs, argv: &[String]) -> Result<i32> {
    let f = law_family(&a.family, a.theta)?;
    let t = a.theta;
    let hi = match (a.hi, f) {
        (Some(h), _) => h,
        (None, Family::Laguerre) => fc_support(t)?,
        (None, Family::Jacobi) => 1.0,
        (None, Family::LaguerreThetaZero) => std::f64::consts::E,
    };
    let rows = grid(hi, a.grid)?
        .into_iter()
        .map(|x| {
            let d = match f {
                Family::Laguerre => fc_density(t, x),
                Family::Jacobi => jfc_density(t, x),
                Family::LaguerreThetaZero => theta0_density(x),
            }?;
            Ok(vec![x, d])
        })
        .collect::<Result<Vec<_>>>()?;
    let params = serde_json::json!({ "family": f, "theta": t, "grid": a.grid, "hi": hi });
    write_csv(&a.out, &RunManifest::new(argv, Some(params), None), Some(&["x", "density"]), &rows)?;
    println!("wrote {} density values to {}", rows.len(), a.out.display());
    Ok(0)
}

fn run_moments(a: &MomentsArgs, argv: &[String]) -> Result<i32> {
    let f = law_family(&a.family, a.theta)?;
    let rows = (0..=a.max_p)
        .map(|p| {
            let m = match f {
                Family::Laguerre => fc_moment(a.theta, p),
                Family::Jacobi => jfc_moment(a.theta, p)?,
                Family::LaguerreThetaZero => theta0_moment(p),
            };
            Ok(vec![p as f64, m])
        })
        .collect::<Result<Vec<_>>>()?;
    let params = serde_json::json!({ "family": f, "theta": a.theta });
    write_csv(&a.out, &RunManifest::new(argv, Some(params), None), Some(&["p", "moment"]), &rows)?;
    println!("wrote moments p = 0..={} to {}", a.max_p, a.out.display());
    Ok(0)
}

fn run_kernel(a: &KernelArgs, argv: &[String]) -> Result<i32> {
    let p = a.ensemble.params()?;
    let n = p.n as f64;
    let hi = match (a.hi, p.family) {
        (Some(h), _) => h,
        (None, Family::Jacobi) => 1.0,
        (None, Family::Laguerre) => n * p.theta * fc_support(p.theta)?.powf(1.0 / p.theta),
        (None, Family::LaguerreThetaZero) => n * std::f64::consts::E,
    };
    let mut xs = grid(hi, a.grid)?;
    if p.family == Family::Jacobi {
        // keep to the open interval
        xs.retain(|&x| x < 1.0);
    }
    let g = KernelGrid::compute(&p, &xs, &xs)?;
    let mut rows = Vec::with_capacity(xs.len() * xs.len());
    for (i, &x) in g.xs.iter().enumerate() {
        for (j, &y) in g.ys.iter().enumerate() {
            rows.push(vec![x, y, g.values[i][j]]);
        }
    }
    let m = RunManifest::new(argv, Some(serde_json::to_value(p).expect("params serialize")), None);
    write_csv(&a.out, &m, Some(&["x", "y", "K"]), &rows)?;
    println!("wrote {} kernel values to {}", rows.len(), a.out.display());
    Ok(0)
}

fn run_hardedge(a: &HardedgeArgs, argv: &[String]) -> Result<i32> {
    if !(a.c > -1.0) || !(a.theta > 0.0) {
        return domain("need c > -1 and theta > 0");
    }
    let xs = grid(a.hi, a.grid)?;
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| xs.iter().map(move |&y| (x, y))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(x, y)| Ok(vec![x, y, borodin_kernel(a.c, a.theta, x, y)?]))
        .collect::<Result<Vec<_>>>()?;
    let params = serde_json::json!({ "theta": a.theta, "c": a.c, "grid": a.grid, "hi": a.hi });
    let m = RunManifest::new(argv, Some(params), None);
    write_csv(&a.out, &m, Some(&["x", "y", "K"]), &rows)?;
    println!("wrote {} hard-edge kernel values to {}", rows.len(), a.out.display());
    let Some(path) = &a.convergence else { return Ok(0) };
    let p = match a.family.parse::<Family>()? {
        Family::Laguerre => EnsembleParams::laguerre(a.theta, a.c, 1)?,
        Family::Jacobi => EnsembleParams::jacobi(a.theta, a.c, 0.0, 1)?,
        Family::LaguerreThetaZero => return domain("no hard-edge limit for the theta-zero family"),
    };
    let points = [(0.5, 0.5), (1.0, 2.0), (2.0, 1.0), (1.5, 1.5)];
    let r = hard_edge_convergence(&p, &[25, 50, 100], &points, THRESHOLDS.hard_edge_last);
    write_reports(path, &m, std::slice::from_ref(&r))?;
    print_report(&r);
    Ok(if r.pass { 0 } else { EXIT_FAILED_CHECK })
}

#[derive(Serialize, Deserialize)]
pub struct ReportFile {
    pub manifest: RunManifest,
    pub reports: Vec<VerifyReport>,
}

fn write_reports(path: &Path, manifest: &RunManifest, reports: &[VerifyReport]) -> Result<()> {
    let f = ReportFile { manifest: manifest.clone(), reports: reports.to_vec() };
    let s = serde_json::to_string_pretty(&f).map_err(|e| MbError::Io(e.to_string()))?;
    std::fs::write(path, s + "\n")?;
    Ok(())
}

fn print_report(r: &VerifyReport) {
    let tag = if r.pass { "PASS" } else { "FAIL" };
    println!("{tag} {} statistic={:.6e} threshold={:.6e} seed={} ({:.2}s) {}", r.name, r.statistic, r.threshold, r.seed, r.wall_time_s, r.detail);
}

fn run_verify_cmd(a: &VerifyArgs, argv: &[String]) -> Result<i32> {
    let suites: Vec<Suite> = if a.suite == "all" { Suite::ALL.to_vec() } else { vec![a.suite.parse()?] };
    if a.seeds.is_empty() {
        return domain("need at least one seed");
    }
    let mut sizes = SuiteSizes::default();
    if let Some(r) = a.replicas {
        if r < 2 {
            return domain("--replicas must be at least 2");
        }
        sizes = SuiteSizes { ks_replicas: r, density_replicas: r, char_poly_replicas: r, ..sizes };
    }
    let reports: Vec<VerifyReport> = suites.iter().flat_map(|&s| run_verify(s, &a.seeds, sizes)).collect();
    for r in &reports {
        print_report(r);
    }
    if let Some(path) = &a.out {
        let params = serde_json::json!({ "suites": suites, "replicas": a.replicas });
        write_reports(path, &RunManifest::new(argv, Some(params), a.seeds.first().copied()), &reports)?;
    }
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { EXIT_FAILED_CHECK })
}

/// Parses `argv` (including the program name) and runs; returns the exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match worker_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Sample(a) => run_sample(a, argv),
        Command::Density(a) => run_density(a, argv),
        Command::Moments(a) => run_moments(a, argv),
        Command::Kernel(a) => run_kernel(a, argv),
        Command::Hardedge(a) => run_hardedge(a, argv),
        Command::Verify(a) => run_verify_cmd(a, argv),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn float_format_round_trips() {
        for v in [1.0 / 3.0, 2.0 / std::f64::consts::PI, 1e-300, 12345.678] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(s.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
        }
    }

    #[test]
    fn params_from_flags() {
        let c = Cli::try_parse_from(argv("mb kernel --family jacobi --theta 2 --c1 0 --c2 1 --n 4 --out k.csv")).unwrap();
        let Command::Kernel(k) = c.command else { panic!() };
        let p = k.ensemble.params().unwrap();
        assert_eq!((p.family, p.c, p.c2, p.n), (Family::Jacobi, 0.0, 1.0, 4));
        let c = Cli::try_parse_from(argv("mb kernel --family laguerre --theta 2 --c 1 --c1 1 --n 4 --out k.csv")).unwrap();
        let Command::Kernel(k) = c.command else { panic!() };
        assert!(k.ensemble.params().is_err());
    }

    #[test]
    fn unknown_flag_is_validation_error() {
        assert_eq!(run(&argv("mb sample --bogus 1")), EXIT_INVALID);
        assert_eq!(run(&argv("mb frobnicate")), EXIT_INVALID);
    }

    #[test]
    fn manifest_line_round_trip() {
        let m = RunManifest::new(&argv("mb density --family jacobi --theta 1"), Some(serde_json::json!({"theta": 1.0})), Some(7));
        assert_eq!(RunManifest::parse_line(&m.comment_line()).unwrap(), m);
        assert!(RunManifest::parse_line("x,y").is_err());
    }
}
