//! `bloch-series`: band diagrams of high-contrast photonic crystals from
//! certified power series in the inverse contrast.

use std::path::PathBuf;
use std::process::ExitCode;

use bloch_series::pipeline::{self, CrystalConfig, Overrides, Preset};
use bloch_series::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bloch-series", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Crystal description (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Series order N.
    #[arg(long, global = true, value_name = "N")]
    order: Option<usize>,
    /// Contrast k (replaces contrast or z_list from the config).
    #[arg(long, global = true, value_name = "K")]
    contrast: Option<f64>,
    /// Output directory (default: output_dir from the config, else ./out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "J", env = "BLOCH_SERIES_JOBS")]
    jobs: Option<usize>,
    /// Discretization preset: coarse, default or fine.
    #[arg(long, global = true, value_name = "PRESET")]
    resolution: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Series band diagram along the path (band.csv, series.json, band_plot.py).
    Band,
    /// Series against the oracle with PASS/FAIL per row; exit code 1 on failure.
    Compare,
    /// Print the convergence certificates (and write certificates.json).
    Certify,
    /// Neumann–Poincaré resonances along the path (np_spectrum.csv).
    NpSpectrum,
    /// Limit spectra along the path (limit.csv).
    Limit,
    /// Plane-wave oracle eigenvalues along the path (oracle.csv).
    Oracle {
        /// Number of eigenvalues per sample.
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
}

fn load(common: &Common) -> Result<(CrystalConfig, PathBuf)> {
    let Some(path) = &common.config else {
        return Err(bloch_series::Error::Config("--config PATH is required".into()));
    };
    let mut config = CrystalConfig::load(path)?;
    let resolution = common.resolution.as_deref().map(str::parse::<Preset>).transpose()?;
    config.apply(&Overrides {
        order: common.order,
        contrast: common.contrast,
        out: common.out.clone(),
        resolution,
    });
    let out = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn run(cli: &Cli) -> Result<bool> {
    let (config, out) = load(&cli.common)?;
    let jobs = cli.common.jobs;
    match &cli.command {
        Command::Band => {
            let result = pipeline::run_band(&config, jobs)?;
            let files = pipeline::write_band(&result, &out)?;
            let certified = result.rows.iter().filter(|r| r.certified).count();
            println!(
                "{} rows ({} certified) -> {}",
                result.rows.len(),
                certified,
                files.csv.display()
            );
            println!("series -> {}", files.json.display());
            println!("plot script -> {}", files.plot.display());
            Ok(true)
        }
        Command::Compare => {
            let report = pipeline::run_compare(&config, jobs)?;
            let (csv, plot) = pipeline::write_compare(&report, &out)?;
            print!("{}", report.table());
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            println!("overall: {verdict} -> {}", csv.display());
            println!("plot script -> {}", plot.display());
            Ok(report.passed())
        }
        Command::Certify => {
            let analyses = pipeline::run_certify(&config, jobs)?;
            print!("{}", pipeline::certificate_table(&analyses));
            let path = pipeline::write_file(&out, "certificates.json", &pipeline::certificates_json(&analyses)?)?;
            println!("certificates -> {}", path.display());
            Ok(true)
        }
        Command::NpSpectrum => {
            let spectra = pipeline::run_np_spectrum(&config, jobs)?;
            let path = pipeline::write_file(&out, "np_spectrum.csv", &pipeline::np_csv(&spectra))?;
            println!("resonances -> {}", path.display());
            Ok(true)
        }
        Command::Limit => {
            let spectra = pipeline::run_limit(&config, jobs)?;
            let path = pipeline::write_file(&out, "limit.csv", &pipeline::limit_csv(&spectra))?;
            println!("limit spectra -> {}", path.display());
            Ok(true)
        }
        Command::Oracle { count } => {
            let results = pipeline::run_oracle(&config, jobs, *count)?;
            let path = pipeline::write_file(&out, "oracle.csv", &pipeline::oracle_csv(&results))?;
            println!("oracle eigenvalues -> {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
