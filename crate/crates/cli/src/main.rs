use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use blindsharp::sharpness::{ProductType, QualityClass};
use blindsharp_cli::commands::write_kernel_files;
use blindsharp_cli::{
    cmd_batch, cmd_deblur, cmd_report, cmd_score, exit, Crop, ImageMeta, RunConfig,
};
use chrono::NaiveDate;
use clap::{Parser, Subcommand};

/// Blind blur-kernel sharpness scoring and deblurring for satellite imagery.
#[derive(Parser)]
#[command(name = "blindsharp", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Estimate on the window x,y,w,h only.
    #[arg(long, global = true, value_name = "X,Y,W,H")]
    crop: Option<Crop>,
    /// Worker threads for `batch`.
    #[arg(long, global = true, value_name = "N")]
    parallelism: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the blur kernel of one image and print its sharpness report as JSON.
    Score {
        image: PathBuf,
        #[arg(long, default_value = "ortho")]
        product: ProductType,
        #[arg(long)]
        satellite_id: Option<String>,
        /// Acquisition date (YYYY-MM-DD).
        #[arg(long)]
        acquired: Option<NaiveDate>,
        #[arg(long)]
        image_id: Option<String>,
        /// Write the kernel as text here, plus a PNG preview beside it.
        #[arg(long)]
        kernel_out: Option<PathBuf>,
    },
    /// Estimate the kernel, deconvolve, and print before/after scores as JSON.
    Deblur {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value = "ortho")]
        product: ProductType,
        /// Deblur even when the input classifies as discard.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        kernel_out: Option<PathBuf>,
    },
    /// Score every image of a JSON manifest into a records CSV.
    Batch { manifest: PathBuf, out_csv: PathBuf },
    /// Per-satellite statistics and ANOVA from a records CSV.
    Report {
        records_csv: PathBuf,
        out_json: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = cli.crop {
        cfg.run.crop = Some(c);
    }
    if let Some(n) = cli.parallelism {
        cfg.run.parallelism = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Score {
            image,
            product,
            satellite_id,
            acquired,
            image_id,
            kernel_out,
        } => {
            let mut meta = ImageMeta::for_path(&image, product);
            meta.acquired = acquired;
            if let Some(s) = satellite_id {
                meta.satellite_id = s;
            }
            if let Some(id) = image_id {
                meta.image_id = id;
            }
            let report = cmd_score(&image, &meta, &config)?;
            if let Some(path) = kernel_out {
                write_kernel_files(&path, &report.kernel)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.class == QualityClass::Discard {
                exit::REJECTED
            } else {
                exit::OK
            })
        }
        Command::Deblur {
            input,
            output,
            product,
            force,
            kernel_out,
        } => {
            let report = cmd_deblur(&input, &output, product, force, &config)?;
            if let (Some(path), Some(k)) = (kernel_out, &report.kernel) {
                write_kernel_files(&path, k)?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.refused {
                eprintln!(
                    "refusing to deblur {}: score {:.4} classifies as discard (use --force)",
                    input.display(),
                    report.score_before
                );
                return Ok(exit::REJECTED);
            }
            Ok(exit::OK)
        }
        Command::Batch { manifest, out_csv } => {
            let rows = cmd_batch(&manifest, &out_csv, &config)?;
            let failed = rows.iter().filter(|r| r.score.is_none()).count();
            eprintln!("scored {} of {} images", rows.len() - failed, rows.len());
            Ok(exit::OK)
        }
        Command::Report {
            records_csv,
            out_json,
        } => {
            let summary = cmd_report(&records_csv, &out_json, &config)?;
            for p in &summary.products {
                if let Some(err) = &p.anova_error {
                    eprintln!("{}: anova not computed: {err}", p.product);
                }
            }
            for s in &summary.skipped {
                eprintln!("{}: skipped: {}", s.product, s.reason);
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::ERROR
            } else {
                exit::OK
            });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::ERROR)
        }
    }
}
