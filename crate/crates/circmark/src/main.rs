use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circmark::bench::{self, Config};
use circmark::io::{load_image, save_image};
use circmark::jpeg::ImageJpeg;
use circmark::keyfile::{read_detection_key, read_key, write_key};
use circmark::{Error, Result};
use circmark_core::attacks::AttackSpec;
use circmark_core::codec::{detect, detect_and_extract, embed, DEFAULT_ALPHA, DEFAULT_TOLERANCE};
use circmark_core::metrics::{nc, psnr};
use circmark_core::watermark::DEFAULT_SIGNATURE_RMS;
use circmark_core::{Image, WatermarkSpec};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

const EXIT_NOT_DETECTED: u8 = 2;
const EXIT_ERROR: u8 = 1;

/// Blind circulant-SVD watermarking for grayscale images.
#[derive(Parser)]
#[command(name = "circmark", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a watermark and write the key file.
    Embed(EmbedArgs),
    /// Check an image against a key. Exit 0 if detected, 2 if not.
    Detect(DetectArgs),
    /// Recover the watermark matrix from an image.
    Extract(ExtractArgs),
    /// Apply one attack, e.g. `jpeg:quality=50`.
    Attack(AttackArgs),
    /// Run a benchmark config and write a TSV report.
    Bench(BenchArgs),
}

/// `--quantized` compares against the 8-bit image, `--float` (default)
/// against the unrounded embedding. Inputs read from files are 8-bit
/// already, so only `embed` and `bench` are affected.
#[derive(Args, Clone, Copy)]
struct PathMode {
    #[arg(long, conflicts_with = "float")]
    quantized: bool,
    #[arg(long)]
    float: bool,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Number of 4×4 circulant blocks.
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    #[arg(long, env = "CIRCMARK_SEED", default_value_t = 42)]
    seed: u64,
    /// RMS of the watermark singular values per image row.
    #[arg(long, default_value_t = DEFAULT_SIGNATURE_RMS)]
    signature_rms: f64,
    #[command(flatten)]
    mode: PathMode,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[command(flatten)]
    mode: PathMode,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    key: PathBuf,
    /// Viewable image of W*, rescaled to [0, 255].
    #[arg(long)]
    out: PathBuf,
    /// Raw values of the leading 4k×4k block; defaults to `<out>.txt`.
    #[arg(long)]
    raw: Option<PathBuf>,
    #[command(flatten)]
    mode: PathMode,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    spec: String,
    #[command(flatten)]
    mode: PathMode,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    mode: PathMode,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Embed(a) => cmd_embed(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn load_normalized(path: &Path) -> Result<Image> {
    let img = load_image(path)?;
    let norm = img.normalize_geometry()?;
    if norm.dims() != img.dims() {
        eprintln!(
            "note: {} is {}x{}, center-cropped to {}x{}",
            path.display(),
            img.width(),
            img.height(),
            norm.width(),
            norm.height()
        );
    }
    Ok(norm)
}

fn cmd_embed(a: EmbedArgs) -> Result<ExitCode> {
    let host = load_normalized(&a.input)?;
    let side = host.width();
    let spec = WatermarkSpec::generate(a.seed, a.blocks, side, a.signature_rms)?;
    let out = embed(&host, &spec, a.alpha)?;
    save_image(&a.out, &out.image)?;
    write_key(&a.key, &out.key)?;
    let compared = if a.mode.quantized {
        out.image.quantize()
    } else {
        out.image
    };
    println!("psnr_db\t{:.4}", psnr(&host, &compared)?);
    if out.key.y_monotone_warning() {
        eprintln!("warning: perturbed singular values are not strictly decreasing; detection may misalign");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect(a: DetectArgs) -> Result<ExitCode> {
    let key = read_detection_key(&a.key)?;
    let img = load_normalized(&a.input)?;
    let rep = detect(&img, &key, a.tol)?;
    let xs: Vec<String> = rep.x.iter().map(|x| format!("{x:.6}")).collect();
    println!("x\t{}", xs.join("\t"));
    for (i, pass) in rep.block_pass.iter().enumerate() {
        let (x3, x4) = (rep.x[4 * i + 2], rep.x[4 * i + 3]);
        println!(
            "block\t{}\t{}\t{:.6}",
            i + 1,
            if *pass { "pass" } else { "fail" },
            (x3 - x4).abs()
        );
    }
    println!("detected\t{}", rep.detected);
    Ok(if rep.detected {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_DETECTED)
    })
}

fn cmd_extract(a: ExtractArgs) -> Result<ExitCode> {
    let key = read_key(&a.key)?;
    let img = load_normalized(&a.input)?;
    let rep = detect_and_extract(&img, key.detection(), DEFAULT_TOLERANCE)?;
    let w = rep.extracted.expect("extraction requested");
    save_image(&a.out, &rescaled(&w)?)?;
    let raw = a.raw.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".txt");
        p.into()
    });
    fs::write(&raw, raw_block(&w, 4 * key.k())).map_err(|e| Error::Io {
        path: raw.clone(),
        source: e,
    })?;
    match nc(&key.spec().assemble(), &w) {
        Ok(s) => println!("nc_norm\t{:.6}\nnc_raw\t{:.6}", s.nc_norm, s.nc_raw),
        Err(circmark_core::Error::ZeroEnergy { nc_raw }) => {
            println!("nc_norm\t-\nnc_raw\t{nc_raw:.6}")
        }
        Err(e) => return Err(e.into()),
    }
    Ok(ExitCode::SUCCESS)
}

/// Affine map of the matrix range onto [0, 255]; a constant matrix maps to 0.
fn rescaled(w: &DMatrix<f64>) -> Result<Image> {
    let (lo, hi) = (w.min(), w.max());
    let span = hi - lo;
    let scaled = w.map(|v| {
        if span > 0.0 {
            (v - lo) / span * 255.0
        } else {
            0.0
        }
    });
    Ok(Image::from_matrix(&scaled)?)
}

fn raw_block(w: &DMatrix<f64>, n: usize) -> String {
    let mut out = format!("# leading {n}x{n} block of W*, zero elsewhere\n");
    for r in 0..n {
        let row: Vec<String> = (0..n).map(|c| format!("{:.16e}", w[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn cmd_attack(a: AttackArgs) -> Result<ExitCode> {
    let spec: AttackSpec = a.spec.parse()?;
    let img = load_image(&a.input)?;
    let out = spec.apply(&img, Some(&ImageJpeg))?;
    save_image(&a.out, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    let mut cfg = Config::load(&a.config)?;
    if a.mode.quantized {
        cfg.quantized = true;
    } else if a.mode.float {
        cfg.quantized = false;
    }
    if !a.images.is_dir() {
        return Err(Error::NoImages(format!(
            "{} is not a directory",
            a.images.display()
        )));
    }
    let report = bench::run(&cfg, &a.images)?;
    if !report.ran_any() {
        return Err(Error::NoImages(format!(
            "none of the configured images could be loaded from {}",
            a.images.display()
        )));
    }
    fs::write(&a.report, report.to_tsv()).map_err(|e| Error::Io {
        path: a.report.clone(),
        source: e,
    })?;
    Ok(ExitCode::SUCCESS)
}
