//! Benchmark harness: embed, attack, detect and score over a config grid.
//!
//! A config is TOML with global defaults and a list of experiments. Each
//! experiment runs the cross product images × blocks × alpha × attacks:
//!
//! ```toml
//! seed = 42
//! images = ["lena.png", "barbara.png"]
//!
//! [[experiment]]
//! name = "attacks"
//! images = ["lena.png"]          # optional, overrides the global list
//! blocks = [1, 3]
//! alpha = [0.06]
//! attacks = ["none", "jpeg:quality=50", "median:size=3"]
//! ```
//!
//! The report is TSV with the fixed header [`HEADER`]. Rows follow config
//! order (experiment, image, blocks, alpha, attack), so identical inputs give
//! byte-identical reports. Missing images produce `skipped` rows, attacks that
//! do not parse produce `not run` rows.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use circmark_core::attacks::{Attack, AttackSpec};
use circmark_core::codec::{detect_and_extract, Embedder, DEFAULT_TOLERANCE};
use circmark_core::metrics::{nc, psnr};
use circmark_core::watermark::DEFAULT_SIGNATURE_RMS;
use circmark_core::{Image, WatermarkSpec};
use serde::Deserialize;

use crate::io::load_image;
use crate::jpeg::ImageJpeg;
use crate::{Error, Result};

pub const HEADER: &str =
    "experiment\timage\tk\talpha\tattack\tstatus\tpsnr_embed\tpsnr_attacked\tnc_norm\tnc_raw\tdetected\tnote";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub images: Vec<String>,
    #[serde(default)]
    pub quantized: bool,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_rms")]
    pub signature_rms: f64,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    pub images: Option<Vec<String>>,
    pub blocks: Vec<usize>,
    pub alpha: Vec<f64>,
    pub attacks: Vec<String>,
}

fn default_seed() -> u64 {
    42
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_rms() -> f64 {
    DEFAULT_SIGNATURE_RMS
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.experiments.is_empty() {
            return Err(Error::Config("no [[experiment]] entries".into()));
        }
        for e in &cfg.experiments {
            if e.blocks.is_empty() || e.alpha.is_empty() || e.attacks.is_empty() {
                return Err(Error::Config(format!(
                    "experiment `{}` has an empty list",
                    e.name
                )));
            }
            if e.images.as_ref().unwrap_or(&cfg.images).is_empty() {
                return Err(Error::Config(format!(
                    "experiment `{}` lists no images",
                    e.name
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    Skipped,
    NotRun,
    Failed,
}

impl Status {
    fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Skipped => "skipped",
            Status::NotRun => "not run",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub image: String,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub attack: String,
    pub status: Status,
    pub psnr_embed: Option<f64>,
    pub psnr_attacked: Option<f64>,
    pub nc_norm: Option<f64>,
    pub nc_raw: Option<f64>,
    pub detected: Option<bool>,
    pub note: String,
}

impl Row {
    fn bare(experiment: &str, image: &str, attack: &str, status: Status, note: String) -> Self {
        Row {
            experiment: experiment.to_owned(),
            image: image.to_owned(),
            k: None,
            alpha: None,
            attack: attack.to_owned(),
            status,
            psnr_embed: None,
            psnr_attacked: None,
            nc_norm: None,
            nc_raw: None,
            detected: None,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn ran_any(&self) -> bool {
        self.rows.iter().any(|r| r.status == Status::Ok)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.rows {
            let opt = |v: Option<f64>, digits: usize| match v {
                Some(v) if v.is_infinite() => "inf".to_owned(),
                Some(v) => format!("{v:.digits$}"),
                None => "-".to_owned(),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.experiment,
                r.image,
                r.k.map_or("-".to_owned(), |k| k.to_string()),
                r.alpha.map_or("-".to_owned(), |a| a.to_string()),
                r.attack,
                r.status.as_str(),
                opt(r.psnr_embed, 4),
                opt(r.psnr_attacked, 4),
                opt(r.nc_norm, 6),
                opt(r.nc_raw, 6),
                r.detected.map_or("-".to_owned(), |d| d.to_string()),
                r.note.replace(['\t', '\n'], " "),
            );
        }
        out
    }
}

struct Host {
    original: Image,
    embedder: Embedder,
}

/// Runs every experiment against images in `image_dir`.
pub fn run(cfg: &Config, image_dir: &Path) -> Result<Report> {
    let mut hosts: HashMap<String, std::result::Result<Host, String>> = HashMap::new();
    let mut report = Report::default();
    for exp in &cfg.experiments {
        let images = exp.images.as_ref().unwrap_or(&cfg.images);
        for name in images {
            let host = hosts
                .entry(name.clone())
                .or_insert_with(|| load_host(&image_dir.join(name)));
            match host {
                Ok(host) => run_image(cfg, exp, name, host, &mut report.rows),
                Err(msg) => {
                    for attack in &exp.attacks {
                        report.rows.push(Row::bare(
                            &exp.name,
                            name,
                            attack,
                            Status::Skipped,
                            msg.clone(),
                        ));
                    }
                }
            }
        }
    }
    Ok(report)
}

fn load_host(path: &PathBuf) -> std::result::Result<Host, String> {
    let img = load_image(path).map_err(|e| e.to_string())?;
    let original = img.normalize_geometry().map_err(|e| e.to_string())?;
    let embedder = Embedder::new(&original).map_err(|e| e.to_string())?;
    Ok(Host { original, embedder })
}

fn run_image(cfg: &Config, exp: &Experiment, name: &str, host: &Host, rows: &mut Vec<Row>) {
    let side = host.embedder.side();
    let attacks: Vec<(&String, std::result::Result<AttackSpec, String>)> = exp
        .attacks
        .iter()
        .map(|a| (a, a.parse::<AttackSpec>().map_err(|e| e.to_string())))
        .collect();
    for &k in &exp.blocks {
        for &alpha in &exp.alpha {
            let base = |attack: &str, status: Status, note: String| Row {
                k: Some(k),
                alpha: Some(alpha),
                ..Row::bare(&exp.name, name, attack, status, note)
            };
            let embedded = WatermarkSpec::generate(cfg.seed, k, side, cfg.signature_rms)
                .and_then(|spec| host.embedder.embed(&spec, alpha).map(|e| (spec, e)));
            let (spec, emb) = match embedded {
                Ok(v) => v,
                Err(e) => {
                    for (text, _) in &attacks {
                        rows.push(base(text, Status::Failed, e.to_string()));
                    }
                    continue;
                }
            };
            let marked = if cfg.quantized {
                emb.image.quantize()
            } else {
                emb.image
            };
            let psnr_embed = psnr(&host.original, &marked).ok();
            let warning = if emb.key.y_monotone_warning() {
                "y not monotone".to_owned()
            } else {
                String::new()
            };
            let reference = spec.assemble();
            for (text, parsed) in &attacks {
                let spec = match parsed {
                    Ok(s) => s,
                    Err(msg) => {
                        rows.push(base(text, Status::NotRun, msg.clone()));
                        continue;
                    }
                };
                let attacked = if spec.attack == Attack::None {
                    Ok(marked.clone())
                } else {
                    spec.apply(&marked, Some(&ImageJpeg))
                };
                let outcome = attacked.and_then(|img| {
                    let rep = detect_and_extract(&img, emb.key.detection(), cfg.tolerance)?;
                    Ok((img, rep))
                });
                match outcome {
                    Ok((img, rep)) => {
                        let w = rep.extracted.as_ref().expect("extraction requested");
                        let (nc_norm, nc_raw) = match nc(&reference, w) {
                            Ok(s) => (Some(s.nc_norm), Some(s.nc_raw)),
                            Err(circmark_core::Error::ZeroEnergy { nc_raw }) => {
                                (None, Some(nc_raw))
                            }
                            Err(_) => (None, None),
                        };
                        rows.push(Row {
                            psnr_embed,
                            psnr_attacked: psnr(&host.original, &img).ok(),
                            nc_norm,
                            nc_raw,
                            detected: Some(rep.detected),
                            ..base(&spec.to_string(), Status::Ok, warning.clone())
                        });
                    }
                    Err(e) => rows.push(base(&spec.to_string(), Status::Failed, e.to_string())),
                }
            }
        }
    }
}
