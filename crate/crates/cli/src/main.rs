//! `manloc`: batch front end for activation fusion, region scoring, Bayesian
//! refinement and evaluation.
//!
//! Exit codes: 0 success, 1 config/manifest/argument error, 2 some batch
//! images failed, 3 total failure.

mod baseline;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use manloc_core::bayes::refine_bayes;
use manloc_core::ela::{residual_to_heatmap_preview, signed_ela, DEFAULT_QUALITY};
use manloc_core::fusion::fuse_geometric;
use manloc_core::metrics::{evaluate, threshold_sweep};
use manloc_core::pipeline::synth::{write_suite, SyntheticCase};
use manloc_core::pipeline::{
    parse_manifest, render_overlay, run_batch, Aggregation, BatchOptions, RunConfig,
};
use manloc_core::raster::{
    load_heatmap, load_labelmap, load_mask, load_rgb, save_heatmap, HeatmapFormat,
};
use manloc_core::regions::{extract_regions, select_best_region};
use manloc_core::{Error, Heatmap};

const EXIT_CONFIG: u8 = 1;
const EXIT_PARTIAL: u8 = 2;
const EXIT_TOTAL: u8 = 3;

#[derive(Parser)]
#[command(name = "manloc", version, about = "Weakly-supervised manipulation localization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file plus per-flag overrides, shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lambda_in: Option<f64>,
    #[arg(long)]
    lambda_out: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn resolve(&self) -> manloc_core::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_toml_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.epsilon {
            cfg.fusion.epsilon = v;
        }
        if let Some(v) = self.lambda_in {
            cfg.likelihood.lambda_in = v;
        }
        if let Some(v) = self.lambda_out {
            cfg.likelihood.lambda_out = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Png16,
    F32raw,
}

impl From<Format> for HeatmapFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Png16 => HeatmapFormat::Png16,
            Format::F32raw => HeatmapFormat::F32raw,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FusionRule {
    Geometric,
    /// Baseline: per-pixel arithmetic mean.
    Arithmetic,
    /// Baseline: per-pixel maximum.
    Max,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AggregationArg {
    Macro,
    Micro,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse per-scale activation maps into one heatmap.
    Fuse {
        /// Activation maps (PNG or F32M), one per scale.
        #[arg(required = true)]
        maps: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "png16")]
        format: Format,
        #[arg(long, value_enum, default_value = "geometric")]
        rule: FusionRule,
        #[command(flatten)]
        common: Common,
    },
    /// Score every region of a label map against a heatmap.
    Score {
        #[arg(long)]
        heatmap: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Only print the k best regions (diagnostic).
        #[arg(long)]
        top_k: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Bayesian refinement of a heatmap against a mask, or against the best
    /// region of a label map.
    Refine {
        #[arg(long)]
        heatmap: PathBuf,
        #[arg(long, conflicts_with = "labels", required_unless_present = "labels")]
        mask: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "png16")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Pixel-wise AUC and fixed-threshold F1 of a prediction.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Also print a uniform threshold sweep with this many steps.
        #[arg(long)]
        sweep: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full pipeline over a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Dump per-stage intermediates for every image.
        #[arg(long)]
        debug: bool,
        /// File with one image_id per line; other records are skipped.
        #[arg(long)]
        allowlist: Option<PathBuf>,
        #[arg(long, value_enum)]
        aggregation: Option<AggregationArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Blend a heatmap over an image with a blue-yellow-red colormap.
    Overlay {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        heatmap: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Signed error-level residual of an image.
    Ela {
        #[arg(long)]
        image: PathBuf,
        /// Output prefix; writes `<out>.residual.png` and `<out>.preview.png`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_QUALITY)]
        quality: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a seeded synthetic suite with manifest and truth table.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 128)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        distractors: usize,
        #[arg(long, default_value_t = 3)]
        blur: usize,
        #[arg(long, default_value_t = 0.15)]
        noise: f64,
        #[arg(long, default_value_t = 0.6)]
        spurious: f32,
        #[command(flatten)]
        common: Common,
    },
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_aligned(paths: &[PathBuf]) -> anyhow::Result<Vec<Heatmap>> {
    let maps = paths
        .iter()
        .map(load_heatmap)
        .collect::<manloc_core::Result<Vec<_>>>()?;
    let (w, h) = maps[0].dims();
    Ok(maps
        .iter()
        .map(|m| m.resize_bilinear(w, h))
        .collect::<manloc_core::Result<Vec<_>>>()?)
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Fuse {
            maps,
            out,
            format,
            rule,
            common,
        } => {
            let cfg = common.resolve()?;
            let maps = load_aligned(&maps)?;
            let fused = match rule {
                FusionRule::Geometric => fuse_geometric(&maps, &cfg.fusion)?,
                FusionRule::Arithmetic => baseline::fuse_arithmetic(&maps)?,
                FusionRule::Max => baseline::fuse_max(&maps)?,
            };
            save_heatmap(&fused, &out, format.into())?;
        }
        Command::Score {
            heatmap,
            labels,
            top_k,
            common,
        } => {
            common.resolve()?;
            let heat = load_heatmap(&heatmap)?;
            let labels = load_labelmap(&labels)?.resize_nearest(heat.width(), heat.height())?;
            let sel = select_best_region(&extract_regions(&labels), &heat)?;
            let mut rows = sel.scores.clone();
            if let Some(k) = top_k {
                rows.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.label.cmp(&b.label)));
                rows.truncate(k);
            }
            println!("label,area,score,selected");
            for s in rows {
                println!("{},{},{},{}", s.label, s.area, s.score, s.label == sel.label);
            }
        }
        Command::Refine {
            heatmap,
            mask,
            labels,
            out,
            format,
            common,
        } => {
            let cfg = common.resolve()?;
            let heat = load_heatmap(&heatmap)?;
            let (w, h) = heat.dims();
            let mask = match (mask, labels) {
                (Some(m), _) => load_mask(&m)?.resize_nearest(w, h)?,
                (None, Some(l)) => {
                    let labels = load_labelmap(&l)?.resize_nearest(w, h)?;
                    let sel = select_best_region(&extract_regions(&labels), &heat)?;
                    eprintln!("selected region {}", sel.label);
                    sel.mask
                }
                (None, None) => bail!("either --mask or --labels is required"),
            };
            save_heatmap(&refine_bayes(&heat, &mask, &cfg.likelihood)?, &out, format.into())?;
        }
        Command::Eval {
            pred,
            gt,
            sweep,
            common,
        } => {
            let cfg = common.resolve()?;
            let pred = load_heatmap(&pred)?;
            let gt = load_mask(&gt)?.resize_nearest(pred.width(), pred.height())?;
            let report = evaluate(&pred, &gt, cfg.threshold)?;
            println!("{}", format_report(&report));
            if let Some(steps) = sweep {
                println!("threshold,f1,precision,recall");
                for (tau, r) in threshold_sweep(&pred, &gt, steps)? {
                    println!("{tau},{},{},{}", r.f1, r.precision, r.recall);
                }
            }
        }
        Command::Run {
            manifest,
            out_dir,
            debug,
            allowlist,
            aggregation,
            common,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(a) = aggregation {
                cfg.aggregation = match a {
                    AggregationArg::Macro => Aggregation::Macro,
                    AggregationArg::Micro => Aggregation::Micro,
                };
            }
            let records = parse_manifest(&manifest)?;
            let allowlist = allowlist
                .map(|p| read_allowlist(&p))
                .transpose()?;
            let opts = BatchOptions {
                out_dir,
                dump_intermediates: debug,
                allowlist,
            };
            let report = run_batch(&records, &cfg, &opts)?;
            let s = &report.summary;
            for f in &s.failures {
                eprintln!("failed: {}", f.error);
            }
            eprintln!(
                "{} images: {} ok, {} failed, {} fallbacks",
                s.images, s.succeeded, s.failed, s.fallbacks
            );
            if let (Some(fused), Some(refined)) = (&s.fused, &s.refined) {
                eprintln!(
                    "F1 fused {:.4} -> refined {:.4}; AUC fused {} -> refined {}",
                    fused.f1,
                    refined.f1,
                    fmt_opt(fused.auc),
                    fmt_opt(refined.auc)
                );
            }
            if s.failed > 0 {
                return Ok(if s.succeeded == 0 { EXIT_TOTAL } else { EXIT_PARTIAL });
            }
        }
        Command::Overlay {
            image,
            heatmap,
            out,
            alpha,
            common,
        } => {
            common.resolve()?;
            let src = load_rgb(&image)?;
            let heat = load_heatmap(&heatmap)?;
            render_overlay(&src, &heat, alpha)?
                .save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Ela {
            image,
            out,
            quality,
            common,
        } => {
            common.resolve()?;
            let residual = signed_ela(&load_rgb(&image)?, quality)?;
            residual.save_png16(with_suffix(&out, ".residual.png"))?;
            save_heatmap(
                &residual_to_heatmap_preview(&residual),
                with_suffix(&out, ".preview.png"),
                HeatmapFormat::Png16,
            )?;
            eprintln!(
                "max |residual| {:.5}, mean |residual| {:.5}",
                residual.max_abs(),
                residual.mean_abs()
            );
        }
        Command::Synth {
            out_dir,
            count,
            width,
            height,
            distractors,
            blur,
            noise,
            spurious,
            common,
        } => {
            let cfg = common.resolve()?;
            let cases: Vec<SyntheticCase> = (0..count as u64)
                .map(|i| SyntheticCase {
                    seed: cfg.seed.wrapping_add(i),
                    width,
                    height,
                    shape: None,
                    distractors,
                    blur_radius: blur,
                    noise_sigma: noise,
                    spurious_amplitude: spurious,
                    scales: cfg.fusion.scales.clone(),
                })
                .collect();
            write_suite(&cases, &out_dir)?;
            eprintln!("wrote {count} cases to {}", out_dir.display());
        }
    }
    Ok(0)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|a| format!("{a:.4}")).unwrap_or_else(|| "n/a".into())
}

fn format_report(report: &manloc_core::metrics::EvalReport) -> String {
    let c = &report.counts;
    format!(
        "auc={} f1={} precision={} recall={} threshold={} tp={} fp={} tn={} fn={}",
        fmt_opt(report.auc),
        report.f1,
        report.precision,
        report.recall,
        report.threshold,
        c.tp,
        c.fp,
        c.tn,
        c.fn_
    )
}

fn read_allowlist(path: &Path) -> manloc_core::Result<HashSet<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read allowlist {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Config(_)
            | Error::Manifest { .. }
            | Error::DuplicateId(_)
            | Error::MissingFile { .. }
            | Error::InvalidParameter(_),
        ) => EXIT_CONFIG,
        _ => EXIT_TOTAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
