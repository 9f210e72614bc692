//! Command-line front end for the radio-map toolkit.
//!
//! Subcommands cover the whole pipeline: `ingest` builds scenes from raw
//! measurements, `synth` generates truth maps, `pretrain` fits the
//! per-pixel transformer, `adapt`/`eval` score methods over scene sets,
//! `krige` runs the geostatistical baseline, and `render` draws maps.
//!
//! Exit codes: 0 on success, 2 on usage or input errors, 3 on numeric
//! failures (diverged training, non-finite predictions).

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use radiomap_core::eval::{
    adapt_and_report, compare, evaluate, report_json, scene_split, EvalReport, Evaluator,
};
use radiomap_core::grid::{GeoExtent, NormRange, RadioMap};
use radiomap_core::ingest::format::{load_map, load_scene, save_map, save_scene};
use radiomap_core::ingest::{
    assemble_scene, parse_buildings, parse_measurements, Band, BandAveraging, Scene,
};
use radiomap_core::kriging::{fit_scene_model, krige_map, KrigeOpts, VariogramKind};
use radiomap_core::pit::checkpoint::{load_weights, save_weights};
use radiomap_core::pit::tta::{TtaConfig, TtaOptimizer};
use radiomap_core::pit::weights::PitWeights;
use radiomap_core::pit::{pretrain, PitConfig, TrainConfig};
use radiomap_core::sample::KnownPoint;
use radiomap_core::synth::{generate_dataset, sample_scene, SynthConfig};
use radiomap_core::{seeds, Error, Result};
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "radiomap",
    version,
    about = "Radio-map toolkit: ingestion, synthesis, per-pixel transformer, kriging"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a scene from a measurement CSV and GeoJSON building footprints
    Ingest(IngestArgs),
    /// Generate synthetic truth maps, optionally with sampled scenes
    Synth(SynthArgs),
    /// Train the per-pixel transformer on dense truth maps
    Pretrain(PretrainArgs),
    /// Stream scenes with test-time adaptation and write a report
    Adapt(AdaptArgs),
    /// Krige one scene onto its full grid
    Krige(KrigeArgs),
    /// Score a method over scenes and write a JSON report
    Eval(EvalArgs),
    /// Render a map to PGM, optionally overlaying a derived split
    Render(RenderArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Measurement sweeps CSV (lat,lon,freq_mhz,dbm)
    #[arg(long)]
    measurements: PathBuf,
    /// GeoJSON building footprints
    #[arg(long)]
    buildings: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    lat_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    lat_max: f64,
    #[arg(long, allow_hyphen_values = true)]
    lon_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    lon_max: f64,
    /// Averaging band lower edge, MHz
    #[arg(long)]
    band_lo: f64,
    /// Averaging band upper edge, MHz
    #[arg(long)]
    band_hi: f64,
    /// Normalization floor, dBm
    #[arg(long, default_value_t = -120.0, allow_hyphen_values = true)]
    norm_lo: f64,
    /// Normalization ceiling, dBm
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    norm_hi: f64,
    /// Grid size in pixels (square)
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Band averaging domain
    #[arg(long, value_enum, default_value_t = AvgChoice::Dbm)]
    avg: AvgChoice,
    /// Output scene file (.rmsc)
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Run config JSON; command-line flags win over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maps to generate
    #[arg(long, default_value_t = 8)]
    count: usize,
    /// Map size in pixels (square)
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 8)]
    n_buildings: usize,
    /// Signal at the transmitter, normalized
    #[arg(long, default_value_t = 0.95)]
    p0: f64,
    /// Path-loss exponent
    #[arg(long, default_value_t = 2.0)]
    n_exp: f64,
    /// Normalized loss per crossed wall
    #[arg(long, default_value_t = 0.05)]
    wall_loss: f64,
    /// Shadowing noise sigma
    #[arg(long, default_value_t = 0.02)]
    shadow_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also sample a scene with this many points per map
    #[arg(long)]
    points: Option<usize>,
    /// Nominal band lower edge for sampled scenes, MHz
    #[arg(long, default_value_t = 100.0)]
    band_lo: f64,
    /// Nominal band upper edge for sampled scenes, MHz
    #[arg(long, default_value_t = 200.0)]
    band_hi: f64,
    #[arg(long, default_value_t = -120.0, allow_hyphen_values = true)]
    norm_lo: f64,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    norm_hi: f64,
    /// Output directory
    #[arg(short, long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PretrainArgs {
    /// Run config JSON; command-line flags win over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dense truth maps: .rmap files or directories of them
    #[arg(long, num_args = 1.., required_unless_present = "init_only")]
    maps: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    /// Peak learning rate (cosine decay to zero)
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    weight_decay: f64,
    /// Known points revealed per training mask
    #[arg(long, default_value_t = 50)]
    known: usize,
    /// Query points scored per training mask
    #[arg(long, default_value_t = 1500)]
    query: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Architecture overrides, JSON (partial; defaults fill the rest)
    #[arg(long)]
    model_config: Option<PathBuf>,
    /// Write freshly initialized weights without training
    #[arg(long)]
    init_only: bool,
    /// Write per-epoch loss history CSV here
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    /// Output checkpoint (.rptw)
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct AdaptArgs {
    /// Run config JSON; command-line flags win over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model checkpoint (.rptw)
    #[arg(long)]
    model: PathBuf,
    /// Scenes: .rmsc files or directories; stream order follows this list
    #[arg(long, num_args = 1..)]
    scenes: Vec<PathBuf>,
    /// Adaptation learning rate; 0 scores without adapting
    #[arg(long, default_value_t = 5e-6)]
    tta_lr: f64,
    #[arg(long, value_enum, default_value_t = OptChoice::Adam)]
    optimizer: OptChoice,
    /// Split seed; reports with equal seeds are comparable
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Save the adapted weights here
    #[arg(long)]
    save_model: Option<PathBuf>,
    /// Output report (JSON)
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct KrigeArgs {
    /// Run config JSON; command-line flags win over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input scene (.rmsc)
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum, default_value_t = KindChoice::Exponential)]
    kind: KindChoice,
    /// Nearest samples per prediction; all samples when omitted
    #[arg(long)]
    knn: Option<usize>,
    /// Output dense prediction (.rmap), clamped to [0, 1]
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Run config JSON; command-line flags win over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenes: .rmsc files or directories; evaluation order follows this list
    #[arg(long, num_args = 1..)]
    scenes: Vec<PathBuf>,
    #[arg(long, value_enum)]
    method: MethodChoice,
    /// Model checkpoint; required for the transformer methods
    #[arg(long)]
    model: Option<PathBuf>,
    /// Adaptation learning rate for pit+tta
    #[arg(long, default_value_t = 5e-6)]
    tta_lr: f64,
    #[arg(long, value_enum, default_value_t = OptChoice::Adam)]
    optimizer: OptChoice,
    /// Variogram model for the kriging method
    #[arg(long, value_enum, default_value_t = KindChoice::Exponential)]
    kind: KindChoice,
    /// Nearest samples per kriging system; all when omitted
    #[arg(long)]
    knn: Option<usize>,
    /// Split seed; reports with equal seeds are comparable
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Previous report to compare against
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Output report (JSON)
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Input map (.rmap)
    #[arg(long)]
    map: PathBuf,
    /// Scene whose derived split to overlay (known white, query black)
    #[arg(long)]
    points: Option<PathBuf>,
    /// Split seed for the overlay
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output image (PGM, binary P5)
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AvgChoice {
    Dbm,
    LinearMw,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptChoice {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindChoice {
    Spherical,
    Exponential,
    Gaussian,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodChoice {
    Pit,
    #[value(name = "pit+tta")]
    PitTta,
    Kriging,
}

impl From<OptChoice> for TtaOptimizer {
    fn from(c: OptChoice) -> Self {
        match c {
            OptChoice::Adam => TtaOptimizer::Adam,
            OptChoice::Sgd => TtaOptimizer::Sgd,
        }
    }
}

impl From<KindChoice> for VariogramKind {
    fn from(c: KindChoice) -> Self {
        match c {
            KindChoice::Spherical => VariogramKind::Spherical,
            KindChoice::Exponential => VariogramKind::Exponential,
            KindChoice::Gaussian => VariogramKind::Gaussian,
        }
    }
}

/// Shared run configuration. Any field may be omitted; a command reads the
/// fields it understands. Precedence per value: explicit command-line flag,
/// then this file, then the built-in default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    count: Option<usize>,
    size: Option<usize>,
    n_buildings: Option<usize>,
    p0: Option<f64>,
    n_exp: Option<f64>,
    wall_loss: Option<f64>,
    shadow_sigma: Option<f64>,
    points: Option<usize>,
    epochs: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    weight_decay: Option<f64>,
    known: Option<usize>,
    query: Option<usize>,
    tta_lr: Option<f64>,
    optimizer: Option<String>,
    kind: Option<String>,
    knn: Option<usize>,
}

fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

/// A flag value, unless it was left at its default and the config file has
/// an opinion.
fn pick<T>(m: &ArgMatches, id: &str, flag: T, config: Option<T>) -> T {
    if m.value_source(id) == Some(ValueSource::CommandLine) {
        flag
    } else {
        config.unwrap_or(flag)
    }
}

fn parse_optimizer(s: &str) -> Result<OptChoice> {
    match s {
        "adam" => Ok(OptChoice::Adam),
        "sgd" => Ok(OptChoice::Sgd),
        other => Err(Error::InvalidConfig(format!(
            "unknown optimizer {other:?}; use \"adam\" or \"sgd\""
        ))),
    }
}

fn parse_kind(s: &str) -> Result<KindChoice> {
    match s {
        "spherical" => Ok(KindChoice::Spherical),
        "exponential" => Ok(KindChoice::Exponential),
        "gaussian" => Ok(KindChoice::Gaussian),
        other => Err(Error::InvalidConfig(format!(
            "unknown variogram kind {other:?}; use \"spherical\", \"exponential\", or \"gaussian\""
        ))),
    }
}

/// Expand files and directories into a flat file list. Directory entries
/// matching `ext` are taken in name order; explicit files are taken as-is.
fn collect_files(paths: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.extension().map_or(false, |e| e == ext))
                .collect();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no .{ext} files found in the given paths"
        )));
    }
    Ok(out)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_scenes(paths: &[PathBuf]) -> Result<Vec<(String, Scene)>> {
    let files = collect_files(paths, "rmsc")?;
    let mut out = Vec::with_capacity(files.len());
    for f in &files {
        let id = file_stem(f);
        if out.iter().any(|(other, _)| *other == id) {
            return Err(Error::InvalidConfig(format!(
                "duplicate scene id {id:?}; scene file stems must be unique"
            )));
        }
        out.push((id, load_scene(f)?));
    }
    Ok(out)
}

fn load_maps(paths: &[PathBuf]) -> Result<Vec<RadioMap>> {
    collect_files(paths, "rmap")?
        .iter()
        .map(|f| load_map(f))
        .collect()
}

fn scene_known_points(scene: &Scene) -> Vec<KnownPoint> {
    scene
        .points
        .iter()
        .map(|p| KnownPoint {
            row: p.row,
            col: p.col,
            value: p.value,
        })
        .collect()
}

fn load_model_config(path: Option<&Path>) -> Result<PitConfig> {
    let cfg = match path {
        None => PitConfig::default(),
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    fs::write(path, report_json(report)?)?;
    println!(
        "{}: mean RMSE {:.6} (std {:.6}) over {} scenes{}",
        report.method,
        report.aggregate.mean,
        report.aggregate.std,
        report.scenes.len(),
        if report.skipped.is_empty() {
            String::new()
        } else {
            format!(", {} skipped", report.skipped.len())
        }
    );
    Ok(())
}

fn run_ingest(a: IngestArgs) -> Result<()> {
    let extent = GeoExtent::new(a.lat_min, a.lat_max, a.lon_min, a.lon_max)?;
    let band = Band::new(a.band_lo, a.band_hi)?;
    let norm = NormRange::new(a.norm_lo, a.norm_hi)?;
    let mode = match a.avg {
        AvgChoice::Dbm => BandAveraging::Dbm,
        AvgChoice::LinearMw => BandAveraging::LinearMw,
    };
    let (polys, skipped_features) = parse_buildings(&fs::read_to_string(&a.buildings)?)?;
    let sweeps = parse_measurements(&fs::read_to_string(&a.measurements)?)?;
    let (scene, stats) = assemble_scene(
        &polys,
        &sweeps,
        &extent,
        &band,
        (a.size, a.size),
        &norm,
        mode,
    )?;
    if skipped_features > 0 {
        eprintln!("warning: skipped {skipped_features} non-polygon features");
    }
    if stats.sweeps_outside_extent > 0 {
        eprintln!(
            "warning: dropped {} sweeps outside the extent",
            stats.sweeps_outside_extent
        );
    }
    if stats.sweeps_empty_band > 0 {
        eprintln!(
            "warning: dropped {} sweeps with no samples in the band",
            stats.sweeps_empty_band
        );
    }
    save_scene(&a.out, &scene)?;
    println!(
        "wrote scene {} ({}x{}, {} points)",
        a.out.display(),
        a.size,
        a.size,
        scene.points.len()
    );
    Ok(())
}

fn run_synth(a: SynthArgs, m: &ArgMatches) -> Result<()> {
    let rc = load_run_config(a.config.as_deref())?;
    let count = pick(m, "count", a.count, rc.count);
    let size = pick(m, "size", a.size, rc.size);
    let seed = pick(m, "seed", a.seed, rc.seed);
    let points = pick(m, "points", a.points, rc.points.map(Some));
    let cfg = SynthConfig {
        h: size,
        w: size,
        n_buildings: pick(m, "n_buildings", a.n_buildings, rc.n_buildings),
        p0: pick(m, "p0", a.p0, rc.p0),
        n_exp: pick(m, "n_exp", a.n_exp, rc.n_exp),
        wall_loss: pick(m, "wall_loss", a.wall_loss, rc.wall_loss),
        shadow_sigma: pick(m, "shadow_sigma", a.shadow_sigma, rc.shadow_sigma),
        seed,
    };
    fs::create_dir_all(&a.out_dir)?;
    let maps = generate_dataset(&cfg, count)?;
    let band = Band::new(a.band_lo, a.band_hi)?;
    let norm = NormRange::new(a.norm_lo, a.norm_hi)?;
    for (i, truth) in maps.iter().enumerate() {
        save_map(&a.out_dir.join(format!("map-{i:04}.rmap")), &truth.map)?;
        if let Some(n) = points {
            let scene = sample_scene(
                truth,
                n,
                seeds::derive(seed, seeds::tag::SCENE, i as u64),
                &band,
                &norm,
            )?;
            save_scene(&a.out_dir.join(format!("scene-{i:04}.rmsc")), &scene)?;
        }
    }
    println!(
        "wrote {count} maps ({size}x{size}{}) to {}",
        if points.is_some() { ", with scenes" } else { "" },
        a.out_dir.display()
    );
    Ok(())
}

fn run_pretrain(a: PretrainArgs, m: &ArgMatches) -> Result<()> {
    let rc = load_run_config(a.config.as_deref())?;
    let seed = pick(m, "seed", a.seed, rc.seed);
    let cfg = load_model_config(a.model_config.as_deref())?;
    let mut weights = PitWeights::init(&cfg, seeds::derive(seed, seeds::tag::INIT, 0));
    if a.init_only {
        save_weights(&a.out, &cfg, &weights)?;
        println!(
            "wrote initialized checkpoint {} ({} parameters)",
            a.out.display(),
            weights.n_params()
        );
        return Ok(());
    }
    let tc = TrainConfig {
        epochs: pick(m, "epochs", a.epochs, rc.epochs),
        batch_size: pick(m, "batch", a.batch, rc.batch),
        lr: pick(m, "lr", a.lr, rc.lr),
        weight_decay: pick(m, "weight_decay", a.weight_decay, rc.weight_decay),
        n_known: pick(m, "known", a.known, rc.known),
        n_query: pick(m, "query", a.query, rc.query),
        seed,
    };
    let maps = load_maps(&a.maps)?;
    let report = pretrain(&mut weights, &cfg, &maps, &tc)?;
    if let Some(csv) = &a.loss_csv {
        let mut text = String::from("epoch,rmse\n");
        for (e, loss) in report.epoch_losses.iter().enumerate() {
            text.push_str(&format!("{e},{loss}\n"));
        }
        fs::write(csv, text)?;
    }
    save_weights(&a.out, &cfg, &weights)?;
    let first = report.epoch_losses.first().copied().unwrap_or(f64::NAN);
    let last = report.epoch_losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} maps for {} epochs ({} steps): epoch RMSE {first:.6} -> {last:.6}",
        maps.len(),
        tc.epochs,
        report.steps
    );
    println!("wrote checkpoint {}", a.out.display());
    Ok(())
}

fn run_adapt(a: AdaptArgs, m: &ArgMatches) -> Result<()> {
    let rc = load_run_config(a.config.as_deref())?;
    let seed = pick(m, "seed", a.seed, rc.seed);
    let optimizer = match m.value_source("optimizer") {
        Some(ValueSource::CommandLine) => a.optimizer,
        _ => match &rc.optimizer {
            Some(s) => parse_optimizer(s)?,
            None => a.optimizer,
        },
    };
    let tta = TtaConfig {
        eta: pick(m, "tta_lr", a.tta_lr, rc.tta_lr),
        optimizer: optimizer.into(),
    };
    let (cfg, weights) = load_weights(&a.model)?;
    let scenes = load_scenes(&a.scenes)?;
    let (report, adapted) = adapt_and_report(&scenes, &weights, &cfg, &tta, seed)?;
    write_report(&a.out, &report)?;
    if let Some(path) = &a.save_model {
        save_weights(path, &cfg, &adapted)?;
        println!("wrote adapted checkpoint {}", path.display());
    }
    Ok(())
}

fn run_krige(a: KrigeArgs, m: &ArgMatches) -> Result<()> {
    let rc = load_run_config(a.config.as_deref())?;
    let kind = match m.value_source("kind") {
        Some(ValueSource::CommandLine) => a.kind,
        _ => match &rc.kind {
            Some(s) => parse_kind(s)?,
            None => a.kind,
        },
    };
    let knn = pick(m, "knn", a.knn, rc.knn.map(Some));
    let scene = load_scene(&a.scene)?;
    let points = scene_known_points(&scene);
    let (h, w) = (scene.buildings.h, scene.buildings.w);
    let model = fit_scene_model(&points, h, w, kind.into());
    println!(
        "fitted {:?} variogram: nugget {:.6e}, sill {:.6e}, range {:.3}",
        model.kind, model.nugget, model.sill, model.range
    );
    let (preds, _) = krige_map(&points, &model, h, w, &KrigeOpts { knn })?;
    let values: Vec<f32> = preds.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
    save_map(&a.out, &RadioMap::from_values(h, w, values)?)?;
    println!("wrote prediction map {}", a.out.display());
    Ok(())
}

fn run_eval(a: EvalArgs, m: &ArgMatches) -> Result<()> {
    let rc = load_run_config(a.config.as_deref())?;
    let seed = pick(m, "seed", a.seed, rc.seed);
    let scenes = load_scenes(&a.scenes)?;
    let report = match a.method {
        MethodChoice::Pit | MethodChoice::PitTta => {
            let model_path = a.model.as_ref().ok_or_else(|| {
                Error::InvalidConfig("--model is required for the transformer methods".into())
            })?;
            let (cfg, weights) = load_weights(model_path)?;
            if a.method == MethodChoice::Pit {
                evaluate(&scenes, &Evaluator::Pit { weights: &weights, cfg: &cfg }, seed)?
            } else {
                let optimizer = match m.value_source("optimizer") {
                    Some(ValueSource::CommandLine) => a.optimizer,
                    _ => match &rc.optimizer {
                        Some(s) => parse_optimizer(s)?,
                        None => a.optimizer,
                    },
                };
                let tta = TtaConfig {
                    eta: pick(m, "tta_lr", a.tta_lr, rc.tta_lr),
                    optimizer: optimizer.into(),
                };
                evaluate(
                    &scenes,
                    &Evaluator::PitTta { weights: &weights, cfg: &cfg, tta: &tta },
                    seed,
                )?
            }
        }
        MethodChoice::Kriging => {
            let kind = match m.value_source("kind") {
                Some(ValueSource::CommandLine) => a.kind,
                _ => match &rc.kind {
                    Some(s) => parse_kind(s)?,
                    None => a.kind,
                },
            };
            let knn = pick(m, "knn", a.knn, rc.knn.map(Some));
            evaluate(&scenes, &Evaluator::Kriging { kind: kind.into(), knn }, seed)?
        }
    };
    write_report(&a.out, &report)?;
    if let Some(base_path) = &a.baseline {
        let baseline: EvalReport = serde_json::from_str(&fs::read_to_string(base_path)?)?;
        let delta = compare(&baseline, &report)?;
        println!(
            "change vs baseline ({}): {delta:+.2}% (positive = lower error)",
            baseline.method
        );
    }
    Ok(())
}

/// Paint a 3x3 block around (row, col), clipped at the borders.
fn stamp(px: &mut [u8], h: usize, w: usize, row: usize, col: usize, shade: u8) {
    for r in row.saturating_sub(1)..=(row + 1).min(h - 1) {
        for c in col.saturating_sub(1)..=(col + 1).min(w - 1) {
            px[r * w + c] = shade;
        }
    }
}

fn run_render(a: RenderArgs) -> Result<()> {
    let map = load_map(&a.map)?;
    let mut px: Vec<u8> = map
        .values
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    if let Some(scene_path) = &a.points {
        let scene = load_scene(scene_path)?;
        if scene.buildings.h != map.h || scene.buildings.w != map.w {
            return Err(Error::Dimension(format!(
                "scene grid {}x{} does not match map {}x{}",
                scene.buildings.h, scene.buildings.w, map.h, map.w
            )));
        }
        let split = scene_split(&scene, &file_stem(scene_path), a.seed)?;
        for p in &split.known {
            stamp(&mut px, map.h, map.w, p.row, p.col, 255);
        }
        for q in &split.query {
            stamp(&mut px, map.h, map.w, q.row, q.col, 0);
        }
    }
    let mut out = format!("P5\n{} {}\n255\n", map.w, map.h).into_bytes();
    out.extend_from_slice(&px);
    fs::write(&a.out, out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = Cli::from_arg_matches(&matches).expect("arguments were just parsed");
    let (_, sub) = matches
        .subcommand()
        .expect("a subcommand is required by clap");
    let result = match cli.cmd {
        Cmd::Ingest(a) => run_ingest(a),
        Cmd::Synth(a) => run_synth(a, sub),
        Cmd::Pretrain(a) => run_pretrain(a, sub),
        Cmd::Adapt(a) => run_adapt(a, sub),
        Cmd::Krige(a) => run_krige(a, sub),
        Cmd::Eval(a) => run_eval(a, sub),
        Cmd::Render(a) => run_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
