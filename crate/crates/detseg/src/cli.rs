//! Command-line front end. Progress goes to stderr, data to stdout.

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::ablation::{parse_combos, run_ablation, AblationOptions};
use crate::error::{write_bytes, Error, Result};
use crate::formats::gt::load_gt_set;
use crate::pipeline::{audit_dataset, compute_stats, convert_dataset, ConvertOptions, Recipe};
use crate::segmenter::{backend_from_spec, RemoteConfig};

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

#[derive(Debug, Parser)]
#[command(name = "detseg", version, about = "Turn detection annotations into segmentation labels")]
pub struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "info")]
    pub log_level: log::LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tile a detection dataset and segment every box.
    Convert(ConvertArgs),
    /// Score prompt combinations against ground-truth masks.
    Ablate(AblateArgs),
    /// Recount mask statistics from a converted dataset.
    Stats(ManifestArgs),
    /// Check a converted dataset against its manifest.
    Validate(ManifestArgs),
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// URL of a segmentation server, oracle:fill or oracle:erosion[:radius]
    #[arg(long)]
    pub backend: Option<String>,
    /// Seed for stochastic oracles.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Attempts per remote request.
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    /// Initial retry backoff in milliseconds; doubles per attempt.
    #[arg(long, default_value_t = 1000)]
    pub backoff_ms: u64,
    /// Bound on concurrent remote requests.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 300)]
    pub timeout_s: u64,
}

impl BackendArgs {
    fn remote(&self) -> RemoteConfig {
        RemoteConfig {
            attempts: self.retries.max(1),
            backoff: Duration::from_millis(self.backoff_ms),
            max_in_flight: self.max_in_flight.max(1),
            timeout: Duration::from_secs(self.timeout_s),
        }
    }
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// sota, sior, fast (or dota, dior, fair1m) or a JSON recipe file.
    #[arg(long)]
    pub recipe: String,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub tile_size: Option<u32>,
    #[arg(long)]
    pub stride: Option<u32>,
    #[arg(long)]
    pub retention: Option<f64>,
    /// WxH or a single size.
    #[arg(long, value_parser = parse_grid)]
    pub mask_grid: Option<[u32; 2]>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    /// One combo id, e.g. `hbox` or `cp+rhbox`.
    #[arg(long)]
    pub combos: Option<String>,
    #[arg(long)]
    pub multimask: bool,
    #[arg(long)]
    pub allow_rhbox_fallback: bool,
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Directory holding index.json, images and instance masks.
    #[arg(long, alias = "input")]
    pub gt: PathBuf,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Comma-separated combo ids, or `all`.
    #[arg(long, default_value = "all")]
    pub combos: String,
    #[arg(long, value_parser = parse_grid)]
    pub mask_grid: Option<[u32; 2]>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[arg(long)]
    pub multimask: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ManifestArgs {
    /// manifest.json or the dataset directory holding it.
    #[arg(long, alias = "input")]
    pub manifest: PathBuf,
    #[arg(long)]
    pub json: bool,
}

fn parse_grid(s: &str) -> std::result::Result<[u32; 2], String> {
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once(['x', 'X']) {
        Some((w, h)) => Ok([parse(w)?, parse(h)?]),
        None => {
            let n = parse(s)?;
            Ok([n, n])
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn convert_recipe(args: &ConvertArgs) -> Result<Recipe> {
    let mut recipe = Recipe::load(&args.recipe)?;
    if let Some(t) = args.tile_size {
        recipe.tile_size = t;
    }
    if let Some(s) = args.stride {
        recipe.stride = Some(s);
    }
    if let Some(r) = args.retention {
        recipe.retention = r;
    }
    if let Some(g) = args.mask_grid {
        recipe.mask_grid = g;
    }
    if let Some(m) = args.magnitude {
        recipe.magnitude = m;
    }
    if let Some(c) = &args.combos {
        let combos = parse_combos(c)?;
        if combos.len() != 1 {
            return Err(Error::Config("convert takes exactly one combo".into()));
        }
        recipe.combo = Some(combos[0]);
    }
    recipe.multimask |= args.multimask;
    recipe.allow_rhbox_fallback |= args.allow_rhbox_fallback;
    recipe.check()?;
    Ok(recipe)
}

fn cmd_convert(args: &ConvertArgs) -> Result<i32> {
    let recipe = convert_recipe(args)?;
    let spec = args
        .backend
        .backend
        .clone()
        .or_else(|| recipe.backend.clone())
        .ok_or_else(|| Error::Config("no backend given; pass --backend".into()))?;
    let backend = backend_from_spec(&spec, args.backend.seed, args.backend.remote())?;
    let workers = args.workers.or(recipe.workers).unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let opts = ConvertOptions {
        workers,
        seed: args.backend.seed,
        resume: args.resume,
    };
    let out = convert_dataset(&recipe, &args.input, &args.output, backend, &opts, &INTERRUPTED)?;
    let s = &out.manifest.summary;
    log::info!(
        "{} images, {} tiles, {} valid, {} invalid, {} dropped, {} failed",
        s.images,
        s.tiles,
        s.valid,
        s.invalid,
        s.dropped_by_retention,
        s.backend_failed
    );
    if args.json {
        print_json(&json!({
            "manifest": out.manifest_path,
            "summary": s,
            "stats": out.stats,
        }))?;
    } else {
        println!("{}", out.manifest_path.display());
    }
    Ok(0)
}

fn cmd_ablate(args: &AblateArgs) -> Result<i32> {
    let combos = parse_combos(&args.combos)?;
    let spec = args
        .backend
        .backend
        .as_deref()
        .ok_or_else(|| Error::Config("no backend given; pass --backend".into()))?;
    let backend = backend_from_spec(spec, args.backend.seed, args.backend.remote())?;
    backend.health()?;
    let gt = load_gt_set(&args.gt)?;
    let defaults = AblationOptions::default();
    let opts = AblationOptions {
        mask_grid: args.mask_grid.unwrap_or(defaults.mask_grid),
        magnitude: args.magnitude.unwrap_or(defaults.magnitude),
        multimask: args.multimask,
        workers: args.workers,
    };
    let report = run_ablation(&gt, &combos, backend.as_ref(), &opts)?;
    if let Some(path) = &args.output {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_bytes(path, text.as_bytes())?;
    }
    if args.json {
        print_json(&report)?;
    } else {
        print!("{}", report.to_table());
    }
    Ok(0)
}

fn cmd_stats(args: &ManifestArgs) -> Result<i32> {
    let stats = compute_stats(&args.manifest)?;
    if args.json {
        print_json(&stats)?;
    } else {
        println!("tiles:            {}", stats.tiles);
        println!("valid instances:  {}", stats.valid_instances);
        println!("invalid:          {}", stats.invalid_instances);
        println!("dropped:          {}", stats.dropped_by_retention);
        println!("backend failed:   {}", stats.backend_failed);
        println!("labelled pixels:  {}", stats.total_pixels());
        println!("category  instances  pixels");
        for (id, n) in &stats.category_instances {
            let px = stats.category_pixels.get(id).copied().unwrap_or(0);
            println!("{id:>8}  {n:>9}  {px}");
        }
    }
    Ok(0)
}

fn cmd_validate(args: &ManifestArgs) -> Result<i32> {
    let audit = audit_dataset(&args.manifest)?;
    let ok = audit.problems.is_empty();
    if args.json {
        print_json(&json!({ "ok": ok, "problems": audit.problems }))?;
    } else if ok {
        println!("ok: {} tiles", audit.manifest.tiles.len());
    } else {
        for p in &audit.problems {
            println!("{p}");
        }
    }
    Ok(if ok { 0 } else { 1 })
}

fn json_flag(cmd: &Command) -> bool {
    match cmd {
        Command::Convert(a) => a.json,
        Command::Ablate(a) => a.json,
        Command::Stats(a) | Command::Validate(a) => a.json,
    }
}

/// Parse `args`, run the subcommand and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level)
        .target(env_logger::Target::Stderr)
        .try_init();
    // A second install fails when run() is called twice in one process.
    let _ = ctrlc::set_handler(|| {
        log::warn!("interrupt received; finishing in-flight images");
        INTERRUPTED.store(true, Ordering::SeqCst);
    });

    let result = match &cli.command {
        Command::Convert(a) => cmd_convert(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            log::error!("{e}");
            if json_flag(&cli.command) {
                println!("{}", json!({ "error": e.to_string(), "status": code }));
            }
            code
        }
    }
}
