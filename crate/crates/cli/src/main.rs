use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use covercx_core::cache::MetricCache;
use covercx_core::config::RunConfig;
use covercx_core::corpus::{load_genre_map, load_imputation, GenreMap, Imputation};
use covercx_core::detection::{load_detections, DetectionRecord};
use covercx_core::report::{self, JoinedCorpus, Metric, ReportInputs};
use covercx_core::scan::{read_manifest, scan};
use covercx_core::selftest;

/// Visual complexity metrics for album-cover corpora.
#[derive(Parser)]
#[command(name = "covercx", version)]
struct Cli {
    /// Key-value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    run: RunFlags,

    #[command(subcommand)]
    command: Command,
}

/// One flag per configurable field.
#[derive(Args, Default)]
struct RunFlags {
    /// Step between 2x2 ordinal windows.
    #[arg(long, global = true)]
    stride: Option<String>,
    /// `original` or WIDTHxHEIGHT before H and C.
    #[arg(long, global = true)]
    ec_resize: Option<String>,
    /// `original` or WIDTHxHEIGHT before compression.
    #[arg(long, global = true)]
    zipc_resize: Option<String>,
    /// DEFLATE level, 0 to 9.
    #[arg(long, global = true)]
    zip_level: Option<String>,
    /// Compute MDLc (true or false).
    #[arg(long, global = true)]
    mdl: Option<String>,
    #[arg(long, global = true)]
    k_max: Option<String>,
    /// Comma-separated patch sides, each dividing 224.
    #[arg(long, global = true)]
    mdl_patch_sizes: Option<String>,
    #[arg(long, global = true)]
    mdl_restarts: Option<String>,
    /// `rgb` or `gray`.
    #[arg(long, global = true)]
    mdl_features: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Minimum detection confidence.
    #[arg(long, global = true)]
    tau: Option<String>,
    /// `per-detection` or `per-image`.
    #[arg(long, global = true)]
    class_counting: Option<String>,
    /// Albums per dynamic period.
    #[arg(long, global = true)]
    period_threshold: Option<String>,
    /// Smallest genre group kept per period.
    #[arg(long, global = true)]
    min_genre_count: Option<String>,
    #[arg(long, global = true)]
    workers: Option<String>,
}

impl RunFlags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("stride", &self.stride),
            ("ec_resize", &self.ec_resize),
            ("zipc_resize", &self.zipc_resize),
            ("zip_level", &self.zip_level),
            ("mdl", &self.mdl),
            ("k_max", &self.k_max),
            ("mdl_patch_sizes", &self.mdl_patch_sizes),
            ("mdl_restarts", &self.mdl_restarts),
            ("mdl_features", &self.mdl_features),
            ("seed", &self.seed),
            ("tau", &self.tau),
            ("class_counting", &self.class_counting),
            ("period_threshold", &self.period_threshold),
            ("min_genre_count", &self.min_genre_count),
            ("workers", &self.workers),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Album metadata CSV.
    #[arg(long)]
    metadata: PathBuf,
    /// CSV of raw_label,supergenres.
    #[arg(long)]
    genre_map: PathBuf,
    /// CSV of album_id,genre,sure.
    #[arg(long)]
    imputation: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Score every image in a manifest that is not cached yet.
    Scan {
        /// One image path per line.
        manifest: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        /// Fail when any file cannot be scored.
        #[arg(long)]
        strict: bool,
    },
    /// Attach post-threshold object counts to cached records.
    IngestDetections {
        /// Detection records, one JSON object per line.
        detections: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        /// Fail when a record matches no cached image.
        #[arg(long)]
        strict: bool,
    },
    /// Summary statistics of one metric per period, optionally per genre.
    Aggregate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        cache: PathBuf,
        /// h, c, zipc or mdlc.
        #[arg(long, default_value = "c")]
        metric: String,
        #[arg(long)]
        by_genre: bool,
        /// Output CSV; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write every report CSV.
    Report {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        cache: PathBuf,
        /// Detection records; object reports are skipped without them.
        #[arg(long)]
        detections: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Fail when a cover is unreadable or was undecodable at scan time.
        #[arg(long)]
        strict: bool,
    },
    /// Run the built-in checks.
    Selftest,
}

fn run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        cfg.apply_file(&text)
            .with_context(|| format!("in config {}", path.display()))?;
    }
    for (key, value) in cli.run.pairs() {
        cfg.set(key, value)?;
    }
    Ok(cfg)
}

fn open_file(path: &Path) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn read_detections(path: &Path) -> Result<Vec<DetectionRecord>> {
    load_detections(BufReader::new(open_file(path)?))
        .with_context(|| format!("in {}", path.display()))
}

struct LoadedCorpus {
    metadata: Vec<u8>,
    base_dir: PathBuf,
    genre_map: GenreMap,
    imputation: Vec<Imputation>,
}

fn load_corpus(args: &CorpusArgs) -> Result<LoadedCorpus> {
    let metadata =
        fs::read(&args.metadata).with_context(|| format!("reading {}", args.metadata.display()))?;
    let genre_map = load_genre_map(open_file(&args.genre_map)?)
        .with_context(|| format!("in {}", args.genre_map.display()))?;
    let imputation = match &args.imputation {
        Some(p) => load_imputation(open_file(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Vec::new(),
    };
    let base_dir = args
        .metadata
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok(LoadedCorpus {
        metadata,
        base_dir,
        genre_map,
        imputation,
    })
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = run_config(cli)?;
    match &cli.command {
        Command::Scan {
            manifest,
            cache,
            strict,
        } => {
            let paths = read_manifest(manifest)
                .with_context(|| format!("reading manifest {}", manifest.display()))?;
            let mut cache = MetricCache::open(cache)?;
            let summary = scan(&paths, &cfg, &mut cache)?;
            println!(
                "scanned {} images: {} computed, {} cached, {} known bad, {} skipped",
                paths.len(),
                summary.computed,
                summary.cached,
                summary.known_bad,
                summary.skipped.len()
            );
            let failures = summary.skipped.len() + summary.known_bad;
            if *strict && failures > 0 {
                bail!("{failures} files could not be scored");
            }
        }
        Command::IngestDetections {
            detections,
            cache,
            strict,
        } => {
            let records = read_detections(detections)?;
            let mut cache = MetricCache::open(cache)?;
            let result = report::ingest_detections(&mut cache, &records, &cfg)?;
            println!(
                "updated {} records, {} detection records unmatched",
                result.updated,
                result.unmatched.len()
            );
            if *strict && !result.unmatched.is_empty() {
                bail!(
                    "{} detection records match no cached image",
                    result.unmatched.len()
                );
            }
        }
        Command::Aggregate {
            corpus,
            cache,
            metric,
            by_genre,
            output,
        } => {
            let metric = Metric::parse(metric).with_context(|| {
                format!("unknown metric {metric:?}; expected h, c, zipc or mdlc")
            })?;
            let loaded = load_corpus(corpus)?;
            let cache = MetricCache::open(cache)?;
            let joined = JoinedCorpus::build(
                &loaded.metadata,
                &loaded.base_dir,
                &loaded.genre_map,
                &loaded.imputation,
                &cache,
                &cfg,
            )?;
            let rows = joined.aggregate(metric, *by_genre, &cfg);
            match output {
                Some(path) => {
                    let file = fs::File::create(path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    report::write_aggregate_csv(&rows, file)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    report::write_aggregate_csv(&rows, &mut lock)?;
                    lock.flush()?;
                }
            }
        }
        Command::Report {
            corpus,
            cache,
            detections,
            out,
            strict,
        } => {
            let loaded = load_corpus(corpus)?;
            let detections = detections.as_deref().map(read_detections).transpose()?;
            let cache = MetricCache::open(cache)?;
            let inputs = ReportInputs {
                metadata_csv: &loaded.metadata,
                base_dir: &loaded.base_dir,
                genre_map: &loaded.genre_map,
                imputation: &loaded.imputation,
                detections: detections.as_deref(),
            };
            let summary = report::report(&inputs, &cache, &cfg, out)?;
            let c = &summary.corpus;
            println!(
                "joined {} albums into {} periods; {} unreadable, {} corrupt; wrote {} files to {}",
                c.joined,
                c.periods.len(),
                c.unreadable_images.len(),
                c.corrupt_images.len(),
                summary.files.len(),
                out.display()
            );
            let failures = c.unreadable_images.len() + c.corrupt_images.len();
            if *strict && failures > 0 {
                bail!("{failures} covers could not be used");
            }
        }
        Command::Selftest => {
            let results = selftest::run();
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                println!("{status} {}: {}", r.name, r.detail);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", results.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
