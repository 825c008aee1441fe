use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slopegrowth::calculus;
use slopegrowth::report::{self, CachePolicy, OutputFormat, RunConfig, RunOutcome, RunStatus, SpecSource, WindowPolicy};
use slopegrowth::{rates, Binning, Error, Preset};

#[derive(Parser)]
#[command(name = "slopegrowth", version, about = "Slope-resolved growth rates on products of free groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// Maximum abstract word length to enumerate.
    #[arg(long, global = true)]
    lmax: Option<u32>,
    /// Number of angular bins.
    #[arg(long, global = true, default_value_t = 90)]
    bins: u32,
    /// Decreasing slope tolerances, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    eps_schedule: Option<Vec<f64>>,
    /// Number of uniform slope grid points in [0, pi/2].
    #[arg(long, global = true, default_value_t = rates::DEFAULT_GRID_POINTS)]
    grid: usize,
    /// `top-half` or `LO:HI`.
    #[arg(long, global = true, default_value = "top-half")]
    window: String,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = CacheArg::Use)]
    cache: CacheArg,
    #[arg(long, global = true, value_enum, default_value_t = BinningArg::Angular)]
    binning: BinningArg,
    /// Enumeration workers; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Deduplicate elements; defaults to off for certified injective specs.
    #[arg(long, global = true, value_enum)]
    dedup: Option<DedupArg>,
    /// Nonzero annuli required before a tolerance is used.
    #[arg(long, global = true)]
    min_samples: Option<u32>,
    /// Continuity slope constant; defaults to the preset's fitted value.
    #[arg(long, global = true)]
    lipschitz: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CacheArg {
    Use,
    Rebuild,
}

#[derive(Clone, Copy, ValueEnum)]
enum BinningArg {
    Angular,
    PaperTan,
}

#[derive(Clone, Copy, ValueEnum)]
enum DedupArg {
    On,
    Off,
}

#[derive(Args, Clone)]
struct Source {
    /// Preset name: example31, example41 or example51.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// Spec file (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Rank parameter of example51.
    #[arg(long = "N", alias = "n-rank")]
    n_rank: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build or load the slope spectrum.
    Spectrum(Source),
    /// Estimate the slope profile and write profile.csv and plotdata.csv.
    Profile(Source),
    /// Locate the maximizing slope.
    Maximizer(Source),
    /// Run every audit and the interior-maximizer condition.
    Audit(Source),
    /// Evaluate a closed-form slope rate.
    Formula {
        /// Only example51 has a closed form.
        name: String,
        #[arg(long = "N", alias = "n-rank", default_value_t = 4)]
        n_rank: u32,
        #[arg(long)]
        theta: f64,
    },
    /// Full run of a preset: all files and audits.
    Preset {
        name: String,
        #[arg(long = "N", alias = "n-rank")]
        n_rank: Option<usize>,
    },
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Input(_) | Error::Config(_) | Error::Domain(_) => 2,
        _ => 1,
    }
}

fn parse_window(s: &str) -> Result<WindowPolicy, Error> {
    if s == "top-half" {
        return Ok(WindowPolicy::TopHalf);
    }
    let parsed = s.split_once(':').and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
    match parsed {
        Some((n_lo, n_hi)) => Ok(WindowPolicy::Fixed { n_lo, n_hi }),
        None => Err(Error::Usage(format!("window must be `top-half` or `LO:HI`, got `{s}`"))),
    }
}

fn resolve_source(src: &Source) -> Result<SpecSource, Error> {
    match (&src.preset, &src.spec) {
        (Some(name), _) => Ok(SpecSource::Preset { preset: Preset::from_name(name, src.n_rank)? }),
        (None, Some(path)) => Ok(SpecSource::File { path: path.clone() }),
        (None, None) => Err(Error::Usage("give --preset or --spec".into())),
    }
}

fn build_config(command: &str, source: SpecSource, g: &GlobalOpts) -> Result<RunConfig, Error> {
    let spec = source.load()?;
    let mut c = RunConfig::defaults(command, source, spec.injectivity(), g.out.clone());
    if let Some(l) = g.lmax {
        c.l_max = l;
    }
    if let Some(s) = &g.eps_schedule {
        c.eps_schedule = s.clone();
    }
    c.grid_points = g.grid;
    c.binning = match g.binning {
        BinningArg::Angular => Binning::Angular { bins: g.bins },
        BinningArg::PaperTan => Binning::PaperTan { grid: rates::uniform_grid(g.grid)? },
    };
    c.window = parse_window(&g.window)?;
    c.cache = match g.cache {
        CacheArg::Use => CachePolicy::Use,
        CacheArg::Rebuild => CachePolicy::Rebuild,
    };
    if let Some(j) = g.jobs {
        c.jobs = j.max(1);
    }
    if let Some(d) = g.dedup {
        c.dedup = match d {
            DedupArg::On => slopegrowth::Dedup::On,
            DedupArg::Off => slopegrowth::Dedup::Off,
        };
    }
    if let Some(m) = g.min_samples {
        c.min_samples = m;
    }
    if let Some(l) = g.lipschitz {
        c.tolerances.lipschitz = l;
    }
    c.validate()?;
    Ok(c)
}

fn write_all(outcome: &RunOutcome) -> Result<(), Error> {
    let out = &outcome.report.config.out_dir;
    report::emit_report(&outcome.report, OutputFormat::Csv, out)?;
    report::emit_report(&outcome.report, OutputFormat::Json, out)?;
    report::emit_run_meta(outcome, out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let g = &cli.global;
    let (name, source) = match &cli.command {
        Command::Formula { name, n_rank, theta } => {
            if name != "example51" {
                return Err(Error::Usage(format!("no closed form for `{name}`; available: example51")));
            }
            let v = calculus::example51_formula(*n_rank, *theta)?;
            println!("{v}");
            return Ok(0);
        }
        Command::Preset { name, n_rank } => {
            ("preset", SpecSource::Preset { preset: Preset::from_name(name, *n_rank)? })
        }
        Command::Spectrum(s) => ("spectrum", resolve_source(s)?),
        Command::Profile(s) => ("profile", resolve_source(s)?),
        Command::Maximizer(s) => ("maximizer", resolve_source(s)?),
        Command::Audit(s) => ("audit", resolve_source(s)?),
    };
    let config = build_config(name, source, g)?;

    if name == "spectrum" {
        report::ensure_writable(&config.out_dir)?;
        let spec = config.source.load()?;
        let (s, hit) = report::obtain_spectrum(&config, &spec)?;
        let local = config.out_dir.join("spectrum.cache");
        if report::cache_path(&config, &s.fingerprint) != local {
            slopegrowth::cache::save_spectrum(&s, &local)?;
        }
        println!(
            "spec {} horizon {} elements {} ({})",
            s.fingerprint,
            s.meta.horizon,
            s.total_elements(),
            if hit { "cached" } else { "built" }
        );
        for (i, t) in s.totals.iter().enumerate() {
            println!("n={} count={t}", i + 1);
        }
        return Ok(0);
    }

    let outcome = report::run(&config)?;
    write_all(&outcome)?;
    let r = &outcome.report;
    let status = match name {
        "profile" | "maximizer" if r.status == RunStatus::AuditFailure => {
            if r.profile.low_data_count() > 0 { RunStatus::LowData } else { RunStatus::Ok }
        }
        _ => r.status,
    };
    match name {
        "maximizer" => match &r.theta_star {
            Some(t) => println!("theta* = {} rad ({} deg), delta = {}", t.theta, t.theta.to_degrees(), t.delta),
            None => println!("theta* undefined: no finite slope rate"),
        },
        "profile" => print!("{}", report::profile_csv(&r.profile)),
        "audit" => print!("{}\n{}", r.condition.to_text(), report::summary_text(r)),
        _ => print!("{}", report::summary_text(r)),
    }
    if status == RunStatus::LowData {
        log::warn!("{} slope points had too little data", r.profile.low_data_count());
    }
    Ok(status.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
