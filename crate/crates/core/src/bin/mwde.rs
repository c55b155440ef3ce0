use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mwde::bench::{self, ExperimentConfig};
use mwde::densities::{self, MixtureDensity};
use mwde::estimator::{DensityEstimate, NormalizationMethod};
use mwde::metrics::{QuadratureGrid, DEFAULT_GRID_POINTS};
use mwde::{cascade, BasisSpec, CascadeParams, Error, FilterRegistry, RefinableFunctions};

#[derive(Parser)]
#[command(
    name = "mwde",
    version,
    about = "Wavelet and multiwavelet density estimation"
)]
struct Cli {
    /// Extra directory of filter JSON files.
    #[arg(long, global = true)]
    filter_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the filter registry.
    Filters {
        #[command(subcommand)]
        action: ListAction,
    },
    /// Inspect the benchmark density zoo.
    Densities {
        #[command(subcommand)]
        action: ListAction,
    },
    /// Dump the cascaded scaling table as CSV.
    Cascade {
        #[arg(long)]
        filter: String,
        #[arg(long, default_value_t = mwde::cascade::DEFAULT_DEPTH)]
        depth: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one estimate and write `x,p_hat` plus a JSON sidecar.
    Estimate(EstimateArgs),
    /// Run a benchmark sweep.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ListAction {
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    ShiftClip,
    ClipRescale,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    filter: String,
    #[arg(long)]
    level: i32,
    /// Sample file, one number per line.
    #[arg(long, conflicts_with = "density", required_unless_present = "density")]
    samples: Option<PathBuf>,
    /// Zoo density name, or a path to a mixture JSON file.
    #[arg(long)]
    density: Option<String>,
    #[arg(long, default_value_t = bench::DEFAULT_SAMPLE_SIZE)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Domain as `A:B`.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid: usize,
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value_t = Method::ShiftClip)]
    method: Method,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn registry(dir: Option<&Path>) -> mwde::Result<FilterRegistry> {
    match dir {
        Some(d) => FilterRegistry::with_dir(d),
        None => Ok(FilterRegistry::new()),
    }
}

fn create(path: &Path) -> mwde::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cli: Cli) -> mwde::Result<ExitCode> {
    let registry = registry(cli.filter_dir.as_deref())?;
    match cli.command {
        Command::Filters { .. } => {
            let mut out = std::io::stdout().lock();
            writeln!(
                out,
                "name,multiplicity,support_lo,support_hi,taps,highpass,residual"
            )?;
            for name in registry.names() {
                let f = registry.get(&name)?;
                let (l, u) = f.support();
                writeln!(
                    out,
                    "{name},{},{l},{u},{},{},{:.3e}",
                    f.multiplicity(),
                    f.lowpass().len(),
                    f.highpass().is_some(),
                    f.orthogonality_residual()
                )?;
            }
        }
        Command::Densities { .. } => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "name,components,domain_lo,domain_hi,domain_mass")?;
            for name in densities::ZOO {
                let d = densities::zoo(name)?;
                let (a, b) = d.domain;
                writeln!(
                    out,
                    "{name},{},{a},{b},{:.6}",
                    d.components(),
                    d.mass_between(a, b)
                )?;
            }
        }
        Command::Cascade { filter, depth, out } => {
            let params = CascadeParams {
                depth,
                ..Default::default()
            };
            let table = cascade(Arc::new(registry.get(&filter)?), params)?;
            let mut w = create(&out)?;
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Estimate(args) => estimate(&registry, args)?,
        Command::Benchmark {
            config,
            out,
            summary,
        } => {
            let config = ExperimentConfig::from_file(&config)?;
            let results = bench::run_benchmark(&config, &registry)?;
            let out = out.or_else(|| config.out.as_ref().map(PathBuf::from));
            let summary_path = summary.or_else(|| config.summary.as_ref().map(PathBuf::from));
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    bench::write_results(&results, &mut w)?;
                    w.flush()?;
                }
                None => bench::write_results(&results, std::io::stdout().lock())?,
            }
            if let Some(path) = summary_path {
                let mut w = create(&path)?;
                bench::write_summary(&bench::best_per_density(&results), &mut w)?;
                w.flush()?;
            }
            let failed = results.iter().filter(|r| r.score().is_none()).count();
            if failed > 0 {
                eprintln!("{failed} of {} cells failed", results.len());
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_domain(text: &str) -> mwde::Result<(f64, f64)> {
    let bad = || Error::Config(format!("domain `{text}` is not of the form A:B"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidDomain { a, b });
    }
    Ok((a, b))
}

fn load_density(name: &str) -> mwde::Result<MixtureDensity> {
    match densities::zoo(name) {
        Ok(d) => Ok(d),
        Err(Error::UnknownDensity(_)) if Path::new(name).is_file() => {
            MixtureDensity::from_json(&std::fs::read_to_string(name)?)
        }
        Err(e) => Err(e),
    }
}

fn estimate(registry: &FilterRegistry, args: EstimateArgs) -> mwde::Result<()> {
    let explicit_domain = args.domain.as_deref().map(parse_domain).transpose()?;
    let (samples, density, truncation) = match (&args.samples, &args.density) {
        (Some(path), _) => (
            densities::parse_samples(&std::fs::read_to_string(path)?)?,
            None,
            None,
        ),
        (None, Some(name)) => {
            let mut d = load_density(name)?;
            if let Some(domain) = explicit_domain {
                d.domain = domain;
            }
            if args.n == 0 {
                return Err(Error::Config("--n must be at least 1".into()));
            }
            let s = d.sample_detailed(args.n, args.seed);
            (s.values, Some(d), Some(s.truncation_fraction))
        }
        (None, None) => return Err(Error::Config("need --samples or --density".into())),
    };
    let domain = match (explicit_domain, &density) {
        (Some(d), _) => d,
        (None, Some(d)) => d.domain,
        (None, None) => densities::DEFAULT_DOMAIN,
    };

    let params = CascadeParams {
        depth: args.depth.unwrap_or(mwde::cascade::DEFAULT_DEPTH),
        ..Default::default()
    };
    let table = cascade(Arc::new(registry.get(&args.filter)?), params)?;
    let functions = Arc::new(RefinableFunctions::new(Arc::new(table)));
    let spec = BasisSpec::new(functions, args.level, domain)?;
    let mut estimate = DensityEstimate::fit(spec, &samples)?;
    let grid = QuadratureGrid::new(domain.0, domain.1, args.grid)?;
    if args.normalize {
        let method = match args.method {
            Method::ShiftClip => NormalizationMethod::ShiftClip,
            Method::ClipRescale => NormalizationMethod::ClipRescale,
        };
        estimate = estimate.normalize_with(&grid, method)?;
    }
    let values = estimate.values_on(&grid);

    let mut w = create(&args.out)?;
    writeln!(w, "x,p_hat")?;
    for (x, v) in grid.points().iter().zip(&values) {
        writeln!(w, "{x},{v}")?;
    }
    w.flush()?;

    let spec = estimate.spec();
    let coefficients = estimate.coefficients();
    let (k_min, k_max) = spec.translates();
    let mut sidecar = json!({
        "filter": args.filter,
        "multiplicity": spec.multiplicity(),
        "level": spec.level(),
        "domain": [domain.0, domain.1],
        "translates": [k_min, k_max],
        "coefficient_count": spec.coefficient_count(),
        "sample_size": coefficients.sample_size,
        "grid_points": grid.len(),
        "coefficients": coefficients.alpha.values,
    });
    if let Some(t) = truncation {
        sidecar["truncation_fraction"] = json!(t);
    }
    if let Some(d) = &density {
        sidecar["density"] = json!(d.name);
        sidecar["seed"] = json!(args.seed);
        sidecar["ise"] = json!(mwde::ise(&values, &d.pdf_on(grid.points()), &grid)?);
    }
    if let Some(n) = estimate.normalization() {
        sidecar["normalization"] = json!({
            "method": format!("{:?}", n.method),
            "raw_mass": n.raw_mass,
            "negative_mass": n.negative_mass,
            "adjustment": n.adjustment,
            "mass": n.mass,
        });
    }
    let mut sidecar_path = args.out.clone().into_os_string();
    sidecar_path.push(".json");
    let mut w = create(Path::new(&sidecar_path))?;
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
