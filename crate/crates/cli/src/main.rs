use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use strip_trace::geodesics::{find_periodic_orbits, orbit_table, residue_fiber_quadrature, symplectic_residue, volume_sublevel, QuadOptions};
use strip_trace::models::{build_model, verify_clifford};
use strip_trace::report::run_desk_suite;
use strip_trace::spectra::{cache_dir_from_env, compute_spectrum, counting_function, SpectrumCache};
use strip_trace::textio::{fmt17, Summary};
use strip_trace::tracelab::{
    detect_singular_times, peak_mass_and_phase, predicted_peak, profile_table, trace_profile, weyl_fit, weyl_prediction, Cutoff,
    TimeGrid, TraceError,
};
use strip_trace::{Error, ModelConfig, Spectrum, StationaryModel, GENERATOR_VERSION};

const DEFAULT_CACHE_DIR: &str = ".strip-trace-cache";
const EXIT_VALIDATION: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "strip-trace")]
#[command(about = "Spectra, closed geodesics and wave-trace singularities of stationary model spacetimes")]
#[command(version)]
struct Cli {
    /// Directory for tables and summaries; printed to stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Spectrum cache directory (overrides STRIP_TRACE_CACHE)
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or load from cache) the spectrum up to a completeness bound
    Spectrum {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lambda_max: f64,
        /// Root tolerance of the transfer-matrix engine
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        no_cache: bool,
    },
    /// Periodic orbits with period up to T_max and their classical data
    Geodesics {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "Tmax", alias = "t-max")]
        t_max: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Seed of the random Clifford-relation check
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples of the Clifford-relation check
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Counting function fit against the volume prediction
    Weyl {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lambda_max: f64,
        /// Fit range `a,b`; defaults to `λ_max/10, λ_max`
        #[arg(long, value_delimiter = ',', num_args = 2)]
        range: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        no_cache: bool,
    },
    /// Windowed spectral sums: peaks, masses and phases against the orbit table
    Trace {
        #[arg(long)]
        model: PathBuf,
        /// Spectral cutoffs, comma separated (at least three)
        #[arg(long = "Lambda", value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long = "Tmax", alias = "t-max")]
        t_max: f64,
        #[arg(long, value_enum, default_value_t = CutoffArg::Gaussian)]
        cutoff: CutoffArg,
        /// Peak threshold in multiples of the median |S|
        #[arg(long, default_value_t = strip_trace::tracelab::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Largest half-width of the mass integration window
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Samples per unit time; defaults to 4096·max(1, Λ/200)
        #[arg(long)]
        samples: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        no_cache: bool,
    },
    /// Run the verification suite
    Report {
        #[arg(long, value_enum, default_value_t = Suite::Desk)]
        suite: Suite,
    },
    /// Inspect or clear the spectrum cache
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    List,
    Clear,
}

#[derive(Clone, Copy, ValueEnum)]
enum CutoffArg {
    Gaussian,
    Fejer,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Desk,
}

#[derive(Debug)]
struct CliError {
    kind: &'static str,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

macro_rules! impl_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
impl_from!(
    strip_trace::ConfigError,
    strip_trace::ModelError,
    strip_trace::GeodesicError,
    strip_trace::SpectrumError,
    TraceError
);

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        kind: "argument",
        message: message.into(),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    Error::Io {
        path: path.display().to_string(),
        source: e,
    }
    .into()
}

/// Result of a subcommand: summary, named tables, and whether the numerical checks passed.
struct Output {
    summary: Summary,
    tables: Vec<(&'static str, String)>,
    passed: bool,
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), CliError> {
    if v.is_finite() && v > lo && v <= hi {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} outside ({lo}, {hi}]")))
    }
}

fn load_model(path: &Path) -> Result<StationaryModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let cfg = ModelConfig::from_toml(&text)?;
    Ok(build_model(&cfg)?)
}

fn spectrum_for(cli: &Cli, model: &StationaryModel, lambda_max: f64, tol: f64, no_cache: bool) -> Result<Spectrum, CliError> {
    let compute = || compute_spectrum(model, lambda_max, tol);
    if no_cache {
        return Ok(compute()?);
    }
    let cache = open_cache(cli);
    info!("spectrum cache at {}", cache.dir().display());
    Ok(cache.get_or_compute(model.fingerprint(), lambda_max, compute)?)
}

fn open_cache(cli: &Cli) -> SpectrumCache {
    let dir = cli
        .cache_dir
        .clone()
        .unwrap_or_else(|| cache_dir_from_env(Path::new(DEFAULT_CACHE_DIR)));
    SpectrumCache::new(dir)
}

fn header(model: &StationaryModel) -> Summary {
    let mut s = Summary::new();
    s.text("generator", GENERATOR_VERSION)
        .text("model", model.name())
        .text("fingerprint", model.fingerprint());
    s
}

fn cmd_spectrum(cli: &Cli, model: &Path, lambda_max: f64, tol: f64, no_cache: bool) -> Result<Output, CliError> {
    check_range("lambda_max", lambda_max, 0.0, 1e5)?;
    check_range("tol", tol, 0.0, 1e-3)?;
    let m = load_model(model)?;
    let spec = spectrum_for(cli, &m, lambda_max, tol, no_cache)?;
    let mut s = header(&m);
    s.num("lambda_max", lambda_max)
        .int("entries", spec.len() as i64)
        .int("total_multiplicity", spec.total_multiplicity() as i64)
        .int("count_nonnegative", counting_function(&spec, lambda_max)? as i64)
        .text("symmetric", spec.is_symmetric(1e-9).to_string());
    Ok(Output {
        summary: s,
        tables: vec![("spectrum.tsv", spec.table())],
        passed: true,
    })
}

fn cmd_geodesics(model: &Path, t_max: f64, tol: f64, seed: u64, samples: usize) -> Result<Output, CliError> {
    check_range("Tmax", t_max, 0.0, 1e3)?;
    check_range("tol", tol, 0.0, 1e-3)?;
    if samples == 0 || samples > 1_000_000 {
        return Err(invalid(format!("samples = {samples} outside [1, 1000000]")));
    }
    let m = load_model(model)?;
    let search = find_periodic_orbits(&m, t_max, tol)?;
    let clifford = verify_clifford(&m, samples, seed);
    let mut s = header(&m);
    s.num("T_max", t_max)
        .int("orbits", search.orbits.len() as i64)
        .list("periods", &search.periods())
        .int("failed_seeds", search.failures.len() as i64);
    for (i, f) in search.failures.iter().enumerate() {
        s.text(&format!("failure.{i}"), format!("{}: {}", f.seed, f.reason));
    }
    s.int("clifford.seed", seed as i64)
        .int("clifford.samples", clifford.samples as i64)
        .num("clifford.max_violation", clifford.max_violation);
    Ok(Output {
        summary: s,
        tables: vec![("orbits.tsv", orbit_table(&m, &search))],
        passed: true,
    })
}

fn cmd_weyl(cli: &Cli, model: &Path, lambda_max: f64, range: Option<&[f64]>, tol: f64, no_cache: bool) -> Result<Output, CliError> {
    check_range("lambda_max", lambda_max, 0.0, 1e5)?;
    check_range("tol", tol, 0.0, 1e-3)?;
    let (a, b) = match range {
        Some([a, b]) => (*a, *b),
        Some(_) => return Err(invalid("range takes exactly two values")),
        None => (0.1 * lambda_max, lambda_max),
    };
    let m = load_model(model)?;
    let spec = spectrum_for(cli, &m, lambda_max, tol, no_cache)?;
    let fit = weyl_fit(&spec, (a, b))?;
    let opts = QuadOptions::default();
    let vol = volume_sublevel(&m, &opts)?;
    let pred = weyl_prediction(&m, vol.value);
    let res = symplectic_residue(&m, &opts)?;
    let res_fiber = residue_fiber_quadrature(&m, &opts)?;
    let mut s = header(&m);
    s.num("range.lower", a)
        .num("range.upper", b)
        .int("eigenvalues_in_range", fit.count as i64)
        .num("exponent", fit.exponent)
        .num("fit_residual", fit.residual)
        .compare("prefactor", pred, fit.prefactor)
        .num("volume", vol.value)
        .num("volume.error_estimate", vol.error_estimate)
        .compare("residue", res, res_fiber);
    Ok(Output {
        summary: s,
        tables: vec![],
        passed: true,
    })
}

struct TraceArgs {
    lambdas: Vec<f64>,
    t_max: f64,
    cutoff: Cutoff,
    threshold: f64,
    delta: f64,
    samples: Option<f64>,
    tol: f64,
    no_cache: bool,
}

fn cmd_trace(cli: &Cli, model: &Path, args: TraceArgs) -> Result<Output, CliError> {
    let mut lambdas = args.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    if lambdas.len() < 3 {
        return Err(invalid("peak masses need at least three distinct cutoffs"));
    }
    for &l in &lambdas {
        check_range("Lambda", l, 0.0, 1e5)?;
    }
    check_range("Tmax", args.t_max, 0.0, 1e3)?;
    check_range("threshold", args.threshold, 1.0, 1e6)?;
    check_range("delta", args.delta, 0.0, 10.0)?;
    check_range("tol", args.tol, 0.0, 1e-3)?;
    let lmax = lambdas[lambdas.len() - 1];
    let grid = match args.samples {
        Some(n) => {
            check_range("samples", n, 0.0, 1e6)?;
            TimeGrid::new(-0.5, args.t_max + 0.5, n)
        }
        None => TimeGrid::for_cutoff(-0.5, args.t_max + 0.5, lmax),
    };
    let m = load_model(model)?;
    let spec = spectrum_for(cli, &m, lmax, args.tol, args.no_cache)?;
    let profiles = lambdas
        .iter()
        .map(|&l| trace_profile(&spec, args.cutoff, &grid, l))
        .collect::<Result<Vec<_>, _>>()?;
    let top = &profiles[profiles.len() - 1];
    let peaks: Vec<f64> = detect_singular_times(top, args.threshold)?
        .into_iter()
        .filter(|&t| t >= -1e-3 && t <= args.t_max)
        .collect();
    let search = find_periodic_orbits(&m, args.t_max, 1e-8)?;
    let periods = search.periods();

    let mut table = String::from("# t\tperiod\tmatch_error\tmass_re\tmass_im\tphase\tstability\tpredicted_re\tpredicted_im\n");
    let mut unmatched_peaks = 0;
    for &t in &peaks {
        if t.abs() <= 1e-3 {
            // the Weyl singularity at t = 0 grows with Λ and has no finite mass
            table.push_str(&format!("{}\t0\t{}\t-\t-\t-\t-\t-\t-\n", fmt17(t), fmt17(t.abs())));
            continue;
        }
        let nearest = periods
            .iter()
            .copied()
            .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()));
        let (period, err) = match nearest {
            Some(p) if (p - t).abs() <= 1e-3 => (fmt17(p), fmt17((p - t).abs())),
            _ => {
                unmatched_peaks += 1;
                ("-".to_string(), "-".to_string())
            }
        };
        let mut neighbours: Vec<f64> = peaks.iter().copied().filter(|&p| p != t).collect();
        neighbours.push(0.0);
        let mass = peak_mass_and_phase(&profiles, t, args.delta, &neighbours);
        let pred = nearest.filter(|p| (p - t).abs() <= 1e-3).map(|p| predicted_peak(&m, p));
        let (mre, mim, ph, st) = match &mass {
            Ok(pm) => (fmt17(pm.mass.re), fmt17(pm.mass.im), fmt17(pm.phase()), fmt17(pm.stability)),
            Err(e) => {
                log::warn!("no mass at t = {t}: {e}");
                ("-".into(), "-".into(), "-".into(), "-".into())
            }
        };
        let (pre, pim) = match pred {
            Some(Ok(z)) => (fmt17(z.re), fmt17(z.im)),
            Some(Err(TraceError::Degenerate { .. })) => ("degenerate".into(), "degenerate".into()),
            _ => ("-".into(), "-".into()),
        };
        table.push_str(&format!("{}\t{period}\t{err}\t{mre}\t{mim}\t{ph}\t{st}\t{pre}\t{pim}\n", fmt17(t)));
    }
    let missed: Vec<f64> = periods
        .iter()
        .copied()
        .filter(|p| !peaks.iter().any(|t| (t - p).abs() <= 1e-3))
        .collect();
    let mut s = header(&m);
    s.list("Lambda", &lambdas)
        .text("cutoff", args.cutoff.to_string())
        .num("T_max", args.t_max)
        .num("dt", grid.dt)
        .list("peaks", &peaks)
        .list("periods", &periods)
        .list("periods_without_peak", &missed)
        .int("peaks_without_period", unmatched_peaks);
    Ok(Output {
        summary: s,
        tables: vec![("peaks.tsv", table), ("profile.tsv", profile_table(top))],
        passed: true,
    })
}

fn cmd_report() -> Result<Output, CliError> {
    let report = run_desk_suite();
    for r in &report.results {
        println!("{}", r.line());
    }
    Ok(Output {
        summary: Summary::parse(&report.render()),
        tables: vec![],
        passed: report.passed(),
    })
}

fn cmd_cache(cli: &Cli, action: &CacheAction) -> Result<Output, CliError> {
    let cache = open_cache(cli);
    let mut s = Summary::new();
    s.text("cache_dir", cache.dir().display().to_string());
    let mut tables = vec![];
    match action {
        CacheAction::List => {
            let entries = cache.list()?;
            let mut t = String::from("# fingerprint\tlambda_max\tentries\tgenerator\n");
            for e in &entries {
                t.push_str(&format!("{}\t{}\t{}\t{}\n", e.fingerprint, fmt17(e.lambda_max), e.entries, e.generator));
            }
            s.int("entries", entries.len() as i64);
            tables.push(("cache.tsv", t));
        }
        CacheAction::Clear => {
            s.int("removed", cache.clear()? as i64);
        }
    }
    Ok(Output {
        summary: s,
        tables,
        passed: true,
    })
}

fn emit(out_dir: Option<&Path>, output: &Output) -> Result<(), CliError> {
    let summary = output.summary.render();
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            for (name, text) in &output.tables {
                let p = dir.join(name);
                fs::write(&p, text).map_err(|e| io_error(&p, e))?;
            }
            let p = dir.join("summary.txt");
            fs::write(&p, &summary).map_err(|e| io_error(&p, e))?;
            print!("{summary}");
        }
        None => {
            print!("{summary}");
            for (name, text) in &output.tables {
                println!("# table {name}");
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let output = match &cli.command {
        Command::Spectrum {
            model,
            lambda_max,
            tol,
            no_cache,
        } => cmd_spectrum(cli, model, *lambda_max, *tol, *no_cache)?,
        Command::Geodesics {
            model,
            t_max,
            tol,
            seed,
            samples,
        } => cmd_geodesics(model, *t_max, *tol, *seed, *samples)?,
        Command::Weyl {
            model,
            lambda_max,
            range,
            tol,
            no_cache,
        } => cmd_weyl(cli, model, *lambda_max, range.as_deref(), *tol, *no_cache)?,
        Command::Trace {
            model,
            lambdas,
            t_max,
            cutoff,
            threshold,
            delta,
            samples,
            tol,
            no_cache,
        } => cmd_trace(
            cli,
            model,
            TraceArgs {
                lambdas: lambdas.clone(),
                t_max: *t_max,
                cutoff: match cutoff {
                    CutoffArg::Gaussian => Cutoff::Gaussian,
                    CutoffArg::Fejer => Cutoff::Fejer,
                },
                threshold: *threshold,
                delta: *delta,
                samples: *samples,
                tol: *tol,
                no_cache: *no_cache,
            },
        )?,
        Command::Report { suite: Suite::Desk } => cmd_report()?,
        Command::Cache { action } => cmd_cache(cli, action)?,
    };
    emit(cli.out.as_deref(), &output)?;
    Ok(output.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            let mut s = Summary::new();
            s.text("error.kind", e.kind).text("error.message", e.message.replace('\n', " "));
            eprint!("{}", s.render());
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
