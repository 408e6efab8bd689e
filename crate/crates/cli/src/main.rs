//! Command line front end for the excursion-to-dimension pipeline.
//!
//! Subcommands mirror the library stages: `sample` and `example51` write
//! excursions, `tree`, `map`, `stars`, and `assouad` consume them, and
//! `obstruct` consumes star reports. `counterexample` runs the built-in
//! non-doubling space without any input file.
//!
//! Every run is a pure function of the flags and input bytes. Sampling is
//! counter-mode in `--seed`, parallel reductions have canonical orders,
//! and files are written with fixed formatting, so reruns produce
//! byte-identical artifacts regardless of `--threads`.
//!
//! Exit codes: 1 for bad usage, 2 for unreadable or malformed input
//! files, 3 for internal failures.

mod plot;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use starry::dimension::{
    assouad_estimate, assouad_estimate_with_centers, doubling_probe, qs_obstruction,
    CounterexampleSpace, QsProfile,
};
use starry::excursion::EXAMPLE51_DEFAULT_TERMS;
use starry::io::{
    read_excursion_csv, read_star_reports, write_assouad_csv, write_excursion_csv, write_map_csv,
    write_star_reports, write_tree_pairs_csv, write_verdict_json, StarReport,
};
use starry::snake::{check_bounds, map_metric_with_required, DEFAULT_SUBSAMPLE};
use starry::stars::{default_window_lengths, map_star_from_window, map_star_required_indices};
use starry::{
    brownian_excursion, example51_grid, map_metric, scan_windows, simulate_labels,
    star_from_window, zigzag_grid, Error, ExcursionGrid, Result, SampleStrategy, TreeMetric,
    ZigZagParams,
};

#[derive(Parser)]
#[command(name = "starry", version, about = "Excursion, tree, map, star, and dimension pipeline")]
struct Cli {
    /// Base seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Grid cells for sampled excursions (power of two, at least 16).
    #[arg(long, global = true, default_value_t = 65536)]
    grid: usize,

    /// Output file. Every subcommand writes exactly one artifact here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads, 0 for the library default. Affects speed only,
    /// never results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample an excursion on the grid and write it as t,f CSV.
    Sample {
        /// "brownian" or "zigzag:N".
        #[arg(long, default_value = "brownian", value_parser = parse_kind)]
        kind: SampleKind,
        /// Also render an SVG plot to this path.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Write the pinned slow-stairs excursion as t,f CSV.
    Example51 {
        /// Staircase truncation depth.
        #[arg(long, default_value_t = EXAMPLE51_DEFAULT_TERMS)]
        terms: u32,
        /// Also render an SVG plot to this path.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Tree pseudometric distances over a subsample, as i,j,d CSV.
    Tree {
        /// Excursion CSV, as written by `sample` or `example51`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Subsample size (uniform stride through the grid).
        #[arg(long, default_value_t = 64)]
        subset: usize,
        /// Also print the number of tree leaves.
        #[arg(long)]
        leaves: bool,
    },
    /// Label the tree and close the cyclic label metric, as
    /// i,j,d_circ,d_map CSV.
    Map {
        /// Excursion CSV, as written by `sample` or `example51`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Subsample size.
        #[arg(long, default_value_t = DEFAULT_SUBSAMPLE)]
        subset: usize,
        /// How subsample indices are chosen.
        #[arg(long, value_enum, default_value_t = Strategy::Stride)]
        strategy: Strategy,
    },
    /// Scan for zig-zag windows and certify stars, as a JSON report list.
    Stars {
        /// Excursion CSV, as written by `sample` or `example51`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Smallest zig-zag order to scan.
        #[arg(long, default_value_t = 6)]
        n_min: u32,
        /// Largest zig-zag order to scan.
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        /// Which metric the certificates live in.
        #[arg(long, value_enum, default_value_t = MetricChoice::Tree)]
        metric: MetricChoice,
        /// Map subsample size (map metric only).
        #[arg(long, default_value_t = DEFAULT_SUBSAMPLE)]
        subset: usize,
        /// Also render an SVG plot with the first star marked.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Estimate the Assouad exponent of the tree metric, as CSV.
    Assouad {
        /// Excursion CSV, as written by `sample` or `example51`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Subsample size.
        #[arg(long, default_value_t = DEFAULT_SUBSAMPLE)]
        subset: usize,
    },
    /// Dimension diagnostics of the built-in non-doubling space, as CSV.
    Counterexample {
        /// Depth of the space; at least 19 so ten covering scales fit
        /// below the accumulation tail of the column anchors.
        #[arg(long, default_value_t = 24)]
        n_max: u32,
        /// Doubling-probe trials.
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
    },
    /// Test a star report against a quasisymmetric covering bound, as a
    /// JSON verdict.
    Obstruct {
        /// Star report JSON, as written by `stars`.
        #[arg(long)]
        star: PathBuf,
        /// Which report in the file.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// "linear" or "power:ALPHA".
        #[arg(long, default_value = "linear", value_parser = parse_psi)]
        psi: PsiSpec,
        /// Covering-bound constant.
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// Covering-bound exponent.
        #[arg(long, default_value_t = 2.0)]
        s: f64,
    },
}

#[derive(Clone, Debug)]
enum SampleKind {
    Brownian,
    ZigZag(u32),
}

fn parse_kind(s: &str) -> std::result::Result<SampleKind, String> {
    if s == "brownian" {
        return Ok(SampleKind::Brownian);
    }
    if let Some(rest) = s.strip_prefix("zigzag:") {
        let n: u32 = rest
            .parse()
            .map_err(|_| format!("bad zig-zag order {rest:?}"))?;
        if n == 0 {
            return Err("zig-zag order must be at least 1".to_string());
        }
        return Ok(SampleKind::ZigZag(n));
    }
    Err(format!(
        "unknown kind {s:?}, expected \"brownian\" or \"zigzag:N\""
    ))
}

#[derive(Clone, Debug)]
enum PsiSpec {
    Linear,
    /// Exponent validity is checked at use, not at parse.
    Power(f64),
}

fn parse_psi(s: &str) -> std::result::Result<PsiSpec, String> {
    if s == "linear" {
        return Ok(PsiSpec::Linear);
    }
    if let Some(rest) = s.strip_prefix("power:") {
        let alpha: f64 = rest
            .parse()
            .map_err(|_| format!("bad profile exponent {rest:?}"))?;
        return Ok(PsiSpec::Power(alpha));
    }
    Err(format!(
        "unknown profile {s:?}, expected \"linear\" or \"power:ALPHA\""
    ))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    Stride,
    Extremes,
}

impl From<Strategy> for SampleStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Stride => SampleStrategy::UniformStride,
            Strategy::Extremes => SampleStrategy::IncludeExtremes,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricChoice {
    Tree,
    Map,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; only real usage
            // errors take exit code 1.
            let code = i32::from(e.use_stderr());
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::InvalidInput(_) | Error::InvalidExcursion { .. } => 2,
            Error::Internal(_) => 3,
            _ => 1,
        });
    }
}

fn run(cli: Cli) -> Result<()> {
    if !cli.grid.is_power_of_two() || cli.grid < 16 {
        return Err(Error::InvalidArgument(format!(
            "--grid must be a power of two >= 16, got {}",
            cli.grid
        )));
    }
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    let out = cli.out.as_deref();

    match &cli.command {
        Cmd::Sample { kind, plot } => {
            let grid = match kind {
                SampleKind::Brownian => brownian_excursion(cli.grid, cli.seed)?,
                SampleKind::ZigZag(n) => zigzag_grid(ZigZagParams::new(*n)?, cli.grid)?,
            };
            let mut w = create_output(require_out(out)?)?;
            write_excursion_csv(&grid, &mut w).map_err(write_err)?;
            finish(w)?;
            if let Some(p) = plot {
                write_plot(p, &grid, None)?;
            }
        }
        Cmd::Example51 { terms, plot } => {
            let grid = example51_grid(*terms, cli.grid)?;
            let mut w = create_output(require_out(out)?)?;
            write_excursion_csv(&grid, &mut w).map_err(write_err)?;
            finish(w)?;
            if let Some(p) = plot {
                write_plot(p, &grid, None)?;
            }
        }
        Cmd::Tree {
            input,
            subset,
            leaves,
        } => {
            let grid = read_excursion_csv(open_input(input)?)?;
            let tm = TreeMetric::build(grid);
            let idx = stride_subset(tm.grid().n_cells(), *subset)?;
            let mut w = create_output(require_out(out)?)?;
            write_tree_pairs_csv(&tm, &idx, &mut w).map_err(write_err)?;
            finish(w)?;
            if *leaves {
                println!("leaves: {}", tm.leaves().len());
            }
        }
        Cmd::Map {
            input,
            subset,
            strategy,
        } => {
            let grid = read_excursion_csv(open_input(input)?)?;
            let tm = TreeMetric::build(grid);
            let sl = simulate_labels(&tm, cli.seed);
            let mm = map_metric(&sl, *subset, (*strategy).into())?;
            let mut w = create_output(require_out(out)?)?;
            write_map_csv(&mm, &mut w).map_err(write_err)?;
            finish(w)?;
            let b = check_bounds(&sl, &tm, &mm)?;
            println!(
                "pairs: {}  upper violations: {}  lower margins: ancestor {:.3e}, lipschitz {:.3e}",
                b.pairs, b.upper_violations, b.min_ancestor_margin, b.min_lipschitz_margin
            );
        }
        Cmd::Stars {
            input,
            n_min,
            n_max,
            metric,
            subset,
            plot,
        } => {
            let reports = run_stars(&cli, input, *n_min, *n_max, *metric, *subset)?;
            let mut w = create_output(require_out(out)?)?;
            write_star_reports(&reports, &mut w).map_err(write_err)?;
            finish(w)?;
            println!("stars: {}", reports.len());
            if let Some(p) = plot {
                let grid = read_excursion_csv(open_input(input)?)?;
                write_plot(p, &grid, reports.first())?;
            }
        }
        Cmd::Assouad { input, subset } => {
            let grid = read_excursion_csv(open_input(input)?)?;
            let tm = TreeMetric::build(grid);
            let points = stride_subset(tm.grid().n_cells(), *subset)?;
            // Dyadic scale pairs with ratio 4; twelve of them span the
            // two decades the estimator requires.
            let pairs: Vec<(f64, f64)> =
                (0..12).map(|k| (2f64.powi(-k), 2f64.powi(-k - 2))).collect();
            let report = assouad_estimate(&points, &tm, &pairs)?;
            let mut w = create_output(require_out(out)?)?;
            write_assouad_csv(&report, &mut w).map_err(write_err)?;
            finish(w)?;
            println!(
                "alpha: {:.6}  diverging: {}",
                report.fitted_alpha, report.diverging
            );
        }
        Cmd::Counterexample { n_max, trials } => {
            if *n_max < 19 {
                return Err(Error::InvalidArgument(format!(
                    "--n-max must be at least 19 so ten scales clear the column tail, got {n_max}"
                )));
            }
            let space = CounterexampleSpace::new(*n_max)?;
            let ids = space.ids();
            // One pair per column scale, stopping a column short of the
            // truncation: the sup at scale 2^-n sits at the head of
            // column n + 1, so the deepest column has no successor to
            // witness further growth. Scales coarser than 2^-9 are
            // skipped because adjacent column anchors sit only about
            // 4/j^2 apart, so a wide ball at a deep anchor swallows a
            // whole stretch of columns and the count stops tracking the
            // column depth. Below 2^-9 even the tightest anchor gap at
            // the maximum truncation exceeds the ball radius, and every
            // ball isolates a single column. Centers anchor every
            // column head.
            let pairs: Vec<(f64, f64)> = (9..*n_max as i32)
                .map(|n| (2f64.powi(-n), 2f64.powi(-n - 1)))
                .collect();
            let centers: Vec<usize> = (2..=*n_max).filter_map(|n| space.id_of(n, 1)).collect();
            let report = assouad_estimate_with_centers(&ids, &space, &pairs, &centers)?;
            let mut w = create_output(require_out(out)?)?;
            write_assouad_csv(&report, &mut w).map_err(write_err)?;
            finish(w)?;
            let probe = doubling_probe(&ids, &space, *trials, cli.seed)?;
            println!(
                "alpha: {:.6}  diverging: {}  probe max: {probe}",
                report.fitted_alpha, report.diverging
            );
        }
        Cmd::Obstruct {
            star,
            index,
            psi,
            c,
            s,
        } => {
            let reports = read_star_reports(open_input(star)?)?;
            let report = reports.get(*index).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "star file holds {} reports, index {index} is out of range",
                    reports.len()
                ))
            })?;
            let cert = report.to_certificate()?;
            let profile = match psi {
                PsiSpec::Linear => QsProfile::Linear,
                PsiSpec::Power(alpha) => QsProfile::power(*alpha)?,
            };
            let verdict = qs_obstruction(&cert, &profile, *c, *s)?;
            let mut w = create_output(require_out(out)?)?;
            write_verdict_json(&verdict, &mut w).map_err(write_err)?;
            finish(w)?;
            println!(
                "{}: n = {} against threshold {:.6}",
                verdict.kind.as_str(),
                verdict.n,
                verdict.threshold
            );
        }
    }
    Ok(())
}

fn run_stars(
    cli: &Cli,
    input: &Path,
    n_min: u32,
    n_max: u32,
    metric: MetricChoice,
    subset: usize,
) -> Result<Vec<StarReport>> {
    let floor = match metric {
        MetricChoice::Tree => 6,
        MetricChoice::Map => 3,
    };
    if n_min < floor || n_min > n_max {
        return Err(Error::InvalidArgument(format!(
            "need {floor} <= n-min <= n-max for this metric, got {n_min}..{n_max}"
        )));
    }
    let grid = read_excursion_csv(open_input(input)?)?;
    let tm = TreeMetric::build(grid);
    let n_cells = tm.grid().n_cells();
    let labels = match metric {
        MetricChoice::Tree => None,
        MetricChoice::Map => Some(simulate_labels(&tm, cli.seed)),
    };

    let mut reports = Vec::new();
    for n in n_min..=n_max {
        let lengths = default_window_lengths(n, n_cells);
        if lengths.is_empty() {
            continue;
        }
        for wm in scan_windows(tm.grid(), n, &lengths)? {
            match &labels {
                None => {
                    if let Some(cert) = star_from_window(&tm, &wm)? {
                        reports.push(StarReport::build(&cert, n_cells, |i, j| tm.dist(i, j))?);
                    }
                }
                Some(sl) => {
                    let required = map_star_required_indices(tm.grid(), &wm)?;
                    if required.is_empty() {
                        continue;
                    }
                    // One subsample per window: the anchors of different
                    // windows rarely coexist within one budget.
                    let mm = map_metric_with_required(
                        sl,
                        subset,
                        SampleStrategy::UniformStride,
                        &required,
                    )?;
                    if let Some(cert) = map_star_from_window(tm.grid(), &mm, &wm)? {
                        reports.push(StarReport::build(&cert, n_cells, |i, j| {
                            mm.d_map_by_grid(i, j)
                        })?);
                    }
                }
            }
        }
    }
    Ok(reports)
}

/// Uniformly strided grid indices, `m` of them. Grid points are
/// `0 ..= n_cells`, so every index stays in range and `m <= n_cells`
/// keeps them distinct.
fn stride_subset(n_cells: usize, m: usize) -> Result<Vec<usize>> {
    if m < 2 || m > n_cells {
        return Err(Error::InvalidArgument(format!(
            "--subset must be between 2 and the cell count {n_cells}, got {m}"
        )));
    }
    Ok((0..m).map(|k| k * n_cells / m).collect())
}

fn require_out(out: Option<&Path>) -> Result<&Path> {
    out.ok_or_else(|| Error::InvalidArgument("--out is required".to_string()))
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

/// Failures on an already-open output are environmental, not usage.
fn write_err(e: std::io::Error) -> Error {
    Error::Internal(format!("write failed: {e}"))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(write_err)
}

fn write_plot(path: &Path, grid: &ExcursionGrid, star: Option<&StarReport>) -> Result<()> {
    let svg = plot::plot_excursion(grid, star);
    std::fs::write(path, svg)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}
