//! `ghhjb`: generators, certifiers, solvers and stability runs from the shell.
//!
//! Exit codes: 0 success, 1 a checked invariant failed, 2 bad input or usage.
//! Diagnostics go to stderr; data goes to files or stdout.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ghhjb_core::format::{
    read_graph, read_map, read_measure, read_potential, read_space, write_potential, write_space,
};
use ghhjb_core::harness::{
    build_circle_family, build_interval_family, build_sierpinski_family, check_assumptions,
    emit_report, run_hopflax_stability, run_kantorovich_stability, AssumptionReport,
    ConvergenceReport, RefinementFamily, ReportFormat,
};
use ghhjb_core::hopf_lax::{default_slope_radius, hj_residual, hopf_lax, Potential, DEFAULT_DT};
use ghhjb_core::kantorovich::{solve_dual, w2_exact, Measure};
use ghhjb_core::maps::{certify, epsilon_inverse, InverseBounds};
use ghhjb_core::metric::{
    apsp_from_graph, make_circle, make_interval, make_sierpinski, FiniteMetricSpace, SpaceRef,
    DEFAULT_TOL_METRIC,
};
use ghhjb_core::Error;

#[derive(Parser)]
#[command(name = "ghhjb", version, about = "Hopf-Lax and optimal-transport stability on finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Circle,
    Interval,
    Sierpinski,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitialData {
    /// sin of the angle (circle), of x - L/2 (interval) or of the first coordinate (gasket)
    Sin,
    /// |angle| on (-pi, pi], |x - L/2|, or |x - 1/2| on the gasket
    Abs,
    /// distance to point 0
    Dist0,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated space as a `metric-space v1` file.
    ///
    /// circle: PARAM points on a circle of circumference 2*pi.
    /// interval: PARAM equally spaced points on [0, LENGTH].
    /// sierpinski: gasket graph of level PARAM (at most 8), diameter 1.
    GenSpace {
        #[arg(long, value_enum)]
        family: Family,
        /// Point count (circle, interval) or gasket level
        #[arg(long)]
        param: usize,
        /// Interval length
        #[arg(long, default_value_t = 2.0)]
        length: f64,
        /// Output file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the metric axioms of a `metric-space v1` or `graph v1` file.
    ///
    /// Exits 1 and names the violated axiom when the matrix is not a metric.
    Validate {
        file: PathBuf,
        /// Absolute slack allowed in the triangle inequality
        #[arg(long, default_value_t = DEFAULT_TOL_METRIC)]
        tol: f64,
    },
    /// Print distortion, codensity and epsilon of a map, with witnesses,
    /// and the bounds of its nearest-image inverse.
    CertifyMap {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        map: PathBuf,
    },
    /// Apply the Hopf-Lax semigroup: Q_t g(x) = min_y g(y) + d(x,y)^2 / (2t).
    Hopflax {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        /// Time t >= 0 (t = 0 returns g)
        #[arg(long)]
        t: f64,
        /// Output potential file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual of d_t u + |grad u|^2 / 2 = 0 for u = Q_t g, by central
    /// differences in time and a two-sided discrete slope.
    Residual {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        potential: PathBuf,
        /// Time t > dt
        #[arg(long)]
        t: f64,
        /// Time step of the central difference
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Slope radius in distance units [default: 3x median nearest-neighbour distance]
        #[arg(long)]
        radius: Option<f64>,
        /// Write the residual as a potential file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact quadratic-cost transport: prints W2, W2^2/2, the dual value and the gap.
    Transport {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Write the optimal coupling (`plan v1 N K`, then `i j mass` lines)
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// Write the d^2/2-convex dual maximizer as a potential file
        #[arg(long)]
        dual_out: Option<PathBuf>,
    },
    /// Uniform convergence of Hopf-Lax solutions along a refinement family.
    ///
    /// Levels are point counts (circle, interval) or gasket levels; every
    /// level must embed in the reference space. Exits 1 if an asserted
    /// check fails.
    ConvergeHopflax {
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated level parameters, coarse to fine
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        /// Reference (limit) space parameter
        #[arg(long = "ref")]
        reference: usize,
        /// Interval length
        #[arg(long, default_value_t = 2.0)]
        length: f64,
        /// Initial datum on the limit space
        #[arg(long, value_enum, default_value_t = InitialData::Sin)]
        g: InitialData,
        /// Time t > 0
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Report file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Convergence of dual Kantorovich maximizers along a refinement family.
    ///
    /// Measure specs: `uniform`, `delta:<index>` (index into the reference
    /// space) or `file:<path>` (`measure v1` file on the reference space).
    /// Exits 1 if an asserted check fails.
    ConvergeKantorovich {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long = "ref")]
        reference: usize,
        #[arg(long, default_value_t = 2.0)]
        length: f64,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        /// Normalization point (index into the reference space)
        #[arg(long, default_value_t = 0)]
        z: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Invariant(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidMetric(_) | Error::BoundViolated(_) | Error::Solver { .. } => {
                Failure::Invariant(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Input(e.to_string())),
    }
}

fn load_space(path: &Path) -> Result<SpaceRef, Failure> {
    let text = read_text(path)?;
    let space = if text.trim_start().starts_with("graph") {
        apsp_from_graph(&read_graph(&text)?)?
    } else {
        read_space(&text, DEFAULT_TOL_METRIC)?
    };
    Ok(space.into_ref())
}

fn generate(family: Family, param: usize, length: f64) -> Result<FiniteMetricSpace, Failure> {
    Ok(match family {
        Family::Circle => make_circle(param)?,
        Family::Interval => make_interval(param, length)?,
        Family::Sierpinski => {
            let level = u32::try_from(param).map_err(|_| Failure::Input(format!("level {param}")))?;
            make_sierpinski(level)?
        }
    })
}

fn build_family(family: Family, levels: &[usize], reference: usize, length: f64) -> Result<RefinementFamily, Failure> {
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| Failure::Input(format!("level {v}")));
    Ok(match family {
        Family::Circle => build_circle_family(levels, reference)?,
        Family::Interval => build_interval_family(levels, reference, length)?,
        Family::Sierpinski => {
            let lv = levels.iter().map(|&l| to_u32(l)).collect::<Result<Vec<_>, _>>()?;
            build_sierpinski_family(&lv, to_u32(reference)?)?
        }
    })
}

fn initial_data(family: Family, which: InitialData, space: &SpaceRef, length: f64) -> Result<Potential, Failure> {
    let c = space.coords().map(|c| c.to_vec()).unwrap_or_default();
    let x = |i: usize| match family {
        Family::Circle => c[i][1].atan2(c[i][0]),
        Family::Interval => c[i][0] - 0.5 * length,
        Family::Sierpinski => c[i][0] - 0.5,
    };
    let g = match (which, family) {
        (InitialData::Dist0, _) => Potential::from_fn(space.clone(), |i| space.d(i, 0))?,
        (InitialData::Sin, Family::Circle) => Potential::from_fn(space.clone(), |i| c[i][1])?,
        (InitialData::Sin, _) => Potential::from_fn(space.clone(), |i| x(i).sin())?,
        (InitialData::Abs, _) => Potential::from_fn(space.clone(), |i| x(i).abs())?,
    };
    Ok(g)
}

fn parse_measure(spec: &str, space: &SpaceRef) -> Result<Measure, Failure> {
    if spec == "uniform" {
        return Ok(Measure::uniform(space.clone()));
    }
    if let Some(i) = spec.strip_prefix("delta:") {
        let i: usize = i.parse().map_err(|_| Failure::Input(format!("bad delta index in {spec:?}")))?;
        return Ok(Measure::delta(space.clone(), i)?);
    }
    if let Some(p) = spec.strip_prefix("file:") {
        return Ok(read_measure(&read_text(Path::new(p))?, space.clone())?);
    }
    Err(Failure::Input(format!(
        "measure spec {spec:?}: expected uniform, delta:<index> or file:<path>"
    )))
}

fn finish_report(report: &ConvergenceReport, format: Format, out: Option<&Path>) -> Outcome {
    let fmt = match format {
        Format::Csv => ReportFormat::Csv,
        Format::Table => ReportFormat::Table,
    };
    emit(out, &emit_report(report, fmt))?;
    for c in &report.checks {
        let tag = match (c.asserted, c.passed) {
            (true, true) => "pass",
            (true, false) => "FAIL",
            (false, true) => "ok (reported)",
            (false, false) => "note (reported, not asserted)",
        };
        eprintln!("{tag}: {}: {}", c.name, c.detail);
    }
    if let Some(s) = report.loglog_slope {
        eprintln!("log-log slope of sup_error against epsilon: {s:.4}");
    }
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failed_checks().iter().map(|c| c.name.as_str()).collect();
        Err(Failure::Invariant(format!("failed checks: {}", names.join(", "))))
    }
}

fn print_assumptions(a: &AssumptionReport) {
    eprintln!(
        "assumptions: H monotone {}, level-independent {}, g^n gaps decreasing {}",
        a.s2_monotone, a.s3_n_independent, a.s5_decreasing
    );
    for l in &a.levels {
        eprintln!(
            "  level {}: Lip(g^n) = {:.6} ({}), sup|Q_t g^n| = {:.6} ({}), |g^n o f' - g| = {:.3e} ({})",
            l.param, l.lipschitz, l.lipschitz_ok, l.s4_sup, l.s4_ok, l.s5_gap, l.s5_ok
        );
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::GenSpace { family, param, length, out } => {
            let s = generate(family, param, length)?;
            emit(out.as_deref(), &write_space(&s))
        }
        Command::Validate { file, tol } => {
            let text = read_text(&file)?;
            if text.trim_start().starts_with("graph") {
                let s = apsp_from_graph(&read_graph(&text)?)?;
                println!("graph with {} vertices: shortest-path metric is valid", s.len());
                return Ok(());
            }
            match read_space(&text, tol) {
                Ok(s) => {
                    println!("{} points: metric axioms hold (tol {tol})", s.len());
                    Ok(())
                }
                Err(Error::InvalidMetric(msg)) => Err(Failure::Invariant(msg)),
                Err(e) => Err(e.into()),
            }
        }
        Command::CertifyMap { source, target, map } => {
            let s = load_space(&source)?;
            let t = load_space(&target)?;
            let f = read_map(&read_text(&map)?, s, t)?;
            let c = certify(&f);
            println!("distortion {}", c.distortion);
            println!("codensity {}", c.codensity);
            println!("epsilon {}", c.epsilon);
            println!("distortion witness {} {}", c.worst_pair.0, c.worst_pair.1);
            println!("codensity witness {}", c.worst_point);
            let inv = epsilon_inverse(&f)?;
            let b = InverseBounds::measure(&f, &inv);
            println!("inverse epsilon {}", b.inverse.epsilon);
            println!("source roundtrip {}", b.source_roundtrip);
            println!("target roundtrip {}", b.target_roundtrip);
            if b.holds(ghhjb_core::maps::bound_slack(&f)) {
                Ok(())
            } else {
                Err(Failure::Invariant("inverse bounds violated".into()))
            }
        }
        Command::Hopflax { space, potential, t, out } => {
            let s = load_space(&space)?;
            let g = read_potential(&read_text(&potential)?, s)?;
            emit(out.as_deref(), &write_potential(&hopf_lax(&g, t)?))
        }
        Command::Residual { space, potential, t, dt, radius, out } => {
            let s = load_space(&space)?;
            let g = read_potential(&read_text(&potential)?, s.clone())?;
            let radius = radius.unwrap_or_else(|| default_slope_radius(&s));
            let r = hj_residual(&g, t, dt, radius)?;
            let (argmax, max) = r
                .values()
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            println!("radius {radius}");
            println!("max |residual| {max} at {argmax}");
            match out {
                Some(p) => emit(Some(&p), &write_potential(&r)),
                None => Ok(()),
            }
        }
        Command::Transport { space, mu, nu, plan_out, dual_out } => {
            let s = load_space(&space)?;
            let mu = read_measure(&read_text(&mu)?, s.clone())?;
            let nu = read_measure(&read_text(&nu)?, s.clone())?;
            let (w2, plan) = w2_exact(&mu, &nu)?;
            let dual = solve_dual(&mu, &nu)?;
            println!("W2 {w2}");
            println!("half W2^2 {}", 0.5 * w2 * w2);
            println!("dual value {}", dual.dual_value);
            println!("gap {}", dual.duality_gap);
            if let Some(p) = plan_out {
                let n = s.len();
                let cells: Vec<String> = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| plan.at(i, j) > 0.0)
                    .map(|(i, j)| format!("{i} {j} {}", plan.at(i, j)))
                    .collect();
                let text = format!("plan v1 {n} {}\n{}\n", cells.len(), cells.join("\n"));
                emit(Some(&p), &text)?;
            }
            if let Some(p) = dual_out {
                emit(Some(&p), &write_potential(&dual.phi))?;
            }
            Ok(())
        }
        Command::ConvergeHopflax { family, levels, reference, length, g, t, out, format } => {
            let fam = build_family(family, &levels, reference, length)?;
            let g = initial_data(family, g, &fam.limit, length)?;
            let assumptions = check_assumptions(&fam, &g, 1.0)?;
            print_assumptions(&assumptions);
            let report = run_hopflax_stability(&fam, &g, t)?;
            finish_report(&report, format, out.as_deref())?;
            if assumptions.passed() {
                Ok(())
            } else {
                Err(Failure::Invariant("a stability assumption failed".into()))
            }
        }
        Command::ConvergeKantorovich { family, levels, reference, length, mu, nu, z, out, format } => {
            let fam = build_family(family, &levels, reference, length)?;
            let mu = parse_measure(&mu, &fam.limit)?;
            let nu = parse_measure(&nu, &fam.limit)?;
            let report = run_kantorovich_stability(&fam, &mu, &nu, z)?;
            if let Some(u) = report.maximizer_unique {
                eprintln!("limit maximizer unique up to constants: {u}");
            }
            finish_report(&report, format, out.as_deref())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("GHHJB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::Input(format!("GHHJB_THREADS={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
