//! Command-line front end. Exit codes: 0 success, 1 a check failed,
//! 2 invalid input.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{read_config_file, RunConfig, SuspensionExample};
use crate::error::{Error, Result};
use crate::lamination::{
    de_bruijn_seed, dense_leaf_search, endpoint_seeds, indecomposability_verdict, visits_csv_rows,
    CantorSystem, DenseLeafVerdict, IndecomposabilityVerdict, LeafItinerary, VISITS_CSV_HEADER,
};
use crate::leaf::{density_statistic, fraction_near, trace_leaf, TraceOptions};
use crate::pillowcase::{periodic_census, verify_lattes, PeriodicCensus};
use crate::pipeline::{check_surgery, run_pipeline, write_leaf_csv};
use crate::repeller::{
    compute_basins, invariance_check, k_candidate_points, render_ppm, write_lines,
    write_raster_csv, Palette,
};
use crate::surgery::{PerturbedMap, SurgeryReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lattes",
    version,
    about = "Lattès maps of the sphere, DA surgery and the repeller it leaves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact critical, branch and postcritical data of the Lattès map.
    VerifyLattes(Flags),
    /// Fixed-point counts of the iterates and their growth rate.
    CountPeriodic(Flags),
    /// Attractors and saddles created by the surgery.
    SurgeryReport(Flags),
    /// Basin raster as PPM and CSV.
    RenderBasins(Flags),
    /// Complete-invariance test of the sampled repeller.
    InvarianceCheck(Flags),
    /// Grow a leaf through the saddle and measure its density in the repeller.
    TraceLeaf(Flags),
    /// Dense-leaf search in a symbolic suspension.
    Suspension(Flags),
    /// Every stage end to end, with a pass/fail summary.
    Pipeline(Flags),
}

/// Flags shared by every command; each has a config-file key of the same name.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// File of key=value lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Matrix entries a,b,c,d (row-major).
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Surgery radius; 0 disables the surgery.
    #[arg(long)]
    pub r: Option<String>,
    /// Attracting multiplier created by the surgery.
    #[arg(long)]
    pub mu: Option<String>,
    /// Raster size WxH.
    #[arg(long)]
    pub size: Option<String>,
    #[arg(long)]
    pub max_iter: Option<String>,
    /// Radius of the attractor balls.
    #[arg(long)]
    pub eps_attract: Option<String>,
    /// Invariance tolerance (default: two pixel widths).
    #[arg(long)]
    pub eps: Option<String>,
    /// Tolerance of the leaf density statistic.
    #[arg(long)]
    pub eps_density: Option<String>,
    /// Target arc length of the traced leaf.
    #[arg(long)]
    pub length: Option<String>,
    /// Leaf kind: unstable or stable.
    #[arg(long)]
    pub leaf: Option<String>,
    /// Number of invariance samples.
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Largest iterate in the periodic census (at most 8).
    #[arg(long)]
    pub n_max: Option<String>,
    /// Suspension example: shift or h.
    #[arg(long)]
    pub example: Option<String>,
    /// Cylinder depth of the dense-leaf search.
    #[arg(long)]
    pub depth: Option<String>,
    /// Step horizon of the dense-leaf search.
    #[arg(long)]
    pub horizon: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
}

impl Flags {
    fn given(&self) -> Vec<(&'static str, &String)> {
        [
            ("matrix", &self.matrix),
            ("r", &self.r),
            ("mu", &self.mu),
            ("size", &self.size),
            ("max-iter", &self.max_iter),
            ("eps-attract", &self.eps_attract),
            ("eps", &self.eps),
            ("eps-density", &self.eps_density),
            ("length", &self.length),
            ("leaf", &self.leaf),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("n-max", &self.n_max),
            ("example", &self.example),
            ("depth", &self.depth),
            ("horizon", &self.horizon),
            ("out", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }

    /// Config file entries overlaid with the flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut entries = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (k, v) in self.given() {
            entries.insert(k.to_string(), v.clone());
        }
        RunConfig::from_entries(&entries)
    }
}

/// Exit code for an error: input problems are 2, numerical failures 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SaddleNotFound { .. }
        | Error::NewtonDiverged { .. }
        | Error::SegmentCollapse(_)
        | Error::InsufficientDepth(_) => EXIT_CHECK_FAILED,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a command; `Ok(false)` means it ran but a check failed.
pub fn run(command: &Command) -> Result<bool> {
    let (flags, f): (&Flags, fn(&RunConfig) -> Result<bool>) = match command {
        Command::VerifyLattes(fl) => (fl, cmd_verify_lattes),
        Command::CountPeriodic(fl) => (fl, cmd_count_periodic),
        Command::SurgeryReport(fl) => (fl, cmd_surgery_report),
        Command::RenderBasins(fl) => (fl, cmd_render_basins),
        Command::InvarianceCheck(fl) => (fl, cmd_invariance_check),
        Command::TraceLeaf(fl) => (fl, cmd_trace_leaf),
        Command::Suspension(fl) => (fl, cmd_suspension),
        Command::Pipeline(fl) => (fl, cmd_pipeline),
    };
    f(&flags.resolve()?)
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok(&cfg.out)
}

/// Writes `cfg.out/name` with the config echo on top and prints it.
fn write_report(cfg: &RunConfig, name: &str, body: &str) -> Result<()> {
    let text = format!("{}{body}", cfg.echo());
    print!("{text}");
    let path = cfg.out.join(name);
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn perturbed(cfg: &RunConfig) -> Result<PerturbedMap> {
    let p = PerturbedMap::new(cfg.matrix.clone(), cfg.profile()?)?;
    if p.attractors().is_empty() {
        return Err(Error::InvalidProfile(
            "this command needs the surgery on (r > 0)".into(),
        ));
    }
    Ok(p)
}

pub fn cmd_verify_lattes(cfg: &RunConfig) -> Result<bool> {
    let out = prepare_out(cfg)?;
    let report = verify_lattes(&cfg.matrix)?;
    let rows = report
        .flags()
        .into_iter()
        .map(|(name, ok)| format!("{name},{ok}"));
    write_lines(&out.join("verify_lattes.csv"), "check,pass", rows)?;
    let passed = report.all_pass();
    write_report(
        cfg,
        "verify_lattes.txt",
        &format!("{report}verdict: {}\n", verdict(passed)),
    )?;
    Ok(passed)
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_count_periodic(cfg: &RunConfig) -> Result<bool> {
    let out = prepare_out(cfg)?;
    let censuses = (1..=cfg.n_max)
        .map(|n| periodic_census(&cfg.matrix, n))
        .collect::<Result<Vec<_>>>()?;
    write_lines(
        &out.join("periodic_census.csv"),
        PeriodicCensus::CSV_HEADER,
        censuses.iter().map(PeriodicCensus::csv_row),
    )?;
    let log_d = crate::lattice::eigenvalue_moduli(&cfg.matrix)
        .iter()
        .product::<f64>()
        .ln();
    let min_rate = censuses
        .iter()
        .map(PeriodicCensus::log_rate)
        .fold(f64::INFINITY, f64::min);
    let passed = min_rate >= log_d - 1e-9;
    let mut body = format!("{}\n", PeriodicCensus::CSV_HEADER);
    for c in &censuses {
        body.push_str(&c.csv_row());
        body.push('\n');
    }
    body.push_str(&format!(
        "min (1/n) log N_n = {min_rate:.9}, log|det| = {log_d:.9}: {}\n",
        verdict(passed)
    ));
    write_report(cfg, "periodic_census.txt", &body)?;
    Ok(passed)
}

pub fn cmd_surgery_report(cfg: &RunConfig) -> Result<bool> {
    let out = prepare_out(cfg)?;
    let p = perturbed(cfg)?;
    let report = p.find_saddles()?;
    write_lines(
        &out.join("surgery.csv"),
        SurgeryReport::CSV_HEADER,
        report.csv_rows().into_iter(),
    )?;
    let check = check_surgery(&p, &report, cfg.seed);
    let mut body = format!("saddle offset along e_u: {:.12}\n", report.offset);
    body.push_str(&format!("{}\n", SurgeryReport::CSV_HEADER));
    for row in report.csv_rows() {
        body.push_str(&row);
        body.push('\n');
    }
    body.push_str(&format!("{check}\n"));
    write_report(cfg, "surgery_report.txt", &body)?;
    Ok(check.passed)
}

pub fn cmd_render_basins(cfg: &RunConfig) -> Result<bool> {
    let out = prepare_out(cfg)?;
    let p = perturbed(cfg)?;
    let grid = compute_basins(&p, cfg.width, cfg.height, cfg.max_iter, cfg.eps_attract)?;
    render_ppm(&grid, &Palette::default(), out.join("basins.ppm"))?;
    write_raster_csv(&grid, out.join("basins.csv"))?;
    let c = grid.counts();
    let sym = grid.symmetric_agreement();
    let passed = c.b1 > 0 && c.b2 > 0 && c.k_candidate > 0 && sym >= 0.999;
    let body = format!(
        "B1 {}\nB2 {}\nK_candidate {}\nundecided {}\nsymmetric agreement {sym:.6}\nverdict: {}\n",
        c.b1,
        c.b2,
        c.k_candidate,
        c.undecided,
        verdict(passed)
    );
    write_report(cfg, "render_basins.txt", &body)?;
    Ok(passed)
}

pub fn cmd_invariance_check(cfg: &RunConfig) -> Result<bool> {
    let out = prepare_out(cfg)?;
    let p = perturbed(cfg)?;
    let grid = compute_basins(&p, cfg.width, cfg.height, cfg.max_iter, cfg.eps_attract)?;
    let kset = k_candidate_points(&grid);
    let inv = invariance_check(&kset, &p, cfg.invariance_eps(), cfg.samples, cfg.seed)?;
    let rows = inv.violators.iter().map(|v| {
        let x = v.point.rep();
        format!(
            "{},{},{},{}",
            x.x,
            x.y,
            v.forward.is_some(),
            v.backward.iter().all(Option::is_some)
        )
    });
    write_lines(
        &out.join("invariance_violators.csv"),
        "x1,x2,forward_ok,backward_ok",
        rows,
    )?;
    let passed = inv.passes(0.99);
    let body = format!(
        "K sample size {}\neps {}\nsamples {}\nforward pass rate {:.4}\nbackward pass rate {:.4}\nviolators {}\nverdict: {}\n",
        kset.len(),
        inv.eps,
        inv.samples,
        inv.forward_rate(),
        inv.backward_rate(),
        inv.violators.len(),
        verdict(passed)
    );
    write_report(cfg, "invariance.txt", &body)?;
    Ok(passed)
}

pub fn cmd_trace_leaf(cfg: &RunConfig) -> Result<bool> {
    let out = prepare_out(cfg)?;
    let p = perturbed(cfg)?;
    let report = p.find_saddles()?;
    let grid = compute_basins(&p, cfg.width, cfg.height, cfg.max_iter, cfg.eps_attract)?;
    let kset = k_candidate_points(&grid);
    if kset.is_empty() {
        return Err(Error::Input(
            "the raster has no K_candidate pixels to compare against".into(),
        ));
    }
    let start = report.saddles[0].lift;
    let trace = trace_leaf(&p, start, cfg.leaf, cfg.length, &TraceOptions::default())?;
    write_leaf_csv(&trace, &out.join("leaf.csv"))?;
    let density = density_statistic(&trace, &kset, cfg.eps_density);
    let near = fraction_near(&trace, &kset, 3.0 / cfg.width as f64);
    let passed = density >= 0.95;
    let body = format!(
        "seed saddle ({}, {})\nleaf {}\narc length {:.6}\nvertices {}\ngenerations {}\nmax gap {:.3e}\ndensity at eps {} {:.4}\nvertices within 3 pixel widths of K_candidate {:.4}\nverdict: {}\n",
        start.x,
        start.y,
        trace.kind.as_str(),
        trace.arc_length(),
        trace.points.len(),
        trace.generations,
        trace.max_gap(),
        cfg.eps_density,
        density,
        near,
        verdict(passed)
    );
    write_report(cfg, "trace_leaf.txt", &body)?;
    Ok(passed)
}

pub fn cmd_suspension(cfg: &RunConfig) -> Result<bool> {
    let out = prepare_out(cfg)?;
    let (system, seeds, seed_depth) = match cfg.example {
        SuspensionExample::Shift => (
            CantorSystem::shift(),
            vec![de_bruijn_seed(&[0, 1], cfg.depth)],
            None,
        ),
        SuspensionExample::H => {
            let d = cfg.depth.clamp(8, 12);
            (CantorSystem::h(), endpoint_seeds(&[0, 2], d), Some(d))
        }
    };
    let verdict_ = indecomposability_verdict(&system, cfg.depth, cfg.horizon, &seeds, seed_depth)?;
    // Visit counts are reported for the witness, or else the orbit reaching the most cylinders.
    let shown = match dense_leaf_search(&system, cfg.depth, cfg.horizon, &seeds)? {
        DenseLeafVerdict::Found { seed_index, .. } => seed_index,
        DenseLeafVerdict::NotFound { best_seed, .. } => best_seed,
    };
    let itinerary = LeafItinerary::record(&system, &seeds[shown], cfg.depth, cfg.horizon)?;
    write_lines(
        &out.join("suspension_visits.csv"),
        VISITS_CSV_HEADER,
        visits_csv_rows(&itinerary.visit_counts(&system.alphabet)).into_iter(),
    )?;
    let expected = match cfg.example {
        SuspensionExample::Shift => matches!(
            verdict_,
            IndecomposabilityVerdict::ConsistentWithIndecomposable { .. }
        ),
        SuspensionExample::H => matches!(
            verdict_,
            IndecomposabilityVerdict::NoDenseLeafDetected { .. }
        ),
    };
    let body = format!(
        "{}\nvisit counts from seed {} over {} steps: {} of {} cylinders\n",
        verdict_,
        seeds[shown],
        cfg.horizon,
        itinerary.distinct_cylinders(),
        1usize << cfg.depth
    );
    write_report(cfg, "suspension.txt", &body)?;
    Ok(expected)
}

pub fn cmd_pipeline(cfg: &RunConfig) -> Result<bool> {
    let outcome = run_pipeline(cfg)?;
    print!("{}", outcome.summary);
    Ok(outcome.passed())
}
