//! Command implementations behind the `mocha` binary.
//!
//! Each `run_*` function performs one subcommand and returns the process
//! exit code, writing its output to the handles it is given so tests can
//! capture and assert on it. Exit codes are stable:
//!
//! * 0 — success
//! * 1 — one or more self-test suites failed
//! * 2 — invalid usage, configuration, or mismatched dimensions
//! * 3 — file system or file format errors

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mocha_stereo::{
    colorize_disparity, evaluate, graph_to_dot, graph_to_json, mask_nonpositive, match_pair_with,
    read_pfm, read_pnm, run_selftest_with, write_pfm, write_pnm, DisparityMap, DumpOptions,
    GraphObserver, MochaError, MotifGraph, PipelineConfig, PnmImage, Tensor3, SUITE_NAMES,
};

/// Success.
pub const EXIT_OK: i32 = 0;
/// At least one self-test suite failed.
pub const EXIT_SUITE_FAILURE: i32 = 1;
/// Invalid usage, configuration, or mismatched dimensions.
pub const EXIT_USAGE: i32 = 2;
/// File system or file format errors.
pub const EXIT_IO: i32 = 3;

/// Environment variable consulted for the seed when neither the `--seed`
/// flag nor the config file provides one.
pub const SEED_ENV_VAR: &str = "MOCHA_SEED";

fn exit_code_for(err: &MochaError) -> i32 {
    match err {
        MochaError::Io(_) | MochaError::Format { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Arguments of the `match` subcommand, already parsed.
#[derive(Debug, Clone, Default)]
pub struct MatchArgs {
    pub left: PathBuf,
    pub right: PathBuf,
    pub out: PathBuf,
    /// JSON file with `PipelineConfig` fields; flags override its values.
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub iters: Option<usize>,
    /// Stage toggles of the form `name=on|off` with name one of `mcg`,
    /// `wavelet`, `remp`.
    pub toggles: Vec<String>,
    /// Worker thread count; never changes the outputs, only the speed.
    pub threads: Option<usize>,
    pub dump_motif_graphs: Option<PathBuf>,
    pub dump_iterations: Option<PathBuf>,
    pub viz: Option<PathBuf>,
}

/// Arguments of the `eval` subcommand.
#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub disp: PathBuf,
    pub gt: PathBuf,
    /// Bad-pixel thresholds in disparity units.
    pub thresholds: Vec<f64>,
    /// Treat nonpositive ground-truth values as missing.
    pub mask_nonpositive: bool,
}

/// Arguments of the `selftest` subcommand.
#[derive(Debug, Clone)]
pub struct SelftestArgs {
    pub trials: usize,
    /// Force the named suite to fail (negative control for the failure
    /// path); must be one of [`mocha_stereo::SUITE_NAMES`].
    pub inject_fault: Option<String>,
}

/// Collects motif graphs for one view and serializes them after the run:
/// one JSON line per graph, plus GraphViz DOT files for the first few.
struct GraphDump {
    view: &'static str,
    lines: Vec<String>,
    dots: Vec<(String, String)>,
    dot_limit: usize,
    seen: usize,
}

impl GraphDump {
    fn new(view: &'static str) -> Self {
        Self {
            view,
            lines: Vec::new(),
            dots: Vec::new(),
            dot_limit: 4,
            seen: 0,
        }
    }

    fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        let jsonl = self.lines.join("\n");
        let body = if jsonl.is_empty() { jsonl } else { jsonl + "\n" };
        fs::write(dir.join(format!("{}.jsonl", self.view)), body)?;
        for (name, dot) in &self.dots {
            fs::write(dir.join(name), dot)?;
        }
        Ok(())
    }
}

impl GraphObserver<f32> for GraphDump {
    fn observe(&mut self, subband: &str, graph: &MotifGraph<f32>) {
        let mut value = graph_to_json(graph, subband, false);
        value["view"] = serde_json::Value::String(self.view.to_string());
        self.lines.push(value.to_string());
        if self.dots.len() < self.dot_limit {
            let name = format!(
                "{}_{:04}_{}_g{}_p{}.dot",
                self.view,
                self.seen,
                subband,
                graph.group(),
                graph.position()
            );
            self.dots.push((name, graph_to_dot(graph, subband)));
        }
        self.seen += 1;
    }
}

fn read_image(path: &Path) -> Result<Tensor3<f32>, (i32, String)> {
    let bytes =
        fs::read(path).map_err(|e| (EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    let img = read_pnm(&bytes)
        .map_err(|e| (exit_code_for(&e), format!("{}: {e}", path.display())))?;
    Ok(img.to_rgb_tensor())
}

fn read_disparity(path: &Path) -> Result<DisparityMap<f32>, (i32, String)> {
    let bytes =
        fs::read(path).map_err(|e| (EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    read_pfm(&bytes).map_err(|e| (exit_code_for(&e), format!("{}: {e}", path.display())))
}

/// Applies config file, environment, and flags in precedence order:
/// `--seed` > config-file seed > `MOCHA_SEED` > 0, and flags beat the file
/// for iterations and stage toggles.
fn resolve_config(args: &MatchArgs) -> Result<PipelineConfig, (i32, String)> {
    let mut cfg = match &args.config {
        Some(path) => {
            let bytes = fs::read(path)
                .map_err(|e| (EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_slice::<PipelineConfig>(&bytes)
                .map_err(|e| (EXIT_IO, format!("{}: invalid config: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    } else if cfg.seed.is_none() {
        if let Ok(raw) = std::env::var(SEED_ENV_VAR) {
            let seed = raw.parse::<u64>().map_err(|_| {
                (
                    EXIT_USAGE,
                    format!("{SEED_ENV_VAR} must be an unsigned integer, got {raw:?}"),
                )
            })?;
            cfg.seed = Some(seed);
        }
    }
    if let Some(iters) = args.iters {
        cfg.iterations = iters;
    }
    for toggle in &args.toggles {
        let (name, state) = toggle.split_once('=').ok_or_else(|| {
            (
                EXIT_USAGE,
                format!("toggle {toggle:?} is not of the form name=on|off"),
            )
        })?;
        let on = match state {
            "on" => true,
            "off" => false,
            other => {
                return Err((
                    EXIT_USAGE,
                    format!("toggle state must be on or off, got {other:?}"),
                ))
            }
        };
        match name {
            "mcg" => cfg.mcg = on,
            "wavelet" => cfg.wavelet = on,
            "remp" => cfg.remp = on,
            other => {
                return Err((
                    EXIT_USAGE,
                    format!("unknown toggle {other:?}; expected mcg, wavelet, or remp"),
                ))
            }
        }
    }
    cfg.validate()
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    Ok(cfg)
}

/// Runs the full matcher on a rectified pair and writes the disparity map.
pub fn run_match(args: &MatchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run_match_inner(args, out) {
        Ok(()) => EXIT_OK,
        Err((code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn run_match_inner(args: &MatchArgs, out: &mut dyn Write) -> Result<(), (i32, String)> {
    let cfg = resolve_config(args)?;
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err((EXIT_USAGE, "--threads must be at least 1".into()));
        }
        // Outputs are independent of the worker count by construction, so
        // a pool that was already initialized (same process reuse) is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let left = read_image(&args.left)?;
    let right = read_image(&args.right)?;

    let mut left_dump = GraphDump::new("left");
    let mut right_dump = GraphDump::new("right");
    let dumps = if args.dump_motif_graphs.is_some() {
        DumpOptions {
            left_graphs: Some(&mut left_dump),
            right_graphs: Some(&mut right_dump),
        }
    } else {
        DumpOptions::default()
    };

    let result = match_pair_with(&left, &right, &cfg, dumps)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;

    fs::write(&args.out, write_pfm(&result.disparity)).map_err(|e| {
        (
            EXIT_IO,
            format!("cannot write {}: {e}", args.out.display()),
        )
    })?;

    if let Some(dir) = &args.dump_motif_graphs {
        fs::create_dir_all(dir)
            .map_err(|e| (EXIT_IO, format!("cannot create {}: {e}", dir.display())))?;
        for dump in [&left_dump, &right_dump] {
            dump.write_to(dir)
                .map_err(|e| (EXIT_IO, format!("cannot write graph dump: {e}")))?;
        }
        let _ = writeln!(
            out,
            "dumped {} left and {} right motif graphs to {}",
            left_dump.seen,
            right_dump.seen,
            dir.display()
        );
    }

    if let Some(dir) = &args.dump_iterations {
        fs::create_dir_all(dir)
            .map_err(|e| (EXIT_IO, format!("cannot create {}: {e}", dir.display())))?;
        let write_map = |name: String, d: &DisparityMap<f32>| {
            fs::write(dir.join(&name), write_pfm(d))
                .map_err(|e| (EXIT_IO, format!("cannot write {name}: {e}")))
        };
        write_map("init.pfm".to_string(), &result.init)?;
        for (k, it) in result.iterates.iter().enumerate() {
            write_map(format!("iter_{:03}.pfm", k + 1), it)?;
        }
        let _ = writeln!(
            out,
            "dumped the initialization and {} refinement iterates to {}",
            result.iterates.len(),
            dir.display()
        );
    }

    if let Some(path) = &args.viz {
        let rgb = colorize_disparity(&result.disparity, cfg.max_disparity as f64);
        let img = PnmImage::new(rgb, 255).map_err(|e| (EXIT_USAGE, e.to_string()))?;
        fs::write(path, write_pnm(&img))
            .map_err(|e| (EXIT_IO, format!("cannot write {}: {e}", path.display())))?;
        let _ = writeln!(out, "wrote visualization to {}", path.display());
    }

    let _ = writeln!(
        out,
        "wrote {} ({}x{}, {} iterations, seed {})",
        args.out.display(),
        result.disparity.width(),
        result.disparity.height(),
        cfg.iterations,
        cfg.resolved_seed()
    );
    Ok(())
}

/// Compares a disparity map against ground truth and prints JSON metrics.
pub fn run_eval(args: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run_eval_inner(args, out) {
        Ok(()) => EXIT_OK,
        Err((code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn run_eval_inner(args: &EvalArgs, out: &mut dyn Write) -> Result<(), (i32, String)> {
    let disp = read_disparity(&args.disp)?;
    let mut gt = read_disparity(&args.gt)?;
    if args.mask_nonpositive {
        gt = mask_nonpositive(&gt);
    }
    if args.thresholds.is_empty() {
        return Err((EXIT_USAGE, "at least one threshold is required".into()));
    }
    let report = evaluate(&disp, &gt, &args.thresholds, None)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| (EXIT_USAGE, format!("cannot serialize report: {e}")))?;
    let _ = writeln!(out, "{json}");
    Ok(())
}

/// Runs the oracle verification suites and prints a pass/fail table.
pub fn run_selftest(args: &SelftestArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Some(name) = &args.inject_fault {
        if !SUITE_NAMES.contains(&name.as_str()) {
            let _ = writeln!(
                err,
                "error: unknown suite {name:?}; expected one of: {}",
                SUITE_NAMES.join(", ")
            );
            return EXIT_USAGE;
        }
    }
    let report = run_selftest_with(args.trials, args.inject_fault.as_deref());
    let width = report
        .suites
        .iter()
        .map(|s| s.name.len())
        .max()
        .unwrap_or(0);
    for s in &report.suites {
        let status = if s.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {:width$}  {}", s.name, s.detail);
    }
    let failures = report.failures();
    if failures.is_empty() {
        let _ = writeln!(out, "all {} suites passed", report.suites.len());
        EXIT_OK
    } else {
        let names: Vec<&str> = failures.iter().map(|s| s.name).collect();
        let _ = writeln!(out, "failing properties: {}", names.join(", "));
        EXIT_SUITE_FAILURE
    }
}
