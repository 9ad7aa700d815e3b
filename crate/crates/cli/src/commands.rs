use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use despeckle::io::{read_image, write_image};
use despeckle::metrics::{line_profile, mssim, psnr, ratio_image, speckle_index, MetricsReport};
use despeckle::noise::apply_speckle;
use despeckle::phantom::PhantomKind;
use despeckle::solvers::{run_filter, StopReason};
use despeckle::{Filter, ImageGrid, NoiseSpec, RunLog, SolverParams, TemplateSet};
use rayon::prelude::*;
use serde::Serialize;

use crate::params::{ParamOverrides, SolverArgs};
use crate::plan::ExperimentPlan;

/// Usage problems exit with 2, failures while running with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<despeckle::Error> for CliError {
    fn from(e: despeckle::Error) -> Self {
        match e {
            despeckle::Error::Parameter { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T = ExitCode> = Result<T, CliError>;

/// Input files that cannot be opened or decoded are usage errors.
fn load(path: &Path) -> CliResult<ImageGrid> {
    read_image(path).map_err(|e| CliError::Usage(e.to_string()))
}

fn write_bytes(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load_templates(path: Option<&Path>) -> CliResult<TemplateSet> {
    match path {
        Some(p) => TemplateSet::from_file(p).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(TemplateSet::default()),
    }
}

fn check_params(p: &SolverParams) -> CliResult<()> {
    p.validate().map_err(|e| CliError::Usage(e.to_string()))
}

pub fn noise(input: &Path, output: &Path, looks: u32, seed: u64) -> CliResult {
    let spec = NoiseSpec::new(looks, seed)?;
    let clean = load(input)?;
    let noisy = apply_speckle(&clean, spec)?;
    write_image(&noisy, output)?;
    println!("looks={looks} seed={seed} -> {}", output.display());
    Ok(ExitCode::SUCCESS)
}

pub fn phantom(kind: PhantomKind, output: &Path, size: usize, lo: f64, hi: f64) -> CliResult {
    let img = despeckle::phantom::phantom(kind, size, lo, hi)?;
    write_image(&img, output)?;
    Ok(ExitCode::SUCCESS)
}

pub fn profile(input: &Path, row: usize, output: Option<&Path>) -> CliResult {
    let img = load(input)?;
    let samples = line_profile(&img, row)?;
    let mut csv = String::from("column,intensity\n");
    for (x, v) in samples {
        csv.push_str(&format!("{x},{v}\n"));
    }
    match output {
        Some(path) => write_bytes(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct DespeckleReport<'a> {
    input: String,
    clean: Option<String>,
    filter: Filter,
    params: &'a SolverParams,
    templates: Option<String>,
    iterations: usize,
    stop_reason: StopReason,
    final_rel_change: f64,
    noisy_metrics: Option<MetricsReport>,
    metrics: Option<MetricsReport>,
}

pub struct DespeckleJob {
    pub input: PathBuf,
    pub filter: Filter,
    pub clean: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub prefix: Option<String>,
    pub timing: bool,
    pub solver: SolverArgs,
}

pub fn despeckle(job: &DespeckleJob) -> CliResult {
    let mut params = SolverParams::for_filter(job.filter);
    job.solver.overrides().apply(&mut params);
    check_params(&params)?;
    if job.filter == Filter::Tdm && job.solver.lambda.is_some() {
        eprintln!("warning: --lambda is ignored by the tdm filter (it has no fidelity term)");
    }
    let templates = load_templates(job.solver.templates.as_deref())?;
    let noisy = load(&job.input)?;
    let clean = job.clean.as_deref().map(load).transpose()?;
    if let Some(c) = &clean {
        if !c.same_shape(&noisy) {
            return Err(CliError::Usage(format!(
                "clean reference is {}x{}, input is {}x{}",
                c.width(),
                c.height(),
                noisy.width(),
                noisy.height()
            )));
        }
    }

    let start = Instant::now();
    let mut track_psnr = |_: usize, img: &ImageGrid| clean.as_ref().and_then(|c| psnr(c, img).ok());
    let (restored, log) = run_filter(job.filter, &noisy, &params, &templates, Some(&mut track_psnr))?;
    let elapsed = start.elapsed().as_secs_f64();

    create_dir(&job.out_dir)?;
    let stem = job.prefix.clone().unwrap_or_else(|| {
        job.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into())
    });
    let base = job.out_dir.join(format!("{stem}-{}", job.filter));
    let out_path = |suffix: &str| PathBuf::from(format!("{}{suffix}", base.display()));

    write_image(&restored, &out_path(".pgm"))?;
    write_image(&ratio_image(&noisy, &restored)?, &out_path("-ratio.pgm"))?;
    write_bytes(&out_path("-log.csv"), log.to_csv())?;

    let metrics = match &clean {
        Some(c) => {
            let mut m = MetricsReport::evaluate(c, &restored, log.iterations())?;
            m.wall_seconds = job.timing.then_some(elapsed);
            Some(m)
        }
        None => None,
    };
    let noisy_metrics = clean
        .as_ref()
        .map(|c| MetricsReport::evaluate(c, &noisy, 0))
        .transpose()?;
    let report = DespeckleReport {
        input: job.input.display().to_string(),
        clean: job.clean.as_ref().map(|p| p.display().to_string()),
        filter: job.filter,
        params: &params,
        templates: job.solver.templates.as_ref().map(|p| p.display().to_string()),
        iterations: log.iterations(),
        stop_reason: log.stop_reason,
        final_rel_change: log.last_rel_change().unwrap_or(f64::NAN),
        noisy_metrics,
        metrics,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_bytes(&out_path("-report.json"), json + "\n")?;

    print!("{}: {} iterations ({})", job.filter, log.iterations(), log.stop_reason);
    if let Some(m) = &report.metrics {
        print!(
            ", PSNR {:.2} dB, MSSIM {:.4}, SI {:.4}",
            m.psnr_db, m.mssim, m.speckle_index
        );
    }
    println!();
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Clone, Serialize)]
struct BatchRow {
    image: String,
    looks: u32,
    seed: u64,
    filter: Filter,
    status: &'static str,
    iterations: Option<usize>,
    stop_reason: Option<StopReason>,
    psnr_noisy: Option<f64>,
    psnr: Option<f64>,
    mssim_noisy: Option<f64>,
    mssim: Option<f64>,
    si_noisy: Option<f64>,
    si: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct FilterSummary {
    filter: Filter,
    cells: usize,
    failed: usize,
    mean_psnr: Option<f64>,
    mean_mssim: Option<f64>,
    mean_si: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BatchReport {
    plan: String,
    params: Vec<(Filter, SolverParams)>,
    rows: Vec<BatchRow>,
    summary: Vec<FilterSummary>,
}

struct Cell<'a> {
    image: &'a Path,
    looks: u32,
    seed: u64,
    filter: Filter,
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn run_cell(
    cell: &Cell<'_>,
    params: &SolverParams,
    templates: &TemplateSet,
    out_dir: &Path,
) -> Result<(RunLog, [f64; 6]), String> {
    let clean = read_image(cell.image).map_err(|e| e.to_string())?;
    let noisy = apply_speckle(
        &clean,
        NoiseSpec::new(cell.looks, cell.seed).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let (restored, log) = run_filter(cell.filter, &noisy, params, templates, None).map_err(|e| e.to_string())?;
    let prefix = format!("{}-L{}-s{}-{}", stem_of(cell.image), cell.looks, cell.seed, cell.filter);
    write_image(&restored, &out_dir.join(format!("{prefix}.pgm"))).map_err(|e| e.to_string())?;
    fs::write(out_dir.join(format!("{prefix}-log.csv")), log.to_csv()).map_err(|e| e.to_string())?;
    let win = despeckle::metrics::fitted_ssim_window(&clean);
    let scores = (|| -> despeckle::Result<[f64; 6]> {
        Ok([
            psnr(&clean, &noisy)?,
            psnr(&clean, &restored)?,
            mssim(&clean, &noisy, win)?,
            mssim(&clean, &restored, win)?,
            speckle_index(&noisy, 3)?,
            speckle_index(&restored, 3)?,
        ])
    })()
    .map_err(|e| e.to_string())?;
    Ok((log, scores))
}

fn rows_to_csv(rows: &[BatchRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn batch(plan_path: &Path, out_dir: Option<PathBuf>, flags: &SolverArgs) -> CliResult {
    let text = fs::read_to_string(plan_path).map_err(|e| CliError::Usage(format!("{}: {e}", plan_path.display())))?;
    let plan = ExperimentPlan::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", plan_path.display())))?;
    let base = plan_path.parent().unwrap_or(Path::new("."));
    let plan = plan.resolve(base);
    let out_dir = out_dir
        .or_else(|| plan.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("batch-out"));
    let templates = load_templates(flags.templates.as_deref().or(plan.templates.as_deref()))?;

    // Built-in defaults, then the plan, then the command line.
    let mut params = Vec::new();
    for &filter in plan.filters.get_ref() {
        let mut p = SolverParams::for_filter(filter);
        plan.params.apply(&mut p);
        plan.overrides
            .get(&filter)
            .unwrap_or(&ParamOverrides::default())
            .apply(&mut p);
        flags.overrides().apply(&mut p);
        check_params(&p)?;
        params.push((filter, p));
    }
    create_dir(&out_dir)?;

    let mut cells = Vec::with_capacity(plan.cell_count());
    for image in plan.images.get_ref() {
        for &looks in plan.looks.get_ref() {
            for &seed in plan.seeds.get_ref() {
                for &filter in plan.filters.get_ref() {
                    cells.push(Cell {
                        image,
                        looks,
                        seed,
                        filter,
                    });
                }
            }
        }
    }
    let rows: Vec<BatchRow> = cells
        .par_iter()
        .map(|cell| {
            let p = &params
                .iter()
                .find(|(f, _)| *f == cell.filter)
                .expect("params per filter")
                .1;
            let mut row = BatchRow {
                image: cell.image.display().to_string(),
                looks: cell.looks,
                seed: cell.seed,
                filter: cell.filter,
                status: "ok",
                iterations: None,
                stop_reason: None,
                psnr_noisy: None,
                psnr: None,
                mssim_noisy: None,
                mssim: None,
                si_noisy: None,
                si: None,
                error: None,
            };
            match run_cell(cell, p, &templates, &out_dir) {
                Ok((log, s)) => {
                    row.iterations = Some(log.iterations());
                    row.stop_reason = Some(log.stop_reason);
                    [
                        row.psnr_noisy,
                        row.psnr,
                        row.mssim_noisy,
                        row.mssim,
                        row.si_noisy,
                        row.si,
                    ] = s.map(Some);
                }
                Err(e) => {
                    row.status = "error";
                    row.error = Some(e);
                }
            }
            row
        })
        .collect();

    let summary = params
        .iter()
        .map(|(filter, _)| {
            let mine: Vec<&BatchRow> = rows.iter().filter(|r| r.filter == *filter).collect();
            FilterSummary {
                filter: *filter,
                cells: mine.len(),
                failed: mine.iter().filter(|r| r.error.is_some()).count(),
                mean_psnr: mean(mine.iter().filter_map(|r| r.psnr)),
                mean_mssim: mean(mine.iter().filter_map(|r| r.mssim)),
                mean_si: mean(mine.iter().filter_map(|r| r.si)),
            }
        })
        .collect::<Vec<_>>();
    write_bytes(&out_dir.join("table.csv"), rows_to_csv(&rows)?)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let report = BatchReport {
        plan: plan_path.display().to_string(),
        params,
        rows,
        summary,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_bytes(&out_dir.join("report.json"), json + "\n")?;

    for s in &report.summary {
        println!(
            "{:<9} cells {:>3}  failed {:>3}  mean PSNR {}",
            s.filter.to_string(),
            s.cells,
            s.failed,
            s.mean_psnr.map(|v| format!("{v:.2} dB")).unwrap_or_else(|| "-".into())
        );
    }
    if failed > 0 {
        eprintln!(
            "{failed} of {} cells failed; see {}",
            report.rows.len(),
            out_dir.join("table.csv").display()
        );
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
