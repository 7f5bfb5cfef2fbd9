use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use hprqp::bench::{
    default_tau_grid, perf_profile, read_records, summarize, write_records, BenchRecord,
    SolverSummary,
};
use hprqp::engine::solve_variant;
use hprqp::io::{
    read_matrix_bundle, read_qps_file, write_matrix_bundle, write_results, ResultDocument,
};
use hprqp::{CcqpProblem, Status};

use crate::args::{out_dir, BenchArgs, GenArgs, ReportArgs, SolveArgs};
use crate::recipe::Recipe;
use crate::CliError;

const PROFILE_POINTS: usize = 200;

fn load_problem(path: &Path) -> Result<CcqpProblem, CliError> {
    let prob = if path.is_dir() {
        read_matrix_bundle(path)?
    } else {
        read_qps_file(path)?
    };
    if prob.name.is_empty() {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(prob.with_name(stem));
    }
    Ok(prob)
}

pub fn solve(args: &SolveArgs) -> Result<u8, CliError> {
    let cfg = args.solver.config()?;
    let prob = load_problem(&args.input)?;
    let out = solve_variant(&prob, &cfg, args.variant)?;
    let r = &out.report;
    println!(
        "{} status={} iterations={} setup={:.3}s solve={:.3}s eta_gap={:.3e} eta_p={:.3e} eta_d={:.3e} obj={:.10e}",
        prob.name,
        r.status,
        out.iterations,
        out.setup_seconds,
        out.solve_seconds,
        r.eta_gap,
        r.eta_p,
        r.eta_d,
        r.primal_obj
    );
    let doc = ResultDocument::from_output(prob.name.clone(), &out, args.write_x);
    write_results(&doc, &out.trace, out_dir(&args.out))?;
    Ok(if r.status == Status::Optimal { 0 } else { 2 })
}

fn read_recipe(path: &Path) -> Result<Recipe, CliError> {
    Recipe::from_json(&fs::read_to_string(path)?)
}

pub fn generate(args: &GenArgs) -> Result<u8, CliError> {
    let dir = out_dir(&args.out);
    for prob in read_recipe(&args.recipe)?.build()? {
        let target = dir.join(&prob.name);
        write_matrix_bundle(&prob, &target)?;
        println!("{}", target.display());
    }
    Ok(0)
}

/// A suite entry: either already built or a path to load lazily.
enum Source {
    Built(Box<CcqpProblem>),
    File(PathBuf),
}

impl Source {
    fn name(&self) -> String {
        match self {
            Source::Built(p) => p.name.clone(),
            Source::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }
}

fn discover(input: &Path) -> Result<Vec<Source>, CliError> {
    if input.is_file() {
        if input
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            return Ok(read_recipe(input)?
                .build()?
                .into_iter()
                .map(|p| Source::Built(Box::new(p)))
                .collect());
        }
        return Ok(vec![Source::File(input.to_path_buf())]);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(input)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.sort();
    let sources: Vec<Source> = paths
        .into_iter()
        .filter(|p| {
            if p.is_dir() {
                p.join("A.mtx").is_file()
            } else {
                p.extension()
                    .is_some_and(|e| ["qps", "mps"].iter().any(|x| e.eq_ignore_ascii_case(x)))
            }
        })
        .map(Source::File)
        .collect();
    if sources.is_empty() {
        return Err(CliError::Usage(format!(
            "no instances found in {}",
            input.display()
        )));
    }
    Ok(sources)
}

fn print_summaries(sums: &[SolverSummary]) {
    println!(
        "{:<10} {:>8} {:>9} {:>8} {:>14} {:>14}",
        "solver", "tol", "instances", "solved", "sgm10_seconds", "sgm10_iters"
    );
    for s in sums {
        println!(
            "{:<10} {:>8.0e} {:>9} {:>8} {:>14.4} {:>14.1}",
            s.solver, s.tol, s.instances, s.solved, s.sgm_seconds, s.sgm_iterations
        );
    }
}

/// Writes `summary.csv` and one `profile_tol<tol>.csv` per tolerance.
fn write_aggregates(
    records: &[BenchRecord],
    time_limit: f64,
    dir: &Path,
) -> Result<Vec<SolverSummary>, CliError> {
    fs::create_dir_all(dir)?;
    let sums = summarize(records, time_limit);
    let mut text = String::from("solver,tol,instances,solved,sgm10_seconds,sgm10_iterations\n");
    for s in &sums {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.solver, s.tol, s.instances, s.solved, s.sgm_seconds, s.sgm_iterations
        ));
    }
    fs::write(dir.join("summary.csv"), text)?;

    let mut by_tol: BTreeMap<u64, BTreeMap<String, Vec<BenchRecord>>> = BTreeMap::new();
    for r in records {
        by_tol
            .entry(r.tol.to_bits())
            .or_default()
            .entry(r.solver.clone())
            .or_default()
            .push(r.clone());
    }
    let taus = default_tau_grid(time_limit, PROFILE_POINTS);
    for (tol, by_solver) in by_tol {
        let profile = perf_profile(&by_solver, &taus)?;
        fs::write(
            dir.join(format!("profile_tol{:e}.csv", f64::from_bits(tol))),
            profile.to_csv(),
        )?;
    }
    Ok(sums)
}

pub fn bench(args: &BenchArgs) -> Result<u8, CliError> {
    let base = args.solver.config()?;
    let tols = if args.tols.is_empty() {
        vec![base.tol]
    } else {
        args.tols.clone()
    };
    let dir = out_dir(&args.out);
    let sources = discover(&args.input)?;
    let mut records = Vec::new();
    for source in &sources {
        let name = source.name();
        let loaded = match source {
            Source::Built(p) => Ok((**p).clone()),
            Source::File(path) => load_problem(path),
        };
        for &tol in &tols {
            for &variant in &args.variants {
                let cfg = hprqp::SolverConfig {
                    tol,
                    ..base.clone()
                };
                let outcome = match &loaded {
                    Ok(prob) => solve_variant(prob, &cfg, variant).map_err(CliError::from),
                    Err(e) => Err(CliError::Usage(e.to_string())),
                };
                let record = match outcome {
                    Ok(out) => BenchRecord {
                        instance: name.clone(),
                        solver: variant.to_string(),
                        status: Some(out.report.status),
                        iterations: out.iterations,
                        seconds: out.solve_seconds,
                        tol,
                    },
                    Err(e) => {
                        eprintln!("{name} [{variant}, tol {tol:e}]: {e}");
                        BenchRecord {
                            instance: name.clone(),
                            solver: variant.to_string(),
                            status: None,
                            iterations: 0,
                            seconds: cfg.time_limit,
                            tol,
                        }
                    }
                };
                records.push(record);
            }
        }
    }
    fs::create_dir_all(&dir)?;
    write_records(&records, File::create(dir.join("records.csv"))?)?;
    for r in &records {
        let status = r.status.map_or("error", |s| s.as_str());
        println!(
            "{} {} tol={:e} status={} iterations={} seconds={:.4}",
            r.instance, r.solver, r.tol, status, r.iterations, r.seconds
        );
    }
    print_summaries(&write_aggregates(&records, base.time_limit, &dir)?);
    Ok(0)
}

pub fn report(args: &ReportArgs) -> Result<u8, CliError> {
    if args.time_limit.is_nan() || args.time_limit <= 0.0 {
        return Err(CliError::Usage(format!(
            "--time-limit must be positive, got {}",
            args.time_limit
        )));
    }
    let records = read_records(File::open(&args.records)?)?;
    print_summaries(&write_aggregates(
        &records,
        args.time_limit,
        &out_dir(&args.out),
    )?);
    Ok(0)
}
