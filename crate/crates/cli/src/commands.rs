use std::fs;
use std::path::Path;

use shrinkrel::config::parse_grid;
use shrinkrel::datagen::TrueSystem;
use shrinkrel::experiments::PreparedScenario;
use shrinkrel::streams::{stream, Purpose};
use shrinkrel::{
    cstar_analytic, cstar_bootstrap, km_fit, plugin_curve, run_scenario, run_sweep, system_ple,
    AnalyticOptions, AutopsyDataset, BootstrapOptions, CStarResult, ConfigFile, LossConfig, Method,
    StructureTree, SystemCurveEstimate,
};

use crate::args::{
    BenchArgs, BootArgs, Cli, Command, CstarArgs, EstimateArgs, SelectorArg, SimulateArgs,
};
use crate::csvio::{self, DataKind};
use crate::output::{bench_table, read_text, write_atomic};
use crate::CliError;

pub const TRUTH_POINTS: usize = 201;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Estimate(a) => estimate(&a),
        Command::Cstar(a) => cstar(&a),
        Command::Bench(a) => bench(&a),
    }
}

fn load_config(path: &Path) -> Result<ConfigFile, CliError> {
    Ok(ConfigFile::from_json(&read_text(path)?)?)
}

fn parse_structure(expr: &str) -> Result<StructureTree, CliError> {
    StructureTree::parse(expr).map_err(|e| CliError::Usage(format!("--structure: {e}")))
}

/// `R_S` on an even grid from 0 to the 0.999 quantile.
pub fn truth_grid(truth: &TrueSystem) -> Vec<(f64, f64)> {
    let hi = truth.quantile(0.999);
    (0..TRUTH_POINTS)
        .map(|i| {
            let t = hi * i as f64 / (TRUTH_POINTS - 1) as f64;
            (t, truth.reliability(t))
        })
        .collect()
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut file = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        file.seed = seed;
    }
    let cfg = file.scenario()?;
    let prepared = PreparedScenario::new(&cfg)?;
    let g = prepared.generate(0);

    fs::create_dir_all(&a.out).map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    write_atomic(
        &a.out.join("autopsy.csv"),
        &csvio::write_autopsy(&g.autopsy),
    )?;
    write_atomic(&a.out.join("system.csv"), &csvio::write_system(&g.system))?;
    write_atomic(
        &a.out.join("truth.csv"),
        &csvio::write_grid_curve(&truth_grid(prepared.truth())),
    )?;
    let config: serde_json::Value =
        serde_json::from_str(&file.to_json()).expect("config round-trips");
    let manifest = serde_json::json!({
        "config": config,
        "seed": file.seed,
        "replication": 0,
        "files": ["autopsy.csv", "system.csv", "truth.csv"],
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&a.out.join("manifest.json"), &text)
}

fn read_autopsy_for(path: &Path, tree: &StructureTree) -> Result<AutopsyDataset, CliError> {
    let text = read_text(path)?;
    if csvio::detect(&text)? != DataKind::Autopsy {
        return Err(CliError::Data(format!(
            "{}: expected autopsy data",
            path.display()
        )));
    }
    let data = csvio::read_autopsy(&text)?;
    if data.k() != tree.k() {
        return Err(CliError::Data(format!(
            "structure has {} components but the data has {}",
            tree.k(),
            data.k()
        )));
    }
    Ok(data)
}

fn bootstrap_options(b: &BootArgs) -> Result<BootstrapOptions, CliError> {
    let mut opts = BootstrapOptions::default();
    if let Some(reps) = b.boot_reps {
        opts.resamples = reps;
    }
    if let Some(g) = &b.grid {
        opts.grid = parse_grid(g).map_err(|e| CliError::Usage(format!("--grid: {e}")))?;
    }
    Ok(opts)
}

fn run_bootstrap(
    data: &AutopsyDataset,
    tree: &StructureTree,
    b: &BootArgs,
) -> Result<CStarResult, CliError> {
    let opts = bootstrap_options(b)?;
    let mut rng = stream(b.seed, 0, Purpose::Bootstrap);
    Ok(cstar_bootstrap(
        data,
        tree,
        &LossConfig::default(),
        &opts,
        &mut rng,
    )?)
}

fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    match (a.method, a.c) {
        (Method::Plugin, Some(c)) if !(c > 0.0 && c.is_finite()) => {
            return Err(CliError::Usage(format!("--c must be positive (got {c})")));
        }
        (Method::Plugin, _) | (_, None) => {}
        (m, Some(_)) => {
            return Err(CliError::Usage(format!(
                "--c cannot be combined with --method {m}"
            )))
        }
    }
    if a.method != Method::ShrinkBootstrap && (a.boot.boot_reps.is_some() || a.boot.grid.is_some())
    {
        return Err(CliError::Usage(
            "--boot-reps and --grid only apply to shrink-bootstrap".into(),
        ));
    }
    let tree = parse_structure(&a.structure)?;
    let mut comments = vec![format!("method={}", a.method)];
    let est: SystemCurveEstimate = match a.method {
        Method::SystemPle => {
            let text = read_text(&a.data)?;
            if csvio::detect(&text)? != DataKind::System {
                return Err(CliError::Data(format!(
                    "{}: system-ple needs system data",
                    a.data.display()
                )));
            }
            system_ple(&csvio::read_system(&text)?)
        }
        method => {
            let data = read_autopsy_for(&a.data, &tree)?;
            let curves: Vec<_> = (0..data.k()).map(|j| km_fit(&data.component(j))).collect();
            let c = match method {
                Method::Plugin => a.c.unwrap_or(1.0),
                Method::ShrinkAnalytic => {
                    cstar_analytic(
                        &data,
                        &tree,
                        &LossConfig::default(),
                        &AnalyticOptions::default(),
                    )?
                    .c_star
                }
                _ => run_bootstrap(&data, &tree, &a.boot)?.c_star,
            };
            if method.is_shrinkage() {
                println!("c_star={c}");
                comments.push(format!("c_star={c}"));
            } else {
                comments.push(format!("c={c}"));
            }
            plugin_curve(&tree, &curves, c)?
        }
    };
    write_atomic(&a.out, &csvio::write_curve(&est, &comments))
}

fn cstar(a: &CstarArgs) -> Result<(), CliError> {
    let tree = parse_structure(&a.structure)?;
    let data = read_autopsy_for(&a.data, &tree)?;
    let result = match a.method {
        SelectorArg::Analytic => {
            if a.boot.boot_reps.is_some() {
                return Err(CliError::Usage(
                    "--boot-reps only applies to the bootstrap selector".into(),
                ));
            }
            let mut opts = AnalyticOptions::default();
            if let Some(g) = &a.boot.grid {
                opts.profile_grid =
                    Some(parse_grid(g).map_err(|e| CliError::Usage(format!("--grid: {e}")))?);
            }
            cstar_analytic(&data, &tree, &LossConfig::default(), &opts)?
        }
        SelectorArg::Bootstrap => run_bootstrap(&data, &tree, &a.boot)?,
    };
    println!("c_star={}", result.c_star);
    let mut comments = vec![format!("c_star={}", result.c_star)];
    if result.resamples_used > 0 {
        comments.push(format!("resamples_used={}", result.resamples_used));
        comments.push(format!("resamples_skipped={}", result.resamples_skipped));
    }
    write_atomic(&a.out, &csvio::write_profile(&result.profile, &comments))
}

fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let file = load_config(&a.config)?;
    let cfg = file.scenario()?;
    let work = || -> Result<String, CliError> {
        match &file.sweep {
            Some(sweep) => {
                let points = run_sweep(&cfg, sweep.axis, &sweep.values)?;
                let rows: Vec<_> = points
                    .iter()
                    .map(|p| (p.label.clone(), &p.result))
                    .collect();
                Ok(bench_table(&rows))
            }
            None => {
                let res = run_scenario(&cfg)?;
                Ok(bench_table(&[("base".to_string(), &res)]))
            }
        }
    };
    let table = match a.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?
            .install(work)?,
        None => work()?,
    };
    write_atomic(&a.out, &table)
}
