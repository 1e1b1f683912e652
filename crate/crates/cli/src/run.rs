//! The four experiment kinds.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use fracorbit::forward::{observe_and_perturb, solve_moving_source, TraceMeta, TraceSet};
use fracorbit::inverse::{
    noise_sweep, random_localized_orbits, reconstruct_orbit_global, reconstruct_orbit_local, stability_experiment,
    synthetic_traces, GlobalSettings, Reconstruction,
};
use fracorbit::model::{DomainSpec, ObservationSet, Orbit};
use fracorbit::verify;
use fracorbit::FracOrder;

use crate::config::{check_alpha, ExperimentConfig, Kind, Mode};
use crate::error::CliError;
use crate::io::{fmt, write_json, write_table, write_traces};

/// Environment variable with the default worker thread count.
pub const THREADS_ENV: &str = "FRACORBIT_THREADS";

/// Name of the resolved config echo in every output directory.
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub kind: Kind,
    pub output: PathBuf,
    /// human-readable report lines
    pub lines: Vec<String>,
    /// false when a verification check failed
    pub passed: bool,
}

fn thread_count(cfg: &ExperimentConfig) -> Result<Option<usize>, CliError> {
    if cfg.deterministic {
        return Ok(Some(1));
    }
    if let Some(n) = cfg.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::config("threads", format!("{THREADS_ENV}={v} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs one experiment, writing artifacts into `output` (default: the
/// config's `output`).
pub fn run(cfg: &ExperimentConfig, output: Option<&Path>) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let out = output.map_or_else(|| cfg.output.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut echo = cfg.clone();
    echo.output = out.clone();
    std::fs::write(out.join(RESOLVED_CONFIG), echo.to_toml())?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cfg)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    log::info!(
        "running {:?} into {} on {} threads",
        cfg.kind,
        out.display(),
        pool.current_num_threads()
    );
    pool.install(|| match cfg.kind {
        Kind::Simulate => simulate(cfg, &out),
        Kind::Reconstruct => reconstruct(cfg, &out),
        Kind::Stability => stability(cfg, &out),
        Kind::Verify => run_verify(cfg, &out),
    })
}

fn domain_label(d: &DomainSpec<f64>) -> &'static str {
    match d {
        DomainSpec::Bounded(_) => "bounded",
        DomainSpec::Free(_) => "free",
    }
}

fn alpha(cfg: &ExperimentConfig) -> Result<FracOrder<f64>, CliError> {
    check_alpha(
        cfg.alpha
            .ok_or_else(|| CliError::config("alpha", "alpha is required"))?,
    )
}

#[derive(Serialize)]
struct GridInfo {
    t_end: f64,
    n_steps: usize,
    dt: f64,
    refine: usize,
}

fn grid_info(cfg: &ExperimentConfig) -> Result<GridInfo, CliError> {
    let g = cfg.grid()?;
    Ok(GridInfo {
        t_end: g.t_end(),
        n_steps: g.n_steps(),
        dt: g.dt(),
        refine: cfg.refine(),
    })
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let g = cfg.profile()?;
    let domain = cfg.domain()?;
    let orbit = cfg.orbit()?;
    let grid = cfg.grid()?;
    let points = cfg.points()?;
    let a = alpha(cfg)?;
    let fine = grid.refined(cfg.refine())?;
    let sol = solve_moving_source(&g, &orbit, a, &domain, &fine, &cfg.forward)?;
    let obs = ObservationSet::new(points, grid, &domain)?;
    let meta = TraceMeta {
        alpha: a.value(),
        domain: domain_label(&domain).into(),
        orbit: format!("{:?}", orbit.shape()),
        noise_level: 0.0,
        seed: None,
    };
    let exact = sol.traces(&obs, meta)?;
    let data = observe_and_perturb(&exact, cfg.noise.level, cfg.noise.seed)?;
    write_traces(&out.join("traces.csv"), &data)?;
    let mut lines = vec![format!(
        "simulated {} traces on {} steps (tail indicator {:.3e})",
        data.len(),
        grid.n_steps(),
        sol.tail_indicator()
    )];
    if let Some(snap) = &cfg.snapshot {
        let m = fine.n_steps();
        let dim = g.dim();
        let mut header: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
        header.push("u".into());
        let rows: Vec<Vec<f64>> = snap
            .points
            .iter()
            .map(|x| {
                let mut r = x.clone();
                r.push(sol.field_at(x, m));
                r
            })
            .collect();
        write_table(&out.join("field.csv"), &header, &rows)?;
        lines.push(format!(
            "field snapshot at t = {} on {} points",
            fine.t_end(),
            rows.len()
        ));
    }
    write_json(
        &out.join("metadata.json"),
        &json!({
            "kind": "simulate",
            "alpha": a.value(),
            "domain": cfg.domain,
            "profile": cfg.profile,
            "orbit": cfg.orbit,
            "points": data.points,
            "grid": grid_info(cfg)?,
            "noise_level": cfg.noise.level,
            "seed": cfg.noise.seed,
            "forward": cfg.forward,
            "tail_indicator": sol.tail_indicator(),
        }),
    )?;
    Ok(RunSummary {
        kind: Kind::Simulate,
        output: out.to_path_buf(),
        lines,
        passed: true,
    })
}

fn reconstruction_rows(rec: &Reconstruction<f64>, truth: Option<&Orbit<f64>>) -> (Vec<String>, Vec<Vec<f64>>) {
    let d = rec.steps.first().map_or(0, |s| s.gamma.len());
    let mut header = vec!["t".to_string()];
    if truth.is_some() {
        header.extend((1..=d).map(|i| format!("gamma_true_{i}")));
    }
    header.extend((1..=d).map(|i| format!("gamma_rec_{i}")));
    header.push("newton_residual".into());
    header.push("jacobian_cond".into());
    let rows = rec
        .steps
        .iter()
        .map(|s| {
            let mut r = vec![s.t];
            if let Some(o) = truth {
                r.extend(o.position(s.t));
            }
            r.extend(s.gamma.iter().copied());
            r.push(s.residual);
            r.push(s.jacobian_cond);
            r
        })
        .collect();
    (header, rows)
}

fn reconstruct(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let g = cfg.profile()?;
    let domain = cfg.domain()?;
    let a = alpha(cfg)?;
    let truth = match &cfg.orbit {
        Some(_) => Some(cfg.orbit()?),
        None => None,
    };
    let data: TraceSet<f64> = match &cfg.reconstruction.data_file {
        Some(path) => crate::io::read_traces(path)?,
        None => {
            let orbit = truth.as_ref().expect("validated");
            let exact = synthetic_traces(&g, orbit, a, &domain, &cfg.points()?, &cfg.grid()?, cfg.refine())?;
            observe_and_perturb(&exact, cfg.noise.level, cfg.noise.seed)?
        }
    };
    write_traces(&out.join("traces.csv"), &data)?;
    let block = &cfg.reconstruction;
    let (rec, settings) = match block.mode {
        Mode::Local => (reconstruct_orbit_local(&data, &g, a, &domain, &block.solver)?, None),
        Mode::Global => {
            let k = block
                .speed_bound
                .or(truth.as_ref().map(|o| o.speed_bound()))
                .ok_or_else(|| CliError::config("reconstruction.speed_bound", "global mode needs a speed bound"))?;
            let eps = block.epsilon.unwrap_or(g.delta() / 9.0);
            let mut s = GlobalSettings::new(k, eps);
            s.observability_samples = block.observability_samples;
            s.seed = block.observability_seed;
            (
                reconstruct_orbit_global(&data, &g, a, &domain, &s, &block.solver)?,
                Some(s),
            )
        }
    };
    let (header, rows) = reconstruction_rows(&rec, truth.as_ref());
    write_table(&out.join("reconstruction.csv"), &header, &rows)?;
    let max_error = truth.as_ref().map(|o| rec.max_error(o));
    let bisected = rec.steps.iter().filter(|s| s.bisected).count();
    let mut lines = vec![format!(
        "reconstructed {} steps over [{}, {}], max residual {:.3e}",
        rec.steps.len() - 1,
        rec.coverage.0,
        rec.coverage.1,
        rec.max_residual()
    )];
    if let Some(e) = max_error {
        lines.push(format!("max error vs truth {e:.6e}"));
    }
    for iv in &rec.intervals {
        lines.push(format!(
            "interval {} [{:.4}, {:.4}] points {:?} bound {:.3e}",
            iv.index, iv.start, iv.end, iv.points, iv.observability_bound
        ));
    }
    write_json(
        &out.join("diagnostics.json"),
        &json!({
            "kind": "reconstruct",
            "config": cfg,
            "alpha": a.value(),
            "noise_level": cfg.noise.level,
            "noise_seed": cfg.noise.seed,
            "observability_seed": block.observability_seed,
            "mollifier": block.solver.mollifier,
            "dt": rec.grid.dt(),
            "data_dt": data.grid().dt(),
            "global": settings,
            "coverage": [rec.coverage.0, rec.coverage.1],
            "max_error": max_error,
            "max_residual": rec.max_residual(),
            "bisected_steps": bisected,
            "intervals": rec.intervals,
        }),
    )?;
    Ok(RunSummary {
        kind: Kind::Reconstruct,
        output: out.to_path_buf(),
        lines,
        passed: true,
    })
}

fn stability(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let g = cfg.profile()?;
    let domain = cfg.domain()?;
    let grid = cfg.grid()?;
    let points = cfg.points()?;
    let st = cfg.stability.as_ref().expect("validated");
    let orbits = random_localized_orbits(2 * st.pairs, g.dim(), st.epsilon, st.speed_bound, grid.t_end(), st.seed)?;
    let pairs: Vec<(Orbit<f64>, Orbit<f64>)> = orbits.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect();
    let table = stability_experiment(&pairs, &g, &cfg.alphas, &domain, &points, &grid)?;
    let rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| vec![r.pair_id as f64, r.alpha, r.c_norm_diff, r.trace_norm, r.ratio])
        .collect();
    let header: Vec<String> = ["pair_id", "alpha", "c_norm_diff", "trace_norm", "ratio"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    write_table(&out.join("stability.csv"), &header, &rows)?;
    let mut lines = vec![format!(
        "stability: {} pairs x {} orders, max ratio {}, spread across alpha {}",
        st.pairs,
        cfg.alphas.len(),
        fmt(table.max_ratio),
        fmt(table.alpha_spread)
    )];
    let sweep = if st.noise_levels.is_empty() {
        None
    } else {
        let a = alpha(cfg)?;
        let orbit = cfg.orbit()?;
        let data_grid = match st.sweep_steps {
            Some(n) => fracorbit::fracops::TimeGrid::new(grid.t_end(), n)?,
            None => grid,
        };
        let exact = synthetic_traces(&g, &orbit, a, &domain, &points, &data_grid, cfg.refine())?;
        let sweep = noise_sweep(
            &exact,
            &orbit,
            &g,
            a,
            &domain,
            &cfg.reconstruction.solver,
            &st.noise_levels,
            cfg.noise.seed,
        )?;
        let rows: Vec<Vec<f64>> = sweep
            .levels
            .iter()
            .zip(&sweep.errors)
            .map(|(&l, &e)| vec![l, e])
            .collect();
        write_table(
            &out.join("noise_sweep.csv"),
            &["noise_level".into(), "max_error".into()],
            &rows,
        )?;
        lines.push(format!(
            "noise sweep: slope {}, R^2 {:.4}",
            fmt(sweep.slope),
            sweep.r_squared
        ));
        Some(sweep)
    };
    write_json(
        &out.join("diagnostics.json"),
        &json!({
            "kind": "stability",
            "config": cfg,
            "orbit_seed": st.seed,
            "noise_seed": cfg.noise.seed,
            "max_ratio": table.max_ratio,
            "alpha_spread": table.alpha_spread,
            "noise_sweep": sweep,
        }),
    )?;
    Ok(RunSummary {
        kind: Kind::Stability,
        output: out.to_path_buf(),
        lines,
        passed: true,
    })
}

fn run_verify(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, CliError> {
    let mut checks = verify::special_values()?;
    checks.extend(verify::ml_estimate()?);
    checks.extend(verify::kernel_identity()?);
    checks.extend(verify::duhamel(cfg.verify.n_steps)?);
    let report = verify::VerifyReport { checks };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(out.join("verify.csv"))?;
    w.write_record(["name", "value", "threshold", "passed"])?;
    for c in &report.checks {
        w.write_record([
            c.name.clone(),
            fmt(c.value),
            fmt(c.threshold),
            u8::from(c.passed).to_string(),
        ])?;
    }
    w.flush()?;
    write_json(&out.join("verify.json"), &report)?;
    let lines = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {:<28} {:.3e} (threshold {:.1e})  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold,
                c.detail
            )
        })
        .collect();
    Ok(RunSummary {
        kind: Kind::Verify,
        output: out.to_path_buf(),
        lines,
        passed: report.passed(),
    })
}
