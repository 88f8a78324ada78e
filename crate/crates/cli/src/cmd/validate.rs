use std::path::Path;

use anyhow::Result;
use cgfit::twoscale::THETA_STAR;
use cgfit::uq::CiMethod;
use cgfit::validate::{coverage_experiment, method_comparison, ComparisonConfig, ComparisonRow, CoverageSpec, IntervalOptions};

use crate::args::{CiKind, CompareArgs, CoverageArgs, FitMethod};
use crate::cmd::{drift_estimator, emit, fmt4};
use crate::config::usage;
use crate::meta::Meta;
use crate::{Ctx, Outcome};

fn single_method(kind: CiKind) -> Result<CiMethod> {
    Ok(match kind {
        CiKind::Asymptotic => CiMethod::Asymptotic,
        CiKind::Jackknife => CiMethod::Jackknife,
        CiKind::Bootstrap => CiMethod::BootstrapStandard,
        CiKind::Percentile => CiMethod::BootstrapPercentile,
        CiKind::All => return Err(usage("choose one interval method here, not 'all'")),
    })
}

fn is_json(path: Option<&std::path::PathBuf>) -> bool {
    path.and_then(|p| Path::new(p).extension()).is_some_and(|e| e == "json")
}

/// θ* of the averaged two-scale drift, padded with zeros beyond the quintic.
fn theta_star(k: usize) -> Vec<f64> {
    (0..k).map(|i| THETA_STAR.get(i).copied().unwrap_or(0.0)).collect()
}

pub fn coverage(ctx: &mut Ctx, a: CoverageArgs) -> Result<Outcome> {
    let estimator = drift_estimator(a.method.unwrap_or(FitMethod::Fm))?;
    let interval = single_method(a.ci.unwrap_or(CiKind::Asymptotic))?;
    let k = a.k.unwrap_or(5);
    let master_seed = ctx.seed();
    let spec = CoverageSpec {
        estimator,
        interval,
        n: a.n.unwrap_or(if estimator.uses_paths() { 50_000 } else { 500 }),
        trials: a.trials.unwrap_or(200),
        theta_star: theta_star(k),
        master_seed,
        epsilon: a.eps.unwrap_or(0.005),
        options: IntervalOptions {
            alpha: a.alpha.unwrap_or(0.05),
            bootstrap_b: a.b.unwrap_or(200),
            batch: a.batch,
            ..Default::default()
        },
        ..Default::default()
    };
    let meta = Meta::new("validate coverage", Some(master_seed), &spec)?;
    let result = coverage_experiment(&spec)?;
    println!(
        "{}  n {}  alpha {}  trials {} (failed {}, not converged {})",
        result.method, result.n, result.alpha, result.trials, result.failed_trials, result.non_converged
    );
    for (i, c) in result.per_param_coverage.iter().enumerate() {
        println!("  theta_{} coverage {}", i + 1, fmt4(*c));
    }
    println!(
        "  mean coverage {} (±{} at 3 binomial sd)",
        fmt4(result.mean_coverage),
        fmt4(result.binomial_halfwidth())
    );
    if let Some(out) = &a.out {
        if is_json(a.out.as_ref()) {
            emit(Some(out), |w| {
                let doc = serde_json::json!({ "meta": meta, "result": result });
                serde_json::to_writer_pretty(&mut *w, &doc)?;
                writeln!(w)?;
                Ok(())
            })?;
        } else {
            emit(Some(out), |w| Ok(result.write_csv(w, &meta.lines())?))?;
        }
    }
    Ok(Outcome::Done)
}

pub fn compare(ctx: &mut Ctx, a: CompareArgs) -> Result<Outcome> {
    let methods = a
        .methods
        .clone()
        .unwrap_or_else(|| vec![FitMethod::Fm, FitMethod::Re, FitMethod::Rer])
        .into_iter()
        .map(drift_estimator)
        .collect::<Result<Vec<_>>>()?;
    let seed = ctx.seed();
    let config = ComparisonConfig {
        methods,
        seed,
        epsilon: a.eps.unwrap_or(0.005),
        n_iid: a.n.unwrap_or(500),
        n_t: a.steps.unwrap_or(50_000),
        k: a.k.unwrap_or(5),
        interval: single_method(a.ci.unwrap_or(CiKind::Asymptotic))?,
        options: IntervalOptions {
            alpha: a.alpha.unwrap_or(0.05),
            bootstrap_b: a.b.unwrap_or(200),
            ..Default::default()
        },
        ..Default::default()
    };
    let meta = Meta::new("validate compare", Some(seed), &config)?;
    let rows = method_comparison(&config)?;
    for r in &rows {
        println!(
            "{:<6} n {:>6}  converged {:<5}  time {:.3} s",
            r.method.as_str(),
            r.n,
            r.converged,
            r.wall_time_s
        );
        for (i, t) in r.theta.iter().enumerate() {
            let ci = match (&r.lower, &r.upper) {
                (Some(lo), Some(hi)) => format!("[{}, {}]", fmt4(lo[i]), fmt4(hi[i])),
                _ => "-".into(),
            };
            println!("  theta_{} {:>9}  {ci}", i + 1, fmt4(*t));
        }
    }
    if let Some(out) = &a.out {
        if is_json(a.out.as_ref()) {
            emit(Some(out), |w| {
                let doc = serde_json::json!({ "meta": meta, "rows": rows });
                serde_json::to_writer_pretty(&mut *w, &doc)?;
                writeln!(w)?;
                Ok(())
            })?;
        } else {
            emit(Some(out), |w| Ok(ComparisonRow::write_csv(&rows, w, &meta.lines())?))?;
        }
    }
    let stalled: Vec<&str> = rows.iter().filter(|r| !r.converged).map(|r| r.method.as_str()).collect();
    if stalled.is_empty() {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::NotConverged(format!("{} did not converge", stalled.join(", "))))
    }
}
