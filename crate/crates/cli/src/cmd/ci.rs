use std::io::Write;

use anyhow::Result;
use cgfit::linalg::solve_normal_equations;
use cgfit::pairfm::{pair_fm_systems, pool_systems, potential_band, write_potential_csv};
use cgfit::uq::{bootstrap_percentile_ci, bootstrap_standard_ci, jackknife, CiMethod, ConfidenceReport};
use cgfit::validate::{drift_band, interval_for, DriftData, IntervalOptions};
use cgfit::{IidDataset, TimeSeriesDataset};
use serde::Serialize;

use crate::args::{CiArgs, CiKind, FitMethod};
use crate::cmd::{drift_estimator, emit, fmt4, grid, read_configs, read_iid, read_paths, require, BasisChoice};
use crate::config::usage;
use crate::meta::{write_file, Meta};
use crate::{Ctx, Outcome};

#[derive(Serialize)]
struct CiSettings<'a> {
    method: CiKind,
    estimators: &'a [FitMethod],
    data: &'a std::path::Path,
    alpha: f64,
    b: usize,
    batch: Option<usize>,
    basis: &'a BasisChoice,
    grid: Option<&'a [f64]>,
}

fn methods(kind: CiKind, pair: bool) -> Vec<CiMethod> {
    match kind {
        CiKind::Asymptotic => vec![CiMethod::Asymptotic],
        CiKind::Jackknife => vec![CiMethod::Jackknife],
        CiKind::Bootstrap => vec![CiMethod::BootstrapStandard],
        CiKind::Percentile => vec![CiMethod::BootstrapPercentile],
        CiKind::All if pair => vec![CiMethod::Jackknife, CiMethod::BootstrapStandard, CiMethod::BootstrapPercentile],
        CiKind::All => vec![CiMethod::Asymptotic, CiMethod::Jackknife, CiMethod::BootstrapStandard],
    }
}

struct Column {
    label: String,
    report: ConfidenceReport,
}

fn cell(r: &ConfidenceReport, quantity: &str, p: usize) -> String {
    match quantity {
        "estimate" => format!("{:?}", r.estimate[p]),
        "variance" => r.variance.as_ref().map(|v| format!("{:?}", v[p])).unwrap_or_default(),
        "lower" => format!("{:?}", r.lower[p]),
        _ => format!("{:?}", r.upper[p]),
    }
}

/// Single report: the standard interval CSV. Several: one column per
/// (estimator, method) with rows `estimate`, `variance`, `lower`, `upper`
/// for every parameter.
fn write_table(w: &mut dyn Write, cols: &[Column], meta: &[String]) -> Result<()> {
    if let [only] = cols {
        return Ok(only.report.write_csv(w, meta)?);
    }
    for m in meta {
        writeln!(w, "# {m}")?;
    }
    let labels: Vec<&str> = cols.iter().map(|c| c.label.as_str()).collect();
    writeln!(w, "param,quantity,{}", labels.join(","))?;
    let k = cols[0].report.len();
    for p in 0..k {
        for name in ["estimate", "variance", "lower", "upper"] {
            let cells: Vec<String> = cols.iter().map(|c| cell(&c.report, name, p)).collect();
            writeln!(w, "{},{name},{}", p + 1, cells.join(","))?;
        }
    }
    Ok(())
}

fn print_human(cols: &[Column]) {
    for c in cols {
        println!("{} (alpha {})", c.label, c.report.alpha);
        for p in 0..c.report.len() {
            let var = c.report.variance.as_ref().map(|v| fmt4(v[p])).unwrap_or_else(|| "-".into());
            println!(
                "  theta_{} {:>9}  var {:>8}  [{}, {}]",
                p + 1,
                fmt4(c.report.estimate[p]),
                var,
                fmt4(c.report.lower[p]),
                fmt4(c.report.upper[p])
            );
        }
    }
}

pub fn run(ctx: &mut Ctx, a: CiArgs) -> Result<Outcome> {
    let kind = a.method.unwrap_or(CiKind::Asymptotic);
    let data = require(a.data.clone(), "data")?;
    let estimators = a.estimator.clone().unwrap_or_else(|| match kind {
        CiKind::All => vec![FitMethod::Fm, FitMethod::Re],
        _ => vec![FitMethod::Fm],
    });
    let pair = estimators.contains(&FitMethod::Pairfm);
    if pair && estimators.len() > 1 {
        return Err(usage("pairfm cannot be combined with other estimators"));
    }
    let choice = BasisChoice::resolve(estimators[0], a.k, a.r_min, a.cutoff);
    let basis = choice.build()?;
    let list = methods(kind, pair);
    let needs_seed = pair
        || a.band.is_some()
        || list.iter().any(|m| matches!(m, CiMethod::BootstrapStandard | CiMethod::BootstrapPercentile));
    let seed = if needs_seed { Some(ctx.seed()) } else { ctx.given_seed() };
    let opts = IntervalOptions {
        alpha: a.alpha.unwrap_or(0.05),
        bootstrap_b: a.b.unwrap_or(200),
        bootstrap_seed: seed.unwrap_or(0),
        batch: a.batch,
        ..Default::default()
    };
    let default_grid = if pair { (0.4, choice.cutoff.unwrap_or(1.4), 101) } else { (-2.0, 2.0, 81) };
    let grid = grid(a.grid.as_deref(), default_grid)?;
    let settings = CiSettings {
        method: kind,
        estimators: &estimators,
        data: &data,
        alpha: opts.alpha,
        b: opts.bootstrap_b,
        batch: opts.batch,
        basis: &choice,
        grid: a.band.as_ref().map(|_| grid.as_slice()),
    };
    let meta = Meta::new("ci", seed, &settings)?;

    let mut cols = Vec::new();
    let mut not_converged = Vec::new();
    if pair {
        let cutoff = choice.cutoff.unwrap_or_default();
        let configs = read_configs(&data)?;
        if list.contains(&CiMethod::Asymptotic) {
            return Err(usage("no asymptotic interval for pair potentials; use jackknife or bootstrap"));
        }
        let band = potential_band(&configs, &basis, cutoff, opts.bootstrap_b, opts.alpha, &grid, opts.bootstrap_seed)?;
        for &m in &list {
            let report = match m {
                CiMethod::BootstrapStandard => bootstrap_standard_ci(&band.theta_hat, &band.replicates, opts.alpha)?,
                CiMethod::BootstrapPercentile => bootstrap_percentile_ci(&band.theta_hat, &band.replicates, opts.alpha)?,
                _ => {
                    let systems = pair_fm_systems(&configs, &basis, cutoff)?;
                    let solve = |s: &Vec<cgfit::linalg::LinearSystem>| {
                        Ok(solve_normal_equations(&pool_systems(s)?)?.as_slice().to_vec())
                    };
                    jackknife(&systems, solve, opts.alpha)?.report
                }
            };
            cols.push(Column { label: format!("pairfm_{}", m.as_str()), report });
        }
        if let Some(path) = &a.band {
            write_file(path, |w| {
                Ok(write_potential_csv(w, &grid, &band.bootstrap.estimate, Some(&band.bootstrap), &meta.lines())?)
            })?;
        }
    } else {
        let mut iid: Option<IidDataset> = None;
        let mut paths: Option<TimeSeriesDataset> = None;
        for (i, &e) in estimators.iter().enumerate() {
            let de = drift_estimator(e)?;
            if de.uses_paths() && paths.is_none() {
                paths = Some(read_paths(&data)?);
            }
            if !de.uses_paths() && iid.is_none() {
                iid = Some(read_iid(&data)?);
            }
            let view = match (de.uses_paths(), &iid, &paths) {
                (true, _, Some(p)) => DriftData::Paths(p),
                (false, Some(d), _) => DriftData::Iid(d),
                _ => unreachable!("loaded above"),
            };
            for &m in &list {
                let fit = interval_for(de, view, &basis, m, &opts)?;
                if !fit.estimate.converged {
                    not_converged.push(de.as_str());
                }
                cols.push(Column { label: format!("{}_{}", de.as_str(), m.as_str()), report: fit.interval });
            }
            // the band follows the first estimator
            if let (Some(path), 0) = (&a.band, i) {
                let band = drift_band(de, view, &basis, &grid, &opts)?;
                write_file(path, |w| Ok(band.write_csv(w, &meta.lines())?))?;
            }
        }
    }
    print_human(&cols);
    if let Some(out) = &a.out {
        emit(Some(out), |w| write_table(w, &cols, &meta.lines()))?;
    }
    if not_converged.is_empty() {
        Ok(Outcome::Done)
    } else {
        not_converged.dedup();
        Ok(Outcome::NotConverged(format!("{} did not converge", not_converged.join(", "))))
    }
}

