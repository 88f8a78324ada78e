use anyhow::Result;
use cgfit::estimators::{fit_fm_iid, fit_fm_ts, fit_re_iid, fit_rer, NewtonOptions};
use cgfit::pairfm::fit_pair_potential;
use serde::Serialize;

use crate::args::{FitArgs, FitMethod};
use crate::cmd::{emit, fmt4, meta_json, read_configs, read_iid, read_paths, require, BasisChoice, FitFile};
use crate::meta::Meta;
use crate::{Ctx, Outcome};

#[derive(Serialize)]
struct FitSettings<'a> {
    method: FitMethod,
    data: &'a std::path::Path,
    basis: &'a BasisChoice,
    newton: Option<&'a NewtonOptions>,
}

pub fn run(ctx: &mut Ctx, a: FitArgs) -> Result<Outcome> {
    let method = require(a.method, "method")?;
    let data = require(a.data, "data")?;
    let choice = BasisChoice::resolve(method, a.k, a.r_min, a.cutoff);
    let basis = choice.build()?;
    let newton = NewtonOptions {
        max_iter: a.max_iter.unwrap_or(50),
        grad_tol: a.grad_tol.unwrap_or(1e-8),
        ..Default::default()
    };
    let estimate = match method {
        FitMethod::Fm => fit_fm_iid(&read_iid(&data)?, &basis)?,
        FitMethod::Re => fit_re_iid(&read_iid(&data)?, &basis, &newton)?,
        FitMethod::FmTs => fit_fm_ts(&read_paths(&data)?, &basis)?,
        FitMethod::Rer => fit_rer(&read_paths(&data)?, &basis)?,
        FitMethod::Pairfm => fit_pair_potential(&read_configs(&data)?, &basis, choice.cutoff.unwrap_or_default())?,
    };
    let settings = FitSettings {
        method,
        data: &data,
        basis: &choice,
        newton: (method == FitMethod::Re).then_some(&newton),
    };
    let meta = Meta::new("fit", ctx.given_seed(), &settings)?;
    let file = FitFile {
        meta: meta_json(&meta)?,
        basis,
        cutoff: choice.cutoff,
        estimate,
    };
    if let Some(out) = &a.out {
        emit(Some(out), |w| {
            serde_json::to_writer_pretty(&mut *w, &file)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    let e = &file.estimate;
    println!("method {}  n {}  converged {}", e.method.as_str(), e.n_samples, e.converged);
    for (k, t) in e.theta.iter().enumerate() {
        println!("theta_{} {:>10}", k + 1, fmt4(*t));
    }
    for w in &e.warnings {
        eprintln!("warning: {w}");
    }
    if e.converged {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::NotConverged(format!(
            "{} did not converge after {} iterations",
            e.method.as_str(),
            e.iterations.unwrap_or(0)
        )))
    }
}
