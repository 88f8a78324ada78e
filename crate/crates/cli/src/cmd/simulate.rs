use anyhow::Result;
use cgfit::pairfm::{desk_setup, synth_pair_data, write_trajectory};
use cgfit::twoscale::{generate_paths, record_stride_for, sample_iid, TwoScaleParams};
use serde::Serialize;

use crate::args::{SimPairsArgs, SimTwoScaleArgs};
use crate::cmd::require;
use crate::config::usage;
use crate::meta::{write_file, Meta};
use crate::{Ctx, Outcome};

#[derive(Serialize)]
struct TwoScaleSettings {
    mode: &'static str,
    n: usize,
    paths: Option<usize>,
    steps: Option<usize>,
    eps: f64,
    h: Option<f64>,
    stride_time: Option<f64>,
    burn_in: f64,
}

pub fn twoscale(ctx: &mut Ctx, a: SimTwoScaleArgs) -> Result<Outcome> {
    let out = require(a.out, "out")?;
    let seed = ctx.seed();
    let eps = a.eps.unwrap_or(0.005);
    let params = TwoScaleParams {
        burn_in_time: a.burn_in.unwrap_or(100.0),
        ..TwoScaleParams::new(eps, seed)
    };
    params.validate()?;
    if let Some(n_paths) = a.paths {
        let steps = a.steps.unwrap_or(50_000);
        let h = a.h.unwrap_or(0.01);
        if h.is_nan() || h <= 0.0 {
            return Err(usage("--h must be positive"));
        }
        let settings = TwoScaleSettings {
            mode: "paths",
            n: n_paths * steps,
            paths: Some(n_paths),
            steps: Some(steps),
            eps,
            h: Some(h),
            stride_time: None,
            burn_in: params.burn_in_time,
        };
        let meta = Meta::new("simulate twoscale", Some(seed), &settings)?;
        let data = generate_paths(&params, n_paths, steps, record_stride_for(&params, h))?;
        write_file(&out, |w| Ok(data.write_csv(w, &meta.lines())?))?;
        meta.write_sidecar(&out)?;
        println!("wrote {n_paths} path(s) of {steps} states to {}", out.display());
    } else {
        let n = a.n.unwrap_or(500);
        let stride_time = a.stride_time.unwrap_or(5.0);
        let settings = TwoScaleSettings {
            mode: "iid",
            n,
            paths: None,
            steps: None,
            eps,
            h: None,
            stride_time: Some(stride_time),
            burn_in: params.burn_in_time,
        };
        let meta = Meta::new("simulate twoscale", Some(seed), &settings)?;
        let data = sample_iid(&params, n, stride_time, true)?;
        write_file(&out, |w| Ok(data.write_csv(w, &meta.lines())?))?;
        meta.write_sidecar(&out)?;
        println!("wrote {n} samples to {}", out.display());
    }
    Ok(Outcome::Done)
}

pub fn pairs(ctx: &mut Ctx, a: SimPairsArgs) -> Result<Outcome> {
    let out = require(a.out, "out")?;
    let seed = ctx.seed();
    let mut setup = desk_setup(a.configs.unwrap_or(200), seed)?;
    let p = &mut setup.params;
    if let Some(m) = a.particles {
        p.m = m;
    }
    if let Some(l) = a.box_length {
        p.box_length = l;
    }
    if let Some(t) = a.temperature {
        p.temperature = t;
    }
    if let Some(s) = a.force_noise {
        p.force_noise = s;
    }
    let meta = Meta::new("simulate pairs", Some(seed), &setup.params)?;
    let configs = synth_pair_data(&setup.theta_true, &setup.basis, &setup.params)?;
    write_file(&out, |w| Ok(write_trajectory(&configs, w, &meta.lines())?))?;
    meta.write_sidecar(&out)?;
    println!("wrote {} configurations to {}", configs.len(), out.display());
    Ok(Outcome::Done)
}
