use anyhow::Result;
use cgfit::pairfm::{desk_setup, pair_potential, potential_band, write_potential_csv};
use cgfit::twoscale::{cg_invariant_density, Quadrature};
use serde::Serialize;

use crate::args::{DensityArgs, PotentialArgs};
use crate::cmd::{emit, grid, read_configs, FitFile};
use crate::config::usage;
use crate::meta::Meta;
use crate::{Ctx, Outcome};

#[derive(Serialize)]
struct DensitySettings<'a> {
    theta: &'a [f64],
    quad: Quadrature,
}

pub fn density(ctx: &mut Ctx, a: DensityArgs) -> Result<Outcome> {
    let theta = match (a.theta, &a.fit) {
        (Some(t), None) => t,
        (None, Some(path)) => FitFile::read(path)?.estimate.theta,
        _ => return Err(usage("give exactly one of --theta or --fit")),
    };
    let quad = Quadrature {
        half_width: a.half_width.unwrap_or(8.0),
        points: a.points.unwrap_or(4001),
    };
    let meta = Meta::new("export density", ctx.given_seed(), &DensitySettings { theta: &theta, quad })?;
    let d = cg_invariant_density(&theta, &quad.grid())?;
    emit(a.out.as_ref(), |w| Ok(d.write_csv(w, &meta.lines())?))?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct PotentialSettings<'a> {
    source: &'a str,
    theta: &'a [f64],
    grid: &'a [f64],
    band: Option<(&'a std::path::Path, usize, f64)>,
}

pub fn potential(ctx: &mut Ctx, a: PotentialArgs) -> Result<Outcome> {
    let reference = a.reference.unwrap_or(false);
    let (basis, theta, cutoff, source) = match (&a.fit, reference) {
        (Some(path), false) => {
            let f = FitFile::read(path)?;
            let cutoff = f.cutoff.ok_or_else(|| usage("--fit must come from `fit pairfm`"))?;
            (f.basis, f.estimate.theta, cutoff, "fit")
        }
        (None, true) => {
            let s = desk_setup(1, 0)?;
            (s.basis, s.theta_true, s.cutoff, "reference")
        }
        _ => return Err(usage("give exactly one of --fit or --reference")),
    };
    let (lo, hi) = basis.domain().ok_or_else(|| usage("pair potentials need a spline basis"))?;
    let grid = grid(a.grid.as_deref(), (lo, hi, 101))?;
    let alpha = a.alpha.unwrap_or(0.05);
    let b = a.b.unwrap_or(200);
    let seed = if a.data.is_some() { Some(ctx.seed()) } else { ctx.given_seed() };
    let settings = PotentialSettings {
        source,
        theta: &theta,
        grid: &grid,
        band: a.data.as_deref().map(|d| (d, b, alpha)),
    };
    let meta = Meta::new("export potential", seed, &settings)?;
    let u = grid
        .iter()
        .map(|&r| pair_potential(&basis, &theta, r))
        .collect::<cgfit::Result<Vec<_>>>()?;
    let band = match &a.data {
        Some(path) => {
            let configs = read_configs(path)?;
            let band = potential_band(&configs, &basis, cutoff, b, alpha, &grid, seed.unwrap_or(0))?;
            Some(band.bootstrap)
        }
        None => None,
    };
    emit(a.out.as_ref(), |w| Ok(write_potential_csv(w, &grid, &u, band.as_ref(), &meta.lines())?))?;
    Ok(Outcome::Done)
}
