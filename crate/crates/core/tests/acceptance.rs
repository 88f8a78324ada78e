//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts, so a failing criterion does not hide the others.

use cgfit::basis::BasisSet;
use cgfit::dataset::{IidDataset, TimeSeriesDataset};
use cgfit::estimators::{
    fit_fm_iid, fit_fm_ts, fit_re_iid, fit_rer, re_objective, NewtonOptions,
};
use cgfit::linalg::{solve_normal_equations, LinearSystem};
use cgfit::pairfm::{
    desk_setup, fit_pair_potential, neighbor_pairs, neighbor_pairs_brute, pair_forces, pair_potential,
    potential_band, synth_pair_data, ParticleConfig,
};
use cgfit::rng::{derive_seed, stream_rng};
use cgfit::twoscale::{
    cg_invariant_density, generate_paths, record_stride_for, sample_iid, Quadrature, TwoScaleParams, THETA_STAR,
};
use cgfit::uq::{
    batch_means_covariance, bootstrap, f1_f2_divergence, fisher_f1_iid, fm_fisher_pair, jackknife,
    path_fisher_pair, re_fisher_pair, sandwich_ci_iid, sandwich_ci_ts,
};
use cgfit::validate::{coverage_experiment, CoverageSpec, DriftEstimator, IntervalOptions};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 0x5EED_2024;
const EPS: f64 = 0.005;

fn report(id: u32, ok: bool, detail: String) {
    println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn monomial5() -> BasisSet {
    BasisSet::monomial(5).unwrap()
}

fn stationary_path(seed: u64, n_t: usize) -> TimeSeriesDataset {
    let p = TwoScaleParams::new(EPS, seed);
    generate_paths(&p, 1, n_t, record_stride_for(&p, 0.01)).unwrap()
}

#[test]
fn criterion_01_two_scale_fm_n500() {
    let basis = monomial5();
    let runs = 20;
    let mut good = 0;
    let mut theta2 = Vec::new();
    for i in 0..runs {
        let data = sample_iid(&TwoScaleParams::new(EPS, derive_seed(SEED, i)), 500, 5.0, true).unwrap();
        let est = fit_fm_iid(&data, &basis).unwrap();
        let pair = fm_fisher_pair(&est.theta, &data, &basis).unwrap();
        let ci = sandwich_ci_iid(&est.theta, &pair, data.len(), 0.05).unwrap();
        let t2 = est.theta[1];
        theta2.push(t2);
        if (-1.25..=-0.75).contains(&t2) && ci.contains(1, -1.0) {
            good += 1;
        }
    }
    let ok = good as f64 >= 0.9 * runs as f64;
    let mean = theta2.iter().sum::<f64>() / runs as f64;
    report(1, ok, format!("{good}/{runs} runs in band with CI containing -1 (mean theta2 {mean:.4})"));
    assert!(ok);
}

#[test]
fn criterion_02_rer_single_path() {
    let basis = monomial5();
    let data = stationary_path(derive_seed(SEED, 100), 50_000);
    let est = fit_rer(&data, &basis).unwrap();
    let pair = path_fisher_pair(&est.theta, &data, &basis, None).unwrap();
    let ci = sandwich_ci_ts(&est.theta, &pair.f1, &pair.f2, data.path_len(0) - 1, 0.05).unwrap();
    let t2 = est.theta[1];
    let ok = (-1.15..=-0.85).contains(&t2) && ci.contains(1, -1.0);
    report(
        2,
        ok,
        format!("theta2 {t2:.4}, CI [{:.4}, {:.4}]", ci.lower[1], ci.upper[1]),
    );
    assert!(ok);
}

#[test]
fn criterion_03_coverage() {
    let run = |n: usize, alpha: f64, stream: u64| {
        coverage_experiment(&CoverageSpec {
            estimator: DriftEstimator::Fm,
            n,
            trials: 200,
            master_seed: derive_seed(SEED, stream),
            options: IntervalOptions { alpha, ..Default::default() },
            ..Default::default()
        })
        .unwrap()
    };
    let c500 = run(500, 0.05, 300);
    let c50 = run(50, 0.10, 301);
    let ok500 = (0.90..=0.99).contains(&c500.mean_coverage);
    let ok50 = (0.82..=0.96).contains(&c50.mean_coverage);
    report(
        3,
        ok500 && ok50,
        format!(
            "N=500 95%: {:.4} {:?}; N=50 90%: {:.4} {:?}",
            c500.mean_coverage, c500.per_param_coverage, c50.mean_coverage, c50.per_param_coverage
        ),
    );
    assert!(ok500 && ok50);
}

#[test]
fn criterion_04_variance_methods_agree() {
    let basis = monomial5();
    let data = sample_iid(&TwoScaleParams::new(EPS, derive_seed(SEED, 400)), 200, 5.0, true).unwrap();
    let est = fit_fm_iid(&data, &basis).unwrap();
    let fit = |d: &IidDataset| fit_fm_iid(d, &basis).map(|e| e.theta);
    let v_jack = jackknife(&data, fit, 0.05).unwrap().variance[1];
    let v_boot = bootstrap(&data, fit, 1000, derive_seed(SEED, 401)).unwrap().variance()[1];
    let pair = fm_fisher_pair(&est.theta, &data, &basis).unwrap();
    let v_asym = sandwich_ci_iid(&est.theta, &pair, data.len(), 0.05).unwrap().variance.unwrap()[1];
    let ratio = |a: f64, b: f64| a.max(b) / a.min(b);
    let ok = ratio(v_jack, v_boot) <= 1.25 && ratio(v_jack, v_asym) <= 2.0 && ratio(v_boot, v_asym) <= 2.0;
    report(
        4,
        ok,
        format!("jackknife {v_jack:.5}, bootstrap {v_boot:.5}, asymptotic {v_asym:.5}"),
    );
    assert!(ok);
}

#[test]
fn criterion_05_rer_close_to_fm_ts() {
    let basis = monomial5();
    let data = stationary_path(derive_seed(SEED, 100), 50_000);
    let rer = fit_rer(&data, &basis).unwrap();
    let fmts = fit_fm_ts(&data, &basis).unwrap();
    let gap = rer.theta.iter().zip(&fmts.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok = gap < 0.15;
    report(
        5,
        ok,
        format!("sup gap {gap:.4} (theta2 rer {:.4}, fm-ts {:.4})", rer.theta[1], fmts.theta[1]),
    );
    assert!(ok);
}

fn dense_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs())).unwrap();
        a.swap_rows(c, p);
        inv.swap_rows(c, p);
        let d = a[(c, c)];
        for j in 0..n {
            a[(c, j)] /= d;
            inv[(c, j)] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[(r, c)];
                for j in 0..n {
                    a[(r, j)] -= f * a[(c, j)];
                    inv[(r, j)] -= f * inv[(c, j)];
                }
            }
        }
    }
    inv
}

fn random_config(rng: &mut impl Rng, m: usize, l: f64) -> ParticleConfig {
    let pos = (0..m)
        .map(|_| [rng.random_range(0.0..l), rng.random_range(0.0..l), rng.random_range(0.0..l)])
        .collect();
    ParticleConfig::new(pos, vec![[0.0; 3]; m], l).unwrap()
}

#[test]
fn criterion_06_oracle_equivalences() {
    let mut rng = stream_rng(SEED, 600);

    // (a) jackknife of the mean is s²/N
    let mut worst_a = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..12);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let jk = jackknife(&xs, |d: &Vec<f64>| Ok(vec![d.iter().sum::<f64>() / d.len() as f64]), 0.05).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let s2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        worst_a = worst_a.max((jk.variance[0] - s2 / n as f64).abs() / (s2 / n as f64));
    }
    let ok_a = worst_a < 1e-12;

    // (b) normal equations against a Gauss–Jordan inverse
    let mut worst_b = 0.0f64;
    for _ in 0..50 {
        let k = rng.random_range(2..9);
        let a = DMatrix::from_fn(3 * k, k, |_, _| rng.random_range(-1.0..1.0));
        let gram = a.transpose() * &a + DMatrix::identity(k, k) * 0.05;
        let moment = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
        let got = solve_normal_equations(&LinearSystem { gram: gram.clone(), moment: moment.clone(), n_rows: 3 * k })
            .unwrap();
        worst_b = worst_b.max((got - dense_inverse(&gram) * &moment).amax());
    }
    let ok_b = worst_b < 1e-10;

    // (c) cell-list neighbors against all pairs on 50-particle configurations
    let mut ok_c = true;
    for _ in 0..20 {
        let l = rng.random_range(3.0..6.0);
        let cfg = random_config(&mut rng, 50, l);
        let cutoff = rng.random_range(0.5..l / 2.0);
        let fast = neighbor_pairs(&cfg, cutoff).unwrap();
        let slow = neighbor_pairs_brute(&cfg, cutoff).unwrap();
        let key = |p: &cgfit::pairfm::Pair| (p.i, p.j);
        ok_c &= fast.pairs.iter().map(key).eq(slow.pairs.iter().map(key))
            && fast.pairs.iter().zip(&slow.pairs).all(|(a, b)| (a.r - b.r).abs() < 1e-14);
    }

    // (d) noiseless span recovery
    let basis = monomial5();
    let theta = [0.3, -1.2, 0.1, -0.4, 0.02];
    let xs: Vec<f64> = (0..400).map(|_| rng.random_range(-2.0..2.0)).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| basis.eval_model(&theta, x).unwrap()).collect();
    let est = fit_fm_iid(&IidDataset::scalar(xs, Some(fs)).unwrap(), &basis).unwrap();
    let drift_err = est.theta.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let pb = BasisSet::anchored_cubic_bspline(12, 0.3, 1.4).unwrap();
    let pt: Vec<f64> = (0..pb.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let configs: Vec<ParticleConfig> = (0..10)
        .map(|_| {
            // jittered 4x4x4 lattice keeps every separation above 0.32
            let pos = (0..64)
                .map(|i| {
                    let site = [i % 4, (i / 4) % 4, i / 16];
                    site.map(|s| 0.8 * s as f64 + 0.4 + rng.random_range(-0.24..0.24))
                })
                .collect();
            let c = ParticleConfig::new(pos, vec![[0.0; 3]; 64], 3.2).unwrap();
            let f = pair_forces(&c, &pb, &pt, 1.4).unwrap();
            c.with_forces(f).unwrap()
        })
        .collect();
    let pest = fit_pair_potential(&configs, &pb, 1.4).unwrap();
    let pair_err = pest.theta.iter().zip(&pt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let ok_d = drift_err < 1e-10 && pair_err < 1e-8;

    let ok = ok_a && ok_b && ok_c && ok_d;
    report(
        6,
        ok,
        format!(
            "(a) rel err {worst_a:.1e}; (b) {worst_b:.1e}; (c) {ok_c}; (d) drift {drift_err:.1e}, pair {pair_err:.1e}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_07_numerical_analysis() {
    let mut rng = stream_rng(SEED, 700);

    // partition of unity and derivatives of the spline bases
    let mut pu = 0.0f64;
    let mut deriv = 0.0f64;
    for k in [4usize, 10, 30] {
        for b in [
            BasisSet::cubic_bspline(k, 0.35, 1.4).unwrap(),
            BasisSet::linear_bspline(k, 0.35, 1.4).unwrap(),
        ] {
            for _ in 0..200 {
                let x = rng.random_range(0.35..1.4);
                pu = pu.max((b.eval(x).unwrap().iter().sum::<f64>() - 1.0).abs());
            }
        }
        let b = BasisSet::cubic_bspline(k, 0.35, 1.4).unwrap();
        for _ in 0..200 {
            let x = rng.random_range(0.36..1.39);
            let h = 1e-6;
            let d = b.eval_deriv(x).unwrap();
            let (p, m) = (b.eval(x + h).unwrap(), b.eval(x - h).unwrap());
            let scale = d.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            for j in 0..k {
                deriv = deriv.max(((p[j] - m[j]) / (2.0 * h) - d[j]).abs() / scale);
            }
        }
    }
    let m = BasisSet::monomial(5).unwrap();
    for _ in 0..200 {
        let x = rng.random_range(-2.0..2.0);
        let h = 1e-6;
        let d = m.eval_deriv(x).unwrap();
        let (p, q) = (m.eval(x + h).unwrap(), m.eval(x - h).unwrap());
        for j in 0..5 {
            deriv = deriv.max(((p[j] - q[j]) / (2.0 * h) - d[j]).abs() / d[j].abs().max(1.0));
        }
    }

    // F̂₁ against the finite-difference Hessian of the RE objective
    let quad = Quadrature::default();
    let theta = [0.1, -1.2, 0.05, -0.3, 0.0];
    let xs: Vec<f64> = (0..300).map(|_| 0.7 * rng.sample::<f64, _>(StandardNormal)).collect();
    let data = IidDataset::scalar(xs, None).unwrap();
    let f1 = fisher_f1_iid(&theta, &quad).unwrap();
    let h = 1e-4;
    let obj = |t: &[f64]| re_objective(t, &data, &quad).unwrap();
    let mut hess_err = 0.0f64;
    for a in 0..5 {
        for b in 0..5 {
            let shifted = |da: f64, db: f64| {
                let mut t = theta.to_vec();
                t[a] += da;
                t[b] += db;
                obj(&t)
            };
            let fd = (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h);
            hess_err = hess_err.max((-fd - f1[(a, b)]).abs() / f1[(a, b)].abs().max(1.0));
        }
    }

    // batch means on AR(1): long-run variance 1/(1-ρ)² for unit innovations
    let rho = 0.6;
    let mut s = 0.0;
    let scores: Vec<DVector<f64>> = (0..100_000)
        .map(|_| {
            s = rho * s + rng.sample::<f64, _>(StandardNormal);
            DVector::from_element(1, s)
        })
        .collect();
    let bm = batch_means_covariance(&scores, None).unwrap()[(0, 0)];
    let target = 1.0 / (1.0f64 - rho).powi(2);
    let bm_rel = (bm - target).abs() / target;

    let ok = pu < 1e-12 && deriv < 1e-5 && hess_err < 1e-4 && bm_rel < 0.3;
    report(
        7,
        ok,
        format!(
            "partition {pu:.1e}, derivative {deriv:.1e}, F1 vs Hessian {hess_err:.1e}, batch means rel err {bm_rel:.3}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_well_specified_fisher() {
    let quad = Quadrature::default();
    let density = cg_invariant_density(&THETA_STAR, &quad.grid()).unwrap();
    let xs = density.sample(&mut stream_rng(SEED, 800), 100_000);
    let data = IidDataset::scalar(xs, None).unwrap();
    let basis = monomial5();
    let est = fit_re_iid(&data, &basis, &NewtonOptions::default()).unwrap();
    let pair = re_fisher_pair(&est.theta, &data, &quad).unwrap();
    let d = f1_f2_divergence(&pair);
    let ok = d < 0.1;
    report(8, ok, format!("divergence {d:.4} (RE converged: {})", est.converged));
    assert!(ok);
}

#[test]
fn criterion_09_pair_potential_uq() {
    let grid: Vec<f64> = (0..=100).map(|i| 0.4 + 0.01 * i as f64).collect();
    let window_mean = |g: &[f64], v: &[f64], lo: f64, hi: f64| {
        let sel: Vec<f64> = g.iter().zip(v).filter(|(r, _)| (lo..=hi).contains(*r)).map(|(_, s)| *s).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let mut mean_std = Vec::new();
    let mut last = None;
    for (i, n) in [30usize, 100, 200].into_iter().enumerate() {
        let setup = desk_setup(n, derive_seed(SEED, 900 + i as u64)).unwrap();
        let configs = synth_pair_data(&setup.theta_true, &setup.basis, &setup.params).unwrap();
        let band = potential_band(
            &configs,
            &setup.basis,
            setup.cutoff,
            200,
            0.05,
            &grid,
            derive_seed(SEED, 910 + i as u64),
        )
        .unwrap();
        mean_std.push(band.bootstrap.std.iter().sum::<f64>() / grid.len() as f64);
        last = Some((setup, band));
    }
    let (setup, band) = last.unwrap();
    let std = &band.bootstrap.std;
    let near = window_mean(&grid, std, 0.4, 0.7);
    let far = window_mean(&grid, std, 1.0, 1.3);
    let inside = grid
        .iter()
        .enumerate()
        .filter(|&(i, &r)| band.bootstrap.contains(i, pair_potential(&setup.basis, &setup.theta_true, r).unwrap()))
        .count() as f64
        / grid.len() as f64;
    let ok = near > far && mean_std[0] > mean_std[1] && mean_std[1] > mean_std[2] && inside >= 0.95;
    report(
        9,
        ok,
        format!(
            "STD [0.4,0.7] {near:.5} vs [1.0,1.3] {far:.5}; mean STD N=30/100/200 {:.5}/{:.5}/{:.5}; generator inside band at {:.3}",
            mean_std[0], mean_std[1], mean_std[2], inside
        ),
    );
    assert!(ok);
}

fn pipeline_bytes() -> Vec<u8> {
    let mut out = Vec::new();
    let basis = BasisSet::monomial(3).unwrap();
    let p = TwoScaleParams { burn_in_time: 5.0, ..TwoScaleParams::new(EPS, derive_seed(SEED, 1000)) };
    let data = sample_iid(&p, 150, 1.0, true).unwrap();
    data.write_csv(&mut out, &[]).unwrap();
    let est = fit_fm_iid(&data, &basis).unwrap();
    let reps = bootstrap(&data, |d: &IidDataset| fit_fm_iid(d, &basis).map(|e| e.theta), 50, 3).unwrap();
    cgfit::uq::bootstrap_percentile_ci(&est.theta, &reps, 0.05).unwrap().write_csv(&mut out, &[]).unwrap();
    let paths = generate_paths(&p, 3, 2_000, record_stride_for(&p, 0.01)).unwrap();
    paths.write_csv(&mut out, &[]).unwrap();
    let fit = |d: &TimeSeriesDataset| fit_rer(d, &basis).map(|e| e.theta);
    jackknife(&paths, fit, 0.05).unwrap().report.write_csv(&mut out, &[]).unwrap();
    let cov = coverage_experiment(&CoverageSpec {
        n: 40,
        trials: 20,
        burn_in_time: 5.0,
        stride_time: 1.0,
        theta_star: THETA_STAR[..3].to_vec(),
        master_seed: derive_seed(SEED, 1001),
        ..Default::default()
    })
    .unwrap();
    cov.write_csv(&mut out, &[]).unwrap();
    let setup = desk_setup(12, derive_seed(SEED, 1002)).unwrap();
    let configs = synth_pair_data(&setup.theta_true, &setup.basis, &setup.params).unwrap();
    cgfit::pairfm::write_trajectory(&configs, &mut out, &[]).unwrap();
    let grid: Vec<f64> = (0..20).map(|i| 0.45 + 0.04 * i as f64).collect();
    let band = potential_band(&configs, &setup.basis, setup.cutoff, 30, 0.05, &grid, 4).unwrap();
    band.bootstrap.write_csv(&mut out, &[]).unwrap();
    out
}

#[test]
fn criterion_10_determinism() {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(pipeline_bytes)
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    let ok = a == b && a == c;
    report(10, ok, format!("{} bytes, identical across reruns and 1/4 threads: {ok}", a.len()));
    assert!(ok);
}
