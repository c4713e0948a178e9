//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::path::Path;
use std::time::Instant;

use common::{random_form, rel, rng};
use derham_galerkin::cli::export::{ledger_csv, trajectory_csv};
use derham_galerkin::cli::generators::random_rot_free;
use derham_galerkin::cli::manufactured::gradient_of_trig;
use derham_galerkin::cli::{execute, parse_config, run_experiment, Outcome};
use derham_galerkin::derham::{apply_d, apply_d_star, laplacian};
use derham_galerkin::galerkin::{
    run, GalerkinBasis, Parity, Solver, SolverConfig, ZeroForcing,
};
use derham_galerkin::hodge::{helmholtz_project, parametrix, project_harmonic, solve_pressure, PRESSURE_TOLERANCE};
use derham_galerkin::nonlinear::NonlinearityKind;
use derham_galerkin::spectral_grid::{pointwise_product, Lattice, ScalarField, VOLUME};
use num_complex::Complex64;
use rand::seq::SliceRandom;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn spec_text(body: &str) -> Outcome {
    execute(&parse_config(body).unwrap(), Path::new(".")).unwrap()
}

fn manufactured(dt: f64) -> Outcome {
    spec_text(&format!(
        "[solver]\nmu = 0.5\nK = 6\ndt = {dt}\nT = 0.5\nM = 60\n\
         [initial]\nkind = \"manufactured\"\nname = \"nonlinear\"\n\
         [forcing]\nkind = \"manufactured\"\nname = \"nonlinear\"\n\
         [output]\nstride = 50\n"
    ))
}

fn random_smooth(dt: f64, stride: usize) -> Outcome {
    spec_text(&format!(
        "seed = 1\n[solver]\nmu = 0.5\nK = 6\ndt = {dt}\nT = 0.5\nM = 100\n\
         [initial]\nkind = \"random-smooth\"\namplitude = 0.5\nmean = [0.3, -0.2, 0.1]\n\
         [output]\nstride = {stride}\n"
    ))
}

fn complex_identities() -> Verdict {
    let lat = Lattice::new(4, false).unwrap();
    let mut r = rng(101);
    let (mut dd, mut adj) = (0.0f64, 0.0f64);
    for q in 0..=3usize {
        for _ in 0..200 {
            let u = random_form(&lat, q, &mut r);
            if q < 2 {
                let ddu = apply_d(&apply_d(&u).unwrap()).unwrap();
                dd = dd.max(ddu.l2_norm() / u.l2_norm());
            }
            if q < 3 {
                let v = random_form(&lat, q + 1, &mut r);
                let lhs = apply_d(&u).unwrap().inner(&v);
                let rhs = u.inner(&apply_d_star(&v).unwrap());
                adj = adj.max((lhs - rhs).abs() / (u.l2_norm() * v.l2_norm()));
            }
        }
    }
    verdict(dd <= 1e-10 && adj <= 1e-10, format!("|dd u|/|u| = {dd:.2e}, adjointness = {adj:.2e} (tol 1e-10)"))
}

fn hodge_identities() -> Verdict {
    let lat = Lattice::new(4, false).unwrap();
    let mut r = rng(202);
    let mut comp = 0.0f64;
    for q in 0..=3usize {
        for _ in 0..100 {
            let u = random_form(&lat, q, &mut r);
            let target = u.sub(&project_harmonic(&u));
            let a = parametrix(&laplacian(&u)).sub(&target).l2_norm();
            let b = laplacian(&parametrix(&u)).sub(&target).l2_norm();
            comp = comp.max(a.max(b) / u.l2_norm());
        }
    }
    let (mut idem, mut sa, mut orth) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let w = random_form(&lat, 2, &mut r);
        let v = random_form(&lat, 2, &mut r);
        let pw = helmholtz_project(&w).unwrap();
        let pv = helmholtz_project(&v).unwrap();
        let n = w.l2_norm();
        idem = idem.max(helmholtz_project(&pw).unwrap().sub(&pw).l2_norm() / n);
        sa = sa.max((pw.inner(&v) - w.inner(&pv)).abs() / (n * v.l2_norm()));
        orth = orth.max(pw.inner(&w.sub(&pw)).abs() / (n * n));
    }
    let ok = comp <= 1e-12 && idem <= 1e-11 && sa <= 1e-11 && orth <= 1e-11;
    verdict(
        ok,
        format!("phi/Delta compositions {comp:.2e} (tol 1e-12); P idempotent {idem:.2e}, self-adjoint {sa:.2e}, orthogonal {orth:.2e} (tol 1e-11)"),
    )
}

fn pressure_lemma() -> Verdict {
    let lat = Lattice::new(6, false).unwrap();
    let mut r = rng(303);
    let (mut rot, mut div, mut mean) = (0.0f64, 0.0f64, 0.0f64);
    let z = lat.zero_index();
    for _ in 0..100 {
        let w = random_form(&lat, 2, &mut r);
        let f = w.sub(&helmholtz_project(&w).unwrap());
        let p = solve_pressure(&f, PRESSURE_TOLERANCE).unwrap();
        let fnorm = f.l2_norm();
        rot = rot.max(apply_d(&p).unwrap().sub(&f).l2_norm() / fnorm);
        div = div.max(apply_d_star(&p).unwrap().l2_norm() / fnorm);
        let m = p.components().iter().map(|c| c.coeffs()[z].norm_sqr()).sum::<f64>().sqrt();
        mean = mean.max(m * VOLUME.sqrt() / p.l2_norm());
    }
    let ok = rot <= 1e-10 && div <= 1e-10 && mean <= 1e-10;
    verdict(ok, format!("rot p - F {rot:.2e}, div p {div:.2e}, mean {mean:.2e} (tol 1e-10)"))
}

/// `⟨∇g·w, g⟩` with `ŵ_k = -i k ĝ_k / |k|^2`, products via `pointwise_product`.
fn cubic_oracle(g: &ScalarField) -> (f64, f64) {
    let mut pairing = 0.0;
    for a in 0..3 {
        let dg = g.map_symbol(|w| Complex64::new(0.0, w.k[a] as f64));
        let wa = g.map_symbol(|w| {
            if w.is_zero() {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -(w.k[a] as f64) / w.ksq as f64)
            }
        });
        pairing += pointwise_product(&dg, &wa).unwrap().inner(g);
    }
    let cube = pointwise_product(g, g).unwrap().inner(g);
    (pairing, cube)
}

fn cubic_identity(runs: &[&Outcome]) -> Verdict {
    let (mut ledger, mut oracle, mut oracle_vs_solver, mut cube_scale) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for o in runs {
        let traj = &o.trajectory;
        assert!(traj.config.dealias);
        for e in &traj.ledger.entries {
            let t = &e.terms;
            ledger = ledger.max(t.cubic_residual().abs() / (1.0 + t.kinetic.powf(1.5)));
        }
        for snap in &traj.snapshots {
            let g = apply_d(&snap.u).unwrap().into_components().remove(0);
            let (pairing, cube) = cubic_oracle(&g);
            let scale = 1.0 + g.l2_norm().powi(3);
            oracle = oracle.max((pairing + 0.5 * cube).abs() / scale);
            let step = traj.ledger.entries.iter().find(|e| e.step == snap.step).unwrap();
            oracle_vs_solver = oracle_vs_solver.max((pairing - step.terms.cubic).abs() / scale);
            cube_scale = cube_scale.max(cube.abs());
        }
    }
    let ok = ledger <= 1e-9 && oracle <= 1e-9 && oracle_vs_solver <= 1e-9 && cube_scale > 1e-3;
    verdict(
        ok,
        format!(
            "every step {ledger:.2e}, product oracle {oracle:.2e}, oracle vs solver {oracle_vs_solver:.2e} (tol 1e-9; max |int g^3| = {cube_scale:.2e})"
        ),
    )
}

fn transport(runs: &[&Outcome]) -> Verdict {
    let (mut ledger, mut oracle, mut h_max) = (0.0f64, 0.0f64, 0.0f64);
    for o in runs {
        let traj = &o.trajectory;
        for e in &traj.ledger.entries {
            let t = &e.terms;
            ledger = ledger.max(rel(t.transport.abs(), t.kinetic * (1.0 + t.h_abs)));
            h_max = h_max.max(t.h_abs);
        }
        let z = traj.basis.lattice().zero_index();
        for snap in &traj.snapshots {
            let g = apply_d(&snap.u).unwrap().into_components().remove(0);
            let h: Vec<f64> = snap.u.components().iter().map(|c| c.coeffs()[z].re).collect();
            let hg = g.map_symbol(|w| Complex64::new(0.0, (0..3).map(|a| h[a] * w.k[a] as f64).sum()));
            let habs = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            oracle = oracle.max(rel(hg.inner(&g).abs(), g.l2_norm_sq() * (1.0 + habs)));
        }
    }
    let ok = ledger <= 1e-11 && oracle <= 1e-11 && h_max > 0.1;
    verdict(ok, format!("every step {ledger:.2e}, oracle {oracle:.2e} (tol 1e-11; max |h| = {h_max:.2e})"))
}

fn energy_order() -> Verdict {
    let res: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| random_smooth(dt, 0).report.energy.max_abs_residual)
        .collect();
    let o1 = (res[0] / res[1]).log2();
    let o2 = (res[1] / res[2]).log2();
    verdict(
        o1.min(o2) >= 1.7,
        format!("residuals {:.3e}, {:.3e}, {:.3e}; observed orders {o1:.2}, {o2:.2} (need >= 1.7)", res[0], res[1], res[2]),
    )
}

fn heat_limit() -> Verdict {
    let mu = 1.0;
    let lat = Lattice::new(6, true).unwrap();
    let m = GalerkinBasis::available(&lat);
    let mut worst = 0.0f64;
    let modes = [[1, 0, 0], [0, 1, 1], [1, -1, 1], [2, 0, 0], [1, 2, 0], [2, -2, 1], [0, 0, 4]];
    for k in modes {
        let ksq = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        let horizon = 1.0 / (mu * ksq);
        let mut cfg = SolverConfig::new(mu, horizon, 1e-3, 6, m);
        cfg.nonlinearity.kind = NonlinearityKind::Zero;
        for parity in [Parity::Cos, Parity::Sin] {
            let u0 = gradient_of_trig(&lat, k, parity, 0.4).unwrap();
            let traj = run(&cfg, &ZeroForcing::new(&lat), &u0).unwrap();
            let exact = u0.scaled((-mu * ksq * horizon).exp());
            let u = traj.final_state().u(&traj.basis);
            worst = worst.max(u.sub(&exact).l2_norm() / exact.l2_norm());
        }
    }
    verdict(worst <= 1e-3, format!("max relative error at t = 1/(mu|k|^2) over {} modes: {worst:.2e} (tol 1e-3)", modes.len()))
}

fn manufactured_convergence(coarse: &Outcome) -> Verdict {
    let fine = manufactured(5e-4);
    let e1 = coarse.report.manufactured.as_ref().unwrap().terminal_error;
    let e2 = fine.report.manufactured.as_ref().unwrap().terminal_error;
    let ratio = e1 / e2;
    verdict(
        e1 <= 1e-4 && ratio >= 3.5,
        format!("terminal error {e1:.3e} (tol 1e-4) at dt = 1e-3, {e2:.3e} at dt = 5e-4, ratio {ratio:.2} (need >= 3.5)"),
    )
}

fn galerkin_stability() -> Verdict {
    let sizes = [50usize, 100, 200];
    let runs: Vec<Outcome> = sizes
        .iter()
        .map(|m| {
            spec_text(&format!(
                "seed = 3\n[solver]\nmu = 1.0\nK = 6\ndt = 1e-3\nT = 0.5\nM = {m}\n\
                 [initial]\nkind = \"random-analytic\"\nrate = 2.5\namplitude = 2.0\n\
                 [output]\nstride = 0\n"
            ))
        })
        .collect();
    let sup_g: Vec<f64> = runs.iter().map(|o| o.report.sup_g_l2).collect();
    let sup_dg: Vec<f64> = runs.iter().map(|o| o.report.sup_grad_g_l2).collect();
    let var = |v: &[f64]| (0..v.len() - 1).map(|i| (v[i + 1] - v[i]).abs() / v[i + 1]).fold(0.0f64, f64::max);
    let reference = &runs[2].trajectory;
    let dist: Vec<f64> = runs
        .iter()
        .map(|o| {
            o.trajectory
                .states
                .iter()
                .zip(&reference.states)
                .map(|(a, b)| a.g(&o.trajectory.basis).sub(&b.g(&reference.basis)).l2_norm())
                .fold(0.0f64, f64::max)
        })
        .collect();
    let (vg, vdg) = (var(&sup_g), var(&sup_dg));
    let monotone = dist[0] > dist[1] && dist[1] > dist[2];
    verdict(
        vg <= 0.1 && vdg <= 0.1 && monotone,
        format!(
            "sup|g| {:.4} {:.4} {:.4} (var {vg:.3}); sup|grad g| {:.4} {:.4} {:.4} (var {vdg:.3}); |g_M - g_200| {:.3e} {:.3e} {:.3e}",
            sup_g[0], sup_g[1], sup_g[2], sup_dg[0], sup_dg[1], sup_dg[2], dist[0], dist[1], dist[2]
        ),
    )
}

fn uniqueness() -> Verdict {
    let cfg = SolverConfig::new(0.5, 0.3, 2e-3, 5, 80);
    let lat = cfg.lattice().unwrap();
    let u0 = random_rot_free(&lat, 7, |k| 0.5 * k.powf(-4.0), [0.2, -0.1, 0.3]);
    let f = ZeroForcing::new(&lat);
    let solver = Solver::new(cfg.clone()).unwrap();
    let base = solver.run(&f, &u0).unwrap();

    let mut order: Vec<usize> = (0..cfg.basis_size).collect();
    order.shuffle(&mut rng(9));
    let permuted = Solver::new(cfg.clone())
        .unwrap()
        .with_basis(solver.basis().permuted(&order).unwrap())
        .unwrap()
        .run(&f, &u0)
        .unwrap();
    let ub = base.final_state().u(&base.basis);
    let up = permuted.final_state().u(&permuted.basis);
    let perm = ub.sub(&up).l2_norm() / ub.l2_norm();

    let w = random_form(&lat, 2, &mut rng(11));
    let transverse = w.sub(&helmholtz_project(&w).unwrap());
    let shifted = solver.run(&f, &u0.add(&transverse.scaled(3.0))).unwrap();
    let mut same = 0.0f64;
    for (a, b) in base.states.iter().zip(&shifted.states) {
        let d = a.c.iter().zip(&b.c).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
        same = same.max(d / a.coeff_norm());
    }
    verdict(
        perm <= 1e-9 && same <= 1e-9,
        format!("permuted basis {perm:.2e}; added transverse field {same:.2e} (tol 1e-9)"),
    )
}

fn constraints(runs: &[&Outcome]) -> Verdict {
    let mut worst = [0.0f64; 3];
    for o in runs {
        for (i, name) in ["rot_u", "div_p", "mean_g"].iter().enumerate() {
            worst[i] = worst[i].max(o.report.audit.get(name).unwrap().value);
        }
        assert!(!o.trajectory.snapshots.is_empty());
    }
    let direct = runs
        .iter()
        .flat_map(|o| o.trajectory.snapshots.iter())
        .map(|s| {
            let g = apply_d(&s.u).unwrap();
            let mean = g.as_scalar().mean().abs() * VOLUME.sqrt() / g.l2_norm().max(f64::MIN_POSITIVE);
            (apply_d_star(&s.u).unwrap().l2_norm() / s.u.l2_norm()).max(mean)
        })
        .fold(0.0f64, f64::max);
    verdict(
        worst.iter().all(|&w| w <= 1e-11) && direct <= 1e-11,
        format!("rot u {:.2e}, div p {:.2e}, mean g {:.2e}, snapshot recheck {direct:.2e} (tol 1e-11)", worst[0], worst[1], worst[2]),
    )
}

fn determinism() -> Verdict {
    let spec = parse_config(
        "seed = 42\n[solver]\nmu = 0.5\nK = 5\ndt = 2e-3\nT = 0.2\nM = 60\n\
         [initial]\nkind = \"random-smooth\"\nmean = [0.1, 0.2, -0.3]\n[output]\nstride = 20\n",
    )
    .unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run_experiment(&spec, Path::new("."), a.path()).unwrap();
    let ob = run_experiment(&spec, Path::new("."), b.path()).unwrap();
    let mut same = trajectory_csv(&oa.trajectory) == trajectory_csv(&ob.trajectory)
        && ledger_csv(&oa.trajectory.ledger) == ledger_csv(&ob.trajectory.ledger);
    for file in ["trajectory.csv", "ledger.csv", "report.json", "trajectory.json"] {
        same &= std::fs::read(a.path().join(file)).unwrap() == std::fs::read(b.path().join(file)).unwrap();
    }
    verdict(same, "trajectory.csv, ledger.csv, report.json, trajectory.json compared byte for byte".into())
}

fn main() {
    let start = Instant::now();
    let standard = manufactured(1e-3);
    let smooth = random_smooth(2e-3, 25);

    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("complex identities", Box::new(complex_identities)),
        ("hodge identities", Box::new(hodge_identities)),
        ("pressure lemma", Box::new(pressure_lemma)),
        ("cubic identity", Box::new(|| cubic_identity(&[&standard, &smooth]))),
        ("transport orthogonality", Box::new(|| transport(&[&standard, &smooth]))),
        ("energy balance order", Box::new(energy_order)),
        ("heat-limit exactness", Box::new(heat_limit)),
        ("manufactured solution", Box::new(|| manufactured_convergence(&standard))),
        ("galerkin boundedness", Box::new(galerkin_stability)),
        ("uniqueness proxies", Box::new(uniqueness)),
        ("constraint preservation", Box::new(|| constraints(&[&standard, &smooth]))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = check();
        failed += usize::from(!v.passed);
        println!(
            "criterion {:>2} {:<24} {}  {} [{:.1}s]",
            i + 1,
            name,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
