//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Every tolerance is pinned here. The profiles are small ("desk scale") but
//! exercise the full pipeline: scattering data -> contour grid -> Nyström
//! operator -> Neumann series with exact-multiplier derivatives -> u.

use num_complex::Complex64;

use blowlab_core::contour::{build_grid_with_policy, GridPolicy};
use blowlab_core::kernel::KernelOperator;
use blowlab_core::scattering::{LogFamily, ProfileKind, ScatteringProfile};
use blowlab_core::series::{self, Mode};
use blowlab_core::solution::{self, u_eval_opts, EvalOptions};
use blowlab_core::verify::{self, LadderSpec};

fn unbounded_profile() -> ScatteringProfile {
    ScatteringProfile::build(
        ProfileKind::Unbounded { delta: 0.25 },
        1.0,
        0.0,
        LogFamily::none(),
        None,
    )
    .unwrap()
}

fn report(criterion: u32, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Deterministic uniform deviates for reproducible sample points.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[test]
fn criterion_01_exact_solution_residual() {
    let started = std::time::Instant::now();
    let profile = unbounded_profile();
    let mut rng = Lcg(0x5EED_0001);
    let pts: Vec<(f64, f64)> = (0..20)
        .map(|_| {
            let x = -5.0 + 10.0 * rng.next();
            let gap = 0.1 + 0.8 * rng.next();
            (x, 1.0 - gap)
        })
        .collect();
    let rep = verify::pde_residual(&profile, &pts, 1e-9).unwrap();
    let elapsed = started.elapsed();
    let pass = rep.pass(1e-6) && elapsed.as_secs() < 120;
    report(
        1,
        pass,
        &format!(
            "max relative PDE residual {:.3e} over 20 points (< 1e-6) in {:.1?} (< 2 min)",
            rep.max_rel, elapsed
        ),
    );
}

#[test]
fn criterion_02_kernel_norm_bound() {
    let profile = unbounded_profile();
    let policy = GridPolicy::for_window(0.0, 5.0);
    let mut worst = 0.0f64;
    for i in 0..5 {
        let t = 0.225 * i as f64;
        let grid = build_grid_with_policy(&profile, t, 1e-9, 2, &policy).unwrap();
        for j in 0..5 {
            let x = -5.0 + 2.5 * j as f64;
            let op = KernelOperator::assemble(&profile, &grid, x, t).unwrap();
            worst = worst.max(op.norm_est);
        }
    }
    let bound = 1.0 / profile.m_const() + 1e-10;
    report(
        2,
        worst <= bound,
        &format!("max norm_est {worst:.6e} <= 1/M + 1e-10 = {bound:.6e} over 5x5 (x,t) grid"),
    );
}

#[test]
fn criterion_03_series_term_decay() {
    let profile = unbounded_profile();
    let m = profile.m_const();
    let mut worst_ratio = 0.0f64;
    for &(x, t) in &[(0.0_f64, 0.5_f64), (2.0, 0.2), (-4.0, 0.8)] {
        let policy = GridPolicy::for_window(0.0, x.abs());
        let grid = build_grid_with_policy(&profile, t, 1e-10, 2, &policy).unwrap();
        let op = KernelOperator::assemble(&profile, &grid, x, t).unwrap();
        for (idx, sup) in series::term_sups(&op, 10).iter().enumerate() {
            worst_ratio = worst_ratio.max(sup * m.powi(idx as i32 + 1));
        }
    }
    report(
        3,
        worst_ratio <= 1.01,
        &format!("max over j<=10 of M^j sup|m_j| = {worst_ratio:.4} <= 1.01"),
    );
}

#[test]
fn criterion_04_m_inversion_symmetry() {
    let profile = unbounded_profile();
    // 100 random off-contour points, rejecting the guarded arc neighbourhood.
    let mut rng = Lcg(0x5EED_0004);
    let mut ks = Vec::new();
    while ks.len() < 100 {
        let r = 0.05 * (20.0f64 / 0.05).powf(rng.next());
        let th = 2.0 * std::f64::consts::PI * rng.next();
        let k = Complex64::from_polar(r, th);
        let inv = Complex64::new(1.0, 0.0) / k;
        if verify::distance_to_singular_arcs(k, 60.0) > 0.05
            && verify::distance_to_singular_arcs(inv, 60.0) > 0.05
        {
            ks.push(k);
        }
    }
    let rep = verify::symmetry_audit(&profile, 0.3, 0.5, &ks, 1e-9).unwrap();
    let pass = rep.n_evaluated == 100
        && rep.max_pair_diff < 1e-9
        && rep.far_dev_large < 1e-5
        && rep.far_dev_small < 1e-5;
    report(
        4,
        pass,
        &format!(
            "max |m(k)-m(1/k)| = {:.3e} over {} points (< 1e-9); |m-1| at 1e-6/1e6 = {:.3e}/{:.3e} (< 1e-5)",
            rep.max_pair_diff, rep.n_evaluated, rep.far_dev_small, rep.far_dev_large
        ),
    );
}

#[test]
fn criterion_05_blowup_exponent_recovery() {
    let ladder = LadderSpec::new(1e-1, 1e-6, 11);
    let p0 = unbounded_profile();
    let fit0 = verify::fit_blowup(&p0, 0, 0, &ladder, true, 1e-9).unwrap();
    let plog = ScatteringProfile::build(
        ProfileKind::Unbounded { delta: 0.25 },
        1.0,
        0.0,
        LogFamily::new(vec![1], vec![1.0], 0).unwrap(),
        None,
    )
    .unwrap();
    let fit_corr = verify::fit_blowup(&plog, 0, 0, &ladder, true, 1e-9).unwrap();
    let fit_raw = verify::fit_blowup_lenient(&plog, 0, 0, &ladder, false, 1e-9).unwrap();
    let pass = (fit0.delta_hat - 0.25).abs() <= 0.02
        && (fit_corr.delta_hat - 0.25).abs() <= 0.02
        && (fit_raw.delta_hat - 0.25).abs() > 0.02;
    report(
        5,
        pass,
        &format!(
            "delta_hat = {:.4} (p=0), {:.4} (p=1 corrected) within 0.25 +/- 0.02; uncorrected {:.4} drifts",
            fit0.delta_hat, fit_corr.delta_hat, fit_raw.delta_hat
        ),
    );
}

#[test]
fn criterion_06_leading_term_envelope() {
    let profile = unbounded_profile();
    let half_width = 4.0 * std::f64::consts::PI / (profile.m_const() - 1.0);
    let mut detail = String::new();
    let mut pass = true;
    for &gap in &[1e-5, 10f64.powf(-5.5), 1e-6] {
        let t = 1.0 - gap;
        let opts = EvalOptions {
            policy: Some(GridPolicy::for_window(0.0, 0.0)),
            ..Default::default()
        };
        let s = u_eval_opts(&profile, 0.0, t, 0, 1e-9, &opts).unwrap();
        let pred = solution::asymptotic_prediction(&profile, t, 0, 0).unwrap();
        let ratio = s.value(0, 0) / pred;
        let e = &s.err[&(0, 0)];
        let slack = (e.trunc + e.quad) / pred.abs();
        pass &= (ratio - 1.0).abs() <= half_width + slack;
        detail.push_str(&format!("T-t={gap:.1e}: ratio={ratio:.4}; "));
    }
    report(
        6,
        pass,
        &format!("{detail}all within 1 +/- (4pi/(M-1) = {half_width:.3} + error budget)"),
    );
}

#[test]
fn criterion_07_wave_breaking() {
    let profile = ScatteringProfile::build(
        ProfileKind::DerivativeBlowup { q: 0, delta: 0.3 },
        1.0,
        0.0,
        LogFamily::none(),
        None,
    )
    .unwrap();
    // du/dx blows up at rate delta = 0.30 with the predicted sign.
    let fit = verify::fit_blowup(&profile, 1, 0, &LadderSpec::new(1e-1, 1e-6, 11), true, 1e-9)
        .unwrap();
    let fit_ok = (fit.delta_hat - 0.30).abs() <= 0.02 && fit.sign_ok;

    // sup |u| over the validated grid stays bounded along a 12-rung ladder
    // down to T-t = 1e-12; off-center cells are gated by the grid budget.
    let xs = [0.0_f64, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0];
    let gaps: Vec<f64> = (1..=12).map(|i| 10f64.powi(-i)).collect();
    let mut running_sup = 0.0f64;
    let mut sups = Vec::new();
    for &gap in &gaps {
        let t = 1.0 - gap;
        let mut evaluated_center = false;
        for &x in &xs {
            let mut policy = GridPolicy::for_window(0.0, x.abs());
            policy.max_ordinates = 1500;
            let opts = EvalOptions { policy: Some(policy), ..Default::default() };
            match u_eval_opts(&profile, x, t, 0, 1e-7, &opts) {
                Ok(s) => {
                    running_sup = running_sup.max(s.value(0, 0).abs());
                    if x == 0.0 {
                        evaluated_center = true;
                    }
                }
                Err(blowlab_core::Error::Budget(_)) => {} // gated rung/cell
                Err(e) => panic!("unexpected evaluation error at (x={x}, gap={gap}): {e}"),
            }
        }
        assert!(evaluated_center, "x0 must be evaluable at every rung");
        sups.push(running_sup);
    }
    let n = sups.len();
    let variation = (sups[n - 1] - sups[n - 3]) / sups[n - 1];
    let sup_ok = variation.abs() < 0.01;
    report(
        7,
        fit_ok && sup_ok,
        &format!(
            "du/dx exponent {:.4} (0.30 +/- 0.02), sign {}; running sup |u| = {:.5} with {:.3}% variation over last three rungs (< 1%)",
            fit.delta_hat,
            if fit.sign_ok { "matches" } else { "MISMATCH" },
            sups[n - 1],
            100.0 * variation
        ),
    );
}

#[test]
fn criterion_08_derivative_hierarchy() {
    let profile = ScatteringProfile::build(
        ProfileKind::DerivativeBlowup { q: 2, delta: 0.2 },
        1.0,
        0.0,
        LogFamily::none(),
        None,
    )
    .unwrap();
    let opts = EvalOptions {
        policy: Some(GridPolicy::for_window(0.0, 0.0)),
        ..Default::default()
    };
    // Bounded pairs q1+2q2 <= 2: finite at t = T without error, continuous.
    let s_cap = u_eval_opts(&profile, 0.0, 1.0, 2, 5e-4, &opts).unwrap();
    let s_near = u_eval_opts(&profile, 0.0, 1.0 - 1e-8, 2, 1e-7, &opts).unwrap();
    let mut bounded_ok = true;
    let mut max_jump = 0.0f64;
    for (&pair, &v_cap) in &s_cap.derivs {
        bounded_ok &= v_cap.is_finite();
        let v_near = s_near.value(pair.0, pair.1);
        let jump = (v_cap - v_near).abs() / (1.0 + v_cap.abs());
        max_jump = max_jump.max(jump);
        bounded_ok &= jump < 0.02;
    }
    // Bounded along the ladder as well.
    for &gap in &[1e-2, 1e-4, 1e-6] {
        let s = u_eval_opts(&profile, 0.0, 1.0 - gap, 2, 1e-7, &opts).unwrap();
        for (_, v) in &s.derivs {
            bounded_ok &= v.is_finite() && v.abs() < 10.0;
        }
    }
    // Blow-up pairs q1+2q2 = 3 fit the exponent 0.20 +/- 0.02.
    let ladder = LadderSpec::new(1e-1, 1e-6, 11);
    let fit30 = verify::fit_blowup(&profile, 3, 0, &ladder, true, 1e-9).unwrap();
    let fit11 = verify::fit_blowup(&profile, 1, 1, &ladder, true, 1e-9).unwrap();
    let fits_ok = (fit30.delta_hat - 0.2).abs() <= 0.02
        && (fit11.delta_hat - 0.2).abs() <= 0.02
        && fit30.sign_ok
        && fit11.sign_ok;
    report(
        8,
        bounded_ok && fits_ok,
        &format!(
            "orders <= 2 finite at t=T (max continuity jump {:.2}%); order-3 exponents {:.4} (3,0) and {:.4} (1,1) within 0.20 +/- 0.02",
            100.0 * max_jump,
            fit30.delta_hat,
            fit11.delta_hat
        ),
    );
}

#[test]
fn criterion_09_oracle_equivalence() {
    let profile = unbounded_profile();
    let (x, t) = (0.4, 0.5);
    let policy = GridPolicy::for_window(0.0, 1.0);
    let grid = build_grid_with_policy(&profile, t, 1e-10, 3, &policy).unwrap();
    let op = KernelOperator::assemble(&profile, &grid, x, t).unwrap();

    // (a) series terms vs independent nested tensor quadrature, j <= 3.
    let mut tensor_rel = 0.0f64;
    for j in 1..=3 {
        let oracle = verify::nested_tensor_m1_term(&profile, x, t, j).unwrap();
        let term = verify::series_m1_term(&op, j);
        tensor_rel = tensor_rel.max((term - oracle).norm() / oracle.norm());
    }

    // (b) derivative recursion vs centered finite differences.
    let h = 1e-4;
    let m1_at = |xx: f64, tt: f64| {
        let grid_t = build_grid_with_policy(&profile, 0.5 + 2.0 * h, 1e-10, 3, &policy).unwrap();
        let opx = KernelOperator::assemble(&profile, &grid_t, xx, tt).unwrap();
        series::m1_series(&opx, Mode::Direct).unwrap().value
    };
    let d10 = series::derivative_m1(&op, 1, 0, Mode::Direct).unwrap().value;
    let fd10 = (m1_at(x + h, t) - m1_at(x - h, t)) / (2.0 * h);
    let d01 = series::derivative_m1(&op, 0, 1, Mode::Direct).unwrap().value;
    let fd01 = (m1_at(x, t + h) - m1_at(x, t - h)) / (2.0 * h);
    let fd_rel = ((d10 - fd10).norm() / d10.norm()).max((d01 - fd01).norm() / d01.norm());

    // (c) explicit leading integral vs the j = 1 Nyström term.
    let opts = EvalOptions { mode: Some(Mode::Neumann { jmax: 1 }), ..Default::default() };
    let mut lead_rel = 0.0f64;
    for &(xx, tt) in &[(0.0, 0.5), (1.3, 0.3), (-2.0, 0.7)] {
        let s = u_eval_opts(&profile, xx, tt, 1, 1e-10, &opts).unwrap();
        for (&pair, &lead) in &s.leading {
            let j1 = s.value(pair.0, pair.1);
            lead_rel = lead_rel.max((j1 - lead).abs() / (1.0 + lead.abs()));
        }
    }
    let pass = tensor_rel < 1e-9 && fd_rel < 1e-6 && lead_rel < 1e-9;
    report(
        9,
        pass,
        &format!(
            "tensor j<=3 rel {tensor_rel:.3e} (< 1e-9); derivative FD rel {fd_rel:.3e} (< 1e-6); leading vs j=1 {lead_rel:.3e} (< 1e-9)"
        ),
    );
}

#[test]
fn criterion_10_degenerate_closure() {
    let z = ScatteringProfile::zero(1.0, 0.0);
    let val = z.validate();
    let cells = solution::u_grid(&z, &[-2.0, 0.0, 3.0], &[0.2, 0.8, 1.0], 1, 1e-8);
    let all_zero = cells.iter().all(|c| {
        c.error.is_none()
            && c.sample.as_ref().unwrap().derivs.values().all(|&v| v == 0.0)
    });
    let rep = verify::pde_residual(&z, &[(0.0, 0.4), (1.5, 0.9)], 1e-8).unwrap();
    let residual_zero = rep.points.iter().all(|p| p.residual == 0.0 && p.error.is_none());
    let sym = verify::symmetry_audit(
        &z,
        0.0,
        0.5,
        &[Complex64::new(0.9, 0.8), Complex64::new(-1.5, 0.7)],
        1e-9,
    )
    .unwrap();
    let pass = val.pass()
        && all_zero
        && residual_zero
        && sym.max_pair_diff == 0.0
        && sym.far_dev_large == 0.0;
    report(
        10,
        pass,
        "f1 = 0 profile: u = 0 on the grid, PDE residual exactly 0, all reports pass trivially",
    );
}
