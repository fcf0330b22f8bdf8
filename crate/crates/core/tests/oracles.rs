//! Independent-oracle cross checks beyond the acceptance gate: every integral
//! is computed two ways (Nyström chain vs nested tensor quadrature, series
//! j = 1 vs explicit formula, recursion vs finite differences, gamma vs
//! quadrature already covered in unit tests).

use blowlab_core::contour::{build_grid_with_policy, GridPolicy};
use blowlab_core::kernel::KernelOperator;
use blowlab_core::scattering::{LogFamily, ProfileKind, ScatteringProfile};
use blowlab_core::series::{self, Mode};
use blowlab_core::solution::{self, EvalOptions};
use blowlab_core::verify;

fn profile() -> ScatteringProfile {
    ScatteringProfile::build(
        ProfileKind::Unbounded { delta: 0.25 },
        1.0,
        0.0,
        LogFamily::none(),
        None,
    )
    .unwrap()
}

#[test]
fn tensor_oracle_matches_series_terms_off_center() {
    let p = profile();
    let (x, t) = (-1.7, 0.35);
    let policy = GridPolicy::for_window(0.0, 2.0);
    let grid = build_grid_with_policy(&p, t, 1e-10, 3, &policy).unwrap();
    let op = KernelOperator::assemble(&p, &grid, x, t).unwrap();
    for j in 1..=3 {
        let oracle = verify::nested_tensor_m1_term(&p, x, t, j).unwrap();
        let term = verify::series_m1_term(&op, j);
        let rel = (term - oracle).norm() / oracle.norm();
        assert!(rel < 1e-9, "j = {j}: rel = {rel:.3e}");
    }
}

#[test]
fn tensor_oracle_matches_derivative_blowup_profile() {
    let p = ScatteringProfile::build(
        ProfileKind::DerivativeBlowup { q: 0, delta: 0.3 },
        1.0,
        0.5,
        LogFamily::none(),
        None,
    )
    .unwrap();
    let (x, t) = (0.9, 0.6);
    let policy = GridPolicy::for_window(0.5, 1.0);
    let grid = build_grid_with_policy(&p, t, 1e-12, 3, &policy).unwrap();
    let op = KernelOperator::assemble(&p, &grid, x, t).unwrap();
    for j in 1..=2 {
        let oracle = verify::nested_tensor_m1_term(&p, x, t, j).unwrap();
        let term = verify::series_m1_term(&op, j);
        let rel = (term - oracle).norm() / oracle.norm();
        assert!(rel < 1e-9, "j = {j}: rel = {rel:.3e}");
    }
}

#[test]
fn u_derivatives_match_finite_differences_of_u() {
    // The whole solution-level tower: du/dx and du/dt from the recursion vs
    // centered differences of u itself.
    let p = profile();
    let h = 1e-4;
    let opts = EvalOptions::default();
    let u_at = |x: f64, t: f64| {
        u_eval_guarded(&p, x, t, &opts)
    };
    let s = solution::u_eval(&p, 0.8, 0.5, 2, 1e-10).unwrap();
    let ux = s.value(1, 0);
    let fd_x = (u_at(0.8 + h, 0.5) - u_at(0.8 - h, 0.5)) / (2.0 * h);
    assert!((ux - fd_x).abs() < 1e-6 * ux.abs().max(1e-3), "{ux} vs {fd_x}");
    let ut = s.value(0, 1);
    let fd_t = (u_at(0.8, 0.5 + h) - u_at(0.8, 0.5 - h)) / (2.0 * h);
    assert!((ut - fd_t).abs() < 1e-5 * ut.abs().max(1e-3), "{ut} vs {fd_t}");

    fn u_eval_guarded(p: &ScatteringProfile, x: f64, t: f64, opts: &EvalOptions) -> f64 {
        solution::u_eval_opts(p, x, t, 0, 1e-10, opts).unwrap().value(0, 0)
    }
}

#[test]
fn leading_formula_on_independent_grid() {
    // u_leading built on its own grid agrees with the j = 1 series term taken
    // from a differently-policied operator.
    let p = profile();
    let (x, t) = (1.1, 0.45);
    let lead = solution::u_leading(&p, x, t, 0, 0, 1e-11).unwrap();
    let policy = GridPolicy { nodes_per_panel: 24, panel_ratio: 1.35, ..GridPolicy::for_window(0.0, 2.0) };
    let grid = build_grid_with_policy(&p, t, 1e-11, 1, &policy).unwrap();
    let op = KernelOperator::assemble(&p, &grid, x, t).unwrap();
    // u's j=1 term = -i sqrt(3) * d/dx m_1^{(1)}; compare through the tower
    let table = series::derivative_table(&op, 1, Mode::Neumann { jmax: 1 }).unwrap();
    let d1 = table.get(1, 0).value;
    let u_j1 = (num_complex::Complex64::new(0.0, -blowlab_core::scattering::SQRT_3) * d1).re;
    assert!((lead - u_j1).abs() < 1e-9 * (1.0 + lead.abs()), "{lead} vs {u_j1}");
}

#[test]
fn mode_agreement_on_random_points() {
    let p = profile();
    let grid = build_grid_with_policy(&p, 0.55, 1e-10, 2, &GridPolicy::for_window(0.0, 1.0))
        .unwrap();
    let op = KernelOperator::assemble(&p, &grid, 0.6, 0.55).unwrap();
    let mut lcg: u64 = 99;
    let mut rnd = || {
        lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (lcg >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..12 {
        let k = num_complex::Complex64::new(4.0 * rnd() - 2.0, 4.0 * rnd() - 2.0);
        if verify::distance_to_singular_arcs(k, grid.y_max) < 0.05 || k.norm() < 0.05 {
            continue;
        }
        let a = series::m_at(&op, k, Mode::Neumann { jmax: 40 }).unwrap();
        let b = series::m_at(&op, k, Mode::Direct).unwrap();
        assert!((a.value - b.value).norm() <= a.trunc_bound.max(1e-11));
    }
}

#[test]
fn prediction_ratio_approaches_one() {
    // Deep-rung ratio of u(x0, t) to the closed-form leading asymptotics.
    let p = profile();
    let ratios =
        verify::ratio_to_leading(&p, &verify::LadderSpec::new(1e-4, 1e-6, 6), 1e-9).unwrap();
    // monotone increase toward 1, final within 10%
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    let last = ratios.last().unwrap();
    assert!((last - 1.0).abs() < 0.10, "final ratio {last}");
}

#[test]
fn spatial_bound_witness_stabilizes() {
    // Witness for |u(x,t)| <= C (1+x^2)/(x-x0)^2: the running max of
    // |u| (x-x0)^2/(1+x^2) over the x-grid stabilizes along the ladder.
    let p = profile();
    let xs = [-4.0, -2.0, -1.0, 1.0, 2.0, 4.0];
    let mut running = Vec::new();
    let mut current: f64 = 0.0;
    for &gap in &[1e-1, 1e-2, 1e-3, 1e-4] {
        let t = 1.0 - gap;
        for &x in &xs {
            let s = solution::u_eval(&p, x, t, 0, 1e-7).unwrap();
            let w = s.value(0, 0).abs() * x * x / (1.0 + x * x);
            current = current.max(w);
        }
        running.push(current);
    }
    let n = running.len();
    let variation = (running[n - 1] - running[n - 2]) / running[n - 1];
    assert!(
        variation < 0.05,
        "spatial-bound witness still moving: {running:?}"
    );
}
