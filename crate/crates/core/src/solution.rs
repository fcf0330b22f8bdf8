//! Physical solution assembly: u(x,t) = -i√3 ∂ₓ m⁽¹⁾(x,t), its mixed
//! derivatives ∂ₓ^{q₁}∂ₜ^{q₂} u = -i√3 · D(q₁+1, q₂), the closed-form j = 1
//! integral, and the leading-order asymptotic predictions.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::cache::CacheDir;
use crate::contour::{build_grid_with_policy, GridPolicy, QuadratureGrid};
use crate::error::{Error, Result};
use crate::gamma::gaussian_moment;
use crate::kernel::KernelOperator;
use crate::par;
use crate::scattering::{omega, omega2, ProfileKind, ScatteringProfile, SQRT_3};
use crate::series::{self, DerivativeTable, MSolver, Mode};

/// Default validated window |x - x₀| ≤ 20.
pub const DEFAULT_WINDOW: f64 = 20.0;

/// Error budget attached to each stored derivative.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrBudget {
    /// √3 × series truncation tail bound.
    pub trunc: f64,
    /// √3 × grid truncation tolerance.
    pub quad: f64,
}

/// u and requested mixed derivatives at one (x, t).
#[derive(Debug, Clone, Serialize)]
pub struct SolutionSample {
    pub x: f64,
    pub t: f64,
    /// (q₁, q₂) → ∂ₓ^{q₁}∂ₜ^{q₂} u(x, t), real.
    pub derivs: BTreeMap<(u32, u32), f64>,
    pub err: BTreeMap<(u32, u32), ErrBudget>,
    /// Explicit j = 1 integral per derivative pair.
    pub leading: BTreeMap<(u32, u32), f64>,
}

impl SolutionSample {
    pub fn value(&self, q1: u32, q2: u32) -> f64 {
        self.derivs[&(q1, q2)]
    }
}

/// Evaluation options beyond (profile, x, t, order, tol).
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Override the x-window-derived grid policy.
    pub policy: Option<GridPolicy>,
    /// Override the automatic Neumann depth / direct choice.
    pub mode: Option<Mode>,
    /// Evaluate outside the validated window instead of erroring.
    pub allow_outside_window: bool,
    /// Grid/operator cache.
    pub cache: Option<CacheDir>,
}

fn at_blowup_time(profile: &ScatteringProfile, t: f64) -> bool {
    t >= profile.t_blowup() * (1.0 - 1e-14)
}

fn check_t_cap(profile: &ScatteringProfile, t: f64, order_q: u32) -> Result<()> {
    let big_t = profile.t_blowup();
    if !(0.0..=big_t * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::Param(format!("t = {t} outside [0, T = {big_t}]")));
    }
    if at_blowup_time(profile, t) && !profile.is_zero() {
        match profile.kind() {
            ProfileKind::Unbounded { .. } => {
                return Err(Error::Integrability(
                    "unbounded profiles cannot be evaluated at t = T".into(),
                ))
            }
            ProfileKind::DerivativeBlowup { q, .. } if order_q > q => {
                return Err(Error::Integrability(format!(
                    "t = T allows only derivative orders q1+2q2 <= {q}, requested {order_q}"
                )));
            }
            _ => {}
        }
    }
    Ok(())
}

pub(crate) fn grid_for(
    profile: &ScatteringProfile,
    x: f64,
    t: f64,
    tol: f64,
    q_max: u32,
    opts: &EvalOptions,
) -> Result<QuadratureGrid> {
    let policy = opts
        .policy
        .clone()
        .unwrap_or_else(|| GridPolicy::for_window(profile.x0(), (x - profile.x0()).abs()));
    match &opts.cache {
        Some(cache) => Ok(cache.load_or_build_grid(profile, t, tol, q_max, &policy)?.0),
        None => build_grid_with_policy(profile, t, tol, q_max, &policy),
    }
}

fn operator_for(
    profile: &ScatteringProfile,
    grid: &QuadratureGrid,
    x: f64,
    t: f64,
    opts: &EvalOptions,
) -> Result<KernelOperator> {
    match &opts.cache {
        Some(cache) => Ok(cache.load_or_build_operator(profile, grid, x, t)?.0),
        None => KernelOperator::assemble(profile, grid, x, t),
    }
}

/// Neumann depth making the certified tail bound small relative to the
/// natural scale of the highest requested derivative.
fn auto_mode(op: &KernelOperator, order: u32, tol: f64) -> Mode {
    if op.norm_est <= 0.0 {
        return Mode::Neumann { jmax: 1 };
    }
    let q_top = order;
    let scale = series::moment(op, q_top).max(1e-300);
    let target = (tol * 1e-3).max(1e-15) * scale;
    let profile = op.profile();
    for j in 4..=160 {
        let tb = series::tail_bound_after(profile, q_top, 0, j, &|s| series::moment(op, s));
        if tb <= target {
            return Mode::Neumann { jmax: j };
        }
    }
    Mode::Neumann { jmax: 160 }
}

/// Convert the complex series derivative to the real u-derivative, enforcing
/// the realness invariant |Im| ≤ 1e-9 (1 + |Re|).
fn realize(value: Complex64, x: f64, t: f64) -> Result<f64> {
    let u = Complex64::new(0.0, -SQRT_3) * value;
    if u.im.abs() > 1e-9 * (1.0 + u.re.abs()) {
        return Err(Error::Realness { im: u.im, re: u.re, x, t });
    }
    Ok(u.re)
}

/// Evaluate u and all mixed derivatives with q₁ + 2q₂ ≤ order_q at one point.
pub fn u_eval(
    profile: &ScatteringProfile,
    x: f64,
    t: f64,
    order_q: u32,
    tol: f64,
) -> Result<SolutionSample> {
    u_eval_opts(profile, x, t, order_q, tol, &EvalOptions::default())
}

pub fn u_eval_opts(
    profile: &ScatteringProfile,
    x: f64,
    t: f64,
    order_q: u32,
    tol: f64,
    opts: &EvalOptions,
) -> Result<SolutionSample> {
    check_t_cap(profile, t, order_q)?;
    let dx = (x - profile.x0()).abs();
    if dx > DEFAULT_WINDOW && !opts.allow_outside_window {
        return Err(Error::Window(dx, DEFAULT_WINDOW));
    }
    let series_order = order_q + 1;
    let grid = grid_for(profile, x, t, tol, series_order, opts)?;
    let op = operator_for(profile, &grid, x, t, opts)?;
    let mode = opts.mode.unwrap_or_else(|| auto_mode(&op, series_order, tol));
    let table = series::derivative_table(&op, series_order, mode)?;
    sample_from_table(profile, &grid, &table, x, t, order_q)
}

fn sample_from_table(
    profile: &ScatteringProfile,
    grid: &QuadratureGrid,
    table: &DerivativeTable,
    x: f64,
    t: f64,
    order_q: u32,
) -> Result<SolutionSample> {
    let mut derivs = BTreeMap::new();
    let mut err = BTreeMap::new();
    let mut leading = BTreeMap::new();
    for q2 in 0..=(order_q / 2) {
        for q1 in 0..=(order_q - 2 * q2) {
            let d = table.get(q1 + 1, q2);
            let v = realize(d.value, x, t)?;
            derivs.insert((q1, q2), v);
            err.insert(
                (q1, q2),
                ErrBudget { trunc: SQRT_3 * d.trunc_bound, quad: SQRT_3 * d.quad_tol },
            );
            leading.insert((q1, q2), u_leading_on_grid(profile, grid, x, t, q1, q2));
        }
    }
    Ok(SolutionSample { x, t, derivs, err, leading })
}

/// (-i)^{q}.
pub fn neg_i_pow(q: u32) -> Complex64 {
    match q % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// The explicit single-integral j = 1 term of ∂ₓ^{q₁}∂ₜ^{q₂} u:
///
///   -√3/π ∫₁^∞ e^{-(T-t)y²/4} e^{-t/(4y²)} ((y+1/y)/2)^{q₁+1} ((y²-1/y²)/4)^{q₂}
///          Re[(-i)^{q₁} e^{-i(x-x₀)y/2} e^{-ix/(2y)} f₁(i/y)(ω + ω²/y²)] dy,
///
/// evaluated on the ordinates of an existing grid.
pub fn u_leading_on_grid(
    profile: &ScatteringProfile,
    grid: &QuadratureGrid,
    x: f64,
    t: f64,
    q1: u32,
    q2: u32,
) -> f64 {
    let big_t = profile.t_blowup();
    let x0 = profile.x0();
    let miq = neg_i_pow(q1);
    let integrand = |y: f64| -> f64 {
        let f1 = profile.f1(y);
        if f1 == 0.0 {
            return 0.0;
        }
        let amp = (-(big_t - t) * y * y / 4.0 - t / (4.0 * y * y)).exp();
        let p1 = ((y + 1.0 / y) / 2.0).powi(q1 as i32 + 1);
        let p2 = ((y * y - 1.0 / (y * y)) / 4.0).powi(q2 as i32);
        let phase = -(x - x0) * y / 2.0 - x / (2.0 * y);
        let rot = Complex64::new(phase.cos(), phase.sin());
        let tail = miq * rot * (omega() + omega2() / (y * y)) * f1;
        amp * p1 * p2 * tail.re
    };
    -SQRT_3 / std::f64::consts::PI * grid.integrate(integrand)
}

/// Same integral with a standalone grid built for the request.
pub fn u_leading(
    profile: &ScatteringProfile,
    x: f64,
    t: f64,
    q1: u32,
    q2: u32,
    tol: f64,
) -> Result<f64> {
    let opts = EvalOptions::default();
    let grid = grid_for(profile, x, t, tol, q1 + 1 + 2 * q2, &opts)?;
    Ok(u_leading_on_grid(profile, &grid, x, t, q1, q2))
}

/// Re[(-i)^{q₁} ω].
pub fn re_miq_omega(q1: u32) -> f64 {
    match q1 % 4 {
        0 => -0.5,
        1 => SQRT_3 / 2.0,
        2 => 0.5,
        _ => -SQRT_3 / 2.0,
    }
}

/// Leading-order asymptotic prediction at x = x₀ as t → T, with
/// ℓ = 2/√(T-t):
///
/// * unbounded: (√3/(4π)) ℓ^{η+2} LOG(ℓ) ∫₀^∞ e^{-y²} y^{η+1} dy;
/// * derivative blow-up (q₁+2q₂ = q+1):
///   -(√3 Re[(-i)^{q₁}ω] / (2^{q+2}π)) ℓ^{η+q+3} LOG(ℓ) ∫₀^∞ e^{-y²} y^{η+q+2} dy.
pub fn asymptotic_prediction(
    profile: &ScatteringProfile,
    t: f64,
    q1: u32,
    q2: u32,
) -> Result<f64> {
    let big_t = profile.t_blowup();
    if !(t < big_t) {
        return Err(Error::Domain(format!("prediction needs t < T, got t = {t}")));
    }
    let ell = 2.0 / (big_t - t).sqrt();
    let log_val = profile.log_family().eval(ell)?;
    let eta = profile.eta();
    match profile.kind() {
        ProfileKind::Unbounded { .. } => {
            if (q1, q2) != (0, 0) {
                return Err(Error::Param(
                    "unbounded profiles predict only the (0,0) derivative".into(),
                ));
            }
            Ok(SQRT_3 / (4.0 * std::f64::consts::PI)
                * ell.powf(eta + 2.0)
                * log_val
                * gaussian_moment(eta))
        }
        ProfileKind::DerivativeBlowup { q, .. } => {
            if q1 + 2 * q2 != q + 1 {
                return Err(Error::Param(format!(
                    "prediction requires q1+2q2 = q+1 = {}, got ({q1},{q2})",
                    q + 1
                )));
            }
            let qf = q as f64;
            Ok(-SQRT_3 * re_miq_omega(q1) / (2.0_f64.powf(qf + 2.0) * std::f64::consts::PI)
                * ell.powf(eta + qf + 3.0)
                * log_val
                * gaussian_moment(eta + qf + 1.0))
        }
        ProfileKind::Zero => Err(Error::Param("zero profile has no blow-up prediction".into())),
    }
}

/// The row vector n = (m(ωk), m(ω²k), m(k)).
pub fn n_assemble(op: &KernelOperator, k: Complex64, mode: Mode) -> Result<[Complex64; 3]> {
    let solver = MSolver::new(op, mode)?;
    Ok([
        solver.m_at(omega() * k)?.value,
        solver.m_at(omega2() * k)?.value,
        solver.m_at(k)?.value,
    ])
}

/// One cell of a sweep table.
#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub x: f64,
    pub t: f64,
    pub sample: Option<SolutionSample>,
    pub error: Option<String>,
    pub flags: Vec<String>,
}

/// Parallel sweep over xs × ts (row-major, x outer). Cells outside the
/// validated window are evaluated anyway and flagged; per-cell errors are
/// recorded and the sweep continues.
pub fn u_grid(
    profile: &ScatteringProfile,
    xs: &[f64],
    ts: &[f64],
    order_q: u32,
    tol: f64,
) -> Vec<GridCell> {
    u_grid_opts(profile, xs, ts, order_q, tol, &EvalOptions::default())
}

pub fn u_grid_opts(
    profile: &ScatteringProfile,
    xs: &[f64],
    ts: &[f64],
    order_q: u32,
    tol: f64,
    opts: &EvalOptions,
) -> Vec<GridCell> {
    let cells: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ts.iter().map(move |&t| (x, t)))
        .collect();
    par::map_collect(&cells, |&(x, t)| {
        let mut flags = Vec::new();
        let dx = (x - profile.x0()).abs();
        if dx > DEFAULT_WINDOW {
            flags.push("unverified-window".to_string());
        }
        let mut cell_opts = opts.clone();
        cell_opts.allow_outside_window = true;
        match u_eval_opts(profile, x, t, order_q, tol, &cell_opts) {
            Ok(sample) => GridCell { x, t, sample: Some(sample), error: None, flags },
            Err(e) => GridCell { x, t, sample: None, error: Some(e.to_string()), flags },
        }
    })
}

/// CSV export: x, t, q1, q2, value, err_trunc, err_quad, flags.
/// UTF-8, header row, '.' decimal separator.
pub fn write_cells_csv<W: Write>(cells: &[GridCell], mut w: W) -> Result<()> {
    writeln!(w, "x,t,q1,q2,value,err_trunc,err_quad,flags")?;
    for cell in cells {
        match &cell.sample {
            Some(s) => {
                for (&(q1, q2), &v) in &s.derivs {
                    let e = &s.err[&(q1, q2)];
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        cell.x,
                        cell.t,
                        q1,
                        q2,
                        v,
                        e.trunc,
                        e.quad,
                        cell.flags.join(";")
                    )?;
                }
            }
            None => {
                let mut flags = cell.flags.clone();
                if let Some(e) = &cell.error {
                    flags.push(format!("error:{}", e.replace(',', ";")));
                }
                writeln!(w, "{},{},,,NaN,NaN,NaN,{}", cell.x, cell.t, flags.join(";"))?;
            }
        }
    }
    Ok(())
}
