//! The integral kernel F, the boundary functional F⁽¹⁾, the reduced phase
//! θ₂₁, the x/t derivative multipliers, and Nyström assembly at fixed (x, t).
//!
//! On the contour the combination ωk₁ is exactly ±i y₁, so every exponential
//! factor splits into a real amplitude e^{-(T-t)y²/4 - t/(4y²)} and a unit
//! phase e^{±i[(x-x₀)y/2 + x/(2y)]}; the code keeps that split explicit.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use sha2::Digest;

use crate::contour::{ray_point, QuadratureGrid, RayBranch};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;
use crate::scattering::{omega2, ScatteringProfile};

const DENOM_GUARD: f64 = 1e-13;

/// θ₂₁(x,t,k) = (x/2)(k - 1/k) + (t/4)(1/k² - k²).
pub fn theta21(x: f64, t: f64, k: Complex64) -> Result<Complex64> {
    if k.norm() == 0.0 {
        return Err(Error::Domain("theta21 undefined at k = 0".into()));
    }
    let inv = Complex64::new(1.0, 0.0) / k;
    Ok((k - inv) * (x / 2.0) + (inv * inv - k * k) * (t / 4.0))
}

/// Derivative multipliers at ordinate y₁ on a branch:
/// a = (ωk₁ - 1/(ωk₁))/2 = ±i (y + 1/y)/2,  b = (1/(ωk₁)² - (ωk₁)²)/4
/// = (y² - 1/y²)/4 (real, branch independent).
pub fn multipliers(y1: f64, branch: RayBranch) -> (Complex64, Complex64) {
    let s = branch.omega_sign();
    let a = Complex64::new(0.0, s * (y1 + 1.0 / y1) / 2.0);
    let b = Complex64::new((y1 * y1 - 1.0 / (y1 * y1)) / 4.0, 0.0);
    (a, b)
}

/// Common real amplitude and branch-signed phase of the column factors.
#[inline]
fn amp_phase(profile: &ScatteringProfile, x: f64, t: f64, y: f64) -> (f64, f64) {
    let big_t = profile.t_blowup();
    let amp = (-(big_t - t) * y * y / 4.0 - t / (4.0 * y * y)).exp();
    let phase = (x - profile.x0()) * y / 2.0 + x / (2.0 * y);
    (amp, phase)
}

/// f̃₀(ωk₁): f₂(iy) on B2 (where ωk₁ = iy ∈ Γ₄′), f₁(i/y) on B5
/// (where ωk₁ = -iy ∈ Γ₁′).
fn f0_tilde(profile: &ScatteringProfile, y: f64, branch: RayBranch) -> Complex64 {
    match branch {
        RayBranch::B2 => profile.f2(y),
        RayBranch::B5 => Complex64::new(profile.f1(y), 0.0),
    }
}

/// ω²k₁ for k₁ on a branch at ordinate y (exact polar form).
#[inline]
fn omega2_k1(y: f64, branch: RayBranch) -> Complex64 {
    use crate::scattering::SQRT_3;
    match branch {
        RayBranch::B2 => Complex64::new(-SQRT_3 / 2.0 * y, -0.5 * y),
        RayBranch::B5 => Complex64::new(SQRT_3 / 2.0 * y, 0.5 * y),
    }
}

/// Pointwise kernel
/// F(x,t,k,k₁) = e^{(x-x₀)ωk₁/2} e^{(T-t)(ωk₁)²/4}
///               [ω²/(ω²k₁-k) - (ω/k₁²)/(1/(ω²k₁)-k)] h̃₀(x,t,ωk₁) / (2πi),
/// with k₁ the point of `branch` at ordinate y1. On the contour
/// ω/k₁² = -1/y₁² exactly.
pub fn kernel_f(
    profile: &ScatteringProfile,
    x: f64,
    t: f64,
    k: Complex64,
    y1: f64,
    branch: RayBranch,
) -> Result<Complex64> {
    let f0 = f0_tilde(profile, y1, branch);
    if f0.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w2k1 = omega2_k1(y1, branch);
    let inv_w2k1 = Complex64::new(1.0, 0.0) / w2k1;
    let d1 = w2k1 - k;
    let d2 = inv_w2k1 - k;
    if d1.norm() < DENOM_GUARD {
        return Err(Error::Singularity(d1.norm()));
    }
    if d2.norm() < DENOM_GUARD {
        return Err(Error::Singularity(d2.norm()));
    }
    let cauchy = omega2() / d1 + Complex64::new(1.0 / (y1 * y1), 0.0) / d2;
    let (amp, raw_phase) = amp_phase(profile, x, t, y1);
    let phase = branch.omega_sign() * raw_phase;
    let e = Complex64::new(amp * phase.cos(), amp * phase.sin());
    let inv_2pi_i = Complex64::new(0.0, -1.0 / (2.0 * std::f64::consts::PI));
    Ok(e * cauchy * f0 * inv_2pi_i)
}

/// Boundary functional
/// F⁽¹⁾(x,t,k₁) = -e^{(x-x₀)ωk₁/2} e^{(T-t)(ωk₁)²/4}
///                 e^{-x/(2ωk₁)+t/(4(ωk₁)²)} f̃₀(ωk₁)(ω² - ω/k₁²)/(2πi).
pub fn kernel_f1(
    profile: &ScatteringProfile,
    x: f64,
    t: f64,
    y1: f64,
    branch: RayBranch,
) -> Result<Complex64> {
    let f0 = f0_tilde(profile, y1, branch);
    if f0.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let factor = omega2() + Complex64::new(1.0 / (y1 * y1), 0.0);
    let (amp, raw_phase) = amp_phase(profile, x, t, y1);
    let phase = branch.omega_sign() * raw_phase;
    let e = Complex64::new(amp * phase.cos(), amp * phase.sin());
    let inv_2pi_i = Complex64::new(0.0, -1.0 / (2.0 * std::f64::consts::PI));
    Ok(-(e * factor * f0 * inv_2pi_i))
}

/// A quadrature node of the assembled operator.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub branch: RayBranch,
    pub y: f64,
    pub w: f64,
}

/// Per-column data reused by the matrix, by off-grid rows and by caches.
#[derive(Debug, Clone, Copy)]
struct Column {
    w2k1: Complex64,
    inv_w2k1: Complex64,
    inv_y2: f64,
    /// E(k₁) f̃₀(ωk₁) τ w / (2πi): everything except the Cauchy factor.
    colfac: Complex64,
}

/// Nyström matrix of F and vector of F⁽¹⁾ at fixed (x, t), plus the
/// multiplier diagonals. Immutable after assembly.
pub struct KernelOperator {
    pub x: f64,
    pub t: f64,
    /// A[i,j] = F(x,t,k_i,k_j) · τ_j w_j (full complex quadrature weight).
    pub a_mat: CMatrix,
    /// F1w[j] = F⁽¹⁾(x,t,k_j) · τ_j w_j.
    pub f1w: Vec<Complex64>,
    pub a_diag: Vec<Complex64>,
    pub b_diag: Vec<Complex64>,
    /// Σ_j w_j max_i |F(k_i,k_j)|: discrete analogue of the kernel norm.
    pub norm_est: f64,
    pub nodes: Vec<Node>,
    columns: Vec<Column>,
    profile: ScatteringProfile,
    grid_tol: f64,
    grid_hash: [u8; 32],
}

impl KernelOperator {
    /// Assemble the operator. Node order is B2 ascending then B5 ascending.
    pub fn assemble(
        profile: &ScatteringProfile,
        grid: &QuadratureGrid,
        x: f64,
        t: f64,
    ) -> Result<Self> {
        if grid.profile_hash != profile.content_hash() {
            return Err(Error::Param("grid was built for a different profile".into()));
        }
        if t > grid.t_ref * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Param(format!(
                "grid budgeted for t_ref = {} cannot serve t = {t}",
                grid.t_ref
            )));
        }
        let nodes: Vec<Node> = grid
            .nodes()
            .map(|(branch, y, w)| Node { branch, y, w })
            .collect();
        let n = nodes.len();
        let inv_2pi_i = Complex64::new(0.0, -1.0 / (2.0 * std::f64::consts::PI));

        let columns: Vec<Column> = nodes
            .iter()
            .map(|nd| {
                let (amp, raw_phase) = amp_phase(profile, x, t, nd.y);
                let phase = nd.branch.omega_sign() * raw_phase;
                let e = Complex64::new(amp * phase.cos(), amp * phase.sin());
                let f0 = f0_tilde(profile, nd.y, nd.branch);
                let c = nd.branch.direction() * nd.w;
                Column {
                    w2k1: omega2_k1(nd.y, nd.branch),
                    inv_w2k1: Complex64::new(1.0, 0.0) / omega2_k1(nd.y, nd.branch),
                    inv_y2: 1.0 / (nd.y * nd.y),
                    colfac: e * f0 * c * inv_2pi_i,
                }
            })
            .collect();

        let points: Vec<Complex64> = nodes.iter().map(|nd| ray_point(nd.branch, nd.y)).collect();
        let mut a_mat = CMatrix::zeros(n, n);
        {
            let cols = &columns;
            let pts = &points;
            par::for_each_row(a_mat.data_mut(), n, |i, row| {
                let k = pts[i];
                for (j, col) in cols.iter().enumerate() {
                    let cauchy = omega2() / (col.w2k1 - k)
                        + Complex64::new(col.inv_y2, 0.0) / (col.inv_w2k1 - k);
                    row[j] = cauchy * col.colfac;
                }
            });
        }

        let f1w: Vec<Complex64> = nodes
            .iter()
            .map(|nd| {
                kernel_f1(profile, x, t, nd.y, nd.branch).map(|v| v * nd.branch.direction() * nd.w)
            })
            .collect::<Result<_>>()?;

        let a_diag: Vec<Complex64> = nodes.iter().map(|nd| multipliers(nd.y, nd.branch).0).collect();
        let b_diag: Vec<Complex64> = nodes.iter().map(|nd| multipliers(nd.y, nd.branch).1).collect();

        // norm_est = Σ_j w_j sup_i |F(k_i,k_j)| = Σ_j max_i |A[i,j]| (|τ| = 1).
        let col_max = par::map_range(n, |j| {
            let mut m = 0.0_f64;
            for i in 0..n {
                m = m.max(a_mat.get(i, j).norm());
            }
            m
        });
        let norm_est: f64 = col_max.iter().sum();

        let limit = 1.0 / profile.m_const() + 10.0 * grid.tol;
        if norm_est > limit {
            return Err(Error::NormBoundViolation { norm_est, limit });
        }

        Ok(Self {
            x,
            t,
            a_mat,
            f1w,
            a_diag,
            b_diag,
            norm_est,
            nodes,
            columns,
            profile: profile.clone(),
            grid_tol: grid.tol,
            grid_hash: grid.hash_bytes(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn profile(&self) -> &ScatteringProfile {
        &self.profile
    }

    pub fn grid_tol(&self) -> f64 {
        self.grid_tol
    }

    /// Row of weighted kernel values at an off-grid point:
    /// row[j] = F(x,t,k,k_j) τ_j w_j.
    pub fn row_at(&self, k: Complex64) -> Result<Vec<Complex64>> {
        let mut row = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            let d1 = col.w2k1 - k;
            let d2 = col.inv_w2k1 - k;
            if d1.norm() < DENOM_GUARD {
                return Err(Error::Singularity(d1.norm()));
            }
            if d2.norm() < DENOM_GUARD {
                return Err(Error::Singularity(d2.norm()));
            }
            let cauchy = omega2() / d1 + Complex64::new(col.inv_y2, 0.0) / d2;
            row.push(cauchy * col.colfac);
        }
        Ok(row)
    }

    /// Write the operator cache: header {profile-hash, grid-hash, x, t},
    /// then A row-major, F1w, the two multiplier diagonals (LE doubles), and
    /// a trailing SHA-256 digest of everything preceding it.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let n = self.n_nodes();
        let mut buf = Vec::with_capacity(80 + 16 * (n * n + 3 * n));
        buf.extend_from_slice(&self.profile.hash_bytes());
        buf.extend_from_slice(&self.grid_hash);
        buf.extend_from_slice(&self.x.to_le_bytes());
        buf.extend_from_slice(&self.t.to_le_bytes());
        let mut push = |v: Complex64| {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        };
        for v in self.a_mat.data() {
            push(*v);
        }
        for v in &self.f1w {
            push(*v);
        }
        for v in &self.a_diag {
            push(*v);
        }
        for v in &self.b_diag {
            push(*v);
        }
        let mut h = sha2::Sha256::new();
        h.update(&buf);
        let digest: [u8; 32] = h.finalize().into();
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        f.write_all(&digest)?;
        Ok(())
    }

    /// Read an operator cache written for this profile and grid.
    pub fn read_cache(
        path: &Path,
        profile: &ScatteringProfile,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 112 {
            return Err(Error::Cache(format!("{}: truncated header", path.display())));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        let mut h = sha2::Sha256::new();
        h.update(body);
        if digest != h.finalize().as_slice() {
            return Err(Error::Cache(format!("{}: payload digest mismatch", path.display())));
        }
        let buf = body.to_vec();
        if buf[0..32] != profile.hash_bytes() {
            return Err(Error::Cache(format!("{}: profile hash mismatch", path.display())));
        }
        if buf[32..64] != grid.hash_bytes() {
            return Err(Error::Cache(format!("{}: grid hash mismatch", path.display())));
        }
        let x = f64::from_le_bytes(buf[64..72].try_into().unwrap());
        let t = f64::from_le_bytes(buf[72..80].try_into().unwrap());
        let n = grid.n_nodes();
        let expect = 80 + 16 * (n * n + 3 * n);
        if buf.len() != expect {
            return Err(Error::Cache(format!(
                "{}: size {} != expected {expect}",
                path.display(),
                buf.len()
            )));
        }
        let rd = |at: usize| {
            Complex64::new(
                f64::from_le_bytes(buf[at..at + 8].try_into().unwrap()),
                f64::from_le_bytes(buf[at + 8..at + 16].try_into().unwrap()),
            )
        };
        let mut at = 80;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            data.push(rd(at));
            at += 16;
        }
        let read_vec = |at: &mut usize| {
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push(rd(*at));
                *at += 16;
            }
            v
        };
        let f1w = read_vec(&mut at);
        let a_diag = read_vec(&mut at);
        let b_diag = read_vec(&mut at);

        let nodes: Vec<Node> = grid
            .nodes()
            .map(|(branch, y, w)| Node { branch, y, w })
            .collect();
        let a_mat = CMatrix::from_rows(n, n, data);
        let col_max = par::map_range(n, |j| {
            let mut m = 0.0_f64;
            for i in 0..n {
                m = m.max(a_mat.get(i, j).norm());
            }
            m
        });
        let norm_est: f64 = col_max.iter().sum();
        let inv_2pi_i = Complex64::new(0.0, -1.0 / (2.0 * std::f64::consts::PI));
        let columns: Vec<Column> = nodes
            .iter()
            .map(|nd| {
                let (amp, raw_phase) = amp_phase(profile, x, t, nd.y);
                let phase = nd.branch.omega_sign() * raw_phase;
                let e = Complex64::new(amp * phase.cos(), amp * phase.sin());
                let f0 = f0_tilde(profile, nd.y, nd.branch);
                let c = nd.branch.direction() * nd.w;
                Column {
                    w2k1: omega2_k1(nd.y, nd.branch),
                    inv_w2k1: Complex64::new(1.0, 0.0) / omega2_k1(nd.y, nd.branch),
                    inv_y2: 1.0 / (nd.y * nd.y),
                    colfac: e * f0 * c * inv_2pi_i,
                }
            })
            .collect();
        Ok(Self {
            x,
            t,
            a_mat,
            f1w,
            a_diag,
            b_diag,
            norm_est,
            nodes,
            columns,
            profile: profile.clone(),
            grid_tol: grid.tol,
            grid_hash: grid.hash_bytes(),
        })
    }
}
