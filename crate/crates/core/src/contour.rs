//! Geometry and quadrature for the integration contour Γ̃ = Γ₂′ ∪ Γ₅′.
//!
//! Both rays are parametrized by the ordinate y ≥ 1: Γ₂′ = y e^{-iπ/6} and
//! Γ₅′ = y e^{5iπ/6}, with ω·Γ₂′ = iy and ω·Γ₅′ = -iy. The cutoff kills
//! y ∈ [1, 2] exactly, so grids discretize (2, Y_max] with composite
//! Gauss–Legendre panels whose widths grow geometrically and are capped where
//! the oscillatory factor e^{±i(x-x₀)y/2} needs resolving.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quad;
use crate::scattering::{ScatteringProfile, SQRT_3};

/// The two rays carrying the integral equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RayBranch {
    /// Angle -π/6; ω·point = +iy.
    B2,
    /// Angle 5π/6; ω·point = -iy.
    B5,
}

impl RayBranch {
    /// Unit direction of the ray (also the dk/dy factor of the parametrization).
    pub fn direction(self) -> Complex64 {
        match self {
            RayBranch::B2 => Complex64::new(SQRT_3 / 2.0, -0.5),
            RayBranch::B5 => Complex64::new(-SQRT_3 / 2.0, 0.5),
        }
    }

    /// Sign s in ω·point(y) = s·iy.
    pub fn omega_sign(self) -> f64 {
        match self {
            RayBranch::B2 => 1.0,
            RayBranch::B5 => -1.0,
        }
    }
}

/// Point on the ray at ordinate y.
pub fn ray_point(branch: RayBranch, y: f64) -> Complex64 {
    branch.direction() * y
}

/// Construction policy for quadrature grids.
#[derive(Debug, Clone, Serialize)]
pub struct GridPolicy {
    /// Largest |x - x₀| the grid must resolve (sets the oscillation cap).
    pub osc_halfwidth: f64,
    /// Largest |x| (for the slow phase e^{-ix/(2y)} near y = 2).
    pub x_abs_max: f64,
    /// Gauss–Legendre points per panel.
    pub nodes_per_panel: usize,
    /// First panel width at y = 2.
    pub panel_width0: f64,
    /// Geometric growth ratio of panel widths.
    pub panel_ratio: f64,
    /// Minimum quadrature nodes per oscillation period.
    pub min_nodes_per_period: f64,
    /// Hard cap on the truncation ordinate.
    pub y_max_cap: f64,
    /// Hard cap on ordinate count (total node count is twice this).
    pub max_ordinates: usize,
}

impl Default for GridPolicy {
    fn default() -> Self {
        // Default covers the validated window |x - x0| <= 20.
        Self {
            osc_halfwidth: 20.0,
            x_abs_max: 40.0,
            nodes_per_panel: 20,
            panel_width0: 0.5,
            panel_ratio: 1.35,
            min_nodes_per_period: 8.0,
            y_max_cap: 1e7,
            max_ordinates: 30_000,
        }
    }
}

impl GridPolicy {
    /// Policy tuned to evaluations with |x - x₀| ≤ halfwidth around x₀.
    pub fn for_window(x0: f64, halfwidth: f64) -> Self {
        Self {
            osc_halfwidth: halfwidth,
            x_abs_max: x0.abs() + halfwidth,
            ..Self::default()
        }
    }
}

/// Node/weight grid for the ordinates of Γ̃, with truncation metadata.
/// Node order in assembled operators is B2 ascending then B5 ascending.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureGrid {
    /// Ordinates in (2, Y_max], ascending.
    pub ys: Vec<f64>,
    /// Positive panel weights (dy measure), same length.
    pub ws: Vec<f64>,
    pub y_max: f64,
    pub tol: f64,
    /// Time the truncation was budgeted for; valid for any t ≤ t_ref.
    pub t_ref: f64,
    pub q_max: u32,
    /// Hash of the profile this grid was built for.
    pub profile_hash: String,
}

/// Remaining integral mass of y^{q_max} |f₁(i/y)| e^{-(T-t) y²/4} beyond `from`.
pub fn truncation_tail(profile: &ScatteringProfile, t: f64, q_max: u32, from: f64) -> f64 {
    if profile.is_zero() {
        return 0.0;
    }
    let big_t = profile.t_blowup();
    let gauss_rate = (big_t - t).max(0.0) / 4.0;
    if gauss_rate == 0.0 {
        // Pure power-log tail: converges only if η + q_max < -1.
        if profile.eta() + q_max as f64 >= -1.0 - 1e-12 {
            return f64::INFINITY;
        }
    }
    let env = |y: f64| y.powi(q_max as i32) * profile.f1_abs(y) * (-gauss_rate * y * y).exp();
    quad::tail_integral(&env, from.max(profile.blend_lo()), 16)
}

/// Build a grid with the default policy (validated window |x-x₀| ≤ 20).
pub fn build_grid(
    profile: &ScatteringProfile,
    t: f64,
    tol: f64,
    q_max: u32,
) -> Result<QuadratureGrid> {
    build_grid_with_policy(profile, t, tol, q_max, &GridPolicy::default())
}

/// Build a grid under an explicit policy.
pub fn build_grid_with_policy(
    profile: &ScatteringProfile,
    t: f64,
    tol: f64,
    q_max: u32,
    policy: &GridPolicy,
) -> Result<QuadratureGrid> {
    let big_t = profile.t_blowup();
    if !(0.0..=big_t * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::Param(format!("t = {t} outside [0, T = {big_t}]")));
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::Param(format!("tol = {tol} outside (0, 1e-2]")));
    }
    if q_max < 1 {
        return Err(Error::Param("q_max must be >= 1".into()));
    }
    if t >= big_t * (1.0 - 1e-14) && profile.eta() + q_max as f64 >= -1.0 - 1e-12 && !profile.is_zero()
    {
        return Err(Error::Budget(format!(
            "at t = T the moment y^{q_max} f1 is not integrable (eta = {})",
            profile.eta()
        )));
    }

    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut lo = 2.0_f64;
    let mut geo_width = policy.panel_width0;
    loop {
        if truncation_tail(profile, t, q_max, lo) < tol {
            break;
        }
        if lo > policy.y_max_cap {
            return Err(Error::Budget(format!(
                "Y_max would exceed cap {:.1e} (t too close to T for tol = {tol:.1e})",
                policy.y_max_cap
            )));
        }
        // Oscillation cap: the kernel column phase is (x-x0) y/2 + x/(2y);
        // its local frequency at ordinate y >= lo is below kappa.
        let kappa = policy.osc_halfwidth / 2.0 + policy.x_abs_max / (2.0 * lo * lo);
        let mut width = geo_width;
        if kappa > 0.0 {
            let cap = 2.0 * std::f64::consts::PI * policy.nodes_per_panel as f64
                / (policy.min_nodes_per_period * kappa);
            width = width.min(cap);
        }
        let hi = lo + width;
        quad::push_panel(&mut ys, &mut ws, lo, hi, policy.nodes_per_panel);
        if ys.len() > policy.max_ordinates {
            return Err(Error::Budget(format!(
                "node budget exceeded ({} ordinates; shrink the x window or raise tol)",
                ys.len()
            )));
        }
        lo = hi;
        geo_width *= policy.panel_ratio;
    }
    Ok(QuadratureGrid {
        ys,
        ws,
        y_max: lo,
        tol,
        t_ref: t,
        q_max,
        profile_hash: profile.content_hash(),
    })
}

impl QuadratureGrid {
    pub fn n_ordinates(&self) -> usize {
        self.ys.len()
    }

    /// Total node count over both branches.
    pub fn n_nodes(&self) -> usize {
        2 * self.ys.len()
    }

    /// Nodes in operator order: B2 ascending then B5 ascending.
    pub fn nodes(&self) -> impl Iterator<Item = (RayBranch, f64, f64)> + '_ {
        let b2 = self.ys.iter().zip(&self.ws).map(|(&y, &w)| (RayBranch::B2, y, w));
        let b5 = self.ys.iter().zip(&self.ws).map(|(&y, &w)| (RayBranch::B5, y, w));
        b2.chain(b5)
    }

    /// ∫ f(y) dy over the grid ordinates.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.ys.iter().zip(&self.ws).map(|(&y, &w)| w * f(y)).sum()
    }

    fn payload_bytes(&self, profile_hash32: &[u8; 32]) -> Vec<u8> {
        let mut buf = Vec::with_capacity(48 + 16 * self.ys.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(profile_hash32);
        buf.extend_from_slice(&self.t_ref.to_le_bytes());
        buf.extend_from_slice(&self.tol.to_le_bytes());
        buf.extend_from_slice(&self.q_max.to_le_bytes());
        buf.extend_from_slice(&(self.ys.len() as u64).to_le_bytes());
        for y in &self.ys {
            buf.extend_from_slice(&y.to_le_bytes());
        }
        for w in &self.ws {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        buf
    }

    /// Content hash of the serialized grid (keys operator caches).
    pub fn content_hash(&self) -> String {
        let mut hash32 = [0u8; 32];
        for (i, ch) in self.profile_hash.as_bytes().chunks(2).take(32).enumerate() {
            hash32[i] = u8::from_str_radix(std::str::from_utf8(ch).unwrap_or("00"), 16).unwrap_or(0);
        }
        let mut h = Sha256::new();
        h.update(self.payload_bytes(&hash32));
        let d = h.finalize();
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn hash_bytes(&self) -> [u8; 32] {
        let mut hash32 = [0u8; 32];
        for (i, ch) in self.profile_hash.as_bytes().chunks(2).take(32).enumerate() {
            hash32[i] = u8::from_str_radix(std::str::from_utf8(ch).unwrap_or("00"), 16).unwrap_or(0);
        }
        let mut h = Sha256::new();
        h.update(self.payload_bytes(&hash32));
        h.finalize().into()
    }

    /// Write the binary cache file: header {magic, version, profile-hash,
    /// t_ref, tol, q_max, count}, then nodes, then weights (LE doubles),
    /// then a SHA-256 digest of everything preceding it.
    pub fn write_cache(&self, path: &Path, profile: &ScatteringProfile) -> Result<()> {
        let bytes = self.payload_bytes(&profile.hash_bytes());
        let mut h = Sha256::new();
        h.update(&bytes);
        let digest: [u8; 32] = h.finalize().into();
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        f.write_all(&digest)?;
        Ok(())
    }

    /// Read a cache file, verifying magic, version, profile hash and the
    /// trailing payload digest.
    pub fn read_cache(path: &Path, profile: &ScatteringProfile) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 32 {
            return Err(Error::Cache(format!("{}: truncated", path.display())));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        let mut h = Sha256::new();
        h.update(body);
        if digest != h.finalize().as_slice() {
            return Err(Error::Cache(format!("{}: payload digest mismatch", path.display())));
        }
        let buf = body.to_vec();
        let need = |n: usize, at: usize| -> Result<()> {
            if buf.len() < at + n {
                Err(Error::Cache(format!("{}: truncated", path.display())))
            } else {
                Ok(())
            }
        };
        need(8 + 4 + 32 + 8 + 8 + 4 + 8, 0)?;
        if &buf[0..8] != MAGIC {
            return Err(Error::Cache(format!("{}: bad magic", path.display())));
        }
        let mut at = 8;
        let version = u32::from_le_bytes(buf[at..at + 4].try_into().unwrap());
        at += 4;
        if version != VERSION {
            return Err(Error::Cache(format!("{}: version {version}", path.display())));
        }
        let hash: [u8; 32] = buf[at..at + 32].try_into().unwrap();
        at += 32;
        if hash != profile.hash_bytes() {
            return Err(Error::Cache(format!("{}: profile hash mismatch", path.display())));
        }
        let rd_f64 = |at: usize| f64::from_le_bytes(buf[at..at + 8].try_into().unwrap());
        let t_ref = rd_f64(at);
        at += 8;
        let tol = rd_f64(at);
        at += 8;
        let q_max = u32::from_le_bytes(buf[at..at + 4].try_into().unwrap());
        at += 4;
        let count = u64::from_le_bytes(buf[at..at + 8].try_into().unwrap()) as usize;
        at += 8;
        need(16 * count, at)?;
        let mut ys = Vec::with_capacity(count);
        let mut ws = Vec::with_capacity(count);
        for i in 0..count {
            ys.push(rd_f64(at + 8 * i));
        }
        at += 8 * count;
        for i in 0..count {
            ws.push(rd_f64(at + 8 * i));
        }
        let w_sum: f64 = ws.iter().sum();
        Ok(Self {
            ys,
            ws,
            y_max: 2.0 + w_sum,
            tol,
            t_ref,
            q_max,
            profile_hash: profile.content_hash(),
        })
    }
}

const MAGIC: &[u8; 8] = b"BLWGRID\0";
const VERSION: u32 = 1;
