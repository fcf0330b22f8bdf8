//! Scattering data: the LOG family, the profile parameters (T, x₀, δ, q, η,
//! M, y₀), and the functions f₁, f₂, r₁, r̃ built from them.
//!
//! The reflection data lives on the ray k = i/y, y ≥ 1. f₁ vanishes on
//! y ∈ [1, 2], follows the power-log tail y^η LOG(y) for y ≥ y₀, and blends
//! smoothly in between with a C∞ step, so that the L¹ budget
//! ∫₁^∞ |f₁(i/y)|/y dy ≤ 1/M holds.

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quad;

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// ω = e^{2πi/3}, evaluated once in double precision.
pub fn omega() -> Complex64 {
    Complex64::new(-0.5, SQRT_3 / 2.0)
}

/// ω² = e^{-2πi/3}.
pub fn omega2() -> Complex64 {
    Complex64::new(-0.5, -SQRT_3 / 2.0)
}

/// r̃(k) = (ω² - k²)/(1 - ω² k²), unit modulus on the imaginary axis,
/// poles at k = ±ω².
pub fn rtilde(k: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) - omega2() * k * k;
    if den.norm() < 1e-13 * (1.0 + k.norm_sqr()) {
        return Err(Error::Pole { re: k.re, im: k.im });
    }
    Ok((omega2() - k * k) / den)
}

/// Product of powers of iterated logarithms: (-1)^σ Π (log_{r_j} s)^{a_j}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogFamily {
    rvec: Vec<u32>,
    avec: Vec<f64>,
    sigma: u8,
}

impl LogFamily {
    /// Empty product: LOG ≡ (-1)^σ.
    pub fn none() -> Self {
        Self { rvec: vec![], avec: vec![], sigma: 0 }
    }

    pub fn new(rvec: Vec<u32>, avec: Vec<f64>, sigma: u8) -> Result<Self> {
        if rvec.len() != avec.len() {
            return Err(Error::Param(format!(
                "rvec length {} != avec length {}",
                rvec.len(),
                avec.len()
            )));
        }
        if sigma > 1 {
            return Err(Error::Param(format!("sigma must be 0 or 1, got {sigma}")));
        }
        for w in rvec.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Param(format!("rvec not strictly increasing: {rvec:?}")));
            }
        }
        if rvec.iter().any(|&r| r == 0) {
            return Err(Error::Param("rvec entries must be >= 1".into()));
        }
        if avec.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::Param(format!("avec entries must be >= 0: {avec:?}")));
        }
        Ok(Self { rvec, avec, sigma })
    }

    pub fn p(&self) -> usize {
        self.rvec.len()
    }

    pub fn rvec(&self) -> &[u32] {
        &self.rvec
    }

    pub fn avec(&self) -> &[f64] {
        &self.avec
    }

    pub fn sigma(&self) -> u8 {
        self.sigma
    }

    /// exp_{r_p}(0): the largest s at which evaluation is rejected.
    /// exp_1(0) = 1, exp_2(0) = e, exp_3(0) = e^e, ...
    pub fn domain_threshold(&self) -> f64 {
        let rp = self.rvec.last().copied().unwrap_or(0);
        let mut v = 0.0_f64;
        for _ in 0..rp {
            v = v.exp();
        }
        v
    }

    /// LOG(s). Errors if any iterated log is ≤ 0 at s.
    pub fn eval(&self, s: f64) -> Result<f64> {
        let mut acc = if self.sigma == 1 { -1.0 } else { 1.0 };
        for (&r, &a) in self.rvec.iter().zip(&self.avec) {
            let mut l = s;
            for _ in 0..r {
                l = l.ln();
            }
            if !(l > 0.0) {
                return Err(Error::Domain(format!(
                    "log_{r}({s}) = {l} <= 0, below the iterated-log domain"
                )));
            }
            acc *= l.powf(a);
        }
        Ok(acc)
    }

    /// |LOG(s)|; same domain as `eval`.
    pub fn eval_abs(&self, s: f64) -> Result<f64> {
        self.eval(s).map(f64::abs)
    }
}

/// Which blow-up scenario the profile realizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ProfileKind {
    /// u itself blows up like LOG(1/(T-t)) / (T-t)^δ, δ ∈ (0,1); η = -2+2δ.
    Unbounded { delta: f64 },
    /// Derivatives of total order q+1 blow up while orders ≤ q stay bounded,
    /// δ ∈ (0,1/2); η = -q-3+2δ.
    DerivativeBlowup { q: u32, delta: f64 },
    /// f₁ ≡ 0; u ≡ 0. Degenerate closure profile for tests.
    Zero,
}

/// The C∞ step φ(s)/(φ(s)+φ(1-s)) with φ(s) = e^{-1/s} for s > 0, else 0.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// All parameters defining f₁/f₂/r₁. Immutable after construction.
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringProfile {
    kind: ProfileKind,
    /// Blow-up time T.
    t_blowup: f64,
    /// Blow-up location x₀.
    x0: f64,
    eta: f64,
    log: LogFamily,
    /// Contraction constant M ≥ 2.
    m_const: f64,
    /// Tail-onset ordinate y₀ (> 2).
    y0: f64,
    /// Lower edge of the blend (2, or above it when the LOG family needs a
    /// larger domain).
    blend_lo: f64,
}

/// Default M for the unbounded scenario: 2(1 + 4π), twice the minimal value
/// required by the remainder envelope √3/(M-1) < √3/(4π).
pub fn default_m_unbounded() -> f64 {
    2.0 * (1.0 + 4.0 * std::f64::consts::PI)
}

/// Default M for the derivative-blow-up scenario with parameter q:
/// 2(1 + 2^{q+3} π).
pub fn default_m_derivative(q: u32) -> f64 {
    2.0 * (1.0 + 2.0_f64.powi(q as i32 + 3) * std::f64::consts::PI)
}

impl ScatteringProfile {
    /// Build a profile, resolving M (default per kind) and y₀ (smallest value
    /// ≥ 4 making the L¹ budget hold, located by bisection).
    pub fn build(
        kind: ProfileKind,
        t_blowup: f64,
        x0: f64,
        log: LogFamily,
        m_override: Option<f64>,
    ) -> Result<Self> {
        if !(t_blowup > 0.0) {
            return Err(Error::Param(format!("T must be > 0, got {t_blowup}")));
        }
        let (eta, m_default) = match kind {
            ProfileKind::Unbounded { delta } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::Param(format!(
                        "Unbounded requires delta in (0,1), got {delta}"
                    )));
                }
                (-2.0 + 2.0 * delta, default_m_unbounded())
            }
            ProfileKind::DerivativeBlowup { q, delta } => {
                if !(delta > 0.0 && delta < 0.5) {
                    return Err(Error::Param(format!(
                        "DerivativeBlowup requires delta in (0,1/2), got {delta}"
                    )));
                }
                (-(q as f64) - 3.0 + 2.0 * delta, default_m_derivative(q))
            }
            ProfileKind::Zero => {
                let m = m_override.unwrap_or(2.0);
                return Ok(Self {
                    kind,
                    t_blowup,
                    x0,
                    eta: 0.0,
                    log: LogFamily::none(),
                    m_const: m,
                    y0: 4.0,
                    blend_lo: 2.0,
                });
            }
        };
        let m_const = m_override.unwrap_or(m_default);
        if !(m_const >= 2.0) {
            return Err(Error::Param(format!("M must be >= 2, got {m_const}")));
        }
        // The blend must stay inside the LOG domain. For r_p <= 1 the
        // threshold is 1 < 2 and the blend starts at the cutoff edge 2.
        let thr = log.domain_threshold();
        let blend_lo = if thr < 1.8 { 2.0 } else { 1.25 * thr };

        let mut profile = Self {
            kind,
            t_blowup,
            x0,
            eta,
            log,
            m_const,
            y0: 0.0,
            blend_lo,
        };
        profile.y0 = profile.select_y0()?;
        Ok(profile)
    }

    /// Build with an explicit y₀ (parsed configs carry the resolved value).
    pub fn build_with_y0(
        kind: ProfileKind,
        t_blowup: f64,
        x0: f64,
        log: LogFamily,
        m_override: Option<f64>,
        y0: f64,
    ) -> Result<Self> {
        let mut p = Self::build(kind, t_blowup, x0, log, m_override)?;
        if matches!(kind, ProfileKind::Zero) {
            return Ok(p);
        }
        if !(y0 > p.blend_lo) {
            return Err(Error::Param(format!("y0 = {y0} must exceed blend start {}", p.blend_lo)));
        }
        p.y0 = y0;
        Ok(p)
    }

    /// Degenerate f₁ ≡ 0 profile.
    pub fn zero(t_blowup: f64, x0: f64) -> Self {
        Self::build(ProfileKind::Zero, t_blowup, x0, LogFamily::none(), None)
            .expect("zero profile is always valid")
    }

    /// Smallest y₀ ≥ 4 with L¹ budget ≤ 1/M, found by bisection on the
    /// numerically evaluated budget (monotone decreasing in y₀).
    fn select_y0(&self) -> Result<f64> {
        let target = 1.0 / self.m_const;
        let lo_start = (self.blend_lo + 2.0).max(4.0);
        if self.l1_budget_for(lo_start) <= target {
            return Ok(lo_start);
        }
        let mut lo = lo_start;
        let mut hi = lo_start * 2.0;
        while self.l1_budget_for(hi) > target {
            lo = hi;
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::Convergence(format!(
                    "no y0 <= 1e9 satisfies the L1 budget 1/M = {target:.3e}"
                )));
            }
        }
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if self.l1_budget_for(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-9 * hi {
                break;
            }
        }
        Ok(hi)
    }

    /// ∫₁^∞ |f₁(i/y)|/y dy for a candidate y₀.
    fn l1_budget_for(&self, y0: f64) -> f64 {
        let mut p = self.clone();
        p.y0 = y0;
        p.l1_budget()
    }

    /// Numerically evaluated L¹ budget of this profile.
    pub fn l1_budget(&self) -> f64 {
        if matches!(self.kind, ProfileKind::Zero) {
            return 0.0;
        }
        let f = |y: f64| self.f1(y).abs() / y;
        let blend = quad::integrate_geometric(&f, self.blend_lo, self.y0, 0.25, 1.4, 24);
        let tail = quad::tail_integral(&f, self.y0, 24);
        blend + tail
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn t_blowup(&self) -> f64 {
        self.t_blowup
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn log_family(&self) -> &LogFamily {
        &self.log
    }

    pub fn m_const(&self) -> f64 {
        self.m_const
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Ordinate below which f₁ vanishes identically (≥ 2).
    pub fn blend_lo(&self) -> f64 {
        self.blend_lo
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ProfileKind::Zero)
    }

    /// δ of the target blow-up rate (None for the zero profile).
    pub fn delta(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Unbounded { delta } => Some(delta),
            ProfileKind::DerivativeBlowup { delta, .. } => Some(delta),
            ProfileKind::Zero => None,
        }
    }

    /// f₁(i/y) for y ≥ 1: 0 on [1, blend_lo], tail y^η LOG(y) beyond y₀,
    /// C∞ blend in between. Real-valued by construction.
    pub fn f1(&self, y: f64) -> f64 {
        if self.is_zero() || y <= self.blend_lo {
            return 0.0;
        }
        let tail = y.powf(self.eta)
            * self
                .log
                .eval(y)
                .expect("blend_lo keeps y inside the LOG domain");
        if y >= self.y0 {
            tail
        } else {
            tail * smooth_step((y - self.blend_lo) / (self.y0 - self.blend_lo))
        }
    }

    /// |f₁| envelope used for truncation budgets (equals |f₁| pointwise).
    pub fn f1_abs(&self, y: f64) -> f64 {
        self.f1(y).abs()
    }

    /// f₂ at k = iy: r̃(iy) · conj(f₁(i/y)) = r̃(iy) f₁(i/y) since f₁ is real.
    pub fn f2(&self, y: f64) -> Complex64 {
        let f1 = self.f1(y);
        if f1 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let rt = rtilde(Complex64::new(0.0, y)).expect("iy is never a pole of r~ for real y");
        rt * f1
    }

    /// r₁ at k = i/y: f₁(i/y) e^{i x₀ y / 2} e^{-T y²/4}.
    pub fn r1(&self, y: f64) -> Complex64 {
        let f1 = self.f1(y);
        if f1 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let amp = f1 * (-self.t_blowup * y * y / 4.0).exp();
        let phase = self.x0 * y / 2.0;
        Complex64::new(amp * phase.cos(), amp * phase.sin())
    }

    /// Numerically check the admissibility hypotheses: the L¹ budget and
    /// the blow-up-time criterion that singles out T.
    pub fn validate(&self) -> ValidationReport {
        let l1 = self.l1_budget();
        let limit = 1.0 / self.m_const;
        let l1_pass = l1 <= limit + 1e-12;

        // Blow-up-time criterion: g_t(y) = e^{t y²/4} |r₁(i/y)| = f₁ e^{-(T-t)y²/4}
        // must decay at the grid tail for t just below T and grow for t just
        // above T, so the criterion singles out T.
        let check = |t: f64| -> TailTrend {
            if self.is_zero() {
                return TailTrend { finite: true, decreasing: true, increasing: false };
            }
            let y_lo = self.y0.max(4.0);
            let need = (2.0 * self.eta.abs() / (self.t_blowup * 1e-3)).sqrt();
            let y_hi = (4.0 * need).max(20.0 * y_lo);
            let n = 200;
            let mut vals = Vec::with_capacity(n);
            for i in 0..n {
                let y = y_lo * (y_hi / y_lo).powf(i as f64 / (n - 1) as f64);
                vals.push(self.f1(y).abs() * (-(self.t_blowup - t) * y * y / 4.0).exp());
            }
            let finite = vals.iter().all(|v| v.is_finite());
            let tail = &vals[n - 10..];
            let decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
            let increasing = tail.windows(2).all(|w| w[1] >= w[0]) && tail[9] > tail[0];
            TailTrend { finite, decreasing, increasing }
        };
        let before = check(self.t_blowup * (1.0 - 1e-3));
        let after = check(self.t_blowup * (1.0 + 1e-3));
        let blowup_pass = before.finite
            && before.decreasing
            && (self.is_zero() || after.increasing);

        ValidationReport {
            l1_budget: l1,
            l1_limit: limit,
            l1_pass,
            before_t: before,
            after_t: after,
            blowup_time_pass: blowup_pass,
        }
    }

    /// Canonical key=value serialization; the content hash of this text keys
    /// all caches.
    pub fn canonical_config(&self) -> String {
        let mut s = String::new();
        match self.kind {
            ProfileKind::Unbounded { delta } => {
                s.push_str("kind=unbounded\n");
                s.push_str(&format!("delta={delta}\n"));
            }
            ProfileKind::DerivativeBlowup { q, delta } => {
                s.push_str("kind=derivative_blowup\n");
                s.push_str(&format!("delta={delta}\n"));
                s.push_str(&format!("q={q}\n"));
            }
            ProfileKind::Zero => s.push_str("kind=zero\n"),
        }
        s.push_str(&format!("T={}\n", self.t_blowup));
        s.push_str(&format!("x0={}\n", self.x0));
        s.push_str(&format!("p={}\n", self.log.p()));
        if self.log.p() > 0 {
            let rv: Vec<String> = self.log.rvec().iter().map(u32::to_string).collect();
            let av: Vec<String> = self.log.avec().iter().map(f64::to_string).collect();
            s.push_str(&format!("rvec={}\n", rv.join(",")));
            s.push_str(&format!("avec={}\n", av.join(",")));
        }
        s.push_str(&format!("sigma={}\n", self.log.sigma()));
        s.push_str(&format!("M={}\n", self.m_const));
        s.push_str(&format!("y0={}\n", self.y0));
        s.push_str("blend=std_c_infinity\n");
        s
    }

    /// Full SHA-256 of the canonical serialization, lowercase hex.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_config().as_bytes());
        let d = h.finalize();
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// First 16 hex chars of the content hash; used in cache file names.
    pub fn short_hash(&self) -> String {
        self.content_hash()[..16].to_string()
    }

    /// Raw 32-byte SHA-256 digest for binary cache headers.
    pub fn hash_bytes(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.canonical_config().as_bytes());
        h.finalize().into()
    }

    /// Parse the documented key=value configuration.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key=value, got '{line}'",
                    lineno + 1
                )));
            };
            let key = k.trim().to_string();
            match key.as_str() {
                "kind" | "delta" | "q" | "T" | "x0" | "p" | "rvec" | "avec" | "sigma" | "M"
                | "y0" | "blend" => {}
                other => {
                    return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1)))
                }
            }
            kv.insert(key, v.trim().to_string());
        }
        let get = |k: &str| -> Result<&String> {
            kv.get(k).ok_or_else(|| Error::Config(format!("missing key '{k}'")))
        };
        let parse_f64 = |k: &str, v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("key '{k}': invalid number '{v}'")))
        };

        let kind_s = get("kind")?.as_str();
        let t = parse_f64("T", get("T")?)?;
        let x0 = parse_f64("x0", get("x0")?)?;
        if kind_s == "zero" {
            return Ok(Self::zero(t, x0));
        }
        let delta = parse_f64("delta", get("delta")?)?;
        let kind = match kind_s {
            "unbounded" => ProfileKind::Unbounded { delta },
            "derivative_blowup" => {
                let q: u32 = get("q")?
                    .parse()
                    .map_err(|_| Error::Config("key 'q': invalid integer".into()))?;
                ProfileKind::DerivativeBlowup { q, delta }
            }
            other => return Err(Error::Config(format!("unknown kind '{other}'"))),
        };
        let p: usize = get("p")?
            .parse()
            .map_err(|_| Error::Config("key 'p': invalid integer".into()))?;
        let log = if p == 0 {
            let sigma: u8 = kv
                .get("sigma")
                .map(|v| v.parse().map_err(|_| Error::Config("key 'sigma': invalid".into())))
                .transpose()?
                .unwrap_or(0);
            LogFamily::new(vec![], vec![], sigma)?
        } else {
            let rvec: Vec<u32> = get("rvec")?
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| Error::Config("key 'rvec': invalid".into())))
                .collect::<Result<_>>()?;
            let avec: Vec<f64> = get("avec")?
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| Error::Config("key 'avec': invalid".into())))
                .collect::<Result<_>>()?;
            if rvec.len() != p || avec.len() != p {
                return Err(Error::Config(format!(
                    "p = {p} but rvec has {} and avec has {} entries",
                    rvec.len(),
                    avec.len()
                )));
            }
            let sigma: u8 = get("sigma")?
                .parse()
                .map_err(|_| Error::Config("key 'sigma': invalid".into()))?;
            LogFamily::new(rvec, avec, sigma)?
        };
        if let Some(b) = kv.get("blend") {
            if b != "std_c_infinity" {
                return Err(Error::Config(format!("unsupported blend '{b}'")));
            }
        }
        let m_override = kv.get("M").map(|v| parse_f64("M", v)).transpose()?;
        match kv.get("y0") {
            Some(v) => {
                let y0 = parse_f64("y0", v)?;
                Self::build_with_y0(kind, t, x0, log, m_override, y0)
            }
            None => Self::build(kind, t, x0, log, m_override),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailTrend {
    pub finite: bool,
    pub decreasing: bool,
    pub increasing: bool,
}

/// Outcome of `ScatteringProfile::validate`.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub l1_budget: f64,
    pub l1_limit: f64,
    pub l1_pass: bool,
    /// Tail behaviour of e^{t y²/4} |r₁| at t = T(1 - 1e-3).
    pub before_t: TailTrend,
    /// Tail behaviour at t = T(1 + 1e-3).
    pub after_t: TailTrend,
    pub blowup_time_pass: bool,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.l1_pass && self.blowup_time_pass
    }
}
