//! On-disk caches for quadrature grids and assembled operators.
//!
//! File names carry the profile short hash plus a parameter digest; contents
//! follow the binary layouts defined in the contour and kernel modules. A
//! corrupt file surfaces as a recorded `CacheError` and the object is rebuilt
//! from scratch (and the file overwritten).

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::contour::{build_grid_with_policy, GridPolicy, QuadratureGrid};
use crate::error::Result;
use crate::kernel::KernelOperator;
use crate::scattering::ScatteringProfile;

pub const CACHE_ENV_VAR: &str = "BLOWLAB_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    Corrupt,
}

#[derive(Debug, Clone)]
pub struct CacheDir {
    root: PathBuf,
}

impl CacheDir {
    pub fn new(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    /// BLOWLAB_CACHE_DIR if set, otherwise `default`.
    pub fn from_env_or(default: &Path) -> Result<Self> {
        let root = std::env::var_os(CACHE_ENV_VAR)
            .map(PathBuf::from)
            .unwrap_or_else(|| default.to_path_buf());
        Self::new(root)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn digest(parts: &str) -> String {
        let mut h = Sha256::new();
        h.update(parts.as_bytes());
        let d = h.finalize();
        d.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn grid_path(
        &self,
        profile: &ScatteringProfile,
        t: f64,
        tol: f64,
        q_max: u32,
        policy: &GridPolicy,
    ) -> PathBuf {
        let key = format!(
            "{:x};{:x};{};{}",
            t.to_bits(),
            tol.to_bits(),
            q_max,
            serde_json::to_string(policy).unwrap_or_default()
        );
        self.root
            .join(format!("grid-{}-{}.bin", profile.short_hash(), Self::digest(&key)))
    }

    fn operator_path(&self, profile: &ScatteringProfile, grid: &QuadratureGrid, x: f64, t: f64) -> PathBuf {
        let key = format!("{};{:x};{:x}", grid.content_hash(), x.to_bits(), t.to_bits());
        self.root
            .join(format!("oper-{}-{}.bin", profile.short_hash(), Self::digest(&key)))
    }

    /// Load the grid from cache or build and store it.
    pub fn load_or_build_grid(
        &self,
        profile: &ScatteringProfile,
        t: f64,
        tol: f64,
        q_max: u32,
        policy: &GridPolicy,
    ) -> Result<(QuadratureGrid, CacheStatus)> {
        let path = self.grid_path(profile, t, tol, q_max, policy);
        let mut status = CacheStatus::Miss;
        if path.exists() {
            match QuadratureGrid::read_cache(&path, profile) {
                Ok(g) => return Ok((g, CacheStatus::Hit)),
                Err(_) => status = CacheStatus::Corrupt,
            }
        }
        let g = build_grid_with_policy(profile, t, tol, q_max, policy)?;
        g.write_cache(&path, profile)?;
        Ok((g, status))
    }

    /// Load the operator from cache or assemble and store it.
    pub fn load_or_build_operator(
        &self,
        profile: &ScatteringProfile,
        grid: &QuadratureGrid,
        x: f64,
        t: f64,
    ) -> Result<(KernelOperator, CacheStatus)> {
        let path = self.operator_path(profile, grid, x, t);
        let mut status = CacheStatus::Miss;
        if path.exists() {
            match KernelOperator::read_cache(&path, profile, grid) {
                Ok(op) => return Ok((op, CacheStatus::Hit)),
                Err(_) => status = CacheStatus::Corrupt,
            }
        }
        let op = KernelOperator::assemble(profile, grid, x, t)?;
        op.write_cache(&path)?;
        Ok((op, status))
    }

    /// All cache files with sizes, sorted by name.
    pub fn ls(&self) -> Result<Vec<(PathBuf, u64)>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.root)? {
            let entry = entry?;
            let p = entry.path();
            if p.extension().is_some_and(|e| e == "bin") {
                out.push((p.clone(), entry.metadata()?.len()));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Delete all cache files; returns the number removed.
    pub fn purge(&self) -> Result<usize> {
        let files = self.ls()?;
        let n = files.len();
        for (p, _) in files {
            std::fs::remove_file(p)?;
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{LogFamily, ProfileKind};

    #[test]
    fn grid_and_operator_cache_cycle() {
        let p = ScatteringProfile::build(
            ProfileKind::Unbounded { delta: 0.25 },
            1.0,
            0.0,
            LogFamily::none(),
            None,
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("blowlab_cachedir_{}", std::process::id()));
        let cache = CacheDir::new(dir.clone()).unwrap();
        cache.purge().unwrap();
        let pol = GridPolicy::for_window(0.0, 1.0);
        let (g1, s1) = cache.load_or_build_grid(&p, 0.4, 1e-7, 1, &pol).unwrap();
        assert_eq!(s1, CacheStatus::Miss);
        let (g2, s2) = cache.load_or_build_grid(&p, 0.4, 1e-7, 1, &pol).unwrap();
        assert_eq!(s2, CacheStatus::Hit);
        assert_eq!(g1.ys, g2.ys);
        let (o1, s3) = cache.load_or_build_operator(&p, &g1, 0.5, 0.4).unwrap();
        assert_eq!(s3, CacheStatus::Miss);
        let (o2, s4) = cache.load_or_build_operator(&p, &g1, 0.5, 0.4).unwrap();
        assert_eq!(s4, CacheStatus::Hit);
        assert_eq!(o1.a_mat.data(), o2.a_mat.data());
        // corrupt the operator file: next load reports Corrupt and rebuilds
        let files = cache.ls().unwrap();
        let op_file = files.iter().find(|(p, _)| {
            p.file_name().unwrap().to_string_lossy().starts_with("oper-")
        });
        let (path, _) = op_file.unwrap();
        let mut bytes = std::fs::read(path).unwrap();
        bytes[40] ^= 0xFF;
        std::fs::write(path, &bytes).unwrap();
        let (o3, s5) = cache.load_or_build_operator(&p, &g1, 0.5, 0.4).unwrap();
        assert_eq!(s5, CacheStatus::Corrupt);
        assert_eq!(o1.a_mat.data(), o3.a_mat.data());
        assert!(cache.purge().unwrap() >= 2);
        std::fs::remove_dir_all(&dir).ok();
    }
}
