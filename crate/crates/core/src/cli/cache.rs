//! On-disk memo of formal group law expansions, addressed by the SHA-256 of
//! `(theory, p, s, order)`.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficients::{Coeff, CoefficientRing, Fp, Q};
use crate::fgl::{bp_fgl, morava_fgl, table_with, FglError, FormalGroupLaw, Provenance};
use crate::series::parse_series;

pub const CACHE_ENV: &str = "FGL_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Entry {
    theory: String,
    p: u32,
    s: u32,
    order: u32,
    law: String,
}

/// Outcome of a cache lookup, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CacheStatus {
    Disabled,
    Hit,
    Miss,
}

#[derive(Debug, Clone, Default)]
pub struct FglCache {
    dir: Option<PathBuf>,
}

impl FglCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        FglCache { dir }
    }

    pub fn from_env() -> Self {
        FglCache { dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from) }
    }

    pub fn key(theory: &str, p: u32, s: u32, order: u32) -> String {
        let mut h = Sha256::new();
        h.update(format!("theory={theory};p={p};s={s};order={order}").as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn load<C: Coeff>(
        &self,
        theory: &str,
        p: u32,
        s: u32,
        order: u32,
        ring: CoefficientRing,
        provenance: Provenance,
    ) -> Option<FormalGroupLaw<C>> {
        let path = self.path(&Self::key(theory, p, s, order))?;
        let text = std::fs::read_to_string(path).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        if entry.theory != theory || entry.p != p || entry.s != s || entry.order != order {
            return None;
        }
        let ring = Arc::new(ring);
        let t = table_with(&ring, &["x", "y"]);
        let law = parse_series(&entry.law, &ring, &t, Some(2 * order as i64)).ok()?;
        FormalGroupLaw::from_series(law, order, provenance).ok()
    }

    fn store<C: Coeff>(&self, theory: &str, p: u32, s: u32, law: &FormalGroupLaw<C>) {
        let Some(path) = self.path(&Self::key(theory, p, s, law.order())) else { return };
        let entry = Entry { theory: theory.into(), p, s, order: law.order(), law: law.series().to_string() };
        if let Some(dir) = path.parent() {
            let _ = std::fs::create_dir_all(dir);
        }
        if let Ok(text) = serde_json::to_string(&entry) {
            let tmp = path.with_extension("tmp");
            if std::fs::write(&tmp, text).is_ok() {
                let _ = std::fs::rename(&tmp, &path);
            }
        }
    }

    pub fn morava(&self, p: u32, s: u32, order: u32) -> Result<(FormalGroupLaw<Fp>, CacheStatus), FglError> {
        if self.dir.is_none() {
            return Ok((morava_fgl(p, s, order)?, CacheStatus::Disabled));
        }
        let ring = CoefficientRing::morava(p, s)?;
        if let Some(f) = self.load("morava", p, s, order, ring, Provenance::HondaModP) {
            return Ok((f, CacheStatus::Hit));
        }
        let f = morava_fgl(p, s, order)?;
        self.store("morava", p, s, &f);
        Ok((f, CacheStatus::Miss))
    }

    pub fn bp(&self, p: u32, n: u32, order: u32) -> Result<(FormalGroupLaw<Q>, CacheStatus), FglError> {
        if self.dir.is_none() {
            return Ok((bp_fgl(p, n, order)?, CacheStatus::Disabled));
        }
        let ring = CoefficientRing::bp(p, n)?;
        if let Some(f) = self.load("bp", p, n, order, ring, Provenance::BpLog) {
            return Ok((f, CacheStatus::Hit));
        }
        let f = bp_fgl(p, n, order)?;
        self.store("bp", p, n, &f);
        Ok((f, CacheStatus::Miss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FglCache::new(Some(dir.path().to_path_buf()));
        let (a, st) = cache.morava(3, 2, 12).unwrap();
        assert_eq!(st, CacheStatus::Miss);
        let (b, st) = cache.morava(3, 2, 12).unwrap();
        assert_eq!(st, CacheStatus::Hit);
        assert_eq!(a.series(), b.series());
        let (c, _) = cache.bp(2, 2, 8).unwrap();
        let (d, st) = cache.bp(2, 2, 8).unwrap();
        assert_eq!(st, CacheStatus::Hit);
        assert_eq!(c.series(), d.series());
    }

    #[test]
    fn corrupt_entry_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FglCache::new(Some(dir.path().to_path_buf()));
        std::fs::write(dir.path().join(format!("{}.json", FglCache::key("morava", 2, 1, 4))), "not json").unwrap();
        let (f, st) = cache.morava(2, 1, 4).unwrap();
        assert_eq!(st, CacheStatus::Miss);
        assert_eq!(f.series(), morava_fgl(2, 1, 4).unwrap().series());
    }

    #[test]
    fn keys_differ() {
        assert_ne!(FglCache::key("morava", 2, 1, 4), FglCache::key("morava", 2, 1, 5));
        assert_eq!(FglCache::key("bp", 2, 3, 32).len(), 64);
    }
}
