//! `LG(AS(n)) = AS* · (TT+ ⊠ TT-)^{⊠ n}`, the two-Hopf-link baseline it is
//! compared against, and an on-disk cache of results.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::analysis::{predicted_span, summarize};
use crate::basis::{BasisAlgebra, EndoVec, PowerStrategy};
use crate::constants::Constants;
use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;

/// Overrides the cache directory.
pub const CACHE_DIR_ENV: &str = "LG_CACHE_DIR";

const CACHE_FORMAT: &str = "lg-as-result";
const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Checksum of the constants file the result was computed from.
    pub checksum: String,
    /// Power strategy that produced the polynomial.
    pub strategy: PowerStrategy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Hit,
    Stored,
    /// Computed, but writing the entry failed; carries the reason.
    StoreFailed(String),
}

#[derive(Debug)]
pub struct LGResult {
    pub n: u64,
    pub polynomial: LaurentPoly,
    pub provenance: Provenance,
    pub cache: CacheStatus,
    algebra: BasisAlgebra,
    tangle: EndoVec,
    power_vector: OnceLock<EndoVec>,
}

impl LGResult {
    /// `(TT+ ⊠ TT-)^{⊠ n}`. The default strategy pairs `AS*` with the power
    /// without forming it, so the vector is computed on first access.
    pub fn power_vector(&self) -> &EndoVec {
        self.power_vector
            .get_or_init(|| self.algebra.boxtimes_pow(&self.tangle, self.n, self.provenance.strategy))
    }

    /// `n = 0` is the unit power: outside the family, kept as an
    /// extrapolation.
    pub fn is_extrapolation(&self) -> bool {
        self.n == 0
    }
}

/// One JSON file per `(n, checksum)`; the polynomial is stored in the
/// canonical structured form. Fields are declared in sorted order so the
/// serialization is canonical.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheEntry {
    checksum: String,
    format: String,
    n: u64,
    polynomial: LaurentPoly,
    strategy: PowerStrategy,
    version: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultCache {
    dir: PathBuf,
}

impl ResultCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResultCache { dir: dir.into() }
    }

    /// `$LG_CACHE_DIR`, else `$XDG_CACHE_HOME/lg-as`, else `~/.cache/lg-as`.
    pub fn from_env() -> Option<Self> {
        let var = |k: &str| std::env::var_os(k).filter(|v| !v.is_empty()).map(PathBuf::from);
        if let Some(dir) = var(CACHE_DIR_ENV) {
            return Some(ResultCache::new(dir));
        }
        var("XDG_CACHE_HOME")
            .or_else(|| var("HOME").map(|h| h.join(".cache")))
            .map(|base| ResultCache::new(base.join("lg-as")))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, n: u64, checksum: &str) -> PathBuf {
        let digest = checksum.strip_prefix("sha256:").unwrap_or(checksum);
        self.dir.join(format!("lg-as-{n}-{digest}.json"))
    }

    /// `Ok(None)` when there is no entry; `CorruptCache` when there is one
    /// that does not parse or belongs to another key.
    pub fn load(&self, n: u64, checksum: &str) -> Result<Option<(LaurentPoly, PowerStrategy)>> {
        let path = self.path_for(n, checksum);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |message: String| Error::CorruptCache {
            path: path.display().to_string(),
            message,
        };
        let entry: CacheEntry = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if entry.format != CACHE_FORMAT || entry.version != CACHE_VERSION {
            return Err(corrupt(format!("unexpected format {} v{}", entry.format, entry.version)));
        }
        if entry.n != n || entry.checksum != checksum {
            return Err(corrupt(format!("entry is for n = {} with {}", entry.n, entry.checksum)));
        }
        Ok(Some((entry.polynomial, entry.strategy)))
    }

    /// Writes to a temporary file in the same directory, then renames it
    /// into place, so readers never see a partial entry.
    pub fn store(&self, n: u64, checksum: &str, strategy: PowerStrategy, polynomial: &LaurentPoly) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(n, checksum);
        let unique = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos());
        let tmp = self.dir.join(format!(
            ".{}.{}.{unique}.tmp",
            path.file_name().unwrap().to_string_lossy(),
            std::process::id()
        ));
        let entry = CacheEntry {
            checksum: checksum.to_string(),
            format: CACHE_FORMAT.to_string(),
            n,
            polynomial: polynomial.clone(),
            strategy,
            version: CACHE_VERSION,
        };
        let write = || -> Result<()> {
            let mut w = BufWriter::new(fs::File::create(&tmp)?);
            serde_json::to_writer(&mut w, &entry)?;
            w.write_all(b"\n")?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
            fs::rename(&tmp, &path)?;
            Ok(())
        };
        write().inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })?;
        Ok(path)
    }
}

/// Computes `LG(AS(n))` against one set of constants.
#[derive(Clone, Debug)]
pub struct Pipeline<'c> {
    constants: &'c Constants,
    strategy: PowerStrategy,
    cache: Option<ResultCache>,
}

impl<'c> Pipeline<'c> {
    pub fn new(constants: &'c Constants) -> Self {
        Pipeline {
            constants,
            strategy: PowerStrategy::default(),
            cache: None,
        }
    }

    pub fn with_strategy(mut self, strategy: PowerStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_cache(mut self, cache: Option<ResultCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn constants(&self) -> &'c Constants {
        self.constants
    }

    /// `TT+ ⊠ TT-`, the tangle whose powers build `AS(n)`.
    pub fn tangle(&self) -> EndoVec {
        let c = self.constants;
        c.algebra().boxtimes(c.tt_plus(), c.tt_minus())
    }

    fn result(&self, n: u64, polynomial: LaurentPoly, strategy: PowerStrategy, cache: CacheStatus) -> LGResult {
        LGResult {
            n,
            polynomial,
            provenance: Provenance {
                checksum: self.constants.checksum().to_string(),
                strategy,
            },
            cache,
            algebra: self.constants.algebra().clone(),
            tangle: self.tangle(),
            power_vector: OnceLock::new(),
        }
    }

    /// Computes without touching the cache.
    pub fn compute(&self, n: u64) -> LGResult {
        let c = self.constants;
        let tangle = self.tangle();
        let star = c.as_star();
        if let (PowerStrategy::Split, Some(split)) = (self.strategy, c.algebra().splitting()) {
            let poly = split.pair_pow(&tangle, n, star);
            return self.result(n, poly, self.strategy, CacheStatus::Disabled);
        }
        let vector = c.algebra().boxtimes_pow(&tangle, n, self.strategy);
        let mut r = self.result(n, star.pair(&vector), self.strategy, CacheStatus::Disabled);
        r.power_vector = OnceLock::from(vector);
        r
    }

    /// Cached by `(n, constants checksum)`. A corrupt entry is recomputed and
    /// overwritten.
    pub fn lg_as(&self, n: u64) -> LGResult {
        let Some(cache) = &self.cache else {
            return self.compute(n);
        };
        let checksum = self.constants.checksum();
        if let Ok(Some((poly, strategy))) = cache.load(n, checksum) {
            return self.result(n, poly, strategy, CacheStatus::Hit);
        }
        let mut r = self.compute(n);
        r.cache = match cache.store(n, checksum, r.provenance.strategy, &r.polynomial) {
            Ok(_) => CacheStatus::Stored,
            Err(e) => CacheStatus::StoreFailed(e.to_string()),
        };
        r
    }

    /// `AS*(ll)`: the closure with the clasp replaced by the identity tangle,
    /// which is the connected sum of two Hopf links.
    pub fn baseline_hh(&self) -> LaurentPoly {
        baseline_of(self.constants)
    }

    pub fn distinguishes(&self, n: u64) -> DistinguishReport {
        let lg = self.lg_as(n).polynomial;
        distinguish(n, &lg, &self.baseline_hh())
    }
}

/// Builtin constants and the environment's cache directory.
pub fn lg_as(n: u64) -> LGResult {
    Pipeline::new(Constants::builtin())
        .with_cache(ResultCache::from_env())
        .lg_as(n)
}

pub fn baseline_hh() -> LaurentPoly {
    baseline_of(Constants::builtin())
}

fn baseline_of(c: &Constants) -> LaurentPoly {
    c.as_star().pair(&EndoVec::ll())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistinguishReport {
    pub n: u64,
    pub distinguishes: bool,
    pub lg_span: i64,
    pub baseline_span: i64,
    /// `4 (4n + 2)`, the span the closed form predicts.
    pub predicted_span: i64,
    pub polynomials_differ: bool,
}

impl std::fmt::Display for DistinguishReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "n = {}: s-span {} (predicted {}) vs baseline {}; polynomials {}",
            self.n,
            self.lg_span,
            self.predicted_span,
            self.baseline_span,
            if self.polynomials_differ { "differ" } else { "coincide" }
        )
    }
}

/// Span comparison plus full inequality. Either alone separates the links;
/// the span gap needs no identification of the baseline.
pub fn distinguish(n: u64, lg: &LaurentPoly, baseline: &LaurentPoly) -> DistinguishReport {
    let span = |p: &LaurentPoly| summarize(p).map_or(0, |s| s.s_span);
    let (lg_span, baseline_span) = (span(lg), span(baseline));
    let polynomials_differ = lg != baseline;
    DistinguishReport {
        n,
        distinguishes: polynomials_differ,
        lg_span,
        baseline_span,
        predicted_span: predicted_span(n),
        polynomials_differ,
    }
}

/// `(s - s^-1)^4`, the Alexander-Conway value every `AS(n)` shares with the
/// baseline.
pub fn alexander_expected() -> LaurentPoly {
    "s - s^-1".parse::<LaurentPoly>().expect("literal parses").pow(4)
}

/// Whether `p(q = 1) = (s - s^-1)^4`.
pub fn q1_check(p: &LaurentPoly) -> bool {
    p.substitute_q1() == alexander_expected()
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;

    use super::*;

    fn pipeline() -> Pipeline<'static> {
        Pipeline::new(Constants::builtin())
    }

    #[test]
    fn first_link_matches_reference() {
        let r = pipeline().compute(1);
        assert_eq!(&r.polynomial, Constants::builtin().lg_as_1_reference());
        assert_eq!(r.polynomial.coeff(2, 12), BigInt::from(8));
        assert_eq!(r.polynomial.coeff(-20, 12), BigInt::from(12));
        assert_eq!(r.polynomial.coeff(2, 0), BigInt::from(10));
        assert!(q1_check(&r.polynomial));
    }

    #[test]
    fn power_vector_pairs_to_polynomial() {
        for strategy in PowerStrategy::ALL {
            let r = pipeline().with_strategy(strategy).compute(3);
            assert_eq!(Constants::builtin().as_star().pair(r.power_vector()), r.polynomial);
            assert_eq!(r.provenance.strategy, strategy);
        }
    }

    #[test]
    fn unit_power_is_the_closure_of_cc() {
        let r = pipeline().compute(0);
        assert!(r.is_extrapolation());
        assert_eq!(r.polynomial, Constants::builtin().as_star().pair(&EndoVec::cc()));
    }

    #[test]
    fn baseline_shape() {
        let b = baseline_hh();
        let s = summarize(&b).unwrap();
        assert_eq!((s.leading.sexp, s.s_span), (6, 12));
        assert_eq!(s.trailing.sexp, -6);
        let r = pipeline().distinguishes(1);
        assert!(r.distinguishes);
        assert_eq!((r.lg_span, r.baseline_span), (24, 12));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultCache::new(dir.path());
        let p = pipeline().with_cache(Some(cache.clone()));
        let cold = p.lg_as(2);
        assert_eq!(cold.cache, CacheStatus::Stored);
        let path = cache.path_for(2, Constants::builtin().checksum());
        let bytes = fs::read(&path).unwrap();
        let warm = p.lg_as(2);
        assert_eq!(warm.cache, CacheStatus::Hit);
        assert_eq!(warm.polynomial, cold.polynomial);
        // Rewriting the same key is byte-identical.
        cache.store(2, Constants::builtin().checksum(), cold.provenance.strategy, &cold.polynomial).unwrap();
        assert_eq!(fs::read(&path).unwrap(), bytes);

        fs::write(&path, b"{\"truncated\":").unwrap();
        assert!(matches!(cache.load(2, Constants::builtin().checksum()), Err(Error::CorruptCache { .. })));
        let healed = p.lg_as(2);
        assert_eq!(healed.cache, CacheStatus::Stored);
        assert_eq!(fs::read(&path).unwrap(), bytes);
        // Other checksums are other keys.
        assert_eq!(cache.load(2, "sha256:00").unwrap(), None);
    }
}
