//! On-disk cache of Campbell-Hausdorff coefficients.
//!
//! One JSON file per `(degree, order)`:
//! `{"degree": N, "order": "XY", "coeffs": [{"word": "xxy", "c": "1/12"}, ...]}`.
//! Files are written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::free_lie::{bch, BchOrder, CoeffEntry, LieSeries};
use crate::Result;

/// Environment variable overriding the default cache directory.
pub const CACHE_DIR_ENV: &str = "KVGEOM_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BchFile {
    pub degree: usize,
    pub order: BchOrder,
    pub coeffs: Vec<CoeffEntry>,
}

impl BchFile {
    pub fn from_series(series: &LieSeries, order: BchOrder) -> Self {
        BchFile {
            degree: series.degree(),
            order,
            coeffs: series.to_coeff_list(),
        }
    }

    pub fn to_series(&self) -> Result<LieSeries> {
        LieSeries::from_coeff_list(self.degree, &self.coeffs)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Resolves the cache directory: explicit flag, then the environment
/// variable, then `./.kvgeom-cache`.
pub fn cache_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".kvgeom-cache"))
}

pub fn cache_path(dir: &Path, degree: usize, order: BchOrder) -> PathBuf {
    dir.join(format!("bch-{order}-{degree}.json"))
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads the series from the cache, computing and storing it on a miss.
/// A corrupt cache entry is recomputed and overwritten.
pub fn load_or_compute(dir: &Path, degree: usize, order: BchOrder) -> Result<LieSeries> {
    let path = cache_path(dir, degree, order);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(file) = BchFile::from_json(&text) {
            if file.degree == degree && file.order == order {
                if let Ok(s) = file.to_series() {
                    return Ok(s);
                }
            }
        }
    }
    let series = bch(degree, order);
    write_atomic(&path, &BchFile::from_series(&series, order).to_json()?)?;
    Ok(series)
}
