//! Global size guard for dense d×d allocations.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default cap on any single matrix dimension.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Environment variable that overrides [`DEFAULT_MAX_DIM`].
pub const MAX_DIM_ENV: &str = "EQLAB_MAX_DIM";

/// The dimension cap in effect for this process. Read once.
pub fn max_dim() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MAX_DIM_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_DIM)
    })
}

pub(crate) fn check_dim(requested: usize) -> Result<()> {
    let max = max_dim();
    if requested > max {
        Err(Error::DimensionOverflow { requested, max })
    } else {
        Ok(())
    }
}

/// `a * b`, failing on overflow or when the product exceeds the cap.
pub(crate) fn checked_product(a: usize, b: usize) -> Result<usize> {
    let p = a.checked_mul(b).ok_or(Error::DimensionOverflow {
        requested: usize::MAX,
        max: max_dim(),
    })?;
    check_dim(p)?;
    Ok(p)
}
