//! Binary cross entropy over the ten label slots.

use crate::error::{Error, Result};

pub const DEFAULT_PROB_CLIP: f64 = 1e-7;

/// Mean over labels of `-[t ln y + (1 - t) ln(1 - y)]`, with probabilities
/// clipped into `[clip, 1 - clip]` so the loss stays finite.
pub fn bce_loss(y: &[f64], t: &[f64], clip: f64) -> Result<f64> {
    if y.len() != t.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: t.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut total = 0.0;
    for (&yi, &ti) in y.iter().zip(t) {
        let p = yi.clamp(clip, 1.0 - clip);
        total -= ti * p.ln() + (1.0 - ti) * (1.0 - p).ln();
    }
    Ok(total / y.len() as f64)
}
