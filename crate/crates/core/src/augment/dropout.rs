use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which effects fire for a clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EffectFlags {
    pub bokeh: bool,
    pub distortion: bool,
    pub zoom: bool,
}

impl EffectFlags {
    pub const NONE: EffectFlags = EffectFlags {
        bokeh: false,
        distortion: false,
        zoom: false,
    };

    pub fn any(&self) -> bool {
        self.bokeh || self.distortion || self.zoom
    }
}

/// Nested Bernoulli gates: an outer gate with probability `p` decides whether
/// the clip is augmented at all, then bokeh, distortion and zoom each pass
/// their own gate with probability `p`. A single effect therefore fires with
/// probability `p²`.
pub fn sample_dropout<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<EffectFlags> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "dropout probability must be in [0, 1], got {p}"
        )));
    }
    if rng.random::<f64>() >= p {
        return Ok(EffectFlags::NONE);
    }
    let bokeh = rng.random::<f64>() < p;
    let distortion = rng.random::<f64>() < p;
    let zoom = rng.random::<f64>() < p;
    Ok(EffectFlags {
        bokeh,
        distortion,
        zoom,
    })
}

pub fn apply_dropout(seed: u64, p: f64) -> Result<EffectFlags> {
    sample_dropout(&mut ChaCha8Rng::seed_from_u64(seed), p)
}
