//! Linear MMSE detection.

use super::{DetectionResult, Observation};
use crate::modem::Constellation;
use crate::numerics::{dot_h, Cholesky, GaussianScalar};
use crate::pairwise::exclusion_covariance;
use crate::Result;

/// `x_j = h_j^H K^{-1} y` with `K = H H^H + s2 I`, variance `1 - h_j^H K^{-1} h_j`.
pub fn detect_lmmse(obs: super::Observation<'_>, constellation: &Constellation) -> Result<DetectionResult> {
    run(obs, constellation)
}

pub(super) fn run(obs: Observation<'_>, constellation: &Constellation) -> Result<DetectionResult> {
    let chol = Cholesky::factor(&exclusion_covariance(obs.channel, &[]))?;
    let w = chol.solve(obs.y)?;
    let beliefs = (0..obs.tx())
        .map(|j| {
            let h = obs.channel.column(j);
            let mean = dot_h(h, &w);
            let gain = chol.quadratic_form(h)?;
            // 1 - gain is positive for s2 > 0; floor guards rounding at tiny s2
            GaussianScalar::new(mean, (1.0 - gain).max(1e-12))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionResult::from_gaussians(beliefs, constellation))
}
