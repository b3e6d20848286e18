//! The projection measurement P(φ) = |⟨Ψ_2N | Ψ_2N(φ)⟩|², computed two
//! independent ways: a closed-form cosine sum over binomial weights, and
//! the constructive route (phase shift, second 50:50 splitter, N,N
//! coincidence). A scalar loss factor scales the success rate without
//! touching the normalized shape.

use crate::error::{Error, Result};
use crate::fock::{apply_50_50_bs, apply_phase_shift, twin_fock_after_bs, ModeLabel};

/// Largest N accepted by the constructive route (full state construction).
pub const MAX_CONSTRUCTIVE_N: u64 = 2000;

/// Result of a projection measurement: the normalized probability and the
/// success-rate scale accumulated from losses. The measured rate is
/// `probability * success_scale`; keeping the factors separate is what
/// makes the downstream phase uncertainty loss-invariant.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionOutcome {
    pub probability: f64,
    pub success_scale: f64,
}

impl ProjectionOutcome {
    pub fn lossless(probability: f64) -> Self {
        Self {
            probability,
            success_scale: 1.0,
        }
    }

    pub fn rate(&self) -> f64 {
        self.probability * self.success_scale
    }
}

/// Binomial weights w_k = C(2k,k) C(2N−2k,N−k) / 4^N for k = 0 ..= N,
/// via the multiplicative recurrence from w_0 = C(2N,N)/4^N. They sum to 1.
pub(crate) fn projection_weights(n_pairs: u64) -> Result<Vec<f64>> {
    if n_pairs == 0 {
        return Err(Error::PhotonNumberOutOfRange(n_pairs, u64::MAX));
    }
    let n = n_pairs as usize;
    // ln C(2N,N) − N ln 4
    let mut ln_w0 = 0.0f64;
    for i in 1..=n {
        ln_w0 += ((n + i) as f64).ln() - (i as f64).ln();
    }
    ln_w0 -= n as f64 * 4f64.ln();
    let mut weights = Vec::with_capacity(n + 1);
    let mut w = ln_w0.exp();
    weights.push(w);
    for k in 0..n {
        // w_{k+1}/w_k = [(2k+1)(N−k)] / [(k+1)(2N−2k−1)]
        let num = (2 * k + 1) as f64 * (n - k) as f64;
        let den = (k + 1) as f64 * (2 * (n - k) - 1) as f64;
        w *= num / den;
        weights.push(w);
    }
    Ok(weights)
}

/// Closed-form P(φ) = { Σ_k w_k cos[φ(2k − N)] }².
pub fn projection_closed_form(n_pairs: u64, phi: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(Error::NonFinitePhase(phi));
    }
    let weights = projection_weights(n_pairs)?;
    Ok(closed_form_with_weights(&weights, phi))
}

pub(crate) fn closed_form_with_weights(weights: &[f64], phi: f64) -> f64 {
    let n = weights.len() - 1;
    let amp: f64 = weights
        .iter()
        .enumerate()
        .map(|(k, &w)| w * (phi * (2.0 * k as f64 - n as f64)).cos())
        .sum();
    (amp * amp).clamp(0.0, 1.0)
}

/// Constructive P(φ): build |Ψ_2N⟩, shift the up mode by φ, pass through
/// the second 50:50 splitter, and read off the (N,N) coincidence
/// probability |⟨N,N| · ⟩|².
pub fn projection_constructive(n_pairs: u64, phi: f64) -> Result<f64> {
    if n_pairs == 0 || n_pairs > MAX_CONSTRUCTIVE_N {
        return Err(Error::PhotonNumberOutOfRange(n_pairs, MAX_CONSTRUCTIVE_N));
    }
    let state = twin_fock_after_bs(n_pairs)?;
    let shifted = apply_phase_shift(&state, phi, ModeLabel::U)?;
    let out = apply_50_50_bs(&shifted);
    Ok(out.amplitude(n_pairs as usize).norm_sqr().clamp(0.0, 1.0))
}

/// Scales the success rate by η² for a loss/efficiency factor η ∈ (0, 1].
pub fn apply_loss(outcome: ProjectionOutcome, eta: f64) -> Result<ProjectionOutcome> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "eta",
            value: eta,
            range: "(0, 1]",
        });
    }
    Ok(ProjectionOutcome {
        probability: outcome.probability,
        success_scale: outcome.success_scale * eta * eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_one() {
        for n in [1u64, 2, 7, 33, 50] {
            let w = projection_weights(n).unwrap();
            assert_eq!(w.len() as u64, n + 1);
            let sum: f64 = w.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn n1_is_cos_squared() {
        for i in 0..25 {
            let phi = i as f64 * 0.26 - 3.0;
            let p = projection_closed_form(1, phi).unwrap();
            assert_abs_diff_eq!(p, phi.cos().powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn n2_matches_quoted_closed_form() {
        for i in 0..25 {
            let phi = i as f64 * 0.26 - 3.0;
            let p = projection_closed_form(2, phi).unwrap();
            let expected = (0.75 * (2.0 * phi).cos() + 0.25).powi(2);
            assert_abs_diff_eq!(p, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn unit_probability_at_zero_phase() {
        for n in [1u64, 3, 10, 41] {
            assert_abs_diff_eq!(projection_closed_form(n, 0.0).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(projection_constructive(n, 0.0).unwrap(), 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn even_and_pi_periodic() {
        for n in [1u64, 2, 5, 8] {
            for i in 1..20 {
                let phi = i as f64 * 0.15;
                let p = projection_closed_form(n, phi).unwrap();
                let p_neg = projection_closed_form(n, -phi).unwrap();
                let p_shift = projection_closed_form(n, phi + std::f64::consts::PI).unwrap();
                assert_abs_diff_eq!(p, p_neg, epsilon = 1e-13);
                assert_abs_diff_eq!(p, p_shift, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn constructive_examples() {
        let p = projection_constructive(1, std::f64::consts::FRAC_PI_3).unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
        let p = projection_constructive(3, 0.0).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        let p = projection_constructive(2, std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn rejects_zero_pairs() {
        assert!(projection_closed_form(0, 0.1).is_err());
        assert!(projection_constructive(0, 0.1).is_err());
        assert!(projection_constructive(MAX_CONSTRUCTIVE_N + 1, 0.1).is_err());
    }

    #[test]
    fn loss_scales_rate_only() {
        let out = ProjectionOutcome::lossless(0.8);
        let same = apply_loss(out, 1.0).unwrap();
        assert_eq!(same.probability, 0.8);
        assert_eq!(same.success_scale, 1.0);

        let halved = apply_loss(out, 0.5).unwrap();
        assert_abs_diff_eq!(halved.success_scale, 0.25, epsilon = 1e-15);
        assert_eq!(halved.probability, 0.8);

        let seq = apply_loss(apply_loss(out, 0.6).unwrap(), 0.7).unwrap();
        let once = apply_loss(out, 0.42).unwrap();
        assert_abs_diff_eq!(seq.success_scale, once.success_scale, epsilon = 1e-15);

        assert!(apply_loss(out, 0.0).is_err());
        assert!(apply_loss(out, 1.5).is_err());
    }
}
