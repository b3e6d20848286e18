//! Two-mode Fock states and the linear-optical primitives built on them:
//! 50:50 beam splitter, single-mode phase shifter, inner products and
//! photon-number moments.
//!
//! A state with fixed total photon number `n` is stored as the `n + 1`
//! complex amplitudes of the basis vectors |j⟩_u |n−j⟩_d, ordered by
//! ascending occupation of the up mode.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest photon-pair number accepted by [`twin_fock_after_bs`].
pub const MAX_TWIN_FOCK_N: u64 = 1_000_000;

/// The two optical modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeLabel {
    U,
    D,
}

/// Pure state of two bosonic modes at fixed total photon number.
#[derive(Clone, Debug)]
pub struct TwoModeState {
    total_photons: usize,
    amplitudes: Vec<Complex64>,
}

/// First and second moments of the photon number in one mode.
#[derive(Clone, Copy, Debug)]
pub struct PhotonMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

impl TwoModeState {
    /// Builds a state from explicit amplitudes, validating length and
    /// normalization (1e-12 on the squared norm).
    pub fn from_amplitudes(total_photons: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != total_photons + 1 {
            return Err(Error::BadAmplitudeLength {
                got: amplitudes.len(),
                expected: total_photons + 1,
            });
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized((norm2 - 1.0).abs()));
        }
        Ok(Self {
            total_photons,
            amplitudes,
        })
    }

    // Outputs of the optical primitives carry their norm by construction;
    // skip the strict check so roundoff slightly above 1e-12 cannot reject
    // a legitimately unitary result.
    fn from_parts(total_photons: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), total_photons + 1);
        Self {
            total_photons,
            amplitudes,
        }
    }

    pub fn total_photons(&self) -> usize {
        self.total_photons
    }

    /// Amplitude of |j⟩_u |n−j⟩_d.
    pub fn amplitude(&self, j: usize) -> Complex64 {
        self.amplitudes[j]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Cumulative table of ln k! for k = 0 ..= n.
fn ln_factorial_table(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for k in 1..=n {
        table[k] = table[k - 1] + (k as f64).ln();
    }
    table
}

fn ln_binomial(table: &[f64], n: usize, k: usize) -> f64 {
    table[n] - table[k] - table[n - k]
}

/// The 2N-photon state obtained by sending the twin Fock state |N,N⟩
/// through a 50:50 beam splitter.
///
/// Only even up-mode occupations 2k are populated, with amplitude
/// (−1)^{N−k} sqrt(C(2k,k) C(2N−2k,N−k) / 4^N). Binomial weights are
/// accumulated in the log domain so large N cannot overflow.
pub fn twin_fock_after_bs(n_pairs: u64) -> Result<TwoModeState> {
    if n_pairs == 0 || n_pairs > MAX_TWIN_FOCK_N {
        return Err(Error::PhotonNumberOutOfRange(n_pairs, MAX_TWIN_FOCK_N));
    }
    let n = n_pairs as usize;
    let total = 2 * n;
    let table = ln_factorial_table(total);
    let ln4n = total as f64 * 2f64.ln();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); total + 1];
    let mut norm2 = 0.0;
    for k in 0..=n {
        let ln_w = ln_binomial(&table, 2 * k, k) + ln_binomial(&table, total - 2 * k, n - k) - ln4n;
        let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        let amp = sign * (0.5 * ln_w).exp();
        norm2 += amp * amp;
        amplitudes[2 * k] = Complex64::new(amp, 0.0);
    }
    // Σ_k C(2k,k) C(2N−2k,N−k) = 4^N, so norm2 is 1 up to roundoff.
    let scale = 1.0 / norm2.sqrt();
    for a in &mut amplitudes {
        *a *= scale;
    }
    Ok(TwoModeState::from_parts(total, amplitudes))
}

/// Applies exp(iφ n̂) on the chosen mode.
pub fn apply_phase_shift(state: &TwoModeState, phi: f64, mode: ModeLabel) -> Result<TwoModeState> {
    if !phi.is_finite() {
        return Err(Error::NonFinitePhase(phi));
    }
    let n = state.total_photons;
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let occ = match mode {
                ModeLabel::U => j,
                ModeLabel::D => n - j,
            };
            a * Complex64::from_polar(1.0, occ as f64 * phi)
        })
        .collect();
    Ok(TwoModeState::from_parts(n, amplitudes))
}

// ln |x| of an exact integer, usable far beyond the f64 range.
fn ln_abs_bigint(x: &BigInt) -> f64 {
    let mag = x.magnitude();
    let bits = mag.bits();
    if bits <= 63 {
        let v: u64 = mag.try_into().expect("fits in u64");
        return (v as f64).ln();
    }
    let top: u64 = (mag >> (bits - 63)).try_into().expect("63 bits fit");
    (top as f64).ln() + (bits - 63) as f64 * std::f64::consts::LN_2
}

// Matrix element ⟨m, n−m| BS |j, n−j⟩ for every m, i.e. one column of
// the beam-splitter unitary. The integer coefficients of
// (u + d)^j (u − d)^{n−j} carry all the cancellation, so they are built
// exactly; only the final combination with the factorial scale is
// floating point. A naive f64 binomial convolution loses ~2^{n/2}·eps
// here and fails well before n = 100.
fn bs_column(n: usize, j: usize, ln_fact: &[f64]) -> Vec<f64> {
    let mut coeff: Vec<BigInt> = vec![BigInt::from(1)];
    for t in 0..n {
        let mut next = vec![BigInt::from(0); t + 2];
        let plus = t < j;
        for (m, c) in coeff.iter().enumerate() {
            next[m + 1] += c;
            if plus {
                next[m] += c;
            } else {
                next[m] -= c;
            }
        }
        coeff = next;
    }
    let base = -0.5 * (n as f64) * std::f64::consts::LN_2
        - 0.5 * (ln_fact[j] + ln_fact[n - j]);
    coeff
        .iter()
        .enumerate()
        .map(|(m, c)| {
            if c.sign() == Sign::NoSign {
                return 0.0;
            }
            let ln_mag = ln_abs_bigint(c) + 0.5 * (ln_fact[m] + ln_fact[n - m]) + base;
            let sign = if c.sign() == Sign::Minus { -1.0 } else { 1.0 };
            sign * ln_mag.exp()
        })
        .collect()
}

// Full (n+1)×(n+1) beam-splitter matrix in row-major order, columns
// indexed by input u-occupation.
fn bs_matrix(n: usize) -> Arc<Vec<f64>> {
    // building a column is O(n²) exact-integer work; memoize per n so
    // phase scans pay it once
    const CACHE_MAX_N: usize = 512;
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    if n <= CACHE_MAX_N {
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(m) = cache.lock().unwrap().get(&n) {
            return Arc::clone(m);
        }
    }
    let ln_fact = ln_factorial_table(n);
    let dim = n + 1;
    let mut matrix = vec![0.0f64; dim * dim];
    for j in 0..dim {
        for (m, v) in bs_column(n, j, &ln_fact).into_iter().enumerate() {
            matrix[m * dim + j] = v;
        }
    }
    let matrix = Arc::new(matrix);
    if n <= CACHE_MAX_N {
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        cache.lock().unwrap().insert(n, Arc::clone(&matrix));
    }
    matrix
}

/// Applies the 50:50 beam splitter â_u → (â_u + â_d)/√2,
/// â_d → (â_u − â_d)/√2. The map is an involution, so applying it twice
/// restores the input exactly up to roundoff.
pub fn apply_50_50_bs(state: &TwoModeState) -> TwoModeState {
    let n = state.total_photons;
    let dim = n + 1;
    let matrix = bs_matrix(n);
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (m, o) in out.iter_mut().enumerate() {
        let row = &matrix[m * dim..(m + 1) * dim];
        for (j, &a) in state.amplitudes.iter().enumerate() {
            if a != Complex64::new(0.0, 0.0) {
                *o += a * row[j];
            }
        }
    }
    TwoModeState::from_parts(n, out)
}

/// ⟨a|b⟩ = Σ_j conj(a_j) b_j.
pub fn inner_product(a: &TwoModeState, b: &TwoModeState) -> Result<Complex64> {
    if a.total_photons != b.total_photons {
        return Err(Error::PhotonNumberMismatch(a.total_photons, b.total_photons));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Mean, second moment and variance of the photon number in one mode.
pub fn photon_number_moments(state: &TwoModeState, mode: ModeLabel) -> PhotonMoments {
    let n = state.total_photons;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (j, a) in state.amplitudes.iter().enumerate() {
        let occ = match mode {
            ModeLabel::U => j,
            ModeLabel::D => n - j,
        } as f64;
        let p = a.norm_sqr();
        mean += occ * p;
        second += occ * occ * p;
    }
    PhotonMoments {
        mean,
        second_moment: second,
        variance: (second - mean * mean).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn basis(n: usize, j: usize) -> TwoModeState {
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        amps[j] = Complex64::new(1.0, 0.0);
        TwoModeState::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn twin_fock_n1_is_hong_ou_mandel() {
        let s = twin_fock_after_bs(1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitude(0).re, -r, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(2).re, r, epsilon = 1e-15);
    }

    #[test]
    fn twin_fock_n2_matches_exact_expansion() {
        // Exact expansion of (u² − d²)² / 4 on |2,2⟩:
        // amplitudes (√6/4, 0, −1/2, 0, √6/4).
        let s = twin_fock_after_bs(2).unwrap();
        let expected = [6f64.sqrt() / 4.0, 0.0, -0.5, 0.0, 6f64.sqrt() / 4.0];
        for (j, &e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(s.amplitude(j).re, e, epsilon = 1e-14);
            assert_abs_diff_eq!(s.amplitude(j).im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn twin_fock_rejects_bad_n() {
        assert!(twin_fock_after_bs(0).is_err());
        assert!(twin_fock_after_bs(MAX_TWIN_FOCK_N + 1).is_err());
    }

    #[test]
    fn twin_fock_is_normalized_and_even_only() {
        for n in [1u64, 2, 5, 13, 50] {
            let s = twin_fock_after_bs(n).unwrap();
            assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
            for j in (1..s.total_photons()).step_by(2) {
                assert_eq!(s.amplitude(j).norm(), 0.0);
            }
        }
    }

    #[test]
    fn phase_shift_identity_and_periodicity() {
        let s = twin_fock_after_bs(1).unwrap();
        let s0 = apply_phase_shift(&s, 0.0, ModeLabel::U).unwrap();
        let s2pi = apply_phase_shift(&s, std::f64::consts::PI, ModeLabel::U).unwrap();
        for j in 0..=2 {
            assert_abs_diff_eq!((s0.amplitude(j) - s.amplitude(j)).norm(), 0.0, epsilon = 1e-15);
            // even occupations only, so a π shift is the identity here
            assert_abs_diff_eq!((s2pi.amplitude(j) - s.amplitude(j)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn phase_shift_rejects_non_finite() {
        let s = twin_fock_after_bs(1).unwrap();
        assert!(apply_phase_shift(&s, f64::NAN, ModeLabel::U).is_err());
        assert!(apply_phase_shift(&s, f64::INFINITY, ModeLabel::D).is_err());
    }

    #[test]
    fn phase_shift_half_pi_gives_cos_squared_overlap() {
        let s = twin_fock_after_bs(1).unwrap();
        let shifted = apply_phase_shift(&s, std::f64::consts::FRAC_PI_2, ModeLabel::U).unwrap();
        let overlap = inner_product(&s, &shifted).unwrap();
        // ⟨Ψ|Ψ(π/2)⟩: amplitude at |2,0⟩ flips sign, giving |overlap|² = cos²(π/2) = 0
        assert_abs_diff_eq!(overlap.norm_sqr(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bs_on_one_one_gives_hom_dip() {
        let out = apply_50_50_bs(&basis(2, 1));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(out.amplitude(2).re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(1).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.amplitude(0).re, -r, epsilon = 1e-15);
    }

    #[test]
    fn bs_on_single_mode_gives_binomial_amplitudes() {
        let n = 6;
        let out = apply_50_50_bs(&basis(n, n));
        let binom = [1.0f64, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        for (j, &b) in binom.iter().enumerate() {
            let expected = (b / 64.0).sqrt();
            assert_abs_diff_eq!(out.amplitude(j).re, expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn inner_product_rejects_mismatched_totals() {
        let a = twin_fock_after_bs(1).unwrap();
        let b = twin_fock_after_bs(2).unwrap();
        assert!(inner_product(&a, &b).is_err());
    }

    #[test]
    fn inner_product_of_orthogonal_basis_states() {
        let ip = inner_product(&basis(3, 0), &basis(3, 2)).unwrap();
        assert_eq!(ip, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn moments_match_known_variance() {
        let m1 = photon_number_moments(&twin_fock_after_bs(1).unwrap(), ModeLabel::U);
        assert_abs_diff_eq!(m1.mean, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m1.variance, 1.0, epsilon = 1e-12);

        let m2 = photon_number_moments(&twin_fock_after_bs(2).unwrap(), ModeLabel::U);
        assert_abs_diff_eq!(m2.mean, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m2.variance, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn number_eigenstate_has_zero_variance() {
        let m = photon_number_moments(&basis(5, 5), ModeLabel::U);
        assert_abs_diff_eq!(m.mean, 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.variance, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn from_amplitudes_validates() {
        let bad_len = TwoModeState::from_amplitudes(2, vec![Complex64::new(1.0, 0.0); 2]);
        assert!(bad_len.is_err());
        let not_norm = TwoModeState::from_amplitudes(1, vec![Complex64::new(1.0, 0.0); 2]);
        assert!(not_norm.is_err());
    }
}
