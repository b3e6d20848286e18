//! Phase-uncertainty analysis by error propagation:
//! Δφ = √(P(1−P)) / |dP/dφ|, with the stationary-point limit handled
//! analytically, SQL/HL reference lines, photon-number scaling scans and
//! SQL-beating region finding.

use crate::error::{Error, Result};
use crate::projection::{closed_form_with_weights, projection_weights};

/// Derivative magnitudes below this are treated as a stationary point of P.
const STATIONARY_DP: f64 = 1e-9;
/// P(1−P) below this counts as P ∈ {0, 1} when the derivative also vanishes.
const STATIONARY_VAR: f64 = 1e-12;

/// A probability-vs-phase detection model with analytic derivatives.
#[derive(Clone, Debug)]
pub enum DetectionModel {
    /// Twin-Fock projection measurement with N photon pairs (2N photons).
    TwinFock { n_pairs: u64, weights: Vec<f64> },
    /// Maximally entangled (NOON) state of N photons: P = (1 + cos Nφ)/2.
    Mes { n_photons: u64 },
    /// Two-photon fringe with visibility V: P = (1 + V cos 2φ)/(1 + V).
    TwoPhotonVisibility { visibility: f64 },
    /// Four-photon model with pair distinguishability r = E/A.
    FourPhotonDistinguishability { r: f64 },
}

impl DetectionModel {
    pub fn twin_fock(n_pairs: u64) -> Result<Self> {
        let weights = projection_weights(n_pairs)?;
        Ok(Self::TwinFock { n_pairs, weights })
    }

    pub fn mes(n_photons: u64) -> Result<Self> {
        if n_photons == 0 {
            return Err(Error::PhotonNumberOutOfRange(n_photons, u64::MAX));
        }
        Ok(Self::Mes { n_photons })
    }

    pub fn two_photon_visibility(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) || !visibility.is_finite() {
            return Err(Error::ParameterOutOfRange {
                name: "V",
                value: visibility,
                range: "[0, 1]",
            });
        }
        Ok(Self::TwoPhotonVisibility { visibility })
    }

    pub fn four_photon_distinguishability(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) || !r.is_finite() {
            return Err(Error::ParameterOutOfRange {
                name: "E/A",
                value: r,
                range: "[0, 1]",
            });
        }
        Ok(Self::FourPhotonDistinguishability { r })
    }

    /// Total photon number the model detects per event; this is what the
    /// SQL/HL reference lines are anchored to.
    pub fn total_photons(&self) -> u64 {
        match self {
            Self::TwinFock { n_pairs, .. } => 2 * n_pairs,
            Self::Mes { n_photons } => *n_photons,
            Self::TwoPhotonVisibility { .. } => 2,
            Self::FourPhotonDistinguishability { .. } => 4,
        }
    }

    pub fn probability(&self, phi: f64) -> f64 {
        match self {
            Self::TwinFock { weights, .. } => closed_form_with_weights(weights, phi),
            Self::Mes { n_photons } => (1.0 + (*n_photons as f64 * phi).cos()) / 2.0,
            Self::TwoPhotonVisibility { visibility } => {
                (1.0 + visibility * (2.0 * phi).cos()) / (1.0 + visibility)
            }
            Self::FourPhotonDistinguishability { r } => {
                ((1.0 + 2.0 * r) * (3.0 * (4.0 * phi).cos() + 4.0 * (2.0 * phi).cos())
                    + 9.0
                    + 2.0 * r)
                    / (16.0 + 16.0 * r)
            }
        }
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        match self {
            Self::TwinFock { weights, .. } => {
                let (a, da, _) = twin_fock_amplitude_derivatives(weights, phi);
                2.0 * a * da
            }
            Self::Mes { n_photons } => {
                let nf = *n_photons as f64;
                -nf * (nf * phi).sin() / 2.0
            }
            Self::TwoPhotonVisibility { visibility } => {
                -2.0 * visibility * (2.0 * phi).sin() / (1.0 + visibility)
            }
            Self::FourPhotonDistinguishability { r } => {
                -(1.0 + 2.0 * r) * (12.0 * (4.0 * phi).sin() + 8.0 * (2.0 * phi).sin())
                    / (16.0 + 16.0 * r)
            }
        }
    }

    pub fn second_derivative(&self, phi: f64) -> f64 {
        match self {
            Self::TwinFock { weights, .. } => {
                let (a, da, dda) = twin_fock_amplitude_derivatives(weights, phi);
                2.0 * (da * da + a * dda)
            }
            Self::Mes { n_photons } => {
                let nf = *n_photons as f64;
                -nf * nf * (nf * phi).cos() / 2.0
            }
            Self::TwoPhotonVisibility { visibility } => {
                -4.0 * visibility * (2.0 * phi).cos() / (1.0 + visibility)
            }
            Self::FourPhotonDistinguishability { r } => {
                -(1.0 + 2.0 * r) * (48.0 * (4.0 * phi).cos() + 16.0 * (2.0 * phi).cos())
                    / (16.0 + 16.0 * r)
            }
        }
    }
}

// A(φ) = Σ w_k cos[(2k−N)φ] and its first two derivatives; P = A².
fn twin_fock_amplitude_derivatives(weights: &[f64], phi: f64) -> (f64, f64, f64) {
    let n = (weights.len() - 1) as f64;
    let mut a = 0.0;
    let mut da = 0.0;
    let mut dda = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        let m = 2.0 * k as f64 - n;
        let (s, c) = (m * phi).sin_cos();
        a += w * c;
        da -= w * m * s;
        dda -= w * m * m * c;
    }
    (a, da, dda)
}

/// One evaluation of the error-propagation formula. `delta_phi` is
/// `f64::INFINITY` where the derivative vanishes at a non-extremal P.
#[derive(Clone, Copy, Debug)]
pub struct MetrologyPoint {
    pub phi: f64,
    pub p: f64,
    pub dp_dphi: f64,
    pub delta_phi: f64,
}

/// SQL and Heisenberg reference uncertainties for a total photon number.
#[derive(Clone, Copy, Debug)]
pub struct LimitPair {
    pub n_total: u64,
    pub sql: f64,
    pub hl: f64,
}

/// sql = 1/√n, hl = 1/n.
pub fn limits(n_total: u64) -> Result<LimitPair> {
    if n_total == 0 {
        return Err(Error::PhotonNumberOutOfRange(n_total, u64::MAX));
    }
    let nf = n_total as f64;
    Ok(LimitPair {
        n_total,
        sql: 1.0 / nf.sqrt(),
        hl: 1.0 / nf,
    })
}

/// Δφ = √(P(1−P)) / |dP/dφ|.
///
/// At a stationary point with P ∈ {0, 1} both numerator and denominator
/// vanish and the value is the series limit 1/(2√c) with c = ½|P″|. At a
/// stationary point with P strictly inside (0, 1) the uncertainty
/// diverges and the infinity marker is returned.
pub fn phase_uncertainty(model: &DetectionModel, phi: f64) -> MetrologyPoint {
    let p = model.probability(phi).clamp(0.0, 1.0);
    let dp = model.derivative(phi);
    let var = (p * (1.0 - p)).max(0.0);
    let delta_phi = if dp.abs() > STATIONARY_DP {
        var.sqrt() / dp.abs()
    } else if var < STATIONARY_VAR {
        let c = 0.5 * model.second_derivative(phi).abs();
        if c > 0.0 {
            1.0 / (2.0 * c.sqrt())
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    MetrologyPoint {
        phi,
        p,
        dp_dphi: dp,
        delta_phi,
    }
}

/// Exact φ→0 uncertainty of the twin-Fock projection scheme:
/// 1/√(2N(N+1)), the limit fixed by the curvature (N²+N)/2.
pub fn twin_fock_uncertainty_at_zero(n_pairs: u64) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::PhotonNumberOutOfRange(n_pairs, u64::MAX));
    }
    let nf = n_pairs as f64;
    Ok(1.0 / (2.0 * nf * (nf + 1.0)).sqrt())
}

/// One row of the photon-number scaling scan.
#[derive(Clone, Copy, Debug)]
pub struct ScanRow {
    pub n_pairs: u64,
    pub n_total: u64,
    pub delta_phi_at_zero: f64,
    pub sql: f64,
    pub hl: f64,
}

/// Δφ(0), SQL and HL for N = 1 ..= n_max, anchored to 2N total photons.
pub fn scan_photon_number(n_max: u64) -> Result<Vec<ScanRow>> {
    if n_max == 0 {
        return Err(Error::PhotonNumberOutOfRange(n_max, u64::MAX));
    }
    (1..=n_max)
        .map(|n| {
            let lim = limits(2 * n)?;
            Ok(ScanRow {
                n_pairs: n,
                n_total: 2 * n,
                delta_phi_at_zero: twin_fock_uncertainty_at_zero(n)?,
                sql: lim.sql,
                hl: lim.hl,
            })
        })
        .collect()
}

/// Outcome of the SQL-beating region search on [0, π/2].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegionOutcome {
    /// Smallest φ > 0 with Δφ(φ) = SQL; by evenness and π-periodicity the
    /// model beats the SQL for |φ mod π| below this value.
    Boundary(f64),
    /// No crossing: Δφ stays below the SQL wherever Eq.-propagation is
    /// defined, and this is the first stationary point of P in (0, π/2],
    /// where the raw 0/0 expression is undefined.
    Stationary(f64),
    /// Δφ(0) does not beat the SQL at all.
    NotBeating,
}

const REGION_SCAN_STEPS: usize = 4000;
const REGION_TOL: f64 = 1e-6;

/// Finds the boundary of the SQL-beating region around φ = 0 by scanning
/// and bisecting Δφ(φ) − SQL on [0, π/2] to 1e-6 rad.
pub fn beating_region(model: &DetectionModel, n_total: u64) -> Result<RegionOutcome> {
    let sql = limits(n_total)?.sql;
    if phase_uncertainty(model, 0.0).delta_phi >= sql {
        return Ok(RegionOutcome::NotBeating);
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let step = half_pi / REGION_SCAN_STEPS as f64;
    let above = |phi: f64| -> bool { phase_uncertainty(model, phi).delta_phi >= sql };
    let mut prev = 0.0f64;
    for i in 1..=REGION_SCAN_STEPS {
        let phi = i as f64 * step;
        if above(phi) {
            // bisect the sign change of Δφ − SQL
            let (mut lo, mut hi) = (prev, phi);
            while hi - lo > REGION_TOL {
                let mid = 0.5 * (lo + hi);
                if above(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(RegionOutcome::Boundary(0.5 * (lo + hi)));
        }
        prev = phi;
    }
    // Δφ stayed below the SQL on the whole half-period; report the first
    // stationary point of P, where the raw quotient is 0/0.
    if let Some(phi) = first_stationary_point(model, half_pi) {
        return Ok(RegionOutcome::Stationary(phi));
    }
    Ok(RegionOutcome::Stationary(half_pi))
}

// First root of dP/dφ in (0, hi], located by sign-change scan + bisection.
fn first_stationary_point(model: &DetectionModel, hi: f64) -> Option<f64> {
    let step = hi / REGION_SCAN_STEPS as f64;
    let mut prev_phi = 0.5 * step;
    let mut prev = model.derivative(prev_phi);
    for i in 1..=REGION_SCAN_STEPS {
        let phi = (0.5 * step + i as f64 * step).min(hi);
        let d = model.derivative(phi);
        if d == 0.0 || d.signum() != prev.signum() {
            let (mut lo, mut hi_b) = (prev_phi, phi);
            while hi_b - lo > REGION_TOL {
                let mid = 0.5 * (lo + hi_b);
                let fm = model.derivative(mid);
                if fm != 0.0 && fm.signum() == prev.signum() {
                    lo = mid;
                } else {
                    hi_b = mid;
                }
            }
            return Some(0.5 * (lo + hi_b));
        }
        prev = d;
        prev_phi = phi;
        if phi >= hi {
            break;
        }
    }
    None
}
