//! Count-level models and estimation: the two-photon visibility fringe,
//! the four-photon pair-distinguishability model, deterministic Poisson
//! synthesis of coincidence counts, and weighted least-squares fitting
//! that recovers V or E/A together with the peak rate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrology::DetectionModel;

/// One coincidence-count datum.
#[derive(Clone, Copy, Debug)]
pub struct CountRecord {
    pub phi: f64,
    pub counts: u64,
    pub exposure: f64,
}

/// Which count model to fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitKind {
    TwoPhoton,
    FourPhoton,
}

impl FitKind {
    fn parameter_name(self) -> &'static str {
        match self {
            FitKind::TwoPhoton => "V",
            FitKind::FourPhoton => "E_over_A",
        }
    }

    fn model(self, theta: f64, phi: f64) -> f64 {
        match self {
            // Raw formulas so the profile objective stays evaluable a
            // little outside [0, 1]; range violations are flagged on the
            // estimate, not hidden by clamping.
            FitKind::TwoPhoton => (1.0 + theta * (2.0 * phi).cos()) / (1.0 + theta),
            FitKind::FourPhoton => {
                ((1.0 + 2.0 * theta) * (3.0 * (4.0 * phi).cos() + 4.0 * (2.0 * phi).cos())
                    + 9.0
                    + 2.0 * theta)
                    / (16.0 + 16.0 * theta)
            }
        }
    }
}

/// Estimate of one fit parameter with its diagnostics.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub parameter_name: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub reduced_chi_square: f64,
    pub n_points: usize,
    /// Set when the estimate sits on the physical boundary of [0, 1] with
    /// the objective still decreasing outward.
    pub out_of_range: bool,
}

/// P₂(φ) = (1 + V cos 2φ)/(1 + V).
pub fn p2_model(visibility: f64, phi: f64) -> Result<f64> {
    DetectionModel::two_photon_visibility(visibility).map(|m| m.probability(phi))
}

/// Analytic dP₂/dφ.
pub fn p2_model_derivative(visibility: f64, phi: f64) -> Result<f64> {
    DetectionModel::two_photon_visibility(visibility).map(|m| m.derivative(phi))
}

/// P₄(φ) for pair distinguishability r = E/A; reduces to the ideal
/// four-photon projection curve at r = 1.
pub fn p4_model(r: f64, phi: f64) -> Result<f64> {
    DetectionModel::four_photon_distinguishability(r).map(|m| m.probability(phi))
}

/// Analytic dP₄/dφ.
pub fn p4_model_derivative(r: f64, phi: f64) -> Result<f64> {
    DetectionModel::four_photon_distinguishability(r).map(|m| m.derivative(phi))
}

// Poisson sampling: inversion for small means, chunked so the running
// product never underflows, and a rounded normal approximation above
// mean 1000. Deterministic for a given RNG stream.
fn sample_poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    debug_assert!(mean >= 0.0 && mean.is_finite());
    if mean <= 0.0 {
        return 0;
    }
    if mean > 1000.0 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen::<f64>();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        return (mean + mean.sqrt() * z).round().max(0.0) as u64;
    }
    let mut remaining = mean;
    let mut total = 0u64;
    while remaining > 0.0 {
        let chunk = remaining.min(500.0);
        remaining -= chunk;
        let limit = (-chunk).exp();
        let mut p = 1.0;
        let mut k = 0u64;
        loop {
            p *= rng.gen::<f64>();
            if p <= limit {
                break;
            }
            k += 1;
        }
        total += k;
    }
    total
}

/// Draws one Poisson coincidence count per grid point, with mean
/// `peak_rate * exposure * P(φ)`. Reproducible for a given seed.
pub fn synthesize_counts(
    model: &DetectionModel,
    peak_rate: f64,
    phi_grid: &[f64],
    exposure: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    if phi_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if peak_rate <= 0.0 || !peak_rate.is_finite() {
        return Err(Error::ParameterOutOfRange {
            name: "peak_rate",
            value: peak_rate,
            range: "(0, inf)",
        });
    }
    if exposure <= 0.0 || !exposure.is_finite() {
        return Err(Error::ParameterOutOfRange {
            name: "exposure",
            value: exposure,
            range: "(0, inf)",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    phi_grid
        .iter()
        .map(|&phi| {
            if !phi.is_finite() {
                return Err(Error::NonFinitePhase(phi));
            }
            let mean = peak_rate * exposure * model.probability(phi).clamp(0.0, 1.0);
            Ok(CountRecord {
                phi,
                counts: sample_poisson(&mut rng, mean),
                exposure,
            })
        })
        .collect()
}

// Weighted SSE profiled over the linear rate parameter: for fixed shape
// θ the optimal rate has a closed form.
struct Profile<'a> {
    records: &'a [CountRecord],
    kind: FitKind,
    weights: Vec<f64>,
}

impl Profile<'_> {
    fn rate_for(&self, theta: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (r, &w) in self.records.iter().zip(&self.weights) {
            let m = r.exposure * self.kind.model(theta, r.phi);
            num += w * r.counts as f64 * m;
            den += w * m * m;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    fn objective(&self, rate: f64, theta: f64) -> f64 {
        self.records
            .iter()
            .zip(&self.weights)
            .map(|(r, &w)| {
                let resid = r.counts as f64 - rate * r.exposure * self.kind.model(theta, r.phi);
                w * resid * resid
            })
            .sum()
    }

    fn profiled(&self, theta: f64) -> f64 {
        self.objective(self.rate_for(theta), theta)
    }

    fn minimize(&self) -> (f64, f64, f64) {
        let coarse = 80usize;
        let mut best_i = 0;
        let mut best = f64::INFINITY;
        for i in 0..=coarse {
            let theta = i as f64 / coarse as f64;
            let s = self.profiled(theta);
            if s < best {
                best = s;
                best_i = i;
            }
        }
        let mut lo = (best_i.saturating_sub(1)) as f64 / coarse as f64;
        let mut hi = ((best_i + 1).min(coarse)) as f64 / coarse as f64;
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = self.profiled(x1);
        let mut f2 = self.profiled(x2);
        while hi - lo > 1e-11 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = self.profiled(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = self.profiled(x2);
            }
        }
        let theta_hat = 0.5 * (lo + hi);
        let rate_hat = self.rate_for(theta_hat);
        (theta_hat, rate_hat, self.objective(rate_hat, theta_hat))
    }
}

/// Fits `rate * exposure * P(φ; θ)` to count data by weighted least
/// squares (weights 1/max(counts, 1)), θ being V or E/A. Returns the
/// shape-parameter estimate and the rate estimate, with standard errors
/// from the quadratic expansion of the objective at the optimum.
pub fn fit_model(records: &[CountRecord], kind: FitKind) -> Result<(FitResult, FitResult)> {
    if records.len() < 5 {
        return Err(Error::DegenerateFit("need at least 5 records"));
    }
    let phi_min = records.iter().map(|r| r.phi).fold(f64::INFINITY, f64::min);
    let phi_max = records.iter().map(|r| r.phi).fold(f64::NEG_INFINITY, f64::max);
    if !(phi_max - phi_min).is_finite() || phi_max - phi_min < std::f64::consts::FRAC_PI_2 {
        return Err(Error::DegenerateFit("phase settings must span half a period"));
    }
    if records.iter().all(|r| r.counts == 0) {
        return Err(Error::DegenerateFit("all counts are zero"));
    }
    if records.iter().any(|r| r.exposure <= 0.0 || r.exposure.is_nan()) {
        return Err(Error::DegenerateFit("non-positive exposure"));
    }

    // First pass with empirical Poisson weights 1/max(counts, 1), then a
    // refit weighted by the fitted means. Empirical weights alone bias the
    // fit and understate errors where the fringe minima leave only a few
    // counts per point.
    let empirical: Vec<f64> = records.iter().map(|r| 1.0 / (r.counts.max(1) as f64)).collect();
    let pass1 = Profile {
        records,
        kind,
        weights: empirical,
    };
    let (theta1, rate1, _) = pass1.minimize();
    let refined: Vec<f64> = records
        .iter()
        .map(|r| 1.0 / (rate1 * r.exposure * kind.model(theta1, r.phi)).max(1.0))
        .collect();
    let profile = Profile {
        records,
        kind,
        weights: refined,
    };
    let (theta_hat, rate_hat, s_min) = profile.minimize();

    // boundary check: does the unconstrained objective keep decreasing
    // just outside [0, 1]?
    let eps = 1e-6;
    let out_of_range = (theta_hat < eps && profile.profiled(-eps) < s_min)
        || (theta_hat > 1.0 - eps && profile.profiled(1.0 + eps) < s_min);

    // covariance = 2 H⁻¹ from the finite-difference Hessian of S(rate, θ)
    let h_r = (rate_hat.abs().max(1.0)) * 1e-5;
    let h_t = 1e-5;
    let f = |r: f64, t: f64| profile.objective(r, t);
    let d_rr = (f(rate_hat + h_r, theta_hat) - 2.0 * s_min + f(rate_hat - h_r, theta_hat))
        / (h_r * h_r);
    let d_tt = (f(rate_hat, theta_hat + h_t) - 2.0 * s_min + f(rate_hat, theta_hat - h_t))
        / (h_t * h_t);
    let d_rt = (f(rate_hat + h_r, theta_hat + h_t) - f(rate_hat + h_r, theta_hat - h_t)
        - f(rate_hat - h_r, theta_hat + h_t)
        + f(rate_hat - h_r, theta_hat - h_t))
        / (4.0 * h_r * h_t);
    let det = d_rr * d_tt - d_rt * d_rt;
    let (var_rate, var_theta) = if det > 0.0 {
        (2.0 * d_tt / det, 2.0 * d_rr / det)
    } else {
        (f64::NAN, f64::NAN)
    };

    let n_points = records.len();
    let dof = (n_points.saturating_sub(2)).max(1) as f64;
    let reduced_chi_square = s_min / dof;

    let shape = FitResult {
        parameter_name: kind.parameter_name(),
        estimate: theta_hat,
        std_error: var_theta.max(0.0).sqrt(),
        reduced_chi_square,
        n_points,
        out_of_range,
    };
    let rate = FitResult {
        parameter_name: "rate",
        estimate: rate_hat,
        std_error: var_rate.max(0.0).sqrt(),
        reduced_chi_square,
        n_points,
        out_of_range: false,
    };
    Ok((shape, rate))
}

/// Interference visibility (C_max − C_min)/(C_max + C_min) from
/// exposure-normalized rates.
pub fn visibility(records: &[CountRecord]) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::DegenerateFit("need at least 2 records"));
    }
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for r in records {
        if r.exposure <= 0.0 || r.exposure.is_nan() {
            return Err(Error::DegenerateFit("non-positive exposure"));
        }
        let rate = r.counts as f64 / r.exposure;
        max = max.max(rate);
        min = min.min(rate);
    }
    if max == min {
        return Ok(0.0);
    }
    Ok((max - min) / (max + min))
}
