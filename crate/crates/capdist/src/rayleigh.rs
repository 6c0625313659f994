//! Analytic capacity-distortion bounds for the non-coherent memoryless
//! Rayleigh fading channel `Y = S X + Z` with `S, Z ~ CN(0, 1)`, average
//! power `rho`, and squared-error state distortion.
//!
//! The channel maps to an additive-noise model `T = U + W` with
//! `U = (1/2) ln(|X|^2 + 1)`, `T = ln |Y|`, and noise density
//! `f_W(w) = 2 exp(2w - exp(2w))` of differential entropy `1 - ln 2 + γ`.
//! A uniform input layer on the induced channel yields the lower bound; a
//! maximum-entropy argument on the output yields the upper bound. Both reduce
//! to scalar root-finding problems solved by plain bisection on wide brackets.

use crate::special::{digamma, log_gamma, EULER_GAMMA};
use num_complex::Complex64;
use thiserror::Error;

/// Differential entropy of the induced additive noise, `1 - ln 2 + γ` nats.
pub const NOISE_ENTROPY: f64 = 1.0 - std::f64::consts::LN_2 + EULER_GAMMA;
/// Nominal mean of the induced additive noise.
pub const NOISE_MEAN: f64 = 0.0;
/// High-SNR fading number of the scalar memoryless Rayleigh channel,
/// `-1 - γ` nats.
pub const FADING_NUMBER: f64 = -1.0 - EULER_GAMMA;

#[derive(Debug, Error, PartialEq)]
pub enum RayleighError {
    #[error("snr must be positive, got {0}")]
    InvalidSnr(f64),
    #[error("distortion must lie in (0, 1], got {0}")]
    InvalidDistortion(f64),
    #[error("uniform-layer construction degenerates: (rho + 1) D = {0} <= 1")]
    DegenerateConstruction(f64),
    #[error("root outside the bisection bracket")]
    BracketExceeded,
    #[error("asymptotic window undefined: alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("asymptotic window needs rho > e, got {0}")]
    SnrTooSmall(f64),
}

/// One evaluation point: linear SNR and distortion target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighQuery {
    pub rho: f64,
    pub d: f64,
}

impl RayleighQuery {
    pub fn new(rho: f64, d: f64) -> Result<Self, RayleighError> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(RayleighError::InvalidSnr(rho));
        }
        if !(d > 0.0 && d <= 1.0) {
            return Err(RayleighError::InvalidDistortion(d));
        }
        Ok(Self { rho, d })
    }

    /// Point on the scaling family `D = kappa * rho^(-alpha)`.
    pub fn from_scaling(rho: f64, alpha: f64, kappa: f64) -> Result<Self, RayleighError> {
        Self::new(rho, kappa * rho.powf(-alpha))
    }
}

/// Density of the induced additive noise, `2 exp(2w - exp(2w))`.
pub fn noise_pdf(w: f64) -> f64 {
    2.0 * (2.0 * w - (2.0 * w).exp()).exp()
}

/// One-shot minimum-mean-squared-error estimate of the fading coefficient
/// from a single (input, output) pair: `conj(x) y / (|x|^2 + 1)`.
pub fn mmse_estimate(x: Complex64, y: Complex64) -> Complex64 {
    x.conj() / (x.norm_sqr() + 1.0) * y
}

/// Estimation cost of input `x`: the per-symbol MMSE `1 / (|x|^2 + 1)`.
pub fn per_symbol_cost(x: Complex64) -> f64 {
    1.0 / (x.norm_sqr() + 1.0)
}

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f(lo)` and `f(hi)`
/// have opposite signs. Stops at the requested absolute interval width (or
/// f64 exhaustion).
fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if (f_mid <= 0.0) == (f_lo <= 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

/// Layer width of the uniform input construction: the root `delta > 0` of
/// `e^{2 delta} = 2 delta^2 A [1 + sqrt(1 + 1/(delta^2 A))] + 1`
/// with `A = (rho + 1) D`. Exists exactly when `A > 1`.
pub fn uniform_layer_width(q: &RayleighQuery) -> Result<f64, RayleighError> {
    let a = (q.rho + 1.0) * q.d;
    if a <= 1.0 {
        return Err(RayleighError::DegenerateConstruction(a));
    }
    let f = |delta: f64| {
        let da = delta * delta * a;
        (2.0 * delta).exp() - 2.0 * da * (1.0 + (1.0 + 1.0 / da).sqrt()) - 1.0
    };
    let (lo, hi) = (1e-9, 50.0);
    if f(hi) < 0.0 {
        return Err(RayleighError::BracketExceeded);
    }
    Ok(bisect(f, lo, hi, 1e-12))
}

/// Achievability side: rate of the uniform layer through the induced
/// additive channel, valid for `(rho + 1) D > 1`.
pub fn lower_bound(q: &RayleighQuery) -> Result<f64, RayleighError> {
    let delta = uniform_layer_width(q)?;
    let h_u = delta.ln();
    let gap = h_u - NOISE_ENTROPY;
    Ok(h_u + (1.0 + (-2.0 * gap).exp()).sqrt().ln() - NOISE_ENTROPY)
}

/// Max-entropy exponent: the root `mu > 0` of
/// `ln mu - psi(mu) = ln((rho + 1) D)`. The left side decreases from
/// infinity to zero, so for `(rho + 1) D <= 1` there is no finite root and
/// the bracket top is returned (the bound formula stays defined).
pub fn max_entropy_exponent(q: &RayleighQuery) -> f64 {
    let target = ((q.rho + 1.0) * q.d).ln();
    let f = |mu: f64| digamma(mu).expect("mu > 0") - mu.ln() + target;
    let (lo, hi) = (1e-18, 1e12);
    if f(hi) < 0.0 {
        return hi;
    }
    bisect(f, lo, hi, 1e-12)
}

/// Converse side: output max-entropy bound
/// `ln Γ(mu) - mu psi(mu) + mu - γ - 1`.
pub fn upper_bound(q: &RayleighQuery) -> f64 {
    let mu = max_entropy_exponent(q);
    let lg = log_gamma(mu).expect("mu > 0");
    let dg = digamma(mu).expect("mu > 0");
    lg - mu * dg + mu - EULER_GAMMA - 1.0
}

/// High-SNR window for the scaling `D = kappa * rho^(-alpha)`, `alpha < 1`:
/// `lo = ln ln rho + ln(1 - alpha) - 1 - γ`, `hi = lo + 1`. The window is one
/// nat wide. At `alpha = 1` capacity stays bounded and no window exists.
pub fn asymptotic_window(rho: f64, alpha: f64) -> Result<(f64, f64), RayleighError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(RayleighError::InvalidAlpha(alpha));
    }
    if rho <= std::f64::consts::E {
        return Err(RayleighError::SnrTooSmall(rho));
    }
    let lo = rho.ln().ln() + (1.0 - alpha).ln() - 1.0 - EULER_GAMMA;
    Ok((lo, lo + 1.0))
}
