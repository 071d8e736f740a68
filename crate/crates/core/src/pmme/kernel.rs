//! Memory kernel functions `k(t)`: normalized weight densities for the
//! probabilistic measurement time, with exact (or quadrature) shifted
//! Laplace transforms `L[k(t) e^{lambda t}](s)`.

use num_complex::Complex64 as C64;

use super::faddeeva::{erf_real, erfcx};
use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_PI_2_SQRT: f64 = 1.253_314_137_315_500_3; // sqrt(pi/2)

/// Normalized memory kernel on `t >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryKernel {
    /// `k(t) = delta(t)`: the memoryless (Markovian) limit. Handled
    /// analytically everywhere; `evaluate` returns 0 for `t > 0` and is not
    /// meaningful at `t = 0`.
    DiracDeltaAtZero,
    /// `k(t) = gamma e^{-gamma t}`.
    Exponential { gamma: f64 },
    /// Gaussian centered at `center` with width `width`, restricted to
    /// `[0, support]` and renormalized there. A continuum stand-in for the
    /// discrete Gaussian weight profile.
    TruncatedGaussian {
        center: f64,
        width: f64,
        support: f64,
    },
    /// Uniformly spaced samples `k(j * spacing)`, `j = 0..n-1`, interpreted
    /// by linear interpolation on `[0, (n-1) spacing]`.
    Tabulated { samples: Vec<f64>, spacing: f64 },
}

impl MemoryKernel {
    pub fn exponential(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(Error::InvalidKernel(format!(
                "exponential kernel rate must be positive, got {gamma}"
            )));
        }
        Ok(Self::Exponential { gamma })
    }

    pub fn truncated_gaussian(center: f64, width: f64, support: f64) -> Result<Self> {
        if width <= 0.0 || support <= 0.0 {
            return Err(Error::InvalidKernel(format!(
                "truncated Gaussian needs positive width and support, got ({width}, {support})"
            )));
        }
        Ok(Self::TruncatedGaussian {
            center,
            width,
            support,
        })
    }

    /// Validates non-negativity and unit trapezoidal mass (within 1e-8).
    pub fn tabulated(samples: Vec<f64>, spacing: f64) -> Result<Self> {
        if samples.len() < 2 || spacing <= 0.0 {
            return Err(Error::InvalidKernel(
                "tabulated kernel needs >= 2 samples and positive spacing".into(),
            ));
        }
        if samples.iter().any(|&k| k < 0.0) {
            return Err(Error::InvalidKernel(
                "tabulated kernel samples must be non-negative".into(),
            ));
        }
        let kernel = Self::Tabulated { samples, spacing };
        let dev = kernel.normalization_deviation();
        if dev > 1e-8 {
            return Err(Error::InvalidKernel(format!(
                "tabulated kernel mass deviates from 1 by {dev:.3e}"
            )));
        }
        Ok(kernel)
    }

    /// Rescales arbitrary non-negative samples to unit mass.
    pub fn tabulated_normalized(samples: Vec<f64>, spacing: f64) -> Result<Self> {
        let mass = trapezoid_mass(&samples, spacing);
        if mass <= 0.0 {
            return Err(Error::InvalidKernel("tabulated kernel has zero mass".into()));
        }
        Self::tabulated(samples.iter().map(|k| k / mass).collect(), spacing)
    }

    /// Pointwise value (zero outside the support; the Dirac variant is not
    /// pointwise representable and returns 0 everywhere).
    pub fn evaluate(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            Self::DiracDeltaAtZero => 0.0,
            Self::Exponential { gamma } => gamma * (-gamma * t).exp(),
            Self::TruncatedGaussian {
                center,
                width,
                support,
            } => {
                if t > *support {
                    0.0
                } else {
                    let z = (t - center) / width;
                    gaussian_norm(*center, *width, *support) * (-0.5 * z * z).exp()
                }
            }
            Self::Tabulated { samples, spacing } => {
                let x = t / spacing;
                let j = x.floor() as usize;
                if j + 1 >= samples.len() {
                    if (t - spacing * (samples.len() - 1) as f64).abs() < 1e-12 {
                        *samples.last().unwrap()
                    } else {
                        0.0
                    }
                } else {
                    let frac = x - j as f64;
                    samples[j] * (1.0 - frac) + samples[j + 1] * frac
                }
            }
        }
    }

    /// `|integral of k - 1|`.
    pub fn normalization_deviation(&self) -> f64 {
        match self {
            Self::DiracDeltaAtZero => 0.0,
            Self::Exponential { .. } => 0.0,
            Self::TruncatedGaussian { .. } => 0.0, // normalized in closed form
            Self::Tabulated { samples, spacing } => {
                (trapezoid_mass(samples, *spacing) - 1.0).abs()
            }
        }
    }

    /// End of the kernel's support (`infinity` for the exponential variant).
    pub fn support_end(&self) -> f64 {
        match self {
            Self::DiracDeltaAtZero => 0.0,
            Self::Exponential { .. } => f64::INFINITY,
            Self::TruncatedGaussian { support, .. } => *support,
            Self::Tabulated { samples, spacing } => spacing * (samples.len() - 1) as f64,
        }
    }

    /// The shifted Laplace transform `L[k(t) e^{lambda t}](s)`, i.e. the
    /// plain transform of `k` evaluated at `s - lambda`. Exact for the
    /// analytic variants; trapezoidal quadrature for the tabulated one.
    /// Arguments outside the region of convergence of the defining integral
    /// are refused; inversion contours that deform into the left half plane
    /// should use [`Self::laplace_shifted_continued`].
    pub fn laplace_shifted(&self, s: C64, lambda: C64) -> Result<C64> {
        if let Self::Exponential { gamma } = self {
            if (s - lambda + *gamma).re <= 0.0 {
                return Err(Error::OutsideConvergenceRegion(s));
            }
        }
        self.laplace_shifted_continued(s, lambda)
    }

    /// The analytic continuation of [`Self::laplace_shifted`] to the whole
    /// plane minus poles. Identical to the plain transform inside the region
    /// of convergence; for the exponential kernel the closed form
    /// `gamma/(s - lambda + gamma)` extends it everywhere except the pole.
    /// The other variants are already entire in `s`.
    pub fn laplace_shifted_continued(&self, s: C64, lambda: C64) -> Result<C64> {
        let a = s - lambda;
        match self {
            Self::DiracDeltaAtZero => Ok(C64::new(1.0, 0.0)),
            Self::Exponential { gamma } => Ok(C64::new(*gamma, 0.0) / (a + gamma)),
            Self::TruncatedGaussian {
                center,
                width,
                support,
            } => Ok(truncated_gaussian_transform(a, *center, *width, *support)),
            Self::Tabulated { samples, spacing } => {
                // trapezoid over the samples; the integrand is entire in a
                let mut acc = C64::new(0.0, 0.0);
                let n = samples.len();
                for (j, &k) in samples.iter().enumerate() {
                    let t = j as f64 * spacing;
                    let weight = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                    acc += weight * k * (-a * t).exp();
                }
                Ok(acc * *spacing)
            }
        }
    }
}

fn trapezoid_mass(samples: &[f64], spacing: f64) -> f64 {
    let n = samples.len();
    let inner: f64 = samples[1..n - 1].iter().sum();
    (0.5 * (samples[0] + samples[n - 1]) + inner) * spacing
}

/// Normalization constant of the truncated Gaussian on `[0, T]`.
fn gaussian_norm(t0: f64, sigma: f64, support: f64) -> f64 {
    let mass = sigma
        * FRAC_PI_2_SQRT
        * (erf_real((support - t0) / (sigma * SQRT_2)) + erf_real(t0 / (sigma * SQRT_2)));
    1.0 / mass
}

/// Closed form of `int_0^T e^{-a t} C exp(-(t - t0)^2 / (2 sigma^2)) dt`.
///
/// Completing the square and expressing both boundary terms through `erfcx`
/// keeps every explicit exponent bounded:
/// with `u1 = (a sigma^2 - t0)/(sigma sqrt2)` and
/// `u2 = ((T - t0) + a sigma^2)/(sigma sqrt2)`,
/// the integral is `C sigma sqrt(pi/2) [e^{-t0^2/(2 sigma^2)} erfcx(u1)
/// - e^{-(T-t0)^2/(2 sigma^2) - aT} erfcx(u2)]`.
fn truncated_gaussian_transform(a: C64, t0: f64, sigma: f64, support: f64) -> C64 {
    let c = gaussian_norm(t0, sigma, support);
    let u1 = (a * sigma * sigma - t0) / (sigma * SQRT_2);
    let u2 = ((support - t0) + a * sigma * sigma) / (sigma * SQRT_2);
    let e1 = C64::new(-t0 * t0 / (2.0 * sigma * sigma), 0.0);
    let e2 = C64::new(-(support - t0) * (support - t0) / (2.0 * sigma * sigma), 0.0) - a * support;
    let term1 = scaled_erfcx_term(e1, u1);
    let term2 = scaled_erfcx_term(e2, u2);
    c * sigma * FRAC_PI_2_SQRT * (term1 - term2)
}

/// `e^{e} erfcx(u)`, combining the exponents analytically when the erfcx
/// reflection (`Re u < 0`) would otherwise introduce an overflowing
/// `e^{u^2}` factor.
fn scaled_erfcx_term(e: C64, u: C64) -> C64 {
    if u.re >= 0.0 {
        e.exp() * erfcx(u)
    } else {
        2.0 * (e + u * u).exp() - e.exp() * erfcx(-u)
    }
}
