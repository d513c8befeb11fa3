//! Center-of-mass momentum densities |φ₀(p)|² for the initial states used in
//! the rate calculations.
//!
//! Densities are stored as momentum-space moduli: packet centers and global
//! phases drop out at construction. Internally everything is evaluated in
//! wavenumber κ = p/ħ; `hbar` converts to momentum (1 in natural units).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_product, integrate_with_breaks, Estimate, QuadratureSpec};

/// κL at which the Gaussian factor exp(−L²κ²/2) reaches 1e-300 of its peak.
/// Radial integrals stop there; polynomial prefactors up to κ⁶ leave the
/// neglected tail below 1e-290 of the total.
pub const GAUSSIAN_CAP_KL: f64 = 37.169_214_670_932_86;

/// Coherent pairs whose normalization falls below this fraction of
/// `1 + |α|²` are rejected as degenerate.
const MIN_COHERENT_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Packet {
    /// Position-space Gaussian `(2/πL²)^(3/4) exp(−|x − x₀|²/L²)`.
    Gaussian { width: f64 },
    /// `(8/L³) x₁x₂x₃` times the Gaussian: one oscillator quantum per axis.
    #[serde(rename = "hermite111")]
    Hermite111 { width: f64 },
    /// `|ξ⟩ + α|χ⟩`, Gaussians centered at ±x₀ ẑ, normalized.
    CoherentPair {
        width: f64,
        x0: f64,
        alpha_re: f64,
        alpha_im: f64,
    },
    /// `½(|ξ⟩⟨ξ| + |χ⟩⟨χ|)`.
    MixedPair { width: f64, x0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumDensity {
    packet: Packet,
    hbar: f64,
}

fn check_width(width: f64) -> Result<()> {
    if width.is_finite() && width > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("L", format!("packet width must be > 0, got {width}")))
    }
}

fn check_separation(x0: f64) -> Result<()> {
    if x0.is_finite() && x0 >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain("x0", format!("must be >= 0, got {x0}")))
    }
}

/// `1 + |α|² + 2 Re(α) exp(−2x₀²/L²)`, validated.
fn coherent_norm(width: f64, x0: f64, alpha: Complex64) -> Result<f64> {
    check_width(width)?;
    check_separation(x0)?;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::domain("alpha", "must be finite"));
    }
    let overlap = (-2.0 * x0 * x0 / (width * width)).exp();
    let base = 1.0 + alpha.norm_sqr();
    let norm = base + 2.0 * alpha.re * overlap;
    if norm <= MIN_COHERENT_NORM * base {
        return Err(Error::domain(
            "alpha",
            format!("coherent pair normalization {norm:e} vanishes (destructive overlap)"),
        ));
    }
    Ok(norm)
}

pub fn gaussian_density(width: f64) -> Result<MomentumDensity> {
    check_width(width)?;
    Ok(MomentumDensity::natural(Packet::Gaussian { width }))
}

pub fn hermite_first_excited_density(width: f64) -> Result<MomentumDensity> {
    check_width(width)?;
    Ok(MomentumDensity::natural(Packet::Hermite111 { width }))
}

pub fn coherent_pair_density(width: f64, x0: f64, alpha: Complex64) -> Result<MomentumDensity> {
    coherent_norm(width, x0, alpha)?;
    Ok(MomentumDensity::natural(Packet::CoherentPair {
        width,
        x0,
        alpha_re: alpha.re,
        alpha_im: alpha.im,
    }))
}

pub fn mixed_pair_density(width: f64, x0: f64) -> Result<MomentumDensity> {
    check_width(width)?;
    check_separation(x0)?;
    Ok(MomentumDensity::natural(Packet::MixedPair { width, x0 }))
}

/// Correction to the second moment from the interference of a coherent pair:
/// `⟨p²⟩ = (3/L²)(1 − f)`.
pub fn interference_factor(width: f64, x0: f64, alpha: Complex64) -> Result<f64> {
    let norm = coherent_norm(width, x0, alpha)?;
    let ratio = x0 * x0 / (width * width);
    let overlap = (-2.0 * ratio).exp();
    Ok(4.0 * ratio / 3.0 * 2.0 * alpha.re * overlap / norm)
}

impl MomentumDensity {
    fn natural(packet: Packet) -> Self {
        Self { packet, hbar: 1.0 }
    }

    /// Rebuilds from a packet description, validating it.
    pub fn from_packet(packet: Packet) -> Result<Self> {
        match packet {
            Packet::Gaussian { width } => gaussian_density(width),
            Packet::Hermite111 { width } => hermite_first_excited_density(width),
            Packet::CoherentPair {
                width,
                x0,
                alpha_re,
                alpha_im,
            } => coherent_pair_density(width, x0, Complex64::new(alpha_re, alpha_im)),
            Packet::MixedPair { width, x0 } => mixed_pair_density(width, x0),
        }
    }

    /// Same state with momenta measured in units where ħ = `hbar`
    /// (e.g. SI momentum for lengths in metres).
    pub fn with_hbar(self, hbar: f64) -> Self {
        Self { hbar, ..self }
    }

    pub fn packet(&self) -> Packet {
        self.packet
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn width(&self) -> f64 {
        match self.packet {
            Packet::Gaussian { width }
            | Packet::Hermite111 { width }
            | Packet::CoherentPair { width, .. }
            | Packet::MixedPair { width, .. } => width,
        }
    }

    /// Whether the density depends on |p| only.
    pub fn is_isotropic(&self) -> bool {
        matches!(self.packet, Packet::Gaussian { .. } | Packet::MixedPair { .. })
    }

    /// Closed-form ⟨p²⟩ where one is available.
    pub fn analytic_moment2(&self) -> Option<f64> {
        let k2 = (self.hbar / self.width()).powi(2);
        match self.packet {
            Packet::Gaussian { .. } | Packet::MixedPair { .. } => Some(3.0 * k2),
            Packet::Hermite111 { .. } => Some(9.0 * k2),
            Packet::CoherentPair { .. } => None,
        }
    }

    /// Momentum above which the density is treated as zero.
    pub fn support_cap(&self) -> f64 {
        GAUSSIAN_CAP_KL * self.hbar / self.width()
    }

    fn gaussian_factor(&self, kappa2: f64) -> f64 {
        let l2 = self.width().powi(2);
        (l2 / (2.0 * PI)).powf(1.5) * (-0.5 * l2 * kappa2).exp()
    }

    /// |φ₀(p)|² at the momentum 3-vector `p`; the pair axis is ẑ.
    pub fn density(&self, p: [f64; 3]) -> f64 {
        let k = p.map(|c| c / self.hbar);
        let kappa2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let g = self.gaussian_factor(kappa2);
        let value = match self.packet {
            Packet::Gaussian { .. } | Packet::MixedPair { .. } => g,
            Packet::Hermite111 { width } => width.powi(6) * (k[0] * k[1] * k[2]).powi(2) * g,
            Packet::CoherentPair {
                width,
                x0,
                alpha_re,
                alpha_im,
            } => {
                let alpha = Complex64::new(alpha_re, alpha_im);
                let norm = coherent_norm(width, x0, alpha).expect("validated at construction");
                let phase = Complex64::from_polar(1.0, 2.0 * k[2] * x0);
                g * (1.0 + alpha * phase).norm_sqr() / norm
            }
        };
        value / self.hbar.powi(3)
    }

    /// Density at |p| = `p` and cos θ = `u` relative to the pair axis.
    fn density_polar(&self, p: f64, u: f64) -> f64 {
        let sin = (1.0 - u * u).max(0.0).sqrt();
        match self.packet {
            Packet::Hermite111 { .. } => {
                // Not axially symmetric; only the closed-form average is used.
                self.angular_average(p).unwrap_or(0.0)
            }
            _ => self.density([p * sin, 0.0, p * u]),
        }
    }

    /// Average of the density over directions at fixed |p|, when it has a
    /// closed form. `None` for the coherent pair, whose interference term is
    /// integrated over the polar angle explicitly.
    pub fn angular_average(&self, p: f64) -> Option<f64> {
        let kappa = p / self.hbar;
        let g = self.gaussian_factor(kappa * kappa) / self.hbar.powi(3);
        match self.packet {
            Packet::Gaussian { .. } | Packet::MixedPair { .. } => Some(g),
            // ⟨n_x² n_y² n_z²⟩ over the sphere is 1/105.
            Packet::Hermite111 { width } => Some((width * kappa).powi(6) / 105.0 * g),
            Packet::CoherentPair { .. } => None,
        }
    }

    /// ∫_{|p| ≥ lo} d³p |φ₀(p)|² f(|p|).
    ///
    /// `extra_breaks` are momenta where `f` is not smooth; `spec.transform`
    /// acts on the radial variable (use `SqrtEdge` for a square-root onset
    /// at `lo`). Returns an exact zero when `lo` lies beyond the support cap.
    pub fn integrate_radial<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        extra_breaks: &[f64],
        spec: &QuadratureSpec,
    ) -> Result<Estimate> {
        let cap = self.support_cap();
        if !(lo < cap) {
            return Ok(Estimate { value: 0.0, error: 0.0 });
        }
        let scale = self.hbar / self.width();
        let mut breaks = vec![lo];
        breaks.extend([0.5, 1.0, 2.0, 4.0, 8.0, 16.0].map(|x| x * scale));
        breaks.extend_from_slice(extra_breaks);
        breaks.push(cap);
        breaks.retain(|&b| b >= lo && b <= cap);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        if breaks.len() < 2 {
            return Ok(Estimate { value: 0.0, error: 0.0 });
        }
        if self.angular_average(0.0).is_some() {
            let radial = |p: f64| 4.0 * PI * p * p * self.angular_average(p).unwrap() * f(p);
            integrate_with_breaks(radial, &breaks, spec)
        } else {
            let polar = |p: f64, u: f64| 2.0 * PI * p * p * self.density_polar(p, u) * f(p);
            if spec.transform == crate::quad::Transform::None {
                integrate_product(polar, &breaks, (-1.0, 1.0), spec)
            } else {
                // The transform is applied to the outer variable by hand.
                let shift = lo;
                let mapped: Vec<f64> = breaks.iter().map(|b| (b - shift).sqrt()).collect();
                let plain = QuadratureSpec {
                    transform: crate::quad::Transform::None,
                    ..*spec
                };
                integrate_product(|v, u| 2.0 * v * polar(shift + v * v, u), &mapped, (-1.0, 1.0), &plain)
            }
        }
    }
}

/// ∫d³p |φ₀(p)|².
pub fn normalization(d: &MomentumDensity, spec: &QuadratureSpec) -> Result<Estimate> {
    d.integrate_radial(|_| 1.0, 0.0, &[], spec)
}

/// ⟨p²⟩ by quadrature.
pub fn second_moment(d: &MomentumDensity, spec: &QuadratureSpec) -> Result<Estimate> {
    d.integrate_radial(|p| p * p, 0.0, &[], spec)
}

/// Probability mass at |p| ≥ `p_threshold`.
pub fn fraction_above(d: &MomentumDensity, p_threshold: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(p_threshold >= 0.0) {
        return Err(Error::domain("p_threshold", format!("must be >= 0, got {p_threshold}")));
    }
    let est = d.integrate_radial(|_| 1.0, p_threshold, &[], spec)?;
    Ok(est.value.clamp(0.0, 1.0))
}
