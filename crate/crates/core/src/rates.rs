//! Rates of the scalar model: the classical detector, spontaneous emission
//! of a delocalizing detector (quadrature and series), coherent pairs, and
//! Cherenkov-like excitation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{QuadratureSpec, Transform};
use crate::templates::{critical_kinematics, series_constants, t_excite, t_spont, t_spont_large_mass};
use crate::units::DetectorParams;
use crate::wavepackets::{fraction_above, interference_factor, second_moment, MomentumDensity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Series,
    Quadrature,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Probability mass above the excitation threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_fraction: Option<f64>,
    /// ⟨p²⟩ of the density.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment2: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    pub method: Method,
    /// Relative error reported by the quadrature engine; 0 for closed forms.
    pub estimated_error: f64,
    pub diagnostics: Diagnostics,
}

impl RateResult {
    fn closed(rate: f64) -> Self {
        Self {
            rate,
            method: Method::ClosedForm,
            estimated_error: 0.0,
            diagnostics: Diagnostics::default(),
        }
    }
}

fn moment2(d: &MomentumDensity, spec: &QuadratureSpec) -> Result<f64> {
    match d.analytic_moment2() {
        Some(m) => Ok(m),
        None => Ok(second_moment(d, spec)?.value),
    }
}

/// λ²c²M/2, the prefactor of the spontaneous rate integral.
fn spont_prefactor(params: &DetectorParams) -> f64 {
    let c = params.wave_speed;
    0.5 * params.coupling.powi(2) * c * c * params.mass
}

/// Rate of a detector without center-of-mass dynamics, λ²E.
pub fn classical_rate(params: &DetectorParams) -> RateResult {
    RateResult::closed(params.coupling.powi(2) * params.gap)
}

/// `(λ²c²M/2) ∫d³p |φ₀(p)|² T(p)` by quadrature.
pub fn spont_rate(d: &MomentumDensity, params: &DetectorParams, spec: &QuadratureSpec) -> Result<RateResult> {
    let spec = spec.with_transform(Transform::None);
    let kink = [params.mass_momentum()];
    let est = d.integrate_radial(|p| t_spont(p, params), 0.0, &kink, &spec)?;
    let rate = spont_prefactor(params) * est.value;
    Ok(RateResult {
        rate: rate.max(0.0),
        method: Method::Quadrature,
        estimated_error: est.relative_error(),
        diagnostics: Diagnostics {
            threshold_fraction: None,
            moment2: Some(moment2(d, &spec)?),
        },
    })
}

/// `λ²c²MA (1 + ⟨p²⟩/p₀²)`. Densities without a closed-form moment use the
/// quadrature ⟨p²⟩.
pub fn spont_rate_series(d: &MomentumDensity, params: &DetectorParams, spec: &QuadratureSpec) -> Result<RateResult> {
    let sc = series_constants(params)?;
    let m2 = moment2(d, &spec.with_transform(Transform::None))?;
    Ok(RateResult {
        rate: 2.0 * spont_prefactor(params) * sc.a * (1.0 + m2 / (sc.p0 * sc.p0)),
        method: Method::Series,
        estimated_error: 0.0,
        diagnostics: Diagnostics {
            threshold_fraction: None,
            moment2: Some(m2),
        },
    })
}

/// Large-mass limit `(λ²c²M/2) T₀ = λ²E`, the same for every density.
pub fn large_mass_rate(params: &DetectorParams) -> RateResult {
    RateResult::closed(spont_prefactor(params) * t_spont_large_mass(params))
}

/// Series rate of the coherent pair `|ξ⟩ + α|χ⟩`:
/// `λ²c²MA (1 + 3(1 − f)(L₀/L)²)`.
pub fn coherent_pair_rate(width: f64, x0: f64, alpha: Complex64, params: &DetectorParams) -> Result<RateResult> {
    let f = interference_factor(width, x0, alpha)?;
    let sc = series_constants(params)?;
    let m2 = 3.0 * (1.0 - f) / (width * width);
    Ok(RateResult {
        rate: 2.0 * spont_prefactor(params) * sc.a * (1.0 + 3.0 * (1.0 - f) * (sc.l0 / width).powi(2)),
        method: Method::Series,
        estimated_error: 0.0,
        diagnostics: Diagnostics {
            threshold_fraction: None,
            moment2: Some(m2),
        },
    })
}

/// `(λ²c²/2) ∫_{|p| ≥ p_th} d³p |φ₀(p)|² T_excite(p)`.
///
/// Exactly zero when the density's support cap does not exceed the
/// threshold.
pub fn excite_rate(d: &MomentumDensity, params: &DetectorParams, spec: &QuadratureSpec) -> Result<RateResult> {
    let p_th = critical_kinematics(params).p_threshold;
    let plain = spec.with_transform(Transform::None);
    let fraction = fraction_above(d, p_th, &plain)?;
    let est = d.integrate_radial(
        |p| t_excite(p, params),
        p_th,
        &[],
        &spec.with_transform(Transform::SqrtEdge),
    )?;
    let c = params.wave_speed;
    let rate = 0.5 * params.coupling.powi(2) * c * c * est.value;
    Ok(RateResult {
        rate: rate.max(0.0),
        method: Method::Quadrature,
        estimated_error: est.relative_error(),
        diagnostics: Diagnostics {
            threshold_fraction: Some(fraction),
            moment2: Some(moment2(d, &plain)?),
        },
    })
}

/// Rejects a rate result whose quadrature error exceeds `rel_tol`.
pub fn require_accuracy(result: RateResult, rel_tol: f64) -> Result<RateResult> {
    if result.estimated_error > rel_tol {
        return Err(Error::Quadrature {
            estimate: result.rate,
            error: result.estimated_error * result.rate,
            subdivisions: 0,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepackets::{
        coherent_pair_density, gaussian_density, hermite_first_excited_density, mixed_pair_density,
    };
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn params() -> DetectorParams {
        DetectorParams::new(1.0, 1e3, 1.0, 0.01).unwrap()
    }

    #[test]
    fn classical_values() {
        let p = DetectorParams::new(2.0, 5.0, 1.0, 1.0).unwrap();
        assert_eq!(classical_rate(&p).rate, 2.0);
        let p = DetectorParams::new(2.0, 5.0, 1.0, 0.0).unwrap();
        assert_eq!(classical_rate(&p).rate, 0.0);
        assert_eq!(large_mass_rate(&p).rate, 0.0);
    }

    #[test]
    fn large_mass_equals_classical() {
        let p = DetectorParams::new(1.0, 1e6, 1.0, 0.01).unwrap();
        assert!(rel(large_mass_rate(&p).rate, classical_rate(&p).rate) < 1e-15);
    }

    #[test]
    fn gaussian_correction_coefficient() {
        let p = params();
        let sc = series_constants(&p).unwrap();
        let lead = 2.0 * spont_prefactor(&p) * sc.a;
        let l = 300.0 * sc.l0;
        let r = spont_rate(&gaussian_density(l).unwrap(), &p, &spec()).unwrap();
        let coeff = (r.rate / lead - 1.0) / (sc.l0 / l).powi(2);
        assert!((coeff - 3.0).abs() < 1e-3, "{coeff}");
        assert!(rel(r.diagnostics.moment2.unwrap(), 3.0 / (l * l)) < 1e-14);
    }

    #[test]
    fn series_agrees_with_quadrature_in_domain() {
        let p = params();
        let sc = series_constants(&p).unwrap();
        for l in [3f64.sqrt() / 0.02, 100.0, 1e3].map(|x| x * sc.l0) {
            let d = gaussian_density(l).unwrap();
            let q = spont_rate(&d, &p, &spec()).unwrap().rate;
            let s = spont_rate_series(&d, &p, &spec()).unwrap().rate;
            assert!(rel(q, s) < 1e-4, "L = {l}");
        }
    }

    #[test]
    fn mixed_pair_matches_gaussian() {
        let p = params();
        let l = 50.0 * series_constants(&p).unwrap().l0;
        let g = spont_rate(&gaussian_density(l).unwrap(), &p, &spec()).unwrap().rate;
        for x0 in [0.0, 1.0, 1e4] {
            let m = spont_rate(&mixed_pair_density(l, x0).unwrap(), &p, &spec())
                .unwrap()
                .rate;
            assert_eq!(m, g);
        }
    }

    #[test]
    fn coherent_pair_closed_form_limits() {
        let p = params();
        let l = 50.0 * series_constants(&p).unwrap().l0;
        let mixed = spont_rate_series(&mixed_pair_density(l, l).unwrap(), &p, &spec())
            .unwrap()
            .rate;
        let imag = coherent_pair_rate(l, l, Complex64::i(), &p).unwrap().rate;
        let far = coherent_pair_rate(l, 12.0 * l, Complex64::new(1.0, 0.0), &p)
            .unwrap()
            .rate;
        assert!(rel(imag, mixed) < 1e-12);
        assert!(rel(far, mixed) < 1e-12);
    }

    #[test]
    fn coherent_pair_closed_form_matches_quadrature_moment() {
        let p = params();
        let l = 50.0 * series_constants(&p).unwrap().l0;
        let one = Complex64::new(1.0, 0.0);
        let closed = coherent_pair_rate(l, l, one, &p).unwrap().rate;
        let d = coherent_pair_density(l, l, one).unwrap();
        let series = spont_rate_series(&d, &p, &spec()).unwrap().rate;
        assert!(rel(closed, series) < 1e-6);
    }

    #[test]
    fn coherent_quadrature_rate_close_to_series() {
        let p = params();
        let l = 50.0 * series_constants(&p).unwrap().l0;
        let d = coherent_pair_density(l, 0.8 * l, Complex64::new(0.6, 0.2)).unwrap();
        let q = spont_rate(&d, &p, &spec()).unwrap().rate;
        let s = spont_rate_series(&d, &p, &spec()).unwrap().rate;
        assert!(rel(q, s) < 1e-4);
    }

    #[test]
    fn rate_decreases_with_width() {
        let p = params();
        let l0 = series_constants(&p).unwrap().l0;
        let rates: Vec<f64> = (0..12)
            .map(|i| 10f64.powf(1.0 + 3.0 * i as f64 / 11.0) * l0)
            .map(|l| spont_rate(&gaussian_density(l).unwrap(), &p, &spec()).unwrap().rate)
            .collect();
        assert!(rates.windows(2).all(|w| w[0] > w[1]), "{rates:?}");
    }

    #[test]
    fn hermite_rate_coefficient_nine() {
        let p = params();
        let sc = series_constants(&p).unwrap();
        let lead = 2.0 * spont_prefactor(&p) * sc.a;
        let l = 1e3 * sc.l0;
        let r = spont_rate(&hermite_first_excited_density(l).unwrap(), &p, &spec()).unwrap();
        let coeff = (r.rate / lead - 1.0) / (sc.l0 / l).powi(2);
        assert!((coeff - 9.0).abs() < 1e-3, "{coeff}");
    }

    #[test]
    fn series_needs_gap() {
        let p = DetectorParams::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let d = gaussian_density(1.0).unwrap();
        assert!(matches!(spont_rate_series(&d, &p, &spec()), Err(Error::Domain { .. })));
        assert!(coherent_pair_rate(1.0, 1.0, Complex64::i(), &p).is_err());
    }

    #[test]
    fn excitation_zero_beyond_support() {
        let p = params();
        let d = gaussian_density(1.0).unwrap();
        let r = excite_rate(&d, &p, &spec()).unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.diagnostics.threshold_fraction, Some(0.0));
    }

    #[test]
    fn excitation_at_zero_gap_is_positive() {
        let p = DetectorParams::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let d = gaussian_density(0.2).unwrap();
        let r = excite_rate(&d, &p, &spec()).unwrap();
        assert!(r.rate > 0.0);
        assert!(r.diagnostics.threshold_fraction.unwrap() > 0.5);
    }

    /// Fixed-grid midpoint rule in u = √(p − p_th), where the integrand is
    /// smooth.
    fn excite_brute_force(l: f64, params: &DetectorParams, n: usize) -> f64 {
        let p_th = critical_kinematics(params).p_threshold;
        let u_max = (37.2 / l - p_th).sqrt();
        let h = u_max / n as f64;
        let norm = (l * l / (2.0 * PI)).powf(1.5);
        let mut sum = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * h;
            let p = p_th + u * u;
            let rho = norm * (-0.5 * l * l * p * p).exp();
            sum += 2.0 * u * 4.0 * PI * p * p * rho * t_excite(p, params);
        }
        let c = params.wave_speed;
        0.5 * params.coupling.powi(2) * c * c * sum * h
    }

    #[test]
    fn excitation_matches_brute_force() {
        let p = DetectorParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
        for l in [0.2, 0.5] {
            let d = gaussian_density(l).unwrap();
            let q = excite_rate(&d, &p, &spec()).unwrap().rate;
            let b = excite_brute_force(l, &p, 400_000);
            assert!(rel(q, b) < 1e-6, "L = {l}: {q} vs {b}");
        }
    }

    #[test]
    fn excitation_mixed_pair_independent_of_separation() {
        let p = DetectorParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
        let g = excite_rate(&gaussian_density(0.4).unwrap(), &p, &spec()).unwrap().rate;
        let m = excite_rate(&mixed_pair_density(0.4, 7.0).unwrap(), &p, &spec())
            .unwrap()
            .rate;
        assert_eq!(g, m);
    }

    #[test]
    fn require_accuracy_rejects() {
        let r = RateResult {
            rate: 1.0,
            method: Method::Quadrature,
            estimated_error: 1e-3,
            diagnostics: Diagnostics::default(),
        };
        assert!(require_accuracy(r, 1e-6).unwrap_err().is_numeric());
        assert!(require_accuracy(r, 1e-2).is_ok());
    }
}
