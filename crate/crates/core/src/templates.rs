//! Template functions of the scalar detector model.
//!
//! A template multiplies the momentum density inside the rate integral and
//! does not depend on the initial wavefunction. Spontaneous emission is
//! allowed at every momentum; Cherenkov-like excitation only above
//! `p_threshold = M c + √(2 E M)`.
//!
//! The spontaneous template `2 − (1/p)√((p+Mc)²+2EM) + (1/p)√((p−Mc)²+2EM)`
//! is evaluated in the algebraically equivalent form `2 (S − 2Mc) / S` with
//! `S` the sum of the two roots, where `S − 2Mc` is built from positive terms
//! only. This avoids both the (1/p)(√ − √) cancellation and the `2 − x`
//! cancellation that ruins the direct form when `E ≪ Mc²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::find_root;
use crate::units::DetectorParams;

/// Below `SMALL_P_SWITCH · M c` the spontaneous template uses its series.
pub const SMALL_P_SWITCH: f64 = 1e-4;

/// Relative tolerance handed to the root finder by the oracles.
const ORACLE_ROOT_TOL: f64 = 1e-15;

/// The pair of energy-conservation roots `k(±p) = ∓p − a + √((±p − a)² + s)`
/// shared by the scalar and hydrogen templates. `a` is the momentum scale
/// `M c` and `s` is `2 E M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct RootPair {
    pub a: f64,
    pub s: f64,
}

impl RootPair {
    /// `S − 2a` where `S = √((p+a)²+s) + √((p−a)²+s)`, for p ≥ 0.
    pub fn sum_excess(&self, p: f64) -> f64 {
        let Self { a, s } = *self;
        let g_plus = ((p + a) * (p + a) + s).sqrt();
        let g_minus = ((p - a) * (p - a) + s).sqrt();
        let gap = |g: f64, base: f64| if s == 0.0 { 0.0 } else { s / (g + base) };
        gap(g_plus, a + p) + gap(g_minus, (p - a).abs()) + 2.0 * (p - a).max(0.0)
    }

    /// `(k₊ − k₋) / p`, finite down to p = 0.
    pub fn width_over_p(&self, p: f64) -> f64 {
        let excess = self.sum_excess(p);
        if excess == 0.0 {
            0.0
        } else {
            2.0 * excess / (excess + 2.0 * self.a)
        }
    }

    /// `(k₊ + k₋) / 2`.
    pub fn midpoint(&self, p: f64) -> f64 {
        0.5 * self.sum_excess(p)
    }

    /// The positive root `−b + √(b² + s)` without cancellation.
    pub fn positive_root(b: f64, s: f64) -> f64 {
        let r = (b * b + s).sqrt();
        if b > 0.0 {
            if s == 0.0 {
                0.0
            } else {
                s / (b + r)
            }
        } else {
            r - b
        }
    }

    /// Taylor coefficients (t₀, t₂, t₄) of `width_over_p` about p = 0.
    pub fn series(&self) -> (f64, f64, f64) {
        let Self { a, s } = *self;
        let r = (a * a + s).sqrt();
        let ar = a / r;
        let sr = s / (r * r);
        let t0 = 2.0 * s / ((r + a) * r);
        let t2 = ar * sr / (r * r);
        let t4 = ar * sr * (4.0 * ar * ar - 3.0 * sr) / (4.0 * r.powi(4));
        (t0, t2, t4)
    }
}

fn spont_pair(params: &DetectorParams) -> RootPair {
    RootPair {
        a: params.mass_momentum(),
        s: 2.0 * params.gap * params.mass,
    }
}

/// Small-momentum constants of the spontaneous template.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConstants {
    /// `1 − (1 + 2E/Mc²)^(−1/2)`
    pub a: f64,
    /// `E/(c⁴M³) (1 + 2E/Mc²)^(−5/2)`
    pub b: f64,
    /// `√(A/B)`, close to `M c` when `E ≪ Mc²`.
    pub p0: f64,
    /// `1/p₀`, roughly the Compton wavelength.
    pub l0: f64,
}

/// Closed-form A, B, p₀, L₀. Needs E > 0.
pub fn series_constants(params: &DetectorParams) -> Result<SeriesConstants> {
    if params.gap <= 0.0 {
        return Err(Error::domain(
            "gap_E",
            "series constants need E > 0 (A = B = 0 leaves p0 undefined)",
        ));
    }
    let x = 2.0 * params.gap_ratio();
    let root = (1.0 + x).sqrt();
    let a = x / (root * (1.0 + root));
    let c = params.wave_speed;
    let m = params.mass;
    let b = params.gap / (c.powi(4) * m.powi(3)) * (1.0 + x).powf(-2.5);
    let p0 = (a / b).sqrt();
    Ok(SeriesConstants { a, b, p0, l0: 1.0 / p0 })
}

/// Spontaneous-emission template T(p), p ≥ 0.
pub fn t_spont(p: f64, params: &DetectorParams) -> f64 {
    if p < SMALL_P_SWITCH * params.mass_momentum() {
        t_spont_series(p, params)
    } else {
        t_spont_closed(p, params)
    }
}

/// The closed form at any p ≥ 0.
pub fn t_spont_closed(p: f64, params: &DetectorParams) -> f64 {
    spont_pair(params).width_over_p(p)
}

/// Fourth-order expansion about p = 0; its leading value is 2A.
pub fn t_spont_series(p: f64, params: &DetectorParams) -> f64 {
    let (t0, t2, t4) = spont_pair(params).series();
    let p2 = p * p;
    t0 + p2 * (t2 + p2 * t4)
}

/// Large-mass limit `T₀ = 2E/(Mc²)`.
pub fn t_spont_large_mass(params: &DetectorParams) -> f64 {
    2.0 * params.gap_ratio()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalKinematics {
    /// `c + √(2E/M)`
    pub v_crit: f64,
    /// `M c + √(2 E M)`
    pub p_threshold: f64,
}

pub fn critical_kinematics(params: &DetectorParams) -> CriticalKinematics {
    let m = params.mass;
    CriticalKinematics {
        v_crit: params.wave_speed + (2.0 * params.gap / m).sqrt(),
        p_threshold: params.mass_momentum() + (2.0 * params.gap * m).sqrt(),
    }
}

/// Excitation template `(2M/p)√((p − cM)² − 2EM) Θ(p − Mc − √(2EM))`.
/// Zero at and below the threshold, including p = 0.
pub fn t_excite(p: f64, params: &DetectorParams) -> f64 {
    let a = params.mass_momentum();
    let r = (2.0 * params.gap * params.mass).sqrt();
    let above = p - (a + r);
    if !(above > 0.0) {
        return 0.0;
    }
    2.0 * params.mass / p * (above * (p - a + r)).sqrt()
}

/// Root-finder route to the spontaneous template: brackets the photon
/// momentum interval from the two energy-conservation quadratics
/// `k² + 2k(cM ± p) − 2EM = 0` and returns `(k_up − k_low)/p`.
pub fn t_spont_oracle(p: f64, params: &DetectorParams) -> Result<f64> {
    t_spont_oracle_seeded(p, params, 1.0)
}

/// [`t_spont_oracle`] with the upper bracket stretched by `seed ≥ 1`.
pub fn t_spont_oracle_seeded(p: f64, params: &DetectorParams, seed: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain("p", "oracle needs p > 0"));
    }
    let a = params.mass_momentum();
    let s = 2.0 * params.gap * params.mass;
    let k_up = quadratic_positive_root(a - p, s, seed)?;
    let k_low = quadratic_positive_root(a + p, s, seed)?;
    Ok((k_up - k_low) / p)
}

/// Largest root of `k² + 2bk − s` (s ≥ 0) by bracketing on `[max(0, −b), hi]`.
fn quadratic_positive_root(b: f64, s: f64, seed: f64) -> Result<f64> {
    let q = |k: f64| k * k + 2.0 * b * k - s;
    let lo = (-b).max(0.0);
    let hi = lo.max(seed.max(1.0) * (2.0 * b.abs() + s.sqrt()));
    if hi == lo {
        return Ok(lo);
    }
    find_root(q, lo, hi, ORACLE_ROOT_TOL)
}

/// Root-finder route to the excitation template from the delta constraint
/// `k² − 2k(p − cM) + 2EM = 0`.
pub fn t_excite_oracle(p: f64, params: &DetectorParams) -> Result<f64> {
    t_excite_oracle_seeded(p, params, 1.0)
}

pub fn t_excite_oracle_seeded(p: f64, params: &DetectorParams, seed: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain("p", "oracle needs p > 0"));
    }
    let vertex = p - params.mass_momentum();
    let s = 2.0 * params.gap * params.mass;
    let q = |k: f64| k * k - 2.0 * vertex * k + s;
    // Roots are non-positive when the vertex is, and complex when q(vertex) > 0.
    if vertex <= 0.0 || q(vertex) >= 0.0 {
        return Ok(0.0);
    }
    let k_minus = find_root(q, 0.0, vertex, ORACLE_ROOT_TOL)?;
    let k_plus = find_root(q, vertex, seed.max(1.0) * 2.0 * vertex, ORACLE_ROOT_TOL)?;
    Ok(2.0 * params.mass / p * 0.5 * (k_plus - k_minus))
}

/// Locates the excitation threshold by bisecting the sign change of the
/// discriminant `(p − cM)² − 2EM`.
pub fn threshold_by_bisection(params: &DetectorParams) -> f64 {
    let a = params.mass_momentum();
    let s = 2.0 * params.gap * params.mass;
    if s == 0.0 {
        return a;
    }
    let disc = |p: f64| (p - a) * (p - a) - s;
    let (mut lo, mut hi) = (a, a + 2.0 * s.sqrt());
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if disc(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    fn direct_form(p: f64, params: &DetectorParams) -> f64 {
        let (m, c, e) = (params.mass, params.wave_speed, params.gap);
        2.0 - ((p + m * c).powi(2) + 2.0 * e * m).sqrt() / p + ((p - m * c).powi(2) + 2.0 * e * m).sqrt() / p
    }

    #[test]
    fn zero_momentum_limit_is_two_a() {
        let params = DetectorParams::new(1.0, 1e3, 1.0, 1.0).unwrap();
        let k = series_constants(&params).unwrap();
        assert!(rel(t_spont(0.0, &params), 2.0 * k.a) < 1e-14);
        // The naive form approaches the same value where it is still accurate.
        assert!(rel(direct_form(1e-2, &params), 2.0 * k.a) < 1e-6);
    }

    #[test]
    fn rearranged_form_matches_direct_form() {
        // E/Mc² = 0.1 keeps the direct form free of cancellation.
        let params = DetectorParams::new(0.1, 1.0, 1.0, 1.0).unwrap();
        for p in log_grid(1e-2, 1e2, 50) {
            assert!(
                rel(t_spont_closed(p, &params), direct_form(p, &params)) < 1e-12,
                "p = {p}"
            );
        }
    }

    #[test]
    fn zero_gap_vanishes_below_mc() {
        let params = DetectorParams::new(0.0, 2.0, 1.5, 1.0).unwrap();
        for p in [0.0, 1e-6, 0.5, 2.9, 3.0] {
            assert_eq!(t_spont(p, &params), 0.0, "p = {p}");
        }
        assert!((t_spont(6.0, &params) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generic_point_matches_oracle() {
        let params = DetectorParams::new(1.0, 1e3, 1.0, 1.0).unwrap();
        let t = t_spont(10.0, &params);
        let o = t_spont_oracle(10.0, &params).unwrap();
        assert!(rel(t, o) < 1e-8, "{t} vs {o}");
    }

    #[test]
    fn series_constants_basics() {
        let params = DetectorParams::new(1.0, 1e6, 1.0, 1.0).unwrap();
        let k = series_constants(&params).unwrap();
        assert!(k.a > 0.0 && k.a < 1.0 && k.b > 0.0);
        let ratio = k.p0 / params.mass_momentum();
        assert!((0.99..=1.01).contains(&ratio), "{ratio}");
        assert!(rel(k.p0, (k.a / k.b).sqrt()) < 1e-15);
        assert!(rel(k.l0 * k.p0, 1.0) < 1e-15);
        assert!(matches!(
            series_constants(&DetectorParams::new(0.0, 1.0, 1.0, 1.0).unwrap()),
            Err(Error::Domain { field: "gap_E", .. })
        ));
    }

    #[test]
    fn quadratic_series_close_to_template() {
        let params = DetectorParams::new(1.0, 1e3, 1.0, 1.0).unwrap();
        let k = series_constants(&params).unwrap();
        for p in log_grid(1e-3 * k.p0, 0.05 * k.p0, 40) {
            let approx = 2.0 * k.a * (1.0 + (p / k.p0).powi(2));
            assert!(rel(approx, t_spont(p, &params)) < 1e-4);
        }
    }

    #[test]
    fn series_coefficients_match_constants() {
        let params = DetectorParams::new(3.0, 7.0, 0.5, 1.0).unwrap();
        let k = series_constants(&params).unwrap();
        let (t0, t2, _) = spont_pair(&params).series();
        assert!(rel(t0, 2.0 * k.a) < 1e-14);
        assert!(rel(t2, 2.0 * k.b) < 1e-13);
    }

    #[test]
    fn switchover_is_seamless() {
        for ratio in [1e-8, 1e-4, 1e-1, 1.0] {
            let params = DetectorParams::new(ratio, 1.0, 1.0, 1.0).unwrap();
            let p = SMALL_P_SWITCH * params.mass_momentum();
            let s = t_spont_series(p, &params);
            let c = t_spont_closed(p, &params);
            assert!(rel(s, c) < 1e-10, "E/Mc² = {ratio}: {s} vs {c}");
        }
    }

    #[test]
    fn large_mass_template() {
        let params = DetectorParams::new(1.0, 1e6, 1.0, 1.0).unwrap();
        assert!(rel(t_spont_large_mass(&params), 2e-6) < 1e-15);
        for m in [1e3, 1e5, 1e8] {
            let params = DetectorParams::new(1.0, m, 1.0, 1.0).unwrap();
            let t0 = t_spont_large_mass(&params);
            assert!((t_spont(0.0, &params) / t0 - 1.0).abs() < t0);
        }
    }

    #[test]
    fn excitation_threshold() {
        let params = DetectorParams::new(1.0, 1e3, 1.0, 1.0).unwrap();
        let kin = critical_kinematics(&params);
        assert_eq!(t_excite(kin.p_threshold, &params), 0.0);
        assert_eq!(t_excite(0.5 * kin.p_threshold, &params), 0.0);
        assert_eq!(t_excite(0.0, &params), 0.0);
        assert!(t_excite(1.01 * kin.p_threshold, &params) > 0.0);
        assert!(rel(kin.p_threshold, params.mass * kin.v_crit) < 4.0 * f64::EPSILON);
        // Continuity from above.
        let just_above = kin.p_threshold * (1.0 + 1e-14);
        assert!(t_excite(just_above, &params) < 1e-3);
    }

    #[test]
    fn zero_gap_critical_velocity() {
        let params = DetectorParams::new(0.0, 5.0, 0.3, 1.0).unwrap();
        let kin = critical_kinematics(&params);
        assert_eq!(kin.v_crit, 0.3);
    }

    #[test]
    fn slow_medium_critical_velocity() {
        // Rubidium-like mass, phonon speed of 1 mm/s, microkelvin-scale gap (SI numbers
        // reinterpreted in consistent natural-unit bookkeeping).
        let params = DetectorParams::new(1e-30, 1.4e-25, 1e-3, 1.0).unwrap();
        let kin = critical_kinematics(&params);
        assert!(kin.v_crit >= 1e-3);
    }

    #[test]
    fn excite_oracle_cases() {
        let params = DetectorParams::new(1.0, 1e3, 1.0, 1.0).unwrap();
        // Discriminant negative just above Mc.
        assert_eq!(t_excite_oracle(1010.0, &params).unwrap(), 0.0);
        assert_eq!(t_excite_oracle(500.0, &params).unwrap(), 0.0);
        let p = 1500.0;
        assert!(rel(t_excite_oracle(p, &params).unwrap(), t_excite(p, &params)) < 1e-10);
        let th = threshold_by_bisection(&params);
        assert!(rel(th, critical_kinematics(&params).p_threshold) < 1e-10);
    }

    #[test]
    fn spont_oracle_zero_gap() {
        let params = DetectorParams::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(t_spont_oracle(0.5, &params).unwrap(), 0.0);
        assert!(rel(t_spont_oracle(3.0, &params).unwrap(), t_spont(3.0, &params)) < 1e-14);
        assert!(t_spont_oracle(0.0, &params).is_err());
    }

    #[test]
    fn oracle_seed_independence() {
        let params = DetectorParams::new(1.0, 1e3, 1.0, 1.0).unwrap();
        for p in log_grid(1.0, 1e5, 20) {
            let base = t_spont_oracle(p, &params).unwrap();
            for seed in [1.7, 13.0, 1e3] {
                let other = t_spont_oracle_seeded(p, &params, seed).unwrap();
                assert!(rel(other, base) < 1e-12, "p = {p}, seed = {seed}");
            }
        }
    }
}
