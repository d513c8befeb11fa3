//! Harmonic hydrogen atom coupled to the electromagnetic field, SI units.
//!
//! The rate is `(μMΩ/(2ε₀cħ)) ∫d³p |φ₀(p)|² T(p)` with the template
//! `T(p) = ∫_{k₋}^{k₊} dk F(k)²/p [1 + k²p²/(2Ω²ħ²M²) − G(k)²/(2Ω²ħ²)]`.
//! `M` is the recoil mass selected by [`RecoilMass`]; μ is always the reduced
//! mass. Small-momentum behavior is summarized by `M T(p)/ħ ≈ C + D p²`.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureSpec, Transform};
use crate::rates::{Diagnostics, Method, RateResult};
use crate::templates::RootPair;
use crate::units::{si, HydrogenParams, RecoilMass};
use crate::wavepackets::{gaussian_density, MomentumDensity};

/// Below `SMALL_P_SWITCH · M c` the template uses the midpoint of the
/// k-interval instead of quadrature.
pub const SMALL_P_SWITCH: f64 = 1e-6;

/// Reference harmonic-hydrogen values used by the calibration.
pub mod reference {
    /// A² s³ kg⁻² m⁻²
    pub const C: f64 = 1.66e21;
    /// A² s⁵ kg⁻⁴ m⁻⁴
    pub const D: f64 = 2.96e64;
    /// kg m/s
    pub const P0: f64 = 2.37e-22;
    /// m/s
    pub const V0: f64 = 1.42e5;
    /// m
    pub const L0: f64 = 2.80e-12;
    /// s⁻¹
    pub const LEADING_RATE: f64 = 6.86e8;
    /// Measured 2p → 1s rate, s⁻¹.
    pub const LITERATURE_RATE: f64 = 6.27e8;
    /// Packet width of the size of the atom, m.
    pub const ATOM_WIDTH: f64 = 5.29e-11;
    pub const RELATIVE_INCREASE: f64 = 0.0084;
    /// Position and velocity uncertainty at `ATOM_WIDTH`.
    pub const DELTA_X: f64 = 3.74e-11;
    pub const DELTA_V: f64 = 5.31e3;
}

/// Which constant turns the momentum scale p₀ into a length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HbarConvention {
    /// `ħ/p₀`
    Reduced,
    /// `h/p₀`; the reference `L₀ ≈ 2.80·10⁻¹² m` is this one.
    Planck,
}

impl HbarConvention {
    pub fn constant(self, hp: &HydrogenParams) -> f64 {
        match self {
            HbarConvention::Reduced => hp.si.hbar,
            HbarConvention::Planck => hp.si.planck_h,
        }
    }
}

impl fmt::Display for HbarConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HbarConvention::Reduced => "reduced",
            HbarConvention::Planck => "planck",
        })
    }
}

impl FromStr for HbarConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reduced" | "hbar" => Ok(HbarConvention::Reduced),
            "planck" | "h" => Ok(HbarConvention::Planck),
            other => Err(Error::Config(format!("unknown L0 convention `{other}`"))),
        }
    }
}

fn root_pair(hp: &HydrogenParams) -> RootPair {
    let m = hp.recoil_mass();
    RootPair {
        a: hp.si.light_c * m,
        s: 2.0 * hp.omega * hp.si.hbar * m,
    }
}

/// `k± = ±p − cM + √((±p − cM)² + 2ΩħM)`, evaluated without cancellation.
pub fn k_bounds(p: f64, hp: &HydrogenParams) -> (f64, f64) {
    let RootPair { a, s } = root_pair(hp);
    (RootPair::positive_root(a + p, s), RootPair::positive_root(a - p, s))
}

/// `(q_e/m_e) e^{−μk²/(4Ωħm_e²)} + (q_p/m_p) e^{−μk²/(4Ωħm_p²)}`.
pub fn form_factor_f(k: f64, hp: &HydrogenParams) -> f64 {
    let c = &hp.si;
    let scale = hp.reduced_mass * k * k / (4.0 * hp.omega * c.hbar);
    c.q_e / c.m_e * (-scale / (c.m_e * c.m_e)).exp() + c.q_p / c.m_p * (-scale / (c.m_p * c.m_p)).exp()
}

/// `k²/2M + ck − ħΩ`.
pub fn detuning_g(k: f64, hp: &HydrogenParams) -> f64 {
    k * k / (2.0 * hp.recoil_mass()) + hp.si.light_c * k - hp.gap_energy()
}

/// Integrand of the template without the 1/p.
fn kernel(k: f64, p: f64, hp: &HydrogenParams) -> f64 {
    let f = form_factor_f(k, hp);
    let hw = hp.omega * hp.si.hbar;
    let m = hp.recoil_mass();
    let g = detuning_g(k, hp);
    let bracket = 1.0 + (k * p / (hw * m)).powi(2) / 2.0 - (g / hw).powi(2) / 2.0;
    f * f * bracket
}

/// The bracket `1 + k²p²/(2Ω²ħ²M²) − G²/(2Ω²ħ²)` alone.
pub fn template_bracket(k: f64, p: f64, hp: &HydrogenParams) -> f64 {
    kernel(k, p, hp) / form_factor_f(k, hp).powi(2)
}

/// Template `T(p)` for p ≥ 0.
///
/// Above the switch the k-integral is done by adaptive quadrature on the
/// interval mapped to [−1, 1]; below it the midpoint value times the
/// interval width is used.
pub fn t_hydrogen(p: f64, hp: &HydrogenParams, spec: &QuadratureSpec) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::domain("p", format!("must be >= 0, got {p}")));
    }
    let pair = root_pair(hp);
    let half_over_p = 0.5 * pair.width_over_p(p);
    let mid = pair.midpoint(p);
    if p < SMALL_P_SWITCH * pair.a {
        return Ok(2.0 * half_over_p * kernel(mid, p, hp));
    }
    let half = half_over_p * p;
    let est = integrate(
        |t| kernel(mid + half * t, p, hp),
        -1.0,
        1.0,
        &spec.with_transform(Transform::None),
    )?;
    Ok(half_over_p * est.value)
}

/// The small-momentum evaluation at any p (for switchover checks).
pub fn t_hydrogen_midpoint(p: f64, hp: &HydrogenParams) -> f64 {
    let pair = root_pair(hp);
    pair.width_over_p(p) * kernel(pair.midpoint(p), p, hp)
}

/// `μMΩ/(2ε₀cħ)`.
fn rate_prefactor(hp: &HydrogenParams) -> f64 {
    let c = &hp.si;
    hp.reduced_mass * hp.recoil_mass() * hp.omega / (2.0 * c.epsilon0 * c.light_c * c.hbar)
}

/// `μΩ/(2ε₀c)`, the factor in front of C.
fn series_prefactor(hp: &HydrogenParams) -> f64 {
    let c = &hp.si;
    hp.reduced_mass * hp.omega / (2.0 * c.epsilon0 * c.light_c)
}

/// Grid and acceptance threshold of the series fit. The grid is geometric
/// in `p/p₀` between `lo` and `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Largest tolerated relative residual of the fit.
    pub max_residual: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 1e-1,
            points: 32,
            max_residual: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HydrogenSeries {
    /// A² s³ kg⁻² m⁻²
    pub c: f64,
    /// A² s⁵ kg⁻⁴ m⁻⁴
    pub d: f64,
    /// kg m/s
    pub p0: f64,
    /// `ħ/p₀`, m
    pub l0: f64,
    /// `h/p₀`, m
    pub l0_planck: f64,
    /// `p₀/(m_e + m_p)`, m/s
    pub v0: f64,
    /// Maximum relative residual of the fit over its grid.
    pub residual: f64,
    /// Coefficient of `(p/p₀)⁴` absorbed by the fit.
    pub quartic: f64,
}

impl HydrogenSeries {
    pub fn l0_for(&self, convention: HbarConvention) -> f64 {
        match convention {
            HbarConvention::Reduced => self.l0,
            HbarConvention::Planck => self.l0_planck,
        }
    }
}

/// Least squares by modified Gram–Schmidt. Columns are consumed.
fn least_squares(mut cols: Vec<Vec<f64>>, y: &[f64]) -> Vec<f64> {
    let n = cols.len();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        for i in 0..j {
            let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            r[i][j] = dot;
            let qi = cols[i].clone();
            for (x, q) in cols[j].iter_mut().zip(&qi) {
                *x -= dot * q;
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        r[j][j] = norm;
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    let mut rhs: Vec<f64> = y.to_vec();
    let mut qty = vec![0.0; n];
    for j in 0..n {
        let dot: f64 = cols[j].iter().zip(&rhs).map(|(a, b)| a * b).sum();
        qty[j] = dot;
        for (x, q) in rhs.iter_mut().zip(&cols[j]) {
            *x -= dot * q;
        }
    }
    let mut beta = vec![0.0; n];
    for j in (0..n).rev() {
        let tail: f64 = (j + 1..n).map(|k| r[j][k] * beta[k]).sum();
        beta[j] = (qty[j] - tail) / r[j][j];
    }
    beta
}

fn fit_on_grid(
    hp: &HydrogenParams,
    scale: f64,
    fit: &FitConfig,
    spec: &QuadratureSpec,
) -> Result<(HydrogenSeries, f64)> {
    let m = hp.recoil_mass();
    let n = fit.points;
    let ps: Vec<f64> = (0..n)
        .map(|i| scale * fit.lo * (fit.hi / fit.lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let y = ps
        .iter()
        .map(|&p| Ok(m * t_hydrogen(p, hp, spec)? / hp.si.hbar))
        .collect::<Result<Vec<f64>>>()?;
    // Basis 1, z, z² with z = (p/p_max)²; z² absorbs the quartic term.
    let p_max = *ps.last().unwrap();
    let z: Vec<f64> = ps.iter().map(|p| (p / p_max).powi(2)).collect();
    let cols = vec![vec![1.0; n], z.clone(), z.iter().map(|v| v * v).collect()];
    let beta = least_squares(cols, &y);
    let residual = z
        .iter()
        .zip(&y)
        .map(|(&zi, &yi)| ((beta[0] + zi * (beta[1] + zi * beta[2]) - yi) / yi).abs())
        .fold(0.0, f64::max);
    let c = beta[0];
    let d = beta[1] / (p_max * p_max);
    let q4 = beta[2] / p_max.powi(4);
    if !(c > 0.0 && d > 0.0) {
        return Err(Error::Fit {
            residual: f64::INFINITY,
            limit: fit.max_residual,
        });
    }
    let p0 = (c / d).sqrt();
    let series = HydrogenSeries {
        c,
        d,
        p0,
        l0: hp.si.hbar / p0,
        l0_planck: hp.si.planck_h / p0,
        v0: p0 / hp.total_mass,
        residual,
        quartic: q4 * p0.powi(4) / c,
    };
    Ok((series, residual))
}

/// C and D from a least-squares fit of `M T(p)/ħ` on a geometric grid in
/// `p/p₀`. The grid is placed using a first pass scaled by `M c`.
pub fn hydrogen_series_constants_with(
    hp: &HydrogenParams,
    fit: &FitConfig,
    spec: &QuadratureSpec,
) -> Result<HydrogenSeries> {
    if !(fit.lo > 0.0 && fit.hi > fit.lo && fit.points >= 4) {
        return Err(Error::domain("fit", "need 0 < lo < hi and at least 4 points"));
    }
    let (first, _) = fit_on_grid(hp, hp.si.light_c * hp.recoil_mass(), fit, spec)?;
    let (series, residual) = fit_on_grid(hp, first.p0, fit, spec)?;
    if residual > fit.max_residual {
        return Err(Error::Fit {
            residual,
            limit: fit.max_residual,
        });
    }
    Ok(series)
}

pub fn hydrogen_series_constants(hp: &HydrogenParams) -> Result<HydrogenSeries> {
    hydrogen_series_constants_with(hp, &FitConfig::default(), &QuadratureSpec::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HydrogenGaussianRate {
    #[serde(flatten)]
    pub result: RateResult,
    /// `μΩC/(2ε₀c)`, s⁻¹
    pub leading_rate: f64,
    /// `3(L₀/L)²`
    pub relative_increase: f64,
    pub width: f64,
    pub l0: f64,
    pub convention: HbarConvention,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// `μΩC/(2ε₀c) [1 + 3(L₀/L)²]` for a Gaussian of width `width`.
pub fn hydrogen_gaussian_rate(
    width: f64,
    hp: &HydrogenParams,
    series: &HydrogenSeries,
    convention: HbarConvention,
) -> Result<HydrogenGaussianRate> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::domain("L", format!("packet width must be > 0, got {width}")));
    }
    let leading = series_prefactor(hp) * series.c;
    let l0 = series.l0_for(convention);
    let increase = 3.0 * (l0 / width).powi(2);
    let warning = (width < 10.0 * l0)
        .then(|| format!("L = {width:e} m is not large compared with L0 = {l0:e} m; the series is unreliable"));
    Ok(HydrogenGaussianRate {
        result: RateResult {
            rate: leading * (1.0 + increase),
            method: Method::Series,
            estimated_error: 0.0,
            diagnostics: Diagnostics {
                threshold_fraction: None,
                moment2: Some(3.0 * (hp.si.hbar / width).powi(2)),
            },
        },
        leading_rate: leading,
        relative_increase: increase,
        width,
        l0,
        convention,
        warning,
    })
}

/// Full quadrature of the rate for a density in SI momentum units.
pub fn hydrogen_rate(d: &MomentumDensity, hp: &HydrogenParams, spec: &QuadratureSpec) -> Result<RateResult> {
    let failure: Cell<Option<Error>> = Cell::new(None);
    let template = |p: f64| match t_hydrogen(p, hp, spec) {
        Ok(t) => t,
        Err(e) => {
            let first = failure.take().unwrap_or(e);
            failure.set(Some(first));
            f64::NAN
        }
    };
    let est = d.integrate_radial(template, 0.0, &[], &spec.with_transform(Transform::None));
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let est = est?;
    Ok(RateResult {
        rate: (rate_prefactor(hp) * est.value).max(0.0),
        method: Method::Quadrature,
        estimated_error: est.relative_error(),
        diagnostics: Diagnostics {
            threshold_fraction: None,
            moment2: d.analytic_moment2(),
        },
    })
}

/// Quadrature rate of a Gaussian packet of width `width` (m).
pub fn hydrogen_gaussian_rate_quadrature(width: f64, hp: &HydrogenParams, spec: &QuadratureSpec) -> Result<RateResult> {
    let d = gaussian_density(width)?.with_hbar(hp.si.hbar);
    hydrogen_rate(&d, hp, spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocitySpread {
    /// `L/√2`, m
    pub delta_x: f64,
    /// `ℏ'/(2 (m_e + m_p) Δx)`, m/s
    pub delta_v: f64,
    pub convention: HbarConvention,
}

/// Center-of-mass uncertainty of a Gaussian of width `width` with
/// `Δx = L/√2` and `Δv = ℏ'/(2MΔx)`.
pub fn velocity_spread(width: f64, hp: &HydrogenParams, convention: HbarConvention) -> VelocitySpread {
    let delta_x = width / 2f64.sqrt();
    VelocitySpread {
        delta_x,
        delta_v: convention.constant(hp) / (2.0 * hp.total_mass * delta_x),
        convention,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConventionCalibration {
    pub recoil: RecoilMass,
    /// Ω minimizing `ln²(C/C*) + ln²(D/D*)`, rad/s
    pub omega: f64,
    /// ħΩ at that Ω, eV
    pub gap_ev: f64,
    /// 2πħΩ = hΩ, eV
    pub planck_gap_ev: f64,
    pub series: HydrogenSeries,
    pub rel_err_c: f64,
    pub rel_err_d: f64,
    pub rel_err_p0: f64,
    pub rel_err_v0: f64,
    /// Remaining `√(ln²(C/C*) + ln²(D/D*))`.
    pub log_mismatch: f64,
    /// The optimum sits on the boundary of the scanned Ω range.
    pub at_scan_edge: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub default_gap_ev: f64,
    pub default_recoil: RecoilMass,
    pub default_series: HydrogenSeries,
    pub conventions: Vec<ConventionCalibration>,
    pub best_recoil: RecoilMass,
    pub best_omega: f64,
    pub implied_gap_ev: f64,
    pub implied_planck_gap_ev: f64,
    /// Default Ω over the calibrated Ω; 2π would mean ħ and h were swapped.
    pub omega_ratio_default_to_best: f64,
    pub omega_ratio_over_two_pi: f64,
    /// `μΩC*/(2ε₀c)` at the calibrated Ω, s⁻¹
    pub leading_rate_calibrated: f64,
    /// `μΩC*/(2ε₀c)` at the default Ω, s⁻¹
    pub leading_rate_default_omega: f64,
    pub leading_rate_rel_err: f64,
    pub literature_ratio: f64,
    /// ħ/p₀ and h/p₀ from the calibrated series against the reference L₀.
    pub l0_reduced: f64,
    pub l0_planck: f64,
    pub l0_reduced_rel_err: f64,
    pub l0_planck_rel_err: f64,
    /// `3(L₀/L)²` at the atomic width for the reference L₀, ħ/p₀ and h/p₀.
    pub relative_increase_reference_l0: f64,
    pub relative_increase_reduced: f64,
    pub relative_increase_planck: f64,
    pub velocity_spread_reduced: VelocitySpread,
    pub velocity_spread_planck: VelocitySpread,
}

fn log_mismatch(s: &HydrogenSeries) -> f64 {
    ((s.c / reference::C).ln().powi(2) + (s.d / reference::D).ln().powi(2)).sqrt()
}

fn calibrate_convention(
    base: &HydrogenParams,
    recoil: RecoilMass,
    spec: &QuadratureSpec,
) -> Result<ConventionCalibration> {
    let hp = base.with_recoil(recoil);
    let fit = FitConfig::default();
    let objective = |ln_omega: f64| -> Result<(f64, HydrogenSeries)> {
        let s = hydrogen_series_constants_with(&hp.with_omega(ln_omega.exp())?, &fit, spec)?;
        Ok((log_mismatch(&s), s))
    };
    // Coarse scan over ħΩ from 0.1 eV to 100 eV.
    let lo = HydrogenParams::omega_from_ev(0.1, &hp.si).ln();
    let hi = HydrogenParams::omega_from_ev(100.0, &hp.si).ln();
    let n = 49;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values = grid
        .iter()
        .map(|&x| Ok(objective(x)?.0))
        .collect::<Result<Vec<f64>>>()?;
    let best = (0..n).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n - 1)]);
    // Golden-section refinement in ln Ω.
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = objective(x1)?.0;
    let mut f2 = objective(x2)?.0;
    while b - a > 1e-10 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = objective(x1)?.0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = objective(x2)?.0;
        }
    }
    let ln_omega = 0.5 * (a + b);
    let (mismatch, series) = objective(ln_omega)?;
    let omega = ln_omega.exp();
    let tuned = hp.with_omega(omega)?;
    let rel = |x: f64, target: f64| (x - target) / target;
    Ok(ConventionCalibration {
        recoil,
        omega,
        gap_ev: tuned.gap_ev(),
        planck_gap_ev: tuned.gap_ev() * 2.0 * std::f64::consts::PI,
        series,
        rel_err_c: rel(series.c, reference::C),
        rel_err_d: rel(series.d, reference::D),
        rel_err_p0: rel(series.p0, reference::P0),
        rel_err_v0: rel(series.v0, reference::V0),
        log_mismatch: mismatch,
        at_scan_edge: best == 0 || best == n - 1,
    })
}

/// Scans Ω for every recoil convention to match the reference C and D,
/// and collects the derived checks in one report.
pub fn calibrate(base: &HydrogenParams, spec: &QuadratureSpec) -> Result<CalibrationReport> {
    let default_series = hydrogen_series_constants_with(base, &FitConfig::default(), spec)?;
    let conventions = RecoilMass::ALL
        .iter()
        .map(|&r| calibrate_convention(base, r, spec))
        .collect::<Result<Vec<_>>>()?;
    let best = conventions
        .iter()
        .min_by(|a, b| a.log_mismatch.total_cmp(&b.log_mismatch))
        .unwrap()
        .clone();
    let tuned = base.with_recoil(best.recoil).with_omega(best.omega)?;
    let leading = series_prefactor(&tuned) * reference::C;
    let leading_default = series_prefactor(base) * reference::C;
    let s = &best.series;
    let width = reference::ATOM_WIDTH;
    let increase = |l0: f64| 3.0 * (l0 / width).powi(2);
    Ok(CalibrationReport {
        default_gap_ev: base.gap_ev(),
        default_recoil: base.recoil,
        default_series,
        best_recoil: best.recoil,
        best_omega: best.omega,
        implied_gap_ev: best.gap_ev,
        implied_planck_gap_ev: best.planck_gap_ev,
        omega_ratio_default_to_best: base.omega / best.omega,
        omega_ratio_over_two_pi: base.omega / best.omega / (2.0 * std::f64::consts::PI),
        leading_rate_calibrated: leading,
        leading_rate_default_omega: leading_default,
        leading_rate_rel_err: (leading - reference::LEADING_RATE) / reference::LEADING_RATE,
        literature_ratio: leading / reference::LITERATURE_RATE,
        l0_reduced: s.l0,
        l0_planck: s.l0_planck,
        l0_reduced_rel_err: (s.l0 - reference::L0) / reference::L0,
        l0_planck_rel_err: (s.l0_planck - reference::L0) / reference::L0,
        relative_increase_reference_l0: increase(reference::L0),
        relative_increase_reduced: increase(s.l0),
        relative_increase_planck: increase(s.l0_planck),
        velocity_spread_reduced: velocity_spread(width, &tuned, HbarConvention::Reduced),
        velocity_spread_planck: velocity_spread(width, &tuned, HbarConvention::Planck),
        conventions,
    })
}

/// ħΩ in eV for a frequency in rad/s, with the default constants.
pub fn gap_ev_of(omega: f64) -> f64 {
    si::HBAR * omega / si::ELECTRON_VOLT
}
