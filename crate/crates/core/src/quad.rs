//! Deterministic adaptive quadrature and bracketing root finding.
//!
//! Integration uses the 21-point Gauss-Kronrod pair with QUADPACK-style error
//! scaling and global bisection of the worst interval. There is no
//! randomness and no dependence on thread count: the same inputs always give
//! the same bits.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_136,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Integrand magnitude below which the semi-infinite map is truncated,
/// relative to the running peak.
pub const TRUNCATION_RATIO: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    /// x = a + u², for integrands with a square-root edge at `a`.
    SqrtEdge,
    /// x = a + t / (1 - t) on t ∈ [0, 1); the upper limit must be +∞.
    SemiInfiniteExp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub transform: Transform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_subdivisions: 1 << 16,
            transform: Transform::None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn with_transform(self, transform: Transform) -> Self {
        Self { transform, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::domain("rel_tol", format!("must be > 0, got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::domain("abs_tol", format!("must be >= 0, got {}", self.abs_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::domain("max_subdivisions", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    /// Error relative to |value|; 0 when both vanish.
    pub fn relative_error(&self) -> f64 {
        if self.error == 0.0 {
            0.0
        } else {
            self.error / self.value.abs()
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` according to `spec`.
///
/// With [`Transform::SemiInfiniteExp`] the upper limit must be `f64::INFINITY`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate_with_breaks(f, &[a, b], spec)
}

/// Like [`integrate`], starting from the partition given by `breaks`
/// (ascending, at least two points). Transforms apply to the whole range.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    if breaks.len() < 2 {
        return Err(Error::domain("breaks", "need at least two points"));
    }
    let a = breaks[0];
    let b = *breaks.last().unwrap();
    if breaks.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::domain("breaks", "must be ascending"));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    match spec.transform {
        Transform::None => {
            if !b.is_finite() || !a.is_finite() {
                return Err(Error::domain(
                    "b",
                    "infinite limit needs the semi_infinite_exp transform",
                ));
            }
            adaptive(&f, breaks, spec)
        }
        Transform::SqrtEdge => {
            if !b.is_finite() {
                return Err(Error::domain("b", "sqrt_edge needs a finite upper limit"));
            }
            let mapped: Vec<f64> = breaks.iter().map(|x| (x - a).sqrt()).collect();
            let g = |u: f64| 2.0 * u * f(a + u * u);
            adaptive(&g, &mapped, spec)
        }
        Transform::SemiInfiniteExp => {
            if b != f64::INFINITY {
                return Err(Error::domain("b", "semi_infinite_exp requires b = +inf"));
            }
            let g = |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            };
            let mut mapped: Vec<f64> = breaks[..breaks.len() - 1]
                .iter()
                .map(|x| {
                    let d = x - a;
                    d / (1.0 + d)
                })
                .collect();
            let t_max = truncation_point(&g, *mapped.last().unwrap());
            mapped.retain(|&t| t < t_max);
            mapped.push(t_max);
            adaptive(&g, &mapped, spec)
        }
    }
}

/// Scans t ∈ [t0, 1) and returns where |g| has dropped below
/// `TRUNCATION_RATIO` of its running peak for good (or the last sample).
fn truncation_point<G: Fn(f64) -> f64>(g: &G, t0: f64) -> f64 {
    let mut samples = Vec::with_capacity(192);
    for i in 1..=128 {
        samples.push(t0 + (1.0 - t0) * i as f64 / 129.0);
    }
    // Geometric approach to t = 1 for slowly decaying tails.
    for k in 8..=60 {
        let t = 1.0 - (1.0 - t0) * 0.5f64.powi(k);
        if t < 1.0 {
            samples.push(t);
        }
    }
    let mut peak = 0.0f64;
    let mut last_significant = None;
    for (i, &t) in samples.iter().enumerate() {
        let v = g(t).abs();
        if !v.is_finite() {
            continue;
        }
        peak = peak.max(v);
        if v >= TRUNCATION_RATIO * peak && v > 0.0 {
            last_significant = Some(i);
        }
    }
    match last_significant {
        Some(i) if i + 1 < samples.len() => samples[i + 1],
        Some(_) => *samples.last().unwrap(),
        None => samples[0],
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    let mut segments: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature {
                estimate: value,
                error,
                subdivisions: segments.len(),
            });
        }
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol {
            return Ok(Estimate { value, error });
        }
        // Bisect the worst segments until the error budget is met or the
        // subdivision budget is spent; the sums above are refreshed each round.
        let mut rounds = segments.len().max(1);
        let mut err_sum = error;
        while rounds > 0 && err_sum > tol {
            rounds -= 1;
            if segments.len() >= spec.max_subdivisions {
                return Err(Error::Quadrature {
                    estimate: value,
                    error: err_sum,
                    subdivisions: segments.len(),
                });
            }
            let (worst, _) = segments
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, be), (i, s)| {
                    if s.error > be {
                        (i, s.error)
                    } else {
                        (bi, be)
                    }
                });
            let s = segments[worst];
            let mid = 0.5 * (s.a + s.b);
            if !(mid > s.a && mid < s.b) {
                return Err(Error::Quadrature {
                    estimate: value,
                    error: err_sum,
                    subdivisions: segments.len(),
                });
            }
            let left = gauss_kronrod(f, s.a, mid);
            let right = gauss_kronrod(f, mid, s.b);
            err_sum += left.error + right.error - s.error;
            segments[worst] = left;
            segments.push(right);
        }
    }
}

/// Product-grid integral ∫ dx ∫ du f(x, u) with adaptive refinement in both
/// directions. The reported error adds the outer estimate and the worst
/// relative inner error scaled by |value|.
pub fn integrate_product<F: Fn(f64, f64) -> f64>(
    f: F,
    outer_breaks: &[f64],
    inner: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let inner_spec = QuadratureSpec {
        transform: Transform::None,
        ..*spec
    };
    let failure: Cell<Option<Error>> = Cell::new(None);
    let worst_inner = Cell::new(0.0f64);
    let outer = |x: f64| match integrate(|u| f(x, u), inner.0, inner.1, &inner_spec) {
        Ok(est) => {
            worst_inner.set(worst_inner.get().max(est.relative_error()));
            est.value
        }
        Err(e) => {
            let mut slot = failure.take();
            if slot.is_none() {
                slot = Some(e);
            }
            failure.set(slot);
            f64::NAN
        }
    };
    let result = integrate_with_breaks(outer, outer_breaks, spec);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let est = result?;
    Ok(Estimate {
        value: est.value,
        error: est.error + worst_inner.get() * est.value.abs(),
    })
}

/// Brent's method on a sign-changing bracket. Returns a point within
/// `rel_tol·|root|` (plus a few ulps) of a root.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::RootFind(format!("non-finite bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::RootFind("function not finite at bracket ends".into()));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFind(format!(
            "no sign change on [{lo:e}, {hi:e}]: f = {fa:e}, {fb:e}"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * rel_tol * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol {
            d
        } else if m > 0.0 {
            tol.max(f64::MIN_POSITIVE)
        } else {
            -tol.max(f64::MIN_POSITIVE)
        };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::RootFind(format!("function not finite at {b:e}")));
        }
    }
    Err(Error::RootFind("no convergence after 300 iterations".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn polynomial() {
        let est = integrate(|x| x * x, 0.0, 1.0, &spec()).unwrap();
        assert!((est.value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_half_line() {
        let s = spec().with_transform(Transform::SemiInfiniteExp);
        let est = integrate(|x| (-x * x).exp(), 0.0, f64::INFINITY, &s).unwrap();
        assert!((est.value - PI.sqrt() / 2.0).abs() < 1e-10, "{est:?}");
    }

    #[test]
    fn sqrt_edge() {
        let s = spec().with_transform(Transform::SqrtEdge);
        let est = integrate(|x| x.sqrt(), 0.0, 1.0, &s).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn slow_tail_semi_infinite() {
        let s = spec().with_transform(Transform::SemiInfiniteExp);
        let est = integrate(|x| 1.0 / (1.0 + x * x), 0.0, f64::INFINITY, &s).unwrap();
        assert!((est.value - PI / 2.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn breakpoints_and_empty_range() {
        let est = integrate_with_breaks(|x| x.abs(), &[-1.0, 0.0, 2.0], &spec()).unwrap();
        assert!((est.value - 2.5).abs() < 1e-13);
        assert_eq!(integrate(|x| x, 3.0, 3.0, &spec()).unwrap().value, 0.0);
        assert!(integrate_with_breaks(|x| x, &[1.0, 0.0], &spec()).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let tight = QuadratureSpec {
            rel_tol: 1e-14,
            max_subdivisions: 3,
            ..spec()
        };
        match integrate(|x: f64| x.abs().sqrt().recip().min(1e8), -1.0, 1.0, &tight) {
            Err(Error::Quadrature {
                estimate, subdivisions, ..
            }) => {
                assert!(estimate.is_finite());
                assert!(subdivisions <= 3);
            }
            other => panic!("expected quadrature error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_spec() {
        let bad = QuadratureSpec { rel_tol: 0.0, ..spec() };
        assert!(integrate(|x| x, 0.0, 1.0, &bad).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, &spec()).is_err());
    }

    #[test]
    fn product_grid() {
        // ∫₀¹ dx ∫₋₁¹ du x² u² = 1/3 · 2/3
        let est = integrate_product(|x, u| x * x * u * u, &[0.0, 1.0], (-1.0, 1.0), &spec()).unwrap();
        assert!((est.value - 2.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn sqrt_two() {
        let r = find_root(|x| x * x - 2.0, 1.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn root_matches_quadratic_formula() {
        // k² − 2k(p − cM) + 2EM = 0 with E = 1, M = 10³, c = 1, p = 1100.
        let (e, m, c, p) = (1.0, 1e3, 1.0, 1100.0);
        let b = p - c * m;
        let f = |k: f64| k * k - 2.0 * k * b + 2.0 * e * m;
        let disc = (b * b - 2.0 * e * m).sqrt();
        let lo = find_root(f, 0.0, b, 1e-15).unwrap();
        let hi = find_root(f, b, 2.0 * b, 1e-15).unwrap();
        assert!((lo - (b - disc)).abs() / (b - disc) < 1e-13);
        assert!((hi - (b + disc)).abs() / (b + disc) < 1e-13);
    }

    #[test]
    fn unique_root_of_monotone_function() {
        // G(k) = k²/2M + ck − E is increasing on k > 0; scan for sign changes.
        let (m, c, e) = (2.0, 3.0, 5.0);
        let g = |k: f64| k * k / (2.0 * m) + c * k - e;
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let changes = grid.windows(2).filter(|w| g(w[0]) * g(w[1]) < 0.0).count();
        assert_eq!(changes, 1);
        let r = find_root(g, 0.0, 10.0, 1e-14).unwrap();
        let exact = -c * m + ((c * m).powi(2) + 2.0 * m * e).sqrt();
        assert!((r - exact).abs() < 1e-13);
    }

    #[test]
    fn invalid_bracket() {
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::RootFind(_))
        ));
    }

    #[test]
    fn deterministic_bits() {
        let f = |x: f64| (x.sin() * 7.0).exp() / (1.0 + x * x);
        let a = integrate(f, 0.0, 10.0, &spec().with_rel_tol(1e-12)).unwrap();
        let handles: Vec<_> = (0..4)
            .map(|_| std::thread::spawn(move || integrate(f, 0.0, 10.0, &spec().with_rel_tol(1e-12)).unwrap()))
            .collect();
        for h in handles {
            let b = h.join().unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(a.error.to_bits(), b.error.to_bits());
        }
    }
}
