//! Globally adaptive Gauss-Kronrod (10/21) quadrature on finite intervals.
//!
//! Integrands may be vector valued; every component shares the same nodes so
//! one expensive evaluation (a bath kernel, say) feeds all components. The
//! initial partition is supplied by the caller as a list of breakpoints,
//! which is how oscillatory integrands get split at their half periods.

use std::fmt;

use thiserror::Error;

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
    0.123_491_976_262_065_851_077_208_167_298_880,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule for the adaptive driver.
///
/// A component converges once its summed error estimate is below
/// `max(abs, rel * |integral|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecEstimate {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadFailure {
    SubdivisionLimit,
    Roundoff,
    NonFinite,
}

impl fmt::Display for QuadFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadFailure::SubdivisionLimit => f.write_str("subdivision limit reached"),
            QuadFailure::Roundoff => f.write_str("roundoff prevents the requested accuracy"),
            QuadFailure::NonFinite => f.write_str("integrand is not finite"),
        }
    }
}

/// Non-convergence, carrying the best estimate and the error actually achieved
/// for the worst component.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{reason} (estimate {value:e}, achieved error {error:e}, requested {requested:e})")]
pub struct QuadError {
    pub reason: QuadFailure,
    pub value: f64,
    pub error: f64,
    pub requested: f64,
}

struct Segment {
    a: f64,
    b: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
    splittable: bool,
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn kronrod_segment<F>(f: &mut F, dim: usize, a: f64, b: f64, scratch: &mut [Vec<f64>]) -> Segment
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    // scratch[0] = f(center), scratch[2j+1], scratch[2j+2] = f(center -+ half*XGK[j])
    f(center, &mut scratch[0]);
    for j in 0..10 {
        let dx = half * XGK[j];
        let (lo, hi) = scratch.split_at_mut(2 * j + 2);
        f(center - dx, &mut lo[2 * j + 1]);
        f(center + dx, &mut hi[0]);
    }

    let mut values = vec![0.0; dim];
    let mut errors = vec![0.0; dim];
    for c in 0..dim {
        let fc = scratch[0][c];
        let mut resk = WGK[10] * fc;
        let mut resg = 0.0;
        let mut resabs = (WGK[10] * fc).abs();
        for j in 0..10 {
            let f1 = scratch[2 * j + 1][c];
            let f2 = scratch[2 * j + 2][c];
            resk += WGK[j] * (f1 + f2);
            resabs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * resk;
        let mut resasc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((scratch[2 * j + 1][c] - mean).abs() + (scratch[2 * j + 2][c] - mean).abs());
        }
        values[c] = resk * half;
        errors[c] = rescale_error((resk - resg) * half, resabs * half.abs(), resasc * half.abs());
    }
    let splittable = (b - a).abs() > 1e3 * f64::EPSILON * center.abs().max(f64::MIN_POSITIVE);
    Segment {
        a,
        b,
        values,
        errors,
        splittable,
    }
}

/// Integrate a vector-valued function over the partition given by `breaks`
/// (sorted, at least two points).
pub fn integrate_vec<F>(mut f: F, dim: usize, breaks: &[f64], tol: Tolerance) -> Result<VecEstimate, QuadError>
where
    F: FnMut(f64, &mut [f64]),
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut scratch = vec![vec![0.0; dim]; 21];
    let mut segments: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod_segment(&mut f, dim, w[0], w[1], &mut scratch))
        .collect();

    loop {
        let mut values = vec![0.0; dim];
        let mut errors = vec![0.0; dim];
        for s in &segments {
            for c in 0..dim {
                values[c] += s.values[c];
                errors[c] += s.errors[c];
            }
        }

        if let Some(c) = (0..dim).find(|&c| !values[c].is_finite() || !errors[c].is_finite()) {
            return Err(QuadError {
                reason: QuadFailure::NonFinite,
                value: values[c],
                error: errors[c],
                requested: tol.target(values[c]),
            });
        }

        let targets: Vec<f64> = values.iter().map(|&v| tol.target(v)).collect();
        let worst = (0..dim).max_by(|&x, &y| {
            (errors[x] / targets[x])
                .partial_cmp(&(errors[y] / targets[y]))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let converged = (0..dim).all(|c| errors[c] <= targets[c]);
        if converged || dim == 0 {
            return Ok(VecEstimate { values, errors });
        }
        let worst = worst.unwrap_or(0);
        let fail = |reason| QuadError {
            reason,
            value: values[worst],
            error: errors[worst],
            requested: targets[worst],
        };
        if segments.len() >= tol.max_intervals {
            return Err(fail(QuadFailure::SubdivisionLimit));
        }

        let weight = |s: &Segment| (0..dim).map(|c| s.errors[c] / targets[c]).fold(0.0_f64, f64::max);
        let pick = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.splittable)
            .max_by(|(_, x), (_, y)| weight(x).partial_cmp(&weight(y)).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i);
        let Some(idx) = pick else {
            return Err(fail(QuadFailure::Roundoff));
        };

        let seg = segments.swap_remove(idx);
        let mid = 0.5 * (seg.a + seg.b);
        let left = kronrod_segment(&mut f, dim, seg.a, mid, &mut scratch);
        let right = kronrod_segment(&mut f, dim, mid, seg.b, &mut scratch);
        segments.push(left);
        segments.push(right);
    }
}

/// Scalar integration over a partition.
pub fn integrate_with_breaks<F>(mut f: F, breaks: &[f64], tol: Tolerance) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> f64,
{
    let est = integrate_vec(|x, out: &mut [f64]| out[0] = f(x), 1, breaks, tol)?;
    Ok(Estimate {
        value: est.values[0],
        error: est.errors[0],
    })
}

/// Scalar integration over `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate, QuadError>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_breaks(f, &[a, b], tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, Tolerance::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((est.value - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_with_breaks() {
        let t = 200.0;
        let breaks: Vec<f64> = (0..=400).map(|k| k as f64 * std::f64::consts::PI / t).collect();
        let b = *breaks.last().unwrap();
        let est = integrate_with_breaks(|x| (t * x).sin() * (-x).exp(), &breaks, Tolerance::new(1e-14, 1e-12)).unwrap();
        // closed form of the damped sine on [0, b]
        let exact = (t - (-b).exp() * ((t * b).sin() + t * (t * b).cos())) / (1.0 + t * t);
        assert!((est.value - exact).abs() < 1e-12, "{} vs {}", est.value, exact);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        let est = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn vector_components_share_nodes() {
        let mut calls = 0;
        let est = integrate_vec(
            |x, out: &mut [f64]| {
                calls += 1;
                out[0] = x.exp();
                out[1] = x.cos();
            },
            2,
            &[0.0, 1.0],
            Tolerance::default(),
        )
        .unwrap();
        assert!((est.values[0] - (1f64.exp() - 1.0)).abs() < 1e-13);
        assert!((est.values[1] - 1f64.sin()).abs() < 1e-13);
        assert_eq!(calls, 21);
    }

    #[test]
    fn reports_failure_with_estimate() {
        let mut tol = Tolerance::new(1e-14, 1e-14);
        tol.max_intervals = 4;
        let err = integrate(|x| (1.0 / x).sin(), 1e-6, 1.0, tol).unwrap_err();
        assert_eq!(err.reason, QuadFailure::SubdivisionLimit);
        assert!(err.error > err.requested);
        assert!(err.value.is_finite());
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let err = integrate(|x| 1.0 / (x - 0.5), 0.0, 1.0, Tolerance::default());
        // the midpoint node hits the pole exactly
        assert_eq!(err.unwrap_err().reason, QuadFailure::NonFinite);
    }
}
