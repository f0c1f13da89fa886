//! Diffusion coefficients on [-1, 1] and their degeneracy structure.
//!
//! A coefficient `a` drives the divergence-form operator `u -> (a u_x)_x`.
//! The interesting cases vanish at both endpoints, which makes the equation
//! degenerate there; how fast `a` dies controls two integrability questions
//! that decide which function spaces and boundary behavior apply:
//!
//! * is `1/a` integrable up to the boundary? (if not, the degeneracy is
//!   *strong* and no boundary condition can be imposed at x = +-1);
//! * is the antiderivative `A(x) = integral_0^x ds/a(s)` itself integrable?
//!
//! [`classify_degeneracy`] answers both, analytically for the built-in
//! families and numerically for tabulated data. For power-law coefficients
//! `a = (1-x^2)^gamma` the answers are exact: strong degeneracy holds iff
//! `gamma >= 1`, and `A` stays integrable iff `gamma < 2`.
//!
//! Tabulated coefficients are interpolated linearly between samples. That
//! interpolant is only C^0, not C^1; the solver pipeline tolerates this
//! because it only ever evaluates `a` pointwise at cell faces, but the
//! classifier's verdicts then describe the interpolant's tail trend, not a
//! proof about the underlying function.

use crate::error::{Error, Result};

/// Which analytic family (or table) a coefficient belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    /// `a(x) = 1 - x^2`, the classical latitude-diffusion coefficient.
    Legendre,
    /// `a(x) = (1 - x^2)^gamma` with `gamma > 0`.
    PowerDegenerate { gamma: f64 },
    /// `a(x) = c` with `c > 0`; not degenerate, useful as a reference.
    Constant { value: f64 },
    /// Piecewise-linear interpolant of user samples vanishing at x = +-1.
    Tabulated,
}

/// A positive diffusion coefficient on [-1, 1].
#[derive(Debug, Clone)]
pub struct DiffusionCoefficient {
    kind: CoefficientKind,
    /// Sample abscissae and values; populated only for `Tabulated`.
    table: Vec<(f64, f64)>,
}

/// Degeneracy classification produced by [`classify_degeneracy`].
///
/// The evaluation map for `A` itself lives on the coefficient as
/// [`DiffusionCoefficient::integrated_reciprocal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegeneracyReport {
    /// `1/a` fails to be integrable across (-1, 1).
    pub strongly_degenerate: bool,
    /// `A(x) = integral_0^x ds/a` is integrable across (-1, 1).
    pub a_integrable: bool,
}

/// Absolute tolerance for tabulated endpoint values of `a`.
const TABLE_ENDPOINT_TOL: f64 = 1e-12;

/// Step used for the centered difference that differentiates tables.
const TABLE_DERIVATIVE_STEP: f64 = 1e-6;

impl DiffusionCoefficient {
    /// The latitude-diffusion coefficient `1 - x^2`.
    pub fn legendre() -> Self {
        Self {
            kind: CoefficientKind::Legendre,
            table: Vec::new(),
        }
    }

    /// Power-law coefficient `(1 - x^2)^gamma`; requires `gamma > 0`.
    pub fn power_degenerate(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::BadParameter {
                name: "gamma",
                value: gamma,
                requirement: "must be finite and > 0",
            });
        }
        Ok(Self {
            kind: CoefficientKind::PowerDegenerate { gamma },
            table: Vec::new(),
        })
    }

    /// Constant coefficient `c`; requires `c > 0`.
    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonPositiveInterior { x: 0.0, value });
        }
        Ok(Self {
            kind: CoefficientKind::Constant { value },
            table: Vec::new(),
        })
    }

    /// Builds a tabulated coefficient from `(x, a(x))` samples.
    ///
    /// The samples must be strictly increasing in `x`, span exactly
    /// `[-1, 1]`, be strictly positive in the interior, and vanish at both
    /// endpoints to within `1e-12` (tables describe degenerate
    /// coefficients; use [`DiffusionCoefficient::constant`] otherwise).
    pub fn from_table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::BadTable {
                reason: format!("need at least 3 samples, got {}", points.len()),
            });
        }
        for &(x, a) in &points {
            if !x.is_finite() || !a.is_finite() {
                return Err(Error::BadTable {
                    reason: format!("non-finite sample ({x}, {a})"),
                });
            }
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::BadTable {
                    reason: format!("abscissae not strictly increasing at x = {}", pair[1].0),
                });
            }
        }
        let first = points[0];
        let last = points[points.len() - 1];
        if (first.0 + 1.0).abs() > TABLE_ENDPOINT_TOL || (last.0 - 1.0).abs() > TABLE_ENDPOINT_TOL {
            return Err(Error::BadTable {
                reason: format!("samples span [{}, {}], expected [-1, 1]", first.0, last.0),
            });
        }
        if first.1.abs() > TABLE_ENDPOINT_TOL || last.1.abs() > TABLE_ENDPOINT_TOL {
            return Err(Error::BadTable {
                reason: format!(
                    "a must vanish at the endpoints; got a(-1) = {}, a(1) = {}",
                    first.1, last.1
                ),
            });
        }
        for &(x, a) in &points[1..points.len() - 1] {
            if a <= 0.0 {
                return Err(Error::NonPositiveInterior { x, value: a });
            }
        }
        Ok(Self {
            kind: CoefficientKind::Tabulated,
            table: points,
        })
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    /// True when `a` vanishes at both endpoints.
    pub fn is_degenerate(&self) -> bool {
        !matches!(self.kind, CoefficientKind::Constant { .. })
    }

    /// Evaluates `a(x)` for `x` in [-1, 1].
    pub fn a(&self, x: f64) -> f64 {
        match self.kind {
            CoefficientKind::Legendre => 1.0 - x * x,
            CoefficientKind::PowerDegenerate { gamma } => {
                let base = 1.0 - x * x;
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(gamma)
                }
            }
            CoefficientKind::Constant { value } => value,
            CoefficientKind::Tabulated => self.interpolate(x),
        }
    }

    /// Evaluates `a'(x)` for `x` strictly inside (-1, 1).
    ///
    /// Tables are differentiated by a centered difference of the
    /// interpolant, which recovers segment slopes away from the knots.
    pub fn a_prime(&self, x: f64) -> f64 {
        match self.kind {
            CoefficientKind::Legendre => -2.0 * x,
            CoefficientKind::PowerDegenerate { gamma } => {
                let base = 1.0 - x * x;
                -2.0 * x * gamma * base.powf(gamma - 1.0)
            }
            CoefficientKind::Constant { .. } => 0.0,
            CoefficientKind::Tabulated => {
                let step = TABLE_DERIVATIVE_STEP;
                let lo = (x - step).max(-1.0);
                let hi = (x + step).min(1.0);
                (self.interpolate(hi) - self.interpolate(lo)) / (hi - lo)
            }
        }
    }

    /// Evaluates `A(x) = integral_0^x ds / a(s)` for `x` strictly inside
    /// (-1, 1).
    ///
    /// Closed forms cover the constant and Legendre families; power laws
    /// use adaptive quadrature (the integrand is smooth away from the
    /// endpoints); tables integrate their interpolant segment-exactly.
    pub fn integrated_reciprocal(&self, x: f64) -> f64 {
        match self.kind {
            CoefficientKind::Legendre => x.atanh(),
            CoefficientKind::Constant { value } => x / value,
            CoefficientKind::PowerDegenerate { gamma } => {
                // Odd by symmetry of a; integrating over [0, |x|] keeps the
                // map exactly odd in floating point.
                let magnitude = adaptive_simpson(
                    &|s: f64| (1.0 - s * s).powf(-gamma),
                    0.0,
                    x.abs(),
                    1e-12,
                    40,
                );
                magnitude.copysign(x)
            }
            CoefficientKind::Tabulated => self.table_reciprocal_integral(0.0, x),
        }
    }

    fn interpolate(&self, x: f64) -> f64 {
        let table = &self.table;
        let x = x.clamp(table[0].0, table[table.len() - 1].0);
        let idx = match table.partition_point(|&(xk, _)| xk <= x) {
            0 => 0,
            p if p >= table.len() => table.len() - 2,
            p => p - 1,
        };
        let (x0, a0) = table[idx];
        let (x1, a1) = table[idx + 1];
        let t = (x - x0) / (x1 - x0);
        a0 + t * (a1 - a0)
    }

    /// Integral of `1/interpolant` over `[from, to]` (signed), split
    /// segment by segment so each piece is integrated in closed form.
    fn table_reciprocal_integral(&self, from: f64, to: f64) -> f64 {
        if from == to {
            return 0.0;
        }
        if from > to {
            return -self.table_reciprocal_integral(to, from);
        }
        let mut total = 0.0;
        for pair in self.table.windows(2) {
            let (x0, a0) = pair[0];
            let (x1, a1) = pair[1];
            let lo = from.max(x0);
            let hi = to.min(x1);
            if lo < hi {
                total += reciprocal_of_linear_integral(x0, a0, x1, a1, lo, hi);
            }
        }
        total
    }
}

/// Exact integral of `1 / L(x)` over `[lo, hi]` where `L` interpolates
/// `(x0, a0) -> (x1, a1)` linearly. Assumes `L > 0` on the open segment.
fn reciprocal_of_linear_integral(x0: f64, a0: f64, x1: f64, a1: f64, lo: f64, hi: f64) -> f64 {
    let slope = (a1 - a0) / (x1 - x0);
    let value_lo = a0 + slope * (lo - x0);
    let value_hi = a0 + slope * (hi - x0);
    if slope.abs() * (x1 - x0) <= 1e-14 * a0.abs().max(a1.abs()) {
        // Effectively constant segment.
        let mid = 0.5 * (value_lo + value_hi);
        if mid <= 0.0 {
            return f64::INFINITY;
        }
        return (hi - lo) / mid;
    }
    if value_lo <= 0.0 || value_hi <= 0.0 {
        return f64::INFINITY;
    }
    (value_hi / value_lo).ln() / slope
}

/// Adaptive Simpson quadrature with interval bisection.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, depth)
}

/// Verdict of the geometric tail test used on dyadic window sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TailTrend {
    Convergent,
    Divergent,
    Unresolved,
}

/// Number of dyadic refinement levels probed toward each endpoint.
const TAIL_LEVELS: usize = 40;
/// Resolved levels required before the ratio test is trusted.
const TAIL_MIN_RESOLVED: usize = 4;
/// Ratio window examined for stabilization.
const TAIL_RATIO_WINDOW: usize = 5;
/// Ratios uniformly below this bound give geometric domination of the tail.
const TAIL_CONVERGENT_BELOW: f64 = 0.95;
/// Ratios uniformly at or above this bound rule out a summable tail.
const TAIL_DIVERGENT_ABOVE: f64 = 0.97;

/// Classifies window sums `s_j` over dyadic shells shrinking toward an
/// endpoint.
///
/// Successive ratios `s_{j+1}/s_j` estimate the asymptotic decay rate.
/// Monotone drift brackets that rate: ratios falling to a value below
/// [`TAIL_CONVERGENT_BELOW`] certify geometric domination (convergent),
/// ratios rising to a value at or above [`TAIL_DIVERGENT_ABOVE`] certify
/// that the shell sums stop decaying (divergent). Without a monotone
/// trend the whole window must sit on one side of the decision band;
/// sequences that straddle it are unresolved.
fn classify_tail(sums: &[f64]) -> TailTrend {
    if sums.len() < TAIL_MIN_RESOLVED + 1 {
        return TailTrend::Unresolved;
    }
    if sums.iter().any(|s| !s.is_finite()) {
        return TailTrend::Divergent;
    }
    let ratios: Vec<f64> = sums
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.len() < TAIL_MIN_RESOLVED {
        return TailTrend::Unresolved;
    }
    let tail = &ratios[ratios.len().saturating_sub(TAIL_RATIO_WINDOW)..];
    // Slow monotone drift is the normal finite-resolution picture: ratios
    // rising toward their limit bound it from below, falling ratios bound
    // it from above. The drift tolerance absorbs shell-quadrature noise.
    let drift_tol = 1e-3;
    let increasing = tail.windows(2).all(|w| w[1] >= w[0] - drift_tol);
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0] + drift_tol);
    let last = *tail.last().expect("tail window is nonempty");
    if decreasing && last < TAIL_CONVERGENT_BELOW {
        TailTrend::Convergent
    } else if increasing && last >= TAIL_DIVERGENT_ABOVE {
        TailTrend::Divergent
    } else if tail.iter().all(|r| *r < TAIL_CONVERGENT_BELOW) {
        TailTrend::Convergent
    } else if tail.iter().all(|r| *r >= TAIL_DIVERGENT_ABOVE) {
        TailTrend::Divergent
    } else {
        TailTrend::Unresolved
    }
}

/// Decides strong degeneracy and integrability of `A`.
///
/// Analytic kinds classify by rule (power laws: strongly degenerate iff
/// `gamma >= 1`, `A` integrable iff `gamma < 2`). Tabulated kinds probe
/// dyadic shells toward each endpoint with segment-exact quadrature and
/// extrapolate the shell-sum trend; tables too coarse or too erratic near
/// an endpoint fail with [`Error::InconclusiveIntegrability`].
pub fn classify_degeneracy(coeff: &DiffusionCoefficient) -> Result<DegeneracyReport> {
    match coeff.kind {
        CoefficientKind::Legendre => Ok(DegeneracyReport {
            strongly_degenerate: true,
            a_integrable: true,
        }),
        CoefficientKind::Constant { .. } => Ok(DegeneracyReport {
            strongly_degenerate: false,
            a_integrable: true,
        }),
        CoefficientKind::PowerDegenerate { gamma } => Ok(DegeneracyReport {
            strongly_degenerate: gamma >= 1.0,
            a_integrable: gamma < 2.0,
        }),
        CoefficientKind::Tabulated => classify_table(coeff),
    }
}

fn classify_table(coeff: &DiffusionCoefficient) -> Result<DegeneracyReport> {
    let mut strongly = false;
    let mut a_integrable = true;
    for right_end in [false, true] {
        let recip = tail_shell_sums(coeff, right_end, ShellIntegrand::Reciprocal);
        match classify_tail(&recip) {
            TailTrend::Divergent => strongly = true,
            TailTrend::Convergent => {}
            TailTrend::Unresolved => {
                return Err(Error::InconclusiveIntegrability {
                    detail: format!(
                        "1/a shell sums near x = {} did not stabilize",
                        if right_end { 1.0 } else { -1.0 }
                    ),
                });
            }
        }
        let abs_a = tail_shell_sums(coeff, right_end, ShellIntegrand::AbsAntiderivative);
        match classify_tail(&abs_a) {
            TailTrend::Divergent => a_integrable = false,
            TailTrend::Convergent => {}
            TailTrend::Unresolved => {
                return Err(Error::InconclusiveIntegrability {
                    detail: format!(
                        "|A| shell sums near x = {} did not stabilize",
                        if right_end { 1.0 } else { -1.0 }
                    ),
                });
            }
        }
    }
    Ok(DegeneracyReport {
        strongly_degenerate: strongly,
        a_integrable,
    })
}

enum ShellIntegrand {
    Reciprocal,
    AbsAntiderivative,
}

/// Integrals over dyadic shells `[1 - 2^-j, 1 - 2^-(j+1)]` (mirrored for
/// the left endpoint), kept only while each shell still contains at least
/// two table knots so the sums reflect data rather than one interpolation
/// segment.
fn tail_shell_sums(
    coeff: &DiffusionCoefficient,
    right_end: bool,
    integrand: ShellIntegrand,
) -> Vec<f64> {
    let mut sums = Vec::new();
    for level in 0..TAIL_LEVELS {
        let outer = 1.0 - 0.5f64.powi(level as i32);
        let inner = 1.0 - 0.5f64.powi(level as i32 + 1);
        let (lo, hi) = if right_end {
            (outer, inner)
        } else {
            (-inner, -outer)
        };
        let knots_inside = coeff
            .table
            .iter()
            .filter(|&&(x, _)| x > lo && x < hi)
            .count();
        if knots_inside < 2 {
            break;
        }
        let value = match integrand {
            ShellIntegrand::Reciprocal => coeff.table_reciprocal_integral(lo, hi),
            ShellIntegrand::AbsAntiderivative => abs_antiderivative_integral(coeff, lo, hi),
        };
        sums.push(value);
        if !value.is_finite() {
            break;
        }
    }
    sums
}

/// Simpson quadrature of `|A|` over `[lo, hi]`, refined over the table
/// segments intersecting the window; `A` is smooth within each segment.
/// `A` is advanced incrementally from `A(lo)` instead of re-integrating
/// from zero for every evaluation point.
fn abs_antiderivative_integral(coeff: &DiffusionCoefficient, lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    let mut position = lo;
    let mut a_value = coeff.table_reciprocal_integral(0.0, lo);
    for pair in coeff.table.windows(2) {
        let (x0, _) = pair[0];
        let (x1, _) = pair[1];
        let a = lo.max(x0);
        let b = hi.min(x1);
        if a >= b {
            continue;
        }
        debug_assert_eq!(position, a, "segments visited out of order");
        let m = 0.5 * (a + b);
        let f_a = a_value;
        let f_m = f_a + coeff.table_reciprocal_integral(a, m);
        let f_b = f_m + coeff.table_reciprocal_integral(m, b);
        total += (b - a) / 6.0 * (f_a.abs() + 4.0 * f_m.abs() + f_b.abs());
        position = b;
        a_value = f_b;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn legendre_table(n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|k| {
                let x = -1.0 + 2.0 * k as f64 / n as f64;
                (x, 1.0 - x * x)
            })
            .collect()
    }

    #[test]
    fn legendre_pointwise_values() {
        let a = DiffusionCoefficient::legendre();
        assert_eq!(a.a(0.0), 1.0);
        assert_eq!(a.a(1.0), 0.0);
        assert_eq!(a.a(-1.0), 0.0);
        assert_eq!(a.a_prime(0.0), 0.0);
        assert_eq!(a.a_prime(0.5), -1.0);
    }

    #[test]
    fn power_law_pointwise_values() {
        let a = DiffusionCoefficient::power_degenerate(1.5).unwrap();
        // 0.64^1.5 = 0.8^3 exactly.
        assert_relative_eq!(a.a(0.6), 0.512, max_relative = 1e-15);
        assert_eq!(a.a(1.0), 0.0);
        assert_eq!(a.a(-1.0), 0.0);
    }

    #[test]
    fn constant_antiderivative_is_linear() {
        let a = DiffusionCoefficient::constant(2.0).unwrap();
        assert_eq!(a.integrated_reciprocal(0.5), 0.25);
        assert_eq!(a.a_prime(0.3), 0.0);
    }

    #[test]
    fn legendre_antiderivative_matches_atanh() {
        let a = DiffusionCoefficient::legendre();
        // atanh(1/2) = ln(3)/2.
        assert_relative_eq!(
            a.integrated_reciprocal(0.5),
            0.5 * 3.0f64.ln(),
            max_relative = 1e-15
        );
        assert_eq!(a.integrated_reciprocal(-0.5), -a.integrated_reciprocal(0.5));
    }

    #[test]
    fn power_antiderivative_is_odd_and_matches_quadrature_oracle() {
        let a = DiffusionCoefficient::power_degenerate(1.5).unwrap();
        let value = a.integrated_reciprocal(0.7);
        assert_eq!(a.integrated_reciprocal(-0.7), -value);
        // Composite Simpson on 10^5 panels as an independent check.
        let n = 100_000;
        let h = 0.7 / n as f64;
        let f = |s: f64| (1.0 - s * s).powf(-1.5);
        let mut acc = f(0.0) + f(0.7);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(k as f64 * h);
        }
        let oracle = acc * h / 3.0;
        assert_relative_eq!(value, oracle, max_relative = 1e-10);
    }

    #[test]
    fn classification_rules_are_exact_for_power_laws() {
        let cases = [
            (0.5, false, true),
            (1.0, true, true),
            (1.5, true, true),
            (1.99, true, true),
            (2.0, true, false),
            (3.0, true, false),
        ];
        for (gamma, strong, integrable) in cases {
            let coeff = DiffusionCoefficient::power_degenerate(gamma).unwrap();
            let report = classify_degeneracy(&coeff).unwrap();
            assert_eq!(report.strongly_degenerate, strong, "gamma = {gamma}");
            assert_eq!(report.a_integrable, integrable, "gamma = {gamma}");
        }
    }

    #[test]
    fn legendre_and_constant_classification() {
        let legendre = classify_degeneracy(&DiffusionCoefficient::legendre()).unwrap();
        assert!(legendre.strongly_degenerate);
        assert!(legendre.a_integrable);

        let constant = classify_degeneracy(&DiffusionCoefficient::constant(1.0).unwrap()).unwrap();
        assert!(!constant.strongly_degenerate);
        assert!(constant.a_integrable);
    }

    #[test]
    fn tabulated_legendre_classifies_like_legendre() {
        let coeff = DiffusionCoefficient::from_table(legendre_table(2000)).unwrap();
        let report = classify_degeneracy(&coeff).unwrap();
        assert!(report.strongly_degenerate);
        assert!(report.a_integrable);
    }

    #[test]
    fn tabulated_quadratic_touchdown_loses_a_integrability() {
        let table: Vec<(f64, f64)> = (0..=2000)
            .map(|k| {
                let x = -1.0 + 2.0 * k as f64 / 2000.0;
                let base = 1.0 - x * x;
                (x, base * base)
            })
            .collect();
        let coeff = DiffusionCoefficient::from_table(table).unwrap();
        let report = classify_degeneracy(&coeff).unwrap();
        assert!(report.strongly_degenerate);
        assert!(!report.a_integrable);
    }

    #[test]
    fn tabulated_square_root_touchdown_is_weakly_degenerate() {
        let table: Vec<(f64, f64)> = (0..=4000)
            .map(|k| {
                let x = -1.0 + 2.0 * k as f64 / 4000.0;
                (x, (1.0 - x * x).sqrt())
            })
            .collect();
        let coeff = DiffusionCoefficient::from_table(table).unwrap();
        let report = classify_degeneracy(&coeff).unwrap();
        assert!(!report.strongly_degenerate);
        assert!(report.a_integrable);
    }

    #[test]
    fn tabulated_antiderivative_tracks_atanh() {
        let coeff = DiffusionCoefficient::from_table(legendre_table(4000)).unwrap();
        for x in [0.2, 0.5, 0.8] {
            assert_relative_eq!(
                coeff.integrated_reciprocal(x),
                x.atanh(),
                max_relative = 1e-5
            );
        }
    }

    #[test]
    fn coarse_table_is_inconclusive() {
        let coeff = DiffusionCoefficient::from_table(legendre_table(4)).unwrap();
        match classify_degeneracy(&coeff) {
            Err(Error::InconclusiveIntegrability { .. }) => {}
            other => panic!("expected inconclusive classification, got {other:?}"),
        }
    }

    #[test]
    fn erratic_table_is_inconclusive() {
        // Scale alternating dyadic shells near the right endpoint so the
        // shell sums of 1/a seesaw instead of settling.
        let table: Vec<(f64, f64)> = (0..=4096)
            .map(|k| {
                let x = -1.0 + 2.0 * k as f64 / 4096.0;
                let mut a = 1.0 - x * x;
                if x > 0.0 && x < 1.0 {
                    let shell = (-(1.0 - x).log2()).floor() as i64;
                    if shell % 2 == 1 {
                        a *= 0.01;
                    }
                }
                (x, a)
            })
            .collect();
        let coeff = DiffusionCoefficient::from_table(table).unwrap();
        match classify_degeneracy(&coeff) {
            Err(Error::InconclusiveIntegrability { .. }) => {}
            other => panic!("expected inconclusive classification, got {other:?}"),
        }
    }

    #[test]
    fn tail_classifier_branches() {
        let geometric: Vec<f64> = (0..10).map(|j| 0.5f64.powi(j)).collect();
        assert_eq!(classify_tail(&geometric), TailTrend::Convergent);

        let flat = vec![0.3; 10];
        assert_eq!(classify_tail(&flat), TailTrend::Divergent);

        let growing: Vec<f64> = (0..10).map(|j| 2.0f64.powi(j)).collect();
        assert_eq!(classify_tail(&growing), TailTrend::Divergent);

        let erratic = vec![1.0, 0.1, 1.0, 0.1, 1.0, 0.1, 1.0];
        assert_eq!(classify_tail(&erratic), TailTrend::Unresolved);

        assert_eq!(classify_tail(&[1.0, 0.5]), TailTrend::Unresolved);

        // Ratios drifting up through the decision band toward 1, as a
        // logarithmically divergent tail produces at finite resolution.
        let sums_from_ratios = |ratios: &[f64]| {
            let mut sums = vec![1.0f64];
            for r in ratios {
                sums.push(sums.last().unwrap() * r);
            }
            sums
        };
        let rising = sums_from_ratios(&[0.93, 0.94, 0.95, 0.96, 0.972, 0.981]);
        assert_eq!(classify_tail(&rising), TailTrend::Divergent);

        // Ratios drifting down below the band certify geometric decay.
        let falling = sums_from_ratios(&[0.97, 0.9, 0.8, 0.7, 0.6, 0.55]);
        assert_eq!(classify_tail(&falling), TailTrend::Convergent);

        // Rising drift that stalls inside the band stays unresolved.
        let stalled = sums_from_ratios(&[0.9, 0.92, 0.94, 0.95, 0.955, 0.96]);
        assert_eq!(classify_tail(&stalled), TailTrend::Unresolved);
    }

    #[test]
    fn constructor_contracts() {
        assert!(matches!(
            DiffusionCoefficient::constant(0.0),
            Err(Error::NonPositiveInterior { .. })
        ));
        assert!(matches!(
            DiffusionCoefficient::constant(-1.0),
            Err(Error::NonPositiveInterior { .. })
        ));
        assert!(matches!(
            DiffusionCoefficient::power_degenerate(0.0),
            Err(Error::BadParameter { .. })
        ));
        assert!(matches!(
            DiffusionCoefficient::power_degenerate(f64::NAN),
            Err(Error::BadParameter { .. })
        ));
    }

    #[test]
    fn table_contracts() {
        // Unordered abscissae.
        let unordered = vec![(-1.0, 0.0), (0.5, 1.0), (0.0, 1.0), (1.0, 0.0)];
        assert!(matches!(
            DiffusionCoefficient::from_table(unordered),
            Err(Error::BadTable { .. })
        ));
        // Wrong range.
        let wrong_range = vec![(-0.5, 0.0), (0.0, 1.0), (0.5, 0.0)];
        assert!(matches!(
            DiffusionCoefficient::from_table(wrong_range),
            Err(Error::BadTable { .. })
        ));
        // Nonvanishing endpoints.
        let nonvanishing = vec![(-1.0, 1.0), (0.0, 1.0), (1.0, 1.0)];
        assert!(matches!(
            DiffusionCoefficient::from_table(nonvanishing),
            Err(Error::BadTable { .. })
        ));
        // Nonpositive interior sample.
        let nonpositive = vec![(-1.0, 0.0), (0.0, -0.25), (1.0, 0.0)];
        assert!(matches!(
            DiffusionCoefficient::from_table(nonpositive),
            Err(Error::NonPositiveInterior { .. })
        ));
    }

    #[test]
    fn table_interpolation_hits_knots_and_midpoints() {
        let coeff =
            DiffusionCoefficient::from_table(vec![(-1.0, 0.0), (0.0, 2.0), (1.0, 0.0)]).unwrap();
        assert_eq!(coeff.a(0.0), 2.0);
        assert_eq!(coeff.a(-0.5), 1.0);
        assert_eq!(coeff.a(0.5), 1.0);
        assert_relative_eq!(coeff.a_prime(0.5), -2.0, max_relative = 1e-9);
    }
}
