//! Confidence intervals: test inversion with bracketing + bisection, and the
//! classical t-ratio interval.

use super::eval::TestOutcome;
use crate::error::{Error, Result};
use crate::numeric::std_normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Inversion,
    TRatio,
}

#[derive(Debug, Clone)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    pub truncated_at_boundary: bool,
}

/// Geometric bracket expansion factor.
const EXPAND: f64 = 2.0;
/// Initial bracket step relative to max(1, |center|).
const FIRST_STEP: f64 = 1e-3;
/// Endpoint bisection width relative to max(1, |center|).
const ENDPOINT_TOL: f64 = 1e-6;
/// Give up bracketing beyond this multiple of the scale.
const MAX_RANGE: f64 = 1e6;

/// Confidence interval for a scalar transformed parameter by inverting a
/// level-`alpha` test: the returned interval is the connected acceptance
/// component containing `center`, intersected with the parameter-space
/// `bounds` when given.
pub fn invert_to_interval<F>(
    test_builder: F,
    center: f64,
    level: f64,
    bounds: Option<(f64, f64)>,
) -> Result<ConfidenceInterval>
where
    F: Fn(f64) -> Result<TestOutcome>,
{
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidProbability(level));
    }
    let at_center = test_builder(center)?;
    if at_center.reject {
        let crit = crate::numeric::chi2_quantile(at_center.df, level)?;
        return Err(Error::CenterRejected(at_center.statistic, crit));
    }
    let accepts = |psi0: f64| -> Result<bool> { Ok(!test_builder(psi0)?.reject) };

    let scale = center.abs().max(1.0);
    let (lo_bound, hi_bound) = bounds.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut truncated = false;

    let mut endpoint = |sign: f64| -> Result<f64> {
        let bound = if sign > 0.0 { hi_bound } else { lo_bound };
        let mut inner = center;
        let mut step = FIRST_STEP * scale;
        loop {
            let mut candidate = center + sign * step;
            let mut hit_bound = false;
            if (sign > 0.0 && candidate >= bound) || (sign < 0.0 && candidate <= bound) {
                candidate = bound;
                hit_bound = true;
            }
            if accepts(candidate)? {
                if hit_bound {
                    truncated = true;
                    return Ok(bound);
                }
                inner = candidate;
                step *= EXPAND;
                if step > MAX_RANGE * scale {
                    return Err(Error::NoBracket);
                }
            } else {
                // bisect between the accepted inner point and the rejected candidate
                let (mut acc, mut rej) = (inner, candidate);
                while (acc - rej).abs() > ENDPOINT_TOL * scale {
                    let mid = 0.5 * (acc + rej);
                    if accepts(mid)? {
                        acc = mid;
                    } else {
                        rej = mid;
                    }
                }
                return Ok(0.5 * (acc + rej));
            }
        }
    };

    let upper = endpoint(1.0)?;
    let lower = endpoint(-1.0)?;
    Ok(ConfidenceInterval {
        lower,
        upper,
        level,
        method: CiMethod::Inversion,
        truncated_at_boundary: truncated,
    })
}

/// Classical t-ratio interval: estimate +/- z_{1-alpha/2} se. Deliberately not
/// truncated at parameter-space bounds.
pub fn t_interval(estimate: f64, se: f64, level: f64) -> Result<ConfidenceInterval> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidProbability(level));
    }
    if !(se > 0.0) {
        return Err(Error::NonPositiveSE(se));
    }
    let z = std_normal_quantile(1.0 - (1.0 - level) / 2.0)?;
    Ok(ConfidenceInterval {
        lower: estimate - z * se,
        upper: estimate + z * se,
        level,
        method: CiMethod::TRatio,
        truncated_at_boundary: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::eval::TestOutcome;

    // Quadratic statistic in psi0, as produced by a Gaussian-linear criterion.
    fn quadratic_builder(
        estimate: f64,
        se: f64,
    ) -> impl Fn(f64) -> crate::error::Result<TestOutcome> {
        move |psi0: f64| {
            let stat = ((estimate - psi0) / se).powi(2);
            TestOutcome::from_statistic(stat, 1, 0.05)
        }
    }

    #[test]
    fn inversion_matches_wald_for_quadratic_statistic() {
        let (estimate, se) = (1.3, 0.4);
        let ci = invert_to_interval(quadratic_builder(estimate, se), estimate, 0.95, None).unwrap();
        let z = std_normal_quantile(0.975).unwrap();
        assert!((ci.lower - (estimate - z * se)).abs() < 1e-5, "lower {}", ci.lower);
        assert!((ci.upper - (estimate + z * se)).abs() < 1e-5, "upper {}", ci.upper);
        assert!(!ci.truncated_at_boundary);
    }

    #[test]
    fn inversion_respects_lower_bound() {
        // acceptance region dips below zero, parameter space is [0, inf)
        let ci = invert_to_interval(quadratic_builder(0.2, 0.4), 0.2, 0.95, Some((0.0, f64::INFINITY)))
            .unwrap();
        assert_eq!(ci.lower, 0.0);
        assert!(ci.truncated_at_boundary);
        assert!(ci.upper > 0.2);
    }

    #[test]
    fn center_rejection_is_an_error() {
        // builder that rejects everywhere
        let builder = |_psi0: f64| TestOutcome::from_statistic(100.0, 1, 0.05);
        assert!(matches!(
            invert_to_interval(builder, 0.0, 0.95, None),
            Err(crate::error::Error::CenterRejected(_, _))
        ));
    }

    #[test]
    fn no_bracket_when_never_rejecting() {
        let builder = |_psi0: f64| TestOutcome::from_statistic(0.0, 1, 0.05);
        assert!(matches!(
            invert_to_interval(builder, 0.0, 0.95, None),
            Err(crate::error::Error::NoBracket)
        ));
    }

    #[test]
    fn duality_on_interior_grid() {
        let (estimate, se) = (-0.7, 0.25);
        let builder = quadratic_builder(estimate, se);
        let ci = invert_to_interval(&builder, estimate, 0.95, None).unwrap();
        for i in 0..50 {
            let psi0 = ci.lower + (ci.upper - ci.lower) * (i as f64 + 0.5) / 50.0;
            assert!(!builder(psi0).unwrap().reject, "interior point {psi0} rejected");
        }
        let eps = 1e-4;
        assert!(builder(ci.lower - eps).unwrap().reject);
        assert!(builder(ci.upper + eps).unwrap().reject);
    }

    #[test]
    fn t_interval_standard_normal() {
        let ci = t_interval(0.0, 1.0, 0.95).unwrap();
        assert!((ci.lower + 1.959964).abs() < 1e-5);
        assert!((ci.upper - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn t_interval_rejects_zero_se() {
        assert!(matches!(
            t_interval(1.0, 0.0, 0.95),
            Err(crate::error::Error::NonPositiveSE(_))
        ));
    }
}
