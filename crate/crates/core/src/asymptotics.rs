//! Large-deviation exponents, the critical rate, and the
//! moderate-deviation approximation.

use crate::error::{Error, Result};
use crate::markov::{JointChannelChain, SourceChain};
use crate::measures::{ChainMeasures, Structure};
use crate::optim;
use crate::scalar::Real;
use crate::tilted::{TiltedFamily, Variant, THETA_EDGE, THETA_MIN};

const GRID: usize = 400;
const X_TOL: f64 = 1e-12;
const DISPERSION_FLOOR: f64 = 1e-8;

/// Which structural assumption on the channel the exponent relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Non-hidden channel; uses `H^↓`.
    One,
    /// Strongly non-hidden channel; uses `H^↑`.
    Two,
}

impl Assumption {
    fn variant<T>(self) -> Variant<T> {
        match self {
            Assumption::One => Variant::Down,
            Assumption::Two => Variant::Up,
        }
    }
}

fn family_for<T: Real>(
    family: &TiltedFamily<T>,
    assumption: Assumption,
) -> Result<TiltedFamily<T>> {
    let want = assumption.variant();
    if family.variant() == want {
        Ok(family.clone())
    } else {
        family.with_variant(want)
    }
}

fn maximise<T: Real>(f: impl Fn(T) -> Result<T>, lo: T, hi: T) -> Result<optim::Argmax<T>> {
    let mut err = None;
    let best = optim::grid_then_golden(
        |x| {
            f(x).unwrap_or_else(|e| {
                err.get_or_insert(e);
                T::neg_infinity()
            })
        },
        &optim::linspace(lo, hi, GRID),
        T::tol(X_TOL),
    );
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

/// Achievable exponent: `E_1 = sup_{s∈(0,1)} sR − U↓(s)` or
/// `E_2 = sup_{s∈[0,1/2]} (sR − U↑(s))/(1−s)`.
pub fn exponent_direct<T: Real>(
    family: &TiltedFamily<T>,
    rate: T,
    assumption: Assumption,
) -> Result<T> {
    Ok(exponent_direct_argmax(family, rate, assumption)?.value)
}

/// [`exponent_direct`] together with the maximising `s`.
pub fn exponent_direct_argmax<T: Real>(
    family: &TiltedFamily<T>,
    rate: T,
    assumption: Assumption,
) -> Result<optim::Argmax<T>> {
    let f = family_for(family, assumption)?;
    match assumption {
        Assumption::One => maximise(
            |s| Ok(s * rate - f.value(s)?),
            T::zero(),
            T::one() - T::tol(THETA_EDGE),
        ),
        Assumption::Two => maximise(
            |s| Ok((s * rate - f.value(s)?) / (T::one() - s)),
            T::zero(),
            T::lit(0.5),
        ),
    }
}

fn check_converse_rate<T: Real>(f: &TiltedFamily<T>, rate: T) -> Result<()> {
    let lower = f.slope_at_origin()?;
    let upper = f.order_zero_rate()?;
    if !(rate > lower && rate < upper) {
        return Err(Error::RateOutOfRange {
            rate: rate.as_f64(),
            lower: lower.as_f64(),
            upper: upper.as_f64(),
        });
    }
    Ok(())
}

/// Converse exponent evaluated at `θ(a(R))`: `θ a − U(θ)`.
pub fn exponent_converse<T: Real>(
    family: &TiltedFamily<T>,
    rate: T,
    assumption: Assumption,
) -> Result<T> {
    let f = family_for(family, assumption)?;
    check_converse_rate(&f, rate)?;
    let (a, theta) = f.slope_of_rate(rate)?;
    Ok(theta * a - f.value(theta)?)
}

/// Converse exponent in its supremum form `sup_θ (θR − U(θ))/(1−θ)` over
/// `θ ≤ 1` (assumption 1) or `θ ∈ [0, 1]` (assumption 2).
pub fn exponent_converse_sup<T: Real>(
    family: &TiltedFamily<T>,
    rate: T,
    assumption: Assumption,
) -> Result<T> {
    let f = family_for(family, assumption)?;
    check_converse_rate(&f, rate)?;
    let lo = match assumption {
        Assumption::One => T::lit(THETA_MIN),
        Assumption::Two => T::zero(),
    };
    let hi = T::one() - T::tol(THETA_EDGE);
    Ok(maximise(|t| Ok((t * rate - f.value(t)?) / (T::one() - t)), lo, hi)?.value)
}

/// `R_cr = R(u↑(1/2)) = u↑(1/2)/2 + U↑(1/2)`.
pub fn critical_rate<T: Real>(family: &TiltedFamily<T>) -> Result<T> {
    let f = family_for(family, Assumption::Two)?;
    let half = T::lit(0.5);
    Ok(half * f.slope(half)? + f.value(half)?)
}

/// First- and second-order constants of a source/channel pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSummary<T> {
    /// `log |X|`.
    pub channel_rate: T,
    pub capacity: T,
    pub entropy_rate_source: T,
    pub entropy_rate_channel: T,
    pub dispersion_source: T,
    pub dispersion_channel: T,
    /// `C / H^{W_s}(M)`.
    pub optimal_rate: T,
    /// `[(C/H) V_s + V_c] / H²`.
    pub dispersion: T,
    /// Critical rate at the requested rate ratio; `None` unless the channel
    /// is strongly non-hidden.
    pub critical_rate: Option<T>,
}

impl<T: Real> AsymptoticSummary<T> {
    pub fn new(
        source: &SourceChain<T>,
        channel: &JointChannelChain<T>,
        rate_ratio: T,
    ) -> Result<Self> {
        let s = ChainMeasures::new(source.as_joint())?;
        let c = ChainMeasures::new(channel)?;
        let channel_rate = T::from_count(channel.x_size()).ln();
        let hs = s.entropy_rate()?;
        let hc = c.entropy_rate()?;
        let vs = s.dispersion()?;
        let vc = c.dispersion()?;
        let capacity = channel_rate - hc;
        let optimal_rate = capacity / hs;
        let dispersion = ((capacity / hs) * vs + vc) / (hs * hs);
        let critical_rate = if c.structure() == Structure::NonHidden {
            None
        } else {
            let fam = TiltedFamily::new(source, channel, rate_ratio, Variant::Up)?;
            Some(critical_rate(&fam)?)
        };
        Ok(Self {
            channel_rate,
            capacity,
            entropy_rate_source: hs,
            entropy_rate_channel: hc,
            dispersion_source: vs,
            dispersion_channel: vc,
            optimal_rate,
            dispersion,
            critical_rate,
        })
    }

    fn checked_dispersion(&self) -> Result<T> {
        // below the finite-difference noise floor a dispersion is zero
        if !(self.dispersion > T::tol(DISPERSION_FLOOR)) {
            return Err(Error::DegenerateDispersion(self.dispersion.as_f64()));
        }
        Ok(self.dispersion)
    }
}

/// Coefficient of `n^{1−2t}` in the exponent when the rate approaches the
/// optimal rate as `δ n^{−t}`: `δ² / (2·dispersion)`.
pub fn moderate_deviation<T: Real>(summary: &AsymptoticSummary<T>, delta: T, t: T) -> Result<T> {
    if !(t > T::zero() && t < T::lit(0.5)) {
        return Err(Error::OutOfRange {
            value: t.as_f64(),
            lower: 0.0,
            upper: 0.5,
        });
    }
    if delta < T::zero() {
        return Err(Error::Domain(format!("delta={delta} must be nonnegative")));
    }
    let v = summary.checked_dispersion()?;
    Ok(delta * delta / (T::lit(2.0) * v))
}

/// `E_md(k, n) = n (C/H − k/n)² / (2·dispersion)`.
pub fn md_approx<T: Real>(summary: &AsymptoticSummary<T>, k: u64, n: u64) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("blocklength must be positive".into()));
    }
    let v = summary.checked_dispersion()?;
    let nn = T::from_f64(n as f64).expect("finite");
    let ratio = T::from_f64(k as f64).expect("finite") / nn;
    if !(ratio < summary.optimal_rate) {
        return Err(Error::RateOutOfRange {
            rate: ratio.as_f64(),
            lower: 0.0,
            upper: summary.optimal_rate.as_f64(),
        });
    }
    let gap = summary.optimal_rate - ratio;
    Ok(nn * gap * gap / (T::lit(2.0) * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::StochasticMatrix;
    use approx::assert_abs_diff_eq;

    fn w(p: f64, q: f64) -> StochasticMatrix<f64> {
        StochasticMatrix::binary(p, q).unwrap()
    }

    fn example() -> (SourceChain<f64>, JointChannelChain<f64>, TiltedFamily<f64>) {
        let s = SourceChain::stationary(w(0.1, 0.2)).unwrap();
        let c = JointChannelChain::singleton(w(0.1, 0.2)).unwrap();
        let f = TiltedFamily::new(&s, &c, 0.75, Variant::Up).unwrap();
        (s, c, f)
    }

    #[test]
    fn exponent_at_example_rate() {
        let (_, _, f) = example();
        let e2 = exponent_direct(&f, 2f64.ln(), Assumption::Two).unwrap();
        assert_abs_diff_eq!(e2, 0.000_282_6, epsilon = 1e-6);
        let e1 = exponent_direct(&f, 2f64.ln(), Assumption::One).unwrap();
        assert!(e2 >= e1);
    }

    #[test]
    fn exponent_vanishes_at_first_order_rate() {
        let (_, _, f) = example();
        let r0 = f.slope_at_origin().unwrap();
        assert_abs_diff_eq!(
            exponent_direct(&f, r0, Assumption::One).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            exponent_direct(&f, r0, Assumption::Two).unwrap(),
            0.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn converse_forms_agree_and_dominate() {
        let (_, _, f) = example();
        for r in [0.68, 2f64.ln(), 0.72, 0.8] {
            for a in [Assumption::One, Assumption::Two] {
                let ev = exponent_converse(&f, r, a).unwrap();
                let sup = exponent_converse_sup(&f, r, a).unwrap();
                assert_abs_diff_eq!(ev, sup, epsilon = 1e-7);
                assert!(ev + 1e-12 >= exponent_direct(&f, r, a).unwrap());
            }
        }
    }

    #[test]
    fn below_critical_rate_exponents_coincide() {
        let (_, _, f) = example();
        let rcr = critical_rate(&f).unwrap();
        let r0 = f.slope_at_origin().unwrap();
        let r = r0 + 0.5 * (rcr - r0);
        let e = exponent_direct(&f, r, Assumption::Two).unwrap();
        let ebar = exponent_converse(&f, r, Assumption::Two).unwrap();
        assert_abs_diff_eq!(e, ebar, epsilon = 1e-7);
        // above it the direct optimum sits on s = 1/2
        let above = exponent_direct_argmax(&f, rcr + 0.05, Assumption::Two).unwrap();
        assert_abs_diff_eq!(above.x, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn critical_rate_grows_with_ratio() {
        let (_, _, f) = example();
        let a = critical_rate(&f.with_rate_ratio(0.6).unwrap()).unwrap();
        let b = critical_rate(&f.with_rate_ratio(0.9).unwrap()).unwrap();
        assert!(b > a);
    }

    #[test]
    fn summary_matches_example_scalars() {
        let (s, c, _) = example();
        let sum = AsymptoticSummary::new(&s, &c, 0.75).unwrap();
        assert_abs_diff_eq!(sum.optimal_rate, 0.807_317, epsilon = 1e-5);
        assert_abs_diff_eq!(
            sum.capacity,
            2f64.ln() - sum.entropy_rate_channel,
            epsilon = 0.0
        );
        let md = md_approx(&sum, 750_000, 1_000_000).unwrap() / 1e6;
        assert_abs_diff_eq!(md, 0.000_268_0, epsilon = 1e-6);
        assert!(sum.critical_rate.is_some());
    }

    #[test]
    fn moderate_deviation_edge_cases() {
        let (s, c, _) = example();
        let sum = AsymptoticSummary::new(&s, &c, 0.75).unwrap();
        assert_eq!(moderate_deviation(&sum, 0.0, 0.25).unwrap(), 0.0);
        assert!(moderate_deviation(&sum, 0.1, 0.5).is_err());
        assert!(matches!(
            md_approx(&sum, 900, 1000),
            Err(Error::RateOutOfRange { .. })
        ));
        let flat = SourceChain::stationary(w(0.5, 0.5)).unwrap();
        let flat_c = JointChannelChain::singleton(w(0.5, 0.5)).unwrap();
        let deg = AsymptoticSummary::new(&flat, &flat_c, 1.0).unwrap();
        assert!(matches!(
            md_approx(&deg, 0, 10),
            Err(Error::DegenerateDispersion(_))
        ));
    }

    #[test]
    fn md_coefficient_matches_source_coding_rescaling() {
        // identity channel on two letters: C = log 2, V_c = 0; re-expressing
        // the rate gap in source symbols gives δ'²/(2 V_s)
        let s = SourceChain::stationary(w(0.1, 0.2)).unwrap();
        let c =
            JointChannelChain::new(2, 1, StochasticMatrix::identity(2), vec![0.5, 0.5]).unwrap();
        let sum = AsymptoticSummary::new(&s, &c, 0.75).unwrap();
        let (cap, h, vs) = (sum.capacity, sum.entropy_rate_source, sum.dispersion_source);
        let (dp, t) = (0.3, 0.3);
        let delta = cap / (h * h) * (cap / h).powf(-t) * dp;
        let coeff = moderate_deviation(&sum, delta, t).unwrap();
        let in_k = coeff * (h / cap).powf(1.0 - 2.0 * t);
        assert_abs_diff_eq!(in_k, dp * dp / (2.0 * vs), epsilon = 1e-9);
    }
}
