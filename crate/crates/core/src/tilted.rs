//! The tilted family `U(θ) = r·θH^{W_s}_{1-θ}(M) + θH^{W_c,·}_{1-θ}(X|Z)`,
//! its slope `u = U'`, and the monotone inverses `θ(a)`, `R(a)`, `a(R)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::markov::{JointChannelChain, SourceChain};
use crate::measures::{ChainMeasures, CorrectionTerms, Structure};
use crate::optim;
use crate::scalar::Real;

/// Lower end of the searched `θ` range (stands in for `−∞`).
pub const THETA_MIN: f64 = -50.0;
/// Gap below `θ = 1` kept by every search.
pub const THETA_EDGE: f64 = 1e-6;
const SLOPE_STEP: f64 = 1e-3;
const BISECT_TOL: f64 = 1e-14;

/// Which conditional entropy of the channel enters `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant<T> {
    Down,
    Up,
    /// Two-parameter entropy with the second order frozen at `θ'`.
    Fixed(T),
}

/// `U[W_s, W_c, variant; r]` with memoised evaluations.
pub struct TiltedFamily<T> {
    source: ChainMeasures<T>,
    channel: ChainMeasures<T>,
    rate_ratio: T,
    variant: Variant<T>,
    cache: Mutex<HashMap<u64, T>>,
    slope_range: OnceLock<(T, T)>,
    xi_fixed: OnceLock<CorrectionTerms<T>>,
}

impl<T: Real> Clone for TiltedFamily<T> {
    fn clone(&self) -> Self {
        Self::from_parts(
            self.source.clone(),
            self.channel.clone(),
            self.rate_ratio,
            self.variant,
        )
    }
}

impl<T: Real> std::fmt::Debug for TiltedFamily<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TiltedFamily")
            .field("rate_ratio", &self.rate_ratio)
            .field("variant", &self.variant)
            .finish_non_exhaustive()
    }
}

impl<T: Real> TiltedFamily<T> {
    pub fn new(
        source: &SourceChain<T>,
        channel: &JointChannelChain<T>,
        rate_ratio: T,
        variant: Variant<T>,
    ) -> Result<Self> {
        let source = ChainMeasures::new(source.as_joint())?;
        let channel = ChainMeasures::new(channel)?;
        Self::assemble(source, channel, rate_ratio, variant)
    }

    fn assemble(
        source: ChainMeasures<T>,
        channel: ChainMeasures<T>,
        rate_ratio: T,
        variant: Variant<T>,
    ) -> Result<Self> {
        if !(rate_ratio > T::zero()) || !rate_ratio.is_finite() {
            return Err(Error::Domain(format!(
                "rate ratio r={rate_ratio} must be positive"
            )));
        }
        if let Variant::Fixed(tp) = variant {
            if !(tp < T::one()) {
                return Err(Error::Domain(format!("theta'={tp} must be below 1")));
            }
        }
        if variant != Variant::Down && channel.structure() == Structure::NonHidden {
            return Err(Error::AssumptionViolated(
                "the up and fixed variants need a strongly non-hidden channel".into(),
            ));
        }
        Ok(Self::from_parts(source, channel, rate_ratio, variant))
    }

    fn from_parts(
        source: ChainMeasures<T>,
        channel: ChainMeasures<T>,
        rate_ratio: T,
        variant: Variant<T>,
    ) -> Self {
        Self {
            source,
            channel,
            rate_ratio,
            variant,
            cache: Mutex::new(HashMap::new()),
            slope_range: OnceLock::new(),
            xi_fixed: OnceLock::new(),
        }
    }

    /// Same chains, different variant.
    pub fn with_variant(&self, variant: Variant<T>) -> Result<Self> {
        Self::assemble(
            self.source.clone(),
            self.channel.clone(),
            self.rate_ratio,
            variant,
        )
    }

    /// Same chains, different rate ratio.
    pub fn with_rate_ratio(&self, rate_ratio: T) -> Result<Self> {
        Self::assemble(
            self.source.clone(),
            self.channel.clone(),
            rate_ratio,
            self.variant,
        )
    }

    pub fn rate_ratio(&self) -> T {
        self.rate_ratio
    }

    pub fn variant(&self) -> Variant<T> {
        self.variant
    }

    pub fn source(&self) -> &ChainMeasures<T> {
        &self.source
    }

    pub fn channel(&self) -> &ChainMeasures<T> {
        &self.channel
    }

    /// `θ H^{W_s}_{1-θ}(M)`.
    pub fn source_term(&self, theta: T) -> Result<T> {
        self.source.scaled_h_down(theta)
    }

    /// `θ H^{W_c,·}_{1-θ}(X|Z)` for this variant.
    pub fn channel_term(&self, theta: T) -> Result<T> {
        match self.variant {
            Variant::Down => self.channel.scaled_h_down(theta),
            Variant::Up => self.channel.scaled_h_up(theta),
            Variant::Fixed(tp) => self.channel.scaled_h_two_param(theta, tp),
        }
    }

    /// `U(θ)`.
    pub fn value(&self, theta: T) -> Result<T> {
        if theta == T::zero() {
            return Ok(T::zero());
        }
        let key = theta.as_f64().to_bits();
        if let Some(&v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = self.rate_ratio * self.source_term(theta)? + self.channel_term(theta)?;
        self.cache.lock().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    /// `u(θ) = U'(θ)`.
    pub fn slope(&self, theta: T) -> Result<T> {
        if !(theta < T::one()) {
            return Err(Error::Domain(format!("theta={theta} must be below 1")));
        }
        let mut h = T::lit(SLOPE_STEP) * theta.abs().max(T::one());
        // keep the outer stencil point θ + 2h below 1
        h = h.min((T::one() - theta) / T::lit(4.0));
        let mut err = None;
        let d = optim::derivative(
            |t| {
                self.value(t).unwrap_or_else(|e| {
                    err = Some(e);
                    T::nan()
                })
            },
            theta,
            h,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(d),
        }
    }

    fn theta_lo() -> T {
        T::lit(THETA_MIN)
    }

    fn theta_hi() -> T {
        T::one() - T::tol(THETA_EDGE)
    }

    /// `(a̲, ā)`: slopes at the ends of the truncated `θ` range.
    pub fn slope_range(&self) -> Result<(T, T)> {
        if let Some(&r) = self.slope_range.get() {
            return Ok(r);
        }
        let r = (self.slope(Self::theta_lo())?, self.slope(Self::theta_hi())?);
        Ok(*self.slope_range.get_or_init(|| r))
    }

    /// `θ(a)`: the unique `θ` with `u(θ) = a`.
    pub fn theta_of_slope(&self, a: T) -> Result<T> {
        let (lo, hi) = self.slope_range()?;
        if !(a >= lo && a <= hi) {
            return Err(Error::OutOfRange {
                value: a.as_f64(),
                lower: lo.as_f64(),
                upper: hi.as_f64(),
            });
        }
        self.bisect(|t| Ok(self.slope(t)? - a))
    }

    fn bisect(&self, g: impl Fn(T) -> Result<T>) -> Result<T> {
        let mut err = None;
        let t = optim::bisect_increasing(
            |t| match g(t) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    T::zero()
                }
            },
            Self::theta_lo(),
            Self::theta_hi(),
            T::tol(BISECT_TOL),
        );
        match err {
            Some(e) => Err(e),
            None => Ok(t),
        }
    }

    /// `R(a) = (1 − θ(a)) a + U(θ(a))`.
    pub fn rate_of_slope(&self, a: T) -> Result<T> {
        let t = self.theta_of_slope(a)?;
        Ok((T::one() - t) * a + self.value(t)?)
    }

    /// `R` as a function of `θ`: `(1 − θ) u(θ) + U(θ)`, nondecreasing.
    pub fn rate_at(&self, theta: T) -> Result<T> {
        Ok((T::one() - theta) * self.slope(theta)? + self.value(theta)?)
    }

    /// Rates reachable inside the truncated `θ` range.
    pub fn rate_range(&self) -> Result<(T, T)> {
        Ok((
            self.rate_at(Self::theta_lo())?,
            self.rate_at(Self::theta_hi())?,
        ))
    }

    /// `a(R)` together with `θ(a(R))`.
    pub fn slope_of_rate(&self, rate: T) -> Result<(T, T)> {
        let (lo, hi) = self.rate_range()?;
        if !(rate >= lo && rate <= hi) {
            return Err(Error::RateOutOfRange {
                rate: rate.as_f64(),
                lower: lo.as_f64(),
                upper: hi.as_f64(),
            });
        }
        let t = self.bisect(|t| Ok(self.rate_at(t)? - rate))?;
        Ok((self.slope(t)?, t))
    }

    /// `r H^{W_s}(M) + H^{W_c}(X|Z) = u(0)`.
    pub fn slope_at_origin(&self) -> Result<T> {
        self.slope(T::zero())
    }

    /// `r H_0^{W_s}(M) + H_0^{W_c,·}(X|Z)`, the supremum of admissible rates.
    pub fn order_zero_rate(&self) -> Result<T> {
        use crate::measures::Branch;
        let branch = match self.variant {
            Variant::Down => Branch::Down,
            _ => Branch::Up,
        };
        Ok(self.rate_ratio * self.source.h_zero(Branch::Down)? + self.channel.h_zero(branch)?)
    }

    /// `δ̄/δ̲` summed over source and channel.
    pub fn delta_sum(&self, theta: T) -> Result<CorrectionTerms<T>> {
        let a = self.source.delta_bounds(theta)?;
        let b = self.channel.delta_bounds(theta)?;
        Ok(CorrectionTerms {
            lower: a.lower + b.lower,
            upper: a.upper + b.upper,
        })
    }

    /// `ξ̄/ξ̲` summed over source and channel.
    pub fn xi_sum(&self, theta: T) -> Result<CorrectionTerms<T>> {
        let a = self.source.xi_bounds(theta)?;
        let b = self.channel.xi_bounds(theta)?;
        Ok(CorrectionTerms {
            lower: a.lower + b.lower,
            upper: a.upper + b.upper,
        })
    }

    /// Channel `ζ(θ, θ')` for the fixed variant, reusing the cached `ξ(θ')`.
    pub fn channel_zeta(&self, theta: T) -> Result<CorrectionTerms<T>> {
        let Variant::Fixed(tp) = self.variant else {
            return Err(Error::Domain(
                "zeta corrections need the fixed variant".into(),
            ));
        };
        let xi = match self.xi_fixed.get() {
            Some(&x) => x,
            None => {
                let x = self.channel.xi_bounds(tp)?;
                *self.xi_fixed.get_or_init(|| x)
            }
        };
        self.channel.zeta_bounds_with(theta, tp, Some(xi))
    }
}
