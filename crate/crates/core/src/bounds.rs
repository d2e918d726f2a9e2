//! Finite-length bounds on `log P_j(k, n)`: direct (upper) bounds from the
//! Gallager-type single-shot lemmas and converse (lower) bounds from the
//! Rényi-divergence lemma, each under the non-hidden (A1) and strongly
//! non-hidden (A2) channel assumptions.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::asymptotics::Assumption;
use crate::error::{Error, Result};
use crate::markov::{JointChannelChain, SourceChain};
use crate::optim;
use crate::scalar::Real;
use crate::tilted::{TiltedFamily, Variant, THETA_EDGE};

pub const DEFAULT_GRID_DENSITY: usize = 60;
const S_MIN: f64 = 1e-5;
const S_MAX: f64 = 10.0;
const RHO_GAP: f64 = 1e-6;
const DOMAIN_GAP: f64 = 1e-9;
const SWEEPS: usize = 3;
const X_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    DirectA1,
    ConverseA1,
    DirectA2,
    ConverseA2,
}

impl BoundKind {
    pub const ALL: [BoundKind; 4] = [
        BoundKind::DirectA1,
        BoundKind::ConverseA1,
        BoundKind::DirectA2,
        BoundKind::ConverseA2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::DirectA1 => "direct_a1",
            BoundKind::ConverseA1 => "converse_a1",
            BoundKind::DirectA2 => "direct_a2",
            BoundKind::ConverseA2 => "converse_a2",
        }
    }

    pub fn is_direct(self) -> bool {
        matches!(self, BoundKind::DirectA1 | BoundKind::DirectA2)
    }
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown bound kind `{s}`")))
    }
}

/// Bound on the natural-log error probability; vacuous bounds carry no
/// information (a direct bound `≥ 0`, or a converse with no admissible
/// optimiser point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue<T> {
    Finite(T),
    Vacuous,
}

impl<T: Copy> BoundValue<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Vacuous => None,
        }
    }

    pub fn is_vacuous(self) -> bool {
        matches!(self, BoundValue::Vacuous)
    }
}

/// Optimiser location; `rho` is present for converse bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness<T> {
    pub s: T,
    pub rho: Option<T>,
    /// Objective at `(s, rho)`, before the vacuity test.
    pub objective: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult<T> {
    pub kind: BoundKind,
    pub k: u64,
    pub n: u64,
    pub value: BoundValue<T>,
    pub witness: Option<Witness<T>>,
}

/// A `(k, n)` pair with the tilted families at `r = (k−1)/(n−1)` and
/// `R = log |X|`.
#[derive(Debug, Clone)]
pub struct BoundQuery<T: Real> {
    k: u64,
    n: u64,
    rate: T,
    down: TiltedFamily<T>,
    grid: usize,
}

impl<T: Real> BoundQuery<T> {
    pub fn new(
        source: &SourceChain<T>,
        channel: &JointChannelChain<T>,
        k: u64,
        n: u64,
    ) -> Result<Self> {
        if k < 2 || n < 2 {
            return Err(Error::Domain(format!(
                "need k >= 2 and n >= 2, got k={k}, n={n}"
            )));
        }
        let r = T::from_f64((k - 1) as f64 / (n - 1) as f64).expect("finite");
        let down = TiltedFamily::new(source, channel, r, Variant::Down)?;
        Ok(Self {
            k,
            n,
            rate: T::from_count(channel.x_size()).ln(),
            down,
            grid: DEFAULT_GRID_DENSITY,
        })
    }

    /// Number of grid points per optimisation coordinate.
    pub fn with_grid_density(mut self, grid: usize) -> Self {
        self.grid = grid.max(3);
        self
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn family(&self) -> &TiltedFamily<T> {
        &self.down
    }

    fn n_minus_one(&self) -> T {
        T::from_f64((self.n - 1) as f64).expect("finite")
    }

    fn n_t(&self) -> T {
        T::from_f64(self.n as f64).expect("finite")
    }

    fn up(&self) -> Result<TiltedFamily<T>> {
        self.down.with_variant(Variant::Up)
    }

    /// `−nsR + (n−1)U↓(s) + δ̄_s(s) + δ̄_c(s)`.
    pub fn direct_a1_objective(&self, s: T) -> Result<T> {
        self.direct_a1_with(&self.down, s)
    }

    fn direct_a1_with(&self, f: &TiltedFamily<T>, s: T) -> Result<T> {
        Ok(-self.n_t() * s * self.rate + self.n_minus_one() * f.value(s)? + f.delta_sum(s)?.upper)
    }

    /// `[−nsR + (n−1)U↑(s)]/(1−s) + ξ̄_s(s) + ξ̄_c(s)`.
    pub fn direct_a2_objective(&self, s: T) -> Result<T> {
        self.direct_a2_with(&self.up()?, s)
    }

    fn direct_a2_with(&self, f: &TiltedFamily<T>, s: T) -> Result<T> {
        let main = -self.n_t() * s * self.rate + self.n_minus_one() * f.value(s)?;
        Ok(main / (T::one() - s) + f.xi_sum(s)?.upper)
    }

    fn minimise(
        &self,
        kind: BoundKind,
        f: impl Fn(T) -> Result<T>,
        hi: T,
    ) -> Result<BoundResult<T>> {
        let grid = optim::linspace(T::zero(), hi, self.grid);
        let mut err = None;
        let best = optim::grid_then_golden(
            |s| match f(s) {
                Ok(v) => -v,
                Err(e) => {
                    err.get_or_insert(e);
                    T::neg_infinity()
                }
            },
            &grid,
            T::tol(X_TOL),
        );
        if let Some(e) = err {
            return Err(e);
        }
        let objective = -best.value;
        let value = if objective < T::zero() {
            BoundValue::Finite(objective)
        } else {
            BoundValue::Vacuous
        };
        Ok(BoundResult {
            kind,
            k: self.k,
            n: self.n,
            value,
            witness: Some(Witness {
                s: best.x,
                rho: None,
                objective,
            }),
        })
    }

    pub fn direct_a1(&self) -> Result<BoundResult<T>> {
        self.minimise(
            BoundKind::DirectA1,
            |s| self.direct_a1_with(&self.down, s),
            T::one() - T::tol(THETA_EDGE),
        )
    }

    pub fn direct_a2(&self) -> Result<BoundResult<T>> {
        let up = self.up()?;
        self.minimise(
            BoundKind::DirectA2,
            |s| self.direct_a2_with(&up, s),
            T::lit(0.5),
        )
    }

    /// Converse objective in `(s, ρ)` for the given assumption.
    pub fn converse_objective(&self, assumption: Assumption) -> Result<ConverseObjective<'_, T>> {
        ConverseObjective::new(self, assumption)
    }

    pub fn converse_a1(&self) -> Result<BoundResult<T>> {
        self.converse_objective(Assumption::One)?.optimise()
    }

    pub fn converse_a2(&self) -> Result<BoundResult<T>> {
        self.converse_objective(Assumption::Two)?.optimise()
    }

    pub fn evaluate(&self, kind: BoundKind) -> Result<BoundResult<T>> {
        match kind {
            BoundKind::DirectA1 => self.direct_a1(),
            BoundKind::ConverseA1 => self.converse_a1(),
            BoundKind::DirectA2 => self.direct_a2(),
            BoundKind::ConverseA2 => self.converse_a2(),
        }
    }

    /// Re-evaluates the bound expression at a result's witness.
    pub fn reevaluate(&self, result: &BoundResult<T>) -> Result<Option<T>> {
        let Some(w) = result.witness else {
            return Ok(None);
        };
        match result.kind {
            BoundKind::DirectA1 => self.direct_a1_objective(w.s).map(Some),
            BoundKind::DirectA2 => self.direct_a2_objective(w.s).map(Some),
            BoundKind::ConverseA1 | BoundKind::ConverseA2 => {
                let a = if result.kind == BoundKind::ConverseA1 {
                    Assumption::One
                } else {
                    Assumption::Two
                };
                let rho = w
                    .rho
                    .ok_or_else(|| Error::Domain("converse witness lacks rho".into()))?;
                self.converse_objective(a)?.eval(w.s, rho)
            }
        }
    }
}

/// The converse expression with `a(R)`, `θ(a(R))` and the anchor terms at
/// `θ(a(R))` precomputed.
#[derive(Debug)]
pub struct ConverseObjective<'a, T: Real> {
    query: &'a BoundQuery<T>,
    assumption: Assumption,
    slope: T,
    theta_a: T,
    /// `U↓` (A1) or `U_{θ(a(R))}` (A2).
    family: TiltedFamily<T>,
    /// `U(θ(a(R)))`, respectively `U↑(θ(a(R)))`.
    anchor_value: T,
    /// Upper correction at `θ(a(R))`.
    anchor_upper: T,
    /// `(U(ρ), lower correction at ρ)` by the bits of `ρ`.
    rho_terms: Mutex<HashMap<u64, (T, T)>>,
}

impl<'a, T: Real> ConverseObjective<'a, T> {
    fn new(query: &'a BoundQuery<T>, assumption: Assumption) -> Result<Self> {
        let base = match assumption {
            Assumption::One => query.down.clone(),
            Assumption::Two => query.up()?,
        };
        let lower = base.slope_at_origin()?;
        let upper = base.order_zero_rate()?;
        let rate = query.rate;
        if !(rate > lower && rate < upper) {
            return Err(Error::RateOutOfRange {
                rate: rate.as_f64(),
                lower: lower.as_f64(),
                upper: upper.as_f64(),
            });
        }
        let (slope, theta_a) = base.slope_of_rate(rate)?;
        let anchor_value = base.value(theta_a)?;
        let family = match assumption {
            Assumption::One => base,
            Assumption::Two => base.with_variant(Variant::Fixed(theta_a))?,
        };
        let mut me = Self {
            query,
            assumption,
            slope,
            theta_a,
            family,
            anchor_value,
            anchor_upper: T::zero(),
            rho_terms: Mutex::new(HashMap::new()),
        };
        me.anchor_upper = me.upper_at(theta_a)?;
        Ok(me)
    }

    pub fn slope(&self) -> T {
        self.slope
    }

    pub fn theta_a(&self) -> T {
        self.theta_a
    }

    fn upper_at(&self, theta: T) -> Result<T> {
        match self.assumption {
            Assumption::One => Ok(self.family.delta_sum(theta)?.upper),
            Assumption::Two => Ok(self.family.source().delta_bounds(theta)?.upper
                + self.family.channel_zeta(theta)?.upper),
        }
    }

    fn lower_at(&self, theta: T) -> Result<T> {
        match self.assumption {
            Assumption::One => Ok(self.family.delta_sum(theta)?.lower),
            Assumption::Two => Ok(self.family.source().delta_bounds(theta)?.lower
                + self.family.channel_zeta(theta)?.lower),
        }
    }

    fn rho_terms(&self, rho: T) -> Result<(T, T)> {
        let key = rho.as_f64().to_bits();
        if let Some(&v) = self.rho_terms.lock().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = (self.family.value(rho)?, self.lower_at(rho)?);
        self.rho_terms
            .lock()
            .expect("cache poisoned")
            .insert(key, v);
        Ok(v)
    }

    fn admissible(&self, s: T, rho: T) -> bool {
        s > T::zero()
            && rho > self.theta_a
            && rho < T::one()
            && (T::one() + s) * rho < T::one() - T::tol(DOMAIN_GAP)
    }

    /// The bracketed converse expression times `(1+s)/s`; `None` outside the
    /// admissible region or where the log argument is not positive.
    pub fn eval(&self, s: T, rho: T) -> Result<Option<T>> {
        if !self.admissible(s, rho) {
            return Ok(None);
        }
        let q = self.query;
        let one = T::one();
        let m = q.n_minus_one();
        let ta = self.theta_a;
        let (u_rho, lower_rho) = self.rho_terms(rho)?;
        let d2 = ((one - rho) * self.anchor_upper - (one - ta) * lower_rho + (rho - ta) * q.rate)
            / (one - ta);
        let expo = m * ((rho - ta) * self.slope + self.anchor_value - u_rho) + d2;
        let arg = one - T::lit(2.0) * expo.exp();
        if !(arg > T::zero()) {
            return Ok(None);
        }
        let t1 = (one + s) * rho;
        let main = -m * self.family.value(t1)? / (one + s) + m * u_rho;
        let d1 = -self.upper_at(t1)? / (one + s) + lower_rho;
        Ok(Some((one + s) / s * (main + d1 + arg.ln())))
    }

    fn eval_or_floor(&self, s: T, rho: T, err: &mut Option<Error>) -> T {
        match self.eval(s, rho) {
            Ok(Some(v)) => v,
            Ok(None) => T::neg_infinity(),
            Err(e) => {
                err.get_or_insert(e);
                T::neg_infinity()
            }
        }
    }

    /// Coarse `(s, ρ)` grid followed by coordinate-wise golden-section
    /// sweeps that never accept a worse point.
    pub fn optimise(&self) -> Result<BoundResult<T>> {
        let q = self.query;
        let g = q.grid;
        let s_grid = optim::logspace(T::lit(S_MIN), T::lit(S_MAX), g);
        let rho_lo = self.theta_a + T::tol(RHO_GAP);
        let rho_hi = T::one() - T::tol(RHO_GAP);
        let rho_grid = optim::linspace(rho_lo, rho_hi, g);
        let mut err = None;
        let mut best: Option<(T, T, T)> = None;
        for &s in &s_grid {
            for &rho in &rho_grid {
                let v = self.eval_or_floor(s, rho, &mut err);
                if v > T::neg_infinity() && best.is_none_or(|b| v > b.2) {
                    best = Some((s, rho, v));
                }
            }
        }
        if let Some(e) = err {
            return Err(e);
        }
        let kind = match self.assumption {
            Assumption::One => BoundKind::ConverseA1,
            Assumption::Two => BoundKind::ConverseA2,
        };
        let Some((mut s, mut rho, mut v)) = best else {
            return Ok(BoundResult {
                kind,
                k: q.k,
                n: q.n,
                value: BoundValue::Vacuous,
                witness: None,
            });
        };
        let s_ratio = (T::lit(S_MAX) / T::lit(S_MIN)).powf(T::one() / T::from_count(g - 1));
        let rho_step = (rho_hi - rho_lo) / T::from_count(g - 1);
        let tol = T::tol(X_TOL);
        for _ in 0..SWEEPS {
            // s in log coordinates
            let r = optim::golden_section_max(
                |ls: T| self.eval_or_floor(ls.exp(), rho, &mut err),
                (s / s_ratio).ln(),
                (s * s_ratio).ln(),
                tol,
            );
            if r.value > v {
                s = r.x.exp();
                v = r.value;
            }
            let r = optim::golden_section_max(
                |p| self.eval_or_floor(s, p, &mut err),
                (rho - rho_step).max(rho_lo),
                (rho + rho_step).min(rho_hi),
                tol,
            );
            if r.value > v {
                rho = r.x;
                v = r.value;
            }
            if let Some(e) = err.take() {
                return Err(e);
            }
        }
        Ok(BoundResult {
            kind,
            k: q.k,
            n: q.n,
            value: BoundValue::Finite(v),
            witness: Some(Witness {
                s,
                rho: Some(rho),
                objective: v,
            }),
        })
    }
}

/// One `(k, n, kind)` row of a bound curve; failures are kept per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow<T> {
    pub k: u64,
    pub n: u64,
    pub kind: BoundKind,
    pub outcome: Result<BoundResult<T>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundCurve<T> {
    pub rows: Vec<CurveRow<T>>,
}

impl<T: Real> BoundCurve<T> {
    /// `true` when no row carries a finite bound.
    pub fn all_vacuous(&self) -> bool {
        !self
            .rows
            .iter()
            .any(|r| r.outcome.as_ref().is_ok_and(|b| b.value.finite().is_some()))
    }
}

/// `(k, n)` points for a sweep of `k` at fixed `n`.
pub fn k_sweep(n: u64, k_min: u64, k_max: u64, step: u64) -> Result<Vec<(u64, u64)>> {
    if k_min > k_max || step == 0 {
        return Err(Error::Domain(format!(
            "invalid k range {k_min}..={k_max} step {step}"
        )));
    }
    Ok((k_min..=k_max)
        .step_by(step as usize)
        .map(|k| (k, n))
        .collect())
}

/// `(⌊ratio·n⌋, n)` points for a sweep of `n`.
pub fn n_sweep(ns: &[u64], ratio: f64) -> Vec<(u64, u64)> {
    ns.iter()
        .map(|&n| (((ratio * n as f64) + 1e-9).floor() as u64, n))
        .collect()
}

/// Evaluates every kind at every point, in parallel, keeping point-major
/// order.
pub fn bound_curve<T: Real>(
    source: &SourceChain<T>,
    channel: &JointChannelChain<T>,
    points: &[(u64, u64)],
    kinds: &[BoundKind],
    grid: usize,
) -> BoundCurve<T> {
    if kinds.is_empty() {
        return BoundCurve::default();
    }
    let rows = points
        .par_iter()
        .flat_map_iter(|&(k, n)| {
            let query = BoundQuery::new(source, channel, k, n).map(|q| q.with_grid_density(grid));
            kinds
                .iter()
                .map(|&kind| CurveRow {
                    k,
                    n,
                    kind,
                    outcome: query
                        .as_ref()
                        .map_err(Clone::clone)
                        .and_then(|q| q.evaluate(kind)),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    BoundCurve { rows }
}
