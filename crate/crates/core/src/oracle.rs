//! Brute-force references: exact n-fold path distributions, the
//! correction-term sandwiches checked against them, single-shot bounds on
//! explicit distributions, and exhaustive minimum-error code search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::{JointChannelChain, SquareMatrix, StochasticMatrix};
use crate::measures::{ChainMeasures, JointTable, Structure};
use crate::scalar::{pow0, Real};

/// Largest explicit table the oracle will build.
pub const TABLE_LIMIT: usize = 10_000_000;
/// Largest number of encoders the exhaustive search will try.
pub const ENCODER_LIMIT: usize = 1_000_000;

/// Exact distribution of a length-`n` path of a joint chain, indexed in
/// mixed radix with the first state most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitJoint<T> {
    x_size: usize,
    z_size: usize,
    n: usize,
    probs: Vec<T>,
}

impl<T: Real> ExplicitJoint<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    fn states(&self) -> usize {
        self.x_size * self.z_size
    }

    /// States along the path with index `idx`.
    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let d = self.states();
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = idx % d;
            idx /= d;
        }
        out
    }

    /// Law of the `i`-th state (0-based).
    pub fn marginal(&self, i: usize) -> Vec<T> {
        let d = self.states();
        let stride = d.pow((self.n - 1 - i) as u32);
        let mut out = vec![T::zero(); d];
        for (idx, &p) in self.probs.iter().enumerate() {
            out[(idx / stride) % d] = out[(idx / stride) % d] + p;
        }
        out
    }

    /// The table of `(X^n, Z^n)` with `X^n` as the row variable.
    pub fn conditional_table(&self) -> Result<JointTable<T>> {
        let xs = self.x_size.pow(self.n as u32);
        let zs = self.z_size.pow(self.n as u32);
        let mut table = vec![T::zero(); xs * zs];
        for (idx, &p) in self.probs.iter().enumerate() {
            let (mut xi, mut zi) = (0, 0);
            for s in self.decode(idx) {
                xi = xi * self.x_size + s / self.z_size;
                zi = zi * self.z_size + s % self.z_size;
            }
            table[xi * zs + zi] = table[xi * zs + zi] + p;
        }
        JointTable::new(xs, zs, table)
    }
}

/// `P(s_1) Π W(s_{i+1}|s_i)` over all paths of length `n ≥ 1`.
pub fn nfold_joint<T: Real>(chain: &JointChannelChain<T>, n: usize) -> Result<ExplicitJoint<T>> {
    if n == 0 {
        return Err(Error::Domain("path length must be positive".into()));
    }
    let d = chain.states();
    let size = (d as f64).powi(n as i32);
    if size > TABLE_LIMIT as f64 {
        return Err(Error::TooLarge {
            size,
            limit: TABLE_LIMIT as f64,
        });
    }
    let mut probs = chain.initial().to_vec();
    for _ in 1..n {
        let mut next = Vec::with_capacity(probs.len() * d);
        for &p in &probs {
            next.extend(std::iter::repeat_n(p, d));
        }
        // multiply in the final transition: index = prefix * d + s_new
        for (idx, v) in next.iter_mut().enumerate() {
            let prev = (idx / d) % d;
            *v = *v * chain.matrix().get(idx % d, prev);
        }
        probs = next;
    }
    Ok(ExplicitJoint {
        x_size: chain.x_size(),
        z_size: chain.z_size(),
        n,
        probs,
    })
}

/// Which correction term a sandwich entry checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandwichFamily {
    /// `θ H^↓_{1-θ}(X^n|Z^n)` against `δ`.
    Delta,
    /// `θ/(1-θ) H^↑_{1-θ}(X^n|Z^n)` against `ξ`.
    Xi,
    /// `θ H_{1-θ,1-θ'}(X^n|Z^n)` against `ζ`.
    Zeta,
}

impl SandwichFamily {
    pub fn name(self) -> &'static str {
        match self {
            SandwichFamily::Delta => "delta",
            SandwichFamily::Xi => "xi",
            SandwichFamily::Zeta => "zeta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichEntry<T> {
    pub family: SandwichFamily,
    pub theta: T,
    pub theta_prime: Option<T>,
    pub n: usize,
    pub lower: T,
    pub exact: T,
    pub upper: T,
}

impl<T: Real> SandwichEntry<T> {
    /// `min(exact − lower, upper − exact)`; negative means a violation.
    pub fn margin(&self) -> T {
        (self.exact - self.lower).min(self.upper - self.exact)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SandwichReport<T> {
    pub entries: Vec<SandwichEntry<T>>,
}

impl<T: Real> SandwichReport<T> {
    pub fn worst(&self) -> Option<&SandwichEntry<T>> {
        self.entries
            .iter()
            .min_by(|a, b| a.margin().partial_cmp(&b.margin()).expect("finite margins"))
    }

    /// Fails on the worst entry whose margin is below `-tol`.
    pub fn check(&self, tol: T) -> Result<()> {
        match self.worst() {
            Some(e) if e.margin() < -tol => Err(Error::SandwichViolation {
                family: e.family.name(),
                theta: e.theta.as_f64(),
                theta_prime: e.theta_prime.map(|t| t.as_f64()),
                n: e.n,
                margin: e.margin().as_f64(),
            }),
            _ => Ok(()),
        }
    }
}

/// Every applicable sandwich for `n = 2..=n_max` against exact enumeration.
/// The `ξ`/`ζ` families are included only for strongly non-hidden chains.
pub fn sandwich_report<T: Real>(
    chain: &JointChannelChain<T>,
    thetas: &[T],
    theta_primes: &[T],
    n_max: usize,
) -> Result<SandwichReport<T>> {
    let m = ChainMeasures::new(chain)?;
    let strong = m.structure() != Structure::NonHidden;
    let mut entries = Vec::new();
    for n in 2..=n_max {
        let table = nfold_joint(chain, n)?.conditional_table()?;
        let steps = T::from_count(n - 1);
        for &theta in thetas {
            let d = m.delta_bounds(theta)?;
            let base = steps * m.scaled_h_down(theta)?;
            entries.push(SandwichEntry {
                family: SandwichFamily::Delta,
                theta,
                theta_prime: None,
                n,
                lower: base + d.lower,
                exact: table.scaled_h_down(theta),
                upper: base + d.upper,
            });
            if !strong {
                continue;
            }
            let x = m.xi_bounds(theta)?;
            let base = steps * m.scaled_h_up(theta)? / (T::one() - theta);
            entries.push(SandwichEntry {
                family: SandwichFamily::Xi,
                theta,
                theta_prime: None,
                n,
                lower: base + x.lower,
                exact: table.scaled_h_up(theta),
                upper: base + x.upper,
            });
            for &tp in theta_primes {
                let z = m.zeta_bounds(theta, tp)?;
                let base = steps * m.scaled_h_two_param(theta, tp)?;
                entries.push(SandwichEntry {
                    family: SandwichFamily::Zeta,
                    theta,
                    theta_prime: Some(tp),
                    n,
                    lower: base + z.lower,
                    exact: table.scaled_h_two_param(theta, tp),
                    upper: base + z.upper,
                });
            }
        }
    }
    Ok(SandwichReport { entries })
}

/// [`sandwich_report`] followed by [`SandwichReport::check`].
pub fn sandwich_check<T: Real>(
    chain: &JointChannelChain<T>,
    thetas: &[T],
    theta_primes: &[T],
    n_max: usize,
    tol: T,
) -> Result<SandwichReport<T>> {
    let report = sandwich_report(chain, thetas, theta_primes, n_max)?;
    report.check(tol)?;
    Ok(report)
}

/// A finite channel `W(y|x)` stored as `w[x * outputs + y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable<T> {
    inputs: usize,
    outputs: usize,
    w: Vec<T>,
}

impl<T: Real> ChannelTable<T> {
    pub fn new(inputs: usize, outputs: usize, w: Vec<T>) -> Result<Self> {
        if inputs == 0 || outputs == 0 || w.len() != inputs * outputs {
            return Err(Error::InvalidMatrix(format!(
                "channel shape {inputs}x{outputs} does not match {} entries",
                w.len()
            )));
        }
        for x in 0..inputs {
            crate::markov::validate_distribution(
                &w[x * outputs..(x + 1) * outputs],
                outputs,
                &format!("channel row for input {x}"),
            )?;
        }
        Ok(Self { inputs, outputs, w })
    }

    /// Conditional additive channel `W((x, z)|x') = P_XZ(x − x', z)` with
    /// output index `x * |Z| + z`.
    pub fn conditional_additive(noise: &JointTable<T>) -> Self {
        let (xs, zs) = (noise.x_card(), noise.y_card());
        let mut w = Vec::with_capacity(xs * xs * zs);
        for xp in 0..xs {
            for x in 0..xs {
                for z in 0..zs {
                    w.push(noise.get((x + xs - xp) % xs, z));
                }
            }
        }
        Self {
            inputs: xs,
            outputs: xs * zs,
            w,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> T {
        self.w[x * self.outputs + y]
    }

    /// `W̄(y) = Σ_x P_X(x) W(y|x)`.
    pub fn output_law(&self, px: &[T]) -> Vec<T> {
        (0..self.outputs)
            .map(|y| (0..self.inputs).map(|x| px[x] * self.get(y, x)).sum())
            .collect()
    }
}

fn uniform<T: Real>(n: usize) -> Vec<T> {
    vec![T::one() / T::from_count(n); n]
}

fn check_open_unit<T: Real>(s: T, hi: T) -> Result<()> {
    if !(s > T::zero() && s < hi) {
        return Err(Error::OutOfRange {
            value: s.as_f64(),
            lower: 0.0,
            upper: hi.as_f64(),
        });
    }
    Ok(())
}

/// `log Σ_m P_M(m)^{1-s} = s H_{1-s}(M)`.
fn scaled_source<T: Real>(pm: &[T], s: T) -> T {
    pm.iter().map(|&p| pow0(p, T::one() - s)).sum::<T>().ln()
}

/// Threshold bound `P{P_M(M) W(Y|X) ≤ c W̄(Y)} + 1/c` for input law `P_X`.
pub fn direct_threshold<T: Real>(pm: &[T], ch: &ChannelTable<T>, px: &[T], c: T) -> T {
    let wbar = ch.output_law(px);
    let mut acc = T::zero();
    for &p in pm {
        for (x, &q) in px.iter().enumerate() {
            for (y, &wb) in wbar.iter().enumerate() {
                let w = ch.get(y, x);
                if p * w <= c * wb {
                    acc = acc + p * q * w;
                }
            }
        }
    }
    acc + T::one() / c
}

/// Threshold bound for a conditional additive channel:
/// `P{P_M(M) P_{X|Z}(X|Z) ≤ c/|X|} + 1/c`.
pub fn direct_threshold_additive<T: Real>(pm: &[T], noise: &JointTable<T>, c: T) -> T {
    let pz = noise.marginal_y();
    let scale = c / T::from_count(noise.x_card());
    let mut acc = T::zero();
    for &p in pm {
        for x in 0..noise.x_card() {
            for (z, &q) in pz.iter().enumerate() {
                let pxz = noise.get(x, z);
                if pxz > T::zero() && p * pxz / q <= scale {
                    acc = acc + p * pxz;
                }
            }
        }
    }
    acc + T::one() / c
}

/// Two-term bound with the counting measure on `M`; minimised at `c = 1`.
pub fn direct_two_term<T: Real>(pm: &[T], ch: &ChannelTable<T>, px: &[T], c: T) -> T {
    let wbar = ch.output_law(px);
    let mut acc = T::zero();
    for &p in pm {
        for (x, &q) in px.iter().enumerate() {
            for (y, &wb) in wbar.iter().enumerate() {
                let w = ch.get(y, x);
                acc = acc + if p * w < c * wb { p * q * w } else { q * wb };
            }
        }
    }
    acc
}

/// `Σ P_M^{1-s} · Σ_{x,y} P_X(x) W(y|x)^{1-s} W̄(y)^s`, `s ∈ (0,1)`.
pub fn direct_renyi<T: Real>(pm: &[T], ch: &ChannelTable<T>, px: &[T], s: T) -> Result<T> {
    check_open_unit(s, T::one())?;
    let wbar = ch.output_law(px);
    let mut acc = T::zero();
    for (x, &q) in px.iter().enumerate() {
        for (y, &wb) in wbar.iter().enumerate() {
            let w = ch.get(y, x);
            if w > T::zero() {
                acc = acc + q * w.powf(T::one() - s) * wb.powf(s);
            }
        }
    }
    Ok(scaled_source(pm, s).exp() * acc)
}

/// Gallager-type bound
/// `(Σ P_M^{1-s})^{1/(1-s)} Σ_y (Σ_x P_X(x) W(y|x)^{1-s})^{1/(1-s)}`,
/// `s ∈ [0, 1/2]`.
pub fn direct_gallager<T: Real>(pm: &[T], ch: &ChannelTable<T>, px: &[T], s: T) -> Result<T> {
    if !(s >= T::zero() && s <= T::lit(0.5)) {
        return Err(Error::OutOfRange {
            value: s.as_f64(),
            lower: 0.0,
            upper: 0.5,
        });
    }
    let e = T::one() / (T::one() - s);
    let inner: T = (0..ch.outputs())
        .map(|y| {
            let g: T = px
                .iter()
                .enumerate()
                .map(|(x, &q)| q * pow0(ch.get(y, x), T::one() - s))
                .sum();
            pow0(g, e)
        })
        .sum();
    Ok((scaled_source(pm, s) * e).exp() * inner)
}

/// Which conditional entropy the additive single-shot direct bound uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotForm {
    /// `(e^{H_{1-s}(M) + H↓_{1-s}(X|Z)}/|X|)^s`, `s ∈ (0,1)`.
    Down,
    /// `(e^{H_{1-s}(M) + H↑_{1-s}(X|Z)}/|X|)^{s/(1-s)}`, `s ∈ [0,1/2]`.
    Up,
}

/// Single-shot direct bound for a conditional additive channel.
pub fn single_shot_direct<T: Real>(
    pm: &[T],
    noise: &JointTable<T>,
    s: T,
    form: ShotForm,
) -> Result<T> {
    let log_x = T::from_count(noise.x_card()).ln();
    match form {
        ShotForm::Down => {
            check_open_unit(s, T::one())?;
            Ok((scaled_source(pm, s) + noise.scaled_h_down(s) - s * log_x).exp())
        }
        ShotForm::Up => {
            if !(s >= T::zero() && s <= T::lit(0.5)) {
                return Err(Error::OutOfRange {
                    value: s.as_f64(),
                    lower: 0.0,
                    upper: 0.5,
                });
            }
            let e = T::one() / (T::one() - s);
            Ok((e * scaled_source(pm, s) + noise.scaled_h_up(s) - s * e * log_x).exp())
        }
    }
}

/// Lower bound on the error of the code with encoder `enc`:
/// `Σ_m P_M(m) W{P_M(m) W(Y|e(m)) ≤ c Q_Y(Y) | e(m)} − c`.
pub fn converse_for_encoder<T: Real>(
    pm: &[T],
    ch: &ChannelTable<T>,
    enc: &[usize],
    q_y: &[T],
    c: T,
) -> T {
    let mut acc = T::zero();
    for (m, &p) in pm.iter().enumerate() {
        for (y, &q) in q_y.iter().enumerate() {
            let w = ch.get(y, enc[m]);
            if p * w <= c * q {
                acc = acc + p * w;
            }
        }
    }
    acc - c
}

/// `P{P_M(M) P_XZ(X,Z)/Q_Z(Z) ≤ c/|X|} − c`.
pub fn single_shot_converse<T: Real>(
    pm: &[T],
    noise: &JointTable<T>,
    q_z: &[T],
    c: T,
) -> Result<T> {
    if !(c > T::zero()) {
        return Err(Error::Domain(format!("threshold c={c} must be positive")));
    }
    let scale = c / T::from_count(noise.x_card());
    let mut acc = T::zero();
    for &p in pm {
        for x in 0..noise.x_card() {
            for (z, &q) in q_z.iter().enumerate() {
                let pxz = noise.get(x, z);
                if pxz > T::zero() && p * pxz <= scale * q {
                    acc = acc + p * pxz;
                }
            }
        }
    }
    Ok(acc - c)
}

/// `U(θ) = log Σ P_M^{1-θ} + log Σ P_XZ^{1-θ} Q_Z^θ` over supports.
fn product_tilt<T: Real>(pm: &[T], noise: &JointTable<T>, q_z: &[T], theta: T) -> T {
    scaled_source(pm, theta) + noise.scaled_relative(q_z, theta)
}

/// Rényi-divergence lower bound on `log P_js` at free parameters
/// `(s, ρ, σ)`; `−∞` where the log argument is not positive.
pub fn single_shot_converse_renyi<T: Real>(
    pm: &[T],
    noise: &JointTable<T>,
    q_z: &[T],
    s: T,
    rho: T,
    sigma: T,
) -> Result<T> {
    if !(s > T::zero()) || sigma < T::zero() {
        return Err(Error::Domain(format!(
            "need s > 0 and sigma >= 0, got s={s}, sigma={sigma}"
        )));
    }
    let one = T::one();
    let u = |t: T| product_tilt(pm, noise, q_z, t);
    let r = T::from_count(noise.x_card()).ln();
    let u_rho = u(rho);
    let expo = (u(rho - sigma * (one - rho)) - (one + sigma) * u_rho + sigma * r) / (one + sigma);
    let arg = one - T::lit(2.0) * expo.exp();
    if !(arg > T::zero()) {
        return Ok(T::neg_infinity());
    }
    Ok((one + s) / s * (-u(rho * (one + s)) / (one + s) + u_rho + arg.ln()))
}

/// Outcome of exhaustive encoder search with MAP decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSearchResult<T> {
    pub min_error: T,
    pub best_encoder: Vec<usize>,
}

/// Average error of encoder `enc` under MAP decoding:
/// `1 − Σ_y max_m P_M(m) W(y|e(m))`.
pub fn map_error<T: Real>(pm: &[T], ch: &ChannelTable<T>, enc: &[usize]) -> T {
    let hit: T = (0..ch.outputs())
        .map(|y| {
            pm.iter()
                .zip(enc)
                .map(|(&p, &x)| p * ch.get(y, x))
                .fold(T::zero(), T::max)
        })
        .sum();
    (T::one() - hit).max(T::zero())
}

fn encoder_at(mut idx: usize, inputs: usize, messages: usize) -> Vec<usize> {
    let mut enc = vec![0; messages];
    for slot in enc.iter_mut() {
        *slot = idx % inputs;
        idx /= inputs;
    }
    enc
}

/// Minimum error over all encoders `M → X`, each with its MAP decoder.
pub fn exhaustive_min_error<T: Real>(
    pm: &[T],
    ch: &ChannelTable<T>,
) -> Result<CodeSearchResult<T>> {
    crate::markov::validate_distribution(pm, pm.len(), "message law")?;
    let count = (ch.inputs() as f64).powi(pm.len() as i32);
    if count > ENCODER_LIMIT as f64 {
        return Err(Error::TooLarge {
            size: count,
            limit: ENCODER_LIMIT as f64,
        });
    }
    let (err, idx) = (0..count as usize)
        .into_par_iter()
        .map(|i| (map_error(pm, ch, &encoder_at(i, ch.inputs(), pm.len())), i))
        .reduce(
            || (T::infinity(), usize::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(CodeSearchResult {
        min_error: err,
        best_encoder: encoder_at(idx, ch.inputs(), pm.len()),
    })
}

fn random_stochastic<T: Real>(rng: &mut ChaCha8Rng, dim: usize) -> StochasticMatrix<T> {
    let mut cols = vec![vec![0.0f64; dim]; dim];
    for col in cols.iter_mut() {
        for v in col.iter_mut() {
            *v = rng.gen_range(0.05..1.0);
        }
        let total: f64 = col.iter().sum();
        col.iter_mut().for_each(|v| *v /= total);
    }
    let m = SquareMatrix::from_fn(dim, |to, from| T::lit(cols[from][to])).expect("square");
    StochasticMatrix::new(m).expect("columns normalised")
}

/// Random strictly positive singleton chain started at stationarity.
pub fn random_singleton_chain<T: Real>(states: usize, seed: u64) -> Result<JointChannelChain<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    JointChannelChain::singleton(random_stochastic(&mut rng, states))
}

/// Random strongly non-hidden chain
/// `W(x,z|x',z') = W_Z(z|z') q_z(x − x')` started at stationarity.
pub fn random_strongly_non_hidden_chain<T: Real>(
    x_size: usize,
    z_size: usize,
    seed: u64,
) -> Result<JointChannelChain<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wz: StochasticMatrix<T> = random_stochastic(&mut rng, z_size);
    let noise: Vec<Vec<f64>> = (0..z_size)
        .map(|_| {
            let v: Vec<f64> = (0..x_size).map(|_| rng.gen_range(0.05..1.0)).collect();
            let t: f64 = v.iter().sum();
            v.into_iter().map(|p| p / t).collect()
        })
        .collect();
    let d = x_size * z_size;
    let m = SquareMatrix::from_fn(d, |to, from| {
        let (x, z) = (to / z_size, to % z_size);
        let (xp, zp) = (from / z_size, from % z_size);
        wz.get(z, zp) * T::lit(noise[z][(x + x_size - xp) % x_size])
    })?;
    JointChannelChain::stationary(x_size, z_size, StochasticMatrix::new(m)?)
}

/// Uniform input law on `n` letters.
pub fn uniform_input<T: Real>(n: usize) -> Vec<T> {
    uniform(n)
}
