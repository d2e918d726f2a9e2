//! Conditional Rényi entropies: single-shot versions on explicit joint
//! tables and the transition-matrix versions obtained from Perron–Frobenius
//! eigenvalues of tilted matrices, together with the finite-length
//! correction terms that sandwich n-fold entropies.
//!
//! Everything is in nats. Many routines return the *scaled* quantity
//! `θ·H_{1-θ}` (a log-eigenvalue or log-sum), which is smooth through
//! `θ = 0`; the `h_*` wrappers divide by `θ` and switch to a limit path at
//! the origin.

use crate::error::{Error, Result};
use crate::markov::{
    perron_eigenpair, spectral_radius, JointChannelChain, Orientation, SquareMatrix,
    StochasticMatrix,
};
use crate::optim;
use crate::scalar::{pow0, Real};

/// Step for the central differences of `θ ↦ log λ_θ` at the origin.
const ZERO_VARIANCE: f64 = 1e-9;
const ORIGIN_STEP: f64 = 5e-3;

fn check_order<T: Real>(theta: T) -> Result<()> {
    if theta.is_nan() || theta >= T::one() {
        return Err(Error::Domain(format!(
            "Renyi parameter theta={theta} must be below 1"
        )));
    }
    Ok(())
}

/// Lower/upper pair of a finite-length correction term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionTerms<T> {
    pub lower: T,
    pub upper: T,
}

/// Joint probability table `P_{XY}` stored row-major as `probs[x * y_card + y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<T> {
    x_card: usize,
    y_card: usize,
    probs: Vec<T>,
}

impl<T: Real> JointTable<T> {
    pub fn new(x_card: usize, y_card: usize, probs: Vec<T>) -> Result<Self> {
        if x_card == 0 || y_card == 0 || probs.len() != x_card * y_card {
            return Err(Error::InvalidDistribution(format!(
                "table shape {x_card}x{y_card} does not match {} entries",
                probs.len()
            )));
        }
        crate::markov::validate_distribution(&probs, x_card * y_card, "joint table")?;
        Ok(Self {
            x_card,
            y_card,
            probs,
        })
    }

    /// Table of `X` alone (trivial `Y`).
    pub fn marginal_only(p: Vec<T>) -> Result<Self> {
        let n = p.len();
        Self::new(n, 1, p)
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.probs[x * self.y_card + y]
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn marginal_y(&self) -> Vec<T> {
        (0..self.y_card)
            .map(|y| (0..self.x_card).map(|x| self.get(x, y)).sum())
            .collect()
    }

    /// `g(y) = Σ_x P(x, y)^{1-θ}`.
    fn power_sums(&self, theta: T) -> Vec<T> {
        (0..self.y_card)
            .map(|y| {
                (0..self.x_card)
                    .map(|x| pow0(self.get(x, y), T::one() - theta))
                    .sum()
            })
            .collect()
    }

    /// The tilted marginal `P_Y^{1-θ}(y) ∝ [Σ_x P(x, y)^{1-θ}]^{1/(1-θ)}`.
    pub fn tilted_marginal(&self, theta: T) -> Vec<T> {
        let g = self.power_sums(theta);
        let e = T::one() / (T::one() - theta);
        let raw: Vec<T> = g.iter().map(|&v| pow0(v, e)).collect();
        let total: T = raw.iter().copied().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    /// `log Σ_{x,y} P(x,y)^{1-θ} Q(y)^θ`, i.e. `θ · H_{1-θ}(P_XY | Q_Y)`.
    pub fn scaled_relative(&self, q_y: &[T], theta: T) -> T {
        let mut acc = T::zero();
        for x in 0..self.x_card {
            for (y, &q) in q_y.iter().enumerate() {
                let p = self.get(x, y);
                if p > T::zero() {
                    acc = acc + p.powf(T::one() - theta) * q.powf(theta);
                }
            }
        }
        acc.ln()
    }

    /// `H_{1-θ}(P_XY | Q_Y)` including the `θ = 0` (Shannon) limit.
    pub fn relative_entropy(&self, q_y: &[T], theta: T) -> Result<T> {
        check_order(theta)?;
        if theta == T::zero() {
            let mut acc = T::zero();
            for x in 0..self.x_card {
                for (y, &q) in q_y.iter().enumerate() {
                    let p = self.get(x, y);
                    if p > T::zero() {
                        acc = acc - p * (p / q).ln();
                    }
                }
            }
            return Ok(acc);
        }
        Ok(self.scaled_relative(q_y, theta) / theta)
    }

    /// `θ H^↓_{1-θ}(X|Y)`.
    pub fn scaled_h_down(&self, theta: T) -> T {
        self.scaled_relative(&self.marginal_y(), theta)
    }

    /// `θ/(1-θ) · H^↑_{1-θ}(X|Y) = log Σ_y [Σ_x P(x,y)^{1-θ}]^{1/(1-θ)}`.
    pub fn scaled_h_up(&self, theta: T) -> T {
        let e = T::one() / (T::one() - theta);
        self.power_sums(theta)
            .into_iter()
            .map(|g| pow0(g, e))
            .sum::<T>()
            .ln()
    }

    /// `θ H_{1-θ,1-θ'}(X|Y)`.
    pub fn scaled_h_two_param(&self, theta: T, theta_prime: T) -> T {
        self.scaled_relative(&self.tilted_marginal(theta_prime), theta)
    }
}

/// `H^↓_{1-θ}(X|Y)`; Shannon conditional entropy at `θ = 0`.
pub fn h_down_shot<T: Real>(p: &JointTable<T>, theta: T) -> Result<T> {
    p.relative_entropy(&p.marginal_y(), theta)
}

/// `H^↑_{1-θ}(X|Y)`.
pub fn h_up_shot<T: Real>(p: &JointTable<T>, theta: T) -> Result<T> {
    h_two_param_shot(p, theta, theta)
}

/// `H_{1-θ,1-θ'}(X|Y) = H_{1-θ}(P_XY | P_Y^{1-θ'})`.
pub fn h_two_param_shot<T: Real>(p: &JointTable<T>, theta: T, theta_prime: T) -> Result<T> {
    check_order(theta_prime)?;
    p.relative_entropy(&p.tilted_marginal(theta_prime), theta)
}

/// Unconditional Rényi entropy `H_{1-θ}(P)` of a probability vector.
pub fn renyi_entropy<T: Real>(p: &[T], theta: T) -> Result<T> {
    let table = JointTable::marginal_only(p.to_vec())?;
    h_down_shot(&table, theta)
}

/// Which transition-matrix entropy to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Down,
    Up,
}

/// Structural class of a joint chain with respect to its state coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Trivial state alphabet.
    Singleton,
    /// Non-hidden and strongly non-hidden.
    StronglyNonHidden,
    /// Non-hidden only.
    NonHidden,
}

/// A joint chain validated once for the non-hidden property, with its
/// state marginal cached. All transition-matrix measures live here.
#[derive(Debug, Clone)]
pub struct ChainMeasures<T> {
    chain: JointChannelChain<T>,
    wz: StochasticMatrix<T>,
    structure: Structure,
}

impl<T: Real> ChainMeasures<T> {
    pub fn new(chain: &JointChannelChain<T>) -> Result<Self> {
        let wz = chain.check_assumption1().ok_or_else(|| {
            Error::AssumptionViolated("chain is not non-hidden with respect to Z".into())
        })?;
        let structure = if chain.is_singleton() {
            Structure::Singleton
        } else if chain.is_strongly_non_hidden() {
            Structure::StronglyNonHidden
        } else {
            Structure::NonHidden
        };
        Ok(Self {
            chain: chain.clone(),
            wz,
            structure,
        })
    }

    pub fn chain(&self) -> &JointChannelChain<T> {
        &self.chain
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn state_marginal(&self) -> &StochasticMatrix<T> {
        &self.wz
    }

    fn require_strong(&self) -> Result<()> {
        if self.structure == Structure::NonHidden {
            return Err(Error::AssumptionViolated(
                "chain is not strongly non-hidden with respect to Z".into(),
            ));
        }
        Ok(())
    }

    /// `W(x,z|x',z')^{1-θ} W_Z(z|z')^θ`.
    pub fn down_tilted_matrix(&self, theta: T) -> SquareMatrix<T> {
        let c = &self.chain;
        SquareMatrix::from_fn(c.states(), |to, from| {
            let w = c.matrix().get(to, from);
            if w <= T::zero() {
                return T::zero();
            }
            let (_, z) = c.split(to);
            let (_, zp) = c.split(from);
            w.powf(T::one() - theta) * self.wz.get(z, zp).powf(theta)
        })
        .expect("shape is consistent")
    }

    /// `W(x|x')^{1-θ}` for a singleton chain.
    fn singleton_tilted_matrix(&self, theta: T) -> SquareMatrix<T> {
        self.chain
            .matrix()
            .as_matrix()
            .map(|w| pow0(w, T::one() - theta))
    }

    /// `K_θ(z|z') = [Σ_x W(x,z|x',z')^{1-θ}]^{1/(1-θ)}`.
    pub fn k_matrix(&self, theta: T) -> SquareMatrix<T> {
        let e = T::one() / (T::one() - theta);
        self.chain.tilted_z_matrix(theta).map(|g| pow0(g, e))
    }

    /// `N_{θ,θ'}(z|z') = W_θ(z|z') W_{θ'}(z|z')^{θ/(1-θ')}`.
    pub fn n_matrix(&self, theta: T, theta_prime: T) -> SquareMatrix<T> {
        let g = self.chain.tilted_z_matrix(theta);
        let gp = self.chain.tilted_z_matrix(theta_prime);
        let e = theta / (T::one() - theta_prime);
        SquareMatrix::from_fn(g.dim(), |z, zp| {
            let a = g.get(z, zp);
            if a <= T::zero() {
                T::zero()
            } else {
                a * gp.get(z, zp).powf(e)
            }
        })
        .expect("shape is consistent")
    }

    /// `θ H^{W,↓}_{1-θ}(X|Z) = log λ_θ`.
    pub fn scaled_h_down(&self, theta: T) -> Result<T> {
        check_order(theta)?;
        Ok(spectral_radius(&self.down_tilted_matrix(theta))?.ln())
    }

    /// `θ H^{W,↑}_{1-θ}(X|Z)`.
    pub fn scaled_h_up(&self, theta: T) -> Result<T> {
        check_order(theta)?;
        self.require_strong()?;
        match self.structure {
            Structure::Singleton => Ok(spectral_radius(&self.singleton_tilted_matrix(theta))?.ln()),
            _ => Ok((T::one() - theta) * spectral_radius(&self.k_matrix(theta))?.ln()),
        }
    }

    /// `θ H^W_{1-θ,1-θ'}(X|Z)`.
    pub fn scaled_h_two_param(&self, theta: T, theta_prime: T) -> Result<T> {
        check_order(theta)?;
        check_order(theta_prime)?;
        self.require_strong()?;
        match self.structure {
            Structure::Singleton => Ok(spectral_radius(&self.singleton_tilted_matrix(theta))?.ln()),
            _ => {
                let nu = spectral_radius(&self.n_matrix(theta, theta_prime))?.ln();
                let kappa = spectral_radius(&self.k_matrix(theta_prime))?.ln();
                Ok(nu - theta * kappa)
            }
        }
    }

    fn divide_or_limit(&self, theta: T, scaled: impl Fn(T) -> Result<T>) -> Result<T> {
        if theta == T::zero() {
            let mut err = None;
            let d = optim::derivative(
                |t| {
                    scaled(t).unwrap_or_else(|e| {
                        err = Some(e);
                        T::nan()
                    })
                },
                T::zero(),
                T::lit(ORIGIN_STEP),
            );
            return match err {
                Some(e) => Err(e),
                None => Ok(d),
            };
        }
        Ok(scaled(theta)? / theta)
    }

    pub fn h_down(&self, theta: T) -> Result<T> {
        self.divide_or_limit(theta, |t| self.scaled_h_down(t))
    }

    pub fn h_up(&self, theta: T) -> Result<T> {
        self.divide_or_limit(theta, |t| self.scaled_h_up(t))
    }

    pub fn h_two_param(&self, theta: T, theta_prime: T) -> Result<T> {
        check_order(theta_prime)?;
        self.divide_or_limit(theta, |t| self.scaled_h_two_param(t, theta_prime))
    }

    /// Entropy rate `H^W(X|Z)`.
    pub fn entropy_rate(&self) -> Result<T> {
        self.h_down(T::zero())
    }

    /// Varentropy rate `V^W(X|Z)`: second derivative of `log λ_θ` at the
    /// origin.
    pub fn dispersion(&self) -> Result<T> {
        let mut err = None;
        let v = optim::second_derivative(
            |t| {
                self.scaled_h_down(t).unwrap_or_else(|e| {
                    err = Some(e);
                    T::nan()
                })
            },
            T::zero(),
            T::lit(ORIGIN_STEP),
        );
        match err {
            Some(e) => Err(e),
            // finite-difference noise on a constant-information chain
            None if v.abs() <= T::tol(ZERO_VARIANCE) => Ok(T::zero()),
            None => Ok(v),
        }
    }

    /// Order-zero entropy, the `θ → 1` limit.
    pub fn h_zero(&self, branch: Branch) -> Result<T> {
        let c = &self.chain;
        match (branch, self.structure) {
            (Branch::Down, _) => {
                let m = SquareMatrix::from_fn(c.states(), |to, from| {
                    if c.matrix().get(to, from) > T::zero() {
                        self.wz.get(c.split(to).1, c.split(from).1)
                    } else {
                        T::zero()
                    }
                })?;
                Ok(spectral_radius(&m)?.ln())
            }
            (Branch::Up, Structure::Singleton) => {
                let m =
                    c.matrix().as_matrix().map(
                        |w| {
                            if w > T::zero() {
                                T::one()
                            } else {
                                T::zero()
                            }
                        },
                    );
                Ok(spectral_radius(&m)?.ln())
            }
            (Branch::Up, Structure::StronglyNonHidden) => {
                // tropical limit of (1-θ) log κ_θ: maximum cycle mean of the
                // log support counts
                let zs = c.z_size();
                let weight = |z: usize, zp: usize| -> Option<T> {
                    let count = (0..c.x_size())
                        .filter(|&x| c.transition(x, z, 0, zp) > T::zero())
                        .count();
                    (count > 0).then(|| T::from_count(count).ln())
                };
                Ok(max_cycle_mean(zs, weight))
            }
            (Branch::Up, Structure::NonHidden) => {
                self.require_strong()?;
                unreachable!()
            }
        }
    }

    /// Eigenvector `v` (of the transposed matrix, min entry one) dotted with
    /// `w`, returned as `(log v·w − log max v, log v·w)`.
    ///
    /// A reducible matrix with equal column sums (e.g. the identity channel)
    /// still has the all-ones vector as a positive left eigenvector, which is
    /// all the sandwich needs.
    fn sandwich_pair(&self, m: &SquareMatrix<T>, w: &[T]) -> Result<CorrectionTerms<T>> {
        let (vector, max) = match perron_eigenpair(m, Orientation::Transposed) {
            Ok(pr) => {
                let max = pr.max_entry();
                (pr.vector, max)
            }
            Err(Error::ReducibleMatrix) if equal_column_sums(m) => {
                (vec![T::one(); m.dim()], T::one())
            }
            Err(e) => return Err(e),
        };
        let dot: T = vector.iter().zip(w).map(|(&a, &b)| a * b).sum();
        let upper = dot.ln();
        Ok(CorrectionTerms {
            lower: upper - max.ln(),
            upper,
        })
    }

    /// `δ_W(θ)` bounding `θ H^↓_{1-θ}(X^n|Z^n) − (n−1) θ H^{W,↓}_{1-θ}`.
    pub fn delta_bounds(&self, theta: T) -> Result<CorrectionTerms<T>> {
        check_order(theta)?;
        let c = &self.chain;
        let pz = c.initial_z();
        let w: Vec<T> = c
            .initial()
            .iter()
            .enumerate()
            .map(|(s, &p)| {
                if p <= T::zero() {
                    T::zero()
                } else {
                    p.powf(T::one() - theta) * pz[c.split(s).1].powf(theta)
                }
            })
            .collect();
        self.sandwich_pair(&self.down_tilted_matrix(theta), &w)
    }

    /// `ξ_W(θ)` bounding `θ/(1-θ) H^↑_{1-θ}(X^n|Z^n) − (n−1) θ/(1-θ) H^{W,↑}_{1-θ}`.
    pub fn xi_bounds(&self, theta: T) -> Result<CorrectionTerms<T>> {
        check_order(theta)?;
        self.require_strong()?;
        let c = &self.chain;
        let one_minus = T::one() - theta;
        match self.structure {
            Structure::Singleton => {
                // the n-fold sum Σ P^{1-θ} is raised to 1/(1-θ) here, so the
                // eigenvector bracket is scaled by the same factor
                let w: Vec<T> = c.initial().iter().map(|&p| pow0(p, one_minus)).collect();
                let pair = self.sandwich_pair(&self.singleton_tilted_matrix(theta), &w)?;
                Ok(CorrectionTerms {
                    lower: pair.lower / one_minus,
                    upper: pair.upper / one_minus,
                })
            }
            _ => {
                let e = T::one() / one_minus;
                let w: Vec<T> = initial_power_sums(c, theta)
                    .into_iter()
                    .map(|g| pow0(g, e))
                    .collect();
                self.sandwich_pair(&self.k_matrix(theta), &w)
            }
        }
    }

    /// `ζ_W(θ, θ')` bounding `θ H_{1-θ,1-θ'}(X^n|Z^n) − (n−1) θ H^W_{1-θ,1-θ'}`.
    pub fn zeta_bounds(&self, theta: T, theta_prime: T) -> Result<CorrectionTerms<T>> {
        self.zeta_bounds_with(theta, theta_prime, None)
    }

    /// [`Self::zeta_bounds`] reusing a precomputed `ξ_W(θ')`.
    pub fn zeta_bounds_with(
        &self,
        theta: T,
        theta_prime: T,
        xi_prime: Option<CorrectionTerms<T>>,
    ) -> Result<CorrectionTerms<T>> {
        check_order(theta)?;
        check_order(theta_prime)?;
        self.require_strong()?;
        let c = &self.chain;
        match self.structure {
            Structure::Singleton => {
                let w: Vec<T> = c
                    .initial()
                    .iter()
                    .map(|&p| pow0(p, T::one() - theta))
                    .collect();
                self.sandwich_pair(&self.singleton_tilted_matrix(theta), &w)
            }
            _ => {
                let g = initial_power_sums(c, theta);
                let gp = initial_power_sums(c, theta_prime);
                let e = theta / (T::one() - theta_prime);
                let w: Vec<T> = g
                    .iter()
                    .zip(&gp)
                    .map(|(&a, &b)| {
                        if a <= T::zero() {
                            T::zero()
                        } else {
                            a * b.powf(e)
                        }
                    })
                    .collect();
                let base = self.sandwich_pair(&self.n_matrix(theta, theta_prime), &w)?;
                let xi = match xi_prime {
                    Some(xi) => xi,
                    None => self.xi_bounds(theta_prime)?,
                };
                if theta < T::zero() {
                    Ok(CorrectionTerms {
                        lower: base.lower - theta * xi.lower,
                        upper: base.upper - theta * xi.upper,
                    })
                } else {
                    Ok(CorrectionTerms {
                        lower: base.lower - theta * xi.upper,
                        upper: base.upper - theta * xi.lower,
                    })
                }
            }
        }
    }
}

fn equal_column_sums<T: Real>(m: &SquareMatrix<T>) -> bool {
    let first = m.column_sum(0);
    (1..m.dim()).all(|j| (m.column_sum(j) - first).abs() <= T::tol(1e-12) * first.max(T::one()))
}

/// `Σ_x P_{X_1 Z_1}(x, z)^{1-θ}` for each `z`.
fn initial_power_sums<T: Real>(c: &JointChannelChain<T>, theta: T) -> Vec<T> {
    let mut g = vec![T::zero(); c.z_size()];
    for (s, &p) in c.initial().iter().enumerate() {
        let z = c.split(s).1;
        g[z] = g[z] + pow0(p, T::one() - theta);
    }
    g
}

/// Karp's maximum mean cycle on a graph with `n` nodes; `weight(to, from)`
/// is `None` for a missing edge.
fn max_cycle_mean<T: Real>(n: usize, weight: impl Fn(usize, usize) -> Option<T>) -> T {
    let ninf = T::neg_infinity();
    let mut d = vec![vec![ninf; n]; n + 1];
    d[0] = vec![T::zero(); n];
    for k in 1..=n {
        for v in 0..n {
            for u in 0..n {
                if let Some(wt) = weight(v, u) {
                    if d[k - 1][u] > ninf {
                        d[k][v] = d[k][v].max(d[k - 1][u] + wt);
                    }
                }
            }
        }
    }
    let mut best = ninf;
    for v in 0..n {
        if d[n][v] == ninf {
            continue;
        }
        let mut worst = T::infinity();
        for k in 0..n {
            if d[k][v] > ninf {
                worst = worst.min((d[n][v] - d[k][v]) / T::from_count(n - k));
            }
        }
        best = best.max(worst);
    }
    best
}

/// `H^{W,↓}_{1-θ}(X|Z)`.
pub fn h_down_tm<T: Real>(chain: &JointChannelChain<T>, theta: T) -> Result<T> {
    ChainMeasures::new(chain)?.h_down(theta)
}

/// `H^{W,↑}_{1-θ}(X|Z)`.
pub fn h_up_tm<T: Real>(chain: &JointChannelChain<T>, theta: T) -> Result<T> {
    ChainMeasures::new(chain)?.h_up(theta)
}

/// `H^W_{1-θ,1-θ'}(X|Z)`.
pub fn h_two_param_tm<T: Real>(
    chain: &JointChannelChain<T>,
    theta: T,
    theta_prime: T,
) -> Result<T> {
    ChainMeasures::new(chain)?.h_two_param(theta, theta_prime)
}

pub fn entropy_rate_tm<T: Real>(chain: &JointChannelChain<T>) -> Result<T> {
    ChainMeasures::new(chain)?.entropy_rate()
}

pub fn dispersion_tm<T: Real>(chain: &JointChannelChain<T>) -> Result<T> {
    ChainMeasures::new(chain)?.dispersion()
}

pub fn h_zero_tm<T: Real>(chain: &JointChannelChain<T>, branch: Branch) -> Result<T> {
    ChainMeasures::new(chain)?.h_zero(branch)
}

pub fn delta_bounds<T: Real>(chain: &JointChannelChain<T>, theta: T) -> Result<CorrectionTerms<T>> {
    ChainMeasures::new(chain)?.delta_bounds(theta)
}

pub fn xi_bounds<T: Real>(chain: &JointChannelChain<T>, theta: T) -> Result<CorrectionTerms<T>> {
    ChainMeasures::new(chain)?.xi_bounds(theta)
}

pub fn zeta_bounds<T: Real>(
    chain: &JointChannelChain<T>,
    theta: T,
    theta_prime: T,
) -> Result<CorrectionTerms<T>> {
    ChainMeasures::new(chain)?.zeta_bounds(theta, theta_prime)
}

/// Stationary-weighted conditional entropy `Σ_j π_j H(W(·|j))`; the
/// entropy rate of a singleton chain computed without eigenvalues.
pub fn markov_entropy_rate_direct<T: Real>(w: &StochasticMatrix<T>, pi: &[T]) -> T {
    let d = w.dim();
    (0..d)
        .map(|j| {
            let h: T = (0..d)
                .map(|i| {
                    let p = w.get(i, j);
                    if p > T::zero() {
                        -p * p.ln()
                    } else {
                        T::zero()
                    }
                })
                .sum();
            pi[j] * h
        })
        .sum()
}
