//! Nonnegative matrices, Perron–Frobenius eigenpairs and the two Markov
//! chain types (message source and joint noise/state channel chain).
//!
//! Orientation: entry `(to, from)` holds the probability of moving from
//! state `from` to state `to`, so stochastic matrices have unit *column*
//! sums.

use crate::error::{Error, Result};
use crate::scalar::{pow0, Real};

/// Column sums of a stochastic matrix must be within this of one.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance used by the structural channel checks.
pub const ASSUMPTION_TOL: f64 = 1e-10;
/// Default θ grid for the strongly non-hidden check.
pub const DEFAULT_ASSUMPTION2_GRID: [f64; 6] = [-0.05, -0.5, -1.0, -2.0, -5.0, -10.0];

const POWER_ITERATION_CAP: usize = 1_000_000;
const POWER_ITERATION_TOL: f64 = 1e-12;
const SQUARING_MAX_DIM: usize = 64;
const SQUARINGS: usize = 10;

/// Dense square matrix, row index = destination state, column index =
/// source state.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    /// Builds a matrix from row-major data (`data[to * dim + from]`).
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                i / dim,
                i % dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(r) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidMatrix(format!("row {r} has wrong length")));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * dim);
        for to in 0..dim {
            for from in 0..dim {
                data.push(f(to, from));
            }
        }
        Self::new(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![T::zero(); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = T::one();
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, to: usize, from: usize) -> T {
        self.data[to * self.dim + from]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let mut data = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j];
            }
        }
        Self { dim: d, data }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    /// Entrywise map, keeping the shape.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `A · v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                self.data[i * d..(i + 1) * d]
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &x)| acc + a * x)
            })
            .collect()
    }

    /// `vᵀ · A`.
    pub fn vec_mul(&self, v: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut out = vec![T::zero(); d];
        for (i, &vi) in v.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o = *o + vi * self.data[i * d + j];
            }
        }
        out
    }

    pub fn column_sum(&self, from: usize) -> T {
        (0..self.dim).map(|to| self.get(to, from)).sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= T::zero())
    }

    fn successors(&self, from: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |&to| self.get(to, from) > T::zero())
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.dim];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..self.dim {
                let edge = if forward {
                    self.get(v, u)
                } else {
                    self.get(u, v)
                };
                if edge > T::zero() && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Strong connectivity of the support graph.
    pub fn is_irreducible(&self) -> bool {
        self.reach(0, true).iter().all(|&b| b) && self.reach(0, false).iter().all(|&b| b)
    }

    /// Period of an irreducible support graph; `None` when reducible.
    pub fn period(&self) -> Option<usize> {
        if !self.is_irreducible() {
            return None;
        }
        let mut level = vec![usize::MAX; self.dim];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for v in self.successors(u).collect::<Vec<_>>() {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for u in 0..self.dim {
            for v in self.successors(u) {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
            }
        }
        Some(g.max(1))
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Which eigenvector [`perron_eigenpair`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Right eigenvector of `A`.
    Direct,
    /// Right eigenvector of `Aᵀ` (left eigenvector of `A`).
    Transposed,
}

/// Perron–Frobenius eigenvalue with its eigenvector scaled so that its
/// smallest entry is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronResult<T> {
    pub eigenvalue: T,
    pub vector: Vec<T>,
    /// `‖A v − λ v‖∞` for the returned (min-normalised) vector.
    pub residual: T,
}

impl<T: Real> PerronResult<T> {
    pub fn max_entry(&self) -> T {
        self.vector.iter().copied().fold(T::zero(), T::max)
    }
}

/// Dominant eigenpair of a nonnegative irreducible matrix.
pub fn perron_eigenpair<T: Real>(
    a: &SquareMatrix<T>,
    orientation: Orientation,
) -> Result<PerronResult<T>> {
    if !a.is_nonnegative() {
        return Err(Error::InvalidMatrix("matrix has negative entries".into()));
    }
    if !a.is_irreducible() {
        return Err(Error::ReducibleMatrix);
    }
    let m = match orientation {
        Orientation::Direct => a.clone(),
        Orientation::Transposed => a.transpose(),
    };
    let (eigenvalue, mut vector) = power_iterate(&m)?;
    let min = vector.iter().copied().fold(T::infinity(), T::min);
    if min <= T::zero() {
        return Err(Error::ReducibleMatrix);
    }
    for x in vector.iter_mut() {
        *x = *x / min;
    }
    let av = m.mul_vec(&vector);
    let residual = av
        .iter()
        .zip(&vector)
        .map(|(&y, &x)| (y - eigenvalue * x).abs())
        .fold(T::zero(), T::max);
    Ok(PerronResult {
        eigenvalue,
        vector,
        residual,
    })
}

/// Spectral radius of a nonnegative matrix, without the irreducibility
/// requirement of [`perron_eigenpair`]. Reducible inputs such as the
/// identity are accepted.
pub fn spectral_radius<T: Real>(a: &SquareMatrix<T>) -> Result<T> {
    if !a.is_nonnegative() {
        return Err(Error::InvalidMatrix("matrix has negative entries".into()));
    }
    if a.is_irreducible() {
        return power_iterate(a).map(|(l, _)| l);
    }
    // max over the irreducible diagonal blocks
    let d = a.dim();
    let mut assigned = vec![false; d];
    let mut radius = T::zero();
    for start in 0..d {
        if assigned[start] {
            continue;
        }
        let fwd = a.reach(start, true);
        let bwd = a.reach(start, false);
        let block: Vec<usize> = (0..d).filter(|&i| fwd[i] && bwd[i]).collect();
        for &i in &block {
            assigned[i] = true;
        }
        let sub = SquareMatrix::from_fn(block.len(), |to, from| a.get(block[to], block[from]))?;
        let r = if block.len() == 1 {
            sub.get(0, 0)
        } else {
            power_iterate(&sub)?.0
        };
        radius = radius.max(r);
    }
    Ok(radius)
}

/// Power iteration with Collatz–Wielandt bracketing of the eigenvalue.
///
/// Matrices that are not primitive are shifted by a multiple of the identity
/// first; the shift leaves the Perron vector unchanged.
fn power_iterate<T: Real>(a: &SquareMatrix<T>) -> Result<(T, Vec<T>)> {
    let d = a.dim();
    if d == 1 {
        return Ok((a.get(0, 0), vec![T::one()]));
    }
    let total: T = a.data().iter().copied().sum();
    if total <= T::zero() {
        return Ok((T::zero(), vec![T::one(); d]));
    }
    let shift = if a.period() == Some(1) {
        T::zero()
    } else {
        total / T::from_count(d)
    };
    let tol = T::tol(POWER_ITERATION_TOL);
    let floor = T::epsilon() * T::lit(4.0);

    let mut v = if d <= SQUARING_MAX_DIM {
        squared_start(a, shift)
    } else {
        vec![T::one(); d]
    };
    let mut best_gap = T::infinity();
    let mut stalled = 0usize;
    for iter in 1..=POWER_ITERATION_CAP {
        let mut w = a.mul_vec(&v);
        for (wi, &vi) in w.iter_mut().zip(&v) {
            *wi = *wi + shift * vi;
        }
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for (&wi, &vi) in w.iter().zip(&v) {
            if vi > T::zero() {
                let ratio = wi / vi;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        let scale = w.iter().copied().fold(T::zero(), T::max);
        if scale <= T::zero() {
            return Ok((T::zero(), v));
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = *wi / scale;
        }
        let gap = hi - lo;
        if gap <= floor * hi {
            return Ok(((lo + hi) / T::lit(2.0) - shift, v));
        }
        if gap < best_gap {
            best_gap = gap;
            stalled = 0;
        } else {
            stalled += 1;
            // roundoff floor reached
            if stalled > 50 && gap <= tol * hi {
                return Ok(((lo + hi) / T::lit(2.0) - shift, v));
            }
        }
        if iter == POWER_ITERATION_CAP {
            return Err(Error::NonConvergence {
                iterations: iter,
                gap: (gap / hi).as_f64(),
            });
        }
    }
    unreachable!()
}

/// `(A + shift·I)^{2^j} 1`, max-normalised, as a warm start for power
/// iteration; falls back to all-ones if an entry underflows.
fn squared_start<T: Real>(a: &SquareMatrix<T>, shift: T) -> Vec<T> {
    let d = a.dim();
    let mut m = a.data().to_vec();
    for i in 0..d {
        m[i * d + i] = m[i * d + i] + shift;
    }
    for _ in 0..SQUARINGS {
        let max = m.iter().copied().fold(T::zero(), T::max);
        m.iter_mut().for_each(|x| *x = *x / max);
        let mut next = vec![T::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let mik = m[i * d + k];
                if mik == T::zero() {
                    continue;
                }
                for j in 0..d {
                    next[i * d + j] = next[i * d + j] + mik * m[k * d + j];
                }
            }
        }
        m = next;
    }
    let v: Vec<T> = (0..d)
        .map(|i| m[i * d..(i + 1) * d].iter().copied().sum())
        .collect();
    let max = v.iter().copied().fold(T::zero(), T::max);
    if v.iter().all(|&x| x > T::zero()) && max.is_finite() {
        v.into_iter().map(|x| x / max).collect()
    } else {
        vec![T::one(); d]
    }
}

/// A column-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix<T> {
    inner: SquareMatrix<T>,
}

impl<T: Real> StochasticMatrix<T> {
    pub fn new(inner: SquareMatrix<T>) -> Result<Self> {
        let d = inner.dim();
        for from in 0..d {
            for to in 0..d {
                let v = inner.get(to, from);
                if v < T::zero() {
                    return Err(Error::InvalidMatrix(format!(
                        "column {from}: negative entry {v} in row {to}"
                    )));
                }
            }
            let sum = inner.column_sum(from);
            if (sum - T::one()).abs() > T::tol(STOCHASTIC_TOL) {
                return Err(Error::InvalidMatrix(format!(
                    "column {from} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { inner })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    /// The binary chain `[[1-p, q], [p, 1-q]]`: leave state 0 with
    /// probability `p`, leave state 1 with probability `q`.
    pub fn binary(p: T, q: T) -> Result<Self> {
        let one = T::one();
        Self::from_rows(&[vec![one - p, q], vec![p, one - q]])
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: SquareMatrix::identity(dim),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[inline]
    pub fn get(&self, to: usize, from: usize) -> T {
        self.inner.get(to, from)
    }

    pub fn as_matrix(&self) -> &SquareMatrix<T> {
        &self.inner
    }

    /// One step of the chain applied to a distribution.
    pub fn step(&self, p: &[T]) -> Vec<T> {
        self.inner.mul_vec(p)
    }
}

/// Stationary law of an irreducible aperiodic chain.
pub fn stationary_distribution<T: Real>(w: &StochasticMatrix<T>) -> Result<Vec<T>> {
    let m = w.as_matrix();
    match m.period() {
        None => return Err(Error::ReducibleMatrix),
        Some(p) if p > 1 => return Err(Error::Periodic(p)),
        _ => {}
    }
    let pr = perron_eigenpair(m, Orientation::Direct)?;
    let total: T = pr.vector.iter().copied().sum();
    Ok(pr.vector.into_iter().map(|x| x / total).collect())
}

pub(crate) fn validate_distribution<T: Real>(p: &[T], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::InvalidDistribution(format!(
            "{what}: expected length {len}, got {}",
            p.len()
        )));
    }
    if let Some(i) = p.iter().position(|&x| !(x >= T::zero()) || !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {i} is negative or not finite"
        )));
    }
    let sum: T = p.iter().copied().sum();
    if (sum - T::one()).abs() > T::tol(STOCHASTIC_TOL) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Markov chain on `X × Z` driving a conditional additive channel: `X` is
/// the additive noise on the group `Z/|X|Z`, `Z` the state seen by the
/// receiver. State `(x, z)` has index `x * z_size + z`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointChannelChain<T> {
    x_size: usize,
    z_size: usize,
    matrix: StochasticMatrix<T>,
    initial: Vec<T>,
}

impl<T: Real> JointChannelChain<T> {
    pub fn new(
        x_size: usize,
        z_size: usize,
        matrix: StochasticMatrix<T>,
        initial: Vec<T>,
    ) -> Result<Self> {
        if x_size == 0 || z_size == 0 {
            return Err(Error::InvalidMatrix(
                "alphabet sizes must be positive".into(),
            ));
        }
        if matrix.dim() != x_size * z_size {
            return Err(Error::InvalidMatrix(format!(
                "matrix dimension {} does not match {x_size}x{z_size}",
                matrix.dim()
            )));
        }
        validate_distribution(&initial, matrix.dim(), "initial distribution")?;
        Ok(Self {
            x_size,
            z_size,
            matrix,
            initial,
        })
    }

    /// Chain started from its stationary distribution.
    pub fn stationary(x_size: usize, z_size: usize, matrix: StochasticMatrix<T>) -> Result<Self> {
        let initial = stationary_distribution(&matrix)?;
        Self::new(x_size, z_size, matrix, initial)
    }

    /// Additive noise chain with a trivial state alphabet.
    pub fn singleton(matrix: StochasticMatrix<T>) -> Result<Self> {
        let d = matrix.dim();
        Self::stationary(d, 1, matrix)
    }

    /// Same transition matrix, different initial law.
    pub fn with_initial(&self, initial: Vec<T>) -> Result<Self> {
        Self::new(self.x_size, self.z_size, self.matrix.clone(), initial)
    }

    #[inline]
    pub fn x_size(&self) -> usize {
        self.x_size
    }

    #[inline]
    pub fn z_size(&self) -> usize {
        self.z_size
    }

    #[inline]
    pub fn states(&self) -> usize {
        self.x_size * self.z_size
    }

    #[inline]
    pub fn state(&self, x: usize, z: usize) -> usize {
        x * self.z_size + z
    }

    #[inline]
    pub fn split(&self, s: usize) -> (usize, usize) {
        (s / self.z_size, s % self.z_size)
    }

    pub fn matrix(&self) -> &StochasticMatrix<T> {
        &self.matrix
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    pub fn is_singleton(&self) -> bool {
        self.z_size == 1
    }

    /// `W(x, z | x', z')`.
    #[inline]
    pub fn transition(&self, x: usize, z: usize, xp: usize, zp: usize) -> T {
        self.matrix.get(self.state(x, z), self.state(xp, zp))
    }

    /// Z-marginal of the initial law.
    pub fn initial_z(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.z_size];
        for (s, &p) in self.initial.iter().enumerate() {
            out[self.split(s).1] = out[self.split(s).1] + p;
        }
        out
    }

    /// `Σ_x W(x, z | x', z')^power` as a `z × z` table, one per `x'`.
    fn x_power_sums(&self, power: T) -> Vec<SquareMatrix<T>> {
        (0..self.x_size)
            .map(|xp| {
                SquareMatrix::from_fn(self.z_size, |z, zp| {
                    (0..self.x_size)
                        .map(|x| pow0(self.transition(x, z, xp, zp), power))
                        .sum()
                })
                .expect("sizes are consistent")
            })
            .collect()
    }

    /// Non-hidden check: the z-dynamics do not depend on `x'`. Returns the
    /// induced marginal `W_Z` when it holds.
    pub fn check_assumption1(&self) -> Option<StochasticMatrix<T>> {
        let sums = self.x_power_sums(T::one());
        let tol = T::tol(ASSUMPTION_TOL);
        let first = &sums[0];
        for other in &sums[1..] {
            let same = first
                .data()
                .iter()
                .zip(other.data())
                .all(|(&a, &b)| (a - b).abs() <= tol);
            if !same {
                return None;
            }
        }
        // column sums of W_Z are 1 up to roundoff; renormalise exactly
        let wz =
            SquareMatrix::from_fn(self.z_size, |z, zp| first.get(z, zp) / first.column_sum(zp))
                .ok()?;
        StochasticMatrix::new(wz).ok()
    }

    /// Strongly non-hidden check on a θ grid (always true for a singleton
    /// state alphabet).
    pub fn check_assumption2(&self, theta_grid: &[T]) -> bool {
        if self.is_singleton() {
            return true;
        }
        if self.check_assumption1().is_none() {
            return false;
        }
        let tol = T::tol(ASSUMPTION_TOL);
        theta_grid.iter().all(|&theta| {
            let sums = self.x_power_sums(T::one() - theta);
            let first = &sums[0];
            sums[1..].iter().all(|other| {
                first
                    .data()
                    .iter()
                    .zip(other.data())
                    .all(|(&a, &b)| (a - b).abs() <= tol * T::one().max(a.abs()))
            })
        })
    }

    /// [`Self::check_assumption2`] on the default grid.
    pub fn is_strongly_non_hidden(&self) -> bool {
        let grid: Vec<T> = DEFAULT_ASSUMPTION2_GRID
            .iter()
            .map(|&t| T::lit(t))
            .collect();
        self.check_assumption2(&grid)
    }

    /// `W_θ(z | z') = Σ_x W(x, z | x', z')^{1-θ}`, evaluated at `x' = 0`.
    /// Well defined only for strongly non-hidden chains.
    pub fn tilted_z_matrix(&self, theta: T) -> SquareMatrix<T> {
        self.x_power_sums(T::one() - theta).swap_remove(0)
    }
}

/// Message source: a Markov chain on `M` with an initial law.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceChain<T> {
    chain: JointChannelChain<T>,
}

impl<T: Real> SourceChain<T> {
    pub fn new(matrix: StochasticMatrix<T>, initial: Vec<T>) -> Result<Self> {
        let d = matrix.dim();
        Ok(Self {
            chain: JointChannelChain::new(d, 1, matrix, initial)?,
        })
    }

    pub fn stationary(matrix: StochasticMatrix<T>) -> Result<Self> {
        Ok(Self {
            chain: JointChannelChain::singleton(matrix)?,
        })
    }

    pub fn m_size(&self) -> usize {
        self.chain.x_size()
    }

    pub fn matrix(&self) -> &StochasticMatrix<T> {
        self.chain.matrix()
    }

    pub fn initial(&self) -> &[T] {
        self.chain.initial()
    }

    /// The same chain viewed as a joint chain with a trivial second
    /// coordinate; every measure of the source is computed through it.
    pub fn as_joint(&self) -> &JointChannelChain<T> {
        &self.chain
    }
}
