//! One-dimensional search and differentiation helpers.

use crate::scalar::Real;

/// Maximiser returned by the searches below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmax<T> {
    pub x: T,
    pub value: T,
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// Exact for unimodal `f`; otherwise returns a local maximum. The
/// endpoints are compared against the interior result so that monotone
/// objectives return their boundary value.
pub fn golden_section_max<T: Real>(mut f: impl FnMut(T) -> T, lo: T, hi: T, x_tol: T) -> Argmax<T> {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a) > x_tol && iters < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let mut best = if fc >= fd {
        Argmax { x: c, value: fc }
    } else {
        Argmax { x: d, value: fd }
    };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.value {
            best = Argmax { x, value: v };
        }
    }
    best
}

/// Evaluates `f` on a grid, then refines around the best grid point with
/// golden-section search between its neighbours.
pub fn grid_then_golden<T: Real>(mut f: impl FnMut(T) -> T, grid: &[T], x_tol: T) -> Argmax<T> {
    assert!(!grid.is_empty(), "grid must not be empty");
    let values: Vec<T> = grid.iter().map(|&x| f(x)).collect();
    let (mut i_best, mut v_best) = (0, T::neg_infinity());
    for (i, &v) in values.iter().enumerate() {
        if v > v_best {
            i_best = i;
            v_best = v;
        }
    }
    let lo = grid[i_best.saturating_sub(1)];
    let hi = grid[(i_best + 1).min(grid.len() - 1)];
    let refined = golden_section_max(&mut f, lo, hi, x_tol);
    if refined.value >= v_best {
        refined
    } else {
        Argmax {
            x: grid[i_best],
            value: v_best,
        }
    }
}

/// Bisection for the root of a nondecreasing `g` on `[lo, hi]`.
///
/// Assumes `g(lo) <= 0 <= g(hi)`; returns the midpoint of the final
/// bracket.
pub fn bisect_increasing<T: Real>(mut g: impl FnMut(T) -> T, lo: T, hi: T, x_tol: T) -> T {
    let (mut a, mut b) = (lo, hi);
    let two = T::lit(2.0);
    for _ in 0..200 {
        let m = (a + b) / two;
        if b - a <= x_tol || m <= a || m >= b {
            break;
        }
        if g(m) < T::zero() {
            a = m;
        } else {
            b = m;
        }
    }
    (a + b) / two
}

/// `n` points spaced evenly on `[lo, hi]` (both ends included).
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::from_count(n - 1);
    (0..n).map(|i| lo + step * T::from_count(i)).collect()
}

/// `n` points spaced evenly in `log` on `[lo, hi]`, `lo > 0`.
pub fn logspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(T::exp)
        .collect()
}

/// First derivative by central differences with one Richardson level.
pub fn derivative<T: Real>(mut f: impl FnMut(T) -> T, x: T, h: T) -> T {
    let d1 = (f(x + h) - f(x - h)) / (h + h);
    let two_h = h + h;
    let d2 = (f(x + two_h) - f(x - two_h)) / (two_h + two_h);
    (T::lit(4.0) * d1 - d2) / T::lit(3.0)
}

/// Second derivative by central differences with two Richardson levels.
pub fn second_derivative<T: Real>(mut f: impl FnMut(T) -> T, x: T, h: T) -> T {
    let f0 = f(x);
    let mut level = |step: T| (f(x + step) - f0 - f0 + f(x - step)) / (step * step);
    let a1 = level(h);
    let a2 = level(h + h);
    let a4 = level(T::lit(4.0) * h);
    let r1 = (T::lit(4.0) * a1 - a2) / T::lit(3.0);
    let r2 = (T::lit(4.0) * a2 - a4) / T::lit(3.0);
    (T::lit(16.0) * r1 - r2) / T::lit(15.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_finds_parabola_peak() {
        let r = golden_section_max(|x: f64| -(x - 0.3).powi(2), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(r.x, 0.3, epsilon = 1e-7);
    }

    #[test]
    fn golden_returns_boundary_for_monotone() {
        let r = golden_section_max(|x: f64| x, 0.0, 0.5, 1e-12);
        assert_eq!(r.x, 0.5);
    }

    #[test]
    fn bisection_inverts_cube() {
        let x = bisect_increasing(|x: f64| x.powi(3) - 2.0, 0.0, 2.0, 1e-15);
        assert_abs_diff_eq!(x, 2f64.cbrt(), epsilon = 1e-14);
    }

    #[test]
    fn derivatives_of_exp() {
        let d = derivative(f64::exp, 0.5, 1e-3);
        assert_abs_diff_eq!(d, 0.5f64.exp(), epsilon = 1e-11);
        let d2 = second_derivative(f64::exp, 0.5, 1e-3);
        assert_abs_diff_eq!(d2, 0.5f64.exp(), epsilon = 1e-8);
    }

    #[test]
    fn grids() {
        let g = linspace(0.0_f64, 1.0, 5);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let l = logspace(1e-3_f64, 10.0, 5);
        assert_abs_diff_eq!(l[0], 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(l[4], 10.0, epsilon = 1e-12);
    }
}
