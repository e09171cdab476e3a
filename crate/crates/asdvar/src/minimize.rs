//! Composite first-order minimization kernel.
//!
//! A single accelerated proximal-gradient loop (FISTA with backtracking and
//! adaptive restart) drives every solver in the crate: objectives are split
//! into a smooth part given by value + gradient closures and an optional
//! prox-friendly nonsmooth part. Extended-real values are handled by
//! backtracking away from `+∞` regions, and a diminishing-step subgradient
//! polish covers objectives whose "smooth" part is merely subdifferentiable.

use crate::num::{lit, ExtReal, NumericPolicy, Real, Vector};

/// Outcome of a minimization run.
#[derive(Debug, Clone)]
pub struct MinimizeResult<T: Real> {
    /// Final iterate.
    pub x: Vector<T>,
    /// Objective value at the final iterate.
    pub value: T,
    /// Norm of the composite gradient mapping at the final iterate.
    pub residual: T,
    /// Iterations used.
    pub iterations: usize,
    /// Whether the residual met the policy tolerance.
    pub converged: bool,
}

/// Smooth part: value at `x`; when `grad` is `Some`, the gradient (or a
/// subgradient selection) is written into it.
pub type SmoothFn<'a, T> = dyn Fn(&Vector<T>, Option<&mut Vector<T>>) -> ExtReal<T> + 'a;

/// Nonsmooth part handled by prox: `(x, step) -> argmin g(z) + ‖z−x‖²/(2·step)`.
pub type ProxFn<'a, T> = dyn Fn(&Vector<T>, T) -> Vector<T> + 'a;

/// Value of the nonsmooth part (for objective reporting and restarts).
pub type ValueFn<'a, T> = dyn Fn(&Vector<T>) -> ExtReal<T> + 'a;

/// Minimize `smooth(x) + nonsmooth(x)` starting from `x0`.
///
/// `prox`/`nonsmooth_val` may be `None` when the objective is purely smooth.
/// The returned `converged` flag is set when the composite gradient mapping
/// drops below `policy.tol_at(value)`.
pub fn minimize_composite<T: Real>(
    smooth: &SmoothFn<'_, T>,
    prox: Option<&ProxFn<'_, T>>,
    nonsmooth_val: Option<&ValueFn<'_, T>>,
    x0: &Vector<T>,
    policy: &NumericPolicy<T>,
) -> MinimizeResult<T> {
    let dim = x0.len();
    let total = |x: &Vector<T>| -> ExtReal<T> {
        let s = smooth(x, None);
        match nonsmooth_val {
            Some(g) => s + g(x),
            None => s,
        }
    };
    let apply_prox = |x: &Vector<T>, step: T| -> Vector<T> {
        match prox {
            Some(p) => p(x, step),
            None => x.clone(),
        }
    };

    // Pull the start point into the nonsmooth domain, then make sure the
    // smooth part is finite there; shrink toward the prox anchor otherwise.
    let mut x = apply_prox(x0, T::one());
    if !total(&x).is_finite() {
        // Try a few contractions toward zero to find a finite seed.
        let mut t = T::one();
        for _ in 0..60 {
            t *= lit(0.5);
            let cand = apply_prox(&(&x * t), T::one());
            if total(&cand).is_finite() {
                x = cand;
                break;
            }
        }
    }
    let mut fx = match total(&x).finite() {
        Some(v) => v,
        None => {
            // No finite point found; report failure at the start point.
            return MinimizeResult {
                x,
                value: T::max_value().unwrap_or_else(T::one),
                residual: T::max_value().unwrap_or_else(T::one),
                iterations: 0,
                converged: false,
            };
        }
    };

    let mut y = x.clone();
    let mut x_prev = x.clone();
    let mut theta = T::one();
    let mut lip = T::one();
    let lip_max = lit::<T>(1e14);
    let mut grad = Vector::zeros(dim);
    let mut residual = T::max_value().unwrap_or_else(T::one);
    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut iter = 0usize;
    // Iterations since the best value last improved by more than the
    // absolute tolerance; inner oracles with numeric noise floors can keep
    // the gradient-mapping residual above tolerance forever, so a long
    // stagnation of the value is treated as termination at the floor.
    let mut stall = 0usize;
    let mut stalled = false;
    // Running floor of the residual; a solve that is still making progress
    // keeps halving it, while one stuck at a noise floor can only halve it
    // finitely many times before the stall counter wins.
    let mut res_floor = lit::<T>(f64::MAX);

    while iter < policy.max_iter {
        iter += 1;
        let fy = smooth(&y, Some(&mut grad));
        let fy = match fy.finite() {
            Some(v) => v,
            None => {
                // Momentum overshot the domain: restart from the last iterate.
                y = x.clone();
                theta = T::one();
                continue;
            }
        };

        // Backtracking line search on the smooth part.
        let z;
        loop {
            let step = T::one() / lip;
            let cand = apply_prox(&(&y - &grad * step), step);
            let fz = smooth(&cand, None);
            let dz = &cand - &y;
            let quad = fy + grad.dot(&dz) + lip * dz.norm_squared() * lit(0.5);
            match fz.finite() {
                Some(v) if v <= quad + policy.abs_tol => {
                    z = cand;
                    break;
                }
                _ => {
                    lip *= lit(2.0);
                    if lip > lip_max {
                        z = cand;
                        break;
                    }
                }
            }
        }

        residual = (&y - &z).norm() * lip;
        let fz_total = total(&z).into_inner();
        if residual < res_floor * lit(0.9) {
            res_floor = residual;
            stall = 0;
        } else if fz_total < best_f - policy.abs_tol * (T::one() + best_f.abs()) {
            stall = 0;
        } else {
            stall += 1;
        }
        if fz_total < best_f {
            best_f = fz_total;
            best_x = z.clone();
        }

        if residual <= policy.tol_at(fz_total) {
            x = z;
            break;
        }
        if stall >= 500 {
            stalled = true;
            x = best_x.clone();
            break;
        }
        if lip > lip_max {
            // The Armijo test cannot be satisfied: likely a nonsmooth "smooth"
            // part. Switch to a diminishing-step subgradient polish.
            let (px, pf, pres) = subgradient_polish(smooth, prox, nonsmooth_val, &best_x, policy);
            if pf < best_f {
                best_f = pf;
                best_x = px;
            }
            return MinimizeResult {
                value: best_f,
                x: best_x,
                residual: pres,
                iterations: iter,
                converged: pres <= policy.tol_at(pf),
            };
        }

        // Nesterov momentum with function-value restart.
        let theta_next = (T::one() + (T::one() + lit::<T>(4.0) * theta * theta).sqrt()) * lit(0.5);
        let beta = (theta - T::one()) / theta_next;
        // Function-value restart, plus the gradient-mapping test
        // ⟨y − z, z − x⟩ > 0, which stays reliable when values reach the
        // floating-point noise floor.
        let restart =
            fz_total > fx + policy.abs_tol || (&y - &z).dot(&(&z - &x)) > T::zero();
        x_prev.copy_from(&x);
        x = z;
        fx = fz_total;
        if restart {
            theta = T::one();
            y = x.clone();
        } else {
            theta = theta_next;
            y = &x + (&x - &x_prev) * beta;
        }
        // Gentle step-size recovery so one bad region does not freeze progress.
        lip = (lip * lit(0.9)).max(lit(1e-12));
    }

    let value = total(&x).into_inner();
    let converged = stalled || residual <= policy.tol_at(value);
    if best_f < value {
        return MinimizeResult { x: best_x, value: best_f, residual, iterations: iter, converged };
    }
    MinimizeResult { x, value, residual, iterations: iter, converged }
}

/// Diminishing-step projected subgradient fallback. Returns the best point,
/// its value, and a crude gradient-mapping residual there.
fn subgradient_polish<T: Real>(
    smooth: &SmoothFn<'_, T>,
    prox: Option<&ProxFn<'_, T>>,
    nonsmooth_val: Option<&ValueFn<'_, T>>,
    x0: &Vector<T>,
    policy: &NumericPolicy<T>,
) -> (Vector<T>, T, T) {
    let dim = x0.len();
    let total = |x: &Vector<T>| -> ExtReal<T> {
        let s = smooth(x, None);
        match nonsmooth_val {
            Some(g) => s + g(x),
            None => s,
        }
    };
    let mut x = x0.clone();
    let mut best = x.clone();
    let mut best_f = total(&x).into_inner();
    let mut grad = Vector::zeros(dim);
    let iters = policy.max_iter.min(20_000);
    let mut res = T::max_value().unwrap_or_else(T::one);
    for k in 1..=iters {
        if !smooth(&x, Some(&mut grad)).is_finite() {
            break;
        }
        let gn = grad.norm();
        res = gn;
        if gn <= policy.tol_at(best_f) {
            break;
        }
        let step = policy.char_radius / (lit::<T>(k as f64) * gn.max(policy.abs_tol));
        let mut cand = &x - &grad * step;
        if let Some(p) = prox {
            cand = p(&cand, step);
        }
        let f = total(&cand).into_inner();
        if f < best_f {
            best_f = f;
            best.copy_from(&cand);
        }
        x = cand;
    }
    (best, best_f, res)
}

/// Safeguarded Newton for a strictly increasing scalar function: solves
/// `g(s) = target` on `[lo, hi]` given `g` and its derivative.
pub fn monotone_newton<T: Real>(
    g: impl Fn(T) -> T,
    dg: impl Fn(T) -> T,
    target: T,
    mut lo: T,
    mut hi: T,
    policy: &NumericPolicy<T>,
) -> T {
    let mut s = (lo + hi) * lit(0.5);
    for _ in 0..200 {
        let val = g(s) - target;
        if val.abs() <= policy.abs_tol + policy.rel_tol * target.abs() {
            return s;
        }
        if val > T::zero() {
            hi = s;
        } else {
            lo = s;
        }
        let d = dg(s);
        let newton = if d > T::zero() { s - val / d } else { s };
        s = if newton > lo && newton < hi { newton } else { (lo + hi) * lit(0.5) };
    }
    s
}
