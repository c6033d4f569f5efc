//! Transition semigroup via uniformization and the time parameters of the
//! chain: mixing time, strong stationary time (through separation duality),
//! hitting-time deviation, and the exact large-set hitting parameter on small
//! windows.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::generators::{validate, Generator, VALIDATION_TOL};
use crate::hitting::{hitting_table, HittingTimeTable};
use crate::linalg::{solve_dense, Mat};
use crate::scalar::Real;
use crate::spectral::eigenvalues;

/// Poisson-series truncation: cumulative weight captured to within this tail.
const POISSON_TAIL: f64 = 1e-13;

/// Exhaustive subset enumeration is only attempted up to this window.
pub const T_HIT_WINDOW_GUARD: usize = 15;

/// Uniformized semigroup `P_t = sum_k e^{-Lt}(Lt)^k/k! Pdot^k` with
/// `L = max_i |Q(i,i)|` and `Pdot = I + Q/L`. Powers of `Pdot` are cached
/// across evaluations, so repeated `t` queries cost one weighted sum each.
pub struct Semigroup<T: Real> {
    lambda: T,
    masses: Vec<T>,
    powers: RefCell<Vec<Mat<T>>>,
}

/// Poisson(m) weights in f64 log space, truncated once the cumulative mass
/// reaches `1 - POISSON_TAIL` past the mode. Underflowed low-`k` terms are
/// stored as zero.
fn poisson_weights(m: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut cum = 0.0;
    let mut ln_fact = 0.0;
    let ln_m = m.ln();
    let mut k = 0usize;
    loop {
        let lw = -m + k as f64 * ln_m - ln_fact;
        let w = if lw < -745.0 { 0.0 } else { lw.exp() };
        out.push(w);
        cum += w;
        // past the mode, stop on captured mass or once terms vanish in f64
        if (k as f64) >= m && (cum >= 1.0 - POISSON_TAIL || w < 1e-17 * (1.0 + cum)) {
            break;
        }
        k += 1;
        ln_fact += (k as f64).ln();
        assert!(k < 50_000_000, "Poisson series did not converge (m = {m})");
    }
    out
}

impl<T: Real> Semigroup<T> {
    pub fn new(gen: &Generator<T>) -> Self {
        let q = gen.rate_matrix();
        let n = q.rows();
        let lambda = (0..n).map(|i| q[(i, i)].abs()).fold(T::zero(), T::max);
        let pdot = if lambda > T::zero() {
            Mat::from_fn(n, n, |i, j| {
                let base = if i == j { T::one() } else { T::zero() };
                base + q[(i, j)] / lambda
            })
        } else {
            Mat::identity(n)
        };
        let mut powers = vec![Mat::identity(n)];
        if lambda > T::zero() {
            powers.push(pdot);
        }
        Semigroup {
            lambda,
            masses: gen.stationary().masses().to_vec(),
            powers: RefCell::new(powers),
        }
    }

    pub fn n_states(&self) -> usize {
        self.masses.len()
    }

    fn ensure_powers(&self, upto: usize) {
        let mut powers = self.powers.borrow_mut();
        while powers.len() <= upto {
            let base = powers[1].clone();
            let next = powers.last().unwrap().matmul(&base);
            powers.push(next);
        }
    }

    /// `P_t`; rows sum to one within the Poisson tail budget.
    pub fn transition(&self, t: T) -> Mat<T> {
        assert!(t >= T::zero(), "negative time");
        let n = self.n_states();
        let m = (self.lambda * t).as_f64();
        if m == 0.0 {
            return Mat::identity(n);
        }
        let weights = poisson_weights(m);
        self.ensure_powers(weights.len() - 1);
        let powers = self.powers.borrow();
        let mut out = Mat::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                out.add_scaled(T::of(w), &powers[k]);
            }
        }
        out
    }

    /// Worst-case total variation distance to the stationary law at time `t`.
    pub fn tv_worst(&self, t: T) -> T {
        let p = self.transition(t);
        let n = self.n_states();
        let mut worst = T::zero();
        for i in 0..n {
            let mut s = T::zero();
            for j in 0..n {
                s = s + (p[(i, j)] - self.masses[j]).abs();
            }
            worst = worst.max(s * T::half());
        }
        worst
    }

    /// Separation distance `sep_i(t) = max_j (1 - P_t(i,j)/pi(j))` for every
    /// start state at once (one semigroup evaluation shared by all rows).
    pub fn separation_all(&self, t: T) -> Vec<T> {
        let p = self.transition(t);
        let n = self.n_states();
        (0..n)
            .map(|i| {
                let mut worst = T::zero();
                for j in 0..n {
                    worst = worst.max(T::one() - p[(i, j)] / self.masses[j]);
                }
                worst
            })
            .collect()
    }
}

/// One-shot `P_t` evaluation.
pub fn transition_matrix<T: Real>(gen: &Generator<T>, t: T) -> Mat<T> {
    Semigroup::new(gen).transition(t)
}

/// One-shot worst-case TV distance at `t`.
pub fn tv_worst<T: Real>(gen: &Generator<T>, t: T) -> T {
    Semigroup::new(gen).tv_worst(t)
}

/// One-shot separation distance from start state `i` at `t`.
pub fn separation<T: Real>(gen: &Generator<T>, i: usize, t: T) -> T {
    Semigroup::new(gen).separation_all(t)[i]
}

/// Mixing time: smallest `t` with worst-case TV at most `eps`, by bisection
/// inside the spectral bracket `[0, t_rel log(1/(eps pi_min)) + 1]` to
/// absolute tolerance `1e-6 t_rel`.
pub fn t_mix<T: Real>(gen: &Generator<T>, eps: f64) -> Result<T> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            message: format!("mixing threshold {eps} must lie in (0, 1)"),
        });
    }
    let epst = T::of(eps);
    let sg = Semigroup::new(gen);
    if sg.tv_worst(T::zero()) <= epst {
        return Ok(T::zero());
    }
    let spec = eigenvalues(gen)?;
    let trel = T::one() / spec.gap();
    let pi_min = gen.stationary().pi_min();
    let mut hi = trel * (T::one() / (epst * pi_min)).ln() + T::one();
    let mut guard = 0;
    while sg.tv_worst(hi) > epst {
        // unreachable for exact reversible chains; widen defensively
        hi = hi * T::two();
        guard += 1;
        if guard > 8 {
            return Err(Error::QuadratureFailure(
                "mixing-time bracket failed to capture the threshold".into(),
            ));
        }
    }
    let mut lo = T::zero();
    let tol = T::of(1e-6) * trel;
    while hi - lo > tol {
        let mid = (lo + hi) * T::half();
        if sg.tv_worst(mid) <= epst {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) * T::half())
}

/// Composite of Simpson's rule on `(a, b)` given endpoint and midpoint values.
fn simpson_rule<T: Real>(fa: &[T], fm: &[T], fb: &[T], h: T) -> Vec<T> {
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((&a, &m), &b)| (a + T::of(4.0) * m + b) * h / T::of(6.0))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<T: Real, F: FnMut(T) -> Vec<T>>(
    f: &mut F,
    a: T,
    b: T,
    fa: &[T],
    fm: &[T],
    fb: &[T],
    whole: &[T],
    tol: T,
    depth: u32,
) -> Result<Vec<T>> {
    let m = (a + b) * T::half();
    let lm = (a + m) * T::half();
    let rm = (m + b) * T::half();
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(fa, &flm, fm, m - a);
    let right = simpson_rule(fm, &frm, fb, b - m);
    let mut err = T::zero();
    for i in 0..whole.len() {
        err = err.max((left[i] + right[i] - whole[i]).abs());
    }
    let budget = T::of(15.0) * tol;
    if err <= budget || depth == 0 {
        if depth == 0 && err > budget * T::of(1e3) {
            return Err(Error::QuadratureFailure(
                "separation quadrature failed to converge".into(),
            ));
        }
        // Richardson tail correction
        return Ok((0..whole.len())
            .map(|i| left[i] + right[i] + (left[i] + right[i] - whole[i]) / T::of(15.0))
            .collect());
    }
    let half_tol = tol * T::half();
    let l = adaptive_step(f, a, m, fa, &flm, fm, &left, half_tol, depth - 1)?;
    let r = adaptive_step(f, m, b, fm, &frm, fb, &right, half_tol, depth - 1)?;
    Ok(l.iter().zip(r).map(|(&x, y)| x + y).collect())
}

/// Vector-valued adaptive Simpson quadrature with a shared node set; the
/// refinement criterion is the worst component error.
fn adaptive_simpson_vec<T: Real, F: FnMut(T) -> Vec<T>>(
    f: &mut F,
    a: T,
    b: T,
    tol: T,
) -> Result<Vec<T>> {
    let m = (a + b) * T::half();
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson_rule(&fa, &fm, &fb, b - a);
    adaptive_step(f, a, b, &fa, &fm, &fb, &whole, tol, 48)
}

/// Worst-case expected strong stationary time via separation duality:
/// `t_sst = max_i integral of sep_i(t) dt`. The integral runs to a horizon
/// where separation has decayed, with the submultiplicative tail bound
/// `sep(T) T / (-log sep(T))` folded into a `1e-6` relative error budget.
pub fn t_sst<T: Real>(gen: &Generator<T>) -> Result<T> {
    let n = gen.n_states();
    if n == 1 {
        return Ok(T::zero());
    }
    let diag = validate(gen);
    if diag.detailed_balance.as_f64() > VALIDATION_TOL {
        return Err(Error::NotReversible {
            residual: diag.detailed_balance.as_f64(),
        });
    }
    let sg = Semigroup::new(gen);
    let spec = eigenvalues(gen)?;
    let trel = T::one() / spec.gap();
    let pi_min = gen.stationary().pi_min();
    let mut horizon = trel * ((T::one() / pi_min).ln() + T::of(20.0));
    for _attempt in 0..8 {
        let sep_end = sg.separation_all(horizon);
        let worst_end = sep_end.iter().copied().fold(T::zero(), T::max);
        if worst_end >= T::half() {
            horizon = horizon * T::two();
            continue;
        }
        let tol = T::of(1e-9) * (T::one() + horizon);
        let integrals =
            adaptive_simpson_vec(&mut |t| sg.separation_all(t), T::zero(), horizon, tol)?;
        let mut best = T::zero();
        let mut worst_tail = T::zero();
        for (i, &base) in integrals.iter().enumerate() {
            let s = sep_end[i];
            let tail = if s > T::zero() {
                s * horizon / -s.ln()
            } else {
                T::zero()
            };
            best = best.max(base + tail);
            worst_tail = worst_tail.max(tail);
        }
        if worst_tail <= T::of(1e-6) * best {
            return Ok(best);
        }
        horizon = horizon * T::two();
    }
    Err(Error::QuadratureFailure(
        "separation tail failed to shrink below budget".into(),
    ))
}

/// Worst-case expected hitting-time deviation:
/// `sup_{i,k} sum_j pi(j) |E_i(tau_j) - E_k(tau_j)|`, exact over the window.
pub fn t_dev<T: Real>(table: &HittingTimeTable<T>, masses: &[T]) -> T {
    let n = masses.len();
    let mut worst = T::zero();
    for i in 0..n {
        for k in i + 1..n {
            let mut s = T::zero();
            for (j, &mj) in masses.iter().enumerate() {
                s = s + mj * (table.time(i, j) - table.time(k, j)).abs();
            }
            worst = worst.max(s);
        }
    }
    worst
}

/// Worst-case expected hitting time of a large set:
/// `sup { E_x(tau_A) : pi(A) >= alpha }`, by exhaustive subset enumeration.
/// Exact-or-absent: `None` above the window guard, never an approximation.
pub fn t_hit<T: Real>(gen: &Generator<T>, alpha: f64) -> Result<Option<T>> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            message: format!("set-mass threshold {alpha} must lie in (0, 1/2)"),
        });
    }
    let n = gen.n_states();
    if n - 1 > T_HIT_WINDOW_GUARD {
        return Ok(None);
    }
    let alphat = T::of(alpha);
    let q = gen.rate_matrix();
    let pi = gen.stationary();
    let mut worst = T::zero();
    for mask in 1u32..(1u32 << n) {
        let mut mass = T::zero();
        for j in 0..n {
            if mask >> j & 1 == 1 {
                mass = mass + pi.mass(j);
            }
        }
        if mass < alphat {
            continue;
        }
        let complement: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 0).collect();
        if complement.is_empty() {
            continue; // whole space: hitting time zero everywhere
        }
        let a = Mat::from_fn(complement.len(), complement.len(), |r, c| {
            -q[(complement[r], complement[c])]
        });
        let ones = vec![T::one(); complement.len()];
        let u = solve_dense(&a, &ones)?;
        for &ux in &u {
            worst = worst.max(ux);
        }
    }
    Ok(Some(worst))
}

/// The chain parameters at one `(eps, alpha)` request.
#[derive(Debug, Clone)]
pub struct ChainParams<T> {
    pub eps: f64,
    pub alpha: f64,
    pub t_mix: T,
    pub t_rel: T,
    pub t_av: T,
    pub t_sst: T,
    pub t_dev: T,
    /// Absent above the subset-enumeration window guard.
    pub t_hit: Option<T>,
    pub pi_min: T,
}

/// Assemble every chain parameter (reuses one hitting table and spectrum).
pub fn chain_params<T: Real>(gen: &Generator<T>, eps: f64, alpha: f64) -> Result<ChainParams<T>> {
    let spec = eigenvalues(gen)?;
    let table = hitting_table(gen)?;
    let masses = gen.stationary().masses().to_vec();
    Ok(ChainParams {
        eps,
        alpha,
        t_mix: t_mix(gen, eps)?,
        t_rel: crate::spectral::t_rel(&spec),
        t_av: crate::spectral::t_av_eigentime(&spec),
        t_sst: t_sst(gen)?,
        t_dev: t_dev(&table, &masses),
        t_hit: t_hit(gen, alpha)?,
        pi_min: gen.stationary().pi_min(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{
        bd_from_rates, binomial_paper_chain, complete_graph_generator, geometric_canonical,
    };
    use crate::spectral::t_rel;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn two_state() -> Generator<f64> {
        bd_from_rates(vec![1.0], vec![1.0]).unwrap().into()
    }

    #[test]
    fn transition_at_zero_is_identity() {
        let gen: Generator<f64> = binomial_paper_chain(5, 0.3).unwrap().into();
        let p = transition_matrix(&gen, 0.0);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(p[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn two_state_closed_form() {
        let sg = Semigroup::new(&two_state());
        for t in [0.05, 0.3, 1.0, 4.0] {
            let p = sg.transition(t);
            let want = (1.0 + (-2.0 * t).exp()) / 2.0;
            assert!((p[(0, 0)] - want).abs() < 1e-13, "t={t}");
            assert!((p[(0, 1)] - (1.0 - want)).abs() < 1e-13);
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let gen: Generator<f64> = binomial_paper_chain(9, 0.4).unwrap().into();
        let sg = Semigroup::new(&gen);
        for t in [0.01, 0.5, 3.0, 20.0] {
            let p = sg.transition(t);
            for i in 0..10 {
                let s: f64 = p.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "t={t} i={i}");
            }
        }
    }

    #[test]
    fn ergodic_limit() {
        let gen: Generator<f64> = binomial_paper_chain(8, 0.35).unwrap().into();
        let spec = eigenvalues(&gen).unwrap();
        let t = 50.0 * t_rel(&spec);
        let p = transition_matrix(&gen, t);
        let pi = gen.stationary();
        for i in 0..9 {
            let tv: f64 = (0..9).map(|j| (p[(i, j)] - pi.mass(j)).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-9);
        }
    }

    #[test]
    fn semigroup_property() {
        let gen: Generator<f64> = binomial_paper_chain(6, 0.45).unwrap().into();
        let sg = Semigroup::new(&gen);
        for (s, t) in [(0.1, 0.2), (0.5, 1.3), (2.0, 0.05)] {
            let lhs = sg.transition(s).matmul(&sg.transition(t));
            let rhs = sg.transition(s + t);
            assert!(lhs.max_abs_diff(&rhs) < 1e-10, "s={s} t={t}");
        }
    }

    #[test]
    fn tv_at_zero_and_decay() {
        let gen: Generator<f64> = complete_graph_generator(8, 1.0).unwrap().into();
        assert!(rel_close(tv_worst(&gen, 0.0), 1.0 - 1.0 / 8.0, 1e-14));
        let sg = Semigroup::new(&two_state());
        for t in [0.1, 0.7, 2.0] {
            assert!(rel_close(sg.tv_worst(t), (-2.0 * t).exp() / 2.0, 1e-12));
        }
        // non-increasing on a grid
        let sg = Semigroup::new(&gen);
        let mut prev = f64::INFINITY;
        for k in 0..12 {
            let d = sg.tv_worst(0.08 * k as f64);
            assert!(d <= prev + 1e-12);
            prev = d;
        }
    }

    #[test]
    fn mixing_time_two_state() {
        let got = t_mix(&two_state(), 0.25).unwrap();
        let want = 0.5 * 2.0f64.ln(); // solve exp(-2t)/2 = 1/4
        assert!((got - want).abs() < 1e-5);
    }

    #[test]
    fn mixing_time_bracket_and_monotonicity() {
        let gen: Generator<f64> = binomial_paper_chain(7, 0.3).unwrap().into();
        let spec = eigenvalues(&gen).unwrap();
        let trel = t_rel(&spec);
        let pi_min = gen.stationary().pi_min();
        let t1 = t_mix(&gen, 0.1).unwrap();
        let t3 = t_mix(&gen, 0.3).unwrap();
        assert!(t3 <= t1 + 1e-9);
        assert!(t1 <= trel * (1.0 / (0.1 * pi_min)).ln() + 1e-6);
        // already mixed
        assert_eq!(t_mix(&gen, 0.9999).unwrap_or(f64::NAN), 0.0);
    }

    #[test]
    fn separation_basics() {
        let gen: Generator<f64> = binomial_paper_chain(4, 0.5).unwrap().into();
        for i in 0..5 {
            assert!(rel_close(separation(&gen, i, 0.0), 1.0, 1e-14));
        }
        // sep dominates TV at sampled times
        let sg = Semigroup::new(&gen);
        for t in [0.1, 0.6, 2.5] {
            let sep = sg.separation_all(t);
            let worst_sep = sep.iter().cloned().fold(0.0f64, f64::max);
            assert!(sg.tv_worst(t) <= worst_sep + 1e-12);
        }
    }

    #[test]
    fn strong_stationary_time_two_state() {
        // sep_0(t) = exp(-2t), integral = 1/2
        let got = t_sst(&two_state()).unwrap();
        assert!((got - 0.5).abs() < 1e-5, "got {got}");
    }

    #[test]
    fn deviation_time_two_state() {
        let gen = two_state();
        let table = hitting_table(&gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        assert!(rel_close(t_dev(&table, &masses), 1.0, 1e-12));
    }

    #[test]
    fn hitting_parameter_complete_graph() {
        // uniform(6): qualifying sets need two states, E = 1/|A| from outside
        let gen: Generator<f64> = complete_graph_generator(6, 1.0).unwrap().into();
        let got = t_hit(&gen, 0.25).unwrap().unwrap();
        assert!(rel_close(got, 0.5, 1e-12));
    }

    #[test]
    fn hitting_parameter_guard() {
        let gen: Generator<f64> = geometric_canonical(0.5, 1e-12).unwrap().into();
        assert!(t_hit(&gen, 0.25).unwrap().is_none());
        assert!(t_hit(&gen, 0.7).is_err());
    }

    #[test]
    fn corollary_chain_small_binomial() {
        let gen: Generator<f64> = binomial_paper_chain(10, 0.5).unwrap().into();
        let params = chain_params(&gen, 0.25, 0.25).unwrap();
        assert!(params.t_dev <= 10.0 * params.t_sst + 1e-9);
        assert!(params.t_dev <= 5.0 * params.t_mix + 1e-9);
        assert!(params.t_dev <= 5.0 * params.t_rel * (4.0 / params.pi_min).ln() + 1e-9);
        assert!(params.t_mix <= params.t_rel * (1.0 / (0.25 * params.pi_min)).ln() + 1e-6);
        assert!(params.t_hit.is_some());
    }
}
