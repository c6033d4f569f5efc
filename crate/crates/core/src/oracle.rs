//! Independent verification paths: adaptive Runge-Kutta integration of the
//! forward equation, direct quadrature of the deviation integral, the damped
//! potential by resolvent solve, seeded Monte Carlo hitting times, and
//! exhaustive sup-over-test-function enumeration. None of these share
//! intermediate results with the primary pipelines they cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::hitting::HittingTimeTable;
use crate::linalg::{solve_dense, Mat};
use crate::scalar::Real;
use crate::stein::DeviationKernel;

/// Exhaustive enumeration guard (window, i.e. top state index).
pub const BRUTE_WINDOW_GUARD: usize = 12;

// Cash-Karp embedded Runge-Kutta pair (orders 4 and 5).
const CK_A: [[f64; 5]; 5] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
    [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
    [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
    [
        1631.0 / 55296.0,
        175.0 / 512.0,
        575.0 / 13824.0,
        44275.0 / 110592.0,
        253.0 / 4096.0,
    ],
];
const CK_B5: [f64; 6] = [
    37.0 / 378.0,
    0.0,
    250.0 / 621.0,
    125.0 / 594.0,
    0.0,
    512.0 / 1771.0,
];
const CK_B4: [f64; 6] = [
    2825.0 / 27648.0,
    0.0,
    18575.0 / 48384.0,
    13525.0 / 55296.0,
    277.0 / 14336.0,
    1.0 / 4.0,
];

/// One adaptive integrator for matrix ODEs of the form
/// `dY/dt = F(Y)`; the state is a list of equally sized matrices.
struct RkState<T> {
    blocks: Vec<Mat<T>>,
}

impl<T: Real> RkState<T> {
    fn combine(&self, h: T, coeffs: &[T], stages: &[Vec<Mat<T>>]) -> Vec<Mat<T>> {
        let mut out = self.blocks.clone();
        for (c, stage) in coeffs.iter().zip(stages) {
            if *c == T::zero() {
                continue;
            }
            for (o, k) in out.iter_mut().zip(stage) {
                o.add_scaled(h * *c, k);
            }
        }
        out
    }
}

fn rk45_integrate<T: Real>(
    blocks: Vec<Mat<T>>,
    deriv: &mut impl FnMut(&[Mat<T>]) -> Vec<Mat<T>>,
    mut remaining: T,
    step_tol: T,
    h_init: T,
    mut on_accept: impl FnMut(&[Mat<T>], T) -> bool,
) -> Result<Vec<Mat<T>>> {
    let mut state = RkState { blocks };
    let mut h = h_init.min(remaining);
    let mut elapsed = T::zero();
    let a: Vec<Vec<T>> = CK_A
        .iter()
        .map(|row| row.iter().map(|&x| T::of(x)).collect())
        .collect();
    let b5: Vec<T> = CK_B5.iter().map(|&x| T::of(x)).collect();
    let b4: Vec<T> = CK_B4.iter().map(|&x| T::of(x)).collect();
    while remaining > T::zero() {
        h = h.min(remaining);
        let mut stages: Vec<Vec<Mat<T>>> = Vec::with_capacity(6);
        stages.push(deriv(&state.blocks));
        for s in 0..5 {
            let y = state.combine(h, &a[s][..=s], &stages);
            stages.push(deriv(&y));
        }
        let y5 = state.combine(h, &b5, &stages);
        let y4 = state.combine(h, &b4, &stages);
        let mut err = T::zero();
        for (p, q) in y5.iter().zip(&y4) {
            err = err.max(p.max_abs_diff(q));
        }
        if err <= step_tol {
            state.blocks = y5;
            elapsed = elapsed + h;
            remaining = remaining - h;
            if !on_accept(&state.blocks, elapsed) {
                break;
            }
            let grow = if err > T::zero() {
                (step_tol / err).powf(T::of(0.2)) * T::of(0.9)
            } else {
                T::of(4.0)
            };
            h = h * grow.min(T::of(4.0));
        } else {
            let shrink = (step_tol / err).powf(T::of(0.25)) * T::of(0.9);
            h = h * shrink.max(T::of(0.1));
        }
        if h < T::of(1e-14) * (elapsed + remaining).max(T::one()) {
            return Err(Error::StepUnderflow {
                t: elapsed.as_f64(),
            });
        }
    }
    Ok(state.blocks)
}

/// `P_t` by integrating the forward equation `dP/dt = P Q` with adaptive
/// Runge-Kutta steps of local error at most `tol`.
pub fn semigroup_ode<T: Real>(gen: &Generator<T>, t: T, tol: T) -> Result<Mat<T>> {
    assert!(t >= T::zero());
    assert!(tol >= T::of(1e-12) * T::half(), "tolerance too tight");
    let q = gen.rate_matrix();
    let n = q.rows();
    if t == T::zero() {
        return Ok(Mat::identity(n));
    }
    let lambda = (0..n)
        .map(|i| q[(i, i)].abs())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let out = rk45_integrate(
        vec![Mat::identity(n)],
        &mut |blocks: &[Mat<T>]| vec![blocks[0].matmul(&q)],
        t,
        tol,
        T::half() / lambda,
        |_, _| true,
    )?;
    Ok(out.into_iter().next().unwrap())
}

/// Direct quadrature of the deviation integral: the forward equation is
/// integrated jointly with the running integral `A(t) = integral (P_s - Pi) ds`,
/// stopping once the decay rate estimated from the trajectory itself bounds
/// the remaining tail below `tol`.
pub fn deviation_numeric<T: Real>(gen: &Generator<T>, tol: T) -> Result<Mat<T>> {
    let q = gen.rate_matrix();
    let n = q.rows();
    let pi = gen.stationary();
    let pimat = Mat::from_fn(n, n, |_, j| pi.mass(j));
    let lambda = (0..n)
        .map(|i| q[(i, i)].abs())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let step_tol = tol * T::of(1e-3);

    // decay history: residual at accepted times, for the tail-rate estimate
    let mut history: Vec<(T, T)> = Vec::new();
    let mut done = false;
    let pimat_ref = &pimat;
    let horizon = T::of(1e7) / lambda;
    let out = rk45_integrate(
        vec![Mat::identity(n), Mat::zeros(n, n)],
        &mut |blocks: &[Mat<T>]| {
            let mut drift = blocks[0].clone();
            drift.add_scaled(-T::one(), pimat_ref);
            vec![blocks[0].matmul(&q), drift]
        },
        horizon,
        step_tol,
        T::half() / lambda,
        |blocks, elapsed| {
            let r = blocks[0].max_abs_diff(pimat_ref);
            history.push((elapsed, r));
            // decay rate over the trailing half of the trajectory
            let half = elapsed * T::half();
            if let Some(&(t0, r0)) = history.iter().find(|&&(t, _)| t >= half) {
                if elapsed > t0 && r0 > r && r > T::zero() {
                    let rate = (r0 / r).ln() / (elapsed - t0);
                    if r / rate <= tol * T::half() && r < T::of(1e-4) {
                        done = true;
                        return false;
                    }
                } else if r == T::zero() {
                    done = true;
                    return false;
                }
            }
            true
        },
    )?;
    if !done {
        return Err(Error::QuadratureFailure(
            "deviation integral: spectral decay too slow for the horizon".into(),
        ));
    }
    Ok(out.into_iter().nth(1).unwrap())
}

/// Damped potential `D^alpha h = (alpha I - Q)^{-1} h - pi(h)/alpha`, by
/// direct resolvent solve (independent of any time integration).
pub fn alpha_potential<T: Real>(gen: &Generator<T>, alpha: T, h: &[T]) -> Result<Vec<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            message: "damping must be positive".into(),
        });
    }
    let q = gen.rate_matrix();
    let n = q.rows();
    assert_eq!(h.len(), n);
    let pi = gen.stationary();
    let a = Mat::from_fn(n, n, |i, j| {
        let base = if i == j { alpha } else { T::zero() };
        base - q[(i, j)]
    });
    // solve on the centered test function: (alpha I - Q)^{-1} (h - pi(h) 1)
    // equals (alpha I - Q)^{-1} h - pi(h)/alpha without the 1/alpha blowup
    let mean: T = (0..n).map(|j| pi.mass(j) * h[j]).sum();
    let centered: Vec<T> = h.iter().map(|&x| x - mean).collect();
    solve_dense(&a, &centered)
}

/// Monte Carlo hitting time `E_i(tau_j)` from exponential-holding-time
/// trajectories. Reproducible for a fixed seed; returns (mean, standard
/// error).
pub fn mc_hitting<T: Real>(
    gen: &Generator<T>,
    i: usize,
    j: usize,
    samples: usize,
    seed: u64,
) -> Result<(T, T)> {
    if samples < 1_000 {
        return Err(Error::InvalidParameter {
            name: "samples",
            message: format!("{samples} trajectories is below the floor of 1000"),
        });
    }
    if i == j {
        return Ok((T::zero(), T::zero()));
    }
    let q = gen.rate_matrix();
    let n = q.rows();
    assert!(i < n && j < n);
    // per-state exit rate and cumulative jump table in f64
    let mut exit = vec![0.0f64; n];
    let mut jumps: Vec<Vec<(f64, usize)>> = Vec::with_capacity(n);
    for x in 0..n {
        exit[x] = (-q[(x, x)]).as_f64();
        let mut cum = 0.0;
        let mut row = Vec::new();
        for y in 0..n {
            if y != x {
                let r = q[(x, y)].as_f64();
                if r > 0.0 {
                    cum += r;
                    row.push((cum, y));
                }
            }
        }
        jumps.push(row);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    for _ in 0..samples {
        let mut x = i;
        let mut elapsed = 0.0f64;
        while x != j {
            let u: f64 = rng.gen();
            elapsed += -(1.0 - u).ln() / exit[x];
            let row = &jumps[x];
            let total = row.last().expect("absorbing interior state").0;
            let v = rng.gen::<f64>() * total;
            x = row
                .iter()
                .find(|&&(c, _)| v < c)
                .map(|&(_, y)| y)
                .unwrap_or(row.last().unwrap().1);
        }
        sum += elapsed;
        sumsq += elapsed * elapsed;
    }
    let m = sum / samples as f64;
    let var = (sumsq / samples as f64 - m * m).max(0.0) / (samples as f64 - 1.0);
    Ok((T::of(m), T::of(var.sqrt())))
}

/// Exhaustive supremum of `|f_h(i)|` over every indicator `h` (hence over all
/// `h` valued in `[0,1]`, by linearity of `h -> f_h(i)`).
pub fn brute_sup_solution<T: Real>(kernel: &DeviationKernel<T>, i: usize) -> Result<T> {
    let n = kernel.n_states();
    if n - 1 > BRUTE_WINDOW_GUARD {
        return Err(Error::WindowTooLarge {
            window: n - 1,
            guard: BRUTE_WINDOW_GUARD,
        });
    }
    let mut sup = T::zero();
    for mask in 0u32..(1u32 << n) {
        let mut s = T::zero();
        for j in 0..n {
            if mask >> j & 1 == 1 {
                s = s + kernel.entry(i, j);
            }
        }
        sup = sup.max(s.abs());
    }
    Ok(sup)
}

/// Exhaustive supremum of `|f_h(i+1) - f_h(i)|` over indicator `h`; `None`
/// at the top state where no forward difference exists.
pub fn brute_sup_gradient<T: Real>(
    table: &HittingTimeTable<T>,
    masses: &[T],
    i: usize,
) -> Result<Option<T>> {
    let n = masses.len();
    if n - 1 > BRUTE_WINDOW_GUARD {
        return Err(Error::WindowTooLarge {
            window: n - 1,
            guard: BRUTE_WINDOW_GUARD,
        });
    }
    if i + 1 >= n {
        return Ok(None);
    }
    let row: Vec<T> = (0..n)
        .map(|j| masses[j] * (table.time(i, j) - table.time(i + 1, j)))
        .collect();
    let mut sup = T::zero();
    for mask in 0u32..(1u32 << n) {
        let mut s = T::zero();
        for (j, &g) in row.iter().enumerate() {
            if mask >> j & 1 == 1 {
                s = s + g;
            }
        }
        sup = sup.max(s.abs());
    }
    Ok(Some(sup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chainparams::Semigroup;
    use crate::distributions::make_custom_pmf;
    use crate::distributions::truncate;
    use crate::generators::{
        bd_from_rates, binomial_paper_chain, canonical_bd, complete_graph_generator,
        geometric_canonical,
    };
    use crate::hitting::hitting_table;
    use crate::spectral::{eigenvalues, t_av_eigentime};
    use crate::stein::{deviation_from_hitting, uniform_sup_gradient, uniform_sup_solution};

    fn two_state() -> Generator<f64> {
        bd_from_rates(vec![1.0], vec![1.0]).unwrap().into()
    }

    #[test]
    fn ode_identity_and_two_state() {
        let gen = two_state();
        let p0 = semigroup_ode(&gen, 0.0, 1e-10).unwrap();
        assert_eq!(p0[(0, 0)], 1.0);
        assert_eq!(p0[(0, 1)], 0.0);
        for t in [0.2, 1.0, 3.0] {
            let p = semigroup_ode(&gen, t, 1e-11).unwrap();
            let want = (1.0 + (-2.0 * t).exp()) / 2.0;
            assert!((p[(0, 0)] - want).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn ode_matches_uniformization() {
        let gen: Generator<f64> = binomial_paper_chain(7, 0.4).unwrap().into();
        let sg = Semigroup::new(&gen);
        for t in [0.05, 0.4, 1.7] {
            let a = semigroup_ode(&gen, t, 1e-11).unwrap();
            let b = sg.transition(t);
            assert!(a.max_abs_diff(&b) < 1e-8, "t={t}");
            // row-stochastic within 10 * tol
            for i in 0..8 {
                let s: f64 = a.row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deviation_integral_two_state() {
        let d = deviation_numeric(&two_state(), 1e-8).unwrap();
        assert!((d[(0, 0)] - 0.25).abs() < 1e-8);
        assert!((d[(0, 1)] + 0.25).abs() < 1e-8);
    }

    #[test]
    fn deviation_integral_matches_hitting_route() {
        let gen: Generator<f64> = binomial_paper_chain(6, 0.35).unwrap().into();
        let table = hitting_table(&gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        let k = deviation_from_hitting(&table, &masses);
        let d = deviation_numeric(&gen, 1e-7).unwrap();
        assert!(d.max_abs_diff(k.matrix()) < 1e-6);
        for i in 0..7 {
            let s: f64 = d.row(i).iter().sum();
            assert!(s.abs() < 1e-7);
        }
    }

    #[test]
    fn potential_kills_constants() {
        let gen: Generator<f64> = binomial_paper_chain(5, 0.5).unwrap().into();
        let h = vec![3.25; 6];
        for alpha in [1.0, 0.01] {
            let v = alpha_potential(&gen, alpha, &h).unwrap();
            for x in v {
                assert!(x.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn potential_two_state_resolvent() {
        let gen = two_state();
        for alpha in [1.0, 0.1, 0.001] {
            let v = alpha_potential(&gen, alpha, &[0.0, 1.0]).unwrap();
            let want = -1.0 / (2.0 * (2.0 + alpha));
            assert!((v[0] - want).abs() < 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn potential_abelian_limit() {
        // damped potential approaches the deviation action monotonically
        let gen: Generator<f64> = complete_graph_generator(10, 1.0).unwrap().into();
        let table = hitting_table(&gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        let k = deviation_from_hitting(&table, &masses);
        let t_av = t_av_eigentime(&eigenvalues(&gen).unwrap());
        let mut h = vec![0.0; 10];
        h[3] = 1.0;
        let exact = k.column(3);
        let mut prev = f64::INFINITY;
        let mut last_gap = f64::NAN;
        for alpha in [1.0, 0.1, 0.01, 0.001] {
            let v = alpha_potential(&gen, alpha, &h).unwrap();
            let gap = v
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(gap <= prev + 1e-15, "alpha={alpha}");
            prev = gap;
            last_gap = gap;
        }
        assert!(last_gap <= 1e-4 * t_av, "gap {last_gap} vs t_av {t_av}");
    }

    #[test]
    fn mc_two_state_and_geometric() {
        let gen = two_state();
        let (m, se) = mc_hitting(&gen, 0, 1, 20_000, 7).unwrap();
        assert_eq!(mc_hitting(&gen, 1, 1, 20_000, 7).unwrap(), (0.0, 0.0));
        assert!((m - 1.0).abs() <= 3.0 * se, "mean {m} se {se}");

        let geo: Generator<f64> = geometric_canonical(0.5, 1e-12).unwrap().into();
        let (m, se) = mc_hitting(&geo, 0, 1, 20_000, 11).unwrap();
        assert!((m - 2.0).abs() <= 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn mc_is_reproducible() {
        let gen: Generator<f64> = binomial_paper_chain(4, 0.3).unwrap().into();
        let a = mc_hitting(&gen, 0, 3, 5_000, 42).unwrap();
        let b = mc_hitting(&gen, 0, 3, 5_000, 42).unwrap();
        assert_eq!(a, b);
        assert!(mc_hitting(&gen, 0, 3, 10, 42).is_err());
    }

    #[test]
    fn brute_sup_two_state() {
        let gen = two_state();
        let table = hitting_table(&gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        let k = deviation_from_hitting(&table, &masses);
        assert!((brute_sup_solution(&k, 0).unwrap() - 0.25).abs() < 1e-14);
        assert!(brute_sup_gradient(&table, &masses, 1).unwrap().is_none());
    }

    #[test]
    fn brute_sup_equals_positive_part_formula() {
        let weights = [0.6, 1.3, 0.2, 2.0, 0.9, 1.1, 0.4, 0.7];
        let pmf = make_custom_pmf(&weights).unwrap();
        let gen: Generator<f64> = canonical_bd(truncate(&pmf, 0.0).unwrap()).unwrap().into();
        let table = hitting_table(&gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        let k = deviation_from_hitting(&table, &masses);
        let (per_state, _) = uniform_sup_solution(&k);
        let (per_edge, _) = uniform_sup_gradient(&table, &masses);
        for i in 0..8 {
            let brute = brute_sup_solution(&k, i).unwrap();
            assert!((brute - per_state[i]).abs() <= 1e-12, "i={i}");
            if i < 7 {
                let bg = brute_sup_gradient(&table, &masses, i).unwrap().unwrap();
                assert!((bg - per_edge[i]).abs() <= 1e-12, "i={i}");
            }
        }
    }

    #[test]
    fn brute_sup_window_guard() {
        let gen: Generator<f64> = geometric_canonical(0.5, 1e-12).unwrap().into();
        let table = hitting_table(&gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        let k = deviation_from_hitting(&table, &masses);
        assert!(matches!(
            brute_sup_solution(&k, 0),
            Err(Error::WindowTooLarge { .. })
        ));
    }
}
