//! The deviation kernel `D = integral of (P_t - Pi) dt`, solutions of the
//! generator-form Stein equation `h - pi(h) = L f_h` via `f_h = D h`, forward
//! gradients, exact suprema over test functions valued in `[0, 1]`, and bound
//! certification against the averaging and deviation times.
//!
//! Sign convention: column `j` of `D` solves `L (D delta_j) = pi(j) 1 - delta_j`.

use crate::error::Result;
use crate::generators::{BirthDeathGenerator, Generator};
use crate::hitting::HittingTimeTable;
use crate::linalg::{inverse, Mat};
use crate::scalar::Real;

/// Dense deviation kernel; rows sum to zero and `pi D = 0`.
#[derive(Debug, Clone)]
pub struct DeviationKernel<T> {
    d: Mat<T>,
}

impl<T: Real> DeviationKernel<T> {
    pub fn n_states(&self) -> usize {
        self.d.rows()
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.d[(i, j)]
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.d
    }

    /// Column `j`, i.e. the Stein solution for `h = delta_j`.
    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n_states()).map(|i| self.d[(i, j)]).collect()
    }

    /// Worst absolute row sum (should vanish).
    pub fn row_sum_residual(&self) -> T {
        let n = self.n_states();
        let mut worst = T::zero();
        for i in 0..n {
            let s: T = self.d.row(i).iter().copied().sum();
            worst = worst.max(s.abs());
        }
        worst
    }

    /// Worst entry of `pi D` (should vanish).
    pub fn stationary_projection_residual(&self, masses: &[T]) -> T {
        self.d
            .vecmat(masses)
            .iter()
            .fold(T::zero(), |a, &x| a.max(x.abs()))
    }

    pub fn max_rel_diff(&self, other: &DeviationKernel<T>) -> T {
        let scale = self.d.max_abs().max(other.d.max_abs());
        if scale > T::zero() {
            self.d.max_abs_diff(&other.d) / scale
        } else {
            T::zero()
        }
    }
}

/// Hitting-time route:
/// `D(j,j) = pi(j) sum_i pi(i) E_i(tau_j)`, `D(i,j) = D(j,j) - pi(j) E_i(tau_j)`.
pub fn deviation_from_hitting<T: Real>(
    table: &HittingTimeTable<T>,
    masses: &[T],
) -> DeviationKernel<T> {
    let n = masses.len();
    let mut diag = vec![T::zero(); n];
    for j in 0..n {
        let mut s = T::zero();
        for i in 0..n {
            s = s + masses[i] * table.time(i, j);
        }
        diag[j] = masses[j] * s;
    }
    let d = Mat::from_fn(n, n, |i, j| diag[j] - masses[j] * table.time(i, j));
    DeviationKernel { d }
}

/// Algebraic route: `D = (Pi - Q)^{-1} - Pi`, where `Pi` is the rank-one
/// projector with every row equal to the stationary pmf.
pub fn deviation_algebraic<T: Real>(gen: &Generator<T>) -> Result<DeviationKernel<T>> {
    let n = gen.n_states();
    let q = gen.rate_matrix();
    let pi = gen.stationary();
    let a = Mat::from_fn(n, n, |i, j| pi.mass(j) - q[(i, j)]);
    let z = inverse(&a)?;
    let d = Mat::from_fn(n, n, |i, j| z[(i, j)] - pi.mass(j));
    Ok(DeviationKernel { d })
}

/// Stein solution `f_h = D h`.
pub fn stein_solution<T: Real>(kernel: &DeviationKernel<T>, h: &[T]) -> Vec<T> {
    kernel.d.matvec(h)
}

/// Forward gradient of the Stein solution without forming `D`:
/// `f_h(i+1) - f_h(i) = sum_j h(j) pi(j) (E_i(tau_j) - E_{i+1}(tau_j))`.
pub fn stein_gradient_closed_form<T: Real>(
    gen: &BirthDeathGenerator<T>,
    table: &HittingTimeTable<T>,
    h: &[T],
) -> Vec<T> {
    let n = gen.n_states();
    let pi = gen.target();
    let mut out = vec![T::zero(); n - 1];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = T::zero();
        for j in 0..n {
            s = s + h[j] * pi.mass(j) * (table.time(i, j) - table.time(i + 1, j));
        }
        *o = s;
    }
    out
}

/// Per-state exact supremum of `|f_h(i)|` over all `h: X -> [0,1]`, plus the
/// overall supremum. Rows of `D` sum to zero, so the extremal `h` is the
/// indicator of the positive entries and the positive-part sum is exact.
pub fn uniform_sup_solution<T: Real>(kernel: &DeviationKernel<T>) -> (Vec<T>, T) {
    let n = kernel.n_states();
    let per_state: Vec<T> = (0..n)
        .map(|i| {
            kernel
                .d
                .row(i)
                .iter()
                .filter(|&&x| x > T::zero())
                .copied()
                .sum()
        })
        .collect();
    let sup = per_state.iter().copied().fold(T::zero(), T::max);
    (per_state, sup)
}

/// Per-edge exact supremum of `|f_h(i+1) - f_h(i)|` over `h: X -> [0,1]`.
/// The weighted gradient rows `pi(j) (E_i - E_{i+1})(tau_j)` also sum to zero
/// in `j` (the target-averaged hitting time is constant in the start state),
/// so the positive-part sum is again exact.
pub fn uniform_sup_gradient<T: Real>(
    table: &HittingTimeTable<T>,
    masses: &[T],
) -> (Vec<T>, T) {
    let n = masses.len();
    let per_edge: Vec<T> = (0..n - 1)
        .map(|i| {
            let mut s = T::zero();
            for j in 0..n {
                let g = masses[j] * (table.time(i, j) - table.time(i + 1, j));
                if g > T::zero() {
                    s = s + g;
                }
            }
            s
        })
        .collect();
    let sup = per_edge.iter().copied().fold(T::zero(), T::max);
    (per_edge, sup)
}

/// `pi(j) sup_i |E_i(tau_j) - E_{i+1}(tau_j)|` for each target `j`: the exact
/// sup-norm of the gradient of the point-mass Stein solution.
pub fn gradient_sup_per_target<T: Real>(table: &HittingTimeTable<T>, masses: &[T]) -> Vec<T> {
    let n = masses.len();
    (0..n)
        .map(|j| {
            let mut worst = T::zero();
            for i in 0..n - 1 {
                worst = worst.max((table.time(i, j) - table.time(i + 1, j)).abs());
            }
            masses[j] * worst
        })
        .collect()
}

/// One certified inequality: `lhs <= rhs` up to a relative slack floor.
#[derive(Debug, Clone)]
pub struct BoundCheck<T> {
    pub name: String,
    pub lhs: T,
    pub rhs: T,
    pub pass: bool,
}

impl<T: Real> BoundCheck<T> {
    pub fn new(name: impl Into<String>, lhs: T, rhs: T) -> Self {
        let pass = lhs <= rhs * (T::one() + T::of(1e-9)) + T::of(1e-12);
        BoundCheck {
            name: name.into(),
            lhs,
            rhs,
            pass,
        }
    }

    pub fn slack(&self) -> T {
        self.rhs - self.lhs
    }
}

/// Certify, for every target `j`, `max_i |D(i,j)| <= 2 t_av` and
/// `pi(j) sup_i |Delta E_i(tau_j)| <= t_dev`.
pub fn certify_point_mass_bounds<T: Real>(
    kernel: &DeviationKernel<T>,
    table: &HittingTimeTable<T>,
    masses: &[T],
    t_av: T,
    t_dev: T,
) -> Vec<BoundCheck<T>> {
    let n = kernel.n_states();
    let grad_sups = gradient_sup_per_target(table, masses);
    let mut checks = Vec::with_capacity(2 * n);
    for j in 0..n {
        let col_sup = (0..n)
            .map(|i| kernel.entry(i, j).abs())
            .fold(T::zero(), T::max);
        checks.push(BoundCheck::new(
            format!("sup|f_delta_{j}| <= 2 t_av"),
            col_sup,
            T::two() * t_av,
        ));
        checks.push(BoundCheck::new(
            format!("sup|grad f_delta_{j}| <= t_dev"),
            grad_sups[j],
            t_dev,
        ));
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_pmf, truncate, Family};
    use crate::generators::{
        bd_from_rates, binomial_paper_chain, canonical_bd, complete_graph_generator,
    };
    use crate::hitting::{hit_gradient, hitting_table};
    use crate::spectral::{eigenvalues, t_av_eigentime};

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    fn kernel_both_ways(gen: &Generator<f64>) -> (DeviationKernel<f64>, DeviationKernel<f64>) {
        let table = hitting_table(gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        let via_hit = deviation_from_hitting(&table, &masses);
        let via_alg = deviation_algebraic(gen).unwrap();
        (via_hit, via_alg)
    }

    #[test]
    fn two_state_kernel_exact() {
        let gen: Generator<f64> = bd_from_rates(vec![1.0], vec![1.0]).unwrap().into();
        let (k, ka) = kernel_both_ways(&gen);
        let want = [[0.25, -0.25], [-0.25, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(rel_close(k.entry(i, j), want[i][j], 1e-14));
                assert!(rel_close(ka.entry(i, j), want[i][j], 1e-13));
            }
        }
    }

    #[test]
    fn routes_agree_on_examples() {
        let gens: Vec<Generator<f64>> = vec![
            binomial_paper_chain(8, 0.4).unwrap().into(),
            complete_graph_generator(6, 0.7).unwrap().into(),
        ];
        for gen in &gens {
            let (a, b) = kernel_both_ways(gen);
            let d = a.max_rel_diff(&b);
            assert!(d < 1e-10, "max_rel_diff = {d:e}");
        }
    }

    #[test]
    fn kernel_annihilation_identities() {
        let pmf = make_pmf::<f64>(Family::Binomial { n: 7, p: 0.3 }).unwrap();
        let gen: Generator<f64> = canonical_bd(truncate(&pmf, 0.0).unwrap()).unwrap().into();
        let (k, _) = kernel_both_ways(&gen);
        let masses = gen.stationary().masses();
        assert!(k.row_sum_residual() < 1e-12);
        assert!(k.stationary_projection_residual(masses) < 1e-12);
    }

    #[test]
    fn stein_equation_residual() {
        // L (D delta_j) = pi(j) 1 - delta_j, every column
        let gen: Generator<f64> = binomial_paper_chain(6, 0.45).unwrap().into();
        let (k, _) = kernel_both_ways(&gen);
        let q = gen.rate_matrix();
        let pi = gen.stationary();
        let n = gen.n_states();
        for j in 0..n {
            let f = k.column(j);
            let lf = q.matvec(&f);
            for i in 0..n {
                let want = pi.mass(j) - if i == j { 1.0 } else { 0.0 };
                assert!((lf[i] - want).abs() < 1e-11, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn solution_centers_general_h() {
        let gen: Generator<f64> = binomial_paper_chain(5, 0.5).unwrap().into();
        let (k, _) = kernel_both_ways(&gen);
        let h: Vec<f64> = (0..6).map(|i| (i as f64).sin().abs()).collect();
        let f = stein_solution(&k, &h);
        let q = gen.rate_matrix();
        let pi = gen.stationary();
        let mean: f64 = (0..6).map(|j| pi.mass(j) * h[j]).sum();
        let lf = q.matvec(&f);
        for i in 0..6 {
            assert!((lf[i] - (mean - h[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_closed_form_matches_kernel_differences() {
        let gen = binomial_paper_chain::<f64>(7, 0.35).unwrap();
        let table = hitting_table(&gen.clone().into()).unwrap();
        let masses = gen.target().masses().to_vec();
        let k = deviation_from_hitting(&table, &masses);
        let h: Vec<f64> = (0..8).map(|i| ((i * i) % 5) as f64 / 4.0).collect();
        let f = stein_solution(&k, &h);
        let grad = stein_gradient_closed_form(&gen, &table, &h);
        for i in 0..7 {
            assert!(rel_close(grad[i], f[i + 1] - f[i], 1e-10), "i={i}");
        }
    }

    #[test]
    fn hit_gradient_is_point_mass_gradient() {
        // the hitting-time gradient times pi(j) equals the gradient of the
        // point-mass Stein solution up to sign
        let gen = binomial_paper_chain::<f64>(6, 0.4).unwrap();
        let table = hitting_table(&gen.clone().into()).unwrap();
        let masses = gen.target().masses().to_vec();
        let j = 2usize;
        let mut h = vec![0.0; 7];
        h[j] = 1.0;
        let grad = stein_gradient_closed_form(&gen, &table, &h);
        let hg = hit_gradient(&gen, j);
        for i in 0..6 {
            assert!(rel_close(grad[i], masses[j] * hg[i], 1e-11));
        }
    }

    #[test]
    fn positive_part_sup_is_symmetric() {
        // rows sum to zero, so positive and negative parts agree
        let gen: Generator<f64> = binomial_paper_chain(9, 0.3).unwrap().into();
        let (k, _) = kernel_both_ways(&gen);
        let (per_state, sup) = uniform_sup_solution(&k);
        for (i, &p) in per_state.iter().enumerate() {
            let neg: f64 = k
                .matrix()
                .row(i)
                .iter()
                .filter(|&&x| x < 0.0)
                .map(|x| -x)
                .sum();
            assert!(rel_close(p, neg, 1e-11));
        }
        assert!(sup > 0.0);
    }

    #[test]
    fn point_mass_bounds_certify() {
        let gen: Generator<f64> = binomial_paper_chain(10, 0.4).unwrap().into();
        let table = hitting_table(&gen).unwrap();
        let masses = gen.stationary().masses().to_vec();
        let k = deviation_from_hitting(&table, &masses);
        let t_av = t_av_eigentime(&eigenvalues(&gen).unwrap());
        // crude upper bound for t_dev is enough here: sup_i sum_j pi_j |E_i - E_0|
        let n = masses.len();
        let mut t_dev: f64 = 0.0;
        for i in 0..n {
            for kk in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += masses[j] * (table.time(i, j) - table.time(kk, j)).abs();
                }
                t_dev = t_dev.max(s);
            }
        }
        let checks = certify_point_mass_bounds(&k, &table, &masses, t_av, t_dev);
        assert_eq!(checks.len(), 2 * n);
        for c in &checks {
            assert!(c.pass, "{} lhs={} rhs={}", c.name, c.lhs, c.rhs);
        }
    }

    #[test]
    fn two_state_gradient_sup() {
        let gen = bd_from_rates(vec![1.0], vec![1.0]).unwrap();
        let table = hitting_table(&gen.clone().into()).unwrap();
        let masses = gen.target().masses().to_vec();
        let sups = gradient_sup_per_target(&table, &masses);
        assert!(rel_close(sups[0], 0.5, 1e-14));
        assert!(rel_close(sups[1], 0.5, 1e-14));
        let (per_edge, sup) = uniform_sup_gradient(&table, &masses);
        assert_eq!(per_edge.len(), 1);
        assert!(rel_close(sup, 0.5, 1e-14));
    }
}
