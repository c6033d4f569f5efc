//! Expected hitting times `E_i(tau_j)` by three independent routes: the
//! birth-death closed form, a per-target linear solve, and the
//! eigenvalue-difference (Fill) formula, plus hitting times of sets, the
//! hitting-time gradient, and the deviation-kernel existence sum.

use crate::distributions::TruncatedPmf;
use crate::error::{Error, Result};
use crate::generators::{BirthDeathGenerator, Generator};
use crate::linalg::{solve_dense, Mat};
use crate::scalar::Real;
use crate::spectral::restricted_eigenvalues;

/// How a hitting-time table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitMethod {
    ClosedForm,
    LinearSolve,
    EigenFormula,
}

/// Matrix of expected hitting times over the window; diagonal exactly zero.
#[derive(Debug, Clone)]
pub struct HittingTimeTable<T> {
    times: Mat<T>,
    method: HitMethod,
}

impl<T: Real> HittingTimeTable<T> {
    pub fn n_states(&self) -> usize {
        self.times.rows()
    }

    pub fn time(&self, i: usize, j: usize) -> T {
        self.times[(i, j)]
    }

    pub fn method(&self) -> HitMethod {
        self.method
    }

    pub fn times(&self) -> &Mat<T> {
        &self.times
    }

    /// Worst relative disagreement with another table over off-diagonal
    /// entries.
    pub fn max_rel_diff(&self, other: &HittingTimeTable<T>) -> T {
        let n = self.n_states();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let a = self.time(i, j);
                let b = other.time(i, j);
                let scale = a.abs().max(b.abs());
                if scale > T::zero() {
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Tail of the stationary measure within the window, `sum_{l > k} pi_l`,
/// accumulated from the top so the small tails keep relative accuracy. The
/// in-window tail (rather than the source family's infinite tail) is the
/// measure the truncated chain actually carries; the two differ only in the
/// last few states of the window.
fn window_tails<T: Real>(pi: &TruncatedPmf<T>) -> Vec<T> {
    let n = pi.n_states();
    let mut tails = vec![T::zero(); n];
    for k in (0..n - 1).rev() {
        tails[k] = tails[k + 1] + pi.mass(k + 1);
    }
    tails
}

/// Closed-form birth-death hitting time:
/// `E_i(tau_j) = sum_{k=i}^{j-1} pi([0,k]) / (b_k pi_k)` for `i < j`, and the
/// mirrored tail sum for `i >= j`.
pub fn hit_bd_closed_form<T: Real>(gen: &BirthDeathGenerator<T>, i: usize, j: usize) -> T {
    let pi = gen.target();
    if i < j {
        let mut s = T::zero();
        for k in i..j {
            s = s + pi.cdf(k) / (gen.b(k) * pi.mass(k));
        }
        s
    } else {
        let tails = window_tails(pi);
        let mut s = T::zero();
        for k in j..i {
            s = s + tails[k] / (gen.b(k) * pi.mass(k));
        }
        s
    }
}

/// Full closed-form table via prefix sums, `O(n^2)` overall.
pub fn hitting_table_closed_form<T: Real>(gen: &BirthDeathGenerator<T>) -> HittingTimeTable<T> {
    let n = gen.n_states();
    let pi = gen.target();
    let tails = window_tails(pi);
    // s_up[m] = sum_{k<m} cdf(k)/(b_k pi_k); s_dn[m] = sum_{k<m} tail(k)/(b_k pi_k)
    let mut s_up = vec![T::zero(); n];
    let mut s_dn = vec![T::zero(); n];
    for k in 0..n - 1 {
        let denom = gen.b(k) * pi.mass(k);
        s_up[k + 1] = s_up[k] + pi.cdf(k) / denom;
        s_dn[k + 1] = s_dn[k] + tails[k] / denom;
    }
    let times = Mat::from_fn(n, n, |i, j| {
        if i < j {
            s_up[j] - s_up[i]
        } else if i > j {
            s_dn[i] - s_dn[j]
        } else {
            T::zero()
        }
    });
    HittingTimeTable {
        times,
        method: HitMethod::ClosedForm,
    }
}

/// Thomas solve specialized to the hitting blocks: tridiagonal M-matrix with
/// row `k` equal to `-dn[k] x_{k-1} + (up[k] + dn[k] + excess[k]) x_k
/// - up[k] x_{k+1} = rhs[k]`, all inputs nonnegative. Writing the pivot
/// update as `t_k = excess_k + dn_k t_{k-1}/denom_{k-1}` keeps every
/// intermediate a sum/product of nonnegatives, so the huge hitting times at
/// low-mass targets come out with full relative accuracy (the generic signed
/// elimination loses them to cancellation).
fn solve_bd_block<T: Real>(up: &[T], dn: &[T], excess: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let m = up.len();
    assert!(dn.len() == m && excess.len() == m && rhs.len() == m);
    let mut denom = vec![T::zero(); m];
    let mut y = vec![T::zero(); m];
    let mut t = T::zero();
    for k in 0..m {
        t = if k == 0 {
            excess[0] + dn[0]
        } else {
            excess[k] + dn[k] * t / denom[k - 1]
        };
        let den = up[k] + t;
        if !(den > T::zero()) {
            return Err(Error::Reducible { state: k });
        }
        denom[k] = den;
        y[k] = if k == 0 {
            rhs[0] / den
        } else {
            (rhs[k] + dn[k] * y[k - 1]) / den
        };
    }
    for k in (0..m.saturating_sub(1)).rev() {
        let next = y[k + 1];
        y[k] = y[k] + up[k] / denom[k] * next;
    }
    Ok(y)
}

/// Linear-solve route: for each target `j`, solve `(-Q restricted to the
/// complement of j) u = 1`. Birth-death chains split into two independent
/// tridiagonal blocks around `j`; dense generators use LU.
pub fn hitting_table<T: Real>(gen: &Generator<T>) -> Result<HittingTimeTable<T>> {
    let n = gen.n_states();
    let mut times = Mat::zeros(n, n);
    match gen {
        Generator::BirthDeath(bd) => {
            for j in 0..n {
                // block below j: states 0..j-1, coupled to j through b_{j-1}
                if j > 0 {
                    let m = j;
                    let up: Vec<T> = (0..m)
                        .map(|k| if k + 1 < m { bd.b(k) } else { T::zero() })
                        .collect();
                    let dn: Vec<T> = (0..m)
                        .map(|k| if k > 0 { bd.d(k) } else { T::zero() })
                        .collect();
                    let excess: Vec<T> = (0..m)
                        .map(|k| if k + 1 < m { T::zero() } else { bd.b(k) })
                        .collect();
                    let ones = vec![T::one(); m];
                    let u = solve_bd_block(&up, &dn, &excess, &ones)?;
                    for (k, &uk) in u.iter().enumerate() {
                        times[(k, j)] = uk;
                    }
                }
                // block above j: states j+1..n-1, coupled to j through d_{j+1}
                if j + 1 < n {
                    let m = n - j - 1;
                    let up: Vec<T> = (0..m).map(|t| bd.b(j + 1 + t)).collect();
                    let dn: Vec<T> = (0..m)
                        .map(|t| if t > 0 { bd.d(j + 1 + t) } else { T::zero() })
                        .collect();
                    let excess: Vec<T> = (0..m)
                        .map(|t| if t == 0 { bd.d(j + 1) } else { T::zero() })
                        .collect();
                    let ones = vec![T::one(); m];
                    let u = solve_bd_block(&up, &dn, &excess, &ones)?;
                    for (t, &ut) in u.iter().enumerate() {
                        times[(j + 1 + t, j)] = ut;
                    }
                }
            }
        }
        Generator::Dense(rm) => {
            let q = rm.q();
            for j in 0..n {
                let keep: Vec<usize> = (0..n).filter(|&i| i != j).collect();
                let a = Mat::from_fn(n - 1, n - 1, |r, c| -q[(keep[r], keep[c])]);
                let ones = vec![T::one(); n - 1];
                let u = solve_dense(&a, &ones)?;
                for (r, &state) in keep.iter().enumerate() {
                    times[(state, j)] = u[r];
                }
            }
        }
    }
    Ok(HittingTimeTable {
        times,
        method: HitMethod::LinearSolve,
    })
}

/// Cumulative reciprocal-eigenvalue sums `s(m) = sum_k 1/lambda_k^{[0,m-1]}`
/// for `m = 0..=n`.
fn recip_sums<T: Real>(gen: &BirthDeathGenerator<T>) -> Result<Vec<T>> {
    let n = gen.n_states();
    let mut s = Vec::with_capacity(n + 1);
    s.push(T::zero());
    for m in 1..=n {
        let vals = restricted_eigenvalues(gen, m)?;
        s.push(vals.iter().map(|&l| T::one() / l).sum());
    }
    Ok(s)
}

/// Eigenvalue-difference (Fill) formula for a single pair. The `i > j`
/// branch runs the formula on the index-reversed chain.
pub fn hit_eigen_formula<T: Real>(gen: &BirthDeathGenerator<T>, i: usize, j: usize) -> Result<T> {
    if i == j {
        return Ok(T::zero());
    }
    let sum_m = |g: &BirthDeathGenerator<T>, m: usize| -> Result<T> {
        if m == 0 {
            return Ok(T::zero());
        }
        let vals = restricted_eigenvalues(g, m)?;
        Ok(vals.iter().map(|&l| T::one() / l).sum())
    };
    if i < j {
        Ok(sum_m(gen, j)? - sum_m(gen, i)?)
    } else {
        let w = gen.window_upper();
        let mirror = gen.mirrored()?;
        Ok(sum_m(&mirror, w - j)? - sum_m(&mirror, w - i)?)
    }
}

/// Full table via the eigenvalue formula.
pub fn hitting_table_eigen<T: Real>(gen: &BirthDeathGenerator<T>) -> Result<HittingTimeTable<T>> {
    let n = gen.n_states();
    let w = gen.window_upper();
    let s_fwd = recip_sums(gen)?;
    let mirror = gen.mirrored()?;
    let s_bwd = recip_sums(&mirror)?;
    let times = Mat::from_fn(n, n, |i, j| {
        if i < j {
            s_fwd[j] - s_fwd[i]
        } else if i > j {
            s_bwd[w - j] - s_bwd[w - i]
        } else {
            T::zero()
        }
    });
    Ok(HittingTimeTable {
        times,
        method: HitMethod::EigenFormula,
    })
}

/// `E_x(tau_A)` via a linear solve on the complement of `A`; zero if `x` is
/// already in `A`.
pub fn hit_set<T: Real>(gen: &Generator<T>, x: usize, set: &[usize]) -> Result<T> {
    let n = gen.n_states();
    assert!(!set.is_empty(), "target set must be nonempty");
    assert!(x < n);
    let mut in_set = vec![false; n];
    for &a in set {
        assert!(a < n);
        in_set[a] = true;
    }
    if in_set[x] {
        return Ok(T::zero());
    }
    let q = gen.rate_matrix();
    let keep: Vec<usize> = (0..n).filter(|&i| !in_set[i]).collect();
    let a = Mat::from_fn(keep.len(), keep.len(), |r, c| -q[(keep[r], keep[c])]);
    let ones = vec![T::one(); keep.len()];
    let u = solve_dense(&a, &ones)?;
    let pos = keep.iter().position(|&s| s == x).expect("x not in set");
    Ok(u[pos])
}

/// Signed hitting-time gradient toward `j`: entry `i` is
/// `E_i(tau_j) - E_{i+1}(tau_j)`, which is `+pi([0,i])/(b_i pi_i)` below `j`
/// and `-pi([i+1,N])/(b_i pi_i)` at or above `j`.
pub fn hit_gradient<T: Real>(gen: &BirthDeathGenerator<T>, j: usize) -> Vec<T> {
    let pi = gen.target();
    let w = gen.window_upper();
    let tails = window_tails(pi);
    (0..w)
        .map(|i| {
            let denom = gen.b(i) * pi.mass(i);
            if i < j {
                pi.cdf(i) / denom
            } else {
                -tails[i] / denom
            }
        })
        .collect()
}

/// Existence sum for the deviation kernel.
#[derive(Debug, Clone)]
pub struct Summability<T> {
    /// Windowed `sum_i pi(i) E_i(tau_0)`.
    pub value: T,
    /// Whether the partial sums have plateaued at the window end (always true
    /// for finite supports).
    pub converged: bool,
}

/// `sum_i pi(i) E_i(tau_0)` with a partial-sum plateau check on truncated
/// windows.
pub fn summability<T: Real>(gen: &Generator<T>) -> Result<Summability<T>> {
    let n = gen.n_states();
    let pi = gen.stationary();
    let col0: Vec<T> = match gen {
        Generator::BirthDeath(bd) => {
            let mut col = Vec::with_capacity(n);
            let mut acc = T::zero();
            col.push(T::zero());
            for k in 0..n - 1 {
                acc = acc + pi.tail(k) / (bd.b(k) * pi.mass(k));
                col.push(acc);
            }
            col
        }
        Generator::Dense(_) => {
            let table = hitting_table(gen)?;
            (0..n).map(|i| table.time(i, 0)).collect()
        }
    };
    let terms: Vec<T> = (0..n).map(|i| pi.mass(i) * col0[i]).collect();
    let value: T = terms.iter().copied().sum();
    let finite_source = pi.source().support_upper().is_some();
    let converged = if finite_source || n < 4 {
        true
    } else {
        let tail_len = (n / 10).max(2);
        let tail_sum: T = terms[n - tail_len..].iter().copied().sum();
        tail_sum <= T::of(1e-10) * (T::one() + value)
    };
    Ok(Summability { value, converged })
}
