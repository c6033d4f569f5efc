//! Spectra of reversible generators: eigenvalues of `-L` via similarity to a
//! symmetric matrix, relaxation time, the eigentime identity, and restricted
//! spectra for the eigenvalue hitting-time formula.

use crate::error::{Error, Result};
use crate::generators::{BirthDeathGenerator, Generator, VALIDATION_TOL};
use crate::hitting::HittingTimeTable;
use crate::linalg::{jacobi_symmetric_eigen, symmetric_tridiagonal_eigenvalues, Mat};
use crate::scalar::Real;

/// Eigenvalues of `-L`, sorted ascending with `lambda_0` snapped to zero.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    eigenvalues: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Spectral gap `lambda_1`.
    pub fn gap(&self) -> T {
        self.eigenvalues[1]
    }
}

/// Symmetrized tridiagonal representation of `-L` for a birth-death chain:
/// diagonal `b_i + d_i`, off-diagonal `-sqrt(b_i d_{i+1})`.
fn bd_symmetrized<T: Real>(gen: &BirthDeathGenerator<T>, m: usize) -> (Vec<T>, Vec<T>) {
    let diag: Vec<T> = (0..m).map(|i| gen.b(i) + gen.d(i)).collect();
    let off: Vec<T> = (0..m.saturating_sub(1))
        .map(|i| -(gen.b(i) * gen.d(i + 1)).sqrt())
        .collect();
    (diag, off)
}

/// Full spectrum of `-L`.
pub fn eigenvalues<T: Real>(gen: &Generator<T>) -> Result<Spectrum<T>> {
    let mut vals = match gen {
        Generator::BirthDeath(bd) => {
            let (diag, off) = bd_symmetrized(bd, bd.n_states());
            symmetric_tridiagonal_eigenvalues(&diag, &off)?
        }
        Generator::Dense(rm) => {
            let diag = crate::generators::validate(gen);
            if diag.detailed_balance.as_f64() > VALIDATION_TOL {
                return Err(Error::NotReversible {
                    residual: diag.detailed_balance.as_f64(),
                });
            }
            let n = rm.q().rows();
            let pi = rm.stationary();
            let s = Mat::from_fn(n, n, |i, j| {
                -(pi.mass(i) / pi.mass(j)).sqrt() * rm.q()[(i, j)]
            });
            // force exact symmetry before Jacobi
            let sym = Mat::from_fn(n, n, |i, j| (s[(i, j)] + s[(j, i)]) * T::half());
            jacobi_symmetric_eigen(&sym)?.0
        }
    };
    let lam_max = vals.last().copied().unwrap_or_else(T::zero);
    let snap = T::of(1e-10) * lam_max;
    if vals[0].abs() > snap && vals.len() > 1 {
        return Err(Error::SpectrumConditioning {
            value: vals[0].as_f64(),
            scale: lam_max.as_f64(),
        });
    }
    vals[0] = T::zero();
    Ok(Spectrum { eigenvalues: vals })
}

/// Spectrum of `-L` for a birth-death chain given by its rates alone
/// (`birth[i] = b_i`, `death[i] = d_{i+1}`). The eigenvalues do not involve
/// the stationary law, so this stays usable when the stationary masses
/// underflow (very large windows).
pub fn bd_rate_spectrum<T: Real>(birth: &[T], death: &[T]) -> Result<Spectrum<T>> {
    assert_eq!(birth.len(), death.len());
    let n = birth.len() + 1;
    let b = |i: usize| if i < birth.len() { birth[i] } else { T::zero() };
    let d = |i: usize| if i == 0 { T::zero() } else { death[i - 1] };
    let diag: Vec<T> = (0..n).map(|i| b(i) + d(i)).collect();
    let off: Vec<T> = (0..n - 1).map(|i| -(b(i) * d(i + 1)).sqrt()).collect();
    let mut vals = symmetric_tridiagonal_eigenvalues(&diag, &off)?;
    let lam_max = vals.last().copied().unwrap_or_else(T::zero);
    let snap = T::of(1e-10) * lam_max;
    if vals[0].abs() > snap && vals.len() > 1 {
        return Err(Error::SpectrumConditioning {
            value: vals[0].as_f64(),
            scale: lam_max.as_f64(),
        });
    }
    vals[0] = T::zero();
    Ok(Spectrum { eigenvalues: vals })
}

/// `L D L^T` data of the top-left `m x m` principal submatrix of `-L`:
/// pivots `q_k` and `e_k = l_k^2 q_k` (the squared symmetrized off-diagonal
/// over the pivot). The pivot recurrence is rearranged so every intermediate
/// is a sum/product of nonnegatives; that preserves the relative accuracy of
/// the exponentially small bottom pivot, which a plain signed elimination
/// destroys.
fn restricted_ldl<T: Real>(gen: &BirthDeathGenerator<T>, m: usize) -> (Vec<T>, Vec<T>) {
    let mut q = Vec::with_capacity(m);
    let mut e = Vec::with_capacity(m.saturating_sub(1));
    let mut t = T::zero();
    for k in 0..m {
        // t_k = excess_k + d_k t_{k-1}/q_{k-1}; q_k = up_k + t_k, where the
        // last row's killed upward rate moves from `up` into `excess`
        let excess = if k + 1 == m { gen.b(k) } else { T::zero() };
        t = if k == 0 {
            gen.d(0) + excess
        } else {
            gen.d(k) * t / q[k - 1] + excess
        };
        let up = if k + 1 == m { T::zero() } else { gen.b(k) };
        q.push(up + t);
        if k + 1 < m {
            e.push(gen.b(k) * gen.d(k + 1) / q[k]);
        }
    }
    (q, e)
}

/// Number of eigenvalues of the factored matrix strictly below `s`
/// (differential Sturm count on the `L D L^T` data).
fn ldl_negcount<T: Real>(q: &[T], e: &[T], s: T) -> usize {
    let m = q.len();
    let tiny = T::min_positive_value();
    let mut neg = 0usize;
    let mut t = -s;
    for k in 0..m {
        let mut dplus = q[k] + t;
        if dplus == T::zero() {
            dplus = -tiny;
        }
        if dplus < T::zero() {
            neg += 1;
        }
        if k + 1 < m {
            t = t * (e[k] / dplus) - s;
        }
    }
    neg
}

/// Spectrum of the top-left `m x m` principal submatrix of `-L` (the chain
/// killed at state `m`); all eigenvalues strictly positive, ascending.
///
/// Bisection on the factored Sturm count rather than QL: the smallest
/// restricted eigenvalue is of order `1/E_0(tau_m)` and can sit fifteen
/// orders of magnitude under the rate scale, where QL only delivers
/// absolute accuracy.
pub fn restricted_eigenvalues<T: Real>(
    gen: &BirthDeathGenerator<T>,
    m: usize,
) -> Result<Vec<T>> {
    assert!(m >= 1 && m <= gen.n_states());
    let (q, e) = restricted_ldl(gen, m);
    // Gershgorin upper bound on the assembled tridiagonal
    let mut hi0 = T::zero();
    for k in 0..m {
        let a = gen.b(k) + gen.d(k);
        let lo_off = if k > 0 {
            (gen.b(k - 1) * gen.d(k)).sqrt()
        } else {
            T::zero()
        };
        let hi_off = if k + 1 < m {
            (gen.b(k) * gen.d(k + 1)).sqrt()
        } else {
            T::zero()
        };
        hi0 = hi0.max(a + lo_off + hi_off);
    }
    hi0 = hi0 * (T::one() + T::of(1e-12)) + T::min_positive_value();
    let rel = T::of(1e-14);
    let mut vals = Vec::with_capacity(m);
    for i in 0..m {
        let mut lo = T::zero();
        let mut hi = hi0;
        for _ in 0..220 {
            if hi - lo <= rel * hi {
                break;
            }
            // geometric midpoints once a positive floor exists, so that
            // eigenvalues far below the rate scale converge relatively
            let mid = if lo > T::zero() && hi < lo * T::of(4.0) {
                (lo + hi) * T::half()
            } else if lo > T::zero() {
                (lo * hi).sqrt()
            } else {
                hi * T::half()
            };
            if ldl_negcount(&q, &e, mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        vals.push((lo + hi) * T::half());
    }
    Ok(vals)
}

/// Relaxation time `1/lambda_1`.
pub fn t_rel<T: Real>(spectrum: &Spectrum<T>) -> T {
    T::one() / spectrum.gap()
}

/// Eigentime route: `t_av = sum_{k>=1} 1/lambda_k`.
pub fn t_av_eigentime<T: Real>(spectrum: &Spectrum<T>) -> T {
    spectrum.eigenvalues[1..]
        .iter()
        .map(|&l| T::one() / l)
        .sum()
}

/// Random-target route: `t_av = sum_{i,j} pi(i) pi(j) E_i(tau_j)`.
pub fn t_av_random_target<T: Real>(table: &HittingTimeTable<T>, masses: &[T]) -> T {
    let n = masses.len();
    let mut total = T::zero();
    for i in 0..n {
        let mut row = T::zero();
        for j in 0..n {
            row = row + masses[j] * table.time(i, j);
        }
        total = total + masses[i] * row;
    }
    total
}
