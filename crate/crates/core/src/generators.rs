//! Markov generators: the canonical birth-death chain that is stationary for
//! any target pmf, the example chains (binomial birth-death, Bernoulli-Laplace,
//! complete graph), and general dense rate matrices.

use crate::distributions::{make_custom_pmf, make_pmf, truncate, Family, TruncatedPmf};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

/// Relative residual threshold for reversibility / stationarity diagnostics.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Birth-death generator on the window `[0, w]` of its target distribution.
/// The top birth rate is zero (reflecting boundary), so the chain is an exact
/// finite chain whose stationary law is the window pmf.
#[derive(Debug, Clone)]
pub struct BirthDeathGenerator<T: Real> {
    /// `b_i` for `i` in `0..w`.
    birth: Vec<T>,
    /// `d_i` for `i` in `1..=w`, stored at `i-1`.
    death: Vec<T>,
    target: TruncatedPmf<T>,
}

impl<T: Real> BirthDeathGenerator<T> {
    pub fn n_states(&self) -> usize {
        self.target.n_states()
    }

    pub fn window_upper(&self) -> usize {
        self.target.window_upper()
    }

    /// Birth rate `b_i`; zero at the reflecting top state.
    pub fn b(&self, i: usize) -> T {
        if i < self.birth.len() {
            self.birth[i]
        } else {
            T::zero()
        }
    }

    /// Death rate `d_i`; zero at state 0.
    pub fn d(&self, i: usize) -> T {
        if i == 0 || i > self.death.len() {
            T::zero()
        } else {
            self.death[i - 1]
        }
    }

    pub fn target(&self) -> &TruncatedPmf<T> {
        &self.target
    }

    pub fn rate_matrix(&self) -> Mat<T> {
        let n = self.n_states();
        let mut q = Mat::zeros(n, n);
        for i in 0..n {
            let b = self.b(i);
            let d = self.d(i);
            if i + 1 < n {
                q[(i, i + 1)] = b;
            }
            if i > 0 {
                q[(i, i - 1)] = d;
            }
            q[(i, i)] = -(b + d);
        }
        q
    }

    /// Index-reversed chain on the same window: state `k` maps to `w - k`,
    /// so `b'_k = d_{w-k}` and `d'_k = b_{w-k}`. Detailed balance carries
    /// over with the reversed (renormalized) window masses.
    pub fn mirrored(&self) -> Result<BirthDeathGenerator<T>> {
        let w = self.window_upper();
        let birth: Vec<T> = (0..w).map(|k| self.d(w - k)).collect();
        let death: Vec<T> = (1..=w).map(|k| self.b(w - k)).collect();
        let mut weights: Vec<T> = self.target.masses().to_vec();
        weights.reverse();
        let pmf = make_custom_pmf(&weights)?;
        let target = truncate(&pmf, T::zero())?;
        Ok(BirthDeathGenerator {
            birth,
            death,
            target,
        })
    }

    /// Max detailed-balance residual, relative to the local probability flux.
    pub fn detailed_balance_residual(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.window_upper() {
            let up = self.target.mass(i) * self.b(i);
            let down = self.target.mass(i + 1) * self.d(i + 1);
            let scale = up.max(down);
            if scale > T::zero() {
                worst = worst.max((up - down).abs() / scale);
            }
        }
        worst
    }
}

/// Dense rate matrix with a declared stationary distribution.
#[derive(Debug, Clone)]
pub struct RateMatrix<T: Real> {
    q: Mat<T>,
    stationary: TruncatedPmf<T>,
    reversible: bool,
}

impl<T: Real> RateMatrix<T> {
    /// Assemble without validation; `validate` reports any inconsistency.
    pub fn from_parts(q: Mat<T>, stationary: TruncatedPmf<T>, reversible: bool) -> Self {
        assert_eq!(q.rows(), stationary.n_states());
        RateMatrix {
            q,
            stationary,
            reversible,
        }
    }

    pub fn q(&self) -> &Mat<T> {
        &self.q
    }

    pub fn stationary(&self) -> &TruncatedPmf<T> {
        &self.stationary
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }
}

/// Either kind of generator, unified for the downstream pipelines.
#[derive(Debug, Clone)]
pub enum Generator<T: Real> {
    BirthDeath(BirthDeathGenerator<T>),
    Dense(RateMatrix<T>),
}

impl<T: Real> Generator<T> {
    pub fn n_states(&self) -> usize {
        match self {
            Generator::BirthDeath(g) => g.n_states(),
            Generator::Dense(g) => g.q.rows(),
        }
    }

    pub fn stationary(&self) -> &TruncatedPmf<T> {
        match self {
            Generator::BirthDeath(g) => g.target(),
            Generator::Dense(g) => g.stationary(),
        }
    }

    pub fn rate_matrix(&self) -> Mat<T> {
        match self {
            Generator::BirthDeath(g) => g.rate_matrix(),
            Generator::Dense(g) => g.q.clone(),
        }
    }

    pub fn birth_death(&self) -> Option<&BirthDeathGenerator<T>> {
        match self {
            Generator::BirthDeath(g) => Some(g),
            Generator::Dense(_) => None,
        }
    }
}

impl<T: Real> From<BirthDeathGenerator<T>> for Generator<T> {
    fn from(g: BirthDeathGenerator<T>) -> Self {
        Generator::BirthDeath(g)
    }
}

impl<T: Real> From<RateMatrix<T>> for Generator<T> {
    fn from(g: RateMatrix<T>) -> Self {
        Generator::Dense(g)
    }
}

/// The canonical birth-death chain for a target pmf:
/// `b_i = (i+1) pi(i+1)/pi(i)`, `d_i = i`. Detailed balance holds by
/// construction since `pi_i b_i = (i+1) pi_{i+1} = pi_{i+1} d_{i+1}`.
pub fn canonical_bd<T: Real>(target: TruncatedPmf<T>) -> Result<BirthDeathGenerator<T>> {
    let w = target.window_upper();
    let mut birth = Vec::with_capacity(w);
    for i in 0..w {
        let m = target.mass(i);
        if m <= T::zero() {
            return Err(Error::InteriorZeroMass { index: i });
        }
        birth.push(T::of_usize(i + 1) * target.mass(i + 1) / m);
    }
    let death = (1..=w).map(T::of_usize).collect();
    Ok(BirthDeathGenerator {
        birth,
        death,
        target,
    })
}

/// Birth-death chain from explicit rates; the stationary pmf is recovered in
/// log space from `pi(k) ~ prod_{i<k} b_i / d_{i+1}` and normalized.
pub fn bd_from_rates<T: Real>(birth: Vec<T>, death: Vec<T>) -> Result<BirthDeathGenerator<T>> {
    if birth.len() != death.len() {
        return Err(Error::InvalidParameter {
            name: "death",
            message: format!(
                "expected {} death rates to match {} birth rates",
                birth.len(),
                birth.len()
            ),
        });
    }
    let w = birth.len();
    for (i, &b) in birth.iter().enumerate() {
        if !(b > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "birth",
                message: format!("birth rate at {i} must be positive"),
            });
        }
    }
    for (i, &d) in death.iter().enumerate() {
        if !(d > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "death",
                message: format!("death rate at {} must be positive", i + 1),
            });
        }
    }
    let mut logw = Vec::with_capacity(w + 1);
    logw.push(T::zero());
    for k in 0..w {
        let prev = logw[k];
        logw.push(prev + birth[k].ln() - death[k].ln());
    }
    let top = logw.iter().copied().fold(T::neg_infinity(), T::max);
    if !top.is_finite() {
        return Err(Error::NonSummable);
    }
    let weights: Vec<T> = logw.iter().map(|&lw| (lw - top).exp()).collect();
    let pmf = make_custom_pmf(&weights)?;
    let target = truncate(&pmf, T::zero())?;
    Ok(BirthDeathGenerator {
        birth,
        death,
        target,
    })
}

/// Birth-death chain from rates together with a declared target; rejects the
/// pair if detailed balance fails.
pub fn bd_with_target<T: Real>(
    birth: Vec<T>,
    death: Vec<T>,
    target: TruncatedPmf<T>,
) -> Result<BirthDeathGenerator<T>> {
    assert_eq!(birth.len(), target.window_upper());
    assert_eq!(death.len(), target.window_upper());
    let gen = BirthDeathGenerator {
        birth,
        death,
        target,
    };
    let res = gen.detailed_balance_residual();
    if res.as_f64() > VALIDATION_TOL {
        return Err(Error::NotReversible {
            residual: res.as_f64(),
        });
    }
    Ok(gen)
}

/// Binomial example chain: `b_i = p(n-i)`, `d_i = (1-p)i`, stationary
/// binomial(n, p). Distinct from the canonical chain of the same target.
pub fn binomial_paper_chain<T: Real>(n: usize, p: f64) -> Result<BirthDeathGenerator<T>> {
    let pmf = make_pmf::<T>(Family::Binomial { n, p })?;
    let target = truncate(&pmf, T::zero())?;
    let pt = T::of(p);
    let qt = T::one() - pt;
    let birth = (0..n).map(|i| pt * T::of_usize(n - i)).collect();
    let death = (1..=n).map(|i| qt * T::of_usize(i)).collect();
    bd_with_target(birth, death, target)
}

/// Bernoulli-Laplace chain: `b_i = (r-i)(n-r-i)/(r(n-r))`,
/// `d_i = i^2/(r(n-r))`, on states `0..=min(r, n-r)`.
///
/// The stationary law is recovered from the rate recursion; it is the
/// hypergeometric count of matches in `n - r` draws, `pi(i) = C(r,i)
/// C(n-r,i) / C(n,r)` (for `n = 2r` this equals `Hypergeometric { n, r }`).
pub fn bernoulli_laplace_chain<T: Real>(n: usize, r: usize) -> Result<BirthDeathGenerator<T>> {
    if r == 0 || r >= n {
        return Err(Error::InvalidParameter {
            name: "r",
            message: format!("need 0 < r < n, got r = {r}, n = {n}"),
        });
    }
    let scale = T::of_usize(r) * T::of_usize(n - r);
    let top = r.min(n - r);
    let birth = (0..top)
        .map(|i| T::of_usize(r - i) * T::of_usize(n - r - i) / scale)
        .collect();
    let death = (1..=top)
        .map(|i| T::of_usize(i) * T::of_usize(i) / scale)
        .collect();
    bd_from_rates(birth, death)
}

/// Galton-Watson-with-immigration chain: the canonical chain of the negative
/// binomial target, `b_i = p(r+i)`, `d_i = i`.
pub fn gwi_chain<T: Real>(r: f64, p: f64, trunc_tol: T) -> Result<BirthDeathGenerator<T>> {
    let pmf = make_pmf::<T>(Family::NegativeBinomial { r, p })?;
    canonical_bd(truncate(&pmf, trunc_tol)?)
}

/// Same chain on an explicitly chosen window (for hitting-time tables that
/// must cover start states beyond the tail-tolerance window).
pub fn gwi_chain_window<T: Real>(
    r: f64,
    p: f64,
    window_upper: usize,
) -> Result<BirthDeathGenerator<T>> {
    let pt = T::of(p);
    let rt = T::of(r);
    let birth: Vec<T> = (0..window_upper)
        .map(|i| pt * (rt + T::of_usize(i)))
        .collect();
    let death: Vec<T> = (1..=window_upper).map(T::of_usize).collect();
    bd_from_rates(birth, death)
}

/// Canonical chain of the geometric target: `b_i = (i+1)(1-p)`, `d_i = i`.
pub fn geometric_canonical<T: Real>(p: f64, trunc_tol: T) -> Result<BirthDeathGenerator<T>> {
    let pmf = make_pmf::<T>(Family::Geometric { p })?;
    canonical_bd(truncate(&pmf, trunc_tol)?)
}

/// Complete-graph chain on `n` states: `q(i,j) = rate` for `i != j`,
/// stationary uniform. Symmetric, hence reversible.
pub fn complete_graph_generator<T: Real>(n: usize, rate: T) -> Result<RateMatrix<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            message: "complete graph needs n >= 2".into(),
        });
    }
    if !(rate > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "rate",
            message: "rate must be positive".into(),
        });
    }
    let q = Mat::from_fn(n, n, |i, j| {
        if i == j {
            -rate * T::of_usize(n - 1)
        } else {
            rate
        }
    });
    let pmf = make_pmf::<T>(Family::Uniform { n })?;
    let stationary = truncate(&pmf, T::zero())?;
    Ok(RateMatrix::from_parts(q, stationary, true))
}

/// Validation diagnostics: worst relative residuals of the generator
/// invariants.
#[derive(Debug, Clone)]
pub struct Diagnostics<T> {
    pub detailed_balance: T,
    pub row_sums: T,
    pub stationarity: T,
    pub pass: bool,
}

/// Measure detailed balance, row sums and stationarity of a generator
/// against its declared target. Purely diagnostic.
pub fn validate<T: Real>(gen: &Generator<T>) -> Diagnostics<T> {
    let q = gen.rate_matrix();
    let pi = gen.stationary();
    let n = q.rows();

    let mut db = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let fwd = pi.mass(i) * q[(i, j)];
            let bwd = pi.mass(j) * q[(j, i)];
            let scale = fwd.abs().max(bwd.abs());
            if scale > T::zero() {
                db = db.max((fwd - bwd).abs() / scale);
            }
        }
    }

    let diag_scale = (0..n)
        .map(|i| q[(i, i)].abs())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let mut rows = T::zero();
    for i in 0..n {
        let s: T = q.row(i).iter().copied().sum();
        rows = rows.max(s.abs() / diag_scale);
    }

    let masses: Vec<T> = (0..n).map(|i| pi.mass(i)).collect();
    let piq = q.vecmat(&masses);
    let mut stat = T::zero();
    for j in 0..n {
        let mut scale = T::zero();
        for i in 0..n {
            scale = scale + masses[i] * q[(i, j)].abs();
        }
        if scale > T::zero() {
            stat = stat.max(piq[j].abs() / scale);
        }
    }

    let tol = T::of(VALIDATION_TOL);
    Diagnostics {
        detailed_balance: db,
        row_sums: rows,
        stationarity: stat,
        pass: db <= tol && rows <= tol && stat <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{make_pmf, Family};

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn canonical_binomial_two_half() {
        let pmf = make_pmf::<f64>(Family::Binomial { n: 2, p: 0.5 }).unwrap();
        let gen = canonical_bd(truncate(&pmf, 0.0).unwrap()).unwrap();
        assert!(rel_close(gen.b(0), 2.0, 1e-14));
        assert!(rel_close(gen.b(1), 1.0, 1e-14));
        assert_eq!(gen.d(1), 1.0);
        assert_eq!(gen.d(2), 2.0);
        assert!(gen.detailed_balance_residual() < 1e-14);
    }

    #[test]
    fn canonical_geometric_rates() {
        let p = 0.3;
        let gen = geometric_canonical::<f64>(p, 1e-12).unwrap();
        for i in 0..gen.window_upper() {
            assert!(rel_close(gen.b(i), (i as f64 + 1.0) * (1.0 - p), 1e-13));
            assert_eq!(gen.d(i + 1), (i + 1) as f64);
        }
    }

    #[test]
    fn gwi_rates_match_formula() {
        let (r, p) = (2.0, 0.4);
        let gen = gwi_chain::<f64>(r, p, 1e-12).unwrap();
        for i in 0..gen.window_upper() {
            assert!(rel_close(gen.b(i), p * (r + i as f64), 1e-12));
        }
        let diag = validate(&gen.clone().into());
        assert!(diag.pass, "{diag:?}");
    }

    #[test]
    fn bernoulli_laplace_stationary_is_hypergeometric() {
        // rate-recursion route
        let (n, r) = (4usize, 2usize);
        let scale = (r * (n - r)) as f64;
        let birth: Vec<f64> = (0..r)
            .map(|i| ((r - i) * (n - r - i)) as f64 / scale)
            .collect();
        let death: Vec<f64> = (1..=r).map(|i| (i * i) as f64 / scale).collect();
        let gen = bd_from_rates(birth, death).unwrap();
        let hyper = make_pmf::<f64>(Family::Hypergeometric { n, r }).unwrap();
        for i in 0..=r {
            assert!(rel_close(gen.target().mass(i), hyper.mass(i), 1e-13));
        }
        // declared-target route agrees
        let declared = bernoulli_laplace_chain::<f64>(n, r).unwrap();
        assert!(declared.detailed_balance_residual() < 1e-13);
    }

    #[test]
    fn binomial_paper_chain_stationary_recovered() {
        let (n, p) = (6usize, 0.3);
        let pt = p;
        let birth: Vec<f64> = (0..n).map(|i| pt * (n - i) as f64).collect();
        let death: Vec<f64> = (1..=n).map(|i| (1.0 - pt) * i as f64).collect();
        let gen = bd_from_rates(birth, death).unwrap();
        let binom = make_pmf::<f64>(Family::Binomial { n, p }).unwrap();
        for i in 0..=n {
            assert!(rel_close(gen.target().mass(i), binom.mass(i), 1e-13));
        }
    }

    #[test]
    fn symmetric_two_state() {
        let gen = bd_from_rates(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(gen.target().mass(0), 0.5);
        assert_eq!(gen.target().mass(1), 0.5);
    }

    #[test]
    fn complete_graph_two_states() {
        let g = complete_graph_generator::<f64>(2, 1.0).unwrap();
        assert_eq!(g.q()[(0, 0)], -1.0);
        assert_eq!(g.q()[(0, 1)], 1.0);
        assert_eq!(g.q()[(1, 0)], 1.0);
        assert_eq!(g.q()[(1, 1)], -1.0);
    }

    #[test]
    fn canonical_stationary_roundtrip() {
        // recomputing the stationary pmf from canonical rates reproduces the input
        let pmf = make_pmf::<f64>(Family::Binomial { n: 15, p: 0.41 }).unwrap();
        let gen = canonical_bd(truncate(&pmf, 0.0).unwrap()).unwrap();
        let rates_birth: Vec<f64> = (0..gen.window_upper()).map(|i| gen.b(i)).collect();
        let rates_death: Vec<f64> = (1..=gen.window_upper()).map(|i| gen.d(i)).collect();
        let recovered = bd_from_rates(rates_birth, rates_death).unwrap();
        for i in 0..=gen.window_upper() {
            assert!(rel_close(recovered.target().mass(i), pmf.mass(i), 1e-12));
        }
    }

    #[test]
    fn validate_passes_on_exact_construction() {
        let pmf = make_pmf::<f64>(Family::Binomial { n: 10, p: 0.3 }).unwrap();
        let gen = canonical_bd(truncate(&pmf, 0.0).unwrap()).unwrap();
        let diag = validate(&gen.into());
        assert!(diag.detailed_balance < 1e-12);
        assert!(diag.row_sums < 1e-12);
        assert!(diag.stationarity < 1e-12);
        assert!(diag.pass);
    }

    #[test]
    fn validate_flags_perturbed_matrix() {
        let mut g = complete_graph_generator::<f64>(4, 1.0).unwrap();
        g.q[(0, 1)] = 1.5; // break stationarity and row sums
        let diag = validate(&g.into());
        assert!(!diag.pass);
        assert!(diag.stationarity > 1e-3);
    }

    #[test]
    fn paper_example_chains_are_reversible() {
        let chains: Vec<Generator<f64>> = vec![
            binomial_paper_chain(12, 0.5).unwrap().into(),
            bernoulli_laplace_chain(10, 4).unwrap().into(),
            geometric_canonical(0.5, 1e-12).unwrap().into(),
            gwi_chain(2.0, 0.4, 1e-12).unwrap().into(),
            complete_graph_generator(5, 1.0).unwrap().into(),
        ];
        for gen in &chains {
            assert!(validate(gen).pass);
        }
    }
}
