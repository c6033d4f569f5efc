//! Catalog of target distributions on `[0, N]` with exact mass, cdf and tail
//! evaluation, plus controlled truncation of infinite supports.
//!
//! Masses are evaluated through multiplicative ratio recurrences anchored at
//! the mode, never through factorials, so large parameter values stay inside
//! floating-point range.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Distribution family and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Uniform on `[0, n-1]`.
    Uniform { n: usize },
    /// Binomial on `[0, n]`.
    Binomial { n: usize, p: f64 },
    /// Geometric on `N_0`: `pi(i) = p (1-p)^i`.
    Geometric { p: f64 },
    /// Hypergeometric on `[0, r]` with population `n`, `0 < 2r <= n`.
    Hypergeometric { n: usize, r: usize },
    /// Negative binomial on `N_0` with `pi(0) = (1-p)^r`, ratio `p(r+i)/(i+1)`.
    NegativeBinomial { r: f64, p: f64 },
    /// Arbitrary finite weights.
    Custom,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Uniform { n } => write!(f, "uniform(n={n})"),
            Family::Binomial { n, p } => write!(f, "binomial(n={n}, p={p})"),
            Family::Geometric { p } => write!(f, "geometric(p={p})"),
            Family::Hypergeometric { n, r } => write!(f, "hypergeometric(n={n}, r={r})"),
            Family::NegativeBinomial { r, p } => write!(f, "negative_binomial(r={r}, p={p})"),
            Family::Custom => write!(f, "custom"),
        }
    }
}

/// A discrete probability distribution on `[0, N]`, `N` possibly infinite.
#[derive(Debug, Clone)]
pub struct Pmf<T: Real> {
    family: Family,
    /// `None` means infinite support.
    support_upper: Option<usize>,
    /// Full-support masses for finite families; empty for infinite ones.
    masses: Vec<T>,
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter {
            name,
            message: format!("{p} must lie strictly inside (0, 1)"),
        });
    }
    Ok(())
}

/// Mode-anchored evaluation of a log-concave finite family from its mass
/// ratio `pi(i+1)/pi(i)`, normalized to sum to one.
fn masses_from_ratio<T: Real>(upper: usize, ratio: impl Fn(usize) -> T) -> Vec<T> {
    let mut mode = 0usize;
    while mode < upper && ratio(mode) >= T::one() {
        mode += 1;
    }
    let mut vals = vec![T::zero(); upper + 1];
    vals[mode] = T::one();
    for i in mode..upper {
        vals[i + 1] = vals[i] * ratio(i);
    }
    for i in (0..mode).rev() {
        vals[i] = vals[i + 1] / ratio(i);
    }
    let total: T = vals.iter().copied().sum();
    for v in vals.iter_mut() {
        *v = *v / total;
    }
    vals
}

/// Construct a catalog distribution.
pub fn make_pmf<T: Real>(family: Family) -> Result<Pmf<T>> {
    match family {
        Family::Uniform { n } => {
            if n < 1 {
                return Err(Error::InvalidParameter {
                    name: "n",
                    message: "uniform needs n >= 1".into(),
                });
            }
            let w = T::one() / T::of_usize(n);
            Ok(Pmf {
                family,
                support_upper: Some(n - 1),
                masses: vec![w; n],
            })
        }
        Family::Binomial { n, p } => {
            check_prob("p", p)?;
            let pt = T::of(p);
            let qt = T::one() - pt;
            let masses = masses_from_ratio(n, |i| {
                T::of_usize(n - i) / T::of_usize(i + 1) * pt / qt
            });
            Ok(Pmf {
                family,
                support_upper: Some(n),
                masses,
            })
        }
        Family::Geometric { p } => {
            check_prob("p", p)?;
            Ok(Pmf {
                family,
                support_upper: None,
                masses: Vec::new(),
            })
        }
        Family::Hypergeometric { n, r } => {
            if r < 1 || 2 * r > n {
                return Err(Error::InvalidParameter {
                    name: "r",
                    message: format!("hypergeometric needs 0 < 2r <= n, got r={r}, n={n}"),
                });
            }
            let masses = masses_from_ratio(r, |i| {
                let num = T::of_usize(r - i) * T::of_usize(r - i);
                let den = T::of_usize(i + 1) * T::of_usize(n - 2 * r + i + 1);
                num / den
            });
            Ok(Pmf {
                family,
                support_upper: Some(r),
                masses,
            })
        }
        Family::NegativeBinomial { r, p } => {
            check_prob("p", p)?;
            if !(r > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "r",
                    message: format!("negative binomial needs r > 0, got {r}"),
                });
            }
            Ok(Pmf {
                family,
                support_upper: None,
                masses: Vec::new(),
            })
        }
        Family::Custom => Err(Error::InvalidParameter {
            name: "family",
            message: "use make_custom_pmf for custom weights".into(),
        }),
    }
}

/// Normalize arbitrary nonnegative weights into a finite `Pmf`.
/// Trailing zeros shrink the support; an interior zero is rejected because it
/// would break irreducibility of any birth-death chain on the support.
pub fn make_custom_pmf<T: Real>(weights: &[T]) -> Result<Pmf<T>> {
    let upper = match weights.iter().rposition(|w| *w > T::zero()) {
        Some(i) => i,
        None => return Err(Error::AllZeroWeights),
    };
    let mut masses = Vec::with_capacity(upper + 1);
    for (i, &w) in weights[..=upper].iter().enumerate() {
        if !(w >= T::zero()) || !w.is_finite() {
            return Err(Error::InvalidParameter {
                name: "weights",
                message: format!("weight {i} is not a finite nonnegative number"),
            });
        }
        if w == T::zero() {
            return Err(Error::InteriorZeroMass { index: i });
        }
        masses.push(w);
    }
    let total: T = masses.iter().copied().sum();
    for m in masses.iter_mut() {
        *m = *m / total;
    }
    Ok(Pmf {
        family: Family::Custom,
        support_upper: Some(upper),
        masses,
    })
}

impl<T: Real> Pmf<T> {
    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Upper end of the support; `None` when infinite.
    pub fn support_upper(&self) -> Option<usize> {
        self.support_upper
    }

    /// Point mass at `i` (zero outside the support).
    pub fn mass(&self, i: usize) -> T {
        match (&self.family, self.support_upper) {
            (Family::Geometric { p }, _) => {
                let q = T::one() - T::of(*p);
                T::of(*p) * q.powi(i as i32)
            }
            (Family::NegativeBinomial { r, p }, _) => {
                let pt = T::of(*p);
                let rt = T::of(*r);
                let mut m = (T::one() - pt).powf(rt);
                for k in 0..i {
                    m = m * pt * (rt + T::of_usize(k)) / T::of_usize(k + 1);
                }
                m
            }
            (_, Some(upper)) => {
                if i <= upper {
                    self.masses[i]
                } else {
                    T::zero()
                }
            }
            _ => unreachable!("infinite support is geometric or negative binomial"),
        }
    }

    /// `sum_{i <= k} pi(i)`.
    pub fn cdf(&self, k: usize) -> T {
        match &self.family {
            Family::Geometric { .. } | Family::NegativeBinomial { .. } => {
                T::one() - self.tail(k)
            }
            _ => {
                let upper = self.support_upper.expect("finite support");
                self.masses[..=k.min(upper)].iter().copied().sum()
            }
        }
    }

    /// Exact upper tail `pi([k+1, N])`. For infinite families this is a
    /// closed form (geometric) or a convergent forward series (negative
    /// binomial), so it carries no truncation error.
    pub fn tail(&self, k: usize) -> T {
        match &self.family {
            Family::Uniform { n } => {
                if k + 1 >= *n {
                    T::zero()
                } else {
                    T::of_usize(n - 1 - k) / T::of_usize(*n)
                }
            }
            Family::Geometric { p } => {
                let q = T::one() - T::of(*p);
                q.powi(k as i32 + 1)
            }
            Family::NegativeBinomial { r, p } => {
                let pt = T::of(*p);
                let rt = T::of(*r);
                let mut term = self.mass(k + 1);
                let mut total = term;
                let mut j = k + 1;
                loop {
                    term = term * pt * (rt + T::of_usize(j)) / T::of_usize(j + 1);
                    let next = total + term;
                    if next == total || term < T::epsilon() * total {
                        break;
                    }
                    total = next;
                    j += 1;
                }
                total
            }
            _ => {
                // finite families: sum small-to-large from the top
                let upper = self.support_upper.expect("finite support");
                if k >= upper {
                    return T::zero();
                }
                let mut s = T::zero();
                for i in (k + 1..=upper).rev() {
                    s = s + self.masses[i];
                }
                s
            }
        }
    }
}

/// A finite computational window over a `Pmf`, with the mass beyond the
/// window recorded as an explicit error budget.
#[derive(Debug, Clone)]
pub struct TruncatedPmf<T: Real> {
    source: Pmf<T>,
    window_upper: usize,
    masses: Vec<T>,
    cdf: Vec<T>,
    tail_mass: T,
    renormalized: bool,
}

/// Hard cap on the truncation window search.
const WINDOW_SEARCH_CAP: usize = 5_000_000;

/// Smallest window with exact tail at most `tol`. Finite supports pass
/// through unchanged with zero tail mass.
pub fn truncate<T: Real>(pmf: &Pmf<T>, tol: T) -> Result<TruncatedPmf<T>> {
    let window_upper = match pmf.support_upper() {
        Some(upper) => upper,
        None => {
            let mut k = 0usize;
            while pmf.tail(k) > tol {
                k += 1;
                if k > WINDOW_SEARCH_CAP {
                    return Err(Error::NonSummable);
                }
            }
            k
        }
    };
    Ok(truncate_to_window(pmf, window_upper))
}

/// Fixed-window truncation (used when a test or report needs a window wider
/// than the tolerance-driven one).
pub fn truncate_to_window<T: Real>(pmf: &Pmf<T>, window_upper: usize) -> TruncatedPmf<T> {
    let window_upper = match pmf.support_upper() {
        Some(upper) => window_upper.min(upper),
        None => window_upper,
    };
    let mut masses = Vec::with_capacity(window_upper + 1);
    match &pmf.family {
        Family::Geometric { .. } | Family::NegativeBinomial { .. } => {
            // one recurrence pass instead of repeated O(i) lookups
            let mut m = pmf.mass(0);
            for i in 0..=window_upper {
                masses.push(m);
                m = m * pmf.mass_ratio(i);
            }
        }
        _ => {
            for i in 0..=window_upper {
                masses.push(pmf.mass(i));
            }
        }
    }
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = T::zero();
    for &m in &masses {
        acc = acc + m;
        cdf.push(acc);
    }
    let tail_mass = pmf.tail(window_upper);
    TruncatedPmf {
        source: pmf.clone(),
        window_upper,
        masses,
        cdf,
        tail_mass,
        renormalized: false,
    }
}

impl<T: Real> Pmf<T> {
    /// `pi(i+1) / pi(i)` for the infinite families.
    fn mass_ratio(&self, i: usize) -> T {
        match &self.family {
            Family::Geometric { p } => T::one() - T::of(*p),
            Family::NegativeBinomial { r, p } => {
                T::of(*p) * (T::of(*r) + T::of_usize(i)) / T::of_usize(i + 1)
            }
            _ => unreachable!("ratio recurrence only used for infinite families"),
        }
    }
}

impl<T: Real> TruncatedPmf<T> {
    /// Rescale the window masses to sum to one.
    pub fn renormalize(mut self) -> Self {
        let total: T = self.masses.iter().copied().sum();
        for m in self.masses.iter_mut() {
            *m = *m / total;
        }
        let mut acc = T::zero();
        for (c, &m) in self.cdf.iter_mut().zip(self.masses.iter()) {
            acc = acc + m;
            *c = acc;
        }
        self.renormalized = true;
        self
    }

    pub fn source(&self) -> &Pmf<T> {
        &self.source
    }

    pub fn family(&self) -> &Family {
        self.source.family()
    }

    pub fn window_upper(&self) -> usize {
        self.window_upper
    }

    pub fn n_states(&self) -> usize {
        self.window_upper + 1
    }

    pub fn tail_mass(&self) -> T {
        self.tail_mass
    }

    pub fn is_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> T {
        if i <= self.window_upper {
            self.masses[i]
        } else {
            T::zero()
        }
    }

    pub fn cdf(&self, k: usize) -> T {
        self.cdf[k.min(self.window_upper)]
    }

    /// Exact upper tail of the *source* distribution, unless renormalized, in
    /// which case the tail is taken within the window.
    pub fn tail(&self, k: usize) -> T {
        if self.renormalized {
            if k >= self.window_upper {
                T::zero()
            } else {
                let mut s = T::zero();
                for i in (k + 1..=self.window_upper).rev() {
                    s = s + self.masses[i];
                }
                s
            }
        } else {
            self.source.tail(k)
        }
    }

    /// Minimum mass over the active window.
    pub fn pi_min(&self) -> T {
        self.masses
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| a.min(b))
    }

    pub fn sum(&self) -> T {
        self.cdf[self.window_upper]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_masses() {
        let pmf = make_pmf::<f64>(Family::Uniform { n: 4 }).unwrap();
        for i in 0..4 {
            assert_eq!(pmf.mass(i), 0.25);
        }
        assert_eq!(pmf.mass(4), 0.0);
    }

    #[test]
    fn binomial_two_half() {
        let pmf = make_pmf::<f64>(Family::Binomial { n: 2, p: 0.5 }).unwrap();
        assert!(close(pmf.mass(0), 0.25, 1e-15));
        assert!(close(pmf.mass(1), 0.5, 1e-15));
        assert!(close(pmf.mass(2), 0.25, 1e-15));
    }

    #[test]
    fn hypergeometric_four_two() {
        let pmf = make_pmf::<f64>(Family::Hypergeometric { n: 4, r: 2 }).unwrap();
        assert!(close(pmf.mass(0), 1.0 / 6.0, 1e-15));
        assert!(close(pmf.mass(1), 4.0 / 6.0, 1e-15));
        assert!(close(pmf.mass(2), 1.0 / 6.0, 1e-15));
    }

    #[test]
    fn custom_normalizes() {
        let pmf = make_custom_pmf(&[1.0, 1.0, 2.0]).unwrap();
        assert!(close(pmf.mass(0), 0.25, 1e-15));
        assert!(close(pmf.mass(1), 0.25, 1e-15));
        assert!(close(pmf.mass(2), 0.5, 1e-15));
    }

    #[test]
    fn custom_point_mass() {
        let pmf = make_custom_pmf(&[1.0]).unwrap();
        assert_eq!(pmf.support_upper(), Some(0));
        assert_eq!(pmf.mass(0), 1.0);
    }

    #[test]
    fn custom_interior_zero_rejected() {
        match make_custom_pmf(&[1.0, 0.0, 1.0]) {
            Err(Error::InteriorZeroMass { index: 1 }) => {}
            other => panic!("expected interior-zero rejection, got {other:?}"),
        }
        assert!(matches!(
            make_custom_pmf::<f64>(&[0.0, 0.0]),
            Err(Error::AllZeroWeights)
        ));
    }

    #[test]
    fn degenerate_probability_rejected() {
        assert!(make_pmf::<f64>(Family::Binomial { n: 3, p: 0.0 }).is_err());
        assert!(make_pmf::<f64>(Family::Geometric { p: 1.0 }).is_err());
    }

    #[test]
    fn geometric_truncation_window() {
        // tail(k) = 0.5^(k+1), so 1e-12 needs k = 39
        let pmf = make_pmf::<f64>(Family::Geometric { p: 0.5 }).unwrap();
        let t = truncate(&pmf, 1e-12).unwrap();
        assert_eq!(t.window_upper(), 39);
        assert!(t.tail_mass() <= 1e-12);
        assert!(!t.is_renormalized());
    }

    #[test]
    fn finite_truncation_is_noop() {
        let pmf = make_pmf::<f64>(Family::Binomial { n: 10, p: 0.3 }).unwrap();
        let t = truncate(&pmf, 1e-30).unwrap();
        assert_eq!(t.window_upper(), 10);
        assert_eq!(t.tail_mass(), 0.0);
    }

    #[test]
    fn negative_binomial_truncation_vs_direct_sum() {
        let pmf = make_pmf::<f64>(Family::NegativeBinomial { r: 2.0, p: 0.4 }).unwrap();
        let t = truncate(&pmf, 1e-12).unwrap();
        // direct cumulative-sum oracle for the tail
        let mut s = 0.0;
        for i in 0..=t.window_upper() {
            s += pmf.mass(i);
        }
        assert!(1.0 - s <= 1e-12 + 1e-15);
        assert!(close(t.sum() + t.tail_mass(), 1.0, 1e-12));
    }

    #[test]
    fn cdf_tail_consistency() {
        for family in [
            Family::Binomial { n: 25, p: 0.37 },
            Family::Hypergeometric { n: 20, r: 8 },
            Family::Uniform { n: 13 },
        ] {
            let pmf = make_pmf::<f64>(family).unwrap();
            let upper = pmf.support_upper().unwrap();
            for k in 0..=upper {
                assert!(close(pmf.cdf(k) + pmf.tail(k), 1.0, 1e-14));
            }
        }
    }

    #[test]
    fn geometric_ratio_recurrence() {
        let p = 0.3;
        let pmf = make_pmf::<f64>(Family::Geometric { p }).unwrap();
        for i in 0..50 {
            assert!(close(pmf.mass(i + 1) / pmf.mass(i), 1.0 - p, 1e-14));
        }
    }

    #[test]
    fn normalization_budget_over_grid() {
        for (r, p) in [(0.7, 0.2), (2.0, 0.4), (5.5, 0.6)] {
            let pmf = make_pmf::<f64>(Family::NegativeBinomial { r, p }).unwrap();
            let t = truncate(&pmf, 1e-12).unwrap();
            assert!(close(t.sum() + t.tail_mass(), 1.0, 1e-12));
        }
        let geo = make_pmf::<f64>(Family::Geometric { p: 0.8 }).unwrap();
        let t = truncate(&geo, 1e-12).unwrap();
        assert!(close(t.sum() + t.tail_mass(), 1.0, 1e-12));
    }

    #[test]
    fn renormalized_window_sums_to_one() {
        let pmf = make_pmf::<f64>(Family::Geometric { p: 0.5 }).unwrap();
        let t = truncate(&pmf, 1e-6).unwrap().renormalize();
        assert!(close(t.sum(), 1.0, 1e-12));
    }
}
