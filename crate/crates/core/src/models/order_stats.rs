//! Order-statistic means of a finite multiset drawn without replacement.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::ModelError;
use crate::numeric::{binomial_exact, NeumaierSum};

/// Largest table size for which binomial weights are formed from exact
/// integers; beyond it they are built in log space.
pub const EXACT_BINOMIAL_LIMIT: usize = 60;

/// `μ_{l:m}` for `l = 1..=m`: for a finite multiset these are its sorted values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStatTable {
    means: Vec<f64>,
}

/// Sorts `values` into an [`OrderStatTable`].
pub fn order_stat_means(values: &[f64]) -> Result<OrderStatTable, ModelError> {
    if values.is_empty() {
        return Err(ModelError::EmptyMultiset);
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(ModelError::InvalidParameter { name: "value", value: *bad, reason: "must be finite" });
    }
    let mut means = values.to_vec();
    means.sort_by(f64::total_cmp);
    Ok(OrderStatTable { means })
}

/// `μ_i = C(m,i)^{-1} Σ_{l=i}^{m} μ_{l:m} C(l-1, i-1)`, the mean of the
/// maximum of `i` draws without replacement.
pub fn exchangeable_mu_of_max(table: &OrderStatTable, i: usize) -> Result<f64, ModelError> {
    table.mu_of_max(i)
}

fn binomial_big(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("table values are finite")
}

impl OrderStatTable {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Sorted values, `means()[l - 1] = μ_{l:m}`.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    fn check_index(&self, i: usize) -> Result<(), ModelError> {
        if i == 0 || i > self.len() {
            Err(ModelError::IndexOutOfRange { k: i, limit: self.len() })
        } else {
            Ok(())
        }
    }

    pub fn mu_of_max(&self, i: usize) -> Result<f64, ModelError> {
        self.check_index(i)?;
        let m = self.len();
        if i == m {
            return Ok(self.means[m - 1]);
        }
        let mut acc = NeumaierSum::new();
        if m <= EXACT_BINOMIAL_LIMIT {
            let total = binomial_exact(m as u64, i as u64).expect("fits below the limit") as f64;
            for l in i..=m {
                let w = binomial_exact(l as u64 - 1, i as u64 - 1).expect("fits below the limit") as f64;
                acc.add(self.means[l - 1] * (w / total));
            }
        } else {
            // log w_l with w_m = i/m and w_{l-1} = w_l (l-i)/(l-1)
            let mut log_w = (i as f64 / m as f64).ln();
            let mut terms = Vec::with_capacity(m - i + 1);
            for l in (i..=m).rev() {
                terms.push(self.means[l - 1] * log_w.exp());
                if l > i {
                    log_w += ((l - i) as f64 / (l - 1) as f64).ln();
                }
            }
            for t in terms.into_iter().rev() {
                acc.add(t);
            }
        }
        Ok(acc.value())
    }

    /// Exact rational `μ_i` (values are taken at their exact binary value).
    pub fn mu_of_max_exact(&self, i: usize) -> Result<BigRational, ModelError> {
        self.check_index(i)?;
        let m = self.len();
        let mut acc = BigRational::zero();
        for l in i..=m {
            acc += exact(self.means[l - 1]) * BigRational::from_integer(binomial_big(l - 1, i - 1));
        }
        Ok(acc / BigRational::from_integer(binomial_big(m, i)))
    }

    /// Order-statistic means of a sub-sample of `s` draws from this multiset:
    /// `μ_{l:s} = Σ_r μ_{r:m} C(r-1, l-1) C(m-r, s-l) / C(m, s)`.
    pub fn subsample(&self, s: usize) -> Result<OrderStatTable, ModelError> {
        self.check_index(s)?;
        if s == self.len() {
            return Ok(self.clone());
        }
        let m = self.len();
        let log_total = crate::numeric::ln_binomial(m as u64, s as u64);
        let means = (1..=s)
            .map(|l| {
                let mut acc = NeumaierSum::new();
                for r in l..=(m - s + l) {
                    let log_w = crate::numeric::ln_binomial(r as u64 - 1, l as u64 - 1)
                        + crate::numeric::ln_binomial((m - r) as u64, (s - l) as u64)
                        - log_total;
                    acc.add(self.means[r - 1] * log_w.exp());
                }
                acc.value()
            })
            .collect();
        Ok(OrderStatTable { means })
    }

    /// Exact rational version of [`subsample`](Self::subsample).
    pub fn subsample_exact(&self, s: usize) -> Result<Vec<BigRational>, ModelError> {
        self.check_index(s)?;
        let m = self.len();
        let total = BigRational::from_integer(binomial_big(m, s));
        Ok((1..=s)
            .map(|l| {
                let mut acc = BigRational::zero();
                for r in l..=(m - s + l) {
                    let w = binomial_big(r - 1, l - 1) * binomial_big(m - r, s - l);
                    acc += exact(self.means[r - 1]) * BigRational::from_integer(w);
                }
                acc / &total
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorting_examples() {
        assert_eq!(order_stat_means(&[3.0, 1.0, 2.0]).unwrap().means(), &[1.0, 2.0, 3.0]);
        assert_eq!(order_stat_means(&[0.0, 0.0, 1.0]).unwrap().means(), &[0.0, 0.0, 1.0]);
        assert_eq!(order_stat_means(&[5.0]).unwrap().means(), &[5.0]);
        assert!(matches!(order_stat_means(&[]), Err(ModelError::EmptyMultiset)));
        assert!(order_stat_means(&[f64::NAN]).is_err());
    }

    // Average of the max over all ordered i-tuples of distinct positions.
    fn brute_force_mu(values: &[f64], i: usize) -> f64 {
        fn rec(values: &[f64], used: &mut Vec<bool>, left: usize, best: f64, sum: &mut f64, count: &mut u64) {
            if left == 0 {
                *sum += best;
                *count += 1;
                return;
            }
            for j in 0..values.len() {
                if !used[j] {
                    used[j] = true;
                    rec(values, used, left - 1, best.max(values[j]), sum, count);
                    used[j] = false;
                }
            }
        }
        let (mut sum, mut count) = (0.0, 0);
        rec(values, &mut vec![false; values.len()], i, f64::NEG_INFINITY, &mut sum, &mut count);
        sum / count as f64
    }

    #[test]
    fn mu_of_max_matches_enumeration_of_position_tuples() {
        let t = order_stat_means(&[0.0, 0.0, 1.0]).unwrap();
        assert!((t.mu_of_max(2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((brute_force_mu(&[0.0, 0.0, 1.0], 2) - 2.0 / 3.0).abs() < 1e-15);
        let values = [2.5, -1.0, 4.0, 4.0, 0.5, 3.0];
        let t = order_stat_means(&values).unwrap();
        for i in 1..=values.len() {
            assert!((t.mu_of_max(i).unwrap() - brute_force_mu(&values, i)).abs() < 1e-13);
        }
    }

    #[test]
    fn mu_of_max_top_is_maximum() {
        let t = order_stat_means(&[7.0, -2.0, 3.0]).unwrap();
        assert_eq!(t.mu_of_max(3).unwrap(), 7.0);
        assert_eq!(t.mu_of_max(1).unwrap(), 8.0 / 3.0);
        assert!(matches!(t.mu_of_max(0), Err(ModelError::IndexOutOfRange { .. })));
        assert!(matches!(t.mu_of_max(4), Err(ModelError::IndexOutOfRange { .. })));
    }

    #[test]
    fn exact_path_reproduces_permutation_closed_form() {
        for n in 1..=12usize {
            let values: Vec<f64> = (1..=n).map(|v| v as f64).collect();
            let t = order_stat_means(&values).unwrap();
            for k in 1..=n {
                let expected = BigRational::new(BigInt::from(k * (n + 1)), BigInt::from(k + 1));
                assert_eq!(t.mu_of_max_exact(k).unwrap(), expected, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn log_space_path_matches_closed_form_for_large_tables() {
        let n = 500usize;
        let values: Vec<f64> = (1..=n).rev().map(|v| v as f64).collect();
        let t = order_stat_means(&values).unwrap();
        for &k in &[1usize, 2, 61, 250, 499, 500] {
            let expected = (k * (n + 1)) as f64 / (k + 1) as f64;
            assert!((t.mu_of_max(k).unwrap() - expected).abs() < 1e-10 * expected, "k={k}");
        }
    }

    #[test]
    fn subsample_of_full_table_is_identity_and_consistent() {
        let t = order_stat_means(&[1.0, 2.0, 2.0, 5.0, 9.0]).unwrap();
        assert_eq!(t.subsample(5).unwrap(), t);
        // the top order statistic of s draws is μ_s
        for s in 1..=5 {
            let sub = t.subsample(s).unwrap();
            assert!((sub.means()[s - 1] - t.mu_of_max(s).unwrap()).abs() < 1e-12);
            let exact = t.subsample_exact(s).unwrap();
            assert_eq!(exact[s - 1], t.mu_of_max_exact(s).unwrap());
            // order-statistic means of any sub-sample average to the overall mean
            let total: BigRational = exact.iter().cloned().sum();
            assert_eq!(total / BigRational::from_integer(BigInt::from(s)), BigRational::new(19.into(), 5.into()));
        }
    }
}
