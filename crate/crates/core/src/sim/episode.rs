//! One interview episode: returns the hired value and whether it was the
//! largest value among the `n` candidates.
//!
//! Ties are broken by an independent uniform key per candidate. For i.i.d.
//! models the uniform `U` fed to the quantile function already is such an
//! order (it refines the order of the values and is uniform within every
//! atom), so those episodes compare in `U`-space and only transform the
//! values they report.

use std::sync::Arc;

use rand::distr::Open01;
use rand::Rng;

use super::EpisodeMethod;
use crate::models::cdf::Cdf;
use crate::models::Sampler;
use crate::numeric::ln_binomial;

fn open01<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Upper-tail probability `1 - max` of `k` uniforms.
fn max_complement<R: Rng>(rng: &mut R, k: usize) -> f64 {
    -(open01(rng).ln() / k as f64).exp_m1()
}

pub(crate) enum EpisodeSampler<'a> {
    IidDirect { dist: &'a Arc<dyn Cdf>, n: usize, c: usize },
    IidLiteral { dist: &'a Arc<dyn Cdf>, n: usize, c: usize },
    ShuffleDirect { sorted: Vec<f64>, n: usize, c: usize },
    ShuffleLiteral { pool: Vec<f64>, has_ties: bool, n: usize, c: usize },
}

impl<'a> EpisodeSampler<'a> {
    pub(crate) fn new(sampler: &'a Sampler, n: usize, c: usize, method: EpisodeMethod) -> Self {
        match (sampler, method) {
            (Sampler::Quantile(dist), EpisodeMethod::Direct) => Self::IidDirect { dist, n, c },
            (Sampler::Quantile(dist), EpisodeMethod::Literal) => Self::IidLiteral { dist, n, c },
            (Sampler::Shuffle(pool), EpisodeMethod::Direct) => {
                let mut sorted = pool.clone();
                sorted.sort_by(f64::total_cmp);
                Self::ShuffleDirect { sorted, n, c }
            }
            (Sampler::Shuffle(pool), EpisodeMethod::Literal) => {
                let mut sorted = pool.clone();
                sorted.sort_by(f64::total_cmp);
                let has_ties = sorted.windows(2).any(|w| w[0] == w[1]);
                Self::ShuffleLiteral { pool: pool.clone(), has_ties, n, c }
            }
        }
    }

    pub(crate) fn run<R: Rng>(&mut self, rng: &mut R) -> (f64, bool) {
        match self {
            Self::IidDirect { dist, n, c } => iid_direct(dist.as_ref(), *n, *c, rng),
            Self::IidLiteral { dist, n, c } => {
                let dist = dist.as_ref();
                literal(*n, *c, rng, |rng| dist.quantile(open01(rng)), true)
            }
            Self::ShuffleDirect { sorted, n, c } => shuffle_direct(sorted, *n, *c, rng),
            Self::ShuffleLiteral { pool, has_ties, n, c } => {
                let m = pool.len();
                let mut t = 0;
                // lazy Fisher-Yates; the pool is never reset, and a uniform
                // shuffle of any arrangement is still uniform
                literal(
                    *n,
                    *c,
                    rng,
                    |rng| {
                        let j = rng.random_range(t..m);
                        pool.swap(t, j);
                        t += 1;
                        pool[t - 1]
                    },
                    *has_ties,
                )
            }
        }
    }
}

/// Best candidate so far under the (value, tie key) order. Tie keys are
/// drawn only when two equal values meet.
struct Leader {
    value: f64,
    key: Option<f64>,
}

impl Leader {
    /// Whether `x` beats the leader; if so it becomes the leader.
    fn challenge<R: Rng>(this: &mut Option<Leader>, x: f64, ties_possible: bool, rng: &mut R) -> bool {
        let Some(lead) = this else {
            *this = Some(Leader { value: x, key: None });
            return true;
        };
        let wins = if x != lead.value || !ties_possible {
            x > lead.value
        } else {
            let incumbent = *lead.key.get_or_insert_with(|| open01(rng));
            let challenger = open01(rng);
            if challenger > incumbent {
                lead.key = Some(challenger);
                return true;
            }
            false
        };
        if wins {
            *lead = Leader { value: x, key: None };
        }
        wins
    }
}

/// Draws all `n` candidates in order and hires the first record at or after
/// position `c`, else the last one.
fn literal<R: Rng>(
    n: usize,
    c: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> f64,
    ties_possible: bool,
) -> (f64, bool) {
    let mut leader = None;
    let mut hired = None;
    let mut top = f64::NEG_INFINITY;
    for i in 1..=n {
        let x = draw(rng);
        top = top.max(x);
        let record = Leader::challenge(&mut leader, x, ties_possible, rng);
        if hired.is_none() && ((i >= c && record) || i == n) {
            hired = Some(x);
        }
    }
    let value = hired.expect("position n always hires");
    (value, value >= top)
}

/// i.i.d. episode from the exact law of (prefix maximum, waiting time to the
/// first `U` above it, hired `U`, maximum of the later `U`s), all held as
/// upper-tail probabilities `s = 1 - U`.
fn iid_direct<R: Rng>(dist: &dyn Cdf, n: usize, c: usize, rng: &mut R) -> (f64, bool) {
    let (value, s_hired, later) = if c == 1 {
        let s = open01(rng);
        (dist.upper_quantile(s), s, n - 1)
    } else {
        let s_prefix = max_complement(rng, c - 1);
        // each later U beats the prefix with probability s_prefix
        let wait = (open01(rng).ln() / (-s_prefix).ln_1p()).floor() + 1.0;
        let slots = n - c + 1;
        if wait <= slots as f64 {
            let hire_at = c - 1 + wait as usize;
            let s = s_prefix * open01(rng);
            (dist.upper_quantile(s), s, n - hire_at)
        } else {
            // forced last hire below the prefix maximum
            let u = (1.0 - s_prefix) * open01(rng);
            let value = dist.quantile(u);
            return (value, dist.upper_quantile(s_prefix) <= value);
        }
    };
    let best = later == 0 || {
        let s_later = max_complement(rng, later);
        s_later >= s_hired || dist.upper_quantile(s_later) <= value
    };
    (value, best)
}

/// Rank (1-based, in the tie-broken order) of the largest of a uniformly
/// random `size`-subset of `1..=pop`.
fn subset_max_rank<R: Rng>(pop: usize, size: usize, rng: &mut R) -> usize {
    debug_assert!(1 <= size && size <= pop);
    if size == pop {
        return pop;
    }
    if size == 1 {
        return rng.random_range(1..=pop);
    }
    // P(max = r | max <= r) = size / r
    if (pop - size) as f64 / (size as f64 + 1.0) <= 32.0 {
        let mut r = pop;
        loop {
            if rng.random::<f64>() * (r as f64) < size as f64 {
                return r;
            }
            r -= 1;
        }
    }
    // invert P(max <= r) = C(r, size) / C(pop, size)
    let target = open01(rng).ln() + ln_binomial(pop as u64, size as u64);
    let (mut lo, mut hi) = (size, pop);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ln_binomial(mid as u64, size as u64) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Shuffle episode from the exact law of (first record position at or after
/// `c`, rank of the hired candidate, rank of the top candidate). Records of
/// a uniform arrival order are independent with `P(record at i) = 1/i`.
fn shuffle_direct<R: Rng>(sorted: &[f64], n: usize, c: usize, rng: &mut R) -> (f64, bool) {
    let m = sorted.len();
    let top = subset_max_rank(m, n, rng);
    let hired_rank = if c == 1 {
        // the first arrival is a uniform member of the n drawn
        if rng.random::<f64>() * (n as f64) < 1.0 {
            top
        } else {
            rng.random_range(1..top)
        }
    } else {
        // P(no record in c..=h) = (c-1)/h
        let h = ((c - 1) as f64 / open01(rng)).floor() + 1.0;
        if h <= n as f64 {
            let h = h as usize;
            // the first h arrivals hold the top with probability h/n
            if rng.random::<f64>() * (n as f64) < h as f64 {
                top
            } else {
                subset_max_rank(top - 1, h, rng)
            }
        } else {
            // top sits in the rejected prefix; the last arrival is a uniform
            // member of the rest
            rng.random_range(1..top)
        }
    };
    let value = sorted[hired_rank - 1];
    (value, value >= sorted[top - 1])
}
