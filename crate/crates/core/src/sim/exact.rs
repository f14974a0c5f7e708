//! Exact payoff of every threshold by enumerating all `n!` arrival orders.

use super::SimError;
use crate::numeric::NeumaierSum;
use crate::par::Execution;

/// Largest `n` accepted by the enumeration (`10! ≈ 3.6e6` orders).
pub const ENUMERATION_LIMIT: usize = 10;

/// Exact `V_n(c)` for one threshold.
pub fn exact_enumeration(values: &[f64], c: usize) -> Result<f64, SimError> {
    if c == 0 || c > values.len() {
        return Err(SimError::InvalidConfig(format!("c = {c} outside 1..={}", values.len())));
    }
    Ok(exact_curve(values)?[c - 1])
}

/// Exact `(V_n(1), …, V_n(n))` for the arrival of `values` in uniformly
/// random order. Equal values are ordered by a uniformly random tie-break,
/// realized by ranking items on (value, position in `values`) and averaging
/// over all orders.
pub fn exact_curve(values: &[f64]) -> Result<Vec<f64>, SimError> {
    exact_curve_with(values, Execution::default())
}

pub fn exact_curve_with(values: &[f64], exec: Execution) -> Result<Vec<f64>, SimError> {
    let n = values.len();
    if n == 0 {
        return Err(SimError::InvalidConfig("empty value vector".into()));
    }
    if n > ENUMERATION_LIMIT {
        return Err(SimError::TooLarge { n, limit: ENUMERATION_LIMIT });
    }
    if let Some(x) = values.iter().find(|x| !x.is_finite()) {
        return Err(SimError::InvalidConfig(format!("non-finite value {x}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (r, &item) in order.iter().enumerate() {
        rank[item] = r;
    }
    // hires[c-1][item]: number of orders in which threshold c hires item
    let partial = exec.map_range(n, |first| {
        let mut hires = vec![vec![0u64; n]; n];
        let mut rest: Vec<usize> = (0..n).filter(|&i| i != first).collect();
        let mut arrival = vec![first; n];
        let mut next_record = vec![0usize; n + 1];
        heap_permutations(&mut rest, |perm| {
            arrival[1..].copy_from_slice(perm);
            tally(&arrival, &rank, &mut next_record, &mut hires);
        });
        hires
    });
    let mut total = vec![vec![0u64; n]; n];
    for part in &partial {
        for (row, prow) in total.iter_mut().zip(part) {
            for (t, p) in row.iter_mut().zip(prow) {
                *t += p;
            }
        }
    }
    let orders: u64 = (1..=n as u64).product();
    Ok(total
        .iter()
        .map(|row| {
            let mut acc = NeumaierSum::new();
            for (item, &count) in row.iter().enumerate() {
                acc.add(count as f64 * values[item]);
            }
            acc.value() / orders as f64
        })
        .collect())
}

fn tally(arrival: &[usize], rank: &[usize], next_record: &mut [usize], hires: &mut [Vec<u64>]) {
    let n = arrival.len();
    // next_record[i]: first record at 0-based position >= i, or n
    next_record[n] = n;
    let mut is_record = [false; ENUMERATION_LIMIT];
    let mut best = rank[arrival[0]];
    is_record[0] = true;
    for i in 1..n {
        let r = rank[arrival[i]];
        if r > best {
            best = r;
            is_record[i] = true;
        }
    }
    for i in (0..n).rev() {
        next_record[i] = if is_record[i] { i } else { next_record[i + 1] };
    }
    hires[0][arrival[0]] += 1;
    for c in 2..=n {
        let pos = next_record[c - 1].min(n - 1);
        hires[c - 1][arrival[pos]] += 1;
    }
}

/// Calls `f` on every permutation of `items` (Heap's algorithm).
fn heap_permutations(items: &mut [usize], mut f: impl FnMut(&[usize])) {
    let k = items.len();
    let mut counters = vec![0usize; k];
    f(items);
    let mut i = 1;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(counters[i], i);
            }
            f(items);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
}
