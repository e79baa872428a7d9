#![allow(dead_code)]

use metricgraph_core::{EntityTable, SquareMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric, zero diagonal, off-diagonal entries uniform in `[lo, hi)`.
pub fn random_semimetric(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SquareMatrix {
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(lo..hi);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

pub fn random_table(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> EntityTable {
    let ids = (0..n).map(|i| format!("e{i}")).collect();
    let rows = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(lo..hi)).collect())
        .collect();
    EntityTable::from_rows(ids, rows).unwrap()
}

pub fn ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

/// The four companies described by amount paid only.
pub fn amounts_table() -> EntityTable {
    EntityTable::from_rows(ids(4), vec![vec![4.0], vec![2.0], vec![2.0], vec![1.0]]).unwrap()
}

/// The four companies described by (amount, contracts).
pub fn contracts_table() -> EntityTable {
    EntityTable::from_rows(
        ids(4),
        vec![vec![4.0, 3.0], vec![2.0, 1.0], vec![2.0, 2.0], vec![1.0, 1.0]],
    )
    .unwrap()
}

/// Number of entries in `row` strictly below `eps`, by direct scan.
pub fn count_below(row: &[f64], eps: f64) -> usize {
    row.iter().filter(|&&d| d < eps).count()
}

/// Composite 5-point Gauss-Legendre quadrature of `f` over `[a, b]`.
/// Endpoints are never evaluated.
pub fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// `∫_r^∞ |{d < ε}| ε^{-q} dε` by quadrature in `s = ln(ε / r)` up to a
/// cut-off beyond every distance, plus the tail of the constant full count.
pub fn lebesgue_concentration_quadrature(distances: &[f64], r: f64, q: f64) -> f64 {
    let dmax = distances.iter().copied().fold(r, f64::max);
    let cut = 2.0 * dmax;
    let s_end = (cut / r).ln();
    let f = |s: f64| {
        let eps = r * s.exp();
        count_below(distances, eps) as f64 * eps.powf(1.0 - q)
    };
    // split at every breakpoint in s; the count is constant inside each piece
    let mut knots: Vec<f64> = distances
        .iter()
        .filter(|&&d| d > r)
        .map(|&d| (d / r).ln())
        .collect();
    knots.push(0.0);
    knots.push(s_end);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            total += gauss_legendre(&f, w[0], w[1], 64);
        }
    }
    total + distances.len() as f64 * cut.powf(1.0 - q) / (q - 1.0)
}
