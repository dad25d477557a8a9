//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use sdrelax::DiscreteSBVField;

/// Gradient levels of the brute-force oracle: `−3, −2.5, …, 3`.
pub fn quantized_levels() -> Vec<f64> {
    (-6..=6).map(|k| k as f64 * 0.5).collect()
}

/// Exhaustive minimum of the one-dimensional cell energy on `n` equal
/// cells of `(−1/2, 1/2)`:
///
/// `Σ w(g_k)/n + c·|rise − Σ g_k/n|`
///
/// over gradient tuples from `levels` with `Σ g_k / n = mean` (any mean
/// when `mean` is `None`). Free cell offsets turn the jump part into a sum
/// of `c|j_i|` over the `n + 1` facets with a fixed total, whose minimum
/// is `c` times the absolute total. Both terms are symmetric in the cells,
/// so multisets suffice.
pub fn brute_force_1d(w: impl Fn(f64) -> f64, c: f64, rise: f64, mean: Option<f64>, n: usize, levels: &[f64]) -> f64 {
    fn rec(
        start: usize,
        left: usize,
        sum: f64,
        bulk: f64,
        levels: &[f64],
        wv: &[f64],
        eval: &mut dyn FnMut(f64, f64),
    ) {
        if left == 0 {
            eval(sum, bulk);
            return;
        }
        for i in start..levels.len() {
            rec(i, left - 1, sum + levels[i], bulk + wv[i], levels, wv, eval);
        }
    }
    let wv: Vec<f64> = levels.iter().map(|&g| w(g)).collect();
    let h = 1.0 / n as f64;
    let mut best = f64::INFINITY;
    let mut eval = |sum: f64, bulk: f64| {
        let m = sum * h;
        if let Some(target) = mean {
            if (m - target).abs() > 1e-12 {
                return;
            }
        }
        best = best.min(bulk * h + c * (rise - m).abs());
    };
    rec(0, n, 0.0, 0.0, levels, &wv, &mut eval);
    best
}

/// Midpoint rule for `∫_0^1 f` with `m` points.
pub fn midpoint(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    let h = 1.0 / m as f64;
    (0..m).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// `∫_0^1 |u − v|` by the midpoint rule at `m` points.
pub fn l1_quadrature(u: &DiscreteSBVField, v: impl Fn(f64) -> f64, m: usize) -> f64 {
    midpoint(|x| (u.eval(&[x])[0] - v(x)).abs(), m)
}

/// `∫_0^1 |x − ⌊kx⌋/k|` in closed form: `k` sawtooth teeth of area `1/(2k²)`.
pub fn sawtooth_l1(k: usize) -> f64 {
    1.0 / (2.0 * k as f64)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
