//! Piecewise-linear tables of the first-stage densities in one dimension.
//!
//! The `(A, B)` table is triangulated along the diagonal of every lattice
//! cell, so functions of `B` alone and of `A − B` are reproduced exactly
//! when both axes share the node set. Outside the lattice the value at the
//! nearest node is continued with the largest slope of the table.

use serde::Serialize;

/// Uniform nodes on `[−radius, radius]` together with the data points.
pub(crate) fn lattice(data: &[f64], spacing: f64, radius: f64) -> Vec<f64> {
    let r = data.iter().fold(radius, |m, v| m.max(v.abs() + spacing));
    let k = (r / spacing).ceil() as i64;
    let mut nodes: Vec<f64> = (-k..=k).map(|i| i as f64 * spacing).collect();
    nodes.extend(data.iter().copied().filter(|v| v.is_finite()));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    nodes
}

/// Index `i` with `nodes[i] ≤ t ≤ nodes[i + 1]` after clamping, and the clamp distance.
fn locate(nodes: &[f64], t: f64) -> (usize, f64, f64) {
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    let c = t.clamp(lo, hi);
    let i = match nodes.binary_search_by(|v| v.total_cmp(&c)) {
        Ok(i) => i.min(nodes.len() - 2),
        Err(i) => i.saturating_sub(1).min(nodes.len() - 2),
    };
    let s = (c - nodes[i]) / (nodes[i + 1] - nodes[i]);
    (i, s, (t - c).abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1 {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    slope: f64,
}

impl Table1 {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        let slope = nodes
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max);
        Table1 { nodes, values, slope }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (i, s, out) = locate(&self.nodes, t);
        self.values[i] + s * (self.values[i + 1] - self.values[i]) + self.slope * out
    }

    /// `c` with `values = c|nodes|` to relative accuracy `rel`.
    pub fn homogeneous(&self, rel: f64) -> Option<f64> {
        let (k, far) = self
            .nodes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
        if *far == 0.0 {
            return None;
        }
        let c = self.values[k] / far.abs();
        let ok = self
            .nodes
            .iter()
            .zip(&self.values)
            .all(|(x, v)| (v - c * x.abs()).abs() <= rel * (c * x.abs()).max(1e-300) || (*x == 0.0 && *v == 0.0));
        ok.then_some(c)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table2 {
    pub nodes: Vec<f64>,
    /// `values[i·n + j]` at `(nodes[i], nodes[j])`.
    pub values: Vec<f64>,
    slope: f64,
}

impl Table2 {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        let n = nodes.len();
        let mut slope = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    let d = (values[(i + 1) * n + j] - values[i * n + j]) / (nodes[i + 1] - nodes[i]);
                    slope = slope.max(d.abs());
                }
                if j + 1 < n {
                    let d = (values[i * n + j + 1] - values[i * n + j]) / (nodes[j + 1] - nodes[j]);
                    slope = slope.max(d.abs());
                }
            }
        }
        Table2 { nodes, values, slope }
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let n = self.nodes.len();
        let (i, s, oa) = locate(&self.nodes, a);
        let (j, t, ob) = locate(&self.nodes, b);
        let f = |p: usize, q: usize| self.values[(i + p) * n + j + q];
        let inner = if s >= t {
            f(0, 0) + s * (f(1, 0) - f(0, 0)) + t * (f(1, 1) - f(1, 0))
        } else {
            f(0, 0) + t * (f(0, 1) - f(0, 0)) + s * (f(1, 1) - f(0, 1))
        };
        inner + self.slope * (oa + ob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_functions_of_b_and_of_the_difference() {
        let nodes = lattice(&[0.3], 0.25, 2.0);
        assert!(nodes.contains(&0.3));
        let n = nodes.len();
        let f = |a: f64, b: f64| b.abs() * 0.5 + (a - b).abs();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = f(nodes[i], nodes[j]);
            }
        }
        let t = Table2::new(nodes.clone(), v);
        for (a, b) in [(0.1, 0.1), (-1.3, 0.7), (0.3, 0.3), (1.9, -1.1)] {
            assert!((t.eval(a, b) - f(a, b)).abs() < 1e-12, "{a} {b}");
        }
        let h = Table1::new(nodes.clone(), nodes.iter().map(|x| 2.0 * x.abs()).collect());
        assert_eq!(h.homogeneous(1e-12), Some(2.0));
        assert!((h.eval(5.0) - 10.0).abs() < 1e-12);
    }
}
