use super::field::{DiscreteSBVField, MatrixField};
use super::SbvError;
use crate::linalg::{norm, Mat};
use serde::{Deserialize, Serialize};

/// How [`piecewise_constant_approx`] picks the value of a block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockRule {
    /// Mean of the field over the block.
    #[default]
    Average,
    /// Value at the block's lower corner (a floor-type staircase).
    LowerCorner,
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Zero-gradient field constant on each of the `m^N` blocks of the cube.
///
/// The output lives on `n` cells per side when `m` divides the field's `n`,
/// and on `m` cells per side when `n` divides `m`.
pub fn piecewise_constant_approx(
    field: &DiscreteSBVField,
    m: usize,
    rule: BlockRule,
) -> Result<DiscreteSBVField, SbvError> {
    let g = field.grid();
    if m == 0 || (g.n % m != 0 && m % g.n != 0) {
        return Err(SbvError::Incompatible(format!(
            "coarseness m = {m} neither divides nor is a multiple of n = {}",
            g.n
        )));
    }
    let fine = field.refine_to(g.n.max(m))?;
    let fg = fine.grid().clone();
    let per = fg.n / m;
    let d = fg.d;
    let blocks = m.pow(fg.dim as u32);
    let block_of = |k: usize| -> usize {
        fg.multi_index(k)
            .iter()
            .fold(0, |acc, &i| acc * m + i / per)
    };
    let mut block_vals = vec![0.0; blocks * d];
    match rule {
        BlockRule::Average => {
            let w = 1.0 / per.pow(fg.dim as u32) as f64;
            for k in 0..fg.cells() {
                let b = block_of(k);
                for (i, v) in fine.value(k).iter().enumerate() {
                    block_vals[b * d + i] += w * v;
                }
            }
        }
        BlockRule::LowerCorner => {
            let h = fg.h();
            for k in 0..fg.cells() {
                let idx = fg.multi_index(k);
                if idx.iter().all(|i| i % per == 0) {
                    let corner: Vec<f64> = fg
                        .cell_center(k)
                        .iter()
                        .map(|c| c - h / 2.0)
                        .collect();
                    let b = block_of(k);
                    block_vals[b * d..(b + 1) * d].copy_from_slice(&fine.trace(k, &corner));
                }
            }
        }
    }
    let mut values = Vec::with_capacity(fg.cells() * d);
    for k in 0..fg.cells() {
        let b = block_of(k);
        values.extend_from_slice(&block_vals[b * d..(b + 1) * d]);
    }
    let gradients = vec![0.0; fg.cells() * d * fg.dim];
    DiscreteSBVField::new(fg, values, gradients)
}

/// Output of [`discrete_alberti`].
#[derive(Clone, Debug, PartialEq)]
pub struct AlbertiResult {
    pub field: DiscreteSBVField,
    /// `C` with `|D^s u| ≤ C · Σ|f|·vol`; equals `N` for this construction.
    pub jump_constant: f64,
    /// `C'` with `‖u‖_{L¹} ≤ C' · Σ|f|·vol`; equals `h√N/2`.
    pub l1_constant: f64,
    /// Measured `|D^s u|(Q)`.
    pub singular_variation: f64,
    /// Measured `‖u‖_{L¹}`.
    pub field_l1: f64,
    /// `Σ_c |f_c|·vol`.
    pub target_l1: f64,
}

/// Field whose gradient is `target` on every cell, with value zero at each
/// cell center. All mismatch between neighbouring cells is carried by jumps.
pub fn discrete_alberti(target: &MatrixField) -> AlbertiResult {
    let grid = target.grid.clone();
    let values = vec![0.0; grid.cells() * grid.d];
    let field = DiscreteSBVField::new(grid.clone(), values, target.as_slice().to_vec())
        .expect("target entries are finite by construction");
    let target_l1 = target.lp_norm_pow(1.0);
    let zero = DiscreteSBVField::zeros(grid.clone());
    let field_l1 = l1_distance(&field, &zero).expect("same grid");
    AlbertiResult {
        singular_variation: field.jump_variation(),
        jump_constant: grid.dim as f64,
        l1_constant: grid.h() * (grid.dim as f64).sqrt() / 2.0,
        field_l1,
        target_l1,
        field,
    }
}

/// Refines both fields to a common grid when they discretize the same cube.
pub fn common_refinement(
    f1: &DiscreteSBVField,
    f2: &DiscreteSBVField,
) -> Result<(DiscreteSBVField, DiscreteSBVField), SbvError> {
    if !f1.grid().same_cube(f2.grid()) {
        return Err(SbvError::GridMismatch);
    }
    let n = lcm(f1.grid().n, f2.grid().n);
    Ok((f1.refine_to(n)?, f2.refine_to(n)?))
}

/// `∫ |f1 − f2| dx`.
///
/// Exact for scalar differences and for vector differences whose value and
/// gradient rows are collinear; otherwise composite Gauss–Legendre
/// quadrature (8 panels × 5 nodes per axis and cell).
pub fn l1_distance(f1: &DiscreteSBVField, f2: &DiscreteSBVField) -> Result<f64, SbvError> {
    if f1.grid() != f2.grid() {
        return Err(SbvError::GridMismatch);
    }
    let g = f1.grid();
    let (d, n) = (g.d, g.dim);
    let h = g.h();
    let mut total = 0.0;
    for k in 0..g.cells() {
        let a: Vec<f64> = f1.value(k).iter().zip(f2.value(k)).map(|(x, y)| x - y).collect();
        let b: Vec<f64> = f1
            .gradient_slice(k)
            .iter()
            .zip(f2.gradient_slice(k))
            .map(|(x, y)| x - y)
            .collect();
        total += match collinear(&a, &b, d, n) {
            Some((sa, sb)) => abs_affine_integral(sa, &sb, h),
            None => quadrature_norm(&a, &b, d, n, h),
        };
    }
    Ok(total)
}

/// Writes `a + B y` as `e·(α + β·y)` for a unit vector `e` when possible.
fn collinear(a: &[f64], b: &[f64], d: usize, n: usize) -> Option<(f64, Vec<f64>)> {
    if d == 1 {
        return Some((a[0], b.to_vec()));
    }
    let mut e: Option<Vec<f64>> = None;
    let mut consider = |v: Vec<f64>| {
        if e.is_none() && norm(&v) > 0.0 {
            let l = norm(&v);
            e = Some(v.into_iter().map(|c| c / l).collect());
        }
    };
    consider(a.to_vec());
    for j in 0..n {
        consider((0..d).map(|i| b[i * n + j]).collect());
    }
    let e = match e {
        Some(e) => e,
        None => return Some((0.0, vec![0.0; n])),
    };
    let project = |v: &[f64]| -> Option<f64> {
        let s: f64 = v.iter().zip(&e).map(|(x, y)| x * y).sum();
        let resid: f64 = v.iter().zip(&e).map(|(x, y)| (x - s * y).powi(2)).sum::<f64>().sqrt();
        (resid <= 1e-14 * (1.0 + norm(v))).then_some(s)
    };
    let alpha = project(a)?;
    let mut beta = Vec::with_capacity(n);
    for j in 0..n {
        beta.push(project(&(0..d).map(|i| b[i * n + j]).collect::<Vec<_>>())?);
    }
    Some((alpha, beta))
}

/// `∫_{[−h/2, h/2]^N} |α + β·y| dy`, exact.
pub fn abs_affine_integral(alpha: f64, beta: &[f64], h: f64) -> f64 {
    match beta.len() {
        1 => abs_linear_1d(alpha, beta[0], h),
        2 => {
            // Integrate exactly along the axis with the larger coefficient;
            // the result is piecewise quadratic in the other variable.
            let (bs, bt) = if beta[0].abs() <= beta[1].abs() {
                (beta[0], beta[1])
            } else {
                (beta[1], beta[0])
            };
            let inner = |s: f64| abs_linear_1d(alpha + bs * s, bt, h);
            let half = h / 2.0;
            let mut cuts = vec![-half, half];
            if bs != 0.0 {
                let delta = bt.abs() * half;
                for z in [-delta, delta] {
                    let s = (z - alpha) / bs;
                    if s > -half && s < half {
                        cuts.push(s);
                    }
                }
            }
            cuts.sort_by(|a, b| a.total_cmp(b));
            cuts.windows(2)
                .map(|w| {
                    let (l, r) = (w[0], w[1]);
                    (r - l) / 6.0 * (inner(l) + 4.0 * inner(0.5 * (l + r)) + inner(r))
                })
                .sum()
        }
        _ => unreachable!("grids have N in {{1, 2}}"),
    }
}

/// `∫_{−h/2}^{h/2} |z + c t| dt`.
fn abs_linear_1d(z: f64, c: f64, h: f64) -> f64 {
    let delta = c.abs() * h / 2.0;
    if z.abs() >= delta {
        z.abs() * h
    } else {
        // Sign change inside: ∫ = (z² + δ²) / |c|.
        (z * z + delta * delta) / c.abs()
    }
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

fn quadrature_norm(a: &[f64], b: &[f64], d: usize, n: usize, h: f64) -> f64 {
    const PANELS: usize = 8;
    let ph = h / PANELS as f64;
    let nodes: Vec<(f64, f64)> = (0..PANELS)
        .flat_map(|p| {
            let c = -h / 2.0 + (p as f64 + 0.5) * ph;
            GL5.iter().map(move |(x, w)| (c + x * ph / 2.0, w * ph / 2.0))
        })
        .collect();
    let value = |y: &[f64]| -> f64 {
        (0..d)
            .map(|i| {
                let v = a[i] + (0..n).map(|j| b[i * n + j] * y[j]).sum::<f64>();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    };
    match n {
        1 => nodes.iter().map(|(y, w)| w * value(&[*y])).sum(),
        _ => nodes
            .iter()
            .flat_map(|(y0, w0)| nodes.iter().map(move |(y1, w1)| (w0 * w1, [*y0, *y1])))
            .map(|(w, y)| w * value(&y))
            .sum(),
    }
}

/// Test functions for weak and weak-* checks: monomials `x^α` of total
/// degree ≤ 2 and indicators of dyadic sub-boxes at levels 0–2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    Monomial { exponents: Vec<u32> },
    DyadicBox { level: u32, index: Vec<usize> },
}

impl TestFunction {
    pub fn label(&self) -> String {
        match self {
            TestFunction::Monomial { exponents } => format!(
                "x^{}",
                exponents.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
            ),
            TestFunction::DyadicBox { level, index } => format!(
                "box{level}[{}]",
                index.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

/// The documented family for a grid of dimension `dim`.
pub fn moment_family(dim: usize) -> Vec<TestFunction> {
    let mut out = Vec::new();
    let exps: Vec<Vec<u32>> = match dim {
        1 => (0..=2).map(|a| vec![a]).collect(),
        _ => (0..=2u32)
            .flat_map(|a| (0..=2 - a).map(move |b| vec![a, b]))
            .collect(),
    };
    out.extend(exps.into_iter().map(|exponents| TestFunction::Monomial { exponents }));
    for level in 0..=2u32 {
        let m = 1usize << level;
        let count = m.pow(dim as u32);
        for k in 0..count {
            let mut idx = vec![0; dim];
            let mut r = k;
            for a in (0..dim).rev() {
                idx[a] = r % m;
                r /= m;
            }
            out.push(TestFunction::DyadicBox { level, index: idx });
        }
    }
    out
}

/// `∫_Q M(x) φ(x) dx` for a per-cell constant matrix field, exact per cell.
pub fn moment_pairing(field: &MatrixField, test: &TestFunction) -> Result<Mat, SbvError> {
    let g = &field.grid;
    let h = g.h();
    let lo = g.lower_corner();
    let weight: Box<dyn Fn(&[f64]) -> f64> = match test {
        TestFunction::Monomial { exponents } => {
            if exponents.len() != g.dim || exponents.iter().sum::<u32>() > 2 {
                return Err(SbvError::UnsupportedTest(test.label()));
            }
            let e = exponents.clone();
            Box::new(move |c: &[f64]| {
                c.iter()
                    .zip(&e)
                    .map(|(&x, &k)| {
                        let (a, b) = (x - h / 2.0, x + h / 2.0);
                        let k1 = k as i32 + 1;
                        (b.powi(k1) - a.powi(k1)) / k1 as f64
                    })
                    .product()
            })
        }
        TestFunction::DyadicBox { level, index } => {
            let m = 1usize << level;
            if *level > 2 || index.len() != g.dim || index.iter().any(|&i| i >= m) {
                return Err(SbvError::UnsupportedTest(test.label()));
            }
            let bs = g.side / m as f64;
            let (lo, idx) = (lo.clone(), index.clone());
            Box::new(move |c: &[f64]| {
                c.iter()
                    .enumerate()
                    .map(|(a, &x)| {
                        let (b0, b1) = (lo[a] + idx[a] as f64 * bs, lo[a] + (idx[a] + 1) as f64 * bs);
                        let (c0, c1) = (x - h / 2.0, x + h / 2.0);
                        (c1.min(b1) - c0.max(b0)).max(0.0)
                    })
                    .product()
            })
        }
    };
    let mut out = Mat::zeros(g.d, g.dim);
    for k in 0..g.cells() {
        let w = weight(&g.cell_center(k));
        if w != 0.0 {
            out.add_assign_scaled(&field.get(k), w);
        }
    }
    Ok(out)
}
