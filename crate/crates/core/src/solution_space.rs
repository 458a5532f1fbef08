//! Numerical dimension of the solution space `W`.
//!
//! A solution is determined by its prolonged state `(u, du)` at one point:
//! along a curve `x(t)` with velocity `v`,
//!
//! ```text
//! u'   = p . v
//! p_a' = sum_b [ (u/m)(Ric - lambda g)_ab + Gamma^k_ab p_k ] v^b
//! ```
//!
//! where `p` is the coordinate covector `du`. Transport around closed loops
//! returns to the starting state exactly when the state extends to a
//! solution, so the common null space of the holonomy defects `T - I`
//! estimates `W`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QeError, Result};
use crate::field::ScalarField;
use crate::geometry::PointGeometry;
use crate::metric::{Domain, MetricProvider};
use crate::ode::{self, StepControl};
use crate::tensor::covector_norm;
use crate::verifier::quotient_jet;
use crate::zoo::QEStructure;

/// `(u, du)` at a point, as a flat vector of length `n + 1`.
pub type ProlongedState = Vec<f64>;

pub fn state_of(u: &dyn ScalarField, x: &[f64]) -> Result<ProlongedState> {
    let mut s = vec![u.value(x)?];
    s.extend(u.gradient(x)?);
    Ok(s)
}

/// A curve in coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Path {
    /// Straight coordinate segments through the listed vertices.
    Polyline { points: Vec<Vec<f64>> },
    /// Geodesic from `start` with initial velocity `velocity`, for parameter time `length`.
    Geodesic { start: Vec<f64>, velocity: Vec<f64>, length: f64 },
}

impl Path {
    pub fn segment(a: &[f64], b: &[f64]) -> Self {
        Path::Polyline { points: vec![a.to_vec(), b.to_vec()] }
    }

    pub fn start(&self) -> &[f64] {
        match self {
            Path::Polyline { points } => &points[0],
            Path::Geodesic { start, .. } => start,
        }
    }

    /// Coordinate length of a polyline; `length * |velocity|` for a geodesic.
    pub fn coordinate_length(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        match self {
            Path::Polyline { points } => points
                .windows(2)
                .map(|w| norm(&w[0].iter().zip(&w[1]).map(|(a, b)| b - a).collect::<Vec<_>>()))
                .sum(),
            Path::Geodesic { velocity, length, .. } => length * norm(velocity),
        }
    }

    /// Concatenation of two polylines sharing an endpoint.
    pub fn then(&self, other: &Path) -> Result<Path> {
        match (self, other) {
            (Path::Polyline { points: a }, Path::Polyline { points: b }) => {
                let end = a.last().expect("nonempty polyline");
                if end.iter().zip(&b[0]).any(|(x, y)| (x - y).abs() > 1e-12 * (1.0 + x.abs())) {
                    return Err(QeError::Precondition("paths do not meet".into()));
                }
                let mut pts = a.clone();
                pts.extend(b[1..].iter().cloned());
                Ok(Path::Polyline { points: pts })
            }
            _ => Err(QeError::Precondition("only polylines concatenate".into())),
        }
    }
}

/// Linear map from the initial to the final prolonged state along a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportOperator {
    #[serde(with = "matrix_rows")]
    pub matrix: DMatrix<f64>,
    pub path: Path,
    /// Accumulated local error estimate of the integrator.
    pub error: f64,
    /// Endpoint of the path (differs from the last vertex only for geodesics).
    pub end: Vec<f64>,
}

impl TransportOperator {
    pub fn apply(&self, state: &[f64]) -> ProlongedState {
        (&self.matrix * nalgebra::DVector::from_column_slice(state)).iter().copied().collect()
    }
}

mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let c = rows.first().map_or(0, |r| r.len());
        Ok(DMatrix::from_fn(n, c, |i, j| rows[i][j]))
    }
}

/// Coefficient matrix of the transport ODE at `x` for velocity `v`.
fn transport_generator(provider: &dyn MetricProvider, m: f64, lambda: f64, x: &[f64], v: &[f64]) -> Result<(DMatrix<f64>, PointGeometry)> {
    let pg = PointGeometry::second_order(provider, x)?;
    let ric = pg.ricci();
    let n = x.len();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for b in 0..n {
        a[(0, 1 + b)] = v[b];
    }
    for i in 0..n {
        let mut s = 0.0;
        for b in 0..n {
            s += (ric.get(i, b) - lambda * pg.g[(i, b)]) * v[b];
        }
        a[(1 + i, 0)] = s / m;
        for k in 0..n {
            a[(1 + i, 1 + k)] = (0..n).map(|b| pg.gamma.get(k, i, b) * v[b]).sum();
        }
    }
    Ok((a, pg))
}

fn mat_mul_into(a: &DMatrix<f64>, y: &[f64], dy: &mut [f64], n1: usize) {
    // y, dy hold (n+1)x(n+1) column-major
    for col in 0..n1 {
        for row in 0..n1 {
            let mut s = 0.0;
            for k in 0..n1 {
                s += a[(row, k)] * y[col * n1 + k];
            }
            dy[col * n1 + row] = s;
        }
    }
}

/// Integrates the transport ODE for the identity matrix along `path`.
pub fn transport(provider: &dyn MetricProvider, m: f64, lambda: f64, path: &Path, tol: f64) -> Result<TransportOperator> {
    let n = provider.dim();
    let n1 = n + 1;
    let ctl = StepControl { h_max: 0.25, ..StepControl::with_tol(tol) };
    let mut y: Vec<f64> = DMatrix::<f64>::identity(n1, n1).as_slice().to_vec();
    let mut error = 0.0;
    let end;
    match path {
        Path::Polyline { points } => {
            if points.len() < 2 || points.iter().any(|p| p.len() != n) {
                return Err(QeError::Precondition("polyline needs at least two points of the chart dimension".into()));
            }
            for w in points.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let v: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
                if v.iter().all(|c| *c == 0.0) {
                    continue;
                }
                let mut x = vec![0.0; n];
                let stats = ode::integrate(
                    |t, yy, dy| {
                        for i in 0..n {
                            x[i] = a[i] + t * v[i];
                        }
                        let (gen, _) = transport_generator(provider, m, lambda, &x, &v)?;
                        mat_mul_into(&gen, yy, dy, n1);
                        Ok(())
                    },
                    0.0,
                    &mut y,
                    1.0,
                    &ctl,
                )?;
                error += stats.error_sum * tol;
            }
            end = points.last().expect("checked").clone();
        }
        Path::Geodesic { start, velocity, length } => {
            if start.len() != n || velocity.len() != n {
                return Err(QeError::Dimension { expected: n, got: start.len() });
            }
            let mut full = start.clone();
            full.extend(velocity.iter().copied());
            full.extend(y.iter().copied());
            let stats = ode::integrate(
                |_, yy, dy| {
                    let (x, v) = (&yy[..n], &yy[n..2 * n]);
                    let (gen, pg) = transport_generator(provider, m, lambda, x, v)?;
                    for k in 0..n {
                        dy[k] = v[k];
                        let mut acc = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                acc += pg.gamma.get(k, i, j) * v[i] * v[j];
                            }
                        }
                        dy[n + k] = -acc;
                    }
                    mat_mul_into(&gen, &yy[2 * n..], &mut dy[2 * n..], n1);
                    Ok(())
                },
                0.0,
                &mut full,
                *length,
                &ctl,
            )?;
            error += stats.error_sum * tol;
            end = full[..n].to_vec();
            y.copy_from_slice(&full[2 * n..]);
        }
    }
    let matrix = DMatrix::from_column_slice(n1, n1, &y);
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(QeError::Evaluation("transport".into()));
    }
    Ok(TransportOperator { matrix, path: path.clone(), error, end })
}

/// Stacks `T_k - I` for loops based at `base`.
pub fn holonomy_defects(
    provider: &dyn MetricProvider,
    m: f64,
    lambda: f64,
    base: &[f64],
    loops: &[Path],
    tol: f64,
) -> Result<DMatrix<f64>> {
    let n1 = base.len() + 1;
    let mut blocks = Vec::with_capacity(loops.len());
    for lp in loops {
        let Path::Polyline { points } = lp else {
            return Err(QeError::Precondition("loops must be polylines".into()));
        };
        let closed = |p: &Vec<f64>| p.iter().zip(base).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        let first = points.first().ok_or_else(|| QeError::OpenLoop(f64::INFINITY))?;
        let last = points.last().expect("nonempty");
        if !closed(first) || !closed(last) {
            let gap = last.iter().zip(base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            return Err(QeError::OpenLoop(gap));
        }
        let t = transport(provider, m, lambda, lp, tol)?;
        blocks.push(t.matrix - DMatrix::identity(n1, n1));
    }
    let mut out = DMatrix::zeros(blocks.len() * n1, n1);
    for (k, b) in blocks.iter().enumerate() {
        out.view_mut((k * n1, 0), (n1, n1)).copy_from(b);
    }
    Ok(out)
}

/// Scales of the coordinate rectangles.
pub const RECTANGLE_SCALES: [f64; 3] = [0.2, 0.5, 1.0];

fn box_bounds(domain: &Domain, base: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match domain {
        Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
        Domain::Exterior { .. } => (base.iter().map(|b| b - 1.0).collect(), base.iter().map(|b| b + 1.0).collect()),
    }
}

/// Side of a rectangle along `axis`: `s` toward the roomier face, shrunk to fit.
fn fitted_side(lo: f64, hi: f64, b: f64, s: f64) -> f64 {
    let (up, down) = (hi - b, b - lo);
    if up >= down {
        s.min(0.95 * up)
    } else {
        -s.min(0.95 * down)
    }
}

/// Coordinate rectangles at each scale in each coordinate plane through `base`,
/// then `random` closed polygons inside the domain.
pub fn standard_loops(domain: &Domain, base: &[f64], random: usize, seed: u64) -> Vec<Path> {
    let n = base.len();
    let (lo, hi) = box_bounds(domain, base);
    let mut loops = Vec::new();
    for &s in &RECTANGLE_SCALES {
        for i in 0..n {
            for j in (i + 1)..n {
                let si = fitted_side(lo[i], hi[i], base[i], s);
                let sj = fitted_side(lo[j], hi[j], base[j], s);
                let mut p1 = base.to_vec();
                p1[i] += si;
                let mut p2 = p1.clone();
                p2[j] += sj;
                let mut p3 = base.to_vec();
                p3[j] += sj;
                loops.push(Path::Polyline { points: vec![base.to_vec(), p1, p2, p3, base.to_vec()] });
            }
        }
    }
    if n >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random {
            let k = rng.gen_range(2..=4);
            let mut pts = vec![base.to_vec()];
            for _ in 0..k {
                let p: Vec<f64> = (0..n)
                    .map(|i| {
                        let a = (base[i] - 1.0).max(lo[i]);
                        let b = (base[i] + 1.0).min(hi[i]);
                        rng.gen_range(a..=b)
                    })
                    .collect();
                pts.push(p);
            }
            pts.push(base.to_vec());
            loops.push(Path::Polyline { points: pts });
        }
    }
    loops
}

/// Options of [`estimate_dimension`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimOptions {
    pub base: Option<Vec<f64>>,
    /// Number of random polygons added to the coordinate rectangles.
    pub loop_budget: usize,
    /// Relative singular-value threshold.
    pub tol: f64,
    pub transport_tol: f64,
    pub seed: u64,
    /// Points per axis of the positivity grid.
    pub verify_grid: usize,
}

impl Default for DimOptions {
    fn default() -> Self {
        Self { base: None, loop_budget: 8, tol: 1e-6, transport_tol: 1e-11, seed: 0, verify_grid: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSpaceEstimate {
    pub dim_estimate: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub tol: f64,
    /// Absolute cut: `tol * max(sigma_max, 1)`.
    pub threshold: f64,
    /// Smallest kept singular value over the largest discarded one.
    pub gap_ratio: Option<f64>,
    pub low_confidence: bool,
    pub base: Vec<f64>,
    pub basis: Vec<ProlongedState>,
    /// Dimension of the span of solutions positive on the verification grid.
    pub positive_count: usize,
    pub loops: usize,
}

/// Dimension estimate from the stacked defects of [`standard_loops`].
pub fn estimate_dimension(s: &QEStructure, opts: &DimOptions) -> Result<SolutionSpaceEstimate> {
    estimate_dimension_for(s.provider.as_ref(), s.m, s.lambda, &s.domain, opts)
}

pub fn estimate_dimension_for(
    provider: &dyn MetricProvider,
    m: f64,
    lambda: f64,
    domain: &Domain,
    opts: &DimOptions,
) -> Result<SolutionSpaceEstimate> {
    let base = opts.base.clone().unwrap_or_else(|| domain.center());
    let n = base.len();
    if n != provider.dim() {
        return Err(QeError::Dimension { expected: provider.dim(), got: n });
    }
    let loops = standard_loops(domain, &base, opts.loop_budget, opts.seed);
    let stack = holonomy_defects(provider, m, lambda, &base, &loops, opts.transport_tol)?;
    let mut est = null_space(&stack, n + 1, opts.tol);
    est.base = base;
    est.loops = loops.len();
    est.positive_count = positive_span(provider, m, lambda, domain, &est, opts)?;
    Ok(est)
}

/// SVD of a stacked defect matrix with `cols` columns.
pub fn null_space(stack: &DMatrix<f64>, cols: usize, tol: f64) -> SolutionSpaceEstimate {
    let (sv, vt) = if stack.nrows() == 0 {
        (vec![0.0; cols], DMatrix::identity(cols, cols))
    } else {
        // pad to at least `cols` rows so the SVD returns a full right basis
        let rows = stack.nrows().max(cols);
        let mut a = DMatrix::zeros(rows, cols);
        a.view_mut((0, 0), (stack.nrows(), cols)).copy_from(stack);
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let mut idx: Vec<usize> = (0..cols).collect();
        idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
        let vt = DMatrix::from_fn(cols, cols, |r, c| vt[(idx[r], c)]);
        (sv, vt)
    };
    let smax = sv.first().copied().unwrap_or(0.0);
    let threshold = tol * smax.max(1.0);
    let dim = sv.iter().filter(|&&s| s <= threshold).count();
    let kept_min = sv.iter().copied().filter(|&s| s > threshold).fold(f64::INFINITY, f64::min);
    let dropped_max = sv.iter().copied().filter(|&s| s <= threshold).fold(0.0_f64, f64::max);
    let gap_ratio = (kept_min.is_finite() && dim > 0).then(|| kept_min / dropped_max.max(f64::MIN_POSITIVE));
    let basis = (cols - dim..cols).map(|r| vt.row(r).iter().copied().collect()).collect();
    SolutionSpaceEstimate {
        dim_estimate: dim,
        singular_values: sv,
        tol,
        threshold,
        gap_ratio,
        low_confidence: gap_ratio.is_some_and(|g| g < 10.0),
        base: Vec::new(),
        basis,
        positive_count: 0,
        loops: 0,
    }
}

/// Values of each basis solution on the verification grid, transported from the base.
fn basis_values(
    provider: &dyn MetricProvider,
    m: f64,
    lambda: f64,
    domain: &Domain,
    est: &SolutionSpaceEstimate,
    opts: &DimOptions,
) -> Result<Vec<Vec<f64>>> {
    let grid = match domain {
        Domain::Box { .. } => domain.grid(opts.verify_grid),
        Domain::Exterior { .. } => Vec::new(),
    };
    let mut vals = vec![Vec::with_capacity(grid.len()); est.basis.len()];
    for x in &grid {
        let t = transport(provider, m, lambda, &Path::segment(&est.base, x), opts.transport_tol)?;
        for (k, b) in est.basis.iter().enumerate() {
            vals[k].push(t.apply(b)[0]);
        }
    }
    Ok(vals)
}

/// Positivity is open on a finite grid, so if one combination is positive
/// everywhere then the positive cone spans the whole estimate; otherwise 0.
fn positive_span(
    provider: &dyn MetricProvider,
    m: f64,
    lambda: f64,
    domain: &Domain,
    est: &SolutionSpaceEstimate,
    opts: &DimOptions,
) -> Result<usize> {
    if est.dim_estimate == 0 {
        return Ok(0);
    }
    let vals = basis_values(provider, m, lambda, domain, est, opts)?;
    Ok(if find_positive_combination(&vals).is_some() { est.dim_estimate } else { 0 })
}

/// Perceptron search for `c` with `sum_k c_k vals[k][j] > 0` for all `j`.
pub fn find_positive_combination(vals: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = vals.len();
    let pts = vals.first().map_or(0, |v| v.len());
    if d == 0 {
        return None;
    }
    let col = |j: usize| -> Vec<f64> { (0..d).map(|k| vals[k][j]).collect() };
    let eval = |c: &[f64], j: usize| -> f64 { (0..d).map(|k| c[k] * vals[k][j]).sum() };
    let mut c = vec![0.0; d];
    // start from the best signed basis vector
    let mut best = f64::NEG_INFINITY;
    for k in 0..d {
        for sgn in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[k] = sgn;
            let worst = (0..pts).map(|j| eval(&e, j)).fold(f64::INFINITY, f64::min);
            if worst > best {
                best = worst;
                c = e;
            }
        }
    }
    for _ in 0..5000 {
        let (j, worst) = (0..pts).map(|j| (j, eval(&c, j))).fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if worst > 0.0 {
            return Some(c);
        }
        let x = col(j);
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            return None;
        }
        for k in 0..d {
            c[k] += x[k] / nx;
        }
    }
    None
}

/// Outcome of the quotient scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Dichotomy {
    Constant,
    NowhereZero,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DichotomyScan {
    pub class: Dichotomy,
    pub min_grad: f64,
    pub max_grad: f64,
    pub eps: f64,
}

/// Classifies `|grad (u2/u1)|` over `grid`.
pub fn quotient_dichotomy_scan(
    provider: &dyn MetricProvider,
    u1: &dyn ScalarField,
    u2: &dyn ScalarField,
    grid: &[Vec<f64>],
) -> Result<DichotomyScan> {
    let mut min_grad = f64::INFINITY;
    let mut max_grad: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for x in grid {
        let pg = PointGeometry::first_order(provider, x)?;
        let (z, dz, _) = quotient_jet(&pg, u1, u2, x)?;
        let g = covector_norm(&pg.ginv, &dz);
        let dlog = covector_norm(&pg.ginv, &u1.gradient(x)?) / u1.value(x)?;
        scale = scale.max(z.abs() * (1.0 + dlog));
        min_grad = min_grad.min(g);
        max_grad = max_grad.max(g);
    }
    let eps = 1e-12 * scale;
    let class = if max_grad <= eps {
        Dichotomy::Constant
    } else if min_grad > eps {
        Dichotomy::NowhereZero
    } else {
        Dichotomy::Violation
    };
    Ok(DichotomyScan { class, min_grad, max_grad, eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build, Params};

    #[test]
    fn line_transport_is_hyperbolic_rotation() {
        let s = build("table1-line-exp", &Params::default()).unwrap();
        let t = transport(s.provider.as_ref(), s.m, s.lambda, &Path::segment(&[-0.5], &[0.7]), 1e-12).unwrap();
        let l: f64 = 1.2;
        let want = DMatrix::from_row_slice(2, 2, &[l.cosh(), l.sinh(), l.sinh(), l.cosh()]);
        assert!((t.matrix - want).amax() < 1e-10);
    }

    #[test]
    fn flat_transport_is_affine() {
        let s = build("euclid3", &Params::default()).unwrap();
        let t = transport(s.provider.as_ref(), s.m, 0.0, &Path::segment(&[0.0; 3], &[1.0, 0.0, 0.0]), 1e-12).unwrap();
        let out = t.apply(&[2.0, 0.5, -1.0, 3.0]);
        assert!((out[0] - 2.5).abs() < 1e-14);
        assert_eq!(&out[1..], &[0.5, -1.0, 3.0]);
    }

    #[test]
    fn null_space_of_empty_stack() {
        let e = null_space(&DMatrix::zeros(0, 2), 2, 1e-6);
        assert_eq!(e.dim_estimate, 2);
        assert_eq!(e.basis.len(), 2);
    }

    #[test]
    fn perceptron_finds_positive_mix() {
        // e^x and e^-x sampled: each alone is positive
        let xs = [-1.0f64, 0.0, 1.0];
        let vals = vec![xs.iter().map(|x| x.sinh()).collect(), xs.iter().map(|x| x.cosh()).collect()];
        assert!(find_positive_combination(&vals).is_some());
        let vals = vec![xs.to_vec()];
        assert!(find_positive_combination(&vals).is_none());
    }
}
