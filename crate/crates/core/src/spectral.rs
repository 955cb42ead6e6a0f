//! Perron-Frobenius machinery: spectra, graph tests on nonzero patterns,
//! the normalized left Perron vector and a couple of perturbation checks.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::InfluenceMatrix;

/// QR sweeps allowed per deflated eigenvalue before giving up.
pub const EIGEN_MAX_ITER: usize = 100;

pub const PERRON_TOL: f64 = 1e-12;
pub const PERRON_MAX_ITER: usize = 1_000_000;

/// Slack allowed when comparing the smallest singular value to Hong's bound.
pub const HONG_SLACK: f64 = 1e-10;

/// Eigenvalues with multiplicity, ordered by modulus and then by argument in
/// `(-pi, pi]`. Moduli within a relative `1e-12` of each other count as tied.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut h: Vec<Vec<f64>> = a.to_rows();
    balance(&mut h);
    reduce_to_hessenberg(&mut h);
    let mut ev = hessenberg_qr(&mut h)?;
    if n > 0 {
        sort_spectrum(&mut ev, a.max_abs());
    }
    Ok(ev)
}

/// Diagonal similarity scaling by powers of two so rows and columns have
/// comparable norms.
fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c: f64 = 0.0;
            let mut r: f64 = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                c += a[j][i].abs();
                r += a[i][j].abs();
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

/// Upper Hessenberg form by stabilized elementary similarity transforms.
fn reduce_to_hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for m in 1..n.saturating_sub(1) {
        let mut x: f64 = 0.0;
        let mut piv = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                piv = j;
            }
        }
        if piv != m {
            for j in (m - 1)..n {
                let tmp = a[piv][j];
                a[piv][j] = a[m][j];
                a[m][j] = tmp;
            }
            for row in a.iter_mut() {
                row.swap(piv, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..n {
                        a[i][j] -= y * a[m][j];
                    }
                    for row in a.iter_mut() {
                        row[m] += y * row[i];
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..i - 1 {
            a[i][j] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, with exceptional
/// shifts every 10 stalled iterations.
fn hessenberg_qr(a: &mut [Vec<f64>]) -> Result<Vec<Complex64>> {
    let n = a.len();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm: f64 = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut t = 0.0;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nu - 1][nu - 1];
            let mut w = a[nu][nu - 1] * a[nu - 1][nu];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its == EIGEN_MAX_ITER {
                return Err(Error::ConvergenceFailure(EIGEN_MAX_ITER));
            }
            if its > 0 && its % 10 == 0 {
                t += x;
                for i in 0..=nu {
                    a[i][i] -= x;
                }
                let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nu - 1 { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nu - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = x * row[k] + y * row[k + 1];
                        if k != nu - 1 {
                            pp += z * row[k + 2];
                            row[k + 2] -= pp * r;
                        }
                        row[k + 1] -= pp * q;
                        row[k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

fn argument(z: &Complex64) -> f64 {
    let arg = z.im.atan2(z.re);
    if arg <= -PI {
        PI
    } else {
        arg
    }
}

fn sort_spectrum(ev: &mut [Complex64], scale: f64) {
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let tol = 1e-12 * scale.max(1.0);
    let mut start = 0;
    while start < ev.len() {
        let base = ev[start].norm();
        let mut end = start + 1;
        while end < ev.len() && ev[end].norm() - base <= tol {
            end += 1;
        }
        ev[start..end].sort_by(|a, b| argument(a).total_cmp(&argument(b)));
        start = end;
    }
}

pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().fold(0.0, |m, z| m.max(z.norm())))
}

/// Directed graph of the strictly positive entries of a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPattern {
    n: usize,
    adjacency: Vec<Vec<usize>>,
}

impl GraphPattern {
    pub fn from_matrix(a: &Matrix) -> Self {
        let n = a.rows();
        let adjacency = (0..n)
            .map(|i| (0..a.cols()).filter(|&j| a[(i, j)] > 0.0).collect())
            .collect();
        GraphPattern { n, adjacency }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) out of range for {} nodes",
                    i, j, n
                )));
            }
            if !adjacency[i].contains(&j) {
                adjacency[i].push(j);
            }
        }
        for succ in &mut adjacency {
            succ.sort_unstable();
        }
        Ok(GraphPattern { n, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, succ)| succ.iter().map(move |&j| (i, j)))
    }

    fn reversed(&self) -> GraphPattern {
        let mut adjacency = vec![Vec::new(); self.n];
        for (i, j) in self.edges() {
            adjacency[j].push(i);
        }
        GraphPattern {
            n: self.n,
            adjacency,
        }
    }

    /// BFS distances from `source`; `None` for unreachable nodes.
    fn levels(&self, source: usize) -> Vec<Option<u64>> {
        let mut level = vec![None; self.n];
        let mut queue = VecDeque::new();
        level[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let lu = level[u].unwrap();
            for &v in &self.adjacency[u] {
                if level[v].is_none() {
                    level[v] = Some(lu + 1);
                    queue.push_back(v);
                }
            }
        }
        level
    }
}

/// True iff the pattern's directed graph is strongly connected.
pub fn is_irreducible(pattern: &GraphPattern) -> bool {
    if pattern.n == 0 {
        return false;
    }
    pattern.levels(0).iter().all(Option::is_some)
        && pattern.reversed().levels(0).iter().all(Option::is_some)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of an irreducible pattern: gcd of all directed cycle lengths.
///
/// With BFS levels `l` from any root, the period is the gcd of
/// `l(u) + 1 - l(v)` over all edges `u -> v`.
pub fn period(pattern: &GraphPattern) -> Result<u64> {
    if !is_irreducible(pattern) {
        return Err(Error::NotIrreducible);
    }
    let level = pattern.levels(0);
    let g = pattern.edges().fold(0, |g, (u, v)| {
        let lu = level[u].unwrap();
        let lv = level[v].unwrap();
        gcd(g, lu + 1 - lv)
    });
    Ok(g)
}

pub fn is_primitive(pattern: &GraphPattern) -> Result<bool> {
    Ok(period(pattern)? == 1)
}

/// Normalized left Perron vector of an irreducible row-stochastic matrix.
pub fn left_perron_vector(w: &InfluenceMatrix) -> Result<Vec<f64>> {
    perron_left_of(w.matrix())
}

/// Power iteration on `(W' + I)/2`, which is primitive for any irreducible `W`
/// and therefore converges even when `W` itself is periodic.
pub(crate) fn perron_left_of(w: &Matrix) -> Result<Vec<f64>> {
    if !is_irreducible(&GraphPattern::from_matrix(w)) {
        return Err(Error::NotIrreducible);
    }
    let n = w.rows();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..PERRON_MAX_ITER {
        let xw = w.vec_mul(&x);
        let residual = xw
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if residual <= PERRON_TOL {
            return Ok(x);
        }
        let mut next: Vec<f64> = xw.iter().zip(&x).map(|(a, b)| 0.5 * (a + b)).collect();
        let s: f64 = next.iter().sum();
        for v in &mut next {
            *v /= s;
        }
        x = next;
    }
    Err(Error::ConvergenceFailure(PERRON_MAX_ITER))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub spectral_radius: f64,
    pub eigenvalues: Vec<Complex64>,
    pub perron_left: Vec<f64>,
}

impl SpectralSummary {
    pub fn of(w: &InfluenceMatrix) -> Result<Self> {
        let eigenvalues = eigenvalues(w.matrix())?;
        let spectral_radius = eigenvalues.last().map_or(0.0, |z| z.norm());
        Ok(SpectralSummary {
            spectral_radius,
            eigenvalues,
            perron_left: left_perron_vector(w)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HongBound {
    pub bound: f64,
    pub sigma_min: f64,
    pub holds: bool,
}

/// Hong-type lower bound on the smallest singular value of a square matrix
/// whose rows all have Euclidean norm at most `beta`:
/// `((n-1)/(n beta^2))^((n-1)/2) |det A|`.
pub fn hong_lower_bound(a: &Matrix, beta: f64) -> Result<HongBound> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("Hong bound needs a square matrix".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {}", beta)));
    }
    for i in 0..a.rows() {
        let norm = linalg::norm2(a.row(i));
        if norm > beta {
            return Err(Error::RowNormExceeded { row: i, norm, beta });
        }
    }
    let n = a.rows() as f64;
    let det = linalg::determinant(a)?;
    let bound = ((n - 1.0) / (n * beta * beta)).powf((n - 1.0) / 2.0) * det.abs();
    let sigma_min = linalg::min_singular_value(a);
    Ok(HongBound {
        bound,
        sigma_min,
        holds: sigma_min >= bound - HONG_SLACK,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPoint {
    pub eps: f64,
    /// `(lambda_n[W + eps X] - 1) / eps`
    pub observed_slope: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    /// `alpha' X 1 / (alpha' 1)`, the first-order sensitivity of the Perron root.
    pub predicted_slope: f64,
    pub points: Vec<PerturbationPoint>,
}

/// Compares the finite-difference drift of the Perron root of `W + eps X`
/// with its first-order prediction from the left and right Perron vectors.
pub fn eigen_perturbation_check(
    w: &InfluenceMatrix,
    x: &Matrix,
    eps_grid: &[f64],
) -> Result<PerturbationReport> {
    let n = w.n();
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch("perturbation must be n x n".into()));
    }
    let alpha = left_perron_vector(w)?;
    let ones = vec![1.0; n];
    let predicted_slope = linalg::dot(&alpha, &x.mul_vec(&ones)) / alpha.iter().sum::<f64>();
    let mut points = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let perturbed = w.matrix().add(&x.scale(eps));
        let root = eigenvalues(&perturbed)?
            .into_iter()
            .min_by(|a, b| (a - 1.0).norm().total_cmp(&(b - 1.0).norm()))
            .expect("non-empty spectrum");
        let observed_slope = (root.re - 1.0) / eps;
        points.push(PerturbationPoint {
            eps,
            observed_slope,
            deviation: (observed_slope - predicted_slope).abs(),
        });
    }
    Ok(PerturbationReport {
        predicted_slope,
        points,
    })
}

/// Greedy nearest-neighbour assignment: `result[i]` is the index in `next`
/// paired with `prev[i]`.
pub fn match_eigenvalues(prev: &[Complex64], next: &[Complex64]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = prev
        .iter()
        .enumerate()
        .flat_map(|(i, a)| next.iter().enumerate().map(move |(j, b)| ((a - b).norm(), i, j)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned = vec![usize::MAX; prev.len()];
    let mut taken = vec![false; next.len()];
    for (_, i, j) in pairs {
        if assigned[i] == usize::MAX && !taken[j] {
            assigned[i] = j;
            taken[j] = true;
        }
    }
    assigned
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// Grid as supplied (strictly decreasing).
    pub grid: Vec<f64>,
    /// `distances[g][i] = |lambda_i[(I - sigma_g S) W] - lambda_i[W]|`
    pub distances: Vec<Vec<f64>>,
    /// Every eigenvalue's distance shrinks (weakly) as sigma decreases.
    pub monotone: bool,
}

/// Tracks each eigenvalue of `W` along the effective matrices
/// `(I - sigma diag(p)) W` for a decreasing sigma grid.
pub fn eigen_continuity(
    w: &InfluenceMatrix,
    sigma_tilde: &[f64],
    grid: &[f64],
) -> Result<ContinuityReport> {
    if grid.windows(2).any(|g| g[1] >= g[0]) {
        return Err(Error::GridNotDecreasing);
    }
    let base = eigenvalues(w.matrix())?;
    let n = base.len();
    let mut distances = vec![Vec::new(); grid.len()];
    let mut tracked = base.clone();
    // walk from the smallest sigma outward so each step is a small move
    for (g, &sigma) in grid.iter().enumerate().rev() {
        let scale: Vec<f64> = sigma_tilde.iter().map(|p| 1.0 - sigma * p).collect();
        let spectrum = eigenvalues(&w.matrix().scale_rows(&scale))?;
        let assign = match_eigenvalues(&tracked, &spectrum);
        tracked = assign.iter().map(|&j| spectrum[j]).collect();
        distances[g] = (0..n).map(|i| (tracked[i] - base[i]).norm()).collect();
    }
    let monotone = distances
        .windows(2)
        .all(|d| d[0].iter().zip(&d[1]).all(|(big, small)| *small <= *big + 1e-12));
    Ok(ContinuityReport {
        grid: grid.to_vec(),
        distances,
        monotone,
    })
}
