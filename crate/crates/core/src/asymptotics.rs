//! Small-immunity behaviour of the static gain.
//!
//! As `sigma_max -> 0+` the gain `H(sigma_max)` approaches the rank-one matrix
//! `1 alpha' S / (alpha' S 1)` with an `O(sigma_max)` error, where `alpha` is the
//! normalized left Perron vector of `W` and `S = diag(p)`. The functions here
//! compute that limit and measure how a concrete instance approaches it:
//! relative gain gaps and their log-log rate, the spread of the steady state
//! (quasi-consensus), a boundedness study of `|H|`, the two orders of the
//! `k -> inf` / `sigma -> 0` limits, and the two-timescale transient.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{
    self, GainKind, GainMatrix, ImmunityProfile, InfluenceMatrix, OpinionVector, ProfileOptions,
};
use crate::spectral;

/// Number of smallest grid points used for the rate fit.
pub const RATE_FIT_POINTS: usize = 3;
/// The spread constant `M` is fitted at the largest sigma and inflated by this
/// factor before being checked at the smaller ones.
pub const CONSENSUS_CONSTANT_SLACK: f64 = 2.0;
/// `|H|` over a grid counts as bounded when its largest value stays within
/// this multiple of its smallest.
pub const NORM_BOUND_RATIO: f64 = 10.0;
/// Non-Perron eigenvalues this close to 1 make the spectrum degenerate.
pub const DEGENERATE_EIGEN_TOL: f64 = 1e-10;
/// Plateau: spread below this fraction of the initial spread ...
pub const PLATEAU_SPREAD_FRACTION: f64 = 0.05;
/// ... and mean within this fraction of the initial spread from `alpha' y0`.
pub const PLATEAU_MEAN_FRACTION: f64 = 0.02;

fn relaxed() -> ProfileOptions {
    ProfileOptions {
        allow_zero: true,
        ..Default::default()
    }
}

fn check_sigma_tilde(w: &InfluenceMatrix, p: &[f64]) -> Result<()> {
    if p.len() != w.n() {
        return Err(Error::DimensionMismatch(format!(
            "sigma_tilde has length {}, W is {}x{}",
            p.len(),
            w.n(),
            w.n()
        )));
    }
    model::validate_sigma_tilde(p, true)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    let in_range = grid.iter().all(|&s| s > 0.0 && s < 1.0);
    if grid.is_empty() || !in_range || grid.windows(2).any(|g| g[1] >= g[0]) {
        return Err(Error::GridNotDecreasing);
    }
    Ok(())
}

/// `max_i y_i - min_i y_i`
pub fn quasi_consensus_gap(y: &[f64]) -> f64 {
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    if y.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Row vector `alpha' S / (alpha' S 1)` shared by every row of the limit gain.
pub fn limit_weights(w: &InfluenceMatrix, p: &[f64]) -> Result<Vec<f64>> {
    check_sigma_tilde(w, p)?;
    let alpha = spectral::left_perron_vector(w)?;
    let weighted: Vec<f64> = alpha.iter().zip(p).map(|(a, p)| a * p).collect();
    let q1: f64 = weighted.iter().sum();
    assert!(q1 > 0.0, "alpha' S 1 must be positive, got {}", q1);
    Ok(weighted.iter().map(|x| x / q1).collect())
}

/// Rank-one limit `1 alpha' S / (alpha' S 1)` of the static gain.
pub fn limit_gain(w: &InfluenceMatrix, p: &[f64]) -> Result<GainMatrix> {
    let row = limit_weights(w, p)?;
    let ones = vec![1.0; w.n()];
    Ok(GainMatrix {
        h: Matrix::outer(&ones, &row),
        kind: GainKind::Limit,
    })
}

/// `|H - H_bar| / |H|` in the spectral norm.
pub fn gain_gap(h: &GainMatrix, h_bar: &GainMatrix) -> f64 {
    let denom = linalg::spectral_norm(&h.h);
    linalg::spectral_norm(&h.h.sub(&h_bar.h)) / denom
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub quasi_gaps: Vec<f64>,
    /// Slope of `ln gap` vs `ln sigma` over the smallest grid points.
    pub fitted_slope: f64,
    /// Fitted spread constant `M` with `spread <= M sigma`.
    pub consensus_constant: f64,
    /// The spread bound holds at every grid point.
    pub consensus_bound_holds: bool,
}

/// Gain gaps and steady-state spreads along a decreasing sigma grid.
pub fn rate_study(
    w: &InfluenceMatrix,
    p: &[f64],
    y0: &OpinionVector,
    grid: &[f64],
) -> Result<RateReport> {
    check_sigma_tilde(w, p)?;
    check_grid(grid)?;
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("rate fit needs at least two grid points".into()));
    }
    let h_bar = limit_gain(w, p)?;
    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&s| {
            let prof = ImmunityProfile::with_options(s, p.to_vec(), relaxed())?;
            let h = model::static_gain(w, &prof)?;
            let y_bar = h.apply(y0.values());
            Ok((gain_gap(&h, &h_bar), quasi_consensus_gap(&y_bar)))
        })
        .collect::<Result<_>>()?;
    let (gaps, quasi_gaps): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();

    let k = grid.len().min(RATE_FIT_POINTS);
    let tail = grid.len() - k;
    let fitted_slope = loglog_slope(&grid[tail..], &gaps[tail..]);

    let consensus_constant = CONSENSUS_CONSTANT_SLACK * quasi_gaps[0] / grid[0];
    let consensus_bound_holds = quasi_gaps
        .iter()
        .zip(grid)
        .all(|(q, s)| *q <= consensus_constant * s + 1e-14);

    Ok(RateReport {
        grid: grid.to_vec(),
        gaps,
        quasi_gaps,
        fitted_slope,
        consensus_constant,
        consensus_bound_holds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormBoundReport {
    /// `min |1 - lambda_i[W]|` over the non-Perron eigenvalues (`None` for n = 1).
    pub d0: Option<f64>,
    /// `((n-1)/(4n))^((n-1)/2) d0^(n-1)`
    pub c_w: f64,
    /// `1 / (c_w alpha' S 1)`, the small-sigma limit of the analytic bound.
    pub limit_bound: f64,
    pub norms: Vec<f64>,
    pub sup_norm: f64,
    pub min_norm: f64,
    pub bounded: bool,
}

/// Spectral norms of `H(sigma)` over a grid, next to the analytic constant.
pub fn h_norm_bound_study(w: &InfluenceMatrix, p: &[f64], grid: &[f64]) -> Result<NormBoundReport> {
    check_sigma_tilde(w, p)?;
    check_grid(grid)?;
    let n = w.n();
    let mut spectrum = spectral::eigenvalues(w.matrix())?;
    let perron = spectrum
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    spectrum.remove(perron);
    let mut d0: Option<f64> = None;
    for z in &spectrum {
        let d = (1.0 - z).norm();
        if d <= DEGENERATE_EIGEN_TOL {
            return Err(Error::DegenerateSpectrum(z.re));
        }
        d0 = Some(d0.map_or(d, |m| m.min(d)));
    }
    let nf = n as f64;
    let c_w = ((nf - 1.0) / (4.0 * nf)).powf((nf - 1.0) / 2.0) * d0.unwrap_or(1.0).powi(n as i32 - 1);
    let alpha = spectral::left_perron_vector(w)?;
    let q1 = linalg::dot(&alpha, p);
    let limit_bound = 1.0 / (c_w * q1);

    let norms: Vec<f64> = grid
        .par_iter()
        .map(|&s| {
            let prof = ImmunityProfile::with_options(s, p.to_vec(), relaxed())?;
            Ok(linalg::spectral_norm(&model::static_gain(w, &prof)?.h))
        })
        .collect::<Result<_>>()?;
    let sup_norm = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_norm = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let bounded = norms.iter().all(|x| x.is_finite()) && sup_norm <= NORM_BOUND_RATIO * min_norm;
    Ok(NormBoundReport {
        d0,
        c_w,
        limit_bound,
        norms,
        sup_norm,
        min_norm,
        bounded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleLimit {
    /// `lim_{sigma -> 0} lim_{k -> inf} y(sigma, k)`
    pub inner_then_outer: Vec<f64>,
    /// `lim_{k -> inf} lim_{sigma -> 0} y(sigma, k)`
    pub outer_then_inner: Vec<f64>,
}

/// Evaluates both orders of the iterated limit numerically.
///
/// The `k -> inf` limit at fixed sigma is the steady state; its `sigma -> 0`
/// limit is extrapolated from `small_sigma` and `small_sigma / 2`
/// (Richardson, cancelling the linear term). The `sigma -> 0` limit at fixed
/// `k` is the DeGroot iterate `W^k y0`, run for `k_large` steps.
pub fn double_limit_check(
    w: &InfluenceMatrix,
    p: &[f64],
    y0: &OpinionVector,
    small_sigma: f64,
    k_large: usize,
) -> Result<DoubleLimit> {
    check_sigma_tilde(w, p)?;
    let period = spectral::period(w.pattern())?;
    if period != 1 {
        return Err(Error::NotPrimitive(period));
    }
    let coarse = ImmunityProfile::with_options(small_sigma, p.to_vec(), relaxed())?;
    let fine = coarse.with_sigma_max(small_sigma / 2.0)?;
    let y_coarse = model::steady_state(w, &coarse, y0)?;
    let y_fine = model::steady_state(w, &fine, y0)?;
    let inner_then_outer = y_fine
        .values()
        .iter()
        .zip(y_coarse.values())
        .map(|(f, c)| 2.0 * f - c)
        .collect();
    let outer_then_inner = model::degroot_simulate(w, y0, k_large)?.last().to_vec();
    Ok(DoubleLimit {
        inner_then_outer,
        outer_then_inner,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleReport {
    /// `alpha' y0`, where the fast DeGroot-like phase heads.
    pub degroot_consensus: f64,
    /// `alpha' S y0 / (alpha' S 1)`, the small-sigma steady value.
    pub limit_consensus: f64,
    /// First step where opinions huddle around `alpha' y0`; `None` when the
    /// transient never shows that plateau.
    pub plateau_step: Option<usize>,
    pub plateau_spread: f64,
    pub final_opinions: Vec<f64>,
}

/// Scans an FJ trajectory for the early consensus near `alpha' y0` that
/// precedes the slow drift to the steady state.
pub fn timescale_trace(
    w: &InfluenceMatrix,
    prof: &ImmunityProfile,
    y0: &OpinionVector,
    k_max: usize,
) -> Result<TimescaleReport> {
    let period = spectral::period(w.pattern())?;
    if period != 1 {
        return Err(Error::NotPrimitive(period));
    }
    let alpha = spectral::left_perron_vector(w)?;
    let degroot_consensus = linalg::dot(&alpha, y0.values());
    let limit_consensus = linalg::dot(&limit_weights(w, prof.p())?, y0.values());

    let traj = model::fj_simulate(w, prof, y0, k_max)?;
    let spread0 = quasi_consensus_gap(y0.values());
    let n = y0.len() as f64;
    let floor = 64.0 * f64::EPSILON * degroot_consensus.abs().max(1.0);
    let plateau = traj.steps.iter().enumerate().find_map(|(k, y)| {
        let spread = quasi_consensus_gap(y);
        let mean = y.iter().sum::<f64>() / n;
        let near = (mean - degroot_consensus).abs() <= PLATEAU_MEAN_FRACTION * spread0 + floor;
        (spread <= PLATEAU_SPREAD_FRACTION * spread0 + floor && near).then_some((k, spread))
    });
    Ok(TimescaleReport {
        degroot_consensus,
        limit_consensus,
        plateau_step: plateau.map(|(k, _)| k),
        plateau_spread: plateau.map_or(f64::NAN, |(_, s)| s),
        final_opinions: traj.last().to_vec(),
    })
}

/// Residuals of the unit eigenpair of `H(sigma)`: right vector `1` and the
/// normalized left vector `alpha' Sigma (I - Sigma)^-1`.
pub fn gain_eigenpair_residuals(w: &InfluenceMatrix, prof: &ImmunityProfile) -> Result<(f64, f64)> {
    let h = model::static_gain(w, prof)?.h;
    let ones = vec![1.0; w.n()];
    let right = h
        .mul_vec(&ones)
        .iter()
        .fold(0.0f64, |m, x| m.max((x - 1.0).abs()));
    let alpha = spectral::left_perron_vector(w)?;
    let mut v: Vec<f64> = alpha
        .iter()
        .zip(prof.sigma())
        .map(|(a, s)| a * s / (1.0 - s))
        .collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    let left = h
        .vec_mul(&v)
        .iter()
        .zip(&v)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok((right, left))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ex1, ex2, EX_Y0};

    fn y0() -> OpinionVector {
        OpinionVector::new(EX_Y0.to_vec()).unwrap()
    }

    #[test]
    fn limit_gain_with_identity_weights_is_consensus_projector() {
        let inst = ex1();
        let hb = limit_gain(&inst.influence, &[1.0; 4]).unwrap();
        let alpha = spectral::left_perron_vector(&inst.influence).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((hb.h[(i, j)] - alpha[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn limit_gain_rank_one() {
        let inst = ex1();
        let hb = limit_gain(&inst.influence, &inst.sigma_tilde).unwrap();
        assert_eq!(hb.kind, GainKind::Limit);
        for i in 1..4 {
            assert_eq!(hb.h.row(i), hb.h.row(0));
        }
        assert!((hb.h.row_sums()[0] - 1.0).abs() < 1e-15);
        for v in hb.apply(&EX_Y0) {
            assert_eq!((v * 100.0).round() / 100.0, 0.30);
        }
    }

    #[test]
    fn limit_value_for_periodic_example() {
        let inst = ex2();
        let hb = limit_gain(&inst.influence, &inst.sigma_tilde).unwrap();
        let expected = (0.1 * 0.20 + 0.3 * 0.50 + 0.06 * 0.01 + 0.02 * 0.29) / 0.48;
        for v in hb.apply(&EX_Y0) {
            assert!((v - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn gap_of_identical_gains_is_zero() {
        let inst = ex1();
        let hb = limit_gain(&inst.influence, &inst.sigma_tilde).unwrap();
        assert_eq!(gain_gap(&hb, &hb), 0.0);
    }

    #[test]
    fn quasi_gap_simple() {
        assert_eq!(quasi_consensus_gap(&[0.3, 0.3, 0.3]), 0.0);
        assert_eq!(quasi_consensus_gap(&[0.0, 1.0]), 1.0);
    }

    #[test]
    fn loglog_slope_exact_power() {
        let xs = [1e-1, 1e-2, 1e-3];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rate_study_rejects_bad_grids() {
        let inst = ex1();
        let w = &inst.influence;
        let p = &inst.sigma_tilde;
        assert_eq!(rate_study(w, p, &y0(), &[0.01, 0.2]), Err(Error::GridNotDecreasing));
        assert_eq!(rate_study(w, p, &y0(), &[1.5, 0.2]), Err(Error::GridNotDecreasing));
        assert_eq!(rate_study(w, p, &y0(), &[0.2, 0.2]), Err(Error::GridNotDecreasing));
    }

    #[test]
    fn norm_bound_scalar_and_ex1() {
        let one = InfluenceMatrix::new(Matrix::identity(1)).unwrap();
        let r = h_norm_bound_study(&one, &[1.0], &[0.5, 0.1, 0.01]).unwrap();
        assert_eq!(r.d0, None);
        assert!(r.norms.iter().all(|&x| x == 1.0));
        assert!(r.bounded);

        let inst = ex1();
        let r = h_norm_bound_study(&inst.influence, &inst.sigma_tilde, &[0.2, 0.05, 0.01, 0.001]).unwrap();
        assert!(r.bounded);
        assert!(r.sup_norm < 2.0 * r.min_norm);
    }

    #[test]
    fn norm_bound_d0_on_periodic_example() {
        let inst = ex2();
        let r = h_norm_bound_study(&inst.influence, &inst.sigma_tilde, &[0.1, 0.01]).unwrap();
        // spectrum {-1, -2/3, 2/3, 1}: nearest non-Perron eigenvalue is 2/3
        assert!((r.d0.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn double_limit_needs_primitive() {
        let inst = ex2();
        assert_eq!(
            double_limit_check(&inst.influence, &inst.sigma_tilde, &y0(), 1e-5, 100),
            Err(Error::NotPrimitive(2))
        );
    }

    #[test]
    fn double_limit_consensus_input() {
        let inst = ex1();
        let c = OpinionVector::new(vec![0.7; 4]).unwrap();
        let d = double_limit_check(&inst.influence, &inst.sigma_tilde, &c, 1e-5, 200).unwrap();
        for (a, b) in d.inner_then_outer.iter().zip(&d.outer_then_inner) {
            assert!((a - 0.7).abs() < 1e-10 && (b - 0.7).abs() < 1e-10);
        }
    }

    #[test]
    fn timescale_cases() {
        let inst = ex1();
        let prof = ImmunityProfile::new(0.5, inst.sigma_tilde.clone()).unwrap();
        let r = timescale_trace(&inst.influence, &prof, &y0(), 200).unwrap();
        assert_eq!(r.plateau_step, None);

        let c = OpinionVector::new(vec![0.4; 4]).unwrap();
        let prof = ImmunityProfile::new(0.01, inst.sigma_tilde.clone()).unwrap();
        let r = timescale_trace(&inst.influence, &prof, &c, 10).unwrap();
        assert_eq!(r.plateau_step, Some(0));
        assert_eq!(r.plateau_spread, 0.0);
    }

    #[test]
    fn eigenpair_residuals_small() {
        let inst = ex2();
        for s in [0.3, 0.05, 0.001] {
            let prof = ImmunityProfile::new(s, inst.sigma_tilde.clone()).unwrap();
            let (r, l) = gain_eigenpair_residuals(&inst.influence, &prof).unwrap();
            assert!(r <= 1e-9 && l <= 1e-9, "{} {}", r, l);
        }
    }
}
