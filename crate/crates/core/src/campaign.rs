//! Seeded random instances and the invariant suite run over them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotics;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{self, ImmunityProfile, InfluenceMatrix, OpinionVector};
use crate::spectral;

/// Floor on the ring entry `i -> i+1 (mod n)` before row normalization.
pub const RING_FLOOR: f64 = 0.05;
pub const SIGMA_TILDE_LOW: f64 = 0.1;

/// Sigmas (decreasing) on which the spectral radius of `W~` must increase.
pub const STABILITY_GRID: [f64; 3] = [0.4, 0.2, 0.1];
pub const STABILITY_MARGIN: f64 = 1e-10;
pub const RATE_GRID: [f64; 3] = [1e-1, 1e-2, 1e-3];
pub const RATE_SLOPE_BAND: (f64, f64) = (0.9, 1.5);
pub const EIGENPAIR_TOL: f64 = 1e-9;
/// Rows of the random Hong test matrices are scaled to norm at most this.
pub const HONG_BETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstance {
    pub influence: InfluenceMatrix,
    pub sigma_tilde: Vec<f64>,
    pub y0: Vec<f64>,
    /// Unrelated square matrix with row norms `<= HONG_BETA`.
    pub hong_matrix: Matrix,
}

/// Uniform entries plus a floored directed ring (so the graph is strongly
/// connected), rows normalized; `p_i ~ U(0.1, 1]` with one entry forced to 1.
pub fn random_influence(n: usize, rng: &mut impl Rng) -> InfluenceMatrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = rng.gen::<f64>();
        }
        let ring = (i + 1) % n;
        w[(i, ring)] = w[(i, ring)].max(RING_FLOOR);
    }
    let sums = w.row_sums();
    let inv: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
    InfluenceMatrix::new(w.scale_rows(&inv)).expect("ring keeps the instance irreducible")
}

pub fn random_sigma_tilde(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n)
        .map(|_| 1.0 - rng.gen::<f64>() * (1.0 - SIGMA_TILDE_LOW))
        .collect();
    p[rng.gen_range(0..n)] = 1.0;
    p
}

pub fn random_hong_matrix(n: usize, rng: &mut impl Rng) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = linalg::norm2(&row);
        let target = rng.gen::<f64>() * HONG_BETA;
        for j in 0..n {
            a[(i, j)] = if norm > 0.0 { row[j] * target / norm } else { 0.0 };
        }
    }
    a
}

pub fn random_instance(n: usize, rng: &mut impl Rng) -> RandomInstance {
    let influence = random_influence(n, rng);
    let sigma_tilde = random_sigma_tilde(n, rng);
    let y0 = (0..n).map(|_| rng.gen::<f64>()).collect();
    let hong_matrix = random_hong_matrix(n, rng);
    RandomInstance {
        influence,
        sigma_tilde,
        y0,
        hong_matrix,
    }
}

pub fn generate(n: usize, count: usize, seed: u64) -> Vec<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(n, &mut rng)).collect()
}

/// Outcome of every check on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InstanceOutcome {
    pub stability: bool,
    pub rate_slope: bool,
    pub consensus_fit: bool,
    pub hong_bound: bool,
    pub gain_eigenpair: bool,
    pub gain_identity: bool,
}

/// Spectral radii of `W~(sigma)` along `grid`.
pub fn effective_radii(w: &InfluenceMatrix, p: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&s| {
            let prof = ImmunityProfile::new(s, p.to_vec())?;
            spectral::spectral_radius(&model::effective_matrix(w, &prof)?)
        })
        .collect()
}

/// Radii strictly below 1 and strictly increasing as sigma decreases.
pub fn radii_monotone(radii: &[f64]) -> bool {
    radii.iter().all(|&r| r < 1.0 - STABILITY_MARGIN)
        && radii.windows(2).all(|r| r[1] - r[0] >= STABILITY_MARGIN)
}

pub fn check_instance(inst: &RandomInstance) -> Result<InstanceOutcome> {
    let w = &inst.influence;
    let p = &inst.sigma_tilde;
    let y0 = OpinionVector::new(inst.y0.clone())?;

    let stability = radii_monotone(&effective_radii(w, p, &STABILITY_GRID)?);

    let rate = asymptotics::rate_study(w, p, &y0, &RATE_GRID)?;
    let rate_slope = (RATE_SLOPE_BAND.0..=RATE_SLOPE_BAND.1).contains(&rate.fitted_slope);

    let mut gain_eigenpair = true;
    let mut gain_identity = true;
    for &s in &RATE_GRID {
        let prof = ImmunityProfile::new(s, p.clone())?;
        let (right, left) = asymptotics::gain_eigenpair_residuals(w, &prof)?;
        gain_eigenpair &= right <= EIGENPAIR_TOL && left <= EIGENPAIR_TOL;
        let hy = model::static_gain(w, &prof)?.apply(&inst.y0);
        let y_bar = model::steady_state(w, &prof, &y0)?;
        gain_identity &= hy
            .iter()
            .zip(y_bar.values())
            .all(|(a, b)| (a - b).abs() <= 1e-9);
    }

    // the FJ system matrix has rows of norm <= 2, as does the random matrix
    let prof = ImmunityProfile::new(RATE_GRID[0], p.clone())?;
    let system = Matrix::identity(w.n()).sub(&model::effective_matrix(w, &prof)?);
    let hong_bound = spectral::hong_lower_bound(&system, HONG_BETA)?.holds
        && spectral::hong_lower_bound(&inst.hong_matrix, HONG_BETA)?.holds;

    Ok(InstanceOutcome {
        stability,
        rate_slope,
        consensus_fit: rate.consensus_bound_holds,
        hong_bound,
        gain_eigenpair,
        gain_identity,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckTally {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub tallies: Vec<CheckTally>,
    /// Instances whose evaluation raised an error.
    pub errors: usize,
}

impl CampaignSummary {
    pub fn all_passed(&self) -> bool {
        self.errors == 0 && self.tallies.iter().all(|t| t.failed == 0)
    }
}

pub fn run_campaign(n: usize, count: usize, seed: u64) -> Result<CampaignSummary> {
    if n < 2 {
        return Err(Error::InvalidArgument("campaign needs n >= 2".into()));
    }
    if count < 1 {
        return Err(Error::InvalidArgument("campaign needs count >= 1".into()));
    }
    let instances = generate(n, count, seed);
    let outcomes: Vec<Result<InstanceOutcome>> = instances.par_iter().map(check_instance).collect();

    let names = [
        "stability_monotone",
        "rate_slope",
        "quasi_consensus_fit",
        "hong_bound",
        "gain_eigenpair",
        "gain_identity",
    ];
    let mut tallies: Vec<CheckTally> = names
        .iter()
        .map(|&name| CheckTally {
            name,
            ..Default::default()
        })
        .collect();
    let mut errors = 0;
    for outcome in &outcomes {
        match outcome {
            Ok(o) => {
                let flags = [
                    o.stability,
                    o.rate_slope,
                    o.consensus_fit,
                    o.hong_bound,
                    o.gain_eigenpair,
                    o.gain_identity,
                ];
                for (t, ok) in tallies.iter_mut().zip(flags) {
                    if ok {
                        t.passed += 1;
                    } else {
                        t.failed += 1;
                    }
                }
            }
            Err(_) => errors += 1,
        }
    }
    Ok(CampaignSummary {
        n,
        count,
        seed,
        tallies,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instances_satisfy_assumptions() {
        for inst in generate(5, 20, 11) {
            let p = &inst.sigma_tilde;
            assert!(model::validate_sigma_tilde(p, false).is_ok());
            assert!(p.iter().all(|&x| x >= SIGMA_TILDE_LOW && x <= 1.0));
            for i in 0..inst.hong_matrix.rows() {
                assert!(linalg::norm2(inst.hong_matrix.row(i)) <= HONG_BETA);
            }
        }
    }

    #[test]
    fn campaign_is_deterministic() {
        let a = run_campaign(4, 10, 7).unwrap();
        let b = run_campaign(4, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(generate(4, 3, 7), generate(4, 3, 7));
        assert!(a.all_passed(), "{:?}", a);
    }

    #[test]
    fn campaign_argument_errors() {
        assert!(run_campaign(1, 5, 0).is_err());
        assert!(run_campaign(3, 0, 0).is_err());
    }
}
