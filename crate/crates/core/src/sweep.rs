use rayon::prelude::*;

use crate::asymptotics;
use crate::error::{Error, Result};
use crate::model::{self, ImmunityProfile, InfluenceMatrix, OpinionVector, ProfileOptions};

pub const SETTLING_FRACTION: f64 = 0.95;

/// One row of the sigma sweep: relative gain gap, steady-state spread and
/// 95% settling time.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResultRow {
    pub sigma_max: f64,
    pub gain_gap: f64,
    pub quasi_gap: f64,
    pub settling_time: usize,
}

pub fn sweep_point(
    w: &InfluenceMatrix,
    prof: &ImmunityProfile,
    y0: &OpinionVector,
) -> Result<SweepResultRow> {
    let h = model::static_gain(w, prof)?;
    let h_bar = asymptotics::limit_gain(w, prof.p())?;
    let y_bar = model::steady_state(w, prof, y0)?;
    let traj = model::fj_simulate(w, prof, y0, model::settling_horizon(prof.sigma_max()))?;
    Ok(SweepResultRow {
        sigma_max: prof.sigma_max(),
        gain_gap: asymptotics::gain_gap(&h, &h_bar),
        quasi_gap: asymptotics::quasi_consensus_gap(y_bar.values()),
        settling_time: model::settling_time(&traj, y_bar.values(), SETTLING_FRACTION)?,
    })
}

/// Evaluates every grid point (concurrently); rows come back in grid order.
pub fn sweep(
    w: &InfluenceMatrix,
    p: &[f64],
    y0: &OpinionVector,
    grid: &[f64],
    options: ProfileOptions,
) -> Result<Vec<SweepResultRow>> {
    if grid.is_empty() || grid.windows(2).any(|g| g[1] >= g[0]) {
        return Err(Error::GridNotDecreasing);
    }
    grid.par_iter()
        .map(|&s| {
            let prof = ImmunityProfile::with_options(s, p.to_vec(), options)?;
            sweep_point(w, &prof, y0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn scalar_instance_row() {
        let w = InfluenceMatrix::new(Matrix::identity(1)).unwrap();
        let y0 = OpinionVector::new(vec![0.4]).unwrap();
        let rows = sweep(&w, &[1.0], &y0, &[0.5], ProfileOptions::default()).unwrap();
        assert_eq!(
            rows,
            vec![SweepResultRow {
                sigma_max: 0.5,
                gain_gap: 0.0,
                quasi_gap: 0.0,
                settling_time: 0
            }]
        );
    }

    #[test]
    fn reversed_grid_rejected() {
        let w = InfluenceMatrix::new(Matrix::identity(1)).unwrap();
        let y0 = OpinionVector::new(vec![0.4]).unwrap();
        assert_eq!(
            sweep(&w, &[1.0], &y0, &[0.001, 0.01], ProfileOptions::default()),
            Err(Error::GridNotDecreasing)
        );
    }
}
