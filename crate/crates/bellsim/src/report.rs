//! Serializable result bodies of the ensemble commands.

use std::f64::consts::TAU;

use bellsim_core::{sweep, ChshResult, CurveFit, EnsembleResult, Executor, ModelError, Settings};
use serde::{Deserialize, Serialize};

use crate::manifest::Physics;
use crate::output::CurveRow;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<CurveRow>,
    /// Sample standard deviation of the joint rate across runs, per point.
    pub run_scatter: Vec<f64>,
    /// Weighted cosine fit; absent below five points or for a degenerate grid.
    pub fit: Option<CurveFit>,
    pub ensembles: Vec<EnsembleResult>,
}

impl SweepReport {
    pub fn new(rows: Vec<CurveRow>, ensembles: Vec<EnsembleResult>, fit: Option<CurveFit>) -> Self {
        Self {
            run_scatter: ensembles.iter().map(EnsembleResult::run_scatter).collect(),
            rows,
            fit,
            ensembles,
        }
    }
}

/// Largest and smallest value of a rate over a grid, in units of their
/// combined binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub max: f64,
    pub min: f64,
    pub combined_std_err: f64,
    /// `(max − min) / combined_std_err`; 0 when both ends are exact.
    pub sigmas: f64,
}

impl Spread {
    pub fn of(values: &[f64], n: u64) -> Self {
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let se = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
        let combined_std_err = (se(max).powi(2) + se(min).powi(2)).sqrt();
        let sigmas = if combined_std_err > 0.0 {
            (max - min) / combined_std_err
        } else {
            0.0
        };
        Self {
            max,
            min,
            combined_std_err,
            sigmas,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub side: usize,
    pub rows: Vec<CurveRow>,
    pub marginal_iii: Spread,
    pub marginal_iv: Spread,
}

/// `side × side` grid over `[0, 2π)²`; point `i·side + j` is `(2πi/side, 2πj/side)`.
pub fn grid_settings(side: usize) -> Vec<Settings> {
    let step = TAU / side as f64;
    (0..side * side)
        .map(|k| Settings::new((k / side) as f64 * step, (k % side) as f64 * step))
        .collect()
}

pub fn marginal_grid<E: Executor>(physics: &Physics, side: usize, exec: &E) -> Result<GridReport, ModelError> {
    let template = physics.ensemble(Settings::default())?;
    let results = sweep(&grid_settings(side), &template, exec)?;
    let n = results[0].pooled.n;
    let iii: Vec<f64> = results.iter().map(|r| r.pooled.p_marginal_iii).collect();
    let iv: Vec<f64> = results.iter().map(|r| r.pooled.p_marginal_iv).collect();
    Ok(GridReport {
        side,
        rows: results
            .iter()
            .map(|r| CurveRow::from_result(r, r.settings.phase_sum()))
            .collect(),
        marginal_iii: Spread::of(&iii, n),
        marginal_iv: Spread::of(&iv, n),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalsReport {
    pub row: CurveRow,
    /// `p_joint / p_either`.
    pub joint_over_either: f64,
    pub ensemble: EnsembleResult,
    pub grid: Option<GridReport>,
}

impl MarginalsReport {
    pub fn new(ensemble: EnsembleResult, grid: Option<GridReport>) -> Self {
        let p = &ensemble.pooled;
        Self {
            row: CurveRow::from_result(&ensemble, ensemble.settings.phase_sum()),
            joint_over_either: if p.either_side_count > 0 {
                p.joint_count as f64 / p.either_side_count as f64
            } else {
                0.0
            },
            ensemble,
            grid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub result: ChshResult,
    /// Sixteen member ensembles, pair-major in correlator order.
    pub members: Vec<EnsembleResult>,
}

impl ChshReport {
    pub fn member_rows(&self) -> Vec<CurveRow> {
        self.members
            .iter()
            .map(|m| CurveRow::from_result(m, m.settings.phase_sum()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = grid_settings(4);
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], Settings::new(0.0, 0.0));
        assert_eq!(g[1], Settings::new(0.0, TAU / 4.0));
        assert_eq!(g[4], Settings::new(TAU / 4.0, 0.0));
    }

    #[test]
    fn spread_in_sigmas() {
        let s = Spread::of(&[0.5, 0.5], 100);
        assert_eq!(s.sigmas, 0.0);
        let s = Spread::of(&[0.4, 0.6], 100);
        assert!((s.combined_std_err - (2.0 * 0.24f64 / 100.0).sqrt()).abs() < 1e-15);
        assert!((s.sigmas - 0.2 / s.combined_std_err).abs() < 1e-12);
        assert_eq!(Spread::of(&[0.0, 0.0], 10).sigmas, 0.0);
    }
}
