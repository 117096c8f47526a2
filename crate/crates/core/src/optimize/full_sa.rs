//! Full segment aggregation baseline: every segment active, antennas refined
//! by coordinate-wise grid search.

use serde::{Deserialize, Serialize};

use super::greedy::Problem;
use super::grid::PhaseMode;
use crate::channel::placement_rate;
use crate::error::{invalid, Result};
use crate::geometry::{Placement, SystemParams, UserSet, WaveguideLayout};
use crate::Complex64;

/// Aggregation hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    /// Direct analog combining.
    TypeI,
    /// One phase shifter per segment before combining.
    TypeII,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullSaOutcome {
    pub placement: Placement,
    pub rate: f64,
    pub sweeps: usize,
}

/// All `M` segments active, antennas initialised at segment midpoints.
///
/// Each sweep revisits the segments in index order and moves the antenna to
/// the best grid point that keeps the spacing constraint against all other
/// antennas, accepting only strict improvements. With phase shifters the moved
/// branch is co-phased during its search and the phase solver runs after every
/// sweep. The loop stops once a sweep improves the rate by less than `tol`
/// (relative) or after `max_sweeps` sweeps.
pub fn full_sa_baseline(
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
    q: usize,
    variant: Aggregation,
    tol: f64,
    max_sweeps: usize,
) -> Result<FullSaOutcome> {
    if layout.segment_length() < params.min_spacing_m {
        return Err(invalid(format!(
            "segment length {} m is below the antenna spacing {} m",
            layout.segment_length(),
            params.min_spacing_m
        )));
    }
    let problem = Problem::new(users, layout, params, q)?;
    full_sa(&problem, variant, tol, max_sweeps)
}

pub(crate) fn full_sa(
    problem: &Problem<'_>,
    variant: Aggregation,
    tol: f64,
    max_sweeps: usize,
) -> Result<FullSaOutcome> {
    let layout = problem.layout;
    let m_total = layout.num_segments();
    let mode = match variant {
        Aggregation::TypeI => PhaseMode::None,
        Aggregation::TypeII => PhaseMode::Align,
    };

    let mut placement = Placement::new();
    for m in 0..m_total {
        placement.insert(m, layout.segment_midpoint(m), 0.0)?;
    }
    if variant == Aggregation::TypeII {
        let (phases, _) = problem.align_phases(&placement, tol, max_sweeps)?;
        placement.set_phases(&phases)?;
    }
    let mut rate = placement_rate(&placement, problem.users, layout, problem.params)?;

    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let before = rate;
        let mut acc = problem.collected(&placement);
        for m in 0..m_total {
            let current = *placement.get(m).expect("every segment is active");
            let g = problem.branch_gains(m, current.position);
            let v = Complex64::from_polar(1.0, current.phase);
            let others: Vec<_> = acc.iter().zip(&g).map(|(a, g)| a - v * g).collect();
            let now = super::grid::branch_objective(&others, &g, v, &problem.powers);

            let pick = problem.grid.best_point(
                m,
                &others,
                &problem.powers,
                placement
                    .iter()
                    .filter(|e| e.segment != m)
                    .map(|e| e.position),
                problem.params.min_spacing_m,
                mode,
            );
            if let Some(pick) = pick.filter(|p| p.objective > now) {
                placement.set_position(m, pick.position)?;
                placement.set_phase(m, pick.phase)?;
                let g_new = problem.branch_gains(m, pick.position);
                let v_new = Complex64::from_polar(1.0, pick.phase);
                acc = others
                    .iter()
                    .zip(&g_new)
                    .map(|(o, g)| o + v_new * g)
                    .collect();
            }
        }
        if variant == Aggregation::TypeII {
            let (phases, _) = problem.align_phases(&placement, tol, max_sweeps)?;
            placement.set_phases(&phases)?;
        }
        sweeps += 1;
        rate = placement_rate(&placement, problem.users, layout, problem.params)?;
        if rate - before <= tol * before.abs() {
            break;
        }
    }
    Ok(FullSaOutcome {
        placement,
        rate,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_centered_layout, sample_users, User};
    use crate::optimize::{place_in_segment, PhaseMode};

    #[test]
    fn single_segment_matches_grid_search() {
        let p = SystemParams::default();
        let l = build_centered_layout(1, 1.0, 3.0, 0.0).unwrap();
        let users = UserSet::new(vec![User {
            x: 0.31,
            y: 2.0,
            power_w: 0.01,
        }])
        .unwrap();
        let q = 51;
        let out = full_sa_baseline(&users, &l, &p, q, Aggregation::TypeI, 1e-8, 100).unwrap();
        let direct = place_in_segment(0, &Placement::new(), &users, &l, &p, q, PhaseMode::None)
            .unwrap()
            .unwrap();
        assert!((out.rate - direct.rate).abs() < 1e-12);
        assert_eq!(out.placement.get(0).unwrap().position, direct.position);
    }

    #[test]
    fn refinement_never_loses_rate() {
        let p = SystemParams::default();
        let l = build_centered_layout(2, 1.0, 3.0, 0.0).unwrap();
        let users = UserSet::new(vec![User {
            x: 0.8,
            y: -1.0,
            power_w: 0.01,
        }])
        .unwrap();
        let mut init = Placement::new();
        init.insert(0, l.segment_midpoint(0), 0.0).unwrap();
        init.insert(1, l.segment_midpoint(1), 0.0).unwrap();
        let start = placement_rate(&init, &users, &l, &p).unwrap();
        for variant in [Aggregation::TypeI, Aggregation::TypeII] {
            let out = full_sa_baseline(&users, &l, &p, 80, variant, 1e-8, 100).unwrap();
            assert!(out.rate >= start);
            out.placement.validate(&l, p.min_spacing_m).unwrap();
        }
    }

    #[test]
    fn every_segment_stays_active() {
        let p = SystemParams::default();
        let l = build_centered_layout(6, 1.0, 3.0, 0.0).unwrap();
        let users = sample_users(3, 20.0, 20.0, 0.01, 2).unwrap();
        let out = full_sa_baseline(&users, &l, &p, 40, Aggregation::TypeII, 1e-8, 50).unwrap();
        assert_eq!(out.placement.len(), 6);
        out.placement.validate(&l, p.min_spacing_m).unwrap();
        assert!(out.sweeps >= 1);
    }

    #[test]
    fn rejects_segments_shorter_than_spacing() {
        let p = SystemParams::new(28e9, 1.4, 0.0, 1e-12, 2.0).unwrap();
        let l = build_centered_layout(2, 1.0, 3.0, 0.0).unwrap();
        let users = sample_users(1, 20.0, 20.0, 0.01, 2).unwrap();
        assert!(full_sa_baseline(&users, &l, &p, 40, Aggregation::TypeI, 1e-8, 50).is_err());
    }
}
