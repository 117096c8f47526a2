//! Greedy segment activation with sequential antenna placement.
//!
//! Each iteration trial-activates every inactive segment, places its antenna
//! on the best feasible grid point with the earlier antennas held fixed, and
//! commits the segment with the highest resulting sum-rate. The search runs
//! through all `M` activation levels and returns the best stored one, so full
//! activation is always among the candidates.

use serde::Serialize;

use super::grid::{GainGrid, PhaseMode};
use super::phase::{phase_alternating_opt, PhaseMatrix};
use crate::channel::{placement_rate, rate_from_snr, Propagation};
use crate::error::{invalid, Result};
use crate::geometry::{Placement, SystemParams, UserSet, WaveguideLayout};
use crate::{Complex64, ComplexGain};

/// Best antenna position for one candidate segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPlacement {
    pub position: f64,
    /// Phase given to the new branch (zero in [`PhaseMode::None`]).
    pub phase: f64,
    pub rate: f64,
}

/// One activation level of a greedy search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceLevel {
    /// Number of active segments, 1-based.
    pub level: usize,
    /// Segment committed at this level; `None` when no segment could be placed.
    pub segment: Option<usize>,
    pub position: Option<f64>,
    pub placement: Placement,
    pub rate: f64,
    /// Set when every remaining segment was spacing-infeasible; the level then
    /// repeats the previous placement and rate.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyTrace {
    pub levels: Vec<TraceLevel>,
    /// Index into `levels` of the highest stored rate (earliest on ties).
    pub best_index: usize,
}

impl GreedyTrace {
    pub fn best(&self) -> &TraceLevel {
        &self.levels[self.best_index]
    }

    pub fn best_rate(&self) -> f64 {
        self.best().rate
    }

    /// Rate with every segment active (the last level).
    pub fn full_activation_rate(&self) -> f64 {
        self.levels.last().map_or(0.0, |l| l.rate)
    }

    fn from_levels(levels: Vec<TraceLevel>) -> Self {
        let mut best_index = 0;
        for (i, l) in levels.iter().enumerate() {
            if l.rate > levels[best_index].rate {
                best_index = i;
            }
        }
        Self { levels, best_index }
    }
}

/// Shared state of one optimisation problem.
pub(crate) struct Problem<'a> {
    pub users: &'a UserSet,
    pub layout: &'a WaveguideLayout,
    pub params: &'a SystemParams,
    pub prop: Propagation,
    pub powers: Vec<f64>,
    pub grid: GainGrid,
}

impl<'a> Problem<'a> {
    pub fn new(
        users: &'a UserSet,
        layout: &'a WaveguideLayout,
        params: &'a SystemParams,
        q: usize,
    ) -> Result<Self> {
        Self::with_grid(
            users,
            layout,
            params,
            GainGrid::new(users, layout, params, q)?,
        )
    }

    pub fn with_grid(
        users: &'a UserSet,
        layout: &'a WaveguideLayout,
        params: &'a SystemParams,
        grid: GainGrid,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(invalid("at least one user is required"));
        }
        Ok(Self {
            users,
            layout,
            params,
            prop: Propagation::new(params),
            powers: users.iter().map(|u| u.power_w).collect(),
            grid,
        })
    }

    /// g_{k,m}(ψ) for all users.
    pub fn branch_gains(&self, segment: usize, position: f64) -> Vec<ComplexGain> {
        let feed = self.layout.feed_x(segment);
        let h = self.layout.height();
        self.users
            .iter()
            .map(|u| self.prop.cascaded(u, feed, position, h))
            .collect()
    }

    /// Σ over active branches of e^{jθ} g, per user.
    pub fn collected(&self, placement: &Placement) -> Vec<ComplexGain> {
        let mut acc = vec![ComplexGain::new(0.0, 0.0); self.users.len()];
        for e in placement.iter() {
            let v = Complex64::from_polar(1.0, e.phase);
            for (a, g) in acc.iter_mut().zip(self.branch_gains(e.segment, e.position)) {
                *a += v * g;
            }
        }
        acc
    }

    pub fn rate(&self, objective: f64, active: usize) -> f64 {
        rate_from_snr(objective / active as f64 / self.params.noise_power_w)
    }

    fn pick(
        &self,
        segment: usize,
        placement: &Placement,
        acc: &[ComplexGain],
        mode: PhaseMode,
    ) -> Option<super::grid::GridPick> {
        self.grid.best_point(
            segment,
            acc,
            &self.powers,
            placement.iter().map(|e| e.position),
            self.params.min_spacing_m,
            mode,
        )
    }

    /// Runs the phase solver on `placement`, warm-started from its phases.
    pub fn align_phases(
        &self,
        placement: &Placement,
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, f64)> {
        let columns: Vec<Vec<ComplexGain>> = placement
            .iter()
            .map(|e| self.branch_gains(e.segment, e.position))
            .collect();
        let a = PhaseMatrix::from_gains(&columns, &self.powers)?;
        let init: Vec<Complex64> = placement
            .iter()
            .map(|e| Complex64::from_polar(1.0, e.phase))
            .collect();
        let sol = phase_alternating_opt(&a, &init, tol, max_iter)?;
        Ok((sol.phases(), sol.objective))
    }
}

/// Best feasible grid point of `segment` with `current` held fixed.
///
/// Returns `Ok(None)` when every grid point violates the spacing constraint.
pub fn place_in_segment(
    segment: usize,
    current: &Placement,
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
    q: usize,
    mode: PhaseMode,
) -> Result<Option<TrialPlacement>> {
    if segment >= layout.num_segments() {
        return Err(invalid(format!("segment {segment} does not exist")));
    }
    if current.contains(segment) {
        return Err(invalid(format!("segment {segment} is already active")));
    }
    let grid = GainGrid::for_segments(users, layout, params, q, [segment])?;
    let problem = Problem::with_grid(users, layout, params, grid)?;
    let acc = problem.collected(current);
    Ok(problem
        .pick(segment, current, &acc, mode)
        .map(|p| TrialPlacement {
            position: p.position,
            phase: crate::geometry::wrap_phase(p.phase),
            rate: problem.rate(p.objective, current.len() + 1),
        }))
}

/// Greedy search without phase shifters.
pub fn greedy_hssa_type1(
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
    q: usize,
) -> Result<GreedyTrace> {
    let problem = Problem::new(users, layout, params, q)?;
    greedy(&problem, None)
}

/// Greedy search with per-segment phase shifters: every trial placement is
/// scored after running the phase solver on the trial set.
pub fn greedy_hssa_type2(
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
    q: usize,
    tol: f64,
    max_iter: usize,
) -> Result<GreedyTrace> {
    let problem = Problem::new(users, layout, params, q)?;
    greedy(&problem, Some((tol, max_iter)))
}

pub(crate) fn greedy(
    problem: &Problem<'_>,
    phase_opt: Option<(f64, usize)>,
) -> Result<GreedyTrace> {
    let m_total = problem.layout.num_segments();
    let mode = if phase_opt.is_some() {
        PhaseMode::Align
    } else {
        PhaseMode::None
    };
    let mut placement = Placement::new();
    let mut levels: Vec<TraceLevel> = Vec::with_capacity(m_total);

    for level in 1..=m_total {
        let acc = problem.collected(&placement);
        // (objective, segment, committed placement)
        let mut best: Option<(f64, usize, f64, Placement)> = None;
        for segment in (0..m_total).filter(|&s| !placement.contains(s)) {
            let Some(pick) = problem.pick(segment, &placement, &acc, mode) else {
                continue;
            };
            let mut trial = placement.with_inserted(segment, pick.position, pick.phase)?;
            let objective = match phase_opt {
                Some((tol, max_iter)) => {
                    let (phases, objective) = problem.align_phases(&trial, tol, max_iter)?;
                    trial.set_phases(&phases)?;
                    objective
                }
                None => pick.objective,
            };
            if best.as_ref().is_none_or(|b| objective > b.0) {
                best = Some((objective, segment, pick.position, trial));
            }
        }

        match best {
            Some((_, segment, position, trial)) => {
                placement = trial;
                let rate =
                    placement_rate(&placement, problem.users, problem.layout, problem.params)?;
                levels.push(TraceLevel {
                    level,
                    segment: Some(segment),
                    position: Some(position),
                    placement: placement.clone(),
                    rate,
                    degenerate: false,
                });
            }
            None => {
                let prev = levels
                    .last()
                    .expect("the first level always has a feasible point");
                let repeated = TraceLevel {
                    level,
                    segment: None,
                    position: None,
                    degenerate: true,
                    ..prev.clone()
                };
                levels.push(repeated);
            }
        }
    }
    Ok(GreedyTrace::from_levels(levels))
}
