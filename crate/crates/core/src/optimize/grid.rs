//! Candidate grids and the one-dimensional antenna search.

use crate::channel::Propagation;
use crate::error::{invalid, Result};
use crate::geometry::{Placement, SystemParams, UserSet, WaveguideLayout};
use crate::{Complex64, ComplexGain};

/// `q` equally spaced positions spanning `segment` end to end.
pub fn candidate_grid(segment: usize, layout: &WaveguideLayout, q: usize) -> Result<Vec<f64>> {
    if q < 2 {
        return Err(invalid(format!("grid needs at least 2 points, got {q}")));
    }
    if segment >= layout.num_segments() {
        return Err(invalid(format!("segment {segment} does not exist")));
    }
    let feed = layout.feed_x(segment);
    let len = layout.segment_length();
    let last = (q - 1) as f64;
    let mut grid: Vec<f64> = (0..q).map(|i| feed + i as f64 * len / last).collect();
    // Pin the far end so it compares equal to `segment_end`.
    grid[q - 1] = layout.segment_end(segment);
    Ok(grid)
}

/// Grid points closer than `min_spacing` to any antenna already in `placed`.
pub fn infeasible_points(grid: &[f64], placed: &Placement, min_spacing: f64) -> Vec<f64> {
    grid.iter()
        .copied()
        .filter(|&x| placed.iter().any(|e| (x - e.position).abs() < min_spacing))
        .collect()
}

/// How a newly placed antenna's phase is chosen during the grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// No phase shifter: the new branch enters with zero phase.
    None,
    /// The new branch is co-phased with the signal already collected, all
    /// other phases held fixed.
    Align,
}

/// Best grid point found for one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GridPick {
    pub position: f64,
    pub phase: f64,
    /// Σ_k P_k |acc_k + e^{jθ} g_k|², before the 1/|S| aggregation loss.
    pub objective: f64,
}

/// Cascaded gains of every user at every grid point of every segment.
pub(crate) struct GainGrid {
    users: usize,
    points: usize,
    positions: Vec<f64>,
    gains: Vec<ComplexGain>,
}

impl GainGrid {
    pub fn new(
        users: &UserSet,
        layout: &WaveguideLayout,
        params: &SystemParams,
        q: usize,
    ) -> Result<Self> {
        Self::for_segments(users, layout, params, q, 0..layout.num_segments())
    }

    /// Table restricted to `segments`; other segments are left empty.
    pub fn for_segments(
        users: &UserSet,
        layout: &WaveguideLayout,
        params: &SystemParams,
        q: usize,
        segments: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let prop = Propagation::new(params);
        let m = layout.num_segments();
        let k = users.len();
        let mut positions = vec![f64::NAN; m * q];
        let mut gains = vec![ComplexGain::new(0.0, 0.0); m * q * k];
        for seg in segments {
            let grid = candidate_grid(seg, layout, q)?;
            for (i, &x) in grid.iter().enumerate() {
                positions[seg * q + i] = x;
                let base = (seg * q + i) * k;
                for (j, u) in users.iter().enumerate() {
                    gains[base + j] = prop.cascaded(u, layout.feed_x(seg), x, layout.height());
                }
            }
        }
        Ok(Self {
            users: k,
            points: q,
            positions,
            gains,
        })
    }

    pub fn positions(&self, segment: usize) -> &[f64] {
        &self.positions[segment * self.points..(segment + 1) * self.points]
    }

    fn gains_at(&self, segment: usize, point: usize) -> &[ComplexGain] {
        let base = (segment * self.points + point) * self.users;
        &self.gains[base..base + self.users]
    }

    /// Scans the feasible grid points of `segment` given the collected signal
    /// `acc` (Σ over already placed branches of e^{jθ} g) and the positions of
    /// the other antennas. Ties keep the smallest coordinate. `None` when every
    /// grid point violates the spacing constraint.
    pub fn best_point(
        &self,
        segment: usize,
        acc: &[ComplexGain],
        powers: &[f64],
        others: impl Iterator<Item = f64>,
        min_spacing: f64,
        mode: PhaseMode,
    ) -> Option<GridPick> {
        let positions = self.positions(segment);
        let (lo, hi) = (
            positions[0] - min_spacing,
            positions[self.points - 1] + min_spacing,
        );
        let near: Vec<f64> = others.filter(|&p| p > lo && p < hi).collect();

        let mut best: Option<GridPick> = None;
        for (i, &x) in positions.iter().enumerate() {
            if near.iter().any(|&p| (x - p).abs() < min_spacing) {
                continue;
            }
            let g = self.gains_at(segment, i);
            let v = match mode {
                PhaseMode::None => Complex64::new(1.0, 0.0),
                PhaseMode::Align => align_phasor(acc, g, powers),
            };
            let objective = branch_objective(acc, g, v, powers);
            if best.is_none_or(|b| objective > b.objective) {
                best = Some(GridPick {
                    position: x,
                    phase: v.arg(),
                    objective,
                });
            }
        }
        best
    }
}

/// Unit phasor maximising Σ_k P_k |acc_k + v g_k|²; 1 when the cross term vanishes.
pub(crate) fn align_phasor(acc: &[ComplexGain], g: &[ComplexGain], powers: &[f64]) -> Complex64 {
    let c: Complex64 = acc
        .iter()
        .zip(g)
        .zip(powers)
        .map(|((a, g), p)| g * a.conj() * *p)
        .sum();
    let mag = c.norm();
    if mag > 0.0 {
        c.conj() / mag
    } else {
        Complex64::new(1.0, 0.0)
    }
}

#[inline]
pub(crate) fn branch_objective(
    acc: &[ComplexGain],
    g: &[ComplexGain],
    v: Complex64,
    powers: &[f64],
) -> f64 {
    acc.iter()
        .zip(g)
        .zip(powers)
        .map(|((a, g), p)| p * (a + v * g).norm_sqr())
        .sum()
}
