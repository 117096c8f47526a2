//! Unit-modulus phase design for per-segment phase shifters.
//!
//! The received power Σ_k P_k |Σ_m v_m g_{k,m}|² equals the Hermitian form
//! vᵀ A v* with A_{m,n} = Σ_k P_k g_{k,m} g*_{k,n}. It is maximised one
//! element at a time: with the others fixed, the best v_m cancels the phase of
//! c_m = Σ_{n≠m} A_{m,n} v*_n.

use crate::channel::Propagation;
use crate::error::{invalid, Result};
use crate::geometry::{Placement, UserSet, WaveguideLayout};
use crate::{Complex64, SystemParams};

/// Hermitian matrix of the phase-design objective, indexed in placement order.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl PhaseMatrix {
    /// Builds A from per-branch gains: `columns[m][k]` is g_{k,m}.
    pub fn from_gains(columns: &[Vec<Complex64>], powers: &[f64]) -> Result<Self> {
        let n = columns.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != powers.len()) {
            return Err(invalid(format!(
                "branch has {} user gains but {} powers were given",
                bad.len(),
                powers.len()
            )));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for m in 0..n {
            let diag: f64 = columns[m]
                .iter()
                .zip(powers)
                .map(|(g, p)| p * g.norm_sqr())
                .sum();
            data[m * n + m] = Complex64::new(diag, 0.0);
            for j in m + 1..n {
                let a: Complex64 = columns[m]
                    .iter()
                    .zip(&columns[j])
                    .zip(powers)
                    .map(|((gm, gj), p)| gm * gj.conj() * *p)
                    .sum();
                data[m * n + j] = a;
                data[j * n + m] = a.conj();
            }
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.n + n]
    }

    fn row(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.n..(m + 1) * self.n]
    }

    /// vᵀ A v* (real for Hermitian A).
    pub fn objective(&self, v: &[Complex64]) -> f64 {
        let mut total = 0.0;
        for (m, vm) in v.iter().enumerate() {
            let s: Complex64 = self.row(m).iter().zip(v).map(|(a, vn)| a * vn.conj()).sum();
            total += (vm * s).re;
        }
        total
    }
}

/// A for the active branches of `placement`, in segment order.
pub fn build_phase_matrix(
    placement: &Placement,
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<PhaseMatrix> {
    if placement.is_empty() {
        return Err(invalid("phase matrix needs at least one active segment"));
    }
    placement.validate(layout, 0.0)?;
    let prop = Propagation::new(params);
    let columns: Vec<Vec<Complex64>> = placement
        .iter()
        .map(|e| {
            users
                .iter()
                .map(|u| prop.cascaded(u, layout.feed_x(e.segment), e.position, layout.height()))
                .collect()
        })
        .collect();
    let powers: Vec<f64> = users.iter().map(|u| u.power_w).collect();
    PhaseMatrix::from_gains(&columns, &powers)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    /// Unit-modulus phasors in placement order.
    pub phasors: Vec<Complex64>,
    /// vᵀ A v* at `phasors`.
    pub objective: f64,
    /// Completed sweeps over all elements.
    pub sweeps: usize,
}

impl PhaseSolution {
    /// Phases in `[0, 2π)`.
    pub fn phases(&self) -> Vec<f64> {
        self.phasors
            .iter()
            .map(|v| crate::geometry::wrap_phase(v.arg()))
            .collect()
    }
}

/// Element-wise alternating maximisation of vᵀ A v* over unit-modulus `v`.
///
/// Elements are updated in ascending order. A sweep ends the search once the
/// relative objective gain drops below `tol`, or after `max_iter` sweeps.
pub fn phase_alternating_opt(
    a: &PhaseMatrix,
    init: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<PhaseSolution> {
    phase_alternating_opt_observed(a, init, tol, max_iter, |_| {})
}

/// [`phase_alternating_opt`] that calls `observe` with the phasor vector after
/// every accepted element update.
pub fn phase_alternating_opt_observed(
    a: &PhaseMatrix,
    init: &[Complex64],
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(&[Complex64]),
) -> Result<PhaseSolution> {
    let n = a.dim();
    if init.len() != n {
        return Err(invalid(format!(
            "expected {n} initial phasors, got {}",
            init.len()
        )));
    }
    if let Some(v) = init.iter().find(|v| (v.norm() - 1.0).abs() > 1e-9) {
        return Err(invalid(format!("initial phasor {v} is not unit-modulus")));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(invalid(format!("tolerance must be nonnegative, got {tol}")));
    }

    let mut v = init.to_vec();
    let mut objective = a.objective(&v);
    let mut sweeps = 0;
    if n < 2 {
        return Ok(PhaseSolution {
            phasors: v,
            objective,
            sweeps,
        });
    }

    while sweeps < max_iter {
        let before = objective;
        for m in 0..n {
            let c: Complex64 = a
                .row(m)
                .iter()
                .zip(&v)
                .enumerate()
                .filter(|&(j, _)| j != m)
                .map(|(_, (amn, vn))| amn * vn.conj())
                .sum();
            let mag = c.norm();
            if mag == 0.0 {
                continue;
            }
            // Objective changes by 2(|c| − Re(v_m c)); skip gains lost in rounding.
            let gain = 2.0 * (mag - (v[m] * c).re);
            if gain <= 1e-13 * objective.abs() {
                continue;
            }
            v[m] = Complex64::from_polar(1.0, -c.arg());
            objective += gain;
            observe(&v);
        }
        sweeps += 1;
        objective = a.objective(&v);
        if objective - before <= tol * before.abs() {
            break;
        }
    }
    Ok(PhaseSolution {
        phasors: v,
        objective,
        sweeps,
    })
}
