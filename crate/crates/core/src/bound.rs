//! Sum-rate upper bound under ideal coherent combining.
//!
//! For each user the bound places one antenna at the user's projection and
//! every other antenna at the edge of its segment nearest to that projection,
//! then ignores the spacing constraint. The amplitude sum over the segments to
//! either side is available exactly ([`f_exact`]) or through the closed-form
//! midpoint-integral approximation ([`f_integral`]).

use crate::error::{invalid, Error, Result};
use crate::geometry::{SystemParams, User, UserSet, WaveguideLayout};

/// How the per-side amplitude sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeSum {
    /// Term-by-term summation.
    Exact,
    /// Closed-form asinh integral.
    Integral,
}

/// Position of a user projection relative to the segment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSplit {
    /// Segment containing the projection.
    pub segment: usize,
    /// Number of segments to the left of `segment`.
    pub left_count: usize,
    /// Number of segments to the right of `segment`.
    pub right_count: usize,
    /// Distance from the projection to the left edge of `segment`.
    pub delta_left: f64,
    /// Distance from the projection to the right edge of `segment`.
    pub delta_right: f64,
}

impl SegmentSplit {
    pub fn new(
        num_segments: usize,
        segment: usize,
        delta_left: f64,
        segment_length: f64,
    ) -> Result<Self> {
        if segment >= num_segments {
            return Err(invalid(format!(
                "segment {segment} out of range for {num_segments} segments"
            )));
        }
        if !(0.0..=segment_length).contains(&delta_left) {
            return Err(invalid(format!(
                "edge distance {delta_left} outside [0, {segment_length}]"
            )));
        }
        Ok(Self {
            segment,
            left_count: segment,
            right_count: num_segments - segment - 1,
            delta_left,
            delta_right: segment_length - delta_left,
        })
    }

    /// User at the centre of the middle segment; for even `num_segments` the
    /// extra segment goes to the right.
    pub fn symmetric(num_segments: usize, segment_length: f64) -> Result<Self> {
        if num_segments == 0 {
            return Err(invalid("number of segments must be at least 1"));
        }
        Self::new(
            num_segments,
            (num_segments - 1) / 2,
            segment_length / 2.0,
            segment_length,
        )
    }

    pub fn num_segments(&self) -> usize {
        self.left_count + self.right_count + 1
    }
}

/// Locates the segment under `user` and the distances to its two edges.
pub fn split_for_user(user: &User, layout: &WaveguideLayout) -> Result<SegmentSplit> {
    let (lo, hi) = layout.extent();
    let segment = layout
        .segment_of(user.x)
        .ok_or(Error::OutOfRange { x: user.x, lo, hi })?;
    let len = layout.segment_length();
    let delta_left = (user.x - layout.feed_x(segment)).clamp(0.0, len);
    SegmentSplit::new(layout.num_segments(), segment, delta_left, len)
}

fn check_sum_args(delta: f64, segment_length: f64, d_k: f64) -> Result<()> {
    if segment_length.is_nan() || segment_length <= 0.0 {
        return Err(invalid(format!(
            "segment length must be positive, got {segment_length}"
        )));
    }
    if d_k.is_nan() || d_k <= 0.0 {
        return Err(invalid(format!("d_k must be positive, got {d_k}")));
    }
    if !delta.is_finite() {
        return Err(invalid("edge distance must be finite"));
    }
    Ok(())
}

/// Σ_{n=1}^{N} 1/√((δ + (n−1)L)² + d_k).
pub fn f_exact(delta: f64, n: usize, segment_length: f64, d_k: f64) -> Result<f64> {
    check_sum_args(delta, segment_length, d_k)?;
    Ok((0..n)
        .map(|i| {
            let x = delta + i as f64 * segment_length;
            1.0 / (x * x + d_k).sqrt()
        })
        .sum())
}

/// Midpoint-integral approximation of [`f_exact`]:
/// (1/L)[asinh((δ + (N−½)L)/√d_k) − asinh((δ − L/2)/√d_k)], and 0 for N = 0.
///
/// Each term of the sum is the midpoint sample of `1/√(x² + d_k)` over
/// `[δ + (n − 3/2)L, δ + (n − 1/2)L]`, so the integral runs from `δ − L/2`.
/// The lower limit may be negative; the integrand is even, so that piece is
/// the mirror image of the first half-interval.
pub fn f_integral(delta: f64, n: usize, segment_length: f64, d_k: f64) -> Result<f64> {
    check_sum_args(delta, segment_length, d_k)?;
    if n == 0 {
        return Ok(0.0);
    }
    let s = d_k.sqrt();
    let upper = delta + (n as f64 - 0.5) * segment_length;
    let lower = delta - 0.5 * segment_length;
    Ok(((upper / s).asinh() - (lower / s).asinh()) / segment_length)
}

/// Variant of [`f_integral`] whose lower limit is clipped at zero,
/// `max(δ − L/2, 0)`. Identical to [`f_integral`] for δ ≥ L/2; for smaller δ it
/// drops the part of the first interval that lies behind the projection.
pub fn f_integral_clipped(delta: f64, n: usize, segment_length: f64, d_k: f64) -> Result<f64> {
    check_sum_args(delta, segment_length, d_k)?;
    if n == 0 {
        return Ok(0.0);
    }
    let s = d_k.sqrt();
    let upper = delta + (n as f64 - 0.5) * segment_length;
    let lower = (delta - 0.5 * segment_length).max(0.0);
    Ok(((upper / s).asinh() - (lower / s).asinh()) / segment_length)
}

fn side_sum(kind: AmplitudeSum, delta: f64, n: usize, len: f64, d_k: f64) -> Result<f64> {
    match kind {
        AmplitudeSum::Exact => f_exact(delta, n, len, d_k),
        AmplitudeSum::Integral => f_integral(delta, n, len, d_k),
    }
}

/// Per-user gain bound (η/M)[1/√d_k + f(δ⁻, M⁻) + f(δ⁺, M⁺)]² with the side
/// sums evaluated according to `kind`.
pub fn user_gain_bound_with(
    kind: AmplitudeSum,
    split: &SegmentSplit,
    num_segments: usize,
    segment_length: f64,
    d_k: f64,
    eta: f64,
) -> Result<f64> {
    if split.num_segments() != num_segments {
        return Err(invalid(format!(
            "split covers {} segments but the layout has {num_segments}",
            split.num_segments()
        )));
    }
    let bracket = 1.0 / d_k.sqrt()
        + side_sum(
            kind,
            split.delta_left,
            split.left_count,
            segment_length,
            d_k,
        )?
        + side_sum(
            kind,
            split.delta_right,
            split.right_count,
            segment_length,
            d_k,
        )?;
    Ok(eta / num_segments as f64 * bracket * bracket)
}

/// Per-user gain bound Ḡ_k using the integral approximation.
pub fn user_gain_bound(
    split: &SegmentSplit,
    num_segments: usize,
    segment_length: f64,
    d_k: f64,
    eta: f64,
) -> Result<f64> {
    user_gain_bound_with(
        AmplitudeSum::Integral,
        split,
        num_segments,
        segment_length,
        d_k,
        eta,
    )
}

/// log₂(1 + Σ_k P_k Ḡ_k / σ²) over the full layout.
pub fn rate_bound_with(
    kind: AmplitudeSum,
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<f64> {
    let eta = params.eta();
    let mut received = 0.0;
    for u in users {
        let split = split_for_user(u, layout)?;
        let g = user_gain_bound_with(
            kind,
            &split,
            layout.num_segments(),
            layout.segment_length(),
            u.d_k(layout.height()),
            eta,
        )?;
        received += u.power_w * g;
    }
    Ok(crate::channel::rate_from_snr(
        received / params.noise_power_w,
    ))
}

/// Sum-rate upper bound with integral-approximated side sums.
pub fn sum_rate_bound(
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<f64> {
    rate_bound_with(AmplitudeSum::Integral, users, layout, params)
}

/// Sum-rate upper bound with exactly summed side amplitudes.
pub fn exact_amplitude_bound(
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<f64> {
    rate_bound_with(AmplitudeSum::Exact, users, layout, params)
}
