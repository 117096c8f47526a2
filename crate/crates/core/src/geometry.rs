//! Physical parameters, waveguide layout, user drops and antenna placements.
//!
//! All coordinates are absolute metres. The waveguide runs along the x-axis at
//! height `d`; users sit on the ground plane (z = 0). Segment indices are
//! zero-based throughout the crate.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power level in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Carrier, waveguide and receiver constants shared by every computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub carrier_freq_hz: f64,
    /// Effective refractive index of the dielectric waveguide.
    pub n_eff: f64,
    /// In-waveguide attenuation (dB/m).
    pub kappa_db_per_m: f64,
    pub noise_power_w: f64,
    /// Minimum spacing between any two active antennas (m).
    pub min_spacing_m: f64,
}

impl SystemParams {
    pub fn new(
        carrier_freq_hz: f64,
        n_eff: f64,
        kappa_db_per_m: f64,
        noise_power_w: f64,
        min_spacing_m: f64,
    ) -> Result<Self> {
        if !(carrier_freq_hz > 0.0 && carrier_freq_hz.is_finite()) {
            return Err(invalid(format!(
                "carrier frequency must be positive, got {carrier_freq_hz}"
            )));
        }
        if !(n_eff > 0.0 && n_eff.is_finite()) {
            return Err(invalid(format!(
                "effective index must be positive, got {n_eff}"
            )));
        }
        if !(kappa_db_per_m >= 0.0 && kappa_db_per_m.is_finite()) {
            return Err(invalid(format!(
                "attenuation must be nonnegative, got {kappa_db_per_m}"
            )));
        }
        if !(noise_power_w > 0.0 && noise_power_w.is_finite()) {
            return Err(invalid(format!(
                "noise power must be positive, got {noise_power_w}"
            )));
        }
        if !(min_spacing_m > 0.0 && min_spacing_m.is_finite()) {
            return Err(invalid(format!(
                "minimum spacing must be positive, got {min_spacing_m}"
            )));
        }
        Ok(Self {
            carrier_freq_hz,
            n_eff,
            kappa_db_per_m,
            noise_power_w,
            min_spacing_m,
        })
    }

    /// Same as [`SystemParams::new`] with the antenna spacing set to half a
    /// free-space wavelength.
    pub fn with_half_wavelength_spacing(
        carrier_freq_hz: f64,
        n_eff: f64,
        kappa_db_per_m: f64,
        noise_power_w: f64,
    ) -> Result<Self> {
        let spacing = 0.5 * SPEED_OF_LIGHT / carrier_freq_hz;
        Self::new(
            carrier_freq_hz,
            n_eff,
            kappa_db_per_m,
            noise_power_w,
            spacing,
        )
    }

    /// Free-space wavelength λ = c / f_c.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// Guided wavelength λ_g = λ / n_eff.
    pub fn guided_wavelength(&self) -> f64 {
        self.wavelength() / self.n_eff
    }

    /// Free-space wavenumber k₀ = 2π / λ.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength()
    }

    /// Free-space path-loss constant η = c² / (16 π² f_c²).
    pub fn eta(&self) -> f64 {
        SPEED_OF_LIGHT * SPEED_OF_LIGHT
            / (16.0 * PI * PI * self.carrier_freq_hz * self.carrier_freq_hz)
    }
}

impl Default for SystemParams {
    /// 28 GHz carrier, n_eff = 1.4, lossless waveguide, −90 dBm noise, Δ = λ/2.
    fn default() -> Self {
        Self::with_half_wavelength_spacing(28e9, 1.4, 0.0, dbm_to_watts(-90.0))
            .expect("default parameters are valid")
    }
}

/// `M` contiguous segments of length `L` along the x-axis at height `d`.
///
/// Segment `m` spans `[feed_x(m), feed_x(m) + L]`; its feed point sits at the
/// left end.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideLayout {
    segment_length: f64,
    height: f64,
    feed_x: Vec<f64>,
}

impl WaveguideLayout {
    /// Contiguous layout whose first feed point is at `first_feed_x`.
    pub fn contiguous(
        num_segments: usize,
        segment_length: f64,
        height: f64,
        first_feed_x: f64,
    ) -> Result<Self> {
        if num_segments == 0 {
            return Err(invalid("number of segments must be at least 1"));
        }
        if !(segment_length > 0.0 && segment_length.is_finite()) {
            return Err(invalid(format!(
                "segment length must be positive, got {segment_length}"
            )));
        }
        if !(height > 0.0 && height.is_finite()) {
            return Err(invalid(format!(
                "waveguide height must be positive, got {height}"
            )));
        }
        if !first_feed_x.is_finite() {
            return Err(invalid("first feed coordinate must be finite"));
        }
        let feed_x = (0..num_segments)
            .map(|m| first_feed_x + m as f64 * segment_length)
            .collect();
        Ok(Self {
            segment_length,
            height,
            feed_x,
        })
    }

    pub fn num_segments(&self) -> usize {
        self.feed_x.len()
    }

    pub fn segment_length(&self) -> f64 {
        self.segment_length
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn feeds(&self) -> &[f64] {
        &self.feed_x
    }

    pub fn feed_x(&self, segment: usize) -> f64 {
        self.feed_x[segment]
    }

    /// Right end of `segment`.
    pub fn segment_end(&self, segment: usize) -> f64 {
        self.feed_x[segment] + self.segment_length
    }

    pub fn segment_midpoint(&self, segment: usize) -> f64 {
        self.feed_x[segment] + 0.5 * self.segment_length
    }

    /// `[first feed, last segment end]`.
    pub fn extent(&self) -> (f64, f64) {
        (self.feed_x[0], self.segment_end(self.num_segments() - 1))
    }

    pub fn contains(&self, segment: usize, x: f64) -> bool {
        segment < self.num_segments() && self.feed_x[segment] <= x && x <= self.segment_end(segment)
    }

    /// Segment whose interval contains `x`; shared boundaries go to the lower index.
    pub fn segment_of(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.extent();
        if !(lo <= x && x <= hi) {
            return None;
        }
        // First segment whose right end is at or beyond x.
        let idx = self
            .feed_x
            .partition_point(|&f| f + self.segment_length < x);
        Some(idx.min(self.num_segments() - 1))
    }
}

/// Layout of `num_segments` contiguous segments centred on `region_center_x`.
pub fn build_centered_layout(
    num_segments: usize,
    segment_length: f64,
    height: f64,
    region_center_x: f64,
) -> Result<WaveguideLayout> {
    let first = region_center_x - num_segments as f64 * segment_length / 2.0;
    WaveguideLayout::contiguous(num_segments, segment_length, height, first)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub x: f64,
    pub y: f64,
    pub power_w: f64,
}

impl User {
    /// Squared offset from the waveguide axis in the vertical plane, d² + u_y².
    pub fn d_k(&self, height: f64) -> f64 {
        height * height + self.y * self.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSet {
    users: Vec<User>,
}

impl UserSet {
    pub fn new(users: Vec<User>) -> Result<Self> {
        if users.is_empty() {
            return Err(invalid("user set must contain at least one user"));
        }
        for (k, u) in users.iter().enumerate() {
            if !(u.power_w > 0.0 && u.power_w.is_finite()) {
                return Err(invalid(format!(
                    "user {k} has non-positive power {}",
                    u.power_w
                )));
            }
            if !(u.x.is_finite() && u.y.is_finite()) {
                return Err(invalid(format!("user {k} has a non-finite position")));
            }
        }
        Ok(Self { users })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, User> {
        self.users.iter()
    }

    pub fn as_slice(&self) -> &[User] {
        &self.users
    }

    pub fn get(&self, k: usize) -> &User {
        &self.users[k]
    }

    /// First `k` users of this set.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.users.len() {
            return Err(invalid(format!(
                "cannot keep {k} of {} users",
                self.users.len()
            )));
        }
        Ok(Self {
            users: self.users[..k].to_vec(),
        })
    }
}

impl<'a> IntoIterator for &'a UserSet {
    type Item = &'a User;
    type IntoIter = std::slice::Iter<'a, User>;

    fn into_iter(self) -> Self::IntoIter {
        self.users.iter()
    }
}

/// Independent random stream for one Monte Carlo realization.
///
/// The stream depends only on `(master_seed, realization)`, so realizations can
/// be evaluated in any order or in parallel.
pub fn realization_rng(master_seed: u64, realization: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(realization);
    rng
}

/// Draws `k` users uniformly over a `dx × dy` rectangle centred on
/// `(center_x, 0)`. Users are drawn in order, x before y, so the first `j`
/// users of a larger draw match a draw of `j` users from the same stream.
pub fn sample_users_from<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    dx: f64,
    dy: f64,
    center_x: f64,
    power_w: f64,
) -> Result<UserSet> {
    if k == 0 {
        return Err(invalid("number of users must be at least 1"));
    }
    if !(dx > 0.0 && dy > 0.0) {
        return Err(invalid(format!(
            "region dimensions must be positive, got {dx} x {dy}"
        )));
    }
    let users = (0..k)
        .map(|_| {
            let x = center_x + rng.random_range(-0.5..=0.5) * dx;
            let y = rng.random_range(-0.5..=0.5) * dy;
            User { x, y, power_w }
        })
        .collect();
    UserSet::new(users)
}

/// Seeded user drop centred on x = 0.
pub fn sample_users(k: usize, dx: f64, dy: f64, power_w: f64, seed: u64) -> Result<UserSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_users_from(&mut rng, k, dx, dy, 0.0, power_w)
}

/// One activated segment with its antenna coordinate and phase shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveSegment {
    pub segment: usize,
    pub position: f64,
    /// Phase shift in `[0, 2π)`; zero without phase shifters.
    pub phase: f64,
}

/// Activated segment set with antenna positions and phases, kept sorted by
/// segment index.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    entries: Vec<ActiveSegment>,
}

impl Placement {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ActiveSegment> {
        self.entries.iter()
    }

    pub fn as_slice(&self) -> &[ActiveSegment] {
        &self.entries
    }

    pub fn segments(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.segment)
    }

    pub fn contains(&self, segment: usize) -> bool {
        self.find(segment).is_ok()
    }

    pub fn get(&self, segment: usize) -> Option<&ActiveSegment> {
        self.find(segment).ok().map(|i| &self.entries[i])
    }

    fn find(&self, segment: usize) -> std::result::Result<usize, usize> {
        self.entries.binary_search_by_key(&segment, |e| e.segment)
    }

    /// Activates `segment`; the phase is reduced to `[0, 2π)`.
    pub fn insert(&mut self, segment: usize, position: f64, phase: f64) -> Result<()> {
        match self.find(segment) {
            Ok(_) => Err(invalid(format!("segment {segment} is already active"))),
            Err(i) => {
                self.entries.insert(
                    i,
                    ActiveSegment {
                        segment,
                        position,
                        phase: wrap_phase(phase),
                    },
                );
                Ok(())
            }
        }
    }

    pub fn with_inserted(&self, segment: usize, position: f64, phase: f64) -> Result<Self> {
        let mut next = self.clone();
        next.insert(segment, position, phase)?;
        Ok(next)
    }

    pub fn set_position(&mut self, segment: usize, position: f64) -> Result<()> {
        let i = self
            .find(segment)
            .map_err(|_| invalid(format!("segment {segment} is not active")))?;
        self.entries[i].position = position;
        Ok(())
    }

    pub fn set_phase(&mut self, segment: usize, phase: f64) -> Result<()> {
        let i = self
            .find(segment)
            .map_err(|_| invalid(format!("segment {segment} is not active")))?;
        self.entries[i].phase = wrap_phase(phase);
        Ok(())
    }

    /// Overwrites phases in segment order.
    pub fn set_phases(&mut self, phases: &[f64]) -> Result<()> {
        if phases.len() != self.entries.len() {
            return Err(invalid(format!(
                "expected {} phases, got {}",
                self.entries.len(),
                phases.len()
            )));
        }
        for (e, &p) in self.entries.iter_mut().zip(phases) {
            e.phase = wrap_phase(p);
        }
        Ok(())
    }

    pub fn clear_phases(&mut self) {
        for e in &mut self.entries {
            e.phase = 0.0;
        }
    }

    /// Checks segment bounds and the minimum antenna spacing.
    pub fn validate(&self, layout: &WaveguideLayout, min_spacing: f64) -> Result<()> {
        for e in &self.entries {
            if e.segment >= layout.num_segments() {
                return Err(invalid(format!(
                    "segment {} does not exist in a {}-segment layout",
                    e.segment,
                    layout.num_segments()
                )));
            }
            if !layout.contains(e.segment, e.position) {
                return Err(invalid(format!(
                    "antenna at {} m lies outside segment {} [{}, {}]",
                    e.position,
                    e.segment,
                    layout.feed_x(e.segment),
                    layout.segment_end(e.segment)
                )));
            }
            if !(0.0..TAU).contains(&e.phase) {
                return Err(invalid(format!(
                    "phase {} of segment {} is outside [0, 2π)",
                    e.phase, e.segment
                )));
            }
        }
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                if (a.position - b.position).abs() < min_spacing {
                    return Err(invalid(format!(
                        "antennas in segments {} and {} are closer than {min_spacing} m",
                        a.segment, b.segment
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if p >= TAU {
        0.0
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn centered_layout_examples() {
        let l = build_centered_layout(1, 1.0, 3.0, 0.0).unwrap();
        assert_eq!(l.feeds(), &[-0.5]);

        let l = build_centered_layout(4, 1.0, 3.0, 0.0).unwrap();
        assert_eq!(l.feeds(), &[-2.0, -1.0, 0.0, 1.0]);

        let l = build_centered_layout(20, 1.0, 3.0, 10.0).unwrap();
        let expected: Vec<f64> = (0..20).map(f64::from).collect();
        assert_eq!(l.feeds(), expected.as_slice());
        assert_eq!(l.extent(), (0.0, 20.0));
    }

    #[test]
    fn layout_rejects_bad_arguments() {
        assert!(build_centered_layout(0, 1.0, 3.0, 0.0).is_err());
        assert!(build_centered_layout(3, 0.0, 3.0, 0.0).is_err());
        assert!(build_centered_layout(3, -1.0, 3.0, 0.0).is_err());
        assert!(build_centered_layout(3, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn segment_lookup_ties_to_lower_index() {
        let l = build_centered_layout(3, 1.0, 3.0, 0.0).unwrap();
        assert_eq!(l.segment_of(-1.5), Some(0));
        assert_eq!(l.segment_of(-0.5), Some(0));
        assert_eq!(l.segment_of(-0.49), Some(1));
        assert_eq!(l.segment_of(0.0), Some(1));
        assert_eq!(l.segment_of(1.5), Some(2));
        assert_eq!(l.segment_of(1.6), None);
        assert_eq!(l.segment_of(-1.6), None);
    }

    #[test]
    fn derived_wave_quantities() {
        let p = SystemParams::default();
        assert_relative_eq!(
            p.wavelength() * p.carrier_freq_hz,
            SPEED_OF_LIGHT,
            max_relative = 1e-12
        );
        assert_eq!(p.guided_wavelength(), p.wavelength() / p.n_eff);
        assert!(p.eta() > 0.0);
        assert_relative_eq!(p.min_spacing_m, p.wavelength() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.noise_power_w, 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn params_reject_nonpositive_values() {
        assert!(SystemParams::new(0.0, 1.4, 0.0, 1e-12, 0.01).is_err());
        assert!(SystemParams::new(28e9, 0.0, 0.0, 1e-12, 0.01).is_err());
        assert!(SystemParams::new(28e9, 1.4, -1.0, 1e-12, 0.01).is_err());
        assert!(SystemParams::new(28e9, 1.4, 0.0, 0.0, 0.01).is_err());
        assert!(SystemParams::new(28e9, 1.4, 0.0, 1e-12, 0.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_users(4, 20.0, 20.0, 0.01, 7).unwrap();
        let b = sample_users(4, 20.0, 20.0, 0.01, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_users(4, 20.0, 20.0, 0.01, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_region_stays_at_center() {
        let u = sample_users(1, 1e-4, 1e-4, 0.01, 3).unwrap();
        assert!(u.get(0).x.abs() <= 5e-5);
        assert!(u.get(0).y.abs() <= 5e-5);
    }

    #[test]
    fn sampled_x_mean_matches_uniform_moments() {
        let n = 100_000;
        let u = sample_users(n, 20.0, 20.0, 0.01, 11).unwrap();
        let mean = u.iter().map(|u| u.x).sum::<f64>() / n as f64;
        // Uniform on [-10, 10]: σ = 20 / √12.
        let sigma = 20.0 / 12f64.sqrt();
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        assert!(u.iter().all(|u| u.x.abs() <= 10.0 && u.y.abs() <= 10.0));
        assert!(u.iter().all(|u| u.d_k(3.0) >= 9.0));
    }

    #[test]
    fn larger_draw_extends_smaller_one() {
        let mut a = realization_rng(5, 3);
        let mut b = realization_rng(5, 3);
        let small = sample_users_from(&mut a, 2, 20.0, 20.0, 0.0, 0.01).unwrap();
        let large = sample_users_from(&mut b, 6, 20.0, 20.0, 0.0, 0.01).unwrap();
        assert_eq!(small.as_slice(), &large.as_slice()[..2]);
    }

    #[test]
    fn realization_streams_differ() {
        let mut a = realization_rng(5, 0);
        let mut b = realization_rng(5, 1);
        let x: u64 = a.random();
        let y: u64 = b.random();
        assert_ne!(x, y);
    }

    #[test]
    fn sampling_rejects_bad_arguments() {
        assert!(sample_users(0, 20.0, 20.0, 0.01, 1).is_err());
        assert!(sample_users(2, 0.0, 20.0, 0.01, 1).is_err());
        assert!(sample_users(2, 20.0, 20.0, 0.0, 1).is_err());
    }

    #[test]
    fn placement_validation() {
        let l = build_centered_layout(3, 1.0, 3.0, 0.0).unwrap();
        let mut p = Placement::new();
        p.insert(2, 1.0, 0.0).unwrap();
        p.insert(0, -1.0, -0.5).unwrap();
        assert_eq!(p.segments().collect::<Vec<_>>(), vec![0, 2]);
        assert!(p.get(0).unwrap().phase > 0.0);
        assert!(p.insert(2, 1.2, 0.0).is_err());
        p.validate(&l, 0.005).unwrap();

        let mut close = p.clone();
        close.insert(1, 0.5, 0.0).unwrap();
        close.validate(&l, 0.005).unwrap();
        close.set_position(2, 0.503).unwrap();
        assert!(close.validate(&l, 0.005).is_err());

        let mut outside = Placement::new();
        outside.insert(1, 0.6, 0.0).unwrap();
        assert!(outside.validate(&l, 0.005).is_err());
    }

    #[test]
    fn wrap_phase_is_half_open() {
        assert_eq!(wrap_phase(0.0), 0.0);
        assert_eq!(wrap_phase(TAU), 0.0);
        assert!(wrap_phase(-1e-300) < TAU);
        assert_relative_eq!(wrap_phase(-PI / 2.0), 1.5 * PI);
    }

    proptest! {
        #[test]
        fn layout_invariants_hold(m in 1usize..10_000, len in 0.01f64..5.0, center in -100.0f64..100.0) {
            let l = build_centered_layout(m, len, 3.0, center).unwrap();
            prop_assert_eq!(l.num_segments(), m);
            for w in l.feeds().windows(2) {
                prop_assert!(w[1] > w[0]);
                prop_assert!((w[1] - w[0] - len).abs() <= 1e-9 * (1.0 + center.abs() + m as f64 * len));
            }
            let (lo, hi) = l.extent();
            prop_assert!(((lo + hi) / 2.0 - center).abs() <= 1e-9 * (1.0 + center.abs() + m as f64 * len));
        }

        #[test]
        fn dbm_round_trip(dbm in -150.0f64..60.0) {
            prop_assert!((watts_to_dbm(dbm_to_watts(dbm)) - dbm).abs() < 1e-9);
        }
    }
}
