//! Line-of-sight channel coefficients and the uplink sum-rate.

use std::f64::consts::TAU;

use crate::error::{invalid, Result};
use crate::geometry::{Placement, SystemParams, User, UserSet, WaveguideLayout};
use crate::ComplexGain;

/// Wave constants derived once from [`SystemParams`] for the inner loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Propagation {
    sqrt_eta: f64,
    k0: f64,
    /// In-waveguide propagation constant 2π / λ_g.
    beta: f64,
    kappa_db_per_m: f64,
}

impl Propagation {
    pub(crate) fn new(params: &SystemParams) -> Self {
        Self {
            sqrt_eta: params.eta().sqrt(),
            k0: params.wavenumber(),
            beta: TAU / params.guided_wavelength(),
            kappa_db_per_m: params.kappa_db_per_m,
        }
    }

    pub(crate) fn freespace(&self, user: &User, antenna_x: f64, height: f64) -> ComplexGain {
        let dx = user.x - antenna_x;
        let r = (dx * dx + user.d_k(height)).sqrt();
        ComplexGain::from_polar(self.sqrt_eta / r, -self.k0 * r)
    }

    /// `guided_len` must be nonnegative.
    pub(crate) fn in_waveguide(&self, guided_len: f64) -> ComplexGain {
        let mag = if self.kappa_db_per_m == 0.0 {
            1.0
        } else {
            10f64.powf(-self.kappa_db_per_m * guided_len / 20.0)
        };
        ComplexGain::from_polar(mag, -self.beta * guided_len)
    }

    /// g_{k,m}(ψ) for an antenna at `antenna_x` fed from `feed_x`.
    pub(crate) fn cascaded(
        &self,
        user: &User,
        feed_x: f64,
        antenna_x: f64,
        height: f64,
    ) -> ComplexGain {
        self.in_waveguide(antenna_x - feed_x) * self.freespace(user, antenna_x, height)
    }
}

/// Free-space coefficient between `user` and an antenna at `antenna_x` on the
/// waveguide: magnitude √η / r, phase −k₀ r.
pub fn freespace_gain(
    user: &User,
    antenna_x: f64,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> ComplexGain {
    Propagation::new(params).freespace(user, antenna_x, layout.height())
}

/// In-waveguide coefficient from the feed point to an antenna at `antenna_x`.
pub fn waveguide_gain(antenna_x: f64, feed_x: f64, params: &SystemParams) -> Result<ComplexGain> {
    if antenna_x.is_nan() || antenna_x < feed_x {
        return Err(invalid(format!(
            "antenna at {antenna_x} m lies before its feed point at {feed_x} m"
        )));
    }
    Ok(Propagation::new(params).in_waveguide(antenna_x - feed_x))
}

/// Cascaded coefficient g_{k,m}: in-waveguide times free-space.
pub fn cascaded_gain(
    user: &User,
    segment: usize,
    antenna_x: f64,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<ComplexGain> {
    if !layout.contains(segment, antenna_x) {
        return Err(invalid(format!(
            "antenna at {antenna_x} m lies outside segment {segment}"
        )));
    }
    Ok(Propagation::new(params).cascaded(user, layout.feed_x(segment), antenna_x, layout.height()))
}

/// Aggregated channel (1/√|S|) Σ_{m∈S} e^{jθ_m} g_{k,m}(ψ_m).
///
/// Type-I aggregation is the special case of all-zero phases.
pub fn effective_channel(
    placement: &Placement,
    user: &User,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<ComplexGain> {
    let prop = Propagation::new(params);
    effective_channel_with(&prop, placement, user, layout)
}

pub(crate) fn effective_channel_with(
    prop: &Propagation,
    placement: &Placement,
    user: &User,
    layout: &WaveguideLayout,
) -> Result<ComplexGain> {
    if placement.is_empty() {
        return Err(invalid(
            "effective channel needs at least one active segment",
        ));
    }
    let mut acc = ComplexGain::new(0.0, 0.0);
    for e in placement.iter() {
        if !layout.contains(e.segment, e.position) {
            return Err(invalid(format!(
                "antenna at {} m lies outside segment {}",
                e.position, e.segment
            )));
        }
        let g = prop.cascaded(user, layout.feed_x(e.segment), e.position, layout.height());
        acc += ComplexGain::from_polar(1.0, e.phase) * g;
    }
    Ok(acc / (placement.len() as f64).sqrt())
}

/// Effective channels of every user, in user order.
pub fn effective_channels(
    placement: &Placement,
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<Vec<ComplexGain>> {
    let prop = Propagation::new(params);
    users
        .iter()
        .map(|u| effective_channel_with(&prop, placement, u, layout))
        .collect()
}

/// Uplink sum-rate log₂(1 + Σ_k P_k |h_k|² / σ²) in bit/s/Hz.
pub fn sum_rate(channels: &[ComplexGain], users: &UserSet, params: &SystemParams) -> Result<f64> {
    if channels.len() != users.len() {
        return Err(invalid(format!(
            "{} channels supplied for {} users",
            channels.len(),
            users.len()
        )));
    }
    let received: f64 = channels
        .iter()
        .zip(users)
        .map(|(h, u)| u.power_w * h.norm_sqr())
        .sum();
    Ok(rate_from_snr(received / params.noise_power_w))
}

/// Sum-rate achieved by `placement`.
pub fn placement_rate(
    placement: &Placement,
    users: &UserSet,
    layout: &WaveguideLayout,
    params: &SystemParams,
) -> Result<f64> {
    let h = effective_channels(placement, users, layout, params)?;
    sum_rate(&h, users, params)
}

#[inline]
pub(crate) fn rate_from_snr(snr: f64) -> f64 {
    snr.ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_centered_layout, dbm_to_watts, wrap_phase};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn user(x: f64, y: f64) -> User {
        User {
            x,
            y,
            power_w: 0.01,
        }
    }

    // √η / 3 with η = c² / (16 π² f²), c = 299 792 458, f = 28 GHz, evaluated
    // independently in double precision.
    const SQRT_ETA_OVER_3: f64 = 2.840086404307704e-4;

    #[test]
    fn freespace_at_projection() {
        let p = SystemParams::default();
        let l = build_centered_layout(1, 1.0, 3.0, 0.0).unwrap();
        let g = freespace_gain(&user(0.2, 0.0), 0.2, &l, &p);
        assert_relative_eq!(g.norm(), SQRT_ETA_OVER_3, max_relative = 1e-12);
        assert_relative_eq!(p.eta(), 7.259481705540116e-7, max_relative = 1e-12);
    }

    #[test]
    fn freespace_magnitude_times_distance_is_sqrt_eta() {
        let p = SystemParams::default();
        let l = build_centered_layout(4, 1.0, 3.0, 0.0).unwrap();
        for (ux, uy, x) in [(1.0, 2.0, -1.5), (-7.0, 9.0, 1.9), (0.0, 0.0, 0.0)] {
            let u = user(ux, uy);
            let r = ((ux - x) * (ux - x) + u.d_k(3.0)).sqrt();
            assert_relative_eq!(
                freespace_gain(&u, x, &l, &p).norm() * r,
                p.eta().sqrt(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn mirrored_users_see_equal_gain() {
        let p = SystemParams::default();
        let l = build_centered_layout(4, 1.0, 3.0, 0.0).unwrap();
        let a = freespace_gain(&user(0.5 - 1.75, 2.0), 0.5, &l, &p);
        let b = freespace_gain(&user(0.5 + 1.75, 2.0), 0.5, &l, &p);
        assert_eq!(a, b);
    }

    #[test]
    fn waveguide_zero_length_and_full_wavelength() {
        let p = SystemParams::default();
        let g = waveguide_gain(1.25, 1.25, &p).unwrap();
        assert_eq!(g, ComplexGain::new(1.0, 0.0));
        let g = waveguide_gain(p.guided_wavelength(), 0.0, &p).unwrap();
        assert_relative_eq!(g.re, 1.0, epsilon = 1e-12);
        assert!(g.im.abs() < 1e-12);
    }

    #[test]
    fn waveguide_half_metre_phase() {
        let p = SystemParams::default();
        assert_relative_eq!(p.wavelength(), 0.0107068735, max_relative = 1e-12);
        assert_relative_eq!(
            p.guided_wavelength(),
            0.007647766785714286,
            max_relative = 1e-12
        );
        let g = waveguide_gain(0.5, 0.0, &p).unwrap();
        // −2π·0.5/λ_g reduced to [0, 2π), from an independent evaluation.
        let expected = 3.904605971323072;
        assert_relative_eq!(g.norm(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(wrap_phase(g.arg()), expected, epsilon = 1e-9);
    }

    #[test]
    fn waveguide_attenuation() {
        let p = SystemParams::new(28e9, 1.4, 2.0, 1e-12, 0.005).unwrap();
        let g = waveguide_gain(3.0, 1.0, &p).unwrap();
        assert_relative_eq!(g.norm(), 10f64.powf(-0.2), max_relative = 1e-14);
    }

    #[test]
    fn waveguide_rejects_antenna_before_feed() {
        let p = SystemParams::default();
        assert!(waveguide_gain(0.9, 1.0, &p).is_err());
    }

    #[test]
    fn cascaded_equals_freespace_at_feed() {
        let p = SystemParams::default();
        let l = build_centered_layout(3, 1.0, 3.0, 0.0).unwrap();
        let u = user(2.0, -4.0);
        let g = cascaded_gain(&u, 1, l.feed_x(1), &l, &p).unwrap();
        assert_eq!(g, freespace_gain(&u, l.feed_x(1), &l, &p));
    }

    #[test]
    fn cascaded_magnitude_at_projection() {
        let p = SystemParams::default();
        let l = build_centered_layout(3, 1.0, 3.0, 0.0).unwrap();
        let g = cascaded_gain(&user(0.37, 0.0), 1, 0.37, &l, &p).unwrap();
        assert_relative_eq!(g.norm(), SQRT_ETA_OVER_3, max_relative = 1e-12);
    }

    #[test]
    fn cascaded_rejects_out_of_segment_position() {
        let p = SystemParams::default();
        let l = build_centered_layout(3, 1.0, 3.0, 0.0).unwrap();
        assert!(cascaded_gain(&user(0.0, 0.0), 1, 0.6, &l, &p).is_err());
        assert!(cascaded_gain(&user(0.0, 0.0), 3, 0.0, &l, &p).is_err());
    }

    #[test]
    fn single_segment_effective_channel_is_cascaded_gain() {
        let p = SystemParams::default();
        let l = build_centered_layout(3, 1.0, 3.0, 0.0).unwrap();
        let u = user(1.3, 2.2);
        let mut pl = Placement::new();
        pl.insert(2, 0.8, 0.0).unwrap();
        let h = effective_channel(&pl, &u, &l, &p).unwrap();
        assert_eq!(h, cascaded_gain(&u, 2, 0.8, &l, &p).unwrap());
    }

    #[test]
    fn empty_placement_is_rejected() {
        let p = SystemParams::default();
        let l = build_centered_layout(3, 1.0, 3.0, 0.0).unwrap();
        assert!(effective_channel(&Placement::new(), &user(0.0, 0.0), &l, &p).is_err());
    }

    #[test]
    fn aligned_phases_reach_triangle_bound() {
        let p = SystemParams::default();
        let l = build_centered_layout(5, 1.0, 3.0, 0.0).unwrap();
        let u = user(0.4, 1.5);
        let positions = [-2.3, -1.1, 0.4, 0.9, 2.2];
        let mut pl = Placement::new();
        let mut amp_sum = 0.0;
        for (m, &x) in positions.iter().enumerate() {
            let g = cascaded_gain(&u, m, x, &l, &p).unwrap();
            amp_sum += g.norm();
            pl.insert(m, x, -g.arg()).unwrap();
        }
        let h = effective_channel(&pl, &u, &l, &p).unwrap();
        assert_relative_eq!(h.norm(), amp_sum / 5f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn zero_phase_channel_matches_closed_form() {
        let p = SystemParams::default();
        let l = build_centered_layout(4, 1.0, 3.0, 0.0).unwrap();
        let u = user(-0.7, 1.1);
        let positions = [-1.8, -0.7, 0.25, 1.6];
        let mut pl = Placement::new();
        for (m, &x) in positions.iter().enumerate() {
            pl.insert(m, x, 0.0).unwrap();
        }
        let h = effective_channel(&pl, &u, &l, &p).unwrap();

        let (k0, n_eff, eta) = (p.wavenumber(), p.n_eff, p.eta());
        let d_k = 9.0 + 1.1 * 1.1;
        let mut closed = ComplexGain::new(0.0, 0.0);
        for (m, &x) in positions.iter().enumerate() {
            let r = ((u.x - x).powi(2) + d_k).sqrt();
            let phase = -k0 * (r + n_eff * (x - l.feed_x(m)));
            closed += ComplexGain::from_polar(eta.sqrt() / r, phase);
        }
        closed /= 2.0;
        assert_relative_eq!((h - closed).norm() / closed.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sum_rate_examples() {
        let p = SystemParams::default();
        let users = UserSet::new(vec![user(0.0, 0.0), user(1.0, 1.0)]).unwrap();
        assert_eq!(
            sum_rate(&[ComplexGain::new(0.0, 0.0); 2], &users, &p).unwrap(),
            0.0
        );

        let single = UserSet::new(vec![User {
            x: 0.0,
            y: 0.0,
            power_w: dbm_to_watts(10.0),
        }])
        .unwrap();
        let h = ComplexGain::new((p.eta() / 9.0).sqrt(), 0.0);
        // log2(1 + 0.01·η/9 / 1e-12) from an independent evaluation.
        assert_relative_eq!(
            sum_rate(&[h], &single, &p).unwrap(),
            9.657513317976857,
            max_relative = 1e-12
        );

        assert!(sum_rate(&[h], &users, &p).is_err());
    }

    #[test]
    fn doubling_power_adds_one_bit_at_high_snr() {
        let p = SystemParams::default();
        let h = [ComplexGain::new(3e-4, 1e-4), ComplexGain::new(-2e-4, 5e-5)];
        let base = UserSet::new(vec![user(0.0, 0.0), user(1.0, 0.0)]).unwrap();
        let doubled = UserSet::new(
            base.iter()
                .map(|u| User {
                    power_w: 2.0 * u.power_w,
                    ..*u
                })
                .collect(),
        )
        .unwrap();
        let snr: f64 = base
            .iter()
            .zip(&h)
            .map(|(u, h)| u.power_w * h.norm_sqr())
            .sum::<f64>()
            / p.noise_power_w;
        assert!(snr > 1e3);
        let gain = sum_rate(&h, &doubled, &p).unwrap() - sum_rate(&h, &base, &p).unwrap();
        assert!((gain - 1.0).abs() < 0.01, "gain {gain}");
    }

    proptest! {
        #[test]
        fn lossless_waveguide_is_unit_modulus(len in 0.0f64..200.0) {
            let p = SystemParams::default();
            let g = waveguide_gain(len, 0.0, &p).unwrap();
            prop_assert!((g.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn freespace_decreases_with_offset(a in 0.0f64..50.0, b in 0.0f64..50.0, y in -10.0f64..10.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let p = SystemParams::default();
            let l = build_centered_layout(1, 1.0, 3.0, 0.0).unwrap();
            let u = user(0.0, y);
            let ga = freespace_gain(&u, a, &l, &p).norm();
            let gb = freespace_gain(&u, b, &l, &p).norm();
            prop_assert_eq!(a < b, ga > gb);
        }

        #[test]
        fn triangle_inequality(
            positions in proptest::collection::vec(0.0f64..1.0, 1..6),
            phases in proptest::collection::vec(0.0f64..TAU, 6),
            ux in -6.0f64..6.0, uy in -10.0f64..10.0,
        ) {
            let p = SystemParams::default();
            let l = build_centered_layout(positions.len(), 1.0, 3.0, 0.0).unwrap();
            let u = user(ux, uy);
            let mut pl = Placement::new();
            let mut amp = 0.0;
            for (m, &frac) in positions.iter().enumerate() {
                let x = l.feed_x(m) + frac;
                amp += cascaded_gain(&u, m, x, &l, &p).unwrap().norm();
                pl.insert(m, x, phases[m]).unwrap();
            }
            let s = positions.len() as f64;
            let h = effective_channel(&pl, &u, &l, &p).unwrap();
            prop_assert!(h.norm_sqr() <= amp * amp / s * (1.0 + 1e-12));
        }

        #[test]
        fn sum_rate_monotone_in_gain(a in 0.0f64..1e-3, b in 0.0f64..1e-3, c in 0.0f64..1e-3) {
            let p = SystemParams::default();
            let users = UserSet::new(vec![user(0.0, 0.0), user(1.0, 0.0)]).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let r_lo = sum_rate(&[ComplexGain::new(lo, 0.0), ComplexGain::new(c, 0.0)], &users, &p).unwrap();
            let r_hi = sum_rate(&[ComplexGain::new(0.0, hi), ComplexGain::new(c, 0.0)], &users, &p).unwrap();
            prop_assert!(r_hi >= r_lo);
        }
    }
}
