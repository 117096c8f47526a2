//! Monte Carlo sweeps over the number of segments or users.
//!
//! Realization `r` always draws its users from `realization_rng(seed, r)`, so
//! every scheme and every sweep point sees the same drop for a given `r`, and
//! results do not depend on how rayon schedules the work.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Scheme};
use crate::bound::{exact_amplitude_bound, sum_rate_bound};
use crate::error::{Error, Result};
use crate::geometry::{
    build_centered_layout, realization_rng, sample_users_from, SystemParams, User, UserSet,
    WaveguideLayout,
};
use crate::optimize::{full_sa, greedy, Aggregation, GreedyTrace, Problem};

/// Attempts allowed when redrawing a user that falls outside the waveguide.
const MAX_REDRAWS: usize = 100_000;

/// Swept quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    /// Number of segments `M`.
    Segments,
    /// Number of users `K`.
    Users,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Segments => "M",
            SweepAxis::Users => "K",
        }
    }
}

/// Mean and spread of one scheme at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_var: &'static str,
    pub sweep_value: usize,
    pub scheme: Scheme,
    pub mean_rate: f64,
    /// Sample standard deviation (n − 1 denominator); zero for one realization.
    pub std_rate: f64,
    pub realizations: usize,
    pub seed: u64,
}

/// User redraws needed by the bound schemes at one sweep point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResampleCount {
    pub sweep_value: usize,
    /// Users that started outside the waveguide, summed over realizations.
    pub users_resampled: usize,
    /// Total redraws, including repeated ones.
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub resamples: Vec<ResampleCount>,
    pub warnings: Vec<String>,
}

impl SweepOutcome {
    /// Rows of one scheme in sweep order.
    pub fn series(&self, scheme: Scheme) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("sweep_var,sweep_value,scheme,mean_rate_bps_hz,std_rate,n_real,seed\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.16e},{:.16e},{},{}",
                r.sweep_var,
                r.sweep_value,
                r.scheme,
                r.mean_rate,
                r.std_rate,
                r.realizations,
                r.seed
            );
        }
        out
    }
}

/// Provenance written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub seed: u64,
    pub realizations: usize,
    pub resamples: &'a [ResampleCount],
    pub warnings: &'a [String],
}

/// Path of the metadata sidecar for `output`.
pub fn metadata_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the CSV to `output` and the metadata to its sidecar.
pub fn write_sweep(
    outcome: &SweepOutcome,
    cfg: &ExperimentConfig,
    command: &str,
    output: &Path,
) -> Result<()> {
    std::fs::write(output, outcome.to_csv())?;
    write_metadata(cfg, command, &outcome.resamples, &outcome.warnings, output)
}

/// Writes `<output>.meta.json` describing the run that produced `output`.
pub fn write_metadata(
    cfg: &ExperimentConfig,
    command: &str,
    resamples: &[ResampleCount],
    warnings: &[String],
    output: &Path,
) -> Result<()> {
    let meta = RunMetadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: cfg.hash(),
        seed: cfg.run.seed,
        realizations: cfg.run.realizations,
        resamples,
        warnings,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(metadata_path(output), json + "\n")?;
    Ok(())
}

/// Bound schemes only, swept over `layout.segments`.
pub fn run_bound_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let schemes: Vec<Scheme> = cfg
        .run
        .schemes
        .iter()
        .copied()
        .filter(|s| s.is_bound())
        .collect();
    if schemes.is_empty() {
        return Err(Error::Config(
            "bound sweep needs bound-exact or bound-integral in run.schemes".into(),
        ));
    }
    run_sweep(cfg, SweepAxis::Segments, &schemes)
}

/// All configured schemes, swept over `layout.segments`.
pub fn run_segment_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    run_sweep(cfg, SweepAxis::Segments, &cfg.run.schemes)
}

/// All configured schemes, swept over `users.count`.
pub fn run_user_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    run_sweep(cfg, SweepAxis::Users, &cfg.run.schemes)
}

pub fn run_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    schemes: &[Scheme],
) -> Result<SweepOutcome> {
    cfg.validate()?;
    if schemes.is_empty() {
        return Err(Error::Config("no schemes to evaluate".into()));
    }
    let (points, fixed) = match axis {
        SweepAxis::Segments => (&cfg.layout.segments, &cfg.users.count),
        SweepAxis::Users => (&cfg.users.count, &cfg.layout.segments),
    };
    if fixed.len() != 1 {
        let name = match axis {
            SweepAxis::Segments => "users.count",
            SweepAxis::Users => "layout.segments",
        };
        return Err(Error::Config(format!(
            "{name} must hold a single value for a {} sweep",
            axis.label()
        )));
    }
    let params = cfg.params()?;
    let n = cfg.run.realizations;

    let mut rows = Vec::new();
    let mut resamples = Vec::new();
    let mut warnings = Vec::new();
    for &value in points {
        let (m, k) = match axis {
            SweepAxis::Segments => (value, fixed[0]),
            SweepAxis::Users => (fixed[0], value),
        };
        let span = m as f64 * cfg.layout.segment_length_m;
        if schemes.iter().any(|s| s.is_bound()) && span < cfg.users.region_x_m {
            warnings.push(format!(
                "M = {m}: waveguide span {span} m is shorter than the user region {} m; \
                 users outside the waveguide are redrawn for the bound",
                cfg.users.region_x_m
            ));
        }
        let per_real: Vec<Realization> = (0..n)
            .into_par_iter()
            .map(|r| evaluate(cfg, &params, m, k, r as u64, schemes))
            .collect::<Result<_>>()?;

        for (i, &scheme) in schemes.iter().enumerate() {
            let samples: Vec<f64> = per_real.iter().map(|r| r.rates[i]).collect();
            let (mean, std) = mean_std(&samples);
            rows.push(SweepRow {
                sweep_var: axis.label(),
                sweep_value: value,
                scheme,
                mean_rate: mean,
                std_rate: std,
                realizations: n,
                seed: cfg.run.seed,
            });
        }
        if schemes.iter().any(|s| s.is_bound()) {
            resamples.push(ResampleCount {
                sweep_value: value,
                users_resampled: per_real.iter().map(|r| r.users_resampled).sum(),
                redraws: per_real.iter().map(|r| r.redraws).sum(),
            });
        }
    }
    Ok(SweepOutcome {
        axis,
        rows,
        resamples,
        warnings,
    })
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct Realization {
    rates: Vec<f64>,
    users_resampled: usize,
    redraws: usize,
}

/// User drop of realization `r`.
pub fn realization_users(cfg: &ExperimentConfig, k: usize, r: u64) -> Result<UserSet> {
    let mut rng = realization_rng(cfg.run.seed, r);
    draw_users(cfg, &mut rng, k)
}

fn draw_users(cfg: &ExperimentConfig, rng: &mut impl Rng, k: usize) -> Result<UserSet> {
    let u = &cfg.users;
    sample_users_from(
        rng,
        k,
        u.region_x_m,
        u.region_y_m,
        cfg.layout.center_x_m,
        cfg.power_w(),
    )
}

/// Redraws the x-coordinate of every user outside the waveguide span, from the
/// same stream, until it falls inside. Returns the users, how many needed a
/// redraw and the total number of redraws.
fn resample_inside(
    cfg: &ExperimentConfig,
    rng: &mut impl Rng,
    users: &UserSet,
    layout: &WaveguideLayout,
) -> Result<(UserSet, usize, usize)> {
    let (lo, hi) = layout.extent();
    let mut moved = 0;
    let mut redraws = 0;
    let mut out: Vec<User> = users.as_slice().to_vec();
    for u in &mut out {
        if (lo..=hi).contains(&u.x) {
            continue;
        }
        moved += 1;
        let mut tries = 0;
        while !(lo..=hi).contains(&u.x) {
            if tries == MAX_REDRAWS {
                return Err(Error::InvalidArgument(
                    "user region does not overlap the waveguide".into(),
                ));
            }
            u.x = cfg.layout.center_x_m + rng.random_range(-0.5..=0.5) * cfg.users.region_x_m;
            tries += 1;
        }
        redraws += tries;
    }
    Ok((UserSet::new(out)?, moved, redraws))
}

fn evaluate(
    cfg: &ExperimentConfig,
    params: &SystemParams,
    m: usize,
    k: usize,
    r: u64,
    schemes: &[Scheme],
) -> Result<Realization> {
    let mut rng = realization_rng(cfg.run.seed, r);
    let users = draw_users(cfg, &mut rng, k)?;
    let layout = build_centered_layout(
        m,
        cfg.layout.segment_length_m,
        cfg.layout.height_m,
        cfg.layout.center_x_m,
    )?;
    let opt = &cfg.optimizer;

    let mut bound_users = None;
    let (mut users_resampled, mut redraws) = (0, 0);
    if schemes.iter().any(|s| s.is_bound()) {
        let (u, moved, n) = resample_inside(cfg, &mut rng, &users, &layout)?;
        bound_users = Some(u);
        users_resampled = moved;
        redraws = n;
    }
    let problem = if schemes.iter().any(|s| !s.is_bound()) {
        Some(Problem::new(&users, &layout, params, opt.grid_points)?)
    } else {
        None
    };
    if schemes
        .iter()
        .any(|s| matches!(s, Scheme::FullSa1 | Scheme::FullSa2))
        && layout.segment_length() < params.min_spacing_m
    {
        return Err(Error::InvalidArgument(
            "segment length is below the antenna spacing".into(),
        ));
    }

    let mut rates = Vec::with_capacity(schemes.len());
    for &s in schemes {
        let rate = match s {
            Scheme::BoundExact => {
                exact_amplitude_bound(bound_users.as_ref().expect("drawn"), &layout, params)?
            }
            Scheme::BoundIntegral => {
                sum_rate_bound(bound_users.as_ref().expect("drawn"), &layout, params)?
            }
            Scheme::Hssa1 => greedy(problem.as_ref().expect("built"), None)?.best_rate(),
            Scheme::Hssa2 => greedy(
                problem.as_ref().expect("built"),
                Some((opt.tolerance, opt.max_iter)),
            )?
            .best_rate(),
            Scheme::FullSa1 => {
                full_sa(
                    problem.as_ref().expect("built"),
                    Aggregation::TypeI,
                    opt.tolerance,
                    opt.max_iter,
                )?
                .rate
            }
            Scheme::FullSa2 => {
                full_sa(
                    problem.as_ref().expect("built"),
                    Aggregation::TypeII,
                    opt.tolerance,
                    opt.max_iter,
                )?
                .rate
            }
        };
        rates.push(rate);
    }
    Ok(Realization {
        rates,
        users_resampled,
        redraws,
    })
}

/// Greedy traces for realization 0 of a single `(M, K)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleRun {
    pub users: UserSet,
    pub traces: Vec<(Scheme, GreedyTrace)>,
}

impl SingleRun {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("scheme,level,segment,position_m,active_segments,phases_rad,rate_bps_hz,degenerate,best\n");
        for (scheme, trace) in &self.traces {
            for (i, l) in trace.levels.iter().enumerate() {
                let segment = l.segment.map(|s| s.to_string()).unwrap_or_default();
                let position = l.position.map(|p| format!("{p:.16e}")).unwrap_or_default();
                let active: Vec<String> =
                    l.placement.iter().map(|e| e.segment.to_string()).collect();
                let phases: Vec<String> = l
                    .placement
                    .iter()
                    .map(|e| format!("{:.16e}", e.phase))
                    .collect();
                let _ = writeln!(
                    out,
                    "{scheme},{},{segment},{position},{},{},{:.16e},{},{}",
                    l.level,
                    active.join(";"),
                    phases.join(";"),
                    l.rate,
                    l.degenerate,
                    i == trace.best_index
                );
            }
        }
        out
    }
}

/// Runs the configured greedy schemes once and keeps their full traces.
pub fn run_single(cfg: &ExperimentConfig) -> Result<SingleRun> {
    cfg.validate()?;
    if cfg.layout.segments.len() != 1 || cfg.users.count.len() != 1 {
        return Err(Error::Config(
            "single run needs one value in layout.segments and users.count".into(),
        ));
    }
    let schemes: Vec<Scheme> = cfg
        .run
        .schemes
        .iter()
        .copied()
        .filter(|s| s.is_greedy())
        .collect();
    if schemes.is_empty() {
        return Err(Error::Config(
            "single run needs hssa-1 or hssa-2 in run.schemes".into(),
        ));
    }
    let params = cfg.params()?;
    let users = realization_users(cfg, cfg.users.count[0], 0)?;
    let layout = build_centered_layout(
        cfg.layout.segments[0],
        cfg.layout.segment_length_m,
        cfg.layout.height_m,
        cfg.layout.center_x_m,
    )?;
    let problem = Problem::new(&users, &layout, &params, cfg.optimizer.grid_points)?;
    let opt = &cfg.optimizer;
    let mut traces = Vec::new();
    for s in schemes {
        let phase_opt = (s == Scheme::Hssa2).then_some((opt.tolerance, opt.max_iter));
        traces.push((s, greedy(&problem, phase_opt)?));
    }
    Ok(SingleRun { users, traces })
}
