//! Asymptotics experiments: sharp-rate verification, prefactor scaling,
//! gradient-inequality sharpness, eigenvalue tracking along the flow, Taylor
//! order of the energy, the w2 mode equation, the well-prepared-data secant
//! search, and extinction-time studies.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::fit::{auto_window, linear_fit, rate_fit, RateFit};
use crate::flow::{
    ds_max, estimate_extinction_time, evolve_rescaled, normalize_phase, step_original,
    EvolveOptions, ExtinctionOptions, Trajectory,
};
use crate::functionals::Functionals;
use crate::grid::{DualField, Field, GridSpec};
use crate::profiles::{build_profile, Profile};
use crate::spectrum::{operator_norm_l_inverse, weighted_spectrum, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Shared experimental context: grid, functionals, the target profile, and
/// its leading spectrum.
pub struct Lab {
    pub funcs: Functionals,
    pub phi: Profile,
    pub spec: Spectrum,
}

impl Lab {
    pub fn new(cfg: &ExperimentConfig) -> Result<Lab> {
        let g = GridSpec::new(cfg.length, cfg.n)?;
        let funcs = Functionals::new(g, cfg.q)?;
        let phi = build_profile(g, cfg.q, cfg.bumps)?;
        let spec = weighted_spectrum(&g, cfg.q, phi.field(), 4)?;
        Ok(Lab { funcs, phi, spec })
    }

    pub fn grid(&self) -> &GridSpec {
        self.funcs.grid()
    }

    pub fn lambda0(&self) -> f64 {
        self.spec.lambda0()
    }
}

fn ext_opts(cfg: &ExperimentConfig) -> ExtinctionOptions {
    ExtinctionOptions {
        ds: cfg.ds.min(5e-3).min(0.9 * ds_max(cfg.q)),
        ..Default::default()
    }
}

fn trapz(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

fn push_check(failures: &mut Vec<String>, ok: bool, msg: String) {
    if !ok {
        failures.push(msg);
    }
}

/// Noise floors of the main diagnostics, measured on a run started exactly at
/// the profile (everything recorded there is scheme/roundoff residue).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NoiseFloor {
    pub jgap: f64,
    pub dist: f64,
    pub relent: f64,
}

pub fn noise_floor(lab: &Lab, cfg: &ExperimentConfig) -> Result<NoiseFloor> {
    let opts = EvolveOptions { record_stride: cfg.record_stride, ..Default::default() };
    let traj = evolve_rescaled(
        &lab.funcs,
        lab.phi.field(),
        1.0,
        cfg.ds,
        &lab.phi,
        &lab.spec,
        &opts,
    )?;
    let jphi = lab.funcs.energy_j(lab.phi.field());
    let max_of = |f: &dyn Fn(&crate::flow::Record) -> f64| {
        traj.records.iter().map(f).fold(0.0_f64, f64::max)
    };
    let phi_h10 = lab.phi.field().h10_norm();
    Ok(NoiseFloor {
        jgap: max_of(&|r| (r.energy_j - jphi).abs()).max(1e-15 * (1.0 + jphi.abs())),
        dist: max_of(&|r| r.dist_h10).max(1e-13 * phi_h10),
        relent: max_of(&|r| r.rel_entropy).max(1e-25 * phi_h10 * phi_h10),
    })
}

// ---------------------------------------------------------------------------
// sharp rate
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub q: f64,
    pub epsilon: f64,
    pub lambda0: f64,
    pub nu2: f64,
    /// J(v0) - J(phi) of the normalized datum
    pub jgap_initial: f64,
    pub jgap_fit: Option<RateFit>,
    pub dist_sq_fit: Option<RateFit>,
    pub relent_fit: Option<RateFit>,
    /// worst violation of G(v) - G(phi) >= (1/4) ||L_phi^{-1}||^{-2} dist^2
    /// past onset (negative numbers are violations)
    pub coercivity_margin: f64,
    /// fitted constant of the differential inequality
    /// dH/ds + lambda0 H <= C dist^rho H past onset
    pub h_ineq_constant: f64,
    pub inconclusive: bool,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Trajectory norms stay inside a fixed band on the phase set; the sharp-rate
/// fits additionally pin the slopes.
pub struct RateRun {
    pub report: RateReport,
    pub traj: Trajectory,
}

const RMS_INCONCLUSIVE: f64 = 0.2;

/// Phase normalization for rate-type runs. The unstable direction grows like
/// e^s, so a datum off the phase set by delta contaminates diagnostics at
/// scale delta^2 e^{2s}; 1e-9 keeps that below the fit windows used here.
const RATE_NORM_TOL: f64 = 1e-9;

/// Quadratic diagnostics are fitted over at most this many decades below
/// their onset value, keeping clear of both normalization leakage and the
/// roundoff plateau.
const FIT_DECADES: f64 = 3.0;

fn fit_or_note(
    s: &[f64],
    dist: &[f64],
    diag: &[f64],
    floor: f64,
    cfg: &ExperimentConfig,
    label: &str,
    notes: &mut Vec<String>,
) -> Option<RateFit> {
    let window = match auto_window(s, dist, diag, cfg.onset_frac, floor, cfg.floor_mult) {
        Ok(w) => w,
        Err(e) => {
            notes.push(format!("{label}: no usable window ({e})"));
            return None;
        }
    };
    // cap the window: at most FIT_DECADES below the onset value, and stop at
    // any turnaround (a diagnostic rising off its running minimum signals
    // leakage, not signal)
    let onset_idx = s.iter().position(|&si| si >= window.0).unwrap_or(0);
    let target = diag[onset_idx] * 10f64.powf(-FIT_DECADES);
    let mut hi = window.1;
    let mut running_min = f64::INFINITY;
    for i in onset_idx..s.len() {
        if s[i] > window.1 {
            break;
        }
        running_min = running_min.min(diag[i]);
        if diag[i] <= target || diag[i] > 3.0 * running_min {
            hi = s[i];
            break;
        }
    }
    let window = (window.0, hi);
    match rate_fit(s, diag, window.0, window.1) {
        Ok(f) if f.rms_residual > RMS_INCONCLUSIVE => {
            notes.push(format!(
                "{label}: rms residual {:.3e} above {RMS_INCONCLUSIVE} (noise floor reached)",
                f.rms_residual
            ));
            None
        }
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("{label}: {e}"));
            None
        }
    }
}

/// Evolves phi + epsilon e_2 (normalized to the phase set) and fits the decay
/// slopes of the J-gap, squared distance, and relative entropy against the
/// spectral prediction lambda0 = 2 nu_2 / (q-1).
pub fn rate_core(lab: &Lab, floor: &NoiseFloor, cfg: &ExperimentConfig, epsilon: f64) -> Result<RateRun> {
    let funcs = &lab.funcs;
    let lambda0 = lab.lambda0();
    let nu2 = lab.spec.nu(2);
    let jphi = funcs.energy_j(lab.phi.field());

    let v0 = if epsilon == 0.0 {
        lab.phi.field().clone()
    } else {
        let u0 = lab.phi.field().add_scaled(epsilon, lab.spec.eigenfunction(2));
        normalize_phase(funcs, &u0, RATE_NORM_TOL, &ext_opts(cfg))?
    };
    let jgap_initial = funcs.energy_j(&v0) - jphi;

    let s_horizon = if cfg.s_horizon > 0.0 {
        cfg.s_horizon
    } else {
        // transient (~1.5 decades) + the fit window + margin
        (((FIT_DECADES + 1.5) * 10f64.ln() + 2.0) / lambda0).max(1.0)
    };

    let opts = EvolveOptions {
        record_stride: cfg.record_stride,
        spectrum_stride: cfg.spectrum_stride,
        mu_head: cfg.mu_head,
        eps_reg: Some(cfg.eps_reg),
    };
    let traj = evolve_rescaled(funcs, &v0, s_horizon, cfg.ds, &lab.phi, &lab.spec, &opts)?;

    let s = traj.s_values();
    let dist = traj.series(|r| r.dist_h10);
    let jgap: Vec<f64> = traj.series(|r| r.energy_j - jphi);
    let dist_sq: Vec<f64> = dist.iter().map(|d| d * d).collect();
    let relent = traj.series(|r| r.rel_entropy);

    let mut failures = Vec::new();
    let jgap_fit = fit_or_note(&s, &dist, &jgap, floor.jgap, cfg, "J-gap", &mut failures);
    let dist_sq_fit = fit_or_note(
        &s,
        &dist,
        &dist_sq,
        floor.dist * floor.dist,
        cfg,
        "dist^2",
        &mut failures,
    );
    let relent_fit = fit_or_note(&s, &dist, &relent, floor.relent, cfg, "rel entropy", &mut failures);
    let inconclusive = jgap_fit.is_none() || relent_fit.is_none();

    // phase-set boundedness: the trajectory never leaves a neighborhood of phi
    let phi_h10 = lab.phi.field().h10_norm();
    let max_dist = dist.iter().cloned().fold(0.0_f64, f64::max);
    push_check(
        &mut failures,
        max_dist <= 0.5 * phi_h10,
        format!("trajectory left the neighborhood of the profile: max dist {max_dist:.3e}"),
    );

    // coercivity and the H differential inequality past onset
    let onset = dist.iter().position(|&d| d < cfg.onset_frac * dist[0]).unwrap_or(s.len());
    let linv = operator_norm_l_inverse(funcs.grid(), funcs.q(), lab.phi.field())?;
    let gphi = funcs.coercive_g(lab.phi.field());
    let rho = funcs.rho();
    let mut coercivity_margin = f64::INFINITY;
    let mut h_ineq_constant = f64::NEG_INFINITY;
    for i in onset..s.len() {
        let r = &traj.records[i];
        if r.dist_h10 > cfg.floor_mult.sqrt() * floor.dist {
            let lower = 0.25 / (linv * linv) * r.dist_h10 * r.dist_h10;
            let margin = (r.coercive_g - gphi) - lower;
            coercivity_margin = coercivity_margin.min(margin / lower.max(f64::MIN_POSITIVE));
        }
        if i > onset && i + 1 < s.len() && jgap[i] > cfg.floor_mult * floor.jgap {
            let dh = (jgap[i + 1] - jgap[i - 1]) / (s[i + 1] - s[i - 1]);
            let c = (dh + lambda0 * jgap[i]) / (dist[i].powf(rho) * jgap[i]);
            h_ineq_constant = h_ineq_constant.max(c);
        }
    }
    if coercivity_margin.is_finite() {
        push_check(
            &mut failures,
            coercivity_margin >= -1e-6,
            format!("coercivity lower bound violated by relative margin {coercivity_margin:.3e}"),
        );
    }

    let mut pass = !inconclusive;
    let slope_check = |fit: &Option<RateFit>, label: &str, failures: &mut Vec<String>| -> bool {
        match fit {
            Some(f) => {
                let ok = (f.slope + lambda0).abs() <= 0.03 * lambda0;
                push_check(
                    failures,
                    ok,
                    format!(
                        "{label} slope {:.6} vs -lambda0 {:.6} off by {:.2}%",
                        f.slope,
                        -lambda0,
                        100.0 * (f.slope + lambda0).abs() / lambda0
                    ),
                );
                ok
            }
            None => false,
        }
    };
    if epsilon > 0.0 {
        pass &= slope_check(&jgap_fit, "J-gap", &mut failures);
        pass &= slope_check(&dist_sq_fit, "dist^2", &mut failures);
        pass &= slope_check(&relent_fit, "rel entropy", &mut failures);
        pass &= failures.is_empty();
    } else {
        // a stationary datum must come out inconclusive, not with a fake rate
        pass = inconclusive;
    }

    Ok(RateRun {
        report: RateReport {
            q: funcs.q(),
            epsilon,
            lambda0,
            nu2,
            jgap_initial,
            jgap_fit,
            dist_sq_fit,
            relent_fit,
            coercivity_margin,
            h_ineq_constant,
            inconclusive,
            failures,
            pass,
        },
        traj,
    })
}

pub fn rate_experiment(cfg: &ExperimentConfig) -> Result<(Lab, NoiseFloor, RateRun)> {
    let lab = Lab::new(cfg)?;
    let floor = noise_floor(&lab, cfg)?;
    let run = rate_core(&lab, &floor, cfg, cfg.epsilon)?;
    Ok((lab, floor, run))
}

// ---------------------------------------------------------------------------
// prefactor scaling / optimality
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct PrefactorReport {
    pub epsilons: Vec<f64>,
    pub prefactors: Vec<f64>,
    pub jgap_initials: Vec<f64>,
    /// spread (max/min - 1) of prefactor / epsilon^2
    pub eps_sq_spread: f64,
    /// spread of prefactor / (J(v0) - J(phi))
    pub jgap_spread: f64,
    /// relative-entropy slopes never decay faster than lambda0 (lower bound)
    pub relent_slopes: Vec<f64>,
    pub lambda0: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Sweeps epsilon over {1, 2, 4} x cfg.epsilon and checks that the fitted
/// J-gap prefactor scales as epsilon^2 (equivalently as the initial J-gap),
/// and that the relative entropy decays no faster than lambda0 (the lower
/// bound side of the two-sided rate).
pub fn prefactor_experiment(cfg: &ExperimentConfig) -> Result<(PrefactorReport, Vec<RateRun>)> {
    let lab = Lab::new(cfg)?;
    let floor = noise_floor(&lab, cfg)?;
    let lambda0 = lab.lambda0();
    let epsilons: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|m| m * cfg.epsilon).collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut prefactors = Vec::new();
    let mut jgap_initials = Vec::new();
    let mut relent_slopes = Vec::new();
    for &eps in &epsilons {
        let run = rate_core(&lab, &floor, cfg, eps)?;
        match (&run.report.jgap_fit, &run.report.relent_fit) {
            (Some(j), Some(r)) => {
                prefactors.push(j.intercept.exp());
                relent_slopes.push(r.slope);
            }
            _ => failures.push(format!("epsilon {eps:.1e}: inconclusive fit")),
        }
        jgap_initials.push(run.report.jgap_initial);
        runs.push(run);
    }
    let spread = |vals: &[f64]| -> f64 {
        let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mn = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        mx / mn - 1.0
    };
    let (eps_sq_spread, jgap_spread) = if prefactors.len() == epsilons.len() {
        let by_eps_sq: Vec<f64> = prefactors
            .iter()
            .zip(&epsilons)
            .map(|(p, e)| p / (e * e))
            .collect();
        let by_jgap: Vec<f64> = prefactors
            .iter()
            .zip(&jgap_initials)
            .map(|(p, g)| p / g)
            .collect();
        (spread(&by_eps_sq), spread(&by_jgap))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    push_check(
        &mut failures,
        eps_sq_spread <= 0.10,
        format!("prefactor/epsilon^2 spread {:.2}% exceeds 10%", 100.0 * eps_sq_spread),
    );
    for (slope, eps) in relent_slopes.iter().zip(&epsilons) {
        // decay at most lambda0 (within the fit tolerance): optimality side
        push_check(
            &mut failures,
            -slope <= 1.03 * lambda0,
            format!("epsilon {eps:.1e}: entropy decays faster than lambda0 ({slope:.6})"),
        );
    }
    let pass = failures.is_empty();
    Ok((
        PrefactorReport {
            epsilons,
            prefactors,
            jgap_initials,
            eps_sq_spread,
            jgap_spread,
            relent_slopes,
            lambda0,
            failures,
            pass,
        },
        runs,
    ))
}

// ---------------------------------------------------------------------------
// gradient-inequality sharpness
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct GradientRatioReport {
    /// 1 / (2 nu_2)
    pub target: f64,
    /// mean of (J(v)-J(phi)) / ||J'(v)||^2 over the last decade before the
    /// noise floor
    pub late_ratio: f64,
    pub late_ratio_rel_err: f64,
    /// worst change of the ratio when the dual norm is replaced by its
    /// epsilon-regularized surrogate
    pub eps_check_rel_err: f64,
    /// fitted C of r(s) <= 1/(2 nu_2^s) + C dist^rho past onset
    pub bound_constant: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

pub fn gradient_ratio_track(
    lab: &Lab,
    traj: &Trajectory,
    floor: &NoiseFloor,
    cfg: &ExperimentConfig,
) -> Result<GradientRatioReport> {
    let funcs = &lab.funcs;
    let jphi = funcs.energy_j(lab.phi.field());
    let nu2 = lab.spec.nu(2);
    let target = 1.0 / (2.0 * nu2);
    let shift = funcs.lambda_q() * (funcs.q() - 1.0);
    let rho = funcs.rho();

    let dist0 = traj.records[0].dist_h10;
    let mut failures = Vec::new();
    let mut late_ratios = Vec::new();
    let mut eps_check_rel_err: f64 = 0.0;
    let mut bound_constant = f64::NEG_INFINITY;
    let mut past_onset = false;
    let mut hi_level = f64::NAN;
    for r in &traj.records {
        let jgap = r.energy_j - jphi;
        if !past_onset {
            past_onset = r.dist_h10 < cfg.onset_frac * dist0;
            if past_onset {
                // last usable decade: just above where the fit windows end
                hi_level = (jgap * 10f64.powf(-FIT_DECADES)).max(cfg.floor_mult * floor.jgap);
            }
            continue;
        }
        if jgap <= hi_level {
            break;
        }
        let grad = match r.grad_hs_prime {
            Some(g) if g > 0.0 => g,
            _ => {
                failures.push(format!("missing dual gradient norm at s = {:.4}", r.s));
                break;
            }
        };
        let ratio = jgap / (grad * grad);
        if let Some(&mu2s) = r.mu_head.get(1) {
            let nu2s = mu2s - shift;
            if nu2s > 0.0 {
                bound_constant =
                    bound_constant.max((ratio - 1.0 / (2.0 * nu2s)) / r.dist_h10.powf(rho));
            }
        }
        // last decade before the effective noise floor
        if jgap <= 10.0 * hi_level {
            late_ratios.push(ratio);
            if let Some(ge) = r.grad_eps_reg {
                if ge > 0.0 {
                    let r_eps = jgap / (ge * ge);
                    eps_check_rel_err = eps_check_rel_err.max((r_eps / ratio - 1.0).abs());
                }
            }
        }
    }
    if late_ratios.is_empty() {
        return Err(Error::FitInconclusive(
            "no records in the last decade before the noise floor".into(),
        ));
    }
    let late_ratio = late_ratios.iter().sum::<f64>() / late_ratios.len() as f64;
    let late_ratio_rel_err = (late_ratio / target - 1.0).abs();
    push_check(
        &mut failures,
        late_ratio_rel_err <= 0.05,
        format!(
            "late ratio {late_ratio:.6} vs 1/(2 nu_2) = {target:.6} off by {:.2}%",
            100.0 * late_ratio_rel_err
        ),
    );
    push_check(
        &mut failures,
        eps_check_rel_err <= 0.01,
        format!(
            "epsilon-regularized surrogate shifts the ratio by {:.3}%",
            100.0 * eps_check_rel_err
        ),
    );
    push_check(
        &mut failures,
        bound_constant.is_finite(),
        "no spectral records past onset to fit the bound constant".into(),
    );
    let pass = failures.is_empty();
    Ok(GradientRatioReport {
        target,
        late_ratio,
        late_ratio_rel_err,
        eps_check_rel_err,
        bound_constant,
        failures,
        pass,
    })
}

// ---------------------------------------------------------------------------
// eigenvalue tracking along the flow
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct EigenTrackReport {
    pub mu_static: Vec<f64>,
    /// max over past-onset spectral records of |1/mu_j^s - 1/mu_j| / dist_lq^rho
    pub drift_constants: Vec<f64>,
    /// late-half max of the same ratio over its early-half max (trend check)
    pub drift_trends: Vec<f64>,
    pub first_positive_always_2: bool,
    pub sup_linv: f64,
    pub linv_static: f64,
    /// relative gap of the last sampled mu_2^s to mu_2
    pub mu2_final_rel_err: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Dedicated tracking run: perturbs along a mix of e_2 and e_3 so that the
/// first-order eigenvalue drift is genuinely nonzero (a pure e_2 datum has it
/// suppressed by parity, leaving nothing but noise to compare against).
pub fn eigen_track_experiment(cfg: &ExperimentConfig) -> Result<EigenTrackReport> {
    let lab = Lab::new(cfg)?;
    let floor = noise_floor(&lab, cfg)?;
    let inv_sqrt2 = 0.5f64.sqrt();
    // a larger perturbation keeps the drift signal above the slowly amplified
    // phase-normalization error without leaving the linear regime
    let eps = (3.0 * cfg.epsilon).min(0.03);
    let u0 = lab
        .phi
        .field()
        .add_scaled(eps * inv_sqrt2, lab.spec.eigenfunction(2))
        .add_scaled(eps * inv_sqrt2, lab.spec.eigenfunction(3));
    let v0 = normalize_phase(&lab.funcs, &u0, RATE_NORM_TOL, &ext_opts(cfg))?;
    let lambda0 = lab.lambda0();
    let s_horizon = (((FIT_DECADES + 1.5) * 10f64.ln() + 2.0) / lambda0).max(1.0);
    let opts = EvolveOptions {
        record_stride: cfg.record_stride,
        spectrum_stride: cfg.spectrum_stride.max(1),
        mu_head: cfg.mu_head,
        eps_reg: None,
    };
    let traj = evolve_rescaled(&lab.funcs, &v0, s_horizon, cfg.ds, &lab.phi, &lab.spec, &opts)?;
    eigen_tracking(&lab, &traj, &floor, cfg)
}

pub fn eigen_tracking(
    lab: &Lab,
    traj: &Trajectory,
    floor: &NoiseFloor,
    cfg: &ExperimentConfig,
) -> Result<EigenTrackReport> {
    let funcs = &lab.funcs;
    let shift = funcs.lambda_q() * (funcs.q() - 1.0);
    let rho = funcs.rho();
    let head = cfg.mu_head.min(lab.spec.len());
    let mu_static: Vec<f64> = (1..=head).map(|j| lab.spec.mu(j)).collect();
    let linv_static = operator_norm_l_inverse(funcs.grid(), funcs.q(), lab.phi.field())?;

    let dist0 = traj.records[0].dist_h10;
    let mut failures = Vec::new();
    // (s, ratios per mode, linv, first-positive index ok, mu2)
    type TrackRow = (f64, Vec<f64>, Option<f64>, bool, f64);
    let mut rows: Vec<TrackRow> = Vec::new();
    let mut past_onset = false;
    let mut dist_cut = f64::NAN;
    for r in &traj.records {
        if r.mu_head.is_empty() {
            continue;
        }
        if !past_onset {
            past_onset = r.dist_h10 < cfg.onset_frac * dist0;
            if !past_onset {
                continue;
            }
            // one decade only: further in, the first-order drift of the even
            // modes has decayed below the amplified normalization error
            dist_cut = (r.dist_h10 * 0.1).max(cfg.floor_mult * floor.dist);
        }
        if r.dist_h10 <= dist_cut {
            break;
        }
        let denom = r.dist_lq.powf(rho);
        let ratios: Vec<f64> = (0..head)
            .map(|j| (1.0 / r.mu_head[j] - 1.0 / mu_static[j]).abs() / denom)
            .collect();
        let first_pos_ok = r.mu_head[0] - shift < 0.0
            && r.mu_head.len() > 1
            && r.mu_head[1] - shift > 0.0;
        rows.push((r.s, ratios, r.linv_norm, first_pos_ok, r.mu_head[1]));
    }
    if rows.len() < 4 {
        return Err(Error::FitInconclusive(format!(
            "only {} spectral records past onset; increase the horizon or sampling",
            rows.len()
        )));
    }

    let mut drift_constants = vec![0.0_f64; head];
    let mut drift_trends = vec![0.0_f64; head];
    let half = rows.len() / 2;
    for j in 0..head {
        let early = rows[..half].iter().map(|r| r.1[j]).fold(0.0_f64, f64::max);
        let late = rows[half..].iter().map(|r| r.1[j]).fold(0.0_f64, f64::max);
        drift_constants[j] = early.max(late);
        drift_trends[j] = late / early.max(f64::MIN_POSITIVE);
        push_check(
            &mut failures,
            drift_constants[j].is_finite(),
            format!("mode {}: unbounded eigenvalue drift constant", j + 1),
        );
        push_check(
            &mut failures,
            drift_trends[j] <= 2.0,
            format!(
                "mode {}: drift/dist^rho ratio grows by {:.2}x between window halves",
                j + 1,
                drift_trends[j]
            ),
        );
    }
    let first_positive_always_2 = rows.iter().all(|r| r.3);
    push_check(
        &mut failures,
        first_positive_always_2,
        "first positive shifted eigenvalue index left 2 past onset".into(),
    );
    let sup_linv = rows
        .iter()
        .filter_map(|r| r.2)
        .fold(0.0_f64, f64::max);
    push_check(
        &mut failures,
        sup_linv > 0.0 && sup_linv <= 2.0 * linv_static * 1.05,
        format!("sup ||L_s^{{-1}}|| = {sup_linv:.6} vs static {linv_static:.6}"),
    );
    let mu2_final_rel_err = (rows.last().unwrap().4 - mu_static[1]).abs() / mu_static[1];
    push_check(
        &mut failures,
        mu2_final_rel_err <= 1e-3,
        format!("mu_2^s did not settle: final relative gap {mu2_final_rel_err:.3e}"),
    );
    let pass = failures.is_empty();
    Ok(EigenTrackReport {
        mu_static,
        drift_constants,
        drift_trends,
        first_positive_always_2,
        sup_linv,
        linv_static,
        mu2_final_rel_err,
        failures,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Taylor order of the energy at the profile
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct TaylorReport {
    pub q: f64,
    pub rho: f64,
    pub exponent: f64,
    pub required: f64,
    pub ladder: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Fits the order of the remainder |J(phi + t xi) - J(phi) - t <J'(phi), xi>
/// - (t^2/2) <L_phi xi, xi>| in t for a fixed random direction xi; the
/// exponent must reach 2 + rho up to fit slack.
pub fn taylor_check(cfg: &ExperimentConfig) -> Result<TaylorReport> {
    let lab = Lab::new(cfg)?;
    let funcs = &lab.funcs;
    let g = *funcs.grid();
    let phi = lab.phi.field();
    let rho = funcs.rho();

    // a smooth direction keeps the remainder well above roundoff across the
    // whole ladder (white noise at H10 scale is pointwise tiny)
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let xi = random_datum(g, &mut rng).scaled(phi.h10_norm());

    let jphi = funcs.energy_j(phi);
    let lin = funcs.grad_j(phi).pairing(&xi);
    let quad = funcs.linearized_apply(phi, &xi).pairing(&xi);

    let mut ladder = Vec::new();
    let mut logs_t = Vec::new();
    let mut logs_r = Vec::new();
    for k in 0..8 {
        let t = 10f64.powf(-1.0 - 2.0 * k as f64 / 7.0);
        let j = funcs.energy_j(&phi.add_scaled(t, &xi));
        let rem = (j - jphi - t * lin - 0.5 * t * t * quad).abs();
        ladder.push((t, rem));
        if rem > 1e-13 * (1.0 + jphi.abs()) {
            logs_t.push(t.ln());
            logs_r.push(rem.ln());
        }
    }
    let (exponent, _, _) = linear_fit(&logs_t, &logs_r)?;
    let required = 2.0 + rho - 0.15;
    Ok(TaylorReport {
        q: funcs.q(),
        rho,
        exponent,
        required,
        ladder,
        pass: exponent >= required,
    })
}

// ---------------------------------------------------------------------------
// w2 mode equation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct W2Report {
    pub nu2: f64,
    pub epsilon: f64,
    /// max pointwise deviation of w2(s) from w2(0) exp(-nu2 s/(q-1)) on the
    /// finer run
    pub exp_rel_err: f64,
    /// sup of the centered-difference ODE residual, coarse and fine
    pub diff_residual: (f64, f64),
    /// sup |w2 - Duhamel reconstruction| / |w2(0)|, coarse and fine
    pub duhamel_residual: (f64, f64),
    pub diff_ratio: f64,
    pub duhamel_ratio: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn w2_run(
    lab: &Lab,
    v0: &Field,
    s_horizon: f64,
    ds: f64,
    record_ds: f64,
) -> Result<Trajectory> {
    let stride = (record_ds / ds).round().max(1.0) as usize;
    let opts = EvolveOptions { record_stride: stride, ..Default::default() };
    evolve_rescaled(&lab.funcs, v0, s_horizon, ds, &lab.phi, &lab.spec, &opts)
}

fn w2_residuals(lab: &Lab, traj: &Trajectory, s_hi: f64) -> (f64, f64) {
    let q = lab.funcs.q();
    let a = lab.spec.nu(2) / (q - 1.0);
    let b = lab.spec.mu(2) / (q - 1.0);
    let s = traj.s_values();
    let w2 = traj.series(|r| r.w2);
    let r2 = traj.series(|r| r.r2);
    let scale = a * w2[0].abs().max(f64::MIN_POSITIVE);

    let mut diff_res: f64 = 0.0;
    for i in 1..s.len() - 1 {
        if s[i] > s_hi {
            break;
        }
        let dw = (w2[i + 1] - w2[i - 1]) / (s[i + 1] - s[i - 1]);
        diff_res = diff_res.max((dw + a * w2[i] - b * r2[i]).abs() / scale);
    }

    // Duhamel: w2(s) = e^{-a s} (w2(0) + b * integral_0^s e^{a sigma} r2 dsigma)
    let mut duhamel_res: f64 = 0.0;
    let mut integral = 0.0;
    for i in 1..s.len() {
        if s[i] > s_hi {
            break;
        }
        integral += 0.5
            * (s[i] - s[i - 1])
            * ((a * s[i - 1]).exp() * r2[i - 1] + (a * s[i]).exp() * r2[i]);
        let pred = (-a * s[i]).exp() * (w2[0] + b * integral);
        duhamel_res = duhamel_res.max((w2[i] - pred).abs() / w2[0].abs().max(f64::MIN_POSITIVE));
    }
    (diff_res, duhamel_res)
}

/// Linear-regime verification of the w2 mode equation: the coefficient decays
/// as a clean exponential, and both the ODE residual and the Duhamel
/// reconstruction error shrink under step refinement.
pub fn w2_ode_check(cfg: &ExperimentConfig) -> Result<W2Report> {
    let lab = Lab::new(cfg)?;
    let funcs = &lab.funcs;
    let q = funcs.q();
    let nu2 = lab.spec.nu(2);
    let a = nu2 / (q - 1.0);
    let epsilon = cfg.epsilon.min(1e-5);

    let u0 = lab.phi.field().add_scaled(epsilon, lab.spec.eigenfunction(2));
    let mut norm_cfg = cfg.clone();
    norm_cfg.extinction_tol = cfg.extinction_tol.min(1e-6);
    let v0 = normalize_phase(funcs, &u0, norm_cfg.extinction_tol, &ext_opts(&norm_cfg))?;

    let ds = cfg.ds.min(1e-3).min(0.9 * ds_max(q));
    let record_ds = 10.0 * ds;
    let s_hi = 3.0 / a;
    let traj_coarse = w2_run(&lab, &v0, s_hi, ds, record_ds)?;
    let traj_fine = w2_run(&lab, &v0, s_hi, 0.5 * ds, record_ds)?;

    let mut failures = Vec::new();
    // pointwise exponential on the finer run
    let s = traj_fine.s_values();
    let w2 = traj_fine.series(|r| r.w2);
    let w20 = w2[0];
    push_check(&mut failures, w20.abs() > 0.0, "w2(0) vanished".into());
    let mut exp_rel_err: f64 = 0.0;
    for i in 0..s.len() {
        let pred = w20 * (-a * s[i]).exp();
        exp_rel_err = exp_rel_err.max((w2[i] / pred - 1.0).abs());
    }
    push_check(
        &mut failures,
        exp_rel_err <= 0.02,
        format!("w2 deviates from the exponential by {:.3}%", 100.0 * exp_rel_err),
    );

    let diff_residual = (
        w2_residuals(&lab, &traj_coarse, s_hi).0,
        w2_residuals(&lab, &traj_fine, s_hi).0,
    );
    let duhamel_residual = (
        w2_residuals(&lab, &traj_coarse, s_hi).1,
        w2_residuals(&lab, &traj_fine, s_hi).1,
    );
    let diff_ratio = diff_residual.1 / diff_residual.0.max(f64::MIN_POSITIVE);
    let duhamel_ratio = duhamel_residual.1 / duhamel_residual.0.max(f64::MIN_POSITIVE);
    push_check(
        &mut failures,
        diff_ratio <= 0.75,
        format!("ODE residual ratio {diff_ratio:.3} under ds halving (want <= 0.75)"),
    );
    push_check(
        &mut failures,
        duhamel_ratio <= 0.65,
        format!("Duhamel residual ratio {duhamel_ratio:.3} under ds halving (want <= 0.65)"),
    );
    let pass = failures.is_empty();
    Ok(W2Report {
        nu2,
        epsilon,
        exp_rel_err,
        diff_residual,
        duhamel_residual,
        diff_ratio,
        duhamel_ratio,
        failures,
        pass,
    })
}

// ---------------------------------------------------------------------------
// well-prepared data via secant on the e_2 coefficient
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct WellPreparedReport {
    pub nu2: f64,
    pub nu3: f64,
    pub alpha_root: f64,
    pub g_at_root: f64,
    pub secant_iters: usize,
    pub prepared_slope: f64,
    pub generic_slope: f64,
    /// 2 nu_3 / (q-1), the faster target rate
    pub faster_rate: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn duhamel_coefficient(
    lab: &Lab,
    cfg: &ExperimentConfig,
    eta: &Field,
    alpha: f64,
    ext_tol: f64,
) -> Result<f64> {
    let funcs = &lab.funcs;
    let q = funcs.q();
    let a = lab.spec.nu(2) / (q - 1.0);
    let b = lab.spec.mu(2) / (q - 1.0);
    let s_t = 12.0 / a;

    let u0 = lab
        .phi
        .field()
        .add_scaled(alpha, lab.spec.eigenfunction(2))
        .add_scaled(1.0, eta);
    let v0 = normalize_phase(funcs, &u0, ext_tol, &ext_opts(cfg))?;
    let ds = cfg.ds.min(0.9 * ds_max(q));
    let opts = EvolveOptions { record_stride: cfg.record_stride, ..Default::default() };
    let traj = evolve_rescaled(funcs, &v0, s_t, ds, &lab.phi, &lab.spec, &opts)?;

    let s = traj.s_values();
    let integrand: Vec<f64> = traj.records.iter().map(|r| (a * r.s).exp() * r.r2).collect();
    let integral = trapz(&s, &integrand);
    // tail check: the last contribution must be a small fraction of the whole
    let tail = integrand.last().unwrap().abs() * (s[s.len() - 1] - s[s.len() - 2]);
    let w20 = traj.records[0].w2;
    let g = w20 + b * integral;
    // absolute floor: near the root both terms vanish and the tail is pure
    // roundoff, which must not trip the truncation check
    let scale = (b * integral).abs().max(w20.abs()).max(1e-6 * cfg.delta * (q - 1.0) / lab.spec.mu(2));
    if tail > 1e-3 * scale {
        return Err(Error::SecantFailure(format!(
            "Duhamel truncation horizon too short: tail {tail:.3e} vs integral {integral:.3e}"
        )));
    }
    Ok(g)
}

/// Tunes the e_2 coefficient alpha of the datum phi + alpha e_2 + eta so that
/// the asymptotic w2 amplitude vanishes, then verifies the faster decay rate
/// 2 nu_3 / (q-1) against the generic (untuned) rate.
pub fn well_prepared_search(cfg: &ExperimentConfig) -> Result<WellPreparedReport> {
    let lab = Lab::new(cfg)?;
    let floor = noise_floor(&lab, cfg)?;
    let funcs = &lab.funcs;
    let q = funcs.q();
    let nu2 = lab.spec.nu(2);
    let nu3 = lab.spec.nu(3);
    let mu2 = lab.spec.mu(2);
    let lambda0 = lab.lambda0();
    let faster_rate = 2.0 * nu3 / (q - 1.0);
    let ext_tol = cfg.extinction_tol.min(RATE_NORM_TOL);

    if cfg.delta <= 0.0 {
        return Err(Error::InvalidArgument(
            "the E_2-orthogonal component must be nontrivial".into(),
        ));
    }
    // eta in E_2^perp, mixing two stable modes so the quadratic interactions
    // genuinely feed the e_2 channel (a pure e_3 datum has a symmetry-forced
    // root at alpha = 0); its e_2 part is removed explicitly
    let inv_sqrt2 = 0.5f64.sqrt();
    let mut eta = lab
        .spec
        .eigenfunction(3)
        .scaled(cfg.delta * inv_sqrt2)
        .add_scaled(cfg.delta * inv_sqrt2, lab.spec.eigenfunction(4));
    let c2 = lab.spec.coefficient(2, &eta);
    eta = eta.add_scaled(-c2, lab.spec.eigenfunction(2));

    // secant on g(alpha); dg/dalpha ~ (q-1)/mu_2 seeds the second iterate
    let g_scale = (q - 1.0) / mu2;
    let g_tol = 1e-5 * g_scale * cfg.delta;
    let mut a0 = 0.25 * cfg.epsilon;
    let mut g0 = duhamel_coefficient(&lab, cfg, &eta, a0, ext_tol)?;
    let mut a1 = a0 - g0 / g_scale;
    let mut g1 = duhamel_coefficient(&lab, cfg, &eta, a1, ext_tol)?;
    let mut iters = 2;
    while g1.abs() > g_tol {
        if iters >= 30 {
            return Err(Error::SecantFailure(format!(
                "no root after {iters} evaluations; |g| = {:.3e} vs tol {g_tol:.3e}",
                g1.abs()
            )));
        }
        if (g1 - g0).abs() <= f64::MIN_POSITIVE {
            return Err(Error::SecantFailure("flat secant".into()));
        }
        let a2 = a1 - g1 * (a1 - a0) / (g1 - g0);
        a0 = a1;
        g0 = g1;
        a1 = a2;
        g1 = duhamel_coefficient(&lab, cfg, &eta, a1, ext_tol)?;
        iters += 1;
    }
    let alpha_root = a1;

    // long runs: tuned datum vs a generic one
    let fit_slope = |alpha: f64, rate_guess: f64| -> Result<f64> {
        let u0 = lab
            .phi
            .field()
            .add_scaled(alpha, lab.spec.eigenfunction(2))
            .add_scaled(1.0, &eta);
        let v0 = normalize_phase(funcs, &u0, ext_tol, &ext_opts(cfg))?;
        let s_horizon = (3.0f64.ln() + 4.0 * 10.0f64.ln()) / rate_guess;
        // keep enough records inside the fit window whatever the decay rate
        let window = FIT_DECADES * 10f64.ln() / rate_guess;
        let stride = ((window / 40.0 / cfg.ds).round() as usize).clamp(1, cfg.record_stride);
        let opts = EvolveOptions { record_stride: stride, ..Default::default() };
        let traj = evolve_rescaled(funcs, &v0, s_horizon, cfg.ds, &lab.phi, &lab.spec, &opts)?;
        let jphi = funcs.energy_j(lab.phi.field());
        let s = traj.s_values();
        let dist = traj.series(|r| r.dist_h10);
        let jgap = traj.series(|r| r.energy_j - jphi);
        // fit over three decades below onset: keeps well clear of both the
        // leftover generic mode and the noise floor
        let onset = s
            .iter()
            .zip(&dist)
            .find(|(_, &d)| d < cfg.onset_frac * dist[0])
            .map(|(&si, _)| si)
            .ok_or_else(|| Error::FitInconclusive("transient never ended".into()))?;
        let jgap_onset = s
            .iter()
            .zip(&jgap)
            .find(|(&si, _)| si >= onset)
            .map(|(_, &j)| j)
            .unwrap();
        let hi_level = (jgap_onset * 10f64.powf(-FIT_DECADES)).max(cfg.floor_mult * floor.jgap);
        let s_hi = s
            .iter()
            .zip(&jgap)
            .find(|&(&si, &j)| si > onset && j <= hi_level)
            .map(|(&si, _)| si)
            .unwrap_or(*s.last().unwrap());
        Ok(rate_fit(&s, &jgap, onset, s_hi)?.slope)
    };
    let prepared_slope = fit_slope(alpha_root, faster_rate)?;
    let generic_slope = fit_slope(cfg.epsilon, lambda0)?;

    let mut failures = Vec::new();
    push_check(
        &mut failures,
        -prepared_slope >= faster_rate * 0.95,
        format!("prepared slope {prepared_slope:.6} vs faster rate {faster_rate:.6}"),
    );
    push_check(
        &mut failures,
        -prepared_slope >= 1.2 * (-generic_slope),
        format!("prepared slope {prepared_slope:.6} not 1.2x generic {generic_slope:.6}"),
    );
    push_check(
        &mut failures,
        prepared_slope / generic_slope >= (nu3 / nu2) * 0.95,
        format!(
            "slope ratio {:.4} below spectral-gap ratio {:.4}",
            prepared_slope / generic_slope,
            nu3 / nu2
        ),
    );
    push_check(
        &mut failures,
        (-generic_slope - lambda0).abs() <= 0.05 * lambda0,
        format!("generic slope {generic_slope:.6} strayed from -lambda0 {:.6}", -lambda0),
    );
    let pass = failures.is_empty();
    Ok(WellPreparedReport {
        nu2,
        nu3,
        alpha_root,
        g_at_root: g1,
        secant_iters: iters,
        prepared_slope,
        generic_slope,
        faster_rate,
        failures,
        pass,
    })
}

// ---------------------------------------------------------------------------
// extinction studies
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ExtinctionReport {
    pub q: f64,
    pub t_star_profile: f64,
    pub t_star_doubled: f64,
    pub doubled_expected: f64,
    /// worst (estimate - lower bound) / lower bound over the random data;
    /// negative numbers are violations
    pub worst_bound_margin: f64,
    pub random_trials: usize,
    pub exponent: f64,
    pub exponent_expected: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Random smooth Dirichlet datum: a few low modes with seeded coefficients.
fn random_datum(g: GridSpec, rng: &mut ChaCha8Rng) -> Field {
    let l = g.length();
    let coeffs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = Field::from_fn(g, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x / l).sin())
            .sum()
    });
    if f.max_abs() == 0.0 {
        Field::from_fn(g, |x| (std::f64::consts::PI * x / l).sin())
    } else {
        f.scaled(1.0 / f.h10_norm())
    }
}

/// Fits the blow-down exponent of ||u(t)||_{H10} against (t_* - t) for a
/// generic datum of the original flow; returns (fitted, 1/(q-2)).
pub fn extinction_exponent_fit(lab: &Lab, cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let funcs = &lab.funcs;
    let q = funcs.q();
    let phi = lab.phi.field();
    let opts = ext_opts(cfg);
    let bump = Field::from_fn(*funcs.grid(), |x| {
        (2.0 * std::f64::consts::PI * x / funcs.grid().length()).sin()
    });
    let u0 = phi.scaled(1.3).add_scaled(0.1 * phi.max_abs(), &bump);
    let t_star = estimate_extinction_time(funcs, &u0, 1e-4, &opts)?;
    let dt = 2e-4 * t_star;
    let mut u = u0;
    let mut t = 0.0;
    let mut gaps = Vec::new();
    let mut norms = Vec::new();
    while t < t_star * 0.985 {
        u = step_original(funcs, &u, dt)?;
        t += dt;
        let gap = t_star - t;
        if gap >= 0.02 * t_star && gap <= 0.3 * t_star {
            gaps.push(gap.ln());
            norms.push(u.h10_norm().ln());
        }
    }
    let (exponent, _, _) = linear_fit(&gaps, &norms)?;
    Ok((exponent, 1.0 / (q - 2.0)))
}

pub fn extinction_experiment(cfg: &ExperimentConfig) -> Result<ExtinctionReport> {
    let lab = Lab::new(cfg)?;
    let funcs = &lab.funcs;
    let q = funcs.q();
    let phi = lab.phi.field();
    let opts = ext_opts(cfg);
    let mut failures = Vec::new();

    let t_star_profile = estimate_extinction_time(funcs, phi, 1e-4_f64.min(cfg.extinction_tol), &opts)?;
    push_check(
        &mut failures,
        (t_star_profile - 1.0).abs() <= 1e-3,
        format!("t_*(profile) = {t_star_profile:.6}"),
    );
    let doubled_expected = 2f64.powf(q - 2.0);
    let t_star_doubled =
        estimate_extinction_time(funcs, &phi.scaled(2.0), 1e-4_f64.min(cfg.extinction_tol), &opts)?;
    push_check(
        &mut failures,
        (t_star_doubled - doubled_expected).abs() <= 2e-3 * doubled_expected,
        format!("t_*(2 profile) = {t_star_doubled:.6} vs {doubled_expected:.6}"),
    );

    // variational lower bound on random data
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let random_trials = 20;
    let mut worst_bound_margin = f64::INFINITY;
    let rand_tol = 5e-3;
    for _ in 0..random_trials {
        let u0 = random_datum(*funcs.grid(), &mut rng);
        let bound = funcs.lambda_q() * u0.lp_norm(q)?.powf(q) / u0.h10_inner(&u0);
        let t = estimate_extinction_time(funcs, &u0, rand_tol, &opts)?;
        worst_bound_margin = worst_bound_margin.min((t - bound) / bound);
    }
    push_check(
        &mut failures,
        worst_bound_margin >= -2.0 * rand_tol,
        format!("variational lower bound violated: margin {worst_bound_margin:.3e}"),
    );

    let (exponent, exponent_expected) = extinction_exponent_fit(&lab, cfg)?;
    push_check(
        &mut failures,
        (exponent - exponent_expected).abs() <= 0.05 * exponent_expected,
        format!("extinction exponent {exponent:.4} vs {exponent_expected:.4}"),
    );

    let pass = failures.is_empty();
    Ok(ExtinctionReport {
        q,
        t_star_profile,
        t_star_doubled,
        doubled_expected,
        worst_bound_margin,
        random_trials,
        exponent,
        exponent_expected,
        failures,
        pass,
    })
}

// ---------------------------------------------------------------------------
// spectrum-level checks packaged as an experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ParsevalReport {
    pub trials: usize,
    pub worst_rel_err: f64,
    pub pass: bool,
}

/// Dual Parseval identity: the weighted dual norm squared equals
/// sum_j beta_j^2 mu_j over the full discrete basis.
pub fn parseval_check(lab: &Lab, trials: usize, seed: u64) -> Result<ParsevalReport> {
    let funcs = &lab.funcs;
    let g = *funcs.grid();
    let full = weighted_spectrum(&g, funcs.q(), lab.phi.field(), g.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel_err: f64 = 0.0;
    for _ in 0..trials {
        let f = DualField::from(Field::new(
            g,
            (0..g.n()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )?);
        let direct = funcs.hs_prime_norm(&f, lab.phi.field())?.powi(2);
        let mut sum = 0.0;
        for j in 1..=g.n() {
            let beta = full.dual_coefficient(j, &f);
            sum += beta * beta * full.mu(j);
        }
        worst_rel_err = worst_rel_err.max((sum - direct).abs() / direct);
    }
    Ok(ParsevalReport { trials, worst_rel_err, pass: worst_rel_err <= 1e-8 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(q: f64, n: usize) -> ExperimentConfig {
        ExperimentConfig { q, n, ..Default::default() }
    }

    #[test]
    fn taylor_exponent_reaches_the_order() {
        for &q in &[2.5f64, 3.0] {
            let rep = taylor_check(&small_cfg(q, 120)).unwrap();
            assert!(rep.pass, "q={q}: exponent {} < {}", rep.exponent, rep.required);
        }
    }

    #[test]
    fn taylor_zero_direction_has_zero_remainder() {
        let cfg = small_cfg(3.0, 80);
        let lab = Lab::new(&cfg).unwrap();
        let jphi = lab.funcs.energy_j(lab.phi.field());
        let xi = Field::zeros(*lab.grid());
        let lin = lab.funcs.grad_j(lab.phi.field()).pairing(&xi);
        let quad = lab.funcs.linearized_apply(lab.phi.field(), &xi).pairing(&xi);
        let rem = (lab.funcs.energy_j(&lab.phi.field().add_scaled(0.1, &xi)) - jphi
            - 0.1 * lin
            - 0.005 * quad)
            .abs();
        assert_eq!(rem, 0.0);
    }

    #[test]
    fn rate_slopes_match_the_spectrum() {
        let cfg = small_cfg(3.0, 120);
        let (lab, floor, run) = rate_experiment(&cfg).unwrap();
        assert!(run.report.pass, "failures: {:?}", run.report.failures);
        assert!(!run.report.inconclusive);
        let jfit = run.report.jgap_fit.unwrap();
        assert!((jfit.slope + lab.lambda0()).abs() <= 0.03 * lab.lambda0());

        // downstream consumers of the same trajectory
        let gr = gradient_ratio_track(&lab, &run.traj, &floor, &cfg).unwrap();
        assert!(gr.pass, "gradient ratio failures: {:?}", gr.failures);
    }

    #[test]
    fn eigenvalues_track_the_trajectory() {
        let cfg = small_cfg(3.0, 120);
        let et = eigen_track_experiment(&cfg).unwrap();
        assert!(et.pass, "eigen tracking failures: {:?}", et.failures);
    }

    #[test]
    fn stationary_datum_is_inconclusive() {
        let mut cfg = small_cfg(3.0, 80);
        cfg.epsilon = 0.0;
        let (_, _, run) = rate_experiment(&cfg).unwrap();
        assert!(run.report.inconclusive);
        assert!(run.report.jgap_fit.is_none());
        assert!(run.report.pass, "inconclusive is the expected outcome at epsilon = 0");
    }

    #[test]
    fn w2_linear_regime() {
        let cfg = small_cfg(3.0, 120);
        let rep = w2_ode_check(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(rep.exp_rel_err <= 0.02);
    }

    #[test]
    fn parseval_identity_holds() {
        let cfg = small_cfg(3.0, 100);
        let lab = Lab::new(&cfg).unwrap();
        let rep = parseval_check(&lab, 5, 7).unwrap();
        assert!(rep.pass, "worst rel err {}", rep.worst_rel_err);
    }

    #[test]
    fn extinction_exponent_small_grid() {
        let mut cfg = small_cfg(3.0, 100);
        cfg.seed = 11;
        let rep = extinction_experiment(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
    }

    #[test]
    fn well_prepared_beats_generic() {
        let cfg = small_cfg(3.0, 100);
        let rep = well_prepared_search(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(-rep.prepared_slope > -rep.generic_slope);
    }
}
