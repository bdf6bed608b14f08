//! Backward-Euler time integration of the original and rescaled fast
//! diffusion flows, extinction-time estimation by bisection, and phase-set
//! normalization.

use crate::error::{Error, Result};
use crate::functionals::{signed_power, Functionals};
use crate::grid::{solve_symmetric_tridiag, DualField, Field};
use crate::profiles::Profile;
use crate::spectrum::{operator_norm_l_inverse, weighted_eigenvalues, Spectrum};
use serde::Serialize;

/// Per-step energy dissipation slack.
pub const DISSIPATION_SLACK: f64 = 1e-8;

/// Largest admissible rescaled step: keeps the Newton Jacobian diagonal
/// positive (needs ds < 1/lambda_q) with a factor-2 margin.
pub fn ds_max(q: f64) -> f64 {
    0.5 * (q - 2.0) / (q - 1.0)
}

/// Rescaled-flow state: time s, v, and m = |v|^(q-2) v kept consistent.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub s: f64,
    pub v: Field,
    pub m: Field,
}

impl FlowState {
    pub fn new(funcs: &Functionals, s: f64, v: Field) -> Result<Self> {
        if v.max_abs() == 0.0 {
            return Err(Error::InvalidArgument("state must be nontrivial".into()));
        }
        let m = funcs.m_of(&v);
        Ok(FlowState { s, v, m })
    }
}

/// Diagnostics of one accepted implicit step.
#[derive(Clone, Copy, Debug)]
pub struct StepInfo {
    pub newton_iters: usize,
    /// J(v) - J(v+), nonnegative up to slack
    pub energy_drop: f64,
    /// left side of the discrete energy inequality:
    /// (4(q-1)/q^2) ||(|v+|^((q-2)/2) v+ - |v|^((q-2)/2) v)/ds||_L2^2 * ds
    pub eneq_lhs: f64,
}

fn newton_implicit(
    funcs: &Functionals,
    v_init: &Field,
    m_prev: &Field,
    dt: f64,
    lambda_coeff: f64,
) -> Result<(Field, usize)> {
    let g = *funcs.grid();
    let n = g.n();
    let h2 = g.h() * g.h();
    let q = funcs.q();

    let residual = |v: &Field| -> DualField {
        // (m(v) - m_prev)/dt - Delta v - lambda_coeff m(v)
        let m = funcs.m_of(v);
        let lap = v.neg_laplacian();
        let mut out = lap.as_field();
        for i in 0..n {
            out.values_mut()[i] += (m.values()[i] - m_prev.values()[i]) / dt
                - lambda_coeff * m.values()[i];
        }
        DualField::from(out)
    };

    let mut v = v_init.clone();
    let mut res = residual(&v);
    let mut res_norm = res.hm1_norm();
    let scale = (m_prev.l2_norm() / dt + v.h10_norm()).max(1.0);
    let tol = 1e-12 * scale;
    let mut iters = 0;
    while res_norm > tol {
        if iters >= 50 {
            return Err(Error::NewtonFailure(format!(
                "implicit step stalled at residual {res_norm:.3e} (tol {tol:.3e}); try a smaller step"
            )));
        }
        let mut diag = vec![0.0; n];
        for i in 0..n {
            diag[i] = 2.0 / h2
                + (q - 1.0) * v.values()[i].abs().powf(q - 2.0) * (1.0 / dt - lambda_coeff);
        }
        let off = vec![-1.0 / h2; n - 1];
        let step = solve_symmetric_tridiag(&diag, &off, res.values());
        let delta = Field::new(g, step.iter().map(|x| -x).collect())?;

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = v.add_scaled(alpha, &delta);
            let cand_res = residual(&cand);
            let cand_norm = cand_res.hm1_norm();
            if cand_norm < res_norm {
                v = cand;
                res = cand_res;
                res_norm = cand_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonFailure(format!(
                "no descent direction at residual {res_norm:.3e}"
            )));
        }
        iters += 1;
    }
    Ok((v, iters))
}

/// One backward-Euler step of the rescaled flow
/// d/ds (|v|^(q-2) v) = Delta v + lambda_q |v|^(q-2) v.
pub fn step_rescaled(
    funcs: &Functionals,
    state: &FlowState,
    ds: f64,
) -> Result<(FlowState, StepInfo)> {
    let q = funcs.q();
    if !(ds > 0.0) || ds > ds_max(q) {
        return Err(Error::StepFailure(format!(
            "ds = {ds} outside (0, {}] for q = {q}",
            ds_max(q)
        )));
    }
    let (v_next, newton_iters) =
        newton_implicit(funcs, &state.v, &state.m, ds, funcs.lambda_q())?;

    let j_prev = funcs.energy_j(&state.v);
    let j_next = funcs.energy_j(&v_next);
    let energy_drop = j_prev - j_next;
    if energy_drop < -DISSIPATION_SLACK * (1.0 + j_prev.abs()) {
        return Err(Error::DissipationViolated(format!(
            "J rose by {:.3e} in one step of ds = {ds}",
            -energy_drop
        )));
    }
    // discrete energy inequality in the half-power variable
    let half_prev: Vec<f64> = state
        .v
        .values()
        .iter()
        .map(|&x| signed_power(x, q / 2.0))
        .collect();
    let half_next: Vec<f64> = v_next
        .values()
        .iter()
        .map(|&x| signed_power(x, q / 2.0))
        .collect();
    let h = funcs.grid().h();
    let diff_sq: f64 = half_prev
        .iter()
        .zip(&half_next)
        .map(|(a, b)| {
            let d = (b - a) / ds;
            d * d
        })
        .sum::<f64>()
        * h;
    let eneq_lhs = 4.0 * (q - 1.0) / (q * q) * diff_sq * ds;

    let m = funcs.m_of(&v_next);
    Ok((
        FlowState { s: state.s + ds, v: v_next, m },
        StepInfo { newton_iters, energy_drop, eneq_lhs },
    ))
}

/// One backward-Euler step of the original flow d/dt (|u|^(q-2) u) = Delta u.
pub fn step_original(funcs: &Functionals, u: &Field, dt: f64) -> Result<Field> {
    if !(dt > 0.0) {
        return Err(Error::StepFailure(format!("dt must be positive, got {dt}")));
    }
    if u.max_abs() == 0.0 {
        return Ok(u.clone());
    }
    let m_prev = funcs.m_of(u);
    let (u_next, _) = newton_implicit(funcs, u, &m_prev, dt, 0.0)?;
    Ok(u_next)
}

/// One recorded row of a rescaled trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub s: f64,
    pub energy_j: f64,
    pub entropy_k: f64,
    pub coercive_g: f64,
    pub dist_h10: f64,
    /// ||v - phi||_{L^q}, the natural scale for eigenvalue-drift bounds
    pub dist_lq: f64,
    pub rel_entropy: f64,
    /// ||J'(v)||_{H_s'} with the dynamic weight; None when the zero-set
    /// convention fails along the trajectory.
    pub grad_hs_prime: Option<f64>,
    /// epsilon-regularized dual norm of J'(v), recorded when requested
    pub grad_eps_reg: Option<f64>,
    /// (w(s), e_2)_{H10} with w(s) = (-Delta)^{-1}(|v|^(q-2)v - |phi|^(q-2)phi)
    pub w2: f64,
    /// ((-Delta)^{-1} R(v, phi), e_2)_{H10}, the forcing coefficient of the
    /// w2 mode equation
    pub r2: f64,
    /// leading eigenvalues mu_j^s of the dynamic weighted problem; empty on
    /// records where the spectrum is not sampled
    pub mu_head: Vec<f64>,
    /// ||L_s^{-1}|| on spectral records
    pub linv_norm: Option<f64>,
    pub energy_drop: f64,
    pub eneq_lhs: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub q: f64,
    pub ds: f64,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn series(&self, f: impl Fn(&Record) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.series(|r| r.s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "s,energy_j,entropy_k,coercive_g,dist_h10,dist_lq,rel_entropy,grad_hs_prime,grad_eps_reg,w2,r2,mu1,mu2,mu3,linv_norm,energy_drop,eneq_lhs\n",
        );
        for r in &self.records {
            let fmt_opt = |v: Option<f64>| match v {
                Some(x) => format!("{x:.17e}"),
                None => "nan".to_string(),
            };
            let mu = |i: usize| {
                r.mu_head
                    .get(i)
                    .map(|&x| format!("{x:.17e}"))
                    .unwrap_or_else(|| "nan".to_string())
            };
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{},{},{},{},{:.17e},{:.17e}\n",
                r.s,
                r.energy_j,
                r.entropy_k,
                r.coercive_g,
                r.dist_h10,
                r.dist_lq,
                r.rel_entropy,
                fmt_opt(r.grad_hs_prime),
                fmt_opt(r.grad_eps_reg),
                r.w2,
                r.r2,
                mu(0),
                mu(1),
                mu(2),
                fmt_opt(r.linv_norm),
                r.energy_drop,
                r.eneq_lhs,
            ));
        }
        out
    }
}

/// Controls for trajectory recording.
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    /// steps between records
    pub record_stride: usize,
    /// records between spectral samples (mu_head, ||L_s^{-1}||); 0 disables
    pub spectrum_stride: usize,
    /// number of leading dynamic eigenvalues to record
    pub mu_head: usize,
    /// when set, record the epsilon-regularized dual norm of J'(v)
    pub eps_reg: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { record_stride: 10, spectrum_stride: 0, mu_head: 3, eps_reg: None }
    }
}

/// Integrates the rescaled flow from v0 to horizon S, recording diagnostics
/// relative to the profile `phi` and its spectrum `spec` (which supplies e_2).
pub fn evolve_rescaled(
    funcs: &Functionals,
    v0: &Field,
    s_horizon: f64,
    ds: f64,
    phi: &Profile,
    spec: &Spectrum,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let mut state = FlowState::new(funcs, 0.0, v0.clone())?;
    let m_phi = funcs.m_of(phi.field());
    let steps = (s_horizon / ds).ceil() as usize;
    let mut records = Vec::new();
    let mut last_info = StepInfo { newton_iters: 0, energy_drop: 0.0, eneq_lhs: 0.0 };
    let mut prev_k = f64::INFINITY;

    let record = |state: &FlowState, info: &StepInfo, spectral: bool| -> Result<Record> {
        let v = &state.v;
        let grad = funcs.grad_j(v);
        let grad_hs_prime = funcs.hs_prime_norm(&grad, v).ok();
        let grad_eps_reg = match opts.eps_reg {
            Some(eps) => Some(funcs.eps_reg_norm(&grad, v, eps)?),
            None => None,
        };
        let w_dual = DualField::from(state.m.minus(&m_phi));
        let w = w_dual.solve_poisson();
        let w2 = spec.coefficient(2, &w);
        let r = funcs.residual_r(v, phi.field());
        let r_pot = DualField::from(r).solve_poisson();
        let r2 = spec.coefficient(2, &r_pot);
        let (mu_head, linv_norm) = if spectral {
            let (mus, _) = weighted_eigenvalues(funcs.grid(), funcs.q(), v)?;
            let head = mus.iter().take(opts.mu_head).cloned().collect();
            let linv = operator_norm_l_inverse(funcs.grid(), funcs.q(), v).ok();
            (head, linv)
        } else {
            (Vec::new(), None)
        };
        Ok(Record {
            s: state.s,
            energy_j: funcs.energy_j(v),
            entropy_k: funcs.entropy_k(v),
            coercive_g: funcs.coercive_g(v),
            dist_h10: v.minus(phi.field()).h10_norm(),
            dist_lq: v.minus(phi.field()).lp_norm(funcs.q())?,
            rel_entropy: funcs.relative_entropy(v, phi.field()),
            grad_hs_prime,
            grad_eps_reg,
            w2,
            r2,
            mu_head,
            linv_norm,
            energy_drop: info.energy_drop,
            eneq_lhs: info.eneq_lhs,
        })
    };

    let spectral_due = |rec_idx: usize| opts.spectrum_stride > 0 && rec_idx % opts.spectrum_stride == 0;
    records.push(record(&state, &last_info, spectral_due(0))?);

    for step_idx in 1..=steps {
        let (next, info) = step_rescaled(funcs, &state, ds)?;
        state = next;
        last_info = info;
        if step_idx % opts.record_stride == 0 || step_idx == steps {
            let rec = record(&state, &last_info, spectral_due(records.len()))?;
            // K is a Lyapunov functional as well
            if rec.entropy_k > prev_k + DISSIPATION_SLACK * (1.0 + prev_k.abs()) {
                return Err(Error::DissipationViolated(format!(
                    "entropy K rose from {prev_k:.6e} to {:.6e} at s = {:.4}",
                    rec.entropy_k, rec.s
                )));
            }
            prev_k = rec.entropy_k;
            records.push(rec);
        }
    }
    Ok(Trajectory { q: funcs.q(), ds, records })
}

/// Controls for the extinction-time bisection.
#[derive(Clone, Copy, Debug)]
pub struct ExtinctionOptions {
    pub ds: f64,
    /// probe horizon in rescaled time
    pub s_horizon: f64,
    /// hard cap when a probe stays inside the brackets
    pub s_extend_factor: f64,
}

impl Default for ExtinctionOptions {
    fn default() -> Self {
        ExtinctionOptions { ds: 5e-3, s_horizon: 15.0, s_extend_factor: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProbeOutcome {
    /// the rescaled norm decayed: guess exceeds t_*
    AboveTstar,
    /// the rescaled norm grew: guess is below t_*
    BelowTstar,
    /// neither threshold triggered up to the extended horizon
    OnPhaseSet,
}

fn probe(
    funcs: &Functionals,
    u0: &Field,
    t_guess: f64,
    opts: &ExtinctionOptions,
) -> Result<ProbeOutcome> {
    let q = funcs.q();
    let c = t_guess.powf(-1.0 / (q - 2.0));
    let v0 = u0.scaled(c);
    let norm0 = v0.h10_norm();
    let decay = 0.1 * norm0;
    let growth = 10.0 * norm0;
    let ds = opts.ds.min(ds_max(q) * 0.99);
    let mut state = FlowState::new(funcs, 0.0, v0)?;
    let hard = opts.s_horizon * opts.s_extend_factor;
    while state.s < hard {
        let (next, _) = step_rescaled(funcs, &state, ds)?;
        state = next;
        let norm = state.v.h10_norm();
        if norm <= decay {
            return Ok(ProbeOutcome::AboveTstar);
        }
        if norm >= growth {
            return Ok(ProbeOutcome::BelowTstar);
        }
    }
    Ok(ProbeOutcome::OnPhaseSet)
}

/// Bisection estimate of the extinction time t_*(u0) of the original flow,
/// to relative tolerance `tol`.
pub fn estimate_extinction_time(
    funcs: &Functionals,
    u0: &Field,
    tol: f64,
    opts: &ExtinctionOptions,
) -> Result<f64> {
    if u0.max_abs() == 0.0 {
        return Err(Error::InvalidArgument("u0 must be nontrivial".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tol must lie in (0,1), got {tol}")));
    }
    let q = funcs.q();
    let lambda_q = funcs.lambda_q();
    // the variational lower bound seeds the bracket
    let t_seed = lambda_q * u0.lp_norm(q)?.powf(q) / u0.h10_inner(u0);

    let mut t_lo = t_seed;
    for _ in 0..60 {
        match probe(funcs, u0, t_lo, opts)? {
            ProbeOutcome::BelowTstar => break,
            ProbeOutcome::OnPhaseSet => return Ok(t_lo),
            ProbeOutcome::AboveTstar => t_lo *= 0.5,
        }
    }
    let mut t_hi = t_lo * 2.0;
    loop {
        match probe(funcs, u0, t_hi, opts)? {
            ProbeOutcome::AboveTstar => break,
            ProbeOutcome::OnPhaseSet => return Ok(t_hi),
            ProbeOutcome::BelowTstar => {
                t_hi *= 2.0;
                if t_hi > t_seed * 1e6 {
                    return Err(Error::NonBracketing(format!(
                        "no decay detected up to t = {t_hi:.3e}; extend the probe horizon"
                    )));
                }
            }
        }
    }

    while t_hi - t_lo > tol * 0.5 * (t_hi + t_lo) {
        let mid = 0.5 * (t_lo + t_hi);
        match probe(funcs, u0, mid, opts)? {
            ProbeOutcome::AboveTstar => t_hi = mid,
            ProbeOutcome::BelowTstar => t_lo = mid,
            ProbeOutcome::OnPhaseSet => return Ok(mid),
        }
    }
    Ok(0.5 * (t_lo + t_hi))
}

/// Projects u0 onto the phase set: v0 = t_*(u0)^(-1/(q-2)) u0.
pub fn normalize_phase(
    funcs: &Functionals,
    u0: &Field,
    tol: f64,
    opts: &ExtinctionOptions,
) -> Result<Field> {
    let t_star = estimate_extinction_time(funcs, u0, tol, opts)?;
    Ok(u0.scaled(t_star.powf(-1.0 / (funcs.q() - 2.0))))
}
