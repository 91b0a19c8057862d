//! DFRC secrecy maximization under a radar constraint, by two routes:
//! a Dinkelbach fractional-programming loop over SDP subproblems with
//! Gaussian randomization, and a lower-complexity penalty-based Riemannian
//! conjugate-gradient alternating optimization.
//!
//! Both alternate between the transmit beamformer `w` on the unit sphere and
//! the RIS phase vector `q` on the oblique manifold. The radar requirement
//! is either the echo SNR at the transmitter or (for the robust studies) the
//! illumination power at the target.

use crate::channels::ChannelSet;
use crate::manifold::{rcg_minimize, ManifoldKind, RcgOptions};
use crate::metrics::{
    self, dfrc_radar_snr, dfrc_rates, hermitian_part, re_trace, DfrcDesign, LiftedForms,
    NoisePowers,
};
use crate::sdp::{
    self, gaussian_randomization, recover_q, Projection, SdpOptions, SdpStatus,
};
use crate::{C64, CMat, CRow, CVec, RVec};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DfrcError {
    #[error("radar detection constraint unsatisfiable")]
    RadarInfeasible,
    #[error("sdp failure: {0}")]
    Sdp(#[from] sdp::SdpError),
}

/// Penalty formulation constants.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyParams {
    /// Penalty factor on the radar constraint violation.
    pub zeta: f64,
    /// Smoothing width of the soft-plus approximation to max(0, .).
    pub eps1: f64,
    /// Radar SNR threshold, linear.
    pub gamma: f64,
}

impl PenaltyParams {
    pub fn new(gamma: f64) -> Self {
        Self {
            zeta: 0.2,
            eps1: 0.3,
            gamma,
        }
    }
}

/// Which radar requirement constrains the design.
#[derive(Debug, Clone, Copy)]
pub enum RadarConstraint {
    /// Echo SNR at the transmitter at least `gamma` (linear).
    EchoSnr { gamma: f64 },
    /// Illumination power at the target at least `gamma_p` (watts).
    Illumination { gamma_p: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct DfrcOptions {
    /// Outer alternating-optimization relative tolerance.
    pub tol_outer: f64,
    pub max_outer: usize,
    /// Dinkelbach parameter tolerance.
    pub dinkelbach_tol: f64,
    pub dinkelbach_max_iter: usize,
    pub rcg: RcgOptions,
    pub sdp: SdpOptions,
    pub randomization_samples: usize,
}

impl Default for DfrcOptions {
    fn default() -> Self {
        Self {
            tol_outer: 1e-3,
            max_outer: 30,
            dinkelbach_tol: 1e-5,
            dinkelbach_max_iter: 50,
            rcg: RcgOptions::default(),
            sdp: SdpOptions::default(),
            randomization_samples: 100,
        }
    }
}

/// Overflow-safe soft-plus upper bound on max(0, x):
/// `eps1 ln(1 + exp(x / eps1))`.
pub fn smooth_max(x: f64, eps1: f64) -> f64 {
    let t = x / eps1;
    if t > 30.0 {
        x + eps1 * (-t).exp()
    } else if t < -700.0 {
        0.0
    } else {
        eps1 * t.exp().ln_1p()
    }
}

/// Logistic factor of the penalty derivative: `1 / (1 + exp((gamma_a - gamma)/eps1))`.
fn penalty_sigmoid(gamma_a: f64, gamma: f64, eps1: f64) -> f64 {
    let t = (gamma_a - gamma) / eps1;
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Channel matrices of the beamformer subproblem at fixed phases:
/// `M_J = (P / sigma_J^2) h_J^H h_J` and `M_E' = P ||h_E||^2 h_E^H h_E`.
pub struct BeamformerMatrices {
    pub m_b: CMat,
    pub m_e: CMat,
    pub m_e_prime: CMat,
    pub n_sigma_a: f64,
}

impl BeamformerMatrices {
    pub fn new(ch: &ChannelSet, q: &CVec, noise: &NoisePowers, p: f64) -> Self {
        let h_b = ch.effective_bob(q);
        let h_e = ch.effective_eve(q);
        let hb_outer = h_b.adjoint() * &h_b;
        let he_outer = h_e.adjoint() * &h_e;
        Self {
            m_b: &hb_outer * C64::new(p / noise.sigma_b_sq, 0.0),
            m_e: &he_outer * C64::new(p / noise.sigma_e_sq, 0.0),
            m_e_prime: &he_outer * C64::new(p * h_e.norm_squared(), 0.0),
            n_sigma_a: ch.n_antennas() as f64 * noise.sigma_a_sq,
        }
    }
}

/// Penalty objective at a full design point (exact radar SNR):
/// `(1 + P_E/sigma_E^2)/(1 + P_B/sigma_B^2) + zeta smooth_max(gamma - gamma_A)`.
pub fn penalty_objective(
    w: &CVec,
    q: &CVec,
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    pp: &PenaltyParams,
) -> f64 {
    let design = DfrcDesign {
        w: w.clone(),
        q: q.clone(),
    };
    let h_b = ch.effective_bob(q);
    let h_e = ch.effective_eve(q);
    let p_b = p * (&h_b * w)[(0, 0)].norm_sqr();
    let p_e = p * (&h_e * w)[(0, 0)].norm_sqr();
    let gamma_a = dfrc_radar_snr(&design, ch, noise, p);
    (1.0 + p_e / noise.sigma_e_sq) / (1.0 + p_b / noise.sigma_b_sq)
        + pp.zeta * smooth_max(pp.gamma - gamma_a, pp.eps1)
}

/// Beamformer-subproblem cost `f(w)` with exact radar SNR.
pub fn cost_w(w: &CVec, mats: &BeamformerMatrices, pp: &PenaltyParams) -> f64 {
    let quad = |m: &CMat| (w.adjoint() * m * w)[(0, 0)].re;
    let ratio = (1.0 + quad(&mats.m_e)) / (1.0 + quad(&mats.m_b));
    let gamma_a = quad(&mats.m_e_prime) / mats.n_sigma_a;
    ratio + pp.zeta * smooth_max(pp.gamma - gamma_a, pp.eps1)
}

/// Euclidean gradient of the beamformer-subproblem cost.
pub fn egrad_w(w: &CVec, mats: &BeamformerMatrices, pp: &PenaltyParams) -> CVec {
    let quad = |m: &CMat| (w.adjoint() * m * w)[(0, 0)].re;
    let den_b = 1.0 + quad(&mats.m_b);
    let num_e = 1.0 + quad(&mats.m_e);
    let gamma_a = quad(&mats.m_e_prime) / mats.n_sigma_a;
    let sig = penalty_sigmoid(gamma_a, pp.gamma, pp.eps1);
    let term_ratio = &mats.m_e * w / C64::new(den_b, 0.0)
        - &mats.m_b * w * C64::new(num_e / (den_b * den_b), 0.0);
    let term_pen = &mats.m_e_prime * w * C64::new(pp.zeta * sig / mats.n_sigma_a, 0.0);
    (term_ratio - term_pen) * C64::new(2.0, 0.0)
}

/// Quadratic pieces of the phase subproblem (all built from the current
/// beamformer covariance), plus the convexified radar bound state.
pub struct PhaseBound {
    /// F_E / f_E / g_E and F_B / f_B / g_B pieces.
    pub f_b: CMat,
    pub f_b_vec: CVec,
    pub g_b: f64,
    pub f_e: CMat,
    pub f_e_vec: CVec,
    pub g_e: f64,
    /// Affine minorant of `||h_E||^2`: `2 Re(q^H t1_vec) + t1_const`.
    pub t1_vec: CVec,
    pub t1_const: f64,
    /// Affine minorant of `tr(H_E W)`: `2 Re(q^H t2_vec) + t2_const`.
    pub t2_vec: CVec,
    pub t2_const: f64,
    pub p: f64,
    pub n_sigma_a: f64,
    pub sigma_b: f64,
    pub sigma_e: f64,
}

/// Build the convexified radar bound at the expansion point `q0`.
///
/// Both factors of the echo SNR are minorized by affine forms that are tight
/// at `q0`; each factor is clamped at zero so the product remains a valid
/// lower bound everywhere.
pub fn sca_radar_bound_q(
    q0: &CVec,
    ch: &ChannelSet,
    w_cov: &CMat,
    noise: &NoisePowers,
    p: f64,
) -> PhaseBound {
    let lift = LiftedForms::dfrc(ch, w_cov, p);
    // ||h_E||^2 pieces: covariance replaced by the identity
    let eye = CMat::identity(ch.n_antennas(), ch.n_antennas());
    let lift1 = LiftedForms::dfrc(ch, &eye, 1.0);
    let f_e1 = lift1.a_ce.clone();
    let f_e1_vec = lift1.a_ce_vec.clone();
    let g_e1 = lift1.p_bar_ce;

    let t1_vec = f_e1.adjoint() * q0 + &f_e1_vec;
    let t1_const = g_e1 - (q0.adjoint() * &f_e1 * q0)[(0, 0)].re;
    // tr(H_E W) pieces: the communication-side lift at unit scale
    let f_e = lift.a_ce.clone();
    let f_e_vec = lift.a_ce_vec.clone();
    let g_e = lift.p_bar_ce;
    let t2_vec = f_e.adjoint() * q0 + &f_e_vec;
    let t2_const = g_e - (q0.adjoint() * &f_e * q0)[(0, 0)].re;

    PhaseBound {
        f_b: lift.a_cb.clone(),
        f_b_vec: lift.a_cb_vec.clone(),
        g_b: lift.p_bar_cb,
        f_e,
        f_e_vec,
        g_e,
        t1_vec,
        t1_const,
        t2_vec,
        t2_const,
        p,
        n_sigma_a: ch.n_antennas() as f64 * noise.sigma_a_sq,
        sigma_b: noise.sigma_b_sq,
        sigma_e: noise.sigma_e_sq,
    }
}

impl PhaseBound {
    fn affine(v: &CVec, c: f64, q: &CVec) -> f64 {
        2.0 * (q.adjoint() * v)[(0, 0)].re + c
    }

    /// Affine minorant factors at `q` (before clamping).
    pub fn factors(&self, q: &CVec) -> (f64, f64) {
        (
            Self::affine(&self.t1_vec, self.t1_const, q),
            Self::affine(&self.t2_vec, self.t2_const, q),
        )
    }

    /// Lower bound on the radar SNR at `q`.
    pub fn gamma_tilde(&self, q: &CVec) -> f64 {
        let (t1, t2) = self.factors(q);
        self.p * t1.max(0.0) * t2.max(0.0) / self.n_sigma_a
    }

    fn quad(m: &CMat, v: &CVec, c: f64, q: &CVec) -> f64 {
        (q.adjoint() * m * q)[(0, 0)].re + 2.0 * (q.adjoint() * v)[(0, 0)].re + c
    }

    /// Received powers at Bob and Eve as functions of `q`.
    pub fn powers(&self, q: &CVec) -> (f64, f64) {
        (
            self.p * Self::quad(&self.f_b, &self.f_b_vec, self.g_b, q),
            self.p * Self::quad(&self.f_e, &self.f_e_vec, self.g_e, q),
        )
    }

    /// Phase-subproblem cost with the bounded radar SNR.
    pub fn cost_q(&self, q: &CVec, pp: &PenaltyParams) -> f64 {
        let (p_b, p_e) = self.powers(q);
        let ratio = (1.0 + p_e / self.sigma_e).max(1e-300)
            / (1.0 + p_b / self.sigma_b).max(1e-300);
        ratio + pp.zeta * smooth_max(pp.gamma - self.gamma_tilde(q), pp.eps1)
    }

    /// Euclidean gradient of [`Self::cost_q`].
    pub fn egrad_q(&self, q: &CVec, pp: &PenaltyParams) -> CVec {
        let (p_b, p_e) = self.powers(q);
        let g_bk = 1.0 + p_b / self.sigma_b;
        let g_ek = 1.0 + p_e / self.sigma_e;
        let grad_pe = &self.f_e * q + &self.f_e_vec;
        let grad_pb = &self.f_b * q + &self.f_b_vec;
        let ratio_term = grad_pe * C64::new(1.0 / (self.sigma_e * g_bk), 0.0)
            - grad_pb * C64::new(g_ek / (self.sigma_b * g_bk * g_bk), 0.0);
        let (t1, t2) = self.factors(q);
        let sig = penalty_sigmoid(self.gamma_tilde(q), pp.gamma, pp.eps1);
        let mut pen = CVec::zeros(q.len());
        if t1 > 0.0 {
            pen += &self.t2_vec * C64::new(t1, 0.0);
        }
        if t2 > 0.0 {
            pen += &self.t1_vec * C64::new(t2, 0.0);
        }
        let pen_term = pen * C64::new(pp.zeta * sig / self.n_sigma_a, 0.0);
        (ratio_term - pen_term * C64::new(1.0 / self.p, 0.0)) * C64::new(2.0 * self.p, 0.0)
    }
}

/// Trace of one alternating-optimization run.
#[derive(Debug, Clone)]
pub struct DfrcTrace {
    /// Clamped secrecy rate after each outer iteration (starting point first).
    pub c_s: Vec<f64>,
    /// Penalty/AO objective after each outer iteration, where applicable.
    pub objective: Vec<f64>,
    pub gamma_a: f64,
    /// max(0, gamma - gamma_A) at the returned design.
    pub penalty_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DfrcOutcome {
    pub design: DfrcDesign,
    pub feasible: bool,
    pub trace: DfrcTrace,
}

/// Beamformer matched to Bob's effective channel at phases `q`.
fn matched_to_bob(ch: &ChannelSet, q: &CVec) -> CVec {
    let h_b = ch.effective_bob(q);
    let mut w = h_b.adjoint();
    let nw = w.norm();
    if nw > 1e-12 {
        w /= C64::new(nw, 0.0);
    } else {
        w = CVec::from_element(ch.n_antennas(), C64::new(1.0, 0.0))
            / C64::new((ch.n_antennas() as f64).sqrt(), 0.0);
    }
    w
}

/// Phases aligning the RIS-cascade contribution with Bob's direct path.
fn bob_aligned_phases(ch: &ChannelSet) -> CVec {
    let m = ch.n_ris();
    let core = &ch.h_ai * &ch.h_ab;
    CVec::from_fn(m, |i, _| {
        let c = ch.h_ib[i].conj() * core[i];
        if c.norm() < 1e-300 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, -c.arg())
        }
    })
}

/// Phases pushing the RIS-cascade contribution against Eve's direct path.
fn eve_anti_aligned_phases(ch: &ChannelSet) -> CVec {
    let m = ch.n_ris();
    let core = &ch.h_ai * &ch.h_ae;
    CVec::from_fn(m, |i, _| {
        let c = ch.h_ie[i].conj() * core[i];
        if c.norm() < 1e-300 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, std::f64::consts::PI - c.arg())
        }
    })
}

/// Alternating optimization escapes poor joint optima from a small set of
/// deterministic channel-derived starting points; each run keeps its start's
/// trace and the best feasible outcome wins.
fn starting_points(ch: &ChannelSet) -> Vec<(CVec, CVec)> {
    let m = ch.n_ris();
    let ones = CVec::from_element(m, C64::new(1.0, 0.0));
    let aligned = bob_aligned_phases(ch);
    let anti = eve_anti_aligned_phases(ch);
    let mut starts = vec![
        (matched_to_bob(ch, &ones), ones.clone()),
        (matched_to_bob(ch, &aligned), aligned),
        (matched_to_bob(ch, &anti), anti),
    ];
    // Eve-orthogonal start when it exists
    let h_b = ch.effective_bob(&ones);
    let h_e = ch.effective_eve(&ones);
    let he2 = h_e.norm_squared();
    if he2 > 0.0 {
        let mut v = h_b.adjoint();
        let inner = (&h_e * &v)[(0, 0)];
        v -= h_e.adjoint() * (inner / C64::new(he2, 0.0));
        let nv = v.norm();
        if nv > 1e-9 {
            starts.push((v / C64::new(nv, 0.0), ones));
        }
    }
    starts
}

fn better_outcome(a: Option<DfrcOutcome>, b: DfrcOutcome) -> Option<DfrcOutcome> {
    match a {
        None => Some(b),
        Some(a) => {
            let cs = |o: &DfrcOutcome| *o.trace.c_s.last().unwrap_or(&0.0);
            let pick_b = match (a.feasible, b.feasible) {
                (true, false) => false,
                (false, true) => true,
                _ => cs(&b) > cs(&a),
            };
            Some(if pick_b { b } else { a })
        }
    }
}

/// Penalty-based RCG alternating optimization. Runs each starting point of
/// [`starting_points`] and returns the best feasible outcome.
pub fn run_dfrc_rcg(
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    gamma: f64,
    opts: &DfrcOptions,
) -> DfrcOutcome {
    let mut best = None;
    for (w0, q0) in starting_points(ch) {
        let out = run_dfrc_rcg_from(ch, noise, p, gamma, opts, &w0, &q0);
        best = better_outcome(best, out);
    }
    best.expect("at least one starting point")
}

/// One RCG AO run from a given starting point.
pub fn run_dfrc_rcg_from(
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    gamma: f64,
    opts: &DfrcOptions,
    w0: &CVec,
    q0: &CVec,
) -> DfrcOutcome {
    let pp = PenaltyParams::new(gamma);
    let m = ch.n_ris();
    let mut q = q0.clone();
    let mut w = w0.clone();

    let mut f_cur = penalty_objective(&w, &q, ch, noise, p, &pp);
    let mut trace = DfrcTrace {
        c_s: vec![dfrc_rates(&DfrcDesign { w: w.clone(), q: q.clone() }, ch, noise, p).c_s],
        objective: vec![f_cur],
        gamma_a: 0.0,
        penalty_residual: 0.0,
        iterations: 0,
    };

    for iter in 0..opts.max_outer {
        // beamformer subproblem with exact radar SNR
        let mats = BeamformerMatrices::new(ch, &q, noise, p);
        let (w_new, _) = rcg_minimize(
            ManifoldKind::Sphere,
            |x| cost_w(x, &mats, &pp),
            |x| egrad_w(x, &mats, &pp),
            &w,
            &opts.rcg,
        );
        w = w_new;

        // phase subproblem: refresh the radar bound at the incumbent phases
        let w_cov = &w * w.adjoint();
        if m > 0 {
            let bound = sca_radar_bound_q(&q, ch, &w_cov, noise, p);
            let (q_new, _) = rcg_minimize(
                ManifoldKind::Oblique,
                |x| bound.cost_q(x, &pp),
                |x| bound.egrad_q(x, &pp),
                &q,
                &opts.rcg,
            );
            q = q_new;
        }

        let f_new = penalty_objective(&w, &q, ch, noise, p, &pp);
        let design = DfrcDesign { w: w.clone(), q: q.clone() };
        trace.c_s.push(dfrc_rates(&design, ch, noise, p).c_s);
        trace.objective.push(f_new);
        trace.iterations = iter + 1;
        let rel = (f_new - f_cur).abs() / f_cur.abs().max(1e-12);
        f_cur = f_new;
        if rel <= opts.tol_outer {
            break;
        }
    }
    let design = DfrcDesign { w, q };
    let gamma_a = dfrc_radar_snr(&design, ch, noise, p);
    DfrcOutcome {
        feasible: gamma_a >= gamma * (1.0 - 1e-3),
        trace: DfrcTrace {
            gamma_a,
            penalty_residual: (gamma - gamma_a).max(0.0),
            ..trace
        },
        design,
    }
}

fn radar_w_constraint(
    radar: RadarConstraint,
    mats: &BeamformerMatrices,
    p: f64,
    h_e: &CRow,
) -> (CMat, f64) {
    match radar {
        RadarConstraint::EchoSnr { gamma } => {
            (mats.m_e_prime.clone(), gamma * mats.n_sigma_a)
        }
        RadarConstraint::Illumination { gamma_p } => {
            (h_e.adjoint() * h_e * C64::new(p, 0.0), gamma_p)
        }
    }
}

/// Beamformer step of the Dinkelbach-method AO: iterate the parameterized
/// SDP until the fractional parameter converges, then recover a unit-norm
/// beamformer by randomization. Returns the relaxed covariance, the
/// beamformer, and the Dinkelbach parameter trajectory.
pub fn dinkelbach_w<R: Rng + ?Sized>(
    ch: &ChannelSet,
    q: &CVec,
    noise: &NoisePowers,
    p: f64,
    radar: RadarConstraint,
    opts: &DfrcOptions,
    rng: &mut R,
) -> Result<(CMat, CVec, Vec<f64>), DfrcError> {
    let n = ch.n_antennas();
    let mats = BeamformerMatrices::new(ch, q, noise, p);
    let h_e = ch.effective_eve(q);
    let (radar_mat, radar_rhs) = radar_w_constraint(radar, &mats, p, &h_e);

    let ratio_of = |w_cov: &CMat| -> f64 {
        (1.0 + re_trace(&mats.m_b, w_cov)) / (1.0 + re_trace(&mats.m_e, w_cov))
    };
    let mut mu = 1.0;
    let mut w_cov = CMat::identity(n, n) / C64::new(n as f64, 0.0);
    let mut mus = Vec::new();
    for _ in 0..opts.dinkelbach_max_iter {
        let objective = &mats.m_b - &mats.m_e * C64::new(mu, 0.0);
        let mut prob = sdp::SdpProblem::new(n, 0);
        prob.set_objective(objective, RVec::zeros(0));
        prob.add_eq_x(CMat::identity(n, n), 1.0);
        prob.add_ineq_x(radar_mat.clone(), radar_rhs);
        let sol = sdp::solve(&prob, &opts.sdp)?;
        match sol.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => return Err(DfrcError::RadarInfeasible),
            SdpStatus::MaxIter => break,
        }
        w_cov = hermitian_part(&sol.x);
        let mu_new = ratio_of(&w_cov);
        mus.push(mu_new);
        if (mu_new - mu).abs() <= opts.dinkelbach_tol {
            break;
        }
        mu = mu_new;
    }

    let feasible = |w: &CVec| -> bool {
        let w_r1 = w * w.adjoint();
        re_trace(&radar_mat, &w_r1) >= radar_rhs * (1.0 - 1e-6)
    };
    let score = |w: &CVec| -> f64 {
        let w_r1 = w * w.adjoint();
        ratio_of(&w_r1)
    };
    let w = gaussian_randomization(
        &w_cov,
        opts.randomization_samples,
        Projection::UnitNorm,
        feasible,
        score,
        rng,
    )
    .map_err(|_| DfrcError::RadarInfeasible)?;
    Ok((w_cov, w, mus))
}

/// Phase step of the Dinkelbach-method AO over the lifted phase matrix.
/// The convexified radar half-space is re-anchored at each accepted phase
/// vector for a few passes. Returns the relaxed lift and the recovered
/// phases (incumbent kept when no candidate improves).
pub fn dinkelbach_q<R: Rng + ?Sized>(
    ch: &ChannelSet,
    w: &CVec,
    q_incumbent: &CVec,
    noise: &NoisePowers,
    p: f64,
    radar: RadarConstraint,
    opts: &DfrcOptions,
    rng: &mut R,
) -> Result<(CMat, CVec), DfrcError> {
    let mut q = q_incumbent.clone();
    let mut u_rel = metrics::lift_u_mat(&q);
    for _ in 0..4 {
        let (u_new, q_new) = dinkelbach_q_pass(ch, w, &q, noise, p, radar, opts, rng)?;
        u_rel = u_new;
        let moved = (&q_new - &q).norm();
        q = q_new;
        if moved <= 1e-7 {
            break;
        }
    }
    Ok((u_rel, q))
}

#[allow(clippy::too_many_arguments)]
fn dinkelbach_q_pass<R: Rng + ?Sized>(
    ch: &ChannelSet,
    w: &CVec,
    q_incumbent: &CVec,
    noise: &NoisePowers,
    p: f64,
    radar: RadarConstraint,
    opts: &DfrcOptions,
    rng: &mut R,
) -> Result<(CMat, CVec), DfrcError> {
    let m = ch.n_ris();
    let dim = m + 1;
    let n = ch.n_antennas();
    let w_cov = w * w.adjoint();
    let lift = LiftedForms::dfrc(ch, &w_cov, p);
    let r_b = lift.r_cb.clone();
    let r_e = lift.r_ce.clone();
    let s_e = lift.s_e(n, noise.sigma_a_sq);

    // radar constraint, linear in the lifted variable
    let u0 = metrics::lift_u_mat(q_incumbent);
    let (radar_mat, radar_rhs) = match radar {
        RadarConstraint::EchoSnr { gamma } => {
            // half-space tangent to the SNR quadratic at the incumbent lift
            let ubar0 = metrics::vec_col(&u0);
            let v = &s_e * &ubar0;
            let mut vmat = CMat::zeros(dim, dim);
            for (idx, val) in v.iter().enumerate() {
                let (i, j) = (idx % dim, idx / dim);
                vmat[(i, j)] = *val;
            }
            let a_lin = hermitian_part(&(vmat.adjoint() * C64::new(2.0, 0.0)));
            let rhs = gamma + (ubar0.adjoint() * &v)[(0, 0)].re;
            (a_lin, rhs)
        }
        RadarConstraint::Illumination { gamma_p } => (r_e.clone(), gamma_p),
    };

    let ratio_of = |u: &CMat| -> f64 {
        (1.0 + re_trace(&r_b, u) / noise.sigma_b_sq)
            / (1.0 + re_trace(&r_e, u) / noise.sigma_e_sq)
    };
    let mut mu = ratio_of(&u0);
    let mut u_rel = u0.clone();
    for _ in 0..opts.dinkelbach_max_iter {
        let objective =
            &r_b * C64::new(1.0 / noise.sigma_b_sq, 0.0) - &r_e * C64::new(mu / noise.sigma_e_sq, 0.0);
        let mut prob = sdp::SdpProblem::new(dim, 0);
        prob.set_objective(objective, RVec::zeros(0));
        for i in 0..dim {
            let mut e = CMat::zeros(dim, dim);
            e[(i, i)] = C64::new(1.0, 0.0);
            prob.add_eq_x(e, 1.0);
        }
        prob.add_ineq_x(radar_mat.clone(), radar_rhs);
        let sol = sdp::solve(&prob, &opts.sdp)?;
        match sol.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => return Err(DfrcError::RadarInfeasible),
            SdpStatus::MaxIter => break,
        }
        u_rel = hermitian_part(&sol.x);
        let mu_new = ratio_of(&u_rel);
        if (mu_new - mu).abs() <= opts.dinkelbach_tol {
            break;
        }
        mu = mu_new;
    }

    // feasibility through the convexified half-space, which implies the
    // exact radar constraint at any lifted point
    let feasible = |u: &CVec| -> bool {
        let q = recover_q(u);
        let u_mat = metrics::lift_u_mat(&q);
        re_trace(&radar_mat, &u_mat) >= radar_rhs * (1.0 - 1e-6)
    };
    let score = |u: &CVec| -> f64 {
        let q = recover_q(u);
        ratio_of(&metrics::lift_u_mat(&q))
    };
    match gaussian_randomization(
        &u_rel,
        opts.randomization_samples,
        Projection::UnitModulus,
        feasible,
        score,
        rng,
    ) {
        Ok(u) => {
            let q = recover_q(&u);
            if score(&metrics::lift_u(&q)) > score(&metrics::lift_u(q_incumbent)) {
                Ok((u_rel, q))
            } else {
                Ok((u_rel, q_incumbent.clone()))
            }
        }
        Err(_) => Ok((u_rel, q_incumbent.clone())),
    }
}

/// Dinkelbach-method alternating optimization. Runs each starting point of
/// [`starting_points`] and returns the best feasible outcome; the radar
/// constraint is reported infeasible only when every start fails.
pub fn run_dfrc_dinkelbach<R: Rng + ?Sized>(
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    radar: RadarConstraint,
    opts: &DfrcOptions,
    rng: &mut R,
) -> Result<DfrcOutcome, DfrcError> {
    let mut best = None;
    let mut last_err = None;
    for (w0, q0) in starting_points(ch) {
        match run_dfrc_dinkelbach_from(ch, noise, p, radar, opts, &w0, &q0, rng) {
            Ok(out) => best = better_outcome(best, out),
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(out) => Ok(out),
        None => Err(last_err.unwrap_or(DfrcError::RadarInfeasible)),
    }
}

/// One Dinkelbach AO run from a given starting point.
#[allow(clippy::too_many_arguments)]
pub fn run_dfrc_dinkelbach_from<R: Rng + ?Sized>(
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    radar: RadarConstraint,
    opts: &DfrcOptions,
    w0: &CVec,
    q0: &CVec,
    rng: &mut R,
) -> Result<DfrcOutcome, DfrcError> {
    let m = ch.n_ris();
    let mut q = q0.clone();
    let mut w = w0.clone();

    let rates_of = |w: &CVec, q: &CVec| {
        dfrc_rates(&DfrcDesign { w: w.clone(), q: q.clone() }, ch, noise, p)
    };
    let radar_ok = |w: &CVec, q: &CVec| -> bool {
        let d = DfrcDesign { w: w.clone(), q: q.clone() };
        let (value, threshold) = match radar {
            RadarConstraint::EchoSnr { gamma } => (dfrc_radar_snr(&d, ch, noise, p), gamma),
            RadarConstraint::Illumination { gamma_p } => {
                let h_e = ch.effective_eve(q);
                (p * (&h_e * w)[(0, 0)].norm_sqr(), gamma_p)
            }
        };
        value >= threshold * (1.0 - 1e-3)
    };
    let mut cs_cur = rates_of(&w, &q).c_s_unclamped;
    let mut trace = DfrcTrace {
        c_s: vec![cs_cur.max(0.0)],
        objective: Vec::new(),
        gamma_a: 0.0,
        penalty_residual: 0.0,
        iterations: 0,
    };

    for iter in 0..opts.max_outer {
        // once the iterate is radar-feasible the secrecy rate never drops;
        // an infeasible iterate always accepts the block's feasible output
        let (_, w_new, _) = dinkelbach_w(ch, &q, noise, p, radar, opts, rng)?;
        if !radar_ok(&w, &q) || rates_of(&w_new, &q).c_s_unclamped >= cs_cur {
            w = w_new;
        }
        if m > 0 {
            let (_, q_new) = dinkelbach_q(ch, &w, &q, noise, p, radar, opts, rng)?;
            if rates_of(&w, &q_new).c_s_unclamped >= rates_of(&w, &q).c_s_unclamped {
                q = q_new;
            }
        }
        let cs_new = rates_of(&w, &q).c_s_unclamped;
        trace.c_s.push(cs_new.max(0.0));
        trace.iterations = iter + 1;
        let rel = (cs_new - cs_cur).abs() / cs_cur.abs().max(1e-12);
        cs_cur = cs_new;
        if rel <= opts.tol_outer {
            break;
        }
    }
    let design = DfrcDesign { w, q };
    let gamma_a = match radar {
        RadarConstraint::EchoSnr { .. } => dfrc_radar_snr(&design, ch, noise, p),
        RadarConstraint::Illumination { .. } => {
            let h_e = ch.effective_eve(&design.q);
            p * (&h_e * &design.w)[(0, 0)].norm_sqr()
        }
    };
    let threshold = match radar {
        RadarConstraint::EchoSnr { gamma } => gamma,
        RadarConstraint::Illumination { gamma_p } => gamma_p,
    };
    Ok(DfrcOutcome {
        feasible: gamma_a >= threshold * (1.0 - 1e-3),
        trace: DfrcTrace {
            gamma_a,
            penalty_residual: (threshold - gamma_a).max(0.0),
            ..trace
        },
        design,
    })
}
