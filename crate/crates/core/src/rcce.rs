//! ZF-based block coordinate descent for the RCCE system: maximize the
//! secrecy rate over the power split, communication beamformer, radar
//! covariance and RIS phases under the radar SINR constraint.
//!
//! Blocks per outer iteration: closed-form ZF beamformer, radar covariance
//! via successive convexification solved as linear SDPs with a feasible line
//! search, RIS phases via semidefinite relaxation plus Gaussian
//! randomization, and a one-dimensional power-split search. Every block
//! keeps the incumbent when it cannot improve the secrecy rate, so the
//! outer trace is monotone.

use crate::channels::ChannelSet;
use crate::metrics::{
    self, hermitian_part, lift_quadratics, lift_u, re_trace, rcce_radar_sinr, rcce_rates,
    NoisePowers, RcceDesign,
};
use crate::sdp::{
    self, gaussian_randomization, recover_q, Projection, QuadConstraint, SdpOptions, SdpStatus,
};
use crate::{C64, CMat, CRow, CVec, RVec};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RcceError {
    #[error("effective channels degenerate: zero-forcing projection vanished")]
    DegenerateChannel,
    #[error("radar detection constraint unsatisfiable")]
    RadarInfeasible,
    #[error("sdp failure: {0}")]
    Sdp(#[from] sdp::SdpError),
}

#[derive(Debug, Clone, Copy)]
pub struct RcceOptions {
    /// Outer relative-change stopping accuracy.
    pub eps_b: f64,
    /// Power-split grid step.
    pub eps_s: f64,
    pub max_outer: usize,
    /// Convexification passes per covariance/phase block.
    pub sca_max_iter: usize,
    /// Stop a block when its objective changes less than this.
    pub sca_tol: f64,
    pub sdp: SdpOptions,
    pub randomization_samples: usize,
}

impl Default for RcceOptions {
    fn default() -> Self {
        Self {
            eps_b: 1e-3,
            eps_s: 0.01,
            max_outer: 50,
            sca_max_iter: 20,
            sca_tol: 1e-4,
            sdp: SdpOptions::default(),
            randomization_samples: 100,
        }
    }
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    MonotoneSafeguard,
    RadarInfeasible,
}

/// Per-iteration record of the BCD loop.
#[derive(Debug, Clone)]
pub struct BcdTrace {
    /// Clamped secrecy rate after each outer iteration (starting point first).
    pub c_s: Vec<f64>,
    /// Per-block wall times (w, R, Q, eps) in milliseconds per iteration.
    pub block_ms: Vec<[f64; 4]>,
    /// `|h_E w| / ||h_E||` right after each beamformer update.
    pub zf_residual: Vec<f64>,
    pub reason: StopReason,
}

#[derive(Debug, Clone)]
pub struct RcceOutcome {
    pub design: RcceDesign,
    pub feasible: bool,
    pub trace: BcdTrace,
}

/// Zero-forcing beamformer `(I - H_E/||h_E||^2) h_B^H`, normalized.
pub fn zf_beamformer(h_b: &CRow, h_e: &CRow) -> Result<CVec, RcceError> {
    let n = h_b.len();
    let mut v = h_b.adjoint();
    let he2 = h_e.norm_squared();
    if he2 > 0.0 {
        let inner = (h_e * &v)[(0, 0)];
        v -= h_e.adjoint() * (inner / C64::new(he2, 0.0));
    }
    let norm = v.norm();
    if norm < 1e-10 {
        return Err(RcceError::DegenerateChannel);
    }
    let _ = n;
    Ok(v / C64::new(norm, 0.0))
}

/// Feasible starting covariance: identity deflated against the Bob channel.
pub fn deflated_identity(n: usize, h_b: &CRow) -> CMat {
    let mut r = CMat::identity(n, n);
    let hb2 = h_b.norm_squared();
    if hb2 > 0.0 {
        let proj = CMat::identity(n, n) - h_b.adjoint() * h_b / C64::new(hb2, 0.0);
        r = &proj * r * &proj;
    }
    let tr: C64 = r.diagonal().sum();
    if tr.re.abs() < 1e-12 {
        CMat::identity(n, n) / C64::new(n as f64, 0.0)
    } else {
        r / tr
    }
}

/// Maximize a scalar function on [0, 1] by coarse sampling plus golden
/// refinement around the best sample. Returns (argmax, value).
fn line_search_max(f: impl Fn(f64) -> f64, coarse: usize, refine: usize) -> (f64, f64) {
    let mut best_t = 0.0;
    let mut best_v = f(0.0);
    for k in 1..=coarse {
        let t = k as f64 / coarse as f64;
        let v = f(t);
        if v > best_v {
            best_v = v;
            best_t = t;
        }
    }
    let mut lo = (best_t - 1.0 / coarse as f64).max(0.0);
    let mut hi = (best_t + 1.0 / coarse as f64).min(1.0);
    let phi = 0.5 * (3.0 - 5f64.sqrt());
    for _ in 0..refine {
        let t1 = lo + phi * (hi - lo);
        let t2 = hi - phi * (hi - lo);
        if f(t1) >= f(t2) {
            hi = t2;
        } else {
            lo = t1;
        }
    }
    let t = 0.5 * (lo + hi);
    let v = f(t);
    if v >= best_v {
        (t, v)
    } else {
        (best_t, best_v)
    }
}

/// Fixed-(w, q, eps) state used by the covariance step.
struct CovarianceContext {
    hb_mat: CMat,
    he_mat: CMat,
    tr_hb_w: f64,
    tr_he_w: f64,
    eps: f64,
    p: f64,
    sigma_b: f64,
    sigma_e: f64,
    radar_rhs: f64,
    radar_mat: CMat,
}

impl CovarianceContext {
    fn new(
        eps: f64,
        w: &CVec,
        q: &CVec,
        ch: &ChannelSet,
        noise: &NoisePowers,
        p: f64,
        gamma: f64,
    ) -> Self {
        let h_b = ch.effective_bob(q);
        let h_e = ch.effective_eve(q);
        let hb_mat = h_b.adjoint() * &h_b;
        let he_mat = h_e.adjoint() * &h_e;
        let w_cov = w * w.adjoint();
        let tr_hb_w = re_trace(&hb_mat, &w_cov);
        let tr_he_w = re_trace(&he_mat, &w_cov);
        let he2 = h_e.norm_squared();
        let n = ch.n_antennas() as f64;
        // (1-eps) P ||h_E||^2 tr(H_E R) >= gamma (eps P ||h_E||^2 |h_E w|^2 + N sigma_A^2)
        let radar_mat = &he_mat * C64::new((1.0 - eps) * p * he2, 0.0);
        let radar_rhs = gamma
            * (eps * p * he2 * (&h_e * w)[(0, 0)].norm_sqr() + n * noise.sigma_a_sq);
        Self {
            hb_mat,
            he_mat,
            tr_hb_w,
            tr_he_w,
            eps,
            p,
            sigma_b: noise.sigma_b_sq,
            sigma_e: noise.sigma_e_sq,
            radar_rhs,
            radar_mat,
        }
    }

    /// Secrecy rate as a function of the covariance, all other blocks fixed.
    fn objective(&self, r: &CMat) -> f64 {
        let x_b = (1.0 - self.eps) * re_trace(&self.hb_mat, r) + self.sigma_b / self.p;
        let x_e = (1.0 - self.eps) * re_trace(&self.he_mat, r) + self.sigma_e / self.p;
        let f1 = (x_b + self.eps * self.tr_hb_w).max(1e-300).log2();
        let f2 = x_b.max(1e-300).log2();
        let f3 = (x_e + self.eps * self.tr_he_w).max(1e-300).log2();
        let f4 = x_e.max(1e-300).log2();
        f1 - f2 - f3 + f4
    }

    /// Euclidean gradient of the objective at `r`.
    fn gradient(&self, r: &CMat) -> CMat {
        let log2e = std::f64::consts::LOG2_E;
        let c = (1.0 - self.eps) * log2e;
        let x_b = (1.0 - self.eps) * re_trace(&self.hb_mat, r) + self.sigma_b / self.p;
        let x_e = (1.0 - self.eps) * re_trace(&self.he_mat, r) + self.sigma_e / self.p;
        let g_b = c / (x_b + self.eps * self.tr_hb_w).max(1e-300) - c / x_b.max(1e-300);
        let g_e = -c / (x_e + self.eps * self.tr_he_w).max(1e-300) + c / x_e.max(1e-300);
        &self.hb_mat * C64::new(g_b, 0.0) + &self.he_mat * C64::new(g_e, 0.0)
    }

    fn is_feasible(&self, r: &CMat) -> bool {
        let tr: C64 = r.diagonal().sum();
        (tr.re - 1.0).abs() <= 1e-6
            && re_trace(&self.hb_mat, r).abs() <= 1e-6 * (1.0 + self.hb_mat.norm())
            && re_trace(&self.radar_mat, r) >= self.radar_rhs * (1.0 - 1e-6) - 1e-30
    }
}

/// Radar covariance step: convexify the rate difference at the incumbent and
/// iterate linear SDPs with a feasible-segment line search.
pub fn optimize_radar_covariance(
    eps: f64,
    w: &CVec,
    q: &CVec,
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    gamma: f64,
    r_init: &CMat,
    opts: &RcceOptions,
) -> Result<CMat, RcceError> {
    let n = ch.n_antennas();
    let ctx = CovarianceContext::new(eps, w, q, ch, noise, p, gamma);
    let mut r_cur = r_init.clone();
    let mut obj_cur = ctx.objective(&r_cur);
    let mut incumbent_feasible = ctx.is_feasible(&r_cur);

    for _ in 0..opts.sca_max_iter {
        let grad = ctx.gradient(&r_cur);
        let mut prob = sdp::SdpProblem::new(n, 0);
        prob.set_objective(grad, RVec::zeros(0));
        prob.add_eq_x(CMat::identity(n, n), 1.0);
        prob.add_eq_x(ctx.hb_mat.clone(), 0.0);
        prob.add_ineq_x(ctx.radar_mat.clone(), ctx.radar_rhs);
        let sol = sdp::solve(&prob, &opts.sdp)?;
        match sol.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => return Err(RcceError::RadarInfeasible),
            SdpStatus::MaxIter => break,
        }
        let r_new = hermitian_part(&sol.x);
        if !incumbent_feasible {
            // jump to the feasible SDP solution and continue from there
            r_cur = r_new;
            obj_cur = ctx.objective(&r_cur);
            incumbent_feasible = true;
            continue;
        }
        let seg = |t: f64| -> CMat { &r_cur + (&r_new - &r_cur) * C64::new(t, 0.0) };
        let (t, obj_new) = line_search_max(|t| ctx.objective(&seg(t)), 16, 40);
        if obj_new <= obj_cur + opts.sca_tol {
            if obj_new > obj_cur {
                r_cur = seg(t);
            }
            break;
        }
        r_cur = seg(t);
        obj_cur = obj_new;
    }
    Ok(r_cur)
}

/// RIS phase step: semidefinite relaxation of the lifted secrecy surrogate
/// with the convexified radar constraint, then Gaussian randomization.
/// Returns the incumbent when no candidate improves the secrecy rate.
#[allow(clippy::too_many_arguments)]
pub fn optimize_ris_phases_rcce<R: Rng + ?Sized>(
    eps: f64,
    w: &CVec,
    r_cov: &CMat,
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    gamma: f64,
    q_incumbent: &CVec,
    opts: &RcceOptions,
    rng: &mut R,
) -> CVec {
    let m = ch.n_ris();
    let n = ch.n_antennas();
    let w_cov = w * w.adjoint();
    let lift = lift_quadratics(ch, &w_cov, r_cov, eps, p);
    let k = lift.radar_k(gamma, n, noise.sigma_a_sq);
    let (kp_factor, km) = psd_factor_and_nsd(&k);

    let dim = m + 1;
    let sigma_b = noise.sigma_b_sq;
    let sigma_e = noise.sigma_e_sq;
    // lifted secrecy objective over U
    let objective = |u: &CMat| -> f64 {
        let f5 = (re_trace(&(&lift.r_cb + &lift.r_rb), u) + sigma_b).max(1e-300).log2();
        let f6 = (re_trace(&lift.r_rb, u) + sigma_b).max(1e-300).log2();
        let f7 = (re_trace(&(&lift.r_ce + &lift.r_re), u) + sigma_e).max(1e-300).log2();
        let f8 = (re_trace(&lift.r_re, u) + sigma_e).max(1e-300).log2();
        f5 - f6 - f7 + f8
    };

    let mut u_cur = metrics::lift_u_mat(q_incumbent);
    let mut obj_cur = objective(&u_cur);

    for _ in 0..opts.sca_max_iter {
        // gradient of the lifted objective at the incumbent
        let log2e = std::f64::consts::LOG2_E;
        let d5 = (re_trace(&(&lift.r_cb + &lift.r_rb), &u_cur) + sigma_b).max(1e-300);
        let d6 = (re_trace(&lift.r_rb, &u_cur) + sigma_b).max(1e-300);
        let d7 = (re_trace(&(&lift.r_ce + &lift.r_re), &u_cur) + sigma_e).max(1e-300);
        let d8 = (re_trace(&lift.r_re, &u_cur) + sigma_e).max(1e-300);
        let grad = (&lift.r_cb + &lift.r_rb) * C64::new(log2e / d5, 0.0)
            - &lift.r_rb * C64::new(log2e / d6, 0.0)
            - (&lift.r_ce + &lift.r_re) * C64::new(log2e / d7, 0.0)
            + &lift.r_re * C64::new(log2e / d8, 0.0);

        // convexified radar constraint at the incumbent lift
        let ut0 = stack_one_vec(&u_cur);
        let v = &km * &ut0;
        let quad = radar_quad_constraint(&kp_factor, &v, &ut0, dim);

        let mut prob = sdp::SdpProblem::new(dim, 0);
        prob.set_objective(grad, RVec::zeros(0));
        for i in 0..dim {
            let mut e = CMat::zeros(dim, dim);
            e[(i, i)] = C64::new(1.0, 0.0);
            prob.add_eq_x(e, 1.0);
        }
        prob.add_quad(quad);
        let Ok(sol) = sdp::solve(&prob, &opts.sdp) else {
            break;
        };
        if sol.status != SdpStatus::Optimal {
            break;
        }
        let u_new = hermitian_part(&sol.x);
        let seg = |t: f64| -> CMat { &u_cur + (&u_new - &u_cur) * C64::new(t, 0.0) };
        let (t, obj_new) = line_search_max(|t| objective(&seg(t)), 16, 40);
        if obj_new <= obj_cur + opts.sca_tol {
            if obj_new > obj_cur {
                u_cur = seg(t);
            }
            break;
        }
        u_cur = seg(t);
        obj_cur = obj_new;
    }

    // rank-one recovery with exact-SINR feasibility
    let design_with = |q: &CVec| RcceDesign {
        epsilon: eps,
        w: w.clone(),
        r: r_cov.clone(),
        q: q.clone(),
    };
    let feasible = |u: &CVec| {
        let q = recover_q(u);
        rcce_radar_sinr(&design_with(&q), ch, noise, p) >= gamma * (1.0 - 1e-6)
    };
    let score = |u: &CVec| {
        let q = recover_q(u);
        rcce_rates(&design_with(&q), ch, noise, p).c_s_unclamped
    };
    let incumbent_score = rcce_rates(&design_with(q_incumbent), ch, noise, p).c_s_unclamped;
    match gaussian_randomization(
        &u_cur,
        opts.randomization_samples,
        Projection::UnitModulus,
        feasible,
        score,
        rng,
    ) {
        Ok(u) => {
            let q = recover_q(&u);
            if score(&lift_u(&q)) > incumbent_score {
                q
            } else {
                q_incumbent.clone()
            }
        }
        Err(_) => q_incumbent.clone(),
    }
}

/// `[1; vec(U)]` as a complex vector.
fn stack_one_vec(u: &CMat) -> CVec {
    let v = metrics::vec_col(u);
    let mut out = CVec::zeros(v.len() + 1);
    out[0] = C64::new(1.0, 0.0);
    for (i, x) in v.iter().enumerate() {
        out[i + 1] = *x;
    }
    out
}

/// PSD factor of the nonnegative eigenspace plus the NSD remainder of a
/// Hermitian kernel.
fn psd_factor_and_nsd(k: &CMat) -> (CMat, CMat) {
    let eig = hermitian_part(k).symmetric_eigen();
    let n = k.nrows();
    let pos: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    let mut factor = CMat::zeros(n, pos.len());
    for (col, &i) in pos.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        for row in 0..n {
            factor[(row, col)] = eig.eigenvectors[(row, i)] * C64::new(s, 0.0);
        }
    }
    let mut nsd = CMat::zeros(n, n);
    for i in 0..n {
        let lam = eig.eigenvalues[i];
        if lam < 0.0 {
            let v = eig.eigenvectors.column(i);
            nsd += &v * v.adjoint() * C64::new(lam, 0.0);
        }
    }
    (factor, nsd)
}

/// Quadratic constraint for the convexified radar bound:
/// `u~^H K+ u~ + 2 Re(v^H u~) - u~0^H v <= 0` with `v = K- u~0`.
fn radar_quad_constraint(kp_factor: &CMat, v: &CVec, ut0: &CVec, dim: usize) -> QuadConstraint {
    // linear term 2 Re(v^H u~) = 2 Re(conj(v_0)) + Re tr(A U)
    let mut vmat = CMat::zeros(dim, dim);
    for (idx, val) in v.iter().skip(1).enumerate() {
        let (i, j) = (idx % dim, idx / dim);
        vmat[(i, j)] = *val;
    }
    let a_lin = hermitian_part(&(vmat.adjoint() * C64::new(2.0, 0.0)));
    let const_part = 2.0 * v[0].re - (ut0.adjoint() * v)[(0, 0)].re;
    QuadConstraint {
        factor: kp_factor.clone(),
        lin_x: a_lin,
        lin_aux: RVec::zeros(0),
        offset: const_part,
    }
}

/// One-dimensional power-split search over the grid
/// `{eps_s, 2 eps_s, ..., 1 - eps_s}` subject to the radar constraint.
pub fn optimize_power_split(
    w: &CVec,
    r_cov: &CMat,
    q: &CVec,
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    gamma: f64,
    eps_s: f64,
) -> Result<f64, RcceError> {
    let h_b = ch.effective_bob(q);
    let h_e = ch.effective_eve(q);
    let hbw = (&h_b * w)[(0, 0)].norm_sqr();
    let hew = (&h_e * w)[(0, 0)].norm_sqr();
    let hbr = metrics::quad_form(&h_b, r_cov);
    let her = metrics::quad_form(&h_e, r_cov);
    let he2 = h_e.norm_squared();
    let n = ch.n_antennas() as f64;

    let c_s = |eps: f64| -> f64 {
        let cb = (1.0 + eps * p * hbw / ((1.0 - eps) * p * hbr + noise.sigma_b_sq)).log2();
        let ce = (1.0 + eps * p * hew / ((1.0 - eps) * p * her + noise.sigma_e_sq)).log2();
        cb - ce
    };
    let sinr = |eps: f64| -> f64 {
        (1.0 - eps) * p * he2 * her / (eps * p * he2 * hew + n * noise.sigma_a_sq)
    };

    let steps = (1.0 / eps_s).round() as usize;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..steps {
        let eps = k as f64 * eps_s;
        if sinr(eps) < gamma * (1.0 - 1e-6) {
            continue;
        }
        let v = c_s(eps);
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((eps, v));
        }
    }
    best.map(|(e, _)| e).ok_or(RcceError::RadarInfeasible)
}

/// Algorithm: alternate ZF beamformer, radar covariance, RIS phases and the
/// power split until the secrecy rate converges.
pub fn run_rcce_bcd<R: Rng + ?Sized>(
    ch: &ChannelSet,
    noise: &NoisePowers,
    p: f64,
    gamma: f64,
    opts: &RcceOptions,
    rng: &mut R,
) -> Result<RcceOutcome, RcceError> {
    let n = ch.n_antennas();
    let m = ch.n_ris();
    let q0 = CVec::from_element(m, C64::new(1.0, 0.0));
    let h_b0 = ch.effective_bob(&q0);
    let h_e0 = ch.effective_eve(&q0);
    let w0 = zf_beamformer(&h_b0, &h_e0)?;
    let mut design = RcceDesign {
        epsilon: opts.eps_s,
        w: w0,
        r: deflated_identity(n, &h_b0),
        q: q0,
    };
    let mut trace = BcdTrace {
        c_s: vec![rcce_rates(&design, ch, noise, p).c_s],
        block_ms: Vec::new(),
        zf_residual: Vec::new(),
        reason: StopReason::MaxIterations,
    };

    let mut prev_cs = trace.c_s[0];
    for _ in 0..opts.max_outer {
        let saved = design.clone();
        let mut times = [0.0f64; 4];

        let t0 = std::time::Instant::now();
        let h_b = ch.effective_bob(&design.q);
        let h_e = ch.effective_eve(&design.q);
        design.w = zf_beamformer(&h_b, &h_e)?;
        trace
            .zf_residual
            .push((&h_e * &design.w)[(0, 0)].norm() / h_e.norm().max(1e-300));
        times[0] = t0.elapsed().as_secs_f64() * 1e3;

        let t0 = std::time::Instant::now();
        let r_step = optimize_radar_covariance(
            design.epsilon,
            &design.w,
            &design.q,
            ch,
            noise,
            p,
            gamma,
            &design.r,
            opts,
        );
        times[1] = t0.elapsed().as_secs_f64() * 1e3;
        match r_step {
            Ok(r) => design.r = r,
            Err(RcceError::RadarInfeasible) => {
                trace.reason = StopReason::RadarInfeasible;
                trace.block_ms.push(times);
                return Ok(RcceOutcome {
                    design: saved,
                    feasible: false,
                    trace,
                });
            }
            Err(e) => return Err(e),
        }

        let t0 = std::time::Instant::now();
        design.q = optimize_ris_phases_rcce(
            design.epsilon,
            &design.w,
            &design.r,
            ch,
            noise,
            p,
            gamma,
            &design.q,
            opts,
            rng,
        );
        times[2] = t0.elapsed().as_secs_f64() * 1e3;

        let t0 = std::time::Instant::now();
        match optimize_power_split(
            &design.w,
            &design.r,
            &design.q,
            ch,
            noise,
            p,
            gamma,
            opts.eps_s,
        ) {
            Ok(eps) => design.epsilon = eps,
            Err(RcceError::RadarInfeasible) => {
                trace.reason = StopReason::RadarInfeasible;
                trace.block_ms.push(times);
                return Ok(RcceOutcome {
                    design: saved,
                    feasible: false,
                    trace,
                });
            }
            Err(e) => return Err(e),
        }
        times[3] = t0.elapsed().as_secs_f64() * 1e3;
        trace.block_ms.push(times);

        let cs = rcce_rates(&design, ch, noise, p).c_s;
        if cs + 1e-9 < prev_cs {
            // revert and stop: the whole-iteration update did not improve
            design = saved;
            trace.reason = StopReason::MonotoneSafeguard;
            break;
        }
        trace.c_s.push(cs);
        let rel = (cs - prev_cs).abs() / prev_cs.abs().max(1e-12);
        if rel <= opts.eps_b {
            trace.reason = StopReason::Converged;
            prev_cs = cs;
            break;
        }
        prev_cs = cs;
    }
    let _ = prev_cs;
    Ok(RcceOutcome {
        design,
        feasible: true,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{complex_gaussian_matrix, complex_gaussian_vector, ChannelSet};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn noise() -> NoisePowers {
        NoisePowers {
            sigma_b_sq: 1e-3,
            sigma_e_sq: 1e-3,
            sigma_a_sq: 1e-5,
        }
    }

    fn random_channels(n: usize, m: usize, r: &mut ChaCha8Rng) -> ChannelSet {
        ChannelSet::new(
            complex_gaussian_matrix(m, n, r),
            complex_gaussian_vector(n, r),
            complex_gaussian_vector(n, r),
            complex_gaussian_vector(m, r),
            complex_gaussian_vector(m, r),
        )
        .unwrap()
    }

    fn row(v: Vec<C64>) -> CRow {
        CRow::from_row_slice(&v)
    }

    #[test]
    fn zf_simple_coordinates() {
        let h_e = row(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let h_b = row(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let w = zf_beamformer(&h_b, &h_e).unwrap();
        assert!(w[0].norm() < 1e-12);
        assert_relative_eq!(w[1].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zf_orthogonal_channels_identity() {
        let h_e = row(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let h_b = row(vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0)]);
        let w = zf_beamformer(&h_b, &h_e).unwrap();
        // projector acts as identity: w = h_b^H / ||h_b||
        assert_relative_eq!((&h_b * &w)[(0, 0)].norm(), h_b.norm(), epsilon = 1e-12);
    }

    #[test]
    fn zf_parallel_channels_degenerate() {
        let h_e = row(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let h_b = row(vec![C64::new(2.0, 0.0), C64::new(4.0, 0.0)]);
        assert!(matches!(
            zf_beamformer(&h_b, &h_e),
            Err(RcceError::DegenerateChannel)
        ));
    }

    #[test]
    fn zf_nulls_eavesdropper_on_random_channels() {
        let mut r = rng(1);
        for _ in 0..20 {
            let ch = random_channels(4, 3, &mut r);
            let q = CVec::from_element(3, C64::new(1.0, 0.0));
            let h_b = ch.effective_bob(&q);
            let h_e = ch.effective_eve(&q);
            let w = zf_beamformer(&h_b, &h_e).unwrap();
            assert!((&h_e * &w)[(0, 0)].norm() <= 1e-9 * h_e.norm());
            assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn covariance_step_obeys_constraints() {
        let mut r = rng(2);
        for _ in 0..5 {
            let ch = random_channels(3, 2, &mut r);
            let q = CVec::from_element(2, C64::new(1.0, 0.0));
            let h_b = ch.effective_bob(&q);
            let h_e = ch.effective_eve(&q);
            let w = zf_beamformer(&h_b, &h_e).unwrap();
            let eps = 0.5;
            let p = 1.0;
            // pick an achievable SINR threshold
            let r0 = deflated_identity(3, &h_b);
            let d0 = RcceDesign {
                epsilon: eps,
                w: w.clone(),
                r: r0.clone(),
                q: q.clone(),
            };
            let gamma = 0.5 * rcce_radar_sinr(&d0, &ch, &noise(), p);
            let opts = RcceOptions::default();
            let r_opt =
                optimize_radar_covariance(eps, &w, &q, &ch, &noise(), p, gamma, &r0, &opts)
                    .unwrap();
            // constraints: Hermitian PSD, unit trace, Bob-null, radar SINR
            let tr: C64 = r_opt.diagonal().sum();
            assert_relative_eq!(tr.re, 1.0, epsilon = 1e-6);
            let hb_mat = h_b.adjoint() * &h_b;
            assert!(re_trace(&hb_mat, &r_opt).abs() <= 1e-6 * (1.0 + hb_mat.norm()));
            let d = RcceDesign {
                epsilon: eps,
                w: w.clone(),
                r: r_opt.clone(),
                q: q.clone(),
            };
            assert!(rcce_radar_sinr(&d, &ch, &noise(), p) >= gamma * (1.0 - 1e-5));
            let min_eig = hermitian_part(&r_opt)
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-6);
        }
    }

    #[test]
    fn covariance_step_n2_feasible_set_is_singleton() {
        // with tr(H_B R) = 0 and N = 2, the only unit-trace PSD covariance is
        // the projector onto the direction orthogonal to h_B^H
        let mut r = rng(3);
        let ch = random_channels(2, 2, &mut r);
        let q = CVec::from_element(2, C64::new(1.0, 0.0));
        let h_b = ch.effective_bob(&q);
        let h_e = ch.effective_eve(&q);
        let w = zf_beamformer(&h_b, &h_e).unwrap();
        let r0 = deflated_identity(2, &h_b);
        let opts = RcceOptions::default();
        let r_opt =
            optimize_radar_covariance(0.5, &w, &q, &ch, &noise(), 1.0, 0.0, &r0, &opts).unwrap();
        // expected: v v^H with h_b . v = 0
        let mut v = CVec::from_vec(vec![-h_b[1], h_b[0]]);
        v /= C64::new(v.norm(), 0.0);
        let expected = &v * v.adjoint();
        assert!((r_opt - expected).norm() < 1e-5);
    }

    #[test]
    fn covariance_step_matches_restricted_grid_oracle() {
        // N = 3: parametrize feasible covariances on the 2-dimensional
        // orthocomplement of h_B^H and grid over the spectral parameters
        let mut r = rng(4);
        let mut failures = 0;
        for _ in 0..8 {
            let ch = random_channels(3, 2, &mut r);
            let q = CVec::from_element(2, C64::new(1.0, 0.0));
            let h_b = ch.effective_bob(&q);
            let h_e = ch.effective_eve(&q);
            let w = zf_beamformer(&h_b, &h_e).unwrap();
            let eps = 0.4;
            let p = 1.0;
            let r0 = deflated_identity(3, &h_b);
            let d0 = RcceDesign {
                epsilon: eps,
                w: w.clone(),
                r: r0.clone(),
                q: q.clone(),
            };
            let gamma = 0.3 * rcce_radar_sinr(&d0, &ch, &noise(), p);
            let opts = RcceOptions::default();
            let r_opt =
                optimize_radar_covariance(eps, &w, &q, &ch, &noise(), p, gamma, &r0, &opts)
                    .unwrap();
            let ctx = CovarianceContext::new(eps, &w, &q, &ch, &noise(), p, gamma);
            let got = ctx.objective(&r_opt);

            // orthonormal basis of the orthocomplement of h_b^H
            let hb = h_b.adjoint();
            let mut b1 = CVec::from_vec(vec![
                -hb[1].conj(),
                hb[0].conj(),
                C64::new(0.0, 0.0),
            ]);
            b1 /= C64::new(b1.norm(), 0.0);
            let mut b2 = complex_gaussian_vector(3, &mut r);
            let proj = |v: &CVec, u: &CVec| -> CVec { v - u * (u.adjoint() * v)[(0, 0)] };
            b2 = proj(&b2, &(hb.clone() / C64::new(hb.norm(), 0.0)));
            b2 = proj(&b2, &b1);
            b2 /= C64::new(b2.norm(), 0.0);

            let mut best = f64::NEG_INFINITY;
            let steps = 21;
            for a in 0..=steps {
                let rho = a as f64 / steps as f64;
                for bi in 0..=steps {
                    let alpha = std::f64::consts::FRAC_PI_2 * bi as f64 / steps as f64;
                    for ci in 0..steps {
                        let beta = std::f64::consts::TAU * ci as f64 / steps as f64;
                        let v = &b1 * C64::new(alpha.cos(), 0.0)
                            + &b2 * C64::from_polar(alpha.sin(), beta);
                        let vp = &b1 * C64::new(alpha.sin(), 0.0)
                            - &b2 * C64::from_polar(alpha.cos(), -beta);
                        let cand = &v * v.adjoint() * C64::new(rho, 0.0)
                            + &vp * vp.adjoint() * C64::new(1.0 - rho, 0.0);
                        if ctx.is_feasible(&cand) {
                            let val = ctx.objective(&cand);
                            if val > best {
                                best = val;
                            }
                        }
                    }
                }
            }
            if got < best - 0.01 * best.abs().max(0.1) {
                failures += 1;
            }
        }
        assert!(failures == 0, "{failures}/8 instances below the grid oracle");
    }

    #[test]
    fn phase_step_m1_matches_sweep_oracle() {
        let mut r = rng(5);
        for _ in 0..10 {
            let ch = random_channels(2, 1, &mut r);
            let q0 = CVec::from_element(1, C64::new(1.0, 0.0));
            let h_b = ch.effective_bob(&q0);
            let h_e = ch.effective_eve(&q0);
            let w = zf_beamformer(&h_b, &h_e).unwrap();
            let eps = 0.5;
            let p = 1.0;
            let r_cov = deflated_identity(2, &h_b);
            let design = |q: &CVec| RcceDesign {
                epsilon: eps,
                w: w.clone(),
                r: r_cov.clone(),
                q: q.clone(),
            };
            // threshold low enough that a feasible phase exists
            let gamma = 0.2 * rcce_radar_sinr(&design(&q0), &ch, &noise(), p);
            let opts = RcceOptions::default();
            let q = optimize_ris_phases_rcce(
                eps, &w, &r_cov, &ch, &noise(), p, gamma, &q0, &opts, &mut r,
            );
            let got = rcce_rates(&design(&q), &ch, &noise(), p).c_s_unclamped;
            let mut best = f64::NEG_INFINITY;
            for k in 0..3600 {
                let qg = CVec::from_element(
                    1,
                    C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 3600.0),
                );
                if rcce_radar_sinr(&design(&qg), &ch, &noise(), p) >= gamma * (1.0 - 1e-6) {
                    let v = rcce_rates(&design(&qg), &ch, &noise(), p).c_s_unclamped;
                    if v > best {
                        best = v;
                    }
                }
            }
            assert!(
                got >= best - 0.005 * best.abs().max(0.1),
                "sweep {best} vs sdr {got}"
            );
        }
    }

    #[test]
    fn phase_step_never_degrades_secrecy() {
        let mut r = rng(6);
        for _ in 0..5 {
            let ch = random_channels(3, 3, &mut r);
            let q0 = CVec::from_fn(3, |_, _| C64::from_polar(1.0, 1.0));
            let h_b = ch.effective_bob(&q0);
            let h_e = ch.effective_eve(&q0);
            let w = zf_beamformer(&h_b, &h_e).unwrap();
            let r_cov = deflated_identity(3, &h_b);
            let design = |q: &CVec| RcceDesign {
                epsilon: 0.5,
                w: w.clone(),
                r: r_cov.clone(),
                q: q.clone(),
            };
            let gamma = 0.2 * rcce_radar_sinr(&design(&q0), &ch, &noise(), 1.0);
            let opts = RcceOptions::default();
            let before = rcce_rates(&design(&q0), &ch, &noise(), 1.0).c_s_unclamped;
            let q = optimize_ris_phases_rcce(
                0.5, &w, &r_cov, &ch, &noise(), 1.0, gamma, &q0, &opts, &mut r,
            );
            let after = rcce_rates(&design(&q), &ch, &noise(), 1.0).c_s_unclamped;
            assert!(after >= before - 1e-9, "{before} -> {after}");
        }
    }

    #[test]
    fn phase_step_invariant_when_ris_disconnected() {
        let mut r = rng(7);
        let mut ch = random_channels(3, 2, &mut r);
        ch.h_ib = CVec::zeros(2);
        ch.h_ie = CVec::zeros(2);
        let q0 = CVec::from_element(2, C64::new(1.0, 0.0));
        let h_b = ch.effective_bob(&q0);
        let h_e = ch.effective_eve(&q0);
        let w = zf_beamformer(&h_b, &h_e).unwrap();
        let r_cov = deflated_identity(3, &h_b);
        let design = |q: &CVec| RcceDesign {
            epsilon: 0.5,
            w: w.clone(),
            r: r_cov.clone(),
            q: q.clone(),
        };
        let gamma = 0.5 * rcce_radar_sinr(&design(&q0), &ch, &noise(), 1.0);
        let opts = RcceOptions::default();
        let q = optimize_ris_phases_rcce(
            0.5, &w, &r_cov, &ch, &noise(), 1.0, gamma, &q0, &opts, &mut r,
        );
        let a = rcce_rates(&design(&q0), &ch, &noise(), 1.0).c_s;
        let b = rcce_rates(&design(&q), &ch, &noise(), 1.0).c_s;
        assert_relative_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn power_split_boundary_and_binding() {
        let mut r = rng(8);
        let ch = random_channels(3, 2, &mut r);
        let q = CVec::from_element(2, C64::new(1.0, 0.0));
        let h_b = ch.effective_bob(&q);
        let h_e = ch.effective_eve(&q);
        let w = zf_beamformer(&h_b, &h_e).unwrap();
        let r_cov = deflated_identity(3, &h_b);
        // gamma = 0: with ZF (no Eve rate) and Bob-interference-free R,
        // C_s increases in eps -> grid boundary 1 - eps_s
        let eps = optimize_power_split(&w, &r_cov, &q, &ch, &noise(), 1.0, 0.0, 0.01).unwrap();
        assert_relative_eq!(eps, 0.99, epsilon = 1e-12);
        // binding constraint: eps must stay below the feasibility knee
        let d = |e: f64| RcceDesign {
            epsilon: e,
            w: w.clone(),
            r: r_cov.clone(),
            q: q.clone(),
        };
        let gamma = rcce_radar_sinr(&d(0.5), &ch, &noise(), 1.0);
        let eps = optimize_power_split(&w, &r_cov, &q, &ch, &noise(), 1.0, gamma, 0.01).unwrap();
        assert!(eps <= 0.5 + 0.01 + 1e-12, "eps {eps}");
        assert!(rcce_radar_sinr(&d(eps), &ch, &noise(), 1.0) >= gamma * (1.0 - 1e-6));
    }

    #[test]
    fn power_split_agrees_with_finer_grid() {
        let mut r = rng(9);
        for _ in 0..5 {
            let ch = random_channels(3, 2, &mut r);
            let q = CVec::from_element(2, C64::new(1.0, 0.0));
            let h_b = ch.effective_bob(&q);
            let h_e = ch.effective_eve(&q);
            let w = zf_beamformer(&h_b, &h_e).unwrap();
            // generic (non-ZF-clean) covariance so C_s actually varies
            let a = complex_gaussian_matrix(3, 3, &mut r);
            let mut r_cov = &a * a.adjoint();
            let tr: C64 = r_cov.diagonal().sum();
            r_cov /= tr;
            let d = |e: f64| RcceDesign {
                epsilon: e,
                w: w.clone(),
                r: r_cov.clone(),
                q: q.clone(),
            };
            let gamma = 0.3 * rcce_radar_sinr(&d(0.5), &ch, &noise(), 1.0);
            let coarse =
                optimize_power_split(&w, &r_cov, &q, &ch, &noise(), 1.0, gamma, 0.01).unwrap();
            let fine =
                optimize_power_split(&w, &r_cov, &q, &ch, &noise(), 1.0, gamma, 0.001).unwrap();
            assert!((coarse - fine).abs() <= 0.01 + 1e-12, "{coarse} vs {fine}");
        }
    }

    #[test]
    fn power_split_infeasible_when_gamma_huge() {
        let mut r = rng(10);
        let ch = random_channels(2, 2, &mut r);
        let q = CVec::from_element(2, C64::new(1.0, 0.0));
        let h_b = ch.effective_bob(&q);
        let h_e = ch.effective_eve(&q);
        let w = zf_beamformer(&h_b, &h_e).unwrap();
        let r_cov = deflated_identity(2, &h_b);
        let res = optimize_power_split(&w, &r_cov, &q, &ch, &noise(), 1.0, 1e12, 0.01);
        assert!(matches!(res, Err(RcceError::RadarInfeasible)));
    }

    #[test]
    fn bcd_run_feasible_and_monotone() {
        let mut r = rng(11);
        let ch = random_channels(3, 3, &mut r);
        let noise = noise();
        // moderate threshold: achievable at the start
        let q0 = CVec::from_element(3, C64::new(1.0, 0.0));
        let h_b = ch.effective_bob(&q0);
        let d0 = RcceDesign {
            epsilon: 0.01,
            w: zf_beamformer(&h_b, &ch.effective_eve(&q0)).unwrap(),
            r: deflated_identity(3, &h_b),
            q: q0,
        };
        let gamma = 0.3 * rcce_radar_sinr(&d0, &ch, &noise, 1.0);
        let opts = RcceOptions::default();
        let out = run_rcce_bcd(&ch, &noise, 1.0, gamma, &opts, &mut r).unwrap();
        assert!(out.feasible);
        for w2 in out.trace.c_s.windows(2) {
            assert!(w2[1] >= w2[0] - 1e-6, "trace not monotone: {:?}", out.trace.c_s);
        }
        // final design satisfies every constraint
        assert!(metrics::rcce_design_violation(&out.design, 1e-6).is_none());
        assert!(rcce_radar_sinr(&out.design, &ch, &noise, 1.0) >= gamma * (1.0 - 1e-6));
        // zero-forcing held at every beamformer update
        assert!(out.trace.zf_residual.iter().all(|&r| r <= 1e-9));
    }

    #[test]
    fn bcd_reports_infeasible_when_gamma_unachievable() {
        let mut r = rng(12);
        let ch = random_channels(2, 2, &mut r);
        let out = run_rcce_bcd(&ch, &noise(), 1.0, 1e12, &RcceOptions::default(), &mut r).unwrap();
        assert!(!out.feasible);
        assert_eq!(out.trace.reason, StopReason::RadarInfeasible);
    }
}
