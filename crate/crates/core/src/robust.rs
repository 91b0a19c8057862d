//! Worst-case secure design under bounded CSI uncertainty: the eavesdropper
//! channel is known only up to a Frobenius ball around the stacked nominal
//! channel, and the design maximizes a worst-case secrecy surrogate while
//! guaranteeing the radar illumination power over the whole ball.
//!
//! Both semi-infinite constraints become linear matrix inequalities through
//! the S-procedure; block coordinate descent alternates SDPs over the
//! beamformer covariance and the lifted phase matrix, and rank-one designs
//! are recovered by Gaussian randomization with a joint worst-case recheck.
//! A discrete phase-shift quantizer supports the finite-resolution studies.

use crate::channels::{ChannelSet, UncertaintyModel};
use crate::metrics::{hermitian_part, re_trace, NoisePowers};
use crate::sdp::{
    self, gaussian_randomization, recover_q, LmiBlock, Projection, SdpOptions, SdpStatus,
};
use crate::{C64, CMat, CVec, RVec};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("robust radar constraint unsatisfiable")]
    RadarInfeasible,
    #[error("sdp failure: {0}")]
    Sdp(#[from] sdp::SdpError),
}

/// Uniform phase quantizer with `2^bits` levels on [0, 2 pi).
#[derive(Debug, Clone, Copy)]
pub struct QuantizationSpec {
    pub bits: u32,
}

impl QuantizationSpec {
    pub fn levels(&self) -> usize {
        1usize << self.bits
    }

    pub fn step(&self) -> f64 {
        std::f64::consts::TAU / self.levels() as f64
    }
}

/// Map each phase to the circularly nearest quantization level; ties break
/// toward the smaller level.
pub fn quantize_phases(q: &CVec, spec: &QuantizationSpec) -> CVec {
    let step = spec.step();
    let levels = spec.levels();
    CVec::from_fn(q.len(), |i, _| {
        let mut phase = q[i].arg();
        if phase < 0.0 {
            phase += std::f64::consts::TAU;
        }
        let mut best_level = 0.0;
        let mut best_dist = f64::INFINITY;
        for l in 0..levels {
            let level = l as f64 * step;
            let mut d = (phase - level).abs();
            if d > std::f64::consts::PI {
                d = std::f64::consts::TAU - d;
            }
            if d < best_dist - 1e-15 {
                best_dist = d;
                best_level = level;
            }
        }
        C64::from_polar(1.0, best_level)
    })
}

/// Stack the nominal cascaded channel over the nominal direct channel:
/// rows 1..M are `G_bar`, the last row is `h_AE_bar^H`.
pub fn stack_nominal_e(g_bar: &CMat, h_ae_bar: &CVec) -> CMat {
    let (m, n) = g_bar.shape();
    assert_eq!(h_ae_bar.len(), n, "stack dimensions inconsistent");
    let mut e = CMat::zeros(m + 1, n);
    for i in 0..m {
        for j in 0..n {
            e[(i, j)] = g_bar[(i, j)];
        }
    }
    for j in 0..n {
        e[(m, j)] = h_ae_bar[j].conj();
    }
    e
}

/// Stack for Bob's side, `[diag(h_IB^H) H_AI; h_AB^H]`.
pub fn stack_bob(ch: &ChannelSet) -> CMat {
    let g_b = crate::channels::cascaded_channel(&ch.h_ib, &ch.h_ai);
    stack_nominal_e(&g_b, &ch.h_ab)
}

/// Stack for Eve's side from the nominal channels.
pub fn stack_eve(ch: &ChannelSet) -> CMat {
    let g_e = crate::channels::cascaded_channel(&ch.h_ie, &ch.h_ai);
    stack_nominal_e(&g_e, &ch.h_ae)
}

/// `p = vec(Theta E_bar W)` and `c_E = tr(Theta E_bar W E_bar^H)`.
fn lmi_pieces(w_cov: &CMat, theta: &CMat, e_bar: &CMat) -> (CVec, f64) {
    let core = theta * e_bar * w_cov;
    let p = crate::metrics::vec_col(&core);
    let c_e = crate::metrics::illumination_power(theta, w_cov, e_bar);
    (p, c_e)
}

/// Evaluated S-procedure block for the worst-case radar constraint:
/// `[[rho1 I + W^T (x) Theta, p], [p^H, c_E - gamma_p/P - rho1 eps_E^2]]`.
pub fn lmi_radar(
    w_cov: &CMat,
    theta: &CMat,
    e_bar: &CMat,
    eps_e: f64,
    gamma_p_over_p: f64,
    rho1: f64,
) -> CMat {
    let (p, c_e) = lmi_pieces(w_cov, theta, e_bar);
    let kern = crate::metrics::kron(&w_cov.transpose(), theta);
    assemble_corner(
        &(kern + CMat::identity(kern.nrows(), kern.nrows()) * C64::new(rho1, 0.0)),
        &p,
        c_e - gamma_p_over_p - rho1 * eps_e * eps_e,
    )
}

/// Evaluated S-procedure block for the worst-case leakage constraint:
/// `[[rho2 I - W^T (x) Theta, -p], [-p^H, kappa sigma_E^2/P - c_E - rho2 eps_E^2]]`.
#[allow(clippy::too_many_arguments)]
pub fn lmi_leakage(
    w_cov: &CMat,
    theta: &CMat,
    e_bar: &CMat,
    eps_e: f64,
    kappa: f64,
    sigma_e_sq: f64,
    p_tx: f64,
    rho2: f64,
) -> CMat {
    let (p, c_e) = lmi_pieces(w_cov, theta, e_bar);
    let kern = crate::metrics::kron(&w_cov.transpose(), theta);
    assemble_corner(
        &(CMat::identity(kern.nrows(), kern.nrows()) * C64::new(rho2, 0.0) - kern),
        &(-p),
        kappa * sigma_e_sq / p_tx - c_e - rho2 * eps_e * eps_e,
    )
}

fn assemble_corner(top: &CMat, border: &CVec, corner: f64) -> CMat {
    let d = top.nrows();
    let mut out = CMat::zeros(d + 1, d + 1);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = top[(i, j)];
        }
        out[(i, d)] = border[i];
        out[(d, i)] = border[i].conj();
    }
    out[(d, d)] = C64::new(corner, 0.0);
    out
}

/// First-order expansion of `log2(1 + kappa)` around `kappa0`; a global
/// upper bound by concavity, exact at `kappa0`.
pub fn taylor_eta_bound(kappa: f64, kappa0: f64) -> f64 {
    (kappa - kappa0) / ((1.0 + kappa0) * std::f64::consts::LN_2) + (1.0 + kappa0).log2()
}

/// Worst-case illumination power over the uncertainty ball for a rank-one
/// design pair, in closed form: `(max(|q~ E_bar w| - eps ||q~|| ||w||, 0))^2`.
pub fn worst_case_illumination_rank_one(
    w: &CVec,
    q: &CVec,
    e_bar: &CMat,
    eps_e: f64,
) -> f64 {
    let u = crate::metrics::lift_u(q); // [q; 1]
    let nominal = (u.transpose() * e_bar * w)[(0, 0)].norm();
    let slack = eps_e * u.norm() * w.norm();
    (nominal - slack).max(0.0).powi(2)
}

/// Best-case (largest) received power at Eve over the ball, rank-one pair.
pub fn best_case_leakage_rank_one(w: &CVec, q: &CVec, e_bar: &CMat, eps_e: f64) -> f64 {
    let u = crate::metrics::lift_u(q);
    let nominal = (u.transpose() * e_bar * w)[(0, 0)].norm();
    (nominal + eps_e * u.norm() * w.norm()).powi(2)
}

/// Budget of the projected-gradient worst-case search.
#[derive(Debug, Clone, Copy)]
pub struct AscentBudget {
    pub starts: usize,
    pub iterations: usize,
}

impl Default for AscentBudget {
    fn default() -> Self {
        Self {
            starts: 8,
            iterations: 60,
        }
    }
}

/// Lower bound on the worst-case eavesdropper rate
/// `max_{||dE||_F <= eps_E} log2(1 + P tr(Theta E W E^H)/sigma_E^2)`
/// by multi-start projected-gradient ascent over the ball.
#[allow(clippy::too_many_arguments)]
pub fn worst_case_eve_rate<R: Rng + ?Sized>(
    w_cov: &CMat,
    theta: &CMat,
    e_bar: &CMat,
    eps_e: f64,
    noise: &NoisePowers,
    p_tx: f64,
    budget: &AscentBudget,
    rng: &mut R,
) -> f64 {
    let g = worst_case_quadratic(w_cov, theta, e_bar, eps_e, budget, rng, true);
    (1.0 + p_tx * g / noise.sigma_e_sq).log2()
}

/// Extremal value of `tr(Theta (E_bar + dE) W (E_bar + dE)^H)` over the ball
/// (maximize or minimize).
pub fn worst_case_quadratic<R: Rng + ?Sized>(
    w_cov: &CMat,
    theta: &CMat,
    e_bar: &CMat,
    eps_e: f64,
    budget: &AscentBudget,
    rng: &mut R,
    maximize: bool,
) -> f64 {
    let (p, c_e) = lmi_pieces(w_cov, theta, e_bar);
    if eps_e == 0.0 {
        return c_e.max(0.0);
    }
    let kern = hermitian_part(&crate::metrics::kron(&w_cov.transpose(), theta));
    let d = kern.nrows();
    let value = |e: &CVec| -> f64 {
        (e.adjoint() * &kern * e)[(0, 0)].re + 2.0 * (p.adjoint() * e)[(0, 0)].re + c_e
    };
    let lip = 2.0
        * kern
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &l| m.max(l.abs()))
        + 1e-12;
    let sign = if maximize { 1.0 } else { -1.0 };
    let project = |e: CVec| -> CVec {
        let n = e.norm();
        if n > eps_e {
            e * C64::new(eps_e / n, 0.0)
        } else {
            e
        }
    };
    let mut starts: Vec<CVec> = vec![CVec::zeros(d)];
    let pn = p.norm();
    if pn > 0.0 {
        starts.push(&p * C64::new(sign * eps_e / pn, 0.0));
    }
    for _ in 0..budget.starts {
        let raw = crate::channels::complex_gaussian_vector(d, rng);
        let n = raw.norm();
        if n > 0.0 {
            starts.push(raw * C64::new(eps_e / n, 0.0));
        }
    }
    let mut best = c_e; // dE = 0
    for mut e in starts {
        let step = 1.0 / lip.max(1e-12);
        for _ in 0..budget.iterations {
            let grad = (&kern * &e + &p) * C64::new(2.0, 0.0);
            e = project(&e + grad * C64::new(sign * step, 0.0));
        }
        let v = value(&e);
        if (maximize && v > best) || (!maximize && v < best) {
            best = v;
        }
    }
    best.max(0.0)
}

#[derive(Debug, Clone, Copy)]
pub struct RobustOptions {
    /// Outer BCD relative stopping accuracy on the secrecy surrogate.
    pub eps_outer: f64,
    pub max_outer: usize,
    /// Convexification passes per block.
    pub fw_max_iter: usize,
    pub fw_tol: f64,
    pub sdp: SdpOptions,
    pub randomization_samples: usize,
}

impl Default for RobustOptions {
    fn default() -> Self {
        Self {
            eps_outer: 1e-2,
            max_outer: 20,
            fw_max_iter: 10,
            fw_tol: 1e-4,
            sdp: SdpOptions::default(),
            randomization_samples: 30,
        }
    }
}

/// Relaxed matrices, slack variables and the recovered rank-one design.
#[derive(Debug, Clone)]
pub struct RobustDesign {
    pub w_cov: CMat,
    pub theta: CMat,
    pub eta: f64,
    pub kappa: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Recovered rank-one pair; `None` when every candidate pair failed the
    /// worst-case recheck (see `rank_gap`).
    pub w: Option<CVec>,
    pub q: Option<CVec>,
    pub rank_gap: bool,
}

#[derive(Debug, Clone)]
pub struct RobustTrace {
    /// Secrecy surrogate `C_B - eta` per outer iteration.
    pub surrogate: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct RobustOutcome {
    pub design: RobustDesign,
    pub feasible: bool,
    /// Worst-case secrecy rate of the recovered pair (surrogate value when
    /// the rank-one recovery failed).
    pub worst_case_cs: f64,
    pub trace: RobustTrace,
}

struct RobustContext {
    e_bar: CMat,
    b_stack: CMat,
    eps_e: f64,
    gamma_p: f64,
    p_tx: f64,
    sigma_b_sq: f64,
    sigma_e_sq: f64,
}

impl RobustContext {
    fn c_b(&self, w_cov: &CMat, theta: &CMat) -> f64 {
        let t = crate::metrics::illumination_power(theta, w_cov, &self.b_stack);
        (1.0 + self.p_tx * t / self.sigma_b_sq).log2()
    }
}

/// aux layout in both subproblem SDPs
const AUX_ETA: usize = 0;
const AUX_KAPPA: usize = 1;
const AUX_RHO1: usize = 2;
const AUX_RHO2: usize = 3;
const N_AUX: usize = 4;

fn aux_unit(idx: usize) -> RVec {
    let mut v = RVec::zeros(N_AUX);
    v[idx] = 1.0;
    v
}

/// Build both S-procedure LMI blocks for one subproblem. `map` carries the
/// variable matrix into (kron kernel top-left, border, corner) pieces.
fn add_robust_constraints(
    prob: &mut sdp::SdpProblem,
    ctx: &RobustContext,
    var_dim: usize,
    kern_of: impl Fn(&CMat) -> CMat,
    border_of: impl Fn(&CMat) -> CVec,
    corner_of: impl Fn(&CMat) -> f64,
    kappa0: f64,
) {
    let d = ctx.e_bar.nrows() * ctx.e_bar.ncols();
    let eps_sq = ctx.eps_e * ctx.eps_e;
    // radar: [[rho1 I + K(X), p(X)], [p(X)^H, c(X) - gamma_p/P - rho1 eps^2]]
    let mut f0 = CMat::zeros(d + 1, d + 1);
    f0[(d, d)] = C64::new(-ctx.gamma_p / ctx.p_tx, 0.0);
    let mut rho1_mat = CMat::identity(d + 1, d + 1);
    rho1_mat[(d, d)] = C64::new(-eps_sq, 0.0);
    let mut faux = vec![CMat::zeros(d + 1, d + 1); N_AUX];
    faux[AUX_RHO1] = rho1_mat;
    prob.add_lmi(LmiBlock::from_affine(
        d + 1,
        var_dim,
        f0,
        |basis| assemble_corner(&kern_of(basis), &border_of(basis), corner_of(basis)),
        faux,
    ));
    // leakage: [[rho2 I - K(X), -p(X)], [-p(X)^H, kappa sigma^2/P - c(X) - rho2 eps^2]]
    let f0 = CMat::zeros(d + 1, d + 1);
    let mut rho2_mat = CMat::identity(d + 1, d + 1);
    rho2_mat[(d, d)] = C64::new(-eps_sq, 0.0);
    let mut kappa_mat = CMat::zeros(d + 1, d + 1);
    kappa_mat[(d, d)] = C64::new(ctx.sigma_e_sq / ctx.p_tx, 0.0);
    let mut faux = vec![CMat::zeros(d + 1, d + 1); N_AUX];
    faux[AUX_RHO2] = rho2_mat;
    faux[AUX_KAPPA] = kappa_mat;
    prob.add_lmi(LmiBlock::from_affine(
        d + 1,
        var_dim,
        f0,
        |basis| {
            assemble_corner(
                &(-kern_of(basis)),
                &(-border_of(basis)),
                -corner_of(basis),
            )
        },
        faux,
    ));
    // eta >= tangent of log2(1 + kappa) at kappa0
    let slope = 1.0 / ((1.0 + kappa0) * std::f64::consts::LN_2);
    let mut aux = RVec::zeros(N_AUX);
    aux[AUX_ETA] = 1.0;
    aux[AUX_KAPPA] = -slope;
    prob.add_ineq(
        CMat::zeros(var_dim, var_dim),
        aux,
        (1.0 + kappa0).log2() - slope * kappa0,
    );
    // nonnegative slack scalars
    for idx in [AUX_KAPPA, AUX_RHO1, AUX_RHO2] {
        prob.add_ineq(CMat::zeros(var_dim, var_dim), aux_unit(idx), 0.0);
    }
}

struct BlockSolution {
    x: CMat,
    aux: RVec,
    objective: f64,
}

/// Solve one block (over W or over Theta) by convexifying the rate term at
/// the incumbent and line-searching the SDP answers on the true objective.
#[allow(clippy::too_many_arguments)]
fn solve_block(
    ctx: &RobustContext,
    var_dim: usize,
    t_mat_of: &dyn Fn(&CMat) -> CMat,
    kern_of: &dyn Fn(&CMat) -> CMat,
    border_of: &dyn Fn(&CMat) -> CVec,
    corner_of: &dyn Fn(&CMat) -> f64,
    trace_constraints: &[(CMat, f64)],
    x0: &CMat,
    aux0: &RVec,
    kappa0: f64,
    opts: &RobustOptions,
) -> Result<BlockSolution, RobustError> {
    // objective over (X, aux): log2(1 + (P/sigma_B^2) tr(T(X))) - eta
    let rate_arg = |x: &CMat| -> f64 { re_trace(&t_mat_of(x), &CMat::identity(1, 1).clone()) };
    let _ = rate_arg;
    let objective = |x: &CMat, aux: &RVec| -> f64 {
        let t = corner_like_trace(t_mat_of, x);
        (1.0 + ctx.p_tx * t / ctx.sigma_b_sq).log2() - aux[AUX_ETA]
    };

    let mut x_cur = x0.clone();
    let mut aux_cur = aux0.clone();
    let mut have_incumbent = false;
    let mut obj_cur = f64::NEG_INFINITY;

    for _ in 0..opts.fw_max_iter {
        let t_now = corner_like_trace(t_mat_of, &x_cur);
        let scale =
            ctx.p_tx / ctx.sigma_b_sq / ((1.0 + ctx.p_tx * t_now / ctx.sigma_b_sq) * std::f64::consts::LN_2);
        // gradient of the rate w.r.t. X through the linear map T
        let grad = gradient_through(t_mat_of, var_dim) * C64::new(scale, 0.0);
        let mut prob = sdp::SdpProblem::new(var_dim, N_AUX);
        let mut obj_aux = RVec::zeros(N_AUX);
        obj_aux[AUX_ETA] = -1.0;
        prob.set_objective(grad, obj_aux);
        for (a, b) in trace_constraints {
            prob.add_eq_x(a.clone(), *b);
        }
        add_robust_constraints(
            &mut prob,
            ctx,
            var_dim,
            kern_of,
            border_of,
            corner_of,
            kappa0,
        );
        let sol = sdp::solve(&prob, &opts.sdp)?;
        match sol.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => return Err(RobustError::RadarInfeasible),
            SdpStatus::MaxIter => break,
        }
        let x_new = hermitian_part(&sol.x);
        let aux_new = sol.aux.clone();
        if !have_incumbent {
            x_cur = x_new;
            aux_cur = aux_new;
            obj_cur = objective(&x_cur, &aux_cur);
            have_incumbent = true;
            continue;
        }
        let seg_x = |t: f64| -> CMat { &x_cur + (&x_new - &x_cur) * C64::new(t, 0.0) };
        let seg_aux = |t: f64| -> RVec { &aux_cur + (&aux_new - &aux_cur) * t };
        let mut best_t = 0.0;
        let mut best_v = obj_cur;
        let steps = 16;
        for k in 1..=steps {
            let t = k as f64 / steps as f64;
            let v = objective(&seg_x(t), &seg_aux(t));
            if v > best_v {
                best_v = v;
                best_t = t;
            }
        }
        if best_v <= obj_cur + opts.fw_tol {
            if best_v > obj_cur {
                x_cur = seg_x(best_t);
                aux_cur = seg_aux(best_t);
            }
            break;
        }
        x_cur = seg_x(best_t);
        aux_cur = seg_aux(best_t);
        obj_cur = best_v;
    }
    if !have_incumbent {
        return Err(RobustError::RadarInfeasible);
    }
    Ok(BlockSolution {
        objective: objective(&x_cur, &aux_cur),
        x: x_cur,
        aux: aux_cur,
    })
}

/// `tr` of the 1x1-like rate argument `T(X)`; `t_mat_of` maps the block
/// variable to the scalar trace argument stored in a 1x1 matrix.
fn corner_like_trace(t_mat_of: &dyn Fn(&CMat) -> CMat, x: &CMat) -> f64 {
    let t = t_mat_of(x);
    t[(0, 0)].re
}

/// Gradient matrix G with `Re tr(G X) = d/dX` of the linear scalar map.
fn gradient_through(t_mat_of: &dyn Fn(&CMat) -> CMat, var_dim: usize) -> CMat {
    // evaluate the linear map on the Hermitian basis to recover coefficients
    let mut g = CMat::zeros(var_dim, var_dim);
    for i in 0..var_dim {
        let mut b = CMat::zeros(var_dim, var_dim);
        b[(i, i)] = C64::new(1.0, 0.0);
        g[(i, i)] = C64::new(t_mat_of(&b)[(0, 0)].re, 0.0);
    }
    for j in 1..var_dim {
        for i in 0..j {
            let mut b = CMat::zeros(var_dim, var_dim);
            b[(i, j)] = C64::new(1.0, 0.0);
            b[(j, i)] = C64::new(1.0, 0.0);
            let re = t_mat_of(&b)[(0, 0)].re / 2.0;
            let mut b = CMat::zeros(var_dim, var_dim);
            b[(i, j)] = C64::new(0.0, 1.0);
            b[(j, i)] = C64::new(0.0, -1.0);
            let im = t_mat_of(&b)[(0, 0)].re / 2.0;
            let v = C64::new(re, im);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

/// Block coordinate descent for the worst-case secrecy design.
///
/// Alternates an SDP over the beamformer covariance and an SDP over the
/// lifted phase matrix, re-linearizing the leakage tangent at the incumbent
/// slack each pass, then recovers a rank-one pair by randomization with a
/// joint worst-case recheck.
#[allow(clippy::too_many_arguments)]
pub fn run_robust_bcd<R: Rng + ?Sized>(
    ch_nominal: &ChannelSet,
    unc: &UncertaintyModel,
    noise: &NoisePowers,
    p_tx: f64,
    gamma_p: f64,
    opts: &RobustOptions,
    init: Option<(CVec, CVec)>,
    rng: &mut R,
) -> Result<RobustOutcome, RobustError> {
    let n = ch_nominal.n_antennas();
    let m = ch_nominal.n_ris();
    let ctx = RobustContext {
        e_bar: stack_eve(ch_nominal),
        b_stack: stack_bob(ch_nominal),
        eps_e: unc.eps_e,
        gamma_p,
        p_tx,
        sigma_b_sq: noise.sigma_b_sq,
        sigma_e_sq: noise.sigma_e_sq,
    };

    let (w0, q0) = match init {
        Some(pair) => pair,
        None => {
            let mut w = crate::channels::complex_gaussian_vector(n, rng);
            let nw = w.norm();
            w /= C64::new(nw, 0.0);
            let q = CVec::from_fn(m, |_, _| {
                C64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
            });
            (w, q)
        }
    };
    let mut w_cov = &w0 * w0.adjoint();
    // Theta = q~^H q~ with the row q~ = [q^T, 1]
    let lift = crate::metrics::lift_u_mat(&q0);
    let mut theta = lift.conjugate();
    let mut kappa0 = 0.0;
    let mut aux = RVec::zeros(N_AUX);

    let mut trace = RobustTrace {
        surrogate: Vec::new(),
        iterations: 0,
    };
    let mut surrogate_cur = f64::NEG_INFINITY;

    for iter in 0..opts.max_outer {
        // beamformer covariance block
        {
            let theta_fixed = theta.clone();
            let e_bar = ctx.e_bar.clone();
            let b_stack = ctx.b_stack.clone();
            let t_mat_of = move |x: &CMat| -> CMat {
                let v = crate::metrics::illumination_power_signed(&theta_fixed, x, &b_stack);
                CMat::from_element(1, 1, C64::new(v, 0.0))
            };
            let theta_fixed2 = theta.clone();
            let kern_of = move |x: &CMat| crate::metrics::kron(&x.transpose(), &theta_fixed2);
            let theta_fixed3 = theta.clone();
            let e_b = e_bar.clone();
            let border_of =
                move |x: &CMat| crate::metrics::vec_col(&(&theta_fixed3 * &e_b * x));
            let theta_fixed4 = theta.clone();
            let e_b2 = ctx.e_bar.clone();
            let corner_of = move |x: &CMat| {
                crate::metrics::illumination_power_signed(&theta_fixed4, x, &e_b2)
            };
            let sol = solve_block(
                &ctx,
                n,
                &t_mat_of,
                &kern_of,
                &border_of,
                &corner_of,
                &[(CMat::identity(n, n), 1.0)],
                &w_cov,
                &aux,
                kappa0,
                opts,
            )?;
            w_cov = sol.x;
            aux = sol.aux;
            kappa0 = aux[AUX_KAPPA].max(0.0);
        }

        // lifted phase block
        {
            let w_fixed = w_cov.clone();
            let b_stack = ctx.b_stack.clone();
            let t_mat_of = move |x: &CMat| -> CMat {
                let v = crate::metrics::illumination_power_signed(x, &w_fixed, &b_stack);
                CMat::from_element(1, 1, C64::new(v, 0.0))
            };
            let w_fixed2 = w_cov.clone();
            let kern_of = move |x: &CMat| crate::metrics::kron(&w_fixed2.transpose(), x);
            let w_fixed3 = w_cov.clone();
            let e_b = ctx.e_bar.clone();
            let border_of = move |x: &CMat| crate::metrics::vec_col(&(x * &e_b * &w_fixed3));
            let w_fixed4 = w_cov.clone();
            let e_b2 = ctx.e_bar.clone();
            let corner_of =
                move |x: &CMat| crate::metrics::illumination_power_signed(x, &w_fixed4, &e_b2);
            let mut eqs: Vec<(CMat, f64)> = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let mut e = CMat::zeros(m + 1, m + 1);
                e[(i, i)] = C64::new(1.0, 0.0);
                eqs.push((e, 1.0));
            }
            let sol = solve_block(
                &ctx,
                m + 1,
                &t_mat_of,
                &kern_of,
                &border_of,
                &corner_of,
                &eqs,
                &theta,
                &aux,
                kappa0,
                opts,
            )?;
            theta = sol.x;
            aux = sol.aux;
            kappa0 = aux[AUX_KAPPA].max(0.0);
            surrogate_cur = sol.objective;
        }

        trace.surrogate.push(surrogate_cur);
        trace.iterations = iter + 1;
        if iter > 0 {
            let prev = trace.surrogate[iter - 1];
            if (surrogate_cur - prev).abs() / prev.abs().max(1e-12) <= opts.eps_outer {
                break;
            }
        }
    }

    // rank-one recovery with a joint worst-case recheck
    let w_cands = candidate_set(&w_cov, Projection::UnitNorm, opts.randomization_samples, rng);
    let theta_conj = theta.conjugate();
    let u_cands = candidate_set(
        &theta_conj,
        Projection::UnitModulus,
        opts.randomization_samples,
        rng,
    );
    let mut best: Option<(f64, CVec, CVec)> = None;
    for u in &u_cands {
        let q = recover_q(u);
        for w in &w_cands {
            let wc_rad = worst_case_illumination_rank_one(w, &q, &ctx.e_bar, ctx.eps_e);
            if wc_rad < (gamma_p / p_tx) * (1.0 - 1e-6) {
                continue;
            }
            let cs = rank_one_worst_case_cs(&ctx, w, &q);
            if best.as_ref().map_or(true, |(b, _, _)| cs > *b) {
                best = Some((cs, w.clone(), q.clone()));
            }
        }
    }

    let (feasible, worst_case_cs, w_opt, q_opt, rank_gap) = match best {
        Some((cs, w, q)) => (true, cs, Some(w), Some(q), false),
        None => (false, surrogate_cur, None, None, true),
    };
    Ok(RobustOutcome {
        design: RobustDesign {
            w_cov,
            theta,
            eta: aux[AUX_ETA],
            kappa: aux[AUX_KAPPA],
            rho1: aux[AUX_RHO1],
            rho2: aux[AUX_RHO2],
            w: w_opt,
            q: q_opt,
            rank_gap,
        },
        feasible,
        worst_case_cs,
        trace,
    })
}

/// Worst-case secrecy rate of a rank-one pair via the closed-form extremes.
pub fn rank_one_worst_case_cs_parts(
    b_stack: &CMat,
    e_bar: &CMat,
    eps_e: f64,
    sigma_b_sq: f64,
    sigma_e_sq: f64,
    p_tx: f64,
    w: &CVec,
    q: &CVec,
) -> (f64, f64) {
    let u = crate::metrics::lift_u(q);
    let pb = (u.transpose() * b_stack * w)[(0, 0)].norm_sqr();
    let c_b = (1.0 + p_tx * pb / sigma_b_sq).log2();
    let leak = {
        let nominal = (u.transpose() * e_bar * w)[(0, 0)].norm();
        (nominal + eps_e * u.norm() * w.norm()).powi(2)
    };
    let c_e = (1.0 + p_tx * leak / sigma_e_sq).log2();
    (c_b, c_e)
}

fn rank_one_worst_case_cs(ctx: &RobustContext, w: &CVec, q: &CVec) -> f64 {
    let (c_b, c_e) = rank_one_worst_case_cs_parts(
        &ctx.b_stack,
        &ctx.e_bar,
        ctx.eps_e,
        ctx.sigma_b_sq,
        ctx.sigma_e_sq,
        ctx.p_tx,
        w,
        q,
    );
    (c_b - c_e).max(0.0)
}

fn candidate_set<R: Rng + ?Sized>(
    cov: &CMat,
    proj: Projection,
    samples: usize,
    rng: &mut R,
) -> Vec<CVec> {
    let mut cands = Vec::new();
    // collect every projected candidate by scoring insertion order
    let counter = std::cell::Cell::new(0.0f64);
    let _ = gaussian_randomization(
        cov,
        samples,
        proj,
        |v| {
            cands.push(v.clone());
            true
        },
        |_| {
            counter.set(counter.get() + 1.0);
            counter.get()
        },
        rng,
    );
    cands
}
