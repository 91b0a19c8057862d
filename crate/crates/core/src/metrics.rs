//! Rates, radar SINR/SNR and the lifted quadratic forms consumed by the
//! optimizers.
//!
//! The lifts re-express powers that are quadratic in the RIS phase vector
//! `q` as traces against the rank-one lift `U = u u^H`, `u = t [q; 1]`, so
//! that the phase subproblems become semidefinite programs. Every lifted
//! quantity is checked against its direct evaluation in the tests.

use crate::channels::ChannelSet;
use crate::{C64, CMat, CRow, CVec};

/// Log-domain guard: denominators and radicands are clamped here.
const POWER_FLOOR: f64 = 1e-30;

/// Noise powers at Bob, Eve and Alice, linear scale.
#[derive(Debug, Clone, Copy)]
pub struct NoisePowers {
    pub sigma_b_sq: f64,
    pub sigma_e_sq: f64,
    pub sigma_a_sq: f64,
}

impl NoisePowers {
    pub fn validate(&self) -> bool {
        self.sigma_b_sq > 0.0 && self.sigma_e_sq > 0.0 && self.sigma_a_sq > 0.0
    }
}

/// RCCE transmit design: power split, communication beamformer, radar
/// covariance and RIS phases.
#[derive(Debug, Clone)]
pub struct RcceDesign {
    /// Fraction of power on the communication signal, in [0, 1].
    pub epsilon: f64,
    /// Unit-norm communication beamformer.
    pub w: CVec,
    /// Hermitian PSD radar covariance with unit trace.
    pub r: CMat,
    /// Unit-modulus RIS phase vector (diagonal of Q).
    pub q: CVec,
}

/// DFRC transmit design: shared beamformer and RIS phases.
#[derive(Debug, Clone)]
pub struct DfrcDesign {
    pub w: CVec,
    pub q: CVec,
}

/// Violation report for the design invariants; `None` means all hold.
pub fn rcce_design_violation(d: &RcceDesign, tol: f64) -> Option<String> {
    if !(0.0..=1.0).contains(&d.epsilon) {
        return Some(format!("epsilon {} outside [0,1]", d.epsilon));
    }
    if (d.w.norm() - 1.0).abs() > tol {
        return Some(format!("||w|| = {}", d.w.norm()));
    }
    let herm = (&d.r - d.r.adjoint()).norm();
    if herm > tol * (1.0 + d.r.norm()) {
        return Some(format!("R not Hermitian: {herm}"));
    }
    let tr: C64 = d.r.diagonal().sum();
    if (tr.re - 1.0).abs() > tol {
        return Some(format!("tr R = {}", tr.re));
    }
    let min_eig = hermitian_part(&d.r)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -tol {
        return Some(format!("min eig R = {min_eig}"));
    }
    for qi in d.q.iter() {
        if (qi.norm() - 1.0).abs() > tol {
            return Some(format!("|q_i| = {}", qi.norm()));
        }
    }
    None
}

pub fn dfrc_design_violation(d: &DfrcDesign, tol: f64) -> Option<String> {
    if (d.w.norm() - 1.0).abs() > tol {
        return Some(format!("||w|| = {}", d.w.norm()));
    }
    for qi in d.q.iter() {
        if (qi.norm() - 1.0).abs() > tol {
            return Some(format!("|q_i| = {}", qi.norm()));
        }
    }
    None
}

/// Communication rates and the secrecy rate, bits/s/Hz.
#[derive(Debug, Clone, Copy)]
pub struct Rates {
    pub c_b: f64,
    pub c_e: f64,
    /// Clamped secrecy rate max(0, C_B - C_E).
    pub c_s: f64,
    /// Unclamped difference C_B - C_E, used inside the optimizers.
    pub c_s_unclamped: f64,
}

impl Rates {
    fn from_components(c_b: f64, c_e: f64) -> Self {
        let diff = c_b - c_e;
        Self {
            c_b,
            c_e,
            c_s: diff.max(0.0),
            c_s_unclamped: diff,
        }
    }
}

/// Real part of `tr(A B)` for Hermitian A, B; panics if the imaginary
/// residue exceeds the internal consistency threshold.
pub fn re_trace(a: &CMat, b: &CMat) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    let scale = 1.0 + acc.re.abs();
    assert!(
        acc.im.abs() <= 1e-8 * scale,
        "imaginary trace residue {} exceeds tolerance",
        acc.im
    );
    acc.re
}

/// (A + A^H)/2.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Outer product `h^H h` of a row vector, the rank-one channel matrix.
pub fn channel_outer(h: &CRow) -> CMat {
    h.adjoint() * h
}

fn log2_ratio(signal: f64, interference: f64) -> f64 {
    (1.0 + signal.max(0.0) / interference.max(POWER_FLOOR)).log2()
}

/// RCCE rates at Bob and Eve:
/// `C_J = log2(1 + eps P |h_J w|^2 / ((1-eps) P h_J R h_J^H + sigma_J^2))`.
pub fn rcce_rates(design: &RcceDesign, ch: &ChannelSet, noise: &NoisePowers, p: f64) -> Rates {
    let h_b = ch.effective_bob(&design.q);
    let h_e = ch.effective_eve(&design.q);
    let rate = |h: &CRow, sigma_sq: f64| -> f64 {
        let sig = design.epsilon * p * (h * &design.w)[(0, 0)].norm_sqr();
        let interf = (1.0 - design.epsilon) * p * quad_form(h, &design.r);
        log2_ratio(sig, interf + sigma_sq)
    };
    Rates::from_components(rate(&h_b, noise.sigma_b_sq), rate(&h_e, noise.sigma_e_sq))
}

/// `h R h^H` for a row vector h and Hermitian R (real by symmetry).
pub fn quad_form(h: &CRow, r: &CMat) -> f64 {
    let v = h.adjoint();
    let x = (h * r * &v)[(0, 0)];
    assert!(
        x.im.abs() <= 1e-8 * (1.0 + x.re.abs()),
        "quadratic form not real: {x}"
    );
    x.re
}

/// RCCE radar SINR at Alice,
/// `gamma_A = (1-eps) P tr(H_E^H H_E R) / (eps P w^H H_E^H H_E w + N sigma_A^2)`.
pub fn rcce_radar_sinr(design: &RcceDesign, ch: &ChannelSet, noise: &NoisePowers, p: f64) -> f64 {
    let h_e = ch.effective_eve(&design.q);
    let he_norm_sq = h_e.norm_squared();
    let n = ch.n_antennas() as f64;
    let num = (1.0 - design.epsilon) * p * he_norm_sq * quad_form(&h_e, &design.r);
    let den = design.epsilon * p * he_norm_sq * (&h_e * &design.w)[(0, 0)].norm_sqr()
        + n * noise.sigma_a_sq;
    num.max(0.0) / den.max(POWER_FLOOR)
}

/// DFRC rates: `C_J = log2(1 + P |h_J w|^2 / sigma_J^2)`.
pub fn dfrc_rates(design: &DfrcDesign, ch: &ChannelSet, noise: &NoisePowers, p: f64) -> Rates {
    let h_b = ch.effective_bob(&design.q);
    let h_e = ch.effective_eve(&design.q);
    let c_b = log2_ratio(p * (&h_b * &design.w)[(0, 0)].norm_sqr(), noise.sigma_b_sq);
    let c_e = log2_ratio(p * (&h_e * &design.w)[(0, 0)].norm_sqr(), noise.sigma_e_sq);
    Rates::from_components(c_b, c_e)
}

/// DFRC radar SNR at Alice, `gamma_A = P ||h_E||^2 |h_E w|^2 / (N sigma_A^2)`.
pub fn dfrc_radar_snr(design: &DfrcDesign, ch: &ChannelSet, noise: &NoisePowers, p: f64) -> f64 {
    let h_e = ch.effective_eve(&design.q);
    let n = ch.n_antennas() as f64;
    p * h_e.norm_squared() * (&h_e * &design.w)[(0, 0)].norm_sqr() / (n * noise.sigma_a_sq)
}

/// Column-major vectorization.
pub fn vec_col(a: &CMat) -> CVec {
    CVec::from_iterator(a.nrows() * a.ncols(), a.iter().cloned())
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Split a Hermitian matrix into its PSD and NSD parts by eigendecomposition;
/// zero eigenvalues go to the PSD part.
pub fn split_psd_nsd(k: &CMat) -> (CMat, CMat) {
    let eig = hermitian_part(k).symmetric_eigen();
    let n = k.nrows();
    let mut plus = CMat::zeros(n, n);
    let mut minus = CMat::zeros(n, n);
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        let outer = &v * v.adjoint() * C64::new(lam, 0.0);
        if lam >= 0.0 {
            plus += outer;
        } else {
            minus += outer;
        }
    }
    (plus, minus)
}

/// Lift of a phase vector: `u = [q; 1]`.
pub fn lift_u(q: &CVec) -> CVec {
    let m = q.len();
    CVec::from_fn(m + 1, |i, _| {
        if i < m {
            q[i]
        } else {
            C64::new(1.0, 0.0)
        }
    })
}

/// Rank-one lift `U = u u^H` with `u = [q; 1]`.
pub fn lift_u_mat(q: &CVec) -> CMat {
    let u = lift_u(q);
    &u * u.adjoint()
}

/// Quadratic lifts of the received communication and radar powers in the
/// RIS phases.
///
/// For J in {B, E}, `P_cJ = tr(R_cJ U)` and `P_rJ = tr(R_rJ U)` reproduce
/// the powers received through beamformer covariance `W` and radar
/// covariance `R`. The stack `E` satisfies `E [q; 1] = h_E^T`, so radar-echo
/// quantities become quadratic forms against `vec(U)`.
#[derive(Debug, Clone)]
pub struct LiftedForms {
    pub eps: f64,
    pub p: f64,
    /// A_cJ / a_cJ / P-bar_cJ pieces (communication side).
    pub a_cb: CMat,
    pub a_ce: CMat,
    pub a_cb_vec: CVec,
    pub a_ce_vec: CVec,
    pub p_bar_cb: f64,
    pub p_bar_ce: f64,
    /// Radar-side analogues.
    pub a_rb: CMat,
    pub a_re: CMat,
    pub a_rb_vec: CVec,
    pub a_re_vec: CVec,
    pub p_bar_rb: f64,
    pub p_bar_re: f64,
    /// (M+1) x (M+1) trace kernels: `P_cJ = tr(r_c* U)`, `P_rJ = tr(r_r* U)`.
    pub r_cb: CMat,
    pub r_ce: CMat,
    pub r_rb: CMat,
    pub r_re: CMat,
    /// N x (M+1) stack with `e_stack [q; 1] = h_E^T`.
    pub e_stack: CMat,
    /// Radar echo kernels over `vec(U)`.
    pub g_re: CMat,
    pub g_ce: CMat,
}

/// One side's A / a / P-bar pieces.
fn lift_side(h_ij: &CVec, h_aj: &CVec, h_ai: &CMat, cov: &CMat) -> (CMat, CVec, f64) {
    // A_J = (h_IJ h_IJ^H) o (H_AI Cov H_AI^H)^T
    let outer = h_ij * h_ij.adjoint();
    let core = h_ai * cov * h_ai.adjoint();
    let a = outer.component_mul(&core.transpose());
    // a_J = Diag(h_IJ h_AJ^H Cov H_AI^H)
    let row = h_aj.adjoint() * cov * h_ai.adjoint();
    let a_vec = CVec::from_fn(h_ij.len(), |i, _| h_ij[i] * row[(0, i)]);
    // P-bar_J = h_AJ^H Cov h_AJ
    let p_bar = (h_aj.adjoint() * cov * h_aj)[(0, 0)];
    assert!(
        p_bar.im.abs() <= 1e-8 * (1.0 + p_bar.re.abs()),
        "corner power not real: {p_bar}"
    );
    (a, a_vec, p_bar.re)
}

fn corner_kernel(a: &CMat, a_vec: &CVec, p_bar: f64, scale: f64) -> CMat {
    let m = a.nrows();
    let mut r = CMat::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            r[(i, j)] = a[(i, j)];
        }
        r[(i, m)] = a_vec[i];
        r[(m, i)] = a_vec[i].conj();
    }
    r[(m, m)] = C64::new(p_bar, 0.0);
    r * C64::new(scale, 0.0)
}

/// Build all lifted forms for beamformer covariance `w_cov`, radar
/// covariance `r_cov` and power split `eps` at total power `p`.
///
/// The DFRC lift is the special case `eps = 1`, `r_cov = 0`.
pub fn lift_quadratics(
    ch: &ChannelSet,
    w_cov: &CMat,
    r_cov: &CMat,
    eps: f64,
    p: f64,
) -> LiftedForms {
    let herm = |m: &CMat| (m - m.adjoint()).norm() <= 1e-8 * (1.0 + m.norm());
    assert!(herm(w_cov) && herm(r_cov), "covariances must be Hermitian");

    let (a_cb, a_cb_vec, p_bar_cb) = lift_side(&ch.h_ib, &ch.h_ab, &ch.h_ai, w_cov);
    let (a_ce, a_ce_vec, p_bar_ce) = lift_side(&ch.h_ie, &ch.h_ae, &ch.h_ai, w_cov);
    let (a_rb, a_rb_vec, p_bar_rb) = lift_side(&ch.h_ib, &ch.h_ab, &ch.h_ai, r_cov);
    let (a_re, a_re_vec, p_bar_re) = lift_side(&ch.h_ie, &ch.h_ae, &ch.h_ai, r_cov);

    let r_cb = corner_kernel(&a_cb, &a_cb_vec, p_bar_cb, eps * p);
    let r_ce = corner_kernel(&a_ce, &a_ce_vec, p_bar_ce, eps * p);
    let r_rb = corner_kernel(&a_rb, &a_rb_vec, p_bar_rb, (1.0 - eps) * p);
    let r_re = corner_kernel(&a_re, &a_re_vec, p_bar_re, (1.0 - eps) * p);

    // E = [(diag(h_IE^H) H_AI)^T, h_AE^*]: N x (M+1), E [q; 1] = h_E^T
    let g = crate::channels::cascaded_channel(&ch.h_ie, &ch.h_ai);
    let (m, n) = ch.h_ai.shape();
    let mut e_stack = CMat::zeros(n, m + 1);
    for i in 0..n {
        for j in 0..m {
            e_stack[(i, j)] = g[(j, i)];
        }
        e_stack[(i, m)] = ch.h_ae[i].conj();
    }
    let ehe = e_stack.adjoint() * &e_stack;
    let g_re = kron(&r_re.transpose(), &ehe);
    let g_ce = kron(&r_ce.transpose(), &ehe);

    LiftedForms {
        eps,
        p,
        a_cb,
        a_ce,
        a_cb_vec,
        a_ce_vec,
        p_bar_cb,
        p_bar_ce,
        a_rb,
        a_re,
        a_rb_vec,
        a_re_vec,
        p_bar_rb,
        p_bar_re,
        r_cb,
        r_ce,
        r_rb,
        r_re,
        e_stack,
        g_re,
        g_ce,
    }
}

impl LiftedForms {
    /// DFRC lift (single shared signal): `P_J = tr(r_cJ U)`.
    pub fn dfrc(ch: &ChannelSet, w_cov: &CMat, p: f64) -> Self {
        let n = ch.n_antennas();
        lift_quadratics(ch, w_cov, &CMat::zeros(n, n), 1.0, p)
    }

    /// Radar constraint kernel `K` over the stacked vector `[1; vec(U)]`:
    /// the RCCE SINR constraint `gamma_A >= gamma` is `u~^H K u~ <= 0`.
    pub fn radar_k(&self, gamma: f64, n_antennas: usize, sigma_a_sq: f64) -> CMat {
        let d = self.g_ce.nrows();
        let mut k = CMat::zeros(d + 1, d + 1);
        k[(0, 0)] = C64::new(gamma * n_antennas as f64 * sigma_a_sq, 0.0);
        let k1 = &self.g_ce * C64::new(gamma, 0.0) - &self.g_re;
        for i in 0..d {
            for j in 0..d {
                k[(i + 1, j + 1)] = k1[(i, j)];
            }
        }
        k
    }

    /// DFRC radar SNR kernel over `vec(U)`: `gamma_A = v^H S_E v`.
    pub fn s_e(&self, n_antennas: usize, sigma_a_sq: f64) -> CMat {
        let ehe = self.e_stack.adjoint() * &self.e_stack;
        kron(&self.r_ce.transpose(), &ehe) * C64::new(1.0 / (n_antennas as f64 * sigma_a_sq), 0.0)
    }

    /// Lifted communication power `P_cJ = tr(r_cJ U)` at a rank-one lift of q.
    pub fn p_c_at(&self, q: &CVec, eve: bool) -> f64 {
        let u = lift_u_mat(q);
        re_trace(if eve { &self.r_ce } else { &self.r_cb }, &u)
    }

    /// Lifted radar power `P_rJ = tr(r_rJ U)` at a rank-one lift of q.
    pub fn p_r_at(&self, q: &CVec, eve: bool) -> f64 {
        let u = lift_u_mat(q);
        re_trace(if eve { &self.r_re } else { &self.r_rb }, &u)
    }
}

/// Radar illumination power `tr(Theta E W E^H)` (robust design metric);
/// `e` is the (M+1) x N stacked channel.
pub fn illumination_power(theta: &CMat, w: &CMat, e: &CMat) -> f64 {
    let prod = theta * e * w * e.adjoint();
    let tr: C64 = prod.diagonal().sum();
    assert!(
        tr.im.abs() <= 1e-10 * (1.0 + tr.re.abs()) + 1e-10,
        "illumination power not real: {tr}"
    );
    tr.re.max(0.0)
}

/// Same trace without the nonnegativity clamp; valid for any Hermitian
/// inputs (used when evaluating the affine maps on basis elements).
pub fn illumination_power_signed(theta: &CMat, w: &CMat, e: &CMat) -> f64 {
    let prod = theta * e * w * e.adjoint();
    let tr: C64 = prod.diagonal().sum();
    tr.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{complex_gaussian_matrix, complex_gaussian_vector, ChannelSet};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
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

    fn random_unit_modulus(m: usize, r: &mut ChaCha8Rng) -> CVec {
        CVec::from_fn(m, |_, _| {
            C64::from_polar(1.0, r.gen::<f64>() * std::f64::consts::TAU)
        })
    }

    fn random_psd(n: usize, trace: f64, r: &mut ChaCha8Rng) -> CMat {
        let a = complex_gaussian_matrix(n, n, r);
        let mut p = &a * a.adjoint();
        let tr: C64 = p.diagonal().sum();
        p *= C64::new(trace / tr.re, 0.0);
        p
    }

    fn noise() -> NoisePowers {
        NoisePowers {
            sigma_b_sq: 1e-9,
            sigma_e_sq: 1e-9,
            sigma_a_sq: 1e-14,
        }
    }

    fn random_design(n: usize, m: usize, r: &mut ChaCha8Rng) -> RcceDesign {
        let mut w = complex_gaussian_vector(n, r);
        w /= C64::new(w.norm(), 0.0);
        RcceDesign {
            epsilon: 0.6,
            w,
            r: random_psd(n, 1.0, r),
            q: random_unit_modulus(m, r),
        }
    }

    /// Scalar re-evaluation of the RCCE rate, written against the formula
    /// with explicit loops (independent of the library path).
    fn rcce_rate_scalar(
        design: &RcceDesign,
        ch: &ChannelSet,
        sigma_sq: f64,
        p: f64,
        eve: bool,
    ) -> f64 {
        let (m, n) = ch.h_ai.shape();
        let (h_i, h_a) = if eve {
            (&ch.h_ie, &ch.h_ae)
        } else {
            (&ch.h_ib, &ch.h_ab)
        };
        let mut h = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for k in 0..m {
                h[j] += h_i[k].conj() * design.q[k] * ch.h_ai[(k, j)];
            }
            h[j] += h_a[j].conj();
        }
        let mut hw = C64::new(0.0, 0.0);
        for j in 0..n {
            hw += h[j] * design.w[j];
        }
        let mut hrh = C64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                hrh += h[a] * design.r[(a, b)] * h[b].conj();
            }
        }
        (1.0 + design.epsilon * p * hw.norm_sqr()
            / ((1.0 - design.epsilon) * p * hrh.re + sigma_sq))
            .log2()
    }

    #[test]
    fn rcce_rates_zero_power_split() {
        let mut r = rng(1);
        let ch = random_channels(3, 4, &mut r);
        let mut d = random_design(3, 4, &mut r);
        d.epsilon = 0.0;
        let rates = rcce_rates(&d, &ch, &noise(), 1.0);
        assert_eq!(rates.c_b, 0.0);
        assert_eq!(rates.c_e, 0.0);
        assert_eq!(rates.c_s, 0.0);
    }

    #[test]
    fn rcce_rates_match_scalar_oracle() {
        let mut r = rng(2);
        for _ in 0..10 {
            let ch = random_channels(2, 2, &mut r);
            let d = random_design(2, 2, &mut r);
            let p = 1.0;
            let rates = rcce_rates(&d, &ch, &noise(), p);
            let want_b = rcce_rate_scalar(&d, &ch, noise().sigma_b_sq, p, false);
            let want_e = rcce_rate_scalar(&d, &ch, noise().sigma_e_sq, p, true);
            assert_relative_eq!(rates.c_b, want_b, max_relative = 1e-12);
            assert_relative_eq!(rates.c_e, want_e, max_relative = 1e-12);
        }
    }

    #[test]
    fn rcce_sinr_zero_at_full_communication_power() {
        let mut r = rng(3);
        let ch = random_channels(3, 4, &mut r);
        let mut d = random_design(3, 4, &mut r);
        d.epsilon = 1.0;
        assert_eq!(rcce_radar_sinr(&d, &ch, &noise(), 1.0), 0.0);
    }

    #[test]
    fn rcce_sinr_aligned_rank_one_covariance() {
        let mut r = rng(4);
        let ch = random_channels(3, 4, &mut r);
        let mut d = random_design(3, 4, &mut r);
        let h_e = ch.effective_eve(&d.q);
        let he2 = h_e.norm_squared();
        d.r = h_e.adjoint() * &h_e * C64::new(1.0 / he2, 0.0);
        d.epsilon = 0.0;
        let p = 2.5;
        let got = rcce_radar_sinr(&d, &ch, &noise(), p);
        let want = p * he2 * he2 / (3.0 * noise().sigma_a_sq);
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    #[test]
    fn dfrc_rates_and_snr_special_cases() {
        let mut r = rng(5);
        let ch = random_channels(3, 2, &mut r);
        let q = random_unit_modulus(2, &mut r);
        let h_e = ch.effective_eve(&q);
        // beam matched to Eve maximizes the echo SNR
        let w = h_e.adjoint() * C64::new(1.0 / h_e.norm(), 0.0);
        let d = DfrcDesign { w, q };
        let p = 1.0;
        let got = dfrc_radar_snr(&d, &ch, &noise(), p);
        let he2 = h_e.norm_squared();
        assert_relative_eq!(got, p * he2 * he2 / (3.0 * noise().sigma_a_sq), max_relative = 1e-10);
    }

    #[test]
    fn dfrc_rates_match_direct_evaluation() {
        let mut r = rng(6);
        for _ in 0..10 {
            let ch = random_channels(2, 3, &mut r);
            let q = random_unit_modulus(3, &mut r);
            let mut w = complex_gaussian_vector(2, &mut r);
            w /= C64::new(w.norm(), 0.0);
            let d = DfrcDesign { w, q };
            let p = 1.7;
            let rates = dfrc_rates(&d, &ch, &noise(), p);
            let h_b = ch.effective_bob(&d.q);
            let want = (1.0 + p * (&h_b * &d.w)[(0, 0)].norm_sqr() / noise().sigma_b_sq).log2();
            assert_relative_eq!(rates.c_b, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn global_phase_leaves_metrics_unchanged() {
        let mut r = rng(7);
        let ch = random_channels(3, 4, &mut r);
        let d = random_design(3, 4, &mut r);
        let phase = C64::from_polar(1.0, 1.234);
        let mut d2 = d.clone();
        d2.w = &d.w * phase;
        let a = rcce_rates(&d, &ch, &noise(), 1.0);
        let b = rcce_rates(&d2, &ch, &noise(), 1.0);
        assert_relative_eq!(a.c_b, b.c_b, epsilon = 1e-12);
        assert_relative_eq!(a.c_e, b.c_e, epsilon = 1e-12);
        assert_relative_eq!(
            rcce_radar_sinr(&d, &ch, &noise(), 1.0),
            rcce_radar_sinr(&d2, &ch, &noise(), 1.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn lifted_communication_power_matches_direct() {
        let mut r = rng(8);
        for _ in 0..50 {
            let n = 2 + (r.gen::<usize>() % 2);
            let m = 2 + (r.gen::<usize>() % 3);
            let ch = random_channels(n, m, &mut r);
            let w_cov = random_psd(n, 1.0, &mut r);
            let r_cov = random_psd(n, 1.0, &mut r);
            let eps = r.gen::<f64>();
            let p = 2.0;
            let lift = lift_quadratics(&ch, &w_cov, &r_cov, eps, p);
            let q = random_unit_modulus(m, &mut r);
            let h_b = ch.effective_bob(&q);
            let h_e = ch.effective_eve(&q);
            let want_cb = eps * p * quad_form(&h_b, &w_cov);
            let want_ce = eps * p * quad_form(&h_e, &w_cov);
            let want_rb = (1.0 - eps) * p * quad_form(&h_b, &r_cov);
            let want_re = (1.0 - eps) * p * quad_form(&h_e, &r_cov);
            assert_relative_eq!(lift.p_c_at(&q, false), want_cb, max_relative = 1e-10);
            assert_relative_eq!(lift.p_c_at(&q, true), want_ce, max_relative = 1e-10);
            assert_relative_eq!(lift.p_r_at(&q, false), want_rb, max_relative = 1e-10);
            assert_relative_eq!(lift.p_r_at(&q, true), want_re, max_relative = 1e-10);
        }
    }

    #[test]
    fn lifted_zero_covariance_lift_is_zero() {
        let mut r = rng(9);
        let ch = random_channels(3, 2, &mut r);
        let lift = lift_quadratics(&ch, &CMat::zeros(3, 3), &random_psd(3, 1.0, &mut r), 0.5, 1.0);
        assert_eq!(lift.r_cb.norm(), 0.0);
        assert_eq!(lift.r_ce.norm(), 0.0);
    }

    #[test]
    fn e_stack_reproduces_effective_eve_channel() {
        let mut r = rng(10);
        let ch = random_channels(3, 4, &mut r);
        let lift = LiftedForms::dfrc(&ch, &random_psd(3, 1.0, &mut r), 1.0);
        for _ in 0..10 {
            let q = random_unit_modulus(4, &mut r);
            let h_e = ch.effective_eve(&q);
            let u = lift_u(&q);
            let via_stack = &lift.e_stack * &u;
            let rel = (via_stack.transpose() - &h_e).norm() / h_e.norm();
            assert!(rel < 1e-10, "stack identity violated: {rel}");
        }
    }

    #[test]
    fn rcce_sinr_matches_lifted_form() {
        let mut r = rng(11);
        for _ in 0..20 {
            let ch = random_channels(2, 3, &mut r);
            let d = random_design(2, 3, &mut r);
            let p = 1.0;
            let w_cov = &d.w * d.w.adjoint();
            let lift = lift_quadratics(&ch, &w_cov, &d.r, d.epsilon, p);
            let u = lift_u_mat(&d.q);
            let ubar = vec_col(&u);
            let num = (ubar.adjoint() * &lift.g_re * &ubar)[(0, 0)].re;
            let den = (ubar.adjoint() * &lift.g_ce * &ubar)[(0, 0)].re
                + ch.n_antennas() as f64 * noise().sigma_a_sq;
            let direct = rcce_radar_sinr(&d, &ch, &noise(), p);
            assert_relative_eq!(num / den, direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn dfrc_snr_matches_lifted_form() {
        let mut r = rng(12);
        for _ in 0..20 {
            let ch = random_channels(3, 2, &mut r);
            let q = random_unit_modulus(2, &mut r);
            let mut w = complex_gaussian_vector(3, &mut r);
            w /= C64::new(w.norm(), 0.0);
            let d = DfrcDesign { w, q };
            let p = 1.0;
            let w_cov = &d.w * d.w.adjoint();
            let lift = LiftedForms::dfrc(&ch, &w_cov, p);
            let s_e = lift.s_e(ch.n_antennas(), noise().sigma_a_sq);
            let ubar = vec_col(&lift_u_mat(&d.q));
            let via_lift = (ubar.adjoint() * &s_e * &ubar)[(0, 0)].re;
            let direct = dfrc_radar_snr(&d, &ch, &noise(), p);
            assert_relative_eq!(via_lift, direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn s_e_is_positive_semidefinite() {
        let mut r = rng(13);
        let ch = random_channels(3, 3, &mut r);
        let lift = LiftedForms::dfrc(&ch, &random_psd(3, 1.0, &mut r), 1.0);
        let s_e = lift.s_e(3, noise().sigma_a_sq);
        let min_eig = hermitian_part(&s_e)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig >= -1e-9 * s_e.norm(), "min eig {min_eig}");
    }

    #[test]
    fn radar_k_sign_encodes_constraint() {
        let mut r = rng(14);
        let ch = random_channels(2, 2, &mut r);
        let d = random_design(2, 2, &mut r);
        let p = 1.0;
        let w_cov = &d.w * d.w.adjoint();
        let lift = lift_quadratics(&ch, &w_cov, &d.r, d.epsilon, p);
        let gamma_a = rcce_radar_sinr(&d, &ch, &noise(), p);
        let u = lift_u_mat(&d.q);
        let mut ut = CVec::zeros(1 + 9);
        ut[0] = C64::new(1.0, 0.0);
        for (i, v) in vec_col(&u).iter().enumerate() {
            ut[i + 1] = *v;
        }
        // constraint value at gamma slightly below/above the achieved SINR
        for (factor, expect_neg) in [(0.99, true), (1.01, false)] {
            let k = lift.radar_k(gamma_a * factor, 2, noise().sigma_a_sq);
            let val = (ut.adjoint() * &k * &ut)[(0, 0)].re;
            assert_eq!(val <= 0.0, expect_neg, "factor {factor} -> {val}");
        }
    }

    #[test]
    fn psd_nsd_split_properties() {
        let mut r = rng(15);
        let a = complex_gaussian_matrix(6, 6, &mut r);
        let k = hermitian_part(&a);
        let (kp, km) = split_psd_nsd(&k);
        assert!(((&kp + &km) - &k).norm() <= 1e-10 * k.norm());
        let eig_p = hermitian_part(&kp).symmetric_eigen().eigenvalues;
        let eig_m = hermitian_part(&km).symmetric_eigen().eigenvalues;
        assert!(eig_p.iter().all(|&l| l >= -1e-10));
        assert!(eig_m.iter().all(|&l| l <= 1e-10));
        // PSD input: NSD part vanishes
        let psd = random_psd(4, 1.0, &mut r);
        let (_, km) = split_psd_nsd(&psd);
        assert!(km.norm() <= 1e-10);
    }

    #[test]
    fn lifted_sinr_invariant_to_global_phase_with_slack() {
        // u = t [q; 1]: a global phase on q folds into the slack t and leaves
        // every lifted trace unchanged
        let mut r = rng(16);
        let ch = random_channels(2, 3, &mut r);
        let d = random_design(2, 3, &mut r);
        let w_cov = &d.w * d.w.adjoint();
        let lift = lift_quadratics(&ch, &w_cov, &d.r, d.epsilon, 1.0);
        let t = C64::from_polar(1.0, 0.77);
        let u = lift_u(&d.q) * t;
        let u_mat = &u * u.adjoint();
        let base = lift_u_mat(&d.q);
        assert_relative_eq!(re_trace(&lift.r_ce, &u_mat), re_trace(&lift.r_ce, &base), max_relative = 1e-10);
        assert_relative_eq!(re_trace(&lift.r_re, &u_mat), re_trace(&lift.r_re, &base), max_relative = 1e-10);
    }

    #[test]
    fn illumination_power_forms() {
        let mut r = rng(17);
        let n = 3;
        let m1 = 4; // M + 1
        let e = complex_gaussian_matrix(m1, n, &mut r);
        let w = random_psd(n, 1.0, &mut r);
        assert_eq!(illumination_power(&random_psd(m1, 1.0, &mut r), &CMat::zeros(n, n), &e), 0.0);
        // rank-one factorization: Theta = q~^H q~ with row q~, W = w w^H -> |q~ E w|^2
        let qt = random_unit_modulus(m1, &mut r); // q~^T as a column
        let theta = qt.conjugate() * qt.transpose();
        let mut wv = complex_gaussian_vector(n, &mut r);
        wv /= C64::new(wv.norm(), 0.0);
        let w_r1 = &wv * wv.adjoint();
        let got = illumination_power(&theta, &w_r1, &e);
        let scalar = (qt.transpose() * &e * &wv)[(0, 0)];
        assert_relative_eq!(got, scalar.norm_sqr(), max_relative = 1e-10);
        // random instance vs explicit trace
        let theta = random_psd(m1, 2.0, &mut r);
        let got = illumination_power(&theta, &w, &e);
        let mut want = C64::new(0.0, 0.0);
        let prod = &theta * &e * &w * e.adjoint();
        for i in 0..m1 {
            want += prod[(i, i)];
        }
        assert_relative_eq!(got, want.re, max_relative = 1e-12);
    }

    #[test]
    fn design_violation_checks() {
        let mut r = rng(18);
        let d = random_design(3, 2, &mut r);
        assert!(rcce_design_violation(&d, 1e-9).is_none());
        let mut bad = d.clone();
        bad.w *= C64::new(2.0, 0.0);
        assert!(rcce_design_violation(&bad, 1e-9).is_some());
        let mut bad = d;
        bad.q[0] *= C64::new(1.5, 0.0);
        assert!(rcce_design_violation(&bad, 1e-9).is_some());
    }
}
