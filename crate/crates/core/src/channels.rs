//! Propagation channels, steering vectors, path losses and CSI-uncertainty
//! bounds.
//!
//! All quantities are kept in linear scale internally; dB conversions happen
//! at the configuration boundary. Channel sampling is deterministic per RNG
//! stream so Monte Carlo trials are reproducible and order-insensitive.

use crate::{db_to_linear, C64, CMat, CRow, CVec};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Parameters of a uniform linear transmit array steering vector.
#[derive(Debug, Clone, Copy)]
pub struct SteeringParams {
    /// Target azimuth in radians.
    pub theta: f64,
    /// Number of transmit antennas N.
    pub n_antennas: usize,
    /// Element spacing over wavelength, d/lambda.
    pub spacing_over_lambda: f64,
}

impl SteeringParams {
    /// Half-wavelength spacing ULA pointed at `theta` radians.
    pub fn new(theta: f64, n_antennas: usize) -> Self {
        Self {
            theta,
            n_antennas,
            spacing_over_lambda: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_antennas == 0 {
            return Err(ChannelError::InvalidParameter(
                "n_antennas must be >= 1".into(),
            ));
        }
        if !(self.spacing_over_lambda > 0.0) {
            return Err(ChannelError::InvalidParameter(
                "spacing_over_lambda must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Identifies one of the five propagation links.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    AliceRis,
    RisBob,
    RisEve,
    AliceEve,
    AliceBob,
}

/// Distance-power path loss `beta^2 = beta0^2 (d/d0)^(-alpha)` with per-link
/// exponents.
#[derive(Debug, Clone, Copy)]
pub struct PathLossModel {
    /// Reference loss beta0^2 in dB at distance d0.
    pub beta0_sq_db: f64,
    /// Reference distance in meters.
    pub d0: f64,
    pub alpha_ai: f64,
    pub alpha_ib: f64,
    pub alpha_ie: f64,
    pub alpha_ae: f64,
    pub alpha_ab: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            beta0_sq_db: -15.0,
            d0: 1.0,
            alpha_ai: 2.0,
            alpha_ib: 2.0,
            alpha_ie: 2.0,
            alpha_ae: 2.2,
            alpha_ab: 3.2,
        }
    }
}

impl PathLossModel {
    /// All links lossless (unit power gain), used by the robust studies.
    pub fn unit() -> Self {
        Self {
            beta0_sq_db: 0.0,
            d0: 1.0,
            alpha_ai: 0.0,
            alpha_ib: 0.0,
            alpha_ie: 0.0,
            alpha_ae: 0.0,
            alpha_ab: 0.0,
        }
    }

    pub fn exponent(&self, link: Link) -> f64 {
        match link {
            Link::AliceRis => self.alpha_ai,
            Link::RisBob => self.alpha_ib,
            Link::RisEve => self.alpha_ie,
            Link::AliceEve => self.alpha_ae,
            Link::AliceBob => self.alpha_ab,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.d0 > 0.0) {
            return Err(ChannelError::InvalidParameter("d0 must be > 0".into()));
        }
        for a in [
            self.alpha_ai,
            self.alpha_ib,
            self.alpha_ie,
            self.alpha_ae,
            self.alpha_ab,
        ] {
            if a < 0.0 {
                return Err(ChannelError::InvalidParameter(
                    "path loss exponents must be >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Linear power gain of a link at the given distance.
pub fn path_loss(distance: f64, link: Link, model: &PathLossModel) -> Result<f64, ChannelError> {
    if !(distance > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance));
    }
    let beta0_sq = db_to_linear(model.beta0_sq_db);
    Ok(beta0_sq * (distance / model.d0).powf(-model.exponent(link)))
}

/// Node coordinates of the four terminals, in meters.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub alice: [f64; 3],
    pub ris: [f64; 3],
    pub bob: [f64; 3],
    pub eve: [f64; 3],
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            alice: [0.0, 0.0, 0.0],
            ris: [-2.5, 2.5 * 3f64.sqrt(), 5.0],
            bob: [0.0, 30.0, 10.0 * 3f64.sqrt()],
            eve: [45.0, 15.0 * 3f64.sqrt(), 30.0],
        }
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl Geometry {
    pub fn distance(&self, link: Link) -> f64 {
        match link {
            Link::AliceRis => dist(self.alice, self.ris),
            Link::RisBob => dist(self.ris, self.bob),
            Link::RisEve => dist(self.ris, self.eve),
            Link::AliceEve => dist(self.alice, self.eve),
            Link::AliceBob => dist(self.alice, self.bob),
        }
    }
}

/// The five propagation channels of the Alice/RIS/Bob/Eve scenario.
///
/// `h_ai` is M x N; `h_ab`, `h_ae` have length N; `h_ib`, `h_ie` length M.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_ai: CMat,
    pub h_ab: CVec,
    pub h_ae: CVec,
    pub h_ib: CVec,
    pub h_ie: CVec,
}

impl ChannelSet {
    pub fn new(
        h_ai: CMat,
        h_ab: CVec,
        h_ae: CVec,
        h_ib: CVec,
        h_ie: CVec,
    ) -> Result<Self, ChannelError> {
        let (m, n) = h_ai.shape();
        if h_ab.len() != n || h_ae.len() != n {
            return Err(ChannelError::DimensionMismatch(
                "h_ab/h_ae must have length N".into(),
            ));
        }
        if h_ib.len() != m || h_ie.len() != m {
            return Err(ChannelError::DimensionMismatch(
                "h_ib/h_ie must have length M".into(),
            ));
        }
        let set = Self {
            h_ai,
            h_ab,
            h_ae,
            h_ib,
            h_ie,
        };
        if !set.is_finite() {
            return Err(ChannelError::InvalidParameter(
                "channel entries must be finite".into(),
            ));
        }
        Ok(set)
    }

    pub fn n_antennas(&self) -> usize {
        self.h_ai.ncols()
    }

    pub fn n_ris(&self) -> usize {
        self.h_ai.nrows()
    }

    fn is_finite(&self) -> bool {
        let fin = |c: &C64| c.re.is_finite() && c.im.is_finite();
        self.h_ai.iter().all(fin)
            && self.h_ab.iter().all(fin)
            && self.h_ae.iter().all(fin)
            && self.h_ib.iter().all(fin)
            && self.h_ie.iter().all(fin)
    }

    /// Effective Alice-Bob channel `h_B = h_IB^H Q H_AI + h_AB^H` for the
    /// phase vector `q` (diagonal of Q).
    pub fn effective_bob(&self, q: &CVec) -> CRow {
        effective_channel(&self.h_ib, q, &self.h_ai, &self.h_ab).expect("consistent dimensions")
    }

    /// Effective Alice-Eve channel `h_E = h_IE^H Q H_AI + h_AE^H`.
    pub fn effective_eve(&self, q: &CVec) -> CRow {
        effective_channel(&self.h_ie, q, &self.h_ai, &self.h_ae).expect("consistent dimensions")
    }

    /// Baseline with the RIS removed: all RIS-side channels zeroed.
    pub fn without_ris(&self) -> Self {
        Self {
            h_ai: CMat::zeros(self.n_ris(), self.n_antennas()),
            h_ab: self.h_ab.clone(),
            h_ae: self.h_ae.clone(),
            h_ib: CVec::zeros(self.n_ris()),
            h_ie: CVec::zeros(self.n_ris()),
        }
    }
}

/// Transmit array steering vector; entry n is `exp(j 2 pi (d/lambda) n sin theta)`.
pub fn steering_vector(p: &SteeringParams) -> CVec {
    let step = 2.0 * std::f64::consts::PI * p.spacing_over_lambda * p.theta.sin();
    CVec::from_fn(p.n_antennas, |n, _| C64::from_polar(1.0, step * n as f64))
}

/// Effective channel `h_I^H Q H_AI + h_A^H` as a row vector.
pub fn effective_channel(
    h_i: &CVec,
    q: &CVec,
    h_ai: &CMat,
    h_a: &CVec,
) -> Result<CRow, ChannelError> {
    let (m, n) = h_ai.shape();
    if h_i.len() != m || q.len() != m || h_a.len() != n {
        return Err(ChannelError::DimensionMismatch(format!(
            "effective_channel: h_i {}, q {}, h_ai {}x{}, h_a {}",
            h_i.len(),
            q.len(),
            m,
            n,
            h_a.len()
        )));
    }
    // h_i^H Q = row with entries conj(h_i[k]) q[k]
    let mut row = CRow::zeros(n);
    for k in 0..m {
        let c = h_i[k].conj() * q[k];
        for j in 0..n {
            row[j] += c * h_ai[(k, j)];
        }
    }
    for j in 0..n {
        row[j] += h_a[j].conj();
    }
    Ok(row)
}

/// Cascaded Alice-RIS-Eve channel `G = diag(h_IE^H) H_AI`.
pub fn cascaded_channel(h_ie: &CVec, h_ai: &CMat) -> CMat {
    let mut g = h_ai.clone();
    for k in 0..h_ai.nrows() {
        let c = h_ie[k].conj();
        for j in 0..h_ai.ncols() {
            g[(k, j)] *= c;
        }
    }
    g
}

/// Norm bound on the steering-vector error induced by an angle uncertainty
/// `phi` around the estimate `theta_bar`:
/// `eps_A = sqrt(sum_n 2 (1 - cos psi_n))` with
/// `psi_n = |2 pi (d/lambda) (n-1) (sin theta_bar - sin(theta_bar + phi))|`.
pub fn steering_error_bound(theta_bar: f64, phi: f64, n: usize, d_over_lambda: f64) -> f64 {
    let delta = theta_bar.sin() - (theta_bar + phi).sin();
    let scale = 2.0 * std::f64::consts::PI * d_over_lambda;
    let mut sum = 0.0;
    for k in 0..n {
        let psi = (scale * k as f64 * delta).abs();
        sum += 2.0 * (1.0 - psi.cos());
    }
    sum.max(0.0).sqrt()
}

/// Bounded uncertainty on Eve's CSI: a Frobenius bound on the cascaded
/// channel error and an angle bound on the steering direction, combined into
/// a single Frobenius bound `eps_E` on the stacked channel error.
#[derive(Debug, Clone, Copy)]
pub struct UncertaintyModel {
    /// Frobenius bound on the cascaded channel error Delta G.
    pub eps_g: f64,
    /// Angle uncertainty bound in radians.
    pub phi: f64,
    /// Angle estimate in radians.
    pub theta_bar: f64,
    /// Steering-vector error bound derived from `phi`.
    pub eps_a: f64,
    /// Direct-channel error bound `beta_AE * eps_a`.
    pub eps_ae: f64,
    /// Combined stacked-channel bound, `sqrt(eps_g^2 + eps_ae^2)`.
    pub eps_e: f64,
}

impl UncertaintyModel {
    pub fn new(
        eps_g: f64,
        phi: f64,
        theta_bar: f64,
        n: usize,
        d_over_lambda: f64,
        beta_ae: f64,
    ) -> Result<Self, ChannelError> {
        if eps_g < 0.0 || phi < 0.0 {
            return Err(ChannelError::InvalidParameter(
                "uncertainty bounds must be nonnegative".into(),
            ));
        }
        let eps_a = steering_error_bound(theta_bar, phi, n, d_over_lambda);
        let eps_ae = beta_ae * eps_a;
        let eps_e = (eps_g * eps_g + eps_ae * eps_ae).sqrt();
        Ok(Self {
            eps_g,
            phi,
            theta_bar,
            eps_a,
            eps_ae,
            eps_e,
        })
    }

    /// Relative cascaded-channel bound: `eps_g = eps_bar_g * ||G_bar||_F`.
    pub fn from_relative(
        eps_bar_g: f64,
        g_bar: &CMat,
        phi: f64,
        theta_bar: f64,
        n: usize,
        d_over_lambda: f64,
        beta_ae: f64,
    ) -> Result<Self, ChannelError> {
        Self::new(
            eps_bar_g * g_bar.norm(),
            phi,
            theta_bar,
            n,
            d_over_lambda,
            beta_ae,
        )
    }
}

/// Draw one complex scalar ~ CN(0, 1).
fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let scale = 0.5f64.sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

/// Matrix with i.i.d. CN(0, 1) entries.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    // column-major fill to keep the draw order independent of storage details
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Vector with i.i.d. CN(0, 1) entries.
pub fn complex_gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec {
    CVec::from_fn(len, |_, _| complex_gaussian(rng))
}

/// Sample the five channels: `h_AE` is the deterministic LoS steering channel
/// scaled by its path loss, all other links are i.i.d. Rayleigh fading scaled
/// by their path losses.
pub fn sample_channels<R: Rng + ?Sized>(
    geometry: &Geometry,
    model: &PathLossModel,
    steering: &SteeringParams,
    m_ris: usize,
    rng: &mut R,
) -> Result<ChannelSet, ChannelError> {
    steering.validate()?;
    model.validate()?;
    let n = steering.n_antennas;
    let beta = |link: Link| -> Result<f64, ChannelError> {
        Ok(path_loss(geometry.distance(link), link, model)?.sqrt())
    };
    let b_ai = beta(Link::AliceRis)?;
    let b_ib = beta(Link::RisBob)?;
    let b_ie = beta(Link::RisEve)?;
    let b_ae = beta(Link::AliceEve)?;
    let b_ab = beta(Link::AliceBob)?;

    let h_ai = complex_gaussian_matrix(m_ris, n, rng) * C64::new(b_ai, 0.0);
    let h_ab = complex_gaussian_vector(n, rng) * C64::new(b_ab, 0.0);
    let h_ib = complex_gaussian_vector(m_ris, rng) * C64::new(b_ib, 0.0);
    let h_ie = complex_gaussian_vector(m_ris, rng) * C64::new(b_ie, 0.0);
    let h_ae = steering_vector(steering) * C64::new(b_ae, 0.0);
    ChannelSet::new(h_ai, h_ab, h_ae, h_ib, h_ie)
}

/// How [`sample_bounded_perturbation`] places the draw in the Frobenius ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// Uniform radius inside the ball.
    Interior,
    /// Exactly on the boundary, `||.||_F = eps`.
    Boundary,
}

/// Random complex matrix with Frobenius norm at most `eps` (boundary mode:
/// exactly `eps`). Used to realize members of the CSI uncertainty set.
pub fn sample_bounded_perturbation<R: Rng + ?Sized>(
    eps: f64,
    rows: usize,
    cols: usize,
    mode: PerturbationMode,
    rng: &mut R,
) -> CMat {
    assert!(eps >= 0.0, "perturbation bound must be nonnegative");
    let g = complex_gaussian_matrix(rows, cols, rng);
    let norm = g.norm();
    if eps == 0.0 || norm == 0.0 {
        return CMat::zeros(rows, cols);
    }
    let radius = match mode {
        PerturbationMode::Boundary => eps,
        PerturbationMode::Interior => {
            // uniform in the ball w.r.t. the 2*rows*cols real dimensions
            let u: f64 = rng.gen();
            eps * u.powf(1.0 / (2.0 * rows as f64 * cols as f64))
        }
    };
    g * C64::new(radius / norm, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn steering_vector_broadside_is_all_ones() {
        let a = steering_vector(&SteeringParams::new(0.0, 4));
        for k in 0..4 {
            assert_relative_eq!(a[k].re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(a[k].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steering_vector_30deg_two_elements() {
        let a = steering_vector(&SteeringParams::new(30f64.to_radians(), 2));
        assert_relative_eq!(a[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(a[1].re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(a[1].im, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_vector_endfire_alternates() {
        let a = steering_vector(&SteeringParams::new(90f64.to_radians(), 3));
        assert_relative_eq!(a[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(a[1].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(a[2].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_vector_entries_unit_modulus() {
        let a = steering_vector(&SteeringParams::new(0.7, 16));
        for v in a.iter() {
            assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn path_loss_reference_distance() {
        let m = PathLossModel::default();
        let g = path_loss(1.0, Link::AliceBob, &m).unwrap();
        assert_relative_eq!(g, 10f64.powf(-1.5), epsilon = 1e-15);
    }

    #[test]
    fn path_loss_follows_exponent() {
        let m = PathLossModel {
            alpha_ab: 2.0,
            ..Default::default()
        };
        // 20 dB per decade on top of the -15 dB reference
        let g = path_loss(10.0, Link::AliceBob, &m).unwrap();
        assert_relative_eq!(10.0 * g.log10(), -35.0, epsilon = 1e-12);
        let m = PathLossModel {
            alpha_ab: 3.2,
            ..Default::default()
        };
        let g = path_loss(100.0, Link::AliceBob, &m).unwrap();
        assert_relative_eq!(10.0 * g.log10(), -79.0, epsilon = 1e-12);
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        let m = PathLossModel::default();
        assert!(path_loss(0.0, Link::AliceBob, &m).is_err());
        assert!(path_loss(-1.0, Link::AliceBob, &m).is_err());
    }

    #[test]
    fn effective_channel_direct_only_cases() {
        let mut r = rng(1);
        let h_ai = complex_gaussian_matrix(3, 2, &mut r);
        let h_a = complex_gaussian_vector(2, &mut r);
        let q = CVec::from_element(3, C64::new(1.0, 0.0));
        // h_i = 0 leaves only the direct path
        let h_i = CVec::zeros(3);
        let row = effective_channel(&h_i, &q, &h_ai, &h_a).unwrap();
        for j in 0..2 {
            assert_relative_eq!((row[j] - h_a[j].conj()).norm(), 0.0, epsilon = 1e-14);
        }
        // H_AI = 0 likewise
        let h_i = complex_gaussian_vector(3, &mut r);
        let row = effective_channel(&h_i, &q, &CMat::zeros(3, 2), &h_a).unwrap();
        for j in 0..2 {
            assert_relative_eq!((row[j] - h_a[j].conj()).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn effective_channel_scalar_hand_arithmetic() {
        // M = N = 1: h_i = 1, H_AI = 2, h_a = j, Q = e^{j pi} -> -2 - j
        let h_i = CVec::from_element(1, C64::new(1.0, 0.0));
        let h_ai = CMat::from_element(1, 1, C64::new(2.0, 0.0));
        let h_a = CVec::from_element(1, C64::new(0.0, 1.0));
        let q = CVec::from_element(1, C64::from_polar(1.0, std::f64::consts::PI));
        let row = effective_channel(&h_i, &q, &h_ai, &h_a).unwrap();
        assert_relative_eq!(row[0].re, -2.0, epsilon = 1e-12);
        assert_relative_eq!(row[0].im, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn cascaded_channel_trivial_forms() {
        let mut r = rng(2);
        let h_ai = complex_gaussian_matrix(3, 2, &mut r);
        let ones = CVec::from_element(3, C64::new(1.0, 0.0));
        let g = cascaded_channel(&ones, &h_ai);
        assert_relative_eq!((&g - &h_ai).norm(), 0.0, epsilon = 1e-14);

        let h_ie = complex_gaussian_vector(3, &mut r);
        let g = cascaded_channel(&h_ie, &CMat::identity(3, 3));
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j {
                    h_ie[i].conj()
                } else {
                    C64::new(0.0, 0.0)
                };
                assert_relative_eq!((g[(i, j)] - want).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn cascaded_identity_against_direct_evaluation() {
        // h_IE^H Q H_AI == q^T G for random unit-modulus q
        let mut r = rng(3);
        let h_ai = complex_gaussian_matrix(3, 2, &mut r);
        let h_ie = complex_gaussian_vector(3, &mut r);
        let g = cascaded_channel(&h_ie, &h_ai);
        for _ in 0..20 {
            let q = CVec::from_fn(3, |_, _| C64::from_polar(1.0, r.gen::<f64>() * 6.28));
            let direct = effective_channel(&h_ie, &q, &h_ai, &CVec::zeros(2)).unwrap();
            let via_g = q.transpose() * &g;
            let rel = (&direct - &via_g).norm() / direct.norm();
            assert!(rel < 1e-10, "cascaded identity violated: {rel}");
        }
    }

    #[test]
    fn steering_error_bound_edge_cases() {
        assert_eq!(steering_error_bound(0.0, 0.0, 8, 0.5), 0.0);
        assert_eq!(steering_error_bound(0.3, 0.1, 1, 0.5), 0.0);
    }

    #[test]
    fn steering_error_bound_matches_chord_oracle() {
        // chord length |e^{j a} - e^{j b}| = 2 |sin((a-b)/2)| per element
        let theta_bar = 0.0;
        let phi = 3f64.to_radians();
        let got = steering_error_bound(theta_bar, phi, 2, 0.5);
        let psi = std::f64::consts::PI * (theta_bar.sin() - (theta_bar + phi).sin()).abs();
        let chord = 2.0 * (psi / 2.0).sin().abs();
        assert_relative_eq!(got, chord, epsilon = 1e-12);
        assert_relative_eq!(got, 0.1644, epsilon = 2e-4);
    }

    #[test]
    fn steering_error_bound_monotone_in_phi() {
        let mut prev = 0.0;
        for k in 0..=20 {
            let phi = 0.005 * k as f64;
            let e = steering_error_bound(0.5, phi, 6, 0.5);
            assert!(e + 1e-12 >= prev, "bound not monotone at phi={phi}");
            prev = e;
        }
    }

    #[test]
    fn uncertainty_model_pythagorean_identity() {
        let u = UncertaintyModel::new(3.0, 0.02, 0.5, 4, 0.5, 1.0).unwrap();
        assert_relative_eq!(
            u.eps_e * u.eps_e - (u.eps_g * u.eps_g + u.eps_ae * u.eps_ae),
            0.0,
            epsilon = 1e-12
        );
        let u = UncertaintyModel::new(1.0, 0.0, 0.5, 4, 0.5, 1.0).unwrap();
        assert_eq!(u.eps_a, 0.0);
        assert_eq!(u.eps_e, 1.0);
    }

    #[test]
    fn sample_channels_reproducible_per_seed() {
        let geo = Geometry::default();
        let model = PathLossModel::default();
        let steer = SteeringParams::new(30f64.to_radians(), 4);
        let a = sample_channels(&geo, &model, &steer, 9, &mut rng(7)).unwrap();
        let b = sample_channels(&geo, &model, &steer, 9, &mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_channels_zero_loss_gives_zero_channel() {
        let geo = Geometry::default();
        let model = PathLossModel {
            beta0_sq_db: f64::NEG_INFINITY,
            ..Default::default()
        };
        let steer = SteeringParams::new(0.5, 3);
        let ch = sample_channels(&geo, &model, &steer, 2, &mut rng(9)).unwrap();
        assert_eq!(ch.h_ab.norm(), 0.0);
        assert_eq!(ch.h_ai.norm(), 0.0);
    }

    #[test]
    fn sample_channels_los_direction() {
        let geo = Geometry::default();
        let model = PathLossModel::unit();
        let steer = SteeringParams::new(30f64.to_radians(), 4);
        let ch = sample_channels(&geo, &model, &steer, 2, &mut rng(11)).unwrap();
        let a = steering_vector(&steer);
        assert_relative_eq!((&ch.h_ae - &a).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fading_unit_variance_monte_carlo() {
        let mut r = rng(13);
        let n = 100_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            sum_sq += complex_gaussian(&mut r).norm_sqr();
        }
        let var = sum_sq / n as f64;
        assert!((var - 1.0).abs() < 0.02, "per-entry variance {var}");
    }

    #[test]
    fn bounded_perturbation_norms() {
        let mut r = rng(17);
        assert_eq!(
            sample_bounded_perturbation(0.0, 3, 2, PerturbationMode::Boundary, &mut r).norm(),
            0.0
        );
        for _ in 0..1000 {
            let b = sample_bounded_perturbation(2.5, 3, 2, PerturbationMode::Boundary, &mut r);
            assert!((b.norm() - 2.5).abs() < 1e-9);
            let i = sample_bounded_perturbation(2.5, 3, 2, PerturbationMode::Interior, &mut r);
            assert!(i.norm() <= 2.5 + 1e-12);
        }
    }

    #[test]
    fn bounded_perturbation_reproducible() {
        let a = sample_bounded_perturbation(1.0, 4, 3, PerturbationMode::Interior, &mut rng(23));
        let b = sample_bounded_perturbation(1.0, 4, 3, PerturbationMode::Interior, &mut rng(23));
        assert_eq!(a, b);
    }

    #[test]
    fn geometry_distances_match_layout() {
        let g = Geometry::default();
        assert_relative_eq!(g.distance(Link::AliceEve), 60.0, epsilon = 1e-12);
        assert_relative_eq!(g.distance(Link::AliceRis), 50f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(g.distance(Link::AliceBob), 1200f64.sqrt(), epsilon = 1e-12);
    }
}
