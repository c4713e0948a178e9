//! Faedo–Galerkin evolution of `g = div u` and recovery of `(u, p)`.
//!
//! The basis of the rot-free subspace is the three unit constant fields
//! followed by unit-norm gradients `b = ∇ψ` of real trigonometric modes
//! `ψ ∝ cos(k·x)` or `sin(k·x)`, ordered by `(|k|^2, lattice order)` with
//! `k` restricted to the dealias band. With `u = Σ c_j b_j`:
//!
//! * gradient coefficients follow the projected `g` equation,
//!   `ċ_j = -μ|k_j|^2 c_j - ⟨R, ψ_j⟩` with
//!   `R = div f - g^2 - ∇g·(φ^2 ∇_3 g) - ∇g·Π^2 u` and `∇_3 = d_2^* = -∇`;
//! * harmonic coefficients follow `ḣ = Π^2 (f - N^2(u))`.
//!
//! `φ^2 ∇_3 g = φ^2 Δ_2 u` is the zero-mean part of `u`, so the `g` equation is
//! exactly the divergence of the full system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::derham::{apply_d, apply_d_star, Form};
use crate::error::{Error, Result};
use crate::hodge::{parametrix, transverse_pressure};
use crate::nonlinear::{n2, NonlinearityConfig};
use crate::norms::{dual_h1_norm_sq, EnergyLedger};
use crate::spectral_grid::{product_from_samples, GridSamples, Lattice, ScalarField, WaveIndex, VOLUME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisElement {
    /// Unit constant field along `axis`.
    Harmonic { axis: usize },
    /// Unit gradient of the normalized potential `ψ = a e^{ik·x} + c.c.`.
    Gradient {
        mode: WaveIndex,
        lattice_index: usize,
        parity: Parity,
        /// Potential coefficient `a` at `+k`.
        potential: Complex64,
    },
}

impl BasisElement {
    pub fn eigenvalue(&self) -> f64 {
        match self {
            BasisElement::Harmonic { .. } => 0.0,
            BasisElement::Gradient { mode, .. } => mode.ksq as f64,
        }
    }

    fn gradient(lattice: &Lattice, mode: WaveIndex, parity: Parity) -> Self {
        let alpha = (2.0 / (VOLUME * mode.ksq as f64)).sqrt();
        let phase = match parity {
            Parity::Cos => Complex64::new(0.5, 0.0),
            Parity::Sin => Complex64::new(0.0, -0.5),
        };
        BasisElement::Gradient {
            mode,
            lattice_index: lattice.index_of(mode.k).expect("mode on lattice"),
            parity,
            potential: phase * alpha,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    lattice: Lattice,
    elements: Vec<BasisElement>,
}

impl GalerkinBasis {
    /// Number of basis forms available on `lattice`.
    pub fn available(lattice: &Lattice) -> usize {
        3 + 2 * gradient_modes(lattice).len()
    }

    pub fn build(lattice: &Lattice, size: usize) -> Result<Self> {
        let available = Self::available(lattice);
        if size < 4 || size > available {
            return Err(Error::BasisSize {
                requested: size,
                available,
            });
        }
        let mut elements: Vec<BasisElement> =
            (0..3).map(|axis| BasisElement::Harmonic { axis }).collect();
        'outer: for mode in gradient_modes(lattice) {
            for parity in [Parity::Cos, Parity::Sin] {
                if elements.len() == size {
                    break 'outer;
                }
                elements.push(BasisElement::gradient(lattice, mode, parity));
            }
        }
        Ok(GalerkinBasis {
            lattice: lattice.clone(),
            elements,
        })
    }

    /// Reorders the basis: element `i` of the result is element `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() || order.iter().any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidConfig("basis order is not a permutation".into()));
        }
        Ok(GalerkinBasis {
            lattice: self.lattice.clone(),
            elements: order.iter().map(|&i| self.elements[i]).collect(),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.elements.iter().map(BasisElement::eigenvalue).collect()
    }

    pub fn element_form(&self, j: usize) -> Form {
        let mut c = vec![0.0; self.len()];
        c[j] = 1.0;
        self.synthesize_u(&c)
    }

    fn check_len(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.len() {
            return Err(Error::CoefficientLength {
                got: c.len(),
                expected: self.len(),
            });
        }
        Ok(())
    }

    /// `u = Σ c_j b_j`.
    pub fn synthesize_u(&self, c: &[f64]) -> Form {
        let lat = &self.lattice;
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); lat.len()]; 3];
        let zero = lat.zero_index();
        let h_scale = 1.0 / VOLUME.sqrt();
        for (e, &cj) in self.elements.iter().zip(c) {
            match *e {
                BasisElement::Harmonic { axis } => comps[axis][zero] += Complex64::new(cj * h_scale, 0.0),
                BasisElement::Gradient {
                    mode,
                    lattice_index,
                    potential,
                    ..
                } => {
                    let k = mode.as_f64();
                    for d in 0..3 {
                        comps[d][lattice_index] += Complex64::new(0.0, k[d]) * potential * cj;
                    }
                }
            }
        }
        for comp in comps.iter_mut() {
            fill_conjugates(lat, comp);
        }
        let fields: Vec<ScalarField> = comps
            .into_iter()
            .map(|v| ScalarField::from_coeffs(lat, v).expect("lattice-sized"))
            .collect();
        Form::new(2, fields).expect("three components")
    }

    /// `g = div u = Σ c_j div b_j`.
    pub fn synthesize_g(&self, c: &[f64]) -> ScalarField {
        let lat = &self.lattice;
        let mut v = vec![Complex64::new(0.0, 0.0); lat.len()];
        for (e, &cj) in self.elements.iter().zip(c) {
            if let BasisElement::Gradient {
                mode,
                lattice_index,
                potential,
                ..
            } = *e
            {
                v[lattice_index] += potential * (-(mode.ksq as f64) * cj);
            }
        }
        fill_conjugates(lat, &mut v);
        ScalarField::from_coeffs(lat, v).expect("lattice-sized")
    }

    /// `Π^2 u` as a constant vector.
    pub fn harmonic_part(&self, c: &[f64]) -> [f64; 3] {
        let mut h = [0.0; 3];
        let s = 1.0 / VOLUME.sqrt();
        for (e, &cj) in self.elements.iter().zip(c) {
            if let BasisElement::Harmonic { axis } = *e {
                h[axis] += cj * s;
            }
        }
        h
    }

    /// `L^2` projection coefficients `c_j = ⟨u, b_j⟩`.
    pub fn project(&self, u: &Form) -> Result<Vec<f64>> {
        if u.degree() != 2 {
            return Err(Error::Degree {
                op: "project",
                got: u.degree(),
                expected: "2",
            });
        }
        if u.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch {
                left: self.lattice.k_max(),
                right: u.lattice().k_max(),
            });
        }
        let zero = self.lattice.zero_index();
        let sv = VOLUME.sqrt();
        Ok(self
            .elements
            .iter()
            .map(|e| match *e {
                BasisElement::Harmonic { axis } => sv * u.component(axis).coeffs()[zero].re,
                BasisElement::Gradient {
                    mode,
                    lattice_index,
                    potential,
                    ..
                } => {
                    let k = mode.as_f64();
                    let s: Complex64 = (0..3)
                        .map(|d| u.component(d).coeffs()[lattice_index] * (Complex64::new(0.0, k[d]) * potential).conj())
                        .sum();
                    2.0 * VOLUME * s.re
                }
            })
            .collect())
    }

    /// `⟨R, ψ_j⟩` for gradient elements, zero for harmonic ones.
    fn potential_pairings(&self, r: &ScalarField) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| match *e {
                BasisElement::Harmonic { .. } => 0.0,
                BasisElement::Gradient {
                    lattice_index,
                    potential,
                    ..
                } => 2.0 * VOLUME * (r.coeffs()[lattice_index] * potential.conj()).re,
            })
            .collect()
    }
}

fn gradient_modes(lattice: &Lattice) -> Vec<WaveIndex> {
    let mut modes: Vec<(usize, WaveIndex)> = lattice
        .modes()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, w)| w.is_positive_half() && lattice.in_band(w))
        .collect();
    modes.sort_by_key(|(i, w)| (w.ksq, *i));
    modes.into_iter().map(|(_, w)| w).collect()
}

/// Writes `conj(v[k])` into `v[-k]` for every positive-half `k`.
fn fill_conjugates(lattice: &Lattice, v: &mut [Complex64]) {
    let z = lattice.zero_index();
    let n = v.len();
    for i in z + 1..n {
        v[n - 1 - i] = v[i].conj();
    }
    v[z] = Complex64::new(v[z].re, 0.0);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact diffusion factor per mode, Heun (explicit trapezoid) for the rest.
    #[default]
    ImexHeun,
    /// Exact diffusion factor, forward Euler for the rest.
    ImexEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative bound on `|P^2 F|` for the pressure solve.
    pub pressure: f64,
    /// Relative bound on the basis-sum vs parametrix reconstruction of `u`.
    pub reconstruction: f64,
    /// Relative bound on `|rot u|`, `|div p|`, `|mean g|`.
    pub constraint: f64,
    /// Bound on `|⟨∇g·φ²∇₃g, g⟩ + ½∫g³| / (1 + |g|^3)`.
    pub cubic: f64,
    /// Bound on `|⟨∇g·Π²u, g⟩| / (|g|^2 (1 + |h|))`.
    pub transport: f64,
    /// Bound on the energy residual relative to `1 + max |g|^2 + dissipation`.
    pub energy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pressure: 1e-8,
            reconstruction: 1e-9,
            constraint: 1e-11,
            cubic: 1e-9,
            transport: 1e-11,
            energy: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mu: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
    #[serde(rename = "K")]
    pub k_max: usize,
    #[serde(rename = "M")]
    pub basis_size: usize,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default)]
    pub scheme: Scheme,
    /// Halt when `|u|` exceeds this multiple of `max(|u_0|, 1)`.
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_true() -> bool {
    true
}

fn default_blowup() -> f64 {
    1e6
}

impl SolverConfig {
    pub fn new(mu: f64, horizon: f64, dt: f64, k_max: usize, basis_size: usize) -> Self {
        SolverConfig {
            mu,
            horizon,
            dt,
            k_max,
            basis_size,
            dealias: true,
            scheme: Scheme::default(),
            blowup_factor: default_blowup(),
            nonlinearity: NonlinearityConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive (got {})", self.mu));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("T must be positive (got {})", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return bad(format!("dt must lie in (0, T] (got {})", self.dt));
        }
        if self.k_max == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.blowup_factor > 1.0) {
            return bad("blowup_factor must exceed 1".into());
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.k_max, self.dealias)
    }

    /// Uniform step count; the effective step is `T / steps ≤ dt`.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.horizon / self.steps() as f64
    }
}

/// Time-dependent right-hand side `f(t)`, a 2-form on the solver lattice.
pub trait Forcing {
    fn at(&self, t: f64) -> Result<Form>;
}

#[derive(Debug, Clone)]
pub struct ZeroForcing {
    lattice: Lattice,
}

impl ZeroForcing {
    pub fn new(lattice: &Lattice) -> Self {
        ZeroForcing {
            lattice: lattice.clone(),
        }
    }
}

impl Forcing for ZeroForcing {
    fn at(&self, _t: f64) -> Result<Form> {
        Ok(Form::zeros(&self.lattice, 2))
    }
}

#[derive(Debug, Clone)]
pub struct SteadyForcing(pub Form);

impl Forcing for SteadyForcing {
    fn at(&self, _t: f64) -> Result<Form> {
        Ok(self.0.clone())
    }
}

impl<F: Fn(f64) -> Result<Form>> Forcing for F {
    fn at(&self, t: f64) -> Result<Form> {
        self(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub c: Vec<f64>,
}

impl State {
    pub fn g(&self, basis: &GalerkinBasis) -> ScalarField {
        basis.synthesize_g(&self.c)
    }

    pub fn h(&self, basis: &GalerkinBasis) -> [f64; 3] {
        basis.harmonic_part(&self.c)
    }

    pub fn u(&self, basis: &GalerkinBasis) -> Form {
        basis.synthesize_u(&self.c)
    }

    pub fn coeff_norm(&self) -> f64 {
        self.c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `u_{0,m}`: the orthogonal projection of `u0` onto the basis span.
pub fn project_initial(u0: &Form, basis: &GalerkinBasis) -> Result<State> {
    Ok(State {
        t: 0.0,
        c: basis.project(u0)?,
    })
}

/// Every pairing of the `g` energy identity at one state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairingTerms {
    /// `|g|^2`
    pub kinetic: f64,
    /// `|∇g|^2`
    pub grad_sq: f64,
    /// `⟨div f, g⟩`
    pub forcing: f64,
    /// `⟨g^2, g⟩ = ∫ g^3`
    pub quadratic: f64,
    /// `⟨∇g·φ²∇₃g, g⟩`
    pub cubic: f64,
    /// `⟨∇g·Π²u, g⟩`
    pub transport: f64,
    /// `|Π²u|`
    pub h_abs: f64,
    /// `|div f|^2` in the dual norm `Σ (1+|k|^2)^{-1} |·|^2`
    pub forcing_dual_sq: f64,
}

impl PairingTerms {
    /// Right side pairing `⟨div f - g² - ∇g·φ²∇₃g - ∇g·Π²u, g⟩`.
    pub fn work(&self) -> f64 {
        self.forcing - self.quadratic - self.cubic - self.transport
    }

    pub fn cubic_residual(&self) -> f64 {
        self.cubic + 0.5 * self.quadratic
    }
}

struct Evaluation {
    /// Explicit part of `ċ` (everything except `-μλ c`).
    explicit: Vec<f64>,
    terms: PairingTerms,
}

/// `φ^2 ∇_3 g` with `∇_3 = d_2^*`: the zero-mean velocity recovered from `g`.
pub fn parametrix_velocity(g: &ScalarField) -> Form {
    let g3 = Form::scalar(3, g.clone());
    parametrix(&apply_d_star(&g3).expect("degree 3"))
}

fn evaluate(
    basis: &GalerkinBasis,
    c: &[f64],
    f: &Form,
    nl: &NonlinearityConfig,
) -> Result<Evaluation> {
    basis.check_len(c)?;
    let lat = basis.lattice();
    if f.degree() != 2 {
        return Err(Error::Degree {
            op: "forcing",
            got: f.degree(),
            expected: "2",
        });
    }
    if f.lattice() != lat {
        return Err(Error::LatticeMismatch {
            left: lat.k_max(),
            right: f.lattice().k_max(),
        });
    }
    let g = basis.synthesize_g(c);
    let h = basis.harmonic_part(c);
    let div_f = apply_d(f)?.into_components().remove(0);
    let grad_g = apply_d(&Form::scalar(0, g.clone()))?;

    let mut terms = PairingTerms {
        kinetic: g.l2_norm_sq(),
        grad_sq: grad_g.l2_norm_sq(),
        forcing: div_f.inner(&g),
        forcing_dual_sq: dual_h1_norm_sq(&div_f),
        h_abs: (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt(),
        ..Default::default()
    };

    let zero = lat.zero_index();
    let f_mean: Vec<f64> = f.components().iter().map(|c| c.coeffs()[zero].re).collect();
    let mut r = div_f;
    let mut nl_mean = [0.0; 3];

    if nl.is_active() {
        let w = parametrix_velocity(&g);
        let (gg, dg0) = g.to_grid_pair(grad_g.component(0))?;
        let (dg1, dg2) = grad_g.component(1).to_grid_pair(grad_g.component(2))?;
        let (wg0, wg1) = w.component(0).to_grid_pair(w.component(1))?;
        let wg2 = w.component(2).to_grid()?;
        let dg = [dg0, dg1, dg2];
        let wg = [wg0, wg1, wg2];
        let npts = gg.values.len();
        let cell = VOLUME / npts as f64;
        let mut q = vec![0.0; npts];
        let (mut quad, mut cub, mut tr) = (0.0, 0.0, 0.0);
        for p in 0..npts {
            let gv = gg.values[p];
            let d = [dg[0].values[p], dg[1].values[p], dg[2].values[p]];
            let wv = [wg[0].values[p], wg[1].values[p], wg[2].values[p]];
            let dw = d[0] * wv[0] + d[1] * wv[1] + d[2] * wv[2];
            let dh = d[0] * h[0] + d[1] * h[1] + d[2] * h[2];
            q[p] = gv * gv + dw + dh;
            quad += gv * gv * gv;
            cub += dw * gv;
            tr += dh * gv;
            for a in 0..3 {
                nl_mean[a] += gv * wv[a];
            }
        }
        terms.quadratic = quad * cell;
        terms.cubic = cub * cell;
        terms.transport = tr * cell;
        for m in nl_mean.iter_mut() {
            *m /= npts as f64;
        }
        let qf = product_from_samples(lat, &GridSamples { n: gg.n, values: q })?;
        r.add_scaled(-1.0, &qf);
    }

    let pair = basis.potential_pairings(&r);
    let sv = VOLUME.sqrt();
    let explicit = basis
        .elements()
        .iter()
        .zip(pair)
        .map(|(e, p)| match *e {
            BasisElement::Harmonic { axis } => sv * (f_mean[axis] - nl_mean[axis]),
            BasisElement::Gradient { .. } => -p,
        })
        .collect();
    Ok(Evaluation { explicit, terms })
}

/// Time derivative of the gradient coefficients from the projected `g`
/// equation, diffusion included; harmonic entries are zero.
pub fn rhs_g(basis: &GalerkinBasis, state: &State, f: &Form, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let ev = evaluate(basis, &state.c, f, &cfg.nonlinearity)?;
    Ok(basis
        .elements()
        .iter()
        .zip(ev.explicit)
        .zip(&state.c)
        .map(|((e, x), &c)| match e {
            BasisElement::Harmonic { .. } => 0.0,
            BasisElement::Gradient { .. } => x - cfg.mu * e.eigenvalue() * c,
        })
        .collect())
}

/// `dh/dt = Π^2 (f - N^2(u))`.
pub fn rhs_h(basis: &GalerkinBasis, state: &State, f: &Form, cfg: &SolverConfig) -> Result<[f64; 3]> {
    let ev = evaluate(basis, &state.c, f, &cfg.nonlinearity)?;
    let mut dh = [0.0; 3];
    let s = 1.0 / VOLUME.sqrt();
    for (e, x) in basis.elements().iter().zip(ev.explicit) {
        if let BasisElement::Harmonic { axis } = *e {
            dh[axis] += x * s;
        }
    }
    Ok(dh)
}

/// Every pairing term of the energy identity at `state`.
pub fn pairing_terms(basis: &GalerkinBasis, state: &State, f: &Form, nl: &NonlinearityConfig) -> Result<PairingTerms> {
    Ok(evaluate(basis, &state.c, f, nl)?.terms)
}

/// Single step of the configured scheme with step size `dt`.
pub fn step(
    basis: &GalerkinBasis,
    state: &State,
    forcing: &dyn Forcing,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<State> {
    let f0 = forcing.at(state.t)?;
    let ev0 = evaluate(basis, &state.c, &f0, &cfg.nonlinearity)?;
    let t1 = state.t + dt;
    Stepper::new(basis, cfg, dt).advance(state, &ev0.explicit, t1, &forcing.at(t1)?)
}

struct Stepper<'a> {
    basis: &'a GalerkinBasis,
    cfg: &'a SolverConfig,
    dt: f64,
    decay: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(basis: &'a GalerkinBasis, cfg: &'a SolverConfig, dt: f64) -> Self {
        let decay = basis
            .eigenvalues()
            .iter()
            .map(|l| (-cfg.mu * l * dt).exp())
            .collect();
        Stepper {
            basis,
            cfg,
            dt,
            decay,
        }
    }

    /// One step from `state` to time `t1`, given `f(t1)`.
    fn advance(&self, state: &State, n0: &[f64], t1: f64, f1: &Form) -> Result<State> {
        let dt = self.dt;
        let predictor: Vec<f64> = state
            .c
            .iter()
            .zip(n0)
            .zip(&self.decay)
            .map(|((c, n), e)| e * (c + dt * n))
            .collect();
        let c = match self.cfg.scheme {
            Scheme::ImexEuler => predictor,
            Scheme::ImexHeun => {
                let n1 = evaluate(self.basis, &predictor, f1, &self.cfg.nonlinearity)?.explicit;
                state
                    .c
                    .iter()
                    .zip(n0)
                    .zip(&n1)
                    .zip(&self.decay)
                    .map(|(((c, a), b), e)| e * c + 0.5 * dt * (e * a + b))
                    .collect()
            }
        };
        Ok(State { t: t1, c })
    }
}

/// Basis-sum and parametrix-route reconstructions of `u` compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionCheck {
    /// `|Σ c_j b_j - (φ²Δ₂u + Π²u)|` with `φ²Δ₂u = -φ²∇g`.
    pub composition_defect: f64,
    /// `|Σ c_j b_j - (φ²∇g + Π²u)|`, the opposite sign on the parametrix term.
    pub opposite_sign_defect: f64,
    pub u_norm: f64,
}

impl ReconstructionCheck {
    /// True when the composition-derived sign `u = -φ²∇g + Π²u` is the one that matches.
    pub fn composition_sign_matches(&self, tol: f64) -> bool {
        self.composition_defect <= tol * self.u_norm.max(f64::MIN_POSITIVE)
    }
}

pub fn reconstruction_check(basis: &GalerkinBasis, state: &State) -> ReconstructionCheck {
    let u = state.u(basis);
    let g = state.g(basis);
    let h = state.h(basis);
    let mut comp = parametrix_velocity(&g);
    let hform = Form::constant(basis.lattice(), 2, &h);
    comp.add_scaled(1.0, &hform);
    let mut opp = parametrix_velocity(&g).scaled(-1.0);
    opp.add_scaled(1.0, &hform);
    ReconstructionCheck {
        composition_defect: u.sub(&comp).l2_norm(),
        opposite_sign_defect: u.sub(&opp).l2_norm(),
        u_norm: u.l2_norm(),
    }
}

/// `u = Σ c_j b_j`, cross-checked against `φ²Δ₂u + Π²u`.
pub fn reconstruct_u(basis: &GalerkinBasis, state: &State, tol: f64) -> Result<Form> {
    let check = reconstruction_check(basis, state);
    let bound = tol * check.u_norm;
    if check.composition_defect > bound && check.composition_defect > 1e-300 {
        return Err(Error::Consistency {
            check: "reconstruct_u",
            defect: check.composition_defect,
            tolerance: bound,
        });
    }
    Ok(state.u(basis))
}

/// `p` with `rot p = (I - P²)(f - N²(u))`, `div p = 0` and zero mean.
pub fn recover_pressure(basis: &GalerkinBasis, state: &State, f: &Form, cfg: &SolverConfig) -> Result<Form> {
    let u = state.u(basis);
    let (_, p) = transverse_pressure(&f.sub(&n2(&u, &cfg.nonlinearity)?), cfg.tolerances.pressure)?;
    Ok(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: Form,
    pub p: Form,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub basis: GalerkinBasis,
    pub dt: f64,
    pub states: Vec<State>,
    pub ledger: EnergyLedger,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.final_state().t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowUpReason {
    NonFinite,
    NormGrowth,
}

/// Halted run: the trajectory up to the last valid state.
#[derive(Debug)]
pub struct BlowUp {
    pub last_valid_time: f64,
    pub reason: BlowUpReason,
    pub trajectory: Trajectory,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("blow-up ({:?}) after t = {}", .0.reason, .0.last_valid_time)]
    BlowUp(Box<BlowUp>),
    #[error(transparent)]
    Solver(#[from] Error),
}

#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    basis: GalerkinBasis,
    snapshot_stride: usize,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let lattice = config.lattice()?;
        let basis = GalerkinBasis::build(&lattice, config.basis_size)?;
        Ok(Solver {
            config,
            basis,
            snapshot_stride: 0,
        })
    }

    /// Replaces the basis (e.g. with a permutation of the default one).
    pub fn with_basis(mut self, basis: GalerkinBasis) -> Result<Self> {
        if basis.lattice() != self.basis.lattice() || basis.len() != self.config.basis_size {
            return Err(Error::InvalidConfig("basis does not match the configuration".into()));
        }
        self.basis = basis;
        Ok(self)
    }

    /// Stores `(u, p)` every `stride` steps (and at the end); `0` disables snapshots.
    pub fn with_snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn basis(&self) -> &GalerkinBasis {
        &self.basis
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn snapshot(&self, step: usize, state: &State, f: &Form) -> Result<Snapshot> {
        Ok(Snapshot {
            step,
            t: state.t,
            u: reconstruct_u(&self.basis, state, self.config.tolerances.reconstruction)?,
            p: recover_pressure(&self.basis, state, f, &self.config)?,
        })
    }

    pub fn run(&self, forcing: &dyn Forcing, u0: &Form) -> std::result::Result<Trajectory, RunError> {
        let cfg = &self.config;
        let basis = &self.basis;
        let steps = cfg.steps();
        let dt = cfg.effective_dt();
        let stepper = Stepper::new(basis, cfg, dt);

        let mut state = project_initial(u0, basis)?;
        let reference = state.coeff_norm().max(1.0);
        let mut f = forcing.at(0.0)?;
        let mut ev = evaluate(basis, &state.c, &f, &cfg.nonlinearity)?;
        let mut ledger = EnergyLedger::new(cfg.mu);
        ledger.push(0, state.t, &ev.terms);

        let mut traj = Trajectory {
            config: cfg.clone(),
            basis: basis.clone(),
            dt,
            states: vec![state.clone()],
            ledger,
            snapshots: Vec::new(),
        };
        if self.snapshot_stride > 0 {
            traj.snapshots.push(self.snapshot(0, &state, &f)?);
        }

        for n in 1..=steps {
            let t1 = if n == steps { cfg.horizon } else { n as f64 * dt };
            let f1 = forcing.at(t1)?;
            let next = stepper.advance(&state, &ev.explicit, t1, &f1)?;
            let reason = if next.c.iter().any(|x| !x.is_finite()) {
                Some(BlowUpReason::NonFinite)
            } else if next.coeff_norm() > cfg.blowup_factor * reference {
                Some(BlowUpReason::NormGrowth)
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(RunError::BlowUp(Box::new(BlowUp {
                    last_valid_time: state.t,
                    reason,
                    trajectory: traj,
                })));
            }
            f = f1;
            ev = evaluate(basis, &next.c, &f, &cfg.nonlinearity)?;
            if ev.terms.kinetic.is_nan() {
                return Err(RunError::BlowUp(Box::new(BlowUp {
                    last_valid_time: state.t,
                    reason: BlowUpReason::NonFinite,
                    trajectory: traj,
                })));
            }
            traj.ledger.push(n, next.t, &ev.terms);
            state = next;
            if self.snapshot_stride > 0 && (n % self.snapshot_stride == 0 || n == steps) {
                traj.snapshots.push(self.snapshot(n, &state, &f)?);
            }
            traj.states.push(state.clone());
        }
        Ok(traj)
    }
}

/// Convenience wrapper: build the default solver for `config` and run it.
pub fn run(config: &SolverConfig, forcing: &dyn Forcing, u0: &Form) -> std::result::Result<Trajectory, RunError> {
    Solver::new(config.clone())?.run(forcing, u0)
}
