//! Manufactured solutions: a chosen rot-free `u_exact(t)` and divergence-free
//! `p(t)`, with `f = ∂_t u + μΔ₂u + N²(u) + rot p` computed spectrally.
//!
//! * `static`: constant `u`, so `f = 0`, `p = 0`.
//! * `heat-mode`: `u = a_0 e^{-μ|k|^2 t} ∇cos(k·x)` with `k = (1,1,0)`;
//!   `f = N²(u)` (zero when the nonlinearity is off).
//! * `nonlinear`: `u = a(t) ∇cos x_1 + c(t) ∇sin(x_2 + x_3) + h_0 + t d`
//!   with `p = β(t) (0, 0, sin x_1)`.

use num_complex::Complex64;

use crate::derham::{apply_d, laplacian, Form};
use crate::error::{Error, Result};
use crate::galerkin::{Forcing, Parity};
use crate::nonlinear::{n2, NonlinearityConfig};
use crate::spectral_grid::{Lattice, ScalarField, WaveIndex};

pub const CASES: [&str; 3] = ["static", "heat-mode", "nonlinear"];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    Static,
    HeatMode,
    Nonlinear,
}

#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    name: &'static str,
    profile: Profile,
    lattice: Lattice,
    mu: f64,
    quadratic: Option<QuadraticTable>,
}

/// `N²(Σ α_i v_i) = Σ α_i² N²(v_i) + Σ_{i<j} α_i α_j B_ij` for fixed `v_i`,
/// with `B_ij = N²(v_i + v_j) - N²(v_i) - N²(v_j)`.
#[derive(Debug, Clone)]
struct QuadraticTable {
    diag: Vec<Form>,
    cross: Vec<(usize, usize, Form)>,
}

impl QuadraticTable {
    fn new(fields: &[Form], nl: &NonlinearityConfig) -> Result<Self> {
        let diag: Vec<Form> = fields.iter().map(|v| n2(v, nl)).collect::<Result<_>>()?;
        let mut cross = Vec::new();
        for i in 0..fields.len() {
            for j in i + 1..fields.len() {
                let mut b = n2(&fields[i].add(&fields[j]), nl)?;
                b.add_scaled(-1.0, &diag[i]);
                b.add_scaled(-1.0, &diag[j]);
                cross.push((i, j, b));
            }
        }
        Ok(QuadraticTable { diag, cross })
    }

    fn eval(&self, alpha: &[f64]) -> Form {
        let mut out = self.diag[0].scaled(alpha[0] * alpha[0]);
        for (d, a) in self.diag.iter().zip(alpha).skip(1) {
            out.add_scaled(a * a, d);
        }
        for (i, j, b) in &self.cross {
            out.add_scaled(alpha[*i] * alpha[*j], b);
        }
        out
    }
}

const STATIC_VALUE: [f64; 3] = [0.3, -0.2, 0.5];
const HEAT_K: [i32; 3] = [1, 1, 0];
const HEAT_AMPLITUDE: f64 = 0.4;
const H0: [f64; 3] = [0.2, -0.1, 0.05];
const DRIFT: [f64; 3] = [0.1, 0.0, -0.2];

/// `amplitude · ∇ψ` with `ψ = cos(k·x)` or `sin(k·x)`.
pub fn gradient_of_trig(lattice: &Lattice, k: [i32; 3], parity: Parity, amplitude: f64) -> Result<Form> {
    let w = WaveIndex::new(k);
    if w.is_zero() || !lattice.in_band(&w) {
        return Err(Error::InvalidConfig(format!(
            "mode {k:?} is not a nonzero wave vector within the dealias band {}",
            lattice.dealias_bound()
        )));
    }
    let psi = match parity {
        Parity::Cos => Complex64::new(0.5 * amplitude, 0.0),
        Parity::Sin => Complex64::new(0.0, -0.5 * amplitude),
    };
    let kf = w.as_f64();
    let comps: Vec<ScalarField> = (0..3)
        .map(|d| {
            let mut f = ScalarField::zeros(lattice);
            f.set_pair(k, Complex64::new(0.0, kf[d]) * psi);
            f
        })
        .collect();
    Form::new(2, comps)
}

pub fn manufactured_case(
    name: &str,
    lattice: &Lattice,
    mu: f64,
    nonlinearity: &NonlinearityConfig,
) -> Result<ManufacturedCase> {
    let (name, profile) = match name {
        "static" => ("static", Profile::Static),
        "heat-mode" => ("heat-mode", Profile::HeatMode),
        "nonlinear" => ("nonlinear", Profile::Nonlinear),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown manufactured case `{other}` (known: {})",
                CASES.join(", ")
            )))
        }
    };
    let mut case = ManufacturedCase {
        name,
        profile,
        lattice: lattice.clone(),
        mu,
        quadratic: None,
    };
    case.u_exact(0.0)?;
    if nonlinearity.is_active() {
        case.quadratic = Some(QuadraticTable::new(&case.fields()?, nonlinearity)?);
    }
    Ok(case)
}

impl ManufacturedCase {
    pub fn name(&self) -> &'static str {
        self.name
    }

    fn nonlinear_coeffs(t: f64) -> ([f64; 2], [f64; 2], f64) {
        let a = 0.5 * (1.0 + 0.5 * (3.0 * t).sin());
        let da = 0.75 * (3.0 * t).cos();
        let c = 0.3 * (2.0 * t).cos();
        let dc = -0.6 * (2.0 * t).sin();
        let beta = 0.3 * t.cos();
        ([a, da], [c, dc], beta)
    }

    /// Fixed fields `v_i` with `u_exact(t) = Σ α_i(t) v_i`.
    fn fields(&self) -> Result<Vec<Form>> {
        let l = &self.lattice;
        let units = (0..3).map(|a| {
            let mut e = [0.0; 3];
            e[a] = 1.0;
            Form::constant(l, 2, &e)
        });
        Ok(match self.profile {
            Profile::Static => units.collect(),
            Profile::HeatMode => vec![gradient_of_trig(l, HEAT_K, Parity::Cos, 1.0)?],
            Profile::Nonlinear => {
                let mut v = vec![
                    gradient_of_trig(l, [1, 0, 0], Parity::Cos, 1.0)?,
                    gradient_of_trig(l, [0, 1, 1], Parity::Sin, 1.0)?,
                ];
                v.extend(units);
                v
            }
        })
    }

    fn amplitudes(&self, t: f64) -> Vec<f64> {
        match self.profile {
            Profile::Static => STATIC_VALUE.to_vec(),
            Profile::HeatMode => {
                let ksq: i32 = HEAT_K.iter().map(|k| k * k).sum();
                vec![HEAT_AMPLITUDE * (-self.mu * ksq as f64 * t).exp()]
            }
            Profile::Nonlinear => {
                let ([a, _], [c, _], _) = Self::nonlinear_coeffs(t);
                let mut v = vec![a, c];
                v.extend(H0.iter().zip(DRIFT).map(|(h, d)| h + t * d));
                v
            }
        }
    }

    pub fn u_exact(&self, t: f64) -> Result<Form> {
        let l = &self.lattice;
        match self.profile {
            Profile::Static => Ok(Form::constant(l, 2, &STATIC_VALUE)),
            Profile::HeatMode => {
                let ksq: i32 = HEAT_K.iter().map(|k| k * k).sum();
                let a = HEAT_AMPLITUDE * (-self.mu * ksq as f64 * t).exp();
                gradient_of_trig(l, HEAT_K, Parity::Cos, a)
            }
            Profile::Nonlinear => {
                let ([a, _], [c, _], _) = Self::nonlinear_coeffs(t);
                let h: Vec<f64> = H0.iter().zip(DRIFT).map(|(h, d)| h + t * d).collect();
                let mut u = gradient_of_trig(l, [1, 0, 0], Parity::Cos, a)?;
                u.add_scaled(1.0, &gradient_of_trig(l, [0, 1, 1], Parity::Sin, c)?);
                u.add_scaled(1.0, &Form::constant(l, 2, &h));
                Ok(u)
            }
        }
    }

    pub fn u_dot(&self, t: f64) -> Result<Form> {
        let l = &self.lattice;
        match self.profile {
            Profile::Static => Ok(Form::zeros(l, 2)),
            Profile::HeatMode => Ok(laplacian(&self.u_exact(t)?).scaled(-self.mu)),
            Profile::Nonlinear => {
                let ([_, da], [_, dc], _) = Self::nonlinear_coeffs(t);
                let mut u = gradient_of_trig(l, [1, 0, 0], Parity::Cos, da)?;
                u.add_scaled(1.0, &gradient_of_trig(l, [0, 1, 1], Parity::Sin, dc)?);
                u.add_scaled(1.0, &Form::constant(l, 2, &DRIFT));
                Ok(u)
            }
        }
    }

    pub fn pressure(&self, t: f64) -> Form {
        let l = &self.lattice;
        match self.profile {
            Profile::Static | Profile::HeatMode => Form::zeros(l, 1),
            Profile::Nonlinear => {
                let (_, _, beta) = Self::nonlinear_coeffs(t);
                let z = ScalarField::zeros(l);
                let mut p3 = ScalarField::zeros(l);
                p3.set_pair([1, 0, 0], Complex64::new(0.0, -0.5 * beta));
                Form::vector(1, [z.clone(), z, p3])
            }
        }
    }

    pub fn forcing(&self, t: f64) -> Result<Form> {
        let u = self.u_exact(t)?;
        let mut f = self.u_dot(t)?;
        f.add_scaled(self.mu, &laplacian(&u));
        if let Some(q) = &self.quadratic {
            f.add_scaled(1.0, &q.eval(&self.amplitudes(t)));
        }
        f.add_scaled(1.0, &apply_d(&self.pressure(t))?);
        Ok(f)
    }
}

impl Forcing for ManufacturedCase {
    fn at(&self, t: f64) -> Result<Form> {
        self.forcing(t)
    }
}
