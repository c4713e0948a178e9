//! Hodge-theory operators on the torus.
//!
//! Harmonic forms are the constant forms, so the harmonic projection keeps
//! the `k = 0` mode and the parametrix divides every other mode by `|k|^2`.
//! `P^q = d_q^* d_q φ^q + Π^q`; at `q = 2` it projects each mode onto its
//! longitudinal part `k (k·v) / |k|^2` (the rot-free fields) plus the mean.

use num_complex::Complex64;

use crate::derham::{apply_d, apply_d_star, component_count, Form};
use crate::error::{Error, Result};
use crate::spectral_grid::Lattice;

/// Default relative bound on `|P^2 F|` accepted by [`solve_pressure`].
pub const PRESSURE_TOLERANCE: f64 = 1e-8;

/// Harmonic forms of degree `q`: the constant forms, of dimension `1, 3, 3, 1`.
#[derive(Debug, Clone)]
pub struct HarmonicSpace {
    degree: usize,
    basis: Vec<Form>,
}

impl HarmonicSpace {
    pub fn new(lattice: &Lattice, degree: usize) -> Self {
        let n = component_count(degree);
        let basis = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                Form::constant(lattice, degree, &v)
            })
            .collect();
        HarmonicSpace { degree, basis }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Form] {
        &self.basis
    }
}

pub fn project_harmonic(u: &Form) -> Form {
    u.map_real_symbol(|w| if w.is_zero() { 1.0 } else { 0.0 })
}

/// `φ^q`: divides each nonzero mode by `|k|^2` and drops the harmonic part.
pub fn parametrix(v: &Form) -> Form {
    v.map_real_symbol(|w| if w.is_zero() { 0.0 } else { 1.0 / w.ksq as f64 })
}

/// `P^q = d_q^* d_q φ^q + Π^q` by composition.
pub fn helmholtz_project(w: &Form) -> Result<Form> {
    let mut out = project_harmonic(w);
    if w.degree() < 3 {
        out.add_scaled(1.0, &apply_d_star(&apply_d(&parametrix(w))?)?);
    }
    Ok(out)
}

/// Unique zero-mean, divergence-free 1-form `p` with `rot p = F`.
///
/// Requires `|P^2 F| ≤ tolerance · |F|`. The per-mode formula
/// `p̂_k = (i k × F̂_k) / |k|^2` only sees `(I - P^2) F`.
pub fn solve_pressure(f: &Form, tolerance: f64) -> Result<Form> {
    if f.degree() != 2 {
        return Err(Error::Degree {
            op: "solve_pressure",
            got: f.degree(),
            expected: "2",
        });
    }
    let proj = helmholtz_project(f)?.l2_norm();
    let bound = tolerance * f.l2_norm();
    if proj > bound {
        return Err(Error::PressurePrecondition { norm: proj, bound });
    }
    Ok(pressure_potential(f))
}

/// Transverse part `(I - P^2) w` and its pressure potential. The
/// precondition is measured against `|w|`, so a nearly rot-free `w` whose
/// transverse remainder is round-off still passes.
pub fn transverse_pressure(w: &Form, tolerance: f64) -> Result<(Form, Form)> {
    if w.degree() != 2 {
        return Err(Error::Degree {
            op: "transverse_pressure",
            got: w.degree(),
            expected: "2",
        });
    }
    let transverse = w.sub(&helmholtz_project(w)?);
    let residual = helmholtz_project(&transverse)?.l2_norm();
    let bound = tolerance * w.l2_norm();
    if residual > bound {
        return Err(Error::PressurePrecondition { norm: residual, bound });
    }
    let p = pressure_potential(&transverse);
    Ok((transverse, p))
}

/// `(i k × F̂_k) / |k|^2` without the precondition check.
fn pressure_potential(f: &Form) -> Form {
    f.map_modes(1, |w, v| {
        if w.is_zero() {
            return vec![Complex64::new(0.0, 0.0); 3];
        }
        let k = w.as_f64();
        let s = 1.0 / w.ksq as f64;
        let ik = [
            Complex64::new(0.0, k[0] * s),
            Complex64::new(0.0, k[1] * s),
            Complex64::new(0.0, k[2] * s),
        ];
        vec![
            ik[1] * v[2] - ik[2] * v[1],
            ik[2] * v[0] - ik[0] * v[2],
            ik[0] * v[1] - ik[1] * v[0],
        ]
    })
}
