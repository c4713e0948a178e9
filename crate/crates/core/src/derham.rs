//! Differential forms of degree 0..=3 on the torus and the de Rham operators.
//!
//! Degrees 1 and 2 are identified with vector fields, degrees 0 and 3 with
//! scalars. The differentials are realized as
//!
//! | operator | action       | symbol per mode        |
//! |----------|--------------|------------------------|
//! | `d_0`    | `grad`       | `i k s`                |
//! | `d_1`    | `rot`        | `i k × v`              |
//! | `d_2`    | `div`        | `i k · v`              |
//! | `d_0^*`  | `-div`       | `-i k · v`             |
//! | `d_1^*`  | `rot`        | `i k × v`              |
//! | `d_2^*`  | `-grad`      | `-i k s`               |
//!
//! so `d_q^*` is the `L^2` adjoint of `d_q` and every Hodge Laplacian
//! `Δ_q = d_q^* d_q + d_{q-1} d_{q-1}^*` acts as `|k|^2` on each mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_grid::{Lattice, ScalarField, ScalarFieldJson, WaveIndex};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn component_count(degree: usize) -> usize {
    match degree {
        0 | 3 => 1,
        _ => 3,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    degree: usize,
    components: Vec<ScalarField>,
}

impl Form {
    pub fn new(degree: usize, components: Vec<ScalarField>) -> Result<Self> {
        if degree > 3 {
            return Err(Error::Degree {
                op: "Form::new",
                got: degree,
                expected: "0..=3",
            });
        }
        if components.len() != component_count(degree) {
            return Err(Error::MalformedField(format!(
                "degree {degree} form needs {} components, got {}",
                component_count(degree),
                components.len()
            )));
        }
        for c in &components[1..] {
            components[0].ensure_same_lattice(c)?;
        }
        Ok(Form { degree, components })
    }

    pub fn zeros(lattice: &Lattice, degree: usize) -> Self {
        assert!(degree <= 3, "degree {degree} out of range");
        Form {
            degree,
            components: vec![ScalarField::zeros(lattice); component_count(degree)],
        }
    }

    pub fn scalar(degree: usize, field: ScalarField) -> Self {
        assert!(degree == 0 || degree == 3, "scalar forms have degree 0 or 3");
        Form {
            degree,
            components: vec![field],
        }
    }

    pub fn vector(degree: usize, fields: [ScalarField; 3]) -> Self {
        assert!(degree == 1 || degree == 2, "vector forms have degree 1 or 2");
        assert!(fields[0].lattice() == fields[1].lattice() && fields[1].lattice() == fields[2].lattice());
        Form {
            degree,
            components: fields.into(),
        }
    }

    /// A constant form with the given component values.
    pub fn constant(lattice: &Lattice, degree: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), component_count(degree));
        Form {
            degree,
            components: values
                .iter()
                .map(|&v| ScalarField::constant(lattice, v))
                .collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lattice(&self) -> &Lattice {
        self.components[0].lattice()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.components
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    /// The scalar payload of a degree 0 or 3 form.
    pub fn as_scalar(&self) -> &ScalarField {
        assert_eq!(self.components.len(), 1, "not a scalar form");
        &self.components[0]
    }

    pub fn ensure_compatible(&self, other: &Form, op: &'static str) -> Result<()> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                op,
                left: self.degree,
                right: other.degree,
            });
        }
        self.components[0].ensure_same_lattice(&other.components[0])
    }

    pub fn inner(&self, other: &Form) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.components.iter().map(|c| c.l2_norm_sq()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Form {
        Form {
            degree: self.degree,
            components: self.components.iter().map(|c| c.scaled(s)).collect(),
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &Form) {
        debug_assert_eq!(self.degree, other.degree);
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.add_scaled(s, b);
        }
    }

    pub fn add(&self, other: &Form) -> Form {
        let mut out = self.clone();
        out.add_scaled(1.0, other);
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn max_coeff(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.max_coeff())
            .fold(0.0, f64::max)
    }

    pub fn symmetrize(&mut self) {
        self.components.iter_mut().for_each(|c| c.symmetrize());
    }

    /// Applies a per-mode linear map to the component vector.
    pub(crate) fn map_modes(
        &self,
        out_degree: usize,
        mut f: impl FnMut(&WaveIndex, &[Complex64]) -> Vec<Complex64>,
    ) -> Form {
        let lat = self.lattice().clone();
        let out_n = component_count(out_degree);
        let mut out: Vec<Vec<Complex64>> = vec![Vec::with_capacity(lat.len()); out_n];
        let mut vals = Vec::with_capacity(3);
        for (idx, w) in lat.modes().iter().enumerate() {
            vals.clear();
            vals.extend(self.components.iter().map(|c| c.coeffs()[idx]));
            let r = f(w, &vals);
            debug_assert_eq!(r.len(), out_n);
            for (o, v) in out.iter_mut().zip(r) {
                o.push(v);
            }
        }
        Form {
            degree: out_degree,
            components: out
                .into_iter()
                .map(|c| ScalarField::from_coeffs(&lat, c).expect("lattice-sized"))
                .collect(),
        }
    }

    /// Multiplies every component by a real per-mode symbol.
    pub fn map_real_symbol(&self, mut symbol: impl FnMut(&WaveIndex) -> f64) -> Form {
        Form {
            degree: self.degree,
            components: self
                .components
                .iter()
                .map(|c| c.map_symbol(|w| Complex64::new(symbol(w), 0.0)))
                .collect(),
        }
    }
}

fn ik(w: &WaveIndex) -> [Complex64; 3] {
    let k = w.as_f64();
    [I * k[0], I * k[1], I * k[2]]
}

fn cross(a: &[Complex64; 3], b: &[Complex64]) -> Vec<Complex64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[Complex64; 3], b: &[Complex64]) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Exterior derivative `d_q`, for `q ∈ {0, 1, 2}`.
pub fn apply_d(u: &Form) -> Result<Form> {
    match u.degree {
        0 => Ok(u.map_modes(1, |w, v| ik(w).iter().map(|c| c * v[0]).collect())),
        1 => Ok(u.map_modes(2, |w, v| cross(&ik(w), v))),
        2 => Ok(u.map_modes(3, |w, v| vec![dot(&ik(w), v)])),
        got => Err(Error::Degree {
            op: "apply_d",
            got,
            expected: "0, 1 or 2",
        }),
    }
}

/// Formal adjoint `d_{q-1}^*`, mapping degree `q ∈ {1, 2, 3}` to `q - 1`.
pub fn apply_d_star(u: &Form) -> Result<Form> {
    match u.degree {
        1 => Ok(u.map_modes(0, |w, v| vec![-dot(&ik(w), v)])),
        2 => Ok(u.map_modes(1, |w, v| cross(&ik(w), v))),
        3 => Ok(u.map_modes(2, |w, v| ik(w).iter().map(|c| -c * v[0]).collect())),
        got => Err(Error::Degree {
            op: "apply_d_star",
            got,
            expected: "1, 2 or 3",
        }),
    }
}

/// Hodge Laplacian as the `|k|^2` multiplier.
pub fn laplacian(u: &Form) -> Form {
    u.map_real_symbol(|w| w.ksq as f64)
}

/// Hodge Laplacian assembled as `d^* d + d d^*`.
pub fn laplacian_by_composition(u: &Form) -> Result<Form> {
    let q = u.degree;
    let mut out = Form::zeros(u.lattice(), q);
    if q < 3 {
        out.add_scaled(1.0, &apply_d_star(&apply_d(u)?)?);
    }
    if q > 0 {
        out.add_scaled(1.0, &apply_d(&apply_d_star(u)?)?);
    }
    Ok(out)
}

/// Result of `∇^m_q`: a single form for even `m`, the pair
/// `(d_q w, d_{q-1}^* w)` for odd `m` with absent summands dropped at the ends
/// of the complex.
#[derive(Debug, Clone, PartialEq)]
pub enum FracGradient {
    Even(Form),
    Odd { up: Option<Form>, down: Option<Form> },
}

impl FracGradient {
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            FracGradient::Even(f) => f.l2_norm_sq(),
            FracGradient::Odd { up, down } => {
                up.as_ref().map_or(0.0, Form::l2_norm_sq)
                    + down.as_ref().map_or(0.0, Form::l2_norm_sq)
            }
        }
    }
}

pub fn frac_gradient(u: &Form, m: u32) -> FracGradient {
    let half = m / 2;
    let w = u.map_real_symbol(|w| (w.ksq as f64).powi(half as i32));
    if m % 2 == 0 {
        return FracGradient::Even(w);
    }
    let up = (u.degree < 3).then(|| apply_d(&w).expect("degree < 3"));
    let down = (u.degree > 0).then(|| apply_d_star(&w).expect("degree > 0"));
    FracGradient::Odd { up, down }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormJson {
    pub degree: usize,
    pub components: Vec<ScalarFieldJson>,
}

impl From<&Form> for FormJson {
    fn from(f: &Form) -> Self {
        FormJson {
            degree: f.degree,
            components: f.components.iter().map(ScalarFieldJson::from).collect(),
        }
    }
}

impl TryFrom<FormJson> for Form {
    type Error = Error;

    fn try_from(j: FormJson) -> Result<Form> {
        let mut comps = Vec::with_capacity(j.components.len());
        let mut lattice: Option<Lattice> = None;
        for c in j.components {
            let f = c.into_field(lattice.as_ref())?;
            lattice.get_or_insert_with(|| f.lattice().clone());
            comps.push(f);
        }
        if comps.is_empty() {
            return Err(Error::MalformedField("form without components".into()));
        }
        Form::new(j.degree, comps)
    }
}

impl Serialize for Form {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FormJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Form {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FormJson::deserialize(d)?;
        Form::try_from(j).map_err(serde::de::Error::custom)
    }
}
