//! Zero-order bilinear operators and the quadratic nonlinearity at degree 2.
//!
//! `M_{2,1}(div u, u) = (div u) u` and, by default, `M_{2,2}(u, v) = ½ u × v`,
//! giving `N^2(u) = (div u) u + rot M_{2,2}(u, u)`. Since `u × u = 0` the rot
//! term vanishes identically for the default kind. All products are taken
//! pseudospectrally on the lattice grid with the lattice's dealias rule.

use serde::{Deserialize, Serialize};

use crate::derham::{apply_d, Form};
use crate::error::{Error, Result};
use crate::norms::sobolev_norm;
use crate::spectral_grid::{pointwise_product, product_from_samples, GridSamples, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearityKind {
    /// `N^2` as defined.
    #[default]
    Full,
    /// `N^2 ≡ 0`: the linear (heat) limit.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum M22Kind {
    #[default]
    HalfCross,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    pub kind: NonlinearityKind,
    pub m22: M22Kind,
    /// Pointwise bound constant for `M_{2,1}`.
    pub c21: f64,
    /// Pointwise bound constant for `M_{2,2}`.
    pub c22: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        NonlinearityConfig {
            kind: NonlinearityKind::Full,
            m22: M22Kind::HalfCross,
            c21: 1.0,
            c22: 0.5,
        }
    }
}

impl NonlinearityConfig {
    pub fn is_active(&self) -> bool {
        self.kind == NonlinearityKind::Full
    }
}

fn check_degree(u: &Form, degree: usize, op: &'static str) -> Result<()> {
    if u.degree() != degree {
        return Err(Error::Degree {
            op,
            got: u.degree(),
            expected: if degree == 2 { "2" } else { "3" },
        });
    }
    Ok(())
}

/// `M_{2,1}(a, u) = a·u` for a 3-form `a` and a 2-form `u`.
pub fn m21(dqu: &Form, u: &Form) -> Result<Form> {
    check_degree(dqu, 3, "m21")?;
    check_degree(u, 2, "m21")?;
    let a = dqu.as_scalar();
    let comps = u
        .components()
        .iter()
        .map(|c| pointwise_product(a, c))
        .collect::<Result<Vec<_>>>()?;
    Form::new(2, comps)
}

/// `M_{2,2}(u, v)`, a 1-form.
pub fn m22(u: &Form, v: &Form, cfg: &NonlinearityConfig) -> Result<Form> {
    check_degree(u, 2, "m22")?;
    check_degree(v, 2, "m22")?;
    u.component(0).ensure_same_lattice(v.component(0))?;
    let lat = u.lattice();
    match cfg.m22 {
        M22Kind::Zero => Ok(Form::zeros(lat, 1)),
        M22Kind::HalfCross => {
            let ug = grids(u)?;
            let vg = grids(v)?;
            let n = ug[0].n;
            let len = ug[0].values.len();
            let mut out = vec![vec![0.0; len]; 3];
            for p in 0..len {
                let a = [ug[0].values[p], ug[1].values[p], ug[2].values[p]];
                let b = [vg[0].values[p], vg[1].values[p], vg[2].values[p]];
                out[0][p] = 0.5 * (a[1] * b[2] - a[2] * b[1]);
                out[1][p] = 0.5 * (a[2] * b[0] - a[0] * b[2]);
                out[2][p] = 0.5 * (a[0] * b[1] - a[1] * b[0]);
            }
            let comps = out
                .into_iter()
                .map(|values| product_from_samples(lat, &GridSamples { n, values }))
                .collect::<Result<Vec<_>>>()?;
            Form::new(1, comps)
        }
    }
}

fn grids(u: &Form) -> Result<Vec<GridSamples>> {
    u.components().iter().map(ScalarField::to_grid).collect()
}

/// `N^2(u) = M_{2,1}(div u, u) + rot M_{2,2}(u, u)`.
pub fn n2(u: &Form, cfg: &NonlinearityConfig) -> Result<Form> {
    check_degree(u, 2, "n2")?;
    if !cfg.is_active() {
        return Ok(Form::zeros(u.lattice(), 2));
    }
    let mut out = m21(&apply_d(u)?, u)?;
    out.add_scaled(1.0, &apply_d(&m22(u, u, cfg)?)?);
    Ok(out)
}

/// Symmetrized bilinear form
/// `B(w, v) = M_{2,1}(div w, v) + M_{2,1}(div v, w) + rot(M_{2,2}(w, v) + M_{2,2}(v, w))`.
///
/// Under these definitions `B(u, u) = 2 N^2(u)`.
pub fn bilinearize(w: &Form, v: &Form, cfg: &NonlinearityConfig) -> Result<Form> {
    check_degree(w, 2, "bilinearize")?;
    check_degree(v, 2, "bilinearize")?;
    w.ensure_compatible(v, "bilinearize")?;
    if !cfg.is_active() {
        return Ok(Form::zeros(w.lattice(), 2));
    }
    let mut out = m21(&apply_d(w)?, v)?;
    out.add_scaled(1.0, &m21(&apply_d(v)?, w)?);
    let mut cross = m22(w, v, cfg)?;
    cross.add_scaled(1.0, &m22(v, w, cfg)?);
    out.add_scaled(1.0, &apply_d(&cross)?);
    Ok(out)
}

/// Sobolev orders used to pair `|B(w, v)|` against `|w| |v|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SobolevPairing {
    pub output_order: u32,
    pub input_order: u32,
}

impl SobolevPairing {
    /// `H^k` for the output against `H^{k+2}` for the inputs.
    pub fn with_loss_two(k: u32) -> Self {
        SobolevPairing {
            output_order: k,
            input_order: k + 2,
        }
    }
}

/// Input norms for [`audit_continuity_bound`], computed in the pairing's input order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairNorms {
    pub w: f64,
    pub v: f64,
}

impl PairNorms {
    pub fn compute(w: &Form, v: &Form, pairing: SobolevPairing) -> Self {
        PairNorms {
            w: sobolev_norm(w, pairing.input_order),
            v: sobolev_norm(v, pairing.input_order),
        }
    }
}

/// `|B(w, v)| / (|w| |v|)`; the empirical continuity constant for this pair.
pub fn audit_continuity_bound(
    w: &Form,
    v: &Form,
    norms: &PairNorms,
    pairing: SobolevPairing,
    cfg: &NonlinearityConfig,
) -> Result<f64> {
    let denom = norms.w * norms.v;
    if denom == 0.0 {
        return Err(Error::ZeroNorm("audit_continuity_bound"));
    }
    let b = bilinearize(w, v, cfg)?;
    Ok(sobolev_norm(&b, pairing.output_order) / denom)
}

/// Pointwise ratios `|M(a, b)| / (|a| |b|)` maximized over grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundAudit {
    pub m21_ratio: f64,
    pub m22_ratio: f64,
}

impl BoundAudit {
    pub fn holds(&self, cfg: &NonlinearityConfig) -> bool {
        let slack = 1.0 + 1e-12;
        self.m21_ratio <= cfg.c21 * slack && self.m22_ratio <= cfg.c22 * slack
    }
}

/// Evaluates both zero-order operators pointwise on grid samples of `a`, `u`, `v`.
pub fn audit_pointwise_bounds(
    a: &Form,
    u: &Form,
    v: &Form,
    cfg: &NonlinearityConfig,
) -> Result<BoundAudit> {
    check_degree(a, 3, "audit_pointwise_bounds")?;
    check_degree(u, 2, "audit_pointwise_bounds")?;
    check_degree(v, 2, "audit_pointwise_bounds")?;
    let ag = a.as_scalar().to_grid()?;
    let ug = grids(u)?;
    let vg = grids(v)?;
    let mut r21: f64 = 0.0;
    let mut r22: f64 = 0.0;
    for p in 0..ag.values.len() {
        let s = ag.values[p];
        let x = [ug[0].values[p], ug[1].values[p], ug[2].values[p]];
        let y = [vg[0].values[p], vg[1].values[p], vg[2].values[p]];
        let nx = norm3(&x);
        let ny = norm3(&y);
        if s != 0.0 && ny > 0.0 {
            let m = norm3(&[s * y[0], s * y[1], s * y[2]]);
            r21 = r21.max(m / (s.abs() * ny));
        }
        if nx > 0.0 && ny > 0.0 {
            let m = match cfg.m22 {
                M22Kind::Zero => 0.0,
                M22Kind::HalfCross => {
                    0.5 * norm3(&[
                        x[1] * y[2] - x[2] * y[1],
                        x[2] * y[0] - x[0] * y[2],
                        x[0] * y[1] - x[1] * y[0],
                    ])
                }
            };
            r22 = r22.max(m / (nx * ny));
        }
    }
    Ok(BoundAudit {
        m21_ratio: r21,
        m22_ratio: r22,
    })
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}
