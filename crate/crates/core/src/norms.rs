//! Norms and energy functionals.
//!
//! All norms carry the torus volume `(2π)^3` explicitly: for a form `u`,
//! `|∇^m u|^2 = (2π)^3 Σ_k |k|^{2m} |û_k|^2`.

use serde::{Deserialize, Serialize};

use crate::derham::{frac_gradient, Form};
use crate::error::{Error, Result};
use crate::galerkin::{PairingTerms, Trajectory};
use crate::spectral_grid::{ScalarField, VOLUME};

pub fn l2_norm(u: &Form) -> f64 {
    u.l2_norm()
}

/// `L^2` norm by grid quadrature, the independent route to Parseval.
pub fn l2_norm_quadrature(u: &Form) -> Result<f64> {
    let mut s = 0.0;
    for c in u.components() {
        s += c.to_grid()?.l2_norm_sq();
    }
    Ok(s.sqrt())
}

fn weighted_sq(u: &Form, mut weight: impl FnMut(f64) -> f64) -> f64 {
    let modes = u.lattice().modes();
    let mut s = 0.0;
    for c in u.components() {
        for (w, z) in modes.iter().zip(c.coeffs()) {
            s += weight(w.ksq as f64) * z.norm_sqr();
        }
    }
    VOLUME * s
}

/// `|∇^m u|^2` by the `|k|^{2m}` multiplier.
pub fn gradient_norm_sq(u: &Form, m: u32) -> f64 {
    weighted_sq(u, |k| k.powi(m as i32))
}

/// `(Σ_{m ≤ s} |∇^m u|^2)^{1/2}`.
pub fn sobolev_norm(u: &Form, s: u32) -> f64 {
    weighted_sq(u, |k| (0..=s).map(|m| k.powi(m as i32)).sum()).sqrt()
}

/// Same as [`sobolev_norm`] but through the fractional gradients themselves.
pub fn sobolev_norm_by_gradients(u: &Form, s: u32) -> f64 {
    (0..=s).map(|m| frac_gradient(u, m).l2_norm_sq()).sum::<f64>().sqrt()
}

/// `Σ (1 + |k|^2)^{-1} |·|^2`, the dual of `H^1`.
pub fn dual_h1_norm_sq(f: &ScalarField) -> f64 {
    VOLUME
        * f.lattice()
            .modes()
            .iter()
            .zip(f.coeffs())
            .map(|(w, z)| z.norm_sqr() / (1.0 + w.ksq as f64))
            .sum::<f64>()
}

pub fn dual_h1_norm(u: &Form) -> f64 {
    u.components().iter().map(dual_h1_norm_sq).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub t: f64,
    /// Pairings at this state.
    pub terms: PairingTerms,
    /// `2μ |∇g|^2 dt` over the preceding step (trapezoid).
    pub dissipation_increment: f64,
    pub forcing_increment: f64,
    pub quadratic_increment: f64,
    pub cubic_increment: f64,
    pub transport_increment: f64,
    /// `2μ ∫_0^t |∇g|^2`
    pub dissipation: f64,
    /// `∫_0^t ⟨div f - g^2 - ∇g·φ²∇₃g - ∇g·Π²u, g⟩`
    pub work: f64,
    /// `|g(t)|^2 + 2μ∫|∇g|^2 - |g(0)|^2 - 2∫⟨…, g⟩`
    pub residual: f64,
}

/// Per-step accounting of the integrated energy identity for `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub mu: f64,
    pub entries: Vec<LedgerEntry>,
}

impl EnergyLedger {
    pub fn new(mu: f64) -> Self {
        EnergyLedger {
            mu,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, step: usize, t: f64, terms: &PairingTerms) {
        let entry = match self.entries.last() {
            None => LedgerEntry {
                step,
                t,
                terms: *terms,
                dissipation_increment: 0.0,
                forcing_increment: 0.0,
                quadratic_increment: 0.0,
                cubic_increment: 0.0,
                transport_increment: 0.0,
                dissipation: 0.0,
                work: 0.0,
                residual: 0.0,
            },
            Some(prev) => {
                let h = 0.5 * (t - prev.t);
                let a = &prev.terms;
                let b = terms;
                let dissipation_increment = h * 2.0 * self.mu * (a.grad_sq + b.grad_sq);
                let forcing_increment = h * (a.forcing + b.forcing);
                let quadratic_increment = h * (a.quadratic + b.quadratic);
                let cubic_increment = h * (a.cubic + b.cubic);
                let transport_increment = h * (a.transport + b.transport);
                let dissipation = prev.dissipation + dissipation_increment;
                let work = prev.work + forcing_increment - quadratic_increment - cubic_increment - transport_increment;
                let kinetic0 = self.entries[0].terms.kinetic;
                LedgerEntry {
                    step,
                    t,
                    terms: *terms,
                    dissipation_increment,
                    forcing_increment,
                    quadratic_increment,
                    cubic_increment,
                    transport_increment,
                    dissipation,
                    work,
                    residual: terms.kinetic + dissipation - kinetic0 - 2.0 * work,
                }
            }
        };
        self.entries.push(entry);
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.residual).collect()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.residual.abs()))
    }

    /// `1 + max |g|^2 + 2μ∫|∇g|^2`, the natural size of the identity.
    pub fn scale(&self) -> f64 {
        let kin = self.entries.iter().fold(0.0f64, |m, e| m.max(e.terms.kinetic));
        1.0 + kin + self.entries.last().map_or(0.0, |e| e.dissipation)
    }
}

/// Empirical check of the Gronwall-side majorant
/// `|g|^2 + μ∫|∇g|^2 ≤ |g_0|^2 + (4/μ)∫|div f|_*^2 + (μ/4 + 2c)∫|g|^2 + 2c∫|g|^6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantReport {
    /// Smallest `c ≥ 0` for which the bound holds at every step.
    pub min_constant: f64,
    /// Largest `lhs - rhs` at `c = 0`.
    pub excess_at_zero: f64,
    pub sup_kinetic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub ledger: EnergyLedger,
    pub max_abs_residual: f64,
    pub scale: f64,
    pub relative_residual: f64,
    pub majorant: MajorantReport,
}

pub fn majorant(ledger: &EnergyLedger) -> MajorantReport {
    let mu = ledger.mu;
    let Some(first) = ledger.entries.first() else {
        return MajorantReport {
            min_constant: 0.0,
            excess_at_zero: 0.0,
            sup_kinetic: 0.0,
        };
    };
    let g0 = first.terms.kinetic;
    let (mut grad, mut dual, mut kin, mut six) = (0.0, 0.0, 0.0, 0.0);
    let mut min_constant: f64 = 0.0;
    let mut excess: f64 = f64::NEG_INFINITY;
    let mut sup: f64 = g0;
    for w in ledger.entries.windows(2) {
        let (a, b) = (&w[0].terms, &w[1].terms);
        let h = 0.5 * (w[1].t - w[0].t);
        grad += h * (a.grad_sq + b.grad_sq);
        dual += h * (a.forcing_dual_sq + b.forcing_dual_sq);
        kin += h * (a.kinetic + b.kinetic);
        six += h * (a.kinetic.powi(3) + b.kinetic.powi(3));
        sup = sup.max(b.kinetic);
        let lhs = b.kinetic + mu * grad;
        let base = g0 + 4.0 / mu * dual + 0.25 * mu * kin;
        let gap = lhs - base;
        excess = excess.max(gap);
        let weight = 2.0 * kin + 2.0 * six;
        if gap > 0.0 && weight > 0.0 {
            min_constant = min_constant.max(gap / weight);
        }
    }
    MajorantReport {
        min_constant,
        excess_at_zero: if excess.is_finite() { excess } else { 0.0 },
        sup_kinetic: sup,
    }
}

/// Re-examines the ledger stored with a trajectory.
pub fn audit_energy(traj: &Trajectory) -> EnergyAudit {
    let ledger = traj.ledger.clone();
    let max_abs_residual = ledger.max_abs_residual();
    let scale = ledger.scale();
    EnergyAudit {
        majorant: majorant(&ledger),
        max_abs_residual,
        scale,
        relative_residual: max_abs_residual / scale,
        ledger,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BochnerTerm {
    pub l: u32,
    pub m: u32,
    pub j: u32,
    /// `sup_t |∇^{l+m} ∂_t^j u|^2`
    pub sup_sq: f64,
    /// `∫ |∇^{l+m+1} ∂_t^j u|^2 dt`
    pub integral_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerReport {
    pub k: u32,
    pub s: u32,
    pub volume: f64,
    /// Accuracy order of the time differences (centered inside, one-sided at the ends).
    pub time_difference_order: u32,
    pub terms: Vec<BochnerTerm>,
}

impl BochnerReport {
    /// Sum of every sup and integral term: the squared composite norm.
    pub fn total_sq(&self) -> f64 {
        self.terms.iter().map(|t| t.sup_sq + t.integral_sq).sum()
    }

    pub fn term(&self, l: u32, m: u32, j: u32) -> Option<&BochnerTerm> {
        self.terms.iter().find(|t| (t.l, t.m, t.j) == (l, m, j))
    }
}

/// `{(l, m, j) : m + 2j ≤ 2s, 0 ≤ l ≤ k}`.
pub fn bochner_index_set(k: u32, s: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for l in 0..=k {
        for j in 0..=s {
            for m in 0..=(2 * s - 2 * j) {
                out.push((l, m, j));
            }
        }
    }
    out
}

/// Time series of real coefficients `x_i` with `|∇^n x|^2 = Σ w_i λ_i^n x_i^2`.
#[derive(Debug, Clone)]
pub struct SpectralSeries {
    pub times: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

impl SpectralSeries {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let eigenvalues = traj.basis.eigenvalues();
        SpectralSeries {
            times: traj.times(),
            weights: vec![1.0; eigenvalues.len()],
            eigenvalues,
            samples: traj.states.iter().map(|s| s.c.clone()).collect(),
        }
    }

    /// Real and imaginary parts of every coefficient, weighted by the volume.
    pub fn from_forms(times: &[f64], forms: &[Form]) -> Result<Self> {
        let first = forms.first().ok_or(Error::SnapshotDensity {
            have: 0,
            need: 1,
            order: 0,
        })?;
        let mut eigenvalues = Vec::new();
        for _ in first.components() {
            for w in first.lattice().modes() {
                eigenvalues.push(w.ksq as f64);
                eigenvalues.push(w.ksq as f64);
            }
        }
        let samples = forms
            .iter()
            .map(|f| {
                f.components()
                    .iter()
                    .flat_map(|c| c.coeffs().iter().flat_map(|z| [z.re, z.im]))
                    .collect()
            })
            .collect();
        Ok(SpectralSeries {
            times: times.to_vec(),
            weights: vec![VOLUME; eigenvalues.len()],
            eigenvalues,
            samples,
        })
    }

    fn norm_sq(&self, x: &[f64], n: u32) -> f64 {
        x.iter()
            .zip(&self.eigenvalues)
            .zip(&self.weights)
            .map(|((x, l), w)| w * l.powi(n as i32) * x * x)
            .sum()
    }
}

/// Second-order first difference on uniformly spaced samples.
fn time_derivative(series: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let n = series.len();
    let dim = series[0].len();
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let x = |k: usize| series[k][d];
                    if i == 0 {
                        (-3.0 * x(0) + 4.0 * x(1) - x(2)) / (2.0 * dt)
                    } else if i == n - 1 {
                        (3.0 * x(n - 1) - 4.0 * x(n - 2) + x(n - 3)) / (2.0 * dt)
                    } else {
                        (x(i + 1) - x(i - 1)) / (2.0 * dt)
                    }
                })
                .collect()
        })
        .collect()
}

pub fn bochner_from_series(series: &SpectralSeries, k: u32, s: u32) -> Result<BochnerReport> {
    let n = series.samples.len();
    if n != series.times.len() {
        return Err(Error::InvalidConfig("series times and samples differ in length".into()));
    }
    if n == 0 {
        return Err(Error::SnapshotDensity {
            have: 0,
            need: 1,
            order: 0,
        });
    }
    if s > 0 && n < (2 * s as usize + 1).max(3) {
        return Err(Error::SnapshotDensity {
            have: n,
            need: (2 * s as usize + 1).max(3),
            order: s as usize,
        });
    }
    let dt = if n > 1 {
        (series.times[n - 1] - series.times[0]) / (n - 1) as f64
    } else {
        0.0
    };
    let mut derivs = vec![series.samples.clone()];
    for _ in 0..s {
        let next = time_derivative(derivs.last().unwrap(), dt);
        derivs.push(next);
    }
    let terms = bochner_index_set(k, s)
        .into_iter()
        .map(|(l, m, j)| {
            let d = &derivs[j as usize];
            let sup_sq = d.iter().map(|x| series.norm_sq(x, l + m)).fold(0.0, f64::max);
            let vals: Vec<f64> = d.iter().map(|x| series.norm_sq(x, l + m + 1)).collect();
            let integral_sq = series
                .times
                .windows(2)
                .zip(vals.windows(2))
                .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
                .sum();
            BochnerTerm {
                l,
                m,
                j,
                sup_sq,
                integral_sq,
            }
        })
        .collect();
    Ok(BochnerReport {
        k,
        s,
        volume: VOLUME,
        time_difference_order: 2,
        terms,
    })
}

/// Velocity norm `B^{k,2s,s}` over the stored states of `traj`.
pub fn bochner_norm(traj: &Trajectory, k: u32, s: u32) -> Result<BochnerReport> {
    bochner_from_series(&SpectralSeries::from_trajectory(traj), k, s)
}

/// Same composite for an arbitrary series of forms (forcing, or `rot p` for the pressure norm).
pub fn bochner_norm_forms(times: &[f64], forms: &[Form], k: u32, s: u32) -> Result<BochnerReport> {
    bochner_from_series(&SpectralSeries::from_forms(times, forms)?, k, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_grid::Lattice;
    use num_complex::Complex64;

    #[test]
    fn constant_norm_is_volume_scaled() {
        let l = Lattice::new(2, true).unwrap();
        let c = Form::constant(&l, 2, &[3.0, 0.0, 4.0]);
        assert!((l2_norm(&c) - 5.0 * VOLUME.sqrt()).abs() < 1e-12);
        assert!((l2_norm_quadrature(&c).unwrap() - l2_norm(&c)).abs() < 1e-10);
        assert_eq!(l2_norm(&Form::zeros(&l, 1)), 0.0);
    }

    #[test]
    fn h1_single_mode() {
        let l = Lattice::new(3, true).unwrap();
        let mut f = ScalarField::zeros(&l);
        f.set_pair([1, 2, 0], Complex64::new(0.5, 0.25));
        let u = Form::scalar(0, f);
        let e = l2_norm(&u).powi(2);
        assert!((sobolev_norm(&u, 1).powi(2) - 6.0 * e).abs() < 1e-12 * e);
        assert!((sobolev_norm(&u, 0) - l2_norm(&u)).abs() < 1e-15);
        assert!((sobolev_norm_by_gradients(&u, 3) - sobolev_norm(&u, 3)).abs() < 1e-12 * sobolev_norm(&u, 3));
    }

    #[test]
    fn index_set_counts() {
        assert_eq!(bochner_index_set(0, 0).len(), 1);
        // s = 1: j = 0 gives m ∈ 0..=2, j = 1 gives m = 0
        assert_eq!(bochner_index_set(0, 1).len(), 4);
        assert_eq!(bochner_index_set(2, 1).len(), 12);
    }

    #[test]
    fn time_difference_is_exact_on_quadratics() {
        let times: Vec<f64> = (0..6).map(|i| 0.1 * i as f64).collect();
        let samples: Vec<Vec<f64>> = times.iter().map(|t| vec![t * t]).collect();
        let d = time_derivative(&samples, 0.1);
        for (t, v) in times.iter().zip(&d) {
            assert!((v[0] - 2.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn sparse_series_is_rejected() {
        let series = SpectralSeries {
            times: vec![0.0, 1.0],
            eigenvalues: vec![1.0],
            weights: vec![1.0],
            samples: vec![vec![1.0], vec![1.0]],
        };
        assert!(matches!(
            bochner_from_series(&series, 0, 1),
            Err(Error::SnapshotDensity { have: 2, .. })
        ));
        assert!(bochner_from_series(&series, 0, 0).is_ok());
    }

    #[test]
    fn ledger_trapezoid_by_hand() {
        let mut led = EnergyLedger::new(0.5);
        let a = PairingTerms {
            kinetic: 2.0,
            grad_sq: 1.0,
            forcing: 1.0,
            ..Default::default()
        };
        let b = PairingTerms {
            kinetic: 2.5,
            grad_sq: 3.0,
            forcing: 2.0,
            ..Default::default()
        };
        led.push(0, 0.0, &a);
        led.push(1, 0.5, &b);
        let e = led.entries[1];
        assert!((e.dissipation - 0.25 * (1.0 + 3.0)).abs() < 1e-15);
        assert!((e.work - 0.25 * 3.0).abs() < 1e-15);
        assert!((e.residual - (2.5 + 1.0 - 2.0 - 1.5)).abs() < 1e-15);
    }
}
