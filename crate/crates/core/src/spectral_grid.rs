//! Truncated Fourier lattice on the flat torus `(R / 2πZ)^3`.
//!
//! A real field is stored as `u(x) = Σ_k û_k e^{i k·x}` over every integer
//! wavevector with `|k|_∞ ≤ K`, with the Hermitian pairing `û_{-k} = conj(û_k)`
//! kept explicitly. Grid samples live on an `n^3` collocation grid with
//! `n` the first 5-smooth integer `≥ 3K + 1`, fine enough that the product of any two lattice fields is
//! resolved without aliasing onto the lattice. With the 2/3 rule active,
//! product outputs are additionally cut to `|k|_∞ ≤ floor(2K/3)`.
//!
//! Mode order is lexicographic in `(k1, k2, k3)`, each running from `-K` to
//! `K`. Under this order the mode `-k` sits at index `len - 1 - index(k)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(2π)^3`, the volume of the torus.
pub const VOLUME: f64 = 8.0 * PI * PI * PI;

/// Relative tolerance for the Hermitian-symmetry check on grid transforms.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveIndex {
    pub k: [i32; 3],
    pub ksq: u32,
}

impl WaveIndex {
    pub fn new(k: [i32; 3]) -> Self {
        let ksq = k.iter().map(|&c| (c * c) as u32).sum();
        WaveIndex { k, ksq }
    }

    pub fn is_zero(&self) -> bool {
        self.ksq == 0
    }

    pub fn max_norm(&self) -> u32 {
        self.k.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn as_f64(&self) -> [f64; 3] {
        [self.k[0] as f64, self.k[1] as f64, self.k[2] as f64]
    }

    /// True for the representative of each `±k` pair: first nonzero component positive.
    pub fn is_positive_half(&self) -> bool {
        self.k
            .iter()
            .find(|&&c| c != 0)
            .map(|&c| c > 0)
            .unwrap_or(false)
    }
}

struct LatticeInner {
    k_max: usize,
    dealias: bool,
    dealias_bound: usize,
    modes: Vec<WaveIndex>,
    grid_n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// The truncated wavevector set together with its transform plans.
///
/// Cheap to clone; two lattices compare equal when `K` and the dealias flag agree.
#[derive(Clone)]
pub struct Lattice {
    inner: Arc<LatticeInner>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("k_max", &self.inner.k_max)
            .field("dealias", &self.inner.dealias)
            .field("dealias_bound", &self.inner.dealias_bound)
            .field("grid_n", &self.inner.grid_n)
            .finish()
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.inner.k_max == other.inner.k_max && self.inner.dealias == other.inner.dealias
    }
}

/// Smallest `n ≥ min` whose only prime factors are 2, 3 and 5.
fn smooth_size(min: usize) -> usize {
    (min..)
        .find(|&n| {
            let mut m = n;
            for p in [2, 3, 5] {
                while m % p == 0 {
                    m /= p;
                }
            }
            m == 1
        })
        .expect("unbounded search")
}

impl Lattice {
    pub fn new(k_max: usize, dealias: bool) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidTruncation(k_max));
        }
        let kk = k_max as i32;
        let mut modes = Vec::with_capacity((2 * k_max + 1).pow(3));
        for k1 in -kk..=kk {
            for k2 in -kk..=kk {
                for k3 in -kk..=kk {
                    modes.push(WaveIndex::new([k1, k2, k3]));
                }
            }
        }
        let dealias_bound = if dealias { 2 * k_max / 3 } else { k_max };
        let grid_n = smooth_size(3 * k_max + 1);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid_n);
        let inv = planner.plan_fft_inverse(grid_n);
        Ok(Lattice {
            inner: Arc::new(LatticeInner {
                k_max,
                dealias,
                dealias_bound,
                modes,
                grid_n,
                fwd,
                inv,
            }),
        })
    }

    pub fn k_max(&self) -> usize {
        self.inner.k_max
    }

    pub fn dealias(&self) -> bool {
        self.inner.dealias
    }

    /// Largest `|k|_∞` kept in product outputs (`K` when dealiasing is off).
    pub fn dealias_bound(&self) -> usize {
        self.inner.dealias_bound
    }

    pub fn modes(&self) -> &[WaveIndex] {
        &self.inner.modes
    }

    pub fn len(&self) -> usize {
        self.inner.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.modes.is_empty()
    }

    pub fn grid_size(&self) -> usize {
        self.inner.grid_n
    }

    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    pub fn neg_index(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn index_of(&self, k: [i32; 3]) -> Option<usize> {
        let kk = self.inner.k_max as i32;
        if k.iter().any(|c| c.abs() > kk) {
            return None;
        }
        let side = 2 * kk + 1;
        let idx = ((k[0] + kk) * side + (k[1] + kk)) * side + (k[2] + kk);
        Some(idx as usize)
    }

    pub fn in_band(&self, w: &WaveIndex) -> bool {
        w.max_norm() as usize <= self.inner.dealias_bound
    }

    fn grid_offset(&self, w: &WaveIndex) -> usize {
        let n = self.inner.grid_n as i32;
        let a = w.k[0].rem_euclid(n) as usize;
        let b = w.k[1].rem_euclid(n) as usize;
        let c = w.k[2].rem_euclid(n) as usize;
        let n = n as usize;
        (a * n + b) * n + c
    }

    fn fft3(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.inner.grid_n;
        let plan = if inverse {
            &self.inner.inv
        } else {
            &self.inner.fwd
        };
        // last axis is contiguous
        plan.process(buf);
        let mut scratch = vec![Complex64::new(0.0, 0.0); buf.len()];
        // middle axis
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    scratch[(i * n + l) * n + j] = buf[(i * n + j) * n + l];
                }
            }
        }
        plan.process(&mut scratch);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    buf[(i * n + j) * n + l] = scratch[(i * n + l) * n + j];
                }
            }
        }
        // first axis
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    scratch[(j * n + l) * n + i] = buf[(i * n + j) * n + l];
                }
            }
        }
        plan.process(&mut scratch);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    buf[(i * n + j) * n + l] = scratch[(j * n + l) * n + i];
                }
            }
        }
    }
}

/// Real samples of a field on the `n^3` collocation grid `x = 2π (i, j, l) / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub n: usize,
    pub values: Vec<f64>,
}

impl GridSamples {
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let h = 2.0 * PI / n as f64;
        let l = idx % n;
        let j = (idx / n) % n;
        let i = idx / (n * n);
        [i as f64 * h, j as f64 * h, l as f64 * h]
    }

    /// Trapezoid (spectrally exact) approximation of `∫ v dx`.
    pub fn integral(&self) -> f64 {
        let cell = VOLUME / self.values.len() as f64;
        self.values.iter().sum::<f64>() * cell
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let cell = VOLUME / self.values.len() as f64;
        self.values.iter().map(|v| v * v).sum::<f64>() * cell
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A real scalar field stored by its Fourier coefficients on a [`Lattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    lattice: Lattice,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(lattice: &Lattice) -> Self {
        ScalarField {
            lattice: lattice.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn constant(lattice: &Lattice, c: f64) -> Self {
        let mut f = Self::zeros(lattice);
        f.coeffs[lattice.zero_index()] = Complex64::new(c, 0.0);
        f
    }

    /// Builds a field from raw coefficients; symmetry is not enforced here.
    pub fn from_coeffs(lattice: &Lattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::MalformedField(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        Ok(ScalarField {
            lattice: lattice.clone(),
            coeffs,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, k: [i32; 3]) -> Option<Complex64> {
        self.lattice.index_of(k).map(|i| self.coeffs[i])
    }

    /// Sets `û_k` and its conjugate partner `û_{-k}`.
    pub fn set_pair(&mut self, k: [i32; 3], value: Complex64) {
        let i = self
            .lattice
            .index_of(k)
            .expect("wavevector outside the lattice");
        let j = self.lattice.neg_index(i);
        if i == j {
            self.coeffs[i] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[i] = value;
            self.coeffs[j] = value.conj();
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[self.lattice.zero_index()].re
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `max_k |û_{-k} - conj(û_k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        (0..n)
            .map(|i| (self.coeffs[n - 1 - i] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let avg = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
            self.coeffs[i] = avg;
            self.coeffs[j] = avg.conj();
        }
        let z = n / 2;
        self.coeffs[z] = Complex64::new(self.coeffs[z].re, 0.0);
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let tolerance = HERMITIAN_TOLERANCE * self.max_coeff().max(f64::MIN_POSITIVE);
        if defect > tolerance {
            return Err(Error::HermitianViolation { defect, tolerance });
        }
        Ok(())
    }

    /// Sum of every lattice mode at each collocation point.
    pub fn to_grid(&self) -> Result<GridSamples> {
        self.check_hermitian()?;
        let n = self.lattice.grid_size();
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n * n];
        for (w, c) in self.lattice.modes().iter().zip(&self.coeffs) {
            buf[self.lattice.grid_offset(w)] = *c;
        }
        self.lattice.fft3(&mut buf, true);
        Ok(GridSamples {
            n,
            values: buf.into_iter().map(|c| c.re).collect(),
        })
    }

    /// Samples of `self` and `other` from one complex transform of `self + i·other`.
    pub fn to_grid_pair(&self, other: &ScalarField) -> Result<(GridSamples, GridSamples)> {
        self.ensure_same_lattice(other)?;
        self.check_hermitian()?;
        other.check_hermitian()?;
        let n = self.lattice.grid_size();
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n * n];
        let i = Complex64::new(0.0, 1.0);
        for ((w, a), b) in self.lattice.modes().iter().zip(&self.coeffs).zip(&other.coeffs) {
            buf[self.lattice.grid_offset(w)] = a + i * b;
        }
        self.lattice.fft3(&mut buf, true);
        let re = buf.iter().map(|c| c.re).collect();
        let im = buf.iter().map(|c| c.im).collect();
        Ok((GridSamples { n, values: re }, GridSamples { n, values: im }))
    }

    /// Forward transform of real samples, truncated to the lattice and symmetrized.
    pub fn from_grid(lattice: &Lattice, samples: &GridSamples) -> Result<Self> {
        let n = lattice.grid_size();
        if samples.n != n || samples.values.len() != n * n * n {
            return Err(Error::MalformedField(format!(
                "grid of size {} does not match lattice grid {}",
                samples.n, n
            )));
        }
        let mut buf: Vec<Complex64> = samples
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        lattice.fft3(&mut buf, false);
        let scale = 1.0 / (n * n * n) as f64;
        let coeffs = lattice
            .modes()
            .iter()
            .map(|w| buf[lattice.grid_offset(w)] * scale)
            .collect();
        let mut f = ScalarField {
            lattice: lattice.clone(),
            coeffs,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Zeroes every mode outside the dealias band.
    pub fn truncate_to_band(&mut self) {
        let lat = self.lattice.clone();
        for (w, c) in lat.modes().iter().zip(self.coeffs.iter_mut()) {
            if !lat.in_band(w) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn ensure_same_lattice(&self, other: &ScalarField) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch {
                left: self.lattice.k_max(),
                right: other.lattice.k_max(),
            });
        }
        Ok(())
    }

    /// Real `L^2` inner product `∫ a b dx` by Parseval.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        VOLUME
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        VOLUME * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Multiplies each coefficient by `symbol(k)`.
    pub fn map_symbol(&self, mut symbol: impl FnMut(&WaveIndex) -> Complex64) -> ScalarField {
        let coeffs = self
            .lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| c * symbol(w))
            .collect();
        ScalarField {
            lattice: self.lattice.clone(),
            coeffs,
        }
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            lattice: self.lattice.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scaled(&mut self, s: f64, other: &ScalarField) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.add_scaled(1.0, other);
        out
    }
}

/// Coefficients of the pointwise product `a·b`, cut to the dealias band when active.
pub fn pointwise_product(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    a.ensure_same_lattice(b)?;
    let ga = a.to_grid()?;
    let gb = b.to_grid()?;
    let values = ga
        .values
        .iter()
        .zip(&gb.values)
        .map(|(x, y)| x * y)
        .collect();
    product_from_samples(
        a.lattice(),
        &GridSamples {
            n: ga.n,
            values,
        },
    )
}

/// Forward transform of product samples with the dealias cut applied.
pub fn product_from_samples(lattice: &Lattice, samples: &GridSamples) -> Result<ScalarField> {
    let mut out = ScalarField::from_grid(lattice, samples)?;
    if lattice.dealias() {
        out.truncate_to_band();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoeff {
    pub k: [i32; 3],
    pub re: f64,
    pub im: f64,
}

/// JSON form: lattice `K`, dealias flag, and coefficients for the half-lattice
/// (the zero mode plus one representative per `±k` pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarFieldJson {
    #[serde(rename = "K")]
    pub k_max: usize,
    pub dealias: bool,
    pub coeffs: Vec<ModeCoeff>,
}

impl From<&ScalarField> for ScalarFieldJson {
    fn from(f: &ScalarField) -> Self {
        let lat = f.lattice();
        let coeffs = lat
            .modes()
            .iter()
            .zip(f.coeffs())
            .skip(lat.zero_index())
            .map(|(w, c)| ModeCoeff {
                k: w.k,
                re: c.re,
                im: c.im,
            })
            .collect();
        ScalarFieldJson {
            k_max: lat.k_max(),
            dealias: lat.dealias(),
            coeffs,
        }
    }
}

impl ScalarFieldJson {
    pub fn into_field(self, lattice: Option<&Lattice>) -> Result<ScalarField> {
        let lattice = match lattice {
            Some(l) if l.k_max() == self.k_max && l.dealias() == self.dealias => l.clone(),
            Some(l) => {
                return Err(Error::LatticeMismatch {
                    left: l.k_max(),
                    right: self.k_max,
                })
            }
            None => Lattice::new(self.k_max, self.dealias)?,
        };
        let mut f = ScalarField::zeros(&lattice);
        for m in self.coeffs {
            let w = WaveIndex::new(m.k);
            if lattice.index_of(m.k).is_none() {
                return Err(Error::MalformedField(format!(
                    "mode {:?} outside lattice K={}",
                    m.k,
                    lattice.k_max()
                )));
            }
            if !(w.is_zero() || w.is_positive_half()) {
                return Err(Error::MalformedField(format!(
                    "mode {:?} is not in the stored half-lattice",
                    m.k
                )));
            }
            if w.is_zero() && m.im != 0.0 {
                return Err(Error::MalformedField(
                    "zero mode must be real".to_string(),
                ));
            }
            f.set_pair(m.k, Complex64::new(m.re, m.im));
        }
        Ok(f)
    }
}

impl Serialize for ScalarField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScalarFieldJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScalarField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ScalarFieldJson::deserialize(d)?;
        j.into_field(None).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lattice_counts() {
        let l1 = Lattice::new(1, true).unwrap();
        assert_eq!(l1.len(), 27);
        assert_eq!(l1.modes().iter().filter(|w| w.ksq == 0).count(), 1);
        let l2 = Lattice::new(2, true).unwrap();
        assert_eq!(l2.len(), 125);
        assert_eq!(l2.dealias_bound(), 1);
        let l4 = Lattice::new(4, true).unwrap();
        let i = l4.index_of([1, -2, 3]).unwrap();
        assert_eq!(l4.modes()[i].ksq, 14);
        assert_eq!(l4.modes()[i].k, [1, -2, 3]);
    }

    #[test]
    fn rejects_zero_truncation() {
        assert!(matches!(
            Lattice::new(0, true),
            Err(Error::InvalidTruncation(0))
        ));
    }

    #[test]
    fn ordering_is_lexicographic_and_negation_reverses() {
        let lat = Lattice::new(3, false).unwrap();
        for (i, w) in lat.modes().iter().enumerate() {
            assert_eq!(lat.index_of(w.k), Some(i));
            let neg = [-w.k[0], -w.k[1], -w.k[2]];
            assert_eq!(lat.index_of(neg), Some(lat.neg_index(i)));
        }
        assert!(lat.modes().windows(2).all(|p| p[0].k < p[1].k));
        assert!(lat.modes()[lat.zero_index()].is_zero());
    }

    #[test]
    fn zero_and_constant_samples() {
        let lat = Lattice::new(2, true).unwrap();
        let z = ScalarField::zeros(&lat).to_grid().unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        let k = ScalarField::constant(&lat, 1.75).to_grid().unwrap();
        assert!(k.values.iter().all(|&v| (v - 1.75).abs() < 1e-14));
    }

    #[test]
    fn cosine_pair_samples_match_direct_evaluation() {
        let lat = Lattice::new(3, true).unwrap();
        let mut f = ScalarField::zeros(&lat);
        f.set_pair([1, 0, 0], c(0.5, 0.0));
        let g = f.to_grid().unwrap();
        for (idx, v) in g.values.iter().enumerate() {
            let x = g.point(idx);
            assert!((v - x[0].cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn hermitian_violation_is_reported() {
        let lat = Lattice::new(2, true).unwrap();
        let mut f = ScalarField::zeros(&lat);
        let i = lat.index_of([1, 0, 0]).unwrap();
        f.coeffs_mut()[i] = c(1.0, 0.0);
        assert!(matches!(
            f.to_grid(),
            Err(Error::HermitianViolation { .. })
        ));
    }

    #[test]
    fn constant_times_field_doubles_band_modes() {
        let lat = Lattice::new(4, true).unwrap();
        let mut b = ScalarField::zeros(&lat);
        b.set_pair([1, 1, 0], c(0.3, -0.2));
        b.set_pair([0, 2, -1], c(-0.1, 0.4));
        b.set_pair([4, 0, 0], c(0.7, 0.0));
        let two = ScalarField::constant(&lat, 2.0);
        let p = pointwise_product(&two, &b).unwrap();
        for (w, (pc, bc)) in lat.modes().iter().zip(p.coeffs().iter().zip(b.coeffs())) {
            let expect = if lat.in_band(w) { bc * 2.0 } else { c(0.0, 0.0) };
            assert!((pc - expect).norm() < 1e-14, "{:?}", w.k);
        }
    }

    #[test]
    fn cosine_squared_without_dealiasing() {
        let lat = Lattice::new(2, false).unwrap();
        let mut a = ScalarField::zeros(&lat);
        a.set_pair([1, 0, 0], c(0.5, 0.0));
        let p = pointwise_product(&a, &a).unwrap();
        let mut expect = ScalarField::constant(&lat, 0.5);
        expect.set_pair([2, 0, 0], c(0.25, 0.0));
        assert!(p.sub(&expect).max_coeff() < 1e-15);
    }

    #[test]
    fn product_commutes_exactly() {
        let lat = Lattice::new(3, true).unwrap();
        let mut a = ScalarField::zeros(&lat);
        let mut b = ScalarField::zeros(&lat);
        a.set_pair([1, -1, 2], c(0.2, 0.9));
        a.set_pair([0, 1, 0], c(-1.0, 0.3));
        b.set_pair([2, 0, 1], c(0.4, -0.6));
        b.set_pair([1, 1, 1], c(0.1, 0.1));
        let ab = pointwise_product(&a, &b).unwrap();
        let ba = pointwise_product(&b, &a).unwrap();
        assert_eq!(ab.coeffs(), ba.coeffs());
    }

    #[test]
    fn lattice_mismatch_is_an_error() {
        let a = ScalarField::zeros(&Lattice::new(2, true).unwrap());
        let b = ScalarField::zeros(&Lattice::new(3, true).unwrap());
        assert!(matches!(
            pointwise_product(&a, &b),
            Err(Error::LatticeMismatch { .. })
        ));
    }

    #[test]
    fn json_stores_half_lattice_and_restores_pairs() {
        let lat = Lattice::new(2, true).unwrap();
        let mut f = ScalarField::constant(&lat, 0.25);
        f.set_pair([1, -2, 0], c(0.5, -0.125));
        let j = serde_json::to_string(&f).unwrap();
        let parsed: ScalarFieldJson = serde_json::from_str(&j).unwrap();
        assert_eq!(parsed.coeffs.len(), lat.len() / 2 + 1);
        let back: ScalarField = serde_json::from_str(&j).unwrap();
        assert_eq!(back, f);
    }
}
