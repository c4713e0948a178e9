#![allow(dead_code)]

use derham_galerkin::derham::Form;
use derham_galerkin::spectral_grid::{Lattice, ScalarField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random real field on the whole lattice with `|k|^{-decay}` envelope.
pub fn random_field(lattice: &Lattice, rng: &mut ChaCha8Rng, decay: f64) -> ScalarField {
    let mut f = ScalarField::zeros(lattice);
    for w in lattice.modes() {
        if w.is_zero() {
            let z = lattice.zero_index();
            f.coeffs_mut()[z] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        } else if w.is_positive_half() {
            let s = (w.ksq as f64).powf(-decay / 2.0);
            let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * s;
            f.set_pair(w.k, v);
        }
    }
    f
}

pub fn random_form(lattice: &Lattice, degree: usize, rng: &mut ChaCha8Rng) -> Form {
    let n = if degree == 0 || degree == 3 { 1 } else { 3 };
    let comps = (0..n).map(|_| random_field(lattice, rng, 1.0)).collect();
    Form::new(degree, comps).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}
