//! Initial data and forcing built from a [`RunSpec`](super::config::RunSpec).

use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::derham::Form;
use crate::error::{Error, Result};
use crate::galerkin::{Forcing, SteadyForcing, ZeroForcing};
use crate::hodge::helmholtz_project;
use crate::nonlinear::NonlinearityConfig;
use crate::spectral_grid::{Lattice, ScalarField};

use super::config::{ForcingSpec, InitialSpec};
use super::manufactured::{gradient_of_trig, manufactured_case};

/// Rot-free random 2-form with per-mode standard deviation `sigma(|k|)`.
pub fn random_rot_free(lattice: &Lattice, seed: u64, sigma: impl Fn(f64) -> f64, mean: [f64; 3]) -> Form {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps = vec![ScalarField::zeros(lattice); 3];
    for w in lattice.modes() {
        if !w.is_positive_half() || !lattice.in_band(w) {
            continue;
        }
        let s = sigma((w.ksq as f64).sqrt());
        for c in comps.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c.set_pair(w.k, Complex64::new(re * s, im * s));
        }
    }
    let raw = Form::new(2, comps).expect("three components");
    let mut u = helmholtz_project(&raw).expect("degree 2");
    let z = lattice.zero_index();
    for (c, m) in u.components_mut().iter_mut().zip(mean) {
        c.coeffs_mut()[z] = Complex64::new(m, 0.0);
    }
    u
}

pub fn load_form(path: &Path, lattice: &Lattice) -> Result<Form> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let form: Form = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedField(format!("{}: {e}", path.display())))?;
    if form.degree() != 2 {
        return Err(Error::Degree {
            op: "load_form",
            got: form.degree(),
            expected: "2",
        });
    }
    if form.lattice() != lattice {
        return Err(Error::LatticeMismatch {
            left: lattice.k_max(),
            right: form.lattice().k_max(),
        });
    }
    Ok(form)
}

/// `u_0` on `lattice`; relative file paths resolve against `base`.
pub fn initial_data(
    spec: &InitialSpec,
    lattice: &Lattice,
    seed: u64,
    mu: f64,
    nl: &NonlinearityConfig,
    base: &Path,
) -> Result<Form> {
    match spec {
        InitialSpec::Constant { value } => Ok(Form::constant(lattice, 2, value)),
        InitialSpec::GradientMode {
            k,
            amplitude,
            parity,
            drift,
        } => {
            let mut u = gradient_of_trig(lattice, *k, *parity, *amplitude)?;
            u.add_scaled(1.0, &Form::constant(lattice, 2, drift));
            Ok(u)
        }
        InitialSpec::RandomSmooth {
            decay,
            amplitude,
            mean,
        } => Ok(random_rot_free(lattice, seed, |k| amplitude * k.powf(-decay), *mean)),
        InitialSpec::RandomAnalytic { rate, amplitude, mean } => {
            Ok(random_rot_free(lattice, seed, |k| amplitude * (-rate * k).exp(), *mean))
        }
        InitialSpec::Manufactured { name } => manufactured_case(name, lattice, mu, nl)?.u_exact(0.0),
        InitialSpec::File { path } => load_form(&base.join(path), lattice),
    }
}

pub fn forcing(
    spec: &ForcingSpec,
    lattice: &Lattice,
    mu: f64,
    nl: &NonlinearityConfig,
    base: &Path,
) -> Result<Box<dyn Forcing>> {
    Ok(match spec {
        ForcingSpec::Zero => Box::new(ZeroForcing::new(lattice)),
        ForcingSpec::Constant { value } => Box::new(SteadyForcing(Form::constant(lattice, 2, value))),
        ForcingSpec::Manufactured { name } => Box::new(manufactured_case(name, lattice, mu, nl)?),
        ForcingSpec::File { path } => Box::new(SteadyForcing(load_form(&base.join(path), lattice)?)),
    })
}
