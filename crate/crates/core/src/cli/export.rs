//! CSV and JSON writers. Numbers are written as `{:.15e}` so that identical
//! runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::galerkin::{Snapshot, Trajectory};
use crate::norms::EnergyLedger;

pub const TRAJECTORY_HEADER: &str = "step,t,g_l2,grad_g_l2,u_l2,h_abs,energy_residual,cubic_residual";
pub const LEDGER_HEADER: &str = "step,t,kinetic,dissipation_increment,forcing_increment,quadratic_increment,cubic_increment,transport_increment,dissipation,work,residual";

fn row(out: &mut String, step: usize, values: &[f64]) {
    write!(out, "{step}").unwrap();
    for v in values {
        write!(out, ",{v:.15e}").unwrap();
    }
    out.push('\n');
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for (state, e) in traj.states.iter().zip(&traj.ledger.entries) {
        row(
            &mut out,
            e.step,
            &[
                state.t,
                e.terms.kinetic.sqrt(),
                e.terms.grad_sq.sqrt(),
                state.coeff_norm(),
                e.terms.h_abs,
                e.residual,
                e.terms.cubic_residual(),
            ],
        );
    }
    out
}

pub fn ledger_csv(ledger: &EnergyLedger) -> String {
    let mut out = format!("{LEDGER_HEADER}\n");
    for e in &ledger.entries {
        row(
            &mut out,
            e.step,
            &[
                e.t,
                e.terms.kinetic,
                e.dissipation_increment,
                e.forcing_increment,
                e.quadratic_increment,
                e.cubic_increment,
                e.transport_increment,
                e.dissipation,
                e.work,
                e.residual,
            ],
        );
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_snapshots(dir: &Path, snapshots: &[Snapshot]) -> Result<()> {
    if snapshots.is_empty() {
        return Ok(());
    }
    let sub = dir.join("snapshots");
    fs::create_dir_all(&sub)?;
    for s in snapshots {
        write_json(&sub.join(format!("snapshot_{:06}.json", s.step)), s)?;
    }
    Ok(())
}
