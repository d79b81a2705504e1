//! Norms, energies, decay fits and inequality probes.

mod energy;
mod fit;
mod inequalities;
pub(crate) mod series;

pub use energy::{data_norm_a, energy, weighted_energy, DataNorms};
pub use fit::{
    fit_decay, solution_norm_x, weighted_energy_monotonicity, write_fit_csv, DecayFit, FitRow,
    Monotonicity, MIN_FIT_ROWS, MONOTONICITY_TOL,
};
pub use inequalities::{gn_ratio, weighted_gn_check, WeightedGnCheck, POINCARE_TOL};
pub use series::{Column, Record, TimeSeries, HEADER};
