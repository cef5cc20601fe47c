//! Vibrational bound-state spectra of radial potentials with −Cₙ/rⁿ tails.
//!
//! Levels are computed by two independent engines (Numerov shooting and the
//! Canonical Function Method), each with a grid-halving accuracy ladder.
//! Around them sit the semiclassical tools for near-dissociation analysis:
//! WKB phase integrals, the LeRoy–Bernstein law and its fit, and sequences
//! of scaled energy differences.

pub mod eigensolver;
pub mod error;
pub mod format;
pub mod io;
pub mod nde_fit;
pub mod potentials;
pub mod propagators;
pub mod quadrature;
pub mod refdata;
pub mod sed;
pub mod semiclassical;
mod roots;
mod spline;
pub mod units;

pub use eigensolver::{
    bracket_levels, mismatch, solve_level, solve_spectrum, AccuracyReport, Bracket, Engine, Level,
    LevelSpectrum, SolverConfig,
};
pub use error::{Error, Result};
pub use nde_fit::{extrapolate_levels, fit_lb, fit_lb_weighted, FitWindow, LbFitResult};
pub use potentials::{
    load_tabulated, make_lj_like, make_morse, make_power_tail, MorseParams, PotentialModel, Tail,
    Wall, Well,
};
pub use propagators::{
    cfm_propagate, count_nodes, numerov_propagate, CanonicalPair, Direction, GridConfig, Mapping,
    RadialGrid, SolutionTrace,
};
pub use sed::{calibrate_h, sed_sequence, sed_trend_report, HSource, SedSequence, TrendReport};
pub use semiclassical::{
    lb_energy, lb_quantum_number, lb_slope, threshold_slope, wkb_level, wkb_phase, LbModel,
};
pub use refdata::{compare_spectra, reference_table, ComparisonReport, ReferenceTable};
pub use units::{kinetic_coefficient, UnitSystem, UNITS};
