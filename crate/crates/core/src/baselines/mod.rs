//! Comparison methods: unconstrained latent gradient descent, stochastic
//! hill climbing and a genetic algorithm over sequences.

mod discrete;
mod ga;
mod gd;
mod hill;

pub use discrete::{confidence, confidences};
pub use ga::{ga_fitness, genetic_algorithm, genetic_algorithm_traced, GaConfig};
pub use gd::{gd_counterfactual, GdConfig};
pub use hill::{hill_climb, hill_climb_traced, HillClimbConfig};
