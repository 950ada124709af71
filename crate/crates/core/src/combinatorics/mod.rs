//! External addresses and the potential machinery built on `F(t) = e^t - 1`.

mod address;
mod growth;
mod potential;

pub use address::{lex_compare, AddressError, ExternalAddress};
pub use growth::{log_model_iter, model, model_inv, model_iter, model_orbit};
pub use potential::{potential_bounds, t_s_k, tail_threshold, PotentialBounds};
