//! Market simulation under the position-based model, the exact
//! expected-matches oracle and inequality metrics.

mod exact;
mod gini;
mod simulate;

pub use exact::{application_probabilities, exact_match_matrix, exact_sw, EXACT_SW_MAX_CELLS};
pub use gini::gini;
pub use simulate::{estimate_sw, simulate_once, MarketOutcome, MarketSimulator, RankingSource, SwEstimate};
