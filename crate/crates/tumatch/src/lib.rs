//! File formats, experiment runner and command-line plumbing around
//! `tumatch-core`.

pub mod experiment;
pub mod io;

use tumatch_core::Error;

/// Process exit code for a failure: 1 for bad input, 2 for numerical
/// failure, 3 when a size guard refuses the work.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        let core = cause.downcast_ref::<Error>().or_else(|| match cause.downcast_ref::<io::FormatError>() {
            Some(io::FormatError::Invalid { source, .. }) => Some(source),
            _ => None,
        });
        if let Some(e) = core {
            return match e {
                Error::TooLarge { .. } => 3,
                Error::Domain { .. }
                | Error::KernelOverflow { .. }
                | Error::NotConverged { .. }
                | Error::DegenerateEquilibrium
                | Error::Infeasible { .. } => 2,
                Error::InvalidInput(_) | Error::Unsupported(_) | Error::Shape { .. } => 1,
            };
        }
    }
    1
}
