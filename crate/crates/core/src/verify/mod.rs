//! Independent audits of a constructed flow.

mod audits;
mod estimates;
mod report;
mod spectral;

pub use audits::*;
pub use estimates::*;
pub use report::*;
pub use spectral::*;
