pub mod fit;
pub mod marginals;
pub mod protocols;
pub mod simulate;
pub mod sweep;
