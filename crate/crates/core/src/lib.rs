pub mod error;
pub mod specfun;
pub mod linalg;
pub mod quadrature;
pub mod kernels;
pub mod discretize;
pub mod spectra;
pub mod verify;
pub mod cli;
