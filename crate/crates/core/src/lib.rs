pub mod error;
pub mod fock;
pub mod numerics;
pub mod kernels;
pub mod fields;
pub mod wick;
pub mod causal;
pub mod adiabatic;
pub mod gelfand;

pub type RadialGrid64 = gelfand::RadialGrid<f64>;
pub type LineGrid64 = gelfand::LineGrid<f64>;
pub type Tolerance64 = numerics::quadrature::Tolerance<f64>;
pub type LineFit64 = numerics::extrapolate::LineFit<f64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
