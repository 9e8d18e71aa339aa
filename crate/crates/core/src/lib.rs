//! Generalised geodesic billiard flow outside convex obstacles on
//! conformally flat surfaces `g = exp(2 phi) (dx^2 + dy^2)`.
//!
//! Everything numerical is generic over [`scalar::Real`]; the aliases below
//! fix the scalar for the common cases.

pub mod billiard;
pub mod fronts;
pub mod geodesic;
pub mod manifold;
pub mod metric_dsl;
pub mod output;
pub mod scalar;
pub mod scenario;
pub mod scene;
pub mod spectra;
pub mod verify;

pub use scalar::{Real, Vec2};

pub type Vec2f64 = scalar::Vec2<f64>;
pub type Vec2f32 = scalar::Vec2<f32>;
pub type MetricChartF64 = manifold::MetricChart<f64>;
pub type MetricChartF32 = manifold::MetricChart<f32>;
pub type SceneF64 = scene::Scene<f64>;
pub type SceneF32 = scene::Scene<f32>;
pub type FrontF64 = fronts::Front<f64>;
pub type FrontF32 = fronts::Front<f32>;
pub type SpectrumF64 = spectra::Spectrum<f64>;
pub type SpectrumF32 = spectra::Spectrum<f32>;
