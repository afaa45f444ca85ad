//! Numerical pinching deformations of the univalent Baker domain of
//! `z ↦ c + m z − e^z`.
//!
//! The pipeline runs bottom-up: hyperbolic geometry of the upper half-plane
//! ([`geometry`]), the entire map ([`entire`]), orbit classification
//! ([`fatou`]), the uniformizer of the Baker domain ([`uniformizer`]),
//! laminations in model coordinates ([`lamination`]), the Beltrami field and
//! its solver ([`beltrami`]), and the pinching schedule ([`pinch`]).
//! [`config`], [`render`] and [`report`] handle the file formats.

pub mod beltrami;
pub mod config;
pub mod entire;
pub mod exec;
pub mod fatou;
pub mod geometry;
pub mod grid;
pub mod lamination;
pub mod pinch;
pub mod render;
pub mod report;
pub mod uniformizer;

pub use num_complex::Complex64 as C64;
