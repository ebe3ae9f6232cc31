//! Seeded fixtures shared by the benchmarks.

use gnt_core::invariants::random_integer_system;
use gnt_core::torus_lab::frame::FrameSpec;
use gnt_core::torus_lab::geometry::{DerivativeMode, TorusGeometry};
use gnt_core::{EndoSystem, Matrix, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rational_system(p: usize, q: usize, seed: u64) -> EndoSystem<Rational> {
    random_integer_system(&mut ChaCha8Rng::seed_from_u64(seed), p, q, 3)
}

pub fn float_system(p: usize, q: usize, seed: u64) -> EndoSystem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats = (0..q).map(|_| Matrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0))).collect();
    EndoSystem::new(p, mats).expect("square matrices")
}

/// The rotating-circle torus in T².
pub fn t2(m: usize) -> TorusGeometry {
    let spec = FrameSpec::T2Rotating { a: 0.3 }.build().expect("valid frame");
    TorusGeometry::new(spec, m, DerivativeMode::Central).expect("smooth enough")
}

/// The two-angle frame on T³ (p = 1, q = 2).
pub fn t3(m: usize) -> TorusGeometry {
    let spec = FrameSpec::T3TwoAngle { a: 0.3, b: 0.2 }.build().expect("valid frame");
    TorusGeometry::new(spec, m, DerivativeMode::Central).expect("smooth enough")
}
