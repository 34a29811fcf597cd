//! Scenarios shared by the integration tests.
#![allow(dead_code)]

use psa_chroma::{FtaData, IsothermModel, Model, PiecewiseConstant};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn pc(breaks: &[f64], values: &[f64], end: f64) -> PiecewiseConstant {
    PiecewiseConstant::new(breaks.to_vec(), values.to_vec(), end).unwrap()
}

pub fn langmuir() -> Model {
    Model::new(IsothermModel::BinaryLangmuir { q1: 1.0, k1: 2.0, q2: 3.0, k2: 1.0 }).unwrap()
}

/// An inert carrier with a Langmuir solute; its shock curve breaks the triangular inequality.
pub fn inert_langmuir() -> Model {
    Model::new(IsothermModel::InertPlusConcave(psa_chroma::ConcaveIsotherm::Langmuir {
        capacity: 2.0,
        affinity: 3.0,
    }))
    .unwrap()
}

/// Random piecewise-constant data on `[0, 2]²` with up to `max_breaks` jumps per datum.
pub fn random_data(rng: &mut ChaCha8Rng, max_breaks: usize) -> FtaData {
    let end = 2.0;
    let (nx, nt) = (rng.random_range(0..=max_breaks), rng.random_range(0..=max_breaks));
    let mut grid = |n: usize| {
        let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..end - 0.02)).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    };
    let bx = grid(nx);
    let bt = grid(nt);
    let c0: Vec<f64> = (0..=bx.len()).map(|_| rng.random_range(0.0..=1.0)).collect();
    let cb: Vec<f64> = (0..=bt.len()).map(|_| rng.random_range(0.0..=1.0)).collect();
    let ub: Vec<f64> = (0..=bt.len()).map(|_| rng.random_range(0.3..3.0)).collect();
    FtaData::new(
        PiecewiseConstant::new(bx, c0, end).unwrap(),
        PiecewiseConstant::new(bt.clone(), cb, end).unwrap(),
        PiecewiseConstant::new(bt, ub, end).unwrap(),
    )
    .unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named piecewise-constant scenarios on which the BV bounds are checked.
pub fn regression_scenarios() -> Vec<(&'static str, Model, FtaData)> {
    let lin = Model::reference_linear();
    vec![
        (
            "boundary shock",
            lin.clone(),
            FtaData::new(pc(&[], &[0.8], 1.0), pc(&[0.2], &[0.8, 0.2], 1.5), pc(&[0.2], &[2.0 / 3.0, 1.0], 1.5))
                .unwrap(),
        ),
        (
            "contacts only",
            lin.clone(),
            FtaData::new(pc(&[], &[0.4], 1.0), pc(&[], &[0.4], 1.0), pc(&[0.25, 0.5], &[1.0, 2.0, 0.5], 1.0)).unwrap(),
        ),
        (
            "merging shocks",
            lin.clone(),
            FtaData::new(
                pc(&[0.3, 0.6], &[0.9, 0.5, 0.1], 2.0),
                pc(&[0.5, 1.0], &[0.9, 0.3, 0.7], 2.0),
                pc(&[0.7], &[1.0, 1.6], 2.0),
            )
            .unwrap(),
        ),
        (
            "langmuir fan and shock",
            langmuir(),
            FtaData::new(pc(&[], &[0.2], 2.0), pc(&[0.2, 1.0], &[0.2, 0.8, 0.3], 2.0), pc(&[0.5], &[1.0, 0.6], 2.0))
                .unwrap(),
        ),
        (
            "langmuir staircase",
            langmuir(),
            FtaData::new(
                pc(&[0.2, 0.5, 0.9, 1.3], &[0.1, 0.6, 0.3, 0.9, 0.4], 2.0),
                pc(&[0.3, 0.8, 1.4], &[0.1, 0.7, 0.2, 0.95], 2.0),
                pc(&[0.3, 1.0], &[0.8, 1.5, 1.1], 2.0),
            )
            .unwrap(),
        ),
        (
            "inert carrier",
            inert_langmuir(),
            FtaData::new(
                pc(&[0.4, 1.1], &[0.9, 0.5, 0.05], 2.0),
                pc(&[0.3, 0.9], &[0.9, 0.6, 0.1], 2.0),
                pc(&[0.6], &[1.0, 1.8], 2.0),
            )
            .unwrap(),
        ),
    ]
}
