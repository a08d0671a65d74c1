//! Fixtures shared by the criterion benchmarks in `benches/`.

use qrfuse::simulate::draw;
use qrfuse::{scale_to_unit, Dataset, DgpName, DgpSpec};

/// One replication of `dgp` with covariates already on `[0, 1]`.
pub fn fixture(dgp: DgpName, t: usize, seed: u64) -> Dataset {
    let rep = draw(&DgpSpec::new(dgp), t, seed);
    scale_to_unit(&rep.data)
        .expect("simulated covariates are not constant")
        .0
}
