//! Shared inputs for the criterion benches in `benches/`.

use fiskit_core::l2::{assemble, DiscreteComplex};
use fiskit_core::random::{random_trig_field, seeded};
use fiskit_core::structure::TwistForm;
use fiskit_core::{FIStructure, ScalarField, C64};

/// Unweighted, untwisted rank-1 complex of `s`.
pub fn plain_complex(s: &FIStructure) -> DiscreteComplex {
    assemble(s, &TwistForm::zero(s.chart()), 1, &ScalarField::zeros(s.chart())).expect("fixture assembles")
}

/// Band-limited degree-`q` cochain, reproducible from `seed`.
pub fn band_limited(c: &DiscreteComplex, q: usize, seed: u64) -> Vec<C64> {
    let mut rng = seeded(seed);
    let nj = fiskit_core::exterior::multi_indices(c.n(), q).len();
    let fields: Vec<Vec<ScalarField>> =
        (0..c.rank()).map(|_| (0..nj).map(|_| random_trig_field(c.chart(), 2, &mut rng)).collect()).collect();
    c.from_fields(q, &fields).expect("shape matches")
}
