//! Numerics for formally integrable structures on periodic charts.

pub mod convexity;
pub mod error;
pub mod exterior;
pub mod fixtures;
pub mod grid;
pub mod l2;
pub mod linalg;
pub mod logforms;
pub mod random;
pub mod structure;

pub use error::{Error, Result};
pub use exterior::{change_basis, dual_coframe, exterior_derivative, interior_product, pointwise_rank, wedge, Basis, CoFrame, Form, MultiIndex};
pub use grid::{apply_vector, bump, integrate, lie_bracket, partial_derivative, Axis, Chart, ScalarField, VectorField, C64};
pub use linalg::MatrixField;
pub use structure::{
    check_formal_integrability, check_levi_flat, check_twist, commutator_coefficients, is_basic_form, is_basic_scalar,
    mnt_quotient_operator, phi_iso, quotient_project, structure_forms, xi_operator, BasicBundle, CommutatorCoefficients,
    FIStructure, MntOperator, QuotientOperator, StructureForms, TwistForm, XiOperator,
};
pub use convexity::{
    check_q_convex, check_q_positive, construct_chi, critical_sets, estimate_fields, q_form, ChiFunction, ChiTables,
    ConvexityReport, CriticalSets, EstimateParams, LineBundleMetric, QFormField,
};
pub use l2::{apriori_check, assemble, bochner_check, leafwise_cohomology, solve, DiscreteComplex};
pub use logforms::{LogPForm, NCHypersurface, NormalChart, Poly, ZForm};
