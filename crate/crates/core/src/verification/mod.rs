//! Independent checks of solver output: touching tests with quadratics,
//! the large-gradient Pucci reduction, randomized comparison, and exact
//! pure-power solutions.

mod comparison;
mod oracle;
mod touching;

pub use comparison::{
    compare_ordered, comparison_harness, ordering_margins, ComparisonConfig, ComparisonReport, ComparisonTrial,
};
pub use oracle::{OnePhaseOracle, TwoPhaseOracle};
pub use touching::{
    large_gradient_pucci_check, touch_test_subsolution, touch_test_supersolution, PucciCheckReport, PucciSide,
    PucciViolation, Quadratic, TouchRecord, TouchSide, TouchingTestConfig, TouchingTestReport,
};
