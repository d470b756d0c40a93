// `!(x <= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod path;
pub mod calc;
pub mod finite;
pub mod mc;
pub mod representation;
pub mod scenarios;
