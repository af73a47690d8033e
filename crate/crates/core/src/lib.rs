// `!(a >= b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod dp;
pub mod expr;
pub mod mc;
pub mod model;
pub mod regions;
pub mod synth;
