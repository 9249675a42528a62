pub mod conventional;
pub mod error;
pub mod frames;
pub mod harness;
pub mod ispc;
pub mod plant;
