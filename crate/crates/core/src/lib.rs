// SPDX-License-Identifier: Apache-2.0

//! Open-system simulation of a superconducting qubit coupled dispersively to a
//! cavity acting as a Maxwell demon.

pub mod cli;
pub mod device;
pub mod dynamics;
pub mod error;
pub mod experiment;
mod ode;
pub mod operators;
pub mod sequences;
mod sparse;
pub mod thermo;
pub mod tomography;

pub use device::DeviceParams;
pub use error::{Error, Result};
pub use operators::{DensityMatrix, Operator, Space};
