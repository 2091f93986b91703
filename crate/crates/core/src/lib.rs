//! Explicit-scheduler, symbolic-thread model checking for cooperative
//! threaded programs, with partial-order reduction.

#![no_std]

extern crate alloc;

pub mod concrete;
pub mod esst;
pub mod frontend;
pub mod ir;
pub mod logic;
pub mod por;
pub mod sched;
