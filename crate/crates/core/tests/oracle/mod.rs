#![allow(dead_code)]

pub mod formulas;
pub mod graph;
pub mod planted;
