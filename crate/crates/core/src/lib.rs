pub mod bench;
pub mod cli;
pub mod decomp;
pub mod engine;
pub mod ir;
pub mod lowering;
pub mod reference;
pub mod stab;
