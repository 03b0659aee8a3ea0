//! Stratified ELI⊥ reasoning: stratification analysis, rewriting of instance
//! queries into nested two-way automata, and their evaluation over ABoxes.

pub mod kb;
pub mod stratify;
pub mod typeset;
pub mod saturate;
pub mod rewrite;
pub mod evaluate;
pub mod qbf;
pub mod generate;
pub mod differential;
