pub mod error;
pub mod hodlr;
pub mod linalg;
pub mod par;
pub mod lmm;
pub mod oracle;
pub mod simgen;
pub mod scaling;
