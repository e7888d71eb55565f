pub mod cases;
pub mod eval;
pub mod gateway;
pub mod knowledge;
pub mod prompts;
pub mod text;
pub mod workflow;
