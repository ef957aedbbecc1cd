//! The quantum-block language: parser, validator, compiler, serializer.

pub mod ast;
pub mod compile;
pub mod parse;
pub mod validate;

pub use ast::{
    BranchCond, FixedGate, LangAxis, Located, NetQasmInstr, Operand, Register, Subroutine,
};
pub use compile::{compile, CompiledBlock, CompiledStep, EprDirection, PhysOp};
pub use parse::{parse, ParseError};
pub use validate::{validate, Diagnostic};
