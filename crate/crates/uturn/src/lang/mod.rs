//! Expressions, regular commands, and their concrete syntax.

mod ast;
mod lexer;
mod parser;
pub(crate) mod print;

pub use ast::{free_vars, ACmd, AExp, ArithOp, BExp, CmpOp, RCmd};
pub use parser::{out_of_range_literals, parse_assertion, parse_atom, parse_bexp, parse_command, parse_program, Program};
