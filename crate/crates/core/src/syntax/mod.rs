//! Lexer, expression AST and parsing helpers shared by both input languages.

pub mod expr;
pub mod lexer;
pub mod parser;

pub use expr::{eval, mask, BinOp, Env, EvalError, Expr, RawPath, UnOp, Value, VarRef};
pub use lexer::Pos;
pub use parser::{parse_expr_str, Cursor, PResult, ParseError};
