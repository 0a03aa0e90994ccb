//! Lexer, parser and printers for constraint files and expressions.

mod ast;
mod parser;
mod print;
mod token;

pub use ast::*;
pub use parser::{parse_constraint_file, parse_expression, parse_expression_text, parse_type_text};
pub use print::{print_decl, print_expr, print_file, print_full};
pub use token::{tokenize, Keyword, Tok, Token};

#[cfg(test)]
mod tests;
