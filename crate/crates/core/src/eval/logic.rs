//! Kleene three-valued Boolean logic.
//!
//! `and`, `or` and `not` are given by their tables; `xor` and `implies` are
//! defined through them, exactly as the language defines them:
//!
//! ```text
//! b1 xor b2     = (b1 or b2) and not (b1 and b2)
//! b1 implies b2 = (not b1) or b2
//! ```

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bool3 {
    False,
    True,
    Undef,
}

/// Binary operators over [`Bool3`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
    Xor,
    Implies,
    /// `=`: total, compares undefined values.
    StrongEq,
    /// `==`: strict in undefined.
    WeakEq,
}

impl BoolOp {
    pub const ALL: [BoolOp; 6] = [
        BoolOp::And,
        BoolOp::Or,
        BoolOp::Xor,
        BoolOp::Implies,
        BoolOp::StrongEq,
        BoolOp::WeakEq,
    ];
}

impl Bool3 {
    pub const ALL: [Bool3; 3] = [Bool3::False, Bool3::True, Bool3::Undef];

    pub fn is_defined(self) -> bool {
        self != Bool3::Undef
    }

    pub fn to_bool(self) -> Option<bool> {
        match self {
            Bool3::True => Some(true),
            Bool3::False => Some(false),
            Bool3::Undef => None,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Bool3 {
        match self {
            Bool3::True => Bool3::False,
            Bool3::False => Bool3::True,
            Bool3::Undef => Bool3::Undef,
        }
    }

    pub fn and(self, other: Bool3) -> Bool3 {
        match (self, other) {
            (Bool3::False, _) | (_, Bool3::False) => Bool3::False,
            (Bool3::True, Bool3::True) => Bool3::True,
            _ => Bool3::Undef,
        }
    }

    pub fn or(self, other: Bool3) -> Bool3 {
        match (self, other) {
            (Bool3::True, _) | (_, Bool3::True) => Bool3::True,
            (Bool3::False, Bool3::False) => Bool3::False,
            _ => Bool3::Undef,
        }
    }

    pub fn xor(self, other: Bool3) -> Bool3 {
        self.or(other).and(self.and(other).not())
    }

    pub fn implies(self, other: Bool3) -> Bool3 {
        self.not().or(other)
    }

    pub fn strong_eq(self, other: Bool3) -> Bool3 {
        Bool3::from(self == other)
    }

    pub fn weak_eq(self, other: Bool3) -> Bool3 {
        if self.is_defined() && other.is_defined() {
            Bool3::from(self == other)
        } else {
            Bool3::Undef
        }
    }
}

impl From<bool> for Bool3 {
    fn from(b: bool) -> Self {
        if b {
            Bool3::True
        } else {
            Bool3::False
        }
    }
}

impl fmt::Display for Bool3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bool3::True => "true",
            Bool3::False => "false",
            Bool3::Undef => "undefined",
        })
    }
}

pub fn bool_not(b: Bool3) -> Bool3 {
    b.not()
}

pub fn bool_binop(op: BoolOp, a: Bool3, b: Bool3) -> Bool3 {
    match op {
        BoolOp::And => a.and(b),
        BoolOp::Or => a.or(b),
        BoolOp::Xor => a.xor(b),
        BoolOp::Implies => a.implies(b),
        BoolOp::StrongEq => a.strong_eq(b),
        BoolOp::WeakEq => a.weak_eq(b),
    }
}

#[cfg(test)]
mod tests {
    use super::Bool3::{False as F, True as T, Undef as U};
    use super::*;

    #[test]
    fn short_examples() {
        assert_eq!(bool_binop(BoolOp::And, U, F), F);
        assert_eq!(bool_binop(BoolOp::Implies, F, U), T);
        assert_eq!(bool_binop(BoolOp::StrongEq, U, U), T);
        assert_eq!(bool_binop(BoolOp::WeakEq, U, U), U);
        assert_eq!(bool_binop(BoolOp::Implies, U, U), U);
        assert_eq!(bool_not(T), F);
        assert_eq!(bool_not(U), U);
    }

    #[test]
    fn not_is_an_involution() {
        for b in Bool3::ALL {
            assert_eq!(b.not().not(), b);
        }
    }
}
