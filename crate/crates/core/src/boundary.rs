//! Boundary conditions fixing black and/or white spins on the boundary faces.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Values imposed on σ• and σ° along ∂_F Ω; `None` leaves that colour free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Boundary {
    pub black: Option<i8>,
    pub white: Option<i8>,
}

impl Boundary {
    pub const FREE: Boundary = Boundary { black: None, white: None };
    /// Both colours plus: the zero-boundary height class.
    pub const PLUS_PLUS: Boundary = Boundary { black: Some(1), white: Some(1) };
    pub const BLACK_PLUS: Boundary = Boundary { black: Some(1), white: None };
    pub const BLACK_MINUS: Boundary = Boundary { black: Some(-1), white: None };
    pub const WHITE_PLUS: Boundary = Boundary { black: None, white: Some(1) };

    /// Whether at least one colour is fixed.
    pub fn fixes_some_colour(&self) -> bool {
        self.black.is_some() || self.white.is_some()
    }
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::PLUS_PLUS
    }
}

fn sign_char(s: i8) -> char {
    if s > 0 {
        '+'
    } else {
        '-'
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.black, self.white) {
            (None, None) => write!(f, "free"),
            (Some(b), None) => write!(f, "r{}", sign_char(b)),
            (None, Some(w)) => write!(f, "w{}", sign_char(w)),
            (Some(b), Some(w)) => write!(f, "r{}w{}", sign_char(b), sign_char(w)),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    /// Accepts `free`, `++`, and any of `r±`, `w±`, `r±w±`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::OutOfRange(format!("unknown boundary condition '{s}'"));
        match s {
            "free" => return Ok(Boundary::FREE),
            "++" => return Ok(Boundary::PLUS_PLUS),
            _ => {}
        }
        let mut out = Boundary::FREE;
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            let sign = match chars.next() {
                Some('+') => 1,
                Some('-') => -1,
                _ => return Err(bad()),
            };
            match c {
                'r' | 'b' if out.black.is_none() => out.black = Some(sign),
                'w' if out.white.is_none() => out.white = Some(sign),
                _ => return Err(bad()),
            }
        }
        if out == Boundary::FREE {
            return Err(bad());
        }
        Ok(out)
    }
}
