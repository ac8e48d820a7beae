//! Deciding treewidth boundedness of separation logic of relations over
//! inductive definitions.

pub mod abstraction;
pub mod automata;
pub mod cli;
pub mod decide;
pub mod error;
pub mod mcs;
pub mod normalize;
pub mod oracle;
pub mod parse;
pub mod partition;
pub mod structures;
pub mod syntax;

pub use error::{Error, Result};
pub use parse::{parse_formula, parse_sid};
pub use structures::{Color, ColorMultiset, Element, Structure};
pub use syntax::{Atom, Formula, Rule, Sid};
