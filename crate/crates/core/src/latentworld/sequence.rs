use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 20 standard amino acids in one-letter order.
pub const ALPHABET: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

/// A sequence over (a prefix of) [`ALPHABET`], stored as alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ResidueSequence(Vec<u8>);

impl TryFrom<String> for ResidueSequence {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ResidueSequence> for String {
    fn from(s: ResidueSequence) -> Self {
        s.to_string()
    }
}

impl ResidueSequence {
    pub fn from_indices(indices: Vec<u8>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::data("sequence must contain at least one residue"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= ALPHABET.len()) {
            return Err(Error::data(format!("residue index {bad} outside the alphabet")));
        }
        Ok(ResidueSequence(indices))
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn residue(&self, i: usize) -> char {
        ALPHABET[self.0[i] as usize] as char
    }

    pub fn set(&mut self, i: usize, residue: u8) {
        assert!((residue as usize) < ALPHABET.len());
        self.0[i] = residue;
    }

    /// Alphabet index of a one-letter code.
    pub fn index_of(c: char) -> Option<u8> {
        ALPHABET.iter().position(|&a| a as char == c).map(|p| p as u8)
    }
}

impl FromStr for ResidueSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let idx = s
            .chars()
            .map(|c| ResidueSequence::index_of(c).ok_or_else(|| Error::data(format!("unknown residue '{c}'"))))
            .collect::<Result<Vec<_>>>()?;
        ResidueSequence::from_indices(idx)
    }
}

impl fmt::Display for ResidueSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &i in &self.0 {
            write!(f, "{}", ALPHABET[i as usize] as char)?;
        }
        Ok(())
    }
}
