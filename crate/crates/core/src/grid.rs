//! 2-D token-grid extents.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Height and width of a token grid, in token units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Extent {
    pub height: usize,
    pub width: usize,
}

impl Extent {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimension(format!(
                "extent {height}x{width} has a zero side"
            )));
        }
        Ok(Self { height, width })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    /// Total number of tokens on the grid.
    pub fn tokens(&self) -> usize {
        self.height * self.width
    }

    /// Length along a spatial axis: 0 is the row axis, 1 the column axis.
    pub fn axis_len(&self, axis: usize) -> usize {
        match axis {
            0 => self.height,
            1 => self.width,
            _ => panic!("axis {axis} out of range for a 2-D extent"),
        }
    }

    pub fn is_square(&self) -> bool {
        self.height == self.width
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

impl FromStr for Extent {
    type Err = Error;

    /// Parses `"HxW"`, e.g. `"64x64"`.
    fn from_str(s: &str) -> Result<Self> {
        let (h, w) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Config(format!("expected HxW extent, got {s:?}")))?;
        let height = h
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Config(format!("bad extent height {h:?}: {e}")))?;
        let width = w
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Config(format!("bad extent width {w:?}: {e}")))?;
        Extent::new(height, width)
    }
}
