//! Task presets: class count, sample sizes and collection sizes.
//!
//! The `*-paper` presets reproduce the full-scale binary and multiclass
//! vector tasks; the `*-desk` presets scale counts down so the whole
//! pipeline runs in seconds.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskPreset {
    pub name: &'static str,
    pub classes: usize,
    pub dim: usize,
    pub sample_size: usize,
    pub training_size: usize,
    pub dev_samples: usize,
    pub test_samples: usize,
    pub separation: f64,
}

pub const T1A_PAPER: TaskPreset = TaskPreset {
    name: "t1a-paper",
    classes: 2,
    dim: 2,
    sample_size: 250,
    training_size: 5_000,
    dev_samples: 1_000,
    test_samples: 5_000,
    separation: 6.0,
};

pub const T1B_PAPER: TaskPreset = TaskPreset {
    name: "t1b-paper",
    classes: 28,
    dim: 28,
    sample_size: 1_000,
    training_size: 20_000,
    dev_samples: 1_000,
    test_samples: 5_000,
    separation: 6.0,
};

pub const T1A_DESK: TaskPreset = TaskPreset {
    name: "t1a-desk",
    classes: 2,
    dim: 2,
    sample_size: 250,
    training_size: 500,
    dev_samples: 50,
    test_samples: 250,
    separation: 6.0,
};

pub const T1B_DESK: TaskPreset = TaskPreset {
    name: "t1b-desk",
    classes: 28,
    dim: 28,
    sample_size: 100,
    training_size: 2_800,
    dev_samples: 50,
    test_samples: 250,
    separation: 6.0,
};

pub const T1B_QUICK: TaskPreset = TaskPreset {
    name: "t1b-quick",
    classes: 5,
    dim: 5,
    sample_size: 100,
    training_size: 500,
    dev_samples: 50,
    test_samples: 250,
    separation: 6.0,
};

pub const PRESETS: [TaskPreset; 5] = [T1A_PAPER, T1B_PAPER, T1A_DESK, T1B_DESK, T1B_QUICK];

impl FromStr for TaskPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        PRESETS
            .iter()
            .find(|p| p.name.eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
                Error::InvalidArgument(format!(
                    "unknown preset '{s}' (valid: {})",
                    names.join(", ")
                ))
            })
    }
}

impl fmt::Display for TaskPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!("T1A-paper".parse::<TaskPreset>().unwrap(), T1A_PAPER);
        let err = "t9".parse::<TaskPreset>().unwrap_err().to_string();
        assert!(err.contains("t1b-desk"));
    }

    #[test]
    fn every_class_has_its_own_axis() {
        for p in PRESETS {
            assert!(p.dim >= p.classes, "{p}");
        }
    }
}
