//! Instruction subset and program-loop construction.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The AVR instruction subset exercised by the capture loop, with clock lengths.
pub const REFERENCE_SUBSET: [(&str, u8); 11] = [
    ("sbi", 2),
    ("nop", 1),
    ("add", 1),
    ("sub", 1),
    ("cbi", 2),
    ("push", 2),
    ("pop", 2),
    ("mul", 2),
    ("eor", 1),
    ("movw", 1),
    ("rjmp", 2),
];

/// Mnemonic that only restarts the loop.
pub const LOOP_RESTART: &str = "rjmp";

/// Name of the built-in loop preset.
pub const REFERENCE_PRESET: &str = "table1-loop";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub mnemonic: String,
    pub clock_length: u8,
}

/// Class of one clock cycle: which instruction and which of its cycles.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CycleLabel {
    pub mnemonic: String,
    pub cycle: usize,
}

impl CycleLabel {
    pub fn new(mnemonic: impl Into<String>, cycle: usize) -> Self {
        Self {
            mnemonic: mnemonic.into(),
            cycle,
        }
    }
}

impl fmt::Display for CycleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.mnemonic, self.cycle)
    }
}

/// An ordered instruction sequence executed repeatedly by the device.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramLoop {
    instructions: Vec<Instruction>,
}

impl ProgramLoop {
    pub fn new(instructions: Vec<Instruction>) -> Result<Self> {
        if instructions.is_empty() {
            return Err(Error::invalid("program loop has no instructions"));
        }
        for ins in &instructions {
            if !(1..=2).contains(&ins.clock_length) {
                return Err(Error::invalid(format!(
                    "{}: clock length {} not in {{1, 2}}",
                    ins.mnemonic, ins.clock_length
                )));
            }
            if ins.mnemonic.is_empty() || ins.mnemonic.contains(char::is_whitespace) {
                return Err(Error::invalid(format!("bad mnemonic {:?}", ins.mnemonic)));
            }
        }
        Ok(Self { instructions })
    }

    /// Every non-restart instruction of the subset paired with every other one,
    /// closed by a single `rjmp`. 191 instructions over 287 cycles.
    pub fn reference() -> Self {
        let body: Vec<(&str, u8)> = REFERENCE_SUBSET
            .iter()
            .copied()
            .filter(|(m, _)| *m != LOOP_RESTART)
            .collect();
        let mut seq = Vec::new();
        for (i, first) in body.iter().enumerate() {
            seq.push(*first);
            for (j, second) in body.iter().enumerate() {
                if i != j {
                    seq.push(*first);
                    seq.push(*second);
                }
            }
        }
        let restart = REFERENCE_SUBSET
            .iter()
            .find(|(m, _)| *m == LOOP_RESTART)
            .copied()
            .expect("restart instruction in subset");
        seq.push(restart);
        let instructions = seq
            .into_iter()
            .map(|(m, c)| Instruction {
                mnemonic: m.to_string(),
                clock_length: c,
            })
            .collect();
        Self { instructions }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            REFERENCE_PRESET => Ok(Self::reference()),
            other => Err(Error::invalid(format!("unknown loop preset {other:?}"))),
        }
    }

    /// Parses one `mnemonic clock_length` pair per line. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut instructions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ParseLine {
                path: origin.to_path_buf(),
                line: idx + 1,
                msg,
            };
            let mut parts = line.split_whitespace();
            let (Some(m), Some(c), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!(
                    "expected `mnemonic clock_length`, got {line:?}"
                )));
            };
            let clock_length: u8 = c
                .parse()
                .map_err(|_| err(format!("clock length {c:?} is not an integer")))?;
            if !(1..=2).contains(&clock_length) {
                return Err(err(format!("clock length {clock_length} not in {{1, 2}}")));
            }
            instructions.push(Instruction {
                mnemonic: m.to_string(),
                clock_length,
            });
        }
        if instructions.is_empty() {
            return Err(Error::Metadata {
                path: origin.to_path_buf(),
                msg: "program loop file has no instructions".into(),
            });
        }
        Ok(Self { instructions })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.instructions
            .iter()
            .map(|i| format!("{} {}\n", i.mnemonic, i.clock_length))
            .collect()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn total_cycles(&self) -> usize {
        self.instructions
            .iter()
            .map(|i| i.clock_length as usize)
            .sum()
    }

    /// Per-cycle labels in execution order.
    pub fn cycle_labels(&self) -> Vec<CycleLabel> {
        self.instructions
            .iter()
            .flat_map(|i| {
                (0..i.clock_length as usize).map(move |c| CycleLabel::new(&i.mnemonic, c))
            })
            .collect()
    }

    /// Distinct labels, sorted.
    pub fn distinct_labels(&self) -> Vec<CycleLabel> {
        let mut labels = self.cycle_labels();
        labels.sort();
        labels.dedup();
        labels
    }

    pub fn occurrences(&self, mnemonic: &str) -> usize {
        self.instructions
            .iter()
            .filter(|i| i.mnemonic == mnemonic)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_loop_counts() {
        let lp = ProgramLoop::reference();
        assert_eq!(lp.instructions().len(), 191);
        assert_eq!(lp.total_cycles(), 287);
        for (m, _) in REFERENCE_SUBSET.iter().filter(|(m, _)| *m != LOOP_RESTART) {
            assert_eq!(lp.occurrences(m), 19, "{m}");
        }
        assert_eq!(lp.occurrences("rjmp"), 1);
        assert_eq!(lp.instructions().last().unwrap().mnemonic, "rjmp");
    }

    #[test]
    fn reference_loop_pairs_every_ordered_pair() {
        let lp = ProgramLoop::reference();
        let names: Vec<&str> = lp
            .instructions()
            .iter()
            .map(|i| i.mnemonic.as_str())
            .collect();
        for (a, _) in REFERENCE_SUBSET.iter().filter(|(m, _)| *m != LOOP_RESTART) {
            for (b, _) in REFERENCE_SUBSET.iter().filter(|(m, _)| *m != LOOP_RESTART) {
                if a != b {
                    assert!(
                        names.windows(2).any(|w| w[0] == *a && w[1] == *b),
                        "{a} {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn parse_round_trips_text() {
        let lp = ProgramLoop::reference();
        let back = ProgramLoop::parse(&lp.to_text(), Path::new("x")).unwrap();
        assert_eq!(back, lp);
    }

    #[test]
    fn parse_rejects_bad_lines() {
        let err = ProgramLoop::parse("nop 1\nadd three\n", Path::new("l.txt")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ProgramLoop::parse("nop 3", Path::new("l")).is_err());
        assert!(ProgramLoop::parse("# only a comment\n", Path::new("l")).is_err());
        let ok = ProgramLoop::parse("nop 1 # idle\n\nmul 2\n", Path::new("l")).unwrap();
        assert_eq!(ok.total_cycles(), 3);
    }

    #[test]
    fn unknown_preset() {
        assert!(ProgramLoop::preset("nope").is_err());
        assert_eq!(
            ProgramLoop::preset(REFERENCE_PRESET)
                .unwrap()
                .total_cycles(),
            287
        );
    }
}
