//! `KSGROOVE1` checkpoints: a fixed little-endian header followed by the
//! three velocity components, each in storage order.
//!
//! ```text
//! magic "KSGROOVE1" | n1 n2 n3: u64 | h1 h2 h3: f64 | bc1 bc2 bc3: u8
//! | time: f64 | step: u64 | u1, u2, u3: f64 × len
//! ```
//!
//! `bc` is 0 for periodic and 1 for clamped.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField3};
use crate::grid::{Bc, Grid};
use crate::integrator::SimState;

pub const MAGIC: &[u8; 9] = b"KSGROOVE1";
const HEADER_LEN: usize = 9 + 3 * 8 + 3 * 8 + 3 + 8 + 8;

pub fn encode(state: &SimState) -> Vec<u8> {
    let grid = state.u.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * 8 * grid.len());
    out.extend_from_slice(MAGIC);
    for n in grid.n {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for h in grid.h {
        out.extend_from_slice(&h.to_le_bytes());
    }
    for bc in grid.bc {
        out.push(match bc {
            Bc::Periodic => 0,
            Bc::Clamped => 1,
        });
    }
    out.extend_from_slice(&state.time.to_le_bytes());
    out.extend_from_slice(&state.step_index.to_le_bytes());
    for c in &state.u.comps {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::CorruptCheckpoint(format!(
                "truncated at byte {} (wanted {n} more of {})",
                self.pos,
                self.bytes.len()
            ))),
        }
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<SimState> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(MAGIC.len())? != MAGIC {
        return Err(Error::CorruptCheckpoint("bad magic".into()));
    }
    let mut n = [0usize; 3];
    for k in &mut n {
        *k = usize::try_from(c.u64()?)
            .map_err(|_| Error::CorruptCheckpoint("grid size overflows".into()))?;
    }
    let mut h = [0.0; 3];
    for k in &mut h {
        *k = c.f64()?;
    }
    let mut bc = [Bc::Periodic; 3];
    for (k, b) in c.take(3)?.iter().enumerate() {
        bc[k] = match b {
            0 => Bc::Periodic,
            1 => Bc::Clamped,
            other => {
                return Err(Error::CorruptCheckpoint(format!(
                    "unknown boundary flag {other}"
                )))
            }
        };
    }
    let time = c.f64()?;
    let step_index = c.u64()?;
    let extents = [0, 1, 2].map(|k| h[k] * n[k] as f64);
    let grid = Grid::new(extents, n, bc)
        .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    if grid.h != h {
        return Err(Error::CorruptCheckpoint("spacings do not round-trip".into()));
    }
    let len = grid.len();
    let expected = HEADER_LEN + 3 * 8 * len;
    if bytes.len() != expected {
        return Err(Error::CorruptCheckpoint(format!(
            "size {} does not match the header ({expected})",
            bytes.len()
        )));
    }
    let mut comps = Vec::with_capacity(3);
    for _ in 0..3 {
        let raw = c.take(8 * len)?;
        let values = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        comps.push(ScalarField::from_values(&grid, values)?);
    }
    let [u1, u2, u3]: [ScalarField; 3] = comps.try_into().expect("three components");
    Ok(SimState {
        u: VectorField3::new(u1, u2, u3)?,
        time,
        step_index,
    })
}

pub fn write(path: &Path, state: &SimState) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(state))?;
    f.sync_all()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<SimState> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datum::InitialData;
    use crate::groove::GrooveSpec;
    use proptest::prelude::*;

    fn state() -> SimState {
        let g = Grid::groove(&GrooveSpec::new(2.0, 4.0, 4.0).unwrap(), [8, 8, 10]).unwrap();
        let mut s = SimState::new(InitialData::default().build(&g).unwrap());
        s.time = 0.125;
        s.step_index = 125;
        s
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = state();
        let back = decode(&encode(&s)).unwrap();
        assert!(back.u.bitwise_eq(&s.u));
        assert_eq!(back.time.to_bits(), s.time.to_bits());
        assert_eq!(back.step_index, s.step_index);
        assert_eq!(back.u.grid(), s.u.grid());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ksg");
        let s = state();
        write(&p, &s).unwrap();
        assert!(read(&p).unwrap().u.bitwise_eq(&s.u));
    }

    #[test]
    fn truncated_and_corrupt_inputs_are_rejected() {
        let bytes = encode(&state());
        for cut in [0, 5, HEADER_LEN - 1, HEADER_LEN, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(Error::CorruptCheckpoint(_))), "{cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::CorruptCheckpoint(_))));
        let mut bad = bytes.clone();
        bad[9 + 48] = 7;
        assert!(matches!(decode(&bad), Err(Error::CorruptCheckpoint(_))));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(decode(&long), Err(Error::CorruptCheckpoint(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn arbitrary_values_round_trip(bits in prop::collection::vec(any::<u64>(), 64 * 3), t in any::<f64>(), step in any::<u64>()) {
            let g = Grid::periodic_box([1.0, 2.0, 3.0], [4, 4, 4]).unwrap();
            let f = |k: usize| ScalarField::from_values(&g, bits[64 * k..64 * (k + 1)].iter().map(|b| f64::from_bits(*b)).collect()).unwrap();
            let s = SimState { u: VectorField3::new(f(0), f(1), f(2)).unwrap(), time: t, step_index: step };
            let back = decode(&encode(&s)).unwrap();
            prop_assert!(back.u.bitwise_eq(&s.u));
            prop_assert_eq!(back.time.to_bits(), t.to_bits());
            prop_assert_eq!(back.step_index, step);
        }
    }
}
