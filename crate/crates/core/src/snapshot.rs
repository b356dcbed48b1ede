//! CSV formats for snapshots and filter ledgers.
//!
//! A snapshot starts with `# t=<time>`, then a `m,x,re,im` header and one
//! row per stored sample. Numbers are written with 17 significant digits,
//! which round-trips every `f64`.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filters::LedgerRow;
use crate::grid::GridSpec;
use crate::state::MultiscaleState;

pub fn write_snapshot(w: &mut impl Write, state: &MultiscaleState) -> Result<()> {
    writeln!(w, "# t={:.16e}", state.time)?;
    writeln!(w, "m,x,re,im")?;
    let grid = state.grid();
    for (m, ring) in state.rings().iter().enumerate() {
        for (i, z) in ring.iter().enumerate() {
            writeln!(
                w,
                "{m},{:.16e},{:.16e},{:.16e}",
                grid.ring_abscissa(m, i),
                z.re,
                z.im
            )?;
        }
    }
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`] for the same grid.
pub fn read_snapshot(r: impl BufRead, grid: &GridSpec) -> Result<MultiscaleState> {
    let mut lines = r.lines().enumerate();
    let bad = |line: usize, msg: &str| Error::Snapshot(format!("line {}: {msg}", line + 1));

    let (ln, first) = lines.next().ok_or_else(|| Error::Snapshot("empty input".into()))?;
    let first = first?;
    let time: f64 = first
        .strip_prefix("# t=")
        .ok_or_else(|| bad(ln, "expected '# t=<time>'"))?
        .trim()
        .parse()
        .map_err(|_| bad(ln, "unparsable time"))?;
    let (ln, header) = lines.next().ok_or_else(|| Error::Snapshot("missing header".into()))?;
    if header?.trim() != "m,x,re,im" {
        return Err(bad(ln, "expected header 'm,x,re,im'"));
    }
    let mut rings: Vec<Vec<Complex64>> = (0..=grid.scales()).map(|m| Vec::with_capacity(grid.ring_len(m))).collect();
    for (ln, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let mut field = |name: &str| it.next().ok_or_else(|| bad(ln, &format!("missing {name}")));
        let m: usize = field("m")?.trim().parse().map_err(|_| bad(ln, "bad scale index"))?;
        let x: f64 = field("x")?.trim().parse().map_err(|_| bad(ln, "bad x"))?;
        let re: f64 = field("re")?.trim().parse().map_err(|_| bad(ln, "bad re"))?;
        let im: f64 = field("im")?.trim().parse().map_err(|_| bad(ln, "bad im"))?;
        let ring = rings.get_mut(m).ok_or_else(|| bad(ln, "scale index out of range"))?;
        let i = ring.len();
        if i >= grid.ring_len(m) {
            return Err(bad(ln, "too many samples for ring"));
        }
        let expect = grid.ring_abscissa(m, i);
        if (x - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
            return Err(bad(ln, &format!("abscissa {x} does not match grid point {expect}")));
        }
        ring.push(Complex64::new(re, im));
    }
    MultiscaleState::from_rings(grid, rings, time)
}

pub fn write_ledger_header(w: &mut impl Write) -> Result<()> {
    writeln!(w, "t,n,side,removed_mass,mean_k")?;
    Ok(())
}

pub fn write_ledger_rows(w: &mut impl Write, rows: &[LedgerRow]) -> Result<()> {
    for r in rows {
        writeln!(
            w,
            "{:.16e},{},{},{:.16e},{:.16e}",
            r.t, r.n, r.side, r.removed_mass, r.mean_k
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::Side;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let g = GridSpec::from_samples(512, 0.1, 2, 1e-4).unwrap();
        let mut s = MultiscaleState::from_fn(&g, |x| Complex64::new((0.37 * x).sin() / 3.0, 1.0 / (1.0 + x * x)));
        s.time = 1.0 / 3.0;
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s).unwrap();
        let back = read_snapshot(buf.as_slice(), &g).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        let g = GridSpec::from_samples(512, 0.1, 0, 1e-4).unwrap();
        for text in ["", "t=0\nm,x,re,im\n", "# t=0\nm,x\n", "# t=0\nm,x,re,im\n0,5.0,1,1\n"] {
            assert!(matches!(read_snapshot(text.as_bytes(), &g), Err(Error::Snapshot(_)) | Err(Error::GridMismatch(_))), "{text:?}");
        }
    }

    #[test]
    fn ledger_rows_have_five_columns() {
        let mut buf = Vec::new();
        write_ledger_header(&mut buf).unwrap();
        write_ledger_rows(
            &mut buf,
            &[LedgerRow {
                t: 0.5,
                n: 1,
                side: Side::Left,
                removed_mass: 1e-3,
                mean_k: -4.0,
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,n,side,removed_mass,mean_k");
        assert_eq!(lines[1].split(',').count(), 5);
        assert!(lines[1].contains(",left,"));
    }
}
