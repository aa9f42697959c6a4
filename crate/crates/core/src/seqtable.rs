//! The public table of symbols and precheck selection.
//!
//! The table holds `T` constellation symbols stored twice back to back, so any
//! run of at most `T` symbols that starts in the first half is a contiguous
//! slice of the doubled view. Indices are 0-based throughout: table entry `0`
//! is the first symbol.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::phy::Modulation;

/// Loaded symbols must lie this close to a constellation point.
const LOAD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    doubled: Vec<Complex64>,
}

impl SymbolTable {
    /// Build from the `T` base symbols.
    pub fn from_base(base: Vec<Complex64>) -> Result<Self> {
        if base.len() < 2 {
            return Err(Error::config(
                "table_length",
                format!("table length {} is below 2", base.len()),
            ));
        }
        let mut doubled = base.clone();
        doubled.extend(base);
        Ok(Self { doubled })
    }

    /// Table length `T`.
    pub fn len(&self) -> usize {
        self.doubled.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.doubled.is_empty()
    }

    pub fn base(&self) -> &[Complex64] {
        &self.doubled[..self.len()]
    }

    pub fn doubled(&self) -> &[Complex64] {
        &self.doubled
    }

    /// Plain-text dump, one `index,re,im` line per base symbol.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.base().iter().enumerate() {
            let _ = writeln!(out, "{i},{:?},{:?}", s.re, s.im);
        }
        out
    }

    /// Parse a dump produced by [`SymbolTable::to_text`]. Every entry must be
    /// a point of `modulation` and indices must run `0..T` in order.
    pub fn from_text(text: &str, modulation: &Modulation) -> Result<Self> {
        let mut base = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                line: lineno + 1,
                reason,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected index,re,im, got {line:?}")));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad index {:?}", fields[0])))?;
            if index != base.len() {
                return Err(parse_err(format!(
                    "index {index} out of order, expected {}",
                    base.len()
                )));
            }
            let re: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad real part {:?}", fields[1])))?;
            let im: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad imaginary part {:?}", fields[2])))?;
            let s = Complex64::new(re, im);
            let nearest = modulation.point(modulation.nearest(s));
            if (nearest - s).norm() > LOAD_TOLERANCE {
                return Err(parse_err(format!(
                    "{s} is not a {}-QAM point",
                    modulation.order()
                )));
            }
            base.push(nearest);
        }
        Self::from_base(base)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, modulation: &Modulation) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, modulation)
    }
}

/// `T` i.i.d. uniform constellation symbols, doubled.
pub fn generate_table<R: Rng + ?Sized>(
    table_len: usize,
    modulation: &Modulation,
    rng: &mut R,
) -> Result<SymbolTable> {
    if table_len < 2 {
        return Err(Error::config(
            "table_length",
            format!("table length {table_len} is below 2"),
        ));
    }
    let base = (0..table_len)
        .map(|_| modulation.point(rng.random_range(0..modulation.order())))
        .collect();
    SymbolTable::from_base(base)
}

/// Start index and length of the selected symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecheckSelection {
    pub start: usize,
    pub length: usize,
}

impl PrecheckSelection {
    pub fn validate(&self, table_len: usize) -> Result<()> {
        if self.start >= table_len || self.length == 0 || self.length > table_len {
            return Err(Error::Selection {
                start: self.start,
                length: self.length,
                table_len,
            });
        }
        Ok(())
    }
}

/// The selected symbols: `doubled[start .. start + length]`.
pub fn select_precheck(table: &SymbolTable, sel: PrecheckSelection) -> Result<Vec<Complex64>> {
    sel.validate(table.len())?;
    Ok(table.doubled()[sel.start..sel.start + sel.length].to_vec())
}

/// Uniform start over `[0, T)` with the fixed length `length`.
pub fn random_selection<R: Rng + ?Sized>(
    table_len: usize,
    length: usize,
    rng: &mut R,
) -> Result<PrecheckSelection> {
    if length == 0 || length > table_len {
        return Err(Error::config(
            "seq_length",
            format!("sequence length {length} outside [1, {table_len}]"),
        ));
    }
    let start = if table_len == 1 {
        0
    } else {
        rng.random_range(0..table_len)
    };
    Ok(PrecheckSelection { start, length })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(seed: u64) -> SymbolTable {
        generate_table(32, &Modulation::qam16(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn doubling_holds_everywhere() {
        let t = table(1);
        assert_eq!(t.doubled()[5], t.doubled()[37]);
        for i in 0..t.len() {
            assert_eq!(t.doubled()[i], t.doubled()[i + t.len()]);
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(table(42), table(42));
        assert_ne!(table(42), table(43));
    }

    #[test]
    fn entries_are_constellation_points() {
        let m = Modulation::qam16();
        let t = table(5);
        for s in t.doubled() {
            assert!(m.constellation().contains(s));
        }
    }

    #[test]
    fn short_tables_are_rejected() {
        let m = Modulation::qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            generate_table(1, &m, &mut rng),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn wrapped_selection() {
        let t = table(9);
        let got = select_precheck(&t, PrecheckSelection { start: 30, length: 8 }).unwrap();
        let want: Vec<_> = [30, 31, 0, 1, 2, 3, 4, 5]
            .iter()
            .map(|&i| t.base()[i])
            .collect();
        assert_eq!(got, want);
        let one = select_precheck(&t, PrecheckSelection { start: 0, length: 1 }).unwrap();
        assert_eq!(one, vec![t.base()[0]]);
    }

    #[test]
    fn slice_equals_circular_indexing() {
        let t = table(17);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let start = rng.random_range(0..32);
            let length = rng.random_range(1..=32);
            let got = select_precheck(&t, PrecheckSelection { start, length }).unwrap();
            let want: Vec<_> = (0..length).map(|k| t.base()[(start + k) % 32]).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn invalid_selections() {
        let t = table(0);
        for (start, length) in [(32, 1), (0, 33), (0, 0), (40, 8)] {
            assert!(matches!(
                select_precheck(&t, PrecheckSelection { start, length }),
                Err(Error::Selection { .. })
            ));
        }
    }

    #[test]
    fn random_selection_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let sel = random_selection(32, 8, &mut rng).unwrap();
            assert_eq!(sel.length, 8);
            assert!(sel.start < 32);
        }
        assert_eq!(random_selection(1, 1, &mut rng).unwrap().start, 0);
        assert!(random_selection(32, 33, &mut rng).is_err());
        assert!(random_selection(32, 0, &mut rng).is_err());
    }

    #[test]
    fn random_selection_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut counts = [0usize; 32];
        for _ in 0..n {
            counts[random_selection(32, 8, &mut rng).unwrap().start] += 1;
        }
        let p = 1.0 / 32.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let expected = n as f64 * p;
        for (i, &c) in counts.iter().enumerate() {
            assert!((c as f64 - expected).abs() < 4.0 * sigma, "start {i}: {c}");
        }
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 31 degrees of freedom, 0.999 quantile ≈ 61.1
        assert!(chi2 < 61.1, "chi2 = {chi2}");
    }

    #[test]
    fn text_dump_roundtrip() {
        let m = Modulation::qam16();
        let t = table(3);
        let text = t.to_text();
        assert_eq!(text.lines().count(), 32);
        assert!(text.starts_with("0,"));
        assert_eq!(SymbolTable::from_text(&text, &m).unwrap(), t);
    }

    #[test]
    fn text_load_rejects_foreign_points() {
        let m = Modulation::qam16();
        assert!(matches!(
            SymbolTable::from_text("0,0.5,0.5\n1,0.5,0.5\n", &m),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            SymbolTable::from_text("1,0.31622776601683794,0.31622776601683794\n", &m),
            Err(Error::Parse { .. })
        ));
    }
}
