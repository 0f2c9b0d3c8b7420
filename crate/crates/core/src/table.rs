//! Storage for truncated moment sequences.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::index::{canonicalize, MomentIndex};
use crate::model::MeasureTag;
use crate::scalar::{Complex, Real};

/// Complex moments keyed by canonical index.
///
/// Lookups of a non-canonical index return the conjugate of the stored value.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable<T: Real> {
    entries: BTreeMap<MomentIndex, Complex<T>>,
}

impl<T: Real> Default for MomentTable<T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: Real> MomentTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `value` for `idx`, conjugating it when `idx` is not canonical.
    pub fn insert(&mut self, idx: &MomentIndex, value: Complex<T>) {
        let c = canonicalize(idx);
        let v = if c.conjugated { value.conj() } else { value };
        self.entries.insert(c.index, v);
    }

    pub fn get(&self, idx: &MomentIndex) -> Option<Complex<T>> {
        let c = canonicalize(idx);
        self.entries
            .get(&c.index)
            .map(|v| if c.conjugated { v.conj() } else { *v })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical entries in index order.
    pub fn iter(&self) -> impl Iterator<Item = (&MomentIndex, &Complex<T>)> {
        self.entries.iter()
    }

    pub fn map_values(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            entries: self.entries.iter().map(|(k, v)| (k.clone(), f(*v))).collect(),
        }
    }

    /// Writes `l,freqs,re,im` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["l", "freqs", "re", "im"])?;
        for (idx, v) in &self.entries {
            w.write_record([
                idx.time_degree().to_string(),
                idx.freqs_label(),
                format!("{:.16e}", v.re.to_f64_lossy() + 0.0),
                format!("{:.16e}", v.im.to_f64_lossy() + 0.0),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl<T: Real> FromIterator<(MomentIndex, Complex<T>)> for MomentTable<T> {
    fn from_iter<I: IntoIterator<Item = (MomentIndex, Complex<T>)>>(iter: I) -> Self {
        let mut t = Self::new();
        for (k, v) in iter {
            t.insert(&k, v);
        }
        t
    }
}

/// Moment tables of the initial, terminal and occupation measures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasureTables<T: Real> {
    pub initial: MomentTable<T>,
    pub terminal: MomentTable<T>,
    pub occupation: MomentTable<T>,
}

impl<T: Real> MeasureTables<T> {
    pub fn table(&self, measure: MeasureTag) -> &MomentTable<T> {
        match measure {
            MeasureTag::Initial => &self.initial,
            MeasureTag::Terminal => &self.terminal,
            MeasureTag::Occupation => &self.occupation,
        }
    }

    pub fn table_mut(&mut self, measure: MeasureTag) -> &mut MomentTable<T> {
        match measure {
            MeasureTag::Initial => &mut self.initial,
            MeasureTag::Terminal => &mut self.terminal,
            MeasureTag::Occupation => &mut self.occupation,
        }
    }

    pub fn lookup(&self, measure: MeasureTag, idx: &MomentIndex) -> Result<Complex<T>> {
        self.table(measure).get(idx).ok_or_else(|| Error::MissingMoment {
            measure,
            index: idx.clone(),
        })
    }

    /// Writes `measure,l,freqs,re,im` rows for every stored moment.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["measure", "l", "freqs", "re", "im"])?;
        for measure in MeasureTag::ALL {
            for (idx, v) in self.table(measure).iter() {
                // `+ 0.0` prints -0 as 0
                w.write_record([
                    measure.name().to_string(),
                    idx.time_degree().to_string(),
                    idx.freqs_label(),
                    format!("{:.16e}", v.re.to_f64_lossy() + 0.0),
                    format!("{:.16e}", v.im.to_f64_lossy() + 0.0),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format produced by [`MeasureTables::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut tables = Self::default();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = row + 2;
            let parse_err = |msg: String| Error::Parse { line, msg };
            if rec.len() != 5 {
                return Err(parse_err(format!("expected 5 fields, found {}", rec.len())));
            }
            let measure = MeasureTag::from_name(&rec[0])
                .ok_or_else(|| parse_err(format!("unknown measure {:?}", &rec[0])))?;
            let l: u32 = rec[1]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("time degree: {e}")))?;
            let freqs = MomentIndex::parse_freqs_label(&rec[2]).map_err(parse_err)?;
            let re: f64 = rec[3]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("re: {e}")))?;
            let im: f64 = rec[4]
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("im: {e}")))?;
            tables
                .table_mut(measure)
                .insert(&MomentIndex::new(l, freqs), Complex::new(T::lit(re), T::lit(im)));
        }
        Ok(tables)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugated_lookup() {
        let mut t = MomentTable::<f64>::new();
        t.insert(&MomentIndex::new(0, vec![2, -1]), Complex::new(1.0, 2.0));
        assert_eq!(t.get(&MomentIndex::new(0, vec![-1, 2])), Some(Complex::new(1.0, 2.0)));
        assert_eq!(t.get(&MomentIndex::new(0, vec![1, -2])), Some(Complex::new(1.0, -2.0)));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn missing_lookup_names_index() {
        let tables = MeasureTables::<f64>::default();
        let err = tables
            .lookup(MeasureTag::Occupation, &MomentIndex::new(1, vec![3]))
            .unwrap_err();
        assert!(err.to_string().contains("y[1; 3]"), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let mut tables = MeasureTables::<f64>::default();
        tables
            .occupation
            .insert(&MomentIndex::new(2, vec![1, -1]), Complex::new(0.1, 0.0));
        tables
            .terminal
            .insert(&MomentIndex::new(0, vec![1]), Complex::new(std::f64::consts::E.recip(), -1e-300));
        tables.initial.insert(&MomentIndex::empty(0), Complex::new(1.0, 0.0));
        let mut buf = Vec::new();
        tables.write_csv(&mut buf).unwrap();
        let back = MeasureTables::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, tables);
    }
}
