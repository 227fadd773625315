use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mdm::{MemberId, Schema};

/// Base-level fact table, stored column-wise with dictionary-encoded
/// coordinates.
#[derive(Debug, Clone)]
pub struct DetailedCube {
    schema: Schema,
    coords: Vec<Vec<MemberId>>,
    measure_names: Vec<String>,
    measures: Vec<Vec<f64>>,
}

/// Packs coordinate tuples into a single integer when the base domain fits.
pub(crate) struct KeyPacker {
    radix: Option<Vec<u128>>,
}

impl KeyPacker {
    pub(crate) fn new(cards: &[usize]) -> Self {
        let mut radix = Vec::with_capacity(cards.len());
        let mut acc: u128 = 1;
        for &c in cards {
            radix.push(acc);
            match acc.checked_mul(c.max(1) as u128) {
                Some(v) => acc = v,
                None => return KeyPacker { radix: None },
            }
        }
        KeyPacker { radix: Some(radix) }
    }

    pub(crate) fn pack(&self, coord: impl Iterator<Item = MemberId>) -> Option<u128> {
        let radix = self.radix.as_ref()?;
        Some(coord.zip(radix).map(|(m, r)| m as u128 * r).sum())
    }
}

enum Seen {
    Packed(HashSet<u128>),
    Tuples(HashSet<Vec<MemberId>>),
}

impl DetailedCube {
    /// Builds a cube from columns. Rejects invalid members and duplicate
    /// coordinates.
    pub fn from_columns(
        schema: Schema,
        coords: Vec<Vec<MemberId>>,
        measure_names: Vec<String>,
        measures: Vec<Vec<f64>>,
    ) -> Result<DetailedCube> {
        if coords.len() != schema.n_dims() {
            return Err(Error::MalformedFacts(format!(
                "{} coordinate columns for {} dimensions",
                coords.len(),
                schema.n_dims()
            )));
        }
        if measures.len() != measure_names.len() {
            return Err(Error::MalformedFacts("measure name/column count differ".into()));
        }
        let n = coords.first().map_or(0, Vec::len);
        if coords.iter().any(|c| c.len() != n) || measures.iter().any(|m| m.len() != n) {
            return Err(Error::MalformedFacts("columns have different lengths".into()));
        }
        for (d, col) in coords.iter().enumerate() {
            let card = schema.dim(d).base_cardinality();
            if let Some(&bad) = col.iter().find(|&&m| m as usize >= card) {
                return Err(Error::InvalidMember {
                    dim: schema.dim(d).name().to_string(),
                    depth: 0,
                    id: bad,
                });
            }
        }
        let cube = DetailedCube {
            schema,
            coords,
            measure_names,
            measures,
        };
        cube.check_unique()?;
        Ok(cube)
    }

    fn check_unique(&self) -> Result<()> {
        let cards: Vec<usize> = self
            .schema
            .dims()
            .iter()
            .map(|d| d.base_cardinality())
            .collect();
        let packer = KeyPacker::new(&cards);
        let mut seen = if packer.radix.is_some() {
            Seen::Packed(HashSet::with_capacity(self.n_rows()))
        } else {
            Seen::Tuples(HashSet::with_capacity(self.n_rows()))
        };
        for r in 0..self.n_rows() {
            let fresh = match &mut seen {
                Seen::Packed(s) => s.insert(packer.pack(self.coord_iter(r)).expect("fits")),
                Seen::Tuples(s) => s.insert(self.coord(r)),
            };
            if !fresh {
                return Err(Error::DuplicateCoordinate(r));
            }
        }
        Ok(())
    }

    /// Reads a fact CSV: one column per dimension (named after the dimension
    /// or its base level, any order), every other column is a measure.
    pub fn from_csv<R: Read>(schema: Schema, reader: R) -> Result<DetailedCube> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut dim_col: Vec<Option<usize>> = vec![None; schema.n_dims()];
        let mut measure_cols = Vec::new();
        for (i, h) in header.iter().enumerate() {
            let hit = schema.dims().iter().position(|d| {
                d.name().eq_ignore_ascii_case(h) || d.level(0).name().eq_ignore_ascii_case(h)
            });
            match hit {
                Some(d) if dim_col[d].is_none() => dim_col[d] = Some(i),
                Some(_) => {
                    return Err(Error::MalformedFacts(format!("column {h} appears twice")))
                }
                None => measure_cols.push(i),
            }
        }
        let dim_col: Vec<usize> = dim_col
            .into_iter()
            .enumerate()
            .map(|(d, c)| {
                c.ok_or_else(|| {
                    Error::MalformedFacts(format!(
                        "no column for dimension {}",
                        schema.dim(d).name()
                    ))
                })
            })
            .collect::<Result<_>>()?;

        let mut coords = vec![Vec::new(); schema.n_dims()];
        let mut measures = vec![Vec::new(); measure_cols.len()];
        for rec in rdr.records() {
            let rec = rec?;
            for (d, &c) in dim_col.iter().enumerate() {
                let label = rec.get(c).unwrap_or("");
                let dim = schema.dim(d);
                let id = dim.level(0).lookup(label).ok_or_else(|| Error::UnknownMember {
                    level: format!("{}.{}", dim.name(), dim.level(0).name()),
                    member: label.to_string(),
                })?;
                coords[d].push(id);
            }
            for (k, &c) in measure_cols.iter().enumerate() {
                let raw = rec.get(c).unwrap_or("");
                let v: f64 = raw.parse().map_err(|_| {
                    Error::MalformedFacts(format!("measure {} value {raw:?}", header[c]))
                })?;
                measures[k].push(v);
            }
        }
        let names = measure_cols.iter().map(|&c| header[c].clone()).collect();
        DetailedCube::from_columns(schema, coords, names, measures)
    }

    pub fn load(schema: Schema, path: &Path) -> Result<DetailedCube> {
        DetailedCube::from_csv(schema, std::fs::File::open(path)?)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.coords.first().map_or(0, Vec::len)
    }

    pub fn n_dims(&self) -> usize {
        self.schema.n_dims()
    }

    pub fn column(&self, dim: usize) -> &[MemberId] {
        &self.coords[dim]
    }

    pub fn coord(&self, row: usize) -> Vec<MemberId> {
        self.coord_iter(row).collect()
    }

    fn coord_iter(&self, row: usize) -> impl Iterator<Item = MemberId> + '_ {
        self.coords.iter().map(move |c| c[row])
    }

    pub fn measure_names(&self) -> &[String] {
        &self.measure_names
    }

    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measure_names
            .iter()
            .position(|m| m.eq_ignore_ascii_case(name))
    }

    pub fn measure(&self, m: usize) -> &[f64] {
        &self.measures[m]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdm::Dimension;

    fn schema() -> Schema {
        let geo = Dimension::from_csv(
            "Geo",
            "City,Country\nAthens,Greece\nPatras,Greece\nParis,France\n".as_bytes(),
        )
        .unwrap();
        let t = Dimension::from_csv("Time", "Year\n2020\n2021\n".as_bytes()).unwrap();
        Schema::new(vec![geo, t])
    }

    #[test]
    fn csv_columns_map_by_name() {
        let facts = "Year,City,sales\n2020,Athens,10\n2021,Athens,12\n2020,Paris,3\n";
        let c = DetailedCube::from_csv(schema(), facts.as_bytes()).unwrap();
        assert_eq!(c.n_rows(), 3);
        assert_eq!(c.measure_names(), ["sales"]);
        assert_eq!(c.coord(2), vec![2, 0]);
        assert_eq!(c.measure(0), [10.0, 12.0, 3.0]);
    }

    #[test]
    fn rejects_duplicates_and_unknown_members() {
        let dup = "City,Year,sales\nAthens,2020,1\nAthens,2020,2\n";
        assert!(matches!(
            DetailedCube::from_csv(schema(), dup.as_bytes()),
            Err(Error::DuplicateCoordinate(1))
        ));
        let unk = "City,Year,sales\nRome,2020,1\n";
        assert!(matches!(
            DetailedCube::from_csv(schema(), unk.as_bytes()),
            Err(Error::UnknownMember { .. })
        ));
        let bad = "City,Year,sales\nAthens,2020,abc\n";
        assert!(matches!(
            DetailedCube::from_csv(schema(), bad.as_bytes()),
            Err(Error::MalformedFacts(_))
        ));
    }
}
