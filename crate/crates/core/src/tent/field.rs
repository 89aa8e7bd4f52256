use std::io::{Read, Write};

use crate::error::{check_len, invalid, Result};
use crate::mesh::Grid;
use crate::real::Real;

/// Values `F(y, t_j)` on `grid x ladder`, possibly vector-valued (the
/// gradient integrands have one component per space-time direction).
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaceField<T> {
    grid: Grid,
    nodes: usize,
    components: usize,
    /// `F(y, t_j)_c` at `(j * cells + y) * components + c`.
    data: Vec<T>,
}

impl<T: Real> HalfSpaceField<T> {
    pub fn new(grid: &Grid, nodes: usize, components: usize, data: Vec<T>) -> Result<Self> {
        if components == 0 {
            return invalid("a field needs at least one component");
        }
        check_len(grid.num_cells() * nodes * components, data.len())?;
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return invalid(format!("field values must be finite, found {bad}"));
        }
        Ok(Self {
            grid: grid.clone(),
            nodes,
            components,
            data,
        })
    }

    pub fn zeros(grid: &Grid, nodes: usize, components: usize) -> Self {
        Self {
            grid: grid.clone(),
            nodes,
            components,
            data: vec![T::zero(); grid.num_cells() * nodes * components],
        }
    }

    /// Stacks per-node slices: `layers[j][c][y]`.
    pub fn from_layers(grid: &Grid, layers: &[Vec<Vec<T>>]) -> Result<Self> {
        let components = layers.first().map_or(1, |l| l.len());
        let n = grid.num_cells();
        let mut data = Vec::with_capacity(layers.len() * n * components);
        for layer in layers {
            check_len(components, layer.len())?;
            for c in layer {
                check_len(n, c.len())?;
            }
            for y in 0..n {
                data.extend(layer.iter().map(|c| c[y]));
            }
        }
        Self::new(grid, layers.len(), components, data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn num_cells(&self) -> usize {
        self.grid.num_cells()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    fn offset(&self, j: usize, y: usize) -> usize {
        (j * self.num_cells() + y) * self.components
    }

    pub fn get(&self, j: usize, y: usize) -> &[T] {
        let o = self.offset(j, y);
        &self.data[o..o + self.components]
    }

    pub fn set(&mut self, j: usize, y: usize, c: usize, value: T) {
        let o = self.offset(j, y);
        self.data[o + c] = value;
    }

    /// `|F(y, t_j)|^2`.
    pub fn norm2(&self, j: usize, y: usize) -> T {
        self.get(j, y).iter().map(|v| *v * *v).sum()
    }

    /// Keeps the leading `count` components (e.g. drops the time derivative).
    pub fn leading(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.components {
            return invalid(format!(
                "cannot keep {count} of {} components",
                self.components
            ));
        }
        let data = self
            .data
            .chunks(self.components)
            .flat_map(|c| c[..count].iter().copied())
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            nodes: self.nodes,
            components: count,
            data,
        })
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// CSV with columns `i0[, i1], t_index, value[_c]`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.grid.dim()).map(|d| format!("i{d}")).collect();
        header.push("t_index".into());
        if self.components == 1 {
            header.push("value".into());
        } else {
            header.extend((0..self.components).map(|c| format!("value_{c}")));
        }
        w.write_record(&header)?;
        for j in 0..self.nodes {
            for y in 0..self.num_cells() {
                let coords = self.grid.coords(y);
                let mut row: Vec<String> = coords[..self.grid.dim()]
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                row.push(j.to_string());
                row.extend(self.get(j, y).iter().map(|v| format!("{:e}", v.as_f64())));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`HalfSpaceField::write_csv`]; every `(cell, node)` pair must appear once.
    pub fn read_csv<R: Read>(grid: &Grid, nodes: usize, input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let dim = grid.dim();
        let components = r.headers()?.len().saturating_sub(dim + 1);
        let mut out = Self::zeros(grid, nodes, components.max(1));
        let mut seen = vec![false; grid.num_cells() * nodes];
        for record in r.records() {
            let record = record?;
            let num = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| {
                        crate::Error::InvalidArgument(format!("bad CSV field {i} in {record:?}"))
                    })
            };
            let mut coords = [0usize; 2];
            for (d, c) in coords.iter_mut().enumerate().take(dim) {
                *c = num(d)? as usize;
            }
            let j = num(dim)? as usize;
            if coords.iter().any(|&c| c >= grid.cells_per_side()) || j >= nodes {
                return invalid(format!("CSV row {record:?} outside the grid"));
            }
            let y = grid.index(coords);
            seen[j * grid.num_cells() + y] = true;
            for c in 0..components {
                let v = num(dim + 1 + c)?;
                if !v.is_finite() {
                    return invalid(format!("non-finite value in {record:?}"));
                }
                out.set(j, y, c, T::of(v));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return invalid(format!(
                "CSV is missing (node, cell) = {:?}",
                (missing / grid.num_cells(), missing % grid.num_cells())
            ));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let g = Grid::new(2, 4).unwrap();
        let data: Vec<f64> = (0..16 * 3 * 2).map(|i| (i as f64 * 0.37).sin()).collect();
        let f = HalfSpaceField::new(&g, 3, 2, data).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i0,i1,t_index,value_0,value_1\n"));
        let back = HalfSpaceField::<f64>::read_csv(&g, 3, buf.as_slice()).unwrap();
        for (a, b) in f.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-15);
        }
        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(HalfSpaceField::<f64>::read_csv(&g, 3, truncated.as_bytes()).is_err());
    }

    #[test]
    fn layers_and_components() {
        let g = Grid::new(1, 4).unwrap();
        let layers = vec![vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 0.0, 1.0, 0.0]]; 2];
        let f = HalfSpaceField::from_layers(&g, &layers).unwrap();
        assert_eq!(f.get(1, 2), &[3.0, 1.0]);
        assert_eq!(f.norm2(1, 2), 10.0);
        let lead = f.leading(1).unwrap();
        assert_eq!(lead.norm2(1, 2), 9.0);
        assert!(f.leading(3).is_err());
        assert!(HalfSpaceField::new(&g, 1, 1, vec![f64::NAN; 4]).is_err());
    }
}
