use crate::error::{FracError, Result};
use crate::fractional::TemporalGrid;
use crate::io::fmt_f64;
use std::io::{Read, Write};

pub const FSTF_MAGIC: &[u8; 4] = b"FSTF";
pub const FSTF_VERSION: u32 = 1;

/// Values on the time grid times the interior space nodes, stored row-major by time.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub grid: TemporalGrid,
    pub length: f64,
    pub n_interior: usize,
    pub values: Vec<f64>,
    /// Energy of the initial datum outside the retained modes (0 when not applicable).
    pub tail: f64,
}

impl SpaceTimeField {
    pub fn zeros(grid: TemporalGrid, length: f64, n_interior: usize) -> Self {
        SpaceTimeField {
            grid,
            length,
            n_interior,
            values: vec![0.0; grid.n_steps * n_interior],
            tail: 0.0,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn space_step(&self) -> f64 {
        self.length / (self.n_interior + 1) as f64
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_interior..(i + 1) * self.n_interior]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n_interior;
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n_interior + k]
    }

    /// Time series at interior node `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n_steps()).map(|i| self.at(i, k)).collect()
    }

    /// Space-time L2 norm: trapezoid in time, `h`-weighted sum in space.
    pub fn l2_norm(&self) -> f64 {
        let (ht, hx) = (self.grid.step(), self.space_step());
        let last = self.n_steps() - 1;
        let mut s = 0.0;
        for i in 0..=last {
            let w = if i == 0 || i == last { 0.5 } else { 1.0 };
            s += w * self.row(i).iter().map(|v| v * v).sum::<f64>();
        }
        (s * ht * hx).sqrt()
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (o, b) in out.values.iter_mut().zip(&other.values) {
            *o -= b;
        }
        out.tail = 0.0;
        Ok(out)
    }

    /// `||self - other|| / ||other||` in the space-time L2 norm.
    pub fn relative_l2_error(&self, reference: &SpaceTimeField) -> Result<f64> {
        Ok(self.sub(reference)?.l2_norm() / reference.l2_norm())
    }

    fn check_shape(&self, other: &SpaceTimeField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        if self.n_interior != other.n_interior || self.length != other.length {
            return Err(FracError::GridMismatch(format!(
                "space grids differ: {} vs {} interior nodes",
                self.n_interior, other.n_interior
            )));
        }
        Ok(())
    }

    /// Keeps every `dt`-th time node and every `dx`-th space node of a refined field.
    /// A field refined by factor `r` in space has `r (n + 1) - 1` interior nodes.
    pub fn downsample(&self, dt: usize, dx: usize) -> Result<SpaceTimeField> {
        if (self.n_steps() - 1) % dt != 0 || (self.n_interior + 1) % dx != 0 {
            return Err(FracError::GridMismatch("refinement factors do not divide the grid".into()));
        }
        let grid = TemporalGrid::new(self.grid.horizon, (self.n_steps() - 1) / dt + 1)?;
        let n = (self.n_interior + 1) / dx - 1;
        let mut out = SpaceTimeField::zeros(grid, self.length, n);
        for i in 0..grid.n_steps {
            for k in 0..n {
                out.values[i * n + k] = self.at(i * dt, (k + 1) * dx - 1);
            }
        }
        Ok(out)
    }

    /// Long-format CSV `t,x,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "value"])?;
        let h = self.space_step();
        for i in 0..self.n_steps() {
            let t = fmt_f64(self.grid.node(i));
            for k in 0..self.n_interior {
                out.write_record([t.as_str(), &fmt_f64((k + 1) as f64 * h), &fmt_f64(self.at(i, k))])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Binary dump: 32-byte little-endian header (`FSTF`, version, n_steps,
    /// n_interior, T, L) followed by the values in column-major order.
    pub fn write_fstf<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(FSTF_MAGIC)?;
        w.write_all(&FSTF_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_steps() as u32).to_le_bytes())?;
        w.write_all(&(self.n_interior as u32).to_le_bytes())?;
        w.write_all(&self.grid.horizon.to_le_bytes())?;
        w.write_all(&self.length.to_le_bytes())?;
        for k in 0..self.n_interior {
            for i in 0..self.n_steps() {
                w.write_all(&self.at(i, k).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_fstf<R: Read>(mut r: R) -> Result<SpaceTimeField> {
        let mut head = [0u8; 32];
        r.read_exact(&mut head)?;
        if &head[0..4] != FSTF_MAGIC {
            return Err(FracError::Invalid("not an FSTF file".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
        if u32_at(4) != FSTF_VERSION {
            return Err(FracError::Invalid(format!("unsupported FSTF version {}", u32_at(4))));
        }
        let (n_steps, n) = (u32_at(8) as usize, u32_at(12) as usize);
        let grid = TemporalGrid::new(f64_at(16), n_steps)?;
        let mut out = SpaceTimeField::zeros(grid, f64_at(24), n);
        let mut buf = [0u8; 8];
        for k in 0..n {
            for i in 0..n_steps {
                r.read_exact(&mut buf)?;
                out.values[i * n + k] = f64::from_le_bytes(buf);
            }
        }
        Ok(out)
    }
}
