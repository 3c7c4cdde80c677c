use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

pub const HEADER: &str = "n,x,y,u1,v1,u2,v2,res_x,res_y,bound_v1,bound_v2";

/// One table row; `None` leaves the column empty.
#[derive(Debug, Default, Clone, Copy)]
pub struct Row {
    pub n: usize,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub u1: Option<f64>,
    pub v1: Option<f64>,
    pub u2: Option<f64>,
    pub v2: Option<f64>,
    pub res_x: Option<f64>,
    pub res_y: Option<f64>,
    pub bound_v1: Option<f64>,
    pub bound_v2: Option<f64>,
}

impl Row {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    fn cells(&self) -> [Option<f64>; 10] {
        [
            self.x,
            self.y,
            self.u1,
            self.v1,
            self.u2,
            self.v2,
            self.res_x,
            self.res_y,
            self.bound_v1,
            self.bound_v2,
        ]
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn render(rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for row in rows {
        let _ = write!(out, "{}", row.n);
        for c in row.cells() {
            out.push(',');
            out.push_str(&cell(c));
        }
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, rows: &[Row]) -> Result<()> {
    std::fs::write(path, render(rows)).with_context(|| format!("writing {}", path.display()))
}
