//! Chart dump format (version 1).
//!
//! A UTF-8 CSV file.  The first three lines are `#` comments:
//!
//! ```text
//! # charwave-chart v1
//! # grid {"x0":..,"y0":..,"hx":..,"hy":..,"nx":..,"ny":..}
//! # speed {"spec":{..},"c0":..,"u_range":[..,..]}
//! i,j,X,Y,u,alpha,beta,p,q,x,t
//! ```
//!
//! followed by one row per solved node.  Floats are written in shortest
//! round-trip form, so `load(dump(c)) == c` bit for bit.

use std::io::{BufRead, BufReader, Read, Write};

use super::{CharChart, Grid, Node};
use crate::wavespeed::WaveSpeed;
use crate::{Error, Result};

pub const MAGIC: &str = "# charwave-chart v1";
const COLUMNS: [&str; 11] = ["i", "j", "X", "Y", "u", "alpha", "beta", "p", "q", "x", "t"];

pub fn write_chart<W: Write>(chart: &CharChart, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "# grid {}", serde_json::to_string(&chart.grid)?)?;
    writeln!(w, "# speed {}", serde_json::to_string(&chart.speed)?)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    let g = chart.grid;
    for i in 0..g.nx {
        for j in 0..g.ny {
            if !chart.is_valid(i, j) {
                continue;
            }
            let n = chart.node(i, j);
            let row = [
                i.to_string(),
                j.to_string(),
                g.x_at(i).to_string(),
                g.y_at(j).to_string(),
                n.u.to_string(),
                n.a.to_string(),
                n.b.to_string(),
                n.p.to_string(),
                n.q.to_string(),
                n.x.to_string(),
                n.t.to_string(),
            ];
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_chart<R: Read>(r: R) -> Result<CharChart> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    let mut header = |expect: &str| -> Result<String> {
        line.clear();
        reader.read_line(&mut line)?;
        let l = line.trim_end();
        l.strip_prefix(expect)
            .map(str::to_owned)
            .ok_or_else(|| Error::Invalid(format!("chart file: expected '{expect}', got '{l}'")))
    };
    header(MAGIC)?;
    let grid: Grid = serde_json::from_str(&header("# grid ")?)?;
    let speed: WaveSpeed = serde_json::from_str(&header("# speed ")?)?;
    let mut chart = CharChart::empty(grid, speed);
    let mut rd = csv::Reader::from_reader(reader);
    for rec in rd.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Invalid(format!("chart file: bad field {k} in row {:?}", rec.position())))
        };
        let i = num(0)? as usize;
        let j = num(1)? as usize;
        if i >= grid.nx || j >= grid.ny {
            return Err(Error::Invalid(format!("chart file: node ({i}, {j}) outside grid")));
        }
        let n = Node { u: num(4)?, a: num(5)?, b: num(6)?, p: num(7)?, q: num(8)?, x: num(9)?, t: num(10)? };
        chart.set_node(i, j, &n);
    }
    Ok(chart)
}
