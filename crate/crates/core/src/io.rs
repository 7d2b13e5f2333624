//! Text formats: coefficient tables for series, rational maps, SSM models and
//! polynomial systems, plus CSV for trajectories and curves.
//!
//! Floats are written in shortest round-trip scientific notation, so every
//! format re-reads to a bitwise-equal object.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pade::RationalMap;
use crate::reduced::TrajectoryData;
use crate::series::{MultiIndex, MultiSeries};
use crate::ssm::{Forcing, PolySystem, SSMModel, SpectralData, Style};

/// Line cursor skipping blanks and `#` comments, tracking line numbers.
pub struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    peeked: Option<(usize, &'a str)>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            peeked: None,
            last: 0,
        }
    }

    pub fn peek(&mut self) -> Option<(usize, &'a str)> {
        if self.peeked.is_none() {
            for (i, l) in self.inner.by_ref() {
                let t = l.trim();
                if !t.is_empty() && !t.starts_with('#') {
                    self.peeked = Some((i + 1, t));
                    break;
                }
            }
        }
        self.peeked
    }

    pub fn next_line(&mut self) -> Result<(usize, &'a str)> {
        let r = self.peek();
        self.peeked = None;
        match r {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(Error::parse(self.last + 1, "unexpected end of input")),
        }
    }

    /// Next line, which must start with `keyword`; returns the other fields.
    pub fn expect(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, l) = self.next_line()?;
        let mut f = l.split_whitespace();
        match f.next() {
            Some(k) if k == keyword => Ok((n, f.collect())),
            other => Err(Error::parse(n, format!("expected '{keyword}', found '{}'", other.unwrap_or("")))),
        }
    }

    pub fn finish(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some((n, l)) => Err(Error::parse(n, format!("trailing content '{l}'"))),
        }
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("cannot parse '{s}'")))
}

fn fields<T: std::str::FromStr>(line: usize, f: &[&str], count: usize) -> Result<Vec<T>> {
    if f.len() != count {
        return Err(Error::parse(line, format!("expected {count} fields, found {}", f.len())));
    }
    f.iter().map(|s| num(line, s)).collect()
}

fn push_complex(out: &mut String, z: Complex64) {
    let _ = write!(out, " {:e} {:e}", z.re, z.im);
}

// ---------------------------------------------------------------- series

pub fn write_series(s: &MultiSeries) -> String {
    let mut out = format!("series {} {} {}\n", s.dim_in(), s.dim_out(), s.order());
    for (k, v) in s.iter() {
        let idx: Vec<String> = k.exponents().iter().map(|e| e.to_string()).collect();
        out.push_str(&idx.join(" "));
        out.push(' ');
        for z in v {
            push_complex(&mut out, *z);
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

pub fn parse_series_block(lines: &mut Lines) -> Result<MultiSeries> {
    let (n, h) = lines.expect("series")?;
    let h: Vec<u64> = fields(n, &h, 3)?;
    if h[0] == 0 || h[1] == 0 {
        return Err(Error::parse(n, "series dimensions must be positive"));
    }
    let (d, l, order) = (h[0] as usize, h[1] as usize, h[2] as u32);
    let mut s = MultiSeries::zeros(d, l, order);
    loop {
        let (n, line) = lines.next_line()?;
        if line == "end" {
            return Ok(s);
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != d + 2 * l {
            return Err(Error::parse(n, format!("expected {} fields, found {}", d + 2 * l, f.len())));
        }
        let k: Vec<u32> = f[..d].iter().map(|v| num(n, v)).collect::<Result<_>>()?;
        let vals: Vec<f64> = f[d..].iter().map(|v| num(n, v)).collect::<Result<_>>()?;
        let c: Vec<Complex64> = vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        let k = MultiIndex::new(k);
        if s.get(&k).is_some() {
            return Err(Error::parse(n, format!("duplicate index {k:?}")));
        }
        s.set(k, c).map_err(|e| Error::parse(n, e.to_string()))?;
    }
}

pub fn read_series(text: &str) -> Result<MultiSeries> {
    let mut lines = Lines::new(text);
    let s = parse_series_block(&mut lines)?;
    lines.finish()?;
    Ok(s)
}

// ---------------------------------------------------------------- rational

pub fn write_rational(r: &RationalMap) -> String {
    let mut out = format!("pade {} {} {} {}\n", r.dim_in(), r.dim_out(), r.n, r.m);
    let _ = writeln!(
        out,
        "flags {} {:e}",
        u8::from(r.flags.min_norm),
        r.flags.lattice_residual
    );
    for red in &r.flags.reduced {
        match red {
            Some((a, b)) => {
                let _ = writeln!(out, "reduced {a} {b}");
            }
            None => out.push_str("reduced - -\n"),
        }
    }
    for (i, a) in r.numerators().iter().enumerate() {
        let _ = writeln!(out, "NUMERATOR {i}");
        out.push_str(&write_series(a));
    }
    for (i, b) in r.denominators().iter().enumerate() {
        let _ = writeln!(out, "DENOMINATOR {i}");
        out.push_str(&write_series(b));
    }
    out
}

pub fn parse_rational_block(lines: &mut Lines) -> Result<RationalMap> {
    let (n, h) = lines.expect("pade")?;
    let h: Vec<u64> = fields(n, &h, 4)?;
    let (d, l) = (h[0] as usize, h[1] as usize);
    let mut min_norm = false;
    let mut lattice = 0.0;
    let mut reduced = Vec::new();
    if let Some((_, line)) = lines.peek() {
        if line.starts_with("flags") {
            let (n, f) = lines.expect("flags")?;
            if f.len() != 2 {
                return Err(Error::parse(n, "flags needs 2 fields"));
            }
            min_norm = num::<u8>(n, f[0])? != 0;
            lattice = num(n, f[1])?;
        }
    }
    while let Some((_, line)) = lines.peek() {
        if !line.starts_with("reduced") {
            break;
        }
        let (n, f) = lines.expect("reduced")?;
        if f.len() != 2 {
            return Err(Error::parse(n, "reduced needs 2 fields"));
        }
        reduced.push(if f[0] == "-" {
            None
        } else {
            Some((num(n, f[0])?, num(n, f[1])?))
        });
    }
    let mut nums = Vec::new();
    for i in 0..l {
        let (n, f) = lines.expect("NUMERATOR")?;
        if f != [i.to_string().as_str()] {
            return Err(Error::parse(n, format!("expected numerator {i}")));
        }
        nums.push(parse_series_block(lines)?);
    }
    let mut dens = Vec::new();
    while let Some((_, line)) = lines.peek() {
        if !line.starts_with("DENOMINATOR") {
            break;
        }
        let (n, f) = lines.expect("DENOMINATOR")?;
        if f != [dens.len().to_string().as_str()] {
            return Err(Error::parse(n, format!("expected denominator {}", dens.len())));
        }
        dens.push(parse_series_block(lines)?);
    }
    let mut r = RationalMap::new(nums, dens).map_err(|e| Error::parse(n, e.to_string()))?;
    if r.dim_in() != d {
        return Err(Error::parse(n, "header input dimension disagrees with blocks"));
    }
    r.n = h[2] as u32;
    r.m = h[3] as u32;
    r.flags.min_norm = min_norm;
    r.flags.lattice_residual = lattice;
    r.flags.reduced = reduced;
    Ok(r)
}

pub fn read_rational(text: &str) -> Result<RationalMap> {
    let mut lines = Lines::new(text);
    let r = parse_rational_block(&mut lines)?;
    lines.finish()?;
    Ok(r)
}

// ---------------------------------------------------------------- models

fn write_cmatrix(out: &mut String, tag: &str, m: &CMatrix) {
    let _ = writeln!(out, "{tag}");
    for i in 0..m.nrows() {
        let mut row = String::new();
        for j in 0..m.ncols() {
            push_complex(&mut row, m[(i, j)]);
        }
        out.push_str(row.trim_start());
        out.push('\n');
    }
}

fn parse_cmatrix(lines: &mut Lines, tag: &str, rows: usize, cols: usize) -> Result<CMatrix> {
    lines.expect(tag)?;
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        let (n, l) = lines.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let v: Vec<f64> = fields(n, &f, 2 * cols)?;
        for j in 0..cols {
            m[(i, j)] = Complex64::new(v[2 * j], v[2 * j + 1]);
        }
    }
    Ok(m)
}

pub fn write_model(m: &SSMModel) -> String {
    let spec = &m.spectral;
    let mut out = format!("ssm {} {} {} {}\n", spec.dim(), m.master_dim(), m.style.name(), m.order);
    out.push_str("EIGENVALUES\n");
    for l in &spec.eigenvalues {
        let mut s = String::new();
        push_complex(&mut s, *l);
        out.push_str(s.trim_start());
        out.push('\n');
    }
    let masters: Vec<String> = spec.masters.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(out, "MASTERS {}", masters.join(" "));
    write_cmatrix(&mut out, "RIGHT", &spec.right);
    write_cmatrix(&mut out, "LEFT", &spec.left);
    out.push_str("W\n");
    out.push_str(&write_series(&m.w));
    out.push_str("R\n");
    out.push_str(&write_series(&m.r));
    out
}

/// Reads a model; the `LEFT` block is optional and defaults to the inverse
/// of `RIGHT`, which is the usual case for externally computed models.
pub fn read_model(text: &str) -> Result<SSMModel> {
    let mut lines = Lines::new(text);
    let (hn, h) = lines.expect("ssm")?;
    if h.len() != 4 {
        return Err(Error::parse(hn, "header needs 'ssm n d style order'"));
    }
    let n: usize = num(hn, h[0])?;
    let d: usize = num(hn, h[1])?;
    let style = Style::parse(h[2]).map_err(|e| Error::parse(hn, e.to_string()))?;
    let order: u32 = num(hn, h[3])?;
    lines.expect("EIGENVALUES")?;
    let mut eig = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let v: Vec<f64> = fields(ln, &f, 2)?;
        eig.push(Complex64::new(v[0], v[1]));
    }
    let (mn, m) = lines.expect("MASTERS")?;
    let masters: Vec<usize> = fields(mn, &m, d)?;
    let right = parse_cmatrix(&mut lines, "RIGHT", n, n)?;
    let spectral = match lines.peek() {
        Some((_, "LEFT")) => {
            let left = parse_cmatrix(&mut lines, "LEFT", n, n)?;
            if masters.iter().any(|&i| i >= n) {
                return Err(Error::parse(mn, "master index out of range"));
            }
            SpectralData {
                eigenvalues: eig,
                right,
                left,
                masters,
            }
        }
        _ => SpectralData::from_parts(eig, right, masters).map_err(|e| Error::parse(mn, e.to_string()))?,
    };
    let (wn, _) = lines.expect("W")?;
    let w = parse_series_block(&mut lines)?;
    let (rn, _) = lines.expect("R")?;
    let r = parse_series_block(&mut lines)?;
    lines.finish()?;
    if w.dim_in() != d || w.dim_out() != n {
        return Err(Error::parse(wn, format!("W must map {d} -> {n}")));
    }
    if r.dim_in() != d || r.dim_out() != d {
        return Err(Error::parse(rn, format!("R must map {d} -> {d}")));
    }
    Ok(SSMModel {
        spectral,
        style,
        order,
        w,
        r,
    })
}

pub fn write_system(sys: &PolySystem) -> String {
    let n = sys.dim();
    let mut out = format!("system {n}\nA\n");
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:e}", sys.a[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("F\n");
    out.push_str(&write_series(&sys.f));
    if let Some(f) = &sys.forcing {
        let _ = writeln!(out, "FORCING {:e} {:e}", f.amplitude, f.frequency);
        let v: Vec<String> = f.vector.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&v.join(" "));
        out.push('\n');
    }
    out
}

/// Reads a polynomial system. Non-polynomial right-hand sides of built-in
/// systems are not representable and are written as their Taylor part.
pub fn read_system(text: &str) -> Result<PolySystem> {
    let mut lines = Lines::new(text);
    let (hn, h) = lines.expect("system")?;
    let n: usize = fields::<usize>(hn, &h, 1)?[0];
    lines.expect("A")?;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (ln, l) = lines.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let v: Vec<f64> = fields(ln, &f, n)?;
        for j in 0..n {
            a[(i, j)] = v[j];
        }
    }
    let (fnn, _) = lines.expect("F")?;
    let f = parse_series_block(&mut lines)?;
    let mut sys = PolySystem::new(a, f).map_err(|e| Error::parse(fnn, e.to_string()))?;
    if let Some((_, l)) = lines.peek() {
        if l.starts_with("FORCING") {
            let (ln, h) = lines.expect("FORCING")?;
            let h: Vec<f64> = fields(ln, &h, 2)?;
            let (vn, l) = lines.next_line()?;
            let f: Vec<&str> = l.split_whitespace().collect();
            let vector: Vec<f64> = fields(vn, &f, n)?;
            sys = sys
                .with_forcing(Forcing {
                    vector,
                    amplitude: h[0],
                    frequency: h[1],
                })
                .map_err(|e| Error::parse(ln, e.to_string()))?;
        }
    }
    lines.finish()?;
    Ok(sys)
}

// ---------------------------------------------------------------- CSV

/// Writes a header row and numeric rows.
pub fn write_csv<W: std::io::Write>(w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header).map_err(csv_err)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::DimensionMismatch {
                what: "CSV row",
                expected: header.len(),
                got: r.len(),
            });
        }
        wr.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(0, format!("{other:?}")),
    }
}

/// Header and numeric rows of a CSV document.
pub fn read_csv<R: std::io::Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(Error::parse(line, format!("expected {} columns, found {}", header.len(), rec.len())));
        }
        rows.push(rec.iter().map(|v| num(line, v)).collect::<Result<Vec<f64>>>()?);
    }
    Ok((header, rows))
}

/// Trajectory as CSV with columns `t,<prefix>1,...`.
pub fn write_trajectory<W: std::io::Write>(w: W, traj: &TrajectoryData, prefix: &str) -> Result<()> {
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=traj.dim()).map(|i| format!("{prefix}{i}")))
        .collect();
    let header: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<f64>> = traj
        .t
        .iter()
        .zip(&traj.x)
        .map(|(t, x)| std::iter::once(*t).chain(x.iter().copied()).collect())
        .collect();
    write_csv(w, &header, &rows)
}

/// Trajectory from a CSV whose first column is time.
pub fn read_trajectory<R: std::io::Read>(r: R) -> Result<TrajectoryData> {
    let (header, rows) = read_csv(r)?;
    if header.len() < 2 {
        return Err(Error::parse(1, "trajectory CSV needs a time column and at least one value column"));
    }
    let t = rows.iter().map(|r| r[0]).collect();
    let x = rows.iter().map(|r| r[1..].to_vec()).collect();
    TrajectoryData::new(t, x)
}

pub fn read_file(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}
