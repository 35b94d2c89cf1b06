//! File formats: grayscale PGM (P5, 8- or 16-bit), a raw little-endian
//! float64 image format with a 16-byte header, sampling-pattern CSV, and
//! density CSV / heatmap export.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::densities::Density;
use crate::error::{Result, TvciError};
use crate::grid::{Convention, Grid};
use crate::patterns::Pattern;
use crate::transforms::Signal;

const RAW_MAGIC: &[u8; 8] = b"TVCIRAW1";

/// Write the real part of a signal as binary PGM. `bits` is 8 or 16. The
/// image maximum maps to the format's maxval; values quantize with
/// round-to-nearest, ties to even. d = 1 writes a single row, d = 2 an
/// N-by-N image, d = 3 the central z slice.
pub fn write_pgm(path: &Path, x: &Signal, bits: u32) -> Result<()> {
    let maxval: u32 = match bits {
        8 => 255,
        16 => 65535,
        _ => return Err(TvciError::Invalid(format!("bits must be 8 or 16, got {bits}"))),
    };
    let n = x.grid.n();
    let (w, h, plane): (usize, usize, Vec<f64>) = match x.grid.d() {
        1 => (n, 1, x.values.iter().map(|v| v.re).collect()),
        2 => (n, n, x.values.iter().map(|v| v.re).collect()),
        3 => {
            let z = n / 2;
            let mut p = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    p.push(x.values[(i * n + j) * n + z].re);
                }
            }
            (n, n, p)
        }
        d => return Err(TvciError::Invalid(format!("cannot render d = {d} as PGM"))),
    };
    let peak = plane.iter().cloned().fold(0.0f64, f64::max);
    let scale = if peak > 0.0 { maxval as f64 / peak } else { 0.0 };
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P5\n{w} {h}\n{maxval}\n")?;
    for &v in &plane {
        let q = (v.max(0.0) * scale).min(maxval as f64).round_ties_even() as u32;
        if maxval > 255 {
            out.write_all(&(q as u16).to_be_bytes())?;
        } else {
            out.write_all(&[q as u8])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Write a real image losslessly: magic "TVCIRAW1", then N and d as
/// little-endian u32, then N^d little-endian f64 values in flat order.
pub fn write_raw(path: &Path, x: &Signal) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(RAW_MAGIC)?;
    out.write_all(&(x.grid.n() as u32).to_le_bytes())?;
    out.write_all(&(x.grid.d() as u32).to_le_bytes())?;
    for v in &x.values {
        out.write_all(&v.re.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Read an image written by [`write_raw`].
pub fn read_raw(path: &Path) -> Result<Signal> {
    let mut f = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != RAW_MAGIC {
        return Err(TvciError::Parse(format!(
            "{}: bad magic, not a raw image file",
            path.display()
        )));
    }
    let mut word = [0u8; 4];
    f.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    f.read_exact(&mut word)?;
    let d = u32::from_le_bytes(word) as usize;
    let grid = Grid::new(n, d)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut buf = [0u8; 8];
    for _ in 0..grid.len() {
        f.read_exact(&mut buf)?;
        values.push(Complex64::new(f64::from_le_bytes(buf), 0.0));
    }
    Signal::new(values, grid)
}

/// Write a sampling pattern: header line
/// `tvci-pattern v1, convention, N, d, m, scheme, seed`, then one
/// `flat_index, multiplicity` line per distinct draw, sorted by flat index.
pub fn write_pattern(path: &Path, p: &Pattern) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "tvci-pattern v1, {}, {}, {}, {}, {}, {}",
        p.convention.as_str(),
        p.grid.n(),
        p.grid.d(),
        p.m,
        p.scheme,
        p.seed
    )?;
    for &(row, mult) in &p.draws {
        writeln!(out, "{row}, {mult}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a pattern written by [`write_pattern`]; bit-exact round trip.
pub fn read_pattern(path: &Path) -> Result<Pattern> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut lines = f.lines();
    let header = lines
        .next()
        .ok_or_else(|| TvciError::Parse("empty pattern file".into()))??;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() != 7 || fields[0] != "tvci-pattern v1" {
        return Err(TvciError::Parse(format!("bad pattern header: {header}")));
    }
    let convention = Convention::parse(fields[1])?;
    let n: usize = parse_field(fields[2], "N")?;
    let d: usize = parse_field(fields[3], "d")?;
    let m: usize = parse_field(fields[4], "m")?;
    let scheme = fields[5].to_string();
    let seed: u64 = parse_field(fields[6], "seed")?;
    let grid = Grid::new(n, d)?;
    let mut draws = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(TvciError::Parse(format!("bad draw line: {line}")));
        }
        let row: usize = parse_field(parts[0], "flat_index")?;
        let mult: u32 = parse_field(parts[1], "multiplicity")?;
        if row < 1 || row > grid.len() {
            return Err(TvciError::OutOfRange(format!(
                "flat index {row} outside 1..={}",
                grid.len()
            )));
        }
        draws.push((row, mult));
    }
    if !draws.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(TvciError::Parse(
            "pattern rows must be strictly increasing".into(),
        ));
    }
    let total: usize = draws.iter().map(|&(_, c)| c as usize).sum();
    if total != m {
        return Err(TvciError::Parse(format!(
            "multiplicities sum to {total} but header says m = {m}"
        )));
    }
    Ok(Pattern {
        grid,
        convention,
        draws,
        m,
        scheme,
        seed,
    })
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| TvciError::Parse(format!("cannot parse {name} from '{s}'")))
}

/// CSV of frequency coordinates and probability mass, one row per grid
/// point, in flat order: `coord_1, ..., coord_d, mass`.
pub fn write_density_csv(path: &Path, p: &Density) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    let d = p.grid().d();
    let header: Vec<String> = (1..=d).map(|k| format!("coord_{k}")).collect();
    writeln!(out, "{}, mass", header.join(", "))?;
    for row in 1..=p.grid().len() {
        let fi = crate::grid::row_freq(row, p.grid(), p.convention())?;
        let coords: Vec<String> = fi.coords.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{}, {:.17e}", coords.join(", "), p.mass_at(row)?)?;
    }
    out.flush()?;
    Ok(())
}

/// PGM heatmap of a 2D density (or the central slice of a 3D one): mass at
/// each grid point, peak-normalized, 16-bit.
pub fn write_density_pgm(path: &Path, p: &Density) -> Result<()> {
    let grid = *p.grid();
    if grid.d() != 2 && grid.d() != 3 {
        return Err(TvciError::Invalid(
            "density heatmap needs d = 2 or 3".into(),
        ));
    }
    let masses = p.masses()?;
    let img = Signal::from_real(&masses, grid)?;
    write_pgm(path, &img, 16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{build_density, DensityKind};
    use crate::patterns::sample_uniform;
    use crate::testutil::random_real_signal;

    #[test]
    fn raw_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (n, d) in [(16, 1), (8, 2), (4, 3)] {
            let g = Grid::new(n, d).unwrap();
            let x = random_real_signal(g, 7);
            let path = dir.path().join(format!("img-{n}-{d}.raw"));
            write_raw(&path, &x).unwrap();
            let back = read_raw(&path).unwrap();
            assert_eq!(back.grid, g);
            for (a, b) in x.values.iter().zip(&back.values) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
            }
        }
    }

    #[test]
    fn raw_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.raw");
        std::fs::write(&path, b"NOTMAGIC\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(read_raw(&path).is_err());
    }

    #[test]
    fn pgm_constant_image() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(8, 2).unwrap();
        let x = Signal::from_real(&vec![0.7; 64], g).unwrap();
        let path = dir.path().join("const.pgm");
        write_pgm(&path, &x, 8).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n8 8\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert!(bytes[header.len()..].iter().all(|&b| b == 255));
    }

    #[test]
    fn pgm_16bit_max_maps_to_maxval() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(4, 2).unwrap();
        let mut vals = vec![0.0; 16];
        vals[5] = 2.5; // peak
        vals[3] = 1.25; // exactly half
        let x = Signal::from_real(&vals, g).unwrap();
        let path = dir.path().join("img.pgm");
        write_pgm(&path, &x, 16).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P5\n4 4\n65535\n";
        let data = &bytes[header.len()..];
        assert_eq!(data.len(), 32);
        let px = |i: usize| u16::from_be_bytes([data[2 * i], data[2 * i + 1]]);
        assert_eq!(px(5), 65535);
        // 0.5 * 65535 = 32767.5 -> ties-to-even -> 32768
        assert_eq!(px(3), 32768);
        assert_eq!(px(0), 0);
        assert!(write_pgm(&path, &x, 12).is_err());
    }

    #[test]
    fn pattern_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(16, 2).unwrap();
        let p = sample_uniform(&g, Convention::Walsh, 40, 99, true).unwrap();
        let path = dir.path().join("pat.csv");
        write_pattern(&path, &p).unwrap();
        let q = read_pattern(&path).unwrap();
        assert_eq!(p.grid, q.grid);
        assert_eq!(p.convention, q.convention);
        assert_eq!(p.draws, q.draws);
        assert_eq!(p.m, q.m);
        assert_eq!(p.scheme, q.scheme);
        assert_eq!(p.seed, q.seed);
        // byte-exact rewrite
        write_pattern(&dir.path().join("pat2.csv"), &q).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(dir.path().join("pat2.csv")).unwrap()
        );
    }

    #[test]
    fn pattern_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "tvci-pattern v1, fourier, 8, 1, 3, uniform, 0\n2, 1\n1, 1\n")
            .unwrap();
        assert!(read_pattern(&path).is_err()); // unsorted
        std::fs::write(&path, "tvci-pattern v1, fourier, 8, 1, 5, uniform, 0\n2, 1\n")
            .unwrap();
        assert!(read_pattern(&path).is_err()); // m mismatch
        std::fs::write(&path, "nonsense\n").unwrap();
        assert!(read_pattern(&path).is_err());
    }

    #[test]
    fn density_exports() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(8, 2).unwrap();
        let p = build_density(DensityKind::OptimalFourier, &g, Convention::Fourier).unwrap();
        let csv = dir.path().join("density.csv");
        write_density_csv(&csv, &p).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("coord_1, coord_2, mass"));
        let total: f64 = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().trim().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
        write_density_pgm(&dir.path().join("density.pgm"), &p).unwrap();
    }
}
