//! Command-line driver: convergence tables, slice export and mesh dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};

use crate::condense::{solve, SolvePath};
use crate::error::{Result, WgError};
use crate::mesh::Mesh;
use crate::verify::{
    convergence_study, export_slice, CaseName, ErrorReport, ManufacturedCase, NORM_LABELS,
};
use crate::weakcalc::{ScalarVariant, Scheme};

/// An inclusive, ascending range of mesh levels written `A..B` (or a single `A`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub first: usize,
    pub last: usize,
}

impl LevelRange {
    pub fn levels(&self) -> Vec<usize> {
        (self.first..=self.last).collect()
    }
}

impl FromStr for LevelRange {
    type Err = WgError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || WgError::InvalidArgument(format!("invalid level range '{s}', expected A..B"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (a.trim(), b.trim_start_matches('=').trim()),
            None => (s.trim(), s.trim()),
        };
        let first: usize = a.parse().map_err(|_| bad())?;
        let last: usize = b.parse().map_err(|_| bad())?;
        if first == 0 || first > last {
            return Err(bad());
        }
        Ok(Self { first, last })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

/// Weak Galerkin convergence studies for the time-harmonic Maxwell system
/// on the unit cube.
#[derive(Debug, Clone, Parser)]
#[command(name = "wg-maxwell", version)]
pub struct RunConfig {
    /// Manufactured case; repeat for several. Default: s1 s2 s3 s4.
    #[arg(long = "case", value_parser = parse_case)]
    pub cases: Vec<CaseName>,
    /// Level range `A..B`.
    #[arg(long, default_value = "1..5", value_parser = parse_levels, conflicts_with = "level")]
    pub levels: LevelRange,
    /// Single level; shorthand for `--levels L..L`.
    #[arg(long)]
    pub level: Option<usize>,
    /// Polynomial order k.
    #[arg(long = "order", default_value_t = 1)]
    pub order: usize,
    /// Scalar face space: `full` (degree k) or `lowest` (constants).
    #[arg(long, default_value = "full", value_parser = parse_variant)]
    pub variant: ScalarVariant,
    /// Solve the full saddle-point system or the condensed face system.
    #[arg(long, default_value = "condensed", value_parser = parse_path)]
    pub path: SolvePath,
    /// Gauss points per direction (default k + 3).
    #[arg(long)]
    pub quad: Option<usize>,
    /// Uniform coefficient nu.
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Export solution and error samples on the plane z = Z (single level only).
    #[arg(long = "slice-z")]
    pub slice_z: Option<f64>,
    /// Samples per direction on the slice plane.
    #[arg(long = "slice-resolution", default_value_t = 64)]
    pub slice_resolution: usize,
    /// Report file, or the directory receiving slice files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the mesh of the given level as JSON and exit.
    #[arg(long = "dump-mesh")]
    pub dump_mesh: Option<usize>,
}

fn parse_case(s: &str) -> std::result::Result<CaseName, String> {
    s.parse().map_err(|e: WgError| e.to_string())
}

fn parse_levels(s: &str) -> std::result::Result<LevelRange, String> {
    s.parse().map_err(|e: WgError| e.to_string())
}

fn parse_variant(s: &str) -> std::result::Result<ScalarVariant, String> {
    s.parse().map_err(|e: WgError| e.to_string())
}

fn parse_path(s: &str) -> std::result::Result<SolvePath, String> {
    s.parse().map_err(|e: WgError| e.to_string())
}

impl RunConfig {
    pub fn scheme(&self) -> Result<Scheme> {
        let s = Scheme::new(self.order, self.variant)?;
        match self.quad {
            Some(q) => s.with_quad(q),
            None => Ok(s),
        }
    }

    pub fn level_list(&self) -> Vec<usize> {
        match self.level {
            Some(l) => vec![l],
            None => self.levels.levels(),
        }
    }

    pub fn case_list(&self) -> Vec<CaseName> {
        if self.cases.is_empty() {
            CaseName::ALL.to_vec()
        } else {
            self.cases.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(WgError::InvalidArgument(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if self.level == Some(0) {
            return Err(WgError::InvalidArgument("mesh level must be >= 1".into()));
        }
        if self.slice_z.is_some() && self.level_list().len() != 1 {
            return Err(WgError::InvalidArgument(
                "--slice-z needs a single level (--level L)".into(),
            ));
        }
        Ok(())
    }
}

/// Paper-style table: one value and one rate column per norm.
pub fn format_text(report: &ErrorReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "case {}  k={}  variant={}  path={}  nu={}",
        report.case, report.scheme.k, report.scheme.variant, report.path, report.nu
    );
    let _ = write!(s, "{:>5}", "grid");
    for label in NORM_LABELS {
        let _ = write!(s, " {label:>12} {:>5}", "r");
    }
    s.push('\n');
    for row in &report.rows {
        let _ = write!(s, "{:>5}", row.level);
        for (i, v) in row.norms.values().iter().enumerate() {
            let r = row
                .rates
                .map_or_else(|| "-".to_string(), |r| format!("{:.1}", r[i]));
            let _ = write!(s, " {v:>12.3e} {r:>5}");
        }
        s.push('\n');
    }
    s
}

/// One CSV line per level, with a header naming every column.
pub fn format_csv(report: &ErrorReport, header: bool) -> String {
    let mut s = String::new();
    if header {
        s.push_str("case,variant,path,level,h,unknowns");
        for label in NORM_LABELS {
            let _ = write!(s, ",{label},rate {label}");
        }
        s.push('\n');
    }
    for row in &report.rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            report.case, report.scheme.variant, report.path, row.level, row.h, row.unknowns
        );
        for (i, v) in row.norms.values().iter().enumerate() {
            let r = row
                .rates
                .map_or_else(String::new, |r| format!("{:.4}", r[i]));
            let _ = write!(s, ",{v:.6e},{r}");
        }
        s.push('\n');
    }
    s
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_slices(config: &RunConfig, scheme: &Scheme, z: f64) -> Result<Vec<PathBuf>> {
    let level = config.level_list()[0];
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let mesh = Mesh::build(level)?;
    let mut written = Vec::new();
    for case in config.case_list() {
        let mc = ManufacturedCase::new(case);
        let sol = solve(&mesh, scheme, &mc.data(config.nu), config.path)
            .map_err(|e| WgError::Internal(format!("case {case}, level {level}: {e}")))?;
        let slice = export_slice(&mesh, scheme, &sol, &mc, z, config.slice_resolution)?;
        for (i, (name, _)) in slice.fields.iter().enumerate() {
            let file = dir.join(format!("slice_{case}_L{level}_{}.csv", file_stem(name)));
            let mut buf = Vec::new();
            slice.write_field(i, &mut buf)?;
            fs::write(&file, buf)?;
            written.push(file);
        }
    }
    Ok(written)
}

/// Field names such as `(u-ub).t1` turned into file-name-safe stems.
fn file_stem(name: &str) -> String {
    name.chars()
        .filter_map(|c| match c {
            '(' | ')' => None,
            '.' => Some('_'),
            c => Some(c),
        })
        .collect()
}

/// Runs a configuration, writing reports to `stdout` unless `--out` is set.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    config.validate()?;
    if let Some(level) = config.dump_mesh {
        let dump = Mesh::build(level)?.to_dump();
        let text =
            serde_json::to_string_pretty(&dump).map_err(|e| WgError::Internal(e.to_string()))?;
        return write_output(config.out.as_deref(), &(text + "\n"), stdout);
    }
    let scheme = config.scheme()?;
    if let Some(z) = config.slice_z {
        for file in write_slices(config, &scheme, z)? {
            writeln!(stdout, "{}", file.display())?;
        }
        return Ok(());
    }

    let levels = config.level_list();
    let mut reports = Vec::new();
    for case in config.case_list() {
        reports.push(convergence_study(
            case,
            &levels,
            &scheme,
            config.path,
            config.nu,
        )?);
    }
    let text = match config.format {
        OutputFormat::Text => reports
            .iter()
            .map(format_text)
            .collect::<Vec<_>>()
            .join("\n"),
        OutputFormat::Csv => reports
            .iter()
            .enumerate()
            .map(|(i, r)| format_csv(r, i == 0))
            .collect(),
        OutputFormat::Json => {
            serde_json::to_string_pretty(&reports).map_err(|e| WgError::Internal(e.to_string()))?
                + "\n"
        }
    };
    write_output(config.out.as_deref(), &text, stdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("wg-maxwell").chain(args.iter().copied()))
            .unwrap()
    }

    #[test]
    fn level_ranges() {
        assert_eq!(
            "1..4".parse::<LevelRange>().unwrap().levels(),
            vec![1, 2, 3, 4]
        );
        assert_eq!("3".parse::<LevelRange>().unwrap().levels(), vec![3]);
        assert_eq!("2..=3".parse::<LevelRange>().unwrap().levels(), vec![2, 3]);
        for bad in ["4..2", "0..3", "a..b", ""] {
            assert!(bad.parse::<LevelRange>().is_err(), "{bad}");
        }
    }

    #[test]
    fn defaults() {
        let c = config(&[]);
        assert_eq!(c.case_list(), CaseName::ALL.to_vec());
        assert_eq!(c.level_list(), vec![1, 2, 3, 4, 5]);
        assert_eq!(c.path, SolvePath::Condensed);
        assert_eq!(c.scheme().unwrap().quad, 4);
    }

    #[test]
    fn flags() {
        let c = config(&[
            "--case",
            "s3",
            "--case",
            "s4",
            "--level",
            "2",
            "--variant",
            "lowest",
            "--path",
            "full",
            "--quad",
            "6",
        ]);
        assert_eq!(c.case_list(), vec![CaseName::S3, CaseName::S4]);
        assert_eq!(c.level_list(), vec![2]);
        let s = c.scheme().unwrap();
        assert_eq!((s.variant, s.quad), (ScalarVariant::Lowest, 6));
        assert!(RunConfig::try_parse_from(["wg-maxwell", "--case", "s9"]).is_err());
        assert!(RunConfig::try_parse_from(["wg-maxwell", "--levels", "3..1"]).is_err());
        assert!(RunConfig::try_parse_from(["wg-maxwell", "--format", "xml"]).is_err());
    }

    #[test]
    fn slice_needs_single_level() {
        let c = config(&["--slice-z", "0.3"]);
        assert!(matches!(
            run(&c, &mut Vec::new()),
            Err(WgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn s1_table_is_zero() {
        let c = config(&["--case", "s1", "--levels", "1..2"]);
        let mut out = Vec::new();
        run(&c, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("case s1"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn file_stems() {
        assert_eq!(file_stem("(u-ub).t1"), "u-ub_t1");
        assert_eq!(file_stem("p-p0"), "p-p0");
    }
}
