//! Monitored quantities of a run and their CSV form.

use std::io::{self, BufRead, Write};

use crate::grid::{cell_grad_sq, grad_sq_integral, integrate, lp_norm, sup_norm, ScalarField};
use crate::stepper::{RunConfig, SimState};

/// Diagnostics at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub mass: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub sup_w: f64,
    pub lp_u: f64,
    pub grad_v_sq: f64,
    pub y_p: f64,
    pub dt_current: f64,
    pub clipped_mass: f64,
    pub w_residual: f64,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "t",
    "mass",
    "sup_u",
    "sup_v",
    "sup_w",
    "lp_u",
    "grad_v_sq",
    "y_p",
    "dt_current",
    "clipped_mass",
    "w_residual",
];

impl DiagRecord {
    fn as_row(&self) -> [f64; 11] {
        [
            self.t,
            self.mass,
            self.sup_u,
            self.sup_v,
            self.sup_w,
            self.lp_u,
            self.grad_v_sq,
            self.y_p,
            self.dt_current,
            self.clipped_mass,
            self.w_residual,
        ]
    }

    fn from_row(r: &[f64]) -> Self {
        Self {
            t: r[0],
            mass: r[1],
            sup_u: r[2],
            sup_v: r[3],
            sup_w: r[4],
            lp_u: r[5],
            grad_v_sq: r[6],
            y_p: r[7],
            dt_current: r[8],
            clipped_mass: r[9],
            w_residual: r[10],
        }
    }
}

/// `int u^p + (chi^2/gamma)^p int |grad v|^(2p)`.
///
/// `|grad v|` at a cell averages the two adjacent face differences per axis.
/// Panics if `p <= 1`.
pub fn y_functional(u: &ScalarField, v: &ScalarField, p: f64, chi: f64, gamma: f64) -> f64 {
    assert!(p > 1.0, "y functional needs p > 1, got {p}");
    let first = integrate(&u.map(|x| x.abs().powf(p)));
    let weight = (chi * chi / gamma).powf(p);
    if weight == 0.0 {
        return first;
    }
    let second = integrate(&cell_grad_sq(v).map(|g2| g2.powf(p)));
    first + weight * second
}

pub fn record(state: &SimState, config: &RunConfig) -> DiagRecord {
    let params = &config.params;
    DiagRecord {
        t: state.t,
        mass: integrate(&state.u),
        sup_u: sup_norm(&state.u),
        sup_v: sup_norm(&state.v),
        sup_w: sup_norm(&state.w),
        lp_u: lp_norm(&state.u, config.p_diag).expect("p_diag validated > 1"),
        grad_v_sq: grad_sq_integral(&state.v),
        y_p: y_functional(&state.u, &state.v, config.p_diag, params.chi, params.gamma),
        dt_current: state.dt_last,
        clipped_mass: state.clipped_mass,
        w_residual: state.w_residual,
    }
}

/// Writes `# key = value` metadata lines, the header row, and one row per
/// record with 17 significant digits.
pub fn write_csv<'a>(
    w: &mut impl Write,
    metadata: &[(String, String)],
    records: impl IntoIterator<Item = &'a DiagRecord>,
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for rec in records {
        write_csv_row(w, rec)?;
    }
    Ok(())
}

pub fn write_csv_row(w: &mut impl Write, rec: &DiagRecord) -> io::Result<()> {
    let cells: Vec<String> = rec.as_row().iter().map(|x| format!("{x:.16e}")).collect();
    writeln!(w, "{}", cells.join(","))
}

/// Reads back a file produced by [`write_csv`], skipping comment lines.
pub fn read_csv(r: impl BufRead) -> io::Result<Vec<DiagRecord>> {
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut out = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line.trim() != CSV_COLUMNS.join(",") {
                return Err(invalid(format!("unexpected header: {line}")));
            }
            seen_header = true;
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("line {}: {e}", lineno + 1)))?;
        if row.len() != CSV_COLUMNS.len() {
            return Err(invalid(format!("line {}: expected 11 columns", lineno + 1)));
        }
        out.push(DiagRecord::from_row(&row));
    }
    Ok(out)
}
