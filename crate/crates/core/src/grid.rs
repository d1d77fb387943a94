//! Uniform cell-centered grids on intervals and rectangles, with zero-flux
//! (homogeneous Neumann) finite-volume operators.
//!
//! Values are stored row-major: the first axis is the outermost. Boundary
//! faces carry no flux, which is the same as reflecting each boundary cell
//! into its ghost neighbour.

use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("axis {axis}: need at least 3 cells, got {n}")]
    TooFewCells { axis: usize, n: usize },
    #[error("axis {axis}: length must be finite and positive, got {length}")]
    Length { axis: usize, length: f64 },
    #[error("field has {got} values, grid has {expected} cells")]
    ValueCount { expected: usize, got: usize },
    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("fields live on different grids")]
    SpecMismatch,
    #[error("norm exponent must be >= 1, got {0}")]
    Exponent(f64),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Rectangular domain `[0, L_0] x ... ` split into uniform cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    n_cells: Vec<usize>,
    length: Vec<f64>,
    spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(n_cells: &[usize], length: &[f64]) -> Result<Self, GridError> {
        let dim = n_cells.len();
        if !(1..=2).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if length.len() != dim {
            return Err(GridError::Dimension(length.len()));
        }
        for (axis, (&n, &len)) in n_cells.iter().zip(length).enumerate() {
            if n < 3 {
                return Err(GridError::TooFewCells { axis, n });
            }
            if !(len.is_finite() && len > 0.0) {
                return Err(GridError::Length { axis, length: len });
            }
        }
        let spacing = n_cells
            .iter()
            .zip(length)
            .map(|(&n, &len)| len / n as f64)
            .collect();
        Ok(Self {
            n_cells: n_cells.to_vec(),
            length: length.to_vec(),
            spacing,
        })
    }

    pub fn line(n: usize, length: f64) -> Result<Self, GridError> {
        Self::new(&[n], &[length])
    }

    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        Self::new(&[nx, ny], &[lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.n_cells.len()
    }

    pub fn n_cells(&self) -> &[usize] {
        &self.n_cells
    }

    pub fn length(&self) -> &[f64] {
        &self.length
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn total_cells(&self) -> usize {
        self.n_cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn domain_measure(&self) -> f64 {
        self.length.iter().product()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Distance between consecutive cells along `axis` in the flat layout.
    fn stride(&self, axis: usize) -> usize {
        self.n_cells[axis + 1..].iter().product()
    }

    /// Cell-center coordinates of the cell with flat index `index`.
    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|axis| {
                let k = (index / self.stride(axis)) % self.n_cells[axis];
                (k as f64 + 0.5) * self.spacing[axis]
            })
            .collect()
    }

    /// Visits every interior face as `(left, right)` flat cell indices.
    pub(crate) fn for_each_face(&self, axis: usize, mut visit: impl FnMut(usize, usize)) {
        let n = self.n_cells[axis];
        let stride = self.stride(axis);
        let outer: usize = self.n_cells[..axis].iter().product();
        for o in 0..outer {
            let base = o * n * stride;
            for k in 0..n - 1 {
                let row = base + k * stride;
                for inner in 0..stride {
                    let left = row + inner;
                    visit(left, left + stride);
                }
            }
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.n_cells.iter().map(|n| n.to_string()).collect();
        let lens: Vec<String> = self.length.iter().map(|l| l.to_string()).collect();
        write!(f, "{} cells on [{}]", cells.join("x"), lens.join("x"))
    }
}

/// Face coefficient used by the conservative flux kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaceAverage {
    /// Arithmetic mean of the two adjacent cells.
    #[default]
    Central,
    /// Value of the cell the transport velocity `grad phi` points away from.
    Upwind,
}

/// One real value per cell of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        let expected = spec.total_cells();
        if values.len() != expected {
            return Err(GridError::ValueCount {
                expected,
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(Self { spec, values })
    }

    pub fn constant(spec: &GridSpec, value: f64) -> Self {
        Self {
            values: vec![value; spec.total_cells()],
            spec: spec.clone(),
        }
    }

    pub fn zeros(spec: &GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Samples `f` at cell centers. Panics if `f` returns a non-finite value.
    pub fn from_fn(spec: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values: Vec<f64> = (0..spec.total_cells())
            .map(|i| f(&spec.cell_center(i)))
            .collect();
        Self::new(spec.clone(), values).expect("sampled function must be finite")
    }

    /// Builds a field without the finiteness check; callers check later.
    pub(crate) fn from_raw(spec: &GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.total_cells());
        Self {
            spec: spec.clone(),
            values,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_same_grid(&self, other: &ScalarField) -> Result<(), GridError> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(GridError::SpecMismatch)
        }
    }
}

/// Midpoint-rule integral over the domain.
pub fn integrate(f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() * f.spec.cell_volume()
}

/// Shared conservative kernel: `out_i = sum over faces of ±coef * ((phi_R - phi_L)/h) / h`.
fn flux_divergence(
    phi: &ScalarField,
    mut face_coef: impl FnMut(usize, usize, f64) -> f64,
) -> ScalarField {
    let spec = &phi.spec;
    let mut out = vec![0.0; spec.total_cells()];
    for axis in 0..spec.dim() {
        let h = spec.spacing[axis];
        spec.for_each_face(axis, |left, right| {
            let grad = (phi.values[right] - phi.values[left]) / h;
            let flux = face_coef(left, right, grad) * grad;
            out[left] += flux / h;
            out[right] -= flux / h;
        });
    }
    ScalarField::from_raw(spec, out)
}

/// Second-order Laplacian with zero normal flux on the boundary.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    flux_divergence(f, |_, _, _| 1.0)
}

/// Conservative discretization of `div(u grad phi)` with zero boundary flux.
pub fn div_u_grad_phi(
    u: &ScalarField,
    phi: &ScalarField,
    average: FaceAverage,
) -> Result<ScalarField, GridError> {
    u.check_same_grid(phi)?;
    let uv = &u.values;
    Ok(match average {
        FaceAverage::Central => flux_divergence(phi, |l, r, _| 0.5 * (uv[l] + uv[r])),
        FaceAverage::Upwind => {
            flux_divergence(phi, |l, r, grad| if grad > 0.0 { uv[l] } else { uv[r] })
        }
    })
}

/// Discrete `int |grad f|^2` from interior face differences.
pub fn grad_sq_integral(f: &ScalarField) -> f64 {
    let spec = &f.spec;
    let mut acc = 0.0;
    for axis in 0..spec.dim() {
        let h = spec.spacing[axis];
        spec.for_each_face(axis, |left, right| {
            let d = (f.values[right] - f.values[left]) / h;
            acc += d * d;
        });
    }
    acc * spec.cell_volume()
}

/// Squared gradient magnitude per cell: each axis component is the mean of the
/// two adjacent face gradients, boundary faces contributing zero.
pub fn cell_grad_sq(f: &ScalarField) -> ScalarField {
    let spec = &f.spec;
    let mut out = vec![0.0; spec.total_cells()];
    for axis in 0..spec.dim() {
        let h = spec.spacing[axis];
        let mut comp = vec![0.0; spec.total_cells()];
        spec.for_each_face(axis, |left, right| {
            let half = 0.5 * (f.values[right] - f.values[left]) / h;
            comp[left] += half;
            comp[right] += half;
        });
        for (o, c) in out.iter_mut().zip(comp) {
            *o += c * c;
        }
    }
    ScalarField::from_raw(spec, out)
}

pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64, GridError> {
    if !(p >= 1.0) {
        return Err(GridError::Exponent(p));
    }
    let s: f64 = f.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * f.spec.cell_volume();
    Ok(s.powf(1.0 / p))
}

pub fn sup_norm(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Writes the plain-text snapshot: `dim`, `n_cells`, `length`, `time` header
/// lines followed by the values in row-major order.
pub fn write_snapshot(w: &mut impl Write, f: &ScalarField, time: f64) -> std::io::Result<()> {
    let join = |xs: Vec<String>| xs.join(" ");
    writeln!(w, "dim {}", f.spec.dim())?;
    writeln!(
        w,
        "n_cells {}",
        join(f.spec.n_cells.iter().map(|n| n.to_string()).collect())
    )?;
    writeln!(
        w,
        "length {}",
        join(f.spec.length.iter().map(|l| format!("{l:.16e}")).collect())
    )?;
    writeln!(w, "time {time:.16e}")?;
    let row = f.spec.n_cells[f.spec.dim() - 1];
    for chunk in f.values.chunks(row) {
        writeln!(
            w,
            "{}",
            join(chunk.iter().map(|v| format!("{v:.16e}")).collect())
        )?;
    }
    Ok(())
}

pub fn read_snapshot(r: impl BufRead) -> Result<(ScalarField, f64), GridError> {
    let bad = |msg: &str| GridError::Snapshot(msg.to_string());
    let mut lines = r.lines();
    let mut header = |key: &str| -> Result<Vec<String>, GridError> {
        let line = lines
            .next()
            .ok_or_else(|| bad(&format!("missing `{key}` line")))?
            .map_err(|e| GridError::Snapshot(e.to_string()))?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(&format!("expected `{key}` header")));
        }
        Ok(it.map(str::to_string).collect())
    };
    let parse_err = |what: &str| bad(&format!("unparsable {what}"));
    let dim: usize = header("dim")?
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err("dim"))?;
    let n_cells = header("n_cells")?
        .iter()
        .map(|s| s.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| parse_err("n_cells"))?;
    let length = header("length")?
        .iter()
        .map(|s| s.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| parse_err("length"))?;
    let time: f64 = header("time")?
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err("time"))?;
    if n_cells.len() != dim {
        return Err(bad("n_cells does not match dim"));
    }
    let spec = GridSpec::new(&n_cells, &length)?;
    let mut values = Vec::with_capacity(spec.total_cells());
    for line in lines {
        let line = line.map_err(|e| GridError::Snapshot(e.to_string()))?;
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| parse_err("value"))?);
        }
    }
    Ok((ScalarField::new(spec, values)?, time))
}
