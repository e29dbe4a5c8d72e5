//! Downstream uses of a computed spectrum: heat kernel signatures, point
//! similarity, spectral projection of the embedding, spectrum comparison
//! and the analytic sphere reference.

use std::io::Write;

use faer::{Mat, MatRef};
use thiserror::Error;

use crate::mesh::{TriangleMesh, Vec3};
use crate::solver::EigenSolution;
use crate::sparse::SymmetricMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApplicationError {
    #[error("solution holds no eigenpairs")]
    EmptySpectrum,
    #[error("diffusion time {0} must be positive and finite")]
    InvalidTime(f64),
    #[error("vertex {vertex} out of range for {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("{requested} eigenpairs requested, {available} available")]
    TooFewPairs { requested: usize, available: usize },
    #[error("eigenvector comparison between meshes of {a} and {b} vertices needs a correspondence")]
    MissingCorrespondence { a: usize, b: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("similarity threshold {0} must be non-negative and finite")]
    InvalidThreshold(f64),
    #[error("correspondence line {line}: {message}")]
    Correspondence { line: usize, message: String },
}

/// Eigenvalues at or below this fraction of the largest are treated as zero.
const ZERO_FLOOR: f64 = 1e-8;

fn check_nonempty(solution: &EigenSolution) -> Result<(), ApplicationError> {
    if solution.is_empty() {
        Err(ApplicationError::EmptySpectrum)
    } else {
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<(), ApplicationError> {
    match times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        Some(&t) => Err(ApplicationError::InvalidTime(t)),
        None => Ok(()),
    }
}

fn check_vertex(solution: &EigenSolution, vertex: usize) -> Result<(), ApplicationError> {
    let n = solution.vertex_count();
    if vertex >= n {
        Err(ApplicationError::VertexOutOfRange { vertex, vertex_count: n })
    } else {
        Ok(())
    }
}

/// `count` times spaced logarithmically between `4 ln 10 / λ_max` and
/// `4 ln 10 / λ_2`, where `λ_2` is the smallest non-zero eigenvalue.
pub fn default_hks_times(eigenvalues: &[f64], count: usize) -> Result<Vec<f64>, ApplicationError> {
    let top = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let first = eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > ZERO_FLOOR * top)
        .fold(f64::INFINITY, f64::min);
    if !(top > 0.0) || !first.is_finite() {
        return Err(ApplicationError::EmptySpectrum);
    }
    let c = 4.0 * std::f64::consts::LN_10;
    let (lo, hi) = ((c / top).ln(), (c / first).ln());
    Ok(match count {
        0 => Vec::new(),
        1 => vec![(0.5 * (lo + hi)).exp()],
        _ => (0..count).map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp()).collect(),
    })
}

/// `HKS(v, t) = Σᵢ exp(−λᵢ t) φᵢ(v)²`, one column per time.
pub fn heat_kernel_signature(solution: &EigenSolution, times: &[f64]) -> Result<Mat<f64>, ApplicationError> {
    check_nonempty(solution)?;
    check_times(times)?;
    let phi = solution.eigenvectors.as_ref();
    let weights: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| solution.eigenvalues.iter().map(|&l| (-l.max(0.0) * t).exp()).collect())
        .collect();
    Ok(Mat::from_fn(solution.vertex_count(), times.len(), |v, c| {
        let w = &weights[c];
        (0..w.len()).map(|i| w[i] * phi[(v, i)] * phi[(v, i)]).sum()
    }))
}

/// `Σᵢ exp(−λᵢ t)` over the computed pairs.
pub fn heat_trace(eigenvalues: &[f64], t: f64) -> f64 {
    eigenvalues.iter().map(|&l| (-l.max(0.0) * t).exp()).sum()
}

/// Truncated diffusion distance from `source`:
/// `d(v)² = Σᵢ exp(−2λᵢt) (φᵢ(v) − φᵢ(source))²`.
pub fn heat_kernel_distance(solution: &EigenSolution, source: usize, t: f64) -> Result<Vec<f64>, ApplicationError> {
    check_nonempty(solution)?;
    check_vertex(solution, source)?;
    check_times(&[t])?;
    let phi = solution.eigenvectors.as_ref();
    let w: Vec<f64> = solution.eigenvalues.iter().map(|&l| (-2.0 * l.max(0.0) * t).exp()).collect();
    Ok((0..solution.vertex_count())
        .map(|v| {
            (0..w.len())
                .map(|i| {
                    let d = phi[(v, i)] - phi[(source, i)];
                    w[i] * d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Distance between heat kernel signatures, with each time scaled by the
/// mean signature value `heat_trace / area` so every time contributes on
/// a comparable scale.
pub fn signature_distance(
    signature: MatRef<'_, f64>,
    eigenvalues: &[f64],
    times: &[f64],
    area: f64,
    source: usize,
) -> Result<Vec<f64>, ApplicationError> {
    if signature.ncols() != times.len() {
        return Err(ApplicationError::DimensionMismatch(format!(
            "{} signature columns for {} times",
            signature.ncols(),
            times.len()
        )));
    }
    if source >= signature.nrows() {
        return Err(ApplicationError::VertexOutOfRange { vertex: source, vertex_count: signature.nrows() });
    }
    let scale: Vec<f64> = times.iter().map(|&t| area / heat_trace(eigenvalues, t)).collect();
    Ok((0..signature.nrows())
        .map(|v| {
            (0..times.len())
                .map(|c| {
                    let d = (signature[(v, c)] - signature[(source, c)]) * scale[c];
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub distances: Vec<f64>,
    pub labels: Vec<bool>,
    /// Absolute cut-off: `threshold · median(distances)`.
    pub cutoff: f64,
}

/// Default for the `threshold` of [`similar_points`].
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.05;

/// Labels vertices whose heat kernel signature at time `t` is close to
/// the signature at `source`: similar iff the signature distance is at
/// most `threshold · median`.
pub fn similar_points(
    solution: &EigenSolution,
    mass: &SymmetricMatrix,
    source: usize,
    t: f64,
    threshold: f64,
) -> Result<Similarity, ApplicationError> {
    similar_points_multiscale(solution, mass, source, &[t], threshold)
}

/// [`similar_points`] with the signature distance accumulated over
/// several times.
pub fn similar_points_multiscale(
    solution: &EigenSolution,
    mass: &SymmetricMatrix,
    source: usize,
    times: &[f64],
    threshold: f64,
) -> Result<Similarity, ApplicationError> {
    check_vertex(solution, source)?;
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(ApplicationError::InvalidThreshold(threshold));
    }
    if mass.dim() != solution.vertex_count() {
        return Err(ApplicationError::DimensionMismatch(format!(
            "mass is {0}x{0}, solution has {1} vertices",
            mass.dim(),
            solution.vertex_count()
        )));
    }
    let hks = heat_kernel_signature(solution, times)?;
    let distances = signature_distance(hks.as_ref(), &solution.eigenvalues, times, mass.trace(), source)?;
    Ok(label_by_median(distances, threshold))
}

fn label_by_median(distances: Vec<f64>, threshold: f64) -> Similarity {
    let cutoff = threshold * crate::solver::median(&distances);
    let labels = distances.iter().map(|&d| d <= cutoff).collect();
    Similarity { distances, labels, cutoff }
}

/// `P' = Φₙ Φₙᵀ M P` using the first `n` eigenvectors.
pub fn spectral_projection(
    mesh: &TriangleMesh,
    solution: &EigenSolution,
    mass: &SymmetricMatrix,
    n: usize,
) -> Result<Vec<Vec3>, ApplicationError> {
    let positions = Mat::from_fn(mesh.vertex_count(), 3, |v, c| mesh.position(v)[c]);
    let projected = project_block(solution, mass, positions.as_ref(), n)?;
    Ok((0..mesh.vertex_count()).map(|v| [projected[(v, 0)], projected[(v, 1)], projected[(v, 2)]]).collect())
}

/// Projects the columns of `values` onto the span of the first `n`
/// eigenvectors.
pub fn project_block(
    solution: &EigenSolution,
    mass: &SymmetricMatrix,
    values: MatRef<'_, f64>,
    n: usize,
) -> Result<Mat<f64>, ApplicationError> {
    if n > solution.len() {
        return Err(ApplicationError::TooFewPairs { requested: n, available: solution.len() });
    }
    let rows = solution.vertex_count();
    if values.nrows() != rows || mass.dim() != rows {
        return Err(ApplicationError::DimensionMismatch(format!(
            "{} value rows, mass {}x{}, {rows} solution rows",
            values.nrows(),
            mass.dim(),
            mass.dim()
        )));
    }
    let phi = solution.eigenvectors.subcols(0, n);
    let mv = mass.mul_dense(values);
    let coeff = phi.transpose() * mv.as_ref();
    Ok(phi * coeff.as_ref())
}

/// `‖P' − P‖_M`, summed over the three coordinates.
pub fn projection_error(mesh: &TriangleMesh, mass: &SymmetricMatrix, projected: &[Vec3]) -> f64 {
    let n = mesh.vertex_count();
    let diff = Mat::from_fn(n, 3, |v, c| projected[v][c] - mesh.position(v)[c]);
    let md = mass.mul_dense(diff.as_ref());
    let mut total = 0.0;
    for c in 0..3 {
        for v in 0..n {
            total += diff[(v, c)] * md[(v, c)];
        }
    }
    total.max(0.0).sqrt()
}

/// Mesh and mass of the first solution, needed to compare eigenvectors.
#[derive(Debug, Clone, Copy)]
pub struct VectorComparison<'a> {
    pub mass: &'a SymmetricMatrix,
    /// `correspondence[v]` is the vertex of the second mesh matching
    /// vertex `v` of the first. May be omitted for identical vertex sets.
    pub correspondence: Option<&'a [usize]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDifference {
    /// `|λᵃᵢ − λᵇᵢ| / max(λᵃᵢ, λ_floor)`.
    pub value_diffs: Vec<f64>,
    /// `1 − |⟨φᵃᵢ, φᵇᵢ∘map⟩_M| / (‖φᵃᵢ‖_M ‖φᵇᵢ∘map‖_M)`.
    pub vector_discrepancies: Option<Vec<f64>>,
}

/// Per-index comparison of the first `count` pairs of two spectra.
pub fn eigen_difference_metrics(
    a: &EigenSolution,
    b: &EigenSolution,
    count: usize,
    vectors: Option<VectorComparison<'_>>,
) -> Result<EigenDifference, ApplicationError> {
    let available = a.len().min(b.len());
    if count > available {
        return Err(ApplicationError::TooFewPairs { requested: count, available });
    }
    let top = a.eigenvalues[..count].iter().copied().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = (ZERO_FLOOR * top).max(f64::MIN_POSITIVE);
    let value_diffs = (0..count)
        .map(|i| (a.eigenvalues[i] - b.eigenvalues[i]).abs() / a.eigenvalues[i].max(floor))
        .collect();
    let vector_discrepancies = match vectors {
        None => None,
        Some(cmp) => Some(vector_discrepancies(a, b, count, cmp)?),
    };
    Ok(EigenDifference { value_diffs, vector_discrepancies })
}

fn vector_discrepancies(
    a: &EigenSolution,
    b: &EigenSolution,
    count: usize,
    cmp: VectorComparison<'_>,
) -> Result<Vec<f64>, ApplicationError> {
    let (na, nb) = (a.vertex_count(), b.vertex_count());
    if cmp.mass.dim() != na {
        return Err(ApplicationError::DimensionMismatch(format!("mass is {0}x{0}, first solution has {na} vertices", cmp.mass.dim())));
    }
    let identity: Vec<usize>;
    let map = match cmp.correspondence {
        Some(map) => map,
        None if na == nb => {
            identity = (0..na).collect();
            &identity
        }
        None => return Err(ApplicationError::MissingCorrespondence { a: na, b: nb }),
    };
    if map.len() != na {
        return Err(ApplicationError::DimensionMismatch(format!("correspondence has {} entries for {na} vertices", map.len())));
    }
    if let Some(&bad) = map.iter().find(|&&v| v >= nb) {
        return Err(ApplicationError::VertexOutOfRange { vertex: bad, vertex_count: nb });
    }
    let pulled = Mat::from_fn(na, count, |v, i| b.eigenvectors[(map[v], i)]);
    let phi_a = a.eigenvectors.subcols(0, count);
    let m_pulled = cmp.mass.mul_dense(pulled.as_ref());
    let m_a = cmp.mass.mul_dense(phi_a);
    Ok((0..count)
        .map(|i| {
            let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
            for v in 0..na {
                ab += phi_a[(v, i)] * m_pulled[(v, i)];
                aa += phi_a[(v, i)] * m_a[(v, i)];
                bb += pulled[(v, i)] * m_pulled[(v, i)];
            }
            let denom = (aa * bb).sqrt();
            if denom > 0.0 {
                (1.0 - ab.abs() / denom).max(0.0)
            } else {
                1.0
            }
        })
        .collect())
}

/// Unit-sphere Laplace–Beltrami eigenvalues `l(l+1)`, each repeated
/// `2l+1` times, truncated to `count`.
pub fn sphere_analytic_spectrum(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut l = 0usize;
    while out.len() < count {
        let value = (l * (l + 1)) as f64;
        for _ in 0..(2 * l + 1).min(count - out.len()) {
            out.push(value);
        }
        l += 1;
    }
    out
}

/// `|λᵢ − refᵢ| / refᵢ` for every index whose reference is non-zero;
/// zero-reference indices report `|λᵢ|`.
pub fn relative_errors(values: &[f64], reference: &[f64]) -> Vec<f64> {
    values
        .iter()
        .zip(reference)
        .map(|(&v, &r)| if r != 0.0 { (v - r).abs() / r.abs() } else { v.abs() })
        .collect()
}

/// Parses a vertex correspondence: one target vertex index per line, the
/// line order giving the source vertex. Blank lines and `#` comments are
/// ignored. Every target must be below `target_vertex_count`.
pub fn parse_correspondence(text: &str, target_vertex_count: usize) -> Result<Vec<usize>, ApplicationError> {
    let mut map = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ApplicationError::Correspondence { line: i + 1, message };
        let v: usize = line.parse().map_err(|_| err(format!("expected a vertex index, found {line:?}")))?;
        if v >= target_vertex_count {
            return Err(err(format!("vertex {v} out of range for {target_vertex_count} vertices")));
        }
        map.push(v);
    }
    Ok(map)
}

/// CSV with a `vertex` column followed by one column per name.
pub fn write_vertex_csv<W: Write>(columns: &[&str], values: MatRef<'_, f64>, mut out: W) -> std::io::Result<()> {
    write!(out, "vertex")?;
    for c in columns {
        write!(out, ",{c}")?;
    }
    writeln!(out)?;
    for v in 0..values.nrows() {
        write!(out, "{v}")?;
        for c in 0..values.ncols() {
            write!(out, ",{}", values[(v, c)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Similarity labels as CSV: `vertex,distance,similar`.
pub fn write_similarity_csv<W: Write>(similarity: &Similarity, mut out: W) -> std::io::Result<()> {
    writeln!(out, "vertex,distance,similar")?;
    for (v, (d, l)) in similarity.distances.iter().zip(&similarity.labels).enumerate() {
        writeln!(out, "{v},{d},{}", u8::from(*l))?;
    }
    Ok(())
}
