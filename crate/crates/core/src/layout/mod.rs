//! Spectral country circle and barycentric Newton diagrams.
//!
//! Countries are connected by the clamped cosine similarity of their
//! embedding vectors. Two non-trivial eigenvectors of the random-walk matrix
//! `D⁻¹W` give each country a raw planar point, which is pushed radially onto
//! the unit circle. A cuisine distribution is then drawn at the
//! probability-weighted mean of the country positions.

pub mod eigen;

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::CuisineDistribution;
use crate::corpus::display_country;
use crate::embeddings::EmbeddingSpace;
use eigen::symmetric_eigen;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("country '{0}' has a zero embedding vector")]
    ZeroVector(String),
    #[error("similarity matrix is invalid: {0}")]
    InvalidMatrix(String),
    #[error("country similarity graph is disconnected ('{0}' is unreachable)")]
    Disconnected(String),
    #[error("eigen-solver did not converge")]
    EigenFailure,
    #[error("random-walk matrix check failed: {0}")]
    Stochastic(String),
    #[error("need at least {needed} countries, got {got}")]
    TooFewCountries { needed: usize, got: usize },
    #[error("country '{0}' sits at the origin of the spectral embedding")]
    AtOrigin(String),
    #[error("layout has fewer than three distinct positions")]
    Degenerate,
    #[error("distribution has {got} entries, layout has {expected} countries")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, LayoutError>;

/// Nonnegative symmetric country adjacency with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CountrySimilarityMatrix {
    countries: Vec<String>,
    /// Row-major `C × C`.
    weights: Vec<f64>,
}

impl CountrySimilarityMatrix {
    pub fn new(countries: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let n = countries.len();
        if weights.len() != n * n {
            return Err(LayoutError::InvalidMatrix(format!(
                "{} weights for {n} countries",
                weights.len()
            )));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(LayoutError::InvalidMatrix("nonzero diagonal".into()));
            }
            for j in 0..n {
                let w = weights[i * n + j];
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(LayoutError::InvalidMatrix(format!("W[{i}][{j}] = {w}")));
                }
                if w != weights[j * n + i] {
                    return Err(LayoutError::InvalidMatrix("not symmetric".into()));
                }
            }
        }
        Ok(CountrySimilarityMatrix { countries, weights })
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degrees(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).map(|i| self.weights[i * n..(i + 1) * n].iter().sum()).collect()
    }

    /// Row-major `D⁻¹W`.
    pub fn random_walk(&self) -> Vec<f64> {
        let n = self.len();
        let d = self.degrees();
        (0..n * n).map(|k| self.weights[k] / d[k / n]).collect()
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && self.weight(i, j) > 0.0 {
                    *s = true;
                    queue.push_back(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(j) => Err(LayoutError::Disconnected(self.countries[j].clone())),
            None => Ok(()),
        }
    }
}

/// `W_ij = max(0, cos(v_i, v_j))` over the countries' input vectors.
pub fn country_similarity(space: &EmbeddingSpace) -> Result<CountrySimilarityMatrix> {
    let vocab = space.vocab();
    let n = vocab.num_countries();
    let vectors: Vec<&[f64]> = (0..n).map(|c| space.input_vector(space.country_token(c))).collect();
    for (c, v) in vectors.iter().enumerate() {
        if v.iter().all(|&x| x == 0.0) {
            return Err(LayoutError::ZeroVector(vocab.country(c).to_string()));
        }
    }
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let w = cosine(vectors[i], vectors[j]).max(0.0);
            weights[i * n + j] = w;
            weights[j * n + i] = w;
        }
    }
    CountrySimilarityMatrix::new(vocab.countries().to_vec(), weights)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Which eigenpairs of `D⁻¹W` become the two layout axes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSelection {
    /// Second and third largest eigenvalues: the leading non-constant
    /// eigenvectors, as in standard spectral graph drawing.
    #[default]
    Largest,
    /// Second and third smallest eigenvalues, read literally.
    Smallest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleLayout {
    pub countries: Vec<String>,
    /// Unit-circle position of each country, in vocabulary order.
    pub positions: Vec<[f64; 2]>,
    /// All eigenvalues of `D⁻¹W`, descending.
    pub eigenvalues: Vec<f64>,
    pub selection: EigenSelection,
}

/// Points closer to the origin than this cannot be normalized.
const ORIGIN_EPS: f64 = 1e-12;

pub fn spectral_circle_layout(matrix: &CountrySimilarityMatrix, selection: EigenSelection) -> Result<CircleLayout> {
    let n = matrix.len();
    if n < 3 {
        return Err(LayoutError::TooFewCountries { needed: 3, got: n });
    }
    matrix.check_connected()?;
    let d = matrix.degrees();
    let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let sym: Vec<f64> = (0..n * n)
        .map(|k| inv_sqrt[k / n] * matrix.weights[k] * inv_sqrt[k % n])
        .collect();
    let eig = symmetric_eigen(&sym, n).ok_or(LayoutError::EigenFailure)?;

    // Eigenvectors of D⁻¹W are D^{-1/2}u; they come out D-orthonormal.
    let walk_vector = |u: &[f64]| -> Vec<f64> {
        let mut f: Vec<f64> = u.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = f.iter().find(|x| x.abs() > 1e-12 * max) {
            if *first < 0.0 {
                f.iter_mut().for_each(|x| *x = -*x);
            }
        }
        f
    };

    let lead = eig.values[0];
    if (lead - 1.0).abs() >= 1e-8 {
        return Err(LayoutError::Stochastic(format!("leading eigenvalue {lead}")));
    }
    let constant = walk_vector(&eig.vectors[0]);
    let (lo, hi) = constant
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if (hi - lo) / hi.abs() >= 1e-6 {
        return Err(LayoutError::Stochastic("leading eigenvector is not constant".into()));
    }

    let (a, b) = match selection {
        EigenSelection::Largest => (1, 2),
        EigenSelection::Smallest => (n - 2, n - 3),
    };
    let (fx, fy) = (walk_vector(&eig.vectors[a]), walk_vector(&eig.vectors[b]));
    let mut positions = Vec::with_capacity(n);
    for i in 0..n {
        let r = fx[i].hypot(fy[i]);
        if r < ORIGIN_EPS {
            return Err(LayoutError::AtOrigin(matrix.countries[i].clone()));
        }
        positions.push([fx[i] / r, fy[i] / r]);
    }
    let mut distinct: Vec<[f64; 2]> = Vec::new();
    for p in &positions {
        if !distinct.iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) < 1e-9) {
            distinct.push(*p);
        }
    }
    if distinct.len() < 3 {
        return Err(LayoutError::Degenerate);
    }
    Ok(CircleLayout {
        countries: matrix.countries.clone(),
        positions,
        eigenvalues: eig.values,
        selection,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub x: f64,
    pub y: f64,
}

/// `Σ_c p_c · pos_c`.
pub fn barycentric_position(dist: &CuisineDistribution, layout: &CircleLayout) -> Result<DiagramPoint> {
    let p = dist.probs();
    if p.len() != layout.positions.len() {
        return Err(LayoutError::DimensionMismatch {
            expected: layout.positions.len(),
            got: p.len(),
        });
    }
    let (mut x, mut y) = (0.0, 0.0);
    for (w, pos) in p.iter().zip(&layout.positions) {
        x += w * pos[0];
        y += w * pos[1];
    }
    Ok(DiagramPoint { x, y })
}

impl CircleLayout {
    pub fn position(&self, country: &str) -> Option<[f64; 2]> {
        self.countries
            .iter()
            .position(|c| c == country)
            .map(|i| self.positions[i])
    }

    /// `{country: [x, y]}` as JSON.
    pub fn coordinates_json(&self) -> String {
        let map: BTreeMap<&str, [f64; 2]> = self
            .countries
            .iter()
            .map(String::as_str)
            .zip(self.positions.iter().copied())
            .collect();
        serde_json::to_string_pretty(&map).expect("coordinates serialize")
    }
}

/// A point to draw, with its caption.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub label: String,
    pub point: DiagramPoint,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const SCALE: f64 = 200.0;

/// Circle, country labels and one marker per point. Consecutive points are
/// joined by a thin trail. Coordinates use six decimals so output is stable.
pub fn render_svg(layout: &CircleLayout, points: &[LabeledPoint]) -> String {
    let px = |v: f64| v * SCALE;
    // SVG's y axis points down.
    let py = |v: f64| -v * SCALE;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="600" height="600" viewBox="-300 -300 600 600">"#
    );
    let _ = writeln!(
        s,
        r##"<circle cx="0" cy="0" r="{SCALE:.6}" fill="none" stroke="#888888" stroke-width="1"/>"##
    );
    for (name, pos) in layout.countries.iter().zip(&layout.positions) {
        let anchor = if pos[0] < -0.2 {
            "end"
        } else if pos[0] > 0.2 {
            "start"
        } else {
            "middle"
        };
        let _ = writeln!(
            s,
            r##"<circle class="country" cx="{:.6}" cy="{:.6}" r="3" fill="#444444"/>"##,
            px(pos[0]),
            py(pos[1])
        );
        let _ = writeln!(
            s,
            r#"<text class="country-label" x="{:.6}" y="{:.6}" font-size="12" text-anchor="{anchor}">{}</text>"#,
            px(pos[0] * 1.08),
            py(pos[1] * 1.08) + 4.0,
            escape(&display_country(name))
        );
    }
    if points.len() > 1 {
        let path: Vec<String> = points
            .iter()
            .map(|p| format!("{:.6},{:.6}", px(p.point.x), py(p.point.y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline class="trail" points="{}" fill="none" stroke="#cc3333" stroke-width="1"/>"##,
            path.join(" ")
        );
    }
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<circle class="point" cx="{:.6}" cy="{:.6}" r="5" fill="#cc3333"/>"##,
            px(p.point.x),
            py(p.point.y)
        );
        let _ = writeln!(
            s,
            r#"<text class="point-label" x="{:.6}" y="{:.6}" font-size="10">{}. {}</text>"#,
            px(p.point.x) + 7.0,
            py(p.point.y) - 7.0,
            i,
            escape(&p.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(layout: &CircleLayout, points: &[LabeledPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(layout, points)).map_err(|source| LayoutError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> CountrySimilarityMatrix {
        let w = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
        CountrySimilarityMatrix::new((0..n).map(|i| format!("c{i}")).collect(), w).unwrap()
    }

    #[test]
    fn triangle_eigenvalues() {
        let layout = spectral_circle_layout(&complete(3), EigenSelection::Largest).unwrap();
        let expected = [1.0, -0.5, -0.5];
        for (got, want) in layout.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{:?}", layout.eigenvalues);
        }
    }

    #[test]
    fn matrix_validation() {
        let names = || vec!["a".to_string(), "b".to_string()];
        assert!(CountrySimilarityMatrix::new(names(), vec![1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(CountrySimilarityMatrix::new(names(), vec![0.0, 0.5, 0.4, 0.0]).is_err());
        assert!(CountrySimilarityMatrix::new(names(), vec![0.0, -0.5, -0.5, 0.0]).is_err());
        assert!(CountrySimilarityMatrix::new(names(), vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let mut w = vec![0.0; 16];
        for (i, j) in [(0, 1), (2, 3)] {
            w[i * 4 + j] = 1.0;
            w[j * 4 + i] = 1.0;
        }
        let m = CountrySimilarityMatrix::new((0..4).map(|i| format!("c{i}")).collect(), w).unwrap();
        assert!(matches!(
            spectral_circle_layout(&m, EigenSelection::Largest),
            Err(LayoutError::Disconnected(c)) if c == "c2"
        ));
    }

    #[test]
    fn too_few_countries() {
        assert!(matches!(
            spectral_circle_layout(&complete(2), EigenSelection::Largest),
            Err(LayoutError::TooFewCountries { .. })
        ));
    }

    #[test]
    fn svg_escapes_labels() {
        let layout = spectral_circle_layout(&complete(3), EigenSelection::Largest).unwrap();
        let svg = render_svg(
            &layout,
            &[LabeledPoint {
                label: "a<b & c".into(),
                point: DiagramPoint { x: 0.0, y: 0.0 },
            }],
        );
        assert!(svg.contains("a&lt;b &amp; c"));
    }
}
