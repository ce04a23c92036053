//! Square-cell grid on `[0, Lx] × [0, Ly]`: displacements and velocities live at nodes,
//! strains and stresses at cell centres.
//!
//! The discrete symmetric gradient `G` and the divergence are built as exact transposes of
//! each other with respect to the cell weight `h²` and the lumped nodal mass, so that
//!
//! ```text
//! Σ_c h² σ_c : (G u)_c + Σ_i m_i div_i · u_i = Σ_{i ∈ ∂Ω} ds_i T_i · u_i
//! ```
//!
//! holds to roundoff for every `σ`, `u` and boundary traction `T`.

use serde::{Deserialize, Serialize};

use crate::algebra::{dot, Sym2, Vec2};
use crate::error::{Error, Result};

pub type VectorField = Vec<Vec2>;
pub type SymField = Vec<Sym2>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "D")]
    Dirichlet,
    #[serde(rename = "N")]
    Neumann,
    Sigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

    pub fn normal(self) -> Vec2 {
        match self {
            Edge::Bottom => [0.0, -1.0],
            Edge::Right => [1.0, 0.0],
            Edge::Top => [0.0, 1.0],
            Edge::Left => [-1.0, 0.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restrict {
    Dirichlet,
    Neumann,
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    h: f64,
}

impl Grid {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("need positive sizes, got {lx}x{ly} with {nx}x{ny} cells")));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(Error::InvalidGrid(format!("cells must be square, got hx = {hx}, hy = {hy}")));
        }
        Ok(Self { lx, ly, nx, ny, h: hx })
    }

    pub fn unit(n: usize) -> Result<Self> {
        Self::new(1.0, 1.0, n, n)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i + j * (self.nx + 1)
    }

    #[inline]
    pub fn node_ij(&self, n: usize) -> (usize, usize) {
        (n % (self.nx + 1), n / (self.nx + 1))
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    #[inline]
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn node_pos(&self, n: usize) -> Vec2 {
        let (i, j) = self.node_ij(n);
        [i as f64 * self.h, j as f64 * self.h]
    }

    pub fn cell_center(&self, c: usize) -> Vec2 {
        let (i, j) = self.cell_ij(c);
        [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h]
    }

    pub fn is_boundary_node(&self, n: usize) -> bool {
        let (i, j) = self.node_ij(n);
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Corner nodes of a cell with the gradient weights of the bilinear interpolant at the
    /// cell centre.
    #[inline]
    pub fn cell_stencil(&self, c: usize) -> [(usize, Vec2); 4] {
        let (i, j) = self.cell_ij(c);
        let w = 0.5 / self.h;
        [
            (self.node(i, j), [-w, -w]),
            (self.node(i + 1, j), [w, -w]),
            (self.node(i, j + 1), [-w, w]),
            (self.node(i + 1, j + 1), [w, w]),
        ]
    }

    /// Lumped (trapezoidal) nodal mass.
    pub fn node_mass(&self, n: usize) -> f64 {
        let (i, j) = self.node_ij(n);
        let wx = if i == 0 || i == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny { 0.5 } else { 1.0 };
        self.h * self.h * wx * wy
    }

    pub fn masses(&self) -> Vec<f64> {
        (0..self.num_nodes()).map(|n| self.node_mass(n)).collect()
    }

    pub fn cell_weight(&self) -> f64 {
        self.h * self.h
    }

    fn check_nodes<T>(&self, f: &[T]) -> Result<()> {
        if f.len() != self.num_nodes() {
            return Err(Error::FieldSize { expected: self.num_nodes(), found: f.len() });
        }
        Ok(())
    }

    fn check_cells<T>(&self, f: &[T]) -> Result<()> {
        if f.len() != self.num_cells() {
            return Err(Error::FieldSize { expected: self.num_cells(), found: f.len() });
        }
        Ok(())
    }

    /// Cellwise symmetric gradient of the bilinear interpolant at the cell centre.
    pub fn sym_gradient(&self, u: &[Vec2]) -> Result<SymField> {
        self.check_nodes(u)?;
        Ok((0..self.num_cells()).map(|c| self.sym_gradient_cell(u, c)).collect())
    }

    #[inline]
    pub fn sym_gradient_cell(&self, u: &[Vec2], c: usize) -> Sym2 {
        let mut d = [[0.0; 2]; 2];
        for (n, g) in self.cell_stencil(c) {
            for a in 0..2 {
                for b in 0..2 {
                    d[a][b] += u[n][a] * g[b];
                }
            }
        }
        Sym2::new(d[0][0], d[1][1], 0.5 * (d[0][1] + d[1][0]))
    }

    /// `(Gᵀ W σ)_i = Σ_{c ∋ i} h² σ_c g_{c,i}`, the transpose of [`Grid::sym_gradient`] in the
    /// cell-weighted inner product.
    pub fn gradient_adjoint(&self, sigma: &[Sym2]) -> Result<VectorField> {
        self.check_cells(sigma)?;
        let w = self.cell_weight();
        let mut out = vec![[0.0; 2]; self.num_nodes()];
        for (c, s) in sigma.iter().enumerate() {
            for (n, g) in self.cell_stencil(c) {
                let sg = s.mul_vec(&g);
                out[n][0] += w * sg[0];
                out[n][1] += w * sg[1];
            }
        }
        Ok(out)
    }

    /// Nodal divergence of `σ` with boundary traction `T` (indexed like
    /// [`BoundaryPartition::nodes`]), normalised by the lumped mass.
    pub fn divergence_with_traction(
        &self,
        part: &BoundaryPartition,
        sigma: &[Sym2],
        traction: &[Vec2],
    ) -> Result<VectorField> {
        if traction.len() != part.nodes.len() {
            return Err(Error::FieldSize { expected: part.nodes.len(), found: traction.len() });
        }
        let mut out = self.gradient_adjoint(sigma)?;
        out.iter_mut().for_each(|x| *x = [-x[0], -x[1]]);
        for (b, t) in part.nodes.iter().zip(traction) {
            out[b.node][0] += b.ds * t[0];
            out[b.node][1] += b.ds * t[1];
        }
        for (n, x) in out.iter_mut().enumerate() {
            let m = self.node_mass(n);
            x[0] /= m;
            x[1] /= m;
        }
        Ok(out)
    }

    /// Boundary trapezoid rule over the edge segments whose label matches `restrict`.
    pub fn boundary_quadrature(&self, part: &BoundaryPartition, f: &[f64], restrict: Restrict) -> Result<f64> {
        if f.len() != part.nodes.len() {
            return Err(Error::FieldSize { expected: part.nodes.len(), found: f.len() });
        }
        let mut acc = 0.0;
        for seg in &part.segments {
            let keep = match restrict {
                Restrict::All => true,
                Restrict::Dirichlet => seg.label == Label::Dirichlet,
                Restrict::Neumann => seg.label == Label::Neumann,
            };
            if keep {
                acc += 0.5 * seg.length * (f[seg.ends[0]] + f[seg.ends[1]]);
            }
        }
        Ok(acc)
    }

    /// Nodal average of the adjacent cells' stresses applied to the outward normal.
    pub fn boundary_normal_stress(&self, part: &BoundaryPartition, sigma: &[Sym2]) -> Result<VectorField> {
        self.check_cells(sigma)?;
        Ok(part
            .nodes
            .iter()
            .map(|b| {
                let avg = self.cells_around(b.node).iter().fold(Sym2::zero(), |a, &c| a + sigma[c]);
                let k = self.cells_around(b.node).len() as f64;
                avg.scale(1.0 / k).mul_vec(&b.normal)
            })
            .collect())
    }

    pub fn cells_around(&self, n: usize) -> Vec<usize> {
        let (i, j) = self.node_ij(n);
        let mut out = Vec::with_capacity(4);
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            if i >= di && j >= dj && i - di < self.nx && j - dj < self.ny {
                out.push(self.cell(i - di, j - dj));
            }
        }
        out
    }

    /// Cell averages of a nodal scalar.
    pub fn cell_average(&self, f: &[f64]) -> Vec<f64> {
        (0..self.num_cells())
            .map(|c| 0.25 * self.cell_stencil(c).iter().map(|(n, _)| f[*n]).sum::<f64>())
            .collect()
    }

    /// `Σ_i m_i a_i · b_i`.
    pub fn mass_dot(&self, a: &[Vec2], b: &[Vec2]) -> f64 {
        a.iter().zip(b).enumerate().map(|(n, (x, y))| self.node_mass(n) * dot(x, y)).sum()
    }
}

/// Labelled interval `[from, to]` of an edge, in fractions of the edge length measured in
/// increasing `x` (bottom, top) or `y` (left, right).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub from: f64,
    pub to: f64,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub edge: Edge,
    pub intervals: Vec<Interval>,
}

impl EdgeSpec {
    pub fn uniform(edge: Edge, label: Label) -> Self {
        Self { edge, intervals: vec![Interval { from: 0.0, to: 1.0, label }] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub label: Label,
    pub normal: Vec2,
    /// Trapezoid weight: half the length of each adjacent boundary segment.
    pub ds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub edge: Edge,
    /// Indices into [`BoundaryPartition::nodes`].
    pub ends: [usize; 2],
    pub length: f64,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPartition {
    pub nodes: Vec<BoundaryNode>,
    pub segments: Vec<Segment>,
    /// `index[n]` is the boundary index of grid node `n`, if any.
    index: Vec<Option<usize>>,
}

impl BoundaryPartition {
    pub fn new(grid: &Grid, specs: &[EdgeSpec]) -> Result<Self> {
        let mut per_edge: [Option<&EdgeSpec>; 4] = [None; 4];
        for s in specs {
            let k = Edge::ALL.iter().position(|e| *e == s.edge).unwrap();
            if per_edge[k].is_some() {
                return Err(Error::InvalidPartition(format!("edge {:?} specified twice", s.edge)));
            }
            validate_intervals(s)?;
            per_edge[k] = Some(s);
        }
        for (k, e) in per_edge.iter().enumerate() {
            if e.is_none() {
                return Err(Error::InvalidPartition(format!("edge {:?} has no labels", Edge::ALL[k])));
            }
        }

        let mut index = vec![None; grid.num_nodes()];
        let mut nodes = Vec::new();
        for n in 0..grid.num_nodes() {
            if grid.is_boundary_node(n) {
                index[n] = Some(nodes.len());
                nodes.push(BoundaryNode { node: n, label: Label::Sigma, normal: [0.0; 2], ds: 0.0 });
            }
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut segments = Vec::new();
        for (k, edge) in Edge::ALL.iter().enumerate() {
            let count = match edge {
                Edge::Bottom | Edge::Top => nx,
                _ => ny,
            };
            let spec = per_edge[k].unwrap();
            for s in 0..count {
                let (a, b) = match edge {
                    Edge::Bottom => (grid.node(s, 0), grid.node(s + 1, 0)),
                    Edge::Top => (grid.node(s, ny), grid.node(s + 1, ny)),
                    Edge::Left => (grid.node(0, s), grid.node(0, s + 1)),
                    Edge::Right => (grid.node(nx, s), grid.node(nx, s + 1)),
                };
                let mid = (s as f64 + 0.5) / count as f64;
                let label = spec
                    .intervals
                    .iter()
                    .find(|iv| iv.from <= mid && mid <= iv.to)
                    .map(|iv| iv.label)
                    .unwrap();
                segments.push(Segment {
                    edge: *edge,
                    ends: [index[a].unwrap(), index[b].unwrap()],
                    length: grid.h(),
                    label,
                });
            }
        }

        let mut adjacent: Vec<Vec<(Label, Edge, f64)>> = vec![Vec::new(); nodes.len()];
        for seg in &segments {
            for &e in &seg.ends {
                adjacent[e].push((seg.label, seg.edge, seg.length));
            }
        }
        for (b, adj) in nodes.iter_mut().zip(&adjacent) {
            b.ds = adj.iter().map(|a| 0.5 * a.2).sum();
            let first = adj[0].0;
            b.label = if adj.iter().all(|a| a.0 == first) { first } else { Label::Sigma };
            let mut nsum = [0.0; 2];
            let mut seen: Vec<Edge> = Vec::new();
            for a in adj {
                if !seen.contains(&a.1) {
                    seen.push(a.1);
                    let nn = a.1.normal();
                    nsum[0] += nn[0];
                    nsum[1] += nn[1];
                }
            }
            let len = dot(&nsum, &nsum).sqrt();
            b.normal = [nsum[0] / len, nsum[1] / len];
        }
        Ok(Self { nodes, segments, index })
    }

    /// Every edge carries the same label.
    pub fn uniform(grid: &Grid, label: Label) -> Result<Self> {
        let specs: Vec<EdgeSpec> = Edge::ALL.iter().map(|e| EdgeSpec::uniform(*e, label)).collect();
        Self::new(grid, &specs)
    }

    pub fn boundary_index(&self, node: usize) -> Option<usize> {
        self.index.get(node).copied().flatten()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.nodes.iter().map(|b| b.label)
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels().filter(|l| *l == label).count()
    }

    /// Positions of the interface nodes.
    pub fn sigma_nodes(&self) -> Vec<usize> {
        self.nodes.iter().filter(|b| b.label == Label::Sigma).map(|b| b.node).collect()
    }
}

fn validate_intervals(spec: &EdgeSpec) -> Result<()> {
    let mut iv = spec.intervals.clone();
    if iv.is_empty() {
        return Err(Error::InvalidPartition(format!("edge {:?} has no intervals", spec.edge)));
    }
    if iv.iter().any(|i| i.label == Label::Sigma) {
        return Err(Error::InvalidPartition("interface labels are derived, not configured".into()));
    }
    iv.sort_by(|a, b| a.from.total_cmp(&b.from));
    let mut at = 0.0;
    for i in &iv {
        if !(i.to > i.from) {
            return Err(Error::InvalidPartition(format!("empty interval [{}, {}] on {:?}", i.from, i.to, spec.edge)));
        }
        if (i.from - at).abs() > 1e-12 {
            return Err(Error::InvalidPartition(format!(
                "intervals on {:?} must tile [0, 1]: gap or overlap at {}",
                spec.edge, at
            )));
        }
        at = i.to;
    }
    if (at - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPartition(format!("intervals on {:?} end at {at}, not 1", spec.edge)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mixed(grid: &Grid) -> BoundaryPartition {
        BoundaryPartition::new(
            grid,
            &[
                EdgeSpec::uniform(Edge::Bottom, Label::Neumann),
                EdgeSpec::uniform(Edge::Right, Label::Neumann),
                EdgeSpec::uniform(Edge::Top, Label::Neumann),
                EdgeSpec::uniform(Edge::Left, Label::Dirichlet),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1.0, 2.0, 4, 4).is_err());
        assert!(Grid::new(1.0, 1.0, 0, 4).is_err());
        assert!(Grid::new(2.0, 1.0, 8, 4).is_ok());
    }

    #[test]
    fn affine_reproduction() {
        let g = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let m = [[0.3, -1.2], [0.7, 2.0]];
        let u: VectorField = (0..g.num_nodes())
            .map(|n| {
                let x = g.node_pos(n);
                [m[0][0] * x[0] + m[0][1] * x[1] + 1.0, m[1][0] * x[0] + m[1][1] * x[1] - 2.0]
            })
            .collect();
        let want = Sym2::new(0.3, 2.0, -0.25);
        for e in g.sym_gradient(&u).unwrap() {
            assert!((e - want).norm() < 1e-13);
        }
    }

    #[test]
    fn green_identity() {
        let g = Grid::unit(8).unwrap();
        let part = mixed(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma: SymField = (0..g.num_cells())
            .map(|_| Sym2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let u: VectorField = (0..g.num_nodes()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let t: VectorField = part.nodes.iter().map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let eu = g.sym_gradient(&u).unwrap();
        let div = g.divergence_with_traction(&part, &sigma, &t).unwrap();
        let lhs: f64 = sigma.iter().zip(&eu).map(|(s, e)| s.ddot(e)).sum::<f64>() * g.cell_weight() + g.mass_dot(&div, &u);
        let rhs: f64 = part.nodes.iter().zip(&t).map(|(b, t)| b.ds * dot(t, &u[b.node])).sum();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn constant_stress_equilibrium() {
        let g = Grid::unit(6).unwrap();
        let part = BoundaryPartition::uniform(&g, Label::Neumann).unwrap();
        let s = Sym2::new(1.0, -0.5, 0.25);
        let sigma = vec![s; g.num_cells()];
        // at corners only one cell contributes, so the matching traction is σν/√2
        let t: VectorField = part
            .nodes
            .iter()
            .map(|b| {
                let (i, j) = g.node_ij(b.node);
                let corner = (i == 0 || i == g.nx()) && (j == 0 || j == g.ny());
                let k = if corner { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
                let sn = s.mul_vec(&b.normal);
                [k * sn[0], k * sn[1]]
            })
            .collect();
        let div = g.divergence_with_traction(&part, &sigma, &t).unwrap();
        for d in div {
            assert!(d[0].abs() < 1e-12 && d[1].abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn quadrature() {
        let g = Grid::new(2.0, 1.0, 8, 4).unwrap();
        let part = mixed(&g);
        let ones = vec![1.0; part.nodes.len()];
        assert!((g.boundary_quadrature(&part, &ones, Restrict::All).unwrap() - 6.0).abs() < 1e-13);
        assert!((g.boundary_quadrature(&part, &ones, Restrict::Dirichlet).unwrap() - 1.0).abs() < 1e-13);
        let lin: Vec<f64> = part.nodes.iter().map(|b| g.node_pos(b.node)[1]).collect();
        // ∫ y over the left edge = ½
        assert!((g.boundary_quadrature(&part, &lin, Restrict::Dirichlet).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn labels_and_normals() {
        let g = Grid::unit(4).unwrap();
        let part = mixed(&g);
        assert_eq!(part.count(Label::Sigma), 2);
        let corner = part.boundary_index(g.node(0, 0)).unwrap();
        assert_eq!(part.nodes[corner].label, Label::Sigma);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((part.nodes[corner].normal[0] + s).abs() < 1e-15);
        let c2 = part.boundary_index(g.node(4, 4)).unwrap();
        assert_eq!(part.nodes[c2].label, Label::Neumann);
        let bad = [EdgeSpec {
            edge: Edge::Bottom,
            intervals: vec![
                Interval { from: 0.0, to: 0.6, label: Label::Dirichlet },
                Interval { from: 0.5, to: 1.0, label: Label::Neumann },
            ],
        }];
        assert!(BoundaryPartition::new(&g, &bad).is_err());
    }
}
