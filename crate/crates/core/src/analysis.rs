//! Actuation analysis at a frozen tilt angle: force efficiency, rank
//! structure of the allocation matrix, and attainable force/torque
//! sets under the spin-rate box constraints.
//!
//! The attainable sets are exact: the feasible thrust set is a box
//! intersected with an affine constraint, its vertices are enumerated
//! directly (the dimensions are tiny), and the image under the linear
//! force or torque map is the convex hull of the projected vertices.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::vehicle::{allocation_force, allocation_matrix, allocation_torque, VehicleParams};
use crate::{Mat3x6, Vec3, Vec6};

/// Relative singular-value threshold below which a direction counts as
/// lost when ranking allocation matrices.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("constraint is unattainable at this tilt angle (residual {residual:.3e})")]
    Unattainable { residual: f64 },
    #[error("no feasible thrust vector satisfies the constraint at the box bounds")]
    EmptySet,
    #[error("total thrust must be positive, got {0}")]
    NonPositiveThrust(f64),
    #[error(
        "equilibrium thrust {thrust:.3} N at tilt {alpha:.3} rad is outside the spin envelope"
    )]
    HoverInfeasible { alpha: f64, thrust: f64 },
}

/// Ratio of net force magnitude to summed thrust: 1 when every
/// propeller pushes the same way, lower when tilt makes lateral
/// components fight each other.
pub fn force_efficiency(alpha: f64, u: &Vec6) -> Result<f64, AnalysisError> {
    let total = u.sum();
    if total <= 0.0 {
        return Err(AnalysisError::NonPositiveThrust(total));
    }
    Ok((allocation_force(alpha) * u).norm() / total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencySample {
    pub alpha: f64,
    /// Equal per-rotor equilibrium thrust at this tilt, N.
    pub thrust: f64,
    pub efficiency: f64,
}

/// Force efficiency along the hover equilibrium: at tilt `alpha` the
/// symmetric equilibrium is equal thrusts `m g / (6 cos alpha)`.
pub fn hover_efficiency_curve(
    grid: &[f64],
    params: &VehicleParams,
) -> Result<Vec<EfficiencySample>, AnalysisError> {
    let mut out = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let cos = alpha.cos();
        let thrust = params.weight() / (6.0 * cos);
        if cos.is_nan()
            || cos <= 0.0
            || thrust < params.thrust_floor()
            || thrust > params.thrust_ceiling()
        {
            return Err(AnalysisError::HoverInfeasible { alpha, thrust });
        }
        let efficiency = force_efficiency(alpha, &Vec6::from_element(thrust))?;
        out.push(EfficiencySample {
            alpha,
            thrust,
            efficiency,
        });
    }
    Ok(out)
}

/// Singular values of the stacked allocation matrix, descending.
pub fn allocation_singular_values(alpha: f64, params: &VehicleParams) -> [f64; 6] {
    let sv = allocation_matrix(alpha, params)
        .svd(false, false)
        .singular_values;
    let mut out = [0.0; 6];
    for (o, s) in out.iter_mut().zip(sv.iter()) {
        *o = *s;
    }
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankSample {
    pub alpha: f64,
    pub rank: usize,
    /// Smallest over largest singular value.
    pub sv_ratio: f64,
}

/// Numerical rank of the allocation matrix across a tilt grid.
/// `rel_tol` is the singular-value ratio below which a direction
/// counts as lost ([`RANK_TOL`] for exact structural questions; a
/// looser value resolves near-singular dips on a finite grid).
pub fn rank_sweep(grid: &[f64], rel_tol: f64, params: &VehicleParams) -> Vec<RankSample> {
    grid.iter()
        .map(|&alpha| {
            let sv = allocation_singular_values(alpha, params);
            let max = sv[0];
            let rank = sv.iter().filter(|&&s| s > rel_tol * max).count();
            RankSample {
                alpha,
                rank,
                sv_ratio: if max > 0.0 { sv[5] / max } else { 0.0 },
            }
        })
        .collect()
}

/// Supporting halfspace of an attainable set: `normal . x <= offset`,
/// with `normal` unit length.
#[derive(Clone, Copy, Debug)]
pub struct Facet {
    pub normal: Vec3,
    pub offset: f64,
}

/// Convex attainable set in force or torque space.
///
/// `vertices[k]` is realized by the feasible thrust vector
/// `generators[k]`, which certifies that the vertex is attainable.
/// `facets` is populated for full-dimensional sets; degenerate sets
/// (a segment at zero tilt, for instance) keep `dim < 3` and an empty
/// facet list.
#[derive(Clone, Debug)]
pub struct AttainableSet {
    pub dim: usize,
    pub vertices: Vec<Vec3>,
    pub generators: Vec<Vec6>,
    pub facets: Vec<Facet>,
    center: Vec3,
    basis: Vec<Vec3>,
    hull2d: Vec<(f64, f64)>,
}

impl AttainableSet {
    /// True if `point` lies in the set within `tol` (absolute, same
    /// units as the set).
    pub fn contains(&self, point: &Vec3, tol: f64) -> bool {
        // Distance off the affine span first.
        let mut rest = point - self.center;
        for b in &self.basis {
            rest -= b * rest.dot(b);
        }
        if rest.norm() > tol {
            return false;
        }
        match self.dim {
            0 => true,
            1 => {
                let axis = self.basis[0];
                let s = (point - self.center).dot(&axis);
                let (lo, hi) = self
                    .vertices
                    .iter()
                    .map(|v| (v - self.center).dot(&axis))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                        (lo.min(s), hi.max(s))
                    });
                s >= lo - tol && s <= hi + tol
            }
            2 => {
                let p = (
                    (point - self.center).dot(&self.basis[0]),
                    (point - self.center).dot(&self.basis[1]),
                );
                polygon_contains(&self.hull2d, p, tol)
            }
            _ => self
                .facets
                .iter()
                .all(|f| f.normal.dot(point) <= f.offset + tol),
        }
    }

    /// Largest coordinate magnitude over the vertices.
    pub fn extent(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.abs().max())
            .fold(0.0, f64::max)
    }

    /// Exact volume from the divergence theorem over the facets;
    /// zero for degenerate sets.
    pub fn volume(&self) -> f64 {
        if self.dim < 3 {
            return 0.0;
        }
        let tol = 1e-7 * self.extent().max(1.0);
        let mut vol = 0.0;
        for f in &self.facets {
            let corners: Vec<Vec3> = self
                .vertices
                .iter()
                .filter(|p| (f.normal.dot(p) - f.offset).abs() <= tol)
                .cloned()
                .collect();
            if corners.len() < 3 {
                continue;
            }
            vol += f.offset * convex_polygon_area(&corners, &f.normal) / 3.0;
        }
        vol
    }

    /// Convex hull of the vertices' (x, y) components: the set's
    /// exact projection onto the lateral plane.
    pub fn lateral_projection_hull(&self) -> Vec<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self.vertices.iter().map(|v| (v.x, v.y)).collect();
        convex_hull_2d(&pts)
    }
}

/// Area of a convex planar polygon given its corners in any order and
/// the plane normal.
fn convex_polygon_area(corners: &[Vec3], normal: &Vec3) -> f64 {
    let seed = if normal.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let u = normal.cross(&seed).normalize();
    let w = normal.cross(&u);
    let centroid = corners.iter().sum::<Vec3>() / corners.len() as f64;
    let mut plane: Vec<(f64, f64)> = corners
        .iter()
        .map(|p| {
            let d = p - centroid;
            (d.dot(&u), d.dot(&w))
        })
        .collect();
    plane.sort_by(|a, b| a.1.atan2(a.0).partial_cmp(&b.1.atan2(b.0)).unwrap());
    let mut twice = 0.0;
    for i in 0..plane.len() {
        let a = plane[i];
        let b = plane[(i + 1) % plane.len()];
        twice += a.0 * b.1 - a.1 * b.0;
    }
    twice.abs() * 0.5
}

/// Attainable body forces at tilt `alpha` while the propellers hold
/// the torque `at_torque` exactly.
pub fn attainable_force_set(
    alpha: f64,
    params: &VehicleParams,
    at_torque: &Vec3,
) -> Result<AttainableSet, AnalysisError> {
    let f2 = allocation_torque(alpha, params);
    build_attainable_set(&f2, at_torque, &allocation_force(alpha), params)
}

/// Attainable body torques at tilt `alpha` while the propellers hold
/// the force `at_force` exactly.
pub fn attainable_torque_set(
    alpha: f64,
    params: &VehicleParams,
    at_force: &Vec3,
) -> Result<AttainableSet, AnalysisError> {
    let f1 = allocation_force(alpha);
    build_attainable_set(&f1, at_force, &allocation_torque(alpha, params), params)
}

/// Radius of the largest origin-centered disc of lateral forces
/// attainable at hover (zero torque, vertical force equal to the
/// weight) at tilt `alpha`. This is what calibrates the controller's
/// lateral-force saturation.
pub fn hover_lateral_radius(alpha: f64, params: &VehicleParams) -> Result<f64, AnalysisError> {
    let f = allocation_matrix(alpha, params);
    // Constraints: all three torque rows plus the vertical force row.
    let mut a = DMatrix::zeros(4, 6);
    for c in 0..6 {
        a[(0, c)] = f[(3, c)];
        a[(1, c)] = f[(4, c)];
        a[(2, c)] = f[(5, c)];
        a[(3, c)] = f[(2, c)];
    }
    let b = DVector::from_column_slice(&[0.0, 0.0, 0.0, params.weight()]);
    let cands = feasible_vertices(&a, &b, params.thrust_floor(), params.thrust_ceiling())?;
    let lateral: Vec<(f64, f64)> = cands
        .iter()
        .map(|u| {
            let force = allocation_force(alpha) * u;
            (force.x, force.y)
        })
        .collect();
    let scale = lateral
        .iter()
        .map(|p| p.0.abs().max(p.1.abs()))
        .fold(0.0, f64::max);
    if scale < 1e-9 {
        return Ok(0.0); // Degenerate polygon: no lateral authority.
    }
    let hull = convex_hull_2d(&lateral);
    Ok(inscribed_radius_about_origin(&hull))
}

// ---------------------------------------------------------------------------
// Feasible-vertex enumeration and hull construction.

/// Band within which equality constraints and box bounds are treated
/// as satisfied during vertex enumeration.
const FEAS_TOL: f64 = 1e-9;

/// Vertices of `{ u : a u = b, lo <= u <= hi }`.
///
/// The SVD of `a` reduces the constraint to its row space (rank `r`),
/// then every choice of `6 - r` coordinates pinned at a bound yields a
/// square solve for the rest; solutions that respect the bounds are
/// the polytope's vertex candidates (every vertex arises this way).
fn feasible_vertices(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lo: f64,
    hi: f64,
) -> Result<Vec<Vec6>, AnalysisError> {
    let svd = a.clone().svd(true, true);
    let u_mat = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sv = &svd.singular_values;
    let sv_max = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv
        .iter()
        .filter(|&&s| s > RANK_TOL * sv_max.max(1e-300))
        .count();

    // b must lie in the column space, otherwise nothing satisfies a u = b.
    let u_r = u_mat.columns(0, rank);
    let ub = u_r.transpose() * b;
    let residual = (b - u_r * &ub).norm();
    if residual > FEAS_TOL * (1.0 + b.norm()) {
        return Err(AnalysisError::Unattainable { residual });
    }

    // Reduced full-rank system: rows of v_t, right side scaled by 1/sigma.
    let a_red = v_t.rows(0, rank).clone_owned();
    let mut b_red = DVector::zeros(rank);
    for i in 0..rank {
        b_red[i] = ub[i] / sv[i];
    }

    let n_fixed = 6 - rank;
    let mut vertices: Vec<Vec6> = Vec::new();
    for mask in 0u32..64 {
        if mask.count_ones() as usize != n_fixed {
            continue;
        }
        let fixed: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).collect();
        let free: Vec<usize> = (0..6).filter(|i| mask & (1 << i) == 0).collect();
        for combo in 0u32..(1 << n_fixed) {
            let mut u_full = Vec6::zeros();
            let mut rhs = b_red.clone();
            for (j, &idx) in fixed.iter().enumerate() {
                let val = if combo & (1 << j) != 0 { hi } else { lo };
                u_full[idx] = val;
                for row in 0..rank {
                    rhs[row] -= a_red[(row, idx)] * val;
                }
            }
            if !free.is_empty() {
                let mut m = DMatrix::zeros(rank, rank);
                for (col, &idx) in free.iter().enumerate() {
                    for row in 0..rank {
                        m[(row, col)] = a_red[(row, idx)];
                    }
                }
                let lu = m.lu();
                let Some(x) = lu.solve(&rhs) else { continue };
                for (col, &idx) in free.iter().enumerate() {
                    u_full[idx] = x[col];
                }
            }
            let in_box = u_full
                .iter()
                .all(|&v| v >= lo - FEAS_TOL && v <= hi + FEAS_TOL);
            if !in_box {
                continue;
            }
            let res = (a * DVector::from_column_slice(u_full.as_slice()) - b).norm();
            if res > FEAS_TOL * (1.0 + b.norm()) {
                continue;
            }
            vertices.push(u_full);
        }
    }
    if vertices.is_empty() {
        return Err(AnalysisError::EmptySet);
    }
    Ok(vertices)
}

fn build_attainable_set(
    constraint: &Mat3x6,
    rhs: &Vec3,
    projection: &Mat3x6,
    params: &VehicleParams,
) -> Result<AttainableSet, AnalysisError> {
    let mut a = DMatrix::zeros(3, 6);
    for r in 0..3 {
        for c in 0..6 {
            a[(r, c)] = constraint[(r, c)];
        }
    }
    let b = DVector::from_column_slice(rhs.as_slice());
    let cands = feasible_vertices(&a, &b, params.thrust_floor(), params.thrust_ceiling())?;

    // Project and de-duplicate.
    let mut points: Vec<Vec3> = Vec::new();
    let mut generators: Vec<Vec6> = Vec::new();
    let scale = cands
        .iter()
        .map(|u| (projection * u).abs().max())
        .fold(1e-12, f64::max);
    let dedupe_tol = 1e-9 * scale.max(1.0);
    for u in cands {
        let p = projection * u;
        if points.iter().all(|q| (p - q).norm() > dedupe_tol) {
            points.push(p);
            generators.push(u);
        }
    }

    // Affine dimension of the cloud.
    let center = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut spread = DMatrix::zeros(points.len(), 3);
    for (r, p) in points.iter().enumerate() {
        let d = p - center;
        spread[(r, 0)] = d.x;
        spread[(r, 1)] = d.y;
        spread[(r, 2)] = d.z;
    }
    let svd = spread.clone().svd(false, true);
    let sv = &svd.singular_values;
    let dim_tol = 1e-9 * scale.max(1.0);
    let dim = sv.iter().filter(|&&s| s > dim_tol).count();
    let v_t = svd.v_t.expect("svd with v_t");
    let basis: Vec<Vec3> = (0..dim)
        .map(|i| Vec3::new(v_t[(i, 0)], v_t[(i, 1)], v_t[(i, 2)]))
        .collect();

    let mut set = AttainableSet {
        dim,
        vertices: Vec::new(),
        generators: Vec::new(),
        facets: Vec::new(),
        center,
        basis,
        hull2d: Vec::new(),
    };

    match dim {
        0 => {
            set.vertices.push(points[0]);
            set.generators.push(generators[0]);
        }
        1 => {
            // Endpoints along the single spanned direction.
            let axis = set.basis[0];
            let params_1d: Vec<f64> = points.iter().map(|p| (p - center).dot(&axis)).collect();
            let min_idx = argmin(&params_1d);
            let max_idx = argmax(&params_1d);
            for idx in [min_idx, max_idx] {
                set.vertices.push(points[idx]);
                set.generators.push(generators[idx]);
            }
        }
        2 => {
            let plane: Vec<(f64, f64)> = points
                .iter()
                .map(|p| {
                    let d = p - center;
                    (d.dot(&set.basis[0]), d.dot(&set.basis[1]))
                })
                .collect();
            let hull = convex_hull_2d(&plane);
            for &(x, y) in &hull {
                let idx = plane
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        dist2(**a, (x, y)).partial_cmp(&dist2(**b, (x, y))).unwrap()
                    })
                    .map(|(i, _)| i)
                    .unwrap();
                set.vertices.push(points[idx]);
                set.generators.push(generators[idx]);
            }
            set.hull2d = hull;
        }
        _ => {
            set.facets = facets_from_points(&points, scale);
            let tol = 1e-7 * scale.max(1.0);
            for (idx, p) in points.iter().enumerate() {
                let incident: Vec<Vec3> = set
                    .facets
                    .iter()
                    .filter(|f| (f.normal.dot(p) - f.offset).abs() <= tol)
                    .map(|f| f.normal)
                    .collect();
                if spans_3d(&incident) {
                    set.vertices.push(*p);
                    set.generators.push(generators[idx]);
                }
            }
        }
    }
    Ok(set)
}

/// All supporting planes of the hull of `points` found by triple
/// enumeration; offsets are tightened to the supporting position so
/// every point satisfies each inequality exactly.
fn facets_from_points(points: &[Vec3], scale: f64) -> Vec<Facet> {
    let tol = 1e-7 * scale.max(1.0);
    let mut facets: Vec<Facet> = Vec::new();
    let mut keys: Vec<(i64, i64, i64)> = Vec::new();
    let n = points.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let normal = (points[j] - points[i]).cross(&(points[k] - points[i]));
                if normal.norm() < 1e-12 * scale * scale {
                    continue;
                }
                let normal = normal.normalize();
                for oriented in [normal, -normal] {
                    let d0 = oriented.dot(&points[i]);
                    if points.iter().any(|p| oriented.dot(p) > d0 + tol) {
                        continue;
                    }
                    let key = (
                        (oriented.x * 1e6).round() as i64,
                        (oriented.y * 1e6).round() as i64,
                        (oriented.z * 1e6).round() as i64,
                    );
                    if keys.contains(&key) {
                        continue;
                    }
                    keys.push(key);
                    // Tighten: the supporting offset is the max projection.
                    let offset = points
                        .iter()
                        .map(|p| oriented.dot(p))
                        .fold(f64::NEG_INFINITY, f64::max);
                    facets.push(Facet {
                        normal: oriented,
                        offset,
                    });
                }
            }
        }
    }
    facets
}

fn spans_3d(normals: &[Vec3]) -> bool {
    for (i, a) in normals.iter().enumerate() {
        for (j, b) in normals.iter().enumerate().skip(i + 1) {
            for c in normals.iter().skip(j + 1) {
                if a.cross(b).dot(c).abs() > 1e-6 {
                    return true;
                }
            }
        }
    }
    false
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(i, _)| i)
        .unwrap()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(i, _)| i)
        .unwrap()
}

/// Monotone-chain convex hull, counter-clockwise, first point not
/// repeated.
pub fn convex_hull_2d(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| dist2(*a, *b) < 1e-24);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// True if `p` lies in the convex polygon `hull` (counter-clockwise,
/// as produced by [`convex_hull_2d`]) within `tol`.
pub fn polygon_contains(hull: &[(f64, f64)], p: (f64, f64), tol: f64) -> bool {
    if hull.len() < 3 {
        return hull.iter().any(|&q| dist2(p, q).sqrt() <= tol)
            || hull.len() == 2 && point_on_segment(hull[0], hull[1], p, tol);
    }
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        // CCW polygon: inside points sit left of every edge.
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let len = dist2(a, b).sqrt().max(1e-30);
        if cross / len < -tol {
            return false;
        }
    }
    true
}

fn point_on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64), tol: f64) -> bool {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    let t = if len2 > 0.0 {
        ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let closest = (a.0 + t * ab.0, a.1 + t * ab.1);
    dist2(p, closest).sqrt() <= tol
}

/// Radius of the largest origin-centered circle inside a CCW convex
/// polygon; zero if the origin is outside or the polygon degenerates.
pub fn inscribed_radius_about_origin(hull: &[(f64, f64)]) -> f64 {
    if hull.len() < 3 {
        return 0.0;
    }
    let mut r = f64::INFINITY;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let edge = (b.0 - a.0, b.1 - a.1);
        let len = (edge.0 * edge.0 + edge.1 * edge.1).sqrt();
        if len < 1e-30 {
            continue;
        }
        // Outward normal of a CCW edge points right of the edge.
        let n = (edge.1 / len, -edge.0 / len);
        let dist = n.0 * a.0 + n.1 * a.1;
        if dist <= 0.0 {
            return 0.0;
        }
        r = r.min(dist);
    }
    if r.is_finite() {
        r
    } else {
        0.0
    }
}
