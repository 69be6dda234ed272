//! Offset square lattice with a half-line crack, and the masked discrete calculus.
//!
//! Sites are integer pairs `(a, b)`; the physical position carries the
//! `(-1/2, -1/2)` offset so the crack tip at the origin lies between sites.
//! The crack occupies the negative `x1` axis: bonds between the row just above
//! (`b = 1, a <= 0`) and the row just below (`b = 0, a <= 0`) are inactive.
//! Gradient and divergence run over directed nearest-neighbour bonds with the
//! inactive ones masked out; they are exact adjoints under summation by parts,
//! which is what every energy identity downstream relies on.
//!
//! Directed bonds count every undirected bond twice, so the composite operator
//! `-Div D` equals twice the standard five-point Laplacian on interior sites.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Lattice site `(a, b)` with physical position `(a - 1/2, b - 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Site {
    pub a: i32,
    pub b: i32,
}

impl Site {
    pub fn new(a: i32, b: i32) -> Self {
        Self { a, b }
    }

    /// Physical position of the site.
    #[inline]
    pub fn x(self) -> [f64; 2] {
        [self.a as f64 - 0.5, self.b as f64 - 0.5]
    }

    /// Distance from the crack tip (the coordinate origin).
    #[inline]
    pub fn r(self) -> f64 {
        let [x1, x2] = self.x();
        math::hypot(x1, x2)
    }

    /// Polar angle in `(-pi, pi)` with the branch cut on the crack line.
    #[inline]
    pub fn theta(self) -> f64 {
        let [x1, x2] = self.x();
        math::atan2(x2, x1)
    }

    /// Site shifted by a stencil direction.
    #[inline]
    pub fn offset(self, rho: (i32, i32)) -> Self {
        Self {
            a: self.a + rho.0,
            b: self.b + rho.1,
        }
    }

    /// True on the upper crack face (`b = 1, a <= 0`).
    #[inline]
    pub fn on_upper_face(self) -> bool {
        self.b == 1 && self.a <= 0
    }

    /// True on the lower crack face (`b = 0, a <= 0`).
    #[inline]
    pub fn on_lower_face(self) -> bool {
        self.b == 0 && self.a <= 0
    }
}

/// The four nearest-neighbour directions, in a fixed order used by all
/// per-direction arrays.
pub const STENCIL: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Nearest neighbours of a site, in [`STENCIL`] order.
pub fn stencil(m: Site) -> [Site; 4] {
    [
        m.offset(STENCIL[0]),
        m.offset(STENCIL[1]),
        m.offset(STENCIL[2]),
        m.offset(STENCIL[3]),
    ]
}

/// Mirror conjugation across the crack line: `(a, b) -> (a, 1 - b)`, i.e.
/// `x2 -> -x2` in physical coordinates. An involution that maps the lattice
/// and the bond mask onto themselves.
#[inline]
pub fn mirror(m: Site) -> Site {
    Site::new(m.a, 1 - m.b)
}

/// Whether the directed bond `(m, rho)` is active (not removed by the crack).
///
/// A bond is inactive exactly when it connects the two crack faces: leaving
/// the upper face downwards, or the lower face upwards. Both orientations of
/// a cut bond are inactive, so the mask is orientation-symmetric.
#[inline]
pub fn bond_active(m: Site, rho: (i32, i32)) -> bool {
    !(m.on_upper_face() && rho == (0, -1)) && !(m.on_lower_face() && rho == (0, 1))
}

/// Scalar field over the sites of a domain, indexed like the domain.
pub type ScalarField = Vec<f64>;

/// Field on directed bonds: one value per site per [`STENCIL`] direction.
pub type BondField = [Vec<f64>; 4];

#[derive(Debug, Clone)]
struct Row {
    a_lo: i32,
    a_hi: i32,
    offset: usize,
}

/// Finite ball `{ m : |x(m)| <= radius }` of the cracked lattice, with O(1)
/// site indexing via per-row ranges. Site order is row-major: `b` ascending,
/// then `a` ascending.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    radius: f64,
    b_min: i32,
    rows: Vec<Row>,
    sites: Vec<Site>,
}

impl LatticeDomain {
    /// Builds the ball of the given radius. Fails if it contains no sites
    /// (radius below `1/sqrt(2)`).
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || radius * radius < 0.5 {
            return Err(Error::RadiusTooSmall(radius));
        }
        // Row b intersects the ball when |b - 1/2| <= radius.
        let b_min = math::floor(0.5 - radius) as i32 + 1;
        let b_max = math::floor(0.5 + radius) as i32;
        let mut rows = Vec::with_capacity((b_max - b_min + 1) as usize);
        let mut sites = Vec::new();
        for b in b_min..=b_max {
            let y = b as f64 - 0.5;
            let half = math::sqrt((radius * radius - y * y).max(0.0));
            // Rows tangent to the ball can be empty (a_lo > a_hi); keep the
            // entry so row lookup by b stays a plain offset.
            let a_lo = math::floor(0.5 - half) as i32 + 1;
            let a_hi = math::floor(0.5 + half) as i32;
            rows.push(Row {
                a_lo,
                a_hi,
                offset: sites.len(),
            });
            for a in a_lo..=a_hi {
                sites.push(Site::new(a, b));
            }
        }
        Ok(Self {
            radius,
            b_min,
            rows,
            sites,
        })
    }

    /// Ball radius used to build the domain.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Site at a given index.
    #[inline]
    pub fn site(&self, idx: usize) -> Site {
        self.sites[idx]
    }

    /// All sites in domain order.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    /// Index of a site, if it lies in the domain.
    #[inline]
    pub fn index(&self, m: Site) -> Option<usize> {
        let rb = m.b - self.b_min;
        if rb < 0 || rb as usize >= self.rows.len() {
            return None;
        }
        let row = &self.rows[rb as usize];
        if m.a < row.a_lo || m.a > row.a_hi {
            return None;
        }
        Some(row.offset + (m.a - row.a_lo) as usize)
    }

    #[inline]
    pub fn contains(&self, m: Site) -> bool {
        self.index(m).is_some()
    }

    /// Zero field over the domain.
    pub fn zeros(&self) -> ScalarField {
        vec![0.0; self.len()]
    }

    /// Zero bond field over the domain.
    pub fn zero_bonds(&self) -> BondField {
        [self.zeros(), self.zeros(), self.zeros(), self.zeros()]
    }
}

/// Ordered list of sites with `|x(m)| <= radius`.
pub fn sites_in_ball(radius: f64) -> Result<Vec<Site>> {
    Ok(LatticeDomain::ball(radius)?.sites.clone())
}

/// Masked discrete gradient with zero exterior values:
/// `(D u)(m, rho) = u(m + rho) - u(m)` on active bonds, `0` on inactive ones,
/// with `u = 0` outside the domain.
pub fn grad(dom: &LatticeDomain, u: &[f64]) -> BondField {
    grad_with_exterior(dom, u, |_| 0.0)
}

/// Masked discrete gradient with exterior values supplied by a closure
/// (used to clamp predictors outside the computational ball).
pub fn grad_with_exterior(
    dom: &LatticeDomain,
    u: &[f64],
    exterior: impl Fn(Site) -> f64,
) -> BondField {
    assert_eq!(u.len(), dom.len());
    let mut out = dom.zero_bonds();
    for (i, &m) in dom.sites().iter().enumerate() {
        for (k, &rho) in STENCIL.iter().enumerate() {
            if !bond_active(m, rho) {
                continue;
            }
            let q = m.offset(rho);
            let uq = match dom.index(q) {
                Some(j) => u[j],
                None => exterior(q),
            };
            out[k][i] = uq - u[i];
        }
    }
    out
}

/// Masked discrete divergence, the negated adjoint of [`grad`] under
/// summation by parts: `<D u, g> = -<u, Div g>` for fields supported on the
/// domain with zero exterior.
pub fn divergence(dom: &LatticeDomain, g: &BondField) -> ScalarField {
    let mut out = dom.zeros();
    for (i, &m) in dom.sites().iter().enumerate() {
        for (k, &rho) in STENCIL.iter().enumerate() {
            if bond_active(m, rho) {
                out[i] += g[k][i];
            }
            // Incoming bond from m - rho along rho.
            let p = m.offset((-rho.0, -rho.1));
            if bond_active(p, rho) {
                if let Some(j) = dom.index(p) {
                    out[i] -= g[k][j];
                }
            }
        }
    }
    out
}

/// Applies `-Div D`, the masked lattice operator with zero Dirichlet
/// exterior: `2 * sum_rho_active (u(m) - u(m + rho))` with `u = 0` outside
/// the domain. The factor two comes from directed bonds counting each
/// undirected bond once per orientation; on interior sites this is twice the
/// standard five-point Laplacian.
pub fn neg_div_grad(dom: &LatticeDomain, u: &[f64]) -> ScalarField {
    assert_eq!(u.len(), dom.len());
    let mut out = dom.zeros();
    for (i, &m) in dom.sites().iter().enumerate() {
        let mut acc = 0.0;
        for &rho in STENCIL.iter() {
            if !bond_active(m, rho) {
                continue;
            }
            let uq = dom.index(m.offset(rho)).map_or(0.0, |j| u[j]);
            acc += u[i] - uq;
        }
        out[i] = 2.0 * acc;
    }
    out
}

/// Pulls a field back through the mirror conjugation:
/// `out(m) = u(mirror(m))`. Requires the domain to be mirror-closed, which
/// every ball is.
pub fn mirror_field(dom: &LatticeDomain, u: &[f64]) -> ScalarField {
    let mut out = dom.zeros();
    for (i, &m) in dom.sites().iter().enumerate() {
        let j = dom
            .index(mirror(m))
            .expect("ball domains are mirror-closed");
        out[i] = u[j];
    }
    out
}
