//! Lattice Green's functions for the cracked plane.
//!
//! Three objects live here:
//!
//! * the symmetric crack operator (the masked five-point stencil with the
//!   directed-bond factor two and zero Dirichlet exterior),
//! * the continuum kernels it is compared against: the homogeneous lattice
//!   Green's difference, the image-sum kernel `g_hat0` built from the
//!   square-root map, and the first-order corrections `g_hat1_m`, `g_hat1_s`,
//! * column solves of the operator against those kernels as boundary data,
//!   plus the remainder diagnostic used to measure how much of the column the
//!   kernels explain.
//!
//! Columns are solved with whatever backend the caller provides; the crate
//! ships a matrix-free PCG backend, and callers with a sparse direct solver
//! can plug it in through [`CrackSolveBackend`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{bond_active, LatticeDomain, ScalarField, Site, STENCIL};
use crate::math;
use crate::predictors::omega;
use crate::solver::{solve_linear_masked, LinearOperator, SolveSettings};

/// The masked lattice operator `(L u)(m) = 2 sum_rho act(m, rho) (u(m) -
/// u(m + rho))`, with `u` extended by zero outside the ball. The factor two
/// comes from counting directed bonds; it makes `L` the exact Hessian of the
/// quadratic bond energy.
pub struct CrackOperator {
    dom: LatticeDomain,
    nbr: [Vec<i64>; 4],
    act: [Vec<bool>; 4],
    diag: ScalarField,
}

impl CrackOperator {
    pub fn new(radius: f64) -> Result<Self> {
        let dom = LatticeDomain::ball(radius)?;
        let n = dom.sites().len();
        let mut nbr = [vec![0i64; n], vec![0i64; n], vec![0i64; n], vec![0i64; n]];
        let mut act = [
            vec![false; n],
            vec![false; n],
            vec![false; n],
            vec![false; n],
        ];
        let mut diag = vec![0.0; n];
        for (i, &m) in dom.sites().iter().enumerate() {
            for (k, &rho) in STENCIL.iter().enumerate() {
                let a = bond_active(m, rho);
                act[k][i] = a;
                nbr[k][i] = match dom.index(m.offset(rho)) {
                    Some(j) => j as i64,
                    None => -1,
                };
                if a {
                    diag[i] += 2.0;
                }
            }
        }
        Ok(Self {
            dom,
            nbr,
            act,
            diag,
        })
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.dom
    }

    /// Streams the nonzeros of `L` as `(row, col, value)`, suitable for
    /// assembling a sparse matrix in a direct solver.
    pub fn for_each_triplet(&self, mut f: impl FnMut(usize, usize, f64)) {
        for i in 0..self.diag.len() {
            f(i, i, self.diag[i]);
            for k in 0..4 {
                if self.act[k][i] && self.nbr[k][i] >= 0 {
                    f(i, self.nbr[k][i] as usize, -2.0);
                }
            }
        }
    }

    /// Right-hand side contribution of Dirichlet data on the exterior: for
    /// every active bond leaving the ball, `2 data(x(q))` folds back onto the
    /// interior endpoint.
    pub fn boundary_rhs(&self, data: impl Fn([f64; 2]) -> f64) -> ScalarField {
        let mut rhs = vec![0.0; self.diag.len()];
        for (i, &m) in self.dom.sites().iter().enumerate() {
            for k in 0..4 {
                if self.act[k][i] && self.nbr[k][i] < 0 {
                    rhs[i] += 2.0 * data(m.offset(STENCIL[k]).x());
                }
            }
        }
        rhs
    }

    /// Infinity norm of `L x - rhs`.
    pub fn residual_inf(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let mut lx = vec![0.0; x.len()];
        self.apply(x, &mut lx);
        let mut worst = 0.0;
        for i in 0..x.len() {
            let r = math::abs(lx[i] - rhs[i]);
            if r > worst {
                worst = r;
            }
        }
        worst
    }
}

impl LinearOperator for CrackOperator {
    fn len(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            let mut v = self.diag[i] * x[i];
            for k in 0..4 {
                if self.act[k][i] && self.nbr[k][i] >= 0 {
                    v -= 2.0 * x[self.nbr[k][i] as usize];
                }
            }
            out[i] = v;
        }
    }

    fn diag(&self) -> ScalarField {
        self.diag.clone()
    }
}

/// Solver strategy for columns of the crack operator. `&mut self` lets
/// implementations cache factorizations across calls.
pub trait CrackSolveBackend {
    fn solve(&mut self, op: &CrackOperator, rhs: &[f64]) -> Result<ScalarField>;
}

/// Matrix-free Jacobi-PCG backend. Always available; a few seconds per column
/// at radius 512, much faster below.
pub struct PcgBackend {
    pub settings: SolveSettings,
}

impl Default for PcgBackend {
    fn default() -> Self {
        Self {
            settings: SolveSettings::linear(),
        }
    }
}

impl CrackSolveBackend for PcgBackend {
    fn solve(&mut self, op: &CrackOperator, rhs: &[f64]) -> Result<ScalarField> {
        solve_linear_masked(op, rhs, &self.settings)
    }
}

/// Difference of lattice Green's values on the uncracked lattice, `G(0) -
/// G(m)`, by midpoint tensor quadrature of `(1 - cos(k . m)) / (4 - 2 cos k1
/// - 2 cos k2)` over the Brillouin zone with `n` points per axis.
pub fn g_hom_diff_n(m: (i32, i32), n: usize) -> f64 {
    let m1 = f64::from(m.0);
    let m2 = f64::from(m.1);
    let step = 2.0 * math::PI / n as f64;
    let mut axis_cos = vec![0.0; n];
    let mut c1 = vec![0.0; n];
    let mut s1 = vec![0.0; n];
    let mut c2 = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    for j in 0..n {
        let k = -math::PI + (j as f64 + 0.5) * step;
        axis_cos[j] = math::cos(k);
        c1[j] = math::cos(k * m1);
        s1[j] = math::sin(k * m1);
        c2[j] = math::cos(k * m2);
        s2[j] = math::sin(k * m2);
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let cos_km = c1[i] * c2[j] - s1[i] * s2[j];
            sum += (1.0 - cos_km) / (4.0 - 2.0 * axis_cos[i] - 2.0 * axis_cos[j]);
        }
    }
    sum / (n * n) as f64
}

/// [`g_hom_diff_n`] at the production resolution.
pub fn g_hom_diff(m: (i32, i32)) -> f64 {
    g_hom_diff_n(m, 2048)
}

fn log_kernel(x: f64, y: f64) -> f64 {
    -math::ln(math::hypot(x, y)) / (4.0 * math::PI)
}

/// Leading continuum kernel for the cracked plane: the free-space log kernel
/// pulled back through the square-root map, plus its image across the branch
/// line. Symmetric in its arguments and invariant under the crack mirror.
pub fn g_hat0(p: [f64; 2], s: [f64; 2]) -> f64 {
    let wp = omega(p);
    let ws = omega(s);
    log_kernel(ws[0] - wp[0], ws[1] - wp[1]) + log_kernel(-ws[0] - wp[0], ws[1] - wp[1])
}

/// Source-side first-order kernel, evaluated on the diagonal.
pub fn g_hat1_s(s: [f64; 2]) -> f64 {
    let r = math::hypot(s[0], s[1]);
    -2.0 * omega(s)[1] / r
}

/// Weight of the field-side correction for a source at `s`. Equals
/// `-g_hat1_s(s) / (4 pi)`.
pub fn c2_coefficient(s: [f64; 2]) -> f64 {
    let r = math::hypot(s[0], s[1]);
    omega(s)[1] / (2.0 * math::PI * r)
}

/// One column of the discrete Green's function.
pub struct GreensColumn {
    pub source: Site,
    pub values: ScalarField,
}

/// Right-hand side of the mirror-odd Green's correction problem: the
/// negative crack-operator image of the analytic branch profile `omega2`,
/// supported near the tip where the mask disagrees with the free lattice.
pub fn g_hat1_m_rhs(op: &CrackOperator) -> ScalarField {
    let dom = op.domain();
    let mut rhs = vec![0.0; dom.sites().len()];
    for (i, &m) in dom.sites().iter().enumerate() {
        let w_m = omega(m.x())[1];
        let mut acc = 0.0;
        for &rho in STENCIL.iter() {
            if bond_active(m, rho) {
                let w_q = omega(m.offset(rho).x())[1];
                acc += 2.0 * (w_m - w_q);
            }
        }
        rhs[i] = -acc;
    }
    rhs
}

/// Field-side correction profile: solves `L g = -L w2` where `w2` is the
/// second component of the square-root map, evaluated analytically on the
/// whole stencil. The solution decays like `r^{-1/2} sin(theta/2)` far from
/// the tip.
pub fn g_hat1_m(
    op: &CrackOperator,
    backend: &mut dyn CrackSolveBackend,
) -> Result<ScalarField> {
    let rhs = g_hat1_m_rhs(op);
    backend.solve(op, &rhs)
}

/// Amplitude of the `r^{-1/2} sin(theta/2)` far field of a lattice profile,
/// by least-squares projection over the annulus `[R/4, R/2]` with the
/// truncation-aware trial `(r^{-1/2} - r^{1/2}/R) sin(theta/2)`.
pub fn far_field_amplitude(dom: &LatticeDomain, field: &[f64], radius: f64) -> f64 {
    let lo = radius / 4.0;
    let hi = radius / 2.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &m) in dom.sites().iter().enumerate() {
        let x = m.x();
        let r = math::hypot(x[0], x[1]);
        if r < lo || r > hi {
            continue;
        }
        let theta = math::atan2(x[1], x[0]);
        let prof = (1.0 / math::sqrt(r) - math::sqrt(r) / radius) * math::sin(0.5 * theta);
        num += prof * field[i];
        den += prof * prof;
    }
    num / den
}

/// Shared state for repeated Green's column solves at one radius: the
/// operator, the field-side correction profile, and its fitted far-field
/// amplitude (used to extend the boundary data beyond the ball).
pub struct CrackGreensContext {
    op: CrackOperator,
    g1m: ScalarField,
    amplitude: f64,
}

impl CrackGreensContext {
    pub fn new(radius: f64, backend: &mut dyn CrackSolveBackend) -> Result<Self> {
        let op = CrackOperator::new(radius)?;
        let g1m = g_hat1_m(&op, backend)?;
        let amplitude = far_field_amplitude(op.domain(), &g1m, radius);
        Ok(Self { op, g1m, amplitude })
    }

    pub fn operator(&self) -> &CrackOperator {
        &self.op
    }

    pub fn g1m(&self) -> &[f64] {
        &self.g1m
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Right-hand side for the column at `source`: a unit mass at the source
    /// (the operator carries the factor two, so this is half the continuum
    /// normalization) plus Dirichlet data `g_hat0 + c2 A r^{-1/2}
    /// sin(theta/2)` folded in from the exterior.
    pub fn column_rhs(&self, source: Site) -> Result<ScalarField> {
        let s_idx = self
            .op
            .domain()
            .index(source)
            .ok_or(Error::SiteOutsideDomain {
                a: source.a,
                b: source.b,
            })?;
        let xs = source.x();
        let c2 = c2_coefficient(xs);
        let a = self.amplitude;
        let mut rhs = self.op.boundary_rhs(|q| {
            let r = math::hypot(q[0], q[1]);
            let theta = math::atan2(q[1], q[0]);
            g_hat0(q, xs) + c2 * a / math::sqrt(r) * math::sin(0.5 * theta)
        });
        rhs[s_idx] += 1.0;
        Ok(rhs)
    }

    pub fn column(
        &self,
        backend: &mut dyn CrackSolveBackend,
        source: Site,
    ) -> Result<GreensColumn> {
        let rhs = self.column_rhs(source)?;
        let values = backend.solve(&self.op, &rhs)?;
        Ok(GreensColumn { source, values })
    }
}

/// One-off column solve; builds the context and throws it away. Prefer
/// [`CrackGreensContext`] when several columns share a radius.
pub fn solve_crack_green(
    radius: f64,
    backend: &mut dyn CrackSolveBackend,
    source: Site,
) -> Result<GreensColumn> {
    let ctx = CrackGreensContext::new(radius, backend)?;
    ctx.column(backend, source)
}

/// Quintic cutoff: one below `lo`, zero above `hi`, with two continuous
/// derivatives at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    pub lo: f64,
    pub hi: f64,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self { lo: 0.5, hi: 1.0 }
    }
}

impl CutoffProfile {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.lo {
            1.0
        } else if t >= self.hi {
            0.0
        } else {
            let u = (t - self.lo) / (self.hi - self.lo);
            1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
        }
    }
}

/// Cutoff weight of the field-side correction: the quintic profile in the
/// scale-split variable `|x_m| / sqrt(|x_s|)`.
pub fn mu_cutoff(x_m: [f64; 2], x_s: [f64; 2]) -> f64 {
    let r_m = math::hypot(x_m[0], x_m[1]);
    let r_s = math::hypot(x_s[0], x_s[1]);
    CutoffProfile::default().eval(r_m / math::sqrt(r_s))
}

/// Outcome of the second-difference remainder probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gbar1Report {
    pub source: Site,
    /// Whether the field-side correction was subtracted before probing.
    pub corrected: bool,
    /// Weighted maximum of the mixed second difference over the probe ball.
    pub stat: f64,
    /// Number of bonds probed.
    pub probes: usize,
}

fn gbar_value(
    ctx: &CrackGreensContext,
    col: &GreensColumn,
    idx: usize,
    site: Site,
    corrected: bool,
    profile: &CutoffProfile,
) -> f64 {
    let x = site.x();
    let xs = col.source.x();
    let mut v = col.values[idx] - g_hat0(x, xs);
    if corrected {
        let r = math::hypot(x[0], x[1]);
        let rs = math::hypot(xs[0], xs[1]);
        let eta = profile.eval(r / math::sqrt(rs));
        v -= eta * c2_coefficient(xs) * ctx.g1m[idx];
    }
    v
}

/// Probes how well the kernels explain a Green's column near the tip.
///
/// Takes the remainder `gbar = G(., s) - g_hat0(., s)` (minus the cutoff
/// field-side correction when `corrected`), forms the mixed second difference
/// in the source across `s` and `s + e2` and in the field across each lattice
/// bond inside the ball `|x| <= |x_s|/16`, and returns the maximum weighted
/// by `sqrt(|x|)` at the bond base. The source must be far enough out that
/// the probe ball has a few shells in it.
pub fn gbar1_diagnostic(
    ctx: &CrackGreensContext,
    backend: &mut dyn CrackSolveBackend,
    source: Site,
    corrected: bool,
) -> Result<Gbar1Report> {
    let xs = source.x();
    let r_s = math::hypot(xs[0], xs[1]);
    let ball = r_s / 16.0;
    if ball < 8.0 {
        return Err(Error::ProbeBallTooSmall { source_norm: r_s });
    }
    let shifted = Site {
        a: source.a,
        b: source.b + 1,
    };
    let col0 = ctx.column(backend, source)?;
    let col1 = ctx.column(backend, shifted)?;
    let profile = CutoffProfile::default();

    let dom = ctx.op.domain();
    let mut stat = 0.0;
    let mut probes = 0usize;
    for (i, &p) in dom.sites().iter().enumerate() {
        let xp = p.x();
        let r_p = math::hypot(xp[0], xp[1]);
        if r_p > ball {
            continue;
        }
        for &dir in &[STENCIL[0], STENCIL[2]] {
            if !bond_active(p, dir) {
                continue;
            }
            let q = p.offset(dir);
            let Some(j) = dom.index(q) else { continue };
            let d1 = gbar_value(ctx, &col1, j, q, corrected, &profile)
                - gbar_value(ctx, &col1, i, p, corrected, &profile);
            let d0 = gbar_value(ctx, &col0, j, q, corrected, &profile)
                - gbar_value(ctx, &col0, i, p, corrected, &profile);
            let dd = math::abs(d1 - d0) * math::sqrt(r_p);
            if dd > stat {
                stat = dd;
            }
            probes += 1;
        }
    }
    Ok(Gbar1Report {
        source,
        corrected,
        stat,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::mirror;

    #[test]
    fn quadrature_hits_first_neighbor_value() {
        // The first-neighbor difference is exactly 1/4 by symmetry.
        let v = g_hom_diff((1, 0));
        assert!((v - 0.25).abs() <= 1e-12, "got {v}");
    }

    #[test]
    fn g_hat0_is_symmetric_and_mirror_invariant() {
        let pairs = [
            ([2.5, 1.5], [-3.5, 4.5]),
            ([0.5, -0.5], [6.5, 2.5]),
            ([-1.5, -2.5], [3.5, -0.5]),
        ];
        for &(p, s) in &pairs {
            let v = g_hat0(p, s);
            assert!((v - g_hat0(s, p)).abs() <= 1e-14);
            let pm = [p[0], -p[1]];
            let sm = [s[0], -s[1]];
            assert!((v - g_hat0(pm, sm)).abs() <= 1e-14);
        }
    }

    #[test]
    fn operator_diagonal_reflects_the_mask() {
        let op = CrackOperator::new(8.0).unwrap();
        let dom = op.domain();
        let at = |a, b| op.diag[dom.index(Site { a, b }).unwrap()];
        assert_eq!(at(3, 2), 8.0, "interior site has four active bonds");
        assert_eq!(at(-1, 1), 6.0, "upper face loses the downward bond");
        assert_eq!(at(-1, 0), 6.0, "lower face loses the upward bond");
        assert_eq!(at(1, 1), 8.0, "ahead of the tip nothing is cut");
    }

    #[test]
    fn boundary_rhs_counts_exterior_bonds() {
        let op = CrackOperator::new(6.0).unwrap();
        let rhs = op.boundary_rhs(|_| 1.0);
        for i in 0..op.len() {
            let mut interior = 0.0;
            for k in 0..4 {
                if op.act[k][i] && op.nbr[k][i] >= 0 {
                    interior += 2.0;
                }
            }
            assert_eq!(rhs[i], op.diag[i] - interior);
        }
    }

    #[test]
    fn triplets_reassemble_apply() {
        let op = CrackOperator::new(7.0).unwrap();
        let n = op.len();
        let x: Vec<f64> = (0..n).map(|i| math::sin(i as f64 * 0.7)).collect();
        let mut dense = vec![0.0; n];
        op.for_each_triplet(|i, j, v| dense[i] += v * x[j]);
        let mut out = vec![0.0; n];
        op.apply(&x, &mut out);
        for i in 0..n {
            assert!((dense[i] - out[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn column_solve_has_small_residual_and_mirror_symmetry() {
        let mut backend = PcgBackend::default();
        let ctx = CrackGreensContext::new(16.0, &mut backend).unwrap();
        let s = Site { a: 4, b: 3 };
        let col = ctx.column(&mut backend, s).unwrap();
        let rhs = ctx.column_rhs(s).unwrap();
        assert!(ctx.op.residual_inf(&col.values, &rhs) <= 1e-8);

        // Mirroring source and field site together is a symmetry of the
        // operator and of the boundary data.
        let col_m = ctx.column(&mut backend, mirror(s)).unwrap();
        let dom = ctx.op.domain();
        for &m in &[Site { a: 2, b: 2 }, Site { a: -3, b: 1 }, Site { a: 0, b: -4 }] {
            let v = col.values[dom.index(m).unwrap()];
            let vm = col_m.values[dom.index(mirror(m)).unwrap()];
            assert!((v - vm).abs() <= 1e-7, "at {m:?}: {v} vs {vm}");
        }
    }

    #[test]
    fn g1m_profile_is_mirror_odd() {
        let mut backend = PcgBackend::default();
        let op = CrackOperator::new(16.0).unwrap();
        let g1m = g_hat1_m(&op, &mut backend).unwrap();
        let dom = op.domain();
        for &m in &[Site { a: 3, b: 4 }, Site { a: -2, b: 2 }, Site { a: 5, b: -1 }] {
            let v = g1m[dom.index(m).unwrap()];
            let vm = g1m[dom.index(mirror(m)).unwrap()];
            assert!((v + vm).abs() <= 1e-7, "at {m:?}: {v} vs {vm}");
        }
    }

    #[test]
    fn cutoff_profile_interpolates_quintically() {
        let eta = CutoffProfile::default();
        assert_eq!(eta.eval(0.2), 1.0);
        assert_eq!(eta.eval(0.5), 1.0);
        assert_eq!(eta.eval(1.0), 0.0);
        assert_eq!(eta.eval(1.4), 0.0);
        assert!((eta.eval(0.75) - 0.5).abs() <= 1e-15, "odd about midpoint");
        let mut prev = 1.0;
        for k in 1..=20 {
            let v = eta.eval(0.5 + 0.025 * k as f64);
            assert!(v <= prev + 1e-15, "monotone");
            prev = v;
        }
    }

    #[test]
    fn c2_matches_source_kernel_normalization() {
        for &s in &[[4.5, 2.5], [-3.5, 6.5], [0.5, -8.5]] {
            let lhs = c2_coefficient(s);
            let rhs = -g_hat1_s(s) / (4.0 * math::PI);
            assert!((lhs - rhs).abs() <= 1e-15);
        }
    }

    #[test]
    fn probe_ball_precondition_is_enforced() {
        let mut backend = PcgBackend::default();
        let ctx = CrackGreensContext::new(16.0, &mut backend).unwrap();
        let err = gbar1_diagnostic(&ctx, &mut backend, Site { a: 0, b: 9 }, true);
        let err = match err {
            Err(e) => e,
            Ok(_) => panic!("expected rejection"),
        };
        assert!(matches!(err, Error::ProbeBallTooSmall { .. }));
    }
}
