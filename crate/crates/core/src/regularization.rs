//! Cut-off `chi_eps` and the source fields of the regularized system.

use alloc::vec;
use alloc::vec::Vec;

use crate::elliptic::{Helmholtz, SturmLiouville};
use crate::grid::{Grid, Mode};
use crate::kinematics::{FlowState, Params};
use crate::{Error, Result};

/// `(zeta + 1/eps)^2` for `zeta <= -1/eps`, zero otherwise. Zero for
/// `eps = 0`.
pub fn chi(zeta: f64, epsilon: f64) -> f64 {
    if epsilon <= 0.0 {
        return 0.0;
    }
    let s = zeta + 1.0 / epsilon;
    if s < 0.0 {
        s * s
    } else {
        0.0
    }
}

pub fn chi_field(z: &[f64], epsilon: f64) -> Vec<f64> {
    z.iter().map(|&v| chi(v, epsilon)).collect()
}

/// Whether any sample of `P` or `Q` lies below `-1/eps`.
pub fn cutoff_active(pp: &[f64], qq: &[f64], epsilon: f64) -> bool {
    epsilon > 0.0 && pp.iter().chain(qq).any(|&v| v < -1.0 / epsilon)
}

/// Energy production density `(P chi(P) + Q chi(Q)) / 48`; never positive.
pub fn production_density(pp: &[f64], qq: &[f64], chi_p: &[f64], chi_q: &[f64]) -> Vec<f64> {
    (0..pp.len()).map(|i| (pp[i] * chi_p[i] + qq[i] * chi_q[i]) / 48.0).collect()
}

/// All source and auxiliary fields of the regularized system at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct RegFields {
    pub a: Vec<f64>,
    pub a_x: Vec<f64>,
    pub b: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub chi_p: Vec<f64>,
    pub chi_q: Vec<f64>,
}

impl RegFields {
    pub fn zeros(n: usize) -> Self {
        RegFields {
            a: vec![0.0; n],
            a_x: vec![0.0; n],
            b: vec![0.0; n],
            v1: vec![0.0; n],
            v2: vec![0.0; n],
            chi_p: vec![0.0; n],
            chi_q: vec![0.0; n],
        }
    }
}

/// `A = (g - gamma d^2)^{-1} [ sqrt(3 gamma) / (48 h^{1/2}) (chi(P) - chi(Q)) ]`
/// and its derivative.
pub fn compute_a(
    h: &[f64],
    chi_p: &[f64],
    chi_q: &[f64],
    p: &Params,
    grid: &Grid,
    helm: &Helmholtz,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = p.s3g() / 48.0;
    let rhs: Vec<f64> =
        (0..h.len()).map(|i| c / libm::sqrt(h[i]) * (chi_p[i] - chi_q[i])).collect();
    let a = helm.solve(&rhs)?;
    let a_x = grid.derivative_far(&a, 0.0)?;
    Ok((a, a_x))
}

/// `V2 = (3 g / sqrt(3 gamma)) h^{-1/2} A`.
pub fn compute_v2(h: &[f64], a: &[f64], p: &Params) -> Vec<f64> {
    let c = 3.0 * p.g / p.s3g();
    h.iter().zip(a).map(|(h, a)| c * a / libm::sqrt(*h)).collect()
}

/// `V1 = (h/2) d/dx L^{-1} { -u A_x + h int_{-inf}^x [3 u_x A_x / h - (chi(P)+chi(Q)) / (8 h^2)] }`.
///
/// The integral does not vanish at the right end, so the inverse uses the
/// far-field limit of the bracket. Line grids only.
pub fn compute_v1(
    s: &FlowState,
    ux: &[f64],
    a_x: &[f64],
    chi_p: &[f64],
    chi_q: &[f64],
    grid: &Grid,
    op: &SturmLiouville,
) -> Result<Vec<f64>> {
    let h = &s.h;
    let n = h.len();
    let integrand: Vec<f64> = (0..n)
        .map(|i| 3.0 * ux[i] * a_x[i] / h[i] - (chi_p[i] + chi_q[i]) / (8.0 * h[i] * h[i]))
        .collect();
    if grid.mode() != Mode::Line {
        if integrand.iter().all(|&v| v == 0.0) && a_x.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; n]);
        }
        return Err(Error::WrongMode { op: "compute_v1" });
    }
    let cum = grid.cumulative_integral(&integrand)?;
    let bracket: Vec<f64> = (0..n).map(|i| -s.u[i] * a_x[i] + h[i] * cum[i]).collect();
    let w = op.solve_with_limits(&bracket)?;
    let wx = grid.derivative(&w)?;
    Ok((0..n).map(|i| 0.5 * h[i] * wx[i]).collect())
}

/// `B = L^{-1} { -u A_x / 2 + d/dx [ h^2 u_x A_x / 2 - h (chi(P)+chi(Q)) / 48 ] }`.
pub fn compute_b(
    s: &FlowState,
    ux: &[f64],
    a_x: &[f64],
    chi_p: &[f64],
    chi_q: &[f64],
    grid: &Grid,
    op: &SturmLiouville,
) -> Result<Vec<f64>> {
    let h = &s.h;
    let n = h.len();
    let flux: Vec<f64> = (0..n)
        .map(|i| 0.5 * h[i] * h[i] * ux[i] * a_x[i] - h[i] * (chi_p[i] + chi_q[i]) / 48.0)
        .collect();
    let d = grid.derivative_far(&flux, 0.0)?;
    let rhs: Vec<f64> = (0..n).map(|i| -0.5 * s.u[i] * a_x[i] + d[i]).collect();
    op.solve(&rhs)
}

/// `M = -3 h^{-2} R + V1 - V2`, `N = -3 h^{-2} R + V1 + V2`.
pub fn compute_mn(h: &[f64], script_r: &[f64], v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let base: Vec<f64> = (0..h.len()).map(|i| -3.0 * script_r[i] / (h[i] * h[i]) + v1[i]).collect();
    let m = (0..h.len()).map(|i| base[i] - v2[i]).collect();
    let nn = (0..h.len()).map(|i| base[i] + v2[i]).collect();
    (m, nn)
}

/// The sources `A`, `A_x`, `B` and the cut-off fields, skipping everything
/// when no sample is below `-1/eps`. `V1`, `V2` are left at zero; see
/// [`reg_fields`] for the full set.
pub(crate) fn sources(
    s: &FlowState,
    pp: &[f64],
    qq: &[f64],
    ux: &[f64],
    p: &Params,
    grid: &Grid,
    helm: &Helmholtz,
    op: &SturmLiouville,
) -> Result<Option<RegFields>> {
    if !cutoff_active(pp, qq, p.epsilon) {
        return Ok(None);
    }
    if grid.mode() != Mode::Line {
        return Err(Error::WrongMode { op: "regularized dynamics" });
    }
    let n = s.h.len();
    let chi_p = chi_field(pp, p.epsilon);
    let chi_q = chi_field(qq, p.epsilon);
    let (a, a_x) = compute_a(&s.h, &chi_p, &chi_q, p, grid, helm)?;
    let b = compute_b(s, ux, &a_x, &chi_p, &chi_q, grid, op)?;
    Ok(Some(RegFields { a, a_x, b, v1: vec![0.0; n], v2: vec![0.0; n], chi_p, chi_q }))
}

/// Every regularization field at `s`. All zero when the cut-off is idle.
pub fn reg_fields(s: &FlowState, p: &Params, grid: &Grid) -> Result<RegFields> {
    let (hx, ux) = crate::kinematics::gradients(s, p, grid)?;
    let (pp, qq) = crate::kinematics::pq_from_gradients(&s.h, &hx, &ux, p);
    let helm = Helmholtz::new(p, grid)?;
    let op = SturmLiouville::new(&s.h, grid, p.hbar)?;
    match sources(s, &pp, &qq, &ux, p, grid, &helm, &op)? {
        None => Ok(RegFields::zeros(grid.n())),
        Some(mut r) => {
            r.v2 = compute_v2(&s.h, &r.a, p);
            r.v1 = compute_v1(s, &ux, &r.a_x, &r.chi_p, &r.chi_q, grid, &op)?;
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::max_abs;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn chi_by_hand() {
        assert_eq!(chi(-1.0, 0.5), 0.0);
        assert_eq!(chi(-3.0, 0.5), 1.0);
        assert_eq!(chi(-2.0, 0.5), 0.0);
        assert_eq!(chi(-100.0, 0.0), 0.0);
        // C^1 at the threshold: one-sided difference quotients both vanish.
        let e = 1e-7;
        assert!(chi(-2.0 - e, 0.5) / e < 1e-6);
    }

    fn steep_state(grid: &Grid, amp: f64) -> FlowState {
        let h = grid.sample(|x| 1.0 + amp * libm::exp(-x * x));
        let u = grid.sample(|x| -amp * 4.0 * libm::tanh(3.0 * x) * libm::exp(-x * x));
        FlowState::new(h, u, 0.0)
    }

    fn line(n: usize, l: f64) -> Grid {
        Grid::with_length(n, l, -l / 2.0, Mode::Line).unwrap()
    }

    #[test]
    fn idle_cutoff_gives_zero_fields() {
        let g = line(256, 30.0);
        let p = Params::new(9.81, 1.0, 1.0, 0.01).unwrap();
        let r = reg_fields(&steep_state(&g, 0.05), &p, &g).unwrap();
        assert_eq!(r, RegFields::zeros(256));
        let (m, n) = compute_mn(&[1.0, 2.0], &[0.5, -0.5], &[0.0; 2], &[0.0; 2]);
        assert_eq!(m, alloc::vec![-1.5, 0.375]);
        assert_eq!(m, n);
    }

    #[test]
    fn active_cutoff_fields_are_finite_and_decay() {
        let g = line(512, 40.0);
        let p = Params::new(9.81, 1.0, 1.0, 0.5).unwrap();
        let s = steep_state(&g, 0.3);
        let r = reg_fields(&s, &p, &g).unwrap();
        assert!(max_abs(&r.chi_p) + max_abs(&r.chi_q) > 0.0);
        for f in [&r.a, &r.a_x, &r.b, &r.v1, &r.v2] {
            assert!(f.iter().all(|v| v.is_finite()));
        }
        let peak = max_abs(&r.v1);
        assert!(peak > 0.0);
        assert!(r.v1[0].abs() <= 1e-6 * peak && r.v1[511].abs() <= 1e-6 * peak);
        let (m, n) = compute_mn(&s.h, &vec![0.0; 512], &r.v1, &r.v2);
        for i in 0..512 {
            assert_abs_diff_eq!(n[i] - m[i], 2.0 * r.v2[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn a_is_odd_for_odd_forcing_and_even_depth() {
        let g = line(400, 40.0);
        let p = Params::new(9.81, 2.0, 1.0, 0.1).unwrap();
        let h = g.sample(|x| 1.0 + 0.1 * libm::exp(-x * x));
        let cp = g.sample(|x| if x > 0.0 { libm::exp(-(x - 2.0) * (x - 2.0)) } else { 0.0 });
        let cq: Vec<f64> = cp.iter().rev().copied().collect();
        let helm = Helmholtz::new(&p, &g).unwrap();
        let (a, _) = compute_a(&h, &cp, &cq, &p, &g, &helm).unwrap();
        for i in 0..200 {
            assert!((a[i] + a[399 - i]).abs() <= 1e-10 * max_abs(&a));
        }
        // Bracket equal to a manufactured rhs reproduces the Helmholtz solve.
        let rhs: Vec<f64> =
            (0..400).map(|i| p.s3g() / 48.0 / libm::sqrt(h[i]) * (cp[i] - cq[i])).collect();
        assert_eq!(a, helm.solve(&rhs).unwrap());
    }

    /// Green's function of `g - gamma d^2` on the line.
    fn green(x: f64, p: &Params) -> f64 {
        libm::exp(-libm::sqrt(p.g / p.gamma) * x.abs()) / (2.0 * libm::sqrt(p.g * p.gamma))
    }

    /// Kernel `exp(-(g/gamma)|x|) / (2 gamma)` as printed next to the
    /// definition of the regularizing source.
    fn printed_kernel(x: f64, p: &Params) -> f64 {
        libm::exp(-(p.g / p.gamma) * x.abs()) / (2.0 * p.gamma)
    }

    fn v2_two_ways(p: &Params, kernel: fn(f64, &Params) -> f64) -> f64 {
        let g = line(800, 40.0);
        let h = g.sample(|x| 1.0 + 0.1 * libm::exp(-x * x));
        let cp = g.sample(|x| libm::exp(-(x - 1.0) * (x - 1.0) * 4.0));
        let cq = g.sample(|x| 0.5 * libm::exp(-(x + 1.0) * (x + 1.0) * 4.0));
        let helm = Helmholtz::new(p, &g).unwrap();
        let (a, _) = compute_a(&h, &cp, &cq, p, &g, &helm).unwrap();
        let v2 = compute_v2(&h, &a, p);
        let f: Vec<f64> = (0..800).map(|i| (cp[i] - cq[i]) / libm::sqrt(h[i])).collect();
        let mut worst: f64 = 0.0;
        for i in 300..500 {
            let conv: f64 = (0..800).map(|j| kernel(g.x(i) - g.x(j), p) * f[j] * g.dx()).sum();
            let alt = p.g / 16.0 / libm::sqrt(h[i]) * conv;
            worst = worst.max((alt - v2[i]).abs() / max_abs(&v2));
        }
        worst
    }

    #[test]
    fn v2_two_expressions_agree() {
        // (g/16) h^{-1/2} (g - gamma d^2)^{-1} { h^{-1/2} (chi(P) - chi(Q)) }
        // against (3 g / sqrt(3 gamma)) h^{-1/2} A.
        let g = line(800, 40.0);
        for (gg, gamma) in [(9.81, 9.81), (9.81, 1.0), (2.0, 5.0)] {
            let p = Params::new(gg, gamma, 1.0, 0.1).unwrap();
            let h = g.sample(|x| 1.0 + 0.1 * libm::exp(-x * x));
            let cp = g.sample(|x| libm::exp(-(x - 1.0) * (x - 1.0) * 4.0));
            let cq = g.sample(|x| 0.5 * libm::exp(-(x + 1.0) * (x + 1.0) * 4.0));
            let helm = Helmholtz::new(&p, &g).unwrap();
            let (a, _) = compute_a(&h, &cp, &cq, &p, &g, &helm).unwrap();
            let v2 = compute_v2(&h, &a, &p);
            let f: Vec<f64> = (0..800).map(|i| (cp[i] - cq[i]) / libm::sqrt(h[i])).collect();
            let inner = helm.solve(&f).unwrap();
            for i in 0..800 {
                let alt = p.g / 16.0 / libm::sqrt(h[i]) * inner[i];
                assert!((alt - v2[i]).abs() <= 1e-9 * max_abs(&v2));
            }
        }
    }

    #[test]
    fn helmholtz_kernel_normalization() {
        for (g, gamma) in [(9.81, 9.81), (9.81, 1.0), (2.0, 5.0)] {
            let p = Params::new(g, gamma, 1.0, 0.1).unwrap();
            let w = v2_two_ways(&p, green);
            assert!(w < 1e-2, "{g} {gamma}: {w}");
        }
        // The printed kernel only coincides with the Green's function when
        // g = gamma.
        let same = Params::new(9.81, 9.81, 1.0, 0.1).unwrap();
        assert!(v2_two_ways(&same, printed_kernel) < 1e-2);
        let differ = Params::new(9.81, 1.0, 1.0, 0.1).unwrap();
        assert!(v2_two_ways(&differ, printed_kernel) > 0.1);
    }

    #[test]
    fn v1_self_converges() {
        let p = Params::new(9.81, 1.0, 1.0, 0.5).unwrap();
        let at = |n: usize| {
            let g = line(n, 30.0);
            let s = steep_state(&g, 0.3);
            let r = reg_fields(&s, &p, &g).unwrap();
            (g, r)
        };
        // Factor-3 refinement keeps coarse centers on fine centers.
        let (_, r1) = at(243);
        let (_, r2) = at(729);
        let (_, r3) = at(2187);
        let diff = |a: &[f64], b: &[f64]| {
            (0..a.len()).map(|i| (a[i] - b[3 * i + 1]).abs()).fold(0.0, f64::max)
        };
        for (a, b, c) in [(&r1.v1, &r2.v1, &r3.v1), (&r1.b, &r2.b, &r3.b)] {
            let e1 = diff(a, b);
            let e2 = diff(b, c);
            let order = libm::log(e1 / e2) / libm::log(3.0);
            assert!(order >= 1.5, "order {order}");
        }
    }

    proptest! {
        #[test]
        fn chi_bounds(z in -1e3f64..1e3, eps in 1e-3f64..10.0) {
            let c = chi(z, eps);
            prop_assert!(c >= 0.0 && c <= z * z);
            prop_assert!(z * c <= 0.0);
            if z >= -1.0 / eps {
                prop_assert_eq!(c, 0.0);
            }
        }
    }
}
