use morawetz_lab::fields::{presets, CoefficientSet, DomainSpec, Field, PotentialField, TestFunction, VectorField};
use morawetz_lab::jet::RJet;
use morawetz_lab::solver::io::{decode, encode, SolutionHeader, StoredField};
use morawetz_lab::solver::{
    convergence_study, manufactured_rhs, solve_3d, solve_radial, ComplexRadialFn, Grid3, Grid3DSolveSpec, GridOperator,
    GridProblem, MaskedHelmholtz, PointSource, RadialSolveSpec, SolveOptions, StudyPath,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gaussian_radial(lambda: f64, eps: f64) -> ComplexRadialFn {
    Arc::new(move |r: f64| c(4.0 * r * r - 6.0 + lambda, eps) * (-r * r).exp())
}

fn ring() -> ComplexRadialFn {
    Arc::new(|r: f64| c((-(r - 2.0) * (r - 2.0)).exp(), 0.3 * (-r * r).exp()))
}

fn radial_spec(m: usize, r0: f64, f: ComplexRadialFn, lambda: f64, eps: f64) -> RadialSolveSpec {
    let id = CoefficientSet::identity(3, 0.5).unwrap();
    RadialSolveSpec::from_coefficients(&id, r0, 12.0, m, lambda, eps, f).unwrap()
}

#[test]
fn radial_gaussian_converges_at_second_order() {
    let mut errs = Vec::new();
    for m in [300, 600, 1200] {
        let out = solve_radial(&radial_spec(m, 0.0, gaussian_radial(1.0, 0.1), 1.0, 0.1)).unwrap();
        let e = out
            .v
            .r
            .iter()
            .zip(&out.v.v)
            .map(|(&r, v)| (v - (-r * r).exp()).norm())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.6..=4.4).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn radial_study_matches_manual_rhs() {
    let id = CoefficientSet::identity(3, 0.5).unwrap();
    let v = TestFunction::gaussian(3, 1.0);
    let path = StudyPath::Radial {
        r0: 0.0,
        r_max: 12.0,
        m0: 300,
    };
    let study = convergence_study(&v, &id, 1.0, 0.1, &path, 3).unwrap();
    let order = study.order.unwrap();
    assert!((1.8..=2.2).contains(&order), "{study:?}");
    let f = manufactured_rhs(&v, &id, 1.0, 0.1);
    let g = gaussian_radial(1.0, 0.1);
    for r in [0.1, 0.7, 1.9] {
        assert!((f(&[0.0, r, 0.0]) - g(r)).norm() < 1e-12);
    }
}

#[test]
fn radial_exterior_problem_converges() {
    let id = CoefficientSet::identity(3, 0.5).unwrap();
    // vanishes at r = 1 and decays
    let v = TestFunction::custom(
        3,
        Arc::new(|xs: &[RJet]| {
            let r2 = RJet::sum_squares(xs);
            let g = r2.scale(-0.5).exp();
            g.mul_jet(&r2.add_const(-1.0)).to_complex()
        }),
    );
    let path = StudyPath::Radial {
        r0: 1.0,
        r_max: 14.0,
        m0: 399,
    };
    let study = convergence_study(&v, &id, -2.0, 0.3, &path, 3).unwrap();
    let order = study.order.unwrap();
    assert!((1.8..=2.2).contains(&order), "{study:?}");
}

#[test]
fn radial_zero_source_and_linearity() {
    let zero: ComplexRadialFn = Arc::new(|_| c(0.0, 0.0));
    let out = solve_radial(&radial_spec(500, 0.0, zero, 3.0, 0.2)).unwrap();
    assert!(out.v.v.iter().all(|z| z.norm() == 0.0));

    let f1 = ring();
    let f2 = gaussian_radial(0.0, 1.0);
    let (g1, g2) = (f1.clone(), f2.clone());
    let sum: ComplexRadialFn = Arc::new(move |r| g1(r) + g2(r));
    let a = solve_radial(&radial_spec(800, 1.0, f1, 3.0, 0.2)).unwrap();
    let b = solve_radial(&radial_spec(800, 1.0, f2, 3.0, 0.2)).unwrap();
    let s = solve_radial(&radial_spec(800, 1.0, sum, 3.0, 0.2)).unwrap();
    for i in 0..800 {
        assert!((s.v.v[i] - a.v.v[i] - b.v.v[i]).norm() < 1e-10);
    }
    assert!(s.relative_residual < 1e-10);
}

#[test]
fn radial_dissipation_identity() {
    for (lambda, eps) in [(-5.0, 1.0), (1.0, 0.1), (20.0, 0.03)] {
        let spec = radial_spec(4000, 0.0, ring(), lambda, eps);
        let out = solve_radial(&spec).unwrap();
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for ((r, v), w) in out.v.r.iter().zip(&out.v.v).zip(out.v.weights()) {
            lhs += eps * v.norm_sqr() * w;
            rhs += ((spec.f)(*r) * v.conj()).im * w;
        }
        assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs(), "{lambda} {eps}: {lhs} vs {rhs}");
    }
}

#[test]
fn radial_rejects_bad_input() {
    assert!(solve_radial(&radial_spec(100, 0.0, ring(), 1.0, 0.0)).is_err());
    let mut spec = radial_spec(100, 0.0, ring(), 1.0, 0.5);
    spec.alpha = Arc::new(|r| 1.0 - r);
    assert!(solve_radial(&spec).is_err());
    let spec = radial_spec(100, 0.0, ring(), 100.0, 0.1);
    assert!(solve_radial(&spec).unwrap().truncation_warning.is_some());
}

#[test]
fn radial_singular_potential_is_fine() {
    let n4 = presets::diag_n4_remark(4, 0.5, 3e-5, 0.25).unwrap();
    let spec = RadialSolveSpec::from_coefficients(&n4, 0.0, 40.0, 4000, 1.0, 0.5, ring()).unwrap();
    let out = solve_radial(&spec).unwrap();
    assert!(out.relative_residual < 1e-10);
    assert!(out.v.v.iter().all(|z| z.is_finite()));
}

fn grid_inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn grid_operator_is_hermitian() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let coeffs = presets::random_coefficients(3, &mut rng, 0.2);
    let grid = Grid3::new(2.0, 0.25).unwrap();
    for domain in [DomainSpec::Whole, DomainSpec::Ball { r0: 0.8 }] {
        let op = GridOperator::assemble(grid, &coeffs, &domain).unwrap();
        let mut x = random_vec(&mut rng, grid.len());
        let mut y = random_vec(&mut rng, grid.len());
        for i in 0..grid.len() {
            if op.mask[i] {
                x[i] = c(0.0, 0.0);
                y[i] = c(0.0, 0.0);
            }
        }
        let z = c(0.0, 0.0);
        let (ax, ay) = (op.apply(&x, z), op.apply(&y, z));
        let l = grid_inner(&ax, &y);
        let r = grid_inner(&x, &ay);
        assert!((l - r).norm() <= 1e-12 * l.norm(), "{l} vs {r}");
    }
}

#[test]
fn real_part_is_symmetric_without_magnetic_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut coeffs = presets::random_coefficients(3, &mut rng, 0.2);
    coeffs.b = VectorField::zero(3);
    let grid = Grid3::new(1.5, 0.25).unwrap();
    let op = GridOperator::assemble(grid, &coeffs, &DomainSpec::Whole).unwrap();
    let n = grid.len();
    let probe = [0, 17, n / 2, n - 3];
    for &i in &probe {
        let mut ei = vec![c(0.0, 0.0); n];
        ei[i] = c(1.0, 0.0);
        let col = op.apply(&ei, c(0.0, 0.0));
        for (j, v) in col.iter().enumerate() {
            if v.norm() == 0.0 {
                continue;
            }
            assert!(v.im == 0.0);
            let mut ej = vec![c(0.0, 0.0); n];
            ej[j] = c(1.0, 0.0);
            let back = op.apply(&ej, c(0.0, 0.0))[i];
            assert!((back.re - v.re).abs() <= 1e-12 * v.re.abs().max(1.0));
        }
    }
}

#[test]
fn masked_fast_solver_inverts_flat_operator() {
    let id = CoefficientSet::identity(3, 0.5).unwrap();
    let grid = Grid3::new(2.0, 0.25).unwrap();
    let domain = DomainSpec::Ball { r0: 0.9 };
    let op = GridOperator::assemble(grid, &id, &domain).unwrap();
    let z = c(2.0, 0.7);
    let pre = MaskedHelmholtz::new(grid.p, grid.h, z, &op.mask).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = random_vec(&mut rng, grid.len());
    let u = pre.apply(&g);
    let back = op.apply(&u, z);
    let err: f64 = back.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

fn grid_gaussian_source(lambda: f64, eps: f64) -> PointSource {
    let id = CoefficientSet::identity(3, 0.5).unwrap();
    manufactured_rhs(&TestFunction::gaussian(3, 1.0), &id, lambda, eps)
}

#[test]
fn grid_gaussian_converges() {
    let id = CoefficientSet::identity(3, 0.5).unwrap();
    let path = StudyPath::Grid {
        half_width: 4.0,
        h0: 0.5,
        domain: DomainSpec::Whole,
        options: SolveOptions::default(),
    };
    let study = convergence_study(&TestFunction::gaussian(3, 1.0), &id, 1.0, 0.5, &path, 2).unwrap();
    let order = study.order.unwrap();
    assert!((1.7..=2.3).contains(&order), "{study:?}");
}

#[test]
fn grid_variable_coefficients_converge() {
    let coeffs = presets::near_identity_n3(0.5, 0.05, 0.05, 0.25).unwrap();
    let v = TestFunction::gaussian(3, 1.0);
    let path = StudyPath::Grid {
        half_width: 3.0,
        h0: 0.375,
        domain: DomainSpec::Whole,
        options: SolveOptions::default(),
    };
    let study = convergence_study(&v, &coeffs, 2.0, 0.5, &path, 2).unwrap();
    let order = study.order.unwrap();
    assert!((1.7..=2.3).contains(&order), "{study:?}");
}

#[test]
fn grid_zero_source_and_dissipation() {
    let coeffs = presets::near_identity_n3(0.5, 0.05, 0.05, 0.25).unwrap();
    let problem = GridProblem::new(3.0, 0.25, &coeffs, &DomainSpec::Ball { r0: 1.0 }).unwrap();
    let zero = vec![c(0.0, 0.0); problem.grid().len()];
    let out = problem.solve(1.0, 0.3, &zero, &SolveOptions::default()).unwrap();
    assert!(out.v.v.iter().all(|z| z.norm() == 0.0));

    let f: PointSource = Arc::new(|x: &[f64]| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        c((-(r - 2.0) * (r - 2.0)).exp(), 0.2 * x[0])
    });
    let rhs = problem.sample(&f);
    for (lambda, eps) in [(-1.0, 1.0), (5.0, 0.3)] {
        let opts = SolveOptions {
            tol: 1e-12,
            ..SolveOptions::default()
        };
        let out = problem.solve(lambda, eps, &rhs, &opts).unwrap();
        let lhs: f64 = eps * out.v.v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let im: f64 = rhs.iter().zip(&out.v.v).map(|(f, v)| (f * v.conj()).im).sum();
        assert!((lhs - im).abs() <= 1e-6 * lhs, "{lhs} vs {im}");
    }
}

#[test]
fn gauge_transform_changes_phase_only() {
    let h = 0.25;
    let base = presets::magnetic_small(3, 0.5, 0.3).unwrap();
    let chi_val = |x: &[f64]| (0.4 * x[0] + 0.2 * x[1] * x[2]).sin();
    let b = base.b.clone();
    // b + ∇χ with χ = sin(0.4x₁ + 0.2x₂x₃)
    let gauged_b = Field::analytic(
        3,
        3,
        Arc::new(move |xs: &[RJet]| {
            let bj = b.0.jets_at(xs);
            let cos = (&xs[0].scale(0.4) + &xs[1].mul_jet(&xs[2]).scale(0.2)).cos();
            let grad = [
                cos.scale(0.4),
                cos.mul_jet(&xs[2]).scale(0.2),
                cos.mul_jet(&xs[1]).scale(0.2),
            ];
            (0..3).map(|k| &bj[k] + &grad[k]).collect()
        }),
    );
    let gauged = CoefficientSet::new(
        "gauged",
        0.5,
        base.a.clone(),
        VectorField(gauged_b),
        PotentialField::zero(3),
    )
    .unwrap();
    let f: PointSource = Arc::new(|x: &[f64]| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        c((-r2).exp(), 0.5 * x[1] * (-r2).exp())
    });
    let f2 = f.clone();
    let fg: PointSource = Arc::new(move |x: &[f64]| f2(x) * Complex64::from_polar(1.0, -chi_val(x)));
    let spec = |coeffs: CoefficientSet, f: PointSource| Grid3DSolveSpec {
        half_width: 4.0,
        h,
        coeffs,
        domain: DomainSpec::Whole,
        lambda: 1.0,
        eps: 0.5,
        f,
        options: SolveOptions::default(),
    };
    let v = solve_3d(&spec(base, f)).unwrap().v;
    let w = solve_3d(&spec(gauged, fg)).unwrap().v;
    let grid = v.grid;
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in 0..grid.len() {
        let rot = v.v[i] * Complex64::from_polar(1.0, -chi_val(&grid.point(i)));
        diff += (w.v[i] - rot).norm_sqr();
        norm += v.v[i].norm_sqr();
    }
    let rel = (diff / norm).sqrt();
    assert!(rel <= 5.0 * h * h, "{rel}");
}

#[test]
fn grid_agrees_with_radial_solver() {
    let h = 0.25;
    let (lambda, eps) = (1.0, 0.5);
    for r0 in [0.0, 1.0] {
        let domain = if r0 == 0.0 {
            DomainSpec::Whole
        } else {
            DomainSpec::Ball { r0 }
        };
        let fr = ring();
        let f3 = fr.clone();
        let f: PointSource = Arc::new(move |x: &[f64]| f3((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()));
        let id = CoefficientSet::identity(3, 0.5).unwrap();
        let grid_out = solve_3d(&Grid3DSolveSpec {
            half_width: 8.0,
            h,
            coeffs: id.clone(),
            domain,
            lambda,
            eps,
            f,
            options: SolveOptions::default(),
        })
        .unwrap();
        let radial = RadialSolveSpec::from_coefficients(&id, r0, 8.0, 8000, lambda, eps, fr).unwrap();
        let prof = solve_radial(&radial).unwrap().v;
        let g = grid_out.v.grid;
        let (mut diff, mut norm) = (0.0, 0.0);
        for i in 0..g.len() {
            let x = g.point(i);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            if r > 6.0 || grid_out.v.mask[i] {
                continue;
            }
            diff += (grid_out.v.v[i] - prof.value_at(r)).norm_sqr();
            norm += prof.value_at(r).norm_sqr();
        }
        let rel = (diff / norm).sqrt();
        let bound = if r0 == 0.0 { 5.0 * h * h } else { 5.0 * h };
        assert!(rel <= bound, "r0 = {r0}: {rel}");
    }
}

#[test]
fn solver_rejects_bad_grids() {
    let id = CoefficientSet::identity(3, 0.5).unwrap();
    assert!(GridProblem::new(1.0, 0.3, &id, &DomainSpec::Whole).is_err());
    let n4 = CoefficientSet::identity(4, 0.5).unwrap();
    assert!(GridProblem::new(1.0, 0.25, &n4, &DomainSpec::Whole).is_err());
    let problem = GridProblem::new(1.0, 0.25, &id, &DomainSpec::Whole).unwrap();
    let rhs = problem.sample(&grid_gaussian_source(1.0, 0.5));
    assert!(problem.solve(1.0, 0.0, &rhs, &SolveOptions::default()).is_err());
}

#[test]
fn solution_files_round_trip() {
    let out = solve_radial(&radial_spec(50, 1.0, ring(), 1.0, 0.5)).unwrap();
    let field = StoredField::Radial(out.v.clone());
    let header = SolutionHeader {
        layout: field.layout(),
        dims: field.dims(),
        lambda: 1.0,
        eps: 0.5,
        preset: "identity".into(),
        relative_residual: out.relative_residual,
        iterations: out.iterations,
    };
    let bytes = encode(&header, &field).unwrap();
    assert_eq!(&bytes[..8], b"HELMSOL1");
    let (h2, f2) = decode(&bytes).unwrap();
    assert_eq!(h2, header);
    match f2 {
        StoredField::Radial(p) => {
            assert_eq!(p.v, out.v.v);
            assert_eq!(p.r, out.v.r);
        }
        _ => panic!("layout changed"),
    }

    let id = CoefficientSet::identity(3, 0.5).unwrap();
    let problem = GridProblem::new(1.0, 0.25, &id, &DomainSpec::Ball { r0: 0.5 }).unwrap();
    let rhs = problem.sample(&grid_gaussian_source(1.0, 0.5));
    let sol = problem.solve(1.0, 0.5, &rhs, &SolveOptions::default()).unwrap().v;
    let field = StoredField::Grid(sol.clone());
    let header = SolutionHeader {
        layout: field.layout(),
        dims: field.dims(),
        lambda: 1.0,
        eps: 0.5,
        preset: "identity".into(),
        relative_residual: 0.0,
        iterations: 1,
    };
    let (_, f2) = decode(&encode(&header, &field).unwrap()).unwrap();
    match f2 {
        StoredField::Grid(g) => {
            assert_eq!(g.v, sol.v);
            assert_eq!(g.mask, sol.mask);
        }
        _ => panic!("layout changed"),
    }
    assert!(decode(&bytes[..20]).is_err());
    assert!(decode(b"NOTAFILE").is_err());
}
