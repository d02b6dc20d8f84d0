//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the lines are always printed.

use std::time::{Duration, Instant};

use kvgeom::free_lie::Generator;
use kvgeom::kv::{kv1_residual, solve_kv, Strategy};
use kvgeom::matrix_lie::{builtin_algebras, so3, QuadraticLieAlgebra};
use kvgeom::nalgebra::DVector;
use kvgeom::poisson::{alpha_homotopy_residual, varpi_homotopy_residual};
use kvgeom::rational::{int, ratio};
use kvgeom::report::{geom_run, sample_parameters, sample_points, GeomReport, SweepConfig, Tolerances};
use kvgeom::flow::{flow_integrate, transport_errors};
use kvgeom::{bch, BchOrder, PointV, Rational};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

/// Running maximum in which NaN is absorbing (`f64::max` would drop it).
fn worse(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

// ---------------------------------------------------------------- exact oracle

/// Dense square matrix over the rationals.
#[derive(Clone, PartialEq, Debug)]
struct QMat {
    n: usize,
    a: Vec<Rational>,
}

impl QMat {
    fn zero(n: usize) -> Self {
        QMat { n, a: vec![Rational::zero(); n * n] }
    }
    fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.a[i * n + i] = int(1);
        }
        m
    }
    fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut m = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let x = &self.a[i * n + k];
                if x.is_zero() {
                    continue;
                }
                for j in 0..n {
                    m.a[i * n + j] += x * &o.a[k * n + j];
                }
            }
        }
        m
    }
    fn add_scaled(&mut self, c: &Rational, o: &Self) {
        for (x, y) in self.a.iter_mut().zip(&o.a) {
            *x += c * y;
        }
    }
    fn sub(&self, o: &Self) -> Self {
        let mut m = self.clone();
        m.add_scaled(&int(-1), o);
        m
    }
    fn is_zero(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }
}

/// `exp(N)` for nilpotent `N` with `N^n = 0`: a finite sum.
fn exp_nilpotent(m: &QMat) -> QMat {
    let mut acc = QMat::identity(m.n);
    let mut term = QMat::identity(m.n);
    for k in 1..m.n {
        term = term.mul(m);
        acc.add_scaled(&ratio(1, (1..=k as i64).product()), &term);
    }
    acc
}

/// `log(I + M)` for nilpotent `M`: a finite sum.
fn log_unipotent(g: &QMat) -> QMat {
    let m = g.sub(&QMat::identity(g.n));
    let mut acc = QMat::zero(g.n);
    let mut term = QMat::identity(g.n);
    for k in 1..g.n {
        term = term.mul(&m);
        let sign = if k % 2 == 1 { 1 } else { -1 };
        acc.add_scaled(&ratio(sign, k as i64), &term);
    }
    acc
}

/// Strictly upper-triangular with entries p/q, |p| ≤ 5, 1 ≤ q ≤ 4.
fn random_nilpotent(rng: &mut ChaCha8Rng, n: usize) -> QMat {
    let mut m = QMat::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            m.a[i * n + j] = ratio(rng.gen_range(-5..=5), rng.gen_range(1..=4));
        }
    }
    m
}

fn criterion_1() -> Line {
    const N: usize = 9;
    const DEGREE: usize = 8;
    let start = Instant::now();
    let xy = bch(DEGREE, BchOrder::XY);
    let yx = bch(DEGREE, BchOrder::YX);
    let elapsed = start.elapsed();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut trials = 0;
    let mut exact = true;
    for _ in 0..3 {
        let x = random_nilpotent(&mut rng, N);
        let y = random_nilpotent(&mut rng, N);
        for (series, order) in [(&xy, BchOrder::XY), (&yx, BchOrder::YX)] {
            // products of 9 strictly upper-triangular 9×9 matrices vanish, so degree 8 is exact
            let z = series.evaluate_with(
                |g| if g == Generator::X.letter() { x.clone() } else { y.clone() },
                |a, b| a.mul(b).sub(&b.mul(a)),
                QMat::zero(N),
                |acc, c, v| acc.add_scaled(c, v),
            );
            let oracle = match order {
                BchOrder::XY => log_unipotent(&exp_nilpotent(&x).mul(&exp_nilpotent(&y))),
                BchOrder::YX => log_unipotent(&exp_nilpotent(&y).mul(&exp_nilpotent(&x))),
            };
            exact &= z.sub(&oracle).is_zero();
            trials += 1;
        }
    }
    let fast = elapsed < Duration::from_secs(60);
    Line {
        id: 1,
        name: "exact BCH through degree 8",
        pass: exact && fast,
        detail: format!(
            "{} terms, {:.2?} (limit 60 s), {trials} nilpotent 9x9 trials, residual {}",
            xy.len(),
            elapsed,
            if exact { "zero" } else { "NONZERO" }
        ),
    }
}

fn criterion_2() -> Line {
    let start = Instant::now();
    let solved = solve_kv(8, Strategy::Eq1Only);
    let elapsed = start.elapsed();
    let (pass, detail) = match solved {
        Ok(p) => {
            let zero = kv1_residual(&p, 8).is_zero();
            let x = kvgeom::Word::new(vec![Generator::X.letter()]);
            let y = kvgeom::Word::new(vec![Generator::Y.letter()]);
            let c_minus_b = p.b.coeff(&x) - p.a.coeff(&y);
            let ok = zero && c_minus_b == ratio(1, 2) && elapsed < Duration::from_secs(120);
            (ok, format!("residual zero: {zero}, c - b = {c_minus_b}, {elapsed:.2?} (limit 120 s)"))
        }
        Err(e) => (false, format!("solver failed: {e}")),
    };
    Line { id: 2, name: "symbolic first KV equation through degree 8", pass, detail }
}

// ---------------------------------------------------------------- sweeps

fn sweep_config() -> SweepConfig {
    SweepConfig {
        samples: 100,
        seed: SEED,
        radius: 0.3,
        check_points: 20,
        per_point_draws: 5,
        // transport is criterion 6, run separately on 20 points
        flow_points: 0,
        ..SweepConfig::default()
    }
}

fn sweep_line<F>(id: usize, name: &'static str, reports: &[GeomReport], pick: F) -> Line
where
    F: Fn(&GeomReport) -> Vec<(&'static str, f64, f64, usize)>,
{
    let mut pass = !reports.is_empty();
    let mut parts = Vec::new();
    for r in reports {
        for (what, max, tol, count) in pick(r) {
            // NaN fails the comparison
            let ok = count > 0 && max <= tol;
            pass &= ok;
            parts.push(format!("{}/{what} {max:.2e} over {count} (tol {tol:.0e})", r.algebra));
        }
    }
    Line { id, name, pass, detail: parts.join("; ") }
}

// ---------------------------------------------------------------- transport

fn criterion_6() -> Line {
    let alg = so3();
    let tol = Tolerances::default();
    let mut phi_max = 0.0f64;
    let mut vol_max = 0.0f64;
    let mut failures = Vec::new();
    for (i, p) in sample_points(&alg, 20, 0.3, SEED).iter().enumerate() {
        match flow_integrate(&alg, p, 200).and_then(|s| transport_errors(&alg, &s)) {
            Ok((a, b)) => {
                phi_max = worse(phi_max, a);
                vol_max = worse(vol_max, b);
            }
            Err(e) => failures.push(format!("point {i}: {e}")),
        }
    }
    let pass = failures.is_empty() && phi_max <= tol.transport_phi && vol_max <= tol.transport_vol;
    let mut detail = format!(
        "so3, 20 points x 200 RK4 steps: phi drift {phi_max:.2e} (tol {:.0e}), volume {vol_max:.2e} (tol {:.0e})",
        tol.transport_phi, tol.transport_vol
    );
    if !failures.is_empty() {
        detail.push_str(&format!("; errors: {}", failures.join(", ")));
    }
    Line { id: 6, name: "transport along the Moser flow", pass, detail }
}

// ---------------------------------------------------------------- homotopy identities

const HOMOTOPY_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-4;

fn unit_directions(alg: &QuadraticLieAlgebra, n: usize, dim: usize, seed: u64) -> Vec<DVector<f64>> {
    // sample_parameters draws in the algebra dimension; pairs give directions on V = g × g
    let raw = sample_parameters(alg, 2 * n, 1.0, seed);
    (0..n)
        .map(|i| {
            let v = if dim == alg.dim() {
                raw[2 * i].clone()
            } else {
                PointV::new(raw[2 * i].clone(), raw[2 * i + 1].clone()).to_vector()
            };
            let norm = v.norm();
            v / norm
        })
        .collect()
}

struct Homotopy {
    varpi: f64,
    alpha: f64,
}

fn homotopy_residuals(alg: &QuadraticLieAlgebra, p: &PointV, i: usize, h: f64) -> kvgeom::Result<Homotopy> {
    let g = unit_directions(alg, 4, alg.dim(), SEED + 1000 + i as u64);
    let (three, one) = varpi_homotopy_residual(alg, &p.y, [&g[0], &g[1], &g[2]], &g[3], h)?;
    let v = unit_directions(alg, 2, 2 * alg.dim(), SEED + 2000 + i as u64);
    let mut a = 0.0f64;
    for t in [0.25, 0.5, 1.0] {
        a = worse(a, alpha_homotopy_residual(alg, t, p, &v[0], &v[1], h)?.abs());
    }
    Ok(Homotopy { varpi: worse(three.abs(), one.abs()), alpha: a })
}

fn criterion_9() -> Line {
    let mut parts = Vec::new();
    let mut pass = true;
    for alg in builtin_algebras() {
        let mut varpi = 0.0f64;
        let mut alpha = 0.0f64;
        for (i, p) in sample_points(&alg, 20, 0.3, SEED).iter().enumerate() {
            match homotopy_residuals(&alg, p, i, FD_STEP) {
                Ok(r) => {
                    varpi = worse(varpi, r.varpi);
                    alpha = worse(alpha, r.alpha);
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("{}: point {i}: {e}", alg.name()));
                }
            }
        }
        pass &= varpi <= HOMOTOPY_TOL && alpha <= HOMOTOPY_TOL;
        // Richardson: halving a truncation-dominated step divides a central
        // difference error by four.
        let p = &sample_points(&alg, 1, 0.3, SEED + 7)[0];
        let ratios = [0.08, 0.04].map(|h| {
            homotopy_residuals(&alg, p, 0, h)
                .and_then(|a| homotopy_residuals(&alg, p, 0, h / 2.0).map(|b| (a.varpi / b.varpi, a.alpha / b.alpha)))
        });
        let mut order_ok = true;
        let mut shown = Vec::new();
        for r in &ratios {
            match r {
                Ok((rv, ra)) => {
                    order_ok &= (3.0..5.0).contains(rv) && (3.0..5.0).contains(ra);
                    shown.push(format!("{rv:.2}/{ra:.2}"));
                }
                Err(e) => {
                    order_ok = false;
                    shown.push(e.to_string());
                }
            }
        }
        pass &= order_ok;
        parts.push(format!(
            "{}: varpi {varpi:.2e}, alpha {alpha:.2e} (tol {HOMOTOPY_TOL:.0e}), Richardson ratios varpi/alpha {}",
            alg.name(),
            shown.join(", ")
        ));
    }
    Line { id: 9, name: "homotopy identities", pass, detail: parts.join("; ") }
}

fn main() {
    let mut lines = vec![criterion_1(), criterion_2()];

    let cfg = sweep_config();
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut sweep_errors = Vec::new();
    for alg in builtin_algebras() {
        match geom_run(&alg, &cfg) {
            Ok(r) => reports.push(r),
            Err(e) => sweep_errors.push(format!("{}: {e}", alg.name())),
        }
    }
    let sweep_time = start.elapsed();
    let complete = sweep_errors.is_empty();
    let t = cfg.tolerances.clone();

    let mut c3 = sweep_line(3, "geometric first KV equation", &reports, |r| {
        vec![("eq1", r.residuals.eq1.max, t.eq1, r.residuals.eq1.count)]
    });
    let in_time = sweep_time < Duration::from_secs(300);
    c3.pass &= complete && in_time;
    c3.detail.push_str(&format!("; sweep {sweep_time:.2?} (limit 300 s)"));
    lines.push(c3);
    lines.push(sweep_line(4, "geometric trace equation", &reports, |r| {
        vec![("eq2", r.residuals.eq2.max, t.eq2, r.residuals.eq2.count)]
    }));
    lines.push(sweep_line(5, "volume identity kappa = det^(1/2)", &reports, |r| {
        vec![("kappaVsLambda", r.residuals.kappa_vs_lambda.max, t.kappa_vs_lambda, r.residuals.kappa_vs_lambda.count)]
    }));
    lines.push(criterion_6());
    lines.push(sweep_line(7, "Poisson structure sanity", &reports, |r| {
        vec![
            ("jacobi", r.residuals.jacobi.max, t.jacobi, r.residuals.jacobi.count),
            ("momentMap", r.residuals.moment_map.max, t.moment_map, r.residuals.moment_map.count),
            ("modular", r.residuals.modular.max, t.modular, r.residuals.modular.count),
        ]
    }));
    lines.push(sweep_line(8, "Ad-equivariance of (A, B)", &reports, |r| {
        vec![("equivariance", r.residuals.equivariance.max, t.equivariance, r.residuals.equivariance.count)]
    }));
    lines.push(criterion_9());
    lines.sort_by_key(|l| l.id);

    if !complete {
        for e in &sweep_errors {
            println!("sweep error: {e}");
        }
        for l in lines.iter_mut().filter(|l| matches!(l.id, 3 | 4 | 5 | 7 | 8)) {
            l.pass = false;
        }
    }
    for l in &lines {
        println!("criterion {} [{}]: {}: {}", l.id, l.name, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
