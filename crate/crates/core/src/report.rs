//! Seeded numerical sweeps and the JSON reports printed by `kvgeom`.
//!
//! All tolerances live in [`Tolerances`]; every report echoes the table it
//! was judged against. Reports contain no timestamps, so the same
//! configuration and seed produce byte-identical output.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::flow::{flow_integrate, transport_errors};
use crate::matrix_lie::{kappa_t, PointV, QuadraticLieAlgebra, Vector};
use crate::poisson::{
    eq1_numeric_residual, equivariance_residual, extract_ab, jacobi_residual, kv2_numeric_residual, lambda_det,
    max_abs, modular_field, moment_map_residual,
};
use crate::{KvError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Tolerances {
    pub eq1: f64,
    pub eq2: f64,
    pub kappa_vs_lambda: f64,
    pub jacobi: f64,
    pub moment_map: f64,
    pub modular: f64,
    pub transport_phi: f64,
    pub transport_vol: f64,
    pub equivariance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq1: 1e-7,
            eq2: 1e-5,
            kappa_vs_lambda: 1e-7,
            jacobi: 1e-5,
            moment_map: 1e-5,
            modular: 1e-7,
            transport_phi: 1e-6,
            transport_vol: 1e-5,
            equivariance: 1e-6,
        }
    }
}

/// Times at which `κ_t = λ_t`, the Jacobi identity and the moment map are checked.
pub const CHECK_TIMES: [f64; 3] = [0.25, 0.5, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Number of values aggregated.
    pub count: usize,
}

impl Stat {
    fn from_values(values: &[f64], with_mean: bool) -> Self {
        // NaN propagates so that a non-finite residual can never pass
        let max = values.iter().fold(0.0f64, |a, &v| if v.is_nan() || a.is_nan() { f64::NAN } else { a.max(v) });
        let mean = with_mean.then(|| if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / values.len() as f64 });
        Stat { max, mean, count: values.len() }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Residuals {
    pub eq1: Stat,
    pub eq2: Stat,
    pub kappa_vs_lambda: Stat,
    pub jacobi: Stat,
    pub moment_map: Stat,
    pub modular: Stat,
    pub transport_phi: Stat,
    pub transport_vol: Stat,
    pub equivariance: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GeomReport {
    pub algebra: String,
    pub seed: u64,
    pub n_samples: usize,
    pub radius: f64,
    pub check_points: usize,
    pub flow_points: usize,
    pub flow_steps: usize,
    pub residuals: Residuals,
    pub tolerances: Tolerances,
    pub pass: bool,
}

impl GeomReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One `name: value <= tol PASS|FAIL` line per residual.
    pub fn summary_lines(&self) -> Vec<String> {
        let r = &self.residuals;
        let t = &self.tolerances;
        [
            ("eq1", &r.eq1, t.eq1),
            ("eq2", &r.eq2, t.eq2),
            ("kappaVsLambda", &r.kappa_vs_lambda, t.kappa_vs_lambda),
            ("jacobi", &r.jacobi, t.jacobi),
            ("momentMap", &r.moment_map, t.moment_map),
            ("modular", &r.modular, t.modular),
            ("transportPhi", &r.transport_phi, t.transport_phi),
            ("transportVol", &r.transport_vol, t.transport_vol),
            ("equivariance", &r.equivariance, t.equivariance),
        ]
        .iter()
        .map(|(name, stat, tol)| {
            let verdict = if stat.count == 0 { "SKIP" } else if stat.within(*tol) { "PASS" } else { "FAIL" };
            format!("{}/{name}: max {:.3e} over {} (tol {:.0e}) {verdict}", self.algebra, stat.max, stat.count, tol)
        })
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
    /// Points (taken from the front of the sample list) for the Jacobi,
    /// moment-map, modular and equivariance checks.
    pub check_points: usize,
    /// Random `ξ` per point for the moment map and random conjugations per
    /// point for equivariance.
    pub per_point_draws: usize,
    pub flow_points: usize,
    pub flow_steps: usize,
    pub tolerances: Tolerances,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            samples: 100,
            seed: 42,
            radius: 0.3,
            check_points: 20,
            per_point_draws: 5,
            flow_points: 2,
            flow_steps: 200,
            tolerances: Tolerances::default(),
        }
    }
}

fn ball_vector<R: Rng>(rng: &mut R, d: usize, radius: f64) -> Vector {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let n2 = v.norm_squared();
        if n2 <= 1.0 && n2 > 0.0 {
            return v * radius;
        }
    }
}

const POINT_STREAM: u64 = 0;
const PARAM_STREAM: u64 = 1;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `n` points with `X` and `Y` independently uniform in the coordinate ball
/// of the given radius.
pub fn sample_points(alg: &QuadraticLieAlgebra, n: usize, radius: f64, seed: u64) -> Vec<PointV> {
    let mut r = rng(seed, POINT_STREAM);
    let d = alg.dim();
    (0..n)
        .map(|_| {
            let x = ball_vector(&mut r, d, radius);
            let y = ball_vector(&mut r, d, radius);
            PointV::new(x, y)
        })
        .collect()
}

/// Random Lie algebra elements for moment-map parameters and conjugations.
pub fn sample_parameters(alg: &QuadraticLieAlgebra, n: usize, radius: f64, seed: u64) -> Vec<Vector> {
    let mut r = rng(seed, PARAM_STREAM);
    (0..n).map(|_| ball_vector(&mut r, alg.dim(), radius)).collect()
}

/// Norm bound of the conjugating elements `W` in the equivariance check.
pub const CONJUGATION_RADIUS: f64 = 0.3;

pub fn validate_config(alg: &QuadraticLieAlgebra, cfg: &SweepConfig) -> Result<()> {
    if cfg.samples == 0 {
        return Err(KvError::InvalidArgument("samples must be at least 1".into()));
    }
    if !(cfg.radius > 0.0 && cfg.radius <= alg.domain_radius()) {
        return Err(KvError::InvalidArgument(format!(
            "radius must lie in (0, {}] for {}",
            alg.domain_radius(),
            alg.name()
        )));
    }
    if cfg.flow_points > 0 && cfg.flow_steps == 0 {
        return Err(KvError::InvalidArgument("steps must be positive".into()));
    }
    Ok(())
}

/// Runs every geometric check on a seeded sample of `V`.
pub fn geom_run(alg: &QuadraticLieAlgebra, cfg: &SweepConfig) -> Result<GeomReport> {
    validate_config(alg, cfg)?;
    let points = sample_points(alg, cfg.samples, cfg.radius, cfg.seed);
    let check = cfg.check_points.min(points.len());
    let flows = cfg.flow_points.min(points.len());
    let params = sample_parameters(alg, 2 * check * cfg.per_point_draws, 1.0, cfg.seed);
    let (xis, conj) = params.split_at(check * cfg.per_point_draws);

    let mut eq1 = Vec::new();
    let mut eq2 = Vec::new();
    let mut kl = Vec::new();
    for p in &points {
        let (a, b) = extract_ab(alg, p)?;
        eq1.push(eq1_numeric_residual(alg, p, &a, &b)?);
        eq2.push(kv2_numeric_residual(alg, p)?);
        for &t in &CHECK_TIMES {
            let k = kappa_t(alg, t, p)?;
            kl.push((lambda_det(alg, t, p)? - k).abs() / k);
        }
    }

    let mut jac = Vec::new();
    let mut mm = Vec::new();
    let mut modular = Vec::new();
    let mut equiv = Vec::new();
    for (i, p) in points.iter().take(check).enumerate() {
        for &t in &CHECK_TIMES {
            jac.push(jacobi_residual(alg, t, p, 1e-4)?);
            for xi in &xis[i * cfg.per_point_draws..(i + 1) * cfg.per_point_draws] {
                mm.push(moment_map_residual(alg, t, p, xi)?);
            }
        }
        modular.push(max_abs(&modular_field(alg, p)?));
        for w in &conj[i * cfg.per_point_draws..(i + 1) * cfg.per_point_draws] {
            equiv.push(equivariance_residual(alg, p, &(w * CONJUGATION_RADIUS))?);
        }
    }

    let mut tphi = Vec::new();
    let mut tvol = Vec::new();
    for p in points.iter().take(flows) {
        let states = flow_integrate(alg, p, cfg.flow_steps)?;
        let (a, b) = transport_errors(alg, &states)?;
        tphi.push(a);
        tvol.push(b);
    }

    let residuals = Residuals {
        eq1: Stat::from_values(&eq1, true),
        eq2: Stat::from_values(&eq2, true),
        kappa_vs_lambda: Stat::from_values(&kl, false),
        jacobi: Stat::from_values(&jac, false),
        moment_map: Stat::from_values(&mm, false),
        modular: Stat::from_values(&modular, false),
        transport_phi: Stat::from_values(&tphi, false),
        transport_vol: Stat::from_values(&tvol, false),
        equivariance: Stat::from_values(&equiv, false),
    };
    let t = &cfg.tolerances;
    let pass = residuals.eq1.within(t.eq1)
        && residuals.eq2.within(t.eq2)
        && residuals.kappa_vs_lambda.within(t.kappa_vs_lambda)
        && residuals.jacobi.within(t.jacobi)
        && residuals.moment_map.within(t.moment_map)
        && residuals.modular.within(t.modular)
        && residuals.transport_phi.within(t.transport_phi)
        && residuals.transport_vol.within(t.transport_vol)
        && residuals.equivariance.within(t.equivariance);
    Ok(GeomReport {
        algebra: alg.name().to_string(),
        seed: cfg.seed,
        n_samples: points.len(),
        radius: cfg.radius,
        check_points: check,
        flow_points: flows,
        flow_steps: cfg.flow_steps,
        residuals,
        tolerances: cfg.tolerances.clone(),
        pass,
    })
}
