//! Explicit local models in `T*S^n`: the circle action, model twists, spinning, the
//! anti-diagonal involution and the Hamiltonian rotation used before twisting.
//! Everything here is checked numerically against its defining properties.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point is off the cotangent bundle: |u| = {norm_u}, <u,v> = {dot}")]
    OffBundle { norm_u: f64, dot: f64 },
    #[error("u and v have different lengths")]
    Dimension,
    #[error("circle action is undefined on the zero section")]
    ZeroSection,
    #[error("y must be a unit vector, got norm {0}")]
    NotUnit(f64),
    #[error("profile width must be positive, got {0}")]
    BadEpsilon(f64),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `(u; v)` with `|u| = 1` and `<u, v> = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotangentPoint {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl CotangentPoint {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self, GeomError> {
        if u.len() != v.len() || u.is_empty() {
            return Err(GeomError::Dimension);
        }
        let (nu, d) = (norm(&u), dot(&u, &v));
        if (nu - 1.0).abs() > 1e-12 || d.abs() > 1e-12 {
            return Err(GeomError::OffBundle { norm_u: nu, dot: d });
        }
        Ok(CotangentPoint { u, v })
    }

    /// Projects an arbitrary pair back onto the bundle.
    pub fn retract(u: &[f64], v: &[f64]) -> Self {
        let nu = norm(u);
        let u: Vec<f64> = u.iter().map(|x| x / nu).collect();
        let d = dot(&u, v);
        let v = v.iter().zip(&u).map(|(a, b)| a - d * b).collect();
        CotangentPoint { u, v }
    }

    /// Fiber dimension `n`, for a point of `T*S^n`.
    pub fn n(&self) -> usize {
        self.u.len() - 1
    }

    pub fn mu(&self) -> f64 {
        norm(&self.v)
    }

    pub fn distance(&self, other: &CotangentPoint) -> f64 {
        let du: f64 = self
            .u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let dv: f64 = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        (du + dv).sqrt()
    }
}

/// The normalized geodesic flow of the round metric.
pub fn circle_action(t: f64, p: &CotangentPoint) -> Result<CotangentPoint, GeomError> {
    let m = p.mu();
    if m == 0.0 {
        return Err(GeomError::ZeroSection);
    }
    let (c, s) = (t.cos(), t.sin());
    let u =
        p.u.iter()
            .zip(&p.v)
            .map(|(u, v)| c * u + s * v / m)
            .collect();
    let v =
        p.v.iter()
            .zip(&p.u)
            .map(|(v, u)| c * v - s * m * u)
            .collect();
    Ok(CotangentPoint { u, v })
}

/// Monotone `C^2` step from 0 (for `x <= 0`) to 1 (for `x >= 1`).
///
/// The slope rises along a cubic ramp over the first quarter, stays at `4/3`, and
/// falls symmetrically. Keeping the peak slope low matters: central-difference checks
/// of the twist lose accuracy with the cube of the profile's slope.
pub fn smooth_step(x: f64) -> f64 {
    const W: f64 = 0.25;
    const A: f64 = 1.0 / (1.0 - W);
    let ramp = |s: f64| s.powi(3) - s.powi(4) / 2.0;
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if x < W {
        A * W * ramp(x / W)
    } else if x <= 1.0 - W {
        A * W / 2.0 + A * (x - W)
    } else {
        1.0 - A * W * ramp((1.0 - x) / W)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Equal to `pi` on `[0, eps/2]`.
    Plateau,
    /// Strictly negative slope at the zero section.
    Sloped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistProfile {
    pub epsilon: f64,
    pub kind: ProfileKind,
}

impl TwistProfile {
    pub fn new(epsilon: f64, kind: ProfileKind) -> Result<Self, GeomError> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(GeomError::BadEpsilon(epsilon));
        }
        Ok(TwistProfile { epsilon, kind })
    }

    pub fn plateau() -> Self {
        TwistProfile {
            epsilon: 0.5,
            kind: ProfileKind::Plateau,
        }
    }

    pub fn sloped() -> Self {
        TwistProfile {
            epsilon: 0.5,
            kind: ProfileKind::Sloped,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let e = self.epsilon;
        match self.kind {
            ProfileKind::Plateau => PI * smooth_step((e - t) / (e / 2.0)),
            ProfileKind::Sloped => {
                if t >= e {
                    0.0
                } else {
                    PI * smooth_step(1.0 - t / e) * (1.0 - t / (2.0 * e))
                }
            }
        }
    }

    pub fn sample(&self, count: usize) -> Vec<(f64, f64)> {
        (0..count)
            .map(|i| {
                let t = 1.5 * self.epsilon * i as f64 / (count.max(2) - 1) as f64;
                (t, self.eval(t))
            })
            .collect()
    }
}

/// The generalized Dehn twist of `T*S^n` with profile `r`.
pub fn model_twist(p: &CotangentPoint, profile: &TwistProfile) -> CotangentPoint {
    let m = p.mu();
    if m == 0.0 {
        return CotangentPoint {
            u: p.u.iter().map(|x| -x).collect(),
            v: p.v.clone(),
        };
    }
    circle_action(profile.eval(m), p).expect("v is nonzero")
}

/// `eta_0`: negates coordinates from the third on, in both `u` and `v`.
pub fn involution(p: &CotangentPoint) -> CotangentPoint {
    let flip = |w: &[f64]| {
        w.iter()
            .enumerate()
            .map(|(i, x)| if i >= 2 { -x } else { *x })
            .collect()
    };
    CotangentPoint {
        u: flip(&p.u),
        v: flip(&p.v),
    }
}

/// `psi_y`: the cotangent bundle of a great circle through `e_{n+1}` and `(y, 0)`.
pub fn spin_point(theta: f64, t: f64, y: &[f64]) -> Result<CotangentPoint, GeomError> {
    let ny = norm(y);
    if (ny - 1.0).abs() > 1e-12 {
        return Err(GeomError::NotUnit(ny));
    }
    let n = y.len();
    let (c, s) = (theta.cos(), theta.sin());
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    for i in 0..n {
        u[i] = s * y[i];
        v[i] = t * c * y[i];
    }
    u[n] = c;
    v[n] = -t * s;
    Ok(CotangentPoint { u, v })
}

/// Spins a sampled curve in `T*S^1`, given as `(theta, t)` pairs.
pub fn spin(curve: &[(f64, f64)], y: &[f64]) -> Result<Vec<CotangentPoint>, GeomError> {
    curve.iter().map(|&(th, t)| spin_point(th, t, y)).collect()
}

/// Inverse of `psi_1` on `T*S^1`.
pub fn circle_coordinates(p: &CotangentPoint) -> (f64, f64) {
    let theta = p.u[0].atan2(p.u[1]);
    let t = p.v[0] * theta.cos() - p.v[1] * theta.sin();
    (theta, t)
}

/// `delta`: `pi/2` below 1, 0 above 2.
pub fn delta(x: f64) -> f64 {
    PI / 2.0 * (1.0 - smooth_step(x - 1.0))
}

fn rotate(x: [f64; 4], a: f64) -> [f64; 4] {
    let (c, s) = (a.cos(), a.sin());
    [
        c * x[0] - s * x[2],
        c * x[1] - s * x[3],
        s * x[0] + c * x[2],
        s * x[1] + c * x[3],
    ]
}

/// The rotation `H_{t delta(rho)}` with the radial gauge `rho = (c1 + c2)|x|`.
///
/// The angle depends on `|x|` alone, so this is the time-`t` flow of an autonomous
/// Hamiltonian. It rotates by `pi/2` wherever the literal gauge `c1|x1| + c2|x2|`
/// would and is the identity wherever that one is.
pub fn hamiltonian_flow(x: [f64; 4], t: f64, c1: f64, c2: f64) -> [f64; 4] {
    let r = (x.iter().map(|a| a * a).sum::<f64>()).sqrt();
    rotate(x, t * delta((c1 + c2) * r))
}

/// The rotation with the gauge `c1|x1| + c2|x2|` taken verbatim; not symplectic
/// where `delta` varies.
pub fn hamiltonian_flow_literal(x: [f64; 4], t: f64, c1: f64, c2: f64) -> [f64; 4] {
    let g = c1 * x[0].hypot(x[1]) + c2 * x[2].hypot(x[3]);
    rotate(x, t * delta(g))
}

fn omega(a: &[f64], b: &[f64], a2: &[f64], b2: &[f64]) -> f64 {
    dot(a, b2) - dot(b, a2)
}

fn tangent_basis(p: &CotangentPoint) -> Vec<(Vec<f64>, Vec<f64>)> {
    let m = p.u.len();
    // orthonormal basis of u^perp by Gram-Schmidt on the standard basis
    let mut perp: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        let d = dot(&e, &p.u);
        e.iter_mut().zip(&p.u).for_each(|(x, u)| *x -= d * u);
        for f in &perp {
            let d = dot(&e, f);
            e.iter_mut().zip(f).for_each(|(x, y)| *x -= d * y);
        }
        let ne = norm(&e);
        if ne > 1e-6 {
            perp.push(e.iter().map(|x| x / ne).collect());
        }
        if perp.len() == m - 1 {
            break;
        }
    }
    let mut out = Vec::new();
    for e in &perp {
        let d = dot(e, &p.v);
        out.push((e.clone(), p.u.iter().map(|u| -d * u).collect()));
    }
    for e in &perp {
        out.push((vec![0.0; m], e.clone()));
    }
    out
}

/// Largest deviation of `F^* omega - omega` over the samples, by central differences.
pub fn symplecticity_check<F>(f: F, samples: &[CotangentPoint], h: f64) -> f64
where
    F: Fn(&CotangentPoint) -> CotangentPoint,
{
    let mut worst: f64 = 0.0;
    for p in samples {
        let basis = tangent_basis(p);
        let push: Vec<(Vec<f64>, Vec<f64>)> = basis
            .iter()
            .map(|(a, b)| {
                let shift = |s: f64| {
                    let u: Vec<f64> = p.u.iter().zip(a).map(|(x, d)| x + s * d).collect();
                    let v: Vec<f64> = p.v.iter().zip(b).map(|(x, d)| x + s * d).collect();
                    f(&CotangentPoint::retract(&u, &v))
                };
                let (fp, fm) = (shift(h), shift(-h));
                (
                    fp.u.iter()
                        .zip(&fm.u)
                        .map(|(x, y)| (x - y) / (2.0 * h))
                        .collect(),
                    fp.v.iter()
                        .zip(&fm.v)
                        .map(|(x, y)| (x - y) / (2.0 * h))
                        .collect(),
                )
            })
            .collect();
        for i in 0..basis.len() {
            for j in i + 1..basis.len() {
                let w0 = omega(&basis[i].0, &basis[i].1, &basis[j].0, &basis[j].1);
                let w1 = omega(&push[i].0, &push[i].1, &push[j].0, &push[j].1);
                worst = worst.max((w1 - w0).abs());
            }
        }
    }
    worst
}

/// The same check on flat `R^4 = T*R^2` with coordinates `(x1; x2)`.
pub fn symplecticity_check_flat<F>(f: F, samples: &[[f64; 4]], h: f64) -> f64
where
    F: Fn([f64; 4]) -> [f64; 4],
{
    let mut worst: f64 = 0.0;
    for x in samples {
        let mut jac = [[0.0; 4]; 4];
        for k in 0..4 {
            let (mut xp, mut xm) = (*x, *x);
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm) = (f(xp), f(xm));
            for i in 0..4 {
                jac[i][k] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let col = |k: usize| [jac[0][k], jac[1][k], jac[2][k], jac[3][k]];
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (col(i), col(j));
                let w1 = a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1];
                let w0 = match (i, j) {
                    (0, 2) | (1, 3) => 1.0,
                    _ => 0.0,
                };
                worst = worst.max((w1 - w0).abs());
            }
        }
    }
    worst
}

/// Random points of `T*S^n` with `min_mu <= |v| <= max_mu`.
pub fn random_points(
    n: usize,
    count: usize,
    min_mu: f64,
    max_mu: f64,
    seed: u64,
) -> Vec<CotangentPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = CotangentPoint::retract(&u, &v);
            let target = rng.gen_range(min_mu..=max_mu);
            let m = p.mu().max(1e-300);
            CotangentPoint {
                u: p.u,
                v: p.v.iter().map(|x| x * target / m).collect(),
            }
        })
        .collect()
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ny = norm(&y);
        if ny > 1e-3 {
            return y.iter().map(|x| x / ny).collect();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryReport {
    pub n: usize,
    pub profile: ProfileKind,
    pub slices: usize,
    pub samples_per_slice: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Twists the fiber over `e_{n+1}` in `T*S^n` and compares it, slice by slice, with
/// the spun image of the twisted fiber of `T*S^1`.
pub fn surgery_isotopy_demo(
    n: usize,
    profile: &TwistProfile,
    slices: usize,
    samples: usize,
    seed: u64,
) -> SurgeryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ys: Vec<Vec<f64>> = if n == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..slices).map(|_| random_unit(n, &mut rng)).collect()
    };
    let mut worst: f64 = 0.0;
    let e = profile.epsilon;
    for y in &ys {
        for k in 0..samples {
            let t = -2.0 * e + 4.0 * e * (k as f64 + 0.5) / samples as f64;
            // the 2-dimensional twisted slice
            let slice = model_twist(
                &CotangentPoint {
                    u: vec![0.0, 1.0],
                    v: vec![t, 0.0],
                },
                profile,
            );
            let (th, tt) = circle_coordinates(&slice);
            let predicted = spin_point(th, tt, y).expect("unit y");
            let mut u0 = vec![0.0; n + 1];
            u0[n] = 1.0;
            let mut v0 = vec![0.0; n + 1];
            for i in 0..n {
                v0[i] = t * y[i];
            }
            let actual = model_twist(&CotangentPoint { u: u0, v: v0 }, profile);
            worst = worst.max(actual.distance(&predicted));
        }
    }
    SurgeryReport {
        n,
        profile: profile.kind,
        slices: ys.len(),
        samples_per_slice: samples,
        max_deviation: worst,
        pass: worst <= 1e-9,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub n: usize,
    pub samples: usize,
    pub epsilon: f64,
    pub step: f64,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            n: 2,
            samples: 100,
            epsilon: 0.5,
            step: 1e-5,
            seed: 7,
        }
    }
}

/// Runs every numerical check and reports the worst deviation of each.
pub fn oracle_suite(opts: &SuiteOptions) -> Result<Vec<OracleResult>, GeomError> {
    let plateau = TwistProfile::new(opts.epsilon, ProfileKind::Plateau)?;
    let sloped = TwistProfile::new(opts.epsilon, ProfileKind::Sloped)?;
    let e = opts.epsilon;
    let n = opts.n.max(1);
    let mut out = Vec::new();
    let mut push = |name: &str, dev: f64, tol: f64| {
        out.push(OracleResult {
            name: name.into(),
            max_deviation: dev,
            tolerance: tol,
            pass: dev <= tol,
        });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pts = random_points(n, opts.samples, 0.05, 2.0, opts.seed);

    let mut dev: f64 = 0.0;
    for p in &pts {
        let t = rng.gen_range(-10.0..10.0);
        dev = dev.max((circle_action(t, p)?.mu() - p.mu()).abs());
    }
    push("circle action preserves mu", dev, 1e-12);

    let mut dev: f64 = 0.0;
    for p in &pts {
        let q = circle_action(PI, p)?;
        let neg = CotangentPoint {
            u: p.u.iter().map(|x| -x).collect(),
            v: p.v.iter().map(|x| -x).collect(),
        };
        dev = dev.max(q.distance(&neg));
        dev = dev.max(circle_action(2.0 * PI, p)?.distance(p));
    }
    push("circle action at pi and 2pi", dev, 1e-12);

    let mut dev: f64 = 0.0;
    for p in random_points(n, opts.samples, 0.0, 0.0, opts.seed + 1) {
        let q = model_twist(
            &CotangentPoint {
                u: p.u.clone(),
                v: vec![0.0; n + 1],
            },
            &plateau,
        );
        let exact = q.u.iter().zip(&p.u).all(|(a, b)| *a == -b) && q.v.iter().all(|x| *x == 0.0);
        if !exact {
            dev = f64::INFINITY;
        }
    }
    push("twist is antipodal on the zero section", dev, 0.0);

    let mut dev: f64 = 0.0;
    for p in random_points(n, opts.samples, e, 3.0 * e, opts.seed + 2) {
        dev = dev.max(model_twist(&p, &plateau).distance(&p));
    }
    push("twist is the identity beyond eps", dev, 0.0);

    let mut dev: f64 = 0.0;
    for p in random_points(n, opts.samples, 1e-3, e / 2.0, opts.seed + 3) {
        let neg = CotangentPoint {
            u: p.u.iter().map(|x| -x).collect(),
            v: p.v.iter().map(|x| -x).collect(),
        };
        dev = dev.max(model_twist(&p, &plateau).distance(&neg));
    }
    push("plateau twist is antipodal below eps/2", dev, 1e-12);

    let near = random_points(n, opts.samples, 0.05, 1.5 * e, opts.seed + 4);
    push(
        "plateau twist is symplectic",
        symplecticity_check(|p| model_twist(p, &plateau), &near, opts.step),
        1e-6,
    );
    push(
        "sloped twist is symplectic",
        symplecticity_check(|p| model_twist(p, &sloped), &near, opts.step),
        1e-6,
    );
    push(
        "identity is symplectic",
        symplecticity_check(|p| p.clone(), &near, opts.step),
        1e-9,
    );
    let control = symplecticity_check(
        |p| CotangentPoint {
            u: p.u.clone(),
            v: p.v.iter().map(|x| 2.0 * x).collect(),
        },
        &near,
        opts.step,
    );
    push(
        "scaling control is detected",
        if control > 0.5 { 0.0 } else { 1.0 },
        0.0,
    );

    let mut dev: f64 = 0.0;
    for p in &pts {
        dev = dev.max(involution(&involution(p)).distance(p));
        let a = involution(&model_twist(p, &plateau));
        let b = model_twist(&involution(p), &plateau);
        dev = dev.max(a.distance(&b));
    }
    push(
        "involution squares to one and commutes with the twist",
        dev,
        1e-9,
    );

    let mut dev: f64 = 0.0;
    for p in &pts {
        let mut q = p.clone();
        for i in 2..=n {
            q.u[i] = 0.0;
            q.v[i] = 0.0;
        }
        let q = CotangentPoint::retract(&q.u, &q.v);
        dev = dev.max(involution(&q).distance(&q));
    }
    push("involution fixes the two-dimensional slice", dev, 0.0);

    let (c1, c2) = (1.0, 1.0);
    let flat: Vec<[f64; 4]> = (0..opts.samples)
        .map(|_| [0; 4].map(|_: i32| rng.gen_range(-1.2..1.2)))
        .collect();
    let mut dev: f64 = 0.0;
    for k in 0..opts.samples {
        let x = [0; 4].map(|_: i32| rng.gen_range(-3.0..3.0));
        let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (c1 + c2) * r > 2.0 {
            let y = hamiltonian_flow(x, rng.gen_range(0.0..1.0), c1, c2);
            dev = dev.max(
                x.iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        let small = [0; 4].map(|_: i32| rng.gen_range(-0.2..0.2));
        let q = hamiltonian_flow(small, 1.0, c1, c2);
        let h = rotate(small, PI / 2.0);
        dev = dev.max(
            q.iter()
                .zip(&h)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        let _ = k;
    }
    push(
        "flow is the identity outside its support and H_{pi/2} inside",
        dev,
        1e-12,
    );
    let mut s_dev: f64 = 0.0;
    for t in [0.25, 0.5, 1.0] {
        s_dev = s_dev.max(symplecticity_check_flat(
            |x| hamiltonian_flow(x, t, c1, c2),
            &flat,
            opts.step,
        ));
    }
    push("flow is symplectic", s_dev, 1e-6);

    for (name, prof) in [("plateau", &plateau), ("sloped", &sloped)] {
        let r = surgery_isotopy_demo(n, prof, 16, opts.samples, opts.seed + 5);
        push(
            &format!("spun slice matches the twisted fiber ({name})"),
            r.max_deviation,
            1e-9,
        );
    }
    Ok(out)
}
