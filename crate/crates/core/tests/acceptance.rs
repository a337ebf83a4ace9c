//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use gyroless::dynamics::{
    analytic_type1, classify_trajectory, distordance, simulate, type4_axis_track, type4_params,
    ClassifyTolerances, InertiaModel, RigidBodyState, TimeGrid, TorqueModel, TrajectoryClass,
};
use gyroless::geometry::{Mat3, Rotation, Vec3};
use gyroless::harness::{observe_scenario, Scenario};
use gyroless::ltv::{estimate_decay, induced_norm, transition_matrix};
use gyroless::measurement::{measure_trajectory, MeasurementSeries, ReferenceVector};
use gyroless::observer::{
    disturbance_norm, disturbance_norm_bound, ErrorState, ObserverConfig, ObserverState,
};
use gyroless::pe::{excitation_gramian, pe_margin, predict_pe, projection_average, PeVerdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bundled(name: &str) -> Scenario {
    Scenario::bundled(name).expect("bundled scenario loads")
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    let axis = random_unit(rng);
    Rotation::about_axis(&axis, rng.random_range(0.0..TAU)).unwrap()
}

fn conservation() -> Outcome {
    let s = bundled("cubesat-type3");
    let start = Instant::now();
    let traj = simulate(&s.inertia, &s.torque, &s.initial, &s.grid).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let j = &s.inertia;
    let e0 = j.kinetic_form(&s.initial.omega);
    let m0 = s.initial.angular_momentum(j);
    let (mut de, mut dm) = (0.0f64, 0.0f64);
    for st in &traj.states {
        de = de.max((j.kinetic_form(&st.omega) - e0).abs() / e0);
        let m = st.angular_momentum(j);
        for i in 0..3 {
            dm = dm.max((m[i] - m0[i]).abs() / m0.norm());
        }
    }
    check(
        de <= 1e-9 && dm <= 1e-9 && elapsed < Duration::from_secs(10) && traj.len() == 6001,
        format!(
            "energy drift {de:.2e}, momentum drift {dm:.2e}, {} samples in {elapsed:.2?}",
            traj.len()
        ),
    )
}

fn integrator_order() -> Outcome {
    let s = bundled("cubesat-type3");
    let horizon = 10.0;
    let finals: Vec<RigidBodyState> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            let grid = TimeGrid::new(dt, horizon).unwrap();
            *simulate(&s.inertia, &s.torque, &s.initial, &grid)
                .unwrap()
                .states
                .last()
                .unwrap()
        })
        .collect();
    let diff = |a: &RigidBodyState, b: &RigidBodyState| {
        ((a.attitude.matrix() - b.attitude.matrix()).norm_squared()
            + (a.omega - b.omega).norm_squared())
        .sqrt()
    };
    let order = (diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2])).log2();
    check(
        (3.9..=4.1).contains(&order),
        format!("Richardson order estimate {order:.4}"),
    )
}

fn closed_forms() -> Outcome {
    // planar rotation about a principal axis from a random attitude
    let j = InertiaModel::from_kg_cm2(87.0, 83.0, 37.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r0 = random_rotation(&mut rng);
    let omega0 = Vec3::new(0.0, 0.0, 1.2);
    let grid = TimeGrid::new(0.01, 10.0).unwrap();
    let traj = simulate(
        &j,
        &TorqueModel::Zero,
        &RigidBodyState::new(r0, omega0),
        &grid,
    )
    .unwrap();
    let planar = analytic_type1(&j, &r0, &omega0).unwrap();
    let type1_err = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.attitude.matrix() - planar.at(*t).matrix()).norm())
        .fold(0.0, f64::max);

    // symmetry-axis track of an axisymmetric body
    let s = bundled("symmetric-type4");
    let traj = simulate(&s.inertia, &s.torque, &s.initial, &s.grid).unwrap();
    let params = type4_params(&s.inertia, &s.initial.omega).unwrap();
    let e3 = s.initial.angular_momentum(&s.inertia).normalize();
    let e1 = e3.cross(&Vec3::new(1.0, 0.0, 0.0)).normalize();
    let e2 = e3.cross(&e1);
    let frame = Mat3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]);
    let axis = params.symmetry_axis;
    let track: Vec<Vec3> = traj
        .states
        .iter()
        .map(|st| frame * st.attitude.matrix().column(axis))
        .collect();
    let t1 = -track[0].y.atan2(track[0].x) / params.xi1;
    let type4_err = traj
        .times
        .iter()
        .zip(&track)
        .map(|(t, v)| (v - type4_axis_track(&params, *t, t1)).norm())
        .fold(0.0, f64::max);
    check(
        type1_err < 1e-8 && type4_err < 1e-6,
        format!("planar rotation max Frobenius error {type1_err:.2e}; axisymmetric axis track max error {type4_err:.2e}"),
    )
}

fn great_circle_series() -> MeasurementSeries {
    let n = 2000;
    let dt = 1.0 / n as f64;
    let times = (0..=n).map(|i| i as f64 * dt).collect();
    let values = (0..=n)
        .map(|i| {
            let phi = TAU * i as f64 * dt;
            Vec3::new(phi.cos(), 0.6 * phi.sin(), 0.8 * phi.sin())
        })
        .collect();
    MeasurementSeries::new(times, values).unwrap()
}

fn gramian_identities() -> Outcome {
    let s = bundled("cubesat-type3");
    let traj = simulate(&s.inertia, &s.torque, &s.initial, &s.grid).unwrap();
    let series = measure_trajectory(&traj, &s.reference);
    let (mut identity, mut trace) = (0.0f64, 0.0f64);
    for start in [0.0, 7.5, 21.3, 40.0] {
        let g = excitation_gramian(&series, start, 10.0).unwrap();
        let p = projection_average(&series, start, 10.0).unwrap();
        identity = identity.max((g - (Mat3::identity() - p)).amax());
        trace = trace.max((g.trace() - 2.0).abs());
    }
    let circle = great_circle_series();
    let mu = pe_margin(&circle, 1.0, 1.0).unwrap().mu_empirical;
    check(
        identity <= 1e-12 && trace <= 1e-12 && (mu - 0.5).abs() <= 0.005,
        format!("identity residual {identity:.2e}, trace residual {trace:.2e}, great-circle λ_min {mu:.6}"),
    )
}

fn empirical_verdict(
    j: &InertiaModel,
    r0: Rotation,
    omega0: Vec3,
    reference: &ReferenceVector,
    grid: &TimeGrid,
    window: f64,
    stride: f64,
) -> (PeVerdict, f64) {
    let traj = simulate(
        j,
        &TorqueModel::Zero,
        &RigidBodyState::new(r0, omega0),
        grid,
    )
    .unwrap();
    let report = pe_margin(&measure_trajectory(&traj, reference), window, stride).unwrap();
    (report.verdict, report.mu_empirical)
}

fn pe_verdicts() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // the measured direction never moves
    let s = bundled("cubesat-type1-aligned");
    let traj = simulate(&s.inertia, &s.torque, &s.initial, &s.grid).unwrap();
    let still = pe_margin(&measure_trajectory(&traj, &s.reference), TAU, 0.5).unwrap();
    ok &= still.mu_empirical < 1e-9;
    notes.push(format!("fixed direction μ {:.1e}", still.mu_empirical));

    // planar rotation with a tilted reference: T is the rotation period
    let s = bundled("cubesat-type1-tilted");
    let w = s.initial.omega.norm();
    let u = (s.initial.attitude * s.initial.omega) / w;
    let a1 = u.dot(s.reference.vector());
    let expected = (1.0 - a1 * a1).min((1.0 + a1 * a1) / 2.0);
    let traj = simulate(&s.inertia, &s.torque, &s.initial, &s.grid).unwrap();
    let tilted = pe_margin(&measure_trajectory(&traj, &s.reference), TAU / w, 0.5).unwrap();
    let rel = (tilted.mu_empirical - expected).abs() / expected;
    ok &= rel <= 0.02;
    notes.push(format!(
        "planar μ {:.5} vs {expected:.5}",
        tilted.mu_empirical
    ));

    let generic = observe_scenario(&bundled("cubesat-type3")).unwrap();
    let verdict = generic.pe.as_ref().map(|p| p.verdict);
    ok &= verdict == Some(PeVerdict::Pe);
    notes.push(format!("cubesat-type3 {verdict:?}"));

    // predictor against measurement on random free rotations
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = TimeGrid::new(0.01, 60.0).unwrap();
    let mut agree = 0;
    let total = 100;
    for _ in 0..total {
        let mut m: [f64; 3] = [
            rng.random_range(20.0..100.0),
            rng.random_range(20.0..100.0),
            rng.random_range(20.0..100.0),
        ];
        m.sort_by(|a, b| b.total_cmp(a));
        if m[0] > m[1] + m[2] {
            m[0] = 0.9 * (m[1] + m[2]);
        }
        let j = InertiaModel::from_kg_cm2(m[0], m[1], m[2]).unwrap();
        let r0 = random_rotation(&mut rng);
        let omega0 = random_unit(&mut rng) * rng.random_range(0.5..1.5);
        let reference = ReferenceVector::new(random_unit(&mut rng)).unwrap();
        let predicted = predict_pe(&j, &r0, &omega0, &reference, &TorqueModel::Zero)
            .unwrap()
            .verdict();
        let (measured, _) = empirical_verdict(&j, r0, omega0, &reference, &grid, 20.0, 2.0);
        if predicted == measured {
            agree += 1;
        }
    }

    // the measure-zero configurations where excitation fails
    let cubesat = InertiaModel::from_kg_cm2(87.0, 83.0, 37.0).unwrap();
    let momentum_reference = |j: &InertiaModel, r0: &Rotation, w: &Vec3| {
        ReferenceVector::normalized(r0 * &j.apply(w)).unwrap()
    };
    let mut singular = Vec::new();
    {
        let w0 = Vec3::new(1.0, 0.0, 0.0);
        let r0 = Rotation::identity();
        singular.push((
            cubesat,
            r0,
            w0,
            momentum_reference(&cubesat, &r0, &w0),
            grid,
            20.0,
        ));
    }
    {
        let r0 = random_rotation(&mut rng);
        let w0 = Vec3::new(0.0, 0.0, 0.9);
        singular.push((
            cubesat,
            r0,
            w0,
            momentum_reference(&cubesat, &r0, &w0),
            grid,
            20.0,
        ));
    }
    {
        let j = InertiaModel::from_kg_cm2(87.0, 87.0, 37.0).unwrap();
        let r0 = random_rotation(&mut rng);
        let w0 = Vec3::new(0.6, 0.8, 0.0);
        singular.push((j, r0, w0, momentum_reference(&j, &r0, &w0), grid, 20.0));
    }
    {
        let g = (37.0f64 * (83.0 - 37.0) / (87.0 * (87.0 - 83.0))).sqrt();
        let w0 = Vec3::new(g * 0.5, 0.5, 0.5);
        let r0 = random_rotation(&mut rng);
        let long = TimeGrid::new(0.01, 100.0).unwrap();
        let class = classify_trajectory(&cubesat, &w0, &ClassifyTolerances::default());
        if class != TrajectoryClass::Type2 {
            notes.push(format!("separatrix start classified {}", class.label()));
            ok = false;
        }
        singular.push((
            cubesat,
            r0,
            w0,
            momentum_reference(&cubesat, &r0, &w0),
            long,
            2.0,
        ));
    }
    let mut singular_agree = 0;
    for (j, r0, w0, reference, grid, window) in &singular {
        let predicted = predict_pe(j, r0, w0, reference, &TorqueModel::Zero)
            .unwrap()
            .verdict();
        let (measured, mu) =
            empirical_verdict(j, *r0, *w0, reference, grid, *window, *window / 10.0);
        if predicted == PeVerdict::NotPe && measured == PeVerdict::NotPe {
            singular_agree += 1;
        } else {
            notes.push(format!(
                "singular case predicted {predicted:?}, measured {measured:?} (μ {mu:.2e})"
            ));
        }
    }
    ok &= agree == total && singular_agree == singular.len();
    notes.push(format!(
        "predictor agreement {agree}/{total} random, {singular_agree}/{} singular",
        singular.len()
    ));
    check(ok, notes.join("; "))
}

fn observer_convergence() -> Outcome {
    let s = bundled("cubesat-type3");
    let run = observe_scenario(&s).unwrap();
    let rel = run.summary.errors.final_relative_error;

    let a0 = s.initial.attitude.transpose_mul(s.reference.vector());
    let mut exact = s.clone();
    exact.observer = ObserverConfig::new(1.0).unwrap().with_init(ObserverState {
        a_hat: a0,
        omega_hat: s.initial.omega,
    });
    let exact = observe_scenario(&exact).unwrap();
    let worst = exact
        .run
        .observer
        .errors
        .as_ref()
        .unwrap()
        .iter()
        .map(ErrorState::norm)
        .fold(0.0, f64::max);
    check(
        rel < 1e-3 && worst < 1e-9,
        format!("final |ω̃|/|ω(0)| {rel:.2e}; exact start max |X̃| {worst:.2e}"),
    )
}

fn non_pe_bias() -> Outcome {
    let run = observe_scenario(&bundled("cubesat-type1-aligned")).unwrap();
    let errors = run.run.observer.errors.as_ref().unwrap();
    let first = errors[0].omega_tilde;
    let last = errors[errors.len() - 1].omega_tilde;
    let second_last = errors[errors.len() - 101].omega_tilde;
    let slope = (last.x - second_last.x)
        / (run.run.trajectory.times[errors.len() - 1]
            - run.run.trajectory.times[errors.len() - 101]);
    check(
        last.y.abs() < 1e-4
            && last.z.abs() < 1e-4
            && last.x.abs() > 0.1 * first.x.abs()
            && slope.abs() < 1e-6,
        format!(
            "end ω̃ = ({:.3e}, {:.1e}, {:.1e}), ω̃1(0) {:.3}, terminal slope {slope:.1e} rad/s²",
            last.x, last.y, last.z, first.x
        ),
    )
}

fn noise_behavior() -> Outcome {
    let s = bundled("cubesat-type3-noisy");
    let rms = observe_scenario(&s)
        .unwrap()
        .summary
        .errors
        .steady_state_rms_relative_error;
    // noise-driven residual: observer started on the true state
    let a0 = s.initial.attitude.transpose_mul(s.reference.vector());
    let residual = |k: f64| {
        let mut t = s.clone();
        t.observer = ObserverConfig::new(k).unwrap().with_init(ObserverState {
            a_hat: a0,
            omega_hat: s.initial.omega,
        });
        observe_scenario(&t)
            .unwrap()
            .summary
            .errors
            .steady_state_rms_relative_error
    };
    let (low, high) = (residual(0.2), residual(5.0));
    check(
        (0.01..=0.15).contains(&rms) && low < high,
        format!(
            "k=1 steady-state RMS {:.2}%; residual k=0.2 {:.2}% vs k=5 {:.2}%",
            rms * 100.0,
            low * 100.0,
            high * 100.0
        ),
    )
}

fn disturbance_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let bodies = [
        InertiaModel::from_kg_cm2(87.0, 83.0, 37.0).unwrap(),
        InertiaModel::new(3.0, 2.0, 1.5).unwrap(),
        InertiaModel::new(1.0, 0.55, 0.5).unwrap(),
    ];
    let mut violations = 0;
    let mut tightest = 0.0f64;
    let n = 100_000;
    for i in 0..n {
        let j = &bodies[i % bodies.len()];
        let k = [0.5, 1.0, 2.0][i % 3];
        let omega_max = rng.random_range(0.1..5.0);
        let omega = random_unit(&mut rng) * rng.random_range(0.0..omega_max);
        let err = ErrorState {
            a_tilde: random_unit(&mut rng) * rng.random_range(0.0..2.0),
            omega_tilde: random_unit(&mut rng) * rng.random_range(0.0..3.0 * omega_max),
        };
        let xi = disturbance_norm(j, &omega, &(omega - err.omega_tilde), k);
        let bound = disturbance_norm_bound(&err, k, distordance(j), omega_max);
        if xi > bound {
            violations += 1;
        } else if bound > 0.0 {
            tightest = tightest.max(xi / bound);
        }
    }
    check(
        violations == 0,
        format!("{violations} violations in {n} samples, max |ξ|/bound {tightest:.3}"),
    )
}

fn ltv_decay() -> Outcome {
    let s = bundled("cubesat-type3");
    let traj = simulate(&s.inertia, &s.torque, &s.initial, &s.grid).unwrap();
    let series = measure_trajectory(&traj, &s.reference);
    let (k, window) = (0.5, 5.0);
    let est = estimate_decay(&series, k, window, 0.5).map_err(|e| e.to_string())?;
    let mut worst_ratio = 0.0f64;
    for n in 1..=5 {
        let phi = transition_matrix(&series, k, 0.0, n as f64 * window)
            .unwrap()
            .phi;
        worst_ratio = worst_ratio.max(induced_norm(&phi) / est.c_hat.powf(n as f64 / 2.0));
    }
    let still = bundled("cubesat-type1-aligned");
    let traj = simulate(&still.inertia, &still.torque, &still.initial, &still.grid).unwrap();
    let fixed =
        estimate_decay(&measure_trajectory(&traj, &still.reference), k, window, 0.5).unwrap();
    check(
        est.c_hat < 1.0 && worst_ratio <= 1.0 + 1e-6 && fixed.c_hat >= 1.0 - 1e-6,
        format!(
            "PE series c_hat {:.4}, max ‖Φ(NT)‖/c_hat^(N/2) {worst_ratio:.4}; fixed direction c_hat {:.9}",
            est.c_hat, fixed.c_hat
        ),
    )
}

fn distordance_values() -> Outcome {
    let cubesat = distordance(&InertiaModel::from_kg_cm2(87.0, 83.0, 37.0).unwrap());
    let cube = distordance(&InertiaModel::new(2.0, 2.0, 2.0).unwrap());
    // box l×l×L with L = 2l: moments ∝ (l²+L², l²+L², 2l²) = (5, 5, 2)
    let slab = distordance(&InertiaModel::new(5.0, 5.0, 2.0).unwrap());
    check(
        (cubesat - 50.0 / 83.0).abs() <= 1e-12 && cube == 0.0 && slab == 3.0 / 5.0,
        format!("cubesat {cubesat:.15}, cube {cube}, box {slab}"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("conservation of energy and momentum", conservation),
        ("integrator order", integrator_order),
        ("closed-form trajectories", closed_forms),
        ("excitation Gramian identities", gramian_identities),
        ("excitation verdicts and predictor", pe_verdicts),
        ("noise-free observer convergence", observer_convergence),
        ("bias without excitation", non_pe_bias),
        ("noise behavior", noise_behavior),
        ("disturbance bound", disturbance_bound),
        ("LTV window decay", ltv_decay),
        ("distordance", distordance_values),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
