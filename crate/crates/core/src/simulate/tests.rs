use super::*;
use crate::planar::{self, Side};
use proptest::prelude::*;
use std::f64::consts::PI;

fn unit() -> Circle {
    Circle::normalized()
}

fn opts() -> IntegratorOptions {
    IntegratorOptions::default()
}

#[test]
fn cylindrical_round_trip() {
    let s = CartesianState::new(0.5, [0.3, -0.4, 0.2], [0.1, 0.7, -0.3]);
    let c = CylindricalState::from_cartesian(&s);
    assert!((c.r - 0.5).abs() < 1e-15);
    let back = c.to_cartesian();
    for i in 0..3 {
        assert!((back.position[i] - s.position[i]).abs() < 1e-15);
        assert!((back.velocity[i] - s.velocity[i]).abs() < 1e-15);
    }
    let circle = unit();
    assert!((c.energy(&circle).unwrap() - s.energy(&circle).unwrap()).abs() < 1e-14);
}

#[test]
fn equilibrium_at_origin() {
    let s0 = CartesianState::at_rest([0.0; 3]);
    let traj = integrate_cartesian(&s0, &unit(), 10.0, &opts()).unwrap();
    assert_eq!(traj.termination, Termination::TEndReached);
    assert_eq!(traj.last().t, 10.0);
    assert!(traj.samples.iter().all(|s| s.position == [0.0; 3] && s.velocity == [0.0; 3]));
    assert_eq!(traj.max_energy_drift(), 0.0);
}

#[test]
fn stable_circular_orbit_keeps_radius() {
    let c = unit();
    let cd = planar::critical_data(&c).unwrap();
    let k = 1.5 * cd.k0;
    let (_, r2) = planar::critical_radii(k, &cd).unwrap().unwrap();
    let s0 = CartesianState::new(0.0, [r2, 0.0, 0.0], [0.0, k / r2, 0.0]);
    let traj = integrate_cartesian(&s0, &c, 100.0, &opts()).unwrap();
    let worst = traj
        .samples
        .iter()
        .map(|s| (s.position[0].hypot(s.position[1]) - r2).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
    assert!(traj.max_energy_drift() < 1e-8);
    // Secular drift of K at the default tolerances; tighter runs shrink it
    // proportionally.
    assert!(traj.max_angular_momentum_drift() < 1e-9);
}

#[test]
fn radial_fall_inside_hits_circle_on_axis() {
    let c = unit();
    let s0 = CartesianState::new(0.0, [0.5, 0.0, 0.0], [0.1, 0.0, 0.0]);
    let traj = integrate_cartesian(&s0, &c, 50.0, &opts()).unwrap();
    assert_eq!(traj.termination, Termination::Collision);
    let rep = traj.collision.as_ref().unwrap();
    assert!(rep.t_collision.is_finite() && rep.t_collision > 0.0);
    assert!(rep.theta.abs() < 1e-12);
    assert!((rep.hit_point[0] - 1.0).abs() < 1e-12);
    assert!((rep.velocity_angle_to_circle - 90.0).abs() < 1e-9);
    assert!(rep.speed_increasing);
    assert_eq!(rep.side, Side::Inside);
    assert_eq!(traj.detect_collision().unwrap(), *rep);

    // Falling the other way through the centre.
    let s1 = CartesianState::new(0.0, [0.5, 0.0, 0.0], [-1.0, 0.0, 0.0]);
    let t1 = integrate_cartesian(&s1, &c, 50.0, &opts()).unwrap();
    let r1 = t1.collision.unwrap();
    assert!((r1.hit_point[0] + 1.0).abs() < 1e-12);
}

#[test]
fn non_colliding_trajectory_has_no_collision() {
    let traj = integrate_cartesian(&CartesianState::at_rest([0.0; 3]), &unit(), 1.0, &opts()).unwrap();
    assert!(matches!(traj.detect_collision(), Err(Error::State(_))));
    assert!(matches!(detect_collision(&[], &unit()), Err(Error::State(_))));
}

#[test]
fn reduced_plane_invariance_and_lift() {
    let c = unit();
    let s = CartesianState::new(0.0, [2.0, 0.0, 0.0], [0.05, 1.2, 0.0]);
    let o = opts().with_sample_dt(0.25);
    let cart = integrate_cartesian(&s, &c, 20.0, &o).unwrap();
    let red = integrate_reduced(&CylindricalState::from_cartesian(&s), &c, 20.0, &o).unwrap();
    assert_eq!(cart.samples.len(), red.samples.len());
    assert!(red.samples.iter().all(|s| s.position[2] == 0.0));
    for (a, b) in cart.samples.iter().zip(&red.samples) {
        assert_eq!(a.t, b.t);
        for i in 0..3 {
            assert!((a.position[i] - b.position[i]).abs() < 1e-7, "t = {}", a.t);
        }
    }
}

#[test]
fn reduced_rejects_axis_start() {
    let s0 = CylindricalState {
        t: 0.0,
        r: 0.0,
        z: 0.5,
        rdot: 0.0,
        zdot: 0.0,
        k: 0.0,
        phi: 0.0,
    };
    assert!(matches!(integrate_reduced(&s0, &unit(), 1.0, &opts()), Err(Error::Domain(_))));
}

#[test]
fn initial_point_on_circle_is_rejected() {
    let s0 = CartesianState::at_rest([1.0, 0.0, 0.0]);
    assert!(matches!(integrate_cartesian(&s0, &unit(), 1.0, &opts()), Err(Error::Domain(_))));
}

#[test]
fn failure_keeps_partial_trajectory() {
    let s0 = CartesianState::new(0.0, [0.5, 0.2, 0.1], [0.1, 0.0, 0.0]);
    // A huge span lifts the relative step floor above any usable step.
    match integrate_cartesian(&s0, &unit(), 1e14, &opts()) {
        Err(Error::IntegrationFailure { partial, .. }) => {
            assert_eq!(partial.termination, Termination::Failure);
            assert_eq!(partial.samples[0], s0);
        }
        other => panic!("expected failure, got {other:?}"),
    }
}

#[test]
fn collision_time_quadrature_matches_integrator() {
    let c = unit();
    let (r_p, k) = (0.4, 0.3);
    let orbit = normalized_inside_orbit(r_p, k, &c, &opts()).unwrap();
    let e = CartesianState::new(0.0, [0.0, r_p, 0.0], [-k / r_p, 0.0, 0.0]).energy(&c).unwrap();
    let t_q = time_to_collision_quadrature(r_p, e, k, Side::Inside, &c).unwrap();
    let t_i = orbit.forward.t_collision;
    assert!(((t_q - t_i) / t_i).abs() < 1e-5, "{t_q} vs {t_i}");
    assert!((orbit.backward.t_collision + t_i).abs() < 1e-8);
}

#[test]
fn collision_time_quadrature_edge_cases() {
    let c = unit();
    let e = planar::effective_potential(0.9, &planar::EffectiveParams::new(0.0, c), Side::Inside).unwrap();
    let near = time_to_collision_quadrature(1.0 - 1e-9, e + 1.0, 0.0, Side::Inside, &c).unwrap();
    assert!(near < 1e-8);
    assert!(time_to_collision_quadrature(0.5, e - 1.0, 0.0, Side::Inside, &c).is_err());

    // Outside with a barrier in the way.
    let cd = planar::critical_data(&c).unwrap();
    let k = 2.0 * cd.k0;
    let (_, r2) = planar::critical_radii(k, &cd).unwrap().unwrap();
    let u2 = planar::effective_potential(r2, &planar::EffectiveParams::new(k, c), Side::Outside).unwrap();
    assert!(time_to_collision_quadrature(r2, u2 + 1e-3, k, Side::Outside, &c).is_err());
    let over = cd.e_bar(k).unwrap().unwrap() + 0.5;
    let t = time_to_collision_quadrature(r2, over, k, Side::Outside, &c).unwrap();
    assert!(t > 0.0 && t.is_finite());
}

#[test]
fn normalized_orbit_is_even_and_convex() {
    let c = unit();
    let orbit = normalized_inside_orbit(0.5, 0.4, &c, &opts().with_sample_dt(2e-3)).unwrap();
    let f = orbit.forward.hit_point;
    let b = orbit.backward.hit_point;
    assert!((f[0] + b[0]).abs() < 1e-7 && (f[1] - b[1]).abs() < 1e-7, "{f:?} {b:?}");
    let shape = trajectory_shape_check(&orbit.trajectory).unwrap();
    assert!(shape.x_monotone);
    assert!(shape.evenness_defect < 1e-6, "{shape:?}");
    assert!(shape.min_second_difference > 0.0, "{shape:?}");
    assert!(shape.perigee_alignment < 1e-12);
}

#[test]
fn shape_check_rejects_radial_orbit() {
    let c = unit();
    let traj = integrate_cartesian(
        &CartesianState::new(0.0, [0.0, 0.5, 0.0], [0.0, 0.1, 0.0]),
        &c,
        10.0,
        &opts(),
    )
    .unwrap();
    assert!(trajectory_shape_check(&traj).is_err());
}

#[test]
fn stability_of_circular_orbits() {
    let c = unit();
    let cd = planar::critical_data(&c).unwrap();
    let (r1, r2) = planar::critical_radii(1.5 * cd.k0, &cd).unwrap().unwrap();
    let period = |r: f64| 2.0 * PI * r * r / planar::g(r, &c).unwrap().sqrt();

    let still = stability_probe(r2, [0.0; 4], &c, 5.0 * period(r2)).unwrap();
    assert!(still.excursion() < 1e-9, "{still:?}");
    let vertical = stability_probe(r2, [0.0, 1e-3, 0.0, 0.0], &c, 50.0 * period(r2)).unwrap();
    assert!(vertical.excursion() < 1e-2, "{vertical:?}");
    let unstable = stability_probe(r1, [1e-6, 0.0, 0.0, 0.0], &c, 50.0 * period(r1)).unwrap();
    assert!(unstable.excursion() > 0.1, "{unstable:?}");
}

#[test]
fn csv_round_trip_reproduces_summary() {
    let c = Circle::new(1.3, 0.2).unwrap();
    let s0 = CartesianState::new(0.0, [0.4, 0.1, 0.0], [0.3, 0.2, 0.0]);
    let traj = integrate_cartesian(&s0, &c, 30.0, &opts().with_sample_dt(0.1)).unwrap();
    assert_eq!(traj.termination, Termination::Collision);
    let mut buf = Vec::new();
    write_csv(&traj, &mut buf).unwrap();
    let back = read_csv(std::io::Cursor::new(&buf)).unwrap();
    assert_eq!(back, traj);
    assert_eq!(summarize(&back), summarize(&traj));
    assert!(read_csv(std::io::Cursor::new(b"t,x\n1,2\n".as_slice())).is_err());
}

#[test]
fn rescaled_arc_matches_direct_integration() {
    let from = Circle::with_mass(1.0, 2.0 * PI).unwrap();
    let to = Circle::with_mass(2.0, 2.0 * PI).unwrap();
    let s0 = CartesianState::new(0.0, [1.6, 0.1, 0.2], [0.1, 1.4, -0.05]);
    let (length, time) = potential::scaling_factors(&from, &to);
    let dt = 0.05;
    let a = integrate_cartesian(&s0, &from, 3.0, &opts().with_sample_dt(dt)).unwrap();
    let mapped = potential::rescale_solution(&a.samples, &from, &to);
    let t0 = mapped[0];
    let b = integrate_cartesian(&t0, &to, 3.0 * time, &opts().with_sample_dt(dt * time)).unwrap();
    assert!((length - 2.0).abs() < 1e-15);
    for (p, q) in mapped.iter().zip(&b.samples) {
        assert!((p.t - q.t).abs() < 1e-12 * time);
        for i in 0..3 {
            assert!((p.position[i] - q.position[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn invariant_subspaces() {
    let c = unit();
    let o = opts().with_sample_dt(0.1);
    let axis = integrate_cartesian(&CartesianState::new(0.0, [0.0, 0.0, 0.5], [0.0, 0.0, 0.3]), &c, 10.0, &o).unwrap();
    assert!(axis.samples.iter().all(|s| s.position[0] == 0.0 && s.position[1] == 0.0));
    let plane = integrate_cartesian(&CartesianState::new(0.0, [1.5, 0.2, 0.0], [0.0, 0.8, 0.0]), &c, 10.0, &o).unwrap();
    assert!(plane.samples.iter().all(|s| s.position[2] == 0.0));
    let a = PI / 6.0;
    let (sa, ca) = a.sin_cos();
    let s0 = CartesianState::new(0.0, [1.4 * ca, 1.4 * sa, 0.3], [0.2 * ca, 0.2 * sa, 0.4]);
    let vert = integrate_cartesian(&s0, &c, 10.0, &o).unwrap();
    let off = vert
        .samples
        .iter()
        .map(|s| (-sa * s.position[0] + ca * s.position[1]).abs())
        .fold(0.0, f64::max);
    assert!(off < 1e-10, "{off}");
}

#[test]
fn step_limit_stops_gracefully() {
    let c = unit();
    let s0 = CartesianState::new(0.0, [1.8, 0.0, 0.0], [0.0, 0.75, 0.0]);
    let traj = integrate_cartesian(&s0, &c, 1e6, &opts().with_max_steps(100)).unwrap();
    assert_eq!(traj.termination, Termination::StepLimit);
    assert_eq!(traj.stats.accepted, 100);
    assert_eq!(traj.samples.len(), 101);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn integrator_rotation_equivariance(angle in 0.0f64..(2.0 * PI)) {
        let c = unit();
        let s0 = CartesianState::new(0.0, [1.7, 0.2, 0.3], [0.05, 0.7, -0.1]);
        let o = opts().with_sample_dt(0.5);
        let a = integrate_cartesian(&s0, &c, 10.0, &o).unwrap();
        let b = integrate_cartesian(&s0.rotated_z(angle), &c, 10.0, &o).unwrap();
        for (p, q) in a.samples.iter().zip(&b.samples) {
            let r = p.rotated_z(angle);
            for i in 0..3 {
                prop_assert!((r.position[i] - q.position[i]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn unattainable_tolerances_are_rejected() {
    let s0 = CartesianState::new(0.0, [0.5, 0.0, 0.0], [0.0, 0.1, 0.0]);
    let tight = opts().with_tolerances(1e-30, 1e-300);
    assert!(matches!(integrate_cartesian(&s0, &unit(), 1.0, &tight), Err(Error::Domain(_))));
    let edge = opts().with_tolerances(MIN_RTOL, 1e-15);
    assert!(integrate_cartesian(&s0, &unit(), 0.1, &edge).is_ok());
}
