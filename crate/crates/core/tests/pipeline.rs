use num_complex::Complex64;
use solenoid::{
    attractor_sample, classify_nw, cross_section, decode, encode, lift_periodic_orbit, shift, CircleMap, CirclePoint,
    Itinerary, NwKind, SkewMap, TorusPoint,
};

fn maps() -> Vec<SkewMap> {
    vec![
        SkewMap::new(CircleMap::linear(2).unwrap(), 0.2).unwrap(),
        SkewMap::new(CircleMap::linear(3).unwrap(), 0.1).unwrap(),
        SkewMap::new(CircleMap::shub(2, 0.2).unwrap(), 0.2).unwrap(),
        SkewMap::new(CircleMap::bump(2, 0.5, 0.2).unwrap(), 0.2).unwrap(),
    ]
}

#[test]
fn attractor_samples_code_and_decode_back() {
    for map in maps() {
        for p in attractor_sample(&map, &TorusPoint::new(0.31, Complex64::new(0.1, 0.2)), 40, 30).unwrap() {
            let code = encode(&map, &p, 12).unwrap();
            let q = decode(&map, &code).unwrap();
            assert!(q.distance(&p) <= 2.0 * map.contraction().powi(12) + 1e-12);
        }
    }
}

#[test]
fn image_point_lies_in_its_cross_section_disk() {
    for map in maps() {
        let t0 = CirclePoint::new(0.43);
        let choices = [1usize, 0, 1, 1, 0];
        let it = Itinerary::from_branch_choices(map.base(), t0, &choices).unwrap();
        let p = decode(&map, &it).unwrap();
        let section = cross_section(&map, t0, 5).unwrap();
        let hits = section.disks().filter(|d| (d.center - p.z).norm() <= section.radius() + 1e-12).count();
        assert_eq!(hits, 1);
    }
}

#[test]
fn shift_tracks_the_dynamics() {
    let map = &maps()[2];
    let it = Itinerary::from_branch_choices(map.base(), CirclePoint::new(0.7), &[0, 1, 1, 0, 1, 0, 0, 1]).unwrap();
    let p = decode(map, &it).unwrap();
    let lhs = decode(map, &shift(map.base(), &it)).unwrap();
    assert!(lhs.distance(&map.apply(&p)) < 1e-12);
}

#[test]
fn bump_sink_lifts_to_the_fiber_fixed_point() {
    let map = &maps()[3];
    let nw = classify_nw(map.base(), 4, 6).unwrap();
    assert_eq!(nw.kind, NwKind::CantorPlusOrbits);
    let lifted = lift_periodic_orbit(map, &nw.attracting_orbits[0]);
    assert!((lifted.points[0].z - Complex64::new(0.625, 0.0)).norm() < 1e-12);
}
