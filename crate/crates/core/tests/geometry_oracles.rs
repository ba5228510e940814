use mcflab_core::geometry::{
    mean_curvature_graph, second_fundamental_norm, GraphPatch, PatchDomain,
};
use std::f64::consts::PI;

const R: f64 = 1.0;

fn hemisphere(h: f64, domain: PatchDomain) -> GraphPatch {
    GraphPatch::from_fn(vec![0.0, 0.0], 0.5 * R, h, domain, |x| {
        (R * R - x[0] * x[0] - x[1] * x[1]).sqrt()
    })
    .unwrap()
}

/// Largest nodal errors of `|H|` and `|A|` against the sphere values.
fn max_errors(p: &GraphPatch) -> (f64, f64) {
    let (mut eh, mut ea) = (0.0f64, 0.0f64);
    for i in p.active_nodes() {
        let df = p.gradient(i).unwrap();
        let d2 = p.hessian(i).unwrap();
        let hm = mean_curvature_graph(&df, &d2).unwrap();
        let a = second_fundamental_norm(&df, &d2).unwrap();
        eh = eh.max((hm.abs() - 2.0 / R).abs());
        ea = ea.max((a - 2f64.sqrt() / R).abs());
    }
    (eh, ea)
}

#[test]
fn hemisphere_curvatures_within_one_percent() {
    let p = hemisphere(R / 200.0, PatchDomain::Box);
    let (eh, ea) = max_errors(&p);
    assert!(eh / (2.0 / R) < 0.01, "H rel err {}", eh / 2.0);
    assert!(ea / (2f64.sqrt() / R) < 0.01, "A rel err {ea}");
}

#[test]
fn hemisphere_mean_curvature_points_down() {
    let p = hemisphere(R / 100.0, PatchDomain::Ball);
    let apex = p.flat_index(&[50, 50]);
    let hm = mean_curvature_graph(&p.gradient(apex).unwrap(), &p.hessian(apex).unwrap()).unwrap();
    assert!((hm + 2.0 / R).abs() < 1e-3);
}

#[test]
fn hemisphere_second_order_convergence() {
    let errs: Vec<(f64, f64)> = [100.0, 200.0, 400.0]
        .iter()
        .map(|k| max_errors(&hemisphere(R / k, PatchDomain::Box)))
        .collect();
    for w in errs.windows(2) {
        let oh = (w[0].0 / w[1].0).log2();
        let oa = (w[0].1 / w[1].1).log2();
        assert!(oh >= 1.9, "H order {oh}");
        assert!(oa >= 1.9, "A order {oa}");
    }
}

#[test]
fn spherical_cap_area() {
    let p = hemisphere(R / 200.0, PatchDomain::Ball);
    let a = 0.5 * R;
    let cap = 2.0 * PI * R * (R - (R * R - a * a).sqrt());
    let got = p.integrate_over_graph(|_, _| 1.0);
    assert!((got / cap - 1.0).abs() < 5e-3, "{got} vs {cap}");
    let s = p.sample();
    assert!((s.total_weight() - got).abs() <= 1e-12 * got);
    for nu in &s.normals {
        let l: f64 = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((l - 1.0).abs() < 1e-12);
    }
}

#[test]
fn flat_sample() {
    let p = GraphPatch::from_fn(vec![0.0, 0.0], 1.0, 0.05, PatchDomain::Ball, |_| 0.25).unwrap();
    let s = p.sample();
    assert!(s.normals.iter().all(|n| (n[2] - 1.0).abs() < 1e-24 && n[0].abs() < 1e-12));
    assert!(s.curvature.iter().all(|&a| a < 1e-12));
    assert!(s.weights.iter().all(|&w| w > 0.0));
    assert!((s.total_weight() - PI).abs() < 1e-12);
}
