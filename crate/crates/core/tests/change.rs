mod common;

use footprint_core::change::{adjusted_totals, build_change_grid};
use footprint_core::eval::{count_in_windows, fit_count_adjustment, CountWindow};
use footprint_core::geo::{Footprint, FootprintSet, Polygon};
use footprint_core::rng::XorShift64Star;

fn random_set(rng: &mut XorShift64Star, n: usize, extent: f64, prefix: &str) -> FootprintSet {
    let fps = (0..n)
        .map(|k| {
            let (x, y) = (rng.uniform(0.0, extent), rng.uniform(0.0, extent));
            let poly = if k % 4 == 0 {
                common::star(rng, x, y, 4.0, 12.0, 6)
            } else {
                // snapped so some rectangles sit exactly on cell borders
                let (x, y) = ((x / 50.0).round() * 50.0, (y / 50.0).round() * 50.0 - 5.0);
                Polygon::rect(x, y, x + rng.uniform(5.0, 15.0), y + rng.uniform(5.0, 15.0))
            };
            Footprint::new(format!("{prefix}{k}"), poly)
        })
        .collect();
    FootprintSet::new("TM:36", fps).unwrap()
}

#[test]
fn cell_counts_match_pairwise_oracle() {
    let mut rng = XorShift64Star::new(61);
    let t0 = random_set(&mut rng, 300, 1800.0, "a");
    let t1 = random_set(&mut rng, 350, 1800.0, "b");
    let g = build_change_grid(&t0, &t1, 500.0).unwrap();
    assert_eq!(g.cells.len(), g.cols * g.rows);
    assert_eq!(g.origin_x % 500.0, 0.0);
    let (mut s0, mut s1) = (0, 0);
    for c in &g.cells {
        let cell = g.cell_polygon(c.i, c.j);
        let n0 = t0.polygons().filter(|p| common::touches(p, &cell)).count();
        let n1 = t1.polygons().filter(|p| common::touches(p, &cell)).count();
        assert_eq!((c.count_t0, c.count_t1), (n0, n1), "cell ({}, {})", c.i, c.j);
        assert_eq!(c.delta, n1 as i64 - n0 as i64);
        s0 += n0;
        s1 += n1;
    }
    assert_eq!((g.audit.cell_sum_t0, g.audit.cell_sum_t1), (s0, s1));
    assert_eq!((g.audit.footprints_t0, g.audit.footprints_t1), (300, 350));
    assert!(s0 >= 300 && s1 >= 350);
    for p in t0.polygons().chain(t1.polygons()) {
        let bb = p.bbox();
        assert!(bb.min_x >= g.origin_x && bb.min_y >= g.origin_y);
        assert!(bb.max_x <= g.origin_x + g.cols as f64 * 500.0);
        assert!(bb.max_y <= g.origin_y + g.rows as f64 * 500.0);
    }
}

#[test]
fn swapping_epochs_negates_delta() {
    let mut rng = XorShift64Star::new(62);
    let a = random_set(&mut rng, 120, 1200.0, "a");
    let b = random_set(&mut rng, 80, 1200.0, "b");
    let (ab, ba) = (
        build_change_grid(&a, &b, 300.0).unwrap(),
        build_change_grid(&b, &a, 300.0).unwrap(),
    );
    for (x, y) in ab.cells.iter().zip(&ba.cells) {
        assert_eq!(x.delta, -y.delta);
    }
}

#[test]
fn mixed_crs_is_rejected() {
    let a = FootprintSet::new("TM:36", vec![Footprint::new("a", Polygon::rect(0.0, 0.0, 1.0, 1.0))]).unwrap();
    let mut b = a.clone();
    b.crs_tag = "TM:33".into();
    assert!(build_change_grid(&a, &b, 100.0).is_err());
    assert!(build_change_grid(&a, &a, 0.0).is_err());
}

#[test]
fn adjustment_recovers_an_undercount() {
    // 29 windows make the fit noisy, so judge the average over scenes
    let errs: Vec<f64> = (0..20).map(undercount_case).collect();
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    assert!(mean < 0.03, "mean relative error {mean}");
    assert!(errs.iter().all(|&e| e < 0.08), "{errs:?}");
}

fn undercount_case(seed: u64) -> f64 {
    let mut rng = XorShift64Star::new(seed);
    let extent = 4000.0;
    let truth: Vec<Footprint> = (0..12000)
        .map(|k| {
            // density rises towards the north-east corner
            let x = (extent - 10.0) * rng.next_f64().sqrt();
            let y = (extent - 10.0) * rng.next_f64().sqrt();
            Footprint::new(format!("t{k}"), Polygon::rect(x, y, x + 8.0, y + 8.0))
        })
        .collect();
    // a detector that misses about a third of the buildings
    let found: Vec<Footprint> = truth.iter().filter(|_| rng.next_f64() > 0.35).cloned().collect();
    let truth = FootprintSet::new("TM:36", truth).unwrap();
    let found = FootprintSet::new("TM:36", found).unwrap();
    let windows: Vec<CountWindow> = (0..29)
        .map(|_| {
            let (x, y) = (rng.uniform(0.0, extent - 200.0), rng.uniform(0.0, extent - 200.0));
            CountWindow::square(x, y, 200.0, 0)
        })
        .collect();
    let actual: Vec<f64> = count_in_windows(&truth, &windows)
        .into_iter()
        .map(|n| n as f64)
        .collect();
    let predicted: Vec<f64> = count_in_windows(&found, &windows)
        .into_iter()
        .map(|n| n as f64)
        .collect();
    let adj = fit_count_adjustment(&predicted, &actual).unwrap();
    let total = adjusted_totals(&found, &adj, 200.0).unwrap();
    let rel = (total - truth.len() as f64).abs() / truth.len() as f64;
    assert!((found.len() as f64 - truth.len() as f64).abs() / (truth.len() as f64) > 0.3);
    rel
}
