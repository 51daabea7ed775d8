use intentdrive::dgrid::{DGrid, GridData};
use intentdrive::geometry::{wrap_angle, CameraModel, GroundPoint, Pose2D};
use intentdrive::mask::{IntentionMask, MaskClass};
use intentdrive::metrics::{delta_yaw, iou, motion_accuracy};
use intentdrive::navscore::{build_score_map, Cell, CellSet, GridSpec, KernelParams};
use intentdrive::planner::{
    candidate_curves, plan_from_cells, retain_and_replan, score_curve, select_command,
    PlannerParams, RetainedIntention,
};
use intentdrive::route::dtw_align_points;
use intentdrive::scan::LaserScan;
use proptest::prelude::*;

fn cells(max: usize) -> impl Strategy<Value = Vec<Cell>> {
    prop::collection::vec((0usize..80, 0usize..80), 0..max)
}

fn points(max: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| [x, y]), 1..max)
}

fn mirror(cells: &CellSet, g: &GridSpec) -> CellSet {
    cells.iter().map(|&(r, c)| (r, g.cols - 1 - c)).collect()
}

/// Minimum accumulated cost over all monotone warp paths, summed along each path.
fn brute_dtw(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    fn go(a: &[[f64; 2]], b: &[[f64; 2]], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i][0] - b[j][0]).hypot(a[i][1] - b[j][1]);
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            go(a, b, i + 1, j + 1, acc, best);
        }
        if i + 1 < a.len() {
            go(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            go(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    go(a, b, 0, 0, 0.0, &mut best);
    best
}

fn band(width: usize, height: usize, start: f64, slope: f64, half: f64) -> IntentionMask {
    let mut m = IntentionMask::new(width, height, 0);
    for row in height / 4..height {
        let c = start + slope * row as f64;
        for col in 0..width {
            if (col as f64 - c).abs() <= half {
                m.set(col, row, MaskClass::Intention);
            }
        }
    }
    m
}

fn shifted(m: &IntentionMask, dx: usize) -> IntentionMask {
    let mut out = IntentionMask::new(m.width, m.height, 0);
    for (col, row) in m.pixels(MaskClass::Intention) {
        out.set(col + dx, row, MaskClass::Intention);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ground_image_round_trip(x in 1.0..50.0f64, y in -15.0..15.0f64) {
        let cam = CameraModel::default();
        let px = cam.project(GroundPoint::new(x, y)).unwrap();
        let back = cam.image_to_ground(px).unwrap();
        prop_assert!((back.x_forward - x).abs() <= 1e-6 && (back.y_left - y).abs() <= 1e-6);
        let again = cam.project(back).unwrap();
        prop_assert!((again.u - px.u).abs() <= 1e-4 && (again.v - px.v).abs() <= 1e-4);
    }

    #[test]
    fn compose_associates_and_inverts(
        a in (-50.0..50.0f64, -50.0..50.0f64, -3.1..3.1f64),
        b in (-50.0..50.0f64, -50.0..50.0f64, -3.1..3.1f64),
        c in (-50.0..50.0f64, -50.0..50.0f64, -3.1..3.1f64),
    ) {
        let (a, b, c) = (Pose2D::new(a.0, a.1, a.2), Pose2D::new(b.0, b.1, b.2), Pose2D::new(c.0, c.1, c.2));
        let l = a.compose(&b).compose(&c);
        let r = a.compose(&b.compose(&c));
        prop_assert!((l.x - r.x).abs() < 1e-9 && (l.y - r.y).abs() < 1e-9);
        prop_assert!(wrap_angle(l.yaw - r.yaw).abs() < 1e-9);
        let id = a.compose(&a.inverse());
        prop_assert!(id.x.abs() < 1e-9 && id.y.abs() < 1e-9 && wrap_angle(id.yaw).abs() < 1e-9);
        prop_assert!(l.yaw > -std::f64::consts::PI && l.yaw <= std::f64::consts::PI);
    }

    #[test]
    fn dtw_matches_exhaustive_paths(a in points(9), b in points(9)) {
        let w = dtw_align_points(&a, &b).unwrap();
        prop_assert_eq!(w.accumulated_cost, brute_dtw(&a, &b));
        prop_assert_eq!(w.pairs[0], (0, 0));
        prop_assert_eq!(*w.pairs.last().unwrap(), (a.len() - 1, b.len() - 1));
        for s in w.pairs.windows(2) {
            let (di, dj) = (s[1].0 - s[0].0, s[1].1 - s[0].1);
            prop_assert!(matches!((di, dj), (1, 0) | (0, 1) | (1, 1)));
        }
    }

    #[test]
    fn dtw_cost_symmetric_under_swap(ab in (1usize..12).prop_flat_map(|n| (
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| [x, y]), n),
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| [x, y]), n),
    ))) {
        let (a, b) = ab;
        let f = dtw_align_points(&a, &b).unwrap().accumulated_cost;
        let r = dtw_align_points(&b, &a).unwrap().accumulated_cost;
        prop_assert!((f - r).abs() <= 1e-9 * f.max(1.0));
    }

    #[test]
    fn score_map_is_additive(s1 in cells(25), s2 in cells(25)) {
        let (g, k) = (GridSpec::default(), KernelParams::default());
        let (a, b): (CellSet, CellSet) = (s1.iter().copied().collect(), s2.iter().copied().collect());
        // a shared cell contributes one kernel, so the sum uses disjoint halves
        let b: CellSet = b.difference(&a).copied().collect();
        let u: CellSet = a.union(&b).copied().collect();
        let none = CellSet::new();
        let sum = build_score_map(&g, &a, &none, &k).unwrap().add(&build_score_map(&g, &b, &none, &k).unwrap());
        let whole = build_score_map(&g, &u, &none, &k).unwrap();
        for (x, y) in whole.scores().iter().zip(sum.scores()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn score_map_ignores_input_order(mut s in cells(40), o in cells(20)) {
        let (g, k) = (GridSpec::default(), KernelParams::default());
        let fwd = build_score_map(&g, &s.iter().copied().collect(), &o.iter().copied().collect(), &k).unwrap();
        s.reverse();
        let rev = build_score_map(&g, &s.iter().copied().collect(), &o.iter().rev().copied().collect(), &k).unwrap();
        prop_assert_eq!(fwd.scores(), rev.scores());
    }

    #[test]
    fn score_map_sign_follows_sources(s in cells(30)) {
        let (g, k) = (GridSpec::default(), KernelParams::default());
        let set: CellSet = s.into_iter().collect();
        let none = CellSet::new();
        let pos = build_score_map(&g, &set, &none, &k).unwrap();
        let neg = build_score_map(&g, &none, &set, &k).unwrap();
        prop_assert!(pos.scores().iter().all(|&v| v >= 0.0 && v.is_finite()));
        prop_assert!(neg.scores().iter().all(|&v| v <= 0.0 && v.is_finite()));
    }

    #[test]
    fn mirrored_inputs_negate_the_command(int in cells(30), obs in cells(30)) {
        let (g, k, p) = (GridSpec::default(), KernelParams::default(), PlannerParams::default());
        let (int, obs): (CellSet, CellSet) = (int.into_iter().collect(), obs.into_iter().collect());
        let map = build_score_map(&g, &int, &obs, &k).unwrap();
        let mir = build_score_map(&g, &mirror(&int, &g), &mirror(&obs, &g), &k).unwrap();
        let flipped = map.mirrored();
        for (x, y) in mir.scores().iter().zip(flipped.scores()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        for &kappa in &candidate_curves(7).unwrap() {
            prop_assert!((score_curve(kappa, &mir, &p) - score_curve(-kappa, &map, &p)).abs() <= 1e-9);
        }
        match (select_command(&map, 7, &p), select_command(&mir, 7, &p)) {
            (Ok(a), Ok(b)) => {
                prop_assert!(a.curvature.abs() <= 0.2);
                let tie = (score_curve(a.curvature, &map, &p) - score_curve(-a.curvature, &map, &p)).abs() <= 1e-9;
                prop_assert!(b.curvature == -a.curvature || tie, "{} vs {}", a.curvature, b.curvature);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} / {b:?}"),
        }
    }

    #[test]
    fn finer_nested_fans_never_score_lower(int in cells(30), obs in cells(30)) {
        let (g, k, p) = (GridSpec::default(), KernelParams::default(), PlannerParams::default());
        let (int, obs): (CellSet, CellSet) = (int.into_iter().collect(), obs.into_iter().collect());
        let map = build_score_map(&g, &int, &obs, &k).unwrap();
        let best = |r: usize| candidate_curves(r).unwrap().iter().map(|&c| score_curve(c, &map, &p)).fold(f64::NEG_INFINITY, f64::max);
        for (lo, hi) in [(3, 7), (3, 23), (7, 13)] {
            prop_assert!(best(hi) >= best(lo) - 1e-12, "{lo}->{hi}");
        }
        if let Ok(cmd) = select_command(&map, 7, &p) {
            prop_assert_eq!(cmd.score, best(7));
        }
    }

    #[test]
    fn zero_odometry_retain_equals_fresh(int in cells(40), ranges in prop::collection::vec(0.5..20.0f64, 36)) {
        let (g, k, p) = (GridSpec::default(), KernelParams::default(), PlannerParams::default());
        let set: CellSet = int.into_iter().filter(|&(r, _)| r > 21).collect();
        prop_assume!(!set.is_empty());
        let bearings: Vec<f64> = (0..36).map(|i| -3.1 + i as f64 * 0.17).collect();
        let scan = LaserScan::new(bearings, ranges, 20.0).unwrap();
        let retained = RetainedIntention::from_cells(&g, &set, Pose2D::identity());
        let kept = retain_and_replan(&retained, &Pose2D::identity(), &scan, 7, &g, &k, &p);
        let fresh = plan_from_cells(&g, &set, &intentdrive::navscore::rasterize_scan(&scan, &g), &k, 7, &p);
        match (kept, fresh) {
            (Ok(a), Ok((b, _))) => {
                prop_assert_eq!(a.curvature.to_bits(), b.curvature.to_bits());
                prop_assert_eq!(a.score.to_bits(), b.score.to_bits());
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{a:?} / {b:?}"),
        }
    }

    #[test]
    fn accuracy_monotone_and_permutation_invariant(
        pairs in prop::collection::vec((-0.25..0.25f64, -0.25..0.25f64), 1..60),
        res in prop::sample::select(vec![3usize, 7, 11, 15, 19, 23]),
        rot in 0usize..60,
    ) {
        let (pred, human): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let acc: Vec<f64> = (0..5).map(|d| motion_accuracy(&pred, &human, res, d).unwrap()).collect();
        prop_assert!(acc.windows(2).all(|w| w[0] <= w[1]));
        let mut p2 = pred.clone();
        let mut h2 = human.clone();
        p2.rotate_left(rot % pred.len());
        h2.rotate_left(rot % pred.len());
        p2.reverse();
        h2.reverse();
        prop_assert_eq!(motion_accuracy(&p2, &h2, res, 1).unwrap(), acc[1]);
    }

    #[test]
    fn iou_symmetric_and_monotone(
        truth in prop::collection::vec(any::<bool>(), 200),
        keep_a in prop::collection::vec(any::<bool>(), 200),
        keep_b in prop::collection::vec(any::<bool>(), 200),
    ) {
        prop_assume!(truth.iter().any(|&t| t));
        let mk = |f: &dyn Fn(usize) -> bool| {
            IntentionMask::from_labels(20, 10, 0, (0..200).map(|i| f(i) as u8).collect()).unwrap()
        };
        let t = mk(&|i| truth[i]);
        let small = mk(&|i| truth[i] && keep_a[i] && keep_b[i]);
        let big = mk(&|i| truth[i] && keep_a[i]);
        prop_assert_eq!(iou(&t, &t).unwrap(), 1.0);
        prop_assert_eq!(iou(&small, &t).unwrap(), iou(&t, &small).unwrap());
        prop_assert!(iou(&small, &t).unwrap() <= iou(&big, &t).unwrap());
    }

    #[test]
    fn delta_yaw_ignores_horizontal_shift(
        s1 in -0.6..0.6f64, s2 in -0.6..0.6f64, dx in 0usize..30,
    ) {
        let a = band(160, 60, 60.0, s1, 3.0);
        let b = band(160, 60, 60.0, s2, 3.0);
        let base = delta_yaw(&a, &b).unwrap();
        prop_assert!((delta_yaw(&shifted(&a, dx), &b).unwrap() - base).abs() <= 1e-9);
    }

    #[test]
    fn dgrid_round_trips(
        w in 1usize..12, h in 1usize..12, seed in any::<u64>(), floats in any::<bool>(),
        res in 0.01..2.0f64, ox in -100.0..100.0f64, oy in -100.0..100.0f64,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = if floats {
            GridData::Float((0..w * h).map(|_| rng.random_range(-1e3..1e3) * 10f64.powi(rng.random_range(-8..4))).collect())
        } else {
            GridData::Class((0..w * h).map(|_| rng.random_range(0..3u8)).collect())
        };
        let g = DGrid { width: w, height: h, resolution: res, origin: [ox, oy], data };
        let back = DGrid::read_from(g.to_text().as_bytes()).unwrap();
        match (&g.data, &back.data) {
            (GridData::Float(a), GridData::Float(b)) => {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
                }
                prop_assert_eq!((back.width, back.height), (w, h));
            }
            _ => prop_assert_eq!(&back, &g),
        }
    }
}
