use std::collections::BTreeSet;

use proptest::prelude::*;

use cube_blowup::blowup::inside_edge;
use cube_blowup::blowup::oracle::oracle_fiber;
use cube_blowup::corpus::{self, random_complex, random_graph, random_program, random_walk};
use cube_blowup::dipath::{count_lifts, is_lift, lift_path, ChainOrder};
use cube_blowup::export::{blowup_document, BlowupDocument};
use cube_blowup::hda::{geometric_model, interpret_program, parse};
use cube_blowup::iso::{monomorphisms, symmetric_iso};
use cube_blowup::local_euclid::{detect_lps, enumerate_lps, simplicity, triple_grid};
use cube_blowup::pcs::tensor;
use cube_blowup::{build_blowup, fiber, subdivide, Cell, PrecubicalSet, Sign, Subdivider};

fn complex(seed: u64) -> PrecubicalSet {
    random_complex(&mut corpus::rng(seed), 40)
}

fn graph(seed: u64) -> PrecubicalSet {
    random_graph(&mut corpus::rng(seed), 4, 5)
}

/// A graph, a product of two graphs or a product of three graphs.
fn complex_up_to_three(seed: u64) -> PrecubicalSet {
    let mut r = corpus::rng(seed);
    match seed % 3 {
        0 => random_complex(&mut r, 60),
        1 => tensor(&random_graph(&mut r, 3, 3), &random_graph(&mut r, 3, 3)),
        _ => tensor(
            &tensor(&random_graph(&mut r, 2, 2), &random_graph(&mut r, 2, 2)),
            &random_graph(&mut r, 2, 2),
        ),
    }
}

fn faces_agree(small: &PrecubicalSet, big: &PrecubicalSet) -> bool {
    small.all_cells().all(|c| {
        let Some(d) = big.cell(small.key(c)) else {
            return false;
        };
        d.dim == c.dim
            && (0..c.dim).all(|i| {
                Sign::BOTH
                    .iter()
                    .all(|&s| small.key(small.face(c, i, s)) == big.key(big.face(d, i, s)))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn constructions_validate(seed in any::<u64>()) {
        let p = complex_up_to_three(seed);
        prop_assert!(p.validate().is_ok());
        let cells: Vec<Cell> = p.all_cells().step_by(3).collect();
        prop_assert!(p.span(cells).validate().is_ok());
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let p = complex_up_to_three(seed);
        let text = p.to_json();
        let back = PrecubicalSet::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(back, p);
    }

    #[test]
    fn span_is_idempotent_and_monotone(seed in any::<u64>(), pick in any::<u64>()) {
        let p = complex(seed);
        let cells: Vec<Cell> = p.all_cells().collect();
        let few: Vec<Cell> = cells.iter().enumerate().filter(|(k, _)| pick >> (k % 64) & 1 == 1).map(|(_, &c)| c).collect();
        let more: Vec<Cell> = cells.iter().enumerate().filter(|(k, _)| pick >> (k % 64) & 3 != 0).map(|(_, &c)| c).collect();
        let small = p.span(few.iter().copied());
        let big = p.span(more.iter().copied());
        let again = small.span(small.all_cells());
        prop_assert_eq!(&again, &small);
        let small_keys: BTreeSet<&str> = small.all_cells().map(|c| small.key(c)).collect();
        let big_keys: BTreeSet<&str> = big.all_cells().map(|c| big.key(c)).collect();
        prop_assert!(small_keys.is_subset(&big_keys));
        prop_assert!(faces_agree(&small, &p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn tensor_is_associative(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (p, q, r) = (graph(a), graph(b), graph(c));
        let left = tensor(&tensor(&p, &q), &r);
        let right = tensor(&p, &tensor(&q, &r));
        let iso = symmetric_iso(&left, &right, None);
        prop_assert!(iso.is_some());
        prop_assert!(iso.unwrap().check(&left, &right).is_ok());
    }

    #[test]
    fn isomorphism_is_an_equivalence(a in any::<u64>(), b in any::<u64>()) {
        let (p, q) = (graph(a), graph(b));
        let pq = tensor(&p, &q);
        let qp = tensor(&q, &p);
        let refl = symmetric_iso(&pq, &pq, None).expect("reflexive");
        prop_assert!(refl.check(&pq, &pq).is_ok());
        let f = symmetric_iso(&pq, &qp, None).expect("tensor is symmetric");
        prop_assert!(f.check(&pq, &qp).is_ok());
        prop_assert!(f.inverse().check(&qp, &pq).is_ok());
        let round = f.compose(&f.inverse());
        prop_assert!(round.check(&pq, &pq).is_ok());
        prop_assert!(pq.all_cells().all(|c| round.image(c) == c));
    }

    #[test]
    fn subdivision_counts(seed in any::<u64>(), s in 1u32..4) {
        let p = complex(seed);
        let sub = subdivide(&p, s);
        prop_assert!(sub.set().validate().is_ok());
        for c in p.all_cells() {
            let top = sub.set().cells(c.dim).filter(|&x| sub.underlying_cube(x) == c).count();
            prop_assert_eq!(top, (s as usize).pow(c.dim as u32));
        }
    }

    #[test]
    fn enumerated_germs_are_certified(seed in any::<u64>(), n in 1usize..3) {
        let p = complex(seed);
        let star_free = |c: Cell| {
            let faces: BTreeSet<Cell> = (0..c.dim).flat_map(|i| Sign::BOTH.map(|s| p.face(c, i, s))).collect();
            faces.len() == 2 * c.dim && p.corners(c).into_iter().collect::<BTreeSet<_>>().len() == 1 << c.dim
        };
        let sd = Subdivider::new(&p, 6);
        for c in p.all_cells() {
            let germs = enumerate_lps(&p, c, n).unwrap();
            if c.dim > n {
                prop_assert!(germs.is_empty());
                continue;
            }
            if c.dim == n && star_free(c) && p.cofaces(c).is_empty() {
                prop_assert_eq!(germs.len(), 1, "cube {}", p.key(c));
            }
            let star = cube_blowup::local_star(&p, 6, &sd.midpoint(c).unwrap(), 1);
            for q in &germs {
                prop_assert!(q.check(star.set()).is_ok());
                prop_assert!(q.certify(star.set()).is_ok());
            }
        }
    }

    #[test]
    fn detection_matches_grid_search(seed in any::<u64>(), n in 1usize..3) {
        let p = subdivide(&complex(seed), 2).into_set();
        let third = Subdivider::new(&p, 3);
        let refined = subdivide(&p, 3);
        let grid = triple_grid(n);
        let center = grid.cell(&format!("({})", vec!["0"; n].join(","))).unwrap();
        for v in p.vertices() {
            if !simplicity(&p, v, n) {
                continue;
            }
            let found = detect_lps(&p, v, n).unwrap().is_some();
            let w = refined.cell_of(&third.vertex(v)).unwrap();
            let star = refined.set().upper_star(w);
            let oracle = monomorphisms(&grid, refined.set(), &[(center, w)])
                .iter()
                .any(|m| star.is_subset(&m.image_set()));
            prop_assert_eq!(found, oracle, "vertex {}", p.key(v));
        }
    }

    #[test]
    fn zero_fibers_are_points(seed in any::<u64>()) {
        let p = complex(seed);
        for c in p.all_cells() {
            prop_assert_eq!(fiber(&p, c, 0).unwrap().len(), 1);
        }
    }

    #[test]
    fn presheaf_law_and_restrictions(seed in any::<u64>(), n in 1usize..3) {
        let p = complex(seed);
        let b = build_blowup(&p, n).unwrap();
        prop_assert!(b.check_presheaf().is_ok());
        let sd = Subdivider::new(&p, 6);
        for c in p.all_cells().filter(|c| c.dim == n) {
            for i in 0..c.dim {
                for eps in Sign::BOTH {
                    let face = p.face(c, i, eps);
                    let key = sd.key(&inside_edge(c, i, eps));
                    for (g, q) in b.fiber(face).iter().enumerate() {
                        let r = b.restrict_point(c, i, eps, g);
                        prop_assert_eq!(r.is_some(), q.contains(&key));
                        if b.fiber_size(c) == 1 {
                            prop_assert!(r.is_none() || r == Some(0));
                        }
                    }
                }
            }
        }
        let doc = blowup_document(&b);
        prop_assert_eq!(BlowupDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn lifts_recheck_and_ignore_chain_order(seed in any::<u64>(), n in 1usize..3) {
        let mut r = corpus::rng(seed);
        let p = tensor(&random_graph(&mut r, 3, 4), &random_graph(&mut r, 3, 4));
        let b = build_blowup(&p, n).unwrap();
        for _ in 0..6 {
            let Some(path) = random_walk(&p, &mut r, 6) else { continue };
            let lifts = lift_path(&b, &path).unwrap();
            prop_assert_eq!(lifts.len() as u128, count_lifts(&b, &path).unwrap());
            prop_assert!(lifts.iter().all(|l| is_lift(&b, &path, l)));
            let up = count_lifts(&b, &path.reordered(ChainOrder::Ascending)).unwrap();
            let down = count_lifts(&b, &path.reordered(ChainOrder::Descending)).unwrap();
            prop_assert_eq!(up, down);
        }
    }

    #[test]
    fn line_germs_lift_along_graph_paths(seed in any::<u64>()) {
        let mut r = corpus::rng(seed);
        let g = random_graph(&mut r, 5, 7);
        let b = build_blowup(&g, 1).unwrap();
        for _ in 0..8 {
            let Some(path) = random_walk(&g, &mut r, 8) else { continue };
            if path.steps.iter().all(|k| b.fiber_size(g.cell(k).unwrap()) > 0) {
                prop_assert!(count_lifts(&b, &path).unwrap() > 0, "{:?}", path);
            }
        }
    }

    #[test]
    fn programs_interpret_and_model(seed in any::<u64>()) {
        let text = random_program(&mut corpus::rng(seed), 3);
        let hda = interpret_program(&parse(&text).unwrap());
        prop_assert!(hda.check().is_ok(), "{}", text);
        let model = geometric_model(&hda);
        prop_assert!(model.set.validate().is_ok());
        prop_assert!(faces_agree(&model.set, &hda.set));
    }
}

#[test]
fn planes_axis_path_has_four_lifts() {
    let k = corpus::coordinate_planes();
    let b = build_blowup(&k, 2).unwrap();
    let cells: Vec<Cell> = ["(-1>0,0,0)", "(0,0,0)", "(0>1,0,0)"]
        .iter()
        .map(|s| k.cell(s).unwrap())
        .collect();
    let path = cube_blowup::CubePath::through(&k, &cells).unwrap();
    assert_eq!(count_lifts(&b, &path).unwrap(), 4);
}

#[test]
fn plane_germ_shifts_onto_the_axis() {
    let k = corpus::coordinate_planes();
    let b = build_blowup(&k, 2).unwrap();
    let origin = k.cell("(0,0,0)").unwrap();
    let edge = k.cell("(0>1,0,0)").unwrap();
    assert_eq!(k.face(edge, 0, Sign::Minus), origin);
    let over = |q: &cube_blowup::Lps, cube: &str| {
        q.spanned.iter().any(|s| s.starts_with(&format!("{cube}@")))
    };
    let plane = b
        .fiber(origin)
        .iter()
        .position(|q| {
            [
                "(-1>0,-1>0,0)",
                "(-1>0,0>1,0)",
                "(0>1,-1>0,0)",
                "(0>1,0>1,0)",
            ]
            .iter()
            .all(|s| over(q, s))
        })
        .unwrap();
    let shifted = &b.fiber(edge)[b.restrict_point(edge, 0, Sign::Minus, plane).unwrap()];
    assert!(over(shifted, "(0>1,-1>0,0)") && over(shifted, "(0>1,0>1,0)"));
    assert!(!over(shifted, "(0>1,0,-1>0)") && !over(shifted, "(0>1,0,0>1)"));
}

#[test]
fn removed_square_corners_match_the_oracle() {
    let hda = interpret_program(&parse(corpus::MUTEX_PROGRAM).unwrap());
    let model = geometric_model(&hda);
    let (square, _) = model.removed.iter().next().unwrap();
    let corners: Vec<Cell> = hda
        .set
        .corners(hda.set.cell(square).unwrap())
        .into_iter()
        .map(|v| model.set.cell(hda.set.key(v)).unwrap())
        .collect();
    let sizes: Vec<usize> = corners
        .iter()
        .map(|&v| {
            let ours: Vec<Vec<String>> = fiber(&model.set, v, 2)
                .unwrap()
                .into_iter()
                .map(|q| q.spanned)
                .collect();
            let theirs: Vec<Vec<String>> = oracle_fiber(&model.set, v, 2)
                .into_iter()
                .map(|q| q.spanned)
                .collect();
            assert_eq!(ours, theirs);
            ours.len()
        })
        .collect();
    assert_eq!(sizes, vec![0, 0, 0, 0]);
}
