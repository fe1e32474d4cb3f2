use secure_congest::graph::{generate, Family};
use secure_congest::private_trees::{build_private_trees_traced, verify_private_trees};

#[test]
fn trees_valid_on_generated_families() {
    let fams = [
        Family::Cycle { n: 9 },
        Family::Complete { n: 9 },
        Family::Torus { rows: 4, cols: 5 },
        Family::Random2vc { n: 40, extra: 60 },
        Family::Random2vc { n: 120, extra: 400 },
    ];
    for (i, f) in fams.iter().enumerate() {
        let g = generate(f, i as u64).unwrap();
        let (pt, trace) = build_private_trees_traced(&g, true).unwrap();
        let r = verify_private_trees(&g, &pt);
        assert!(r.valid, "{f:?}: {:?}", r.violations);
        assert!(trace.phases.len() <= trace.phase_budget);
        for a in &trace.aux_graphs {
            assert!(a.is_two_vertex_connected().unwrap());
        }
        println!("{f:?}: dil {} cong {} cover {:?}", pt.dilation, pt.congestion, trace.cover_parameters());
    }
}
