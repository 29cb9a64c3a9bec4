use std::time::Instant;

use descent_core::hypercover::{check_hypercover, check_hypercover_dhi};
use descent_core::lifting::{check_atlas, equivalence_report, AtlasMode, OpenDiagram};
use descent_core::nerve::{homology, nerve_truncated, refine_diagram, slice_refinement_check};
use descent_core::order::{alexandrov_frame, FinitePoset, FinitePreorder};

fn main() {
    // worst case: chain of 5 into the frame of a 5-point Alexandrov space
    let chain5 = FinitePoset::chain((0..5).map(|i| format!("c{i}")).collect()).unwrap();
    let pre = FinitePreorder::from_relations(
        (0..5).map(|i| format!("p{i}")).collect(),
        &[("p0", "p1"), ("p1", "p2"), ("p2", "p3"), ("p3", "p4")],
    )
    .unwrap();
    let frame = alexandrov_frame(&pre).unwrap();
    println!("frame opens: {}", frame.open_count());
    // chain diagram: nested opens
    let opens: Vec<_> = (0..5)
        .map(|i| {
            let pts: Vec<String> = (4 - i..5).map(|j| format!("p{j}")).collect();
            frame.open_from_points(&pts).unwrap()
        })
        .collect();
    let d = OpenDiagram::new(chain5.clone(), frame.clone(), opens, frame.top()).unwrap();

    let t = Instant::now();
    let nv = nerve_truncated(&chain5, 3).unwrap();
    println!(
        "nerve sizes {:?} built in {:?}",
        nv.shape().sizes(),
        t.elapsed()
    );

    let t = Instant::now();
    let h = refine_diagram(&d, 3).unwrap();
    println!("refine in {:?}", t.elapsed());

    let t = Instant::now();
    let v = check_hypercover(&h, 3).unwrap();
    println!("check_hypercover pass={} in {:?}", v.pass, t.elapsed());

    let t = Instant::now();
    let v2 = check_hypercover_dhi(&h, 3).unwrap();
    println!("check_hypercover_dhi pass={} in {:?}", v2.pass, t.elapsed());

    let t = Instant::now();
    let a = check_atlas(&d, AtlasMode::Subsets { nmax: 3 });
    println!("check_atlas subsets pass={} in {:?}", a.pass, t.elapsed());

    let t = Instant::now();
    let rep = equivalence_report(&d, 3);
    println!(
        "equivalence_report agree={} in {:?}",
        rep.all_agree(),
        t.elapsed()
    );

    let t = Instant::now();
    let hom = homology(nv.shape(), 2).unwrap();
    println!(
        "homology betti = {:?} in {:?}",
        hom.iter().map(|g| g.betti).collect::<Vec<_>>(),
        t.elapsed()
    );

    let t = Instant::now();
    for i in 0..5 {
        assert!(slice_refinement_check(i, &chain5, 3).unwrap());
    }
    println!("slice checks in {:?}", t.elapsed());
}
