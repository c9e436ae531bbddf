use hygrid_core::solver::{parse_lp, solve_milp, MilpInstance, SolverOptions, OutcomeStatus};

fn relaxed(i: &MilpInstance) -> MilpInstance {
    let mut r = i.clone();
    r.binaries.clear();
    r.priorities.clear();
    r
}

#[test]
fn dbg_lines() {
    let text = std::fs::read_to_string("/tmp/infeasible.lp").unwrap();
    let parsed = parse_lp(&text).unwrap();
    let pins: Vec<(String, bool)> = serde_json::from_str(&std::fs::read_to_string("/tmp/pins.json").unwrap()).unwrap();
    let name_to_var: std::collections::BTreeMap<&str, usize> =
        parsed.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut pinned = MilpInstance { lp: parsed.problem.clone(), binaries: parsed.binaries.clone(), priorities: vec![0; parsed.binaries.len()] };
    for (name, v) in &pins {
        let j = name_to_var[name.as_str()];
        pinned.lp.lower[j] = if *v { 1.0 } else { 0.0 };
        pinned.lp.upper[j] = if *v { 1.0 } else { 0.0 };
    }
    let opts = SolverOptions::with_gap(1e-4);
    for l in 1..=31 {
        let tag = format!("PL_L{l}_");
        let mut inst = pinned.clone();
        let mut touched = false;
        for (name, &j) in &name_to_var {
            if name.starts_with(&tag) {
                inst.lp.lower[j] *= 1.5;
                inst.lp.upper[j] *= 1.5;
                touched = true;
            }
        }
        if !touched { continue; }
        let o = solve_milp(&relaxed(&inst), &opts).unwrap();
        if o.status == OutcomeStatus::Optimal {
            println!("relaxing line L{l} caps alone FIXES it");
        }
    }
    println!("done");
}
