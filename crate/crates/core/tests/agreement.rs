use floornav::fixtures;
use floornav::floorplan::{build_connectivity, double_map, oracle_plan, BridgeSpec, FloorPlan, NavTask};
use floornav::grammar::{mutations, validate_plan_with, DoorStates, ValidateOptions};
use floornav::sim::{execute_with, rasterize, ExecOptions};

fn maps() -> Vec<FloorPlan> {
    let mut maps = fixtures::all();
    let bridge = BridgeSpec::new("Degagement", "Terrasse Couverte");
    maps.push(double_map(&fixtures::original_map_1(), &bridge).unwrap());
    maps
}

#[test]
fn validator_and_executor_agree_on_oracle_plans_and_mutations() {
    let mut cases = 0;
    for map in maps() {
        let g = build_connectivity(&map).unwrap();
        let grid = rasterize(&map, 0.5).unwrap();
        for start in &g.nodes {
            for goal in &g.nodes {
                let task = NavTask::classified(&g, start, goal).unwrap();
                let oracle = oracle_plan(&g, &task).unwrap();
                let mut plans = vec![oracle.clone()];
                plans.extend(mutations(&oracle).into_iter().map(|m| m.plan));
                for plan in &plans {
                    for pedantic in [false, true] {
                        let doors = DoorStates::all_closed();
                        let verdict = validate_plan_with(&g, &task, plan, &doors, &ValidateOptions { pedantic });
                        let log = execute_with(&grid, plan, &task, &doors, &ExecOptions { pedantic }).unwrap();
                        assert_eq!(
                            verdict.is_correct(),
                            log.succeeded(),
                            "{} {start} -> {goal} pedantic={pedantic}\n{plan}\n{verdict:?}\n{:?}",
                            map.map_id,
                            log.outcome
                        );
                        if !verdict.is_correct() {
                            if let (Some(v), Some(e)) = (verdict.failing_index, log.failing_index) {
                                assert_eq!(v, e, "{} {start} -> {goal}\n{plan}", map.map_id);
                            }
                        }
                        cases += 1;
                    }
                }
            }
        }
    }
    assert!(cases >= 200, "{cases}");
}
