use super::*;
use std::collections::HashSet;

const SOURCE: &str = include_str!("../../data/layouts/source.layout");

fn kitchen(text: &str) -> Kitchen {
    Kitchen::new(Layout::parse(text).unwrap())
}

fn run(k: &Kitchen, mut s: GridState, actions: &[[Action; 2]]) -> (GridState, Vec<u32>) {
    let mut rewards = Vec::new();
    for a in actions {
        let st = k.step(&s, JointAction(*a)).unwrap();
        rewards.push(st.reward);
        s = st.state;
    }
    (s, rewards)
}

#[test]
fn parses_small_grid_as_written() {
    let text = "recipe: plain\nXOVPX\nS1  X\nX  2X\nXXXXX\n";
    let layout = Layout::parse(text).unwrap();
    assert_eq!((layout.width(), layout.height()), (5, 4));
    assert_eq!(layout.tile(Pos::new(1, 0)), TileKind::OnionDispenser);
    assert_eq!(layout.tile(Pos::new(2, 0)), TileKind::Oven);
    assert_eq!(layout.tile(Pos::new(3, 0)), TileKind::PlateDispenser);
    assert_eq!(layout.tile(Pos::new(0, 1)), TileKind::ServingArea);
    assert_eq!(layout.tile(Pos::new(2, 2)), TileKind::Floor);
    assert_eq!(layout.chef_starts()[0].0, Pos::new(1, 1));
    assert_eq!(layout.chef_starts()[1].0, Pos::new(3, 2));
    assert_eq!(layout.render(), text);
}

#[test]
fn parse_errors() {
    let missing_s = "recipe: plain\nXOVPX\nX1  X\nX  2X\nXXXXX\n";
    assert!(matches!(
        Layout::parse(missing_s),
        Err(GridError::MissingRequiredTile(TileKind::ServingArea))
    ));
    let ragged = "recipe: plain\nXOVPX\nS1  X\nX 2X\nXXXXX\n";
    assert!(matches!(Layout::parse(ragged), Err(GridError::RaggedGrid { row: 2 })));
    let unknown = "recipe: plain\nXOVPX\nS1 #X\nX  2X\nXXXXX\n";
    assert!(matches!(Layout::parse(unknown), Err(GridError::UnknownCharacter { ch: '#', .. })));
    let no_chef = "recipe: plain\nXOVPX\nS   X\nX  2X\nXXXXX\n";
    assert!(matches!(Layout::parse(no_chef), Err(GridError::MissingChefStart(1))));
    let cilantro_missing = "recipe: cilantro\nXOVPX\nS1  X\nX  2X\nXXXXX\n";
    assert!(matches!(
        Layout::parse(cilantro_missing),
        Err(GridError::MissingRequiredTile(TileKind::CilantroDispenser))
    ));
    let open_border = "recipe: plain\nXOVPX\nS1  X\nX  2 \nXXXXX\n";
    assert!(Layout::parse(open_border).is_err());
    assert!(matches!(Layout::parse("XOVPX\n"), Err(GridError::MissingRecipeHeader)));
}

#[test]
fn shipped_layouts_parse_and_round_trip() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/layouts");
    for name in ["source", "cilantro", "cilantro-left", "small-corridor", "corridor"] {
        let text = std::fs::read_to_string(format!("{dir}/{name}.layout")).unwrap();
        let layout = Layout::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(Layout::parse(&layout.render()).unwrap(), layout);
    }
}

#[test]
fn reset_is_seeded_and_ten_ticks_long() {
    let k = kitchen(SOURCE);
    assert_eq!(k.reset(7), k.reset(7));
    assert_eq!(k.reset(7).tick, 10);
    let distinct: HashSet<StateKey> = (0..100).map(|s| k.reset(s).key()).collect();
    assert!(distinct.len() >= 2);
}

#[test]
fn stay_only_advances_time() {
    let k = kitchen(SOURCE);
    let mut s = k.initial_state();
    s.ovens[0] = Oven {
        onions: 3,
        timer: 9,
        phase: OvenPhase::Cooking,
    };
    let next = k.step(&s, JointAction::STAY).unwrap().state;
    let mut expect = s.clone();
    expect.tick += 1;
    expect.ovens[0].timer = 8;
    assert_eq!(next, expect);
}

#[test]
fn onion_pickup_from_dispenser() {
    let k = kitchen(SOURCE);
    // chef 0 starts at (1,1); the onion dispenser is at (0,2)
    let s = k.initial_state();
    let (s, _) = run(&k, s, &[[Action::MoveDown, Action::Stay], [Action::MoveLeft, Action::Stay]]);
    assert_eq!(s.chefs[0].pos, Pos::new(1, 2));
    assert_eq!(s.chefs[0].facing, Direction::Left);
    assert_eq!(s.chefs[0].held, Held::Nothing);
    let (s, _) = run(&k, s, &[[Action::Interact, Action::Stay]]);
    assert_eq!(s.chefs[0].held, Held::Onion);
}

#[test]
fn cooking_takes_twenty_steps() {
    let k = kitchen(SOURCE);
    let mut s = k.initial_state();
    // oven at (4,0) is faced from (4,1) looking up
    s.chefs[0].pos = Pos::new(4, 1);
    s.chefs[0].facing = Direction::Up;
    s.ovens[0] = Oven {
        onions: 3,
        timer: 0,
        phase: OvenPhase::Raw,
    };
    let (mut s, _) = run(&k, s, &[[Action::Interact, Action::Stay]]);
    assert_eq!(s.ovens[0].phase, OvenPhase::Cooking);
    assert_eq!(s.ovens[0].timer, COOK_TIME);
    for i in 1..=20 {
        s = k.step(&s, JointAction::STAY).unwrap().state;
        let expect = if i < 20 { OvenPhase::Cooking } else { OvenPhase::Ready };
        assert_eq!(s.ovens[0].phase, expect, "after {i} steps");
    }
}

#[test]
fn oven_needs_explicit_ignition() {
    let k = kitchen(SOURCE);
    let mut s = k.initial_state();
    s.chefs[0].pos = Pos::new(4, 1);
    s.chefs[0].facing = Direction::Up;
    s.chefs[0].held = Held::Onion;
    s.ovens[0] = Oven {
        onions: 2,
        timer: 0,
        phase: OvenPhase::Raw,
    };
    let (s, _) = run(&k, s, &[[Action::Interact, Action::Stay], [Action::Stay, Action::Stay]]);
    assert_eq!(s.ovens[0], Oven { onions: 3, timer: 0, phase: OvenPhase::Raw });
    assert_eq!(s.chefs[0].held, Held::Nothing);
}

#[test]
fn hand_traced_plain_soup_tail() {
    let text = "recipe: plain\nXXVXXXX\nO     S\nXP 1 2X\nXXXXXXX\n";
    let k = kitchen(text);
    let mut s = k.initial_state();
    s.chefs[0] = Chef {
        pos: Pos::new(2, 1),
        facing: Direction::Up,
        held: Held::Plate,
    };
    s.ovens[0] = Oven {
        onions: 3,
        timer: 0,
        phase: OvenPhase::Ready,
    };
    let plan = [
        Action::Interact,
        Action::MoveRight,
        Action::MoveRight,
        Action::MoveRight,
        Action::MoveRight,
        Action::Interact,
    ];
    let actions: Vec<[Action; 2]> = plan.iter().map(|a| [*a, Action::Stay]).collect();
    let (end, rewards) = run(&k, s, &actions);
    assert_eq!(rewards, vec![0, 0, 0, 0, 0, 1]);
    assert_eq!(end.delivered, 1);
    assert_eq!(end.chefs[0].held, Held::Nothing);
    assert_eq!(end.ovens[0], Oven::EMPTY);
}

#[test]
fn wrong_dish_is_not_accepted() {
    let text = "recipe: cilantro\nXXVXXXX\nO     S\nXP 1 2C\nXXXXXXX\n";
    let k = kitchen(text);
    let mut s = k.initial_state();
    s.chefs[0] = Chef {
        pos: Pos::new(5, 1),
        facing: Direction::Right,
        held: Held::SoupPlate,
    };
    let st = k.step(&s, JointAction([Action::Interact, Action::Stay])).unwrap();
    assert_eq!(st.reward, 0);
    assert_eq!(st.state.chefs[0].held, Held::SoupPlate);
}

#[test]
fn cilantro_goes_on_a_soup_plate_via_counter() {
    let text = "recipe: cilantro\nXXVXXXX\nO     S\nXP 1 2C\nXXXXXXX\n";
    let k = kitchen(text);
    let counter = Pos::new(3, 0);
    let mut s = k.initial_state();
    s.chefs[0] = Chef {
        pos: Pos::new(3, 1),
        facing: Direction::Up,
        held: Held::SoupPlate,
    };
    // place the soup, then add cilantro on top
    let s = k.step(&s, JointAction([Action::Interact, Action::Stay])).unwrap().state;
    let idx = k.layout.counter_index(counter).unwrap();
    assert_eq!(s.counter_item(idx), Held::SoupPlate);
    let mut s2 = s.clone();
    s2.chefs[0].held = Held::Cilantro;
    let s2 = k.step(&s2, JointAction([Action::Interact, Action::Stay])).unwrap().state;
    assert_eq!(s2.counter_item(idx), Held::CilantroSoupPlate);
    assert_eq!(s2.chefs[0].held, Held::Nothing);

    // the other order: cilantro waits on the counter, the plate picks it up
    let mut s3 = k.initial_state();
    s3.chefs[0] = Chef {
        pos: Pos::new(3, 1),
        facing: Direction::Up,
        held: Held::SoupPlate,
    };
    s3.set_counter_item(idx, Held::Cilantro);
    let s3 = k.step(&s3, JointAction([Action::Interact, Action::Stay])).unwrap().state;
    assert_eq!(s3.chefs[0].held, Held::CilantroSoupPlate);
    assert_eq!(s3.counter_item(idx), Held::Nothing);
}

#[test]
fn contested_cell_goes_to_chef_zero() {
    let text = "recipe: plain\nXOVPX\nS1 2X\nX   X\nXXXXX\n";
    let k = kitchen(text);
    let s = k.initial_state();
    let st = k.step(&s, JointAction([Action::MoveRight, Action::MoveLeft])).unwrap();
    assert_eq!(st.state.chefs[0].pos, Pos::new(2, 1));
    assert_eq!(st.state.chefs[1].pos, Pos::new(3, 1));
    assert_eq!(st.state.chefs[1].facing, Direction::Left);

    // swapping places is blocked for both
    let mut s = k.initial_state();
    s.chefs[1].pos = Pos::new(2, 1);
    let st = k.step(&s, JointAction([Action::MoveRight, Action::MoveLeft])).unwrap();
    assert_eq!(st.state.chefs[0].pos, Pos::new(1, 1));
    assert_eq!(st.state.chefs[1].pos, Pos::new(2, 1));

    // following a chef that moves away is allowed
    let st = k.step(&s, JointAction([Action::MoveRight, Action::MoveRight])).unwrap();
    assert_eq!(st.state.chefs[0].pos, Pos::new(2, 1));
    assert_eq!(st.state.chefs[1].pos, Pos::new(3, 1));
}

#[test]
fn done_at_episode_limit() {
    let k = kitchen(SOURCE).with_episode_limit(12);
    let s = k.reset(0);
    let st = k.step(&s, JointAction::STAY).unwrap();
    assert!(!st.done);
    let st = k.step(&st.state, JointAction::STAY).unwrap();
    assert!(st.done);
}

#[test]
fn corrupted_state_is_rejected() {
    let k = kitchen(SOURCE);
    let mut s = k.initial_state();
    s.ovens[0].timer = 4;
    assert!(matches!(k.step(&s, JointAction::STAY), Err(GridError::InvalidState(_))));
    let mut s = k.initial_state();
    s.chefs[1].pos = s.chefs[0].pos;
    assert!(matches!(k.step(&s, JointAction::STAY), Err(GridError::InvalidState(_))));
}

#[test]
fn observation_is_local() {
    let k = kitchen(SOURCE);
    let mut a = k.initial_state();
    a.chefs[1].pos = Pos::new(4, 2);
    let mut b = a.clone();
    // chef 0 at (1,1) sees x,y in 0..=3; the oven at (4,0) is outside its window
    b.ovens[0] = Oven {
        onions: 2,
        timer: 0,
        phase: OvenPhase::Raw,
    };
    assert_eq!(k.observe(&a, 0), k.observe(&b, 0));
    assert_ne!(k.observe(&a, 1), k.observe(&b, 1));
}

#[test]
fn observation_is_egocentric() {
    let k = kitchen(SOURCE);
    let s = k.initial_state();
    assert_ne!(k.observe(&s, 0), k.observe(&s, 1));
}

#[test]
fn observation_length_matches_enumerated_features() {
    let k = kitchen(SOURCE).with_window_radius(2);
    assert_eq!((k.layout.width(), k.layout.height()), (7, 6));
    let mut names = Vec::new();
    for cell in 0..25 {
        for t in ["wall", "onion_disp", "plate_disp", "oven", "serving", "cilantro_disp"] {
            names.push(format!("c{cell}.tile.{t}"));
        }
        for i in ["onion", "plate", "soup", "cilantro_soup", "cilantro"] {
            names.push(format!("c{cell}.item.{i}"));
        }
        names.push(format!("c{cell}.mate"));
        for o in ["onions", "cooking", "ready", "timer"] {
            names.push(format!("c{cell}.oven.{o}"));
        }
    }
    for h in ["nothing", "onion", "plate", "soup", "cilantro_soup", "cilantro"] {
        names.push(format!("held.{h}"));
    }
    for f in ["up", "down", "left", "right"] {
        names.push(format!("facing.{f}"));
    }
    names.push("tick".into());
    assert_eq!(names.len(), 411);
    assert_eq!(k.observation_len(), names.len());
    let obs = k.observe(&k.reset(3), 0);
    assert_eq!(obs.len(), names.len());
    assert!(obs.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn state_key_ignores_tick_only() {
    let k = kitchen(SOURCE);
    let s = k.reset(1);
    let mut later = s.clone();
    later.tick += 5;
    assert_eq!(s.key(), later.key());

    let mut a = k.initial_state();
    a.ovens[0] = Oven {
        onions: 3,
        timer: 11,
        phase: OvenPhase::Cooking,
    };
    let mut b = a.clone();
    b.ovens[0].timer = 12;
    assert_ne!(a.key(), b.key());
}

#[test]
fn state_key_has_no_collisions_on_random_states() {
    use rand::SeedableRng;
    let k = kitchen(SOURCE);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut states = Vec::new();
    let mut s = k.reset(0);
    while states.len() < 1000 {
        s = k.step(&s, random_joint_action(&mut rng)).unwrap().state;
        states.push(s.clone());
    }
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let (mut a, mut b) = (states[i].clone(), states[j].clone());
            a.tick = 0;
            b.tick = 0;
            assert_eq!(a == b, states[i].key() == states[j].key(), "pair ({i}, {j})");
        }
    }
    for s in &states {
        assert_eq!(&GridState::from_key(&k.layout, &s.key(), s.tick).unwrap(), s);
    }
}

#[test]
fn goal_reached_examples() {
    let k = kitchen(SOURCE);
    let s = k.reset(4);
    assert!(goal_reached(&s, &s));
    let mut moved = s.clone();
    moved.chefs[1].pos = if s.chefs[1].pos == Pos::new(3, 3) { Pos::new(3, 2) } else { Pos::new(3, 3) };
    assert!(!goal_reached(&s, &moved));

    let mut a = k.initial_state();
    a.ovens[0] = Oven {
        onions: 3,
        timer: 17,
        phase: OvenPhase::Cooking,
    };
    let mut b = a.clone();
    b.ovens[0].timer = 19;
    assert!(goal_reached(&a, &b));
    b.ovens[0].timer = 20;
    assert!(!goal_reached(&a, &b));
}

#[test]
fn trajectory_file_round_trip() {
    use rand::SeedableRng;
    let k = kitchen(SOURCE);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let mut states = vec![k.reset(0)];
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    for _ in 0..20 {
        let a = random_joint_action(&mut rng);
        let st = k.step(states.last().unwrap(), a).unwrap();
        actions.push(a);
        rewards.push(st.reward);
        states.push(st.state);
    }
    let header = trajectory::TrajectoryHeader {
        layout_hash: k.layout.digest(),
        recipe: k.layout.recipe(),
        seed: 0,
    };
    let records = trajectory::records_from(&states, &actions, &rewards);
    let mut buf = Vec::new();
    trajectory::write_trajectory(&mut buf, Some(&header), &records).unwrap();
    let (h, back) = trajectory::read_trajectory(buf.as_slice()).unwrap();
    assert_eq!(h.as_ref(), Some(&header));
    assert_eq!(back, records);
    assert_eq!(trajectory::states_from(&k.layout, &back).unwrap(), states);
    assert_eq!(back.last().unwrap().joint_action, None);
}

#[test]
fn articulation_cells_find_corridors() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/layouts");
    let corridor = Layout::parse(&std::fs::read_to_string(format!("{dir}/corridor.layout")).unwrap()).unwrap();
    let cuts = corridor.articulation_cells();
    for x in 3..=5 {
        assert!(cuts.contains(&Pos::new(x, 2)));
    }
    assert!(Layout::parse(SOURCE).unwrap().articulation_cells().is_empty());
}
