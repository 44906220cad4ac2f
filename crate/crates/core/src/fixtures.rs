//! Deterministic generators for the bundled desk-scale scenes and their tasks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{Cell, CellRect};
use crate::gridworld::{
    default_free_space, default_legend, Articulation, DoorSpec, DoorState, ObjectSpec,
    Orientation, RoomAnnotation, SceneSpec, DEFAULT_RESOLUTION_M, SCHEMA_VERSION,
};
use crate::mapping::{BevMap, Occupancy};
use crate::taskspec::TaskFile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Template {
    TwoRoom,
    CorridorMaze,
    IndoorOutdoor,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::TwoRoom, Template::CorridorMaze, Template::IndoorOutdoor];

    pub fn as_str(self) -> &'static str {
        match self {
            Template::TwoRoom => "two-room",
            Template::CorridorMaze => "corridor-maze",
            Template::IndoorOutdoor => "indoor-outdoor",
        }
    }

    /// Scene name inside generated files, also used as the file stem.
    pub fn scene_name(self) -> &'static str {
        match self {
            Template::TwoRoom => "two_room",
            Template::CorridorMaze => "corridor_maze",
            Template::IndoorOutdoor => "indoor_outdoor",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown scene template `{0}` (expected two-room, corridor-maze or indoor-outdoor)")]
pub struct UnknownTemplate(pub String);

impl FromStr for Template {
    type Err = UnknownTemplate;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Template::ALL
            .into_iter()
            .find(|t| t.as_str() == s || t.scene_name() == s)
            .ok_or_else(|| UnknownTemplate(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub scene: SceneSpec,
    pub tasks: Vec<TaskFile>,
}

struct Canvas {
    w: i32,
    h: i32,
    rows: Vec<Vec<char>>,
    doors: Vec<DoorSpec>,
    objects: Vec<ObjectSpec>,
    rooms: Vec<RoomAnnotation>,
    taken: BTreeSet<Cell>,
    rng: ChaCha8Rng,
}

impl Canvas {
    fn new(w: i32, h: i32, seed: u64) -> Self {
        Self {
            w,
            h,
            rows: vec![vec!['#'; w as usize]; h as usize],
            doors: Vec::new(),
            objects: Vec::new(),
            rooms: Vec::new(),
            taken: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn fill(&mut self, x0: i32, y0: i32, x1: i32, y1: i32, ch: char) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.rows[y as usize][x as usize] = ch;
            }
        }
    }

    fn at(&self, c: Cell) -> Option<char> {
        if c.x < 0 || c.y < 0 || c.x >= self.w || c.y >= self.h {
            return None;
        }
        Some(self.rows[c.y as usize][c.x as usize])
    }

    fn door(&mut self, id: &str, rect: CellRect, state: DoorState) {
        self.fill(rect.x0, rect.y0, rect.x1, rect.y1, 'D');
        let (orientation, length_cells) = if rect.width() >= rect.height() {
            (Orientation::Horizontal, rect.width())
        } else {
            (Orientation::Vertical, rect.height())
        };
        self.doors.push(DoorSpec {
            id: id.into(),
            center: Cell::new((rect.x0 + rect.x1) / 2, (rect.y0 + rect.y1) / 2),
            length_cells,
            orientation,
            state,
            bbox: rect,
        });
    }

    fn room(&mut self, name: &str, rects: &[CellRect]) {
        self.rooms.push(RoomAnnotation {
            name: name.into(),
            rects: rects.to_vec(),
        });
    }

    fn near_door(&self, c: Cell) -> bool {
        self.doors.iter().any(|d| {
            let b = d.bbox;
            c.x >= b.x0 - 4 && c.x <= b.x1 + 4 && c.y >= b.y0 - 4 && c.y <= b.y1 + 4
        })
    }

    /// A cell near `anchor` whose 8-neighborhood is open ground and clear of other objects.
    fn spot(&mut self, anchor: (i32, i32), jitter: i32) -> Cell {
        let ok = |cv: &Canvas, c: Cell| {
            !cv.near_door(c)
                && std::iter::once(c).chain(c.neighbors8()).all(|n| {
                    matches!(cv.at(n), Some('.') | Some(',') | Some('_')) && !cv.taken.contains(&n)
                })
        };
        for _ in 0..64 {
            let c = Cell::new(
                anchor.0 + self.rng.random_range(-jitter..=jitter),
                anchor.1 + self.rng.random_range(-jitter..=jitter),
            );
            if ok(self, c) {
                return c;
            }
        }
        let a = Cell::new(anchor.0, anchor.1);
        assert!(ok(self, a), "fixture anchor {a:?} is not placeable");
        a
    }

    fn object(&mut self, id: &str, category: &str, anchor: (i32, i32), kind: Kind) -> Cell {
        let c = self.spot(anchor, 2);
        self.taken.insert(c);
        self.objects.push(kind.spec(id, category, c, None, None));
        c
    }

    fn on(&mut self, id: &str, category: &str, parent: &str, kind: Kind) {
        let pos = self.position_of(parent);
        self.objects.push(kind.spec(id, category, pos, None, Some(parent)));
    }

    fn inside(&mut self, id: &str, category: &str, parent: &str, kind: Kind) {
        let pos = self.position_of(parent);
        self.objects.push(kind.spec(id, category, pos, Some(parent), None));
    }

    fn position_of(&self, id: &str) -> Cell {
        self.objects
            .iter()
            .find(|o| o.id == id)
            .map(|o| o.position)
            .expect("parent placed first")
    }

    fn finish(self, name: &str) -> SceneSpec {
        let mut legend = default_legend();
        legend.retain(|k, _| self.rows.iter().any(|r| r.contains(k)));
        let mut objects = self.objects;
        objects.sort_by(|a, b| a.id.cmp(&b.id));
        SceneSpec {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            width_cells: self.w,
            height_cells: self.h,
            resolution_m: DEFAULT_RESOLUTION_M,
            legend,
            cells: self.rows.iter().map(|r| r.iter().collect()).collect(),
            free_space_categories: default_free_space(),
            doors: self.doors,
            objects,
            room_annotations: self.rooms,
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    /// Graspable item.
    Item,
    /// Fixed furniture.
    Fixed,
    /// Fixed articulated container.
    Container(Articulation),
}

impl Kind {
    fn spec(self, id: &str, category: &str, position: Cell, inside: Option<&str>, ontop: Option<&str>) -> ObjectSpec {
        let mut attributes = BTreeMap::new();
        let (articulated, articulation_state) = match self {
            Kind::Item => (false, Articulation::NotApplicable),
            Kind::Fixed => {
                attributes.insert("graspable".into(), serde_json::Value::Bool(false));
                (false, Articulation::NotApplicable)
            }
            Kind::Container(s) => {
                attributes.insert("graspable".into(), serde_json::Value::Bool(false));
                (true, s)
            }
        };
        ObjectSpec {
            id: id.into(),
            category: category.into(),
            position,
            articulated,
            articulation_state,
            contained_in: inside.map(String::from),
            on_top_of: ontop.map(String::from),
            attributes,
        }
    }
}

fn task(name: &str, template: &str, bindings: &[(&str, &str)], goals: &[&str]) -> TaskFile {
    TaskFile {
        name: name.into(),
        description_template: template.into(),
        bindings: bindings
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        goal_conditions: goals.iter().map(|g| g.to_string()).collect(),
    }
}

fn rect(x0: i32, y0: i32, x1: i32, y1: i32) -> CellRect {
    CellRect::new(x0, y0, x1, y1)
}

/// Kitchen and living room joined by one open door.
fn two_room(seed: u64) -> Generated {
    use Kind::*;
    let mut cv = Canvas::new(64, 40, seed);
    cv.fill(2, 2, 30, 37, '.');
    cv.fill(33, 2, 61, 37, '.');
    cv.door("door_1", rect(31, 14, 32, 25), DoorState::Open);
    cv.room("kitchen", &[rect(2, 2, 30, 37), rect(31, 14, 32, 25)]);
    cv.room("living_room", &[rect(33, 2, 61, 37)]);

    cv.object("fridge_1", "fridge", (7, 7), Container(Articulation::Closed));
    cv.object("counter_1", "counter", (20, 6), Fixed);
    cv.on("beer_bottle_1", "beer_bottle", "counter_1", Item);
    cv.object("table_1", "table", (14, 29), Fixed);
    cv.on("apple_1", "apple", "table_1", Item);
    cv.object("cabinet_1", "cabinet", (24, 32), Container(Articulation::Open));
    cv.inside("cup_1", "cup", "cabinet_1", Item);
    cv.object("sofa_1", "sofa", (46, 31), Fixed);
    cv.object("coffee_table_1", "coffee_table", (48, 21), Fixed);
    cv.on("beer_bottle_2", "beer_bottle", "coffee_table_1", Item);
    cv.object("beer_bottle_3", "beer_bottle", (56, 8), Item);
    cv.object("chair_1", "chair", (40, 8), Fixed);
    cv.object("chair_2", "chair", (42, 31), Fixed);

    let tasks = vec![
        task(
            "store_beer",
            "store all beer bottles in $fridge",
            &[("fridge", "fridge_1")],
            &["forall beer_bottle inside $fridge"],
        ),
        task(
            "apple_to_coffee_table",
            "put $apple on $coffee_table",
            &[("apple", "apple_1"), ("coffee_table", "coffee_table_1")],
            &["ontop($apple, $coffee_table)"],
        ),
        task("open_fridge", "open $fridge", &[("fridge", "fridge_1")], &["open($fridge)"]),
        task(
            "close_cabinet",
            "close $cabinet",
            &[("cabinet", "cabinet_1")],
            &["closed($cabinet)"],
        ),
    ];
    Generated {
        scene: cv.finish("two_room"),
        tasks,
    }
}

/// Four rooms off a central corridor; the garage door starts closed.
fn corridor_maze(seed: u64) -> Generated {
    use Kind::*;
    let mut cv = Canvas::new(90, 60, seed);
    cv.fill(2, 26, 87, 33, '.');
    cv.fill(2, 2, 43, 23, '.');
    cv.fill(46, 2, 87, 23, '.');
    cv.fill(2, 36, 43, 57, '_');
    cv.fill(46, 36, 87, 57, '.');
    cv.door("door_bedroom", rect(16, 24, 27, 25), DoorState::Open);
    cv.door("door_bathroom", rect(60, 24, 71, 25), DoorState::Open);
    cv.door("door_living", rect(16, 34, 27, 35), DoorState::Open);
    cv.door("door_garage", rect(60, 34, 71, 35), DoorState::Closed);
    // Door frames count as hallway.
    cv.room(
        "corridor",
        &[
            rect(2, 26, 87, 33),
            rect(16, 24, 27, 25),
            rect(60, 24, 71, 25),
            rect(16, 34, 27, 35),
            rect(60, 34, 71, 35),
        ],
    );
    cv.room("bedroom", &[rect(2, 2, 43, 23)]);
    cv.room("bathroom", &[rect(46, 2, 87, 23)]);
    cv.room("living_room", &[rect(2, 36, 43, 57)]);
    cv.room("garage", &[rect(46, 36, 87, 57)]);

    cv.object("bed_1", "bed", (10, 9), Fixed);
    cv.object("wardrobe_1", "wardrobe", (36, 6), Container(Articulation::Closed));
    cv.object("nightstand_1", "nightstand", (18, 8), Fixed);
    cv.on("book_1", "book", "nightstand_1", Item);
    cv.object("toilet_1", "toilet", (80, 8), Fixed);
    cv.object("towel_rack_1", "towel_rack", (54, 8), Fixed);
    cv.object("towel_1", "towel", (70, 16), Item);
    cv.object("sofa_1", "sofa", (10, 50), Fixed);
    cv.object("tv_1", "tv", (34, 52), Fixed);
    cv.on("remote_1", "remote", "sofa_1", Item);
    cv.object("workbench_1", "workbench", (80, 50), Fixed);
    cv.on("hammer_1", "hammer", "workbench_1", Item);
    cv.object("car_1", "car", (56, 48), Fixed);

    let tasks = vec![
        task(
            "hammer_to_bed",
            "put $hammer on $bed",
            &[("hammer", "hammer_1"), ("bed", "bed_1")],
            &["ontop($hammer, $bed)"],
        ),
        task(
            "book_in_wardrobe",
            "put $book in $wardrobe",
            &[("book", "book_1"), ("wardrobe", "wardrobe_1")],
            &["inside($book, $wardrobe)"],
        ),
        task(
            "hang_towel",
            "put $towel on $rack",
            &[("towel", "towel_1"), ("rack", "towel_rack_1")],
            &["ontop($towel, $rack)"],
        ),
    ];
    Generated {
        scene: cv.finish("corridor_maze"),
        tasks,
    }
}

/// Kitchen and living room with a fenced garden behind a closed gate.
fn indoor_outdoor(seed: u64) -> Generated {
    use Kind::*;
    let mut cv = Canvas::new(90, 50, seed);
    cv.fill(2, 2, 23, 47, '.');
    cv.fill(26, 2, 47, 47, '_');
    cv.fill(50, 0, 89, 49, '%');
    cv.fill(50, 2, 87, 47, ',');
    cv.door("door_1", rect(24, 19, 25, 30), DoorState::Open);
    cv.door("gate_1", rect(48, 19, 49, 30), DoorState::Closed);
    cv.room("kitchen", &[rect(2, 2, 23, 47)]);
    cv.room("living_room", &[rect(26, 2, 47, 47), rect(24, 19, 25, 30)]);
    cv.room("garden", &[rect(50, 2, 87, 47), rect(48, 19, 49, 30)]);

    cv.object("fridge_1", "fridge", (6, 6), Container(Articulation::Closed));
    cv.object("counter_1", "counter", (16, 6), Fixed);
    cv.on("cup_1", "cup", "counter_1", Item);
    cv.object("table_1", "table", (12, 36), Fixed);
    cv.object("cup_2", "cup", (38, 10), Item);
    cv.object("sofa_1", "sofa", (38, 38), Fixed);
    cv.object("tree_1", "tree", (62, 10), Fixed);
    cv.object("tree_2", "tree", (78, 38), Fixed);
    cv.object("ashcan_1", "ashcan", (80, 10), Container(Articulation::Closed));
    cv.object("ball_1", "ball", (66, 36), Item);
    cv.object("potted_plant_1", "potted_plant", (74, 24), Item);

    let tasks = vec![
        task(
            "ball_in_ashcan",
            "throw $ball in $ashcan",
            &[("ball", "ball_1"), ("ashcan", "ashcan_1")],
            &["inside($ball, $ashcan)"],
        ),
        task(
            "plant_to_table",
            "bring $plant to $table",
            &[("plant", "potted_plant_1"), ("table", "table_1")],
            &["ontop($plant, $table)"],
        ),
        task(
            "cups_on_table",
            "put all cups on $table",
            &[("table", "table_1")],
            &["forall cup ontop $table"],
        ),
    ];
    Generated {
        scene: cv.finish("indoor_outdoor"),
        tasks,
    }
}

pub fn generate(template: Template, seed: u64) -> Generated {
    match template {
        Template::TwoRoom => two_room(seed),
        Template::CorridorMaze => corridor_maze(seed),
        Template::IndoorOutdoor => indoor_outdoor(seed),
    }
}

/// Generator seed of the checked-in fixture scenes.
pub const BUNDLED_SEED: u64 = 1;

/// Checked-in suite files, relative to the fixture root.
pub const BUNDLED_FILES: &[(&str, &str)] = &[
    ("suite.json", include_str!("../fixtures/suite.json")),
    ("scenes/two_room.json", include_str!("../fixtures/scenes/two_room.json")),
    ("scenes/corridor_maze.json", include_str!("../fixtures/scenes/corridor_maze.json")),
    ("scenes/indoor_outdoor.json", include_str!("../fixtures/scenes/indoor_outdoor.json")),
    ("tasks/store_beer.json", include_str!("../fixtures/tasks/store_beer.json")),
    ("tasks/apple_to_coffee_table.json", include_str!("../fixtures/tasks/apple_to_coffee_table.json")),
    ("tasks/open_fridge.json", include_str!("../fixtures/tasks/open_fridge.json")),
    ("tasks/close_cabinet.json", include_str!("../fixtures/tasks/close_cabinet.json")),
    ("tasks/hammer_to_bed.json", include_str!("../fixtures/tasks/hammer_to_bed.json")),
    ("tasks/book_in_wardrobe.json", include_str!("../fixtures/tasks/book_in_wardrobe.json")),
    ("tasks/hang_towel.json", include_str!("../fixtures/tasks/hang_towel.json")),
    ("tasks/ball_in_ashcan.json", include_str!("../fixtures/tasks/ball_in_ashcan.json")),
    ("tasks/plant_to_table.json", include_str!("../fixtures/tasks/plant_to_table.json")),
    ("tasks/cups_on_table.json", include_str!("../fixtures/tasks/cups_on_table.json")),
];

pub fn bundled_file(rel: &str) -> Option<&'static str> {
    BUNDLED_FILES.iter().find(|(p, _)| *p == rel).map(|(_, s)| *s)
}

/// The bundled suite, loaded from the embedded copies of the fixture files.
pub fn bundled_suite() -> Vec<crate::agent::Episode> {
    let manifest: crate::agent::SuiteManifest =
        serde_json::from_str(bundled_file("suite.json").unwrap()).expect("bundled manifest parses");
    manifest
        .entries
        .iter()
        .map(|e| {
            crate::agent::Episode::from_sources(
                bundled_file(&e.scene).expect("bundled scene"),
                bundled_file(&e.task).expect("bundled task"),
                e.seed,
            )
            .expect("bundled episode is valid")
        })
        .collect()
}

/// Episode seed per bundled task, chosen so the robot starts away from what it needs.
fn episode_seed(task: &str) -> u64 {
    match task {
        "store_beer" => 2,
        "close_cabinet" => 3,
        "hammer_to_bed" => 2,
        "book_in_wardrobe" => 1,
        "hang_towel" => 4,
        "plant_to_table" => 1,
        "cups_on_table" => 9,
        _ => 0,
    }
}

/// Suite manifest matching the generated files: every task of every template.
pub fn bundled_manifest() -> crate::agent::SuiteManifest {
    let mut entries = Vec::new();
    for t in Template::ALL {
        for task in generate(t, BUNDLED_SEED).tasks {
            entries.push(crate::agent::SuiteEntry {
                scene: format!("scenes/{}.json", t.scene_name()),
                task: format!("tasks/{}.json", task.name),
                seed: episode_seed(&task.name),
            });
        }
    }
    crate::agent::SuiteManifest {
        name: "bundled".into(),
        entries,
    }
}

/// Fully known perfect maze: a recursive backtracker over `cols` x `rows` lattice cells,
/// each carved 3 grid cells wide between 1-cell walls.
pub fn maze_map(seed: u64, cols: i32, rows: i32) -> BevMap {
    const SCALE: i32 = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut visited = BTreeSet::from([(0, 0)]);
    let mut passages = Vec::new();
    let mut stack = vec![(0, 0)];
    while let Some(&(cx, cy)) = stack.last() {
        let nbrs: Vec<(i32, i32)> = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .iter()
            .map(|(dx, dy)| (cx + dx, cy + dy))
            .filter(|&(x, y)| x >= 0 && y >= 0 && x < cols && y < rows && !visited.contains(&(x, y)))
            .collect();
        if nbrs.is_empty() {
            stack.pop();
            continue;
        }
        let n = nbrs[rng.random_range(0..nbrs.len())];
        visited.insert(n);
        passages.push(((cx, cy), n));
        stack.push(n);
    }
    let mut free = BTreeSet::new();
    for cy in 0..rows {
        for cx in 0..cols {
            for dy in 1..SCALE {
                for dx in 1..SCALE {
                    free.insert((cx * SCALE + dx, cy * SCALE + dy));
                }
            }
        }
    }
    for ((ax, ay), (bx, by)) in passages {
        let (x0, y0) = (ax.min(bx), ay.min(by));
        for k in 1..SCALE {
            free.insert(if ay == by {
                ((x0 + 1) * SCALE, y0 * SCALE + k)
            } else {
                (x0 * SCALE + k, (y0 + 1) * SCALE)
            });
        }
    }
    let (w, h) = ((cols * SCALE + 1) as usize, (rows * SCALE + 1) as usize);
    let mut map = BevMap::new(w, h, DEFAULT_RESOLUTION_M, default_free_space());
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if free.contains(&(x, y)) {
                map.set(Cell::new(x, y), Occupancy::Free, Some("floor"));
            } else {
                map.set(Cell::new(x, y), Occupancy::Occupied, Some("wall"));
            }
        }
    }
    map
}
