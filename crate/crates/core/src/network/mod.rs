//! Road network model: intersections, three-lane roads, movements and the
//! fixed eight-phase table of a four-way signalized intersection.

mod demand;
mod flow;
mod grid;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub use demand::{boundary_demand, DemandSpec};
pub use flow::{FlowError, FlowRule, FlowSpec};
pub use grid::generate_grid;

/// Vehicles per lane at jam density.
pub const JAM_SPACING_M: f64 = 7.5;

/// Lanes per road, ordered left-turn, through, right-turn.
pub const LANES_PER_ROAD: usize = 3;

/// Phases per signalized intersection.
pub const NUM_PHASES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntersectionId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoadId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneId(pub u32);

impl IntersectionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RoadId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl LaneId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Phase number, 1 through 8.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhaseId(u8);

impl PhaseId {
    pub const ALL: [PhaseId; NUM_PHASES] = [
        PhaseId(1),
        PhaseId(2),
        PhaseId(3),
        PhaseId(4),
        PhaseId(5),
        PhaseId(6),
        PhaseId(7),
        PhaseId(8),
    ];

    pub fn new(id: u8) -> Option<Self> {
        (1..=NUM_PHASES as u8).contains(&id).then_some(PhaseId(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position in the phase table.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Turn {
    Left,
    Through,
    Right,
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::Left, Turn::Through, Turn::Right];

    pub fn index(self) -> usize {
        match self {
            Turn::Left => 0,
            Turn::Through => 1,
            Turn::Right => 2,
        }
    }
}

/// Compass side of an intersection, clockwise from north.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Compass {
    North,
    East,
    South,
    West,
}

impl Compass {
    pub const ALL: [Compass; 4] = [Compass::North, Compass::East, Compass::South, Compass::West];

    pub fn index(self) -> usize {
        self as usize
    }

    fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    pub fn opposite(self) -> Self {
        Self::from_index(self.index() + 2)
    }

    /// Side a vehicle arriving from `self` leaves towards when making `turn`
    /// (right-hand traffic).
    pub fn exit_side(self, turn: Turn) -> Self {
        match turn {
            Turn::Through => self.opposite(),
            Turn::Left => Self::from_index(self.index() + 1),
            Turn::Right => Self::from_index(self.index() + 3),
        }
    }

    /// Dominant direction of a displacement; `None` for zero or diagonal vectors.
    pub fn of_vector(dx: f64, dy: f64) -> Option<Self> {
        let (ax, ay) = (libm::fabs(dx), libm::fabs(dy));
        if ay > ax {
            Some(if dy > 0.0 { Compass::North } else { Compass::South })
        } else if ax > ay {
            Some(if dx > 0.0 { Compass::East } else { Compass::West })
        } else {
            None
        }
    }
}

/// The eight phases as pairs of (approach side, turn). The first entry of each
/// pair is `l1`, the second `l2`.
pub const PHASE_TABLE: [[(Compass, Turn); 2]; NUM_PHASES] = {
    use Compass::*;
    use Turn::*;
    [
        [(North, Through), (South, Through)],
        [(East, Through), (West, Through)],
        [(North, Left), (South, Left)],
        [(East, Left), (West, Left)],
        [(North, Through), (North, Left)],
        [(South, Through), (South, Left)],
        [(East, Through), (East, Left)],
        [(West, Through), (West, Left)],
    ]
};

/// Whether two signal-controlled movements (identified by approach side and
/// turn) cross or merge. Right turns are never signal-controlled and conflict
/// with nothing here.
pub fn movements_conflict(a: (Compass, Turn), b: (Compass, Turn)) -> bool {
    let ((side_a, turn_a), (side_b, turn_b)) = (a, b);
    if turn_a == Turn::Right || turn_b == Turn::Right || side_a == side_b {
        return false;
    }
    if side_b == side_a.opposite() {
        // opposing left against through crosses; matching pairs run parallel
        return turn_a != turn_b;
    }
    true
}

#[derive(Clone, Debug, PartialEq)]
pub struct Intersection {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub is_virtual: bool,
    /// Roads listed by the source file, in file order.
    pub roads: Vec<RoadId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Road {
    pub name: String,
    pub start: IntersectionId,
    pub end: IntersectionId,
    pub length: f64,
    pub max_speed: f64,
    pub lanes: [LaneId; LANES_PER_ROAD],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lane {
    pub id: LaneId,
    pub road: RoadId,
    pub turn: Turn,
    pub length: f64,
    pub free_flow_speed: f64,
    pub capacity: u32,
}

impl Lane {
    pub fn travel_time(&self) -> f64 {
        self.length / self.free_flow_speed
    }
}

/// Lane capacity for a given length: `max(1, floor(length / 7.5))`.
pub fn lane_capacity(length: f64) -> u32 {
    let slots = libm::floor(length / JAM_SPACING_M);
    if slots < 1.0 {
        1
    } else {
        slots as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Movement {
    pub from_lane: LaneId,
    pub to_lane: LaneId,
    pub turn: Turn,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseDef {
    pub id: PhaseId,
    /// `(l1, l2)`.
    pub incoming: (LaneId, LaneId),
    /// `m1..m6`: the left, through and right lanes downstream of `l1`, then of `l2`.
    pub movements: [Movement; 6],
}

impl PhaseDef {
    /// The eight lanes a phase observes: `l1, l2, m1, .., m6`.
    pub fn lanes(&self) -> [LaneId; 8] {
        let m = &self.movements;
        [
            self.incoming.0,
            self.incoming.1,
            m[0].to_lane,
            m[1].to_lane,
            m[2].to_lane,
            m[3].to_lane,
            m[4].to_lane,
            m[5].to_lane,
        ]
    }

    pub fn releases(&self, lane: LaneId) -> bool {
        self.incoming.0 == lane || self.incoming.1 == lane
    }
}

/// Geometry of a signalized intersection.
#[derive(Clone, Debug, PartialEq)]
pub struct Junction {
    pub intersection: IntersectionId,
    /// Incoming road arriving from each compass side.
    pub incoming: [RoadId; 4],
    /// Outgoing road leaving towards each compass side.
    pub outgoing: [RoadId; 4],
    pub phases: [PhaseDef; NUM_PHASES],
}

impl Junction {
    pub fn phase(&self, id: PhaseId) -> &PhaseDef {
        &self.phases[id.index()]
    }

    pub fn exit_road(&self, approach: Compass, turn: Turn) -> RoadId {
        self.outgoing[approach.exit_side(turn).index()]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("duplicate intersection id `{0}`")]
    DuplicateIntersection(String),
    #[error("duplicate road id `{0}`")]
    DuplicateRoad(String),
    #[error("road `{road}` references unknown intersection `{intersection}`")]
    UnknownIntersection { road: String, intersection: String },
    #[error("intersection `{intersection}` references unknown road `{road}`")]
    UnknownRoad { intersection: String, road: String },
    #[error("road `{0}` starts and ends at the same intersection")]
    SelfLoop(String),
    #[error("road `{road}` has {lanes} lanes, expected 3")]
    LaneCount { road: String, lanes: usize },
    #[error("road `{road}`: {what} must be positive and finite")]
    NonPositive { road: String, what: &'static str },
    #[error("signalized intersection `{intersection}` has {incoming} incoming and {outgoing} outgoing roads, expected 4 and 4")]
    NotFourWay {
        intersection: String,
        incoming: usize,
        outgoing: usize,
    },
    #[error("intersection `{intersection}`: {reason}")]
    Geometry { intersection: String, reason: &'static str },
    #[error("intersection index {0} is out of range")]
    NoSuchIntersection(u32),
}

/// Input record for one intersection.
#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub roads: Vec<String>,
    pub is_virtual: bool,
}

/// Input record for one road.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadSpec {
    pub id: String,
    pub start: String,
    pub end: String,
    pub length: f64,
    pub max_speed: f64,
    pub lanes: usize,
}

/// Validated, immutable road network.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadNetwork {
    intersections: Vec<Intersection>,
    roads: Vec<Road>,
    lanes: Vec<Lane>,
    junctions: Vec<Junction>,
    junction_of: Vec<Option<u32>>,
    road_names: BTreeMap<String, RoadId>,
}

impl RoadNetwork {
    pub fn from_specs(intersections: Vec<IntersectionSpec>, roads: Vec<RoadSpec>) -> Result<Self, NetworkError> {
        let mut node_names = BTreeMap::new();
        for (i, spec) in intersections.iter().enumerate() {
            if node_names.insert(spec.id.clone(), IntersectionId(i as u32)).is_some() {
                return Err(NetworkError::DuplicateIntersection(spec.id.clone()));
            }
        }

        let mut road_names = BTreeMap::new();
        let mut built_roads = Vec::with_capacity(roads.len());
        let mut lanes = Vec::with_capacity(roads.len() * LANES_PER_ROAD);
        for (r, spec) in roads.into_iter().enumerate() {
            let road_id = RoadId(r as u32);
            if road_names.insert(spec.id.clone(), road_id).is_some() {
                return Err(NetworkError::DuplicateRoad(spec.id));
            }
            let lookup = |name: &String| {
                node_names
                    .get(name)
                    .copied()
                    .ok_or_else(|| NetworkError::UnknownIntersection {
                        road: spec.id.clone(),
                        intersection: name.clone(),
                    })
            };
            let start = lookup(&spec.start)?;
            let end = lookup(&spec.end)?;
            if start == end {
                return Err(NetworkError::SelfLoop(spec.id));
            }
            if spec.lanes != LANES_PER_ROAD {
                return Err(NetworkError::LaneCount {
                    road: spec.id,
                    lanes: spec.lanes,
                });
            }
            if !(spec.length.is_finite() && spec.length > 0.0) {
                return Err(NetworkError::NonPositive {
                    road: spec.id,
                    what: "length",
                });
            }
            if !(spec.max_speed.is_finite() && spec.max_speed > 0.0) {
                return Err(NetworkError::NonPositive {
                    road: spec.id,
                    what: "maxSpeed",
                });
            }
            let base = lanes.len() as u32;
            let lane_ids = [LaneId(base), LaneId(base + 1), LaneId(base + 2)];
            for (k, turn) in Turn::ALL.into_iter().enumerate() {
                lanes.push(Lane {
                    id: lane_ids[k],
                    road: road_id,
                    turn,
                    length: spec.length,
                    free_flow_speed: spec.max_speed,
                    capacity: lane_capacity(spec.length),
                });
            }
            built_roads.push(Road {
                name: spec.id,
                start,
                end,
                length: spec.length,
                max_speed: spec.max_speed,
                lanes: lane_ids,
            });
        }

        let mut built_nodes = Vec::with_capacity(intersections.len());
        for spec in intersections {
            let mut listed = Vec::with_capacity(spec.roads.len());
            for name in &spec.roads {
                let id = road_names.get(name).copied().ok_or_else(|| NetworkError::UnknownRoad {
                    intersection: spec.id.clone(),
                    road: name.clone(),
                })?;
                listed.push(id);
            }
            built_nodes.push(Intersection {
                name: spec.id,
                x: spec.x,
                y: spec.y,
                is_virtual: spec.is_virtual,
                roads: listed,
            });
        }

        let mut network = RoadNetwork {
            intersections: built_nodes,
            roads: built_roads,
            lanes,
            junctions: Vec::new(),
            junction_of: Vec::new(),
            road_names,
        };
        network.build_junctions()?;
        Ok(network)
    }

    fn build_junctions(&mut self) -> Result<(), NetworkError> {
        let mut junction_of = alloc::vec![None; self.intersections.len()];
        let mut junctions = Vec::new();
        for (i, node) in self.intersections.iter().enumerate() {
            if node.is_virtual {
                continue;
            }
            let id = IntersectionId(i as u32);
            let incoming = self.roads.iter().filter(|r| r.end == id).count();
            let outgoing = self.roads.iter().filter(|r| r.start == id).count();
            if incoming != 4 || outgoing != 4 {
                return Err(NetworkError::NotFourWay {
                    intersection: node.name.clone(),
                    incoming,
                    outgoing,
                });
            }
            let (inc, out) = self.approaches(id)?;
            junction_of[i] = Some(junctions.len() as u32);
            junctions.push(Junction {
                intersection: id,
                incoming: inc,
                outgoing: out,
                phases: self.phase_table(&inc, &out),
            });
        }
        self.junctions = junctions;
        self.junction_of = junction_of;
        Ok(())
    }

    /// Incoming and outgoing roads of an intersection keyed by compass side.
    fn approaches(&self, id: IntersectionId) -> Result<([RoadId; 4], [RoadId; 4]), NetworkError> {
        let node = &self.intersections[id.index()];
        let geometry = |reason| NetworkError::Geometry {
            intersection: node.name.clone(),
            reason,
        };
        let mut inc: [Option<RoadId>; 4] = [None; 4];
        let mut out: [Option<RoadId>; 4] = [None; 4];
        for (r, road) in self.roads.iter().enumerate() {
            let (slot, other) = if road.end == id {
                (&mut inc, road.start)
            } else if road.start == id {
                (&mut out, road.end)
            } else {
                continue;
            };
            let o = &self.intersections[other.index()];
            let side = Compass::of_vector(o.x - node.x, o.y - node.y)
                .ok_or_else(|| geometry("neighbour lies on a diagonal or coincides"))?;
            if slot[side.index()].replace(RoadId(r as u32)).is_some() {
                return Err(geometry("two roads on the same compass side"));
            }
        }
        let collect = |slots: [Option<RoadId>; 4]| -> Result<[RoadId; 4], NetworkError> {
            let mut ids = [RoadId(0); 4];
            for (k, s) in slots.into_iter().enumerate() {
                ids[k] = s.ok_or_else(|| geometry("missing approach"))?;
            }
            Ok(ids)
        };
        Ok((collect(inc)?, collect(out)?))
    }

    fn phase_table(&self, incoming: &[RoadId; 4], outgoing: &[RoadId; 4]) -> [PhaseDef; NUM_PHASES] {
        let lane_of = |road: RoadId, turn: Turn| self.roads[road.index()].lanes[turn.index()];
        let movements_of = |side: Compass, turn: Turn| -> (LaneId, [Movement; 3]) {
            let from_lane = lane_of(incoming[side.index()], turn);
            let exit = outgoing[side.exit_side(turn).index()];
            let m = Turn::ALL.map(|t| Movement {
                from_lane,
                to_lane: lane_of(exit, t),
                turn,
            });
            (from_lane, m)
        };
        core::array::from_fn(|p| {
            let [(s1, t1), (s2, t2)] = PHASE_TABLE[p];
            let (l1, m1) = movements_of(s1, t1);
            let (l2, m2) = movements_of(s2, t2);
            PhaseDef {
                id: PhaseId::ALL[p],
                incoming: (l1, l2),
                movements: [m1[0], m1[1], m1[2], m2[0], m2[1], m2[2]],
            }
        })
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    pub fn roads(&self) -> &[Road] {
        &self.roads
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    /// Signalized intersections in intersection order.
    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn intersection(&self, id: IntersectionId) -> &Intersection {
        &self.intersections[id.index()]
    }

    pub fn road(&self, id: RoadId) -> &Road {
        &self.roads[id.index()]
    }

    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.index()]
    }

    pub fn road_by_name(&self, name: &str) -> Option<RoadId> {
        self.road_names.get(name).copied()
    }

    pub fn intersection_by_name(&self, name: &str) -> Option<IntersectionId> {
        self.intersections
            .iter()
            .position(|n| n.name == name)
            .map(|i| IntersectionId(i as u32))
    }

    pub fn junction(&self, id: IntersectionId) -> Option<&Junction> {
        let j = (*self.junction_of.get(id.index())?)?;
        Some(&self.junctions[j as usize])
    }

    /// Position of a signalized intersection within [`RoadNetwork::junctions`].
    pub fn junction_index(&self, id: IntersectionId) -> Option<usize> {
        self.junction_of.get(id.index()).copied().flatten().map(|j| j as usize)
    }

    /// The eight phases of a signalized intersection.
    pub fn enumerate_phases(&self, id: IntersectionId) -> Result<[PhaseDef; NUM_PHASES], NetworkError> {
        let node = self
            .intersections
            .get(id.index())
            .ok_or(NetworkError::NoSuchIntersection(id.0))?;
        if node.is_virtual {
            return Err(NetworkError::Geometry {
                intersection: node.name.clone(),
                reason: "boundary intersection has no signal",
            });
        }
        let (inc, out) = self.approaches(id)?;
        Ok(self.phase_table(&inc, &out))
    }

    /// Side of `junction` that `road` arrives from.
    pub fn approach_side(&self, junction: &Junction, road: RoadId) -> Option<Compass> {
        Compass::ALL.into_iter().find(|s| junction.incoming[s.index()] == road)
    }

    /// Turn a vehicle makes when moving from `from` onto `to`. Boundary
    /// intersections are pass-throughs and always count as through. Returns
    /// `None` when the roads are not consecutive or the move is a U-turn.
    pub fn turn_between(&self, from: RoadId, to: RoadId) -> Option<Turn> {
        let (a, b) = (self.road(from), self.road(to));
        if a.end != b.start || b.end == a.start {
            return None;
        }
        let Some(junction) = self.junction(a.end) else {
            return Some(Turn::Through);
        };
        let side = self.approach_side(junction, from)?;
        Turn::ALL.into_iter().find(|&t| junction.exit_road(side, t) == to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn one_by_one() -> RoadNetwork {
        generate_grid(1, 1, 300.0, 10.0)
    }

    #[test]
    fn single_intersection_grid_shape() {
        let net = one_by_one();
        assert_eq!(net.junctions().len(), 1);
        assert_eq!(net.intersections().iter().filter(|n| n.is_virtual).count(), 4);
        assert_eq!(net.roads().len(), 8);
        let j = &net.junctions()[0];
        let lanes: BTreeSet<_> = net
            .roads()
            .iter()
            .filter(|r| r.start == j.intersection || r.end == j.intersection)
            .flat_map(|r| r.lanes)
            .collect();
        assert_eq!(lanes.len(), 24);
    }

    #[test]
    fn phase_table_is_conflict_free() {
        for [a, b] in PHASE_TABLE {
            assert!(!movements_conflict(a, b), "{a:?} / {b:?}");
        }
        // the table lists exactly the non-conflicting pairs of signal-controlled movements
        let controlled: Vec<(Compass, Turn)> = Compass::ALL
            .into_iter()
            .flat_map(|s| [(s, Turn::Through), (s, Turn::Left)])
            .collect();
        let mut free_pairs = 0;
        for (i, a) in controlled.iter().enumerate() {
            for b in &controlled[i + 1..] {
                if !movements_conflict(*a, *b) {
                    free_pairs += 1;
                    assert!(PHASE_TABLE
                        .iter()
                        .any(|[p, q]| (p == a && q == b) || (p == b && q == a)));
                }
            }
        }
        assert_eq!(free_pairs, NUM_PHASES);
    }

    #[test]
    fn phases_cover_each_controlled_lane_twice() {
        let net = generate_grid(2, 2, 300.0, 10.0);
        for j in net.junctions() {
            let phases = net.enumerate_phases(j.intersection).unwrap();
            assert_eq!(phases, j.phases);
            let mut uses: BTreeMap<LaneId, usize> = BTreeMap::new();
            for p in &phases {
                assert_eq!(p.movements.len(), 6);
                *uses.entry(p.incoming.0).or_default() += 1;
                *uses.entry(p.incoming.1).or_default() += 1;
                for m in &p.movements {
                    assert_eq!(net.lane(m.from_lane).turn, m.turn);
                }
            }
            assert_eq!(uses.len(), 8);
            assert!(uses.values().all(|&n| n == 2));
            for lane in uses.keys() {
                assert_ne!(net.lane(*lane).turn, Turn::Right);
                assert_eq!(net.road(net.lane(*lane).road).end, j.intersection);
            }
        }
    }

    #[test]
    fn dual_left_phase() {
        let net = one_by_one();
        let s3 = &net.junctions()[0].phases[2];
        assert_eq!(s3.id.get(), 3);
        assert_eq!(net.lane(s3.incoming.0).turn, Turn::Left);
        assert_eq!(net.lane(s3.incoming.1).turn, Turn::Left);
    }

    #[test]
    fn downstream_lanes_follow_turn_geometry() {
        let net = one_by_one();
        let j = &net.junctions()[0];
        // s1: l1 = north through, leaving south
        let s1 = &j.phases[0];
        let south_out = net.road(j.outgoing[Compass::South.index()]);
        assert_eq!(s1.movements[0].to_lane, south_out.lanes[0]);
        assert_eq!(s1.movements[1].to_lane, south_out.lanes[1]);
        assert_eq!(s1.movements[2].to_lane, south_out.lanes[2]);
        // s5: l1 through, l2 left from the north; the left turn heads east
        let s5 = &j.phases[4];
        assert_eq!(net.lane(s5.incoming.0).turn, Turn::Through);
        assert_eq!(net.lane(s5.incoming.1).turn, Turn::Left);
        let east_out = net.road(j.outgoing[Compass::East.index()]);
        assert_eq!(s5.movements[3].to_lane, east_out.lanes[0]);
    }

    #[test]
    fn turn_between_rejects_u_turns_and_gaps() {
        let net = one_by_one();
        let j = &net.junctions()[0];
        let from_north = j.incoming[Compass::North.index()];
        assert_eq!(
            net.turn_between(from_north, j.outgoing[Compass::South.index()]),
            Some(Turn::Through)
        );
        assert_eq!(
            net.turn_between(from_north, j.outgoing[Compass::East.index()]),
            Some(Turn::Left)
        );
        assert_eq!(
            net.turn_between(from_north, j.outgoing[Compass::West.index()]),
            Some(Turn::Right)
        );
        assert_eq!(net.turn_between(from_north, j.outgoing[Compass::North.index()]), None);
        assert_eq!(net.turn_between(from_north, j.incoming[Compass::South.index()]), None);
    }

    #[test]
    fn capacity_from_length() {
        assert_eq!(lane_capacity(300.0), 40);
        assert_eq!(lane_capacity(7.4), 1);
        assert_eq!(lane_capacity(7.5), 1);
        assert_eq!(lane_capacity(15.1), 2);
    }

    fn spec_node(id: &str, x: f64, y: f64, v: bool) -> IntersectionSpec {
        IntersectionSpec {
            id: id.into(),
            x,
            y,
            roads: Vec::new(),
            is_virtual: v,
        }
    }

    fn spec_road(id: &str, a: &str, b: &str) -> RoadSpec {
        RoadSpec {
            id: id.into(),
            start: a.into(),
            end: b.into(),
            length: 100.0,
            max_speed: 10.0,
            lanes: 3,
        }
    }

    #[test]
    fn validation_errors() {
        let nodes = || alloc::vec![spec_node("a", 0.0, 0.0, true), spec_node("b", 100.0, 0.0, true)];
        let err = RoadNetwork::from_specs(nodes(), alloc::vec![spec_road("r", "a", "zz")]).unwrap_err();
        assert!(matches!(err, NetworkError::UnknownIntersection { .. }));

        let mut bad = nodes();
        bad[0].roads.push("nope".into());
        let err = RoadNetwork::from_specs(bad, alloc::vec![spec_road("r", "a", "b")]).unwrap_err();
        assert!(matches!(err, NetworkError::UnknownRoad { .. }));

        let mut two_lanes = spec_road("r", "a", "b");
        two_lanes.lanes = 2;
        let err = RoadNetwork::from_specs(nodes(), alloc::vec![two_lanes]).unwrap_err();
        assert_eq!(
            err,
            NetworkError::LaneCount {
                road: "r".into(),
                lanes: 2
            }
        );

        let err = RoadNetwork::from_specs(nodes(), alloc::vec![spec_road("r", "a", "a")]).unwrap_err();
        assert!(matches!(err, NetworkError::SelfLoop(_)));

        // a signalized node with only two roads
        let mut three = nodes();
        three.push(spec_node("c", 50.0, 0.0, false));
        let roads = alloc::vec![spec_road("r1", "a", "c"), spec_road("r2", "c", "b")];
        let err = RoadNetwork::from_specs(three, roads).unwrap_err();
        assert!(matches!(
            err,
            NetworkError::NotFourWay {
                incoming: 1,
                outgoing: 1,
                ..
            }
        ));
    }

    #[test]
    fn virtual_intersection_has_no_phases() {
        let net = one_by_one();
        let boundary = net.intersections().iter().position(|n| n.is_virtual).unwrap();
        let err = net.enumerate_phases(IntersectionId(boundary as u32)).unwrap_err();
        assert!(matches!(err, NetworkError::Geometry { .. }));
    }
}
