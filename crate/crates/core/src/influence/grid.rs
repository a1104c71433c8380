//! Signed influence maps.
//!
//! Every unit radiates `sign * i0 / (1 + d)` onto the cells within its
//! influence radius, where `i0` is its health fraction, `d` the distance in
//! cells from the unit's own cell, and `sign` is +1 for allies and -1 for
//! enemies. Overlapping contributions add and the result is clamped to
//! `[-1, 1]`.

use super::EncodingError;
use crate::engine::{LocalObservation, Team, UnitState};
use std::fmt;

/// Side of the global map grid.
pub const MAIM_SIDE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resolution {
    R19,
    R37,
    R55,
}

impl Resolution {
    pub const ALL: [Resolution; 3] = [Resolution::R19, Resolution::R37, Resolution::R55];

    pub fn side(self) -> usize {
        match self {
            Resolution::R19 => 19,
            Resolution::R37 => 37,
            Resolution::R55 => 55,
        }
    }

    pub fn from_side(side: usize) -> Option<Resolution> {
        Resolution::ALL.into_iter().find(|r| r.side() == side)
    }
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution::R37
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.side();
        write!(f, "{s}x{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frame {
    /// Egocentric square window centred on the observer.
    Local,
    /// The whole map squeezed onto a 64x64 grid.
    Global,
}

/// Parameters of one unit's influence: source intensity and reach in grid
/// cells. Decay is fixed to `1 / (1 + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AimParams {
    pub i0: f64,
    pub radius: f64,
}

/// How world coordinates land on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub frame: Frame,
    pub side: usize,
    /// Grid cells per world cell.
    pub scale: f64,
    /// Observer position for local grids.
    origin: (i32, i32),
}

impl GridSpec {
    pub fn global(map_width: i32, map_height: i32) -> GridSpec {
        let longest = map_width.max(map_height).max(1);
        GridSpec {
            frame: Frame::Global,
            side: MAIM_SIDE,
            scale: MAIM_SIDE as f64 / f64::from(longest),
            origin: (0, 0),
        }
    }

    /// Window spanning `[-sight_range, sight_range]` around `observer`.
    pub fn local(resolution: Resolution, sight_range: f64, observer: (i32, i32)) -> GridSpec {
        let side = resolution.side();
        GridSpec {
            frame: Frame::Local,
            side,
            scale: (side - 1) as f64 / (2.0 * sight_range),
            origin: observer,
        }
    }

    fn center(&self) -> usize {
        (self.side - 1) / 2
    }

    /// Cell `(row, col)` for a position relative to the origin.
    pub fn cell_of_offset(&self, dx: f64, dy: f64) -> Option<(usize, usize)> {
        let (col, row) = match self.frame {
            Frame::Local => {
                let c = self.center() as f64;
                (c + (dx * self.scale).round(), c + (dy * self.scale).round())
            }
            Frame::Global => {
                let max = (self.side - 1) as f64;
                let x = f64::from(self.origin.0) + dx;
                let y = f64::from(self.origin.1) + dy;
                (((x + 0.5) * self.scale).floor().min(max), ((y + 0.5) * self.scale).floor().min(max))
            }
        };
        let limit = self.side as f64;
        if col < 0.0 || row < 0.0 || col >= limit || row >= limit {
            return None;
        }
        Some((row as usize, col as usize))
    }

    /// Cell of a world position.
    pub fn cell_of(&self, x: i32, y: i32) -> Option<(usize, usize)> {
        self.cell_of_offset(f64::from(x - self.origin.0), f64::from(y - self.origin.1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceGrid {
    frame: Frame,
    side: usize,
    cells: Vec<f64>,
}

impl InfluenceGrid {
    pub fn zeros(frame: Frame, side: usize) -> Self {
        Self {
            frame,
            side,
            cells: vec![0.0; side * side],
        }
    }

    pub fn zeros_local(resolution: Resolution) -> Self {
        Self::zeros(Frame::Local, resolution.side())
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// `(rows, cols)`; grids are always square.
    pub fn resolution(&self) -> (usize, usize) {
        (self.side, self.side)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.side + col]
    }

    /// Row-major cell values.
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Adds one unit's influence centred on `(row, col)`.
    pub fn deposit(&mut self, row: usize, col: usize, aim: AimParams, sign: f64) {
        if aim.i0 <= 0.0 {
            return;
        }
        let reach = aim.radius.floor().max(0.0) as usize;
        let r0 = row.saturating_sub(reach);
        let r1 = (row + reach).min(self.side - 1);
        let c0 = col.saturating_sub(reach);
        let c1 = (col + reach).min(self.side - 1);
        for r in r0..=r1 {
            let dr = r as f64 - row as f64;
            for c in c0..=c1 {
                let dc = c as f64 - col as f64;
                let d = (dr * dr + dc * dc).sqrt();
                if d <= aim.radius {
                    self.cells[r * self.side + c] += sign * aim.i0 / (1.0 + d);
                }
            }
        }
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.cells {
            *v = v.clamp(-1.0, 1.0);
        }
    }

    /// Copy with columns reversed.
    pub fn mirrored_columns(&self) -> InfluenceGrid {
        let mut out = self.clone();
        for r in 0..self.side {
            for c in 0..self.side {
                out.cells[r * self.side + c] = self.cells[r * self.side + (self.side - 1 - c)];
            }
        }
        out
    }
}

pub fn team_sign(team: Team) -> f64 {
    match team {
        Team::Ally => 1.0,
        Team::Enemy => -1.0,
    }
}

/// Influence of a single unit on `spec`'s grid, with reach `radius` in world
/// cells. Dead units contribute nothing.
pub fn build_agent_im(unit: &UnitState, spec: &GridSpec, sign: f64, radius: f64) -> InfluenceGrid {
    let mut grid = InfluenceGrid::zeros(spec.frame, spec.side);
    if !unit.alive {
        return grid;
    }
    if let Some((row, col)) = spec.cell_of(unit.position.x, unit.position.y) {
        let aim = AimParams {
            i0: unit.health_fraction(),
            radius: radius * spec.scale,
        };
        grid.deposit(row, col, aim, sign);
    }
    grid.clamp_unit();
    grid
}

/// Global influence map over all living units, allies positive. The same
/// grid is shared by every observer.
pub fn build_maim(units: &[UnitState], map_width: i32, map_height: i32, radius: f64) -> InfluenceGrid {
    let spec = GridSpec::global(map_width, map_height);
    let mut grid = InfluenceGrid::zeros(Frame::Global, MAIM_SIDE);
    for u in units.iter().filter(|u| u.alive) {
        if let Some((row, col)) = spec.cell_of(u.position.x, u.position.y) {
            let aim = AimParams {
                i0: u.health_fraction(),
                radius: radius * spec.scale,
            };
            grid.deposit(row, col, aim, team_sign(u.team));
        }
    }
    grid.clamp_unit();
    grid
}

/// Egocentric influence map of one observation. The observer sits at the
/// centre cell; other units' influence reaches as far as the observer can see.
pub fn build_local_im(obs: &LocalObservation, resolution: Resolution) -> Result<InfluenceGrid, EncodingError> {
    let sight = obs.sight_range;
    let spec = GridSpec::local(resolution, sight, (0, 0));
    let radius = sight * spec.scale;
    let mut grid = InfluenceGrid::zeros_local(resolution);

    // The observer marks only its own cell; radiating it would blur every
    // neighbour's peak.
    let centre = (resolution.side() - 1) / 2;
    let own = AimParams {
        i0: obs.self_features.health_fraction,
        radius: 0.0,
    };
    grid.deposit(centre, centre, own, 1.0);

    let seen = obs
        .visible_allies
        .iter()
        .map(|u| (u, 1.0))
        .chain(obs.visible_enemies.iter().map(|u| (u, -1.0)));
    for (unit, sign) in seen {
        if unit.distance > sight {
            return Err(EncodingError::BeyondSight {
                unit_id: unit.unit_id,
                distance: unit.distance,
                sight_range: sight,
            });
        }
        let (dx, dy) = unit.relative_position;
        let (row, col) = spec
            .cell_of_offset(dx, dy)
            .ok_or(EncodingError::BeyondSight {
                unit_id: unit.unit_id,
                distance: unit.distance,
                sight_range: sight,
            })?;
        let aim = AimParams {
            i0: unit.health_fraction,
            radius,
        };
        grid.deposit(row, col, aim, sign);
    }
    grid.clamp_unit();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Action, Position, SelfFeatures, UnitTypeSpec, VisibleUnit};

    fn marine(id: usize, team: Team, x: i32, y: i32) -> UnitState {
        let spec = UnitTypeSpec {
            type_id: 0,
            max_hitpoints: 45.0,
            max_shield: 0.0,
            damage: 6.0,
            attack_range: 5.0,
            cooldown_steps: 1,
            move_speed: 1,
        };
        UnitState {
            unit_id: id,
            team,
            spec,
            position: Position::new(x, y),
            hitpoints: 45.0,
            shield: 0.0,
            cooldown_remaining: 0,
            alive: true,
            last_action: Action::Stop,
        }
    }

    fn observation(allies: &[(f64, f64)], enemies: &[(f64, f64)]) -> LocalObservation {
        let seen = |list: &[(f64, f64)], base: usize| -> Vec<VisibleUnit> {
            list.iter()
                .enumerate()
                .map(|(i, &(dx, dy))| VisibleUnit {
                    unit_id: base + i,
                    distance: (dx * dx + dy * dy).sqrt(),
                    relative_position: (dx, dy),
                    health_fraction: 1.0,
                    shield_fraction: 0.0,
                    type_id: 0,
                })
                .collect()
        };
        LocalObservation {
            observer_id: 0,
            sight_range: 9.0,
            visible_allies: seen(allies, 1),
            visible_enemies: seen(enemies, 100),
            self_features: SelfFeatures {
                health_fraction: 1.0,
                shield_fraction: 0.0,
                cooldown_fraction: 0.0,
                x_fraction: 0.5,
                y_fraction: 0.5,
                last_action: Action::Stop,
            },
        }
    }

    #[test]
    fn agent_im_peaks_at_unit_cell() {
        // 64x64 map: one grid cell per world cell.
        let spec = GridSpec::global(64, 64);
        let u = marine(0, Team::Ally, 10, 20);
        let g = build_agent_im(&u, &spec, 1.0, 9.0);
        assert_eq!(g.get(20, 10), 1.0);
        let e = marine(1, Team::Enemy, 10, 20);
        let g = build_agent_im(&e, &spec, -1.0, 9.0);
        assert!((g.get(20, 12) + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.get(20, 20), 0.0);
    }

    #[test]
    fn dead_unit_has_no_influence() {
        let mut u = marine(0, Team::Ally, 5, 5);
        u.alive = false;
        u.hitpoints = 0.0;
        let g = build_agent_im(&u, &GridSpec::global(64, 64), 1.0, 9.0);
        assert!(g.cells().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_maim_is_zero() {
        let g = build_maim(&[], 16, 16, 9.0);
        assert_eq!(g.side(), 64);
        assert!(g.cells().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stacked_allies_clamp_to_one() {
        // Three full-health allies on one cell sum to 3 before clamping.
        let units: Vec<_> = (0..3).map(|i| marine(i, Team::Ally, 32, 32)).collect();
        let g = build_maim(&units, 64, 64, 9.0);
        assert_eq!(g.get(32, 32), 1.0);
        // Two cells away: 3 * 1/3 = 1.
        assert!((g.get(32, 34) - 1.0).abs() < 1e-12);
        // Three cells away: 3 * 1/4 = 0.75.
        assert!((g.get(32, 35) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn swapping_ally_and_enemy_negates_maim() {
        let a = vec![marine(0, Team::Ally, 10, 30), marine(1, Team::Enemy, 50, 30)];
        let b = vec![marine(0, Team::Ally, 50, 30), marine(1, Team::Enemy, 10, 30)];
        let ga = build_maim(&a, 64, 64, 9.0);
        let gb = build_maim(&b, 64, 64, 9.0);
        for (x, y) in ga.cells().iter().zip(gb.cells()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn lone_observer_only_radiates_itself() {
        let obs = observation(&[], &[]);
        let g = build_local_im(&obs, Resolution::R19).unwrap();
        assert_eq!(g.get(9, 9), 1.0);
        let nonzero = g.cells().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn ally_and_enemy_peaks() {
        // 19x19: one grid cell per world cell.
        let obs = observation(&[(-6.0, 0.0)], &[(6.0, 0.0)]);
        let g = build_local_im(&obs, Resolution::R19).unwrap();
        assert_eq!(g.get(9, 3), 1.0);
        assert_eq!(g.get(9, 15), -1.0);
    }

    #[test]
    fn unit_beyond_sight_is_rejected() {
        let obs = observation(&[], &[(9.0, 3.0)]);
        assert!(matches!(
            build_local_im(&obs, Resolution::R37),
            Err(EncodingError::BeyondSight { unit_id: 100, .. })
        ));
    }

    #[test]
    fn local_grid_scaling() {
        let spec = GridSpec::local(Resolution::R37, 9.0, (0, 0));
        assert_eq!(spec.cell_of_offset(0.0, 0.0), Some((18, 18)));
        assert_eq!(spec.cell_of_offset(9.0, -9.0), Some((0, 36)));
        assert_eq!(spec.cell_of_offset(-1.0, 0.0), Some((18, 16)));
    }

    #[test]
    fn global_grid_scaling() {
        let spec = GridSpec::global(16, 16);
        assert_eq!(spec.cell_of(0, 0), Some((2, 2)));
        assert_eq!(spec.cell_of(15, 15), Some((62, 62)));
        let spec = GridSpec::global(8, 8);
        assert_eq!(spec.cell_of(7, 0), Some((4, 60)));
    }
}
