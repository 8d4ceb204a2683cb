#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "avgopt/mdp.hpp"
#include "avgopt/options.hpp"

namespace avgopt {

enum class Cell : unsigned char { wall, floor, hallway, start, goal1, goal2, goal3 };

struct GridPos {
  int row = 0;
  int col = 0;
  friend bool operator==(GridPos, GridPos) = default;
};

std::string to_string(GridPos p);

enum class Goal { G1 = 0, G2 = 1, G3 = 2 };

Goal parse_goal(std::string_view name);
std::string_view goal_name(Goal g);

/// Actions in tie-breaking order.
enum Action : ActionId { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr std::array<std::string_view, 4> kActionNames = {"up", "down", "left", "right"};
inline constexpr std::array<GridPos, 4> kActionDelta = {
    GridPos{-1, 0}, GridPos{1, 0}, GridPos{0, -1}, GridPos{0, 1}};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed gridworld map. Hallways are cells marked 'H' plus any start/goal
/// marker sitting in a doorway (open on exactly two opposite sides); rooms are
/// the 4-connected components of the remaining open cells.
struct GridSpec {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;       // row-major
  std::vector<bool> is_hallway;  // row-major
  std::vector<int> room_of;      // row-major, -1 for walls and hallways
  int num_rooms = 0;
  std::vector<GridPos> hallways;                  // row-major order
  std::vector<std::array<int, 2>> hallway_rooms;  // the two rooms each hallway joins
  GridPos start;
  std::array<std::optional<GridPos>, 3> goals;

  bool in_bounds(GridPos p) const { return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width; }
  std::size_t index(GridPos p) const { return static_cast<std::size_t>(p.row * width + p.col); }
  Cell at(GridPos p) const { return cells[index(p)]; }
  bool open(GridPos p) const { return in_bounds(p) && at(p) != Cell::wall; }
  bool hallway(GridPos p) const { return is_hallway[index(p)]; }
  std::size_t non_wall_count() const;
};

/// Map text: rows of '#', '.', 'H', 'S', '1', '2', '3'; rectangular, walled
/// border, newline separated. Throws ParseError naming the offending cell.
GridSpec parse_map(std::string_view text);

/// The shipped 13x13 map.
std::string default_map();

struct FourRoomConfig {
  std::string map_text = default_map();
  Goal active_goal = Goal::G1;
  double goal_reward = 1.0;
};

/// The MDP together with the grid and the cell <-> state correspondence.
/// States are the open cells except the active goal, in row-major order.
struct FourRoom {
  GridSpec grid;
  FourRoomConfig config;
  FiniteMdp mdp;
  std::vector<int> state_of_cell;  // row-major, -1 for walls and the active goal
  std::vector<GridPos> cell_of_state;
  GridPos goal_cell;

  std::optional<StateId> state_at(GridPos p) const;
};

/// Deterministic continuing gridworld: bumping a wall leaves the agent in
/// place; entering the active goal pays goal_reward and places the agent on
/// the start cell. Inactive goals behave as floor.
FourRoom build_fourroom(const FourRoomConfig& cfg);
FiniteMdp build_fourroom_mdp(const FourRoomConfig& cfg);

/// One option per (room, adjoining hallway). On the option's arrow region
/// (the room plus the room's other hallways) it follows a shortest path to
/// the target hallway and never terminates; everywhere else it takes a
/// uniformly random action and terminates with probability one.
OptionSet build_hallway_options(const FourRoom& env);

/// "A", "H" or "A+H" (also accepted: "H+A").
OptionSet fourroom_option_set(const FourRoom& env, std::string_view which);

/// Shortest-path distances to `target` over cells accepted by `passable`
/// (the target itself is always accepted). Unreached cells hold -1.
template <class Passable>
std::vector<int> distance_field(const GridSpec& grid, GridPos target, Passable&& passable);

}  // namespace avgopt

#include <deque>

namespace avgopt {

template <class Passable>
std::vector<int> distance_field(const GridSpec& grid, GridPos target, Passable&& passable) {
  std::vector<int> dist(grid.cells.size(), -1);
  std::deque<GridPos> frontier{target};
  dist[grid.index(target)] = 0;
  while (!frontier.empty()) {
    const GridPos p = frontier.front();
    frontier.pop_front();
    for (const auto& d : kActionDelta) {
      const GridPos n{p.row + d.row, p.col + d.col};
      if (!grid.open(n) || dist[grid.index(n)] >= 0 || !passable(n)) continue;
      dist[grid.index(n)] = dist[grid.index(p)] + 1;
      frontier.push_back(n);
    }
  }
  return dist;
}

}  // namespace avgopt
