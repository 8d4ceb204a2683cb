#include "avgopt/fourroom.hpp"

#include <algorithm>
#include <sstream>

namespace avgopt {

std::string to_string(GridPos p) {
  return "(" + std::to_string(p.row) + ", " + std::to_string(p.col) + ")";
}

Goal parse_goal(std::string_view name) {
  if (name == "G1" || name == "g1" || name == "1") return Goal::G1;
  if (name == "G2" || name == "g2" || name == "2") return Goal::G2;
  if (name == "G3" || name == "g3" || name == "3") return Goal::G3;
  throw std::invalid_argument("unknown goal '" + std::string(name) + "' (expected G1, G2 or G3)");
}

std::string_view goal_name(Goal g) {
  switch (g) {
    case Goal::G1: return "G1";
    case Goal::G2: return "G2";
    case Goal::G3: return "G3";
  }
  return "G?";
}

std::size_t GridSpec::non_wall_count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(),
                                                [](Cell c) { return c != Cell::wall; }));
}

std::string default_map() {
  return "#############\n"
         "#S....#.....#\n"
         "#.....#.....#\n"
         "#.....H.....#\n"
         "#.....#.....#\n"
         "#.....#.....#\n"
         "##H####.....#\n"
         "#.....###H###\n"
         "#.....#.....#\n"
         "#.....#.....#\n"
         "#.....2.1...#\n"
         "#...3.#.....#\n"
         "#############\n";
}

namespace {

std::vector<std::string> split_rows(std::string_view text) {
  std::vector<std::string> rows;
  std::string current;
  for (char ch : text) {
    if (ch == '\r') continue;
    if (ch == '\n') {
      rows.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) rows.push_back(std::move(current));
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  return rows;
}

[[noreturn]] void fail(GridPos p, const std::string& what) {
  throw ParseError("map cell " + to_string(p) + ": " + what);
}

}  // namespace

GridSpec parse_map(std::string_view text) {
  const auto rows = split_rows(text);
  if (rows.empty()) throw ParseError("map is empty");
  GridSpec g;
  g.height = static_cast<int>(rows.size());
  g.width = static_cast<int>(rows.front().size());
  if (g.width == 0) throw ParseError("map row 0 is empty");
  g.cells.resize(static_cast<std::size_t>(g.width * g.height));

  bool have_start = false;
  for (int r = 0; r < g.height; ++r) {
    if (static_cast<int>(rows[r].size()) != g.width)
      throw ParseError("map row " + std::to_string(r) + " has length " +
                       std::to_string(rows[r].size()) + ", expected " + std::to_string(g.width));
    for (int c = 0; c < g.width; ++c) {
      const GridPos p{r, c};
      Cell cell;
      switch (rows[r][c]) {
        case '#': cell = Cell::wall; break;
        case '.': cell = Cell::floor; break;
        case 'H': cell = Cell::hallway; break;
        case 'S': cell = Cell::start; break;
        case '1': cell = Cell::goal1; break;
        case '2': cell = Cell::goal2; break;
        case '3': cell = Cell::goal3; break;
        default: fail(p, std::string("unknown character '") + rows[r][c] + "'");
      }
      const bool border = r == 0 || c == 0 || r == g.height - 1 || c == g.width - 1;
      if (border && cell != Cell::wall) fail(p, "border must be wall");
      if (cell == Cell::start) {
        if (have_start) fail(p, "second start cell");
        have_start = true;
        g.start = p;
      }
      if (cell == Cell::goal1 || cell == Cell::goal2 || cell == Cell::goal3) {
        auto& slot = g.goals[static_cast<int>(cell) - static_cast<int>(Cell::goal1)];
        if (slot) fail(p, "goal marker appears twice");
        slot = p;
      }
      g.cells[g.index(p)] = cell;
    }
  }
  if (!have_start) throw ParseError("map has no start cell 'S'");

  // Hallways: explicit 'H', or a marker occupying a doorway.
  g.is_hallway.assign(g.cells.size(), false);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const GridPos p{r, c};
      const Cell cell = g.at(p);
      bool hall = cell == Cell::hallway;
      if (cell == Cell::start || cell == Cell::goal1 || cell == Cell::goal2 || cell == Cell::goal3) {
        const bool ns = g.open({r - 1, c}) && g.open({r + 1, c});
        const bool ew = g.open({r, c - 1}) && g.open({r, c + 1});
        const bool ns_closed = !g.open({r - 1, c}) && !g.open({r + 1, c});
        const bool ew_closed = !g.open({r, c - 1}) && !g.open({r, c + 1});
        hall = (ns && ew_closed) || (ew && ns_closed);
      }
      g.is_hallway[g.index(p)] = hall;
      if (hall) g.hallways.push_back(p);
    }
  }

  // Rooms: connected components of open, non-hallway cells.
  g.room_of.assign(g.cells.size(), -1);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const GridPos p{r, c};
      if (!g.open(p) || g.hallway(p) || g.room_of[g.index(p)] >= 0) continue;
      const int room = g.num_rooms++;
      auto field = distance_field(g, p, [&g](GridPos q) { return !g.hallway(q); });
      for (std::size_t i = 0; i < field.size(); ++i)
        if (field[i] >= 0) g.room_of[i] = room;
    }
  }

  for (const GridPos h : g.hallways) {
    std::vector<int> rooms;
    for (const auto& d : kActionDelta) {
      const GridPos n{h.row + d.row, h.col + d.col};
      if (g.open(n) && !g.hallway(n)) rooms.push_back(g.room_of[g.index(n)]);
    }
    if (rooms.size() != 2) fail(h, "hallway must have exactly two room neighbours, found " +
                                        std::to_string(rooms.size()));
    if (rooms[0] == rooms[1]) fail(h, "hallway connects a room to itself");
    g.hallway_rooms.push_back({std::min(rooms[0], rooms[1]), std::max(rooms[0], rooms[1])});
  }

  auto reach = distance_field(g, g.start, [](GridPos) { return true; });
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c)
      if (g.open({r, c}) && reach[g.index({r, c})] < 0) fail({r, c}, "unreachable from start");
  return g;
}

std::optional<StateId> FourRoom::state_at(GridPos p) const {
  if (!grid.in_bounds(p)) return std::nullopt;
  const int s = state_of_cell[grid.index(p)];
  if (s < 0) return std::nullopt;
  return static_cast<StateId>(s);
}

FourRoom build_fourroom(const FourRoomConfig& cfg) {
  FourRoom env;
  env.config = cfg;
  env.grid = parse_map(cfg.map_text);
  const auto& g = env.grid;
  const auto& goal = g.goals[static_cast<int>(cfg.active_goal)];
  if (!goal)
    throw ParseError("active goal " + std::string(goal_name(cfg.active_goal)) + " is not on the map");
  env.goal_cell = *goal;

  env.state_of_cell.assign(g.cells.size(), -1);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const GridPos p{r, c};
      if (!g.open(p) || p == env.goal_cell) continue;
      env.state_of_cell[g.index(p)] = static_cast<int>(env.cell_of_state.size());
      env.cell_of_state.push_back(p);
    }
  }

  const std::size_t n = env.cell_of_state.size();
  const StateId start = *env.state_at(g.start);
  env.mdp = FiniteMdp(n, kActionDelta.size(), {0.0, cfg.goal_reward}, start);
  for (StateId s = 0; s < n; ++s) {
    const GridPos p = env.cell_of_state[s];
    for (ActionId a = 0; a < kActionDelta.size(); ++a) {
      const GridPos t{p.row + kActionDelta[a].row, p.col + kActionDelta[a].col};
      if (t == env.goal_cell)
        env.mdp.add_outcome(s, a, start, 1, 1.0);
      else if (!g.open(t))
        env.mdp.add_outcome(s, a, s, 0, 1.0);
      else
        env.mdp.add_outcome(s, a, *env.state_at(t), 0, 1.0);
    }
  }
  return env;
}

FiniteMdp build_fourroom_mdp(const FourRoomConfig& cfg) { return build_fourroom(cfg).mdp; }

OptionSet build_hallway_options(const FourRoom& env) {
  const auto& g = env.grid;
  const std::size_t n = env.mdp.num_states;
  const std::size_t na = env.mdp.num_actions;
  OptionSet set;

  for (int room = 0; room < g.num_rooms; ++room) {
    std::vector<std::size_t> adjoining;
    for (std::size_t h = 0; h < g.hallways.size(); ++h)
      if (g.hallway_rooms[h][0] == room || g.hallway_rooms[h][1] == room) adjoining.push_back(h);

    for (const std::size_t target : adjoining) {
      const GridPos goal_hall = g.hallways[target];
      auto in_region = [&](GridPos p) {
        if (!env.state_at(p)) return false;  // walls and the active goal
        if (g.hallway(p)) {
          for (const std::size_t h : adjoining)
            if (h != target && g.hallways[h] == p) return true;
          return false;
        }
        return g.room_of[g.index(p)] == room;
      };
      const auto dist = distance_field(g, goal_hall, in_region);

      OptionDef opt(n, na);
      for (StateId s = 0; s < n; ++s) {
        const GridPos p = env.cell_of_state[s];
        const int d = dist[g.index(p)];
        if (in_region(p) && d > 0) {
          opt.termination[s] = 0.0;
          for (ActionId a = 0; a < na; ++a) {
            const GridPos t{p.row + kActionDelta[a].row, p.col + kActionDelta[a].col};
            if (g.open(t) && dist[g.index(t)] == d - 1) {
              opt.pi(s, a) = 1.0;
              break;
            }
          }
        } else {
          opt.termination[s] = 1.0;
          for (ActionId a = 0; a < na; ++a) opt.pi(s, a) = 1.0 / static_cast<double>(na);
        }
      }
      set.add(std::move(opt), "R" + std::to_string(room) + "→H" + std::to_string(target));
    }
  }
  return set;
}

OptionSet fourroom_option_set(const FourRoom& env, std::string_view which) {
  std::vector<std::string> names(kActionNames.begin(), kActionNames.end());
  if (which == "A") return primitive_options(env.mdp.num_states, env.mdp.num_actions, names);
  if (which == "H") return build_hallway_options(env);
  if (which == "A+H" || which == "H+A")
    return concat(primitive_options(env.mdp.num_states, env.mdp.num_actions, names),
                  build_hallway_options(env));
  throw std::invalid_argument("unknown option set '" + std::string(which) +
                              "' (expected A, H or A+H)");
}

}  // namespace avgopt
