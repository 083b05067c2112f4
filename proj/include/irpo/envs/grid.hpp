#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "irpo/errors.hpp"

namespace irpo {

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

enum class Action : int { left = 0, up = 1, right = 2, down = 3 };
inline constexpr int kNumActions = 4;

/// Agent observation: (agent x, agent y, goal x, goal y) scaled to [0, 1].
using Observation = std::array<double, 4>;
inline constexpr std::size_t kObsDim = 4;

/// Immutable gridworld description. Cells are indexed y * width + x with
/// y = 0 the top row. Free cells also carry a dense state index.
struct GridSpec {
    std::string name = "grid";
    int width = 0;
    int height = 0;
    std::vector<bool> wall;  // width * height
    Cell start;
    Cell goal;
    int horizon = 100;
    double gamma = 0.99;

    std::vector<int> free_cells;     // state index -> cell index
    std::vector<int> state_of_cell;  // cell index -> state index, -1 for walls

    int cell_index(Cell c) const { return c.y * width + c.x; }
    Cell cell_at(int index) const { return {index % width, index / width}; }
    bool inside(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    bool is_free(Cell c) const { return inside(c) && !wall[static_cast<std::size_t>(cell_index(c))]; }
    int num_states() const { return static_cast<int>(free_cells.size()); }
    int state_of(Cell c) const { return state_of_cell[static_cast<std::size_t>(cell_index(c))]; }
    Cell cell_of_state(int s) const { return cell_at(free_cells[static_cast<std::size_t>(s)]); }
    int start_state() const { return state_of(start); }
    int goal_state() const { return state_of(goal); }

    Observation observe(Cell agent) const {
        const double sx = std::max(width - 1, 1);
        const double sy = std::max(height - 1, 1);
        return {agent.x / sx, agent.y / sy, goal.x / sx, goal.y / sy};
    }

    Cell move(Cell from, Action a) const {
        Cell to = from;
        switch (a) {
        case Action::left: --to.x; break;
        case Action::up: --to.y; break;
        case Action::right: ++to.x; break;
        case Action::down: ++to.y; break;
        }
        return is_free(to) ? to : from;
    }

    std::vector<int> neighbours(int state) const {
        std::vector<int> out;
        const Cell c = cell_of_state(state);
        for (int a = 0; a < kNumActions; ++a) {
            const Cell n = move(c, static_cast<Action>(a));
            if (!(n == c)) out.push_back(state_of(n));
        }
        return out;
    }

    /// Connected components of the free-cell graph, each a list of states.
    std::vector<std::vector<int>> components() const {
        std::vector<int> label(free_cells.size(), -1);
        std::vector<std::vector<int>> comps;
        for (int s = 0; s < num_states(); ++s) {
            if (label[static_cast<std::size_t>(s)] >= 0) continue;
            comps.emplace_back();
            std::deque<int> queue{s};
            label[static_cast<std::size_t>(s)] = static_cast<int>(comps.size() - 1);
            while (!queue.empty()) {
                const int u = queue.front();
                queue.pop_front();
                comps.back().push_back(u);
                for (int v : neighbours(u)) {
                    if (label[static_cast<std::size_t>(v)] < 0) {
                        label[static_cast<std::size_t>(v)] = label[static_cast<std::size_t>(s)];
                        queue.push_back(v);
                    }
                }
            }
        }
        return comps;
    }

    /// Shortest path length in steps from the start to the goal, -1 if none.
    int shortest_path() const {
        std::vector<int> dist(free_cells.size(), -1);
        std::deque<int> queue{start_state()};
        dist[static_cast<std::size_t>(start_state())] = 0;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : neighbours(u)) {
                if (dist[static_cast<std::size_t>(v)] < 0) {
                    dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                    queue.push_back(v);
                }
            }
        }
        return dist[static_cast<std::size_t>(goal_state())];
    }
};

/// Parses an ASCII layout: '#' wall, '.' free, 'S' start, 'G' goal. Every
/// problem found is reported in one ConfigError, one per line.
inline GridSpec load_grid(std::string_view map_text, int horizon = 100, double gamma = 0.99,
                          std::string name = "grid") {
    std::vector<std::string> rows;
    {
        std::string line;
        std::istringstream in{std::string(map_text)};
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            rows.push_back(line);
        }
        while (!rows.empty() && rows.back().empty()) rows.pop_back();
    }

    std::vector<std::string> problems;
    if (rows.empty()) problems.push_back("map is empty");
    if (horizon < 1) problems.push_back("horizon must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) problems.push_back("discount must lie in [0, 1)");

    GridSpec spec;
    spec.name = std::move(name);
    spec.horizon = horizon;
    spec.gamma = gamma;
    spec.height = static_cast<int>(rows.size());
    spec.width = rows.empty() ? 0 : static_cast<int>(rows.front().size());

    int starts = 0;
    int goals = 0;
    for (std::size_t y = 0; y < rows.size(); ++y) {
        if (static_cast<int>(rows[y].size()) != spec.width)
            problems.push_back("row " + std::to_string(y + 1) + " has width " + std::to_string(rows[y].size()) +
                               ", expected " + std::to_string(spec.width));
        for (std::size_t x = 0; x < rows[y].size(); ++x) {
            const char ch = rows[y][x];
            if (ch == 'S') ++starts, spec.start = {static_cast<int>(x), static_cast<int>(y)};
            else if (ch == 'G') ++goals, spec.goal = {static_cast<int>(x), static_cast<int>(y)};
            else if (ch != '#' && ch != '.')
                problems.push_back("row " + std::to_string(y + 1) + " column " + std::to_string(x + 1) +
                                   ": unexpected character '" + std::string(1, ch) + "'");
        }
    }
    if (starts != 1) problems.push_back("expected exactly one 'S', found " + std::to_string(starts));
    if (goals != 1) problems.push_back("expected exactly one 'G', found " + std::to_string(goals));

    const bool shape_ok = std::none_of(rows.begin(), rows.end(),
                                       [&](const std::string& r) { return static_cast<int>(r.size()) != spec.width; });
    if (shape_ok && !rows.empty()) {
        spec.wall.assign(static_cast<std::size_t>(spec.width * spec.height), false);
        spec.state_of_cell.assign(spec.wall.size(), -1);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                const auto idx = static_cast<std::size_t>(y * spec.width + x);
                spec.wall[idx] = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] == '#';
                if (!spec.wall[idx]) {
                    spec.state_of_cell[idx] = static_cast<int>(spec.free_cells.size());
                    spec.free_cells.push_back(static_cast<int>(idx));
                }
            }
        if (starts == 1 && goals == 1 && spec.shortest_path() < 0) problems.push_back("goal is unreachable from start");
    }

    if (!problems.empty()) {
        std::string msg = "invalid map:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return spec;
}

inline std::string render_grid(const GridSpec& spec) {
    std::string out;
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const Cell c{x, y};
            out += c == spec.start ? 'S' : c == spec.goal ? 'G' : spec.is_free(c) ? '.' : '#';
        }
        out += '\n';
    }
    return out;
}

struct GridState {
    Cell agent;
    Cell goal;
    int t = 0;
    bool done = false;
};

inline GridState reset(const GridSpec& spec) { return {spec.start, spec.goal, 0, false}; }

struct StepResult {
    GridState next;
    double reward = 0.0;
    bool terminal = false;
    bool reached_goal = false;
};

inline StepResult step(const GridSpec& spec, const GridState& state, Action action) {
    expects(!state.done && state.t < spec.horizon, "step called on a finished episode");
    StepResult r;
    r.next = state;
    r.next.agent = spec.move(state.agent, action);
    r.next.t = state.t + 1;
    r.reached_goal = r.next.agent == spec.goal;
    r.reward = r.reached_goal ? 1.0 : 0.0;
    r.terminal = r.reached_goal || r.next.t >= spec.horizon;
    r.next.done = r.terminal;
    return r;
}

}  // namespace irpo
