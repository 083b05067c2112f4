#pragma once

#include <string>
#include <string_view>

#include "irpo/envs/grid.hpp"

namespace irpo {

// Shipped layouts; identical to the files under maps/. Maze-v1 and Maze-v2 are
// serpentine approximations of the discrete mazes, not pixel-exact copies.

inline constexpr std::string_view kFourroomsMap = R"(#############
#S....#.....#
#.....#.....#
#...........#
#.....#.....#
#.....#.....#
##.####.....#
#.....###.###
#.....#.....#
#.....#.....#
#...........#
#.....#....G#
#############
)";

inline constexpr std::string_view kMazeV1Map = R"(###############
#S............#
#.............#
#.............#
##########....#
#.............#
#.............#
#.............#
#....##########
#.............#
#.............#
#.............#
##########....#
#G............#
###############
)";

inline constexpr std::string_view kMazeV2Map = R"(####################
#S.................#
#..................#
#################..#
#..................#
#..................#
#..#################
#..................#
#..................#
#################..#
#..................#
#..................#
#..#################
#..................#
#..................#
#################..#
#..................#
#..................#
#G.................#
####################
)";

struct BuiltinLayout {
    std::string_view name;
    std::string_view text;
    int horizon;
    double gamma;
    int subpolicies;
};

inline constexpr BuiltinLayout kBuiltinLayouts[] = {
    {"fourrooms", kFourroomsMap, 100, 0.99, 4},
    {"maze-v1", kMazeV1Map, 300, 0.99, 6},
    {"maze-v2", kMazeV2Map, 300, 0.99, 6},
};

inline const BuiltinLayout& builtin_layout(std::string_view name) {
    for (const auto& l : kBuiltinLayouts)
        if (l.name == name) return l;
    throw ConfigError("unknown environment '" + std::string(name) + "' (expected fourrooms, maze-v1 or maze-v2)");
}

inline GridSpec make_builtin_grid(std::string_view name) {
    const auto& l = builtin_layout(name);
    return load_grid(l.text, l.horizon, l.gamma, std::string(l.name));
}

}  // namespace irpo
