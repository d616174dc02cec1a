#pragma once

// Published reference tables transcribed by hand, one row per line.
// Kept separate from the library constants so the two can be compared.

#include <sstream>
#include <string>
#include <vector>

namespace reference_text {

inline constexpr const char* kUnconstrained = R"(4 | 5 | 6 | 7 | 8
PMH | 6.98 | 11.07 | 16.40 | 22.62 | 30.58
AECM | 6.61 | 10.58 | 15.34 | 21.08 | 27.51
GreedyGE | 7.94 | 12.34 | 17.49 | 23.40 | 29.81
RL-GS_100 | 7.19 | 11.84 | 16.20 | 22.61 | 28.02
MCTS (inf.) | 5.38 | 8.55 | 12.39 | 17.85 | 25.81
MCTS (mix.) | 5.32 | 8.31 | 11.98 | 17.45 | 23.64
MCTS_100 (inf.) | 5.37 | 8.29 | 11.44 | 15.72 | 21.03
MCTS_100 (mix.) | 5.32 | 8.16 | 11.10 | 15.41 | 20.87
Optimal | 5.28 | 8.01 | 10.64 | - | -
)";

inline constexpr const char* kConstrained = R"(Optimal | PMH+SABRE | RL-CL_1 | MCTS_1 (mix.) | RL-CL_100 | MCTS_100 (mix.)
4-L | 8.96 | 15.6 | 10.2 | 8.97 | 10.0 | 8.97
4-Y | 7.37 | 12.9 | 8.3 | 7.37 | 8.1 | 7.37
5-L | 15.18 | 29.9 | 17.2 | 15.46 | 16.1 | 15.24
5-T | 13.00 | 24.8 | 14.8 | 13.23 | 13.9 | 13.03
6-L | 23.33 | 53.3 | 27.1 | 24.54 | 25.4 | 23.44
6-T | 20.50 | 45.8 | 23.9 | 21.47 | 22.5 | 20.66
6-Y | 19.76 | 44.4 | 23.1 | 20.95 | 21.6 | 19.89
7-L | - | 84.3 | 40.1 | 37.48 | 37.5 | 34.67
7-T | - | 76.2 | 36.7 | 33.36 | 34.3 | 31.01
7-Y | - | 67.9 | 34.4 | 31.54 | 31.0 | 28.55
8-H | - | 104.2 | 48.9 | 42.40 | 45.0 | 38.70
8-F | - | 116.3 | 52.2 | 46.35 | 47.6 | 42.03
8-T1 | - | 123.5 | 54.1 | 49.18 | 49.5 | 44.82
8-T2 | - | 106.3 | 50.6 | 43.21 | 45.4 | 39.19
)";

inline constexpr const char* kWidths = R"(4-L | 4-Y | 5-L | 5-T | 6-L | 6-Y
32 | 9.10 | 7.71 | 16.30 | 14.05 | - | 22.98
64 | 9.14 | 7.67 | 16.06 | 13.70 | 26.46 | 22.13
128 | 9.04 | 7.61 | 15.92 | 13.65 | 25.41 | 21.51
256 | 8.94 | 7.59 | 15.53 | 13.37 | 24.89 | 20.97
)";

struct Table {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;  // "-" mapped to ""
};

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, '|')) {
    const auto b = cell.find_first_not_of(' ');
    const auto e = cell.find_last_not_of(' ');
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

inline Table parse(const char* text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    std::string label = cells.front();
    cells.erase(cells.begin());
    for (auto& c : cells)
      if (c == "-") c.clear();
    t.rows.emplace_back(label, cells);
  }
  return t;
}

}  // namespace reference_text
