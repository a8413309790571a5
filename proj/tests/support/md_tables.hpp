#pragma once

// Counts the body rows and data columns of each pipe table in a markdown
// document (header and separator lines excluded, first column is the label).

#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace md {

inline std::vector<std::pair<int, int>> table_shapes(const std::string& doc) {
  std::vector<std::pair<int, int>> shapes;
  std::istringstream in(doc);
  int line_in_table = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.front() != '|') {
      line_in_table = 0;
      continue;
    }
    ++line_in_table;
    if (line_in_table == 1) {
      shapes.emplace_back(0, 0);
      continue;
    }
    if (line_in_table == 2) continue;  // separator
    int pipes = 0;
    for (char c : line) pipes += c == '|';
    shapes.back().first += 1;
    shapes.back().second = pipes - 2;
  }
  return shapes;
}

}  // namespace md
