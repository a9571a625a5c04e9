#pragma once

#include <map>
#include <string>
#include <vector>

namespace capmon::cli {

// A tab-separated table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header. Throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

Table read_tsv(const std::string& path);

struct PlotSpec {
  std::string x;
  std::string y;
  std::string group;                          // optional series column
  std::map<std::string, std::string> filter;  // column -> required value
  std::string title;
  bool scatter = false;
  int width = 720;
  int height = 440;
};

// Renders selected columns of `table` as an SVG line or scatter chart.
std::string render_svg(const Table& table, const PlotSpec& spec);

}  // namespace capmon::cli
