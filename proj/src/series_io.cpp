#include "dynef/series_io.hpp"

#include <fstream>
#include <sstream>

#include "dynef/common.hpp"

namespace dynef {

void write_series_csv(const std::string& path, const TimeSeries& x, SeriesFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write series file: " + path);
  if (format == SeriesFormat::long_form) {
    out << "unit,t,symbol\n";
    for (int i = 0; i < x.n_units; ++i)
      for (int t = 1; t <= x.t_len; ++t)
        out << i << ',' << t << ',' << int(x.at(i, t)) << '\n';
  } else {
    for (int i = 0; i < x.n_units; ++i) {
      for (int t = 1; t <= x.t_len; ++t) out << (t > 1 ? "," : "") << int(x.at(i, t));
      out << '\n';
    }
  }
}

TimeSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open series file: " + path);
  std::string line;
  if (!std::getline(in, line)) return TimeSeries(0, 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  if (line == "unit,t,symbol") {
    struct Entry {
      int unit, t, symbol;
    };
    std::vector<Entry> entries;
    int n_units = 0, t_len = 0, line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      Entry e;
      char comma1 = 0, comma2 = 0;
      std::stringstream ss(line);
      if (!(ss >> e.unit >> comma1 >> e.t >> comma2 >> e.symbol) || comma1 != ',' ||
          comma2 != ',' || e.unit < 0 || e.t < 1 || e.symbol < 0 || e.symbol > 255)
        throw ConfigError(path + ":" + std::to_string(line_no) + ": bad series row '" + line +
                          "'");
      n_units = std::max(n_units, e.unit + 1);
      t_len = std::max(t_len, e.t);
      entries.push_back(e);
    }
    TimeSeries x(n_units, t_len);
    for (const Entry& e : entries) x.set(e.unit, e.t, static_cast<std::uint8_t>(e.symbol));
    return x;
  }

  // dense rows
  std::vector<std::vector<std::uint8_t>> rows;
  int line_no = 0;
  auto parse_row = [&](const std::string& text) {
    ++line_no;
    std::vector<std::uint8_t> row;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const int v = std::atoi(field.c_str());
      if (v < 0 || v > 255)
        throw ConfigError(path + ":" + std::to_string(line_no) + ": bad symbol '" + field + "'");
      row.push_back(static_cast<std::uint8_t>(v));
    }
    return row;
  };
  rows.push_back(parse_row(line));
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(parse_row(line));
    if (rows.back().size() != rows.front().size())
      throw ConfigError(path + ": dense rows have differing lengths");
  }
  TimeSeries x(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t t = 0; t < rows[i].size(); ++t)
      x.set(static_cast<int>(i), static_cast<int>(t) + 1, rows[i][t]);
  return x;
}

}  // namespace dynef
