#include "pfn/geodata/records.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "pfn/core/error.hpp"
#include "pfn/core/io.hpp"

namespace pfn {

std::optional<Param> param_from_name(const std::string& name) {
  for (int i = 0; i < kParamCount; ++i)
    if (name == kParamNames[static_cast<std::size_t>(i)]) return static_cast<Param>(i);
  return std::nullopt;
}

bool is_mechanical(Param p) { return index_of(p) >= index_of(Param::su); }

std::vector<std::string> SiteTable::borehole_ids() const {
  std::vector<std::string> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records)
    if (seen.insert({r.site_id, r.borehole_id}).second) out.push_back(r.borehole_id);
  return out;
}

namespace {

std::string where(const std::string& source, std::size_t row) {
  return source + " row " + std::to_string(row);
}

void check_record(const BoreholeRecord& r, const std::string& at) {
  require(!r.site_id.empty() && !r.borehole_id.empty(), ErrorKind::data, at + ": site_id and borehole_id are required");
  require(std::isfinite(r.x) && std::isfinite(r.y), ErrorKind::data, at + ": coordinates must be finite");
  require(std::isfinite(r.depth) && r.depth >= 0.0, ErrorKind::data, at + ": depth must be >= 0");
  for (int i = 0; i < kParamCount; ++i) {
    const auto& v = r.values[static_cast<std::size_t>(i)];
    if (v) {
      require(std::isfinite(*v) && *v > 0.0, ErrorKind::data,
              at + ": " + kParamNames[static_cast<std::size_t>(i)] + " must be positive");
    }
  }
  if (r.has(Param::PL) && r.has(Param::LL)) {
    require(*r[Param::PL] <= *r[Param::LL], ErrorKind::data,
            at + ": PL (" + format_sig9(*r[Param::PL]) + ") exceeds LL (" + format_sig9(*r[Param::LL]) + ")");
  }
}

}  // namespace

void SiteTable::validate() const {
  std::set<std::tuple<std::string, std::string, double>> keys;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string at = label + " record " + std::to_string(i + 1);
    check_record(r, at);
    require(keys.insert({r.site_id, r.borehole_id, r.depth}).second, ErrorKind::data,
            at + ": duplicate (site_id, borehole_id, depth)");
  }
}

SiteTable concat(const std::string& label, const std::vector<const SiteTable*>& parts) {
  SiteTable out{label, {}};
  for (const auto* p : parts) out.records.insert(out.records.end(), p->records.begin(), p->records.end());
  return out;
}

std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double round_sig9(double v) { return std::strtod(format_sig9(v).c_str(), nullptr); }

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& text, const std::string& at, const std::string& column) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  require(res.ec == std::errc() && res.ptr == end && begin != end, ErrorKind::data,
          at + ", column " + column + ": cannot parse number '" + text + "'");
  return v;
}

}  // namespace

SiteTable read_csv(std::istream& is, const std::string& label, const std::string& source) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::data, source + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_line(line);
  const auto expected = split_line(kCsvHeader);
  for (std::size_t i = 0; i < header.size(); ++i) {
    require(i < expected.size(), ErrorKind::data, source + ": unknown column '" + header[i] + "'");
    require(header[i] == expected[i], ErrorKind::data,
            source + ": unknown column '" + header[i] + "' at position " + std::to_string(i + 1) + " (expected '" +
                expected[i] + "')");
  }
  if (header.size() < expected.size()) fail(ErrorKind::data, source + ": missing column '" + expected[header.size()] + "'");

  SiteTable table{label, {}};
  std::set<std::tuple<std::string, std::string, double>> keys;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::string at = where(source, row);
    const auto cells = split_line(line);
    require(cells.size() == expected.size(), ErrorKind::data,
            at + ": expected " + std::to_string(expected.size()) + " fields, found " + std::to_string(cells.size()));
    BoreholeRecord r;
    r.site_id = cells[0];
    r.borehole_id = cells[1];
    for (int c = 2; c <= 4; ++c)
      require(!cells[static_cast<std::size_t>(c)].empty(), ErrorKind::data, at + ", column " + expected[static_cast<std::size_t>(c)] + ": value required");
    r.x = parse_number(cells[2], at, "x");
    r.y = parse_number(cells[3], at, "y");
    r.depth = parse_number(cells[4], at, "depth");
    for (int i = 0; i < kParamCount; ++i) {
      const auto& cell = cells[static_cast<std::size_t>(5 + i)];
      if (!cell.empty()) r.values[static_cast<std::size_t>(i)] = parse_number(cell, at, kParamNames[static_cast<std::size_t>(i)]);
    }
    check_record(r, at);
    require(keys.insert({r.site_id, r.borehole_id, r.depth}).second, ErrorKind::data,
            at + ": duplicate key (" + r.site_id + ", " + r.borehole_id + ", " + format_sig9(r.depth) + ")");
    table.records.push_back(std::move(r));
  }
  return table;
}

SiteTable load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::io, "cannot open " + path.string());
  return read_csv(is, path.stem().string(), path.string());
}

void write_csv(std::ostream& os, const SiteTable& table) {
  os << kCsvHeader << '\n';
  for (const auto& r : table.records) {
    os << r.site_id << ',' << r.borehole_id << ',' << format_sig9(r.x) << ',' << format_sig9(r.y) << ','
       << format_sig9(r.depth);
    for (const auto& v : r.values) {
      os << ',';
      if (v) os << format_sig9(*v);
    }
    os << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const SiteTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  write_file_atomic(path, os.str());
}

}  // namespace pfn
