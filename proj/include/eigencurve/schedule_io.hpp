#pragma once
// Schedule CSV: optional `#` comment header, then `t,lr` and one row per
// iteration with 17 significant digits.

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "eigencurve/error.hpp"
#include "eigencurve/schedules.hpp"
#include "eigencurve/spectrum.hpp"

namespace eigencurve {

inline ScheduleKind schedule_kind_from_string(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ScheduleKind::external); ++k) {
    const auto kind = static_cast<ScheduleKind>(k);
    if (name == to_string(kind)) return kind;
  }
  throw UsageError("unknown schedule kind '" + name + "'");
}

/// `comment` lines are emitted verbatim after a `# ` prefix.
inline void write_schedule_csv(std::ostream& out, const Schedule& s,
                               const std::vector<std::string>& comment = {}) {
  for (const auto& c : comment) out << "# " << c << '\n';
  out << "# kind=" << to_string(s.kind()) << '\n';
  out << "t,lr\n";
  out << std::setprecision(17);
  for (std::size_t t = 0; t < s.horizon(); ++t) out << t << ',' << s.rate(t) << '\n';
}

inline Schedule read_schedule_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  ScheduleKind kind = ScheduleKind::external;
  std::vector<double> rates;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      const auto rest = detail::trim(body.substr(1));
      if (rest.rfind("kind=", 0) == 0) {
        try {
          kind = schedule_kind_from_string(std::string(rest.substr(5)));
        } catch (const UsageError&) {
          kind = ScheduleKind::external;
        }
      }
      continue;
    }
    if (!header) {
      if (body != "t,lr") throw ParseError("expected header 't,lr'", lineno);
      header = true;
      continue;
    }
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) throw ParseError("expected 't,lr' row", lineno);
    double t = 0.0;
    double lr = 0.0;
    if (!detail::parse_double(detail::trim(body.substr(0, comma)), t) ||
        t != static_cast<double>(rates.size()))
      throw ParseError("row index must count up from 0", lineno);
    if (!detail::parse_double(detail::trim(body.substr(comma + 1)), lr) ||
        !std::isfinite(lr) || lr < 0.0)
      throw ParseError("invalid learning rate", lineno);
    rates.push_back(lr);
  }
  if (!header) throw ParseError("missing 't,lr' header", lineno);
  if (rates.empty()) throw ParseError("schedule has no rows", lineno);
  return Schedule(kind, std::move(rates));
}

inline Schedule read_schedule_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file '" + path + "'");
  return read_schedule_csv(in);
}

}  // namespace eigencurve
