#include "agechem/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "agechem/error.hpp"

namespace agechem {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  return out;
}

double parse_number(const std::string& token, const std::string& origin, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || !std::isfinite(v)) {
    std::ostringstream os;
    os << origin << ":" << line << ": not a number: '" << token << "'";
    fail(ErrorCode::Config, os.str());
  }
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::string s = line;
  for (char& c : s) {
    if (c == ',' || c == '\t') c = ' ';
  }
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

AgeProfile parse_profile_table(std::istream& in, Extension extension, const std::string& origin) {
  std::vector<double> ages, values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": expected two columns (age, value)";
      fail(ErrorCode::Config, os.str());
    }
    ages.push_back(parse_number(fields[0], origin, lineno));
    values.push_back(parse_number(fields[1], origin, lineno));
  }
  if (ages.empty()) fail(ErrorCode::Config, origin + ": no data rows");
  if (ages.front() != 0.0) fail(ErrorCode::Config, origin + ": ages must start at 0");
  if (ages.size() == 1) return AgeProfile(1.0, values, extension);
  const double h = ages[1] - ages[0];
  for (std::size_t i = 1; i < ages.size(); ++i) {
    const double step = ages[i] - ages[i - 1];
    if (!(step > 0.0) || std::abs(step - h) > 1e-9 * std::max(1.0, ages[i])) {
      std::ostringstream os;
      os << origin << ": ages must be strictly increasing and equally spaced (row " << i + 1 << ")";
      fail(ErrorCode::Config, os.str());
    }
  }
  // The spacing from the span is more accurate than the first difference.
  const double spacing = ages.back() / static_cast<double>(ages.size() - 1);
  return AgeProfile(spacing, std::move(values), extension);
}

AgeProfile read_profile_table(const std::string& path, Extension extension) {
  auto in = open_in(path);
  return parse_profile_table(in, extension, path);
}

void write_snapshot(std::ostream& out, const ChemostatState& state, double t) {
  const double h = state.f.spacing();
  out << "# columns=a,f S=" << format_double(state.s) << " da=" << format_double(h)
      << " n=" << state.f.size() << " t=" << format_double(t) << '\n';
  for (std::size_t i = 0; i < state.f.size(); ++i) {
    out << format_double(static_cast<double>(i) * h) << ',' << format_double(state.f[i]) << '\n';
  }
}

void write_snapshot(const std::string& path, const ChemostatState& state, double t) {
  auto out = open_out(path);
  write_snapshot(out, state, t);
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

ChemostatState read_snapshot(const std::string& path, double* t) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("# columns=a,f", 0) != 0) fail(ErrorCode::Io, path + ": missing snapshot header");
  double s = NAN, da = NAN, time = NAN;
  long long n = -1;
  std::istringstream hs(header.substr(1));
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "S") s = parse_number(val, path, 1);
    if (key == "da") da = parse_number(val, path, 1);
    if (key == "t") time = parse_number(val, path, 1);
    if (key == "n") n = std::atoll(val.c_str());
  }
  if (!std::isfinite(s) || !std::isfinite(da) || n <= 0) {
    fail(ErrorCode::Io, path + ": incomplete snapshot header");
  }
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(n));
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() != 2) fail(ErrorCode::Io, path + ": malformed row");
    f.push_back(parse_number(fields[1], path, lineno));
  }
  if (f.size() != static_cast<std::size_t>(n)) fail(ErrorCode::Io, path + ": row count differs from header");
  if (t) *t = time;
  return ChemostatState{AgeProfile(da, std::move(f), Extension::Zero), s};
}

void write_timeseries(std::ostream& out, const Trajectory& traj) {
  out << "# t,S,N,x,D\n";
  for (std::size_t j = 0; j < traj.nodes(); ++j) {
    out << format_double(traj.t[j]) << ',' << format_double(traj.s[j]) << ','
        << format_double(traj.mass[j]) << ',' << format_double(traj.boundary[j]) << ','
        << format_double(traj.dilution[j]) << '\n';
  }
}

void write_timeseries(const std::string& path, const Trajectory& traj) {
  auto out = open_out(path);
  write_timeseries(out, traj);
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

}  // namespace agechem
