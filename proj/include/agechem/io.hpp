#pragma once

#include <iosfwd>
#include <string>

#include "agechem/flow.hpp"
#include "agechem/model.hpp"
#include "agechem/state.hpp"

namespace agechem {

// 17 significant digits; round-trips through strtod.
std::string format_double(double x);

// Two columns (age, value) separated by comma or whitespace, '#' comments.
// Ages must start at 0 and be equally spaced.
AgeProfile read_profile_table(const std::string& path, Extension extension);
AgeProfile parse_profile_table(std::istream& in, Extension extension, const std::string& origin);

// Header "# columns=a,f S=.. da=.. n=.. t=..", then one "a,f" line per node.
void write_snapshot(const std::string& path, const ChemostatState& state, double t);
void write_snapshot(std::ostream& out, const ChemostatState& state, double t);
ChemostatState read_snapshot(const std::string& path, double* t = nullptr);

// Header "# t,S,N,x,D", one line per node.
void write_timeseries(const std::string& path, const Trajectory& traj);
void write_timeseries(std::ostream& out, const Trajectory& traj);

}  // namespace agechem
