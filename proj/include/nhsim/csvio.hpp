// Trajectory CSV import/export with bit-stable round trips.
#ifndef NHSIM_CSVIO_HPP
#define NHSIM_CSVIO_HPP

#include <iosfwd>
#include <string>

#include "nhsim/dynamics.hpp"
#include "nhsim/weakform.hpp"

namespace nhsim {

// Header `t,x1..xm,v1..vm,acc1..accm,H,cres1..cresn`; every value printed
// with 17 significant digits so a read-back reproduces the doubles exactly.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

// Parses a trajectory CSV, inferring m and n from the header.  Throws
// MalformedFile on unreadable headers, ragged rows, non-numeric fields, or a
// non-uniform time column.
Trajectory read_trajectory_csv(std::istream& in);
Trajectory read_trajectory_csv(const std::string& path);

// `t,gamma1..gamman` with the same 17-digit format.
void write_multiplier_csv(const std::string& path, const Trajectory& traj,
                          const MultiplierTrack& track);

}  // namespace nhsim

#endif  // NHSIM_CSVIO_HPP
