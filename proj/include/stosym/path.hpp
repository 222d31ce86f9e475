#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stosym/groups.hpp"

namespace stosym {

/// How a path's listed points are meant to be read.
///   DiscreteJump: piecewise constant, every later point is a jump arrival.
///   GridSampled:  dense grid samples of a continuous-time path; individual
///                 steps may still be flagged as jumps (compound-Poisson
///                 arrivals inserted into the grid).
enum class PathStyle { DiscreteJump, GridSampled };

/// Cadlag path with values in a matrix Lie group (Euclidean state paths use
/// Additive(m)).  Row i of `values` holds the flat coordinates at times[i];
/// between listed times the path is the value at the largest listed time
/// at or before t.
struct CadlagPath {
    GroupDescriptor desc;
    PathStyle style = PathStyle::GridSampled;
    std::vector<double> times;          // strictly increasing, times[0] == 0
    Eigen::MatrixXd values;             // (#times) x coordinate_dim
    std::vector<std::uint8_t> is_jump;  // per row; row 0 is never a jump

    int dim() const { return static_cast<int>(values.cols()); }
    int points() const { return static_cast<int>(times.size()); }
    int steps() const { return points() - 1; }

    GroupElement at(int i) const { return element(desc, values.row(i)); }

    /// Value at the largest listed time <= t; throws before time zero.
    Eigen::VectorXd value_at(double t) const;
    int index_at(double t) const;

    /// Throws std::invalid_argument when the representation is inconsistent.
    void validate() const;
};

CadlagPath make_path(GroupDescriptor desc, PathStyle style,
                     std::vector<double> times, Eigen::MatrixXd values,
                     std::vector<std::uint8_t> is_jump = {});

/// CSV with header "t,coord_0,...,coord_{d-1}", one row per listed time.
std::string path_to_csv(const CadlagPath& p);

/// Parses the CSV layout written by path_to_csv; descriptor and style are
/// supplied by the caller because CSV carries only the numbers.
CadlagPath path_from_csv(const GroupDescriptor& desc, PathStyle style,
                         const std::string& csv);

/// JSON object holding descriptor, style, times, values and jump rows.
std::string path_to_json(const CadlagPath& p);
CadlagPath path_from_json(const std::string& text);

std::string descriptor_to_json(const GroupDescriptor& d);
GroupDescriptor descriptor_from_json(const std::string& text);

}  // namespace stosym
