#pragma once

#include "bunching/sample.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace bunching {

// CSV with a header: column y required, x1..xd optional, t optional (default 1).
Dataset ingest_microdata(const std::string& path);

struct CollapsedHistogram {
  Eigen::VectorXd centers;
  Eigen::VectorXd shares;
};

// Two numeric columns (bin_center, share), optional header. Shares are
// renormalized with a warning when they do not sum to one.
CollapsedHistogram ingest_histogram(const std::string& path);

// Draws n incomes from a collapsed histogram, uniformly within each bin.
Eigen::VectorXd draw_from_histogram(const CollapsedHistogram& h, Eigen::Index n, std::uint64_t seed);

void write_microdata(const std::string& path, const Dataset& data);
void write_text(const std::string& path, const std::string& content);

}  // namespace bunching
