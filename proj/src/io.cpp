#include "bunching/io.hpp"

#include "bunching/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

namespace bunching {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace

Dataset ingest_microdata(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = split(line);
  int iy = -1, it = -1;
  std::vector<std::pair<int, int>> xcols;  // (covariate number, column)
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[static_cast<std::size_t>(c)];
    if (h == "y") {
      iy = c;
    } else if (h == "t") {
      it = c;
    } else if (h.size() > 1 && h[0] == 'x') {
      int num = 0;
      const auto [p, ec] = std::from_chars(h.data() + 1, h.data() + h.size(), num);
      if (ec == std::errc() && p == h.data() + h.size() && num >= 1) xcols.emplace_back(num, c);
    }
  }
  if (iy < 0) throw DataError(path + ": missing required column 'y'");
  std::sort(xcols.begin(), xcols.end());
  for (std::size_t d = 0; d < xcols.size(); ++d)
    if (xcols[d].first != static_cast<int>(d) + 1) throw DataError(path + ": covariate columns must be x1..xd");

  std::vector<double> ys, ts, xs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << path << ": row " << row << " has " << cells.size() << " fields, expected " << header.size();
      throw DataError(os.str());
    }
    auto get = [&](int c, const char* name) {
      double v = 0.0;
      if (!parse_double(cells[static_cast<std::size_t>(c)], v) || !std::isfinite(v)) {
        std::ostringstream os;
        os << path << ": row " << row << ": cannot parse " << name << " = '" << cells[static_cast<std::size_t>(c)]
           << "'";
        throw DataError(os.str());
      }
      return v;
    };
    ys.push_back(get(iy, "y"));
    const double t = it >= 0 ? get(it, "t") : 1.0;
    if (t < 0.0) {
      std::ostringstream os;
      os << path << ": row " << row << ": negative weight t";
      throw DataError(os.str());
    }
    ts.push_back(t);
    for (const auto& [num, c] : xcols) xs.push_back(get(c, header[static_cast<std::size_t>(c)].c_str()));
  }
  if (ys.empty()) throw DataError(path + ": no data rows");
  Dataset d;
  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto dim = static_cast<Eigen::Index>(xcols.size());
  d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  d.t = Eigen::Map<Eigen::VectorXd>(ts.data(), n);
  d.x = dim > 0 ? CovariateMatrix(Eigen::Map<CovariateMatrix>(xs.data(), n, dim)) : CovariateMatrix(n, 0);
  d.validate();
  return d;
}

CollapsedHistogram ingest_histogram(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::vector<double> c, s;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    double a = 0.0, b = 0.0;
    const bool ok = cells.size() == 2 && parse_double(cells[0], a) && parse_double(cells[1], b);
    if (!ok) {
      if (row == 1) continue;  // header
      std::ostringstream os;
      os << path << ": row " << row << ": expected two numeric columns (bin_center, share)";
      throw DataError(os.str());
    }
    if (!(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      std::ostringstream os;
      os << path << ": row " << row << ": invalid bin";
      throw DataError(os.str());
    }
    c.push_back(a);
    s.push_back(b);
  }
  if (c.size() < 2) throw DataError(path + ": need at least two bins");
  const double mesh = c[1] - c[0];
  if (!(mesh > 0.0)) throw DataError(path + ": bin centers must be increasing");
  for (std::size_t b = 1; b < c.size(); ++b) {
    if (std::abs(c[b] - c[b - 1] - mesh) > 1e-9 * mesh) {
      std::ostringstream os;
      os << path << ": bins are not equispaced near center " << c[b];
      throw DataError(os.str());
    }
  }
  CollapsedHistogram h;
  h.centers = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  h.shares = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  const double total = h.shares.sum();
  if (!(total > 0.0)) throw DataError(path + ": shares sum to zero");
  if (std::abs(total - 1.0) > 1e-6) {
    std::ostringstream os;
    os << path << ": shares sum to " << total << "; renormalizing";
    warn(os.str());
  }
  h.shares /= total;
  return h;
}

Eigen::VectorXd draw_from_histogram(const CollapsedHistogram& h, Eigen::Index n, std::uint64_t seed) {
  const Eigen::Index B = h.centers.size();
  if (B < 2) throw DataError("histogram needs at least two bins");
  const double mesh = h.centers(1) - h.centers(0);
  std::vector<double> cum(static_cast<std::size_t>(B));
  double acc = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) cum[static_cast<std::size_t>(b)] = (acc += h.shares(b));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = u01() * acc;
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto b = std::min<Eigen::Index>(it - cum.begin(), B - 1);
    y(i) = h.centers(b) + (u01() - 0.5) * mesh;
  }
  return y;
}

void write_microdata(const std::string& path, const Dataset& data) {
  std::ostringstream os;
  os.precision(17);
  os << 'y';
  for (Eigen::Index d = 0; d < data.covariate_dim(); ++d) os << ",x" << d + 1;
  os << ",t\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    os << data.y(i);
    for (Eigen::Index d = 0; d < data.covariate_dim(); ++d) os << ',' << data.x(i, d);
    os << ',' << data.t(i) << '\n';
  }
  write_text(path, os.str());
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace bunching
