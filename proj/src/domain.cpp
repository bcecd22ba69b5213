#include "sgcp/domain.hpp"

#include <cerrno>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sgcp {

namespace {

std::string trim(const std::string &s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return {};
  }
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string &token, double &out) {
  const std::string t = trim(token);
  if (t.empty()) {
    return false;
  }
  char *end = nullptr;
  errno = 0;
  out = std::strtod(t.c_str(), &end);
  return errno == 0 && end == t.c_str() + t.size() && std::isfinite(out);
}

std::vector<std::string> split_commas(const std::string &line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

} // namespace

Domain::Domain(std::vector<std::pair<double, double>> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) {
    throw Error("domain must have at least one dimension");
  }
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto [lo, hi] = bounds_[i];
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw Error("domain bound " + std::to_string(i) + " must satisfy lower < upper");
    }
  }
}

double Domain::volume() const {
  double v = 1.0;
  for (const auto &[lo, hi] : bounds_) {
    v *= hi - lo;
  }
  return v;
}

bool Domain::contains(const Eigen::Ref<const Eigen::VectorXd> &x) const {
  if (x.size() != dim()) {
    return false;
  }
  for (int i = 0; i < dim(); ++i) {
    if (!(x[i] >= lower(i) && x[i] <= upper(i))) {
      return false;
    }
  }
  return true;
}

double domain_volume(const Domain &domain) { return domain.volume(); }

PointPattern::PointPattern(PointMatrix points, const Domain &domain) : points_(std::move(points)) {
  if (points_.cols() != domain.dim()) {
    throw Error("point dimension " + std::to_string(points_.cols()) +
                " does not match domain dimension " + std::to_string(domain.dim()));
  }
  for (Eigen::Index n = 0; n < points_.rows(); ++n) {
    for (int i = 0; i < domain.dim(); ++i) {
      const double v = points_(n, i);
      if (!(v >= domain.lower(i) && v <= domain.upper(i))) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "point outside domain: point " << n << " coordinate " << i << " = " << v
            << " violates bound [" << domain.lower(i) << ", " << domain.upper(i) << "]";
        throw Error(msg.str());
      }
    }
  }
}

PointPattern load_point_pattern(const std::filesystem::path &path, const Domain &domain) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open event file: " + path.string());
  }
  const int d = domain.dim();
  std::vector<double> values;
  std::string line;
  int row = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split_commas(line);
    std::vector<double> parsed(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      numeric = numeric && parse_double(fields[i], parsed[i]);
    }
    if (first_content && !numeric) {
      // header row
      first_content = false;
      continue;
    }
    first_content = false;
    if (!numeric) {
      throw Error("parse error in " + path.string() + " at row " + std::to_string(row) +
                  ": non-numeric field");
    }
    if (static_cast<int>(parsed.size()) != d) {
      throw Error("parse error in " + path.string() + " at row " + std::to_string(row) +
                  ": expected " + std::to_string(d) + " columns, found " +
                  std::to_string(parsed.size()));
    }
    values.insert(values.end(), parsed.begin(), parsed.end());
  }
  const auto n = static_cast<Eigen::Index>(values.size()) / d;
  PointMatrix points = Eigen::Map<PointMatrix>(values.data(), n, d);
  return PointPattern(std::move(points), domain);
}

void save_point_pattern(const std::filesystem::path &path, const PointPattern &pattern) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write event file: " + path.string());
  }
  out.precision(17);
  for (int n = 0; n < pattern.size(); ++n) {
    for (int i = 0; i < pattern.dim(); ++i) {
      if (i > 0) {
        out << ',';
      }
      out << pattern.points()(n, i);
    }
    out << '\n';
  }
}

} // namespace sgcp
