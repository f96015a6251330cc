#include "fairclust/tensor.hpp"

#include <charconv>

namespace fairclust {

bool all_finite(const Tensor& t) { return t.allFinite(); }

Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("pairwise_sq_dist: column mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
  Tensor out(a.rows(), b.rows());
  const Eigen::Index d = a.cols();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < b.rows(); ++k) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double diff = a(i, c) - b(k, c);
        s += diff * diff;
      }
      out(i, k) = s;
    }
  }
  return out;
}

Tensor take_rows(const Tensor& src, std::span<const std::size_t> rows) {
  Tensor out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= static_cast<std::size_t>(src.rows())) {
      throw std::out_of_range("take_rows: row " + std::to_string(rows[r]) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

std::vector<int> row_argmax(const Tensor& t) {
  std::vector<int> out(static_cast<std::size_t>(t.rows()), 0);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < t.cols(); ++k) {
      if (t(i, k) > t(i, best)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace fairclust
