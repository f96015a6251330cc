#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fairclust {

// Dense row-major real matrix. Rows are samples, columns are features.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an optimisation step sees a non-finite loss or gradient.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool all_finite(const Tensor& t);

// Squared euclidean distance between every row of `a` and every row of `b`.
// Differences are formed explicitly so the result is translation invariant
// up to the rounding of the inputs themselves.
Tensor pairwise_sq_dist(const Tensor& a, const Tensor& b);

Tensor take_rows(const Tensor& src, std::span<const std::size_t> rows);

// Column index of the largest entry in each row; ties resolve to the lowest column.
std::vector<int> row_argmax(const Tensor& t);

std::string shape_str(const Tensor& t);

// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

}  // namespace fairclust
