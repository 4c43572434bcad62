#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hfr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Failure categories. The CLI maps them onto exit codes.
enum class ErrorKind {
  kConfig,     ///< bad input, unknown tag, violated precondition
  kNumerical,  ///< divergence, breakdown, non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ConfigError(const std::string& what) { return Error(ErrorKind::kConfig, what); }
inline Error NumericalError(const std::string& what) { return Error(ErrorKind::kNumerical, what); }

/// Joint iterate of the leader (x, minimizing) and the follower (y, maximizing).
struct PointXY {
  Vec x;
  Vec y;

  PointXY() = default;
  PointXY(Vec x_in, Vec y_in) : x(std::move(x_in)), y(std::move(y_in)) {}

  Index dim_x() const { return x.size(); }
  Index dim_y() const { return y.size(); }

  /// Stacked z = (x, y).
  Vec stacked() const {
    Vec z(x.size() + y.size());
    z << x, y;
    return z;
  }

  static PointXY FromStacked(const Vec& z, Index d1) {
    return PointXY(z.head(d1), z.tail(z.size() - d1));
  }

  bool finite() const { return x.allFinite() && y.allFinite(); }

  /// Throws unless d1, d2 >= 1 and every entry is finite.
  void validate() const {
    if (x.size() < 1 || y.size() < 1) throw ConfigError("point dimensions must be >= 1");
    if (!finite()) throw NumericalError("point has non-finite entries");
  }
};

/// Dense second-order blocks of f at one point.
struct HessianBlocks {
  Mat hxx;  // d1 x d1
  Mat hxy;  // d1 x d2
  Mat hyx;  // d2 x d1
  Mat hyy;  // d2 x d2

  Index dim_x() const { return hxx.rows(); }
  Index dim_y() const { return hyy.rows(); }

  /// Full (d1+d2) square Hessian [[hxx, hxy], [hyx, hyy]].
  Mat full() const {
    const Index d1 = dim_x(), d2 = dim_y();
    Mat h(d1 + d2, d1 + d2);
    h.topLeftCorner(d1, d1) = hxx;
    h.topRightCorner(d1, d2) = hxy;
    h.bottomLeftCorner(d2, d1) = hyx;
    h.bottomRightCorner(d2, d2) = hyy;
    return h;
  }

  /// Symmetry of hxx/hyy and hyx == hxy^T, within `tol` absolute.
  bool consistent(double tol = 1e-10) const {
    if (hxx.rows() != hxx.cols() || hyy.rows() != hyy.cols()) return false;
    if (hxy.rows() != hxx.rows() || hxy.cols() != hyy.rows()) return false;
    if (hyx.rows() != hyy.rows() || hyx.cols() != hxx.rows()) return false;
    return (hxx - hxx.transpose()).cwiseAbs().maxCoeff() <= tol &&
           (hyy - hyy.transpose()).cwiseAbs().maxCoeff() <= tol &&
           (hyx - hxy.transpose()).cwiseAbs().maxCoeff() <= tol;
  }
};

}  // namespace hfr
