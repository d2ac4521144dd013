#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace ksred {

/// One classical fourth-order Runge-Kutta step for an autonomous system.
/// `State` must support `State + State` and `double * State` (Eigen types do).
template <class State, class Rhs>
State rk4_step(const State& y, double ds, Rhs&& rhs) {
  const State k1 = rhs(y);
  const State k2 = rhs(State(y + (0.5 * ds) * k1));
  const State k3 = rhs(State(y + (0.5 * ds) * k2));
  const State k4 = rhs(State(y + ds * k3));
  return State(y + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// Fixed-step grid covering [0, s_end]: `count` steps of `ds`, the last one
/// shortened so the grid ends exactly at s_end.
struct StepGrid {
  std::size_t count;
  double ds;
  double s_end;

  StepGrid(double s_end_, double ds_) : count(0), ds(ds_), s_end(s_end_) {
    count = static_cast<std::size_t>(std::ceil(s_end / ds - 1e-9));
    count = std::max<std::size_t>(count, 1);
  }

  double step(std::size_t k) const {
    return k + 1 < count ? ds : s_end - ds * static_cast<double>(count - 1);
  }
  double s_after(std::size_t k) const {
    return k + 1 < count ? ds * static_cast<double>(k + 1) : s_end;
  }
};

}  // namespace ksred
