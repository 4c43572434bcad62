#pragma once

#include <vector>

#include "hfr/types.hpp"

namespace hfr {

struct TrajectoryRecord {
  long step = 0;
  PointXY point;
  double grad_norm_x = 0.0;
  double grad_norm_y = 0.0;
  double wall_time = 0.0;  // seconds since the run started

  double max_grad_norm() const { return grad_norm_x > grad_norm_y ? grad_norm_x : grad_norm_y; }
};

/// Ordered iterate records. Steps strictly increase from 0, wall time never decreases.
class Trajectory {
 public:
  void append(TrajectoryRecord record);

  const std::vector<TrajectoryRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const TrajectoryRecord& back() const { return records_.back(); }

 private:
  std::vector<TrajectoryRecord> records_;
};

}  // namespace hfr
